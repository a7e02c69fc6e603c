"""Sample-efficiency curves and benchmark-table ranking.

Subsampling is reproducible across platforms: indices for curve point p are
the first floor(f * M) entries of a permutation drawn from a Philox
counter-based generator seeded with SeedSequence(entropy=seed,
spawn_key=(p,)). The fraction 1.0 always uses the full set in original
order, independent of the seed.
"""

from __future__ import annotations

import csv
import enum
import math
import io
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import FractionTooSmallError, HeterogeneousReportsError
from .featurestore import FeatureSet, GaussianSummary, summarize
from .metrics import frechet_distance

SUBSAMPLER_ID = "philox-seedseq-v1"
TIE_RULE = "min-rank"


class CurveMode(enum.Enum):
    RELATIVE_TO_GENERATED = "relative_to_generated"
    REAL_TO_REAL = "real_to_real"


class Direction(enum.Enum):
    HIGHER_BETTER = "higher_better"
    LOWER_BETTER = "lower_better"


def subsample_indices(
    total: int, fraction: float, seed: int, point_index: int,
    with_replacement: bool = False,
) -> np.ndarray:
    """Row indices for one curve point; deterministic and portable."""
    count = int(np.floor(fraction * total))
    if count < 2:
        raise FractionTooSmallError(
            f"fraction {fraction} of {total} rows yields {count} < 2 samples"
        )
    if fraction >= 1.0 and not with_replacement:
        return np.arange(total)
    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(point_index,)))
    )
    if with_replacement:
        return rng.integers(0, total, size=count)
    return rng.permutation(total)[:count]


@dataclass(frozen=True)
class EfficiencyCurve:
    """FD (or FD-ratio) values over an increasing grid of sample fractions."""

    fractions: tuple[float, ...]
    values: tuple[float, ...]
    backbone: str
    mode: CurveMode
    reference_fd: Optional[float]
    seed: int

    def __post_init__(self):
        fr = self.fractions
        if len(fr) != len(self.values):
            raise ValueError("fractions and values must have equal length")
        if any(b <= a for a, b in zip(fr, fr[1:])):
            raise ValueError("fractions must be strictly increasing")
        if not fr or fr[-1] != 1.0:
            raise ValueError("fraction grid must end at 1.0")
        if any(f <= 0.0 for f in fr):
            raise ValueError("fractions must lie in (0, 1]")
        terminal = self.values[-1]
        if self.mode is CurveMode.RELATIVE_TO_GENERATED and abs(terminal - 1.0) > 1e-9:
            raise ValueError(f"relative curve must end at 1.0, got {terminal}")
        if self.mode is CurveMode.REAL_TO_REAL and abs(terminal) > 1e-6:
            raise ValueError(f"real-to-real curve must end at 0, got {terminal}")

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["fraction", "value"])
        for f, v in zip(self.fractions, self.values):
            writer.writerow([repr(f), repr(v)])
        return out.getvalue()

    def to_json(self) -> str:
        payload = {
            "backbone": self.backbone,
            "mode": self.mode.value,
            "seed": self.seed,
            "subsampler": SUBSAMPLER_ID,
            "reference_fd": self.reference_fd,
            "fractions": list(self.fractions),
            "values": list(self.values),
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


DEFAULT_FRACTIONS = (0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0)


def relative_fd_curve(
    source_summary: GaussianSummary,
    target: FeatureSet,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    seed: int = 0,
    backbone: str = "",
    with_replacement: bool = False,
) -> EfficiencyCurve:
    """FD between the source and target fractions, divided by the full-set FD.

    The terminal point uses the full target set, so its value is exactly 1.
    """
    reference_fd = frechet_distance(source_summary, summarize(target))
    values = []
    for p, f in enumerate(fractions):
        idx = subsample_indices(target.count, f, seed, p, with_replacement)
        sub = FeatureSet(values=target.values[idx])
        sub_fd = frechet_distance(source_summary, summarize(sub))
        # Equal FDs ratio to exactly 1.0 even when the reference is 0; a zero
        # reference otherwise makes the ratio undefined (reported as inf).
        if sub_fd == reference_fd:
            values.append(1.0)
        elif reference_fd == 0.0:
            values.append(math.inf)
        else:
            values.append(sub_fd / reference_fd)
    return EfficiencyCurve(
        fractions=tuple(float(f) for f in fractions),
        values=tuple(values),
        backbone=backbone,
        mode=CurveMode.RELATIVE_TO_GENERATED,
        reference_fd=reference_fd,
        seed=seed,
    )


def real_to_real_curve(
    source: FeatureSet,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    seed: int = 0,
    backbone: str = "",
    with_replacement: bool = False,
) -> EfficiencyCurve:
    """FD between a set and seeded subsamples of itself.

    The terminal point compares the full set with itself and must come out
    0 within the metric tolerance.
    """
    full = summarize(source)
    values = []
    for p, f in enumerate(fractions):
        idx = subsample_indices(source.count, f, seed, p, with_replacement)
        sub = FeatureSet(values=source.values[idx])
        values.append(frechet_distance(full, summarize(sub)))
    return EfficiencyCurve(
        fractions=tuple(float(f) for f in fractions),
        values=tuple(values),
        backbone=backbone,
        mode=CurveMode.REAL_TO_REAL,
        reference_fd=None,
        seed=seed,
    )


@dataclass(frozen=True)
class MetricReport:
    """Named metric values plus the protocol block for one evaluated model.

    `entries` maps display names to (value, direction). The protocol block is
    mandatory: reports must say which reference split was used, how many
    reference and generated samples went in, and which resizers were applied.
    """

    model_name: str
    backbone: str
    entries: dict[str, tuple[float, Direction]]
    protocol: dict = field(default_factory=dict)

    _REQUIRED_PROTOCOL = (
        "reference_split", "reference_count", "generated_count",
        "resizers_used", "toolkit_version",
    )

    def __post_init__(self):
        missing = [k for k in self._REQUIRED_PROTOCOL if k not in self.protocol]
        if missing:
            raise ValueError(f"protocol block missing {missing}")
        for name, (value, direction) in self.entries.items():
            if not isinstance(direction, Direction):
                raise ValueError(f"entry {name!r} has invalid direction {direction!r}")

    def value(self, name: str) -> float:
        return self.entries[name][0]


@dataclass(frozen=True)
class RankingTable:
    """Per-metric ranks (min-rank ties), Top-1/Top-2 marks, and average rank.

    Rows are ordered by average rank, ties broken by model name.
    """

    metric_names: tuple[str, ...]
    model_names: tuple[str, ...]          # ordered as displayed
    values: dict[str, dict[str, float]]   # model -> metric -> value
    ranks: dict[str, dict[str, int]]      # model -> metric -> rank
    average_rank: dict[str, float]
    tie_rule: str = TIE_RULE

    def top_marks(self, metric: str) -> dict[str, int]:
        """Model -> 1 or 2 for Top-1/Top-2 holders of one metric column."""
        return {
            m: self.ranks[m][metric]
            for m in self.model_names
            if self.ranks[m][metric] in (1, 2)
        }

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        header = ["model"]
        for name in self.metric_names:
            header += [name, f"{name} rank"]
        header.append("avg rank")
        writer.writerow(header)
        for model in self.model_names:
            row = [model]
            for name in self.metric_names:
                row += [repr(self.values[model][name]), self.ranks[model][name]]
            row.append(repr(self.average_rank[model]))
            writer.writerow(row)
        return out.getvalue()

    def to_text(self) -> str:
        """Plain-text table; rank 1 marked [1], rank 2 marked [2]."""
        headers = ["model"] + list(self.metric_names) + ["avg rank"]
        rows = []
        for model in self.model_names:
            cells = [model]
            for name in self.metric_names:
                rank = self.ranks[model][name]
                mark = f" [{rank}]" if rank in (1, 2) else ""
                cells.append(f"{self.values[model][name]:.4g}{mark}")
            cells.append(f"{self.average_rank[model]:.2f}")
            rows.append(cells)
        widths = [max(len(r[i]) for r in [headers] + rows) for i in range(len(headers))]
        lines = [
            "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
            "  ".join("-" * w for w in widths),
        ]
        lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
        return "\n".join(lines) + "\n"


def rank_models(reports: Sequence[MetricReport]) -> RankingTable:
    """Rank models per metric (direction-aware) and by average rank.

    Ties share the better (minimum) rank: values (3, 3, 5) on a lower-better
    column rank 1, 1, 3. Output row order is average rank ascending, ties by
    model name.
    """
    if not reports:
        raise HeterogeneousReportsError("no reports to rank")
    backbone = reports[0].backbone
    names = list(reports[0].entries)  # display order of the first report
    for rep in reports[1:]:
        if rep.backbone != backbone:
            raise HeterogeneousReportsError(
                f"mixed backbones: {backbone!r} vs {rep.backbone!r}"
            )
        if sorted(rep.entries) != sorted(names):
            raise HeterogeneousReportsError(
                f"metric names differ: {sorted(names)} vs {sorted(rep.entries)}"
            )
    models = [r.model_name for r in reports]
    if len(set(models)) != len(models):
        raise HeterogeneousReportsError("duplicate model names")
    values = {r.model_name: {n: r.entries[n][0] for n in names} for r in reports}
    ranks: dict[str, dict[str, int]] = {m: {} for m in models}
    for name in names:
        direction = reports[0].entries[name][1]
        for rep in reports[1:]:
            if rep.entries[name][1] is not direction:
                raise HeterogeneousReportsError(f"metric {name!r} direction disagrees")
        keyed = {
            m: (values[m][name] if direction is Direction.LOWER_BETTER else -values[m][name])
            for m in models
        }
        for m in models:
            ranks[m][name] = 1 + sum(keyed[other] < keyed[m] for other in models)
    average = {m: float(np.mean([ranks[m][n] for n in names])) for m in models}
    ordered = tuple(sorted(models, key=lambda m: (average[m], m)))
    return RankingTable(
        metric_names=tuple(names),
        model_names=ordered,
        values=values,
        ranks=ranks,
        average_rank=average,
    )
