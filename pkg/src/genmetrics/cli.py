"""Command-line orchestration: prep, metrics, compare, report.

Settings come from an optional JSON config file plus flags; flags win. Exit
codes: 0 success, 1 data error, 2 usage error. Input image directories are
always walked in lexicographic filename order so manifests and sampled
subsets are stable.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import click

from . import __version__
from .analysis import (
    DEFAULT_FRACTIONS,
    rank_models,
    real_to_real_curve,
    relative_fd_curve,
)
from .errors import GenMetricsError, MissingReferenceDeclarationError
from .featurestore import (
    BackboneSpec,
    builtin_registry,
    lookup_backbone,
    read_features,
    summarize,
)
from .metrics import ManifoldParams, worker_count
from .pixelpipe import FilterKind, decode_image, encode_png, normalize, quantize, resize
from .reporting import (
    build_report,
    report_from_json,
    report_to_csv,
    report_to_json,
    report_to_text,
)

# Route-1 (training-side) resizers: only the high-quality pair is allowed.
PREP_FILTERS = (FilterKind.BICUBIC, FilterKind.LANCZOS)
IMAGE_SUFFIXES = {".png": "PNG", ".jpg": "JPEG", ".jpeg": "JPEG"}


@dataclass
class RunConfig:
    """Merged settings for one command invocation."""

    backbone: str = "InceptionV3"
    prep_filter: str = "lanczos"
    resolution: Optional[int] = None
    k_pr: int = 3
    k_dc: int = 5
    splits: int = 1
    fractions: tuple[float, ...] = DEFAULT_FRACTIONS
    seed: int = 0
    ref_split: Optional[str] = None          # "name:count"
    override_friendly_resizer: Optional[str] = None
    allow_count_mismatch: bool = False
    model_name: Optional[str] = None
    custom_backbones: list[dict] = field(default_factory=list)

    def reference_declaration(self) -> tuple[str, int]:
        if not self.ref_split:
            raise MissingReferenceDeclarationError(
                "declare the reference split with --ref-split NAME:COUNT"
            )
        name, sep, count = self.ref_split.rpartition(":")
        if not sep or not name or not count.isdigit():
            raise click.UsageError(
                f"--ref-split must look like NAME:COUNT, got {self.ref_split!r}"
            )
        return name, int(count)

    def manifold_params(self) -> ManifoldParams:
        return ManifoldParams(k_pr=self.k_pr, k_dc=self.k_dc)

    def backbone_spec(self) -> BackboneSpec:
        extra = [_spec_from_dict(d) for d in self.custom_backbones]
        return lookup_backbone(self.backbone, extra=extra)

    def prep_filter_kind(self) -> FilterKind:
        kind = _parse_filter(self.prep_filter)
        if kind not in PREP_FILTERS:
            raise click.UsageError(
                f"prep filter must be one of "
                f"{', '.join(f.value for f in PREP_FILTERS)}; got {kind.value}"
            )
        return kind

    def friendly_filter(self, spec: BackboneSpec) -> FilterKind:
        if self.override_friendly_resizer:
            return _parse_filter(self.override_friendly_resizer)
        return spec.friendly_filter


def _parse_filter(name: str) -> FilterKind:
    try:
        return FilterKind(name.lower())
    except ValueError:
        raise click.UsageError(
            f"unknown filter {name!r}; choose from "
            f"{', '.join(f.value for f in FilterKind)}"
        ) from None


def _spec_from_dict(d: dict) -> BackboneSpec:
    return BackboneSpec(
        name=d["name"],
        input_resolution=int(d["input_resolution"]),
        friendly_filter=_parse_filter(d["friendly_filter"]),
        feature_dim=int(d["feature_dim"]),
        class_count=(int(d["class_count"]) if d.get("class_count") else None),
        channel_scale=tuple(float(x) for x in d["channel_scale"]),
        channel_offset=tuple(float(x) for x in d["channel_offset"]),
        score_name=d["score_name"],
        fd_name=d["fd_name"],
        prdc_prefix=d.get("prdc_prefix", ""),
    )


def _load_config(ctx: click.Context, config_path: Optional[str]) -> RunConfig:
    """Build a RunConfig from the config file, then let explicit flags win."""
    cfg = RunConfig()
    if config_path:
        try:
            raw = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise click.UsageError(f"cannot read config {config_path}: {exc}")
        for key, value in raw.items():
            if not hasattr(cfg, key):
                raise click.UsageError(f"unknown config key {key!r}")
            if key == "fractions":
                value = tuple(float(x) for x in value)
            setattr(cfg, key, value)
    for key in vars(cfg):
        if key in ctx.params and ctx.params[key] is not None:
            source = ctx.get_parameter_source(key)
            if source is not None and source.name != "DEFAULT":
                value = ctx.params[key]
                if key == "fractions" and isinstance(value, str):
                    value = tuple(float(x) for x in value.split(","))
                setattr(cfg, key, value)
    return cfg


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


class _ToolkitGroup(click.Group):
    """Maps toolkit data errors to exit code 1 (usage errors stay 2)."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except GenMetricsError as exc:
            raise click.ClickException(str(exc)) from exc


@click.group(cls=_ToolkitGroup)
@click.version_option(version=__version__, prog_name="genmetrics")
def main():
    """Generative-model evaluation toolkit."""


@main.command("prep")
@click.argument("input_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False),
              help="Output directory for prepared PNGs and the manifest.")
@click.option("--resolution", type=int, default=None, help="Target square resolution.")
@click.option("--filter", "prep_filter", default=None,
              help="High-quality resizer for training images (bicubic or lanczos).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON config file; flags override its values.")
@click.pass_context
def cmd_prep(ctx, input_dir, out, resolution, prep_filter, config_path):
    """Decode, resize, normalize, quantize, and re-save a directory of images.

    Every image is decoded, resampled to the target resolution with the
    configured anti-aliasing filter, normalized to [-1, 1], quantized back to
    8 bits, and written as lossless PNG. A manifest records the mapping,
    resizer, resolution, and a content hash per file. Per-file failures are
    collected; any failure makes the exit code 1.
    """
    cfg = _load_config(ctx, config_path)
    if cfg.resolution is None:
        raise click.UsageError("--resolution is required (or set it in the config)")
    kind = cfg.prep_filter_kind()
    in_dir, out_dir = Path(input_dir), Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = sorted(
        p for p in in_dir.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )
    if not files:
        raise click.UsageError(f"no PNG/JPEG files in {in_dir}")
    def prepare_one(path: Path):
        buf = decode_image(path.read_bytes(), IMAGE_SUFFIXES[path.suffix.lower()])
        buf = resize(buf, cfg.resolution, cfg.resolution, kind, antialias=True)
        buf = quantize(normalize(buf))
        png = encode_png(buf)
        out_name = path.stem + ".png"
        (out_dir / out_name).write_bytes(png)
        return {
            "input": path.name,
            "output": out_name,
            "width": buf.width,
            "height": buf.height,
            "sha256": hashlib.sha256(png).hexdigest(),
        }

    entries, failures = [], []
    # File-level parallelism; manifest order stays lexicographic because
    # results are collected in submission order.
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        futures = [(path, pool.submit(prepare_one, path)) for path in files]
        for path, future in futures:
            try:
                entries.append(future.result())
            except (GenMetricsError, OSError) as exc:
                failures.append({"input": path.name, "error": str(exc)})
    manifest = {
        "command": "prep",
        "resolution": cfg.resolution,
        "resizer": kind.value,
        "toolkit_version": __version__,
        "entries": entries,
        "errors": failures,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n"
    )
    click.echo(f"prepared {len(entries)}/{len(files)} images -> {out_dir}")
    if failures:
        for f in failures:
            click.echo(f"  FAILED {f['input']}: {f['error']}", err=True)
        ctx.exit(1)


@main.command("metrics")
@click.argument("real_features", type=click.Path(exists=True, dir_okay=False))
@click.argument("fake_features", type=click.Path(exists=True, dir_okay=False))
@click.option("--backbone", default=None, help="Backbone name from the registry.")
@click.option("--ref-split", "ref_split", default=None,
              help="Reference split declaration, NAME:COUNT (mandatory).")
@click.option("--k-pr", type=int, default=None, help="Neighbor count for precision/recall.")
@click.option("--k-dc", type=int, default=None, help="Neighbor count for density/coverage.")
@click.option("--splits", type=int, default=None, help="Chunks for the classifier score.")
@click.option("--model-name", default=None, help="Model name recorded in the report.")
@click.option("--override-friendly-resizer", default=None,
              help="Declare a nonstandard backbone-input resizer (echoed in the report).")
@click.option("--allow-count-mismatch", is_flag=True, default=False,
              help="Silence the warning when generated count differs from reference count.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the report JSON here.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON config file; flags override its values.")
@click.pass_context
def cmd_metrics(ctx, real_features, fake_features, backbone, ref_split, k_pr, k_dc,
                splits, model_name, override_friendly_resizer, allow_count_mismatch,
                out, config_path):
    """Compute the metric suite over two feature files and emit a report.

    Reads two GMF1 files (reference first, generated second), computes the
    Frechet distance, classifier score (when posteriors are present),
    precision/recall/density/coverage, intra-class FD (when both sides carry
    labels), and Top-1/Top-5 accuracy (when the generated file carries labels
    and posteriors). Metric names follow the backbone's display strings.
    """
    cfg = _load_config(ctx, config_path)
    ref_name, ref_count = cfg.reference_declaration()
    spec = cfg.backbone_spec()
    real, _real_post = read_features(real_features)
    fake, fake_post = read_features(fake_features)
    if ref_count != real.count:
        click.echo(
            f"warning: reference declaration says {ref_count} samples but the "
            f"reference file holds {real.count}", err=True,
        )
    if real.count != fake.count and not cfg.allow_count_mismatch:
        click.echo(
            f"warning: generated count {fake.count} != reference count "
            f"{real.count}; the protocol expects equal counts "
            "(--allow-count-mismatch silences this)", err=True,
        )
    if cfg.override_friendly_resizer:
        _parse_filter(cfg.override_friendly_resizer)  # validate spelling
    report, doc = build_report(
        spec,
        real,
        fake,
        fake_post,
        model_name=cfg.model_name or Path(fake_features).stem,
        params=cfg.manifold_params(),
        splits=cfg.splits,
        reference_split=f"{ref_name}:{ref_count}",
        prep_filter=cfg.prep_filter,
        friendly_override=cfg.override_friendly_resizer,
    )
    text = report_to_text(doc)
    click.echo(text, nl=False)
    if out:
        _write_text(Path(out), report_to_json(doc))
        click.echo(f"report written to {out}")


@main.command("compare")
@click.argument("source_features", type=click.Path(exists=True, dir_okay=False))
@click.argument("target_features", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--backbone", default=None, help="Backbone name from the registry.")
@click.option("--fractions", default=None,
              help="Comma-separated sampling fractions ending in 1.0.")
@click.option("--seed", type=int, default=None, help="Subsampling seed.")
@click.option("--k-pr", type=int, default=None)
@click.option("--k-dc", type=int, default=None)
@click.option("--splits", type=int, default=None)
@click.option("--ref-split", "ref_split", default=None,
              help="Reference split declaration, NAME:COUNT (mandatory).")
@click.option("--out", required=True, type=click.Path(file_okay=False),
              help="Output directory for curves and the ranking table.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.pass_context
def cmd_compare(ctx, source_features, target_features, backbone, fractions, seed,
                k_pr, k_dc, splits, ref_split, out, config_path):
    """Sample-efficiency curves plus a ranking table across target files.

    Emits a real-to-real curve for the source, a relative-FD curve per
    target, and a ranking over all targets (metric suite per target against
    the source). A target whose full-set FD is zero gets no relative curve
    (the ratio is undefined); the ranking still includes it.
    """
    cfg = _load_config(ctx, config_path)
    ref_name, ref_count = cfg.reference_declaration()
    spec = cfg.backbone_spec()
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    source, _ = read_features(source_features)
    source_summary = summarize(source)

    rtr = real_to_real_curve(source, cfg.fractions, cfg.seed, backbone=spec.name)
    _write_text(out_dir / "real_to_real.csv", rtr.to_csv())
    _write_text(out_dir / "real_to_real.json", rtr.to_json() + "\n")

    reports = []
    all_have_posteriors = True
    loaded = []
    for path in target_features:
        tgt, tgt_post = read_features(path)
        loaded.append((Path(path).stem, tgt, tgt_post))
        all_have_posteriors &= tgt_post is not None
    for name, tgt, tgt_post in loaded:
        curve = relative_fd_curve(
            source_summary, tgt, cfg.fractions, cfg.seed, backbone=spec.name
        )
        if all(math.isfinite(v) for v in curve.values):
            _write_text(out_dir / f"relative_fd__{name}.csv", curve.to_csv())
            _write_text(out_dir / f"relative_fd__{name}.json", curve.to_json() + "\n")
        else:
            click.echo(
                f"note: {name}: full-set FD is 0, the relative-FD ratio is "
                "undefined; curve skipped", err=True,
            )
        report, doc = build_report(
            spec,
            real=source,
            fake=tgt,
            fake_post=tgt_post if all_have_posteriors else None,
            model_name=name,
            params=cfg.manifold_params(),
            splits=cfg.splits,
            reference_split=f"{ref_name}:{ref_count}",
            prep_filter=cfg.prep_filter,
            friendly_override=cfg.override_friendly_resizer,
        )
        _write_text(out_dir / f"report__{name}.json", report_to_json(doc))
        reports.append(report)
    table = rank_models(reports)
    _write_text(out_dir / "ranking.csv", table.to_csv())
    _write_text(out_dir / "ranking.txt", table.to_text())
    click.echo(table.to_text(), nl=False)
    click.echo(f"curves and ranking written to {out_dir}")


@main.command("report")
@click.argument("stored_reports", nargs=-1,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["text", "csv"]), default="text",
              help="Rendering for stored reports.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the rendering here instead of stdout.")
@click.option("--export-registry", is_flag=True, default=False,
              help="Emit the backbone registry manifest JSON instead.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.pass_context
def cmd_report(ctx, stored_reports, fmt, out, export_registry, config_path):
    """Re-render stored report JSON to CSV/text, or export the registry.

    With several stored reports, renders the ranking table across them; with
    one, renders that report. --export-registry writes the backbone registry
    manifest consumed by external feature extractors.
    """
    cfg = _load_config(ctx, config_path)
    if export_registry:
        extra = [_spec_from_dict(d) for d in cfg.custom_backbones]
        manifest = {
            "schema": "genmetrics-registry-v1",
            "toolkit_version": __version__,
            "backbones": [
                {
                    "name": s.name,
                    "input_resolution": s.input_resolution,
                    "friendly_filter": s.friendly_filter.value,
                    "feature_dim": s.feature_dim,
                    "class_count": s.class_count,
                    "channel_scale": list(s.channel_scale),
                    "channel_offset": list(s.channel_offset),
                    "score_name": s.score_name,
                    "fd_name": s.fd_name,
                    "prdc_prefix": s.prdc_prefix,
                }
                for s in extra + builtin_registry()
            ],
        }
        text = json.dumps(manifest, sort_keys=True, indent=1) + "\n"
        if out:
            _write_text(Path(out), text)
            click.echo(f"registry manifest written to {out}")
        else:
            click.echo(text, nl=False)
        return
    if not stored_reports:
        raise click.UsageError("pass stored report JSON files or --export-registry")
    parsed = [report_from_json(Path(p).read_text()) for p in stored_reports]
    if len(parsed) == 1:
        doc = parsed[0][1]
        text = report_to_csv(doc) if fmt == "csv" else report_to_text(doc)
    else:
        table = rank_models([rep for rep, _ in parsed])
        text = table.to_csv() if fmt == "csv" else table.to_text()
    if out:
        _write_text(Path(out), text)
        click.echo(f"rendering written to {out}")
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
