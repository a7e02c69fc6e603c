"""Report assembly, the published report JSON schema, and serialization.

Reports are deterministic: keys sorted, fixed separators, no timestamps, so
identical inputs produce byte-identical JSON.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Optional

from . import __version__
from .analysis import Direction, MetricReport
from .errors import DimensionMismatchError, MissingReferenceDeclarationError
from .featurestore import BackboneSpec, FeatureSet, PosteriorSet, summarize
from .metrics import (
    ManifoldParams,
    classifier_score,
    frechet_distance,
    intra_class_fd,
    prdc,
    top_k_accuracy,
)

SCHEMA_ID = "genmetrics-report-v1"

# Published schema for report JSON (JSON Schema draft 2020-12 subset).
REPORT_SCHEMA = {
    "$id": SCHEMA_ID,
    "type": "object",
    "required": ["schema", "model_name", "backbone", "entries", "omitted",
                 "extras", "protocol"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": SCHEMA_ID},
        "model_name": {"type": "string"},
        "backbone": {"type": "string"},
        "entries": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["value", "direction"],
                "additionalProperties": False,
                "properties": {
                    "value": {"type": "number"},
                    "direction": {"enum": ["higher_better", "lower_better"]},
                },
            },
        },
        "omitted": {"type": "object", "additionalProperties": {"type": "string"}},
        "extras": {"type": "object", "additionalProperties": {"type": "number"}},
        "protocol": {
            "type": "object",
            "required": ["reference_split", "reference_count", "generated_count",
                         "resizers_used", "friendly_resizer_override",
                         "toolkit_version"],
            "properties": {
                "reference_split": {"type": "string"},
                "reference_count": {"type": "integer"},
                "generated_count": {"type": "integer"},
                "resizers_used": {
                    "type": "object",
                    "additionalProperties": {"type": ["string", "null"]},
                },
                "friendly_resizer_override": {"type": ["string", "null"]},
                "toolkit_version": {"type": "string"},
            },
        },
    },
}


def validate_report(doc: dict) -> None:
    """Check a report document against REPORT_SCHEMA. Raises ValueError."""

    def fail(msg: str):
        raise ValueError(f"report schema violation: {msg}")

    if not isinstance(doc, dict):
        fail("document is not an object")
    required = set(REPORT_SCHEMA["required"])
    if set(doc) - set(REPORT_SCHEMA["properties"]):
        fail(f"unknown keys {sorted(set(doc) - set(REPORT_SCHEMA['properties']))}")
    if required - set(doc):
        fail(f"missing keys {sorted(required - set(doc))}")
    if doc["schema"] != SCHEMA_ID:
        fail(f"schema id {doc['schema']!r} != {SCHEMA_ID!r}")
    for key in ("model_name", "backbone"):
        if not isinstance(doc[key], str):
            fail(f"{key} must be a string")
    if not isinstance(doc["entries"], dict):
        fail("entries must be an object")
    for name, entry in doc["entries"].items():
        if set(entry) != {"value", "direction"}:
            fail(f"entry {name!r} must have exactly value and direction")
        if not isinstance(entry["value"], (int, float)) or isinstance(entry["value"], bool):
            fail(f"entry {name!r} value must be a number")
        if entry["direction"] not in ("higher_better", "lower_better"):
            fail(f"entry {name!r} has invalid direction {entry['direction']!r}")
    if not all(isinstance(v, str) for v in doc["omitted"].values()):
        fail("omitted reasons must be strings")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool)
               for v in doc["extras"].values()):
        fail("extras must be numbers")
    proto = doc["protocol"]
    if not isinstance(proto, dict):
        fail("protocol must be an object")
    for key in REPORT_SCHEMA["properties"]["protocol"]["required"]:
        if key not in proto:
            fail(f"protocol missing {key!r}")
    if not isinstance(proto["reference_split"], str):
        fail("protocol.reference_split must be a string")
    for key in ("reference_count", "generated_count"):
        if not isinstance(proto[key], int) or isinstance(proto[key], bool):
            fail(f"protocol.{key} must be an integer")
    if not isinstance(proto["resizers_used"], dict):
        fail("protocol.resizers_used must be an object")
    override = proto["friendly_resizer_override"]
    if override is not None and not isinstance(override, str):
        fail("protocol.friendly_resizer_override must be a string or null")


def build_report(
    spec: BackboneSpec,
    real: FeatureSet,
    fake: FeatureSet,
    fake_post: Optional[PosteriorSet],
    *,
    model_name: str,
    params: ManifoldParams,
    splits: int,
    reference_split: str,
    prep_filter: Optional[str],
    friendly_override: Optional[str],
    compute_prdc: bool = True,
) -> tuple[MetricReport, dict]:
    """Compute the metric suite and return (MetricReport, report document).

    Metrics that need inputs the files do not carry (posteriors, labels) are
    left out of `entries`; the document's `omitted` block says why.
    """
    if real.dim != fake.dim:
        raise DimensionMismatchError(
            f"real features are {real.dim}-d, generated features are {fake.dim}-d"
        )
    if not reference_split:
        raise MissingReferenceDeclarationError(
            "a reference split declaration (name:count) is required"
        )
    names = spec.metric_display_names()
    entries: dict[str, tuple[float, Direction]] = {}
    omitted: dict[str, str] = {}
    extras: dict[str, float] = {}

    fd = frechet_distance(summarize(real), summarize(fake))
    entries[names["fd"]] = (fd, Direction.LOWER_BETTER)

    if fake_post is not None:
        mean, std = classifier_score(fake_post, splits=splits)
        entries[names["score"]] = (mean, Direction.HIGHER_BETTER)
        extras[names["score"] + "_std"] = std
        extras["score_splits"] = float(splits)
    else:
        omitted[names["score"]] = "generated feature file carries no posteriors"

    if compute_prdc:
        res = prdc(real, fake, params)
        entries[names["precision"]] = (res.precision, Direction.HIGHER_BETTER)
        entries[names["recall"]] = (res.recall, Direction.HIGHER_BETTER)
        entries[names["density"]] = (res.density, Direction.HIGHER_BETTER)
        entries[names["coverage"]] = (res.coverage, Direction.HIGHER_BETTER)
        extras["k_pr"] = float(params.k_pr)
        extras["k_dc"] = float(params.k_dc)

    if real.labels is not None and fake.labels is not None:
        entries[spec.ifd_name] = (intra_class_fd(real, fake), Direction.LOWER_BETTER)
    else:
        omitted[spec.ifd_name] = "labels missing on at least one side"

    if fake_post is not None and fake.labels is not None:
        for k in (1, 5):
            if k <= fake_post.classes:
                entries[f"Top-{k} acc."] = (
                    top_k_accuracy(fake_post, fake.labels, k),
                    Direction.HIGHER_BETTER,
                )
            else:
                omitted[f"Top-{k} acc."] = f"posterior has only {fake_post.classes} classes"
    else:
        reason = ("generated feature file carries no posteriors"
                  if fake_post is None else "generated feature file carries no labels")
        omitted["Top-1 acc."] = reason
        omitted["Top-5 acc."] = reason

    protocol = {
        "reference_split": reference_split,
        "reference_count": real.count,
        "generated_count": fake.count,
        "resizers_used": {
            "prep": prep_filter,
            "backbone_input": (friendly_override or spec.friendly_filter.value),
        },
        "friendly_resizer_override": friendly_override,
        "toolkit_version": __version__,
    }
    report = MetricReport(
        model_name=model_name,
        backbone=spec.name,
        entries=entries,
        protocol=protocol,
    )
    doc = {
        "schema": SCHEMA_ID,
        "model_name": model_name,
        "backbone": spec.name,
        "entries": {
            name: {"value": value, "direction": direction.value}
            for name, (value, direction) in entries.items()
        },
        "omitted": omitted,
        "extras": extras,
        "protocol": protocol,
    }
    validate_report(doc)
    return report, doc


def report_to_json(doc: dict) -> str:
    """Byte-reproducible serialization of a report document."""
    return json.dumps(doc, sort_keys=True, separators=(",", ": "), indent=1) + "\n"


def report_from_json(text: str) -> tuple[MetricReport, dict]:
    """Parse and validate a stored report; rebuild the MetricReport."""
    doc = json.loads(text)
    validate_report(doc)
    entries = {
        name: (float(entry["value"]), Direction(entry["direction"]))
        for name, entry in doc["entries"].items()
    }
    report = MetricReport(
        model_name=doc["model_name"],
        backbone=doc["backbone"],
        entries=entries,
        protocol=doc["protocol"],
    )
    return report, doc


def report_to_text(doc: dict) -> str:
    """Human-readable rendering of one report document."""
    lines = [f"model: {doc['model_name']}", f"backbone: {doc['backbone']}", ""]
    width = max((len(n) for n in (*doc["entries"], *doc["omitted"])), default=10)
    for name, entry in doc["entries"].items():
        arrow = "down" if entry["direction"] == "lower_better" else "up"
        lines.append(f"  {name.ljust(width)}  {entry['value']:.6g}  ({arrow} better)")
    for name, reason in doc["omitted"].items():
        lines.append(f"  {name.ljust(width)}  omitted: {reason}")
    proto = doc["protocol"]
    lines += [
        "",
        f"  reference: {proto['reference_split']} "
        f"(N={proto['reference_count']}, M={proto['generated_count']})",
        f"  resizers: {proto['resizers_used']}",
        f"  toolkit: {proto['toolkit_version']}",
    ]
    if proto.get("friendly_resizer_override"):
        lines.append(
            f"  NONSTANDARD: friendly resizer overridden to "
            f"{proto['friendly_resizer_override']}"
        )
    return "\n".join(lines) + "\n"


def report_to_csv(doc: dict) -> str:
    """CSV rendering of one report document (metric, value, direction)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["metric", "value", "direction"])
    for name, entry in doc["entries"].items():
        writer.writerow([name, repr(entry["value"]), entry["direction"]])
    return out.getvalue()
