"""Run-config and scenario-config parsing, CSV ingestion, and output schemas."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import jsonschema
import numpy as np

from .errors import MapNullError
from .filters import METRICS, FilterSpec
from .mapper import COVER_MODES, MapperConfig
from .numerics import DataMatrix
from .nulltest import STRATEGIES, PipelineConfig
from .simulation import DGP_KINDS, DGPSpec


class ConfigError(MapNullError):
    """Invalid configuration; the CLI maps it to exit status 2."""


_FILTER = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["linf_centrality", "pcoa", "knn_geodesic_mds", "external"]},
        "axis": {"type": "integer", "minimum": 1},
        "k": {"type": "integer", "minimum": 1},
        "column": {"type": "string"},
        "jitter_sd": {"type": "number", "minimum": 0},
    },
}

RUN_CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["input", "filters", "mapper"],
    "properties": {
        "input": {"type": "string"},
        "metric": {"enum": list(METRICS)},
        "filters": {"type": "array", "minItems": 1, "maxItems": 2, "items": _FILTER},
        "mapper": {
            "type": "object",
            "additionalProperties": False,
            "required": ["resolutions"],
            "properties": {
                "resolutions": {"type": "array", "minItems": 1, "maxItems": 2,
                                "items": {"type": "integer", "minimum": 1}},
                "gains": {"type": "array", "minItems": 1, "maxItems": 2,
                          "items": {"type": "number"}},
                "cover_mode": {"enum": list(COVER_MODES)},
                "overlap_fraction": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "histogram_bins": {"type": "integer", "minimum": 2},
            },
        },
        "split": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["odd_even", "random"]},
                "seed": {"type": ["integer", "null"]},
            },
        },
        "null": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "B": {"type": "integer", "minimum": 1},
                "strategy": {"enum": list(STRATEGIES)},
                "base_seed": {"type": "integer", "minimum": 0},
            },
        },
        "permutation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"n_perm": {"type": "integer", "minimum": 0}},
        },
        "report": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "exclude_singletons": {"type": "boolean"},
                "d_max": {"type": "boolean"},
                "null_modularity": {"type": "boolean"},
                "plot": {"type": "boolean"},
            },
        },
    },
}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "base_seed": {"type": "integer", "minimum": 0},
        "preset": {"enum": ["calibration", "mixtures"]},
        "R": {"type": "integer", "minimum": 1},
        "B": {"type": "integer", "minimum": 1},
        "scenarios": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["distribution"],
                "properties": {
                    "distribution": {"enum": list(DGP_KINDS)},
                    "n": {"type": "integer", "minimum": 2},
                    "p": {"type": "integer", "minimum": 2},
                    "rho": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                    "df": {"type": "number", "exclusiveMinimum": 2},
                    "delta": {"type": "number", "minimum": 0},
                    "k_shifted": {"type": "integer", "minimum": 0},
                    "R": {"type": "integer", "minimum": 1},
                    "B": {"type": "integer", "minimum": 1},
                    "strategy": {"enum": list(STRATEGIES)},
                },
            },
        },
    },
    "anyOf": [{"required": ["scenarios"]}, {"required": ["preset"]}],
}

MAPPER_GRAPH_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["n_points", "vertices", "edges", "communities", "config"],
    "properties": {
        "n_points": {"type": "integer", "minimum": 0},
        "vertices": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "cell", "points"],
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "cell": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "points": {"type": "array", "minItems": 1, "items": {"type": "string"}},
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {"type": "array", "minItems": 2, "maxItems": 2,
                      "items": {"type": "integer", "minimum": 0}},
        },
        "communities": {
            "type": "object",
            "required": ["vertex_community", "K", "sizes", "modularity"],
        },
        "config": {"type": "object"},
    },
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["D_obs", "z", "p_hat", "null_samples", "observed", "permutation",
                 "diagnostics", "provenance", "input"],
    "properties": {
        "D_obs": {"type": "object", "required": ["D", "D_excl_singletons", "D_max"]},
        "z": {"type": "object", "required": ["D", "D_excl_singletons", "D_max"]},
        "p_hat": {"type": "object", "required": ["D", "D_excl_singletons", "D_max"]},
        "null_samples": {"type": "object"},
    },
}


def _path_of(error) -> str:
    out = ""
    for part in error.absolute_path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


def validate(doc, schema, what="config"):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"{what} field {_path_of(exc)}: {exc.message}") from None


def load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def read_csv(path):
    """Read a comma-separated table: header row, row ids in the first column.

    Returns ``(row_ids, column_names, values)``. Empty or non-numeric cells
    are rejected; imputation belongs upstream.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read input {path}: {exc}") from None
    if len(rows) < 3:
        raise ConfigError(f"{path}: need a header and at least two data rows")
    header = rows[0][1:]
    ids, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header) + 1:
            raise ConfigError(f"{path}:{lineno}: expected {len(header) + 1} fields, got {len(row)}")
        ids.append(row[0])
        try:
            vals = [float(x) for x in row[1:]]
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: missing or non-numeric value") from None
        if not all(math.isfinite(v) for v in vals):
            raise ConfigError(f"{path}:{lineno}: missing or non-finite value")
        values.append(vals)
    if len(set(ids)) != len(ids):
        raise ConfigError(f"{path}: row ids must be unique")
    return ids, header, np.array(values)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def load_run_config(path, seed_override=None):
    """Validate a run config and load its data.

    Returns ``(DataMatrix, PipelineConfig, report_options)``. External-filter
    columns are removed from the feature matrix.
    """
    path = Path(path)
    doc = load_json(path)
    validate(doc, RUN_CONFIG_SCHEMA)
    mapper_doc = doc["mapper"]
    mode = mapper_doc.get("cover_mode", "equalized")
    gains = mapper_doc.get("gains", [2.0])
    if mode == "equalized":
        for i, g in enumerate(gains):
            if g < 1:
                raise ConfigError(f"config field mapper.gains[{i}]: gain {g} must be >= 1 "
                                  "for the equalized cover")
    if len(mapper_doc["resolutions"]) != len(doc["filters"]):
        raise ConfigError("config field mapper.resolutions: need one resolution per filter")
    if len(gains) not in (1, len(doc["filters"])):
        raise ConfigError("config field mapper.gains: need one gain or one per filter")

    input_path = Path(doc["input"])
    if not input_path.is_absolute():
        input_path = path.parent / input_path
    ids, columns, values = read_csv(input_path)

    external = {}
    for i, f in enumerate(doc["filters"]):
        if f["kind"] == "external":
            col = f.get("column")
            if col is None:
                raise ConfigError(f"config field filters[{i}].column: required for external filters")
            if col not in columns:
                raise ConfigError(f"config field filters[{i}].column: no column {col!r} in input")
            external[col] = values[:, columns.index(col)]
    keep = [j for j, c in enumerate(columns) if c not in external]
    try:
        data = DataMatrix(values[:, keep], feature_names=[columns[j] for j in keep], row_ids=ids)
    except MapNullError as exc:
        raise ConfigError(f"input {input_path}: {exc}") from None

    specs = []
    for f in doc["filters"]:
        if f["kind"] == "external":
            specs.append(FilterSpec("external", values=tuple(external[f["column"]]),
                                    jitter_sd=f.get("jitter_sd", 0.0), name=f["column"]))
        else:
            specs.append(FilterSpec(f["kind"], axis=f.get("axis", 1), k=f.get("k", 30)))

    split = doc.get("split", {})
    null = doc.get("null", {})
    base_seed = null.get("base_seed", 0) if seed_override is None else int(seed_override)
    try:
        mapper = MapperConfig(
            resolutions=tuple(mapper_doc["resolutions"]),
            gains=tuple(gains),
            cover_mode=mode,
            overlap_fraction=mapper_doc.get("overlap_fraction", 0.5),
            histogram_bins=mapper_doc.get("histogram_bins", 10),
        )
        config = PipelineConfig(
            filters=tuple(specs),
            mapper=mapper,
            metric=doc.get("metric", "euclidean"),
            split_mode=split.get("mode", "odd_even"),
            split_seed=split.get("seed"),
            strategy=null.get("strategy", "ridge"),
            B=null.get("B", 50),
            base_seed=base_seed,
            n_perm=doc.get("permutation", {}).get("n_perm", 1000),
        )
    except MapNullError as exc:
        raise ConfigError(f"config: {exc}") from None
    report = {"exclude_singletons": True, "d_max": True, "null_modularity": True, "plot": True}
    report.update(doc.get("report", {}))
    return data, config, report


def load_scenarios(path):
    """Validate a scenario config; returns ``(jobs, base_seed)`` with jobs as (DGPSpec, R, B, strategy)."""
    from .simulation import preset_scenarios

    doc = load_json(path)
    validate(doc, SCENARIO_SCHEMA, what="scenario")
    R_default = doc.get("R", 200)
    B_default = doc.get("B", 50)
    jobs = []
    if "preset" in doc:
        for spec, B in preset_scenarios(doc["preset"]):
            jobs.append((spec, R_default, doc.get("B", B), "ridge"))
    for s in doc.get("scenarios", []):
        kw = {k: s[k] for k in ("n", "p", "rho", "df", "delta", "k_shifted") if k in s}
        try:
            spec = DGPSpec(s["distribution"], **kw)
        except MapNullError as exc:
            raise ConfigError(f"scenario: {exc}") from None
        jobs.append((spec, s.get("R", R_default), s.get("B", B_default), s.get("strategy", "ridge")))
    return jobs, doc.get("base_seed", 0)
