"""File formats: comma-delimited data tables and JSON coefficient documents.

Tables are plain CSV with a mandatory header row, decimal-point numerics, and
no quoting.  Floats are written with ``repr`` so a write/read cycle returns
bit-identical values.

Coefficient documents are JSON files that carry a model layout, both fitted
coefficient vectors (grouped by block, excluded blocks omitted), and
optionally: per-model covariance matrices, a default exposure contrast, named
covariate profiles, and simulation marginals.  Fit reports embed one of these
documents, so a report can be fed anywhere a coefficient file is accepted.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from .exceptions import SchemaError
from .logit import FittedModel
from .model import CovariateProfile, Dataset, MediatorParams, ModelSpec, OutcomeParams
from .simulate import Marginal

__all__ = [
    "COEFFICIENT_FORMAT",
    "REPORT_FORMAT",
    "CoefficientSet",
    "bind_dataset",
    "bundled_fixture_names",
    "coefficients_from_doc",
    "coefficients_to_doc",
    "dataset_columns",
    "load_coefficients",
    "load_json",
    "profile_values",
    "read_table",
    "save_json",
    "spec_from_doc",
    "spec_to_doc",
    "write_table",
]

COEFFICIENT_FORMAT = "ormediate-coefficients"
REPORT_FORMAT = "ormediate-report"

_OUTCOME_BLOCKS = (
    "confounders",
    "exposure_confounders",
    "mediator_confounders",
    "exposure_mediator_confounders",
)
_OUTCOME_BLOCK_FLAGS = ("has_z", "has_xz", "has_wz", "has_xwz")
_MEDIATOR_BLOCKS = ("confounders", "exposure_confounders")
_MEDIATOR_BLOCK_FLAGS = ("has_v", "has_xv")


# ---------------------------------------------------------------------------
# delimited tables
# ---------------------------------------------------------------------------


def read_table(path: str | Path) -> dict[str, np.ndarray]:
    """Read a comma-delimited file with a header row into named float columns."""
    path = Path(path)
    try:
        with path.open("r", newline="") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError(f"{path}: empty file, expected a header row")
            header = [name.strip() for name in header]
            if any(not name for name in header):
                raise SchemaError(f"{path}: blank column name in header")
            if len(set(header)) != len(header):
                raise SchemaError(f"{path}: duplicate column names in header")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise SchemaError(
                        f"{path}: line {lineno} has {len(row)} fields, "
                        f"expected {len(header)}"
                    )
                try:
                    rows.append([float(cell) for cell in row])
                except ValueError as exc:
                    raise SchemaError(f"{path}: line {lineno}: {exc}") from exc
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    matrix = np.asarray(rows, dtype=float).reshape(len(rows), len(header))
    return {name: matrix[:, j].copy() for j, name in enumerate(header)}


def write_table(path: str | Path, columns: Mapping[str, np.ndarray]) -> None:
    """Write named float columns as CSV; `repr` floats round-trip exactly."""
    names = list(columns)
    if not names:
        raise SchemaError("cannot write a table with no columns")
    arrays = [np.asarray(columns[name], dtype=float) for name in names]
    lengths = {arr.shape for arr in arrays}
    if any(arr.ndim != 1 for arr in arrays) or len(lengths) != 1:
        raise SchemaError("table columns must be 1-d arrays of a single length")
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(names)
        for i in range(arrays[0].shape[0]):
            writer.writerow([repr(float(arr[i])) for arr in arrays])


def bind_dataset(
    columns: Mapping[str, np.ndarray],
    *,
    outcome: str = "y",
    mediator: str = "w",
    exposure: str = "x",
    covariates: tuple[str, ...] = (),
) -> Dataset:
    """Assemble a Dataset from named columns, failing on any missing binding."""
    bindings = {"outcome": outcome, "mediator": mediator, "exposure": exposure}
    for role, name in bindings.items():
        if name not in columns:
            raise SchemaError(f"missing bound column {name!r} (for {role})")
    for name in covariates:
        if name not in columns:
            raise SchemaError(f"missing bound column {name!r} (covariate)")
    overlap = {outcome, mediator, exposure}
    if len(overlap) != 3 or overlap & set(covariates):
        raise SchemaError("outcome/mediator/exposure/covariate bindings must be distinct")
    return Dataset(
        y=columns[outcome],
        w=columns[mediator],
        x=columns[exposure],
        covariates={name: columns[name] for name in covariates},
    )


def dataset_columns(
    data: Dataset,
    *,
    outcome: str = "y",
    mediator: str = "w",
    exposure: str = "x",
) -> dict[str, np.ndarray]:
    """Flatten a Dataset back into named columns (inverse of bind_dataset)."""
    cols: dict[str, np.ndarray] = {outcome: data.y, mediator: data.w, exposure: data.x}
    for name, values in data.covariates.items():
        if name in cols:
            raise SchemaError(f"covariate name {name!r} collides with a bound column")
        cols[name] = values
    return cols


# ---------------------------------------------------------------------------
# model layout documents
# ---------------------------------------------------------------------------


def spec_to_doc(spec: ModelSpec) -> dict:
    return {
        "z_names": list(spec.z_names),
        "v_names": list(spec.v_names),
        "blocks": {
            "z": spec.z,
            "xz": spec.xz,
            "wz": spec.wz,
            "xwz": spec.xwz,
            "v": spec.v,
            "xv": spec.xv,
        },
    }


def spec_from_doc(doc: Mapping) -> ModelSpec:
    _require_keys(doc, {"z_names", "v_names", "blocks"}, where="model")
    blocks = doc["blocks"]
    _require_keys(blocks, {"z", "xz", "wz", "xwz", "v", "xv"}, where="model.blocks")
    return ModelSpec(
        z_names=tuple(str(n) for n in doc["z_names"]),
        v_names=tuple(str(n) for n in doc["v_names"]),
        **{key: bool(blocks[key]) for key in ("z", "xz", "wz", "xwz", "v", "xv")},
    )


def _require_keys(doc: Mapping, expected: set[str], *, where: str) -> None:
    if not isinstance(doc, Mapping):
        raise SchemaError(f"{where}: expected a JSON object")
    missing = expected - set(doc)
    extra = set(doc) - expected
    if missing:
        raise SchemaError(f"{where}: missing keys {sorted(missing)}")
    if extra:
        raise SchemaError(f"{where}: unknown keys {sorted(extra)}")


# ---------------------------------------------------------------------------
# coefficient documents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientSet:
    """Parsed contents of a coefficient document."""

    spec: ModelSpec
    outcome: OutcomeParams
    mediator: MediatorParams
    outcome_vcov: np.ndarray | None = None
    mediator_vcov: np.ndarray | None = None
    exposure_levels: tuple[float, float] | None = None
    profiles: tuple[tuple[str, CovariateProfile], ...] = ()
    exposure_marginal: Marginal | None = None
    covariate_marginals: dict[str, Marginal] = field(default_factory=dict)
    description: str = ""

    @property
    def has_vcov(self) -> bool:
        return self.outcome_vcov is not None and self.mediator_vcov is not None

    def fitted_models(self) -> tuple[FittedModel, FittedModel]:
        """Wrap the stored vectors as fitted models for the inference layer."""
        if not self.has_vcov:
            raise SchemaError(
                "coefficient document carries no covariance matrices; "
                "only point estimates are available"
            )
        outcome = FittedModel(
            coefficients=self.outcome.active_vector(),
            vcov=self.outcome_vcov,
            log_likelihood=math.nan,
            iterations=0,
            converged=True,
            n=0,
            column_names=self.spec.outcome_terms(),
        )
        mediator = FittedModel(
            coefficients=self.mediator.active_vector(),
            vcov=self.mediator_vcov,
            log_likelihood=math.nan,
            iterations=0,
            converged=True,
            n=0,
            column_names=self.spec.mediator_terms(),
        )
        return outcome, mediator


def _params_to_doc(params, block_names, flag_names) -> dict:
    doc: dict = {"intercept": params.intercept, "exposure": params.exposure}
    if hasattr(params, "mediator"):
        doc["mediator"] = params.mediator
        doc["exposure_mediator"] = params.exposure_mediator
    spec = params.spec
    for block, flag in zip(block_names, flag_names):
        if getattr(spec, flag):
            doc[block] = [float(v) for v in getattr(params, block)]
    return doc


def _params_from_doc(cls, spec, doc, block_names, flag_names, *, where: str):
    scalars = {"intercept", "exposure"}
    if cls is OutcomeParams:
        scalars |= {"mediator", "exposure_mediator"}
    allowed = scalars | {
        block for block, flag in zip(block_names, flag_names) if getattr(spec, flag)
    }
    if not isinstance(doc, Mapping):
        raise SchemaError(f"{where}: expected a JSON object")
    extra = set(doc) - allowed
    if extra:
        raise SchemaError(f"{where}: unknown or inactive coefficient blocks {sorted(extra)}")
    missing = scalars - set(doc)
    if missing:
        raise SchemaError(f"{where}: missing coefficients {sorted(missing)}")
    kwargs = {name: float(doc[name]) for name in scalars}
    for block, flag in zip(block_names, flag_names):
        if getattr(spec, flag):
            if block not in doc:
                raise SchemaError(f"{where}: missing active block {block!r}")
            kwargs[block] = tuple(float(v) for v in doc[block])
    return cls(spec, **kwargs)


def _vcov_from_doc(entry, size: int, *, where: str) -> np.ndarray:
    arr = np.asarray(entry, dtype=float)
    if arr.shape != (size, size):
        raise SchemaError(f"{where}: covariance must be {size}x{size}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise SchemaError(f"{where}: covariance contains non-finite entries")
    return arr


def _marginal_to_doc(marginal: Marginal) -> dict:
    if marginal.kind == "bernoulli":
        return {"kind": "bernoulli", "p": marginal.p}
    return {"kind": "uniform", "low": marginal.low, "high": marginal.high}


def _marginal_from_doc(doc, *, where: str) -> Marginal:
    if not isinstance(doc, Mapping) or "kind" not in doc:
        raise SchemaError(f"{where}: marginal needs a 'kind' field")
    kind = doc["kind"]
    if kind == "bernoulli":
        _require_keys(doc, {"kind", "p"}, where=where)
        return Marginal("bernoulli", p=float(doc["p"]))
    if kind == "uniform":
        _require_keys(doc, {"kind", "low", "high"}, where=where)
        return Marginal("uniform", low=float(doc["low"]), high=float(doc["high"]))
    raise SchemaError(f"{where}: unknown marginal kind {kind!r}")


def coefficients_to_doc(
    spec: ModelSpec,
    outcome: OutcomeParams,
    mediator: MediatorParams,
    *,
    outcome_vcov: np.ndarray | None = None,
    mediator_vcov: np.ndarray | None = None,
    exposure_levels: tuple[float, float] | None = None,
    profiles: tuple[tuple[str, CovariateProfile], ...] = (),
    exposure_marginal: Marginal | None = None,
    covariate_marginals: Mapping[str, Marginal] | None = None,
    description: str = "",
) -> dict:
    """Serialize a coefficient set to a JSON-ready document."""
    if outcome.spec != spec or mediator.spec != spec:
        raise SchemaError("coefficient vectors were built for a different model layout")
    doc: dict = {
        "format": COEFFICIENT_FORMAT,
        "version": 1,
        "description": description,
        "model": spec_to_doc(spec),
        "outcome": _params_to_doc(outcome, _OUTCOME_BLOCKS, _OUTCOME_BLOCK_FLAGS),
        "mediator": _params_to_doc(mediator, _MEDIATOR_BLOCKS, _MEDIATOR_BLOCK_FLAGS),
    }
    if (outcome_vcov is None) != (mediator_vcov is None):
        raise SchemaError("provide covariance matrices for both models or neither")
    if outcome_vcov is not None:
        doc["vcov"] = {
            "outcome": np.asarray(outcome_vcov, dtype=float).tolist(),
            "mediator": np.asarray(mediator_vcov, dtype=float).tolist(),
        }
    if exposure_levels is not None:
        doc["contrast"] = {
            "x": float(exposure_levels[0]),
            "x_star": float(exposure_levels[1]),
        }
    if profiles:
        names = [name for name, _ in profiles]
        if len(set(names)) != len(names):
            raise SchemaError("profile names must be distinct")
        doc["profiles"] = [
            {"name": name, "values": profile_values(spec, profile)}
            for name, profile in profiles
        ]
    if exposure_marginal is not None or covariate_marginals:
        entry: dict = {}
        if exposure_marginal is not None:
            entry["exposure"] = _marginal_to_doc(exposure_marginal)
        if covariate_marginals:
            unknown = set(covariate_marginals) - set(spec.covariate_names())
            if unknown:
                raise SchemaError(f"marginals given for unknown covariates {sorted(unknown)}")
            entry["covariates"] = {
                name: _marginal_to_doc(covariate_marginals[name])
                for name in spec.covariate_names()
                if name in covariate_marginals
            }
        doc["marginals"] = entry
    return doc


def profile_values(spec: ModelSpec, profile: CovariateProfile) -> dict[str, float]:
    """Express a profile as a name->value mapping; shared names appear once."""
    profile.check_against(spec)
    values: dict[str, float] = {}
    for name, val in zip(spec.z_names, profile.z):
        values[name] = float(val)
    for name, val in zip(spec.v_names, profile.v):
        if name in values and values[name] != float(val):
            raise SchemaError(f"profile assigns two values to shared covariate {name!r}")
        values[name] = float(val)
    return values


def coefficients_from_doc(doc: Mapping) -> CoefficientSet:
    """Parse and validate a coefficient document (or the one inside a report)."""
    if not isinstance(doc, Mapping):
        raise SchemaError("coefficient document must be a JSON object")
    if doc.get("format") == REPORT_FORMAT:
        inner = doc.get("coefficients")
        if inner is None:
            raise SchemaError("report document carries no coefficient section")
        return coefficients_from_doc(inner)
    if doc.get("format") != COEFFICIENT_FORMAT:
        raise SchemaError(
            f"not a coefficient document (format={doc.get('format')!r}, "
            f"expected {COEFFICIENT_FORMAT!r})"
        )
    allowed = {
        "format",
        "version",
        "description",
        "model",
        "outcome",
        "mediator",
        "vcov",
        "contrast",
        "profiles",
        "marginals",
    }
    extra = set(doc) - allowed
    if extra:
        raise SchemaError(f"coefficient document: unknown keys {sorted(extra)}")
    if int(doc.get("version", 1)) != 1:
        raise SchemaError(f"unsupported coefficient document version {doc.get('version')!r}")
    for key in ("model", "outcome", "mediator"):
        if key not in doc:
            raise SchemaError(f"coefficient document: missing section {key!r}")

    spec = spec_from_doc(doc["model"])
    outcome = _params_from_doc(
        OutcomeParams, spec, doc["outcome"], _OUTCOME_BLOCKS, _OUTCOME_BLOCK_FLAGS,
        where="outcome",
    )
    mediator = _params_from_doc(
        MediatorParams, spec, doc["mediator"], _MEDIATOR_BLOCKS, _MEDIATOR_BLOCK_FLAGS,
        where="mediator",
    )

    outcome_vcov = mediator_vcov = None
    if "vcov" in doc and doc["vcov"] is not None:
        _require_keys(doc["vcov"], {"outcome", "mediator"}, where="vcov")
        outcome_vcov = _vcov_from_doc(
            doc["vcov"]["outcome"], spec.n_outcome_coefs, where="vcov.outcome"
        )
        mediator_vcov = _vcov_from_doc(
            doc["vcov"]["mediator"], spec.n_mediator_coefs, where="vcov.mediator"
        )

    exposure_levels = None
    if "contrast" in doc and doc["contrast"] is not None:
        _require_keys(doc["contrast"], {"x", "x_star"}, where="contrast")
        exposure_levels = (float(doc["contrast"]["x"]), float(doc["contrast"]["x_star"]))

    profiles: list[tuple[str, CovariateProfile]] = []
    for i, entry in enumerate(doc.get("profiles", ())):
        _require_keys(entry, {"name", "values"}, where=f"profiles[{i}]")
        name = str(entry["name"])
        values = {str(k): float(v) for k, v in entry["values"].items()}
        profiles.append((name, CovariateProfile.from_named(spec, values)))
    names = [name for name, _ in profiles]
    if len(set(names)) != len(names):
        raise SchemaError("coefficient document: duplicate profile names")

    exposure_marginal = None
    covariate_marginals: dict[str, Marginal] = {}
    if "marginals" in doc and doc["marginals"] is not None:
        entry = doc["marginals"]
        if not isinstance(entry, Mapping) or set(entry) - {"exposure", "covariates"}:
            raise SchemaError("marginals: expected keys 'exposure' and/or 'covariates'")
        if "exposure" in entry:
            exposure_marginal = _marginal_from_doc(
                entry["exposure"], where="marginals.exposure"
            )
        for name, sub in entry.get("covariates", {}).items():
            if name not in spec.covariate_names():
                raise SchemaError(f"marginals: unknown covariate {name!r}")
            covariate_marginals[name] = _marginal_from_doc(
                sub, where=f"marginals.covariates[{name!r}]"
            )

    return CoefficientSet(
        spec=spec,
        outcome=outcome,
        mediator=mediator,
        outcome_vcov=outcome_vcov,
        mediator_vcov=mediator_vcov,
        exposure_levels=exposure_levels,
        profiles=tuple(profiles),
        exposure_marginal=exposure_marginal,
        covariate_marginals=covariate_marginals,
        description=str(doc.get("description", "")),
    )


# ---------------------------------------------------------------------------
# JSON plumbing and the bundled fixtures
# ---------------------------------------------------------------------------


def save_json(doc: Mapping, path: str | Path) -> None:
    with Path(path).open("w") as handle:
        json.dump(doc, handle, indent=2)
        handle.write("\n")


def load_json(path: str | Path) -> dict:
    try:
        with Path(path).open("r") as handle:
            return json.load(handle)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc


def bundled_fixture_names() -> tuple[str, ...]:
    root = resources.files("ormediate") / "fixtures"
    return tuple(
        sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))
    )


def load_coefficients(source: str | Path | Mapping) -> CoefficientSet:
    """Load a coefficient document from a mapping, a path, or a bundled name."""
    if isinstance(source, Mapping):
        return coefficients_from_doc(source)
    path = Path(source)
    if path.exists():
        return coefficients_from_doc(load_json(path))
    name = str(source)
    if "/" not in name and not name.endswith(".json"):
        bundled = resources.files("ormediate") / "fixtures" / f"{name}.json"
        if bundled.is_file():
            return coefficients_from_doc(json.loads(bundled.read_text()))
    raise SchemaError(
        f"no coefficient file at {source!r} and no bundled fixture of that name "
        f"(bundled: {', '.join(bundled_fixture_names()) or 'none'})"
    )
