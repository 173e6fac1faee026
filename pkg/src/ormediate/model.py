"""Model specification and closed-form predictor algebra.

Two logistic models drive everything in this package:

    outcome:  logit P(Y=1 | X=x, W=w, Z=z) = b0 + bx*x + bw*w + bxw*x*w
                                             + bz'z + bxz'(x z) + bwz'(w z) + bxwz'(x w z)
    mediator: logit P(W=1 | X=x, V=v)      = g0 + gx*x + gv'v + gxv'(x v)

Y and W are binary, the exposure X may be binary or continuous, and each
covariate interaction block is individually optional subject to marginality
nesting (an interaction block requires its main-effect blocks). This module
owns the specification and parameter containers, the exponentiated-predictor
helpers e_y and e_w, and design-matrix construction. It knows nothing about
fitting or effect formulas.

Coefficient vectors are laid out block by block:

    outcome:  (b0, bx, bz..., bxz..., bw, bxw, bwz..., bxwz...)
    mediator: (g0, gx, gv..., gxv...)

with excluded blocks dropped. Design matrices built here use the same column
order, so ``design @ params.active_vector()`` is the linear predictor.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .exceptions import PredictorOverflowError, SchemaError

__all__ = [
    "EXP_LIMIT",
    "ModelSpec",
    "CovariateProfile",
    "Contrast",
    "OutcomeParams",
    "MediatorParams",
    "Dataset",
    "e_y",
    "e_w",
    "build_design",
    "outcome_design",
    "mediator_design",
]

# exp() overflows an IEEE double just above exp(709.78); predictors past this
# magnitude cannot yield a usable probability or odds in either tail.
EXP_LIMIT = 709.0


def _checked_exp(eta: float, what: str) -> float:
    if not math.isfinite(eta):
        raise PredictorOverflowError(f"{what} linear predictor is {eta!r}")
    if abs(eta) > EXP_LIMIT:
        raise PredictorOverflowError(
            f"{what} linear predictor {eta!r} exceeds the exp() range +/-{EXP_LIMIT}"
        )
    return math.exp(eta)


def _clean_names(names: Sequence[str], role: str) -> tuple[str, ...]:
    names = tuple(names)
    for name in names:
        if not isinstance(name, str) or not name:
            raise SchemaError(f"{role} names must be non-empty strings, got {name!r}")
    if len(set(names)) != len(names):
        raise SchemaError(f"duplicate {role} names in {names!r}")
    return names


@dataclass(frozen=True)
class ModelSpec:
    """Which covariates and interaction blocks the two models carry.

    ``z_names`` are outcome-model covariates, ``v_names`` mediator-model
    covariates; a name may appear in both. The boolean flags switch whole
    coefficient blocks: ``z``/``xz``/``wz``/``xwz`` for the outcome model and
    ``v``/``xv`` for the mediator model. The exposure, mediator, and their
    product term are always present in the outcome model.
    """

    z_names: tuple[str, ...] = ()
    v_names: tuple[str, ...] = ()
    z: bool = True
    xz: bool = False
    wz: bool = False
    xwz: bool = False
    v: bool = True
    xv: bool = False

    def __post_init__(self):
        object.__setattr__(self, "z_names", _clean_names(self.z_names, "outcome covariate"))
        object.__setattr__(self, "v_names", _clean_names(self.v_names, "mediator covariate"))
        if self.xwz and not (self.xz and self.wz):
            raise SchemaError("xwz interactions require the xz and wz blocks")
        if (self.xz or self.wz) and not self.z:
            raise SchemaError("covariate interactions require the z main-effect block")
        if self.xv and not self.v:
            raise SchemaError("xv interactions require the v main-effect block")

    @property
    def p(self) -> int:
        return len(self.z_names)

    @property
    def q(self) -> int:
        return len(self.v_names)

    @property
    def has_z(self) -> bool:
        return self.z and self.p > 0

    @property
    def has_xz(self) -> bool:
        return self.xz and self.p > 0

    @property
    def has_wz(self) -> bool:
        return self.wz and self.p > 0

    @property
    def has_xwz(self) -> bool:
        return self.xwz and self.p > 0

    @property
    def has_v(self) -> bool:
        return self.v and self.q > 0

    @property
    def has_xv(self) -> bool:
        return self.xv and self.q > 0

    def outcome_terms(self) -> tuple[str, ...]:
        """Outcome design column names, in coefficient layout order."""
        terms = ["const", "x"]
        if self.has_z:
            terms += list(self.z_names)
        if self.has_xz:
            terms += [f"x:{n}" for n in self.z_names]
        terms += ["w", "x:w"]
        if self.has_wz:
            terms += [f"w:{n}" for n in self.z_names]
        if self.has_xwz:
            terms += [f"x:w:{n}" for n in self.z_names]
        return tuple(terms)

    def mediator_terms(self) -> tuple[str, ...]:
        """Mediator design column names, in coefficient layout order."""
        terms = ["const", "x"]
        if self.has_v:
            terms += list(self.v_names)
        if self.has_xv:
            terms += [f"x:{n}" for n in self.v_names]
        return tuple(terms)

    @property
    def n_outcome_coefs(self) -> int:
        return len(self.outcome_terms())

    @property
    def n_mediator_coefs(self) -> int:
        return len(self.mediator_terms())

    def covariate_names(self) -> tuple[str, ...]:
        """Unique covariate names, z-list order first, then new v-list names."""
        seen = list(self.z_names)
        seen += [n for n in self.v_names if n not in seen]
        return tuple(seen)


def _profile_values(values: Sequence[float], role: str) -> tuple[float, ...]:
    out = tuple(float(u) for u in values)
    for u in out:
        if not math.isfinite(u):
            raise SchemaError(f"{role} profile value {u!r} is not finite")
    return out


@dataclass(frozen=True)
class CovariateProfile:
    """Fixed covariate values (z for the outcome model, v for the mediator model)
    at which conditional effects are evaluated."""

    z: tuple[float, ...] = ()
    v: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "z", _profile_values(self.z, "z"))
        object.__setattr__(self, "v", _profile_values(self.v, "v"))

    @classmethod
    def from_named(cls, spec: ModelSpec, values: Mapping[str, float]) -> "CovariateProfile":
        """Build a profile from a name->value mapping; a covariate shared by both
        models is materialised into both slots."""
        known = set(spec.z_names) | set(spec.v_names)
        unknown = sorted(set(values) - known)
        if unknown:
            raise SchemaError(f"profile names {unknown} are not model covariates")
        missing = sorted(known - set(values))
        if missing:
            raise SchemaError(f"profile is missing covariates {missing}")
        return cls(
            z=tuple(values[n] for n in spec.z_names),
            v=tuple(values[n] for n in spec.v_names),
        )

    def check_against(self, spec: ModelSpec) -> None:
        if len(self.z) != spec.p or len(self.v) != spec.q:
            raise SchemaError(
                f"profile has {len(self.z)} z / {len(self.v)} v values, "
                f"model expects {spec.p} / {spec.q}"
            )


@dataclass(frozen=True)
class Contrast:
    """Exposure contrast x vs x* evaluated at a covariate profile."""

    x: float
    x_star: float
    profile: CovariateProfile = CovariateProfile()

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "x_star", float(self.x_star))
        if not (math.isfinite(self.x) and math.isfinite(self.x_star)):
            raise SchemaError("contrast levels must be finite")

    @property
    def delta(self) -> float:
        return self.x - self.x_star


def _block(values, length: int, active: bool, name: str) -> np.ndarray:
    """Coerce one coefficient block to a read-only float64 vector; blocks the
    spec excludes are forced to zero so they stay inert."""
    if values is None:
        arr = np.zeros(length)
    else:
        arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.shape != (length,):
        raise SchemaError(f"{name} block must have length {length}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise SchemaError(f"{name} block contains non-finite values")
    if not active:
        arr = np.zeros(length)
    arr.setflags(write=False)
    return arr


def _dot(coefs: np.ndarray, values: Sequence[float]) -> float:
    return float(np.dot(coefs, np.asarray(values, dtype=float)))


@dataclass(frozen=True, eq=False)
class OutcomeParams:
    """Coefficients of the outcome logistic model, stored block by block.

    Blocks excluded by the model spec are held at zero and never enter
    predictors, layouts, or gradients.
    """

    spec: ModelSpec
    intercept: float = 0.0
    exposure: float = 0.0
    mediator: float = 0.0
    exposure_mediator: float = 0.0
    confounders: np.ndarray | None = field(default=None)
    exposure_confounders: np.ndarray | None = field(default=None)
    mediator_confounders: np.ndarray | None = field(default=None)
    exposure_mediator_confounders: np.ndarray | None = field(default=None)

    def __post_init__(self):
        s = self.spec
        for name in ("intercept", "exposure", "mediator", "exposure_mediator"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise SchemaError(f"outcome coefficient {name} is not finite")
            object.__setattr__(self, name, val)
        object.__setattr__(self, "confounders", _block(self.confounders, s.p, s.has_z, "z"))
        object.__setattr__(
            self, "exposure_confounders", _block(self.exposure_confounders, s.p, s.has_xz, "xz")
        )
        object.__setattr__(
            self, "mediator_confounders", _block(self.mediator_confounders, s.p, s.has_wz, "wz")
        )
        object.__setattr__(
            self,
            "exposure_mediator_confounders",
            _block(self.exposure_mediator_confounders, s.p, s.has_xwz, "xwz"),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, OutcomeParams):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(
            self.active_vector(), other.active_vector()
        )

    def active_vector(self) -> np.ndarray:
        """Coefficients of the included blocks, in design column order."""
        s = self.spec
        parts = [np.array([self.intercept, self.exposure])]
        if s.has_z:
            parts.append(self.confounders)
        if s.has_xz:
            parts.append(self.exposure_confounders)
        parts.append(np.array([self.mediator, self.exposure_mediator]))
        if s.has_wz:
            parts.append(self.mediator_confounders)
        if s.has_xwz:
            parts.append(self.exposure_mediator_confounders)
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, spec: ModelSpec, vector: Sequence[float]) -> "OutcomeParams":
        """Inverse of :meth:`active_vector`."""
        vec = np.asarray(vector, dtype=float).reshape(-1)
        if vec.shape != (spec.n_outcome_coefs,):
            raise SchemaError(
                f"outcome coefficient vector has length {vec.size}, "
                f"model expects {spec.n_outcome_coefs}"
            )
        pos = 2
        bz = bxz = bwz = bxwz = None
        if spec.has_z:
            bz, pos = vec[pos : pos + spec.p], pos + spec.p
        if spec.has_xz:
            bxz, pos = vec[pos : pos + spec.p], pos + spec.p
        bw, bxw = vec[pos], vec[pos + 1]
        pos += 2
        if spec.has_wz:
            bwz, pos = vec[pos : pos + spec.p], pos + spec.p
        if spec.has_xwz:
            bxwz, pos = vec[pos : pos + spec.p], pos + spec.p
        return cls(
            spec=spec,
            intercept=vec[0],
            exposure=vec[1],
            mediator=bw,
            exposure_mediator=bxw,
            confounders=bz,
            exposure_confounders=bxz,
            mediator_confounders=bwz,
            exposure_mediator_confounders=bxwz,
        )

    def linear_predictor(self, x: float, w: float, z: Sequence[float]) -> float:
        """logit P(Y=1 | x, w, z); one fixed evaluation order everywhere so the
        structural-zero identities hold bit for bit."""
        xw = x * w
        return (
            self.intercept
            + self.exposure * x
            + self.mediator * w
            + self.exposure_mediator * xw
            + _dot(self.confounders, z)
            + x * _dot(self.exposure_confounders, z)
            + w * _dot(self.mediator_confounders, z)
            + xw * _dot(self.exposure_mediator_confounders, z)
        )

    def exposure_log_or(self, w: float, z: Sequence[float]) -> float:
        """Conditional log odds ratio of a unit exposure change at fixed W=w:
        bx + bxw*w + bxz'z + bxwz'(w z)."""
        return (
            self.exposure
            + self.exposure_mediator * w
            + _dot(self.exposure_confounders, z)
            + w * _dot(self.exposure_mediator_confounders, z)
        )

    def exposure_main_log_or(self, z: Sequence[float]) -> float:
        """bx + bxz'z, the exposure effect with the mediator pathway removed."""
        return self.exposure + _dot(self.exposure_confounders, z)

    def mediator_log_or(self, x: float, z: Sequence[float]) -> float:
        """Conditional log odds ratio of the mediator on the outcome at
        exposure x: bw + bxw*x + bwz'z + bxwz'(x z)."""
        return (
            self.mediator
            + self.exposure_mediator * x
            + _dot(self.mediator_confounders, z)
            + x * _dot(self.exposure_mediator_confounders, z)
        )


@dataclass(frozen=True, eq=False)
class MediatorParams:
    """Coefficients of the mediator logistic model, stored block by block."""

    spec: ModelSpec
    intercept: float = 0.0
    exposure: float = 0.0
    confounders: np.ndarray | None = field(default=None)
    exposure_confounders: np.ndarray | None = field(default=None)

    def __post_init__(self):
        s = self.spec
        for name in ("intercept", "exposure"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise SchemaError(f"mediator coefficient {name} is not finite")
            object.__setattr__(self, name, val)
        object.__setattr__(self, "confounders", _block(self.confounders, s.q, s.has_v, "v"))
        object.__setattr__(
            self, "exposure_confounders", _block(self.exposure_confounders, s.q, s.has_xv, "xv")
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, MediatorParams):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(
            self.active_vector(), other.active_vector()
        )

    def active_vector(self) -> np.ndarray:
        s = self.spec
        parts = [np.array([self.intercept, self.exposure])]
        if s.has_v:
            parts.append(self.confounders)
        if s.has_xv:
            parts.append(self.exposure_confounders)
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, spec: ModelSpec, vector: Sequence[float]) -> "MediatorParams":
        vec = np.asarray(vector, dtype=float).reshape(-1)
        if vec.shape != (spec.n_mediator_coefs,):
            raise SchemaError(
                f"mediator coefficient vector has length {vec.size}, "
                f"model expects {spec.n_mediator_coefs}"
            )
        pos = 2
        gv = gxv = None
        if spec.has_v:
            gv, pos = vec[pos : pos + spec.q], pos + spec.q
        if spec.has_xv:
            gxv, pos = vec[pos : pos + spec.q], pos + spec.q
        return cls(
            spec=spec,
            intercept=vec[0],
            exposure=vec[1],
            confounders=gv,
            exposure_confounders=gxv,
        )

    def linear_predictor(self, x: float, v: Sequence[float]) -> float:
        return (
            self.intercept
            + self.exposure * x
            + _dot(self.confounders, v)
            + x * _dot(self.exposure_confounders, v)
        )


def _check_mediator_level(w) -> float:
    w = float(w)
    if w not in (0.0, 1.0):
        raise SchemaError(f"mediator level must be 0 or 1, got {w!r}")
    return w


def e_y(params: OutcomeParams, x: float, w: float, z: Sequence[float]) -> float:
    """Exponentiated outcome predictor exp(logit P(Y=1 | x, w, z)).

    This is the conditional odds of the outcome. Raises
    :class:`PredictorOverflowError` when |predictor| > 709.
    """
    if len(z) != params.spec.p:
        raise SchemaError(f"expected {params.spec.p} z values, got {len(z)}")
    w = _check_mediator_level(w)
    return _checked_exp(params.linear_predictor(float(x), w, z), "outcome")


def e_w(params: MediatorParams, x: float, v: Sequence[float]) -> float:
    """Exponentiated mediator predictor exp(logit P(W=1 | x, v)), the
    conditional odds of the mediator."""
    if len(v) != params.spec.q:
        raise SchemaError(f"expected {params.spec.q} v values, got {len(v)}")
    return _checked_exp(params.linear_predictor(float(x), v), "mediator")


def _binary_column(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise SchemaError(f"column {name!r} contains non-finite values")
    if not np.all((arr == 0.0) | (arr == 1.0)):
        bad = arr[(arr != 0.0) & (arr != 1.0)][0]
        raise SchemaError(f"column {name!r} must be binary 0/1, found {bad!r}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observed columns: binary outcome y, binary mediator w, exposure x, and
    named covariates. All columns share one row count."""

    y: np.ndarray
    w: np.ndarray
    x: np.ndarray
    covariates: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "y", _binary_column(self.y, "y"))
        object.__setattr__(self, "w", _binary_column(self.w, "w"))
        x = np.asarray(self.x, dtype=float).reshape(-1)
        if not np.all(np.isfinite(x)):
            raise SchemaError("column 'x' contains non-finite values")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        cov = {}
        for name, values in dict(self.covariates).items():
            arr = np.asarray(values, dtype=float).reshape(-1)
            if not np.all(np.isfinite(arr)):
                raise SchemaError(f"covariate {name!r} contains non-finite values")
            arr.setflags(write=False)
            cov[name] = arr
        object.__setattr__(self, "covariates", cov)
        lengths = {self.y.size, self.w.size, self.x.size} | {a.size for a in cov.values()}
        if len(lengths) != 1:
            raise SchemaError(f"columns have mismatched lengths {sorted(lengths)}")

    @property
    def n(self) -> int:
        return self.y.size

    def check_columns(self, spec: ModelSpec) -> None:
        missing = [n for n in spec.covariate_names() if n not in self.covariates]
        if missing:
            raise SchemaError(f"dataset is missing covariate columns {missing}")

    def validate_against(self, spec: ModelSpec) -> None:
        """Fit-time validation: columns present and enough rows to identify
        the coefficients."""
        self.check_columns(spec)
        need = max(spec.n_outcome_coefs, spec.n_mediator_coefs)
        if self.n < need:
            raise SchemaError(f"dataset has {self.n} rows, model needs at least {need}")

    def covariate_means(self) -> dict[str, float]:
        if self.n == 0:
            raise SchemaError("cannot take covariate means of an empty dataset")
        return {name: float(a.mean()) for name, a in self.covariates.items()}

    def mean_profile(self, spec: ModelSpec) -> CovariateProfile:
        self.check_columns(spec)
        means = self.covariate_means()
        return CovariateProfile.from_named(
            spec, {n: means[n] for n in spec.covariate_names()}
        )


def outcome_design(
    spec: ModelSpec, x: np.ndarray, w: np.ndarray, z_columns: Mapping[str, np.ndarray]
) -> np.ndarray:
    """Outcome design matrix with columns in coefficient layout order."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    cols = [np.ones_like(x), x]
    z = [np.asarray(z_columns[n], dtype=float) for n in spec.z_names]
    if spec.has_z:
        cols += z
    if spec.has_xz:
        cols += [x * zj for zj in z]
    cols += [w, x * w]
    if spec.has_wz:
        cols += [w * zj for zj in z]
    if spec.has_xwz:
        cols += [x * w * zj for zj in z]
    return np.column_stack(cols)


def mediator_design(
    spec: ModelSpec, x: np.ndarray, v_columns: Mapping[str, np.ndarray]
) -> np.ndarray:
    """Mediator design matrix with columns in coefficient layout order."""
    x = np.asarray(x, dtype=float)
    cols = [np.ones_like(x), x]
    v = [np.asarray(v_columns[n], dtype=float) for n in spec.v_names]
    if spec.has_v:
        cols += v
    if spec.has_xv:
        cols += [x * vj for vj in v]
    return np.column_stack(cols)


def build_design(data: Dataset, spec: ModelSpec, target: str) -> tuple[np.ndarray, np.ndarray]:
    """Design matrix and response for one of the two models.

    ``target`` is ``"outcome"`` (response y, columns 1, x, z, xz, w, xw, wz, xwz)
    or ``"mediator"`` (response w, columns 1, x, v, xv).
    """
    data.check_columns(spec)
    if target == "outcome":
        return outcome_design(spec, data.x, data.w, data.covariates), np.asarray(
            data.y, dtype=float
        )
    if target == "mediator":
        return mediator_design(spec, data.x, data.covariates), np.asarray(data.w, dtype=float)
    raise SchemaError(f"unknown design target {target!r}")
