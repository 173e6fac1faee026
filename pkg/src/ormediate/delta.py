"""Delta-method inference for the log odds-ratio mediation effects.

The five log effects are smooth functions of the stacked coefficient vector
theta = (outcome coefficients, mediator coefficients). Writing A for a bridge
term (see :mod:`ormediate.effects`), every entry of its gradient is a scaled
copy of one of three key derivatives:

    d_b0 = dA/d(intercept)   spreads over the outcome b0/bx/bz/bxz group
    d_bw = dA/d(mediator)    spreads over the bw/bxw/bwz/bxwz group
    d_g0 = dA/d(g intercept) spreads over the whole mediator model

because the predictor enters each block linearly with multipliers
(1, x, z, x z) — the pattern ``d_vector`` produces. Stacking the four bridge
gradients into rows for (log PNDE, log TNIE, log TNDE, log PNIE, log TE) and
sandwiching the block-diagonal coefficient covariance gives the covariance of
the log effects; the odds-ratio scale follows by scaling with the estimates.

Confidence intervals are computed on the log scale and exponentiated, so they
are always positive and respect the reciprocal symmetry of odds ratios.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .effects import EFFECT_ORDER, ATermInputs, EffectSet, natural_effects
from .exceptions import CovarianceError, SchemaError
from .logit import FittedModel
from .model import Contrast, CovariateProfile, MediatorParams, ModelSpec, OutcomeParams

__all__ = [
    "EffectInference",
    "InferenceResult",
    "a_term_key_derivatives",
    "d_vector",
    "grad_a_term",
    "jacobian_log_effects",
    "infer",
]

# roundoff this far below zero is forgiven and clamped; anything worse raises
_VAR_TOL = 1e-12


def a_term_key_derivatives(inputs: ATermInputs) -> tuple[float, float, float]:
    """(d_b0, d_bw, d_g0): the three independent partials of one bridge term.

    At k = 1 both d_b0 and d_g0 vanish identically (the numerators are the
    same products commuted), which is what makes null-mediator models give
    exactly zero indirect-effect gradients outside the mediator coefficients.
    """
    k, p2, p3, p4 = inputs.k, inputs.p2, inputs.p3, inputs.p4
    s = p2 * p3 + p4
    num = k * p2 * p3 + p4
    d_b0 = ((k * p2 * (p3 - 1.0) + (p4 - 1.0)) * s - num * (p2 * (p3 - 1.0) + (p4 - 1.0))) / (
        s * s
    )
    d_bw = ((k * p2 * p3 + (p4 - 1.0)) * s - num * (p4 - 1.0)) / (s * s)
    d_g0 = ((k * p2 * p3) * s - num * (p2 * p3)) / (s * s)
    return d_b0, d_bw, d_g0


def d_vector(a: float, b: Sequence[float]) -> np.ndarray:
    """Multiplier pattern (1, a, b1, a b1, b2, a b2, ...): how a key derivative
    spreads over an intercept/exposure/covariate/interaction coefficient group."""
    out = [1.0, float(a)]
    for bj in b:
        bj = float(bj)
        out += [bj, a * bj]
    return np.array(out)


def _group(mult: float, a: float, b, main_on: bool, inter_on: bool) -> list[float]:
    """mult * (1, a, b..., a*b...) with the optional blocks dropped."""
    out = [mult, mult * a]
    if main_on:
        out += [mult * bj for bj in b]
    if inter_on:
        out += [mult * a * bj for bj in b]
    return out


def grad_a_term(
    outcome: OutcomeParams,
    mediator: MediatorParams,
    x_outcome: float,
    x_mediator: float,
    profile: CovariateProfile,
) -> np.ndarray:
    """Gradient of A[x_outcome, x_mediator | profile] over the stacked active
    coefficient vector (outcome layout first, then mediator layout)."""
    spec = outcome.spec
    inputs = ATermInputs.from_params(outcome, mediator, x_outcome, x_mediator, profile)
    d_b0, d_bw, d_g0 = a_term_key_derivatives(inputs)
    z, v = profile.z, profile.v
    grad = _group(d_b0, x_outcome, z, spec.has_z, spec.has_xz)
    grad += _group(d_bw, x_outcome, z, spec.has_wz, spec.has_xwz)
    grad += _group(d_g0, x_mediator, v, spec.has_v, spec.has_xv)
    return np.array(grad)


def _prefactor_gradient(spec: ModelSpec, contrast: Contrast, dim: int) -> np.ndarray:
    """Gradient of (bx + bxz'z)(x - x*): delta at bx, z_j delta at each bxz_j."""
    d1 = np.zeros(dim)
    d1[1] = contrast.delta
    if spec.has_xz:
        start = 2 + spec.p  # after b0, bx, and the z main block
        for j, zj in enumerate(contrast.profile.z):
            d1[start + j] = zj * contrast.delta
    return d1


def _cde_gradient(spec: ModelSpec, contrast: Contrast, w: float) -> np.ndarray:
    """Gradient of log CDE(w) over the outcome coefficients alone."""
    z = contrast.profile.z
    g = np.zeros(spec.n_outcome_coefs)
    g[1] = contrast.delta
    pos = 2
    if spec.has_z:
        pos += spec.p
    if spec.has_xz:
        g[pos : pos + spec.p] = np.asarray(z) * contrast.delta
        pos += spec.p
    g[pos + 1] = w * contrast.delta  # bxw
    pos += 2
    if spec.has_wz:
        pos += spec.p
    if spec.has_xwz:
        g[pos : pos + spec.p] = w * np.asarray(z) * contrast.delta
    return g


def jacobian_log_effects(
    outcome: OutcomeParams, mediator: MediatorParams, contrast: Contrast
) -> np.ndarray:
    """5 x dim(theta) Jacobian of (log PNDE, log TNIE, log TNDE, log PNIE,
    log TE); by construction row_te = row_pnde + row_tnie = row_tnde + row_pnie
    up to roundoff."""
    if outcome.spec != mediator.spec:
        raise SchemaError("outcome and mediator parameters belong to different model specs")
    contrast.profile.check_against(outcome.spec)
    spec = outcome.spec
    x, xs = contrast.x, contrast.x_star
    prof = contrast.profile

    def dlog(x1, x2):
        val = ATermInputs.from_params(outcome, mediator, x1, x2, prof).value()
        return grad_a_term(outcome, mediator, x1, x2, prof) / val

    l_xx = dlog(x, x)
    l_xxs = dlog(x, xs)
    l_xsx = dlog(xs, x)
    l_xsxs = dlog(xs, xs)
    dim = l_xx.size
    d1 = _prefactor_gradient(spec, contrast, dim)
    return np.vstack(
        [
            d1 + (l_xxs - l_xsxs),  # log PNDE
            l_xx - l_xxs,  # log TNIE
            d1 + (l_xx - l_xsx),  # log TNDE
            l_xsx - l_xsxs,  # log PNIE
            d1 + (l_xx - l_xsxs),  # log TE
        ]
    )


@dataclass(frozen=True)
class EffectInference:
    """One effect with its delta-method uncertainty, on both scales."""

    name: str
    log_estimate: float
    or_estimate: float
    se_log: float
    se_or: float
    ci_lower: float
    ci_upper: float
    p_value: float


@dataclass(frozen=True, eq=False)
class InferenceResult:
    """Point estimates, covariances, and per-effect summaries at one contrast.

    ``effects`` holds the five natural effects in EFFECT_ORDER; ``cde`` the
    controlled direct effects at w = 0 and w = 1. ``cov_log`` / ``cov_or`` are
    the 5x5 covariance matrices of the natural effects on the log and
    odds-ratio scales, and ``jacobian`` is the 5 x dim(theta) matrix behind
    them.
    """

    effect_set: EffectSet
    effects: tuple[EffectInference, ...]
    cde: tuple[EffectInference, ...]
    cov_log: np.ndarray
    cov_or: np.ndarray
    jacobian: np.ndarray
    level: float

    def by_name(self) -> dict[str, EffectInference]:
        out = {e.name: e for e in self.effects}
        out.update({e.name: e for e in self.cde})
        return out


def _variance_diag(cov: np.ndarray) -> np.ndarray:
    var = np.diag(cov).copy()
    if np.min(var) < -_VAR_TOL:
        raise CovarianceError(
            f"delta-method variance {np.min(var):.3e} is negative beyond roundoff"
        )
    return np.clip(var, 0.0, None)


def _summarise(name: str, log_est: float, var_log: float, zq: float) -> EffectInference:
    se_log = math.sqrt(var_log)
    or_est = math.exp(log_est)
    if se_log > 0.0:
        zstat = log_est / se_log
        p = 2.0 * float(stats.norm.sf(abs(zstat)))
    else:
        p = 1.0 if log_est == 0.0 else 0.0
    return EffectInference(
        name=name,
        log_estimate=log_est,
        or_estimate=or_est,
        se_log=se_log,
        se_or=or_est * se_log,
        ci_lower=math.exp(log_est - zq * se_log),
        ci_upper=math.exp(log_est + zq * se_log),
        p_value=p,
    )


def infer(
    spec: ModelSpec,
    outcome_fit: FittedModel,
    mediator_fit: FittedModel,
    contrast: Contrast,
    level: float = 0.95,
) -> InferenceResult:
    """Delta-method inference from two fitted models.

    The coefficient covariance is block diagonal (the two likelihoods share no
    parameters). A zero covariance collapses every interval to its point
    estimate rather than erroring.
    """
    if not 0.0 < level < 1.0:
        raise SchemaError(f"confidence level must be in (0, 1), got {level!r}")
    outcome = OutcomeParams.from_vector(spec, outcome_fit.coefficients)
    mediator = MediatorParams.from_vector(spec, mediator_fit.coefficients)
    ky, kw = spec.n_outcome_coefs, spec.n_mediator_coefs
    if outcome_fit.vcov.shape != (ky, ky) or mediator_fit.vcov.shape != (kw, kw):
        raise SchemaError("fit covariance shapes do not match the model spec")

    es = natural_effects(outcome, mediator, contrast)
    jac = jacobian_log_effects(outcome, mediator, contrast)
    sigma = np.zeros((ky + kw, ky + kw))
    sigma[:ky, :ky] = outcome_fit.vcov
    sigma[ky:, ky:] = mediator_fit.vcov
    cov_log = jac @ sigma @ jac.T
    cov_log = (cov_log + cov_log.T) / 2.0
    var_log = _variance_diag(cov_log)

    zq = float(stats.norm.ppf(0.5 + level / 2.0))
    effects = tuple(
        _summarise(name, log_est, var, zq)
        for name, log_est, var in zip(EFFECT_ORDER, es.log_values(), var_log)
    )
    ors = np.exp(np.asarray(es.log_values()))
    cov_or = cov_log * np.outer(ors, ors)

    cde_rows = []
    for w in (0, 1):
        g = _cde_gradient(spec, contrast, float(w))
        var = float(g @ outcome_fit.vcov @ g)
        if var < -_VAR_TOL:
            raise CovarianceError(f"negative CDE({w}) variance {var:.3e}")
        cde_rows.append(_summarise(f"cde{w}", es.log_cde_at[w], max(var, 0.0), zq))

    return InferenceResult(
        effect_set=es,
        effects=effects,
        cde=tuple(cde_rows),
        cov_log=cov_log,
        cov_or=cov_or,
        jacobian=jac,
        level=level,
    )
