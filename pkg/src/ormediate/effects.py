"""Odds-ratio mediation effects for a binary outcome and binary mediator.

All effects are conditional on a covariate profile c = (z, v) and an exposure
contrast x vs x*, and are exact on the odds-ratio scale: no rare-outcome
approximation is involved. Everything reduces to a bridge term

    A[x1, x2 | c] = (k p2 p3 + p4) / (p2 p3 + p4)

where, writing e_y and e_w for the exponentiated model predictors,

    k  = exp(bw + bxw x1 + bwz'z + bxwz' x1 z)   mediator-outcome odds ratio
    p2 = e_w(x2, v)                              mediator odds
    p3 = 1 + e_y(x1, 0, z)
    p4 = 1 + e_y(x1, 1, z)

The first index sets the exposure level inside the outcome model, the second
the exposure level inside the mediator model. A is a convex combination of k
and 1 with weights p2 p3 / (p2 p3 + p4) and p4 / (p2 p3 + p4), hence always
between min(k, 1) and max(k, 1).

With D = x - x* and the prefactor br(z) = bx + bxz'z, the natural effects are

    log PNDE = br(z) D + log(A[x, x*] / A[x*, x*])
    log TNIE =           log(A[x, x ] / A[x,  x*])
    log TNDE = br(z) D + log(A[x, x ] / A[x*, x ])
    log PNIE =           log(A[x*, x] / A[x*, x*])
    log TE   = br(z) D + log(A[x, x ] / A[x*, x*])
    log CDE(w) = (bx + bxw w + bxz'z + bxwz' w z) D

so that TE = PNDE * TNIE = TNDE * PNIE by construction.

``approx_effects`` computes the classical rare-outcome approximations of the
same five effects (the forms obtained when the outcome odds e_y are dropped
next to 1), useful for quantifying the error of the approximate pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .exceptions import SchemaError
from .model import Contrast, CovariateProfile, MediatorParams, OutcomeParams, _checked_exp, e_w, e_y

__all__ = [
    "EFFECT_ORDER",
    "ATermInputs",
    "EffectSet",
    "SpecialCaseReport",
    "a_term",
    "natural_effects",
    "approx_effects",
    "special_case_report",
]

# Row/report order used everywhere downstream (delta method, CLI tables).
EFFECT_ORDER = ("pnde", "tnie", "tnde", "pnie", "te")


def _check_joint_spec(outcome: OutcomeParams, mediator: MediatorParams, contrast: Contrast):
    if outcome.spec != mediator.spec:
        raise SchemaError("outcome and mediator parameters belong to different model specs")
    contrast.profile.check_against(outcome.spec)


@dataclass(frozen=True)
class ATermInputs:
    """The four ingredients of one bridge term A[x1, x2 | c]."""

    k: float
    p2: float
    p3: float
    p4: float

    def __post_init__(self):
        for name in ("k", "p2", "p3", "p4"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise SchemaError(f"a-term input {name} is not finite")
            object.__setattr__(self, name, val)
        if self.k <= 0.0 or self.p2 <= 0.0:
            raise SchemaError("a-term inputs k and p2 must be positive odds")
        if self.p3 < 1.0 or self.p4 < 1.0:
            raise SchemaError("a-term inputs p3 and p4 are 1 + odds and must be >= 1")

    @classmethod
    def from_params(
        cls,
        outcome: OutcomeParams,
        mediator: MediatorParams,
        x_outcome: float,
        x_mediator: float,
        profile: CovariateProfile,
    ) -> "ATermInputs":
        z, v = profile.z, profile.v
        return cls(
            k=_checked_exp(outcome.mediator_log_or(x_outcome, z), "mediator-outcome odds ratio"),
            p2=e_w(mediator, x_mediator, v),
            p3=1.0 + e_y(outcome, x_outcome, 0, z),
            p4=1.0 + e_y(outcome, x_outcome, 1, z),
        )

    def value(self) -> float:
        return (self.k * self.p2 * self.p3 + self.p4) / (self.p2 * self.p3 + self.p4)


def a_term(
    outcome: OutcomeParams,
    mediator: MediatorParams,
    x_outcome: float,
    x_mediator: float,
    profile: CovariateProfile,
) -> float:
    """Bridge term A[x_outcome, x_mediator | profile]; see the module docstring."""
    return ATermInputs.from_params(outcome, mediator, x_outcome, x_mediator, profile).value()


@dataclass(frozen=True, eq=False)
class EffectSet:
    """The five natural effects plus the controlled direct effect, on the log
    odds-ratio scale, at one contrast. Construction re-checks the
    multiplicative decomposition TE = PNDE*TNIE = TNDE*PNIE."""

    log_pnde: float
    log_tnie: float
    log_tnde: float
    log_pnie: float
    log_te: float
    log_cde_at: dict[int, float]
    contrast: Contrast

    def __post_init__(self):
        logs = [self.log_pnde, self.log_tnie, self.log_tnde, self.log_pnie, self.log_te]
        if not all(math.isfinite(v) for v in logs):
            raise SchemaError(f"non-finite log effects {logs}")
        cde = {int(w): float(v) for w, v in self.log_cde_at.items()}
        if sorted(cde) != [0, 1] or not all(math.isfinite(v) for v in cde.values()):
            raise SchemaError("log_cde_at must map w in {0, 1} to finite values")
        object.__setattr__(self, "log_cde_at", cde)
        scale = max(1.0, *(abs(v) for v in logs))
        tol = 1e-12 * scale
        if abs(self.log_pnde + self.log_tnie - self.log_te) > tol or (
            abs(self.log_tnde + self.log_pnie - self.log_te) > tol
        ):
            raise SchemaError(
                "effect decomposition TE = PNDE*TNIE = TNDE*PNIE is violated: "
                f"log TE = {self.log_te!r} vs {self.log_pnde + self.log_tnie!r} "
                f"and {self.log_tnde + self.log_pnie!r}"
            )

    def __eq__(self, other) -> bool:
        if not isinstance(other, EffectSet):
            return NotImplemented
        return (
            self.log_values() == other.log_values()
            and self.log_cde_at == other.log_cde_at
            and self.contrast == other.contrast
        )

    def log_values(self) -> tuple[float, ...]:
        """(log PNDE, log TNIE, log TNDE, log PNIE, log TE), the EFFECT_ORDER."""
        return (self.log_pnde, self.log_tnie, self.log_tnde, self.log_pnie, self.log_te)

    @property
    def pnde(self) -> float:
        return math.exp(self.log_pnde)

    @property
    def tnie(self) -> float:
        return math.exp(self.log_tnie)

    @property
    def tnde(self) -> float:
        return math.exp(self.log_tnde)

    @property
    def pnie(self) -> float:
        return math.exp(self.log_pnie)

    @property
    def te(self) -> float:
        return math.exp(self.log_te)

    def cde(self, w: int) -> float:
        return math.exp(self.log_cde_at[int(w)])

    def odds_ratios(self) -> dict[str, float]:
        out = {name: math.exp(v) for name, v in zip(EFFECT_ORDER, self.log_values())}
        out["cde0"] = self.cde(0)
        out["cde1"] = self.cde(1)
        return out

    def mediated_interaction_residual(self, which: str = "pnde") -> float:
        """log NDE - log CDE(0): what the natural direct effect adds on top of
        the controlled direct effect at w=0."""
        if which == "pnde":
            return self.log_pnde - self.log_cde_at[0]
        if which == "tnde":
            return self.log_tnde - self.log_cde_at[0]
        raise SchemaError(f"which must be 'pnde' or 'tnde', got {which!r}")


def natural_effects(
    outcome: OutcomeParams, mediator: MediatorParams, contrast: Contrast
) -> EffectSet:
    """Exact natural and controlled effects at the given contrast.

    A degenerate contrast (x == x*) yields every effect exactly 1.
    """
    _check_joint_spec(outcome, mediator, contrast)
    x, xs = contrast.x, contrast.x_star
    z = contrast.profile.z
    prof = contrast.profile
    a_xx = a_term(outcome, mediator, x, x, prof)
    a_xxs = a_term(outcome, mediator, x, xs, prof)
    a_xsx = a_term(outcome, mediator, xs, x, prof)
    a_xsxs = a_term(outcome, mediator, xs, xs, prof)
    pref = outcome.exposure_main_log_or(z) * contrast.delta
    return EffectSet(
        log_pnde=pref + math.log(a_xxs / a_xsxs),
        log_tnie=math.log(a_xx / a_xxs),
        log_tnde=pref + math.log(a_xx / a_xsx),
        log_pnie=math.log(a_xsx / a_xsxs),
        log_te=pref + math.log(a_xx / a_xsxs),
        log_cde_at={
            0: outcome.exposure_log_or(0.0, z) * contrast.delta,
            1: outcome.exposure_log_or(1.0, z) * contrast.delta,
        },
        contrast=contrast,
    )


def approx_effects(
    outcome: OutcomeParams, mediator: MediatorParams, contrast: Contrast
) -> EffectSet:
    """Rare-outcome approximations of the same five effects.

    These are the limits of the exact formulas as the outcome odds e_y go to
    zero within the relevant exposure stratum: the indirect effects need it
    only in one stratum each (TNIE at x, PNIE at x*), the direct effects in
    both. The approximate TE is defined as approx PNDE * approx TNIE; the
    TNDE * PNIE route gives the identical value (the cross terms cancel
    algebraically), so the returned set still satisfies the decomposition.
    """
    _check_joint_spec(outcome, mediator, contrast)
    x, xs = contrast.x, contrast.x_star
    z, v = contrast.profile.z, contrast.profile.v
    k_x = _checked_exp(outcome.mediator_log_or(x, z), "mediator-outcome odds ratio")
    k_xs = _checked_exp(outcome.mediator_log_or(xs, z), "mediator-outcome odds ratio")
    ew_x = e_w(mediator, x, v)
    ew_xs = e_w(mediator, xs, v)
    pref = outcome.exposure_main_log_or(z) * contrast.delta

    log_pnde = pref + math.log((1.0 + k_x * ew_xs) / (1.0 + k_xs * ew_xs))
    log_tnde = pref + math.log((1.0 + k_x * ew_x) / (1.0 + k_xs * ew_x))
    log_tnie = (math.log1p(ew_xs) + math.log1p(ew_x * k_x)) - (
        math.log1p(ew_x) + math.log1p(ew_xs * k_x)
    )
    log_pnie = (math.log1p(ew_xs) + math.log1p(ew_x * k_xs)) - (
        math.log1p(ew_x) + math.log1p(ew_xs * k_xs)
    )
    return EffectSet(
        log_pnde=log_pnde,
        log_tnie=log_tnie,
        log_tnde=log_tnde,
        log_pnie=log_pnie,
        log_te=log_pnde + log_tnie,
        log_cde_at={
            0: outcome.exposure_log_or(0.0, z) * contrast.delta,
            1: outcome.exposure_log_or(1.0, z) * contrast.delta,
        },
        contrast=contrast,
    )


@dataclass(frozen=True)
class SpecialCaseReport:
    """Structural zeros detected in the coefficients, and the effect identities
    they imply at any contrast."""

    exposure_outcome_null: bool
    mediator_outcome_null: bool
    exposure_mediator_null: bool
    degenerate_contrast: bool
    identities: tuple[str, ...]


def special_case_report(
    outcome: OutcomeParams, mediator: MediatorParams, contrast: Contrast
) -> SpecialCaseReport:
    """Detect whole-pathway null coefficient groups.

    The checks look at entire pathway groups (e.g. the exposure-outcome group
    is bx, bxw and the included bxz, bxwz blocks), which is what makes the
    implied identities hold with covariates in the model.
    """
    _check_joint_spec(outcome, mediator, contrast)
    xo_null = (
        outcome.exposure == 0.0
        and outcome.exposure_mediator == 0.0
        and not outcome.exposure_confounders.any()
        and not outcome.exposure_mediator_confounders.any()
    )
    mo_null = (
        outcome.mediator == 0.0
        and outcome.exposure_mediator == 0.0
        and not outcome.mediator_confounders.any()
        and not outcome.exposure_mediator_confounders.any()
    )
    xm_null = mediator.exposure == 0.0 and not mediator.exposure_confounders.any()
    degenerate = contrast.x == contrast.x_star

    identities = []
    if xo_null:
        identities.append("PNDE = TNDE = CDE(w) = 1 and TE = TNIE = PNIE")
    if mo_null:
        identities.append("every bridge term is 1, TNIE = PNIE = 1, TE = PNDE = TNDE = CDE(0)")
    if xm_null:
        identities.append("TNIE = PNIE = 1 and TE = PNDE = TNDE")
    if degenerate:
        identities.append("degenerate contrast (x = x*): every effect is 1")
    return SpecialCaseReport(
        exposure_outcome_null=xo_null,
        mediator_outcome_null=mo_null,
        exposure_mediator_null=xm_null,
        degenerate_contrast=degenerate,
        identities=tuple(identities),
    )
