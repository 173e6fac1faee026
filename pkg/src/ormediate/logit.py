"""Logistic regression by Newton iteration (IRLS), written against the raw
log-likelihood: no weights, no regularisation, observed-information covariance.

The update solves ``info(beta) step = score(beta)`` and halves the step until
the log-likelihood is non-decreasing. Convergence requires both a small score
(max |score| < 1e-8) and a small relative log-likelihood change (< 1e-10).
Rank-deficient designs and quasi-separated responses raise immediately rather
than returning garbage coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _kernels
from .exceptions import ConvergenceError, SchemaError, SeparationError, SingularDesignError

__all__ = ["FittedModel", "fit", "predict_prob", "wald_table"]

_RANK_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class FittedModel:
    """A converged logistic fit.

    ``coefficients`` follow the design column order; ``vcov`` is the inverse
    observed information at the optimum.
    """

    coefficients: np.ndarray
    vcov: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    n: int
    column_names: tuple[str, ...]

    @property
    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.vcov))


def _check_rank(X: np.ndarray, names: tuple[str, ...]) -> None:
    sv = np.linalg.svd(X, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= sv[0] * _RANK_RTOL:
        _, s, vt = np.linalg.svd(X, full_matrices=False)
        null = vt[s <= s[0] * _RANK_RTOL] if s[0] > 0 else vt
        involved = sorted(
            {names[j] for row in np.atleast_2d(null) for j in np.flatnonzero(np.abs(row) > 0.1)}
        )
        raise SingularDesignError(
            f"design matrix is rank deficient; collinear columns: {involved}"
        )


def fit(
    design: np.ndarray,
    response: np.ndarray,
    *,
    column_names: tuple[str, ...] | None = None,
    max_iter: int = 100,
    score_tol: float = 1e-8,
    loglik_rel_tol: float = 1e-10,
    max_halvings: int = 10,
    separation_bound: float = 15.0,
) -> FittedModel:
    """Fit a logistic regression of ``response`` on ``design``.

    Raises :class:`SingularDesignError` for rank-deficient designs (naming the
    collinear columns), :class:`SeparationError` when coefficients run past
    ``separation_bound`` with the likelihood still climbing, and
    :class:`ConvergenceError` (carrying the iteration trace) when the budget
    runs out. Fitting the same arrays twice is bit-identical: the optimiser is
    deterministic and starts from zero.
    """
    X = np.ascontiguousarray(design, dtype=float)
    y = np.ascontiguousarray(response, dtype=float).reshape(-1)
    if X.ndim != 2:
        raise SchemaError(f"design must be 2-d, got shape {X.shape}")
    n, k = X.shape
    if y.size != n:
        raise SchemaError(f"response length {y.size} does not match {n} design rows")
    if not np.all(np.isfinite(X)):
        raise SchemaError("design matrix contains non-finite values")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise SchemaError("response must be binary 0/1")
    if n < k:
        raise SchemaError(f"{n} rows cannot identify {k} coefficients")
    names = tuple(column_names) if column_names is not None else tuple(
        f"col{j}" for j in range(k)
    )
    if len(names) != k:
        raise SchemaError(f"{len(names)} column names for {k} columns")
    _check_rank(X, names)

    beta = np.zeros(k)
    ll, score, info = _kernels.loglik_score_info(X, y, beta)
    rel_change = np.inf
    iterations = 0
    trace = [{"iteration": 0, "loglik": ll, "max_score": float(np.max(np.abs(score)))}]

    while True:
        if np.max(np.abs(score)) < score_tol and (iterations == 0 or rel_change < loglik_rel_tol):
            break
        if iterations >= max_iter:
            raise ConvergenceError(
                f"no convergence in {max_iter} Newton iterations "
                f"(max |score| = {np.max(np.abs(score)):.3e})",
                trace=trace,
            )
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            raise SingularDesignError(
                f"information matrix is singular at iteration {iterations + 1}"
            ) from None

        scale, halvings = 1.0, 0
        slack = 1e-9 * (abs(ll) + 1.0)
        while True:
            candidate = beta + scale * step
            ll_new = _kernels.loglik(X, y, candidate)
            if np.isfinite(ll_new) and ll_new >= ll - slack:
                break
            if halvings >= max_halvings:
                raise ConvergenceError(
                    f"step-halving failed to find a non-decreasing step at "
                    f"iteration {iterations + 1}",
                    trace=trace,
                )
            scale *= 0.5
            halvings += 1

        rel_change = abs(ll_new - ll) / (abs(ll_new) + 1.0)
        increased = ll_new > ll
        beta = candidate
        ll, score, info = _kernels.loglik_score_info(X, y, beta)
        iterations += 1
        trace.append(
            {
                "iteration": iterations,
                "loglik": ll,
                "max_score": float(np.max(np.abs(score))),
                "halvings": halvings,
            }
        )
        if np.max(np.abs(beta)) > separation_bound and increased:
            worst = names[int(np.argmax(np.abs(beta)))]
            raise SeparationError(
                f"coefficient {worst!r} passed {separation_bound:g} with the "
                "likelihood still increasing; the data are (quasi-)separated"
            )

    try:
        vcov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        raise SingularDesignError("information matrix is singular at the optimum") from None
    vcov = (vcov + vcov.T) / 2.0
    return FittedModel(
        coefficients=beta,
        vcov=vcov,
        log_likelihood=ll,
        iterations=iterations,
        converged=True,
        n=n,
        column_names=names,
    )


def predict_prob(model: FittedModel, row) -> float | np.ndarray:
    """P(response = 1) for one design row (returns a float) or a stack of rows
    (returns a vector). Probabilities are strictly inside (0, 1): saturated
    predictors are clamped to the nearest representable interior value."""
    arr = np.asarray(row, dtype=float)
    eta = arr @ model.coefficients
    prob = 0.5 * (1.0 + np.tanh(0.5 * eta))
    prob = np.clip(prob, np.finfo(float).tiny, np.nextafter(1.0, 0.0))
    if arr.ndim == 1:
        return float(prob)
    return prob


def wald_table(model: FittedModel, level: float = 0.95) -> list[dict]:
    """Per-coefficient Wald summary: estimate, SE, z, two-sided p, CI."""
    if not 0.0 < level < 1.0:
        raise SchemaError(f"confidence level must be in (0, 1), got {level!r}")
    zq = float(stats.norm.ppf(0.5 + level / 2.0))
    rows = []
    ses = model.standard_errors
    for name, est, se in zip(model.column_names, model.coefficients, ses):
        z = est / se if se > 0 else np.inf * np.sign(est) if est else 0.0
        rows.append(
            {
                "term": name,
                "estimate": float(est),
                "se": float(se),
                "z": float(z),
                "p": float(2.0 * stats.norm.sf(abs(z))),
                "ci_lower": float(est - zq * se),
                "ci_upper": float(est + zq * se),
            }
        )
    return rows
