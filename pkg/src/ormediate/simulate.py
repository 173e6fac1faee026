"""Synthetic data generation from known coefficients.

Columns are drawn in a fixed order from a single seeded generator — covariates
(in ``spec.covariate_names()`` order), then exposure, then the mediator and
outcome uniforms — so a seed pins the dataset down byte for byte.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from .exceptions import SchemaError
from .model import Dataset, MediatorParams, ModelSpec, OutcomeParams, mediator_design, outcome_design

__all__ = ["Marginal", "simulate_dataset"]


@dataclass(frozen=True)
class Marginal:
    """Sampling law for one simulated column: bernoulli(p) or uniform(low, high)."""

    kind: str
    p: float = 0.5
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if self.kind == "bernoulli":
            if not 0.0 <= self.p <= 1.0:
                raise SchemaError(f"bernoulli probability {self.p!r} outside [0, 1]")
        elif self.kind == "uniform":
            if not (math.isfinite(self.low) and math.isfinite(self.high)) or (
                self.high < self.low
            ):
                raise SchemaError(f"bad uniform range [{self.low!r}, {self.high!r}]")
        else:
            raise SchemaError(f"unknown marginal kind {self.kind!r}")

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "bernoulli":
            return (rng.random(n) < self.p).astype(float)
        return rng.uniform(self.low, self.high, n)


def _probs(design: np.ndarray, coefs: np.ndarray) -> np.ndarray:
    eta = design @ coefs
    return 0.5 * (1.0 + np.tanh(0.5 * eta))


def simulate_dataset(
    spec: ModelSpec,
    outcome: OutcomeParams,
    mediator: MediatorParams,
    n: int,
    seed: int,
    covariate_marginals: Mapping[str, Marginal] | None = None,
    exposure_marginal: Marginal | None = None,
) -> Dataset:
    """Draw n rows from the joint law the two models imply.

    Covariates and the exposure come from their declared marginals (default
    bernoulli(0.5)); the mediator is drawn from its model given (x, v) and the
    outcome from its model given (x, w, z).
    """
    if spec != outcome.spec or spec != mediator.spec:
        raise SchemaError("parameters do not belong to the given model spec")
    if n < 0:
        raise SchemaError(f"row count must be non-negative, got {n}")
    marginals = dict(covariate_marginals or {})
    unknown = sorted(set(marginals) - set(spec.covariate_names()))
    if unknown:
        raise SchemaError(f"marginals given for unknown covariates {unknown}")
    default = Marginal("bernoulli", p=0.5)
    rng = np.random.default_rng(seed)

    covariates = {
        name: marginals.get(name, default).draw(rng, n) for name in spec.covariate_names()
    }
    x = (exposure_marginal or default).draw(rng, n)
    w = (rng.random(n) < _probs(mediator_design(spec, x, covariates), mediator.active_vector())
         ).astype(float)
    y = (rng.random(n) < _probs(outcome_design(spec, x, w, covariates), outcome.active_vector())
         ).astype(float)
    return Dataset(y=y, w=w, x=x, covariates=covariates)
