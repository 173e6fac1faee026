#!/usr/bin/env python3
"""Benchmark the IRLS logistic fitter: numba kernels vs the numpy fallback.

Simulates a dataset from the bundled ``microcredit_table1`` coefficient set
(three covariates, giving a seven-column outcome design and a two-column
mediator design) and times repeated fits of both models under each kernel
backend.  The numba kernels are warmed up before timing so JIT compilation
is excluded from the numbers.

Usage:
    python benchmarks/bench_irls.py --n 200000 --repeats 5
"""

from __future__ import annotations

import argparse
import statistics
from time import perf_counter

from ormediate import _kernels, build_design, fit, simulate_dataset
from ormediate.io import load_coefficients


def build_problems(n: int, seed: int) -> list[tuple]:
    coef = load_coefficients("microcredit_table1")
    data = simulate_dataset(
        coef.spec,
        coef.outcome,
        coef.mediator,
        n,
        seed=seed,
        covariate_marginals=coef.covariate_marginals,
        exposure_marginal=coef.exposure_marginal,
    )
    return [
        build_design(data, coef.spec, "outcome"),
        build_design(data, coef.spec, "mediator"),
    ]


def time_backend(name: str, problems: list[tuple], repeats: int) -> tuple[float, float]:
    resolved = _kernels.use(name)
    if resolved != name:
        raise RuntimeError(f"backend {name!r} unavailable (resolved to {resolved!r})")
    for design, response in problems:  # warm-up: triggers JIT on the numba path
        fit(design, response)
    times = []
    for _ in range(repeats):
        start = perf_counter()
        for design, response in problems:
            fit(design, response)
        times.append(perf_counter() - start)
    return min(times), statistics.mean(times)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=200_000, help="rows to simulate")
    parser.add_argument("--repeats", type=int, default=5, help="timed repetitions")
    parser.add_argument("--seed", type=int, default=0, help="simulation seed")
    args = parser.parse_args()

    problems = build_problems(args.n, args.seed)
    n_cols = sum(design.shape[1] for design, _ in problems)
    print(
        f"IRLS benchmark: {args.n} rows, outcome + mediator fits "
        f"({n_cols} columns total), best of {args.repeats} repeats"
    )

    results = {}
    for backend in ("numba", "numpy"):
        try:
            results[backend] = time_backend(backend, problems, args.repeats)
        except RuntimeError as exc:
            print(f"{backend:>8}s: skipped ({exc})")
    _kernels.use("auto")

    print(f"{'backend':>8}  {'best':>10}  {'mean':>10}")
    for backend, (best, mean) in results.items():
        print(f"{backend:>8}  {best:>9.4f}s  {mean:>9.4f}s")
    if len(results) == 2:
        speedup = results["numpy"][0] / results["numba"][0]
        print(f"speedup (numpy best / numba best): {speedup:.2f}x")


if __name__ == "__main__":
    main()
