"""Command-line surface.

Subcommands:

* ``fit`` — read a CSV dataset, fit both logistic models, and report
  per-profile effect estimates with delta-method inference.
* ``effects`` — compute effects straight from a coefficient file (or from a
  previous fit report); inference when the file carries covariance matrices,
  point estimates otherwise.
* ``simulate`` — draw a synthetic dataset from a coefficient file's models
  and marginals, deterministically from ``--seed``.
* ``compare`` — sweep the outcome intercept over a grid and tabulate the
  exact effects against their rare-outcome approximations.
* ``verify`` — run the randomized self-verification suites.

Exit codes: 0 success, 2 schema/usage, 3 fit failure, 4 numerical
degeneracy, 5 verification failure.  Errors print a single
``ERROR <code>: message`` line on stderr.  Output contains no timestamps or
environment detail, so identical invocations produce identical bytes.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from . import __version__, _kernels
from .delta import InferenceResult, infer
from .effects import EFFECT_ORDER, EffectSet, approx_effects, natural_effects, special_case_report
from .exceptions import FitError, MediationError, NumericalError, SchemaError
from .io import (
    REPORT_FORMAT,
    CoefficientSet,
    bind_dataset,
    coefficients_to_doc,
    dataset_columns,
    load_coefficients,
    profile_values,
    read_table,
    save_json,
    write_table,
)
from .logit import fit as fit_logistic
from .logit import wald_table
from .model import (
    Contrast,
    CovariateProfile,
    MediatorParams,
    ModelSpec,
    OutcomeParams,
    build_design,
)
from .simulate import simulate_dataset
from .verify import run_all

__all__ = ["main"]

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_FIT = 3
EXIT_NUMERIC = 4
EXIT_VERIFY = 5

_INTERACTION_BLOCKS = ("xz", "wz", "xwz", "xv")
_DEFAULT_GRID = "-2,-4,-6,-8,-10,-12,-14"


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ormediate",
        description=(
            "Exact causal mediation effects on the odds-ratio scale for a "
            "binary outcome and binary mediator, both fit by logistic "
            "regression."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add_output(p):
        p.add_argument("--output", default=None, help="write the JSON report here")

    def add_contrast(p):
        p.add_argument("--x", type=float, default=None,
                       help="active exposure level (default: coefficient file, else 1)")
        p.add_argument("--x-star", dest="x_star", type=float, default=None,
                       help="reference exposure level (default: coefficient file, else 0)")

    def add_profiles(p):
        p.add_argument("--profile", action="append", default=[], metavar="NAME=VALUE,...",
                       help="covariate profile as comma-separated name=value pairs "
                            "(repeatable)")

    def add_level(p):
        p.add_argument("--level", type=float, default=0.95,
                       help="confidence level (default 0.95)")

    p = sub.add_parser("fit", help="fit both models from a CSV dataset and report effects")
    p.add_argument("--input", required=True, help="CSV dataset with a header row")
    p.add_argument("--outcome", default="y", help="outcome column (default y)")
    p.add_argument("--mediator", default="w", help="mediator column (default w)")
    p.add_argument("--exposure", default="x", help="exposure column (default x)")
    p.add_argument("--z", default="", metavar="NAMES",
                   help="comma-separated outcome-model covariate columns")
    p.add_argument("--v", default="", metavar="NAMES",
                   help="comma-separated mediator-model covariate columns")
    p.add_argument("--interactions", default="", metavar="BLOCKS",
                   help="comma-separated interaction blocks to include out of "
                        "xz, wz, xwz, xv (xwz implies xz and wz)")
    add_contrast(p)
    add_profiles(p)
    add_level(p)
    add_output(p)
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("effects", help="compute effects from a coefficient file")
    p.add_argument("--coef-file", required=True, dest="coef_file",
                   help="coefficient JSON file, fit report, or bundled fixture name")
    add_contrast(p)
    add_profiles(p)
    add_level(p)
    add_output(p)
    p.set_defaults(handler=_cmd_effects)

    p = sub.add_parser("simulate", help="draw a synthetic dataset from a coefficient file")
    p.add_argument("--coef-file", required=True, dest="coef_file")
    p.add_argument("--n", type=int, required=True, help="number of rows")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--output", required=True, help="CSV path to write")
    p.add_argument("--outcome", default="y", help="outcome column name (default y)")
    p.add_argument("--mediator", default="w", help="mediator column name (default w)")
    p.add_argument("--exposure", default="x", help="exposure column name (default x)")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("compare", help="exact vs rare-outcome approximation over an intercept grid")
    p.add_argument("--coef-file", required=True, dest="coef_file")
    p.add_argument("--grid", default=_DEFAULT_GRID, metavar="B0,B0,...",
                   help=f"outcome intercepts to sweep (default {_DEFAULT_GRID})")
    add_contrast(p)
    add_profiles(p)
    add_output(p)
    p.set_defaults(handler=_cmd_compare)

    p = sub.add_parser("verify", help="run the randomized self-verification suites")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--count", type=int, default=1000,
                   help="draws per suite (default 1000)")
    p.add_argument("--perturb", type=float, default=0.0,
                   help="fault-injection offset; nonzero values must fail")
    add_output(p)
    p.set_defaults(handler=_cmd_verify)

    return parser


def _parse_names(text: str) -> tuple[str, ...]:
    return tuple(token.strip() for token in text.split(",") if token.strip())


def _parse_interactions(text: str) -> set[str]:
    tokens = set(_parse_names(text))
    unknown = tokens - set(_INTERACTION_BLOCKS)
    if unknown:
        raise SchemaError(
            f"unknown interaction blocks {sorted(unknown)}; "
            f"choose from {', '.join(_INTERACTION_BLOCKS)}"
        )
    if "xwz" in tokens:
        tokens |= {"xz", "wz"}
    return tokens


def _parse_profiles(spec: ModelSpec, texts) -> list[tuple[str, CovariateProfile]]:
    out = []
    for i, text in enumerate(texts, start=1):
        mapping: dict[str, float] = {}
        for item in _parse_names(text):
            if "=" not in item:
                raise SchemaError(
                    f"profile entries must be name=value pairs, got {item!r}"
                )
            key, _, raw = item.partition("=")
            key = key.strip()
            if key in mapping:
                raise SchemaError(f"profile sets {key!r} twice")
            try:
                mapping[key] = float(raw)
            except ValueError:
                raise SchemaError(f"profile value for {key!r} is not a number: {raw!r}")
        out.append((f"profile{i}", CovariateProfile.from_named(spec, mapping)))
    return out


def _parse_grid(text: str) -> list[float]:
    try:
        grid = [float(token) for token in _parse_names(text)]
    except ValueError as exc:
        raise SchemaError(f"--grid must be comma-separated numbers: {exc}")
    if not grid:
        raise SchemaError("--grid is empty")
    return grid


def _check_contrast(x: float, x_star: float) -> None:
    if x == x_star:
        raise NumericalError(
            f"degenerate contrast: x and x* are both {x!r}, every effect is "
            "identically 1"
        )


def _resolve_levels(args, coef: CoefficientSet) -> tuple[float, float]:
    stored = coef.exposure_levels or (1.0, 0.0)
    x = stored[0] if args.x is None else args.x
    x_star = stored[1] if args.x_star is None else args.x_star
    return x, x_star


def _resolve_profiles(args, coef: CoefficientSet) -> list[tuple[str, CovariateProfile]]:
    if args.profile:
        return _parse_profiles(coef.spec, args.profile)
    if coef.profiles:
        return list(coef.profiles)
    if not coef.spec.covariate_names():
        return [("baseline", CovariateProfile())]
    raise SchemaError(
        "the model has covariates but no profiles are available; pass --profile "
        "or use a coefficient file that bundles profiles"
    )


# ---------------------------------------------------------------------------
# report assembly
# ---------------------------------------------------------------------------


def _model_doc(model, level: float) -> dict:
    return {
        "n": model.n,
        "log_likelihood": model.log_likelihood,
        "iterations": model.iterations,
        "converged": model.converged,
        "terms": wald_table(model, level),
    }


def _inference_entries(result: InferenceResult) -> list[dict]:
    return [
        {
            "name": e.name,
            "log": e.log_estimate,
            "odds_ratio": e.or_estimate,
            "se_log": e.se_log,
            "se_or": e.se_or,
            "ci_lower": e.ci_lower,
            "ci_upper": e.ci_upper,
            "p_value": e.p_value,
        }
        for e in (*result.effects, *result.cde)
    ]


def _point_entries(effect_set: EffectSet) -> list[dict]:
    ors = effect_set.odds_ratios()
    logs = dict(zip(EFFECT_ORDER, effect_set.log_values()))
    logs["cde0"] = effect_set.log_cde_at[0]
    logs["cde1"] = effect_set.log_cde_at[1]
    return [
        {"name": name, "log": logs[name], "odds_ratio": ors[name]}
        for name in (*EFFECT_ORDER, "cde0", "cde1")
    ]


def _effect_table(name: str, spec: ModelSpec, profile: CovariateProfile, entries) -> dict:
    return {
        "profile": name,
        "values": profile_values(spec, profile),
        "effects": entries,
    }


def _report(command: str, config: dict, **sections) -> dict:
    doc = {
        "format": REPORT_FORMAT,
        "version": 1,
        "command": command,
        "config": config,
    }
    doc.update(sections)
    return doc


def _emit(doc: dict, output: str | None) -> None:
    for line in _render(doc):
        print(line)
    if output:
        save_json(doc, output)


# ---------------------------------------------------------------------------
# text rendering
# ---------------------------------------------------------------------------


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _render(doc: dict) -> list[str]:
    lines: list[str] = []
    if "models" in doc:
        for which in ("outcome", "mediator"):
            lines += _render_model(which, doc["models"][which])
            lines.append("")
    if "effects" in doc:
        contrast = doc["config"]
        lines.append(
            f"exposure contrast: x={_fmt(contrast['x'])} vs x*={_fmt(contrast['x_star'])}"
        )
        for table in doc["effects"]:
            lines.append("")
            lines += _render_effect_table(table)
    if "rows" in doc:
        lines += _render_compare(doc)
    if "suites" in doc:
        lines += [suite["line"] for suite in doc["suites"]]
        total = len(doc["suites"])
        passed = sum(suite["passed"] for suite in doc["suites"])
        lines.append(f"{passed}/{total} suites passed")
    notes = doc.get("diagnostics", {}).get("notes", [])
    if notes:
        lines.append("")
        lines += [f"note: {note}" for note in notes]
    return lines


def _render_model(which: str, model: dict) -> list[str]:
    lines = [
        f"{which} model: n={model['n']}, log-likelihood={_fmt(model['log_likelihood'])}, "
        f"iterations={model['iterations']}, "
        f"converged={'yes' if model['converged'] else 'no'}"
    ]
    width = max(len(t["term"]) for t in model["terms"])
    lines.append(
        f"  {'term':<{width}}  {'estimate':>12}  {'se':>12}  {'z':>9}  {'p':>10}"
    )
    for t in model["terms"]:
        lines.append(
            f"  {t['term']:<{width}}  {t['estimate']:>12.6g}  {t['se']:>12.6g}  "
            f"{t['z']:>9.3f}  {t['p']:>10.3g}"
        )
    return lines


def _render_effect_table(table: dict) -> list[str]:
    values = ", ".join(f"{k}={_fmt(v)}" for k, v in table["values"].items())
    lines = [f"profile {table['profile']}" + (f": {values}" if values else "")]
    entries = table["effects"]
    with_se = "se_log" in entries[0]
    if with_se:
        lines.append(
            f"  {'effect':<6}  {'odds-ratio':>11}  {'log':>9}  {'se(log)':>9}  "
            f"{'ci-lower':>10}  {'ci-upper':>10}  {'p':>10}"
        )
        for e in entries:
            lines.append(
                f"  {e['name']:<6}  {e['odds_ratio']:>11.6g}  {e['log']:>9.4f}  "
                f"{e['se_log']:>9.4f}  {e['ci_lower']:>10.6g}  {e['ci_upper']:>10.6g}  "
                f"{e['p_value']:>10.3g}"
            )
    else:
        lines.append(f"  {'effect':<6}  {'odds-ratio':>11}  {'log':>9}")
        for e in entries:
            lines.append(
                f"  {e['name']:<6}  {e['odds_ratio']:>11.6g}  {e['log']:>9.4f}"
            )
    return lines


def _render_compare(doc: dict) -> list[str]:
    profile = doc["profile"]
    values = ", ".join(f"{k}={_fmt(v)}" for k, v in profile["values"].items())
    lines = [
        f"profile {profile['name']}" + (f": {values}" if values else ""),
        f"  {'beta0':>7}  {'effect':<6}  {'log-exact':>11}  {'log-approx':>11}  {'gap':>10}",
    ]
    for row in doc["rows"]:
        lines.append(
            f"  {row['beta0']:>7.4g}  {row['effect']:<6}  {row['log_exact']:>11.6f}  "
            f"{row['log_approx']:>11.6f}  {row['gap']:>10.3e}"
        )
    return lines


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_fit(args) -> int:
    columns = read_table(args.input)
    z = _parse_names(args.z)
    v = _parse_names(args.v)
    blocks = _parse_interactions(args.interactions)
    spec = ModelSpec(
        z_names=z,
        v_names=v,
        xz="xz" in blocks,
        wz="wz" in blocks,
        xwz="xwz" in blocks,
        xv="xv" in blocks,
    )
    data = bind_dataset(
        columns,
        outcome=args.outcome,
        mediator=args.mediator,
        exposure=args.exposure,
        covariates=spec.covariate_names(),
    )
    data.validate_against(spec)
    x = 1.0 if args.x is None else args.x
    x_star = 0.0 if args.x_star is None else args.x_star
    _check_contrast(x, x_star)

    design_y, y = build_design(data, spec, "outcome")
    outcome_fit = fit_logistic(design_y, y, column_names=spec.outcome_terms())
    design_w, w = build_design(data, spec, "mediator")
    mediator_fit = fit_logistic(design_w, w, column_names=spec.mediator_terms())
    outcome = OutcomeParams.from_vector(spec, outcome_fit.coefficients)
    mediator = MediatorParams.from_vector(spec, mediator_fit.coefficients)

    if args.profile:
        profiles = _parse_profiles(spec, args.profile)
        profile_source = "given"
    else:
        profiles = [("mean", data.mean_profile(spec))]
        profile_source = "sample-means"

    tables = []
    for name, prof in profiles:
        result = infer(spec, outcome_fit, mediator_fit, Contrast(x, x_star, prof),
                       level=args.level)
        tables.append(_effect_table(name, spec, prof, _inference_entries(result)))

    cases = special_case_report(outcome, mediator, Contrast(x, x_star, profiles[0][1]))
    coef_doc = coefficients_to_doc(
        spec,
        outcome,
        mediator,
        outcome_vcov=outcome_fit.vcov,
        mediator_vcov=mediator_fit.vcov,
        exposure_levels=(x, x_star),
        profiles=tuple(profiles),
        description=f"fitted from {args.input} (n={data.n})",
    )
    doc = _report(
        "fit",
        {
            "input": str(args.input),
            "outcome": args.outcome,
            "mediator": args.mediator,
            "exposure": args.exposure,
            "z": list(z),
            "v": list(v),
            "interactions": sorted(blocks),
            "x": x,
            "x_star": x_star,
            "level": args.level,
            "profile_source": profile_source,
        },
        models={
            "outcome": _model_doc(outcome_fit, args.level),
            "mediator": _model_doc(mediator_fit, args.level),
        },
        coefficients=coef_doc,
        effects=tables,
        diagnostics={
            "backend": _kernels.active_backend(),
            "notes": list(cases.identities),
        },
    )
    _emit(doc, args.output)
    return EXIT_OK


def _cmd_effects(args) -> int:
    coef = load_coefficients(args.coef_file)
    x, x_star = _resolve_levels(args, coef)
    _check_contrast(x, x_star)
    profiles = _resolve_profiles(args, coef)

    tables = []
    if coef.has_vcov:
        outcome_fit, mediator_fit = coef.fitted_models()
        for name, prof in profiles:
            result = infer(coef.spec, outcome_fit, mediator_fit,
                           Contrast(x, x_star, prof), level=args.level)
            tables.append(_effect_table(name, coef.spec, prof,
                                        _inference_entries(result)))
        mode = "inference"
    else:
        for name, prof in profiles:
            effect_set = natural_effects(coef.outcome, coef.mediator,
                                         Contrast(x, x_star, prof))
            tables.append(_effect_table(name, coef.spec, prof,
                                        _point_entries(effect_set)))
        mode = "point-estimates"

    cases = special_case_report(coef.outcome, coef.mediator,
                                Contrast(x, x_star, profiles[0][1]))
    notes = list(cases.identities)
    if not coef.has_vcov:
        notes.append("no covariance matrices in the coefficient file: "
                     "point estimates only")
    coef_doc = coefficients_to_doc(
        coef.spec,
        coef.outcome,
        coef.mediator,
        outcome_vcov=coef.outcome_vcov,
        mediator_vcov=coef.mediator_vcov,
        exposure_levels=(x, x_star),
        profiles=tuple(profiles),
        exposure_marginal=coef.exposure_marginal,
        covariate_marginals=coef.covariate_marginals,
        description=coef.description,
    )
    doc = _report(
        "effects",
        {
            "coef_file": str(args.coef_file),
            "x": x,
            "x_star": x_star,
            "level": args.level,
            "mode": mode,
        },
        coefficients=coef_doc,
        effects=tables,
        diagnostics={"notes": notes},
    )
    _emit(doc, args.output)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    coef = load_coefficients(args.coef_file)
    if args.n < 0:
        raise SchemaError(f"--n must be non-negative, got {args.n}")
    data = simulate_dataset(
        coef.spec,
        coef.outcome,
        coef.mediator,
        args.n,
        args.seed,
        covariate_marginals=coef.covariate_marginals,
        exposure_marginal=coef.exposure_marginal,
    )
    columns = dataset_columns(
        data, outcome=args.outcome, mediator=args.mediator, exposure=args.exposure
    )
    write_table(args.output, columns)
    print(f"wrote {data.n} rows ({', '.join(columns)}) to {args.output}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    coef = load_coefficients(args.coef_file)
    x, x_star = _resolve_levels(args, coef)
    _check_contrast(x, x_star)
    name, prof = _resolve_profiles(args, coef)[0]
    contrast = Contrast(x, x_star, prof)
    grid = _parse_grid(args.grid)

    rows = []
    for beta0 in grid:
        vector = coef.outcome.active_vector()
        vector[0] = beta0
        outcome = OutcomeParams.from_vector(coef.spec, vector)
        exact = dict(zip(EFFECT_ORDER, natural_effects(outcome, coef.mediator, contrast).log_values()))
        approx = dict(zip(EFFECT_ORDER, approx_effects(outcome, coef.mediator, contrast).log_values()))
        for effect in EFFECT_ORDER:
            rows.append(
                {
                    "beta0": beta0,
                    "effect": effect,
                    "log_exact": exact[effect],
                    "log_approx": approx[effect],
                    "gap": abs(exact[effect] - approx[effect]),
                }
            )

    doc = _report(
        "compare",
        {
            "coef_file": str(args.coef_file),
            "x": x,
            "x_star": x_star,
            "grid": grid,
        },
        profile={"name": name, "values": profile_values(coef.spec, prof)},
        rows=rows,
    )
    _emit(doc, args.output)
    return EXIT_OK


def _cmd_verify(args) -> int:
    if args.count < 0:
        raise SchemaError(f"--count must be non-negative, got {args.count}")
    results = run_all(seed=args.seed, count=args.count, perturb=args.perturb)
    passed = all(r.passed for r in results)
    doc = _report(
        "verify",
        {"seed": args.seed, "count": args.count, "perturb": args.perturb},
        suites=[{**dataclasses.asdict(r), "line": r.line()} for r in results],
        passed=passed,
    )
    _emit(doc, args.output)
    return EXIT_OK if passed else EXIT_VERIFY


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _fail(code: int, exc: Exception) -> int:
    print(f"ERROR {code}: {exc}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except SchemaError as exc:
        return _fail(EXIT_SCHEMA, exc)
    except FitError as exc:
        return _fail(EXIT_FIT, exc)
    except NumericalError as exc:
        return _fail(EXIT_NUMERIC, exc)
    except MediationError as exc:
        return _fail(EXIT_SCHEMA, exc)


if __name__ == "__main__":
    sys.exit(main())
