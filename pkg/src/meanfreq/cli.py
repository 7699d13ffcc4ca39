"""Command-line front end.

Every verb builds a :class:`Report` and a pass/fail verdict. The process
exit code is 0 when all verdicts pass, 1 when one fails, 2 for bad input
and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .frequency import (
    CONVERGENCE_RTOL,
    SPLIT_TOL,
    curvature_sandwich,
    ellipse_mean_frequency,
    ellipsoid_chain_bounds,
    ellipsoid_report,
    mean_frequency,
    section_interval,
)
from .jacobi import ATOL, RTOL, UNIT_CIRCLE_TOL, CurvatureProfile, IntegrationError
from .loop_ring import (
    CoefficientSpec,
    LoopRing,
    delta_level_check,
    duality_check,
    exactness_check,
    product_level_check,
    rank_check,
    resonance_report,
    round_critical_table,
)
from .metric_models import (
    EllipsoidModel,
    InvalidModelError,
    KatokModel,
    RoundSphereModel,
    load_model,
    reference_data,
    short_geodesics,
)
from .perturb import SCAN_TOL, Bump, PerturbationFamily, index_monotonicity_scan
from .suites import STAR_DS, STAR_TOL, STURM_TOL, SUITES

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
FREQUENCY_TOL = 1e-3
SIG_DIGITS = 12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


@dataclass
class Report:
    rows: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    passed: bool = True


# serialization ---------------------------------------------------------------


def _clean(value: Any) -> Any:
    """Normalize a cell: fixed significant digits, NaN/inf as null, numpy scalars unboxed."""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if not math.isfinite(x):
            return None
        return float(f"{x:.{SIG_DIGITS}g}")
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def to_json(report: Report) -> bytes:
    body = {"rows": _clean(report.rows), "metadata": _clean(report.metadata)}
    rows = json.dumps(body["rows"], sort_keys=True, separators=(",", ":"), allow_nan=False)
    meta = json.dumps(body["metadata"], sort_keys=True, separators=(",", ":"), allow_nan=False)
    return f'{{"rows":{rows},"metadata":{meta}}}\n'.encode()


def _csv_cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True, separators=(",", ":"))
    return str(v)


def to_csv(report: Report) -> bytes:
    rows = _clean(report.rows)
    keys = sorted({k for r in rows for k in r})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys)
    for r in rows:
        w.writerow([_csv_cell(r.get(k)) for k in keys])
    return buf.getvalue().encode()


def export(report: Report, fmt: str) -> bytes:
    if fmt == "json":
        return to_json(report)
    if fmt == "csv":
        return to_csv(report)
    raise ValueError(f"unknown format {fmt!r}")


# verbs ---------------------------------------------------------------------------


def _meta(verb: str, tolerances: dict, **extra) -> dict:
    return {"tool": "meanfreq", "version": __version__, "verb": verb, "tolerances": tolerances, **extra}


def _parse_pair(text: str) -> tuple[int, int]:
    try:
        i, j = (int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"--ellipse expects two comma-separated indices, got {text!r}") from None
    return i, j


def _parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _round_row(model: RoundSphereModel, periods: int, tol: float) -> dict:
    prof = CurvatureProfile.constant(model.K, model.n - 1, model.L, label="round")
    est = mean_frequency(prof, periods)
    ref = reference_data(model).mean_frequency
    return {
        "geodesic": "great circle",
        "length": model.L,
        "alpha_bar": est.mean_frequency,
        "reference": ref,
        "error": abs(est.mean_frequency - ref),
        "converged": est.converged,
        "verdict": abs(est.mean_frequency - ref) <= tol,
        "tol": tol,
    }


def _katok_rows(model: KatokModel) -> list[dict]:
    ref = reference_data(model)
    band = curvature_sandwich(model.n, [(1.0, 1.0)], source="sandwich")
    count = ref.geodesic_count or 0
    return [
        {
            "geodesic": f"katok-{i}",
            "length": None,
            "alpha_bar": ref.mean_frequency,
            "lower": band.lower,
            "upper": band.upper,
            "verdict": band.contains(ref.mean_frequency, tol=1e-12),
            "tol": 1e-12,
        }
        for i in range(count)
    ]


def cmd_frequency(args) -> Report:
    model = load_model(args.model)
    tol = args.tol
    if isinstance(model, RoundSphereModel):
        row = _round_row(model, args.periods, tol)
        return Report([row], _meta("frequency", {"alpha_bar": tol, "rtol": RTOL}), row["verdict"])
    if isinstance(model, KatokModel):
        ref = reference_data(model)
        rows = _katok_rows(model)
        meta = _meta("frequency", {"sandwich": 1e-12}, geodesic_count=ref.geodesic_count, rational=ref.rational_warning)
        return Report(rows, meta, bool(rows) and all(r["verdict"] for r in rows))
    assert isinstance(model, EllipsoidModel)
    pairs = [_parse_pair(args.ellipse)] if args.ellipse else [g.pair for g in short_geodesics(model)]
    chain = ellipsoid_chain_bounds(model) if model.n == 2 else {}
    rows = []
    for pair in pairs:
        est = ellipse_mean_frequency(model, pair, args.periods)
        bound = chain.get(tuple(sorted(pair))) or section_interval(model, pair)
        rows.append(
            {
                "geodesic": f"({pair[0]},{pair[1]})",
                "length": est.period,
                "alpha_bar": est.mean_frequency,
                "lower": bound.lower,
                "upper": bound.upper,
                "source": bound.source,
                "converged": est.converged,
                "error_estimate": est.error_estimate,
                "verdict": bound.contains(est.mean_frequency, tol=0.0 if bound.strict else tol),
                "tol": 0.0 if bound.strict else tol,
            }
        )
    meta = _meta("frequency", {"bound": tol, "convergence_rtol": CONVERGENCE_RTOL, "rtol": RTOL, "atol": ATOL})
    return Report(rows, meta, all(r["verdict"] for r in rows))


def cmd_ellipsoid(args) -> Report:
    model = load_model(args.model)
    if not isinstance(model, EllipsoidModel) or model.n != 2:
        raise InvalidModelError("the ellipsoid verb needs an ellipsoid with exactly three axes")
    rep = ellipsoid_report(model, args.periods, tol=args.tol)
    bounds = ellipsoid_chain_bounds(model)
    rows = [{**r.as_dict(), "tol": 0.0 if bounds[r.geodesic].strict else args.tol} for r in rep.rows]
    meta = _meta(
        "ellipsoid",
        {"bound": args.tol, "distinct": SPLIT_TOL, "rtol": RTOL},
        chain_ok=rep.chain_ok,
        all_distinct=rep.all_distinct,
    )
    return Report(rows, meta, rep.verdict)


def _coefficients(text: str) -> CoefficientSpec:
    try:
        return CoefficientSpec.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_resonance(args) -> Report:
    if args.n < 3:
        raise UsageError("--n must be at least 3")
    table = round_critical_table(args.n, args.L, args.max_degree, _coefficients(args.coefficients))
    rep = resonance_report(table)
    row = {**rep.as_dict(), "n": args.n, "L": args.L, "max_degree": args.max_degree, "tol": 0.0}
    meta = _meta("resonance", {"deviation": 0.0}, coefficients=str(table.ring.coefficients), exact=True)
    return Report([row], meta, rep.verdict)


def cmd_ring(args) -> Report:
    if args.n < 3:
        raise UsageError("--n must be at least 3")
    coeffs = _coefficients(args.coefficients)
    table = round_critical_table(args.n, args.L, args.max_degree, coeffs)
    checks = {
        "delta_level": delta_level_check(table),
        "product_level": product_level_check(table),
        "duality": duality_check(table),
        "rank": rank_check(table),
        "exactness": exactness_check(LoopRing(args.n, coeffs), args.exactness_depth),
    }
    rows = [{**r, "tol": 0.0} for r in table.rows()]
    summary = {name: {"ok": c.ok, "checked": c.checked, "violations": list(c.violations[:5])} for name, c in checks.items()}
    meta = _meta("ring", {"levels": 0.0}, checks=summary, coefficients=str(coeffs), exact=True)
    return Report(rows, meta, all(c.ok for c in checks.values()))


def cmd_perturb(args) -> Report:
    grid = _parse_floats(args.s_grid)
    prof = CurvatureProfile.constant(args.K, args.dim, args.period, label=f"K={args.K:g}")
    fam = PerturbationFamily(prof, Bump.centered(prof.period), args.kind, grid)
    res = index_monotonicity_scan(fam, periods=args.periods, tol=args.tol)
    rows = [
        {
            "s": r.s,
            "alpha_bar": r.alpha_bar,
            "average_index": r.average_index,
            "unit_circle": r.unit_circle_flag,
            "converged": r.converged,
            "tol": args.tol,
        }
        for r in res.records
    ]
    meta = _meta(
        "perturb",
        {"scan": args.tol, "unit_circle": UNIT_CIRCLE_TOL},
        verdict=res.verdict,
        nondecreasing=res.nondecreasing,
        hyperbolic=res.hyperbolic,
        kind=args.kind,
    )
    return Report(rows, meta, not res.both_arms_false)


_SUITE_TOLS = {
    "sturm": {"first_conjugate": STURM_TOL},
    "star": {"relative_error": STAR_TOL, "ds": STAR_DS},
    "plus-curve": {"positive_definite": 1e-10},
    "dichotomy": {"scan": SCAN_TOL},
}


def cmd_verify(args) -> Report:
    fn: Callable = SUITES[args.suite]
    kwargs = {"seed": args.seed}
    if args.trials is not None:
        kwargs["trials"] = args.trials
    res = fn(**kwargs)
    meta = _meta(
        "verify",
        _SUITE_TOLS[args.suite],
        suite=res.name,
        seed=res.seed,
        trials=res.trials,
        violations=res.violations,
    )
    return Report(list(res.rows), meta, res.passed)


# parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="meanfreq", description="Mean frequencies of closed geodesics and loop-space resonance.")
    p.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--timing", action="store_true", help="record wall time in the metadata (breaks byte determinism)")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    f = sub.add_parser("frequency", parents=[common], help="mean frequency of closed geodesics of a model")
    f.add_argument("--model", required=True, help="inline JSON or path to a JSON file")
    f.add_argument("--ellipse", help="axis pair i,j of an ellipsoid")
    f.add_argument("--periods", type=int, default=50)
    f.add_argument("--tol", type=float, default=FREQUENCY_TOL)
    f.set_defaults(func=cmd_frequency)

    e = sub.add_parser("ellipsoid", parents=[common], help="three short geodesics of a 2-dimensional ellipsoid")
    e.add_argument("--model", required=True)
    e.add_argument("--periods", type=int, default=50)
    e.add_argument("--tol", type=float, default=1e-4)
    e.set_defaults(func=cmd_ellipsoid)

    for name, func, helptext in (
        ("resonance", cmd_resonance, "global mean frequency from the round critical table"),
        ("ring", cmd_ring, "critical table of loop homology with exactness checks"),
    ):
        r = sub.add_parser(name, parents=[common], help=helptext)
        r.add_argument("--n", type=int, required=True)
        r.add_argument("--L", type=float, default=2 * math.pi)
        r.add_argument("--max-degree", type=int, default=100)
        r.add_argument("--coefficients", default="Z", help="Z, Q or mod-p")
        if name == "ring":
            r.add_argument("--exactness-depth", type=int, default=50)
        r.set_defaults(func=func)

    q = sub.add_parser("perturb", parents=[common], help="index monotonicity scan over a bump family")
    q.add_argument("--K", type=float, default=1.0, help="constant base curvature")
    q.add_argument("--dim", type=int, default=1)
    q.add_argument("--period", type=float, default=2 * math.pi)
    q.add_argument("--kind", choices=("curvature", "length"), default="curvature")
    q.add_argument("--s-grid", default="0,0.05,0.1,0.2")
    q.add_argument("--periods", type=int, default=50)
    q.add_argument("--tol", type=float, default=SCAN_TOL)
    q.set_defaults(func=cmd_perturb)

    v = sub.add_parser("verify", parents=[common], help="seeded randomized property suites")
    v.add_argument("suite", choices=tuple(SUITES))
    v.add_argument("--trials", type=int)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)
    return p


@dataclass(frozen=True)
class Outcome:
    code: int
    payload: bytes = b""
    message: str = ""
    output: str | None = None


def run(argv: Sequence[str] | None = None) -> Outcome:
    """Parse, dispatch and serialize without touching stdout."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return Outcome(EXIT_INPUT, message=f"meanfreq: error: {exc}")
    start = time.perf_counter()
    try:
        report = args.func(args)
    except (InvalidModelError, UsageError) as exc:
        return Outcome(EXIT_INPUT, message=f"meanfreq: error: {exc}")
    except (IntegrationError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return Outcome(EXIT_NUMERIC, message=f"meanfreq: numerical failure: {exc}")
    except ValueError as exc:
        return Outcome(EXIT_INPUT, message=f"meanfreq: error: {exc}")
    if args.timing:
        report.metadata["wall_time"] = time.perf_counter() - start
    report.metadata["passed"] = report.passed
    code = EXIT_OK if report.passed else EXIT_FAIL
    return Outcome(code, export(report, args.format), output=args.output)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        out = run(argv)
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    if out.message:
        print(out.message, file=sys.stderr)
    if out.payload:
        if out.output:
            with open(out.output, "wb") as fh:
                fh.write(out.payload)
        else:
            sys.stdout.buffer.write(out.payload)
            sys.stdout.flush()
    return out.code


if __name__ == "__main__":
    raise SystemExit(main())
