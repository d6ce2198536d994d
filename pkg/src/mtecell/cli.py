"""Command-line driver.

Exit codes: 0 success, 1 reproduction mismatch, 2 input error, 3 numeric error.
All randomness flows from --seed; identical invocations write identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import bayes, calibrate, decide, design as design_mod, dgp as dgp_mod
from . import estimate, figures, metrics, presets, reproduce, simulate
from .errors import InputError, NumericsError


def _load_json(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise InputError(f"{path}: no such file")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc


def _write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_moments(path) -> calibrate.StudyMoments:
    data = _load_json(path)
    try:
        return calibrate.StudyMoments(
            psi11=float(data["psi11"]), psi01=float(data["psi01"]),
            psi00=float(data["psi00"]), nu1=float(data["nu1"]),
            elig_share=float(data["elig_share"]),
            binary_outcome=bool(data.get("binary_outcome", True)))
    except KeyError as exc:
        raise InputError(f"{path}: moments file missing field {exc}") from exc


def _load_aggregates(path) -> calibrate.GaussianStudyAggregates:
    data = _load_json(path)
    try:
        return calibrate.GaussianStudyAggregates(
            sigma1=float(data["sigma1"]), sigma0=float(data["sigma0"]),
            rho1V=float(data["rho1V"]), mu01=float(data["mu01"]),
            mu02=float(data["mu02"]),
            d0_moments=tuple((float(a), float(b)) for a, b in data["d0_moments"]),
            d1_moments=tuple((float(a), float(b), float(c))
                             for a, b, c in data["d1_moments"]))
    except KeyError as exc:
        raise InputError(f"{path}: aggregates file missing field {exc}") from exc


def _load_lambda(path) -> estimate.LambdaCoefficients:
    data = _load_json(path)
    try:
        cond = data.get("condition_numbers", {})
        return estimate.LambdaCoefficients(
            tuple(data["lambda1"]), tuple(data["lambda0"]),
            cond_m1=cond.get("M1"), cond_m0=cond.get("M0"))
    except KeyError as exc:
        raise InputError(f"{path}: lambda file missing field {exc}") from exc


def _load_cost(path) -> design_mod.CostSpec:
    return design_mod.cost_from_dict(_load_json(path))


def _decision_spec(args) -> decide.DecisionSpec:
    if args.cost:
        cost = _load_cost(args.cost)
    else:
        cost = design_mod.CostSpec("power", scale=args.cost_scale,
                                   exponent=args.cost_exponent)
    return decide.DecisionSpec(delta=args.delta, cost=cost)


def _add_decision_args(p) -> None:
    p.add_argument("--delta", type=float, default=1.0,
                   help="value per conversion (default 1)")
    p.add_argument("--cost", help="cost spec JSON file")
    p.add_argument("--cost-scale", type=float, default=0.001,
                   help="power-cost scale when no --cost file (default 0.001)")
    p.add_argument("--cost-exponent", type=float, default=4.0,
                   help="power-cost exponent when no --cost file (default 4)")


# --- subcommands -------------------------------------------------------------

def cmd_calibrate(args) -> int:
    report = {}
    if args.family == "gaussian":
        agg = _load_aggregates(args.aggregates)
        fitted = calibrate.calibrate_gaussian(agg)
        report["inputs"] = {"aggregates": args.aggregates}
    else:
        moments = _load_moments(args.moments)
        report["inputs"] = {
            "psi11": moments.psi11, "psi01": moments.psi01,
            "psi00": moments.psi00, "nu1": moments.nu1,
            "elig_share": moments.elig_share}
        if args.family == "polynomial":
            if args.mte_coeffs is None:
                raise InputError("polynomial calibration needs --mte-coeffs a0 a1 a2 a3")
            fitted = calibrate.reconstruct_polynomial_dgp(
                moments, args.mte_coeffs, args.treated_curvature)
            report["caption_residual"] = calibrate.caption_residual(fitted, args.mte_coeffs)
        else:
            fitted = calibrate.calibrate_complex(moments)
        psi1, psi0 = dgp_mod.analytic_psi(fitted, moments.nu1)
        psi00 = dgp_mod.analytic_psi(fitted, 0.0)[1]
        report["roundtrip"] = {
            "psi11": psi1, "psi01": psi0, "psi00": psi00,
            "max_residual": max(abs(psi1 - moments.psi11),
                                abs(psi0 - moments.psi01),
                                abs(psi00 - moments.psi00))}
    report["dgp"] = dgp_mod.dgp_to_dict(fitted)
    violations = dgp_mod.binary_range_violations(fitted)
    report["range_check"] = {
        "violations": len(violations),
        "worst": (max((abs(min(v, 0.0)) + max(v - 1.0, 0.0), d, u, v)
                      for d, u, v in violations)[1:] if violations else None)}
    dgp_mod.save_dgp(fitted, args.out)
    if args.report:
        _write_json(report, args.report)
    print(f"wrote {args.out}")
    return 0


def cmd_validate_design(args) -> int:
    cell_design = design_mod.load_design(args.design)
    violations = design_mod.validate_design(cell_design)
    normalized = design_mod.design_to_dict(cell_design)
    if args.out:
        _write_json(normalized, args.out)
    else:
        print(json.dumps(normalized, indent=2, sort_keys=True))
    if violations:
        for v in violations:
            print(f"violation: {v}", file=sys.stderr)
        return 2
    print("design valid", file=sys.stderr)
    return 0


def cmd_plan_budget(args) -> int:
    cost = _load_cost(args.cost)
    cells = _load_json(args.cells)
    if not isinstance(cells, list):
        raise InputError(f"{args.cells}: expected a JSON list of cell share objects")
    planned = design_mod.plan_budget(args.budget, cost, cells)
    design_mod.save_design(planned, args.out, cost)
    print(f"wrote {args.out}")
    return 0


def cmd_simulate(args) -> int:
    the_dgp = dgp_mod.load_dgp(args.dgp)
    the_design = design_mod.load_design(args.design)
    counts = simulate.simulate_experiment(the_dgp, the_design, args.n, args.seed)
    simulate.save_counts_csv(counts, args.out)
    if args.json:
        simulate.save_counts_json(counts, args.json)
    print(f"wrote {args.out}")
    return 0


def cmd_estimate(args) -> int:
    if args.analytic:
        if not (args.dgp and args.design):
            raise InputError("--analytic needs --dgp and --design")
        the_dgp = dgp_mod.load_dgp(args.dgp)
        the_design = design_mod.load_design(args.design)
        moments = estimate.analytic_moments(the_dgp, the_design.propensities)
        lam = estimate.solve_lambda(moments)
    elif args.restriction:
        if not args.moments:
            raise InputError("a restricted fit needs --moments")
        m = _load_moments(args.moments)
        lam = estimate.single_cell_restricted(m.psi11, m.psi01, m.psi00, m.nu1,
                                              args.restriction)
    else:
        if not args.counts:
            raise InputError("estimation needs --counts (or --analytic / --restriction)")
        counts = simulate.load_counts_csv(args.counts)
        lam = estimate.solve_lambda(estimate.moments_from_counts(counts))
    _write_json(lam.to_dict(), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_bayes(args) -> int:
    counts = simulate.load_counts_csv(args.counts)
    prior = bayes.BetaPosterior(args.alpha, args.beta)
    post = bayes.draw_posterior_lambda(counts, args.draws, args.seed, prior=prior)
    _write_json(bayes.posterior_report(counts, post, prior), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_decide(args) -> int:
    spec = _decision_spec(args)
    sources = sum(bool(s) for s in (args.lam, args.dgp, args.counts))
    if sources != 1:
        raise InputError("choose exactly one of --lambda, --dgp, --counts")
    report: dict
    if args.counts:
        counts = simulate.load_counts_csv(args.counts)
        nu_star, report = decide.decide_from_experiment(
            counts, spec, args.draws, args.seed,
            prior=bayes.BetaPosterior(args.alpha, args.beta))
        rep_label = "posterior-mean"
    else:
        rep = _load_lambda(args.lam) if args.lam else dgp_mod.load_dgp(args.dgp)
        nu_star, profit_star = decide.optimize_nu(rep, spec, x=args.x)
        rep_label = "lambda" if args.lam else "true-dgp"
        report = decide.decision_report(rep, spec, nu_star, profit_star,
                                        representation=rep_label)
    if args.true_dgp:
        truth = dgp_mod.load_dgp(args.true_dgp)
        loss = decide.profit_loss(truth, spec, nu_star, x=args.x)
        report["absolute_loss"] = loss.absolute
        report["relative_loss"] = loss.relative
        report["relative_loss_with_baseline"] = loss.relative_with_baseline
        report["true_nu_star"] = loss.nu_star
    _write_json(report, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_compare(args) -> int:
    truth = dgp_mod.load_dgp(args.true_dgp)
    if args.approx_lambda:
        approx = _load_lambda(args.approx_lambda)
    elif args.approx_dgp:
        approx = dgp_mod.load_dgp(args.approx_dgp)
    else:
        raise InputError("comparison needs --approx-lambda or --approx-dgp")
    report = metrics.compare(truth, approx, x=args.x)
    _write_json(report.to_dict(), args.out)
    if args.grid or args.figures:
        rows = metrics.curve_grid(truth, approx, x=args.x)
        if args.grid:
            _write_grid_csv(rows, args.grid)
        if args.figures:
            fig_path = Path(args.out).with_suffix(".png")
            figures.render_mte_figure(rows, fig_path)
            print(f"wrote {fig_path}")
    print(f"wrote {args.out}")
    return 0


def _write_grid_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "mte_true", "mte_approx"])
        w.writerows(rows)


def cmd_pipeline(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    the_dgp = dgp_mod.load_dgp(args.dgp)
    the_design = design_mod.load_design(args.design)
    spec = _decision_spec(args)
    summary: dict = {"analytic": bool(args.analytic), "design": args.design,
                     "dgp": args.dgp}

    if args.analytic:
        moments = estimate.analytic_moments(the_dgp, the_design.propensities)
    else:
        if args.seed is None or args.n is None:
            raise InputError("simulated pipeline needs --n and --seed")
        counts = simulate.simulate_experiment(the_dgp, the_design, args.n, args.seed)
        simulate.save_counts_csv(counts, out / "counts.csv")
        moments = estimate.moments_from_counts(counts)
        summary["n"] = args.n
        summary["seed"] = args.seed

    lam = estimate.solve_lambda(moments)
    _write_json(lam.to_dict(), out / "lambda.json")

    report = metrics.compare(the_dgp, lam)
    with open(out / "metrics.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dgp", "design", "sup_norm", "l2_norm", "ate_norm"])
        w.writerow([args.dgp, args.design, report.sup_norm, report.l2_norm,
                    report.ate_norm])
    rows = metrics.curve_grid(the_dgp, lam)
    _write_grid_csv(rows, out / "grid.csv")

    nu_point, profit_point = decide.optimize_nu(lam, spec)
    loss_point = decide.profit_loss(the_dgp, spec, nu_point)
    decision = decide.decision_report(lam, spec, nu_point, profit_point,
                                      loss=loss_point, representation="lambda")
    summary["point_decision"] = decision

    if not args.analytic and args.draws:
        nu_bayes, bayes_report = decide.decide_from_experiment(
            counts, spec, args.draws, args.seed)
        loss_bayes = decide.profit_loss(the_dgp, spec, nu_bayes)
        bayes_report["absolute_loss"] = loss_bayes.absolute
        bayes_report["relative_loss"] = loss_bayes.relative
        bayes_report["relative_loss_with_baseline"] = loss_bayes.relative_with_baseline
        _write_json(bayes_report, out / "bayes_decision.json")
        summary["bayes_decision"] = {"nu_star": nu_bayes,
                                     "relative_loss": loss_bayes.relative}

    _write_json(decision, out / "decision.json")
    _write_json(summary, out / "summary.json")

    if args.figures:
        figures.render_mte_figure(rows, out / "mte.png")
        grid = np.linspace(0.0, 1.0, 1001)
        true_profit = np.array([decide.expected_profit(the_dgp, spec, v) for v in grid])
        fit_profit = np.array([decide.expected_profit(lam, spec, v) for v in grid])
        figures.render_profit_figure(
            grid, {"true": true_profit, "fitted": fit_profit}, out / "profit.png",
            marks={"nu*": loss_point.nu_star, "nu_hat": nu_point})
    print(f"wrote {out}/")
    return 0


def cmd_sequential(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    the_dgp = dgp_mod.load_dgp(args.dgp)
    if not isinstance(the_dgp, dgp_mod.GaussianDgp):
        raise InputError("the sequential path needs a gaussian-family DGP")
    counts = simulate.simulate_sequential(
        the_dgp, args.budgets, args.t, args.opportunities, args.n, args.seed)
    simulate.save_sequential_csv(counts, out / "sequential_counts.csv")

    summary: dict = {"budgets": list(counts.budgets), "t": counts.t,
                     "opportunities": counts.opportunities, "n": args.n,
                     "seed": args.seed, "per_exposure": {}, "naive": None}
    u_grid = np.linspace(0.001, 0.999, 999)
    true_curves = {}
    approx_curves = {}
    for x in range(counts.opportunities):
        label = f"x={x}"
        true_curves[label] = dgp_mod.mte_eval(the_dgp, u_grid, x)
        try:
            lam = estimate.sequential_estimate(counts, x)
        except NumericsError as exc:
            summary["per_exposure"][label] = {"error": str(exc)}
            continue
        _write_json(lam.to_dict(), out / f"lambda_x{x}.json")
        approx_curves[label] = lam.mte_at(u_grid)
        summary["per_exposure"][label] = lam.to_dict()
    naive = estimate.naive_estimate(counts)
    _write_json(naive.to_dict(), out / "lambda_naive.json")
    approx_curves["naive"] = naive.mte_at(u_grid)
    summary["naive"] = naive.to_dict()
    _write_json(summary, out / "summary.json")

    with open(out / "curves.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        labels = list(true_curves) + [f"fit {k}" for k in approx_curves]
        w.writerow(["u"] + labels)
        cols = list(true_curves.values()) + list(approx_curves.values())
        for i, u in enumerate(u_grid):
            w.writerow([u] + [float(col[i]) for col in cols])
    if args.figures:
        figures.render_sequential_figure(u_grid, true_curves, approx_curves,
                                         out / "sequential.png")
    print(f"wrote {out}/")
    return 0


def cmd_reproduce(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = reproduce.run_tables(args.tables)
    with open(out / "reproduce.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["key", "group", "expected", "actual", "tol", "kind",
                    "status", "note"])
        for row in rows:
            w.writerow(row.to_csv_row())
    failures = [r for r in rows if not r.passed]
    _write_json({"total": len(rows), "failed": len(failures),
                 "failures": [r.key for r in failures]}, out / "summary.json")
    if args.figures:
        _reproduce_figures(args.tables, out)
    for row in rows:
        status = "pass" if row.passed else "FAIL"
        gap = f"  [{row.note}]" if row.note else ""
        print(f"{status}  {row.key}: expected {row.expected:g} "
              f"(tol {row.tol:g} {row.kind}), got {row.actual:.6g}{gap}")
    print(f"{len(rows) - len(failures)}/{len(rows)} entries within tolerance")
    return 1 if failures else 0


def _reproduce_figures(tables, out: Path) -> None:
    design = presets.two_cell_design()
    if "table1" in tables or "table2" in tables:
        for which in (1, 2):
            the_dgp = presets.study4_dgp(which)
            lam = estimate.solve_lambda(
                estimate.analytic_moments(the_dgp, design.propensities))
            rows = metrics.curve_grid(the_dgp, lam)
            figures.render_mte_figure(rows, out / f"dgp{which}_mte.png",
                                      title=f"benchmark DGP {which}, two-cell fit")
    if "tableE1" in tables:
        cdgp = presets.study4_complex_dgp()
        grid = np.linspace(0.0, 1.0, 1001)
        curves = {}
        for name, dsgn in (("two", presets.two_cell_design()),
                           ("three", presets.three_cell_design()),
                           ("five", presets.five_cell_design())):
            lam = estimate.solve_lambda(
                estimate.analytic_moments(cdgp, dsgn.propensities))
            curves[f"{name}-cell"] = np.array(
                [decide.expected_profit(lam, presets.DECISION_COMPLEX, v) for v in grid])
        curves["true"] = np.array(
            [decide.expected_profit(cdgp, presets.DECISION_COMPLEX, v) for v in grid])
        figures.render_profit_figure(grid, curves, out / "complex_profit.png",
                                     title="complex benchmark: profit by design")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtecell",
        description="Multi-cell experiment planning, simulation, MTE recovery, "
                    "and reach decisions")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="fit a DGP to single-cell study moments")
    p.add_argument("--family", choices=("polynomial", "complex", "gaussian"),
                   required=True)
    p.add_argument("--moments", help="StudyMoments JSON (polynomial/complex)")
    p.add_argument("--aggregates", help="gaussian aggregates JSON")
    p.add_argument("--mte-coeffs", type=float, nargs=4, metavar=("A0", "A1", "A2", "A3"))
    p.add_argument("--treated-curvature", type=float, default=0.0,
                   help="anchor for the free common-curvature direction")
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("validate-design", help="check a design against the "
                                               "structural requirements")
    p.add_argument("--design", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate_design)

    p = sub.add_parser("plan-budget", help="turn a budget split into propensities")
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--cost", required=True)
    p.add_argument("--cells", required=True,
                   help="JSON list of {budget_share, elig_share[, assign_share]}")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plan_budget)

    p = sub.add_parser("simulate", help="simulate an experiment to counts")
    p.add_argument("--dgp", required=True)
    p.add_argument("--design", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--json", help="also write counts as JSON")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="recover lambda coefficients")
    p.add_argument("--counts")
    p.add_argument("--analytic", action="store_true",
                   help="use analytic moments of --dgp at --design propensities")
    p.add_argument("--dgp")
    p.add_argument("--design")
    p.add_argument("--moments", help="StudyMoments JSON for a restricted fit")
    p.add_argument("--restriction", choices=estimate.RESTRICTIONS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bayes", help="posterior draws of lambda")
    p.add_argument("--counts", required=True)
    p.add_argument("--draws", type=int, default=10_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bayes)

    p = sub.add_parser("decide", help="optimal reach for a representation")
    p.add_argument("--lambda", dest="lam", help="lambda JSON")
    p.add_argument("--dgp", help="true DGP JSON")
    p.add_argument("--counts", help="counts CSV (Bayesian decision)")
    p.add_argument("--draws", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--x", type=int, default=None,
                   help="exposure count for gaussian-family curves")
    p.add_argument("--true-dgp", help="evaluate the loss against this DGP")
    _add_decision_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("compare", help="norms between true and approximated MTE")
    p.add_argument("--true-dgp", required=True)
    p.add_argument("--approx-lambda")
    p.add_argument("--approx-dgp")
    p.add_argument("--x", type=int, default=None)
    p.add_argument("--grid", help="write (u, true, approx) CSV here")
    p.add_argument("--figures", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("pipeline", help="moments -> lambda -> metrics -> decision")
    p.add_argument("--dgp", required=True)
    p.add_argument("--design", required=True)
    p.add_argument("--analytic", action="store_true",
                   help="use analytic moments instead of simulating")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--draws", type=int, default=0,
                   help="posterior draws for the Bayesian decision (simulated runs)")
    _add_decision_args(p)
    p.add_argument("--figures", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("sequential", help="multi-exposure simulation and per-level fits")
    p.add_argument("--dgp", required=True)
    p.add_argument("--budgets", type=int, nargs="+", default=list(presets.SEQUENTIAL_BUDGETS))
    p.add_argument("--t", type=float, default=presets.SEQUENTIAL_T)
    p.add_argument("--opportunities", type=int, default=presets.SEQUENTIAL_OPPORTUNITIES)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--figures", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sequential)

    p = sub.add_parser("reproduce", help="rerun the bundled benchmark tables")
    p.add_argument("--tables", nargs="+", choices=reproduce.TABLES,
                   default=list(reproduce.TABLES))
    p.add_argument("--figures", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
