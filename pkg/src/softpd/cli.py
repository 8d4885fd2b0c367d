"""Command-line entry point: ``softpd <command> [options]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .algorithms import epsilon_curve, ls_spd, spd_od
from .evaluation import canonical_json, evaluate_classifier, random_instance, threshold_to_dict
from .formats import FormatError, load_dataset, load_model, load_points, load_sites, save_model
from .formulations import (
    UnboundedProgram,
    build_pspd_fixed,
    build_soft,
    extract_hard_solution,
    extract_soft_solution,
    max_errors,
    sigma_matrix,
    soft_objective,
)
from .free_sites import LocalSolveError, local_optimize
from .geometry import GeometryError, SiteSet, extract_errors, verify_separating
from .lp import LpError, solve, write_mps
from .svg import emit_svg


class CliError(Exception):
    """Input that cannot be processed; reported with exit status 2."""


def _load_train(args):
    source = args.train
    if source is None:
        raise CliError("--train is required")
    if source.startswith("demo:"):
        try:
            n, k, d = (int(v) for v in source[5:].split(","))
        except ValueError:
            raise CliError("demo data is requested as demo:N,K,D") from None
        data = random_instance(np.random.default_rng(args.seed), n, k, d)
        return data, {str(i + 1): i for i in range(k)}
    return load_dataset(source, args.format)


def _sites(args, data) -> SiteSet:
    if args.sites == "means":
        return SiteSet.means_of(data)
    sites = load_sites(args.sites)
    if sites.k != data.k or sites.d != data.d:
        raise CliError(f"site file has {sites.k}x{sites.d} entries, data needs {data.k}x{data.d}")
    return sites


def _tokens(mapping: dict[str, int]) -> list[str]:
    return [tok for tok, _ in sorted(mapping.items(), key=lambda kv: kv[1])]


def _export(args, lp) -> None:
    if args.mps:
        with open(args.mps, "w") as fh:
            write_mps(lp, fh)


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(canonical_json(payload))
    else:
        print(text)


def _require_t(args, data, variant: str) -> int:
    if args.t is None:
        raise CliError("--t is required")
    limit = max_errors(data, variant)
    if not 1 <= args.t <= limit:
        raise CliError(f"--t must lie in 1..{limit}")
    return args.t


def cmd_separate(args) -> None:
    data, mapping = _load_train(args)
    sites = _sites(args, data)
    lp = build_pspd_fixed(sigma_matrix(data, sites))
    _export(args, lp)
    diagram, eps = extract_hard_solution(solve(lp, backend=args.backend), sites)
    status = verify_separating(diagram, data, args.tol).value
    if args.output:
        save_model(args.output, diagram=diagram, epsilon=eps, variant=None, t=0, labels=_tokens(mapping))
    payload = {"epsilon": eps, "gamma": diagram.gamma.tolist(), "separation": status}
    gamma = " ".join(f"{g:.6f}" for g in diagram.gamma)
    _emit(args, payload, f"epsilon = {eps:.6f}\ngamma = {gamma}\nseparation = {status}")


def cmd_soft(args) -> None:
    data, mapping = _load_train(args)
    sites = _sites(args, data)
    t = _require_t(args, data, args.variant)
    lp = build_soft(data, sites, t, args.variant)
    _export(args, lp)
    sol = solve(lp, backend=args.backend)
    soft = extract_soft_solution(sol, data, sites, args.variant, args.tol)
    errors = extract_errors(soft, data, args.tol)
    if args.output:
        save_model(args.output, diagram=soft.diagram, epsilon=soft.epsilon, variant=args.variant, t=t,
                   labels=_tokens(mapping))
    payload = {
        "epsilon": soft.epsilon,
        "objective": soft_objective(soft, t),
        "gamma": soft.diagram.gamma.tolist(),
        "margin_errors": len(errors.margin_errors),
        "support_vectors": len(errors.support_vectors),
        "t": t,
        "variant": args.variant,
    }
    _emit(
        args,
        payload,
        f"epsilon = {soft.epsilon:.6f}\nobjective = {payload['objective']:.6f}\n"
        f"margin errors = {payload['margin_errors']}\nsupport vectors = {payload['support_vectors']}",
    )


def cmd_outliers(args) -> None:
    data, _ = _load_train(args)
    sites = _sites(args, data)
    t = _require_t(args, data, args.variant)
    if args.mps:
        _export(args, build_soft(data, sites, t, args.variant))
    soft, outliers = spd_od(data, sites, t, args.variant, tol=args.tol, backend=args.backend)
    rows = [{"index": l, "row": l + 1, "multiplicity": m} for l, m in sorted(outliers.items())]
    payload = {"epsilon": soft.epsilon, "outliers": rows, "t": t, "variant": args.variant}
    listing = ", ".join(str(r["index"]) for r in rows) or "(none)"
    _emit(args, payload, f"epsilon = {soft.epsilon:.6f}\noutliers (0-based indices): {listing}")


def cmd_threshold(args) -> None:
    data, _ = _load_train(args)
    sites = _sites(args, data)
    res = ls_spd(data, sites, args.variant, tol=args.tol, backend=args.backend)
    payload = threshold_to_dict(res)
    _emit(
        args,
        payload,
        f"tau = {float(res.tau):.6f} ({payload['tau_fraction']})\nt_min = {res.t_min}\n"
        f"epsilon = {res.epsilon:.6f}\nlp_solve_count = {res.lp_solve_count}",
    )


def _parse_t_list(text: Optional[str], limit: int) -> list[int]:
    if not text:
        return list(range(0, limit + 1))
    out = []
    for part in text.split(","):
        if "-" in part:
            a, b = part.split("-")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def cmd_curve(args) -> None:
    data, _ = _load_train(args)
    sites = _sites(args, data)
    ts = _parse_t_list(args.t_list, max_errors(data, args.variant))
    points = epsilon_curve(data, sites, args.variant, ts, backend=args.backend)
    payload = {
        "variant": args.variant,
        "curve": [{"t": p.t, "epsilon": p.epsilon, "objective": p.objective, "status": p.status.value} for p in points],
    }
    text = "\n".join(f"{p.t}\t{p.epsilon:.6f}\t{p.objective:.6f}" for p in points)
    _emit(args, payload, "t\tepsilon\tobjective\n" + text)


def cmd_freesites(args) -> None:
    data, mapping = _load_train(args)
    start = None if args.sites == "means" else _sites(args, data)
    rep = local_optimize(data, args.variant, args.t, start, backend=args.backend)
    if args.output:
        save_model(args.output, diagram=rep.diagram, epsilon=rep.epsilon, variant=args.variant, t=rep.t,
                   labels=_tokens(mapping))
    payload = {
        "variant": args.variant,
        "t": rep.t,
        "objective": rep.objective,
        "initial_objective": rep.initial_objective,
        "epsilon": rep.epsilon,
        "iterations": rep.iterations,
        "converged": rep.converged,
        "violation": rep.violation,
        "sites": rep.sites.sites.tolist(),
        "gamma": rep.gamma.tolist(),
    }
    _emit(
        args,
        payload,
        f"objective = {rep.objective:.6f} (start {rep.initial_objective:.6f})\n"
        f"epsilon = {rep.epsilon:.6f}\niterations = {rep.iterations}, converged = {rep.converged}",
    )


def cmd_classify(args) -> None:
    if not args.model or not args.input:
        raise CliError("classify needs --model and --input")
    diagram, raw = load_model(args.model)
    pts = load_points(args.input, args.format, diagram.d)
    if pts.shape[1] != diagram.d:
        raise CliError(f"input has dimension {pts.shape[1]}, model {diagram.d}")
    pred = diagram.classify(pts) if len(pts) else np.zeros(0, dtype=int)
    labels = raw.get("labels") or [str(i + 1) for i in range(diagram.k)]
    out = [labels[i] for i in pred]
    _emit(args, {"labels": out}, "\n".join(out))


def cmd_eval(args) -> None:
    data, mapping = _load_train(args)
    if not args.test:
        raise CliError("eval needs --test")
    test, _ = load_dataset(args.test, args.format, data.d, mapping)
    sites = _sites(args, data)
    res = ls_spd(data, sites, args.variant, tol=args.tol, backend=args.backend)
    diagram = res.diagram
    note = "diagram at t_min"
    if diagram is None:
        diagram, _ = extract_hard_solution(solve(build_pspd_fixed(sigma_matrix(data, sites))), sites)
        note = "hard-margin diagram (program unbounded at t_min)"
    report = evaluate_classifier(diagram, test, threshold=res, notes={"diagram": note})
    _emit(
        args,
        report.to_dict(),
        f"tau = {float(res.tau):.6f} (t_min = {res.t_min})\n"
        f"misclassified = {report.misclassified}/{report.total} ({100 * report.rate:.2f}%)",
    )


def cmd_plot(args) -> None:
    data, _ = _load_train(args)
    if data.d != 2:
        raise CliError("plot requires two-dimensional data")
    sites = _sites(args, data)
    support: list[int] = []
    if args.t:
        variant = args.variant if args.variant in ("mep", "mme") else "mep"
        sol = solve(build_soft(data, sites, args.t, variant), backend=args.backend)
        soft = extract_soft_solution(sol, data, sites, variant, args.tol)
        diagram, eps = soft.diagram, soft.epsilon
        errs = extract_errors(soft, data, args.tol)
        support = sorted({sv if isinstance(sv, (int, np.integer)) else sv[0] for sv in errs.support_vectors})
    else:
        diagram, eps = extract_hard_solution(solve(build_pspd_fixed(sigma_matrix(data, sites))), sites)
    doc = emit_svg(diagram, data, eps, support)
    if args.output:
        Path(args.output).write_text(doc)
    else:
        sys.stdout.write(doc)


COMMANDS = {
    "separate": (cmd_separate, "maximum-margin diagram for fixed sites"),
    "soft": (cmd_soft, "soft diagram with an error budget --t"),
    "outliers": (cmd_outliers, "outlier detection (margin error points)"),
    "threshold": (cmd_threshold, "least-squares threshold by binary search"),
    "curve": (cmd_curve, "optimal margin as a function of the error budget"),
    "freesites": (cmd_freesites, "local optimization over site positions"),
    "classify": (cmd_classify, "classify points with a saved model"),
    "eval": (cmd_eval, "threshold on --train, misclassification on --test"),
    "plot": (cmd_plot, "SVG picture of a planar diagram"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--train", help="training data file, or demo:N,K,D for a random instance")
    common.add_argument("--test", help="test data file")
    common.add_argument("--format", choices=("libsvm", "csv"), help="input format (default: from extension)")
    common.add_argument("--sites", default="means", help="'means' or a file with one site per row")
    common.add_argument("--tol", type=float, default=1e-7, help="slack tolerance for sign tests")
    common.add_argument("--seed", type=int, default=0, help="seed for demo:N,K,D instances")
    common.add_argument("--json", action="store_true", help="canonical JSON on stdout")
    common.add_argument("--mps", help="write the solved LP in fixed MPS format")
    common.add_argument("--backend", choices=("simplex", "highs"), default="simplex")
    common.add_argument("--output", "-o", help="model (JSON) or SVG output path")

    parser = argparse.ArgumentParser(prog="softpd", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "freesites":
            p.add_argument("--variant", choices=("spd", "mep", "mme"), default="mep")
        else:
            p.add_argument("--variant", choices=("mep", "mme"), default="mep")
        p.add_argument("--t", type=int)
        if name == "curve":
            p.add_argument("--t-list", help="comma list of budgets or ranges, e.g. 0,1,5-9")
        if name == "classify":
            p.add_argument("--model")
            p.add_argument("--input")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = COMMANDS[args.command][0]
    try:
        handler(args)
    except (CliError, FormatError, GeometryError, UnboundedProgram, LocalSolveError, LpError, OSError, ValueError) as exc:
        print(f"softpd {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
