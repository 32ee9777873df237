"""Command-line front end: fit, test, ci, simulate, check.

Exit codes: 0 success, 1 usage or input errors, 2 numerical or statistical
failures. Option precedence is command line > --config JSON file > built-in
defaults. Result documents are line-oriented ``key=value`` pairs followed by
a sparse coefficient block (``beta <index> <value>`` lines, 1-based indices),
chosen for easy diffing; simulate writes the CSV schemas of
:mod:`nlsparse.simulate`.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import simulate as sim
from .diagnostics import check_gradients, sparse_eigen_report
from .errors import InputError, NumericalError
from .inference import InferenceConfig, score_test, wald_estimate
from .model import FitConfig, builtin_link, load_dataset_csv
from .solver import fit

_FIT_DEFAULTS = dict(eta=2.0, zeta=1e-5, memory=5, alpha_min=1e-30, alpha_max=1e30,
                     tol=1e-5, max_iter=10_000, max_linesearch=100)


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1, not argparse's default 2 (2 is reserved for
    # numerical failures)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(p):
    p.add_argument("--config", help="JSON file with defaults for any option")
    p.add_argument("--output", default="-", help="output path, or - for stdout")


def _add_fit_options(p):
    p.add_argument("--data", help="dataset CSV: first column y, then x1..xd")
    p.add_argument("--link", help="link function: identity or paper (2x+cos x)")
    p.add_argument("--lambda", dest="lam", type=float,
                   help="regularization strength (overrides --lambda-rule)")
    p.add_argument("--lambda-rule", dest="lambda_rule", type=float,
                   help="set lambda = C*sigma*sqrt(log(d)/n) with this C (needs --sigma)")
    p.add_argument("--sigma", type=float, help="noise level for the lambda/rho rules")
    p.add_argument("--tol", type=float, help="relative-change stopping threshold")
    p.add_argument("--max-iter", dest="max_iter", type=int, help="iteration cap")
    p.add_argument("--eta", type=float, help="line-search growth factor (> 1)")
    p.add_argument("--zeta", type=float, help="sufficient-decrease constant")
    p.add_argument("--memory", type=int, help="nonmonotone window length")


def _add_inference_options(p):
    p.add_argument("--coordinate", type=int, required=True,
                   help="1-based coordinate to test")
    p.add_argument("--delta", type=float, help="significance level (default 0.05)")
    p.add_argument("--null-value", dest="null_value", type=float,
                   help="hypothesized coefficient value (default 0)")
    p.add_argument("--rho", type=float,
                   help="decorrelation LP radius (overrides --rho-rule)")
    p.add_argument("--rho-rule", dest="rho_rule", type=float,
                   help="set rho = C*sigma*sqrt(log(d)/n) with this C (default 30)")


def _build_parser():
    parser = _Parser(prog="nlsparse",
                     description="Sparse nonlinear regression: estimation and inference.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_fit = sub.add_parser("fit", parents=[], help="fit the l1-regularized model",
                           description="Fit the l1-regularized nonlinear least-squares model.")
    _add_fit_options(p_fit)
    _add_common(p_fit)
    p_fit.set_defaults(func=_cmd_fit)

    p_test = sub.add_parser("test", help="test H0: beta_j = null value",
                            description="Decorrelated score or Wald test for one coordinate.")
    _add_fit_options(p_test)
    _add_inference_options(p_test)
    p_test.add_argument("--method", choices=["score", "wald"], required=True)
    _add_common(p_test)
    p_test.set_defaults(func=_cmd_test)

    p_ci = sub.add_parser("ci", help="confidence interval for one coordinate",
                          description="Wald confidence interval for one coordinate.")
    _add_fit_options(p_ci)
    _add_inference_options(p_ci)
    _add_common(p_ci)
    p_ci.set_defaults(func=_cmd_ci)

    p_sim = sub.add_parser("simulate", help="run a synthetic experiment",
                           description="Synthetic experiments writing plot-ready CSV.")
    p_sim.add_argument("--experiment", choices=["sweep", "baseline", "table"], required=True)
    p_sim.add_argument("--n", type=int, help="sample size")
    p_sim.add_argument("--d", type=int, help="dimension")
    p_sim.add_argument("--s-star", dest="s_star", type=int, help="support size")
    p_sim.add_argument("--n-grid", dest="n_grid", help="comma-separated n values")
    p_sim.add_argument("--d-grid", dest="d_grid", help="comma-separated d values")
    p_sim.add_argument("--s-star-grid", dest="s_star_grid",
                       help="comma-separated support sizes")
    p_sim.add_argument("--mu-grid", dest="mu_grid",
                       help="comma-separated signal strengths (table experiment)")
    p_sim.add_argument("--link", help="link function name (default paper)")
    p_sim.add_argument("--sigma", type=float, help="noise standard deviation (default 1)")
    p_sim.add_argument("--toeplitz-rho", dest="toeplitz_rho", type=float,
                       help="design correlation decay (default 0.95)")
    p_sim.add_argument("--beta-mode", dest="beta_mode",
                       help='"uniform:lo,hi" or "constant:mu" (default uniform:0,2)')
    p_sim.add_argument("--trials", type=int, help="trials per grid point (default 100)")
    p_sim.add_argument("--seed", type=int, help="base seed (default 0)")
    p_sim.add_argument("--lambda-rule", dest="lambda_rule", type=float,
                       help="C in lambda = C*sigma*sqrt(log(d)/n) (default 3)")
    p_sim.add_argument("--rho-rule", dest="rho_rule", type=float,
                       help="C in rho = C*sigma*sqrt(log(d)/n) (default 30)")
    p_sim.add_argument("--delta", type=float, help="test level for table (default 0.05)")
    p_sim.add_argument("--type1-coordinate", dest="type1_coordinate", type=int,
                       help="null-true coordinate for the table (default s_star+1)")
    p_sim.add_argument("--power-coordinate", dest="power_coordinate", type=int,
                       help="null-false coordinate for the table (default 1)")
    p_sim.add_argument("--threads", type=int,
                       help=f"worker processes (default ${sim.THREADS_ENV_VAR} or CPU count)")
    _add_common(p_sim)
    p_sim.set_defaults(func=_cmd_simulate)

    p_check = sub.add_parser("check", help="run a numerical diagnostic",
                             description="Derivative or sparse-eigenvalue diagnostics.")
    p_check.add_argument("--kind", choices=["gradients", "sparse-eigen"], required=True)
    p_check.add_argument("--link", help="link name for gradient checks (default paper)")
    p_check.add_argument("--n", type=int, help="rows per gradient-check instance (default 10)")
    p_check.add_argument("--d", type=int, help="dimension (default 5; sparse-eigen cap 24)")
    p_check.add_argument("--trials", type=int, help="gradient-check instances (default 50)")
    p_check.add_argument("--seed", type=int, help="RNG seed (default 0)")
    p_check.add_argument("--matrix", help="CSV file with a square matrix for sparse-eigen")
    p_check.add_argument("--toeplitz-rho", dest="toeplitz_rho", type=float,
                         help="build the Toeplitz covariance rho^|j-k| instead of --matrix")
    p_check.add_argument("--k", type=int, help="sparsity level for the eigen report")
    p_check.add_argument("--s-star", dest="s_star", type=int, help="support size for the condition")
    p_check.add_argument("--k-star", dest="k_star", type=int, help="relaxation size for the condition")
    _add_common(p_check)
    p_check.set_defaults(func=_cmd_check)

    return parser


def _load_config(args):
    path = getattr(args, "config", None)
    if not path:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise InputError(f"config {path} must hold a JSON object")
    return cfg


def _resolve(args, cfg, key, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in cfg:
        return cfg[key]
    return default


def _emit(text: str, output: str):
    if output == "-":
        sys.stdout.write(text)
    else:
        with open(output, "w") as fh:
            fh.write(text)


def _doc(pairs, beta=None) -> str:
    lines = []
    for key, value in pairs:
        if isinstance(value, (bool, np.bool_)):
            value = "true" if value else "false"
        elif isinstance(value, (float, np.floating)):
            value = repr(float(value))
        lines.append(f"{key}={value}")
    if beta is not None:
        lines.append(f"nonzeros={int(np.count_nonzero(beta))}")
        for j in np.flatnonzero(beta):
            lines.append(f"beta {j + 1} {float(beta[j])!r}")
    return "\n".join(lines) + "\n"


def _resolve_lambda(args, cfg, data):
    lam = _resolve(args, cfg, "lam")
    if lam is not None:
        return float(lam)
    rule = _resolve(args, cfg, "lambda_rule")
    if rule is None:
        raise InputError("specify --lambda, or --lambda-rule together with --sigma")
    sigma = _resolve(args, cfg, "sigma")
    if sigma is None:
        raise InputError("--lambda-rule needs --sigma")
    return float(rule) * float(sigma) * float(np.sqrt(np.log(data.d) / data.n))


def _resolve_rho(args, cfg, data):
    rho = _resolve(args, cfg, "rho")
    if rho is not None:
        return float(rho)
    rule = _resolve(args, cfg, "rho_rule", 30.0)
    sigma = _resolve(args, cfg, "sigma")
    if sigma is None:
        raise InputError("--rho-rule needs --sigma (or give --rho explicitly)")
    return float(rule) * float(sigma) * float(np.sqrt(np.log(data.d) / data.n))


def _fit_from_args(args, cfg):
    data_path = _resolve(args, cfg, "data")
    if not data_path:
        raise InputError("--data is required")
    data = load_dataset_csv(data_path)
    link = builtin_link(_resolve(args, cfg, "link", "paper"))
    lam = _resolve_lambda(args, cfg, data)
    options = {key: _resolve(args, cfg, key, default)
               for key, default in _FIT_DEFAULTS.items()}
    config = FitConfig(lam=lam, **options)
    return data, link, lam, fit(link, data, config)


def _cmd_fit(args) -> int:
    cfg = _load_config(args)
    data, link, lam, result = _fit_from_args(args, cfg)
    doc = _doc([
        ("command", "fit"),
        ("link", link.name),
        ("n", data.n),
        ("d", data.d),
        ("lambda", lam),
        ("converged", result.converged),
        ("iterations", result.iterations),
        ("objective", float(result.objective_trace[-1])),
        ("kkt_residual", result.kkt_residual),
    ], beta=result.beta_hat)
    _emit(doc, args.output)
    return 0


def _inference_config(args, cfg, data):
    return InferenceConfig(
        coordinate=int(_resolve(args, cfg, "coordinate")),
        rho=_resolve_rho(args, cfg, data),
        significance=float(_resolve(args, cfg, "delta", 0.05)),
        null_value=float(_resolve(args, cfg, "null_value", 0.0)),
    )


def _cmd_test(args) -> int:
    cfg = _load_config(args)
    data, link, lam, result = _fit_from_args(args, cfg)
    inf_cfg = _inference_config(args, cfg, data)
    pairs = [
        ("command", "test"),
        ("method", args.method),
        ("coordinate", inf_cfg.coordinate),
        ("null_value", inf_cfg.null_value),
        ("delta", inf_cfg.significance),
        ("lambda", lam),
        ("rho", inf_cfg.rho),
    ]
    if args.method == "score":
        res = score_test(link, data, result, inf_cfg)
        pairs += [
            ("statistic", res.statistic),
            ("p_value", res.p_value),
            ("reject", res.reject),
            ("f_s", res.f_s),
            ("sigma_s", res.sigma_s),
            ("dantzig_l1", res.d_hat.l1_norm),
        ]
    else:
        res = wald_estimate(link, data, result, inf_cfg)
        pairs += [
            ("statistic", res.statistic),
            ("p_value", res.p_value),
            ("reject", res.reject),
            ("alpha_bar", res.alpha_bar),
            ("sigma_w", res.sigma_w),
            ("dantzig_l1", res.d_hat.l1_norm),
        ]
    _emit(_doc(pairs), args.output)
    return 0


def _cmd_ci(args) -> int:
    cfg = _load_config(args)
    data, link, lam, result = _fit_from_args(args, cfg)
    inf_cfg = _inference_config(args, cfg, data)
    res = wald_estimate(link, data, result, inf_cfg)
    _emit(_doc([
        ("command", "ci"),
        ("coordinate", inf_cfg.coordinate),
        ("delta", inf_cfg.significance),
        ("lambda", lam),
        ("rho", inf_cfg.rho),
        ("alpha_bar", res.alpha_bar),
        ("ci_low", res.ci_low),
        ("ci_high", res.ci_high),
        ("sigma_w", res.sigma_w),
    ]), args.output)
    return 0


def _parse_grid(raw, cast):
    if raw is None:
        return None
    if isinstance(raw, (list, tuple)):
        return [cast(v) for v in raw]
    try:
        return [cast(tok) for tok in str(raw).split(",") if tok.strip()]
    except ValueError as exc:
        raise InputError(f"bad grid {raw!r}: {exc}") from exc


def _parse_beta_mode(raw):
    if raw is None:
        return sim.UniformBeta(0.0, 2.0)
    if isinstance(raw, (sim.UniformBeta, sim.ConstantBeta)):
        return raw
    kind, _, params = str(raw).partition(":")
    try:
        if kind == "uniform":
            lo, hi = (float(v) for v in params.split(",")) if params else (0.0, 2.0)
            return sim.UniformBeta(lo, hi)
        if kind == "constant":
            return sim.ConstantBeta(float(params))
    except ValueError as exc:
        raise InputError(f"bad beta mode {raw!r}: {exc}") from exc
    raise InputError(f'bad beta mode {raw!r}: expected "uniform:lo,hi" or "constant:mu"')


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    base = dict(
        link_name=_resolve(args, cfg, "link", "paper"),
        noise_sd=float(_resolve(args, cfg, "sigma", 1.0)),
        toeplitz_rho=float(_resolve(args, cfg, "toeplitz_rho", 0.95)),
        beta_mode=_parse_beta_mode(_resolve(args, cfg, "beta_mode")),
        seed=int(_resolve(args, cfg, "seed", 0)),
        trials=int(_resolve(args, cfg, "trials", 100)),
    )
    n = _resolve(args, cfg, "n")
    d = _resolve(args, cfg, "d")
    s_star = _resolve(args, cfg, "s_star")
    lambda_scale = float(_resolve(args, cfg, "lambda_rule", 3.0))
    threads = _resolve(args, cfg, "threads")
    threads = int(threads) if threads is not None else None

    if args.experiment in ("sweep", "baseline"):
        n_grid = _parse_grid(_resolve(args, cfg, "n_grid"), int) or (
            [int(n)] if n is not None else None)
        d_grid = _parse_grid(_resolve(args, cfg, "d_grid"), int) or (
            [int(d)] if d is not None else None)
        s_grid = _parse_grid(_resolve(args, cfg, "s_star_grid"), int) or (
            [int(s_star)] if s_star is not None else None)
        if n_grid is None or d_grid is None or s_grid is None:
            raise InputError(
                "simulate needs --n/--n-grid, --d/--d-grid and --s-star/--s-star-grid"
            )
        configs = [
            sim.SimConfig(n=nn, d=dd, s_star=ss, **base)
            for dd in d_grid for ss in s_grid for nn in n_grid
        ]
        if args.experiment == "sweep":
            rows = sim.run_estimation_sweep(configs, lambda_scale, threads=threads)
            text = sim.sweep_csv_text(rows)
        else:
            rows = sim.run_baseline_comparison(configs, lambda_scale, threads=threads)
            text = sim.baseline_csv_text(rows)
    else:
        if n is None or d is None or s_star is None:
            raise InputError("simulate --experiment table needs --n, --d and --s-star")
        config = sim.SimConfig(n=int(n), d=int(d), s_star=int(s_star), **base)
        mu_grid = _parse_grid(_resolve(args, cfg, "mu_grid"), float)
        type1 = _resolve(args, cfg, "type1_coordinate")
        rows = sim.run_inference_table(
            config,
            mu_grid=mu_grid,
            type1_coordinate=int(type1) if type1 is not None else None,
            power_coordinate=int(_resolve(args, cfg, "power_coordinate", 1)),
            lambda_scale=lambda_scale,
            rho_scale=float(_resolve(args, cfg, "rho_rule", 30.0)),
            significance=float(_resolve(args, cfg, "delta", 0.05)),
            threads=threads,
        )
        text = sim.inference_csv_text(rows)
    _emit(text, args.output)
    return 0


def _load_matrix_csv(path):
    try:
        M = np.loadtxt(path, delimiter=",", ndmin=2)
    except OSError as exc:
        raise InputError(f"cannot read matrix {path}: {exc}") from exc
    except ValueError as exc:
        raise InputError(f"matrix {path} is not numeric CSV: {exc}") from exc
    return M


def _cmd_check(args) -> int:
    cfg = _load_config(args)
    if args.kind == "gradients":
        link = builtin_link(_resolve(args, cfg, "link", "paper"))
        seed = int(_resolve(args, cfg, "seed", 0))
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed])))
        report = check_gradients(
            link,
            n=int(_resolve(args, cfg, "n", 10)),
            d=int(_resolve(args, cfg, "d", 5)),
            trials=int(_resolve(args, cfg, "trials", 50)),
            rng=rng,
        )
        verdict = "PASS" if report.passed else "FAIL"
        _emit(
            f"{verdict} max_rel_grad={report.max_rel_gradient:.3e} "
            f"max_rel_hess={report.max_rel_hessian:.3e} trials={report.trials}\n",
            args.output,
        )
        return 0 if report.passed else 2

    matrix_path = _resolve(args, cfg, "matrix")
    if matrix_path:
        M = _load_matrix_csv(matrix_path)
    else:
        d = _resolve(args, cfg, "d")
        if d is None:
            raise InputError("sparse-eigen needs --matrix or --d with --toeplitz-rho")
        rho = float(_resolve(args, cfg, "toeplitz_rho", 0.95))
        idx = np.arange(int(d))
        M = rho ** np.abs(idx[:, None] - idx[None, :])
    s_star = _resolve(args, cfg, "s_star")
    k_star = _resolve(args, cfg, "k_star")
    k = _resolve(args, cfg, "k")
    if k is None:
        k = k_star if k_star is not None else M.shape[0]
    report = sparse_eigen_report(
        M, int(k),
        s_star=int(s_star) if s_star is not None else None,
        k_star=int(k_star) if k_star is not None else None,
    )
    lines = [
        f"k={report.k}",
        f"rho_minus={report.rho_minus!r}",
        f"rho_plus={report.rho_plus!r}",
        f"design_bound={report.design_bound!r}",
    ]
    passed = True
    if report.condition_holds is not None:
        passed = report.condition_holds
        lines.append(f"condition_holds={'true' if passed else 'false'}")
    lines.append("PASS" if passed else "FAIL")
    _emit("\n".join(lines) + "\n", args.output)
    return 0 if passed else 2


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"nlsparse: error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"nlsparse: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
