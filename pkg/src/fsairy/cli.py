"""Command-line entry point: ``fsairy <group> <command> [options]``.

Exit codes: 0 success, 2 usage or domain error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import airy, basis, fredholm, kernels, rwalk, sampling, study
from .errors import ConfigError, DomainError, FsAiryError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _points(text: str) -> list[list[float]]:
    return [_floats(item) for item in text.split(";") if item.strip()]


def _grid(text: str) -> list[float]:
    try:
        return study.parse_grid(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _emit(header, rows, out):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])


# --- handlers -------------------------------------------------------------------


def _airy_eval(args, out):
    a, ap = airy.ai(np.array(args.x)), airy.ai_prime(np.array(args.x))
    _emit(["x", "ai", "ai_prime"], zip(args.x, np.atleast_1d(a), np.atleast_1d(ap)), out)


def _airy_zeros(args, out):
    omega, deriv = airy.zeros_and_derivs(args.count)
    _emit(["k", "omega", "deriv"], zip(range(1, args.count + 1), omega, deriv), out)


def _basis_phi(args, out):
    vals = basis.phi(args.k, np.array(args.x))
    _emit(["k", "x", "phi"], ((args.k, x, v) for x, v in zip(args.x, np.atleast_1d(vals))), out)


def _basis_drift(args, out):
    d = basis.drift_dyson(basis.OrderedConfiguration(args.coords))
    out.write(",".join(_fmt(v) for v in d) + "\n")


def _kernel_eval(args, out):
    spec = kernels.KernelSpec(args.kind, m_count=args.m)
    rows = []
    for p in args.points:
        if len(p) != 4:
            raise DomainError("each point needs xi_i,tau_i,xi_j,tau_j")
        rows.append((*p, float(spec(*p))))
    _emit(["xi_i", "tau_i", "xi_j", "tau_j", "value"], rows, out)


def _fredholm_gap(args, out):
    taus = args.taus or [0.0] * len(args.cutoffs)
    if args.m is None:
        r = fredholm.airy2_joint(taus, args.cutoffs)
    elif args.unscaled:
        r = fredholm.gap_probability(args.m, taus, args.cutoffs)
    else:
        r = fredholm.gap_probability_topline(args.m, taus, args.cutoffs)
    _emit(["value", "quadrature_error_estimate", "truncation_budget"],
          [(r.value, r.quadrature_error_estimate, r.truncation_budget)], out)


def _fredholm_tw2(args, out):
    _emit(["S", "F2"], ((s, fredholm.tracy_widom_gue(s)) for s in args.s_grid), out)


def _sample_dpp(args, out):
    rng = sampling.path_generator(args.seed, 0)
    pts = sampling.sample_stationary_dpp_batch(args.m, args.n, rng)
    _emit([f"x{k}" for k in range(1, args.m + 1)], pts, out)


def _sample_sde(args, out):
    ens = sampling.simulate_dyson_fs(args.m, args.x0, args.t_end, args.dt, args.seed,
                                     record_every=args.record_every)
    rows = ([t, *x] for t, x in zip(ens.times, ens.states[0]))
    _emit(["t"] + [f"x{k}" for k in range(1, args.m + 1)], rows, out)


def _rw_marginal(args, out):
    model = rwalk.WalkModel(lam=args.lam, n_half=args.n, h_max=args.h_max, u=args.u, v=args.v)
    marg = rwalk.transfer_marginal(model, args.k)
    _emit(["height", "prob"], zip(marg.heights, marg.probs), out)


def _rw_scaled_cdf(args, out):
    rows = []
    for n in args.n_list:
        vals = np.atleast_1d(rwalk.scaled_cdf(n, args.t, args.s_grid))
        rows.extend((n, s, v) for s, v in zip(args.s_grid, vals))
    _emit(["N", "S", "cdf"], rows, out)


def _study_run(args, out):
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(item, "overrides must look like key=value")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    cfg = study.load_config(args.config, overrides)
    result = study.run_study(cfg)
    for line in result.summary:
        out.write(line + "\n")
    for p in result.paths:
        out.write(f"wrote {p}\n")
    if result.failures:
        out.write(f"{result.failures} row(s) failed\n")
        return EXIT_NUMERIC
    return EXIT_OK


# --- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fsairy", description="Ferrari-Spohn diffusions and Airy2 numerics")
    groups = p.add_subparsers(dest="group", required=True)

    g = groups.add_parser("airy").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("eval", help="Ai and Ai' at comma-separated points")
    c.add_argument("--x", type=_floats, required=True)
    c.set_defaults(func=_airy_eval)
    c = g.add_parser("zeros", help="first zeros of Ai and Ai' there")
    c.add_argument("--count", type=int, required=True)
    c.set_defaults(func=_airy_zeros)

    g = groups.add_parser("basis").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("phi")
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--x", type=_floats, required=True)
    c.set_defaults(func=_basis_phi)
    c = g.add_parser("drift", help="Dyson drift at an ordered configuration")
    c.add_argument("--coords", type=_floats, required=True)
    c.set_defaults(func=_basis_drift)

    g = groups.add_parser("kernel").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("eval")
    c.add_argument("--kind", choices=["stationary", "extended", "rescaled", "airy_extended"], required=True)
    c.add_argument("--m", type=int)
    c.add_argument("--points", type=_points, required=True,
                   help="xi_i,tau_i,xi_j,tau_j quadruples separated by ';'")
    c.set_defaults(func=_kernel_eval)

    g = groups.add_parser("fredholm").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("gap", help="top-path gap probability (Airy2 without --m)")
    c.add_argument("--m", type=int)
    c.add_argument("--taus", type=_floats)
    c.add_argument("--cutoffs", type=_floats, required=True)
    c.add_argument("--unscaled", action="store_true", help="use unscaled times and heights")
    c.set_defaults(func=_fredholm_gap)
    c = g.add_parser("tw2")
    c.add_argument("--s-grid", type=_grid, required=True)
    c.set_defaults(func=_fredholm_tw2)

    g = groups.add_parser("sample").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("dpp")
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=_sample_dpp)
    c = g.add_parser("sde")
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--t-end", type=float, required=True)
    c.add_argument("--dt", type=float, default=1e-3)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--x0", type=_floats, help="ordered start; stationary draw if omitted")
    c.add_argument("--record-every", type=int, default=1)
    c.set_defaults(func=_sample_sde)

    g = groups.add_parser("rw").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("marginal")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--lambda", dest="lam", type=float, required=True)
    c.add_argument("--k", type=int, default=0)
    c.add_argument("--h-max", type=int)
    c.add_argument("--u", type=int, default=1)
    c.add_argument("--v", type=int, default=1)
    c.set_defaults(func=_rw_marginal)
    c = g.add_parser("scaled-cdf")
    c.add_argument("--n-list", type=_ints, required=True)
    c.add_argument("--t", type=float, default=0.0)
    c.add_argument("--s-grid", type=_grid, required=True)
    c.set_defaults(func=_rw_scaled_cdf)

    g = groups.add_parser("study").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("run")
    c.add_argument("config")
    c.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    c.set_defaults(func=_study_run)
    return p


def _attach_negative_values(argv):
    # "--s-grid -2:2:5" -> "--s-grid=-2:2:5" so argparse does not take "-2..." for an option
    out = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and len(tok) > 1 \
                and tok[0] == "-" and (tok[1].isdigit() or tok[1] == "."):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(_attach_negative_values(argv))
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        code = args.func(args, out)
    except (ConfigError, DomainError) as exc:
        print(f"fsairy: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FsAiryError as exc:
        print(f"fsairy: numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return code or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
