"""Command line interface: ``rbfbern <group> <command> [options]``.

Every command prints a table as CSV (default) or JSON. ``--out`` names a
file; the bare values ``csv`` and ``json`` select a format for stdout instead.
Sweeps exit with status 1 when a quantitative contract fails and 2 on errors.
"""
from __future__ import annotations

import argparse
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__
from . import experiments as ex
from . import geometry as geo
from . import hankel, kernels, network as nw, rbf, specfun
from .experiments import ExperimentConfig, ExperimentResult

FORMATS = ("csv", "json")


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", default=None, help="report path, or 'csv'/'json' for stdout")
    g.add_argument("--format", choices=FORMATS, default=None)
    g.add_argument("--tol-profile", choices=sorted(nw.TOL_PROFILES), default=None)
    g.add_argument("--config", default=None, help="flat key=value file")
    return common


def _sweep_options(p: argparse.ArgumentParser):
    for name, typ in [("dim", int), ("beta", float), ("k", float), ("p", str), ("levels", int),
                      ("trials", int), ("extent", float), ("q0", float), ("grid-divisor", float),
                      ("pad-tol", float)]:
        p.add_argument(f"--{name}", type=typ, default=None)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="rbfbern", description=__doc__.splitlines()[0], parents=[common])
    parser.add_argument("--version", action="version", version=f"rbfbern {__version__}")
    groups = parser.add_subparsers(dest="group", required=True)

    def group(name: str, help_: str):
        sub = groups.add_parser(name, help=help_).add_subparsers(dest="command", required=True)
        return sub

    g = group("geom", "point-set geometry")
    p = g.add_parser("report", parents=[common], help="q, h and rho of a point set")
    p.add_argument("--in", dest="infile", default=None, help="points file ('d N' header)")
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--box", default="0,1", help="lo,hi of the cube domain for generated sets")
    p.add_argument("--spacing", type=float, default=None)
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--density", type=int, default=400)
    p = g.add_parser("gen", parents=[common], help="write a quasi-uniform point set")
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--box", default="0,1")
    p.add_argument("--spacing", type=float, required=True)
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--points-out", required=True)

    g = group("specfun", "special functions")
    p = g.add_parser("eval", parents=[common], help="Bessel J, Bessel K or Gamma")
    p.add_argument("--fn", choices=("besselj", "besselk", "gamma"), required=True)
    p.add_argument("--nu", type=float, default=0.0)
    p.add_argument("--x", required=True, help="comma-separated arguments")

    g = group("rbf", "radial basis profiles")
    p = g.add_parser("admissible", parents=[common], help="sampled admissibility check")
    p.add_argument("--family", choices=("sobolev", "tps", "gaussian"), required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--m", type=int, default=None)

    g = group("kernel", "smoothing kernels")
    p = g.add_parser("eval", parents=[common], help="space-side kernel values")
    p.add_argument("--class", dest="kclass", choices=("K1", "K2"), required=True)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--r", required=True, help="comma-separated radii")

    g = group("hankel", "radial Fourier integrals")
    p = g.add_parser("decay", parents=[common], help="fit the decay of oscillatory integrals")
    p.add_argument("--mode", choices=("tail", "origin"), required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alphas", default="1:64:log")
    p.add_argument("--beta", type=float, default=4.0, help="order of the tail-mode test profile")
    p.add_argument("--scale", type=float, default=2.0, help="dilation of the test profile's transition")

    g = group("net", "networks and grid fields")
    p = g.add_parser("norm", parents=[common], help="Bessel-potential norm of a grid field")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--k", type=float, default=0.0)
    p.add_argument("--p", default="2")
    p = g.add_parser("sample", parents=[common], help="sample a network to a grid field file")
    p.add_argument("--centers", required=True, help="points file")
    p.add_argument("--beta", type=float, default=3.0)
    p.add_argument("--coeffs", default="alternating", help="'ones', 'alternating' or a comma list")
    p.add_argument("--field-out", required=True)

    g = group("stability", "interpolation-matrix stability")
    p = g.add_parser("sweep", parents=[common], help="sigma0, inverse norm and stability ratio per level")
    _sweep_options(p)

    g = group("bernstein", "Bernstein inequality")
    p = g.add_parser("sweep", parents=[common], help="band-limited, remainder and Bernstein ratios per level")
    _sweep_options(p)

    g = group("inverse", "inverse theorem demonstration")
    p = g.add_parser("run", parents=[common], help="nested-grid approximation and consecutive differences")
    _sweep_options(p)
    p.add_argument("--target", choices=("sobolev", "gaussian", "in_space"), default=None)
    p.add_argument("--target-beta", type=float, default=None)
    p.add_argument("--rate-l", type=float, default=None)
    p.add_argument("--inverse-extent", type=float, default=None)
    return parser


# ---------------------------------------------------------------------------


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    keys = ("dim", "beta", "k", "p", "levels", "trials", "extent", "q0", "grid_divisor", "pad_tol",
            "target", "target_beta", "rate_l", "inverse_extent", "seed", "tol_profile")
    return cfg.updated(**{k: getattr(args, k, None) for k in keys})


def _output(args, cfg_format: str | None = None) -> tuple[str, str | None]:
    fmt = args.format or cfg_format or "csv"
    path = args.out
    if path in FORMATS:
        fmt, path = path, None
    return fmt, path


def _table(kind: str, columns: Sequence[str], rows: list[dict[str, Any]], summary=None, contracts=None,
           config=None) -> ExperimentResult:
    return ExperimentResult(kind, tuple(columns), rows, summary or {}, contracts or {}, config or {})


def _box(text: str, dim: int) -> geo.Box:
    lo, hi = _floats(text)
    return geo.Box.cube(lo, hi, dim)


def cmd_geom_report(args) -> ExperimentResult:
    if args.infile:
        ps = geo.read_points(args.infile)
    else:
        if args.spacing is None:
            raise ValueError("give --in or --spacing")
        ps = geo.gen_quasi_uniform(_box(args.box, args.dim), args.spacing, args.jitter, args.seed or 0)
    rep = geo.geometry_report(ps, args.density)
    row = dict(rep.as_dict(), n=len(ps), dim=ps.dim)
    return _table("geometry", ("dim", "n", "q", "h", "rho", "candidate_density"), [row])


def cmd_geom_gen(args) -> ExperimentResult:
    ps = geo.gen_quasi_uniform(_box(args.box, args.dim), args.spacing, args.jitter, args.seed or 0)
    geo.write_points(ps, args.points_out)
    return _table("points", ("dim", "n", "path"), [{"dim": ps.dim, "n": len(ps), "path": args.points_out}])


def cmd_specfun_eval(args) -> ExperimentResult:
    xs = np.array(_floats(args.x))
    if args.fn == "besselj":
        vals = specfun.bessel_j(args.nu, xs)
    elif args.fn == "besselk":
        vals = specfun.bessel_k(args.nu, xs)
    else:
        vals = specfun.gamma(xs)
    rows = [{"fn": args.fn, "nu": args.nu, "x": float(x), "value": float(v)} for x, v in zip(xs, np.atleast_1d(vals))]
    return _table("specfun", ("fn", "nu", "x", "value"), rows)


def cmd_rbf_admissible(args) -> ExperimentResult:
    prof = rbf.make_profile(args.family, args.dim, beta=args.beta, m=args.m)
    rep = rbf.admissibility_check(prof)
    row = dict(rep.as_dict(), family=prof.name, dim=args.dim, beta=prof.beta)
    return _table("admissibility", ("family", "dim", "beta", "c1", "c2", "l_d", "max_deriv_bound", "pass"), [row])


def cmd_kernel_eval(args) -> ExperimentResult:
    kp = kernels.make_kernel(args.kclass)
    rs = np.array(_floats(args.r))
    vals = np.atleast_1d(kernels.kernel_space_eval(kp, args.sigma, args.dim, rs))
    rows = [{"class": args.kclass, "sigma": args.sigma, "dim": args.dim, "r": float(r), "value": float(v)}
            for r, v in zip(rs, vals)]
    return _table("kernel", ("class", "sigma", "dim", "r", "value"), rows)


def decay_profile(mode: str, beta: float = 4.0, scale: float = 2.0) -> hankel.RadialFunction:
    """Default test profiles built from the low-pass kernel dilated by ``scale``:
    the Sobolev tail ``(1 - kappa(t/s))(1+t^2)^{-beta/2}`` for ``tail`` (zero on
    ``[0, s/2]``) and ``kappa(t/s)`` for ``origin`` (one on ``[0, s/2]``, zero
    beyond ``s``). ``scale`` must be at least 1 for tail mode and at most 2 for
    origin mode."""
    k2 = kernels.make_kernel("K2")
    s = float(scale)
    if mode == "tail":
        return hankel.RadialFunction(
            lambda t: (1.0 - k2.kappa(np.asarray(t) / s)) * (1.0 + np.asarray(t) ** 2) ** (-beta / 2.0),
            lo=0.5 * s, knots=(0.5 * s, s))
    return hankel.RadialFunction(lambda t: k2.kappa(np.asarray(t) / s), lo=0.0, hi=s, knots=(0.5 * s, s))


def cmd_hankel_decay(args) -> ExperimentResult:
    fit = hankel.decay_check(decay_profile(args.mode, args.beta, args.scale), args.dim, args.mode, args.n,
                             hankel.parse_alphas(args.alphas))
    rows = [{"alpha": float(a), "value": float(v), "used": bool(u)}
            for a, v, u in zip(fit.alphas, fit.values, fit.used)]
    summary = {"slope": fit.slope, "bound": -args.n + 0.25, "truncated": fit.truncated,
               "noise_floor": fit.noise_floor}
    return _table("decay", ("alpha", "value", "used"), rows, summary, {"slope": fit.contract_ok},
                  {"mode": args.mode, "dim": args.dim, "n": args.n, "alphas": args.alphas,
                   "beta": args.beta, "scale": args.scale})


def cmd_net_norm(args) -> ExperimentResult:
    fld = nw.read_field(args.infile)
    p = ex._parse_p(args.p)
    val = nw.sobolev_norm(fld, nw.NormSpec(args.k, p))
    return _table("norm", ("k", "p", "norm"), [{"k": args.k, "p": ex._fmt_p(p), "norm": val}])


def cmd_net_sample(args) -> ExperimentResult:
    from .stability import alternating_coeffs

    ps = geo.read_points(args.centers)
    prof = rbf.sobolev_spline(args.beta, ps.dim)
    if args.coeffs == "ones":
        a = np.ones(len(ps))
    elif args.coeffs == "alternating":
        a = alternating_coeffs(ps)
    else:
        a = np.array(_floats(args.coeffs))
    rule = nw.TOL_PROFILES[args.tol_profile or "strict"]
    q = geo.separation_radius(ps) if len(ps) > 1 else 1.0
    # the tails of all centers add up at the boundary
    pad = nw.decay_radius(prof, rule.pad_tol / len(ps))
    fld = nw.sample_to_grid(nw.RBFNetwork(ps, a, prof), rule.spacing(q), pad)
    nw.write_field(fld, args.field_out)
    row = {"path": args.field_out, "points": int(fld.values.size), "spacing": fld.spacing, "pad": fld.pad_radius}
    return _table("field", ("path", "points", "spacing", "pad"), [row])


def cmd_stability_sweep(args) -> ExperimentResult:
    return ex.run_stability_sweep(_config(args))


def cmd_bernstein_sweep(args) -> ExperimentResult:
    return ex.run_bernstein_experiment(_config(args))


def cmd_inverse_run(args) -> ExperimentResult:
    return ex.run_inverse_experiment(_config(args))


COMMANDS = {
    ("geom", "report"): cmd_geom_report,
    ("geom", "gen"): cmd_geom_gen,
    ("specfun", "eval"): cmd_specfun_eval,
    ("rbf", "admissible"): cmd_rbf_admissible,
    ("kernel", "eval"): cmd_kernel_eval,
    ("hankel", "decay"): cmd_hankel_decay,
    ("net", "norm"): cmd_net_norm,
    ("net", "sample"): cmd_net_sample,
    ("stability", "sweep"): cmd_stability_sweep,
    ("bernstein", "sweep"): cmd_bernstein_sweep,
    ("inverse", "run"): cmd_inverse_run,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg_data = ex.read_config(args.config) if args.config else {}
    if args.seed is None and "seed" in cfg_data:
        args.seed = int(cfg_data["seed"])
    if args.out is None and cfg_data.get("out"):
        args.out = cfg_data["out"]
    if args.tol_profile is None and "tol_profile" in cfg_data:
        args.tol_profile = cfg_data["tol_profile"]
    fmt, path = _output(args, cfg_data.get("format"))
    try:
        result = COMMANDS[(args.group, args.command)](args)
        text = ex.emit_report(result, fmt, path)
    except (ValueError, RuntimeError, OSError, MemoryError) as exc:
        print(f"rbfbern: error: {exc}", file=sys.stderr)
        return 2
    if path is None:
        sys.stdout.write(text)
    for name, ok in result.contracts.items():
        if not ok:
            print(f"rbfbern: contract failed: {name}", file=sys.stderr)
    return 0 if result.ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
