"""Command line front end.

Subcommands:
  simulate  -- run a scenario config: sweep, estimate, fit, emit CSV/plots
  certify   -- evaluate theory constants and bound certificates from a config
  pde       -- solve the periodic mean-field equation and export densities
  selftest  -- quick internal consistency checks

Exit codes: 0 success, 2 config error, 3 budget refusal, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from pathlib import Path

import numpy as np

from . import gaussian_oracle, harness, meanfield_pde, theory_bounds
from .dynamics import ParameterError, SimulationError
from .harness import (BudgetError, ConfigError, EXIT_BUDGET, EXIT_CONFIG,
                      EXIT_NUMERICAL, EXIT_OK, FitError)
from .models import ModelError, kuramoto_constants
from .theory_bounds import BoundsError, PrecisionError, RegimeError


def _add_common(sub):
    sub.add_argument("--config", type=Path, help="scenario config file")
    sub.add_argument("--out", type=Path, help="output directory")
    sub.add_argument("--seed", type=int, help="64-bit seed override")
    sub.add_argument("--threads", type=int, default=1, help="concurrent sweep cells")
    sub.add_argument("--budget", type=float,
                     help="refuse runs above this many particle-steps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chaoslab",
        description="simulate interacting diffusions, estimate marginal "
                    "entropies, and certify convergence-rate bounds")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, doc in (("simulate", "run a sweep scenario"),
                      ("certify", "evaluate bound certificates"),
                      ("pde", "solve the periodic mean-field equation"),
                      ("selftest", "run quick internal checks")):
        sub = subs.add_parser(name, help=doc)
        _add_common(sub)
    return parser


def _require_config(args) -> Path:
    if args.config is None:
        raise ConfigError("this subcommand needs --config PATH")
    return args.config


def cmd_simulate(args) -> int:
    cfg = harness.parse_scenario(_require_config(args), out_dir=args.out,
                                 seed=args.seed, threads=args.threads,
                                 budget=args.budget)
    result = harness.run_scenario(cfg)
    print(f"wrote {len(result.rows)} rows to {cfg.out_dir / 'results.csv'}")
    for f in result.fits:
        print(f"fit {f.label}: slope {f.slope:.4f} "
              f"[{f.ci_low:.4f}, {f.ci_high:.4f}] ({f.points} points)")
    return EXIT_OK


def cmd_certify(args) -> int:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    if not parser.read(_require_config(args)):
        raise ConfigError(f"cannot read config {args.config}")
    if not parser.has_section("constants"):
        raise ConfigError("certify config needs a [constants] section")
    sec = parser["constants"]
    try:
        constants = theory_bounds.TheoryConstants(
            sigma=sec.getfloat("sigma"), gamma=sec.getfloat("gamma"),
            eta=sec.getfloat("eta"), M=sec.getfloat("m", fallback=sec.getfloat("M", 0.0)),
            C0=sec.getfloat("c0", fallback=0.0),
            delta=sec.getfloat("delta", fallback=1.0),
            bsq_sup=sec.getfloat("bsq_sup", fallback=None))
        cert = parser["certify"] if parser.has_section("certify") else {}
        case_text = cert.get("case", "1") if hasattr(cert, "get") else "1"
        case = case_text if case_text == "reverse" else int(case_text)
        ks = [int(x) for x in cert.get("k", "1").replace(",", " ").split()]
        ns = [int(x) for x in cert.get("n", "64").replace(",", " ").split()]
        ts = [float(x) for x in cert.get("t", "1").replace(",", " ").split()]
        eps = None
        if case == 2:
            eps = (float(cert.get("eps1")), float(cert.get("eps2")))
        elif case == "reverse" and cert.get("eps", None) is not None:
            eps = float(cert.get("eps"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad certify config: {exc}") from exc

    out = Path(args.out) if args.out else Path("out")
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    for name in ("sigma", "gamma", "eta", "M", "C0", "delta"):
        lines.append(f"{name} = {getattr(constants, name):.17g}")
    for name in ("Z", "gamma_tilde", "alpha", "r_c"):
        lines.append(f"{name} = {getattr(constants, name):.17g}")
    if constants.p_c is not None:
        lines.append(f"p_c = {constants.p_c:.17g}")
    tracked = constants.sigma ** 4 > 12 * constants.gamma * constants.eta
    lines.append(f"explicit_constants_tracked = {str(tracked).lower()}")
    if tracked:
        C1, C2 = theory_bounds.explicit_C1_C2(
            constants.M, constants.sigma, constants.gamma, constants.eta,
            constants.C0)
        lines.append(f"C1 = {C1:.17g}")
        lines.append(f"C2 = {C2:.17g}")
    rows = ["k,n,T,bound,certified"]
    for n in ns:
        for k in ks:
            if k > n:
                continue
            for t in ts:
                tb = theory_bounds.theorem_bound(case, k, n, t, constants,
                                                 eps=eps)
                rows.append(f"{k},{n},{t:.17g},{tb.value:.17g},"
                            f"{str(tb.certified).lower()}")
    (out / "certificate.txt").write_text("\n".join(lines) + "\n",
                                         encoding="utf-8", newline="\n")
    (out / "certificate.csv").write_text("\n".join(rows) + "\n",
                                         encoding="utf-8", newline="\n")
    print("\n".join(lines))
    print(f"wrote {out / 'certificate.txt'} and {out / 'certificate.csv'}")
    return EXIT_OK


def cmd_pde(args) -> int:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    if not parser.read(_require_config(args)):
        raise ConfigError(f"cannot read config {args.config}")
    if not parser.has_section("pde"):
        raise ConfigError("pde config needs a [pde] section")
    sec = parser["pde"]
    grid = sec.getint("grid", 256)
    kind = sec.get("kernel", "zero").strip()
    if kind == "kuramoto":
        from .models import Kuramoto
        model = Kuramoto(coupling=sec.getfloat("coupling", 1.0))
        kernel, sigma = model.kernel, model.sigma
    elif kind == "sine":
        amp = sec.getfloat("amplitude", 0.1)
        kernel = lambda u: amp * np.sin(2 * math.pi * u)
        sigma = sec.getfloat("sigma", 1.0)
    elif kind == "zero":
        kernel = lambda u: np.zeros_like(np.asarray(u, dtype=float))
        sigma = sec.getfloat("sigma", 1.0)
    else:
        raise ConfigError(f"unknown pde kernel {kind!r}")
    init = sec.get("init", "cosine").strip()
    if init == "uniform":
        mu0 = meanfield_pde.uniform_density(grid)
    elif init == "cosine":
        mu0 = meanfield_pde.cosine_density(grid, sec.getfloat("init_amplitude", 0.5))
    else:
        raise ConfigError(f"unknown pde init {init!r}")
    horizon = sec.getfloat("horizon", 1.0)
    dt = sec.getfloat("dt", 1e-3)
    record = [float(x) for x in
              sec.get("record_times", f"0 {horizon}").replace(",", " ").split()]
    snaps = meanfield_pde.solve_mv_pde(kernel, sigma, mu0, dt=dt,
                                       horizon=horizon, record_times=record)
    out = Path(args.out) if args.out else Path("out")
    out.mkdir(parents=True, exist_ok=True)
    meanfield_pde.export_csv(snaps, out / "densities.csv")
    ent = [(d.time, meanfield_pde.entropy_vs_uniform(d)) for d in snaps]
    lines = ["t,entropy_vs_uniform"] + [f"{t:.17g},{h:.17g}" for t, h in ent]
    (out / "entropy.csv").write_text("\n".join(lines) + "\n",
                                     encoding="utf-8", newline="\n")
    positives = [(t, h) for t, h in ent if h > 0]
    if len(positives) >= 5:
        rate, resid = meanfield_pde.decay_rate_fit(*zip(*positives))
        print(f"fitted entropy decay rate {rate:.6g} (rms residual {resid:.2g})")
    print(f"wrote {out / 'densities.csv'} and {out / 'entropy.csv'}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    checks = []
    v, c, s = gaussian_oracle.stationary_state(1.0, 0.5, 1.0, 10)
    checks.append(("gaussian stationary state",
                   abs(v - 19 / 56) < 1e-12 and abs(c - 1 / 56) < 1e-12))
    H = gaussian_oracle.marginal_relative_entropy(v, c, s, 1)
    checks.append(("marginal entropy positive", 0 < H < 1e-3))
    rep = kuramoto_constants(0.02, 1.0)
    checks.append(("critical couplings",
                   abs(rep.critical_coupling_0 - math.sqrt(2) / (8 * math.pi)) < 1e-10
                   and abs(rep.critical_coupling_1 - 1 / (8 * math.pi)) < 1e-10))
    flat = meanfield_pde.uniform_density(64)
    evolved = meanfield_pde.solve_mv_pde(lambda u: np.sin(2 * math.pi * u),
                                         1.0, flat, dt=1e-3, horizon=0.05,
                                         record_times=[0.05])[0]
    checks.append(("uniform density invariant",
                   float(np.abs(evolved.values - 1).max()) < 1e-12))
    val = theory_bounds.tilde_B_closed(1, 2, 1.0, 0.0, 1.0)
    checks.append(("iterated integral closed form",
                   abs(val - math.exp(-1) * (1 - math.exp(-1))) < 1e-14))
    ok = True
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
        ok = ok and passed
    return EXIT_OK if ok else EXIT_NUMERICAL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"simulate": cmd_simulate, "certify": cmd_certify,
                "pde": cmd_pde, "selftest": cmd_selftest}
    try:
        return handlers[args.command](args)
    except BudgetError as exc:
        print(f"budget refusal: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, ModelError, ParameterError, FitError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationError, PrecisionError, RegimeError, BoundsError,
            meanfield_pde.PDEError, gaussian_oracle.OracleError,
            FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
