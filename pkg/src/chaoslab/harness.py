"""Scenario orchestration: declarative configs in, CSV tables and plots out.

A scenario fixes one model, a sweep over particle counts and marginal sizes,
an estimator, and optional theory-bound evaluation.  Runs are deterministic
per seed, cells of the sweep can execute concurrently, and the emitted CSV
is byte-stable and round-trips exactly (floats carry 17 significant digits).
"""

from __future__ import annotations

import configparser
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import entropy_estim, gaussian_oracle, meanfield_pde, theory_bounds
from .dynamics import (Dirac, IsotropicGaussian, InitialLaw,
                       SimulationParams, TorusDensity, UniformTorus,
                       simulate_ensemble)
from .models import (Kuramoto, LinearGaussian, ModelError, ModelSpec,
                     TorusKernel, convex_constants, kuramoto_constants,
                     torus_constants)

CSV_COLUMNS = ("model", "n", "k", "t", "H", "stderr", "method",
               "w2_bound", "tv_bound", "theory_bound", "certified")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_NUMERICAL = 4


class ConfigError(ValueError):
    pass


class BudgetError(RuntimeError):
    def __init__(self, message, estimate):
        super().__init__(message)
        self.estimate = estimate


class FitError(ValueError):
    pass


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass(frozen=True)
class ScenarioConfig:
    model_id: str
    model: ModelSpec
    initial: InitialLaw
    n_values: tuple
    k_values: tuple
    record_times: tuple
    estimator: str
    replicas: int
    dt: float
    bins: int
    seed: int
    out_dir: Path
    evaluate_bounds: bool
    budget: float
    threads: int = 1
    delta: Optional[float] = None

    def __post_init__(self):
        if self.estimator not in ("exact", "gaussian_moment", "histogram1d"):
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if self.n_values and self.k_values and max(self.k_values) > min(self.n_values):
            raise ConfigError("k values must not exceed the smallest n")
        if list(self.record_times) != sorted(self.record_times):
            raise ConfigError("record times must be sorted")
        if self.estimator == "gaussian_moment" and not isinstance(self.model, LinearGaussian):
            raise ConfigError("gaussian_moment estimator requires the linear model")
        if self.estimator == "exact" and not isinstance(self.model, LinearGaussian):
            raise ConfigError("exact oracle only exists for the linear model")
        if self.estimator == "histogram1d" and not isinstance(self.model, (TorusKernel, Kuramoto)):
            raise ConfigError("histogram estimator requires a torus model")


@dataclass(frozen=True)
class ResultRow:
    model: str
    n: int
    k: int
    t: float
    H: float
    stderr: Optional[float]
    method: str
    w2_bound: Optional[float]
    tv_bound: Optional[float]
    theory_bound: Optional[float]
    certified: Optional[bool]

    def __post_init__(self):
        if not self.H >= 0:
            raise ConfigError("entropy column must be nonnegative")


@dataclass(frozen=True)
class FitRow:
    label: str
    slope: float
    intercept: float
    ci_low: float
    ci_high: float
    points: int


@dataclass(frozen=True)
class ExperimentResult:
    rows: tuple
    fits: tuple


# ---------------------------------------------------------------------------
# Config parsing

def _parse_floats(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _parse_ints(text: str) -> tuple:
    return tuple(int(x) for x in text.replace(",", " ").split())


def _build_model(section) -> tuple[str, ModelSpec]:
    kind = section.get("kind", "").strip()
    if kind == "linear_gaussian":
        model = LinearGaussian(a=section.getfloat("a"),
                               b_strength=section.getfloat("b"),
                               sigma=section.getfloat("sigma", 1.0))
        ident = f"linear(a={model.a:g};b={model.b_strength:g};sigma={model.sigma:g})"
    elif kind == "kuramoto":
        model = Kuramoto(coupling=section.getfloat("coupling"),
                         lambda_ratio=section.getfloat("lambda", 1.0))
        ident = f"kuramoto(K={model.coupling:g})"
    elif kind == "sine_kernel":
        amp = section.getfloat("amplitude")
        sigma = section.getfloat("sigma", 1.0)
        model = TorusKernel(kernel=lambda u, a=amp: a * np.sin(2 * math.pi * u),
                            sigma=sigma, div_sup=abs(amp) * 2 * math.pi,
                            diam=2 * abs(amp))
        ident = f"sine(amp={amp:g};sigma={sigma:g})"
    else:
        raise ConfigError(f"unknown model kind {kind!r}")
    return ident, model


def _build_initial(section, model: ModelSpec) -> InitialLaw:
    law = section.get("law", "dirac").strip()
    if law == "dirac":
        return Dirac(point=section.getfloat("point", 0.0))
    if law == "gaussian":
        return IsotropicGaussian(variance=section.getfloat("variance", 1.0),
                                 mean=section.getfloat("mean", 0.0))
    if law == "uniform":
        return UniformTorus()
    if law == "cosine":
        amp = section.getfloat("amplitude", 0.1)
        grid = section.getint("grid", 256)
        x = np.arange(grid) / grid
        return TorusDensity.from_array(1.0 + amp * np.cos(2 * math.pi * x))
    raise ConfigError(f"unknown initial law {law!r}")


def parse_scenario(path, out_dir=None, seed=None, threads=None,
                   budget=None) -> ScenarioConfig:
    """Read the flat key/value scenario file; CLI flags override the file."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config {path}")
    try:
        model_id, model = _build_model(parser["model"])
        sweep = parser["sweep"]
        bounds_on = (parser.has_section("bounds")
                     and parser["bounds"].getboolean("evaluate", fallback=False))
        delta = (parser["bounds"].getfloat("delta", fallback=None)
                 if parser.has_section("bounds") else None)
        init = _build_initial(parser["init"], model) \
            if parser.has_section("init") else Dirac(0.0)
        est_method, replicas, dt, bins = "exact", 1000, 1e-3, 64
        if parser.has_section("estimator"):
            est = parser["estimator"]
            est_method = est.get("method", "exact").strip()
            replicas = est.getint("replicas", 1000)
            dt = est.getfloat("dt", 1e-3)
            bins = est.getint("bins", 64)
        file_seed, file_dir = 12345, "out"
        if parser.has_section("output"):
            file_seed = parser["output"].getint("seed", 12345)
            file_dir = parser["output"].get("dir", "out")
        file_budget = (parser["budget"].getfloat("max_ops", 1e12)
                       if parser.has_section("budget") else 1e12)
        cfg = ScenarioConfig(
            model_id=model_id,
            model=model,
            initial=init,
            n_values=_parse_ints(sweep.get("n", "")),
            k_values=_parse_ints(sweep.get("k", "1")),
            record_times=_parse_floats(sweep.get("record_times", "0")),
            estimator=est_method,
            replicas=replicas,
            dt=dt,
            bins=bins,
            seed=seed if seed is not None else file_seed,
            out_dir=Path(out_dir) if out_dir is not None else Path(file_dir),
            evaluate_bounds=bounds_on,
            budget=float(budget) if budget is not None else file_budget,
            threads=int(threads) if threads is not None else 1,
            delta=delta,
        )
    except (KeyError, ValueError, ModelError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad scenario config: {exc}") from exc
    return cfg


# ---------------------------------------------------------------------------
# Theory constants per model

@dataclass(frozen=True)
class ScenarioTheory:
    constants: theory_bounds.TheoryConstants
    eta: float

    def bound_at(self, k: int, n: int, t: float):
        c = self.constants
        if c.r_c > 1.0:
            tb = theory_bounds.theorem_bound(1, k, n, t, c)
        elif c.r_c > 0.0:
            tb = theory_bounds.theorem_bound(2, k, n, t, c,
                                             eps=(c.r_c / 4.0, c.r_c / 2.0))
        else:
            return None, None
        return tb.value, tb.certified


def _initial_density_ratio(initial: InitialLaw) -> float:
    """Tightest lambda with 1/lambda <= initial density <= lambda."""
    if isinstance(initial, UniformTorus):
        return 1.0
    if isinstance(initial, TorusDensity):
        vals = np.asarray(initial.values, dtype=float)
        lo = float(vals.min())
        if lo <= 0:
            raise ConfigError("bound evaluation needs a strictly positive "
                              "initial density")
        return max(float(vals.max()), 1.0 / lo)
    raise ConfigError("bound evaluation on the torus needs a uniform or "
                      "density start")


def scenario_theory(cfg: ScenarioConfig) -> Optional[ScenarioTheory]:
    """Map the scenario model to (eta, gamma, M, C0) for bound evaluation."""
    if not cfg.evaluate_bounds:
        return None
    model = cfg.model
    if isinstance(model, LinearGaussian):
        if isinstance(cfg.initial, Dirac):
            eta0 = 0.0
        elif isinstance(cfg.initial, IsotropicGaussian):
            eta0 = 2.0 * cfg.initial.variance
        else:
            raise ConfigError("bound evaluation needs a Dirac or Gaussian start")
        rep = convex_constants(alpha=model.a + model.b_strength,
                               lipschitz=model.b_strength, sup_grad=math.inf,
                               eta0=eta0, sigma=model.sigma)
        M = model.b_strength ** 2 * model.sigma ** 2 / (2.0 * model.a)
    elif isinstance(model, (Kuramoto, TorusKernel)):
        lam = _initial_density_ratio(cfg.initial)
        if isinstance(model, Kuramoto):
            lam = max(lam, model.lambda_ratio)
            rep = kuramoto_constants(model.coupling, lam)
            div_sup, diam = model.coupling, model.coupling / math.pi
        else:
            div_sup, diam = model.scanned_constants()
            rep = torus_constants(lam, div_sup, diam, model.sigma)
        if rep.r_c is None:
            return None
        M = diam ** 2  # interaction values live in a set of diameter diam
    else:
        raise ConfigError("no bound recipe for this model family")
    delta = cfg.delta if cfg.delta is not None else \
        theory_bounds.default_delta(rep.r_c) if rep.r_c > 0 else 1.0
    constants = theory_bounds.TheoryConstants(
        sigma=model.sigma, gamma=rep.gamma, eta=rep.eta, M=M, C0=0.0,
        delta=delta)
    return ScenarioTheory(constants=constants, eta=rep.eta)


# ---------------------------------------------------------------------------
# Scenario execution

def _budget_estimate(cfg: ScenarioConfig) -> float:
    if cfg.estimator == "exact" or not cfg.record_times:
        return 0.0
    horizon = max(cfg.record_times)
    steps = int(round(horizon / cfg.dt))
    return float(sum(n * cfg.replicas * steps for n in cfg.n_values))


def _linear_reference(model: LinearGaussian, initial: InitialLaw, t: float):
    if isinstance(initial, Dirac):
        m0, var0 = initial.point, 0.0
    elif isinstance(initial, IsotropicGaussian):
        m0, var0 = initial.mean, initial.variance
    else:
        raise ConfigError("linear model needs a Dirac or Gaussian start")
    return gaussian_oracle.evolve_meanfield_variance(
        model.a, model.b_strength, model.sigma, (m0, var0), t)


def _run_cell_linear(cfg: ScenarioConfig, n: int, theory) -> list[ResultRow]:
    model = cfg.model
    rows = []
    if cfg.estimator == "exact":
        if isinstance(cfg.initial, Dirac):
            init3 = (cfg.initial.point, 0.0, 0.0)
        else:
            init3 = (cfg.initial.mean, cfg.initial.variance, 0.0)
        for t in cfg.record_times:
            part = gaussian_oracle.evolve_particle_covariance(
                model.a, model.b_strength, model.sigma, n, init3, t)
            mf = _linear_reference(model, cfg.initial, t)
            for k in cfg.k_values:
                if t == 0 and (part.v - part.c <= 0 or mf.s <= 0):
                    H = 0.0  # identical (possibly degenerate) starts
                else:
                    H = float(gaussian_oracle.marginal_relative_entropy(
                        part.v, part.c, mf.s, k, mean_diff=part.m - mf.m))
                rows.append(_finish_row(cfg, theory, n, k, t, H, None, "exact"))
        return rows
    params = SimulationParams(dt=cfg.dt, horizon=max(cfg.record_times),
                              record_times=cfg.record_times,
                              replicas=cfg.replicas, seed=cfg.seed + n,
                              initial=cfg.initial)
    snaps = simulate_ensemble(model, params, n=n)
    for ens in snaps:
        mf = _linear_reference(model, cfg.initial, ens.time)
        for k in cfg.k_values:
            rep = entropy_estim.gaussian_moment_entropy(ens, k, mf.s)
            rows.append(_finish_row(cfg, theory, n, k, ens.time, rep.H,
                                    rep.stderr, rep.method))
    return rows


def _run_cell_torus(cfg: ScenarioConfig, n: int, theory) -> list[ResultRow]:
    model = cfg.model
    horizon = max(cfg.record_times)
    grid = 256
    if isinstance(cfg.initial, TorusDensity):
        init_density = meanfield_pde.DensityGrid(np.asarray(cfg.initial.values))
        grid = init_density.size
    elif isinstance(cfg.initial, UniformTorus):
        init_density = meanfield_pde.uniform_density(grid)
    else:
        raise ConfigError("torus scenarios need a uniform or density start")
    refs = meanfield_pde.solve_mv_pde(model.kernel, model.sigma, init_density,
                                      dt=min(cfg.dt, 1e-3), horizon=horizon,
                                      record_times=cfg.record_times)
    params = SimulationParams(dt=cfg.dt, horizon=horizon,
                              record_times=cfg.record_times,
                              replicas=cfg.replicas, seed=cfg.seed + n,
                              initial=cfg.initial)
    snaps = simulate_ensemble(model, params, n=n)
    rows = []
    for ens, ref in zip(snaps, refs):
        samples = ens.positions[:, :, 0].ravel()
        for k in cfg.k_values:
            if k != 1:
                raise ConfigError("histogram estimator handles k = 1 only")
            rep = entropy_estim.histogram_entropy_1d(samples, ref, cfg.bins,
                                                     k=1, n=n, t=ens.time)
            rows.append(_finish_row(cfg, theory, n, k, ens.time, rep.H,
                                    rep.stderr, rep.method))
    return rows


def _finish_row(cfg, theory, n, k, t, H, stderr, method) -> ResultRow:
    w2 = tv = bound = cert = None
    tv = entropy_estim.tv_bound_from_entropy(H) if math.isfinite(H) else None
    if theory is not None:
        w2 = entropy_estim.w2_bound_from_entropy(H, theory.eta, k) \
            if math.isfinite(H) else None
        bound, cert = theory.bound_at(k, n, t)
    return ResultRow(model=cfg.model_id, n=n, k=k, t=t, H=H, stderr=stderr,
                     method=method, w2_bound=w2, tv_bound=tv,
                     theory_bound=bound, certified=cert)


def run_scenario(cfg: ScenarioConfig) -> ExperimentResult:
    """Execute the sweep, write CSV and plots, return the in-memory result."""
    estimate = _budget_estimate(cfg)
    if estimate > cfg.budget:
        raise BudgetError(
            f"scenario needs ~{estimate:.3g} particle-steps, budget is "
            f"{cfg.budget:.3g}", estimate)
    theory = scenario_theory(cfg)
    if not cfg.n_values:
        result = ExperimentResult(rows=(), fits=())
        emit_report(result, cfg.out_dir)
        return result

    runner = _run_cell_linear if isinstance(cfg.model, LinearGaussian) \
        else _run_cell_torus
    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            cells = list(pool.map(lambda n: runner(cfg, n, theory), cfg.n_values))
    else:
        cells = [runner(cfg, n, theory) for n in cfg.n_values]
    rows = sorted((r for cell in cells for r in cell),
                  key=lambda r: (r.n, r.k, r.t))

    fits = []
    if len(cfg.n_values) >= 4 and cfg.record_times:
        t_last = cfg.record_times[-1]
        for k in cfg.k_values:
            pts = [(r.n, r.H) for r in rows
                   if r.k == k and r.t == t_last and r.H > 0]
            if len(pts) >= 4:
                slope, intercept, (lo, hi) = fit_scaling_exponent(pts)
                fits.append(FitRow(label=f"H^{k} vs n at t={t_last:g}",
                                   slope=slope, intercept=intercept,
                                   ci_low=lo, ci_high=hi, points=len(pts)))
    result = ExperimentResult(rows=tuple(rows), fits=tuple(fits))
    emit_report(result, cfg.out_dir)
    return result


# ---------------------------------------------------------------------------
# Fits

def fit_scaling_exponent(points: Sequence[tuple]) -> tuple[float, float, tuple]:
    """(slope, intercept, CI) of the least-squares line through (log x, log H).

    Nonpositive entropies are dropped with a warning; fewer than 4 surviving
    points is an error.  The CI is a normal-approximation 95% interval from
    the residual variance.
    """
    kept = [(x, h) for x, h in points if h > 0 and x > 0]
    dropped = len(points) - len(kept)
    if dropped:
        warnings.warn(f"dropped {dropped} nonpositive point(s) from the fit")
    if len(kept) < 4:
        raise FitError(f"need at least 4 positive points, have {len(kept)}")
    lx = np.log([x for x, _ in kept])
    ly = np.log([h for _, h in kept])
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    fitted = A @ coef
    dof = max(len(kept) - 2, 1)
    s2 = float(np.sum((ly - fitted) ** 2)) / dof
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    se = math.sqrt(s2 / sxx) if sxx > 0 else math.inf
    return slope, intercept, (slope - 1.96 * se, slope + 1.96 * se)


# ---------------------------------------------------------------------------
# Emission

def result_to_csv_text(result: ExperimentResult) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in result.rows:
        lines.append(",".join([
            r.model, str(r.n), str(r.k), _fmt(r.t), _fmt(r.H), _fmt(r.stderr),
            r.method, _fmt(r.w2_bound), _fmt(r.tv_bound), _fmt(r.theory_bound),
            _fmt(r.certified),
        ]))
    return "\n".join(lines) + "\n"


def parse_result_csv(path) -> list[ResultRow]:
    """Inverse of the CSV emission; exact float round-trip."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.strip("\n").split("\n")
    if lines[0] != ",".join(CSV_COLUMNS):
        raise ConfigError("unexpected CSV header")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise ConfigError(f"malformed CSV line: {line!r}")
        opt = lambda s: None if s == "" else float(s)
        cert = {"": None, "true": True, "false": False}[parts[10]]
        rows.append(ResultRow(model=parts[0], n=int(parts[1]), k=int(parts[2]),
                              t=float(parts[3]), H=float(parts[4]),
                              stderr=opt(parts[5]), method=parts[6],
                              w2_bound=opt(parts[7]), tv_bound=opt(parts[8]),
                              theory_bound=opt(parts[9]), certified=cert))
    return rows


def emit_report(result: ExperimentResult, out_dir, make_plots: bool = True
                ) -> list[Path]:
    """Write results.csv, fits.csv and the log-log plots; returns the paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / "results.csv"]
        paths[0].write_text(result_to_csv_text(result), encoding="utf-8",
                            newline="\n")
        if result.fits:
            fit_lines = ["label,slope,intercept,ci_low,ci_high,points"]
            for f in result.fits:
                fit_lines.append(",".join([f.label, _fmt(f.slope),
                                           _fmt(f.intercept), _fmt(f.ci_low),
                                           _fmt(f.ci_high), str(f.points)]))
            p = out / "fits.csv"
            p.write_text("\n".join(fit_lines) + "\n", encoding="utf-8",
                         newline="\n")
            paths.append(p)
        if make_plots and result.rows:
            paths += _plot_sweeps(result, out)
    except OSError as exc:
        raise ConfigError(f"cannot write report under {out}: {exc}") from exc
    return paths


def _plot_sweeps(result: ExperimentResult, out: Path) -> list[Path]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []
    t_last = max(r.t for r in result.rows)
    ks = sorted({r.k for r in result.rows})
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    any_pts = False
    for k in ks:
        pts = sorted((r.n, r.H) for r in result.rows
                     if r.k == k and r.t == t_last and r.H > 0)
        if len(pts) >= 2:
            ns, hs = zip(*pts)
            ax.loglog(ns, hs, "o-", label=f"k={k}")
            any_pts = True
    for f in result.fits:
        ax.set_title(f"{f.label}: slope {f.slope:.3f}")
        break
    if any_pts:
        ax.set_xlabel("n")
        ax.set_ylabel("marginal relative entropy")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        p = out / "scaling.png"
        fig.savefig(p, dpi=110, bbox_inches="tight")
        paths.append(p)
    plt.close(fig)

    with_bounds = [r for r in result.rows
                   if r.theory_bound is not None and r.t == t_last and r.H > 0]
    if with_bounds:
        fig, ax = plt.subplots(figsize=(6.0, 4.2))
        for k in sorted({r.k for r in with_bounds}):
            pts = sorted((r.n, r.H, r.theory_bound) for r in with_bounds
                         if r.k == k)
            ns = [p[0] for p in pts]
            ax.loglog(ns, [p[1] for p in pts], "o-", label=f"data k={k}")
            ax.loglog(ns, [p[2] for p in pts], "--", label=f"bound k={k}")
        ax.set_xlabel("n")
        ax.set_ylabel("entropy and certified bound")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
        p = out / "bound_overlay.png"
        fig.savefig(p, dpi=110, bbox_inches="tight")
        paths.append(p)
        plt.close(fig)
    return paths
