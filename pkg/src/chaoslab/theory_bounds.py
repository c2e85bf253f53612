"""Explicit constants, iterated exponential integrals, and bound assembly.

Everything quantitative that the uniform-in-time convergence analysis
produces lives here: the critical ratios r_c and p_c, the tracked constants
C1/C2 of the high-temperature regime, the iterated convolution integrals
A~ and B~ with their closed forms and summation inequalities, the coupled
entropy-hierarchy ODE, the two-part entropy bound assembly, the bootstrap
exponent schedule, and a discrete Gronwall envelope checker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import integrate as _integrate
from scipy.linalg import expm
from scipy.special import betainc, gammaln

EXACT_SUM_LIMIT = 512


class BoundsError(ValueError):
    pass


class RegimeError(BoundsError):
    """Raised when a formula is requested outside its validity regime."""


class PrecisionError(BoundsError):
    pass


@dataclass(frozen=True)
class TheoryConstants:
    """Model-level constants (sigma, gamma, eta, M, C0) plus the split delta.

    All derived quantities are recomputed properties, never stored.
    bsq_sup (the sup of |b|^2) is optional and only feeds p_c.
    """

    sigma: float
    gamma: float
    eta: float
    M: float
    C0: float
    delta: float = 1.0
    bsq_sup: Optional[float] = None

    def __post_init__(self):
        if min(self.sigma, self.gamma, self.eta) <= 0:
            raise BoundsError("sigma, gamma, eta must be positive")
        if self.M < 0 or self.C0 < 0:
            raise BoundsError("M and C0 must be nonnegative")
        if self.delta <= 0:
            raise BoundsError("delta must be positive")

    @property
    def Z(self) -> float:
        return self.sigma ** 2 / (4.0 * self.eta)

    @property
    def gamma_tilde(self) -> float:
        return self.gamma * (1.0 + self.delta) / self.sigma ** 2

    @property
    def alpha(self) -> float:
        return self.sigma ** 4 / (4.0 * self.gamma * self.eta * (1.0 + self.delta))

    @property
    def r_c(self) -> float:
        return self.sigma ** 4 / (4.0 * self.gamma * self.eta) - 1.0

    @property
    def p_c(self) -> Optional[float]:
        if self.bsq_sup is None:
            return None
        return self.sigma ** 4 / (8.0 * self.eta * self.bsq_sup)


def rate_constants(sigma: float, gamma: float, eta: float,
                   bsq_sup: Optional[float] = None
                   ) -> tuple[float, Optional[float]]:
    """(r_c, p_c): r_c = sigma^4/(4 gamma eta) - 1; p_c needs sup|b|^2."""
    if min(sigma, gamma, eta) <= 0:
        raise BoundsError("sigma, gamma, eta must be positive")
    r_c = sigma ** 4 / (4.0 * gamma * eta) - 1.0
    p_c = None
    if bsq_sup is not None:
        if bsq_sup <= 0:
            raise BoundsError("bsq_sup must be positive")
        p_c = sigma ** 4 / (8.0 * eta * bsq_sup)
    return r_c, p_c


def explicit_C1_C2(M: float, sigma: float, gamma: float, eta: float,
                   C0: float) -> tuple[float, float]:
    """Tracked constants of the high-temperature bound; need sigma^4 > 12 gamma eta.

    C1 = 10000 M sigma^4 gamma^2 eta / (1 - 12 gamma eta sigma^-4)^2,
    C2 = 1250 (C0 + sqrt(gamma M C0) eta sigma^-4 / (1 - 12 gamma eta sigma^-4))
         * sigma^8 / (gamma^2 eta^2).
    """
    if min(sigma, gamma, eta) <= 0 or M < 0 or C0 < 0:
        raise BoundsError("invalid constants")
    gap = 1.0 - 12.0 * gamma * eta / sigma ** 4
    if gap <= 0:
        raise RegimeError(
            "explicit constants untracked: need sigma^4 > 12 gamma eta")
    C1 = 10000.0 * M * sigma ** 4 * gamma ** 2 * eta / gap ** 2
    C2 = 1250.0 * (C0 + math.sqrt(gamma * M * C0) * eta * sigma ** -4 / gap) \
        * sigma ** 8 / (gamma ** 2 * eta ** 2)
    return C1, C2


# ---------------------------------------------------------------------------
# Iterated exponential-convolution integrals

def tilde_B_closed(k: int, ell, gamma_tilde: float, Z: float, t: float):
    """Closed form of the B~ iterated integral, log-space, any ell size.

    For ell > k:
        exp(-Z t - gamma~ k t) * C(ell-1, k-1) * (1 - e^{-gamma~ t})^{ell-k};
    at ell = k the convention exp(-(Z + gamma~ k) t).  Vectorized in ell.
    """
    ell_arr = np.asarray(ell)
    if np.any(ell_arr < k):
        raise BoundsError("need ell >= k")
    if k < 1 or gamma_tilde <= 0 or Z < 0 or t < 0:
        raise BoundsError("need k >= 1, gamma_tilde > 0, Z >= 0, t >= 0")
    ell_f = ell_arr.astype(float)
    log_binom = gammaln(ell_f) - gammaln(ell_f - k + 1.0) - gammaln(k)
    x = gamma_tilde * t
    with np.errstate(divide="ignore", invalid="ignore"):
        log_q = np.log(-np.expm1(-x)) if x > 0 else -math.inf
        log_val = -Z * t - gamma_tilde * k * t + log_binom + (ell_f - k) * log_q
    out = np.where(ell_arr == k, math.exp(-(Z + gamma_tilde * k) * t),
                   np.exp(log_val))
    return float(out) if out.ndim == 0 else out


def tilde_A_sup(k: int, ell: int, alpha: float
                ) -> tuple[float, float, float]:
    """(sup over time of A~, first bound, second bound).

    The supremum is the exact product prod_{i=k}^{ell} i/(i+alpha),
    bounded by ((k+alpha)/(ell+1+alpha))^alpha and by
    (1+alpha)^alpha (k/(ell+1))^alpha.
    """
    if not 1 <= k <= ell:
        raise BoundsError("need 1 <= k <= ell")
    if alpha <= 0:
        raise BoundsError("alpha must be positive")
    log_prod = (gammaln(ell + 1.0) - gammaln(float(k))
                - gammaln(ell + 1.0 + alpha) + gammaln(k + alpha))
    value = math.exp(log_prod)
    bound1 = ((k + alpha) / (ell + 1.0 + alpha)) ** alpha
    bound2 = math.exp(alpha * math.log1p(alpha)) * (k / (ell + 1.0)) ** alpha
    if value > bound1 * (1 + 1e-12) or value > bound2 * (1 + 1e-12):
        raise BoundsError("product exceeded its analytic bounds (internal error)")
    return value, bound1, bound2


def _tilde_A_sup_vec(k: int, ell: np.ndarray, alpha: float) -> np.ndarray:
    ell_f = ell.astype(float)
    return np.exp(gammaln(ell_f + 1.0) - gammaln(float(k))
                  - gammaln(ell_f + 1.0 + alpha) + gammaln(k + alpha))


def _tilde_A_time_beta(k: int, ell, gamma_tilde: float, Z: float,
                       t: float):
    """Exact A~(t) via the incomplete Beta function; vectorized in ell.

    Substituting u = e^{-gamma~ s} turns the time integral of the closed-form
    density into an incomplete Beta integral with parameters
    (alpha + k, ell - k + 1) evaluated from e^{-gamma~ t} to 1.
    """
    ell_arr = np.asarray(ell)
    alpha = Z / gamma_tilde
    sup = _tilde_A_sup_vec(k, ell_arr, alpha) if ell_arr.ndim else \
        _tilde_A_sup_vec(k, ell_arr[None], alpha)[0]
    x = math.exp(-gamma_tilde * t)
    tail = betainc(alpha + k, ell_arr.astype(float) - k + 1.0, x)
    out = sup * (1.0 - tail)
    return float(out) if np.asarray(out).ndim == 0 else out


def tilde_A_time(k: int, ell: int, gamma_tilde: float, Z: float, t: float,
                 tol: float = 1e-10) -> float:
    """A~(t) by adaptive quadrature of its derivative gamma~ ell B~(s).

    Monotone nondecreasing in t, converging to tilde_A_sup.  Raises
    PrecisionError when the quadrature cannot certify the tolerance.
    """
    if ell < k or k < 1:
        raise BoundsError("need ell >= k >= 1")
    if t < 0:
        raise BoundsError("time must be nonnegative")
    if t == 0:
        return 0.0
    integrand = lambda s: gamma_tilde * ell * tilde_B_closed(k, ell, gamma_tilde, Z, s)
    # beyond s_max the integrand tail is certified below tol/10 by its
    # e^{-(Z + gamma~ k)s} envelope, so the domain can be capped there
    rate = Z + gamma_tilde * k
    log_binom = float(gammaln(ell) - gammaln(ell - k + 1.0) - gammaln(k))
    s_max = (log_binom + math.log(gamma_tilde * ell / rate)
             - math.log(tol / 10.0)) / rate
    upper = min(t, max(s_max, 1.0 / rate))
    # the density peaks near the mean sum of exponential waiting times
    peak = sum(1.0 / (gamma_tilde * j) for j in range(k, ell + 1))
    pts = [p for p in (0.5 * peak, peak, 2 * peak) if 0 < p < upper]
    val, err = _integrate.quad(integrand, 0.0, upper, points=pts or None,
                               epsabs=tol * 0.1, epsrel=tol * 0.1, limit=400)
    if err > tol * max(1.0, abs(val)):
        raise PrecisionError(f"quadrature error {err:.2e} above tolerance {tol:.2e}")
    return float(val)


# ---------------------------------------------------------------------------
# Summation inequalities

@dataclass(frozen=True)
class SumBoundsCheck:
    lhs_B: float
    rhs_B: float
    lhs_A_scaled: Optional[float]
    rhs_A: Optional[float]
    branch: Optional[str]
    violated: bool
    note: str = ""


def lemma_sum_bounds(k: int, n: int, p: float, gamma_tilde: float, Z: float,
                     T: float) -> SumBoundsCheck:
    """Both sides of the two summation inequalities; the flag must stay False.

    B-side: sum over ell of ell^p B~(T) against 2 k^p (1+p)^p e^{(gamma~ p - Z)T}.
    A-side: the normalized sum of ell^p sup A~ against the branch
    k^alpha/n^{alpha+1-p} (p - alpha > -1) or k^{p+1}/n^2 (p - alpha < -1);
    the borderline p = alpha - 1 is excluded.
    """
    if not 1 <= k < n:
        raise BoundsError("need 1 <= k < n")
    if p < 0 or gamma_tilde <= 0 or Z < 0 or T < 0:
        raise BoundsError("invalid parameters")
    ells = np.arange(k, n)
    lhs_B = float(np.sum(ells ** p * tilde_B_closed(k, ells, gamma_tilde, Z, T)))
    rhs_B = 2.0 * k ** p * (1.0 + p) ** p * math.exp((gamma_tilde * p - Z) * T)
    violated = lhs_B > rhs_B * (1 + 1e-12)

    alpha = Z / gamma_tilde
    if abs(p - (alpha - 1.0)) < 1e-12 or p == 0 or alpha == 0:
        return SumBoundsCheck(lhs_B, rhs_B, None, None, None, violated,
                              note="A-side skipped: p = alpha - 1 excluded" if alpha
                              else "A-side skipped: alpha = 0")
    sup_vals = _tilde_A_sup_vec(k, ells, alpha)
    prefac = 1.0 / (1.0 + math.exp(alpha * math.log1p(alpha)) / abs(p - alpha + 1.0))
    lhs_A = prefac * float(np.sum(ells ** p * sup_vals)) / n ** 2
    if p - alpha > -1.0:
        rhs_A, branch = k ** alpha / n ** (alpha + 1.0 - p), "p-alpha>-1"
    else:
        rhs_A, branch = k ** (p + 1.0) / n ** 2, "p-alpha<-1"
    violated = violated or lhs_A > rhs_A * (1 + 1e-12)
    return SumBoundsCheck(lhs_B, rhs_B, lhs_A, rhs_A, branch, violated)


def gamma_ratio_inequality_gap(z: int, p: float) -> float:
    """log(2 Gamma(z+p)) - log(z^p Gamma(z)); nonnegative when the inequality holds."""
    if z < 1 or p < 0:
        raise BoundsError("need z >= 1 and p >= 0")
    return math.log(2.0) + gammaln(z + p) - p * math.log(z) - gammaln(z)


# ---------------------------------------------------------------------------
# Hierarchy ODE

@dataclass(frozen=True)
class HierarchyProfile:
    """Marginal-entropy levels H^k, k = 1..len(values), at one time."""

    values: np.ndarray
    n: int
    t: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).copy()
        if np.any(vals < 0):
            raise BoundsError("entropy levels must be nonnegative")
        if np.any(np.diff(vals) < -1e-9 * max(1.0, float(vals.max(initial=0.0)))):
            # marginal entropy should grow with k; warn-level only
            object.__setattr__(self, "monotone", False)
        else:
            object.__setattr__(self, "monotone", True)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


def hierarchy_ode_solve(c1: float, c2: float, c3: float, n: int,
                        initial: HierarchyProfile,
                        boundary: Union[float, Callable[[float], float]],
                        T: float, rtol: float = 1e-10) -> HierarchyProfile:
    """Integrate the equality version of the coupled hierarchy to time T:

        dH^k/dt = -c1 H^k + c2 k^3/n^2 + c3 k (H^{k+1} - H^k),  k = 1..n-1,

    with the top level H^n(t) prescribed by `boundary`.  Constant boundary
    uses the exact matrix-exponential solution; a callable falls back to a
    stiff integrator.
    """
    if min(c1, c2, c3) < 0:
        raise BoundsError("coefficients must be nonnegative")
    if n < 2:
        raise BoundsError("need n >= 2")
    H0 = np.asarray(initial.values, dtype=float)
    if H0.shape != (n - 1,):
        raise BoundsError(f"initial profile must provide H^1..H^{n-1}")
    ks = np.arange(1, n)
    diag = -(c1 + c3 * ks)
    A = np.diag(diag)
    A[np.arange(n - 2), np.arange(1, n - 1)] = c3 * ks[:-1]
    source = c2 * ks.astype(float) ** 3 / n ** 2

    if callable(boundary):
        def rhs(t, h):
            out = diag * h + source
            out[:-1] += c3 * ks[:-1] * h[1:]
            out[-1] += c3 * ks[-1] * boundary(t)
            return out
        sol = _integrate.solve_ivp(rhs, (0.0, T), H0, method="BDF",
                                   rtol=rtol, atol=rtol * 1e-2, t_eval=[T])
        if not sol.success:
            raise PrecisionError(f"stiff integration failed: {sol.message}")
        vals = sol.y[:, -1]
    elif c1 == 0.0 and c3 == 0.0:
        vals = H0 + source * T
    else:
        f = source.copy()
        f[-1] += c3 * ks[-1] * float(boundary)
        # steady state then exact exponential relaxation
        H_ss = np.linalg.solve(A, -f)
        vals = H_ss + expm(A * T) @ (H0 - H_ss)
    vals = np.clip(vals, 0.0, None)
    return HierarchyProfile(values=vals, n=n, t=T)


def hierarchy_steady_state(c1: float, c2: float, c3: float, n: int,
                           boundary_value: float) -> np.ndarray:
    """Fixed point by back-substitution: (c1 + c3 k) H^k = c2 k^3/n^2 + c3 k H^{k+1}."""
    H = np.zeros(n)
    H[-1] = boundary_value
    for k in range(n - 1, 0, -1):
        H[k - 1] = (c2 * k ** 3 / n ** 2 + c3 * k * H[k]) / (c1 + c3 * k)
    return H[:-1]


# ---------------------------------------------------------------------------
# Two-part bound assembly

@dataclass(frozen=True)
class EntropyBounds:
    bound_Hn: float
    bound_Hk: float
    exact_sums: bool
    label: str


def lemma33_bounds(constants: TheoryConstants, p1: float, p2: float,
                   k: int, n: int, T: float,
                   p: Optional[float] = None, C1: Optional[float] = None,
                   exact_limit: int = EXACT_SUM_LIMIT) -> EntropyBounds:
    """Assembled uniform-in-time bounds on H^n and H^k.

    Part (1) (p, C1 absent) uses the raw fluctuation constant; part (2)
    sharpens with the bootstrap hypothesis sup_T H^3 <= C1/n^p via
    C2 = 2M + sqrt(gamma M C1).  Sums are exact (closed forms) up to
    n = exact_limit, otherwise replaced by their analytic majorants and
    labeled "bounded, not exact".
    """
    if not (0 < p1 <= 2 and 0 < p2 <= 2):
        raise BoundsError("need p1, p2 in (0, 2]")
    if not 1 <= k < n:
        raise BoundsError("need 1 <= k < n")
    if (p is None) != (C1 is None):
        raise BoundsError("pass p and C1 together")
    if p is not None and not (0 <= p <= 2):
        raise BoundsError("need p in [0, 2]")
    c = constants
    Z, gt, alpha = c.Z, c.gamma_tilde, c.alpha
    if p is None:
        p_eff, C2 = 0.0, c.M
        label = "part1"
    else:
        p_eff, C2 = p, 2.0 * c.M + math.sqrt(c.gamma * c.M * C1)
        label = "part2"
    bound_Hn = (c.C0 * n ** (p1 - p2) * math.exp(-Z * T)
                + 4.0 * n ** (1.0 - p_eff / 2.0) * C2 * c.eta / c.sigma ** 4)

    q = 2.0 - p_eff / 2.0
    if n <= exact_limit:
        ells = np.arange(k, n)
        sum_B = float(np.sum(ells ** p1 * tilde_B_closed(k, ells, gt, Z, T)))
        sum_A = float(np.sum(ells ** q * _tilde_A_time_beta(k, ells, gt, Z, T)))
        term2 = C2 / (c.delta * c.gamma * n ** 2) * sum_A
        exact = True
    else:
        sum_B = 2.0 * k ** p1 * (1.0 + p1) ** p1 * math.exp((gt * p1 - Z) * T)
        if abs(q - (alpha - 1.0)) < 1e-12:
            raise RegimeError("analytic A-sum bound excluded at p = alpha - 1; "
                              "perturb delta")
        prefac = 1.0 + math.exp(alpha * math.log1p(alpha)) / abs(q - alpha + 1.0)
        if q - alpha > -1.0:
            norm_sum = k ** alpha / n ** (alpha + 1.0 - q)
        else:
            norm_sum = k ** (q + 1.0) / n ** 2
        term2 = C2 / (c.delta * c.gamma) * prefac * norm_sum
        exact = False
    term1 = c.C0 / n ** p2 * sum_B
    a_top = (_tilde_A_time_beta(k, np.array([n - 1]), gt, Z, T)[0]
             if exact else tilde_A_sup(k, n - 1, alpha)[0])
    bound_Hk = term1 + term2 + a_top * bound_Hn
    return EntropyBounds(bound_Hn=bound_Hn, bound_Hk=bound_Hk,
                         exact_sums=exact,
                         label=label if exact else label + ", bounded, not exact")


def default_delta(r_c: float, avoid_q: Optional[float] = None) -> float:
    """A regime-consistent split parameter.

    High ratio (r_c > 2): alpha a bit above 3, as the first-pass argument
    wants; low ratio: alpha = 1 + 3 r_c/4 inside (1, 1 + r_c).  Nudged off
    any requested singular exponent q = alpha - 1.
    """
    if r_c <= 0:
        raise RegimeError("positive critical ratio required")
    target_alpha = 3.2 if r_c > 2.2 else 1.0 + 0.75 * r_c
    delta = (1.0 + r_c) / target_alpha - 1.0
    if avoid_q is not None:
        alpha = (1.0 + r_c) / (1.0 + delta)
        if abs((alpha - 1.0) - avoid_q) < 1e-9:
            delta *= 1.01
    return delta


def optimize_delta(assemble: Callable[[float], float], r_c: float,
                   iters: int = 60) -> tuple[float, float]:
    """Golden-section search of a bound assembly over delta in (0, r_c)."""
    if r_c <= 0:
        raise RegimeError("positive critical ratio required")
    lo, hi = 1e-6 * r_c, r_c * (1 - 1e-9)
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - phi * (hi - lo)
    x2 = lo + phi * (hi - lo)
    f1, f2 = assemble(x1), assemble(x2)
    for _ in range(iters):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - phi * (hi - lo)
            f1 = assemble(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + phi * (hi - lo)
            f2 = assemble(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


# ---------------------------------------------------------------------------
# Bootstrap schedule

@dataclass(frozen=True)
class IterationSchedule:
    rows: tuple                 # (m, q_m, achieved exponent of 1/n)
    m_star: Optional[int]       # first pass exceeding exponent 2 (r > 1)
    limit_exponent: float


class ScheduleError(BoundsError):
    pass


def iteration_schedule(r: float, r_c: float,
                       eps: Optional[float] = None) -> IterationSchedule:
    """Exponent bootstrap q_m = 2(1 - 2^-m) driven by the rate parameter r.

    For r > 1 the schedule terminates at the first pass with r q_m > 2;
    for r <= 1 the exponents only approach 2r, so a stopping slack eps is
    required.  Landing exactly on r q_m = 2 is rejected (perturb r).
    """
    if not 0 < r < min(2.0, r_c):
        raise ScheduleError("need 0 < r < min(2, r_c)")
    if r <= 1.0 and eps is None:
        raise ScheduleError("r <= 1 never exceeds exponent 2; pass a stopping eps")
    rows = []
    m = 0
    while True:
        m += 1
        q_m = 2.0 * (1.0 - 2.0 ** -m)
        prod = r * q_m
        if abs(prod - 2.0) < 1e-12:
            raise ScheduleError(
                f"r q_{m} = 2 exactly; perturb r away from {2.0 / q_m}")
        if prod > 2.0:
            rows.append((m, q_m, 2.0))
            return IterationSchedule(rows=tuple(rows), m_star=m,
                                     limit_exponent=2.0)
        rows.append((m, q_m, prod))
        if r <= 1.0 and prod >= 2.0 * r - eps:
            return IterationSchedule(rows=tuple(rows), m_star=None,
                                     limit_exponent=2.0 * r)
        if m > 10_000:
            raise ScheduleError("schedule failed to terminate")


# ---------------------------------------------------------------------------
# Theorem-level bound shapes

@dataclass(frozen=True)
class TheoremBound:
    value: float
    certified: bool
    note: str


def theorem_bound(case: Union[int, str], k: int, n: int, T: float,
                  constants: TheoryConstants,
                  eps: Union[None, float, tuple] = None) -> TheoremBound:
    """Bound value (or shape) for one (k, n, T) under the requested case.

    Case 1 (ratio above 1): fully certified value
    (C1 + C2 e^{-sigma^2 T/(24 eta)}) (k/n)^2 when sigma^4 > 12 gamma eta,
    otherwise the (k/n)^2 shape with unit constant.  Case 2 (ratio in
    (0, 1]) and the reversed case only ever return shapes; their constants
    are existential.
    """
    if not 1 <= k <= n:
        raise BoundsError("need 1 <= k <= n")
    c = constants
    if case == 1:
        if not c.r_c > 1.0:
            raise RegimeError(f"case 1 needs r_c > 1, got {c.r_c}")
        if c.sigma ** 4 > 12.0 * c.gamma * c.eta:
            C1, C2 = explicit_C1_C2(c.M, c.sigma, c.gamma, c.eta, c.C0)
            val = (C1 + C2 * math.exp(-c.sigma ** 2 * T / (24.0 * c.eta))) \
                * (k / n) ** 2
            return TheoremBound(val, True, "certified")
        return TheoremBound((k / n) ** 2, False,
                            "constant untracked: sigma^4 <= 12 gamma eta")
    if case == 2:
        if not 0 < c.r_c <= 1.0:
            raise RegimeError(f"case 2 needs 0 < r_c <= 1, got {c.r_c}")
        if not (isinstance(eps, tuple) and len(eps) == 2):
            raise BoundsError("case 2 needs eps = (eps1, eps2)")
        e1, e2 = eps
        if not 0 < e1 < e2 < c.r_c:
            raise BoundsError("need 0 < eps1 < eps2 < r_c")
        val = k ** (1.0 + c.r_c - e1) / n ** (2.0 * c.r_c - e2)
        return TheoremBound(val, False, "constant untracked")
    if case == "reverse":
        if c.p_c is None:
            raise BoundsError("reversed bound needs bsq_sup")
        if c.p_c > 2.0:
            return TheoremBound((k / n) ** 2, False,
                                "constant untracked (reversed, optimal shape)")
        if not isinstance(eps, (int, float)) or not 0 < eps < c.p_c:
            raise BoundsError("reversed case with p_c <= 2 needs eps in (0, p_c)")
        return TheoremBound((k / n) ** (c.p_c - eps), False,
                            "constant untracked (reversed)")
    raise BoundsError(f"unknown case {case!r}")


# ---------------------------------------------------------------------------
# Gronwall envelope

@dataclass(frozen=True)
class GronwallReport:
    envelope: np.ndarray
    violations: tuple
    tol: float


def gronwall_envelope(times: Sequence[float], H: Sequence[float],
                      g: Sequence[float], c: float,
                      tol: Optional[float] = None) -> GronwallReport:
    """Check H_t <= e^{-ct} H_0 + int_0^t e^{-c(t-u)} g_u du on a sample grid.

    The convolution is accumulated by interval-wise trapezoid with the exact
    decay factor between nodes.  Samples exceeding the envelope by more than
    the quadrature tolerance are flagged.
    """
    t = np.asarray(times, dtype=float)
    H_arr = np.asarray(H, dtype=float)
    g_arr = np.asarray(g, dtype=float)
    if c <= 0:
        raise BoundsError("decay rate c must be positive")
    if np.any(g_arr < 0):
        raise BoundsError("source samples must be nonnegative")
    if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
        raise BoundsError("times must be strictly increasing")
    if H_arr.shape != t.shape or g_arr.shape != t.shape:
        raise BoundsError("H and g must match the time grid")
    conv = np.zeros_like(t)
    for i in range(1, t.size):
        dt = t[i] - t[i - 1]
        decay = math.exp(-c * dt)
        conv[i] = decay * conv[i - 1] + 0.5 * dt * (decay * g_arr[i - 1] + g_arr[i])
    envelope = np.exp(-c * t) * H_arr[0] + conv
    if tol is None:
        dt_max = float(np.diff(t).max())
        # trapezoid error scale: (dt^2/12) * max |(e^{-c(t-u)} g)''| * horizon
        g_scale = float(np.abs(g_arr).max(initial=0.0))
        curv = c ** 2 * g_scale
        if g_arr.size >= 3:
            d2g = np.abs(np.diff(g_arr, 2)).max(initial=0.0) / dt_max ** 2
            dg = np.abs(np.diff(g_arr)).max(initial=0.0) / dt_max
            curv += d2g + 2 * c * dg
        tol = max(1e-12, dt_max ** 2 / 12.0 * curv * (t[-1] - t[0]) * 4.0)
    bad = tuple(int(i) for i in np.nonzero(H_arr > envelope + tol)[0])
    return GronwallReport(envelope=envelope, violations=bad, tol=tol)
