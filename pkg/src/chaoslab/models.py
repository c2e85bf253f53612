"""Concrete model families and their assumption-level constants.

Each model fixes the confining drift, the pairwise interaction and the noise
level of an interacting-diffusion system, and knows how to report the
constants (LSI constant eta, transport constant gamma, critical ratio r_c,
density bounds, critical couplings) that the quantitative convergence
theorems consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

TWO_PI = 2.0 * math.pi

# grid resolution used when scanning user-supplied kernels for diam/div
KERNEL_SCAN_POINTS = 4096


class ModelError(ValueError):
    """Raised when a model is malformed or a constant request is unsupported."""


@dataclass(frozen=True)
class LinearGaussian:
    """1-D linear model: confinement -a*x, interaction b_strength*(y - x).

    Exactly solvable; the covariance flow and every marginal entropy have
    closed forms (see the gaussian_oracle module).
    """

    a: float
    b_strength: float
    sigma: float
    d: int = 1

    def __post_init__(self):
        if self.a <= 0:
            raise ModelError(f"confinement rate must be positive, got a={self.a}")
        if self.b_strength < 0:
            raise ModelError("interaction strength must be nonnegative")
        if self.sigma <= 0:
            raise ModelError("sigma must be positive")
        if self.d != 1:
            raise ModelError("linear model is implemented in dimension 1")

    @property
    def geometry(self) -> "Euclidean":
        return Euclidean(self.d)


@dataclass(frozen=True)
class ConvexPotential:
    """Gradient model: drift -grad_confine(x) - grad_interact(x - y).

    grad_confine / grad_interact map (m, d) arrays to (m, d) arrays.
    alpha is the joint convexity lower bound, lipschitz the Lipschitz
    constant of grad_interact (may be inf), sup_grad its sup norm (may be
    inf); at least one of the two must be finite.
    """

    grad_confine: Callable[[np.ndarray], np.ndarray]
    grad_interact: Callable[[np.ndarray], np.ndarray]
    alpha: float
    lipschitz: float
    sup_grad: float
    sigma: float
    d: int = 1

    def __post_init__(self):
        if self.alpha <= 0:
            raise ModelError("convexity constant alpha must be positive")
        if not (min(self.lipschitz, self.sup_grad) < math.inf):
            raise ModelError("grad_interact must be Lipschitz or bounded")
        if self.sigma <= 0:
            raise ModelError("sigma must be positive")

    @property
    def geometry(self) -> "Euclidean":
        return Euclidean(self.d)


@dataclass(frozen=True)
class TorusKernel:
    """Periodic model on [0,1): drift is the kernel averaged over the others.

    kernel maps displacements in [0,1) to drift values, periodically.  The
    oscillation diam(K) and the divergence sup are scanned on a dense grid
    when not supplied (documented as approximate).
    """

    kernel: Callable[[np.ndarray], np.ndarray]
    sigma: float
    d: int = 1
    div_sup: Optional[float] = None
    diam: Optional[float] = None

    def __post_init__(self):
        if self.sigma <= 0:
            raise ModelError("sigma must be positive")
        if self.d != 1:
            raise ModelError("torus kernels are implemented in dimension 1")

    @property
    def geometry(self) -> "Torus":
        return Torus(self.d)

    def scanned_constants(self) -> tuple[float, float]:
        """(div_sup, diam) — supplied values, else a 4096-point grid scan."""
        if self.div_sup is not None and self.diam is not None:
            return self.div_sup, self.diam
        x = np.arange(KERNEL_SCAN_POINTS) / KERNEL_SCAN_POINTS
        k = np.asarray(self.kernel(x), dtype=float)
        diam = self.diam if self.diam is not None else float(k.max() - k.min())
        if self.div_sup is not None:
            div_sup = self.div_sup
        else:
            # spectral derivative of the sampled kernel
            freqs = np.fft.rfftfreq(KERNEL_SCAN_POINTS, d=1.0 / KERNEL_SCAN_POINTS)
            dk = np.fft.irfft(np.fft.rfft(k) * (TWO_PI * 1j * freqs), n=KERNEL_SCAN_POINTS)
            div_sup = float(np.abs(dk).max())
        return div_sup, diam


@dataclass(frozen=True)
class Kuramoto:
    """Noisy phase-coupling model rescaled to the unit torus.

    Coupling K > 0 in the original 2*pi scaling; on [0,1) this becomes
    sigma = 1/(2*pi) and interaction kernel -K*sin(2*pi*u)/(2*pi).  The sign
    is the synchronizing convention, so couplings above 1 produce a
    non-uniform steady profile.  lambda_ratio >= 1 bounds the initial
    density within [1/lambda, lambda].
    """

    coupling: float
    lambda_ratio: float = 1.0

    def __post_init__(self):
        if self.coupling <= 0:
            raise ModelError("coupling must be positive")
        if self.lambda_ratio < 1:
            raise ModelError("density ratio lambda must be >= 1")

    @property
    def sigma(self) -> float:
        return 1.0 / TWO_PI

    @property
    def d(self) -> int:
        return 1

    @property
    def geometry(self) -> "Torus":
        return Torus(1)

    def kernel(self, u: np.ndarray) -> np.ndarray:
        return -self.coupling * np.sin(TWO_PI * np.asarray(u)) / TWO_PI

    def to_torus_kernel(self) -> TorusKernel:
        return TorusKernel(
            kernel=self.kernel,
            sigma=self.sigma,
            div_sup=self.coupling,
            diam=self.coupling / math.pi,
        )


ModelSpec = Union[LinearGaussian, ConvexPotential, TorusKernel, Kuramoto]


@dataclass(frozen=True)
class Euclidean:
    d: int


@dataclass(frozen=True)
class Torus:
    d: int
    period: float = 1.0


DomainGeometry = Union[Euclidean, Torus]


# ---------------------------------------------------------------------------
# Regime reports

REGIME_NOT_APPLICABLE = "not_applicable"
REGIME_SLOW = "slow"
REGIME_INTERMEDIATE = "intermediate"
REGIME_OPTIMAL = "optimal"


def classify_regime(r_c: float) -> str:
    """Map the critical ratio to its rate regime; boundaries go downward."""
    if r_c <= 0:
        return REGIME_NOT_APPLICABLE
    if r_c <= 1:
        return REGIME_SLOW
    if r_c <= 2:
        return REGIME_INTERMEDIATE
    return REGIME_OPTIMAL


@dataclass(frozen=True)
class RegimeReport:
    """Constants feeding the convergence-rate theorems for one model.

    r_c and the regime are absent when a required smallness condition fails
    (see condition_flags).  Model-specific extras: density bounds and r0 for
    torus kernels, critical couplings for the phase model.
    """

    eta: Optional[float]
    gamma: Optional[float]
    r_c: Optional[float]
    regime: Optional[str]
    p_c: Optional[float] = None
    condition_flags: dict = field(default_factory=dict)
    r0: Optional[float] = None
    density_lower: Optional[float] = None
    density_upper: Optional[float] = None
    critical_coupling_0: Optional[float] = None
    critical_coupling_1: Optional[float] = None
    admissible_coupling_max: Optional[float] = None


# ---------------------------------------------------------------------------
# Constant extraction

def convex_constants(alpha: float, lipschitz: float, sup_grad: float,
                     eta0: float, sigma: float) -> RegimeReport:
    """Rate constants for the convex-potential family.

    eta = max(eta0/4, sigma^2/(4 alpha)), gamma = min(4 eta L^2, 2 R^2),
    r_c = sigma^4/(4 gamma eta) - 1.  An infinite L or R simply drops that
    branch of the min; eta0 = 0 encodes a point-mass start.
    """
    if alpha <= 0:
        raise ModelError("convexity constant alpha must be positive")
    if not (min(lipschitz, sup_grad) < math.inf):
        raise ModelError("need a finite Lipschitz or sup bound on the interaction")
    if eta0 < 0 or sigma <= 0:
        raise ModelError("eta0 must be >= 0 and sigma > 0")
    eta = max(eta0 / 4.0, sigma ** 2 / (4.0 * alpha))
    gamma_lip = 4.0 * eta * lipschitz ** 2 if lipschitz < math.inf else math.inf
    gamma_sup = 2.0 * sup_grad ** 2 if sup_grad < math.inf else math.inf
    gamma = min(gamma_lip, gamma_sup)
    r_c = sigma ** 4 / (4.0 * gamma * eta) - 1.0
    p_c = None
    if sup_grad < math.inf:
        # reversed-entropy constant, available only for bounded interactions
        p_c = sigma ** 4 / (8.0 * eta * sup_grad ** 2)
    return RegimeReport(eta=eta, gamma=gamma, r_c=r_c, regime=classify_regime(r_c),
                        p_c=p_c, condition_flags={"interaction_bounded": sup_grad < math.inf})


def torus_constants(lambda_ratio: float, div_sup: float, diam: float,
                    sigma: float) -> RegimeReport:
    """Rate constants and density bounds for small-divergence torus kernels.

    Requires the smallness condition
    div_sup < sigma^2 pi^2 / (1 + 2 sqrt(2 log lambda)); when it fails the
    report carries only the failed flag.
    """
    if lambda_ratio < 1:
        raise ModelError("density ratio lambda must be >= 1")
    if diam <= 0:
        raise ModelError("kernel oscillation diam must be positive")
    if div_sup < 0 or sigma <= 0:
        raise ModelError("div_sup must be >= 0 and sigma > 0")
    root = math.sqrt(2.0 * math.log(lambda_ratio))
    threshold = sigma ** 2 * math.pi ** 2 / (1.0 + 2.0 * root)
    if not div_sup < threshold:
        return RegimeReport(eta=None, gamma=None, r_c=None, regime=None,
                            condition_flags={"divergence_small": False})
    r0 = div_sup * root / (sigma ** 2 * math.pi ** 2 - div_sup)
    eta = lambda_ratio ** 2 / (1.0 - 2.0 * r0)
    gamma = diam ** 2 / 2.0
    r_c = sigma ** 4 * (1.0 - 2.0 * r0) / (2.0 * lambda_ratio ** 2 * diam ** 2) - 1.0
    return RegimeReport(
        eta=eta, gamma=gamma, r_c=r_c, regime=classify_regime(r_c),
        condition_flags={"divergence_small": True},
        r0=r0,
        density_lower=1.0 / (lambda_ratio * math.exp(r0)),
        density_upper=lambda_ratio / (1.0 - r0 * math.exp(r0)),
    )


def kuramoto_rate_ratio(coupling: float, lambda_ratio: float) -> float:
    """Critical ratio of the rescaled phase model at coupling K:

    r_c = [1 - 4K(1 + 2 sqrt(2 log lambda))] / [32 pi^2 lambda^2 K^2 (1-4K)] - 1.
    """
    root = math.sqrt(2.0 * math.log(lambda_ratio))
    num = 1.0 - 4.0 * coupling * (1.0 + 2.0 * root)
    den = 32.0 * math.pi ** 2 * lambda_ratio ** 2 * coupling ** 2 * (1.0 - 4.0 * coupling)
    return num / den - 1.0


def kuramoto_admissible_max(lambda_ratio: float) -> float:
    """Largest coupling satisfying the torus smallness condition: 1/(4+8 sqrt(2 log lambda))."""
    return 1.0 / (4.0 + 8.0 * math.sqrt(2.0 * math.log(lambda_ratio)))


def _bisect_coupling(target: float, lambda_ratio: float, tol: float = 1e-13) -> float:
    """Coupling at which the rate ratio equals target (bisection; ratio is decreasing)."""
    lo = 1e-8
    hi = kuramoto_admissible_max(lambda_ratio) * (1.0 - 1e-12)
    flo = kuramoto_rate_ratio(lo, lambda_ratio) - target
    fhi = kuramoto_rate_ratio(hi, lambda_ratio) - target
    if flo < 0 or fhi > 0:
        raise ModelError(f"target ratio {target} not bracketed on the admissible interval")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if kuramoto_rate_ratio(mid, lambda_ratio) - target > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def kuramoto_constants(coupling: float, lambda_ratio: float = 1.0) -> RegimeReport:
    """Rate constants and critical couplings for the rescaled phase model.

    Applies sigma = 1/(2 pi) and kernel oscillation K/pi, divergence sup K.
    The couplings at which the rate ratio crosses 0 and 1 are solved by
    bisection to 1e-12.
    """
    if coupling <= 0:
        raise ModelError("coupling must be positive")
    if lambda_ratio < 1:
        raise ModelError("density ratio lambda must be >= 1")
    k_max = kuramoto_admissible_max(lambda_ratio)
    kc0 = _bisect_coupling(0.0, lambda_ratio)
    kc1 = _bisect_coupling(1.0, lambda_ratio)
    admissible = coupling < k_max
    if not admissible:
        return RegimeReport(eta=None, gamma=None, r_c=None, regime=None,
                            condition_flags={"coupling_admissible": False},
                            critical_coupling_0=kc0, critical_coupling_1=kc1,
                            admissible_coupling_max=k_max)
    sigma = 1.0 / TWO_PI
    base = torus_constants(lambda_ratio, div_sup=coupling, diam=coupling / math.pi,
                           sigma=sigma)
    r_c = kuramoto_rate_ratio(coupling, lambda_ratio)
    return RegimeReport(
        eta=base.eta, gamma=base.gamma, r_c=r_c, regime=classify_regime(r_c),
        condition_flags={"coupling_admissible": True, "divergence_small": True},
        r0=base.r0, density_lower=base.density_lower, density_upper=base.density_upper,
        critical_coupling_0=kc0, critical_coupling_1=kc1,
        admissible_coupling_max=k_max,
    )
