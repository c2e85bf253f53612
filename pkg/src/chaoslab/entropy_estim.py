"""Relative-entropy estimators for simulation output, plus metric conversions.

Two estimation routes: a Gaussian moment plug-in for the linear model
(exchangeable second moments fed through the closed-form marginal KL), and a
smoothed histogram against a reference density for 1-D torus samples.  Also
estimates the interaction-fluctuation constant M and converts entropy
numbers into transport (W2) and total-variation bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import gaussian_oracle
from .dynamics import ParticleEnsemble
from .meanfield_pde import DensityGrid
from .models import Kuramoto, LinearGaussian, ModelSpec, TorusKernel

METHOD_GAUSSIAN = "gaussian_moment"
METHOD_HISTOGRAM = "histogram1d"
METHOD_EXACT = "exact"


class EstimationError(ValueError):
    def __init__(self, message, v=None, c=None):
        super().__init__(message)
        self.v = v
        self.c = c


@dataclass(frozen=True)
class EntropyReport:
    k: int
    n: int
    t: float
    H: float
    method: str
    stderr: Optional[float] = None

    def __post_init__(self):
        if not (self.H >= 0):
            raise EstimationError(f"entropy must be nonnegative, got {self.H}")

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.H)


def _pooled_moments(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-replica second moment and distinct-pair average, centered at 0."""
    n = x.shape[1]
    sq = x ** 2
    q = sq.sum(axis=1)
    s = x.sum(axis=1)
    v_rep = q / n
    c_rep = (s ** 2 - q) / (n * (n - 1.0))
    return v_rep, c_rep


def fit_exchangeable_moments(ensemble: ParticleEnsemble) -> tuple[float, float]:
    """(v_hat, c_hat) pooled over replicas and particles (centered model)."""
    x = ensemble.positions[:, :, 0]
    v_rep, c_rep = _pooled_moments(x)
    return float(v_rep.mean()), float(c_rep.mean())


def gaussian_moment_entropy(ensemble: ParticleEnsemble, k: int,
                            reference_s: float) -> EntropyReport:
    """Plug-in marginal entropy for the centered linear model.

    Fits (v_hat, c_hat) across replicas, applies the closed-form marginal
    KL against N(0, reference_s), and reports a replica-level jackknife
    standard error.
    """
    R, n = ensemble.replicas, ensemble.n
    if ensemble.d != 1:
        raise EstimationError("moment estimator expects 1-D particles")
    if R < 100:
        raise EstimationError(f"need at least 100 replicas, got {R}")
    if not 1 <= k <= n:
        raise EstimationError(f"need 1 <= k <= n, got k={k}")
    x = ensemble.positions[:, :, 0]
    v_rep, c_rep = _pooled_moments(x)
    v_hat, c_hat = float(v_rep.mean()), float(c_rep.mean())
    if v_hat - c_hat <= 0 or v_hat + (k - 1) * c_hat <= 0:
        raise EstimationError("fitted marginal covariance is not PSD",
                              v=v_hat, c=c_hat)
    H = float(gaussian_oracle.marginal_relative_entropy(v_hat, c_hat, reference_s, k))

    # leave-one-replica-out entropies, vectorized
    v_loo = (v_rep.sum() - v_rep) / (R - 1.0)
    c_loo = (c_rep.sum() - c_rep) / (R - 1.0)
    ok = (v_loo - c_loo > 0) & (v_loo + (k - 1) * c_loo > 0)
    if not np.all(ok):
        raise EstimationError("jackknife marginal covariance not PSD",
                              v=v_hat, c=c_hat)
    h_loo = gaussian_oracle.marginal_relative_entropy(v_loo, c_loo, reference_s, k)
    stderr = float(np.sqrt((R - 1.0) / R * np.sum((h_loo - h_loo.mean()) ** 2)))
    return EntropyReport(k=k, n=n, t=ensemble.time, H=H,
                         method=METHOD_GAUSSIAN, stderr=stderr)


def histogram_entropy_1d(samples: np.ndarray, reference: DensityGrid,
                         bins: int, k: int = 1, n: int = 1,
                         t: Optional[float] = None) -> EntropyReport:
    """Smoothed histogram KL of torus samples against a grid reference.

    Add-half smoothing on the counts, Miller-Madow correction
    (bins-1)/(2 N) subtracted and the result floored at 0.  A reference
    cell with zero mass but observed samples flags infinite entropy.
    """
    x = np.asarray(samples, dtype=float).ravel()
    N = x.size
    if reference.size % bins:
        raise EstimationError("bins must divide the reference grid size")
    if N < 50 * bins:
        raise EstimationError(f"need at least {50 * bins} samples for {bins} bins")
    if np.any(x < 0) or np.any(x >= 1):
        raise EstimationError("samples must lie in [0, 1)")
    t_label = reference.time if t is None else t
    counts = np.bincount((x * bins).astype(np.int64), minlength=bins).astype(float)
    q = reference.values.reshape(bins, -1).mean(axis=1) / bins  # cell masses
    if np.any((q == 0) & (counts > 0)):
        return EntropyReport(k=k, n=n, t=t_label, H=math.inf,
                             method=METHOD_HISTOGRAM, stderr=None)
    p = (counts + 0.5) / (N + 0.5 * bins)
    with np.errstate(divide="ignore"):
        log_ratio = np.where(q > 0, np.log(p) - np.log(np.fmax(q, 1e-300)), 0.0)
    H_plug = float(np.sum(p * np.where(q > 0, log_ratio, 0.0)))
    H = max(0.0, H_plug - (bins - 1) / (2.0 * N))
    var = float(np.sum(p * log_ratio ** 2) - H_plug ** 2)
    stderr = math.sqrt(max(var, 0.0) / N)
    return EntropyReport(k=k, n=n, t=t_label, H=H,
                         method=METHOD_HISTOGRAM, stderr=stderr)


# ---------------------------------------------------------------------------
# Interaction fluctuation constant

GAUSS_HERMITE_POINTS = 96


def _mean_interaction(model: ModelSpec, x1: np.ndarray, reference) -> np.ndarray:
    """<mu, b(x1, .)>: the interaction averaged over the reference law."""
    if isinstance(model, LinearGaussian):
        m_bar, s = reference.m, reference.s
        nodes, weights = np.polynomial.hermite_e.hermegauss(GAUSS_HERMITE_POINTS)
        y = m_bar + math.sqrt(max(s, 0.0)) * nodes
        w = weights / math.sqrt(2 * math.pi)
        return model.b_strength * ((w * y).sum() - x1)
    if isinstance(model, (TorusKernel, Kuramoto)):
        vals = reference.values
        N = vals.size
        khat = np.fft.rfft(sample_kernel_for(model, N)) / N
        conv = np.fft.irfft(khat * np.fft.rfft(vals), n=N)
        grid = np.arange(N + 1) / N
        return np.interp(np.mod(x1, 1.0), grid, np.append(conv, conv[0]))
    raise EstimationError(f"no reference quadrature for {type(model).__name__}")


def sample_kernel_for(model: ModelSpec, size: int) -> np.ndarray:
    x = np.arange(size) / size
    return np.asarray(model.kernel(x), dtype=float)


def _pair_interaction(model: ModelSpec, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    if isinstance(model, LinearGaussian):
        return model.b_strength * (x2 - x1)
    if isinstance(model, (TorusKernel, Kuramoto)):
        return np.asarray(model.kernel(np.mod(x1 - x2, 1.0)))
    raise EstimationError(f"no pair interaction for {type(model).__name__}")


@dataclass(frozen=True)
class MEstimate:
    value: float
    per_time: tuple
    stderr_per_time: tuple
    horizon_truncated: bool = True


def estimate_M(model: ModelSpec, snapshots: Sequence[ParticleEnsemble],
               references: Sequence) -> MEstimate:
    """Monte Carlo estimate of the interaction-fluctuation supremum.

    Per snapshot, averages |b(x1, x2) - <mu_t, b(x1, .)>|^2 over replicas
    using the pair (1, 2); returns the max over snapshot times.  The
    supremum over all time is truncated to the simulated horizon.
    """
    if len(snapshots) < 2:
        raise EstimationError("need at least two snapshots")
    if len(references) != len(snapshots):
        raise EstimationError("need one reference per snapshot")
    values, errs = [], []
    for ens, ref in zip(snapshots, references):
        x1 = ens.positions[:, 0, 0]
        x2 = ens.positions[:, 1, 0]
        integrand = (_pair_interaction(model, x1, x2)
                     - _mean_interaction(model, x1, ref)) ** 2
        values.append(float(integrand.mean()))
        errs.append(float(integrand.std(ddof=1) / math.sqrt(integrand.size)))
    return MEstimate(value=max(values), per_time=tuple(values),
                     stderr_per_time=tuple(errs))


# ---------------------------------------------------------------------------
# Metric conversions

def w2_bound_from_entropy(H: float, eta: float, k: int = 1) -> float:
    """Transport bound sqrt(4 eta H); the constant tensorizes, so k is free."""
    if H < 0:
        raise EstimationError("entropy must be nonnegative")
    if eta <= 0:
        raise EstimationError("eta must be positive")
    return math.sqrt(4.0 * eta * H)


def tv_bound_from_entropy(H: float) -> float:
    """Total-variation bound min(1, sqrt(H/2))."""
    if H < 0:
        raise EstimationError("entropy must be nonnegative")
    return min(1.0, math.sqrt(H / 2.0))
