"""Time-stepping of the n-particle system with replica ensembles.

Explicit Euler--Maruyama on Euclidean space or the unit torus.  Noise is
counter-based: the unit normals consumed by replica r, particle i, step s
live at a fixed, precomputable counter offset of a Philox stream keyed by
the seed, so replicas (and steps) can be generated in any order, in any
batch size, with bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.special import ndtri

from .models import (ConvexPotential, Kuramoto, LinearGaussian, ModelSpec,
                     TorusKernel, Torus, TWO_PI)

BLOWUP_LIMIT = 1e12
GRID_ALIGN_TOL = 1e-9


class SimulationError(RuntimeError):
    """Raised when the simulated state leaves the finite range."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ParameterError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Initial laws

@dataclass(frozen=True)
class Dirac:
    point: float = 0.0


@dataclass(frozen=True)
class IsotropicGaussian:
    variance: float
    mean: float = 0.0


@dataclass(frozen=True)
class UniformTorus:
    pass


@dataclass(frozen=True)
class TorusDensity:
    """Smooth density on [0,1) sampled by inverse CDF on its grid."""

    values: tuple

    @staticmethod
    def from_array(values) -> "TorusDensity":
        return TorusDensity(values=tuple(float(x) for x in values))


InitialLaw = Union[Dirac, IsotropicGaussian, UniformTorus, TorusDensity]


@dataclass(frozen=True)
class ParticleEnsemble:
    """R replicas of n particles in d dimensions at a common time.

    Snapshots are immutable: the positions array is marked read-only and
    advancing time always allocates a new state.
    """

    positions: np.ndarray
    time: float
    seed: int

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 3:
            raise ParameterError("positions must have shape (replicas, n, d)")
        if pos.shape[1] < 2:
            raise ParameterError("need at least two particles")
        if not np.all(np.isfinite(pos)):
            raise ParameterError("positions must be finite")
        pos = pos.copy()
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def replicas(self) -> int:
        return self.positions.shape[0]

    @property
    def n(self) -> int:
        return self.positions.shape[1]

    @property
    def d(self) -> int:
        return self.positions.shape[2]


@dataclass(frozen=True)
class SimulationParams:
    dt: float
    horizon: float
    record_times: tuple
    replicas: int
    seed: int
    initial: InitialLaw = Dirac(0.0)

    def __post_init__(self):
        object.__setattr__(self, "record_times", tuple(float(t) for t in self.record_times))
        if self.dt <= 0:
            raise ParameterError("dt must be positive")
        if self.horizon < 0:
            raise ParameterError("horizon must be nonnegative")
        if self.replicas < 1:
            raise ParameterError("need at least one replica")
        times = self.record_times
        if any(t < 0 or t > self.horizon + GRID_ALIGN_TOL for t in times):
            raise ParameterError("record times must lie in [0, horizon]")
        if list(times) != sorted(times):
            raise ParameterError("record times must be sorted")
        gaps = [b - a for a, b in zip(times, times[1:]) if b > a]
        if gaps and self.dt > min(gaps) + GRID_ALIGN_TOL:
            raise ParameterError("dt exceeds the smallest record-time gap")


# ---------------------------------------------------------------------------
# Counter-based noise

def _philox_key(seed: int) -> int:
    return int(seed) & ((1 << 64) - 1)


def _padded_width(n: int, d: int) -> int:
    nd = n * d
    return 4 * ((nd + 3) // 4)


def uniform_block(seed: int, block_index: int, replicas: int, n: int, d: int,
                  replica: Optional[int] = None) -> np.ndarray:
    """Uniforms for one step: shape (replicas, n*d), or one replica's row.

    Replica r occupies Philox counters starting at
    (block_index << 128) + r * (padded_width/4); each value consumes one
    64-bit word, so every (replica, particle, step, axis) has a fixed
    address regardless of batch size or generation order.
    """
    width = _padded_width(n, d)
    base = block_index << 128
    if replica is not None:
        base += replica * (width // 4)
        rows = 1
    else:
        rows = replicas
    bitgen = np.random.Philox(key=_philox_key(seed), counter=base)
    out = np.random.Generator(bitgen).random((rows, width))
    out = out[:, : n * d]
    return out[0] if replica is not None else out


def normal_block(seed: int, block_index: int, replicas: int, n: int, d: int,
                 replica: Optional[int] = None) -> np.ndarray:
    """Unit normals via inverse CDF of the uniform block; same addressing."""
    u = uniform_block(seed, block_index, replicas, n, d, replica=replica)
    np.fmax(u, 1e-300, out=u)  # ndtri(0) = -inf
    z = ndtri(u)
    shape = (n, d) if replica is not None else (-1, n, d)
    return z.reshape(shape)


def _normals_into(seed: int, block_index: int, replicas: int, n: int, d: int,
                  ubuf: np.ndarray, zbuf: np.ndarray) -> np.ndarray:
    """Buffer-reusing variant of normal_block for tight loops; same bits."""
    base = block_index << 128
    bitgen = np.random.Philox(key=_philox_key(seed), counter=base)
    np.random.Generator(bitgen).random(out=ubuf)
    np.fmax(ubuf, 1e-300, out=ubuf)
    ndtri(ubuf, out=zbuf)
    return zbuf[:, : n * d]


# ---------------------------------------------------------------------------
# Drift evaluation

def _wrap_torus(x: np.ndarray) -> np.ndarray:
    out = np.mod(x, 1.0)
    # IEEE remainder of a tiny negative rounds up to exactly 1.0; fold back
    out[out == 1.0] = 0.0
    return out


def _pairwise_drift(model: ModelSpec, x: np.ndarray) -> np.ndarray:
    """O(n^2) reference: mean over j != i of the pair interaction, plus b0."""
    n = x.shape[0]
    diffs = x[:, None, :] - x[None, :, :]  # (n, n, d), x_i - x_j
    if isinstance(model, LinearGaussian):
        pair = -model.b_strength * diffs
        base = -model.a * x
    elif isinstance(model, ConvexPotential):
        pair = -model.grad_interact(diffs.reshape(n * n, -1)).reshape(n, n, -1)
        base = -model.grad_confine(x)
    elif isinstance(model, (TorusKernel, Kuramoto)):
        pair = np.asarray(model.kernel(_wrap_torus(diffs)))
        if pair.ndim == diffs.ndim - 1:
            pair = pair[..., None]
        base = np.zeros_like(x)
    else:
        raise ParameterError(f"unsupported model {type(model).__name__}")
    off_diag = pair.sum(axis=1) - np.take_along_axis(
        pair, np.arange(n)[:, None, None], axis=1).reshape(n, -1)
    return base + off_diag / (n - 1.0)


def _fast_drift(model: ModelSpec, x: np.ndarray) -> Optional[np.ndarray]:
    """O(n) mean-sum shortcut where the interaction structure allows one."""
    n = x.shape[-2]
    if isinstance(model, LinearGaussian):
        total = x.sum(axis=-2, keepdims=True)
        return -model.a * x + (model.b_strength / (n - 1.0)) * (total - n * x)
    if isinstance(model, Kuramoto):
        # sum_j sin(2 pi (x_j - x_i)) = cos(2 pi x_i) S - sin(2 pi x_i) C
        angles = TWO_PI * x
        sin, cos = np.sin(angles), np.cos(angles)
        S = sin.sum(axis=-2, keepdims=True)
        C = cos.sum(axis=-2, keepdims=True)
        pair_sum = cos * S - sin * C  # excludes j = i implicitly (term is 0)
        return (model.coupling / TWO_PI) * pair_sum / (n - 1.0)
    return None


def drift_field(model: ModelSpec, t: float, positions: np.ndarray,
                method: str = "auto") -> np.ndarray:
    """Per-particle drift for one configuration of shape (n, d).

    method "pairwise" forces the O(n^2) reference path, "fast" the O(n)
    shortcut (error when the model has none), "auto" prefers the shortcut.
    """
    x = np.asarray(positions, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 2:
        raise ParameterError("positions must be (n, d) with n >= 2")
    if not np.all(np.isfinite(x)):
        raise ParameterError("positions must be finite")
    if method not in ("auto", "pairwise", "fast"):
        raise ParameterError(f"unknown drift method {method!r}")
    if method != "pairwise":
        fast = _fast_drift(model, x)
        if fast is not None:
            return fast
        if method == "fast":
            raise ParameterError(f"no O(n) shortcut for {type(model).__name__}")
    return _pairwise_drift(model, x)


def _drift_batch(model: ModelSpec, x: np.ndarray) -> np.ndarray:
    """Drift for a replica batch (R, n, d); falls back to per-replica pairwise."""
    fast = _fast_drift(model, x)
    if fast is not None:
        return fast
    return np.stack([_pairwise_drift(model, xr) for xr in x])


# ---------------------------------------------------------------------------
# Stepping

def em_step(model: ModelSpec, state: ParticleEnsemble, dt: float,
            gaussian_noise: np.ndarray) -> ParticleEnsemble:
    """One Euler--Maruyama step: x + drift*dt + sigma*sqrt(dt)*noise, then wrap."""
    if dt <= 0:
        raise ParameterError("dt must be positive")
    noise = np.asarray(gaussian_noise, dtype=float)
    if noise.shape != state.positions.shape:
        raise ParameterError("noise must match the ensemble shape")
    new = _step_positions(model, state.positions, dt, noise)
    return ParticleEnsemble(positions=new, time=state.time + dt, seed=state.seed)


def _step_positions(model: ModelSpec, x: np.ndarray, dt: float,
                    noise: np.ndarray) -> np.ndarray:
    out = x + _drift_batch(model, x) * dt
    out += (model.sigma * math.sqrt(dt)) * noise
    if isinstance(model.geometry, Torus):
        out = _wrap_torus(out)
    return out


def initial_positions(model: ModelSpec, law: InitialLaw, replicas: int, n: int,
                      seed: int) -> np.ndarray:
    """Draw the t=0 configuration; consumes noise block 0 of the seed."""
    d = model.d
    torus = isinstance(model.geometry, Torus)
    if isinstance(law, Dirac):
        pos = np.full((replicas, n, d), float(law.point))
        return _wrap_torus(pos) if torus else pos
    u = uniform_block(seed, 0, replicas, n, d).reshape(replicas, n, d)
    if isinstance(law, UniformTorus):
        if not torus:
            raise ParameterError("uniform law needs a torus model")
        return u
    if isinstance(law, IsotropicGaussian):
        z = ndtri(np.fmax(u, 1e-300))
        pos = law.mean + math.sqrt(law.variance) * z
        return _wrap_torus(pos) if torus else pos
    if isinstance(law, TorusDensity):
        if not torus:
            raise ParameterError("torus density law needs a torus model")
        vals = np.asarray(law.values, dtype=float)
        grid = np.arange(vals.size + 1) / vals.size
        cdf = np.concatenate([[0.0], np.cumsum(vals) / vals.size])
        cdf /= cdf[-1]
        return np.interp(u, cdf, grid)
    raise ParameterError(f"unknown initial law {type(law).__name__}")


def simulate_ensemble(model: ModelSpec, params: SimulationParams,
                      start: Optional[ParticleEnsemble] = None,
                      n: Optional[int] = None) -> list[ParticleEnsemble]:
    """Snapshots of the replica ensemble at each record time.

    Without `start`, draws the initial configuration from params.initial
    with `n` particles.  With `start`, continues that ensemble (record
    times are absolute and must lie in [start.time, horizon]).  Identical
    (model, params, seed, start) give bit-identical snapshots.
    """
    if start is None:
        if n is None:
            raise ParameterError("pass n when not continuing an ensemble")
        t0 = 0.0
        x = initial_positions(model, params.initial, params.replicas, n, params.seed)
    else:
        t0 = start.time
        x = start.positions.copy()
    R, npart, d = x.shape

    steps = int(round((params.horizon - t0) / params.dt))
    if abs(t0 + steps * params.dt - params.horizon) > GRID_ALIGN_TOL * max(1.0, params.horizon):
        raise ParameterError("horizon must be a whole number of steps from the start time")
    record_steps = []
    for t in params.record_times:
        if t < t0 - GRID_ALIGN_TOL:
            raise ParameterError(f"record time {t} precedes the start time {t0}")
        idx = int(round((t - t0) / params.dt))
        if abs(t0 + idx * params.dt - t) > GRID_ALIGN_TOL * max(1.0, params.horizon):
            raise ParameterError(f"record time {t} is not on the step grid")
        record_steps.append(idx)

    snapshots: dict[int, ParticleEnsemble] = {}
    sqdt_sigma = model.sigma * math.sqrt(params.dt)
    torus = isinstance(model.geometry, Torus)

    def record(idx, pos, t):
        if idx in record_steps and idx not in snapshots:
            snapshots[idx] = ParticleEnsemble(positions=pos, time=t, seed=params.seed)

    record(0, x, t0)
    width = _padded_width(npart, d)
    ubuf = np.empty((R, width))
    zbuf = np.empty((R, width))
    for s in range(1, steps + 1):
        noise = _normals_into(params.seed, s, R, npart, d, ubuf, zbuf)
        drift = _drift_batch(model, x)
        np.multiply(drift, params.dt, out=drift)
        drift += x
        drift += sqdt_sigma * noise.reshape(x.shape)
        x = _wrap_torus(drift) if torus else drift
        peak = float(np.max(np.abs(x)))
        if not peak < BLOWUP_LIMIT:
            raise SimulationError(
                f"non-finite or exploding state first seen at t={t0 + s * params.dt:.6g}",
                time=t0 + s * params.dt)
        record(s, x, t0 + s * params.dt)
    return [snapshots[i] for i in sorted(set(record_steps))]
