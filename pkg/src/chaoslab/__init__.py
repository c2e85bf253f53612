"""Simulation and certification of uniform-in-time mean-field limits.

Subpackages by role: `dynamics` steps the n-particle system, `models`
defines the concrete families and their theorem constants,
`gaussian_oracle` solves the linear model exactly, `meanfield_pde` solves
the 1-D periodic limit equation, `entropy_estim` turns samples into entropy
numbers and metric bounds, `theory_bounds` evaluates every explicit
constant and inequality of the rate analysis, and `harness` orchestrates
scenario sweeps behind the `chaoslab` CLI.
"""

from . import (dynamics, entropy_estim, gaussian_oracle, harness,
               meanfield_pde, models, theory_bounds)

__all__ = [
    "dynamics", "entropy_estim", "gaussian_oracle", "harness",
    "meanfield_pde", "models", "theory_bounds",
]

__version__ = "0.1.0"
