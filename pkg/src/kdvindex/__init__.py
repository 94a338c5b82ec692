"""Spectral stability and instability index counts for traveling waves of
KdV-type equations (mKdV periodic waves, fifth-order KdV solitary waves)."""

from .elliptic import EllipticTriple, complete_elliptic_E, complete_elliptic_K, jacobi
from .waves import (Grid, ModelSpec, WaveProfile, cn_wave, dn_wave, make_grid, mean, momentum,
                    momentum_slope, solve_fifth_order, stationary_residual)
from .indexcount import Tolerances, analyze, find_kstar

__all__ = [
    "EllipticTriple", "complete_elliptic_E", "complete_elliptic_K", "jacobi",
    "Grid", "ModelSpec", "WaveProfile", "cn_wave", "dn_wave", "make_grid", "mean", "momentum",
    "momentum_slope", "solve_fifth_order", "stationary_residual",
    "Tolerances", "analyze", "find_kstar",
]
