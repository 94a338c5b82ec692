"""Models, periodic grids and traveling-wave profiles.

Two model families are supported:

* focusing mKdV, whose traveling waves solve ``phi'' = c phi - phi^3``;
* the general fifth-order KdV equation, whose traveling waves solve
  ``a3 phi'''' - a2 phi'' + (a1 + c) phi + 3/2 b1 phi^2
  - 1/2 b2 (2 phi phi'' + phi'^2) + 2 b3 phi^3 = 0``.

mKdV waves come in closed form (dn and cn families); fifth-order solitary
waves are computed by Newton iteration on a periodized domain.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from . import elliptic

log = logging.getLogger(__name__)

MKDV = "mkdv"
FIFTH = "fifth"


class WaveError(RuntimeError):
    """Base class for failures while constructing a wave profile."""


class NonConvergence(WaveError):
    pass


class SingularJacobian(WaveError):
    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class TrivialSolution(WaveError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    a1: float = 0.0
    a2: float = 0.0
    a3: float = 0.0
    b1: float = 0.0
    b2: float = 0.0
    b3: float = 0.0

    def __post_init__(self):
        if self.kind not in (MKDV, FIFTH):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == FIFTH and not self.a3 > 0:
            raise ValueError("fifth-order model needs a3 > 0")

    @classmethod
    def mkdv(cls) -> "ModelSpec":
        return cls(MKDV)

    @classmethod
    def fifth_order(cls, a1=0.0, a2=0.0, a3=1.0, b1=0.0, b2=0.0, b3=0.0) -> "ModelSpec":
        return cls(FIFTH, float(a1), float(a2), float(a3), float(b1), float(b2), float(b3))

    def wave_speed(self, wavenumber):
        """Linear phase speed a1 + a2 k^2 + a3 k^4 (fifth-order only)."""
        k2 = np.asarray(wavenumber, dtype=float) ** 2
        return self.a1 + self.a2 * k2 + self.a3 * k2 * k2

    def wave_speed_min(self) -> tuple[float, float]:
        """Global minimum (value, argmin k >= 0) of the quartic wave speed."""
        if self.kind != FIFTH:
            raise ValueError("wave speed is defined for the fifth-order model")
        if self.a2 >= 0:
            return self.a1, 0.0
        k2 = -self.a2 / (2.0 * self.a3)
        return self.a1 - self.a2**2 / (4.0 * self.a3), math.sqrt(k2)

    def to_dict(self) -> dict:
        if self.kind == MKDV:
            return {"kind": MKDV}
        return {"kind": FIFTH, "a1": self.a1, "a2": self.a2, "a3": self.a3,
                "b1": self.b1, "b2": self.b2, "b3": self.b3}


@dataclass(frozen=True, eq=False)
class Grid:
    """Equispaced periodic collocation grid on [0, period)."""

    n: int
    period: float

    @cached_property
    def spacing(self) -> float:
        return self.period / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.arange(self.n) * self.spacing
        x.flags.writeable = False
        return x

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """FFT-ordered wavenumbers; index n/2 is the Nyquist mode."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)
        k.flags.writeable = False
        return k

    @cached_property
    def nyquist_mode(self) -> np.ndarray:
        v = np.where(np.arange(self.n) % 2 == 0, 1.0, -1.0)
        v.flags.writeable = False
        return v

    @cached_property
    def fourier_basis(self) -> tuple[np.ndarray, np.ndarray]:
        """Orthonormal real Fourier basis of the Nyquist-free grid functions.

        Returns ``(Z, kappa)`` with ``Z`` of shape (n, n-1): columns are the
        constant, then cos/sin pairs for wavenumbers 1 .. n/2-1; ``kappa`` holds
        the wavenumber of each column.
        """
        n = self.n
        theta = 2.0 * np.pi * np.arange(n) / n
        cols = [np.full(n, 1.0 / math.sqrt(n))]
        kappa = [0.0]
        scale = math.sqrt(2.0 / n)
        for j in range(1, n // 2):
            cols.append(scale * np.cos(j * theta))
            cols.append(scale * np.sin(j * theta))
            kappa += [2.0 * np.pi * j / self.period] * 2
        Z = np.column_stack(cols)
        kap = np.asarray(kappa)
        Z.flags.writeable = False
        kap.flags.writeable = False
        return Z, kap

    @cached_property
    def even_basis(self) -> np.ndarray:
        """Orthonormal cosine modes 0 .. n/2-1 (functions even about x = 0)."""
        Z, _ = self.fourier_basis
        return Z[:, [0] + list(range(1, self.n - 1, 2))]

    def inner(self, u, v) -> complex | float:
        """Trapezoidal L2 inner product <u, v> = h * sum(u * conj(v))."""
        return self.spacing * np.vdot(v, u) if np.iscomplexobj(v) else self.spacing * np.dot(u, v)

    def derivative(self, values, order: int = 1) -> np.ndarray:
        """Spectral derivative; the Nyquist mode is dropped for odd orders."""
        ik = 1j * self.wavenumbers
        if order % 2:
            ik = ik.copy()
            ik[self.n // 2] = 0.0
        out = np.fft.ifft(ik**order * np.fft.fft(values))
        return out.real if np.isrealobj(values) else out

    def __repr__(self):
        return f"Grid(n={self.n}, period={self.period!r})"


def make_grid(n: int, period: float) -> Grid:
    if int(n) != n or n < 2 or n % 2:
        raise ValueError(f"grid size must be a positive even integer, got {n!r}")
    if not (period > 0 and math.isfinite(period)):
        raise ValueError(f"period must be positive, got {period!r}")
    return Grid(int(n), float(period))


@dataclass(frozen=True, eq=False)
class WaveProfile:
    model: ModelSpec
    grid: Grid
    values: np.ndarray
    speed: float
    family_param: float | None = None
    family: str = ""
    provenance: str = "closed-form"
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ValueError("profile values must match the grid size")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def period(self) -> float:
        return self.grid.period

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.values), initial=0.0))

    @property
    def kind(self) -> str:
        """'periodic' for closed-form mKdV waves, 'solitary' for fifth-order waves."""
        return "solitary" if self.model.kind == FIFTH else "periodic"


def _mkdv_modulus(k: float) -> float:
    k = float(k)
    if not 0.0 < k < 1.0:
        raise ValueError(f"elliptic modulus must lie in (0, 1), got {k!r}")
    return k


def dn_wave(k: float, n: int, scale: float = 1.0) -> WaveProfile:
    """mKdV dn-wave sqrt(2) dn(x, k) with c = 2 - k^2 on its period 2K(k).

    ``scale`` applies the symmetry phi(x) -> s phi(s x) (period / s, speed s^2 c);
    the default keeps the unscaled wave.
    """
    k = _mkdv_modulus(k)
    period = 2.0 * elliptic.complete_elliptic_K(k) / scale
    grid = make_grid(n, period)
    dn = elliptic.jacobi(scale * grid.nodes, k).dn
    return WaveProfile(ModelSpec.mkdv(), grid, scale * math.sqrt(2.0) * dn,
                       scale**2 * (2.0 - k * k), family_param=k, family="dn")


def cn_wave(k: float, n: int, scale: float = 1.0) -> WaveProfile:
    """mKdV cn-wave sqrt(2) k cn(x, k) with c = 2k^2 - 1 on its period 4K(k)."""
    k = _mkdv_modulus(k)
    period = 4.0 * elliptic.complete_elliptic_K(k) / scale
    grid = make_grid(n, period)
    cn = elliptic.jacobi(scale * grid.nodes, k).cn
    return WaveProfile(ModelSpec.mkdv(), grid, scale * math.sqrt(2.0) * k * cn,
                       scale**2 * (2.0 * k * k - 1.0), family_param=k, family="cn")


def zero_wave(c: float, n: int, period: float = 2.0 * math.pi) -> WaveProfile:
    """The trivial mKdV state phi = 0 at speed c (a constant-coefficient test case)."""
    return WaveProfile(ModelSpec.mkdv(), make_grid(n, period), np.zeros(n), float(c),
                       family="zero")


def _stationary_operator(model: ModelSpec, c: float, phi: np.ndarray, grid: Grid) -> np.ndarray:
    d1 = grid.derivative(phi, 1)
    d2 = grid.derivative(phi, 2)
    if model.kind == MKDV:
        return d2 - c * phi + phi**3
    d4 = grid.derivative(phi, 4)
    return (model.a3 * d4 - model.a2 * d2 + (model.a1 + c) * phi
            + 1.5 * model.b1 * phi**2 - 0.5 * model.b2 * (2.0 * phi * d2 + d1**2)
            + 2.0 * model.b3 * phi**3)


def stationary_residual(profile: WaveProfile) -> float:
    """Sup-norm residual of the traveling-wave ODE, relative to max(1, |phi|_inf)."""
    r = _stationary_operator(profile.model, profile.speed, profile.values, profile.grid)
    return float(np.max(np.abs(r)) / max(1.0, profile.scale))


def momentum(profile: WaveProfile) -> float:
    """||phi||^2 over one period (trapezoid rule, spectrally accurate here)."""
    return float(profile.grid.spacing * np.sum(profile.values**2))


def mass(profile: WaveProfile) -> float:
    """Integral of phi over one period."""
    return float(profile.grid.spacing * np.sum(profile.values))


def mean(profile: WaveProfile) -> float:
    return mass(profile) / profile.period


# -- fifth-order solitary waves ---------------------------------------------


def sech4_fixture(a2: float = 1.0, b1: float = -1.0) -> tuple[ModelSpec, float, float, float]:
    """Exact solitary wave A sech^4(Bx) for a1 = b2 = b3 = 0, a3 = 1.

    Substituting the ansatz and matching powers of sech gives
    B^2 = a2/52, c = 576 B^4, A = -560 B^4 / b1.
    Returns (model, c, A, B).
    """
    if a2 <= 0 or b1 == 0:
        raise ValueError("sech^4 fixture needs a2 > 0 and b1 != 0")
    B2 = a2 / 52.0
    model = ModelSpec.fifth_order(a1=0.0, a2=a2, a3=1.0, b1=b1)
    return model, 576.0 * B2 * B2, -560.0 * B2 * B2 / b1, math.sqrt(B2)


def default_guess(model: ModelSpec, c: float, grid: Grid) -> np.ndarray:
    """sech^4 bump matched to the slowest linear decay rate at speed c."""
    # linear tail: a3 mu^4 - a2 mu^2 + (a1 + c) = 0
    roots = np.roots([model.a3, -model.a2, model.a1 + c])
    mu = float(np.min(np.sqrt(roots.astype(complex)).real))
    B = max(mu, 1e-3) / 4.0
    if model.b1 != 0:
        A = -560.0 * model.a3 * B**4 / model.b1
    elif model.b3 != 0:
        A = math.copysign(math.sqrt(abs(model.a1 + c) / abs(model.b3)), -model.b3)
    else:
        A = 1.0
    x = _centered(grid)
    return A / np.cosh(B * x) ** 4


def _centered(grid: Grid) -> np.ndarray:
    """Node coordinates folded to [-period/2, period/2)."""
    x = grid.nodes
    return np.where(x >= 0.5 * grid.period, x - grid.period, x)


def solve_fifth_order(
    model: ModelSpec,
    c: float,
    grid: Grid,
    guess: np.ndarray | None = None,
    *,
    tol: float = 1e-10,
    max_iter: int = 40,
    trivial_threshold: float = 1e-8,
) -> WaveProfile:
    """Newton iteration for an even solitary wave of the fifth-order equation.

    Unknowns are the cosine coefficients of phi, which removes the translation
    kernel. A backtracking line search keeps the residual norm decreasing.
    """
    from .operators import linearization_matrix, symbol_checks

    if model.kind != FIFTH:
        raise ValueError("solve_fifth_order needs a fifth-order model")
    if not c > 0:
        raise ValueError("solitary waves need speed c > 0")
    report = symbol_checks(model, c=c, kmax=float(np.max(np.abs(grid.wavenumbers))))
    if not report.h1_pass:
        raise ValueError(f"model fails the symbol check: {report.notes}")

    E = grid.even_basis
    phi = default_guess(model, c, grid) if guess is None else np.asarray(guess, dtype=float)
    if phi.shape != (grid.n,):
        raise ValueError("guess must have the grid's length")
    phi = E @ (E.T @ (0.5 * (phi + np.roll(phi[::-1], 1))))
    if np.max(np.abs(phi)) < trivial_threshold:
        raise TrivialSolution("initial guess is (numerically) zero")

    def resid(p):
        return _stationary_operator(model, c, p, grid)

    r = resid(phi)
    rnorm = float(np.linalg.norm(E.T @ r))
    history = [rnorm]
    scale = max(1.0, float(np.max(np.abs(phi))))
    it = 0
    while float(np.max(np.abs(r))) > tol * scale:
        if it >= max_iter:
            raise NonConvergence(f"no convergence after {max_iter} Newton steps "
                                 f"(residual {history[-1]:.3e})")
        J = E.T @ linearization_matrix(model, c, phi, grid) @ E
        cond = float(np.linalg.cond(J))
        if not np.isfinite(cond) or cond > 1e13:
            raise SingularJacobian("Newton Jacobian is singular", cond)
        step = E @ np.linalg.solve(J, -(E.T @ r))
        t = 1.0
        while True:
            trial = phi + t * step
            r_trial = resid(trial)
            tnorm = float(np.linalg.norm(E.T @ r_trial))
            if tnorm < rnorm or t < 1e-4:
                break
            t *= 0.5
        phi, r, rnorm = trial, r_trial, tnorm
        it += 1
        history.append(rnorm)
        scale = max(1.0, float(np.max(np.abs(phi))))
        log.info("newton step %d: damping %.3g, residual %.3e", it, t, rnorm)

    amp = float(np.max(np.abs(phi)))
    if amp < trivial_threshold:
        raise TrivialSolution("Newton converged to the zero solution")
    edge = float(np.abs(phi[grid.n // 2])) / amp
    if edge > 1e-8:
        warnings.warn(f"solitary wave not decayed at the domain edge: |phi(L)|/|phi| = {edge:.2e}",
                      stacklevel=2)
    return WaveProfile(model, grid, phi, float(c), family="fifth", provenance="newton",
                       diagnostics={"iterations": it, "residual_history": history,
                                    "boundary_decay": edge})


# -- parameter families -------------------------------------------------------

Family = Callable[[float], WaveProfile]


def dn_family(n: int, period: float | None = None) -> Family:
    """dn-waves parametrized by modulus k.

    With ``period=None`` the period 2K(k) follows k; otherwise each member is
    rescaled by phi(x) -> s phi(s x) onto the fixed period.
    """
    if period is None:
        return lambda k: dn_wave(k, n)
    return lambda k: dn_wave(k, n, scale=2.0 * elliptic.complete_elliptic_K(k) / period)


def cn_family(n: int, period: float | None = None) -> Family:
    if period is None:
        return lambda k: cn_wave(k, n)
    return lambda k: cn_wave(k, n, scale=4.0 * elliptic.complete_elliptic_K(k) / period)


def fifth_order_family(model: ModelSpec, grid: Grid, anchor: WaveProfile | None = None) -> Family:
    """Speed-parametrized solitary waves, continued from ``anchor`` when given."""
    def member(c: float) -> WaveProfile:
        guess = None if anchor is None else anchor.values
        return solve_fifth_order(model, c, grid, guess)
    return member


def momentum_slope(family: Family, at: float, h: float = 1e-4) -> float:
    """Central-difference estimate of d||phi||^2/dc along a one-parameter family.

    The family parameter need not be c itself: the chain rule is applied through
    the speeds of the two neighbouring members.
    """
    if h <= 0:
        raise ValueError("step must be positive")
    lo, hi = family(at - h), family(at + h)
    dP = momentum(hi) - momentum(lo)
    dc = hi.speed - lo.speed
    roundoff = 1e3 * np.finfo(float).eps * max(momentum(hi), 1.0)
    if abs(dP) < roundoff or abs(dc) < 1e3 * np.finfo(float).eps * max(abs(hi.speed), 1.0):
        warnings.warn(f"momentum_slope step h={h:g} is at the round-off level", stacklevel=2)
    if dc == 0:
        raise ZeroDivisionError("family speed does not vary with the parameter")
    return dP / dc


def export_profile_csv(profile: WaveProfile, path) -> None:
    """Write x, phi columns; '#'-prefixed header lines carry model, c, k, period."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# model: {profile.model.kind}\n")
        fh.write(f"# family: {profile.family}\n")
        fh.write(f"# c: {profile.speed:.12g}\n")
        k = "" if profile.family_param is None else f"{profile.family_param:.12g}"
        fh.write(f"# k: {k}\n")
        fh.write(f"# period: {profile.period:.12g}\n")
        w = csv.writer(fh)
        w.writerow(["x", "phi"])
        for x, p in zip(profile.x, profile.values):
            w.writerow([f"{x:.12g}", f"{p:.12g}"])
