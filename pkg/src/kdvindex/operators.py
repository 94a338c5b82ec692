"""Dense collocation operators: derivatives, L, M = -D L D, projections, the
constrained pencil pair and the 2x2 matrix of L^+ against {phi0, 1}.

Symmetric analyses (kernels, inertia, pseudo-inverses) are carried out on the
Nyquist-free subspace spanned by the real Fourier modes |m| < n/2. Each operator
carries a *frame* C whose columns span that subspace, weighted by
(1 + kappa^2)^(-order/4). The congruence C^T X C has the inertia of X on the
subspace (Sylvester) but is O(1)-scaled, so relative tolerances stay meaningful
for the high-order operators L and M.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .waves import Grid, ModelSpec, WaveProfile

log = logging.getLogger(__name__)

KERNEL_TOL = 1e-8


class OperatorError(RuntimeError):
    pass


class KernelDimensionMismatch(OperatorError):
    def __init__(self, found: int, expected: int, values):
        super().__init__(f"found {found} kernel vectors, expected {expected} "
                         f"(smallest scaled |eigenvalues|: {np.sort(np.abs(values))[:4]})")
        self.found, self.expected = found, expected


class NearSingular(OperatorError):
    pass


class RankDeficient(OperatorError):
    pass


class OrthogonalityViolation(OperatorError):
    pass


class BoundaryAmbiguity(OperatorError):
    pass


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Dense real operator on the grid, with an optional Fourier-frame form.

    ``fourier`` is the matrix in the Nyquist-free Fourier basis and ``weights``
    the smoothing factors used for inertia and kernel decisions. For operators
    already expressed in reduced coordinates, ``scaled_form`` and ``frame`` may be
    supplied directly.
    """

    grid: "Grid"
    entries: np.ndarray
    symmetric: bool
    name: str = ""
    order: int = 0
    fourier: np.ndarray | None = None
    weights: np.ndarray | None = None
    symmetrization_defect: float = 0.0
    scaled_form: np.ndarray | None = None
    frame: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("operator entries must be a square matrix")
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)
        if self.fourier is not None and self.frame is None:
            Z = self.basis
            w = np.ones(Z.shape[1]) if self.weights is None else self.weights
            object.__setattr__(self, "frame", Z * w)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def T(self) -> np.ndarray:
        return self.entries.T

    @property
    def basis(self) -> np.ndarray | None:
        """Orthonormal grid-space columns matching the Fourier-frame coordinates."""
        if self.fourier is None:
            return None
        Z, _ = self.grid.fourier_basis
        return Z[:, self.meta.get("modes", slice(None))]

    def __matmul__(self, other):
        return self.entries @ other

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries, 2))

    def restricted(self) -> np.ndarray:
        """Matrix on the analysis subspace (Fourier frame when available)."""
        return self.entries if self.fourier is None else self.fourier

    def scaled(self) -> np.ndarray:
        """Well-scaled congruent form used for inertia and kernels."""
        if self.scaled_form is not None:
            return self.scaled_form
        X = self.restricted()
        if self.weights is None:
            return X
        return self.weights[:, None] * X * self.weights[None, :]


def _symmetrize(a: np.ndarray, antisymmetric: bool = False) -> tuple[np.ndarray, float]:
    sign = -1.0 if antisymmetric else 1.0
    defect = float(np.max(np.abs(a - sign * a.T), initial=0.0))
    return 0.5 * (a + sign * a.T), defect


def smoothing_weights(grid: "Grid", order: int) -> np.ndarray:
    """(1 + kappa^2)^(-order/4) on the Nyquist-free Fourier basis."""
    _, kappa = grid.fourier_basis
    return (1.0 + kappa**2) ** (-order / 4.0)


def fourier_derivative(grid: "Grid") -> np.ndarray:
    """Exact d/dx in the real Fourier basis: 2x2 rotation blocks scaled by kappa."""
    _, kappa = grid.fourier_basis
    m = len(kappa)
    d = np.zeros((m, m))
    for j in range(1, m, 2):
        d[j + 1, j] = -kappa[j]    # (cos)' = -kappa sin
        d[j, j + 1] = kappa[j]     # (sin)' = kappa cos
    return d


def diff_matrix(grid: "Grid", order: int = 1) -> DiscreteOperator:
    """Fourier collocation matrix of d^order/dx^order.

    The Nyquist mode is annihilated for odd orders, so odd matrices are exactly
    antisymmetric and even ones exactly symmetric.
    """
    if int(order) != order or order < 1:
        raise ValueError("derivative order must be a positive integer")
    order = int(order)
    n = grid.n
    sym = (1j * grid.wavenumbers) ** order
    if order % 2:
        sym[n // 2] = 0.0
    eye = np.eye(n)
    a = np.real(np.fft.ifft(sym[:, None] * np.fft.fft(eye, axis=0), axis=0))
    a, defect = _symmetrize(a, antisymmetric=bool(order % 2))
    return DiscreteOperator(grid, a, symmetric=not order % 2, name=f"D{order}",
                            order=order, symmetrization_defect=defect)


def linearization_matrix(model: "ModelSpec", c: float, phi: np.ndarray, grid: "Grid") -> np.ndarray:
    """Unsymmetrized collocation matrix of E''(phi) at speed c."""
    D1 = diff_matrix(grid, 1).entries
    D2 = diff_matrix(grid, 2).entries
    if model.kind == "mkdv":
        return -D2 + np.diag(c - 3.0 * phi**2)
    D4 = diff_matrix(grid, 4).entries
    d2phi = grid.derivative(phi, 2)
    return (model.a3 * D4 - model.a2 * D2
            + np.diag(model.a1 + c + 3.0 * model.b1 * phi - model.b2 * d2phi
                      + 6.0 * model.b3 * phi**2)
            - D1 @ (model.b2 * phi[:, None] * D1))


def _fourier_L(model: "ModelSpec", c: float, phi: np.ndarray, grid: "Grid") -> np.ndarray:
    Z, kappa = grid.fourier_basis
    k2 = kappa**2
    if model.kind == "mkdv":
        X = np.diag(k2 + c) - 3.0 * (Z.T * phi**2) @ Z
    else:
        d2phi = grid.derivative(phi, 2)
        pot = 3.0 * model.b1 * phi - model.b2 * d2phi + 6.0 * model.b3 * phi**2
        X = np.diag(model.a3 * k2 * k2 + model.a2 * k2 + model.a1 + c) + (Z.T * pot) @ Z
        if model.b2 != 0.0:
            Dv = fourier_derivative(grid)
            X = X + Dv.T @ ((Z.T * (model.b2 * phi)) @ Z) @ Dv
    return 0.5 * (X + X.T)


def assemble_L(profile: "WaveProfile") -> DiscreteOperator:
    grid = profile.grid
    a = linearization_matrix(profile.model, profile.speed, profile.values, grid)
    a, defect = _symmetrize(a)
    order = 2 if profile.model.kind == "mkdv" else 4
    X = _fourier_L(profile.model, profile.speed, profile.values, grid)
    return DiscreteOperator(grid, a, True, "L", order, X, smoothing_weights(grid, order), defect)


def assemble_M(L_op: DiscreteOperator, grid: "Grid", *, exclude_mean: bool = False) -> DiscreteOperator:
    """M = -D L D.

    ``exclude_mean`` drops the zero wavenumber from the analysis frame; for
    truncated solitary waves the constant is an artificial kernel vector.
    """
    if not L_op.symmetric:
        raise ValueError("assemble_M needs a symmetric L")
    D = diff_matrix(grid, 1).entries
    _, defect = _symmetrize(-D @ L_op.entries @ D)
    Dv = fourier_derivative(grid)
    X = Dv.T @ L_op.restricted() @ Dv
    X = 0.5 * (X + X.T)
    Z, _ = grid.fourier_basis
    a = Z @ X @ Z.T
    a = 0.5 * (a + a.T)
    order = L_op.order + 2
    w = smoothing_weights(grid, order)
    meta = {"exclude_mean": exclude_mean, "full_fourier": X}
    if exclude_mean:
        X, w = X[1:, 1:], w[1:]
        meta["modes"] = slice(1, None)
    return DiscreteOperator(grid, a, True, "M", order, X, w, defect, meta=meta)


def _scaled_eigh(op: DiscreteOperator):
    X = op.scaled()
    vals, vecs = np.linalg.eigh(X)
    scale = max(float(np.max(np.abs(vals), initial=0.0)), np.finfo(float).tiny)
    return vals, vecs, scale


def kernel_basis(op: DiscreteOperator, tol: float = KERNEL_TOL,
                 expected: int | None = None) -> list[np.ndarray]:
    """Orthonormal kernel vectors: scaled eigenvalues with |mu| <= tol * scale."""
    if not op.symmetric:
        raise ValueError("kernel_basis needs a symmetric operator")
    vals, vecs, scale = _scaled_eigh(op)
    idx = np.flatnonzero(np.abs(vals) <= tol * scale)
    if expected is not None and len(idx) != expected:
        raise KernelDimensionMismatch(len(idx), expected, vals / scale)
    if len(idx) == 0:
        return []
    raw = vecs[:, idx] if op.frame is None else op.frame @ vecs[:, idx]
    q, _ = np.linalg.qr(raw)
    out = []
    for j in range(q.shape[1]):
        v = q[:, j]
        out.append(v * np.sign(v[np.argmax(np.abs(v))]))
    return out


def _orthonormal(vectors: Sequence[np.ndarray], n: int) -> np.ndarray:
    if len(vectors) == 0:
        return np.zeros((n, 0))
    V = np.column_stack([np.asarray(v, dtype=float) for v in vectors])
    q, r = np.linalg.qr(V)
    d = np.abs(np.diag(r))
    if np.min(d) <= 1e-10 * max(np.max(d), 1.0):
        raise RankDeficient("vectors are (numerically) linearly dependent")
    return q


def projector_complement(vectors: Sequence[np.ndarray], grid: "Grid | None" = None) -> DiscreteOperator:
    """Orthogonal projection onto the complement of span(vectors)."""
    n = len(vectors[0])
    q = _orthonormal(vectors, n)
    p, defect = _symmetrize(np.eye(n) - q @ q.T)
    return DiscreteOperator(grid, p, True, "P", 0, symmetrization_defect=defect)


def complement_basis(vectors: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complement of the columns of ``vectors``."""
    dim = vectors.shape[0]
    q = _orthonormal(list(vectors.T), dim)
    full, _ = np.linalg.qr(q, mode="complete")
    return full[:, q.shape[1]:]


def pseudo_inverse(op: DiscreteOperator, kernel: Sequence[np.ndarray],
                   tol: float = KERNEL_TOL) -> DiscreteOperator:
    """Spectral pseudo-inverse on the analysis subspace (kernel modes zeroed).

    Computed as P W (W X W)^+ W P with the smoothing weights W: any generalized
    inverse agrees with X^-1 between vectors orthogonal to the kernel, and the
    projections P make the result the spectral pseudo-inverse.
    """
    vals, vecs, scale = _scaled_eigh(op)
    m = len(kernel)
    order = np.argsort(np.abs(vals))
    ker_idx, rest = order[:m], order[m:]
    if m and np.max(np.abs(vals[ker_idx])) > tol * scale:
        raise KernelDimensionMismatch(int(np.sum(np.abs(vals) <= tol * scale)), m, vals / scale)
    smallest = float(np.min(np.abs(vals[rest])))
    if smallest < 10.0 * tol * scale:
        raise NearSingular(f"non-kernel eigenvalue {smallest / scale:.3e} (scaled) below 10*tol")
    inv = (vecs[:, rest] / vals[rest]) @ vecs[:, rest].T
    B = op.basis
    if B is None:
        g = inv
        if m:
            q = _orthonormal(kernel, op.n)
            g = g - q @ (q.T @ g)
            g = g - (g @ q) @ q.T
        g, defect = _symmetrize(g)
        return DiscreteOperator(op.grid, g, True, f"{op.name}+", -op.order,
                                symmetrization_defect=defect,
                                meta={"min_scaled_eigenvalue": smallest / scale})
    w = np.ones(B.shape[1]) if op.weights is None else op.weights
    gv = w[:, None] * inv * w[None, :]
    if m:
        q = _orthonormal([B.T @ np.asarray(v) for v in kernel], B.shape[1])
        gv = gv - q @ (q.T @ gv)
        gv = gv - (gv @ q) @ q.T
    gv, defect = _symmetrize(gv)
    g, _ = _symmetrize(B @ gv @ B.T)
    return DiscreteOperator(op.grid, g, True, f"{op.name}+", -op.order, gv, None, defect,
                            meta={"modes": op.meta.get("modes", slice(None)),
                                  "min_scaled_eigenvalue": smallest / scale})


def pseudo_inverse_L(L_op: DiscreteOperator, kernel: Sequence[np.ndarray],
                     tol: float = KERNEL_TOL) -> DiscreteOperator:
    return pseudo_inverse(L_op, kernel, tol)


@dataclass(frozen=True, eq=False)
class PencilPair:
    """Reduced pair (A_delta, K) on an orthonormal basis of the constrained subspace.

    ``basis`` holds grid-space columns orthogonal to f0 (and to constants when
    the mean is excluded). ``A_delta`` also carries a smoothed congruent form
    used only for its inertia.
    """

    A_delta: DiscreteOperator
    K: DiscreteOperator
    basis: np.ndarray
    delta: float
    K_condition: float

    @property
    def A0(self) -> np.ndarray:
        return self.A_delta.entries - self.delta * self.K.entries


def assemble_pencil(L_op: DiscreteOperator, M_op: DiscreteOperator, f0: np.ndarray | None,
                    delta: float | None = None, *, L_plus: DiscreteOperator | None = None) -> PencilPair:
    """Constrained pencil (Q^T (M + delta L^+) Q, Q^T L^+ Q).

    Q spans the complement of f0 inside the Nyquist-free subspace (n - 2
    columns; one fewer when M excludes the mean). ``f0=None`` (operators with
    trivial kernel) leaves the subspace unconstrained. ``delta=None`` picks
    1e-3 / ||K||; ``delta=0`` is allowed for diagnostics.
    """
    grid = L_op.grid
    kernel = [] if f0 is None else [np.asarray(f0, dtype=float)]
    if L_plus is None:
        L_plus = pseudo_inverse_L(L_op, kernel)
    Z, kappa = grid.fourier_basis
    Lp = Z.T @ L_plus.entries @ Z if L_plus.fourier is None or L_plus.meta.get("modes") != slice(None) \
        else L_plus.fourier
    Mv = M_op.meta.get("full_fourier")
    if Mv is None:
        Mv = Z.T @ M_op.entries @ Z
    cons = []
    if kernel:
        fz = Z.T @ kernel[0]
        cons.append(fz / np.linalg.norm(fz))
    if M_op.meta.get("exclude_mean"):
        e0 = np.zeros(Z.shape[1])
        e0[0] = 1.0
        cons.append(e0)
    m = Z.shape[1]
    QV = complement_basis(np.column_stack(cons)) if cons else np.eye(m)
    K, k_defect = _symmetrize(QV.T @ Lp @ QV)
    kabs = np.abs(np.linalg.eigvalsh(K))
    cond = float(np.max(kabs) / np.min(kabs))
    if delta is None:
        delta = 1e-3 / float(np.max(kabs))
    if delta < 0:
        raise ValueError("delta must be non-negative")
    A, a_defect = _symmetrize(QV.T @ (Mv + delta * Lp) @ QV)
    # smoothed copy for inertia: w = W Qs z with Qs orthogonal to W * constraints,
    # so Q^T w = C z and C^T A C = Qs^T W (M + delta L^+) W Qs
    w = (1.0 + kappa**2) ** (-M_op.order / 4.0)
    Qs = complement_basis(np.column_stack([w * v for v in cons])) if cons else np.eye(m)
    As, _ = _symmetrize(Qs.T @ (w[:, None] * (Mv + delta * Lp) * w[None, :]) @ Qs)
    C = QV.T @ (w[:, None] * Qs)
    A_op = DiscreteOperator(grid, A, True, "A_delta", M_op.order, symmetrization_defect=a_defect,
                            scaled_form=As, frame=C, meta={"delta": delta})
    K_op = DiscreteOperator(grid, K, True, "K", -L_op.order, symmetrization_defect=k_defect)
    return PencilPair(A_op, K_op, Z @ QV, float(delta), cond)


@dataclass(frozen=True)
class MatrixD:
    entries: np.ndarray
    det: float
    tolerance: float
    invertible: bool
    orthogonality: tuple[float, float] = (0.0, 0.0)

    @property
    def F(self) -> float:
        """<L^+ 1, 1> (un-normalized)."""
        return float(self.entries[1, 1])

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)


def matrix_D(L_op: DiscreteOperator, phi0: np.ndarray, grid: "Grid", *,
             kernel: Sequence[np.ndarray] | None = None,
             L_plus: DiscreteOperator | None = None,
             ortho_tol: float = 1e-8, det_tol: float = 1e-10) -> MatrixD:
    """Gram matrix of L^+ against (phi0, 1) in the grid inner product h * sum."""
    if kernel is None:
        kernel = kernel_basis(L_op, expected=1)
    ones = np.ones(grid.n)
    phi0 = np.asarray(phi0, dtype=float)
    h = grid.spacing
    f = np.asarray(kernel[0])
    o1 = abs(h * f @ ones) / (math.sqrt(h) * math.sqrt(h * grid.n))
    o2 = abs(h * f @ phi0) / (math.sqrt(h) * math.sqrt(h * phi0 @ phi0) + 1e-300)
    if max(o1, o2) > ortho_tol:
        raise OrthogonalityViolation(f"kernel not orthogonal to {{1, phi0}}: {o1:.2e}, {o2:.2e}")
    if L_plus is None:
        L_plus = pseudo_inverse_L(L_op, kernel)
    G = L_plus.entries
    d11 = h * phi0 @ G @ phi0
    d12 = h * phi0 @ G @ ones
    d22 = h * ones @ G @ ones
    ent = np.array([[d11, d12], [d12, d22]])
    det = float(np.linalg.det(ent))
    tol = det_tol * max(float(np.max(np.abs(ent))), 1.0) ** 2
    ent.flags.writeable = False
    return MatrixD(ent, det, tol, abs(det) > tol, (float(o1), float(o2)))


@dataclass(frozen=True)
class SymbolReport:
    L0_min: float
    L0_argmin: float
    c_wave_min: float
    M0_min: float
    shifted_min: float
    c0: float
    d0: float
    delta: float
    h1_pass: bool
    shift_pass: bool
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def symbol_checks(model: "ModelSpec", c: float, delta: float = 1e-3,
                  kmax: float = 100.0, samples: int = 20001) -> SymbolReport:
    """Minima of the constant-coefficient symbols L0(k), k^2 L0(k) and
    k^2 L0(k) + delta / L0(k) over [0, kmax].

    The quartic's interior critical point is added to the sample set so the
    minimum is exact for the fifth-order symbol.
    """
    ks = np.linspace(0.0, kmax, samples)
    if model.kind == "mkdv":
        cw = np.zeros_like(ks)
        L0 = ks**2 + c
    else:
        cmin, kcrit = model.wave_speed_min()
        if 0 < kcrit < kmax:
            ks = np.sort(np.append(ks, kcrit))
        cw = model.wave_speed(ks)
        L0 = cw + c
    notes = []
    i = int(np.argmin(L0))
    c0 = float(L0[i])
    cwave_min = float(np.min(cw))
    h1 = c0 > 0 and cwave_min >= -1e-14
    if cwave_min < -1e-14:
        notes.append(f"wave speed dips to {cwave_min:.6g} < 0")
    if c0 <= 0:
        notes.append(f"L0 symbol reaches {c0:.6g} <= 0")
    M0 = ks**2 * L0
    with np.errstate(divide="ignore"):
        shifted = M0 + delta / L0
    shifted_min = float(np.min(shifted)) if h1 else float("nan")
    d0 = shifted_min / delta if h1 else float("nan")
    shifted_ok = h1 and d0 > 0
    if not shifted_ok:
        notes.append("shifted symbol not bounded below by a positive multiple of delta")
    return SymbolReport(c0, float(ks[i]), cwave_min, float(np.min(M0)), shifted_min,
                        c0, d0, float(delta), bool(h1), bool(shifted_ok), tuple(notes))


def dump_operator(op: DiscreteOperator, path) -> None:
    """Write the dense matrix as CSV (diagnostics)."""
    np.savetxt(path, op.entries, delimiter=",", fmt="%.17g")
