"""Dense eigensolvers: symmetric operators, the stability operator D L, the
constrained pencil, and Krein forms."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .operators import BoundaryAmbiguity, DiscreteOperator, PencilPair, diff_matrix

EPS = np.finfo(float).eps


class SpectrumError(RuntimeError):
    pass


class KSingular(SpectrumError):
    def __init__(self, smallest: float, condition: float):
        super().__init__(f"reduced K is numerically singular: smallest |eigenvalue| "
                         f"{smallest:.3e}, condition {condition:.3e}")
        self.smallest, self.condition = smallest, condition


@dataclass(frozen=True, eq=False)
class EigenPair:
    value: complex
    vector: np.ndarray
    residual: float


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenpairs plus the scales used for tolerances.

    ``operator_scale`` is the spectral radius (residuals are relative to it);
    ``intrinsic_scale`` is max(1, |min eigenvalue of L|), the scale of the
    low-lying eigenvalues that the counts are about.
    """

    pairs: tuple[EigenPair, ...]
    operator_scale: float
    symmetry_defect: float = 0.0
    intrinsic_scale: float = 1.0
    meta: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.pairs])

    @property
    def vectors(self) -> np.ndarray:
        return np.column_stack([p.vector for p in self.pairs])

    @property
    def residuals(self) -> np.ndarray:
        return np.array([p.residual for p in self.pairs])

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


def sym_eigs(op: DiscreteOperator) -> Spectrum:
    """Real spectrum of a symmetric operator on its analysis subspace."""
    if not op.symmetric:
        raise ValueError("sym_eigs needs a symmetric operator")
    X = op.restricted()
    try:
        vals, vecs = np.linalg.eigh(X)
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"symmetric eigensolver failed: {exc}") from exc
    scale = max(float(np.max(np.abs(vals), initial=0.0)), np.finfo(float).tiny)
    res = np.linalg.norm(X @ vecs - vecs * vals, axis=0) / scale
    grid_vecs = vecs if op.basis is None else op.basis @ vecs
    pairs = tuple(EigenPair(float(v), grid_vecs[:, j], float(r))
                  for j, (v, r) in enumerate(zip(vals, res)))
    return Spectrum(pairs, scale, 0.0, max(1.0, float(abs(vals[0]))))


def negative_count(op: DiscreteOperator, tol: float = 1e-8) -> int:
    """Number of eigenvalues below -tol * scale, decided on the well-scaled form.

    Raises BoundaryAmbiguity when an eigenvalue lies in (-tol*scale, -tol*scale/10).
    """
    if not op.symmetric:
        raise ValueError("negative_count needs a symmetric operator")
    vals = np.linalg.eigvalsh(op.scaled())
    scale = max(float(np.max(np.abs(vals), initial=0.0)), np.finfo(float).tiny)
    band = (vals < -tol * scale / 10.0) & (vals > -tol * scale)
    if np.any(band):
        raise BoundaryAmbiguity(f"eigenvalue {vals[band][0] / scale:.3e} (relative) is within "
                                f"a factor 10 of the threshold -{tol:g}")
    return int(np.sum(vals < -tol * scale))


def symmetry_defect(values: np.ndarray) -> float:
    """Max distance from each value to its nearest -lambda and conj(lambda) partners."""
    if len(values) == 0:
        return 0.0
    v = np.asarray(values)
    d_neg = np.min(np.abs(v[:, None] + v[None, :]), axis=1)
    d_conj = np.min(np.abs(v[:, None] - np.conj(v)[None, :]), axis=1)
    return float(np.max(np.maximum(d_neg, d_conj)))


def stability_eigs(L_op: DiscreteOperator, grid) -> Spectrum:
    """Full spectrum of D L (dense Hessenberg/QR via LAPACK geev)."""
    D = diff_matrix(grid, 1).entries
    A = D @ L_op.entries
    try:
        vals, vecs = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"nonsymmetric eigensolver failed: {exc}") from exc
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    scale = float(np.max(np.abs(vals)))
    res = np.linalg.norm(A @ vecs - vecs * vals, axis=0) / scale
    lmin = float(np.linalg.eigvalsh(L_op.restricted())[0])
    pairs = tuple(EigenPair(complex(v), vecs[:, j], float(r))
                  for j, (v, r) in enumerate(zip(vals, res)))
    return Spectrum(pairs, scale, symmetry_defect(vals), max(1.0, abs(lmin)),
                    meta={"jordan_radius": float(np.sqrt(EPS * np.linalg.norm(A, 2)))})


def pencil_eigs(pencil: PencilPair, max_condition: float = 1e10) -> Spectrum:
    """Eigenvalues gamma of A w = gamma K w via the shifted pair (A + delta K, K).

    The QZ algorithm is applied to the reduced pair directly, which keeps the
    relative accuracy of the large gammas; residuals are backward errors.
    """
    kvals = np.linalg.eigvalsh(pencil.K.entries)
    smallest = float(np.min(np.abs(kvals)))
    cond = float(np.max(np.abs(kvals)) / smallest) if smallest > 0 else np.inf
    if cond > max_condition:
        raise KSingular(smallest, cond)
    A, K = pencil.A_delta.entries, pencil.K.entries
    mu, W = scipy.linalg.eig(A, K)
    if not np.all(np.isfinite(mu)):
        raise SpectrumError("pencil has infinite eigenvalues")
    W = W / np.linalg.norm(W, axis=0)
    a_norm, k_norm = np.linalg.norm(A, 2), np.linalg.norm(K, 2)
    res = (np.linalg.norm(A @ W - (K @ W) * mu, axis=0)
           / (a_norm + np.abs(mu) * k_norm))
    gammas = mu - pencil.delta
    pairs = tuple(EigenPair(complex(g), W[:, j], float(r))
                  for j, (g, r) in enumerate(zip(gammas, res)))
    return Spectrum(pairs, float(np.max(np.abs(gammas))), 0.0, 1.0,
                    meta={"delta": pencil.delta, "K_condition": cond})


def krein_form(L_op: DiscreteOperator, pair: EigenPair, *, zero_radius: float = 0.0,
               return_imag: bool = False):
    """Re <L v, v> for the unit-normalized eigenvector of a nonzero eigenvalue."""
    if abs(pair.value) <= zero_radius:
        raise ValueError("krein_form is undefined on the zero cluster")
    v = pair.vector / np.linalg.norm(pair.vector)
    q = complex(np.vdot(v, L_op.entries @ v))
    return (q.real, q.imag) if return_imag else q.real


def export_spectrum_csv(spectrum: Spectrum, path, krein: Sequence[float | None] | None = None,
                        classes: Sequence[str] | None = None) -> None:
    """CSV with columns re, im, residual, krein, class (12 significant digits)."""
    n = len(spectrum)
    krein = [None] * n if krein is None else krein
    classes = [""] * n if classes is None else classes
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im", "residual", "krein", "class"])
        for p, kf, cl in zip(spectrum.pairs, krein, classes):
            w.writerow([f"{p.value.real:.12g}", f"{p.value.imag:.12g}", f"{p.residual:.12g}",
                        "" if kf is None else f"{kf:.12g}", cl])
