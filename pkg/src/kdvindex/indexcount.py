"""Counting: classification of stability spectra, n0 and n(D), the closure
identity, pencil sign counts and the cross-checks that tie them together.

All identities compare integers; tolerances enter only through classification
and are echoed into every report.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
import scipy.optimize

from . import operators as ops
from . import spectra
from .waves import WaveProfile, cn_wave

log = logging.getLogger(__name__)

EPS = np.finfo(float).eps

ZERO = "zero"
REAL = "real"
REAL_MIRROR = "real_mirror"
COMPLEX = "complex"
COMPLEX_MIRROR = "complex_mirror"
IMAG_NEG = "imag_neg"
IMAG_POS = "imag_pos"
IMAG_MIRROR = "imag_mirror"
INDETERMINATE = "indeterminate"
CONTINUUM = "continuum"
CONTINUUM_MIRROR = "continuum_mirror"


class IndexError_(RuntimeError):
    pass


class AmbiguousClass(IndexError_):
    pass


class AmbiguousSign(IndexError_):
    pass


class H4Violation(IndexError_):
    pass


class H3Violation(IndexError_):
    pass


class NoSignChange(IndexError_):
    pass


@dataclass(frozen=True)
class Tolerances:
    """Relative tolerance settings; absolute values are resolved per spectrum."""

    classify: float = 1e-6        # tau = classify * s  (s = intrinsic scale)
    zero_cluster: float = 1e-6    # r0 = zero_cluster * s, floored by the Jordan radius
    krein: float = 1e-8           # tau_K = krein * ||L||
    kernel: float = 1e-8
    equivalence: float = 1e-6
    m_identity: float = 1e-8
    localization: float = 3.0     # n * IPR above which a mode counts as localized
    ambiguity_factor: float = 10.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not v > 0:
                raise ValueError(f"tolerance {k} must be positive, got {v!r}")


@dataclass(frozen=True)
class ResolvedTolerances:
    tau: float
    zero_radius: float
    tau_krein: float
    intrinsic_scale: float
    operator_scale: float
    localization: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def resolve_tolerances(spectrum: spectra.Spectrum, L_op: ops.DiscreteOperator,
                       tols: Tolerances = Tolerances(), *, localized_only: bool = False) -> ResolvedTolerances:
    s = spectrum.intrinsic_scale
    tau = max(tols.classify * s, 100.0 * EPS * spectrum.operator_scale)
    jordan = spectrum.meta.get("jordan_radius", 0.0)
    r0 = max(tols.zero_cluster * s, 100.0 * jordan)
    return ResolvedTolerances(tau, r0, tols.krein * L_op.norm(), s, spectrum.operator_scale,
                              tols.localization if localized_only else None)


def localization_score(v: np.ndarray) -> float:
    """n * sum |v|^4 / (sum |v|^2)^2: about 1 for extended modes, large for bound states."""
    p = np.abs(v) ** 2
    return float(len(v) * np.sum(p * p) / np.sum(p) ** 2)


@dataclass
class Classification:
    N_r: int = 0
    N_c: int = 0
    N_i_minus: int = 0
    N_i_plus: int = 0
    zero_cluster: int = 0
    indeterminate: int = 0
    continuum: int = 0
    labels: list = field(default_factory=list, repr=False)
    krein: list = field(default_factory=list, repr=False)
    paired: bool = True

    @property
    def accounted(self) -> int:
        return (self.zero_cluster + 2 * self.N_r + 4 * self.N_c
                + 2 * (self.N_i_minus + self.N_i_plus + self.indeterminate + self.continuum))

    def to_dict(self) -> dict:
        return {"N_r": self.N_r, "N_c": self.N_c, "N_i_minus": self.N_i_minus,
                "N_i_plus": self.N_i_plus, "zero_cluster": self.zero_cluster,
                "indeterminate": self.indeterminate, "continuum": self.continuum}


def _ambiguous(x: float, boundary: float, factor: float) -> bool:
    return boundary / factor < x < boundary * factor


def classify(spectrum: spectra.Spectrum, L_op: ops.DiscreteOperator,
             tols: Tolerances | ResolvedTolerances = Tolerances(), *,
             localized_only: bool = False) -> Classification:
    """Assign every eigenvalue of D L to a class.

    Only the representative of each symmetry orbit is counted: Re > 0 for real
    values, the open first quadrant for complex ones, Im > 0 for imaginary ones.
    With ``localized_only`` (truncated solitary waves), imaginary modes whose
    localization score is below the threshold are labeled continuum and kept
    out of N_i.
    """
    factor = getattr(tols, "ambiguity_factor", 10.0)
    rt = tols if isinstance(tols, ResolvedTolerances) else resolve_tolerances(
        spectrum, L_op, tols, localized_only=localized_only)
    tau, r0, tk = rt.tau, rt.zero_radius, rt.tau_krein
    out = Classification()
    mirrors = {REAL: 0, COMPLEX: 0, "imag": 0}
    for pair in spectrum.pairs:
        lam = pair.value
        re, im = lam.real, lam.imag
        kf = None
        if abs(lam) <= r0:
            if abs(lam) > r0 / factor:
                raise AmbiguousClass(f"eigenvalue {lam:.6g} is near the zero-cluster radius {r0:.3g}")
            out.zero_cluster += 1
            out.labels.append(ZERO)
            out.krein.append(None)
            continue
        if abs(lam) < r0 * factor:
            raise AmbiguousClass(f"eigenvalue {lam:.6g} is near the zero-cluster radius {r0:.3g}")
        for part in (re, im):
            if _ambiguous(abs(part), tau, factor):
                raise AmbiguousClass(f"eigenvalue {lam:.6g}: component within a factor "
                                     f"{factor:g} of tau = {tau:.3g}")
        if abs(re) > tau and abs(im) <= tau:
            label = REAL if re > 0 else REAL_MIRROR
            if re > 0:
                out.N_r += 1
            else:
                mirrors[REAL] += 1
        elif abs(re) > tau:
            if re > 0 and im > 0:
                label = COMPLEX
                out.N_c += 1
            else:
                label = COMPLEX_MIRROR
                mirrors[COMPLEX] += 1
        else:
            kf = spectra.krein_form(L_op, pair)
            if im < 0:
                label = IMAG_MIRROR
                mirrors["imag"] += 1
            elif rt.localization is not None and localization_score(pair.vector) < rt.localization:
                label = CONTINUUM
                out.continuum += 1
            elif abs(kf) <= tk:
                label = INDETERMINATE
                out.indeterminate += 1
            else:
                if _ambiguous(abs(kf), tk, factor):
                    raise AmbiguousClass(f"Krein form {kf:.3e} at {lam:.6g} is near tau_K = {tk:.3g}")
                label = IMAG_NEG if kf < 0 else IMAG_POS
                if kf < 0:
                    out.N_i_minus += 1
                else:
                    out.N_i_plus += 1
        out.labels.append(label)
        out.krein.append(kf)
    imag_count = out.N_i_minus + out.N_i_plus + out.indeterminate + out.continuum
    out.paired = (mirrors[REAL] == out.N_r and mirrors[COMPLEX] == 3 * out.N_c
                  and mirrors["imag"] == imag_count)
    return out


def h4_value(L_op: ops.DiscreteOperator, phi0: np.ndarray, *,
             L_plus: ops.DiscreteOperator | None = None, kernel=None) -> float:
    """<L^+ phi0, phi0> in the grid inner product."""
    if L_plus is None:
        kernel = ops.kernel_basis(L_op, expected=1) if kernel is None else kernel
        L_plus = ops.pseudo_inverse_L(L_op, kernel)
    phi0 = np.asarray(phi0, dtype=float)
    return float(L_op.grid.spacing * phi0 @ L_plus.entries @ phi0)


def compute_n0(L_op: ops.DiscreteOperator, phi0: np.ndarray, tau: float | None = None, *,
               L_plus: ops.DiscreteOperator | None = None, kernel=None) -> int:
    """1 if <L^+ phi0, phi0> < 0, else 0; H4Violation when it is within tau of 0.

    The default tau is 1e-8 times the natural scale ||L^+|| * ||phi0||^2.
    """
    if L_plus is None:
        kernel = ops.kernel_basis(L_op, expected=1) if kernel is None else kernel
        L_plus = ops.pseudo_inverse_L(L_op, kernel)
    value = h4_value(L_op, phi0, L_plus=L_plus)
    if tau is None:
        phi0 = np.asarray(phi0, dtype=float)
        tau = 1e-8 * L_plus.norm() * L_op.grid.spacing * float(phi0 @ phi0)
    if abs(value) <= tau:
        raise H4Violation(f"<L^+ phi0, phi0> = {value:.3e} is within {tau:.3e} of zero")
    return int(value < 0)


def compute_nD(D: ops.MatrixD) -> int:
    if not D.invertible:
        raise H3Violation(f"matrix D is singular: det = {D.det:.3e} (tolerance {D.tolerance:.3e})")
    return int(np.sum(D.eigenvalues() < 0))


@dataclass
class IndexReport:
    classification: Classification
    n_L: int
    n0_or_nD: int
    kind: str
    lhs: int
    rhs: int
    passed: bool
    tolerances: dict = field(default_factory=dict)
    cluster_sizes: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Fixed field order for serialization."""
        return {
            "classification": self.classification.to_dict(),
            "n_L": self.n_L,
            "n0": self.n0_or_nD if self.kind == "solitary" else None,
            "n_D": self.n0_or_nD if self.kind == "periodic" else None,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "pass": self.passed,
            "tolerances": self.tolerances,
            "cluster_sizes": self.cluster_sizes,
        }


def verify_closure(classification: Classification, n_L: int, n0_or_nD: int, kind: str,
                   *, tolerances: dict | None = None, cluster_sizes: dict | None = None,
                   diagnostics: dict | None = None) -> IndexReport:
    """lhs = N_r + 2 N_c + 2 N_i^-, rhs = n(L) - n0 (solitary) or n(L) - n(D) (periodic)."""
    if kind not in ("solitary", "periodic"):
        raise ValueError(f"kind must be 'solitary' or 'periodic', got {kind!r}")
    c = classification
    lhs = c.N_r + 2 * c.N_c + 2 * c.N_i_minus
    rhs = n_L - n0_or_nD
    passed = lhs == rhs and c.indeterminate == 0
    diag = dict(diagnostics or {})
    if c.indeterminate:
        diag["blocked_by_indeterminate"] = c.indeterminate
    sizes = {"zero": c.zero_cluster} if cluster_sizes is None else cluster_sizes
    return IndexReport(c, int(n_L), int(n0_or_nD), kind, lhs, rhs, bool(passed),
                       tolerances or {}, sizes, diag)


# -- pencil side ----------------------------------------------------------


@dataclass
class PencilCounts:
    N_p_minus: int = 0
    N_n_minus: int = 0
    N_p_plus: int = 0
    N_n_plus: int = 0
    N_p_zero: int = 0
    N_n_zero: int = 0
    N_c_plus: int = 0
    N_c_minus: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PencilCheck:
    counts: PencilCounts
    dim_A_minus: int
    dim_K_minus: int
    eq_A: bool
    eq_K: bool
    zero_cluster: int
    tolerances: dict

    @property
    def passed(self) -> bool:
        return self.eq_A and self.eq_K and self.counts.N_c_plus == self.counts.N_c_minus

    def to_dict(self) -> dict:
        return {"counts": self.counts.to_dict(), "dim_A_minus": self.dim_A_minus,
                "dim_K_minus": self.dim_K_minus, "eq_A": self.eq_A, "eq_K": self.eq_K,
                "zero_cluster": self.zero_cluster, "pass": self.passed,
                "tolerances": self.tolerances}


def _clusters(values: np.ndarray, rel: float, floor: float) -> list[np.ndarray]:
    order = np.argsort(values)
    groups, cur = [], [order[0]]
    for a, b in zip(order[:-1], order[1:]):
        if abs(values[b] - values[a]) <= rel * max(abs(values[a]), abs(values[b]), floor):
            cur.append(b)
        else:
            groups.append(np.array(cur))
            cur = [b]
    groups.append(np.array(cur))
    return groups


def classify_pencil(gammas: spectra.Spectrum, pencil: ops.PencilPair, *, scale: float = 1.0,
                    zero_radius: float | None = None, cluster_rel: float = 1e-6,
                    sign_rel: float = 1e-10, kernel_tol: float = 1e-8) -> PencilCheck:
    """Split gamma by sign and by the sign of the K-form on its eigenspace, then
    check both count equalities against the inertia of A_delta and K."""
    g = gammas.values
    W = gammas.vectors
    K = pencil.K.entries
    tau_g = 1e-8 * max(scale**2, 1.0)
    r0 = (zero_radius if zero_radius is not None else 1e-6 * scale) ** 2
    tau_k = sign_rel * np.linalg.norm(K, 2)
    counts = PencilCounts()
    real = np.abs(g.imag) <= np.maximum(tau_g, cluster_rel * np.abs(g))
    counts.N_c_plus = int(np.sum(~real & (g.imag > 0)))
    counts.N_c_minus = int(np.sum(~real & (g.imag < 0)))
    zero_n = 0
    idx_real = np.flatnonzero(real)
    if len(idx_real):
        gr = g.real[idx_real]
        for grp in _clusters(gr, cluster_rel, scale**2):
            members = idx_real[grp]
            gv = float(np.mean(g.real[members]))
            Q, _ = np.linalg.qr(W[:, members])
            G = Q.conj().T @ K @ Q
            ev = np.linalg.eigvalsh(0.5 * (G + G.conj().T))
            if np.any(np.abs(ev) <= tau_k):
                raise AmbiguousSign(f"K-form {ev[np.argmin(np.abs(ev))]:.3e} at gamma = {gv:.6g} "
                                    f"is within {tau_k:.3e} of zero")
            pos, neg = int(np.sum(ev > 0)), int(np.sum(ev < 0))
            if abs(gv) <= r0:
                counts.N_p_zero += pos
                counts.N_n_zero += neg
                zero_n += len(members)
            elif gv < 0:
                counts.N_p_minus += pos
                counts.N_n_minus += neg
            else:
                counts.N_p_plus += pos
                counts.N_n_plus += neg
    dim_A = spectra.negative_count(pencil.A_delta, kernel_tol)
    dim_K = spectra.negative_count(pencil.K, kernel_tol)
    c = counts
    eq_A = c.N_p_minus + c.N_n_zero + c.N_n_plus + c.N_c_plus == dim_A
    eq_K = c.N_n_minus + c.N_n_zero + c.N_n_plus + c.N_c_plus == dim_K
    return PencilCheck(counts, dim_A, dim_K, bool(eq_A), bool(eq_K), zero_n,
                       {"gamma_zero_radius": r0, "k_sign_tol": float(tau_k),
                        "cluster_rel": cluster_rel, "delta": pencil.delta})


@dataclass
class EquivalenceReport:
    n_gamma: int
    n_target: int
    max_mismatch: float
    tolerance: float
    passed: bool
    negative_gammas: list

    def to_dict(self) -> dict:
        return asdict(self)


def verify_equivalence(stability: spectra.Spectrum, gammas: spectra.Spectrum, *,
                       zero_radius: float, scale: float = 1.0, rel: float = 1e-6) -> EquivalenceReport:
    """Match the nonzero gammas against {-lambda^2} as multisets.

    Each lambda contributes one target, so a +-lambda pair yields the doubled
    gamma automatically. Mismatch is |gamma + lambda^2| / max(|gamma|, s^2).
    """
    lam = stability.values
    lam = lam[np.abs(lam) > zero_radius]
    targets = -(lam**2)
    g = gammas.values
    g = g[np.abs(g) > zero_radius**2]
    neg = sorted(float(x.real) for x in g if x.real < 0 and abs(x.imag) <= 1e-8 * max(abs(x), 1))
    if len(g) != len(targets):
        return EquivalenceReport(len(g), len(targets), math.inf, rel, False, neg)
    if len(g) == 0:
        return EquivalenceReport(0, 0, 0.0, rel, True, neg)
    denom = np.maximum(np.abs(g)[:, None], scale**2)
    cost = np.abs(g[:, None] - targets[None, :]) / denom
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    worst = float(np.max(cost[rows, cols]))
    return EquivalenceReport(len(g), len(targets), worst, rel, worst <= rel, neg)


@dataclass
class OrthogonalityReport:
    real_max: float
    imag_form_max: float
    imag_cross_max: float
    tau_real: float
    tau_imag: float
    n_real: int
    n_imag: int

    @property
    def passed(self) -> bool:
        return (self.real_max <= self.tau_real and self.imag_form_max <= self.tau_imag
                and self.imag_cross_max <= self.tau_real)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = self.passed
        return d


def orthogonality_checks(stability: spectra.Spectrum, L_op: ops.DiscreteOperator,
                         classification: Classification, *, real_rel: float = 1e-6,
                         imag_rel: float = 1e-8) -> OrthogonalityReport:
    """<L v, v> = 0 on real pairs; <L v, v> real and <L conj(v), v> = 0 on imaginary pairs.

    Forms use unit vectors and are compared with multiples of ||L||.
    """
    L = L_op.entries
    scale = L_op.norm()
    real_max = imag_max = cross_max = 0.0
    n_r = n_i = 0
    for pair, label in zip(stability.pairs, classification.labels):
        v = pair.vector / np.linalg.norm(pair.vector)
        Lv = L @ v
        if label in (REAL, REAL_MIRROR):
            real_max = max(real_max, abs(np.vdot(v, Lv)))
            n_r += 1
        elif label in (IMAG_NEG, IMAG_POS, IMAG_MIRROR, INDETERMINATE, CONTINUUM):
            imag_max = max(imag_max, abs(np.vdot(v, Lv).imag))
            cross_max = max(cross_max, abs(v @ Lv))
            n_i += 1
    return OrthogonalityReport(float(real_max), float(imag_max), float(cross_max),
                               real_rel * scale, imag_rel * scale, n_r, n_i)


@dataclass
class CheckItem:
    name: str
    passed: bool | None
    value: Any = None
    expected: Any = None
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AssumptionReport:
    items: list

    @property
    def passed(self) -> bool:
        return all(it.passed is not False for it in self.items)

    def item(self, name: str) -> CheckItem:
        for it in self.items:
            if it.name == name:
                return it
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"pass": self.passed, "items": [it.to_dict() for it in self.items]}


# -- pipeline ---------------------------------------------------------------


@dataclass
class Analysis:
    """Everything computed for one profile; lazily extended by the checks."""

    profile: WaveProfile
    tols: Tolerances
    L: ops.DiscreteOperator
    M: ops.DiscreteOperator
    f0: np.ndarray
    kernel: list
    L_plus: ops.DiscreteOperator
    n_L: int
    D: ops.MatrixD | None
    n0_or_nD: int
    h4: float
    stability: spectra.Spectrum
    resolved: ResolvedTolerances
    classification: Classification
    report: IndexReport


def analyze(profile: WaveProfile, tols: Tolerances = Tolerances()) -> Analysis:
    """Assemble, solve and classify; the closure report is in ``.report``."""
    grid = profile.grid
    solitary = profile.kind == "solitary"
    L = ops.assemble_L(profile)
    kernel = ops.kernel_basis(L, tols.kernel, expected=1)
    f0 = grid.derivative(profile.values, 1)
    M = ops.assemble_M(L, grid, exclude_mean=solitary)
    L_plus = ops.pseudo_inverse_L(L, kernel, tols.kernel)
    n_L = spectra.negative_count(L, tols.kernel)
    h4 = h4_value(L, profile.values, L_plus=L_plus)
    if solitary:
        D = None
        n_aux = compute_n0(L, profile.values, L_plus=L_plus)
    else:
        D = ops.matrix_D(L, profile.values, grid, kernel=kernel, L_plus=L_plus)
        n_aux = compute_nD(D)
    stab = spectra.stability_eigs(L, grid)
    rt = resolve_tolerances(stab, L, tols, localized_only=solitary)
    cls = classify(stab, L, rt)
    diagnostics = {
        "residual_max": float(np.max(stab.residuals)),
        "symmetry_defect": stab.symmetry_defect,
        "paired": cls.paired,
        "accounted": cls.accounted,
        "spectrum_size": len(stab),
        "h4_value": h4,
    }
    if D is not None:
        diagnostics["matrix_D"] = D.entries.tolist()
        diagnostics["F"] = D.F
    report = verify_closure(cls, n_L, n_aux, profile.kind, tolerances=rt.to_dict(),
                            cluster_sizes={"zero": cls.zero_cluster}, diagnostics=diagnostics)
    return Analysis(profile, tols, L, M, f0, kernel, L_plus, n_L, D, n_aux, h4, stab, rt, cls, report)


def pencil_for(an: Analysis, delta: float | None = None) -> tuple[ops.PencilPair, spectra.Spectrum, PencilCheck]:
    pen = ops.assemble_pencil(an.L, an.M, an.f0, delta, L_plus=an.L_plus)
    gam = spectra.pencil_eigs(pen)
    chk = classify_pencil(gam, pen, scale=an.resolved.intrinsic_scale,
                          zero_radius=an.resolved.zero_radius, kernel_tol=an.tols.kernel)
    return pen, gam, chk


def m_inverse_values(an: Analysis) -> dict:
    """<M^+ f0, f0> against <L^+ phi0, phi0> and against D11 - D12^2 / D22.

    The second value is exact on a periodic domain, where constants lie in the
    kernel of the derivative; for truncated solitary waves the two differ by a
    term that decays like 1 / (domain length).
    """
    kM = ops.kernel_basis(an.M, an.tols.kernel)
    M_plus = ops.pseudo_inverse(an.M, kM, an.tols.kernel)
    h = an.profile.grid.spacing
    m_val = float(h * an.f0 @ M_plus.entries @ an.f0)
    out = {"M_plus_f0_f0": m_val, "L_plus_phi_phi": an.h4, "M_kernel_dim": len(kM)}
    out["rel_diff"] = abs(m_val - an.h4) / max(abs(an.h4), 1e-300)
    D = an.D
    if D is None:
        D = ops.matrix_D(an.L, an.profile.values, an.profile.grid, kernel=an.kernel,
                         L_plus=an.L_plus)
    d = D.entries
    schur = float(d[0, 0] - d[0, 1] ** 2 / d[1, 1])
    out["schur"] = schur
    out["rel_diff_schur"] = abs(m_val - schur) / max(abs(schur), 1e-300)
    return out


def verify_assumptions(profile: WaveProfile, tols: Tolerances = Tolerances(),
                       delta: float | None = None) -> AssumptionReport:
    """Symbol check, kernels, n(M) = n(L), the M^+/L^+ identity and the negative
    counts of P M P, A_delta and K. Failures are reported, never raised."""
    items: list[CheckItem] = []
    solitary = profile.kind == "solitary"
    grid = profile.grid
    kmax = float(np.max(np.abs(grid.wavenumbers)))
    sym = ops.symbol_checks(profile.model, c=profile.speed, delta=1e-3, kmax=kmax)
    items.append(CheckItem("symbol_H1", sym.h1_pass if solitary else None,
                           sym.c0, "> 0", "" if solitary else "periodic case: informational only"))
    items.append(CheckItem("symbol_shift", sym.shift_pass if solitary else None, sym.d0, "> 0",
                           "" if solitary else "periodic case: informational only"))
    L = ops.assemble_L(profile)
    f0 = grid.derivative(profile.values, 1)
    try:
        kernel = ops.kernel_basis(L, tols.kernel, expected=1)
    except ops.KernelDimensionMismatch as exc:
        items.append(CheckItem("L_kernel_dim", False, exc.found, 1, str(exc)))
        return AssumptionReport(items)
    nf = np.linalg.norm(f0)
    align = abs(kernel[0] @ f0) / nf if nf > 0 else 0.0
    items.append(CheckItem("L_kernel_dim", True, 1, 1))
    items.append(CheckItem("L_kernel_is_phi_prime", bool(align > 1 - 1e-8), float(align), "> 1 - 1e-8"))
    if nf == 0:
        return AssumptionReport(items)
    try:
        an = analyze(profile, tols)
    except (ops.OperatorError, IndexError_, spectra.SpectrumError) as exc:
        items.append(CheckItem("pipeline", False, None, None, f"{type(exc).__name__}: {exc}"))
        return AssumptionReport(items)
    n_L = an.n_L
    items.append(CheckItem("n_L", None, n_L))
    kM = ops.kernel_basis(an.M, tols.kernel)
    expected_kM = 1 if solitary else 2
    items.append(CheckItem("M_kernel_dim", len(kM) == expected_kM, len(kM), expected_kM,
                           "zero wavenumber excluded" if solitary else ""))
    n_M = spectra.negative_count(an.M, tols.kernel)
    if solitary:
        items.append(CheckItem("n_M_equals_n_L", n_M == n_L, n_M, n_L))
    else:
        # <M u, u> = <L u', u'> and u' ranges over mean-zero functions, so on a
        # periodic domain n(M) = n(L) - 1 exactly when <L^+ 1, 1> < 0
        expected = n_L - int(an.D.F < 0)
        items.append(CheckItem("n_M_equals_n_L", None, n_M, n_L,
                               "periodic case: informational, see n_M_periodic"))
        items.append(CheckItem("n_M_periodic", n_M == expected, n_M, expected,
                               f"n(L) - [F < 0] with F = {an.D.F:.6g}"))
    mi = m_inverse_values(an)
    literal_ok = bool(mi["rel_diff"] <= tols.m_identity)
    items.append(CheckItem("M_plus_f0_equals_L_plus_phi", None if solitary else literal_ok,
                           mi["M_plus_f0_f0"], mi["L_plus_phi_phi"],
                           f"rel diff {mi['rel_diff']:.3e}"
                           + ("; truncated domain, informational" if solitary else "")))
    items.append(CheckItem("M_plus_f0_equals_schur_D", bool(mi["rel_diff_schur"] <= tols.m_identity),
                           mi["M_plus_f0_f0"], mi["schur"], f"rel diff {mi['rel_diff_schur']:.3e}"))
    pen0 = ops.assemble_pencil(an.L, an.M, f0, 0.0, L_plus=an.L_plus)
    n_pmp = spectra.negative_count(pen0.A_delta, tols.kernel)
    items.append(CheckItem("n_PMP", n_pmp == n_L - an.n0_or_nD, n_pmp, n_L - an.n0_or_nD))
    pen = ops.assemble_pencil(an.L, an.M, f0, delta, L_plus=an.L_plus)
    n_A = spectra.negative_count(pen.A_delta, tols.kernel)
    n_K = spectra.negative_count(pen.K, tols.kernel)
    items.append(CheckItem("n_A_delta", n_A == n_L, n_A, n_L, f"delta = {pen.delta:.3e}"))
    items.append(CheckItem("n_K", n_K == n_L, n_K, n_L))
    if solitary:
        items.append(CheckItem("H4", True, an.h4, "!= 0"))
    else:
        items.append(CheckItem("H3", bool(an.D.invertible), an.D.det, "!= 0"))
    return AssumptionReport(items)


def find_kstar(n: int = 512, bracket: tuple[float, float] = (0.85, 0.95),
               xtol: float = 1e-4) -> float:
    """Bisection root of F(k) = <L^+ 1, 1> along the cn family."""
    def F(k):
        return ops.matrix_D(ops.assemble_L(p := cn_wave(k, n)), p.values, p.grid).F

    lo, hi = bracket
    if not 0 < lo < hi < 1:
        raise ValueError("bracket must satisfy 0 < k_lo < k_hi < 1")
    f_lo, f_hi = F(lo), F(hi)
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoSignChange(f"F has the same sign at both ends: F({lo}) = {f_lo:.4g}, F({hi}) = {f_hi:.4g}")
    return float(scipy.optimize.bisect(F, lo, hi, xtol=xtol))
