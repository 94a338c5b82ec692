"""Complete elliptic integrals and Jacobi elliptic functions via the AGM.

All routines take the modulus ``k`` (not the parameter ``m = k**2``).
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

_MAX_AGM_STEPS = 64


class EllipticTriple(NamedTuple):
    sn: np.ndarray | float
    cn: np.ndarray | float
    dn: np.ndarray | float


def _check_modulus(k: float, *, allow_one: bool = False) -> float:
    k = float(k)
    if not math.isfinite(k) or k < 0.0 or k > 1.0 or (k == 1.0 and not allow_one):
        bound = "[0, 1]" if allow_one else "[0, 1)"
        raise ValueError(f"elliptic modulus must lie in {bound}, got {k!r}")
    return k


def _agm_sequence(k: float):
    """Return the AGM ladders (a_n, c_n) started from (1, k', k)."""
    a, b, c = 1.0, math.sqrt((1.0 - k) * (1.0 + k)), k
    a_seq, c_seq = [a], [c]
    for _ in range(_MAX_AGM_STEPS):
        if abs(c) <= 2.0 * np.finfo(float).eps * a:
            break
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        a_seq.append(a)
        c_seq.append(c)
    return a_seq, c_seq


def complete_elliptic_K(k: float) -> float:
    """Quarter period K(k) = pi / (2 AGM(1, sqrt(1 - k^2)))."""
    k = _check_modulus(k)
    a_seq, _ = _agm_sequence(k)
    return math.pi / (2.0 * a_seq[-1])


def complete_elliptic_E(k: float) -> float:
    """Complete integral of the second kind.

    Uses E = K * (1 - sum_n 2^(n-1) c_n^2) along the AGM ladder.
    """
    k = _check_modulus(k, allow_one=True)
    if k == 1.0:
        return 1.0
    a_seq, c_seq = _agm_sequence(k)
    s = sum(2.0 ** (n - 1) * c * c for n, c in enumerate(c_seq))
    return math.pi / (2.0 * a_seq[-1]) * (1.0 - s)


def jacobi(x, k: float) -> EllipticTriple:
    """Jacobi sn, cn, dn at real ``x`` (scalar or array) by descending Landen/AGM.

    The amplitude is recovered by the backward recursion
    phi_{n-1} = (phi_n + asin(c_n sin(phi_n) / a_n)) / 2 from phi_N = 2^N a_N x.
    dn is formed as sqrt(1 - k^2 sn^2) where sn^2 <= 1/2 and as
    sqrt(k'^2 + k^2 cn^2) elsewhere; neither branch suffers cancellation.
    """
    k = _check_modulus(k)
    xs = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xs)):
        raise ValueError("jacobi requires finite arguments")
    a_seq, c_seq = _agm_sequence(k)
    n_steps = len(a_seq) - 1
    phi = (2.0 ** n_steps) * a_seq[-1] * xs
    for n in range(n_steps, 0, -1):
        phi = 0.5 * (phi + np.arcsin(c_seq[n] / a_seq[n] * np.sin(phi)))
    sn = np.sin(phi)
    cn = np.cos(phi)
    kp2 = (1.0 - k) * (1.0 + k)
    small = sn * sn <= 0.5
    dn = np.sqrt(np.where(small, 1.0 - k * k * sn * sn, kp2 + k * k * cn * cn))
    if np.ndim(x) == 0:
        return EllipticTriple(float(sn), float(cn), float(dn))
    return EllipticTriple(sn, cn, dn)
