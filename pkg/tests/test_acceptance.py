"""Acceptance criteria 1-11, each at its stated tolerance.

A summary with one PASS/FAIL line per criterion is printed at the end of the run.
"""

import json
import math

import numpy as np
import pytest

from kdvindex import cli, elliptic, spectra, waves
from kdvindex import indexcount as ic
from kdvindex import operators as ops

from conftest import (DN_KS, PERIODIC_CASES, analysis, fixture_analysis, fixture_profile,
                      pencil, record)


# 1 -------------------------------------------------------------------------------


@pytest.mark.parametrize("k", DN_KS)
def test_criterion_1_dn_stability(k):
    an = analysis("dn", k)
    s = an.stability.intrinsic_scale
    re_max = float(np.max(an.stability.values.real))
    rep = an.report
    ok = (an.n_L == 1 and an.n0_or_nD == 1 and re_max <= 1e-6 * s
          and rep.passed and (rep.lhs, rep.rhs) == (0, 0))
    record("1", f"dn k={k}", ok, f"n(L)={an.n_L} n(D)={an.n0_or_nD} max Re={re_max:.2e} "
                                  f"(bound {1e-6 * s:.2e}) closure {rep.lhs}={an.n_L}-{an.n0_or_nD}")
    assert ok


# 2 -------------------------------------------------------------------------------


def test_criterion_2_cn_08():
    an = analysis("cn", 0.8)
    s = an.stability.intrinsic_scale
    re_max = float(np.max(an.stability.values.real))
    rep = an.report
    ok = (an.n_L == 2 and an.n0_or_nD == 2 and re_max <= 1e-6 * s
          and rep.passed and (rep.lhs, rep.rhs) == (0, 0))
    record("2", "cn k=0.8", ok, f"n(L)={an.n_L} n(D)={an.n0_or_nD} max Re={re_max:.2e} "
                                f"closure {rep.lhs}={an.n_L}-{an.n0_or_nD}")
    assert ok


def test_criterion_2_cn_095():
    an = analysis("cn", 0.95)
    s = an.stability.intrinsic_scale
    v = an.stability.values
    unstable = v[v.real > 1e-6 * s]
    real_pair = len(unstable) == 1 and abs(unstable[0].imag) <= an.resolved.tau
    rep = an.report
    ok = (an.n0_or_nD == 1 and real_pair and an.classification.N_r == 1
          and rep.passed and (rep.lhs, rep.rhs) == (1, 1))
    record("2", "cn k=0.95", ok, f"n(D)={an.n0_or_nD} N_r={an.classification.N_r} "
                                 f"lambda={unstable[0].real if len(unstable) else float('nan'):.6f} "
                                 f"closure {rep.lhs}={an.n_L}-{an.n0_or_nD}")
    assert ok


# 3 -------------------------------------------------------------------------------


def test_criterion_3_kstar():
    k = ic.find_kstar(512, (0.85, 0.95), xtol=1e-4)
    ok = 0.899 <= k <= 0.919
    record("3", "bisection n=512", ok, f"k* = {k:.6f}")
    assert ok


# 4 -------------------------------------------------------------------------------


def test_criterion_4_lame():
    sq = math.sqrt(13.0)
    cn = spectra.sym_eigs(ops.assemble_L(waves.cn_wave(0.5, 256))).values[:5]
    dn = spectra.sym_eigs(analysis("dn", 0.5).L).values[:3]
    cn_exp = np.array([0.5 - sq / 2, -0.75, 0.0, 2.25, 0.5 + sq / 2])
    dn_exp = np.array([-1.75 - sq / 2, 0.0, -1.75 + sq / 2])
    e_cn, e_dn = np.max(np.abs(cn - cn_exp)), np.max(np.abs(dn - dn_exp))
    ok1 = record("4", "cn k=0.5 five values", e_cn <= 1e-8, f"max error {e_cn:.2e}")
    ok2 = record("4", "dn k=0.5 lowest three", e_dn <= 1e-8, f"max error {e_dn:.2e}")
    assert ok1 and ok2


# 5 -------------------------------------------------------------------------------


@pytest.mark.parametrize("family, k", PERIODIC_CASES)
def test_criterion_5_equivalence(family, k):
    an = analysis(family, k)
    _, gam, _ = pencil(family, k)
    rep = ic.verify_equivalence(an.stability, gam, zero_radius=an.resolved.zero_radius,
                                scale=an.resolved.intrinsic_scale, rel=1e-6)
    record("5", f"{family} k={k}", rep.passed,
           f"{rep.n_gamma} gammas vs {rep.n_target} targets, max mismatch {rep.max_mismatch:.2e}")
    assert rep.passed


# 6 -------------------------------------------------------------------------------


@pytest.mark.parametrize("family, k", PERIODIC_CASES)
def test_criterion_6_pencil_counts(family, k):
    an = analysis(family, k)
    _, _, chk = pencil(family, k)
    _, _, chk2 = pencil(family, k, halve=True)
    c = chk.counts
    ok = (chk.passed and chk2.passed
          and chk.dim_K_minus == an.n_L and chk.dim_A_minus == an.n_L
          and c.to_dict() == chk2.counts.to_dict()
          and c.N_n_minus == an.classification.N_r
          and c.N_n_plus == 2 * an.classification.N_i_minus
          and c.N_c_plus == 2 * an.classification.N_c)
    record("6", f"{family} k={k}", ok,
           f"A: {c.N_p_minus}+{c.N_n_zero}+{c.N_n_plus}+{c.N_c_plus}={chk.dim_A_minus}, "
           f"K: {c.N_n_minus}+{c.N_n_zero}+{c.N_n_plus}+{c.N_c_plus}={chk.dim_K_minus}, "
           f"stable under delta/2: {c.to_dict() == chk2.counts.to_dict()}")
    assert ok


# 7 -------------------------------------------------------------------------------


@pytest.mark.parametrize("family, k", PERIODIC_CASES)
def test_criterion_7_M_identity(family, k):
    an = analysis(family, k)
    mi = ic.m_inverse_values(an)
    ok = mi["rel_diff"] <= 1e-8
    record("7", f"{family} k={k} <M+f0,f0> = <L+phi,phi>", ok, f"rel diff {mi['rel_diff']:.2e}")
    assert ok


@pytest.mark.parametrize("family, k", PERIODIC_CASES)
def test_criterion_7_negative_counts(family, k):
    an = analysis(family, k)
    n_M = spectra.negative_count(an.M)
    ok = n_M == an.n_L
    record("7", f"{family} k={k} n(M) = n(L)", ok,
           f"n(M)={n_M} n(L)={an.n_L} F={an.D.F:.4f}"
           + ("" if ok else "; on a periodic domain n(M) = n(L) - [F < 0]"))
    assert ok


# 8 -------------------------------------------------------------------------------


def test_criterion_8_dn_closed_form():
    k = 0.5
    K, E = elliptic.complete_elliptic_K(k), elliptic.complete_elliptic_E(k)
    closed = -(K - E) / k**2
    h4 = analysis("dn", k).h4
    rel = abs(h4 - closed) / abs(closed)
    ok = rel <= 1e-4
    record("8", "dn k=0.5 against -(K-E)/k^2", ok,
           f"<L+phi,phi> = {h4:.8f}, closed form {closed:.8f}, rel diff {rel:.2e}"
           + ("" if ok else " (closed form varies the period along the family)"))
    assert ok


def test_criterion_8_dn_fixed_period_slope():
    k = 0.5
    an = analysis("dn", k)
    slope = waves.momentum_slope(waves.dn_family(256, an.profile.period), k)
    rel = abs(an.h4 + 0.5 * slope) / abs(an.h4)
    ok = rel <= 1e-4
    record("8", "dn k=0.5 against -1/2 d||phi||^2/dc at fixed period", ok,
           f"{an.h4:.8f} vs {-0.5 * slope:.8f}, rel diff {rel:.2e}")
    assert ok


def test_criterion_8_fifth_order():
    an = fixture_analysis()
    p = an.profile
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        slope = waves.momentum_slope(waves.fifth_order_family(p.model, p.grid, p), p.speed)
    rel = abs(an.h4 + 0.5 * slope) / abs(an.h4)
    ok = np.sign(an.h4) == np.sign(-slope) and rel <= 1e-3
    record("8", "fifth-order sech^4 fixture", ok,
           f"{an.h4:.8f} vs {-0.5 * slope:.8f}, rel diff {rel:.2e}")
    assert ok


# 9 -------------------------------------------------------------------------------


def test_criterion_9_solitary_pipeline():
    p = fixture_profile()
    an = fixture_analysis()
    res = waves.stationary_residual(p)
    c = an.classification
    rep = an.report
    ok = (res < 1e-10 and rep.passed and rep.kind == "solitary" and an.n0_or_nD == 1
          and c.continuum > 0 and c.accounted == len(an.stability) and c.zero_cluster >= 2)
    record("9", "sech^4 fixture", ok,
           f"residual {res:.1e}, closure {rep.lhs}={an.n_L}-{an.n0_or_nD}, "
           f"{c.continuum} continuum pairs excluded, zero cluster {c.zero_cluster}")
    assert ok


# 10 ------------------------------------------------------------------------------


def test_criterion_10_elliptic():
    rng = np.random.default_rng(10)
    x = rng.uniform(-100, 100, 10_000)
    k = rng.uniform(0, 1 - 1e-9, 10_000)
    worst = 0.0
    for xi, ki in zip(x, k):
        t = elliptic.jacobi(xi, ki)
        worst = max(worst, abs(t.sn**2 + t.cn**2 - 1), abs(t.dn**2 + ki**2 * t.sn**2 - 1))
    k0 = abs(elliptic.complete_elliptic_K(0.0) - math.pi / 2)
    ok = worst <= 1e-12 and k0 <= 1e-14
    record("10", "Jacobi identities and K(0)", ok,
           f"max identity defect {worst:.1e} over 10^4 samples, |K(0) - pi/2| = {k0:.1e}")
    assert ok


# 11 ------------------------------------------------------------------------------


def test_criterion_11_determinism(tmp_path):
    cfg = tmp_path / "run.json"
    out = tmp_path / "report.json"
    cfg.write_text(json.dumps({"family": "cn", "k": 0.95, "n": 256, "out": str(out)}))
    assert cli.main(["index", "--config", str(cfg)]) == 0
    first = out.read_bytes()
    assert cli.main(["index", "--config", str(cfg)]) == 0
    second = out.read_bytes()
    ok = first == second
    record("11", "index twice, same config", ok, f"{len(first)} bytes, identical: {ok}")
    assert ok
