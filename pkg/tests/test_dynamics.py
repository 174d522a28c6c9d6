import cmath
import math

import numpy as np
import pytest
import scipy.linalg
from scipy import integrate

from torus_ergodic.dynamics import (
    average_factor,
    averaging_defect,
    classical_flow_symbol,
    conjugate_operator,
    ergodic_average,
    evolve_symbol,
    finite_time_average,
    quantum_correction,
)
from torus_ergodic.errors import BoundViolation
from torus_ergodic.lattice import ModeBox, iter_modes
from torus_ergodic.operators import OperatorMatrix, quantize
from torus_ergodic.symbols import SymbolCoefficients, norm_r, random_symbol

from conftest import single_row

TIMES = [0.3, -0.3, math.pi, -math.pi, 2.7]


def delta(k, p, K=1, P=1):
    F = SymbolCoefficients.zeros(1, K, P)
    t = F.table.copy()
    t[F.freq_box.index(k), F.mom_box.index(p)] = 1
    return F.with_table(t)


def H_matrix(box):
    return np.diag(box.squared_norms / 2).astype(complex)


def test_evolve_examples(rng):
    F = random_symbol(rng, 2, 2, 3)
    assert evolve_symbol(F, 0.0).allclose(F, 0)
    out = evolve_symbol(delta(1, 1), math.pi)
    assert abs(out.coefficient(1, 1) - (-1j)) < 1e-15
    g = single_row(0, lambda p: 1 + p[:, 0], mom_radius=5, freq_radius=2)
    for t in TIMES:
        assert evolve_symbol(g, t).allclose(g, 0)


def test_classical_flow_examples(rng):
    F = random_symbol(rng, 1, 2, 3)
    assert classical_flow_symbol(F, 0.0).allclose(F, 0)
    zero_row = F.freq_box.index(0)
    assert np.array_equal(classical_flow_symbol(F, 1.3).table[zero_row], F.table[zero_row])
    out = classical_flow_symbol(delta(1, 1), math.pi)
    assert abs(out.coefficient(1, 1) - (-1)) < 1e-15
    # quantum -i versus classical -1
    assert abs(evolve_symbol(delta(1, 1), math.pi).coefficient(1, 1) - out.coefficient(1, 1)) > 1


def test_classical_flow_is_geodesic_shift(rng):
    # F(x + tp, p) sampled directly versus the coefficient phase
    F = random_symbol(rng, 1, 3, 2)
    t = 0.77
    G = classical_flow_symbol(F, t)
    for p in range(-2, 3):
        for x in (0.0, 1.1, 4.0):
            direct = sum(F.coefficient(k, p) * cmath.exp(1j * k * (x + t * p)) for k in range(-3, 4))
            shifted = sum(G.coefficient(k, p) * cmath.exp(1j * k * x) for k in range(-3, 4))
            assert abs(direct - shifted) < 1e-12


def test_quantum_correction(rng):
    F = random_symbol(rng, 2, 2, 3)
    zero_row = F.freq_box.index((0, 0))
    assert np.array_equal(quantum_correction(F, 2.0).table[zero_row], F.table[zero_row])
    for t in TIMES:
        both = quantum_correction(classical_flow_symbol(F, t), t)
        assert both.allclose(evolve_symbol(F, t), 1e-15 * max(1, np.max(np.abs(F.table))) * 10)
    out = quantum_correction(delta(2, 0, K=2), math.pi / 4)
    assert abs(out.coefficient(2, 0) - 1j) < 1e-15


def test_conjugate_operator_examples(rng):
    Q = quantize(random_symbol(rng, 2, 2, 3))
    assert conjugate_operator(Q, 0.0).allclose(Q, 0)
    D = OperatorMatrix.diagonal(ModeBox(2, 2), rng.standard_normal(25))
    for t in TIMES:
        assert conjugate_operator(D, t).allclose(D, 0)


def test_phase_identity_integer():
    # (|k|^2 - |m|^2)/2 = (k - m).m + |k - m|^2/2 for all integer k, m
    for k in iter_modes(2, 3):
        for m in iter_modes(2, 3):
            j = [a - b for a, b in zip(k, m)]
            lhs = sum(a * a for a in k) - sum(b * b for b in m)
            rhs = 2 * sum(a * b for a, b in zip(j, m)) + sum(a * a for a in j)
            assert lhs == rhs


@pytest.mark.parametrize("N", [1, 2])
def test_conjugation_identity(rng, N):
    for _ in range(10):
        F = random_symbol(rng, N, 2, 3)
        for t in TIMES:
            lhs = conjugate_operator(quantize(F), t)
            assert lhs.max_abs_difference(quantize(evolve_symbol(F, t))) <= 1e-12


def test_conjugation_against_matrix_exponentials(rng):
    F = random_symbol(rng, 1, 2, 3)
    Q = quantize(F)
    for t in TIMES:
        U_out = scipy.linalg.expm(1j * t * H_matrix(Q.out_box))
        U_in = scipy.linalg.expm(-1j * t * H_matrix(Q.in_box))
        dense = U_out @ Q.toarray() @ U_in
        np.testing.assert_allclose(quantize(evolve_symbol(F, t)).toarray(), dense, atol=1e-12)


def test_group_law_and_isometry(rng):
    F = random_symbol(rng, 2, 3, 3)
    for s in TIMES:
        for t in TIMES:
            assert evolve_symbol(evolve_symbol(F, s), t).allclose(evolve_symbol(F, s + t), 1e-12)
        for r in (3.0, 4.5):
            assert norm_r(evolve_symbol(F, s), r) == pytest.approx(norm_r(F, r), rel=1e-15)


def test_finite_time_average_examples():
    # k=1, p=0 is non-resonant with theta = 1/2; k=-2, p=1 is resonant
    F = delta(-2, 1, K=2) + delta(1, 0, K=2) + delta(1, 1, K=2)
    for T in (0.1, 1.0, 7.3, 1e6):
        assert finite_time_average(F, T).coefficient(-2, 1) == 1
    assert abs(finite_time_average(F, 4 * math.pi / 3).coefficient(1, 1)) < 1e-15
    f = finite_time_average(F, 2.0).coefficient(1, 0)
    assert abs(f - (cmath.exp(1j) - 1) / 1j) < 1e-15
    assert abs(f) == pytest.approx(2 * abs(math.sin(0.5)), abs=1e-15)
    assert abs(abs(f) - 0.9589) < 1e-4
    with pytest.raises(ValueError):
        finite_time_average(F, 0.0)


def test_average_factor_matches_integral():
    for d in (-7, -1, 1, 3, 12):
        for T in (0.5, 3.0, 40.0):
            re = integrate.quad(lambda t: math.cos(t * d / 2), 0, T, limit=200)[0] / T
            im = integrate.quad(lambda t: math.sin(t * d / 2), 0, T, limit=200)[0] / T
            assert abs(average_factor(np.array(d), T) - complex(re, im)) < 1e-10


def test_finite_time_average_quadrature_oracle(rng):
    # 5 input modes; average of e^{itH} Q e^{-itH} over [0, 8] by adaptive quadrature
    F = random_symbol(rng, 1, 2, 2)
    Q = quantize(F)
    A = Q.toarray()
    H_out, H_in = H_matrix(Q.out_box), H_matrix(Q.in_box)

    def conj(t):
        return scipy.linalg.expm(1j * t * H_out) @ A @ scipy.linalg.expm(-1j * t * H_in)

    T = 8.0
    avg, _ = integrate.quad_vec(conj, 0, T, epsabs=1e-12, epsrel=1e-12)
    np.testing.assert_allclose(quantize(finite_time_average(F, T)).toarray(), avg / T, atol=1e-6)


def brute_resonant(F):
    keep = set()
    for k in F.freq_box:
        for p in F.mom_box:
            if 2 * sum(a * b for a, b in zip(k, p)) + sum(a * a for a in k) == 0:
                keep.add((k, p))
    return keep


@pytest.mark.parametrize("N, K, P", [(1, 4, 6), (2, 2, 3)])
def test_ergodic_average_keeps_exactly_resonant(rng, N, K, P):
    F = random_symbol(rng, N, K, P)
    avg = ergodic_average(F)
    kept = {(k, p) for i, k in enumerate(F.freq_box) for j, p in enumerate(F.mom_box) if avg.table[i, j] != 0}
    assert kept == brute_resonant(F)
    assert np.array_equal(avg.table[avg.table != 0], F.table[avg.table != 0])
    assert ergodic_average(avg).allclose(avg, 0)
    for t in TIMES:
        assert ergodic_average(evolve_symbol(F, t)).allclose(avg, 0)


def test_ergodic_average_examples():
    g = lambda p: 1.0 + p[:, 0] ** 2
    G = single_row(0, g, mom_radius=5, freq_radius=3)
    assert ergodic_average(G).allclose(G, 0)
    assert not np.any(ergodic_average(single_row(3, g, mom_radius=6)).table)
    avg = ergodic_average(single_row(2, g, mom_radius=6))
    nz = np.argwhere(avg.table)
    assert len(nz) == 1
    assert avg.coefficient(2, -1) == 2


def test_diagonal_invariance(rng):
    for N in (1, 2):
        F = random_symbol(rng, N, 3, 3)
        Q, A = quantize(F), quantize(ergodic_average(F))
        assert np.array_equal(Q.diagonal_values(), A.diagonal_values())


def test_averaging_defect_resonant_only():
    G = single_row(2, 1.0, mom_radius=4)
    G = ergodic_average(G)
    for T in (1.0, 10.0, 1000.0):
        assert averaging_defect(G, T, 2.0).defect == 0


@pytest.mark.parametrize("r", [2.0, 3.0])
def test_averaging_defect_closed_form(r):
    F = delta(1, 0, K=1, P=0)
    for j in range(11):
        T = 2.0**j
        rep = averaging_defect(F, T, r)
        assert rep.defect == pytest.approx(4 * 2 ** (r / 2) * abs(math.sin(T / 4)) / T, rel=1e-12)
        assert rep.bound == pytest.approx(4 * 2 ** (r / 2) / T)
        assert rep.passed


def test_averaging_bound_random(rng):
    for N in (1, 2):
        for _ in range(10):
            F = random_symbol(rng, N, 3, 4, decay=N + 1)
            for T in list(np.linspace(1, 1000, 37)) + [2.0**j for j in range(11)]:
                rep = averaging_defect(F, T, N + 1.0)
                assert rep.defect <= rep.bound * (1 + 1e-12)


def test_averaging_defect_tends_to_zero(rng):
    F = random_symbol(rng, 1, 3, 5, decay=2)
    defects = [averaging_defect(F, 2.0**j, 2.0).defect for j in range(11)]
    assert defects[-1] < defects[0] / 50


def test_averaging_defect_raises_on_violation(monkeypatch):
    import torus_ergodic.dynamics as dyn
    monkeypatch.setattr(dyn, "average_factor", lambda d, T: np.ones(np.shape(d)) * 10)
    with pytest.raises(BoundViolation, match="4 \\|\\|F\\|\\|_r / T"):
        averaging_defect(delta(1, 0), 100.0, 2.0)
