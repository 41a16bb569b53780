import cmath
import math

import numpy as np
import pytest

from qnl.characters import (
    MultChar,
    dht_check,
    eta,
    gauss_direct,
    gauss_naive,
    gauss_sums,
    indicator_reconstruction,
    lift_char,
    lifted_value,
    psi,
    psi_vec,
)
from qnl.errors import DomainError, ParameterError
from qnl.ff import coset_map, make_field


@pytest.mark.parametrize("p,d,w", [(2, 3, 7), (3, 2, 8), (2, 4, 15), (5, 2, 24), (2, 4, 5), (7, 1, 6)])
def test_gauss_sums_match_naive(p, d, w):
    F = make_field(p, d)
    fast = gauss_sums(F, w)
    for j in range(w):
        if math.gcd(j, w) != 1 and j != 0:
            continue
        chi = MultChar(F, w, j) if j else MultChar(F, 1, 0)
        want = gauss_naive(F, chi)
        assert abs(fast[j] - want) < 1e-9


def test_f8_order7_values():
    F = make_field(2, 3)
    g = gauss_sums(F, 7)
    assert abs(g[0] + 1) < 1e-12
    for j in range(1, 7):
        assert abs(abs(g[j]) - math.sqrt(8)) < 1e-12
        assert abs(g[j].real + 1) < 1e-12
        assert abs(abs(g[j].imag) - math.sqrt(7)) < 1e-12


def test_modulus_of_nontrivial_sums():
    F = make_field(3, 4)
    g = gauss_sums(F, 80)
    assert np.allclose(np.abs(g[1:]), 9.0)


def test_psi_via_relative_trace_equals_absolute():
    F = make_field(2, 6)
    vec = psi_vec(F, F.elements())
    for y in range(F.size):
        assert abs(psi(F, y, 2) - vec[y]) < 1e-12
        assert abs(psi(F, y, 3) - vec[y]) < 1e-12


def test_eta_is_additive():
    Q = make_field(3, 2)
    for a in range(9):
        for b in range(9):
            assert abs(eta(Q, Q.add(a, b)) - eta(Q, a) * eta(Q, b)) < 1e-12


def test_multchar_validation_and_algebra():
    F = make_field(2, 4)
    with pytest.raises(ParameterError):
        MultChar(F, 7)
    with pytest.raises(ParameterError):
        MultChar(F, 15, 5)
    chi = MultChar(F, 15, 2)
    assert chi(0) == 0
    for y in range(1, 16):
        for z in range(1, 16):
            assert abs(chi(F.mul(y, z)) - chi(y) * chi(z)) < 1e-12
        assert abs(chi.conj()(y) - chi(y).conjugate()) < 1e-12
    assert chi.power(5).order == 3


@pytest.mark.parametrize("small,big", [((2, 3), (2, 9)), ((3, 2), (3, 6)), ((2, 2), (2, 6))])
def test_lift_matches_norm_composition(small, big):
    S, B = make_field(*small), make_field(*big)
    w = S.order
    chi = MultChar(S, w, 1)
    lifted = lift_char(chi, B)
    for y in np.random.default_rng(1).integers(1, B.size, 40):
        assert abs(lifted(int(y)) - lifted_value(chi, B, int(y))) < 1e-9


@pytest.mark.parametrize("small,big,w", [((2, 3), (2, 9), 7), ((3, 2), (3, 6), 8), ((5, 1), (5, 3), 4)])
def test_davenport_hasse(small, big, w):
    S, B = make_field(*small), make_field(*big)
    for j in range(1, w):
        if math.gcd(j, w) == 1:
            res = dht_check(MultChar(S, w, j), B)
            assert res.match, res


def test_indicator_reconstruction():
    F = make_field(2, 6)
    cm = coset_map(F, 7)
    for y in range(1, F.size):
        val = indicator_reconstruction(F, 7, y)
        assert abs(val - (1.0 if cm.class_of(y) == 0 else 0.0)) < 1e-9
    with pytest.raises(DomainError):
        indicator_reconstruction(F, 7, 0)


def test_gauss_direct_requires_matching_field():
    F, G = make_field(2, 3), make_field(2, 6)
    with pytest.raises(ParameterError):
        gauss_direct(G, MultChar(F, 7, 1))
    assert abs(gauss_direct(F, MultChar(F, 7, 3)) - gauss_naive(F, MultChar(F, 7, 3))) < 1e-9
    assert cmath.isclose(gauss_direct(F, MultChar(F, 1, 0)), -1)
