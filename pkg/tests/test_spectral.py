import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qnl.errors import BudgetError, DomainError, ParameterError
from qnl.ff import Embedding, make_field
from qnl.spectral import (
    SpectralCtx,
    additive_dft,
    exact_mu,
    fT_term_max,
    format_sqrt,
    fourier_full,
    fourier_naive,
    fourier_restricted,
    mu_bruteforce,
    mu_from_nonlinearity,
    mu_spectral,
    nonlinearity_bruteforce,
    prime_power,
    rho_exhaustive,
    snap_nonlinearity,
)
from qnl.tableio import FunctionTable

SMALL = [(2, 1, 4), (2, 1, 5), (2, 2, 3), (3, 1, 3), (2, 3, 2), (3, 2, 2), (5, 1, 2), (2, 1, 8)]


@lru_cache(maxsize=None)
def literal(p, t, n):
    """Trace tables computed from Frobenius powers with scalar arithmetic only."""
    B, S = make_field(p, t * n), make_field(p, t)
    q = p**t

    def frob_sum(F, x, base, k):
        acc = 0
        for i in range(k):
            acc = F.add(acc, F.pow(x, base**i))
        return acc

    mul = np.array([[B.mul(a, y) for y in range(B.size)] for a in range(B.size)])
    abs_tr_big = np.array([frob_sum(B, y, p, t * n) for y in range(B.size)])
    emb = Embedding(S, B)
    rel_tr = np.array([emb.to_small(frob_sum(B, y, q, n)) for y in range(B.size)])
    abs_tr_small = np.array([frob_sum(S, x, p, t) for x in range(q)])
    small_mul = np.array([[S.mul(a, b) for b in range(q)] for a in range(q)])
    return B, S, mul, abs_tr_big, rel_tr, abs_tr_small, small_mul


def random_table(p, t, n, seed):
    B = make_field(p, t * n)
    vals = np.random.default_rng(seed).integers(0, p**t, B.size)
    return FunctionTable(p, t, n, B.modulus, vals)


def literal_transform(table, lam):
    B, S, mul, atb, _, ats, smul = literal(table.p, table.t, table.n)
    eta = ats[smul[lam][table.values]]
    expo = (eta[None, :] - atb[mul]) % table.p
    return np.exp(2j * np.pi * expo / table.p).sum(axis=1) / math.sqrt(table.size)


def literal_agreement(table, mask=None):
    """#{y in mask : g(y) = Tr(a y) + b} for every (a, b)."""
    B, S, mul, _, rel, _, _ = literal(table.p, table.t, table.n)
    q = table.q
    neg = np.array([S.mul(S.p - 1, y) for y in range(q)])  # -1 lives in the prime field
    diff = np.array([[S.add(x, neg[y]) for y in range(q)] for x in range(q)])
    labels = rel[mul]  # Tr(a y)
    b = diff[table.values[None, :], labels]  # g(y) - Tr(a y)
    if mask is not None:
        b = np.where(mask[None, :], b, q)
    counts = np.zeros((table.size, q + 1), dtype=np.int64)
    for a in range(table.size):
        counts[a] = np.bincount(b[a], minlength=q + 1)
    return counts[:, :q]


@pytest.mark.parametrize("p,t,n", SMALL)
def test_fast_transform_matches_literal_sum(p, t, n):
    table = random_table(p, t, n, p + 10 * t + 100 * n)
    for lam in range(1, p**t):
        assert np.allclose(fourier_full(table, lam), literal_transform(table, lam), atol=1e-9)


def test_fourier_naive_spot_check():
    table = random_table(2, 2, 3, 7)
    full = fourier_full(table, 3)
    for a in (0, 5, 63):
        assert abs(fourier_naive(table, a, 3) - full[a]) < 1e-9


@pytest.mark.parametrize("p,D", [(2, 6), (3, 4), (5, 3), (7, 2), (2, 1)])
def test_additive_dft_matches_numpy(p, D):
    u = np.random.default_rng(D).standard_normal(p**D) + 1j
    want = np.fft.fftn(u.reshape((p,) * D)).ravel()
    assert np.allclose(additive_dft(u, p, D), want)


def test_additive_dft_rejects_bad_length():
    with pytest.raises(ParameterError):
        additive_dft(np.zeros(5), 2, 3)


@pytest.mark.parametrize("p,t,n", SMALL)
def test_parseval(p, t, n):
    table = random_table(p, t, n, 3)
    for lam in range(1, p**t):
        assert math.isclose(float(np.sum(np.abs(fourier_full(table, lam)) ** 2)), table.size)


def test_zero_function_is_a_delta():
    B = make_field(3, 3)
    table = FunctionTable(3, 1, 3, B.modulus, np.zeros(27, dtype=int))
    F = fourier_full(table, 2)
    assert abs(F[0] - math.sqrt(27)) < 1e-9
    assert np.allclose(F[1:], 0)


@pytest.mark.parametrize("p,t,n", [(2, 1, 4), (2, 2, 3), (3, 1, 3)])
def test_affine_functions_attain_the_maximum(p, t, n):
    B, S, mul, _, rel, _, _ = literal(p, t, n)
    q = p**t
    a, b = 5, 1
    vals = np.array([S.add(int(rel[mul[a, y]]), b) for y in range(B.size)])
    table = FunctionTable(p, t, n, B.modulus, vals)
    rep = mu_spectral(table)
    assert rep.nonlinearity == 0
    assert math.isclose(rep.mu, q ** (n / 2) * (q - 1))
    assert (rep.witness_a, rep.witness_b) == (a, b)


@pytest.mark.parametrize("p,t,n", [(2, 1, 6), (3, 1, 3), (2, 2, 3)])
def test_restricted_transform_is_additive(p, t, n):
    table = random_table(p, t, n, 11)
    mask = np.random.default_rng(1).random(table.size) < 0.3
    for lam in range(1, table.q):
        full = fourier_full(table, lam)
        parts = fourier_restricted(table, mask, lam) + fourier_restricted(table, ~mask, lam)
        assert np.abs(full - parts).max() < 1e-9
    assert np.allclose(fourier_restricted(table, np.zeros(table.size, bool), 1), 0)
    assert np.allclose(fourier_restricted(table, np.ones(table.size, bool), 1), fourier_full(table, 1))
    with pytest.raises(ParameterError):
        fourier_restricted(table, mask[:-1], 1)
    with pytest.raises(DomainError):
        fourier_full(table, 0)


@pytest.mark.parametrize("p,t,n", SMALL)
def test_mu_matches_literal_counting(p, t, n):
    table = random_table(p, t, n, 5)
    q = table.q
    best = int(literal_agreement(table).max())
    want = (q * best - table.size) / q ** (n / 2)
    rep = mu_spectral(table)
    assert math.isclose(rep.mu, want, abs_tol=1e-9)
    assert rep.nonlinearity == table.size - best
    assert abs(rep.rounding_delta) < 1e-6 and rep.max_imag < 1e-9
    nl, a, b = nonlinearity_bruteforce(table)
    assert nl == rep.nonlinearity
    assert literal_agreement(table)[a, b] == best


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([(2, 1, 3), (2, 1, 5), (2, 2, 2), (3, 1, 2), (5, 1, 2), (2, 2, 3)]),
       st.integers(0, 2**32 - 1))
def test_spectral_equals_bruteforce(shape, seed):
    table = random_table(*shape, seed)
    assert math.isclose(mu_spectral(table).mu, mu_bruteforce(table), abs_tol=1e-9)


def test_fT_term_matches_counting():
    table = random_table(2, 2, 3, 9)
    mask = np.random.default_rng(2).random(table.size) < 0.5
    agree = literal_agreement(table, mask)
    want = np.abs(table.q * agree - mask.sum()).max() / table.q ** (table.n / 2)
    assert math.isclose(fT_term_max(table, mask), want, abs_tol=1e-9)


@pytest.mark.parametrize("q,n,rho", [(2, 1, 0), (2, 2, 1), (2, 3, 2), (2, 4, 6), (3, 1, 1), (3, 2, 5)])
def test_rho_values(q, n, rho):
    r = rho_exhaustive(q, n)
    assert r.rho == rho
    assert math.isclose(r.mu, mu_from_nonlinearity(q, n, rho))


def test_rho_strings_and_budget():
    assert rho_exhaustive(2, 3).mu_str == "sqrt(2)"
    assert rho_exhaustive(2, 4).mu_str == "1"
    assert rho_exhaustive(3, 1).mu_str == "sqrt(3)"
    with pytest.raises(BudgetError):
        rho_exhaustive(2, 5)


def test_rho_against_bruteforce_over_all_functions():
    B = make_field(2, 3)
    worst = max(nonlinearity_bruteforce(FunctionTable(2, 1, 3, B.modulus,
                                                      [(c >> i) & 1 for i in range(8)]))[0]
                for c in range(256))
    assert worst == rho_exhaustive(2, 3).rho


def test_exact_mu_and_formatting():
    assert exact_mu(2, 15, 16166) == (Fraction(109, 64), 2)
    assert exact_mu(2, 4, 6) == (Fraction(1), 1)
    assert format_sqrt(Fraction(3, 2), 5) == "3/2*sqrt(5)"
    assert format_sqrt(Fraction(7), 1) == "7"
    for q, n, nl in [(2, 15, 16166), (3, 3, 12), (4, 3, 30)]:
        c, r = exact_mu(q, n, nl)
        assert math.isclose(float(c) * math.sqrt(r), mu_from_nonlinearity(q, n, nl))
        assert snap_nonlinearity(q, n, mu_from_nonlinearity(q, n, nl)) == nl


def test_prime_power_and_budget():
    assert prime_power(9) == (3, 2)
    with pytest.raises(ParameterError):
        prime_power(12)
    with pytest.raises(BudgetError):
        SpectralCtx(2, 1, 23, make_field(2, 23).modulus)


def test_thread_count_does_not_change_results(monkeypatch):
    table = random_table(3, 2, 2, 4)
    base = mu_spectral(table)
    monkeypatch.setenv("QNL_THREADS", "4")
    assert mu_spectral(table) == base
