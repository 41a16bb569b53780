import math
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qnl.discrepancy import (
    Partition,
    SetSystem,
    brute_force_best_partition,
    coloring_guarantee,
    k_partition,
    measure_imbalance,
    parse_sets,
    rounding_depth,
    signed_coloring,
    theta_subset,
)
from qnl.errors import BudgetError, ParameterError, RetryCapError


def random_system(seed, n, m, density=0.4):
    rng = np.random.default_rng(seed)
    return SetSystem.from_incidence(rng.random((m, n)) < density)


def slow_imbalance(sets, block, K):
    worst = Fraction(0)
    for Y in sets:
        for i in range(K):
            inter = sum(1 for y in Y if block[y] == i)
            worst = max(worst, abs(Fraction(inter) - Fraction(len(Y), K)))
    return float(worst)


def test_packing_roundtrip():
    sets = [[0, 3, 5], [], [1, 2, 3, 4, 5, 6, 7, 8, 9], [9]]
    s = SetSystem.from_sets(10, sets)
    assert [list(x) for x in s.sets()] == sets
    assert s.set_sizes().tolist() == [3, 0, 9, 1]
    assert not s.has_full_set()
    aug = s.augmented()
    assert aug.n_sets == 5 and aug.has_full_set() and aug.augmented() is aug
    with pytest.raises(ParameterError):
        SetSystem.from_sets(3, [[0, 3]])


def test_parse_sets():
    s = parse_sets("0 1 2\n# comment\n\n3,4\n1\n")
    assert s.n_points == 5 and s.n_sets == 3
    assert parse_sets("0 1\n", n_points=4).n_points == 4


def test_coloring_two_points():
    c = signed_coloring(SetSystem.from_sets(2, [[0, 1]]))
    assert sorted(c.signs.tolist()) == [-1, 1]
    assert c.certified_bound == 0


def test_coloring_empty_family():
    c = signed_coloring(SetSystem.from_sets(5, []))
    assert c.certified_bound == 0 and c.guarantee == 0


def test_coloring_n100_m200():
    s = random_system(1, 100, 200, 0.5)
    c = signed_coloring(s)
    assert c.certified_bound <= math.sqrt(2 * 100 * math.log(400))
    assert c.certified_bound <= c.guarantee
    sums = np.abs(s.incidence().astype(int) @ c.signs.astype(int))
    assert sums.max() == c.certified_bound


def test_random_retry_and_cap():
    s = random_system(2, 60, 80)
    c = signed_coloring(s, method="random_retry", seed=0)
    assert c.certified_bound <= c.guarantee
    with pytest.raises(RetryCapError):
        signed_coloring(s, method="random_retry", seed=0, retry_cap=0)
    with pytest.raises(ParameterError):
        signed_coloring(s, method="bogus")


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 120), st.integers(1, 150), st.integers(0, 2**32 - 1), st.floats(0.1, 5.0))
def test_derandomized_guarantee(n, m, seed, delta):
    s = random_system(seed, n, m, 0.5)
    c = signed_coloring(s, delta)
    assert c.certified_bound <= delta * math.sqrt(2 * n * math.log(2 * m)) + 1e-9
    assert c.guarantee <= coloring_guarantee(delta, n, m) + 1e-12


def test_theta_zero_and_one():
    s = random_system(3, 40, 30)
    assert theta_subset(s, 0).Z.size == 0
    r = theta_subset(s, 1)
    assert r.Z.tolist() == list(range(40)) and r.certified_dev == 0


def test_theta_half_full_set():
    s = SetSystem.from_sets(100, [range(100)])
    r = theta_subset(s, Fraction(1, 2))
    assert abs(r.Z.size - 50) <= 0.5 * math.sqrt(2 * 100 * math.log(2))


def test_theta_third_singletons_brute_force():
    s = SetSystem.from_sets(12, [[i] for i in range(12)])
    theta = Fraction(1, 3)
    r = theta_subset(s, theta)
    aug = s.augmented()
    best = min(
        max(abs(Fraction(len(set(Z) & set(Y))) - theta * len(Y)) for Y in aug.sets())
        for k in range(13) for Z in combinations(range(12), k)
    )
    assert best == Fraction(2, 3)
    assert best <= r.certified_dev <= r.chain_bound
    assert r.beck.final_vertices_ok and all(lv.vertices_ok for lv in r.beck.levels)


@pytest.mark.parametrize("theta", [Fraction(1, 3), Fraction(2, 5), Fraction(1, 7), Fraction(3, 10)])
def test_theta_subset_within_chain_bound(theta):
    s = random_system(4, 300, 400, 0.3)
    r = theta_subset(s, theta, seed=1)
    assert r.certified_dev <= r.chain_bound
    assert r.beck.cos_alpha == theta / (theta - 1)
    assert -1 < r.beck.cos_alpha < 0
    assert r.beck.depth == rounding_depth(300, 401)
    assert 300 / 2**r.beck.depth <= math.sqrt(300 * math.log(2 * 401 / 300))
    cert = r.certificate()
    assert cert["closed_form_envelope"]["ln"] < cert["closed_form_envelope"]["log2"]


def test_beck_chain_and_vertices():
    s = random_system(5, 200, 100, 0.5)
    r = theta_subset(s, Fraction(1, 3))
    beck = r.beck
    assert len(beck.triangles) == beck.depth + 1
    assert all(lv.vertices_ok for lv in beck.levels) and beck.final_vertices_ok
    # the target point 0 lies in every triangle of the chain
    for tri in beck.triangles:
        vals = [beck.value(v) for v in tri]
        assert min(z.real for z in vals) <= 1e-12
    assert beck.start_vertex in beck.triangles[-1]


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.fractions(Fraction(1, 20), Fraction(19, 20)))
def test_complement_identity(seed, theta):
    s = random_system(seed, 60, 50)
    a = theta_subset(s, theta, seed=seed)
    b = theta_subset(s, 1 - theta, seed=seed)
    if theta != Fraction(1, 2):
        comp = np.setdiff1d(np.arange(60), b.Z)
        assert np.array_equal(np.sort(a.Z), comp)
    assert a.certified_dev == b.certified_dev
    assert a.chain_bound == b.chain_bound


def test_measure_imbalance_matches_slow_count():
    for seed in range(6):
        s = random_system(seed, 30, 20)
        K = 2 + seed % 3
        block = np.random.default_rng(seed).integers(0, K, 30)
        part = Partition(K, block, 0.0)
        assert measure_imbalance(s, part) == slow_imbalance(s.sets(), block, K)


def test_measure_imbalance_trivial():
    s = SetSystem.from_sets(6, [range(6)])
    assert measure_imbalance(s, Partition(3, np.array([0, 0, 1, 1, 2, 2]), 0.0)) == 0
    assert measure_imbalance(s, Partition(1, np.zeros(6, dtype=int), 0.0)) == 0


def test_brute_force_examples():
    full = lambda n: SetSystem.from_sets(n, [range(n)])  # noqa: E731
    assert brute_force_best_partition(full(4), 2).measured_imbalance == 0
    assert brute_force_best_partition(full(5), 2).measured_imbalance == 0.5
    with pytest.raises(BudgetError):
        brute_force_best_partition(full(20), 2)


def test_k_partition_examples():
    p = k_partition(SetSystem.from_sets(1000, [range(1000)]), 2, seed=0)
    sizes = p.certificate["block_sizes"]
    assert all(abs(z - 500) <= p.certificate["certified_bound"] for z in sizes)
    p = k_partition(SetSystem.from_sets(9, [range(9)]), 3, seed=0)
    assert all(abs(z - 3) <= p.certificate["certified_bound"] for z in p.certificate["block_sizes"])
    with pytest.raises(ParameterError):
        k_partition(SetSystem.from_sets(3, []), 4)
    with pytest.raises(ParameterError):
        k_partition(SetSystem.from_sets(3, []), 1)


@pytest.mark.parametrize("K", [2, 3, 4, 5, 7])
def test_k_partition_certificate(K):
    s = random_system(K, 400, 500, 0.3)
    p = k_partition(s, K, seed=K)
    cert = p.certificate
    assert set(np.unique(p.block)) == set(range(K))
    assert K <= 2 ** cert["recursion_depth"] < 2 * K
    assert p.measured_imbalance <= cert["certified_bound"]
    assert p.measured_imbalance <= cert["closed_form_envelope"]["ln"]
    for node in cert["nodes"]:
        th = Fraction(node["theta"])
        assert Fraction(1, 3) <= th <= Fraction(1, 2)
    for size in cert["block_sizes"]:
        assert abs(size - 400 / K) <= cert["certified_bound"]


def test_k_partition_deterministic():
    s = random_system(9, 150, 120)
    a = k_partition(s, 3, seed=11)
    b = k_partition(s, 3, seed=11)
    assert np.array_equal(a.block, b.block)
    assert a.certificate == b.certificate


def test_k_partition_near_optimal_on_tiny_instances():
    for seed in range(10):
        s = random_system(seed, 12, 8, 0.5)
        for K in (2, 3):
            ours = k_partition(s, K, seed=seed).measured_imbalance
            best = brute_force_best_partition(s.augmented(), K).measured_imbalance
            assert best <= ours <= 8 * best
