"""Constructive low-discrepancy colorings, theta-fraction subsets and K-way partitions.

* :func:`signed_coloring` -- +-delta coloring by conditional expectations on the
  exponential-moment potential (deterministic guarantee
  ``delta * sqrt(2 L ln(2M))``, L the largest set size) or by random retry.
* :func:`theta_subset` -- a subset meeting every set in about theta of its
  elements, via Beck's triangle rounding driven by the signed coloring.
* :func:`k_partition` -- recursive bisection into K blocks.

Set systems store incidence column-wise as packed bits: row j of
``SetSystem.columns`` lists the sets containing element j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .errors import BudgetError, ParameterError, RetryCapError

COLORING_CONST = 11
SUBSET_CONST = 23
PARTITION_CONST = 308
DEFAULT_RETRY_CAP = 64
_UNPACK_BLOCK = 256


class SetSystem:
    """A family of M subsets of the ground set {0, ..., N-1}."""

    def __init__(self, n_points: int, n_sets: int, columns: np.ndarray):
        self.n_points = int(n_points)
        self.n_sets = int(n_sets)
        self.columns = np.ascontiguousarray(columns, dtype=np.uint8)
        if self.columns.shape != (self.n_points, (self.n_sets + 7) // 8):
            raise ParameterError("packed column matrix has the wrong shape")

    def __repr__(self) -> str:
        return f"SetSystem(N={self.n_points}, M={self.n_sets})"

    @classmethod
    def from_columns(cls, cols: np.ndarray) -> SetSystem:
        cols = np.asarray(cols, dtype=bool)
        n, m = cols.shape
        return cls(n, m, np.packbits(cols, axis=1) if m else np.zeros((n, 0), np.uint8))

    @classmethod
    def from_incidence(cls, inc: np.ndarray) -> SetSystem:
        """``inc[i, j]`` is True when set i contains element j."""
        return cls.from_columns(np.asarray(inc, dtype=bool).T)

    @classmethod
    def from_sets(cls, n_points: int, sets) -> SetSystem:
        sets = [np.asarray(sorted(set(int(x) for x in s)), dtype=np.int64) for s in sets]
        inc = np.zeros((len(sets), n_points), dtype=bool)
        for i, s in enumerate(sets):
            if s.size and (s[0] < 0 or s[-1] >= n_points):
                raise ParameterError(f"set {i} has an index outside [0, {n_points})")
            inc[i, s] = True
        return cls.from_incidence(inc)

    def column_block(self, elements: np.ndarray) -> np.ndarray:
        """Bool matrix (len(elements), M) of memberships."""
        if self.n_sets == 0:
            return np.zeros((len(elements), 0), dtype=bool)
        return np.unpackbits(self.columns[elements], axis=1, count=self.n_sets).view(bool)

    def column(self, j: int) -> np.ndarray:
        return self.column_block(np.array([j]))[0]

    def incidence(self) -> np.ndarray:
        return self.column_block(np.arange(self.n_points)).T

    def sets(self) -> list[np.ndarray]:
        inc = self.incidence()
        return [np.flatnonzero(row) for row in inc]

    def set_counts(self, elements) -> np.ndarray:
        """|Y & elements| for every set Y, as exact integers."""
        elements = np.asarray(elements, dtype=np.int64)
        out = np.zeros(self.n_sets, dtype=np.int64)
        step = _UNPACK_BLOCK * 4
        for s in range(0, elements.size, step):
            block = np.unpackbits(self.columns[elements[s:s + step]], axis=1, count=self.n_sets)
            out += np.add.reduce(block, axis=0, dtype=np.int32)
        return out

    def set_sums(self, elements, weights=None) -> np.ndarray:
        """sum_{j in elements} weights_j * [j in Y] for every set Y."""
        elements = np.asarray(elements, dtype=np.int64)
        if weights is None:
            return self.set_counts(elements).astype(np.float64)
        w = np.asarray(weights, dtype=np.float64)
        if np.all(np.abs(w) == 1):
            return (self.set_counts(elements[w > 0]) - self.set_counts(elements[w < 0])).astype(np.float64)
        out = np.zeros(self.n_sets)
        for s in range(0, elements.size, _UNPACK_BLOCK * 4):
            block = self.column_block(elements[s:s + _UNPACK_BLOCK * 4])
            out += w[s:s + block.shape[0]] @ block
        return out

    def set_sizes(self) -> np.ndarray:
        return self.set_counts(np.arange(self.n_points))

    def has_full_set(self) -> bool:
        return self.n_sets > 0 and bool(np.any(self.set_sizes() == self.n_points))

    def augmented(self) -> SetSystem:
        """The family with the ground set added (unless already present)."""
        if self.has_full_set():
            return self
        cols = np.concatenate([self.column_block(np.arange(self.n_points)),
                               np.ones((self.n_points, 1), dtype=bool)], axis=1)
        return SetSystem.from_columns(cols)

    def restrict(self, set_ids) -> SetSystem:
        """Subfamily with the given set indices."""
        cols = self.column_block(np.arange(self.n_points))[:, np.asarray(set_ids, dtype=np.int64)]
        return SetSystem.from_columns(cols)


def parse_sets(text: str, n_points: int | None = None) -> SetSystem:
    """Newline-delimited index lists, one set per line; '#' starts a comment."""
    sets = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].replace(",", " ").strip()
        if not line:
            continue
        sets.append([int(tok) for tok in line.split()])
    if n_points is None:
        n_points = 1 + max((max(s) for s in sets if s), default=-1)
    return SetSystem.from_sets(n_points, sets)


# -- signed colorings --------------------------------------------------------

def coloring_guarantee(delta: float, max_size: int, n_sets: int) -> float:
    """delta * sqrt(2 L ln(2M)); the potential-method bound for L = max set size."""
    if n_sets == 0 or max_size == 0:
        return 0.0
    return abs(delta) * math.sqrt(2 * max_size * math.log(2 * n_sets))


@dataclass
class Coloring:
    elements: np.ndarray
    signs: np.ndarray
    delta: float
    certified_bound: float
    guarantee: float
    method: str
    attempts: int = 1

    @property
    def h(self) -> np.ndarray:
        return self.delta * self.signs


def _grouped_sums(system: SetSystem, elements, groups, n_groups, weights) -> np.ndarray:
    out = np.zeros((n_groups, system.n_sets))
    for g in range(n_groups):
        sel = groups == g
        if np.any(sel):
            out[g] = system.set_sums(elements[sel], weights[sel])
    return out


def signed_coloring(system: SetSystem, delta: float = 1.0, method: str = "derandomized",
                    seed=None, *, elements=None, groups=None, n_groups: int = 1,
                    retry_cap: int = DEFAULT_RETRY_CAP) -> Coloring:
    """Color ``elements`` with +-delta so every set sum is small.

    With ``groups`` the family is split: element j only counts toward the copies
    of its sets in group ``groups[j]`` (used by the triangle rounding, where the
    elements sitting on different edges move in different directions).
    """
    elements = np.arange(system.n_points) if elements is None else np.asarray(elements, np.int64)
    groups = np.zeros(elements.size, np.int64) if groups is None else np.asarray(groups, np.int64)
    sizes = _grouped_sums(system, elements, groups, n_groups, np.ones(elements.size))
    max_size = int(round(sizes.max())) if sizes.size else 0
    guarantee = coloring_guarantee(delta, max_size, n_groups * system.n_sets)

    if method == "derandomized":
        signs = _derandomized_signs(system, elements, groups, n_groups, sizes.astype(np.int64), seed)
        attempts = 1
    elif method == "random_retry":
        rng = np.random.default_rng(seed)
        for attempts in range(1, retry_cap + 1):
            signs = rng.choice(np.array([-1, 1], dtype=np.int8), size=elements.size)
            sums = _grouped_sums(system, elements, groups, n_groups, signs.astype(float))
            if np.abs(sums).max(initial=0.0) * abs(delta) <= guarantee + 1e-9:
                break
        else:
            raise RetryCapError(f"no coloring within {guarantee:.3f} after {retry_cap} draws")
    else:
        raise ParameterError(f"unknown coloring method {method!r}")

    sums = _grouped_sums(system, elements, groups, n_groups, signs.astype(float))
    measured = abs(delta) * float(np.abs(sums).max(initial=0.0))
    return Coloring(elements, signs, delta, measured, guarantee, method, attempts)


def _derandomized_signs(system, elements, groups, n_groups, sizes, seed) -> np.ndarray:
    signs = np.ones(elements.size, dtype=np.int8)
    max_size = int(sizes.max(initial=0))
    if max_size == 0:
        return signs
    lam = math.sqrt(2 * math.log(2 * n_groups * system.n_sets) / max_size)
    cosh_pow = math.cosh(lam) ** np.arange(max_size + 1)
    sinh_lam = math.sinh(lam)
    totals = np.zeros((n_groups, system.n_sets))
    remaining = sizes.copy()
    order = np.arange(elements.size)
    if seed is not None:
        order = np.random.default_rng(seed).permutation(elements.size)
    for s in range(0, order.size, _UNPACK_BLOCK):
        pos = order[s:s + _UNPACK_BLOCK]
        block = system.column_block(elements[pos])
        for i, k in enumerate(pos):
            idx = np.flatnonzero(block[i])
            if idx.size == 0:
                continue
            g = groups[k]
            cur = totals[g, idx]
            # choosing sign x changes the potential by 2 x sinh(lam) sum w_Y sinh(lam S_Y)
            drift = cosh_pow[remaining[g, idx] - 1] @ np.sinh(lam * cur) * sinh_lam
            x = -1 if drift > 0 else 1
            signs[k] = x
            totals[g, idx] = cur + x
            remaining[g, idx] -= 1
    return signs


# -- theta-fraction subsets (triangle rounding) ------------------------------

_EDGE_GROUP = {frozenset((0, 1)): 0, frozenset((0, 2)): 1, frozenset((1, 2)): 2}


@dataclass
class BeckLevel:
    k: int
    midpoints_per_edge: tuple[int, int, int]
    coloring_guarantee: float
    coloring_measured: float
    vertices_ok: bool


@dataclass
class BeckState:
    """Triangle rounding bookkeeping; coordinates are barycentric, scaled by 2^depth."""

    theta: Fraction
    cos_alpha: Fraction
    depth: int
    triangles: list[tuple[tuple[int, int, int], ...]]
    start_vertex: tuple[int, int, int]
    start_value: complex
    levels: list[BeckLevel] = field(default_factory=list)
    final_vertices_ok: bool = False

    @property
    def vertices(self) -> tuple[complex, complex, complex]:
        c = float(self.cos_alpha)
        s = math.sqrt(1 - c * c)
        return 1 + 0j, complex(c, s), complex(c, -s)

    def value(self, coords) -> complex:
        v = self.vertices
        return sum(int(b) * z for b, z in zip(coords, v)) / 2**self.depth


@dataclass
class SubsetResult:
    elements: np.ndarray
    Z: np.ndarray
    theta: Fraction
    certified_dev: float
    chain_bound: float
    impl_constant: float | None
    n_sets: int
    beck: BeckState | None = None

    def certificate(self) -> dict:
        n = int(self.elements.size)
        ratio = 2 * self.n_sets / n if n else 0.0
        return {
            "theta": str(self.theta), "N": n, "M_aug": self.n_sets,
            "certified_dev": self.certified_dev, "chain_bound": self.chain_bound,
            "impl_constant": self.impl_constant,
            "depth": self.beck.depth if self.beck else None,
            "closed_form_envelope": {
                "ln": _envelope(SUBSET_CONST, n, ratio, math.log),
                "log2": _envelope(SUBSET_CONST, n, ratio, math.log2),
            },
        }


def _envelope(const: float, size: float, ratio: float, log) -> float | None:
    if ratio <= 1:
        return None
    return const * math.sqrt(size * log(ratio))


def _max_deviation(system: SetSystem, elements, Z, theta: Fraction) -> float:
    if system.n_sets == 0:
        return 0.0
    sizes = system.set_counts(elements)
    counts = system.set_counts(Z)
    num = np.abs(theta.denominator * counts - theta.numerator * sizes).max()
    return float(Fraction(int(num), theta.denominator))


def _inside(pt, tri) -> bool:
    (a0, a1, _), (b0, b1, _), (c0, c1, _) = tri
    det = (b0 - a0) * (c1 - a1) - (b1 - a1) * (c0 - a0)
    u = Fraction((pt[0] - a0) * (c1 - a1) - (pt[1] - a1) * (c0 - a0)) / det
    w = Fraction((b0 - a0) * (pt[1] - a1) - (b1 - a1) * (pt[0] - a0)) / det
    return u >= 0 and w >= 0 and u + w <= 1


def _mid(x, y):
    return tuple((a + b) // 2 for a, b in zip(x, y))


def _children(tri):
    a, b, c = tri
    ab, bc, ca = _mid(a, b), _mid(b, c), _mid(c, a)
    return [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]


def rounding_depth(n: int, n_sets: int) -> int:
    """Smallest t >= 1 with n 2^-t <= sqrt(n ln(max(2M/n, 2)))."""
    target = math.sqrt(n * math.log(max(2 * n_sets / n, 2.0)))
    t = 1
    while n / 2**t > target:
        t += 1
    return t


def _beck_round(system, elements, theta: Fraction, method, seed):
    n = elements.size
    cos_alpha = theta / (theta - 1)
    t = rounding_depth(n, system.n_sets)
    scale = 2**t
    target = (theta * scale, (1 - theta) * scale / 2, (1 - theta) * scale / 2)
    tri = ((scale, 0, 0), (0, scale, 0), (0, 0, scale))
    chain = [tri]
    for _ in range(t):
        tri = next(c for c in _children(tri) if _inside(target, c))
        chain.append(tri)
    state = BeckState(theta, cos_alpha, t, chain, (0, 0, 0), 0j)
    start = min(chain[-1], key=lambda b: abs(state.value(b)))
    state.start_vertex, state.start_value = start, state.value(start)

    coords = np.tile(np.array(start, dtype=np.int64), (n, 1))
    rng = np.random.default_rng(seed)
    bound_sum = 0.0
    for k in range(t, 0, -1):
        parent = chain[k - 1]
        ok_now = _all_vertices_of(coords, chain[k])
        at_vertex = np.zeros(n, dtype=bool)
        for vtx in parent:
            at_vertex |= np.all(coords == vtx, axis=1)
        groups = np.full(n, -1, dtype=np.int64)
        lo = np.zeros((n, 3), dtype=np.int64)
        hi = np.zeros((n, 3), dtype=np.int64)
        for x, y in ((parent[0], parent[1]), (parent[1], parent[2]), (parent[0], parent[2])):
            hit = np.all(coords == _mid(x, y), axis=1)
            direction = frozenset(i for i in range(3) if x[i] != y[i])
            groups[hit] = _EDGE_GROUP[direction]
            lo[hit], hi[hit] = x, y
        stray = ~at_vertex & (groups < 0)
        if np.any(stray):
            raise AssertionError(f"level {k}: {int(stray.sum())} points off the parent lattice")
        mids = np.flatnonzero(groups >= 0)
        counts = tuple(int(np.sum(groups == g)) for g in range(3))
        if mids.size:
            col = signed_coloring(system, 1.0, method, int(rng.integers(2**63)),
                                  elements=elements[mids], groups=groups[mids], n_groups=3)
            up = col.signs > 0
            coords[mids[up]] = lo[mids[up]]
            coords[mids[~up]] = hi[mids[~up]]
            g_bound, g_meas = col.guarantee, col.certified_bound
        else:
            g_bound = g_meas = 0.0
        bound_sum += 2 * g_bound / 2**k
        state.levels.append(BeckLevel(k, counts, g_bound, g_meas, ok_now))
    state.final_vertices_ok = _all_vertices_of(coords, chain[0])
    if not state.final_vertices_ok:
        raise AssertionError("rounding did not end on the outer triangle's vertices")
    Z = elements[coords[:, 0] == scale]
    start_term = n * abs(state.start_value.real) / (1 - float(cos_alpha))
    return Z, state, start_term + bound_sum


def _all_vertices_of(coords, tri) -> bool:
    ok = np.zeros(coords.shape[0], dtype=bool)
    for vtx in tri:
        ok |= np.all(coords == vtx, axis=1)
    return bool(ok.all())


def _theta_core(system, elements, theta: Fraction, method, seed) -> SubsetResult:
    n_sets = system.n_sets
    if theta > Fraction(1, 2):
        inner = _theta_core(system, elements, 1 - theta, method, seed)
        Z = np.setdiff1d(elements, inner.Z)
        dev = _max_deviation(system, elements, Z, theta)
        return SubsetResult(elements, Z, theta, dev, inner.chain_bound, inner.impl_constant,
                            n_sets, inner.beck)
    beck = None
    if theta == 0 or elements.size == 0:
        Z, chain_bound = elements[:0], 0.0
    elif theta == Fraction(1, 2):
        col = signed_coloring(system, 1.0, method, seed, elements=elements)
        Z, chain_bound = elements[col.signs > 0], col.guarantee / 2
    else:
        Z, beck, chain_bound = _beck_round(system, elements, theta, method, seed)
    dev = _max_deviation(system, elements, Z, theta)
    n = elements.size
    impl = None
    if n and 2 * n_sets > n:
        impl = chain_bound / math.sqrt(n * math.log(2 * n_sets / n))
    return SubsetResult(elements, np.sort(Z), theta, dev, chain_bound, impl, n_sets, beck)


def theta_subset(system: SetSystem, theta, seed=None, method: str = "derandomized") -> SubsetResult:
    """A subset Z with | |Y & Z| - theta |Y| | small for every Y (family augmented by X)."""
    theta = Fraction(theta)
    if not 0 <= theta <= 1:
        raise ParameterError("theta must lie in [0, 1]")
    aug = system.augmented()
    return _theta_core(aug, np.arange(system.n_points), theta, method, seed)


# -- K-way partitions --------------------------------------------------------

@dataclass
class Partition:
    K: int
    block: np.ndarray
    measured_imbalance: float
    certificate: dict = field(default_factory=dict)

    def blocks(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.block == i) for i in range(self.K)]


def imbalance_matrix(system: SetSystem, partition: Partition) -> np.ndarray:
    """K * | |Y & Z_i| - |Y|/K | as exact integers, shape (K, M)."""
    K = partition.K
    sizes = system.set_sizes()
    return np.stack([np.abs(K * system.set_counts(np.flatnonzero(partition.block == i)) - sizes)
                     for i in range(K)])


def measure_imbalance(system: SetSystem, partition: Partition) -> float:
    """max over sets Y and blocks i of | |Y & Z_i| - |Y|/K |, from exact counts."""
    if system.n_sets == 0:
        return 0.0
    return float(Fraction(int(imbalance_matrix(system, partition).max()), partition.K))


def partition_envelope(N: int, K: int, M: int, log=math.log) -> float | None:
    """308 sqrt((N/K) log(2KM/N)), or None outside the log's positive range."""
    ratio = 2 * K * M / N
    if ratio <= 1:
        return None
    return PARTITION_CONST * math.sqrt(N / K * log(ratio))


def k_partition(system: SetSystem, K: int, seed=None, method: str = "derandomized") -> Partition:
    """Split the ground set into K blocks meeting every set about evenly."""
    N = system.n_points
    if K < 2:
        raise ParameterError("K must be >= 2")
    if N < K:
        raise ParameterError(f"need N >= K (N={N}, K={K})")
    aug = system.augmented()
    block = np.full(N, -1, dtype=np.int64)
    nodes = []
    leaf_bounds = []
    seq = np.random.SeedSequence(seed)
    next_id = 0

    def split(W, k, ss, path):
        nonlocal next_id
        if k == 1:
            block[W] = next_id
            bound = 0.0
            for i, (mu, dev_bound) in enumerate(path):
                bound += dev_bound * math.prod(m for m, _ in path[i + 1:])
            leaf_bounds.append(bound)
            next_id += 1
            return
        theta = Fraction(k // 2, k)
        child_a, child_b, own = ss.spawn(3)
        res = _theta_core(aug, W, theta, method, int(own.generate_state(1)[0]))
        A = res.Z
        B = np.setdiff1d(W, A)
        nodes.append({"size": int(W.size), "K": k, "theta": str(theta),
                      "measured_dev": res.certified_dev, "chain_bound": res.chain_bound,
                      "depth": res.beck.depth if res.beck else None})
        split(A, k // 2, child_a, path + [(float(theta), res.chain_bound)])
        split(B, k - k // 2, child_b, path + [(float(1 - theta), res.chain_bound)])

    split(np.arange(N), K, seq, [])
    part = Partition(K, block, 0.0)
    part.measured_imbalance = measure_imbalance(aug, part)
    depth = max(1, math.ceil(math.log2(K)))
    assert K <= 2**depth < 2 * K
    part.certificate = {
        "N": N, "K": K, "M": system.n_sets, "M_aug": aug.n_sets, "method": method,
        "recursion_depth": depth,
        "measured_imbalance": part.measured_imbalance,
        "measured_imbalance_original_family": measure_imbalance(system, part),
        "certified_bound": max(leaf_bounds),
        "closed_form_envelope": {"ln": partition_envelope(N, K, system.n_sets),
                                "log2": partition_envelope(N, K, system.n_sets, math.log2)},
        "block_sizes": np.bincount(block, minlength=K).tolist(),
        "nodes": nodes,
    }
    return part


def brute_force_best_partition(system: SetSystem, K: int, max_points: int = 16,
                               max_assignments: int = 1 << 24) -> Partition:
    """Exhaustive minimum-imbalance K-partition (element 0 pinned to block 0)."""
    N = system.n_points
    if N > max_points or K ** max(N - 1, 0) > max_assignments:
        raise BudgetError(f"{K}^{N} partitions is beyond the brute-force budget")
    inc = system.incidence().astype(np.int64)
    sizes = inc.sum(axis=1)
    best_val, best = None, None
    chunk = 1 << 14
    all_rest = np.array(list(product(range(K), repeat=N - 1)), dtype=np.int64).reshape(-1, N - 1)
    for s in range(0, all_rest.shape[0], chunk):
        rest = all_rest[s:s + chunk]
        assign = np.concatenate([np.zeros((rest.shape[0], 1), np.int64), rest], axis=1)
        onehot = (assign[:, :, None] == np.arange(K)).astype(np.int64)
        counts = np.einsum("mn,cnk->cmk", inc, onehot)
        dev = np.abs(K * counts - sizes[None, :, None]).max(axis=(1, 2), initial=0)
        i = int(np.argmin(dev))
        if best_val is None or dev[i] < best_val:
            best_val, best = int(dev[i]), assign[i].copy()
    return Partition(K, best, float(Fraction(best_val, K)), {"exhaustive": True})
