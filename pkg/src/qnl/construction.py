"""The coset construction f = f_T on T, f_S on S.

T is a union of cosets of the index-v subgroup H of F_{q^n}^*, closed under
multiplication by F_q^*; f_T is constant on each F_q^*-orbit of cosets and
balanced over F_q.  S is the rest of the field (including 0), and f_S is a
q-way partition of S that is balanced on every slice
Y_{a,z} = {y in S : Tr(a y) = z}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .discrepancy import SetSystem, k_partition
from .errors import BudgetError, DegenerateParameterError, DomainError, ParameterError, RetryCapError
from .ff import CosetMap, FieldCtx, coset_map, make_field
from .numth import find_odd_degree, ord_mod, semiprimitive_check
from .spectral import SpectralCtx, fS_envelope, spectral_context
from .tableio import FunctionTable

PARTITION_MAX_DEGREE = 16
PARTITION_MAX_BITS = 1 << 31
DEFAULT_RETRY_CAP = 64


@dataclass(frozen=True)
class ConstructionParams:
    p: int
    t: int
    r: int
    e: int
    s: int
    epsilon_target: float | None = None

    def __post_init__(self):
        if not semiprimitive_check(self.p, self.r, self.e).passed:
            raise ParameterError(f"(p={self.p}, r={self.r}, e={self.e}) is not semiprimitive")
        if self.t < 1 or self.s < 1 or self.s % 2 == 0:
            raise ParameterError("need t >= 1 and odd s >= 1")
        if self.n % 2 == 0:
            raise ParameterError(f"n={self.n} must be odd")
        if (self.q**self.n - 1) % self.v:
            raise ParameterError(f"v={self.v} does not divide q^n - 1")

    @property
    def q(self) -> int:
        return self.p**self.t

    @property
    def v(self) -> int:
        return self.r**self.e

    @property
    def m(self) -> int:
        return ord_mod(self.p, self.v)

    @property
    def n(self) -> int:
        return self.s * self.m

    @property
    def t_blocks(self) -> int:
        """How many q(q-1)-coset blocks fit in v; 0 means T is empty."""
        return self.v // (self.q * (self.q - 1))

    @classmethod
    def from_epsilon(cls, p: int, t: int, r: int, e: int, epsilon: float) -> ConstructionParams:
        """Choose the smallest odd s whose Gauss sums are within epsilon of -q^(n/2)."""
        od = find_odd_degree(p, t, r, e, epsilon)
        return cls(p, t, r, e, od.s, epsilon)

    def as_dict(self) -> dict:
        return {"p": self.p, "t": self.t, "r": self.r, "e": self.e, "s": self.s,
                "q": self.q, "v": self.v, "m": self.m, "n": self.n,
                "epsilon_target": self.epsilon_target}


@dataclass
class CosetPlan:
    q: int
    v: int
    orbit_size: int
    orbits: list[tuple[int, ...]]
    T_cosets: np.ndarray
    S_cosets: np.ndarray
    coset_value: np.ndarray
    orbit_value: dict[int, int] = field(default_factory=dict)

    def check(self) -> None:
        q, v = self.q, self.v
        t_set = set(self.T_cosets.tolist())
        for orb in self.orbits:
            inside = [c in t_set for c in orb]
            assert all(inside) or not any(inside), f"orbit {orb} split by T"
        assert len(t_set) == q * (q - 1) * (v // (q * (q - 1)))
        hist = np.bincount(self.coset_value[self.T_cosets], minlength=q)
        assert np.all(hist == len(t_set) // q), hist
        assert 1 <= self.S_cosets.size <= q * q - q - 1
        assert np.all(self.coset_value[self.S_cosets] == -1)

    def as_dict(self) -> dict:
        return {"orbit_size": self.orbit_size, "T_cosets": self.T_cosets.tolist(),
                "S_cosets": self.S_cosets.tolist(),
                "coset_value": self.coset_value.tolist()}


def plan_T(ctx: FieldCtx, cmap: CosetMap, rng_seed=None) -> CosetPlan:
    """Pick the orbits making up T and give each value of F_q equally many orbits."""
    q, v, o = cmap.q, cmap.v, cmap.orbit_size
    if (q - 1) % o:
        raise AssertionError(f"orbit size {o} does not divide q - 1 = {q - 1}")
    blocks = v // (q * (q - 1))
    if blocks == 0:
        raise DegenerateParameterError(f"q(q-1) = {q * (q - 1)} exceeds v = {v}; T would be empty")
    seen, orbits = set(), []
    for c in range(v):
        if c not in seen:
            orb = tuple(cmap.orbit(c))
            seen.update(orb)
            orbits.append(orb)
    order = list(range(len(orbits)))
    if rng_seed is not None:
        order = np.random.default_rng(rng_seed).permutation(len(orbits)).tolist()
    n_take = q * (q - 1) * blocks // o
    coset_value = np.full(v, -1, dtype=np.int64)
    orbit_value = {}
    for k, idx in enumerate(order[:n_take]):
        orbit_value[idx] = k % q
        coset_value[list(orbits[idx])] = k % q
    T = np.flatnonzero(coset_value >= 0)
    S = np.flatnonzero(coset_value < 0)
    plan = CosetPlan(q, v, o, orbits, T, S, coset_value, orbit_value)
    plan.check()
    return plan


def t_mask(cmap: CosetMap, plan: CosetPlan) -> np.ndarray:
    """Boolean indicator of T over all element indices (0 is never in T)."""
    mask = np.zeros(cmap.ctx.size, dtype=bool)
    nz = cmap.classes >= 0
    mask[nz] = plan.coset_value[cmap.classes[nz]] >= 0
    return mask


def eval_f_T(plan: CosetPlan, cmap: CosetMap, y: int) -> int:
    y = int(y)
    if y == 0 or plan.coset_value[cmap.class_of(y)] < 0:
        raise DomainError(f"element {y} is not in T")
    return int(plan.coset_value[cmap.class_of(y)])


def size_S_bounds(q: int, n: int, v: int) -> tuple[float, float]:
    return q**n / v, q ** (n + 2) / v


@dataclass
class FSResult:
    S: np.ndarray
    values: np.ndarray
    method: str
    certificate: dict


def slice_family(sctx: SpectralCtx, S: np.ndarray) -> SetSystem:
    """Ground set S (positions 0..|S|-1); set a*q + z is {y in S : Tr(a y) = z}."""
    big, q = sctx.big, sctx.q
    n_sets = sctx.size * q
    if S.size * n_sets > PARTITION_MAX_BITS:
        raise BudgetError(f"|S| * q^(n+1) = {S.size * n_sets} exceeds the partition budget")
    ad = big.digits_vec(big.elements()).astype(np.float64)
    bil = sctx.bilinear.astype(np.float64)
    pw = sctx.p ** np.arange(sctx.t)
    cols = np.empty((S.size, (n_sets + 7) // 8), dtype=np.uint8)
    base = np.arange(sctx.size, dtype=np.int64) * q
    batch = max(1, (1 << 24) // n_sets)
    for s in range(0, S.size, batch):
        yd = big.digits_vec(S[s:s + batch]).astype(np.float64)
        labels = np.zeros((yd.shape[0], sctx.size), dtype=np.int64)
        for k in range(sctx.t):
            labels += (np.rint(yd @ bil[:, :, k] @ ad.T).astype(np.int64) % sctx.p) * pw[k]
        hot = np.zeros((yd.shape[0], n_sets), dtype=bool)
        rows = np.arange(yd.shape[0])[:, None]
        hot[rows, base[None, :] + labels] = True
        cols[s:s + yd.shape[0]] = np.packbits(hot, axis=1)
    return SetSystem(S.size, n_sets, cols)


def build_f_S(sctx: SpectralCtx, cmap: CosetMap, plan: CosetPlan, method: str | None = None,
              seed=None, retry_cap: int = DEFAULT_RETRY_CAP) -> FSResult:
    q, v = sctx.q, cmap.v
    tm = t_mask(cmap, plan)
    S = np.flatnonzero(~tm)
    if method is None:
        method = "partition" if sctx.D <= PARTITION_MAX_DEGREE else "random_spectral"
    if method == "partition":
        system = slice_family(sctx, S)
        part = k_partition(system, q, seed=seed)
        cert = dict(part.certificate)
        cert.pop("nodes", None)
        return FSResult(S, part.block.astype(np.int64), method, cert)
    if method != "random_spectral":
        raise ParameterError(f"unknown f_S method {method!r}")
    envelope = fS_envelope(q, v)
    mask = (~tm).astype(np.float64)
    ss = np.random.SeedSequence(seed)
    for trial, child in enumerate(ss.spawn(retry_cap)):
        rng = np.random.default_rng(child)
        vals = np.empty(S.size, dtype=np.int64)
        vals[rng.permutation(S.size)] = np.arange(S.size) % q
        full = np.zeros(sctx.size, dtype=np.int64)
        full[S] = vals
        worst = max(float(np.abs(sctx.transform(full, lam, mask)).max()) for lam in range(1, q))
        if worst <= envelope:
            return FSResult(S, vals, method, {"trials": trial + 1, "fS_hat_max": worst,
                                              "envelope": envelope})
    raise RetryCapError(f"no balanced f_S within {envelope:.3f} after {retry_cap} trials")


def assemble(params: ConstructionParams, ctx: FieldCtx, cmap: CosetMap, plan: CosetPlan,
             fs: FSResult) -> FunctionTable:
    values = np.full(ctx.size, -1, dtype=np.int64)
    nz = cmap.classes >= 0
    values[nz] = plan.coset_value[cmap.classes[nz]]
    if np.any(values[fs.S] != -1):
        raise AssertionError("f_S overlaps T")
    values[fs.S] = fs.values
    if np.any(values < 0):
        raise AssertionError(f"{int(np.sum(values < 0))} elements left unassigned")
    return FunctionTable(params.p, params.t, params.n, ctx.modulus, values)


@dataclass
class Construction:
    params: ConstructionParams
    ctx: FieldCtx
    cmap: CosetMap
    plan: CosetPlan
    fs: FSResult
    table: FunctionTable

    @property
    def t_mask(self) -> np.ndarray:
        return t_mask(self.cmap, self.plan)

    def summary(self) -> dict:
        q, n, v = self.params.q, self.params.n, self.params.v
        lo, hi = size_S_bounds(q, n, v)
        return {"T_size": int(self.t_mask.sum()), "S_size": int(self.fs.S.size),
                "S_size_bounds": [lo, hi], "S_size_ok": lo <= self.fs.S.size <= hi,
                "orbit_size": self.plan.orbit_size, "T_cosets": self.plan.T_cosets.tolist(),
                "S_cosets": self.plan.S_cosets.tolist(), "f_S_method": self.fs.method,
                "f_S": self.fs.certificate}


def construct(params: ConstructionParams, plan_seed=None, fs_seed=None,
              method: str | None = None) -> Construction:
    """Build the full table for ``params``."""
    ctx = make_field(params.p, params.t * params.n)
    sctx = spectral_context(params.p, params.t, params.n, ctx.modulus)
    cmap = coset_map(ctx, params.v, params.t)
    plan = plan_T(ctx, cmap, plan_seed)
    fs = build_f_S(sctx, cmap, plan, method, fs_seed)
    table = assemble(params, ctx, cmap, plan, fs)
    lo, hi = size_S_bounds(params.q, params.n, params.v)
    assert lo <= fs.S.size <= hi and math.isfinite(hi)
    return Construction(params, ctx, cmap, plan, fs, table)
