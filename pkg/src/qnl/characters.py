"""Additive and multiplicative characters and Gauss sums.

Multiplicative characters are indexed through discrete logarithms:
``chi(g^k) = exp(2*pi*i * twist * k / order)``.  The canonical additive
character of F_{p^d} is ``psi(y) = exp(2*pi*i * absTr(y) / p)``.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from functools import lru_cache
from math import gcd

import numpy as np

from .errors import DomainError, ParameterError
from .ff import Embedding, FieldCtx, norm_to, trace_to

_CHUNK = 1 << 18


def roots_of_unity(w: int) -> np.ndarray:
    """exp(2 pi i k / w) for k = 0..w-1."""
    return np.exp(2j * np.pi * np.arange(w) / w)


@dataclass(frozen=True)
class MultChar:
    """Character of exact order ``order`` on ctx.order-th roots: g^k -> zeta^(twist*k)."""

    ctx: FieldCtx
    order: int
    twist: int = 1

    def __post_init__(self):
        if self.order < 1 or self.ctx.order % self.order:
            raise ParameterError(f"order {self.order} does not divide {self.ctx.order}")
        if gcd(self.twist, self.order) != 1:
            raise ParameterError(f"twist {self.twist} is not coprime to {self.order}")
        object.__setattr__(self, "twist", self.twist % self.order if self.order > 1 else 0)

    @property
    def is_trivial(self) -> bool:
        return self.order == 1

    def exponent(self, y: int) -> int:
        """k with chi(y) = zeta_order^k."""
        return (self.twist * self.ctx.dlog(y)) % self.order

    def __call__(self, y: int) -> complex:
        if int(y) == 0:
            return 0j
        return cmath.exp(2j * cmath.pi * self.exponent(y) / self.order)

    def power(self, k: int) -> MultChar:
        c = (self.twist * k) % self.order
        g = gcd(c, self.order)
        return MultChar(self.ctx, self.order // g, (c // g) if self.order // g > 1 else 0)

    def conj(self) -> MultChar:
        return self.power(-1)


def eta(qctx: FieldCtx, y: int) -> complex:
    """Canonical additive character of F_q = qctx."""
    return cmath.exp(2j * cmath.pi * trace_to(qctx, 1, y) / qctx.p)


def psi(ctx: FieldCtx, y: int, sub_degree: int = 1) -> complex:
    """Canonical additive character of ctx, computed as eta(Tr_{ctx/F_q}(y)).

    The subfield F_q = F_{p^sub_degree} is taken inside ctx, so its own trace to
    F_p is a sum of sub_degree Frobenius conjugates.
    """
    z = trace_to(ctx, sub_degree, y)
    acc, w = 0, z
    for _ in range(sub_degree):
        acc = ctx.add(acc, w)
        w = ctx.pow(w, ctx.p)
    return cmath.exp(2j * cmath.pi * acc / ctx.p)


def psi_vec(ctx: FieldCtx, arr) -> np.ndarray:
    return roots_of_unity(ctx.p)[ctx.abs_trace_vec(arr)]


@lru_cache(maxsize=32)
def _log_trace_counts(ctx: FieldCtx, w: int) -> np.ndarray:
    """counts[c, u] = #{k in [0, order): k = c mod w, absTr(g^k) = u}."""
    counts = np.zeros((w, ctx.p), dtype=np.int64)
    for start in range(0, ctx.order, _CHUNK):
        n = min(_CHUNK, ctx.order - start)
        tr = ctx.abs_trace_vec(ctx.powers(start, n))
        cls = (start + np.arange(n, dtype=np.int64)) % w
        counts += np.bincount(cls * ctx.p + tr, minlength=w * ctx.p).reshape(w, ctx.p)
    return counts


def gauss_sums(ctx: FieldCtx, w: int) -> np.ndarray:
    """G(chi_j) for all j in [0, w), where chi_j(g^k) = zeta_w^(j k).

    Summation is over F^* grouped by exact integer counts of (k mod w, absTr(g^k)),
    so the only floating point step is the final w x p root-of-unity combination.
    """
    if ctx.order % w:
        raise ParameterError(f"{w} does not divide {ctx.order}")
    counts = _log_trace_counts(ctx, w)
    partial = counts @ roots_of_unity(ctx.p)
    j = np.arange(w)
    zeta = roots_of_unity(w)[np.outer(j, j) % w]
    return zeta @ partial


def gauss_direct(ctx: FieldCtx, chi: MultChar) -> complex:
    if chi.ctx is not ctx:
        raise ParameterError("character belongs to a different field")
    return complex(gauss_sums(ctx, chi.order)[chi.twist])


def gauss_naive(ctx: FieldCtx, chi: MultChar) -> complex:
    """Term-by-term sum over F^*; only for small fields."""
    return sum(chi(y) * psi(ctx, y) for y in range(1, ctx.size))


def lift_char(chi: MultChar, big: FieldCtx) -> MultChar:
    """Lift chi from F_Q to F_{Q^s} by composing with the norm.

    The lift of g_small^k-indexed chi is again log-indexed on big: if the embedded
    small generator is G^(c * (N_big/N_small)), then norm(G) corresponds to
    g_small^(c^-1) and the lifted twist is twist * c^-1.
    """
    small = chi.ctx
    if small.p != big.p or big.d % small.d:
        raise ParameterError("incompatible field contexts for lifting")
    emb = Embedding(small, big)
    step = big.order // small.order
    c, rem = divmod(big.dlog(emb.to_big(small.generator)), step)
    assert rem == 0 and gcd(c, small.order) == 1
    if chi.is_trivial:
        return MultChar(big, 1, 0)
    twist = (chi.twist * pow(c, -1, small.order)) % chi.order
    return MultChar(big, chi.order, twist)


def lifted_value(chi: MultChar, big: FieldCtx, y: int) -> complex:
    """chi(N(y)) evaluated literally through the norm and the embedding."""
    emb = Embedding(chi.ctx, big)
    n = norm_to(big, chi.ctx.d, y)
    if n == 0:
        return 0j
    return chi(emb.to_small(n))


@dataclass(frozen=True)
class DHTResult:
    lhs: complex
    rhs: complex
    s: int
    rel_error: float
    match: bool


def dht_check(tau: MultChar, big: FieldCtx, rtol: float = 1e-6) -> DHTResult:
    """Compare G(lifted tau) computed directly with -(-G(tau))^s."""
    s = big.d // tau.ctx.d
    lhs = gauss_direct(big, lift_char(tau, big))
    rhs = -((-gauss_direct(tau.ctx, tau)) ** s)
    err = abs(lhs - rhs) / max(abs(rhs), 1e-300)
    return DHTResult(lhs, rhs, s, err, err <= rtol)


def indicator_reconstruction(ctx: FieldCtx, v: int, y: int) -> complex:
    """(1/v) sum_j chi^j(y) for chi of exact order v; the indicator of H at y."""
    if int(y) == 0:
        raise DomainError("indicator expansion is over nonzero elements")
    chi = MultChar(ctx, v, 1)
    z = chi(y)
    return sum(z**j for j in range(v)) / v
