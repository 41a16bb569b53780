"""Finite fields F_{p^d} with integer-indexed elements.

An element is a plain ``int`` in ``[0, p**d)`` whose base-p digits are the
coefficients of its polynomial representative: ``index = sum(c_i * p**i)``.
Index 0 is zero and index 1 is one.  The field is fixed by the lexicographically
smallest monic irreducible modulus of degree d (coefficient vector read as a
base-p integer) and the smallest primitive element.

Scalar arithmetic lives on :class:`FieldCtx`; the ``*_vec`` / ``apply_linear``
helpers work on numpy index arrays and are what the spectral and Gauss-sum
code uses at scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import gcd, isqrt

import numpy as np
from sympy import factorint, isprime

from .errors import BudgetError, DomainError, ParameterError

DEFAULT_LOG_CAP = 1 << 22
MAX_FIELD_SIZE = 1 << 26
_CHUNK = 1 << 16


# -- polynomials over F_p, coefficient lists low -> high ---------------------

def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_divmod(a: list[int], m: list[int], p: int) -> tuple[list[int], list[int]]:
    a = _trim([c % p for c in a])
    m = _trim([c % p for c in m])
    if not m:
        raise ZeroDivisionError("polynomial division by zero")
    inv_lead = pow(m[-1], -1, p)
    quot = [0] * max(len(a) - len(m) + 1, 0)
    while len(a) >= len(m):
        shift = len(a) - len(m)
        c = a[-1] * inv_lead % p
        quot[shift] = c
        for i, mc in enumerate(m):
            a[shift + i] = (a[shift + i] - c * mc) % p
        _trim(a)
    return quot, a


def _poly_mulmod(a: list[int], b: list[int], m: list[int], p: int) -> list[int]:
    if not a or not b:
        return []
    prod = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                prod[i + j] += ai * bj
    return _poly_divmod(prod, m, p)[1]


def _poly_powmod(a: list[int], e: int, m: list[int], p: int) -> list[int]:
    result = [1]
    base = _poly_divmod(a, m, p)[1]
    while e:
        if e & 1:
            result = _poly_mulmod(result, base, m, p)
        base = _poly_mulmod(base, base, m, p)
        e >>= 1
    return _poly_divmod(result, m, p)[1]


def _poly_gcd(a: list[int], b: list[int], p: int) -> list[int]:
    a = _trim([c % p for c in a])
    b = _trim([c % p for c in b])
    while b:
        a, b = b, _poly_divmod(a, b, p)[1]
    return a


def _poly_sub(a: list[int], b: list[int], p: int) -> list[int]:
    n = max(len(a), len(b))
    a = a + [0] * (n - len(a))
    b = b + [0] * (n - len(b))
    return _trim([(x - y) % p for x, y in zip(a, b)])


def is_irreducible(coeffs: list[int] | tuple[int, ...], p: int) -> bool:
    """Rabin's irreducibility test for a monic polynomial over F_p."""
    f = _trim([c % p for c in coeffs])
    d = len(f) - 1
    if d < 1:
        return False
    if d == 1:
        return True
    x = [0, 1]

    def frob_power(k: int) -> list[int]:
        # x^(p^k) mod f
        r = x
        for _ in range(k):
            r = _poly_powmod(r, p, f, p)
        return r

    if _poly_sub(frob_power(d), x, p):
        return False
    for ell in factorint(d):
        g = _poly_gcd(f, _poly_sub(frob_power(d // ell), x, p), p)
        if len(g) > 1:
            return False
    return True


def _int_to_digits(x: int, p: int, d: int) -> list[int]:
    out = []
    for _ in range(d):
        x, c = divmod(x, p)
        out.append(c)
    return out


def _digits_to_int(ds, p: int) -> int:
    x = 0
    for c in reversed(list(ds)):
        x = x * p + int(c)
    return x


def smallest_irreducible(p: int, d: int) -> tuple[int, ...]:
    """Monic irreducible of degree d with the smallest non-leading coefficient index."""
    for low in range(p**d):
        coeffs = _int_to_digits(low, p, d) + [1]
        if d > 1 and coeffs[0] == 0:
            continue
        if is_irreducible(coeffs, p):
            return tuple(coeffs)
    raise AssertionError("no irreducible polynomial found")  # pragma: no cover


# -- field context -----------------------------------------------------------

class FieldCtx:
    """The field F_{p^d}. Immutable once built; share freely."""

    def __init__(self, p: int, d: int, modulus, log_cap: int = DEFAULT_LOG_CAP):
        self.p = p
        self.d = d
        self.size = p**d
        self.order = self.size - 1
        self.modulus = tuple(int(c) % p for c in modulus)
        self.log_cap = log_cap
        if len(self.modulus) != d + 1 or self.modulus[-1] != 1:
            raise ParameterError("modulus must be monic of degree d")
        if not is_irreducible(self.modulus, p):
            raise ParameterError(f"modulus {self.modulus} is reducible over F_{p}")
        self._pw = [p**i for i in range(d + 1)]
        self._mod_int = _digits_to_int(self.modulus, 2) if p == 2 else None
        self._antilog: np.ndarray | None = None
        self._log: np.ndarray | None = None
        self.generator = self._find_generator()
        if self.size <= log_cap:
            self._build_tables()

    def __repr__(self) -> str:
        return f"FieldCtx(p={self.p}, d={self.d}, modulus={self.modulus}, generator={self.generator})"

    # scalar arithmetic ------------------------------------------------------

    def _check(self, x: int) -> int:
        x = int(x)
        if not 0 <= x < self.size:
            raise DomainError(f"{x} is not an element of F_{self.p}^{self.d}")
        return x

    def digits(self, x: int) -> list[int]:
        return _int_to_digits(int(x), self.p, self.d)

    def from_digits_scalar(self, ds) -> int:
        return _digits_to_int([c % self.p for c in ds], self.p)

    def add(self, x: int, y: int) -> int:
        if self.p == 2:
            return int(x) ^ int(y)
        p = self.p
        return _digits_to_int([(a + b) % p for a, b in zip(self.digits(x), self.digits(y))], p)

    def neg(self, x: int) -> int:
        if self.p == 2:
            return int(x)
        return _digits_to_int([(-a) % self.p for a in self.digits(x)], self.p)

    def sub(self, x: int, y: int) -> int:
        return self.add(x, self.neg(y))

    def scale(self, c: int, x: int) -> int:
        """Multiply by the prime-field scalar c."""
        return _digits_to_int([(c * a) % self.p for a in self.digits(x)], self.p)

    def _poly_mul(self, x: int, y: int) -> int:
        if self.p == 2:
            r, a, b = 0, x, y
            top = 1 << self.d
            while b:
                if b & 1:
                    r ^= a
                b >>= 1
                a <<= 1
                if a & top:
                    a ^= self._mod_int
            return r
        prod = _poly_mulmod(self.digits(x), self.digits(y), list(self.modulus), self.p)
        return _digits_to_int(prod, self.p)

    def mul(self, x: int, y: int) -> int:
        x, y = int(x), int(y)
        if x == 0 or y == 0:
            return 0
        if self._log is not None:
            return int(self._antilog[(int(self._log[x]) + int(self._log[y])) % self.order])
        return self._poly_mul(x, y)

    def pow(self, x: int, e: int) -> int:
        x = int(x)
        if e < 0:
            return self.pow(self.inv(x), -e)
        if x == 0:
            return 1 if e == 0 else 0
        if self._log is not None:
            return int(self._antilog[(int(self._log[x]) * e) % self.order])
        result, base = 1, x
        while e:
            if e & 1:
                result = self._poly_mul(result, base)
            base = self._poly_mul(base, base)
            e >>= 1
        return result

    def inv(self, x: int) -> int:
        x = int(x)
        if x == 0:
            raise DomainError("zero has no multiplicative inverse")
        return self.pow(x, self.order - 1)

    def _find_generator(self) -> int:
        if self.order == 1:
            return 1
        primes = list(factorint(self.order))
        for x in range(2, self.size):
            if all(self.pow(x, self.order // ell) != 1 for ell in primes):
                return x
        raise AssertionError("no primitive element")  # pragma: no cover

    # discrete logarithms ----------------------------------------------------

    @property
    def has_table(self) -> bool:
        return self._log is not None

    def antilog(self, i: int) -> int:
        return self.pow(self.generator, i % self.order)

    def dlog(self, y: int) -> int:
        y = self._check(y)
        if y == 0:
            raise DomainError("dlog(0) is undefined")
        if self._log is not None:
            return int(self._log[y])
        return self._bsgs(y)

    @cached_property
    def _baby_steps(self) -> tuple[int, dict[int, int]]:
        m = isqrt(self.order) + 1
        table = {}
        for j, val in enumerate(self.powers(0, m).tolist()):
            table.setdefault(val, j)
        return m, table

    def _bsgs(self, y: int) -> int:
        m, table = self._baby_steps
        giant = self.inv(self.pow(self.generator, m))
        gamma = y
        for i in range(m + 1):
            j = table.get(gamma)
            if j is not None:
                return (i * m + j) % self.order
            gamma = self._poly_mul(gamma, giant)
        raise AssertionError("discrete log not found")  # pragma: no cover

    def _build_tables(self) -> None:
        antilog = np.empty(self.order, dtype=np.int64)
        antilog[0] = 1
        filled = 1
        while filled < self.order:
            k = min(filled, self.order - filled)
            step = self.pow(self.generator, filled)
            antilog[filled:filled + k] = self.mul_vec(antilog[:k], step)
            filled += k
        log = np.full(self.size, -1, dtype=np.int64)
        log[antilog] = np.arange(self.order, dtype=np.int64)
        self._antilog, self._log = antilog, log

    @property
    def log_table(self) -> np.ndarray | None:
        return self._log

    @property
    def antilog_table(self) -> np.ndarray | None:
        return self._antilog

    def powers(self, start: int, count: int) -> np.ndarray:
        """g^start, ..., g^(start+count-1) as an index array."""
        if self._antilog is not None:
            idx = (start + np.arange(count, dtype=np.int64)) % self.order
            return self._antilog[idx]
        out = np.empty(count, dtype=np.int64)
        if count == 0:
            return out
        out[0] = self.pow(self.generator, start)
        filled = 1
        while filled < count:
            k = min(filled, count - filled)
            out[filled:filled + k] = self.mul_vec(out[:k], self.pow(self.generator, filled))
            filled += k
        return out

    # vectorized linear algebra over F_p -------------------------------------

    def digits_vec(self, arr: np.ndarray, ndigits: int | None = None) -> np.ndarray:
        ndigits = self.d if ndigits is None else ndigits
        arr = np.asarray(arr, dtype=np.int64)
        out = np.empty(arr.shape + (ndigits,), dtype=np.int64)
        rest = arr.copy()
        for i in range(ndigits):
            rest, out[..., i] = np.divmod(rest, self.p)
        return out

    def from_digits_vec(self, digs: np.ndarray) -> np.ndarray:
        k = digs.shape[-1]
        pw = np.array([self.p**i for i in range(k)], dtype=np.int64)
        return digs.astype(np.int64) @ pw

    def apply_linear(self, arr, mat: np.ndarray) -> np.ndarray:
        """Apply an F_p-linear map to base-p indices.

        ``mat`` has shape (k_in, k_out); row i is the image digit vector of p^i.
        Inputs are read with k_in digits, outputs are indices with k_out digits.
        """
        arr = np.asarray(arr, dtype=np.int64)
        mat = np.asarray(mat, dtype=np.int64) % self.p
        flat = arr.reshape(-1)
        out = np.empty(flat.shape, dtype=np.int64)
        k_in, k_out = mat.shape
        if self.p == 2:
            rows = mat @ (1 << np.arange(k_out, dtype=np.int64))
            for s in range(0, flat.size, _CHUNK * 4):
                chunk = flat[s:s + _CHUNK * 4]
                acc = np.zeros_like(chunk)
                for i in range(k_in):
                    if rows[i]:
                        acc ^= ((chunk >> i) & 1) * rows[i]
                out[s:s + chunk.size] = acc
            return out.reshape(arr.shape)
        pw = np.array([self.p**i for i in range(k_out)], dtype=np.int64)
        fmat = mat.astype(np.float64)
        for s in range(0, flat.size, _CHUNK):
            chunk = flat[s:s + _CHUNK]
            digs = self.digits_vec(chunk, k_in).astype(np.float64)
            img = np.rint(digs @ fmat).astype(np.int64) % self.p
            out[s:s + chunk.size] = img @ pw
        return out.reshape(arr.shape)

    def mul_matrix(self, c: int) -> np.ndarray:
        """Matrix of y -> c*y over the basis 1, x, ..., x^(d-1)."""
        return np.array([self.digits(self._poly_mul(self._pw[i], int(c))) for i in range(self.d)],
                        dtype=np.int64)

    def mul_vec(self, arr, c: int) -> np.ndarray:
        c = int(c)
        if c == 0:
            return np.zeros_like(np.asarray(arr, dtype=np.int64))
        return self.apply_linear(arr, self.mul_matrix(c))

    def add_vec(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        if self.p == 2:
            return x ^ y
        return self.from_digits_vec((self.digits_vec(x) + self.digits_vec(y)) % self.p)

    @cached_property
    def abs_trace_coeffs(self) -> np.ndarray:
        """absTr(x^i) for the polynomial basis; absTr(y) = digits(y) . coeffs mod p."""
        return np.array([trace_to(self, 1, self._pw[i]) for i in range(self.d)], dtype=np.int64)

    def abs_trace_vec(self, arr) -> np.ndarray:
        return self.apply_linear(arr, self.abs_trace_coeffs[:, None])

    def elements(self) -> np.ndarray:
        return np.arange(self.size, dtype=np.int64)

    def subfield_elements(self, e: int) -> np.ndarray:
        """Indices of F_{p^e} inside this field, ascending."""
        if self.d % e:
            raise ParameterError(f"{e} does not divide {self.d}")
        sub_order = self.p**e - 1
        step = self.order // sub_order
        gens = np.array([self.pow(self.generator, k * step) for k in range(sub_order)], dtype=np.int64)
        return np.sort(np.concatenate([[0], gens]))


def make_field(p: int, d: int, log_cap: int = DEFAULT_LOG_CAP, modulus=None) -> FieldCtx:
    """Build F_{p^d} deterministically (smallest irreducible modulus unless given)."""
    if not isinstance(p, (int, np.integer)) or not isprime(int(p)):
        raise ParameterError(f"p={p} is not prime")
    if d < 1:
        raise ParameterError("degree must be >= 1")
    if p**d > MAX_FIELD_SIZE:
        raise BudgetError(f"field of size {p}^{d} exceeds the supported index range")
    if modulus is None:
        modulus = smallest_irreducible(int(p), int(d))
    return FieldCtx(int(p), int(d), modulus, log_cap)


# -- traces, norms, subfields ------------------------------------------------

def trace_to(ctx: FieldCtx, e: int, y: int) -> int:
    """Tr_{F_{p^d}/F_{p^e}}(y) = sum_i y^(p^(e*i)); returned as an element of ctx."""
    if e < 1 or ctx.d % e:
        raise ParameterError(f"subfield degree {e} does not divide {ctx.d}")
    q = ctx.p**e
    acc, z = 0, int(y)
    for _ in range(ctx.d // e):
        acc = ctx.add(acc, z)
        z = ctx.pow(z, q)
    assert ctx.pow(acc, q) == acc
    return acc


def norm_to(ctx: FieldCtx, e: int, y: int) -> int:
    """N_{F_{p^d}/F_{p^e}}(y) = y^((p^d - 1)/(p^e - 1))."""
    if e < 1 or ctx.d % e:
        raise ParameterError(f"subfield degree {e} does not divide {ctx.d}")
    y = int(y)
    if y == 0:
        return 0
    return ctx.pow(y, ctx.order // (ctx.p**e - 1))


def dlog(ctx: FieldCtx, y: int) -> int:
    return ctx.dlog(y)


class Embedding:
    """A fixed field homomorphism from ``small`` into ``big`` (same characteristic).

    The image of the polynomial variable of ``small`` is the smallest-index root
    of small.modulus inside big.
    """

    def __init__(self, small: FieldCtx, big: FieldCtx):
        if small.p != big.p or big.d % small.d:
            raise ParameterError("incompatible field contexts")
        self.small, self.big = small, big
        sub = big.subfield_elements(small.d)
        self.root = next(int(b) for b in sub if self._eval_modulus(int(b)) == 0)
        powers = [1]
        for _ in range(small.d - 1):
            powers.append(big.mul(powers[-1], self.root))
        self._matrix = np.array([big.digits(b) for b in powers], dtype=np.int64)
        images = big.apply_linear(small.elements(), self._matrix)
        self._images = images
        self._order = np.argsort(images)
        self._sorted = images[self._order]

    def _eval_modulus(self, b: int) -> int:
        acc = 0
        for c in reversed(self.small.modulus):
            acc = self.big.add(self.big.mul(acc, b), int(c))
        return acc

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def to_big(self, x: int) -> int:
        return int(self._images[int(x)])

    def to_big_vec(self, arr) -> np.ndarray:
        return self._images[np.asarray(arr, dtype=np.int64)]

    def to_small_vec(self, arr) -> np.ndarray:
        arr = np.asarray(arr, dtype=np.int64)
        pos = np.searchsorted(self._sorted, arr)
        pos = np.minimum(pos, self._sorted.size - 1)
        if np.any(self._sorted[pos] != arr):
            raise DomainError("element does not lie in the embedded subfield")
        return self._order[pos]

    def to_small(self, y: int) -> int:
        return int(self.to_small_vec(np.array([y]))[0])


# -- cosets of the index-v subgroup -----------------------------------------

@dataclass(frozen=True, eq=False)
class CosetMap:
    """Coset ids dlog(y) mod v of the index-v subgroup H and the F_q^* action on them.

    ``classes[y]`` is the coset id of the nonzero element y (``-1`` at index 0).
    Multiplying by a generator of F_q^* shifts every id by ``shift`` (mod v);
    ``orbit_size`` is the order of ``shift`` in Z_v.
    """

    ctx: FieldCtx
    v: int
    sub_degree: int
    classes: np.ndarray
    shift: int
    orbit_size: int

    @property
    def q(self) -> int:
        return self.ctx.p**self.sub_degree

    @property
    def class_size(self) -> int:
        return self.ctx.order // self.v

    def class_of(self, y: int) -> int:
        if int(y) == 0:
            raise DomainError("0 lies in no coset")
        return int(self.classes[int(y)])

    def orbit(self, c: int) -> list[int]:
        return sorted({(c + j * self.shift) % self.v for j in range(self.orbit_size)})


def coset_map(ctx: FieldCtx, v: int, sub_degree: int = 1) -> CosetMap:
    if v < 1 or ctx.order % v:
        raise ParameterError(f"v={v} does not divide {ctx.order}")
    if ctx.d % sub_degree:
        raise ParameterError(f"{sub_degree} does not divide {ctx.d}")
    classes = np.full(ctx.size, -1, dtype=np.int64)
    for start in range(0, ctx.order, _CHUNK * 4):
        count = min(_CHUNK * 4, ctx.order - start)
        classes[ctx.powers(start, count)] = (start + np.arange(count, dtype=np.int64)) % v
    q = ctx.p**sub_degree
    shift = (ctx.order // (q - 1)) % v if q > 1 else 0
    orbit_size = v // gcd(shift, v)
    return CosetMap(ctx, v, sub_degree, classes, shift, orbit_size)


def relative_trace_matrix(emb: Embedding) -> np.ndarray:
    """(big.d, small.d) matrix sending y to the small-field index of Tr_{big/small}(y)."""
    big, small = emb.big, emb.small
    rows = [small.digits(emb.to_small(trace_to(big, small.d, big.p**i))) for i in range(big.d)]
    return np.array(rows, dtype=np.int64).reshape(big.d, small.d)


def trace_bilinear(emb: Embedding) -> np.ndarray:
    """B[i, j] = small-field digits of Tr_{big/small}(x^i * x^j)."""
    big, small = emb.big, emb.small
    out = np.zeros((big.d, big.d, small.d), dtype=np.int64)
    for i in range(big.d):
        for j in range(i, big.d):
            y = big.mul(big.p**i, big.p**j)
            out[i, j] = out[j, i] = small.digits(emb.to_small(trace_to(big, small.d, y)))
    return out
