"""Elementary number theory for the semiprimitive Gauss-sum evaluation.

Covers multiplicative orders and primitive roots, the semiprimitivity test
(r > 3 prime, r = 3 mod 4, -p a primitive root mod r^e), class numbers of
Q(sqrt(-r)) by reduced-form counting, the closed-form Gauss sums, the odd
degree search, and the density arithmetic around Artin's constant.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sympy import factorint, isprime, primerange

from .errors import BudgetError, ParameterError

DEFAULT_DEGREE_CAP = 10**6


def euler_phi(m: int) -> int:
    if m < 1:
        raise ParameterError("phi is defined for m >= 1")
    result = m
    for ell in factorint(m):
        result -= result // ell
    return result


def ord_mod(a: int, m: int) -> int:
    """Smallest t > 0 with a^t = 1 (mod m)."""
    if m < 2:
        raise ParameterError("modulus must be >= 2")
    a %= m
    if math.gcd(a, m) != 1:
        raise ParameterError(f"gcd({a}, {m}) != 1")
    t = euler_phi(m)
    for ell, k in factorint(t).items():
        for _ in range(k):
            if pow(a, t // ell, m) == 1:
                t //= ell
            else:
                break
    return t


def is_primitive_root(a: int, m: int) -> bool:
    if m < 2 or math.gcd(a % m, m) != 1:
        return False
    return ord_mod(a, m) == euler_phi(m)


@dataclass(frozen=True)
class SemiprimitiveCert:
    p: int
    r: int
    e: int
    r_prime: bool
    r_gt_3: bool
    r_3_mod_4: bool
    neg_p_primitive: bool
    m: int | None = None

    @property
    def v(self) -> int:
        return self.r**self.e

    @property
    def passed(self) -> bool:
        return self.r_prime and self.r_gt_3 and self.r_3_mod_4 and self.neg_p_primitive

    def as_dict(self) -> dict:
        return {"p": self.p, "r": self.r, "e": self.e, "v": self.v, "m": self.m,
                "checks": {"r_prime": self.r_prime, "r_gt_3": self.r_gt_3,
                           "r_3_mod_4": self.r_3_mod_4, "neg_p_primitive_root": self.neg_p_primitive},
                "passed": self.passed}


def semiprimitive_check(p: int, r: int, e: int) -> SemiprimitiveCert:
    r_prime = isprime(r)
    v = r**e
    prim = r_prime and r != p and is_primitive_root(-p, v)
    cert = SemiprimitiveCert(p, r, e, r_prime, r > 3, r % 4 == 3, prim)
    if not cert.passed:
        return cert
    m = ord_mod(p, v)
    assert m == euler_phi(v) // 2 and m % 2 == 1, (p, r, e, m)
    return SemiprimitiveCert(p, r, e, True, True, True, True, m)


def scan_r(p: int, r_limit: int, e: int = 2) -> list[int]:
    if not isprime(p):
        raise ParameterError(f"p={p} is not prime")
    return [r for r in primerange(5, r_limit + 1) if semiprimitive_check(p, r, e).passed]


def class_number(r: int) -> int:
    """Number of reduced primitive forms (a, b, c) with b^2 - 4ac = -r."""
    if not (isprime(r) and r > 3 and r % 4 == 3):
        raise ParameterError(f"r={r} must be a prime > 3 with r = 3 mod 4")
    h = 0
    a = 1
    while 3 * a * a <= r:
        for b in range(-a + 1, a + 1):
            if (b * b + r) % (4 * a):
                continue
            c = (b * b + r) // (4 * a)
            if c < a or math.gcd(math.gcd(a, abs(b)), c) != 1:
                continue
            if b < 0 and a == c:
                continue
            h += 1
        a += 1
    return h


@dataclass(frozen=True)
class GaussCoeffs:
    """a^2 + b^2 r = 4 p^h with a p^((k-h)/2) = -2 (mod r); b > 0 (sign left open)."""

    p: int
    r: int
    d: int
    a: int
    b: int
    h: int
    k: int

    def gauss_sum(self, sign: int = 1) -> complex:
        """G(tau) = (a + sign*b*sqrt(-r))/2 * p^((k-h)/2) for tau of order r^d on F_{p^k}."""
        return 0.5 * complex(self.a, sign * self.b * math.sqrt(self.r)) * self.p ** ((self.k - self.h) / 2)


def solve_gauss_coeffs(p: int, t: int, r: int, d: int) -> GaussCoeffs:
    """Integer coefficients of the semiprimitive Gauss sum for characters of order r^d.

    ``t`` does not enter the coefficients (they live over F_{p^k}); it is accepted
    for call-site symmetry with :func:`gauss_closed_form`.
    """
    cert = semiprimitive_check(p, r, d)
    if not cert.passed:
        raise ParameterError(f"(p={p}, r={r}, d={d}) is not semiprimitive")
    h = class_number(r)
    k = euler_phi(r**d) // 2
    if (k - h) % 2:
        raise AssertionError(f"(k - h)/2 not integral for k={k}, h={h}")
    target = 4 * p**h
    found = []
    for b in range(1, math.isqrt(target // r) + 1):
        a2 = target - b * b * r
        a = math.isqrt(a2)
        if a * a != a2 or a % p == 0 or b % p == 0:
            continue
        for sa in {a, -a}:
            if (sa * pow(p, (k - h) // 2, r) + 2) % r == 0:
                found.append((sa, b))
    if len(found) != 1:
        raise AssertionError(f"expected a unique solution, found {found}")
    a, b = found[0]
    return GaussCoeffs(p, r, d, a, b, h, k)


def gauss_closed_form(p: int, t: int, r: int, e: int, d: int) -> tuple[complex, complex]:
    """Both candidates for G(chi)/q^(m/2), chi of order r^d on F_{q^m}, m = phi(r^e)/2."""
    if not 1 <= d <= e:
        raise ParameterError("need 1 <= d <= e")
    if not semiprimitive_check(p, r, e).passed:
        raise ParameterError(f"(p={p}, r={r}, e={e}) is not semiprimitive")
    co = solve_gauss_coeffs(p, t, r, d)
    exponent = t * r ** (e - d)
    scale = 2 * p ** (co.h / 2)
    out = []
    for sign in (1, -1):
        unit = complex(co.a, sign * co.b * math.sqrt(r)) / scale
        out.append(-((-unit) ** exponent))
    return out[0], out[1]


def wrap_angle(x):
    """Map angles to (-pi, pi]."""
    y = np.mod(np.asarray(x, dtype=float) + np.pi, 2 * np.pi) - np.pi
    y = np.where(y == -np.pi, np.pi, y)
    return y if y.ndim else float(y)


@dataclass(frozen=True)
class OddDegree:
    s: int
    achieved_angle: float
    beta: float
    threshold: float
    epsilon: float
    angles: np.ndarray = field(repr=False, compare=False, default=None)


def find_odd_degree(p: int, t: int, r: int, e: int, epsilon: float,
                    cap: int = DEFAULT_DEGREE_CAP, keep_trajectory: bool = False) -> OddDegree:
    """Smallest odd s with |wrap(s*beta - pi)| <= epsilon / r^(e-1).

    beta is the argument of G(tau)/q^(m/2) for tau of order r^e; the closed form
    makes this independent of any field computation, so it scales to any s.
    """
    if not 0 < epsilon < math.pi:
        raise ParameterError("epsilon must lie in (0, pi)")
    beta = abs(cmath.phase(gauss_closed_form(p, t, r, e, e)[0]))
    threshold = epsilon / r ** (e - 1)
    block = 1 << 14
    seen = []
    for start in range(1, cap + 1, 2 * block):
        s = np.arange(start, min(start + 2 * block, cap + 1), 2, dtype=np.int64)
        ang = np.abs(wrap_angle(s * beta - math.pi))
        if keep_trajectory:
            seen.append(ang)
        hit = np.flatnonzero(ang <= threshold)
        if hit.size:
            i = int(hit[0])
            traj = np.concatenate(seen)[: (start - 1) // 2 + i + 1] if keep_trajectory else None
            return OddDegree(int(s[i]), float(ang[i]), beta, threshold, epsilon, traj)
    raise BudgetError(f"no odd s <= {cap} reaches angle {threshold:.3g}; epsilon too small")


def artin_constant(prime_limit: int = 10**6) -> float:
    if prime_limit < 100:
        raise ParameterError("prime_limit must be >= 100")
    rs = np.array(list(primerange(2, prime_limit + 1)), dtype=np.float64)
    return float(np.exp(np.sum(np.log1p(-1.0 / (rs * (rs - 1))))))


def moree_density(p: int, prime_limit: int = 10**6) -> float:
    """GRH-conditional density of primes r = 3 mod 4 with -p a primitive root mod r."""
    if not isprime(p):
        raise ParameterError(f"p={p} is not prime")
    half = artin_constant(prime_limit) / 2
    if p == 2:
        return half
    return half * (1 - (-1) ** ((p - 1) // 2) / (p * p - p - 1))


def density_recursion(r_list: list[int]) -> list[Fraction]:
    """d_1 = phi(r_1 - 1)/r_1, d_i = d_{i-1} + x_i - d_{i-1} x_i with x_i = phi(r_i - 1)/r_i."""
    out: list[Fraction] = []
    for r in r_list:
        x = Fraction(euler_phi(r - 1), r)
        out.append(x if not out else out[-1] + x - out[-1] * x)
    return out
