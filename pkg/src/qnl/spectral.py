"""Fourier transforms of F_q-valued functions on F_{q^n} and nonlinearity.

    ghat(a, lam) = q^(-n/2) * sum_y eta(lam g(y)) * conj(psi(a y))

Both characters reduce to exp(2 pi i absTr(.)/p), and absTr(a y) is the F_p
bilinear form <u(a), y> with u(a) = digits(a) @ Tmat, Tmat[i, j] = absTr(x^(i+j)).
So one additive DFT over (Z_p)^(t n) gives ghat(., lam) for every a at once.

The nonlinearity follows from the maximand

    mu(g) = max_{a, b} sum_{lam != 0} conj(eta(lam b)) * ghat(lam a, lam)

which equals q^(1-n/2) * (q^(n-1)(q-1) - d(g, h_{a,b})) for h_{a,b}(y) = Tr(a y) + b.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np
from sympy import factorint

from .characters import gauss_sums, roots_of_unity
from .errors import BudgetError, DomainError, ParameterError
from .ff import Embedding, make_field, trace_bilinear
from .tableio import FunctionTable

MAX_SPECTRAL_SIZE = 1 << 22
MAX_BRUTEFORCE_SIZE = 1 << 15
MAX_EXHAUSTIVE_FUNCTIONS = 1 << 20
IMAG_TOL = 1e-9
PARSEVAL_RTOL = 1e-6


def n_threads() -> int:
    try:
        return max(1, int(os.environ.get("QNL_THREADS", "1")))
    except ValueError:
        return 1


def prime_power(q: int) -> tuple[int, int]:
    fac = factorint(q)
    if q < 2 or len(fac) != 1:
        raise ParameterError(f"q={q} is not a prime power")
    (p, t), = fac.items()
    return int(p), int(t)


def additive_dft(u: np.ndarray, p: int, D: int) -> np.ndarray:
    """W[k] = sum_y u[y] * exp(-2 pi i <k, y> / p) over (Z_p)^D, base-p little-endian indices."""
    a = np.array(u, dtype=np.complex128)
    if a.shape != (p**D,):
        raise ParameterError("input length must be p^D")
    if p == 2:
        for k in range(D):
            v = a.reshape(-1, 2, 1 << k)
            x0 = v[:, 0, :].copy()
            x1 = v[:, 1, :]
            v[:, 0, :] += x1
            v[:, 1, :] = x0 - x1
        return a
    dft = roots_of_unity(p)[(-np.outer(np.arange(p), np.arange(p))) % p]
    for k in range(D):
        v = a.reshape(p ** (D - k - 1), p, p**k)
        a = np.einsum("ij,ajb->aib", dft, v).reshape(-1)
    return a


class SpectralCtx:
    """Cached field data for transforming functions F_{q^n} -> F_q."""

    def __init__(self, p: int, t: int, n: int, modulus: tuple[int, ...]):
        self.p, self.t, self.n = p, t, n
        self.q = p**t
        self.D = t * n
        self.size = self.q**n
        if self.size > MAX_SPECTRAL_SIZE:
            raise BudgetError(f"q^n = {self.size} exceeds the spectral budget {MAX_SPECTRAL_SIZE}")
        self.big = make_field(p, self.D, modulus=modulus)
        self.small = make_field(p, t)
        self.emb = Embedding(self.small, self.big)
        coeffs = self.big.abs_trace_coeffs
        self.tmat = np.array([[int(self.big.digits(self.big.mul(p**i, p**j)) @ coeffs) % p
                               for j in range(self.D)] for i in range(self.D)], dtype=np.int64)
        self.eta_exp = self.small.abs_trace_vec(self.small.elements())
        self.small_mul = np.array([[self.small.mul(a, b) for b in range(self.q)]
                                   for a in range(self.q)], dtype=np.int64)
        self.scale = self.size ** -0.5
        self._lam_perm: dict[int, np.ndarray] = {}

    @classmethod
    def for_table(cls, table: FunctionTable) -> SpectralCtx:
        return spectral_context(table.p, table.t, table.n, table.modulus)

    @cached_property
    def freq_index(self) -> np.ndarray:
        return self.big.apply_linear(self.big.elements(), self.tmat)

    @cached_property
    def bilinear(self) -> np.ndarray:
        return trace_bilinear(self.emb)

    def lam_perm(self, lam: int) -> np.ndarray:
        """Index array a -> lam * a, with lam in F_q embedded in F_{q^n}."""
        if lam not in self._lam_perm:
            self._lam_perm[lam] = self.big.mul_vec(self.big.elements(), self.emb.to_big(lam))
        return self._lam_perm[lam]

    def eta_row(self, lam: int) -> np.ndarray:
        """eta(lam * b) for every b in F_q."""
        return roots_of_unity(self.p)[self.eta_exp[self.small_mul[lam]]]

    def transform(self, values: np.ndarray, lam: int, mask: np.ndarray | None = None) -> np.ndarray:
        if not 1 <= lam < self.q:
            raise DomainError("lambda must be a nonzero element of F_q")
        u = roots_of_unity(self.p)[self.eta_exp[self.small_mul[lam][values]]]
        if mask is not None:
            u = u * mask
        return self.scale * additive_dft(u, self.p, self.D)[self.freq_index]


@lru_cache(maxsize=8)
def spectral_context(p, t, n, modulus) -> SpectralCtx:
    return SpectralCtx(p, t, n, modulus)


def fourier_full(table: FunctionTable, lam: int) -> np.ndarray:
    """a -> ghat(a, lam) for every a in F_{q^n} (indexed by element index)."""
    return SpectralCtx.for_table(table).transform(table.values, lam)


def fourier_restricted(table: FunctionTable, mask, lam: int) -> np.ndarray:
    """Transform of the function zeroed off ``mask`` (a boolean array over F_{q^n})."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (table.size,):
        raise ParameterError("mask must cover the whole domain")
    return SpectralCtx.for_table(table).transform(table.values, lam, mask.astype(np.float64))


def fourier_naive(table: FunctionTable, a: int, lam: int) -> complex:
    """The defining sum, literally; small tables only."""
    ctx = SpectralCtx.for_table(table)
    big, small = ctx.big, ctx.small
    acc = 0j
    for y in range(table.size):
        eta_val = small.abs_trace_vec([small.mul(lam, int(table.values[y]))])[0]
        psi_val = big.abs_trace_vec([big.mul(a, y)])[0]
        acc += np.exp(2j * np.pi * (int(eta_val) - int(psi_val)) / ctx.p)
    return acc * ctx.scale


def _parallel_map(fn, items):
    workers = min(n_threads(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


def maximand(ctx: SpectralCtx, values: np.ndarray, mask=None) -> tuple[np.ndarray, float, float]:
    """Real maximand M[b, a], its largest imaginary residue, and the worst Parseval error."""
    m = np.zeros((ctx.q, ctx.size), dtype=np.complex128)

    def one(lam):
        return ctx.transform(values, lam, mask)

    lams = list(range(1, ctx.q))
    parseval = 0.0
    for lam, F in zip(lams, _parallel_map(one, lams)):
        if mask is None:
            parseval = max(parseval, abs(float(np.vdot(F, F).real) - ctx.size) / ctx.size)
        m += np.conj(ctx.eta_row(lam))[:, None] * F[ctx.lam_perm(lam)][None, :]
    return m.real, float(np.abs(m.imag).max()), parseval


def mu_from_nonlinearity(q: int, n: int, nl) -> float:
    return (q ** (n - 1) * (q - 1) - nl) / q ** (n / 2 - 1)


def snap_nonlinearity(q: int, n: int, mu: float) -> int:
    """The integer N with mu = q^(1-n/2) (q^(n-1)(q-1) - N), rounded."""
    return int(round(q ** (n - 1) * (q - 1) - mu * q ** (n / 2 - 1)))


@dataclass
class SpectralReport:
    q: int
    n: int
    mu: float
    mu_raw: float
    nonlinearity: int
    rounding_delta: float
    witness_a: int
    witness_b: int
    max_imag: float
    parseval_max_rel: float

    def as_dict(self) -> dict:
        return asdict(self)


def mu_spectral(table: FunctionTable) -> SpectralReport:
    ctx = SpectralCtx.for_table(table)
    m, max_imag, parseval = maximand(ctx, table.values)
    if max_imag > IMAG_TOL * max(1.0, ctx.size**0.5):
        raise AssertionError(f"maximand has imaginary part {max_imag:.3g}")
    if parseval > PARSEVAL_RTOL:
        raise AssertionError(f"Parseval violated by {parseval:.3g}")
    b, a = np.unravel_index(int(np.argmax(m)), m.shape)
    raw = float(m[b, a])
    nl = snap_nonlinearity(ctx.q, ctx.n, raw)
    mu = mu_from_nonlinearity(ctx.q, ctx.n, nl)
    return SpectralReport(ctx.q, ctx.n, mu, raw, nl, raw - mu, int(a), int(b), max_imag, parseval)


# -- brute force -------------------------------------------------------------

def _label_digits(ctx: SpectralCtx, a: np.ndarray) -> np.ndarray:
    """digits of Tr(a y) in F_q for a block of a's and every y: shape (len(a), q^n, t)."""
    ad = ctx.big.digits_vec(a)
    yd = ctx.big.digits_vec(ctx.big.elements())
    out = np.empty((a.size, ctx.size, ctx.t), dtype=np.int64)
    for k in range(ctx.t):
        out[:, :, k] = (ad @ ctx.bilinear[:, :, k] @ yd.T) % ctx.p
    return out


def _sub_labels(ctx: SpectralCtx, g_digits: np.ndarray, l_digits: np.ndarray) -> np.ndarray:
    pw = ctx.p ** np.arange(ctx.t)
    return ((g_digits - l_digits) % ctx.p) @ pw


def nonlinearity_bruteforce(table: FunctionTable) -> tuple[int, int, int]:
    """min over (a, b) of #{y : g(y) != Tr(a y) + b}, with a minimizing (a, b)."""
    if table.size > MAX_BRUTEFORCE_SIZE:
        raise BudgetError(f"q^n = {table.size} exceeds the brute-force budget")
    ctx = SpectralCtx.for_table(table)
    gd = ctx.small.digits_vec(table.values)
    best = (table.size + 1, 0, 0)
    chunk = max(1, (1 << 20) // table.size)
    for s in range(0, table.size, chunk):
        a = np.arange(s, min(s + chunk, table.size))
        diff = _sub_labels(ctx, gd[None], _label_digits(ctx, a))
        keys = (np.arange(a.size)[:, None] * ctx.q + diff).ravel()
        agree = np.bincount(keys, minlength=a.size * ctx.q).reshape(a.size, ctx.q)
        i, b = np.unravel_index(int(np.argmax(agree)), agree.shape)
        dist = table.size - int(agree[i, b])
        if dist < best[0]:
            best = (dist, int(a[i]), int(b))
    return best


def mu_bruteforce(table: FunctionTable) -> float:
    nl, _, _ = nonlinearity_bruteforce(table)
    return mu_from_nonlinearity(table.q, table.n, nl)


def affine_table(q: int, n: int) -> np.ndarray:
    """Values of every h_{a,b}(y) = Tr(a y) + b; row a*q + b."""
    p, t = prime_power(q)
    ctx = spectral_context(p, t, n, make_field(p, t * n).modulus)
    labels = _label_digits(ctx, ctx.big.elements())
    b = ctx.small.digits_vec(np.arange(q))
    pw = p ** np.arange(t)
    rows = (labels[:, None, :, :] + b[None, :, None, :]) % p
    return (rows @ pw).reshape(q**n * q, q**n)


@dataclass(frozen=True)
class RhoResult:
    q: int
    n: int
    rho: int
    mu_coeff: Fraction
    sqrt_factor: int

    @property
    def mu(self) -> float:
        return float(self.mu_coeff) * math.sqrt(self.sqrt_factor)

    @property
    def mu_str(self) -> str:
        return format_sqrt(self.mu_coeff, self.sqrt_factor)

    def as_dict(self) -> dict:
        return {"q": self.q, "n": self.n, "rho": self.rho, "mu": self.mu_str, "mu_float": self.mu}


def format_sqrt(coeff: Fraction, radicand: int) -> str:
    if radicand == 1:
        return str(coeff)
    root = f"sqrt({radicand})"
    return root if coeff == 1 else f"{coeff}*{root}"


def exact_mu(q: int, n: int, nl: int) -> tuple[Fraction, int]:
    """mu = coeff * sqrt(radicand) exactly."""
    top = q ** (n - 1) * (q - 1) - nl
    if n % 2 == 0:
        return Fraction(top, q ** (n // 2 - 1)), 1
    # q^(1 - n/2) = q^((1 - n)/2) * sqrt(q)
    return Fraction(top, q ** ((n - 1) // 2)), q


def rho_exhaustive(q: int, n: int, max_functions: int = MAX_EXHAUSTIVE_FUNCTIONS) -> RhoResult:
    """Covering radius of the affine functions by enumerating every g."""
    size = q**n
    if q**size > max_functions:
        raise BudgetError(f"{q}^{size} functions exceed the enumeration budget {max_functions}")
    aff = affine_table(q, n)
    aff_hot = np.zeros((size * q, aff.shape[0]), dtype=np.float32)
    for h in range(aff.shape[0]):
        aff_hot[np.arange(size) * q + aff[h], h] = 1.0
    rho = 0
    total = q**size
    chunk = 1 << 12
    pw = q ** np.arange(size, dtype=np.int64)
    for s in range(0, total, chunk):
        codes = np.arange(s, min(s + chunk, total), dtype=np.int64)
        g = (codes[:, None] // pw[None, :]) % q
        hot = np.zeros((codes.size, size * q), dtype=np.float32)
        hot[np.arange(codes.size)[:, None], np.arange(size) * q + g] = 1.0
        agree = hot @ aff_hot
        rho = max(rho, int(size - np.rint(agree.max(axis=1)).min()))
    coeff, rad = exact_mu(q, n, rho)
    return RhoResult(q, n, rho, coeff, rad)


# -- certificate for the coset construction ----------------------------------

def fS_envelope(q: int, v: int, log=math.log) -> float:
    return 308 * q**2.5 * math.sqrt(log(2 * q * q * v) / v)


def mu_envelope(q: int, v: int, log=math.log) -> float:
    return 1 + 309 * q**2.5 * math.sqrt(log(2 * q * q * v) / v)


def measured_epsilon(table: FunctionTable, v: int) -> float:
    """max |G(chi)/q^(n/2) + 1| over nontrivial chi of order dividing v."""
    ctx = SpectralCtx.for_table(table)
    g = gauss_sums(ctx.big, v)[1:]
    return float(np.abs(g / math.sqrt(ctx.big.size) + 1).max())


def fT_term_max(table: FunctionTable, t_mask) -> float:
    """max over (a, b) of |sum_lam conj(eta(lam b)) fhat_T(lam a, lam)|."""
    ctx = SpectralCtx.for_table(table)
    m, _, _ = maximand(ctx, table.values, np.asarray(t_mask, dtype=np.float64))
    return float(np.abs(m).max())


def certify_construction(table: FunctionTable, v: int, t_mask, tol: float = 1e-9) -> dict:
    """Check every ingredient of the mu(f) decomposition against measurements."""
    ctx = SpectralCtx.for_table(table)
    q, n = ctx.q, ctx.n
    t_mask = np.asarray(t_mask, dtype=bool)
    s_mask = ~t_mask
    eps = measured_epsilon(table, v)

    lams = list(range(1, q))

    def one(lam):
        full = ctx.transform(table.values, lam)
        ft = ctx.transform(table.values, lam, t_mask.astype(np.float64))
        fs = ctx.transform(table.values, lam, s_mask.astype(np.float64))
        return full, ft, fs

    m_full = np.zeros((q, ctx.size), dtype=np.complex128)
    m_t = np.zeros_like(m_full)
    fs_max = resid = parseval = 0.0
    for lam, (full, ft, fs) in zip(lams, _parallel_map(one, lams)):
        resid = max(resid, float(np.abs(full - ft - fs).max()))
        fs_max = max(fs_max, float(np.abs(fs).max()))
        parseval = max(parseval, abs(float(np.vdot(full, full).real) - ctx.size) / ctx.size)
        row, perm = np.conj(ctx.eta_row(lam))[:, None], ctx.lam_perm(lam)
        m_full += row * full[perm][None, :]
        m_t += row * ft[perm][None, :]
    max_imag = float(np.abs(m_full.imag).max())
    if max_imag > IMAG_TOL * max(1.0, ctx.size**0.5):
        raise AssertionError(f"maximand has imaginary part {max_imag:.3g}")
    b, a = np.unravel_index(int(np.argmax(m_full.real)), m_full.shape)
    raw = float(m_full.real[b, a])
    nl = snap_nonlinearity(q, n, raw)
    mu = mu_from_nonlinearity(q, n, nl)
    ft_max = float(np.abs(m_t.real).max())

    ft_bound = 1 + eps * v * q
    decomposition = ft_bound + q * fs_max
    measured_decomposition = ft_max + (q - 1) * fs_max
    affine_mu = q ** (n / 2) * (q - 1)
    checks = {
        "fT_term_le_1_plus_eps_v_q": ft_max <= ft_bound + tol,
        "fS_hat_le_envelope": fs_max <= fS_envelope(q, v) + tol,
        "mu_le_decomposition": mu <= decomposition + tol,
        "mu_le_measured_decomposition": mu <= measured_decomposition + tol,
        "mu_below_affine": mu < affine_mu,
        "additivity_residual_small": resid < tol,
        "parseval": parseval <= PARSEVAL_RTOL,
    }
    coeff, rad = exact_mu(q, n, nl)
    return {
        "mu": mu,
        "mu_exact": format_sqrt(coeff, rad),
        "mu_raw": raw,
        "nonlinearity": nl,
        "witness_a": int(a),
        "witness_b": int(b),
        "epsilon": eps,
        "fT_term_max": ft_max,
        "fS_hat_max": fs_max,
        "additivity_residual": resid,
        "max_imag": max_imag,
        "parseval_max_rel": parseval,
        "bounds": {
            "fT_term": ft_bound,
            "decomposition": decomposition,
            "measured_decomposition": measured_decomposition,
            "affine_mu": affine_mu,
        },
        "envelopes": {
            "fS_hat": {"ln": fS_envelope(q, v), "log2": fS_envelope(q, v, math.log2)},
            "mu": {"ln": mu_envelope(q, v), "log2": mu_envelope(q, v, math.log2)},
        },
        "checks": checks,
        "passed": all(checks.values()),
    }
