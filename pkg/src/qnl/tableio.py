"""Function tables F_{q^n} -> F_q and the QNLF binary format.

Layout (all integers unsigned 32-bit little-endian)::

    b"QNLF" | p | t | n | d | d+1 modulus coefficient octets | q^n value octets

``d`` is the degree of the modulus of F_{q^n} = F_{p^(t n)}, coefficients are
listed from the constant term up, and values are indices into F_q (built from
its smallest irreducible modulus) in ascending element-index order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError
from .ff import FieldCtx, make_field

MAGIC = b"QNLF"
_HEADER = struct.Struct("<4sIIII")


@dataclass(eq=False)
class FunctionTable:
    p: int
    t: int
    n: int
    modulus: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        self.modulus = tuple(int(c) for c in self.modulus)
        self.values = np.asarray(self.values, dtype=np.int64)
        if len(self.modulus) != self.t * self.n + 1:
            raise FormatError("modulus degree must equal t*n")
        if self.values.shape != (self.q**self.n,):
            raise FormatError(f"expected {self.q**self.n} values, got {self.values.shape}")
        if self.values.size and (self.values.min() < 0 or self.values.max() >= self.q):
            raise FormatError("table values must lie in [0, q)")

    @property
    def q(self) -> int:
        return self.p**self.t

    @property
    def size(self) -> int:
        return self.q**self.n

    def big_field(self, log_cap: int | None = None) -> FieldCtx:
        kw = {} if log_cap is None else {"log_cap": log_cap}
        return make_field(self.p, self.t * self.n, modulus=self.modulus, **kw)

    def small_field(self) -> FieldCtx:
        return make_field(self.p, self.t)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FunctionTable):
            return NotImplemented
        return (self.p, self.t, self.n, self.modulus) == (other.p, other.t, other.n, other.modulus) \
            and np.array_equal(self.values, other.values)


def to_bytes(table: FunctionTable) -> bytes:
    if table.p > 255 or table.q > 256:
        raise FormatError("QNLF stores coefficients and values in single octets")
    d = len(table.modulus) - 1
    head = _HEADER.pack(MAGIC, table.p, table.t, table.n, d)
    return head + bytes(table.modulus) + table.values.astype(np.uint8).tobytes()


def from_bytes(data: bytes) -> FunctionTable:
    if len(data) < _HEADER.size:
        raise FormatError("file too short for a QNLF header")
    magic, p, t, n, d = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if p < 2 or t < 1 or n < 1 or d != t * n:
        raise FormatError(f"inconsistent header p={p} t={t} n={n} d={d}")
    pos = _HEADER.size
    body = data[pos:]
    try:
        count = (p**t) ** n
    except OverflowError as exc:  # pragma: no cover
        raise FormatError("table too large") from exc
    if len(body) != d + 1 + count:
        raise FormatError(f"expected {d + 1 + count} payload octets, found {len(body)}")
    modulus = tuple(body[:d + 1])
    if max(modulus) >= p or modulus[-1] != 1:
        raise FormatError("modulus coefficients out of range or not monic")
    values = np.frombuffer(body[d + 1:], dtype=np.uint8).astype(np.int64)
    return FunctionTable(p, t, n, modulus, values)


def write_table(table: FunctionTable, path) -> None:
    Path(path).write_bytes(to_bytes(table))


def read_table(path) -> FunctionTable:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    return from_bytes(data)
