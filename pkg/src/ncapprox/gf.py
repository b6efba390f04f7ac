"""Arithmetic in binary Galois fields GF(2^k), with source-resolution reduction.

A field is described by the source bit width ``r``, the number of discarded
low-order bits ``z`` and a reduction polynomial.  Coding arithmetic happens
in the effective field GF(2^(r - z)): ``embed`` maps an r-bit sample into it
by dropping the z least significant bits, and ``lift`` maps a field element
back to sample scale, adding the midpoint offset 2^(z-1) so the worst-case
reconstruction error is half of what zero filling would give.

Addition is XOR.  Multiplication uses log/antilog tables built from a
multiplicative generator, so inner loops of Gaussian elimination are table
lookups.  All objects are immutable after construction and every operation
is a pure function; fields and elements can be shared across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "DEFAULT_POLYS",
    "FieldMismatchError",
    "GFElement",
    "GaloisField",
    "embed",
    "field",
    "gf_add",
    "gf_inv",
    "gf_mul",
    "is_irreducible",
    "lift",
]


class FieldMismatchError(ValueError):
    """Combining elements or structures that belong to different fields."""


# One fixed reduction polynomial per field width so results are bit-exact
# across runs and machines.  All entries are irreducible over GF(2); any
# other irreducible polynomial of the right degree may be passed explicitly.
DEFAULT_POLYS: dict[int, int] = {
    1: 0x3,        # x + 1
    2: 0x7,        # x^2 + x + 1
    3: 0xB,        # x^3 + x + 1
    4: 0x13,       # x^4 + x + 1
    5: 0x25,       # x^5 + x^2 + 1
    6: 0x43,       # x^6 + x + 1
    7: 0x83,       # x^7 + x + 1
    8: 0x11B,      # x^8 + x^4 + x^3 + x + 1
    9: 0x211,      # x^9 + x^4 + 1
    10: 0x409,     # x^10 + x^3 + 1
    11: 0x805,     # x^11 + x^2 + 1
    12: 0x1053,    # x^12 + x^6 + x^4 + x + 1
    13: 0x201B,    # x^13 + x^4 + x^3 + x + 1
    14: 0x4443,    # x^14 + x^10 + x^6 + x + 1
    15: 0x8003,    # x^15 + x + 1
    16: 0x1100B,   # x^16 + x^12 + x^3 + x + 1
}


def _poly_degree(p: int) -> int:
    return p.bit_length() - 1


def _clmul(a: int, b: int) -> int:
    """Carry-less (polynomial) product of two bit-encoded polynomials."""
    acc = 0
    while b:
        if b & 1:
            acc ^= a
        a <<= 1
        b >>= 1
    return acc


def _poly_rem(a: int, m: int) -> int:
    dm = _poly_degree(m)
    while a and _poly_degree(a) >= dm:
        a ^= m << (_poly_degree(a) - dm)
    return a


def is_irreducible(poly: int) -> bool:
    """Exhaustive trial division by every polynomial of degree 1..deg/2."""
    d = _poly_degree(poly)
    if d < 1:
        return False
    for cand in range(2, 1 << (d // 2 + 1)):
        if _poly_rem(poly, cand) == 0:
            return False
    return True


def _prime_factors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


class GaloisField:
    """GF(2^(r - z)) arithmetic plus the sample <-> element mappings.

    Parameters
    ----------
    r : source sample bit width, 1..16.
    z : number of discarded least-significant sample bits, 0..r-1.
    poly : reduction polynomial for the effective field, degree r - z.
        Defaults to the fixed table entry for that width.
    """

    def __init__(self, r: int, z: int = 0, poly: int | None = None):
        if not 1 <= r <= 16:
            raise ValueError(f"source bit width r={r} outside 1..16")
        if not 0 <= z <= r - 1:
            raise ValueError(f"discarded bits z={z} outside 0..{r - 1}")
        self.r = r
        self.z = z
        self.bits = r - z
        self.order = 1 << self.bits
        self.poly = DEFAULT_POLYS[self.bits] if poly is None else int(poly)
        if _poly_degree(self.poly) != self.bits:
            raise ValueError(
                f"reduction polynomial 0x{self.poly:X} has degree "
                f"{_poly_degree(self.poly)}, field needs degree {self.bits}"
            )
        if not is_irreducible(self.poly):
            raise ValueError(f"0x{self.poly:X} is reducible over GF(2)")
        self._build_tables()

    # -- construction ------------------------------------------------------

    def _mul_raw(self, a: int, b: int) -> int:
        return _poly_rem(_clmul(a, b), self.poly)

    def _pow_raw(self, a: int, e: int) -> int:
        out = 1
        while e:
            if e & 1:
                out = self._mul_raw(out, a)
            a = self._mul_raw(a, a)
            e >>= 1
        return out

    def _find_generator(self) -> int:
        n = self.order - 1
        if n == 1:
            return 1
        factors = _prime_factors(n)
        for g in range(2, self.order):
            if all(self._pow_raw(g, n // p) != 1 for p in factors):
                return g
        raise AssertionError("irreducible modulus always admits a generator")

    def _build_tables(self) -> None:
        q = self.order
        self.generator = g = self._find_generator()
        exp = [0] * (2 * q)
        log = [0] * q  # log[0] stays 0 as an index sentinel, never read as a log
        v = 1
        for i in range(q - 1):
            exp[i] = v
            log[v] = i
            v = self._mul_raw(v, g)
        for i in range(q - 1, 2 * q):
            exp[i] = exp[i - (q - 1)]
        self._exp_list = exp
        self._log_list = log
        self._exp = np.array(exp, dtype=np.int64)
        self._log = np.array(log, dtype=np.int64)

    # -- identity / comparison --------------------------------------------

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, GaloisField)
            and (self.r, self.z, self.poly) == (other.r, other.z, other.poly)
        )

    def __hash__(self) -> int:
        return hash((self.r, self.z, self.poly))

    def __repr__(self) -> str:
        return f"GaloisField(r={self.r}, z={self.z}, poly=0x{self.poly:X})"

    # -- scalar arithmetic on plain ints -----------------------------------

    def add(self, a: int, b: int) -> int:
        return a ^ b

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self._exp_list[self._log_list[a] + self._log_list[b]]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no multiplicative inverse")
        return self._exp_list[self.order - 1 - self._log_list[a]]

    def elements(self) -> range:
        return range(self.order)

    # -- vectorised arithmetic on integer ndarrays --------------------------

    def mul_arrays(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Elementwise product; shapes broadcast as usual."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = self._exp[self._log[a] + self._log[b]]
        return np.where((a != 0) & (b != 0), out, 0)

    def scale(self, arr: np.ndarray, c: int) -> np.ndarray:
        """Product of every entry with the scalar ``c``."""
        arr = np.asarray(arr, dtype=np.int64)
        if c == 0:
            return np.zeros_like(arr)
        out = self._exp[self._log[arr] + self._log_list[c]]
        return np.where(arr != 0, out, 0)

    def outer(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Outer product table of two vectors."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        out = self._exp[self._log[u][:, None] + self._log[v][None, :]]
        return np.where((u != 0)[:, None] & (v != 0)[None, :], out, 0)

    def dot(self, a: np.ndarray, b: np.ndarray) -> int:
        """XOR-accumulated inner product of two vectors."""
        return int(np.bitwise_xor.reduce(self.mul_arrays(a, b)))

    # -- sample <-> element mappings ----------------------------------------

    @property
    def lift_offset(self) -> int:
        return 1 << (self.z - 1) if self.z else 0

    def embed(self, s: int) -> int:
        if not 0 <= s < (1 << self.r):
            raise ValueError(f"sample {s} outside [0, 2^{self.r})")
        return s >> self.z

    def lift(self, x: int) -> int:
        return (x << self.z) + self.lift_offset

    def embed_array(self, samples: np.ndarray) -> np.ndarray:
        samples = np.asarray(samples, dtype=np.int64)
        if samples.size and (samples.min() < 0 or samples.max() >= (1 << self.r)):
            raise ValueError(f"samples outside [0, 2^{self.r})")
        return samples >> self.z

    def lift_array(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.int64)
        return (values << self.z) + self.lift_offset

    # -- config serialisation ------------------------------------------------

    def config_items(self) -> dict[str, str]:
        return {"r": str(self.r), "poly": f"0x{self.poly:X}", "z": str(self.z)}

    @classmethod
    def from_config(cls, mapping: dict[str, str]) -> "GaloisField":
        r = int(mapping["r"])
        z = int(mapping.get("z", "0"))
        poly = mapping.get("poly")
        return cls(r, z, int(poly, 0) if poly is not None else None)

    def element(self, value: int) -> "GFElement":
        return GFElement(value, self)


@lru_cache(maxsize=None)
def field(r: int, z: int = 0, poly: int | None = None) -> GaloisField:
    """Shared, cached field instance (construction builds lookup tables)."""
    return GaloisField(r, z, poly)


@dataclass(frozen=True)
class GFElement:
    """A single element of a :class:`GaloisField`.

    Operations between elements of different fields raise
    :class:`FieldMismatchError`; the usual operators are provided.
    """

    value: int
    field: GaloisField

    def __post_init__(self):
        if not 0 <= self.value < self.field.order:
            raise ValueError(
                f"value {self.value} outside field of order {self.field.order}"
            )

    def _check(self, other: "GFElement") -> None:
        if not isinstance(other, GFElement):
            raise TypeError(f"expected GFElement, got {type(other).__name__}")
        if other.field != self.field:
            raise FieldMismatchError(f"{self.field!r} vs {other.field!r}")

    def __add__(self, other: "GFElement") -> "GFElement":
        self._check(other)
        return GFElement(self.value ^ other.value, self.field)

    __sub__ = __add__  # characteristic 2: every element is its own negative

    def __mul__(self, other: "GFElement") -> "GFElement":
        self._check(other)
        return GFElement(self.field.mul(self.value, other.value), self.field)

    def inverse(self) -> "GFElement":
        return GFElement(self.field.inv(self.value), self.field)

    def lift(self) -> int:
        return self.field.lift(self.value)

    def __repr__(self) -> str:
        return f"GFElement(0x{self.value:X} in GF(2^{self.field.bits}))"


def gf_add(a: GFElement, b: GFElement) -> GFElement:
    """Field addition (XOR); self-inverse."""
    return a + b


def gf_mul(a: GFElement, b: GFElement) -> GFElement:
    """Field multiplication modulo the reduction polynomial."""
    return a * b


def gf_inv(a: GFElement) -> GFElement:
    """Multiplicative inverse; raises ZeroDivisionError for 0."""
    return a.inverse()


def embed(s: int, fld: GaloisField) -> GFElement:
    """Map an r-bit sample into the field by discarding the z low bits."""
    return GFElement(fld.embed(s), fld)


def lift(x: GFElement) -> int:
    """Map a field element back to sample scale (midpoint reconstruction)."""
    return x.lift()
