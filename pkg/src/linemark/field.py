"""Exact arithmetic in GF(2^n).

Elements are n-bit integers whose binary digits are coefficients of a
polynomial over GF(2); arithmetic is carry-less and reduced modulo a
fixed irreducible polynomial per supported width.  One canonical
modulus is declared per width so that serialized elements are
interoperable: the lexicographically smallest irreducible polynomial
of each degree (which for n=8 is the widely tabulated 0x11B).

Addition is XOR.  Multiplication is shift-and-reduce, constant work
per operation for every width.  Inversion uses Fermat exponentiation
a^(2^n - 2).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

__all__ = [
    "SUPPORTED_WIDTHS",
    "CANONICAL_MODULI",
    "FieldSpec",
    "FieldElement",
    "FieldMismatchError",
    "UnsupportedWidthError",
    "field_spec",
]

# Canonical irreducible polynomial per width, encoded as an (n+1)-bit
# integer with both the top and the constant bit set.
CANONICAL_MODULI: dict[int, int] = {
    6: 0x43,                    # x^6 + x + 1
    8: 0x11B,                   # x^8 + x^4 + x^3 + x + 1
    12: 0x1009,                 # x^12 + x^3 + 1
    16: 0x1002B,                # x^16 + x^5 + x^3 + x + 1
    32: 0x10000008D,            # x^32 + x^7 + x^3 + x^2 + 1
    64: 0x1000000000000001B,    # x^64 + x^4 + x^3 + x + 1
}

SUPPORTED_WIDTHS = frozenset(CANONICAL_MODULI)


class UnsupportedWidthError(ValueError):
    """Requested field width is not in the supported set."""


class FieldMismatchError(ValueError):
    """Operands belong to different field specs."""


# ---------------------------------------------------------------------------
# Raw polynomial helpers over GF(2), operating on plain ints.
# ---------------------------------------------------------------------------

def _clmul_mod(a: int, b: int, modulus: int, n: int) -> int:
    """Carry-less a*b reduced modulo `modulus` (degree n)."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if (a >> n) & 1:
            a ^= modulus
    return r


def _poly_mod(p: int, m: int) -> int:
    dm = m.bit_length() - 1
    while p and p.bit_length() - 1 >= dm:
        p ^= m << (p.bit_length() - 1 - dm)
    return p


def _poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, _poly_mod(a, b)
    return a


def _square_mod(a: int, modulus: int) -> int:
    # Squaring over GF(2) spreads the bits of a, then reduces.
    r = 0
    i = 0
    while a:
        if a & 1:
            r |= 1 << (2 * i)
        a >>= 1
        i += 1
    return _poly_mod(r, modulus)


def _prime_factors(n: int) -> list[int]:
    ps = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            ps.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        ps.append(n)
    return ps


def is_irreducible(modulus: int, n: int) -> bool:
    """Whether `modulus` is irreducible of degree n over GF(2).

    Exhaustive trial division for n <= 16; the Rabin polynomial
    primality test (x^(2^n) = x mod f, plus coprimality at the maximal
    proper subfield levels) for larger widths.
    """
    if modulus.bit_length() - 1 != n or not modulus & 1:
        return False
    if n <= 16:
        for k in range(1, n // 2 + 1):
            for d in range(1 << k, 1 << (k + 1)):
                if _poly_mod(modulus, d) == 0:
                    return False
        return True
    x = 2
    cur = x
    checkpoints = {n // p for p in _prime_factors(n)}
    for k in range(1, n + 1):
        cur = _square_mod(cur, modulus)  # cur = x^(2^k) mod f
        if k in checkpoints and _poly_gcd(cur ^ x, modulus) != 1:
            return False
    return cur == x


# ---------------------------------------------------------------------------
# Field spec and elements.
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class FieldSpec:
    """A GF(2^n) instance: bit width plus irreducible modulus."""

    n: int
    modulus: int

    def __post_init__(self) -> None:
        if self.n not in SUPPORTED_WIDTHS:
            raise UnsupportedWidthError(
                f"unsupported field width n={self.n}; "
                f"supported widths are {sorted(SUPPORTED_WIDTHS)}"
            )
        if not is_irreducible(self.modulus, self.n):
            raise ValueError(
                f"modulus {self.modulus:#x} is not an irreducible "
                f"polynomial of degree {self.n} over GF(2)"
            )

    @property
    def order(self) -> int:
        return 1 << self.n

    @property
    def hex_digits(self) -> int:
        return -(-self.n // 4)

    def el(self, value: int) -> FieldElement:
        return FieldElement(value, self)

    def zero(self) -> FieldElement:
        return FieldElement(0, self)

    def one(self) -> FieldElement:
        return FieldElement(1, self)

    def from_hex(self, s: str) -> FieldElement:
        return FieldElement(int(s, 16), self)

    def to_json(self) -> dict:
        return {"n": self.n, "modulus": f"{self.modulus:x}"}

    @classmethod
    def from_json(cls, obj: dict) -> FieldSpec:
        return cls(int(obj["n"]), int(obj["modulus"], 16))


@lru_cache(maxsize=None)
def field_spec(n: int) -> FieldSpec:
    """The canonical GF(2^n) spec for a supported width."""
    if n not in SUPPORTED_WIDTHS:
        raise UnsupportedWidthError(
            f"unsupported field width n={n}; "
            f"supported widths are {sorted(SUPPORTED_WIDTHS)}"
        )
    return FieldSpec(n, CANONICAL_MODULI[n])


@dataclass(frozen=True, slots=True)
class FieldElement:
    """An element of a specific GF(2^n)."""

    value: int
    spec: FieldSpec

    def __post_init__(self) -> None:
        if not 0 <= self.value < self.spec.order:
            raise ValueError(
                f"value {self.value:#x} out of range for GF(2^{self.spec.n})"
            )

    def _check(self, other: FieldElement) -> None:
        if not isinstance(other, FieldElement):
            raise TypeError(f"expected FieldElement, got {type(other).__name__}")
        if other.spec != self.spec:
            raise FieldMismatchError(
                f"cannot mix elements of GF(2^{self.spec.n}) "
                f"and GF(2^{other.spec.n})"
            )

    def __add__(self, other: FieldElement) -> FieldElement:
        self._check(other)
        return FieldElement(self.value ^ other.value, self.spec)

    # Subtraction equals addition in characteristic 2.
    __sub__ = __add__

    def __mul__(self, other: FieldElement) -> FieldElement:
        self._check(other)
        return FieldElement(
            _clmul_mod(self.value, other.value, self.spec.modulus, self.spec.n),
            self.spec,
        )

    def inverse(self) -> FieldElement:
        if self.value == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        # Fermat: a^(2^n - 2) via square-and-multiply.
        n, mod = self.spec.n, self.spec.modulus
        e = (1 << n) - 2
        r, b = 1, self.value
        while e:
            if e & 1:
                r = _clmul_mod(r, b, mod, n)
            b = _clmul_mod(b, b, mod, n)
            e >>= 1
        return FieldElement(r, self.spec)

    def __truediv__(self, other: FieldElement) -> FieldElement:
        self._check(other)
        return self * other.inverse()

    def __bool__(self) -> bool:
        return self.value != 0

    def to_hex(self) -> str:
        return f"{self.value:0{self.spec.hex_digits}x}"

    def __repr__(self) -> str:
        return f"FieldElement(0x{self.to_hex()}, n={self.spec.n})"


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a + b


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    return a * b


def inv(a: FieldElement) -> FieldElement:
    return a.inverse()
