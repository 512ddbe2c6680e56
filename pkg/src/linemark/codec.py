"""Hash-derived material: token partition bits, x-coordinate derivation,
identity encoding, and bit packing.

All hashing is single-shot SHA3-256.  Token IDs are serialized as
8-byte big-endian integers before hashing so every vocabulary size
hashes identically.  The two roles use the two concatenation orders
they are defined with: key-first for the partition bit, token-first
for the x-coordinate.  Bit order is big-endian throughout.
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .field import FieldElement, FieldSpec
from .poly import Polynomial

__all__ = [
    "KEY_BYTES",
    "SecretKey",
    "Identity",
    "partition_bit",
    "partition_table",
    "partition_ids",
    "derive_x",
    "encode_identity",
    "decode_identity",
    "value_bits",
    "bits_value",
]

KEY_BYTES = 16


@dataclass(frozen=True)
class SecretKey:
    """A 128-bit watermarking key."""

    data: bytes

    def __post_init__(self) -> None:
        if len(self.data) != KEY_BYTES:
            raise ValueError(
                f"secret key must be {KEY_BYTES} bytes, got {len(self.data)}"
            )

    @classmethod
    def generate(cls) -> SecretKey:
        return cls(secrets.token_bytes(KEY_BYTES))

    @classmethod
    def from_hex(cls, s: str) -> SecretKey:
        try:
            raw = bytes.fromhex(s.strip())
        except ValueError as e:
            raise ValueError(f"key is not valid hex: {e}") from None
        return cls(raw)

    def to_hex(self) -> str:
        return self.data.hex()


def _token_bytes(token: int) -> bytes:
    if token < 0:
        raise ValueError("token ids are non-negative")
    return token.to_bytes(8, "big")


def partition_bit(token: int, key: SecretKey) -> int:
    """The vocabulary-half bit of a token: the XOR of all 256 digest
    bits of SHA3-256(key || token)."""
    digest = hashlib.sha3_256(key.data + _token_bytes(token)).digest()
    return int.from_bytes(digest, "big").bit_count() & 1


@lru_cache(maxsize=8)
def partition_table(key: SecretKey, vocab_size: int) -> np.ndarray:
    """Partition bit of every token id below vocab_size (uint8 array)."""
    bits = np.empty(vocab_size, dtype=np.uint8)
    data = key.data
    h = hashlib.sha3_256
    for t in range(vocab_size):
        d = h(data + t.to_bytes(8, "big")).digest()
        bits[t] = int.from_bytes(d, "big").bit_count() & 1
    bits.setflags(write=False)
    return bits


@lru_cache(maxsize=8)
def partition_ids(key: SecretKey, vocab_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Token ids carrying bit 0 and bit 1, as two arrays."""
    bits = partition_table(key, vocab_size)
    ids0 = np.nonzero(bits == 0)[0]
    ids1 = np.nonzero(bits == 1)[0]
    ids0.setflags(write=False)
    ids1.setflags(write=False)
    return ids0, ids1


def derive_x(prev_token: int, key: SecretKey, spec: FieldSpec) -> FieldElement:
    """The hash-derived x-coordinate seeded by the preceding token: the
    first n bits (big-endian) of SHA3-256(token || key)."""
    digest = hashlib.sha3_256(_token_bytes(prev_token) + key.data).digest()
    value = int.from_bytes(digest, "big") >> (256 - spec.n)
    return FieldElement(value, spec)


# ---------------------------------------------------------------------------
# Identity <-> bits <-> field elements.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Identity:
    """The multi-bit secret: a fixed-length coefficient vector
    (a_0, ..., a_{t-1}), serialized as the t*n-bit string a_0 || ... || a_{t-1}."""

    poly: Polynomial

    @property
    def spec(self) -> FieldSpec:
        return self.poly.spec

    @property
    def t(self) -> int:
        return len(self.poly.coeffs)

    @property
    def bit_length(self) -> int:
        return self.t * self.spec.n

    def to_bits(self) -> list[int]:
        bits: list[int] = []
        for c in self.poly.coeffs:
            bits.extend(value_bits(c))
        return bits

    def to_bytes(self) -> bytes:
        nbits = self.bit_length
        nbytes = -(-nbits // 8)
        acc = 0
        for b in self.to_bits():
            acc = (acc << 1) | b
        return acc.to_bytes(nbytes, "big")

    def to_hex(self) -> str:
        return self.to_bytes().hex()

    @classmethod
    def from_hex(cls, s: str, spec: FieldSpec, t: int = 2) -> Identity:
        nbits = t * spec.n
        nbytes = -(-nbits // 8)
        raw = bytes.fromhex(s.strip())
        if len(raw) != nbytes:
            raise ValueError(
                f"identity hex must encode {nbytes} bytes for t={t}, n={spec.n}"
            )
        acc = int.from_bytes(raw, "big")
        if acc >> nbits:
            raise ValueError(f"identity value exceeds {nbits} bits")
        bits = [(acc >> (nbits - 1 - i)) & 1 for i in range(nbits)]
        return encode_identity(bits, spec, t)

    @classmethod
    def random(cls, spec: FieldSpec, t: int = 2, rng: np.random.Generator | None = None) -> Identity:
        if rng is None:
            values = [secrets.randbelow(spec.order) for _ in range(t)]
        else:
            values = [int(rng.integers(0, 1 << 32)) << 32 | int(rng.integers(0, 1 << 32))
                      for _ in range(t)]
            values = [v & (spec.order - 1) for v in values]
        return cls(Polynomial(tuple(FieldElement(v, spec) for v in values)))


def encode_identity(bits: Sequence[int], spec: FieldSpec, t: int = 2) -> Identity:
    """Split a t*n-bit string big-endian into t coefficients."""
    n = spec.n
    if len(bits) != t * n:
        raise ValueError(f"identity needs exactly {t * n} bits, got {len(bits)}")
    coeffs = tuple(
        bits_value(bits[i * n : (i + 1) * n], spec) for i in range(t)
    )
    return Identity(Polynomial(coeffs))


def decode_identity(identity: Identity) -> list[int]:
    """Inverse of encode_identity."""
    return identity.to_bits()


def value_bits(y: FieldElement) -> list[int]:
    """Big-endian bit expansion of a field element (n bits)."""
    n = y.spec.n
    v = y.value
    return [(v >> (n - 1 - i)) & 1 for i in range(n)]


def bits_value(bits: Sequence[int], spec: FieldSpec) -> FieldElement:
    """Inverse of value_bits."""
    if len(bits) != spec.n:
        raise ValueError(f"need exactly {spec.n} bits, got {len(bits)}")
    v = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError("bits must be 0 or 1")
        v = (v << 1) | b
    return FieldElement(v, spec)
