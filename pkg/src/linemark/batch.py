"""Vectorized GF(2^n) arithmetic on numpy arrays.

The geometric solvers and the Monte Carlo experiments need millions of
field operations per run, far beyond what per-element objects can
sustain.  This module provides flat uint64-array arithmetic with two
strategies:

* n <= 16: discrete log/antilog tables (one-time O(2^n) build, then
  every operation is a table lookup);
* n >= 32: bit-sliced carry-less multiply plus modular reduction, with
  batch inversion via a product tree (3 multiplies per element plus a
  single scalar Fermat inversion at the root).

Results agree bit-for-bit with the scalar `field` module; the test
suite cross-checks them on random samples at every supported width.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .field import FieldElement, FieldSpec, _clmul_mod

__all__ = ["backend", "rand_elements"]

_ALL1 = np.uint64(0xFFFFFFFFFFFFFFFF)
_U64 = np.uint64


def _scalar_pow(base: int, e: int, modulus: int, n: int) -> int:
    r = 1
    while e:
        if e & 1:
            r = _clmul_mod(r, base, modulus, n)
        base = _clmul_mod(base, base, modulus, n)
        e >>= 1
    return r


def _scalar_inv(a: int, modulus: int, n: int) -> int:
    if a == 0:
        raise ZeroDivisionError("zero has no multiplicative inverse")
    return _scalar_pow(a, (1 << n) - 2, modulus, n)


class _TableBackend:
    """Log/antilog tables for n <= 16."""

    def __init__(self, spec: FieldSpec):
        self.spec = spec
        n, mod = spec.n, spec.modulus
        order = spec.order
        g = self._find_generator(n, mod)
        exp = np.zeros(2 * (order - 1), dtype=np.uint64)
        log = np.zeros(order, dtype=np.int64)
        v = 1
        for i in range(order - 1):
            exp[i] = v
            log[v] = i
            v = _clmul_mod(v, g, mod, n)
        exp[order - 1 :] = exp[: order - 1]
        self._exp = exp
        self._log = log
        self._group = order - 1

    @staticmethod
    def _find_generator(n: int, mod: int) -> int:
        group = (1 << n) - 1
        factors = []
        m, d = group, 2
        while d * d <= m:
            if m % d == 0:
                factors.append(d)
                while m % d == 0:
                    m //= d
            d += 1
        if m > 1:
            factors.append(m)
        g = 2
        while any(_scalar_pow(g, group // p, mod, n) == 1 for p in factors):
            g += 1
        return g

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.uint64)
        b = np.asarray(b, dtype=np.uint64)
        zero = (a == 0) | (b == 0)
        la = self._log[np.where(zero, 1, a).astype(np.int64)]
        lb = self._log[np.where(zero, 1, b).astype(np.int64)]
        out = self._exp[la + lb]
        return np.where(zero, _U64(0), out)

    def scalar_mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self._exp[int(self._log[a]) + int(self._log[b])])

    def scalar_inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        return int(self._exp[self._group - int(self._log[a])])

    def inv(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.uint64)
        if np.any(a == 0):
            raise ZeroDivisionError("zero has no multiplicative inverse")
        return self._exp[self._group - self._log[a.astype(np.int64)]]

    def slope(self, dy: np.ndarray, dx: np.ndarray) -> np.ndarray:
        """dy / dx with dx nonzero; dy may be zero."""
        dy = np.asarray(dy, dtype=np.uint64)
        dx = np.asarray(dx, dtype=np.uint64)
        zero = dy == 0
        ld = self._log[np.where(zero, 1, dy).astype(np.int64)]
        lx = self._log[dx.astype(np.int64)]
        out = self._exp[(ld - lx) % self._group]
        return np.where(zero, _U64(0), out)


class _ScalarOpsMixin:
    def scalar_mul(self, a: int, b: int) -> int:
        return _clmul_mod(a, b, self.spec.modulus, self.spec.n)

    def scalar_inv(self, a: int) -> int:
        return _scalar_inv(a, self.spec.modulus, self.spec.n)


class _Clmul32Backend(_ScalarOpsMixin):
    """Shift-and-reduce for 17 <= n <= 32; products fit in one uint64."""

    def __init__(self, spec: FieldSpec):
        self.spec = spec

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        n = self.spec.n
        a = np.asarray(a, dtype=np.uint64)
        b = np.asarray(b, dtype=np.uint64)
        a, b = np.broadcast_arrays(a, b)
        r = np.zeros(a.shape, dtype=np.uint64)
        for k in range(n):
            mask = ((b >> _U64(k)) & _U64(1)) * _ALL1
            r ^= (a << _U64(k)) & mask
        mod = self.spec.modulus
        for i in range(2 * n - 2, n - 1, -1):
            mask = ((r >> _U64(i)) & _U64(1)) * _ALL1
            r ^= _U64(mod << (i - n)) & mask
        return r

    def inv(self, a: np.ndarray) -> np.ndarray:
        return _tree_inverse(self, np.asarray(a, dtype=np.uint64))

    def slope(self, dy: np.ndarray, dx: np.ndarray) -> np.ndarray:
        return self.mul(np.asarray(dy, dtype=np.uint64), self.inv(dx))


class _Clmul64Backend(_ScalarOpsMixin):
    """Shift-and-reduce for 33 <= n <= 64; products held as (hi, lo) pairs."""

    def __init__(self, spec: FieldSpec):
        self.spec = spec
        n, mod = spec.n, spec.modulus
        # Per reducible bit position i, the modulus shifted to align its
        # top bit with i, split across the 64-bit word boundary.
        self._reduce_steps = []
        for i in range(2 * n - 2, n - 1, -1):
            shifted = mod << (i - n)
            self._reduce_steps.append(
                (i, _U64(shifted & 0xFFFFFFFFFFFFFFFF), _U64(shifted >> 64))
            )

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        n = self.spec.n
        a = np.asarray(a, dtype=np.uint64)
        b = np.asarray(b, dtype=np.uint64)
        a, b = np.broadcast_arrays(a, b)
        lo = np.zeros(a.shape, dtype=np.uint64)
        hi = np.zeros(a.shape, dtype=np.uint64)
        for k in range(n):
            mask = ((b >> _U64(k)) & _U64(1)) * _ALL1
            lo ^= (a << _U64(k)) & mask
            if k:
                hi ^= (a >> _U64(64 - k)) & mask
        for i, mlo, mhi in self._reduce_steps:
            if i >= 64:
                bit = (hi >> _U64(i - 64)) & _U64(1)
            else:
                bit = (lo >> _U64(i)) & _U64(1)
            mask = bit * _ALL1
            lo ^= mlo & mask
            hi ^= mhi & mask
        return lo

    def inv(self, a: np.ndarray) -> np.ndarray:
        return _tree_inverse(self, np.asarray(a, dtype=np.uint64))

    def slope(self, dy: np.ndarray, dx: np.ndarray) -> np.ndarray:
        return self.mul(np.asarray(dy, dtype=np.uint64), self.inv(dx))


def _tree_inverse(be, a: np.ndarray) -> np.ndarray:
    """Batch inversion: pairwise product tree up, unwind with two
    multiplies per node down, one scalar inversion at the root."""
    if np.any(a == 0):
        raise ZeroDivisionError("zero has no multiplicative inverse")
    m = len(a)
    if m == 0:
        return a.copy()
    size = 1 << max(0, (m - 1).bit_length())
    padded = np.ones(size, dtype=np.uint64)
    padded[:m] = a
    levels = [padded]
    cur = padded
    while len(cur) > 1:
        cur = be.mul(cur[0::2], cur[1::2])
        levels.append(cur)
    root = _scalar_inv(int(cur[0]), be.spec.modulus, be.spec.n)
    inv_cur = np.array([root], dtype=np.uint64)
    for level in reversed(levels[:-1]):
        left, right = level[0::2], level[1::2]
        nxt = np.empty(len(level), dtype=np.uint64)
        nxt[0::2] = be.mul(inv_cur, right)
        nxt[1::2] = be.mul(inv_cur, left)
        inv_cur = nxt
    return inv_cur[:m]


@lru_cache(maxsize=None)
def backend(spec: FieldSpec):
    """The vectorized arithmetic backend for a field spec (cached)."""
    if spec.n <= 16:
        return _TableBackend(spec)
    if spec.n <= 32:
        return _Clmul32Backend(spec)
    return _Clmul64Backend(spec)


def rand_elements(spec: FieldSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform random field elements as a uint64 array."""
    if spec.n < 64:
        return rng.integers(0, spec.order, size, dtype=np.uint64)
    lo = rng.integers(0, 1 << 32, size, dtype=np.uint64)
    hi = rng.integers(0, 1 << 32, size, dtype=np.uint64)
    return (hi << _U64(32)) | lo


def elements_to_array(elements) -> np.ndarray:
    """Values of an iterable of FieldElements as a uint64 array."""
    return np.fromiter((e.value for e in elements), dtype=np.uint64)


def array_to_elements(values: np.ndarray, spec: FieldSpec) -> list[FieldElement]:
    return [FieldElement(int(v), spec) for v in values]
