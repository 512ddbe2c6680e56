"""Polynomials over GF(2^n): Horner evaluation and Lagrange interpolation.

Interpolation uses the direct Lagrange basis construction
f(x) = sum_j y_j * l_j(x) with l_j(x) = prod_{m != j} (x - x_m)/(x_j - x_m),
which is exact in the field and cheap at the small degrees used here.
"""

from __future__ import annotations

from dataclasses import dataclass

from .field import FieldElement, FieldMismatchError, FieldSpec

__all__ = ["Polynomial", "Point", "InconsistentPointsError", "evaluate", "interpolate"]


class InconsistentPointsError(ValueError):
    """Two points share an x-coordinate but disagree on y."""


@dataclass(frozen=True)
class Polynomial:
    """Coefficients low-to-high: coeffs[i] multiplies x^i.

    Trailing zero coefficients are kept as-is; fixed-length encodings
    (identities) rely on the length never being trimmed.
    """

    coeffs: tuple[FieldElement, ...]

    def __post_init__(self) -> None:
        if not self.coeffs:
            raise ValueError("polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", tuple(self.coeffs))
        spec = self.coeffs[0].spec
        if any(c.spec != spec for c in self.coeffs):
            raise FieldMismatchError("polynomial coefficients must share one field")

    @property
    def spec(self) -> FieldSpec:
        return self.coeffs[0].spec

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x: FieldElement) -> FieldElement:
        return evaluate(self, x)

    def to_json(self) -> list[str]:
        return [c.to_hex() for c in self.coeffs]

    @classmethod
    def from_json(cls, coeffs: list[str], spec: FieldSpec) -> Polynomial:
        return cls(tuple(spec.from_hex(c) for c in coeffs))


@dataclass(frozen=True)
class Point:
    """A point (x, y) with both coordinates in one field."""

    x: FieldElement
    y: FieldElement

    def __post_init__(self) -> None:
        if self.x.spec != self.y.spec:
            raise FieldMismatchError("point coordinates must share one field")

    @property
    def spec(self) -> FieldSpec:
        return self.x.spec


def evaluate(f: Polynomial, x: FieldElement) -> FieldElement:
    """Horner evaluation of f at x."""
    if x.spec != f.spec:
        raise FieldMismatchError("evaluation point is from a different field")
    acc = f.coeffs[-1]
    for c in reversed(f.coeffs[:-1]):
        acc = acc * x + c
    return acc


def interpolate(points: list[Point]) -> Polynomial:
    """The unique polynomial of degree <= t-1 through t distinct points.

    Points that repeat an x-coordinate with the same y are deduplicated
    (hash-derived x values can collide); a repeated x with a different y
    admits no polynomial and raises InconsistentPointsError.
    """
    if not points:
        raise ValueError("interpolation needs at least one point")
    spec = points[0].spec
    if any(p.spec != spec for p in points):
        raise FieldMismatchError("interpolation points must share one field")

    seen: dict[int, Point] = {}
    for p in points:
        prev = seen.get(p.x.value)
        if prev is None:
            seen[p.x.value] = p
        elif prev.y.value != p.y.value:
            raise InconsistentPointsError(
                f"x={p.x.to_hex()} appears with y={prev.y.to_hex()} "
                f"and y={p.y.to_hex()}"
            )
    pts = list(seen.values())
    t = len(pts)
    zero, one = spec.zero(), spec.one()

    # Accumulate coefficient vectors of y_j * l_j(x).
    result = [zero] * t
    for j, pj in enumerate(pts):
        # Numerator prod_{m != j} (x - x_m) as a coefficient vector, and
        # the scalar denominator prod_{m != j} (x_j - x_m).
        num = [one] + [zero] * (t - 1)
        denom = one
        deg = 0
        for m, pm in enumerate(pts):
            if m == j:
                continue
            # Multiply num by (x + x_m); subtraction is addition here.
            for k in range(deg, -1, -1):
                num[k + 1] = num[k + 1] + num[k]
                num[k] = num[k] * pm.x
            deg += 1
            denom = denom * (pj.x + pm.x)
        scale = pj.y * denom.inverse()
        for k in range(t):
            result[k] = result[k] + num[k] * scale
    return Polynomial(tuple(result))
