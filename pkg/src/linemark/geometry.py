"""Maximum Collinear Points (MCP) and Maximum Co-Polynomial Points
(MCPP) solvers over GF(2^n), plus multi-line helpers.

Because the plane is a finite field plane, slopes are exact field
elements: the hash-map keys of the slope-grouping solver are the slope
values themselves and no floating-point tolerance exists anywhere.
Pairs sharing an x-coordinate (vertical incidence) never define a
recoverable function graph and are skipped; an input whose pairs are
all vertical raises NoLineError.

Every returned fit is re-counted by direct evaluation, so reported
support is always the exact number of input points (by index, with
multiplicity) lying on the returned curve.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .batch import backend, elements_to_array
from .codec import Identity
from .field import FieldElement, FieldSpec
from .poly import Point, Polynomial

__all__ = [
    "NoLineError",
    "SizeGuardError",
    "PointSet",
    "LineFit",
    "PolyFit",
    "TopLines",
    "mcp_bruteforce",
    "mcp_hashing",
    "top_t_lines",
    "order_identities",
    "mcpp_bruteforce",
    "mcpp_ransac",
    "expected_trials",
]

_U64 = np.uint64

# Caps on the candidate recount pass of the slope-grouping solver.
_CANDIDATE_CAP = 128
_RECOUNT_CHUNK = 1 << 22


class NoLineError(ValueError):
    """No non-vertical line exists through the candidate points."""


class SizeGuardError(ValueError):
    """Exhaustive enumeration refused; instance too large."""


@dataclass
class PointSet:
    """Candidate points, optionally annotated with which indices are
    genuine (metadata for experiments; recovery never reads it)."""

    points: list[Point]
    genuine_hint: list[int] | None = None
    _xs: np.ndarray | None = field(default=None, repr=False, compare=False)
    _ys: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def spec(self) -> FieldSpec:
        if not self.points:
            raise ValueError("empty point set has no field")
        return self.points[0].spec

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if self._xs is None:
            self._xs = elements_to_array(p.x for p in self.points)
            self._ys = elements_to_array(p.y for p in self.points)
        return self._xs, self._ys

    @classmethod
    def from_values(
        cls,
        xs: np.ndarray,
        ys: np.ndarray,
        spec: FieldSpec,
        genuine_hint: list[int] | None = None,
    ) -> PointSet:
        pts = [
            Point(FieldElement(int(x), spec), FieldElement(int(y), spec))
            for x, y in zip(xs, ys)
        ]
        ps = cls(pts, genuine_hint)
        ps._xs = np.asarray(xs, dtype=np.uint64)
        ps._ys = np.asarray(ys, dtype=np.uint64)
        return ps


@dataclass(frozen=True)
class LineFit:
    """A line y = a0 + a1*x with its exact supporting points."""

    a0: FieldElement
    a1: FieldElement
    support: int
    supporting_indices: tuple[int, ...]


@dataclass(frozen=True)
class PolyFit:
    """A polynomial fit with its exact supporting points.

    trials_used is populated by the random-sampling solver: the number
    of counted trials executed (or, with stop_support, the index of the
    first trial that reached the target)."""

    poly: Polynomial
    support: int
    supporting_indices: tuple[int, ...]
    trials_used: int | None = None


@dataclass(frozen=True)
class TopLines:
    """Result of a top-t line query; complete is False when fewer than
    t distinct lines of support >= 2 exist."""

    lines: tuple[LineFit, ...]
    requested: int
    complete: bool


# ---------------------------------------------------------------------------
# Shared vectorized machinery.
# ---------------------------------------------------------------------------

def _elements_to_array(e) -> np.ndarray:
    return np.fromiter((int(v) for v in e), dtype=np.uint64)


def _pair_slopes(xs: np.ndarray, ys: np.ndarray, spec: FieldSpec):
    """Non-vertical unordered pairs and their field slopes.

    Returns (i, j, slopes) or None when every pair is vertical."""
    npts = len(xs)
    i, j = np.triu_indices(npts, 1)
    dx = xs[i] ^ xs[j]
    ok = dx != 0
    if not ok.any():
        return None
    i, j, dx = i[ok], j[ok], dx[ok]
    dy = ys[i] ^ ys[j]
    slopes = backend(spec).slope(dy, dx)
    return i, j, slopes


def _line_supports(
    xs: np.ndarray,
    ys: np.ndarray,
    a0s: np.ndarray,
    a1s: np.ndarray,
    spec: FieldSpec,
) -> np.ndarray:
    """Exact support count of each line (a0s[k], a1s[k])."""
    be = backend(spec)
    npts = len(xs)
    counts = np.empty(len(a0s), dtype=np.int64)
    step = max(1, _RECOUNT_CHUNK // max(npts, 1))
    for lo in range(0, len(a0s), step):
        hi = min(lo + step, len(a0s))
        pred = ys[None, :] == (
            a0s[lo:hi, None] ^ be.mul(a1s[lo:hi, None], xs[None, :])
        )
        counts[lo:hi] = pred.sum(axis=1)
    return counts


def _on_line_indices(
    xs: np.ndarray, ys: np.ndarray, a0: int, a1: int, spec: FieldSpec
) -> np.ndarray:
    be = backend(spec)
    yhat = _U64(a0) ^ be.mul(np.full(len(xs), a1, dtype=np.uint64), xs)
    return np.nonzero(ys == yhat)[0]


def _dedup_lines(a0s: np.ndarray, a1s: np.ndarray, spec: FieldSpec):
    if spec.n <= 32:
        key = (a1s << _U64(spec.n)) | a0s
        _, first = np.unique(key, return_index=True)
    else:
        _, first = np.unique(np.stack([a1s, a0s], axis=1), axis=0, return_index=True)
    return a0s[first], a1s[first]


def _make_linefit(
    xs: np.ndarray, ys: np.ndarray, a0: int, a1: int, spec: FieldSpec
) -> LineFit:
    idx = _on_line_indices(xs, ys, a0, a1, spec)
    return LineFit(
        a0=FieldElement(int(a0), spec),
        a1=FieldElement(int(a1), spec),
        support=int(len(idx)),
        supporting_indices=tuple(int(k) for k in idx),
    )


def _rank_lines(a0s: np.ndarray, a1s: np.ndarray, counts: np.ndarray):
    """Indices sorted by descending support, ties by (a0, a1) value."""
    return np.lexsort((a1s, a0s, -counts))


def _has_duplicate_points(xs: np.ndarray, ys: np.ndarray, spec: FieldSpec) -> bool:
    if spec.n <= 32:
        key = (xs << _U64(spec.n)) | ys
        return len(np.unique(key)) < len(xs)
    return len(np.unique(np.stack([xs, ys], axis=1), axis=0)) < len(xs)


# ---------------------------------------------------------------------------
# MCP solvers.
# ---------------------------------------------------------------------------

def _check_points(points: PointSet) -> tuple[np.ndarray, np.ndarray, FieldSpec]:
    if len(points) < 2:
        raise ValueError("need at least two points")
    xs, ys = points.arrays()
    return xs, ys, points.spec


def mcp_bruteforce(points: PointSet) -> LineFit:
    """Exact maximum-support line by enumerating every point pair,
    reconstructing its line, and counting all points on it.

    Serves as the correctness oracle for the slope-grouping solver."""
    xs, ys, spec = _check_points(points)
    pairs = _pair_slopes(xs, ys, spec)
    if pairs is None:
        raise NoLineError("all point pairs share an x-coordinate")
    i, _, a1s = pairs
    a0s = ys[i] ^ backend(spec).mul(a1s, xs[i])
    a0s, a1s = _dedup_lines(a0s, a1s, spec)
    counts = _line_supports(xs, ys, a0s, a1s, spec)
    best = _rank_lines(a0s, a1s, counts)[0]
    return _make_linefit(xs, ys, int(a0s[best]), int(a1s[best]), spec)


def _hashing_best_lines(
    xs: np.ndarray, ys: np.ndarray, spec: FieldSpec
) -> list[LineFit]:
    """All maximum-support lines found by per-reference slope grouping,
    in canonical (a0, a1) order."""
    pairs = _pair_slopes(xs, ys, spec)
    if pairs is None:
        raise NoLineError("all point pairs share an x-coordinate")
    i, j, slopes = pairs
    refs = np.concatenate([i, j]).astype(np.uint64)
    sl = np.concatenate([slopes, slopes])

    # Count identical slopes per reference point.
    if spec.n <= 32:
        key = (refs << _U64(spec.n)) | sl
        ukey, counts = np.unique(key, return_counts=True)
        urefs = (ukey >> _U64(spec.n)).astype(np.int64)
        uslopes = ukey & _U64(spec.order - 1)
    else:
        order = np.lexsort((sl, refs))
        rs, ss = refs[order], sl[order]
        boundary = np.empty(len(rs), dtype=bool)
        boundary[0] = True
        boundary[1:] = (rs[1:] != rs[:-1]) | (ss[1:] != ss[:-1])
        starts = np.nonzero(boundary)[0]
        counts = np.diff(np.append(starts, len(rs)))
        urefs = rs[starts].astype(np.int64)
        uslopes = ss[starts]

    maxgroup = int(counts.max())
    # Duplicate points depress group counts seen from duplicated
    # references; widen the recount window when duplicates exist.
    slack = 2 if _has_duplicate_points(xs, ys, spec) else 0
    cutoff = max(1, maxgroup - slack)
    cand = np.nonzero(counts >= cutoff)[0]
    if len(cand) > _CANDIDATE_CAP:
        cand = cand[np.argsort(-counts[cand], kind="stable")[:_CANDIDATE_CAP]]

    a1s = uslopes[cand]
    crefs = urefs[cand]
    a0s = ys[crefs] ^ backend(spec).mul(a1s, xs[crefs])
    a0s, a1s = _dedup_lines(a0s, a1s, spec)
    counts = _line_supports(xs, ys, a0s, a1s, spec)
    best = int(counts.max())
    winners = np.nonzero(counts == best)[0]
    order = _rank_lines(a0s[winners], a1s[winners], counts[winners])
    return [
        _make_linefit(xs, ys, int(a0s[winners[k]]), int(a1s[winners[k]]), spec)
        for k in order
    ]


def mcp_hashing(points: PointSet) -> LineFit:
    """Maximum-support line via slope grouping in a hash map: for each
    reference point, bucket every other point by the field slope it
    forms with the reference; the largest bucket plus the reference
    itself identifies the best line through that reference."""
    xs, ys, spec = _check_points(points)
    return _hashing_best_lines(xs, ys, spec)[0]


def max_collinear_count(xs: np.ndarray, ys: np.ndarray, spec: FieldSpec) -> int:
    """Support of the best non-vertical line through raw coordinate
    arrays; 2 when only vertical incidence exists (any two points are
    trivially collinear).  Array-level entry point for experiments."""
    if len(xs) < 2:
        return len(xs)
    try:
        return _hashing_best_lines(xs, ys, spec)[0].support
    except NoLineError:
        return 2


def top_t_lines(points: PointSet, t: int) -> TopLines:
    """The t distinct lines with the highest support, descending.  A
    point may support several of them.  Returns fewer lines (complete
    False) when fewer than t distinct lines of support >= 2 exist."""
    if t < 1:
        raise ValueError("t must be >= 1")
    xs, ys, spec = _check_points(points)
    pairs = _pair_slopes(xs, ys, spec)
    if pairs is None:
        raise NoLineError("all point pairs share an x-coordinate")
    i, _, a1s = pairs
    a0s = ys[i] ^ backend(spec).mul(a1s, xs[i])
    a0s, a1s = _dedup_lines(a0s, a1s, spec)
    counts = _line_supports(xs, ys, a0s, a1s, spec)
    order = _rank_lines(a0s, a1s, counts)[: t]
    lines = tuple(
        _make_linefit(xs, ys, int(a0s[k]), int(a1s[k]), spec) for k in order
    )
    return TopLines(lines=lines, requested=t, complete=len(lines) == t)


def order_identities(identities: list[Identity]) -> list[int]:
    """Concatenate identities in the order of their SHA3-256 digests
    (ascending, byte-lexicographic); permutation-invariant."""
    if not identities:
        raise ValueError("need at least one identity")
    ranked = sorted(identities, key=lambda k: hashlib.sha3_256(k.to_bytes()).digest())
    bits: list[int] = []
    for ident in ranked:
        bits.extend(ident.to_bits())
    return bits


# ---------------------------------------------------------------------------
# MCPP solvers.
# ---------------------------------------------------------------------------

_MCPP_MAX_N = 40
_MCPP_MAX_T = 4


def _poly_on_mask(
    xs: np.ndarray, ys: np.ndarray, coeffs, spec: FieldSpec
) -> np.ndarray:
    """Boolean mask of points lying exactly on the polynomial."""
    be = backend(spec)
    acc = np.full(len(xs), coeffs[-1], dtype=np.uint64)
    for c in reversed(coeffs[:-1]):
        acc = be.mul(acc, xs) ^ _U64(int(c))
    return acc == ys


def _interpolate_values(
    sub_x: list[int], sub_y: list[int], spec: FieldSpec
) -> tuple[int, ...]:
    """Lagrange interpolation on raw values via the backend's scalar
    ops; the x values must be pairwise distinct."""
    be = backend(spec)
    t = len(sub_x)
    result = [0] * t
    for j in range(t):
        num = [1] + [0] * (t - 1)
        denom = 1
        deg = 0
        xj = sub_x[j]
        for m in range(t):
            if m == j:
                continue
            xm = sub_x[m]
            for k in range(deg, -1, -1):
                num[k + 1] ^= num[k]
                num[k] = be.scalar_mul(num[k], xm)
            deg += 1
            denom = be.scalar_mul(denom, xj ^ xm)
        scale = be.scalar_mul(sub_y[j], be.scalar_inv(denom))
        for k in range(t):
            result[k] ^= be.scalar_mul(num[k], scale)
    return tuple(result)


def _values_to_poly(coeffs, spec: FieldSpec) -> Polynomial:
    return Polynomial(tuple(FieldElement(int(c), spec) for c in coeffs))


def _better(
    best: tuple[int, tuple[int, ...]] | None, support: int, coeffs: tuple[int, ...]
) -> bool:
    if best is None:
        return True
    bs, bc = best
    return (support, tuple(-c for c in coeffs)) > (bs, tuple(-c for c in bc))


_M64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _M64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def _draw_indices(seed: int, draw: int, t: int, npts: int) -> tuple[int, ...]:
    """t distinct indices below npts, derived from (seed, draw)."""
    state = _splitmix64(_splitmix64(seed & _M64) ^ (draw & _M64))
    out: list[int] = []
    while len(out) < t:
        state = _splitmix64(state)
        idx = state % npts
        if idx not in out:
            out.append(idx)
    return tuple(out)


def mcpp_bruteforce(points: PointSet, t: int) -> PolyFit:
    """Exact maximum-support polynomial of degree <= t-1 by iterating
    over every t-subset of points.  Refuses instances beyond N=40 or
    t=4; use mcpp_ransac there."""
    npts = len(points)
    if t < 2:
        raise ValueError("t must be >= 2")
    if npts < t:
        raise ValueError(f"need at least t={t} points, got {npts}")
    if npts > _MCPP_MAX_N or t > _MCPP_MAX_T:
        raise SizeGuardError(
            f"exhaustive subset enumeration refused for N={npts}, t={t} "
            f"(bounds: N<={_MCPP_MAX_N}, t<={_MCPP_MAX_T}); use mcpp_ransac"
        )
    xs, ys = points.arrays()
    spec = points.spec
    best: tuple[int, tuple[int, ...]] | None = None
    for idx in combinations(range(npts), t):
        sub_x = [int(xs[k]) for k in idx]
        if len(set(sub_x)) < t:
            continue
        coeffs = _interpolate_values(sub_x, [int(ys[k]) for k in idx], spec)
        support = int(_poly_on_mask(xs, ys, coeffs, spec).sum())
        if _better(best, support, coeffs):
            best = (support, coeffs)
    if best is None:
        raise NoLineError("every point subset shares x-coordinates")
    support, coeffs = best
    on = np.nonzero(_poly_on_mask(xs, ys, coeffs, spec))[0]
    return PolyFit(
        poly=_values_to_poly(coeffs, spec),
        support=support,
        supporting_indices=tuple(int(k) for k in on),
    )


def mcpp_ransac(
    points: PointSet,
    t: int,
    trials: int,
    seed: int,
    stop_support: int | None = None,
) -> PolyFit:
    """Random sampling and verification: repeatedly draw t distinct
    points (without replacement within a trial), interpolate, and count
    inliers; keep the best.  Subsets with a repeated x-coordinate are
    discarded without consuming a trial.  Deterministic for a given
    seed; each trial's subset is derived from (seed, draw index)."""
    npts = len(points)
    if t < 2:
        raise ValueError("t must be >= 2")
    if npts < t:
        raise ValueError(f"need at least t={t} points, got {npts}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    xs, ys = points.arrays()
    spec = points.spec

    best: tuple[int, tuple[int, ...]] | None = None
    valid = 0
    draw_budget = 20 * trials + 100
    for draw in range(draw_budget):
        if valid >= trials:
            break
        idx = _draw_indices(seed, draw, t, npts)
        sub_x = [int(xs[k]) for k in idx]
        if len(set(sub_x)) < t:
            continue
        valid += 1
        coeffs = _interpolate_values(sub_x, [int(ys[k]) for k in idx], spec)
        support = int(_poly_on_mask(xs, ys, coeffs, spec).sum())
        if _better(best, support, coeffs):
            best = (support, coeffs)
        if stop_support is not None and support >= stop_support:
            on = np.nonzero(_poly_on_mask(xs, ys, coeffs, spec))[0]
            return PolyFit(
                poly=_values_to_poly(coeffs, spec),
                support=support,
                supporting_indices=tuple(int(k) for k in on),
                trials_used=valid,
            )
    if best is None:
        zero = points.spec.zero()
        return PolyFit(
            poly=Polynomial((zero,) * t),
            support=0,
            supporting_indices=(),
            trials_used=valid,
        )
    support, coeffs = best
    on = np.nonzero(_poly_on_mask(xs, ys, coeffs, spec))[0]
    return PolyFit(
        poly=_values_to_poly(coeffs, spec),
        support=support,
        supporting_indices=tuple(int(k) for k in on),
        trials_used=valid,
    )


def expected_trials(ell: int, f: int, t: int) -> float:
    """Expected number of random t-subsets drawn until one consists
    purely of the f good points among ell total: (ell/f)^t."""
    if f <= 0:
        raise ValueError("f must be positive")
    if f > ell:
        raise ValueError("f cannot exceed ell")
    if t < 1:
        raise ValueError("t must be >= 1")
    return (ell / f) ** t
