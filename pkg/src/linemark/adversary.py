"""Attack channels, the closed-form failure probability, and the Monte
Carlo experiments that measure how many random points line up by
accident in each field.

The failure probability of recovery with F genuine survivors among R
scattered points is approximated by

    P(fail) = sum_{k=F}^{R} C(R,k) (1/2^n)^(k-2) (1 - 1/2^n)^(R-k)

valid for F >= 3 and R << 2^n.  Terms are evaluated with exact
rational arithmetic (binomial factors at R ~ 10^3 underflow doubles)
and the sum is clamped to 1; outside its validity regime the unclamped
sum exceeds 1, which the validation report flags.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from .batch import rand_elements, backend
from .embed import TokenStream
from .field import FieldSpec
from .geometry import _hashing_best_lines, max_collinear_count

__all__ = [
    "AttackSpec",
    "ExperimentReport",
    "BudgetRow",
    "Theorem1Report",
    "attack",
    "fail_term",
    "fail_probability",
    "expected_spurious_max",
    "random_point_experiment",
    "budget_table",
    "theorem1_validation",
]

ATTACK_KINDS = ("substitute", "delete", "insert", "duplicate-splice")

_SPURIOUS_SEED = 0x5EED


@dataclass(frozen=True)
class AttackSpec:
    """A deterministic stream edit: kind plus either a fraction of the
    stream (rate) or an absolute token count."""

    kind: str
    rate: float | None = None
    count: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}; one of {ATTACK_KINDS}")
        if (self.rate is None) == (self.count is None):
            raise ValueError("give exactly one of rate or count")
        if self.rate is not None and not 0.0 <= self.rate <= 1.0:
            raise ValueError("rate must be in [0, 1]")
        if self.count is not None and self.count < 0:
            raise ValueError("count must be non-negative")

    def resolve_count(self, length: int) -> int:
        if self.count is not None:
            return self.count
        return round(self.rate * length)


def attack(stream: TokenStream, spec: AttackSpec) -> TokenStream:
    """Apply an edit channel to a stream; reproducible per seed."""
    rng = np.random.default_rng(spec.seed)
    tokens = list(stream.tokens)
    vocab = stream.vocab_size
    k = spec.resolve_count(len(tokens))

    if spec.kind == "substitute":
        k = min(k, len(tokens))
        if k:
            pos = rng.choice(len(tokens), size=k, replace=False)
            repl = rng.integers(0, vocab, size=k)
            for p, r in zip(pos, repl):
                tokens[p] = int(r)
    elif spec.kind == "delete":
        k = min(k, len(tokens))
        if k:
            pos = set(rng.choice(len(tokens), size=k, replace=False).tolist())
            tokens = [t for i, t in enumerate(tokens) if i not in pos]
    elif spec.kind == "insert":
        for _ in range(k):
            p = int(rng.integers(0, len(tokens) + 1))
            tokens.insert(p, int(rng.integers(0, vocab)))
    else:  # duplicate-splice
        k = max(1, min(k, len(tokens)))
        if tokens:
            start = int(rng.integers(0, len(tokens) - k + 1))
            span = tokens[start : start + k]
            dest = int(rng.integers(0, len(tokens) + 1))
            tokens = tokens[:dest] + span + tokens[dest:]
    return TokenStream(tokens, vocab)


# ---------------------------------------------------------------------------
# Closed-form failure probability.
# ---------------------------------------------------------------------------

def fail_term(n: int, k: int, R: int) -> float:
    """The single-k term: probability that some k of R random points
    are collinear, C(R,k) (1/2^n)^(k-2) (1-1/2^n)^(R-k)."""
    if k < 3:
        raise ValueError("the approximation needs k > 2")
    if k > R:
        return 0.0
    q = Fraction(1, 1 << n)
    term = comb(R, k) * q ** (k - 2) * (1 - q) ** (R - k)
    return float(term)


def fail_probability(n: int, F: int, R: int) -> float:
    """Probability that at least F of R random points share a line,
    clamped to 1.  Recovery with F genuine survivors fails when this
    event produces a competing line."""
    if F < 3:
        raise ValueError("F must be at least 3 (the approximation needs k > 2)")
    if R < 0:
        raise ValueError("R must be non-negative")
    if R < F:
        return 0.0
    q = Fraction(1, 1 << n)
    total = Fraction(0)
    for k in range(F, R + 1):
        total += comb(R, k) * q ** (k - 2) * (1 - q) ** (R - k)
    return float(min(total, Fraction(1)))


def _fail_sum_raw(n: int, F: int, R: int) -> float:
    q = Fraction(1, 1 << n)
    total = Fraction(0)
    for k in range(F, R + 1):
        total += comb(R, k) * q ** (k - 2) * (1 - q) ** (R - k)
    return float(total)


# ---------------------------------------------------------------------------
# Monte Carlo experiments.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentReport:
    """Distribution of the max-collinear count over random point sets."""

    n: int
    R: int
    trials: int
    seed: int
    counts: tuple[int, ...]

    @property
    def max(self) -> int:
        return max(self.counts)

    @property
    def median(self) -> float:
        return statistics.median(self.counts)

    @property
    def mean(self) -> float:
        return statistics.fmean(self.counts)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "points": self.R,
            "trials": self.trials,
            "seed": self.seed,
            "max": self.max,
            "median": self.median,
            "mean": round(self.mean, 3),
            "counts": list(self.counts),
        }


def random_point_experiment(
    spec: FieldSpec, R: int, trials: int, seed: int
) -> ExperimentReport:
    """Per trial, scatter R uniform points on the GF(2^n) plane (with
    replacement) and record the best line support found by the
    slope-grouping solver.  Any two points are trivially collinear, so
    trial counts floor at 2 for R >= 2."""
    if R < 2:
        raise ValueError("R must be >= 2")
    counts = []
    for trial in range(trials):
        rng = np.random.default_rng((seed, spec.n, R, trial))
        xs = rand_elements(spec, rng, R)
        ys = rand_elements(spec, rng, R)
        counts.append(max_collinear_count(xs, ys, spec))
    return ExperimentReport(spec.n, R, trials, seed, tuple(counts))


@lru_cache(maxsize=None)
def expected_spurious_max(spec: FieldSpec, R: int, trials: int = 64) -> int:
    """Observed maximum of the max-collinear count over seeded trials of
    R random points; the acceptance threshold for recovery is one more
    than this ceiling."""
    if R < 2:
        return R
    report = random_point_experiment(spec, R, trials, _SPURIOUS_SEED)
    return report.max


@dataclass(frozen=True)
class BudgetRow:
    """Capacity arithmetic for a document of T tokens in GF(2^n)."""

    T: int
    n: int
    N: int
    total: int
    fake: int
    needed: int

    def to_json(self) -> dict:
        return {
            "tokens": self.T,
            "n": self.n,
            "watermark_points": self.N,
            "total_points": self.total,
            "fake_points": self.fake,
            "needed_to_recover": self.needed,
        }


def budget_table(T: int, spec: FieldSpec) -> BudgetRow:
    """How many points a T-token document carries in this field, how
    many candidates extraction will see, and how many genuine survivors
    recovery needs (empirical spurious ceiling + 1)."""
    n = spec.n
    N = (T - 1) // n
    if N < 2:
        raise ValueError(
            f"a {T}-token stream holds only {N} point(s) in GF(2^{n}); "
            f"need at least 2"
        )
    total = n * (N - 1) + 1
    fake = total - N
    needed = expected_spurious_max(spec, fake) + 1
    return BudgetRow(T=T, n=n, N=N, total=total, fake=fake, needed=needed)


@dataclass(frozen=True)
class Theorem1Report:
    """Monte Carlo check of the closed-form failure probability.

    empirical_fail measures the modeled event (>= F of the R random
    points collinear); wrong_winner_rate additionally reports how often
    the solver's winning line on the full planted-plus-random instance
    is not the planted line."""

    n: int
    F: int
    R: int
    trials: int
    seed: int
    analytic_fail: float
    analytic_raw: float
    empirical_fail: float
    wrong_winner_rate: float
    stderr: float
    approximation_breakdown: bool

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "F": self.F,
            "R": self.R,
            "trials": self.trials,
            "seed": self.seed,
            "analytic_fail": self.analytic_fail,
            "analytic_raw_sum": self.analytic_raw,
            "empirical_fail": self.empirical_fail,
            "wrong_winner_rate": self.wrong_winner_rate,
            "stderr": self.stderr,
            "approximation_breakdown": self.approximation_breakdown,
        }


def _random_line_points(
    spec: FieldSpec, F: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, int, int]:
    """F points with distinct x on a uniformly random line."""
    a0 = int(rand_elements(spec, rng, 1)[0])
    a1 = int(rand_elements(spec, rng, 1)[0])
    picked: list[int] = []
    seen: set[int] = set()
    while len(picked) < F:
        for v in rand_elements(spec, rng, F - len(picked)):
            v = int(v)
            if v not in seen:
                seen.add(v)
                picked.append(v)
    xs = np.fromiter(picked, dtype=np.uint64, count=F)
    ys = np.uint64(a0) ^ backend(spec).mul(np.full(F, a1, dtype=np.uint64), xs)
    return xs, ys, a0, a1


def theorem1_validation(
    spec: FieldSpec, F: int, R: int, trials: int, seed: int
) -> Theorem1Report:
    """Plant F collinear points, scatter R random ones, and measure how
    often the random points alone form a line of >= F points; compare
    against the closed form."""
    if F < 3:
        raise ValueError("F must be at least 3")
    n = spec.n
    fails = 0
    wrong = 0
    for trial in range(trials):
        rng = np.random.default_rng((seed, trial))
        rxs = rand_elements(spec, rng, R)
        rys = rand_elements(spec, rng, R)
        if R >= 2 and max_collinear_count(rxs, rys, spec) >= F:
            fails += 1
        gxs, gys, a0, a1 = _random_line_points(spec, F, rng)
        if R > 0:
            xs = np.concatenate([gxs, rxs])
            ys = np.concatenate([gys, rys])
        else:
            xs, ys = gxs, gys
        best = _hashing_best_lines(xs, ys, spec)[0]
        if best.a0.value != a0 or best.a1.value != a1:
            wrong += 1

    emp = fails / trials
    analytic = fail_probability(n, F, R)
    raw = _fail_sum_raw(n, F, R)
    se = (max(emp * (1 - emp), 1e-12) / trials) ** 0.5
    breakdown = raw > 1.0 or abs(emp - analytic) > 4 * max(se, 1e-4)
    return Theorem1Report(
        n=n,
        F=F,
        R=R,
        trials=trials,
        seed=seed,
        analytic_fail=analytic,
        analytic_raw=raw,
        empirical_fail=emp,
        wrong_winner_rate=wrong / trials,
        stderr=se,
        approximation_breakdown=breakdown,
    )
