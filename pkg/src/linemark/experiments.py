"""Experiment orchestration: the random-collinearity grid, the failure
probability validation, and the substitution-robustness sweep.

These wrap the adversary-lab primitives into reproducible multi-run
reports for the CLI and the acceptance suite.  Every run derives its
randomness from (seed, run index), so reports are stable across
machines and across serial/parallel execution.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

import numpy as np

from .adversary import ExperimentReport, random_point_experiment
from .codec import Identity, SecretKey
from .embed import EmbedParams, MockSource, TokenStream, embed
from .extract import RecoveryConfig, build_candidates, recover
from .field import FieldSpec, field_spec

__all__ = [
    "GRID_WIDTHS",
    "GRID_SIZES",
    "CollinearityGrid",
    "RobustnessReport",
    "collinearity_grid",
    "format_grid",
    "keep_blocks_substitution",
    "robustness_experiment",
]

GRID_WIDTHS = (6, 8, 12, 16, 32)
GRID_SIZES = (8, 16, 32, 64, 128, 256, 512, 1024)


@dataclass(frozen=True)
class CollinearityGrid:
    """Max-collinear distributions for every (field, point count) cell."""

    trials: int
    seed: int
    cells: tuple[ExperimentReport, ...]

    def cell(self, n: int, R: int) -> ExperimentReport:
        for c in self.cells:
            if c.n == n and c.R == R:
                return c
        raise KeyError(f"no cell for n={n}, R={R}")

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "cells": [c.to_json() for c in self.cells],
        }


def collinearity_grid(
    widths=GRID_WIDTHS,
    sizes=GRID_SIZES,
    trials: int = 100,
    seed: int = 0,
) -> CollinearityGrid:
    """Run the random-point experiment over a grid of fields and sizes."""
    cells = []
    for n in widths:
        spec = field_spec(n)
        for R in sizes:
            cells.append(random_point_experiment(spec, R, trials, seed))
    return CollinearityGrid(trials=trials, seed=seed, cells=tuple(cells))


def format_grid(grid: CollinearityGrid, statistic: str = "median") -> str:
    """Text table: rows are point counts, columns are fields."""
    widths = sorted({c.n for c in grid.cells})
    sizes = sorted({c.R for c in grid.cells})
    head = ["points"] + [f"GF(2^{n})" for n in widths]
    rows = [head]
    for R in sizes:
        row = [str(R)]
        for n in widths:
            cell = grid.cell(n, R)
            value = getattr(cell, statistic)
            row.append(f"{value:g}" if isinstance(value, float) else str(value))
        rows.append(row)
    col_w = [max(len(r[c]) for r in rows) for c in range(len(head))]
    lines = []
    for k, row in enumerate(rows):
        lines.append("  ".join(cell.rjust(col_w[c]) for c, cell in enumerate(row)))
        if k == 0:
            lines.append("-" * len(lines[0]))
    return "\n".join(lines)


def keep_blocks_substitution(
    stream: TokenStream, n: int, keep_blocks: list[int], rng: np.random.Generator
) -> TokenStream:
    """Substitute every token outside the windows of the kept blocks.

    Block b (1-based) occupies stream positions (b-1)*n .. b*n inclusive
    (its x-source token plus its n carrier tokens).  All other tokens
    are replaced with uniform random ids, destroying every other
    genuine point while leaving exactly the kept blocks intact."""
    protected = set()
    for b in keep_blocks:
        protected.update(range((b - 1) * n, b * n + 1))
    tokens = list(stream.tokens)
    for i in range(len(tokens)):
        if i not in protected:
            tokens[i] = int(rng.integers(0, stream.vocab_size))
    return TokenStream(tokens, stream.vocab_size)


@dataclass(frozen=True)
class RobustnessReport:
    """Recovery statistics under maximal substitution with a fixed
    number of surviving watermark blocks."""

    n: int
    T: int
    N: int
    survivors: int
    runs: int
    seed: int
    recovered: int
    accepted: int
    supports: tuple[int, ...]

    @property
    def recovery_rate(self) -> float:
        return self.recovered / self.runs

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.runs

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "tokens": self.T,
            "watermark_points": self.N,
            "survivors": self.survivors,
            "runs": self.runs,
            "seed": self.seed,
            "recovered": self.recovered,
            "accepted": self.accepted,
            "recovery_rate": self.recovery_rate,
            "acceptance_rate": self.acceptance_rate,
            "median_winner_support": statistics.median(self.supports),
        }


def robustness_experiment(
    spec: FieldSpec,
    T: int,
    survivors: int,
    runs: int,
    seed: int,
    vocab_size: int = 1024,
    solver: str = "hashing",
) -> RobustnessReport:
    """Embed a fresh identity per run, substitute every token outside
    `survivors` randomly chosen block windows, and try to recover.

    recovered counts runs whose winning line decodes to the embedded
    identity; accepted additionally requires the verdict to pass the
    spurious-ceiling threshold."""
    n = spec.n
    N = (T - 1) // n
    if N < survivors:
        raise ValueError(f"only {N} blocks fit in {T} tokens; cannot keep {survivors}")
    recovered = 0
    accepted = 0
    supports = []
    config = RecoveryConfig(solver=solver)
    for run in range(runs):
        rng = np.random.default_rng((seed, run))
        key = SecretKey(rng.bytes(16))
        identity = Identity.random(spec, 2, rng)
        params = EmbedParams(
            spec=spec, N=N, delta=math.inf, key=key, vocab_size=vocab_size
        )
        source = MockSource(seed=int(rng.integers(0, 2**63)), vocab_size=vocab_size)
        stream = embed(identity, source, params)
        keep = (1 + rng.choice(N, size=survivors, replace=False)).tolist()
        attacked = keep_blocks_substitution(stream, n, keep, rng)
        result = recover(build_candidates(attacked, key, spec), config)
        supports.append(result.support)
        if result.identity == identity:
            recovered += 1
            if result.verdict == "accepted":
                accepted += 1
    return RobustnessReport(
        n=n,
        T=T,
        N=N,
        survivors=survivors,
        runs=runs,
        seed=seed,
        recovered=recovered,
        accepted=accepted,
        supports=tuple(supports),
    )
