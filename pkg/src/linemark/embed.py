"""Watermark embedding: carry the points (x_i, f(x_i)) of the identity
polynomial in the parity stream of generated tokens.

The stream starts with one unwatermarked seed token.  Each block i of
n tokens then encodes y_i = f(x_i) bit by bit, where x_i is derived
from the token immediately preceding the block.  A bias of strength
delta pushes sampling toward the vocabulary half whose partition bit
equals the wanted bit; delta = inf restricts sampling support to that
half, making the carried bits deterministic.  Total length is n*N + 1
tokens for N points.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .codec import Identity, SecretKey, derive_x, partition_ids, value_bits
from .field import FieldSpec
from .poly import evaluate

__all__ = [
    "TokenSource",
    "MockSource",
    "EmbedParams",
    "TokenStream",
    "CapacityError",
    "embed",
    "embed_multi",
]


class CapacityError(ValueError):
    """More lines requested than point slots available."""


class TokenSource(Protocol):
    """Anything that can produce the next token given a context and an
    optional bias set.  With delta = inf and a non-empty bias set the
    returned token must come from the bias set."""

    vocab_size: int

    def next(
        self, context: Sequence[int], bias_ids: np.ndarray | None, delta: float
    ) -> int:
        ...


@dataclass
class MockSource:
    """Deterministic stand-in for a language model.

    Per step, draws vocab_size pseudo-logits from a generator keyed by
    (seed, position), applies the bias, and samples from the softmax at
    the configured temperature (via the Gumbel-max identity)."""

    seed: int
    vocab_size: int
    temperature: float = 1.0

    def __post_init__(self) -> None:
        if self.vocab_size < 2:
            raise ValueError("vocab_size must be >= 2")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")

    def next(
        self, context: Sequence[int], bias_ids: np.ndarray | None, delta: float
    ) -> int:
        rng = np.random.default_rng((self.seed, len(context)))
        if bias_ids is not None and len(bias_ids) and math.isinf(delta):
            # Support restricted to the bias set: the softmax over the
            # full biased logits degenerates to the softmax over the
            # set, so only its logits need drawing.
            logits = rng.standard_normal(len(bias_ids))
            gumbels = rng.gumbel(size=len(bias_ids))
            return int(bias_ids[np.argmax(logits / self.temperature + gumbels)])
        logits = rng.standard_normal(self.vocab_size)
        gumbels = rng.gumbel(size=self.vocab_size)
        if bias_ids is None or len(bias_ids) == 0:
            if bias_ids is not None and math.isinf(delta):
                raise ValueError("cannot force sampling into an empty bias set")
            return int(np.argmax(logits / self.temperature + gumbels))
        biased = logits.copy()
        biased[bias_ids] += delta
        return int(np.argmax(biased / self.temperature + gumbels))


@dataclass(frozen=True)
class EmbedParams:
    """Embedding configuration; the resulting stream has n*N + 1 tokens."""

    spec: FieldSpec
    N: int
    delta: float
    key: SecretKey
    vocab_size: int

    def __post_init__(self) -> None:
        if self.N < 2:
            raise ValueError("N must be >= 2; a line needs two recoverable points")
        if not self.delta > 0:
            raise ValueError("delta must be positive (inf forces selection)")
        if self.vocab_size < 2:
            raise ValueError("vocab_size must be >= 2")

    @property
    def stream_length(self) -> int:
        return self.spec.n * self.N + 1


@dataclass
class TokenStream:
    """An ordered token-id sequence plus the vocabulary size it was
    drawn from.  The JSON form is the interchange unit between the
    embed, attack, and extract stages."""

    tokens: list[int]
    vocab_size: int

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def to_json(self) -> dict:
        return {"vocab_size": self.vocab_size, "tokens": list(self.tokens)}

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, obj: dict) -> TokenStream:
        tokens = [int(t) for t in obj["tokens"]]
        vocab = int(obj["vocab_size"])
        if any(t < 0 or t >= vocab for t in tokens):
            raise ValueError("token id out of vocabulary range")
        return cls(tokens, vocab)

    @classmethod
    def loads(cls, s: str) -> TokenStream:
        return cls.from_json(json.loads(s))


def embed_multi(
    identities: Sequence[Identity], source: TokenSource, params: EmbedParams
) -> TokenStream:
    """Embed one or more identity lines into a fresh stream; point slot
    i carries line i mod t, spreading every line uniformly."""
    if not identities:
        raise ValueError("need at least one identity")
    if len(identities) > params.N:
        raise CapacityError(
            f"{len(identities)} lines need at least {len(identities)} point "
            f"slots, only N={params.N} available"
        )
    for ident in identities:
        if ident.spec != params.spec:
            raise ValueError("identity field does not match embed params")
    ids_by_bit = partition_ids(params.key, params.vocab_size)
    if len(ids_by_bit[0]) == 0 or len(ids_by_bit[1]) == 0:
        raise ValueError(
            "degenerate vocabulary partition: one half is empty; "
            "use a larger vocabulary or a different key"
        )

    context: list[int] = [source.next([], None, 0.0)]
    for slot in range(params.N):
        f = identities[slot % len(identities)].poly
        x = derive_x(context[-1], params.key, params.spec)
        y = evaluate(f, x)
        for bit in value_bits(y):
            tok = source.next(context, ids_by_bit[bit], params.delta)
            context.append(tok)
    return TokenStream(context, params.vocab_size)


def embed(identity: Identity, source: TokenSource, params: EmbedParams) -> TokenStream:
    """Embed a single identity; see embed_multi."""
    return embed_multi([identity], source, params)
