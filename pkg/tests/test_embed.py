"""Embedding: length law, forced-bit determinism, bias behavior."""

import math

import numpy as np
import pytest

from linemark.codec import Identity, SecretKey, derive_x, value_bits
from linemark.embed import (
    CapacityError,
    EmbedParams,
    MockSource,
    TokenStream,
    embed,
    embed_multi,
)
from linemark.extract import build_candidates, extract_bits
from linemark.field import field_spec
from linemark.poly import evaluate

KEY = SecretKey.from_hex("00112233445566778899aabbccddeeff")
INF = math.inf


def _setup(n=8, N=12, vocab=1024, delta=INF, seed=7):
    spec = field_spec(n)
    ident = Identity.random(spec, 2, np.random.default_rng(seed))
    params = EmbedParams(spec=spec, N=N, delta=delta, key=KEY, vocab_size=vocab)
    source = MockSource(seed=seed, vocab_size=vocab)
    return spec, ident, params, source


def _expected_bits(stream, ident, spec):
    """Recompute the bit plan from the stream's own x-source tokens."""
    n = spec.n
    N = (len(stream) - 1) // n
    bits = []
    for i in range(N):
        x = derive_x(stream.tokens[i * n], KEY, spec)
        bits.extend(value_bits(evaluate(ident.poly, x)))
    return bits


@pytest.mark.parametrize("n,N", [(6, 4), (8, 12), (16, 5), (32, 3)])
def test_stream_length_law(n, N):
    spec, ident, params, source = _setup(n=n, N=N)
    stream = embed(ident, source, params)
    assert len(stream) == n * N + 1
    assert params.stream_length == n * N + 1


def test_table_row_length_n8():
    spec, ident, params, source = _setup(n=8, N=12)
    assert len(embed(ident, source, params)) == 97


def test_embed_deterministic():
    _, ident, params, source = _setup()
    s1 = embed(ident, source, params)
    s2 = embed(ident, MockSource(seed=7, vocab_size=1024), params)
    assert s1.tokens == s2.tokens


def test_forced_bits_equal_value_bits():
    spec, ident, params, source = _setup(n=8, N=12, delta=INF)
    stream = embed(ident, source, params)
    assert extract_bits(stream, KEY) == _expected_bits(stream, ident, spec)


def test_genuine_positions_on_line():
    spec, ident, params, source = _setup(n=8, N=12, delta=INF)
    stream = embed(ident, source, params)
    cands = build_candidates(stream, KEY, spec)
    on_line = [
        i
        for i, p in enumerate(cands.points)
        if evaluate(ident.poly, p.x) == p.y
    ]
    genuine = set(range(0, spec.n * params.N, spec.n))
    assert genuine.issubset(on_line)


def test_mock_source_deterministic_and_forced():
    src = MockSource(seed=3, vocab_size=256)
    bias = np.array([4, 9, 77, 200])
    ctx = [1, 2, 3]
    t1 = src.next(ctx, bias, INF)
    t2 = src.next(ctx, bias, INF)
    assert t1 == t2
    assert t1 in bias.tolist()
    for step in range(50):
        assert src.next(list(range(step)), bias, INF) in bias.tolist()


def test_mock_source_empty_bias_inf_rejected():
    src = MockSource(seed=3, vocab_size=256)
    with pytest.raises(ValueError):
        src.next([], np.array([], dtype=np.int64), INF)


def test_mock_source_validation():
    with pytest.raises(ValueError):
        MockSource(seed=1, vocab_size=1)
    with pytest.raises(ValueError):
        MockSource(seed=1, vocab_size=16, temperature=0.0)


def _bit_accuracy(delta, runs=100, n=8, N=4, vocab=512):
    # temperature 2 keeps the per-bit error rate measurable at delta=8,
    # so the strict upper bound is statistically solid
    spec = field_spec(n)
    good = total = 0
    for run in range(runs):
        ident = Identity.random(spec, 2, np.random.default_rng((int(8 * delta), run)))
        params = EmbedParams(spec=spec, N=N, delta=delta, key=KEY, vocab_size=vocab)
        source = MockSource(seed=run, vocab_size=vocab, temperature=2.0)
        stream = embed(ident, source, params)
        want = _expected_bits(stream, ident, spec)
        got = extract_bits(stream, KEY)
        good += sum(a == b for a, b in zip(want, got))
        total += len(want)
    return good / total


def test_bias_accuracy_monotone_in_delta():
    accs = [_bit_accuracy(d) for d in (1.0, 2.0, 4.0, 8.0)]
    for acc in accs:
        assert 0.5 < acc < 1.0
    assert all(a2 >= a1 for a1, a2 in zip(accs, accs[1:])), accs


def test_embed_multi_single_matches_embed():
    spec, ident, params, source = _setup()
    one = embed(ident, MockSource(seed=7, vocab_size=1024), params)
    multi = embed_multi([ident], MockSource(seed=7, vocab_size=1024), params)
    assert one.tokens == multi.tokens


def test_embed_multi_round_robin_assignment():
    spec = field_spec(16)
    rng = np.random.default_rng(11)
    idents = [Identity.random(spec, 2, rng) for _ in range(2)]
    params = EmbedParams(spec=spec, N=6, delta=INF, key=KEY, vocab_size=1024)
    stream = embed_multi(idents, MockSource(seed=5, vocab_size=1024), params)
    for slot in range(params.N):
        f = idents[slot % 2].poly
        x = derive_x(stream.tokens[slot * spec.n], KEY, spec)
        want = value_bits(evaluate(f, x))
        got = [
            extract_bits(stream, KEY)[slot * spec.n + j] for j in range(spec.n)
        ]
        assert want == got


def test_embed_multi_capacity_error():
    spec = field_spec(16)
    rng = np.random.default_rng(2)
    idents = [Identity.random(spec, 2, rng) for _ in range(17)]
    params = EmbedParams(spec=spec, N=16, delta=INF, key=KEY, vocab_size=512)
    with pytest.raises(CapacityError):
        embed_multi(idents, MockSource(seed=1, vocab_size=512), params)


def test_params_validation():
    spec = field_spec(8)
    with pytest.raises(ValueError):
        EmbedParams(spec=spec, N=1, delta=INF, key=KEY, vocab_size=512)
    with pytest.raises(ValueError):
        EmbedParams(spec=spec, N=4, delta=0.0, key=KEY, vocab_size=512)


def test_stream_json_round_trip():
    spec, ident, params, source = _setup(n=6, N=4)
    stream = embed(ident, source, params)
    text = stream.dumps()
    again = TokenStream.loads(text)
    assert again.tokens == stream.tokens
    assert again.vocab_size == stream.vocab_size
    assert again.dumps() == text


def test_stream_json_validates_range():
    with pytest.raises(ValueError):
        TokenStream.from_json({"vocab_size": 4, "tokens": [0, 5]})
