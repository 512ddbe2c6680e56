"""Bridge client protocol behavior against a scripted fake bridge."""

import sys
import textwrap

import numpy as np
import pytest

from linemark.bridge import BridgeError, BridgeSource

FAKE_BRIDGE = textwrap.dedent(
    """
    import json, sys

    vocab = None
    for line in sys.stdin:
        msg = json.loads(line)
        if msg["type"] == "init":
            vocab = msg["vocab_size"]
            if vocab > 1000000:
                print(json.dumps({"type": "error", "message": "vocab too large"}), flush=True)
                break
            print(json.dumps({"type": "ready"}), flush=True)
        elif msg["type"] == "next":
            bias = msg["bias_ids"]
            if msg["delta"] == "inf" and bias:
                tok = min(bias)
            elif bias:
                tok = max(bias) % vocab
            else:
                tok = len(msg["context"]) % vocab
            print(json.dumps({"type": "token", "id": tok}), flush=True)
        elif msg["type"] == "crash":
            sys.exit(3)
        else:
            print(json.dumps({"type": "error", "message": "bad request"}), flush=True)
    """
)

ROGUE_BRIDGE = FAKE_BRIDGE.replace('"id": tok', '"id": 99999')


@pytest.fixture
def fake_cmd(tmp_path):
    path = tmp_path / "fake_bridge.py"
    path.write_text(FAKE_BRIDGE)
    return [sys.executable, str(path)]


def test_handshake_and_next(fake_cmd):
    with BridgeSource(fake_cmd, vocab_size=512) as src:
        assert src.next([1, 2, 3], None, 0.0) == 3
        assert src.next([], np.array([9, 4, 7]), float("inf")) == 4
        assert src.next([], np.array([9, 4, 7]), 2.0) == 9


def test_forced_sampling_always_in_bias_set(fake_cmd):
    with BridgeSource(fake_cmd, vocab_size=512) as src:
        bias = np.array([10, 20, 30])
        for step in range(50):
            assert src.next(list(range(step)), bias, float("inf")) in (10, 20, 30)


def test_init_error_raises(fake_cmd):
    with pytest.raises(BridgeError):
        BridgeSource(fake_cmd, vocab_size=2_000_000)


def test_out_of_vocab_reply_rejected(tmp_path):
    path = tmp_path / "rogue.py"
    path.write_text(ROGUE_BRIDGE)
    with BridgeSource([sys.executable, str(path)], vocab_size=512) as src:
        with pytest.raises(BridgeError):
            src.next([1], None, 0.0)


def test_dead_bridge_raises(fake_cmd):
    src = BridgeSource(fake_cmd, vocab_size=512)
    src._proc.stdin.write('{"type": "crash"}\n')
    src._proc.stdin.flush()
    src._proc.wait(timeout=10)
    with pytest.raises(BridgeError):
        src.next([1], None, 0.0)
    src.close()
