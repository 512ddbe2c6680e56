"""Client for the token-bridge wire protocol.

A bridge is a subprocess that exposes a causal language model over
newline-delimited JSON on stdio.  The client proposes a vocabulary
size with {"type": "init", "vocab_size": V} and expects
{"type": "ready"}; each {"type": "next", "context": [...],
"bias_ids": [...], "delta": x} is answered in order by a single
{"type": "token", "id": t}.  delta serializes as the string "inf"
when infinite.  The protocol is strictly serial: one request in
flight at a time, and the secret key never crosses the wire (the
client sends only token ids and bias sets).
"""

from __future__ import annotations

import json
import math
import subprocess
from typing import Sequence

import numpy as np

__all__ = ["BridgeError", "BridgeSource"]


class BridgeError(RuntimeError):
    """Protocol violation or error reply from the bridge."""


class BridgeSource:
    """TokenSource backed by a bridge subprocess."""

    def __init__(self, command: Sequence[str], vocab_size: int):
        self.vocab_size = vocab_size
        self._proc = subprocess.Popen(
            list(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        reply = self._roundtrip({"type": "init", "vocab_size": vocab_size})
        if reply.get("type") != "ready":
            self.close()
            raise BridgeError(f"bridge did not become ready: {reply}")

    def _roundtrip(self, message: dict) -> dict:
        proc = self._proc
        if proc.poll() is not None:
            raise BridgeError("bridge process has exited")
        try:
            proc.stdin.write(json.dumps(message) + "\n")
            proc.stdin.flush()
            line = proc.stdout.readline()
        except (BrokenPipeError, OSError) as e:
            raise BridgeError(f"bridge connection lost: {e}") from None
        if not line:
            raise BridgeError("bridge closed the connection")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as e:
            raise BridgeError(f"bridge sent malformed JSON: {line!r} ({e})") from None
        if reply.get("type") == "error":
            raise BridgeError(f"bridge error: {reply.get('message')}")
        return reply

    def next(
        self, context: Sequence[int], bias_ids: np.ndarray | None, delta: float
    ) -> int:
        if bias_ids is None:
            ids: list[int] = []
        else:
            ids = [int(i) for i in bias_ids]
        reply = self._roundtrip(
            {
                "type": "next",
                "context": [int(t) for t in context],
                "bias_ids": ids,
                "delta": "inf" if math.isinf(delta) else float(delta),
            }
        )
        if reply.get("type") != "token":
            raise BridgeError(f"expected a token reply, got {reply}")
        token = int(reply["id"])
        if not 0 <= token < self.vocab_size:
            raise BridgeError(f"bridge returned out-of-vocabulary token {token}")
        return token

    def close(self) -> None:
        proc = self._proc
        if proc.poll() is None:
            try:
                proc.stdin.close()
            except OSError:
                pass
            try:
                proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()

    def __enter__(self) -> BridgeSource:
        return self

    def __exit__(self, *exc) -> None:
        self.close()
