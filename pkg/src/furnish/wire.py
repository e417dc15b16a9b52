"""Client for external generator processes.

Wire protocol (line-delimited UTF-8 JSON over the child's stdio):

* handshake, sent once by the adapter on startup::

    {"hello": {"latent_dim": D, "width": W, "height": H}}

* request / response, matched by a monotonically increasing id::

    {"id": N, "z": [f1, ..., fD]}
    {"id": N, "rgb_b64": "<base64 of W*H*3 bytes, row-major RGB8>"}

* shutdown: the client sends ``{"bye": true}`` and the adapter exits 0.

Any protocol violation (process death, malformed line, wrong payload
length, id mismatch, timeout) is fatal and raises
:class:`WireProtocolError` with diagnostics.
"""

from __future__ import annotations

import base64
import json
import queue
import subprocess
import threading

import numpy as np


class WireProtocolError(RuntimeError):
    pass


class ExternalGenerator:
    """Drives one adapter subprocess; one request in flight at a time."""

    kind = "external"

    def __init__(self, command: list[str], timeout: float = 30.0):
        self.command = list(command)
        self.timeout = timeout
        self._lock = threading.Lock()
        self._next_id = 0
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            encoding="utf-8",
            bufsize=1,
        )
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

        hello = self._read_message()
        if "hello" not in hello:
            raise WireProtocolError(f"expected handshake, got: {hello!r}")
        try:
            self.latent_dim = int(hello["hello"]["latent_dim"])
            self.width = int(hello["hello"]["width"])
            self.height = int(hello["hello"]["height"])
        except (KeyError, TypeError, ValueError) as exc:
            raise WireProtocolError(f"malformed handshake {hello!r}: {exc}") from None

    def _pump(self):
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # EOF marker

    def _read_message(self) -> dict:
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise WireProtocolError(
                f"no response within {self.timeout}s from {self.command!r}"
            ) from None
        if line is None:
            code = self._proc.poll()
            raise WireProtocolError(f"generator process exited (returncode={code})")
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            raise WireProtocolError(f"malformed response line {line!r}: {exc}") from None
        if not isinstance(message, dict):
            raise WireProtocolError(f"expected a JSON object, got: {line!r}")
        return message

    def _send(self, message: dict) -> None:
        try:
            self._proc.stdin.write(json.dumps(message) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise WireProtocolError(f"generator process unreachable: {exc}") from None

    def generate(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.latent_dim,):
            raise ValueError(f"latent has shape {z.shape}, generator wants ({self.latent_dim},)")
        with self._lock:
            request_id = self._next_id
            self._next_id += 1
            self._send({"id": request_id, "z": [float(v) for v in z]})
            response = self._read_message()
        if response.get("id") != request_id:
            raise WireProtocolError(
                f"response id {response.get('id')!r} does not match request id {request_id}"
            )
        if "rgb_b64" not in response:
            raise WireProtocolError(f"response missing rgb_b64: {response!r}")
        try:
            payload = base64.b64decode(response["rgb_b64"], validate=True)
        except Exception as exc:
            raise WireProtocolError(f"undecodable rgb_b64 payload: {exc}") from None
        expected = self.width * self.height * 3
        if len(payload) != expected:
            raise WireProtocolError(
                f"payload is {len(payload)} bytes, expected {expected} (W*H*3)"
            )
        grid = np.frombuffer(payload, dtype=np.uint8).reshape(self.height, self.width, 3)
        return grid.copy()

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._send({"bye": True})
                self._proc.wait(timeout=self.timeout)
            except (WireProtocolError, subprocess.TimeoutExpired):
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()
