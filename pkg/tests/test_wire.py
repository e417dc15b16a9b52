import sys
import textwrap

import numpy as np
import pytest

from furnish.wire import ExternalGenerator, WireProtocolError

ECHO_FIXED = """
    import base64, json, sys
    W, H = 8, 6
    payload = base64.b64encode(bytes(i % 256 for i in range(W * H * 3))).decode()
    print(json.dumps({"hello": {"latent_dim": 4, "width": W, "height": H}}), flush=True)
    for line in sys.stdin:
        msg = json.loads(line)
        if msg.get("bye"):
            sys.exit(0)
        print(json.dumps({"id": msg["id"], "rgb_b64": payload}), flush=True)
"""


def adapter(tmp_path, body):
    path = tmp_path / "adapter.py"
    path.write_text(textwrap.dedent(body), encoding="utf-8")
    return [sys.executable, str(path)]


def test_echo_adapter_round_trip(tmp_path):
    with ExternalGenerator(adapter(tmp_path, ECHO_FIXED), timeout=10) as gen:
        assert (gen.latent_dim, gen.width, gen.height) == (4, 8, 6)
        a = gen.generate(np.zeros(4))
        b = gen.generate(np.ones(4))
        assert a.shape == (6, 8, 3)
        assert np.array_equal(a, b)  # fixed grid regardless of z


def test_hundred_requests_id_matched(tmp_path):
    with ExternalGenerator(adapter(tmp_path, ECHO_FIXED), timeout=10) as gen:
        rng = np.random.default_rng(0)
        for _ in range(100):
            grid = gen.generate(rng.normal(size=4))
            assert grid.shape == (6, 8, 3)
        assert gen._next_id == 100


def test_latent_dimension_checked(tmp_path):
    with ExternalGenerator(adapter(tmp_path, ECHO_FIXED), timeout=10) as gen:
        with pytest.raises(ValueError, match="shape"):
            gen.generate(np.zeros(9))


def test_wrong_payload_length_is_fatal(tmp_path):
    body = """
        import base64, json, sys
        print(json.dumps({"hello": {"latent_dim": 2, "width": 4, "height": 4}}), flush=True)
        for line in sys.stdin:
            msg = json.loads(line)
            if msg.get("bye"):
                sys.exit(0)
            short = base64.b64encode(b"xyz").decode()
            print(json.dumps({"id": msg["id"], "rgb_b64": short}), flush=True)
    """
    with ExternalGenerator(adapter(tmp_path, body), timeout=10) as gen:
        with pytest.raises(WireProtocolError, match="3 bytes, expected 48"):
            gen.generate(np.zeros(2))


def test_id_mismatch_is_fatal(tmp_path):
    body = """
        import base64, json, sys
        payload = base64.b64encode(bytes(48)).decode()
        print(json.dumps({"hello": {"latent_dim": 2, "width": 4, "height": 4}}), flush=True)
        for line in sys.stdin:
            msg = json.loads(line)
            if msg.get("bye"):
                sys.exit(0)
            print(json.dumps({"id": 999, "rgb_b64": payload}), flush=True)
    """
    with ExternalGenerator(adapter(tmp_path, body), timeout=10) as gen:
        with pytest.raises(WireProtocolError, match="id 999 does not match request id 0"):
            gen.generate(np.zeros(2))


def test_malformed_json_is_fatal(tmp_path):
    body = """
        import json, sys
        print(json.dumps({"hello": {"latent_dim": 2, "width": 4, "height": 4}}), flush=True)
        for line in sys.stdin:
            print("this is not json", flush=True)
    """
    with ExternalGenerator(adapter(tmp_path, body), timeout=10) as gen:
        with pytest.raises(WireProtocolError, match="malformed response"):
            gen.generate(np.zeros(2))


def test_process_exit_is_fatal(tmp_path):
    body = """
        import json, sys
        print(json.dumps({"hello": {"latent_dim": 2, "width": 4, "height": 4}}), flush=True)
        sys.exit(3)
    """
    gen = ExternalGenerator(adapter(tmp_path, body), timeout=10)
    with pytest.raises(WireProtocolError, match="exited"):
        gen.generate(np.zeros(2))


def test_timeout_is_fatal(tmp_path):
    body = """
        import json, sys, time
        print(json.dumps({"hello": {"latent_dim": 2, "width": 4, "height": 4}}), flush=True)
        for line in sys.stdin:
            time.sleep(60)
    """
    gen = ExternalGenerator(adapter(tmp_path, body), timeout=0.5)
    try:
        with pytest.raises(WireProtocolError, match="no response within"):
            gen.generate(np.zeros(2))
    finally:
        gen._proc.kill()


def test_missing_handshake_is_fatal(tmp_path):
    body = """
        import json, sys
        print(json.dumps({"id": 0, "rgb_b64": ""}), flush=True)
    """
    with pytest.raises(WireProtocolError, match="expected handshake"):
        ExternalGenerator(adapter(tmp_path, body), timeout=10)
