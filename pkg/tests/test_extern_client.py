"""Client-side tests for the external reconstructor protocol.

A minimal stub adapter (plain Python, newline-delimited JSON on stdio) stands
in for the real out-of-process reconstructor, so these tests cover the client
contract without the separate adapter package being built.
"""

import subprocess
import sys
import textwrap
from pathlib import Path

import numpy as np
import pytest

import aedr
from aedr import CountingBackend, ExternalBackend, ExternalBackendError, Image
from aedr.backends import decode_pixels, encode_pixels

STUB = textwrap.dedent(
    """
    import base64, json, sys, time

    mode = sys.argv[1] if len(sys.argv) > 1 else "identity"

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            print(json.dumps({"id": None, "ok": False, "error": "parse"}), flush=True)
            continue
        op = msg.get("op")
        if op == "hello":
            print(json.dumps({
                "id": msg["id"], "ok": True, "name": "stub", "version": "1.0",
                "deterministic": True, "native_width": None, "native_height": None,
            }), flush=True)
        elif op == "reconstruct":
            if mode == "slow":
                time.sleep(2.0)
            if mode == "fail":
                print(json.dumps({"id": msg["id"], "ok": False, "error": "backend"}), flush=True)
                continue
            raw = base64.b64decode(msg["pixels_b64"])
            if len(raw) != msg["width"] * msg["height"] * msg["channels"] * 4:
                print(json.dumps({"id": msg["id"], "ok": False, "error": "dims"}), flush=True)
                continue
            print(json.dumps({
                "id": msg["id"], "ok": True,
                "width": msg["width"], "height": msg["height"], "channels": msg["channels"],
                "pixels_b64": base64.b64encode(raw).decode(),
            }), flush=True)
        elif op == "shutdown":
            print(json.dumps({"id": msg["id"], "ok": True}), flush=True)
            break
        else:
            print(json.dumps({"id": msg.get("id"), "ok": False, "error": "parse"}), flush=True)
    """
)


@pytest.fixture(scope="module")
def stub_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("stub") / "stub_adapter.py"
    path.write_text(STUB)
    return path


def stub_command(stub_path, mode="identity"):
    return [sys.executable, str(stub_path), mode]


def f32_image(rng, h=8, w=8, c=1):
    """Random image whose samples are exactly float32-representable."""
    return Image(rng.random((h, w, c)).astype(np.float32).astype(np.float64))


class TestWireEncoding:
    def test_pixel_codec_round_trip(self):
        rng = np.random.default_rng(0)
        img = f32_image(rng, 5, 7, 3)
        back = decode_pixels(encode_pixels(img), 7, 5, 3)
        np.testing.assert_array_equal(back.data, img.data)

    def test_payload_length_checked(self):
        img = f32_image(np.random.default_rng(1), 4, 4)
        with pytest.raises(ExternalBackendError, match="bytes"):
            decode_pixels(encode_pixels(img), 5, 5, 1)


class TestExternalBackend:
    def test_handshake_metadata(self, stub_path):
        with ExternalBackend(stub_command(stub_path)) as backend:
            assert backend.id == "extern:stub@1.0"
            assert backend.deterministic

    def test_identity_round_trip(self, stub_path):
        rng = np.random.default_rng(2)
        with ExternalBackend(stub_command(stub_path)) as backend:
            for _ in range(5):
                img = f32_image(rng, 6, 9)
                out = backend.reconstruct(img)
                np.testing.assert_array_equal(out.data, img.data)

    def test_double_reconstruct_through_wire(self, stub_path):
        rng = np.random.default_rng(3)
        with ExternalBackend(stub_command(stub_path)) as backend:
            counter = CountingBackend(backend)
            record = aedr.double_reconstruct(counter, f32_image(rng, 12, 12))
            assert counter.calls == 2
            assert record.l1 == 0.0
            assert record.degenerate

    def test_backend_error_propagates(self, stub_path):
        with ExternalBackend(stub_command(stub_path, "fail")) as backend:
            with pytest.raises(ExternalBackendError, match="backend"):
                backend.reconstruct(f32_image(np.random.default_rng(4)))

    def test_timeout(self, stub_path):
        with ExternalBackend(stub_command(stub_path, "slow"), timeout=0.4) as backend:
            with pytest.raises(ExternalBackendError, match="within"):
                backend.reconstruct(f32_image(np.random.default_rng(5)))

    def test_process_pool(self, stub_path):
        rng = np.random.default_rng(6)
        with ExternalBackend(stub_command(stub_path), processes=3) as backend:
            images = [f32_image(rng, 4, 4) for _ in range(12)]
            for img in images:
                np.testing.assert_array_equal(backend.reconstruct(img).data, img.data)

    def test_close_terminates_child(self, stub_path):
        backend = ExternalBackend(stub_command(stub_path))
        proc = backend._procs[0]._proc
        backend.close()
        assert proc.poll() is not None

    def test_unlaunchable_command(self):
        with pytest.raises(ExternalBackendError, match="failed to start"):
            ExternalBackend(["/nonexistent/adapter-binary"])


ADAPTER_CLI = Path(__file__).resolve().parent.parent / "adapter" / "dist" / "cli.js"


@pytest.mark.skipif(not ADAPTER_CLI.exists(), reason="adapter package not built")
class TestAgainstBuiltAdapter:
    """Cross-checks the client against the real adapter when it is present."""

    def test_identity_round_trip(self):
        rng = np.random.default_rng(7)
        with ExternalBackend(["node", str(ADAPTER_CLI), "--identity"]) as backend:
            assert backend.id.startswith("extern:")
            for _ in range(3):
                img = f32_image(rng, 10, 6)
                np.testing.assert_array_equal(backend.reconstruct(img).data, img.data)

    def test_linear_model_matches_local_backend(self, tmp_path, smooth_backend):
        aedr.save_backend(smooth_backend, tmp_path / "backend.json")
        rng = np.random.default_rng(8)
        img = f32_image(rng, 24, 24)
        with ExternalBackend(
            ["node", str(ADAPTER_CLI), "--model", f"linear:{tmp_path / 'backend.json'}"]
        ) as backend:
            remote = backend.reconstruct(img)
        # The adapter hosts the same projection; sigma noise differs per call,
        # so compare against the noise-free projection within the noise scale.
        local = smooth_backend.decode(smooth_backend.encode(img))
        rms = float(np.sqrt(np.mean((remote.data - local.data) ** 2)))
        noise_rms = smooth_backend.noise_sigma * np.sqrt(smooth_backend.latent_dim / img.pixels.size)
        assert rms <= 6.0 * noise_rms
