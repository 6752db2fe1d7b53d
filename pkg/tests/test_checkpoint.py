import numpy as np
import pytest

from luml1.checkpoint import (
    checkpoint_bytes,
    load_checkpoint,
    save_checkpoint,
    stored_checksum,
)
from luml1.errors import CorruptCheckpointError, FormatError
from luml1.fnv import fnv1a64
from luml1.net import build_tinynet, net_forward

from conftest import rand_image


class TestFnv:
    def test_known_vectors(self):
        # published FNV-1a 64-bit test vectors
        assert fnv1a64(b"") == 0xCBF29CE484222325
        assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
        assert fnv1a64(b"foobar") == 0x85944171F73967E8


class TestCheckpointRoundTrip:
    def test_parameters_survive_at_float32_precision(self, tmp_path):
        net = build_tinynet(50, hidden_channels=5, hidden_depth=1)
        path = tmp_path / "net.ckpt"
        save_checkpoint(net, path)
        loaded = load_checkpoint(path)
        assert loaded.residual_mode == net.residual_mode
        assert len(loaded.layers) == len(net.layers)
        for a, b in zip(loaded.layers, net.layers):
            assert np.array_equal(a.kernels, b.kernels.astype("<f4").astype(np.float64))
            assert np.array_equal(a.bias, b.bias.astype("<f4").astype(np.float64))

    def test_same_net_same_bytes(self):
        a = build_tinynet(51)
        b = build_tinynet(51)
        assert checkpoint_bytes(a) == checkpoint_bytes(b)

    def test_non_residual_flag_round_trips(self, tmp_path):
        net = build_tinynet(52, hidden_channels=4, hidden_depth=0, residual_mode=False)
        path = tmp_path / "net.ckpt"
        save_checkpoint(net, path)
        assert load_checkpoint(path).residual_mode is False

    def test_loaded_net_runs(self, tmp_path):
        net = build_tinynet(53, hidden_channels=4, hidden_depth=0)
        path = tmp_path / "net.ckpt"
        save_checkpoint(net, path)
        out, _ = net_forward(load_checkpoint(path), rand_image(1, 8, 8))
        assert out.shape == (8, 8, 3)


class TestCheckpointCorruption:
    def test_flipped_payload_byte_fails_checksum(self, tmp_path):
        net = build_tinynet(54, hidden_channels=4, hidden_depth=0)
        path = tmp_path / "net.ckpt"
        save_checkpoint(net, path)
        raw = bytearray(path.read_bytes())
        mid = len(raw) // 2  # well inside the kernel payload
        raw[mid] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(CorruptCheckpointError, match="checksum"):
            load_checkpoint(path)

    def test_truncated_file(self, tmp_path):
        net = build_tinynet(55, hidden_channels=4, hidden_depth=0)
        path = tmp_path / "net.ckpt"
        save_checkpoint(net, path)
        path.write_bytes(path.read_bytes()[:-20])
        with pytest.raises(FormatError, match="truncated"):
            load_checkpoint(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "net.ckpt"
        path.write_bytes(b"NOTANET\n1 1\n3 3 3\n" + bytes(100))
        with pytest.raises(FormatError, match="magic"):
            load_checkpoint(path)

    def test_stored_checksum_matches_recomputation(self, tmp_path):
        net = build_tinynet(56, hidden_channels=4, hidden_depth=0)
        path = tmp_path / "net.ckpt"
        save_checkpoint(net, path)
        load_checkpoint(path)  # must not raise
        blob = path.read_bytes()
        payload = blob[_payload_start(blob) : -8]
        assert stored_checksum(path) == fnv1a64(payload)


def _payload_start(blob: bytes) -> int:
    pos = len(b"LUMNET1\n")
    nl = blob.index(b"\n", pos)
    n_layers = int(blob[pos:nl].split()[0])
    pos = nl + 1
    for _ in range(n_layers):
        pos = blob.index(b"\n", pos) + 1
    return pos
