import os

import numpy as np
import pytest

from boundary_quality import _backend, _kernels_py
from boundary_quality.errors import FormatError

from .conftest import BACKENDS
from .oracles import greedy_loops, laplacian_loops


def test_backend_selected():
    assert _backend.BACKEND in ("cython", "python")
    forced = os.environ.get("BQ_PURE_PYTHON", "") not in ("", "0")
    assert _backend.BACKEND == ("python" if forced or "cython" not in BACKENDS else "cython")


def test_pure_python_env_switch(monkeypatch):
    import importlib

    monkeypatch.setenv("BQ_PURE_PYTHON", "1")
    mod = importlib.reload(_backend)
    try:
        assert mod.BACKEND == "python"
        assert mod.kernels is _kernels_py
    finally:
        monkeypatch.delenv("BQ_PURE_PYTHON")
        importlib.reload(_backend)


@pytest.mark.parametrize("eight", [False, True])
def test_laplacian_matches_loops(backend, rng, eight):
    img = rng.normal(size=(7, 9))
    got = backend.laplacian(img, eight)
    np.testing.assert_allclose(got, laplacian_loops(img.tolist(), eight), rtol=0, atol=1e-12)


def test_rle_kernels_agree_across_backends(rng):
    for _ in range(50):
        h, w = rng.integers(1, 20, 2)
        m = (rng.random((h, w)) < rng.random()).astype(np.uint8)
        outs = [k.rle_encode(m) for k in BACKENDS.values()]
        assert all(o == outs[0] for o in outs)
        strings = [k.rle_to_string(outs[0]) for k in BACKENDS.values()]
        assert len(set(strings)) == 1
        for k in BACKENDS.values():
            assert k.rle_from_string(strings[0]) == outs[0]
            np.testing.assert_array_equal(k.rle_decode(outs[0], h, w), m)


def test_greedy_match_matches_loops(backend, rng):
    for _ in range(100):
        p, g = rng.integers(0, 5, 2)
        ious = np.round(rng.random((p, g)), 1)
        got = backend.greedy_match(ious, 0.5, np.zeros(g, dtype=np.uint8)).tolist()
        assert got == greedy_loops(ious.tolist(), 0.5)


def test_greedy_match_prefers_unignored(backend):
    ious = np.array([[0.9, 0.6], [0.8, 0.7]])
    # GT 0 ignored: first pred takes GT 1 despite the better ignored overlap
    got = backend.greedy_match(ious, 0.5, np.array([1, 0], dtype=np.uint8)).tolist()
    assert got == [1, 0]


@pytest.mark.parametrize("text", ["0`0\x7f", "0 ", "é"])
def test_decompress_rejects_bad_characters(backend, text):
    with pytest.raises(FormatError, match="outside code range"):
        backend.rle_from_string(text)


def test_decompress_rejects_truncated_continuation(backend):
    # '`' is 48 + 0x30: continuation bit set with nothing following
    with pytest.raises(FormatError, match="truncated"):
        backend.rle_from_string("0`")
