import json
from pathlib import Path

import numpy as np
import pytest

from boundary_quality import _kernels_py, boundary, evaluation, masks, scoring

DATA = Path(__file__).parent / "data"

try:
    from boundary_quality import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

BACKENDS = {"python": _kernels_py}
if _kernels_c is not None:
    BACKENDS["cython"] = _kernels_c


@pytest.fixture(params=sorted(BACKENDS))
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    k = BACKENDS[request.param]
    for mod in (masks, boundary, scoring, evaluation):
        monkeypatch.setattr(mod, "kernels", k)
    return k


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def coco_reference():
    return json.loads((DATA / "coco_reference_rle.json").read_text())


def rect_mask(h, w, top, left, rh, rw):
    m = np.zeros((h, w), dtype=np.uint8)
    m[top : top + rh, left : left + rw] = 1
    return m
