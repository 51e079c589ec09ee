"""Compare the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Both implementations are imported directly, so the comparison does not
depend on ``BQ_PURE_PYTHON``. Outputs are checked for equality before timing.
"""

import argparse
import timeit

import numpy as np

from boundary_quality import _kernels_py

try:
    from boundary_quality import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    mask = (rng.random((512, 512)) < 0.5).astype(np.uint8)
    blob = np.zeros((512, 512), np.uint8)
    blob[100:400, 80:300] = 1
    counts = _kernels_py.rle_encode(mask)
    text = _kernels_py.rle_to_string(counts)
    image = rng.random((512, 512))
    ious = rng.random((200, 100))
    ignore = (rng.random(100) < 0.1).astype(np.uint8)
    return {
        "rle_encode (noise 512^2)": ("rle_encode", (mask,)),
        "rle_encode (blob 512^2)": ("rle_encode", (blob,)),
        "rle_decode": ("rle_decode", (counts, 512, 512)),
        "rle_to_string": ("rle_to_string", (counts,)),
        "rle_from_string": ("rle_from_string", (text,)),
        "laplacian 4-nbr": ("laplacian", (image, False)),
        "laplacian 8-nbr": ("laplacian", (image, True)),
        "greedy_match 200x100": ("greedy_match", (ious, 0.5, ignore)),
    }


def same(a, b):
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(np.asarray(a), np.asarray(b))
    return list(a) == list(b) if not isinstance(a, str) else a == b


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels not built; only the fallback is available")
    impls = {"python": _kernels_py}
    if _kernels is not None:
        impls["cython"] = _kernels

    rng = np.random.default_rng(0)
    print(f"{'kernel':<26} " + " ".join(f"{k + ' ms':>11}" for k in impls) + ("    speedup" if len(impls) > 1 else ""))
    for label, (fn, fargs) in cases(rng).items():
        results = {k: getattr(m, fn)(*fargs) for k, m in impls.items()}
        if len(impls) > 1 and not same(results["python"], results["cython"]):
            raise SystemExit(f"{label}: backends disagree")
        times = {}
        for k, m in impls.items():
            f = getattr(m, fn)
            n, _ = timeit.Timer(lambda: f(*fargs)).autorange()
            times[k] = min(timeit.repeat(lambda: f(*fargs), number=n, repeat=args.repeat)) / n * 1e3
        row = f"{label:<26} " + " ".join(f"{t:11.3f}" for t in times.values())
        if len(impls) > 1:
            row += f"  {times['python'] / times['cython']:8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
