"""Time the numba and numpy kernel backends side by side.

    python3 benchmarks/bench_kernels.py [--repeat N] [--raters R] [--width W --height H]

Both backends run in this process; the backend is switched through the
BBOXQA_DISABLE_NUMBA environment variable, which is read on every call. The
script also checks that both backends return identical results.
"""

import argparse
import os
import time
from dataclasses import replace

import numpy as np

from bboxqa import kernels
from bboxqa._accel import DISABLE_ENV, HAVE_NUMBA
from bboxqa.agreement import AgreementConfig, alpha_per_image
from bboxqa.quality import vitality_reports
from bboxqa.rng import derive_seed
from bboxqa.synth import NoiseProfile, SceneSpec, generate_truth, simulate_corpus


def timed(fn, repeat):
    fn()  # warm-up (numba compilation, caches)
    best = float("inf")
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def set_backend(name):
    if name == "numpy":
        os.environ[DISABLE_ENV] = "1"
    else:
        os.environ.pop(DISABLE_ENV, None)


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--raters", type=int, default=10)
    parser.add_argument("--width", type=int, default=1200)
    parser.add_argument("--height", type=int, default=800)
    args = parser.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    n_units = 3 * args.width * args.height
    rng = np.random.default_rng(0)
    planes = np.stack([kernels.pack_bits(rng.random(n_units) < 0.2) for _ in range(args.raters)])
    mask = kernels.pack_bits(rng.random(n_units) < 0.8)
    dense = rng.integers(0, 3, (200_000, args.raters)).astype(np.int8)
    dense[rng.random(dense.shape) < 0.2] = -1
    seed = derive_seed(0, "pixel-drop", "bench")

    spec = SceneSpec(width=args.width, height=args.height, n_images=1, objects_per_image=(10, 20), min_size=20, max_size=200, seed=1)
    truth = generate_truth(spec)
    profile = NoiseProfile(p_miss=0.05, jitter_sigma=3.0)
    corpus = simulate_corpus(truth, {f"R{i}": profile for i in range(args.raters)}, 1)
    four = simulate_corpus(generate_truth(replace(spec, n_images=5)), {f"A{i}": profile for i in range(4)}, 1)
    cfg = AgreementConfig(seed=1)

    cases = [
        (f"pair_counts ({args.raters} raters, {n_units:,} units)", lambda: kernels.pair_counts(planes, mask)),
        (f"coincidence_tallies (200,000 x {args.raters})", lambda: kernels.coincidence_tallies(dense, 3)),
        (f"fisher_yates_prefix ({n_units:,}, 20%)", lambda: kernels.fisher_yates_prefix(n_units, n_units // 5, seed)),
        (f"image alpha ({args.raters} raters)", lambda: alpha_per_image(corpus, cfg)[truth.images[0].id].alpha),
        ("vitality (4 annotators, 5 images)", lambda: {a: r.mean_V for a, r in vitality_reports(four, cfg).items()}),
    ]
    print(f"{'kernel':<46} {'numba [s]':>10} {'numpy [s]':>10} {'speed-up':>9}  equal")
    for name, fn in cases:
        set_backend("numba")
        t_numba, r_numba = timed(fn, args.repeat)
        set_backend("numpy")
        t_numpy, r_numpy = timed(fn, args.repeat)
        print(f"{name:<46} {t_numba:>10.4f} {t_numpy:>10.4f} {t_numpy / t_numba:>8.1f}x  {same(r_numba, r_numpy)}")
    set_backend("numba")


if __name__ == "__main__":
    main()
