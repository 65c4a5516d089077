"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--bits N] [--order K] [--repeat R]

Times one full trial (two sequence walks, counting, prediction) and each
kernel separately, per available backend, and checks the outputs agree.
"""
import argparse
import time

import numpy as np

from markov_mistakes import kernels
from markov_mistakes.harness import ExperimentConfig, SourceSpec, Teacher, run_trial


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bits", type=int, default=200_000)
    ap.add_argument("--order", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    p1 = rng.uniform(0.05, 0.95, 1 << args.order)
    u = rng.random(args.bits)
    d = rng.integers(0, 2, 1 << args.order).astype(np.uint8)
    cfg = ExperimentConfig(source=SourceSpec(1, (0.3, 0.6)), train_length=10_000,
                           test_length=100_000, min_length=1_000)
    teacher = Teacher.from_config(cfg)

    results = {}
    print(f"bits={args.bits} order={args.order} repeat={args.repeat}")
    print(f"{'backend':8} {'walk':>10} {'counts':>10} {'predict':>10} {'trial':>10}")
    for name in kernels.available_backends():
        t_walk, (bits, _) = best_of(
            lambda: kernels.markov_walk(p1, args.order, 0, u, backend=name), args.repeat)
        t_cnt, cnt = best_of(
            lambda: kernels.transition_counts(bits, args.order, args.order, backend=name),
            args.repeat)
        t_pred, pred = best_of(
            lambda: kernels.predict_states(bits, args.order, args.order, d, backend=name),
            args.repeat)
        t_trial, outcome = best_of(lambda: run_trial(cfg, teacher, 7, backend=name),
                                   args.repeat)
        results[name] = (bits, cnt, pred, outcome, (t_walk, t_cnt, t_pred, t_trial))
        print(f"{name:8} {t_walk:10.4f} {t_cnt:10.4f} {t_pred:10.4f} {t_trial:10.4f}")

    if len(results) == 2:
        c, p = results["cython"], results["python"]
        same = (np.array_equal(c[0], p[0]) and all(np.array_equal(a, b) for a, b in zip(c[1], p[1]))
                and all(np.array_equal(a, b) for a, b in zip(c[2], p[2])) and c[3] == p[3])
        speed = [pt / ct for pt, ct in zip(p[4], c[4])]
        print("speedup  " + " ".join(f"{s:10.1f}" for s in speed))
        print(f"outputs identical: {same}")
    else:
        print("compiled backend not built; only the Python fallback was timed")


if __name__ == "__main__":
    main()
