"""Benchmark the compiled kernels against the pure-NumPy fallback.

Runs the three hot kernels (sequential cluster growth, PAM, co-membership
difference) plus an end-to-end stability workload on synthetic matrices and
prints one timing table. Usage:

    python benchmarks/bench_kernels.py [--n 300] [--repeat 5]
"""

import argparse
import time

import numpy as np

from pitchclust._kernels import load_backend


def _random_dissim(rng, n):
    x = rng.random((n, 4))
    d = np.sqrt(((x[:, None] - x[None, :]) ** 2).sum(-1))
    return np.ascontiguousarray(d)


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(n, repeat):
    rng = np.random.default_rng(7)
    D = _random_dissim(rng, n)
    k = 8
    perm = rng.permutation(n)
    seeds, order = perm[:k], perm[k:]
    l1 = rng.integers(1, k + 1, n)
    l2 = rng.integers(1, k + 1, n)

    backends = {}
    for name in ("python", "cython"):
        try:
            backends[name] = load_backend(name)
        except ImportError:
            print(f"backend {name!r} unavailable; skipping")
    rows = []

    def add(label, make_call):
        timings = {}
        results = {}
        for name, mod in backends.items():
            call = make_call(mod)
            results[name] = call()
            timings[name] = _time(call, repeat)
        if len(results) == 2:
            a, b = results["python"], results["cython"]
            if label.startswith("pam"):
                same = (np.array_equal(a[0], b[0])
                        and abs(a[1] - b[1]) < 1e-9)
            else:
                same = np.array_equal(np.asarray(a), np.asarray(b))
        else:
            same = True
        rows.append((label, timings, same))

    add("attach nn", lambda m: lambda: m.attach_sequential(D, seeds, order, 0))
    add("attach avg", lambda m: lambda: m.attach_sequential(D, seeds, order, 2))
    add("pam build+swap",
        lambda m: lambda: m.pam_swap(D, m.pam_build(D, k)))
    add("comembership", lambda m: lambda: m.comembership_diff(l1, l2))

    def stability_workload(mod):
        def run():
            r = np.random.default_rng(11)
            total = 0
            for _ in range(20):
                sample = np.unique(r.integers(0, n, n))
                sub = np.ascontiguousarray(D[np.ix_(sample, sample)])
                p = r.permutation(len(sample))
                lab = mod.attach_sequential(sub, p[:k], p[k:], 2)
                total += mod.comembership_diff(lab, lab[::-1].copy())
            return total

        return run

    add("stability workload (20 resamples)", stability_workload)

    width = max(len(r[0]) for r in rows)
    names = list(backends)
    header = f"{'kernel':<{width}}  " + "  ".join(f"{n:>12}" for n in names)
    if len(names) == 2:
        header += f"  {'speedup':>8}  match"
    print(f"\nn={n}, k={k}, best of {repeat}\n{header}")
    for label, timings, same in rows:
        cells = "  ".join(f"{timings[n] * 1e3:>10.2f}ms" for n in names)
        line = f"{label:<{width}}  {cells}"
        if len(names) == 2:
            line += (f"  {timings['python'] / timings['cython']:>7.1f}x"
                     f"  {'yes' if same else 'NO'}")
        print(line)


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=300)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    bench(args.n, args.repeat)
