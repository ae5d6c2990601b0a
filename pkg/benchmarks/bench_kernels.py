"""Compare the compiled occupancy kernels against the pure-numpy fallback.

Run:  python benchmarks/bench_kernels.py
Both backends implement the same contract, so the outputs are asserted
bit-identical before timings are reported.
"""

import time

import numpy as np

from cylperc._kernels import BACKEND, fallback
from cylperc.sampler import WindowSpec, sample_process

try:
    from cylperc._kernels import _occupancy as compiled
except ImportError:
    compiled = None


def _time(fn, *args, repeats=3):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return out, best


def bench_slice(d, u, half, eps, seed):
    window = WindowSpec(d, np.zeros(d), half * np.sqrt(2.0))
    s = sample_process(window, u, seed)
    n = int(np.ceil(2 * half / eps))
    args = (
        np.ascontiguousarray(s.directions),
        np.ascontiguousarray(s.anchors),
        np.zeros(d),
        -half, -half, eps, n, n,
    )
    out_py, t_py = _time(fallback.occupy_slice, *args)
    print(f"slice d={d} u={u} grid={n}x{n} lines={s.n_lines}")
    print(f"  python : {t_py * 1e3:9.1f} ms")
    if compiled is not None:
        out_cy, t_cy = _time(compiled.occupy_slice, *args)
        assert np.array_equal(out_py, out_cy), "backend outputs differ"
        print(f"  cython : {t_cy * 1e3:9.1f} ms   speedup x{t_py / t_cy:.1f}")


def bench_grid(d, u, R, eps, seed):
    window = WindowSpec(d, np.zeros(d), R)
    s = sample_process(window, u, seed)
    n = int(np.ceil(2 * R / eps))
    args = (
        np.ascontiguousarray(s.directions),
        np.ascontiguousarray(s.anchors),
        np.full(d, -R), eps, (n,) * d,
    )
    out_py, t_py = _time(fallback.occupy_grid, *args)
    print(f"grid  d={d} u={u} shape={(n,) * d} lines={s.n_lines}")
    print(f"  python : {t_py * 1e3:9.1f} ms")
    if compiled is not None:
        out_cy, t_cy = _time(compiled.occupy_grid, *args)
        assert np.array_equal(out_py, out_cy), "backend outputs differ"
        print(f"  cython : {t_cy * 1e3:9.1f} ms   speedup x{t_py / t_cy:.1f}")


def main():
    print(f"active backend: {BACKEND}")
    if compiled is None:
        print("compiled kernels unavailable; timing the fallback only")
    bench_slice(3, 0.5, 40.0, 0.1, seed=11)
    bench_slice(4, 0.05, 40.0, 0.1, seed=12)
    bench_grid(3, 0.5, 8.0, 0.25, seed=13)
    bench_grid(4, 0.2, 6.0, 0.25, seed=14)


if __name__ == "__main__":
    main()
