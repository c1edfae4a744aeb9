"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from cvqbm import _kernels_py, kernels
from cvqbm.gates import loss_coefficients


def workloads():
    rng = np.random.default_rng(0)
    q = np.linspace(-8, 8, 1601)
    z = rng.uniform(0, 1, 1401)
    d, h = 12, 12
    rho = rng.normal(size=(d, h, d, h)) + 1j * rng.normal(size=(d, h, d, h))
    coeffs = loss_coefficients(0.7, d)
    return {
        "hermite_table(20, 1601 pts)": lambda m: m.hermite_table(20, q),
        "betainc(1401 pts, a=4, b=5)": lambda m: m.betainc(z, 4.0, 5.0),
        "loss_tensor(12x12x12x12)": lambda m: m.loss_tensor(rho, coeffs),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = {"python": _kernels_py}
    if kernels.compiled_backend is not None:
        backends["compiled"] = kernels.compiled_backend
    else:
        print("compiled extension not built; timing the python fallback only")
    print(f"{'kernel':32s} " + " ".join(f"{b:>12s}" for b in backends) + "   speed-up")
    for name, fn in workloads().items():
        times = {}
        for label, mod in backends.items():
            timer = timeit.Timer(lambda: fn(mod))
            number, _ = timer.autorange()
            times[label] = min(timer.repeat(args.repeat, number)) / number
        cells = " ".join(f"{times[b] * 1e3:10.3f}ms" for b in backends)
        ratio = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        print(f"{name:32s} {cells}   {ratio:7.1f}x")


if __name__ == "__main__":
    main()
