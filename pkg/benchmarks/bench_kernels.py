"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py --out bench.csv

Each case is run on both backends with identical inputs; the outputs are
checked for agreement before timing. Reported times are the best of
``--repeat`` runs (``timeit``), in seconds.
"""
import argparse
import csv
import sys
import timeit

import numpy as np

from gfsc import kernels
from gfsc.graph import knn_affinity, normalized_laplacian


def lowpass_case(n, m, k, gen):
    X = gen.standard_normal((n, m))
    L = normalized_laplacian(knn_affinity(X, 10), sparse=True).matrix.tocsr()
    args = (L.indptr.astype(np.int32), L.indices.astype(np.int32), L.data, X, k)
    return f"lowpass_csr n={n} m={m} k={k} nnz={L.nnz}", "lowpass_csr", args


def hungarian_case(n, gen):
    return f"hungarian n={n}", "hungarian", (gen.random((n, n)),)


def lloyd_case(n, m, g, gen):
    P = gen.standard_normal((n, m))
    return f"lloyd_step n={n} m={m} g={g}", "lloyd_step", (P, P[gen.choice(n, g, replace=False)].copy())


def _agree(a, b):
    if isinstance(a, tuple):
        return all(_agree(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-10, atol=1e-10)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", help="CSV report (stdout when omitted)")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--quick", action="store_true", help="small sizes, for smoke runs")
    args = ap.parse_args(argv)

    if kernels.compiled_backend is None:
        print("compiled backend not built; reinstall with Cython available", file=sys.stderr)
        return 1
    gen = np.random.default_rng(args.seed)
    s = 0.1 if args.quick else 1.0
    cases = [
        lowpass_case(int(5000 * s), 20, 5, gen),
        hungarian_case(int(300 * s), gen),
        hungarian_case(int(60 * s) or 5, gen),
        lloyd_case(int(50000 * s), 10, 10, gen),
    ]
    backends = {"python": kernels.python_backend, "cython": kernels.compiled_backend}
    rows = []
    for label, name, case_args in cases:
        outputs, times = {}, {}
        for bname, mod in backends.items():
            fn = getattr(mod, name)
            outputs[bname] = fn(*case_args)
            times[bname] = min(timeit.repeat(lambda: fn(*case_args), number=1, repeat=args.repeat))
        rows.append([label, f"{times['python']:.6f}", f"{times['cython']:.6f}",
                     f"{times['python'] / times['cython']:.2f}",
                     str(_agree(outputs["python"], outputs["cython"])).lower()])

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["case", "python_s", "cython_s", "speedup", "outputs_agree"])
    w.writerows(rows)
    if args.out:
        fh.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
