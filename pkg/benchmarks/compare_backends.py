"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/compare_backends.py [--sizes 200x10,1000x40] [--p 1,1.5,2,3]
"""
import argparse
import math

from robustmdp.bench import compare_backends


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="200x10,1000x20,2000x40")
    parser.add_argument("--p", default="1,1.5,2,3")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    sizes = [tuple(int(x) for x in item.split("x")) for item in args.sizes.split(",")]
    ps = [float(p) for p in args.p.split(",")]
    rows = compare_backends(sizes, ps, repeats=args.repeats)
    table = {}
    for r in rows:
        table.setdefault((r["S"], r["A"], r["p"]), {})[r["backend"]] = r["seconds"]
    print(f"{'S':>6} {'A':>4} {'p':>5} {'cython':>12} {'python':>12} {'speedup':>8}")
    for (S, A, p), t in table.items():
        fast, slow = t.get("cython", math.nan), t.get("python", math.nan)
        print(f"{S:>6} {A:>4} {p:>5} {fast:>12.3e} {slow:>12.3e} {slow / fast:>8.1f}")


if __name__ == "__main__":
    main()
