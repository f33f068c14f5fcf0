"""Wall-clock scaling benchmark for robust value iteration.

Random instances have kernel rows drawn from a flat Dirichlet, rewards
uniform on ``[0, 1]`` and every radius equal to ``0.1 / S``.  Each
instance is solved once per (rect, p) configuration and once without
uncertainty, so robust and non-robust timings share the same model.
"""
import csv
import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from robustmdp.mdp import Mdp
from robustmdp.robust_bellman import Rect, UncertaintySpec
from robustmdp.solver import SolveConfig, solve

FIELDS = ("S", "A", "p", "rect", "sweeps", "wall_time_seconds", "time_per_sweep", "kappa_time_fraction")
RATIO_FIELDS = ("S", "A", "p", "rect", "trial", "time_per_sweep", "baseline_time_per_sweep", "ratio", "overhead_per_sweep")


@dataclass
class BenchRecord:
    S: int
    A: int
    p: str
    rect: str
    sweeps: int
    wall_time_seconds: float
    time_per_sweep: float
    kappa_time_fraction: float
    trial: int = 0


def format_norm(p):
    return "inf" if math.isinf(p) else f"{p:g}"


def random_mdp(S, A, gamma, rng):
    kernel = rng.dirichlet(np.ones(S), size=(S, A))
    reward = rng.uniform(0.0, 1.0, size=(S, A))
    return Mdp(kernel, reward, gamma)


def bench_uncertainty(rect, p, S, A, scale=0.1):
    return UncertaintySpec.uniform(rect, p, scale / S, scale / S, S, A)


def time_solve(m, u, cfg, *, trial=0, backend_name=None):
    t0 = time.perf_counter()
    res = solve(m, u, cfg, backend_name=backend_name)
    wall = time.perf_counter() - t0
    sweeps = max(res.sweeps, 1)
    return BenchRecord(
        S=m.num_states,
        A=m.num_actions,
        p=format_norm(u.p) if u.rect is not Rect.NONE else "-",
        rect=u.rect.value,
        sweeps=sweeps,
        wall_time_seconds=wall,
        time_per_sweep=res.sweep_seconds / sweeps,
        kappa_time_fraction=res.kappa_seconds / res.sweep_seconds if res.sweep_seconds > 0 else 0.0,
        trial=trial,
    )


def run_bench(sizes, ps, rects, trials=1, seed=0, eps=1e-6, gamma=0.9, *, max_sweeps=100_000,
              backend_name=None, progress=None):
    """Time every (size, p, rect) configuration on ``trials`` fresh instances.

    ``sizes`` is a list of ``(S, A)`` pairs.  A non-robust baseline row is
    always produced for each instance.  Trial ``t`` of size ``(S, A)``
    draws its instance from an independent child seed.
    """
    cfg = SolveConfig(target_eps=eps, max_sweeps=max_sweeps)
    rects = [Rect(r) for r in rects if Rect(r) is not Rect.NONE]
    seeds = np.random.SeedSequence(seed).spawn(len(sizes) * trials)
    records = []
    for i, (S, A) in enumerate(sizes):
        for t in range(trials):
            rng = np.random.default_rng(seeds[i * trials + t])
            m = random_mdp(S, A, gamma, rng)
            configs = [UncertaintySpec.none()]
            configs += [bench_uncertainty(r, p, S, A) for r in rects for p in ps]
            for u in configs:
                rec = time_solve(m, u, cfg, trial=t, backend_name=backend_name)
                records.append(rec)
                if progress is not None:
                    progress(rec)
    return records


def ratio_rows(records):
    """Robust-over-baseline per-sweep time for every robust record."""
    base = {(r.S, r.A, r.trial): r.time_per_sweep for r in records if r.rect == Rect.NONE.value}
    rows = []
    for r in records:
        if r.rect == Rect.NONE.value:
            continue
        b = base[(r.S, r.A, r.trial)]
        rows.append({
            "S": r.S,
            "A": r.A,
            "p": r.p,
            "rect": r.rect,
            "trial": r.trial,
            "time_per_sweep": r.time_per_sweep,
            "baseline_time_per_sweep": b,
            "ratio": r.time_per_sweep / b,
            "overhead_per_sweep": r.time_per_sweep - b,
        })
    return rows


def write_csv(records, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=FIELDS, extrasaction="ignore")
        w.writeheader()
        for r in records:
            w.writerow(asdict(r))


def write_ratios(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=RATIO_FIELDS)
        w.writeheader()
        w.writerows(rows)


def median_by_config(rows, key="overhead_per_sweep"):
    """Median of ``key`` over trials, keyed by ``(S, A, p, rect)``."""
    groups = {}
    for r in rows:
        groups.setdefault((r["S"], r["A"], r["p"], r["rect"]), []).append(r[key])
    return {k: float(np.median(v)) for k, v in groups.items()}


def fit_sort_overhead(points):
    """Least-squares fit ``overhead = c * S * A * log(A) + d``.

    ``points`` is an iterable of ``(S, A, overhead)``.  Returns
    ``(c, d, r_squared)``.
    """
    pts = np.array(list(points), dtype=np.float64)
    x = pts[:, 0] * pts[:, 1] * np.log(pts[:, 1])
    y = pts[:, 2]
    X = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    total = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / total if total > 0 else 1.0
    return float(coef[0]), float(coef[1]), float(r2)


def compare_backends(sizes, ps, repeats=5, seed=0, tol=1e-10):
    """Median seconds per batched water-pouring call for each kernel backend.

    Rows are random sorted ``(S, A)`` Q-tables with penalties drawn on
    ``[0, 1]``.  Returns dicts with keys ``S, A, p, backend, seconds``.
    """
    from robustmdp import backend as backends
    from robustmdp.water_pouring import solve_rows

    rng = np.random.default_rng(seed)
    out = []
    for S, A in sizes:
        B = -np.sort(-rng.uniform(0.0, 10.0, size=(S, A)), axis=1)
        B = np.ascontiguousarray(B)
        sigma = rng.uniform(0.0, 1.0, size=S)
        for p in ps:
            for name in backends.available():
                times = []
                for _ in range(repeats):
                    t0 = time.perf_counter()
                    solve_rows(B, sigma, p, tol, backend_name=name)
                    times.append(time.perf_counter() - t0)
                out.append({"S": S, "A": A, "p": format_norm(p), "backend": name,
                            "seconds": float(np.median(times))})
    return out
