#!/usr/bin/env python3
"""Regenerates stats_golden.json, the frozen reference values the C++
statistics suite is checked against (one-sample K-S vs a fitted normal with
the asymptotic p-value, mean-centered Levene, pooled and Welch t)."""

import json

import numpy as np
from scipy import stats


def ks_fitted_normal(x):
    m = float(np.mean(x))
    s = float(np.std(x, ddof=1))
    r = stats.kstest(x, "norm", args=(m, s), method="asymp")
    return {"statistic": float(r.statistic), "p_value": float(r.pvalue)}


def pair_entry(name, a, b):
    lev = stats.levene(a, b, center="mean")
    t_eq = stats.ttest_ind(a, b, equal_var=True)
    t_w = stats.ttest_ind(a, b, equal_var=False)
    return {
        "name": name,
        "a": [float(v) for v in a],
        "b": [float(v) for v in b],
        "ks_a": ks_fitted_normal(a),
        "ks_b": ks_fitted_normal(b),
        "levene": {"statistic": float(lev.statistic), "p_value": float(lev.pvalue)},
        "t_student": {"statistic": float(t_eq.statistic), "p_value": float(t_eq.pvalue)},
        "t_welch": {"statistic": float(t_w.statistic), "p_value": float(t_w.pvalue)},
    }


def main():
    rng = np.random.default_rng(20240501)
    pairs = []

    # mixed sizes, scales and shapes; first entries mimic CCR-like run sets
    specs = [
        ("ccr_like_equal", lambda: (rng.normal(95.3, 1.4, 30), rng.normal(95.6, 1.2, 30))),
        ("ccr_like_shift", lambda: (rng.normal(77.3, 2.4, 30), rng.normal(78.6, 1.9, 30))),
        ("connections", lambda: (rng.normal(20.0, 3.0, 30).round(), rng.normal(26.0, 4.0, 30).round())),
        ("tight_vs_wide", lambda: (rng.normal(0.0, 1.0, 30), rng.normal(0.0, 10.0, 30))),
        ("mean_shift_5", lambda: (rng.normal(0.0, 1.0, 30), rng.normal(5.0, 1.0, 30))),
        ("small_n", lambda: (rng.normal(10.0, 2.0, 8), rng.normal(11.0, 2.0, 12))),
        ("uniform_vs_normal", lambda: (rng.uniform(0, 1, 40), rng.normal(0.5, 0.3, 35))),
        ("lognormal", lambda: (rng.lognormal(0.0, 0.5, 25), rng.lognormal(0.1, 0.6, 25))),
    ]
    for name, gen in specs:
        a, b = gen()
        pairs.append(pair_entry(name, a, b))
    for i in range(len(specs), 20):
        mu = float(rng.uniform(-5, 5))
        shift = float(rng.uniform(0, 2))
        sa = float(rng.uniform(0.5, 3))
        sb = sa * float(rng.uniform(0.5, 2.5))
        na = int(rng.integers(10, 45))
        nb = int(rng.integers(10, 45))
        a = rng.normal(mu, sa, na)
        b = rng.normal(mu + shift, sb, nb)
        pairs.append(pair_entry(f"random_{i}", a, b))

    grid = np.linspace(0.0, 1.0, 100)
    out = {
        "pairs": pairs,
        "ks_uniform_grid_100": ks_fitted_normal(grid),
    }
    with open("stats_golden.json", "w") as f:
        json.dump(out, f, indent=1)
    print(f"wrote stats_golden.json with {len(pairs)} pairs")


if __name__ == "__main__":
    main()
