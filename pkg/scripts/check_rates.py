#!/usr/bin/env python3
"""
Check the approximation rates and identities before publishing results.
"""

import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from nbapprox.correction import max_bulk_cdf_error  # noqa: E402
from nbapprox.exactdist import NBParams, nb_central_moment, nb_truncated_moment  # noqa: E402
from nbapprox.llt import BulkSpec, max_bulk_ratio_error  # noqa: E402
from nbapprox.median import median_scan, poisson_median_scan  # noqa: E402
from nbapprox.montecarlo import SimConfig, run_bias_rmse_experiment  # noqa: E402
from nbapprox.rates import loglog_slope  # noqa: E402
from nbapprox.tvdist import tv_jittered_vs_normal  # noqa: E402

DELTA_CAP = 0.75
P_VALUES = (0.25, 0.5, 0.75)


def check_corrected_cdf_rate(r_values=(100, 400, 1600), p_values=P_VALUES):
    """Refined continuity correction: bulk CDF error decays like r^{-3/2}."""
    print("Checking corrected CDF rate...")
    ok = True
    for p in p_values:
        errors = [max_bulk_cdf_error(NBParams(r, p), BulkSpec(), "corrected", DELTA_CAP)
                  for r in r_values]
        slope = loglog_slope(r_values, errors)
        if -1.75 <= slope <= -1.25:
            print(f"✓ p={p}: slope {slope:.3f}")
        else:
            print(f"✗ p={p}: slope {slope:.3f} outside [-1.75, -1.25]")
            ok = False
    return ok


def check_llt_ratio_rate(r_values=(100, 400, 1600, 6400), p=0.5):
    """Local expansion to order 1/r: ratio error decays like r^{-3/2}."""
    print("\nChecking local expansion rate...")
    errors = [max_bulk_ratio_error(NBParams(r, p), BulkSpec(), DELTA_CAP) for r in r_values]
    slope = loglog_slope(r_values, errors)
    if -1.7 <= slope <= -1.3:
        print(f"✓ p={p}: slope {slope:.3f}")
        return True
    print(f"✗ p={p}: slope {slope:.3f} outside [-1.7, -1.3]")
    return False


def check_median_residuals(r_min=20, r_max=500, p_values=P_VALUES):
    """r |jittered median - asymptotic median| stays below 5."""
    print("\nChecking jittered NB medians...")
    ok = True
    grid = list(range(r_min, r_max + 1))
    for p in p_values:
        worst = max(r.params.r * abs(r.residual) for r in median_scan(p, grid))
        if worst <= 5.0:
            print(f"✓ p={p}: max r*|residual| = {worst:.3f}")
        else:
            print(f"✗ p={p}: max r*|residual| = {worst:.3f} exceeds 5")
            ok = False
    return ok


def check_poisson_median(lam_min=20, lam_max=500):
    """lambda |residual| below 5 and -ln 2 <= median - lambda < 1/3."""
    print("\nChecking jittered Poisson medians...")
    reports = poisson_median_scan(list(range(lam_min, lam_max + 1)))
    worst = max(r.params.lam * abs(r.residual) for r in reports)
    bounds_ok = all(-math.log(2.0) <= r.integer_offset < 1.0 / 3.0 for r in reports)
    if worst <= 5.0 and bounds_ok:
        print(f"✓ max lambda*|residual| = {worst:.3f}, integer medians within bounds")
        return True
    print(f"✗ max lambda*|residual| = {worst:.3f}, integer median bounds ok: {bounds_ok}")
    return False


def check_tv_rate(r_values=(16, 64, 256, 1024), p_values=P_VALUES):
    """TV distance to the normal law decays like r^{-1/2}."""
    print("\nChecking TV rate...")
    ok = True
    for p in p_values:
        tvs = [tv_jittered_vs_normal(NBParams(r, p)).tv for r in r_values]
        slope = loglog_slope(r_values, tvs)
        if -0.6 <= slope <= -0.4:
            print(f"✓ p={p}: slope {slope:.3f}")
        else:
            print(f"✗ p={p}: slope {slope:.3f} outside [-0.6, -0.4]")
            ok = False
    return ok


def check_moments(r_values=(1, 10, 100), p_values=P_VALUES):
    """Closed-form central moments against truncated exact sums."""
    print("\nChecking central moments...")
    ok = True
    tolerance = {2: 1e-9, 3: 1e-9, 4: 1e-8, 6: 1e-8}
    for r in r_values:
        for p in p_values:
            params = NBParams(r, p)
            for order, rtol in tolerance.items():
                closed = nb_central_moment(params, order)
                summed = nb_truncated_moment(params, order, 0, 10 ** 9)
                if abs(closed - summed) > rtol * abs(closed):
                    print(f"✗ r={r} p={p} order {order}: {closed!r} vs {summed!r}")
                    ok = False
    if ok:
        print(f"✓ orders 2, 3, 4, 6 agree on {len(r_values) * len(p_values)} parameter points")
    return ok


def check_estimators(r_values=tuple(k / 4 for k in range(2, 61, 4)), n=200, reps=2000,
                     seed=20210611):
    """Raw-count ML against the robust estimator: small bias at r >= 5, ratio >= 0.9 on 90% of r."""
    print("\nChecking estimator experiment...")
    cfg = SimConfig(n=n, reps=reps, p=0.5, r_grid=r_values, seed=seed, jitter_ml=False)
    rows = run_bias_rmse_experiment(cfg).rows
    worst_bias = max((max(abs(row.bias_robust), abs(row.bias_ml)) for row in rows if row.r >= 5),
                     default=0.0)
    ratio_share = sum(row.rmse_ratio >= 0.9 for row in rows) / len(rows)
    if worst_bias <= 0.02 and ratio_share >= 0.9:
        print(f"✓ max |bias| at r >= 5: {worst_bias:.4f}, rmse_ratio >= 0.9 on {ratio_share:.0%} of r")
        return True
    print(f"✗ max |bias| at r >= 5: {worst_bias:.4f}, rmse_ratio >= 0.9 on {ratio_share:.0%} of r")
    return False


def main():
    """Run every check and report."""
    print("=" * 60)
    print("Negative Binomial Approximation Checks")
    print("=" * 60 + "\n")

    checks = {
        "Corrected CDF rate": check_corrected_cdf_rate(),
        "Local expansion rate": check_llt_ratio_rate(),
        "NB medians": check_median_residuals(),
        "Poisson medians": check_poisson_median(),
        "TV rate": check_tv_rate(),
        "Central moments": check_moments(),
        "Estimators": check_estimators(),
    }

    print("\n" + "=" * 60)
    print("Summary")
    print("=" * 60)
    for name, passed in checks.items():
        print(f"{'✓' if passed else '✗'} {name}")

    if all(checks.values()):
        print("\n✓ All checks passed!")
        return 0
    print("\n✗ Some checks failed")
    return 1


if __name__ == "__main__":
    sys.exit(main())
