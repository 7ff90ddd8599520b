"""Verdict constants and the convergence classifier for truncated limit checks.

Several certified conditions are limits over the level index.  A truncated
run can only settle them under an explicit convergence model; the one used
here is geometric extrapolation.  Given the monitored partial values, the
classifier:

* passes outright when the last value already sits within tolerance,
* fails when the sequence has stalled (drift below ``drift_tol``) away from
  the target, or recedes from it monotonically,
* otherwise fits the increment ratio; with a stable ratio in (0, 0.95) it
  extrapolates the limit and passes/fails on the extrapolated residual,
  keeping the verdict INCONCLUSIVE whenever the extrapolation's own error
  estimate could explain the residual.
"""

from __future__ import annotations

import numpy as np

PASS = "PASS"
FAIL = "FAIL"
INCONCLUSIVE = "INCONCLUSIVE"
SKIPPED = "SKIPPED"

__all__ = ["PASS", "FAIL", "INCONCLUSIVE", "SKIPPED", "limit_verdict"]


def limit_verdict(
    values,
    target: float = 1.0,
    tol: float = 1e-6,
    drift_tol: float = 1e-9,
) -> tuple[str, float, str]:
    """Classify a truncated sequence against its claimed limit.

    Returns (verdict, residual, detail) where residual is the distance of the
    last (or extrapolated) value from the target.
    """
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        return INCONCLUSIVE, float("nan"), "no data"
    resid = abs(vals[-1] - target)
    if resid <= tol:
        return PASS, resid, "within tolerance at the horizon"
    if vals.size >= 2:
        drift = abs(vals[-1] - vals[-2])
        if drift <= drift_tol:
            return FAIL, resid, "stabilized away from the target"
    if vals.size >= 3:
        gaps = np.abs(vals - target)
        if gaps[-1] > gaps[-2] > gaps[-3] and gaps[-1] > 10 * tol:
            d_prev, d_last = vals[-2] - vals[-3], vals[-1] - vals[-2]
            if d_prev != 0 and d_last / d_prev >= 1.05:
                return FAIL, resid, "receding from the target"
    if vals.size < 4:
        return INCONCLUSIVE, resid, "still drifting, horizon too short"

    d1, d2, d3 = np.diff(vals[-4:])
    if d1 == 0 or d2 == 0:
        return INCONCLUSIVE, resid, "stalled increments, no ratio fit"
    r_prev, r_last = d2 / d1, d3 / d2
    if not (0.0 < r_last < 0.95):
        return INCONCLUSIVE, resid, "increment ratio outside the geometric band"
    correction = d3 * r_last / (1.0 - r_last)
    limit = vals[-1] + correction
    eresid = abs(limit - target)
    fit_err = abs(r_last - r_prev) / max(1.0 - r_last, 1e-12)
    artifact = abs(correction) * fit_err + 1e-15
    if eresid <= tol and fit_err <= 0.25:
        return PASS, eresid, f"extrapolated limit within tolerance (ratio {r_last:.3g})"
    if eresid > max(tol, 10.0 * artifact) and fit_err <= 0.25:
        return FAIL, eresid, f"extrapolated limit off target (ratio {r_last:.3g})"
    return INCONCLUSIVE, eresid, "extrapolation uncertainty covers the residual"
