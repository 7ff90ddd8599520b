"""Certification of candidate wavelet systems.

Two routes are implemented and cross-checkable:

* the coefficient criterion: per-frequency energy sums converging to 1 and
  cross sums over level pairs vanishing for odd shifts;
* the mask criterion: the fundamental-coefficient cross condition per level
  and residue, plus the per-frequency energy limit monitored through the
  chain.

On top of both sits a numerical identity oracle that analyzes random
trigonometric polynomials with the system and compares the truncated frame
energy against its exact telescoped value; when the cross conditions hold the
two agree to roundoff, so any discrepancy localizes a violated condition.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .masks import (
    FundamentalCoefficients,
    RefinementChain,
    WaveletSystem,
    theta_recursion,
)
from .spectra import Spectrum, frame_coefficients
from .verdicts import FAIL, INCONCLUSIVE, PASS, SKIPPED, limit_verdict

__all__ = [
    "ConditionRecord",
    "Certificate",
    "OracleReport",
    "check_coefficient_criterion",
    "check_mask_criterion",
    "parseval_oracle",
    "frame_energy",
    "telescoped_energy",
    "probe_real",
    "probe_imag",
]

DEFAULT_EQ_TOL = 1e-10
DEFAULT_CONV_TOL = 1e-6
DEFAULT_DRIFT_TOL = 1e-9


@dataclass(frozen=True)
class ConditionRecord:
    """One certified condition instance: identifiers, residual, verdict."""

    condition: str
    level: int | None
    freq: int | None
    shift: int | None
    residual: float
    verdict: str
    detail: str = ""


@dataclass
class Certificate:
    """Per-condition records with the tolerances and horizon that produced them.

    The global verdict is FAIL if any record failed, else INCONCLUSIVE if any
    record is inconclusive, else PASS; skipped (exempt) records do not count.
    """

    records: list[ConditionRecord]
    horizon: int
    tolerances: dict[str, float] = field(default_factory=dict)

    @property
    def global_verdict(self) -> str:
        verdicts = {r.verdict for r in self.records}
        if FAIL in verdicts:
            return FAIL
        if INCONCLUSIVE in verdicts:
            return INCONCLUSIVE
        return PASS

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.records:
            out[r.verdict] = out.get(r.verdict, 0) + 1
        return out

    def failures(self) -> list[ConditionRecord]:
        return [r for r in self.records if r.verdict == FAIL]

    def select(self, condition: str) -> list[ConditionRecord]:
        return [r for r in self.records if r.condition == condition]

    def merged_with(self, other: "Certificate") -> "Certificate":
        tols = dict(self.tolerances)
        tols.update(other.tolerances)
        return Certificate(
            self.records + other.records, max(self.horizon, other.horizon), tols
        )


def _common_range(system: WaveletSystem, n_range) -> np.ndarray:
    if n_range is not None:
        return np.asarray(n_range, dtype=int)
    lo = min(spec.n_min for level in system.spectra for spec in level)
    hi = max(spec.n_max for level in system.spectra for spec in level)
    return np.arange(lo, hi + 1)


def check_coefficient_criterion(
    system: WaveletSystem,
    horizon: int,
    n_range=None,
    tol: float = DEFAULT_EQ_TOL,
    tol_conv: float = DEFAULT_CONV_TOL,
    drift_tol: float = DEFAULT_DRIFT_TOL,
) -> Certificate:
    """Coefficient criterion over the stored spectra.

    Per frequency, the partial energy sums sum_{j<q} sum_m 2**j |psi_j^m(n)|^2
    are monitored for convergence to 1; per level j and odd shift k whose
    translate stays in range, the finite cross sum over q <= j must vanish.
    Each (j, k) pair is reported once with its worst frequency.
    """
    if system.spectra is None:
        raise ValueError("system spectra required; fill them in first")
    if horizon > system.levels:
        raise ValueError(f"horizon {horizon} exceeds stored levels {system.levels}")
    ns = _common_range(system, n_range)
    lo, hi = int(ns[0]), int(ns[-1])
    width = hi - lo + 1
    psi = [
        [spec.at(np.arange(lo, hi + 1)) for spec in system.spectra[q]]
        for q in range(horizon)
    ]

    records: list[ConditionRecord] = []

    partial = np.zeros((horizon + 1, width))
    for q in range(1, horizon + 1):
        level_energy = np.zeros(width)
        for vals in psi[q - 1]:
            level_energy += np.abs(vals) ** 2
        partial[q] = partial[q - 1] + (1 << (q - 1)) * level_energy
    for i, n in enumerate(range(lo, hi + 1)):
        verdict, resid, detail = limit_verdict(partial[1:, i], 1.0, tol_conv, drift_tol)
        records.append(
            ConditionRecord("frame_energy", None, n, None, resid, verdict, detail)
        )

    for j in range(horizon):
        step = 1 << j
        k_max = (hi - lo) // step
        for k in range(-k_max - 1, k_max + 2):
            if k % 2 == 0:
                continue
            shift = step * k
            a = max(lo, lo - shift)
            b = min(hi, hi - shift)
            if a > b:
                continue
            sl = slice(a - lo, b - lo + 1)
            sl_shift = slice(a - lo + shift, b - lo + shift + 1)
            total = np.zeros(b - a + 1, dtype=np.complex128)
            for q in range(j + 1):
                for vals in psi[q]:
                    total += (1 << q) * np.conj(vals[sl]) * vals[sl_shift]
            resid = np.abs(total)
            worst = int(np.argmax(resid))
            records.append(
                ConditionRecord(
                    "frame_cross",
                    j,
                    a + worst,
                    k,
                    float(resid[worst]),
                    PASS if resid[worst] <= tol else FAIL,
                    f"max over {b - a + 1} frequencies",
                )
            )
    return Certificate(
        records, horizon, {"equality": tol, "convergence": tol_conv, "drift": drift_tol}
    )


def check_mask_criterion(
    chain: RefinementChain,
    system: WaveletSystem,
    theta: FundamentalCoefficients | None = None,
    horizon: int | None = None,
    n_range=None,
    tol: float = DEFAULT_EQ_TOL,
    tol_conv: float = DEFAULT_CONV_TOL,
    drift_tol: float = DEFAULT_DRIFT_TOL,
) -> Certificate:
    """Mask criterion: per-level cross condition and the energy limit.

    The cross condition at level pair (j, j+1) and residue r is exempt unless
    some stored frequency congruent to r and some one congruent to r + 2**j
    both carry nonzero refinable coefficients at level j+1; exempt residues
    are recorded as skipped.  The energy limit monitors
    2**q |phi_q(n)|^2 theta_q(n) per frequency.
    """
    if horizon is None:
        horizon = system.levels
    if horizon > system.levels:
        raise ValueError(f"horizon {horizon} exceeds stored levels {system.levels}")
    if theta is None:
        theta = theta_recursion(chain, system)
    records: list[ConditionRecord] = []

    for j in range(horizon):
        size = 1 << (j + 1)
        half = size // 2
        phi = chain.spectrum(j + 1)
        occupied = np.zeros(size, dtype=bool)
        support = phi.support
        nz = np.abs(phi.coeffs) > 0
        np.logical_or.at(occupied, np.mod(support[nz], size), True)

        res_idx = np.arange(size)
        cross = np.zeros(size, dtype=np.complex128)
        for b in system.wavelet_masks[j]:
            cross += np.conj(b.values) * b.values[(res_idx + half) % size]
        if j >= 1:
            a_mask = chain.mask(j + 1).values
            theta_vals = np.real(theta.level(j).at(res_idx))
            cross += theta_vals * np.conj(a_mask) * a_mask[(res_idx + half) % size]

        for r in range(size):
            active = occupied[r] and occupied[(r + half) % size]
            resid = float(np.abs(cross[r]))
            if not active:
                records.append(
                    ConditionRecord(
                        "mask_cross",
                        j,
                        r,
                        None,
                        resid,
                        SKIPPED,
                        "exempt: refinable coefficients vanish on one side",
                    )
                )
            else:
                records.append(
                    ConditionRecord(
                        "mask_cross", j, r, None, resid, PASS if resid <= tol else FAIL
                    )
                )

    top = chain.spectrum(min(horizon, chain.top_level))
    ns = np.asarray(n_range, dtype=int) if n_range is not None else top.support
    series = np.zeros((horizon, ns.size))
    for q in range(1, horizon + 1):
        phi_q = chain.spectrum(q).at(ns)
        theta_q = np.real(theta.level(q).at(ns))
        series[q - 1] = (1 << q) * np.abs(phi_q) ** 2 * theta_q
    for i, n in enumerate(ns):
        verdict, resid, detail = limit_verdict(series[:, i], 1.0, tol_conv, drift_tol)
        records.append(
            ConditionRecord("mask_energy", None, int(n), None, resid, verdict, detail)
        )
    return Certificate(
        records, horizon, {"equality": tol, "convergence": tol_conv, "drift": drift_tol}
    )


def frame_energy(f: Spectrum, system: WaveletSystem, horizon: int) -> float:
    """Truncated analysis energy sum_{j<horizon} sum_m sum_k |<f, shifts>|^2."""
    if system.spectra is None:
        raise ValueError("system spectra required")
    total = 0.0
    for j in range(horizon):
        for spec in system.spectra[j]:
            coeffs = frame_coefficients(f, spec, j)
            total += float(np.sum(np.abs(coeffs) ** 2))
    return total


def telescoped_energy(
    f: Spectrum,
    chain: RefinementChain,
    theta: FundamentalCoefficients,
    horizon: int,
) -> float:
    """Exact closed form of the same truncated energy through the chain:
    sum_n |f^(n)|^2 2**horizon |phi_horizon(n)|^2 theta_horizon(n)."""
    ns = f.support
    phi = chain.spectrum(horizon).at(ns)
    th = np.real(theta.level(horizon).at(ns))
    return float(np.sum(np.abs(f.coeffs) ** 2 * (1 << horizon) * np.abs(phi) ** 2 * th))


@dataclass(frozen=True)
class OracleReport:
    """Identity-oracle outcome over random trigonometric polynomials."""

    trials: int
    degree: int
    horizon: int
    max_rel_error: float
    verdict: str
    tol: float


def parseval_oracle(
    chain: RefinementChain,
    system: WaveletSystem,
    horizon: int,
    trials: int = 100,
    degree: int = 64,
    rng=None,
    theta: FundamentalCoefficients | None = None,
    tol: float = 1e-9,
) -> OracleReport:
    """Compare analyzed frame energy with its telescoped value on random input.

    Each trial draws a trigonometric polynomial with standard complex normal
    coefficients on |n| < degree; the relative gap between the two energies
    is zero (to roundoff) exactly when the cross conditions hold up to the
    horizon, so the maximum over trials certifies them numerically.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if theta is None:
        theta = theta_recursion(chain, system)
    worst = 0.0
    for _ in range(trials):
        size = 2 * degree - 1
        coeffs = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        f = Spectrum(-(degree - 1), coeffs)
        analyzed = frame_energy(f, system, horizon)
        telescoped = telescoped_energy(f, chain, theta, horizon)
        rel = abs(analyzed - telescoped) / f.norm_sq()
        worst = max(worst, rel)
    return OracleReport(
        trials, degree, horizon, worst, PASS if worst <= tol else FAIL, tol
    )


def probe_real(j0: int, k0: int, n0: int) -> Spectrum:
    """Two-frequency probe isolating the real part of one cross sum."""
    if k0 % 2 == 0:
        raise ValueError("the shift index must be odd")
    amp = 2.0 ** (-j0 / 2)
    return Spectrum.from_values({n0: amp, (1 << j0) * k0 + n0: amp})


def probe_imag(j0: int, k0: int, n0: int) -> Spectrum:
    """Companion probe isolating the imaginary part of the same cross sum."""
    if k0 % 2 == 0:
        raise ValueError("the shift index must be odd")
    amp = 2.0 ** (-j0 / 2)
    return Spectrum.from_values({n0: 1j * amp, (1 << j0) * k0 + n0: amp})
