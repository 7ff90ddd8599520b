"""Refinement chains, wavelet masks and spectra, and the fundamental
coefficients linking them.

A chain stores the top-level refinable spectrum together with the scaling
masks and derives every lower spectrum by the two-scale product
phi_j(n) = sqrt(2) a_{j+1}(n) phi_{j+1}(n).  Chains are stored top-down so
that zero mask values propagate zeros without any division.  The level-1
scaling mask never enters any formula (the fundamental coefficients start at
zero), so configurations may omit it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .spectra import DyadicSequence, Spectrum

__all__ = [
    "RefinementChain",
    "WaveletSystem",
    "FundamentalCoefficients",
    "derive_chain",
    "wavelet_spectra",
    "theta_recursion",
    "theta_closed_form",
    "telescoping_energy",
]

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class RefinementChain:
    """Refinable spectra phi_j for j = 1..top_level plus the scaling masks.

    spectra[j] is the level-j refinable spectrum; scaling_masks[j] the level-j
    scaling mask for j = 2..top_level.  The refinement identity holds exactly
    by construction.
    """

    top_level: int
    spectra: Mapping[int, Spectrum]
    scaling_masks: Mapping[int, DyadicSequence]

    def spectrum(self, level: int) -> Spectrum:
        try:
            return self.spectra[level]
        except KeyError:
            raise ValueError(f"chain holds levels 1..{self.top_level}, not {level}")

    def mask(self, level: int) -> DyadicSequence:
        try:
            return self.scaling_masks[level]
        except KeyError:
            raise ValueError(f"no scaling mask stored at level {level}")


@dataclass(frozen=True)
class WaveletSystem:
    """Wavelet masks (and optionally spectra) per generator level.

    wavelet_masks[j] holds the rho_j level-(j+1) mask sequences generating the
    level-j wavelets; spectra[j][m] the corresponding wavelet spectrum once
    filled in by wavelet_spectra().
    """

    wavelet_masks: tuple[tuple[DyadicSequence, ...], ...]
    spectra: tuple[tuple[Spectrum, ...], ...] | None = None

    def __post_init__(self):
        for j, masks in enumerate(self.wavelet_masks):
            if not masks:
                raise ValueError(f"generator level {j} has no masks")
            for m, seq in enumerate(masks):
                if seq.level != j + 1:
                    raise ValueError(
                        f"mask {m + 1} at generator level {j} must be a level-"
                        f"{j + 1} sequence, got level {seq.level}"
                    )

    @property
    def rho(self) -> tuple[int, ...]:
        return tuple(len(masks) for masks in self.wavelet_masks)

    @property
    def levels(self) -> int:
        """Number of generator levels stored (j = 0..levels-1)."""
        return len(self.wavelet_masks)


@dataclass(frozen=True)
class FundamentalCoefficients:
    """Nonnegative sequences theta_j, j = 0..top, from the mask recursion."""

    thetas: tuple[DyadicSequence, ...]

    def level(self, j: int) -> DyadicSequence:
        return self.thetas[j]

    def at(self, j: int, n) -> float:
        return float(np.real(self.thetas[j].at(n)))

    @property
    def top(self) -> int:
        return len(self.thetas) - 1


def derive_chain(
    top_spectrum: Spectrum,
    scaling_masks: Mapping[int, DyadicSequence],
    top_level: int | None = None,
) -> RefinementChain:
    """Derive all lower refinable spectra from the top one.

    scaling_masks maps level -> mask for levels 2..top_level.  Each stored
    mask must have a matching dyadic level; zero mask values propagate zeros
    downward.
    """
    if top_level is None:
        top_level = max(scaling_masks) if scaling_masks else 1
    for lvl, seq in scaling_masks.items():
        if seq.level != lvl:
            raise ValueError(
                f"scaling mask registered at level {lvl} has sequence level {seq.level}"
            )
    for lvl in range(2, top_level + 1):
        if lvl not in scaling_masks:
            raise ValueError(f"missing scaling mask at level {lvl}")

    spectra: dict[int, Spectrum] = {top_level: top_spectrum}
    ns = top_spectrum.support
    current = top_spectrum.coeffs
    for lvl in range(top_level, 1, -1):
        current = SQRT2 * scaling_masks[lvl].at(ns) * current
        spectra[lvl - 1] = Spectrum(top_spectrum.n_min, current)
    return RefinementChain(
        top_level=top_level,
        spectra=spectra,
        scaling_masks=dict(scaling_masks),
    )


def wavelet_spectra(chain: RefinementChain, system: WaveletSystem) -> WaveletSystem:
    """Fill in psi_j^m = sqrt(2) b_{j+1}^m phi_{j+1} for every stored mask."""
    if system.levels > chain.top_level:
        raise ValueError(
            f"system has generator levels up to {system.levels - 1}; chain only "
            f"reaches level {chain.top_level}"
        )
    all_spectra = []
    for j, masks in enumerate(system.wavelet_masks):
        phi = chain.spectrum(j + 1)
        ns = phi.support
        level_spectra = tuple(
            Spectrum(phi.n_min, SQRT2 * b.at(ns) * phi.coeffs) for b in masks
        )
        all_spectra.append(level_spectra)
    return WaveletSystem(system.wavelet_masks, tuple(all_spectra))


def _mask_energy(masks: Sequence[DyadicSequence], ns) -> np.ndarray:
    total = np.zeros(np.shape(ns), dtype=float)
    for b in masks:
        total += np.abs(b.at(ns)) ** 2
    return total


def theta_recursion(chain: RefinementChain, system: WaveletSystem) -> FundamentalCoefficients:
    """theta_{j+1}(n) = sum_m |b_{j+1}^m(n)|^2 + theta_j(n) |a_{j+1}(n)|^2.

    theta_0 = 0, so theta_1 is just the level-1 wavelet mask energy and the
    level-1 scaling mask never enters.
    """
    thetas = [DyadicSequence(0, np.zeros(1))]
    top = system.levels
    for j in range(top):
        ns = np.arange(1 << (j + 1))
        energy = _mask_energy(system.wavelet_masks[j], ns)
        if j == 0:
            nxt = energy
        else:
            carried = np.real(thetas[j].at(ns)) * np.abs(chain.mask(j + 1).at(ns)) ** 2
            nxt = energy + carried
        thetas.append(DyadicSequence(j + 1, nxt.astype(np.complex128)))
    return FundamentalCoefficients(tuple(thetas))


def theta_closed_form(chain: RefinementChain, system: WaveletSystem, q: int, n: int) -> float:
    """Unrolled form of the recursion at level q and frequency n:

    sum_m |b_q^m|^2 + sum_m |b_{q-1}^m|^2 |a_q|^2 + ...
        + sum_m |b_1^m|^2 prod_{p=2..q} |a_p|^2
    """
    if q < 1:
        raise ValueError("closed form defined for q >= 1")
    if q > system.levels:
        raise ValueError(f"q={q} exceeds the system's {system.levels} generator levels")
    total = 0.0
    tail_product = 1.0
    for i in range(q, 0, -1):
        total += float(_mask_energy(system.wavelet_masks[i - 1], n)) * tail_product
        if i >= 2:
            tail_product *= float(np.abs(chain.mask(i).at(n)) ** 2)
    return total


def telescoping_energy(
    chain: RefinementChain,
    system: WaveletSystem,
    q: int,
    n: int,
    theta: FundamentalCoefficients | None = None,
) -> tuple[float, float]:
    """Both sides of the finite energy identity at (q, n).

    lhs = sum_{j<q} sum_m 2**j |psi_j^m(n)|^2 and rhs = theta_q(n) 2**q
    |phi_q(n)|^2; they agree to roundoff for any chain-consistent system.
    """
    if q > chain.top_level:
        raise ValueError(f"q={q} exceeds chain top level {chain.top_level}")
    if system.spectra is None:
        system = wavelet_spectra(chain, system)
    lhs = 0.0
    for j in range(q):
        lhs += (1 << j) * sum(
            abs(psi.at(n)) ** 2 for psi in system.spectra[j]
        )
    if theta is None:
        theta = theta_recursion(chain, system)
    rhs = theta.at(q, n) * (1 << q) * abs(chain.spectrum(q).at(n)) ** 2
    return lhs, rhs
