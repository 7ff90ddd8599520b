"""Named Haar generator: masks, truncated spectra, and the full system.

The level-j scaling mask is (1 + e^{-2 pi i n / 2^j}) / 2 and the wavelet mask
its high-pass partner (1 - e^{-2 pi i n / 2^j}) / 2; together they split the
energy exactly (|a|^2 + |b|^2 = 1), which drives the fundamental coefficients
to 1 at every level.  Level 0 carries two generators, a scaling-type and a
wavelet-type one, whose level-1 masks are cross-orthogonal.
"""

from __future__ import annotations

import numpy as np

from .masks import RefinementChain, WaveletSystem, derive_chain
from .spectra import DyadicSequence, Spectrum

__all__ = [
    "scaling_mask",
    "wavelet_mask",
    "top_spectrum",
    "haar_chain",
    "haar_system",
    "level1_seeds",
]


def scaling_mask(level: int) -> DyadicSequence:
    n = np.arange(1 << level)
    vals = (1.0 + np.exp(-2j * np.pi * n / (1 << level))) / 2.0
    vals[n == (1 << level) // 2] = 0.0  # exact zero at the half period
    return DyadicSequence(level, vals)


def wavelet_mask(level: int) -> DyadicSequence:
    n = np.arange(1 << level)
    vals = (1.0 - np.exp(-2j * np.pi * n / (1 << level))) / 2.0
    vals[0] = 0.0
    return DyadicSequence(level, vals)


def top_spectrum(level: int, support: int) -> Spectrum:
    """Truncated refinable spectrum at the given level, |n| <= support.

    phi(n) = 2^{level/2} (1 - e^{-2 pi i n / 2^level}) / (2 pi i n), with the
    removable singularity phi(0) = 2^{-level/2}.
    """
    ns = np.arange(-support, support + 1)
    size = 1 << level
    coeffs = np.empty(ns.size, dtype=np.complex128)
    nz = ns != 0
    coeffs[nz] = (
        np.sqrt(size)
        * (1.0 - np.exp(-2j * np.pi * ns[nz] / size))
        / (2j * np.pi * ns[nz])
    )
    coeffs[~nz] = 1.0 / np.sqrt(size)
    coeffs[nz & (ns % size == 0)] = 0.0  # exact zeros at nonzero period multiples
    return Spectrum(-support, coeffs)


def haar_chain(top_level: int, support: int) -> RefinementChain:
    masks = {lvl: scaling_mask(lvl) for lvl in range(2, top_level + 1)}
    return derive_chain(top_spectrum(top_level, support), masks, top_level)


def level1_seeds() -> tuple[DyadicSequence, DyadicSequence]:
    """The two level-1 seed masks: values (1, 0) and (0, 1) on one period."""
    return scaling_mask(1), wavelet_mask(1)


def haar_system(chain: RefinementChain) -> WaveletSystem:
    """Two generators at level 0, one Haar wavelet per level j >= 1."""
    masks = [level1_seeds()]
    for j in range(1, chain.top_level):
        masks.append((wavelet_mask(j + 1),))
    from .masks import wavelet_spectra

    return wavelet_spectra(chain, WaveletSystem(tuple(masks)))


def compatible_angle_slots(top_mask_level: int):
    """Angle slots whose unit-sphere points are exactly the Haar masks.

    With beta = pi * base / 2**level the slot is t0 = (beta, -beta,
    pi/2 - beta) and t1 = (pi/2 - beta, pi/2 - beta, -beta); the normalized
    scaling/wavelet moduli then equal |cos|, |sin| of the Haar masks and the
    fundamental coefficients stay at 1.
    """
    from .construct import AngleParameters, AngleSlot

    slots = {}
    for level in range(2, top_mask_level + 1):
        for base in range(1 << (level - 1)):
            beta = np.pi * base / (1 << level)
            slots[(level, base)] = AngleSlot(
                (beta, -beta, np.pi / 2 - beta),
                (np.pi / 2 - beta, np.pi / 2 - beta, -beta),
            )
    return AngleParameters(1, slots)


def perturbed_angle_slots(top_level: int, rng, scale: float = 0.5):
    """Random angle schedule whose products still reach the Haar targets.

    Node factors g -> 1 are attached to every residue class and the slot
    magnitudes are the Haar ones times a parent/child ratio, so each
    frequency's product telescopes to the exact completion target while the
    individual angles are randomized.  Within a sibling pair one factor is
    free and the other solves the split identity s + s' = 1; axis and seed
    residues keep g = 1 (their magnitudes are pinned).  scale < pi^2/5 keeps
    every squared cosine inside (0, 1).
    """
    from .construct import AngleParameters, AngleSlot

    if not 0 <= scale < np.pi**2 / 5:
        raise ValueError("scale must stay below pi^2/5 to keep the slots valid")
    slots = {}
    g_prev = np.ones(2)
    for level in range(2, top_level + 1):
        half = 1 << (level - 1)
        g_here = np.ones(2 * half)
        a_mask = scaling_mask(level)
        for base in range(half):
            gp = g_prev[base]  # parent node: residue base mod 2**(level-1)
            if base == 0:
                t02 = float(np.angle(a_mask.at(0)))
                slots[(level, 0)] = AngleSlot((0.0, t02, rng.uniform(-np.pi, np.pi)))
                continue  # axis child and seed child both keep g = 1
            h = float(np.cos(np.pi * base / (1 << level)) ** 2)
            # draw the free node factor on the smaller branch and solve the
            # larger one, so deviations stay bounded by the inverse target
            draw = 1.0 + rng.uniform(-scale, scale) * 4.0 ** (-level)
            if h >= 0.5:
                g_c1 = draw
                g_c0 = h * gp / (1.0 - (1.0 - h) * gp / g_c1)
            else:
                g_c0 = draw
                g_c1 = (1.0 - h) * gp / (1.0 - h * gp / g_c0)
            s = h * gp / g_c0
            if not 0.0 < s < 1.0:
                raise ValueError(
                    f"perturbation scale too large at level {level}, base {base}"
                )
            g_here[base] = g_c0
            g_here[base + half] = g_c1
            t01 = float(np.arccos(np.sqrt(s)))
            t02 = float(np.angle(a_mask.at(base)))
            t12 = float(np.angle(a_mask.at(base + half)))
            t03 = float(rng.uniform(-np.pi, np.pi))
            q = int(rng.integers(0, 2))
            t11 = t01 - np.pi / 2 if q % 2 == 0 else np.pi / 2 - t01
            t13 = t03 - t02 + t12 - np.pi * q
            slots[(level, base)] = AngleSlot((t01, t02, t03), (float(t11), t12, float(t13)))
        g_prev = g_here
    return AngleParameters(1, slots)


def valuation_seeds(top_level: int, values: dict[int, complex] | None = None):
    """Seed families for the Haar chain: the frequencies activating at level
    j >= 2 all share the residue 2**(j-1), so one nonzero value per level
    seeds them; level 1 carries the two cross-orthogonal generators.

    values maps level -> seed value (default 1, the Haar wavelet value).
    """
    seeds: dict[int, tuple[DyadicSequence, ...]] = {1: level1_seeds()}
    for level in range(2, top_level + 1):
        val = 1.0 if values is None else values.get(level, 1.0)
        table = np.zeros(1 << level, dtype=np.complex128)
        table[1 << (level - 1)] = val
        seeds[level] = (DyadicSequence(level, table),)
    return seeds
