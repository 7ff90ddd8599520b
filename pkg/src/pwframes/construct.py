"""Mask construction from the unit-sphere angle parameterization.

The builder assembles wavelet masks level by level from four ingredients: a
refinement chain, per-frequency activation levels, seed masks at the first
activation level, and spherical/polar angles for everything above it.  Per
frequency n the rules are: arbitrary below the activation of the refinable
spectrum, zero between that and the first wavelet activation j1(n), the seed
at j1(n), and above j1(n) the normalized value

    b_j^m(n) = btilde_j^m(n) * sqrt(seed energy at n)
               * prod_{r=j1+1..j} |a_r(n)| / |atilde_r(n)|,

where (atilde, btilde) is a point on the complex unit sphere fixed by the
angles.  Cross-orthogonality between a frequency and its half-period partner
is what makes the result certifiable, and the builder checks it wherever it
is required.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ConstructionPreconditionError,
    DegenerateParameterizationError,
    SingularConfigurationError,
)
from .masks import FundamentalCoefficients, RefinementChain, WaveletSystem, wavelet_spectra
from .spectra import DyadicSequence
from .verdicts import FAIL, INCONCLUSIVE, PASS, limit_verdict

__all__ = [
    "AngleSlot",
    "AngleParameters",
    "TildePair",
    "AuxiliaryMasks",
    "ActivationProfile",
    "BuildResult",
    "ProductRecord",
    "tilde_pair_from_angles",
    "tilde_from_angles",
    "check_sys2",
    "cross_orthogonality",
    "solve_rho1",
    "solve_sys2_general",
    "random_pair_angles",
    "activation_profile",
    "build_construction",
    "build_masks",
    "product_certificate",
]

_SING_TOL = 1e-12


@dataclass(frozen=True)
class AngleSlot:
    """Angles for one (level, base-frequency) pair.

    t0 parameterizes the base frequency n, t1 the partner n + half period;
    each vector has 2*rho+1 entries (rho magnitude angles, then rho+1 phases).
    t1 is None when the partner side is unconstrained (inactive or seeded).
    """

    t0: tuple[float, ...]
    t1: tuple[float, ...] | None = None

    def __post_init__(self):
        if len(self.t0) < 3 or len(self.t0) % 2 == 0:
            raise ValueError("angle vector length must be 2*rho+1 with rho >= 1")
        if self.t1 is not None and len(self.t1) != len(self.t0):
            raise ValueError("branch angle vectors must have equal length")
        object.__setattr__(self, "t0", tuple(float(t) for t in self.t0))
        if self.t1 is not None:
            object.__setattr__(self, "t1", tuple(float(t) for t in self.t1))

    @property
    def rho(self) -> int:
        return (len(self.t0) - 1) // 2


@dataclass(frozen=True)
class AngleParameters:
    """Angle slots keyed by (mask level, base frequency in [0, 2**(level-1)))."""

    rho: int
    slots: Mapping[tuple[int, int], AngleSlot]

    def slot(self, level: int, base: int) -> AngleSlot:
        try:
            return self.slots[(level, base)]
        except KeyError:
            raise KeyError(f"no angle slot for level {level}, base frequency {base}")

    def has(self, level: int, base: int) -> bool:
        return (level, base) in self.slots


@dataclass(frozen=True)
class TildePair:
    """Unit-sphere coefficient pair for one slot: values at the base
    frequency (``low``) and at the half-period partner (``high``)."""

    a_low: complex
    b_low: tuple[complex, ...]
    a_high: complex | None = None
    b_high: tuple[complex, ...] | None = None

    def unit_residuals(self) -> tuple[float, float | None]:
        r0 = abs(abs(self.a_low) ** 2 + sum(abs(b) ** 2 for b in self.b_low) - 1.0)
        if self.a_high is None:
            return r0, None
        r1 = abs(abs(self.a_high) ** 2 + sum(abs(b) ** 2 for b in self.b_high) - 1.0)
        return r0, r1

    def cross_sum(self) -> complex:
        if self.a_high is None:
            raise ValueError("cross sum needs both branches")
        total = np.conj(self.a_low) * self.a_high
        for b0, b1 in zip(self.b_low, self.b_high):
            total += np.conj(b0) * b1
        return complex(total)


@dataclass(frozen=True)
class AuxiliaryMasks:
    """Per-level unit-normalized masks: the scaling slot and rho wavelet slots."""

    a_tilde: DyadicSequence
    b_tilde: tuple[DyadicSequence, ...]


def _magnitudes(t: Sequence[float], rho: int) -> tuple[float, list[float]]:
    """Moduli of the unit-sphere point: (scaling slot, wavelet slots).

    tails[m] = prod_{r=m+1..rho} cos t_r, so the scaling modulus is tails[0]
    and wavelet slot m gets tails[m] * sin t_m.
    """
    tails = [1.0] * (rho + 1)
    for m in range(rho - 1, -1, -1):
        tails[m] = tails[m + 1] * math.cos(t[m])
    a_mod = tails[0]
    b_mods = [tails[m] * math.sin(t[m - 1]) for m in range(1, rho + 1)]
    return a_mod, b_mods


def tilde_pair_from_angles(
    t0: Sequence[float], t1: Sequence[float] | None = None, rho: int | None = None
) -> TildePair:
    """Evaluate the spherical/polar parameterization at one slot.

    The scaling slot gets modulus prod_{r=1..rho} cos t_r and phase t_{rho+1};
    wavelet slot m gets modulus sin t_m prod_{r=m+1..rho} cos t_r and phase
    t_{rho+1+m}.  Empty products are 1, so the squared moduli always sum to 1.
    """
    if rho is None:
        rho = (len(t0) - 1) // 2
    if len(t0) != 2 * rho + 1:
        raise ValueError(f"need {2 * rho + 1} angles for rho={rho}, got {len(t0)}")

    def branch(t):
        a_mod, b_mods = _magnitudes(t, rho)
        a = a_mod * np.exp(1j * t[rho])
        bs = tuple(b_mods[m - 1] * np.exp(1j * t[rho + m]) for m in range(1, rho + 1))
        return complex(a), bs

    a_low, b_low = branch(t0)
    if t1 is None:
        return TildePair(a_low, b_low)
    a_high, b_high = branch(t1)
    return TildePair(a_low, b_low, a_high, b_high)


def tilde_from_angles(level: int, params: AngleParameters) -> AuxiliaryMasks:
    """Assemble the level's unit-normalized mask sequences from its slots.

    Every base frequency in [0, 2**(level-1)) must have a slot with both
    branches; the k=1 branch fills the upper half period.
    """
    half = 1 << (level - 1)
    a_vals = np.zeros(2 * half, dtype=np.complex128)
    b_vals = np.zeros((params.rho, 2 * half), dtype=np.complex128)
    for base in range(half):
        slot = params.slot(level, base)
        if slot.t1 is None:
            raise ValueError(
                f"slot (level {level}, base {base}) lacks the partner branch"
            )
        pair = tilde_pair_from_angles(slot.t0, slot.t1, params.rho)
        a_vals[base] = pair.a_low
        a_vals[base + half] = pair.a_high
        for m in range(params.rho):
            b_vals[m, base] = pair.b_low[m]
            b_vals[m, base + half] = pair.b_high[m]
    return AuxiliaryMasks(
        DyadicSequence(level, a_vals),
        tuple(DyadicSequence(level, b_vals[m]) for m in range(params.rho)),
    )


def check_sys2(t0: Sequence[float], t1: Sequence[float], rho: int | None = None) -> tuple[float, float]:
    """Residual pair of the two cross-orthogonality equations in angle form.

    The m = 0 summand is the scaling slot (its sine factor is absent); zero
    residuals are equivalent to the complex cross sum of the slot vanishing.
    """
    if rho is None:
        rho = (len(t0) - 1) // 2
    res_c = 0.0
    res_s = 0.0
    for m in range(rho + 1):
        weight = 1.0
        for t in (t0, t1):
            part = 1.0 if m == 0 else math.sin(t[m - 1])
            for r in range(m, rho):
                part *= math.cos(t[r])
            weight *= part
        delta = t0[rho + m] - t1[rho + m]
        res_c += math.cos(delta) * weight
        res_s += math.sin(delta) * weight
    return res_c, res_s


def cross_orthogonality(pair: TildePair) -> float:
    """|cross sum| of a slot; 0 exactly when the two unit vectors are orthogonal."""
    return abs(pair.cross_sum())


def solve_rho1(
    t01: float,
    t02: float,
    t03: float,
    t12: float,
    sign1: int = 1,
    sign2: int = -1,
) -> TildePair:
    """Single-generator closed form for one slot.

    a(n) = cos t01 e^{i t02}, b(n) = sin t01 e^{i t03},
    a(n+half) = sign1 sin t01 e^{i t12},
    b(n+half) = sign2 cos t01 e^{i (t03 + t12 - t02)}.

    Cross-orthogonality forces the partner signs to be opposite (the two
    products cos*cos and sin*sin must cancel), so sign2 = -sign1 is required
    whenever neither cos t01 nor sin t01 vanishes.
    """
    if sign1 not in (1, -1) or sign2 not in (1, -1):
        raise ValueError("signs must be +1 or -1")
    c, s = math.cos(t01), math.sin(t01)
    if abs(c) < _SING_TOL:
        raise DegenerateParameterizationError(
            "cos t01 = 0 makes the base scaling slot vanish"
        )
    if sign1 == sign2 and abs(c * s) > _SING_TOL:
        raise ValueError(
            "equal partner signs violate cross-orthogonality; choose sign2 = -sign1"
        )
    a_low = c * np.exp(1j * t02)
    b_low = s * np.exp(1j * t03)
    a_high = sign1 * s * np.exp(1j * t12)
    b_high = sign2 * c * np.exp(1j * (t03 + t12 - t02))
    return TildePair(complex(a_low), (complex(b_low),), complex(a_high), (complex(b_high),))


def random_pair_angles(
    rng,
    rho: int = 1,
    margin: float = 0.05,
    t02: float | None = None,
    t12: float | None = None,
) -> AngleSlot:
    """Draw a random slot satisfying the cross system (single-generator only).

    Free data: the base magnitude and wavelet phase plus two branch bits; the
    partner magnitude and wavelet phase follow from the orthogonality
    constraints.  The two scaling phases t02/t12 may be pinned by the caller
    (a mask construction must align them with the scaling-mask phases).
    """
    if rho != 1:
        raise NotImplementedError("random solved slots are provided for rho=1")
    t01 = rng.uniform(margin, np.pi / 2 - margin)
    t03 = rng.uniform(-np.pi, np.pi)
    if t02 is None:
        t02 = rng.uniform(-np.pi, np.pi)
    if t12 is None:
        t12 = rng.uniform(-np.pi, np.pi)
    # both branches keep the partner scaling modulus positive (cos t11 =
    # +sin t01); they chart the same solution with angle vectors differing
    # by a half turn in the last phase
    q = int(rng.integers(0, 2))
    t11 = t01 - np.pi / 2 if q % 2 == 0 else np.pi / 2 - t01
    t13 = t03 - t02 + t12 - np.pi * q
    return AngleSlot((t01, float(t02), t03), (float(t11), float(t12), float(t13)))


def solve_sys2_general(
    t0_partial: Sequence[float], t1: Sequence[float], rho: int
) -> AngleSlot:
    """Complete a slot by solving the cross system for two base angles.

    For rho >= 2 the solved pair is (t^0_{rho-1}, t^0_rho): the system is
    linear in cos t^0_rho cos t^1_rho and sin t^0_rho sin t^1_rho, whose
    determinant must vanish (otherwise the scaling slot would be forced to
    zero); the determinant equation yields tan t^0_{rho-1} and the retained
    equation then yields tan t^0_rho.  For rho = 1 the same elimination
    reduces to the phase link t^0_3 = t^1_3 + t^0_2 - t^1_2 and the quarter
    turn t^0_1 = t^1_1 + pi/2.
    """
    t0 = [float(x) for x in t0_partial]
    t1 = [float(x) for x in t1]
    if len(t0) != 2 * rho + 1 or len(t1) != 2 * rho + 1:
        raise ValueError(f"angle vectors must have length {2 * rho + 1}")

    if rho == 1:
        if abs(math.cos(t0[1] - t1[1])) < _SING_TOL:
            raise SingularConfigurationError(
                "scaling-phase difference at a quarter turn; no closed-form pivot"
            )
        t0[2] = t1[2] + t0[1] - t1[1]
        t0[0] = t1[0] + math.pi / 2
        return AngleSlot(tuple(t0), tuple(t1))

    def delta(r):  # 1-based phase index
        return t0[r - 1] - t1[r - 1]

    def spart(t, m, upto):
        """sin t_m * prod_{r=m+1..upto} cos t_r, with the m=0 sine slot = 1."""
        part = 1.0 if m == 0 else math.sin(t[m - 1])
        for r in range(m + 1, upto + 1):
            part *= math.cos(t[r - 1])
        return part

    d_anchor = delta(2 * rho + 1)
    den1 = math.sin(delta(2 * rho) - d_anchor)
    if abs(den1) < _SING_TOL:
        raise SingularConfigurationError(
            "vanishing determinant pivot: t^0_{2rho} - t^1_{2rho} differs from the "
            "anchor phase by a multiple of pi"
        )
    if abs(math.sin(t1[rho - 2])) < _SING_TOL:
        raise SingularConfigurationError("partner magnitude angle t^1_{rho-1} at a pole")
    num = 0.0
    for m in range(rho - 1):
        num += (
            math.sin(delta(rho + 1 + m) - d_anchor)
            * spart(t0, m, rho - 2)
            * spart(t1, m, rho - 2)
        )
    t0[rho - 2] = math.atan(
        -(math.cos(t1[rho - 2]) / math.sin(t1[rho - 2])) * num / den1
    )

    den2 = math.cos(d_anchor)
    if abs(den2) < _SING_TOL:
        raise SingularConfigurationError(
            "anchor phase difference at a quarter turn; retained equation degenerates"
        )
    if abs(math.sin(t1[rho - 1])) < _SING_TOL:
        raise SingularConfigurationError("partner magnitude angle t^1_rho at a pole")
    p_c = 0.0
    for m in range(rho):
        p_c += (
            math.cos(delta(rho + 1 + m))
            * spart(t0, m, rho - 1)
            * spart(t1, m, rho - 1)
        )
    t0[rho - 1] = math.atan(
        -(math.cos(t1[rho - 1]) / math.sin(t1[rho - 1])) * p_c / den2
    )
    return AngleSlot(tuple(t0), tuple(t1))


def random_admissible_slots(
    chain: "RefinementChain",
    profile: "ActivationProfile",
    top_mask_level: int,
    rng,
    margin: float = 0.05,
) -> AngleParameters:
    """Draw a single-generator angle schedule consistent with chain and seeds.

    The scaling phase of every slot is pinned to the phase of the scaling
    mask there: the normalized and the raw scaling slots differ by a positive
    factor, so any other phase would break the mask cross condition.  Slots
    whose two sides both carry constructed masks are drawn from the solved
    cross family; a slot whose partner residue hosts that level's seeds must
    put the base wavelet slot on the axis (zero) so the seed's
    cross-orthogonality survives; slots facing an inactive partner are free.
    """
    slots: dict[tuple[int, int], AngleSlot] = {}
    freqs = [int(n) for n in profile.frequencies]
    for level in range(2, top_mask_level + 1):
        size = 1 << level
        half = size // 2
        built = [False] * size   # residue carries a (d)-constructed value
        seeded = [False] * size  # residue hosts this level's seeds
        for n in freqs:
            j1n = profile.j1_at(n)
            if j1n < 0:
                continue
            if 0 < j1n < level:
                built[n % size] = True
            elif j1n == level:
                seeded[n % size] = True
        mask = chain.mask(level)

        def arg_at(res: int) -> float:
            return float(np.angle(mask.at(res)))

        for base in range(half):
            partner = base + half
            if built[base] and built[partner]:
                slots[(level, base)] = random_pair_angles(
                    rng, 1, margin, t02=arg_at(base), t12=arg_at(partner)
                )
            elif built[base] and seeded[partner]:
                slots[(level, base)] = AngleSlot(
                    (0.0, arg_at(base), rng.uniform(-np.pi, np.pi))
                )
            elif built[base]:
                slots[(level, base)] = AngleSlot(
                    (
                        rng.uniform(margin, np.pi / 2 - margin),
                        arg_at(base),
                        rng.uniform(-np.pi, np.pi),
                    )
                )
            elif built[partner] and seeded[base]:
                # mirrored: the partner branch must zero its wavelet slot
                slots[(level, base)] = AngleSlot(
                    (0.0, 0.0, 0.0),
                    (0.0, arg_at(partner), rng.uniform(-np.pi, np.pi)),
                )
            elif built[partner]:
                slots[(level, base)] = AngleSlot(
                    (0.0, 0.0, 0.0),
                    (
                        rng.uniform(margin, np.pi / 2 - margin),
                        arg_at(partner),
                        rng.uniform(-np.pi, np.pi),
                    ),
                )
    return AngleParameters(1, slots)


@dataclass(frozen=True)
class ActivationProfile:
    """Per-frequency activation levels over a chain's stored support.

    j0(n) is one below the first level with a nonzero refinable coefficient;
    j1(n) the first level that also carries wavelet-mask energy.  j1 = -1
    marks a frequency whose wavelet mass never meets its refinable support
    (no Parseval completion can exist there); j0 = -1 marks a frequency whose
    refinable coefficients vanish at every stored level.
    """

    n_min: int
    j0: np.ndarray
    j1: np.ndarray

    def __post_init__(self):
        for name in ("j0", "j1"):
            arr = np.asarray(getattr(self, name), dtype=int).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def _idx(self, n: int) -> int:
        idx = n - self.n_min
        if not (0 <= idx < self.j0.size):
            raise KeyError(f"frequency {n} outside the profiled support")
        return idx

    def j0_at(self, n: int) -> int:
        return int(self.j0[self._idx(n)])

    def j1_at(self, n: int) -> int:
        return int(self.j1[self._idx(n)])

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_min + self.j0.size)

    @property
    def violations(self) -> list[int]:
        return [int(n) for n in self.frequencies if self.j1[self._idx(n)] < 0 <= self.j0[self._idx(n)]]


def activation_profile(
    chain: RefinementChain,
    wavelet_masks: Mapping[int, Sequence[DyadicSequence]],
    ztol: float = 0.0,
) -> ActivationProfile:
    """Compute per-frequency activation levels from a chain and mask energies.

    wavelet_masks maps a mask level to its generator sequences (seeds suffice:
    only the first activation matters).  Frequencies violating the
    intersection requirement are flagged in the profile, not raised.
    """
    support = chain.spectrum(chain.top_level).support
    j0 = np.full(support.size, -1, dtype=int)
    j1 = np.full(support.size, -1, dtype=int)
    for i, n in enumerate(support):
        first_active = None
        for j in range(1, chain.top_level + 1):
            if abs(chain.spectrum(j).at(int(n))) > ztol:
                first_active = j
                break
        if first_active is None:
            continue
        j0[i] = first_active - 1
        for j in range(first_active, chain.top_level + 1):
            masks = wavelet_masks.get(j)
            if not masks:
                continue
            energy = sum(abs(b.at(int(n))) ** 2 for b in masks)
            if energy > ztol:
                j1[i] = j
                break
    return ActivationProfile(int(support[0]), j0, j1)


@dataclass(frozen=True)
class BuildResult:
    """Everything the builder derives: the system plus its bookkeeping."""

    system: WaveletSystem
    theta: FundamentalCoefficients
    a_tilde: dict[int, DyadicSequence]
    profile: ActivationProfile


def _seed_energy(seeds: Mapping[int, Sequence[DyadicSequence]], level: int, n: int) -> float:
    return sum(abs(b.at(n)) ** 2 for b in seeds[level])


def build_construction(
    chain: RefinementChain,
    profile: ActivationProfile,
    seeds: Mapping[int, Sequence[DyadicSequence]],
    angles: AngleParameters,
    top_mask_level: int | None = None,
    cross_tol: float = 1e-10,
    ztol: float = 0.0,
    arbitrary: Mapping[int, Sequence[DyadicSequence]] | None = None,
) -> BuildResult:
    """Assemble wavelet masks for levels 1..top_mask_level.

    Seeds provide the masks at each frequency's activation level and must be
    cross-orthogonal to whatever ends up at the half-period partner; angle
    slots provide the unit-sphere data above activation.  Residue classes are
    checked for consistency: two in-support frequencies sharing a residue must
    agree on the value the rules assign.  Residues constrained by no stored
    frequency default to zero; ``arbitrary`` overrides them per level.
    """
    if top_mask_level is None:
        top_mask_level = chain.top_level
    if top_mask_level > chain.top_level:
        raise ValueError("cannot build mask levels beyond the chain top")
    support = [int(n) for n in profile.frequencies]
    for n in support:
        if profile.j0_at(n) >= 0 and profile.j1_at(n) < 0:
            raise ConstructionPreconditionError(
                f"frequency {n} has active refinable levels but no wavelet "
                "activation; provide a seed there"
            )

    for level, fam in seeds.items():
        rho_here = len(fam)
        if level > 1 and rho_here != angles.rho:
            raise ConstructionPreconditionError(
                f"seed family at level {level} has {rho_here} generators; angle "
                f"schedule provides {angles.rho}"
            )

    levels_masks: list[np.ndarray] = []
    theta_levels = [DyadicSequence(0, np.zeros(1))]
    a_tilde_levels: dict[int, DyadicSequence] = {}
    theta_prev = np.zeros(1)

    pair_cache: dict[tuple[int, int], TildePair] = {}

    def slot_pair(level: int, base: int) -> TildePair:
        key = (level, base)
        if key not in pair_cache:
            slot = angles.slot(level, base)
            pair_cache[key] = tilde_pair_from_angles(slot.t0, slot.t1, angles.rho)
        return pair_cache[key]

    for j in range(1, top_mask_level + 1):
        size = 1 << j
        half = size // 2
        rho_j = len(seeds[1]) if j == 1 and 1 in seeds else angles.rho
        values = np.zeros((rho_j, size), dtype=np.complex128)
        determined = np.zeros(size, dtype=bool)  # zero-forced or value-forced
        seeded = np.zeros(size, dtype=bool)

        for n in support:
            res = n % size
            j0n, j1n = profile.j0_at(n), profile.j1_at(n)
            if j0n < 0:
                continue
            if j <= j0n:
                continue  # arbitrary slot: whatever the residue ends up with
            if j < j1n:
                if determined[res] and np.max(np.abs(values[:, res])) > cross_tol:
                    raise ConstructionPreconditionError(
                        f"level {j} residue {res}: frequency {n} forces zero but a "
                        "sharing frequency already forced a nonzero value"
                    )
                values[:, res] = 0.0
                determined[res] = True
                continue
            if j == j1n:
                if j not in seeds:
                    raise ConstructionPreconditionError(
                        f"frequency {n} activates at level {j} but no seed family "
                        "was given there"
                    )
                fam = seeds[j]
                if len(fam) != rho_j:
                    raise ConstructionPreconditionError(
                        f"seed family at level {j} has {len(fam)} generators, "
                        f"level is built with {rho_j}"
                    )
                seed_vals = np.array([b.at(n) for b in fam])
                if determined[res] and np.max(np.abs(values[:, res] - seed_vals)) > cross_tol:
                    raise ConstructionPreconditionError(
                        f"level {j} residue {res}: seed at frequency {n} disagrees "
                        "with the value another frequency determined"
                    )
                values[:, res] = seed_vals
                determined[res] = True
                seeded[res] = True
                continue
            # j > j1n: normalized construction
            base = res % half
            k_high = res >= half
            pair = slot_pair(j, base)
            btilde = pair.b_high if k_high else pair.b_low
            if btilde is None:
                raise ConstructionPreconditionError(
                    f"level {j} base {base}: partner branch angles required for "
                    f"frequency {n} but missing"
                )
            energy = _seed_energy(seeds, j1n, n)
            ratio = 1.0
            for r in range(j1n + 1, j + 1):
                a_mod = abs(chain.mask(r).at(n))
                res_r = n % (1 << r)
                base_r = res_r % (1 << (r - 1))
                pr = slot_pair(r, base_r)
                atil = pr.a_high if res_r >= (1 << (r - 1)) else pr.a_low
                if atil is None:
                    raise ConstructionPreconditionError(
                        f"level {r} base {base_r}: partner scaling slot required "
                        f"for frequency {n} but missing"
                    )
                atil_mod = abs(atil)
                if atil_mod <= max(ztol, _SING_TOL):
                    raise DegenerateParameterizationError(
                        f"normalized scaling slot vanishes at level {r}, frequency "
                        f"{n}; the construction divides by it"
                    )
                ratio *= a_mod / atil_mod
            new_vals = np.array([bt * math.sqrt(energy) * ratio for bt in btilde])
            if determined[res] and np.max(np.abs(values[:, res] - new_vals)) > max(
                cross_tol, 1e-9 * np.max(np.abs(new_vals))
            ):
                raise ConstructionPreconditionError(
                    f"level {j} residue {res}: inconsistent constructed values "
                    "across frequencies sharing the residue class"
                )
            values[:, res] = new_vals
            determined[res] = True

        if arbitrary and j in arbitrary:
            fill = arbitrary[j]
            if len(fill) != rho_j:
                raise ConstructionPreconditionError(
                    f"arbitrary fill at level {j} has {len(fill)} generators, "
                    f"level is built with {rho_j}"
                )
            for res in range(size):
                if not determined[res] and not seeded[res]:
                    for m in range(rho_j):
                        values[m, res] = fill[m].at(res)

        # seed cross-orthogonality: every seeded frequency against its partner
        for n in support:
            if profile.j1_at(n) == j:
                res = n % size
                partner = (res + half) % size
                cross = complex(np.sum(np.conj(values[:, res]) * values[:, partner]))
                if abs(cross) > cross_tol:
                    if j == 1 and rho_j == 1:
                        raise ConstructionPreconditionError(
                            "a single level-1 generator cannot be nonzero at both "
                            "frequencies and cross-orthogonal; two generators are "
                            "required at level 0"
                        )
                    raise ConstructionPreconditionError(
                        f"seed at level {j}, frequency {n} is not cross-orthogonal "
                        f"to its partner (|sum| = {abs(cross):.3e})"
                    )

        mask_seqs = tuple(DyadicSequence(j, values[m]) for m in range(rho_j))
        levels_masks.append(mask_seqs)

        ns = np.arange(size)
        energy_j = np.zeros(size)
        for m in range(rho_j):
            energy_j += np.abs(values[m]) ** 2
        if j == 1:
            theta_j = energy_j
        else:
            theta_j = energy_j + theta_prev[ns % (size // 2)] * np.abs(chain.mask(j).at(ns)) ** 2
        theta_levels.append(DyadicSequence(j, theta_j.astype(np.complex128)))

        # effective unit-normalized scaling mask for the product certificate:
        # slot values where angles exist, the theta-ratio form elsewhere
        a_t = np.zeros(size, dtype=np.complex128)
        for res in range(size):
            base = res % half
            k_high = res >= half
            if angles.has(j, base):
                pr = slot_pair(j, base)
                val = pr.a_high if k_high else pr.a_low
                if val is not None:
                    a_t[res] = val
                    continue
            th_j = theta_j[res]
            th_prev = theta_prev[res % (size // 2)] if j > 1 else 0.0
            if th_j > 0 and j > 1:
                a_t[res] = math.sqrt(th_prev / th_j) * chain.mask(j).at(res)
        a_tilde_levels[j] = DyadicSequence(j, a_t)
        theta_prev = theta_j

    system = wavelet_spectra(chain, WaveletSystem(tuple(levels_masks)))
    return BuildResult(
        system=system,
        theta=FundamentalCoefficients(tuple(theta_levels)),
        a_tilde=a_tilde_levels,
        profile=profile,
    )


def build_masks(
    chain: RefinementChain,
    profile: ActivationProfile,
    seeds: Mapping[int, Sequence[DyadicSequence]],
    angles: AngleParameters,
    **kwargs,
) -> WaveletSystem:
    """Build the wavelet system; see build_construction for the bookkeeping."""
    return build_construction(chain, profile, seeds, angles, **kwargs).system


@dataclass(frozen=True)
class ProductRecord:
    """Truncated-product check at one frequency."""

    n: int
    j1: int
    product: float
    target: float
    xi: float
    verdict: str
    detail: str = ""


def product_certificate(
    chain: RefinementChain,
    profile: ActivationProfile,
    seeds: Mapping[int, Sequence[DyadicSequence]],
    a_tilde: Mapping[int, DyadicSequence],
    horizon: int,
    n_values: Sequence[int] | None = None,
    tol_conv: float = 1e-6,
    drift_tol: float = 1e-9,
) -> list[ProductRecord]:
    """Check prod_{r=j1+1..N} |atilde_r(n)|^2 against its completion target.

    target = 2**j1 * (seed energy at n) * |phi_{j1}(n)|^2 and xi(N) is their
    ratio, which must approach 1.  Verdicts follow the convergence model:
    PASS near 1, INCONCLUSIVE while still drifting, FAIL when stabilized or
    diverging; a product underflowing to zero fails outright.
    """
    explicit = n_values is not None
    if n_values is None:
        n_values = [int(n) for n in profile.frequencies]
    records = []
    for n in n_values:
        j1n = profile.j1_at(n)
        if j1n < 0:
            records.append(
                ProductRecord(n, j1n, 0.0, 0.0, float("nan"), FAIL, "no activation level")
            )
            continue
        if horizon < j1n + 1:
            if explicit:
                raise ValueError(f"horizon {horizon} below first factor {j1n + 1} at n={n}")
            records.append(
                ProductRecord(
                    n, j1n, 1.0, float("nan"), float("nan"), INCONCLUSIVE,
                    "activation at or beyond the horizon; no factors yet",
                )
            )
            continue
        target = (1 << j1n) * _seed_energy(seeds, j1n, n) * abs(chain.spectrum(j1n).at(n)) ** 2
        product = 1.0
        xis = []
        for r in range(j1n + 1, horizon + 1):
            if r not in a_tilde:
                raise ValueError(f"missing normalized scaling mask at level {r}")
            product *= abs(a_tilde[r].at(n)) ** 2
            xis.append(target / product if product > 0 else float("inf"))
        if product == 0.0:
            records.append(
                ProductRecord(
                    n, j1n, 0.0, target, float("inf"), FAIL, "product underflowed to zero"
                )
            )
            continue
        verdict, resid, detail = limit_verdict(xis, 1.0, tol_conv, drift_tol)
        records.append(ProductRecord(n, j1n, product, target, xis[-1], verdict, detail))
    return records
