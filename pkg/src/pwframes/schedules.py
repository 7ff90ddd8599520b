"""Product-target schedules and their explicit angle solutions.

A schedule prescribes, per frequency n and truncation level N, the value
F(n, N) that the squared-modulus product of the normalized scaling slots must
reach, together with the correction factors xi(n, N) -> 1 tying the targets
to the completion limit.  Two solvable regimes are implemented, matching the
CLI modes:

* ``example1``: every frequency is active from level 1 on and each solved
  value |cos alpha_N(n)|^2 follows from the previous systems by division; the
  feasibility of the whole family reduces to chains of budget inequalities.
* ``example2``: one-sided nested supports activate frequency n at level
  ceil(log2(n+1)); each system then either continues a product (ratio of
  consecutive targets) or opens a fresh one (the target itself).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FeasibilityError
from .verdicts import FAIL, INCONCLUSIVE, PASS

__all__ = [
    "Schedule",
    "AngleSolution",
    "ChainMargin",
    "solve_example1",
    "check_example1_feasibility",
    "solve_example2",
    "forward_products",
    "splits_schedule",
    "random_splits",
    "haar_like_splits",
    "geometric_xi_schedule",
]

_BOUNDARY_EPS = 1e-12


@dataclass(frozen=True)
class Schedule:
    """Target tables for the truncated products.

    f_table[N] holds F(n, N) for n = 0..2**(N-1)-1, N = 2..n_levels;
    xi_table the matching correction factors.  j1, seed_energy and
    chain_energy record, per frequency, the activation level and the factors
    of the completion target 2**j1 * seed_energy * chain_energy.
    """

    f_table: dict[int, np.ndarray]
    xi_table: dict[int, np.ndarray]
    j1: np.ndarray
    seed_energy: np.ndarray
    chain_energy: np.ndarray

    @property
    def n_levels(self) -> int:
        return max(self.f_table)

    def targets(self) -> np.ndarray:
        return (2.0 ** self.j1) * self.seed_energy * self.chain_energy

    def f(self, n: int, level: int) -> float:
        table = self.f_table[level]
        if not 0 <= n < table.size:
            raise KeyError(f"F({n}, {level}) outside the stored range")
        return float(table[n])

    def validate(self) -> None:
        """Positivity and table-shape checks; raises on violation."""
        for level, table in self.f_table.items():
            if table.size != 1 << (level - 1):
                raise ValueError(f"F table at level {level} has wrong length")
            if np.any(table[np.isfinite(table)] <= 0):
                bad = int(np.argmax(table <= 0))
                raise FeasibilityError(
                    f"F({bad}, {level}) is not positive",
                    inequality="positivity",
                    where=(bad, level),
                )


@dataclass
class AngleSolution:
    """Solved squared cosines per system level; NaN marks pre-activation slots."""

    cos2: dict[int, np.ndarray]
    boundary: list[tuple[int, int]] = field(default_factory=list)

    def value(self, level: int, n: int) -> float:
        return float(self.cos2[level][n])


def _q_denominator(schedule: Schedule, n: int, level: int) -> float:
    """Product of the earlier systems at frequency n, expanded through the
    stored targets: Q(n, 1) = 1, Q(n, M) = F(n, M) on the lower half and
    Q(n', M-1) - F(n', M) on the upper half (n' = n - 2**(M-1))."""
    if level == 1:
        return 1.0
    if n < 1 << (level - 1):
        return schedule.f(n, level)
    n_prev = n - (1 << (level - 1))
    return _q_denominator(schedule, n_prev, level - 1) - schedule.f(n_prev, level)


def solve_example1(schedule: Schedule) -> AngleSolution:
    """Solve the fully active single-generator schedule level by level.

    cos2(N, n) = F(n, N) / Q(n, N-1) where Q expands through differences of
    stored targets; every denominator must stay positive and every solved
    value must lie strictly inside (0, 1).
    """
    schedule.validate()
    if np.any(schedule.j1 != 1):
        raise ValueError("this solver requires activation level 1 at every frequency")
    cos2: dict[int, np.ndarray] = {}
    for level in range(2, schedule.n_levels + 1):
        half = 1 << (level - 1)
        vals = np.empty(half)
        for n in range(half):
            den = _q_denominator(schedule, n, level - 1)
            if den <= 0:
                raise FeasibilityError(
                    f"system {level}, frequency {n}: exhausted budget "
                    f"(denominator {den:.3e})",
                    inequality="denominator",
                    where=(n, level),
                )
            val = schedule.f(n, level) / den
            if not 0.0 < val < 1.0:
                raise FeasibilityError(
                    f"system {level}, frequency {n}: solved squared cosine "
                    f"{val:.6g} leaves (0, 1)",
                    inequality="range",
                    where=(n, level),
                )
            vals[n] = val
        cos2[level] = vals
    return AngleSolution(cos2)


@dataclass(frozen=True)
class ChainMargin:
    """Margin of one budget chain: the bound minus the truncated term sum.

    m_level = 1 is the unit-budget family (bound 1); m_level >= 2 compares
    against the stored F(k, m_level).  A nonpositive margin is a definite
    failure; a positive margin below the tail estimate stays inconclusive.
    """

    k: int
    m_level: int
    margin: float
    tail_estimate: float
    verdict: str
    terms: int

    @property
    def inequality(self) -> str:
        return "unit-budget chain" if self.m_level == 1 else "block-budget chain"


def check_example1_feasibility(
    schedule: Schedule, tail_bound: float | None = None
) -> list[ChainMargin]:
    """Evaluate every truncated budget chain of the schedule.

    The chain rooted at (k, M) requires
    F(k, M+1) + sum_N F(k + 2**(N+1) - 2**M, N+2) < bound, with bound = 1 for
    M = 1 and F(k, M) otherwise.  Margins use terms up to the stored horizon;
    the tail estimate defaults to a geometric extrapolation of the last two
    terms and can be overridden.
    """
    schedule.validate()
    n_levels = schedule.n_levels
    margins = []
    for m_level in range(1, n_levels - 1):
        k_count = 2 if m_level == 1 else 1 << (m_level - 1)
        for k in range(k_count):
            bound = 1.0 if m_level == 1 else schedule.f(k, m_level)
            total = schedule.f(k, m_level + 1)
            terms = [total]
            for big_n in range(m_level, n_levels - 1):
                term = schedule.f(k + (1 << (big_n + 1)) - (1 << m_level), big_n + 2)
                terms.append(term)
                total += term
            margin = bound - total
            if tail_bound is not None:
                tail = tail_bound
            elif len(terms) >= 2 and terms[-2] > 0 and 0 < terms[-1] < terms[-2]:
                ratio = terms[-1] / terms[-2]
                tail = terms[-1] * ratio / (1.0 - ratio)
            else:
                tail = float("inf")
            if margin <= 0:
                verdict = FAIL
            elif margin <= tail:
                verdict = INCONCLUSIVE
            else:
                verdict = PASS
            margins.append(
                ChainMargin(k, m_level, margin, tail, verdict, len(terms))
            )
    return margins


def solve_example2(schedule: Schedule) -> AngleSolution:
    """Solve the nested one-sided-support schedule.

    At a frequency's first system the solved value is F(n, N) itself, which
    must stay below 1 (the correction factor must exceed the completion
    target); afterwards it is the ratio F(n, N)/F(n, N-1), which must not
    exceed 1 (the correction factors must not decrease).  Values equal to 1
    are flagged boundary-degenerate rather than rejected.
    """
    schedule.validate()
    cos2: dict[int, np.ndarray] = {}
    boundary: list[tuple[int, int]] = []
    for level in range(2, schedule.n_levels + 1):
        half = 1 << (level - 1)
        vals = np.full(half, np.nan)
        for n in range(half):
            first = int(schedule.j1[n]) + 1
            if level < first:
                continue
            if level == first:
                val = schedule.f(n, level)
                if val >= 1.0 + _BOUNDARY_EPS:
                    raise FeasibilityError(
                        f"system {level}, frequency {n}: correction factor "
                        "does not exceed the completion target",
                        inequality="target-bound",
                        where=(n, level),
                    )
            else:
                val = schedule.f(n, level) / schedule.f(n, level - 1)
                if val >= 1.0 + _BOUNDARY_EPS:
                    raise FeasibilityError(
                        f"system {level}, frequency {n}: correction factors "
                        "decrease between consecutive systems",
                        inequality="monotonicity",
                        where=(n, level),
                    )
            if val <= 0.0:
                raise FeasibilityError(
                    f"system {level}, frequency {n}: nonpositive solved value",
                    inequality="positivity",
                    where=(n, level),
                )
            if val >= 1.0 - _BOUNDARY_EPS:
                val = min(val, 1.0)
                boundary.append((level, n))
            vals[n] = val
        cos2[level] = vals
    return AngleSolution(cos2, boundary)


def forward_products(solution: AngleSolution, j1, n_levels: int) -> dict[int, np.ndarray]:
    """Recompute the product tables from a solved schedule.

    The factor of level r at frequency n is cos2(r, b) when n sits in the
    lower half period at level r and 1 - cos2(r, b) otherwise, with b the
    base index n mod 2**(r-1); products run from each frequency's activation.
    """
    j1 = np.asarray(j1, dtype=int)
    out: dict[int, np.ndarray] = {}
    for level in range(2, n_levels + 1):
        half = 1 << (level - 1)
        vals = np.full(half, np.nan)
        for n in range(half):
            first = int(j1[n]) + 1
            if level < first:
                continue
            prod = 1.0
            for r in range(first, level + 1):
                base = n % (1 << (r - 1))
                c2 = solution.cos2[r][base]
                if n % (1 << r) < 1 << (r - 1):
                    prod *= c2
                else:
                    prod *= 1.0 - c2
            vals[n] = prod
        out[level] = vals
    return out


def random_splits(rng, n_levels: int, lo: float = 0.15, hi: float = 0.85) -> dict[int, np.ndarray]:
    """Random squared cosines, bounded away from the degenerate edges."""
    return {
        level: rng.uniform(lo, hi, 1 << (level - 1)) for level in range(2, n_levels + 1)
    }


def haar_like_splits(n_levels: int, blend: float = 0.1) -> dict[int, np.ndarray]:
    """Squared cosines shrunk toward 1/2 from the dyadic cosine profile.

    The unblended profile cos^2(pi n / 2**N) touches 0 and 1 on the budget
    boundaries; any positive blend moves every chain strictly inside them.
    """
    splits = {}
    for level in range(2, n_levels + 1):
        n = np.arange(1 << (level - 1))
        pure = np.cos(np.pi * n / (1 << level)) ** 2
        splits[level] = (1.0 - blend) * pure + blend * 0.5
    return splits


def splits_schedule(splits: dict[int, np.ndarray]) -> tuple[Schedule, dict[int, np.ndarray]]:
    """Build a fully active schedule whose products realize the given splits.

    Returns the schedule and the full product tables over the whole period
    (lower halves are the stored targets; upper halves feed the consistency
    identity F(n', N-1) = F(n', N) + F(n' + 2**(N-1), N)).
    """
    n_levels = max(splits)
    full: dict[int, np.ndarray] = {1: np.ones(2)}
    for level in range(2, n_levels + 1):
        half = 1 << (level - 1)
        prev = full[level - 1]
        table = np.empty(2 * half)
        table[:half] = prev * splits[level]
        table[half:] = prev * (1.0 - splits[level])
        full[level] = table
    f_table = {level: full[level][: 1 << (level - 1)].copy() for level in range(2, n_levels + 1)}
    width = 1 << (n_levels - 1)
    targets = f_table[n_levels].copy()
    j1 = np.ones(width, dtype=int)
    chain_energy = np.full(width, 0.5)
    seed_energy = targets / (2.0 * chain_energy)
    xi_table = {level: targets[: 1 << (level - 1)] / f_table[level] for level in f_table}
    schedule = Schedule(f_table, xi_table, j1, seed_energy, chain_energy)
    return schedule, full


def geometric_xi_schedule(
    seed_energy: np.ndarray,
    chain_energy: np.ndarray,
    j1: np.ndarray,
    n_levels: int,
    approach: float = 0.5,
) -> Schedule:
    """Nested-support schedule with xi(n, N) = 1 - c(n) 2**-N.

    c(n) is scaled so the first correction factor already exceeds the
    completion target (which must be below 1) and the family increases to 1.
    """
    j1 = np.asarray(j1, dtype=int)
    seed_energy = np.asarray(seed_energy, dtype=float)
    chain_energy = np.asarray(chain_energy, dtype=float)
    targets = (2.0 ** j1) * seed_energy * chain_energy
    if np.any(targets >= 1.0):
        bad = int(np.argmax(targets >= 1.0))
        raise FeasibilityError(
            f"completion target at frequency {bad} is not below 1",
            inequality="target-bound",
            where=(bad,),
        )
    c = np.minimum(1.0, approach * (1.0 - targets) * 2.0 ** (j1 + 1))
    f_table: dict[int, np.ndarray] = {}
    xi_table: dict[int, np.ndarray] = {}
    for level in range(2, n_levels + 1):
        half = 1 << (level - 1)
        xi = 1.0 - c[:half] * 2.0 ** (-level)
        f = np.where(level >= j1[:half] + 1, targets[:half] / xi, np.nan)
        xi_table[level] = xi
        f_table[level] = f
    return Schedule(f_table, xi_table, j1[: 1 << (n_levels - 1)], seed_energy, chain_energy)
