"""Completely randomized assignment and observed-data extraction.

Randomness flows through ``numpy.random.Generator`` streams seeded via
``SeedSequence``; callers that need reproducible parallel fan-out spawn
one child stream per replication so results do not depend on execution
order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ResourceLimitError
from .population import PotentialTable

MAX_ENUMERATION = 10_000_000


@dataclass(frozen=True)
class Assignment:
    """Arm labels per unit: ``arm_of[i]`` is the 1-based arm of unit i."""

    arm_of: np.ndarray

    def __post_init__(self) -> None:
        self.arm_of.setflags(write=False)

    @property
    def n_units(self) -> int:
        return self.arm_of.shape[0]

    def units_in(self, j: int) -> np.ndarray:
        """Indices of the units assigned to arm j."""
        return np.flatnonzero(self.arm_of == j)


@dataclass(frozen=True)
class ObservedData:
    """Arm sizes and success counts, the sole input to all inference."""

    k: int
    n: np.ndarray  # (J,) arm sizes, each >= 2
    n_obs: np.ndarray  # (J,) success counts, 0 <= n_obs <= n

    def __post_init__(self) -> None:
        j = 2**self.k
        n = np.asarray(self.n, dtype=np.int64)
        n_obs = np.asarray(self.n_obs, dtype=np.int64)
        if n.shape != (j,) or n_obs.shape != (j,):
            raise ValueError(f"expected {j} arm sizes and counts for K={self.k}")
        if (n < 2).any():
            raise ValueError("every arm needs at least 2 assigned units")
        if (n_obs < 0).any() or (n_obs > n).any():
            raise ValueError("success counts must satisfy 0 <= n_obs <= n")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "n_obs", n_obs)
        self.n.setflags(write=False)
        self.n_obs.setflags(write=False)

    @property
    def n_arms(self) -> int:
        return self.n.shape[0]

    @property
    def n_units(self) -> int:
        return int(self.n.sum())

    @property
    def p_hat(self) -> np.ndarray:
        """Observed arm means n_obs / n."""
        return self.n_obs / self.n


def draw_assignment(arms: np.ndarray, n_units: int, rng: np.random.Generator) -> Assignment:
    """Uniform completely randomized assignment into groups of the given sizes.

    A uniform random permutation of the units is split into consecutive
    blocks, which makes every partition into labelled groups of sizes
    n_1..n_J equally likely.
    """
    arms = np.asarray(arms, dtype=np.int64)
    if arms.ndim != 1 or arms.sum() != n_units:
        raise ValueError(f"arm sizes must sum to {n_units}, got {arms.tolist()}")
    if (arms < 2).any():
        raise ValueError("every arm needs at least 2 units")
    perm = rng.permutation(n_units)
    arm_of = np.empty(n_units, dtype=np.int64)
    start = 0
    for j, size in enumerate(arms, start=1):
        arm_of[perm[start : start + size]] = j
        start += size
    return Assignment(arm_of=arm_of)


def observe(table: PotentialTable, assignment: Assignment) -> ObservedData:
    """Reveal each assigned unit's outcome and tally per-arm successes."""
    if assignment.n_units != table.n_units:
        raise ValueError("assignment and table describe different unit counts")
    j = table.n_arms
    n = np.bincount(assignment.arm_of, minlength=j + 1)[1:]
    n_obs = np.empty(j, dtype=np.int64)
    for arm in range(1, j + 1):
        units = assignment.units_in(arm)
        n_obs[arm - 1] = table.outcomes[units, arm - 1].sum()
    return ObservedData(k=table.k, n=n, n_obs=n_obs)


def count_assignments(n_units: int, arms: np.ndarray) -> int:
    """Multinomial coefficient: number of distinct assignments."""
    arms = np.asarray(arms, dtype=np.int64)
    if arms.sum() != n_units or (arms < 0).any():
        raise ValueError(f"arm sizes must be nonnegative and sum to {n_units}")
    total = math.factorial(n_units)
    for size in arms:
        total //= math.factorial(int(size))
    return total


def enumerate_assignments(n_units: int, arms: np.ndarray) -> Iterator[Assignment]:
    """Yield every distinct assignment exactly once.

    Exhaustive-enumeration oracle for small populations; refuses to run
    when the multinomial coefficient exceeds ``MAX_ENUMERATION``.
    """
    arms = np.asarray(arms, dtype=np.int64)
    total = count_assignments(n_units, arms)
    if total > MAX_ENUMERATION:
        raise ResourceLimitError(
            f"{total} assignments exceed the enumeration bound {MAX_ENUMERATION}"
        )
    sizes = [int(s) for s in arms]
    arm_of = np.empty(n_units, dtype=np.int64)

    def fill(remaining: tuple[int, ...], arm: int) -> Iterator[Assignment]:
        if arm == len(sizes):  # last arm takes whatever is left
            arm_of[list(remaining)] = arm
            yield Assignment(arm_of=arm_of.copy())
            return
        for chosen in itertools.combinations(remaining, sizes[arm - 1]):
            arm_of[list(chosen)] = arm
            rest = tuple(u for u in remaining if u not in chosen)
            yield from fill(rest, arm + 1)

    yield from fill(tuple(range(n_units)), 1)
