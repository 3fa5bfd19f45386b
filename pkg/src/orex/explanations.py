"""Shared domain types for the explanation solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import InvalidInput

COST_TOL = 1e-9  # tolerance for cost comparisons / tie detection


@dataclass(frozen=True)
class CostFunction:
    """Positive per-word costs over the l input positions (uniform by default)."""

    costs: tuple

    def __post_init__(self):
        if not self.costs:
            raise InvalidInput("cost function over zero words")
        if any(not (c > 0 and c == c and c != float("inf")) for c in self.costs):
            raise InvalidInput("all word costs must be positive and finite")

    @classmethod
    def uniform(cls, length: int, value: float = 1.0) -> "CostFunction":
        return cls(costs=(value,) * length)

    def __call__(self, i: int) -> float:
        return self.costs[i]

    def total(self, indices) -> float:
        return float(sum(self.costs[i] for i in indices))

    @property
    def length(self) -> int:
        return len(self.costs)


@dataclass(frozen=True)
class ConstraintSpec:
    """Forced-in (include) and forbidden (exclude) word positions."""

    include: frozenset = frozenset()
    exclude: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "include", frozenset(self.include))
        object.__setattr__(self, "exclude", frozenset(self.exclude))
        if self.include & self.exclude:
            raise InvalidInput("include and exclude constraints overlap")

    def validate(self, length: int):
        for i in self.include | self.exclude:
            if not (0 <= i < length):
                raise InvalidInput(f"constraint index {i} outside 0..{length - 1}")


@dataclass
class SolveTrace:
    """Query accounting attached to every explanation."""

    solver: str
    entailment_queries: int = 0
    counterexamples: int = 0
    attack_calls: int = 0
    attacks_found: int = 0
    splits: int = 0
    iterations: int = 0


@dataclass(frozen=True, eq=False)
class Explanation:
    """A robust word-index set with its cost and solve trail."""

    indices: tuple  # sorted word positions
    cost: float
    trace: SolveTrace

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(sorted(self.indices)))

    def as_set(self) -> frozenset:
        return frozenset(self.indices)

    def words(self, tokens: Sequence[str]) -> list:
        return [tokens[i] for i in self.indices]


def candidate_order_key(indices) -> tuple:
    """Global tie rule: lower cost, then fewer words, then lexicographic indices."""
    s = tuple(sorted(indices))
    return (len(s), s)


def lift_exclude_cost(cost: CostFunction, exclude) -> CostFunction:
    """Raise excluded words above any explanation that avoids them.

    Excluded words get the total cost of all other words plus one, so an
    optimum that still uses one certifies that no excluded-free robust
    explanation exists.
    """
    exclude = frozenset(exclude)
    if not exclude:
        return cost
    for i in exclude:
        if not (0 <= i < cost.length):
            raise InvalidInput(f"exclude index {i} outside 0..{cost.length - 1}")
    lifted = sum(c for i, c in enumerate(cost.costs) if i not in exclude) + 1.0
    return CostFunction(
        costs=tuple(lifted if i in exclude else c for i, c in enumerate(cost.costs))
    )
