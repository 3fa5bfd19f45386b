"""Explanation search via implicit minimum hitting sets.

Every counterexample to a candidate explanation differs from the input on
some word positions I'; any robust explanation must intersect every such
I'.  The loop alternates exact minimum-cost hitting sets over the collected
family with entailment checks, enriching the family with sparse-attack
supports so that hard instances converge in fewer oracle calls.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .attacks import AttackConfig, sparse_attack_batch
from .errors import Infeasible, InvalidInput, ResourceExhausted
from .explanations import (
    COST_TOL,
    ConstraintSpec,
    CostFunction,
    Explanation,
    SolveTrace,
    lift_exclude_cost,
)
from .model import Network
from .text import EmbeddingTable, PerturbationSpec, TextInput, Vocabulary
from .verify import EntailmentOracle, VerifierConfig


@dataclass
class HittingSetFamily:
    """The accumulated counterexample index-sets; members are never empty."""

    universe: int
    sets: list = field(default_factory=list)

    def add(self, member) -> bool:
        fs = frozenset(member)
        if not fs:
            raise InvalidInput("hitting-set family members must be non-empty")
        if not all(0 <= i < self.universe for i in fs):
            raise InvalidInput(f"member {sorted(fs)} outside universe 0..{self.universe - 1}")
        if fs in self.sets:
            return False
        self.sets.append(fs)
        return True


def _greedy_hitting_set(members, cost: CostFunction, banned=frozenset()) -> Optional[set]:
    uncovered = list(members)
    picked: set = set()
    while uncovered:
        counts: dict = {}
        for s in uncovered:
            for e in s:
                if e not in banned:
                    counts[e] = counts.get(e, 0) + 1
        if not counts:
            return None
        e = min(counts, key=lambda e: (-counts[e] / cost(e), e))
        picked.add(e)
        uncovered = [s for s in uncovered if e not in s]
    return picked


def _packing_lower_bound(members, cost: CostFunction, banned) -> Optional[float]:
    """Cost of a greedy disjoint packing; None when a member is unhittable."""
    lb = 0.0
    used: set = set()
    for s in sorted(members, key=lambda s: (len(s), sorted(s))):
        avail = [e for e in s if e not in banned]
        if not avail:
            return None
        if not (s & used):
            lb += min(cost(e) for e in avail)
            used |= s
    return lb


def minimum_hitting_set(sets, cost: CostFunction, forced=frozenset()) -> tuple:
    """Exact minimum-cost hitting set, ties by (cardinality, lexicographic).

    Branch and bound over the elements of a smallest uncovered member, most
    frequent element first, seeded with a greedy upper bound.
    """
    forced = frozenset(forced)
    members = []
    for s in sets:
        fs = frozenset(s)
        if not fs:
            raise InvalidInput("hitting-set family members must be non-empty")
        if not (fs & forced):
            members.append(fs)
    if not members:
        return tuple(sorted(forced))

    best: dict = {"key": None, "set": None}

    def consider(chosen: set, total: float):
        full = tuple(sorted(forced | chosen))
        key = (total, len(full), full)
        if best["key"] is None or _key_better(key, best["key"]):
            best["key"] = key
            best["set"] = full

    def _key_better(a, b) -> bool:
        if a[0] < b[0] - COST_TOL:
            return True
        if a[0] > b[0] + COST_TOL:
            return False
        return a[1:] < b[1:]

    seed = _greedy_hitting_set(members, cost)
    if seed is None:
        raise InvalidInput("some member consists only of banned elements")
    consider(seed, cost.total(seed))

    def dfs(chosen: set, banned: frozenset, uncovered: list, total: float):
        if total - best["key"][0] > COST_TOL:
            return
        if not uncovered:
            consider(chosen, total)
            return
        lb = _packing_lower_bound(uncovered, cost, banned)
        if lb is None or total + lb - best["key"][0] > COST_TOL:
            return
        target_set = min(uncovered, key=lambda s: (len(s), sorted(s)))
        degree: dict = {}
        for s in uncovered:
            for e in s:
                degree[e] = degree.get(e, 0) + 1
        elements = sorted(
            (e for e in target_set if e not in banned),
            key=lambda e: (-degree[e], e),
        )
        new_banned = set(banned)
        for e in elements:
            dfs(
                chosen | {e},
                frozenset(new_banned),
                [s for s in uncovered if e not in s],
                total + cost(e),
            )
            new_banned.add(e)

    dfs(set(), frozenset(), members, 0.0)
    return best["set"]


@dataclass
class HsSolverConfig:
    use_attacks: bool = True
    attack_batch: int = 8           # supports added to the family per iteration
    max_iterations: int = 10_000
    attack_config: AttackConfig = field(
        default_factory=lambda: AttackConfig(n=8, budget=8, fgsm_iters=6)
    )


def ore_hs(net: Network, t: TextInput, spec: PerturbationSpec,
           vocab: Vocabulary, table: EmbeddingTable,
           cost: Optional[CostFunction] = None,
           constraints: Optional[ConstraintSpec] = None,
           verifier_config: Optional[VerifierConfig] = None,
           solver_config: Optional[HsSolverConfig] = None) -> Explanation:
    """Minimum-cost robust explanation via implicit hitting sets.

    Include-constrained words are forced into every candidate; exclude
    constraints are realized by lifting their costs above any competitor and
    reported Infeasible when the optimum still uses them.
    """
    cost = cost or CostFunction.uniform(t.length)
    constraints = constraints or ConstraintSpec()
    solver_config = solver_config or HsSolverConfig()
    if cost.length != t.length:
        raise InvalidInput(f"cost function covers {cost.length} words, text has {t.length}")
    constraints.validate(t.length)

    oracle = EntailmentOracle(net, t, spec, vocab, table, config=verifier_config)
    search_cost = lift_exclude_cost(cost, constraints.exclude)
    family = HittingSetFamily(universe=t.length)
    attack_calls = 0
    attacks_found = 0

    for iteration in range(solver_config.max_iterations):
        candidate = minimum_hitting_set(family.sets, search_cost, forced=constraints.include)
        res = oracle.query(candidate)
        if res.is_exhausted:
            raise ResourceExhausted(
                "verifier split budget hit during the hitting-set loop",
                splits_used=res.splits_used,
            )
        if res.is_robust:
            if set(candidate) & constraints.exclude:
                raise Infeasible(
                    "every robust explanation uses excluded words "
                    f"{sorted(set(candidate) & constraints.exclude)}"
                )
            trace = SolveTrace(
                solver="hs",
                entailment_queries=oracle.queries,
                counterexamples=oracle.counterexamples,
                attack_calls=attack_calls,
                attacks_found=attacks_found,
                splits=oracle.splits,
                iterations=iteration + 1,
            )
            return Explanation(indices=candidate, cost=cost.total(candidate), trace=trace)
        family.add(oracle.diff(res.point))
        if solver_config.use_attacks:
            attack_calls += 1
            batch = sparse_attack_batch(
                net, t, candidate, spec, vocab, table,
                config=replace(
                    solver_config.attack_config,
                    seed=solver_config.attack_config.seed * 1_000_003 + iteration,
                ),
                count=solver_config.attack_batch,
            )
            attacks_found += len(batch)
            for attack in batch:
                family.add(attack.support)
    raise ResourceExhausted(
        f"hitting-set loop exceeded {solver_config.max_iterations} iterations"
    )
