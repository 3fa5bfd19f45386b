"""Explanation search via maximum universal subsets.

A maximum universal subset (MUS) is a max-cost word set that can be freed
(perturbed over its whole box) without changing the prediction; its
complement is exactly a smallest-cost explanation.  The search is a
recursive branch and bound over candidates ordered by descending cost, with
a per-word freeability filter (shrink) pruning candidates before descending
and a lower bound cutting branches that cannot improve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import Infeasible, InvalidInput, ResourceExhausted
from .explanations import (
    COST_TOL,
    ConstraintSpec,
    CostFunction,
    Explanation,
    SolveTrace,
)
from .model import Network
from .text import EmbeddingTable, PerturbationSpec, TextInput, Vocabulary
from .verify import EntailmentOracle, EntailmentResult, VerifierConfig


@dataclass
class MusState:
    """Search state: words already freed, remaining candidates, best bound."""

    bounded: frozenset = frozenset()
    candidates: Optional[tuple] = None  # None means every word outside `bounded`
    lower_bound: float = 0.0


@dataclass
class MsaSolverConfig:
    use_shrink: bool = True


def _query_free(oracle: EntailmentOracle, free) -> EntailmentResult:
    fixed = [i for i in oracle.universe if i not in free]
    res = oracle.query(fixed)
    if res.is_exhausted:
        raise ResourceExhausted(
            "verifier split budget hit during the MUS search",
            splits_used=res.splits_used,
        )
    return res


def _candidate_order(indices, cost: CostFunction) -> tuple:
    # Highest cost first; equal costs resolve toward the higher index so the
    # surviving explanation keeps the lexicographically smallest words.
    return tuple(sorted(indices, key=lambda i: (-cost(i), -i)))


def _shrink(oracle: EntailmentOracle, bounded: frozenset, cands: tuple) -> tuple:
    return tuple(
        c for c in cands if _query_free(oracle, bounded | {c}).is_robust
    )


def _mus(oracle: EntailmentOracle, cost: CostFunction, bounded: frozenset,
         cands: tuple, lower: float, cfg: MsaSolverConfig) -> frozenset:
    if not cands or cost.total(cands) <= lower + COST_TOL:
        return frozenset()
    best = frozenset()
    w, rest = cands[0], cands[1:]
    if _query_free(oracle, bounded | {w}).is_robust:
        pruned = _shrink(oracle, bounded | {w}, rest) if cfg.use_shrink else rest
        y = _mus(oracle, cost, bounded | {w}, pruned, lower - cost(w), cfg)
        total = cost.total(y) + cost(w)
        if total > lower + COST_TOL:
            best = y | {w}
            lower = total
    y2 = _mus(oracle, cost, bounded, rest, lower, cfg)
    if cost.total(y2) > lower + COST_TOL:
        best = y2
    return best


def mus(state: MusState, net: Network, t: TextInput, spec: PerturbationSpec,
        vocab: Vocabulary, table: EmbeddingTable,
        cost: Optional[CostFunction] = None,
        verifier_config: Optional[VerifierConfig] = None,
        solver_config: Optional[MsaSolverConfig] = None) -> frozenset:
    """Maximum-cost subset of the candidates that can be freed alongside
    `state.bounded` while the prediction provably stays put."""
    cost = cost or CostFunction.uniform(t.length)
    oracle = EntailmentOracle(net, t, spec, vocab, table, config=verifier_config)
    cands = state.candidates
    if cands is None:
        cands = tuple(i for i in oracle.universe if i not in state.bounded)
    if set(cands) & state.bounded:
        raise InvalidInput("candidates overlap the bounded set")
    return _mus(
        oracle,
        cost,
        frozenset(state.bounded),
        _candidate_order(cands, cost),
        state.lower_bound,
        solver_config or MsaSolverConfig(),
    )


def shrink(state: MusState, net: Network, t: TextInput, spec: PerturbationSpec,
           vocab: Vocabulary, table: EmbeddingTable,
           cost: Optional[CostFunction] = None,
           verifier_config: Optional[VerifierConfig] = None) -> frozenset:
    """Candidates that can each be individually freed on top of the bounded
    set; a superset of every true MUS inside the candidates."""
    cost = cost or CostFunction.uniform(t.length)
    oracle = EntailmentOracle(net, t, spec, vocab, table, config=verifier_config)
    cands = state.candidates
    if cands is None:
        cands = tuple(i for i in oracle.universe if i not in state.bounded)
    return frozenset(
        _shrink(oracle, frozenset(state.bounded), _candidate_order(cands, cost))
    )


def ore_msa(net: Network, t: TextInput, spec: PerturbationSpec,
            vocab: Vocabulary, table: EmbeddingTable,
            cost: Optional[CostFunction] = None,
            constraints: Optional[ConstraintSpec] = None,
            verifier_config: Optional[VerifierConfig] = None,
            solver_config: Optional[MsaSolverConfig] = None) -> Explanation:
    """Smallest-cost explanation as the complement of a MUS.

    Include-constrained words never enter the candidate set (they stay
    fixed); exclude-constrained words are freed up front, which is
    infeasible exactly when their complement is not robust.
    """
    cost = cost or CostFunction.uniform(t.length)
    constraints = constraints or ConstraintSpec()
    cfg = solver_config or MsaSolverConfig()
    if cost.length != t.length:
        raise InvalidInput(f"cost function covers {cost.length} words, text has {t.length}")
    constraints.validate(t.length)

    oracle = EntailmentOracle(net, t, spec, vocab, table, config=verifier_config)
    exclude = constraints.exclude
    if exclude and not _query_free(oracle, exclude).is_robust:
        raise Infeasible(
            f"prediction is not robust once excluded words {sorted(exclude)} are freed"
        )
    cands = _candidate_order(
        (i for i in oracle.universe if i not in exclude and i not in constraints.include),
        cost,
    )
    bounded = frozenset(exclude)
    if cfg.use_shrink:
        cands = _shrink(oracle, bounded, cands)
    freed = _mus(oracle, cost, bounded, cands, 0.0, cfg) | exclude
    indices = tuple(i for i in oracle.universe if i not in freed)
    final = _query_free(oracle, freed)
    if not final.is_robust:
        raise AssertionError("MUS result failed its certificate re-check")
    trace = SolveTrace(
        solver="msa",
        entailment_queries=oracle.queries,
        counterexamples=oracle.counterexamples,
        splits=oracle.splits,
        iterations=0,
    )
    return Explanation(indices=indices, cost=cost.total(indices), trace=trace)


def enumerate_all_minimal(net: Network, t: TextInput, spec: PerturbationSpec,
                          vocab: Vocabulary, table: EmbeddingTable,
                          cost: Optional[CostFunction] = None,
                          optimum: Optional[float] = None,
                          verifier_config: Optional[VerifierConfig] = None,
                          guard: int = 10**6) -> list:
    """All robust explanations whose cost equals the optimum, sorted.

    Refuses (ResourceExhausted) when more than `guard` subsets match the
    optimal cost before entailment filtering.
    """
    cost = cost or CostFunction.uniform(t.length)
    if optimum is None:
        optimum = ore_msa(net, t, spec, vocab, table, cost,
                          verifier_config=verifier_config).cost
    oracle = EntailmentOracle(net, t, spec, vocab, table, config=verifier_config)

    matching: list = []

    def collect(i: int, chosen: list, total: float):
        if total > optimum + COST_TOL:
            return  # positive costs: no completion can come back down
        if i == t.length:
            if abs(total - optimum) <= COST_TOL:
                if len(matching) >= guard:
                    raise ResourceExhausted(
                        f"more than {guard} subsets match the optimal cost"
                    )
                matching.append(tuple(chosen))
            return
        collect(i + 1, chosen, total)
        chosen.append(i)
        collect(i + 1, chosen, total + cost(i))
        chosen.pop()

    collect(0, [], 0.0)
    matching.sort()
    out = []
    for subset in matching:
        res = oracle.query(subset)
        if res.is_exhausted:
            raise ResourceExhausted(
                "verifier split budget hit during enumeration",
                splits_used=res.splits_used,
            )
        if res.is_robust:
            trace = SolveTrace(
                solver="enumerate",
                entailment_queries=oracle.queries,
                counterexamples=oracle.counterexamples,
                splits=oracle.splits,
            )
            out.append(Explanation(indices=subset, cost=cost.total(subset), trace=trace))
    return out
