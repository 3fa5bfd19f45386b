"""Constrained explanations, decision-bias detection and anchor scoring.

A decision is biased when the prediction can be flipped by perturbing only
the protected words, i.e. no robust explanation avoids them.  The same
include/exclude machinery minimally extends heuristic explanations (repair)
until they are provably robust.  Precision and coverage estimators score
any word-set explanation against a perturbation distribution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InvalidInput, ResourceExhausted, UndefinedEstimate
from .explanations import ConstraintSpec, CostFunction, Explanation, SolveTrace, lift_exclude_cost
from .hitting import HsSolverConfig, ore_hs
from .model import Network, argmax_label, batch_logits, forward, lower_network
from .mus import MsaSolverConfig, ore_msa
from .text import Box, EmbeddingTable, PerturbationSpec, TextInput, Vocabulary
from .verify import EntailmentOracle, VerifierConfig

__all__ = [
    "ConstraintSpec",
    "BiasVerdict",
    "DiscreteSampler",
    "BoxSampler",
    "lift_exclude_cost",
    "detect_bias",
    "repair_explanation",
    "precision",
    "coverage",
    "coverage_of_batch",
    "word_indices",
]


@dataclass(eq=False)
class BiasVerdict:
    biased: bool
    witness_explanation: Optional[Explanation] = None  # unbiased: avoids protected
    witness_point: Optional[np.ndarray] = None         # biased: the flipping input
    witness_label: Optional[int] = None

    def __post_init__(self):
        if self.biased and self.witness_point is None:
            raise InvalidInput("biased verdicts carry the flipping point")
        if not self.biased and self.witness_explanation is None:
            raise InvalidInput("unbiased verdicts carry a protected-free explanation")


def word_indices(tokens: Sequence[str], items) -> frozenset:
    """Resolve a mixed list of word strings / positions against the tokens.

    Words select every position where they occur; unmatched words are an
    error rather than a silent drop.
    """
    out = set()
    for item in items:
        if isinstance(item, bool):
            raise InvalidInput(f"not a word or index: {item!r}")
        if isinstance(item, int):
            if not (0 <= item < len(tokens)):
                raise InvalidInput(f"word index {item} outside 0..{len(tokens) - 1}")
            out.add(item)
            continue
        hits = [i for i, tok in enumerate(tokens) if tok == item]
        if not hits:
            raise InvalidInput(f"word {item!r} does not occur in the input")
        out.update(hits)
    return frozenset(out)


def _solve(solver: str, net, t, spec, vocab, table, cost, constraints,
           verifier_config) -> Explanation:
    if solver == "hs":
        return ore_hs(net, t, spec, vocab, table, cost, constraints,
                      verifier_config=verifier_config)
    if solver == "msa":
        return ore_msa(net, t, spec, vocab, table, cost, constraints,
                       verifier_config=verifier_config)
    raise InvalidInput(f"solver must be 'hs' or 'msa', got {solver!r}")


def detect_bias(net: Network, t: TextInput, protected, spec: PerturbationSpec,
                vocab: Vocabulary, table: EmbeddingTable,
                cost: Optional[CostFunction] = None,
                solver: str = "hs",
                verifier_config: Optional[VerifierConfig] = None) -> BiasVerdict:
    """Biased iff the prediction can flip while all non-protected words stay put.

    One entailment query decides; the witness explanation for the unbiased
    case comes from a lifted-cost solve that avoids the protected words.
    """
    protected = frozenset(protected)
    cost = cost or CostFunction.uniform(t.length)
    oracle = EntailmentOracle(net, t, spec, vocab, table, config=verifier_config)
    fixed = [i for i in oracle.universe if i not in protected]
    res = oracle.query(fixed)
    if res.is_exhausted:
        raise ResourceExhausted(
            "verifier split budget hit; bias verdict withheld",
            splits_used=res.splits_used,
        )
    if res.is_counterexample:
        return BiasVerdict(
            biased=True, witness_point=res.point, witness_label=res.predicted
        )
    witness = _solve(
        solver, net, t, spec, vocab, table, cost,
        ConstraintSpec(exclude=protected), verifier_config,
    )
    if set(witness.indices) & protected:
        raise AssertionError("witness explanation touches protected words")
    return BiasVerdict(biased=False, witness_explanation=witness)


def repair_explanation(net: Network, t: TextInput, seed, spec: PerturbationSpec,
                       vocab: Vocabulary, table: EmbeddingTable,
                       cost: Optional[CostFunction] = None,
                       solver: str = "hs",
                       verifier_config: Optional[VerifierConfig] = None) -> Explanation:
    """Minimal-cost robust extension of an externally produced explanation.

    Already-robust seeds come back unchanged; include constraints keep the
    problem feasible for any seed.
    """
    seed = frozenset(seed)
    cost = cost or CostFunction.uniform(t.length)
    oracle = EntailmentOracle(net, t, spec, vocab, table, config=verifier_config)
    res = oracle.query(seed)
    if res.is_exhausted:
        raise ResourceExhausted(
            "verifier split budget hit while checking the seed",
            splits_used=res.splits_used,
        )
    if res.is_robust:
        trace = SolveTrace(
            solver=f"repair-{solver}",
            entailment_queries=oracle.queries,
            counterexamples=oracle.counterexamples,
            splits=oracle.splits,
        )
        return Explanation(indices=tuple(seed), cost=cost.total(seed), trace=trace)
    return _solve(
        solver, net, t, spec, vocab, table, cost,
        ConstraintSpec(include=seed), verifier_config,
    )


# --- anchor-style scoring ----------------------------------------------------

class DiscreteSampler:
    """Finite distribution over perturbation points (support + probabilities)."""

    def __init__(self, points, probs, seed: int = 0, box: Optional[Box] = None):
        self.points = np.asarray(points, dtype=np.float64)
        self.probs = np.asarray(probs, dtype=np.float64)
        self.seed = seed
        if self.points.ndim != 2 or self.probs.shape != (self.points.shape[0],):
            raise InvalidInput("need (n, dim) points and matching probabilities")
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1.0) > 1e-12:
            raise InvalidInput("probabilities must be non-negative and sum to 1")
        if box is not None:
            for p in self.points:
                if not box.contains(p):
                    raise InvalidInput("sampler support leaves the perturbation set")

    @property
    def discrete(self) -> bool:
        return True

    def draw(self, n: int) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        idx = rng.choice(self.points.shape[0], size=n, p=self.probs)
        return self.points[idx]

    def conditional(self, t: TextInput, fixed) -> "DiscreteSampler":
        """Distribution restricted to points agreeing with the input on `fixed`."""
        mask = _block_mask(t, fixed)
        agree = np.array(
            [bool(np.all(p[mask] == t.point[mask])) for p in self.points]
        )
        total = float(self.probs[agree].sum())
        if total <= 0.0:
            raise UndefinedEstimate(
                "the sampler gives zero mass to points agreeing with the explanation"
            )
        return DiscreteSampler(
            self.points[agree], self.probs[agree] / total, seed=self.seed
        )


class BoxSampler:
    """Seeded uniform sampler over a perturbation box."""

    def __init__(self, box: Box, seed: int = 0):
        self.box = box
        self.seed = seed

    @property
    def discrete(self) -> bool:
        return False

    def draw(self, n: int) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        u = rng.random((n, self.box.dim))
        return self.box.lo + u * (self.box.hi - self.box.lo)


def _block_mask(t: TextInput, indices) -> np.ndarray:
    mask = np.zeros(t.length, dtype=bool)
    for i in indices:
        if not (0 <= i < t.length):
            raise InvalidInput(f"word index {i} outside 0..{t.length - 1}")
        mask[i] = True
    return np.repeat(mask, t.dim)


def precision(explanation, net: Network, t: TextInput, sampler, n: int) -> float:
    """Empirical probability that the prediction survives perturbations the
    explanation applies to (word blocks in the explanation agree with the
    input; the rest follow the sampler)."""
    if n < 1:
        raise InvalidInput("need at least one sample")
    net = lower_network(net)
    target = forward(net, t.point).label
    fixed = frozenset(explanation)
    if sampler.discrete:
        points = sampler.conditional(t, fixed).draw(n)
    else:
        points = sampler.draw(n)
        mask = _block_mask(t, fixed)
        points[:, mask] = t.point[mask]
    labels = np.argmax(batch_logits(net, points), axis=1)
    return float(np.mean(labels == target))


def coverage_of_batch(explanation, t: TextInput, batch: np.ndarray) -> float:
    fixed = frozenset(explanation)
    if not fixed:
        return 1.0
    mask = _block_mask(t, fixed)
    hits = np.all(batch[:, mask] == t.point[mask], axis=1)
    return float(np.mean(hits))


def coverage(explanation, t: TextInput, sampler, n: int) -> float:
    """Empirical probability that a perturbation agrees with the input on all
    explanation words.  The empty explanation covers everything; non-empty
    coverage needs a discrete sampler (it is identically 0 for continuous
    distributions)."""
    if n < 1:
        raise InvalidInput("need at least one sample")
    if not frozenset(explanation):
        return 1.0
    if not sampler.discrete:
        raise InvalidInput("coverage of a non-empty explanation needs a discrete sampler")
    return coverage_of_batch(explanation, t, sampler.draw(n))
