"""Gradient-based counterexample search.

fgsm pushes a point toward a rival label with sign-of-gradient steps clipped
into the query box.  sparse_attack wraps it in a descending-k random search
that looks for label flips touching as few free words as possible; small
difference sets are what make the hitting-set solver converge fast.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInput
from .model import Network, forward, gradient, lower_network
from .text import (
    Box,
    EmbeddingTable,
    PerturbationSpec,
    TextInput,
    Vocabulary,
    build_perturbation,
)
from . import verify


@dataclass(frozen=True)
class AttackConfig:
    n: int = 16            # candidate perturbations per iteration
    budget: int = 20       # search iterations
    step: float = 1.0      # FGSM step as a fraction of the box half-width
    fgsm_iters: int = 10
    seed: int = 0
    rank_bias: float = 0.5  # geometric weight when sampling high-gradient words

    def __post_init__(self):
        if self.n < 1 or self.budget < 1:
            raise InvalidInput("population size and budget must be >= 1")
        if not (0.0 < self.step <= 1.0):
            raise InvalidInput(f"step must be in (0, 1], got {self.step}")


@dataclass(frozen=True, eq=False)
class SparseAttack:
    point: np.ndarray
    support: tuple        # word positions actually perturbed
    predicted: int
    gap: float            # flip margin: best rival logit minus target logit


def _pick_rival(net: Network, box: Box, target: int) -> int:
    ub = verify.bounds(net, box)[:, 1]
    order = sorted(
        (r for r in range(net.num_labels) if r != target),
        key=lambda r: (-ub[r], r),
    )
    return order[0]


def fgsm(net: Network, start: np.ndarray, box: Box, target: int,
         config: Optional[AttackConfig] = None, rival: Optional[int] = None,
         mask: Optional[np.ndarray] = None) -> Optional[np.ndarray]:
    """Iterated clipped sign-gradient ascent of (logit_rival - logit_target).

    Returns a point that flips the label, or None.  With `mask` given, only
    masked coordinates move.
    """
    config = config or AttackConfig()
    net = lower_network(net)
    if box.is_degenerate():
        return None
    if rival is None:
        rival = _pick_rival(net, box, target)
    half_width = 0.5 * (box.hi - box.lo)
    step = config.step * half_width
    if mask is not None:
        step = step * mask
    x = np.clip(np.asarray(start, dtype=np.float64), box.lo, box.hi)
    for _ in range(config.fgsm_iters):
        g = gradient(net, x, (rival, target))
        x = np.clip(x + step * np.sign(g), box.lo, box.hi)
        if forward(net, x).label != target:
            return x
    return None


def _verified_attack(net: Network, t: TextInput, target: int,
                     point: np.ndarray) -> Optional[SparseAttack]:
    pred = forward(net, point)
    if pred.label == target:
        return None
    support = verify.counterexample_diff(t, point)
    if not support:
        return None
    gap = float(pred.logits[pred.label] - pred.logits[target])
    return SparseAttack(point=point, support=support, predicted=pred.label, gap=gap)


def _attack_key(attack: SparseAttack):
    return (len(attack.support), -attack.gap, attack.support)


def _descend(net: Network, t: TextInput, fixed, spec: PerturbationSpec,
             vocab: Vocabulary, table: EmbeddingTable,
             config: AttackConfig) -> list:
    """The descending-k search; returns attacks with distinct supports."""
    net = lower_network(net)
    fixed = frozenset(fixed)
    free = [i for i in range(t.length) if i not in fixed]
    if not free:
        return []
    target = forward(net, t.point).label
    box = build_perturbation(t, fixed, spec, vocab, table)
    rival = _pick_rival(net, box, target)

    # Rank free words by the inf-norm of their gradient block at the input and
    # bias the k-subset sampling toward the top ranks.
    g = gradient(net, t.point, (rival, target)).reshape(t.length, t.dim)
    ranked = sorted(free, key=lambda i: (-np.abs(g[i]).max(), i))
    weights = config.rank_bias ** np.arange(len(ranked))
    weights /= weights.sum()
    rng = np.random.default_rng(config.seed)

    found: dict = {}
    k = len(free)
    budget = config.budget
    while k > 0 and budget > 0:
        hit_this_round = False
        for _ in range(config.n):
            chosen = rng.choice(len(ranked), size=k, replace=False, p=weights)
            mask = np.zeros(t.length, dtype=bool)
            mask[[ranked[int(c)] for c in chosen]] = True
            point = fgsm(
                net,
                t.point,
                box,
                target,
                config,
                rival=rival,
                mask=np.repeat(mask, t.dim).astype(float),
            )
            if point is None:
                continue
            attack = _verified_attack(net, t, target, point)
            if attack is None:
                continue
            hit_this_round = True
            prev = found.get(attack.support)
            if prev is None or attack.gap > prev.gap:
                found[attack.support] = attack
        budget -= 1
        if hit_this_round:
            k -= 1
    return sorted(found.values(), key=_attack_key)


def sparse_attack(net: Network, t: TextInput, fixed, spec: PerturbationSpec,
                  vocab: Vocabulary, table: EmbeddingTable,
                  config: Optional[AttackConfig] = None) -> Optional[SparseAttack]:
    """Best label-flipping perturbation of the free words: smallest support,
    then largest flip margin.  None when no attack is found within budget."""
    attacks = _descend(net, t, fixed, spec, vocab, table, config or AttackConfig())
    return attacks[0] if attacks else None


def sparse_attack_batch(net: Network, t: TextInput, fixed, spec: PerturbationSpec,
                        vocab: Vocabulary, table: EmbeddingTable,
                        config: Optional[AttackConfig] = None,
                        count: int = 8) -> list:
    """Up to `count` verified attacks with pairwise distinct supports.

    Supports strictly containing another returned support are dropped: a
    sparser recorded success makes the larger set redundant for hitting.
    """
    if count <= 0:
        return []
    attacks = _descend(net, t, fixed, spec, vocab, table, config or AttackConfig())
    kept: list = []
    for attack in attacks:
        s = set(attack.support)
        if any(set(other.support) < s for other in attacks):
            continue
        kept.append(attack)
        if len(kept) == count:
            break
    return kept
