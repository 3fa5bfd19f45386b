"""Sound and complete robustness decision procedure over input boxes.

The entailment question is: does the predicted label stay the argmax for
every point of a box?  The answer is either a certificate (Robust), a
concrete counterexample point, or ResourceExhausted when the split budget
runs out.

Bounds come from symbolic interval propagation: every neuron carries a pair
of affine functions of the input enclosing it from below and above, plus
concrete scalars obtained by optimizing those functions over the box.
Unstable ReLUs are relaxed (chord upper, adaptive 0/1-slope lower).  When
relaxation cannot certify and no counterexample is found, the search
branches on the most influential unstable ReLU (forcing its phase on each
side), falling back to bisecting the widest input coordinate.  Phase
assumptions that become contradictory over a sub-box discharge the leaf.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInput
from .model import (
    AffineLayer,
    Network,
    ReluLayer,
    argmax_label,
    batch_logits,
    forward,
    lower_network,
)
from .text import Box, EmbeddingTable, PerturbationSpec, TextInput, Vocabulary, word_box

ROBUST = "robust"
COUNTEREXAMPLE = "counterexample"
RESOURCE_EXHAUSTED = "resource_exhausted"

DIFF_TOL = 1e-12  # word-block difference threshold for I' extraction
CMP_TOL = 1e-9    # comparison tolerance at exactly-decided leaves


@dataclass
class VerifierConfig:
    split_budget: int = 100_000
    use_attack_probe: bool = True
    probe_every: int = 64       # sampling + gradient attack every Nth node
    probe_samples: int = 4096   # root sampling batch; nodes use a fraction
    probe_seed: int = 0
    deterministic: bool = True  # kept for API symmetry; the search is sequential


@dataclass(eq=False)
class SymbolicBounds:
    """Per-neuron affine enclosures c + a.x plus their concrete ranges."""

    lo_coeffs: np.ndarray
    lo_const: np.ndarray
    up_coeffs: np.ndarray
    up_const: np.ndarray
    concrete_lo: np.ndarray
    concrete_hi: np.ndarray


@dataclass(eq=False)
class EntailmentResult:
    verdict: str
    point: Optional[np.ndarray] = None
    predicted: Optional[int] = None
    splits_used: int = 0
    attack_calls: int = 0

    @property
    def is_robust(self) -> bool:
        return self.verdict == ROBUST

    @property
    def is_counterexample(self) -> bool:
        return self.verdict == COUNTEREXAMPLE

    @property
    def is_exhausted(self) -> bool:
        return self.verdict == RESOURCE_EXHAUSTED


def _minimize_affine(coeffs: np.ndarray, const: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    pos = np.clip(coeffs, 0.0, None)
    neg = np.clip(coeffs, None, 0.0)
    return const + pos @ lo + neg @ hi


def _maximize_affine(coeffs: np.ndarray, const: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    pos = np.clip(coeffs, 0.0, None)
    neg = np.clip(coeffs, None, 0.0)
    return const + pos @ hi + neg @ lo


def _through_affine(state: SymbolicBounds, w: np.ndarray, b: np.ndarray,
                    lo: np.ndarray, hi: np.ndarray,
                    ibp: tuple) -> tuple:
    """Push the state through y = Wx + b.

    Concrete bounds are the intersection of the symbolic enclosure with a
    plain interval pass (`ibp`); the interval channel is what carries ReLU
    clamps and forced-phase cuts, which the equations cannot express.
    """
    wp = np.clip(w, 0.0, None)
    wn = np.clip(w, None, 0.0)
    lo_coeffs = wp @ state.lo_coeffs + wn @ state.up_coeffs
    lo_const = wp @ state.lo_const + wn @ state.up_const + b
    up_coeffs = wp @ state.up_coeffs + wn @ state.lo_coeffs
    up_const = wp @ state.up_const + wn @ state.lo_const + b
    ibp_lo = wp @ ibp[0] + wn @ ibp[1] + b
    ibp_hi = wp @ ibp[1] + wn @ ibp[0] + b
    concrete_lo = np.maximum(_minimize_affine(lo_coeffs, lo_const, lo, hi), ibp_lo)
    concrete_hi = np.minimum(_maximize_affine(up_coeffs, up_const, lo, hi), ibp_hi)
    state = SymbolicBounds(
        lo_coeffs=lo_coeffs,
        lo_const=lo_const,
        up_coeffs=up_coeffs,
        up_const=up_const,
        concrete_lo=concrete_lo,
        concrete_hi=concrete_hi,
    )
    return state, (concrete_lo, concrete_hi)


@dataclass(eq=False)
class _ReluRecord:
    layer: int                 # index into the relu-layer sequence
    pre_lo: np.ndarray
    pre_hi: np.ndarray
    gates: np.ndarray          # 1.0 where the neuron passes gradient influence
    unstable: np.ndarray       # boolean mask


@dataclass(eq=False)
class _Propagation:
    out: SymbolicBounds
    events: list               # ("affine", W) / ("relu", _ReluRecord), forward order
    infeasible: bool

    @property
    def relus(self) -> list:
        return [rec for kind, rec in self.events if kind == "relu"]


def _propagate(layers, lo: np.ndarray, hi: np.ndarray, phases: dict) -> _Propagation:
    dim = lo.shape[0]
    eye = np.eye(dim)
    zero = np.zeros(dim)
    state = SymbolicBounds(eye, zero.copy(), eye.copy(), zero.copy(), lo.copy(), hi.copy())
    ibp = (lo.copy(), hi.copy())
    events = []
    relu_idx = 0
    for layer in layers:
        if isinstance(layer, AffineLayer):
            state, ibp = _through_affine(state, layer.weights, layer.bias, lo, hi, ibp)
            events.append(("affine", layer.weights))
            continue
        n = state.lo_const.shape[0]
        pre_lo, pre_hi = state.concrete_lo, state.concrete_hi
        forced = np.zeros(n, dtype=int)
        for (r, i), sign in phases.items():
            if r == relu_idx:
                forced[i] = sign
        # Contradictory phase assumptions mean the sub-box owns no points.
        if np.any((forced == 1) & (pre_hi < 0.0)) or np.any((forced == -1) & (pre_lo > 0.0)):
            return _Propagation(state, events, infeasible=True)
        active = (forced == 1) | ((forced == 0) & (pre_lo >= 0.0))
        inactive = (forced == -1) | ((forced == 0) & ~active & (pre_hi <= 0.0))
        unstable = ~active & ~inactive

        lo_coeffs = state.lo_coeffs.copy()
        lo_const = state.lo_const.copy()
        up_coeffs = state.up_coeffs.copy()
        up_const = state.up_const.copy()
        lo_coeffs[inactive] = 0.0
        lo_const[inactive] = 0.0
        up_coeffs[inactive] = 0.0
        up_const[inactive] = 0.0
        if np.any(unstable):
            l, u = pre_lo[unstable], pre_hi[unstable]
            lam = u / (u - l)  # chord slope of the relaxation
            up_coeffs[unstable] *= lam[:, None]
            up_const[unstable] = lam * (up_const[unstable] - l)
            alpha = (u >= -l).astype(float)  # keep the tighter of slopes 0 / 1
            lo_coeffs[unstable] *= alpha[:, None]
            lo_const[unstable] *= alpha
        # The interval channel clamps at 0 and applies the forced-phase cut,
        # which forced-active equations cannot encode.
        ibp = (np.where(inactive, 0.0, np.maximum(pre_lo, 0.0)),
               np.where(inactive, 0.0, np.maximum(pre_hi, 0.0)))
        state = SymbolicBounds(
            lo_coeffs=lo_coeffs,
            lo_const=lo_const,
            up_coeffs=up_coeffs,
            up_const=up_const,
            concrete_lo=ibp[0],
            concrete_hi=ibp[1],
        )
        events.append(
            (
                "relu",
                _ReluRecord(
                    layer=relu_idx,
                    pre_lo=pre_lo,
                    pre_hi=pre_hi,
                    gates=(active | unstable).astype(float),
                    unstable=unstable,
                ),
            )
        )
        relu_idx += 1
    return _Propagation(state, events, infeasible=False)


def bounds(net: Network, box: Box) -> np.ndarray:
    """Sound concrete enclosure of every logit over the box, shape (labels, 2).

    Exact (zero slack) on ReLU-free networks.
    """
    net = lower_network(net)
    if box.dim != net.input_dim:
        raise InvalidInput(f"box dimension {box.dim} != input dimension {net.input_dim}")
    prop = _propagate(net.layers, box.lo, box.hi, phases={})
    return np.stack([prop.out.concrete_lo, prop.out.concrete_hi], axis=1)


def symbolic_output_bounds(net: Network, box: Box) -> SymbolicBounds:
    """Full symbolic enclosure of the output layer (diagnostics and tests)."""
    net = lower_network(net)
    return _propagate(net.layers, box.lo, box.hi, phases={}).out


def _gap_layers(net: Network, target: int):
    """Replace the final affine layer by one computing logit_target - logit_r."""
    last = net.layers[-1]
    rivals = [r for r in range(net.num_labels) if r != target]
    a = np.stack([last.weights[target] - last.weights[r] for r in rivals])
    b = np.array([last.bias[target] - last.bias[r] for r in rivals])
    return net.layers[:-1] + (AffineLayer(weights=a, bias=b),), rivals


def _leaf_lp_decide(gap_layers, prop: _Propagation, phases: dict,
                    lo: np.ndarray, hi: np.ndarray):
    """Exactly decide a subproblem whose ReLU phases are all settled.

    With every neuron stable or forced, the network restricted to the owned
    region {x in box : forced pre-activations keep their sign} is affine, so
    each rival gap minimizes exactly as a small LP.  Returns ("robust", None),
    ("candidate", xs) with owned minimizers of violated gaps, or
    ("infeasible", None) when the owned region is empty.
    """
    from scipy.optimize import linprog

    relus = prop.relus
    dim = lo.shape[0]
    m = np.eye(dim)
    c = np.zeros(dim)
    a_ub: list = []
    b_ub: list = []
    relu_idx = 0
    for layer in gap_layers:
        if isinstance(layer, AffineLayer):
            c = layer.weights @ c + layer.bias
            m = layer.weights @ m
            continue
        rec = relus[relu_idx]
        relu_idx += 1
        for (r, i), sign in phases.items():
            if r != rec.layer:
                continue
            if sign == 1:  # owned points satisfy z_i >= 0
                a_ub.append(-m[i])
                b_ub.append(c[i])
            else:          # z_i <= 0
                a_ub.append(m[i].copy())
                b_ub.append(-c[i])
        gate = rec.gates  # at a settled leaf: active (natural or forced) = 1
        m = gate[:, None] * m
        c = gate * c
    a_mat = np.array(a_ub) if a_ub else None
    b_vec = np.array(b_ub) if b_ub else None
    var_bounds = list(zip(lo, hi))

    candidates = []
    for row in range(m.shape[0]):
        res = linprog(m[row], A_ub=a_mat, b_ub=b_vec, bounds=var_bounds,
                      method="highs")
        if res.status == 2:  # owned region empty
            return "infeasible", None
        if not res.success:
            return "unknown", None
        gap_min = res.fun + c[row]
        if gap_min > CMP_TOL:
            continue
        candidates.append((gap_min, np.clip(res.x, lo, hi)))
    if not candidates:
        return "robust", None
    return "candidate", candidates


def _split_choice(prop: _Propagation, worst_row: int):
    """Most influential unstable ReLU for the worst gap row, or None.

    Influence is the relaxation-triangle area weighted by an absolute-weight
    backward pass from the gap output.
    """
    events = prop.events
    if not any(kind == "relu" for kind, _ in events):
        return None
    # The final event is the gap affine layer; seed influence from its row.
    assert events and events[-1][0] == "affine"
    v = np.abs(events[-1][1][worst_row])
    best = None
    for kind, payload in reversed(events[:-1]):
        if kind == "affine":
            v = np.abs(payload).T @ v
            continue
        rec = payload
        if np.any(rec.unstable):
            area = np.where(rec.unstable, 0.5 * rec.pre_hi * (-rec.pre_lo), 0.0)
            score = v * area
            for i in np.flatnonzero(rec.unstable):
                cand = (score[i], -rec.layer, -i)
                if best is None or cand > best[0]:
                    best = (cand, (rec.layer, int(i)))
        v = v * rec.gates
    return None if best is None else best[1]


def entails_box(net: Network, box: Box, target: int,
                config: Optional[VerifierConfig] = None) -> EntailmentResult:
    """Decide prediction invariance of `target` over an explicit input box."""
    config = config or VerifierConfig()
    net = lower_network(net)
    if box.dim != net.input_dim:
        raise InvalidInput(f"box dimension {box.dim} != input dimension {net.input_dim}")
    if not (0 <= target < net.num_labels):
        raise InvalidInput(f"target label {target} out of range")

    attack_calls = 0
    splits_used = 0

    def check_point(x: np.ndarray) -> Optional[EntailmentResult]:
        pred = forward(net, x)
        if pred.label != target:
            if not box.contains(x):
                raise AssertionError("counterexample escaped the box")
            return EntailmentResult(
                verdict=COUNTEREXAMPLE,
                point=x,
                predicted=pred.label,
                splits_used=splits_used,
                attack_calls=attack_calls,
            )
        return None

    if box.is_degenerate():
        # A single point: the tie rule decides exactly.
        hit = check_point(box.lo.copy())
        return hit or EntailmentResult(verdict=ROBUST, splits_used=0)

    gap_layers, _rivals = _gap_layers(net, target)

    from .attacks import AttackConfig, fgsm  # deferred: attacks also uses bounds()

    probe_config = AttackConfig()
    rng = np.random.default_rng(config.probe_seed)

    def sample_probe(lo, hi, n):
        """Seeded uniform sampling; returns (flipping point | None, worst point).

        The worst sampled point (smallest logit gap) seeds the gradient
        attack: thin counterexample slivers sit right next to it.
        """
        pts = lo + rng.random((n, lo.shape[0])) * (hi - lo)
        logits = batch_logits(net, pts)
        others = np.delete(logits, target, axis=1)
        gaps = logits[:, target] - others.max(axis=1)
        flips = np.flatnonzero(np.argmax(logits, axis=1) != target)
        flip = pts[flips[0]] if flips.size else None
        return flip, pts[int(np.argmin(gaps))]

    def attack_probe(lo, hi, n):
        nonlocal attack_calls
        attack_calls += 1
        flip, worst_point = sample_probe(lo, hi, n)
        if flip is not None:
            return check_point(flip)
        adv = fgsm(net, worst_point, Box(lo=lo, hi=hi), target, probe_config)
        return check_point(adv) if adv is not None else None

    # Depth-first over (box, phase assumptions) subproblems.
    stack = [(box.lo.copy(), box.hi.copy(), {})]
    nodes = 0
    while stack:
        lo, hi, phases = stack.pop()
        nodes += 1
        prop = _propagate(gap_layers, lo, hi, phases)
        if prop.infeasible:
            continue
        gap_lb = prop.out.concrete_lo
        worst = int(np.argmin(gap_lb))
        if gap_lb[worst] > 0.0:
            continue  # leaf certified
        # Candidate counterexamples: the minimizers of every violated gap's
        # lower enclosure at this node, plus a sampling + gradient probe at
        # the root and periodically thereafter.
        hit = None
        for row in np.flatnonzero(gap_lb <= 0.0):
            corner = np.where(prop.out.lo_coeffs[row] > 0.0, lo, hi)
            hit = check_point(corner)
            if hit:
                return hit
        if config.use_attack_probe and nodes % config.probe_every == 1:
            n = config.probe_samples if nodes == 1 else max(config.probe_samples // 16, 64)
            hit = attack_probe(lo, hi, n)
            if hit:
                return hit
        if splits_used >= config.split_budget:
            return EntailmentResult(
                verdict=RESOURCE_EXHAUSTED,
                splits_used=splits_used,
                attack_calls=attack_calls,
            )
        choice = _split_choice(prop, worst)
        if choice is None:
            # All phases settled: the leaf is affine over the owned polytope
            # and a small LP decides it exactly.
            verdict, candidates = _leaf_lp_decide(gap_layers, prop, phases, lo, hi)
            if verdict in ("robust", "infeasible"):
                continue
            if verdict == "candidate":
                descend = False
                for gap_min, x_star in candidates:
                    hit = check_point(x_star)
                    if hit:
                        return hit
                    if gap_min < -CMP_TOL:
                        descend = True  # LP and forward disagree; refine instead
                if not descend:
                    continue  # only exact ties favouring the target remain
        splits_used += 1
        if choice is not None:
            on = dict(phases)
            on[choice] = 1
            off = dict(phases)
            off[choice] = -1
            stack.append((lo, hi, on))
            stack.append((lo, hi, off))
        else:
            # Numeric disagreement guard: bisect the coordinate with the
            # largest leverage on the violated gap bound.
            width = hi - lo
            leverage = np.abs(prop.out.lo_coeffs[worst]) * width
            coord = int(np.argmax(leverage))
            if leverage[coord] <= 0.0:
                coord = int(np.argmax(width))
            if width[coord] <= 0.0:
                # Point leaf with gap exactly 0 and the tie rule favouring
                # the target: by convention not certified.
                return EntailmentResult(
                    verdict=RESOURCE_EXHAUSTED,
                    splits_used=splits_used,
                    attack_calls=attack_calls,
                )
            mid = 0.5 * (lo[coord] + hi[coord])
            left_hi, right_lo = hi.copy(), lo.copy()
            left_hi[coord] = mid
            right_lo[coord] = mid
            stack.append((lo, left_hi, dict(phases)))
            stack.append((right_lo, hi, dict(phases)))
    return EntailmentResult(
        verdict=ROBUST, splits_used=splits_used, attack_calls=attack_calls
    )


def entails(net: Network, t: TextInput, fixed: Sequence[int], spec: PerturbationSpec,
            vocab: Vocabulary, table: EmbeddingTable, target: int,
            config: Optional[VerifierConfig] = None) -> EntailmentResult:
    """Entailment query over the text-level perturbation set fixing `fixed`."""
    from .text import build_perturbation

    box = build_perturbation(t, fixed, spec, vocab, table)
    return entails_box(net, box, target, config)


def counterexample_diff(t: TextInput, x_prime: np.ndarray, tol: float = DIFF_TOL) -> tuple:
    """Word positions whose embedding block differs from the input's by > tol."""
    x_prime = np.asarray(x_prime, dtype=np.float64)
    if x_prime.shape != t.point.shape:
        raise InvalidInput(
            f"point has shape {x_prime.shape}, expected {t.point.shape}"
        )
    delta = np.abs(x_prime - t.point).reshape(t.length, t.dim)
    return tuple(int(i) for i in np.flatnonzero(delta.max(axis=1) > tol))


class EntailmentOracle:
    """Bound entailment oracle for one (net, text, spec, target) instance.

    Precomputes the lowered network and per-word boxes so repeated queries
    with different fixed sets are cheap.  Counts queries for solver traces.
    """

    def __init__(self, net: Network, t: TextInput, spec: PerturbationSpec,
                 vocab: Vocabulary, table: EmbeddingTable,
                 target: Optional[int] = None,
                 config: Optional[VerifierConfig] = None):
        self.net = lower_network(net)
        self.t = t
        self.spec = spec
        self.vocab = vocab
        self.table = table
        self.config = config or VerifierConfig()
        pred = forward(self.net, t.point)
        self.target = pred.label if target is None else target
        if self.target != pred.label:
            raise InvalidInput(
                f"target {self.target} is not the prediction {pred.label} being explained"
            )
        d = t.dim
        self._free_lo = t.point.copy()
        self._free_hi = t.point.copy()
        for i in range(t.length):
            wb = word_box(t.tokens[i], spec, vocab, table)
            self._free_lo[i * d : (i + 1) * d] = wb.lo
            self._free_hi[i * d : (i + 1) * d] = wb.hi
        self.queries = 0
        self.counterexamples = 0
        self.splits = 0
        self.attack_calls = 0

    @property
    def universe(self) -> range:
        return range(self.t.length)

    def box(self, fixed) -> Box:
        mask = np.zeros(self.t.length, dtype=bool)
        for i in fixed:
            if not (0 <= i < self.t.length):
                raise InvalidInput(f"word index {i} outside 0..{self.t.length - 1}")
            mask[i] = True
        blocks = np.repeat(mask, self.t.dim)
        lo = np.where(blocks, self.t.point, self._free_lo)
        hi = np.where(blocks, self.t.point, self._free_hi)
        return Box(lo=lo, hi=hi)

    def query(self, fixed) -> EntailmentResult:
        res = entails_box(self.net, self.box(fixed), self.target, self.config)
        self.queries += 1
        self.splits += res.splits_used
        self.attack_calls += res.attack_calls
        if res.is_counterexample:
            self.counterexamples += 1
        return res

    def diff(self, x_prime: np.ndarray) -> tuple:
        return counterexample_diff(self.t, x_prime)
