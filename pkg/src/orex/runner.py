"""Operation layer shared by the CLI and the HTTP service.

Each op_* function takes loaded engine objects plus plain options and
returns a JSON-ready dict.  Domain failures propagate as engine exceptions;
the callers translate them into exit codes or response statuses.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .attacks import AttackConfig, sparse_attack
from .constraints import (
    ConstraintSpec,
    detect_bias,
    repair_explanation,
    word_indices,
)
from .errors import InvalidInput
from .explanations import CostFunction, Explanation
from .hitting import HsSolverConfig, ore_hs
from .model import Network, forward
from .mus import MsaSolverConfig, enumerate_all_minimal, ore_msa
from .text import (
    COSINE,
    EUCLIDEAN,
    EmbeddingTable,
    EpsBall,
    KnnBox,
    PerturbationSpec,
    TextInput,
    Vocabulary,
    encode,
    knn,
    word_box,
)
from .verify import EntailmentOracle, VerifierConfig

COST_MISMATCH_TOL = 1e-9


def make_spec(eps: Optional[float], k: Optional[int], metric: str = EUCLIDEAN) -> PerturbationSpec:
    if (eps is None) == (k is None):
        raise InvalidInput("exactly one of eps / k must be given")
    return EpsBall(eps=eps) if eps is not None else KnnBox(k=k, metric=metric)


def encode_text(text, net: Network, vocab: Vocabulary, table: EmbeddingTable) -> TextInput:
    words = text.split() if isinstance(text, str) else list(text)
    if table.dim != net.embedding_dim:
        raise InvalidInput(
            f"embedding dim {table.dim} does not match the model's {net.embedding_dim}"
        )
    return encode(words, net.input_words, vocab, table)


def cost_from_map(tokens: Sequence[str], mapping: Optional[dict],
                  default: float = 1.0) -> CostFunction:
    if not mapping:
        return CostFunction.uniform(len(tokens), default)
    return CostFunction(
        costs=tuple(float(mapping.get(tok, default)) for tok in tokens)
    )


def render(tokens: Sequence[str], indices) -> str:
    marked = set(indices)
    return " ".join(f"[{tok}]" if i in marked else tok for i, tok in enumerate(tokens))


def _label_obj(net: Network, index: int) -> dict:
    return {"index": index, "name": net.labels[index]}


def _explanation_obj(e: Explanation, t: TextInput, with_stats: bool) -> dict:
    out = {
        "indices": list(e.indices),
        "words": e.words(t.tokens),
        "cost": e.cost,
    }
    if with_stats:
        out["stats"] = asdict(e.trace)
    return out


def _configs(options: dict):
    verifier = VerifierConfig(
        split_budget=int(options.get("split_budget", 100_000)),
        deterministic=bool(options.get("deterministic", True)),
    )
    attack = AttackConfig(
        n=8, budget=8, fgsm_iters=6, seed=int(options.get("seed", 0))
    )
    hs = HsSolverConfig(
        use_attacks=bool(options.get("use_attacks", True)),
        max_iterations=int(options.get("max_iterations", 10_000)),
        attack_config=attack,
    )
    msa = MsaSolverConfig(use_shrink=bool(options.get("use_shrink", True)))
    return verifier, hs, msa


def op_explain(net, vocab, table, t: TextInput, spec: PerturbationSpec,
               cost: CostFunction, solver: str = "both",
               include=(), exclude=(), options: Optional[dict] = None) -> dict:
    options = options or {}
    verifier, hs_cfg, msa_cfg = _configs(options)
    constraints = ConstraintSpec(
        include=word_indices(t.tokens, include),
        exclude=word_indices(t.tokens, exclude),
    )
    pred = forward(net, t.point)
    results = {}
    if solver in ("hs", "both"):
        results["hs"] = ore_hs(net, t, spec, vocab, table, cost, constraints,
                               verifier_config=verifier, solver_config=hs_cfg)
    if solver in ("msa", "both"):
        results["msa"] = ore_msa(net, t, spec, vocab, table, cost, constraints,
                                 verifier_config=verifier, solver_config=msa_cfg)
    if solver not in ("hs", "msa", "both"):
        raise InvalidInput(f"solver must be hs, msa or both, got {solver!r}")
    primary = results.get("hs") or results["msa"]
    with_stats = bool(options.get("stats", False))
    out = {
        "status": "ok",
        "tokens": list(t.tokens),
        "label": _label_obj(net, pred.label),
        "solver": solver,
        "cost": primary.cost,
        "indices": list(primary.indices),
        "words": primary.words(t.tokens),
        "rendered": render(t.tokens, primary.indices),
    }
    if solver == "both":
        out["agreement"] = abs(results["hs"].cost - results["msa"].cost) <= COST_MISMATCH_TOL
        out["solvers"] = {
            name: _explanation_obj(e, t, with_stats) for name, e in results.items()
        }
    elif with_stats:
        out["stats"] = {solver: asdict(primary.trace)}
    return out


def op_enumerate(net, vocab, table, t, spec, cost,
                 options: Optional[dict] = None) -> dict:
    options = options or {}
    verifier, _, _ = _configs(options)
    all_minimal = enumerate_all_minimal(net, t, spec, vocab, table, cost,
                                        verifier_config=verifier)
    return {
        "status": "ok",
        "tokens": list(t.tokens),
        "optimum": all_minimal[0].cost if all_minimal else 0.0,
        "count": len(all_minimal),
        "explanations": [
            {"indices": list(e.indices), "words": e.words(t.tokens)} for e in all_minimal
        ],
    }


def op_verify(net, vocab, table, t, spec, fixed_items,
              options: Optional[dict] = None) -> dict:
    options = options or {}
    verifier, _, _ = _configs(options)
    fixed = sorted(word_indices(t.tokens, fixed_items))
    oracle = EntailmentOracle(net, t, spec, vocab, table, config=verifier)
    res = oracle.query(fixed)
    out = {
        "status": "resource_exhausted" if res.is_exhausted else "ok",
        "tokens": list(t.tokens),
        "fixed": fixed,
        "verdict": res.verdict,
        "target": _label_obj(net, oracle.target),
    }
    if res.is_counterexample:
        out["counterexample"] = {
            "point": [float(v) for v in res.point],
            "predicted": _label_obj(net, res.predicted),
            "changed_words": list(oracle.diff(res.point)),
        }
    if options.get("stats"):
        out["stats"] = {"splits": res.splits_used, "attack_calls": res.attack_calls}
    return out


def op_bias(net, vocab, table, t, spec, cost, protected_items, solver: str = "hs",
            options: Optional[dict] = None) -> dict:
    options = options or {}
    verifier, _, _ = _configs(options)
    protected = word_indices(t.tokens, protected_items)
    verdict = detect_bias(net, t, protected, spec, vocab, table, cost,
                          solver="hs" if solver == "both" else solver,
                          verifier_config=verifier)
    out = {
        "status": "ok",
        "tokens": list(t.tokens),
        "protected": sorted(protected),
        "biased": verdict.biased,
    }
    if verdict.biased:
        out["witness_point"] = [float(v) for v in verdict.witness_point]
        out["witness_label"] = _label_obj(net, verdict.witness_label)
    else:
        out["witness_explanation"] = _explanation_obj(
            verdict.witness_explanation, t, bool(options.get("stats"))
        )
    return out


def op_repair(net, vocab, table, t, spec, cost, seed_items, solver: str = "hs",
              options: Optional[dict] = None) -> dict:
    options = options or {}
    verifier, _, _ = _configs(options)
    seed = word_indices(t.tokens, seed_items)
    result = repair_explanation(net, t, seed, spec, vocab, table, cost,
                                solver="hs" if solver == "both" else solver,
                                verifier_config=verifier)
    extension = sorted(set(result.indices) - seed)
    return {
        "status": "ok",
        "tokens": list(t.tokens),
        "seed": sorted(seed),
        "seed_words": [t.tokens[i] for i in sorted(seed)],
        "extension": extension,
        "extension_words": [t.tokens[i] for i in extension],
        "result": _explanation_obj(result, t, bool(options.get("stats"))),
        "rendered": render(t.tokens, result.indices),
    }


def op_attack(net, vocab, table, t, spec, fixed_items=(),
              options: Optional[dict] = None) -> dict:
    options = options or {}
    fixed = word_indices(t.tokens, fixed_items)
    config = AttackConfig(seed=int(options.get("seed", 0)))
    found = sparse_attack(net, t, fixed, spec, vocab, table, config)
    out = {
        "status": "ok",
        "tokens": list(t.tokens),
        "fixed": sorted(fixed),
        "found": found is not None,
    }
    if found is not None:
        out["support"] = list(found.support)
        out["support_words"] = [t.tokens[i] for i in found.support]
        out["point"] = [float(v) for v in found.point]
        out["predicted"] = _label_obj(net, found.predicted)
    return out


def op_knn(vocab, table, words, spec: PerturbationSpec) -> dict:
    entries = {}
    for w in words:
        box = word_box(w, spec, vocab, table)
        entry = {
            "box": {"lo": [float(v) for v in box.lo], "hi": [float(v) for v in box.hi]}
        }
        if isinstance(spec, KnnBox):
            entry["neighbors"] = knn(w, spec.k, spec.metric, vocab, table)
        entries[w] = entry
    return {"status": "ok", "words": entries}
