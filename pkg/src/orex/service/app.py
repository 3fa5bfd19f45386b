"""FastAPI application wrapping the explanation engine.

Every endpoint is stateless: requests carry the model and embedding
documents inline, in the exact schemas of the on-disk files.  Domain
outcomes (infeasible, resource exhausted) come back as statuses in a 200
response; malformed inputs are 400s.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..errors import (
    Infeasible,
    InvalidInput,
    ModelFormatError,
    OrexError,
    ResourceExhausted,
    TooLong,
    UndefinedEstimate,
    UnknownWord,
)
from ..model import network_from_obj
from ..runner import (
    cost_from_map,
    encode_text,
    make_spec,
    op_attack,
    op_bias,
    op_enumerate,
    op_explain,
    op_knn,
    op_repair,
    op_verify,
)
from ..text import embedding_from_obj
from . import schemas


def _load(req: schemas.EngineRequest):
    net = network_from_obj(req.model)
    vocab, table = embedding_from_obj(req.embeddings)
    spec = make_spec(req.eps, req.knn, req.metric)
    t = encode_text(req.text, net, vocab, table)
    cost = cost_from_map(t.tokens, req.cost)
    options = {
        "seed": req.seed,
        "deterministic": req.deterministic,
        "stats": req.stats,
        "split_budget": req.split_budget,
        "max_iterations": req.max_iterations,
        "use_attacks": getattr(req, "use_attacks", True),
        "use_shrink": getattr(req, "use_shrink", True),
    }
    return net, vocab, table, t, spec, cost, options


def _guarded(fn) -> dict:
    try:
        return fn()
    except Infeasible as exc:
        return {"status": "infeasible", "detail": str(exc)}
    except ResourceExhausted as exc:
        return {"status": "resource_exhausted", "detail": str(exc)}
    except (ModelFormatError, UnknownWord, TooLong, InvalidInput, UndefinedEstimate) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except OrexError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def create_app() -> FastAPI:
    app = FastAPI(
        title="orex",
        description="Optimal robust explanations for small text classifiers",
        version=__version__,
    )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/explain", response_model=schemas.ExplainResponse,
              response_model_exclude_none=True)
    def explain(req: schemas.ExplainRequest):
        def run():
            net, vocab, table, t, spec, cost, options = _load(req)
            return op_explain(net, vocab, table, t, spec, cost, req.solver,
                              include=req.include, exclude=req.exclude, options=options)
        return _guarded(run)

    @app.post("/enumerate", response_model=schemas.EnumerateResponse,
              response_model_exclude_none=True)
    def enumerate_(req: schemas.EnumerateRequest):
        def run():
            net, vocab, table, t, spec, cost, options = _load(req)
            return op_enumerate(net, vocab, table, t, spec, cost, options=options)
        return _guarded(run)

    @app.post("/verify", response_model=schemas.VerifyResponse,
              response_model_exclude_none=True)
    def verify(req: schemas.VerifyRequest):
        def run():
            net, vocab, table, t, spec, cost, options = _load(req)
            return op_verify(net, vocab, table, t, spec, req.fixed, options=options)
        return _guarded(run)

    @app.post("/bias", response_model=schemas.BiasResponse,
              response_model_exclude_none=True)
    def bias(req: schemas.BiasRequest):
        def run():
            net, vocab, table, t, spec, cost, options = _load(req)
            return op_bias(net, vocab, table, t, spec, cost, req.protected,
                           solver=req.solver, options=options)
        return _guarded(run)

    @app.post("/repair", response_model=schemas.RepairResponse,
              response_model_exclude_none=True)
    def repair(req: schemas.RepairRequest):
        def run():
            net, vocab, table, t, spec, cost, options = _load(req)
            return op_repair(net, vocab, table, t, spec, cost, req.seed_explanation,
                             solver=req.solver, options=options)
        return _guarded(run)

    @app.post("/attack", response_model=schemas.AttackResponse,
              response_model_exclude_none=True)
    def attack(req: schemas.AttackRequest):
        def run():
            net, vocab, table, t, spec, cost, options = _load(req)
            return op_attack(net, vocab, table, t, spec, req.fixed, options=options)
        return _guarded(run)

    @app.post("/knn", response_model=schemas.KnnResponse,
              response_model_exclude_none=True)
    def knn(req: schemas.KnnRequest):
        def run():
            vocab, table = embedding_from_obj(req.embeddings)
            spec = make_spec(req.eps, req.knn, req.metric)
            return op_knn(vocab, table, req.words, spec)
        return _guarded(run)

    return app
