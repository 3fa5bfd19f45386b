"""Pydantic request/response models for the HTTP service.

Requests are self-contained: they inline the model and embedding documents
in exactly the JSON schemas the engine reads from disk.
"""

from __future__ import annotations

from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field

WordOrIndex = Union[int, str]


class EngineRequest(BaseModel):
    model: dict = Field(description="model document (same schema as the model file)")
    embeddings: dict = Field(description="embedding document (same schema as the file)")
    text: Union[str, List[str]]
    eps: Optional[float] = None
    knn: Optional[int] = None
    metric: Literal["euclidean", "cosine"] = "euclidean"
    cost: Optional[Dict[str, float]] = None
    seed: int = 0
    deterministic: bool = True
    stats: bool = False
    split_budget: int = 100_000
    max_iterations: int = 10_000


class ExplainRequest(EngineRequest):
    solver: Literal["hs", "msa", "both"] = "both"
    include: List[WordOrIndex] = Field(default_factory=list)
    exclude: List[WordOrIndex] = Field(default_factory=list)
    use_attacks: bool = True
    use_shrink: bool = True


class EnumerateRequest(EngineRequest):
    pass


class VerifyRequest(EngineRequest):
    fixed: List[WordOrIndex] = Field(default_factory=list)


class BiasRequest(EngineRequest):
    protected: List[WordOrIndex]
    solver: Literal["hs", "msa"] = "hs"


class RepairRequest(EngineRequest):
    seed_explanation: List[WordOrIndex]
    solver: Literal["hs", "msa"] = "hs"


class AttackRequest(EngineRequest):
    fixed: List[WordOrIndex] = Field(default_factory=list)


class KnnRequest(BaseModel):
    embeddings: dict
    words: List[str]
    eps: Optional[float] = None
    knn: Optional[int] = None
    metric: Literal["euclidean", "cosine"] = "euclidean"


class LabelInfo(BaseModel):
    index: int
    name: str


class ExplanationInfo(BaseModel):
    indices: List[int]
    words: List[str]
    cost: float
    stats: Optional[dict] = None


class ExplainResponse(BaseModel):
    status: str
    detail: Optional[str] = None
    tokens: Optional[List[str]] = None
    label: Optional[LabelInfo] = None
    solver: Optional[str] = None
    cost: Optional[float] = None
    indices: Optional[List[int]] = None
    words: Optional[List[str]] = None
    rendered: Optional[str] = None
    agreement: Optional[bool] = None
    solvers: Optional[Dict[str, ExplanationInfo]] = None
    stats: Optional[dict] = None


class EnumerateResponse(BaseModel):
    status: str
    detail: Optional[str] = None
    tokens: Optional[List[str]] = None
    optimum: Optional[float] = None
    count: Optional[int] = None
    explanations: Optional[List[dict]] = None


class CounterexampleInfo(BaseModel):
    point: List[float]
    predicted: LabelInfo
    changed_words: List[int]


class VerifyResponse(BaseModel):
    status: str
    detail: Optional[str] = None
    tokens: Optional[List[str]] = None
    fixed: Optional[List[int]] = None
    verdict: Optional[str] = None
    target: Optional[LabelInfo] = None
    counterexample: Optional[CounterexampleInfo] = None
    stats: Optional[dict] = None


class BiasResponse(BaseModel):
    status: str
    detail: Optional[str] = None
    tokens: Optional[List[str]] = None
    protected: Optional[List[int]] = None
    biased: Optional[bool] = None
    witness_point: Optional[List[float]] = None
    witness_label: Optional[LabelInfo] = None
    witness_explanation: Optional[ExplanationInfo] = None


class RepairResponse(BaseModel):
    status: str
    detail: Optional[str] = None
    tokens: Optional[List[str]] = None
    seed: Optional[List[int]] = None
    seed_words: Optional[List[str]] = None
    extension: Optional[List[int]] = None
    extension_words: Optional[List[str]] = None
    result: Optional[ExplanationInfo] = None
    rendered: Optional[str] = None


class AttackResponse(BaseModel):
    status: str
    detail: Optional[str] = None
    tokens: Optional[List[str]] = None
    fixed: Optional[List[int]] = None
    found: Optional[bool] = None
    support: Optional[List[int]] = None
    support_words: Optional[List[str]] = None
    point: Optional[List[float]] = None
    predicted: Optional[LabelInfo] = None


class WordBoxInfo(BaseModel):
    box: dict
    neighbors: Optional[List[str]] = None


class KnnResponse(BaseModel):
    status: str
    detail: Optional[str] = None
    words: Optional[Dict[str, WordBoxInfo]] = None


class HealthResponse(BaseModel):
    status: str
    version: str
