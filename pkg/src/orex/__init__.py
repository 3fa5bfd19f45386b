"""orex: optimal robust explanations for small feed-forward text classifiers.

The engine computes minimum-cost word subsets whose fixing provably keeps a
classifier's prediction invariant under bounded embedding-space perturbation
of all other words, detects decision bias via exclude constraints, and
minimally repairs heuristic explanations.
"""

__version__ = "0.1.0"

from .attacks import AttackConfig, SparseAttack, fgsm, sparse_attack, sparse_attack_batch
from .constraints import (
    BiasVerdict,
    BoxSampler,
    DiscreteSampler,
    coverage,
    coverage_of_batch,
    detect_bias,
    lift_exclude_cost,
    precision,
    repair_explanation,
    word_indices,
)
from .errors import (
    Infeasible,
    InvalidIndex,
    InvalidInput,
    InvalidShape,
    ModelFormatError,
    OrexError,
    ResourceExhausted,
    TooLong,
    UndefinedEstimate,
    UnknownWord,
)
from .explanations import ConstraintSpec, CostFunction, Explanation, SolveTrace
from .hitting import HittingSetFamily, HsSolverConfig, minimum_hitting_set, ore_hs
from .model import (
    AffineLayer,
    Conv1DLayer,
    Network,
    Prediction,
    ReluLayer,
    forward,
    gradient,
    load_model,
    lower_conv,
    lower_network,
    save_model,
)
from .mus import MsaSolverConfig, MusState, enumerate_all_minimal, mus, ore_msa, shrink
from .text import (
    Box,
    EmbeddingTable,
    EpsBall,
    KnnBox,
    TextInput,
    Vocabulary,
    build_perturbation,
    encode,
    knn,
    load_embedding,
    save_embedding,
    word_box,
)
from .verify import (
    EntailmentOracle,
    EntailmentResult,
    VerifierConfig,
    bounds,
    counterexample_diff,
    entails,
    entails_box,
)
