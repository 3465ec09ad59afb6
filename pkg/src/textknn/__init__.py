"""Task-specific text embeddings with kNN classification and label auditing."""

from .corpus import (
    DEV,
    TEST,
    TRAIN,
    Document,
    LabeledCorpus,
    LabelVocab,
    find_exact_duplicates,
    load_corpus,
    save_corpus,
    split_dev,
)
from .encoder import (
    EncoderConfig,
    EncoderParams,
    PrecomputedEncoder,
    TrainableEncoder,
    init_params,
    load_checkpoint,
    load_precomputed,
    save_checkpoint,
    tokenize,
)
from .errors import EngineError
from .evaluator import (
    EvalReport,
    HeldoutReport,
    evaluate,
    run_heldout_class,
    run_incremental_data,
    run_subclass_transfer,
    timing_harness,
)
from .explainer import (
    AnomalyFlag,
    ExplanationRecord,
    explain,
    find_near_duplicates,
    flag_inconsistencies,
    project_2d,
)
from .index import (
    EmbeddingIndex,
    Neighbor,
    Prediction,
    build_index,
    load_index,
    normalize,
    save_index,
    select_k,
)
from .sampler import PairSample, sample_epoch
from .service import ClassifierService, ServeConfig, serve
from .trainer import (
    TrainConfig,
    TrainReport,
    cosine_similarity,
    pair_loss,
    spearman,
    train,
)

__version__ = "0.1.0"
