"""Zero-shot cross-dataset node classification for text-attributed graphs."""

from .adapter import DenseAdapter, LowRankAdapter, load_checkpoint, save_checkpoint
from .aggregate import (
    AggregationConfig,
    NormalizedAdjacency,
    aggregate,
    aggregate_unnormalized,
    normalize_adjacency,
)
from .config import ExperimentConfig, load_config
from .embeddings import (
    EmbeddingTable,
    ProviderSpec,
    embed_dataset,
    mock_embed,
    read_cache,
    write_cache,
)
from .graphdata import (
    ClassCatalog,
    DatasetStats,
    TextAttributedGraph,
    compute_stats,
    load_dataset,
    save_dataset,
)
from .loss import LossReport, gradient_check, subgraph_loss
from .optim import AdamState, optimizer_step
from .pipeline import (
    EvalReport,
    argmax_predict,
    evaluate_dataset,
    run_ablation,
    run_inference,
    run_pretrain,
)
from .sampler import (
    SamplerConfig,
    Subgraph,
    attach_prompt,
    build_pretrain_set,
    extract_khop,
    passes_class_filter,
)
from .synth import SynthSpec, generate_synthetic
from .train import pretrain

__version__ = "0.1.0"
