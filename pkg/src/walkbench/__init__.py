"""walkbench: biased random walks as corpus generators for node embeddings,
benchmarked on link prediction."""

from .evaluation import (
    ScoreVector,
    aggregate_medians,
    auc_pr,
    auc_roc,
    correlation_matrix,
    cosine,
    minmax_normalize,
    pearson,
    score_edges,
)
from .graph import (
    Graph,
    LabeledEdgeSet,
    RawEdges,
    build_graph,
    largest_component,
    load_edge_list,
    read_edge_file,
    split_labeled,
)
from .pipeline import ExperimentConfig, run_pipeline
from .sgns import (
    EmbeddingMatrix,
    TrainConfig,
    Vocab,
    build_vocab,
    noise_sample,
    positive_pairs,
    sgns_pair_update,
    train_sgns,
)
from .walks import (
    WalkConfig,
    WalkCorpus,
    WalkState,
    default_walks,
    dg_weights,
    generate_corpus,
    generate_walk,
    id_weights,
    n2v_weights,
    parse_walk,
    rw_weights,
    sample_step,
    tsaw_weights,
)

__version__ = "0.1.0"
