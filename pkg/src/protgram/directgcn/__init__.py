"""DirectGCN: directed graph convolution over n-gram transition graphs."""

from .checkpoint import load_checkpoint, save_checkpoint
from .labels import louvain_labels, next_node_labels
from .louvain import louvain, modularity
from .model import GATE_MODES, LayerParams, ModelParams, init_layer, init_model, layer_forward, model_forward
from .propagation import (
    PropagationSet,
    build_propagation_set,
    propagation_matrix,
    row_normalize,
    undirected_propagation,
)
from .training import (
    EmbeddingTable,
    LevelResult,
    TrainConfig,
    TrainingError,
    extract_embeddings,
    fit,
    hierarchical_init,
    task_labels,
    train_hierarchy,
    train_level,
)
