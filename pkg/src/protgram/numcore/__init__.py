"""Dense differentiable matrix core: autodiff ops, Adam, PCA, seeded RNG, matrix files."""

from .gradcheck import check_gradients, numerical_gradient, relative_error
from .matrix_io import load_matrix, save_matrix
from .optim import Adam
from .pca import PCAModel, jacobi_eigh, pca_fit, pca_reduce
from .rng import glorot_uniform, seeded_rng
from .tensor import (
    ShapeError,
    Tensor,
    add,
    add_row,
    backward,
    binary_cross_entropy,
    constant,
    dropout,
    l2_normalize_rows,
    layer_norm_rows,
    leaky_relu,
    log_softmax,
    matmul,
    mul,
    nll_loss,
    relu,
    scale,
    sigmoid,
    sum_all,
    transpose,
)
