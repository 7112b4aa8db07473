import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from protgram.numcore import (
    Adam,
    ShapeError,
    Tensor,
    add,
    add_row,
    backward,
    binary_cross_entropy,
    check_gradients,
    dropout,
    glorot_uniform,
    l2_normalize_rows,
    layer_norm_rows,
    leaky_relu,
    load_matrix,
    log_softmax,
    matmul,
    mul,
    nll_loss,
    jacobi_eigh,
    pca_fit,
    pca_reduce,
    relu,
    save_matrix,
    scale,
    seeded_rng,
    sigmoid,
    sum_all,
    transpose,
)


def P(rng, *shape, name=""):
    return Tensor(rng.normal(size=shape), requires_grad=True, name=name)


def test_leaky_relu_values():
    np.testing.assert_array_equal(leaky_relu(Tensor([[-1.0, 2.0]]), 0.01).value, [[-0.01, 2.0]])


def test_log_softmax_symmetric():
    np.testing.assert_allclose(log_softmax(Tensor([[0.0, 0.0]])).value, [[-math.log(2)] * 2], atol=1e-15)


def test_sum_matmul_gradient():
    rng = np.random.default_rng(0)
    x, w = P(rng, 4, 3, name="x"), P(rng, 3, 5, name="w")
    errs = check_gradients(lambda: sum_all(matmul(x, w)), [x, w])
    assert max(errs.values()) < 1e-4


def _rand_labels(rng, n, c):
    return rng.integers(0, c, size=n)


@pytest.mark.parametrize("seed", range(3))
def test_every_op_gradient(seed):
    rng = np.random.default_rng(seed)
    n, f = int(rng.integers(2, 7)), int(rng.integers(2, 7))
    a, b = P(rng, n, f, name="a"), P(rng, n, f, name="b")
    w = P(rng, f, 3, name="w")
    row, col, s = P(rng, 1, f, name="row"), P(rng, n, 1, name="col"), P(rng, 1, 1, name="s")
    labels = _rand_labels(rng, n, 3)
    targets = rng.integers(0, 2, size=(n, 1))
    probe = rng.normal(size=(n, f))
    w2 = P(rng, f, 1, name="w2")

    def pr(t):
        return sum_all(mul(t, Tensor(probe[: t.shape[0], : t.shape[1]])))

    cases = {
        "matmul+logsoftmax+nll": (lambda: nll_loss(log_softmax(matmul(a, w)), labels), [a, w]),
        "transpose": (lambda: sum_all(matmul(transpose(a), b)), [a, b]),
        "add/mul": (lambda: pr(mul(add(a, b), a)), [a, b]),
        "add_row": (lambda: pr(add_row(a, row)), [a, row]),
        "scale col": (lambda: pr(scale(a, col)), [a, col]),
        "scale scalar": (lambda: pr(scale(a, s)), [a, s]),
        "leaky": (lambda: pr(leaky_relu(a, 0.01)), [a]),
        "relu": (lambda: pr(relu(a)), [a]),
        "sigmoid+bce": (lambda: binary_cross_entropy(sigmoid(matmul(a, w2)), targets), [a, w2]),
        "l2": (lambda: pr(l2_normalize_rows(a)), [a]),
        "layernorm": (lambda: pr(layer_norm_rows(a)), [a]),
    }
    for name, (fn, params) in cases.items():
        errs = check_gradients(fn, params)
        assert max(errs.values()) < 1e-4, (name, errs)


def test_dropout_gradient_with_fixed_mask():
    rng = np.random.default_rng(3)
    a = P(rng, 5, 4, name="a")

    def loss():
        return sum_all(mul(dropout(a, 0.5, np.random.default_rng(7), True), a))

    assert max(check_gradients(loss, [a]).values()) < 1e-4


def test_dropout_zero_rate_and_eval_are_identity():
    a = Tensor(np.arange(6.0).reshape(2, 3))
    assert dropout(a, 0.0, np.random.default_rng(0)) is a
    assert dropout(a, 0.7, None, training=False) is a


def test_dropout_is_inverted():
    a = Tensor(np.ones((400, 50)))
    out = dropout(a, 0.5, np.random.default_rng(0)).value
    assert set(np.unique(out)) <= {0.0, 2.0}
    assert abs(out.mean() - 1.0) < 0.02


def test_shape_errors_name_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
    with pytest.raises(ShapeError):
        Tensor(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        Tensor([[np.nan]])


def test_backward_needs_scalar():
    with pytest.raises(ShapeError):
        backward(Tensor(np.ones((2, 2)), requires_grad=True))


def test_gradient_accumulates_over_shared_use():
    x = Tensor([[3.0]], requires_grad=True)
    backward(mul(x, x))
    assert x.grad[0, 0] == 6.0


finite = arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
                elements=st.floats(-50, 50, allow_nan=False))


@settings(max_examples=100, deadline=None)
@given(finite)
def test_log_softmax_rows_normalize(x):
    p = np.exp(log_softmax(Tensor(x)).value).sum(axis=1)
    assert np.all(np.abs(p - 1) <= 1e-12)


@settings(max_examples=100, deadline=None)
@given(finite)
def test_l2_rows_unit_or_zero(x):
    x[0] = 0.0
    norms = np.linalg.norm(l2_normalize_rows(Tensor(x)).value, axis=1)
    assert norms[0] == 0.0
    nz = np.linalg.norm(x, axis=1) > 0
    assert np.all(np.abs(norms[nz] - 1) <= 1e-12)


def test_adam_zero_gradient_keeps_param():
    p = Tensor([[1.5, -2.0]], requires_grad=True)
    opt = Adam([p], lr=0.1)
    opt.step()
    np.testing.assert_array_equal(p.value, [[1.5, -2.0]])


def test_adam_first_step_bounded_by_lr():
    p = Tensor([[1.0, 1.0, 1.0]], requires_grad=True)
    opt = Adam([p], lr=0.01)
    p.grad[...] = [[3.0, -0.2, 1e-3]]
    opt.step()
    step = 1.0 - p.value
    assert np.all(np.abs(step) <= 0.01 * (1 + 1e-8))
    assert np.all(np.sign(step) == [1, -1, 1])


def _scalar_adam(w, lr, steps, b1=0.9, b2=0.999, eps=1e-8):
    m = v = 0.0
    for t in range(1, steps + 1):
        g = 2 * w
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        w -= lr * (m / (1 - b1**t)) / (math.sqrt(v / (1 - b2**t)) + eps)
    return w


def test_adam_quadratic_matches_scalar_reference():
    w = Tensor([[1.0]], requires_grad=True)
    opt = Adam([w], lr=0.1)
    for _ in range(100):
        backward(mul(w, w))
        opt.step()
    ref = _scalar_adam(1.0, 0.1, 100)
    assert abs(w.item()) < 0.1
    assert w.item() == pytest.approx(ref, abs=1e-12)


def test_seeded_rng_repeatable_and_labelled():
    a = glorot_uniform(seeded_rng(42, "init"), 4, 3)
    b = glorot_uniform(seeded_rng(42, "init"), 4, 3)
    np.testing.assert_array_equal(a, b)
    x = seeded_rng(42, "init").random(16)
    y = seeded_rng(42, "dropout").random(16)
    assert not np.any(x == y)
    # statistically unrelated streams
    xs, ys = seeded_rng(42, "init").random(5000), seeded_rng(42, "dropout").random(5000)
    assert abs(np.corrcoef(xs, ys)[0, 1]) < 0.05


def test_glorot_limit():
    w = glorot_uniform(np.random.default_rng(0), 30, 20)
    assert np.abs(w).max() <= math.sqrt(6 / 50)


def test_jacobi_matches_numpy(rng):
    for _ in range(10):
        d = int(rng.integers(1, 9))
        m = rng.normal(size=(d, d))
        a = m + m.T
        vals, vecs = jacobi_eigh(a)
        ref = np.linalg.eigvalsh(a)[::-1]
        np.testing.assert_allclose(vals, ref, atol=1e-10)
        np.testing.assert_allclose(a @ vecs, vecs * vals, atol=1e-9)


def test_pca_matches_covariance_eigendecomposition():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(50, 8)) @ rng.normal(size=(8, 8))
    model = pca_fit(x, 8)
    cov = np.cov(x, rowvar=False)
    vals, vecs = np.linalg.eigh(cov)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    for i in range(8):
        c = model.components[i]
        sign = np.sign(c @ vecs[:, i])
        np.testing.assert_allclose(c, sign * vecs[:, i], atol=1e-6)
    np.testing.assert_allclose(model.explained_variance, vals, rtol=1e-9)
    assert np.all(np.diff(model.explained_variance) <= 0)
    np.testing.assert_allclose(model.components @ model.components.T, np.eye(8), atol=1e-10)


def test_pca_line_and_full_rank():
    t = np.linspace(-1, 1, 20)
    line = np.column_stack([t, 2 * t + 1])
    assert pca_fit(line, 1).explained_variance_ratio[0] == pytest.approx(1.0, abs=1e-12)
    rng = np.random.default_rng(1)
    x = rng.normal(size=(100, 5))
    proj, model = pca_reduce(x, 5)
    np.testing.assert_allclose(model.inverse_transform(proj), x, atol=1e-10)


def test_pca_preserves_centered_inner_products():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(40, 6)) * np.array([5, 3, 2, 0.1, 0.05, 0.01])
    proj, model = pca_reduce(x, 3)
    xc = x - x.mean(axis=0)
    gram_err = np.abs(xc @ xc.T - proj @ proj.T).max()
    # the Gram error is bounded by the largest discarded covariance eigenvalue times (n - 1)
    discarded = np.sort(np.linalg.eigvalsh(np.cov(x, rowvar=False)))[:3]
    assert gram_err <= discarded.max() * (x.shape[0] - 1) + 1e-9


def test_pca_rank_limit():
    with pytest.raises(ValueError):
        pca_fit(np.ones((3, 5)), 3)


def test_pca_sign_convention_is_deterministic(rng):
    x = rng.normal(size=(30, 4))
    c = pca_fit(x, 4).components
    assert np.all(c[np.arange(4), np.abs(c).argmax(axis=1)] > 0)


def test_matrix_file_roundtrip(tmp_path, rng):
    m = rng.normal(size=(3, 4))
    save_matrix(tmp_path / "m.txt", m)
    assert open(tmp_path / "m.txt").readline().split() == ["3", "4"]
    np.testing.assert_array_equal(load_matrix(tmp_path / "m.txt"), m)
