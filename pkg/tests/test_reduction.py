import numpy as np
import pytest
from numpy.polynomial import legendre, polynomial

from app.exceptions import InvalidArgumentError
from app.models import Dense, Flatten, MaxPool, Network, PolyConvLayer
from app.services.reduction_service import (
    Poly,
    apply_reductions,
    compute_layer_bounds,
    reduce_coefficients,
    reduce_layer_weights,
    reduce_network,
    reduce_poly,
    write_reduction_report,
)


def test_reduce_square_to_constant():
    """x^2 on [-1, 1] projects to 1/3"""
    reduced = reduce_poly(Poly(np.array([0.0, 0.0, 1.0]), 1.0), 1)
    assert np.allclose(reduced.coefficients, [1.0 / 3.0, 0.0], atol=1e-12)


def test_reduce_cubic_to_line():
    """2x^3 on [-1, 1] projects to 1.2x"""
    reduced = reduce_poly(Poly(np.array([0.0, 0.0, 0.0, 2.0]), 1.0), 1)
    assert np.allclose(reduced.coefficients, [0.0, 1.2], atol=1e-12)


def test_reduce_keeps_interval():
    """Scaling the interval changes the projection"""
    reduced = reduce_poly(Poly(np.array([0.0, 0.0, 1.0]), 3.0), 1)
    assert np.allclose(reduced.coefficients, [3.0, 0.0], atol=1e-12)
    assert reduced.half_width == 3.0


def test_reduce_poly_errors():
    """Targets above the degree, below one and degenerate intervals are invalid"""
    p = Poly(np.array([1.0, 2.0, 3.0]), 1.0)
    with pytest.raises(InvalidArgumentError):
        reduce_poly(p, 3)
    with pytest.raises(InvalidArgumentError):
        reduce_poly(p, 0)
    with pytest.raises(InvalidArgumentError):
        reduce_poly(Poly(p.coefficients, 0.0), 1)


def _gauss_oracle(coefficients, target, half_width):
    """Weighted least squares at Gauss-Legendre nodes, exact for polynomials of this degree."""
    nodes, weights = legendre.leggauss(len(coefficients) + 2)
    x = nodes * half_width
    root = np.sqrt(weights)
    vander = polynomial.polyvander(nodes, target) * root[:, np.newaxis]
    scaled, *_ = np.linalg.lstsq(vander, polynomial.polyval(x, coefficients) * root, rcond=None)
    return scaled / half_width ** np.arange(target + 1)


def test_reduce_matches_quadrature_oracle():
    """Random polynomials agree with a quadrature least-squares fit"""
    rng = np.random.default_rng(0)
    for _ in range(200):
        degree = int(rng.integers(2, 8))
        target = int(rng.integers(1, degree))
        half_width = float(rng.uniform(0.5, 3.0))
        coefficients = rng.normal(size=degree + 1)
        ours = reduce_poly(Poly(coefficients, half_width), target)
        expected = _gauss_oracle(coefficients, target, half_width)
        grid = np.linspace(-half_width, half_width, 17)
        scale = max(1.0, np.max(np.abs(polynomial.polyval(grid, coefficients))))
        assert np.allclose(ours(grid), polynomial.polyval(grid, expected), atol=1e-9 * scale)


def test_reduce_is_idempotent_and_nested():
    """Projecting twice changes nothing; projecting through a middle degree is the same"""
    rng = np.random.default_rng(1)
    p = Poly(rng.normal(size=7), 1.7)
    four = reduce_poly(p, 4)
    assert np.allclose(reduce_poly(four, 4).coefficients, four.coefficients)
    assert np.allclose(reduce_poly(four, 2).coefficients, reduce_poly(p, 2).coefficients, atol=1e-10)


def _l2_error(p, q, half_width):
    nodes, weights = legendre.leggauss(16)
    x = nodes * half_width
    return float(np.sum(weights * (polynomial.polyval(x, p) - polynomial.polyval(x, q)) ** 2))


def test_reduce_beats_random_candidates():
    """No nearby polynomial of the target degree has a smaller mean-square error"""
    rng = np.random.default_rng(2)
    p = rng.normal(size=6)
    best = reduce_poly(Poly(p, 2.0), 2).coefficients
    floor = _l2_error(p, best, 2.0)
    for _ in range(500):
        candidate = best + rng.normal(scale=0.05, size=3)
        assert _l2_error(p, candidate, 2.0) >= floor


def test_reduce_coefficients_vectorised():
    """A stack of polynomials reduces row by row"""
    rng = np.random.default_rng(3)
    stack = rng.normal(size=(4, 3, 6))
    reduced = reduce_coefficients(stack, 2, 1.5)
    assert reduced.shape == (4, 3, 3)
    assert np.allclose(reduced[2, 1], reduce_poly(Poly(stack[2, 1], 1.5), 2).coefficients)


def _square_layer(in_channels=1, kernel=1, bias=0.0):
    weights = np.zeros((2, 1, in_channels, kernel))
    weights[1] = 1.0
    return PolyConvLayer(in_channels, 1, kernel, degree=2, rank=1, activation="identity",
                         weights=weights, bias=np.array([bias]))


def test_reduce_layer_moves_constant_into_bias():
    """A single x^2 tap becomes weight 0 and bias + 1/3"""
    reduced = reduce_layer_weights(_square_layer(bias=0.5), 1, 1.0)
    assert reduced.degree == 1
    assert np.allclose(reduced.weights, 0.0, atol=1e-12)
    assert reduced.bias[0] == pytest.approx(0.5 + 1.0 / 3.0)


def test_reduce_layer_spreads_bias_over_taps():
    """Every input tap contributes its own projected constant"""
    reduced = reduce_layer_weights(_square_layer(in_channels=2, kernel=3, bias=0.6), 1, 1.0)
    assert reduced.bias[0] == pytest.approx(0.6 + 6.0 / 3.0)


def test_reduce_layer_same_degree_is_a_copy():
    """Reducing to the current degree returns an equal, independent layer"""
    layer = _square_layer(bias=0.2)
    same = reduce_layer_weights(layer, 2, 1.0)
    assert same is not layer
    assert np.array_equal(same.weights, layer.weights)
    same.weights[1] = 5.0
    assert layer.weights[1, 0, 0, 0] == 1.0


def test_reduce_layer_target_out_of_range():
    """Targets must lie in [1, D]"""
    with pytest.raises(InvalidArgumentError):
        reduce_layer_weights(_square_layer(), 3, 1.0)
    with pytest.raises(InvalidArgumentError):
        reduce_layer_weights(_square_layer(), 0, 1.0)


def _two_layer_network(rng, degree=2, planted=None):
    """conv 3x3 -> pool -> conv 2x2 -> flatten -> softmax over 2 classes on (1, 8, 8)."""
    first = PolyConvLayer(1, 2, 3, degree=degree, rank=2, activation="relu", rng=rng)
    second = PolyConvLayer(2, 2, 2, degree=degree, rank=2, activation="identity", rng=rng)
    if planted is not None:
        for layer in (first, second):
            layer.weights[:planted] = rng.normal(scale=0.5, size=layer.weights[:planted].shape)
            layer.weights[planted:] = 0.0
    layers = [first, MaxPool((2, 2)), second, Flatten(), Dense(8, 2, activation="softmax", rng=rng)]
    return Network(layers, 2, (1, 8, 8))


def test_layer_bounds():
    """The first bound is the largest input magnitude, later ones come from a manual pass"""
    rng = np.random.default_rng(4)
    model = _two_layer_network(rng)
    samples = rng.uniform(-2.0, 2.0, size=(10, 1, 8, 8))
    bounds = compute_layer_bounds(model, samples, batch_size=3)
    assert bounds[0] == pytest.approx(np.max(np.abs(samples)))
    hidden = model.layers[1].forward(model.layers[0].forward(samples))
    assert bounds[1] == pytest.approx(max(np.max(np.abs(hidden)), 1e-6))


def test_layer_bounds_empty_set():
    """Bounds need at least one sample"""
    model = _two_layer_network(np.random.default_rng(5))
    with pytest.raises(InvalidArgumentError):
        compute_layer_bounds(model, np.zeros((0, 1, 8, 8)))


def test_apply_reductions_leaves_original():
    """Reductions apply to a copy"""
    model = _two_layer_network(np.random.default_rng(6), degree=3)
    reduced = apply_reductions(model, [2, 1], [1.0, 1.0])
    assert reduced.degrees == [1, 2]
    assert model.degrees == [3, 3]


def test_degree_one_network_has_nothing_to_reduce():
    """All layers at degree one give an empty plan"""
    rng = np.random.default_rng(7)
    model = _two_layer_network(rng, degree=1)
    samples = rng.uniform(-1.0, 1.0, size=(12, 1, 8, 8))
    labels = np.arange(12) % 2
    reduced, plan = reduce_network(model, samples, labels)
    assert plan.history == []
    assert reduced.degrees == [1, 1]
    assert plan.final_score == plan.baseline_score


def _drift_evaluator(reference, samples):
    expected = reference.predict_proba(samples)

    def evaluate(model, batch, labels):
        return -float(np.max(np.abs(model.predict_proba(batch) - expected)))

    return evaluate


def test_planted_low_degree_network_reduces_to_planted_degree():
    """Zero high-power weights are dropped without changing the network function"""
    rng = np.random.default_rng(8)
    model = _two_layer_network(rng, degree=5, planted=2)
    samples = rng.uniform(-1.0, 1.0, size=(20, 1, 8, 8))
    labels = np.arange(20) % 2
    reduced, plan = reduce_network(model, samples, labels,
                                   evaluate=_drift_evaluator(model, samples), threshold=-1e-9)
    assert reduced.degrees == [2, 2]
    assert len(plan.history) == 6
    assert np.allclose(reduced.predict_proba(samples), model.predict_proba(samples), atol=1e-9)


def test_zero_threshold_reduces_everything():
    """Accuracy never drops below zero, so every layer reaches degree one"""
    rng = np.random.default_rng(9)
    model = _two_layer_network(rng, degree=3)
    samples = rng.uniform(-1.0, 1.0, size=(16, 1, 8, 8))
    labels = np.arange(16) % 2
    reduced, plan = reduce_network(model, samples, labels, threshold=0.0)
    assert reduced.degrees == [1, 1]
    assert plan.final_degrees == [1, 1]
    assert all(step.score >= plan.threshold for step in plan.history)
    assert plan.reduced_parameters < plan.original_parameters
    assert plan.parameter_ratio > 1.0


def test_reduction_history_is_monotone():
    """Each accepted step lowers one layer by exactly one degree"""
    rng = np.random.default_rng(10)
    model = _two_layer_network(rng, degree=4)
    samples = rng.uniform(-1.0, 1.0, size=(16, 1, 8, 8))
    labels = np.arange(16) % 2
    _, plan = reduce_network(model, samples, labels, tolerance=0.25, threads=2)
    current = list(plan.original_degrees)
    for step in plan.history:
        assert step.new_degree == current[step.layer] - 1
        assert step.score >= plan.threshold
        current[step.layer] = step.new_degree
    assert current == plan.final_degrees
    assert plan.threshold == pytest.approx(plan.baseline_score - 0.25)


def test_ties_go_to_lowest_layer():
    """Equal scores pick the earliest layer"""
    rng = np.random.default_rng(11)
    first = PolyConvLayer(1, 2, 3, degree=3, rank=2, activation="relu", rng=rng)
    second = PolyConvLayer(2, 2, 2, degree=2, rank=2, activation="identity", rng=rng)
    model = Network([first, MaxPool((2, 2)), second, Flatten(), Dense(8, 2, activation="softmax", rng=rng)],
                    2, (1, 8, 8))
    samples = rng.uniform(-1.0, 1.0, size=(4, 1, 8, 8))
    _, plan = reduce_network(model, samples, np.zeros(4, dtype=int), evaluate=lambda *_: 1.0)
    assert [step.layer for step in plan.history] == [0, 0, 1]
    assert plan.history[0].candidate_scores == [1.0, 1.0]
    assert plan.history[-1].candidate_scores == [0.0, 1.0]


def test_high_threshold_stops_immediately():
    """An unreachable threshold commits nothing"""
    rng = np.random.default_rng(12)
    model = _two_layer_network(rng, degree=2)
    samples = rng.uniform(-1.0, 1.0, size=(8, 1, 8, 8))
    _, plan = reduce_network(model, samples, np.arange(8) % 2, threshold=1.5)
    assert plan.history == []
    assert plan.reductions == [0, 0]


def test_reduction_report(tmp_path):
    """One line per step and a closing degree summary"""
    rng = np.random.default_rng(13)
    model = _two_layer_network(rng, degree=2)
    samples = rng.uniform(-1.0, 1.0, size=(8, 1, 8, 8))
    _, plan = reduce_network(model, samples, np.arange(8) % 2, threshold=0.0)
    lines = write_reduction_report(plan, tmp_path / "reduction.txt").read_text().splitlines()
    assert len(lines) == len(plan.history) + 1
    assert lines[0].startswith("1, ")
    assert lines[-1].startswith("degrees: 1 1; parameter ratio: ")
