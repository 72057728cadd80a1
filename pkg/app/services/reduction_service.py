"""Layer-wise polynomial degree reduction of trained networks.

Each polynomial layer is viewed as ``N_l * N_{l-1} * K_l`` scalar polynomials
``P(X) = sum_d w_d X^d + b / (N_{l-1} K_l)``. Reducing a layer replaces every
one of them by its least-squares (uniform measure) projection onto degree
``D~`` over ``[-A_l, A_l]``, where ``A_l`` bounds the layer's inputs on the
training set.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import legendre

from ..config import settings
from ..exceptions import InvalidArgumentError
from ..models.layers import PolyConvLayer
from ..models.network import Network
from ..schemas.network import ReductionPlan, ReductionStep

logger = logging.getLogger(__name__)

Evaluator = Callable[[Network, np.ndarray, np.ndarray], float]


@dataclass
class Poly:
    coefficients: np.ndarray  # c_0 .. c_D, lowest power first
    half_width: float

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coefficients)


@lru_cache(maxsize=None)
def _unit_projection(degree: int, target: int) -> np.ndarray:
    """Monomial-basis matrix of the L2 projection from degree ``degree`` onto ``target`` on [-1, 1]."""
    matrix = np.zeros((target + 1, degree + 1))
    for j in range(degree + 1):
        monomial = np.zeros(j + 1)
        monomial[j] = 1.0
        series = legendre.poly2leg(monomial)[:target + 1]
        back = legendre.leg2poly(series)
        matrix[:len(back), j] = back
    matrix[np.abs(matrix) < 1e-14] = 0.0
    matrix.setflags(write=False)
    return matrix


def projection_matrix(degree: int, target: int, half_width: float) -> np.ndarray:
    """Projection onto degree ``target`` over [-A, A], acting on monomial coefficient vectors."""
    unit = _unit_projection(degree, target)
    k = np.arange(target + 1)[:, np.newaxis]
    j = np.arange(degree + 1)[np.newaxis, :]
    scale = np.power(float(half_width), (j - k).astype(np.float64))
    return np.where(unit != 0.0, unit * scale, 0.0)


def reduce_coefficients(coefficients: np.ndarray, target: int, half_width: float) -> np.ndarray:
    """Vectorised ``reduce_poly`` over the last axis of ``coefficients``."""
    if target < 1:
        raise InvalidArgumentError(f"target degree must be >= 1, got {target}")
    if half_width <= 0:
        raise InvalidArgumentError(f"interval half-width must be positive, got {half_width}")
    coefficients = np.asarray(coefficients, dtype=np.float64)
    degree = coefficients.shape[-1] - 1
    if target >= degree:
        return coefficients.copy()
    return coefficients @ projection_matrix(degree, target, half_width).T


def reduce_poly(p: Poly, target: int) -> Poly:
    """Best mean-square approximation of ``p`` on [-A, A] among polynomials of degree ``target``."""
    if target > p.degree:
        raise InvalidArgumentError(f"target degree {target} exceeds declared degree {p.degree}")
    return Poly(reduce_coefficients(p.coefficients, target, p.half_width), p.half_width)


def reduce_layer_weights(layer: PolyConvLayer, target: int, half_width: float) -> PolyConvLayer:
    """A copy of ``layer`` whose per-tap polynomials are reduced to degree ``target`` on [-A, A]."""
    if target < 1 or target > layer.degree:
        raise InvalidArgumentError(f"target degree {target} outside [1, {layer.degree}]")
    if target == layer.degree:
        return PolyConvLayer(
            layer.in_channels, layer.out_channels, layer.kernel_size, degree=layer.degree,
            rank=layer.rank, activation=layer.activation,
            weights=layer.weights.copy(), bias=layer.bias.copy(),
        )

    spread = layer.in_channels * layer.receptive_field
    # (C_out, C_in, *K, D + 1): constant term first, then one coefficient per power
    powers = np.moveaxis(layer.weights, 0, -1)
    constant = np.broadcast_to(
        (layer.bias / spread).reshape((-1,) + (1,) * (powers.ndim - 1)),
        powers.shape[:-1] + (1,),
    )
    coefficients = np.concatenate([constant, powers], axis=-1)
    reduced = reduce_coefficients(coefficients, target, half_width)

    weights = np.ascontiguousarray(np.moveaxis(reduced[..., 1:], -1, 0))
    bias = reduced[..., 0].reshape(layer.out_channels, -1).sum(axis=1)
    return PolyConvLayer(
        layer.in_channels, layer.out_channels, layer.kernel_size, degree=target,
        rank=layer.rank, activation=layer.activation, weights=weights, bias=bias,
    )


def compute_layer_bounds(model: Network, samples: np.ndarray, batch_size: int = 64) -> List[float]:
    """Largest absolute input seen by each polynomial layer over ``samples`` (floored)."""
    samples = np.asarray(samples)
    if len(samples) == 0:
        raise InvalidArgumentError("cannot bound layer inputs on an empty set")
    positions = {id(layer): k for k, layer in enumerate(model.poly_layers)}
    bounds = np.zeros(len(positions))

    def observe(_, layer, layer_input):
        k = positions.get(id(layer))
        if k is not None:
            bounds[k] = max(bounds[k], float(np.max(np.abs(layer_input))))

    for start in range(0, len(samples), batch_size):
        model.forward(samples[start:start + batch_size], observer=observe)
    return [max(float(b), settings.BOUND_FLOOR) for b in bounds]


def apply_reductions(model: Network, reductions: Sequence[int], bounds: Sequence[float]) -> Network:
    """A copy of ``model`` with polynomial layer l reduced by ``reductions[l]`` degrees on [-A_l, A_l]."""
    reduced = model.copy()
    k = 0
    for index, layer in enumerate(reduced.layers):
        if isinstance(layer, PolyConvLayer):
            if reductions[k]:
                reduced.layers[index] = reduce_layer_weights(layer, layer.degree - reductions[k], bounds[k])
            k += 1
    return reduced


def accuracy_evaluator(model: Network, samples: np.ndarray, labels: np.ndarray) -> float:
    return model.accuracy(samples, labels)


def reduce_network(
    model: Network,
    samples: np.ndarray,
    labels: np.ndarray,
    evaluate: Evaluator = accuracy_evaluator,
    threshold: Optional[float] = None,
    tolerance: float = 0.0,
    bounds: Optional[Sequence[float]] = None,
    threads: int = 1,
) -> Tuple[Network, ReductionPlan]:
    """Greedy layer-wise degree reduction.

    Each iteration tentatively lowers every reducible layer by one more degree
    (on top of the reductions already accepted), scores each candidate with
    ``evaluate`` on the training set, and commits the best one while its score
    stays >= ``threshold``. ``threshold`` defaults to the unreduced model's
    score minus ``tolerance``. Ties go to the lowest layer index.
    """
    degrees = model.degrees
    bounds = list(bounds) if bounds is not None else compute_layer_bounds(model, samples)
    if len(bounds) != len(degrees):
        raise InvalidArgumentError(f"{len(bounds)} bounds for {len(degrees)} polynomial layers")

    baseline = None
    if threshold is None:
        baseline = float(evaluate(model, samples, labels))
        threshold = baseline - tolerance
    plan = ReductionPlan(
        original_degrees=degrees, reductions=[0] * len(degrees), bounds=bounds,
        threshold=threshold, baseline_score=baseline,
    )

    def score(candidate: int) -> float:
        trial = list(plan.reductions)
        trial[candidate] += 1
        return float(evaluate(apply_reductions(model, trial, bounds), samples, labels))

    iteration = 0
    while any(d - r > 1 for d, r in zip(degrees, plan.reductions)):
        iteration += 1
        reducible = [l for l, (d, r) in enumerate(zip(degrees, plan.reductions)) if d - r > 1]
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            results = dict(zip(reducible, pool.map(score, reducible)))
        scores = [results.get(l, 0.0) for l in range(len(degrees))]
        best = max(reducible, key=lambda l: (results[l], -l))
        logger.info("iteration %d scores %s", iteration, ["%.6f" % s for s in scores])
        if results[best] < threshold:
            break
        plan.reductions[best] += 1
        plan.history.append(ReductionStep(
            iteration=iteration, layer=best, new_degree=degrees[best] - plan.reductions[best],
            score=results[best], candidate_scores=scores,
        ))

    reduced = apply_reductions(model, plan.reductions, bounds)
    plan.original_parameters = model.parameter_count()
    plan.reduced_parameters = reduced.parameter_count()
    plan.final_score = plan.history[-1].score if plan.history else baseline
    return reduced, plan


def write_reduction_report(plan: ReductionPlan, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text("".join(line + "\n" for line in plan.report_lines()), encoding="utf-8")
    return path
