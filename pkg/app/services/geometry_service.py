"""Closed-form VOTCSW geometry.

Every function is pure and works in 64-bit floats. Comparisons that decide
feasibility use ``settings.GEOMETRY_TOLERANCE``.
"""

import logging
import math
from typing import Callable, List, Optional, Tuple

from ..config import settings
from ..exceptions import InfeasibleError, InvalidArgumentError
from ..schemas.geometry import (
    GeometryPlan,
    HeightRange,
    OrderValidation,
    ParameterOrder,
    integer_sqrt,
)

logger = logging.getLogger(__name__)

TOL = settings.GEOMETRY_TOLERANCE


def _require_square_root(m: int, minimum: int = 2) -> int:
    root = integer_sqrt(int(m)) if float(m).is_integer() else None
    if root is None or root < minimum:
        raise InvalidArgumentError(f"m={m} must be a perfect square with sqrt(m) >= {minimum}")
    return root


def _require_alpha(name: str, alpha: float) -> None:
    if not (0.0 <= alpha < 1.0):
        raise InvalidArgumentError(f"{name}={alpha} must lie in [0, 1)")


def window_count(H: float, W: float, h: float, w: float, alpha: float) -> float:
    """Number of windows of size (h, w) sliding with overlap alpha over an (H, W) image."""
    if h > H or w > W:
        raise InvalidArgumentError(f"window ({h}, {w}) larger than image ({H}, {W})")
    if h <= 0 or w <= 0:
        raise InvalidArgumentError("window extents must be positive")
    _require_alpha("alpha", alpha)
    step = 1.0 - alpha
    return ((H - h) / (step * h) + 1.0) * ((W - w) / (step * w) + 1.0)


def feasibility_check(h: float, w: float, m: float, H: float, W: float) -> bool:
    """True when m windows of size (h, w) can cover (H, W) with a non-negative overlap."""
    return h * w * m >= H * W * (1.0 - TOL)


def overlap_general(H: float, W: float, h: float, w: float, m: int) -> float:
    """Overlap for an arbitrary aspect ratio: the root in [0, 1) of window_count(...) = m."""
    if not (H > h and W > w):
        raise InvalidArgumentError(f"image ({H}, {W}) must be strictly larger than window ({h}, {w})")
    if m <= 1:
        raise InvalidArgumentError(f"m={m} must exceed 1")
    if not feasibility_check(h, w, m, H, W):
        raise InfeasibleError(f"h*w*M = {h * w * m} < H*W = {H * W}: windows cannot cover the image")

    # (a/u + 1)(b/u + 1) = m with u = 1 - alpha  =>  (m-1)u^2 - (a+b)u - ab = 0
    a = (H - h) / h
    b = (W - w) / w
    u = ((a + b) + math.sqrt((a + b) ** 2 + 4.0 * (m - 1) * a * b)) / (2.0 * (m - 1))
    alpha = 1.0 - u
    if -TOL < alpha < 0.0:
        alpha = 0.0
    return alpha


def overlap_square(H: float, h: float, m: int) -> float:
    """Overlap when the image and window share their aspect ratio: depends on H, h and m only."""
    if H < h:
        raise InvalidArgumentError(f"image height {H} smaller than window height {h}")
    root = integer_sqrt(int(m)) if float(m).is_integer() else None
    if root is None:
        raise InvalidArgumentError(f"m={m} is not a perfect square")
    if root == 1:
        if abs(H - h) > TOL * max(1.0, h):
            raise InvalidArgumentError("m=1 requires the image height to equal the window height")
        return 0.0
    if H > root * h * (1.0 + TOL):
        raise InfeasibleError(f"H={H} exceeds sqrt(M)*h={root * h}: overlap would be negative")
    alpha = (root * h - H) / (h * (root - 1))
    return min(max(alpha, 0.0), math.nextafter(1.0, 0.0))


def max_height_ratio(m: int, alpha_min: float, alpha_max: float) -> float:
    """Upper bound on H_max / H_min for which one window height serves the whole range."""
    root = _require_square_root(m)
    _require_alpha("alpha_min", alpha_min)
    _require_alpha("alpha_max", alpha_max)
    return (root - alpha_min * (root - 1)) / (root - alpha_max * (root - 1))


def oversampling_factor(alpha: float) -> float:
    """Maximum number of windows that contain a single pixel."""
    _require_alpha("alpha", alpha)
    return 1.0 / (1.0 - alpha) ** 2


def feasible_window_height_range(
    h_min: float, h_max: float, m: int, alpha_min: float, alpha_max: float
) -> HeightRange:
    """Interval of window heights h keeping every image's overlap inside [alpha_min, alpha_max]."""
    root = _require_square_root(m)
    _require_alpha("alpha_min", alpha_min)
    _require_alpha("alpha_max", alpha_max)
    if h_min > h_max:
        raise InvalidArgumentError(f"H_min={h_min} exceeds H_max={h_max}")
    low = h_max / (root - alpha_min * (root - 1))
    high = h_min / (root - alpha_max * (root - 1))
    if low > high * (1.0 + TOL):
        raise InfeasibleError(
            f"empty window height interval: {low:.6f} > {high:.6f} "
            f"(H_min={h_min}, H_max={h_max}, M={m}, alpha in [{alpha_min}, {alpha_max}])"
        )
    return HeightRange(low=low, high=max(low, high))


# Condition = (label, lhs, rhs, relation) with relation ">=" or "<="
Condition = Tuple[str, Callable[[], float], Callable[[], float], str]


def _sqrt_m_bound_from_alphas(h_min, h_max, alpha_min, alpha_max) -> float:
    numerator = h_max * alpha_max - h_min * alpha_min
    denominator = h_min * (1.0 - alpha_min) - h_max * (1.0 - alpha_max)
    if abs(denominator) <= TOL * max(h_min, h_max):
        return math.inf if numerator > TOL * h_max else -math.inf
    return numerator / denominator


def _order_conditions(order: ParameterOrder, h_min, h_max, m, alpha_min, alpha_max) -> List[Condition]:
    root = math.sqrt(m)
    ratio = h_max / h_min
    inverse = h_min / h_max
    stretch = root / (root - 1.0)

    sqrt_m_ge_ratio = ("sqrt(M) >= H_max/H_min", lambda: root, lambda: ratio, ">=")
    amin_given_m = (
        "alpha_min <= H_max/H_min + (1 - H_max/H_min) sqrt(M)/(sqrt(M)-1)",
        lambda: alpha_min, lambda: ratio + (1.0 - ratio) * stretch, "<=",
    )
    amax_given_m_amin = (
        "alpha_max >= (1 - H_min/H_max) sqrt(M)/(sqrt(M)-1) + (H_min/H_max) alpha_min",
        lambda: alpha_max, lambda: (1.0 - inverse) * stretch + inverse * alpha_min, ">=",
    )
    amax_given_m = (
        "alpha_max >= (1 - H_min/H_max) sqrt(M)/(sqrt(M)-1)",
        lambda: alpha_max, lambda: (1.0 - inverse) * stretch, ">=",
    )
    amin_given_m_amax = (
        "alpha_min <= (H_max/H_min) alpha_max + (1 - H_max/H_min) sqrt(M)/(sqrt(M)-1)",
        lambda: alpha_min, lambda: ratio * alpha_max + (1.0 - ratio) * stretch, "<=",
    )
    sqrt_m_given_amin = (
        "sqrt(M) >= (H_max - H_min alpha_min) / ((1 - alpha_min) H_min)",
        lambda: root, lambda: (h_max - h_min * alpha_min) / ((1.0 - alpha_min) * h_min), ">=",
    )
    amax_given_amin = (
        "alpha_max >= 1 - (1 - alpha_min) H_min/H_max",
        lambda: alpha_max, lambda: 1.0 - (1.0 - alpha_min) * inverse, ">=",
    )
    sqrt_m_given_alphas = (
        "sqrt(M) >= (H_max alpha_max - H_min alpha_min) / (H_min (1 - alpha_min) - H_max (1 - alpha_max))",
        lambda: root, lambda: _sqrt_m_bound_from_alphas(h_min, h_max, alpha_min, alpha_max), ">=",
    )
    amax_alone = ("alpha_max >= 1 - H_min/H_max", lambda: alpha_max, lambda: 1.0 - inverse, ">=")
    sqrt_m_given_amax = (
        "sqrt(M) >= H_max alpha_max / (H_min - (1 - alpha_max) H_max)",
        lambda: root,
        lambda: _sqrt_m_bound_from_alphas(h_min, h_max, 0.0, alpha_max),
        ">=",
    )
    amin_given_amax = (
        "alpha_min <= 1 - (H_max/H_min)(1 - alpha_max)",
        lambda: alpha_min, lambda: 1.0 - ratio * (1.0 - alpha_max), "<=",
    )

    return {
        ParameterOrder.M_AMIN_AMAX: [sqrt_m_ge_ratio, amin_given_m, amax_given_m_amin],
        ParameterOrder.M_AMAX_AMIN: [sqrt_m_ge_ratio, amax_given_m, amin_given_m_amax],
        ParameterOrder.AMIN_M_AMAX: [sqrt_m_given_amin, amax_given_m_amin],
        ParameterOrder.AMIN_AMAX_M: [amax_given_amin, sqrt_m_given_alphas],
        ParameterOrder.AMAX_M_AMIN: [amax_alone, sqrt_m_given_amax, amin_given_m_amax],
        ParameterOrder.AMAX_AMIN_M: [amax_alone, amin_given_amax, sqrt_m_given_alphas],
    }[order]


def validate_parameter_order(
    order: ParameterOrder, h_min: float, h_max: float, m: int, alpha_min: float, alpha_max: float
) -> OrderValidation:
    """Check the inequality chain belonging to the order in which (M, alpha_min, alpha_max) were chosen.

    Returns the first violated inequality; never raises for well-typed input.
    """
    order = ParameterOrder(order)
    result = OrderValidation(order=order, passed=True)

    basics: List[Tuple[str, bool]] = [
        ("0 < H_min <= H_max", 0.0 < h_min <= h_max),
        ("M is a perfect square >= 4", integer_sqrt(int(m)) is not None and float(m).is_integer() and m >= 4),
        ("0 <= alpha_min < 1", 0.0 <= alpha_min < 1.0),
        ("0 <= alpha_max < 1", 0.0 <= alpha_max < 1.0),
        ("alpha_min <= alpha_max", alpha_min <= alpha_max),
    ]
    for label, ok in basics:
        result.checked.append(label)
        if not ok:
            result.passed = False
            result.violated = label
            return result

    for label, lhs, rhs, relation in _order_conditions(order, h_min, h_max, m, alpha_min, alpha_max):
        result.checked.append(label)
        left, right = lhs(), rhs()
        slack = TOL * max(1.0, abs(left), abs(right)) if math.isfinite(right) else 0.0
        ok = left >= right - slack if relation == ">=" else left <= right + slack
        if not ok:
            result.passed = False
            result.violated = f"{label} (got {left:.6g} vs {right:.6g})"
            logger.debug("order %s rejected: %s", order.value, result.violated)
            return result
    return result


def plan_geometry(
    h_min: float,
    h_max: float,
    m: int,
    alpha_min: float,
    alpha_max: float,
    order: ParameterOrder = ParameterOrder.AMIN_AMAX_M,
) -> GeometryPlan:
    """Everything the planner reports for a dataset height range and a parameter triple."""
    validation = validate_parameter_order(order, h_min, h_max, m, alpha_min, alpha_max)
    ratio = max_height_ratio(m, alpha_min, alpha_max) if validation.passed else math.nan
    plan = GeometryPlan(
        h_min=h_min, h_max=h_max, m=m, alpha_min=alpha_min, alpha_max=alpha_max,
        validation=validation, max_height_ratio=ratio,
    )
    if not validation.passed:
        return plan

    plan.clamp_h_max = int(math.floor(h_min * ratio + TOL))
    height_range: Optional[HeightRange] = None
    try:
        height_range = feasible_window_height_range(h_min, h_max, m, alpha_min, alpha_max)
    except InfeasibleError as e:
        logger.warning("no feasible window height: %s", e)
        return plan

    plan.height_range = height_range
    plan.suggested_h = height_range.suggest()
    if plan.suggested_h is not None:
        plan.alpha_at_h_max = overlap_square(h_max, plan.suggested_h, m)
        plan.alpha_at_h_min = overlap_square(h_min, plan.suggested_h, m)
        plan.max_oversampling = oversampling_factor(plan.alpha_at_h_min)
    return plan
