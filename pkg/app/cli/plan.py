import logging
from pathlib import Path
from typing import List

from ..exceptions import InfeasibleError
from ..schemas.geometry import GeometryPlan
from ..schemas.run_config import RunConfig
from ..services.geometry_service import plan_geometry

logger = logging.getLogger(__name__)


def plan_lines(plan: GeometryPlan) -> List[str]:
    lines = [f"order {plan.validation.order.value}: " + ("pass" if plan.validation.passed else "fail")]
    if not plan.validation.passed:
        lines.append(f"violated: {plan.validation.violated}")
        return lines
    lines.append(f"max height ratio: {plan.max_height_ratio:.6f} (clamp H_max to {plan.clamp_h_max})")
    if plan.height_range is None:
        lines.append("h range: empty")
        return lines
    low, high = plan.height_range.low, plan.height_range.high
    lines.append(f"h range: [{round(low, 2):g}, {round(high, 2):g}]")
    if plan.suggested_h is None:
        lines.append("suggested h: none (no integer inside the range)")
        return lines
    lines += [
        f"suggested h: {plan.suggested_h}",
        f"alpha at H_max={plan.h_max:g}: {plan.alpha_at_h_max:.10f}",
        f"alpha at H_min={plan.h_min:g}: {plan.alpha_at_h_min:.10f}",
        f"max oversampling: {plan.max_oversampling:.6f}",
    ]
    return lines


def plan(config: RunConfig) -> None:
    result = plan_geometry(
        config.hmin, config.hmax, config.m, config.alpha_min, config.alpha_max, config.order,
    )
    lines = plan_lines(result)
    print("\n".join(lines))
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "plan.json").write_text(result.model_dump_json(indent=2), encoding="utf-8")

    if not result.validation.passed:
        raise InfeasibleError(f"infeasible-parameters: {result.validation.violated}")
    if not result.feasible:
        raise InfeasibleError("no integer window height satisfies both overlap bounds")
    logger.info("plan: h=%d", result.suggested_h)
