import enum
import math
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, model_validator


def integer_sqrt(m: int) -> Optional[int]:
    """Return √m when m is a perfect square, else None."""
    if m < 1:
        return None
    root = math.isqrt(m)
    return root if root * root == m else None


class SlidingPattern(str, enum.Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"
    SPIRAL = "spiral"


class SmallMode(str, enum.Enum):
    PAD = "pad"
    MAGNIFY = "magnify"


class ParameterOrder(str, enum.Enum):
    """The order in which (M, α_min, α_max) are fixed when planning a dataset."""

    M_AMIN_AMAX = "m,alpha_min,alpha_max"
    M_AMAX_AMIN = "m,alpha_max,alpha_min"
    AMIN_M_AMAX = "alpha_min,m,alpha_max"
    AMIN_AMAX_M = "alpha_min,alpha_max,m"
    AMAX_M_AMIN = "alpha_max,m,alpha_min"
    AMAX_AMIN_M = "alpha_max,alpha_min,m"


class GeometrySpec(BaseModel):
    m: int = Field(..., ge=1, description="Window count, a perfect square")
    alpha_min: float = Field(0.0, ge=0.0, lt=1.0)
    alpha_max: float = Field(0.0, ge=0.0, lt=1.0)
    h: int = Field(..., ge=1, description="Window height in pixels")
    gamma: float = Field(1.0, gt=0.0, description="Window aspect ratio, width = gamma * h")
    h_min_clamp: Optional[int] = Field(None, ge=1)
    h_max_clamp: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def check_geometry(self):
        root = integer_sqrt(self.m)
        if root is None:
            raise ValueError(f"m={self.m} is not a perfect square")
        if self.alpha_min > self.alpha_max:
            raise ValueError(f"alpha_min={self.alpha_min} exceeds alpha_max={self.alpha_max}")
        if self.h_min_clamp is None:
            self.h_min_clamp = self.h
        if self.h_max_clamp is None:
            self.h_max_clamp = root * self.h
        if self.h_min_clamp > self.h_max_clamp:
            raise ValueError(f"h_min_clamp={self.h_min_clamp} exceeds h_max_clamp={self.h_max_clamp}")
        if self.h > self.h_min_clamp:
            raise ValueError(f"h={self.h} exceeds h_min_clamp={self.h_min_clamp}")
        if root == 1 and self.h_max_clamp != self.h:
            raise ValueError("m=1 is only valid when every image is clamped to exactly h")
        return self

    @property
    def w(self) -> int:
        return int(round(self.gamma * self.h))


class ImageMeta(BaseModel):
    height: int = Field(..., ge=1)
    width: int = Field(..., ge=1)
    channels: int = Field(1, ge=1)

    @property
    def aspect_ratio(self) -> float:
        return self.width / self.height


class HeightRange(BaseModel):
    low: float
    high: float

    def integer_choices(self, tolerance: float = 1e-9) -> List[int]:
        return list(range(math.ceil(self.low - tolerance), math.floor(self.high + tolerance) + 1))

    def suggest(self) -> Optional[int]:
        """Largest integer window height inside the interval."""
        choices = self.integer_choices()
        return choices[-1] if choices else None


class OrderValidation(BaseModel):
    order: ParameterOrder
    passed: bool
    violated: Optional[str] = None
    checked: List[str] = []


class GeometryPlan(BaseModel):
    h_min: float
    h_max: float
    m: int
    alpha_min: float
    alpha_max: float
    validation: OrderValidation
    height_range: Optional[HeightRange] = None
    suggested_h: Optional[int] = None
    alpha_at_h_min: Optional[float] = None
    alpha_at_h_max: Optional[float] = None
    max_height_ratio: float
    clamp_h_max: Optional[int] = None
    max_oversampling: Optional[float] = None

    @property
    def feasible(self) -> bool:
        return self.validation.passed and self.suggested_h is not None


Origin = Tuple[float, float]
