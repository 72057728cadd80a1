from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

Split = Literal["train", "test"]


class ManifestEntry(BaseModel):
    id: str = Field(..., min_length=1)
    path: str
    label: str
    height: int = Field(..., ge=1)
    width: int = Field(..., ge=1)
    split: Split = "train"


class DatasetManifest(BaseModel):
    entries: List[ManifestEntry] = []
    classes: List[str] = []

    @model_validator(mode="after")
    def check_entries(self):
        seen = set()
        for entry in self.entries:
            if entry.id in seen:
                raise ValueError(f"duplicate id {entry.id!r}")
            seen.add(entry.id)
        if not self.classes:
            self.classes = sorted({e.label for e in self.entries})
        unknown = {e.label for e in self.entries} - set(self.classes)
        if unknown:
            raise ValueError(f"labels outside the class catalog: {sorted(unknown)}")
        return self

    def split(self, name: Split) -> List[ManifestEntry]:
        return [e for e in self.entries if e.split == name]

    def label_index(self, label: str) -> int:
        return self.classes.index(label)

    def __len__(self) -> int:
        return len(self.entries)


class SplitDistribution(BaseModel):
    split: str
    count: int
    class_frequencies: Dict[str, float]
    size_histograms: Dict[str, List[int]]
    empty: bool = False


class DistributionReport(BaseModel):
    bin_edges: List[float]
    splits: List[SplitDistribution]

    def for_split(self, name: str) -> Optional[SplitDistribution]:
        return next((s for s in self.splits if s.split == name), None)


class SynthSpec(BaseModel):
    """Synthetic square-image dataset: ``count`` images per class, sides drawn uniformly."""

    classes: int = Field(2, ge=1)
    count: int = Field(200, ge=0, description="Images per class")
    size_min: int = Field(418, ge=2)
    size_max: int = Field(973, ge=2)
    class_size_ranges: Optional[List[Tuple[int, int]]] = None
    channels: Literal[1, 3] = 1
    noise: float = Field(0.05, ge=0.0)
    seed: int = 0

    @model_validator(mode="after")
    def check_sizes(self):
        if self.size_min > self.size_max:
            raise ValueError(f"size_min={self.size_min} exceeds size_max={self.size_max}")
        if self.class_size_ranges is not None:
            if len(self.class_size_ranges) != self.classes:
                raise ValueError(f"{len(self.class_size_ranges)} size ranges for {self.classes} classes")
            for low, high in self.class_size_ranges:
                if not self.size_min <= low <= high <= self.size_max:
                    raise ValueError(f"class size range ({low}, {high}) outside [{self.size_min}, {self.size_max}]")
        return self

    def size_range(self, k: int) -> Tuple[int, int]:
        if self.class_size_ranges is not None:
            return tuple(self.class_size_ranges[k])
        return self.size_min, self.size_max
