"""
Result records: accuracy reports, benchmark runs, ratio rows and figures
"""
import math
from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

from src.models.config import ReducerKind

CSV_COLUMNS = ("reducer", "d_prime", "seed", "tsne_seconds", "accuracy", "final_kl")
ERROR_MARKER = "error"


class AccuracyReport(BaseModel):
    """Fraction of points whose (modal k-)nearest neighbour label matches their own"""

    k: int = Field(1, ge=1, description="Neighbour count")
    score: float = Field(..., ge=0.0, le=1.0, description="Fraction correctly clustered")
    per_class_scores: dict[int, float] = Field(default_factory=dict, description="Score per label")
    class_counts: dict[int, int] = Field(default_factory=dict, description="Points per label")
    tie_count: int = Field(0, ge=0, description="Modal-label ties broken by smallest label")


class JlAudit(BaseModel):
    """Measured distortion of squared pairwise distances under a reduction"""

    epsilon: float = Field(..., gt=0.0, lt=1.0, description="Target distortion")
    pair_count: int = Field(..., ge=0, description="Pairs with a non-zero original distance")
    skipped_pairs: int = Field(0, ge=0, description="Pairs skipped for zero original distance")
    max_distortion: float = Field(..., ge=0.0, description="max |ratio - 1| over audited pairs")
    fraction_within: float = Field(..., ge=0.0, le=1.0, description="Fraction with ratio in [1-eps, 1+eps]")


class RunRecord(BaseModel):
    """One benchmark observation"""

    reducer: ReducerKind = Field(..., description="Reduction applied before t-SNE")
    d_prime: int = Field(..., ge=1, description="Dimension handed to t-SNE")
    seed: int = Field(..., ge=0, description="Stream seed of this run")
    repeat: int = Field(0, ge=0, description="Repeat index within (reducer, d')")
    tsne_seconds: Optional[float] = Field(None, description="Wall-clock of the t-SNE stage only")
    accuracy: Optional[AccuracyReport] = None
    final_kl: Optional[float] = None
    error: Optional[str] = Field(None, description="Failure message when the run did not complete")

    @model_validator(mode="after")
    def _check_completed(self) -> "RunRecord":
        if self.error is None:
            if self.tsne_seconds is None or self.tsne_seconds <= 0:
                raise ValueError("completed runs need tsne_seconds > 0")
            if self.accuracy is None or self.final_kl is None:
                raise ValueError("completed runs need accuracy and final_kl")
        return self

    @property
    def failed(self) -> bool:
        return self.error is not None

    def to_csv_row(self) -> list[str]:
        """Row matching CSV_COLUMNS; failed runs carry the error marker"""
        if self.failed:
            return [self.reducer, str(self.d_prime), str(self.seed), ERROR_MARKER, "", ""]
        return [
            self.reducer,
            str(self.d_prime),
            str(self.seed),
            repr(self.tsne_seconds),
            repr(self.accuracy.score),
            repr(self.final_kl),
        ]

    @classmethod
    def from_csv_row(cls, row: dict[str, str], k: int = 1) -> "RunRecord":
        """Inverse of to_csv_row (per-class scores are not stored in the CSV)"""
        if row["tsne_seconds"] == ERROR_MARKER:
            return cls(
                reducer=row["reducer"],
                d_prime=int(row["d_prime"]),
                seed=int(row["seed"]),
                error=ERROR_MARKER,
            )
        return cls(
            reducer=row["reducer"],
            d_prime=int(row["d_prime"]),
            seed=int(row["seed"]),
            tsne_seconds=float(row["tsne_seconds"]),
            accuracy=AccuracyReport(k=k, score=float(row["accuracy"])),
            final_kl=float(row["final_kl"]),
        )


class RatioRow(BaseModel):
    """Time and accuracy of a run relative to the unreduced baseline"""

    d_prime: int
    time_ratio: float
    accuracy_ratio: float
    reducer: ReducerKind = "random_projection"


class FigureSeries(BaseModel):
    """Named polyline or point cloud"""

    name: str
    points: list[tuple[float, float]]
    color: str = "#000000"
    dashed: bool = False


class FigureSpec(BaseModel):
    """What an SVG figure shows"""

    kind: Literal["ratio_curves", "scatter"]
    title: str = ""
    x_label: str = ""
    y_label: str = ""
    log_base: Optional[float] = Field(None, gt=1.0, description="Log base of the x axis")
    series: list[FigureSeries] = Field(default_factory=list)
    labels: Optional[list[int]] = Field(None, description="Point labels for scatter colouring")

    @model_validator(mode="after")
    def _check_kind(self) -> "FigureSpec":
        if self.kind == "ratio_curves" and not self.series:
            raise ValueError("ratio_curves needs at least one series")
        if self.kind == "scatter" and self.labels is None:
            raise ValueError("scatter needs labels for colouring")
        return self

    def x_transform(self, x: float) -> float:
        """Axis coordinate for a data x value"""
        if self.log_base is None:
            return x
        return math.log(x) / math.log(self.log_base)
