"""
Configuration models for datasets, the t-SNE engine and dimension sweeps
"""
from pathlib import Path
from typing import Literal, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, Field, field_validator, model_validator

from src.errors import ParameterError

ReducerKind = Literal["none", "random_projection", "pca"]
FormatTag = Literal["idx", "raw_f64", "csv"]


class DatasetSpec(BaseModel):
    """Where a dataset lives and how to prepare it"""

    format: FormatTag = Field("idx", description="File format tag")
    images_path: Optional[str] = Field(None, description="IDX image file (idx format)")
    labels_path: Optional[str] = Field(None, description="IDX label file (idx format)")
    matrix_path: Optional[str] = Field(None, description="Little-endian f64 matrix (raw_f64 format)")
    sidecar_path: Optional[str] = Field(
        None,
        description="Sidecar descriptor; defaults to <matrix_path>.meta"
    )
    csv_path: Optional[str] = Field(None, description="CSV file (csv format)")
    csv_header: bool = Field(False, description="First CSV row is a header")
    csv_label_column: bool = Field(True, description="Last CSV column holds integer labels")
    subsample_size: Optional[int] = Field(None, ge=2, description="Rows kept after subsampling")
    normalize: bool = Field(True, description="Divide IDX byte data by 255; other formats load as written")
    seed: int = Field(0, ge=0, description="Seed for subsampling")

    @model_validator(mode="after")
    def _check_paths(self) -> "DatasetSpec":
        required = {
            "idx": ("images_path", "labels_path"),
            "raw_f64": ("matrix_path",),
            "csv": ("csv_path",),
        }[self.format]
        missing = [name for name in required if not getattr(self, name)]
        if missing:
            raise ValueError(f"format '{self.format}' requires {', '.join(missing)}")
        return self

    def resolved_sidecar(self) -> Optional[str]:
        """Sidecar path, falling back to the matrix path with a .meta suffix"""
        if self.sidecar_path:
            return self.sidecar_path
        if self.matrix_path:
            return f"{self.matrix_path}.meta"
        return None


class TsneConfig(BaseModel):
    """Optimization schedule and affinity calibration for one t-SNE run"""

    perplexity: float = Field(30.0, gt=0, description="Target perplexity of each conditional row")
    n_iter: int = Field(1000, ge=0, description="Total gradient descent iterations")
    early_exaggeration_factor: float = Field(12.0, gt=0, description="P multiplier during early iterations")
    early_exaggeration_iters: int = Field(250, ge=0, description="Iterations with exaggerated P")
    learning_rate: float = Field(200.0, gt=0, description="Gradient descent step size")
    momentum_initial: float = Field(0.5, ge=0, lt=1)
    momentum_final: float = Field(0.8, ge=0, lt=1)
    momentum_switch_iter: int = Field(250, ge=0)
    init_scale: float = Field(1e-4, gt=0, description="Standard deviation of the initial embedding")
    theta: float = Field(0.0, ge=0.0, le=1.0, description="Barnes-Hut opening angle; 0 means exact")
    seed: int = Field(0, ge=0, description="Seed for the initial embedding")
    min_prob_floor: float = Field(1e-12, gt=0, description="Floor applied to P and Q inside logarithms")
    calibration_tol: float = Field(1e-5, gt=0, description="Tolerance on log2 perplexity")
    calibration_max_iter: int = Field(50, ge=1, description="Maximum bracketing and bisection steps")
    min_gain: float = Field(0.01, gt=0)
    min_grad_norm: float = Field(1e-7, ge=0, description="Stop once the gradient norm falls below this")
    trace_every: int = Field(50, ge=1, le=50, description="Record KL every this many iterations")
    neighbors_factor: float = Field(3.0, gt=0, description="Barnes-Hut keeps ceil(factor*perplexity) neighbours")
    n_components: Literal[2] = Field(2, description="Output dimension")
    n_threads: int = Field(1, ge=1, description="Worker threads for per-point stages")

    @property
    def exact(self) -> bool:
        return self.theta == 0.0


class SweepConfig(BaseModel):
    """A full dimension sweep: baseline plus reducers at each swept d'"""

    dataset: DatasetSpec
    reducers: list[Literal["random_projection", "pca"]] = Field(
        default_factory=lambda: ["random_projection"],
        description="Reducers applied before t-SNE"
    )
    dim_start: int = Field(7, ge=1, description="First swept dimension")
    dim_base: float = Field(1.5, gt=1.0, description="Growth factor between swept dimensions")
    dims: Optional[list[int]] = Field(None, description="Explicit dimensions overriding the geometric sweep")
    repeats: int = Field(1, ge=1, description="Runs per (reducer, d') pair")
    k: int = Field(1, ge=1, description="Neighbours for the accuracy score")
    seed: int = Field(0, ge=0, description="Master seed")
    out_dir: str = Field("./runs", description="Output directory")
    save_embeddings: bool = Field(True, description="Write each run's embedding next to the CSV")
    tsne: TsneConfig = Field(default_factory=TsneConfig)

    @field_validator("reducers")
    @classmethod
    def _dedupe_reducers(cls, value: list[str]) -> list[str]:
        return list(dict.fromkeys(value))

    @field_validator("dims")
    @classmethod
    def _check_dims(cls, value: Optional[list[int]]) -> Optional[list[int]]:
        if value is not None and any(d < 1 for d in value):
            raise ValueError("dims must be positive")
        return value


_DATASET_FIELDS = set(DatasetSpec.model_fields)
_TSNE_FIELDS = set(TsneConfig.model_fields)
_SWEEP_FIELDS = set(SweepConfig.model_fields) - {"dataset", "tsne"}
_LIST_FIELDS = {"reducers", "dims"}


def _split_flat(values: dict[str, Optional[str]]) -> tuple[dict, dict, dict]:
    dataset: dict = {}
    tsne: dict = {}
    sweep: dict = {}
    for key, raw in values.items():
        if raw is None or raw == "":
            continue
        key = key.strip().lower()
        if key == "dataset_seed":
            dataset["seed"] = raw
        elif key in _LIST_FIELDS:
            items = [item.strip() for item in raw.split(",") if item.strip()]
            if key == "dims":
                sweep[key] = [int(item) for item in items]
            else:
                # "none" selects a baseline-only sweep
                sweep[key] = [item for item in items if item != "none"]
        elif key in _SWEEP_FIELDS:
            sweep[key] = raw
        elif key in _DATASET_FIELDS:
            dataset[key] = raw
        elif key in _TSNE_FIELDS:
            tsne[key] = raw
        else:
            raise ParameterError(f"Unknown config key: {key}")
    return dataset, tsne, sweep


def load_sweep_config(
    config_file: Optional[str] = None,
    overrides: Optional[dict] = None
) -> SweepConfig:
    """
    Build a SweepConfig from a flat key=value file plus overrides

    Args:
        config_file: Path to a key=value file (parsed like a .env file)
        overrides: Flat key/value pairs from CLI flags; these win over the file

    Returns:
        Validated SweepConfig
    """
    flat: dict[str, Optional[str]] = {}
    if config_file:
        if not Path(config_file).exists():
            raise FileNotFoundError(f"Config file not found: {config_file}")
        flat.update(dotenv_values(config_file))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        flat[key] = ",".join(str(v) for v in value) if isinstance(value, (list, tuple)) else str(value)

    dataset, tsne, sweep = _split_flat(flat)
    if "seed" in sweep and "seed" not in dataset:
        dataset["seed"] = sweep["seed"]
    return SweepConfig(dataset=DatasetSpec(**dataset), tsne=TsneConfig(**tsne), **sweep)
