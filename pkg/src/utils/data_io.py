"""
Dataset loading, normalization, subsampling and raw_f64 persistence

Formats:
    idx      big-endian u32 headers, u8 payload (MNIST, KMNIST, Fashion-MNIST)
    raw_f64  header-less little-endian f64 matrix, optional little-endian u64
             labels appended, plus a key=value text sidecar
    csv      one row per sample, optional header, optional trailing label column
"""
import gzip
import logging
import struct
from pathlib import Path
from typing import Optional

import numpy as np
from dotenv import dotenv_values

from src.errors import (
    AlignmentError,
    DataError,
    FormatError,
    NonFiniteError,
    ParameterError,
    SizeMismatchError,
    TruncationError,
)
from src.models.config import DatasetSpec
from src.utils.rng import SplitMix64

logger = logging.getLogger(__name__)

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


def validate_matrix(X: np.ndarray) -> np.ndarray:
    """
    Check the DataMatrix invariants and return a read-only float64 copy

    Args:
        X: Candidate N x d matrix

    Returns:
        C-contiguous, read-only float64 array
    """
    X = np.array(X, dtype=np.float64, order="C", copy=True)
    if X.ndim != 2:
        raise DataError(f"Expected a 2-D matrix, got shape {X.shape}")
    n_rows, n_cols = X.shape
    if n_rows < 2 or n_cols < 1:
        raise DataError(f"Need at least 2 rows and 1 column, got {n_rows}x{n_cols}")
    finite_rows = np.isfinite(X).all(axis=1)
    if not finite_rows.all():
        row = int(np.argmin(finite_rows))
        raise NonFiniteError(f"Non-finite value in row {row}", row=row)
    X.setflags(write=False)
    return X


def validate_labels(y: np.ndarray, n_rows: int) -> np.ndarray:
    """Check label alignment and return a read-only int64 copy"""
    y = np.array(y, dtype=np.int64, copy=True).reshape(-1)
    if y.shape[0] != n_rows:
        raise AlignmentError(f"{y.shape[0]} labels for {n_rows} rows")
    if (y < 0).any():
        raise DataError("Labels must be non-negative")
    y.setflags(write=False)
    return y


def normalize_bytes(values: np.ndarray) -> np.ndarray:
    """Map byte intensities to [0, 1] by exact division by 255"""
    return values.astype(np.float64) / 255.0


def _read_bytes(path: str) -> bytes:
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"Input file not found: {path}")
    opener = gzip.open if file_path.suffix == ".gz" else open
    with opener(file_path, "rb") as f:
        return f.read()


def _parse_idx(data: bytes, expected_magic: int, rank: int, path: str) -> tuple[tuple[int, ...], bytes]:
    header_size = 4 + 4 * rank
    if len(data) < header_size:
        raise TruncationError(f"{path}: file shorter than its IDX header")
    magic, = struct.unpack(">I", data[:4])
    if magic != expected_magic:
        raise FormatError(f"{path}: magic number {magic:#010x}, expected {expected_magic:#010x}")
    dims = struct.unpack(f">{rank}I", data[4:header_size])
    expected = header_size + int(np.prod(dims))
    if len(data) != expected:
        raise TruncationError(
            f"{path}: header declares {expected} bytes, file holds {len(data)}"
        )
    return dims, data[header_size:]


def load_idx(
    images_path: str,
    labels_path: str,
    normalize: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """
    Load an IDX image/label file pair

    Args:
        images_path: IDX3 unsigned-byte image file (optionally .gz)
        labels_path: IDX1 unsigned-byte label file (optionally .gz)
        normalize: Divide pixel values by 255

    Returns:
        Tuple of (DataMatrix with one flattened image per row, LabelVector)
    """
    (count, rows, cols), pixels = _parse_idx(_read_bytes(images_path), IDX_IMAGE_MAGIC, 3, images_path)
    (label_count,), label_bytes = _parse_idx(_read_bytes(labels_path), IDX_LABEL_MAGIC, 1, labels_path)

    if count != label_count:
        raise AlignmentError(f"{count} images but {label_count} labels")

    values = np.frombuffer(pixels, dtype=np.uint8).reshape(count, rows * cols)
    X = validate_matrix(normalize_bytes(values) if normalize else values)
    y = validate_labels(np.frombuffer(label_bytes, dtype=np.uint8), count)

    logger.info(f"Loaded IDX dataset {images_path}: {count} images of {rows}x{cols}")
    return X, y


def read_sidecar(sidecar_path: str) -> dict:
    """Parse a raw_f64 sidecar (n_rows, n_cols, labels)"""
    if not Path(sidecar_path).exists():
        raise FileNotFoundError(f"Sidecar not found: {sidecar_path}")
    values = dotenv_values(sidecar_path)
    try:
        return {
            "n_rows": int(values["n_rows"]),
            "n_cols": int(values["n_cols"]),
            "labels": str(values.get("labels", "false")).strip().lower() == "true",
            "extra": {k: v for k, v in values.items() if k not in ("n_rows", "n_cols", "labels")},
        }
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"{sidecar_path}: malformed sidecar ({e})")


def write_sidecar(
    sidecar_path: str,
    n_rows: int,
    n_cols: int,
    labels: bool,
    extra: Optional[dict] = None
):
    """Write a raw_f64 sidecar descriptor; ``extra`` keys are appended verbatim"""
    lines = [f"n_rows={n_rows}", f"n_cols={n_cols}", f"labels={'true' if labels else 'false'}"]
    lines += [f"{key}={value}" for key, value in (extra or {}).items()]
    with open(sidecar_path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_raw(
    matrix_path: str,
    sidecar_path: Optional[str] = None
) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Load a raw_f64 matrix described by its sidecar

    Args:
        matrix_path: Little-endian f64 payload, labels appended as u64 when present
        sidecar_path: Descriptor path (defaults to <matrix_path>.meta)

    Returns:
        Tuple of (DataMatrix, LabelVector or None)
    """
    meta = read_sidecar(sidecar_path or f"{matrix_path}.meta")
    n_rows, n_cols, has_labels = meta["n_rows"], meta["n_cols"], meta["labels"]

    data = _read_bytes(matrix_path)
    matrix_bytes = n_rows * n_cols * 8
    expected = matrix_bytes + (n_rows * 8 if has_labels else 0)
    if len(data) != expected:
        raise SizeMismatchError(
            f"{matrix_path}: {n_rows}x{n_cols} (labels={has_labels}) needs {expected} bytes, found {len(data)}"
        )

    X = validate_matrix(np.frombuffer(data, dtype="<f8", count=n_rows * n_cols).reshape(n_rows, n_cols))
    y = None
    if has_labels:
        y = validate_labels(np.frombuffer(data, dtype="<u8", offset=matrix_bytes).astype(np.int64), n_rows)

    logger.info(f"Loaded raw_f64 matrix {matrix_path}: {n_rows}x{n_cols}")
    return X, y


def write_raw(
    matrix_path: str,
    X: np.ndarray,
    labels: Optional[np.ndarray] = None,
    sidecar_path: Optional[str] = None,
    extra: Optional[dict] = None
) -> str:
    """
    Write a matrix (and optional labels) in raw_f64 format

    Args:
        matrix_path: Output payload path
        X: Finite 2-D matrix
        labels: Optional non-negative integer labels aligned with rows
        sidecar_path: Descriptor path (defaults to <matrix_path>.meta)
        extra: Additional sidecar keys (e.g. the generator seed of a cached matrix)

    Returns:
        Path of the written sidecar
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"Expected a 2-D matrix, got shape {X.shape}")
    if not np.isfinite(X).all():
        row = int(np.argmin(np.isfinite(X).all(axis=1)))
        raise NonFiniteError(f"Non-finite value in row {row}", row=row)

    if labels is not None:
        labels = validate_labels(labels, X.shape[0])

    Path(matrix_path).parent.mkdir(parents=True, exist_ok=True)
    with open(matrix_path, "wb") as f:
        f.write(np.ascontiguousarray(X, dtype="<f8").tobytes())
        if labels is not None:
            f.write(labels.astype("<u8").tobytes())

    sidecar = sidecar_path or f"{matrix_path}.meta"
    write_sidecar(sidecar, X.shape[0], X.shape[1], labels is not None, extra)
    logger.debug(f"Wrote raw_f64 matrix {matrix_path} ({X.shape[0]}x{X.shape[1]})")
    return sidecar


def load_csv(
    csv_path: str,
    header: bool = False,
    label_column: bool = True
) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Load a comma-separated matrix

    Feature values are kept as written; only IDX byte data is rescaled.

    Args:
        csv_path: Input file
        header: Skip the first row
        label_column: Treat the last column as integer labels

    Returns:
        Tuple of (DataMatrix, LabelVector or None)
    """
    if not Path(csv_path).exists():
        raise FileNotFoundError(f"Input file not found: {csv_path}")
    try:
        table = np.loadtxt(csv_path, delimiter=",", skiprows=1 if header else 0, ndmin=2, dtype=np.float64)
    except ValueError as e:
        raise FormatError(f"{csv_path}: {e}")

    y = None
    if label_column:
        if table.shape[1] < 2:
            raise FormatError(f"{csv_path}: label column requested but only one column present")
        raw_labels = table[:, -1]
        if not np.array_equal(raw_labels, np.round(raw_labels)):
            raise FormatError(f"{csv_path}: label column is not integer-valued")
        table = table[:, :-1]
        y = validate_labels(raw_labels.astype(np.int64), table.shape[0])

    X = validate_matrix(table)
    logger.info(f"Loaded CSV matrix {csv_path}: {X.shape[0]}x{X.shape[1]}")
    return X, y


def subsample_indices(n: int, m: int, seed: int) -> np.ndarray:
    """
    Indices chosen by a partial Fisher-Yates shuffle, returned in ascending order

    Step i (i = 0..m-1) swaps position i with j = i + (x mod (n - i)) where x is
    the next splitmix64 output of stream ``seed``.
    """
    if not 2 <= m <= n:
        raise ParameterError(f"subsample size must satisfy 2 <= m <= N, got m={m}, N={n}")
    rng = SplitMix64(seed)
    order = list(range(n))
    for i in range(m):
        j = i + rng.integer_below(n - i)
        order[i], order[j] = order[j], order[i]
    return np.array(sorted(order[:m]), dtype=np.int64)


def subsample(
    X: np.ndarray,
    y: Optional[np.ndarray],
    m: int,
    seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """
    Keep ``m`` rows chosen without replacement, preserving original order

    Args:
        X: DataMatrix
        y: Aligned LabelVector
        m: Rows to keep
        seed: Selection seed

    Returns:
        Tuple of (subsampled DataMatrix, aligned LabelVector)
    """
    if y is not None and len(y) != X.shape[0]:
        raise AlignmentError(f"{len(y)} labels for {X.shape[0]} rows")
    idx = subsample_indices(X.shape[0], m, seed)
    X_sub = validate_matrix(X[idx])
    y_sub = validate_labels(y[idx], m) if y is not None else None
    logger.info(f"Subsampled {m} of {X.shape[0]} rows (seed={seed})")
    return X_sub, y_sub


def load_dataset(spec: DatasetSpec) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Load the dataset a DatasetSpec points at and apply subsampling

    Args:
        spec: Dataset description

    Returns:
        Tuple of (DataMatrix, LabelVector or None)
    """
    if spec.format == "idx":
        X, y = load_idx(spec.images_path, spec.labels_path, normalize=spec.normalize)
    elif spec.format == "raw_f64":
        X, y = load_raw(spec.matrix_path, spec.resolved_sidecar())
    elif spec.format == "csv":
        X, y = load_csv(
            spec.csv_path,
            header=spec.csv_header,
            label_column=spec.csv_label_column,
        )
    else:
        raise FormatError(f"Unknown format tag: {spec.format}")

    if spec.subsample_size is not None and spec.subsample_size != X.shape[0]:
        if spec.subsample_size > X.shape[0]:
            raise ParameterError(f"subsample_size {spec.subsample_size} exceeds N={X.shape[0]}")
        X, y = subsample(X, y, spec.subsample_size, spec.seed)
    return X, y
