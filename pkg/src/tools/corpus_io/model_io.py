"""Versioned text serialization of HarmoniumParams.

    DWH v1 M K J
    alpha
    <M values>
    beta
    <K values>
    sigma
    <K values>
    W
    <M rows of J values>
    U
    <K rows of J values>

Values are space-separated with 17 significant digits, which round-trips 64-bit floats.
"""

from typing import List

import numpy as np

import config
from core import logger as log
from core.errors import ModelFormatError, ModelVersionError, ShapeError
from core.harmonium import HarmoniumParams, ModelDims, validate_params

log = log.get_logger()


def _row(values) -> str:
    return " ".join(format(float(v), ".17g") for v in values)


def save_model(params: HarmoniumParams, path) -> None:
    validate_params(params).raise_if_invalid()
    M, K, J = params.dims.M, params.dims.K, params.dims.J
    lines = [f"{config.MODEL_FORMAT_MAGIC} {config.MODEL_FORMAT_VERSION} {M} {K} {J}"]
    for name in ("alpha", "beta", "sigma"):
        lines += [name, _row(getattr(params, name))]
    lines.append("W")
    lines += [_row(r) for r in params.W]
    lines.append("U")
    lines += [_row(r) for r in params.U]
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    log.info(f"💾 [save_model] M={M}, K={K}, J={J} -> {path}")


def _parse_header(path, line: str) -> ModelDims:
    parts = line.split()
    if len(parts) != 5 or parts[0] != config.MODEL_FORMAT_MAGIC:
        raise ModelFormatError(f"{path}: expected '{config.MODEL_FORMAT_MAGIC} <version> M K J'")
    if parts[1] != config.MODEL_FORMAT_VERSION:
        raise ModelVersionError(
            f"{path}: format version '{parts[1]}' is not supported "
            f"(expected '{config.MODEL_FORMAT_VERSION}')"
        )
    try:
        return ModelDims(M=int(parts[2]), K=int(parts[3]), J=int(parts[4]))
    except (ValueError, ShapeError) as e:
        raise ModelFormatError(f"{path}: bad dimensions in header: {e}") from e


def _values(path, line_number: int, line: str, width: int) -> List[float]:
    try:
        values = [float(v) for v in line.split()]
    except ValueError:
        raise ModelFormatError(f"{path}:{line_number}: malformed number")
    if len(values) != width:
        raise ModelFormatError(f"{path}:{line_number}: expected {width} values, got {len(values)}")
    return values


def load_model(path) -> HarmoniumParams:
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ModelFormatError(f"{path}: empty model file")
    dims = _parse_header(path, lines[0])
    M, K, J = dims.M, dims.K, dims.J
    layout = [("alpha", 1, M), ("beta", 1, K), ("sigma", 1, K), ("W", M, J), ("U", K, J)]
    expected = 1 + sum(1 + rows for _, rows, _ in layout)
    if len(lines) != expected:
        raise ModelFormatError(f"{path}: expected {expected} lines, found {len(lines)}")

    arrays = {}
    cursor = 1
    for name, rows, width in layout:
        if lines[cursor].strip() != name:
            raise ModelFormatError(f"{path}:{cursor + 1}: expected section '{name}'")
        cursor += 1
        block = [_values(path, cursor + r + 1, lines[cursor + r], width) for r in range(rows)]
        cursor += rows
        arrays[name] = np.array(block, dtype=float).reshape(rows, width)

    params = HarmoniumParams(
        dims=dims,
        alpha=arrays["alpha"][0],
        beta=arrays["beta"][0],
        sigma=arrays["sigma"][0],
        W=arrays["W"],
        U=arrays["U"],
    )
    validate_params(params).raise_if_invalid()
    log.info(f"📂 [load_model] M={M}, K={K}, J={J} from {path}")
    return params
