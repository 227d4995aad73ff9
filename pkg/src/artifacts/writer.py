"""CSV and JSON writers with reproducible number formatting."""

import json
import logging
import math
from pathlib import Path
from typing import Any, Mapping, Sequence, Union

import numpy as np
import pandas as pd

from src.constants import CSV_FLOAT_FORMAT

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def write_csv(path: PathLike, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    """
    Write ``rows`` under a header row.

    Floats use 17 significant digits and '.' as decimal separator; NaN is
    written as ``nan``.

    Raises:
        ValueError: If a row does not have one value per column.
    """
    path = Path(path)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"Row of length {len(row)} for {len(columns)} columns in {path.name}")
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(list(rows), columns=list(columns))
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, na_rep="nan")
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def read_csv(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(Path(path))


def _plain(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return _plain(value.item())
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else str(value)
    return value


def write_json(path: PathLike, record: Mapping[str, Any]) -> Path:
    """Write ``record`` with sorted keys; NaN becomes null."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_plain(record), sort_keys=True, indent=2, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path
