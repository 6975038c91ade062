import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from common_lib.optics.biphoton import JointAmplitudeGrid

logger = logging.getLogger(__name__)


def grid_frame(grid: JointAmplitudeGrid) -> pd.DataFrame:
    return pd.DataFrame(grid.columns())


def complex_frame(columns: dict[str, np.ndarray], values: np.ndarray) -> pd.DataFrame:
    """Flat coordinate columns followed by re/im of the matching values"""
    frame = pd.DataFrame({name: np.ravel(column) for name, column in columns.items()})
    flat = np.ravel(values)
    frame["re"] = flat.real
    frame["im"] = flat.imag
    return frame


def csv_text(frame: pd.DataFrame) -> str:
    # shortest round-trip float repr
    return frame.to_csv(index=False, lineterminator="\n")


def json_text(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(frame))
    logger.info(f"wrote {len(frame)} rows to {path}")
    return path


def write_json(payload: Any, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json_text(payload))
    logger.info(f"wrote {path}")
    return path


def read_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")
