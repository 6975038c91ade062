import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from common_lib.errors import ConfigError
from common_lib.optics.biphoton import jsa_grid
from common_lib.optics.egh_modes import decompose, egh_field, synthesize
from common_lib.optics.optimizer import brute_force_optimal, compare_methods, optimal_expansion
from common_lib.optics.transforms import egh_transverse_ft, expansion_transverse_ft
from common_lib.settings import BiphotonSettings
from common_lib.validation import CheckResult, run_suite
from config import RunConfig, config_errors, polarization
from export import complex_frame, grid_frame, read_csv, write_csv, write_json

logger = logging.getLogger(__name__)


def modes_frames(config: RunConfig) -> dict[str, pd.DataFrame]:
    """Mode values on the configured (x, y, z) grid and, when asked, their spectra"""
    if config.modes is None:
        raise ConfigError("config has no 'modes' section")
    section = config.modes
    with config_errors():
        geom = config.geometry()
        expansion = None if section.mode is not None else config.expansion()
    z = np.asarray(section.z_m, dtype=float)

    gx, gy, gz = np.meshgrid(section.x.spec().samples(), section.y.spec().samples(), z, indexing="ij")
    if section.mode is not None:
        values = egh_field(section.mode.index(), geom, gx, gy, gz)
    else:
        values = synthesize(expansion, geom, gx, gy, gz)
    frames = {"modes": complex_frame({"x": gx, "y": gy, "z": gz}, values)}

    if section.nu_x is not None:
        nx, ny, nz = np.meshgrid(section.nu_x.spec().samples(), section.nu_y.spec().samples(), z, indexing="ij")
        if section.mode is not None:
            spectrum = egh_transverse_ft(section.mode.index(), geom, nx, ny, nz)
        else:
            spectrum = expansion_transverse_ft(expansion, geom, nx, ny, nz)
        frames["spectrum"] = complex_frame({"nu_x": nx, "nu_y": ny, "z": nz}, spectrum)
    return frames


def jsa_payload(config: RunConfig, settings: Optional[BiphotonSettings] = None) -> tuple[pd.DataFrame, dict]:
    if config.jsa is None:
        raise ConfigError("config has no 'jsa' section")
    section = config.jsa
    with config_errors():
        geom = config.geometry()
        expansion = config.expansion()
        crystal = config.crystal_config()
        envelope = config.pump_envelope()
    f_s, f_i = config.signal_frequencies()
    grid = jsa_grid(
        expansion,
        geom,
        crystal,
        envelope,
        section.spec(),
        f_s,
        f_i,
        config.convention,
        signal_pol=polarization(section.signal_polarization),
        idler_pol=polarization(section.idler_polarization),
        pump_pol=polarization(config.pump.polarization),
        settings=settings,
    )
    metadata = grid.metadata()
    metadata["expansion"] = expansion.to_records()
    return grid_frame(grid), metadata


def optimize_report(config: RunConfig, settings: Optional[BiphotonSettings] = None) -> dict:
    if config.target is None:
        raise ConfigError("config has no 'target' section")
    section = config.target
    target = config.target_direction()
    with config_errors():
        closed = optimal_expansion(target, section.max_order, section.index_set)
        brute = brute_force_optimal(target, section.max_order, section.index_set, config.seed, settings)
    return {
        "target": {"X": target.X, "Y": target.Y},
        "max_order": section.max_order,
        "index_set": section.index_set.value,
        "seed": config.seed,
        "closed_form": closed.to_report(),
        "brute_force": brute.to_report(),
        "deltas": compare_methods(closed, brute),
    }


def _field_grid(frame: pd.DataFrame) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    missing = {"x", "y", "re", "im"} - set(frame.columns)
    if missing:
        raise ConfigError(f"field file lacks columns {sorted(missing)}")
    x = np.unique(frame["x"].to_numpy())
    y = np.unique(frame["y"].to_numpy())
    if len(frame) != x.size * y.size or frame.duplicated(["x", "y"]).any():
        raise ConfigError(f"field file must hold a complete {x.size}x{y.size} grid, got {len(frame)} rows")
    for name, axis in (("x", x), ("y", y)):
        steps = np.diff(axis)
        if axis.size < 2 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise ConfigError(f"field file {name} samples must be uniform")
    values = (frame["re"] + 1j * frame["im"]).to_numpy()
    field = np.zeros((x.size, y.size), dtype=complex)
    field[np.searchsorted(x, frame["x"].to_numpy()), np.searchsorted(y, frame["y"].to_numpy())] = values
    return field, x, y


def decompose_report(config: RunConfig) -> dict:
    if config.pump.field_csv is None:
        raise ConfigError("decompose needs pump.field_csv")
    max_order = config.decompose.max_order if config.decompose is not None else 4
    with config_errors():
        geom = config.geometry()
    field, x, y = _field_grid(read_csv(config.pump.field_csv))
    result = decompose(field, x, y, geom, max_order)
    return {
        "max_order": max_order,
        "captured_power": result.captured_power,
        "coefficients": result.expansion.to_records(),
    }


def cmd_modes(config: RunConfig) -> list[Path]:
    frames = modes_frames(config)
    return [write_csv(frame, config.output_path / f"{name}.csv") for name, frame in frames.items()]


def cmd_jsa(config: RunConfig, settings: Optional[BiphotonSettings] = None) -> list[Path]:
    frame, metadata = jsa_payload(config, settings)
    return [
        write_csv(frame, config.output_path / "jsa.csv"),
        write_json(metadata, config.output_path / "jsa_metadata.json"),
    ]


def cmd_optimize(config: RunConfig, settings: Optional[BiphotonSettings] = None) -> list[Path]:
    return [write_json(optimize_report(config, settings), config.output_path / "optimize.json")]


def cmd_decompose(config: RunConfig) -> list[Path]:
    return [write_json(decompose_report(config), config.output_path / "decompose.json")]


def cmd_validate(names: Optional[list[str]] = None, ft_kernel_sign: int = -1) -> list[CheckResult]:
    with config_errors():
        results = run_suite(ft_kernel_sign=ft_kernel_sign, names=names)
    failed = [r.name for r in results if not r.passed]
    logger.info(f"{len(results) - len(failed)}/{len(results)} invariants passed")
    if failed:
        logger.warning(f"failed invariants: {', '.join(failed)}")
    return results
