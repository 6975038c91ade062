from dotenv import load_dotenv

load_dotenv()
import logging
from typing import Any, Dict, List, Optional

from pydantic import Field

from common_lib.mcp import AsyncioFastMCP, tool_errors
from common_lib.settings import get_settings
from commands import cmd_validate, decompose_report, jsa_payload, modes_frames, optimize_report
from config import parse_config
from export import csv_text

logging.basicConfig(level=get_settings().log_level)
logger = logging.getLogger("biphoton-service")

CONFIG_DESCRIPTION = "Run configuration as a JSON document (same schema as the CLI --config file)"

mcp = AsyncioFastMCP(name="Biphoton Service")


@tool_errors
def tabulate_modes(config_json: str = Field(..., description=CONFIG_DESCRIPTION)) -> Dict[str, str]:
    """
    Evaluate pump modes on the config's "modes" grid.

    Returns:
        CSV text keyed by table: "modes" (x, y, z, re, im) and, when spectrum axes
        are configured, "spectrum" (nu_x, nu_y, z, re, im)
    """
    frames = modes_frames(parse_config(config_json))
    return {name: csv_text(frame) for name, frame in frames.items()}


@tool_errors
def tabulate_jsa(config_json: str = Field(..., description=CONFIG_DESCRIPTION)) -> Dict[str, Any]:
    """
    Tabulate the biphoton joint spectral amplitude over the config's "jsa" grid.

    Returns:
        {"csv": rows nu_sx, nu_sy, nu_ix, nu_iy, re, im, "metadata": prefactor, convention, envelope, axes}
    """
    frame, metadata = jsa_payload(parse_config(config_json))
    return {"csv": csv_text(frame), "metadata": metadata}


@tool_errors
def optimize_pump(
    config_json: str = Field(..., description=CONFIG_DESCRIPTION),
    seed: Optional[int] = Field(None, description="Overrides the config seed for the brute-force restarts"),
) -> Dict[str, Any]:
    """
    Pump mode coefficients maximizing detection at the config's target direction.

    Returns:
        The closed-form and brute-force results and their differences
    """
    return optimize_report(parse_config(config_json).with_overrides(seed=seed))


@tool_errors
def decompose_field(config_json: str = Field(..., description=CONFIG_DESCRIPTION)) -> Dict[str, Any]:
    """
    Project the sampled field named by pump.field_csv onto the modes of order <= decompose.max_order.
    """
    return decompose_report(parse_config(config_json))


@tool_errors
def run_validation(
    names: Optional[List[str]] = Field(None, description="Invariants to run; all of them when omitted"),
) -> List[Dict[str, Any]]:
    """
    Run the numerical invariant suite and report pass/fail per invariant.
    """
    return [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in cmd_validate(names=names)]


mcp.add_tool(tabulate_modes)
mcp.add_tool(tabulate_jsa)
mcp.add_tool(optimize_pump)
mcp.add_tool(decompose_field)
mcp.add_tool(run_validation)


def main():
    mcp.run(transport="stdio")


if __name__ == "__main__":
    main()
