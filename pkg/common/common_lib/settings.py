from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class BiphotonSettings(BaseSettings):
    log_level: str = "INFO"

    # overlap / decomposition quadrature
    quadrature_rtol: float = 1e-10
    quadrature_initial_points: int = 65
    quadrature_max_refinements: int = 8

    # memory budget for tabulated grids (number of complex samples)
    max_grid_points: int = 2**24

    # brute-force optimizer
    optimizer_restarts: int = 32
    optimizer_max_iterations: int = 20000
    optimizer_window: int = 100
    optimizer_tolerance: float = 1e-12

    # width of the frequency cell the CW envelope is discretized on
    cw_cell_hz: float = 1e9

    model_config = SettingsConfigDict(env_file=".env", env_prefix="BIPHOTON_", extra="ignore")


@lru_cache(maxsize=1)
def get_settings() -> BiphotonSettings:
    return BiphotonSettings()
