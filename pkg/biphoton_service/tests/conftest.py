import copy
import json

import pytest

from common_lib.settings import get_settings

WAIST = 20e-6

BASE_CONFIG = {
    "pump": {"wavelength_m": 405e-9, "waist_m": WAIST},
    "crystal": {"length_m": 1e-3},
    "jsa": {
        "signal_x": {"start": -2000.0, "stop": 2000.0, "count": 3},
        "signal_y": {"start": -2000.0, "stop": 2000.0, "count": 3},
        "idler_x": {"start": -2000.0, "stop": 2000.0, "count": 3},
        "idler_y": {"start": -2000.0, "stop": 2000.0, "count": 3},
    },
    "modes": {
        "x": {"start": -WAIST, "stop": WAIST, "count": 3},
        "y": {"start": -WAIST, "stop": WAIST, "count": 3},
    },
    "target": {"X": 0.1, "Y": 0.1, "max_order": 2, "index_set": "positive"},
}


@pytest.fixture
def raw_config():
    return copy.deepcopy(BASE_CONFIG)


@pytest.fixture
def write_config(tmp_path):
    def write(data: dict, name: str = "config.json"):
        data = copy.deepcopy(data)
        data.setdefault("output_path", str(tmp_path / "out"))
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path

    return write


@pytest.fixture(autouse=True)
def fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
