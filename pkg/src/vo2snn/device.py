"""Two-state hysteretic threshold switch model of a VO2-x device.

The device is a resistor that is either insulating (``r_ins``) or metallic
(``r_met``). It switches to metallic when the magnitude of the voltage across
it reaches ``v_th`` and back to insulating when that magnitude falls to
``v_h``. Thresholds act on ``|v|`` so the device is symmetric in polarity.

Five parameter sets, one per oxygen-vacancy level, ship in
``data/devices.ini``; any file with the same layout can replace them::

    [level.1]
    v_th = 6.5
    v_h = 3.5
    r_ins = 100000
    r_met = 1000
    jitter_sigma = 0.0
"""
from __future__ import annotations

import configparser
import enum
import os
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from typing import Dict, Optional, Union

import numpy as np

from .errors import InvalidLevel

LEVELS = (1, 2, 3, 4, 5)
_FIELDS = ("v_th", "v_h", "r_ins", "r_met", "jitter_sigma")
DEFAULT_JITTER_FRACTION = 0.01


class DeviceState(enum.IntEnum):
    INSULATING = 0
    METALLIC = 1


@dataclass(frozen=True)
class DeviceParams:
    level: int
    v_th: float
    v_h: float
    r_ins: float
    r_met: float
    jitter_sigma: float = 0.0

    def __post_init__(self):
        if not self.v_h < self.v_th:
            raise ValueError(f"hold voltage {self.v_h} must be below threshold {self.v_th}")
        if not (0 < self.r_met < self.r_ins):
            raise ValueError(f"need 0 < r_met < r_ins, got r_met={self.r_met}, r_ins={self.r_ins}")
        if self.v_h <= 0:
            raise ValueError("hold voltage must be positive")
        if self.jitter_sigma < 0:
            raise ValueError("jitter_sigma must be >= 0")

    @property
    def hysteresis(self) -> float:
        return self.v_th - self.v_h

    def stochastic(self, fraction: float = DEFAULT_JITTER_FRACTION) -> "DeviceParams":
        """Copy with per-cycle jitter of ``fraction * v_th``."""
        return replace(self, jitter_sigma=fraction * self.v_th)

    def jittered(self, rng: np.random.Generator) -> "DeviceParams":
        """Draw one cycle's thresholds. Identity when ``jitter_sigma`` is 0."""
        if self.jitter_sigma == 0:
            return self
        v_th, v_h = draw_thresholds(self, rng, 1)
        return replace(self, v_th=float(v_th[0]), v_h=float(v_h[0]))


def draw_thresholds(params: DeviceParams, rng: np.random.Generator, n: int):
    """Per-cycle Gaussian draws of (v_th, v_h); v_h is kept below v_th."""
    v_th = params.v_th + params.jitter_sigma * rng.standard_normal(n)
    v_h = params.v_h + params.jitter_sigma * rng.standard_normal(n)
    # a collapsed window would make the two-state model ill-defined
    v_h = np.minimum(v_h, v_th - 1e-3 * params.hysteresis)
    return v_th, v_h


def load_device_table(path: Union[str, os.PathLike, None] = None) -> Dict[int, DeviceParams]:
    """Read a per-level parameter table from an INI-style file.

    With no path, ``$VO2SNN_DEVICE_CONFIG`` is consulted, then the bundled
    defaults.
    """
    parser = configparser.ConfigParser()
    if path is None:
        path = os.environ.get("VO2SNN_DEVICE_CONFIG")
    if path is None:
        parser.read_string(
            resources.files("vo2snn").joinpath("data/devices.ini").read_text()
        )
    else:
        with open(path) as fh:
            parser.read_file(fh)

    table = {}
    for section in parser.sections():
        if not section.startswith("level."):
            continue
        level = int(section.split(".", 1)[1])
        sec = parser[section]
        missing = [k for k in _FIELDS[:4] if k not in sec]
        if missing:
            raise ValueError(f"[{section}] missing keys: {', '.join(missing)}")
        table[level] = DeviceParams(
            level=level,
            v_th=sec.getfloat("v_th"),
            v_h=sec.getfloat("v_h"),
            r_ins=sec.getfloat("r_ins"),
            r_met=sec.getfloat("r_met"),
            jitter_sigma=sec.getfloat("jitter_sigma", 0.0),
        )
    return table


@lru_cache(maxsize=None)
def _default_table() -> Dict[int, DeviceParams]:
    return load_device_table()


def device_params(level: int, table: Optional[Dict[int, DeviceParams]] = None) -> DeviceParams:
    if isinstance(level, bool) or not isinstance(level, (int, np.integer)):
        raise InvalidLevel(f"level must be an integer, got {level!r}")
    if table is None:
        if level not in LEVELS:
            raise InvalidLevel(f"level {level} outside 1..5")
        table = _default_table()
    if level not in table:
        raise InvalidLevel(f"level {level} not in device table")
    return table[level]


def resistance(state: DeviceState, params: DeviceParams) -> float:
    return params.r_met if state == DeviceState.METALLIC else params.r_ins


def step_state(state: DeviceState, v_device: float, params: DeviceParams) -> DeviceState:
    v = abs(v_device)
    if state == DeviceState.INSULATING and v >= params.v_th:
        return DeviceState.METALLIC
    if state == DeviceState.METALLIC and v <= params.v_h:
        return DeviceState.INSULATING
    return state
