"""Run configuration files (TOML or JSON).

Exactly one of a ``[physical]`` or ``[reduced]`` table is required.
Physical frequencies are rad/s, or strings such as ``"2pi*50"``,
``"2π×1e6 Hz"`` or ``"2π×10^6"`` giving a value in Hz.
"""

from __future__ import annotations

import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .model import PhysicalParams, PumpSchedule, ReducedParams, reduce_params

_FREQUENCY_FIELDS = ("omega", "V", "U0", "g0", "omega_c", "omega_p", "omega_a", "kappa", "eta")
_PHYSICAL_FIELDS = _FREQUENCY_FIELDS + ("N", "J1", "J2")

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_TWO_PI_HZ = re.compile(
    rf"""^\s*2\s*(?:π|pi)\s*[×x*]?\s*
         (?P<mant>{_NUMBER})?
         (?:\s*[×x*]?\s*10\s*(?:\^|\*\*)\s*(?P<exp>[-+]?\d+))?
         \s*(?:hz)?\s*$""",
    re.IGNORECASE | re.VERBOSE,
)


def parse_frequency(value) -> float:
    """Angular frequency in rad/s from a number or a ``2π×<Hz>`` string."""
    if isinstance(value, bool):
        raise ConfigError(f"not a frequency: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            return float(text)
        except ValueError:
            pass
        m = _TWO_PI_HZ.match(text)
        if m and (m.group("mant") or m.group("exp")):
            hz = float(m.group("mant") or 1.0) * 10.0 ** int(m.group("exp") or 0)
            return 2.0 * math.pi * hz
    raise ConfigError(f"cannot parse frequency {value!r}")


def load_document(path) -> Dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_bytes()
    try:
        if path.suffix.lower() == ".json":
            return json.loads(text)
        return tomllib.loads(text.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc


def parse_pump(block: Dict[str, Any]) -> PumpSchedule:
    kind = block.get("kind", "constant")
    try:
        if kind == "constant":
            return PumpSchedule.constant(float(block["amplitude"]))
        if kind == "linear":
            return PumpSchedule.linear_ramp(float(block["start"]), float(block["stop"]),
                                            float(block["duration"]), float(block.get("t0", 0.0)))
        if kind == "table":
            return PumpSchedule.table(block["times"], block["values"])
    except KeyError as exc:
        raise ConfigError(f"pump block of kind {kind!r} is missing {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"invalid pump block: {exc}") from exc
    raise ConfigError(f"unknown pump kind {kind!r}")


def parse_physical(block: Dict[str, Any]) -> PhysicalParams:
    unknown = set(block) - set(_PHYSICAL_FIELDS)
    if unknown:
        raise ConfigError(f"unknown physical keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in block.items():
        if key in _FREQUENCY_FIELDS:
            kwargs[key] = parse_frequency(value)
        elif key == "N":
            kwargs[key] = int(value)
        else:
            kwargs[key] = float(value)
    try:
        return PhysicalParams(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"incomplete physical block: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_reduced(block: Dict[str, Any], pump: Optional[PumpSchedule]) -> ReducedParams:
    unknown = set(block) - {"r", "A_tilde", "B", "C", "s", "A"}
    if unknown:
        raise ConfigError(f"unknown reduced keys: {sorted(unknown)}")
    try:
        r, B, C = float(block["r"]), float(block["B"]), float(block["C"])
    except KeyError as exc:
        raise ConfigError(f"reduced block is missing {exc}") from exc
    try:
        if "A_tilde" in block:
            if pump is not None or "s" in block or "A" in block:
                raise ConfigError("give either A_tilde or (s, A / pump block), not both")
            return ReducedParams.from_tilt(r, float(block["A_tilde"]), B, C)
        if pump is not None and "A" in block:
            raise ConfigError("give either A or a pump block, not both")
        if pump is None:
            pump = PumpSchedule.constant(float(block.get("A", 0.0)))
        return ReducedParams(r=r, B=B, C=C, tilt_scale=float(block.get("s", 1.0)), pump=pump)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class RunConfig:
    document: Dict[str, Any]
    params: Optional[ReducedParams] = None
    physical: Optional[PhysicalParams] = None
    seed: int = 0
    sections: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    def section(self, name: str) -> Dict[str, Any]:
        return dict(self.sections.get(name, {}))


def build_config(document: Dict[str, Any], reduce: bool = True) -> RunConfig:
    """Validate a parsed document.  ``reduce=False`` skips the reduction so that
    degenerate physical sets can still be reported."""
    has_phys = "physical" in document
    has_red = "reduced" in document
    if has_phys == has_red:
        raise ConfigError("exactly one of [physical] or [reduced] is required")
    pump = parse_pump(document["pump"]) if "pump" in document else None
    cfg = RunConfig(document=document, seed=int(document.get("seed", 0)))
    for name in ("fixed_points", "trajectory", "portrait", "sweep"):
        if name in document:
            if not isinstance(document[name], dict):
                raise ConfigError(f"[{name}] must be a table")
            cfg.sections[name] = document[name]
    if has_phys:
        cfg.physical = parse_physical(document["physical"])
        if reduce:
            reduced = reduce_params(cfg.physical)
            if pump is not None:
                reduced = ReducedParams(reduced.r, reduced.B, reduced.C, reduced.tilt_scale, pump)
            cfg.params = reduced
    else:
        cfg.params = parse_reduced(document["reduced"], pump)
    return cfg


def load_config(path, reduce: bool = True) -> RunConfig:
    return build_config(load_document(path), reduce=reduce)
