"""Strict experiment config files.

TOML with three core sections (model / sim / outputs) plus optional
subcommand sections (feller / verify).  Unknown sections or keys are
rejected outright: a typo must fail loudly, not silently fall back to a
default.
"""

from __future__ import annotations

import math

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import model, simulate
from .errors import ConfigError, ParameterError

_MODEL_KEYS = {"n", "delta", "family", "p", "q", "c", "x_switch", "initial_weights"}
_SIM_KEYS = {"dt", "horizon_T", "n_paths", "seed", "record_stride", "scheme", "zero_noise"}
_OUTPUT_KEYS = {"directory", "formats", "sample_paths"}
_FELLER_KEYS = {"kind", "drift", "diffusion_sq", "alpha", "beta", "x0"}
_VERIFY_KEYS = {"p_values", "q_values", "consistency"}
_SECTIONS = {"model", "sim", "outputs", "feller", "verify"}

_FORMATS = {"csv", "json", "svg"}


@dataclass
class OutputSpec:
    directory: Optional[Path] = None
    formats: tuple = ("json",)
    sample_paths: int = 10


@dataclass
class FellerSpec:
    kind: str = "weight2"
    drift: Optional[str] = None
    diffusion_sq: Optional[str] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    x0: Optional[float] = None


@dataclass
class VerifySpec:
    p_values: list = field(default_factory=list)
    q_values: list = field(default_factory=list)
    consistency: bool = True


@dataclass
class ExperimentConfig:
    market: simulate.MarketConfig
    sim: simulate.SimParams
    outputs: OutputSpec
    feller: Optional[FellerSpec] = None
    verify: Optional[VerifySpec] = None


def _check_keys(section: str, data: dict, allowed: set) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {sorted(unknown)}")


def _require(data: dict, section: str, key: str):
    if key not in data:
        raise ConfigError(f"missing required key {key!r} in [{section}]")
    return data[key]


def build_spec(mdl: dict) -> model.DriftSpec:
    family = mdl.get("family", "power")
    delta = float(_require(mdl, "model", "delta"))
    try:
        if family == "power":
            fam = model.PowerLaw(p=float(_require(mdl, "model", "p")),
                                 q=float(_require(mdl, "model", "q")))
        elif family == "patched":
            fam = model.PatchedPowerLaw(
                p=float(_require(mdl, "model", "p")),
                q=float(_require(mdl, "model", "q")),
                c=float(mdl.get("c", 0.5)),
                x_switch=float(mdl.get("x_switch", 0.1)),
            )
        else:
            raise ConfigError(f"unknown family {family!r} (expected 'power' or 'patched')")
        return model.DriftSpec(delta=delta, family=fam)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc
    return parse_config(data)


def parse_config(data: dict) -> ExperimentConfig:
    unknown = set(data) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown section(s): {sorted(unknown)}")
    if "model" not in data:
        raise ConfigError("missing [model] section")

    mdl = data["model"]
    _check_keys("model", mdl, _MODEL_KEYS)
    spec = build_spec(mdl)
    n = _require(mdl, "model", "n")
    if not isinstance(n, int):
        raise ConfigError(f"model.n must be an integer, got {n!r}")
    initial = mdl.get("initial_weights")

    sim_data = data.get("sim", {})
    _check_keys("sim", sim_data, _SIM_KEYS)
    try:
        market = simulate.MarketConfig(n=n, spec=spec, initial_weights=initial)
        sim = simulate.SimParams(**sim_data)
    except (ParameterError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    out_data = data.get("outputs", {})
    _check_keys("outputs", out_data, _OUTPUT_KEYS)
    formats = tuple(out_data.get("formats", ["json"]))
    bad = set(formats) - _FORMATS
    if bad:
        raise ConfigError(f"unknown output format(s): {sorted(bad)}")
    outputs = OutputSpec(
        directory=Path(out_data["directory"]) if "directory" in out_data else None,
        formats=formats,
        sample_paths=int(out_data.get("sample_paths", 10)),
    )
    if outputs.sample_paths < 0:
        raise ConfigError("outputs.sample_paths must be >= 0")

    feller_spec = None
    if "feller" in data:
        fd = data["feller"]
        _check_keys("feller", fd, _FELLER_KEYS)
        kind = fd.get("kind", "weight2")
        if kind not in ("weight2", "custom"):
            raise ConfigError(f"feller.kind must be 'weight2' or 'custom', got {kind!r}")
        feller_spec = FellerSpec(
            kind=kind,
            drift=fd.get("drift"),
            diffusion_sq=fd.get("diffusion_sq"),
            alpha=_maybe_float(fd.get("alpha")),
            beta=_maybe_float(fd.get("beta")),
            x0=_maybe_float(fd.get("x0")),
        )
        if kind == "custom":
            for key in ("drift", "diffusion_sq", "alpha", "beta", "x0"):
                if getattr(feller_spec, key) is None:
                    raise ConfigError(f"feller.kind='custom' requires key {key!r}")

    verify_spec = None
    if "verify" in data:
        vd = data["verify"]
        _check_keys("verify", vd, _VERIFY_KEYS)
        p_values = [float(v) for v in vd.get("p_values", [])]
        if not p_values:
            raise ConfigError("verify.p_values must be a non-empty list")
        fam = spec.family
        default_q = [fam.q] if isinstance(fam, (model.PowerLaw, model.PatchedPowerLaw)) else []
        q_values = [float(v) for v in vd.get("q_values", default_q)]
        if not q_values:
            raise ConfigError("verify.q_values must be a non-empty list")
        verify_spec = VerifySpec(
            p_values=p_values,
            q_values=q_values,
            consistency=bool(vd.get("consistency", True)),
        )

    return ExperimentConfig(
        market=market, sim=sim, outputs=outputs, feller=feller_spec, verify=verify_spec
    )


def _maybe_float(v):
    if v is None:
        return None
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf"):
            return math.inf
        if s == "-inf":
            return -math.inf
        raise ConfigError(f"expected a number or 'inf', got {v!r}")
    return float(v)
