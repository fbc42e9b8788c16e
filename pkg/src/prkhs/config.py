"""Experiment configuration: one JSON file, validated with line-aware errors."""

from __future__ import annotations

import copy
import json
import math
import re
from dataclasses import dataclass

from .kernels import KernelConfig, ProductKernelConfig
from .signals import RNG_ALGORITHM, MultisineConfig, StateSamplerConfig

__all__ = ["ConfigError", "ExperimentConfig", "DEFAULTS", "load_config", "apply_override"]


class ConfigError(ValueError):
    pass


# Desk-scale Van der Pol profile: full-size kernel widths and input range,
# reduced counts so the whole pipeline runs in seconds.
DEFAULTS: dict = {
    "system": {"name": "van_der_pol", "params": {"mu": 1.0, "Ts": 0.1}},
    "N": 10,
    "T_u": 60,
    "T_x": 20,
    "seed": 0,
    "product_kernel": {
        "ku": {"family": "hardy_rmq", "sigma": math.sqrt(2.0)},
        "kx": {"family": "hardy_rmq", "sigma": math.sqrt(0.4)},
    },
    "standard_kernel": {"family": "hardy_rmq", "sigma": math.sqrt(4.0)},
    "multisine": {"lo": -5.0, "hi": 5.0, "num_sinusoids": 25, "band": [0.0, 1.0], "seed": None},
    "hankel_stride": 1,
    "states": {"box_lo": [-2.5, -2.5], "box_hi": [2.5, 2.5], "seed": None},
    "jitter": 0.0,
    "explicit_cap": 4096,
    "threads": 1,
    "standard": {
        "data": "trajectory",
        "kernel": "standard",
        "num_points": None,
        "x0": [0.0, 0.0],
        "multisine_seed": None,
        "max_points": 5000,
    },
    "validation": {
        "n_rollouts": 50,
        "stride": None,
        "multisine_seed": None,
        "state_seed": None,
        "from_training": False,
    },
}

# offsets used to derive component seeds from the base seed
_SEED_OFFSETS = {
    ("multisine", "seed"): 1,
    ("states", "seed"): 2,
    ("standard", "multisine_seed"): 3,
    ("validation", "multisine_seed"): 4,
    ("validation", "state_seed"): 5,
}


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key '{where}'")
        if isinstance(base[key], dict) and key != "params":
            if not isinstance(val, dict):
                raise ConfigError(f"'{where}' must be an object")
            out[key] = _merge(base[key], val, where)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _line_of(text: str | None, dotted: str) -> str:
    """Best-effort ' (line N)' for the last key of a dotted path."""
    if not text:
        return ""
    key = dotted.split(".")[-1]
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    if not m:
        return ""
    return f" (line {text.count(chr(10), 0, m.start()) + 1})"


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict

    # -- accessors ------------------------------------------------------------
    @property
    def N(self) -> int:
        return self.raw["N"]

    @property
    def T_u(self) -> int:
        return self.raw["T_u"]

    @property
    def T_x(self) -> int:
        return self.raw["T_x"]

    @property
    def jitter(self) -> float:
        return float(self.raw["jitter"])

    @property
    def threads(self) -> int:
        return int(self.raw["threads"])

    @property
    def window(self) -> int:
        return self.N + 1

    def product_kernel(self) -> ProductKernelConfig:
        return ProductKernelConfig.from_dict(self.raw["product_kernel"])

    def standard_kernel(self) -> KernelConfig | ProductKernelConfig:
        if self.raw["standard"]["kernel"] == "product":
            return self.product_kernel()
        return KernelConfig.from_dict(self.raw["standard_kernel"])

    def system(self):
        from .systems import make_system

        s = self.raw["system"]
        return make_system(s["name"], **s.get("params", {}))

    def multisine(self, length: int, seed: int | None = None) -> MultisineConfig:
        ms = self.raw["multisine"]
        return MultisineConfig(
            length=length, lo=ms["lo"], hi=ms["hi"], num_sinusoids=ms["num_sinusoids"],
            band=tuple(ms["band"]), seed=ms["seed"] if seed is None else seed,
        )

    def states(self, count: int | None = None, seed: int | None = None) -> StateSamplerConfig:
        st = self.raw["states"]
        return StateSamplerConfig(
            count=self.T_x if count is None else count, box_lo=tuple(st["box_lo"]),
            box_hi=tuple(st["box_hi"]), seed=st["seed"] if seed is None else seed,
        )

    def to_manifest(self) -> dict:
        out = copy.deepcopy(self.raw)
        out["rng_algorithm"] = RNG_ALGORITHM
        return out


def _resolve_seeds(cfg: dict) -> None:
    base = cfg["seed"]
    for (section, key), off in _SEED_OFFSETS.items():
        if cfg[section][key] is None:
            cfg[section][key] = base + off
    if cfg["validation"]["stride"] is None:
        cfg["validation"]["stride"] = cfg["N"] + 1
    if cfg["standard"]["num_points"] is None:
        cfg["standard"]["num_points"] = cfg["T_u"] * cfg["T_x"]


def _validate(cfg: dict, text: str | None) -> None:
    def fail(path, msg):
        raise ConfigError(f"{path}{_line_of(text, path)}: {msg}")

    def want_int(path, v, lo=None):
        if isinstance(v, bool) or not isinstance(v, int):
            fail(path, f"expected an integer, got {v!r}")
        if lo is not None and v < lo:
            fail(path, f"must be >= {lo}, got {v}")

    want_int("N", cfg["N"], 1)
    want_int("T_u", cfg["T_u"], 1)
    want_int("T_x", cfg["T_x"], 1)
    want_int("seed", cfg["seed"], 0)
    want_int("hankel_stride", cfg["hankel_stride"], 1)
    want_int("explicit_cap", cfg["explicit_cap"], 1)
    want_int("threads", cfg["threads"], 1)
    if not isinstance(cfg["jitter"], (int, float)) or cfg["jitter"] < 0:
        fail("jitter", "must be a nonnegative number")
    for path, kc in (("product_kernel.ku", cfg["product_kernel"]["ku"]),
                     ("product_kernel.kx", cfg["product_kernel"]["kx"]),
                     ("standard_kernel", cfg["standard_kernel"])):
        try:
            KernelConfig.from_dict(kc)
        except (ValueError, KeyError, TypeError) as exc:
            fail(path, f"invalid kernel ({exc})")
    for (section, key) in _SEED_OFFSETS:
        want_int(f"{section}.{key}", cfg[section][key], 0)
    st = cfg["standard"]
    if st["data"] not in ("trajectory", "grid"):
        fail("standard.data", "must be 'trajectory' or 'grid'")
    if st["kernel"] not in ("standard", "product"):
        fail("standard.kernel", "must be 'standard' or 'product'")
    want_int("standard.num_points", st["num_points"], 1)
    want_int("standard.max_points", st["max_points"], 1)
    val = cfg["validation"]
    want_int("validation.n_rollouts", val["n_rollouts"], 1)
    want_int("validation.stride", val["stride"], 1)
    try:
        system = ExperimentConfig(cfg).system()
    except (ValueError, TypeError) as exc:
        fail("system", str(exc))
    try:
        ExperimentConfig(cfg).multisine(length=cfg["N"] + 1)
    except (ValueError, TypeError) as exc:
        fail("multisine", str(exc))
    try:
        sc = ExperimentConfig(cfg).states()
    except (ValueError, TypeError) as exc:
        fail("states", str(exc))
    if len(sc.box_lo) != system.state_dim:
        fail("states.box_lo", f"needs {system.state_dim} entries for system '{system.name}'")
    if len(st["x0"]) != system.state_dim:
        fail("standard.x0", f"needs {system.state_dim} entries for system '{system.name}'")


def apply_override(raw: dict, assignment: str) -> dict:
    """Apply ``a.b.c=value`` (value parsed as JSON, else kept as a string)."""
    if "=" not in assignment:
        raise ConfigError(f"override '{assignment}' must look like key.path=value")
    path, value = assignment.split("=", 1)
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    nested: dict = {}
    cur = nested
    keys = path.strip().split(".")
    for k in keys[:-1]:
        cur = cur.setdefault(k, {})
    cur[keys[-1]] = parsed
    return _deep_update(raw, nested)


def _deep_update(base: dict, upd: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in upd.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_update(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path=None, overrides=(), text: str | None = None) -> ExperimentConfig:
    """Read, merge over :data:`DEFAULTS`, resolve derived seeds and validate."""
    user: dict = {}
    if path is not None:
        with open(path) as fh:
            text = fh.read()
    if text is not None and text.strip():
        try:
            user = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        if not isinstance(user, dict):
            raise ConfigError("config root must be a JSON object")
    for ov in overrides:
        user = apply_override(user, ov)
    cfg = _merge(DEFAULTS, user)
    try:
        _resolve_seeds(cfg)
    except TypeError as exc:
        raise ConfigError(f"invalid seed or count: {exc}") from None
    _validate(cfg, text)
    return ExperimentConfig(cfg)
