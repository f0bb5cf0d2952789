"""Scenario configuration: JSON in, validated dataclass out.

Complex numbers are written as two-element ``[re, im]`` arrays. A minimal
reduced run looks like::

    {
      "mode": "reduced",
      "lattice": {"omega1": [1, 0], "omega2": [0, 1]},
      "initial": {"x": [[0, 0], [0.9, 0.8]], "alpha": [[0.2, 0.1], [-0.1, 0.05]]},
      "t_end": 0.5,
      "tol": 1e-11
    }
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigInvalid

__all__ = ["ScenarioConfig", "MODES", "load_config", "parse_complex"]

MODES = ("full", "reduced", "compare", "spectral", "selftest", "selftest-elliptic")
_KNOWN = {
    "mode", "lattice", "initial", "flow", "t_end", "tol", "samples", "eps", "eps_ladder",
    "rate_eps_ladder", "z_grid", "lambda_grid", "output", "seed", "stick_t_end", "description",
}


def parse_complex(v, where: str) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if (isinstance(v, (list, tuple)) and len(v) == 2
            and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v)):
        z = complex(v[0], v[1])
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ConfigInvalid(f"{where}: non-finite value")
        return z
    raise ConfigInvalid(f"{where}: expected [re, im], got {v!r}")


def _complex_list(v, where):
    if not isinstance(v, list) or not v:
        raise ConfigInvalid(f"{where}: expected a non-empty list of [re, im]")
    return np.array([parse_complex(c, f"{where}[{k}]") for k, c in enumerate(v)])


def _real(d, key, default=None, positive=True):
    v = d.get(key, default)
    if v is None:
        raise ConfigInvalid(f"missing required field {key!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigInvalid(f"{key}: expected a real number, got {v!r}")
    if positive and not v > 0:
        raise ConfigInvalid(f"{key}: must be positive, got {v}")
    return float(v)


@dataclass
class ScenarioConfig:
    mode: str
    omega1: complex = 1.0 + 0j
    omega2: complex = 1j
    x: np.ndarray | None = None
    p: np.ndarray | None = None
    alpha: np.ndarray | None = None
    flow: int = 3
    t_end: float = 1.0
    tol: float = 1e-10
    samples: int = 21
    eps: float | None = None
    eps_ladder: list[float] = field(default_factory=list)
    rate_eps_ladder: list[float] | None = None
    stick_t_end: float | None = None
    z_grid: list[complex] = field(default_factory=list)
    lambda_grid: list[complex] = field(default_factory=list)
    output: dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def is_reduced_initial(self) -> bool:
        return self.alpha is not None

    @property
    def prefix(self) -> str:
        return str(self.output.get("prefix", self.mode))

    @property
    def formats(self) -> list[str]:
        return list(self.output.get("formats", ["csv", "json"]))

    @classmethod
    def from_dict(cls, d: dict, mode: str | None = None) -> "ScenarioConfig":
        if not isinstance(d, dict):
            raise ConfigInvalid("config must be a JSON object")
        unknown = set(d) - _KNOWN
        if unknown:
            raise ConfigInvalid(f"unknown fields: {sorted(unknown)}")
        mode = mode or d.get("mode")
        if mode not in MODES:
            raise ConfigInvalid(f"mode must be one of {MODES[:5]}, got {mode!r}")
        if "mode" in d and d["mode"] != mode and not mode.startswith("selftest"):
            raise ConfigInvalid(f"config mode {d['mode']!r} conflicts with command {mode!r}")
        cfg = cls(mode=mode, raw=d)

        lat = d.get("lattice", {})
        if not isinstance(lat, dict):
            raise ConfigInvalid("lattice: expected an object with omega1, omega2")
        cfg.omega1 = parse_complex(lat.get("omega1", [1.0, 0.0]), "lattice.omega1")
        cfg.omega2 = parse_complex(lat.get("omega2", [0.0, 1.0]), "lattice.omega2")
        if cfg.omega1 == 0 or not (cfg.omega2 / cfg.omega1).imag > 0:
            raise ConfigInvalid("lattice: Im(omega2/omega1) must be positive")

        if "flow" in d:
            if d["flow"] not in (1, 2, 3) or isinstance(d["flow"], bool):
                raise ConfigInvalid(f"flow must be 1, 2 or 3, got {d['flow']!r}")
            cfg.flow = int(d["flow"])
        cfg.t_end = _real(d, "t_end", cfg.t_end)
        cfg.tol = _real(d, "tol", cfg.tol)
        if not 1e-14 <= cfg.tol <= 1e-3:
            raise ConfigInvalid(f"tol must lie in [1e-14, 1e-3], got {cfg.tol}")
        s = d.get("samples", cfg.samples)
        if isinstance(s, bool) or not isinstance(s, int) or s < 2:
            raise ConfigInvalid(f"samples must be an integer >= 2, got {s!r}")
        cfg.samples = s
        seed = d.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigInvalid(f"seed must be a non-negative integer, got {seed!r}")
        cfg.seed = seed
        if "eps" in d:
            cfg.eps = _real(d, "eps")
        for key in ("eps_ladder", "rate_eps_ladder"):
            if key in d:
                lad = d[key]
                if not isinstance(lad, list) or len(lad) < 2:
                    raise ConfigInvalid(f"{key}: expected a list of at least 2 reals")
                vals = [_real({"v": e}, "v") for e in lad]
                setattr(cfg, key, vals)
        if "stick_t_end" in d:
            cfg.stick_t_end = _real(d, "stick_t_end")
        for key in ("z_grid", "lambda_grid"):
            if key in d:
                setattr(cfg, key, list(_complex_list(d[key], key)))
        out = d.get("output", {})
        if not isinstance(out, dict):
            raise ConfigInvalid("output: expected an object")
        bad = set(out.get("formats", [])) - {"csv", "json"}
        if bad:
            raise ConfigInvalid(f"output.formats: unsupported {sorted(bad)}")
        cfg.output = out

        init = d.get("initial")
        if init is not None:
            if not isinstance(init, dict) or "x" not in init:
                raise ConfigInvalid("initial: expected an object with x and p or alpha")
            cfg.x = _complex_list(init["x"], "initial.x")
            if ("p" in init) == ("alpha" in init):
                raise ConfigInvalid("initial: give exactly one of p (full) or alpha (reduced)")
            other = "p" if "p" in init else "alpha"
            vals = _complex_list(init[other], f"initial.{other}")
            if vals.size != cfg.x.size:
                raise ConfigInvalid(f"initial: {cfg.x.size} positions but {vals.size} {other} values")
            setattr(cfg, other, vals)
        cfg._check_mode()
        return cfg

    def _check_mode(self):
        m = self.mode
        if m in ("full", "reduced", "compare") and self.x is None:
            raise ConfigInvalid(f"mode {m} needs an initial state")
        if m == "full" and self.is_reduced_initial and self.eps is None:
            raise ConfigInvalid("mode full with a reduced initial state needs eps for the embedding")
        if m in ("reduced", "compare", "spectral") and self.x is not None and not self.is_reduced_initial:
            raise ConfigInvalid(f"mode {m} needs a reduced initial state (x, alpha)")
        if m == "compare" and len(self.eps_ladder) < 3:
            raise ConfigInvalid("mode compare needs eps_ladder with at least 3 entries")
        if m == "spectral":
            if self.x is None:
                raise ConfigInvalid("mode spectral needs a reduced initial state")
            if not self.z_grid or not self.lambda_grid:
                raise ConfigInvalid("mode spectral needs z_grid and lambda_grid")
            if self.eps_ladder and len(self.eps_ladder) < 4:
                raise ConfigInvalid("spectral eps_ladder needs at least 4 entries")


def load_config(path, mode: str | None = None) -> ScenarioConfig:
    try:
        d = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigInvalid(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}") from exc
    return ScenarioConfig.from_dict(d, mode)
