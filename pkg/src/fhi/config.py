"""Flat ``key = value`` run configuration for ``fhi simulate``.

Blank lines and ``#`` comments are ignored. Unknown keys are rejected. Values
from the command line override values from the file; every resolved value,
defaults included, is echoed into the run report.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from fhi.errors import ConfigError
from fhi.fd_scheme import SchemeParams
from fhi.grid import GridSpec
from fhi.inclusion import SelectorPolicy

__all__ = ["RunConfig", "SCHEMA", "load_config", "parse_config_text"]

# key -> (type, default); None default means required
SCHEMA: dict[str, tuple[type, object]] = {
    "alpha": (float, 0.8),
    "lambda": (float, 0.1),
    "sigma": (float, 0.5),
    "k1": (float, 0.1),
    "k2": (float, 0.5),
    "m_star": (int, 15),
    "scheme_variant": (str, "paper_literal"),
    "absorption_sign": (str, "sink"),
    "ic": (str, "discrete_delta"),
    "ic_width": (float, 1.0),
    "noise_scaling": (str, "paper_literal"),
    "L": (float, 100.0),
    "N_x": (int, 200),
    "T": (float, 30.0),
    "N_t": (int, 3000),
    "selector_mode": (str, "uniform_per_step"),
    "selector_seed": (int, None),
    "selector_constant": (float, None),
    "seed": (int, 0),
    "override_stability": (bool, False),
}


def _convert(key: str, raw) -> object:
    typ, _ = SCHEMA[key]
    if raw is None or not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if typ is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if typ is int:
            f = float(text)
            if f != int(f):
                raise ValueError(text)
            return int(f)
        return typ(text)
    except ValueError:
        raise ConfigError(f"cannot read {text!r} as {typ.__name__}", field=key) from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'", field=None)
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key", field=key)
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key", field=key)
        values[key] = _convert(key, raw)
    return values


@dataclass(frozen=True)
class RunConfig:
    values: dict

    @property
    def scheme(self) -> SchemeParams:
        v = self.values
        return SchemeParams(alpha=v["alpha"], lam=v["lambda"], sigma=v["sigma"], k1=v["k1"],
                            k2=v["k2"], m_star=v["m_star"], scheme_variant=v["scheme_variant"],
                            absorption_sign=v["absorption_sign"], ic=v["ic"],
                            ic_width=v["ic_width"], noise_scaling=v["noise_scaling"])

    @property
    def grid(self) -> GridSpec:
        v = self.values
        return GridSpec(L=v["L"], N_x=v["N_x"], T=v["T"], N_t=v["N_t"])

    @property
    def policy(self) -> SelectorPolicy:
        v = self.values
        try:
            return SelectorPolicy(mode=v["selector_mode"], rng_seed=v["selector_seed"],
                                  constant=v["selector_constant"])
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), field="selector_mode") from None

    @property
    def seed(self) -> int:
        return self.values["seed"]

    def echo(self) -> str:
        """Config text that reproduces this run."""
        lines = [f"{k} = {v}" for k, v in self.values.items() if v is not None]
        return "\n".join(lines) + "\n"


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Merge defaults, an optional config file and overrides; validate everything."""
    values = {k: d for k, (_, d) in SCHEMA.items()}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text(encoding="utf-8"), str(path)))
    for k, v in (overrides or {}).items():
        if k not in SCHEMA:
            raise ConfigError("unknown key", field=k)
        if v is not None:
            values[k] = _convert(k, v)
    if values["seed"] < 0:
        raise ConfigError("must be >= 0", field="seed")
    if values["selector_seed"] is None:
        values["selector_seed"] = values["seed"]
    cfg = RunConfig(values)
    # construct once so that errors surface before any work starts
    cfg.scheme, cfg.grid, cfg.policy  # noqa: B018
    return cfg
