"""Flat ``key = value`` configuration files.

One parameter per line, ``#`` starts a comment. Keys map onto
:class:`ModelParams` fields plus the efficacy description::

    r = 0.01
    delta = 0.01
    beta = 0.077
    gamma = 0.67
    zeta = 0.5
    m0 = 0.00019
    efficacy = isoelastic   # zero | isoelastic
    a = 0.1
    q = 0.46
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError, DomainError
from .model import EfficacyModel, ModelParams

PARAM_KEYS = ("r", "delta", "beta", "gamma", "zeta", "mu", "sigma", "m0")
EFFICACY_KEYS = ("efficacy", "a", "q")
REQUIRED = ("r", "delta", "beta", "gamma", "zeta")


def parse_config(text: str) -> tuple[ModelParams, EfficacyModel]:
    values: dict[str, float | str] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in PARAM_KEYS + EFFICACY_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        if key == "efficacy":
            if value not in ("zero", "isoelastic"):
                raise ConfigError(f"efficacy must be 'zero' or 'isoelastic', got {value!r}", lineno)
            values[key] = value
        else:
            try:
                values[key] = float(value)
            except ValueError:
                raise ConfigError(f"{key}: not a number: {value!r}", lineno) from None
        lines[key] = lineno

    missing = [k for k in REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")

    try:
        params = ModelParams(**{k: values[k] for k in PARAM_KEYS if k in values})
    except DomainError as exc:
        raise ConfigError(str(exc)) from None

    kind = values.get("efficacy", "isoelastic" if "a" in values else "zero")
    if kind == "zero":
        return params, EfficacyModel.zero()
    if "a" not in values or "q" not in values:
        raise ConfigError("isoelastic efficacy needs both 'a' and 'q'", lines.get("efficacy"))
    try:
        efficacy = EfficacyModel.isoelastic(values["a"], values["q"])
    except DomainError as exc:
        raise ConfigError(str(exc), lines["a"]) from None
    return params, efficacy


def load_config(path: str | Path) -> tuple[ModelParams, EfficacyModel]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def resolved_items(params: ModelParams, efficacy: EfficacyModel) -> dict[str, object]:
    items: dict[str, object] = {k: getattr(params, k) for k in PARAM_KEYS}
    if efficacy.kind == "custom":
        raise ConfigError("custom efficacy callbacks cannot be written to a config file")
    items["efficacy"] = "zero" if efficacy.kind == "zero" else "isoelastic"
    if efficacy.kind == "isoelastic":
        items["a"] = efficacy.a
        items["q"] = efficacy.q
    return items


def format_config(params: ModelParams, efficacy: EfficacyModel) -> str:
    return "".join(f"{k} = {v if isinstance(v, str) else repr(v)}\n"
                   for k, v in resolved_items(params, efficacy).items())
