"""Experiment configuration: YAML parsing, schema validation, presets, digest.

Config files use 1-based link numbers in ``schedules``. Validation errors
carry the line of the offending YAML node.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import jsonschema
import yaml

from .engine import DELIVERY_RATIO_MODES, RunSettings
from .env import REWARD_KINDS
from .network import TIE_BREAK_MODES, ConfigurationError, NetworkConfig
from .policies import POLICY_KINDS, PolicySpec

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["network", "policies"],
    "properties": {
        "network": {
            "type": "object",
            "additionalProperties": False,
            "required": ["mean_rewards"],
            "properties": {
                "mean_rewards": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "number", "minimum": 0, "maximum": 1},
                },
                "channel_on_probs": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                },
                "max_active": {"type": "integer", "minimum": 1},
                "schedules": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                },
            },
            "oneOf": [{"required": ["max_active"]}, {"required": ["schedules"]}],
        },
        "policies": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": list(POLICY_KINDS)},
                    "eta": {"type": "number", "minimum": 0},
                },
            },
        },
        "horizon": {"type": "integer", "minimum": 1},
        "replications": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "stride": {"type": ["integer", "null"], "minimum": 1},
        "reward_model": {"enum": list(REWARD_KINDS)},
        "tie_break": {"enum": list(TIE_BREAK_MODES)},
        "delivery_ratio": {"enum": list(DELIVERY_RATIO_MODES)},
        "output": {"type": "string"},
    },
}


class ConfigError(ConfigurationError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.message = message
        self.line = line
        self.source = source
        super().__init__(str(self))

    def __str__(self):
        where = self.source or "<config>"
        if self.line is not None:
            where = f"{where}:{self.line}"
        return f"{where}: {self.message}"


@dataclass
class ExperimentConfig:
    mean_rewards: list[float]
    channel_on_probs: list[float] | None = None
    max_active: int | None = None
    schedules: list[list[int]] | None = None
    policies: list[PolicySpec] = field(default_factory=list)
    horizon: int = 30_000
    replications: int = 100
    seed: int = 1
    stride: int | None = None
    reward_model: str = "bernoulli"
    tie_break: str = "lowest-index"
    delivery_ratio: str = "delivered"
    output: str = "results"

    def network(self) -> NetworkConfig:
        schedules = None
        if self.schedules is not None:
            schedules = [[i - 1 for i in s] for s in self.schedules]
        return NetworkConfig.from_vectors(
            self.mean_rewards, self.channel_on_probs, max_active=self.max_active, schedules=schedules
        )

    def settings(self) -> RunSettings:
        return RunSettings(
            reward_model=self.reward_model,
            tie_break=self.tie_break,
            stride=self.stride,
            delivery_ratio=self.delivery_ratio,
        )

    def to_mapping(self) -> dict:
        net = {"mean_rewards": list(self.mean_rewards)}
        if self.channel_on_probs is not None:
            net["channel_on_probs"] = list(self.channel_on_probs)
        if self.max_active is not None:
            net["max_active"] = self.max_active
        else:
            net["schedules"] = [list(s) for s in self.schedules]
        pols = []
        for p in self.policies:
            entry = {"kind": p.kind}
            if p.eta is not None:
                entry["eta"] = p.eta
            pols.append(entry)
        return {
            "network": net,
            "policies": pols,
            "horizon": self.horizon,
            "replications": self.replications,
            "seed": self.seed,
            "stride": self.stride,
            "reward_model": self.reward_model,
            "tie_break": self.tie_break,
            "delivery_ratio": self.delivery_ratio,
            "output": self.output,
        }

    def digest(self) -> str:
        return config_digest(self.to_mapping())

    def dump(self) -> str:
        return yaml.safe_dump(self.to_mapping(), sort_keys=False)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return from_mapping(replace(self, **kw).to_mapping(), source="<overrides>")


def config_digest(mapping: dict) -> str:
    """Content hash of everything that affects results (the output location does not)."""
    mapping = {k: v for k, v in mapping.items() if k != "output"}
    canonical = json.dumps(mapping, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canonical.encode()).hexdigest()


def _line_of(node, path) -> int | None:
    """1-based line of the YAML node at ``path``, or of its deepest existing ancestor."""
    if node is None:
        return None
    line = node.start_mark.line + 1
    for key in path:
        child = None
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                if k.value == key:
                    child = v
                    line = k.start_mark.line + 1
                    break
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            child = node.value[key]
            line = child.start_mark.line + 1
        if child is None:
            break
        node = child
    return line


def _fmt_path(path) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def _semantic_checks(raw: dict, root, source) -> None:
    def fail(path, msg):
        raise ConfigError(f"{_fmt_path(path)}: {msg}", _line_of(root, path), source)

    net = raw["network"]
    n = len(net["mean_rewards"])
    probs = net.get("channel_on_probs")
    if probs is not None and len(probs) != n:
        fail(["network", "channel_on_probs"], f"has {len(probs)} entries but there are {n} links")
    if net.get("max_active") is not None and net["max_active"] > n:
        fail(["network", "max_active"], f"{net['max_active']} exceeds the number of links ({n})")
    for i, s in enumerate(net.get("schedules") or []):
        for j, link in enumerate(s):
            if link > n:
                fail(["network", "schedules", i, j], f"link {link} does not exist (links are 1..{n})")
    for i, p in enumerate(raw["policies"]):
        if p["kind"] == "laes" and "eta" not in p:
            fail(["policies", i], "laes needs an eta")
        if p["kind"] != "laes" and "eta" in p:
            fail(["policies", i, "eta"], f"policy {p['kind']!r} takes no eta")
        if p["kind"] == "round-robin" and net.get("max_active") != 1:
            fail(["policies", i], "round-robin requires max_active: 1")


def from_mapping(raw, root=None, source=None) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping", _line_of(root, []), source)
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        path = list(e.absolute_path)
        raise ConfigError(f"{_fmt_path(path)}: {e.message}", _line_of(root, path), source)
    _semantic_checks(raw, root, source)
    net = raw["network"]
    cfg = ExperimentConfig(
        mean_rewards=[float(x) for x in net["mean_rewards"]],
        channel_on_probs=None if net.get("channel_on_probs") is None else [float(x) for x in net["channel_on_probs"]],
        max_active=net.get("max_active"),
        schedules=None if net.get("schedules") is None else [list(s) for s in net["schedules"]],
        policies=[PolicySpec(p["kind"], None if "eta" not in p else float(p["eta"])) for p in raw["policies"]],
    )
    for key in ("horizon", "replications", "seed", "stride"):
        if raw.get(key) is not None:
            setattr(cfg, key, int(raw[key]))
    for key in ("reward_model", "tie_break", "delivery_ratio", "output"):
        if key in raw:
            setattr(cfg, key, raw[key])
    return cfg


def loads(text: str, source: str | None = None) -> ExperimentConfig:
    try:
        root = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          None if mark is None else mark.line + 1, source) from exc
    return from_mapping(raw, root, source)


def load(path) -> ExperimentConfig:
    path = Path(path)
    return loads(path.read_text(), str(path))


DEFAULT_ETAS = (0, 10, 50, 100, 200)


def _default_policies() -> list[PolicySpec]:
    return [PolicySpec("ucb")] + [PolicySpec.laes(e) for e in DEFAULT_ETAS]


PRESETS = {
    # fully connected, non-fading, 5 links
    "paper-1": lambda: ExperimentConfig(
        mean_rewards=[0.9, 0.8, 0.5, 0.7, 0.2],
        max_active=1,
        policies=_default_policies(),
    ),
    # 10 links with ON-OFF fading, at most two active per slot
    "paper-2": lambda: ExperimentConfig(
        mean_rewards=[0.9, 0.8, 0.4, 0.7, 0.5, 0.6, 0.75, 0.65, 0.5, 0.4],
        channel_on_probs=[0.8, 0.7, 0.6, 0.9, 0.2, 0.5, 0.8, 0.9, 0.7, 0.85],
        max_active=2,
        policies=_default_policies(),
    ),
}


def preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown setup {name!r}; choose from {sorted(PRESETS)}") from None
