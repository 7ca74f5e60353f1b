"""Flat key=value run configuration.

A config file holds `key = value` lines with `#` comments. Unknown keys are
rejected; missing keys take the documented defaults below. CLI overrides
arrive as `--set key=value` pairs and go through the same validation.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .adapt import METHODS, CandidatePool, default_pool, dual_pool, pool_from_values
from .engine import LINEAGE_FORK, LINEAGE_PERSISTENT, EngineConfig
from .selection import STRATEGIES
from .stream import StreamSpec


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: '{text}'")


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


# name -> (parser, default, help)
KEYS: dict[str, tuple] = {
    # stream generator
    "num_classes": (int, 5, "number of classes C"),
    "input_dim": (int, 16, "input dimension D"),
    "class_separation": (float, 6.0, "pairwise distance between class means"),
    "num_domains": (int, 8, "number of stream domains M"),
    "batches_per_domain": (int, 15, "batches per domain T_d"),
    "batch_size": (int, 200, "stream batch size N_b"),
    "corruption_strength": (float, 1.0, "domain corruption magnitude (0 disables)"),
    "seed": (int, 0, "master seed for the whole run"),
    # classifier / pretraining
    "hidden_dim": (int, 32, "hidden layer width H"),
    "n_per_class": (int, 200, "source examples per class"),
    "pretrain_lr": (float, 0.5, "full-batch gradient-descent learning rate"),
    "pretrain_max_epochs": (int, 2000, "pretraining epoch cap"),
    # engine
    "method": (str, "tent", "adaptation method: tent | pl"),
    "pool": (_float_list, (), "override hyper-parameter grid (comma separated)"),
    "dual": (_bool, False, "use the joint lr x threshold grid (pl only)"),
    "label_rate": (float, 0.03, "fraction of each intervention batch to annotate"),
    "intervention_every": (int, 1, "annotate every N-th batch"),
    "ema_beta": (float, 0.5, "validation-loss smoothing momentum"),
    "adapt_steps": (int, 1, "unsupervised gradient steps per candidate per batch"),
    "adapt_lr": (float, 0.1, "unsupervised learning rate for pl entries"),
    "supervised_lr": (float, 0.1, "supervised refinement learning rate"),
    "supervised_steps": (int, 3, "supervised refinement steps per intervention batch"),
    "supervised_full_stats": (_bool, True, "normalize labeled subset with full-batch statistics"),
    "candidate_lineage": (str, LINEAGE_FORK, "fork | persistent"),
    "use_anchor": (_bool, True, "add the source-deviation term to the score"),
    "use_ema": (_bool, True, "smooth validation losses across batches"),
    "use_supervised": (_bool, True, "refine the winner on the labeled subset"),
    "selection_strategy": (str, "kmargin", "kmargin | random | entropy | margin_only"),
    "record_timing": (_bool, True, "measure wall-clock timings (off for byte-stable CSVs)"),
    # harness / io
    "run_label": (str, "HILTTA", "row label in results CSVs"),
    "out_dir": (str, "out", "output directory"),
    "model_path": (str, "", "checkpoint path (defaults to <out_dir>/model.txt)"),
    # annotation service
    "port": (int, 8799, "annotation service port"),
    "timeout_s": (float, 600.0, "seconds to wait for human labels per batch"),
    "fallback": (str, "oracle", "on timeout: oracle | skip_supervised"),
    "static_dir": (str, "frontend/dist", "console assets served at /"),
    "linger_s": (float, 3.0, "keep serving after the run finishes"),
}


@dataclass
class RunConfig:
    values: dict

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def stream_spec(self) -> StreamSpec:
        v = self.values
        return StreamSpec(
            num_classes=v["num_classes"],
            input_dim=v["input_dim"],
            class_separation=v["class_separation"],
            num_domains=v["num_domains"],
            batches_per_domain=v["batches_per_domain"],
            batch_size=v["batch_size"],
            corruption_strength=v["corruption_strength"],
            seed=v["seed"],
        )

    def candidate_pool(self) -> CandidatePool:
        v = self.values
        if v["dual"]:
            if v["method"] != "pl":
                raise ConfigError("dual selection is only defined for method = pl")
            return dual_pool()
        if v["pool"]:
            return pool_from_values(v["method"], list(v["pool"]))
        return default_pool(v["method"])

    def engine_config(self) -> EngineConfig:
        v = self.values
        return EngineConfig(
            method=v["method"],
            pool=self.candidate_pool(),
            label_rate=v["label_rate"],
            intervention_every=v["intervention_every"],
            ema_beta=v["ema_beta"],
            adapt_steps=v["adapt_steps"],
            adapt_lr=v["adapt_lr"],
            supervised_lr=v["supervised_lr"],
            supervised_steps=v["supervised_steps"],
            supervised_full_stats=v["supervised_full_stats"],
            candidate_lineage=v["candidate_lineage"],
            use_anchor=v["use_anchor"],
            use_ema=v["use_ema"],
            use_supervised=v["use_supervised"],
            selection_strategy=v["selection_strategy"],
            seed=v["seed"],
            record_timing=v["record_timing"],
        )

    def resolved_model_path(self) -> Path:
        if self.values["model_path"]:
            return Path(self.values["model_path"])
        return Path(self.values["out_dir"]) / "model.txt"


def _parse_pair(key: str, raw: str) -> tuple[str, object]:
    key = key.strip()
    if key not in KEYS:
        raise ConfigError(f"unknown config key '{key}'")
    parser = KEYS[key][0]
    try:
        return key, parser(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for '{key}': {exc}") from None


def _validate(values: dict) -> dict:
    if values["method"] not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}")
    if values["candidate_lineage"] not in (LINEAGE_FORK, LINEAGE_PERSISTENT):
        raise ConfigError("candidate_lineage must be fork or persistent")
    if values["selection_strategy"] not in STRATEGIES:
        raise ConfigError(f"selection_strategy must be one of {STRATEGIES}")
    if values["fallback"] not in ("oracle", "skip_supervised"):
        raise ConfigError("fallback must be oracle or skip_supervised")
    return values


def load_config(path: str | None = None, overrides: list[str] | None = None) -> RunConfig:
    values = {name: default for name, (_, default, _) in KEYS.items()}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                stripped = line.split("#", 1)[0].strip()
                if not stripped:
                    continue
                if "=" not in stripped:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, raw = stripped.split("=", 1)
                try:
                    key, parsed = _parse_pair(key, raw)
                except ConfigError as exc:
                    raise ConfigError(f"{path}:{lineno}: {exc}") from None
                values[key] = parsed
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set needs key=value, got '{item}'")
        key, raw = item.split("=", 1)
        key, parsed = _parse_pair(key, raw)
        values[key] = parsed
    return RunConfig(_validate(values))


def describe_keys() -> str:
    lines = []
    for name, (_, default, help_) in KEYS.items():
        lines.append(f"{name:20s} default={default!r:18} {help_}")
    return "\n".join(lines)
