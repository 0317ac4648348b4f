"""Run configuration: one flat key-value record covering the model,
data paths, and the training schedule.  Files are JSON objects with
exactly these keys; unknown keys are rejected."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, asdict

from .model import ModelConfig
from .trees import ConfigError


@dataclass
class RunConfig:
    # model
    mode: str = "binary"
    model_size: int = 300
    label_hidden: int = 200
    ori_hidden: int = 64
    chunk_hidden: int = 200
    cxt_depth: int = 6
    variant: str = "CV"
    signal_loss: str = "hinge"
    loss_weights: list = field(default_factory=lambda: [0.2, 0.3, 0.5])
    ori_encoder: str = "bilstm"
    dropout_recurrent: float = 0.2
    dropout_ffnn: float = 0.4
    # data
    train_path: str = ""
    dev_path: str = ""
    test_path: str = ""
    embedding_path: str = ""
    freeze_embeddings: bool = True
    relay_labels: str = "parent"
    max_train_len: int = 0          # 0 disables the length cut
    # schedule
    factor: str = "L85R15"
    batch_size: int = 80
    learning_rate: float = 1e-3
    max_epochs: int = 1000
    patience: int = 100
    eval_every: int = 1             # evaluations happen every N epochs
    warmup_epochs: int = 1
    decay_trigger: int = 15         # non-improving evals before decay starts
    decay_step: float = 0.01        # linear lr decrease per eval, as a fraction
    min_lr_factor: float = 0.1
    target_f1: float = 0.0          # stop once dev F1 reaches this, 0 disables
    seed: int = 1
    threads: int = 1

    def model_config(self, embed_dim=0):
        return ModelConfig(
            mode=self.mode, model_size=self.model_size,
            label_hidden=self.label_hidden, ori_hidden=self.ori_hidden,
            chunk_hidden=self.chunk_hidden, cxt_depth=self.cxt_depth,
            variant=self.variant, signal_loss=self.signal_loss,
            loss_weights=tuple(self.loss_weights), ori_encoder=self.ori_encoder,
            embed_dim=embed_dim, dropout_recurrent=self.dropout_recurrent,
            dropout_ffnn=self.dropout_ffnn, freeze_embeddings=self.freeze_embeddings)

    def to_dict(self):
        return asdict(self)


def run_config_from_dict(record):
    known = {f.name for f in fields(RunConfig)}
    unknown = set(record) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        config = RunConfig(**record)
    except TypeError as err:
        raise ConfigError(str(err)) from None
    _validate(config)
    return config


def load_run_config(path):
    with open(path, encoding="utf-8") as handle:
        try:
            record = json.load(handle)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}: {err}") from None
    if not isinstance(record, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return run_config_from_dict(record)


def _validate(config):
    if config.batch_size < 1:
        raise ConfigError("batch_size must be >= 1")
    if config.learning_rate <= 0:
        raise ConfigError("learning_rate must be positive")
    if config.patience < 1:
        raise ConfigError("patience must be >= 1")
    if config.relay_labels not in ("parent", "self"):
        raise ConfigError("relay_labels must be parent or self")
    config.model_config()  # delegates model-key validation
