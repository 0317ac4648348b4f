"""Training loop: dynamic factor sampling, dev evaluation, early stopping,
and the warmup/plateau learning-rate schedule."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .binarize import binarize, parse_factor_policy, sample_factor
from .model import CombinatorModel, build_vocabs, train_step
from .nn import Adam
from .scoring import corpus_score
from .stratify import stratify_binary, stratify_multi
from .trees import preprocess_corpus

LOG_COLUMNS = ("epoch", "loss_tag", "loss_label", "loss_signal",
               "loss_total", "dev_f1", "lr", "seconds")


@dataclass
class EpochRow:
    epoch: int
    loss_tag: float
    loss_label: float
    loss_signal: float
    loss_total: float
    dev_f1: float
    lr: float
    seconds: float

    def tsv(self):
        return "\t".join([str(self.epoch)]
                         + [f"{v:.6f}" for v in (self.loss_tag, self.loss_label,
                                                 self.loss_signal, self.loss_total)]
                         + [f"{self.dev_f1:.2f}", f"{self.lr:.6g}",
                            f"{self.seconds:.2f}"])


@dataclass
class TrainResult:
    history: list = field(default_factory=list)
    best_f1: float = 0.0
    best_epoch: int = -1
    stopped_early: bool = False


class Trainer:
    """Holds preprocessed trees, cached stratifications, and the model."""

    def __init__(self, config, train_trees, dev_trees, embeddings=None):
        self.config = config
        self.train_trees, dropped = preprocess_corpus(train_trees)
        if config.max_train_len:
            self.train_trees = [t for t in self.train_trees
                                if len(t.words()) <= config.max_train_len]
        self.dev_trees, _ = preprocess_corpus(dev_trees)
        self.dropped = dropped
        self.policy = parse_factor_policy(config.factor)

        if config.mode == "binary":
            # cache one stratification per factor the policy can draw
            self.cache = {
                factor: [stratify_binary(binarize(t, factor), config.relay_labels)
                         for t in self.train_trees]
                for factor in self.policy.factors
            }
            all_samples = [s for samples in self.cache.values() for s in samples]
        else:
            self.cache = {None: [stratify_multi(t, config.relay_labels)
                                 for t in self.train_trees]}
            all_samples = self.cache[None]

        words, tags, labels = build_vocabs(all_samples)
        matrix = None
        embed_dim = 0
        if embeddings is not None:
            matrix = embeddings.matrix_for(words)
            embed_dim = embeddings.dim
        model_cfg = config.model_config(embed_dim=embed_dim)
        if embeddings is not None:
            model_cfg.freeze_embeddings = embeddings.frozen
        self.model = CombinatorModel(model_cfg, words, tags, labels,
                                     seed=config.seed, embedding_matrix=matrix)
        self.optimizer = Adam(self.model.store, lr=config.learning_rate)

    def epoch_samples(self, epoch):
        """Per-epoch sample list; binary mode resamples a factor per sentence."""
        rng = np.random.default_rng((self.config.seed, epoch))
        if self.config.mode == "binary":
            samples = []
            for i in range(len(self.train_trees)):
                factor = sample_factor(self.policy, rng)
                samples.append(self.cache[factor][i])
        else:
            samples = list(self.cache[None])
        order = rng.permutation(len(samples))
        return [samples[i] for i in order], rng

    def learning_rate(self, epoch, stalled_evals):
        base = self.config.learning_rate
        if epoch < self.config.warmup_epochs:
            return base * (epoch + 1) / (self.config.warmup_epochs + 1)
        over = stalled_evals - self.config.decay_trigger
        if over <= 0:
            return base
        return base * max(self.config.min_lr_factor,
                          1.0 - self.config.decay_step * over)

    def evaluate(self, trees=None):
        trees = self.dev_trees if trees is None else trees
        outcomes = [self.model.parse(t.words()) for t in trees]
        return corpus_score(trees, outcomes).f1

    def train(self, log=None, max_seconds=0.0):
        """Run until early stopping, the epoch cap, ``target_f1``, or the
        optional wall-clock budget; restores the best parameters at the end."""
        config = self.config
        result = TrainResult()
        best_state = None
        stalled = 0
        start = time.time()
        if log:
            print("\t".join(LOG_COLUMNS), file=log, flush=True)
        for epoch in range(config.max_epochs):
            tick = time.time()
            lr = self.learning_rate(epoch, stalled)
            samples, rng = self.epoch_samples(epoch)
            sums = {"tag": 0.0, "label": 0.0, "signal": 0.0, "total": 0.0}
            batches = 0
            for lo in range(0, len(samples), config.batch_size):
                batch = samples[lo:lo + config.batch_size]
                losses = train_step(self.model, batch, self.optimizer, rng, lr=lr)
                for key in sums:
                    sums[key] += losses[key]
                batches += 1
            dev_f1 = float("nan")
            if (epoch + 1) % config.eval_every == 0:
                dev_f1 = self.evaluate()
                if dev_f1 > result.best_f1 or result.best_epoch < 0:
                    result.best_f1 = dev_f1
                    result.best_epoch = epoch
                    best_state = self.model.store.state_dict()
                    stalled = 0
                else:
                    stalled += 1
            row = EpochRow(epoch, *(sums[k] / max(batches, 1) for k in
                                    ("tag", "label", "signal", "total")),
                           dev_f1, lr, time.time() - tick)
            result.history.append(row)
            if log:
                print(row.tsv(), file=log, flush=True)
            if config.target_f1 and result.best_f1 >= config.target_f1:
                break
            if stalled >= config.patience:
                result.stopped_early = True
                break
            if max_seconds and time.time() - start > max_seconds:
                break
        if best_state is not None:
            self.model.store.load_state(best_state)
        return result
