"""The combinatory parser: layer-wise classification plus vector composition.

One shared encoder contextualizes word embeddings; per layer a small head
predicts node labels, and a combine head predicts binary orientations (or
chunk boundaries), after which adjacent vectors are composed into the next,
shorter layer until one vector remains.  Training is teacher-forced: gold
signals shape the layers while the predicted signals only feed the loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from . import autodiff as ad
from . import nn
from .binarize import is_sub_label
from .recover import binary_groups, chunk_groups, recover_tree
from .trees import ConfigError

COMPOSE_VARIANTS = ("ADD", "NS", "NV", "CS", "CV", "BV")


@dataclass
class ModelConfig:
    mode: str = "binary"
    model_size: int = 300
    label_hidden: int = 200
    ori_hidden: int = 64
    chunk_hidden: int = 200
    cxt_depth: int = 6
    variant: str = "CV"
    signal_loss: str = "hinge"
    loss_weights: tuple = (0.2, 0.3, 0.5)
    ori_encoder: str = "bilstm"
    embed_dim: int = 0  # 0 means model_size
    dropout_recurrent: float = 0.2
    dropout_ffnn: float = 0.4
    freeze_embeddings: bool = False

    def __post_init__(self):
        if self.mode not in ("binary", "multi"):
            raise ConfigError(f"unknown mode: {self.mode}")
        if self.variant not in COMPOSE_VARIANTS:
            raise ConfigError(f"unknown compose variant: {self.variant}")
        if self.signal_loss not in ("hinge", "bce"):
            raise ConfigError(f"unknown signal loss: {self.signal_loss}")
        if self.ori_encoder not in ("bilstm", "ffnn"):
            raise ConfigError(f"unknown orientation encoder: {self.ori_encoder}")
        self.loss_weights = tuple(float(w) for w in self.loss_weights)
        if len(self.loss_weights) != 3 or any(w < 0 for w in self.loss_weights):
            raise ConfigError(f"bad loss weights: {self.loss_weights}")
        for name in ("model_size", "label_hidden", "ori_hidden", "chunk_hidden"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")

    @property
    def input_dim(self):
        return self.embed_dim or self.model_size

    def to_dict(self):
        out = asdict(self)
        out["loss_weights"] = list(self.loss_weights)
        return out

    @classmethod
    def from_dict(cls, record):
        return cls(**{k: tuple(v) if k == "loss_weights" else v
                      for k, v in record.items()})


class Vocab:
    """Token-to-index map; ``unk`` (when set) catches unseen tokens."""

    def __init__(self, tokens, unk=None):
        self.itos = ([unk] if unk else []) + [t for t in tokens if t != unk]
        self.stoi = {t: i for i, t in enumerate(self.itos)}
        self.unk = unk

    def index(self, token):
        idx = self.stoi.get(token)
        if idx is None:
            if self.unk is None:
                raise KeyError(f"token {token!r} not in vocabulary")
            return self.stoi[self.unk]
        return idx

    def __len__(self):
        return len(self.itos)


UNK = "<unk>"


def build_vocabs(samples):
    """Word/tag/label vocabularies from stratified training samples."""
    words, tags, labels = set(), set(), set()
    for sample in samples:
        words.update(sample.words)
        tags.update(sample.tags)
        for layer in sample.labels:
            labels.update(layer)
    return (Vocab(sorted(words), unk=UNK),
            Vocab(sorted(tags)),
            Vocab(sorted(labels)))


@dataclass
class LayerState:
    """Working state of one parsed layer."""

    vectors: object                 # (n_j, model_size) tensor
    categories: list                # per node: constituent label or POS
    spans: list                     # per node: (start, end) word offsets


@dataclass
class ComposeResult:
    vectors: object
    predicted: list                 # raw thresholded signal vector
    groups: list
    loss: object = None
    signal_count: int = 0
    weights: list = field(default_factory=list)  # per group: member weight shares
    stalled: bool = False


class CombinatorModel:
    """Model parameters plus the forward passes for training and parsing."""

    def __init__(self, config, word_vocab, tag_vocab, label_vocab,
                 seed=0, embedding_matrix=None):
        self.config = config
        self.words = word_vocab
        self.tags = tag_vocab
        self.labels = label_vocab
        self.store = nn.ParamStore()
        rng = np.random.default_rng(seed)
        size = config.model_size

        if embedding_matrix is not None:
            if embedding_matrix.shape != (len(word_vocab), config.input_dim):
                raise ConfigError(f"embedding matrix {embedding_matrix.shape} does not "
                                  f"match vocab {len(word_vocab)} x dim {config.input_dim}")
            self.embed = self.store.add("embed/table", embedding_matrix,
                                        trainable=not config.freeze_embeddings)
        else:
            self.embed = self.store.create("embed/table",
                                           (len(word_vocab), config.input_dim),
                                           config.input_dim, rng,
                                           trainable=not config.freeze_embeddings)
        self.cxt = nn.StackedBiLSTM(self.store, "cxt", config.input_dim, size,
                                    config.cxt_depth, rng)
        self.shared = nn.Dense(self.store, "head/shared", size, config.label_hidden, rng)
        self.tag_head = nn.Dense(self.store, "head/tag", config.label_hidden,
                                 len(tag_vocab), rng)
        self.label_head = nn.Dense(self.store, "head/label", config.label_hidden,
                                   len(label_vocab), rng)

        if config.mode == "binary":
            feat = 2 * config.ori_hidden
            if config.ori_encoder == "bilstm":
                self.ori_rnn = nn.BiLSTM(self.store, "ori/rnn", size,
                                         config.ori_hidden, rng)
            else:
                self.ori_ffn = nn.Dense(self.store, "ori/ffn", size, feat, rng)
            self.ori_out = nn.Dense(self.store, "ori/out", feat, 1, rng)
            variant = config.variant
            if variant in ("CS", "CV"):
                out = 1 if variant == "CS" else size
                self.itp = nn.Dense(self.store, "binary/itp", 2 * size, out, rng)
            elif variant in ("NS", "NV"):
                out = 1 if variant == "NS" else size
                self.itp_bias = self.store.add("binary/bias", np.zeros((1, out)))
            elif variant == "BV":
                self.itp_w = self.store.create("binary/bilinear", (size, size, size),
                                               size * size, rng)
                self.itp = nn.Dense(self.store, "binary/itp", 2 * size, size, rng)
        else:
            feat = 2 * config.chunk_hidden
            self.chk_rnn = nn.BiLSTM(self.store, "chk/rnn", size,
                                     config.chunk_hidden, rng)
            self.chk_out = nn.Dense(self.store, "chk/out", feat, 1, rng)
            self.multi_ffn = nn.Dense(self.store, "multi/ffn", feat, size, rng)

    # -- shared pieces ----------------------------------------------------

    def contextualize(self, word_indices, training=False, rng=None):
        emb = ad.gather_rows(self.embed, word_indices)
        return self.cxt(emb, self.config.dropout_recurrent, rng, training)

    def _head(self, x, out_layer, training=False, rng=None):
        hidden = ad.relu(self.shared(x))
        if training and self.config.dropout_ffnn > 0:
            hidden = ad.dropout(hidden, self.config.dropout_ffnn, rng, training=True)
        return out_layer(hidden)

    def predict_tags(self, x0, training=False, rng=None):
        return self._head(x0, self.tag_head, training, rng)

    def predict_labels(self, xj, training=False, rng=None):
        return self._head(xj, self.label_head, training, rng)

    def _signal_loss(self, logits, gold):
        if self.config.signal_loss == "hinge":
            return ad.hinge_loss(logits, gold)
        return ad.bce_with_logits(logits, gold)

    # -- binary mode -------------------------------------------------------

    def binary_variant(self, x_left, x_right):
        """Compose inward-pointing vector pairs, one per row.

        Returns the composed (m, d) tensor and the per-row mean
        interpolation weight (0.5 for the additive variant).
        """
        variant = self.config.variant
        m = x_left.shape[0]
        if variant == "ADD":
            return ad.add(x_left, x_right), [0.5] * m
        if variant in ("NS", "NV"):
            lam = ad.sigmoid(self.itp_bias)
        elif variant in ("CS", "CV"):
            lam = ad.sigmoid(self.itp(ad.concat(x_left, x_right, axis=1)))
        elif variant == "BV":
            lam = ad.sigmoid(ad.add(ad.bilinear(x_left, x_right, self.itp_w),
                                    self.itp(ad.concat(x_left, x_right, axis=1))))
        else:
            raise ConfigError(f"unknown compose variant: {variant}")
        ones = ad.Tensor(np.ones_like(lam.data))
        out = ad.add(ad.mul(lam, x_left), ad.mul(ad.sub(ones, lam), x_right))
        if lam.shape[0] == m:
            shares = lam.data.mean(axis=-1).ravel().tolist()
        else:  # input-free variants share one lambda across rows
            shares = [float(lam.data.mean())] * m
        return out, shares

    def binary_compose(self, x, gold=None, training=False, rng=None):
        """One orientation-driven combine layer.

        With ``gold`` the layer is teacher-forced and the signal loss is
        accumulated; otherwise thresholded predictions steer composition,
        with the sentence-edge orientations clamped inward.
        """
        n = x.shape[0]
        if n < 2:
            raise ValueError("compose needs at least 2 nodes")
        if self.config.ori_encoder == "bilstm":
            h = self.ori_rnn.concat(x)
        else:
            h = ad.relu(self.ori_ffn(x))
        logits = self.ori_out(h)
        predicted = (logits.data.ravel() > 0).astype(int).tolist()
        loss = None
        if gold is not None:
            loss = self._signal_loss(logits, gold)
            signals = list(gold)
        else:
            signals = list(predicted)
            signals[0] = 1
            signals[-1] = 0
        groups = binary_groups(signals)
        if len(groups) >= n:
            raise ValueError("binary layer failed to shrink")
        vectors, shares = self._compose_groups(x, groups)
        weights = []
        for members in groups:
            if len(members) == 1:
                weights.append([1.0])
            else:
                share = shares.pop(0)
                weights.append([share, 1.0 - share])
        return ComposeResult(vectors, predicted, groups,
                             loss=loss, signal_count=n, weights=weights)

    def _compose_groups(self, x, groups):
        """Batched pair composition plus relays, reassembled in layer order."""
        merge_left = [m[0] for m in groups if len(m) == 2]
        relay_idx = [m[0] for m in groups if len(m) == 1]
        pieces = []
        if merge_left:
            left = ad.gather_rows(x, merge_left)
            right = ad.gather_rows(x, [i + 1 for i in merge_left])
            composed, shares = self.binary_variant(left, right)
            pieces.append(composed)
        else:
            shares = []
        if relay_idx:
            pieces.append(ad.gather_rows(x, relay_idx))
        combined = pieces[0] if len(pieces) == 1 else ad.concat(*pieces, axis=0)
        if merge_left and relay_idx:
            perm = []
            n_merges = len(merge_left)
            next_merge = next_relay = 0
            for members in groups:
                if len(members) == 2:
                    perm.append(next_merge)
                    next_merge += 1
                else:
                    perm.append(n_merges + next_relay)
                    next_relay += 1
            combined = ad.gather_rows(combined, perm)
        return combined, list(shares)

    # -- multi-branching mode ----------------------------------------------

    def multi_compose(self, x, gold=None, training=False, rng=None):
        """One chunk-driven combine layer.

        Boundary logits are read from the forward state left of each gap
        paired with the backward state right of it (zero padding at the
        sentence edges).  Every chunk is composed as a per-coordinate
        softmax interpolation of its members.
        """
        n = x.shape[0]
        if n < 2:
            raise ValueError("compose needs at least 2 nodes")
        hf, hb = self.chk_rnn(x)
        pad = ad.zeros((1, self.config.chunk_hidden), dtype=x.dtype)
        boundary_in = ad.concat(ad.concat(pad, hf, axis=0),
                                ad.concat(hb, pad, axis=0), axis=1)
        logits = self.chk_out(boundary_in)  # (n + 1, 1)
        predicted = (logits.data.ravel() > 0).astype(int).tolist()
        loss = None
        if gold is not None:
            loss = self._signal_loss(logits, gold)
            signals = list(gold)
        else:
            signals = list(predicted)
            signals[0] = 1
            signals[-1] = 1
        groups = chunk_groups(signals)
        if len(groups) >= n:
            return ComposeResult(None, predicted, groups, loss=loss,
                                 signal_count=n + 1, stalled=True)
        diff_f = ad.sub(hf, ad.concat(pad, ad.rows(hf, 0, n - 1), axis=0))
        diff_b = ad.sub(hb, ad.concat(ad.rows(hb, 1, n), pad, axis=0))
        scores = self.multi_ffn(ad.concat(diff_f, diff_b, axis=1))
        parts, weights = [], []
        for members in groups:
            lo, hi = members[0], members[-1] + 1
            if len(members) == 1:
                parts.append(ad.rows(x, lo, hi))
                weights.append([1.0])
            else:
                lam = ad.softmax(ad.rows(scores, lo, hi), axis=0)
                parts.append(ad.sum_rows(ad.mul(lam, ad.rows(x, lo, hi))))
                mass = lam.data.sum(axis=1)
                weights.append((mass / mass.sum()).tolist())
        return ComposeResult(ad.stack_rows(parts), predicted, groups,
                             loss=loss, signal_count=n + 1, weights=weights)

    def compose(self, x, gold=None, training=False, rng=None):
        if self.config.mode == "binary":
            return self.binary_compose(x, gold, training, rng)
        return self.multi_compose(x, gold, training, rng)

    # -- training ------------------------------------------------------------

    def forward_losses(self, sample, training=True, rng=None):
        """Teacher-forced forward pass; losses accumulate over decisions.

        The returned dict maps tag/label/signal to per-sentence loss sums
        and ``total`` to the weighted combination actually backpropagated.
        """
        idx = [self.words.index(w) for w in sample.words]
        x = self.contextualize(idx, training=training, rng=rng)
        tag_targets = [self.tags.index(t) for t in sample.tags]
        tag_loss = ad.cross_entropy(self.predict_tags(x, training, rng), tag_targets)

        label_parts = []
        signal_parts = []
        layers = len(sample.labels)
        for j in range(layers):
            targets = [self.labels.index(l) for l in sample.labels[j]]
            label_parts.append(ad.cross_entropy(
                self.predict_labels(x, training, rng), targets))
            if j < layers - 1:
                result = self.compose(x, gold=sample.signals[j],
                                      training=training, rng=rng)
                if result.loss is not None:
                    signal_parts.append(result.loss)
                if result.vectors is None or result.vectors.shape[0] != len(sample.labels[j + 1]):
                    raise ValueError("teacher-forced layer does not match gold shape")
                x = result.vectors

        label_loss = _scaled_sum(label_parts, 1.0)
        signal_loss = _scaled_sum(signal_parts, 1.0)
        w_tag, w_label, w_signal = self.config.loss_weights
        total = ad.add(ad.add(ad.scale(tag_loss, w_tag),
                              ad.scale(label_loss, w_label)),
                       ad.scale(signal_loss, w_signal))
        if not np.isfinite(total.data):
            raise FloatingPointError(
                f"non-finite loss: tag={tag_loss.item()} label={label_loss.item()} "
                f"signal={signal_loss.item()} on words={sample.words}")
        return {"tag": tag_loss, "label": label_loss,
                "signal": signal_loss, "total": total}

    # -- inference -------------------------------------------------------------

    def parse(self, words):
        """Greedy parse; returns a ParseOutcome with signals and attention."""
        with ad.no_grad():
            idx = [self.words.index(w) for w in words]
            x = self.contextualize(idx)
            tags = self._argmax_tokens(self.predict_tags(x), self.tags)
            label_layers = [self._argmax_tokens(self.predict_labels(x), self.labels)]
            categories = [tag if is_sub_label(lab) else _strip_prefix(lab)
                          for tag, lab in zip(tags, label_layers[0])]
            spans = [(i, i + 1) for i in range(len(words))]
            signal_layers = []
            attention = []
            for _ in range(2 * len(words) + 4):
                if x.shape[0] < 2:
                    break
                result = self.compose(x)
                signal_layers.append(result.predicted)
                if result.stalled:
                    break
                next_labels = self._argmax_tokens(self.predict_labels(result.vectors),
                                                  self.labels)
                label_layers.append(next_labels)
                categories, spans = self._advance_annotations(
                    result, next_labels, categories, spans,
                    len(signal_layers) - 1, attention)
                x = result.vectors
        outcome = recover_tree(words, tags, label_layers,
                               orientations=signal_layers if self.config.mode == "binary" else None,
                               chunks=signal_layers if self.config.mode == "multi" else None)
        outcome.attention = attention
        return outcome

    def _advance_annotations(self, result, next_labels, categories, spans,
                             layer, attention):
        new_cats, new_spans = [], []
        for pos, members in enumerate(result.groups):
            lo, hi = members[0], members[-1]
            span = (spans[lo][0], spans[hi][1])
            if len(members) == 1:
                new_cats.append(categories[lo])
                new_spans.append(span)
                continue
            parent = _strip_prefix(next_labels[pos])
            attention.append({
                "layer": layer,
                "parent": parent,
                "children": [categories[m] for m in members],
                "weights": result.weights[pos],
                "span": list(span),
            })
            new_cats.append(parent)
            new_spans.append(span)
        return new_cats, new_spans

    @staticmethod
    def _argmax_tokens(logits, vocab):
        return [vocab.itos[i] for i in logits.data.argmax(axis=1)]

    # -- persistence -------------------------------------------------------------

    def save(self, path):
        extra = {"words": self.words.itos, "tags": self.tags.itos,
                 "labels": self.labels.itos,
                 "word_unk": self.words.unk}
        nn.save_checkpoint(path, self.store.state_dict(),
                           config=self.config.to_dict(), extra=extra)

    @classmethod
    def load(cls, path):
        arrays, config, extra = nn.load_checkpoint(path)
        cfg = ModelConfig.from_dict(config)
        words = Vocab.__new__(Vocab)  # rebuild verbatim to keep saved indices
        words.itos = list(extra["words"])
        words.stoi = {t: i for i, t in enumerate(words.itos)}
        words.unk = extra.get("word_unk")
        tags = Vocab(extra["tags"])
        labels = Vocab(extra["labels"])
        model = cls(cfg, words, tags, labels, seed=0)
        model.store.load_state(arrays)
        return model


def _scaled_sum(parts, factor):
    if not parts:
        return ad.tensor(0.0)
    out = parts[0]
    for part in parts[1:]:
        out = ad.add(out, part)
    return ad.scale(out, factor)


def _strip_prefix(label):
    return label.lstrip("_#") or label


def train_step(model, batch, optimizer, rng, lr=None):
    """One teacher-forced gradient step over a batch of samples.

    Per-sentence graphs are independent; their gradients accumulate into
    the shared parameters and are averaged before the Adam update.
    Returns the batch-mean loss components as floats.
    """
    if not batch:
        raise ValueError("empty batch")
    optimizer.zero_grad()
    sums = {"tag": 0.0, "label": 0.0, "signal": 0.0, "total": 0.0}
    for sample in batch:
        losses = model.forward_losses(sample, training=True, rng=rng)
        losses["total"].backward()
        for key in sums:
            sums[key] += losses[key].item()
    model.store.scale_grads(1.0 / len(batch))
    optimizer.step(lr)
    return {key: value / len(batch) for key, value in sums.items()}
