"""Static word-embedding files in the plain text vector format."""

from __future__ import annotations

import numpy as np

from .trees import ConfigError

UNK_TOKEN = "<unk>"


class EmbeddingTable:
    """Word vectors of a fixed dimension; unknown words map to UNK.

    The UNK vector is taken from the file when a ``<unk>`` entry exists,
    otherwise it is the mean of all loaded vectors.
    """

    def __init__(self, vectors, dim, frozen=True):
        self.vectors = vectors
        self.dim = dim
        self.frozen = frozen
        if UNK_TOKEN not in self.vectors:
            stacked = np.stack(list(self.vectors.values()))
            self.vectors[UNK_TOKEN] = stacked.mean(axis=0)

    def __len__(self):
        return len(self.vectors)

    def __contains__(self, word):
        return word in self.vectors

    def get(self, word):
        return self.vectors.get(word, self.vectors[UNK_TOKEN])

    def matrix_for(self, vocab):
        """Embedding rows aligned with a Vocab's index order."""
        return np.stack([self.get(token) for token in vocab.itos]).astype(np.float32)


def load_embeddings(path, frozen=True):
    """Read 'word v1 v2 ... vd' lines; a 'count dim' header line is allowed.

    Raises ConfigError on inconsistent dimensions or an empty file.
    """
    vectors = {}
    dim = None
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            parts = line.rstrip("\n").split(" ")
            if not line.strip():
                continue
            if lineno == 1 and len(parts) == 2:
                try:
                    int(parts[0]), int(parts[1])
                    continue  # header line
                except ValueError:
                    pass
            word, values = parts[0], parts[1:]
            try:
                vec = np.array([float(v) for v in values if v], dtype=np.float32)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: malformed vector") from None
            if dim is None:
                dim = len(vec)
                if dim == 0:
                    raise ConfigError(f"{path}:{lineno}: vector of dimension 0")
            elif len(vec) != dim:
                raise ConfigError(f"{path}:{lineno}: dimension {len(vec)} != {dim}")
            vectors[word] = vec
    if not vectors:
        raise ConfigError(f"{path}: no vectors found")
    return EmbeddingTable(vectors, dim, frozen=frozen)
