"""Neural combinatory constituency parsing on stratified treebanks."""

from .trees import (SyntaxTree, parse_brackets, render_brackets, preprocess,
                    preprocess_corpus, read_treebank, write_treebank,
                    split_corpus, RandomSplit, SectionSplit)
from .binarize import (BinaryFactor, FactorPolicy, binarize, unbinarize,
                       sample_factor, parse_factor_policy)
from .stratify import StratifiedSample, stratify_binary, stratify_multi
from .stats import (orientation_stats, compression_stats, expected_node_bound,
                    partial_node_sum, complexity_fit, triangular_node_count)
from .recover import ParseOutcome, recover_tree, validate
from .model import ModelConfig, CombinatorModel, Vocab, build_vocabs, train_step
from .scoring import (score, corpus_score, headedness_report, early_stopping,
                      throughput)
from .embeddings import EmbeddingTable, load_embeddings
from .config import RunConfig, load_run_config
from .training import Trainer

__version__ = "0.1.0"
