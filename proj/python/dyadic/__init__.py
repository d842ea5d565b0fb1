"""Python bindings for the dyadic personal-embedding library."""

import json

from ._dyadic import (
    CheckpointError,
    Corpus,
    MissingLabel,
    Model,
    ParseError,
    TrainingConfig,
    UnknownIndividual,
    Vocabulary,
    consistency,
    head_forward,
    load_checkpoint,
    load_corpus,
    pearson,
    read_labels,
    retrieve,
    save_checkpoint,
    synth_corpus,
    tokenize,
    train,
)
from . import _dyadic


def compare(corpus, vocab, labels, config=None, seed=0,
            methods=("bow", "pse", "pre", "pce"), head_epochs=500):
    """Accuracy of each method on a seeded 80/20 split, as a dict."""
    cfg = config if config is not None else TrainingConfig()
    return json.loads(_dyadic._compare_json(corpus, vocab, labels, cfg, seed, list(methods), head_epochs))


def gradcheck(variant="pce", dim=3, vocab=6, length=4, seed=0):
    return json.loads(_dyadic._gradcheck_json(variant, dim, vocab, length, seed))


__all__ = [
    "CheckpointError", "Corpus", "MissingLabel", "Model", "ParseError", "TrainingConfig",
    "UnknownIndividual", "Vocabulary", "compare", "consistency", "gradcheck", "head_forward",
    "load_checkpoint", "load_corpus", "pearson", "read_labels", "retrieve", "save_checkpoint",
    "synth_corpus", "tokenize", "train",
]
