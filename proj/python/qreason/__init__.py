"""Python access to the qreason pipeline."""

import json

from ._core import (
    __version__,
    generate_corpus as _generate_corpus,
    deduce,
    fuzzy_f1,
    gold_text,
    gradient_audit,
    run_cli,
    token_f1,
    tokenize,
)


def generate_corpus(**config):
    """Synthetic corpus as three lists of record dicts (train, dev, test)."""
    splits = _generate_corpus(json.dumps(config))
    return tuple([json.loads(line) for line in text.splitlines() if line] for text in splits)


__all__ = [
    "__version__",
    "deduce",
    "fuzzy_f1",
    "generate_corpus",
    "gold_text",
    "gradient_audit",
    "run_cli",
    "token_f1",
    "tokenize",
]
