"""Sequential matching network: response selection for multi-turn dialogue.

The compiled extension carries the implementation; this package re-exports it.
"""

from smn._smn import (  # noqa: F401
    Index,
    Model,
    Vocabulary,
    evaluate,
    metrics,
    respond,
    synth,
    tokenize,
    train,
)

__all__ = [
    "Index",
    "Model",
    "Vocabulary",
    "evaluate",
    "metrics",
    "respond",
    "synth",
    "tokenize",
    "train",
]
