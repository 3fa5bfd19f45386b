#!/usr/bin/env python3
"""Emit the hand-built golden fixtures (SUM, FIRST-WORD, toy-relu, toy embedding).

SUM scores the total of all word coordinates (logits sum / -sum); FIRST-WORD
only reads word 0; toy-relu puts one hidden ReLU stage between two affine
maps.  The toy embedding is a 1-d sentiment axis over ten words.
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from orex.model import AffineLayer, Network, ReluLayer, save_model
from orex.text import EmbeddingTable, Vocabulary, save_embedding

OUT = pathlib.Path(__file__).resolve().parents[1] / "models"

TOY_WORDS = (
    "<PAD>", "good", "bad", "great", "nice", "awful", "fine", "terrible", "okay", "poor",
)
TOY_VALUES = (0.0, 1.0, -1.0, 1.2, 0.7, -1.3, 0.4, -1.6, 0.1, -0.7)


def sum_net() -> Network:
    return Network(
        layers=(AffineLayer(weights=np.array([[1.0, 1.0], [-1.0, -1.0]]),
                            bias=np.zeros(2)),),
        input_words=2, embedding_dim=1, labels=("pos", "neg"),
    )


def firstword_net() -> Network:
    return Network(
        layers=(AffineLayer(weights=np.array([[1.0, 0.0], [-1.0, 0.0]]),
                            bias=np.zeros(2)),),
        input_words=2, embedding_dim=1, labels=("pos", "neg"),
    )


def toyrelu_net() -> Network:
    return Network(
        layers=(
            AffineLayer(weights=np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 0.0]]),
                        bias=np.zeros(3)),
            ReluLayer(),
            AffineLayer(weights=np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 2.0]]),
                        bias=np.zeros(2)),
        ),
        input_words=2, embedding_dim=1, labels=("pos", "neg"),
    )


def toy_embedding():
    vocab = Vocabulary(words=TOY_WORDS)
    table = EmbeddingTable(dim=1, vectors=np.array([[v] for v in TOY_VALUES]))
    return vocab, table


def main():
    OUT.mkdir(exist_ok=True)
    (OUT / "sum.json").write_bytes(save_model(sum_net()))
    (OUT / "firstword.json").write_bytes(save_model(firstword_net()))
    (OUT / "toyrelu.json").write_bytes(save_model(toyrelu_net()))
    vocab, table = toy_embedding()
    (OUT / "toy_embedding.json").write_bytes(save_embedding(vocab, table))
    print(f"wrote 4 fixture files to {OUT}")


if __name__ == "__main__":
    main()
