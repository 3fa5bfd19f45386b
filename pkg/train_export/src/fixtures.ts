/**
 * The hand-built golden fixtures, regenerated byte-for-byte.
 *
 * SUM scores the total of all word coordinates; FIRST-WORD reads only word
 * 0; toy-relu inserts one hidden ReLU stage.  The toy embedding is a 1-d
 * sentiment axis over ten words.
 */

import { CanonValue } from "./pyjson";
import { Model } from "./net";
import { modelToCanon, embeddingToCanon } from "./export";

export function sumNet(): Model {
  return {
    inputWords: 2,
    embeddingDim: 1,
    labels: ["pos", "neg"],
    layers: [
      { kind: "affine", weights: [[1.0, 1.0], [-1.0, -1.0]], bias: [0.0, 0.0] },
    ],
  };
}

export function firstwordNet(): Model {
  return {
    inputWords: 2,
    embeddingDim: 1,
    labels: ["pos", "neg"],
    layers: [
      { kind: "affine", weights: [[1.0, 0.0], [-1.0, 0.0]], bias: [0.0, 0.0] },
    ],
  };
}

export function toyreluNet(): Model {
  return {
    inputWords: 2,
    embeddingDim: 1,
    labels: ["pos", "neg"],
    layers: [
      {
        kind: "affine",
        weights: [[1.0, 1.0], [1.0, -1.0], [-1.0, 0.0]],
        bias: [0.0, 0.0, 0.0],
      },
      { kind: "relu" },
      {
        kind: "affine",
        weights: [[1.0, 1.0, 0.0], [0.0, 0.0, 2.0]],
        bias: [0.0, 0.0],
      },
    ],
  };
}

export const TOY_WORDS = [
  "<PAD>", "good", "bad", "great", "nice", "awful", "fine", "terrible",
  "okay", "poor",
];
export const TOY_VALUES = [0.0, 1.0, -1.0, 1.2, 0.7, -1.3, 0.4, -1.6, 0.1, -0.7];

export function fixtureDocuments(): Record<string, CanonValue> {
  return {
    "sum.json": modelToCanon(sumNet()),
    "firstword.json": modelToCanon(firstwordNet()),
    "toyrelu.json": modelToCanon(toyreluNet()),
    "toy_embedding.json": embeddingToCanon(
      TOY_WORDS,
      TOY_VALUES.map((v) => [v])
    ),
  };
}
