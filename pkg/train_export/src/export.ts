/** Schema-conformant canonical documents for model and embedding files. */

import { CanonValue, canonicalDumps, floats, floats2, floats3 } from "./pyjson";
import { Layer, Model } from "./net";

function layerToCanon(layer: Layer): CanonValue {
  if (layer.kind === "affine") {
    return {
      kind: "affine",
      weights: floats2(layer.weights),
      bias: floats(layer.bias),
    };
  }
  if (layer.kind === "relu") {
    return { kind: "relu" };
  }
  return {
    kind: "conv1d",
    kernel: floats3(layer.kernel),
    stride: { int: layer.stride },
    bias: floats(layer.bias),
  };
}

export function modelToCanon(model: Model): CanonValue {
  return {
    input_words: { int: model.inputWords },
    embedding_dim: { int: model.embeddingDim },
    labels: model.labels as CanonValue[],
    layers: model.layers.map(layerToCanon),
  };
}

export function embeddingToCanon(words: string[], vectors: number[][]): CanonValue {
  return {
    dim: { int: vectors[0].length },
    words: words as CanonValue[],
    vectors: floats2(vectors),
  };
}

export function modelJson(model: Model): string {
  return canonicalDumps(modelToCanon(model));
}

export function embeddingJson(words: string[], vectors: number[][]): string {
  return canonicalDumps(embeddingToCanon(words, vectors));
}
