/**
 * Joint training of a word embedding and a small classifier head on the
 * mini-corpus, plus export of parity evidence: 100 seeded random points in
 * embedding space with the framework's logits, which the engine is expected
 * to reproduce.
 */

import { Example, PAD, buildVocab } from "./corpus";
import {
  AffineLayer,
  Conv1DLayer,
  Layer,
  LayerGrads,
  Model,
  argmax,
  forwardLogits,
  heInitAffine,
  heInitConv,
  lossAndGrads,
  zeros,
  zeros2,
} from "./net";
import { Rng } from "./rng";

export interface TrainSpec {
  arch: "fc" | "conv";
  inputWords: number;
  embeddingDim: number;
  hidden: number;       // fc units or conv output channels
  kernelWidth: number;  // conv only
  epochs: number;
  seed: number;
  learningRate: number;
}

export const DEFAULT_SPECS: Record<"fc" | "conv", TrainSpec> = {
  fc: {
    arch: "fc", inputWords: 8, embeddingDim: 5, hidden: 12, kernelWidth: 0,
    epochs: 30, seed: 11, learningRate: 0.1,
  },
  conv: {
    arch: "conv", inputWords: 8, embeddingDim: 5, hidden: 6, kernelWidth: 3,
    epochs: 40, seed: 23, learningRate: 0.08,
  },
};

export interface Trained {
  model: Model;
  vocab: string[];
  embedding: number[][];
  trainAccuracy: number;
  testAccuracy: number;
}

function encodeIndices(words: string[], index: Map<string, number>,
                       length: number): number[] {
  const ids = words.slice(0, length).map((w) => {
    const i = index.get(w);
    if (i === undefined) throw new Error(`word not in vocabulary: ${w}`);
    return i;
  });
  while (ids.length < length) ids.push(0); // PAD row
  return ids;
}

function embed(ids: number[], embedding: number[][]): number[] {
  const d = embedding[0].length;
  const out = zeros(ids.length * d);
  ids.forEach((id, pos) => {
    for (let c = 0; c < d; c++) out[pos * d + c] = embedding[id][c];
  });
  return out;
}

function buildLayers(spec: TrainSpec, rng: Rng): Layer[] {
  const flat = spec.inputWords * spec.embeddingDim;
  if (spec.arch === "fc") {
    return [
      heInitAffine(rng, spec.hidden, flat),
      { kind: "relu" },
      heInitAffine(rng, 2, spec.hidden),
    ];
  }
  const conv = heInitConv(rng, spec.hidden, spec.embeddingDim, spec.kernelWidth, 1);
  const outPos = spec.inputWords - spec.kernelWidth + 1;
  return [
    conv,
    { kind: "relu" },
    heInitAffine(rng, 2, outPos * spec.hidden),
  ];
}

function applyGrads(layers: Layer[], grads: LayerGrads[], lr: number): void {
  layers.forEach((layer, li) => {
    const g = grads[li];
    if (layer.kind === "affine" && g.weights && g.bias) {
      for (let i = 0; i < layer.weights.length; i++) {
        for (let j = 0; j < layer.weights[i].length; j++) {
          layer.weights[i][j] -= lr * g.weights[i][j];
        }
        layer.bias[i] -= lr * g.bias[i];
      }
    } else if (layer.kind === "conv1d" && g.kernel && g.bias) {
      for (let o = 0; o < layer.kernel.length; o++) {
        for (let c = 0; c < layer.kernel[o].length; c++) {
          for (let w = 0; w < layer.kernel[o][c].length; w++) {
            layer.kernel[o][c][w] -= lr * g.kernel[o][c][w];
          }
        }
        layer.bias[o] -= lr * g.bias[o];
      }
    }
  });
}

function accuracy(examples: Example[], ids: number[][], model: Model,
                  embedding: number[][]): number {
  let hits = 0;
  examples.forEach((e, i) => {
    const logits = forwardLogits(model, embed(ids[i], embedding));
    if (argmax(logits) === e.label) hits++;
  });
  return hits / examples.length;
}

export function train(examples: Example[], spec: TrainSpec): Trained {
  const rng = new Rng(spec.seed);
  const vocab = buildVocab(examples);
  const index = new Map(vocab.map((w, i) => [w, i]));
  const d = spec.embeddingDim;
  const embedding = Array.from({ length: vocab.length }, () =>
    Array.from({ length: d }, () => rng.normal() * 0.1)
  );

  const shuffled = rng.shuffle(examples.slice());
  const split = Math.floor(shuffled.length * 0.8);
  const trainSet = shuffled.slice(0, split);
  const testSet = shuffled.slice(split);
  const trainIds = trainSet.map((e) => encodeIndices(e.words, index, spec.inputWords));
  const testIds = testSet.map((e) => encodeIndices(e.words, index, spec.inputWords));

  const layers = buildLayers(spec, rng);
  const model: Model = {
    inputWords: spec.inputWords,
    embeddingDim: d,
    labels: ["pos", "neg"],
    layers,
  };

  const order = trainSet.map((_, i) => i);
  let lr = spec.learningRate;
  for (let epoch = 0; epoch < spec.epochs; epoch++) {
    rng.shuffle(order);
    let total = 0;
    for (const i of order) {
      const x = embed(trainIds[i], embedding);
      const { loss, grads, dInput } = lossAndGrads(model, x, trainSet[i].label);
      if (!Number.isFinite(loss)) {
        throw new Error(`training diverged at epoch ${epoch} (non-finite loss)`);
      }
      total += loss;
      applyGrads(layers, grads, lr);
      trainIds[i].forEach((id, pos) => {
        for (let c = 0; c < d; c++) {
          embedding[id][c] -= lr * dInput[pos * d + c];
        }
      });
    }
    lr *= 0.97;
    void total;
  }

  return {
    model,
    vocab,
    embedding,
    trainAccuracy: accuracy(trainSet, trainIds, model, embedding),
    testAccuracy: accuracy(testSet, testIds, model, embedding),
  };
}

export interface ParityRecord {
  seed: number;
  inputs: number[][];
  logits: number[][];
}

/** Framework logits at 100 seeded random embedding-space points. */
export function parityEvidence(model: Model, seed: number): ParityRecord {
  const rng = new Rng(seed);
  const dim = model.inputWords * model.embeddingDim;
  const inputs: number[][] = [];
  const logits: number[][] = [];
  for (let i = 0; i < 100; i++) {
    const x = Array.from({ length: dim }, () => rng.uniform(-2, 2));
    inputs.push(x);
    logits.push(forwardLogits(model, x));
  }
  return { seed, inputs, logits };
}
