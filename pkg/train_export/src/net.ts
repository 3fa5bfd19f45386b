/**
 * Minimal float64 layer stack with manual backprop.
 *
 * Semantics deliberately mirror the explanation engine: affine layers are
 * row-major (out x in), conv1d kernels are [out_ch][in_ch][width] sliding
 * over the word axis with position-major channel-minor flat layout, the
 * final layer emits logits, softmax only appears inside the training loss.
 */

import { Rng } from "./rng";

export interface AffineLayer {
  kind: "affine";
  weights: number[][];
  bias: number[];
}

export interface ReluLayer {
  kind: "relu";
}

export interface Conv1DLayer {
  kind: "conv1d";
  kernel: number[][][];
  stride: number;
  bias: number[];
}

export type Layer = AffineLayer | ReluLayer | Conv1DLayer;

export interface Model {
  inputWords: number;
  embeddingDim: number;
  labels: string[];
  layers: Layer[];
}

export const zeros = (n: number): number[] => new Array<number>(n).fill(0);

export const zeros2 = (r: number, c: number): number[][] =>
  Array.from({ length: r }, () => zeros(c));

export function convOutPositions(layer: Conv1DLayer, inPositions: number): number {
  const width = layer.kernel[0][0].length;
  if (width > inPositions) {
    throw new Error(`kernel width ${width} exceeds ${inPositions} positions`);
  }
  return Math.floor((inPositions - width) / layer.stride) + 1;
}

interface Trace {
  inputs: number[][];    // input to each layer
  positions: number[];   // sequence positions entering each layer
}

function layerForward(layer: Layer, x: number[], positions: number): [number[], number] {
  if (layer.kind === "affine") {
    const out = layer.bias.slice();
    for (let i = 0; i < layer.weights.length; i++) {
      const row = layer.weights[i];
      let acc = out[i];
      for (let j = 0; j < row.length; j++) acc += row[j] * x[j];
      out[i] = acc;
    }
    return [out, out.length];
  }
  if (layer.kind === "relu") {
    return [x.map((v) => (v > 0 ? v : 0)), positions];
  }
  const outCh = layer.kernel.length;
  const inCh = layer.kernel[0].length;
  const width = layer.kernel[0][0].length;
  const outPos = convOutPositions(layer, positions);
  const out = zeros(outPos * outCh);
  for (let j = 0; j < outPos; j++) {
    for (let o = 0; o < outCh; o++) {
      let acc = layer.bias[o];
      for (let w = 0; w < width; w++) {
        for (let c = 0; c < inCh; c++) {
          acc += layer.kernel[o][c][w] * x[(j * layer.stride + w) * inCh + c];
        }
      }
      out[j * outCh + o] = acc;
    }
  }
  return [out, outPos];
}

export function forwardLogits(model: Model, x: number[]): number[] {
  let h = x;
  let positions = model.inputWords;
  for (const layer of model.layers) {
    [h, positions] = layerForward(layer, h, positions);
  }
  return h;
}

export function argmax(xs: number[]): number {
  let best = 0;
  for (let i = 1; i < xs.length; i++) if (xs[i] > xs[best]) best = i;
  return best;
}

export function softmax(logits: number[]): number[] {
  const m = Math.max(...logits);
  const exps = logits.map((v) => Math.exp(v - m));
  const z = exps.reduce((a, b) => a + b, 0);
  return exps.map((v) => v / z);
}

export interface LayerGrads {
  weights?: number[][];
  bias?: number[];
  kernel?: number[][][];
}

/**
 * Forward + backward for the softmax cross-entropy loss of one example.
 * Returns the loss, per-layer parameter gradients and the input gradient
 * (used to update the embedding rows).
 */
export function lossAndGrads(model: Model, x: number[], label: number): {
  loss: number;
  grads: LayerGrads[];
  dInput: number[];
} {
  const trace: Trace = { inputs: [], positions: [] };
  let h = x;
  let positions = model.inputWords;
  for (const layer of model.layers) {
    trace.inputs.push(h);
    trace.positions.push(positions);
    [h, positions] = layerForward(layer, h, positions);
  }
  const probs = softmax(h);
  const loss = -Math.log(Math.max(probs[label], 1e-300));
  let delta = probs.slice();
  delta[label] -= 1;

  const grads: LayerGrads[] = model.layers.map(() => ({}));
  for (let li = model.layers.length - 1; li >= 0; li--) {
    const layer = model.layers[li];
    const input = trace.inputs[li];
    const inPositions = trace.positions[li];
    if (layer.kind === "affine") {
      const gW = zeros2(layer.weights.length, layer.weights[0].length);
      const gB = delta.slice();
      const dIn = zeros(input.length);
      for (let i = 0; i < layer.weights.length; i++) {
        const row = layer.weights[i];
        const d = delta[i];
        for (let j = 0; j < row.length; j++) {
          gW[i][j] = d * input[j];
          dIn[j] += row[j] * d;
        }
      }
      grads[li] = { weights: gW, bias: gB };
      delta = dIn;
    } else if (layer.kind === "relu") {
      delta = delta.map((d, i) => (input[i] > 0 ? d : 0));
    } else {
      const outCh = layer.kernel.length;
      const inCh = layer.kernel[0].length;
      const width = layer.kernel[0][0].length;
      const outPos = convOutPositions(layer, inPositions);
      const gK = layer.kernel.map((ch) => ch.map((row) => zeros(row.length)));
      const gB = zeros(outCh);
      const dIn = zeros(input.length);
      for (let j = 0; j < outPos; j++) {
        for (let o = 0; o < outCh; o++) {
          const d = delta[j * outCh + o];
          gB[o] += d;
          for (let w = 0; w < width; w++) {
            for (let c = 0; c < inCh; c++) {
              const idx = (j * layer.stride + w) * inCh + c;
              gK[o][c][w] += d * input[idx];
              dIn[idx] += d * layer.kernel[o][c][w];
            }
          }
        }
      }
      grads[li] = { kernel: gK, bias: gB };
      delta = dIn;
    }
  }
  return { loss, grads, dInput: delta };
}

export function heInitAffine(rng: Rng, outDim: number, inDim: number): AffineLayer {
  const scale = Math.sqrt(2.0 / inDim);
  return {
    kind: "affine",
    weights: Array.from({ length: outDim }, () =>
      Array.from({ length: inDim }, () => rng.normal() * scale)
    ),
    bias: zeros(outDim),
  };
}

export function heInitConv(rng: Rng, outCh: number, inCh: number, width: number,
                           stride: number): Conv1DLayer {
  const scale = Math.sqrt(2.0 / (inCh * width));
  return {
    kind: "conv1d",
    kernel: Array.from({ length: outCh }, () =>
      Array.from({ length: inCh }, () =>
        Array.from({ length: width }, () => rng.normal() * scale)
      )
    ),
    stride,
    bias: zeros(outCh),
  };
}
