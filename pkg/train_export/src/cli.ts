/**
 * Commands:
 *   gen-corpus [--out data/mini_corpus.tsv] [--size 2000] [--seed 2024]
 *   fixtures   [--out out/fixtures]
 *   train      --arch fc|conv [--corpus data/mini_corpus.tsv] [--out out]
 *              [--epochs N] [--seed S]
 *   all        regenerate corpus (if missing), fixtures and both models,
 *              then write out/report.json
 */

import * as fs from "fs";
import * as path from "path";

import { readCorpus, writeCorpus } from "./corpus";
import { canonicalDumps } from "./pyjson";
import { embeddingJson, modelJson } from "./export";
import { fixtureDocuments } from "./fixtures";
import { DEFAULT_SPECS, TrainSpec, Trained, parityEvidence, train } from "./train";

const HERE = path.resolve(__dirname, "..");

function parseArgs(argv: string[]): Map<string, string> {
  const out = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`malformed option: ${argv.slice(i).join(" ")}`);
    }
    out.set(argv[i].slice(2), argv[i + 1]);
  }
  return out;
}

function genCorpus(opts: Map<string, string>): void {
  const out = path.resolve(HERE, opts.get("out") ?? "data/mini_corpus.tsv");
  fs.mkdirSync(path.dirname(out), { recursive: true });
  writeCorpus(out, parseInt(opts.get("seed") ?? "2024", 10),
              parseInt(opts.get("size") ?? "2000", 10));
  console.log(`wrote ${out}`);
}

function emitFixtures(opts: Map<string, string>): void {
  const dir = path.resolve(HERE, opts.get("out") ?? "out/fixtures");
  fs.mkdirSync(dir, { recursive: true });
  for (const [name, doc] of Object.entries(fixtureDocuments())) {
    fs.writeFileSync(path.join(dir, name), canonicalDumps(doc), "utf-8");
  }
  console.log(`wrote 4 fixture files to ${dir}`);
}

interface ModelReport {
  name: string;
  arch: string;
  epochs: number;
  seed: number;
  input_words: number;
  embedding_dim: number;
  vocab_size: number;
  train_accuracy: number;
  test_accuracy: number;
  model_file: string;
  embeddings_file: string;
  parity: { seed: number; inputs: number[][]; logits: number[][] };
}

function trainOne(arch: "fc" | "conv", opts: Map<string, string>): ModelReport {
  const spec: TrainSpec = { ...DEFAULT_SPECS[arch] };
  if (opts.has("epochs")) spec.epochs = parseInt(opts.get("epochs")!, 10);
  if (opts.has("seed")) spec.seed = parseInt(opts.get("seed")!, 10);
  const corpusPath = path.resolve(HERE, opts.get("corpus") ?? "data/mini_corpus.tsv");
  const outDir = path.resolve(HERE, opts.get("out") ?? "out");
  fs.mkdirSync(outDir, { recursive: true });

  const examples = readCorpus(corpusPath);
  const trained: Trained = train(examples, spec);
  console.log(
    `${arch}: train acc ${trained.trainAccuracy.toFixed(3)}, ` +
    `test acc ${trained.testAccuracy.toFixed(3)}`
  );

  const modelFile = `${arch}_model.json`;
  const embFile = `${arch}_embeddings.json`;
  fs.writeFileSync(path.join(outDir, modelFile), modelJson(trained.model), "utf-8");
  fs.writeFileSync(
    path.join(outDir, embFile),
    embeddingJson(trained.vocab, trained.embedding),
    "utf-8"
  );
  return {
    name: arch,
    arch: arch === "fc"
      ? `dense(${spec.hidden})-relu-dense(2)`
      : `conv1d(${spec.hidden}ch,w${spec.kernelWidth})-relu-dense(2)`,
    epochs: spec.epochs,
    seed: spec.seed,
    input_words: spec.inputWords,
    embedding_dim: spec.embeddingDim,
    vocab_size: trained.vocab.length,
    train_accuracy: trained.trainAccuracy,
    test_accuracy: trained.testAccuracy,
    model_file: modelFile,
    embeddings_file: embFile,
    parity: parityEvidence(trained.model, spec.seed + 1000),
  };
}

function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    const opts = parseArgs(rest);
    if (command === "gen-corpus") {
      genCorpus(opts);
    } else if (command === "fixtures") {
      emitFixtures(opts);
    } else if (command === "train") {
      const arch = opts.get("arch");
      if (arch !== "fc" && arch !== "conv") {
        throw new Error("train needs --arch fc|conv");
      }
      const report = trainOne(arch, opts);
      const outDir = path.resolve(HERE, opts.get("out") ?? "out");
      fs.writeFileSync(
        path.join(outDir, `${arch}_report.json`),
        JSON.stringify(report, null, 2) + "\n",
        "utf-8"
      );
    } else if (command === "all") {
      const corpusPath = path.resolve(HERE, opts.get("corpus") ?? "data/mini_corpus.tsv");
      if (!fs.existsSync(corpusPath)) {
        genCorpus(new Map([["out", corpusPath]]));
      }
      emitFixtures(opts);
      const models = [trainOne("fc", opts), trainOne("conv", opts)];
      const outDir = path.resolve(HERE, opts.get("out") ?? "out");
      fs.writeFileSync(
        path.join(outDir, "report.json"),
        JSON.stringify({ models }, null, 2) + "\n",
        "utf-8"
      );
      console.log(`wrote ${path.join(outDir, "report.json")}`);
    } else {
      console.error("usage: cli.js gen-corpus|fixtures|train|all [options]");
      return 1;
    }
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
