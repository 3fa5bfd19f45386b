/**
 * Bundled mini-corpus: short synthetic review sentences in `label<TAB>text`
 * format, generated deterministically from sentiment templates.  Labels are
 * 0 = pos, 1 = neg; negated adjectives flip the label so the task is not a
 * pure bag-of-polarity lookup.
 */

import * as fs from "fs";

import { Rng } from "./rng";

const POSITIVE = [
  "good", "great", "wonderful", "excellent", "lovely", "brilliant",
  "superb", "delightful", "charming", "fantastic",
];
const NEGATIVE = [
  "bad", "awful", "terrible", "horrible", "dreadful", "boring",
  "poor", "disappointing", "dull", "miserable",
];
const NOUNS = [
  "movie", "film", "plot", "acting", "story", "script", "cast",
  "ending", "dialogue", "scene",
];
const INTENSIFIERS = ["very", "truly", "really", "quite", "absolutely"];

export interface Example {
  label: number; // 0 = pos, 1 = neg
  words: string[];
}

export function generateCorpus(seed = 2024, size = 2000): Example[] {
  const rng = new Rng(seed);
  const out: Example[] = [];
  const seen = new Set<string>();
  while (out.length < size) {
    const positive = rng.next() < 0.5;
    const adjPool = positive ? POSITIVE : NEGATIVE;
    const adj = rng.pick(adjPool);
    const noun = rng.pick(NOUNS);
    const kind = rng.int(5);
    let words: string[];
    let label = positive ? 0 : 1;
    if (kind === 0) {
      words = ["the", noun, "was", rng.pick(INTENSIFIERS), adj];
    } else if (kind === 1) {
      words = [rng.pick(INTENSIFIERS), adj, noun];
    } else if (kind === 2) {
      words = ["this", noun, "felt", adj, "and", rng.pick(adjPool)];
    } else if (kind === 3) {
      words = ["the", noun, "seemed", adj, "overall"];
    } else {
      // negation flips the sentiment
      words = ["the", noun, "was", "not", adj];
      label = positive ? 1 : 0;
    }
    const key = label + "|" + words.join(" ");
    if (seen.has(key)) continue;
    seen.add(key);
    out.push({ label, words });
  }
  return out;
}

export function corpusToTsv(examples: Example[]): string {
  return examples.map((e) => `${e.label}\t${e.words.join(" ")}`).join("\n") + "\n";
}

export function writeCorpus(path: string, seed = 2024, size = 2000): void {
  fs.writeFileSync(path, corpusToTsv(generateCorpus(seed, size)), "utf-8");
}

export function readCorpus(path: string): Example[] {
  const text = fs.readFileSync(path, "utf-8");
  const out: Example[] = [];
  for (const [lineNo, line] of text.split("\n").entries()) {
    if (!line.trim()) continue;
    const tab = line.indexOf("\t");
    if (tab < 0) {
      throw new Error(`line ${lineNo + 1}: expected label<TAB>text`);
    }
    const label = parseInt(line.slice(0, tab), 10);
    if (!(label === 0 || label === 1)) {
      throw new Error(`line ${lineNo + 1}: label must be 0 or 1`);
    }
    out.push({ label, words: line.slice(tab + 1).split(/\s+/).filter(Boolean) });
  }
  if (out.length === 0) {
    throw new Error("corpus is empty");
  }
  return out;
}

export const PAD = "<PAD>";

/** Vocabulary over the corpus: PAD first, then words by first appearance. */
export function buildVocab(examples: Example[]): string[] {
  const vocab = [PAD];
  const seen = new Set<string>([PAD]);
  for (const e of examples) {
    for (const w of e.words) {
      if (!seen.has(w)) {
        seen.add(w);
        vocab.push(w);
      }
    }
  }
  return vocab;
}
