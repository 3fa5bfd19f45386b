import * as fs from "fs";
import * as path from "path";

import { describe, expect, it } from "vitest";

import { canonicalDumps } from "../src/pyjson";
import { fixtureDocuments } from "../src/fixtures";

const GOLDEN_DIR = path.resolve(__dirname, "..", "..", "models");

describe("fixture regeneration", () => {
  it("reproduces every golden file byte for byte", () => {
    for (const [name, doc] of Object.entries(fixtureDocuments())) {
      const golden = fs.readFileSync(path.join(GOLDEN_DIR, name), "utf-8");
      expect(canonicalDumps(doc), name).toBe(golden);
    }
  });
});
