/**
 * Filter a text embedding file down to the lines whose token is in a
 * vocabulary. Kept lines are byte-identical to the input and keep their
 * original order; every input line must carry the same number of values.
 */

import * as fs from "node:fs";

import { readVocabulary } from "./exportLexicon.js";

export interface SubsetConfig {
  embPath: string;
  vocabPath: string;
  outPath: string;
}

export function subsetEmbeddings(config: SubsetConfig): {
  kept: number;
  total: number;
} {
  if (!fs.existsSync(config.embPath)) {
    throw new Error(`embedding file not found: ${config.embPath}`);
  }
  const vocab = new Set(readVocabulary(config.vocabPath).map((t) => t.toLowerCase()));
  const raw = fs.readFileSync(config.embPath, "utf-8");
  const lines = raw.split("\n");
  while (lines.length && lines[lines.length - 1] === "") lines.pop();

  let dim = -1;
  const kept: string[] = [];
  lines.forEach((line, i) => {
    if (!line) return;
    const parts = line.split(" ");
    const values = parts.length - 1;
    if (dim === -1) {
      dim = values;
    } else if (values !== dim) {
      throw new Error(
        `dimension inconsistency at line ${i + 1}: expected ${dim} values, got ${values}`,
      );
    }
    if (vocab.has(parts[0].toLowerCase())) {
      kept.push(line);
    }
  });
  fs.writeFileSync(config.outPath, kept.length ? kept.join("\n") + "\n" : "");
  return { kept: kept.length, total: lines.length };
}
