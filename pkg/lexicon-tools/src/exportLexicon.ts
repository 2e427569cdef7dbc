/**
 * Export a synonym lexicon for a vocabulary: one `lemma<TAB>syn1,syn2,...`
 * line per vocabulary word that has at least one usable synonym.
 *
 * Synonyms are the other member words of every synset containing the lemma,
 * in synset order then word order, lowercased, with multiword entries
 * (underscores) excluded, the lemma itself removed, duplicates dropped, and
 * the list truncated to `maxSynonyms`. Output is deterministic.
 */

import * as fs from "node:fs";

import { Pos, WordNet } from "./wordnet.js";

export interface ExportConfig {
  vocabPath: string;
  outPath: string;
  samePosOnly?: boolean;
  maxSynonyms?: number;
}

export const OOV_TOKEN = "<oov>";

export function readVocabulary(vocabPath: string): string[] {
  if (!fs.existsSync(vocabPath)) {
    throw new Error(`vocabulary file not found: ${vocabPath}`);
  }
  const lines = fs.readFileSync(vocabPath, "utf-8").split("\n");
  while (lines.length && lines[lines.length - 1] === "") lines.pop();
  if (!lines.length || lines[0] !== OOV_TOKEN) {
    throw new Error(`vocabulary file must reserve line 0 for ${OOV_TOKEN}`);
  }
  return lines;
}

export function synonymsForLemma(
  wn: WordNet,
  lemma: string,
  samePosOnly: boolean,
  maxSynonyms: number,
): string[] {
  let posFilter: Pos | undefined;
  if (samePosOnly) {
    posFilter = wn.dominantPos(lemma);
    if (!posFilter) return [];
  }
  const seen = new Set<string>();
  const out: string[] = [];
  const self = lemma.toLowerCase();
  for (const synset of wn.synsets(lemma, posFilter)) {
    for (const word of synset.words) {
      const lower = word.toLowerCase();
      if (lower.includes("_")) continue; // multiword synonyms excluded
      if (lower === self || seen.has(lower)) continue;
      seen.add(lower);
      out.push(lower);
      if (out.length >= maxSynonyms) return out;
    }
  }
  return out;
}

export function exportLexicon(wn: WordNet, config: ExportConfig): number {
  const maxSynonyms = config.maxSynonyms ?? 10;
  if (maxSynonyms < 1) {
    throw new Error("max synonyms per lemma must be >= 1");
  }
  const vocab = readVocabulary(config.vocabPath);
  const lines: string[] = [];
  for (const token of vocab.slice(1)) {
    const lemma = token.toLowerCase();
    const synonyms = synonymsForLemma(wn, lemma, !!config.samePosOnly, maxSynonyms);
    if (synonyms.length) {
      lines.push(`${lemma}\t${synonyms.join(",")}`);
    }
  }
  fs.writeFileSync(config.outPath, lines.join("\n") + (lines.length ? "\n" : ""));
  return lines.length;
}
