/**
 * Minimal reader for the WordNet 3.0 database files (as shipped by the
 * `wordnet-db` npm package): index.<pos> maps a lemma to its synset offsets
 * in sense order, data.<pos> holds the member words of each synset.
 */

import * as fs from "node:fs";
import { createRequire } from "node:module";
import * as path from "node:path";

export const POS_ORDER = ["noun", "verb", "adj", "adv"] as const;
export type Pos = (typeof POS_ORDER)[number];

interface IndexEntry {
  senseCount: number;
  offsets: number[];
}

export interface Synset {
  pos: Pos;
  offset: number;
  words: string[]; // as stored: underscores for spaces, adjective markers stripped
}

function stripAdjMarker(word: string): string {
  // adjective entries may carry a position marker: word(a), word(p), word(ip)
  return word.replace(/\((a|p|ip)\)$/, "");
}

export class WordNet {
  private index = new Map<Pos, Map<string, IndexEntry>>();
  private data = new Map<Pos, Map<number, string[]>>();

  constructor(dictDir: string) {
    if (!fs.existsSync(dictDir)) {
      throw new Error(
        `WordNet database not found at ${dictDir}; ` +
          `install it with: npm install wordnet-db`,
      );
    }
    for (const pos of POS_ORDER) {
      this.index.set(pos, this.readIndex(path.join(dictDir, `index.${pos}`)));
      this.data.set(pos, this.readData(path.join(dictDir, `data.${pos}`)));
    }
  }

  private readIndex(file: string): Map<string, IndexEntry> {
    const out = new Map<string, IndexEntry>();
    for (const line of fs.readFileSync(file, "utf-8").split("\n")) {
      if (!line || line.startsWith("  ")) continue; // license header
      const parts = line.trim().split(/\s+/);
      // lemma pos synset_cnt p_cnt [ptr...] sense_cnt tagsense_cnt offsets...
      const lemma = parts[0];
      const synsetCount = parseInt(parts[2], 10);
      const pCount = parseInt(parts[3], 10);
      const offsets = parts
        .slice(6 + pCount)
        .map((x) => parseInt(x, 10))
        .filter((x) => Number.isFinite(x));
      if (offsets.length !== synsetCount) continue; // malformed line
      out.set(lemma, { senseCount: synsetCount, offsets });
    }
    return out;
  }

  private readData(file: string): Map<number, string[]> {
    const out = new Map<number, string[]>();
    for (const line of fs.readFileSync(file, "utf-8").split("\n")) {
      if (!line || line.startsWith("  ")) continue;
      const body = line.split("|")[0].trim();
      const parts = body.split(/\s+/);
      // synset_offset lex_filenum ss_type w_cnt word lex_id [word lex_id...]
      const offset = parseInt(parts[0], 10);
      const wordCount = parseInt(parts[3], 16);
      const words: string[] = [];
      for (let i = 0; i < wordCount; i++) {
        words.push(stripAdjMarker(parts[4 + 2 * i]));
      }
      out.set(offset, words);
    }
    return out;
  }

  /** Synsets containing the lemma, in sense order, POS in fixed order. */
  synsets(lemma: string, posFilter?: Pos): Synset[] {
    const key = lemma.toLowerCase().replace(/ /g, "_");
    const found: Synset[] = [];
    for (const pos of POS_ORDER) {
      if (posFilter && pos !== posFilter) continue;
      const entry = this.index.get(pos)!.get(key);
      if (!entry) continue;
      for (const offset of entry.offsets) {
        const words = this.data.get(pos)!.get(offset);
        if (words) found.push({ pos, offset, words });
      }
    }
    return found;
  }

  /** The part of speech with the most senses for the lemma, if any. */
  dominantPos(lemma: string): Pos | undefined {
    const key = lemma.toLowerCase().replace(/ /g, "_");
    let best: Pos | undefined;
    let bestCount = 0;
    for (const pos of POS_ORDER) {
      const entry = this.index.get(pos)!.get(key);
      if (entry && entry.senseCount > bestCount) {
        best = pos;
        bestCount = entry.senseCount;
      }
    }
    return best;
  }
}

export function defaultDictDir(): string {
  // wordnet-db exposes its dict path; resolved lazily so the parser can also
  // be pointed at any other WordNet 3.x dict directory
  try {
    const req = createRequire(import.meta.url);
    const wndb = req("wordnet-db") as { path: string };
    return wndb.path;
  } catch {
    throw new Error(
      "wordnet-db package not installed; install it with: npm install wordnet-db",
    );
  }
}
