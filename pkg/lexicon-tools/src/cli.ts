/** Shared CLI plumbing for the two exporter commands. */

import { parseArgs } from "node:util";

import { exportLexicon } from "./exportLexicon.js";
import { subsetEmbeddings } from "./subsetEmbeddings.js";
import { WordNet, defaultDictDir } from "./wordnet.js";

export function runExportLexicon(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      vocab: { type: "string" },
      out: { type: "string" },
      "same-pos": { type: "boolean", default: false },
      "max-syn": { type: "string", default: "10" },
      dict: { type: "string" },
      help: { type: "boolean", default: false },
    },
  });
  if (values.help || !values.vocab || !values.out) {
    console.error(
      "usage: export-lexicon --vocab v.txt --out lex.tsv [--same-pos] [--max-syn 10] [--dict DIR]",
    );
    return values.help ? 0 : 2;
  }
  const wn = new WordNet(values.dict ?? defaultDictDir());
  const written = exportLexicon(wn, {
    vocabPath: values.vocab,
    outPath: values.out,
    samePosOnly: values["same-pos"],
    maxSynonyms: parseInt(values["max-syn"]!, 10),
  });
  console.log(`wrote ${written} lexicon entries to ${values.out}`);
  return 0;
}

export function runSubsetEmbeddings(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      emb: { type: "string" },
      vocab: { type: "string" },
      out: { type: "string" },
      help: { type: "boolean", default: false },
    },
  });
  if (values.help || !values.emb || !values.vocab || !values.out) {
    console.error(
      "usage: subset-embeddings --emb glove.txt --vocab v.txt --out sub.txt",
    );
    return values.help ? 0 : 2;
  }
  const { kept, total } = subsetEmbeddings({
    embPath: values.emb,
    vocabPath: values.vocab,
    outPath: values.out,
  });
  console.log(`kept ${kept} of ${total} embedding lines -> ${values.out}`);
  return 0;
}
