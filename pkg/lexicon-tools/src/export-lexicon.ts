#!/usr/bin/env node
import { runExportLexicon } from "./cli.js";

try {
  process.exit(runExportLexicon(process.argv.slice(2)));
} catch (err) {
  console.error(`error: ${(err as Error).message}`);
  process.exit(2);
}
