#!/usr/bin/env node
import { runSubsetEmbeddings } from "./cli.js";

try {
  process.exit(runSubsetEmbeddings(process.argv.slice(2)));
} catch (err) {
  console.error(`error: ${(err as Error).message}`);
  process.exit(2);
}
