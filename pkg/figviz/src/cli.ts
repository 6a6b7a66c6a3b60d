#!/usr/bin/env node
// figviz render --csv <path> --out <path> [--format svg|png]

import { readFileSync, writeFileSync } from "node:fs";

import { SchemaError, parseCurveCsv } from "./csv.js";
import { renderPng } from "./png.js";
import { renderSvg } from "./svg.js";

export function run(argv: string[]): number {
  if (argv[0] !== "render") {
    process.stderr.write("usage: figviz render --csv <path> --out <path> [--format svg|png]\n");
    return 2;
  }
  const options = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      process.stderr.write(`error: cannot parse arguments near ${key}\n`);
      return 2;
    }
    options.set(key.slice(2), value);
  }
  const csvPath = options.get("csv");
  const outPath = options.get("out");
  const format = options.get("format") ?? "svg";
  if (!csvPath || !outPath) {
    process.stderr.write("error: --csv and --out are required\n");
    return 2;
  }
  if (format !== "svg" && format !== "png") {
    process.stderr.write(`error: unknown format ${format}\n`);
    return 2;
  }
  let text: string;
  try {
    text = readFileSync(csvPath, "utf-8");
  } catch (err) {
    process.stderr.write(`error: cannot read ${csvPath}: ${String(err)}\n`);
    return 3;
  }
  let table;
  try {
    table = parseCurveCsv(text);
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
  const payload = format === "svg" ? renderSvg(table) : renderPng(table);
  try {
    writeFileSync(outPath, payload);
  } catch (err) {
    process.stderr.write(`error: cannot write ${outPath}: ${String(err)}\n`);
    return 3;
  }
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  process.exit(run(process.argv.slice(2)));
}
