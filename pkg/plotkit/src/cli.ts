#!/usr/bin/env node
/**
 * plotkit render <spec> [--csv-dir DIR] [--out FILE.svg] [--dump FILE.tsv]
 * plotkit dump   <spec> [--csv-dir DIR] [--out FILE.tsv]
 *
 * The spec's `csv` path resolves against --csv-dir (default: the spec's
 * directory). Exit codes: 0 ok, 1 data error, 2 usage error.
 */
import { readFileSync, writeFileSync } from "node:fs";
import { basename, dirname, join } from "node:path";

import { parseCsv } from "./csv.js";
import { parseFigSpec } from "./figspec.js";
import { buildSeries, dumpTsv } from "./render.js";
import { renderSvg } from "./svg.js";

function usage(): never {
  process.stderr.write(
    "usage: plotkit render <figN.spec> [--csv-dir DIR] [--out F.svg] [--dump F.tsv]\n" +
      "       plotkit dump   <figN.spec> [--csv-dir DIR] [--out F.tsv]\n",
  );
  process.exit(2);
}

interface Args {
  command: string;
  spec: string;
  csvDir?: string;
  out?: string;
  dump?: string;
}

function parseArgs(argv: string[]): Args {
  if (argv.length < 2) usage();
  const [command, spec, ...rest] = argv;
  if (command !== "render" && command !== "dump") usage();
  const args: Args = { command, spec };
  for (let i = 0; i < rest.length; i += 2) {
    const flag = rest[i];
    const value = rest[i + 1];
    if (value === undefined) usage();
    if (flag === "--csv-dir") args.csvDir = value;
    else if (flag === "--out") args.out = value;
    else if (flag === "--dump") args.dump = value;
    else usage();
  }
  return args;
}

export function main(argv: string[]): number {
  const args = parseArgs(argv);
  try {
    const specText = readFileSync(args.spec, "utf8");
    const spec = parseFigSpec(specText, basename(args.spec));
    const csvPath = join(args.csvDir ?? dirname(args.spec), spec.csv);
    const rows = parseCsv(readFileSync(csvPath, "utf8"), basename(csvPath));
    const set = buildSeries(rows, spec);
    for (const w of set.warnings) process.stderr.write(`warning: ${w}\n`);
    if (args.command === "dump") {
      const text = dumpTsv(set);
      if (args.out) writeFileSync(args.out, text);
      else process.stdout.write(text);
      return 0;
    }
    const svg = renderSvg(set);
    const out = args.out ?? `fig${spec.figure}.svg`;
    writeFileSync(out, svg);
    if (args.dump) writeFileSync(args.dump, dumpTsv(set));
    process.stderr.write(`wrote ${out}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

if (process.argv[1] && import.meta.url.endsWith(basename(process.argv[1]))) {
  process.exit(main(process.argv.slice(2)));
}
