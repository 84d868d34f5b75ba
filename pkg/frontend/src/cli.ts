#!/usr/bin/env node
/**
 * Figure renderer for pmd-accel result files.
 *
 * Usage:
 *   pmd-accel-plot sweep    --in results.csv --out fig.svg [--right-axis kappa|entropy]
 *   pmd-accel-plot inexact  --in results.csv --out fig.svg
 *   pmd-accel-plot polytope --in points.csv[,trajectory.csv] --out fig.svg
 *
 * Exit codes: 0 ok, 2 usage/config error, 1 runtime failure.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { parseCsv } from "./csv.js";
import { renderPolytopeFigure } from "./polytope.js";
import { renderInexactFigure, renderSweepFigure, RightAxisMetric } from "./sweep.js";

const USAGE =
  "usage: pmd-accel-plot <sweep|inexact|polytope> --in <csv[,csv]> --out <file.svg> [--right-axis kappa|entropy]";

class ConfigError extends Error {}

interface Args {
  figure: string;
  inputs: string[];
  out: string;
  rightAxis: RightAxisMetric;
}

export function parseArgs(argv: string[]): Args {
  const [figure, ...rest] = argv;
  if (!figure || !["sweep", "inexact", "polytope"].includes(figure)) {
    throw new ConfigError(USAGE);
  }
  let inputs: string[] = [];
  let out = "";
  let rightAxis: RightAxisMetric = "kappa";
  for (let i = 0; i < rest.length; i += 2) {
    const flag = rest[i];
    const value = rest[i + 1];
    if (value === undefined) throw new ConfigError(`missing value for ${flag}`);
    if (flag === "--in") inputs = value.split(",");
    else if (flag === "--out") out = value;
    else if (flag === "--right-axis") {
      if (value !== "kappa" && value !== "entropy") {
        throw new ConfigError(`--right-axis must be kappa or entropy, got ${value}`);
      }
      rightAxis = value;
    } else throw new ConfigError(`unknown flag ${flag}`);
  }
  if (inputs.length === 0 || !out) throw new ConfigError(USAGE);
  return { figure, inputs, out, rightAxis };
}

export function renderFigure(args: Args): string {
  const tables = args.inputs.map((path) => {
    let text: string;
    try {
      text = readFileSync(path, "utf-8");
    } catch {
      throw new ConfigError(`cannot read ${path}`);
    }
    try {
      return parseCsv(text);
    } catch (err) {
      throw new ConfigError(`invalid CSV ${path}: ${(err as Error).message}`);
    }
  });
  try {
    if (args.figure === "sweep") return renderSweepFigure(tables[0], args.rightAxis);
    if (args.figure === "inexact") return renderInexactFigure(tables[0]);
    return renderPolytopeFigure(tables[0], tables[1] ?? null);
  } catch (err) {
    if ((err as Error).message.startsWith("missing column")) {
      throw new ConfigError((err as Error).message);
    }
    throw err;
  }
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
  try {
    const svg = renderFigure(args);
    writeFileSync(args.out, svg, "utf-8");
    console.log(`wrote ${args.out}`);
    return 0;
  } catch (err) {
    if (err instanceof ConfigError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    console.error(`runtime error: ${(err as Error).message}`);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
