#!/usr/bin/env node
/**
 * Command line wrapper: render convergence SVGs from a metrics CSV.
 *
 * One metric to one file:
 *   convergence-plots --csv out/metrics.csv --metric err_z_L2 --out err_z.svg
 *
 * Every metric into a directory (one SVG per metric):
 *   convergence-plots --csv out/metrics.csv --out plots/
 *
 * --instants is "sup" (default) or comma-separated times, e.g. "0.5,1.0".
 */

import { mkdirSync } from "fs";
import path from "path";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import {
  EmptyDataError,
  METRIC_COLUMNS,
  PlotSpec,
  SchemaError,
  plotConvergence,
} from "./plot_convergence.js";

function parseInstants(text: string): number[] | "sup" {
  if (text === "sup") {
    return "sup";
  }
  return text.split(",").map((part) => {
    const value = Number(part.trim());
    if (!Number.isFinite(value)) {
      throw new SchemaError(`bad instant "${part.trim()}"`);
    }
    return value;
  });
}

export function main(argv: string[]): number {
  const args = yargs(argv)
    .option("csv", { type: "string", demandOption: true, describe: "metrics CSV path" })
    .option("metric", { type: "string", describe: "column to plot (default: all)" })
    .option("out", { type: "string", demandOption: true, describe: "output SVG path, or directory when --metric is omitted" })
    .option("instants", { type: "string", default: "sup", describe: '"sup" or comma-separated times' })
    .strict()
    .parseSync();

  try {
    const instants = parseInstants(args.instants);
    if (args.metric !== undefined) {
      const spec: PlotSpec = {
        csvPath: args.csv,
        metric: args.metric,
        instants,
        output: args.out,
      };
      console.log(`SVG -> ${plotConvergence(spec)}`);
    } else {
      mkdirSync(args.out, { recursive: true });
      for (const metric of METRIC_COLUMNS) {
        const output = path.join(args.out, `${metric}.svg`);
        console.log(
          `SVG -> ${plotConvergence({ csvPath: args.csv, metric, instants, output })}`
        );
      }
    }
  } catch (err) {
    if (err instanceof SchemaError || err instanceof EmptyDataError) {
      console.error(`error: ${err.constructor.name}: ${err.message}`);
      return 1;
    }
    throw err;
  }
  return 0;
}

if (process.argv[1] && import.meta.url.endsWith(path.basename(process.argv[1]))) {
  process.exit(main(hideBin(process.argv)));
}
