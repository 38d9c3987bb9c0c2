#!/usr/bin/env node
/**
 * plots <kind> --in a.csv[,b.csv...] --out figure.svg [--tol 1e-8]
 *
 * kinds: rates | energy | centerline | contours
 * The energy guard exits with status 2 when the modified energy increases
 * beyond tolerance (figure still written).
 */

import { makeFigure } from "./figures.js";

export function run(argv: string[]): number {
  const args = [...argv];
  const kind = args.shift();
  if (!kind || kind === "--help" || kind === "-h") {
    console.log("usage: plots <rates|energy|centerline|contours> --in a.csv[,b.csv] --out fig.svg [--tol T]");
    return kind ? 0 : 2;
  }
  let inputs: string[] = [];
  let out = "";
  let tol: number | undefined;
  for (let i = 0; i < args.length; i++) {
    const a = args[i];
    if (a === "--in") inputs = (args[++i] ?? "").split(",").filter((s) => s.length > 0);
    else if (a === "--out") out = args[++i] ?? "";
    else if (a === "--tol") tol = Number(args[++i]);
    else {
      console.error(`unknown argument '${a}'`);
      return 2;
    }
  }
  if (inputs.length === 0 || !out) {
    console.error("both --in and --out are required");
    return 2;
  }
  try {
    const result = makeFigure(kind, inputs, out, { tol });
    console.log(result.summary);
    console.log(`wrote ${out}`);
    return result.status;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 2;
  }
}

const isMain = process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (isMain) {
  process.exit(run(process.argv.slice(2)));
}
