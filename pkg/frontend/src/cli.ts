#!/usr/bin/env node
import { readdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { DataTable, parseCsvFile } from "./csv.js";
import { RenderResult, renderDephasing, renderFig1, renderFig2 } from "./figures.js";

const FIGURE_INPUTS: Record<string, [string, string]> = {
  fig1: ["fig1_trajectories", "fig1_averages"],
  fig2: ["fig2_frozen", "fig2_white"],
  dephasing: ["dephasing_reference", "dephasing_white"],
};

/** Newest CSV for a role, or the one with the requested stamp. */
function findInput(dir: string, role: string, stamp?: string): string {
  const pattern = new RegExp(`^${role}_(\\d{8}T\\d{12})\\.csv$`);
  const hits = readdirSync(dir)
    .map((f) => ({ f, m: f.match(pattern) }))
    .filter((x): x is { f: string; m: RegExpMatchArray } => x.m !== null)
    .filter((x) => !stamp || x.m[1] === stamp)
    .sort((a, b) => (a.m[1] < b.m[1] ? -1 : 1));
  if (hits.length === 0) {
    throw new Error(`no ${role}_<stamp>.csv found in ${dir}` + (stamp ? ` for stamp ${stamp}` : ""));
  }
  return join(dir, hits[hits.length - 1].f);
}

export function renderFromDir(figure: string, dir: string, stamp?: string): RenderResult {
  const roles = FIGURE_INPUTS[figure];
  if (!roles) {
    throw new Error(`unknown figure "${figure}" (expected fig1 | fig2 | dephasing)`);
  }
  const tables: DataTable[] = roles.map((role) => parseCsvFile(findInput(dir, role, stamp)));
  if (figure === "fig1") return renderFig1(tables[0], tables[1]);
  if (figure === "fig2") return renderFig2(tables[0], tables[1]);
  return renderDephasing(tables[0], tables[1]);
}

export function runCli(argv: string[]): number {
  const args = yargs(argv)
    .scriptName("plot")
    .command("$0 <figure>", "render a figure from collapse-lab CSV output", (y) =>
      y
        .positional("figure", { choices: ["fig1", "fig2", "dephasing"] as const, demandOption: true })
        .option("in", { type: "string", demandOption: true, describe: "directory with the CSV files" })
        .option("out", { type: "string", demandOption: true, describe: "output SVG path" })
        .option("stamp", { type: "string", describe: "pick a specific run stamp instead of the newest" }),
    )
    .strict()
    .exitProcess(false)
    .parseSync();

  try {
    const result = renderFromDir(args.figure as string, args.in as string,
                                 args.stamp as string | undefined);
    writeFileSync(args.out as string, result.svg);
    console.log(`wrote ${args.out} (${result.panelCount} panels, plotted sha256 ${result.plottedSha256.slice(0, 12)}...)`);
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("plot")) {
  process.exit(runCli(hideBin(process.argv)));
}
