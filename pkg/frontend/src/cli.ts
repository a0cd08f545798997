#!/usr/bin/env node
/** render --fig fig2 --csv results.csv --out fig2.svg */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { SchemaError, renderFile } from "./render.js";
import type { FigureTag } from "./schema.js";

async function main(): Promise<void> {
  const argv = await yargs(hideBin(process.argv))
    .command("render", "render a figure from an experiment CSV")
    .option("fig", {
      choices: ["fig1", "fig2", "fig3", "fig4"] as const,
      demandOption: true,
      describe: "figure tag (determines the expected CSV schema)",
    })
    .option("csv", { type: "string", demandOption: true })
    .option("out", { type: "string", demandOption: true })
    .demandCommand(1)
    .strict()
    .parse();

  try {
    renderFile(argv.csv, argv.fig as FigureTag, argv.out);
    console.log(`wrote ${argv.out}`);
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`validation error: ${err.message}`);
      process.exit(1);
    }
    throw err;
  }
}

main();
