/**
 * CSV schema validation for experiment result files.
 *
 * Each figure tag expects a specific experiment/metric combination; any
 * header or row mismatch raises SchemaError before anything is rendered.
 */

import Papa from "papaparse";
import { z } from "zod";

export const CSV_HEADER = [
  "experiment",
  "metric",
  "kappa",
  "delta",
  "potential",
  "prior",
  "theory",
  "empirical_mean",
  "empirical_stderr",
  "trials",
  "failures",
] as const;

export type FigureTag = "fig1" | "fig2" | "fig3" | "fig4";

export class SchemaError extends Error {}

const numeric = z
  .string()
  .transform((s) => (s === "" ? null : Number(s)))
  .refine((v) => v === null || Number.isFinite(v), "not a finite number");

const rowSchema = z.object({
  experiment: z.enum(["phase", "ge-sweep", "support"]),
  metric: z.string(),
  kappa: numeric,
  delta: numeric,
  potential: z.string(),
  prior: z.string(),
  theory: numeric,
  empirical_mean: numeric,
  empirical_stderr: numeric,
  trials: numeric,
  failures: numeric,
});

export type ResultRow = z.infer<typeof rowSchema>;

const FIGURE_REQUIREMENTS: Record<
  FigureTag,
  { experiment: string; metric: string }
> = {
  fig1: { experiment: "phase", metric: "separable-fraction" },
  fig2: { experiment: "ge-sweep", metric: "gen-error" },
  fig3: { experiment: "ge-sweep", metric: "gen-error" },
  fig4: { experiment: "ge-sweep", metric: "gen-error" },
};

export function parseResultCsv(text: string, fig: FigureTag): ResultRow[] {
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`CSV parse failure: ${parsed.errors[0].message}`);
  }
  const header = parsed.meta.fields ?? [];
  if (
    header.length !== CSV_HEADER.length ||
    !CSV_HEADER.every((h, i) => header[i] === h)
  ) {
    throw new SchemaError(
      `header mismatch: expected ${CSV_HEADER.join(",")} got ${header.join(",")}`,
    );
  }
  const want = FIGURE_REQUIREMENTS[fig];
  const rows: ResultRow[] = [];
  for (const [index, raw] of parsed.data.entries()) {
    const check = rowSchema.safeParse(raw);
    if (!check.success) {
      throw new SchemaError(
        `row ${index + 1}: ${check.error.issues[0]?.message ?? "invalid"}`,
      );
    }
    const row = check.data;
    if (row.experiment !== want.experiment || row.metric !== want.metric) {
      throw new SchemaError(
        `row ${index + 1}: ${fig} needs ${want.experiment}/${want.metric}, ` +
          `got ${row.experiment}/${row.metric}`,
      );
    }
    if (row.kappa === null || row.delta === null) {
      throw new SchemaError(`row ${index + 1}: kappa and delta are required`);
    }
    rows.push(row);
  }
  if (rows.length === 0) {
    throw new SchemaError("no data rows");
  }
  return rows;
}
