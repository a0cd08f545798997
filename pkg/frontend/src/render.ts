/** End-to-end render: validate CSV, assemble the figure, emit SVG. */

import { readFileSync, writeFileSync } from "node:fs";

import { buildFigure } from "./figures.js";
import { FigureTag, SchemaError, parseResultCsv } from "./schema.js";
import { renderSvg } from "./svg.js";

export { SchemaError };

export function renderToString(csvText: string, fig: FigureTag): string {
  const rows = parseResultCsv(csvText, fig);
  return renderSvg(buildFigure(rows, fig));
}

export function renderFile(csvPath: string, fig: FigureTag, outPath: string): void {
  if (!outPath.endsWith(".svg")) {
    throw new SchemaError(
      `unsupported output format for ${outPath}; this renderer emits .svg only`,
    );
  }
  const text = readFileSync(csvPath, "utf8");
  // build fully in memory first so a validation failure writes nothing
  const svg = renderToString(text, fig);
  writeFileSync(outPath, svg);
}
