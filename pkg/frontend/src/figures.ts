/**
 * Figure assembly from validated result rows.
 *
 * Conventions: theory as solid lines, empirical as circle markers with
 * +/- 2 standard-error bars; potentials colored l1 red, l2 blue, linf
 * black. fig1 plots the separability threshold over kappa with empirical
 * fractions as opacity-coded markers per kappa.
 */

import { FigureTag, ResultRow, SchemaError } from "./schema.js";
import { Extent, Figure, Series } from "./svg.js";

export const POTENTIAL_COLORS: Record<string, string> = {
  l1: "red",
  l2: "blue",
  linf: "black",
};

function extent(values: number[], padFraction = 0.05): Extent {
  const min = Math.min(...values);
  const max = Math.max(...values);
  const pad = (max - min || 1) * padFraction;
  return { min: min - pad, max: max + pad };
}

function buildPhaseFigure(rows: ResultRow[]): Figure {
  const byKappa = new Map<number, ResultRow[]>();
  for (const row of rows) {
    const list = byKappa.get(row.kappa!) ?? [];
    list.push(row);
    byKappa.set(row.kappa!, list);
  }
  const kappas = [...byKappa.keys()].sort((a, b) => a - b);
  const theoryPoints: Array<[number, number]> = kappas.map((k) => [
    k,
    byKappa.get(k)![0].theory ?? NaN,
  ]);
  if (theoryPoints.some(([, v]) => !Number.isFinite(v))) {
    throw new SchemaError("fig1 rows need the theory threshold column");
  }
  const series: Series[] = [
    { kind: "line", name: "threshold", color: "black", points: theoryPoints },
  ];
  for (const k of kappas) {
    const pts = byKappa
      .get(k)!
      .sort((a, b) => a.delta! - b.delta!)
      .map((row) => ({
        x: k,
        y: row.delta!,
        opacity: Math.max(0.08, row.empirical_mean ?? 0),
      }));
    series.push({
      kind: "markers",
      name: `empirical-kappa-${k}`,
      color: "blue",
      points: pts,
    });
  }
  const deltas = rows.map((r) => r.delta!);
  return {
    width: 640,
    height: 440,
    xLabel: "signal strength kappa",
    yLabel: "overparameterization ratio delta",
    xDomain: extent(kappas),
    yDomain: extent([...deltas, 0]),
    series,
    title: "separability threshold: line = theory, circles = empirical fraction (opacity)",
  };
}

function buildGeFigure(rows: ResultRow[], fig: FigureTag): Figure {
  const potentials = [...new Set(rows.map((r) => r.potential))].sort();
  for (const pot of potentials) {
    if (!(pot in POTENTIAL_COLORS)) {
      throw new SchemaError(`unknown potential ${pot || "(empty)"}`);
    }
  }
  const series: Series[] = [];
  for (const pot of potentials) {
    const sub = rows
      .filter((r) => r.potential === pot && r.theory !== null)
      .sort((a, b) => a.delta! - b.delta!);
    if (sub.length > 0) {
      series.push({
        kind: "line",
        name: `theory-${pot}`,
        color: POTENTIAL_COLORS[pot],
        points: sub.map((r) => [r.delta!, r.theory!]),
      });
    }
    const emp = rows
      .filter((r) => r.potential === pot && r.empirical_mean !== null)
      .sort((a, b) => a.delta! - b.delta!);
    if (emp.length > 0) {
      series.push({
        kind: "markers",
        name: `empirical-${pot}`,
        color: POTENTIAL_COLORS[pot],
        points: emp.map((r) => ({
          x: r.delta!,
          y: r.empirical_mean!,
          spread: 2 * (r.empirical_stderr ?? 0),
        })),
      });
    }
  }
  if (series.length === 0) {
    throw new SchemaError(`${fig}: no plottable series`);
  }
  return {
    width: 640,
    height: 440,
    xLabel: "overparameterization ratio delta",
    yLabel: "generalization error",
    xDomain: extent(rows.map((r) => r.delta!)),
    yDomain: { min: 0, max: 0.5 },
    series,
    title: `${fig}: lines = theory, circles = empirical (bars: 2 stderr)`,
  };
}

export function buildFigure(rows: ResultRow[], fig: FigureTag): Figure {
  return fig === "fig1" ? buildPhaseFigure(rows) : buildGeFigure(rows, fig);
}
