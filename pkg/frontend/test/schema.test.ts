import { describe, expect, it } from "vitest";

import { CSV_HEADER, SchemaError, parseResultCsv } from "../src/schema.js";

const HEADER = CSV_HEADER.join(",");

export const GE_CSV = [
  HEADER,
  "ge-sweep,gen-error,2,1.5,l2,gaussian,0.367561266,0.372757689,0.0027,30,0",
  "ge-sweep,gen-error,2,2,l2,gaussian,0.381223702,0.378,0.0036,30,0",
  "ge-sweep,gen-error,2,1.5,l1,gaussian,0.387625547,0.389,0.003,30,1",
  "ge-sweep,gen-error,2,2,l1,gaussian,0.405982,0.406,0.004,30,0",
  "ge-sweep,gen-error,2,1.5,linf,gaussian,0.386251,0.3859,0.005,30,0",
  "ge-sweep,gen-error,2,2,linf,gaussian,0.400151,0.4,0.004,30,2",
].join("\n");

export const PHASE_CSV = [
  HEADER,
  "phase,separable-fraction,0.25,0.35,,gaussian,0.495234,0.05,0.04,20,0",
  "phase,separable-fraction,0.25,0.64,,gaussian,0.495234,0.95,0.04,20,0",
  "phase,separable-fraction,1,0.31,,gaussian,0.439071,0,0,20,0",
  "phase,separable-fraction,1,0.57,,gaussian,0.439071,1,0,20,0",
  "phase,separable-fraction,4,0.15,,gaussian,0.221529,0.1,0.06,20,0",
  "phase,separable-fraction,4,0.29,,gaussian,0.221529,0.9,0.06,20,0",
].join("\n");

describe("parseResultCsv", () => {
  it("accepts a valid ge-sweep file for fig2", () => {
    const rows = parseResultCsv(GE_CSV, "fig2");
    expect(rows).toHaveLength(6);
    expect(rows[0].theory).toBeCloseTo(0.367561266, 9);
  });

  it("accepts a valid phase file for fig1", () => {
    expect(parseResultCsv(PHASE_CSV, "fig1")).toHaveLength(6);
  });

  it("rejects a header with missing columns", () => {
    const bad = GE_CSV.replace(",failures", "");
    const lines = bad.split("\n");
    lines[0] = lines[0].replace(",failures", "");
    expect(() => parseResultCsv(lines.join("\n"), "fig2")).toThrow(SchemaError);
  });

  it("rejects reordered headers", () => {
    const lines = GE_CSV.split("\n");
    lines[0] = lines[0].split(",").reverse().join(",");
    expect(() => parseResultCsv(lines.join("\n"), "fig2")).toThrow(SchemaError);
  });

  it("rejects the wrong experiment for the figure tag", () => {
    expect(() => parseResultCsv(PHASE_CSV, "fig2")).toThrow(/fig2 needs ge-sweep/);
    expect(() => parseResultCsv(GE_CSV, "fig1")).toThrow(SchemaError);
  });

  it("rejects non-numeric values", () => {
    const corrupted = GE_CSV.replace("0.381223702", "oops");
    expect(() => parseResultCsv(corrupted, "fig2")).toThrow(SchemaError);
  });

  it("rejects empty files", () => {
    expect(() => parseResultCsv(HEADER, "fig2")).toThrow(/no data rows/);
  });

  it("allows empty theory cells (infeasible rows)", () => {
    const withEmpty =
      GE_CSV + "\nge-sweep,gen-error,2,0.2,l2,gaussian,,,,0,0";
    const rows = parseResultCsv(withEmpty, "fig2");
    expect(rows[6].theory).toBeNull();
    expect(rows[6].empirical_mean).toBeNull();
  });
});
