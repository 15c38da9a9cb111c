/**
 * Figure specifications: flat `key = value` files shipped alongside the
 * simulator's reproduce recipes. One spec maps to exactly one layout.
 */
import { CSV_COLUMNS, Column, NUMERIC_COLUMNS } from "./csv.js";

/** Axis / grouping keys beyond the raw schema columns. */
export const DERIVED_KEYS = ["flip_sum", "metric"] as const;

export interface FigureSpec {
  figure: number;
  csv: string;
  metrics: string[];
  x: string;
  groupBy: string;
  yScale: "linear" | "log";
  xLabel: string;
  yLabel: string;
  title: string;
}

export class FigSpecError extends Error {}

const KNOWN_KEYS = new Set([
  "figure",
  "csv",
  "metric",
  "x",
  "group_by",
  "y_scale",
  "x_label",
  "y_label",
  "title",
]);

function axisAllowed(name: string): boolean {
  return (
    NUMERIC_COLUMNS.includes(name as Column) ||
    (DERIVED_KEYS as readonly string[]).includes(name)
  );
}

export function parseFigSpec(text: string, source = "spec"): FigureSpec {
  const pairs = new Map<string, string>();
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === "" || line.startsWith("#")) continue;
    const eq = line.indexOf("=");
    if (eq < 0) throw new FigSpecError(`${source}: line ${i + 1}: not 'key = value'`);
    const key = line.slice(0, eq).trim();
    if (!KNOWN_KEYS.has(key)) {
      throw new FigSpecError(`${source}: line ${i + 1}: unknown key '${key}'`);
    }
    pairs.set(key, line.slice(eq + 1).trim());
  }
  for (const req of ["figure", "csv", "metric", "x", "group_by"]) {
    if (!pairs.has(req)) throw new FigSpecError(`${source}: missing key '${req}'`);
  }
  const figure = Number(pairs.get("figure"));
  if (!Number.isInteger(figure) || figure < 3 || figure > 14) {
    throw new FigSpecError(`${source}: figure id must be an integer in 3..14`);
  }
  const x = pairs.get("x")!;
  if (!axisAllowed(x)) throw new FigSpecError(`${source}: '${x}' is not a plottable column`);
  const groupBy = pairs.get("group_by")!;
  if (!axisAllowed(groupBy) && !CSV_COLUMNS.includes(groupBy as Column)) {
    throw new FigSpecError(`${source}: '${groupBy}' is not a groupable column`);
  }
  const yScale = (pairs.get("y_scale") ?? "linear") as "linear" | "log";
  if (yScale !== "linear" && yScale !== "log") {
    throw new FigSpecError(`${source}: y_scale must be linear or log`);
  }
  return {
    figure,
    csv: pairs.get("csv")!,
    metrics: pairs.get("metric")!.split(",").map((s) => s.trim()).filter(Boolean),
    x,
    groupBy,
    yScale,
    xLabel: pairs.get("x_label") ?? pairs.get("x")!,
    yLabel: pairs.get("y_label") ?? "value",
    title: pairs.get("title") ?? `Figure ${figure}`,
  };
}
