/**
 * Turn filtered CSV rows into plottable series. Values are carried through
 * untouched (raw strings retained for the dump); only axis placement is
 * computed here.
 */
import { Column, Row } from "./csv.js";
import { FigureSpec } from "./figspec.js";

export interface Point {
  x: number;
  y: number;
  xRaw: string;
  yRaw: string;
  partialRaw: string;
  chiRaw: string;
  metric: string;
}

export interface Series {
  label: string;
  points: Point[];
}

export interface SeriesSet {
  spec: FigureSpec;
  series: Series[];
  warnings: string[];
}

function axisValue(row: Row, key: string): { num: number; raw: string } {
  if (key === "flip_sum") {
    const num = row.flipSum();
    return { num, raw: String(num) };
  }
  if (key === "metric") return { num: NaN, raw: row.raw.metric };
  return { num: row.num(key as Column), raw: row.raw[key as Column] };
}

function groupLabel(row: Row, key: string): string {
  if (key === "metric") return row.raw.metric;
  if (key === "flip_sum") return `flip_sum = ${row.flipSum()}`;
  return `${key} = ${row.raw[key as Column]}`;
}

export function buildSeries(rows: Row[], spec: FigureSpec): SeriesSet {
  const warnings: string[] = [];
  const filtered = rows.filter((r) => spec.metrics.includes(r.raw.metric));
  for (const metric of spec.metrics) {
    if (!filtered.some((r) => r.raw.metric === metric)) {
      warnings.push(`empty series: no rows with metric '${metric}'`);
    }
  }
  const groups = new Map<string, Point[]>();
  for (const row of filtered) {
    const label = groupLabel(row, spec.groupBy);
    const { num, raw } = axisValue(row, spec.x);
    const point: Point = {
      x: num,
      y: row.num("value"),
      xRaw: raw,
      yRaw: row.raw.value,
      partialRaw: row.raw.partial,
      chiRaw: row.raw.chi,
      metric: row.raw.metric,
    };
    if (!groups.has(label)) groups.set(label, []);
    groups.get(label)!.push(point);
  }
  const series = [...groups.entries()]
    .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
    .map(([label, points]) => ({
      label,
      // stable sort on x keeps equal-x rows in file order
      points: points
        .map((p, i) => ({ p, i }))
        .sort((u, v) => (u.p.x - v.p.x) || (u.i - v.i))
        .map(({ p }) => p),
    }));
  if (series.length === 0) warnings.push("empty figure: no series after filtering");
  return { spec, series, warnings };
}

/**
 * Numeric dump: the exact plotted columns, tab separated. y and the raw
 * axis columns reproduce the CSV text verbatim for diffing.
 */
export function dumpTsv(set: SeriesSet): string {
  const lines = ["metric\tgroup\tx\ty\tpartial\tchi"];
  for (const s of set.series) {
    for (const p of s.points) {
      lines.push(
        [p.metric, s.label, p.xRaw, p.yRaw, p.partialRaw, p.chiRaw].join("\t"),
      );
    }
  }
  return lines.join("\n") + "\n";
}
