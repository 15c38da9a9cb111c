/**
 * Deterministic SVG line charts: fixed canvas, fonts, palette and tick
 * logic, so identical inputs yield byte-identical files.
 */
import { SeriesSet } from "./render.js";

const WIDTH = 800;
const HEIGHT = 500;
const MARGIN = { left: 70, right: 180, top: 50, bottom: 55 };
const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

const fmt = (v: number) => v.toFixed(2);

function tickLabel(v: number): string {
  if (v !== 0 && (Math.abs(v) < 1e-3 || Math.abs(v) >= 1e4)) {
    return v.toExponential(1);
  }
  return String(Number(v.toPrecision(4)));
}

interface Scale {
  (v: number): number;
  ticks: number[];
}

function linearScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  if (hi <= lo) {
    hi = lo + 1;
    lo = lo - 1;
  }
  const f = ((v: number) => outLo + ((v - lo) / (hi - lo)) * (outHi - outLo)) as Scale;
  f.ticks = Array.from({ length: 6 }, (_, i) => lo + ((hi - lo) * i) / 5);
  return f;
}

function logScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi <= lo ? lo * 10 : hi);
  const f = ((v: number) => {
    const clamped = Math.max(v, lo); // zeros sit on the axis floor
    return outLo + ((Math.log10(clamped) - llo) / (lhi - llo)) * (outHi - outLo);
  }) as Scale;
  const span = Math.max(1, Math.ceil(lhi) - Math.floor(llo));
  f.ticks = Array.from({ length: span + 1 }, (_, i) => 10 ** (Math.floor(llo) + i));
  return f;
}

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export function renderSvg(set: SeriesSet): string {
  const { spec, series } = set;
  const xs = series.flatMap((s) => s.points.map((p) => p.x)).filter(Number.isFinite);
  const ys = series.flatMap((s) => s.points.map((p) => p.y));
  const xLo = xs.length ? Math.min(...xs) : 0;
  const xHi = xs.length ? Math.max(...xs) : 1;
  let yLo = ys.length ? Math.min(...ys) : 0;
  let yHi = ys.length ? Math.max(...ys) : 1;
  if (spec.yScale === "log") {
    const positive = ys.filter((v) => v > 0);
    yLo = positive.length ? Math.min(...positive) : 1e-6;
    yHi = positive.length ? Math.max(...positive) : 1;
  } else {
    const pad = (yHi - yLo || 1) * 0.05;
    yLo -= pad;
    yHi += pad;
  }
  const sx = linearScale(xLo, xHi, MARGIN.left, WIDTH - MARGIN.right);
  const sy =
    spec.yScale === "log"
      ? logScale(yLo, yHi, HEIGHT - MARGIN.bottom, MARGIN.top)
      : linearScale(yLo, yHi, HEIGHT - MARGIN.bottom, MARGIN.top);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="monospace" font-size="12">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="14">${esc(spec.title)}</text>`,
  );
  // axes
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`);
  for (const t of sx.ticks) {
    const px = fmt(sx(t));
    parts.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 5}" stroke="black"/>`);
    parts.push(
      `<text x="${px}" y="${y0 + 20}" text-anchor="middle">${esc(tickLabel(t))}</text>`,
    );
  }
  for (const t of sy.ticks) {
    const py = fmt(sy(t));
    parts.push(`<line x1="${x0 - 5}" y1="${py}" x2="${x0}" y2="${py}" stroke="black"/>`);
    parts.push(
      `<text x="${x0 - 8}" y="${py}" text-anchor="end" dominant-baseline="middle">` +
        `${esc(tickLabel(t))}</text>`,
    );
  }
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 12}" text-anchor="middle">${esc(spec.xLabel)}</text>`,
  );
  parts.push(
    `<text x="18" y="${(y0 + y1) / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 18 ${(y0 + y1) / 2})">${esc(spec.yLabel)}</text>`,
  );
  // series
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const coords = s.points
      .filter((p) => Number.isFinite(p.x))
      .map((p) => `${fmt(sx(p.x))},${fmt(sy(p.y))}`);
    if (coords.length > 1) {
      parts.push(
        `<polyline fill="none" stroke="${color}" stroke-width="1.5" points="${coords.join(" ")}"/>`,
      );
    }
    for (const c of coords) {
      const [px, py] = c.split(",");
      parts.push(`<circle cx="${px}" cy="${py}" r="3" fill="${color}"/>`);
    }
    const ly = MARGIN.top + 18 * i;
    const lx = WIDTH - MARGIN.right + 12;
    parts.push(
      `<line x1="${lx}" y1="${ly}" x2="${lx + 22}" y2="${ly}" stroke="${color}" stroke-width="1.5"/>`,
    );
    parts.push(
      `<text x="${lx + 28}" y="${ly}" dominant-baseline="middle">${esc(s.label)}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
