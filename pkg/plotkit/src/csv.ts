/**
 * Reader for the simulation result CSV schema.
 *
 * The schema is fixed: a fixed header line, optional `#` metadata lines
 * above it, LF endings, `.` decimals. Raw field strings are preserved so
 * dumps can be compared byte for byte against the source file.
 */

export const CSV_COLUMNS = [
  "experiment",
  "M",
  "N_b",
  "N_e",
  "L",
  "phase_design",
  "partial",
  "chi",
  "snr_linear",
  "metric",
  "value",
  "bits",
  "errors",
  "frames",
  "seed",
] as const;

export type Column = (typeof CSV_COLUMNS)[number];

/** Columns that may be used as an axis or grouping key, plus derived ones. */
export const NUMERIC_COLUMNS: Column[] = [
  "M",
  "N_b",
  "N_e",
  "L",
  "partial",
  "chi",
  "snr_linear",
  "value",
  "bits",
  "errors",
  "frames",
  "seed",
];

export class CsvError extends Error {}

export class MissingColumnError extends CsvError {
  constructor(readonly column: string, source: string) {
    super(`${source}: missing column '${column}'`);
  }
}

export interface Row {
  /** Raw field text exactly as it appeared in the file. */
  raw: Record<Column, string>;
  /** Numeric view of a column (NaN for non-numeric fields). */
  num(col: Column): number;
  /** partial + chi, the flip-probability sum. */
  flipSum(): number;
}

function makeRow(raw: Record<Column, string>): Row {
  return {
    raw,
    num(col: Column): number {
      return Number(raw[col]);
    },
    flipSum(): number {
      return Number(raw.partial) + Number(raw.chi);
    },
  };
}

export function parseCsv(text: string, source = "csv"): Row[] {
  const rows: Row[] = [];
  let headerSeen = false;
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === "" || line.startsWith("#")) continue;
    if (!headerSeen) {
      const got = line.split(",");
      for (const col of CSV_COLUMNS) {
        if (!got.includes(col)) throw new MissingColumnError(col, source);
      }
      if (got.length !== CSV_COLUMNS.length || got.some((c, k) => c !== CSV_COLUMNS[k])) {
        throw new CsvError(`${source}: line ${i + 1}: header column order differs from the schema`);
      }
      headerSeen = true;
      continue;
    }
    const parts = lines[i].split(",");
    if (parts.length !== CSV_COLUMNS.length) {
      throw new CsvError(
        `${source}: line ${i + 1}: expected ${CSV_COLUMNS.length} fields, got ${parts.length}`,
      );
    }
    const raw = {} as Record<Column, string>;
    CSV_COLUMNS.forEach((col, k) => {
      raw[col] = parts[k];
    });
    const value = Number(raw.value);
    if (!Number.isFinite(value)) {
      throw new CsvError(`${source}: line ${i + 1}: non-finite value '${raw.value}'`);
    }
    rows.push(makeRow(raw));
  }
  if (!headerSeen) throw new CsvError(`${source}: missing header line`);
  return rows;
}
