/**
 * Reader for the experiment-log CSV schema:
 *
 *   topology,n,d,tau,seed,alpha,k,stationarity,consensus,tracking_residual,fbar
 *
 * The seed-averaged companion files drop the `seed` column; both layouts are
 * accepted. Any other header is a schema mismatch and the error names the
 * missing columns.
 */

export const FULL_COLUMNS = [
  "topology", "n", "d", "tau", "seed", "alpha",
  "k", "stationarity", "consensus", "tracking_residual", "fbar",
] as const;

export const MEAN_COLUMNS = FULL_COLUMNS.filter((c) => c !== "seed");

const NUMERIC = new Set([
  "n", "d", "seed", "alpha", "k", "stationarity", "consensus", "tracking_residual", "fbar",
]);

/** One logged row; `seed` is absent in pre-averaged files. */
export interface LogRow {
  topology: string;
  n: number;
  d: number;
  tau: string; // kept as its CSV token ("20", "inf") for grouping
  seed?: number;
  alpha: number;
  k: number;
  stationarity: number;
  consensus: number;
  tracking_residual: number;
  fbar: number;
}

export class SchemaError extends Error {}

function checkHeader(header: string[], path: string): string[] {
  const full = FULL_COLUMNS as readonly string[];
  if (header.length === full.length && full.every((c, i) => header[i] === c)) {
    return [...full];
  }
  if (header.length === MEAN_COLUMNS.length && MEAN_COLUMNS.every((c, i) => header[i] === c)) {
    return [...MEAN_COLUMNS];
  }
  const missing = full.filter((c) => !header.includes(c) && c !== "seed");
  const noun = missing.length > 0 ? `missing column ${missing.join(", ")}` : "unexpected columns";
  throw new SchemaError(`${path}: schema mismatch: ${noun} (got "${header.join(",")}")`);
}

export function parseCsv(text: string, path: string): LogRow[] {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${path}: empty file`);
  }
  const columns = checkHeader(lines[0].split(","), path);
  const rows: LogRow[] = [];
  for (let lineNo = 1; lineNo < lines.length; lineNo++) {
    const parts = lines[lineNo].split(",");
    if (parts.length !== columns.length) {
      throw new SchemaError(
        `${path}:${lineNo + 1}: expected ${columns.length} fields, got ${parts.length}`,
      );
    }
    const row: Record<string, string | number> = {};
    for (let i = 0; i < columns.length; i++) {
      const name = columns[i];
      if (NUMERIC.has(name)) {
        const value = Number(parts[i]);
        if (!Number.isFinite(value)) {
          throw new SchemaError(`${path}:${lineNo + 1}: non-numeric ${name} "${parts[i]}"`);
        }
        row[name] = value;
      } else {
        row[name] = parts[i];
      }
    }
    rows.push(row as unknown as LogRow);
  }
  return rows;
}
