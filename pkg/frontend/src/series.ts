/**
 * Grouping of log rows into plot series: one panel per distinct panel-key
 * value, one curve per distinct group-key value, and the y value at each
 * iteration is the mean stationarity across whatever rows share it
 * (e.g. seeds). Pre-averaged inputs pass through unchanged because the mean
 * of a single value is itself.
 */

import { LogRow } from "./csv";

export type GroupKey = "topology" | "n" | "d" | "tau" | "seed" | "alpha";

export interface Curve {
  label: string;
  ks: number[];
  ys: number[];
}

export interface Panel {
  title: string;
  curves: Curve[];
}

function keyValue(row: LogRow, key: GroupKey): string {
  const v = row[key];
  return v === undefined ? "?" : String(v);
}

/** Sort curve keys numerically when possible, with "inf" always last. */
export function compareGroupValues(a: string, b: string): number {
  if (a === b) return 0;
  if (a === "inf") return 1;
  if (b === "inf") return -1;
  const na = Number(a);
  const nb = Number(b);
  if (Number.isFinite(na) && Number.isFinite(nb)) return na - nb;
  return a < b ? -1 : 1;
}

export function curveLabel(key: GroupKey, value: string): string {
  if (key === "tau" && value === "inf") return "vanilla GT";
  return `${key}=${value}`;
}

export function buildPanels(rows: LogRow[], groupBy: GroupKey, panelBy: GroupKey): Panel[] {
  // panel -> curve -> k -> accumulated stationarity values
  const acc = new Map<string, Map<string, Map<number, number[]>>>();
  for (const row of rows) {
    const panel = keyValue(row, panelBy);
    const curve = keyValue(row, groupBy);
    let curves = acc.get(panel);
    if (!curves) acc.set(panel, (curves = new Map()));
    let points = curves.get(curve);
    if (!points) curves.set(curve, (points = new Map()));
    let bucket = points.get(row.k);
    if (!bucket) points.set(row.k, (bucket = []));
    bucket.push(row.stationarity);
  }

  const panels: Panel[] = [];
  for (const panelValue of [...acc.keys()].sort(compareGroupValues)) {
    const curves: Curve[] = [];
    const curveMap = acc.get(panelValue)!;
    for (const curveValue of [...curveMap.keys()].sort(compareGroupValues)) {
      const points = curveMap.get(curveValue)!;
      const ks = [...points.keys()].sort((a, b) => a - b);
      const ys = ks.map((k) => {
        const bucket = points.get(k)!;
        return bucket.reduce((s, v) => s + v, 0) / bucket.length;
      });
      curves.push({ label: curveLabel(groupBy, curveValue), ks, ys });
    }
    panels.push({ title: `${panelBy}=${panelValue}`, curves });
  }
  return panels;
}
