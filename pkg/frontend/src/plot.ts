/**
 * End-to-end figure rendering: read experiment CSV logs, average the
 * stationarity metric across seeds, and write a PNG with one curve per
 * group value (default: averaging period) and one panel per panel value
 * (default: topology).
 */

import * as fs from "fs";
import { PNG } from "pngjs";

import { LogRow, parseCsv, SchemaError } from "./csv";
import { renderPanels } from "./chart";
import { buildPanels, GroupKey } from "./series";

export interface PlotSpec {
  inputs: string[];
  output: string;
  logY: boolean;
  groupBy: GroupKey;
  panelBy: GroupKey;
}

export class PlotError extends Error {}

export function render(spec: PlotSpec): void {
  if (spec.inputs.length === 0) {
    throw new PlotError("no input files given");
  }
  const rows: LogRow[] = [];
  for (const path of spec.inputs) {
    let text: string;
    try {
      text = fs.readFileSync(path, "utf8");
    } catch (err) {
      throw new PlotError(`cannot read ${path}: ${(err as Error).message}`);
    }
    rows.push(...parseCsv(text, path));
  }
  if (rows.length === 0) {
    throw new PlotError("no data rows in the input");
  }
  const panels = buildPanels(rows, spec.groupBy, spec.panelBy);
  const raster = renderPanels(panels, spec.logY);
  const png = new PNG({ width: raster.width, height: raster.height });
  raster.data.copy(png.data);
  fs.writeFileSync(spec.output, PNG.sync.write(png));
}

export { SchemaError };
