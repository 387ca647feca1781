/** Log/linear line-chart rendering of grouped curves into a pixel raster. */

import { Curve, Panel } from "./series";
import { Color, Raster, textWidth } from "./raster";

export const PANEL_W = 560;
export const PANEL_H = 400;
const MARGIN = { left: 62, right: 14, top: 22, bottom: 34 };

export const PALETTE: Color[] = [
  [31, 119, 180],
  [255, 127, 14],
  [44, 160, 44],
  [214, 39, 40],
  [148, 103, 189],
  [140, 86, 75],
  [227, 119, 194],
  [127, 127, 127],
];

const AXIS: Color = [40, 40, 40];
const GRID: Color = [225, 225, 225];

export interface Extent {
  lo: number;
  hi: number;
}

/** Round tick step down to a 1/2/5 decade multiple. */
function niceStep(span: number, target: number): number {
  const raw = span / Math.max(target, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  for (const mult of [1, 2, 5, 10]) {
    if (raw <= mult * mag) return mult * mag;
  }
  return 10 * mag;
}

export function linearTicks(lo: number, hi: number, target = 5): number[] {
  if (!(hi > lo)) return [lo];
  const step = niceStep(hi - lo, target);
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

export function decadeTicks(lo: number, hi: number): number[] {
  const first = Math.ceil(Math.log10(lo) - 1e-9);
  const last = Math.floor(Math.log10(hi) + 1e-9);
  const exps: number[] = [];
  const stride = Math.max(1, Math.ceil((last - first) / 8));
  for (let e = first; e <= last; e += stride) exps.push(e);
  return exps;
}

export function formatTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) {
    return v.toExponential(0).replace("e+", "e+").replace("e-", "e-");
  }
  const text = v.toFixed(3);
  return text.replace(/\.?0+$/, "");
}

function yExtent(curves: Curve[], logY: boolean): Extent {
  let lo = Infinity;
  let hi = -Infinity;
  for (const curve of curves) {
    for (const y of curve.ys) {
      if (logY && !(y > 0)) continue;
      if (y < lo) lo = y;
      if (y > hi) hi = y;
    }
  }
  if (!Number.isFinite(lo)) {
    // nothing plottable on a log axis; fall back to a unit band
    return { lo: logY ? 1e-1 : 0, hi: 1 };
  }
  if (lo === hi) {
    return logY ? { lo: lo / 10, hi: hi * 10 } : { lo: lo - 1, hi: hi + 1 };
  }
  return { lo, hi };
}

function xExtent(curves: Curve[]): Extent {
  let lo = Infinity;
  let hi = -Infinity;
  for (const curve of curves) {
    for (const k of curve.ks) {
      if (k < lo) lo = k;
      if (k > hi) hi = k;
    }
  }
  if (!Number.isFinite(lo)) return { lo: 0, hi: 1 };
  if (lo === hi) return { lo: lo - 1, hi: hi + 1 };
  return { lo, hi };
}

/** Render one panel into the raster with its top-left corner at (x0, y0). */
export function drawPanel(
  img: Raster,
  x0: number,
  y0: number,
  panel: Panel,
  logY: boolean,
): void {
  const plotX = x0 + MARGIN.left;
  const plotY = y0 + MARGIN.top;
  const plotW = PANEL_W - MARGIN.left - MARGIN.right;
  const plotH = PANEL_H - MARGIN.top - MARGIN.bottom;

  const ex = xExtent(panel.curves);
  const ey = yExtent(panel.curves, logY);
  const yLo = logY ? Math.log10(ey.lo) : ey.lo;
  const yHi = logY ? Math.log10(ey.hi) : ey.hi;

  const toX = (k: number) => plotX + ((k - ex.lo) / (ex.hi - ex.lo)) * plotW;
  const toY = (v: number) => {
    const t = logY ? Math.log10(v) : v;
    return plotY + plotH - ((t - yLo) / (yHi - yLo)) * plotH;
  };

  // gridlines and tick labels
  if (logY) {
    for (const e of decadeTicks(ey.lo, ey.hi)) {
      const v = Math.pow(10, e);
      const y = toY(v);
      img.line(plotX, y, plotX + plotW, y, GRID);
      const label = `1e${e >= 0 ? "+" : ""}${e}`;
      img.text(plotX - textWidth(label) - 4, y - 3, label, AXIS);
    }
  } else {
    for (const v of linearTicks(ey.lo, ey.hi)) {
      const y = toY(v);
      img.line(plotX, y, plotX + plotW, y, GRID);
      const label = formatTick(v);
      img.text(plotX - textWidth(label) - 4, y - 3, label, AXIS);
    }
  }
  for (const v of linearTicks(ex.lo, ex.hi, 6)) {
    const x = toX(v);
    img.line(x, plotY, x, plotY + plotH, GRID);
    const label = formatTick(v);
    img.text(x - textWidth(label) / 2, plotY + plotH + 6, label, AXIS);
  }

  // frame
  img.line(plotX, plotY, plotX, plotY + plotH, AXIS);
  img.line(plotX, plotY + plotH, plotX + plotW, plotY + plotH, AXIS);

  // curves
  panel.curves.forEach((curve, index) => {
    const color = PALETTE[index % PALETTE.length];
    let prev: [number, number] | null = null;
    for (let i = 0; i < curve.ks.length; i++) {
      const y = curve.ys[i];
      if (logY && !(y > 0)) {
        prev = null; // not representable on a log axis; break the polyline
        continue;
      }
      const point: [number, number] = [toX(curve.ks[i]), toY(y)];
      if (prev) {
        img.line(prev[0], prev[1], point[0], point[1], color, 2);
      } else if (curve.ks.length === 1) {
        img.fillRect(Math.round(point[0]) - 2, Math.round(point[1]) - 2, 4, 4, color);
      }
      prev = point;
    }
  });

  // title and legend
  img.text(plotX + 4, y0 + 6, panel.title, AXIS);
  const legendW = Math.max(...panel.curves.map((c) => textWidth(c.label))) + 26;
  const legendX = plotX + plotW - legendW - 4;
  let legendY = plotY + 6;
  img.fillRect(legendX - 3, legendY - 3, legendW + 6, panel.curves.length * 11 + 6, [252, 252, 252]);
  panel.curves.forEach((curve, index) => {
    const color = PALETTE[index % PALETTE.length];
    img.line(legendX, legendY + 3, legendX + 16, legendY + 3, color, 2);
    img.text(legendX + 22, legendY - 1, curve.label, AXIS);
    legendY += 11;
  });

  // axis captions
  img.text(plotX + Math.floor(plotW / 2) - textWidth("iteration") / 2,
           y0 + PANEL_H - 12, "iteration", AXIS);
}

/** Compose panels into a near-square grid and return the raster. */
export function renderPanels(panels: Panel[], logY: boolean): Raster {
  const cols = Math.ceil(Math.sqrt(panels.length));
  const rows = Math.ceil(panels.length / cols);
  const img = new Raster(cols * PANEL_W, rows * PANEL_H);
  panels.forEach((panel, index) => {
    const cx = (index % cols) * PANEL_W;
    const cy = Math.floor(index / cols) * PANEL_H;
    drawPanel(img, cx, cy, panel, logY);
  });
  return img;
}
