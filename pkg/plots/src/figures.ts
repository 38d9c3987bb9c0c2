/**
 * The four figure kinds, each reading only the solver's documented CSV
 * formats and writing a deterministic SVG.
 */

import { writeFileSync } from "node:fs";
import {
  LineSeries,
  Snapshot,
  Table,
  column,
  readLineSeries,
  readSnapshot,
  readTable,
  requireColumns,
} from "./csv.js";
import {
  checkNonIncreasing,
  fitLogLogSlope,
  maxAbsDeviation,
} from "./analysis.js";
import {
  DEFAULT_MARGIN,
  LinearScale,
  PALETTE,
  Svg,
  drawFrame,
  tickLabel,
} from "./svg.js";

export interface FigureResult {
  svg: string;
  summary: string;
  /** nonzero means a guard tripped (only the energy figure uses this) */
  status: number;
}

function finitePairs(x: number[], y: number[]): Array<[number, number]> {
  const out: Array<[number, number]> = [];
  for (let i = 0; i < x.length; i++) {
    if (Number.isFinite(x[i]) && Number.isFinite(y[i])) out.push([x[i], y[i]]);
  }
  return out;
}

// ----------------------------------------------------------------------
// rates: log2-log2 convergence plot with fitted slopes
// ----------------------------------------------------------------------

export function ratesFigure(table: Table, path = "<rates>"): FigureResult {
  requireColumns(table, ["tau", "e_u", "e_Q", "e_p"], path);
  const tau = column(table, "tau");
  const series = [
    { name: "velocity error", col: "e_u" },
    { name: "multiplier error", col: "e_Q" },
    { name: "pressure error", col: "e_p" },
  ];

  const width = 560;
  const height = 420;
  const m = DEFAULT_MARGIN;
  const svg = new Svg(width, height);

  const all: Array<{ name: string; pts: Array<[number, number]>; slope: number }> = [];
  for (const s of series) {
    const e = column(table, s.col);
    const fit = fitLogLogSlope(tau, e);
    const pts = finitePairs(tau.map(Math.log2), e.map(Math.log2));
    all.push({ name: s.name, pts, slope: fit.slope });
  }

  const xsAll = all.flatMap((s) => s.pts.map((p) => p[0]));
  const ysAll = all.flatMap((s) => s.pts.map((p) => p[1]));
  const xs = new LinearScale(Math.min(...xsAll) - 0.3, Math.max(...xsAll) + 0.3,
    m.left, width - m.right);
  const ys = new LinearScale(Math.min(...ysAll) - 0.5, Math.max(...ysAll) + 0.5,
    height - m.bottom, m.top);

  drawFrame(svg, m, xs, ys, "log2(time step)", "log2(error)");
  const lines: string[] = [];
  all.forEach((s, k) => {
    const color = PALETTE[k % PALETTE.length];
    svg.polyline(s.pts.map(([x, y]) => [xs.map(x), ys.map(y)]), color);
    for (const [x, y] of s.pts) svg.circle(xs.map(x), ys.map(y), 3, color);
    const label = `${s.name}: slope ${s.slope.toFixed(2)}`;
    svg.text(m.left + 10, m.top + 14 + 14 * k, label, { fill: color, size: 11 });
    lines.push(label);
  });
  svg.text(width / 2, 18, "Temporal convergence (terminal-time errors)",
    { anchor: "middle", size: 13 });

  return { svg: svg.render(), summary: lines.join("\n"), status: 0 };
}

// ----------------------------------------------------------------------
// energy: E_mod and K vs t, with the monotonicity guard
// ----------------------------------------------------------------------

export function energyFigure(table: Table, path = "<diagnostics>", tol?: number): FigureResult {
  requireColumns(table, ["t", "K", "E_mod"], path);
  const t = column(table, "t");
  const K = column(table, "K");
  const emod = column(table, "E_mod");
  const guardTol = tol ?? 1e-8 * (Math.abs(emod[0]) + 1.0);
  const report = checkNonIncreasing(emod, guardTol);

  const width = 560;
  const height = 420;
  const m = DEFAULT_MARGIN;
  const svg = new Svg(width, height);
  const lo = Math.min(...emod, ...K);
  const hi = Math.max(...emod, ...K);
  const pad = 0.05 * (hi - lo || 1);
  const xs = new LinearScale(t[0], t[t.length - 1], m.left, width - m.right);
  const ys = new LinearScale(lo - pad, hi + pad, height - m.bottom, m.top);
  drawFrame(svg, m, xs, ys, "time", "energy");
  svg.polyline(finitePairs(t, emod).map(([a, b]) => [xs.map(a), ys.map(b)]), PALETTE[0], 2);
  svg.polyline(finitePairs(t, K).map(([a, b]) => [xs.map(a), ys.map(b)]), PALETTE[2], 1.5, "4,3");
  svg.text(m.left + 10, m.top + 14, "modified energy", { fill: PALETTE[0], size: 11 });
  svg.text(m.left + 10, m.top + 28, "kinetic + pressure energy K", { fill: PALETTE[2], size: 11 });
  const verdict = report.monotone
    ? `monotone within tol ${guardTol.toExponential(2)}`
    : `INCREASE ${report.maxIncrease.toExponential(3)} at row ${report.atIndex} (tol ${guardTol.toExponential(2)})`;
  svg.text(width / 2, 18, `Energy ledger: ${verdict}`, { anchor: "middle", size: 13 });

  return {
    svg: svg.render(),
    summary: `max increase ${report.maxIncrease.toExponential(3)}; ${verdict}`,
    status: report.monotone ? 0 : 2,
  };
}

// ----------------------------------------------------------------------
// centerline: numeric profile vs published reference markers
// ----------------------------------------------------------------------

export function centerlineFigure(profile: LineSeries, reference: LineSeries): FigureResult {
  const dev = maxAbsDeviation(profile.coords, profile.values, reference.coords, reference.values);

  const width = 560;
  const height = 420;
  const m = DEFAULT_MARGIN;
  const svg = new Svg(width, height);
  const lo = Math.min(...profile.values, ...reference.values);
  const hi = Math.max(...profile.values, ...reference.values);
  const pad = 0.08 * (hi - lo || 1);
  const xs = new LinearScale(0, 1, m.left, width - m.right);
  const ys = new LinearScale(lo - pad, hi + pad, height - m.bottom, m.top);
  drawFrame(svg, m, xs, ys, "position along centerline", "velocity");
  svg.polyline(
    finitePairs(profile.coords, profile.values).map(([a, b]) => [xs.map(a), ys.map(b)]),
    PALETTE[0], 2);
  for (let i = 0; i < reference.coords.length; i++) {
    svg.circle(xs.map(reference.coords[i]), ys.map(reference.values[i]), 3.5, "white", PALETTE[1]);
  }
  svg.text(m.left + 10, m.top + 14, profile.source || "computed profile",
    { fill: PALETTE[0], size: 11 });
  svg.text(m.left + 10, m.top + 28, `reference: ${reference.source || "unnamed"}`,
    { fill: PALETTE[1], size: 11 });
  svg.text(width / 2, 18,
    `Centerline comparison, max |deviation| = ${dev.toFixed(4)}`,
    { anchor: "middle", size: 13 });

  return {
    svg: svg.render(),
    summary: `max deviation ${dev.toFixed(6)} vs ${reference.source || "reference"}`,
    status: 0,
  };
}

// ----------------------------------------------------------------------
// contours: speed iso-line panels from field snapshots
// ----------------------------------------------------------------------

import { isoSegments } from "./marching.js";

export function contoursFigure(snaps: Snapshot[], levels = 10): FigureResult {
  if (snaps.length === 0) throw new Error("need at least one snapshot");
  const panel = 240;
  const pad = 34;
  const cols = Math.min(3, snaps.length);
  const rowsN = Math.ceil(snaps.length / cols);
  const width = cols * panel + pad * 2;
  const height = rowsN * (panel + 26) + pad;
  const svg = new Svg(width, height);

  const lines: string[] = [];
  snaps.forEach((snap, k) => {
    const ci = k % cols;
    const ri = Math.floor(k / cols);
    const ox = pad + ci * panel;
    const oy = pad + ri * (panel + 26);
    const xs = new LinearScale(snap.x0, snap.x1, ox + 6, ox + panel - 6);
    const ys = new LinearScale(snap.y0, snap.y1, oy + panel - 6, oy + 6);
    svg.line(xs.r0, ys.r0, xs.r1, ys.r0, "#333");
    svg.line(xs.r0, ys.r0, xs.r0, ys.r1, "#333");
    svg.line(xs.r1, ys.r0, xs.r1, ys.r1, "#333");
    svg.line(xs.r0, ys.r1, xs.r1, ys.r1, "#333");

    const xcoords = Array.from({ length: snap.nx },
      (_, i) => snap.x0 + ((i + 0.5) * (snap.x1 - snap.x0)) / snap.nx);
    const ycoords = Array.from({ length: snap.ny },
      (_, j) => snap.y0 + ((j + 0.5) * (snap.y1 - snap.y0)) / snap.ny);
    let maxSpeed = 0;
    for (const row of snap.speed) for (const v of row) maxSpeed = Math.max(maxSpeed, v);
    for (let L = 1; L <= levels; L++) {
      const level = (maxSpeed * L) / (levels + 1);
      const segs = isoSegments(snap.speed, xcoords, ycoords, level);
      const color = PALETTE[L % PALETTE.length];
      for (const [xa, ya, xb, yb] of segs) {
        svg.line(xs.map(xa), ys.map(ya), xs.map(xb), ys.map(yb), color, 0.8);
      }
    }
    svg.text(ox + panel / 2, oy + panel + 12, `t = ${tickLabel(snap.t)}`, { anchor: "middle", size: 11 });
    lines.push(`panel t=${tickLabel(snap.t)}: max speed ${maxSpeed.toFixed(4)}`);
  });
  svg.text(width / 2, 18, "Velocity magnitude contours", { anchor: "middle", size: 13 });
  return { svg: svg.render(), summary: lines.join("\n"), status: 0 };
}

// ----------------------------------------------------------------------
// file-level entry points
// ----------------------------------------------------------------------

export function makeFigure(
  kind: string,
  inputs: string[],
  outPath: string,
  opts: { tol?: number } = {},
): FigureResult {
  let result: FigureResult;
  switch (kind) {
    case "rates": {
      if (inputs.length !== 1) throw new Error("rates takes exactly one CSV");
      result = ratesFigure(readTable(inputs[0]), inputs[0]);
      break;
    }
    case "energy": {
      if (inputs.length !== 1) throw new Error("energy takes exactly one CSV");
      result = energyFigure(readTable(inputs[0]), inputs[0], opts.tol);
      break;
    }
    case "centerline": {
      if (inputs.length !== 2) {
        throw new Error("centerline takes the profile CSV then the reference CSV");
      }
      result = centerlineFigure(readLineSeries(inputs[0]), readLineSeries(inputs[1]));
      break;
    }
    case "contours": {
      if (inputs.length === 0) throw new Error("contours takes one or more snapshot files");
      result = contoursFigure(inputs.map(readSnapshot));
      break;
    }
    default:
      throw new Error(`unknown figure kind '${kind}' (rates|energy|centerline|contours)`);
  }
  writeFileSync(outPath, result.svg, "utf-8");
  return result;
}
