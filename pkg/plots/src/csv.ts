/**
 * Readers for the solver's documented CSV formats.
 *
 * Three schemas are consumed: the rate table
 * (tau,e_u,rate_u,e_Q,rate_Q,e_p,rate_p), the per-step diagnostics table
 * (step,t,Q,K,E_mod,A,B,C,C_crosscheck,div_inf,res_proj1,res_energy,
 * cg_iters_total), and the two-column `coord,value` line format with an
 * optional `# source:` comment.  Schema violations throw with the offending
 * column or line named.
 */

import { readFileSync } from "node:fs";

export interface Table {
  columns: string[];
  rows: number[][]; // NaN for empty cells
}

export interface LineSeries {
  source: string;
  coords: number[];
  values: number[];
}

function splitLines(text: string): string[] {
  return text.split("\n").map((s) => s.trimEnd()).filter((s) => s.length > 0);
}

export function parseTable(text: string, path = "<memory>"): Table {
  const lines = splitLines(text).filter((s) => !s.startsWith("#"));
  if (lines.length === 0) throw new Error(`${path}: empty table`);
  const columns = lines[0].split(",").map((c) => c.trim());
  const rows: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== columns.length) {
      throw new Error(
        `${path}:${i + 1}: expected ${columns.length} cells, got ${cells.length}`,
      );
    }
    rows.push(cells.map((c) => (c.trim() === "" ? NaN : Number(c))));
  }
  return { columns, rows };
}

export function readTable(path: string): Table {
  return parseTable(readFileSync(path, "utf-8"), path);
}

export function requireColumns(table: Table, needed: string[], path = "<table>"): void {
  for (const name of needed) {
    if (!table.columns.includes(name)) {
      throw new Error(`${path}: missing required column '${name}'`);
    }
  }
}

export function column(table: Table, name: string): number[] {
  const k = table.columns.indexOf(name);
  if (k < 0) throw new Error(`missing required column '${name}'`);
  return table.rows.map((r) => r[k]);
}

export function parseLineSeries(text: string, path = "<memory>"): LineSeries {
  let source = "";
  const coords: number[] = [];
  const values: number[] = [];
  const lines = splitLines(text);
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i];
    if (line.startsWith("#")) {
      const body = line.replace(/^#+\s*/, "");
      if (body.toLowerCase().startsWith("source:")) {
        source = body.slice("source:".length).trim();
      }
      continue;
    }
    if (line.toLowerCase().startsWith("coord")) continue;
    const cells = line.split(",");
    if (cells.length !== 2) {
      throw new Error(`${path}:${i + 1}: expected 'coord,value', got '${line}'`);
    }
    const c = Number(cells[0]);
    const v = Number(cells[1]);
    if (!Number.isFinite(c) || !Number.isFinite(v)) {
      throw new Error(`${path}:${i + 1}: non-numeric entry '${line}'`);
    }
    coords.push(c);
    values.push(v);
  }
  if (coords.length === 0) throw new Error(`${path}: no data rows`);
  for (let i = 1; i < coords.length; i++) {
    if (coords[i] <= coords[i - 1]) {
      throw new Error(`${path}: coordinates must be strictly increasing`);
    }
  }
  return { source, coords, values };
}

export function readLineSeries(path: string): LineSeries {
  return parseLineSeries(readFileSync(path, "utf-8"), path);
}

export interface Snapshot {
  nx: number;
  ny: number;
  x0: number;
  x1: number;
  y0: number;
  y1: number;
  t: number;
  /** speed[i][j] on the cell-centered grid, i along x */
  speed: number[][];
}

export function parseSnapshot(text: string, path = "<memory>"): Snapshot {
  const lines = splitLines(text);
  const meta: Record<string, number> = {};
  let t = 0;
  for (const line of lines) {
    if (!line.startsWith("#")) break;
    const gm = line.match(/# grid: nx=(\S+) ny=(\S+) x0=(\S+) x1=(\S+) y0=(\S+) y1=(\S+)/);
    if (gm) {
      meta.nx = Number(gm[1]);
      meta.ny = Number(gm[2]);
      meta.x0 = Number(gm[3]);
      meta.x1 = Number(gm[4]);
      meta.y0 = Number(gm[5]);
      meta.y1 = Number(gm[6]);
    }
    const tm = line.match(/# t: (\S+)/);
    if (tm) t = Number(tm[1]);
  }
  if (!Number.isFinite(meta.nx) || !Number.isFinite(meta.ny)) {
    throw new Error(`${path}: snapshot is missing its grid metadata line`);
  }
  const table = parseTable(lines.filter((s) => !s.startsWith("#")).join("\n"), path);
  requireColumns(table, ["x", "y", "u", "v", "p", "speed"], path);
  const nx = meta.nx;
  const ny = meta.ny;
  if (table.rows.length !== nx * ny) {
    throw new Error(`${path}: expected ${nx * ny} rows, got ${table.rows.length}`);
  }
  const sCol = table.columns.indexOf("speed");
  const speed: number[][] = [];
  for (let i = 0; i < nx; i++) {
    const row: number[] = [];
    for (let j = 0; j < ny; j++) row.push(table.rows[i * ny + j][sCol]);
    speed.push(row);
  }
  return { nx, ny, x0: meta.x0, x1: meta.x1, y0: meta.y0, y1: meta.y1, t, speed };
}

export function readSnapshot(path: string): Snapshot {
  return parseSnapshot(readFileSync(path, "utf-8"), path);
}
