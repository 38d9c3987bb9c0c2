/**
 * Minimal deterministic SVG scene builder: fixed formatting, no randomness,
 * no system fonts measured, so a figure is byte-stable for fixed inputs.
 */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const DEFAULT_MARGIN: Margin = { top: 34, right: 16, bottom: 42, left: 58 };

export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  const r = Math.round(x * 100) / 100;
  return Object.is(r, -0) ? "0" : String(r);
}

/** Short human label for tick values. */
export function tickLabel(x: number): string {
  if (x === 0) return "0";
  const ax = Math.abs(x);
  if (ax >= 0.01 && ax < 10000) {
    const s = x.toPrecision(3);
    return String(Number(s));
  }
  return x.toExponential(1).replace("e-", "e-").replace("e+", "e");
}

export class LinearScale {
  constructor(
    readonly d0: number,
    readonly d1: number,
    readonly r0: number,
    readonly r1: number,
  ) {}

  map(x: number): number {
    const t = (x - this.d0) / (this.d1 - this.d0 || 1);
    return this.r0 + t * (this.r1 - this.r0);
  }

  ticks(n = 5): number[] {
    const span = this.d1 - this.d0;
    if (span <= 0) return [this.d0];
    const step = Math.pow(10, Math.floor(Math.log10(span / n)));
    const err = (span / n) / step;
    const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
    const s = mult * step;
    const start = Math.ceil(this.d0 / s) * s;
    const out: number[] = [];
    for (let v = start; v <= this.d1 + 1e-12 * Math.abs(span); v += s) {
      out.push(Math.abs(v) < 1e-12 * Math.abs(span) ? 0 : v);
    }
    return out;
  }
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

export class Svg {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
      `<rect width="${width}" height="${height}" fill="white"/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = "#000", width = 1, dash = ""): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
        `stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.5, dash = ""): void {
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  circle(x: number, y: number, r: number, fill: string, stroke = "none"): void {
    this.parts.push(
      `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${fmt(r)}" fill="${fill}" stroke="${stroke}"/>`,
    );
  }

  text(x: number, y: number, content: string, opts: { size?: number; anchor?: string; fill?: string; rotate?: number } = {}): void {
    const size = opts.size ?? 11;
    const anchor = opts.anchor ?? "start";
    const fill = opts.fill ?? "#000";
    const esc = content.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
    const rot = opts.rotate
      ? ` transform="rotate(${opts.rotate} ${fmt(x)} ${fmt(y)})"`
      : "";
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" text-anchor="${anchor}" fill="${fill}"${rot}>${esc}</text>`,
    );
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

export interface Frame {
  xs: LinearScale;
  ys: LinearScale;
}

/** Axis frame with ticks; labels are data-space via the provided formatter. */
export function drawFrame(
  svg: Svg,
  margin: Margin,
  xs: LinearScale,
  ys: LinearScale,
  xLabel: string,
  yLabel: string,
  labelFor: (v: number) => string = tickLabel,
): void {
  const x0 = xs.r0;
  const x1 = xs.r1;
  const yTop = ys.r1;
  const yBot = ys.r0;
  svg.line(x0, yBot, x1, yBot, "#333");
  svg.line(x0, yBot, x0, yTop, "#333");
  for (const v of xs.ticks()) {
    const px = xs.map(v);
    svg.line(px, yBot, px, yBot + 4, "#333");
    svg.line(px, yBot, px, yTop, "#eee");
    svg.text(px, yBot + 16, labelFor(v), { anchor: "middle", size: 10 });
  }
  for (const v of ys.ticks()) {
    const py = ys.map(v);
    svg.line(x0 - 4, py, x0, py, "#333");
    svg.line(x0, py, x1, py, "#eee");
    svg.text(x0 - 6, py + 3, labelFor(v), { anchor: "end", size: 10 });
  }
  const midX = (x0 + x1) / 2;
  svg.text(midX, yBot + 32, xLabel, { anchor: "middle", size: 12 });
  svg.text(16, (yTop + yBot) / 2, yLabel, { anchor: "middle", size: 12, rotate: -90 });
}
