/**
 * Marching-squares iso-lines on a cell-centered scalar grid.
 *
 * Returns unordered line segments in data coordinates; good enough for
 * contour rendering, no topology reconstruction needed.
 */

export type Segment = [number, number, number, number];

function lerp(a: number, b: number, fa: number, fb: number, level: number): number {
  const t = (level - fa) / (fb - fa);
  return a + t * (b - a);
}

export function isoSegments(
  field: number[][], // field[i][j], i along x
  xs: number[],
  ys: number[],
  level: number,
): Segment[] {
  const out: Segment[] = [];
  const nx = field.length;
  const ny = field[0].length;
  for (let i = 0; i < nx - 1; i++) {
    for (let j = 0; j < ny - 1; j++) {
      const f00 = field[i][j];
      const f10 = field[i + 1][j];
      const f11 = field[i + 1][j + 1];
      const f01 = field[i][j + 1];
      let idx = 0;
      if (f00 > level) idx |= 1;
      if (f10 > level) idx |= 2;
      if (f11 > level) idx |= 4;
      if (f01 > level) idx |= 8;
      if (idx === 0 || idx === 15) continue;

      // crossing points on the four cell edges
      const bottom: [number, number] | null =
        (f00 > level) !== (f10 > level)
          ? [lerp(xs[i], xs[i + 1], f00, f10, level), ys[j]]
          : null;
      const top: [number, number] | null =
        (f01 > level) !== (f11 > level)
          ? [lerp(xs[i], xs[i + 1], f01, f11, level), ys[j + 1]]
          : null;
      const left: [number, number] | null =
        (f00 > level) !== (f01 > level)
          ? [xs[i], lerp(ys[j], ys[j + 1], f00, f01, level)]
          : null;
      const right: [number, number] | null =
        (f10 > level) !== (f11 > level)
          ? [xs[i + 1], lerp(ys[j], ys[j + 1], f10, f11, level)]
          : null;

      const pts = [bottom, right, top, left].filter((p): p is [number, number] => p !== null);
      if (pts.length === 2) {
        out.push([pts[0][0], pts[0][1], pts[1][0], pts[1][1]]);
      } else if (pts.length === 4) {
        // saddle: split by the cell-center average
        const center = (f00 + f10 + f11 + f01) / 4;
        if ((center > level) === (f00 > level)) {
          out.push([bottom![0], bottom![1], right![0], right![1]]);
          out.push([top![0], top![1], left![0], left![1]]);
        } else {
          out.push([bottom![0], bottom![1], left![0], left![1]]);
          out.push([top![0], top![1], right![0], right![1]]);
        }
      }
    }
  }
  return out;
}
