/** Slope fitting and series checks shared by the figure builders. */

export interface SlopeFit {
  slope: number;
  intercept: number;
}

/** Least-squares line through (log2 x, log2 y); NaN pairs are skipped. */
export function fitLogLogSlope(x: number[], y: number[]): SlopeFit {
  const lx: number[] = [];
  const ly: number[] = [];
  for (let i = 0; i < x.length; i++) {
    if (Number.isFinite(x[i]) && Number.isFinite(y[i]) && x[i] > 0 && y[i] > 0) {
      lx.push(Math.log2(x[i]));
      ly.push(Math.log2(y[i]));
    }
  }
  const n = lx.length;
  if (n < 2) throw new Error("need at least two positive points to fit a slope");
  const mx = lx.reduce((a, b) => a + b, 0) / n;
  const my = ly.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  const slope = sxy / sxx;
  return { slope, intercept: my - slope * mx };
}

export interface MonotoneReport {
  monotone: boolean;
  maxIncrease: number;
  atIndex: number;
}

/** Largest upward jump of a series that should be non-increasing. */
export function checkNonIncreasing(values: number[], tol: number): MonotoneReport {
  let maxIncrease = 0;
  let atIndex = -1;
  for (let i = 1; i < values.length; i++) {
    const inc = values[i] - values[i - 1];
    if (inc > maxIncrease) {
      maxIncrease = inc;
      atIndex = i;
    }
  }
  return { monotone: maxIncrease <= tol, maxIncrease, atIndex };
}

/** Linear interpolation of (xs, ys) at x, clamped to the end values. */
export function interp(xs: number[], ys: number[], x: number): number {
  if (x <= xs[0]) return ys[0];
  if (x >= xs[xs.length - 1]) return ys[ys.length - 1];
  let lo = 0;
  let hi = xs.length - 1;
  while (hi - lo > 1) {
    const mid = (lo + hi) >> 1;
    if (xs[mid] <= x) lo = mid;
    else hi = mid;
  }
  const w = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return (1 - w) * ys[lo] + w * ys[hi];
}

export function maxAbsDeviation(
  profCoords: number[],
  profValues: number[],
  refCoords: number[],
  refValues: number[],
): number {
  let worst = 0;
  for (let i = 0; i < refCoords.length; i++) {
    const d = Math.abs(interp(profCoords, profValues, refCoords[i]) - refValues[i]);
    if (d > worst) worst = d;
  }
  return worst;
}
