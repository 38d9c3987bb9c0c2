/** Synthetic inputs mirroring the solver's documented CSV formats. */

export function ratesCsv(rows: Array<[number, number, number, number]>): string {
  const lines = ["tau,e_u,rate_u,e_Q,rate_Q,e_p,rate_p"];
  rows.forEach(([tau, eu, eq, ep], k) => {
    const rate = (prev: number, cur: number) =>
      k === 0 ? "" : Math.log2(prev / cur).toPrecision(17);
    const [pu, pq, pp] = k === 0 ? [NaN, NaN, NaN] : rows[k - 1].slice(1) as [number, number, number];
    lines.push([
      tau, eu, k === 0 ? "" : rate(pu, eu),
      eq, k === 0 ? "" : rate(pq, eq),
      ep, k === 0 ? "" : rate(pp, ep),
    ].join(","));
  });
  return lines.join("\n") + "\n";
}

/** Errors exactly halving with tau: slope exactly 1. */
export function perfectFirstOrderRates(): string {
  const rows: Array<[number, number, number, number]> = [];
  for (let k = 0; k < 4; k++) {
    const tau = 1 / (32 * 2 ** k);
    rows.push([tau, 1e-4 / 2 ** k, 1e-2 / 2 ** k, 1e-3 / 2 ** k]);
  }
  return ratesCsv(rows);
}

export function diagnosticsCsv(ts: number[], emods: number[], Ks?: number[]): string {
  const header = "step,t,Q,K,E_mod,A,B,C,C_crosscheck,div_inf,res_proj1,res_energy,cg_iters_total";
  const lines = [header];
  ts.forEach((t, k) => {
    const K = Ks ? Ks[k] : emods[k];
    lines.push([k + 1, t, 1, K, emods[k], 2, 0, -2, -2, 0, 0, 0, 10].join(","));
  });
  return lines.join("\n") + "\n";
}

export function lineCsv(source: string, coords: number[], values: number[]): string {
  const lines = [`# source: ${source}`, "coord,value"];
  coords.forEach((c, k) => lines.push(`${c},${values[k]}`));
  return lines.join("\n") + "\n";
}

export function snapshotFile(nx: number, ny: number, speedFn: (x: number, y: number) => number): string {
  const lines = [
    "# macproj field snapshot",
    `# grid: nx=${nx} ny=${ny} x0=0 x1=1 y0=0 y1=1`,
    "# t: 2",
    "# Q: 1",
    "x,y,u,v,p,speed",
  ];
  for (let i = 0; i < nx; i++) {
    for (let j = 0; j < ny; j++) {
      const x = (i + 0.5) / nx;
      const y = (j + 0.5) / ny;
      lines.push([x, y, 0, 0, 0, speedFn(x, y)].join(","));
    }
  }
  return lines.join("\n") + "\n";
}
