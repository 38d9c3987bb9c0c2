"""Jitted smoothed-PCG kernel shared by the Poisson and Helmholtz solves.

One compiled routine implements Jacobi-preconditioned conjugate gradients
with minimal residual smoothing for the three stencil systems (`kind`):

    0  cell-centered -laplacian, homogeneous Neumann ghosts, zero-mean subspace
    1  alpha*I - nu*lap on interior u faces (reflected ghosts at j edges,
       Dirichlet zeros at i edges)
    2  same for interior v faces (roles of the axes swapped)

Loops are sequential with a fixed reduction order, so results are
bit-reproducible run to run; passes are fused to keep the per-iteration cost
at a handful of sweeps over the unknowns.  The smoothed residual norm is
non-increasing by construction; the routine re-verifies the true residual of
the smoothed iterate at the end and restarts once if recursion drift pushed
it above the target.
"""

from __future__ import annotations

import numpy as np
from numba import njit

KIND_NEUMANN = 0
KIND_HELM_U = 1
KIND_HELM_V = 2


@njit(cache=True, fastmath={'reassoc', 'contract'})
def _matvec(kind, x, out, alpha, nu, ihx2, ihy2):
    nx, ny = x.shape
    if kind == 0:
        # interior rows (branch-free in j after peeling the two edge columns)
        for i in range(nx):
            im = i - 1 if i > 0 else i
            ip = i + 1 if i < nx - 1 else i
            cx0 = 1.0 if i > 0 else 0.0
            cx1 = 1.0 if i < nx - 1 else 0.0
            row = x[i]
            rw = x[im]
            re = x[ip]
            o = out[i]
            o[0] = (cx0 + cx1) * row[0] * ihx2 - cx0 * rw[0] * ihx2 - cx1 * re[0] * ihx2 \
                + (row[0] - row[1]) * ihy2
            for j in range(1, ny - 1):
                o[j] = (cx0 + cx1) * row[j] * ihx2 - cx0 * rw[j] * ihx2 - cx1 * re[j] * ihx2 \
                    + (2.0 * row[j] - row[j - 1] - row[j + 1]) * ihy2
            o[ny - 1] = (cx0 + cx1) * row[ny - 1] * ihx2 - cx0 * rw[ny - 1] * ihx2 \
                - cx1 * re[ny - 1] * ihx2 + (row[ny - 1] - row[ny - 2]) * ihy2
    elif kind == 1:
        # interior u faces: Dirichlet zeros beyond i edges, reflection at j edges
        d0 = alpha + nu * (2.0 * ihx2 + 2.0 * ihy2)
        for i in range(nx):
            row = x[i]
            rw = x[i - 1] if i > 0 else row
            re = x[i + 1] if i < nx - 1 else row
            cw = nu * ihx2 if i > 0 else 0.0
            ce = nu * ihx2 if i < nx - 1 else 0.0
            o = out[i]
            o[0] = (d0 + nu * ihy2) * row[0] - cw * rw[0] - ce * re[0] - nu * ihy2 * row[1]
            for j in range(1, ny - 1):
                o[j] = d0 * row[j] - cw * rw[j] - ce * re[j] \
                    - nu * ihy2 * (row[j - 1] + row[j + 1])
            o[ny - 1] = (d0 + nu * ihy2) * row[ny - 1] - cw * rw[ny - 1] - ce * re[ny - 1] \
                - nu * ihy2 * row[ny - 2]
    else:
        # interior v faces: reflection at i edges, Dirichlet zeros beyond j edges
        d0 = alpha + nu * (2.0 * ihx2 + 2.0 * ihy2)
        for i in range(nx):
            row = x[i]
            refl = nu * ihx2 if (i == 0 or i == nx - 1) else 0.0
            rw = x[i - 1] if i > 0 else row
            re = x[i + 1] if i < nx - 1 else row
            cw = nu * ihx2 if i > 0 else 0.0
            ce = nu * ihx2 if i < nx - 1 else 0.0
            o = out[i]
            if ny == 1:
                o[0] = (d0 + refl) * row[0] - cw * rw[0] - ce * re[0]
                continue
            o[0] = (d0 + refl) * row[0] - cw * rw[0] - ce * re[0] - nu * ihy2 * row[1]
            for j in range(1, ny - 1):
                o[j] = (d0 + refl) * row[j] - cw * rw[j] - ce * re[j] \
                    - nu * ihy2 * (row[j - 1] + row[j + 1])
            o[ny - 1] = (d0 + refl) * row[ny - 1] - cw * rw[ny - 1] - ce * re[ny - 1] \
                - nu * ihy2 * row[ny - 2]


@njit(cache=True, fastmath={'reassoc', 'contract'})
def _dot(a, b):
    af = a.ravel()
    bf = b.ravel()
    n = af.size
    acc0 = 0.0
    acc1 = 0.0
    acc2 = 0.0
    acc3 = 0.0
    k = 0
    while k + 4 <= n:
        acc0 += af[k] * bf[k]
        acc1 += af[k + 1] * bf[k + 1]
        acc2 += af[k + 2] * bf[k + 2]
        acc3 += af[k + 3] * bf[k + 3]
        k += 4
    while k < n:
        acc0 += af[k] * bf[k]
        k += 1
    return (acc0 + acc1) + (acc2 + acc3)


@njit(cache=True, fastmath={'reassoc', 'contract'})
def _sum(a):
    af = a.ravel()
    n = af.size
    acc0 = 0.0
    acc1 = 0.0
    acc2 = 0.0
    acc3 = 0.0
    k = 0
    while k + 4 <= n:
        acc0 += af[k]
        acc1 += af[k + 1]
        acc2 += af[k + 2]
        acc3 += af[k + 3]
        k += 4
    while k < n:
        acc0 += af[k]
        k += 1
    return (acc0 + acc1) + (acc2 + acc3)


@njit(cache=True, fastmath={'reassoc', 'contract'})
def cg_smoothed(kind, b, x0, inv_diag, alpha, nu, ihx2, ihy2,
                rel_tol, abs_tol, max_iter, track_history):
    """Returns (y, iterations, final_residual, converged_flag, history, hist_len)."""
    n = b.size
    project = kind == 0
    bf = b.ravel()
    idf = inv_diag.ravel()

    target = rel_tol * np.sqrt(_dot(b, b))
    if target < abs_tol:
        target = abs_tol

    x = x0.copy()
    xf = x.ravel()
    if project:
        m = _sum(x) / n
        for k in range(n):
            xf[k] -= m
    ap = np.empty_like(b)
    apf = ap.ravel()
    _matvec(kind, x, ap, alpha, nu, ihx2, ihy2)
    r = np.empty_like(b)
    rf = r.ravel()
    for k in range(n):
        rf[k] = bf[k] - apf[k]
    if project:
        m = _sum(r) / n
        for k in range(n):
            rf[k] -= m

    y = x.copy()
    yf = y.ravel()
    s = r.copy()
    sf = s.ravel()
    s_norm = np.sqrt(_dot(s, s))

    hist_cap = max_iter + 2 if track_history else 1
    history = np.empty(hist_cap)
    hist_len = 0
    if track_history:
        history[hist_len] = s_norm
        hist_len += 1

    z = np.empty_like(b)
    zf = z.ravel()
    p = np.empty_like(b)
    pf = p.ravel()
    total_iters = 0

    for _sweep in range(2):
        if s_norm <= target:
            break
        rz = 0.0
        for k in range(n):
            zk = rf[k] * idf[k]
            zf[k] = zk
            pf[k] = zk
            rz += rf[k] * zk
        while total_iters < max_iter:
            _matvec(kind, p, ap, alpha, nu, ihx2, ihy2)
            pap = _dot(p, ap)
            if pap <= 0.0 or rz == 0.0:
                break
            a_step = rz / pap
            rsum = 0.0
            for k in range(n):
                xf[k] += a_step * pf[k]
                rk = rf[k] - a_step * apf[k]
                rf[k] = rk
                rsum += rk
            if project:
                m = rsum / n
                dd = 0.0
                sd = 0.0
                for k in range(n):
                    rk = rf[k] - m
                    rf[k] = rk
                    d = rk - sf[k]
                    dd += d * d
                    sd += sf[k] * d
            else:
                dd = 0.0
                sd = 0.0
                for k in range(n):
                    d = rf[k] - sf[k]
                    dd += d * d
                    sd += sf[k] * d
            total_iters += 1

            # minimal residual smoothing: ||s|| never increases
            if dd > 0.0:
                eta = -sd / dd
                if eta < 0.0:
                    eta = 0.0
                elif eta > 1.0:
                    eta = 1.0
                ss = 0.0
                for k in range(n):
                    yf[k] += eta * (xf[k] - yf[k])
                    sk = sf[k] + eta * (rf[k] - sf[k])
                    sf[k] = sk
                    ss += sk * sk
                s_norm = np.sqrt(ss)
            if track_history:
                history[hist_len] = s_norm
                hist_len += 1
            if s_norm <= target:
                break

            rz_new = 0.0
            for k in range(n):
                zk = rf[k] * idf[k]
                zf[k] = zk
                rz_new += rf[k] * zk
            beta = rz_new / rz
            for k in range(n):
                pf[k] = zf[k] + beta * pf[k]
            rz = rz_new

        # true residual of the smoothed iterate; restart once if it drifted
        _matvec(kind, y, ap, alpha, nu, ihx2, ihy2)
        for k in range(n):
            rf[k] = bf[k] - apf[k]
        if project:
            m = _sum(r) / n
            for k in range(n):
                rf[k] -= m
        s_norm = np.sqrt(_dot(r, r))
        if s_norm <= target or total_iters >= max_iter:
            break
        for k in range(n):
            xf[k] = yf[k]
            sf[k] = rf[k]

    converged = 1 if s_norm <= target else 0
    return y, total_iters, s_norm, converged, history, hist_len
