"""Compiled event loop for the subgame pour (mirrors ``subgame._reference_step``)."""

import numpy as np
from numba import njit

DONE, EXHAUSTED, NEEDS_BOUNDS, INCONSISTENT = 0, 1, 2, 3
EVENT_NAMES = ("terminate", "type-enters-tier", "quota-exhausted", "rent-hits-zero",
               "decreasing-effort-hits-zero")


@njit(cache=True)
def _chol_solve(M, b):
    """Solve M y = b for symmetric positive definite M in place (Cholesky, lower)."""
    n = M.shape[0]
    for j in range(n):
        d = M[j, j]
        for k in range(j):
            d -= M[j, k] * M[j, k]
        if d <= 0.0:
            d = 1e-300
        d = np.sqrt(d)
        M[j, j] = d
        for i in range(j + 1, n):
            acc = M[i, j]
            for k in range(j):
                acc -= M[i, k] * M[j, k]
            M[i, j] = acc / d
    for i in range(n):
        acc = b[i]
        for k in range(i):
            acc -= M[i, k] * b[k]
        b[i] = acc / M[i, i]
    for i in range(n - 1, -1, -1):
        acc = b[i]
        for k in range(i + 1, n):
            acc -= M[k, i] * b[k]
        b[i] = acc / M[i, i]
    return b


@njit(cache=True)
def _residual(A, x, b):
    worst = 0.0
    for r in range(A.shape[0]):
        acc = -b[r]
        for j in range(A.shape[1]):
            acc += A[r, j] * x[j]
        worst = max(worst, abs(acc))
    return worst


@njit(cache=True)
def _solve(R0_slope, slope, sat, ei, et, keep, n, W, is_active_fish):
    """Weighted min-norm rates for the kept edges. Returns (x over all n edges, residual)."""
    nF = slope.shape[0]
    cols = np.empty(n, np.int64)
    m = 0
    for k in range(n):
        if keep[k]:
            cols[m] = k
            m += 1
    max_rows = nF + 2 * m + 1
    A = np.zeros((max_rows, m))
    b = np.zeros(max_rows)
    row = 0
    for i in range(nF):
        if is_active_fish[i]:
            for j in range(m):
                if ei[cols[j]] == i:
                    A[row, j] = slope[i]
            b[row] = 1.0
            row += 1
    nT = sat.shape[0]
    for t in range(nT):
        if not sat[t]:
            continue
        first = -1
        any_edge = False
        for j in range(m):
            if et[cols[j]] == t:
                any_edge = True
                A[row, j] = 1.0
                if first < 0:
                    first = ei[cols[j]]
        if not any_edge:
            continue
        row += 1
        for j in range(m):
            k = cols[j]
            if et[k] == t and ei[k] != first:
                i = ei[k]
                for jj in range(m):
                    if ei[cols[jj]] == first:
                        A[row, jj] += slope[first]
                    if ei[cols[jj]] == i:
                        A[row, jj] -= slope[i]
                row += 1
    A = A[:row]
    b = b[:row]
    unit = 1.0 / R0_slope
    for r in range(row):
        mx = 0.0
        for j in range(m):
            A[r, j] *= unit
            if abs(A[r, j]) > mx:
                mx = abs(A[r, j])
        if mx > 0:
            for j in range(m):
                A[r, j] /= mx
            b[r] /= mx
    sw = np.empty(m)
    for j in range(m):
        sw[j] = np.sqrt(W[ei[cols[j]], et[cols[j]]])
    As = A * sw
    x_all = np.zeros(n)
    if row == 0 or m == 0:
        return x_all, 0.0
    # min-norm via regularized normal equations; SVD lstsq only if that is not tight
    M = np.empty((row, row))
    tr = 0.0
    for r1 in range(row):
        for r2 in range(r1 + 1):
            acc = 0.0
            for j in range(m):
                acc += As[r1, j] * As[r2, j]
            M[r1, r2] = acc
            M[r2, r1] = acc
        tr += M[r1, r1]
    ridge = 1e-13 * max(tr, 1.0)
    for r1 in range(row):
        M[r1, r1] += ridge
    lam = _chol_solve(M, b.copy())
    x = np.zeros(m)
    ok = True
    for j in range(m):
        acc = 0.0
        for r1 in range(row):
            acc += As[r1, j] * lam[r1]
        x[j] = acc * sw[j]
        if not np.isfinite(x[j]):
            ok = False
    resid = _residual(A, x, b) if ok else np.inf
    if resid > 1e-11:
        x = np.linalg.lstsq(As, b)[0] * sw
        resid = _residual(A, x, b)
    for j in range(m):
        x_all[cols[j]] = x[j] * unit
    return x_all, resid


@njit(cache=True)
def pour(R0, slope, cost, Q, W, F, tol_rent, tol_effort, max_events, trace, codes):
    nF, nT = cost.shape
    smax = slope.max()
    rents = np.empty((nF, nT))
    ei = np.empty(nF * nT, np.int64)
    et = np.empty(nF * nT, np.int64)
    lb = np.empty(nF * nT, np.bool_)
    act = np.empty(nF * nT, np.bool_)
    keep = np.empty(nF * nT, np.bool_)
    for ev in range(max_events):
        E = F.sum(axis=1)
        for i in range(nF):
            Ri = R0[i] - slope[i] * E[i]
            for t in range(nT):
                rents[i, t] = Ri - cost[i, t]
        used = F.sum(axis=0)
        live = Q > tol_effort
        open_ = live & (Q - used > tol_effort)
        sat = live & ~open_
        pi = 0.0
        for t in range(nT):
            if open_[t]:
                for i in range(nF):
                    if rents[i, t] > pi:
                        pi = rents[i, t]
        trace[ev] = pi
        if pi <= tol_rent:
            codes[ev] = 0
            return DONE, ev + 1
        n = 0
        is_active_fish = np.zeros(nF, np.bool_)
        for t in range(nT):
            if open_[t]:
                for i in range(nF):
                    if rents[i, t] >= pi - tol_rent:
                        ei[n] = i
                        et[n] = t
                        lb[n] = True
                        act[n] = True
                        is_active_fish[i] = True
                        n += 1
        for t in range(nT):
            if sat[t]:
                v = rents[:, t].max()
                for i in range(nF):
                    if F[i, t] > tol_effort or rents[i, t] >= v - tol_rent:
                        ei[n] = i
                        et[n] = t
                        lb[n] = F[i, t] <= tol_effort
                        act[n] = False
                        n += 1
        for k in range(n):
            keep[k] = True
        x = np.zeros(n)
        resid = 0.0
        for _ in range(n + 1):
            x, resid = _solve(smax, slope, sat, ei, et, keep, n, W, is_active_fish)
            if resid > 1e-9:
                return INCONSISTENT, ev
            scale = 0.0
            for k in range(n):
                if keep[k] and abs(x[k]) > scale:
                    scale = abs(x[k])
            dropped = False
            for k in range(n):
                if keep[k] and lb[k] and not act[k] and x[k] < -1e-9 * scale:
                    keep[k] = False
                    dropped = True
            if not dropped:
                break
        scale = 1.0
        for k in range(n):
            if keep[k] and abs(x[k]) > scale:
                scale = abs(x[k])
        for k in range(n):
            if keep[k] and lb[k] and x[k] < -1e-9 * scale:
                return NEEDS_BOUNDS, ev
            if keep[k] and lb[k] and x[k] < 0:
                x[k] = 0.0

        # event search
        flow = np.zeros((nF, nT))
        is_edge = np.zeros((nF, nT), np.bool_)
        for k in range(n):
            if keep[k]:
                flow[ei[k], et[k]] += x[k]
                is_edge[ei[k], et[k]] = True
        rho = np.empty(nF)
        for i in range(nF):
            rho[i] = -slope[i] * flow[i].sum()
        # a dropped idle member whose rent would overtake needs the full search
        for k in range(n):
            if keep[k] or act[k]:
                continue
            for kk in range(n):
                if keep[kk] and et[kk] == et[k]:
                    if rho[ei[k]] - rho[ei[kk]] > 1e-9:
                        return NEEDS_BOUNDS, ev
                    break
        best = pi
        kind = 3
        hit_i = -1
        hit_t = -1
        for t in range(nT):
            if not open_[t]:
                continue
            w = flow[:, t].sum()
            if w > 1e-12:
                tau = (Q[t] - used[t]) / w
                if tau < best:
                    best = max(tau, 0.0)
                    kind = 2
                    hit_t = t
            for i in range(nF):
                if not is_edge[i, t] and 1.0 + rho[i] > 1e-9:
                    tau = (pi - rents[i, t]) / (1.0 + rho[i])
                    if tau < best:
                        best = max(tau, 0.0)
                        kind = 1
        for t in range(nT):
            if not sat[t]:
                continue
            first = -1
            for k in range(n):
                if keep[k] and et[k] == t:
                    first = ei[k]
                    break
            if first < 0:
                continue
            mu = rho[first]
            v = rents[first, t]
            for i in range(nF):
                if not is_edge[i, t] and rho[i] - mu > 1e-9:
                    tau = (v - rents[i, t]) / (rho[i] - mu)
                    if tau < best:
                        best = max(tau, 0.0)
                        kind = 1
        for k in range(n):
            if keep[k] and x[k] < 0 and F[ei[k], et[k]] > 0:
                tau = F[ei[k], et[k]] / -x[k]
                if tau < best:
                    best = max(tau, 0.0)
                    kind = 4
                    hit_i = ei[k]
                    hit_t = et[k]
        for k in range(n):
            if keep[k]:
                F[ei[k], et[k]] += best * x[k]
        if kind == 4:
            F[hit_i, hit_t] = 0.0
        elif kind == 2:
            col_max = 0
            s = 0.0
            for i in range(nF):
                s += F[i, hit_t]
                if F[i, hit_t] > F[col_max, hit_t]:
                    col_max = i
            F[col_max, hit_t] += Q[hit_t] - s
        for i in range(nF):
            for t in range(nT):
                if F[i, t] < 0.0:
                    F[i, t] = 0.0
        codes[ev] = kind
    return EXHAUSTED, max_events
