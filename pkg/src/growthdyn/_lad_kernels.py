"""Compiled inner loops for the weighted two-regressor L1 problem.

The problem is ``min_{alpha, phi} sum_k w_k |r_k - alpha*s_k - phi*g_k|``.
A short smoothed-IRLS phase finds a neighbourhood of the optimum; the exact
optimum is then reached by pivoting between vertices (fits through two rows),
each pivot being a weighted-median line search along an edge.
"""

import numpy as np
from numba import njit

CERT_SLACK = 1e-10


@njit(cache=True)
def weighted_abs_sum(r, s, g, w, alpha, phi):
    total = 0.0
    for i in range(r.size):
        total += w[i] * abs(r[i] - alpha * s[i] - phi * g[i])
    return total


@njit(cache=True)
def irls_l1(r, s, g, w, alpha0, phi0, delta, tol, max_iter):
    """Minimise sum w * sqrt(u**2 + delta**2), u = r - alpha*s - phi*g, by IRLS.

    Returns (alpha, phi, iterations, converged).
    """
    alpha = alpha0
    phi = phi0
    d2 = delta * delta
    for it in range(1, max_iter + 1):
        sss = 0.0
        ssg = 0.0
        sgg = 0.0
        ssr = 0.0
        sgr = 0.0
        for i in range(r.size):
            u = r[i] - alpha * s[i] - phi * g[i]
            v = w[i] / np.sqrt(u * u + d2)
            sss += v * s[i] * s[i]
            ssg += v * s[i] * g[i]
            sgg += v * g[i] * g[i]
            ssr += v * s[i] * r[i]
            sgr += v * g[i] * r[i]
        ridge = 1e-13 * (sss + sgg)
        a11 = sss + ridge
        a22 = sgg + ridge
        det = a11 * a22 - ssg * ssg
        if det <= 0.0:
            return alpha, phi, it, False
        new_alpha = (a22 * ssr - ssg * sgr) / det
        new_phi = (a11 * sgr - ssg * ssr) / det
        step = max(abs(new_alpha - alpha), abs(new_phi - phi))
        alpha = new_alpha
        phi = new_phi
        if step < tol:
            return alpha, phi, it, True
    return alpha, phi, max_iter, False


@njit(cache=True)
def two_smallest(r, s, g, alpha, phi):
    i0 = -1
    i1 = -1
    u0 = np.inf
    u1 = np.inf
    for k in range(r.size):
        u = abs(r[k] - alpha * s[k] - phi * g[k])
        if u < u0:
            i1, u1 = i0, u0
            i0, u0 = k, u
        elif u < u1:
            i1, u1 = k, u
    return i0, i1


@njit(cache=True)
def _vertex(r, s, g, i, j):
    det = s[i] * g[j] - s[j] * g[i]
    scale = (abs(s[i]) + abs(g[i])) * (abs(s[j]) + abs(g[j]))
    if scale == 0.0 or abs(det) <= 1e-12 * scale:
        return 0.0, 0.0, False
    alpha = (r[i] * g[j] - r[j] * g[i]) / det
    phi = (s[i] * r[j] - s[j] * r[i]) / det
    return alpha, phi, True


@njit(cache=True)
def _weighted_median(z, m, idx, total):
    """Index (into z) of the lower weighted median of z[idx] with weights m[idx].

    ``idx`` is permuted in place; expected linear time.
    """
    lo = 0
    hi = idx.size
    target = 0.5 * total
    acc = 0.0
    while True:
        a = z[idx[lo]]
        b = z[idx[(lo + hi - 1) // 2]]
        c = z[idx[hi - 1]]
        if a > b:
            a, b = b, a
        if b > c:
            b = c
        if a > b:
            b = a
        pivot = b
        # three-way partition of idx[lo:hi]
        lt = lo
        gt = hi
        k = lo
        while k < gt:
            v = z[idx[k]]
            if v < pivot:
                t = idx[lt]
                idx[lt] = idx[k]
                idx[k] = t
                lt += 1
                k += 1
            elif v > pivot:
                gt -= 1
                t = idx[gt]
                idx[gt] = idx[k]
                idx[k] = t
            else:
                k += 1
        wl = 0.0
        for q in range(lo, lt):
            wl += m[idx[q]]
        we = 0.0
        for q in range(lt, gt):
            we += m[idx[q]]
        if acc + wl >= target and lt > lo:
            hi = lt
        elif acc + wl + we >= target or gt >= hi:
            return lt, gt
        else:
            acc += wl + we
            lo = gt


@njit(cache=True)
def pivot_l1(r, s, g, w, i, j, max_pivots):
    """Exact weighted L1 fit by vertex pivoting from the basis rows (i, j).

    Returns (alpha, phi, i, j, pivots, certified). ``certified`` means the
    subgradient optimality condition holds at the returned vertex.
    """
    n = r.size
    z = np.empty(n)
    m = np.empty(n)
    idx = np.empty(n, dtype=np.int64)
    for it in range(max_pivots + 1):
        alpha, phi, ok = _vertex(r, s, g, i, j)
        if not ok:
            return alpha, phi, i, j, it, False
        vs = 0.0
        vg = 0.0
        for k in range(n):
            if k == i or k == j:
                continue
            u = r[k] - alpha * s[k] - phi * g[k]
            if u > 0:
                vs += w[k] * s[k]
                vg += w[k] * g[k]
            elif u < 0:
                vs -= w[k] * s[k]
                vg -= w[k] * g[k]
        # solve [w_i x_i, w_j x_j] lam = v
        a11 = w[i] * s[i]
        a12 = w[j] * s[j]
        a21 = w[i] * g[i]
        a22 = w[j] * g[j]
        d = a11 * a22 - a12 * a21
        if d == 0.0:
            return alpha, phi, i, j, it, False
        lam_i = (vs * a22 - a12 * vg) / d
        lam_j = (a11 * vg - a21 * vs) / d
        if abs(lam_i) <= 1.0 + CERT_SLACK and abs(lam_j) <= 1.0 + CERT_SLACK:
            return alpha, phi, i, j, it, True
        if it == max_pivots:
            break
        # drop the row with the larger multiplier, slide along the edge that
        # keeps the other basis row exactly fitted
        if abs(lam_i) >= abs(lam_j):
            leave, keep = i, j
        else:
            leave, keep = j, i
        d0 = -g[keep]
        d1 = s[keep]
        cnt = 0
        total = 0.0
        for k in range(n):
            a = s[k] * d0 + g[k] * d1
            if k == keep or a == 0.0:
                continue
            u = r[k] - alpha * s[k] - phi * g[k]
            if k == leave:
                u = 0.0
            z[k] = u / a
            m[k] = w[k] * abs(a)
            total += m[k]
            idx[cnt] = k
            cnt += 1
        if cnt == 0:
            return alpha, phi, i, j, it, False
        lt, gt = _weighted_median(z, m, idx[:cnt], total)
        enter = -1
        for q in range(lt, gt):
            if idx[q] != leave:
                enter = idx[q]
                break
        if enter < 0:
            return alpha, phi, i, j, it, False
        i, j = keep, enter
    alpha, phi, ok = _vertex(r, s, g, i, j)
    return alpha, phi, i, j, max_pivots, False


@njit(cache=True)
def solve_l1(r, s, g, w, alpha0, phi0, i0, j0, delta, tol, warm_iter, max_iter, max_pivots):
    """Weighted L1 fit: pivot from a warm basis, else IRLS then pivot, else full IRLS.

    Returns (alpha, phi, i, j, iterations, converged, exact).
    """
    n = r.size
    its = 0
    if i0 >= 0 and j0 >= 0 and i0 != j0:
        a, p, i, j, piv, ok = pivot_l1(r, s, g, w, i0, j0, max_pivots)
        its += piv
        if ok:
            return a, p, i, j, its, True, True
    a, p, it, ok_irls = irls_l1(r, s, g, w, alpha0, phi0, delta, tol, warm_iter)
    its += it
    if n >= 3:
        i, j = two_smallest(r, s, g, a, p)
        va, vp, vi, vj, piv, ok = pivot_l1(r, s, g, w, i, j, max_pivots)
        its += piv
        if ok:
            return va, vp, vi, vj, its, True, True
    if not ok_irls:
        a, p, it, ok_irls = irls_l1(r, s, g, w, a, p, delta, tol, max_iter)
        its += it
    return a, p, -1, -1, its, ok_irls, False
