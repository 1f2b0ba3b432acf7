"""Compiled inner loops for the field recursion and stratum margins.

These mirror the numpy reference in ``field._Eval`` line for line; the test
suite checks the two against each other.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .configuration import EPS_GEOM


@njit(cache=True)
def _centroids(x, left, right, size, leaf_label):
    k = left.shape[0]
    d = x.shape[1]
    C = np.empty((k, d))
    for i in range(k):
        if left[i] < 0:
            C[i] = x[leaf_label[i]]
        else:
            a, b = left[i], right[i]
            C[i] = (size[a] * C[a] + size[b] * C[b]) / size[i]
    return C


@njit(cache=True)
def _hyperplanes(C, sibling):
    k, d = C.shape
    e = np.zeros((k, d))
    m = np.zeros((k, d))
    en = np.zeros(k)
    for i in range(k - 1):
        j = sibling[i]
        nrm = 0.0
        for t in range(d):
            e[i, t] = C[i, t] - C[j, t]
            m[i, t] = 0.5 * (C[i, t] + C[j, t])
            nrm += e[i, t] * e[i, t]
        en[i] = np.sqrt(nrm)
    return e, m, en


@njit(cache=True)
def min_separation(x, left, right, size, leaf_label, sibling, pair_node, pair_label):
    """Smallest s over all (label, cluster) pairs; -inf when a hyperplane is degenerate."""
    C = _centroids(x, left, right, size, leaf_label)
    e, m, en = _hyperplanes(C, sibling)
    d = x.shape[1]
    best = np.inf
    for p in range(pair_node.shape[0]):
        K = pair_node[p]
        if en[K] == 0.0:
            return -np.inf
        v = 0.0
        for t in range(d):
            v += (x[pair_label[p], t] - m[K, t]) * e[K, t]
        v /= en[K]
        if v < best:
            best = v
    return best


@njit(cache=True)
def hier_field_kernel(x, y, radii, Cy, ey, my,
                      left, right, parent, sibling, size, leaf_label,
                      mem_ptr, mem_idx, pair_node, pair_label, cs_start, cs_end,
                      iu, ju, pair_lca, sub_start, alpha, beta):
    """Returns (f, min separation). Degenerate hyperplanes give min separation -inf."""
    n, d = x.shape
    k = left.shape[0]
    root = k - 1
    eps = EPS_GEOM
    C = _centroids(x, left, right, size, leaf_label)
    e, m, en = _hyperplanes(C, sibling)
    u = np.zeros((n, d))
    for i in range(k - 1):
        if en[i] == 0.0:
            return u, -np.inf

    npairs = pair_node.shape[0]
    s = np.empty(npairs)
    smin = np.inf
    bad = np.zeros(k, dtype=np.bool_)
    hmin = np.full(k, np.inf)
    for p in range(npairs):
        K = pair_node[p]
        j = pair_label[p]
        v = 0.0
        al = 0.0
        for t in range(d):
            v += (x[j, t] - m[K, t]) * e[K, t]
            al += (y[j, t] - my[K, t]) * e[K, t] + (x[j, t] - m[K, t]) * ey[K, t]
        v /= en[K]
        s[p] = v
        if v < smin:
            smin = v
        if al < eps:
            bad[parent[K]] = True
        if v - radii[j] < hmin[K]:
            hmin[K] = v - radii[j]
    for q in range(iu.shape[0]):
        i, j = iu[q], ju[q]
        v = 0.0
        for t in range(d):
            v += (x[i, t] - x[j, t]) * (y[i, t] - y[j, t])
        rr = radii[i] + radii[j]
        if v - rr * rr < eps:
            bad[pair_lca[q]] = True

    # Subtrees are contiguous in post-order.
    cum = np.zeros(k + 1, dtype=np.int64)
    for i in range(k):
        cum[i + 1] = cum[i] + (1 if bad[i] else 0)
    A_ok = np.empty(k, dtype=np.bool_)
    H_ok = np.ones(k, dtype=np.bool_)
    for i in range(k):
        A_ok[i] = cum[i + 1] - cum[sub_start[i]] == 0
        if left[i] >= 0:
            H_ok[i] = min(hmin[left[i]], hmin[right[i]]) >= alpha + eps

    recursing = np.zeros(k, dtype=np.bool_)
    stack = np.empty(k, dtype=np.int64)
    top = 0
    stack[0] = root
    top = 1
    while top > 0:
        top -= 1
        i = stack[top]
        if A_ok[i]:
            for q in range(mem_ptr[i], mem_ptr[i + 1]):
                j = mem_idx[q]
                for t in range(d):
                    u[j, t] = y[j, t] - x[j, t]
        elif not H_ok[i]:
            L, R = left[i], right[i]
            gain = 0.0
            for p in range(cs_start[i], cs_end[i]):
                g = -(s[p] - radii[pair_label[p]] - beta)
                if g > gain:
                    gain = g
            for t in range(d):
                base = -(C[i, t] - Cy[i, t])
                cl = 2.0 * gain * size[R] / size[i] * e[L, t] / en[L]
                cr = 2.0 * gain * size[L] / size[i] * e[R, t] / en[R]
                for q in range(mem_ptr[L], mem_ptr[L + 1]):
                    u[mem_idx[q], t] = base + cl
                for q in range(mem_ptr[R], mem_ptr[R + 1]):
                    u[mem_idx[q], t] = base + cr
        else:
            recursing[i] = True
            stack[top] = right[i]
            stack[top + 1] = left[i]
            top += 2

    floor = np.exp(-(beta - alpha))
    uL = np.empty(d)
    uR = np.empty(d)
    for i in range(k):
        if not recursing[i]:
            continue
        L, R = left[i], right[i]
        for t in range(d):
            uL[t] = 0.0
            uR[t] = 0.0
        for q in range(mem_ptr[L], mem_ptr[L + 1]):
            for t in range(d):
                uL[t] += u[mem_idx[q], t]
        for q in range(mem_ptr[R], mem_ptr[R + 1]):
            for t in range(d):
                uR[t] += u[mem_idx[q], t]
        for t in range(d):
            uL[t] /= size[L]
            uR[t] /= size[R]
        gain = 0.0
        for p in range(cs_start[i], cs_end[i]):
            K = pair_node[p]
            j = pair_label[p]
            sign = 1.0 if K == L else -1.0
            num = 0.0
            exu = 0.0
            for t in range(d):
                eu = sign * (uL[t] - uR[t])
                mu = 0.5 * (uL[t] + uR[t])
                num += (u[j, t] - mu) * e[K, t] + (x[j, t] - m[K, t]) * eu
                exu += e[K, t] * eu
            lie = num / en[K] - s[p] * exu / (en[K] * en[K])
            slack = s[p] - radii[j] - alpha
            phi = (np.exp(-slack) - floor) / (1.0 - floor)
            if phi < 0.0:
                phi = 0.0
            psi = -slack - lie
            if psi < 0.0:
                psi = 0.0
            if phi * psi > gain:
                gain = phi * psi
        if gain == 0.0:
            continue
        for t in range(d):
            cl = 2.0 * gain * size[R] / size[i] * e[L, t] / en[L]
            cr = 2.0 * gain * size[L] / size[i] * e[R, t] / en[R]
            for q in range(mem_ptr[L], mem_ptr[L + 1]):
                u[mem_idx[q], t] += cl
            for q in range(mem_ptr[R], mem_ptr[R + 1]):
                u[mem_idx[q], t] += cr
    return u, smin


@njit(cache=True)
def min_clearance(x, radii):
    """Smallest ||x_i - x_j|| - r_i - r_j over i < j (inf for fewer than two disks)."""
    n, d = x.shape
    best = np.inf
    for i in range(n):
        for j in range(i + 1, n):
            v = 0.0
            for t in range(d):
                w = x[i, t] - x[j, t]
                v += w * w
            g = np.sqrt(v) - radii[i] - radii[j]
            if g < best:
                best = g
    return best
