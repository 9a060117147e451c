"""Pure-numpy twins of the compiled kernels, vectorized over colors.

Same signatures, same draws, same floating-point operations in the same
order, so ``p``, the flags and ``sel`` come out bit-identical to the numba
path. Trace sums may differ in the last ulp (numpy sums pairwise).
"""
from __future__ import annotations

import numpy as np

from . import rules
from ._kernels_numba import (
    G_ACTIVATIONS, G_CASE_B, G_CASE_C, G_CLASS_VIOL, G_COINS, G_PIN_VIOL, G_PINS,
    G_RANGE_VIOL, G_PROB_VIOL, G_SELECTIONS, G_SKIP_PINNED, H_ACTIVATIONS, H_COINS, H_LOWER, H_MAIN,
    H_PAIR_VIOL, H_PIN_VIOL, H_PROB_VIOL, H_PINS_HI, H_PINS_LO, H_RANGE_VIOL, H_SKIP, H_UPPER, H_X_VIOL,
    REL_TOL, STATUS_OK, STATUS_REGIME,
)
from .rng import ACT, CLS, ELL, MU, SEL, absorb_vec, mix64_vec, uniform_vec


def graph_rule_vec(pk, s, in_j, coin, r, mut):
    """Vector form of ``rules.graph_rule``."""
    new = np.zeros_like(pk)
    pin = np.zeros(pk.shape, dtype=bool)
    case_b = 2 * r * pk <= 1
    grown = 2 * r * pk
    if mut & rules.MUT_NO_KILL:
        keep = case_b & s
        new[keep] = pk[keep]
    g = case_b & ~s & in_j
    cap = g & (grown >= 1)
    new[g] = grown[g]
    new[cap] = 1.0
    pin |= cap
    c_pin = ~case_b & ~s & in_j
    if not mut & rules.MUT_NO_MU:
        c_pin |= ~case_b & coin
    new[c_pin] = 1.0
    pin |= c_pin
    return new, pin


def hyper_case_vec(pk, x, xp, thr):
    upper = 2 * pk > 1 - x
    lower = (0 < pk * (1 - xp)) & (pk * (1 - xp) < (1 - x) * thr)
    case = np.full(pk.shape, rules.CASE_MAIN, dtype=np.int64)
    case[upper] = rules.CASE_UPPER
    case[lower] = rules.CASE_LOWER
    case[upper & lower] = rules.CASE_REGIME
    return case


def hyper_rule_vec(case, pk, x, xp, a, coin, thr, mut):
    """Vector form of ``rules.hyper_rule``."""
    new = np.zeros_like(pk)
    flag = np.zeros(pk.shape, dtype=np.int64)
    main = case == rules.CASE_MAIN
    up = case == rules.CASE_UPPER
    low = case == rules.CASE_LOWER
    hi_pin = up & ~a
    if not mut & rules.MUT_NO_MU:
        hi_pin |= up & a & coin
    lo_pin = low & a
    shrink = (main & a) | (up & ~hi_pin)
    grow = (main & ~a) | (low & ~a & (coin | bool(mut & rules.MUT_NO_ELL)))
    # shrink branch
    with np.errstate(divide="ignore", invalid="ignore"):
        sval = pk * (1 - xp) / (1 - x)
        gval = pk / (1 - x)
    s_edge = shrink & (xp != 1) & (pk * (1 - xp) == (1 - x) * thr)
    g_edge = grow & (2 * pk == 1 - x)
    new[shrink] = sval[shrink]
    new[grow] = gval[grow]
    new[s_edge | lo_pin] = thr
    flag[s_edge | lo_pin] = rules.FLAG_LO
    new[g_edge | hi_pin] = 0.5
    flag[g_edge | hi_pin] = rules.FLAG_HI
    return new, flag


def _draws(hic, i, cidx, kind, slot, flip, flip_u):
    u = uniform_vec(hic, kind, slot)
    if flip[0] == i and flip[2] == kind and flip[3] == slot:
        u[cidx == flip[1]] = flip_u
    return u


def _trace_row(p, bad_a, bad_b, watch, out):
    rows = p[watch]
    out[:, 0] = rows.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[:, 1] = -np.where(rows > 0, rows * np.log(np.where(rows > 0, rows, 1.0)), 0.0).sum(axis=1)
    out[:, 2] = bad_a[watch].sum(axis=1)
    out[:, 3] = bad_b[watch].sum(axis=1)


def _audit_row(p, bad_a, bad_b, val_a, val_b, k, nbad, two):
    ra = bad_a[k]
    viol = int(np.count_nonzero(ra & (p[k] != val_a)))
    cnt = int(ra.sum())
    if two:
        rb = bad_b[k]
        viol += int(np.count_nonzero(rb & ((p[k] != val_b) | ra)))
        cnt += int(rb.sum())
    if cnt < nbad[k]:
        viol += 1
    nbad[k] = cnt
    return viol


def graph_kernel(p, bad, sel, rn_ptr, rn_k, rn_cls, r, seed, mut, check, alpha,
                 n_iter, flip, flip_u, watch, trace, counters):
    n, q = p.shape
    hseed = mix64_vec(seed)
    nbad = np.zeros(n, dtype=np.int64)
    colors = np.arange(q, dtype=np.int64)
    if watch.shape[0] > 0:
        _trace_row(p, bad, bad, watch, trace[0])
        trace[0, :, 3] = 0.0
    for i in range(n_iter):
        h_i = absorb_vec(hseed, i)
        t0, t1 = rn_ptr[i], rn_ptr[i + 1]
        cidx = colors[~bad[i] & (p[i] > 0.0)]
        hic = absorb_vec(h_i, cidx)
        act = _draws(hic, i, cidx, ACT, 0, flip, flip_u) < p[i, cidx]
        cidx, hic = cidx[act], hic[act]
        counters[G_ACTIVATIONS] += cidx.size
        s = _draws(hic, i, cidx, SEL, 0, flip, flip_u) < 0.5
        j = (_draws(hic, i, cidx, CLS, 0, flip, flip_u) * r).astype(np.int64)
        sel[i, cidx[s]] = True
        counters[G_SELECTIONS] += int(s.sum())
        grown_cls = np.full(cidx.size, -1, dtype=np.int64)
        for t in range(t0, t1):
            k = rn_k[t]
            live = ~bad[k, cidx]
            counters[G_SKIP_PINNED] += cidx.size - int(live.sum())
            cc = cidx[live]
            pk = p[k, cc]
            ss = s[live]
            in_j = j[live] == rn_cls[t]
            case_c = 2 * r * pk > 1
            counters[G_CASE_C] += int(case_c.sum())
            counters[G_CASE_B] += cc.size - int(case_c.sum())
            need = case_c & (ss | ~in_j)
            counters[G_COINS] += int(need.sum())
            mu = (2 * r * pk - 1) / (2 * r - 1)
            coin = need & (_draws(hic[live], i, cc, MU, k + 1, flip, flip_u) < mu)
            if check:
                counters[G_PROB_VIOL] += int(np.count_nonzero(need & ~((mu >= 0.0) & (mu <= 1.0))))
            new, pin = graph_rule_vec(pk, ss, in_j, coin, r, mut)
            p[k, cc] = new
            bad[k, cc[pin]] = True
            counters[G_PINS] += int(pin.sum())
            if check:
                counters[G_RANGE_VIOL] += int(np.count_nonzero(
                    (new != 0.0) & ((new < alpha * (1 - REL_TOL)) | (new > 1.0))))
                g = np.zeros(cidx.size, dtype=bool)
                g[live] = (new > pk) & ~coin
                first = g & (grown_cls == -1)
                counters[G_CLASS_VIOL] += int(np.count_nonzero(g & ~first & (grown_cls != rn_cls[t])))
                grown_cls[first] = rn_cls[t]
        if check:
            for t in range(t0, t1):
                counters[G_PIN_VIOL] += _audit_row(p, bad, bad, 1.0, 1.0, rn_k[t], nbad, False)
        if watch.shape[0] > 0:
            _trace_row(p, bad, bad, watch, trace[i + 1])
            trace[i + 1, :, 3] = 0.0
    return STATUS_OK


def hyper_kernel(p, hi, lo, sel, slot_ptr, slot_edge, slot_idx, epos, thr, seed, mut,
                 check, n_iter, flip, flip_u, watch, trace, counters, reverse, err):
    n, q = p.shape
    r = epos.shape[1]
    hseed = mix64_vec(seed)
    nbad = np.zeros(n, dtype=np.int64)
    colors = np.arange(q, dtype=np.int64)
    if watch.shape[0] > 0:
        _trace_row(p, hi, lo, watch, trace[0])
    for i in range(n_iter):
        h_i = absorb_vec(hseed, i)
        s0, s1 = slot_ptr[i], slot_ptr[i + 1]
        cidx = colors[~(hi[i] | lo[i]) & (p[i] > 0.0)]
        hic = absorb_vec(h_i, cidx)
        act = _draws(hic, i, cidx, ACT, 0, flip, flip_u) < p[i, cidx]
        sel[i, cidx[act]] = True
        counters[H_ACTIVATIONS] += int(act.sum())
        if check:
            ks = epos[slot_edge[s0:s1], r - 1]
            counters[H_PAIR_VIOL] += ks.size - np.unique(ks).size
        order = range(s1 - 1, s0 - 1, -1) if reverse else range(s0, s1)
        for t in order:
            e = slot_edge[t]
            idx = slot_idx[t]
            k = epos[e, r - 1]
            ok = ~(hi[k, cidx] | lo[k, cidx])
            for m in range(idx):
                ok &= sel[epos[e, m], cidx]
            ok &= p[k, cidx] > 0.0
            counters[H_SKIP] += cidx.size - int(ok.sum())
            cc = cidx[ok]
            pk = p[k, cc]
            pi = p[i, cc]
            a = act[ok]
            h = hic[ok]
            xp = np.ones(cc.size)
            for m in range(idx + 1, r - 1):
                xp *= p[epos[e, m], cc]
            x = pi * xp
            if check:
                counters[H_X_VIOL] += int(np.count_nonzero(x > xp))
            case = hyper_case_vec(pk, x, xp, thr)
            reg = np.flatnonzero(case == rules.CASE_REGIME)
            if reg.size:
                err[0], err[1], err[2] = i, cc[reg[0]], k
                return STATUS_REGIME
            up = case == rules.CASE_UPPER
            low = case == rules.CASE_LOWER
            counters[H_UPPER] += int(up.sum())
            counters[H_LOWER] += int(low.sum())
            counters[H_MAIN] += cc.size - int(up.sum()) - int(low.sum())
            coin = np.zeros(cc.size, dtype=bool)
            nm = up & a
            if nm.any():
                mu = rules.equalizer_mu_hyper(x[nm], xp[nm], pi[nm], pk[nm])
                coin[nm] = _draws(h[nm], i, cc[nm], MU, k + 1, flip, flip_u) < mu
                if check:
                    counters[H_PROB_VIOL] += int(np.count_nonzero(~((mu >= 0.0) & (mu <= 1.0))))
            nl = low & ~a
            if nl.any():
                ell = rules.equalizer_ell_hyper(x[nl], pi[nl], pk[nl], thr)
                coin[nl] = _draws(h[nl], i, cc[nl], ELL, k + 1, flip, flip_u) < ell
                if check:
                    counters[H_PROB_VIOL] += int(np.count_nonzero(~((ell >= 0.0) & (ell <= 1.0))))
            counters[H_COINS] += int(nm.sum()) + int(nl.sum())
            new, flag = hyper_rule_vec(case, pk, x, xp, a, coin, thr, mut)
            p[k, cc] = new
            hi[k, cc[flag == rules.FLAG_HI]] = True
            lo[k, cc[flag == rules.FLAG_LO]] = True
            counters[H_PINS_HI] += int(np.count_nonzero(flag == rules.FLAG_HI))
            counters[H_PINS_LO] += int(np.count_nonzero(flag == rules.FLAG_LO))
            if check:
                counters[H_RANGE_VIOL] += int(np.count_nonzero(
                    (new != 0.0) & ((new < thr * (1 - REL_TOL)) | (new > 0.5))))
        if check:
            for t in range(s0, s1):
                counters[H_PIN_VIOL] += _audit_row(p, hi, lo, 0.5, thr, epos[slot_edge[t], r - 1], nbad, True)
        if watch.shape[0] > 0:
            _trace_row(p, hi, lo, watch, trace[i + 1])
    return STATUS_OK
