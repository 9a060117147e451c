"""Compiled inner loops. Rows of every matrix are indexed by ordering position.

Both kernels mutate ``p``, the bad flags and ``sel`` in place and return a
status code. Update rules are the shared ones from ``rules``; only the loop
structure and the random draws live here.
"""
from __future__ import annotations

import math

import numpy as np

from . import rules
from ._accel import njit
from .rng import ACT, CLS, ELL, MU, SEL, absorb, seed_state, uniform

# graph counter slots
G_SKIP_PINNED = 0
G_CASE_B = 1
G_CASE_C = 2
G_COINS = 3
G_PINS = 4
G_RANGE_VIOL = 5
G_CLASS_VIOL = 6
G_PIN_VIOL = 7
G_ACTIVATIONS = 8
G_SELECTIONS = 9
G_PROB_VIOL = 10
G_NCOUNT = 11

# hypergraph counter slots
H_SKIP = 0
H_MAIN = 1
H_UPPER = 2
H_LOWER = 3
H_COINS = 4
H_PINS_HI = 5
H_PINS_LO = 6
H_RANGE_VIOL = 7
H_X_VIOL = 8
H_PIN_VIOL = 9
H_PAIR_VIOL = 10
H_ACTIVATIONS = 11
H_PROB_VIOL = 12
H_NCOUNT = 13

STATUS_OK = 0
STATUS_REGIME = 1

REL_TOL = 1e-9

_graph_rule = njit(inline="always")(rules.graph_rule)
_equalizer_prob_graph = njit(inline="always")(rules.equalizer_prob_graph)
_hyper_case = njit(inline="always")(rules.hyper_case)
_hyper_rule = njit(inline="always")(rules.hyper_rule)
_mu_hyper = njit(inline="always")(rules.equalizer_mu_hyper)
_ell_hyper = njit(inline="always")(rules.equalizer_ell_hyper)


@njit(inline="always")
def _draw(hic, i, c, kind, slot, flip, flip_u):
    if flip[0] == i and flip[1] == c and flip[2] == kind and flip[3] == slot:
        return flip_u
    return uniform(hic, kind, slot)


@njit(cache=True)
def _trace_row(p, bad_a, bad_b, watch, out):
    q = p.shape[1]
    for w in range(watch.shape[0]):
        row = watch[w]
        tot = 0.0
        ent = 0.0
        nb_a = 0
        nb_b = 0
        for c in range(q):
            x = p[row, c]
            tot += x
            if x > 0.0:
                ent -= x * math.log(x)
            if bad_a[row, c]:
                nb_a += 1
            if bad_b[row, c]:
                nb_b += 1
        out[w, 0] = tot
        out[w, 1] = ent
        out[w, 2] = nb_a
        out[w, 3] = nb_b


@njit(cache=True)
def _audit_row(p, bad_a, bad_b, val_a, val_b, k, nbad, two):
    """Pinned cells still hold their pin value; flags never cleared; flags disjoint."""
    viol = 0
    cnt = 0
    for c in range(p.shape[1]):
        if bad_a[k, c]:
            cnt += 1
            if p[k, c] != val_a:
                viol += 1
        if two and bad_b[k, c]:
            cnt += 1
            if p[k, c] != val_b or bad_a[k, c]:
                viol += 1
    if cnt < nbad[k]:
        viol += 1
    nbad[k] = cnt
    return viol


@njit(cache=True, nogil=True)
def graph_kernel(p, bad, sel, rn_ptr, rn_k, rn_cls, r, seed, mut, check, alpha,
                 n_iter, flip, flip_u, watch, trace, counters):
    n, q = p.shape
    hseed = seed_state(seed)
    nbad = np.zeros(n, dtype=np.int64)
    if watch.shape[0] > 0:
        _trace_row(p, bad, bad, watch, trace[0])
        trace[0, :, 3] = 0.0
    for i in range(n_iter):
        h_i = absorb(hseed, i)
        t0 = rn_ptr[i]
        t1 = rn_ptr[i + 1]
        for c in range(q):
            if bad[i, c]:
                continue
            pi = p[i, c]
            if pi <= 0.0:
                continue
            hic = absorb(h_i, c)
            if not _draw(hic, i, c, ACT, 0, flip, flip_u) < pi:
                continue
            counters[G_ACTIVATIONS] += 1
            s = _draw(hic, i, c, SEL, 0, flip, flip_u) < 0.5
            j = int(_draw(hic, i, c, CLS, 0, flip, flip_u) * r)
            if s:
                sel[i, c] = True
                counters[G_SELECTIONS] += 1
            grown_cls = -1
            for t in range(t0, t1):
                k = rn_k[t]
                if bad[k, c]:
                    counters[G_SKIP_PINNED] += 1
                    continue
                pk = p[k, c]
                in_j = rn_cls[t] == j
                coin = False
                if 2 * r * pk > 1:
                    counters[G_CASE_C] += 1
                    if s or not in_j:
                        mu = _equalizer_prob_graph(pk, r)
                        coin = _draw(hic, i, c, MU, k + 1, flip, flip_u) < mu
                        counters[G_COINS] += 1
                        if check and not 0.0 <= mu <= 1.0:
                            counters[G_PROB_VIOL] += 1
                else:
                    counters[G_CASE_B] += 1
                new, pin = _graph_rule(pk, s, in_j, coin, r, mut)
                p[k, c] = new
                if pin:
                    bad[k, c] = True
                    counters[G_PINS] += 1
                if check:
                    if new != 0.0 and (new < alpha * (1 - REL_TOL) or new > 1.0):
                        counters[G_RANGE_VIOL] += 1
                    if new > pk and not coin:
                        # growth not caused by an equalizing coin comes from one class
                        if grown_cls == -1:
                            grown_cls = rn_cls[t]
                        elif grown_cls != rn_cls[t]:
                            counters[G_CLASS_VIOL] += 1
        if check:
            for t in range(t0, t1):
                counters[G_PIN_VIOL] += _audit_row(p, bad, bad, 1.0, 1.0, rn_k[t], nbad, False)
        if watch.shape[0] > 0:
            _trace_row(p, bad, bad, watch, trace[i + 1])
            trace[i + 1, :, 3] = 0.0
    return STATUS_OK


@njit(cache=True, nogil=True)
def hyper_kernel(p, hi, lo, sel, slot_ptr, slot_edge, slot_idx, epos, thr, seed, mut,
                 check, n_iter, flip, flip_u, watch, trace, counters, reverse, err):
    n, q = p.shape
    r = epos.shape[1]
    hseed = seed_state(seed)
    nbad = np.zeros(n, dtype=np.int64)
    live = np.zeros(q, dtype=np.int64)
    act = np.zeros(q, dtype=np.bool_)
    hics = np.zeros(q, dtype=np.uint64)
    if watch.shape[0] > 0:
        _trace_row(p, hi, lo, watch, trace[0])
    for i in range(n_iter):
        h_i = absorb(hseed, i)
        s0 = slot_ptr[i]
        s1 = slot_ptr[i + 1]
        nslots = s1 - s0
        nlive = 0
        for c in range(q):
            if hi[i, c] or lo[i, c] or not p[i, c] > 0.0:
                continue
            live[nlive] = c
            nlive += 1
            hics[c] = absorb(h_i, c)
            act[c] = _draw(hics[c], i, c, ACT, 0, flip, flip_u) < p[i, c]
            if act[c]:
                sel[i, c] = True
                counters[H_ACTIVATIONS] += 1
        if check:
            # under linearity each right-most vertex is reached through one edge only
            for a_ in range(s0, s1):
                for b_ in range(a_ + 1, s1):
                    if epos[slot_edge[a_], r - 1] == epos[slot_edge[b_], r - 1]:
                        counters[H_PAIR_VIOL] += 1
        for tt in range(nslots):
            t = s0 + (nslots - 1 - tt if reverse else tt)
            e = slot_edge[t]
            idx = slot_idx[t]
            k = epos[e, r - 1]
            for lc in range(nlive):
                c = live[lc]
                skip = hi[k, c] or lo[k, c]
                for m in range(idx):
                    if not sel[epos[e, m], c]:
                        skip = True
                        break
                pk = p[k, c]
                if skip or pk <= 0.0:
                    counters[H_SKIP] += 1
                    continue
                pi = p[i, c]
                a = act[c]
                xp = 1.0
                for m in range(idx + 1, r - 1):
                    xp *= p[epos[e, m], c]
                x = pi * xp
                if check and x > xp:
                    counters[H_X_VIOL] += 1
                case = _hyper_case(pk, x, xp, thr)
                if case == rules.CASE_REGIME:
                    err[0] = i
                    err[1] = c
                    err[2] = k
                    return STATUS_REGIME
                coin = False
                if case == rules.CASE_UPPER:
                    counters[H_UPPER] += 1
                    if a:
                        mu = _mu_hyper(x, xp, pi, pk)
                        coin = _draw(hics[c], i, c, MU, k + 1, flip, flip_u) < mu
                        counters[H_COINS] += 1
                        if check and not 0.0 <= mu <= 1.0:
                            counters[H_PROB_VIOL] += 1
                elif case == rules.CASE_LOWER:
                    counters[H_LOWER] += 1
                    if not a:
                        ell = _ell_hyper(x, pi, pk, thr)
                        coin = _draw(hics[c], i, c, ELL, k + 1, flip, flip_u) < ell
                        counters[H_COINS] += 1
                        if check and not 0.0 <= ell <= 1.0:
                            counters[H_PROB_VIOL] += 1
                else:
                    counters[H_MAIN] += 1
                new, flag = _hyper_rule(case, pk, x, xp, a, coin, thr, mut)
                p[k, c] = new
                if flag == rules.FLAG_HI:
                    hi[k, c] = True
                    counters[H_PINS_HI] += 1
                elif flag == rules.FLAG_LO:
                    lo[k, c] = True
                    counters[H_PINS_LO] += 1
                if check and new != 0.0 and (new < thr * (1 - REL_TOL) or new > 0.5):
                    counters[H_RANGE_VIOL] += 1
        if check:
            for t in range(s0, s1):
                k = epos[slot_edge[t], r - 1]
                counters[H_PIN_VIOL] += _audit_row(p, hi, lo, 0.5, thr, k, nbad, True)
        if watch.shape[0] > 0:
            _trace_row(p, hi, lo, watch, trace[i + 1])
    return STATUS_OK
