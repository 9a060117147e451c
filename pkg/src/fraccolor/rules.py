"""Per-cell weight update rules for both coloring procedures.

These functions are plain Python so that they run unchanged on floats
(the kernels compile them with numba) and on ``fractions.Fraction`` (the
exact outcome-tree oracle). They must not call each other, since a compiled
caller cannot reach an uncompiled callee. Only integer literals enter the
arithmetic; returned constants (0.0, 0.5, 1.0) are exact binary values that
the oracle lifts back to ``Fraction``.

Mutation bits switch individual mechanisms off. They exist so the test
suite can demonstrate that its checks detect a broken equalizer.
"""
from __future__ import annotations

import math

from .errors import DomainError

MUT_NONE = 0
MUT_NO_MU = 1  # upper equalizing coin never fires
MUT_NO_ELL = 2  # lower equalizing coin never drops the weight
MUT_NO_KILL = 4  # graph: selection no longer zeroes right-neighbors

MUTATIONS = {"none": MUT_NONE, "no-mu": MUT_NO_MU, "no-ell": MUT_NO_ELL, "no-kill": MUT_NO_KILL}

# hypergraph cases
CASE_SKIP = 1
CASE_MAIN = 2
CASE_UPPER = 3
CASE_LOWER = 4
CASE_REGIME = -1

FLAG_NONE = 0
FLAG_HI = 1
FLAG_LO = 2


def alpha_graph(d: int, r: int, eps: float) -> float:
    """Initial weight ln d / ((2 + eps/8) d ln(2r))."""
    if d < 2 or r < 1 or not eps > 0:
        raise DomainError(f"alpha_graph needs d >= 2, r >= 1, eps > 0 (got d={d}, r={r}, eps={eps})")
    a = math.log(d) / ((2 + eps / 8) * d * math.log(2 * r))
    if not 0 < a < 1:
        raise DomainError(f"alpha_graph({d}, {r}, {eps}) = {a} is not in (0, 1)")
    return a


def alpha_hyper(d: int, r: int, eps: float) -> float:
    """Initial weight (ln d / ((1 + eps r/10) r (r-1) d))^(1/(r-1))."""
    if d < 2 or r < 2 or not eps > 0:
        raise DomainError(f"alpha_hyper needs d >= 2, r >= 2, eps > 0 (got d={d}, r={r}, eps={eps})")
    a = (math.log(d) / ((1 + eps * r / 10) * r * (r - 1) * d)) ** (1 / (r - 1))
    if not 0 < a < 0.5:
        raise DomainError(f"alpha_hyper({d}, {r}, {eps}) = {a} is not in (0, 1/2)")
    return a


def kappa_hyper(r: int, eps: float) -> float:
    return eps / (1000 * r)


# graph procedure ------------------------------------------------------------

def equalizer_prob_graph(pk, r):
    """Probability of pinning to 1 when 2r*pk > 1; written as (2r pk - 1)/(2r - 1)."""
    return (2 * r * pk - 1) / (2 * r - 1)


def graph_rule(pk, s, in_j, coin, r, mut):
    """New weight of an unpinned right-neighbor after its left neighbor activated c.

    ``s`` is the selection bit, ``in_j`` whether the neighbor lies in the drawn
    class, ``coin`` the equalizing coin (ignored where not used). Returns
    ``(weight, pinned)``.
    """
    if 2 * r * pk <= 1:
        if s:
            if mut & MUT_NO_KILL:
                return pk, False
            return 0.0, False
        if in_j:
            grown = 2 * r * pk
            # only reachable with equality; the weight lands on the pin value
            if grown >= 1:
                return 1.0, True
            return grown, False
        return 0.0, False
    if not s and in_j:
        return 1.0, True
    if coin and not (mut & MUT_NO_MU):
        return 1.0, True
    return 0.0, False


def graph_needs_coin(pk, s, in_j, r):
    return 2 * r * pk > 1 and not (not s and in_j)


# hypergraph procedure -------------------------------------------------------

def hyper_case(pk, x, xp, thr):
    """Classify an update given p(v_k), X and X' (all read from step i-1)."""
    upper = 2 * pk > 1 - x
    lower = 0 < pk * (1 - xp) and pk * (1 - xp) < (1 - x) * thr
    if upper and lower:
        return CASE_REGIME
    if upper:
        return CASE_UPPER
    if lower:
        return CASE_LOWER
    return CASE_MAIN


def equalizer_mu_hyper(x, xp, pi, pk):
    return ((1 - pi) / pi) * ((2 * pk - (1 - x)) / ((1 - x) - 2 * (1 - xp) * pk))


def equalizer_ell_hyper(x, pi, pk, thr):
    return ((1 - x) / (1 - pi)) * (1 - thr * pi / pk)


def hyper_rule(case, pk, x, xp, a, coin, thr, mut):
    """New weight of v_k for a non-skipped update. Returns ``(weight, flag)``.

    Shrinking lands exactly on ``thr`` at the lower boundary and growing
    lands exactly on 1/2 at the upper boundary; both count as pin events.
    """
    shrink = False
    if case == CASE_MAIN:
        shrink = bool(a)
    elif case == CASE_UPPER:
        if not a:
            return 0.5, FLAG_HI
        if coin and not (mut & MUT_NO_MU):
            return 0.5, FLAG_HI
        shrink = True
    else:
        if a:
            return thr, FLAG_LO
        if not (coin or (mut & MUT_NO_ELL)):
            return 0.0, FLAG_NONE
    if shrink:
        if xp != 1 and pk * (1 - xp) == (1 - x) * thr:
            return thr, FLAG_LO
        return pk * (1 - xp) / (1 - x), FLAG_NONE
    if 2 * pk == 1 - x:
        return 0.5, FLAG_HI
    return pk / (1 - x), FLAG_NONE


def hyper_needs_coin(case, a):
    return (case == CASE_UPPER and a) or (case == CASE_LOWER and not a)
