"""Pure-numpy split scans. Reference semantics for the Cython kernels.

Inputs are pre-sorted ascending by feature value. Cumulative sums run
left to right (np.cumsum is sequential) so accumulation order matches
the compiled scan exactly; ties in cost resolve to the lowest threshold
because argmin/argmax return the first occurrence.
"""

import numpy as np


def scan_gini(x, y, min_leaf):
    """Best binary split of a 0/1-labelled feature column by weighted Gini.

    x: float64 sorted ascending; y: int64 labels aligned with x.
    Returns (cost, threshold, n_left) or None when no boundary is valid.
    Cost is n_L*gini_L + n_R*gini_R up to a constant factor: computed as
    l0*l1/n_L + r0*r1/n_R, exact in int64 products.
    """
    n = x.shape[0]
    if n < 2 * min_leaf:
        return None
    cum1 = np.cumsum(y)
    total1 = int(cum1[-1])
    i = np.arange(1, n)  # size of left side at boundary before index i
    l1 = cum1[:-1]
    l0 = i - l1
    r1 = total1 - l1
    r0 = (n - i) - r1
    cost = (l0 * l1) / i + (r0 * r1) / (n - i)
    valid = (x[1:] != x[:-1]) & (i >= min_leaf) & ((n - i) >= min_leaf)
    if not valid.any():
        return None
    cost = np.where(valid, cost, np.inf)
    b = int(np.argmin(cost))
    return float(cost[b]), float((x[b] + x[b + 1]) / 2.0), b + 1


def scan_grad(x, g, h, lam, min_leaf, min_child_weight):
    """Best binary split of a feature column by second-order gain score.

    x sorted ascending; g, h per-row gradient/hessian aligned with x.
    Returns (score, threshold, n_left, g_left, h_left) or None; score is
    G_L^2/(H_L+lam) + G_R^2/(H_R+lam). The caller turns scores into
    gains against the unsplit node and reuses the left-side sums as
    child statistics.
    """
    n = x.shape[0]
    if n < 2 * min_leaf:
        return None
    cg = np.cumsum(g)
    ch = np.cumsum(h)
    gtot = cg[-1]
    htot = ch[-1]
    i = np.arange(1, n)
    gl = cg[:-1]
    hl = ch[:-1]
    gr = gtot - gl
    hr = htot - hl
    score = (gl * gl) / (hl + lam) + (gr * gr) / (hr + lam)
    valid = (
        (x[1:] != x[:-1])
        & (i >= min_leaf)
        & ((n - i) >= min_leaf)
        & (hl >= min_child_weight)
        & (hr >= min_child_weight)
    )
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf)
    b = int(np.argmax(score))
    return (
        float(score[b]),
        float((x[b] + x[b + 1]) / 2.0),
        b + 1,
        float(cg[b]),
        float(ch[b]),
    )
