"""Independent reference routes shared by the test modules.

Feasibility questions are answered with linear programs (scipy's HiGHS),
which share no code with the combinatorial enumerators under test.
"""

import itertools
import math

import numpy as np
from scipy.optimize import linprog

MARGIN_CAP = 1.0


def lp_margin(n, le_rows, strict_pos, nonpos, fbar):
    """Max t with f_i - fbar_i >= t on ``strict_pos``, f_i <= fbar_i on ``nonpos`` and ``row @ f <= 0``."""
    # variables: f_0..f_{n-1}, t ; minimise -t
    A, b = [], []
    for row in le_rows:
        A.append(list(row) + [0.0])
        b.append(0.0)
    for i in strict_pos:
        r = [0.0] * (n + 1)
        r[i], r[n] = -1.0, 1.0
        A.append(r)
        b.append(-fbar[i])
    for i in nonpos:
        r = [0.0] * (n + 1)
        r[i] = 1.0
        A.append(r)
        b.append(fbar[i])
    c = [0.0] * n + [-1.0]
    bounds = [(None, None)] * n + [(None, MARGIN_CAP)]
    res = linprog(c, A_ub=A or None, b_ub=b or None, bounds=bounds, method="highs")
    return -res.fun if res.status == 0 else -math.inf


def _shape_rows(pts, lo, hi, r, direction, n):
    """Rows encoding r-monotonicity (times ``direction``) on indices ``lo..hi-1`` as ``row @ f <= 0``."""
    rows = []
    for i in range(lo, hi - r):
        row = [0.0] * n
        if r == 1:
            row[i], row[i + 1] = 1.0, -1.0
        else:
            x0, x1, x2 = (float(pts[j]) for j in (i, i + 1, i + 2))
            row[i], row[i + 1], row[i + 2] = -(x2 - x1), (x2 - x0), -(x1 - x0)
        rows.append([direction * v for v in row])
    return rows


def _segmentations(n, k):
    for pieces in range(1, min(k, n) + 1):
        for cuts in itertools.combinations(range(1, n), pieces - 1):
            bnd = (0,) + cuts + (n,)
            yield [(bnd[i], bnd[i + 1]) for i in range(pieces)]


def lp_mask_feasible(pts, fbar, r, k, directions, mask, above=True):
    """Is ``mask`` the level set of some member? One LP per segmentation and direction choice."""
    n = len(pts)
    sign = 1.0 if above else -1.0
    fb = [sign * float(v) for v in fbar]
    pos = [i for i in range(n) if mask >> i & 1]
    neg = [i for i in range(n) if not mask >> i & 1]
    for seg in _segmentations(n, k):
        for dirs in itertools.product(directions, repeat=len(seg)):
            # Negating f turns "below" into "above" for the reversed direction.
            rows = []
            for (a, b), d in zip(seg, dirs):
                rows += _shape_rows(pts, a, b, r, d * sign, n)
            if lp_margin(n, rows, pos, neg, fb) > 1e-9:
                return True
    return False


def lp_realizable(pts, fbar, r, k, directions, above=True):
    """Independent LP route: every pattern some member realizes, over all segmentations and directions."""
    return {m for m in range(1 << len(pts)) if lp_mask_feasible(pts, fbar, r, k, directions, m, above)}


def _planar_orders(fam):
    """Distinct projection orders over many float directions, including both sides of every critical one."""
    pts = np.array([[float(a), float(b)] for a, b in fam.points])
    angles = set(np.linspace(0, 2 * np.pi, 720, endpoint=False))
    for p, q in itertools.combinations(pts, 2):
        base = math.atan2(q[1] - p[1], q[0] - p[0]) + np.pi / 2
        for off in (-1e-4, 1e-4, np.pi - 1e-4, np.pi + 1e-4):
            angles.add(base + off)
    orders = []
    seen = set()
    for ang in sorted(angles):
        order = tuple(np.argsort(pts @ np.array([math.cos(ang), math.sin(ang)])))
        if order not in seen:
            seen.add(order)
            orders.append(order)
    return orders


def planar_lp_mask_feasible(fam, mask, orders=None):
    """Some direction and nondecreasing link realize ``mask``; one LP per projection order."""
    n = fam.size
    fb = [float(v) for v in fam.fbar_values()]
    sign = 1.0 if fam.direction == "above" else -1.0
    pos = [i for i in range(n) if mask >> i & 1]
    neg = [i for i in range(n) if not mask >> i & 1]
    for order in orders if orders is not None else _planar_orders(fam):
        rows = []
        for a, b in zip(order[:-1], order[1:]):
            row = [0.0] * n
            row[a], row[b] = sign, -sign  # phi nondecreasing in projection, written for sign * phi
            rows.append(row)
        if lp_margin(n, rows, pos, neg, [sign * v for v in fb]) > 1e-9:
            return True
    return False


def planar_lp_realizable(fam):
    """Every mask realized by some direction and monotone link, found by LP over projection orders."""
    orders = _planar_orders(fam)
    return {m for m in range(1 << fam.size) if planar_lp_mask_feasible(fam, m, orders)}


def shattered_somewhere(masks, n, size):
    """Does some ``size``-subset of the ``n`` base points receive all ``2^size`` traces?

    Plain bit extraction per subset, independent of the package's search.
    """
    bits = np.array([[(int(m) >> i) & 1 for i in range(n)] for m in masks], dtype=np.int64).reshape(-1, n)
    if len(bits) < (1 << size):
        return False
    weights = 1 << np.arange(size)
    for combo in itertools.combinations(range(n), size):
        if np.unique(bits[:, combo] @ weights).size == (1 << size):
            return True
    return False
