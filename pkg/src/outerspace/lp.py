"""Joint repositioning of all vertex lifts by linear programming.

Fix, for every vertex, a closed edge of the cover tree containing its lift.
On that product of segments every edge-image length is an affine function of
the positions (or an absolute value, when both ends lie on one tree edge), so
minimizing the largest slope is a linear program.  The cells around the
current point are scored with a floating-point solver; for the best ones the
exact optimum is recovered from the constraints that are tight at the
floating-point vertex, by solving that square system in rationals.  Because the objective is convex on the product of trees, a
point that is optimal on every adjacent cell is a global minimum.
"""

import itertools
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog as float_linprog

from .errors import OptimalityGap

MAX_CELLS = 4096
MAX_ROUNDS = 200


def _cells_at(tree, X):
    if X.d is not None:
        A, _ = tree.closed_edge(X)
        return [(A, X.d, tree.length(X.d))]
    return [(X, oe, L) for oe, _, L in tree.directions(X)]


def _segment(tree, cell, g=None):
    A, oe, L = cell
    if g is not None:
        A = tree.act(g, A)
    return A, tree.point(A.V + (oe,)), L


def _affine_distance(tree, s1, i1, s2, i2, nvar):
    """Rows (coef, const) whose max is the distance between the two parametrized points."""
    A1, B1, L1 = s1
    A2, B2, L2 = s2

    def lin(i, sign, const):
        c = [Fraction(0)] * nvar
        c[i] += sign
        return c, const

    if {A1, B1} == {A2, B2}:
        # |t1 - pos2|, pos2 measured from A1
        c1, k1 = lin(i1, 1, Fraction(0))
        c2, k2 = (lin(i2, 1, Fraction(0)) if A2 == A1 else lin(i2, -1, L2))
        diff = [a - b for a, b in zip(c1, c2)]
        return [(diff, k1 - k2), ([-x for x in diff], k2 - k1)]
    best = None
    for E1, E2 in itertools.product((A1, B1), (A2, B2)):
        d = tree.dist(E1, E2)
        if best is None or d < best[0]:
            best = (d, E1, E2)
    D, E1, E2 = best
    c1, k1 = lin(i1, 1, Fraction(0)) if E1 == A1 else lin(i1, -1, L1)
    c2, k2 = lin(i2, 1, Fraction(0)) if E2 == A2 else lin(i2, -1, L2)
    return [([a + b for a, b in zip(c1, c2)], D + k1 + k2)]


def _build(G, tree, order, cells):
    n = len(order)
    idx = {v: i for i, v in enumerate(order)}
    rows, rhs = [], []
    for eid in G.edge_ids():
        e = G.edges[eid]
        s1 = _segment(tree, cells[e.src])
        s2 = _segment(tree, cells[e.dst], G.comarking[eid])
        for coef, const in _affine_distance(tree, s1, idx[e.src], s2, idx[e.dst], n + 1):
            coef = list(coef)
            coef[n] -= e.length
            rows.append(coef)
            rhs.append(-const)
    bounds = [(Fraction(0), cells[v][2]) for v in order] + [(Fraction(0), None)]
    return rows, rhs, bounds


def _float_solve(rows, rhs, bounds):
    n = len(bounds)
    c = np.zeros(n)
    c[-1] = 1.0
    res = float_linprog(c, A_ub=np.array(rows, dtype=float), b_ub=np.array(rhs, dtype=float),
                        bounds=[(float(lo), None if hi is None else float(hi)) for lo, hi in bounds],
                        method="highs")
    return (res.fun, res.x) if res.status == 0 else (None, None)


def _all_rows(rows, rhs, bounds):
    n = len(bounds)
    A = [list(r) for r in rows]
    b = list(rhs)
    for i, (lo, hi) in enumerate(bounds):
        unit = [Fraction(int(j == i)) for j in range(n)]
        A.append([-x for x in unit])
        b.append(-lo)
        if hi is not None:
            A.append(unit)
            b.append(hi)
    return A, b


def _solve_square(A, b):
    """Gaussian elimination over the rationals; None if singular."""
    n = len(A)
    M = [list(r) + [v] for r, v in zip(A, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        M[col] = [x / p for x in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def _independent(rows, n):
    basis = []
    for r in rows:
        v = list(r)
        for b, lead in basis:
            if v[lead] != 0:
                f = v[lead] / b[lead]
                v = [x - f * y for x, y in zip(v, b)]
        lead = next((k for k in range(n) if v[k] != 0), None)
        if lead is not None:
            basis.append((v, lead))
            yield r
        if len(basis) == n:
            return


def _exact_solution(rows, rhs, bounds, x, tol=1e-7):
    """The exact vertex whose tight constraints match the float solution x."""
    n = len(bounds)
    A, b = _all_rows(rows, rhs, bounds)
    slack = [float(bi) - sum(float(a) * xi for a, xi in zip(r, x)) for r, bi in zip(A, b)]
    order = sorted(range(len(A)), key=lambda k: abs(slack[k]))
    tight = [k for k in order if abs(slack[k]) < tol]
    chosen = []
    picked = set()
    for r in _independent([A[k] for k in tight], n):
        k = next(k for k in tight if A[k] is r and k not in picked)
        picked.add(k)
        chosen.append(k)
    if len(chosen) < n:
        return None
    sol = _solve_square([A[k] for k in chosen], [b[k] for k in chosen])
    if sol is None:
        return None
    if any(sum(a * v for a, v in zip(r, sol)) > bi for r, bi in zip(A, b)):
        return None
    return sol


def _max_slope(G, tree, lifts):
    return max(tree.dist(lifts[e.src], tree.act(G.comarking[eid], lifts[e.dst])) / e.length
               for eid, e in G.edges.items())


def joint_descent(G, tree, lifts, target):
    lifts = dict(lifts)
    order = sorted(G.vertices)
    current = _max_slope(G, tree, lifts)
    for _ in range(MAX_ROUNDS):
        if current == target:
            return lifts, current
        options = [_cells_at(tree, lifts[v]) for v in order]
        total = 1
        for o in options:
            total *= len(o)
        if total > MAX_CELLS:
            raise OptimalityGap(current, target)
        scored = []
        for combo in itertools.product(*options):
            cells = dict(zip(order, combo))
            rows, rhs, bounds = _build(G, tree, order, cells)
            val, x = _float_solve(rows, rhs, bounds)
            if val is not None:
                scored.append((val, len(scored), cells, rows, rhs, bounds, x))
        scored.sort(key=lambda s: (s[0], s[1]))
        improved = False
        for val, _, cells, rows, rhs, bounds, x in scored[:3]:
            if val > float(current) * (1 + 1e-9):
                break
            sol = _exact_solution(rows, rhs, bounds, x)
            if sol is None:
                continue
            new = {v: tree.point(cells[v][0].V, cells[v][1], sol[i]) for i, v in enumerate(order)}
            value = _max_slope(G, tree, new)
            if value < current:
                lifts, current, improved = new, value, True
                break
        if not improved:
            return lifts, current
    return lifts, current
