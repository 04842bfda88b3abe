#!/usr/bin/env python3
"""Solve an MPS file with SciPy's HiGHS and write column values and row duals.

Usage: mps_linprog.py MODEL.mps SOLUTION.csv [DUALS.csv]

SOLUTION.csv holds `column,value`, DUALS.csv holds `row,dual`. Duals use the
convention d = c - A'y: nonnegative on active >= rows, nonpositive on active
<= rows. Exits 1 when the model is not solved to optimality.
"""

import sys

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix


def read_mps(path):
    rows, row_kind, objective = [], {}, None
    cols, col_index = [], {}
    cost, entries, rhs = {}, [], {}
    lower, upper = {}, {}
    section = None
    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("*"):
                continue
            tok = line.split()
            if not line[0].isspace():
                section = tok[0]
                continue
            if section == "ROWS":
                kind, name = tok
                if kind == "N":
                    objective = objective or name
                else:
                    row_kind[name] = kind
                    rows.append(name)
            elif section == "COLUMNS":
                name = tok[0]
                if name not in col_index:
                    col_index[name] = len(cols)
                    cols.append(name)
                for r, v in zip(tok[1::2], tok[2::2]):
                    if r == objective:
                        cost[name] = cost.get(name, 0.0) + float(v)
                    else:
                        entries.append((r, name, float(v)))
            elif section == "RHS":
                for r, v in zip(tok[1::2], tok[2::2]):
                    if r != objective:
                        rhs[r] = float(v)
            elif section == "BOUNDS":
                kind, name = tok[0], tok[2]
                value = float(tok[3]) if len(tok) > 3 else None
                if kind == "FX":
                    lower[name] = upper[name] = value
                elif kind == "FR":
                    lower[name], upper[name] = -np.inf, np.inf
                elif kind == "MI":
                    lower[name] = -np.inf
                elif kind == "LO":
                    lower[name] = value
                elif kind == "UP":
                    upper[name] = value
                else:
                    raise SystemExit(f"unsupported bound type {kind}")
            elif section in ("RANGES",):
                raise SystemExit("RANGES are not supported")
    return rows, row_kind, cols, col_index, cost, entries, rhs, lower, upper


def main(argv):
    if len(argv) not in (3, 4):
        print(__doc__, file=sys.stderr)
        return 2
    rows, row_kind, cols, col_index, cost, entries, rhs, lower, upper = read_mps(argv[1])
    c = np.array([cost.get(name, 0.0) for name in cols])
    bounds = [(lower.get(n, 0.0), upper.get(n, np.inf)) for n in cols]

    ub_rows = [r for r in rows if row_kind[r] in ("L", "G")]
    eq_rows = [r for r in rows if row_kind[r] == "E"]
    ub_pos = {r: i for i, r in enumerate(ub_rows)}
    eq_pos = {r: i for i, r in enumerate(eq_rows)}
    ub_i, ub_j, ub_v, eq_i, eq_j, eq_v = [], [], [], [], [], []
    for r, name, v in entries:
        j = col_index[name]
        if row_kind[r] == "E":
            eq_i.append(eq_pos[r]); eq_j.append(j); eq_v.append(v)
        else:
            sign = -1.0 if row_kind[r] == "G" else 1.0
            ub_i.append(ub_pos[r]); ub_j.append(j); ub_v.append(sign * v)
    n = len(cols)
    a_ub = csr_matrix((ub_v, (ub_i, ub_j)), shape=(len(ub_rows), n)) if ub_rows else None
    b_ub = np.array([(-1.0 if row_kind[r] == "G" else 1.0) * rhs.get(r, 0.0) for r in ub_rows])
    a_eq = csr_matrix((eq_v, (eq_i, eq_j)), shape=(len(eq_rows), n)) if eq_rows else None
    b_eq = np.array([rhs.get(r, 0.0) for r in eq_rows])

    res = linprog(c, A_ub=a_ub, b_ub=b_ub if ub_rows else None, A_eq=a_eq,
                  b_eq=b_eq if eq_rows else None, bounds=bounds, method="highs")
    if res.status != 0:
        print(f"linprog: {res.message}", file=sys.stderr)
        return 1
    with open(argv[2], "w") as fh:
        fh.write("column,value\n")
        for name, v in zip(cols, res.x):
            fh.write(f"{name},{float(v)!r}\n")
    if len(argv) == 4:
        dual = {}
        if ub_rows:
            for r, m in zip(ub_rows, res.ineqlin.marginals):
                dual[r] = -m if row_kind[r] == "G" else m
        if eq_rows:
            for r, m in zip(eq_rows, res.eqlin.marginals):
                dual[r] = m
        with open(argv[3], "w") as fh:
            fh.write("row,dual\n")
            for r in rows:
                fh.write(f"{r},{float(dual[r])!r}\n")
    print(f"objective {res.fun!r} iterations {res.nit}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
