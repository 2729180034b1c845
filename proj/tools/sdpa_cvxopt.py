#!/usr/bin/env python3
"""External SDP backend for koopctl.

Usage: sdpa_cvxopt.py INPUT.dat-s OUTPUT

Reads an SDPA sparse file (minimize c'x s.t. sum_i x_i F_i - F_0 >= 0), solves
it with cvxopt, and writes the status word ("optimal" on success) followed by
one value of x per line.
"""
import sys

from cvxopt import matrix, solvers


def read_sdpa(path):
    lines = []
    with open(path) as f:
        for raw in f:
            s = raw.strip()
            if not s or s[0] in '"*':
                continue
            lines.append(s.replace(",", " ").replace("{", " ").replace("}", " "))
    m = int(lines[0].split()[0])
    nblocks = int(lines[1].split()[0])
    dims = [abs(int(t)) for t in lines[2].split()[:nblocks]]
    c = [float(t) for t in lines[3].split()[:m]]
    F = [[{} for _ in range(nblocks)] for _ in range(m + 1)]
    for s in lines[4:]:
        t = s.split()
        k, b, i, j, v = int(t[0]), int(t[1]) - 1, int(t[2]) - 1, int(t[3]) - 1, float(t[4])
        F[k][b][(i, j)] = v
    return m, dims, c, F


def dense(entries, d, sign):
    a = matrix(0.0, (d, d))
    for (i, j), v in entries.items():
        a[i, j] = sign * v
        a[j, i] = sign * v
    return a


def main():
    if len(sys.argv) != 3:
        sys.stderr.write(__doc__)
        return 2
    m, dims, c, F = read_sdpa(sys.argv[1])
    # cvxopt: minimize c'x s.t. h - sum_i x_i G_i >= 0, so h = -F_0, G_i = -F_i.
    hs = [dense(F[0][b], d, -1.0) for b, d in enumerate(dims)]
    Gs = []
    for b, d in enumerate(dims):
        G = matrix(0.0, (d * d, m))
        for k in range(m):
            Gs_k = dense(F[k + 1][b], d, -1.0)
            G[:, k] = Gs_k[:]
        Gs.append(G)
    solvers.options["show_progress"] = False
    sol = solvers.sdp(matrix(c), Gs=Gs, hs=hs)
    with open(sys.argv[2], "w") as out:
        out.write(sol["status"] + "\n")
        x = sol["x"] if sol["x"] is not None else matrix(float("nan"), (m, 1))
        for v in x:
            out.write(repr(float(v)) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
