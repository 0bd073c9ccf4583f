#!/usr/bin/env python3
"""Exact rational values for the derived manifest entries.

Writes fixtures/derived_values.json. Every value comes from a small linear
solve or closed form evaluated with fractions.Fraction, independent of the
Rust code. Run before the main build:

    python3 scripts/derive_values.py
"""

import json
from fractions import Fraction as F
from pathlib import Path


def solve(a, b):
    """Gauss-Jordan elimination over the rationals; a is square."""
    n = len(a)
    m = [row[:] + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next(r for r in range(col, n) if m[r][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [v / p for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [v - f * w for v, w in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def shared_multipliers(grad_f, active_rows):
    """Solve B^T mu = G_f for a square active gradient matrix B."""
    bt = [[row[i] for row in active_rows] for i in range(len(grad_f))]
    return solve(bt, grad_f)


G1 = [F(-1), F(-1)]
G2 = [F(1), F(-1)]
G3 = [F(0), F(1)]


def ex3(r1, r2):
    gf = [-r1, -r2]
    return shared_multipliers(gf, [G1, G2])


def ex5_grad(x, r1, r2):
    x1, x2 = x
    return [r1 * (-1 + x2), r2 * (-1 + x1 / 2)]


def ex5_interior(rho):
    # r = (rho, 1), active {G1}: unknowns x1, x2, L
    # rho*(-1 + x2) + L = 0 ; (-1 + x1/2) + L = 0 ; x1 + x2 = 1
    x1, x2, lam = solve(
        [[F(0), rho, F(1)], [F(1, 2), F(0), F(1)], [F(1), F(1), F(0)]],
        [rho, F(1), F(1)],
    )
    return x1, x2, lam


def ex4_perturbed(eps):
    # active {G1}, r = (1, 1): -1 + eps*x1 + L = 0 ; -1 + 2*eps*x2 + L = 0 ; x1 + x2 = 1
    x1, x2, lam = solve(
        [[eps, F(0), F(1)], [F(0), 2 * eps, F(1)], [F(1), F(1), F(0)]],
        [F(1), F(1), F(1)],
    )
    # canonical tangent vector (-1, 1): v^T diag(eps, 2 eps) v
    nd3 = eps + 2 * eps
    return x1, x2, lam, nd3


def ex5_nd3(r1, r2):
    # v = (-1, 1), D = [[0, r1], [r2/2, 0]]
    d = [[F(0), r1], [r2 / 2, F(0)]]
    v = [F(-1), F(1)]
    dv = [sum(d[i][j] * v[j] for j in range(2)) for i in range(2)]
    return sum(v[i] * dv[i] for i in range(2))


def sym_min_eig_2x2_offdiag(b, c):
    # symmetric part of [[0, b], [c, 0]] has eigenvalues +-(b + c)/2
    return -(b + c) / 2


def main():
    out = {}
    one = F(1)

    m = ex3(one, F(2))
    out["ex3.r_1_2.G1"], out["ex3.r_1_2.G2"] = m
    m = ex3(F(2), one)
    out["ex3.r_2_1.G1"], out["ex3.r_2_1.G2"] = m

    m = shared_multipliers(ex5_grad([F(1, 2), F(1, 2)], one, one), [G1, G2])
    out["ex5.x_half.r_1_1.G1"], out["ex5.x_half.r_1_1.G2"] = m
    m = shared_multipliers(ex5_grad([F(1), F(0)], one, one), [G1, G3])
    out["ex5.x_zero.r_1_1.G1"], out["ex5.x_zero.r_1_1.G3"] = m
    out["ex5.nd3_canonical.r_1_1"] = ex5_nd3(one, one)
    out["ex5.c3_min_eigenvalue.r_1_1"] = sym_min_eig_2x2_offdiag(one, F(1, 2))
    for rho in (F(3, 4), F(1), F(5, 4)):
        x1, x2, lam = ex5_interior(rho)
        out[f"ex5.interior_t.rho_{float(rho)}"] = x2
    x1, x2, lam = ex5_interior(F(1))
    out["ex5.interior.r_1_1.x1"] = x1
    out["ex5.interior.r_1_1.G1"] = lam

    for eps in (F(1, 10), F(1, 100)):
        x1, x2, lam, nd3 = ex4_perturbed(eps)
        key = f"ex4_perturbed.eps_{float(eps)}"
        out[f"{key}.x1"] = x1
        out[f"{key}.x2"] = x2
        out[f"{key}.G1"] = lam
        out[f"{key}.nd3_canonical"] = nd3

    # player-wise multipliers of the strict-complementarity example at 0:
    # player 1: d/dx1 (x1 - x2)^2 = 0 = L * 1 ; player 2: -1 = L * (-2)
    out["ex2.player1.G1"] = F(0)
    out["ex2.player2.G1"] = solve([[F(-2)]], [F(-1)])[0]

    # single-player box: f = (x - 2)^2, g = 1 - x at x = 1: 2(x - 2) = -lambda
    out["trivial_1p.lambda"] = solve([[F(-1)]], [F(2) * (1 - 2)])[0]

    payload = {k: {"exact": f"{v.numerator}/{v.denominator}", "value": float(v)} for k, v in sorted(out.items())}
    path = Path(__file__).resolve().parent.parent / "fixtures" / "derived_values.json"
    path.write_text(json.dumps(payload, indent=2) + "\n")
    print(f"wrote {len(payload)} values to {path}")


if __name__ == "__main__":
    main()
