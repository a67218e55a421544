#!/usr/bin/env python3
"""How connection coefficients transform under a change of chart.

Run it from the repository root:

    python demos/christoffel_transport.py

A flat line carries the zero connection.  Pulling it back through the
curved chart  iota(x) = x + x^2  produces the coefficient

    Gt(P) = -2 / (1 + 2 P)

and combining points in the chart with Gt, then mapping through iota, lands
exactly on the straight-line combination of the mapped points.  All of it in
exact rational arithmetic.
"""

from fractions import Fraction

from weilaff import (
    Connection,
    PointVec,
    Poly,
    PolyMap,
    check_pullback_lemma,
    generic_Ak_tuple,
    make_truncated_context,
    pullback_connection,
)

# -- the chart and the flat ambient connection ---------------------------------------

iota = PolyMap(1, 1, (Poly(1, {(1,): Fraction(1), (2,): Fraction(1)}),))  # x + x^2
flat = Connection.zero(1)

print("chart      : iota(x) = x + x^2")
print("ambient    : straight-line combinations (zero connection)")
print()

# -- the induced coefficient at a few rational base points ---------------------------

print("pulled-back coefficient Gt at rational bases (expect -2/(1+2P)):")
for p in (Fraction(0), Fraction(1), Fraction(3, 2), Fraction(-2)):
    ctx = make_truncated_context([("t", 1, 1)])  # any context will do for a base
    P = ctx.point([p])
    gt = pullback_connection(flat, iota, P)
    val = gt.entries[(0, (0, 0))].constant_term
    print(f"  P = {str(p):>4}   Gt = {val}   -2/(1+2P) = {Fraction(-2, 1 + 2 * p)}")
print()

# -- transport: combine-then-map equals map-then-combine -----------------------------

_, pts = generic_Ak_tuple(1, 2, 3)  # generic second-order triple on the line
weights = [
    (Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)),
    (Fraction(-1), Fraction(1), Fraction(1)),
]
report = check_pullback_lemma(flat, iota, pts, weights)
print("transport through the chart on a generic second-order triple:")
print(report)
print()

# -- the same story one dimension up --------------------------------------------------

x1 = Poly(2, {(1, 0): Fraction(1)})
curved = Connection(2, {(0, 0, 0): x1, (0, 0, 1): 3, (1, 1, 1): x1 + 1})
chart2 = PolyMap(
    2,
    2,
    (
        Poly(2, {(1, 0): Fraction(1), (0, 1): Fraction(1), (0, 2): Fraction(1)}),  # x+y+y^2
        Poly(2, {(0, 1): Fraction(1), (2, 0): Fraction(1, 2)}),  # y + x^2/2
    ),
)
_, pts2 = generic_Ak_tuple(2, 2, 2)
report2 = check_pullback_lemma(curved, chart2, pts2, [(Fraction(2), Fraction(-1))])
print("a curved plane connection through a quadratic chart:")
print(report2)
