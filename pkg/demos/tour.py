#!/usr/bin/env python3
"""A guided tour of exact nilpotent arithmetic and the i-affine checks.

Run it from the repository root:

    python demos/tour.py

Everything is computed over exact rationals; every printed equality is an
identity in the algebra at hand, not a numerical approximation.
"""

from fractions import Fraction

from weilaff import (
    CanonicalAction,
    format_value,
    Connection,
    ExprMap,
    Div,
    PointVec,
    PolyMap,
    Poly,
    Sqrt,
    Add,
    Mul,
    Var,
    canonical_combine,
    check_axioms,
    connection_apply,
    connection_combine,
    eval_map,
    find_D_k_violation,
    generic_Ak_tuple,
    in_A_k,
    in_D_k,
    invert,
    make_truncated_context,
    retract_combine,
    RetractPair,
)


def section(title):
    print()
    print(title)
    print("-" * len(title))


# -- 1. nilpotents truncate themselves -----------------------------------------------

section("1. Arithmetic with nilpotents")
ctx = make_truncated_context([("d", 2, 2)])
d1, d2 = ctx.gens()
x = 1 + d1 + d2
print("x         =", x)
print("x^2       =", x * x)
print("x^3       =", x * x * x, "   (degree-3 products vanish)")
print("1/x       =", invert(x))
print("x * 1/x   =", x * invert(x))

# -- 2. membership is decidable, failures carry witnesses ----------------------------

section("2. Infinitesimal order of a vector")
v = PointVec(ctx, (d1, d2))
print("v = (d1, d2)")
print("in D_2:", in_D_k(v, 2))
w = find_D_k_violation(v, 1)
print("in D_1: False, witness:", w.location, "->", w.coefficient, "*", w.monomial)

# -- 3. polynomial maps preserve i-tuples --------------------------------------------

section("3. Maps preserve order-k tuples")
actx, pts = generic_Ak_tuple(2, 2, 3)  # generic second-order triple in the plane
f = PolyMap(
    2,
    2,
    (
        Poly(2, {(1, 0): Fraction(1), (0, 2): Fraction(3, 2)}),  # x + 3/2 y^2
        Poly(2, {(0, 1): Fraction(1), (1, 1): Fraction(-2)}),  # y - 2xy
    ),
)
images = [eval_map(f, P) for P in pts]
print("generic triple is A_2:       ", in_A_k(pts, 2))
print("image triple is still A_2:   ", in_A_k(images, 2))

# -- 4. affine combinations of i-tuples ----------------------------------------------

section("4. Weighted combinations and the action axioms")
mid = canonical_combine((Fraction(1, 2), Fraction(1, 2), Fraction(0)), pts, 2)
print("midpoint of P1,P2:", format_value(mid))
report = check_axioms(
    CanonicalAction(2, 2),
    pts,
    [(Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)), (Fraction(-1), Fraction(1), Fraction(1))],
    outer=(Fraction(1, 4), Fraction(3, 4)),
)
print(report)

# -- 5. connections: parallelogram completion = (-1,1,1) combination -----------------

section("5. A connection field and its parallelogram")
x1 = Poly(2, {(1, 0): Fraction(1)})
gamma = Connection(2, {(0, 0, 0): x1, (0, 0, 1): 3, (1, 1, 1): x1 + 1})
pctx = make_truncated_context([("q", 2, 1), ("s", 2, 1)])
P = pctx.point([1, 2])
Q = PointVec(pctx, (P[0] + pctx.gen(0), P[1] + pctx.gen(1)))
S = PointVec(pctx, (P[0] + pctx.gen(2), P[1] + pctx.gen(3)))
lam = connection_apply(gamma, P, Q, S)
comb = connection_combine(gamma, (Fraction(-1), Fraction(1), Fraction(1)), [P, Q, S])
print("lambda(P,Q,S)     :", format_value(lam))
print("(-1,1,1) combine  :", format_value(comb))
print("equal:", lam.coords == comb.coords)

# -- 6. a retract that is not polynomial ---------------------------------------------

section("6. Radial projection onto the unit circle")
norm = Sqrt(Add(Mul(Var(0), Var(0)), Mul(Var(1), Var(1))))
proj = ExprMap(2, 2, (Div(Var(0), norm), Div(Var(1), norm)))
circle = RetractPair.from_idempotent(proj)
cctx = make_truncated_context([("e", 2, 2)])
base = cctx.point([Fraction(3, 5), Fraction(4, 5)])
raw = PointVec(cctx, (base[0] + cctx.gen(0), base[1] + cctx.gen(1)))
pert = circle.idempotent_eval(raw)  # push the perturbed point onto the circle
onto = retract_combine(circle, (Fraction(1, 3), Fraction(2, 3)), [base, pert])
print("combined point:", format_value(onto))
check = onto[0] * onto[0] + onto[1] * onto[1]
print("x^2 + y^2 =", check, "  (stays on the circle exactly)")
