"""Core algebra: contexts, ring ops, inversion, sqrt, matrices, quotients."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from weilaff import (
    ContextMismatchError,
    NonInvertibleError,
    NotASquareError,
    PointVec,
    SingularMatrixError,
    WeilError,
    invert,
    make_quotient_context,
    make_truncated_context,
    mat_inverse,
    mat_mul,
    sqrt,
)

from _oracles import (
    as_dense,
    dense_mul,
    dense_pow,
    monomials_up_to,
    reduces_to_zero,
)


def ctx1():
    return make_truncated_context([("eps", 1, 1)])


def ctx2():
    return make_truncated_context([("eps", 2, 2)])


# -- truncated contexts ---------------------------------------------------------------


def test_cap_one_square_vanishes():
    c = ctx1()
    e = c.gen(0)
    assert (e * e).is_zero()
    assert ((c.one() + e) * (c.one() - e)) == c.one()


def test_single_block_cap_two():
    c = ctx2()
    e1, e2 = c.gen(0), c.gen(1)
    assert not (e1 * e2).is_zero()
    assert (e1 * e1 * e2).is_zero()  # degree 3 exceeds the shared cap


def test_independent_blocks():
    c = make_truncated_context([("a", 1, 1), ("b", 1, 1)])
    a, b = c.gen(0), c.gen(1)
    assert not (a * b).is_zero()
    assert (a * a).is_zero()
    assert (b * b).is_zero()


def test_duplicate_block_name_rejected():
    with pytest.raises(WeilError):
        make_truncated_context([("a", 1, 1), ("a", 2, 1)])


def test_zero_generator_count_rejected():
    with pytest.raises(WeilError):
        make_truncated_context([("a", 0, 1)])


def test_nilpotency_of_long_products():
    c = make_truncated_context([("a", 2, 1), ("b", 1, 2)])
    total = 1 + 2  # sum of caps
    prod = c.one()
    for i in range(total + 1):
        prod = prod * c.gen(i % 3)
    assert prod.is_zero()


def test_formatting_matches_the_reported_style():
    c = ctx1()
    assert str((c.one() + c.gen(0)) ** 2) == "1 + 2·eps"
    cc = make_truncated_context([("eps", 2, 1)])
    assert str((cc.one() + cc.gen(0)) ** 2) == "1 + 2·eps1"


# -- ring laws (property-based) -------------------------------------------------------


def _elements(ctx):
    monos = monomials_up_to(ctx.ngens, ctx.max_degree)
    coeff = st.fractions(
        min_value=Fraction(-2), max_value=Fraction(2), max_denominator=5
    )
    return st.dictionaries(st.sampled_from(monos), coeff, max_size=4).map(
        lambda d: ctx.element(d)
    )


LAW_CTX = make_truncated_context([("e", 2, 2)])


@settings(max_examples=60, derandomize=True)
@given(_elements(LAW_CTX), _elements(LAW_CTX), _elements(LAW_CTX))
def test_ring_laws(x, y, z):
    assert x + y == y + x
    assert (x + y) + z == x + (y + z)
    assert x * y == y * x
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x + LAW_CTX.zero() == x
    assert x * LAW_CTX.one() == x
    assert x - x == LAW_CTX.zero()


@settings(max_examples=40, derandomize=True)
@given(_elements(LAW_CTX), _elements(LAW_CTX))
def test_mul_against_dense_oracle(x, y):
    got = as_dense(x * y)
    want = dense_mul(as_dense(x), as_dense(y), LAW_CTX.max_degree)
    assert got == want


def test_pow_against_dense_oracle():
    c = ctx2()
    x = c.one() + c.gen(0) + c.gen(1) * Fraction(1, 3)
    for e in range(5):
        assert as_dense(x**e) == dense_pow(as_dense(x), e, c.max_degree, c.ngens)


def test_pow_cap_two_example():
    c = make_truncated_context([("e", 1, 2)])
    e = c.gen(0)
    assert (c.one() + e) ** 3 == c.one() + e * 3 + e * e * 3


# -- invert / sqrt ---------------------------------------------------------------------


def test_invert_constant():
    c = ctx1()
    assert invert(c.scalar(2)) == c.scalar(Fraction(1, 2))


def test_invert_cap_one():
    c = ctx1()
    assert invert(c.one() + c.gen(0)) == c.one() - c.gen(0)


def test_invert_cap_two():
    c = make_truncated_context([("e", 1, 2)])
    e = c.gen(0)
    x = c.one() + e
    assert invert(x) == c.one() - e + e * e
    assert x * invert(x) == c.one()


@settings(max_examples=40, derandomize=True)
@given(_elements(LAW_CTX))
def test_invert_round_trip(x):
    x = x + LAW_CTX.scalar(3)  # force a nonzero constant term
    assert x * invert(x) == LAW_CTX.one()


def test_invert_nonunit_rejected():
    c = ctx1()
    with pytest.raises(NonInvertibleError):
        invert(c.gen(0))


def test_sqrt_values():
    c = ctx1()
    assert sqrt(c.scalar(4)) == c.scalar(2)
    e = c.gen(0)
    assert sqrt(c.one() + e) == c.one() + e * Fraction(1, 2)
    c2 = make_truncated_context([("e", 1, 2)])
    e2 = c2.gen(0)
    r = sqrt(c2.one() + e2)
    assert r == c2.one() + e2 * Fraction(1, 2) - e2 * e2 * Fraction(1, 8)
    assert r * r == c2.one() + e2


@settings(max_examples=40, derandomize=True)
@given(_elements(LAW_CTX))
def test_sqrt_round_trip(x):
    x = (x + LAW_CTX.scalar(Fraction(7, 2))) ** 2  # constant term a nonzero square
    r = sqrt(x)
    assert r * r == x
    assert r.constant_term > 0


def test_sqrt_rejects_non_squares():
    c = ctx1()
    with pytest.raises(NotASquareError):
        sqrt(c.scalar(2))
    with pytest.raises(NotASquareError):
        sqrt(c.gen(0))


# -- matrices ---------------------------------------------------------------------------


def test_mat_inverse_rational():
    c = ctx1()
    M = [[c.scalar(2), c.scalar(1)], [c.scalar(1), c.scalar(1)]]
    inv = mat_inverse(M)
    assert inv == [[c.scalar(1), c.scalar(-1)], [c.scalar(-1), c.scalar(2)]]


def test_mat_inverse_weil_and_round_trip():
    c = ctx1()
    e = c.gen(0)
    M = [[c.one() + e, c.zero()], [c.zero(), c.one()]]
    inv = mat_inverse(M)
    assert inv == [[c.one() - e, c.zero()], [c.zero(), c.one()]]
    ident = mat_mul(M, inv)
    assert ident == [[c.one(), c.zero()], [c.zero(), c.one()]]


def test_mat_inverse_singular_rejected():
    c = ctx1()
    M = [[c.one(), c.one()], [c.one(), c.one()]]
    with pytest.raises(SingularMatrixError):
        mat_inverse(M)


# -- quotient contexts -------------------------------------------------------------------


def test_quotient_uv_zero():
    # u^2 = v^2 = 2uv = 0 kills every degree-2 monomial
    rels = [{(2, 0): Fraction(1)}, {(0, 2): Fraction(1)}, {(1, 1): Fraction(2)}]
    c = make_quotient_context(["u", "v"], rels, 3)
    u, v = c.gen(0), c.gen(1)
    assert (u * v).is_zero()
    assert (u * u).is_zero()


def test_quotient_antisymmetric_products_survive():
    # u_i u_j = 0, v_i v_j = 0, u_i v_j + u_j v_i = 0: u1 v2 = -u2 v1 != 0
    def mono(*pairs):
        m = [0, 0, 0, 0]
        for i in pairs:
            m[i] += 1
        return tuple(m)

    rels = []
    for i in range(2):
        for j in range(i, 2):
            rels.append({mono(i, j): Fraction(1)})          # u_i u_j
            rels.append({mono(2 + i, 2 + j): Fraction(1)})  # v_i v_j
    for i in range(2):
        for j in range(2):
            rel = {}
            for a, b in ((i, 2 + j), (j, 2 + i)):
                key = mono(a, b)
                rel[key] = rel.get(key, Fraction(0)) + 1
            rels.append(rel)
    c = make_quotient_context(["u1", "u2", "v1", "v2"], rels, 4)
    u1, u2, v1, v2 = (c.gen(i) for i in range(4))
    assert not (u1 * v2).is_zero()
    assert u1 * v2 == -(u2 * v1)
    assert (u1 * v1).is_zero()


def test_quotient_empty_relations_is_truncation():
    c = make_quotient_context(["t"], [], 2)
    t = c.gen(0)
    assert not (t * t).is_zero()
    assert (t * t * t).is_zero()


def test_quotient_rejects_inhomogeneous_relation():
    with pytest.raises(WeilError):
        make_quotient_context(["t"], [{(1,): Fraction(1), (2,): Fraction(1)}], 3)


def test_quotient_soundness_against_dense_elimination():
    """A monomial normalizes to zero iff it lies in the relation span."""
    rels = [
        {(2, 0, 0): Fraction(1)},
        {(1, 1, 0): Fraction(1), (0, 1, 1): Fraction(2)},
        {(0, 0, 2): Fraction(1)},
    ]
    cap = 3
    c = make_quotient_context(["x", "y", "z"], rels, cap)
    for mono in monomials_up_to(3, cap):
        if sum(mono) == 0:
            continue
        el = c.element({mono: Fraction(1)})
        expected = reduces_to_zero({mono: Fraction(1)}, rels, 3, cap)
        assert el.is_zero() == expected, mono
    # every relation reduces to zero, and so does every multiple
    for rel in rels:
        assert c.element(rel).is_zero()
        shifted = {tuple(m[i] + (1 if i == 1 else 0) for i in range(3)): q
                   for m, q in rel.items()}
        assert c.element(shifted).is_zero()


def test_quotient_products_stay_congruent():
    """Library product minus dense product lies in the ideal."""
    rels = [{(2, 0): Fraction(1)}, {(0, 2): Fraction(1)}]
    cap = 4
    c = make_quotient_context(["u", "v"], rels, cap)
    x = c.one() + c.gen(0) + c.gen(1) * Fraction(2, 3)
    y = c.gen(0) * Fraction(1, 2) + c.gen(0) * c.gen(1)
    got = as_dense(x * y)
    raw = dense_mul(as_dense(x), as_dense(y), cap)
    diff = dict(raw)
    for m, q in got.items():
        diff[m] = diff.get(m, Fraction(0)) - q
    diff = {m: q for m, q in diff.items() if q}
    assert reduces_to_zero(diff, rels, 2, cap)


# -- elements and points ------------------------------------------------------------------


def test_normal_form_idempotence():
    c = make_quotient_context(["u", "v"], [{(1, 1): Fraction(1)}], 3)
    x = c.element({(1, 1): Fraction(5), (1, 0): Fraction(1)})
    assert c.element(dict(x.coeffs)) == x


def test_context_mismatch_rejected():
    a = make_truncated_context([("eps", 1, 1)])
    b = make_truncated_context([("eps", 1, 2)])
    with pytest.raises(ContextMismatchError):
        a.gen(0) + b.gen(0)


def test_structurally_equal_contexts_interoperate():
    # contexts are value objects: two equal constructions share an algebra
    a, b = ctx1(), ctx1()
    assert a.gen(0) + b.gen(0) == a.gen(0) * 2


def test_point_vec_arithmetic_and_rational_coords():
    c = ctx2()
    P = c.point((1, Fraction(1, 2)))
    Q = PointVec(c, (c.gen(0), c.gen(1)))
    R = P + Q
    assert (R - P) == Q
    assert P.rational_coords() == (Fraction(1), Fraction(1, 2))
    assert (2 * Q)[0] == c.gen(0) * 2
    with pytest.raises(WeilError):
        R.rational_coords()  # nilpotent coordinates have no rational value
