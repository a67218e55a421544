"""Maps between coordinate spaces over a context, and their derivatives.

Two map flavours share one evaluation interface:

* :class:`PolyMap`  -- componentwise sparse polynomials over Q; supports
  symbolic differentiation, composition and exact Taylor expansion.
* :class:`ExprMap`  -- componentwise closed-form expression trees that may
  also divide by units and take square roots, evaluated directly in the
  algebra (division and roots stay exact on nilpotent arguments).

Derivatives of an :class:`ExprMap` at a rational point are still available
through :func:`point_jet`, which reads Taylor coefficients off one exact
evaluation at ``P + d`` in a fresh nilpotent block.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .weil import (
    PointVec,
    Scalar,
    WeilContext,
    WeilElement,
    WeilError,
    _as_fraction,
    invert,
    make_truncated_context,
)
from .weil import sqrt as weil_sqrt
from .neighborhoods import in_D_k

#: hard bound on the Taylor truncation order accepted by :func:`taylor_eval`
MAX_TAYLOR_ORDER = 4


class DimensionMismatchError(WeilError):
    """Raised when a map is applied to a point of the wrong dimension."""


class Poly:
    """Sparse polynomial over Q in ``nvars`` variables (exponent-tuple keys)."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms=None):
        self.nvars = nvars
        cleaned = {}
        for m, c in (terms or {}).items():
            m = tuple(m)
            if len(m) != nvars:
                raise WeilError("monomial arity does not match variable count")
            c = _as_fraction(c)
            if c:
                cleaned[m] = cleaned.get(m, 0) + c
        self.terms = {m: c for m, c in cleaned.items() if c}

    # -- constructors ---------------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, q: Scalar) -> "Poly":
        return cls(nvars, {(0,) * nvars: _as_fraction(q)})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "Poly":
        if not 0 <= i < nvars:
            raise WeilError(f"variable index {i} out of range")
        return cls(nvars, {tuple(1 if j == i else 0 for j in range(nvars)): Fraction(1)})

    # -- ring operations --------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise WeilError("polynomials over different variable counts")
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.constant(self.nvars, other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        out = dict(self.terms)
        for m, c in other.terms.items():
            nc = out.get(m, 0) + c
            if nc:
                out[m] = nc
            else:
                del out[m]
        p = Poly.__new__(Poly)
        p.nvars, p.terms = self.nvars, out
        return p

    __radd__ = __add__

    def __neg__(self):
        p = Poly.__new__(Poly)
        p.nvars, p.terms = self.nvars, {m: -c for m, c in self.terms.items()}
        return p

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            q = _as_fraction(other)
            p = Poly.__new__(Poly)
            p.nvars = self.nvars
            p.terms = {m: c * q for m, c in self.terms.items()} if q else {}
            return p
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                key = tuple(a + b for a, b in zip(m1, m2))
                nc = out.get(key, 0) + c1 * c2
                if nc:
                    out[key] = nc
                else:
                    del out[key]
        p = Poly.__new__(Poly)
        p.nvars, p.terms = self.nvars, out
        return p

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if not isinstance(e, int) or e < 0:
            raise WeilError("exponent must be a nonnegative integer")
        result = Poly.constant(self.nvars, 1)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other):
        return (
            isinstance(other, Poly)
            and self.nvars == other.nvars
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    # -- structure ---------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(sum(m) == 0 for m in self.terms)

    def constant_value(self) -> Fraction:
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def total_degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def diff(self, i: int) -> "Poly":
        """Partial derivative with respect to variable ``i``."""
        out = {}
        for m, c in self.terms.items():
            e = m[i]
            if not e:
                continue
            key = m[:i] + (e - 1,) + m[i + 1 :]
            out[key] = out.get(key, 0) + c * e
        p = Poly.__new__(Poly)
        p.nvars, p.terms = self.nvars, {m: c for m, c in out.items() if c}
        return p

    def substitute(self, args: Sequence["Poly"]) -> "Poly":
        """Plug a polynomial in for each variable (simultaneous substitution)."""
        if len(args) != self.nvars:
            raise WeilError("substitution arity mismatch")
        nv = args[0].nvars if args else 0
        acc = Poly.zero(nv)
        for m, c in self.terms.items():
            term = Poly.constant(nv, c)
            for i, e in enumerate(m):
                if e:
                    term = term * args[i] ** e
            acc = acc + term
        return acc

    def eval_weil(self, coords: Sequence[WeilElement], cache: Optional[dict] = None) -> WeilElement:
        """Evaluate at algebra elements; ``cache`` memoizes coordinate powers."""
        if len(coords) != self.nvars:
            raise DimensionMismatchError("wrong number of coordinates")
        if not coords:
            raise WeilError("evaluation needs at least one coordinate for context")
        ctx = coords[0].context
        if cache is None:
            cache = {}
        acc = ctx.zero()
        for m, c in self.terms.items():
            term = ctx.scalar(c)
            for i, e in enumerate(m):
                if not e:
                    continue
                key = (i, e)
                pw = cache.get(key)
                if pw is None:
                    pw = coords[i] ** e
                    cache[key] = pw
                term = term * pw
                if term.is_zero():
                    break
            acc = acc + term
        return acc

    def eval_fractions(self, values: Sequence[Scalar]) -> Fraction:
        if len(values) != self.nvars:
            raise DimensionMismatchError("wrong number of coordinates")
        values = [_as_fraction(v) for v in values]
        acc = Fraction(0)
        for m, c in self.terms.items():
            term = c
            for v, e in zip(values, m):
                term *= v**e
            acc += term
        return acc

    def format(self, var_names: Sequence[str]) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m in sorted(self.terms, key=lambda mm: (sum(mm), tuple(-e for e in mm))):
            c = self.terms[m]
            factors = []
            for name, e in zip(var_names, m):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            if not factors:
                parts.append(str(c))
            elif c == 1:
                parts.append("*".join(factors))
            elif c == -1:
                parts.append("-" + "*".join(factors))
            else:
                parts.append(str(c) + "*" + "*".join(factors))
        out = parts[0]
        for p in parts[1:]:
            out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return out

    def __repr__(self):
        return f"Poly({self.format([f'x{i + 1}' for i in range(self.nvars)])})"


class PolyMap:
    """A polynomial map R^n -> R^m given by one :class:`Poly` per component."""

    __slots__ = ("in_dim", "out_dim", "components")

    def __init__(self, in_dim: int, out_dim: int, components: Sequence[Poly]):
        components = tuple(components)
        if len(components) != out_dim:
            raise WeilError("component count does not match output dimension")
        for p in components:
            if p.nvars != in_dim:
                raise WeilError("component variable count does not match input dimension")
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.components = components

    @classmethod
    def identity(cls, n: int) -> "PolyMap":
        return cls(n, n, [Poly.variable(n, i) for i in range(n)])

    @classmethod
    def linear(cls, rows: Sequence[Sequence[Scalar]]) -> "PolyMap":
        m = len(rows)
        n = len(rows[0])
        comps = []
        for row in rows:
            p = Poly.zero(n)
            for i, q in enumerate(row):
                p = p + Poly.variable(n, i) * _as_fraction(q)
            comps.append(p)
        return cls(n, m, comps)

    def degree(self) -> int:
        return max((p.total_degree() for p in self.components), default=0)

    def __eq__(self, other):
        return (
            isinstance(other, PolyMap)
            and (self.in_dim, self.out_dim, self.components)
            == (other.in_dim, other.out_dim, other.components)
        )

    def __repr__(self):
        return f"PolyMap({self.in_dim}->{self.out_dim})"


# -- expression trees -----------------------------------------------------------


class Expr:
    """Base class for closed-form scalar expressions in ``x1..xn``."""

    __slots__ = ()


@dataclass(frozen=True)
class Const(Expr):
    value: Fraction


@dataclass(frozen=True)
class Var(Expr):
    index: int


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class Power(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Sqrt(Expr):
    operand: Expr


def eval_expr(expr: Expr, coords: Sequence[WeilElement]) -> WeilElement:
    """Evaluate an expression tree at algebra elements (exactly)."""
    ctx = coords[0].context
    if isinstance(expr, Const):
        return ctx.scalar(expr.value)
    if isinstance(expr, Var):
        if not 0 <= expr.index < len(coords):
            raise DimensionMismatchError(f"variable x{expr.index + 1} out of range")
        return coords[expr.index]
    if isinstance(expr, Add):
        return eval_expr(expr.left, coords) + eval_expr(expr.right, coords)
    if isinstance(expr, Sub):
        return eval_expr(expr.left, coords) - eval_expr(expr.right, coords)
    if isinstance(expr, Mul):
        return eval_expr(expr.left, coords) * eval_expr(expr.right, coords)
    if isinstance(expr, Div):
        return eval_expr(expr.left, coords) * invert(eval_expr(expr.right, coords))
    if isinstance(expr, Neg):
        return -eval_expr(expr.operand, coords)
    if isinstance(expr, Power):
        return eval_expr(expr.base, coords) ** expr.exponent
    if isinstance(expr, Sqrt):
        return weil_sqrt(eval_expr(expr.operand, coords))
    raise WeilError(f"unknown expression node {type(expr).__name__}")


def expr_to_poly(expr: Expr, nvars: int) -> Optional[Poly]:
    """Convert to a polynomial, or None if the tree genuinely needs Div/Sqrt."""
    if isinstance(expr, Const):
        return Poly.constant(nvars, expr.value)
    if isinstance(expr, Var):
        return Poly.variable(nvars, expr.index)
    if isinstance(expr, (Add, Sub, Mul)):
        a = expr_to_poly(expr.left, nvars)
        b = expr_to_poly(expr.right, nvars)
        if a is None or b is None:
            return None
        return a + b if isinstance(expr, Add) else a - b if isinstance(expr, Sub) else a * b
    if isinstance(expr, Div):
        a = expr_to_poly(expr.left, nvars)
        b = expr_to_poly(expr.right, nvars)
        if a is None or b is None or not b.is_constant() or not b.constant_value():
            return None
        return a * (1 / b.constant_value())
    if isinstance(expr, Neg):
        a = expr_to_poly(expr.operand, nvars)
        return None if a is None else -a
    if isinstance(expr, Power):
        a = expr_to_poly(expr.base, nvars)
        return None if a is None else a**expr.exponent
    if isinstance(expr, Sqrt):
        return None
    raise WeilError(f"unknown expression node {type(expr).__name__}")


class ExprMap:
    """A closed-form map R^n -> R^m given by one expression tree per component."""

    __slots__ = ("in_dim", "out_dim", "components")

    def __init__(self, in_dim: int, out_dim: int, components: Sequence[Expr]):
        components = tuple(components)
        if len(components) != out_dim:
            raise WeilError("component count does not match output dimension")
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.components = components

    def __eq__(self, other):
        return (
            isinstance(other, ExprMap)
            and (self.in_dim, self.out_dim, self.components)
            == (other.in_dim, other.out_dim, other.components)
        )

    def __repr__(self):
        return f"ExprMap({self.in_dim}->{self.out_dim})"


AnyMap = Union[PolyMap, ExprMap]


def eval_map(f: AnyMap, P: PointVec) -> PointVec:
    """Apply a map to a point, exactly, inside the point's context."""
    if P.dim != f.in_dim:
        raise DimensionMismatchError(
            f"map expects dimension {f.in_dim}, point has dimension {P.dim}"
        )
    ctx = P.context
    if isinstance(f, PolyMap):
        cache: dict = {}
        coords = tuple(p.eval_weil(P.coords, cache) for p in f.components)
    elif isinstance(f, ExprMap):
        coords = tuple(eval_expr(e, P.coords) for e in f.components)
    else:
        raise WeilError(f"not a map: {type(f).__name__}")
    return PointVec(ctx, coords)


def compose(f: AnyMap, g: AnyMap):
    """The composite f∘g.  Polynomial composition stays a :class:`PolyMap`."""
    if f.in_dim != g.out_dim:
        raise DimensionMismatchError(
            f"cannot compose: inner map produces dim {g.out_dim}, outer expects {f.in_dim}"
        )
    if isinstance(f, PolyMap) and isinstance(g, PolyMap):
        comps = [p.substitute(list(g.components)) for p in f.components]
        return PolyMap(g.in_dim, f.out_dim, comps)
    return _ComposedMap(f, g)


class _ComposedMap:
    """Opaque composite used when either factor is closed-form."""

    __slots__ = ("outer", "inner", "in_dim", "out_dim")

    def __init__(self, outer: AnyMap, inner: AnyMap):
        self.outer = outer
        self.inner = inner
        self.in_dim = inner.in_dim
        self.out_dim = outer.out_dim


def _eval_any(f, P: PointVec) -> PointVec:
    if isinstance(f, _ComposedMap):
        return _eval_any(f.outer, _eval_any(f.inner, P))
    if callable(f) and not isinstance(f, (PolyMap, ExprMap)):
        return f(P)
    return eval_map(f, P)


class DerivativeTensor:
    """Order-l symmetric derivative data of a map at a base point.

    ``entry(i, idx)`` is the mixed partial of component ``i`` with respect to
    the (unordered) coordinate multi-index ``idx``, evaluated at the base.
    """

    __slots__ = ("order", "base", "in_dim", "out_dim", "_entries")

    def __init__(self, order: int, base: PointVec, in_dim: int, out_dim: int, entries: dict):
        self.order = order
        self.base = base
        self.in_dim = in_dim
        self.out_dim = out_dim
        self._entries = entries

    def entry(self, i: int, idx: Sequence[int]) -> WeilElement:
        return self._entries[(i, tuple(sorted(idx)))]

    def apply(self, vectors: Sequence[PointVec]) -> PointVec:
        """Contract against ``order`` many vectors (full symmetric contraction)."""
        if len(vectors) != self.order:
            raise WeilError(f"tensor of order {self.order} applied to {len(vectors)} vectors")
        for v in vectors:
            if v.dim != self.in_dim:
                raise DimensionMismatchError("vector dimension mismatch in contraction")
        ctx = vectors[0].context if vectors else self.base.context
        grid_products = {}
        for grid in itertools.product(range(self.in_dim), repeat=self.order):
            prod = None
            for v, a in zip(vectors, grid):
                prod = v[a] if prod is None else prod * v[a]
                if prod.is_zero():
                    break
            if prod is not None and not prod.is_zero():
                grid_products[grid] = prod
        coords = []
        for i in range(self.out_dim):
            acc = ctx.zero()
            for grid, prod in grid_products.items():
                acc = acc + self.entry(i, grid) * prod
            coords.append(acc)
        return PointVec(ctx, tuple(coords))

    def as_matrix(self) -> list:
        """Order-1 tensors as a Jacobian matrix (rows: outputs, cols: inputs)."""
        if self.order != 1:
            raise WeilError("as_matrix is only defined for first derivatives")
        return [
            [self.entry(i, (a,)) for a in range(self.in_dim)] for i in range(self.out_dim)
        ]


def derivative_tensor(f: PolyMap, Q: PointVec, order: int) -> DerivativeTensor:
    """Symbolic order-``order`` derivative tensor of a polynomial map at ``Q``."""
    if not isinstance(f, PolyMap):
        raise WeilError("symbolic derivatives need a PolyMap; use point_jet for closed forms")
    if Q.dim != f.in_dim:
        raise DimensionMismatchError("base point dimension mismatch")
    if order < 1:
        raise WeilError("derivative order must be at least 1")
    cache: dict = {}
    entries = {}
    for i, p in enumerate(f.components):
        for idx in itertools.combinations_with_replacement(range(f.in_dim), order):
            d = p
            for a in idx:
                d = d.diff(a)
            entries[(i, idx)] = d.eval_weil(Q.coords, cache)
    return DerivativeTensor(order, Q, f.in_dim, f.out_dim, entries)


def taylor_eval(f: PolyMap, Q: PointVec, d: PointVec, k: int) -> PointVec:
    """f(Q + d) computed as the order-k Taylor polynomial at Q.

    Exact whenever ``d`` is a k-th order infinitesimal (checked): the dropped
    terms contract k+1 or more coordinates of ``d`` and therefore vanish.
    """
    if k < 1:
        raise WeilError("Taylor order must be at least 1")
    if k > MAX_TAYLOR_ORDER:
        raise WeilError(f"Taylor order {k} exceeds the configured bound {MAX_TAYLOR_ORDER}")
    if not in_D_k(d, k):
        raise WeilError(f"displacement is not in D_{k}; Taylor truncation would be lossy")
    acc = eval_map(f, Q)
    for order in range(1, k + 1):
        tensor = derivative_tensor(f, Q, order)
        inc = tensor.apply([d] * order)
        scale = Fraction(1, math.factorial(order))
        acc = PointVec(acc.context, tuple(a + c * scale for a, c in zip(acc, inc)))
    return acc


def point_jet(f, base: Sequence[Scalar], in_dim: int, order: int):
    """Exact derivatives of any map at a rational point, by nilpotent evaluation.

    Evaluates ``f(base + d)`` with ``d`` a fresh cap-``order`` block and reads
    the Taylor coefficients off the normal form.  Returns ``(value, tensors)``
    where ``value`` is a tuple of Fractions and ``tensors[l]`` (l = 1..order)
    maps ``(i, sorted_multi_index)`` to the mixed partial as a Fraction.

    ``f`` may be a PolyMap, an ExprMap, a composite, or any callable on
    points.  Division/sqrt stay exact because the displacement is nilpotent.
    """
    ctx = make_truncated_context([("d", in_dim, order)])
    base = [_as_fraction(b) for b in base]
    if len(base) != in_dim:
        raise DimensionMismatchError("base point dimension mismatch")
    X = PointVec(ctx, tuple(ctx.scalar(b) + ctx.gen(a) for a, b in enumerate(base)))
    Y = _eval_any(f, X)
    value = tuple(y.constant_term for y in Y)
    tensors: dict = {l: {} for l in range(1, order + 1)}
    for i, y in enumerate(Y):
        for mono, c in y.coeffs.items():
            l = sum(mono)
            if not l:
                continue
            idx = []
            factor = 1
            for a, e in enumerate(mono):
                idx.extend([a] * e)
                factor *= math.factorial(e)
            tensors[l][(i, tuple(idx))] = c * factor
    # absent mixed partials are zero
    out_dim = len(value)
    for l in range(1, order + 1):
        for i in range(out_dim):
            for idx in itertools.combinations_with_replacement(range(in_dim), l):
                tensors[l].setdefault((i, idx), Fraction(0))
    return value, tensors
