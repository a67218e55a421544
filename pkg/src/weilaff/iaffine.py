"""Infinitesimally-affine combinations and the checkers for their axioms.

Three ways of averaging a tuple of mutual k-th order neighbors with affine
weights (sum 1) are implemented, each as a plain function and as an action
handle with a uniform interface:

* canonical    -- the plain weighted sum, which already lands back in the
                  neighborhood (the flat action);
* connection   -- second order only: weighted sum plus the curvature
                  correction  1/2 * (G[s-P1]^2 - sum_j w_j G[Pj-P1]^2)
                  with G the connection's bilinear map at the first point;
* retract      -- combine upstairs through an embedding/retraction pair:
                  r(sum_j w_j iota(Pj)).

The ``check_*`` functions verify the action axioms (membership of inputs,
membership of outputs, associativity of iterated combination, projection on
basis weights), the parallelogram characterization of the induced action,
the chart-transformation law for connection pullback, and the derivative
identities of an idempotent.  All equalities are exact normal-form equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from .weil import (
    PointVec,
    Scalar,
    WeilContext,
    WeilElement,
    WeilError,
    _as_fraction,
    make_truncated_context,
    mat_inverse,
)
from .polymap import (
    AnyMap,
    DimensionMismatchError,
    Poly,
    PolyMap,
    derivative_tensor,
    eval_map,
    point_jet,
)
from .neighborhoods import (
    Witness,
    find_A_k_violation,
    in_A_k,
)
from .report import CheckReport


class MembershipError(WeilError):
    """A combine was attempted on a tuple outside the required neighborhood."""

    def __init__(self, message: str, witness: Optional[Witness] = None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class AffineWeights:
    """A tuple of rational weights summing to exactly 1."""

    values: tuple

    def __post_init__(self):
        vals = tuple(_as_fraction(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if sum(vals, Fraction(0)) != 1:
            raise WeilError(f"affine weights must sum to 1, got {sum(vals, Fraction(0))}")

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]


def _as_weights(w) -> AffineWeights:
    return w if isinstance(w, AffineWeights) else AffineWeights(tuple(w))


def basis_weights(n: int, k: int) -> AffineWeights:
    """The k-th standard basis weight tuple (picks out the k-th point)."""
    if not 0 <= k < n:
        raise WeilError("basis index out of range")
    return AffineWeights(tuple(Fraction(int(i == k)) for i in range(n)))


def weighted_point_sum(weights: AffineWeights, points: Sequence[PointVec]) -> PointVec:
    weights = _as_weights(weights)
    if len(weights) != len(points):
        raise WeilError(
            f"{len(weights)} weights applied to {len(points)} points"
        )
    if not points:
        raise WeilError("cannot combine an empty tuple")
    acc = weights[0] * points[0]
    for lam, P in zip(weights.values[1:], list(points)[1:]):
        acc = acc + lam * P
    return acc


def _difference_witness(A: PointVec, B: PointVec, location: str) -> Optional[Witness]:
    """Witness for A != B: the first coordinate where they differ."""
    for i, (a, b) in enumerate(zip(A, B)):
        d = a - b
        if not d.is_zero():
            mono, coeff = d.leading_witness()
            return Witness(f"{location}[{i + 1}]", mono, coeff)
    return None


# -- canonical action ------------------------------------------------------------


def canonical_combine(
    weights, points: Sequence[PointVec], k: int, check: bool = True
) -> PointVec:
    """Weighted sum of a k-th order i-tuple (membership checked by default)."""
    weights = _as_weights(weights)
    if check:
        w = find_A_k_violation(points, k)
        if w is not None:
            raise MembershipError(f"tuple is not a {k}-th order i-tuple", w)
    return weighted_point_sum(weights, points)


# -- connections -------------------------------------------------------------------


class BilinearMap:
    """A symmetric bilinear map R^n x R^n -> R^n with element entries.

    ``entries`` maps (i, (a, b)) with a <= b to the coefficient of
    u[a] v[b] (+ u[b] v[a] for a < b) in component i.
    """

    __slots__ = ("dim", "entries")

    def __init__(self, dim: int, entries: dict):
        self.dim = dim
        self.entries = {}
        for (i, (a, b)), e in entries.items():
            key = (i, (a, b) if a <= b else (b, a))
            self.entries[key] = e

    def entry(self, i: int, a: int, b: int):
        return self.entries.get((i, (a, b) if a <= b else (b, a)))

    def apply(self, u: PointVec, v: PointVec) -> PointVec:
        if u.dim != self.dim or v.dim != self.dim:
            raise DimensionMismatchError("bilinear map applied to wrong dimension")
        ctx = u.context
        prods = {}
        for a in range(self.dim):
            if u[a].is_zero():
                continue
            for b in range(self.dim):
                p = u[a] * v[b]
                if not p.is_zero():
                    prods[(a, b)] = p
        coords = []
        for i in range(self.dim):
            acc = ctx.zero()
            for (a, b), p in prods.items():
                e = self.entry(i, a, b)
                if e is not None and not e.is_zero():
                    acc = acc + e * p
            coords.append(acc)
        return PointVec(ctx, tuple(coords))


class Connection:
    """Christoffel data: for each component i a symmetric family of
    polynomial coefficients gamma[i][a,b] in the base coordinates."""

    __slots__ = ("dim", "entries")

    def __init__(self, dim: int, entries=None):
        self.dim = dim
        self.entries = {}
        for (i, a, b), poly in (entries or {}).items():
            if not 0 <= i < dim or not 0 <= a < dim or not 0 <= b < dim:
                raise WeilError("connection index out of range")
            if isinstance(poly, (int, Fraction)):
                poly = Poly.constant(dim, poly)
            if poly.nvars != dim:
                raise WeilError("connection coefficient over wrong variable count")
            key = (i, a, b) if a <= b else (i, b, a)
            existing = self.entries.get(key)
            self.entries[key] = poly if existing is None else existing + poly
        self.entries = {k: p for k, p in self.entries.items() if not p.is_zero()}

    @classmethod
    def zero(cls, dim: int) -> "Connection":
        return cls(dim, {})

    def gamma(self, i: int, a: int, b: int) -> Poly:
        key = (i, a, b) if a <= b else (i, b, a)
        return self.entries.get(key, Poly.zero(self.dim))

    def at(self, P: PointVec) -> BilinearMap:
        """Evaluate the Christoffel polynomials at a point of any context."""
        if P.dim != self.dim:
            raise DimensionMismatchError("connection evaluated at wrong dimension")
        cache: dict = {}
        out = {}
        for (i, a, b), poly in self.entries.items():
            out[(i, (a, b))] = poly.eval_weil(P.coords, cache)
        return BilinearMap(self.dim, out)

    def __eq__(self, other):
        return (
            isinstance(other, Connection)
            and self.dim == other.dim
            and self.entries == other.entries
        )

    def __repr__(self):
        return f"Connection(dim={self.dim}, {len(self.entries)} nonzero coefficients)"


def connection_apply(
    c: Connection, P: PointVec, Q: PointVec, S: PointVec, check: bool = True
) -> PointVec:
    """Parallelogram completion Q + S - P + G_P[Q-P, S-P] for first-order Q, S."""
    if check:
        for label, X in (("Q", Q), ("S", S)):
            w = find_A_k_violation([P, X], 1)
            if w is not None:
                raise MembershipError(f"{label} is not a first-order neighbor of P", w)
    G = c.at(P)
    return Q + S - P + G.apply(Q - P, S - P)


def _combine_with_bilinear(G: BilinearMap, weights: AffineWeights, points) -> PointVec:
    s = weighted_point_sum(weights, points)
    P1 = points[0]
    corr = G.apply(s - P1, s - P1)
    for lam, Pj in zip(weights.values, points):
        if lam:
            corr = corr - lam * G.apply(Pj - P1, Pj - P1)
    return s + Fraction(1, 2) * corr


def connection_combine(
    c: Connection, weights, points: Sequence[PointVec], check: bool = True
) -> PointVec:
    """Second-order combine induced by a connection:

    sum_j w_j Pj + 1/2 * (G[s-P1]^2 - sum_j w_j G[Pj-P1]^2),  G = c.at(P1).
    """
    weights = _as_weights(weights)
    points = list(points)
    if check:
        w = find_A_k_violation(points, 2)
        if w is not None:
            raise MembershipError("tuple is not a second-order i-tuple", w)
    return _combine_with_bilinear(c.at(points[0]), weights, points)


def pullback_connection(c: Connection, iota: PolyMap, P: PointVec) -> BilinearMap:
    """The chart-side bilinear map at P induced by c through iota.

    Solves the transformation law
        G_{iota(P)}[d iota u, d iota v] = d iota (Gt_P[u, v]) + d^2 iota [u, v]
    for Gt, i.e.  Gt = J^{-1} (G[J u, J v] - H[u, v]) entrywise; needs the
    Jacobian J of iota at P to be invertible (a chart change, so square).
    """
    if not isinstance(iota, PolyMap):
        raise WeilError("pullback needs a polynomial chart map")
    if iota.in_dim != iota.out_dim or iota.out_dim != c.dim:
        raise WeilError("pullback needs a square chart map matching the connection")
    n = c.dim
    ctx = P.context
    J = derivative_tensor(iota, P, 1)
    Jmat = J.as_matrix()
    Jinv = mat_inverse(Jmat)
    H = derivative_tensor(iota, P, 2)
    G = c.at(eval_map(iota, P))
    out = {}
    for a in range(n):
        Ja = PointVec(ctx, tuple(Jmat[i][a] for i in range(n)))
        for b in range(a, n):
            Jb = PointVec(ctx, tuple(Jmat[i][b] for i in range(n)))
            target = G.apply(Ja, Jb)
            target = PointVec(
                ctx, tuple(t - H.entry(i, (a, b)) for i, t in enumerate(target))
            )
            for i in range(n):
                acc = ctx.zero()
                for j in range(n):
                    acc = acc + Jinv[i][j] * target[j]
                out[(i, (a, b))] = acc
    return BilinearMap(n, out)


# -- retracts ------------------------------------------------------------------------


class RetractPair:
    """An embedding/retraction pair (iota, r) with r∘iota the identity on the
    chart, inducing the idempotent e = iota∘r on the ambient space.

    ``from_idempotent(e)`` encodes a bare idempotent as the pair
    (identity, e); the chart then coincides with the ambient space and the
    combine below reduces to e(sum_j w_j Pj).
    """

    __slots__ = ("iota", "retraction", "chart_dim", "ambient_dim")

    def __init__(self, iota: AnyMap, retraction: AnyMap):
        if iota.out_dim != retraction.in_dim or retraction.out_dim != iota.in_dim:
            raise WeilError(
                "iota and retraction dimensions do not line up "
                f"({iota.in_dim}->{iota.out_dim} vs {retraction.in_dim}->{retraction.out_dim})"
            )
        self.iota = iota
        self.retraction = retraction
        self.chart_dim = iota.in_dim
        self.ambient_dim = iota.out_dim

    @classmethod
    def from_idempotent(cls, e: AnyMap) -> "RetractPair":
        if e.in_dim != e.out_dim:
            raise WeilError("an idempotent must map a space to itself")
        return cls(PolyMap.identity(e.in_dim), e)

    def embed(self, P: PointVec) -> PointVec:
        return eval_map(self.iota, P)

    def retract(self, X: PointVec) -> PointVec:
        return eval_map(self.retraction, X)

    def idempotent_eval(self, X: PointVec) -> PointVec:
        """e(X) = iota(r(X)) on the ambient space."""
        return self.embed(self.retract(X))

    def project_chart(self, P: PointVec) -> PointVec:
        """r(iota(P)): the chart-side normalization (identity when r∘iota = id)."""
        return self.retract(self.embed(P))

    def polynomial_idempotent(self) -> Optional[PolyMap]:
        from .polymap import compose

        if isinstance(self.iota, PolyMap) and isinstance(self.retraction, PolyMap):
            return compose(self.iota, self.retraction)
        return None


def _retract_membership_violation(rp: RetractPair, points) -> Optional[Witness]:
    imgs = [rp.embed(P) for P in points]
    for j, img in enumerate(imgs):
        w = _difference_witness(
            rp.idempotent_eval(img), img, f"e(iota(P{j + 1})) - iota(P{j + 1})"
        )
        if w is not None:
            return w
    return find_A_k_violation(imgs, 2)


def retract_combine(
    rp: RetractPair, weights, points: Sequence[PointVec], check: bool = True
) -> PointVec:
    """Combine through the ambient space: r(sum_j w_j iota(Pj)).

    Requires the embedded tuple to be a second-order i-tuple of e-fixed
    points; both conditions are verified exactly unless ``check=False``.
    """
    weights = _as_weights(weights)
    points = list(points)
    if check:
        w = _retract_membership_violation(rp, points)
        if w is not None:
            raise MembershipError("tuple does not lie second-order on the retract", w)
    imgs = [rp.embed(P) for P in points]
    return rp.retract(weighted_point_sum(weights, imgs))


# -- action handles --------------------------------------------------------------------


class CanonicalAction:
    """Handle for the flat weighted-sum action on k-th order i-tuples."""

    kind = "canonical"

    def __init__(self, dim: int, order: int):
        if order < 1:
            raise WeilError("order must be at least 1")
        self.dim = dim
        self.order = order

    def membership_violation(self, points) -> Optional[Witness]:
        return find_A_k_violation(points, self.order)

    def combine(self, weights, points, check: bool = True) -> PointVec:
        return canonical_combine(weights, points, self.order, check=check)

    def canonicalize_point(self, X: PointVec) -> PointVec:
        return X


class ConnectionAction:
    """Handle for the second-order action induced by a connection."""

    kind = "connection"
    order = 2

    def __init__(self, connection: Connection):
        self.connection = connection
        self.dim = connection.dim

    def membership_violation(self, points) -> Optional[Witness]:
        return find_A_k_violation(points, 2)

    def combine(self, weights, points, check: bool = True) -> PointVec:
        return connection_combine(self.connection, weights, points, check=check)

    def canonicalize_point(self, X: PointVec) -> PointVec:
        return X


class RetractAction:
    """Handle for the second-order action induced by an embedding/retraction."""

    kind = "retract"
    order = 2

    def __init__(self, pair: RetractPair):
        self.pair = pair
        self.dim = pair.chart_dim

    def membership_violation(self, points) -> Optional[Witness]:
        return _retract_membership_violation(self.pair, points)

    def combine(self, weights, points, check: bool = True) -> PointVec:
        return retract_combine(self.pair, weights, points, check=check)

    def canonicalize_point(self, X: PointVec) -> PointVec:
        return self.pair.project_chart(X)


ActionHandle = Union[CanonicalAction, ConnectionAction, RetractAction]


# -- axiom checkers ----------------------------------------------------------------------


def check_axioms(
    handle: ActionHandle,
    points: Sequence[PointVec],
    weight_families: Sequence,
    outer=None,
    name_prefix: str = "axioms",
) -> CheckReport:
    """Verify the i-affine action axioms on a concrete tuple.

    Entries: membership of the input tuple; membership of the combined tuple
    (one combine per weight family); associativity of the iterated combine
    against the flattened weights (when ``outer`` is given, one weight per
    family); projection of every basis weight tuple onto its point.
    """
    points = list(points)
    families = [_as_weights(w) for w in weight_families]
    for w in families:
        if len(w) != len(points):
            raise WeilError("every weight family must have one weight per point")
    if outer is not None:
        outer = _as_weights(outer)
        if len(outer) != len(families):
            raise WeilError("outer weights must have one weight per family")
    report = CheckReport()
    report.run(
        f"{name_prefix}/membership",
        "membership",
        lambda: handle.membership_violation(points),
    )

    combined: list = []

    def neighbourhood():
        combined.clear()
        combined.extend(handle.combine(w, points, check=False) for w in families)
        return handle.membership_violation(combined)

    report.run(f"{name_prefix}/neighbourhood", "neighbourhood", neighbourhood)

    if outer is not None:

        def associativity():
            nested = handle.combine(outer, combined, check=False)
            flat = [
                sum((mu * w[j] for mu, w in zip(outer.values, families)), Fraction(0))
                for j in range(len(points))
            ]
            direct = handle.combine(AffineWeights(tuple(flat)), points, check=False)
            return _difference_witness(nested, direct, "nested - flattened combine")

        report.run(f"{name_prefix}/associativity", "associativity", associativity)

    def projection():
        for j in range(len(points)):
            got = handle.combine(basis_weights(len(points), j), points, check=False)
            w = _difference_witness(got, points[j], f"combine(e_{j + 1}) - P{j + 1}")
            if w is not None:
                return w
        return None

    report.run(f"{name_prefix}/projection", "projection", projection)
    return report


def induced_connection_check(
    handle: ActionHandle, base=None, name_prefix: str = "induced"
) -> CheckReport:
    """Verify that weights (-1, 1, 1) acting on (P, Q, S) behave like the
    parallelogram completion on generic first-order neighbors.

    Builds P, Q = P + u, S = P + v over fresh cap-1 blocks (pushed onto the
    retract when the handle needs it), then checks the unit laws, exchange
    symmetry, membership of the triple, and -- for connection handles --
    agreement with ``connection_apply``.
    """
    if handle.order < 2:
        raise WeilError("the parallelogram action needs a second-order handle")
    n = handle.dim
    if base is None:
        base = [0] * n
    base = [_as_fraction(b) for b in base]
    if len(base) != n:
        raise WeilError("base point dimension mismatch")
    ctx = make_truncated_context([("u", n, 1), ("v", n, 1)])
    B = ctx.point(base)
    U = PointVec(ctx, tuple(ctx.gen(a) for a in range(n)))
    V = PointVec(ctx, tuple(ctx.gen(n + a) for a in range(n)))
    P = handle.canonicalize_point(B)
    Q = handle.canonicalize_point(B + U)
    S = handle.canonicalize_point(B + V)
    w = AffineWeights((Fraction(-1), Fraction(1), Fraction(1)))
    report = CheckReport()
    report.run(
        f"{name_prefix}/triple-membership",
        "membership",
        lambda: handle.membership_violation([P, Q, S]),
    )
    report.run(
        f"{name_prefix}/left-identity",
        "identity",
        lambda: _difference_witness(
            handle.combine(w, [P, Q, P]), Q, "combine(-1,1,1)(P,Q,P) - Q"
        ),
    )
    report.run(
        f"{name_prefix}/right-identity",
        "identity",
        lambda: _difference_witness(
            handle.combine(w, [P, P, S]), S, "combine(-1,1,1)(P,P,S) - S"
        ),
    )
    report.run(
        f"{name_prefix}/exchange-symmetry",
        "symmetry",
        lambda: _difference_witness(
            handle.combine(w, [P, Q, S]),
            handle.combine(w, [P, S, Q]),
            "combine(P,Q,S) - combine(P,S,Q)",
        ),
    )
    if isinstance(handle, ConnectionAction):
        report.run(
            f"{name_prefix}/parallelogram-consistency",
            "consistency",
            lambda: _difference_witness(
                handle.combine(w, [P, Q, S]),
                connection_apply(handle.connection, P, Q, S, check=False),
                "combine - parallelogram",
            ),
        )
    return report


def check_pullback_lemma(
    c: Connection,
    iota: PolyMap,
    points: Sequence[PointVec],
    weight_families: Sequence,
    name_prefix: str = "pullback",
) -> CheckReport:
    """Verify that combining with the pulled-back connection downstairs and
    mapping through iota equals mapping first and combining upstairs."""
    points = list(points)
    families = [_as_weights(w) for w in weight_families]
    report = CheckReport()
    report.run(
        f"{name_prefix}/membership",
        "membership",
        lambda: find_A_k_violation(points, 2),
    )
    Gt = pullback_connection(c, iota, points[0])
    imgs = [eval_map(iota, P) for P in points]
    G = c.at(imgs[0])
    for idx, w in enumerate(families):
        report.run(
            f"{name_prefix}/transport[{idx + 1}]",
            "transport",
            lambda w=w: _difference_witness(
                eval_map(iota, _combine_with_bilinear(Gt, w, points)),
                _combine_with_bilinear(G, w, imgs),
                "iota(combine~) - combine(iota)",
            ),
        )
    return report


def check_idempotent_identities(
    rp: RetractPair, base, name_prefix: str = "idempotent"
) -> CheckReport:
    """Verify the derivative identities of e = iota∘r at a rational ambient
    fixed point P:

    * e(P) = P;
    * the Jacobian is a projection: De·De = De;
    * differentiating e∘e = e twice:  D2e[De·, De·] + De·D2e[·,·] = D2e[·,·];
    * tangential kill: De(D2e[u, u]) = 0 for u = e(P+d) - e(P), d generic
      second-order (and trivially for first-order d).
    """
    n = rp.ambient_dim
    base = [_as_fraction(b) for b in base]
    if len(base) != n:
        raise WeilError("base point dimension mismatch")
    value, tensors = point_jet(rp.idempotent_eval, base, n, 2)
    Jac = [[tensors[1][(i, (a,))] for a in range(n)] for i in range(n)]

    def hess(i: int, a: int, b: int) -> Fraction:
        return tensors[2][(i, (a, b) if a <= b else (b, a))]

    report = CheckReport()

    def fixed_point():
        for i in range(n):
            d = value[i] - base[i]
            if d:
                return Witness(f"(e(P) - P)[{i + 1}]", "1", d)
        return None

    report.run(f"{name_prefix}/fixed-point", "fixed-point", fixed_point)

    def jacobian_idempotent():
        for i in range(n):
            for a in range(n):
                got = sum(Jac[i][p] * Jac[p][a] for p in range(n))
                if got != Jac[i][a]:
                    return Witness(f"(De·De - De)[{i + 1},{a + 1}]", "1", got - Jac[i][a])
        return None

    report.run(f"{name_prefix}/jacobian-idempotent", "derivative", jacobian_idempotent)

    def hessian_splitting():
        # second derivative of e∘e = e at the fixed point
        for i in range(n):
            for a in range(n):
                for b in range(a, n):
                    first = sum(
                        hess(i, p, q) * Jac[p][a] * Jac[q][b]
                        for p in range(n)
                        for q in range(n)
                    )
                    second = sum(Jac[i][p] * hess(p, a, b) for p in range(n))
                    if first + second != hess(i, a, b):
                        return Witness(
                            f"(D2e[De,De] + De·D2e - D2e)[{i + 1},{a + 1},{b + 1}]",
                            "1",
                            first + second - hess(i, a, b),
                        )
        return None

    report.run(f"{name_prefix}/hessian-splitting", "derivative", hessian_splitting)

    def tangential_kill():
        ctx = make_truncated_context([("d", n, 2)])
        B = ctx.point(base)
        X = PointVec(ctx, tuple(ctx.scalar(q) + ctx.gen(a) for a, q in enumerate(base)))
        u = rp.idempotent_eval(X) - rp.idempotent_eval(B)
        hu = []
        for p in range(n):
            acc = ctx.zero()
            for a in range(n):
                if u[a].is_zero():
                    continue
                for b in range(n):
                    q = hess(p, a, b)
                    if q:
                        acc = acc + (u[a] * u[b]) * q
            hu.append(acc)
        for i in range(n):
            acc = ctx.zero()
            for p in range(n):
                acc = acc + hu[p] * Jac[i][p]
            if not acc.is_zero():
                mono, coeff = acc.leading_witness()
                return Witness(f"De(D2e[u,u])[{i + 1}]", mono, coeff)
        return None

    report.run(f"{name_prefix}/tangential-kill", "derivative", tangential_kill)

    def first_order_kill():
        ctx = make_truncated_context([("d", n, 1)])
        d = PointVec(ctx, tuple(ctx.gen(a) for a in range(n)))
        for i in range(n):
            acc = ctx.zero()
            for p in range(n):
                inner = ctx.zero()
                for a in range(n):
                    for b in range(n):
                        q = hess(p, a, b)
                        if q:
                            inner = inner + (d[a] * d[b]) * q
                acc = acc + inner * Jac[i][p]
            if not acc.is_zero():
                mono, coeff = acc.leading_witness()
                return Witness(f"De(D2e[d,d])[{i + 1}]", mono, coeff)
        return None

    report.run(f"{name_prefix}/first-order-kill", "derivative", first_order_kill)
    return report
