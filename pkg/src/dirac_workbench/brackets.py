"""Poisson brackets, symbolic matrices and reduction modulo constraints."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .expr import ExprError, Poly, RationalExpr, ZeroDenominatorError, grlex_key


class BracketError(ExprError):
    pass


class SingularMatrixError(BracketError):
    """Matrix has no inverse after reduction (first-class directions present)."""


class ReductionError(BracketError):
    pass


class OffSurfaceError(BracketError):
    pass


# ---------------------------------------------------------------------------
# Phase space


@dataclass(frozen=True)
class PhaseSpace:
    """Canonical pairs ``(q, p)`` over a symbol table, with parameter names."""

    table: object
    pairs: tuple
    parameters: tuple = ()

    def __post_init__(self):
        seen = set()
        for q, p in self.pairs:
            for s in (q, p):
                if s not in self.table:
                    raise BracketError(f"phase-space symbol {s!r} is not in the symbol table")
                if s in seen:
                    raise BracketError(f"symbol {s!r} appears in more than one canonical pair")
                seen.add(s)

    @classmethod
    def from_table(cls, table):
        pairs = []
        for q in table.of_kind("coordinate", "multiplier"):
            for p, qq in table.pairs.items():
                if qq == q:
                    pairs.append((q, p))
        return cls(table, tuple(pairs), tuple(table.of_kind("parameter")))

    @property
    def coordinates(self):
        return [q for q, _ in self.pairs]

    @property
    def momenta(self):
        return [p for _, p in self.pairs]

    def symbols(self):
        return [s for pair in self.pairs for s in pair]


def _depends(e, i):
    return any(m[i] for m in e.num.terms) or any(m[i] for m in e.den.terms)


def poisson_bracket(a: RationalExpr, b: RationalExpr, ps: PhaseSpace) -> RationalExpr:
    """``[a, b] = sum_i da/dq_i db/dp_i - da/dp_i db/dq_i``."""
    table = ps.table
    total = RationalExpr.constant(table, 0)
    if a.is_constant() or b.is_constant():
        return total
    for q, p in ps.pairs:
        iq, ip = table.index[q], table.index[p]
        if _depends(a, iq) and _depends(b, ip):
            total = total + a.diff(q) * b.diff(p)
        if _depends(a, ip) and _depends(b, iq):
            total = total - a.diff(p) * b.diff(q)
    return total


# ---------------------------------------------------------------------------
# Rewrite rules


@dataclass(frozen=True)
class Rule:
    """``lead -> lead - poly`` for a monic ``poly`` whose leading monomial is ``lead``."""

    lead: tuple
    poly: Poly


def _monic(poly):
    return poly.scale(1 / poly.lead()[1])


def _divides(a, b):
    return all(x <= y for x, y in zip(a, b))


def _normal_form(poly, rules):
    """Full multivariate division remainder of ``poly`` by ``rules``."""
    if not rules or not poly:
        return poly
    rest = dict(poly.terms)
    remainder = {}
    while rest:
        m = max(rest, key=grlex_key)
        c = rest[m]
        for rule in rules:
            if _divides(rule.lead, m):
                shift = tuple(a - b for a, b in zip(m, rule.lead))
                for rm, rc in rule.poly.terms.items():
                    t = tuple(a + b for a, b in zip(rm, shift))
                    v = rest.get(t, 0) - c * rc
                    if v:
                        rest[t] = v
                    else:
                        rest.pop(t, None)
                break
        else:
            remainder[m] = c
            del rest[m]
    return Poly(remainder, poly.nvars)


def _s_poly(f, g):
    lf, lg = f.lead()[0], g.lead()[0]
    lcm = tuple(max(a, b) for a, b in zip(lf, lg))
    sf = tuple(a - b for a, b in zip(lcm, lf))
    sg = tuple(a - b for a, b in zip(lcm, lg))
    return f.mul_term(sf, Fraction(1)) - g.mul_term(sg, Fraction(1))


class RewriteRules:
    """Ordered rewrite system ``leading monomial -> lower-order rest``.

    Rules are stored as monic polynomials; reducing an expression divides its
    numerator and denominator by them. ``complete=True`` (the default) closes
    the rule set under S-polynomials so reduction is order independent.
    """

    def __init__(self, table, polys=(), cap=32, complete=True, max_rules=64):
        self.table = table
        self.cap = cap
        polys = [p for p in polys if p]
        for p in polys:
            if p.is_constant():
                raise ReductionError("a rewrite rule reduces a nonzero constant to zero")
        if complete:
            polys = _complete(polys, max_rules)
        self.rules = tuple(Rule(p.lead()[0], p) for p in (_monic(q) for q in polys))

    @classmethod
    def empty(cls, table):
        return cls(table, ())

    @classmethod
    def from_pairs(cls, table, pairs, **kwargs):
        """Build from ``(target, replacement)`` expressions.

        The leading monomial of ``target - replacement`` must come from the
        target, so each rule strictly lowers the term order.
        """
        polys = []
        for target, replacement in pairs:
            if not (target.is_polynomial() and replacement.is_polynomial()):
                raise ReductionError("rewrite rules must be polynomial")
            source = (target - replacement).num
            if not source:
                raise ReductionError(f"rule {target} -> {replacement} is trivial")
            lead = source.lead()[0]
            if lead not in target.num.terms:
                raise ReductionError(
                    f"rule {target} -> {replacement} does not reduce under graded-lex order"
                )
            polys.append(source)
        return cls(table, polys, **kwargs)

    @classmethod
    def from_constraints(cls, table, constraints, **kwargs):
        """Rules derivable from constraints with a unit leading coefficient."""
        polys = [p for p in (derivable_rule(c) for c in constraints) if p is not None]
        return cls(table, polys, **kwargs)

    def __len__(self):
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def polys(self):
        return [r.poly for r in self.rules]

    def merged(self, other_polys):
        return RewriteRules(self.table, self.polys() + list(other_polys), cap=self.cap)

    def reduce_poly(self, poly):
        for _ in range(self.cap):
            reduced = _normal_form(poly, self.rules)
            if reduced == poly:
                return reduced
            poly = reduced
        raise ReductionError(f"reduction did not reach a fixpoint within {self.cap} passes")

    def pairs_text(self):
        out = []
        names = self.table.names
        for r in self.rules:
            lead = RationalExpr.from_poly(self.table, Poly({r.lead: Fraction(1)}, len(names)))
            rest = RationalExpr.from_poly(self.table, Poly({r.lead: Fraction(1)}, len(names)) - r.poly)
            out.append({"target": lead.to_text(), "replacement": rest.to_text()})
        return out


def derivable_rule(constraint):
    """Polynomial source for an automatic rule, or ``None``.

    Accepts ``symbol - rest`` and ``monomial - rest`` forms, i.e. constraints
    whose leading coefficient is +-1 once integer content is removed.
    """
    num = constraint.num
    if not num or num.is_constant():
        return None
    num = num.scale(1 / num.content())
    if abs(num.lead()[1]) != 1:
        return None
    return num


def _complete(polys, max_rules):
    basis = [_monic(p) for p in polys]
    pairs = [(i, j) for j in range(len(basis)) for i in range(j)]
    while pairs:
        i, j = pairs.pop(0)
        f, g = basis[i], basis[j]
        lf, lg = f.lead()[0], g.lead()[0]
        if all(a == 0 or b == 0 for a, b in zip(lf, lg)):
            continue
        r = _normal_form(_s_poly(f, g), [Rule(b.lead()[0], b) for b in basis])
        if r:
            if r.is_constant():
                raise ReductionError("constraint rules are inconsistent (ideal contains 1)")
            basis.append(_monic(r))
            if len(basis) > max_rules:
                raise ReductionError(f"rule completion exceeded {max_rules} rules")
            k = len(basis) - 1
            pairs.extend((a, k) for a in range(k))
    # inter-reduce: drop redundant leads, then reduce tails
    minimal = []
    for k, p in enumerate(basis):
        lp = p.lead()[0]
        redundant = False
        for kk, q in enumerate(basis):
            if kk == k:
                continue
            lq = q.lead()[0]
            if _divides(lq, lp) and (lq != lp or kk < k):
                redundant = True
                break
        if not redundant:
            minimal.append(p)
    reduced = []
    for k, p in enumerate(minimal):
        others = [Rule(q.lead()[0], q) for kk, q in enumerate(minimal) if kk != k]
        lead_term = Poly({p.lead()[0]: Fraction(1)}, p.nvars)
        reduced.append(lead_term + _normal_form(p - lead_term, others))
    reduced.sort(key=lambda p: grlex_key(p.lead()[0]))
    return reduced


def reduce(e: RationalExpr, rules: RewriteRules) -> RationalExpr:
    """Normal form of numerator and denominator modulo ``rules``."""
    if not rules.rules:
        return e
    num = rules.reduce_poly(e.num)
    if not num:
        return RationalExpr.constant(e.table, 0)
    den = rules.reduce_poly(e.den)
    if not den:
        raise ZeroDenominatorError(f"denominator of {e} vanishes on the constraint surface")
    return RationalExpr(e.table, num, den)


def weakly_equal(a, b, rules):
    return reduce(a - b, rules).is_zero()


# ---------------------------------------------------------------------------
# Matrices


@dataclass
class RationalMatrix:
    """Square matrix of :class:`RationalExpr` entries."""

    rows: list = field(default_factory=list)

    def __post_init__(self):
        n = len(self.rows)
        if n < 1:
            raise BracketError("matrix dimension must be at least 1")
        if any(len(r) != n for r in self.rows):
            raise BracketError("matrix must be square")

    @property
    def dim(self):
        return len(self.rows)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __matmul__(self, other):
        n = self.dim
        table = self.rows[0][0].table
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = RationalExpr.constant(table, 0)
                for k in range(n):
                    a, b = self.rows[i][k], other.rows[k][j]
                    if not a.is_zero() and not b.is_zero():
                        acc = acc + a * b
                row.append(acc)
            out.append(row)
        return RationalMatrix(out)

    def map(self, fn):
        return RationalMatrix([[fn(e) for e in row] for row in self.rows])

    def reduced(self, rules):
        return self.map(lambda e: reduce(e, rules))

    def is_antisymmetric(self):
        n = self.dim
        return all(self.rows[i][j] == -self.rows[j][i] for i in range(n) for j in range(n))

    def evaluate(self, point):
        return [[e.evaluate(point) for e in row] for row in self.rows]

    def to_text(self):
        return [[e.to_text() for e in row] for row in self.rows]

    @classmethod
    def identity(cls, table, n):
        return cls([[RationalExpr.constant(table, 1 if i == j else 0) for j in range(n)] for i in range(n)])


def bracket_matrix(constraints, ps: PhaseSpace) -> RationalMatrix:
    """``M_ij = [phi_i, phi_j]``, filled from the upper triangle."""
    n = len(constraints)
    if n < 1:
        raise BracketError("at least one constraint is required")
    zero = RationalExpr.constant(ps.table, 0)
    rows = [[zero] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            v = poisson_bracket(constraints[i], constraints[j], ps)
            rows[i][j] = v
            rows[j][i] = -v
    return RationalMatrix(rows)


def invert_matrix(m: RationalMatrix, rules: RewriteRules | None = None) -> RationalMatrix:
    """Inverse by fraction-free (Bareiss) Gauss-Jordan elimination.

    Every entry is reduced modulo ``rules`` after each pivot step, so the
    result is an inverse on the constraint surface.
    """
    n = m.dim
    table = m.rows[0][0].table
    if rules is None:
        rules = RewriteRules.empty(table)
    one = RationalExpr.constant(table, 1)
    zero = RationalExpr.constant(table, 0)
    a = [
        [reduce(e, rules) for e in row] + [one if i == j else zero for j in range(n)]
        for i, row in enumerate(m.rows)
    ]
    prev = one
    for k in range(n):
        pivot_row = next((r for r in range(k, n) if not a[r][k].is_zero()), None)
        if pivot_row is None:
            raise SingularMatrixError(f"no nonzero pivot in column {k + 1} after reduction")
        if pivot_row != k:
            a[k], a[pivot_row] = a[pivot_row], a[k]
        pivot = a[k][k]
        for i in range(n):
            if i == k:
                continue
            aik = a[i][k]
            row = a[i]
            for j in range(2 * n):
                if j == k:
                    row[j] = zero
                    continue
                t = pivot * row[j]
                if not aik.is_zero() and not a[k][j].is_zero():
                    t = t - aik * a[k][j]
                row[j] = reduce(t / prev, rules) if not t.is_zero() else zero
        prev = pivot
    inv = []
    for i in range(n):
        d = a[i][i]
        inv.append([reduce(a[i][n + j] / d, rules) for j in range(n)])
    return RationalMatrix(inv)


def determinant(m: RationalMatrix, rules: RewriteRules | None = None) -> RationalExpr:
    """Bareiss determinant (reduced modulo ``rules`` when given)."""
    n = m.dim
    table = m.rows[0][0].table
    if rules is None:
        rules = RewriteRules.empty(table)
    a = [[reduce(e, rules) for e in row] for row in m.rows]
    sign = 1
    prev = RationalExpr.constant(table, 1)
    for k in range(n - 1):
        pivot_row = next((r for r in range(k, n) if not a[r][k].is_zero()), None)
        if pivot_row is None:
            return RationalExpr.constant(table, 0)
        if pivot_row != k:
            a[k], a[pivot_row] = a[pivot_row], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = reduce((a[k][k] * a[i][j] - a[i][k] * a[k][j]) / prev, rules)
        prev = a[k][k]
    return reduce(a[n - 1][n - 1] * sign, rules)


def exact_rank(rows):
    """Rank of a matrix of Fractions by Gaussian elimination."""
    a = [list(map(Fraction, r)) for r in rows]
    if not a:
        return 0
    rank = 0
    ncols = len(a[0])
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(a)) if a[r][col] != 0), None)
        if pivot is None:
            continue
        a[rank], a[pivot] = a[pivot], a[rank]
        for r in range(len(a)):
            if r != rank and a[r][col] != 0:
                f = a[r][col] / a[rank][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[rank])]
        rank += 1
    return rank


def check_on_surface(point, constraints):
    for k, c in enumerate(constraints):
        try:
            value = c.evaluate(point)
        except ZeroDenominatorError as exc:
            raise OffSurfaceError(f"constraint {k + 1} has a vanishing denominator at {point}") from exc
        if value != 0:
            raise OffSurfaceError(f"point {point} violates constraint {k + 1}: {c} = {value}")


def rank_at_points(m: RationalMatrix, points, constraints=()) -> int:
    """Maximum exact rank of ``m`` over on-surface sample points."""
    best = 0
    for point in points:
        check_on_surface(point, constraints)
        try:
            values = m.evaluate(point)
        except ZeroDenominatorError as exc:
            raise OffSurfaceError(f"matrix entry has a vanishing denominator at {point}") from exc
        best = max(best, exact_rank(values))
    return best
