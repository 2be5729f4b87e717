"""Dirac's constraint algorithm for singular Lagrangians.

The pipeline is :func:`legendre_analyze` (momenta, Hessian, primary
constraints, canonical Hamiltonian), :func:`consistency_chain` (secondary
constraints, multiplier solutions, classification, ``M`` and ``G``), then
:func:`dirac_bracket` on the resulting :class:`DiracStructure`.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .brackets import (
    BracketError,
    PhaseSpace,
    RationalMatrix,
    RewriteRules,
    SingularMatrixError,
    bracket_matrix,
    determinant,
    invert_matrix,
    poisson_bracket,
    rank_at_points,
    reduce,
)
from .expr import ExprError, RationalExpr


class DiracError(ExprError):
    pass


class UnsupportedSingularStructure(DiracError):
    pass


class InconsistentChainError(DiracError):
    pass


class ChainLimitError(DiracError):
    pass


class FirstClassError(DiracError):
    pass


@dataclass
class Constraint:
    expression: RationalExpr
    origin: str  # "primary" | "secondary"
    generation: int
    klass: str = "unknown"  # "first" | "second" | "unknown"

    def __post_init__(self):
        if self.expression.is_zero():
            raise DiracError("a constraint cannot be identically zero")
        if (self.origin == "primary") != (self.generation == 0):
            raise DiracError("primary constraints, and only those, have generation 0")


@dataclass
class LegendreResult:
    hamiltonian: RationalExpr
    primaries: list
    momenta: dict
    hessian_determinant: RationalExpr
    singular: bool


@dataclass
class DiracStructure:
    phase_space: PhaseSpace
    hamiltonian: RationalExpr
    total_terms: list
    constraints: list
    multipliers: dict
    multipliers_reduced: dict
    free_multipliers: list
    M: RationalMatrix | None
    G: RationalMatrix | None
    rules: RewriteRules
    surface_rules: RewriteRules
    rank: int = 0
    first_class_directions: bool = False
    identities: list = field(default_factory=list)

    @property
    def table(self):
        return self.phase_space.table

    @property
    def all_second_class(self):
        return not self.first_class_directions and all(c.klass == "second" for c in self.constraints)

    def expressions(self):
        return [c.expression for c in self.constraints]

    def total_hamiltonian(self):
        h = self.hamiltonian
        for u, phi in self.total_terms:
            h = h + self.table.symbol(u) * phi
        return h

    def weakly_zero(self, e):
        return reduce(e, self.surface_rules).is_zero()

    def bracket(self, a, b):
        return dirac_bracket(a, b, self)


def _momentum_sign_key(mono, momentum_idx):
    return (sum(mono[i] for i in momentum_idx), sum(mono), mono)


def normalize_constraint(e: RationalExpr) -> RationalExpr:
    """Numerator only, integer content removed, sign fixed.

    The sign is chosen so the term of highest momentum degree (ties broken by
    graded-lex order) has a positive coefficient.
    """
    table = e.table
    num = e.num
    num = num.scale(1 / num.content())
    momentum_idx = [table.index[n] for n in table.of_kind("momentum", "multiplier-momentum")]
    lead = max(num.terms, key=lambda m: _momentum_sign_key(m, momentum_idx))
    if num.terms[lead] < 0:
        num = -num
    return RationalExpr.from_poly(table, num)


def _velocity_degree(e, vidx):
    if any(any(m[i] for i in vidx) for m in e.den.terms):
        return None
    return max((sum(m[i] for i in vidx) for m in e.num.terms), default=0)


def legendre_analyze(model) -> LegendreResult:
    """Momenta, Hessian test, primary constraints and canonical Hamiltonian."""
    table = model.table
    L = model.lagrangian
    velocities = list(table.velocities.items())  # (velocity, coordinate)
    vidx = [table.index[v] for v, _ in velocities]
    degree = _velocity_degree(L, vidx)
    if degree is None or degree > 2:
        raise UnsupportedSingularStructure("Lagrangian must be a polynomial of degree <= 2 in the velocities")
    conj = {q: p for p, q in table.pairs.items()}

    momenta = {}
    for v, q in velocities:
        momenta[conj[q]] = L.diff(v)

    hessian = RationalMatrix([[L.diff(v).diff(w) for w, _ in velocities] for v, _ in velocities])
    det = determinant(hessian)

    present = [(v, q) for v, q in velocities if table.index[v] in L.num.variables()]
    absent = [(v, q) for v, q in velocities if (v, q) not in present]
    primaries = [
        Constraint(normalize_constraint(table.symbol(conj[q])), "primary", 0) for _, q in absent
    ]

    zero_v = {v: 0 for v, _ in velocities}
    solution = {}
    if present:
        w = RationalMatrix([[L.diff(v).diff(u) for u, _ in present] for v, _ in present])
        try:
            winv = invert_matrix(w)
        except SingularMatrixError as exc:
            raise UnsupportedSingularStructure(
                "velocity Hessian is singular in directions not spanned by absent velocities"
            ) from exc
        rhs = [table.symbol(conj[q]) - momenta[conj[q]].substitute(zero_v) for _, q in present]
        for i, (v, _) in enumerate(present):
            acc = table.const(0)
            for j in range(len(present)):
                if not winv[i, j].is_zero():
                    acc = acc + winv[i, j] * rhs[j]
            solution[v] = acc
    for v, _ in absent:
        solution[v] = table.const(0)

    h = -L
    for v, q in present:
        h = h + table.symbol(conj[q]) * table.symbol(v)
    h = h.substitute(solution)
    leftover = [n for n in h.free_symbols() if table.kinds[n] == "velocity"]
    if leftover:
        raise UnsupportedSingularStructure(f"velocities {leftover} could not be eliminated")
    return LegendreResult(h, primaries, momenta, det, det.is_zero())


def _chain_rules(table, constraints):
    return RewriteRules.from_constraints(table, [c.expression for c in constraints])


def _is_scalar_multiple(a, b):
    if b.is_zero():
        return False
    return (a / b).is_constant()


def consistency_chain(model, max_generations=10, legendre=None) -> DiracStructure:
    """Run the consistency algorithm to a fixpoint and build ``M``, ``G``."""
    table = model.table
    ps = PhaseSpace.from_table(table)
    if legendre is None:
        legendre = legendre_analyze(model)
    H = legendre.hamiltonian
    constraints = list(legendre.primaries)
    us = table.of_kind("arbitrary")
    if len(us) < len(constraints):
        raise DiracError("not enough multiplier-function symbols for the primary constraints")
    total_terms = [(us[k], c.expression) for k, c in enumerate(constraints)]
    HT = H
    for u, phi in total_terms:
        HT = HT + table.symbol(u) * phi
    active_us = [u for u, _ in total_terms]

    solved, solved_reduced = {}, {}
    identities = []
    queue = deque(range(len(constraints)))
    rules = _chain_rules(table, constraints)
    rules_size = len(constraints)

    while queue:
        idx = queue.popleft()
        parent = constraints[idx]
        if len(constraints) != rules_size:
            rules = _chain_rules(table, constraints)
            rules_size = len(constraints)
        e = poisson_bracket(parent.expression, HT, ps)
        if solved:
            e = e.substitute(solved)
        r = reduce(e, rules)
        if r.is_zero():
            identities.append(idx)
            continue
        free_us = [u for u in active_us if u not in solved and u in r.free_symbols()]
        target = None
        for u in free_us:
            i = table.index[u]
            if r.den.degree(i) > 0 or r.num.degree(i) > 1:
                raise UnsupportedSingularStructure(f"consistency condition is not linear in {u}")
            coef = reduce(r.diff(u), rules)
            if not coef.is_zero() and target is None:
                target = (u, coef)
        if target is not None:
            u, coef = target
            solved_reduced[u] = reduce(-r.substitute({u: 0}) / coef, rules)
            iu = table.index[u]
            raw_coef = e.diff(u)
            if e.num.degree(iu) == 1 and e.den.degree(iu) <= 0 and not raw_coef.is_zero():
                solved[u] = -e.substitute({u: 0}) / raw_coef
            else:
                solved[u] = solved_reduced[u]
            continue
        u_free = r.substitute({u: 0 for u in free_us}) if free_us else r
        if free_us:
            u_free = reduce(u_free, rules)
            if u_free.is_zero():
                identities.append(idx)
                continue
        if u_free.is_constant():
            raise InconsistentChainError(
                f"consistency of constraint {idx + 1} requires the nonzero constant {u_free} to vanish"
            )
        raw = e if not any(u in e.free_symbols() for u in active_us) else u_free
        candidate = normalize_constraint(raw)
        reduced_candidate = reduce(candidate, rules)
        if any(_is_scalar_multiple(reduced_candidate, reduce(c.expression, rules)) for c in constraints):
            identities.append(idx)
            continue
        generation = parent.generation + 1
        if generation > max_generations:
            raise ChainLimitError(f"constraint chain exceeded {max_generations} generations")
        constraints.append(Constraint(candidate, "secondary", generation))
        queue.append(len(constraints) - 1)

    return finalize_structure(model, ps, H, total_terms, constraints, solved, solved_reduced, active_us, identities)


def finalize_structure(model, ps, H, total_terms, constraints, solved, solved_reduced, active_us, identities):
    table = model.table
    exprs = [c.expression for c in constraints]
    derived = RewriteRules.from_constraints(table, exprs)
    declared = model.declared_rules
    rules = declared if declared is not None else derived
    surface_rules = rules.merged(derived.polys())
    free = [u for u in active_us if u not in solved]

    M = G = None
    rank = 0
    first_class_dirs = False
    if constraints:
        M = bracket_matrix(exprs, ps)
        reduced_m = M.reduced(surface_rules)
        zero_rows = [i for i, row in enumerate(reduced_m.rows) if all(e.is_zero() for e in row)]
        rank = rank_at_points(M, model.sample_points, exprs) if model.sample_points else 0
        for i, c in enumerate(constraints):
            c.klass = "first" if i in zero_rows else "second"
        if rank < len(constraints) or zero_rows:
            first_class_dirs = True
            if not zero_rows:
                for c in constraints:
                    c.klass = "unknown"
        else:
            G = invert_matrix(M, rules)
            check = (M @ G)
            for i in range(M.dim):
                for j in range(M.dim):
                    residual = check[i, j] - (1 if i == j else 0)
                    if not reduce(residual, rules).is_zero():
                        raise BracketError("M G != I modulo the rewrite rules")
    return DiracStructure(
        phase_space=ps,
        hamiltonian=H,
        total_terms=total_terms,
        constraints=constraints,
        multipliers=solved,
        multipliers_reduced=solved_reduced,
        free_multipliers=free,
        M=M,
        G=G,
        rules=rules,
        surface_rules=surface_rules,
        rank=rank,
        first_class_directions=first_class_dirs,
        identities=identities,
    )


def dirac_bracket(a: RationalExpr, b: RationalExpr, s: DiracStructure) -> RationalExpr:
    """``[a, b]_D = [a, b] - sum_ij [a, phi_i] G_ij [phi_j, b]``, reduced."""
    ps = s.phase_space
    total = poisson_bracket(a, b, ps)
    if s.constraints:
        if s.G is None:
            raise FirstClassError("Dirac bracket requires all constraints to be second class")
        exprs = s.expressions()
        left = [reduce(poisson_bracket(a, phi, ps), s.rules) for phi in exprs]
        right = [reduce(poisson_bracket(phi, b, ps), s.rules) for phi in exprs]
        n = len(exprs)
        for i in range(n):
            if left[i].is_zero():
                continue
            for j in range(n):
                g = s.G[i, j]
                if g.is_zero() or right[j].is_zero():
                    continue
                total = total - left[i] * g * right[j]
    return reduce(total, s.rules)


def reduced_hamiltonian(s: DiracStructure) -> RationalExpr:
    """Canonical Hamiltonian with ``u phi`` terms dropped and rules applied."""
    return reduce(s.hamiltonian, s.rules)


def verify_strong_zero(s: DiracStructure, quantities) -> dict:
    """Check ``[A, phi_i]_D ~ 0`` for every quantity and constraint."""
    names = [q if isinstance(q, str) else None for q in quantities]
    exprs = [s.table.parse(q) if isinstance(q, str) else q for q in quantities]
    checked, violations = 0, []
    for name, a in zip(names, exprs):
        for k, c in enumerate(s.constraints):
            value = dirac_bracket(a, c.expression, s)
            checked += 1
            if not s.weakly_zero(value):
                violations.append(
                    {"quantity": name or a.to_text(), "constraint": k + 1, "value": value.to_text()}
                )
    return {"checked": checked, "violations": violations, "ok": not violations}


def bracket_table(s: DiracStructure) -> dict:
    """Dirac brackets of all pairs of phase-space symbols (upper triangle)."""
    syms = s.phase_space.symbols()
    order = sorted(syms, key=s.table.index.get)
    table = {}
    for i, a in enumerate(order):
        for b in order[i + 1:]:
            value = dirac_bracket(s.table.symbol(a), s.table.symbol(b), s)
            table[f"[{a},{b}]"] = value
    return table


def analyze(model, max_generations=10) -> DiracStructure:
    return consistency_chain(model, max_generations=max_generations)
