from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from dirac_workbench.brackets import (
    OffSurfaceError,
    PhaseSpace,
    RationalMatrix,
    ReductionError,
    RewriteRules,
    SingularMatrixError,
    bracket_matrix,
    determinant,
    invert_matrix,
    poisson_bracket,
    rank_at_points,
    reduce,
    weakly_equal,
)
from dirac_workbench.expr import RationalExpr, SymbolTable, simple_table

TABLE = SymbolTable(
    [("x", "coordinate"), ("y", "coordinate"), ("lam", "multiplier"), ("px", "momentum"), ("py", "momentum"), ("plam", "multiplier-momentum"), ("r0", "parameter")],
    pairs={"px": "x", "py": "y", "plam": "lam"},
)
PS = PhaseSpace.from_table(TABLE)
E = TABLE.parse
PHI = [E("plam"), E("x^2+y^2-r0^2"), E("x*px+y*py"), E("px^2+py^2-2*(x^2+y^2)*lam")]
RULES = RewriteRules.from_pairs(TABLE, [(E("plam"), E("0")), (E("x^2+y^2"), E("r0^2"))])


def test_phase_space_from_table():
    assert PS.pairs == (("x", "px"), ("y", "py"), ("lam", "plam"))
    assert PS.parameters == ("r0",)


def test_phase_space_rejects_overlap():
    with pytest.raises(Exception):
        PhaseSpace(TABLE, (("x", "px"), ("x", "py")))


# -- Poisson bracket examples --------------------------------------------------


def test_canonical_pair():
    assert poisson_bracket(E("x"), E("px"), PS) == E("1")
    assert poisson_bracket(E("px"), E("x"), PS) == E("-1")
    assert poisson_bracket(E("x"), E("py"), PS).is_zero()
    assert poisson_bracket(E("r0"), E("x"), PS).is_zero()


def test_m_entry_two_r_squared():
    assert poisson_bracket(PHI[1], PHI[2], PS) == E("2*(x^2+y^2)")


def test_m_entry_momentum_block():
    assert poisson_bracket(PHI[2], PHI[3], PS) == E("2*(px^2+py^2)+4*lam*(x^2+y^2)")


# -- bracket matrix ------------------------------------------------------------


def test_circle_bracket_matrix():
    m = bracket_matrix(PHI, PS)
    assert m.is_antisymmetric()
    assert m[0, 3] == E("2*(x^2+y^2)")
    assert m[1, 2] == E("2*(x^2+y^2)")
    assert m[1, 3] == E("4*(x*px+y*py)")
    assert m[2, 3] == E("2*(px^2+py^2)+4*lam*(x^2+y^2)")
    for i, j in [(0, 1), (0, 2)]:
        assert m[i, j].is_zero()


def test_single_and_commuting_constraints():
    assert bracket_matrix([E("x")], PS)[0, 0].is_zero()
    m = bracket_matrix([E("x"), E("y")], PS)
    assert all(e.is_zero() for row in m.rows for e in row)


# -- rewrite rules -------------------------------------------------------------


def test_reduce_examples():
    assert reduce(E("x^2*px + y^2*px"), RULES) == E("r0^2*px")
    assert reduce(E("plam*(px^2+py^2)/2"), RULES).is_zero()
    empty = RewriteRules.empty(TABLE)
    e = E("x^2/(y+1)")
    assert reduce(e, empty) is e


def test_rule_orientation_checked():
    with pytest.raises(ReductionError):
        RewriteRules.from_pairs(TABLE, [(E("r0^2"), E("x^2+y^2"))])


def test_inconsistent_rules():
    with pytest.raises(ReductionError):
        RewriteRules(TABLE, [E("x - 1").num, E("x - 2").num])


def test_reduction_cap():
    rules = RewriteRules(TABLE, [E("x^2 - y").num], cap=1)
    with pytest.raises(ReductionError):
        reduce(E("x^64"), rules)


def test_weakly_equal():
    assert weakly_equal(E("1 - x^2/r0^2"), E("y^2/r0^2"), RULES)
    assert not weakly_equal(E("x"), E("y"), RULES)


def _poly_text(poly):
    return RationalExpr.from_poly(TABLE, poly).to_text().replace("^", "**")


def _sympy_basis(polys, gens):
    syms = sp.symbols(gens)
    env = dict(zip(gens, syms))
    exprs = [sp.sympify(p.replace("^", "**"), locals=env) for p in polys]
    return sp.groebner(exprs, *syms, order="grlex")


def test_completed_rules_match_reduced_groebner_basis():
    sources = ["plam", "x^2+y^2-r0^2", "x*px+y*py"]
    rules = RewriteRules(TABLE, [E(s).num for s in sources])
    gens = list(TABLE.names)
    ref = _sympy_basis(sources, gens)
    ours = sorted(str(sp.expand(sp.sympify(_poly_text(r.poly)))) for r in rules)
    theirs = sorted(str(sp.expand(g / sp.Poly(g, *sp.symbols(gens)).LC(order="grlex"))) for g in ref.exprs)
    assert ours == theirs
    assert len(rules) == 5


def test_reduction_independent_of_rule_order():
    a = RewriteRules(TABLE, [E(s).num for s in ["plam", "x^2+y^2-r0^2", "x*px+y*py"]])
    b = RewriteRules(TABLE, [E(s).num for s in ["x*px+y*py", "x^2+y^2-r0^2", "plam"]])
    e = E("x^3*px^2 + x*y*py*px + lam*x^2*y + plam*x")
    assert reduce(e, a) == reduce(e, b)


# -- inversion -----------------------------------------------------------------


def test_circle_inverse_matches_reference_entries():
    g = invert_matrix(bracket_matrix(PHI, PS), RULES)
    assert g[0, 3] == E("-1/(2*r0^2)")
    assert g[1, 2] == E("-1/(2*r0^2)")
    assert g[0, 1] == E("-(px^2+py^2+2*lam*r0^2)/(2*r0^4)")
    assert g[0, 2] == E("(x*px+y*py)/r0^4")
    assert g[1, 3].is_zero() and g[2, 3].is_zero()
    assert g.is_antisymmetric()


def test_circle_inverse_against_sympy():
    m = bracket_matrix(PHI, PS)
    g = invert_matrix(m, RULES)
    gens = list(TABLE.names)
    syms = dict(zip(gens, sp.symbols(gens)))
    sm = sp.Matrix([[sp.sympify(e.to_text().replace("^", "**"), locals=syms) for e in row] for row in m.rows])
    sinv = sm.inv()
    # compare at on-surface rational points
    for point in [
        {"x": 1, "y": 0, "lam": Fraction(1, 2), "px": 0, "py": 1, "plam": 0, "r0": 1},
        {"x": Fraction(3, 5), "y": Fraction(4, 5), "lam": Fraction(7, 3), "px": Fraction(-8, 5), "py": Fraction(6, 5), "plam": 0, "r0": 1},
        {"x": Fraction(5, 13) * 2, "y": Fraction(12, 13) * 2, "lam": -1, "px": Fraction(12, 13), "py": Fraction(-5, 13), "plam": 0, "r0": 2},
    ]:
        subs = {syms[k]: sp.Rational(Fraction(v).numerator, Fraction(v).denominator) for k, v in point.items()}
        for i in range(4):
            for j in range(4):
                assert g[i, j].evaluate(point) == Fraction(str(sinv[i, j].subs(subs)))


def test_inverse_identity_holds_modulo_rules():
    m = bracket_matrix(PHI, PS)
    g = invert_matrix(m, RULES)
    prod = m @ g
    for i in range(4):
        for j in range(4):
            assert reduce(prod[i, j] - (1 if i == j else 0), RULES).is_zero()


def test_inverse_trivial_cases():
    t = simple_table(["a"])
    ident = RationalMatrix.identity(t, 3)
    assert all(invert_matrix(ident)[i, j] == ident[i, j] for i in range(3) for j in range(3))
    a = t.parse("a")
    g = invert_matrix(RationalMatrix([[t.const(0), a], [-a, t.const(0)]]))
    assert g[0, 1] == t.parse("-1/a") and g[1, 0] == t.parse("1/a") and g[0, 0].is_zero()


def test_singular_after_reduction():
    with pytest.raises(SingularMatrixError):
        invert_matrix(bracket_matrix([E("x"), E("y")], PS))
    # nonsingular as a matrix but singular on the surface x^2+y^2 = r0^2
    m = RationalMatrix([[E("0"), E("x^2+y^2-r0^2")], [E("r0^2-x^2-y^2"), E("0")]])
    with pytest.raises(SingularMatrixError):
        invert_matrix(m, RULES)
    invert_matrix(m)


def test_determinant():
    m = bracket_matrix(PHI, PS)
    assert determinant(m, RULES) == E("16*r0^8")
    t = simple_table(["a", "b", "c", "d"])
    assert determinant(RationalMatrix([[t.parse("a"), t.parse("b")], [t.parse("c"), t.parse("d")]])) == t.parse("a*d-b*c")


# -- rank ----------------------------------------------------------------------


def test_rank_at_points():
    m = bracket_matrix(PHI, PS)
    point = {"x": 1, "y": 0, "px": 0, "py": 1, "lam": Fraction(1, 2), "plam": 0, "r0": 1}
    assert rank_at_points(m, [point], PHI) == 4
    zero = bracket_matrix([E("x"), E("y")], PS)
    assert rank_at_points(zero, [point]) == 0
    t = simple_table(["a"])
    a = t.parse("a")
    assert rank_at_points(RationalMatrix([[t.const(0), a], [-a, t.const(0)]]), [{"a": 3}]) == 2


def test_rank_rejects_off_surface_point():
    m = bracket_matrix(PHI, PS)
    with pytest.raises(OffSurfaceError):
        rank_at_points(m, [{"x": 1, "y": 1, "px": 0, "py": 1, "lam": 0, "plam": 0, "r0": 1}], PHI)


def test_rank_rejects_denominator_zero():
    t = simple_table(["a"])
    with pytest.raises(OffSurfaceError):
        rank_at_points(RationalMatrix([[t.parse("1/a")]]), [{"a": 0}])


# -- bracket axioms on random polynomials -----------------------------------------

VARS = ["x", "y", "px", "py"]


@st.composite
def phase_polys(draw):
    terms = []
    for _ in range(draw(st.integers(1, 3))):
        c = draw(st.integers(-3, 3).filter(bool))
        mono = "*".join(f"{v}^{draw(st.integers(0, 2))}" for v in VARS)
        terms.append(f"({c})*{mono}")
    return E(" + ".join(terms))


@settings(max_examples=100, deadline=None)
@given(phase_polys(), phase_polys())
def test_antisymmetry(a, b):
    assert poisson_bracket(a, b, PS) == -poisson_bracket(b, a, PS)


@settings(max_examples=100, deadline=None)
@given(phase_polys(), phase_polys(), phase_polys())
def test_leibniz(a, b, c):
    assert poisson_bracket(a * b, c, PS) == a * poisson_bracket(b, c, PS) + poisson_bracket(a, c, PS) * b


@settings(max_examples=100, deadline=None)
@given(phase_polys(), phase_polys(), phase_polys())
def test_jacobi(a, b, c):
    pb = lambda u, v: poisson_bracket(u, v, PS)  # noqa: E731
    assert (pb(pb(a, b), c) + pb(pb(b, c), a) + pb(pb(c, a), b)).is_zero()


@settings(max_examples=50, deadline=None)
@given(phase_polys())
def test_reduce_idempotent(a):
    r = reduce(a, RULES)
    assert reduce(r, RULES) == r
