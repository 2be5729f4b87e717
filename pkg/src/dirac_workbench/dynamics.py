"""Equations of motion from Dirac brackets, integrators and trajectory metrics."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .brackets import PhaseSpace, poisson_bracket, reduce
from .dirac import DiracError, dirac_bracket, reduced_hamiltonian


class IntegrationError(RuntimeError):
    pass


class ProjectionError(IntegrationError):
    pass


class OffSurfaceState(ValueError):
    pass


# ---------------------------------------------------------------------------
# Lowering expressions to float code


def _poly_code(poly, names, powers):
    if not poly.terms:
        return "0.0"
    parts = []
    for mono, c in poly.sorted_terms():
        factors = [repr(float(c))]
        for i, e in enumerate(mono):
            if e == 1:
                factors.append(names[i])
            elif e > 1:
                key = (i, e)
                powers.setdefault(key, f"_{names[i]}_{e}")
                factors.append(powers[key])
        parts.append("*".join(factors))
    return " + ".join(parts)


def compile_expressions(exprs, variables, constants=None):
    """Compile expressions into ``f(*variables) -> tuple`` of floats.

    Exact parameter values in ``constants`` are substituted first, so the
    generated code only sees numeric literals. Integer powers shared across
    the outputs are computed once. The function also works elementwise on
    numpy arrays.
    """
    constants = constants or {}
    lowered = [e.substitute(constants) if constants else e for e in exprs]
    table = lowered[0].table if lowered else None
    names = list(table.names) if table else []
    allowed = set(variables)
    for e in lowered:
        extra = set(e.free_symbols()) - allowed
        if extra:
            raise DiracError(f"expression {e} depends on unbound symbols {sorted(extra)}")
    powers = {}
    bodies = []
    for e in lowered:
        num = _poly_code(e.num, names, powers)
        if e.den.is_constant():
            bodies.append(f"({num}) / {float(e.den.constant_value())!r}")
        else:
            bodies.append(f"({num}) / ({_poly_code(e.den, names, powers)})")
    lines = [f"def _f({', '.join(variables)}):"]
    for (i, e), var in sorted(powers.items()):
        lines.append(f"    {var} = {names[i]}**{e}")
    lines.append(f"    return ({', '.join(bodies)}{',' if len(bodies) == 1 else ''})")
    namespace = {}
    exec(compile("\n".join(lines), "<eom>", "exec"), namespace)
    fn = namespace["_f"]
    fn.source = "\n".join(lines)
    return fn


# ---------------------------------------------------------------------------
# EOM system


@dataclass
class EOMSystem:
    variables: list
    derivatives: list  # RationalExpr per variable
    parameters: dict
    rhs: object
    hamiltonian: object
    diagnostics: dict  # name -> RationalExpr
    diagnostic_fn: object = None

    def __call__(self, state):
        return self.rhs(*state)

    def evaluate_diagnostics(self, states):
        cols = [states[:, k] for k in range(states.shape[1])]
        with np.errstate(over="ignore", invalid="ignore"):
            values = self.diagnostic_fn(*cols)
        return {name: np.asarray(v, dtype=float) * np.ones(states.shape[0]) for name, v in zip(self.diagnostics, values)}


def state_variables(table):
    coords = table.of_kind("coordinate")
    conj = {q: p for p, q in table.pairs.items()}
    return coords + [conj[q] for q in coords]


def _diagnostic_exprs(s, variables, hamiltonian):
    table = s.table
    allowed = set(variables) | set(table.of_kind("parameter"))
    diags = {}
    for k, c in enumerate(s.constraints):
        if set(c.expression.free_symbols()) <= allowed:
            diags[f"phi{k + 1}"] = c.expression
    diags["H"] = hamiltonian
    if all(n in table for n in ("x", "y", "px", "py")):
        diags["Lz"] = table.parse("x*py - y*px")
    return diags


def generate_eom(s, parameters) -> EOMSystem:
    """Time derivatives ``z' = [z, H]_D`` for the non-multiplier phase variables."""
    table = s.table
    variables = state_variables(table)
    H = reduced_hamiltonian(s)
    derivs = [dirac_bracket(table.symbol(z), H, s) for z in variables]
    consts = {k: Fraction(v) for k, v in parameters.items()}
    rhs = compile_expressions(derivs, variables, consts)
    diags = _diagnostic_exprs(s, variables, H)
    diag_fn = compile_expressions(list(diags.values()), variables, consts)
    return EOMSystem(variables, derivs, dict(parameters), rhs, H, diags, diag_fn)


def free_eom(s, parameters) -> EOMSystem:
    """Unconstrained flow of the Hamiltonian with multipliers set to zero."""
    table = s.table
    variables = state_variables(table)
    ps = PhaseSpace.from_table(table)
    H = s.hamiltonian.substitute({m: 0 for m in table.of_kind("multiplier", "multiplier-momentum")})
    derivs = [poisson_bracket(table.symbol(z), H, ps) for z in variables]
    consts = {k: Fraction(v) for k, v in parameters.items()}
    rhs = compile_expressions(derivs, variables, consts)
    diags = _diagnostic_exprs(s, variables, reduce(H, s.rules))
    diag_fn = compile_expressions(list(diags.values()), variables, consts)
    return EOMSystem(variables, derivs, dict(parameters), rhs, H, diags, diag_fn)


# ---------------------------------------------------------------------------
# Trajectories


@dataclass
class Trajectory:
    t0: float
    h: float
    steps: int
    variables: list
    states: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    method: str = ""

    def __post_init__(self):
        if self.states.shape[0] != self.steps + 1:
            raise ValueError("state array length must be steps + 1")
        for name, col in self.diagnostics.items():
            if len(col) != self.steps + 1:
                raise ValueError(f"diagnostic {name!r} has the wrong length")

    @property
    def times(self):
        return self.t0 + self.h * np.arange(self.steps + 1)

    @property
    def final(self):
        return {k: float(v) for k, v in zip(self.variables, self.states[-1])}

    def column(self, name):
        if name in self.variables:
            return self.states[:, self.variables.index(name)]
        return self.diagnostics[name]

    def header(self):
        return ["t"] + list(self.variables) + list(self.diagnostics)

    def to_csv(self, fh=None):
        """Write ``t, state..., diagnostics...`` rows with 17 significant digits."""
        own = fh is None
        if own:
            fh = io.StringIO()
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(self.header())
        cols = [self.times] + [self.states[:, k] for k in range(len(self.variables))]
        cols += [np.asarray(v) for v in self.diagnostics.values()]
        for row in zip(*cols):
            writer.writerow([f"{v:.17g}" for v in row])
        if own:
            return fh.getvalue()


def _initial_vector(variables, initial):
    if isinstance(initial, dict):
        missing = [v for v in variables if v not in initial]
        if missing:
            raise ValueError(f"initial state is missing {missing}")
        return [float(Fraction(initial[v]) if isinstance(initial[v], str) else initial[v]) for v in variables]
    vec = [float(v) for v in initial]
    if len(vec) != len(variables):
        raise ValueError(f"initial state needs {len(variables)} components")
    return vec


def check_initial(sys, state, tol=1e-12):
    """Reject states off the constraint surface by more than ``tol`` (relative)."""
    big = max(1.0, max(abs(v) for v in state))
    scale = big * big
    diag = sys.evaluate_diagnostics(np.array([state]))
    for name, col in diag.items():
        if name.startswith("phi") and abs(col[0]) > tol * scale:
            raise OffSurfaceState(f"initial state violates {name} by {col[0]:.3e}")


def _validate_step(h, steps):
    if not isinstance(steps, (int, np.integer)) or steps < 0:
        raise ValueError("steps must be a non-negative integer")
    if not math.isfinite(h) or h <= 0:
        raise ValueError("time step h must be finite and positive")


def _rk4_step(f, y, h):
    try:
        return _rk4_stages(f, y, h)
    except (OverflowError, ZeroDivisionError) as exc:
        raise IntegrationError(f"floating-point failure in the right-hand side: {exc}") from exc


def _rk4_stages(f, y, h):
    k1 = f(*y)
    k2 = f(*[a + 0.5 * h * b for a, b in zip(y, k1)])
    k3 = f(*[a + 0.5 * h * b for a, b in zip(y, k2)])
    k4 = f(*[a + h * b for a, b in zip(y, k3)])
    return [a + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4) for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)]


def integrate_rk4(sys: EOMSystem, initial, h, steps, t0=0.0, check=True) -> Trajectory:
    """Classical fourth-order Runge-Kutta on the Dirac equations of motion."""
    _validate_step(h, steps)
    y = _initial_vector(sys.variables, initial)
    if check:
        check_initial(sys, y)
    out = [y]
    f = sys.rhs
    for n in range(steps):
        y = _rk4_step(f, y, h)
        if not all(math.isfinite(v) for v in y):
            raise IntegrationError(f"non-finite state at step {n + 1}")
        out.append(y)
    states = np.array(out)
    return Trajectory(t0, h, steps, list(sys.variables), states, sys.evaluate_diagnostics(states), "dirac-rk4")


def sphere_radius(s, parameters):
    """Radius and coordinate names of a configuration constraint ``|q|^2 - R^2``."""
    table = s.table
    coords = table.of_kind("coordinate")
    consts = {k: Fraction(v) for k, v in parameters.items()}
    for c in s.constraints:
        e = c.expression.substitute(consts)
        syms = e.free_symbols()
        if not syms or not set(syms) <= set(coords):
            continue
        r2 = -e.substitute({q: 0 for q in coords})
        expected = sum((table.symbol(q) ** 2 for q in syms), table.const(0)) - r2
        if e == expected and r2.is_constant() and r2.constant_value() > 0:
            return math.sqrt(r2.constant_value()), syms
    raise ProjectionError("model has no sphere-like configuration constraint |q|^2 - R^2")


def integrate_project(s, parameters, initial, h, steps, t0=0.0) -> Trajectory:
    """Free step of the unconstrained Hamiltonian, then project onto the circle.

    Positions are rescaled radially to ``|q| = R``; momenta lose their
    component along ``q``.
    """
    _validate_step(h, steps)
    free = free_eom(s, parameters)
    radius, qnames = sphere_radius(s, parameters)
    variables = free.variables
    conj = {q: p for p, q in s.table.pairs.items()}
    qi = [variables.index(q) for q in qnames]
    pi = [variables.index(conj[q]) for q in qnames]
    y = _initial_vector(variables, initial)
    if all(y[i] == 0.0 for i in qi):
        raise ProjectionError("projection undefined at |q| = 0")
    check_initial(free, y)
    out = [y]
    for n in range(steps):
        y = _rk4_step(free.rhs, y, h)
        q = [y[i] for i in qi]
        norm = math.sqrt(sum(v * v for v in q))
        if norm == 0.0:
            raise ProjectionError("projection undefined at |q| = 0")
        qhat = [v / norm for v in q]
        for i, u in zip(qi, qhat):
            y[i] = radius * u
        radial = sum(y[i] * u for i, u in zip(pi, qhat))
        for i, u in zip(pi, qhat):
            y[i] -= radial * u
        if not all(math.isfinite(v) for v in y):
            raise IntegrationError(f"non-finite state at step {n + 1}")
        out.append(y)
    states = np.array(out)
    return Trajectory(t0, h, steps, list(variables), states, free.evaluate_diagnostics(states), "project")


def exact_circle(initial, times, r0=1.0, mass=1.0, tol=1e-12) -> Trajectory:
    """Uniform rotation ``theta(t) = theta0 + Lz t / (m r0^2)`` on the circle.

    ``times`` is either an array of equally spaced times or ``(t0, h, steps)``.
    """
    if isinstance(initial, dict):
        x, y, px, py = (float(Fraction(initial[k]) if isinstance(initial[k], str) else initial[k]) for k in ("x", "y", "px", "py"))
    else:
        x, y, px, py = map(float, initial)
    scale = max(1.0, abs(x), abs(y), abs(px), abs(py)) ** 2
    if abs(x * x + y * y - r0 * r0) > tol * scale or abs(x * px + y * py) > tol * scale:
        raise OffSurfaceState("initial state is not on the circle constraint surface")
    if isinstance(times, tuple):
        t0, h, steps = times
    else:
        times = np.asarray(times, dtype=float)
        steps = len(times) - 1
        t0 = float(times[0])
        h = float(times[1] - times[0]) if steps else 0.0
    t = t0 + h * np.arange(steps + 1) - t0
    lz = x * py - y * px
    theta = math.atan2(y, x) + lz / (mass * r0 * r0) * t
    c, s_ = np.cos(theta), np.sin(theta)
    states = np.column_stack([r0 * c, r0 * s_, -(lz / r0) * s_, (lz / r0) * c])
    diags = {
        "phi2": states[:, 0] ** 2 + states[:, 1] ** 2 - r0 * r0,
        "phi3": states[:, 0] * states[:, 2] + states[:, 1] * states[:, 3],
        "H": 0.5 * (states[:, 2] ** 2 + states[:, 3] ** 2) / mass,
        "Lz": states[:, 0] * states[:, 3] - states[:, 1] * states[:, 2],
    }
    return Trajectory(t0, h, steps, ["x", "y", "px", "py"], states, diags, "exact")


# ---------------------------------------------------------------------------
# Metrics


def _relative_drift(col):
    ref = col[0]
    scale = abs(ref) if ref else 1.0
    return float(np.max(np.abs(col - ref)) / scale)


def compare(a: Trajectory, b: Trajectory) -> dict:
    """Error of ``a`` against reference ``b`` plus ``a``'s conservation drifts."""
    if a.steps != b.steps or not np.allclose(a.times, b.times, rtol=0, atol=1e-12 * max(1.0, abs(a.h) * a.steps)):
        raise ValueError("trajectories are on different time grids")
    if a.variables != b.variables:
        raise ValueError("trajectories have different state variables")
    err = np.abs(a.states - b.states)
    metrics = {
        "max_state_error": float(err.max()) if err.size else 0.0,
        "final_state_error": float(err[-1].max()) if err.size else 0.0,
        "constraint_drift": 0.0,
        "energy_drift": 0.0,
        "lz_drift": 0.0,
    }
    drifts = [float(np.max(np.abs(v))) for k, v in a.diagnostics.items() if k.startswith("phi")]
    metrics["constraint_drift"] = max(drifts) if drifts else 0.0
    if "H" in a.diagnostics:
        metrics["energy_drift"] = _relative_drift(a.diagnostics["H"])
    if "Lz" in a.diagnostics:
        metrics["lz_drift"] = _relative_drift(a.diagnostics["Lz"])
    return metrics


def observed_orders(errors, ratio=2.0):
    """``log(e_k / e_{k+1}) / log(ratio)`` for successive step refinements."""
    return [math.log(e0 / e1) / math.log(ratio) for e0, e1 in zip(errors, errors[1:])]


def convergence_study(run, reference, hs):
    """Max-state errors of ``run(h)`` against ``reference(h)`` with observed orders."""
    errors = [compare(run(h), reference(h))["max_state_error"] for h in hs]
    return {"h": list(hs), "errors": errors, "orders": observed_orders(errors, hs[0] / hs[1])}
