"""Estimator-style wrappers around the functional core.

Hyperparameters go to ``__init__`` and are exposed through
``get_params``/``set_params``; ``fit`` consumes a model and stores learned
state in attributes with a trailing underscore.
"""

from __future__ import annotations

import inspect
import math
from pathlib import Path

import numpy as np

from .brackets import reduce
from .dirac import analyze, bracket_table, dirac_bracket, reduced_hamiltonian, verify_strong_zero
from .dynamics import exact_circle, generate_eom, integrate_project, integrate_rk4, sphere_radius, state_variables
from .model import Model, load_model

METHODS = ("dirac-rk4", "project", "exact")


class NotFittedError(RuntimeError):
    pass


class ParamsMixin:
    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return sorted(p for p in sig.parameters if p != "self")

    def get_params(self, deep=True):
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = self._param_names()
        for key, value in params.items():
            if key not in valid:
                raise ValueError(f"invalid parameter {key!r} for {type(self).__name__}")
            setattr(self, key, value)
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


def check_model(model) -> Model:
    """Accept a :class:`Model`, a path or the name of a bundled model."""
    if isinstance(model, Model):
        return model
    if isinstance(model, (str, Path)):
        return load_model(model)
    raise TypeError(f"expected a Model or a model path, got {type(model).__name__}")


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}")
    return int(value)


def check_step(h):
    if isinstance(h, bool) or not isinstance(h, (int, float)) or not math.isfinite(h) or h <= 0:
        raise ValueError("h must be a finite positive number")
    return float(h)


def check_is_fitted(est, attribute):
    if not hasattr(est, attribute):
        raise NotFittedError(f"this {type(est).__name__} instance is not fitted yet; call fit first")


class DiracAnalyzer(ParamsMixin):
    """Constraint analysis as an estimator.

    ``fit(model)`` runs the Dirac algorithm; ``transform(quantities)`` maps
    expressions (text or :class:`RationalExpr`) to their reduced forms on the
    constraint surface.
    """

    def __init__(self, max_generations=10):
        self.max_generations = max_generations

    def fit(self, model, y=None):
        check_positive_int(self.max_generations, "max_generations")
        model = check_model(model)
        self.model_ = model
        self.structure_ = analyze(model, max_generations=self.max_generations)
        self.constraints_ = self.structure_.expressions()
        self.M_ = self.structure_.M
        self.G_ = self.structure_.G
        self.reduced_hamiltonian_ = reduced_hamiltonian(self.structure_)
        return self

    def _expr(self, q):
        return self.structure_.table.parse(q) if isinstance(q, str) else q

    def transform(self, quantities):
        check_is_fitted(self, "structure_")
        return [reduce(self._expr(q), self.structure_.rules) for q in quantities]

    def fit_transform(self, model, quantities):
        return self.fit(model).transform(quantities)

    def bracket(self, a, b):
        check_is_fitted(self, "structure_")
        return dirac_bracket(self._expr(a), self._expr(b), self.structure_)

    def bracket_table(self):
        check_is_fitted(self, "structure_")
        return bracket_table(self.structure_)

    def verify_strong_zero(self, quantities):
        check_is_fitted(self, "structure_")
        return verify_strong_zero(self.structure_, quantities)


class ConstrainedIntegrator(ParamsMixin):
    """Trajectories on the constraint surface.

    ``method`` is ``"dirac-rk4"`` (RK4 on the Dirac-bracket equations of
    motion), ``"project"`` (free RK4 step followed by projection) or
    ``"exact"`` (closed-form rotation, circle-type models only).
    """

    def __init__(self, method="dirac-rk4", h=1e-3, steps=1000, t0=0.0):
        self.method = method
        self.h = h
        self.steps = steps
        self.t0 = t0

    def _validate(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        check_step(self.h)
        check_positive_int(self.steps, "steps", minimum=0)

    def fit(self, model, y=None):
        self._validate()
        model = check_model(model)
        self.model_ = model
        self.structure_ = analyze(model)
        self.parameters_ = dict(model.parameters)
        if self.method == "dirac-rk4":
            self.system_ = generate_eom(self.structure_, self.parameters_)
            self.variables_ = list(self.system_.variables)
        else:
            self.radius_, _ = sphere_radius(self.structure_, self.parameters_)
            self.variables_ = state_variables(model.table)
        return self

    def _mass(self):
        # reduced H = |p|^2 / (2 m) for the circle-type models this method accepts
        table = self.model_.table
        point = {n: 0 for n in table.names}
        point.update(self.parameters_)
        point["px"] = 1
        value = reduced_hamiltonian(self.structure_).evaluate(point)
        return 1.0 / (2.0 * float(value))

    def predict(self, initial):
        check_is_fitted(self, "model_")
        self._validate()
        if self.method == "dirac-rk4":
            return integrate_rk4(self.system_, initial, self.h, self.steps, t0=self.t0)
        if self.method == "project":
            return integrate_project(self.structure_, self.parameters_, initial, self.h, self.steps, t0=self.t0)
        if self.variables_ != ["x", "y", "px", "py"]:
            raise ValueError("the exact method needs a planar circle model with state (x, y, px, py)")
        return exact_circle(initial, (self.t0, self.h, self.steps), r0=self.radius_, mass=self._mass())
