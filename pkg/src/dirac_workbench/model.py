"""Declarative model files: symbols, Lagrangian, rules and sample points."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema

from .brackets import OffSurfaceError, RewriteRules
from .expr import ExprError, SymbolTable, ZeroDenominatorError


class ModelError(ValueError):
    pass


BUNDLED_MODELS = ("circle", "free", "pinned_line")


def _load_schema():
    return json.loads(resources.files(__package__).joinpath("data/model.schema.json").read_text())


MODEL_SCHEMA = _load_schema()


def build_table(symbols):
    """Symbol table in the canonical order used for the monomial ordering.

    Configuration variables come first (declaration order), then their
    momenta, then parameters, then velocities and the arbitrary functions
    ``u1, u2, ...`` used in the total Hamiltonian.
    """
    config = [s for s in symbols if s["kind"] in ("coordinate", "multiplier")]
    params = [s for s in symbols if s["kind"] == "parameter"]
    entries = [(s["name"], s["kind"]) for s in config]
    pairs, velocities = {}, {}
    for s in config:
        p = s.get("momentum", "p" + s["name"])
        kind = "momentum" if s["kind"] == "coordinate" else "multiplier-momentum"
        entries.append((p, kind))
        pairs[p] = s["name"]
    entries.extend((s["name"], "parameter") for s in params)
    for s in config:
        v = s.get("velocity", s["name"] + "_dot")
        entries.append((v, "velocity"))
        velocities[v] = s["name"]
    entries.extend((f"u{k + 1}", "arbitrary") for k in range(len(config)))
    return SymbolTable(entries, pairs=pairs, velocities=velocities)


@dataclass
class Model:
    name: str
    table: SymbolTable
    lagrangian_text: str
    lagrangian: object
    parameters: dict
    rule_pairs: list = field(default_factory=list)
    sample_points: list = field(default_factory=list)
    defaults: dict = field(default_factory=dict)

    @property
    def multipliers(self):
        return self.table.of_kind("multiplier")

    @property
    def declared_rules(self):
        if not self.rule_pairs:
            return None
        return RewriteRules.from_pairs(self.table, self.rule_pairs)

    def rule_sources(self):
        return [t - r for t, r in self.rule_pairs]

    def parameter_point(self):
        return dict(self.parameters)


def model_from_dict(data) -> Model:
    try:
        jsonschema.validate(data, MODEL_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ModelError(f"model file violates the schema: {exc.message}") from exc
    try:
        table = build_table(data["symbols"])
    except ExprError as exc:
        raise ModelError(str(exc)) from exc
    declared = {s["name"] for s in data["symbols"] if s["kind"] == "parameter"}
    parameters = {}
    for name, text in data.get("parameters", {}).items():
        if name not in declared:
            raise ModelError(f"parameter {name!r} is not declared as a parameter symbol")
        parameters[name] = Fraction(text)
    missing = declared - set(parameters)
    if missing:
        raise ModelError(f"parameters without values: {sorted(missing)}")

    lagrangian = table.parse(data["lagrangian"])
    velocity_free = [n for n in lagrangian.free_symbols() if table.kinds[n] in ("momentum", "multiplier-momentum", "arbitrary")]
    if velocity_free:
        raise ModelError(f"Lagrangian may not contain momenta or multiplier functions: {velocity_free}")

    pairs = [(table.parse(r["target"]), table.parse(r["replacement"])) for r in data.get("rewrite_rules", [])]
    model = Model(
        name=data["name"],
        table=table,
        lagrangian_text=data["lagrangian"],
        lagrangian=lagrangian,
        parameters=parameters,
        rule_pairs=pairs,
        defaults=dict(data.get("defaults", {})),
    )
    if pairs:
        model.declared_rules  # validates rule orientation

    for k, raw in enumerate(data["sample_points"]):
        point = dict(parameters)
        for name, text in raw.items():
            if name not in table:
                raise ModelError(f"sample point {k + 1} binds unknown symbol {name!r}")
            point[name] = Fraction(text)
        for source in model.rule_sources():
            try:
                value = source.evaluate(point)
            except ZeroDenominatorError as exc:
                raise ModelError(f"sample point {k + 1} hits a zero denominator") from exc
            except ExprError as exc:
                raise ModelError(f"sample point {k + 1}: {exc}") from exc
            if value != 0:
                raise OffSurfaceError(
                    f"sample point {k + 1} {_fmt_point(raw)} is off the surface of constraint {source} (value {value})"
                )
        model.sample_points.append(point)
    return model


def _fmt_point(raw):
    return "{" + ", ".join(f"{k}={v}" for k, v in raw.items()) + "}"


def bundled_model_path(name):
    return resources.files(__package__).joinpath(f"data/{name}.json")


def resolve_model_path(path):
    """A filesystem path, or the name of a bundled model (``circle``, ``circle.json``)."""
    p = Path(path)
    if p.exists():
        return p
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    if stem in BUNDLED_MODELS:
        return Path(str(bundled_model_path(stem)))
    raise FileNotFoundError(f"model file {path!r} not found")


def load_model(path) -> Model:
    with open(resolve_model_path(path)) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"invalid JSON in model file: {exc}") from exc
    return model_from_dict(data)
