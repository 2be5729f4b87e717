"""Deterministic JSON serialization of analysis and quantum reports.

Symbolic results are written as canonical expression text; exact rationals
(parameters, sample points) as ``"p/q"`` strings. Keys are sorted.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .dirac import DiracStructure, bracket_table, reduced_hamiltonian, verify_strong_zero


def rational_text(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def strong_zero_quantities(s: DiracStructure):
    """Every phase-space symbol plus the reduced Hamiltonian (labelled ``H``)."""
    names = sorted(s.phase_space.symbols(), key=s.table.index.get)
    return [(n, s.table.symbol(n)) for n in names] + [("H", reduced_hamiltonian(s))]


def _strong_zero(s):
    quantities = strong_zero_quantities(s)
    result = verify_strong_zero(s, [q for _, q in quantities])
    labels = {q.to_text(): name for name, q in quantities}
    for v in result["violations"]:
        v["quantity"] = labels.get(v["quantity"], v["quantity"])
    return result


def analysis_report(model, s: DiracStructure) -> dict:
    """Constraint chain, multipliers, ``M``, ``G``, reduced Hamiltonian, bracket table and strong-zero summary.

    Raises :class:`~dirac_workbench.dirac.FirstClassError` through the bracket
    table when first-class constraints are present.
    """
    constraints = [
        {
            "index": k + 1,
            "expression": c.expression.to_text(),
            "origin": c.origin,
            "generation": c.generation,
            "class": c.klass,
        }
        for k, c in enumerate(s.constraints)
    ]
    multipliers = {
        u: {"raw": s.multipliers[u].to_text(), "reduced": s.multipliers_reduced[u].to_text()}
        for u in s.multipliers
    }
    table = {k: v.to_text() for k, v in bracket_table(s).items()}
    return {
        "model": model.name,
        "parameters": {k: rational_text(v) for k, v in model.parameters.items()},
        "rewrite_rules": s.rules.pairs_text(),
        "hamiltonian": s.hamiltonian.to_text(),
        "total_hamiltonian_terms": [{"multiplier": u, "constraint": phi.to_text()} for u, phi in s.total_terms],
        "constraints": constraints,
        "multipliers": multipliers,
        "free_multipliers": list(s.free_multipliers),
        "rank": s.rank,
        "M": s.M.to_text() if s.M is not None else None,
        "G": s.G.to_text() if s.G is not None else None,
        "reduced_hamiltonian": reduced_hamiltonian(s).to_text(),
        "bracket_table": table,
        "strong_zero": _strong_zero(s),
    }


def spectrum_report(result) -> dict:
    return result.to_json()
