"""Quantum particle on a ring: spectra, Fourier-basis operators, algebra checks.

Operators are first built in the angle representation as differential
operators whose coefficients are trigonometric polynomials
(:class:`ThetaOperator`). Products are formed there exactly; only then are
matrix elements taken in the basis ``exp(i (n + beta) theta) / sqrt(2 pi)``,
``n = -N..N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .eigen import jacobi_hermitian


@dataclass(frozen=True)
class RingParams:
    r0: float = 1.0
    m: float = 1.0
    hbar: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        for name in ("r0", "m", "hbar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("r0", "m", "hbar", "alpha", "beta"):
            if not math.isfinite(float(getattr(self, name))):
                raise ValueError(f"{name} must be finite")
        b = Fraction(repr(float(self.beta)))
        object.__setattr__(self, "beta", float(b - math.floor(b)))

    @property
    def alpha_bar(self):
        return self.alpha - math.floor(self.alpha)

    @property
    def e0(self):
        return self.hbar ** 2 / (8 * self.m * self.r0 ** 2)

    def exact(self, name):
        """Exact value read from the shortest decimal form, so ``0.1`` means 1/10."""
        value = getattr(self, name)
        return value if isinstance(value, Fraction) else Fraction(repr(float(value)))

    def as_dict(self):
        return {k: float(getattr(self, k)) for k in ("r0", "m", "hbar", "alpha", "beta")}


@dataclass
class SpectrumResult:
    levels: np.ndarray
    method: str
    params: RingParams
    labels: list | None = None
    exact: list | None = None

    def __post_init__(self):
        self.levels = np.asarray(self.levels, dtype=float)
        if np.any(np.diff(self.levels) < -1e-12 * max(1.0, np.abs(self.levels).max())):
            raise ValueError("levels must be non-decreasing")
        if not np.all(np.isfinite(self.levels)):
            raise ValueError("levels must be finite")

    def to_json(self):
        return {"params": self.params.as_dict(), "method": self.method, "levels": [float(v) for v in self.levels]}


# ---------------------------------------------------------------------------
# Spectra


def analytic_spectrum(p: RingParams, levels: int, include_e0=True) -> SpectrumResult:
    """``E_n = hbar^2 (n + beta - alpha)^2 / (2 m r0^2) [+ hbar^2 / (8 m r0^2)]``.

    Evaluated in exact rational arithmetic from the decimal parameter values;
    ``result.exact`` holds the Fractions.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    r0, m, hbar = p.exact("r0"), p.exact("m"), p.exact("hbar")
    shift = p.exact("beta") - p.exact("alpha")
    unit = hbar ** 2 / (2 * m * r0 ** 2)
    e0 = hbar ** 2 / (8 * m * r0 ** 2) if include_e0 else Fraction(0)
    center = -math.floor(shift)
    candidates = []
    for n in range(center - levels - 1, center + levels + 2):
        candidates.append((unit * (n + shift) ** 2 + e0, n))
    candidates.sort()
    chosen = candidates[:levels]
    return SpectrumResult(
        [float(e) for e, _ in chosen],
        "analytic",
        p,
        labels=[n for _, n in chosen],
        exact=[e for e, _ in chosen],
    )


def ground_energy(p: RingParams) -> float:
    """``hbar^2/(2 m r0^2) (1/2 - |1/2 - abar|)^2 + E0``.

    ``abar`` is the flux mod 1. For ``beta != 0`` the flux is measured
    relative to the boundary twist, ``(alpha - beta) mod 1``, which reduces to
    the usual formula on the periodic domain.
    """
    d = p.alpha - p.beta
    a = d - math.floor(d)
    return p.hbar ** 2 / (2 * p.m * p.r0 ** 2) * (0.5 - abs(0.5 - a)) ** 2 + p.e0


def grid_hamiltonian(p: RingParams, grid_n: int, include_e0=True) -> np.ndarray:
    """Central-difference Hamiltonian on a uniform angle grid.

    The flux enters through link phases ``exp(-+ i alpha h)`` on the hopping
    terms and the twisted boundary ``psi(2 pi) = exp(2 pi i beta) psi(0)``
    through the wrap-around links.
    """
    if grid_n < 16:
        raise ValueError("gridN must be >= 16")
    h = 2 * math.pi / grid_n
    t = p.hbar ** 2 / (2 * p.m * p.r0 ** 2 * h * h)
    hop = -t * np.exp(-1j * p.alpha * h)
    mat = np.zeros((grid_n, grid_n), dtype=complex)
    idx = np.arange(grid_n)
    mat[idx, idx] = 2 * t + (p.e0 if include_e0 else 0.0)
    mat[idx[:-1], idx[:-1] + 1] = hop
    mat[idx[:-1] + 1, idx[:-1]] = np.conj(hop)
    twist = np.exp(2j * math.pi * p.beta)
    mat[grid_n - 1, 0] = hop * twist
    mat[0, grid_n - 1] = np.conj(hop * twist)
    return mat


def grid_spectrum(p: RingParams, grid_n: int, levels: int, include_e0=True, tol=1e-12, max_sweeps=100) -> SpectrumResult:
    values, _ = jacobi_hermitian(grid_hamiltonian(p, grid_n, include_e0), tol=tol, max_sweeps=max_sweeps)
    return SpectrumResult(values[:levels], "grid-fd", p)


def fourier_spectrum(p: RingParams, N: int, levels: int) -> SpectrumResult:
    """Eigenvalues of the truncated Hamiltonian matrix in the twisted basis."""
    if N < 2:
        raise ValueError("truncation N must be >= 2")
    if levels > 2 * N + 1:
        raise ValueError("levels exceeds the basis dimension 2N+1")
    values, _ = jacobi_hermitian(operator_matrix("H", p, N).matrix)
    return SpectrumResult(values[:levels], "fourier-truncated", p)


# ---------------------------------------------------------------------------
# Angle-representation operators


class ThetaOperator:
    """``sum_j c_j(theta) d^j/dtheta^j`` with ``c_j(theta) = sum_f c_jf exp(i f theta)``."""

    def __init__(self, coeffs=None):
        self.coeffs = {}
        for j, row in (coeffs or {}).items():
            row = {f: complex(c) for f, c in row.items() if c != 0}
            if row:
                self.coeffs[j] = row

    @classmethod
    def multiplication(cls, fourier):
        return cls({0: fourier})

    @classmethod
    def derivative(cls, order=1):
        return cls({order: {0: 1.0}})

    @classmethod
    def scalar(cls, c):
        return cls({0: {0: c}})

    def __add__(self, other):
        out = {j: dict(row) for j, row in self.coeffs.items()}
        for j, row in other.coeffs.items():
            target = out.setdefault(j, {})
            for f, c in row.items():
                target[f] = target.get(f, 0) + c
        return ThetaOperator(out)

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        if isinstance(c, ThetaOperator):
            return self @ c
        return ThetaOperator({j: {f: v * c for f, v in row.items()} for j, row in self.coeffs.items()})

    __rmul__ = __mul__

    def __matmul__(self, other):
        # (a d^j)(b d^k) = a sum_l C(j,l) b^(l) d^(j-l+k)
        out = {}
        for j, arow in self.coeffs.items():
            for k, brow in other.coeffs.items():
                for l in range(j + 1):
                    binom = math.comb(j, l)
                    order = j - l + k
                    target = out.setdefault(order, {})
                    for fa, ca in arow.items():
                        for fb, cb in brow.items():
                            deriv = (1j * fb) ** l if l else 1.0
                            if deriv == 0:
                                continue
                            f = fa + fb
                            target[f] = target.get(f, 0) + binom * ca * cb * deriv
        return ThetaOperator(out)

    def anticommutator(self, other):
        return self @ other + other @ self

    def commutator(self, other):
        return self @ other - other @ self

    def bandwidth(self, atol=0.0):
        return max((abs(f) for row in self.coeffs.values() for f, c in row.items() if abs(c) > atol), default=0)

    def max_coefficient(self):
        return max((abs(c) for row in self.coeffs.values() for c in row.values()), default=0.0)

    def matrix(self, N, beta=0.0):
        """Matrix elements ``<m|A|n>`` in the twisted Fourier basis, ``n = -N..N``."""
        dim = 2 * N + 1
        mat = np.zeros((dim, dim), dtype=complex)
        for col in range(dim):
            k = col - N + beta
            for j, row in self.coeffs.items():
                factor = (1j * k) ** j
                for f, c in row.items():
                    r = col + f
                    if 0 <= r < dim:
                        mat[r, col] += c * factor
        return mat


COS = {1: 0.5, -1: 0.5}
SIN = {1: -0.5j, -1: 0.5j}


def theta_operators(p: RingParams) -> dict:
    """Angle-representation forms of the circle observables."""
    hb, r0, a = p.hbar, p.r0, p.alpha
    cos = ThetaOperator.multiplication(COS)
    sin = ThetaOperator.multiplication(SIN)
    d = ThetaOperator.derivative()
    ops = {
        "x": r0 * cos,
        "y": r0 * sin,
        "px": (hb / r0) * (1j * (sin @ d) + 0.5j * cos + a * sin),
        "py": (hb / r0) * (-1j * (cos @ d) + 0.5j * sin - a * cos),
        "Lz": hb * (-1j * d - ThetaOperator.scalar(a)),
    }
    ops["H"] = (1 / (2 * p.m)) * (ops["px"] @ ops["px"] + ops["py"] @ ops["py"])
    ops["phi3W"] = 0.5 * (ops["x"].anticommutator(ops["px"]) + ops["y"].anticommutator(ops["py"]))
    return ops


OPERATOR_NAMES = ("x", "y", "px", "py", "Lz", "H", "phi3W")


@dataclass
class OperatorMatrix:
    matrix: np.ndarray
    which: str
    N: int
    alpha: float
    beta: float = 0.0
    basis: list = field(default_factory=list)

    @property
    def dim(self):
        return self.matrix.shape[0]


def operator_matrix(which, p: RingParams, N: int) -> OperatorMatrix:
    if which not in OPERATOR_NAMES:
        raise ValueError(f"unknown operator {which!r}; choose from {OPERATOR_NAMES}")
    if N < 2:
        raise ValueError("truncation N must be >= 2")
    op = theta_operators(p)[which]
    mat = op.matrix(N, p.beta)
    return OperatorMatrix(mat, which, N, p.alpha, p.beta, list(range(-N, N + 1)))


def hermiticity_defect(a) -> float:
    a = a.matrix if isinstance(a, OperatorMatrix) else a
    return float(np.abs(a - a.conj().T).max())


def _interior(a):
    return a[2:-2, 2:-2]


def algebra_residuals(p: RingParams, N: int) -> dict:
    """Hermiticity defects and interior commutator residuals.

    Commutators and right-hand sides are formed from truncated matrices and
    compared on indices ``|m|, |n| <= N - 2``, where products of these
    bandwidth-1 operators are exact.
    """
    if N < 4:
        raise ValueError("truncation N must be >= 4")
    mats = {k: operator_matrix(k, p, N).matrix for k in OPERATOR_NAMES}
    x, y, px, py, H = mats["x"], mats["y"], mats["px"], mats["py"], mats["H"]
    ih = 1j * p.hbar
    eye = np.eye(x.shape[0])
    r2 = p.r0 ** 2

    def comm(a, b):
        return a @ b - b @ a

    relations = {
        "[x,px] - i hbar (1 - x^2/r0^2)": comm(x, px) - ih * (eye - x @ x / r2),
        "[y,py] - i hbar (1 - y^2/r0^2)": comm(y, py) - ih * (eye - y @ y / r2),
        "[x,py] + i hbar x y/r0^2": comm(x, py) + ih * (x @ y) / r2,
        "[y,px] + i hbar x y/r0^2": comm(y, px) + ih * (x @ y) / r2,
        "[x,y]": comm(x, y),
        "[px,py] + i hbar (x py - y px)/r0^2": comm(px, py) + ih * (x @ py - y @ px) / r2,
        "[x,H] - i hbar px/m": comm(x, H) - ih * px / p.m,
        "[y,H] - i hbar py/m": comm(y, H) - ih * py / p.m,
    }
    return {
        "params": p.as_dict(),
        "N": N,
        "hermiticity_defects": {k: hermiticity_defect(mats[k]) for k in ("x", "y", "px", "py", "Lz", "H")},
        "commutator_residuals": {k: float(np.abs(_interior(v)).max()) for k, v in relations.items()},
        "phi3W_max_norm": float(np.abs(mats["phi3W"]).max()),
    }


def ordering_candidates(p: RingParams) -> dict:
    """Momentum operators rebuilt from ``{-y, Lz}`` (resp. ``{x, Lz}``) under three orderings of the radial constraint."""
    ops = theta_operators(p)
    x, y, lz = ops["x"], ops["y"], ops["Lz"]
    r2 = p.r0 ** 2
    shift = 0.5j * p.hbar / r2
    weyl_px = (-1 / (2 * r2)) * y.anticommutator(lz)
    weyl_py = (1 / (2 * r2)) * x.anticommutator(lz)
    return {
        "weyl": {"px": weyl_px, "py": weyl_py},
        "x.p": {"px": weyl_px - shift * x, "py": weyl_py - shift * y},
        "p.x": {"px": weyl_px + shift * x, "py": weyl_py + shift * y},
    }


def nonhermitian_ordering_demo(p: RingParams, N: int) -> dict:
    """Hermiticity defects of the momenta under the three constraint orderings.

    ``"x.p"`` imposes ``x px + y py = 0``, ``"p.x"`` imposes
    ``px x + py y = 0`` and ``"weyl"`` the symmetrized form. The skew
    coefficient ``c`` is defined by ``A - A^dagger = i c x`` (``i c y`` for
    ``py``), so its sign shows the orientation of the anti-Hermitian part.
    """
    if N < 4:
        raise ValueError("truncation N must be >= 4")
    mats = {k: operator_matrix(k, p, N).matrix for k in ("x", "y", "px", "py")}
    report = {"params": p.as_dict(), "N": N, "branches": {}}
    for branch, ops in ordering_candidates(p).items():
        entry = {}
        for comp, base in (("px", "x"), ("py", "y")):
            a = ops[comp].matrix(N, p.beta)
            skew = a - a.conj().T
            ref = 1j * mats[base]
            k = np.unravel_index(np.argmax(np.abs(ref)), ref.shape)
            entry[comp] = {
                "hermiticity_defect": hermiticity_defect(a),
                "skew_coefficient": float((skew[k] / ref[k]).real) + 0.0,
                "matches_operator": float(np.abs(a - mats[comp]).max()),
            }
        report["branches"][branch] = entry
    return report
