"""Symbols for Toeplitz operators: callables, polynomials in ``z, conj(z)`` and discrete measures."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from math import factorial
from typing import Callable

import numpy as np

from .weights import InvalidParameterError


@dataclass(frozen=True, eq=False)
class Symbol:
    """A bounded function on the plane with hints for quadrature.

    Attributes
    ----------
    func : callable
        Vectorised map from complex points to complex values.
    support : (complex, float) or None
        Closed disk outside which ``func`` vanishes. Inside it the function is
        assumed smooth, so quadrature is done on exactly this disk.
    radial : callable or None
        Profile ``f(r)`` when the symbol is radial about the origin.
    freq : float
        Extra angular nodes per unit radius needed to resolve the symbol.
    bound : float or None
        Known bound for ``sup |f|``.
    """

    func: Callable[[np.ndarray], np.ndarray]
    label: str = "f"
    support: tuple[complex, float] | None = None
    radial: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    freq: float = 0.0
    bound: float | None = None
    poly: "SymbolPoly | None" = field(default=None, repr=False)

    @property
    def terms(self):
        return (self,)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return np.broadcast_to(np.asarray(self.func(z), dtype=complex), z.shape)

    def conj(self) -> "Symbol":
        f, r = self.func, self.radial
        return Symbol(lambda z: np.conj(f(z)), f"conj({self.label})", self.support,
                      None if r is None else (lambda s: np.conj(r(s))), self.freq, self.bound,
                      None if self.poly is None else self.poly.conj())

    def scale(self, c: complex) -> "Symbol":
        f, r = self.func, self.radial
        return Symbol(lambda z: c * f(z), f"{c}*{self.label}", self.support,
                      None if r is None else (lambda s: c * r(s)), self.freq,
                      None if self.bound is None else abs(c) * self.bound,
                      None if self.poly is None else self.poly * c)

    def __mul__(self, other):
        if np.isscalar(other):
            return self.scale(other)
        if not isinstance(other, Symbol):
            return NotImplemented
        f, g = self.func, other.func
        sup = _meet(self.support, other.support)
        rad = None
        if self.radial is not None and other.radial is not None:
            r1, r2 = self.radial, other.radial
            rad = lambda s: r1(s) * r2(s)
        bound = None if self.bound is None or other.bound is None else self.bound * other.bound
        poly = None if self.poly is None or other.poly is None else self.poly * other.poly
        return Symbol(lambda z: f(z) * g(z), f"{self.label}*{other.label}", sup, rad,
                      self.freq + other.freq, bound, poly)

    __rmul__ = __mul__

    def __add__(self, other):
        return SymbolSum(self.terms + _as_symbol(other).terms)

    __radd__ = __add__


def _meet(a, b):
    if a is None:
        return b
    if b is None:
        return a
    # keep the smaller disk; exact for nested supports
    return a if a[1] <= b[1] else b


def _as_symbol(x):
    if isinstance(x, (Symbol, SymbolSum)):
        return x
    if np.isscalar(x):
        return constant(x)
    raise TypeError(f"cannot use {type(x).__name__} as a symbol")


@dataclass(frozen=True, eq=False)
class SymbolSum:
    """Finite sum of symbols; each term is integrated with its own rule."""

    terms: tuple

    def __call__(self, z):
        return sum(t(z) for t in self.terms)

    @property
    def label(self):
        return " + ".join(t.label for t in self.terms)

    def conj(self):
        return SymbolSum(tuple(t.conj() for t in self.terms))

    def scale(self, c):
        return SymbolSum(tuple(t.scale(c) for t in self.terms))

    def __add__(self, other):
        return SymbolSum(self.terms + _as_symbol(other).terms)

    __radd__ = __add__

    def __mul__(self, other):
        if np.isscalar(other):
            return self.scale(other)
        other = _as_symbol(other)
        return SymbolSum(tuple(a * b for a in self.terms for b in other.terms))

    __rmul__ = __mul__


def constant(c: complex) -> Symbol:
    c = complex(c)
    return Symbol(lambda z: np.full(np.shape(z), c), f"{c:g}", None, lambda r: np.full(np.shape(r), c),
                  0.0, abs(c), SymbolPoly({(0, 0): c}))


def indicator_ball(center: complex = 0.0, radius: float = 1.0, height: complex = 1.0) -> Symbol:
    """``height`` times the indicator of the closed disk ``B(center, radius)``."""
    if radius <= 0:
        raise InvalidParameterError("radius: must be > 0")
    center = complex(center)
    h = complex(height)

    def f(z):
        return np.where(np.abs(z - center) <= radius, h, 0.0)

    rad = (lambda r: np.where(r <= radius, h, 0.0)) if center == 0 else None
    return Symbol(f, f"indicator({center:g},{radius:g})", (center, float(radius)), rad, 0.0, abs(h))


def gaussian(center: complex = 0.0, width: float = 1.0) -> Symbol:
    """``exp(-|z - center|^2 / width^2)``."""
    center = complex(center)
    if width <= 0:
        raise InvalidParameterError("width: must be > 0")
    f = lambda z: np.exp(-np.abs(z - center) ** 2 / width**2)
    rad = (lambda r: np.exp(-(r**2) / width**2)) if center == 0 else None
    return Symbol(f, f"gaussian({center:g},{width:g})", None, rad, 2 * abs(center) / width**2, 1.0)


def _ipow(x, n: int):
    out = np.ones_like(x)
    for _ in range(n):
        out = out * x
    return out


class SymbolPoly:
    """Polynomial ``sum c_ab z^a conj(z)^b`` stored as a dict ``{(a, b): c}``."""

    def __init__(self, coeffs=None):
        self.coeffs = {}
        for (a, b), c in (coeffs or {}).items():
            if a < 0 or b < 0:
                raise InvalidParameterError("monomial exponents must be nonnegative")
            if c != 0:
                self.coeffs[(int(a), int(b))] = complex(c)

    @classmethod
    def monomial(cls, a: int, b: int, c: complex = 1.0):
        return cls({(a, b): c})

    @property
    def degree(self) -> int:
        return max((a + b for a, b in self.coeffs), default=0)

    def __repr__(self):
        return f"SymbolPoly({self.coeffs})"

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        zb = np.conj(z)
        for (a, b), c in self.coeffs.items():
            out = out + c * _ipow(z, a) * _ipow(zb, b)
        return out

    def __add__(self, other):
        if np.isscalar(other):
            other = SymbolPoly({(0, 0): other})
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0) + c
        return SymbolPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other if isinstance(other, SymbolPoly) else -complex(other))

    def __mul__(self, other):
        if np.isscalar(other):
            return SymbolPoly({k: c * other for k, c in self.coeffs.items()})
        out = {}
        for (a1, b1), c1 in self.coeffs.items():
            for (a2, b2), c2 in other.coeffs.items():
                k = (a1 + a2, b1 + b2)
                out[k] = out.get(k, 0) + c1 * c2
        return SymbolPoly(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, SymbolPoly) and self.coeffs == other.coeffs

    def conj(self):
        return SymbolPoly({(b, a): np.conj(c) for (a, b), c in self.coeffs.items()})

    def d_z(self, n: int = 1):
        """``n``-th derivative in ``z`` (treating ``conj(z)`` as independent)."""
        return SymbolPoly({(a - n, b): c * factorial(a) / factorial(a - n)
                           for (a, b), c in self.coeffs.items() if a >= n})

    def d_zbar(self, n: int = 1):
        return SymbolPoly({(a, b - n): c * factorial(b) / factorial(b - n)
                           for (a, b), c in self.coeffs.items() if b >= n})

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def to_symbol(self) -> Symbol:
        bandwidth = max((abs(a - b) for a, b in self.coeffs), default=0)
        radial = None
        if all(a == b for a, b in self.coeffs):
            cs = dict(self.coeffs)
            radial = lambda r: sum(c * r ** (2 * a) for (a, _), c in cs.items())
        return Symbol(self.__call__, "poly", None, radial, float(bandwidth), None, self)

    def to_json(self) -> str:
        return json.dumps([{"a": a, "b": b, "re": c.real, "im": c.imag}
                           for (a, b), c in sorted(self.coeffs.items())])

    @classmethod
    def from_json(cls, text: str) -> "SymbolPoly":
        return cls({(d["a"], d["b"]): complex(d["re"], d["im"]) for d in json.loads(text)})


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite sum of point masses ``sum_j c_j delta_{z_j}``."""

    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.points, dtype=complex))
        c = np.atleast_1d(np.asarray(self.masses, dtype=complex))
        if p.shape != c.shape:
            raise InvalidParameterError("points and masses must have equal length")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "masses", c)

    @classmethod
    def point_mass(cls, z: complex = 0.0, c: complex = 1.0):
        return cls([z], [c])


@dataclass(frozen=True, eq=False)
class GridSymbol:
    """Samples of a symbol on a uniform square grid ``x0 + h*i, y0 + h*j``."""

    x0: float
    y0: float
    h: float
    values: np.ndarray  # indexed [i (x), j (y)]

    @classmethod
    def sample(cls, symbol, half_width: float, h: float) -> "GridSymbol":
        n = int(np.ceil(half_width / h))
        ax = h * np.arange(-n, n + 1)
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        return cls(float(ax[0]), float(ax[0]), float(h), np.asarray(symbol(X + 1j * Y), dtype=complex))

    @property
    def points(self) -> np.ndarray:
        nx, ny = self.values.shape
        X, Y = np.meshgrid(self.x0 + self.h * np.arange(nx), self.y0 + self.h * np.arange(ny), indexing="ij")
        return X + 1j * Y

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "re", "im"])
        pts = self.points
        for p, v in zip(pts.ravel(), self.values.ravel()):
            w.writerow([repr(p.real), repr(p.imag), repr(v.real), repr(v.imag)])
        return buf.getvalue()
