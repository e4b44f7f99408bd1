"""Named operators available to experiment configs."""

from __future__ import annotations

from .core import FockModel
from .operators import OpMatrix, toeplitz_function, toeplitz_measure, toeplitz_poly
from .symbols import DiscreteMeasure, SymbolPoly, gaussian, indicator_ball

# name -> (description, builder); insertion order is the listing order
PRESETS = {
    "identity": ("identity operator", lambda m: OpMatrix.identity(m.dim)),
    "zero": ("zero operator", lambda m: OpMatrix.zeros(m.dim)),
    "indicator-ball r=1": ("Toeplitz operator of the indicator of B(0, 1)",
                           lambda m: toeplitz_function(m, indicator_ball(0.0, 1.0))),
    "point-mass origin": ("Toeplitz operator of the unit point mass at 0",
                          lambda m: toeplitz_measure(m, DiscreteMeasure.point_mass(0.0))),
    "T_z": ("Toeplitz operator with symbol z", lambda m: toeplitz_poly(m, SymbolPoly.monomial(1, 0))),
    "T_zbar": ("Toeplitz operator with symbol conj(z)", lambda m: toeplitz_poly(m, SymbolPoly.monomial(0, 1))),
    "T_abs2": ("Toeplitz operator with symbol |z|^2", lambda m: toeplitz_poly(m, SymbolPoly.monomial(1, 1))),
    "gaussian-symbol": ("Toeplitz operator with symbol exp(-|z|^2) (centre 0, width 1)",
                        lambda m: toeplitz_function(m, gaussian(0.0, 1.0))),
}


def list_presets() -> str:
    return "\n".join(f"{name}: {desc}" for name, (desc, _) in PRESETS.items())


def build_preset(name: str, model: FockModel) -> OpMatrix:
    try:
        return PRESETS[name][1](model)
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; see `focklab presets`") from None
