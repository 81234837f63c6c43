"""Phase-space tools for noncommutative quantum mechanics in two dimensions.

Modules
-------
symplectic
    Extended symplectic forms, Pfaffians and Darboux maps.
gausspoly
    Closed-form algebra of polynomial-times-Gaussian functions.
starcalc
    Grid sampling and star products.
measures
    Wigner and noncommutative Wigner measures, and the witness catalog.
criteria
    Positivity, purity, uncertainty and classification tests.
cli
    Command-line front end.
"""

__version__ = "0.1.0"

from .errors import InternalInconsistency, NcwError, PreconditionError  # noqa: E402
from .symplectic import NCParams, build_omega, planar, standard_darboux  # noqa: E402

__all__ = [
    "__version__",
    "NcwError",
    "PreconditionError",
    "InternalInconsistency",
    "NCParams",
    "build_omega",
    "planar",
    "standard_darboux",
]
