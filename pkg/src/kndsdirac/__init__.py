"""Dirac-mode machinery on Kerr-Newman-de Sitter black hole backgrounds.

Subpackage map:

* :mod:`kndsdirac.geometry`   -- horizon quartic, critical masses, classification
* :mod:`kndsdirac.positivity` -- weighted-norm equivalence matrices and bounds
* :mod:`kndsdirac.separation` -- tortoise coordinate, mode potentials, symbol algebra
* :mod:`kndsdirac.angular`    -- angular eigenvalue problem (two independent solvers)
* :mod:`kndsdirac.radial`     -- radial mode integration and non-normalizability certificates
* :mod:`kndsdirac.cli`        -- command line interface
* :mod:`kndsdirac.backend`    -- numba/numpy kernel backend selection
"""

from .backend import get_backend

__version__ = "0.1.0"

__all__ = ["get_backend", "__version__"]
