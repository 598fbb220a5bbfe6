"""Periodic-domain workbench for quasiconvex elastodynamics.

Thin re-export of the _eldyn extension: spectral calculus on the flat torus,
a stored-energy catalog, the quasiconvexity lab, the regularized
elastodynamics integrator, and the entropy diagnostics.
"""

try:
    # wheel layout: the extension lives inside the package
    from ._eldyn import *  # noqa: F401,F403
    from ._eldyn import __doc__ as _doc
except ImportError:
    # development layout: the extension sits on PYTHONPATH (cmake build dir)
    from _eldyn import *  # noqa: F401,F403
    from _eldyn import __doc__ as _doc

__doc__ = _doc
