"""Collapse sequences, piecewise hyperbolic realizations and curvature checks.

Modules:

- ``hypgeom``: hyperboloid-model geometry (distances, Gram matrices,
  dihedral angles, comparison triangles)
- ``complex``: simplicial and cubical-product cell complexes, homology
- ``collapse``: free faces, collapse search, certificates and replay
- ``hyperbolize``: blocks along reverse collapses and their metric
- ``curvature``: link conditions and comparison-triangle sampling
- ``cli``: the ``collapsehyp`` command
"""

from .collapse import CollapseSequence, ElementaryCollapse, cone_collapse, find_collapse, replay
from .complex import CellComplex, ProductCell, SimplicialComplex
from .curvature import CurvatureReport, comparison_sample, metric_link, verify_links
from .errors import CollapseHypError
from .hyperbolize import MetricComplex, hyperbolize

__version__ = "0.1.0"

__all__ = [
    "CellComplex",
    "CollapseHypError",
    "CollapseSequence",
    "CurvatureReport",
    "ElementaryCollapse",
    "MetricComplex",
    "ProductCell",
    "SimplicialComplex",
    "comparison_sample",
    "cone_collapse",
    "find_collapse",
    "hyperbolize",
    "metric_link",
    "replay",
    "verify_links",
]
