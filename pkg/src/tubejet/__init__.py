"""tubejet: exact jet-level integrability machinery for adapted complex
structures on tangent bundles, with a verification CLI."""

from .polyfield import PolyScalar, QQi
from .tensors import (PointTensor, TensorField, alt, alt2_preimage,
                      altsym_curvature_solve, circ, perm2, prod_contract,
                      prod_dot, r_dot, sym, sym_tail, wedge1)
from .connection import (Connection, CurvePath, covariant_derivative,
                         curvature, d1, deform, holonomy_curvature,
                         parallel_transport, torsion)
from .metric import (Metric, TangentPoint, canonical_one_form, connector,
                     euclidean_metric, geodesic_flow, levi_civita,
                     quadratic_example_metric, reeb_check,
                     rho_theta_obstruction, symplectic_form)
from .jets import (JetSequence, beta_closed, beta_recursive, build_jets,
                   first_riemann_obstruction, obstruction, riemannian_jets)
from .structure import (TotallyRealStructure, holomorphy_check, main_residual,
                        per_degree_system, psi_CR_residual, split_residual)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
