"""Assembly and verification of the truncated totally-real structure.

A TotallyRealStructure holds a jet sequence and evaluates the almost
complex structure J it encodes on the tangent-bundle chart:

    S_eta = sum_{k<=K} S_k(., eta^k),   Gamma = Re S,  B = Im S,
    alpha = H - T Gamma,  J = -alpha B^{-1} T^{-1} (1 - alpha dpi) + T B dpi,

with H the horizontal lift of the base connection, T the vertical
injection and dpi the base projection of the chart splitting.

The integrability residual (complexified) is graded by fiber degree; the
degree-d part of

    H -| nabla^{End,pi} S - S -| D S + S tau + R . eta

is assembled from the jet fields via the identities
H -| nabla^{End,pi} S_k = d_1 S_k and (S_l -| D S_k) = -k (S_k wedge_1 S_l),
and is compared degree-by-degree against the per-degree system
(the S_1-symmetry equation, R' + 2i Alt2 S_2, and the Sym-of
[d_1' S_k + sum p S_p wedge_1 S_{k-p+1} + i(k+1) Alt2 S_{k+1}] ladder).
Degrees above the truncation order are not evaluated; the dropped-degree
floor is reported alongside every residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .connection import Connection, covariant_derivative, curvature, d1, torsion
from .jets import JetSequence, riemannian_jets
from .metric import Metric, TangentPoint, geodesic_flow
from .tensors import TensorField, alt, contract_slot, sym_tail, wedge1


class SingularStructureError(ValueError):
    """Raised when B fails to be invertible at a requested point."""

    def __init__(self, det: complex):
        super().__init__(f"B is singular at the requested point (|det B| = {abs(det):.3e})")
        self.det = det


@dataclass
class TotallyRealStructure:
    """Truncated M-totally-real structure determined by a jet sequence.

    complete = True marks structures whose S_k vanish exactly beyond the
    stored order (e.g. S = i*Identity), so no residual degree is dropped.
    """

    jets: JetSequence
    complete: bool = False

    @property
    def dim(self) -> int:
        return self.jets.dim

    @property
    def order(self) -> int:
        return self.jets.order

    @classmethod
    def riemannian(cls, metric: Metric, K: int,
                   degree: Optional[int] = None) -> "TotallyRealStructure":
        return cls(riemannian_jets(metric, K, degree=degree))

    @classmethod
    def trivial(cls, conn: Connection) -> "TotallyRealStructure":
        """S = i*Identity over an arbitrary base connection (K = 0).

        Torsion is allowed here: this is the structure whose residual
        reduces to i*tau + R.eta, vanishing exactly for flat torsion-free
        connections.
        """
        exact = all(p._is_exact() for p in conn.gamma.comps.flat)
        from .polyfield import imag_unit
        s0 = TensorField.identity(conn.dim, exact=exact, scalar=imag_unit(exact))
        jets = JetSequence(order=0, base=conn, s1=TensorField.zeros(conn.dim, 2, True),
                           sigma={}, nabla=conn, curv=curvature(conn),
                           S=[s0], beta={1: curvature(conn)}, exact=exact)
        return cls(jets, complete=True)

    # -- pointwise data -------------------------------------------------

    def s_matrix(self, pt: TangentPoint) -> np.ndarray:
        """S_eta as a complex n x n matrix: S[a, b] acting on xi^b e_b."""
        n = self.dim
        out = np.zeros((n, n), dtype=complex)
        for k, Sk in enumerate(self.jets.S):
            t = Sk.evaluate(pt.x)
            for _ in range(k):
                t = contract_slot(t, pt.v.astype(complex), 1)
            out += t.to_numpy().T        # comps [xi, a] -> matrix [a, xi]
        return out

    def fiber_derivative(self, pt: TangentPoint, w: Sequence) -> np.ndarray:
        """D_eta S(w) as an n x n matrix: sum_k k S_k(., w, eta^{k-1})."""
        n = self.dim
        w = np.asarray(w, dtype=complex)
        out = np.zeros((n, n), dtype=complex)
        for k, Sk in enumerate(self.jets.S):
            if k == 0:
                continue
            t = contract_slot(Sk.evaluate(pt.x), w, 1)
            for _ in range(k - 1):
                t = contract_slot(t, pt.v.astype(complex), 1)
            out += k * t.to_numpy().T
        return out

    def gamma_b(self, pt: TangentPoint):
        s = self.s_matrix(pt)
        return s.real, s.imag

    def b_det(self, pt: TangentPoint) -> complex:
        return np.linalg.det(self.gamma_b(pt)[1])

    # -- the almost complex structure ------------------------------------

    def eval_J(self, pt: TangentPoint) -> np.ndarray:
        """J as a real 2n x 2n matrix on the chart (x, v)."""
        n = self.dim
        gam_s, b = self.gamma_b(pt)
        det = np.linalg.det(b)
        if abs(det) < 1e-12:
            raise SingularStructureError(det)
        base_gam = self.jets.base.gamma_at(pt.x).real
        m_conn = np.einsum("ija,j->ai", base_gam, pt.v)   # M[a, i] = Gamma^a_{iv}
        drop = m_conn + gam_s                             # alpha(u) = (u, -drop u)
        binv = np.linalg.inv(b)
        j = np.zeros((2 * n, 2 * n))
        # J(u, w) = -alpha[B^{-1}(w + drop u)] + (0, B u)
        top_u = -binv @ drop
        j[:n, :n] = top_u
        j[n:, :n] = drop @ binv @ drop + b
        j[:n, n:] = -binv
        j[n:, n:] = drop @ binv
        return j

    def psi_leaf_differentials(self, metric: Metric, eta: TangentPoint,
                               t0: float, s0: float, h: float):
        """(q, dpsi_dt, dpsi_ds) for the leaf (t, s) -> s * flow_t(eta)."""
        if t0 == 0.0:
            flow_pt = eta
        else:
            _, states = geodesic_flow(metric, eta, t0, h=h)
            flow_pt = states[-1]
        u = flow_pt.v
        q = TangentPoint(flow_pt.x, s0 * u)
        gam = metric.christoffel_at(q.x)
        dpsi_dt = np.concatenate([u, -np.einsum("ija,i,j->a", gam, u, q.v)])
        dpsi_ds = np.concatenate([np.zeros(self.dim), u])
        return q, dpsi_dt, dpsi_ds


# ---------------------------------------------------------------------------
# graded residuals
# ---------------------------------------------------------------------------

def graded_residuals(structure: TotallyRealStructure,
                     through: Optional[int] = None) -> Dict[int, TensorField]:
    """Fiber-degree components of the complexified integrability residual.

    Degree d of H -| nabla S - S -| D S + S tau + R . eta for the
    truncated section (S_m = 0 beyond the stored order K); each entry is
    tail-symmetrized over its eta slots.  By default degrees above K are
    dropped (the spec's truncation semantics); passing `through` evaluates
    any prefix of the full expansion, whose top degree is max(2K-1, 1).
    """
    jets = structure.jets
    n, K = jets.dim, jets.order
    if through is None:
        through = max(2 * K - 1, 1) if structure.complete else K
    base = jets.base
    tau = torsion(base)
    R = curvature(base)
    out: Dict[int, TensorField] = {}
    for d in range(through + 1):
        acc = TensorField.zeros(n, d + 2, True)
        if d <= K:
            acc = acc + d1(base, jets.S[d])
        for p in range(1, d + 2):
            l = d + 1 - p
            if p <= K and l <= K:
                acc = acc + wedge1(jets.S[p], jets.S[l]).scale(p)
        if d <= K and not tau.is_zero():
            # S_d(tau(x1, x2), eta^d): contract tau's output into slot 1
            term = np.tensordot(jets.S[d].comps, tau.comps, axes=([0], [2]))
            # axes: [eta_1..eta_d, a, x1, x2] -> [x1, x2, eta..., a]
            term = np.moveaxis(term, [d + 1, d + 2, d], [0, 1, d + 2])
            acc = acc + TensorField(n, d + 2, True, term)
        if d == 1:
            acc = acc + R
        out[d] = sym_tail(acc, 2) if d >= 2 else acc
    return out


def per_degree_system(structure: TotallyRealStructure) -> List[TensorField]:
    """Residual tensors of the per-degree system, degrees 0..K-1.

    degree 0: Alt2 S_1; degree 1: R' + 2i Alt2 S_2; degree k >= 2:
    Sym over the last k slots of
    d_1' S_k + sum_{p=2}^{k-1} p S_p wedge_1 S_{k-p+1} + i(k+1) Alt2 S_{k+1}.
    """
    jets = structure.jets
    if not jets.base.torsion_free:
        raise ValueError("the per-degree system needs a torsion-free base")
    n, K = jets.dim, jets.order
    exact = jets.exact
    from .jets import _i_times
    out: List[TensorField] = []
    if K >= 1:
        out.append(alt(jets.S[1], (0, 1)))
    if K >= 2:
        out.append(jets.curv + _i_times(alt(jets.S[2], (0, 1)), exact, 2))
    for k in range(2, K):
        acc = d1(jets.nabla, jets.S[k])
        for p in range(2, k):
            acc = acc + wedge1(jets.S[p], jets.S[k - p + 1]).scale(p)
        acc = acc + _i_times(alt(jets.S[k + 1], (0, 1)), exact, k + 1)
        out.append(sym_tail(acc, 2))
    return out


@dataclass
class ResidualReport:
    value: np.ndarray             # residual at the point, [x1, x2, a]
    norm: float
    graded_norms: Dict[int, float]
    dropped_degree_floor: Optional[int]   # None when nothing was dropped


def main_residual(structure: TotallyRealStructure, pt: TangentPoint,
                  full: bool = False) -> ResidualReport:
    """The complexified integrability residual at eta, graded assembly.

    full = True evaluates every degree of the truncated section's residual
    (nothing dropped); the default keeps the spec's truncation semantics
    (degrees above the jet order are dropped and the floor is reported).
    """
    if full or structure.complete:
        graded = graded_residuals(structure, through=max(2 * structure.order - 1, 1))
        floor = None
    else:
        graded = graded_residuals(structure)
        floor = structure.order + 1
    n = structure.dim
    v = pt.v.astype(complex)
    total = np.zeros((n, n, n), dtype=complex)
    norms: Dict[int, float] = {}
    for d, field in graded.items():
        t = field.evaluate(pt.x)
        for _ in range(d):
            t = contract_slot(t, v, 2)
        val = t.to_numpy() / math.factorial(d) if d >= 2 else t.to_numpy()
        total += val
        norms[d] = float(np.max(np.abs(val)))
    return ResidualReport(value=total, norm=float(np.max(np.abs(total))),
                          graded_norms=norms, dropped_degree_floor=floor)


def split_residual(structure: TotallyRealStructure, pt: TangentPoint):
    """Real/imaginary residuals of the coupled (Gamma, B) system at eta,
    assembled pointwise with matrix algebra (independent of the graded
    field identities): returns (real_part, imag_part) as [x1, x2, a] arrays.
    """
    jets = structure.jets
    n = structure.dim
    base = jets.base
    gam_s, b = structure.gamma_b(pt)
    tau0 = torsion(base).evaluate(pt.x).to_numpy()       # [i, j, a]
    r0 = curvature(base).evaluate(pt.x).to_numpy()       # [i, j, b, a]

    # nabla^{End,pi} S through the jet fields: N[x1, x2, a] = nabla_{x1} S(x2, eta^k)
    grad = np.zeros((n, n, n), dtype=complex)
    v = pt.v.astype(complex)
    for k, Sk in enumerate(jets.S):
        t = covariant_derivative(jets.base, Sk).evaluate(pt.x)
        for _ in range(k):
            t = contract_slot(t, v, 2)
        grad += t.to_numpy()
    h_contract = grad - grad.transpose(1, 0, 2)          # H -| nabla S

    # S -| D S pointwise: (S -| DS)(x1, x2) = DS(S x1) x2 - DS(S x2) x1
    s_mat = gam_s + 1j * b
    ds_cols = [structure.fiber_derivative(pt, s_mat[:, i]) for i in range(n)]
    sds = np.zeros((n, n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            sds[i, j] = ds_cols[i][:, j] - ds_cols[j][:, i]

    s_tau = np.einsum("ab,ijb->ija", s_mat, tau0)
    r_eta = np.einsum("ijba,b->ija", r0, pt.v)
    total = h_contract - sds + s_tau + r_eta
    return total.real, total.imag


def holomorphy_check(structure: TotallyRealStructure, pt: TangentPoint):
    """Residuals of B_eta . eta = eta and H_eta . eta = alpha_eta . eta.

    Equivalently sum_k S_k(eta^{k+1}) = 0: the real part is the horizontal
    defect, the imaginary part the B defect.  Returns (b_resid, gamma_resid,
    per_degree) with per_degree[k] = S_k(eta^{k+1}).
    """
    n = structure.dim
    v = pt.v.astype(complex)
    per_degree = {}
    total = np.zeros(n, dtype=complex)
    for k, Sk in enumerate(structure.jets.S):
        if k == 0:
            continue
        t = Sk.evaluate(pt.x)
        for _ in range(k + 1):
            t = contract_slot(t, v, 0)
        val = t.to_numpy()
        per_degree[k] = val
        total += val
    return total.imag, total.real, per_degree


def psi_CR_residual(structure: TotallyRealStructure, metric: Metric,
                    eta: TangentPoint, t0: float, s0: float,
                    h: float = 1e-3) -> float:
    """|J(dpsi(dt)) - dpsi(ds)| on the leaf (t,s) -> s Phi_t(eta)."""
    q, dpsi_dt, dpsi_ds = structure.psi_leaf_differentials(metric, eta, t0, s0, h)
    j = structure.eval_J(q)
    return float(np.max(np.abs(j @ dpsi_dt - dpsi_ds)))
