"""The fiberwise jet recursion S_k and its obstruction tensors.

Given a torsion-free base connection nabla, a symmetric deformation S_1 and
totally symmetric free tensors sigma_k, the recursion produces the Taylor
coefficients S_k of the complex section S = Gamma + iB (S_0 = i*Identity):

    S_k = (i/k) nabla' sigma_{k-1}
        + (i/(k+1)!) Sym_{2..k+1} beta_{k-1}
        + sigma_k,                       nabla' = deform(nabla, S_1),

with beta_1 = R', beta_2 = -(i/3) (nabla' R')_2 and, for k >= 3, beta_k
given either by the closed form (built from R'.sigma_r, iterated d_1 of
(nabla' R')_2 and the wedge products p S_p wedge_1 S_{r-p+1}) or by the
recursion in d_1 nabla' sigma and d_1 Sym beta; the two are independent
implementations cross-checked in the tests.  The order-k obstruction is
Circ beta_{k+1}(sigma_k).

For a metric, the specialization uses S_1 = 0, sigma = 0 and the tensors
Theta_k (Theta_2 = 2 R^g), whose tail-symmetrizations reproduce the same
S_k; its obstructions are Circ Sym_{3..k+1} Theta_k for k >= 4, the first
of which (k = 4) is proportional to
Circ Sym_{3,4,5}[3 d_1(nabla R)_2 - 2 Rtilde wedge_1 Rtilde]
= sum over pairs (j <= 3 < p) of 6 R^(j,p),  Rtilde = Sym_{2,3} R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np

from .connection import Connection, covariant_derivative, curvature, d1, deform
from .metric import Metric, levi_civita
from .polyfield import imag_unit
from .tensors import (TensorField, circ, is_symmetric, perm2, r_dot,
                      sym_tail, wedge1)


def _imag(exact: bool):
    return imag_unit(exact)


def _i_times(t: TensorField, exact: bool, factor=1) -> TensorField:
    coeff = imag_unit(exact) * factor if exact else 1j * complex(factor)
    return t.scale(coeff)


def _frac(num, den, exact: bool):
    return Fraction(num, den) if exact else num / den


@dataclass
class ObstructionEntry:
    """One obstruction record: Circ beta_{k+1}(sigma_k) for sigma-order k.

    For Riemannian jets the same tensor appears in Theta-numbering as
    Circ Sym_{3..m+1} Theta_m with m = k + 2 (stored for convenience).
    """

    order: int                    # sigma-order k (k >= 2)
    theta_order: Optional[int]    # m = k + 2 for metric-built jets, else None
    tensor: TensorField
    norm_origin: float
    norm_lattice: float
    passed: bool

    @property
    def norm(self) -> float:
        return max(self.norm_origin, self.norm_lattice)


@dataclass
class ObstructionReport:
    entries: List[ObstructionEntry]
    tolerance: float
    mode: str                     # "exact" | "float"
    sigma_provenance: str

    @property
    def all_pass(self) -> bool:
        return all(e.passed for e in self.entries)


@dataclass
class JetSequence:
    """The computed jet data up to truncation order K."""

    order: int                      # K
    base: Connection                # the torsion-free nabla
    s1: TensorField
    sigma: Dict[int, TensorField]   # user-supplied sigma_k, 2 <= k <= K
    nabla: Connection               # deform(base, S_1)
    curv: TensorField               # R^{nabla'}
    S: List[TensorField]            # S[k] for 0 <= k <= K
    beta: Dict[int, TensorField]    # beta_k for 1 <= k <= K-1
    exact: bool
    theta_list: Dict[int, TensorField] = field(default_factory=dict)
    obstructions: Optional[ObstructionReport] = None

    @property
    def dim(self) -> int:
        return self.base.dim


def _validate_sigma(dim: int, sigma: Dict[int, TensorField], K: int):
    for k, t in sigma.items():
        if not 2 <= k <= K:
            raise ValueError(f"sigma_{k} outside the truncation range 2..{K}")
        if t.dim != dim or t.arity != k + 1 or not t.vector_valued:
            raise ValueError(f"sigma_{k} must be a vector-valued {k + 1}-covariant field")
        if not is_symmetric(t, list(range(t.arity))):
            raise ValueError(f"sigma_{k} is not totally symmetric")


def _sigma_or_zero(jets_sigma: Dict[int, TensorField], k: int, dim: int) -> TensorField:
    t = jets_sigma.get(k)
    if t is None:
        return TensorField.zeros(dim, k + 1, True)
    return t


def beta_closed(jets: JetSequence, k: int) -> TensorField:
    """beta_k by the closed form; needs S_p for p <= k-1 already computed."""
    if k < 1:
        raise ValueError("beta_k defined for k >= 1")
    exact = jets.exact
    nabla, R = jets.nabla, jets.curv
    if k == 1:
        return R
    if k == 2:
        return _i_times(perm2(covariant_derivative(nabla, R)), exact,
                        _frac(-1, 3, exact))
    n = jets.dim
    sigma_prev = _sigma_or_zero(jets.sigma, k - 1, n)
    lead = _i_times(r_dot(R, sigma_prev), exact, _frac(1, k, exact))

    theta = TensorField.zeros(n, k + 2, True)
    for r in range(2, k - 1):
        term = r_dot(R, _sigma_or_zero(jets.sigma, r, n))
        for _ in range(k - r - 1):
            term = _i_times(d1(nabla, term), exact)
        theta = theta + _i_times(term, exact,
                                 _frac(math.factorial(r + 2), r + 1, exact))
    dr2 = perm2(covariant_derivative(nabla, R))
    for _ in range(k - 2):
        dr2 = _i_times(d1(nabla, dr2), exact)
    theta = theta + _i_times(dr2, exact, -2)
    for r in range(3, k + 1):
        for p in range(2, r):
            term = wedge1(jets.S[p], jets.S[r - p + 1]).scale(p)
            for _ in range(k - r):
                term = _i_times(d1(nabla, term), exact)
            theta = theta + term.scale(math.factorial(r + 1))

    tail = sym_tail(theta, 2).scale(
        _frac(1, math.factorial(k + 1) * math.factorial(k), exact))
    return lead + tail


def beta_recursive(jets: JetSequence, k: int) -> TensorField:
    """beta_k by the third-reduction recursion (cross-check path)."""
    if k < 2:
        raise ValueError("the recursion starts at beta_2")
    exact = jets.exact
    nabla, R = jets.nabla, jets.curv
    if k == 2:
        return _i_times(perm2(covariant_derivative(nabla, R)), exact,
                        _frac(-1, 3, exact))
    n = jets.dim
    prev = beta_recursive(jets, k - 1)
    sigma_prev = _sigma_or_zero(jets.sigma, k - 1, n)
    out = _i_times(d1(nabla, covariant_derivative(nabla, sigma_prev)), exact,
                   _frac(1, k, exact))
    out = out + _i_times(d1(nabla, sym_tail(prev, 1)), exact,
                         _frac(1, math.factorial(k + 1), exact))
    wedges = TensorField.zeros(n, k + 2, True)
    for p in range(2, k):
        wedges = wedges + wedge1(jets.S[p], jets.S[k - p + 1]).scale(p)
    out = out + sym_tail(wedges, 2).scale(_frac(1, math.factorial(k), exact))
    return out


def build_jets(base: Connection, s1: Optional[TensorField] = None,
               sigma: Optional[Dict[int, TensorField]] = None, K: int = 3,
               tolerance: float = 1e-9,
               lattice_points: Optional[Sequence] = None) -> JetSequence:
    """Run the recursion up to order K and evaluate the obstructions.

    base must be torsion-free, s1 symmetric, each sigma_k totally symmetric
    (all exact checks).  beta_k is stored for 1 <= k <= K-1; obstruction
    entries cover sigma-orders 2..K-2 (they need beta_{k+1}).
    """
    n = base.dim
    if not base.torsion_free:
        raise ValueError("the base connection must be torsion free")
    if s1 is None:
        s1 = TensorField.zeros(n, 2, True)
    if s1.dim != n or s1.arity != 2 or not s1.vector_valued:
        raise ValueError("S_1 must be a vector-valued 2-covariant field")
    if not is_symmetric(s1, (0, 1)):
        raise ValueError("S_1 must be symmetric")
    sigma = dict(sigma or {})
    _validate_sigma(n, sigma, K)

    exact = all(p._is_exact() for p in base.gamma.comps.flat) and \
        all(p._is_exact() for p in s1.comps.flat)
    nabla = deform(base, s1)
    R = curvature(nabla)

    S: List[TensorField] = [TensorField.identity(n, exact=exact, scalar=_imag(exact))]
    S.append(s1)
    jets = JetSequence(order=K, base=base, s1=s1, sigma=sigma, nabla=nabla,
                       curv=R, S=S, beta={}, exact=exact)
    jets.beta[1] = R
    for k in range(2, K + 1):
        sk = _i_times(sym_tail(jets.beta[k - 1], 1), exact,
                      _frac(1, math.factorial(k + 1), exact))
        sig_prev = sigma.get(k - 1)
        if sig_prev is not None:
            sk = sk + _i_times(covariant_derivative(nabla, sig_prev), exact,
                               _frac(1, k, exact))
        sig_k = sigma.get(k)
        if sig_k is not None:
            sk = sk + sig_k
        S.append(sk)
        if k <= K - 1:
            jets.beta[k] = beta_closed(jets, k)
    jets.obstructions = evaluate_obstructions(jets, tolerance, lattice_points)
    return jets


def obstruction(jets: JetSequence, k: int):
    """(tensor, norm) for the order-k obstruction Circ beta_{k+1}(sigma_k)."""
    if k + 1 not in jets.beta:
        raise ValueError(f"beta_{k + 1} not computed (K = {jets.order})")
    tensor = circ(jets.beta[k + 1])
    return tensor, _field_norm(tensor, jets.dim)


def _lattice(dim: int, size: int = 3):
    import itertools
    axis = [(-0.5 + i / (size - 1)) if size > 1 else 0.0 for i in range(size)]
    return list(itertools.product(axis, repeat=dim))


def _field_norm(t: TensorField, dim: int, lattice=None) -> float:
    pts = lattice if lattice is not None else _lattice(dim)
    origin = t.evaluate([0.0] * dim).max_abs()
    return max(origin, t.max_abs_at(pts))


def evaluate_obstructions(jets: JetSequence, tolerance: float = 1e-9,
                          lattice_points=None) -> ObstructionReport:
    entries = []
    pts = lattice_points if lattice_points is not None else _lattice(jets.dim)
    for k in range(2, jets.order - 1):
        tensor = circ(jets.beta[k + 1])
        n_origin = tensor.evaluate([0.0] * jets.dim).max_abs()
        n_lattice = tensor.max_abs_at(pts)
        tol = 0.0 if jets.exact else tolerance
        passed = (tensor.is_zero() if jets.exact
                  else max(n_origin, n_lattice) <= tol)
        entries.append(ObstructionEntry(
            order=k, theta_order=(k + 2 if jets.theta_list else None),
            tensor=tensor, norm_origin=n_origin, norm_lattice=n_lattice,
            passed=passed))
    provenance = ("all sigma_k = 0" if not jets.sigma else
                  "user sigma_k for k in " + str(sorted(jets.sigma)))
    return ObstructionReport(entries=entries, tolerance=tolerance,
                             mode="exact" if jets.exact else "float",
                             sigma_provenance=provenance)


# ---------------------------------------------------------------------------
# Riemannian specialization
# ---------------------------------------------------------------------------

def riemannian_jets(metric: Metric, K: int, degree: Optional[int] = None,
                    tolerance: float = 1e-9) -> JetSequence:
    """Jets of a metric: S_1 = 0, sigma = 0, base = Levi-Civita.

    S_k = (i/((k+1)! k!)) Sym_{2..k+1} Theta_k with Theta_2 = 2 R^g and the
    Theta recursion in iterated d_1 of (nabla R)_2 plus wedge terms; the
    consistency with build_jets is exact and asserted in the tests.
    Obstructions are Circ Sym_{3..k+1} Theta_k, 4 <= k <= K.
    """
    degree = degree if degree is not None else 2 * K + 4
    base = levi_civita(metric, degree=degree)
    exact = metric.exact
    n = metric.dim
    R = curvature(base)

    theta: Dict[int, TensorField] = {2: R.scale(2)}
    S: List[TensorField] = [TensorField.identity(n, exact=exact, scalar=_imag(exact)),
                            TensorField.zeros(n, 2, True)]
    for k in range(2, K + 1):
        th = theta[k]
        S.append(_i_times(sym_tail(th, 1), exact,
                          _frac(1, math.factorial(k + 1) * math.factorial(k), exact)))
        if k == K:
            break
        # assemble Theta_{k+1}
        m = k + 1
        dr2 = perm2(covariant_derivative(base, R))
        for _ in range(m - 3):
            dr2 = _i_times(d1(base, dr2), exact)
        nxt = _i_times(dr2, exact, -2)
        for r in range(3, m):
            for p in range(2, r):
                term = wedge1(S[p], S[r - p + 1]).scale(p)
                for _ in range(m - 1 - r):
                    term = _i_times(d1(base, term), exact)
                nxt = nxt + term.scale(math.factorial(r + 1))
        theta[m] = nxt

    jets = JetSequence(order=K, base=base, s1=S[1], sigma={}, nabla=base,
                       curv=R, S=S, beta={}, exact=exact, theta_list=theta)
    jets.beta[1] = R
    for k in range(2, K):
        jets.beta[k] = beta_closed(jets, k)
    jets.obstructions = riemannian_obstructions(jets, tolerance)
    return jets


def riemannian_obstructions(jets: JetSequence, tolerance: float = 1e-9) -> ObstructionReport:
    """Circ Sym_{3..m+1} Theta_m = 0 for 4 <= m <= K, in sigma-order keys."""
    entries = []
    pts = _lattice(jets.dim)
    for m in range(4, jets.order + 1):
        tensor = circ(sym_tail(jets.theta_list[m], 2))
        n_origin = tensor.evaluate([0.0] * jets.dim).max_abs()
        n_lattice = tensor.max_abs_at(pts)
        tol = 0.0 if jets.exact else tolerance
        passed = (tensor.is_zero() if jets.exact
                  else max(n_origin, n_lattice) <= tol)
        entries.append(ObstructionEntry(
            order=m - 2, theta_order=m, tensor=tensor,
            norm_origin=n_origin, norm_lattice=n_lattice, passed=passed))
    return ObstructionReport(entries=entries, tolerance=tolerance,
                             mode="exact" if jets.exact else "float",
                             sigma_provenance="all sigma_k = 0 (metric jets)")


@dataclass
class FirstObstruction:
    """Circ Sym_{3,4,5}[3 d1 (nabla R)_2 - 2 Rt /\\_1 Rt] plus verification
    residuals against the six-curvature-products identity."""

    tensor: TensorField            # the bracketed combination, 5 slots
    direct: TensorField            # sum of 6 R^(j,p) over 1<=j<=3 < p<=5
    identity_residual_norm: float  # |tensor - direct|, an exact-zero check
    obstruction_norm: float        # size of `direct` itself (metric equation)


def curvature_pair_sum(R: TensorField) -> TensorField:
    """sum_{1<=j<=3, 4<=p<=5} R^(j,p) with
    R^(j,p)(x1..x5) = R(x_j, x_p, R(rest)) + R(x_j, R(rest), x_p)."""
    n = R.dim
    total = TensorField.zeros(n, 5, True)
    for j in range(3):
        for p in (3, 4):
            rest = [m for m in range(5) if m not in (j, p)]
            total = total + _pair_term(R, j, p, rest)
    return total


def _pair_term(R: TensorField, j: int, p: int, rest) -> TensorField:
    """R(x_j, x_p, R(rest)) + R(x_j, R(rest), x_p) as a 5-slot field."""
    n = R.dim
    out = TensorField.zeros(n, 5, True)
    # R component layout [slot1, slot2, slot3, out]; the inner R feeds the
    # outer slot 3 (first term) or slot 2 (second term)
    t1 = np.tensordot(R.comps, R.comps, axes=([2], [3]))  # [u, w, a, r0, r1, r2]
    t2 = np.tensordot(R.comps, R.comps, axes=([1], [3]))  # [u, w, a, r0, r1, r2]
    for term in (t1, t2):
        # u -> slot j, w -> slot p, inner slots -> `rest`, output last
        moved = np.moveaxis(term, [0, 1, 3, 4, 5, 2], [j, p] + list(rest) + [5])
        out = out + TensorField(n, 5, True, moved)
    return out


def first_riemann_obstruction(metric: Metric, degree: int = 8) -> FirstObstruction:
    conn = levi_civita(metric, degree=degree)
    R = curvature(conn)
    exact = metric.exact
    dr2 = perm2(covariant_derivative(conn, R))
    rt = sym_tail(R, 1)  # Sym_{2,3} R
    bracket = d1(conn, dr2).scale(3) - wedge1(rt, rt).scale(2)
    tensor = circ(sym_tail(bracket, 2))
    direct = curvature_pair_sum(R).scale(6)
    resid = tensor - direct
    n = metric.dim
    return FirstObstruction(
        tensor=tensor, direct=direct,
        identity_residual_norm=_field_norm(resid, n),
        obstruction_norm=_field_norm(direct, n))
