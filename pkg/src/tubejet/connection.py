"""Linear (possibly complex) connections on the tangent bundle of a chart.

A Connection is a Christoffel coefficient field Gamma^a_{ij}(x) stored as a
vector-valued 2-covariant TensorField with component layout [i, j, a]: first
slot is the differentiation direction, second the argument, trailing axis
the output.  Covariant derivatives, torsion, curvature, the d_1 operator,
connection deformation, parallel transport and the holonomy-based curvature
probe all live here.

Curvature convention: R(e_i, e_j) e_b = R^a_{ijb} e_a with
R^a_{ijb} = d_i Gamma^a_{jb} - d_j Gamma^a_{ib}
          + Gamma^a_{ic} Gamma^c_{jb} - Gamma^a_{jc} Gamma^c_{ib}.
The quadratic-metric origin values pin this sign choice; see metric.py.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .polyfield import PolyScalar
from .tensors import TensorField, alt, r_dot


class Connection:
    """Christoffel field Gamma^a_{ij}(x); complex coefficients allowed."""

    __slots__ = ("dim", "gamma", "torsion_free", "inverse_truncation_degree")

    def __init__(self, dim: int, gamma: TensorField):
        if gamma.dim != dim or gamma.arity != 2 or not gamma.vector_valued:
            raise ValueError("gamma must be a vector-valued 2-covariant field")
        self.dim = dim
        self.gamma = gamma
        self.torsion_free = (gamma - gamma._like(gamma.comps.swapaxes(0, 1))).is_zero()
        # set by metric.levi_civita when the inverse metric was truncated
        self.inverse_truncation_degree = None

    @classmethod
    def flat(cls, dim: int) -> "Connection":
        return cls(dim, TensorField.zeros(dim, 2, True))

    def gamma_at(self, x: Sequence) -> np.ndarray:
        """Christoffel values at a point as a complex [i, j, a] array."""
        return self.gamma.evaluate(x).to_numpy()

    def __repr__(self):
        return f"Connection(dim={self.dim}, torsion_free={self.torsion_free})"


def covariant_derivative(conn: Connection, theta: TensorField) -> TensorField:
    """Tensor covariant derivative, one extra leading covariant slot.

    (nabla theta)^a_{i,J} = d_i theta^a_J + Gamma^a_{ib} theta^b_J
                          - sum_m Gamma^b_{i j_m} theta^a_{J[j_m -> b]};
    the Gamma^a_{ib} term is absent for scalar-valued theta.
    """
    if theta.dim != conn.dim:
        raise ValueError("dimension mismatch between connection and tensor")
    n, q = conn.dim, theta.arity
    gamma = conn.gamma.comps

    parts = np.empty((n,) + theta.comps.shape, dtype=object)
    for i in range(n):
        di = theta.partial(i).comps
        parts[i] = di if di.ndim else di[()]
    total = parts

    if theta.vector_valued:
        # + Gamma^a_{ib} theta^b_J : contract theta's output with gamma slot 2
        term = np.tensordot(theta.comps, gamma, axes=([q], [1]))
        # axes [J, i, a] -> [i, J, a]
        term = np.moveaxis(term, q, 0)
        total = total + term

    for m in range(q):
        # - Gamma^b_{i j_m} theta^a_{J[j_m -> b]}
        term = np.tensordot(gamma, theta.comps, axes=([2], [m]))
        # axes [i, j_m, J-without-m..., (a)] -> put j_m back at slot m+1
        term = np.moveaxis(term, 1, m + 1)
        total = total - term

    return TensorField(n, q + 1, theta.vector_valued, total)


def torsion(conn: Connection) -> TensorField:
    """tau^a_{ij} = Gamma^a_{ij} - Gamma^a_{ji}."""
    return alt(conn.gamma, (0, 1))


def curvature(conn: Connection) -> TensorField:
    """Curvature as an End-valued 2-form, stored [i, j, b, a]."""
    n = conn.dim
    gamma = conn.gamma.comps
    deriv = np.empty((n,) + gamma.shape, dtype=object)
    for i in range(n):
        f = np.frompyfunc(lambda p, i=i: p.partial(i), 1, 1)
        deriv[i] = f(gamma)
    # quad[i, j, b, a] = Gamma^a_{ic} Gamma^c_{jb}
    quad = np.tensordot(gamma, gamma, axes=([1], [2]))   # [i, a, j, b]
    quad = quad.transpose(0, 2, 3, 1)
    total = deriv + quad
    total = total + (-total.swapaxes(0, 1))
    return TensorField(n, 3, True, total)


def second_cov(conn: Connection, theta: TensorField) -> TensorField:
    return covariant_derivative(conn, covariant_derivative(conn, theta))


def verify_curv_operator(conn: Connection, theta: TensorField):
    """Residual of Alt2 nabla^2 theta = R . theta; zero for torsion-free."""
    if not theta.vector_valued:
        raise ValueError("the curvature-operator identity needs a vector-valued tensor")
    resid = alt(second_cov(conn, theta), (0, 1)) - r_dot(curvature(conn), theta)
    return resid, resid.max_coeff_abs()


def d1(conn: Connection, a: TensorField) -> TensorField:
    """d_1 A (x1, x2, mu) = nabla_{x1} A(x2, mu) - nabla_{x2} A(x1, mu)."""
    if a.arity < 1:
        raise ValueError("d1 needs arity >= 1")
    return alt(covariant_derivative(conn, a), (0, 1))


def d1_power(conn: Connection, a: TensorField, p: int) -> TensorField:
    out = a
    for _ in range(p):
        out = d1(conn, out)
    return out


def deform(conn: Connection, s1: TensorField) -> Connection:
    """The deformed connection with Christoffel field Gamma + S1."""
    if s1.arity != 2 or not s1.vector_valued or s1.dim != conn.dim:
        raise ValueError("S1 must be a vector-valued 2-covariant field")
    return Connection(conn.dim, conn.gamma + s1)


# ---------------------------------------------------------------------------
# paths, parallel transport, holonomy
# ---------------------------------------------------------------------------

class CurvePath:
    """Polynomial path t -> x(t) in the chart with exact velocity."""

    __slots__ = ("dim", "coords", "velocity")

    def __init__(self, coords: Sequence[PolyScalar]):
        self.dim = len(coords)
        for c in coords:
            if c.dim != 1:
                raise ValueError("path coordinates must be 1-variable polynomials")
        self.coords = tuple(coords)
        self.velocity = tuple(c.partial(0) for c in coords)

    @classmethod
    def line(cls, x0: Sequence[float], x1: Sequence[float],
             exact: bool = False) -> "CurvePath":
        coords = []
        for a, b in zip(x0, x1):
            p = PolyScalar.const(1, a, exact=exact) \
                + PolyScalar.variable(1, 0, exact=exact).scale(b - a)
            coords.append(p)
        return cls(coords)

    def point(self, t: float) -> np.ndarray:
        return np.array([complex(c.evaluate((t,))) for c in self.coords])

    def speed(self, t: float) -> np.ndarray:
        return np.array([complex(c.evaluate((t,))) for c in self.velocity])

    def reversed(self) -> "CurvePath":
        """Reparametrized path s -> x(-s)."""
        flip = []
        for coord in self.coords:
            terms = {}
            for e, c in coord.terms.items():
                terms[e] = c if e[0] % 2 == 0 else -c
            flip.append(PolyScalar(1, terms))
        return CurvePath(flip)


def _transport_rhs(conn: Connection, path: CurvePath, s: float,
                   f: np.ndarray) -> np.ndarray:
    x = path.point(s)
    xdot = path.speed(s)
    g = conn.gamma.evaluate(x).to_numpy()          # [i, j, a]
    return -np.einsum("ija,i,j->a", g, xdot, f)


def parallel_transport(conn: Connection, path: CurvePath, eta0: Sequence,
                       t: float, h: float = 1e-3) -> np.ndarray:
    """Transport eta0 along the path from parameter 0 to t.

    Classical fixed-step 4th-order integration of f' + Gamma(x'(s)) f = 0;
    linear in eta0.  h > 0 is the step size along the parameter.
    """
    if h <= 0:
        raise ValueError("step size must be positive")
    f = np.array([complex(e) for e in eta0])
    if t == 0:
        return f
    steps = max(1, math.ceil(abs(t) / h))
    dt = t / steps
    s = 0.0
    for _ in range(steps):
        k1 = _transport_rhs(conn, path, s, f)
        k2 = _transport_rhs(conn, path, s + dt / 2, f + dt / 2 * k1)
        k3 = _transport_rhs(conn, path, s + dt / 2, f + dt / 2 * k2)
        k4 = _transport_rhs(conn, path, s + dt, f + dt * k3)
        f = f + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        s += dt
    return f


def transport_along_segment(conn: Connection, x0, x1, eta,
                            steps: int = 16) -> np.ndarray:
    """Transport along the straight segment x0 -> x1 with a fixed step count."""
    path = CurvePath.line(x0, x1)
    return parallel_transport(conn, path, eta, 1.0, h=1.0 / steps)


def holonomy_curvature(conn: Connection, i: int, j: int, x: Sequence,
                       eta: Sequence, h: float,
                       steps_per_leg: int = 12) -> np.ndarray:
    """Mixed second difference quotient of the parallel-transport loop.

    The loop runs along the commuting coordinate directions e_j (time t)
    then e_i (time s), back along e_j, back along e_i; the symmetric mixed
    difference over t, s = +-h estimates the curvature-field value at eta
    (raw value; any sign comparison is owned by the caller).
    """
    if i == j:
        raise ValueError("holonomy loop needs two distinct directions")
    x = np.array([float(c) for c in x])
    ei = np.zeros(len(x)); ei[i] = 1.0
    ej = np.zeros(len(x)); ej[j] = 1.0

    def loop(t: float, s: float) -> np.ndarray:
        f = np.array([complex(e) for e in eta])
        corners = [x, x + t * ej, x + t * ej + s * ei, x + s * ei, x]
        for a, b in zip(corners, corners[1:]):
            f = transport_along_segment(conn, a, b, f, steps=steps_per_leg)
        return f

    return (loop(h, h) - loop(h, -h) - loop(-h, h) + loop(-h, -h)) / (4 * h * h)


def covpar_difference(conn: Connection, path: CurvePath,
                      section: Sequence[PolyScalar], h: float) -> np.ndarray:
    """Central difference of t -> transport_t^{-1} sigma(t) at t = 0.

    section is a tuple of 1-variable polynomials giving the fiber vector
    along the path; the limit is the covariant derivative of the section at
    parameter 0.
    """
    def pulled(t):
        # integrate the transport ODE backwards from parameter t to 0
        f = np.array([complex(c.evaluate((t,))) for c in section])
        steps = 32
        dt = -t / steps
        s = t
        for _ in range(steps):
            k1 = _transport_rhs(conn, path, s, f)
            k2 = _transport_rhs(conn, path, s + dt / 2, f + dt / 2 * k1)
            k3 = _transport_rhs(conn, path, s + dt / 2, f + dt / 2 * k2)
            k4 = _transport_rhs(conn, path, s + dt, f + dt * k3)
            f = f + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            s += dt
        return f

    return (pulled(h) - pulled(-h)) / (2 * h)


def covariant_derivative_along(conn: Connection, path: CurvePath,
                               section: Sequence[PolyScalar],
                               t: float) -> np.ndarray:
    """nabla_{d/dt} sigma at parameter t, evaluated directly."""
    x = path.point(t)
    xdot = path.speed(t)
    g = conn.gamma.evaluate(x).to_numpy()
    sig = np.array([complex(c.evaluate((t,))) for c in section])
    sigdot = np.array([complex(c.partial(0).evaluate((t,))) for c in section])
    return sigdot + np.einsum("ija,i,j->a", g, xdot, sig)
