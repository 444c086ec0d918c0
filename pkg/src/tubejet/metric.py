"""Riemannian metrics on a polynomial chart and the tangent-bundle forms.

Two evaluation strategies coexist deliberately:

* symbolic: the Levi-Civita Christoffel field is produced as a polynomial
  by a Neumann-series expansion of g^{-1} around g(0)^{-1}, truncated at a
  configurable total degree.  Taylor data of the result is exact through
  the truncation degree, which is what the jet recursion consumes; the
  degree is recorded on the returned Connection.
* pointwise: flows, connector and Reeb computations solve for g^{-1} at
  each point with dense linear algebra, so their tolerances are pure
  ODE/roundoff error, independent of the series truncation.

The quadratic example family g_pk = delta_pk + sum_jl c_pkjl x_j x_l (with
c symmetrized in (p,k) and (j,l)) pins the curvature sign convention: with
connection.curvature as implemented, the origin curvature reproduces the
closed form c_pkjl + c_ljkp - c_pjkl - c_lkjp, so no sign flip is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .connection import Connection, covariant_derivative
from .polyfield import PolyScalar, QQi
from .tensors import TensorField, is_symmetric

# Global curvature sign calibration: +1 reproduces the quadratic-family
# origin formula with the component convention of connection.curvature.
CURVATURE_SIGN = 1


class Metric:
    """Polynomial Riemannian metric g_ij(x) with real coefficients."""

    __slots__ = ("dim", "g", "exact")

    def __init__(self, dim: int, g: TensorField):
        if g.dim != dim or g.arity != 2 or g.vector_valued:
            raise ValueError("g must be a scalar-valued 2-covariant field")
        if not is_symmetric(g, (0, 1)):
            raise ValueError("metric must be exactly symmetric")
        self.dim = dim
        self.g = g
        self.exact = all(p._is_exact() for p in g.comps.flat)
        self._check_positive_definite_at_origin()

    def _check_positive_definite_at_origin(self):
        g0 = self.matrix_at([0.0] * self.dim)
        for k in range(1, self.dim + 1):
            if np.linalg.det(g0[:k, :k].real) <= 0:
                raise ValueError("g(0) is not positive definite")

    def matrix_at(self, x: Sequence) -> np.ndarray:
        return self.g.evaluate(x).to_numpy()

    def origin_matrix_exact(self) -> np.ndarray:
        """g(0) as a Fraction matrix (exact mode only)."""
        out = np.empty((self.dim, self.dim), dtype=object)
        for i in range(self.dim):
            for j in range(self.dim):
                c = self.g.comps[i, j].constant_term()
                out[i, j] = c.re if isinstance(c, QQi) else Fraction(c.real)
        return out

    # -- pointwise-exact Christoffel symbols ---------------------------

    def christoffel_at(self, x: Sequence) -> np.ndarray:
        """Gamma[i, j, a] at the point x, via a dense linear solve."""
        n = self.dim
        gmat = self.matrix_at(x).real
        dg = np.empty((n, n, n))
        for l in range(n):
            dg[l] = self.g.partial(l).evaluate(x).to_numpy().real
        rhs = np.empty((n, n, n))
        for i in range(n):
            for j in range(n):
                rhs[i, j] = 0.5 * (dg[i, j] + dg[j, i] - dg[:, i, j])
        flat = rhs.reshape(n * n, n).T
        gam = np.linalg.solve(gmat, flat).T.reshape(n, n, n)
        return gam

    def energy(self, pt: "TangentPoint") -> float:
        return float(pt.v @ self.matrix_at(pt.x).real @ pt.v)

    def __repr__(self):
        return f"Metric(dim={self.dim}, exact={self.exact})"


@dataclass
class TangentPoint:
    """A point (x, v) of the tangent-bundle chart."""

    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.v))):
            raise ValueError("tangent point entries must be finite")

    def chart(self) -> np.ndarray:
        return np.concatenate([self.x, self.v])


def euclidean_metric(dim: int, exact: bool = True) -> Metric:
    g = TensorField.zeros(dim, 2, False)
    for i in range(dim):
        for j in range(dim):
            g.comps[i, j] = PolyScalar.const(dim, 1 if i == j else 0, exact=exact)
    return Metric(dim, g)


def quadratic_example_metric(dim: int, coeffs=None, exact: bool = True) -> Metric:
    """delta_pk + sum_jl c_pkjl x_j x_l with default c_pkjl = (p+k)(j+l).

    Indices in the default are 1-based as usual; the coefficient table is
    symmetrized in (p,k) and in (j,l), which leaves the default unchanged.
    """
    if dim < 2:
        raise ValueError("the quadratic example needs dim >= 2")
    n = dim
    if coeffs is None:
        c = np.empty((n, n, n, n), dtype=object)
        for p in range(n):
            for k in range(n):
                for j in range(n):
                    for l in range(n):
                        c[p, k, j, l] = Fraction((p + k + 2) * (j + l + 2))
    else:
        c = np.empty((n, n, n, n), dtype=object)
        for idx in np.ndindex((n, n, n, n)):
            c[idx] = Fraction(coeffs[idx]) if exact else float(coeffs[idx])
    # enforce the (p,k) and (j,l) symmetries
    c = (c + c.transpose(1, 0, 2, 3)) * Fraction(1, 2) if exact else \
        (c + c.transpose(1, 0, 2, 3)) * 0.5
    c = (c + c.transpose(0, 1, 3, 2)) * Fraction(1, 2) if exact else \
        (c + c.transpose(0, 1, 3, 2)) * 0.5

    g = TensorField.zeros(n, 2, False)
    for p in range(n):
        for k in range(n):
            terms = {}
            if p == k:
                terms[(0,) * n] = QQi(1) if exact else 1 + 0j
            for j in range(n):
                for l in range(n):
                    exp = [0] * n
                    exp[j] += 1
                    exp[l] += 1
                    exp = tuple(exp)
                    add = QQi(c[p, k, j, l]) if exact else complex(c[p, k, j, l])
                    prev = terms.get(exp, QQi(0) if exact else 0j)
                    terms[exp] = prev + add
            g.comps[p, k] = PolyScalar(n, terms)
    return Metric(n, g)


# ---------------------------------------------------------------------------
# Levi-Civita connection (symbolic, truncated inverse)
# ---------------------------------------------------------------------------

def _fraction_inverse(mat: np.ndarray) -> np.ndarray:
    """Exact Gauss-Jordan inverse of a Fraction matrix."""
    n = mat.shape[0]
    a = [[Fraction(mat[i, j]) for j in range(n)] for i in range(n)]
    inv = [[Fraction(1) if i == j else Fraction(0) for j in range(n)]
           for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise ValueError("matrix is singular")
        a[col], a[pivot] = a[pivot], a[col]
        inv[col], inv[pivot] = inv[pivot], inv[col]
        scale = a[col][col]
        a[col] = [v / scale for v in a[col]]
        inv[col] = [v / scale for v in inv[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
                inv[r] = [v - f * w for v, w in zip(inv[r], inv[col])]
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = inv[i][j]
    return out


def _poly_matmul(a: np.ndarray, b: np.ndarray, degree: int) -> np.ndarray:
    res = np.tensordot(a, b, axes=([1], [0]))
    f = np.frompyfunc(lambda p: p.truncate(degree), 1, 1)
    return f(res)


def inverse_metric_series(metric: Metric, degree: int) -> np.ndarray:
    """g^{-1} as a polynomial matrix, exact through total degree `degree`."""
    n = metric.dim
    exact = metric.exact
    if exact:
        g0inv_num = _fraction_inverse(metric.origin_matrix_exact())
        g0inv = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                g0inv[i, j] = PolyScalar.const(n, g0inv_num[i, j], exact=True)
    else:
        g0inv_num = np.linalg.inv(metric.matrix_at([0.0] * n).real)
        g0inv = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                g0inv[i, j] = PolyScalar.const(n, g0inv_num[i, j])
    delta = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            c = metric.g.comps[i, j].constant_term()
            delta[i, j] = metric.g.comps[i, j] - PolyScalar(n, {(0,) * n: c})
    minus_a = -_poly_matmul(g0inv, delta, degree)     # -g0^{-1} Delta
    term = g0inv
    total = g0inv.copy()
    for _ in range(degree):
        term = _poly_matmul(minus_a, term, degree)
        if all(p.is_zero() for p in term.flat):
            break
        total = total + term
    return total


def levi_civita(metric: Metric, degree: int = 12) -> Connection:
    """Levi-Civita connection with polynomially truncated inverse metric.

    Gamma^a_{ij} = (1/2) g^{al} (d_i g_{jl} + d_j g_{il} - d_l g_{ij});
    the returned Christoffel field is exact through total degree `degree`
    (and exactly symmetric, hence torsion-free, at every degree).
    """
    n = metric.dim
    ginv = inverse_metric_series(metric, degree)
    dg = [metric.g.partial(l).comps for l in range(n)]
    gamma = TensorField.zeros(n, 2, True)
    half = Fraction(1, 2) if metric.exact else 0.5
    for i in range(n):
        for j in range(n):
            w = [dg[i][j, l] + dg[j][i, l] - dg[l][i, j] for l in range(n)]
            for a in range(n):
                acc = PolyScalar.zero(n)
                for l in range(n):
                    acc = acc + ginv[a, l] * w[l]
                gamma.comps[i, j, a] = acc.scale(half).truncate(degree)
    conn = Connection(n, gamma)
    conn.inverse_truncation_degree = degree
    return conn


def metric_compatibility_residual(metric: Metric, conn: Connection) -> TensorField:
    """nabla g; identically zero through the inverse-truncation degree."""
    return covariant_derivative(conn, metric.g)


# ---------------------------------------------------------------------------
# quadratic-family obstruction values
# ---------------------------------------------------------------------------

@dataclass
class QuadraticObstruction:
    """Origin curvature and the contracted obstruction arrays of the
    quadratic example family (all exact when the metric is exact)."""

    curvature_origin: np.ndarray   # [j, k, l, p] = R^p_{jkl}(0), paper order
    rho: np.ndarray                # rho[p, j, k, l, h, r]
    theta: np.ndarray              # theta[p, l1, l2, l3, l4, l5]
    theta_all_zero: bool


def rho_theta_obstruction(metric: Metric) -> QuadraticObstruction:
    from .connection import curvature
    n = metric.dim
    # Gamma exact through degree 3 pins R(0) exactly (only dGamma(0) enters)
    conn = levi_civita(metric, degree=3)
    curv = curvature(conn)
    r0 = np.frompyfunc(lambda p: p.constant_term(), 1, 1)(curv.comps)
    zero = QQi(0) if metric.exact else 0j

    def R(p, j, k, l):
        # paper component R^p_{j,k,l}
        return r0[j, k, l, p]

    rho = np.empty((n,) * 6, dtype=object)
    for p, j, k, l, h, r in np.ndindex((n,) * 6):
        acc = zero
        for s in range(n):
            acc = acc + (R(p, j, k, s) + R(p, j, s, k)) * R(s, l, h, r)
        rho[p, j, k, l, h, r] = acc

    theta = np.empty((n,) * 6, dtype=object)
    pairs = [(a, b) for a in range(3) for b in (3, 4)]
    for idx in np.ndindex((n,) * 6):
        p, ls = idx[0], idx[1:]
        acc = zero
        for a, b in pairs:
            rest = tuple(ls[m] for m in range(5) if m not in (a, b))
            acc = acc + rho[(p, ls[a], ls[b]) + rest]
        theta[idx] = acc

    all_zero = all((not t) if isinstance(t, QQi) else t == 0 for t in theta.flat)
    return QuadraticObstruction(r0, rho, theta, all_zero)


# ---------------------------------------------------------------------------
# canonical forms on the tangent-bundle chart
# ---------------------------------------------------------------------------

class ChartOneForm:
    """1-form on the 2n chart variables (x_1..x_n, v_1..v_n)."""

    __slots__ = ("n", "comps")

    def __init__(self, n: int, comps: np.ndarray):
        self.n = n
        self.comps = comps        # (2n,) object array of PolyScalar in 2n vars

    def value_at(self, pt: TangentPoint) -> np.ndarray:
        chart = pt.chart()
        return np.array([complex(p.evaluate(chart)) for p in self.comps])

    def apply(self, pt: TangentPoint, xi: np.ndarray) -> complex:
        return complex(self.value_at(pt) @ np.asarray(xi))


class ChartTwoForm:
    """2-form on the chart as an antisymmetric matrix of polynomials."""

    __slots__ = ("n", "comps")

    def __init__(self, n: int, comps: np.ndarray):
        self.n = n
        self.comps = comps        # (2n, 2n) object array

    def matrix_at(self, pt: TangentPoint) -> np.ndarray:
        chart = pt.chart()
        m = np.empty((2 * self.n, 2 * self.n), dtype=complex)
        for a in range(2 * self.n):
            for b in range(2 * self.n):
                m[a, b] = complex(self.comps[a, b].evaluate(chart))
        return m.real

    def apply(self, pt: TangentPoint, xi1, xi2) -> float:
        m = self.matrix_at(pt)
        return float(np.asarray(xi1) @ m @ np.asarray(xi2))

    def exterior_derivative_max_norm(self) -> float:
        """Max coefficient of dOmega; exactly zero since Omega = -d(theta)."""
        worst = 0.0
        for a in range(2 * self.n):
            for b in range(2 * self.n):
                for c in range(2 * self.n):
                    p = (self.comps[b, c].partial(a)
                         + self.comps[c, a].partial(b)
                         + self.comps[a, b].partial(c))
                    worst = max(worst, p.max_coeff_abs())
        return worst


def canonical_one_form(metric: Metric) -> ChartOneForm:
    """theta at (x, v) applied to (xdot, vdot) equals g_x(v, xdot)."""
    n = metric.dim
    comps = np.empty(2 * n, dtype=object)
    two_n = 2 * n
    for i in range(n):
        acc = PolyScalar.zero(two_n)
        for j in range(n):
            vj = PolyScalar.variable(two_n, n + j, exact=metric.exact)
            acc = acc + metric.g.comps[i, j].extend(two_n, 0) * vj
        comps[i] = acc
    for k in range(n):
        comps[n + k] = PolyScalar.zero(two_n)
    return ChartOneForm(n, comps)


def symplectic_form(metric: Metric) -> ChartTwoForm:
    """Omega = -d(theta) as an exact polynomial 2-form; closed by construction."""
    theta = canonical_one_form(metric)
    n = metric.dim
    comps = np.empty((2 * n, 2 * n), dtype=object)
    for a in range(2 * n):
        for b in range(2 * n):
            comps[a, b] = theta.comps[a].partial(b) - theta.comps[b].partial(a)
    return ChartTwoForm(n, comps)


# ---------------------------------------------------------------------------
# connector, geodesic flow, Reeb field
# ---------------------------------------------------------------------------

def connector(metric: Metric, pt: TangentPoint, xi) -> np.ndarray:
    """K(xdot, vdot) = vdot + Gamma_x(xdot, v): the vertical projection of a
    chart tangent vector through the Levi-Civita connection."""
    xi = np.asarray(xi, dtype=float)
    n = metric.dim
    xdot, vdot = xi[:n], xi[n:]
    gam = metric.christoffel_at(pt.x)
    return vdot + np.einsum("ija,i,j->a", gam, xdot, pt.v)


def horizontal_lift(metric: Metric, pt: TangentPoint, u) -> np.ndarray:
    """H_(x,v)(u) = (u, -Gamma_x(u, v)) in chart coordinates."""
    u = np.asarray(u, dtype=float)
    gam = metric.christoffel_at(pt.x)
    return np.concatenate([u, -np.einsum("ija,i,j->a", gam, u, pt.v)])


def verify_symplectic_connector(metric: Metric, pt: TangentPoint,
                                xi1, xi2, omega: ChartTwoForm | None = None) -> float:
    """|Omega(xi1, xi2) - [g(dpi xi1, K xi2) - g(dpi xi2, K xi1)]| at pt."""
    omega = omega if omega is not None else symplectic_form(metric)
    n = metric.dim
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    gmat = metric.matrix_at(pt.x).real
    lhs = omega.apply(pt, xi1, xi2)
    rhs = (xi1[:n] @ gmat @ connector(metric, pt, xi2)
           - xi2[:n] @ gmat @ connector(metric, pt, xi1))
    return abs(lhs - rhs)


def geodesic_vector_field(metric: Metric):
    """zeta(x, v) = (v, -Gamma_x(v, v)): the spray of the metric."""
    def zeta(pt: TangentPoint) -> np.ndarray:
        gam = metric.christoffel_at(pt.x)
        return np.concatenate([pt.v, -np.einsum("ija,i,j->a", gam, pt.v, pt.v)])
    return zeta


def geodesic_flow(metric: Metric, pt: TangentPoint, horizon: float,
                  h: float = 1e-3):
    """Fixed-step 4th-order integration of the geodesic spray.

    Returns (times, states) with states[k] the TangentPoint at times[k].
    """
    if h <= 0:
        raise ValueError("step size must be positive")
    zeta = geodesic_vector_field(metric)

    def rhs(y):
        n = metric.dim
        return zeta(TangentPoint(y[:n], y[n:]))

    steps = max(1, math.ceil(abs(horizon) / h))
    dt = horizon / steps
    y = pt.chart()
    times = [0.0]
    states = [pt]
    for k in range(steps):
        k1 = rhs(y)
        k2 = rhs(y + dt / 2 * k1)
        k3 = rhs(y + dt / 2 * k2)
        k4 = rhs(y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        times.append((k + 1) * dt)
        n = metric.dim
        states.append(TangentPoint(y[:n], y[n:]))
    return times, states


def reeb_check(metric: Metric, pt: TangentPoint,
               omega: ChartTwoForm | None = None) -> float:
    """Solve Omega(Xi, .) = theta(.) at pt and return |Xi - (0, -v)|_inf."""
    omega = omega if omega is not None else symplectic_form(metric)
    theta = canonical_one_form(metric)
    m = omega.matrix_at(pt)
    rhs = theta.value_at(pt).real
    det = np.linalg.det(m)
    if abs(det) < 1e-12:
        raise ValueError(f"symplectic form singular at pt (|det| = {abs(det):.3e})")
    xi = np.linalg.solve(m.T, rhs)
    expected = np.concatenate([np.zeros(metric.dim), -pt.v])
    return float(np.max(np.abs(xi - expected)))
