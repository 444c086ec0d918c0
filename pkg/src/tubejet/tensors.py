"""Pointwise and field-level multilinear algebra.

Covariant tensors are stored densely in numpy object arrays: the first
``arity`` axes are the covariant slots, and vector-valued tensors carry one
extra trailing output axis.  An End-valued p-form is stored as a
vector-valued (p+1)-covariant tensor whose LAST covariant slot is the
operator-argument slot; this convention is fixed globally (see
END_SLOT_CONVENTION).

Components are PolyScalar for fields over the base chart and complex/QQi
numbers for pointwise values.  The slot operators (sym, alt, circ, perm2)
are the unnormalized ones: plain sums over permutations, no factorial
division.  All factorial constants appear explicitly in the formulas that
use them.

Slot indices in this module are 0-based.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Sequence

import numpy as np

from .polyfield import QQi, PolyScalar, _coeff_scale, imag_unit

END_SLOT_CONVENTION = (
    "An End(CT_M)-valued p-form is stored as a vector-valued (p+1)-covariant "
    "tensor whose last covariant slot is the operator-argument slot."
)


def _omap(f, arr: np.ndarray) -> np.ndarray:
    """Elementwise map over an object array, preserving 0-d shapes."""
    res = np.frompyfunc(f, 1, 1)(arr)
    if not isinstance(res, np.ndarray):
        out = np.empty((), dtype=object)
        out[()] = res
        return out
    return res


class ObstructionError(ValueError):
    """Raised when a required circular/kernel condition fails.

    Carries the residual norm of the violated condition.
    """

    def __init__(self, message: str, norm: float):
        super().__init__(f"{message} (residual norm {norm:.3e})")
        self.norm = norm


class _TensorBase:
    __slots__ = ("dim", "arity", "vector_valued", "comps")

    def __init__(self, dim: int, arity: int, vector_valued: bool,
                 comps: np.ndarray):
        expected = (dim,) * arity + ((dim,) if vector_valued else ())
        if comps.shape != expected:
            raise ValueError(f"component shape {comps.shape} != {expected}")
        self.dim = dim
        self.arity = arity
        self.vector_valued = vector_valued
        self.comps = comps

    # number of axes of the component array
    @property
    def naxes(self) -> int:
        return self.arity + (1 if self.vector_valued else 0)

    def _like(self, comps: np.ndarray, arity: int | None = None,
              vector_valued: bool | None = None):
        return type(self)(
            self.dim,
            self.arity if arity is None else arity,
            self.vector_valued if vector_valued is None else vector_valued,
            comps,
        )

    def _check_compatible(self, other: "_TensorBase"):
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        if type(self) is not type(other):
            raise TypeError("cannot mix point tensors and tensor fields")

    def __add__(self, other):
        self._check_compatible(other)
        if self.comps.shape != other.comps.shape or self.vector_valued != other.vector_valued:
            raise ValueError("shape mismatch in tensor addition")
        return self._like(self.comps + other.comps)

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, scalar):
        return self._like(_omap(lambda c: _scale_entry(c, scalar), self.comps))

    def __eq__(self, other):
        if not isinstance(other, _TensorBase):
            return NotImplemented
        return (type(self) is type(other) and self.dim == other.dim
                and self.arity == other.arity
                and self.vector_valued == other.vector_valued
                and bool(np.all(self.comps == other.comps)))

    def __repr__(self):
        kind = "vector" if self.vector_valued else "scalar"
        return (f"{type(self).__name__}(dim={self.dim}, arity={self.arity}, "
                f"valued={kind})")


def _scale_entry(c, scalar):
    if isinstance(c, PolyScalar):
        return c.scale(scalar)
    return _coeff_scale(c, scalar)


class PointTensor(_TensorBase):
    """Covariant multilinear form with numeric components at one point."""

    @classmethod
    def zeros(cls, dim: int, arity: int, vector_valued: bool,
              exact: bool = False) -> "PointTensor":
        shape = (dim,) * arity + ((dim,) if vector_valued else ())
        fill = QQi(0) if exact else 0j
        comps = np.empty(shape, dtype=object)
        comps[...] = fill
        return cls(dim, arity, vector_valued, comps)

    def to_numpy(self) -> np.ndarray:
        return np.vectorize(complex, otypes=[complex])(self.comps) \
            if self.comps.size else np.zeros(self.comps.shape, dtype=complex)

    def max_abs(self) -> float:
        if self.comps.size == 0:
            return 0.0
        return float(np.max(np.vectorize(abs, otypes=[float])(self.comps)))

    def is_zero(self) -> bool:
        return all(_entry_is_zero(c) for c in self.comps.flat)


class TensorField(_TensorBase):
    """Covariant multilinear form with PolyScalar components over the chart."""

    @classmethod
    def zeros(cls, dim: int, arity: int, vector_valued: bool,
              exact: bool = False) -> "TensorField":
        shape = (dim,) * arity + ((dim,) if vector_valued else ())
        comps = np.empty(shape, dtype=object)
        comps[...] = PolyScalar.zero(dim)
        del exact  # coefficient mode is fixed by whatever gets stored later
        return cls(dim, arity, vector_valued, comps)

    @classmethod
    def identity(cls, dim: int, exact: bool = False,
                 scalar=1) -> "TensorField":
        """The identity of T_M as a vector-valued 1-covariant field, scaled."""
        t = cls.zeros(dim, 1, True)
        for j in range(dim):
            t.comps[j, j] = PolyScalar.const(dim, scalar, exact=exact)
        return t

    def evaluate(self, point: Sequence) -> PointTensor:
        return PointTensor(self.dim, self.arity, self.vector_valued,
                           _omap(lambda p: p.evaluate(point), self.comps))

    def partial(self, i: int) -> "TensorField":
        return self._like(_omap(lambda p: p.partial(i), self.comps))

    def truncate(self, max_total_degree: int) -> "TensorField":
        return self._like(_omap(lambda p: p.truncate(max_total_degree), self.comps))

    def real_part(self) -> "TensorField":
        return self._like(_omap(lambda p: p.real_part(), self.comps))

    def imag_part(self) -> "TensorField":
        return self._like(_omap(lambda p: p.imag_part(), self.comps))

    def to_float(self) -> "TensorField":
        return self._like(_omap(lambda p: p.to_float(), self.comps))

    def is_zero(self) -> bool:
        return all(p.is_zero() for p in self.comps.flat)

    def max_coeff_abs(self) -> float:
        return max((p.max_coeff_abs() for p in self.comps.flat), default=0.0)

    def max_abs_at(self, points: Iterable[Sequence]) -> float:
        return max(self.evaluate(x).max_abs() for x in points)


def _entry_is_zero(c) -> bool:
    if isinstance(c, QQi):
        return not c
    return c == 0


# ---------------------------------------------------------------------------
# slot operators (unnormalized)
# ---------------------------------------------------------------------------

def _check_slots(t: _TensorBase, slots: Sequence[int]):
    if len(set(slots)) != len(slots):
        raise ValueError(f"repeated slot in {slots}")
    for s in slots:
        if not 0 <= s < t.arity:
            raise ValueError(f"slot {s} out of range for arity {t.arity}")


def _slot_transpose(t: _TensorBase, images: Sequence[int],
                    slots: Sequence[int]) -> np.ndarray:
    axes = list(range(t.comps.ndim))
    for s, img in zip(slots, images):
        axes[s] = img
    return t.comps.transpose(axes)


def sym(t, slots: Sequence[int]):
    """Sum over all permutations of the listed slots; no normalization."""
    _check_slots(t, slots)
    total = None
    for images in itertools.permutations(slots):
        term = _slot_transpose(t, images, slots)
        total = term.copy() if total is None else total + term
    return t._like(total)


def sym_tail(t, start: int):
    """sym over slots start..arity-1 (the everything-after-a-prefix case)."""
    return sym(t, list(range(start, t.arity)))


def _parity(images: Sequence[int], slots: Sequence[int]) -> int:
    order = [slots.index(i) for i in images]
    sign = 1
    for a in range(len(order)):
        for b in range(a + 1, len(order)):
            if order[a] > order[b]:
                sign = -sign
    return sign


def alt(t, slots: Sequence[int]):
    """Signed sum over all permutations of the listed slots."""
    _check_slots(t, slots)
    slots = list(slots)
    total = None
    for images in itertools.permutations(slots):
        term = _slot_transpose(t, images, slots)
        if _parity(images, slots) < 0:
            term = -term
        total = term.copy() if total is None else total + term
    return t._like(total)


def circ(t, start: int = 0):
    """Cyclic sum over three consecutive slots (default: the first three)."""
    if t.arity < start + 3:
        raise ValueError(f"circ needs three slots from {start}, arity {t.arity}")
    s = (start, start + 1, start + 2)
    a = _slot_transpose(t, (s[1], s[2], s[0]), s)
    b = _slot_transpose(t, (s[2], s[0], s[1]), s)
    return t._like(t.comps + a + b)


def perm2(t):
    """Swap the first two covariant slots."""
    if t.arity < 2:
        raise ValueError("perm2 needs arity >= 2")
    return t._like(t.comps.swapaxes(0, 1))


def is_symmetric(t, slots: Sequence[int]) -> bool:
    slots = sorted(slots)
    for a, b in zip(slots, slots[1:]):
        swapped = t._like(t.comps.swapaxes(a, b))
        if not (t - swapped).is_zero():
            return False
    return True


def is_antisymmetric(t, pair: Sequence[int]) -> bool:
    a, b = pair
    swapped = t._like(t.comps.swapaxes(a, b))
    return (t + swapped).is_zero()


# ---------------------------------------------------------------------------
# products
# ---------------------------------------------------------------------------

def _end_form_degree(a) -> int:
    if not a.vector_valued or a.arity < 1:
        raise ValueError("End-valued form must be vector-valued with arity >= 1")
    return a.arity - 1


def prod_dot(a, theta):
    """(A . theta)(u, v) = A(u) applied to the output vector of theta(v)."""
    a._check_compatible(theta)
    if not theta.vector_valued:
        raise ValueError("prod_dot needs a vector-valued second factor")
    p = _end_form_degree(a)
    q = theta.arity
    res = np.tensordot(a.comps, theta.comps, axes=([p], [q]))
    # axes now [u_1..u_p, out, v_1..v_q]; move the output axis last
    res = np.moveaxis(res, p, p + q)
    return a._like(res, arity=p + q, vector_valued=True)


def prod_contract(a, theta):
    """(A -| theta)(u, v) = sum_j theta(v_1,..,A(u).v_j,..,v_q)."""
    a._check_compatible(theta)
    if not theta.vector_valued:
        raise ValueError("prod_contract needs a vector-valued second factor")
    p = _end_form_degree(a)
    q = theta.arity
    out_arity = p + q
    if q == 0:
        # empty sum convention
        zero = (PointTensor if isinstance(a, PointTensor) else TensorField)
        return zero.zeros(a.dim, out_arity, True)
    total = None
    for j in range(q):
        # contract theta's slot j with A's output axis
        res = np.tensordot(theta.comps, a.comps, axes=([j], [a.arity]))
        # axes: [v(without j) (q-1), out, u_1..u_p, m]; m replaces v_j
        res = np.moveaxis(res, q + p, j)  # m -> slot j
        # after the move: [v-with-m (q), out, u_1..u_p]; bring u block first
        res = np.moveaxis(res, range(q + 1, q + p + 1), range(p))
        total = res if total is None else total + res
    return a._like(total, arity=out_arity, vector_valued=True)


def r_dot(r, theta):
    """R . theta = R*theta - R-|theta (derivation action of an End-valued form)."""
    return prod_dot(r, theta) - prod_contract(r, theta)


def wedge1(a, b):
    """Partial exterior product: (A /\\_1 B)(x1, x2, eta, mu) =
    A(x1, B(x2, eta), mu) - A(x2, B(x1, eta), mu)."""
    a._check_compatible(b)
    if not (a.vector_valued and b.vector_valued):
        raise ValueError("wedge1 needs vector-valued factors")
    if a.arity < 2:
        raise ValueError("wedge1: first factor needs a slot for the output of"
                         " the second (arity >= 2)")
    if b.arity < 1:
        raise ValueError("wedge1: second factor needs arity >= 1")
    na, nb = a.arity, b.arity
    res = np.tensordot(a.comps, b.comps, axes=([1], [nb]))
    # axes: [x1, mu (na-2), out, x2, eta (nb-1)]
    # target order: x1, x2, eta (nb-1), mu (na-2), out
    order = ([0, na] + list(range(na + 1, na + nb))
             + list(range(1, na - 1)) + [na - 1])
    res = res.transpose(order)
    res = res + (-res.swapaxes(0, 1))
    return a._like(res, arity=na + nb - 1, vector_valued=True)


def contract_slot(t, vec: Sequence, slot: int):
    """Contract one covariant slot with a numeric vector."""
    v = np.empty(len(vec), dtype=object)
    for i, entry in enumerate(vec):
        v[i] = entry
    res = np.tensordot(t.comps, v, axes=([slot], [0]))
    return t._like(res, arity=t.arity - 1)


# ---------------------------------------------------------------------------
# exact-sequence machinery
# ---------------------------------------------------------------------------

def preimage_constant(p: int):
    """The constant p/(p+1)! multiplying the symmetrized preimage."""
    from fractions import Fraction
    import math
    return Fraction(p, math.factorial(p + 1))


def alt2_preimage(beta, tol: float = 0.0):
    """Solve Alt2(alpha) = beta for beta with vanishing circular sum.

    beta must be antisymmetric in its first two slots and symmetric in the
    remaining ones; the obstruction Circ(beta) = 0 is checked (exactly, or
    against tol for float components) and an ObstructionError carrying the
    residual norm is raised if it fails.
    """
    p = beta.arity - 1
    if p < 2:
        raise ValueError("alt2_preimage needs arity >= 3")
    if not is_antisymmetric(beta, (0, 1)):
        raise ValueError("beta is not antisymmetric in slots 0,1")
    if beta.arity > 3 and not is_symmetric(beta, list(range(2, beta.arity))):
        raise ValueError("beta is not symmetric in its trailing slots")
    resid = circ(beta)
    norm = _residual_norm(resid)
    if not _is_negligible(resid, tol):
        raise ObstructionError("Circ(beta) != 0: no Alt2-preimage exists", norm)
    return sym_tail(beta, 1).scale(preimage_constant(p))


def altsym_curvature_solve(rho):
    """Particular solution S (symmetric in its last three slots) of
    Alt2[8 Sym_{3,4} rho - S] = 0 for rho with curvature-type symmetries.

    Hypotheses checked: rho is 4-covariant, circular in its first three and
    in its last three entries, and antisymmetric in slots 2,3 (1-based).
    """
    if rho.arity != 4:
        raise ValueError("altsym_curvature_solve expects a 4-covariant tensor")
    if not is_antisymmetric(rho, (1, 2)):
        raise ValueError("hypothesis violated: not antisymmetric in slots 2,3")
    if not circ(rho, 0).is_zero():
        raise ValueError("hypothesis violated: first-three circular sum != 0")
    if not circ(rho, 1).is_zero():
        raise ValueError("hypothesis violated: last-three circular sum != 0")
    return sym_tail(perm2(rho), 1).scale(-2)


def altsym_residual(rho, s):
    """Alt2[8 Sym_{3,4} rho - S]; zero for the solve() output."""
    return alt(sym(rho, (2, 3)).scale(8) - s, (0, 1))


def _residual_norm(t) -> float:
    if isinstance(t, TensorField):
        return t.max_coeff_abs()
    return t.max_abs()


def _is_negligible(t, tol: float) -> bool:
    if tol <= 0:
        return t.is_zero()
    return _residual_norm(t) <= tol


def imag_scale(t, exact: bool, factor=1):
    """Multiply a tensor by i*factor in the correct coefficient mode."""
    return t.scale(_coeff_scale(imag_unit(exact), factor))
