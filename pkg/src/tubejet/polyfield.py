"""Exact multivariate polynomial arithmetic over the complex numbers.

Every tensor field in this package stores its components as PolyScalar
values: sparse polynomials in the base-chart variables x_1..x_n, with
coefficients either

  * exact Gaussian rationals (QQi, a pair of fractions.Fraction) -- the
    "exact" mode used for identity checking, or
  * Python complex numbers -- the "float" mode.

A polynomial is a dict mapping exponent tuples to coefficients, e.g. with
dim = 2 the field (1+2i)*x1^2*x2 + 3 is {(2, 1): 1+2j, (0, 0): 3}.  The
zero polynomial is the empty dict.  Canonical form (no stored zero terms,
all exponent tuples of length dim) is enforced on construction, so dict
equality is value equality.

Values are immutable after construction and all operations are pure.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, Sequence, Tuple, Union

try:  # gmpy2 rationals are a ~10x faster drop-in for Fraction here
    from gmpy2 import mpq as _RAT
except ImportError:  # pragma: no cover
    _RAT = Fraction


def _as_rat(z):
    if type(z) is _RAT:
        return z
    try:
        return _RAT(z)
    except (TypeError, ValueError, SystemError):
        # e.g. Fraction instances backed by gmpy2.mpz integers
        num = getattr(z, "numerator", None)
        if num is None:
            raise
        return _RAT(int(num), int(z.denominator))


Exponent = Tuple[int, ...]

# Relative magnitude below which a float-mode coefficient is dropped during
# canonicalization.  Keeps monomial counts bounded across deep recursions.
FLOAT_DROP_TOL = 1e-14


class QQi:
    """Gaussian rational a + b*i with exact Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", _as_rat(re))
        object.__setattr__(self, "im", _as_rat(im))

    def __setattr__(self, name, value):
        raise AttributeError("QQi is immutable")

    @staticmethod
    def from_number(z) -> "QQi":
        if isinstance(z, QQi):
            return z
        if isinstance(z, complex):
            return QQi(Fraction(z.real), Fraction(z.imag))
        return QQi(z)

    def __add__(self, other):
        other = QQi.from_number(other)
        return QQi(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return QQi(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-QQi.from_number(other))

    def __rsub__(self, other):
        return QQi.from_number(other) + (-self)

    def __mul__(self, other):
        other = QQi.from_number(other)
        return QQi(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = QQi.from_number(other)
        den = other.re * other.re + other.im * other.im
        if den == 0:
            raise ZeroDivisionError("division by zero QQi")
        return QQi(
            (self.re * other.re + self.im * other.im) / den,
            (self.im * other.re - self.re * other.im) / den,
        )

    def conjugate(self) -> "QQi":
        return QQi(self.re, -self.im)

    def __eq__(self, other):
        other = QQi.from_number(other)
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self):
        return abs(complex(self))

    def __repr__(self):
        return f"QQi({self.re}, {self.im})"


Coeff = Union[QQi, complex]
Scalar = Union[QQi, complex, float, int, Fraction]


def imag_unit(exact: bool) -> Coeff:
    """The scalar i in the requested coefficient mode."""
    return QQi(0, 1) if exact else 1j


def as_coeff(value: Scalar, exact: bool) -> Coeff:
    if exact:
        return QQi.from_number(value)
    return complex(value)


def _is_zero_coeff(c) -> bool:
    if isinstance(c, QQi):
        return not c
    return c == 0


class PolyScalar:
    """Sparse complex polynomial in ``dim`` base variables.

    terms maps exponent tuples (length dim, non-negative ints) to nonzero
    coefficients; an empty dict is the zero polynomial.
    """

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: Dict[Exponent, Coeff] | None = None):
        self.dim = int(dim)
        self.terms = _canonicalize(self.dim, terms or {})

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "PolyScalar":
        return cls(dim, {})

    @classmethod
    def const(cls, dim: int, value: Scalar, exact: bool = False) -> "PolyScalar":
        return cls(dim, {(0,) * dim: as_coeff(value, exact)})

    @classmethod
    def variable(cls, dim: int, i: int, exact: bool = False) -> "PolyScalar":
        if not 0 <= i < dim:
            raise IndexError(f"variable index {i} out of range for dim={dim}")
        exp = [0] * dim
        exp[i] = 1
        return cls(dim, {tuple(exp): as_coeff(1, exact)})

    @classmethod
    def monomial(cls, dim: int, exponent: Sequence[int], coeff: Scalar,
                 exact: bool = False) -> "PolyScalar":
        exp = tuple(int(e) for e in exponent)
        if len(exp) != dim or any(e < 0 for e in exp):
            raise ValueError(f"bad exponent tuple {exp} for dim={dim}")
        return cls(dim, {exp: as_coeff(coeff, exact)})

    # -- ring operations ----------------------------------------------

    def _check_dim(self, other: "PolyScalar"):
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        if not isinstance(other, PolyScalar):
            return NotImplemented
        self._check_dim(other)
        terms = dict(self.terms)
        for exp, c in other.terms.items():
            acc = terms.get(exp)
            terms[exp] = c if acc is None else acc + c
        return PolyScalar(self.dim, terms)

    def __sub__(self, other):
        if not isinstance(other, PolyScalar):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return PolyScalar(self.dim, {e: -c for e, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, PolyScalar):
            self._check_dim(other)
            terms: Dict[Exponent, Coeff] = {}
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    exp = tuple(a + b for a, b in zip(e1, e2))
                    prod = c1 * c2
                    acc = terms.get(exp)
                    terms[exp] = prod if acc is None else acc + prod
            return PolyScalar(self.dim, terms)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, scalar: Scalar) -> "PolyScalar":
        if _is_zero_scalar(scalar):
            return PolyScalar.zero(self.dim)
        return PolyScalar(self.dim, {e: _coeff_scale(c, scalar)
                                     for e, c in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, PolyScalar):
            return NotImplemented
        return self.dim == other.dim and self.terms == other.terms

    # -- calculus -----------------------------------------------------

    def partial(self, i: int) -> "PolyScalar":
        """Exact formal partial derivative with respect to x_{i+1} (0-based i)."""
        if not 0 <= i < self.dim:
            raise IndexError(f"variable index {i} out of range for dim={self.dim}")
        terms: Dict[Exponent, Coeff] = {}
        for exp, c in self.terms.items():
            k = exp[i]
            if k == 0:
                continue
            new = list(exp)
            new[i] = k - 1
            terms[tuple(new)] = _coeff_scale(c, k)
        return PolyScalar(self.dim, terms)

    def evaluate(self, point: Sequence):
        """Evaluate at a point; entries may be complex numbers or QQi."""
        if len(point) != self.dim:
            raise ValueError(f"point length {len(point)} != dim {self.dim}")
        exact_pt = all(isinstance(p, (QQi, Fraction, int)) for p in point)
        total = QQi(0) if exact_pt and self._is_exact() else 0j
        for exp, c in self.terms.items():
            term = c
            for p, e in zip(point, exp):
                if e == 0:
                    continue
                base = p if exact_pt and self._is_exact() else complex(p)
                term = term * _ipow(base, e)
            total = total + (term if exact_pt and self._is_exact() else complex(term))
        return total

    # -- structure helpers ---------------------------------------------

    def _is_exact(self) -> bool:
        for c in self.terms.values():
            return isinstance(c, QQi)
        return True

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def truncate(self, max_total_degree: int) -> "PolyScalar":
        """Drop all monomials of total degree above the given bound."""
        return PolyScalar(self.dim, {e: c for e, c in self.terms.items()
                                     if sum(e) <= max_total_degree})

    def constant_term(self) -> Coeff:
        return self.terms.get((0,) * self.dim, QQi(0) if self._is_exact() else 0j)

    def real_part(self) -> "PolyScalar":
        return PolyScalar(self.dim, {e: _part(c, "re") for e, c in self.terms.items()})

    def imag_part(self) -> "PolyScalar":
        return PolyScalar(self.dim, {e: _part(c, "im") for e, c in self.terms.items()})

    def conjugate(self) -> "PolyScalar":
        return PolyScalar(self.dim, {e: c.conjugate() for e, c in self.terms.items()})

    def to_float(self) -> "PolyScalar":
        return PolyScalar(self.dim, {e: complex(c) for e, c in self.terms.items()})

    def max_coeff_abs(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def extend(self, new_dim: int, offset: int = 0) -> "PolyScalar":
        """Reinterpret in a larger variable set, shifting variables by offset."""
        if offset < 0 or offset + self.dim > new_dim:
            raise ValueError("extension does not fit the new variable range")
        pad_left = (0,) * offset
        pad_right = (0,) * (new_dim - offset - self.dim)
        return PolyScalar(new_dim, {pad_left + e + pad_right: c
                                    for e, c in self.terms.items()})

    def __repr__(self):
        if not self.terms:
            return "PolyScalar(0)"
        parts = []
        for exp in sorted(self.terms, key=lambda e: (sum(e), e)):
            mono = "*".join(f"x{i + 1}^{k}" for i, k in enumerate(exp) if k)
            c = self.terms[exp]
            parts.append(f"({c})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


def _ipow(base, e: int):
    out = base
    for _ in range(e - 1):
        out = out * base
    return out


def _part(c, which: str):
    if isinstance(c, QQi):
        return QQi(getattr(c, which))
    return complex(getattr(c, "real" if which == "re" else "imag"))


def _is_zero_scalar(s) -> bool:
    if isinstance(s, QQi):
        return not s
    return s == 0


def _coeff_scale(c, s):
    if isinstance(c, QQi):
        return c * QQi.from_number(s)
    if isinstance(s, (QQi, Fraction)):
        s = complex(s)
    return c * s


def _canonicalize(dim: int, terms: Dict[Exponent, Coeff]) -> Dict[Exponent, Coeff]:
    out: Dict[Exponent, Coeff] = {}
    float_mode = False
    for exp, c in terms.items():
        if len(exp) != dim:
            raise ValueError(f"exponent tuple {exp} has length != dim {dim}")
        if any(e < 0 for e in exp):
            raise ValueError(f"negative exponent in {exp}")
        if _is_zero_coeff(c):
            continue
        if not isinstance(c, QQi):
            float_mode = True
            c = complex(c)
        out[exp] = c
    if float_mode and out:
        top = max(abs(c) for c in out.values())
        out = {e: c for e, c in out.items() if abs(c) > FLOAT_DROP_TOL * top}
    return out


def poly_sum(polys: Iterable[PolyScalar], dim: int) -> PolyScalar:
    total = PolyScalar.zero(dim)
    for p in polys:
        total = total + p
    return total
