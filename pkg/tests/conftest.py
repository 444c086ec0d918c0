"""Shared random generators for the test suite.

Exact-mode objects draw small Fraction coefficients so that identity checks
stay fast; float-mode objects mirror them with complex coefficients.
"""

from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest

from tubejet.polyfield import PolyScalar, QQi
from tubejet.tensors import PointTensor, TensorField


def rng(seed: int) -> random.Random:
    return random.Random(seed)


def rand_fraction(r: random.Random, span: int = 2, den: int = 3) -> Fraction:
    return Fraction(r.randint(-span, span), r.randint(1, den))


def rand_qqi(r: random.Random, real_only: bool = False) -> QQi:
    return QQi(rand_fraction(r), 0 if real_only else rand_fraction(r))


def rand_poly(r: random.Random, dim: int, max_degree: int = 2,
              n_terms: int = 3, exact: bool = True,
              real_only: bool = False) -> PolyScalar:
    terms = {}
    for _ in range(n_terms):
        exp = [0] * dim
        for _ in range(r.randint(0, max_degree)):
            exp[r.randrange(dim)] += 1
        c = rand_qqi(r, real_only) if exact else complex(
            r.uniform(-1, 1), 0.0 if real_only else r.uniform(-1, 1))
        exp = tuple(exp)
        terms[exp] = terms.get(exp, QQi(0) if exact else 0j) + c
    return PolyScalar(dim, terms)


def rand_field(r: random.Random, dim: int, arity: int, vector_valued: bool,
               max_degree: int = 1, exact: bool = True,
               real_only: bool = False) -> TensorField:
    t = TensorField.zeros(dim, arity, vector_valued)
    for idx in np.ndindex(t.comps.shape):
        t.comps[idx] = rand_poly(r, dim, max_degree=max_degree, n_terms=2,
                                 exact=exact, real_only=real_only)
    return t


def rand_point_tensor(r: random.Random, dim: int, arity: int,
                      vector_valued: bool, exact: bool = True) -> PointTensor:
    t = PointTensor.zeros(dim, arity, vector_valued, exact=exact)
    for idx in np.ndindex(t.comps.shape):
        t.comps[idx] = rand_qqi(r) if exact else complex(
            r.uniform(-1, 1), r.uniform(-1, 1))
    return t


def rand_symmetric_field(r: random.Random, dim: int, arity: int,
                         vector_valued: bool = True, max_degree: int = 1,
                         exact: bool = True) -> TensorField:
    """Totally symmetric in all covariant slots (used for sigma_k and S1)."""
    from tubejet.tensors import sym
    raw = rand_field(r, dim, arity, vector_valued, max_degree, exact)
    return sym(raw, list(range(arity)))


def rand_torsion_free_connection(r: random.Random, dim: int,
                                 max_degree: int = 1, exact: bool = True,
                                 real_only: bool = False):
    from tubejet.connection import Connection
    from tubejet.tensors import sym
    gamma = sym(rand_field(r, dim, 2, True, max_degree, exact, real_only),
                (0, 1))
    return Connection(dim, gamma)


def rand_metric(r: random.Random, dim: int, scale=Fraction(1, 10),
                exact: bool = True):
    """Euclidean metric plus a small random quadratic perturbation."""
    from tubejet.metric import Metric
    g = TensorField.zeros(dim, 2, False)
    for i in range(dim):
        for j in range(dim):
            p = PolyScalar.const(dim, 1 if i == j else 0, exact=exact)
            g.comps[i, j] = p
    for i in range(dim):
        for j in range(i, dim):
            pert = rand_poly(r, dim, max_degree=2, n_terms=2, exact=exact,
                             real_only=True).scale(scale if exact else float(scale))
            # keep g(0) = identity so positive-definiteness is automatic
            pert = pert - PolyScalar.const(dim, pert.constant_term(), exact=False) \
                if not exact else pert - PolyScalar(dim, {(0,) * dim: pert.constant_term()})
            g.comps[i, j] = g.comps[i, j] + pert
            if j != i:
                g.comps[j, i] = g.comps[j, i] + pert
    return Metric(dim, g)


def sample_points(r: random.Random, dim: int, count: int = 10,
                  box: float = 0.5):
    return [tuple(r.uniform(-box, box) for _ in range(dim))
            for _ in range(count)]
