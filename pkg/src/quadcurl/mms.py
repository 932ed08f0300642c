"""Closed-form manufactured solution and its exact derivatives.

The potential is ``phi = sin^3(pi x1) sin^3(pi x2) sin^3(pi x3)`` and the
velocity is ``u = curl (0, 0, phi)``.  Expanding ``sin^3 t = (3 sin t -
sin 3t) / 4`` turns every field into a finite sum of separable products of
``sin(m pi t)`` / ``cos(m pi t)`` factors with rational coefficients, so
derivatives of any order are exact linear recombinations: no symbolic algebra
and no finite differences anywhere.  Coefficients are kept as exact rationals
times an integer power of pi, which makes identities like ``div f = 0`` cancel
to literal zero instead of rounding noise.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

SIN, COS = 0, 1


class UnsupportedOrder(Exception):
    """Derivative order above what the series interface guarantees."""


class TrigSeries1D:
    """Finite series sum_m a_m sin(m pi t) / cos(m pi t) with exact coefficients.

    ``terms`` maps ``(kind, m)`` to a Fraction; the whole series carries a
    common integer power of pi (bumped by one per derivative, which tracks the
    derivative order).
    """

    __slots__ = ("terms", "pi_power")

    def __init__(self, terms=None, pi_power=0):
        self.terms = dict(terms or {})
        self.pi_power = pi_power

    @classmethod
    def sin_cubed(cls):
        """sin^3(pi t) = (3/4) sin(pi t) - (1/4) sin(3 pi t)."""
        return cls({(SIN, 1): Fraction(3, 4), (SIN, 3): Fraction(-1, 4)})

    def differentiate(self):
        out = {}
        for (kind, m), c in self.terms.items():
            if kind == SIN:
                key, coef = (COS, m), c * m
            else:
                key, coef = (SIN, m), -c * m
            out[key] = out.get(key, Fraction(0)) + coef
        return TrigSeries1D({k: v for k, v in out.items() if v != 0},
                            self.pi_power + 1)

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for (kind, m), c in self.terms.items():
            arg = m * np.pi * t
            out += float(c) * (np.sin(arg) if kind == SIN else np.cos(arg))
        return out * math.pi**self.pi_power


class TrigField:
    """Scalar field: finite sum of separable sin/cos products over the axes.

    ``terms`` maps a key triple ``((kind, m), (kind, m), (kind, m))`` to a
    Fraction; ``pi_power`` is shared by all terms (fields assembled here are
    homogeneous in differentiation order).
    """

    __slots__ = ("terms", "pi_power")

    def __init__(self, terms=None, pi_power=0):
        self.terms = dict(terms or {})
        self.pi_power = pi_power

    @classmethod
    def separable(cls, s1, s2, s3):
        terms = {}
        for k1, c1 in s1.terms.items():
            for k2, c2 in s2.terms.items():
                for k3, c3 in s3.terms.items():
                    terms[(k1, k2, k3)] = c1 * c2 * c3
        return cls(terms, s1.pi_power + s2.pi_power + s3.pi_power)

    @property
    def is_zero(self):
        return not self.terms

    def partial(self, axis):
        out = {}
        for key, c in self.terms.items():
            kind, m = key[axis]
            if kind == SIN:
                nk, coef = (COS, m), c * m
            else:
                nk, coef = (SIN, m), -c * m
            nkey = list(key)
            nkey[axis] = nk
            nkey = tuple(nkey)
            out[nkey] = out.get(nkey, Fraction(0)) + coef
        return TrigField({k: v for k, v in out.items() if v != 0},
                         self.pi_power + 1)

    def derivative(self, alpha):
        f = self
        for axis, order in enumerate(alpha):
            for _ in range(order):
                f = f.partial(axis)
        return f

    def __neg__(self):
        return TrigField({k: -v for k, v in self.terms.items()}, self.pi_power)

    def __add__(self, other):
        if other.is_zero:
            return self
        if self.is_zero:
            return other
        if self.pi_power != other.pi_power:
            raise ValueError("cannot combine series of different pi powers")
        out = dict(self.terms)
        for k, v in other.terms.items():
            s = out.get(k, Fraction(0)) + v
            if s == 0:
                out.pop(k, None)
            else:
                out[k] = s
        return TrigField(out, self.pi_power)

    def __sub__(self, other):
        return self + (-other)

    def eval(self, x, y, z):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        out = np.zeros(np.broadcast(x, y, z).shape)
        if not self.terms:
            return out
        cache = {}

        def basis(axis, kind, m, t):
            key = (axis, kind, m)
            if key not in cache:
                arg = m * np.pi * t
                cache[key] = np.sin(arg) if kind == SIN else np.cos(arg)
            return cache[key]

        for (k1, k2, k3), c in self.terms.items():
            out += float(c) * (basis(0, *k1, x) * basis(1, *k2, y)
                               * basis(2, *k3, z))
        return out * math.pi**self.pi_power


class VectorTrigField:
    """Three-component field of TrigFields."""

    __slots__ = ("comps",)

    def __init__(self, comps):
        self.comps = tuple(comps)

    def curl(self):
        c0, c1, c2 = self.comps
        return VectorTrigField((
            c2.partial(1) - c1.partial(2),
            c0.partial(2) - c2.partial(0),
            c1.partial(0) - c0.partial(1),
        ))

    def div(self):
        return (self.comps[0].partial(0) + self.comps[1].partial(1)
                + self.comps[2].partial(2))

    def laplacian(self):
        out = []
        for c in self.comps:
            out.append(c.partial(0).partial(0) + c.partial(1).partial(1)
                       + c.partial(2).partial(2))
        return VectorTrigField(out)

    def eval(self, pts):
        pts = np.asarray(pts, dtype=float)
        x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
        return np.stack([c.eval(x, y, z) for c in self.comps], axis=-1)


def eval_derivative(field, alpha, pts):
    """Exact series derivative d^alpha of a scalar TrigField at points.

    Raises UnsupportedOrder for total order above 3 (nothing in the scheme
    needs more, and the guarantee is part of the interface).
    """
    if sum(alpha) > 3:
        raise UnsupportedOrder(f"derivative order {alpha} exceeds 3")
    pts = np.asarray(pts, dtype=float)
    d = field.derivative(alpha)
    return d.eval(pts[..., 0], pts[..., 1], pts[..., 2])


class ExactFields:
    """The manufactured solution bundle: u, curl u, grad curl u, laplacian of
    curl u, the load f = -curl(laplacian(curl u)), and cached partials of
    curl u needed by the corrected interpolation."""

    def __init__(self):
        s = TrigSeries1D.sin_cubed()
        self.phi = TrigField.separable(s, s, s)
        zero = TrigField()
        # u = curl (0, 0, phi) = (d phi/dx2, -d phi/dx1, 0)
        self.u = VectorTrigField((self.phi.partial(1), -self.phi.partial(0),
                                  zero))
        self.curl_u = self.u.curl()
        self.delta_curl_u = self.curl_u.laplacian()
        self.f = VectorTrigField(tuple(-c for c in self.delta_curl_u.curl().comps))
        self.grad_curl_u = tuple(tuple(c.partial(j) for j in range(3))
                                 for c in self.curl_u.comps)
        self._curl_partial_cache = {}

    # -- vectorized callables ------------------------------------------------

    def u_value(self, pts):
        return self.u.eval(pts)

    def curl_u_value(self, pts):
        return self.curl_u.eval(pts)

    def grad_curl_u_value(self, pts):
        """Jacobian of curl u: shape (..., 3, 3), entry [i, j] = d(curl u)_i / dx_j."""
        pts = np.asarray(pts, dtype=float)
        x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
        rows = [np.stack([g.eval(x, y, z) for g in row], axis=-1)
                for row in self.grad_curl_u]
        return np.stack(rows, axis=-2)

    def delta_curl_u_value(self, pts):
        return self.delta_curl_u.eval(pts)

    def f_value(self, pts):
        return self.f.eval(pts)

    def curl_u_partial(self, comp, alpha):
        """Series for d^alpha (curl u)_comp, cached."""
        key = (comp, tuple(alpha))
        if key not in self._curl_partial_cache:
            self._curl_partial_cache[key] = self.curl_u.comps[comp].derivative(alpha)
        return self._curl_partial_cache[key]

    # -- interpolation protocol (duck-typed against quadcurl.interp) ---------

    def value(self, pts):
        return self.u.eval(pts)

    def curl_value(self, pts):
        return self.curl_u.eval(pts)

    def curl_d2(self, comp, axis, pts):
        """Second partial of (curl u)_comp along ``axis`` at points."""
        alpha = [0, 0, 0]
        alpha[axis] = 2
        pts = np.asarray(pts, dtype=float)
        return self.curl_u_partial(comp, tuple(alpha)).eval(
            pts[..., 0], pts[..., 1], pts[..., 2])

    def curl_as_field(self):
        """curl u as a standalone field (value + second partials), the input
        shape expected by W-type interpolation."""
        outer = self

        class _CurlField:
            def value(self, pts):
                return outer.curl_u_value(pts)

            def d2(self, comp, axis, pts):
                return outer.curl_d2(comp, axis, pts)

        return _CurlField()


def build_exact_fields():
    """Construct the manufactured solution bundle."""
    return ExactFields()
