"""Matrix symbols, the compression ``A_F = P_H M_F |_H`` and the shift ``S_u``.

Symbol entries are *Delta-linear*: ``p + Delta q`` with ``p, q``
trigonometric polynomials.  Symbols recovered from an operator naturally
have this form (second components of model vectors are ``Delta h``), and
keeping ``Delta`` symbolic lets every product involving ``Delta^2 = 1-|u|^2``
stay exact.
"""
from dataclasses import dataclass, field

import numpy as np

from .harmonic import (
    CircleFunction, as_analytic, convolve, delta_grid,
    grid_for_order, toeplitz_block,
)
from .tolerances import TOL_OP


def _cf(x, grid_size=1024):
    if isinstance(x, CircleFunction):
        return x
    return CircleFunction.constant(complex(x), grid_size)


def _cmul(x, y):
    """Exact coefficient product of two trigonometric polynomials."""
    c, m = convolve(x.coeffs, x.order, y.coeffs, y.order)
    g = max(x.grid_size, y.grid_size, grid_for_order(m))
    return CircleFunction(c, g)


def _cadd(x, y):
    g = max(x.grid_size, y.grid_size)
    x = CircleFunction(x.coeffs, g) if x.grid_size != g else x
    y = CircleFunction(y.coeffs, g) if y.grid_size != g else y
    return x + y


@dataclass(frozen=True, eq=False)
class DeltaLinear:
    """The function ``p + Delta q`` for a fixed (implicit) ``u``."""

    p: CircleFunction
    q: CircleFunction = None

    def __post_init__(self):
        p = _cf(self.p)
        q = _cf(0.0, p.grid_size) if self.q is None else _cf(self.q, p.grid_size)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @classmethod
    def lift(cls, x):
        return x if isinstance(x, DeltaLinear) else cls(_cf(x))

    @classmethod
    def zero(cls):
        return cls(_cf(0.0))

    @property
    def is_plain(self):
        return not np.any(self.q.coeffs)

    def trimmed(self, tol=0.0):
        return DeltaLinear(self.p.trimmed(tol), self.q.trimmed(tol))

    def conj(self):
        return DeltaLinear(self.p.conj(), self.q.conj())

    def __add__(self, other):
        o = DeltaLinear.lift(other)
        return DeltaLinear(_cadd(self.p, o.p), _cadd(self.q, o.q))

    __radd__ = __add__

    def __neg__(self):
        return DeltaLinear(-self.p, -self.q)

    def __sub__(self, other):
        return self + (-DeltaLinear.lift(other))

    def __rsub__(self, other):
        return DeltaLinear.lift(other) - self

    def scale(self, s):
        return DeltaLinear(self.p * s, self.q * s)

    def mul(self, other, delta_sq):
        """Product, reducing ``Delta^2`` to the polynomial `delta_sq`."""
        o = DeltaLinear.lift(other)
        p = _cadd(_cmul(self.p, o.p), _cmul(delta_sq, _cmul(self.q, o.q)))
        q = _cadd(_cmul(self.p, o.q), _cmul(self.q, o.p))
        return DeltaLinear(p, q)

    def times_delta(self, delta_sq):
        return DeltaLinear(_cmul(delta_sq, self.q), self.p)

    def coefficients(self, delta_hat):
        """Fourier coefficients ``(c, order)``; exact when ``q = 0``.

        `delta_hat` is a CircleFunction holding the (truncated) Fourier
        series of ``Delta``.
        """
        if self.is_plain:
            return self.p.coeffs, self.p.order
        c, m = convolve(delta_hat.coeffs, delta_hat.order, self.q.coeffs, self.q.order)
        mp = self.p.order
        if mp > m:
            c = np.pad(c, mp - m)
            m = mp
        c = c.copy()
        c[m - mp:m + mp + 1] += self.p.coeffs
        return c, m

    def grid_values(self, delta_values):
        g = delta_values.size
        return _values_on(self.p, g) + delta_values * _values_on(self.q, g)

    def to_json(self):
        return {"p": self.p.to_json(), "q": self.q.to_json()}

    @classmethod
    def from_json(cls, obj, grid_size=1024):
        if isinstance(obj, dict):
            return cls(CircleFunction.from_json(obj["p"], grid_size),
                       CircleFunction.from_json(obj.get("q", [[0.0, 0.0]]), grid_size))
        return cls(CircleFunction.from_json(obj, grid_size))

    def __repr__(self):
        return f"DeltaLinear(p order {self.p.order}, q order {self.q.order})"


def _values_on(f, g):
    """Samples of `f` on the `g`-point grid."""
    if 4 * f.order + 1 <= g:
        return CircleFunction(f.coeffs, g).values
    z = np.exp(2j * np.pi * np.arange(g) / g)
    return f(z)


@dataclass(frozen=True, eq=False)
class SymbolMatrix:
    """Symbol ``F = [[a, b], [c, d]]`` with Delta-linear entries."""

    a: DeltaLinear
    b: DeltaLinear
    c: DeltaLinear
    d: DeltaLinear
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, DeltaLinear.lift(getattr(self, name)))

    @classmethod
    def diag(cls, a, d):
        return cls(a, 0.0, 0.0, d)

    @classmethod
    def identity(cls):
        return cls.diag(1.0, 1.0)

    @classmethod
    def zero(cls):
        return cls(0.0, 0.0, 0.0, 0.0)

    def entries(self):
        return self.a, self.b, self.c, self.d

    def adjoint(self):
        """``F* = [[conj a, conj c], [conj b, conj d]]``."""
        return SymbolMatrix(self.a.conj(), self.c.conj(), self.b.conj(), self.d.conj())

    def __add__(self, other):
        return SymbolMatrix(*(x + y for x, y in zip(self.entries(), other.entries())))

    def __sub__(self, other):
        return SymbolMatrix(*(x - y for x, y in zip(self.entries(), other.entries())))

    def __neg__(self):
        return SymbolMatrix(*(-x for x in self.entries()))

    def scale(self, s):
        return SymbolMatrix(*(x.scale(s) for x in self.entries()))

    def trimmed(self, tol=0.0):
        return SymbolMatrix(*(x.trimmed(tol) for x in self.entries()), meta=dict(self.meta))

    def grid_values(self, u, grid_size):
        """Entries sampled on the `grid_size` grid, as a (2, 2, G) array."""
        dv = delta_grid(as_analytic(u), grid_size)
        return np.array([[self.a.grid_values(dv), self.b.grid_values(dv)],
                         [self.c.grid_values(dv), self.d.grid_values(dv)]])

    def to_json(self):
        out = {"grid_size": self.a.p.grid_size}
        for name in "abcd":
            e = getattr(self, name)
            out[name] = e.p.to_json()
            if not e.is_plain:
                out[name + "_delta"] = e.q.to_json()
        return out

    @classmethod
    def from_json(cls, obj):
        g = int(obj.get("grid_size", 1024))
        ents = []
        for name in "abcd":
            p = CircleFunction.from_json(obj.get(name, [[0.0, 0.0]]), g)
            q = CircleFunction.from_json(obj.get(name + "_delta", [[0.0, 0.0]]), g)
            ents.append(DeltaLinear(p, q))
        return cls(*ents)


# -- compression -------------------------------------------------------


def effective_functions(space, F):
    """The four functions acting on raw coordinates.

    With ``x = f (+) Delta h`` the pairing of ``M_F x`` against the basis
    needs ``a f + (b Delta) h`` on exponents ``0..N`` and
    ``(c Delta) f + (d Delta^2) h`` on ``-N..N``.
    """
    dsq = space.delta_sq
    a = F.a
    b = F.b.times_delta(dsq)
    c = F.c.times_delta(dsq)
    d = F.d.times_delta(dsq).times_delta(dsq)
    return a, b, c, d


def pairing_matrix(space, F):
    """Raw-to-pairing matrix of ``M_F``."""
    N = space.N
    dh = space.delta
    a, b, c, d = (e.coefficients(dh) for e in effective_functions(space, F))
    top = np.hstack([toeplitz_block(*a, (0, N), (0, N)), toeplitz_block(*b, (0, N), (-N, N))])
    bot = np.hstack([toeplitz_block(*c, (-N, N), (0, N)), toeplitz_block(*d, (-N, N), (-N, N))])
    return np.vstack([top, bot])


def compress_symbol(space, F):
    """Matrix of ``A_F`` in the orthonormal basis of `space`."""
    E = space.onb
    return E.conj().T @ pairing_matrix(space, F) @ E


def rank_one(x, y):
    """Matrix of ``x (x) y : z -> <z, y> x``."""
    x = getattr(x, "coords", x)
    y = getattr(y, "coords", y)
    return np.outer(x, np.conj(y))


def shift_symbol():
    chi = CircleFunction.monomial(1)
    return SymbolMatrix.diag(chi, chi)


def build_Su(space):
    return compress_symbol(space, shift_symbol())


def build_Xmu(space, mu, S=None):
    """``X_mu = S_u + (mu + u(0)) k0 (x) ktilde0 / ||ktilde0||^2``."""
    S = build_Su(space) if S is None else S
    kt = space.ktilde0
    nrm = kt.norm() ** 2
    if nrm < 1e-10:
        raise ValueError("ktilde0 vanishes: u is not purely contractive")
    return S + (mu + space.u.at_zero) * rank_one(space.k0, kt) / nrm


def xmu_checks(space, X, mu):
    """``|| X ktilde0 - mu k0 ||`` and ``|| (X - S) P_{ktilde0^perp} ||`` on the interior."""
    S = build_Su(space)
    kt = space.ktilde0.coords
    r1 = float(np.linalg.norm(X @ kt - mu * space.k0.coords))
    J = space.interior_without(kt)
    r2 = float(np.linalg.norm((X - S) @ J, 2)) if J.size else 0.0
    return {"ktilde0_to_mu_k0": r1, "agrees_with_S_off_ktilde0": r2}


# -- commutant ---------------------------------------------------------


def commutant_symbol(space, a, c):
    """``F = [[a, 0], [Delta c, a - u c]]`` (commutes with ``S_u``)."""
    a = as_analytic(a) if not isinstance(a, CircleFunction) else a
    c = _cf(c)
    d = _cadd(a, -_cmul(space.u, c))
    return SymbolMatrix(DeltaLinear(a), DeltaLinear.zero(), DeltaLinear(_cf(0.0), c),
                        DeltaLinear(d), meta={"commutant": (a, c)})


def commutant_parts(space, F, tol=TOL_OP):
    """Return ``(a, c)`` if `F` has commutant form, else raise ValueError."""
    if "commutant" in F.meta:
        return F.meta["commutant"]
    a, c = F.a, F.c
    ok = (a.is_plain and F.b.p.l2_norm() <= tol and F.b.q.l2_norm() <= tol
          and c.p.l2_norm() <= tol and F.d.is_plain
          and a.p.is_analytic(tol))
    if ok:
        expect = _cadd(a.p, -_cmul(space.u, c.q))
        diff = _cadd(F.d.p, -expect)
        ok = diff.l2_norm() <= tol
    if not ok:
        raise ValueError("symbol is not of commutant form [[a, 0], [Delta c, a - u c]]")
    return a.p, c.q


def symbol_product(space, F, G):
    """Commutant-form product: ``a'' = a a'`` and ``c'' = a c' + a' c - u c c'``."""
    a1, c1 = commutant_parts(space, F)
    a2, c2 = commutant_parts(space, G)
    a = _cmul(a1, a2)
    c = _cadd(_cadd(_cmul(a1, c2), _cmul(a2, c1)), -_cmul(space.u, _cmul(c1, c2)))
    return commutant_symbol(space, a, c)


# -- random families ---------------------------------------------------


def random_trig(rng, order, scale=1.0, analytic=False, grid_size=1024):
    lo = 0 if analytic else -order
    n = order - lo + 1
    vals = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * scale / np.sqrt(2 * n)
    return CircleFunction.from_window(vals, lo, grid_size)


def random_symbol(rng, order=3, plain=False):
    """Band-limited symbol of degree <= `order`.

    By default the off-diagonal entries are ``Delta`` times a trigonometric
    polynomial, the form symbols recovered from operators take; with
    `plain` all four entries are trigonometric polynomials.
    """
    a, b, c, d = (random_trig(rng, order) for _ in range(4))
    if plain:
        return SymbolMatrix(a, b, c, d)
    zero = _cf(0.0)
    return SymbolMatrix(a, DeltaLinear(zero, b), DeltaLinear(zero, c), d)


def random_commutant(space, rng, order=3):
    a = random_trig(rng, order, analytic=True)
    c = random_trig(rng, order)
    return commutant_symbol(space, a, c)


def random_zero_symbol(space, rng, order=3):
    """``[[u f1 + conj(u f2), Delta conj(f2)], [Delta f1, 0]]`` for random ``f1, f2 in H^2``."""
    f1 = random_trig(rng, order, analytic=True)
    f2 = random_trig(rng, order, analytic=True)
    return zero_symbol_from(space, f1, f2)


def zero_symbol_from(space, f1, f2):
    u = space.u
    uf1 = _cmul(u, _cf(f1))
    uf2 = _cmul(u, _cf(f2))
    a = _cadd(uf1, uf2.conj())
    return SymbolMatrix(DeltaLinear(a), DeltaLinear(_cf(0.0), _cf(f2).conj()),
                        DeltaLinear(_cf(0.0), _cf(f1)), DeltaLinear.zero(),
                        meta={"zero": (f1, f2)})


def operator_to_json(M):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(M)]


def operator_from_json(rows):
    arr = np.array(rows, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


__all__ = [
    "DeltaLinear", "SymbolMatrix", "compress_symbol", "pairing_matrix", "build_Su",
    "build_Xmu", "commutant_symbol", "symbol_product", "rank_one", "random_symbol",
    "random_commutant", "random_zero_symbol", "zero_symbol_from",
]
