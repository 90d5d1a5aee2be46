"""Finite-order model space ``H_u = K_+ (-) G``.

Vectors of ``K_+ = H^2 (+) (Delta L^2)^-`` are stored in *raw* coordinates
``(f, h)``: the Taylor coefficients ``f_0..f_N`` of the first component and
the coefficients ``h_{-N}..h_N`` of a trigonometric polynomial ``h`` with
second component ``g = Delta h``.  In these coordinates the inner product is

    <(f, h), (f', h')> = sum_j f_j conj(f'_j) + <Delta^2 h, h'>_{L^2},

which only involves the exact polynomial ``Delta^2 = 1 - |u|^2``.  The
generators ``(u chi^j, Delta chi^j)`` of ``G`` are exact raw vectors as well.

Operators are compressed by *pairing*: for any vector ``Y = (Y1, Y2)`` of
``K``, the numbers ``<Y, e_i>`` for the orthonormal basis ``e_i`` only need
the coefficients of ``Y1`` on ``0..N`` and of ``Delta Y2`` on ``-N..N``.

Boundary effects: every identity of the infinite-dimensional model holds
exactly on the *interior* subspace, the projection of vectors with
``deg f <= B`` and ``h`` supported on ``|j| <= B`` (default ``B = N // 4``),
because their projections never reach the edge of the window.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag, null_space, toeplitz

from .harmonic import (
    AnalyticPoly, CircleFunction, as_analytic, check_purely_contractive,
    convolve, delta_from_u, grid_for_order, window,
)
from .tolerances import EPS_RANK, TOL_MEMBER, TOL_ORTH, TOL_POS, TOL_VEC


class SpaceConstructionError(ValueError):
    pass


class ModelSpace:
    """Discretised model space for a purely contractive polynomial `u`.

    Parameters
    ----------
    u : AnalyticPoly or sequence
        Characteristic function (Taylor coefficients).
    N : int
        Truncation order, at least ``deg(u) + 2``.
    grid_size : int, optional
        Grid for function samples; chosen from `N` if omitted.
    interior_band : int, optional
        Band ``B`` of the interior subspace (default ``N // 4``).
    tol_pos : float, optional
        Slack on ``|u| <= 1``; transported characteristic functions carry
        their truncation error here.
    """

    def __init__(self, u, N, grid_size=None, interior_band=None, eps_rank=EPS_RANK,
                 tol_pos=TOL_POS):
        u = as_analytic(u)
        report = check_purely_contractive(u, tol_pos=tol_pos)
        report.raise_if_failed()
        deg = u.poly_degree()
        N = int(N)
        if N < deg + 2:
            raise SpaceConstructionError(f"N = {N} must be at least deg(u) + 2 = {deg + 2}")
        g = grid_size or grid_for_order(3 * N + 2 * deg)
        self.u = AnalyticPoly(u.taylor[:deg + 1], g)
        self.N = N
        self.deg = deg
        self.grid_size = g
        self.eps_rank = eps_rank
        self.contractivity = report

        dd = delta_from_u(self.u, tol_pos=tol_pos)
        self.delta = dd.delta
        self.delta_sq = dd.delta_sq
        self.delta_residual = dd.residual
        self.inner = dd.inner

        n1, n2 = N + 1, 2 * N + 1
        self.n_first, self.n_second = n1, n2
        col = window(self.delta_sq.coeffs, self.delta_sq.order, 0, 2 * N)
        row = np.conj(col)
        self.gram_second = toeplitz(col, row)
        self.gram = block_diag(np.eye(n1), self.gram_second)

        # whitening of K_+^(N): ambient coordinates are Euclidean
        lam, vec = np.linalg.eigh(self.gram_second)
        keep = lam > eps_rank
        self.second_rank = int(keep.sum())
        whiten2 = vec[:, keep] / np.sqrt(lam[keep])
        self._whiten = block_diag(np.eye(n1), whiten2) if keep.any() else \
            np.vstack([np.eye(n1), np.zeros((n2, n1))])

        n_gen = N - deg + 1
        gens = np.zeros((n1 + n2, n_gen), dtype=complex)
        for j in range(n_gen):
            gens[j:j + deg + 1, j] = self.u.taylor
            gens[n1 + N + j, j] = 1.0
        self.generators = gens

        gamma = self._whiten.conj().T @ self.gram @ gens
        q = null_space(gamma.conj().T, rcond=eps_rank)
        if q.shape[1] == 0:
            raise SpaceConstructionError("model space collapsed to dimension 0")
        self.onb = self._whiten @ q
        self.dim = q.shape[1]

        self.interior_band = N // 4 if interior_band is None else int(interior_band)
        self.interior = self._interior_basis(self.interior_band)
        self.k0, self.ktilde0 = self._special_vectors()

    # -- raw coordinates ----------------------------------------------

    def raw(self, f=None, h=None):
        """Raw coordinate vector of ``f (+) Delta h``.

        Negative frequencies of `f` are dropped (they are orthogonal to
        ``K_+``); anything beyond the window raises.
        """
        N = self.N
        x = np.zeros(self.n_first + self.n_second, dtype=complex)
        if f is not None:
            f = _as_cf(f, self.grid_size)
            if f.degree(tol=0.0) > N:
                raise SpaceConstructionError("first component exceeds the window 0..N")
            x[:self.n_first] = f.window(0, N)
        if h is not None:
            h = _as_cf(h, self.grid_size)
            if h.order > N and np.any(np.abs(h.coeffs[:h.order - N]) > 0) | \
                    np.any(np.abs(h.coeffs[h.order + N + 1:]) > 0):
                raise SpaceConstructionError("second component exceeds the window -N..N")
            x[self.n_first:] = h.window(-N, N)
        return x

    def split(self, raw):
        """``(f, h)`` as CircleFunctions from a raw vector."""
        f = AnalyticPoly(raw[:self.n_first], self.grid_size)
        h = CircleFunction(raw[self.n_first:], self.grid_size)
        return f, h

    def raw_inner(self, x, y):
        return complex(np.vdot(y, self.gram @ x))

    def pairing_vector(self, first=None, delta_moment=None):
        """Vector ``p`` with ``<Y, x> = x^H p`` for raw `x`.

        `first` is the first component of ``Y`` and `delta_moment` the
        function ``Delta * Y2``; each a CircleFunction or a ``(coeffs, order)``
        pair of any width.
        """
        N = self.N
        p = np.zeros(self.n_first + self.n_second, dtype=complex)
        if first is not None:
            c, m = _coeffs(first)
            p[:self.n_first] = window(c, m, 0, N)
        if delta_moment is not None:
            c, m = _coeffs(delta_moment)
            p[self.n_first:] = window(c, m, -N, N)
        return p

    def pairing_of_pair(self, f=None, h=None):
        """Pairing vector of ``f (+) Delta h`` for functions of any width."""
        dm = None
        if h is not None:
            h = _as_cf(h, self.grid_size)
            dm = convolve(self.delta_sq.coeffs, self.delta_sq.order, h.coeffs, h.order)
        return self.pairing_vector(None if f is None else _as_cf(f, self.grid_size), dm)

    def coords_from_pairing(self, p):
        return self.onb.conj().T @ p

    def coords(self, raw):
        """Onb coordinates of the projection of a raw vector."""
        return self.onb.conj().T @ (self.gram @ raw)

    def vector(self, coords):
        return ModelVector(self, np.asarray(coords, dtype=complex))

    # -- projections --------------------------------------------------

    def project(self, f=None, h=None):
        """Orthogonal projection of ``f (+) Delta h`` onto ``H_u^(N)``."""
        return self.vector(self.coords_from_pairing(self.pairing_of_pair(f, h)))

    def project_G(self, raw):
        return self.generators @ (self.generators.conj().T @ (self.gram @ raw))

    def project_H_raw(self, raw):
        return self.onb @ self.coords(raw)

    # -- special vectors ----------------------------------------------

    def _special_vectors(self):
        u, u0 = self.u, self.u.at_zero
        one = CircleFunction.constant(1.0, self.grid_size)
        k0_raw = self.raw(one - u * np.conj(u0), CircleFunction.constant(-np.conj(u0), self.grid_size))
        kt_f = (u - u0).shift(-1)
        kt_raw = self.raw(kt_f, CircleFunction.monomial(-1, grid_size=self.grid_size))
        return self.vector(self.coords(k0_raw)), self.vector(self.coords(kt_raw))

    def special_vector_check(self):
        """Closed forms of ``k0``, ``ktilde0`` against projections.

        Returns the discrepancies and the norm errors
        ``| ||k||^2 - (1 - |u(0)|^2) |``.
        """
        u = self.u
        p_k0 = self.project(CircleFunction.constant(1.0, self.grid_size))
        p_kt = self.project(u.shift(-1), CircleFunction.monomial(-1, grid_size=self.grid_size))
        target = 1.0 - abs(u.at_zero) ** 2
        return {
            "k0_mismatch": float(np.linalg.norm(p_k0.coords - self.k0.coords)),
            "ktilde0_mismatch": float(np.linalg.norm(p_kt.coords - self.ktilde0.coords)),
            "k0_norm_error": abs(self.k0.norm() ** 2 - target),
            "ktilde0_norm_error": abs(self.ktilde0.norm() ** 2 - target),
        }

    def verify_special_vectors(self, tol=TOL_VEC):
        chk = self.special_vector_check()
        bad = {k: v for k, v in chk.items() if v > tol}
        if bad:
            raise SpaceConstructionError(f"special vectors inconsistent: {bad}")
        return chk

    # -- interior subspace --------------------------------------------

    def _interior_basis(self, band):
        N, n1 = self.N, self.n_first
        cols = [j for j in range(band + 1)] + [n1 + N + j for j in range(-band, band + 1)]
        cand = np.zeros((n1 + self.n_second, len(cols)), dtype=complex)
        cand[cols, np.arange(len(cols))] = 1.0
        c = self.onb.conj().T @ (self.gram @ cand)
        left, s, _ = np.linalg.svd(c, full_matrices=False)
        if s.size == 0 or s[0] == 0:
            return np.zeros((self.dim, 0), dtype=complex)
        return left[:, s > self.eps_rank * s[0]]

    def interior_norm(self, op):
        """``|| op Z ||_2`` with ``Z`` the interior basis."""
        return float(np.linalg.norm(op @ self.interior, 2)) if self.interior.size else 0.0

    def interior_compression_norm(self, op, basis=None):
        z = self.interior if basis is None else basis
        return float(np.linalg.norm(z.conj().T @ op @ z, 2)) if z.size else 0.0

    def interior_without(self, vec):
        """Interior basis with the direction of `vec` removed."""
        v = vec.coords if isinstance(vec, ModelVector) else vec
        z = self.interior
        v = v / np.linalg.norm(v)
        proj = z - np.outer(v, v.conj() @ z)
        left, s, _ = np.linalg.svd(proj, full_matrices=False)
        return left[:, s > 0.5]

    # -- diagnostics --------------------------------------------------

    def orthonormality_defect(self):
        return float(np.max(np.abs(self.onb.conj().T @ self.gram @ self.onb - np.eye(self.dim))))

    def generator_defect(self):
        return float(np.max(np.abs(self.generators.conj().T @ self.gram @ self.onb), initial=0.0))

    def membership_residual(self):
        """Largest interior coefficient of ``P_+(conj(u) f + Delta g)`` over the basis.

        Only exponents ``0..N - deg(u)`` are inspected; higher ones are
        the finite-window boundary.
        """
        N, deg, d = self.N, self.deg, self.delta_sq.order
        ub = self.u.conj()
        ks = np.arange(N - deg + 1)
        worst = 0.0
        for col in self.onb.T:
            prod = np.convolve(ub.coeffs, col[:self.n_first])  # exponents -deg..
            s = np.convolve(self.delta_sq.coeffs, col[self.n_first:])  # exponents -N-d..
            acc = prod[ks + deg] + s[ks + N + d]
            worst = max(worst, float(np.linalg.norm(acc)))
        return worst

    def check(self):
        """Type invariants: orthonormality, orthogonality to G, membership."""
        return {
            "orthonormality": self.orthonormality_defect(),
            "generator_orthogonality": self.generator_defect(),
            "membership": self.membership_residual(),
            "ok": self.orthonormality_defect() <= TOL_ORTH
            and self.generator_defect() <= TOL_ORTH
            and self.membership_residual() <= TOL_MEMBER,
        }

    def to_json(self):
        return {
            "u": self.u.to_json(),
            "N": self.N,
            "dim": self.dim,
            "grid_size": self.grid_size,
            "onb": [[[float(z.real), float(z.imag)] for z in row] for row in self.onb],
        }

    def __repr__(self):
        return f"ModelSpace(N={self.N}, deg(u)={self.deg}, dim={self.dim})"


def build_model_space(u, N, **kwargs):
    return ModelSpace(u, N, **kwargs)


@dataclass(frozen=True, eq=False)
class ModelVector:
    """Element of a model space in orthonormal coordinates."""

    space: ModelSpace
    coords: np.ndarray

    @property
    def raw(self):
        return self.space.onb @ self.coords

    @property
    def pair(self):
        """``(f, h)`` with the vector equal to ``f (+) Delta h``."""
        return self.space.split(self.raw)

    def norm(self):
        return float(np.linalg.norm(self.coords))

    def inner(self, other):
        """``<self, other>``, linear in the first slot."""
        return complex(np.vdot(other.coords, self.coords))

    def __add__(self, other):
        return ModelVector(self.space, self.coords + other.coords)

    def __sub__(self, other):
        return ModelVector(self.space, self.coords - other.coords)

    def __mul__(self, scalar):
        return ModelVector(self.space, self.coords * scalar)

    __rmul__ = __mul__

    def to_json(self):
        return [[float(z.real), float(z.imag)] for z in self.coords]


def project_Hu(space, f=None, h=None):
    return space.project(f, h)


def special_vectors(space):
    space.verify_special_vectors()
    return space.k0, space.ktilde0


def _as_cf(f, grid_size):
    if isinstance(f, CircleFunction):
        return f if f.grid_size == grid_size else CircleFunction(f.coeffs, grid_size)
    return CircleFunction.constant(f, grid_size)


def _coeffs(x):
    if isinstance(x, CircleFunction):
        return x.coeffs, x.order
    c, m = x
    return np.asarray(c), int(m)
