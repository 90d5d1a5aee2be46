"""Invariance tests, defect decomposition and symbol recovery.

An operator ``T`` on the model space is a truncated multiplication operator
iff ``<Tx, x> = <T S x, S x>`` on the orthocomplement of ``ktilde0``.  For such
``T`` the defect ``T - S T S*`` has the form ``v (x) k0 + k0 (x) w``, and a
symbol is assembled from ``v``, ``w`` and a function ``d`` read off the
limit of ``S^n T S*^n``.

At finite order every identity is measured on the interior subspace of the
model space (see :mod:`mslab.modelspace`).
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .harmonic import AnalyticPoly, CircleFunction, delta_grid, toeplitz_block
from .symbols import (
    DeltaLinear, SymbolMatrix, _cf, _cmul, _cadd, build_Su, compress_symbol, rank_one,
)
from .tolerances import EPS_DELTA, TOL_ACCEPT, TOL_LIMIT, calibrated


class NotInvariant(ValueError):
    pass


class RecoveryFailed(ValueError):
    def __init__(self, message, certificate):
        super().__init__(message)
        self.certificate = certificate


class _NotDetermined:
    """Marker returned by :func:`extract_d` when ``Delta`` vanishes identically."""

    def __repr__(self):
        return "NOT_DETERMINED"

    def __bool__(self):
        return False


NOT_DETERMINED = _NotDetermined()


def _shift(space, S=None):
    return build_Su(space) if S is None else S


def defect_leak(space, S=None):
    """Interior size of ``I - S S* - k0 (x) k0`` and ``I - S* S - kt (x) kt``."""
    S = _shift(space, S)
    I = np.eye(space.dim)
    k0, kt = space.k0.coords, space.ktilde0.coords
    r1 = space.interior_norm(I - S @ S.conj().T - rank_one(k0, k0))
    r2 = space.interior_norm(I - S.conj().T @ S - rank_one(kt, kt))
    return max(r1, r2)


def tolerance_for(space, T=None, S=None):
    """Calibrated tolerance: 10x the defect-identity leak, scaled by ``||T||``."""
    scale = np.linalg.norm(T, 2) if T is not None and T.size else 1.0
    return calibrated(defect_leak(space, S), scale)


def invariance_residual(space, T, S=None, adjoint=False):
    """``|| Q (T - S* T S) Q ||`` on the interior, ``Q`` removing ``ktilde0``.

    With ``adjoint=True`` the roles are swapped: ``T - S T S*`` compressed to
    the interior orthocomplement of ``k0``.
    """
    S = _shift(space, S)
    if adjoint:
        R = T - S @ T @ S.conj().T
        J = space.interior_without(space.k0)
    else:
        R = T - S.conj().T @ T @ S
        J = space.interior_without(space.ktilde0)
    if not J.size:
        return 0.0
    return float(np.linalg.norm(J.conj().T @ R @ J, 2))


def invariance_witness(space, T, S=None):
    """Unit vector ``x`` perpendicular to ``ktilde0`` maximising ``|<(T - S*TS) x, x>|`` over the interior."""
    S = _shift(space, S)
    R = T - S.conj().T @ T @ S
    J = space.interior_without(space.ktilde0)
    C = J.conj().T @ R @ J
    herm = 0.5 * (C + C.conj().T)
    skew = 0.5j * (C.conj().T - C)
    best = None
    for H in (herm, skew):
        vals, vecs = np.linalg.eigh(H)
        i = int(np.argmax(np.abs(vals)))
        if best is None or abs(vals[i]) > abs(best[0]):
            best = (vals[i], J @ vecs[:, i])
    x = best[1]
    return x, complex(np.vdot(x, R @ x))


@dataclass
class DefectDecomposition:
    v: np.ndarray
    w: np.ndarray
    residual: float
    adjoint: bool = False

    def to_json(self):
        return {
            "v": [[float(z.real), float(z.imag)] for z in self.v],
            "w": [[float(z.real), float(z.imag)] for z in self.w],
            "residual": self.residual,
            "adjoint": self.adjoint,
        }


def defect_decompose(space, T, S=None, adjoint=False, tol_accept=None):
    """``T - S T S* = v (x) k0 + k0 (x) w`` with ``<v, k0> = 0``.

    ``adjoint=True`` gives the companion decomposition of ``T - S* T S``
    along ``ktilde0``.  If `tol_accept` is given, a residual above ten times
    it raises :class:`NotInvariant`.
    """
    S = _shift(space, S)
    if adjoint:
        D = T - S.conj().T @ T @ S
        k = space.ktilde0.coords
    else:
        D = T - S @ T @ S.conj().T
        k = space.k0.coords
    kk = float(np.vdot(k, k).real)
    Dk = D @ k / kk
    v = Dk - k * (np.vdot(k, Dk) / kk)
    w = D.conj().T @ k / kk
    R = D - rank_one(v, k) - rank_one(k, w)
    res = space.interior_norm(R)
    if tol_accept is not None and res > 10 * tol_accept:
        raise NotInvariant(f"defect residual {res:.3g} exceeds 10 x {tol_accept:.3g}")
    return DefectDecomposition(v, w, res, adjoint)


# -- the limit part -----------------------------------------------------


@dataclass
class LimitData:
    d: object
    dsq_coeffs: np.ndarray
    steps: int
    change: float
    toeplitz_defect: float
    fit_residual: float


def _test_family(space, count):
    """Raw vectors ``P_+(conj(chi)^m u) (+) Delta conj(chi)^m`` for ``m = 1..count``."""
    N, n1 = space.N, space.n_first
    t = space.u.taylor
    X = np.zeros((n1 + space.n_second, count), dtype=complex)
    for i, m in enumerate(range(1, count + 1)):
        tail = t[m:]
        X[:tail.size, i] = tail
        X[n1 + N - m, i] = 1.0
    return space.coords(X)


def limit_gram(space, T, band=None, tol_limit=TOL_LIMIT):
    """Gram matrix ``<T' x_j, x_k>`` of the weak limit on the test family.

    Uses ``S*^n x_m = x_{m+n}``, so ``<S^n T S*^n x_j, x_k> = <T x_{j+n}, x_{k+n}>``;
    iterates ``n`` until the block stops changing.
    """
    K = space.N // 2 if band is None else band
    n_max = max(space.N // 8, space.deg + 2)
    Y = _test_family(space, K + n_max + 1)
    G_all = Y.conj().T @ T @ Y  # [k, j] = <T x_j, x_k>
    prev = G_all[:K, :K]
    change = np.inf
    for n in range(1, n_max + 1):
        cur = G_all[n:n + K, n:n + K]
        change = float(np.linalg.norm(cur - prev, 2))
        prev = cur
        if change < tol_limit:
            return cur, n, change
    raise NotInvariant(f"S^n T S*^n did not settle: last change {change:.3g} after {n_max} steps")


def extract_d(space, T, band=None, tol_limit=TOL_LIMIT, full=False):
    """The function ``d`` of the limit ``S^n T S*^n -> A_{diag(0, d)}``.

    Returns :data:`NOT_DETERMINED` when ``Delta`` vanishes identically (inner ``u``).
    """
    if space.inner:
        return NOT_DETERMINED
    G, steps, change = limit_gram(space, T, band, tol_limit)
    K = G.shape[0]
    # G[k, j] = (d Delta^2)^(j - k): average along diagonals
    r = np.array([np.mean(np.diagonal(G, offset=s)) for s in range(-(K - 1), K)])
    fitted = toeplitz(r[K - 1::-1], r[K - 1:])
    tdef = float(np.max(np.abs(G - fitted)))
    # deconvolve by Delta^2 (exact polynomial) on the available window
    deg = space.deg
    L = K - 1 - deg
    if L < 0:
        raise ValueError("interior band too small to determine d")
    ds = space.delta_sq
    A = toeplitz_block(ds.coeffs, ds.order, (-(K - 1), K - 1), (-L, L))
    sol, *_ = np.linalg.lstsq(A, r, rcond=None)
    fit = float(np.linalg.norm(A @ sol - r))
    d = CircleFunction(sol, space.grid_size).trimmed(1e-12)
    if not full:
        return d
    return LimitData(d, r, steps, change, tdef, fit)


# -- symbol recovery ------------------------------------------------------


@dataclass
class RecoveryCertificate:
    symbol: SymbolMatrix
    residual: float
    tolerance: float
    decomposition: DefectDecomposition
    limit: LimitData
    passed: bool
    extras: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "residual": self.residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "defect": self.decomposition.to_json(),
            "d": self.limit.d.to_json() if self.limit.d else None,
            "symbol": self.symbol.to_json(),
            **self.extras,
        }


def _vector_parts(space, coords):
    f, h = space.split(space.onb @ coords)
    return f, h


def assemble_symbol(space, v, w, d):
    """``F = [[a1 + conj(a2), conj(b2)], [c1, d]]`` from ``v = a1 (+) c1``, ``w = a2 (+) b2``."""
    a1, hv = _vector_parts(space, v)
    a2, hw = _vector_parts(space, w)
    tol = 1e-14
    a = _cadd(a1, a2.conj()).trimmed(tol)
    b = DeltaLinear(_cf(0.0), hw.conj().trimmed(tol))
    c = DeltaLinear(_cf(0.0), hv.trimmed(tol))
    dd = DeltaLinear(_cf(0.0) if d is NOT_DETERMINED else d)
    return SymbolMatrix(DeltaLinear(a), b, c, dd)


def recover_symbol(space, T, S=None, tol=None, certificate=False, strict=True):
    """Symbol ``F`` with ``A_F = T``, certified on the interior.

    Raises :class:`RecoveryFailed` (carrying the certificate) when the
    reconstruction misses `T` by more than `tol` and `strict` is set.
    """
    S = _shift(space, S)
    dec = defect_decompose(space, T, S)
    lim = extract_d(space, T, full=True) if not space.inner else \
        LimitData(NOT_DETERMINED, np.zeros(0), 0, 0.0, 0.0, 0.0)
    F = assemble_symbol(space, dec.v, dec.w, lim.d)
    A = compress_symbol(space, F)
    res = space.interior_norm(A - T)
    if tol is None:
        tol = max(tolerance_for(space, T, S), 1e-9)
    cert = RecoveryCertificate(F, res, tol, dec, lim, res <= tol)
    if strict and not cert.passed:
        raise RecoveryFailed(f"reconstruction residual {res:.3g} > {tol:.3g}", cert)
    return cert if certificate else F


# -- zero symbols ---------------------------------------------------------


@dataclass
class ZeroSymbolResult:
    is_zero: bool
    f1: AnalyticPoly
    f2: AnalyticPoly
    residuals: dict
    operator_norm: float
    consistent: bool

    def to_json(self):
        return {
            "is_zero": self.is_zero,
            "f1": self.f1.to_json(),
            "f2": self.f2.to_json(),
            "residuals": self.residuals,
            "operator_norm": self.operator_norm,
            "consistent": self.consistent,
        }


def _fit_analytic(target, weight, mask, degree, nodes):
    """Least-squares ``f in H^2`` of degree <= `degree` with ``weight * f = target`` on `mask`."""
    V = nodes[mask, None] ** np.arange(degree + 1)[None, :]
    A = weight[mask, None] * V
    sol, *_ = np.linalg.lstsq(A, target[mask], rcond=None)
    return sol


def zero_symbol_test(space, F, tol_struct=TOL_ACCEPT, tol_zero=None, eps_delta=EPS_DELTA,
                     degree=None):
    """Decide whether ``A_F = 0`` via the structural criterion and the operator norm.

    ``F`` is a zero symbol iff ``a = u f1 + conj(u f2)``, ``c = Delta f1``,
    ``b = Delta conj(f2)`` and ``d = 0`` on ``{Delta != 0}`` for analytic
    ``f1, f2``.  Both witnesses are fitted by least squares on the grid where
    ``Delta > eps_delta``.
    """
    g = space.grid_size
    u = space.u
    dv = delta_grid(u, g)
    nodes = np.exp(2j * np.pi * np.arange(g) / g)
    mask = dv > eps_delta
    a, b, c, d = (e.grid_values(dv) for e in F.entries())
    uv = u.values
    if degree is None:
        degree = min(space.N, max(max(e.p.order, e.q.order) for e in F.entries()) + space.deg)
    if mask.any():
        f1c = _fit_analytic(c, dv, mask, degree, nodes)
        f2c = _fit_analytic(np.conj(b), dv, mask, degree, nodes)
    else:
        f1c = np.zeros(1)
        f2c = np.zeros(1)
    f1 = AnalyticPoly(f1c, g)
    f2 = AnalyticPoly(f2c, g)
    f1v = _values_on_poly(f1c, nodes)
    f2v = _values_on_poly(f2c, nodes)
    res = {
        "a": float(np.max(np.abs(a - uv * f1v - np.conj(uv * f2v)))),
        "b": float(np.max(np.abs((b - dv * np.conj(f2v))[mask]), initial=0.0)),
        "c": float(np.max(np.abs((c - dv * f1v)[mask]), initial=0.0)),
        "d": float(np.max(np.abs(d[mask]), initial=0.0)),
    }
    structural = all(r <= tol_struct for r in res.values())
    if space.inner:
        # Delta = 0: only a = u f1 + conj(u f2) remains, fit f1, f2 jointly
        structural, f1, f2, res = _inner_zero_fit(space, a, nodes, degree, tol_struct, res)
    A = compress_symbol(space, F)
    opn = space.interior_norm(A)
    if tol_zero is None:
        tol_zero = max(tolerance_for(space), 1e-9)
    op_zero = opn <= tol_zero
    return ZeroSymbolResult(structural and op_zero, f1, f2, res, opn, structural == op_zero)


def _values_on_poly(c, nodes):
    return np.polynomial.polynomial.polyval(nodes, c)


def _inner_zero_fit(space, a, nodes, degree, tol, res):
    u = space.u.values
    V = nodes[:, None] ** np.arange(degree + 1)[None, :]
    A1 = u[:, None] * V
    # conj(u f2) is antilinear in f2: split real and imaginary parts
    A2 = np.conj(u)[:, None] * np.conj(V)
    M = np.hstack([A1, 1j * A1, A2, -1j * A2])
    Mr = np.vstack([M.real, M.imag])
    rhs = np.concatenate([a.real, a.imag])
    sol, *_ = np.linalg.lstsq(Mr, rhs, rcond=None)
    n = degree + 1
    f1c = sol[:n] + 1j * sol[n:2 * n]
    f2c = sol[2 * n:3 * n] + 1j * sol[3 * n:]
    r = float(np.max(np.abs(Mr @ sol - rhs)))
    res = dict(res, a=r)
    g = space.grid_size
    return r <= tol, AnalyticPoly(f1c, g), AnalyticPoly(f2c, g), res


def zero_symbol_from_witnesses(space, f1, f2):
    """Reference zero symbol built from witnesses (oracle for tests)."""
    u = space.u
    a = _cadd(_cmul(u, f1), _cmul(u, f2).conj())
    return SymbolMatrix(DeltaLinear(a), DeltaLinear(_cf(0.0), f2.conj()),
                        DeltaLinear(_cf(0.0), f1), DeltaLinear.zero())
