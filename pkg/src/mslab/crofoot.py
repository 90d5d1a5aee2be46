"""Mobius transport ``u -> u_alpha`` and the unitary ``V_alpha : H_u -> H_{u_alpha}``.

``V_alpha`` is multiplication by

    F_alpha = [[s / (1 - conj(a) u),               0                         ],
               [conj(a) Delta / |1 - conj(a) u|,   (1 - conj(a) u) / |1 - conj(a) u|]]

with ``s = (1 - |a|^2)^(1/2)``.  Every entry is smooth (``|1 - conj(a) u| >= 1 - |a|``),
so the Toeplitz blocks below are built from FFT coefficients that decay
geometrically.
"""
from dataclasses import dataclass, field

import numpy as np

from .harmonic import (
    AnalyticPoly, CircleFunction, as_analytic, check_purely_contractive, delta_grid,
    grid_for_order, toeplitz_block,
)
from .modelspace import ModelSpace
from .symbols import build_Su, build_Xmu
from .invariance import invariance_residual
from .tolerances import TOL_EXP, TOL_POS, TOL_STRICT


class TransportError(ValueError):
    pass


def mobius_transport(u, alpha, tol_exp=TOL_EXP, max_terms=4000):
    """``u_alpha = (u - alpha) / (1 - conj(alpha) u)`` as a polynomial, and ``Delta_alpha`` samples.

    The expansion is ``(u - alpha) * sum_k (conj(alpha) u)^k``, cut once a
    term's sup norm drops below `tol_exp`, then trimmed at `tol_exp`.
    Returns ``(u_alpha, delta_alpha_values, grid_residual)`` where the
    residual compares ``u_alpha`` with the rational formula on the grid.
    """
    u = as_analytic(u)
    alpha = complex(alpha)
    if abs(alpha) >= 1 - TOL_STRICT:
        raise TransportError(f"|alpha| = {abs(alpha):.3g} must be < 1")
    t = u.taylor[:u.poly_degree() + 1]
    ab = np.conj(alpha)
    term = np.array([1.0 + 0j])
    acc = np.zeros(1, dtype=complex)
    base = np.convolve(ab * t, [1.0])
    k = 0
    while True:
        acc = _padd(acc, term)
        if np.sum(np.abs(term)) < tol_exp or k >= max_terms:
            break
        term = np.convolve(term, base)
        term[np.abs(term) < 1e-300] = 0.0
        k += 1
    num = t.copy()
    num[0] -= alpha
    coeffs = np.convolve(num, acc)
    mag = np.abs(coeffs)
    keep = np.nonzero(mag > tol_exp)[0]
    coeffs = coeffs[:keep[-1] + 1] if keep.size else coeffs[:1]
    deg = coeffs.size - 1
    g = grid_for_order(max(deg, u.grid_size // 4))
    ua = AnalyticPoly(coeffs, g)
    uu = AnalyticPoly(t, g).values
    exact = (uu - alpha) / (1 - ab * uu)
    residual = float(np.max(np.abs(ua.values - exact)))
    da = np.sqrt(1 - abs(alpha) ** 2) / np.abs(1 - ab * uu) * delta_grid(AnalyticPoly(t, g), g)
    return ua, da, residual


def _padd(a, b):
    n = max(a.size, b.size)
    out = np.zeros(n, dtype=complex)
    out[:a.size] += a
    out[:b.size] += b
    return out


def _coeffs_of(values, order):
    g = values.size
    spec = np.fft.fft(values) / g
    return spec[np.arange(-order, order + 1) % g], order


@dataclass
class CrofootData:
    alpha: complex
    source: ModelSpace
    target: ModelSpace
    V: np.ndarray
    isometry_defect: float
    range_defect: float
    inverse_defect: float
    delta_identity: float
    expansion_residual: float
    extras: dict = field(default_factory=dict)

    @property
    def u_alpha(self):
        return self.target.u

    @property
    def leak(self):
        return max(self.isometry_defect, self.range_defect)

    def to_json(self):
        return {
            "alpha": [self.alpha.real, self.alpha.imag],
            "u_alpha": self.u_alpha.to_json(),
            "N": self.source.N,
            "isometry_defect": self.isometry_defect,
            "range_defect": self.range_defect,
            "inverse_defect": self.inverse_defect,
            "delta_identity": self.delta_identity,
            "expansion_residual": self.expansion_residual,
            **self.extras,
        }


def symbol_values(u_values, delta_values, alpha):
    """``F_alpha`` sampled on a grid, shape ``(2, 2, G)``."""
    ab = np.conj(alpha)
    s = np.sqrt(1 - abs(alpha) ** 2)
    q = 1 - ab * u_values
    z = np.zeros_like(q)
    return np.array([[s / q, z], [ab * delta_values / np.abs(q), q / np.abs(q)]])


def inverse_values(ua_values, delta_a_values, alpha):
    """Inverse of ``F_alpha`` written in ``u_alpha``: the transport by ``-alpha``."""
    return symbol_values(ua_values, delta_a_values, -alpha)


def transport_matrix(space, target, alpha, oversample=4):
    """Raw-to-pairing matrix of ``M_{F_alpha}`` from ``H_u`` into ``H_{u_alpha}``."""
    N = space.N
    order = 2 * N
    g = oversample * grid_for_order(order)
    u = AnalyticPoly(space.u.taylor, g)
    uv = u.values
    dsq = CircleFunction(space.delta_sq.coeffs, g).values.real
    ab = np.conj(alpha)
    s = np.sqrt(1 - abs(alpha) ** 2)
    q = 1 - ab * uv
    f11 = _coeffs_of(s / q, order)
    w1 = _coeffs_of(ab * s * dsq / np.abs(q) ** 2, order)
    w2 = _coeffs_of(s * dsq / np.conj(q), order)
    top = np.hstack([toeplitz_block(*f11, (0, N), (0, N)), np.zeros((N + 1, 2 * N + 1))])
    bot = np.hstack([toeplitz_block(*w1, (-N, N), (0, N)), toeplitz_block(*w2, (-N, N), (-N, N))])
    return np.vstack([top, bot])


def build_crofoot(space, alpha, target=None, fix_phase=True, tol_exp=TOL_EXP):
    """Transport data for ``alpha`` at the truncation order of `space`."""
    alpha = complex(alpha)
    ua, _, exp_res = mobius_transport(space.u, alpha, tol_exp)
    # the truncated expansion may overshoot |u_alpha| <= 1 by its own error
    slack = max(TOL_POS, 10 * exp_res)
    check_purely_contractive(ua, tol_pos=slack).raise_if_failed()
    if target is None:
        target = ModelSpace(ua, space.N, interior_band=space.interior_band, tol_pos=slack)
    Pi = transport_matrix(space, target, alpha)
    V = target.onb.conj().T @ Pi @ space.onb
    if fix_phase:
        z = np.vdot(target.k0.coords, V @ space.k0.coords)
        if abs(z) > 1e-12:
            V = V * (abs(z) / z)
    Z = space.interior
    iso = float(np.linalg.norm((V.conj().T @ V - np.eye(space.dim)) @ Z, 2)) if Z.size else 0.0
    rng_def = _range_defect(space, target, alpha, V)

    # grid identities
    g = target.grid_size
    uv = AnalyticPoly(space.u.taylor, g).values
    dv = delta_grid(space.u, g)
    dav = delta_grid(target.u, g)
    delta_id = float(np.max(np.abs(dav - np.sqrt(1 - abs(alpha) ** 2) / np.abs(1 - np.conj(alpha) * uv) * dv)))
    Fa = symbol_values(uv, dv, alpha)
    Fi = inverse_values(target.u.values, dav, alpha)
    prod = np.einsum("ijg,jkg->ikg", Fa, Fi)
    inv_def = float(np.max(np.abs(prod - np.eye(2)[:, :, None])))
    back = (target.u.values + alpha) / (1 + np.conj(alpha) * target.u.values)
    # near zeros of Delta the square root amplifies truncation error; the squared form does not
    dsq_id = float(np.max(np.abs(dav ** 2 - (1 - abs(alpha) ** 2) / np.abs(1 - np.conj(alpha) * uv) ** 2 * dv ** 2)))
    extras = {"u_from_u_alpha": float(np.max(np.abs(back - uv))), "delta_sq_identity": dsq_id}
    return CrofootData(alpha, space, target, V, iso, rng_def, inv_def, delta_id, exp_res, extras)


def _range_defect(space, target, alpha, V):
    """Norm lost when projecting ``M_{F_alpha} z`` onto ``H_{u_alpha}^(N)``, interior ``z``.

    The transported pair has first component ``s f / (1 - conj(a) u)`` and
    second component ``Delta_alpha h'`` with ``h' = (conj(a) f + (1 - conj(a) u) h) / s``.
    """
    Z = space.interior
    if not Z.size:
        return 0.0
    N = space.N
    big = 2 * N
    g = 4 * grid_for_order(big)
    ab = np.conj(alpha)
    s = np.sqrt(1 - abs(alpha) ** 2)
    uv = AnalyticPoly(space.u.taylor, g).values
    f11 = _coeffs_of(s / (1 - ab * uv), big)
    T11 = toeplitz_block(*f11, (0, big), (0, N))
    qa = np.zeros(space.deg + 1, dtype=complex)
    qa[0] = 1.0
    qa -= ab * space.u.taylor[:space.deg + 1]
    dsa = target.delta_sq
    worst = 0.0
    for x in (space.onb @ Z).T:
        f, h = x[:space.n_first], x[space.n_first:]
        fa = T11 @ f
        hp = np.convolve(h, qa)  # exponents -N..N+deg
        hp[N:N + f.size] += ab * f
        hp /= s
        gram = np.convolve(dsa.coeffs, hp)  # Delta_a^2 h', exponents -N-d..
        ns = float(np.vdot(fa, fa).real + np.vdot(hp, gram[dsa.order:dsa.order + hp.size]).real)
        nv = float(np.linalg.norm(V @ (space.coords(x))) ** 2)
        worst = max(worst, abs(ns - nv))
    return worst


def transport_operator(cd, T):
    """``V T V*`` on the target space."""
    if T.shape != (cd.source.dim, cd.source.dim):
        raise TransportError(f"operator shape {T.shape} does not match source dim {cd.source.dim}")
    return cd.V @ T @ cd.V.conj().T


def transport_report(cd, T, name="T"):
    Ta = transport_operator(cd, T)
    return {
        "operator": name,
        "source_residual": invariance_residual(cd.source, T),
        "target_residual": invariance_residual(cd.target, Ta),
    }


def composition_defect(cd):
    """Transport back by ``-alpha`` and compare with the start in raw coordinates.

    Returns the largest interior discrepancy (in the norm of ``K_+``) after
    removing a unimodular phase, the phase, and the return transport.
    """
    back = build_crofoot(cd.target, -cd.alpha, fix_phase=False)
    src = cd.source
    W = back.V @ cd.V  # source coords -> coords in space of (u_alpha)_{-alpha}
    Z = src.interior
    raw_back = back.target.onb @ (W @ Z)
    raw_src = src.onb @ Z
    n = min(raw_back.shape[0], raw_src.shape[0])
    diff_basis = raw_back[:n], raw_src[:n]
    inner = np.vdot(diff_basis[1].ravel(), (src.gram @ diff_basis[0]).ravel())
    phase = inner / abs(inner) if abs(inner) > 0 else 1.0
    D = diff_basis[0] / phase - diff_basis[1]
    val = float(np.sqrt(np.max(np.linalg.eigvalsh(D.conj().T @ src.gram @ D).clip(0))))
    return val, complex(phase), back


def alpha_for_mu(u0, mu):
    """``alpha`` with ``u_alpha(0) = -mu``."""
    u0, mu = complex(u0), complex(mu)
    alpha = (u0 + mu - mu * abs(u0) ** 2 - abs(mu) ** 2 * u0) / (1 - abs(mu) ** 2 * abs(u0) ** 2)
    return alpha


def xmu_intertwining(space, mu):
    """``|| V X_mu - S_{u_alpha} V ||`` on the interior, with ``u_alpha(0) = -mu``.

    Reported only; requires ``|mu| < 1``.
    """
    alpha = alpha_for_mu(space.u.at_zero, mu)
    if abs(alpha) >= 1:
        raise TransportError("no Mobius parameter for |mu| >= 1")
    cd = build_crofoot(space, alpha)
    X = build_Xmu(space, mu)
    Sa = build_Su(cd.target)
    R = cd.V @ X - Sa @ cd.V
    return {
        "mu": [complex(mu).real, complex(mu).imag],
        "alpha": [alpha.real, alpha.imag],
        "u_alpha_at_0": [cd.u_alpha.at_zero.real, cd.u_alpha.at_zero.imag],
        "intertwining_residual": space.interior_norm(R),
    }
