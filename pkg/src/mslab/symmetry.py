"""The conjugation ``C`` on ``K`` and its restriction ``C_u`` to the model space.

``C(f (+) g) = (conj(chi)(u conj(f) + Delta conj(g))) (+) (conj(chi)(Delta conj(f) - conj(u) conj(g)))``.

In raw coordinates (``g = Delta h``) the output is ``f' (+) Delta h'`` with
``f' = conj(chi)(u conj(f) + Delta^2 conj(h))`` and
``h' = conj(chi)(conj(f) - conj(u) conj(h))``, so ``C`` is exact.

An antilinear map is stored as a matrix ``Mc`` with ``C x = Mc conj(x)`` in
orthonormal coordinates.  Then ``C T C`` has matrix ``Mc conj(T) conj(Mc)``.
"""
from dataclasses import dataclass

import numpy as np

from .harmonic import CircleFunction, as_analytic, squared_defect, toeplitz_block
from .invariance import invariance_residual, recover_symbol
from .symbols import DeltaLinear, SymbolMatrix, _cmul, compress_symbol
from .tolerances import calibrated


@dataclass
class ConjugationRep:
    Mc: np.ndarray
    invariance_defect: float
    involution_defect: float
    unitarity_defect: float
    k0_defect: float

    def apply(self, coords):
        return self.Mc @ np.conj(coords)

    def conjugate_operator(self, T):
        """Matrix of ``C T C``."""
        return self.Mc @ np.conj(T) @ np.conj(self.Mc)

    def to_json(self):
        return {
            "invariance_defect": self.invariance_defect,
            "involution_defect": self.involution_defect,
            "unitarity_defect": self.unitarity_defect,
            "k0_defect": self.k0_defect,
        }


def conjugation_matrix(space):
    """Matrix ``Cm`` with ``pairing(C x) = Cm conj(x_raw)``.

    The conjugated raw vector is indexed by exponents ``-N..0`` (first
    component) and ``-N..N`` (second), both stored reversed.
    """
    N, n1 = space.N, space.n_first
    u = space.u
    ub = u.conj()
    dsq = space.delta_sq
    cu = u.shift(-1)
    cd = dsq.shift(-1)
    cdu = _cmul(dsq, ub).shift(-1)
    top = np.hstack([toeplitz_block(cu.coeffs, cu.order, (0, N), (-N, 0)),
                     toeplitz_block(cd.coeffs, cd.order, (0, N), (-N, N))])
    bot = np.hstack([toeplitz_block(cd.coeffs, cd.order, (-N, N), (-N, 0)),
                     -toeplitz_block(cdu.coeffs, cdu.order, (-N, N), (-N, N))])
    rev = np.zeros((n1 + 2 * N + 1,) * 2)
    rev[np.arange(n1), np.arange(n1)[::-1]] = 1.0
    rev[n1 + np.arange(2 * N + 1), n1 + np.arange(2 * N + 1)[::-1]] = 1.0
    return np.vstack([top, bot]) @ rev


def apply_C_raw(space, raw):
    """``C x`` for a raw vector, as the untruncated pair ``(f', h')``."""
    f, h = space.split(raw)
    u = space.u
    fb, hb = f.conj(), h.conj()
    first = (_cmul(u, fb) + _cmul(space.delta_sq, hb)).shift(-1)
    second = (fb - _cmul(u.conj(), hb)).shift(-1)
    return first, second


def build_Cu(space):
    """Coordinate matrix of ``C_u`` with its defect diagnostics."""
    E = space.onb
    Mc = E.conj().T @ conjugation_matrix(space) @ np.conj(E)
    Z = space.interior
    Zc = np.conj(Z)
    # distance of C z from H_u^(N), for interior z
    inv_def = 0.0
    for z in Z.T:
        f1, h1 = apply_C_raw(space, E @ z)
        cz = np.concatenate([f1.window(0, space.N), h1.window(-space.N, space.N)])
        diff = cz - E @ (Mc @ np.conj(z))
        inv_def = max(inv_def, np.sqrt(max(space.raw_inner(diff, diff).real, 0.0)))
    invol = float(np.linalg.norm((Mc @ np.conj(Mc) - np.eye(space.dim)) @ Z, 2)) if Z.size else 0.0
    unit = float(np.linalg.norm((Mc.conj().T @ Mc - np.eye(space.dim)) @ Zc, 2)) if Z.size else 0.0
    k0d = float(np.linalg.norm(Mc @ np.conj(space.k0.coords) - space.ktilde0.coords))
    return ConjugationRep(Mc, float(inv_def), invol, unit, k0d)


def symmetry_residual_symbol(F, u):
    """``h = Delta (d - a) + u c + conj(u) b`` as a Delta-linear function.

    ``M_F`` is ``C``-symmetric iff ``h = 0`` on ``{Delta != 0}``.
    """
    u = as_analytic(u)
    dsq = squared_defect(u)
    uf = CircleFunction(u.coeffs, u.grid_size)
    return (F.d - F.a).times_delta(dsq) + F.c.mul(uf, dsq) + F.b.mul(uf.conj(), dsq)


def skew_symbol(f, u):
    """``[[-Delta f, u f], [conj(u) f, Delta f]]`` for a Delta-linear ``f``."""
    u = as_analytic(u)
    dsq = squared_defect(u)
    f = DeltaLinear.lift(f)
    uf = CircleFunction(u.coeffs, u.grid_size)
    df = f.times_delta(dsq)
    return SymbolMatrix(-df, f.mul(uf, dsq), f.mul(uf.conj(), dsq), df)


def symmetric_part_symbol(G, u):
    """``G`` corrected to satisfy the symmetry condition at symbol level."""
    h = symmetry_residual_symbol(G, u)
    return G - skew_symbol(h.scale(0.5), u)


def decompose_symmetric(space, T, rep=None):
    """``T1 = (T + C T* C) / 2`` and ``T2 = (T - C T* C) / 2``."""
    rep = build_Cu(space) if rep is None else rep
    R = rep.conjugate_operator(T.conj().T)
    return 0.5 * (T + R), 0.5 * (T - R)


def symmetry_defect(space, T, rep=None, sign=1):
    """Interior size of ``C T* C - sign T``."""
    rep = build_Cu(space) if rep is None else rep
    return space.interior_norm(rep.conjugate_operator(T.conj().T) - sign * T)


class CanonicalFormError(ValueError):
    pass


def canonical_symbols(space, T, kind, tol=None, rep=None):
    """Canonical symbol of a ``C_u``-symmetric or skew-symmetric operator.

    Returns ``(F, certificate)``; ``F`` has the symmetric form
    ``[[a, b], [c, a - (conj(u) b + u c) / Delta]]`` or the skew form
    ``[[-Delta f, u f], [conj(u) f, Delta f]]``.
    """
    if kind not in ("symmetric", "skew"):
        raise ValueError("kind must be 'symmetric' or 'skew'")
    rep = build_Cu(space) if rep is None else rep
    sign = 1 if kind == "symmetric" else -1
    leak = max(rep.involution_defect, rep.unitarity_defect)
    scale = np.linalg.norm(T, 2) if T.size else 1.0
    if tol is None:
        tol = max(calibrated(leak, scale), 1e-9)
    sdef = symmetry_defect(space, T, rep, sign)
    if sdef > tol:
        raise CanonicalFormError(f"input is not C_u-{kind}: defect {sdef:.3g}")
    G = recover_symbol(space, T, strict=False)
    h = symmetry_residual_symbol(G, space.u)
    if kind == "symmetric":
        F = symmetric_part_symbol(G, space.u)
        f = None
    else:
        f = h.scale(0.5).trimmed(1e-14)
        F = skew_symbol(f, space.u)
    A = compress_symbol(space, F)
    res = space.interior_norm(A - T)
    cert = {
        "kind": kind,
        "symmetry_defect": sdef,
        "reconstruction_residual": res,
        "tolerance": tol,
        "passed": res <= tol,
        "symbol_residual": _residual_size(symmetry_residual_symbol(F, space.u), space)
        if kind == "symmetric" else None,
    }
    if f is not None:
        cert["f"] = f.to_json()
    if res > tol:
        raise CanonicalFormError(f"canonical {kind} symbol misses T by {res:.3g}")
    return F, cert


def _residual_size(h, space):
    from .harmonic import delta_grid
    dv = delta_grid(space.u, space.grid_size)
    return float(np.max(np.abs(h.grid_values(dv))))


def decomposition_report(space, T, rep=None):
    rep = build_Cu(space) if rep is None else rep
    T1, T2 = decompose_symmetric(space, T, rep)
    out = {
        "conjugation": rep.to_json(),
        "sum_defect": float(np.max(np.abs(T1 + T2 - T))),
        "symmetric_defect": symmetry_defect(space, T1, rep, 1),
        "skew_defect": symmetry_defect(space, T2, rep, -1),
        "T1_invariance": invariance_residual(space, T1),
        "T2_invariance": invariance_residual(space, T2),
        "T2_norm": space.interior_norm(T2),
    }
    for name, part, kind in (("T1", T1, "symmetric"), ("T2", T2, "skew")):
        try:
            F, cert = canonical_symbols(space, part, kind, rep=rep)
            out[name + "_canonical"] = dict(cert, symbol=F.to_json())
        except (CanonicalFormError, ValueError) as exc:
            out[name + "_canonical"] = {"error": str(exc)}
    return out
