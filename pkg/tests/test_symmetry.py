import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mslab.harmonic import CircleFunction
from mslab.symbols import (
    SymbolMatrix, build_Su, compress_symbol, random_symbol, shift_symbol,
)
from mslab.symmetry import (
    CanonicalFormError, apply_C_raw, build_Cu, canonical_symbols, decompose_symmetric,
    decomposition_report, skew_symbol, symmetry_defect, symmetry_residual_symbol,
)

from conftest import space_for


@pytest.mark.parametrize("key", ["chi/2", "(chi+chi^2)/2", "0.3+0.4chi", "chi", "0"])
def test_conjugation_defects(key):
    rep = build_Cu(space_for(key, 32))
    for v in rep.to_json().values():
        assert v < 1e-12


def test_conjugation_examples():
    sp = space_for("chi/2", 32)
    rep = build_Cu(sp)
    one = sp.project(CircleFunction.constant(1.0))
    assert np.linalg.norm(rep.apply(one.coords) - sp.ktilde0.coords) < 1e-14
    # a generator u (+) Delta goes to conj(chi) (+) 0
    f, h = apply_C_raw(sp, sp.raw(sp.u, CircleFunction.constant(1.0)))
    assert np.allclose(f.window(-2, 2), [0, 1, 0, 0, 0], atol=1e-14)
    assert np.allclose(h.window(-3, 3), 0, atol=1e-14)
    # involution in raw form: C(C x) = x for an interior model vector
    x = sp.onb @ (sp.interior @ np.linspace(1, 2, sp.interior.shape[1]))
    f1, h1 = apply_C_raw(sp, x)
    y = np.concatenate([f1.window(0, sp.N), h1.window(-sp.N, sp.N)])
    f2, h2 = apply_C_raw(sp, y)
    assert np.allclose(f2.window(0, sp.N), x[:sp.n_first], atol=1e-13)
    assert np.allclose(h2.window(-sp.N, sp.N), x[sp.n_first:], atol=1e-13)
    assert np.allclose(f2.window(-sp.N - 3, -1), 0, atol=1e-13)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_antiunitary(seed):
    sp = space_for("0.3+0.4chi", 32)
    rep = build_Cu(sp)
    r = np.random.default_rng(seed)
    Z = sp.interior
    x = Z @ (r.standard_normal(Z.shape[1]) + 1j * r.standard_normal(Z.shape[1]))
    y = Z @ (r.standard_normal(Z.shape[1]) + 1j * r.standard_normal(Z.shape[1]))
    # <Cx, Cy> = <y, x>
    lhs = np.vdot(rep.apply(y), rep.apply(x))
    assert abs(lhs - np.vdot(x, y)) < 1e-12 * np.linalg.norm(x) * np.linalg.norm(y)


def test_residual_symbol_values():
    u = space_for("chi/2", 16).u
    h = symmetry_residual_symbol(SymbolMatrix.identity(), u)
    assert h.p.l2_norm() < 1e-15 and h.q.l2_norm() < 1e-15
    h = symmetry_residual_symbol(SymbolMatrix.diag(0.0, 1.0), u)
    assert np.allclose(h.q.window(0, 0), [1.0]) and h.p.l2_norm() < 1e-15
    h = symmetry_residual_symbol(skew_symbol(1.0, u), u)
    assert np.allclose(h.q.window(0, 0), [0.0]) and np.allclose(h.p.window(-1, 1), [0, 2, 0])
    h = symmetry_residual_symbol(shift_symbol(), u)
    assert h.p.l2_norm() < 1e-15 and h.q.l2_norm() < 1e-15


def test_shift_is_symmetric():
    sp = space_for("chi/2", 32)
    rep = build_Cu(sp)
    S = build_Su(sp)
    assert sp.interior_norm(rep.conjugate_operator(S.conj().T) - S) < 1e-13
    T1, T2 = decompose_symmetric(sp, S, rep)
    assert sp.interior_norm(T2) < 1e-13


def test_decomposition_examples():
    sp = space_for("chi/2", 32)
    rep = build_Cu(sp)
    T = compress_symbol(sp, SymbolMatrix.diag(0.0, 1.0))
    T1, T2 = decompose_symmetric(sp, T, rep)
    assert np.array_equal(T1 + T2, T) or np.max(np.abs(T1 + T2 - T)) < 1e-15
    assert sp.interior_norm(T2) > 0.1
    F, cert = canonical_symbols(sp, T1, "symmetric", rep=rep)
    assert cert["passed"] and cert["symbol_residual"] < 1e-12
    F, cert = canonical_symbols(sp, T2, "skew", rep=rep)
    assert cert["passed"]
    assert np.allclose(cert["f"]["q"], [[0.5, 0.0]], atol=1e-12)
    K = compress_symbol(sp, skew_symbol(1.0, sp.u))
    assert symmetry_defect(sp, K, rep, -1) < 1e-13
    T1, _ = decompose_symmetric(sp, K, rep)
    assert sp.interior_norm(T1) < 1e-13
    Z = np.zeros((sp.dim, sp.dim))
    F, cert = canonical_symbols(sp, Z, "skew", rep=rep)
    assert all(np.allclose(e.p.window(-4, 4), 0) for e in F.entries())
    with pytest.raises(CanonicalFormError):
        canonical_symbols(sp, T, "symmetric", rep=rep)
    with pytest.raises(ValueError):
        canonical_symbols(sp, T, "hermitian", rep=rep)


@pytest.mark.parametrize("key", ["chi", (0, 0, 1), (0, 0, 0, 1), (0, 0, complex(np.cos(0.7), np.sin(0.7)))])
def test_inner_everything_symmetric(key, rng):
    sp = space_for(key, 16)
    rep = build_Cu(sp)
    for _ in range(5):
        T = compress_symbol(sp, random_symbol(rng))
        assert symmetry_defect(sp, T, rep, 1) < 1e-12


@pytest.mark.parametrize("key", ["chi/2", "0.3+0.4chi"])
def test_report_random(key, rng):
    sp = space_for(key, 64)
    T = compress_symbol(sp, random_symbol(rng))
    rep = decomposition_report(sp, T)
    assert rep["sum_defect"] < 1e-15
    assert rep["symmetric_defect"] < 1e-12 and rep["skew_defect"] < 1e-12
    assert rep["T1_canonical"]["passed"] and rep["T2_canonical"]["passed"]
