import json

import numpy as np
import pytest

from mslab.crofoot import (
    TransportError, alpha_for_mu, build_crofoot, composition_defect, inverse_values,
    mobius_transport, symbol_values, transport_operator, transport_report, xmu_intertwining,
)
from mslab.harmonic import AnalyticPoly, delta_grid
from mslab.symbols import build_Su, compress_symbol, random_symbol, rank_one

from conftest import space_for


def test_alpha_zero_is_identity():
    sp = space_for("(chi+chi^2)/2", 32)
    cd = build_crofoot(sp, 0.0)
    assert np.max(np.abs(cd.V - np.eye(sp.dim))) < 1e-12
    assert np.allclose(cd.u_alpha.taylor[:3], [0, 0.5, 0.5], atol=1e-15)


def test_chi_half_closed_forms():
    sp = space_for("chi/2", 32)
    ua, da, res = mobius_transport(sp.u, 0.5)
    assert res < 1e-11
    # u_alpha = (chi/2 - 1/2) / (1 - chi/4) = -1/2 + 3/8 chi + ...
    assert np.allclose(ua.taylor[:3], [-0.5, 0.375, 0.09375], atol=1e-14)
    assert abs(ua(np.array([1.0]))[0]) < 1e-11
    assert abs(da[0] - 1.0) < 1e-12  # Delta_alpha(1) = 1
    g = da.size
    z = np.exp(2j * np.pi * np.arange(g) / g)
    exact = (z / 2 - 0.5) / (1 - z / 4)
    assert np.max(np.abs(AnalyticPoly(ua.taylor, g).values - exact)) < 1e-11


def test_symbol_inverse_grid_identity():
    sp = space_for("0.3+0.4chi", 32)
    for alpha in (0.5, -0.2 + 0.6j):
        cd = build_crofoot(sp, alpha)
        assert cd.inverse_defect < 1e-11
        assert cd.delta_identity < 1e-11
        assert cd.extras["u_from_u_alpha"] < 1e-11
    # the inverse is the transport by -alpha written in u_alpha
    u = np.array([0.3 + 0.1j, -0.5])
    d = np.sqrt(1 - np.abs(u) ** 2)
    F = symbol_values(u, d, 0.4j)
    ua = (u - 0.4j) / (1 + 0.4j * u)
    da = np.sqrt(1 - 0.16) / np.abs(1 + 0.4j * u) * d
    Fi = inverse_values(ua, da, 0.4j)
    assert np.allclose(np.einsum("ijg,jkg->ikg", F, Fi), np.eye(2)[:, :, None], atol=1e-14)


@pytest.mark.parametrize("key", ["chi/2", "(chi+chi^2)/2", "0.3+0.4chi"])
def test_isometry_and_range(key):
    sp = space_for(key, 64)
    cd = build_crofoot(sp, 0.3 - 0.1j)
    # where Delta vanishes the 1e-12 cut of u_alpha costs about three digits
    tol = 1e-11 if key != "(chi+chi^2)/2" else 1e-8
    assert cd.isometry_defect < tol
    assert cd.range_defect < tol
    assert cd.extras["delta_sq_identity"] < 1e-11


def test_finer_expansion_restores_isometry():
    sp = space_for("(chi+chi^2)/2", 64)
    cd = build_crofoot(sp, 0.1, tol_exp=1e-16)
    assert cd.isometry_defect < 1e-11
    json.dumps(cd.to_json())


def test_inner_stays_inner():
    sp = space_for("chi", 64)
    cd = build_crofoot(sp, 0.3)
    assert cd.target.inner
    assert cd.isometry_defect < 1e-12


def test_transported_operators():
    sp = space_for("chi/2", 32)
    cd = build_crofoot(sp, 0.5)
    rep = transport_report(cd, build_Su(sp))
    assert rep["target_residual"] < 1e-11
    rep = transport_report(cd, rank_one(sp.k0, sp.k0))
    assert rep["target_residual"] > 0.5
    T = compress_symbol(sp, random_symbol(np.random.default_rng(3)))
    assert transport_report(cd, T)["target_residual"] < 1e-10
    with pytest.raises(TransportError):
        transport_operator(cd, np.eye(3))


def test_composition_coherence():
    sp = space_for("0.3+0.4chi", 32)
    cd = build_crofoot(sp, 0.4 + 0.3j)
    val, phase, back = composition_defect(cd)
    assert val < 1e-10
    assert abs(abs(phase) - 1) < 1e-12
    assert np.allclose(back.u_alpha.taylor[:2], [0.3, 0.4], atol=1e-11)


def test_alpha_for_mu_and_intertwining():
    u0 = 0.3
    for mu in (0.0, 0.5, -0.2 + 0.3j):
        a = alpha_for_mu(u0, mu)
        assert abs((u0 - a) / (1 - np.conj(a) * u0) + mu) < 1e-14
    sp = space_for("0.3+0.4chi", 32)
    rep = xmu_intertwining(sp, 0.5)
    assert abs(rep["u_alpha_at_0"][0] + 0.5) < 1e-11
    assert rep["intertwining_residual"] < 1e-10


def test_bad_alpha():
    sp = space_for("chi/2", 16)
    with pytest.raises(TransportError):
        mobius_transport(sp.u, 1.0)
