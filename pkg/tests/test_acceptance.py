"""Acceptance criteria 1-12, one test each.

Each test records a ``PASS``/``FAIL`` line (printed in the pytest terminal
summary, or directly when this file is run as a script).  Operator norms
are taken on the interior subspace of each truncated model space.
"""
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from conftest import ACCEPTANCE_LINES, N_SWEEP, NON_INNER, U_FUNCS, space_for  # noqa: E402

from mslab.crofoot import build_crofoot, transport_operator  # noqa: E402
from mslab.harmonic import delta_grid  # noqa: E402
from mslab.invariance import (  # noqa: E402
    defect_leak, extract_d, invariance_residual, recover_symbol, tolerance_for, zero_symbol_test,
)
from mslab.symbols import (  # noqa: E402
    SymbolMatrix, build_Su, build_Xmu, compress_symbol, random_commutant, random_symbol,
    random_zero_symbol, rank_one, symbol_product,
)
from mslab.harmonic import CircleFunction  # noqa: E402
from mslab.symmetry import (  # noqa: E402
    CanonicalFormError, build_Cu, canonical_symbols, decompose_symmetric, symmetry_defect,
)
from mslab.tolerances import non_increasing  # noqa: E402

# pinned tolerances
TOL_DEFECT = 1e-6
TOL_NORM = 1e-9
TOL_INV_MAX = 1e-6
MIN_VIOLATION = 0.5
TOL_RECOVER = 1e-5
TOL_D = 1e-6
DELTA_MASK = 1e-4
TOL_ZERO_OP = 1e-7
TOL_WITNESS = 1e-6
TOL_ISO = 1e-5
TOL_GRID = 1e-10
TOL_CONJ = 1e-8
TOL_CSC = 1e-5
TOL_CERT = 1e-7
TOL_SV = 1e-4
SV_GAP = 1e-3
TOL_EXAMPLE = 1e-9
TOL_COMM = 1e-5

N_TOP = 128
SEED = 20240611
ALL_U = list(U_FUNCS)
# polynomial inner functions are unimodular multiples of monomials
INNER_U = {"chi": [0, 1], "chi^2": [0, 0, 1], "chi^3": [0, 0, 0, 1], "e^0.7i chi^2": [0, 0, np.exp(0.7j)]}


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


# Criteria 4 and 9 cannot be met for (chi+chi^2)/2: Delta vanishes at chi = 1, and a
# plain trigonometric entry c with c(1) != 0 has c / Delta outside L^2, so the
# window g = Delta h (h on -N..N) only approximates it algebraically in N.
DELTA_ZERO_LIMIT = ("second components g = Delta h cannot carry c / Delta when Delta "
                    "vanishes, u = (chi+chi^2)/2; see the decisions ledger")


def family(key, count, salt, plain=True):
    """Random band-limited symbols: every entry a trigonometric polynomial of degree 3.

    ``plain=False`` gives the Delta-adapted variant (off-diagonal entries Delta
    times a trigonometric polynomial), reported alongside as a diagnostic.
    """
    rng = np.random.default_rng([SEED, salt, len(key)])
    return [random_symbol(rng, plain=plain) for _ in range(count)]


def test_01_defect_identities():
    worst_top, mono, detail = 0.0, True, []
    for key in NON_INNER:
        leaks = [defect_leak(space_for(key, N)) for N in N_SWEEP]
        worst_top = max(worst_top, leaks[-1])
        mono = mono and non_increasing(leaks)
        detail.append(f"{key}: {leaks[-1]:.1e}")
    ok = worst_top <= TOL_DEFECT and mono
    assert record(1, "defect identities", ok,
                  f"max leak at N=128 {worst_top:.2e} <= {TOL_DEFECT:g}; non-increasing={mono}")


def test_02_norms():
    worst = 0.0
    for key in ALL_U:
        for N in N_SWEEP:
            sp = space_for(key, N)
            target = 1 - abs(sp.u.at_zero) ** 2
            worst = max(worst, abs(sp.k0.norm() ** 2 - target), abs(sp.ktilde0.norm() ** 2 - target))
    assert record(2, "norms of k0, ktilde0", worst <= TOL_NORM, f"max error {worst:.2e} <= {TOL_NORM:g}")


def test_03_invariance():
    worst_ratio, tol_top = 0.0, 0.0
    for key in ALL_U:
        Fs = family(key, 20, 3)
        for N in N_SWEEP:
            sp = space_for(key, N)
            S = build_Su(sp)
            for F in Fs:
                T = compress_symbol(sp, F)
                tol = tolerance_for(sp, T, S)
                worst_ratio = max(worst_ratio, invariance_residual(sp, T, S) / tol)
                if N == N_TOP:
                    tol_top = max(tol_top, tol)
    sp = space_for("chi/2", N_TOP)
    viol = invariance_residual(sp, rank_one(sp.k0, sp.k0))
    ok = worst_ratio <= 1 and tol_top <= TOL_INV_MAX and viol >= MIN_VIOLATION
    assert record(3, "invariance soundness and completeness", ok,
                  f"max residual/tol_inv {worst_ratio:.2f}, tol_inv(128) {tol_top:.1e}, "
                  f"k0(x)k0 residual {viol:.3f} >= {MIN_VIOLATION}")


def _recovery_worst(key, plain):
    sp = space_for(key, N_TOP)
    S = build_Su(sp)
    worst, zero_ok = 0.0, True
    for F in family(key, 20, 3, plain):
        T = compress_symbol(sp, F)
        cert = recover_symbol(sp, T, S, certificate=True, strict=False)
        worst = max(worst, cert.residual)
        zero_ok = zero_ok and zero_symbol_test(sp, F - cert.symbol).is_zero
    return worst, zero_ok


@pytest.mark.xfail(strict=True, reason=DELTA_ZERO_LIMIT)
def test_04_recovery():
    bad, worst_ok = [], 0.0
    for key in ALL_U:
        worst, zero_ok = _recovery_worst(key, plain=True)
        if worst <= TOL_RECOVER and zero_ok:
            worst_ok = max(worst_ok, worst)
        else:
            bad.append(f"{key}: residual {worst:.1e}, zero symbol difference={zero_ok}")
    adapted, adapted_zero = _recovery_worst("(chi+chi^2)/2", plain=False)
    detail = (f"max residual {worst_ok:.1e} <= {TOL_RECOVER:g} for the other u; failing: {'; '.join(bad) or 'none'}; "
              f"Delta-adapted family on (chi+chi^2)/2: {adapted:.1e}, zero symbol difference={adapted_zero}")
    assert record(4, "symbol recovery round trip", not bad, detail)


def test_05_d_uniqueness():
    worst = 0.0
    for key in NON_INNER:
        sp = space_for(key, N_TOP)
        rng = np.random.default_rng([SEED, 5, len(key)])
        F = random_symbol(rng, plain=True)
        dv = delta_grid(sp.u, sp.grid_size)
        mask = dv > DELTA_MASK
        d0 = extract_d(sp, compress_symbol(sp, F)).values[mask]
        for _ in range(10):
            Z = random_zero_symbol(sp, rng)
            d1 = extract_d(sp, compress_symbol(sp, F + Z)).values[mask]
            worst = max(worst, float(np.max(np.abs(d1 - d0))))
    assert record(5, "d is blind to zero symbols", worst <= TOL_D,
                  f"max |d_F - d_(F+Z)| on Delta > {DELTA_MASK:g}: {worst:.2e} <= {TOL_D:g}")


def test_06_zero_symbols():
    worst_op, worst_w = 0.0, 0.0
    for key in ALL_U:
        sp = space_for(key, N_TOP)
        rng = np.random.default_rng([SEED, 6, len(key)])
        for _ in range(10):
            res = zero_symbol_test(sp, random_zero_symbol(sp, rng))
            worst_op = max(worst_op, res.operator_norm)
            worst_w = max(worst_w, max(res.residuals.values()))
    ok = worst_op <= TOL_ZERO_OP and worst_w <= TOL_WITNESS
    assert record(6, "zero-symbol characterisation", ok,
                  f"max ||A_Z|| {worst_op:.2e} <= {TOL_ZERO_OP:g}; witness residual {worst_w:.2e} <= {TOL_WITNESS:g}")


def test_07_crofoot():
    ok, parts = True, []
    for alpha in (0.3, 0.5j):
        iso, grid, inv = [], 0.0, 0.0
        for N in (32, 64, 128):
            sp = space_for("chi/2", N)
            cd = build_crofoot(sp, alpha)
            iso.append(cd.isometry_defect)
            grid = max(grid, cd.delta_identity)
            Ta = transport_operator(cd, build_Su(sp))
            r = invariance_residual(cd.target, Ta)
            inv = max(inv, r / max(tolerance_for(cd.target, Ta), 1e-9))
        mono = non_increasing(iso)
        ok = ok and iso[-1] <= TOL_ISO and mono and grid <= TOL_GRID and inv <= 1
        parts.append(f"alpha={alpha}: iso {iso[-1]:.1e}, non-increasing={mono}, grid {grid:.1e}, "
                     f"S_u residual/tol {inv:.2f}")
    assert record(7, "Crofoot transport", ok, "; ".join(parts))


def test_08_conjugation():
    worst, csc = 0.0, 0.0
    for key in ALL_U:
        sp = space_for(key, N_TOP)
        rep = build_Cu(sp)
        worst = max(worst, rep.involution_defect, rep.unitarity_defect, rep.k0_defect)
        S = build_Su(sp)
        csc = max(csc, sp.interior_norm(rep.conjugate_operator(S.conj().T) - S))
    ok = worst <= TOL_CONJ and csc <= TOL_CSC
    assert record(8, "conjugation C_u", ok,
                  f"involution/unitarity/k0 {worst:.2e} <= {TOL_CONJ:g}; ||C S* C - S|| {csc:.2e} <= {TOL_CSC:g}")


@pytest.mark.xfail(strict=True, reason=DELTA_ZERO_LIMIT)
def test_09_symmetry():
    split, cert_worst, bad = 0.0, 0.0, []
    for key in NON_INNER:
        sp = space_for(key, N_TOP)
        rep = build_Cu(sp)
        key_worst = 0.0
        for F in family(key, 3, 9):
            T = compress_symbol(sp, F)
            T1, T2 = decompose_symmetric(sp, T, rep)
            split = max(split, float(np.max(np.abs(T1 + T2 - T))))
            for part, kind in ((T1, "symmetric"), (T2, "skew")):
                try:
                    _, cert = canonical_symbols(sp, part, kind, tol=TOL_CERT, rep=rep)
                    key_worst = max(key_worst, cert["symmetry_defect"], cert["reconstruction_residual"])
                except CanonicalFormError:
                    sign = 1 if kind == "symmetric" else -1
                    key_worst = max(key_worst, symmetry_defect(sp, part, rep, sign), 2 * TOL_CERT)
        if key_worst > TOL_CERT:
            bad.append(f"{key}: {key_worst:.1e}")
        else:
            cert_worst = max(cert_worst, key_worst)
    inner_worst = 0.0
    for key, taylor in INNER_U.items():
        sp = space_for(tuple(taylor), 32)
        rep = build_Cu(sp)
        for F in family(key, 5, 9):
            inner_worst = max(inner_worst, symmetry_defect(sp, compress_symbol(sp, F), rep, 1))
    ok = split <= 1e-15 and not bad and inner_worst <= TOL_CERT
    assert record(9, "symmetric/skew decomposition", ok,
                  f"split {split:.1e}; certificates {cert_worst:.1e} <= {TOL_CERT:g} for the other u, "
                  f"failing: {'; '.join(bad) or 'none'}; inner u symmetric within {inner_worst:.1e}")


def test_10_xmu_spectra():
    sp = space_for("chi/2", N_TOP)
    Z = sp.interior
    sv1 = np.linalg.svd(build_Xmu(sp, 1.0) @ Z, compute_uv=False)
    sv5 = np.linalg.svd(build_Xmu(sp, 0.5) @ Z, compute_uv=False)
    dev = float(np.max(np.abs(sv1 - 1)))
    below = int(np.sum(sv5 < 1 - SV_GAP))
    ok = dev <= TOL_SV and below == 1
    assert record(10, "X_mu singular values", ok,
                  f"mu=1: max |s-1| {dev:.1e} <= {TOL_SV:g}; mu=0.5: {below} value(s) below 1-{SV_GAP:g}")


def test_11_noncommutative_u_zero():
    worst = 0.0
    for N in N_SWEEP:
        sp = space_for("0", N)
        T1 = compress_symbol(sp, SymbolMatrix.diag(1.0, 0.0))
        T2 = compress_symbol(sp, SymbolMatrix(0.0, 0.0, CircleFunction.monomial(-1), 0.0))
        worst = max(worst, np.linalg.norm(T1 @ T2, 2), np.linalg.norm(T2 @ T1 - T2, 2))
        assert np.linalg.norm(T2, 2) > 0.5
    assert record(11, "u = 0 example", worst <= TOL_EXAMPLE,
                  f"max(||T1T2||, ||T2T1-T2||) {worst:.1e} <= {TOL_EXAMPLE:g}")


def test_12_commutant_product():
    sp = space_for("chi/2", N_TOP)
    rng = np.random.default_rng([SEED, 12])
    tol = tolerance_for(sp)
    worst = 0.0
    for _ in range(10):
        F, G = random_commutant(sp, rng), random_commutant(sp, rng)
        A, B = compress_symbol(sp, F), compress_symbol(sp, G)
        C = compress_symbol(sp, symbol_product(sp, F, G))
        scale = max(1.0, np.linalg.norm(A, 2) * np.linalg.norm(B, 2))
        worst = max(worst, sp.interior_norm(A @ B - C) / scale)
    ok = worst <= tol and tol <= TOL_COMM
    assert record(12, "commutant product law", ok,
                  f"max relative residual {worst:.1e} <= tol_comm(128) {tol:.1e} <= {TOL_COMM:g}")


if __name__ == "__main__":
    failed = 0
    t0 = time.time()
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except Exception as exc:  # a failed assertion has already printed its line
                if not isinstance(exc, AssertionError):
                    print(f"[FAIL] {name}: {type(exc).__name__}: {exc}")
                failed += 1
    print(f"{12 - failed}/12 criteria passed in {time.time() - t0:.1f}s")
    sys.exit(1 if failed else 0)
