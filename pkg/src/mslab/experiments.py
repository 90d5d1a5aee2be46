"""Experiment configs and the task runners behind the command line."""
import json
from dataclasses import dataclass, field

import numpy as np

from .harmonic import AnalyticPoly, CircleFunction, NotPurelyContractive, chi
from .modelspace import ModelSpace, SpaceConstructionError
from .symbols import (
    SymbolMatrix, build_Su, build_Xmu, compress_symbol, random_commutant,
    random_symbol, random_zero_symbol, rank_one, symbol_product, xmu_checks,
)
from .invariance import (
    defect_decompose, defect_leak, invariance_residual, recover_symbol,
    tolerance_for, zero_symbol_test,
)
from .crofoot import build_crofoot, composition_defect, transport_report, xmu_intertwining
from .symmetry import build_Cu, decomposition_report
from . import tolerances as tl

TASKS = ("build", "invariance", "recover", "zero_test", "crofoot", "symmetry", "xmu",
         "dsweep", "noncommutative-example", "commutant")

DEFAULT_TOLERANCES = {
    "tol_orth": tl.TOL_ORTH,
    "tol_member": tl.TOL_MEMBER,
    "tol_vec": tl.TOL_VEC,
    "tol_accept": tl.TOL_ACCEPT,
    "tol_iso": 1e-5,
    "tol_grid": 1e-10,
    "tol_conj": 1e-8,
    "tol_sv": 1e-4,
    "tol_example": 1e-9,
    "min_violation": 0.1,
}


class ConfigError(ValueError):
    pass


def parse_complex(x):
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ConfigError(f"complex numbers are [re, im] pairs, got {x!r}")
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, str):
        return complex(x.replace(" ", ""))
    raise ConfigError(f"cannot read {x!r} as a complex number")


@dataclass
class ExperimentConfig:
    u: list
    N: list
    tasks: list
    seed: int = 0
    symbols: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, obj):
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(obj) - {"u", "N", "tasks", "seed", "symbols", "tolerances", "name"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "u" not in obj:
            raise ConfigError("config needs 'u' (Taylor coefficients)")
        u = obj["u"]
        if not isinstance(u, list):
            u = [u]
        u = [parse_complex(c) for c in u]
        if not u:
            raise ConfigError("'u' must not be empty")
        N = obj.get("N", [16, 32, 64, 128])
        if isinstance(N, int):
            N = [N]
        if not N or not all(isinstance(n, int) and n > 0 for n in N):
            raise ConfigError("'N' must be a positive integer or a list of them")
        if list(N) != sorted(N):
            raise ConfigError("'N' must be ascending")
        tasks = [_normalise_task(t) for t in obj.get("tasks", ["build"])]
        symbols = {}
        for name, sym in obj.get("symbols", {}).items():
            try:
                symbols[name] = SymbolMatrix.from_json(sym)
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"symbol {name!r}: {exc}") from exc
        tols = dict(DEFAULT_TOLERANCES)
        for k, v in obj.get("tolerances", {}).items():
            if k not in DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown tolerance {k!r}")
            tols[k] = float(v)
        seed = obj.get("seed", 0)
        if not isinstance(seed, int):
            raise ConfigError("'seed' must be an integer")
        return cls(u, list(N), tasks, seed, symbols, tols, obj)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(obj)

    def u_poly(self):
        return AnalyticPoly(np.array(self.u))


def _normalise_task(t):
    if isinstance(t, str):
        t = {"task": t}
    if not isinstance(t, dict) or "task" not in t:
        raise ConfigError(f"task entries are names or objects with 'task': {t!r}")
    if t["task"] not in TASKS:
        raise ConfigError(f"unknown task {t['task']!r}; choose from {', '.join(TASKS)}")
    return dict(t)


# -- checks -----------------------------------------------------------------


def check(invariant, value, tol, relation="<="):
    value = float(value)
    ok = value <= tol if relation == "<=" else value >= tol
    return {"invariant": invariant, "value": value, "tolerance": float(tol),
            "relation": relation, "passed": bool(ok)}


class Context:
    """Spaces and operators shared by the tasks of one run."""

    def __init__(self, config):
        self.config = config
        self.tol = config.tolerances
        self._spaces = {}

    def space(self, N):
        if N not in self._spaces:
            self._spaces[N] = ModelSpace(self.config.u_poly(), N)
        return self._spaces[N]

    def rng(self, task_index, N):
        return np.random.default_rng([self.config.seed, task_index, N])

    def operator(self, spec, space, rng):
        """Resolve an operator name to ``(matrix, symbol_or_None)``."""
        spec = spec or "S_u"
        if spec == "S_u":
            return build_Su(space), SymbolMatrix.diag(chi(), chi())
        if spec == "identity":
            return np.eye(space.dim), SymbolMatrix.identity()
        if spec == "k0k0":
            return rank_one(space.k0, space.k0), None
        if spec == "k0kt":
            return rank_one(space.k0, space.ktilde0), None
        if spec.startswith("X_mu:"):
            return build_Xmu(space, parse_complex(spec[5:])), None
        if spec == "random":
            F = random_symbol(rng)
            return compress_symbol(space, F), F
        if spec.startswith("symbol:"):
            name = spec[7:]
            if name not in self.config.symbols:
                raise ConfigError(f"unknown symbol {name!r}")
            F = self.config.symbols[name]
            return compress_symbol(space, F), F
        raise ConfigError(f"unknown operator {spec!r}")


def _task_build(ctx, space, params, rng):
    chk = space.check()
    sv = space.special_vector_check()
    target = 1 - abs(space.u.at_zero) ** 2
    metrics = {"dim": space.dim, **{k: v for k, v in chk.items() if k != "ok"}, **sv,
               "k0_norm_sq": space.k0.norm() ** 2, "ktilde0_norm_sq": space.ktilde0.norm() ** 2,
               "expected_norm_sq": target}
    checks = [
        check("onb orthonormal in the Gram form", chk["orthonormality"], ctx.tol["tol_orth"]),
        check("onb orthogonal to G generators", chk["generator_orthogonality"], ctx.tol["tol_orth"]),
        check("membership residual", chk["membership"], ctx.tol["tol_member"]),
        check("||k0||^2 = 1 - |u(0)|^2", sv["k0_norm_error"], ctx.tol["tol_vec"]),
        check("||ktilde0||^2 = 1 - |u(0)|^2", sv["ktilde0_norm_error"], ctx.tol["tol_vec"]),
        check("k0 closed form = P_H(1 (+) 0)", sv["k0_mismatch"], ctx.tol["tol_vec"]),
        check("ktilde0 closed form = P_H(conj(chi) u (+) conj(chi) Delta)", sv["ktilde0_mismatch"],
              ctx.tol["tol_vec"]),
    ]
    return metrics, checks


def _task_invariance(ctx, space, params, rng):
    T, _ = ctx.operator(params.get("operator"), space, rng)
    S = build_Su(space)
    r = invariance_residual(space, T, S)
    ra = invariance_residual(space, T, S, adjoint=True)
    tol = tolerance_for(space, T, S)
    metrics = {"residual": r, "adjoint_residual": ra, "tol_inv": tol}
    if params.get("expect", "invariant") == "invariant":
        dec = defect_decompose(space, T, S)
        deca = defect_decompose(space, T, S, adjoint=True)
        metrics.update(defect_residual=dec.residual, adjoint_defect_residual=deca.residual)
        checks = [check("invariance residual (ktilde0 side)", r, tol),
                  check("invariance residual (k0 side)", ra, tol),
                  check("defect decomposition residual", dec.residual, tol),
                  check("adjoint defect decomposition residual", deca.residual, tol)]
    else:
        checks = [check("operator violates invariance", r, ctx.tol["min_violation"], ">=")]
    return metrics, checks


def _task_recover(ctx, space, params, rng):
    count = int(params.get("count", 1))
    S = build_Su(space)
    checks, worst, zero_ok = [], 0.0, True
    for i in range(count):
        T, F = ctx.operator(params.get("operator", "random"), space, rng)
        cert = recover_symbol(space, T, S, certificate=True, strict=False)
        worst = max(worst, cert.residual)
        checks.append(check(f"||A_F' - T|| (operator {i})", cert.residual, cert.tolerance))
        if F is not None:
            z = zero_symbol_test(space, F - cert.symbol)
            zero_ok = zero_ok and z.is_zero
            checks.append(check(f"F - F' is a zero symbol (operator {i})",
                                max(z.residuals.values()), ctx.tol["tol_accept"]))
    metrics = {"worst_residual": worst, "count": count, "zero_symbol_differences": zero_ok}
    if count == 1:
        metrics["symbol"] = cert.symbol.trimmed(1e-13).to_json()
    return metrics, checks


def _task_zero_test(ctx, space, params, rng):
    count = int(params.get("count", 5))
    checks, norms = [], []
    for i in range(count):
        Z = random_zero_symbol(space, rng)
        z = zero_symbol_test(space, Z)
        norms.append(z.operator_norm)
        checks.append(check(f"zero symbol {i}: structural witnesses", max(z.residuals.values()),
                            ctx.tol["tol_accept"]))
        checks.append(check(f"zero symbol {i}: ||A_Z|| on the interior", z.operator_norm,
                            max(tolerance_for(space), 1e-9)))
    return {"operator_norms": norms}, checks


def _task_crofoot(ctx, space, params, rng):
    alpha = parse_complex(params.get("alpha", 0.3))
    cd = build_crofoot(space, alpha)
    comp, phase, _ = composition_defect(cd)
    tS = transport_report(cd, build_Su(space), "S_u")
    k0 = space.k0.coords
    tK = transport_report(cd, rank_one(k0, k0), "k0k0")
    metrics = dict(cd.to_json(), composition_defect=comp, S_u=tS, k0k0=tK)
    tol_t = tolerance_for(cd.target)
    checks = [
        check("||V*V - I|| on the interior", cd.isometry_defect, ctx.tol["tol_iso"]),
        check("range defect of V", cd.range_defect, ctx.tol["tol_iso"]),
        check("Delta_alpha grid identity", cd.delta_identity, ctx.tol["tol_grid"]),
        check("F_alpha F_alpha^-1 = I on the grid", cd.inverse_defect, ctx.tol["tol_grid"]),
        check("transport by -alpha returns to the start", comp, ctx.tol["tol_iso"]),
        check("transported S_u is invariant", tS["target_residual"], max(tol_t, 1e-9)),
    ]
    return metrics, checks


def _task_symmetry(ctx, space, params, rng):
    T, _ = ctx.operator(params.get("operator", "random"), space, rng)
    rep = build_Cu(space)
    S = build_Su(space)
    rep_json = decomposition_report(space, T, rep)
    csc = space.interior_norm(rep.conjugate_operator(S.conj().T) - S)
    tc = ctx.tol["tol_conj"]
    checks = [
        check("C_u^2 = I", rep.involution_defect, tc),
        check("C_u isometric", rep.unitarity_defect, tc),
        check("C_u k0 = ktilde0", rep.k0_defect, tc),
        check("C H_u subset H_u", rep.invariance_defect, tc),
        check("C_u S_u* C_u = S_u", csc, tc),
        check("T = T1 + T2", rep_json["sum_defect"], 1e-14 * max(1, np.abs(T).max())),
        check("T1 symmetric", rep_json["symmetric_defect"], tc),
        check("T2 skew-symmetric", rep_json["skew_defect"], tc),
    ]
    for key in ("T1_canonical", "T2_canonical"):
        c = rep_json[key]
        checks.append(check(f"{key} certified", c.get("reconstruction_residual", np.inf),
                            c.get("tolerance", 0.0)))
    return dict(rep_json, S_u_symmetry=csc), checks


def _task_xmu(ctx, space, params, rng):
    mu = parse_complex(params.get("mu", 0.5))
    X = build_Xmu(space, mu)
    basic = xmu_checks(space, X, mu)
    sv = np.linalg.svd(X @ space.interior, compute_uv=False) if space.interior.size else np.zeros(0)
    ts = ctx.tol["tol_sv"]
    metrics = dict(basic, interior_singular_values_min=float(sv.min()),
                   interior_singular_values_max=float(sv.max()))
    checks = [check("X_mu ktilde0 = mu k0", basic["ktilde0_to_mu_k0"], ctx.tol["tol_vec"]),
              check("X_mu = S_u off ktilde0", basic["agrees_with_S_off_ktilde0"], ctx.tol["tol_vec"])]
    if abs(abs(mu) - 1) < 1e-12:
        checks.append(check("interior singular values within tol_sv of 1", np.max(np.abs(sv - 1)), ts))
    else:
        below = int(np.sum(sv < 1 - 1e-3))
        metrics["count_below"] = below
        checks.append(check("exactly one singular value below 1", abs(below - 1), 0))
        if abs(mu) < 1:
            try:
                metrics["intertwining"] = xmu_intertwining(space, mu)
            except ValueError as exc:
                metrics["intertwining"] = {"error": str(exc)}
    return metrics, checks


def _task_noncommutative(ctx, space, params, rng):
    T1 = compress_symbol(space, SymbolMatrix.diag(1.0, 0.0))
    T2 = compress_symbol(space, SymbolMatrix(0.0, 0.0, CircleFunction.monomial(-1), 0.0))
    a = float(np.linalg.norm(T1 @ T2, 2))
    b = float(np.linalg.norm(T2 @ T1 - T2, 2))
    n2 = float(np.linalg.norm(T2, 2))
    te = ctx.tol["tol_example"]
    return {"T1T2": a, "T2T1_minus_T2": b, "T2_norm": n2}, [
        check("T1 T2 = 0", a, te), check("T2 T1 = T2", b, te),
        check("T2 != 0", n2, 0.5, ">=")]


def _task_commutant(ctx, space, params, rng):
    count = int(params.get("count", 3))
    tol = tolerance_for(space)
    checks = []
    for i in range(count):
        F, G = random_commutant(space, rng), random_commutant(space, rng)
        H = symbol_product(space, F, G)
        A, B, C = (compress_symbol(space, X) for X in (F, G, H))
        scale = max(1.0, np.linalg.norm(A, 2) * np.linalg.norm(B, 2))
        checks.append(check(f"A_F A_F' = A_F'' ({i})", space.interior_norm(A @ B - C), tol * scale))
        checks.append(check(f"A_F A_F' = A_F' A_F ({i})", space.interior_norm(A @ B - B @ A), tol * scale))
    return {"count": count}, checks


_RUNNERS = {
    "build": _task_build, "invariance": _task_invariance, "recover": _task_recover,
    "zero_test": _task_zero_test, "crofoot": _task_crofoot, "symmetry": _task_symmetry,
    "xmu": _task_xmu, "noncommutative-example": _task_noncommutative,
    "commutant": _task_commutant,
}


def _task_dsweep(ctx, params):
    leaks, checks = [], []
    for N in ctx.config.N:
        sp = ctx.space(N)
        leaks.append(defect_leak(sp))
    checks.append(check("defect identity leak at largest N", leaks[-1],
                        float(params.get("tol", 1e-6))))
    checks.append(check("leak non-increasing over N (noise floor)",
                        0.0 if tl.non_increasing(leaks) else 1.0, 0.0))
    return {"N": ctx.config.N, "leak": leaks}, checks


def run_config(config):
    """Run every task at every N and return the report dictionary."""
    ctx = Context(config)
    results = []
    for ti, task in enumerate(config.tasks):
        name = task["task"]
        params = {k: v for k, v in task.items() if k != "task"}
        if name == "dsweep":
            results.append(_guarded(name, None, params, lambda: _task_dsweep(ctx, params)))
            continue
        for N in params.get("N", config.N):
            def job(N=N):
                return _RUNNERS[name](ctx, ctx.space(N), params, ctx.rng(ti, N))
            results.append(_guarded(name, N, params, job))
    return {
        "config": config.raw,
        "seed": config.seed,
        "results": results,
        "passed": all(r["passed"] for r in results),
    }


def _guarded(name, N, params, job):
    entry = {"task": name, "N": N, "params": params}
    try:
        metrics, checks = job()
        entry.update(metrics=metrics, checks=checks, passed=all(c["passed"] for c in checks))
    except (NotPurelyContractive, SpaceConstructionError, ConfigError, ValueError) as exc:
        entry.update(error=f"{type(exc).__name__}: {exc}", checks=[], passed=False)
    return entry


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, complex) or isinstance(obj, np.complexfloating):
        return [float(obj.real), float(obj.imag)]
    return obj


# -- dump targets --------------------------------------------------------------


def dump_target(config, target, N=None):
    """JSON-ready content for ``mslab dump``."""
    N = config.N[0] if N is None else N
    space = ModelSpace(config.u_poly(), N)
    rng = np.random.default_rng([config.seed, 0, N])
    if target in ("S_u", "identity", "k0k0", "k0kt", "random") or target.startswith(("X_mu:", "symbol:")):
        T, _ = Context(config).operator(target, space, rng)
        return _matrix(T)
    if target == "k0":
        return _vector(space.k0.coords)
    if target == "ktilde0":
        return _vector(space.ktilde0.coords)
    if target == "onb":
        return _matrix(space.onb)
    if target == "space":
        return space.to_json()
    if target == "C_u":
        return _matrix(build_Cu(space).Mc)
    if target.startswith("recovered:"):
        T, _ = Context(config).operator(target[10:], space, rng)
        return recover_symbol(space, T, strict=False).trimmed(1e-13).to_json()
    raise ConfigError(f"unknown dump target {target!r}")


def _matrix(M):
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def _vector(v):
    return [[float(z.real), float(z.imag)] for z in v]


__all__ = ["ExperimentConfig", "ConfigError", "run_config", "dump_target", "to_jsonable"]
