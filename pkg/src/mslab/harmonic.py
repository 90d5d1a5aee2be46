"""Scalar functions on the unit circle held as truncated Fourier series.

A :class:`CircleFunction` stores the coefficients ``c_j`` for ``|j| <= M``
of the trigonometric polynomial ``sum_j c_j zeta**j``.  Pointwise values on
the grid ``zeta_k = exp(2 pi i k / G)`` are derived from the coefficients on
demand.  Products are formed on the grid, which is alias-free as long as
``G >= 4 M + 1`` for every operand.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .tolerances import DEFAULT_GRID, EPS_DELTA, TOL_FFT, TOL_POS, TOL_STRICT


class WindowOverflow(ValueError):
    """A result does not fit in the coefficient window of its grid."""


class NotPurelyContractive(ValueError):
    """The characteristic function violates ``|u| <= 1`` or ``|u(0)| < 1``."""


def max_order(grid_size):
    """Largest coefficient order that keeps pairwise products alias-free."""
    return (grid_size - 1) // 4


def grid_for_order(order, minimum=DEFAULT_GRID):
    """Smallest power of two (at least `minimum`) supporting `order`."""
    g = max(int(minimum), 4)
    while max_order(g) < order:
        g *= 2
    return g


def window(coeffs, order, lo, hi):
    """Coefficients with indices ``lo..hi`` of a centred array of `order`.

    Indices outside the stored range read as zero.
    """
    coeffs = np.asarray(coeffs)
    out = np.zeros(hi - lo + 1, dtype=complex)
    src_lo, src_hi = max(lo, -order), min(hi, order)
    if src_lo <= src_hi:
        out[src_lo - lo:src_hi - lo + 1] = coeffs[src_lo + order:src_hi + order + 1]
    return out


def convolve(a, order_a, b, order_b):
    """Coefficients of the product of two centred coefficient arrays.

    Unlike :meth:`CircleFunction.multiply` this places no restriction on the
    output order; it is the workhorse for intermediate, wide-window products.
    """
    return np.convolve(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)), order_a + order_b


@dataclass(frozen=True, eq=False)
class CircleFunction:
    """Trigonometric polynomial ``sum_{|j| <= M} coeffs[j + M] zeta**j``."""

    coeffs: np.ndarray
    grid_size: int = DEFAULT_GRID

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        if c.size % 2 != 1:
            raise ValueError("coefficient array must have odd length 2M+1")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "grid_size", int(self.grid_size))
        if 4 * self.order + 1 > self.grid_size:
            raise WindowOverflow(
                f"order {self.order} needs grid_size >= {4 * self.order + 1}, "
                f"got {self.grid_size}")

    # -- construction -------------------------------------------------

    @classmethod
    def zero(cls, grid_size=DEFAULT_GRID):
        return cls(np.zeros(1), grid_size)

    @classmethod
    def constant(cls, value, grid_size=DEFAULT_GRID):
        return cls(np.array([value]), grid_size)

    @classmethod
    def monomial(cls, k, value=1.0, grid_size=DEFAULT_GRID):
        c = np.zeros(2 * abs(k) + 1, dtype=complex)
        c[k + abs(k)] = value
        return cls(c, grid_size)

    @classmethod
    def from_indexed(cls, terms, grid_size=DEFAULT_GRID):
        """Build from a mapping ``{j: c_j}``."""
        order = max((abs(j) for j in terms), default=0)
        c = np.zeros(2 * order + 1, dtype=complex)
        for j, v in terms.items():
            c[j + order] += v
        return cls(c, grid_size)

    @classmethod
    def from_window(cls, coeffs, lo, grid_size=DEFAULT_GRID):
        """Build from coefficients indexed ``lo, lo+1, ...``."""
        coeffs = np.asarray(coeffs, dtype=complex)
        hi = lo + coeffs.size - 1
        order = max(abs(lo), abs(hi))
        c = np.zeros(2 * order + 1, dtype=complex)
        c[lo + order:hi + order + 1] = coeffs
        return cls(c, grid_size)

    @classmethod
    def from_values(cls, values, order=None):
        """Coefficients of order <= `order` from samples on the full grid."""
        values = np.asarray(values, dtype=complex)
        g = values.size
        if order is None:
            order = max_order(g)
        spectrum = np.fft.fft(values) / g
        idx = np.arange(-order, order + 1) % g
        return cls(spectrum[idx], g)

    # -- basic properties ---------------------------------------------

    @property
    def order(self):
        return (self.coeffs.size - 1) // 2

    def coefficient(self, j):
        m = self.order
        return self.coeffs[j + m] if -m <= j <= m else 0j

    def window(self, lo, hi):
        return window(self.coeffs, self.order, lo, hi)

    @cached_property
    def nodes(self):
        return np.exp(2j * np.pi * np.arange(self.grid_size) / self.grid_size)

    @cached_property
    def values(self):
        """Samples at the grid nodes."""
        g = self.grid_size
        buf = np.zeros(g, dtype=complex)
        m = self.order
        buf[np.arange(-m, m + 1) % g] = self.coeffs
        return np.fft.ifft(buf) * g

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        m = self.order
        powers = np.arange(-m, m + 1)
        return np.sum(self.coeffs * z[..., None] ** powers, axis=-1)

    def l2_norm(self):
        return float(np.linalg.norm(self.coeffs))

    def sup_norm(self):
        return float(np.max(np.abs(self.values)))

    def is_analytic(self, tol=0.0):
        return bool(np.all(np.abs(self.coeffs[:self.order]) <= tol))

    def degree(self, tol=0.0):
        """Highest index with a coefficient above `tol` (or -1 if none)."""
        nz = np.nonzero(np.abs(self.coeffs) > tol)[0]
        return int(nz[-1]) - self.order if nz.size else -1

    # -- reshaping ----------------------------------------------------

    def with_order(self, order):
        """Zero-pad or truncate to the given order."""
        return CircleFunction(self.window(-order, order), self.grid_size)

    def with_grid(self, grid_size):
        return CircleFunction(self.coeffs, grid_size)

    def trimmed(self, tol=0.0):
        """Drop the outermost coefficient pairs whose modulus is <= `tol`."""
        m = self.order
        a = np.abs(self.coeffs)
        while m > 0 and a[self.order - m] <= tol and a[self.order + m] <= tol:
            m -= 1
        return self.with_order(m)

    # -- arithmetic ---------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, CircleFunction):
            if other.grid_size != self.grid_size:
                raise ValueError(
                    f"grid mismatch: {self.grid_size} vs {other.grid_size}")
            return other
        return CircleFunction.constant(other, self.grid_size)

    def __add__(self, other):
        other = self._coerce(other)
        m = max(self.order, other.order)
        return CircleFunction(self.window(-m, m) + other.window(-m, m), self.grid_size)

    __radd__ = __add__

    def __neg__(self):
        return CircleFunction(-self.coeffs, self.grid_size)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, CircleFunction):
            return self.multiply(other)
        return CircleFunction(self.coeffs * other, self.grid_size)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return CircleFunction(self.coeffs / scalar, self.grid_size)

    def multiply(self, other):
        """Pointwise product, formed on the grid."""
        other = self._coerce(other)
        m = self.order + other.order
        if 4 * m + 1 > self.grid_size:
            raise WindowOverflow(
                f"product order {m} exceeds the alias-free window of grid {self.grid_size}")
        return CircleFunction.from_values(self.values * other.values, m)

    def conj(self):
        """Pointwise complex conjugate: ``c_j -> conj(c_{-j})``."""
        return CircleFunction(np.conj(self.coeffs[::-1]), self.grid_size)

    def shift(self, k):
        """Multiplication by ``chi**k``."""
        m = self.order + abs(k)
        c = self.window(-m - k, m - k)
        return CircleFunction(c, self.grid_size)

    def project_plus(self):
        """Orthogonal projection onto H^2 (drop negative frequencies)."""
        return AnalyticPoly(self.coeffs[self.order:], self.grid_size)

    def project_minus(self):
        c = self.coeffs.copy()
        c[self.order:] = 0
        return CircleFunction(c, self.grid_size)

    def allclose(self, other, atol=TOL_FFT):
        m = max(self.order, other.order)
        return bool(np.max(np.abs(self.window(-m, m) - other.window(-m, m))) <= atol)

    # -- I/O ----------------------------------------------------------

    def to_json(self):
        return [[float(z.real), float(z.imag)] for z in self.coeffs]

    @classmethod
    def from_json(cls, pairs, grid_size=DEFAULT_GRID):
        pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
        return cls(pairs[:, 0] + 1j * pairs[:, 1], grid_size)

    def __repr__(self):
        return f"CircleFunction(order={self.order}, grid_size={self.grid_size})"


class AnalyticPoly(CircleFunction):
    """A :class:`CircleFunction` with no negative frequencies.

    Built from Taylor coefficients ``t_0, t_1, ...``.
    """

    def __init__(self, taylor, grid_size=DEFAULT_GRID):
        t = np.atleast_1d(np.asarray(taylor, dtype=complex))
        c = np.concatenate([np.zeros(t.size - 1, dtype=complex), t])
        super().__init__(c, grid_size)

    @classmethod
    def from_function(cls, f, tol=0.0):
        if not f.is_analytic(tol):
            raise ValueError("function has nonzero negative-frequency coefficients")
        return cls(f.coeffs[f.order:], f.grid_size)

    @property
    def taylor(self):
        return self.coeffs[self.order:]

    @property
    def at_zero(self):
        return complex(self.coeffs[self.order])

    def poly_degree(self, tol=0.0):
        return max(self.degree(tol), 0)


def chi(k=1, grid_size=DEFAULT_GRID):
    """The monomial ``chi**k``; analytic when ``k >= 0``."""
    if k >= 0:
        t = np.zeros(k + 1, dtype=complex)
        t[k] = 1.0
        return AnalyticPoly(t, grid_size)
    return CircleFunction.monomial(k, grid_size=grid_size)


def as_analytic(u, grid_size=DEFAULT_GRID):
    """Coerce a scalar, Taylor sequence or analytic CircleFunction."""
    if isinstance(u, AnalyticPoly):
        return u
    if isinstance(u, CircleFunction):
        return AnalyticPoly.from_function(u)
    return AnalyticPoly(u, grid_size)


# -- the defect function -----------------------------------------------

@dataclass(frozen=True)
class ContractivityReport:
    sup_norm: float
    u0: complex
    passed: bool
    inner: bool
    delta_vanishes: bool
    zero_set_fraction: float
    messages: list = field(default_factory=list)

    def raise_if_failed(self):
        if not self.passed:
            raise NotPurelyContractive("; ".join(self.messages))


@dataclass(frozen=True)
class DeltaData:
    """``Delta = (1 - |u|^2)^{1/2}`` together with its exact square."""

    delta: CircleFunction
    delta_sq: CircleFunction
    residual: float
    inner: bool


def squared_defect(u):
    """``1 - |u|^2`` as an exact trigonometric polynomial."""
    uc, m = convolve(u.coeffs, u.order, np.conj(u.coeffs[::-1]), u.order)
    uc = -uc
    uc[m] += 1.0
    uc[np.abs(uc) < TOL_FFT * 1e-3] = 0.0
    return CircleFunction(uc, u.grid_size)


def check_purely_contractive(u, tol_pos=TOL_POS, tol_strict=TOL_STRICT):
    """Diagnose whether `u` is an admissible characteristic function.

    Checks ``max |u| <= 1 + tol_pos`` on the grid and ``|u(0)| < 1 - tol_strict``.
    Boundary-touching functions pass but are flagged via ``delta_vanishes``.
    """
    u = as_analytic(u)
    sup = u.sup_norm()
    u0 = u.at_zero
    messages = []
    if sup > 1.0 + tol_pos:
        messages.append(f"sup norm {sup:.6g} exceeds 1")
    if abs(u0) >= 1.0 - tol_strict:
        messages.append(f"|u(0)| = {abs(u0):.6g}: not purely contractive")
    dsq = squared_defect(u).values.real
    small = dsq <= EPS_DELTA ** 2
    inner = bool(np.all(np.abs(dsq) <= 1e3 * tol_pos))
    if small.any() and not inner:
        messages.append("Delta vanishes somewhere on the circle")
    passed = sup <= 1.0 + tol_pos and abs(u0) < 1.0 - tol_strict
    return ContractivityReport(sup, u0, passed, inner, bool(small.any()),
                               float(small.mean()), messages)


def delta_from_u(u, order=None, oversample=64, tol_pos=TOL_POS):
    """Compute ``Delta`` and ``Delta^2`` for an analytic polynomial `u`.

    ``Delta^2`` is exact.  ``Delta`` is sampled on a grid `oversample` times
    finer than ``u.grid_size`` (so aliasing of a non-smooth square root is
    negligible), then truncated to `order` (default: the grid-supported
    order).  The reported residual is ``max |Delta^2 - (Delta)^2|`` on the
    grid of `u`.
    """
    u = as_analytic(u)
    dsq = squared_defect(u)
    g = u.grid_size
    if order is None:
        order = max_order(g)
    fine = CircleFunction(dsq.coeffs, g * oversample).values.real
    if fine.min() < -tol_pos:
        raise NotPurelyContractive(
            f"1 - |u|^2 reaches {fine.min():.3g} < 0: sup norm of u exceeds 1")
    root = np.sqrt(np.maximum(fine, 0.0))
    spectrum = np.fft.fft(root) / root.size
    coeffs = spectrum[np.arange(-order, order + 1) % root.size]
    coeffs = 0.5 * (coeffs + np.conj(coeffs[::-1]))  # Delta is real
    delta = CircleFunction(coeffs, g)
    inner = bool(np.max(np.abs(dsq.coeffs)) <= 1e3 * tol_pos)
    residual = float(np.max(np.abs(delta.values.real ** 2 - dsq.values.real)))
    return DeltaData(delta, dsq, residual, inner)


def delta_grid(u, grid_size=None):
    """Exact pointwise ``Delta`` on a grid (no Fourier truncation)."""
    u = as_analytic(u)
    g = grid_size or u.grid_size
    dsq = CircleFunction(squared_defect(u).coeffs, g).values.real
    return np.sqrt(np.maximum(dsq, 0.0))


def toeplitz_block(coeffs, order, out_range, in_range):
    """Matrix of multiplication by a function between coefficient windows.

    Entry ``[k - out_lo, j - in_lo]`` is the coefficient ``phi_{k-j}``, so the
    matrix maps the coefficients of ``f`` on ``in_range`` to those of
    ``phi f`` on ``out_range`` (both ranges inclusive).
    """
    from scipy.linalg import toeplitz

    out_lo, out_hi = out_range
    in_lo, in_hi = in_range
    col = window(coeffs, order, out_lo - in_lo, out_hi - in_lo)
    row = window(coeffs, order, out_lo - in_hi, out_lo - in_lo)[::-1]
    return toeplitz(col, row)
