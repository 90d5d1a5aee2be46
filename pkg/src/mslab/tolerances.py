"""Named numerical tolerances shared across the package."""

TOL_FFT = 1e-12
TOL_POS = 1e-12
TOL_STRICT = 1e-10
TOL_EXP = 1e-12

EPS_RANK = 1e-10
EPS_DELTA = 1e-8

TOL_ORTH = 1e-10
TOL_MEMBER = 1e-8
TOL_VEC = 1e-9
TOL_OP = 1e-8
TOL_SV = 1e-6
TOL_CONJ = 1e-9
TOL_LIMIT = 1e-9
TOL_ACCEPT = 1e-6

DEFAULT_GRID = 1024

# Residuals at the roundoff floor fluctuate; monotonicity checks ignore
# changes below this level.
NOISE_FLOOR = 1e-12


def calibrated(leak, scale=1.0, floor=1e-10):
    """Tolerance derived from a measured defect-identity leak.

    Ten times the leak at the same truncation order, never below `floor`,
    scaled by the operator size so roundoff in large operators is not
    mistaken for structure.
    """
    return max(10.0 * float(leak), floor) * max(1.0, float(scale))


def non_increasing(values, floor=NOISE_FLOOR):
    """True if `values` never grow by more than the noise floor."""
    return all(b <= max(a, floor) for a, b in zip(values, values[1:]))
