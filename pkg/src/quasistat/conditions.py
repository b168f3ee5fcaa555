"""Grid-scan verifiers for the monotonicity conditions of the kernel family.

Each check scans a finite grid and reports the largest wrong-direction
increment together with the scan coordinates that achieve it, so a failure
always comes with a concrete witness.  Grid scans cannot prove a statement
for all reals; they are confidence checks with deterministic counterexample
search.

Checked conditions (ids kept short on purpose, they appear in CSV output):

* C2: transition_cdf(s, x) nonincreasing in s for fixed x.
* C3: transition_cdf(t*s, t*x) nondecreasing in t for fixed (s, x).
* C4: transition_cdf(s, x)/transition_cdf(s, A) nonincreasing in s, x <= A.
* C5: transition_cdf(t*s, t*x)/transition_cdf(t*s, t*A) nondecreasing in t.
* D2: F(t*x)/F(t*A) nondecreasing in t for the innovation CDF F, x <= A.
* D3: phi positive and nondecreasing.
* D4: t/phi(t) nondecreasing.
* D5-heuristic: no collapse of simulated paths toward 0 (simulation-based,
  reported as a heuristic, never as proof).
"""

from dataclasses import dataclass

import numpy as np

from . import validation
from .exceptions import DomainError

__all__ = [
    "CONDITION_IDS",
    "GRID_CONDITION_IDS",
    "ConditionScan",
    "ConditionReport",
    "check_condition",
    "check_all_conditions",
]

GRID_CONDITION_IDS = ("C2", "C3", "C4", "C5", "D2", "D3", "D4")
CONDITION_IDS = GRID_CONDITION_IDS + ("D5-heuristic",)

DEFAULT_TOLERANCE = 1e-9
COLLAPSE_FRACTION_TOLERANCE = 0.01


@dataclass(frozen=True)
class ConditionScan:
    """Scan grids over the axes (s, t, x, A) used by the checkers.

    Axes must be finite, strictly increasing and stay inside the kernel
    domain; thresholds pair with evaluation points via x <= A.
    """

    s: np.ndarray
    t: np.ndarray
    x: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        for name in ("s", "t", "x", "a"):
            arr = validation.as_float_array(getattr(self, name), name)
            if arr.ndim != 1 or arr.size < 2:
                raise DomainError(f"scan axis {name} needs at least 2 points")
            if np.any(np.diff(arr) <= 0):
                raise DomainError(f"scan axis {name} must be strictly increasing")
            object.__setattr__(self, name, arr)

    @classmethod
    def default(cls, n_points=64, low=1e-3, high=1e3, extra_thresholds=()):
        """Log-spaced default box, 64 points per axis over [1e-3, 1e3]."""
        axis = np.geomspace(low, high, n_points)
        a = np.unique(np.concatenate([axis, np.asarray(extra_thresholds, dtype=float)]))
        return cls(s=axis, t=axis, x=axis, a=a)


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of one condition check.

    ``passed`` holds iff ``worst_violation <= tolerance`` where tolerance is
    the monotonicity tolerance for grid scans and the collapse-fraction
    tolerance for the D5 heuristic.  ``witness`` is the scan coordinate
    tuple achieving the worst violation (left point of the offending pair).
    """

    condition_id: str
    passed: bool
    worst_violation: float
    witness: tuple
    points_scanned: int
    tolerance: float


def _report(condition_id, worst, witness, points, tolerance):
    worst = float(worst)
    return ConditionReport(
        condition_id=condition_id,
        passed=bool(worst <= tolerance),
        worst_violation=worst,
        witness=tuple(float(w) for w in witness),
        points_scanned=int(points),
        tolerance=float(tolerance),
    )


def _worst_drop(values, axis=0):
    """Largest increase along axis (violation of 'nonincreasing')."""
    inc = np.diff(values, axis=axis)
    viol = np.maximum(inc, 0.0)
    return viol


def _worst_rise(values, axis=0):
    """Largest decrease along axis (violation of 'nondecreasing')."""
    dec = -np.diff(values, axis=axis)
    viol = np.maximum(dec, 0.0)
    return viol


def _argmax_nd(arr):
    flat = int(np.argmax(arr))
    return np.unravel_index(flat, arr.shape)


def _threshold_pairs(scan):
    """All (x, A) pairs from the scan with x <= A."""
    xg, ag = np.meshgrid(scan.x, scan.a, indexing="ij")
    mask = xg <= ag
    return xg[mask], ag[mask]


def _check_c2(kernel, scan, tol):
    # rows: s, cols: x
    r = kernel.transition_cdf(scan.s[:, None], scan.x[None, :])
    viol = _worst_drop(r, axis=0)
    i, j = _argmax_nd(viol)
    points = scan.s.size * scan.x.size
    return _report("C2", viol[i, j], (scan.s[i], scan.x[j]), points, tol)


def _check_c3(kernel, scan, tol):
    # axes: t, s, x
    t = scan.t[:, None, None]
    r = kernel.transition_cdf(t * scan.s[None, :, None], t * scan.x[None, None, :])
    viol = _worst_rise(r, axis=0)
    i, j, k = _argmax_nd(viol)
    points = scan.t.size * scan.s.size * scan.x.size
    return _report("C3", viol[i, j, k], (scan.t[i], scan.s[j], scan.x[k]), points, tol)


def _conditioned_ratio(kernel, s, x, a):
    """transition_cdf(s, x) / transition_cdf(s, a) with 0-denominator masking."""
    denom = np.asarray(kernel.transition_cdf(s, a))
    num = np.asarray(kernel.transition_cdf(s, x))
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(denom > 0.0, num / np.where(denom > 0.0, denom, 1.0), np.nan)
    return ratio


def _check_c4(kernel, scan, tol):
    xs, As = _threshold_pairs(scan)
    # rows: s, cols: (x, A) pairs
    ratio = _conditioned_ratio(kernel, scan.s[:, None], xs[None, :], As[None, :])
    viol = np.where(np.isnan(ratio[:-1]) | np.isnan(ratio[1:]), 0.0,
                    _worst_drop(ratio, axis=0))
    i, j = _argmax_nd(viol)
    points = scan.s.size * xs.size
    return _report("C4", viol[i, j], (scan.s[i], xs[j], As[j]), points, tol)


def _check_c5(kernel, scan, tol):
    xs, As = _threshold_pairs(scan)
    worst = 0.0
    witness = (scan.t[0], scan.s[0], xs[0], As[0])
    prev = None
    # loop over t to bound memory; s x pairs stays vectorized
    for ti, t in enumerate(scan.t):
        ratio = _conditioned_ratio(kernel, t * scan.s[:, None], t * xs[None, :], t * As[None, :])
        if prev is not None:
            viol = np.where(np.isnan(prev) | np.isnan(ratio), 0.0,
                            np.maximum(prev - ratio, 0.0))
            i, j = _argmax_nd(viol)
            if viol[i, j] > worst:
                worst = viol[i, j]
                witness = (scan.t[ti - 1], scan.s[i], xs[j], As[j])
        prev = ratio
    points = scan.t.size * scan.s.size * xs.size
    return _report("C5", worst, witness, points, tol)


def _check_d2(kernel, scan, tol):
    xs, As = _threshold_pairs(scan)
    t = scan.t[:, None]
    denom = np.asarray(kernel.innovation.cdf(t * As[None, :]))
    num = np.asarray(kernel.innovation.cdf(t * xs[None, :]))
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(denom > 0.0, num / np.where(denom > 0.0, denom, 1.0), np.nan)
    viol = np.where(np.isnan(ratio[:-1]) | np.isnan(ratio[1:]), 0.0,
                    _worst_rise(ratio, axis=0))
    i, j = _argmax_nd(viol)
    points = scan.t.size * xs.size
    return _report("D2", viol[i, j], (scan.t[i], xs[j], As[j]), points, tol)


def _check_d3(kernel, scan, tol):
    phi = np.asarray(kernel.phi(scan.t), dtype=float)
    if np.any(phi <= 0.0):
        j = int(np.argmax(phi <= 0.0))
        return _report("D3", np.inf, (scan.t[j],), scan.t.size, tol)
    mono = _worst_rise(phi, axis=0)
    i = int(np.argmax(mono))
    return _report("D3", mono[i], (scan.t[i],), scan.t.size, tol)


def _check_d4(kernel, scan, tol):
    phi = np.asarray(kernel.phi(scan.t), dtype=float)
    if np.any(phi <= 0.0):
        j = int(np.argmax(phi <= 0.0))
        return _report("D4", np.inf, (scan.t[j],), scan.t.size, tol)
    g = scan.t / phi
    viol = _worst_rise(g, axis=0)
    i = int(np.argmax(viol))
    return _report("D4", viol[i], (scan.t[i],), scan.t.size, tol)


def _check_d5(kernel, n_paths, n_steps, seed, initial_state, collapse_ratio, tol):
    """Simulate unconditioned paths and flag mass collapsing toward 0.

    Heuristic only: a finite simulation cannot verify P(lim M_n = 0) = 0.
    """
    rng = np.random.default_rng(seed)
    m = np.full(n_paths, float(initial_state))
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n_steps):
            lam = kernel.innovation.quantile(rng.random(n_paths))
            m = np.asarray(kernel.phi(m), dtype=float) * lam
            m = np.where(np.isnan(m), np.inf, m)  # inf * 0 guard for exploding phi
    collapsed = np.count_nonzero(m < collapse_ratio * initial_state)
    fraction = collapsed / n_paths
    return _report("D5-heuristic", fraction, (float(initial_state),), n_paths, tol)


def check_condition(kernel, condition_id, scan=None, monotonicity_tolerance=DEFAULT_TOLERANCE,
                    *, n_paths=1000, n_steps=10000, seed=0, initial_state=1.0,
                    collapse_ratio=1e-12,
                    collapse_fraction_tolerance=COLLAPSE_FRACTION_TOLERANCE):
    """Verify one kernel condition on a finite scan grid.

    Parameters
    ----------
    kernel : MultiplicativeKernel
        Kernel under test.
    condition_id : str
        One of ``CONDITION_IDS``.
    scan : ConditionScan, optional
        Scan grids; defaults to 64 log-spaced points per axis on
        [1e-3, 1e3].
    monotonicity_tolerance : float
        Largest tolerated wrong-direction increment for the grid checks.

    The remaining keyword arguments configure the D5 heuristic only:
    ``n_paths`` trajectories of ``n_steps`` steps start at
    ``initial_state`` and the check fails when more than
    ``collapse_fraction_tolerance`` of them end below
    ``collapse_ratio * initial_state``.

    Returns
    -------
    ConditionReport
    """
    if condition_id not in CONDITION_IDS:
        raise DomainError(f"unknown condition_id {condition_id!r}; expected one of {CONDITION_IDS}")
    tol = validation.check_scalar(monotonicity_tolerance, "monotonicity_tolerance", minimum=0.0)
    if condition_id == "D5-heuristic":
        n_paths = validation.check_positive_int(n_paths, "n_paths", minimum=1)
        n_steps = validation.check_positive_int(n_steps, "n_steps", minimum=1)
        return _check_d5(kernel, n_paths, n_steps, seed, initial_state, collapse_ratio,
                         collapse_fraction_tolerance)
    if scan is None:
        scan = ConditionScan.default()
    dispatch = {
        "C2": _check_c2,
        "C3": _check_c3,
        "C4": _check_c4,
        "C5": _check_c5,
        "D2": _check_d2,
        "D3": _check_d3,
        "D4": _check_d4,
    }
    return dispatch[condition_id](kernel, scan, tol)


def check_all_conditions(kernel, condition_ids=CONDITION_IDS, scan=None,
                         monotonicity_tolerance=DEFAULT_TOLERANCE, **d5_options):
    """Run several condition checks and return the reports in order."""
    return [check_condition(kernel, cid, scan=scan,
                            monotonicity_tolerance=monotonicity_tolerance, **d5_options)
            for cid in condition_ids]
