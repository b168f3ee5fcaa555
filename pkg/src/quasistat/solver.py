"""Killed-kernel discretization, Yaglom iteration and exit-time evaluation.

The continuous kernel restricted to [0, A] is discretized by midpoint
collocation of the source state: cell i contributes row i with entries

    mass[i, j] = transition_cdf(s_i, x_{j+1}) - transition_cdf(s_i, x_j),

so each row telescopes exactly to the one-step survival probability
transition_cdf(s_i, A) minus the (negligible) mass below the lower edge.
The quasistationary distribution is computed by kill-and-renormalize
propagation (the conditional law given survival so far), whose fixpoint is
the principal left eigenvector of the sub-stochastic mass matrix.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import validation
from .exceptions import (
    DegenerateRowError,
    DivergenceError,
    DomainError,
    ExtinctionError,
    NonConvergenceError,
    SingularSystemError,
    VacuousThresholdError,
)
from .grids import GridSpec, default_grid

__all__ = [
    "KilledKernel",
    "QsdSolution",
    "DominanceReport",
    "build_killed_kernel",
    "yaglom_iterate",
    "expected_exit_time_geometric",
    "expected_exit_time_fundamental",
    "stationary_of_conditioned",
    "dominance_gap",
    "check_scaling_dominance",
    "lambda_refinement",
    "QsdSolver",
]

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 1_000_000
ROW_SUM_ATOL = 1e-12
VACUOUS_ATOL = 1e-15
DEFAULT_SLACK_CELLS = 5.0


@dataclass(frozen=True)
class KilledKernel:
    """Sub-stochastic transition-mass matrix on a grid over [lower, A].

    ``mass[i, j]`` is the probability of moving from the representative of
    cell i into cell j in one step; ``survival[i]`` is the probability of
    staying at or below the threshold.  Mass exceeding the threshold is
    killed, so rows sum to ``survival`` (up to mass below the lower edge).
    """

    grid: GridSpec
    mass: np.ndarray
    survival: np.ndarray

    def __post_init__(self):
        mass = validation.as_float_array(self.mass, "mass")
        survival = validation.as_float_array(self.survival, "survival")
        n = self.grid.n_cells
        if mass.shape != (n, n):
            raise DomainError(f"mass must be {n}x{n} to match the grid")
        if survival.shape != (n,):
            raise DomainError(f"survival must have length {n}")
        if np.any(mass < 0):
            raise DomainError("mass entries must be nonnegative")
        if np.any(survival > 1.0):
            raise DomainError("survival probabilities must be <= 1")
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "survival", survival)

    @property
    def threshold(self):
        return self.grid.upper


@dataclass(frozen=True)
class QsdSolution:
    """Quasistationary distribution on a grid, with diagnostics.

    Attributes
    ----------
    weights : ndarray
        QSD mass per cell (sums to 1).
    lam : float
        One-step survival probability under the QSD; the principal
        eigenvalue of the killed kernel.
    expected_exit_time : float
        1 / (1 - lam) (inf when lam is numerically 1).
    iterations, residual, converged :
        Yaglom-iteration diagnostics; ``residual`` is the L1 change of the
        final iteration.
    eigen_residual : float
        ||weights @ mass - lam * weights||_1, a direct fixpoint check.
    """

    grid: GridSpec
    weights: np.ndarray
    lam: float
    expected_exit_time: float
    iterations: int
    residual: float
    converged: bool
    eigen_residual: float
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        weights = validation.as_float_array(self.weights, "weights")
        if weights.shape != (self.grid.n_cells,):
            raise DomainError("weights must have one entry per grid cell")
        weights = weights.copy()
        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)
        cum = np.concatenate([[0.0], np.cumsum(weights)])
        # guard float drift so cdf(threshold) == 1 exactly
        cum[-1] = 1.0
        cum.flags.writeable = False
        object.__setattr__(self, "_cum", cum)

    @property
    def threshold(self):
        return self.grid.upper

    def cdf(self, x):
        """CDF by linear interpolation of cumulative cell weights.

        Evaluates to 0 at and below the grid's lower edge and to 1 at and
        above the threshold.
        """
        x = validation.as_float_array(x, "x")
        return validation.maybe_scalar(np.interp(x, self.grid.edges, self._cum))


def build_killed_kernel(kernel, threshold, grid=None):
    """Discretize a kernel on [grid.lower, threshold] with killing above.

    Parameters
    ----------
    kernel : MultiplicativeKernel
    threshold : float
        Exit threshold A > 0; must equal ``grid.upper``.
    grid : GridSpec, optional
        Defaults to a geometric grid with 400 cells.

    Returns
    -------
    KilledKernel

    Raises
    ------
    VacuousThresholdError
        If no row can exceed the threshold in one step.
    """
    threshold = validation.check_scalar(threshold, "threshold", minimum=0.0, exclusive_min=True)
    if grid is None:
        grid = default_grid(kernel, threshold)
    if grid.upper != threshold:
        raise DomainError("grid.upper must equal the threshold")
    if grid.lower < kernel.state_space_floor:
        raise DomainError("grid lower edge must not go below the kernel's state_space_floor")
    cdf_at_edges = np.asarray(
        kernel.transition_cdf(grid.representatives[:, None], grid.edges[None, :]))
    mass = np.diff(cdf_at_edges, axis=1)
    survival = cdf_at_edges[:, -1]
    if np.all(survival >= 1.0 - VACUOUS_ATOL):
        raise VacuousThresholdError(
            "no grid row can exceed the threshold in one step; threshold is vacuous")
    below = float(np.max(cdf_at_edges[:, 0]))
    if below > ROW_SUM_ATOL:
        warnings.warn(
            f"mass below the grid's lower edge reaches {below:.3g}; row sums deviate "
            "from survival by more than 1e-12 (consider lowering the grid's lower edge)",
            RuntimeWarning, stacklevel=2)
    return KilledKernel(grid=grid, mass=mass, survival=survival)


def yaglom_iterate(kk, initial=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Compute the quasistationary distribution by kill-and-renormalize.

    Propagates a distribution through the killed kernel and renormalizes,
    which is the conditional law given survival for n steps; the L1 change
    between successive renormalized iterates is driven below ``tol``.

    Parameters
    ----------
    kk : KilledKernel
    initial : array_like, optional
        Starting distribution over cells; defaults to uniform.  Must sum
        to 1.
    tol : float
        L1 convergence tolerance.
    max_iter : int
        Iteration cap; hitting it yields ``converged=False`` with
        diagnostics rather than an exception.

    Returns
    -------
    QsdSolution

    Raises
    ------
    ExtinctionError
        If the propagated mass underflows to zero (the whole support
        escapes in one step).
    """
    tol = validation.check_scalar(tol, "tol", minimum=0.0, exclusive_min=True)
    max_iter = validation.check_positive_int(max_iter, "max_iter", minimum=1)
    n = kk.grid.n_cells
    if initial is None:
        q = np.full(n, 1.0 / n)
    else:
        q = validation.as_probability_vector(initial, "initial")
        if q.size != n:
            raise DomainError("initial distribution must have one entry per grid cell")
    mass = kk.mass
    residual = np.inf
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        propagated = q @ mass
        norm = float(propagated.sum())
        if norm <= 0.0:
            raise ExtinctionError("all mass escaped in one step; cannot renormalize")
        propagated /= norm
        residual = float(np.abs(propagated - q).sum())
        q = propagated
        if residual <= tol:
            converged = True
            break
    image = q @ mass
    lam = float(image.sum())
    eigen_residual = float(np.abs(image - lam * q).sum())
    expected = 1.0 / (1.0 - lam) if lam < 1.0 - VACUOUS_ATOL else np.inf
    return QsdSolution(grid=kk.grid, weights=q, lam=lam, expected_exit_time=expected,
                       iterations=iterations, residual=residual, converged=converged,
                       eigen_residual=eigen_residual)


def expected_exit_time_geometric(sol):
    """Expected exit time 1/(1 - lam) of the geometric exit law.

    Under the QSD the exit time is geometric with success probability
    1 - lam, hence this closed form.
    """
    lam = sol.lam if hasattr(sol, "lam") else validation.check_scalar(sol, "lam")
    if not 0.0 <= lam:
        raise DomainError("lam must be nonnegative")
    if lam >= 1.0 - VACUOUS_ATOL:
        raise DivergenceError(f"survival eigenvalue {lam!r} too close to 1; exit time diverges")
    return 1.0 / (1.0 - lam)


def expected_exit_time_fundamental(kk, start):
    """Exact expected exit time of the discrete chain from a start law.

    Independent of the eigenvalue route: solves (I - mass) h = 1 for the
    per-cell expected absorption times and returns start @ h.
    """
    start = validation.as_probability_vector(start, "start")
    n = kk.grid.n_cells
    if start.size != n:
        raise DomainError("start distribution must have one entry per grid cell")
    system = np.eye(n) - kk.mass
    try:
        hitting = np.linalg.solve(system, np.ones(n))
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"fundamental-matrix solve failed: {exc}") from exc
    if not np.all(np.isfinite(hitting)):
        raise SingularSystemError("fundamental-matrix solve produced non-finite times")
    return float(start @ hitting)


def stationary_of_conditioned(kk, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Stationary distribution of the survival-conditioned one-step chain.

    Row-normalizes the killed kernel by its survival mass (the chain
    conditioned to survive the *next* step) and power-iterates to the
    stationary law.  In general this differs from the Yaglom QSD unless
    survival is constant across rows; callers report the L1 distance.
    """
    tol = validation.check_scalar(tol, "tol", minimum=0.0, exclusive_min=True)
    max_iter = validation.check_positive_int(max_iter, "max_iter", minimum=1)
    if np.any(kk.survival <= 0.0):
        raise DegenerateRowError("every row needs positive survival mass to condition on")
    transition = kk.mass / kk.survival[:, None]
    n = kk.grid.n_cells
    q = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        propagated = q @ transition
        propagated /= propagated.sum()
        change = float(np.abs(propagated - q).sum())
        q = propagated
        if change <= tol:
            return q
    warnings.warn("stationary_of_conditioned hit max_iter without converging",
                  RuntimeWarning, stacklevel=2)
    return q


@dataclass(frozen=True)
class DominanceReport:
    """Worst signed CDF gap for the scaled-threshold dominance check."""

    passed: bool
    worst_gap: float
    witness_x: float
    slack: float
    y: float


def dominance_gap(sol_base, sol_scaled, y):
    """Worst signed gap min_x [cdf_scaled(y*x) - cdf_base(x)] over the
    base grid's edges, with the x achieving it."""
    xs = sol_base.grid.edges
    gaps = np.asarray(sol_scaled.cdf(y * xs)) - np.asarray(sol_base.cdf(xs))
    k = int(np.argmin(gaps))
    return float(gaps[k]), float(xs[k])


def check_scaling_dominance(kernel, threshold, y, grid=None, grid_scaled=None,
                            tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, slack=None):
    """Check that scaling the threshold by y >= 1 scales the QSD up.

    Solves the QSD at ``threshold`` and at ``y * threshold`` (on the
    y-scaled grid by default, so cells align under x -> y*x) and requires
    cdf_scaled(y*x) >= cdf_base(x) - slack at every base grid edge.  The
    slack absorbs discretization error and defaults to 5/n_cells.

    Returns
    -------
    DominanceReport
    """
    y = validation.check_scalar(y, "y", minimum=1.0)
    if grid is None:
        grid = default_grid(kernel, threshold)
    if grid_scaled is None:
        grid_scaled = grid.scaled(y)
    if slack is None:
        slack = DEFAULT_SLACK_CELLS / grid.n_cells
    slack = validation.check_scalar(slack, "slack", minimum=0.0)
    sol_base = yaglom_iterate(build_killed_kernel(kernel, grid.upper, grid),
                              tol=tol, max_iter=max_iter)
    sol_scaled = yaglom_iterate(build_killed_kernel(kernel, grid_scaled.upper, grid_scaled),
                                tol=tol, max_iter=max_iter)
    for name, sol in (("base", sol_base), ("scaled", sol_scaled)):
        if not sol.converged:
            raise NonConvergenceError(
                f"{name} QSD solve did not converge (residual {sol.residual:.3g})")
    worst_gap, witness_x = dominance_gap(sol_base, sol_scaled, y)
    return DominanceReport(passed=bool(worst_gap >= -slack), worst_gap=worst_gap,
                           witness_x=witness_x, slack=float(slack), y=float(y))


def lambda_refinement(kernel, threshold, kind="geometric", n_cells=50, levels=4,
                      lower=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Survival eigenvalue under successive grid doublings.

    Returns a list of (n_cells, lam) pairs, one per refinement level;
    successive differences should shrink as the discretization converges.
    """
    levels = validation.check_positive_int(levels, "levels", minimum=1)
    out = []
    n = n_cells
    for _ in range(levels):
        grid = default_grid(kernel, threshold, kind=kind, n_cells=n, lower=lower)
        sol = yaglom_iterate(build_killed_kernel(kernel, threshold, grid),
                             tol=tol, max_iter=max_iter)
        out.append((n, sol.lam))
        n *= 2
    return out


class QsdSolver(BaseEstimator):
    """Estimator-style front end: fit a kernel, expose the QSD.

    Parameters
    ----------
    threshold : float
        Exit threshold A > 0.
    grid : {'geometric', 'uniform'}
        Discretization kind.
    n_cells : int
        Number of grid cells.
    lower : float, optional
        Lower grid edge; defaults to max(state_space_floor, A * 1e-8) for
        geometric grids.
    tol : float
        L1 convergence tolerance of the Yaglom iteration.
    max_iter : int
        Iteration cap.

    Attributes
    ----------
    solution_ : QsdSolution
    killed_ : KilledKernel
    weights_ : ndarray
    lambda_ : float
    expected_exit_time_ : float
    conditioned_stationary_ : ndarray
        Stationary law of the survival-conditioned chain.
    qsd_vs_conditioned_l1_ : float
        L1 distance between the two distribution notions.
    n_iter_ : int
    residual_ : float
    converged_ : bool

    Examples
    --------
    >>> from quasistat import presets, QsdSolver
    >>> kernel = presets.get_preset("shiryaev-roberts").kernel
    >>> solver = QsdSolver(threshold=7.389, n_cells=200).fit(kernel)
    >>> 0 < solver.lambda_ < 1
    True
    """

    def __init__(self, threshold=None, grid="geometric", n_cells=400, lower=None,
                 tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
        self.threshold = threshold
        self.grid = grid
        self.n_cells = n_cells
        self.lower = lower
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, kernel, y=None):
        """Compute the QSD of ``kernel`` at the configured threshold.

        ``y`` is ignored; it exists for estimator API compatibility.
        """
        if self.threshold is None:
            raise DomainError("threshold must be set before fitting")
        grid = default_grid(kernel, self.threshold, kind=self.grid,
                            n_cells=self.n_cells, lower=self.lower)
        self.kernel_ = kernel
        self.grid_ = grid
        self.killed_ = build_killed_kernel(kernel, self.threshold, grid)
        self.solution_ = yaglom_iterate(self.killed_, tol=self.tol, max_iter=self.max_iter)
        self.weights_ = self.solution_.weights
        self.lambda_ = self.solution_.lam
        self.expected_exit_time_ = self.solution_.expected_exit_time
        self.n_iter_ = self.solution_.iterations
        self.residual_ = self.solution_.residual
        self.converged_ = self.solution_.converged
        self.conditioned_stationary_ = stationary_of_conditioned(
            self.killed_, tol=self.tol, max_iter=self.max_iter)
        self.qsd_vs_conditioned_l1_ = float(
            np.abs(self.weights_ - self.conditioned_stationary_).sum())
        return self

    def cdf(self, x):
        """QSD CDF at x (vectorized)."""
        check_is_fitted(self, "solution_")
        return self.solution_.cdf(x)

    def sample(self, n_samples=1, random_state=None):
        """Draw inverse-CDF samples from the fitted QSD."""
        check_is_fitted(self, "solution_")
        from .montecarlo import sample_from_qsd

        rng = np.random.default_rng(random_state)
        n_samples = validation.check_positive_int(n_samples, "n_samples", minimum=1)
        return sample_from_qsd(self.solution_, rng.random(n_samples))
