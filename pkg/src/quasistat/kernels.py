"""Transition kernels of multiplicative nonnegative Markov recursions.

The processes handled here evolve as ``M_{n+1} = phi(M_n) * Lambda_{n+1}``
with a positive nondecreasing scale function ``phi`` and iid positive
innovations ``Lambda`` with distribution function ``F``.  The one-step
transition probability is then

    P(M_{n+1} <= x | M_n = s) = F(x / phi(s)),

which every operation below exploits: CDF evaluation, conditioning on
staying below a threshold, and deterministic inverse-CDF sampling (so that
common uniforms induce monotone couplings between chains).
"""

import numpy as np
from scipy.special import ndtr, ndtri

from . import validation
from .exceptions import DegenerateKernelError, DomainError

__all__ = [
    "PhiFunction",
    "PowerPhi",
    "AffinePhi",
    "MaxOnePhi",
    "InnovationDistribution",
    "LogNormal",
    "LikelihoodRatioGaussian",
    "MultiplicativeKernel",
]


# --------------------------------------------------------------------------
# scale functions phi
# --------------------------------------------------------------------------

class PhiFunction:
    """Base class for the scale function of a multiplicative recursion.

    Valid members of the family are continuous, positive and nondecreasing
    with ``t / phi(t)`` nondecreasing.  Constructors do not enforce those
    properties; :func:`quasistat.conditions.check_condition` verifies them
    on a grid, and deliberately out-of-family instances (e.g.
    ``PowerPhi(2.0)``) are allowed so the verifiers can be exercised.
    """

    def __call__(self, t):
        raise NotImplementedError

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __hash__(self):
        return hash((type(self).__name__, tuple(sorted(self.__dict__.items()))))


class PowerPhi(PhiFunction):
    """phi(t) = t**alpha.  In-family for 0 <= alpha < 1 (phi(0) = 0, so
    state 0 is outside the sampling domain)."""

    def __init__(self, alpha):
        self.alpha = validation.check_scalar(alpha, "alpha", minimum=0.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore"):
            return validation.maybe_scalar(np.power(t, self.alpha))

    def __repr__(self):
        return f"PowerPhi(alpha={self.alpha!r})"


class AffinePhi(PhiFunction):
    """phi(t) = t + a with a > 0."""

    def __init__(self, a):
        self.a = validation.check_scalar(a, "a", minimum=0.0, exclusive_min=True)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return validation.maybe_scalar(t + self.a)

    def __repr__(self):
        return f"AffinePhi(a={self.a!r})"


class MaxOnePhi(PhiFunction):
    """phi(t) = max(1, t), the reflected-at-one scale function."""

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return validation.maybe_scalar(np.maximum(1.0, t))

    def __repr__(self):
        return "MaxOnePhi()"


# --------------------------------------------------------------------------
# innovation distributions
# --------------------------------------------------------------------------

class InnovationDistribution:
    """Positive continuous innovation law with CDF, quantile and sampler.

    Subclasses must satisfy F(0+) = 0, F nondecreasing with limit 1, and
    quantile(F(u)) = u up to floating-point accuracy.
    """

    def cdf(self, u):
        raise NotImplementedError

    def quantile(self, p):
        raise NotImplementedError

    def sample(self, random_state, size=None):
        """Inverse-CDF sampling; randomness ownership stays with the caller."""
        rng = np.random.default_rng(random_state) if not isinstance(
            random_state, np.random.Generator) else random_state
        return self.quantile(rng.random(size))

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __hash__(self):
        return hash((type(self).__name__, tuple(sorted(self.__dict__.items()))))


class LogNormal(InnovationDistribution):
    """Lognormal innovations: log Lambda ~ Normal(mu, sigma**2).

    The CDF and quantile go through scipy's erfc-based normal routines
    (``ndtr``/``ndtri``), which are accurate to well below 1e-12 absolute
    error over the whole line.

    Parameters
    ----------
    mu : float
        Mean of log Lambda.
    sigma : float
        Standard deviation of log Lambda, > 0.
    """

    def __init__(self, mu=0.0, sigma=1.0):
        self.mu = validation.check_scalar(mu, "mu")
        self.sigma = validation.check_scalar(sigma, "sigma", minimum=0.0, exclusive_min=True)

    def cdf(self, u):
        u = np.asarray(u, dtype=float)
        safe = np.where(u > 0.0, u, 1.0)
        z = np.where(u > 0.0, (np.log(safe) - self.mu) / self.sigma, -np.inf)
        return validation.maybe_scalar(ndtr(z))

    def quantile(self, p):
        p = validation.as_uniform(p, "p")
        return validation.maybe_scalar(np.exp(self.mu + self.sigma * ndtri(p)))

    def mean(self):
        return float(np.exp(self.mu + 0.5 * self.sigma**2))

    def __repr__(self):
        return f"LogNormal(mu={self.mu!r}, sigma={self.sigma!r})"


class LikelihoodRatioGaussian(LogNormal):
    """Gaussian likelihood ratio Lambda = f1(X)/f0(X) with f0 = N(0,1) and
    f1 = N(theta,1).

    Then log Lambda = theta*X - theta**2/2, so under the pre-change measure
    (X ~ f0) log Lambda ~ Normal(-theta**2/2, theta**2) and E Lambda = 1,
    while under the post-change measure (X ~ f1) the mean of log Lambda
    flips sign to +theta**2/2.
    """

    def __init__(self, theta, measure="pre"):
        theta = validation.check_scalar(theta, "theta")
        if theta == 0.0:
            raise DomainError("theta must be nonzero")
        if measure not in ("pre", "post"):
            raise DomainError(f"measure must be 'pre' or 'post', got {measure!r}")
        sign = -1.0 if measure == "pre" else 1.0
        super().__init__(mu=sign * theta**2 / 2.0, sigma=abs(theta))
        self.theta = theta
        self.measure = measure

    def __repr__(self):
        return f"LikelihoodRatioGaussian(theta={self.theta!r}, measure={self.measure!r})"


# --------------------------------------------------------------------------
# the multiplicative kernel
# --------------------------------------------------------------------------

class MultiplicativeKernel:
    """Transition kernel of ``M_{n+1} = phi(M_n) * Lambda_{n+1}``.

    All operations are pure functions of their arguments and broadcast over
    numpy arrays, so the kernel is safe to share across threads.

    Parameters
    ----------
    phi : PhiFunction
        Scale function applied to the current state.
    innovation : InnovationDistribution
        Law of the iid positive multiplicative innovations.
    state_space_floor : float, optional
        Infimum of the reachable state space; only grid builders consult
        it (grids must not extend below the floor).
    """

    def __init__(self, phi, innovation, state_space_floor=0.0):
        if not isinstance(phi, PhiFunction):
            raise DomainError("phi must be a PhiFunction")
        if not isinstance(innovation, InnovationDistribution):
            raise DomainError("innovation must be an InnovationDistribution")
        self.phi = phi
        self.innovation = innovation
        self.state_space_floor = validation.check_scalar(
            state_space_floor, "state_space_floor", minimum=0.0)

    # -- CDF evaluation ----------------------------------------------------

    def _scale(self, s):
        """phi(s), rejecting states where the scale degenerates to 0."""
        scale = np.asarray(self.phi(s), dtype=float)
        if np.any(scale <= 0.0):
            raise DomainError("phi(s) must be positive; state outside sampling domain")
        return scale

    def transition_cdf(self, s, x):
        """One-step transition CDF P(M_{n+1} <= x | M_n = s) = F(x / phi(s)).

        Parameters
        ----------
        s : array_like
            Current state(s), >= 0 with phi(s) > 0.
        x : array_like
            Evaluation point(s), >= 0.  Broadcast against ``s``.

        Returns
        -------
        float or ndarray in [0, 1]
        """
        s = validation.as_state(s, "s")
        x = validation.as_state(x, "x")
        return self.innovation.cdf(x / self._scale(s))

    def conditioned_cdf(self, s, x, threshold):
        """CDF of one step conditioned on staying at or below ``threshold``.

        Returns F(x/phi(s)) / F(threshold/phi(s)) for x <= threshold; equals
        1 at x = threshold.  Raises DegenerateKernelError where the state
        escapes the region almost surely in one step.
        """
        s = validation.as_state(s, "s")
        x = validation.as_state(x, "x")
        threshold = validation.check_scalar(threshold, "threshold", minimum=0.0, exclusive_min=True)
        if np.any(x > threshold):
            raise DomainError("x must not exceed threshold")
        scale = self._scale(s)
        denom = np.asarray(self.innovation.cdf(threshold / scale))
        if np.any(denom == 0.0):
            raise DegenerateKernelError(
                "survival probability is zero at some state; conditioned kernel undefined")
        num = np.asarray(self.innovation.cdf(x / scale))
        return validation.maybe_scalar(num / denom)

    # -- sampling ----------------------------------------------------------

    def sample_step(self, s, u):
        """Deterministic one-step update phi(s) * quantile(u).

        ``u`` is a uniform variate in (0, 1) supplied by the caller;
        identical uniforms yield monotone-coupled steps across states.
        """
        s = validation.as_state(s, "s")
        u = validation.as_uniform(u, "u")
        return validation.maybe_scalar(self._scale(s) * self.innovation.quantile(u))

    def sample_step_conditioned(self, s, threshold, u):
        """u-quantile of the one-step law conditioned on staying <= threshold.

        Closed form phi(s) * quantile(u * F(threshold/phi(s))); the result
        never exceeds ``threshold``.
        """
        s = validation.as_state(s, "s")
        u = validation.as_uniform(u, "u")
        threshold = validation.check_scalar(threshold, "threshold", minimum=0.0, exclusive_min=True)
        scale = self._scale(s)
        survival = np.asarray(self.innovation.cdf(threshold / scale))
        if np.any(survival == 0.0):
            raise DegenerateKernelError(
                "survival probability is zero at some state; conditioned kernel undefined")
        step = scale * self.innovation.quantile(u * survival)
        return validation.maybe_scalar(np.minimum(step, threshold))

    def __repr__(self):
        return (f"MultiplicativeKernel(phi={self.phi!r}, innovation={self.innovation!r}, "
                f"state_space_floor={self.state_space_floor!r})")
