"""Scalar bound functions and decay-rate selection.

The decay estimates for Green blocks and gap eigenvectors are governed by a
rate gamma(zeta) built from a few scalar functions:

    psi(x)   = x^2 e^x          psi_tilde(x)   = x e^x
    psi_d(x) = x^2 / (1 - x)    psi_tilde_d(x) = x (2 - x) / (2 (1 - x))
    phi_delta(x) = 1/delta for 0 <= x < delta, 1/x for x >= delta
    w(x) = sqrt((x - r)(s - x))  for x in a spectral gap (r, s)

For a spectral point zeta with Re zeta in the gap, the rate is

    small-imaginary branch (|Im zeta| <= w(Re zeta) eps / 2):
        gamma = min( delta psi^{-1}( w^2 eps / (2 delta (s - r)) ),
                     delta psi_tilde^{-1}( w (1 - 2 eps) / (2 delta) ) )
    large-imaginary branch (otherwise):
        gamma = delta psi_tilde^{-1}( w eps (1 - eta) / (4 delta) )

with free parameters delta > 0, eps in (0, 1/2), eta in (0, 1).  The
"discrete" variant uses the rational pair psi_d / psi_tilde_d instead, and
the "simplified" variant replaces the whole expression by w (1/2 - eps') on
the small-imaginary branch and w eps'/4 otherwise (valid when the
off-diagonal norms grow without bound).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, ParameterError

SMALL_IMAGINARY = "small-imaginary"
LARGE_IMAGINARY = "large-imaginary"

#: the simplified rate is a strict upper bound; returned values are shaved by
#: this factor so they are always admissible
_SIMPLIFIED_SHAVE = 1.0 - 1e-9

DEFAULT_EPSILON = 0.25
DEFAULT_ETA = 0.5


@dataclass(frozen=True)
class GapInterval:
    """Open interval (r, s) of the real line disjoint from the essential spectrum."""

    r: float
    s: float

    def __post_init__(self):
        if not (self.r < self.s):
            raise ParameterError(f"gap needs r < s, got ({self.r}, {self.s})")

    @property
    def width(self) -> float:
        return self.s - self.r

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.r + self.s)

    def contains(self, x: float) -> bool:
        return self.r < x < self.s


@dataclass(frozen=True)
class BoundParams:
    """Free parameters (delta, epsilon, eta) of the decay-rate formulas."""

    delta: float
    epsilon: float = DEFAULT_EPSILON
    eta: float = DEFAULT_ETA

    def __post_init__(self):
        if not self.delta > 0:
            raise ParameterError(f"delta must be > 0, got {self.delta}")
        if not 0.0 < self.epsilon < 0.5:
            raise ParameterError(f"epsilon must be in (0, 1/2), got {self.epsilon}")
        if not 0.0 < self.eta < 1.0:
            raise ParameterError(f"eta must be in (0, 1), got {self.eta}")


@dataclass(frozen=True)
class DecayRate:
    """A decay rate gamma with its branch tag and formula variant."""

    gamma: float
    branch: str    # SMALL_IMAGINARY or LARGE_IMAGINARY
    variant: str   # "continuous", "discrete" or "simplified"


# ---------------------------------------------------------------------------
# forward maps

def psi(x: float) -> float:
    """x^2 e^x for x > 0."""
    if not x > 0:
        raise DomainError(f"psi needs x > 0, got {x}")
    return x * x * math.exp(x)


def psi_tilde(x: float) -> float:
    """x e^x for x > 0."""
    if not x > 0:
        raise DomainError(f"psi_tilde needs x > 0, got {x}")
    return x * math.exp(x)


def psi_d(x: float) -> float:
    """x^2 / (1 - x) for 0 < x < 1 (rational analogue of psi)."""
    if not 0.0 < x < 1.0:
        raise DomainError(f"psi_d needs 0 < x < 1, got {x}")
    return x * x / (1.0 - x)


def psi_tilde_d(x: float) -> float:
    """x (2 - x) / (2 (1 - x)) for 0 < x < 1 (rational analogue of psi_tilde)."""
    if not 0.0 < x < 1.0:
        raise DomainError(f"psi_tilde_d needs 0 < x < 1, got {x}")
    return x * (2.0 - x) / (2.0 * (1.0 - x))


def phi_delta(delta: float, x: float) -> float:
    """Capped reciprocal: 1/delta for 0 <= x < delta, 1/x for x >= delta."""
    if not delta > 0:
        raise DomainError(f"phi_delta needs delta > 0, got {delta}")
    if x < 0:
        raise DomainError(f"phi_delta needs x >= 0, got {x}")
    return 1.0 / max(delta, x)


def phi_delta_array(delta: float, x) -> np.ndarray:
    """Vectorized phi_delta over an array of nonnegative norms."""
    if not delta > 0:
        raise DomainError(f"phi_delta needs delta > 0, got {delta}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("phi_delta needs x >= 0")
    return 1.0 / np.maximum(delta, x)


def w(gap: GapInterval, x: float) -> float:
    """sqrt((x - r)(s - x)) for x strictly inside the gap."""
    if not gap.contains(x):
        raise DomainError(f"w needs x in ({gap.r}, {gap.s}), got {x}")
    return math.sqrt((x - gap.r) * (gap.s - x))


# ---------------------------------------------------------------------------
# inverses

_MAX_NEWTON = 80


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _invert_increasing(f, fprime, t: float, name: str) -> float:
    """Positive root of f(x) = t for strictly increasing f with f(0+) = 0.

    Brackets the root by doubling/halving from x = 1, bisects, then polishes
    with safeguarded Newton steps.
    """
    lo = hi = 1.0
    if f(1.0) < t:
        for _ in range(1100):
            lo, hi = hi, 2.0 * hi
            if f(hi) >= t:
                break
        else:
            raise ConvergenceError(f"{name}: could not bracket root for t = {t}")
    else:
        for _ in range(1100):
            hi, lo = lo, 0.5 * lo
            if f(lo) <= t:
                break
        else:
            raise ConvergenceError(f"{name}: could not bracket root for t = {t}")
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if f(mid) < t:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(_MAX_NEWTON):
        fx = f(x)
        if fx < t:
            lo = max(lo, x)
        else:
            hi = min(hi, x)
        dfx = fprime(x)
        step = (fx - t) / dfx if dfx > 0 and math.isfinite(fx) else math.nan
        x_new = x - step
        if not (lo <= x_new <= hi) or not math.isfinite(x_new):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-15 * max(x, 1e-300):
            return x_new
        x = x_new
    if hi - lo <= 1e-12 * max(hi, 1e-300):
        return 0.5 * (lo + hi)
    raise ConvergenceError(f"{name}: no convergence for t = {t}")


def inv_psi(t: float) -> float:
    """Unique positive root of x^2 e^x = t."""
    if not t > 0:
        raise DomainError(f"inv_psi needs t > 0, got {t}")
    return _invert_increasing(lambda x: x * x * _safe_exp(x),
                              lambda x: (x * x + 2.0 * x) * _safe_exp(x),
                              t, "inv_psi")


def inv_psi_tilde(t: float) -> float:
    """Unique positive root of x e^x = t (principal Lambert branch)."""
    if not t > 0:
        raise DomainError(f"inv_psi_tilde needs t > 0, got {t}")
    return _invert_increasing(lambda x: x * _safe_exp(x),
                              lambda x: (x + 1.0) * _safe_exp(x),
                              t, "inv_psi_tilde")


def inv_psi_d(t: float) -> float:
    """Root in (0, 1) of x^2/(1-x) = t, via the stable quadratic closed form."""
    if not t > 0:
        raise DomainError(f"inv_psi_d needs t > 0, got {t}")
    return 2.0 * t / (t + math.sqrt(t * t + 4.0 * t))


def inv_psi_tilde_d(t: float) -> float:
    """Root in (0, 1) of x(2-x)/(2(1-x)) = t, via the stable closed form."""
    if not t > 0:
        raise DomainError(f"inv_psi_tilde_d needs t > 0, got {t}")
    return 2.0 * t / ((1.0 + t) + math.sqrt(1.0 + t * t))


# ---------------------------------------------------------------------------
# decay rates

def branch_for(gap: GapInterval, zeta: complex, epsilon: float) -> str:
    """Branch test: small-imaginary iff |Im zeta| <= w(Re zeta) eps / 2."""
    zeta = complex(zeta)
    wx = w(gap, zeta.real)
    return SMALL_IMAGINARY if abs(zeta.imag) <= wx * epsilon / 2.0 else LARGE_IMAGINARY


def _gamma(params: BoundParams, gap: GapInterval, zeta: complex,
           inv_sq, inv_lin, variant: str) -> DecayRate:
    zeta = complex(zeta)
    if not gap.contains(zeta.real):
        raise DomainError(f"Re zeta = {zeta.real} is not inside the gap ({gap.r}, {gap.s})")
    delta, eps, eta = params.delta, params.epsilon, params.eta
    wx = w(gap, zeta.real)
    branch = branch_for(gap, zeta, eps)
    if branch == SMALL_IMAGINARY:
        g = min(delta * inv_sq(wx * wx * eps / (2.0 * delta * gap.width)),
                delta * inv_lin(wx * (1.0 - 2.0 * eps) / (2.0 * delta)))
    else:
        g = delta * inv_lin(wx * eps * (1.0 - eta) / (4.0 * delta))
    return DecayRate(gamma=g, branch=branch, variant=variant)


def gamma_continuous(params: BoundParams, gap: GapInterval, zeta: complex) -> DecayRate:
    """Decay rate with the transcendental inverses (psi, psi_tilde)."""
    return _gamma(params, gap, zeta, inv_psi, inv_psi_tilde, "continuous")


def gamma_discrete(params: BoundParams, gap: GapInterval, zeta: complex) -> DecayRate:
    """Decay rate with the rational inverses (psi_d, psi_tilde_d)."""
    return _gamma(params, gap, zeta, inv_psi_d, inv_psi_tilde_d, "discrete")


def gamma_simplified(gap: GapInterval, zeta: complex, eps_prime: float) -> DecayRate:
    """Delta-free simplified rate, valid when ||A_k|| grows without bound.

    The underlying estimate is a strict inequality, so the returned value is
    the supremum shaved by a relative 1e-9.
    """
    if not 0.0 < eps_prime < 0.5:
        raise ParameterError(f"eps_prime must be in (0, 1/2), got {eps_prime}")
    zeta = complex(zeta)
    if not gap.contains(zeta.real):
        raise DomainError(f"Re zeta = {zeta.real} is not inside the gap ({gap.r}, {gap.s})")
    wx = w(gap, zeta.real)
    branch = branch_for(gap, zeta, eps_prime)
    if branch == SMALL_IMAGINARY:
        g = wx * (0.5 - eps_prime)
    else:
        g = wx * eps_prime / 4.0
    return DecayRate(gamma=g * _SIMPLIFIED_SHAVE, branch=branch, variant="simplified")


_GAMMA_FNS = {"continuous": gamma_continuous, "discrete": gamma_discrete}


def decay_rate(variant: str, params: BoundParams | None, gap: GapInterval,
               zeta: complex, eps_prime: float = 0.01) -> DecayRate:
    """Dispatch on variant name ("continuous", "discrete", "simplified")."""
    if variant == "simplified":
        return gamma_simplified(gap, zeta, eps_prime)
    if variant in _GAMMA_FNS:
        if params is None:
            raise ParameterError(f"variant {variant!r} needs BoundParams")
        return _GAMMA_FNS[variant](params, gap, zeta)
    raise ParameterError(f"unknown rate variant {variant!r}")


def default_delta_grid() -> np.ndarray:
    return np.logspace(-2.0, 4.0, 121)


def best_delta(template: BoundParams | None, gap: GapInterval, zeta: complex,
               norm_samples, variant: str = "continuous",
               deltas=None) -> tuple[float, float]:
    """Grid-search delta maximizing the total exponent gamma(delta) * sum phi_delta(||A_k||).

    gamma alone improves monotonically with delta, but phi_delta caps ever
    more terms at 1/delta, so the two effects compete; the product over the
    supplied norm samples is the quantity that actually enters the bound.
    Ties break toward smaller delta.  Returns (delta_star, exponent).
    """
    norms = np.asarray(norm_samples, dtype=float)
    if norms.size == 0:
        raise ParameterError("best_delta needs at least one norm sample")
    if variant not in _GAMMA_FNS:
        raise ParameterError(f"best_delta variant must be continuous or discrete, got {variant!r}")
    eps = template.epsilon if template is not None else DEFAULT_EPSILON
    eta = template.eta if template is not None else DEFAULT_ETA
    grid = default_delta_grid() if deltas is None else np.asarray(deltas, dtype=float)
    best_exp = -math.inf
    best_d = float(grid[0])
    for d in grid:
        rate = _GAMMA_FNS[variant](BoundParams(float(d), eps, eta), gap, zeta)
        exponent = rate.gamma * float(np.sum(1.0 / np.maximum(d, norms)))
        if exponent > best_exp:
            best_exp = exponent
            best_d = float(d)
    return best_d, best_exp
