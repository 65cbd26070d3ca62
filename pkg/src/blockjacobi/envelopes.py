"""Decay envelopes multiplying the constant in each bound.

Three envelope styles are provided for a window of block indices between m
and j (the sum or product always runs over k in [min(m,j), max(m,j) - 1],
which is empty for m = j):

* scalar: exp(-gamma * sum phi_delta(||A_k||)), from a CumulativeProfile;
* operator-valued (commuting entries): exp(+gamma * sum phi_delta(|A_k|))
  applied spectrally to |A_k| = (A_k^* A_k)^(1/2) -- this is the multiplier
  that keeps ||envelope . G_mj|| bounded, and it can be sharper than the
  scalar bound direction by direction;
* discrete: the product of factors (1 - gamma/||A_k||) over the window
  clipped at n0, the first index after which gamma/||A_k|| stays below 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boundfns import DecayRate, phi_delta_array
from .errors import DomainError, ParameterError, PreconditionError
from .operators import EntrySequence

COMMUTATOR_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CumulativeProfile:
    """Terms phi_delta(||A_k||) with prefix sums; delta == 0.0 marks raw reciprocals."""

    delta: float
    terms: np.ndarray     # terms[k-1] = phi_delta(||A_k||), k = 1..p
    prefix: np.ndarray    # prefix[p] = sum of first p terms, prefix[0] = 0

    @property
    def horizon(self) -> int:
        return len(self.terms)

    def window_sum(self, m: int, j: int) -> float:
        lo, hi = min(m, j), max(m, j)
        if lo < 1 or hi - 1 > self.horizon:
            raise ParameterError(
                f"window ({m}, {j}) outside profile horizon {self.horizon}")
        return float(self.prefix[hi - 1] - self.prefix[lo - 1])


def _profile_from_terms(delta: float, terms: np.ndarray) -> CumulativeProfile:
    prefix = np.concatenate([[0.0], np.cumsum(terms)])
    terms = terms.copy()
    terms.flags.writeable = False
    prefix.flags.writeable = False
    return CumulativeProfile(delta=delta, terms=terms, prefix=prefix)


def cumulative_phi(seq: EntrySequence, delta: float, upto: int,
                   norms=None) -> CumulativeProfile:
    """Profile of phi_delta(||A_k||) for k = 1..upto (spectral norms)."""
    if upto < 1:
        raise ParameterError(f"profile horizon must be >= 1, got {upto}")
    nrm = seq.norms(upto) if norms is None else np.asarray(norms, dtype=float)[:upto]
    return _profile_from_terms(float(delta), phi_delta_array(delta, nrm))


def cumulative_reciprocal(seq: EntrySequence, upto: int,
                          norms=None) -> CumulativeProfile:
    """Profile of raw reciprocals 1/||A_k|| (the simplified-rate envelope)."""
    if upto < 1:
        raise ParameterError(f"profile horizon must be >= 1, got {upto}")
    nrm = seq.norms(upto) if norms is None else np.asarray(norms, dtype=float)[:upto]
    if np.any(nrm <= 0.0):
        raise DomainError("reciprocal profile needs strictly positive ||A_k||")
    return _profile_from_terms(0.0, 1.0 / nrm)


def scalar_envelope(rate: DecayRate, profile: CumulativeProfile, m: int, j: int) -> float:
    """exp(-gamma * sum_{k=min(m,j)}^{max(m,j)-1} phi_delta(||A_k||)); 1 for m = j."""
    return math.exp(-rate.gamma * profile.window_sum(m, j))


# ---------------------------------------------------------------------------
# operator-valued envelope (commuting entries)

def abs_block(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition (singular values s, unitary U) of |A| = (A^* A)^(1/2).

    Eigenvalues of A^* A that round off slightly negative are clamped at 0.
    """
    H = A.conj().T @ A
    vals, vecs = np.linalg.eigh(H)
    return np.sqrt(np.clip(vals, 0.0, None)), vecs


def phi_delta_spectral(delta: float, A: np.ndarray) -> np.ndarray:
    """phi_delta applied spectrally to |A|: U diag(phi_delta(s)) U^*."""
    s, U = abs_block(A)
    return (U * phi_delta_array(delta, s)) @ U.conj().T


def operator_envelope(rate: DecayRate, seq: EntrySequence, delta: float,
                      m: int, j: int) -> np.ndarray:
    """exp(+gamma * sum_{k=min}^{max-1} phi_delta(|A_k|)), Hermitian positive definite."""
    d = seq.dim
    lo, hi = min(m, j), max(m, j)
    if lo < 1:
        raise ParameterError(f"window ({m}, {j}) out of range")
    S = np.zeros((d, d), dtype=complex)
    for k in range(lo, hi):
        S += phi_delta_spectral(delta, seq.a(k))
    vals, vecs = np.linalg.eigh(S)
    E = (vecs * np.exp(rate.gamma * vals)) @ vecs.conj().T
    return 0.5 * (E + E.conj().T)


def commuting_check(seq: EntrySequence, upto: int) -> tuple[bool, float]:
    """Largest pairwise commutator norm among {A_k, B_k, A_k^*, k <= upto}.

    Returns (ok, max_commutator) with ok true iff the maximum is <= 1e-10,
    i.e. the commuting-entry hypothesis holds on the sampled range.
    """
    if upto < 1:
        raise ParameterError(f"upto must be >= 1, got {upto}")
    ops = []
    for k in range(1, upto + 1):
        A, B = seq.block(k)
        ops.extend((A, B, A.conj().T))
    worst = 0.0
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            comm = ops[i] @ ops[j] - ops[j] @ ops[i]
            worst = max(worst, float(np.linalg.norm(comm, 2)))
    return worst <= COMMUTATOR_TOL, worst


# ---------------------------------------------------------------------------
# discrete product envelope

@dataclass(frozen=True, eq=False)
class ProductProfile:
    """Product envelope prod (1 - gamma/||A_k||) over [max(min(m,j), n0), max(m,j)-1]."""

    gamma: float
    n0: int
    factors: np.ndarray   # the factors actually multiplied, each in (0, 1)

    @property
    def value(self) -> float:
        return float(np.prod(self.factors)) if self.factors.size else 1.0


def discrete_envelope(rate: DecayRate, seq: EntrySequence, m: int, j: int,
                      norms=None) -> ProductProfile:
    """Discrete envelope for the window between m and j.

    n0 is the smallest index after which gamma/||A_k|| < 1 holds for every
    sampled k (samples run through max(m,j)-1, or the single index 1 when
    m = j = 1); factors with k < n0 are clipped away, exactly as in the
    product bound.  If even the last sampled index violates the condition
    there is no valid n0 and a PreconditionError is raised.
    """
    if min(m, j) < 1:
        raise ParameterError(f"window ({m}, {j}) out of range")
    horizon = max(max(m, j) - 1, 1)
    nrm = seq.norms(horizon) if norms is None else np.asarray(norms, dtype=float)[:horizon]
    with np.errstate(divide="ignore"):
        ratios = np.where(nrm > 0.0, rate.gamma / np.where(nrm > 0.0, nrm, 1.0), math.inf)
    bad = np.nonzero(ratios >= 1.0)[0]
    n0 = int(bad[-1]) + 2 if bad.size else 1
    if n0 > horizon:
        raise PreconditionError(
            f"gamma = {rate.gamma:.6g} is not below ||A_k|| anywhere in the sampled "
            f"range (last ||A_{horizon}|| = {nrm[-1]:.6g}); no valid n0")
    start = max(min(m, j), n0)
    stop = max(m, j) - 1
    factors = 1.0 - ratios[start - 1:stop]
    factors.flags.writeable = False
    return ProductProfile(gamma=rate.gamma, n0=n0, factors=factors)


def ordered_product_envelope(rate: DecayRate, seq: EntrySequence,
                             m: int, j: int) -> np.ndarray:
    """Experimental noncommuting analogue of the discrete envelope.

    Multiplies the matrix factors (I - gamma |A_k|^{-1}) over the window in
    chronological (increasing k) order, later factors applied on the left.
    No decay bound is claimed for this object; it is exploratory only and
    excluded from every verified path.
    """
    d = seq.dim
    lo, hi = min(m, j), max(m, j)
    if lo < 1:
        raise ParameterError(f"window ({m}, {j}) out of range")
    P = np.eye(d, dtype=complex)
    for k in range(lo, hi):
        s, U = abs_block(seq.a(k))
        if np.any(s <= rate.gamma):
            raise PreconditionError(
                f"|A_{k}| has a singular value <= gamma; ordered product factor "
                "would leave the contraction regime")
        F = (U * (1.0 - rate.gamma / s)) @ U.conj().T
        P = F @ P
    return P
