"""Spectra, Green blocks and gap detection for truncated block Jacobi operators.

Two spectrum estimators are available: a Hermitian eigensolve of the finite
truncation, and (for operators with constant blocks) the symbol
phi(theta) = exp(i theta) A + exp(-i theta) A^* + B whose eigenvalue ranges
over the unit circle fill the essential spectrum.  Gap endpoints detected
from symbol samples are refined by golden-section search on the eigenvalue
functions; truncation-only gaps keep sample resolution.

Green blocks G_mj(zeta) = P_m (J_N - zeta)^{-1} P_j are computed from one LU
factorization per zeta, reused across all requested column blocks.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .boundfns import GapInterval
from .errors import ConvergenceError, ParameterError, SingularityError
from .operators import (TruncatedOperator, as_block, assemble_truncation,
                        hermitian_deviation, HERMITICITY_TOL)

#: zeta must stay at least this far from the truncated spectrum
SINGULARITY_TOL = 1e-8
#: condition estimates above this attach an ill-conditioned warning
CONDITION_LIMIT = 1e12
#: relative residual allowed for eigenpairs
RESIDUAL_TOL = 1e-8

_POWER_ITERATIONS = 40
_SIGMA_SEED = 20260810


@dataclass(frozen=True, eq=False)
class SpectrumEstimate:
    """Sorted real spectrum samples from a truncation or a symbol sweep."""

    method: str                 # "truncation" or "symbol"
    samples: np.ndarray
    size: int                   # N (truncation) or theta-grid size (symbol)
    symbol: tuple | None = None  # (A, B) when method == "symbol"


def truncated_spectrum(op: TruncatedOperator) -> SpectrumEstimate:
    """All N*d eigenvalues of the Hermitian truncation, sorted ascending.

    Residuals ||J v - lambda v|| are verified against 1e-8 * ||J|| for every
    pair; a violation means the eigensolver failed and raises.
    """
    dev = hermitian_deviation(op.matrix)
    if dev > HERMITICITY_TOL:
        raise ParameterError(f"matrix deviates from Hermitian by {dev:.3e}")
    vals, vecs = np.linalg.eigh(op.matrix)
    norm_j = float(np.max(np.abs(vals))) if vals.size else 0.0
    residual = float(np.max(np.linalg.norm(op.matrix @ vecs - vecs * vals, axis=0)))
    if residual > RESIDUAL_TOL * max(norm_j, 1.0):
        raise ConvergenceError(
            f"eigensolver residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e} * ||J||")
    vals = np.sort(vals)
    vals.flags.writeable = False
    return SpectrumEstimate(method="truncation", samples=vals, size=op.n_blocks)


def _symbol_matrices(A: np.ndarray, B: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    z = np.exp(1j * thetas)[:, None, None]
    return z * A + np.conj(z) * A.conj().T + B


def symbol_spectrum(A, B, grid_size: int = 2048) -> SpectrumEstimate:
    """Eigenvalues of the symbol over a uniform theta-grid on [0, 2 pi).

    Valid for operators with constant blocks (period 1); use
    :func:`period2_symbol_blocks` to fold a 2-periodic sequence first.
    """
    A = as_block(A, what="symbol A")
    B = as_block(B, A.shape[0], "symbol B")
    if hermitian_deviation(B) > HERMITICITY_TOL:
        raise ParameterError("symbol B must be Hermitian")
    if grid_size < 4:
        raise ParameterError(f"grid size must be >= 4, got {grid_size}")
    thetas = 2.0 * math.pi * np.arange(grid_size) / grid_size
    vals = np.linalg.eigvalsh(_symbol_matrices(A, B, thetas))
    samples = np.sort(vals.ravel())
    samples.flags.writeable = False
    return SpectrumEstimate(method="symbol", samples=samples, size=grid_size,
                            symbol=(A, B))


def period2_symbol_blocks(A1, A2, B1, B2) -> tuple[np.ndarray, np.ndarray]:
    """Fold a 2-periodic block sequence into one 2d-block period.

    Treating (u_{2k-1}, u_{2k}) as a single cell, the in-cell coupling is
    [[B1, A1], [A1^*, B2]] and the cell-to-cell coupling [[0, 0], [A2, 0]].
    For slowly varying coefficients this is an approximation of the local
    band structure.
    """
    A1 = as_block(A1, what="A1")
    d = A1.shape[0]
    A2 = as_block(A2, d, "A2")
    B1 = as_block(B1, d, "B1")
    B2 = as_block(B2, d, "B2")
    big_a = np.zeros((2 * d, 2 * d), dtype=complex)
    big_a[d:, :d] = A2
    big_b = np.zeros((2 * d, 2 * d), dtype=complex)
    big_b[:d, :d] = B1
    big_b[d:, d:] = B2
    big_b[:d, d:] = A1
    big_b[d:, :d] = A1.conj().T
    return big_a, big_b


# ---------------------------------------------------------------------------
# gap detection and band-edge refinement

def _golden_extremum(f, a: float, b: float, sign: float) -> tuple[float, float]:
    """Golden-section maximization of sign*f over [a, b]; returns (x, f(x))."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = sign * f(c), sign * f(d)
    while b - a > 1e-12:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = sign * f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = sign * f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _refine_symbol_level(est: SpectrumEstimate, level: float, side: str) -> float:
    """Refined gap endpoint: extremize the symbol eigenvalues nearest ``level``.

    side == "below": maximize the largest eigenvalue <= level;
    side == "above": minimize the smallest eigenvalue >= level.
    """
    A, B = est.symbol
    thetas = 2.0 * math.pi * np.arange(est.size) / est.size

    def f(theta):
        vals = np.linalg.eigvalsh(_symbol_matrices(A, B, np.array([theta]))[0])
        if side == "below":
            sel = vals[vals <= level]
            return float(sel.max()) if sel.size else -math.inf
        sel = vals[vals >= level]
        return float(sel.min()) if sel.size else math.inf

    coarse = np.array([f(t) for t in thetas])
    k = int(np.argmax(coarse)) if side == "below" else int(np.argmin(coarse))
    h = 2.0 * math.pi / est.size
    sign = 1.0 if side == "below" else -1.0
    _, val = _golden_extremum(f, thetas[k] - h, thetas[k] + h, sign)
    return val


def detect_gap(est: SpectrumEstimate, tol: float) -> list[GapInterval]:
    """Maximal open intervals between consecutive samples longer than ``tol``.

    Symbol-based estimates get their endpoints refined by golden-section
    search on the eigenvalue functions; sorted by length descending.
    """
    samples = est.samples
    if samples.size < 2:
        raise ParameterError("gap detection needs at least 2 spectrum samples")
    gaps = []
    diffs = np.diff(samples)
    for i in np.nonzero(diffs > tol)[0]:
        r, s = float(samples[i]), float(samples[i + 1])
        if est.symbol is not None:
            mid = 0.5 * (r + s)
            r = _refine_symbol_level(est, mid, "below")
            s = _refine_symbol_level(est, mid, "above")
        gaps.append(GapInterval(r, s))
    gaps.sort(key=lambda g: g.width, reverse=True)
    return gaps


def band_edges(est: SpectrumEstimate, tol: float) -> np.ndarray:
    """Sorted band boundary points: spectrum extremes plus all gap endpoints.

    Refined against the symbol eigenvalue functions when available.
    """
    gaps = detect_gap(est, tol)
    edges = []
    for g in gaps:
        edges.extend((g.r, g.s))
    lo, hi = float(est.samples[0]), float(est.samples[-1])
    if est.symbol is not None:
        A, B = est.symbol
        thetas = 2.0 * math.pi * np.arange(est.size) / est.size
        stack = np.linalg.eigvalsh(_symbol_matrices(A, B, thetas))
        h = 2.0 * math.pi / est.size

        def fmin(t):
            return float(np.linalg.eigvalsh(_symbol_matrices(A, B, np.array([t]))[0])[0])

        def fmax(t):
            return float(np.linalg.eigvalsh(_symbol_matrices(A, B, np.array([t]))[0])[-1])

        kmin = int(np.argmin(stack[:, 0]))
        kmax = int(np.argmax(stack[:, -1]))
        _, lo = _golden_extremum(fmin, thetas[kmin] - h, thetas[kmin] + h, -1.0)
        _, hi = _golden_extremum(fmax, thetas[kmax] - h, thetas[kmax] + h, 1.0)
    edges.extend((lo, hi))
    return np.sort(np.array(edges))


# ---------------------------------------------------------------------------
# Green blocks

@dataclass(frozen=True, eq=False)
class GreenTable:
    """Green blocks G_mj(zeta) and their spectral norms for one zeta."""

    zeta: complex
    dim: int
    blocks: dict = field(default_factory=dict)   # (m, j) -> d x d ndarray
    norms: dict = field(default_factory=dict)    # (m, j) -> float
    sigma_min: float = math.inf
    condition: float = 0.0
    ill_conditioned: bool = False

    def block(self, m: int, j: int) -> np.ndarray:
        return self.blocks[(m, j)]

    def norm(self, m: int, j: int) -> float:
        return self.norms[(m, j)]


def _smallest_singular_value(lu, size: int) -> float:
    """Inverse power iteration on (M M^H)^{-1} using an existing LU factorization."""
    rng = np.random.default_rng(_SIGMA_SEED)
    v = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(_POWER_ITERATIONS):
        w = lu_solve(lu, v, check_finite=False)
        if not np.all(np.isfinite(w)):
            return 0.0
        w = lu_solve(lu, w, trans=2, check_finite=False)
        lam = float(np.linalg.norm(w))
        if not math.isfinite(lam) or lam == 0.0:
            return 0.0
        v = w / lam
    return 1.0 / math.sqrt(lam)


def green_block(op: TruncatedOperator, zeta: complex, rows, cols) -> GreenTable:
    """Green blocks G_mj(zeta) for all (m, j) in rows x cols.

    Solves (J_N - zeta I) X = E_j by LU with partial pivoting, one
    factorization reused for all requested column blocks.  Raises
    SingularityError when zeta is within 1e-8 of the truncated spectrum; a
    condition estimate above 1e12 is flagged, not fatal.
    """
    zeta = complex(zeta)
    n, d = op.n_blocks, op.dim
    rows = sorted(set(int(m) for m in rows))
    cols = sorted(set(int(j) for j in cols))
    for idx in rows + cols:
        if not 1 <= idx <= n:
            raise ParameterError(f"block index {idx} outside [1, {n}]")
    M = op.matrix - zeta * np.eye(n * d)
    with warnings.catch_warnings():
        # exact singularity is detected below and raised as SingularityError
        warnings.simplefilter("ignore", LinAlgWarning)
        lu = lu_factor(M, check_finite=False)
    sigma = _smallest_singular_value(lu, n * d)
    if sigma <= SINGULARITY_TOL:
        raise SingularityError(
            f"zeta = {zeta} is within {sigma:.3e} of the truncated spectrum "
            f"(tolerance {SINGULARITY_TOL:.0e})")
    norm_upper = min(math.sqrt(np.linalg.norm(M, 1) * np.linalg.norm(M, np.inf)),
                     float(np.linalg.norm(M, "fro")))
    condition = norm_upper / sigma
    rhs = np.zeros((n * d, len(cols) * d), dtype=complex)
    for pos, j in enumerate(cols):
        rhs[(j - 1) * d:j * d, pos * d:(pos + 1) * d] = np.eye(d)
    X = lu_solve(lu, rhs)
    blocks, norms = {}, {}
    for m in rows:
        for pos, j in enumerate(cols):
            G = X[(m - 1) * d:m * d, pos * d:(pos + 1) * d].copy()
            G.flags.writeable = False
            blocks[(m, j)] = G
            norms[(m, j)] = float(np.linalg.norm(G, 2))
    return GreenTable(zeta=zeta, dim=d, blocks=blocks, norms=norms,
                      sigma_min=sigma, condition=condition,
                      ill_conditioned=condition > CONDITION_LIMIT)


# ---------------------------------------------------------------------------
# eigenpairs inside a gap

@dataclass(frozen=True, eq=False)
class EigenpairInGap:
    """A normalized eigenpair of the truncation lying strictly inside a gap."""

    zeta: float
    blocks: np.ndarray    # (N, d) array of the blocks u_m
    residual: float       # ||J_N u - zeta u||
    drift: float          # eigenvalue movement between the N and 2N sections

    @property
    def block_norms(self) -> np.ndarray:
        return np.linalg.norm(self.blocks, axis=1)


def eigenpairs_in_gap(op: TruncatedOperator, gap: GapInterval,
                      margin_frac: float = 0.02, drift_tol: float = 1e-6,
                      embed_tol: float = 1e-6,
                      cluster_tol: float = 1e-8) -> list[EigenpairInGap]:
    """Eigenpairs of J_N strictly inside the gap, filtered of cut artifacts.

    Candidates are eigenvalues in (r + margin, s - margin) with margin 2% of
    the gap width.  A Dirichlet cut manufactures spurious in-gap eigenpairs
    localized at the far boundary; these can be perfectly N-stable (the cut
    exists at every N), so stability of the eigenvalue alone cannot reject
    them.  Each candidate is therefore also embedded (zero-padded) into the
    2N section: genuine eigenvectors of the infinite operator keep a tiny
    residual there, boundary artifacts jump to O(1).  Near-degenerate
    candidate clusters are re-separated by an SVD of the embedded residual
    map, so a genuine mode hiding inside a degenerate pair is still found.
    """
    seq = op.sequence
    if seq is None:
        raise ParameterError("eigenpairs_in_gap needs a sequence-backed truncation")
    n, d = op.n_blocks, op.dim
    margin = margin_frac * gap.width
    lo, hi = gap.r + margin, gap.s - margin
    vals, vecs = np.linalg.eigh(op.matrix)
    candidates = np.nonzero((vals > lo) & (vals < hi))[0]
    if candidates.size == 0:
        return []
    big = assemble_truncation(seq, 2 * n).matrix
    big_vals = np.linalg.eigvalsh(big)
    # group candidates into near-degenerate clusters
    clusters, current = [], [int(candidates[0])]
    for idx in candidates[1:]:
        if vals[idx] - vals[current[-1]] <= cluster_tol:
            current.append(int(idx))
        else:
            clusters.append(current)
            current = [int(idx)]
    clusters.append(current)
    results = []
    norm_scale = max(float(np.max(np.abs(big_vals))), 1.0)
    for cluster in clusters:
        U = vecs[:, cluster]
        mean_val = float(np.mean(vals[cluster]))
        embedded = np.zeros((2 * n * d, len(cluster)), dtype=complex)
        embedded[: n * d, :] = U
        W = big @ embedded - mean_val * embedded
        _, svals, vh = np.linalg.svd(W, full_matrices=False)
        for i in range(len(cluster) - 1, -1, -1):
            if svals[i] > embed_tol * norm_scale:
                continue
            u = U @ vh[i, :].conj()
            theta = float(np.real(u.conj() @ (op.matrix @ u)))
            if not lo < theta < hi:
                continue
            drift = float(np.min(np.abs(big_vals - theta)))
            if drift >= drift_tol:
                continue
            residual = float(np.linalg.norm(op.matrix @ u - theta * u))
            if residual > RESIDUAL_TOL * norm_scale:
                continue
            u = u / np.linalg.norm(u)
            blocks = u.reshape(n, d).copy()
            blocks.flags.writeable = False
            results.append(EigenpairInGap(zeta=theta, blocks=blocks,
                                          residual=residual, drift=drift))
    results.sort(key=lambda p: p.zeta)
    return results
