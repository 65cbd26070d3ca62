"""Block entry sequences and finite truncations of block Jacobi matrices.

A block Jacobi operator is determined by two sequences of d x d blocks:
Hermitian diagonal blocks B_n and off-diagonal blocks A_n, n >= 1.  An
:class:`EntrySequence` is a deterministic rule n -> (A_n, B_n); a finite
N-block section of the block-tridiagonal matrix is produced by
:func:`assemble_truncation`.

Built-in families:

``constant``
    A_n = A, B_n = B for all n.
``example1``
    d = 2 upper-triangular blocks A_n = [[eps_n, lam_n], [0, eps_n]], B_n = 0,
    with lam_n and eps_n given by scalar rules of n.
``example2``
    d = 2 constant blocks A = [[1, x], [0, 1]], B = 0 (periodic operator).
``example3``
    A_n = (n**alpha + c_n) * [[1, x], [0, 1]] with c_n alternating between
    c1 (odd n) and c2 (even n); B_n = 0.  Requires alpha in (1/2, 1), |x| < 2.
``explicit-list``
    Blocks taken from an explicit prefix, optionally continued by a constant
    tail pair.
``custom``
    Arbitrary callable n -> (A_n, B_n); not JSON-serializable.

All sequences are pure functions of n; no caching is performed here so that
results are reproducible and safe to share across worker tasks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError

HERMITICITY_TOL = 1e-12

_JSON_FAMILIES = ("explicit-list", "constant", "example1", "example2", "example3")
_FAMILIES = _JSON_FAMILIES + ("custom",)


# ---------------------------------------------------------------------------
# block and scalar coercion helpers

def as_block(value, dim: int | None = None, what: str = "block") -> np.ndarray:
    """Coerce ``value`` to a square complex block, validating shape and finiteness."""
    arr = np.atleast_2d(np.asarray(value, dtype=complex))
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ParameterError(f"{what} must be a square matrix, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ParameterError(f"{what} must be {dim}x{dim}, got {arr.shape[0]}x{arr.shape[0]}")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ParameterError(f"{what} contains non-finite entries")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def hermitian_deviation(M: np.ndarray) -> float:
    return float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0


def _require_hermitian(B: np.ndarray, what: str) -> None:
    dev = hermitian_deviation(B)
    if dev > HERMITICITY_TOL:
        raise ParameterError(f"{what} is not Hermitian (deviation {dev:.3e} > {HERMITICITY_TOL:.0e})")


def _scalar_from_json(v):
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ParameterError(f"complex scalar must be [re, im], got {v!r}")
        return complex(v[0], v[1])
    return complex(v)


def _real_scalar(v, what: str) -> float:
    c = _scalar_from_json(v) if isinstance(v, (list, tuple)) else complex(v)
    if abs(c.imag) > 0:
        raise ParameterError(f"{what} must be real, got {c}")
    return float(c.real)


def matrix_from_json(rows, dim: int | None = None, what: str = "matrix") -> np.ndarray:
    """Decode a matrix serialized as nested lists with [re, im] complex entries."""
    data = [[_scalar_from_json(e) for e in row] for row in rows]
    return as_block(np.array(data, dtype=complex), dim, what)


def matrix_to_json(M: np.ndarray) -> list:
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    return [[[float(e.real), float(e.imag)] for e in row] for row in M]


# ---------------------------------------------------------------------------
# scalar rules of n (used by the example1 family)

def make_rule(spec):
    """Coerce a rule spec into a callable of n.

    Accepts a number (constant rule), a callable, or a dict with a ``kind``
    key: ``zero``, ``constant(value)``, ``power(scale, exponent, offset)``
    giving scale * n**exponent + offset, or ``geometric(scale, base)`` giving
    scale * base**n.  Scalar fields may be [re, im] pairs.
    """
    if callable(spec):
        return spec
    if isinstance(spec, (int, float, complex)):
        value = complex(spec)
        return lambda n: value
    if isinstance(spec, (list, tuple)):
        value = _scalar_from_json(spec)
        return lambda n: value
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "zero":
            return lambda n: 0j
        if kind == "constant":
            value = _scalar_from_json(spec["value"])
            return lambda n: value
        if kind == "power":
            scale = _scalar_from_json(spec.get("scale", 1.0))
            expo = float(spec.get("exponent", 1.0))
            offset = _scalar_from_json(spec.get("offset", 0.0))
            return lambda n: scale * n**expo + offset
        if kind == "geometric":
            scale = _scalar_from_json(spec.get("scale", 1.0))
            base = _scalar_from_json(spec.get("base", 2.0))
            return lambda n: scale * base**n
        raise ParameterError(f"unknown rule kind {kind!r}")
    raise ParameterError(f"cannot interpret rule spec {spec!r}")


def _rule_to_json(spec):
    if callable(spec):
        raise ParameterError("callable rules are not JSON-serializable")
    return spec


# ---------------------------------------------------------------------------
# entry sequences

@dataclass(frozen=True, eq=False)
class EntrySequence:
    """Deterministic rule producing the blocks (A_n, B_n) of a block Jacobi matrix.

    Blocks with index n <= len(prefix) are taken from ``prefix`` (1-based),
    which allows finite-rank modifications of any family, e.g. replacing B_1.
    """

    dim: int
    family: str
    params: dict = field(default_factory=dict)
    prefix: tuple = ()
    tail: tuple | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError(f"block dimension must be >= 1, got {self.dim}")
        if self.family not in _FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}")
        object.__setattr__(self, "params", dict(self.params))
        validator = _VALIDATORS.get(self.family)
        if validator is not None:
            validator(self.dim, self.params)
        prefix = []
        for i, (A, B) in enumerate(self.prefix):
            A = as_block(A, self.dim, f"prefix A_{i + 1}")
            B = as_block(B, self.dim, f"prefix B_{i + 1}")
            _require_hermitian(B, f"prefix B_{i + 1}")
            prefix.append((A, B))
        object.__setattr__(self, "prefix", tuple(prefix))
        if self.tail is not None:
            A, B = self.tail
            A = as_block(A, self.dim, "tail A")
            B = as_block(B, self.dim, "tail B")
            _require_hermitian(B, "tail B")
            object.__setattr__(self, "tail", (A, B))
        if self.family == "explicit-list" and not self.prefix and self.tail is None:
            raise ParameterError("explicit-list sequence needs a prefix or a tail")

    def block(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Return (A_n, B_n) for n >= 1."""
        if n < 1:
            raise ParameterError(f"block index must be >= 1, got {n}")
        if n <= len(self.prefix):
            return self.prefix[n - 1]
        A, B = _BLOCK_FNS[self.family](self, n)
        A = as_block(A, self.dim, f"A_{n}")
        B = as_block(B, self.dim, f"B_{n}")
        _require_hermitian(B, f"B_{n}")
        return A, B

    def a(self, n: int) -> np.ndarray:
        return self.block(n)[0]

    def b(self, n: int) -> np.ndarray:
        return self.block(n)[1]

    def norms(self, upto: int) -> np.ndarray:
        """Spectral norms ||A_k|| for k = 1..upto (vectorized SVD)."""
        if upto < 1:
            raise ParameterError(f"norm horizon must be >= 1, got {upto}")
        stack = np.stack([self.block(k)[0] for k in range(1, upto + 1)])
        return np.linalg.svd(stack, compute_uv=False)[:, 0]


def _zeros(d):
    return np.zeros((d, d), dtype=complex)


def _block_constant(seq, n):
    return seq.params["A"], seq.params["B"]


def _block_example1(seq, n):
    lam = seq.params["_lambda_fn"](n)
    eps = seq.params["_eps_fn"](n)
    if abs(complex(eps).imag) > HERMITICITY_TOL:
        raise ParameterError(f"example1 eps rule must be real, got {eps} at n={n}")
    e = complex(eps).real
    return np.array([[e, lam], [0.0, e]], dtype=complex), _zeros(2)


def _block_example2(seq, n):
    x = seq.params["x"]
    return np.array([[1.0, x], [0.0, 1.0]], dtype=complex), _zeros(2)


def _block_example3(seq, n):
    p = seq.params
    c = p["c1"] if n % 2 == 1 else p["c2"]
    A = (n ** p["alpha"] + c) * np.array([[1.0, p["x"]], [0.0, 1.0]], dtype=complex)
    return A, _zeros(2)


def _block_explicit(seq, n):
    if seq.tail is None:
        raise ParameterError(
            f"explicit-list sequence has {len(seq.prefix)} blocks and no tail; "
            f"block {n} requested"
        )
    return seq.tail


def _block_custom(seq, n):
    return seq.params["fn"](n)


_BLOCK_FNS = {
    "constant": _block_constant,
    "example1": _block_example1,
    "example2": _block_example2,
    "example3": _block_example3,
    "explicit-list": _block_explicit,
    "custom": _block_custom,
}


def _validate_constant(dim, params):
    params["A"] = as_block(params["A"], dim, "constant A")
    params["B"] = as_block(params["B"], dim, "constant B")
    _require_hermitian(params["B"], "constant B")


def _validate_example1(dim, params):
    if dim != 2:
        raise ParameterError("example1 family has 2x2 blocks")
    params["_lambda_fn"] = make_rule(params.get("lambda_rule", {"kind": "power"}))
    params["_eps_fn"] = make_rule(params.get("eps_rule", {"kind": "zero"}))


def _validate_example2(dim, params):
    if dim != 2:
        raise ParameterError("example2 family has 2x2 blocks")
    params["x"] = _real_scalar(params.get("x", 0.0), "example2 x")


def _validate_example3(dim, params):
    if dim != 2:
        raise ParameterError("example3 family has 2x2 blocks")
    x = _real_scalar(params.get("x", 0.0), "example3 x")
    alpha = _real_scalar(params.get("alpha", 0.75), "example3 alpha")
    if not (0.5 < alpha < 1.0):
        raise ParameterError(f"example3 requires alpha in (1/2, 1), got {alpha}")
    if not abs(x) < 2.0:
        raise ParameterError(f"example3 requires |x| < 2, got x = {x}")
    params["x"] = x
    params["alpha"] = alpha
    params["c1"] = _real_scalar(params.get("c1", 0.0), "example3 c1")
    params["c2"] = _real_scalar(params.get("c2", 0.0), "example3 c2")


def _validate_custom(dim, params):
    if not callable(params.get("fn")):
        raise ParameterError("custom family needs a callable 'fn' parameter")


_VALIDATORS = {
    "constant": _validate_constant,
    "example1": _validate_example1,
    "example2": _validate_example2,
    "example3": _validate_example3,
    "custom": _validate_custom,
}


# convenience constructors ---------------------------------------------------

def constant_sequence(A, B) -> EntrySequence:
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    return EntrySequence(dim=A.shape[0], family="constant", params={"A": A, "B": B})


def example1_sequence(lambda_rule=None, eps_rule=None) -> EntrySequence:
    params = {}
    if lambda_rule is not None:
        params["lambda_rule"] = lambda_rule
    if eps_rule is not None:
        params["eps_rule"] = eps_rule
    return EntrySequence(dim=2, family="example1", params=params)


def example2_sequence(x: float) -> EntrySequence:
    return EntrySequence(dim=2, family="example2", params={"x": x})


def example3_sequence(x: float, alpha: float, c1: float, c2: float) -> EntrySequence:
    return EntrySequence(dim=2, family="example3",
                         params={"x": x, "alpha": alpha, "c1": c1, "c2": c2})


def explicit_sequence(blocks, tail=None, dim: int | None = None) -> EntrySequence:
    blocks = tuple(blocks)
    if dim is None:
        if blocks:
            dim = np.atleast_2d(np.asarray(blocks[0][0])).shape[0]
        elif tail is not None:
            dim = np.atleast_2d(np.asarray(tail[0])).shape[0]
        else:
            raise ParameterError("explicit sequence needs blocks, a tail, or a dim")
    return EntrySequence(dim=dim, family="explicit-list", prefix=blocks, tail=tail)


def custom_sequence(fn, dim: int) -> EntrySequence:
    return EntrySequence(dim=dim, family="custom", params={"fn": fn})


def with_prefix(seq: EntrySequence, blocks) -> EntrySequence:
    """Return a copy of ``seq`` whose first blocks are overridden by ``blocks``."""
    return EntrySequence(dim=seq.dim, family=seq.family, params=seq.params,
                         prefix=tuple(blocks), tail=seq.tail)


# ---------------------------------------------------------------------------
# truncations

@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    """Hermitian (N d) x (N d) finite section of the block Jacobi matrix.

    Block (k, k) = B_k, (k, k+1) = A_k, (k+1, k) = A_k^*; everything else is
    exactly zero (plain Dirichlet cut).  ``sequence`` keeps the producing rule
    so refinements to larger N can be assembled on demand.
    """

    n_blocks: int
    dim: int
    matrix: np.ndarray
    sequence: EntrySequence | None = None

    def block_slice(self, k: int) -> slice:
        return slice((k - 1) * self.dim, k * self.dim)

    def block(self, row: int, col: int) -> np.ndarray:
        return self.matrix[self.block_slice(row), self.block_slice(col)]


def assemble_truncation(seq: EntrySequence, n_blocks: int) -> TruncatedOperator:
    """Assemble the N-block Dirichlet truncation of the block Jacobi matrix."""
    if n_blocks < 2:
        raise ParameterError(f"need at least 2 blocks, got {n_blocks}")
    d = seq.dim
    size = n_blocks * d
    M = np.zeros((size, size), dtype=complex)
    for k in range(1, n_blocks + 1):
        A, B = seq.block(k)
        i = (k - 1) * d
        M[i:i + d, i:i + d] = B
        if k < n_blocks:
            M[i:i + d, i + d:i + 2 * d] = A
            M[i + d:i + 2 * d, i:i + d] = A.conj().T
    dev = hermitian_deviation(M)
    if dev > HERMITICITY_TOL:
        raise ParameterError(f"assembled truncation deviates from Hermitian by {dev:.3e}")
    M.flags.writeable = False
    return TruncatedOperator(n_blocks=n_blocks, dim=d, matrix=M, sequence=seq)


# ---------------------------------------------------------------------------
# Carleman diagnostic

@dataclass(frozen=True)
class CarlemanDiagnostic:
    partial_sum: float
    verdict: str          # "divergent-looking" or "inconclusive"
    horizon: int


def carleman_check(seq: EntrySequence, horizon: int) -> CarlemanDiagnostic:
    """Advisory check of the divergence of sum 1/||A_k||.

    Divergence of the series is a sufficient criterion for self-adjointness
    of the infinite operator.  The verdict is a heuristic: the series "looks
    divergent" when the second half of the partial sum still contributes at
    least 5% of the total (or some ||A_k|| vanishes, making a term infinite).
    Never blocks any computation.
    """
    if horizon < 1:
        raise ParameterError(f"horizon must be >= 1, got {horizon}")
    nrm = seq.norms(horizon)
    with np.errstate(divide="ignore"):
        terms = np.where(nrm > 0.0, 1.0 / np.where(nrm > 0.0, nrm, 1.0), math.inf)
    total = float(np.sum(terms))
    if math.isinf(total):
        return CarlemanDiagnostic(partial_sum=math.inf, verdict="divergent-looking",
                                  horizon=horizon)
    if horizon >= 2:
        head = float(np.sum(terms[: (horizon + 1) // 2]))
        verdict = "divergent-looking" if total - head >= 0.05 * total else "inconclusive"
    else:
        verdict = "inconclusive"
    return CarlemanDiagnostic(partial_sum=total, verdict=verdict, horizon=horizon)


# ---------------------------------------------------------------------------
# JSON interchange

def load_operator(source) -> EntrySequence:
    """Build an :class:`EntrySequence` from a JSON file path, file object, or dict.

    Schema::

        { "dim": d, "family": "<name>", "params": {...},
          "prefix": [ {"A": [[ [re,im], ... ]], "B": [[...]]}, ... ],
          "tail": {"A": ..., "B": ...} }

    Complex matrix entries are [re, im] pairs (bare reals are also accepted
    on input).
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    elif isinstance(source, dict):
        data = source
    else:
        data = json.load(source)
    family = data.get("family")
    if family not in _JSON_FAMILIES:
        raise ParameterError(f"operator JSON family must be one of {_JSON_FAMILIES}, got {family!r}")
    dim = int(data.get("dim", 2))
    params = dict(data.get("params", {}))
    if family == "constant":
        params["A"] = matrix_from_json(params["A"], dim, "constant A")
        params["B"] = matrix_from_json(params["B"], dim, "constant B")
    prefix = tuple(
        (matrix_from_json(entry["A"], dim, "prefix A"),
         matrix_from_json(entry["B"], dim, "prefix B"))
        for entry in data.get("prefix", ())
    )
    tail = data.get("tail")
    if tail is not None:
        tail = (matrix_from_json(tail["A"], dim, "tail A"),
                matrix_from_json(tail["B"], dim, "tail B"))
    return EntrySequence(dim=dim, family=family, params=params, prefix=prefix, tail=tail)


def operator_to_json(seq: EntrySequence) -> dict:
    """Serialize a sequence back to the operator JSON schema."""
    if seq.family == "custom":
        raise ParameterError("custom sequences are not JSON-serializable")
    params = {}
    for key, value in seq.params.items():
        if key.startswith("_"):
            continue
        if isinstance(value, np.ndarray):
            params[key] = matrix_to_json(value)
        elif key in ("lambda_rule", "eps_rule"):
            params[key] = _rule_to_json(value)
        else:
            params[key] = value
    out = {"dim": seq.dim, "family": seq.family, "params": params}
    if seq.prefix:
        out["prefix"] = [{"A": matrix_to_json(A), "B": matrix_to_json(B)}
                         for A, B in seq.prefix]
    if seq.tail is not None:
        out["tail"] = {"A": matrix_to_json(seq.tail[0]), "B": matrix_to_json(seq.tail[1])}
    return out
