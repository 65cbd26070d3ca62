"""Experiment orchestration: bound-vs-measurement comparisons and reports.

Each experiment evaluates one decay bound on a finite truncation:

* ``green``: Green block norms against the scalar/discrete/simplified
  envelope, with the empirical constant C_emp = max ratio;
* ``eigenvector``: gap eigenvector block norms against the envelope from
  block 1;
* ``commuting``: norms of (operator envelope) . G_mj for commuting-entry
  families;
* ``edge``: measured decay rate and theoretical rate as the spectral point
  approaches a band edge, with log-log slopes in the distance.

The bounds only assert existence of a constant, so pass/fail is defined on
N-stability of C_emp (within 5% between N and 2N), finiteness of every
ratio, and the measured decay rate being at least the theoretical envelope
rate; never on the magnitude of C_emp itself.  Everything is deterministic:
identical configs produce byte-identical CSV bodies.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .boundfns import (BoundParams, DecayRate, GapInterval, best_delta,
                       decay_rate, DEFAULT_EPSILON, DEFAULT_ETA)
from .envelopes import (cumulative_phi, cumulative_reciprocal,
                        commuting_check, discrete_envelope, operator_envelope,
                        phi_delta_spectral, scalar_envelope)
from .errors import (DomainError, ParameterError, PreconditionError,
                     SingularityError)
from .operators import (EntrySequence, assemble_truncation, example2_sequence,
                        load_operator)
from .spectral import (SINGULARITY_TOL, RESIDUAL_TOL, detect_gap,
                       eigenpairs_in_gap, green_block, period2_symbol_blocks,
                       symbol_spectrum, truncated_spectrum)

STABILITY_REL = 0.05     # C_emp(N) vs C_emp(2N) agreement required for a pass
DRIFT_TOL = 1e-6
NOISE_FLOOR_REL = 1e-13  # entries below this (relative) are LU solve noise
FIT_HEAD_OFFSET = 5      # slope fit starts at j0 + 5
FIT_TAIL_MARGIN = 10     # and ends at N - 10 (Dirichlet edge contamination)

VARIANTS = ("continuous", "discrete", "simplified", "commuting")
#: bounded worker pool for independent (zeta, variant) experiment jobs
MAX_WORKERS = 4


@dataclass
class ExperimentConfig:
    """One harness configuration (shared by all its experiments)."""

    operator: EntrySequence | dict
    gap: dict = field(default_factory=lambda: {"source": "symbol"})
    zetas: tuple = ()
    delta: float | str = "auto"
    epsilon: float = DEFAULT_EPSILON
    eta: float = DEFAULT_ETA
    eps_prime: float = 0.01
    variants: tuple = ("continuous",)
    n_blocks: int = 200
    rows: tuple | None = None
    cols: tuple = (1, 1)
    experiments: tuple = ("green",)
    gap_tol: float = 0.2
    symbol_grid: int = 2048
    edge: dict | None = None
    out_dir: str | None = None

    def __post_init__(self):
        if self.n_blocks < 4:
            raise ParameterError(f"n_blocks must be >= 4, got {self.n_blocks}")
        if self.rows is None:
            self.rows = (1, self.n_blocks)
        self.rows = (int(self.rows[0]), int(self.rows[1]))
        self.cols = (int(self.cols[0]), int(self.cols[1]))
        for lo, hi in (self.rows, self.cols):
            if not (1 <= lo <= hi <= self.n_blocks):
                raise ParameterError(
                    f"window ({lo}, {hi}) must lie within [1, {self.n_blocks}]")
        self.zetas = tuple(complex(z) for z in self.zetas)
        self.variants = tuple(self.variants)
        for v in self.variants:
            if v not in VARIANTS:
                raise ParameterError(f"unknown variant {v!r}")
        self.experiments = tuple(self.experiments)
        if not isinstance(self.delta, str):
            self.delta = float(self.delta)
        elif self.delta != "auto":
            raise ParameterError(f"delta must be a number or 'auto', got {self.delta!r}")

    @classmethod
    def from_json(cls, source) -> "ExperimentConfig":
        if isinstance(source, (str, Path)):
            with open(source, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        else:
            data = dict(source)
        params = data.get("params", {})
        zetas = [complex(z[0], z[1]) if isinstance(z, (list, tuple)) else complex(z)
                 for z in data.get("zetas", [])]
        return cls(
            operator=data.get("operator", {}),
            gap=data.get("gap", {"source": "symbol"}),
            zetas=zetas,
            delta=params.get("delta", "auto"),
            epsilon=params.get("epsilon", DEFAULT_EPSILON),
            eta=params.get("eta", DEFAULT_ETA),
            eps_prime=params.get("eps_prime", 0.01),
            variants=data.get("variants", ["continuous"]),
            n_blocks=data.get("n_blocks", 200),
            rows=data.get("rows"),
            cols=data.get("cols", (1, 1)),
            experiments=data.get("experiments", ["green"]),
            gap_tol=data.get("gap_tol", 0.2),
            symbol_grid=data.get("symbol_grid", 2048),
            edge=data.get("edge"),
            out_dir=data.get("out_dir"),
        )


@dataclass
class ExperimentResult:
    name: str
    variant: str
    branch: str = ""
    gamma: float = math.nan
    delta: float | None = None
    c_emp: float = math.nan
    slope_measured: float = math.nan
    slope_theoretical: float = math.nan
    passed: bool | None = None
    n_blocks: int = 0
    zeta: complex | None = None
    details: dict = field(default_factory=dict)
    table: tuple | None = None   # CSV payload, not serialized into the report

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "variant": self.variant,
            "branch": self.branch,
            "gamma": _json_float(self.gamma),
            "delta": _json_float(self.delta) if self.delta is not None else None,
            "C_emp": _json_float(self.c_emp),
            "slope_measured": _json_float(self.slope_measured),
            "slope_theoretical": _json_float(self.slope_theoretical),
            "pass": self.passed,
            "N": self.n_blocks,
            "zeta": [self.zeta.real, self.zeta.imag] if self.zeta is not None else None,
            "details": self.details,
        }


@dataclass
class VerificationReport:
    experiments: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return 0 if all(r.passed is not False for r in self.experiments) else 1

    def to_json(self) -> dict:
        return {"experiments": [r.to_json() for r in self.experiments],
                "meta": self.meta}


def _json_float(x):
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def _meta(cfg: ExperimentConfig) -> dict:
    return {
        "version": __version__,
        "n_blocks": cfg.n_blocks,
        "tolerances": {
            "singularity": SINGULARITY_TOL,
            "residual": RESIDUAL_TOL,
            "drift": DRIFT_TOL,
            "stability_rel": STABILITY_REL,
        },
    }


def _fmt_zeta(z: complex) -> str:
    return f"{z.real:.6g}{z.imag:+.6g}j"


# ---------------------------------------------------------------------------
# gap resolution

def as_sequence(operator) -> EntrySequence:
    return operator if isinstance(operator, EntrySequence) else load_operator(operator)


def resolve_gap(cfg: ExperimentConfig, seq: EntrySequence) -> GapInterval:
    """Resolve the configured gap source to a concrete interval.

    ``explicit`` uses the given (r, s).  ``symbol`` inspects the blocks past
    the prefix: equal consecutive blocks give a period-1 symbol, a 2-periodic
    pattern is folded by block doubling.  ``truncation`` detects gaps in the
    N-section spectrum.  For the spectrum-based sources, the gap containing
    Re of the first configured zeta is selected.
    """
    source = cfg.gap.get("source", "symbol")
    if source == "explicit":
        return GapInterval(float(cfg.gap["r"]), float(cfg.gap["s"]))
    if source == "symbol":
        p0 = len(seq.prefix) + 1
        blocks = [seq.block(p0 + i) for i in range(4)]
        if all(np.allclose(blocks[0][t], blocks[1][t], atol=1e-12) for t in (0, 1)):
            est = symbol_spectrum(blocks[0][0], blocks[0][1], cfg.symbol_grid)
        elif all(np.allclose(blocks[i][t], blocks[i + 2][t], atol=1e-12)
                 for i in (0, 1) for t in (0, 1)):
            big_a, big_b = period2_symbol_blocks(blocks[0][0], blocks[1][0],
                                                 blocks[0][1], blocks[1][1])
            est = symbol_spectrum(big_a, big_b, cfg.symbol_grid)
        else:
            raise ParameterError(
                "symbol gap source needs constant or 2-periodic blocks past the "
                "prefix; use an explicit gap for this operator")
    elif source == "truncation":
        est = truncated_spectrum(assemble_truncation(seq, cfg.n_blocks))
    else:
        raise ParameterError(f"unknown gap source {source!r}")
    gaps = detect_gap(est, cfg.gap.get("tol", cfg.gap_tol))
    if not cfg.zetas:
        if not gaps:
            raise ParameterError("no spectral gap detected")
        return gaps[0]
    target = cfg.zetas[0].real
    for g in gaps:
        if g.contains(target):
            return g
    raise ParameterError(
        f"no detected gap contains Re zeta = {target}; gaps: "
        + ", ".join(f"({g.r:.6g}, {g.s:.6g})" for g in gaps))


# ---------------------------------------------------------------------------
# shared helpers

def _resolve_rate(cfg: ExperimentConfig, variant: str, gap: GapInterval,
                  zeta: complex, norms: np.ndarray) -> tuple[DecayRate, float | None]:
    if variant == "simplified":
        return decay_rate("simplified", None, gap, zeta, cfg.eps_prime), None
    rate_variant = "continuous" if variant == "commuting" else variant
    if cfg.delta == "auto":
        template = BoundParams(1.0, cfg.epsilon, cfg.eta)
        delta, _ = best_delta(template, gap, zeta, norms, rate_variant)
    else:
        delta = float(cfg.delta)
    params = BoundParams(delta, cfg.epsilon, cfg.eta)
    return decay_rate(rate_variant, params, gap, zeta), delta


def _make_envelope(variant: str, rate: DecayRate, seq: EntrySequence,
                   delta: float | None, upto: int, norms: np.ndarray):
    """Return env(m, j) giving the scalar envelope value for the window."""
    if variant == "simplified":
        profile = cumulative_reciprocal(seq, upto, norms=norms)
        return lambda m, j: scalar_envelope(rate, profile, m, j)
    if variant in ("continuous", "commuting"):
        profile = cumulative_phi(seq, delta, upto, norms=norms)
        return lambda m, j: scalar_envelope(rate, profile, m, j)
    if variant == "discrete":
        return lambda m, j: discrete_envelope(rate, seq, m, j, norms=norms).value
    raise ParameterError(f"unknown variant {variant!r}")


def _fit_slope(ms, values, lo: int, hi: int) -> tuple[float, np.ndarray]:
    """Least-squares decay rate of log(values) over m in [lo, hi].

    Indices below the relative noise floor of the linear solver are excluded;
    returns (rate, mask of used indices).  Positive rate means decay.
    """
    ms = np.asarray(ms, dtype=float)
    values = np.asarray(values, dtype=float)
    peak = np.max(values) if values.size else 0.0
    mask = ((ms >= lo) & (ms <= hi) & np.isfinite(values)
            & (values > max(NOISE_FLOOR_REL * peak, 1e-300)))
    if np.count_nonzero(mask) < 3:
        return math.nan, mask
    coeff = np.polyfit(ms[mask], np.log(values[mask]), 1)
    return -float(coeff[0]), mask


def _theoretical_slope(env, j0: int, ms: np.ndarray) -> float:
    if ms.size < 2:
        return math.nan
    log_env = np.array([-math.log(env(int(m), j0)) for m in ms])
    coeff = np.polyfit(ms.astype(float), log_env, 1)
    return float(coeff[0])


# ---------------------------------------------------------------------------
# experiments

def _green_single(cfg: ExperimentConfig, seq: EntrySequence, gap: GapInterval,
                  zeta: complex, variant: str,
                  check_stability: bool = True) -> ExperimentResult:
    n = cfg.n_blocks
    rows = list(range(cfg.rows[0], cfg.rows[1] + 1))
    cols = list(range(cfg.cols[0], cfg.cols[1] + 1))
    j0 = cols[0]
    upto = max(max(rows), max(cols))
    norms = seq.norms(upto)
    rate, delta = _resolve_rate(cfg, variant, gap, zeta, norms[:max(upto - 1, 1)])
    env = _make_envelope(variant, rate, seq, delta, max(upto - 1, 1), norms)

    def c_emp_for(n_blocks: int) -> tuple[float, dict, object]:
        op = assemble_truncation(seq, n_blocks)
        table = green_block(op, zeta, rows, cols)
        values = {}
        for (m, j), g_norm in table.norms.items():
            if variant == "commuting":
                E = operator_envelope(rate, seq, delta, m, j)
                values[(m, j)] = float(np.linalg.norm(E @ table.block(m, j), 2))
            else:
                values[(m, j)] = g_norm / env(m, j)
        return max(values.values()), values, table

    c1, ratios, table = c_emp_for(n)
    all_finite = all(math.isfinite(v) for v in ratios.values())
    if check_stability:
        c2, _, _ = c_emp_for(2 * n)
        stable = (math.isfinite(c1) and math.isfinite(c2)
                  and abs(c1 - c2) < STABILITY_REL * c1)
    else:
        c2 = math.nan
        stable = math.isfinite(c1)
    ms = np.array(rows)
    g_col = np.array([table.norms[(m, j0)] for m in rows])
    slope, mask = _fit_slope(ms, g_col, j0 + FIT_HEAD_OFFSET, n - FIT_TAIL_MARGIN)
    slope_theo = _theoretical_slope(env, j0, ms[mask])
    passed = bool(all_finite and stable and math.isfinite(slope) and slope >= slope_theo)
    details = {
        "c_emp_2n": _json_float(c2),
        "sigma_min": _json_float(table.sigma_min),
        "condition": _json_float(table.condition),
        "ill_conditioned": table.ill_conditioned,
        "fit_points": int(np.count_nonzero(mask)),
        "all_ratios_finite": all_finite,
        "c_emp_stable": bool(stable),
        "stability_checked": check_stability,
    }
    if variant == "discrete":
        details["n0"] = discrete_envelope(rate, seq, min(rows + cols),
                                          max(rows + cols), norms=norms).n0
    csv_rows = tuple((m, j, zeta.real, zeta.imag, table.norms[(m, j)])
                     for m in rows for j in cols)
    return ExperimentResult(
        name=f"green:{variant}:zeta={_fmt_zeta(zeta)}", variant=variant,
        branch=rate.branch, gamma=rate.gamma, delta=delta, c_emp=c1,
        slope_measured=slope, slope_theoretical=slope_theo, passed=passed,
        n_blocks=n, zeta=zeta, details=details, table=csv_rows)


def _error_result(name: str, variant: str, zeta, n: int, exc: Exception) -> ExperimentResult:
    return ExperimentResult(name=name, variant=variant, passed=False, n_blocks=n,
                            zeta=zeta, details={"error": f"{type(exc).__name__}: {exc}"})


def _run_jobs(jobs) -> list:
    """Run independent experiment closures on a bounded pool, keeping order."""
    if len(jobs) <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=min(MAX_WORKERS, len(jobs))) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [f.result() for f in futures]


def verify_green_bound(cfg: ExperimentConfig) -> VerificationReport:
    """Green-block decay against the envelope for every (zeta, variant)."""
    seq = as_sequence(cfg.operator)
    gap = resolve_gap(cfg, seq)
    report = VerificationReport(meta=_meta(cfg))
    report.meta["gap"] = [gap.r, gap.s]

    def job(zeta, variant):
        def go():
            name = f"green:{variant}:zeta={_fmt_zeta(zeta)}"
            try:
                return _green_single(cfg, seq, gap, zeta, variant)
            except (SingularityError, PreconditionError, DomainError,
                    ParameterError) as exc:
                return _error_result(name, variant, zeta, cfg.n_blocks, exc)
        return go

    report.experiments.extend(_run_jobs(
        [job(zeta, variant) for zeta in cfg.zetas for variant in cfg.variants]))
    return report


def verify_eigenvector_bound(cfg: ExperimentConfig) -> VerificationReport:
    """Eigenvector decay for every N-stable gap eigenpair.

    Reported as skipped (pass = null), not failed, when the operator has no
    genuine gap eigenpair at this truncation size.
    """
    seq = as_sequence(cfg.operator)
    gap = resolve_gap(cfg, seq)
    n = cfg.n_blocks
    report = VerificationReport(meta=_meta(cfg))
    report.meta["gap"] = [gap.r, gap.s]
    variant = next((v for v in cfg.variants if v != "commuting"), "continuous")
    pairs = eigenpairs_in_gap(assemble_truncation(seq, n), gap)
    if not pairs:
        report.experiments.append(ExperimentResult(
            name="eigenvector:none", variant=variant, passed=None, n_blocks=n,
            details={"skipped": f"no N-stable gap eigenpair in ({gap.r:.6g}, {gap.s:.6g})"}))
        return report
    pairs_2n = eigenpairs_in_gap(assemble_truncation(seq, 2 * n), gap)
    norms = seq.norms(n - 1)

    def c_b_for(pair, env):
        un = pair.block_norms
        return max(un[m - 1] / env(1, m) for m in range(1, len(un) + 1))

    for pair in pairs:
        zeta0 = pair.zeta
        try:
            rate, delta = _resolve_rate(cfg, variant, gap, zeta0, norms)
            env = _make_envelope(variant, rate, seq, delta, n - 1, norms)
        except (DomainError, PreconditionError, ParameterError) as exc:
            report.experiments.append(_error_result(
                f"eigenvector:zeta={_fmt_zeta(complex(zeta0))}", variant,
                complex(zeta0), n, exc))
            continue
        c_b = c_b_for(pair, env)
        partner = next((p for p in pairs_2n if abs(p.zeta - zeta0) < DRIFT_TOL), None)
        if partner is not None:
            env_2n = _make_envelope(variant, rate, seq, delta, 2 * n - 1,
                                    seq.norms(2 * n - 1))
            c_b_2n = c_b_for(partner, env_2n)
        else:
            c_b_2n = math.nan
        stable = (math.isfinite(c_b) and math.isfinite(c_b_2n)
                  and abs(c_b - c_b_2n) < STABILITY_REL * c_b)
        un = pair.block_norms
        ms = np.arange(1, n + 1)
        slope, mask = _fit_slope(ms, un, 1 + FIT_HEAD_OFFSET, n - FIT_TAIL_MARGIN)
        slope_theo = _theoretical_slope(env, 1, ms[mask])
        passed = bool(math.isfinite(c_b) and stable
                      and math.isfinite(slope) and slope >= slope_theo)
        csv_rows = tuple((m, float(un[m - 1])) for m in range(1, n + 1))
        report.experiments.append(ExperimentResult(
            name=f"eigenvector:zeta={_fmt_zeta(complex(zeta0))}", variant=variant,
            branch=rate.branch, gamma=rate.gamma, delta=delta, c_emp=c_b,
            slope_measured=slope, slope_theoretical=slope_theo, passed=passed,
            n_blocks=n, zeta=complex(zeta0),
            details={"c_b_2n": _json_float(c_b_2n), "residual": pair.residual,
                     "drift": pair.drift, "stable_partner_found": partner is not None,
                     "fit_points": int(np.count_nonzero(mask))},
            table=csv_rows))
    return report


def verify_commuting_bound(cfg: ExperimentConfig) -> VerificationReport:
    """Operator-envelope bound for commuting-entry families.

    When the commuting hypothesis fails on the sampled range, results are
    tagged hypothesis-violated and no pass/fail is asserted.
    """
    seq = as_sequence(cfg.operator)
    gap = resolve_gap(cfg, seq)
    report = VerificationReport(meta=_meta(cfg))
    report.meta["gap"] = [gap.r, gap.s]
    upto = max(cfg.rows[1], cfg.cols[1])
    ok, max_comm = commuting_check(seq, upto)
    report.meta["max_commutator"] = _json_float(max_comm)
    if not ok:
        for zeta in cfg.zetas:
            report.experiments.append(ExperimentResult(
                name=f"commuting:zeta={_fmt_zeta(zeta)}", variant="commuting",
                passed=None, n_blocks=cfg.n_blocks, zeta=zeta,
                details={"hypothesis-violated": _json_float(max_comm)}))
        return report
    sub = ExperimentConfig(
        operator=seq, gap={"source": "explicit", "r": gap.r, "s": gap.s},
        zetas=cfg.zetas, delta=cfg.delta, epsilon=cfg.epsilon, eta=cfg.eta,
        eps_prime=cfg.eps_prime, variants=("commuting",), n_blocks=cfg.n_blocks,
        rows=cfg.rows, cols=cfg.cols, gap_tol=cfg.gap_tol)
    def job(zeta):
        def go():
            name = f"green:commuting:zeta={_fmt_zeta(zeta)}"
            try:
                result = _green_single(sub, seq, gap, zeta, "commuting")
                result.details["direction_exponent_ratio"] = _direction_ratio(
                    seq, result, cfg)
                return result
            except (SingularityError, PreconditionError, DomainError,
                    ParameterError) as exc:
                return _error_result(name, "commuting", zeta, cfg.n_blocks, exc)
        return go

    report.experiments.extend(_run_jobs([job(zeta) for zeta in cfg.zetas]))
    return report


def _direction_ratio(seq: EntrySequence, result: ExperimentResult,
                     cfg: ExperimentConfig) -> float:
    """Largest operator-envelope exponent across directions over the scalar one.

    Both exponents are evaluated on the longest configured window; > 1 means
    the operator bound is sharper along some direction.
    """
    lo = min(cfg.rows[0], cfg.cols[0])
    hi = max(cfg.rows[1], cfg.cols[1])
    delta = result.delta if result.delta is not None else 1.0
    S = np.zeros((seq.dim, seq.dim), dtype=complex)
    scalar_sum = 0.0
    for k in range(lo, hi):
        S += phi_delta_spectral(delta, seq.a(k))
        scalar_sum += 1.0 / max(delta, float(np.linalg.norm(seq.a(k), 2)))
    lam_max = float(np.linalg.eigvalsh(S)[-1])
    return lam_max / scalar_sum if scalar_sum > 0 else math.nan


@dataclass
class EdgeStudyResult:
    x: float
    n_blocks: int
    rows: list                 # dicts: eps, zeta, rate_measured, gamma, c_emp
    slope_measured: float      # log-log slope of measured rate vs eps
    slope_gamma: float         # log-log slope of gamma vs eps


def edge_scaling_study(x: float, eps_list, n_blocks: int = 1200,
                       delta: float | str = "auto",
                       epsilon: float = DEFAULT_EPSILON,
                       eta: float = DEFAULT_ETA) -> EdgeStudyResult:
    """Measured vs theoretical decay rate near the gap edge zeta = 2 - |x| + eps.

    No pass threshold is placed on C_emp(eps); the object of interest is the
    pair of log-log slopes, both expected near 1/2 (the rate is governed by
    the square root of the distance to the edge).
    """
    if not abs(x) > 2.0:
        raise DomainError(f"edge study needs |x| > 2, got x = {x}")
    eps_arr = np.asarray(sorted(float(e) for e in eps_list), dtype=float)
    if eps_arr.size < 2:
        raise ParameterError("edge study needs at least two eps values")
    if np.any(eps_arr <= 0.0) or np.any(eps_arr > 1e-2):
        raise DomainError("eps values must lie in (0, 0.01]")
    seq = example2_sequence(x)
    gap = GapInterval(2.0 - abs(x), abs(x) - 2.0)
    cfg = ExperimentConfig(operator=seq,
                           gap={"source": "explicit", "r": gap.r, "s": gap.s},
                           zetas=(0.0,), delta=delta, epsilon=epsilon, eta=eta,
                           variants=("continuous",), n_blocks=n_blocks)
    rows = []
    for eps in eps_arr:
        zeta = gap.r + eps
        res = _green_single(cfg, seq, gap, complex(zeta), "continuous",
                            check_stability=False)
        rows.append({"eps": float(eps), "zeta": float(zeta),
                     "rate_measured": res.slope_measured, "gamma": res.gamma,
                     "c_emp": res.c_emp})
    log_eps = np.log(eps_arr)
    slope_meas = float(np.polyfit(log_eps, np.log([r["rate_measured"] for r in rows]), 1)[0])
    slope_gamma = float(np.polyfit(log_eps, np.log([r["gamma"] for r in rows]), 1)[0])
    return EdgeStudyResult(x=x, n_blocks=n_blocks, rows=rows,
                           slope_measured=slope_meas, slope_gamma=slope_gamma)


# ---------------------------------------------------------------------------
# top-level runner and file emission

_CSV_HEADERS = {
    "green": "m,j,re_zeta,im_zeta,norm_G",
    "eigenvector": "m,norm_u",
    "edge": "eps,rate_measured,gamma,c_emp",
    "spectrum": "index,eigenvalue",
}


def _write_csv(path: Path, kind: str, rows) -> None:
    lines = [f"# blockjacobi v{__version__}", _CSV_HEADERS[kind]]
    for row in rows:
        lines.append(",".join(_csv_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _csv_cell(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def run(config, out_dir: str | None = None) -> tuple[VerificationReport, int]:
    """Execute all configured experiments; write report.json and CSVs.

    Returns (report, exit_code) with exit code 0 iff every non-skipped
    experiment passed.  Fully deterministic for a given config.
    """
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_json(config)
    report = VerificationReport(meta=_meta(cfg))
    edge_result = None
    for kind in cfg.experiments:
        if kind == "green":
            part = verify_green_bound(cfg)
        elif kind == "eigenvector":
            part = verify_eigenvector_bound(cfg)
        elif kind == "commuting":
            part = verify_commuting_bound(cfg)
        elif kind == "edge":
            if not cfg.edge:
                raise ParameterError("edge experiment needs an 'edge' config section")
            edge_result = edge_scaling_study(
                x=float(cfg.edge["x"]), eps_list=cfg.edge["eps_list"],
                n_blocks=int(cfg.edge.get("n_blocks", 1200)),
                delta=cfg.edge.get("delta", cfg.delta),
                epsilon=cfg.edge.get("epsilon", cfg.epsilon),
                eta=cfg.edge.get("eta", cfg.eta))
            ok = (abs(edge_result.slope_measured - 0.5) <= 0.05
                  and abs(edge_result.slope_gamma - 0.5) <= 0.05)
            part = VerificationReport(experiments=[ExperimentResult(
                name="edge-study", variant="continuous",
                slope_measured=edge_result.slope_measured,
                slope_theoretical=edge_result.slope_gamma,
                passed=bool(ok), n_blocks=edge_result.n_blocks,
                details={"rows": edge_result.rows})])
        else:
            raise ParameterError(f"unknown experiment kind {kind!r}")
        report.experiments.extend(part.experiments)
        for key, value in part.meta.items():
            report.meta.setdefault(key, value)
    target = out_dir or cfg.out_dir
    if target is not None:
        target = Path(target)
        target.mkdir(parents=True, exist_ok=True)
        (target / "report.json").write_text(
            json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
        for i, res in enumerate(report.experiments):
            if res.table is None:
                continue
            kind = "eigenvector" if res.name.startswith("eigenvector") else "green"
            _write_csv(target / f"{kind}_{i:02d}.csv", kind, res.table)
        if edge_result is not None:
            _write_csv(target / "edge.csv", "edge",
                       [(r["eps"], r["rate_measured"], r["gamma"], r["c_emp"])
                        for r in edge_result.rows])
    return report, report.exit_code
