"""Monte Carlo engine for the market model.

Two interchangeable Euler schemes share one counter-based noise stream:
LogCapEuler integrates d log X_i = -g(mu_i) dt + dW_i and derives the
weights (the primary scheme, positivity is structural); WeightEuler
integrates the weight system directly and exists to check numerically that
the two descriptions agree.  Paths are independent, vectorized across the
path axis, and aggregated in path-index order, so reports are reproducible
regardless of how execution is scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import model, rng
from .errors import ParameterError

_WEIGHT_FLOOR = 1e-14

# Finite-horizon Monte Carlo frequencies are evidence about an all-time,
# almost-sure property; every report carries this label.
EVIDENCE_NOTE = (
    "finite-horizon Monte Carlo evidence; not a proof of the all-time "
    "diversity property"
)


def weights_from_logcaps(log_caps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stable weights and log total capitalization from log X.

    The total uses a sorted summation so that permuting the stocks permutes
    the result bitwise.
    """
    m = log_caps.max(axis=-1, keepdims=True)
    e = np.exp(log_caps - m)
    s = np.sort(e, axis=-1).sum(axis=-1, keepdims=True)
    weights = e / s
    log_total = (m + np.log(s)).squeeze(-1)
    return weights, log_total


@dataclass(frozen=True)
class MarketState:
    """Log capitalizations with derived weights."""

    log_caps: np.ndarray
    weights: np.ndarray
    total_cap_log: float

    @classmethod
    def from_log_caps(cls, log_caps: Sequence[float]) -> "MarketState":
        lc = np.asarray(log_caps, dtype=float)
        w, lt = weights_from_logcaps(lc)
        return cls(log_caps=lc, weights=w, total_cap_log=float(lt))

    @classmethod
    def from_weights(cls, weights: Sequence[float]) -> "MarketState":
        w = np.asarray(weights, dtype=float)
        if np.any(w <= 0.0) or np.any(w >= 1.0):
            raise ParameterError("weights must lie strictly inside (0, 1)")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ParameterError(f"weights must sum to 1, got {w.sum()}")
        return cls.from_log_caps(np.log(w / w.sum()))


@dataclass(frozen=True)
class SimParams:
    """Discretization and reproducibility settings."""

    dt: float = 1e-3
    horizon_T: float = 50.0
    n_paths: int = 500
    seed: int = 0
    record_stride: int = 1
    scheme: str = "LogCapEuler"
    zero_noise: bool = False

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if self.horizon_T <= 0.0 or self.dt > self.horizon_T:
            raise ParameterError(
                f"need 0 < dt <= horizon_T, got dt={self.dt}, T={self.horizon_T}"
            )
        if self.n_paths < 1:
            raise ParameterError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.record_stride < 1:
            raise ParameterError(f"record_stride must be >= 1, got {self.record_stride}")
        if self.scheme not in ("LogCapEuler", "WeightEuler"):
            raise ParameterError(f"unknown scheme {self.scheme!r}")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise ParameterError("seed must fit in 64 unsigned bits")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon_T / self.dt))

    def to_dict(self) -> dict:
        return {
            "dt": self.dt,
            "horizon_T": self.horizon_T,
            "n_paths": self.n_paths,
            "seed": int(self.seed),
            "record_stride": self.record_stride,
            "scheme": self.scheme,
            "zero_noise": self.zero_noise,
        }


@dataclass(frozen=True)
class MarketConfig:
    """Model side of a simulation: stock count, drift spec, initial weights."""

    n: int
    spec: model.DriftSpec
    initial_weights: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise ParameterError(f"need an integer n >= 2, got {self.n!r}")
        if self.initial_weights is not None:
            w = np.asarray(self.initial_weights, dtype=float)
            if w.shape != (self.n,):
                raise ParameterError(f"initial_weights must have shape ({self.n},)")
            object.__setattr__(self, "initial_weights", w)

    def start_weights(self) -> np.ndarray:
        if self.initial_weights is None:
            return np.full(self.n, 1.0 / self.n)
        return self.initial_weights.copy()


@dataclass
class PathResult:
    path_index: int
    hit: bool
    hit_time: Optional[float]
    hit_stock: Optional[int]
    max_weight_seen: float
    min_weight_seen: float
    sampled_trajectory: Optional[tuple] = None  # (times, weights array)


@dataclass
class MonteCarloReport:
    n_paths: int
    n_hits: int
    hit_frequency: float
    wilson_ci_95: tuple
    mean_max_weight: float
    per_stock_hit_counts: list
    params_echo: dict
    note: str = EVIDENCE_NOTE

    def to_dict(self) -> dict:
        return {
            "n_paths": self.n_paths,
            "n_hits": self.n_hits,
            "hit_frequency": self.hit_frequency,
            "wilson_ci_95": list(self.wilson_ci_95),
            "mean_max_weight": self.mean_max_weight,
            "per_stock_hit_counts": list(self.per_stock_hit_counts),
            "params_echo": self.params_echo,
            "note": self.note,
        }


# ---------------------------------------------------------------------------
# Single steps (public, scalar-path form)
# ---------------------------------------------------------------------------


def step_logcap(
    state: MarketState, spec: model.DriftSpec, dt: float, noise: np.ndarray
) -> MarketState:
    """One Euler step of the log-capitalization system.

    Weights at or above 1 - delta use the clamped g evaluation; such steps
    are diagnostics only (the model's drift is undefined past the threshold).
    """
    noise = np.asarray(noise, dtype=float)
    new_lc = _step_logcap_arr(state.log_caps, state.weights, spec, dt, noise)
    return MarketState.from_log_caps(new_lc)


def _step_logcap_arr(log_caps, weights, spec, dt, noise):
    return log_caps - model.g_clamped(spec, weights) * dt + noise


def step_weights(
    weights: np.ndarray, spec: model.DriftSpec, dt: float, noise: np.ndarray
) -> np.ndarray:
    """One Euler step of the weight system, renormalized onto the simplex."""
    w = np.asarray(weights, dtype=float)
    return _step_weights_arr(w, spec, dt, np.asarray(noise, dtype=float))


def _step_weights_arr(w, spec, dt, noise):
    psi = model.psi_clamped(spec, w)
    drift = psi - w * psi.sum(axis=-1, keepdims=True)
    # Diffusion row j contributes (delta_ij mu_i - mu_i mu_j) dW_j; the
    # column sums vanish, so the simplex is exact before renormalization.
    mixed = (w * noise).sum(axis=-1, keepdims=True)
    diff = w * noise - w * mixed
    new = w + drift * dt + diff
    new = np.clip(new, _WEIGHT_FLOOR, 1.0)
    return new / new.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# Path engine
# ---------------------------------------------------------------------------

_CHUNK_STEPS = 2048


def simulate_paths(
    config: MarketConfig,
    params: SimParams,
    path_indices: Optional[Sequence[int]] = None,
    record_paths: int = 0,
    stop_at_hit: bool = True,
) -> list[PathResult]:
    """Integrate independent paths; deterministic given (seed, path index)."""
    spec = config.spec
    thr = spec.right_end
    w0 = config.start_weights()
    if np.any(w0 <= 0.0) or np.any(w0 >= 1.0) or abs(w0.sum() - 1.0) > 1e-9:
        raise ParameterError("initial weights must lie on the open simplex")
    if np.any(w0 >= thr):
        raise ParameterError("initial weights must be strictly below 1 - delta")

    if path_indices is None:
        path_indices = np.arange(params.n_paths)
    paths = np.asarray(path_indices, dtype=np.int64)
    P, n, dt = paths.size, config.n, params.dt
    n_steps = params.n_steps
    sqrt_dt = math.sqrt(dt)
    use_logcap = params.scheme == "LogCapEuler"

    weights = np.tile(w0, (P, 1))
    log_caps = np.log(weights)
    active = np.ones(P, dtype=bool)
    hit = np.zeros(P, dtype=bool)
    hit_time = np.full(P, np.nan)
    hit_stock = np.full(P, -1, dtype=np.int64)
    max_w = weights.max(axis=1)
    min_w = weights.min(axis=1)

    recorders = {}
    for slot in range(min(record_paths, P)):
        recorders[slot] = ([0.0], [weights[slot].copy()])

    for k0 in range(0, n_steps, _CHUNK_STEPS):
        if not active.any() and (stop_at_hit or not recorders):
            break
        k1 = min(k0 + _CHUNK_STEPS, n_steps)
        if params.zero_noise:
            noise = np.zeros((P, k1 - k0, n))
        else:
            noise = rng.normal_chunk(params.seed, paths, k0 * 1, k1 - k0, n) * sqrt_dt
        for j in range(k1 - k0):
            k = k0 + j
            if use_logcap:
                new_lc = _step_logcap_arr(log_caps, weights, spec, dt, noise[:, j, :])
                new_w, _ = weights_from_logcaps(new_lc)
            else:
                new_lc = log_caps
                new_w = _step_weights_arr(weights, spec, dt, noise[:, j, :])
            upd = active[:, None]
            log_caps = np.where(upd, new_lc, log_caps)
            weights = np.where(upd, new_w, weights)

            step_max = weights.max(axis=1)
            max_w = np.where(active, np.maximum(max_w, step_max), max_w)
            min_w = np.where(active, np.minimum(min_w, weights.min(axis=1)), min_w)

            newly = active & (step_max >= thr)
            if newly.any():
                hit |= newly
                hit_time[newly] = (k + 1) * dt
                hit_stock[newly] = weights[newly].argmax(axis=1)
                if stop_at_hit:
                    active &= ~newly

            if recorders and (k + 1) % params.record_stride == 0:
                t = (k + 1) * dt
                for slot, (times, traj) in recorders.items():
                    if active[slot] or (hit[slot] and not stop_at_hit):
                        times.append(t)
                        traj.append(weights[slot].copy())

    results = []
    for i in range(P):
        traj = None
        if i in recorders:
            times, ws = recorders[i]
            traj = (np.array(times), np.vstack(ws))
        results.append(
            PathResult(
                path_index=int(paths[i]),
                hit=bool(hit[i]),
                hit_time=float(hit_time[i]) if hit[i] else None,
                hit_stock=int(hit_stock[i]) if hit[i] else None,
                max_weight_seen=float(max_w[i]),
                min_weight_seen=float(min_w[i]),
                sampled_trajectory=traj,
            )
        )
    return results


def run_path(config: MarketConfig, params: SimParams, path_index: int) -> PathResult:
    """Single path, addressable by index within the seed's stream."""
    return simulate_paths(config, params, [path_index])[0]


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple:
    """Wilson 95% score interval; exact zero lower bound at zero successes."""
    if trials <= 0:
        raise ParameterError("need at least one trial")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    # At the extremes the score bound touches the endpoint exactly; rounding
    # in center - half would otherwise leave a stray ulp.
    lo = 0.0 if successes == 0 else max(center - half, 0.0)
    hi = 1.0 if successes == trials else min(center + half, 1.0)
    return (lo, hi)


def monte_carlo_hitting(
    config: MarketConfig, params: SimParams, record_paths: int = 0
) -> MonteCarloReport:
    """Aggregate hitting outcomes over params.n_paths independent paths."""
    results = simulate_paths(config, params, record_paths=record_paths)
    return summarize(config, params, results)


def summarize(
    config: MarketConfig, params: SimParams, results: Sequence[PathResult]
) -> MonteCarloReport:
    results = sorted(results, key=lambda r: r.path_index)
    n_hits = sum(r.hit for r in results)
    n_paths = len(results)
    per_stock = [0] * config.n
    for r in results:
        if r.hit:
            per_stock[r.hit_stock] += 1
    return MonteCarloReport(
        n_paths=n_paths,
        n_hits=n_hits,
        hit_frequency=n_hits / n_paths,
        wilson_ci_95=wilson_interval(n_hits, n_paths),
        mean_max_weight=float(np.mean([r.max_weight_seen for r in results])),
        per_stock_hit_counts=per_stock,
        params_echo={"model": config.spec.label(), "n": config.n, **params.to_dict()},
    )


# ---------------------------------------------------------------------------
# Numeric property checks
# ---------------------------------------------------------------------------


def ito_consistency_check(config: MarketConfig, params: SimParams) -> dict:
    """Compare the two schemes under shared noise at dt, dt/2 and dt/4.

    The finest level's Brownian increments are aggregated for the coarser
    levels, so all three integrate the same driving path.
    """
    spec = config.spec
    w0 = config.start_weights()
    P, n = params.n_paths, config.n
    dts = [params.dt, params.dt / 2.0, params.dt / 4.0]
    steps_fine = int(round(params.horizon_T / dts[-1]))
    paths = np.arange(P)
    if params.zero_noise:
        fine = np.zeros((P, steps_fine, n))
    else:
        fine = rng.normal_chunk(params.seed, paths, 0, steps_fine, n) * math.sqrt(dts[-1])

    gaps = []
    for level, dt in enumerate(dts):
        group = 2 ** (2 - level)
        steps = steps_fine // group
        noise = fine[:, : steps * group, :].reshape(P, steps, group, n).sum(axis=2)
        gaps.append(_max_scheme_gap(spec, w0, dt, noise))

    logs = np.log(np.maximum(gaps, 1e-300))
    order = float(np.polyfit(np.log(dts), logs, 1)[0]) if gaps[0] > 0 else math.inf
    return {
        "max_abs_weight_gap": gaps[-1],
        "convergence_order_estimate": order,
        "gaps_by_dt": dict(zip(dts, gaps)),
    }


def _max_scheme_gap(spec, w0, dt, noise) -> float:
    P, steps, n = noise.shape
    weights_lc = np.tile(w0, (P, 1))
    log_caps = np.log(weights_lc)
    weights_we = weights_lc.copy()
    gap = 0.0
    for k in range(steps):
        log_caps = _step_logcap_arr(log_caps, weights_lc, spec, dt, noise[:, k, :])
        weights_lc, _ = weights_from_logcaps(log_caps)
        weights_we = _step_weights_arr(weights_we, spec, dt, noise[:, k, :])
        gap = max(gap, float(np.abs(weights_lc - weights_we).max()))
    return gap


def comparison_lemma_check(
    b_low: Callable,
    b_high: Callable,
    sigma: Callable,
    x_init: float,
    params: SimParams,
) -> dict:
    """Discrete-level ordering check for two drifts under shared noise.

    Integrates dX = b_low dt + sigma dW and dY = b_high dt + sigma dW and
    counts steps where X exceeds Y beyond the discretization allowance
    10 * sqrt(dt) * dt.
    """
    P, dt = params.n_paths, params.dt
    steps = params.n_steps
    tol = 10.0 * math.sqrt(dt) * dt
    X = np.full(P, float(x_init))
    Y = np.full(P, float(x_init))
    paths = np.arange(P)
    violations = 0
    max_violation = 0.0
    sqrt_dt = math.sqrt(dt)

    for k0 in range(0, steps, _CHUNK_STEPS):
        k1 = min(k0 + _CHUNK_STEPS, steps)
        if params.zero_noise:
            noise = np.zeros((P, k1 - k0, 1))
        else:
            noise = rng.normal_chunk(params.seed, paths, k0, k1 - k0, 1) * sqrt_dt
        for j in range(k1 - k0):
            bl = np.asarray(b_low(X), dtype=float)
            bh = np.asarray(b_high(X), dtype=float)
            if np.any(bl > bh + 1e-12):
                raise ParameterError("b_low exceeds b_high at a sampled point")
            dW = noise[:, j, 0]
            X = X + bl * dt + np.asarray(sigma(X), dtype=float) * dW
            Y = Y + np.asarray(b_high(Y), dtype=float) * dt + np.asarray(
                sigma(Y), dtype=float
            ) * dW
            excess = X - Y
            violations += int(np.count_nonzero(excess > tol))
            max_violation = max(max_violation, float(max(excess.max(), 0.0)))

    return {"violation_count": violations, "max_violation": max_violation}


# ---------------------------------------------------------------------------
# Artifact emission
# ---------------------------------------------------------------------------

TRAJECTORY_COLUMNS = ("path", "step", "time", "stock", "weight")


def write_trajectory_csv(fileobj, results: Sequence[PathResult], record_stride: int = 1) -> None:
    """CSV dump with fixed columns (path, step, time, stock, weight)."""
    fileobj.write(",".join(TRAJECTORY_COLUMNS) + "\n")
    for r in results:
        if r.sampled_trajectory is None:
            continue
        times, weights = r.sampled_trajectory
        for row, t in enumerate(times):
            step = row * record_stride
            for stock in range(weights.shape[1]):
                fileobj.write(
                    f"{r.path_index},{step},{t:.10g},{stock},{weights[row, stock]:.12g}\n"
                )
