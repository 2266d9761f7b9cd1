"""Classical and generalised logistic regression on a scalar covariate.

The generalised model gives each trial a belief function on {1, 0}:
``p = sigmoid(b0 + b1 x)`` is the mass of success and
``q = b2 * (1 - p)`` the mass of failure, leaving ``1 - p - q`` uncommitted.
Parameters are fitted by maximizing either the lower likelihood
(product of ``p`` or ``q``) or the upper likelihood (product of ``1 - q`` or
``1 - p``) with projected gradient ascent on the box
``b2 in [eps, 1]``, ``|b0|, |b1| <= bound``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

Which = Literal["lower", "upper"]
ACTIVE_TOL = 1e-9


class DatasetError(ValueError):
    pass


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


@dataclass(frozen=True)
class Dataset:
    """Covariates ``x`` and outcomes ``y`` (1, 0 or NaN for a missing outcome)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise DatasetError("x and y lengths differ")
        if not np.all(np.isfinite(x)):
            raise DatasetError("covariates must be finite")
        seen = y[~np.isnan(y)]
        if not np.all((seen == 0) | (seen == 1)):
            raise DatasetError("outcomes must be 0, 1 or missing")
        if seen.size < 2:
            raise DatasetError("need at least two observed outcomes")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_rows(cls, rows: Sequence[tuple[float, float | None]]) -> Dataset:
        x = [r[0] for r in rows]
        y = [math.nan if r[1] is None else r[1] for r in rows]
        return cls(np.array(x, dtype=float), np.array(y, dtype=float))

    @classmethod
    def from_csv(cls, path: str | Path) -> Dataset:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"x", "y"} <= set(reader.fieldnames):
                raise DatasetError("dataset CSV needs an 'x,y' header")
            xs, ys = [], []
            for lineno, row in enumerate(reader, start=2):
                try:
                    xs.append(float(row["x"]))
                except (TypeError, ValueError):
                    raise DatasetError(f"line {lineno}: bad x value {row['x']!r}") from None
                raw = (row["y"] or "").strip()
                if raw.upper() in ("NA", "NAN", ""):
                    ys.append(math.nan)
                elif raw in ("0", "1", "0.0", "1.0"):
                    ys.append(float(raw))
                else:
                    raise DatasetError(f"line {lineno}: outcome must be 0, 1 or NA, got {raw!r}")
        return cls(np.array(xs), np.array(ys))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y"])
            for xi, yi in zip(self.x, self.y):
                w.writerow([f"{xi:.17g}", "NA" if np.isnan(yi) else int(yi)])

    @property
    def observed(self) -> np.ndarray:
        return ~np.isnan(self.y)

    @property
    def n_missing(self) -> int:
        return int(np.sum(~self.observed))

    def observed_xy(self) -> tuple[np.ndarray, np.ndarray]:
        keep = self.observed
        return self.x[keep], self.y[keep]


@dataclass(frozen=True)
class TrialBelief:
    p: float
    q: float

    @property
    def r(self) -> float:
        return 1.0 - self.p - self.q

    @property
    def interval(self) -> tuple[float, float]:
        """Belief and plausibility of success."""
        return self.p, 1.0 - self.q


def trial_belief(beta: Sequence[float], x: float) -> TrialBelief:
    b0, b1, b2 = beta
    eta = b0 + b1 * x
    return TrialBelief(float(sigmoid(eta)), float(b2 * sigmoid(-eta)))


# -- objectives -------------------------------------------------------------------

def _log_probs(beta01, x):
    """Per-row ``log p`` and ``log(1 - p)``."""
    eta = beta01[0] + beta01[1] * x
    return -np.logaddexp(0.0, -eta), -np.logaddexp(0.0, eta)


def classical_loglik(beta01: Sequence[float], data: Dataset) -> float:
    x, y = data.observed_xy()
    logp, log1mp = _log_probs(beta01, x)
    return float(np.sum(np.where(y == 1, logp, log1mp)))


def lower_loglik(beta: Sequence[float], data: Dataset) -> float:
    """Sum of ``log p`` over successes and ``log q`` over failures."""
    x, y = data.observed_xy()
    b2 = beta[2]
    if np.any(y == 0) and b2 <= 0:
        return -math.inf
    logp, log1mp = _log_probs(beta, x)
    log_b2 = math.log(b2) if b2 > 0 else 0.0
    return float(np.sum(np.where(y == 1, logp, log1mp + log_b2)))


def upper_loglik(beta: Sequence[float], data: Dataset) -> float:
    """Sum of ``log(1 - q)`` over successes and ``log(1 - p)`` over failures."""
    x, y = data.observed_xy()
    logp, log1mp = _log_probs(beta, x)
    # 1 - q = p + (1 - b2)(1 - p), kept in log space so b2 = 1 reduces to log p exactly
    with np.errstate(divide="ignore"):
        log_1m_q = np.logaddexp(logp, np.log1p(-beta[2]) + log1mp)
    return float(np.sum(np.where(y == 1, log_1m_q, log1mp)))


def loglik(beta: Sequence[float], data: Dataset, which: Which) -> float:
    return lower_loglik(beta, data) if which == "lower" else upper_loglik(beta, data)


def loglik_gradients(beta: Sequence[float], data: Dataset, which: Which) -> np.ndarray:
    """Analytic gradient of the lower or upper log-likelihood in (b0, b1, b2)."""
    b0, b1, b2 = beta
    x, y = data.observed_xy()
    eta = b0 + b1 * x
    p = sigmoid(eta)
    s = sigmoid(-eta)
    if which == "lower":
        d_eta = s - (1 - y)
        d_b2 = np.sum(1 - y) / b2 if np.any(y == 0) else 0.0
    elif which == "upper":
        d_eta = y * b2 * s * p / (1 - b2 * s) - (1 - y) * p
        d_b2 = -np.sum(y * s / (1 - b2 * s))
    else:
        raise ValueError(f"unknown objective {which!r}")
    return np.array([np.sum(d_eta), np.sum(d_eta * x), d_b2], dtype=float)


# -- fitting ------------------------------------------------------------------------

@dataclass(frozen=True)
class FitConfig:
    bound: float = 50.0
    eps: float = 1e-8
    max_iter: int = 10_000
    tol: float = 1e-6
    n_starts: int = 5
    armijo: float = 1e-4
    shrink: float = 0.5
    l2: float = 0.0
    fix_beta1: float | None = None
    fix_beta2: float | None = None

    def __post_init__(self):
        if self.bound <= 0 or self.eps <= 0 or self.tol <= 0 or self.max_iter < 1 or self.n_starts < 1:
            raise ValueError("optimizer settings must be positive")
        if not 0 < self.armijo < 1 or not 0 < self.shrink < 1:
            raise ValueError("line-search constants must lie in (0, 1)")

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([-self.bound, -self.bound, self.eps])
        hi = np.array([self.bound, self.bound, 1.0])
        if self.fix_beta1 is not None:
            lo[1] = hi[1] = self.fix_beta1
        if self.fix_beta2 is not None:
            lo[2] = hi[2] = self.fix_beta2
        return lo, hi


@dataclass
class KKTReport:
    """First-order diagnostics at a fitted point.

    Constraints are written ``g(beta) <= 0``: ``g0 = b2 - 1``,
    ``g_i = -b2 - exp(b0 + b1 x_i)`` per observed row, ``eps - b2`` and the
    covariate box. Fixed coordinates are treated as equality constraints and
    left out of the stationarity residual.
    """

    stationarity: float
    max_slackness: float
    multipliers: dict[str, float]
    slackness: dict[str, float]
    row_slackness: list[float]
    active: list[str]
    dual_feasible: bool

    def to_json(self) -> dict:
        return {
            "stationarity": self.stationarity,
            "max_slackness": self.max_slackness,
            "multipliers": self.multipliers,
            "slackness": self.slackness,
            "row_slackness": self.row_slackness,
            "active": self.active,
            "dual_feasible": self.dual_feasible,
        }


@dataclass
class FitResult:
    which: str
    beta: np.ndarray
    objective: float
    kkt: KKTReport
    converged: bool
    boundary_hit: bool
    iterations: int = 0
    n_missing: int = 0
    message: str = ""
    starts: list[float] = field(default_factory=list)

    @property
    def active_constraints(self) -> list[str]:
        return self.kkt.active

    def belief(self, x: float) -> TrialBelief:
        return trial_belief(self.beta, x)

    def to_json(self) -> dict:
        return {
            "which": self.which,
            "beta": [float(b) for b in self.beta],
            "objective": self.objective,
            "kkt": self.kkt.to_json(),
            "converged": self.converged,
            "boundary_hit": self.boundary_hit,
            "iterations": self.iterations,
            "n_missing": self.n_missing,
            "message": self.message,
        }

    @classmethod
    def from_json(cls, doc: dict) -> FitResult:
        k = doc.get("kkt", {})
        kkt = KKTReport(
            stationarity=k.get("stationarity", math.nan),
            max_slackness=k.get("max_slackness", math.nan),
            multipliers=k.get("multipliers", {}),
            slackness=k.get("slackness", {}),
            row_slackness=k.get("row_slackness", []),
            active=k.get("active", []),
            dual_feasible=k.get("dual_feasible", True),
        )
        return cls(doc["which"], np.array(doc["beta"], dtype=float), doc["objective"], kkt,
                   doc["converged"], doc["boundary_hit"], doc.get("iterations", 0),
                   doc.get("n_missing", 0), doc.get("message", ""))


def _constraints(beta: np.ndarray, data: Dataset, config: FitConfig):
    """Yield ``(name, value, gradient)`` for every inequality constraint."""
    b0, b1, b2 = beta
    x, _ = data.observed_xy()
    yield "g0", b2 - 1.0, np.array([0.0, 0.0, 1.0])
    yield "beta2_min", config.eps - b2, np.array([0.0, 0.0, -1.0])
    B = config.bound
    if config.fix_beta1 is None:
        yield "beta1_max", b1 - B, np.array([0.0, 1.0, 0.0])
        yield "beta1_min", -B - b1, np.array([0.0, -1.0, 0.0])
    yield "beta0_max", b0 - B, np.array([1.0, 0.0, 0.0])
    yield "beta0_min", -B - b0, np.array([-1.0, 0.0, 0.0])
    e = np.exp(np.clip(b0 + b1 * x, -700, 700))
    for i, (xi, ei) in enumerate(zip(x, e)):
        yield f"g{i + 1}", -b2 - ei, np.array([-ei, -ei * xi, -1.0])


def kkt_diagnostics(beta: np.ndarray, grad: np.ndarray, data: Dataset, config: FitConfig) -> KKTReport:
    """Recover multipliers on the active set by least squares and report residuals."""
    free = np.array([True, config.fix_beta1 is None, config.fix_beta2 is None])
    names, values, grads = [], [], []
    row_values = []
    for name, g, dg in _constraints(beta, data, config):
        if name.startswith("g") and name != "g0":
            row_values.append(g)
            if abs(g) > ACTIVE_TOL:
                continue
        if name in ("g0", "beta2_min") and not free[2]:
            continue
        names.append(name)
        values.append(g)
        grads.append(dg)
    active = [i for i, g in enumerate(values) if abs(g) <= ACTIVE_TOL]
    mu = {name: 0.0 for name in names}
    resid_vec = grad[free]
    if active:
        G = np.array([grads[i][free] for i in active]).T
        sol, *_ = np.linalg.lstsq(G, grad[free], rcond=None)
        for i, m in zip(active, sol):
            mu[names[i]] = float(m)
        resid_vec = grad[free] - G @ sol
    slack = {name: float(mu[name] * g) for name, g in zip(names, values)}
    row_slack = [float(mu.get(f"g{i + 1}", 0.0) * g) for i, g in enumerate(row_values)]
    max_slack = max([abs(v) for v in slack.values()] + [abs(v) for v in row_slack] + [0.0])
    return KKTReport(
        stationarity=float(np.linalg.norm(resid_vec)),
        max_slackness=max_slack,
        multipliers={names[i]: mu[names[i]] for i in active} | {"g0": mu.get("g0", 0.0)},
        slackness=slack,
        row_slackness=row_slack,
        active=[names[i] for i in active],
        dual_feasible=all(mu[names[i]] >= -1e-9 for i in active),
    )


def _starts(config: FitConfig, lo: np.ndarray, hi: np.ndarray) -> list[np.ndarray]:
    starts = []
    for seed in range(config.n_starts):
        if seed == 0:
            b = np.array([0.0, 0.0, 0.5])
        else:
            rng = np.random.default_rng(seed)
            b = np.array([rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.05, 0.95)])
        starts.append(np.clip(b, lo, hi))
    return starts


def _ascend(start: np.ndarray, data: Dataset, which: Which, config: FitConfig,
            lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, float, int, bool]:
    """Projected gradient ascent with Armijo backtracking along the projection arc."""

    def f(b):
        val = loglik(b, data, which)
        return val - config.l2 * float(b[0] ** 2 + b[1] ** 2)

    def grad(b):
        g = loglik_gradients(b, data, which)
        g[:2] -= 2 * config.l2 * b[:2]
        return g

    beta = np.clip(start, lo, hi)
    fb = f(beta)
    step = 1.0
    for it in range(1, config.max_iter + 1):
        g = grad(beta)
        if np.linalg.norm(np.clip(beta + g, lo, hi) - beta) < config.tol:
            return beta, fb, it, True
        t = step
        while True:
            cand = np.clip(beta + t * g, lo, hi)
            fc = f(cand)
            if fc >= fb + config.armijo * float(g @ (cand - beta)):
                break
            t *= config.shrink
            if t < 1e-30:
                return beta, fb, it, False
        moved = np.linalg.norm(cand - beta)
        beta, fb = cand, fc
        step = t * 2.0
        if moved == 0.0:
            # every free coordinate is pinned at a bound with outward gradient
            return beta, fb, it, True
    g = grad(beta)
    ok = np.linalg.norm(np.clip(beta + g, lo, hi) - beta) < config.tol
    return beta, fb, config.max_iter, bool(ok)


def _boundary_hit(beta: np.ndarray, config: FitConfig) -> bool:
    lo, hi = config.bounds()
    free = lo < hi
    at = (np.abs(beta - lo) <= ACTIVE_TOL) | (np.abs(beta - hi) <= ACTIVE_TOL)
    return bool(np.any(at & free))


def fit(data: Dataset, which: Which = "lower", config: FitConfig | None = None) -> FitResult:
    """Maximize the lower or upper likelihood over the feasible box, multi-start."""
    if which not in ("lower", "upper"):
        raise ValueError(f"unknown objective {which!r}")
    config = config or FitConfig()
    lo, hi = config.bounds()
    best = None
    objectives = []
    for start in _starts(config, lo, hi):
        beta, fb, iters, ok = _ascend(start, data, which, config, lo, hi)
        objectives.append(fb)
        # strict comparison keeps the lowest seed on exact ties
        if best is None or fb > best[1]:
            best = (beta, fb, iters, ok)
    beta, fb, iters, ok = best
    grad = loglik_gradients(beta, data, which)
    kkt = kkt_diagnostics(beta, grad, data, config)
    hit = _boundary_hit(beta, config)
    msg = "converged" if ok else f"no convergence within {config.max_iter} iterations"
    return FitResult(which, beta, loglik(beta, data, which), kkt, ok, hit, iters,
                     data.n_missing, msg, objectives)


def _separated(x: np.ndarray, y: np.ndarray, slope: bool) -> bool:
    """Complete or quasi-complete separation, for which no finite MLE exists."""
    if np.all(y == y[0]):
        return True
    if not slope:
        return False
    x0, x1 = x[y == 0], x[y == 1]
    return bool(x0.max() <= x1.min() or x1.max() <= x0.min())


def _separating_direction(x, y, slope, bound):
    if np.all(y == y[0]):
        b = np.zeros(2 if slope else 1)
        b[0] = bound if y[0] == 1 else -bound
        return b
    x0, x1 = x[y == 0], x[y == 1]
    sign = 1.0 if x0.max() <= x1.min() else -1.0
    cut = 0.5 * (x0.max() + x1.min()) if sign > 0 else 0.5 * (x1.max() + x0.min())
    slope_val = sign * bound / max(1.0, abs(cut))
    return np.array([-slope_val * cut, slope_val])


def classical_fit(data: Dataset, slope: bool = True, bound: float = 50.0,
                  max_iter: int = 200, tol: float = 1e-10) -> FitResult:
    """Ordinary logistic regression by damped Newton iterations.

    Complete separation shows up as coefficients running past ``bound``;
    the fit then stops with ``converged=False`` and ``boundary_hit=True``.
    """
    x, y = data.observed_xy()
    X = np.column_stack([np.ones_like(x), x]) if slope else np.ones((x.size, 1))
    b = np.zeros(X.shape[1])

    def obj(b):
        return classical_loglik(as_beta(b), data)

    def as_beta(b):
        return np.array([b[0], b[1] if slope else 0.0, 1.0])

    config = FitConfig(bound=bound, fix_beta1=None if slope else 0.0, fix_beta2=1.0)
    fb = obj(b)
    converged = False
    separated = _separated(x, y, slope)
    it = 0
    if not separated:
        for it in range(1, max_iter + 1):
            p = sigmoid(X @ b)
            score = X.T @ (y - p)
            if np.linalg.norm(score) < tol:
                converged = True
                break
            H = X.T @ (X * (p * (1 - p))[:, None])
            try:
                delta = np.linalg.solve(H, score)
            except np.linalg.LinAlgError:
                delta = np.linalg.lstsq(H, score, rcond=None)[0]
            t = 1.0
            while obj(b + t * delta) < fb and t > 1e-12:
                t *= 0.5
            b = b + t * delta
            fb = obj(b)
            if np.max(np.abs(b)) > bound:
                separated = True
                break
        else:
            p = sigmoid(X @ b)
            converged = np.linalg.norm(X.T @ (y - p)) < 1e-6
    if separated:
        # the likelihood keeps rising along a ray; report where it crosses the box
        converged = False
        b = _separating_direction(x, y, slope, bound)
        fb = obj(b)
    beta = as_beta(b)
    grad = loglik_gradients(beta, data, "lower")
    grad[2] = 0.0
    kkt = kkt_diagnostics(beta, grad, data, config)
    msg = "separation: coefficients diverge" if separated else (
        "converged" if converged else f"no convergence within {max_iter} iterations")
    return FitResult("classical", beta, fb, kkt, bool(converged), bool(separated), it,
                     data.n_missing, msg)


@dataclass(frozen=True)
class Prediction:
    x: float
    lower: TrialBelief | None
    upper: TrialBelief | None

    @property
    def union_interval(self) -> tuple[float, float]:
        ivs = [b.interval for b in (self.lower, self.upper) if b is not None]
        return min(lo for lo, _ in ivs), max(hi for _, hi in ivs)

    def to_json(self) -> dict:
        out: dict = {"x": self.x}
        for name, b in (("lower", self.lower), ("upper", self.upper)):
            if b is not None:
                out[name] = {"p": b.p, "q": b.q, "interval": list(b.interval)}
        out["union_interval"] = list(self.union_interval)
        return out


def predict(lower_model: FitResult | None, upper_model: FitResult | None, x: float) -> Prediction:
    """Belief functions on {1, 0} at ``x`` under each fitted model."""
    if lower_model is None and upper_model is None:
        raise ValueError("predict needs at least one fitted model")
    return Prediction(
        float(x),
        None if lower_model is None else lower_model.belief(x),
        None if upper_model is None else upper_model.belief(x),
    )


def synthetic_dataset(n: int, beta0: float, beta1: float, seed: int = 0,
                      missing: float = 0.0) -> Dataset:
    """Draw ``x ~ N(0, 1)`` and ``y ~ Bernoulli(sigmoid(beta0 + beta1 x))``."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    y = (rng.uniform(size=n) < sigmoid(beta0 + beta1 * x)).astype(float)
    if missing:
        y[rng.uniform(size=n) < missing] = np.nan
    return Dataset(x, y)


def with_fixed(config: FitConfig, **kwargs) -> FitConfig:
    return replace(config, **kwargs)
