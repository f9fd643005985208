"""Noise generators, scenarios and Monte-Carlo risk estimation."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from .core import Design, as_values, ell_s_loss
from .errors import ContractError, SimulationError, StructuralError
from .estimators import linear_span_1d, lse_coefficient, lse_linear_1d, sign_coefficient
from .signtest import lambda_mean, t_statistic

__all__ = [
    "CSV_COLUMNS",
    "MAX_FAILURE_RATE",
    "NoiseModel",
    "RiskEstimate",
    "Scenario",
    "gaussian_abs_moment",
    "hetero_expected",
    "hetero_f0",
    "lse_handle",
    "mean_T_check",
    "monte_carlo_risk",
    "replication_seeds",
    "sample_noise",
    "sample_qbeta",
    "scenario_from_dict",
    "scenario_hetero",
    "sigma2_convergence_check",
    "sigma2_on_design",
    "sign_estimator_handle",
]

CSV_COLUMNS = ("rep", "seed", "estimator", "n", "ell_loss", "runtime_ms")
MAX_FAILURE_RATE = 0.01
NOISE_FAMILIES = ("scaled_iid", "qbeta", "bernoulli", "poisson", "gaussian_hetero")


def gaussian_abs_moment() -> float:
    """``E|N(0, 1)|`` from ``int_0^inf 2x phi(x) dx = 2 phi(0)`` with ``phi(0) = 1/sqrt(2 pi)``.

    Cross-checked against the error function: ``erf(1/sqrt 2)`` is the mass of
    ``[-1, 1]`` and the derivative of ``erf`` at 0 is ``2/sqrt(pi)``.
    """
    # d/dx erf(x / sqrt 2) at 0 equals 2 phi(0).
    h = 1e-6
    slope = (math.erf(h / math.sqrt(2.0)) - math.erf(-h / math.sqrt(2.0))) / (2 * h)
    exact = 2.0 / math.sqrt(2.0 * math.pi)
    if abs(slope - exact) > 1e-9:
        raise AssertionError("error-function cross-check failed")
    return exact


# ---------------------------------------------------------------------------
# Noise
# ---------------------------------------------------------------------------


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_qbeta(beta: float, count: int, seed=None) -> np.ndarray:
    """Symmetric draws whose absolute value has density ``2 q_beta``.

    ``|xi| = exp(T / 2)`` with ``T ~ Gamma(beta, 1)`` and an independent
    uniform sign.
    """
    if not beta > 0:
        raise ContractError("beta must be positive")
    rng = _rng(seed)
    t = rng.gamma(beta, 1.0, size=count)
    signs = rng.integers(0, 2, size=count) * 2 - 1
    return signs * np.exp(t / 2.0)


@dataclass(frozen=True)
class NoiseModel:
    """Per-point noise description.

    * ``scaled_iid``: ``tau_i * xi_i`` with ``xi`` standard Gaussian (``base="gaussian"``)
      or ``q_beta`` (``base="qbeta"``, parameter ``beta``);
    * ``qbeta``: i.i.d. ``q_beta`` errors;
    * ``bernoulli`` / ``poisson``: responses drawn with mean ``f*``;
    * ``gaussian_hetero``: independent ``N(0, sigma_i^2)``.
    """

    family: str
    scale: tuple[float, ...] | None = None
    base: str = "gaussian"
    beta: float | None = None

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise StructuralError(f"unknown noise family {self.family!r}")
        if self.scale is not None:
            sc = tuple(float(t) for t in self.scale)
            if any(not t >= 0 for t in sc):
                raise ContractError("noise scales must be nonnegative")
            object.__setattr__(self, "scale", sc)
        if self.family in ("scaled_iid", "gaussian_hetero") and self.scale is None:
            raise StructuralError(f"{self.family} noise needs per-point scales")
        if self.family == "qbeta" or (self.family == "scaled_iid" and self.base == "qbeta"):
            if self.beta is None or not self.beta > 0:
                raise ContractError("q_beta noise needs beta > 0")
        if self.base not in ("gaussian", "qbeta"):
            raise StructuralError("base must be 'gaussian' or 'qbeta'")

    def to_dict(self) -> dict:
        return {"family": self.family, "scale": None if self.scale is None else list(self.scale), "base": self.base, "beta": self.beta}


def _check_means(family: str, truth: np.ndarray) -> None:
    if family == "bernoulli" and (np.any(truth < 0) or np.any(truth > 1)):
        raise ContractError("Bernoulli means must lie in [0, 1]")
    if family == "poisson" and np.any(truth <= 0):
        raise ContractError("Poisson means must be positive")


def sample_noise(config: NoiseModel, truth: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw of the centred error vector ``Y - f*``."""
    n = truth.size
    if config.scale is not None and len(config.scale) != n:
        raise StructuralError(f"{len(config.scale)} noise scales for {n} points")
    if config.family == "gaussian_hetero":
        return np.asarray(config.scale) * rng.standard_normal(n)
    if config.family == "scaled_iid":
        base = rng.standard_normal(n) if config.base == "gaussian" else sample_qbeta(config.beta, n, rng)
        return np.asarray(config.scale) * base
    if config.family == "qbeta":
        return sample_qbeta(config.beta, n, rng)
    _check_means(config.family, truth)
    if config.family == "bernoulli":
        return (rng.random(n) < truth).astype(float) - truth
    return rng.poisson(truth).astype(float) - truth


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    name: str
    design: Design
    truth: np.ndarray
    noise: NoiseModel
    seed: int | None = None
    f0: np.ndarray | None = None
    a_star: float | None = None

    def __post_init__(self):
        t = np.asarray(self.truth, dtype=float)
        if t.shape != (self.design.n,):
            raise StructuralError("truth must have one value per design point")
        _check_means(self.noise.family, t)
        object.__setattr__(self, "truth", t)

    @property
    def n(self) -> int:
        return self.design.n

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        return self.truth + sample_noise(self.noise, self.truth, rng)


def hetero_f0(x) -> np.ndarray:
    """``1 / (sqrt(x) |log(x / e)|)`` on ``(0, 1]``."""
    x = np.asarray(x, dtype=float)
    return 1.0 / (np.sqrt(x) * np.abs(np.log(x) - 1.0))


def scenario_hetero(n: int, a_star: float = 1.0, seed: int | None = None) -> Scenario:
    """Equispaced ``x_i = i/n``, truth ``a* f0``, Gaussian noise only at the first point.

    The first point has variance ``n log^2(e n)``; the others are noiseless.
    """
    if n < 2:
        raise StructuralError("n must be >= 2")
    design = Design.equispaced(n, 0.0, 1.0)
    f0 = hetero_f0(design.points)
    scale = np.zeros(n)
    scale[0] = math.sqrt(n) * (1.0 + math.log(n))
    return Scenario("hetero", design, a_star * f0, NoiseModel("gaussian_hetero", tuple(scale)), seed, f0, a_star)


def hetero_expected(n: int) -> dict:
    """Exact expected losses and related quantities for :func:`scenario_hetero`."""
    x = np.arange(1, n + 1) / n
    f0 = hetero_f0(x)
    s1, s2 = math.fsum(f0), math.fsum(f0 * f0)
    c0 = gaussian_abs_moment()
    return {
        "c0": c0,
        "sign_risk": c0 * (1.0 + math.log(n)) / math.sqrt(n),
        "sign_risk_log_n": c0 * math.log(n) / math.sqrt(n),
        "lse_risk": c0 * s1 / s2,
        "mean_f0": s1 / n,
        "mean_f0_sq": s2 / n,
        "lse_coef_variance": (s2 / n) ** -2,
        "sign_coef_variance": n * (1.0 + math.log(n)) ** 2 / s1**2,
    }


def _design_from_dict(d: dict) -> Design:
    kind = d.get("kind", "equispaced")
    if kind == "equispaced":
        return Design.equispaced(int(d["n"]), float(d.get("a", 0.0)), float(d.get("b", 1.0)))
    if kind == "midpoint":
        n = int(d["n"])
        return Design((np.arange(1, n + 1) - 0.5) / n, (0.0, 1.0))
    if kind == "points":
        return Design(np.asarray(d["points"], dtype=float))
    raise StructuralError(f"unknown design kind {kind!r}")


_TRUTHS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "zero": lambda x: np.zeros_like(x),
    "identity": lambda x: x,
    "one_plus_x": lambda x: 1.0 + x,
    "square": lambda x: x * x,
    "sqrt": np.sqrt,
    "step": lambda x: (x > 0.5).astype(float),
}


def scenario_from_dict(config: dict, n: int | None = None, seed: int | None = None) -> Scenario:
    """Build a scenario from a JSON-like mapping.

    ``{"scenario": "hetero", "n": ..., "a_star": ...}`` or
    ``{"design": {...}, "truth": "identity" | [values], "noise": {"family": ..., ...}}``.
    """
    if config.get("scenario") == "hetero":
        return scenario_hetero(int(n or config["n"]), float(config.get("a_star", 1.0)), seed)
    d = dict(config.get("design", {}))
    if n is not None:
        d["n"] = n
    design = _design_from_dict(d)
    x = design.points
    t = config.get("truth", "zero")
    if isinstance(t, str):
        if t not in _TRUTHS:
            raise StructuralError(f"unknown truth {t!r}; expected one of {sorted(_TRUTHS)}")
        truth = _TRUTHS[t](x)
    else:
        truth = np.asarray(t, dtype=float)
    nz = dict(config.get("noise", {"family": "gaussian_hetero", "scale": 1.0}))
    scale = nz.get("scale")
    if scale is not None and np.ndim(scale) == 0:
        scale = [float(scale)] * design.n
    noise = NoiseModel(nz["family"], None if scale is None else tuple(scale), nz.get("base", "gaussian"), nz.get("beta"))
    return Scenario(config.get("name", "custom"), design, truth, noise, seed)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def sign_estimator_handle(scenario: Scenario, certify: bool = False) -> Callable[[Design, np.ndarray], np.ndarray]:
    """Sign estimator on ``span(f0)`` for a scenario that carries ``f0``.

    With ``certify`` the full estimator runs, including the ``sup T`` value;
    otherwise only the coefficient is computed, which is what the loss needs.
    """
    if scenario.f0 is None:
        raise StructuralError("scenario has no reference direction f0")
    f0 = scenario.f0
    if certify:
        return lambda design, y: linear_span_1d(f0, design, y).fhat.values
    return lambda design, y: sign_coefficient(f0, y) * f0


def lse_handle(scenario: Scenario, certify: bool = False) -> Callable[[Design, np.ndarray], np.ndarray]:
    if scenario.f0 is None:
        raise StructuralError("scenario has no reference direction f0")
    f0 = scenario.f0
    if certify:
        return lambda design, y: lse_linear_1d(f0, design, y).fhat.values
    return lambda design, y: lse_coefficient(f0, y) * f0


@dataclass
class RiskEstimate:
    mean: float
    stderr: float
    reps: int
    failures: int
    estimator: str
    losses: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))
    csv_path: str | None = None

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "mean_ell_risk": self.mean,
            "stderr": self.stderr,
            "reps": self.reps,
            "failures": self.failures,
            "csv": self.csv_path,
        }


def replication_seeds(seed: int, reps: int) -> list[int]:
    """Independent per-replication seeds spawned from one root seed."""
    children = np.random.SeedSequence(seed).spawn(reps)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def monte_carlo_risk(
    estimators: dict[str, Callable[[Design, np.ndarray], np.ndarray]],
    scenario: Scenario,
    reps: int,
    seed: int,
    csv_path: str | Path | None = None,
    timing: bool = False,
) -> dict[str, RiskEstimate]:
    """Average ``ell(f*, fhat)`` over ``reps`` simulated datasets for each estimator.

    All estimators see the same datasets. Replication ``r`` uses the
    generator seeded with the ``seed`` column of the CSV, so any single row
    can be reproduced. ``runtime_ms`` is 0 unless ``timing`` is set, keeping
    the CSV byte-identical across runs.
    """
    if reps < 1:
        raise StructuralError("reps must be >= 1")
    seeds = replication_seeds(seed, reps)
    names = list(estimators)
    losses = {k: np.full(reps, np.nan) for k in names}
    rows = []
    for rep, s in enumerate(seeds):
        rng = np.random.default_rng(s)
        y = scenario.draw(rng)
        for name in names:
            t0 = time.perf_counter()
            try:
                fhat = estimators[name](scenario.design, y)
                loss = ell_s_loss(scenario.truth, as_values(fhat), 1.0)
            except Exception:  # estimator failures are recorded, not fatal
                loss = math.nan
            ms = (time.perf_counter() - t0) * 1e3 if timing else 0.0
            losses[name][rep] = loss
            rows.append((rep, s, name, scenario.n, loss, ms))
    out = {}
    for name in names:
        arr = losses[name]
        ok = arr[~np.isnan(arr)]
        failures = int(arr.size - ok.size)
        if failures > MAX_FAILURE_RATE * reps:
            raise SimulationError(f"estimator {name!r} failed on {failures}/{reps} replications")
        mean = math.fsum(ok) / ok.size
        sd = math.sqrt(math.fsum((ok - mean) ** 2) / (ok.size - 1)) if ok.size > 1 else 0.0
        out[name] = RiskEstimate(mean, sd / math.sqrt(ok.size), reps, failures, name, arr, None if csv_path is None else str(csv_path))
    if csv_path is not None:
        write_csv(rows, csv_path)
    return out


def write_csv(rows, path: str | Path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep, s, name, n, loss, ms in rows:
        w.writerow((rep, s, name, n, repr(float(loss)), f"{ms:.3f}"))
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def mean_T_check(scenario: Scenario, f, g, reps: int, seed: int) -> dict:
    """Monte-Carlo mean of ``T(Y, f, g)`` next to its expectation ``Lambda(f*, f, g)``.

    Each replication uses the seed stream of :func:`replication_seeds`.
    """
    fv, gv = as_values(f), as_values(g)
    vals = np.empty(reps)
    for rep, s in enumerate(replication_seeds(seed, reps)):
        y = scenario.draw(np.random.default_rng(s))
        vals[rep] = t_statistic(y, fv, gv)
    mean = math.fsum(vals) / reps
    sd = math.sqrt(math.fsum((vals - mean) ** 2) / (reps - 1)) if reps > 1 else 0.0
    lam = lambda_mean(scenario.truth, fv, gv)
    se = sd / math.sqrt(reps)
    return {"mean_T": mean, "stderr": se, "lambda": lam, "z": (mean - lam) / se if se > 0 else 0.0}


# ---------------------------------------------------------------------------
# Variance limits for Bernoulli and Poisson responses
# ---------------------------------------------------------------------------


def _variance_fn(family: str) -> Callable[[np.ndarray], np.ndarray]:
    if family == "bernoulli":
        return lambda m: m * (1.0 - m)
    if family == "poisson":
        return lambda m: m
    raise StructuralError("family must be 'bernoulli' or 'poisson'")


def sigma2_on_design(family: str, fstar: Callable, n: int) -> float:
    """``sigma_2^2`` on the midpoint design ``x_i = (i - 1/2) / n``."""
    x = (np.arange(1, n + 1) - 0.5) / n
    m = np.asarray(fstar(x), dtype=float) * np.ones(n)
    _check_means(family, m)
    return math.fsum(_variance_fn(family)(m)) / n


def sigma2_convergence_check(family: str, fstar: Callable, n_grid=(10, 100, 1000)) -> list[dict]:
    """Design value, quadrature limit and gap for each ``n``."""
    var = _variance_fn(family)
    limit, _ = quad(lambda t: float(var(np.asarray(fstar(t), dtype=float))), 0.0, 1.0, epsabs=1e-13, epsrel=1e-12)
    rows = []
    for n in n_grid:
        val = sigma2_on_design(family, fstar, int(n))
        rows.append({"n": int(n), "sigma2_sq": val, "limit": limit, "gap": abs(val - limit)})
    return rows


def scenario_to_json(s: Scenario) -> str:
    return json.dumps({"name": s.name, "n": s.n, "noise": s.noise.to_dict(), "a_star": s.a_star})
