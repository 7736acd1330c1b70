"""Deterministic Levenberg-Marquardt for weighted nonlinear least squares.

Minimises sum(((y - f(x, p)) / sigma)^2) with Marquardt's diagonal scaling,
forward-difference Jacobians and box bounds enforced by projection.  No
randomness anywhere: identical problems give bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Union

import numpy as np

from .models import MODELS, Model


@dataclass
class FitOptions:
    gtol: float = 1e-10
    xtol: float = 1e-12
    ftol: float = 1e-14
    max_iter: int = 200
    fd_step: float = 1e-6
    scale_covariance: bool = True  # multiply covariance by reduced chi^2
    lambda0: float = 1e-3


@dataclass
class FitProblem:
    model: Union[str, Model]
    x: np.ndarray
    y: np.ndarray
    p0: Dict[str, float]
    sigma: Optional[np.ndarray] = None
    bounds: Dict[str, tuple] = field(default_factory=dict)
    fixed: Sequence[str] = ()
    options: FitOptions = field(default_factory=FitOptions)
    # typical magnitude per parameter; floors the finite-difference step for values near zero
    scale: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if isinstance(self.model, str):
            self.model = MODELS[self.model]
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.sigma = np.ones_like(self.y) if self.sigma is None else np.asarray(self.sigma, dtype=float)
        if not (len(self.x) == len(self.y) == len(self.sigma)):
            raise ValueError("x, y and sigma must have equal length")
        if np.any(self.sigma <= 0):
            raise ValueError("sigma must be positive")
        missing = set(self.model.names) - set(self.p0)
        if missing:
            raise ValueError(f"missing initial values for {sorted(missing)}")
        for name, (lo, hi) in self.bounds.items():
            if name not in self.model.names:
                raise ValueError(f"bound for unknown parameter {name!r}")
            if lo > hi:
                raise ValueError(f"bounds for {name!r} have lower > upper")
        unknown = set(self.fixed) - set(self.model.names)
        if unknown:
            raise ValueError(f"unknown fixed parameters {sorted(unknown)}")
        if set(self.scale) - set(self.model.names) or any(v <= 0 for v in self.scale.values()):
            raise ValueError("scale entries must name model parameters and be positive")

    @property
    def free(self) -> list:
        return [n for n in self.model.names if n not in self.fixed]


@dataclass
class FitResult:
    model: str
    names: list
    values: np.ndarray
    covariance: np.ndarray
    chi2: float
    dof: int
    converged: bool
    iterations: int
    fixed: list = field(default_factory=list)
    units: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @property
    def params(self) -> Dict[str, float]:
        return dict(zip(self.names, map(float, self.values)))

    @property
    def errors(self) -> Dict[str, float]:
        return dict(zip(self.names, map(float, np.sqrt(np.clip(np.diag(self.covariance), 0, None)))))

    @property
    def reduced_chi2(self) -> float:
        return self.chi2 / self.dof if self.dof > 0 else math.nan

    @property
    def ok(self) -> bool:
        return self.converged and not self.flags

    def __getitem__(self, name: str) -> float:
        return self.params[name]

    def error(self, name: str) -> float:
        return self.errors[name]

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "parameters": [
                {"name": n, "value": float(v), "sigma": self.errors[n], "unit": self.units.get(n, ""), "fixed": n in self.fixed}
                for n, v in zip(self.names, self.values)
            ],
            "covariance": [float(c) for c in self.covariance.ravel()],
            "chi2": float(self.chi2),
            "dof": int(self.dof),
            "reduced_chi2": float(self.reduced_chi2) if self.dof > 0 else None,
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FitResult":
        names = [p["name"] for p in doc["parameters"]]
        k = len(names)
        return cls(
            model=doc["model"],
            names=names,
            values=np.array([p["value"] for p in doc["parameters"]], dtype=float),
            covariance=np.array(doc["covariance"], dtype=float).reshape(k, k),
            chi2=doc["chi2"],
            dof=doc["dof"],
            converged=doc["converged"],
            iterations=doc["iterations"],
            fixed=[p["name"] for p in doc["parameters"] if p.get("fixed")],
            units={p["name"]: p.get("unit", "") for p in doc["parameters"]},
            flags=list(doc.get("flags", [])),
        )


def _jacobian(fun: Callable, p: np.ndarray, r0: np.ndarray, typical: np.ndarray, lo, hi, step: float) -> np.ndarray:
    jac = np.empty((r0.size, p.size))
    for j in range(p.size):
        h = step * max(abs(p[j]), typical[j])
        if p[j] + h > hi[j]:
            h = -h
        q = p.copy()
        q[j] += h
        h = q[j] - p[j]  # exactly representable step
        jac[:, j] = (fun(q) - r0) / h
    return jac


def least_squares(problem: FitProblem) -> FitResult:
    """Levenberg-Marquardt fit of ``problem``.

    Stops when the scaled gradient (cosine between residual and every
    Jacobian column) drops below ``gtol``, when the step or the relative cost
    change becomes negligible, or after ``max_iter`` iterations.  Failure
    modes are reported in ``flags`` rather than raised: ``"max_iter"`` for
    non-convergence (best point so far is returned) and ``"singular"`` for a
    rank-deficient Jacobian.
    """
    model = problem.model
    opts = problem.options
    names = list(model.names)
    free = problem.free
    idx = [names.index(n) for n in free]
    n_free = len(free)
    n_pts = problem.y.size
    if n_pts < n_free:
        raise ValueError(f"underdetermined: {n_pts} points for {n_free} free parameters")

    full = np.array([problem.p0[n] for n in names], dtype=float)
    lo = np.array([problem.bounds.get(n, (-np.inf, np.inf))[0] for n in free], dtype=float)
    hi = np.array([problem.bounds.get(n, (-np.inf, np.inf))[1] for n in free], dtype=float)
    p = np.clip(full[idx], lo, hi)
    typical = np.array([problem.scale.get(n, abs(v) or 1.0) for n, v in zip(free, p)])

    x, y, s = problem.x, problem.y, problem.sigma

    def resid(q):
        vals = full.copy()
        vals[idx] = q
        return (y - model.func(x, *vals)) / s

    r = resid(p)
    cost = float(r @ r)
    if not np.isfinite(cost):
        raise ValueError("model is not finite at the initial parameters")
    lam = opts.lambda0
    nu = 2.0
    converged = False
    it = 0
    flags = []

    if n_free == 0:
        converged = True
    while not converged and it < opts.max_iter:
        it += 1
        jac = _jacobian(resid, p, r, typical, lo, hi, opts.fd_step)
        jtj = jac.T @ jac
        grad = jac.T @ r
        diag = np.diag(jtj).copy()
        col_norm = np.sqrt(diag)
        denom = col_norm * math.sqrt(cost) if cost > 0 else col_norm
        with np.errstate(divide="ignore", invalid="ignore"):
            cosines = np.where(denom > 0, np.abs(grad) / denom, 0.0)
        if cost == 0 or cosines.max() < opts.gtol:
            converged = True
            break
        diag[diag == 0] = 1.0
        while True:
            a = jtj + lam * np.diag(diag)
            try:
                step = -np.linalg.solve(a, grad)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(a, grad, rcond=None)[0]
            trial = np.clip(p + step, lo, hi)
            actual_step = trial - p
            r_trial = resid(trial)
            cost_trial = float(r_trial @ r_trial)
            predicted = -(2 * actual_step @ grad + actual_step @ jtj @ actual_step)
            if np.isfinite(cost_trial) and cost_trial < cost:
                gain = (cost - cost_trial) / predicted if predicted > 0 else 0.0
                rel_drop = (cost - cost_trial) / cost
                p, r, cost = trial, r_trial, cost_trial
                # Nielsen's damping update
                lam = max(lam * max(1 / 3, 1 - (2 * gain - 1) ** 3), 1e-15)
                nu = 2.0
                small_step = np.all(np.abs(actual_step) <= opts.xtol * (np.abs(p) + opts.xtol * typical))
                if small_step or rel_drop < opts.ftol:
                    converged = True
                break
            lam *= nu
            nu *= 2
            if lam > 1e16:
                # no downhill direction left at machine precision
                converged = True
                break

    if not converged:
        flags.append("max_iter")

    jac = _jacobian(resid, p, r, typical, lo, hi, opts.fd_step) if n_free else np.zeros((n_pts, 0))
    jtj = jac.T @ jac
    dof = n_pts - n_free
    cov_free = np.full((n_free, n_free), np.nan)
    if n_free:
        # column scaling keeps the conditioning test unit-independent
        norms = np.sqrt(np.diag(jtj))
        if np.any(norms == 0):
            flags.append("singular")
        else:
            scaled = jtj / np.outer(norms, norms)
            if np.linalg.cond(scaled) > 1e14:
                flags.append("singular")
                cov_free = np.linalg.pinv(scaled) / np.outer(norms, norms)
            else:
                cov_free = np.linalg.inv(scaled) / np.outer(norms, norms)
        cov_free = 0.5 * (cov_free + cov_free.T)
        if opts.scale_covariance and dof > 0:
            cov_free = cov_free * (cost / dof)

    cov = np.zeros((len(names), len(names)))
    cov[np.ix_(idx, idx)] = cov_free
    full[idx] = p
    return FitResult(
        model=model.name,
        names=names,
        values=full,
        covariance=cov,
        chi2=cost,
        dof=dof,
        converged=converged,
        iterations=it,
        fixed=list(problem.fixed),
        units=dict(model.units),
        flags=flags,
    )


def curve_fit(model: Union[str, Model], x, y, p0: Dict[str, float], sigma=None, **kw) -> FitResult:
    """Shorthand: build a :class:`FitProblem` and solve it."""
    opts = kw.pop("options", None) or FitOptions()
    for k in list(kw):
        if hasattr(opts, k):
            setattr(opts, k, kw.pop(k))
    return least_squares(FitProblem(model, x, y, p0, sigma, options=opts, **kw))
