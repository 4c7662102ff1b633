"""Recover attenuation and veiling light from a clean/depth/observed triple.

Minimizes the mean squared error between the classical forward model and
the observed image over ``theta = (beta_R, beta_G, beta_B, A_R, A_G, A_B)``
with projected gradient descent. Step lengths start from a Barzilai-Borwein
estimate and are halved until the Armijo condition holds, so accepted steps
never increase the error.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .imaging import as_depth, as_image, check_pair
from .optics import WaterProfile

log = logging.getLogger(__name__)

ARMIJO_C = 1e-4
DEGENERACY_VAR = 1e-6


class DegenerateProblemError(ValueError):
    """The data cannot identify beta and A jointly."""


@dataclass
class FitProblem:
    clean: np.ndarray
    depth: np.ndarray
    observed: np.ndarray
    init: WaterProfile
    beta_max: float = 10.0
    beta_min: float = 1e-9
    tol: float = 1e-10
    max_iters: int = 5000

    def __post_init__(self):
        self.clean = as_image(self.clean, "clean")
        self.observed = as_image(self.observed, "observed")
        self.depth = as_depth(self.depth)
        check_pair(self.clean, self.depth)
        if self.clean.shape != self.observed.shape:
            raise ValueError(
                f"dimension mismatch: clean {self.clean.shape}, observed {self.observed.shape}"
            )
        if not 0 < self.beta_min < self.beta_max:
            raise ValueError("bounds must satisfy 0 < beta_min < beta_max")
        if self.max_iters < 0 or not self.tol > 0:
            raise ValueError("max_iters must be >= 0 and tol > 0")

    def lower(self) -> np.ndarray:
        return np.array([self.beta_min] * 3 + [0.0] * 3)

    def upper(self) -> np.ndarray:
        return np.array([self.beta_max] * 3 + [1.0] * 3)


@dataclass
class FitResult:
    profile: WaterProfile
    final_mse: float
    iterations: int
    converged: bool
    gradient_norm: float
    mse_history: list[float]

    def to_dict(self) -> dict:
        return {
            "profile": self.profile.to_dict(),
            "final_mse": self.final_mse,
            "iterations": self.iterations,
            "converged": self.converged,
            "gradient_norm": self.gradient_norm,
        }


def _theta(profile: WaterProfile) -> np.ndarray:
    return np.array(profile.beta + profile.veiling, dtype=np.float64)


def _profile(theta: np.ndarray, name=None) -> WaterProfile:
    return WaterProfile(tuple(theta[:3]), tuple(np.clip(theta[3:], 0.0, 1.0)), name=name)


def _mse_and_grad(problem: FitProblem, theta: np.ndarray, want_grad: bool = True):
    beta, a = theta[:3], theta[3:]
    z = problem.depth[:, :, None]
    t = np.exp(-z * beta)
    diff = problem.clean - a
    resid = t * diff + a - problem.observed
    n = resid.size
    mse = float(np.sum(resid * resid) / n)
    if not want_grad:
        return mse, None
    g_beta = (2.0 / n) * np.sum(resid * (-z * t * diff), axis=(0, 1))
    g_a = (2.0 / n) * np.sum(resid * (1.0 - t), axis=(0, 1))
    return mse, np.concatenate([g_beta, g_a])


def forward_mse(problem: FitProblem, profile: WaterProfile) -> float:
    return _mse_and_grad(problem, _theta(profile), want_grad=False)[0]


def gradient(problem: FitProblem, profile: WaterProfile) -> tuple[np.ndarray, np.ndarray]:
    """``(d mse / d beta, d mse / d A)``, each of length 3."""
    _, g = _mse_and_grad(problem, _theta(profile))
    return g[:3], g[3:]


def check_identifiable(problem: FitProblem) -> None:
    if np.var(problem.depth) < DEGENERACY_VAR:
        raise DegenerateProblemError("depth is (nearly) constant; beta and A are not separable")
    for c, name in enumerate("RGB"):
        if np.var(problem.clean[:, :, c]) < DEGENERACY_VAR:
            raise DegenerateProblemError(
                f"clean channel {name} is (nearly) constant; J - A carries no structure"
            )


def fit(problem: FitProblem) -> FitResult:
    check_identifiable(problem)
    lo, hi = problem.lower(), problem.upper()
    theta = np.clip(_theta(problem.init), lo, hi)
    mse, g = _mse_and_grad(problem, theta)
    history = [mse]

    def pg_norm(th, gr):
        return float(np.linalg.norm(np.clip(th - gr, lo, hi) - th))

    step = 1.0
    prev = None
    it = 0
    gnorm = pg_norm(theta, g)
    while it < problem.max_iters and gnorm > problem.tol:
        if prev is not None:
            s, y = theta - prev[0], g - prev[1]
            sy = float(s @ y)
            if sy > 0:
                step = min(max(float(s @ s) / sy, 1e-12), 1e12)
        while True:
            cand = np.clip(theta - step * g, lo, hi)
            cand_mse, cand_g = _mse_and_grad(problem, cand)
            if cand_mse <= mse + ARMIJO_C * float(g @ (cand - theta)):
                break
            step *= 0.5
            if step < 1e-30:
                cand = None
                break
        if cand is None:
            log.debug("line search stalled at iteration %d", it)
            break
        prev = (theta, g)
        theta, mse, g = cand, cand_mse, cand_g
        history.append(mse)
        it += 1
        gnorm = pg_norm(theta, g)
    return FitResult(
        profile=_profile(theta, name=problem.init.name),
        final_mse=mse,
        iterations=it,
        converged=gnorm <= problem.tol,
        gradient_norm=gnorm,
        mse_history=history,
    )
