"""One-point gradient estimation from payoff-only feedback.

The estimator plays a perturbed action x_hat = x + d * w with
w = u - (x - p)/r, where u is uniform on the unit sphere and B_r(p) is the
set's safety ball, then reconstructs a gradient surrogate
(dim / d_origin) * reward * u_origin from the reward once it is delivered,
scaled by the radius that was in force when the action was *played*, not the
current one.  For one-dimensional actions the sphere degenerates to {-1, +1}.

All functions are pure in their rng argument, so Monte Carlo work can be
partitioned across streams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from goldsim.errors import InfeasibleRadiusError
from goldsim.games import GameSpec, Profile
from goldsim.geometry import ActionSet
from goldsim.pool import FeedbackItem


@dataclass(frozen=True)
class Perturbation:
    """Sampling direction, its feasibility-adjusted form, and the radius used.

    ``skew`` is (pivot - safety_center)/safety_radius, kept so that
    ``adjusted == direction - skew`` is checkable from the record alone.
    """

    direction: np.ndarray
    adjusted: np.ndarray
    radius: float
    skew: np.ndarray


def sample_direction(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the unit sphere (normalized standard Gaussian).

    For dim = 1 this is a fair +/-1 coin.  The measure-zero all-zeros draw is
    resampled.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    while True:
        g = rng.standard_normal(dim)
        norm = float(np.linalg.norm(g))
        if norm > 0.0:
            return g / norm


def sample_directions(dim: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Block of `size` unit vectors, shape (size, dim)."""
    g = rng.standard_normal((size, dim))
    norms = np.linalg.norm(g, axis=1)
    while True:
        bad = norms == 0.0
        if not bad.any():
            break
        g[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(g, axis=1)
    return g / norms[:, None]


def perturb(
    pivot: np.ndarray, action_set: ActionSet, radius: float, direction: np.ndarray
) -> tuple[np.ndarray, Perturbation]:
    """Feasibility-adjusted perturbed action around the pivot.

    Returns (played, perturbation) with
    played = pivot + radius * (direction - (pivot - p)/r); the convex
    combination identity played = (1 - radius/r)*pivot + (radius/r)*(p + r*u)
    keeps the action inside the set whenever radius <= r.
    """
    pivot = np.asarray(pivot, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    if radius <= 0.0:
        raise InfeasibleRadiusError(radius, action_set.safety_radius)
    if radius > action_set.safety_radius:
        raise InfeasibleRadiusError(radius, action_set.safety_radius)
    skew = (pivot - action_set.safety_center) / action_set.safety_radius
    adjusted = direction - skew
    played = pivot + radius * adjusted
    return played, Perturbation(
        direction=direction, adjusted=adjusted, radius=radius, skew=skew
    )


def reconstruct_gradient(item: FeedbackItem | None, dim: int) -> np.ndarray:
    """Gradient surrogate (dim / radius) * reward * direction.

    ``item`` is the dequeued feedback record; None (empty pool) maps to the
    zero vector, matching the no-update convention.
    """
    if item is None:
        return np.zeros(dim)
    return (dim / item.radius) * item.reward * item.direction


def _shifted_pivots(
    profile: Profile, sets: tuple[ActionSet, ...], radius: float
) -> list[np.ndarray]:
    """Deterministic part of each player's perturbed action (u = 0)."""
    out = []
    for x, s in zip(profile, sets):
        x = np.asarray(x, dtype=np.float64)
        out.append(x - radius * (x - s.safety_center) / s.safety_radius)
    return out


def estimate_bias(
    game: GameSpec,
    player: int,
    profile: Profile,
    radius: float,
    samples: int,
    rng: np.random.Generator | None = None,
    method: str = "mc",
) -> float:
    """Systematic error of the one-point estimator at a frozen profile.

    Every player is perturbed independently, exactly as during play, and the
    focal player's reconstructed gradient is averaged.  Returns
    ||mean(v_hat) - v_player(profile)||.

    method="mc" draws ``samples`` independent joint perturbations.
    method="exact" (one-dimensional players only) enumerates the 2^N sign
    patterns of the direction coins and computes the expectation exactly,
    which removes all Monte Carlo noise from the measurement.
    """
    profile = tuple(np.atleast_1d(np.asarray(x, dtype=np.float64)) for x in profile)
    sets = game.action_sets
    for j, (x, s) in enumerate(zip(profile, sets)):
        if radius > s.safety_radius:
            raise InfeasibleRadiusError(radius, s.safety_radius)
        if not s.contains(x):
            raise ValueError(f"player {j}: profile point {x} is infeasible")
    dims = game.dims
    truth = game.gradient(player, profile)
    shifted = _shifted_pivots(profile, sets, radius)

    if method == "exact":
        if any(d != 1 for d in dims):
            raise ValueError("exact bias enumeration requires one-dimensional players")
        n = game.players
        if n > 20:
            raise ValueError("exact bias enumeration is limited to 20 players")
        signs = np.array(
            [[1.0 if (k >> j) & 1 else -1.0 for j in range(n)] for k in range(2**n)]
        )
        mats = [shifted[j][0] + radius * signs[:, j : j + 1] for j in range(n)]
        pay = game.eval_payoff_batch(player, mats)
        vhat = (1.0 / radius) * pay * signs[:, player]
        return float(abs(vhat.mean() - truth[0]))

    if method != "mc":
        raise ValueError(f"unknown bias estimation method {method!r}")
    if rng is None:
        raise ValueError("Monte Carlo bias estimation requires an rng")
    mats = []
    dirs_focal = None
    for j in range(game.players):
        u = sample_directions(dims[j], rng, samples)
        if j == player:
            dirs_focal = u
        mats.append(shifted[j][None, :] + radius * u)
    pay = game.eval_payoff_batch(player, mats)
    vhat = (dims[player] / radius) * pay[:, None] * dirs_focal
    return float(np.linalg.norm(vhat.mean(axis=0) - truth))


def estimator_mean_mc(
    game: GameSpec,
    player: int,
    profile: Profile,
    radius: float,
    samples: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo mean of the estimator and its componentwise standard error."""
    profile = tuple(np.atleast_1d(np.asarray(x, dtype=np.float64)) for x in profile)
    dims = game.dims
    shifted = _shifted_pivots(profile, game.action_sets, radius)
    mats = []
    dirs_focal = None
    for j in range(game.players):
        u = sample_directions(dims[j], rng, samples)
        if j == player:
            dirs_focal = u
        mats.append(shifted[j][None, :] + radius * u)
    pay = game.eval_payoff_batch(player, mats)
    vhat = (dims[player] / radius) * pay[:, None] * dirs_focal
    return vhat.mean(axis=0), vhat.std(axis=0, ddof=1) / np.sqrt(samples)
