"""Zero-sum combinations rewritten as nonnegative pairings of differences.

Given weights lambda_1..lambda_n summing to zero and points x_1..x_n, the
combination sum_i lambda_i x_i equals a sum of terms c * (x_j - x_k) with
every c >= 0, and the c's add up to the total positive mass of lambda. The
constructive recursion: sort descending, peel the most negative weight, pay
it off greedily from the largest positive weights, recurse on the residual.

This identity is the workhorse behind the hull-diameter formula and the
contraction bound: whenever the weights of a difference of two hull points
are expanded over the vertices, the triangle inequality then caps the norm
by (positive mass) * (max pairwise vertex distance).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ZERO_SUM_RTOL = 1e-12


@dataclass(frozen=True)
class MatchedForm:
    """Decomposition sum_i lambda_i x_i = sum c * (x_j - x_k), all c >= 0."""

    terms: tuple  # tuple of (c, j, k)
    positive_mass: float


def match_decomposition(lam: np.ndarray, points: np.ndarray) -> MatchedForm:
    """Decompose a zero-sum weighted combination into matched difference terms.

    ``points`` only fixes n (the recursion never touches coordinates); it is
    part of the signature because the output terms index into it. Raises
    ValueError if the weights do not sum to zero within ZERO_SUM_RTOL
    relative to the total absolute mass.
    """
    lam = np.asarray(lam, dtype=np.float64)
    if lam.ndim != 1 or lam.shape[0] < 1:
        raise ValueError(f"weights must be a nonempty vector, got shape {lam.shape}")
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[0] != lam.shape[0]:
        raise ValueError(f"{lam.shape[0]} weights vs {pts.shape[0]} points")
    total_abs = float(np.abs(lam).sum())
    drift = float(lam.sum())
    if abs(drift) > ZERO_SUM_RTOL * max(total_abs, 1e-300):
        raise ValueError(
            f"weights must sum to zero (got {drift}, allowed "
            f"{ZERO_SUM_RTOL * total_abs})"
        )
    terms = []
    _match([float(v) for v in lam], list(range(lam.shape[0])), terms)
    mass = float(sum(c for c, _, _ in terms))
    return MatchedForm(tuple(terms), mass)


def _match(values: list, indices: list, terms: list):
    """One level of the peeling recursion. values/indices shrink together."""
    if not values:
        return
    # absorb floating drift into the largest-magnitude entry so the level is
    # exactly zero-sum before peeling
    drift = sum(values)
    if drift != 0.0:
        k = max(range(len(values)), key=lambda m: abs(values[m]))
        values[k] -= drift
    order = sorted(range(len(values)), key=lambda m: -values[m])
    values = [values[m] for m in order]
    indices = [indices[m] for m in order]

    lam = -values[-1]  # most negative entry, made positive
    if lam <= 0.0:
        return  # everything is ~0 (zero-sum with no negative part)
    target = indices[-1]
    prefix = 0.0
    i = 0
    while prefix + values[i] < lam and i < len(values) - 2:
        prefix += values[i]
        i += 1
    # emit full positive weights before i, then the partial payment at i
    for k in range(i):
        c = values[k]
        if c > 0.0:
            terms.append((c, indices[k], target))
    partial = lam - prefix
    if partial > 0.0:
        terms.append((partial, indices[i], target))
    residual_i = (prefix + values[i]) - lam
    rest_values = [max(residual_i, 0.0)] + values[i + 1 : -1]
    rest_indices = [indices[i]] + indices[i + 1 : -1]
    _match(rest_values, rest_indices, terms)


def verify_decomposition(lam: np.ndarray, points: np.ndarray, form: MatchedForm) -> tuple[bool, float]:
    """Check both identities of a matched form; returns (ok, residual norm).

    The vector identity is evaluated relative to the first point, which makes
    it exact for degenerate (all-equal) point sets, and compared against
    1e-10 * (total absolute mass) * (point-set diameter). The mass identity
    compares positive_mass with the sum of nonnegative input weights at 1e-10.
    """
    lam = np.asarray(lam, dtype=np.float64)
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[0] != lam.shape[0]:
        raise ValueError(f"{lam.shape[0]} weights vs {pts.shape[0]} points")
    centered = pts - pts[0]
    lhs = centered.T @ lam
    rhs = np.zeros(pts.shape[1])
    for c, j, k in form.terms:
        rhs += c * (centered[j] - centered[k])
    residual = float(np.linalg.norm(lhs - rhs))

    if pts.shape[0] == 1:
        diam = 0.0
    else:
        from .profile import diameter

        diam = diameter(pts)
    total_abs = float(np.abs(lam).sum())
    vec_ok = residual <= 1e-10 * total_abs * diam
    pos_mass = float(lam[lam >= 0.0].sum())
    mass_ok = abs(form.positive_mass - pos_mass) <= 1e-10
    coeffs_ok = all(c >= 0.0 for c, _, _ in form.terms)
    return (vec_ok and mass_ok and coeffs_ok), residual
