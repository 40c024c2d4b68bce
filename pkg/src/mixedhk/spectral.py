"""Graph Laplacian machinery for the update operator I - B(t).

Provides the Laplacian and generalized-Laplacian predicate, a dense cyclic
Jacobi eigensolver (desk scale, n <= 64), exact brute-force Cheeger constants
(n <= 16), the factorization of the update operator through the Laplacian,
and the numerically checked eigenvalue chain that powers the displacement
lower bound: for a connected profile with all stubbornness below one,

    lambda_2((I-B)'(I-B)) >= ((1 - max alpha) / n)^2 * lambda_2(L)^2

and lambda_2(L) is sandwiched by the Cheeger constant, 2 i(G) >= lambda_2 >=
i(G)^2 / (2 max_degree), which for connected graphs keeps it above 2/n^3.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import OpinionState, averaging_matrix
from .errors import NumericalFailure, SizeLimitError
from .profile import Profile, build_profile

CHEEGER_MAX_N = 16
EIGH_MAX_N = 64


def laplacian(profile: Profile) -> np.ndarray:
    """Combinatorial Laplacian: degrees on the diagonal, -1 on edges."""
    L = np.zeros((profile.n, profile.n))
    for i, j in profile.edges:
        L[i, j] = L[j, i] = -1.0
        L[i, i] += 1.0
        L[j, j] += 1.0
    return L


def is_generalized_laplacian(M: np.ndarray, profile: Profile) -> bool:
    """True iff M is symmetric with off-diagonal entries exactly 0 off edges
    and strictly negative on edges. The diagonal is unconstrained."""
    M = np.asarray(M, dtype=np.float64)
    if M.shape != (profile.n, profile.n):
        raise ValueError(f"matrix shape {M.shape} does not match n={profile.n}")
    if float(np.abs(M - M.T).max(initial=0.0)) > 1e-12:
        raise ValueError("matrix must be symmetric within 1e-12")
    edges = profile.edges
    for i in range(profile.n):
        for j in range(i + 1, profile.n):
            if (i, j) in edges:
                if not (M[i, j] < 0.0):
                    return False
            elif M[i, j] != 0.0:
                return False
    return True


def eigh(M: np.ndarray, *, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Full eigensystem of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues ascending, eigenvector columns, orthonormal). Signs
    are canonicalized so each eigenvector's largest-magnitude entry is
    positive, which makes positivity assertions deterministic. Intended for
    desk-scale matrices (n <= 64); raises NumericalFailure if the
    off-diagonal mass does not vanish within ``max_sweeps`` sweeps.
    """
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"need a square matrix, got shape {A.shape}")
    if max_sweeps < 1:
        raise ValueError(f"max_sweeps must be >= 1, got {max_sweeps}")
    n = A.shape[0]
    if n > EIGH_MAX_N:
        raise SizeLimitError(f"dense Jacobi solver capped at n <= {EIGH_MAX_N}, got {n}")
    scale = float(np.abs(A).max(initial=0.0))
    if float(np.abs(A - A.T).max(initial=0.0)) > 1e-10 * max(scale, 1.0):
        raise ValueError("matrix must be symmetric within 1e-10")
    A = (A + A.T) / 2.0
    V = np.eye(n)
    if n == 1:
        return np.array([A[0, 0]]), V
    fro = float(np.sqrt((A * A).sum()))
    if fro == 0.0:
        return np.zeros(n), V

    for _ in range(max_sweeps):
        off = A - np.diag(np.diag(A))
        off_norm = float(np.sqrt((off * off).sum()))
        if off_norm <= 1e-14 * fro:
            break
        thresh = off_norm / (n * n)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= thresh * 1e-4:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0
                vec_p = V[:, p].copy()
                vec_q = V[:, q].copy()
                V[:, p] = c * vec_p - s * vec_q
                V[:, q] = s * vec_p + c * vec_q
    else:
        raise NumericalFailure(
            f"Jacobi sweep limit {max_sweeps} reached with off-diagonal norm {off_norm}",
            best=np.sort(np.diag(A)),
            gap=off_norm,
        )

    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    w = w[order]
    V = V[:, order]
    for k in range(n):
        col = V[:, k]
        if col[int(np.argmax(np.abs(col)))] < 0.0:
            V[:, k] = -col
    return w, V


def eigh_batch(mats: np.ndarray, *, sweeps: int = 14) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi over a stack of small symmetric matrices at once.

    Same rotation schedule and formulas as :func:`eigh`, vectorized across
    the batch axis so exhaustive graph sweeps stay cheap. Returns
    (eigenvalues (B, n) ascending, eigenvector columns (B, n, n)). Runs a
    fixed number of sweeps (quadratic convergence makes 14 ample for
    n <= 16) and raises NumericalFailure if any matrix still has
    off-diagonal mass afterwards.
    """
    A = np.array(mats, dtype=np.float64)
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise ValueError(f"need a (B, n, n) stack, got shape {A.shape}")
    B, n, _ = A.shape
    if n > CHEEGER_MAX_N:
        raise SizeLimitError(f"batched Jacobi intended for n <= {CHEEGER_MAX_N}, got {n}")
    scale = np.abs(A).max(axis=(1, 2))
    if float(np.abs(A - A.transpose(0, 2, 1)).max(initial=0.0)) > 1e-10 * max(scale.max(initial=0.0), 1.0):
        raise ValueError("matrices must be symmetric within 1e-10")
    A = (A + A.transpose(0, 2, 1)) / 2.0
    V = np.broadcast_to(np.eye(n), (B, n, n)).copy()
    if n == 1:
        return A[:, 0, :].copy(), V
    lanes = np.arange(B)
    for _ in range(sweeps):
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[:, p, q]
                rotate = np.abs(apq) > 1e-300
                if not rotate.any():
                    continue
                theta = np.zeros(B)
                np.divide(A[:, q, q] - A[:, p, p], 2.0 * apq, out=theta, where=rotate)
                t = np.sign(theta) + (theta == 0.0)  # sign with 0 -> +1
                with np.errstate(over="ignore"):
                    t /= np.abs(theta) + np.sqrt(1.0 + theta * theta)
                big = np.abs(theta) > 1e150  # sqrt would overflow; use t ~ 1/(2 theta)
                if big.any():
                    with np.errstate(divide="ignore"):
                        t = np.where(big, 0.5 / theta, t)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                c = np.where(rotate, c, 1.0)
                s = np.where(rotate, s, 0.0)
                col_p = A[:, :, p].copy()
                col_q = A[:, :, q].copy()
                A[:, :, p] = c[:, None] * col_p - s[:, None] * col_q
                A[:, :, q] = s[:, None] * col_p + c[:, None] * col_q
                row_p = A[:, p, :].copy()
                row_q = A[:, q, :].copy()
                A[:, p, :] = c[:, None] * row_p - s[:, None] * row_q
                A[:, q, :] = s[:, None] * row_p + c[:, None] * row_q
                A[:, p, q] = np.where(rotate, 0.0, A[:, p, q])
                A[:, q, p] = A[:, p, q]
                vec_p = V[:, :, p].copy()
                vec_q = V[:, :, q].copy()
                V[:, :, p] = c[:, None] * vec_p - s[:, None] * vec_q
                V[:, :, q] = s[:, None] * vec_p + c[:, None] * vec_q
    off = A.copy()
    off[:, np.arange(n), np.arange(n)] = 0.0
    worst = np.abs(off).max(axis=(1, 2))
    bad = worst > 1e-10 * np.maximum(scale, 1e-300)
    if bad.any():
        raise NumericalFailure(
            f"batched Jacobi left {int(bad.sum())} matrices unconverged "
            f"(worst off-diagonal {float(worst.max())})",
            best=None, gap=float(worst.max()),
        )
    w = A[:, np.arange(n), np.arange(n)]
    order = np.argsort(w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    # canonical signs: largest-magnitude entry of each column positive
    idx = np.argmax(np.abs(V), axis=1)
    signs = np.sign(V[lanes[:, None], idx, np.arange(n)[None, :]])
    signs[signs == 0.0] = 1.0
    V = V * signs[:, None, :]
    return w, V


def _popcounts(masks: np.ndarray, n: int) -> np.ndarray:
    pop = np.zeros_like(masks)
    for b in range(n):
        pop += (masks >> b) & 1
    return pop


def cheeger_constant(profile: Profile) -> float:
    """Exact isoperimetric constant by exhaustive subset enumeration.

    i(G) = min |boundary(S)| / |S| over nonempty S with |S| <= n/2. Capped at
    n <= 16 (2^16 subsets); beyond that a SizeLimitError tells callers to
    skip the check. For n = 1 there is no admissible subset and the minimum
    over the empty family is +inf.
    """
    n = profile.n
    if n > CHEEGER_MAX_N:
        raise SizeLimitError(
            f"exhaustive Cheeger search capped at n <= {CHEEGER_MAX_N} (got {n}); "
            "skip this check for larger graphs"
        )
    if n == 1:
        return float("inf")
    masks = np.arange(1, 1 << n, dtype=np.uint32)
    pop = _popcounts(masks, n)
    boundary = np.zeros(masks.shape[0], dtype=np.uint32)
    for i, j in profile.edges:
        boundary += ((masks >> i) & 1) ^ ((masks >> j) & 1)
    valid = 2 * pop <= n
    return float((boundary[valid] / pop[valid]).min())


@dataclass
class SpectralReport:
    """Laplacian eigensystem plus Cheeger-sandwich verdicts for one profile."""

    laplacian: np.ndarray
    eigenvalues: np.ndarray
    lambda2: float | None
    cheeger: float
    max_degree: int
    verdicts: dict
    notes: list = field(default_factory=list)

    def as_json(self) -> dict:
        return {
            "n": int(self.laplacian.shape[0]),
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "lambda2": None if self.lambda2 is None else float(self.lambda2),
            "cheeger": self.cheeger,
            "max_degree": self.max_degree,
            "verdicts": dict(self.verdicts),
            "notes": list(self.notes),
        }


def check_cheeger(profile: Profile) -> SpectralReport:
    """Eigen-decompose the Laplacian and verify the Cheeger sandwich.

    Verdicts (each with 1e-9 slack): ``cheeger_upper`` 2 i(G) >= lambda_2,
    ``cheeger_lower`` lambda_2 >= i(G)^2 / (2 max_degree), and
    ``connectivity_gap`` lambda_2 > 2/n^3 for connected graphs (vacuous for
    disconnected ones, noted for n in {1, 2} where the chain is boundary).
    """
    L = laplacian(profile)
    w, _ = eigh(L)
    n = profile.n
    notes = []
    i_g = cheeger_constant(profile)
    degs = [profile.degree(i) for i in range(n)]
    max_deg = max(degs) if degs else 0
    if n == 1:
        verdicts = {"cheeger_upper": True, "cheeger_lower": True, "connectivity_gap": True}
        notes.append("n=1: no admissible cut subset; sandwich vacuous")
        return SpectralReport(L, w, None, i_g, max_deg, verdicts, notes)
    lam2 = float(w[1])
    connected = profile.is_connected()
    upper = 2.0 * i_g >= lam2 - 1e-9
    lower = lam2 >= (i_g * i_g) / (2.0 * max_deg) - 1e-9 if max_deg > 0 else lam2 >= -1e-9
    if connected:
        gap = lam2 > 2.0 / n**3 - 1e-9
        if n == 2:
            notes.append("n=2: i(G) = 2/n exactly; gap bound asserted with slack only")
    else:
        gap = True
        notes.append("disconnected profile: connectivity gap not applicable")
    verdicts = {"cheeger_upper": bool(upper), "cheeger_lower": bool(lower),
                "connectivity_gap": bool(gap)}
    return SpectralReport(L, w, lam2, i_g, max_deg, verdicts, notes)


@dataclass
class UpdateFactorization:
    """I - B(t) split into stubbornness, degree, and Laplacian factors."""

    I_minus_B: np.ndarray
    stubborn_factor: np.ndarray  # diagonal entries 1 - alpha_i
    degree_factor: np.ndarray  # diagonal entries 1 / (1 + degree_i)
    laplacian: np.ndarray
    residual: float


def _averaging_from_profile(profile: Profile) -> np.ndarray:
    adj = profile.adjacency() + np.eye(profile.n)
    return adj / adj.sum(axis=1)[:, None]


def update_factorization(source, alpha: np.ndarray) -> UpdateFactorization:
    """Verify I - B = (I - diag(alpha)) (I + D)^(-1) L for one step operator.

    ``source`` may be an OpinionState (profile is built from it) or a Profile
    (graph-level check; B is then assembled from the profile's averaging
    matrix). Requires every alpha_i < 1 so the stubbornness factor is
    invertible. The identity is exact algebra; the reported residual only
    measures rounding (<= 1e-12 on any desk-scale input).
    """
    if isinstance(source, OpinionState):
        profile = build_profile(source)
        A = averaging_matrix(source)
    else:
        profile = source
        A = _averaging_from_profile(profile)
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (profile.n,):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({profile.n},)")
    if np.any(alpha >= 1.0):
        raise ValueError("update_factorization requires every alpha_i < 1 "
                         "(stubbornness factor must be invertible)")
    n = profile.n
    stub = np.diag(1.0 - alpha)
    degs = np.array([profile.degree(i) for i in range(n)], dtype=np.float64)
    deg_inv = np.diag(1.0 / (1.0 + degs))
    L = laplacian(profile)
    B = np.diag(alpha) + stub @ A
    I_minus_B = np.eye(n) - B
    product = stub @ deg_inv @ L
    residual = float(np.abs(I_minus_B - product).max())
    return UpdateFactorization(I_minus_B, stub, deg_inv, L, residual)


def lambda2_chain_check(source, alpha: np.ndarray, *, samples: int = 1000,
                        seed: int = 0) -> dict:
    """Numerically verify the eigenvalue chain behind the displacement bound.

    For a connected profile with all alpha_i < 1 and Q = I - B:
      zero_simple       0 is a simple eigenvalue of Q'Q with eigenvector 1.
      chain_bound       lambda_2(Q'Q) >= ((1 - max alpha)/n)^2 lambda_2(L)^2.
      perron_frobenius  the Laplacian's smallest eigenvalue is simple and its
                        eigenvector is all-positive after sign fixing.
      variational       x'Q'Qx >= lambda_2(Q'Q) - 1e-9 for ``samples`` random
                        unit vectors orthogonal to 1 (seeded, reproducible).

    Raises ValueError for disconnected profiles (0 would not be simple) and
    SizeLimitError beyond n = 16.
    """
    fact = update_factorization(source, alpha)
    profile = source if isinstance(source, Profile) else build_profile(source)
    n = profile.n
    if n < 2:
        raise ValueError("eigenvalue chain needs at least two agents")
    if n > CHEEGER_MAX_N:
        raise SizeLimitError(f"chain check capped at n <= {CHEEGER_MAX_N}, got {n}")
    if not profile.is_connected():
        raise ValueError("profile must be connected (eigenvalue 0 of Q'Q is "
                         "simple only for connected profiles)")
    alpha = np.asarray(alpha, dtype=np.float64)
    Q = fact.I_minus_B
    QtQ = Q.T @ Q
    w_qtq, vecs_qtq = eigh(QtQ)
    scale = max(float(np.abs(QtQ).max()), 1.0)
    tol = 1e-9 * scale

    near_zero = int(np.sum(np.abs(w_qtq) <= tol))
    ones = np.ones(n) / np.sqrt(n)
    zero_vec_ok = float(np.linalg.norm(QtQ @ ones)) <= tol
    zero_simple = near_zero == 1 and zero_vec_ok

    w_lap, vecs_lap = eigh(fact.laplacian)
    lam2_qtq = float(w_qtq[1])
    lam2_lap = float(w_lap[1])
    floor = ((1.0 - float(alpha.max())) / n) ** 2 * lam2_lap**2
    chain_bound = lam2_qtq >= floor - tol

    lap_simple = (w_lap[1] - w_lap[0]) > tol
    smallest_vec = vecs_lap[:, 0]
    perron = lap_simple and bool(np.all(smallest_vec > 0.0))

    rng = np.random.default_rng(seed)
    variational = True
    worst = float("inf")
    for _ in range(samples):
        x = rng.standard_normal(n)
        x -= x.mean()
        nrm = np.linalg.norm(x)
        if nrm < 1e-12:
            continue
        x /= nrm
        val = float(x @ QtQ @ x)
        worst = min(worst, val)
        if val < lam2_qtq - tol:
            variational = False
    return {
        "zero_simple": bool(zero_simple),
        "chain_bound": bool(chain_bound),
        "perron_frobenius": bool(perron),
        "variational": bool(variational),
        "lambda2_qtq": lam2_qtq,
        "lambda2_laplacian": lam2_lap,
        "chain_floor": floor,
        "variational_min_sampled": worst,
        "factorization_residual": fact.residual,
    }
