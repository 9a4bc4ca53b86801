"""Smallest eigenpairs, gaps, principal angles and the two-operator lower bound."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

SEED = 0x5EED
DENSE_LIMIT = 4096
NULL_TOL = 1e-10
DEGENERACY_TOL = 1e-9


class ConvergenceError(RuntimeError):
    def __init__(self, msg, best_residual):
        super().__init__(f"{msg} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


class AngleError(ValueError):
    pass


@dataclass
class EigResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    residuals: np.ndarray


def norm1(H) -> float:
    """Induced 1-norm (max column sum)."""
    if sp.issparse(H):
        return float(abs(H).sum(axis=0).max()) if H.nnz else 0.0
    return float(np.abs(H).sum(axis=0).max())


def _residuals(H, vals, vecs):
    return np.linalg.norm(H @ vecs - vecs * vals, axis=0)


def dense_eigs(H, k: int | None = None) -> EigResult:
    A = H.toarray() if sp.issparse(H) else np.asarray(H)
    vals, vecs = np.linalg.eigh(A)
    if k is not None:
        vals, vecs = vals[:k], vecs[:, :k]
    return EigResult(vals, vecs, _residuals(A, vals, vecs))


def _lanczos_lowest(H, locked: np.ndarray, start: np.ndarray, steps: int):
    """One Lanczos run with full reorthogonalisation against the basis and ``locked``."""
    dim = H.shape[0]
    V = np.zeros((dim, steps + 1), dtype=complex)
    alpha = np.zeros(steps)
    beta = np.zeros(steps)

    def orth(v, upto):
        for _ in range(2):
            if locked.size:
                v = v - locked @ (locked.conj().T @ v)
            v = v - V[:, :upto] @ (V[:, :upto].conj().T @ v)
        return v

    v = orth(start, 0)
    V[:, 0] = v / np.linalg.norm(v)
    m = steps
    for j in range(steps):
        w = H @ V[:, j]
        alpha[j] = np.vdot(V[:, j], w).real
        w = orth(w, j + 1)
        b = np.linalg.norm(w)
        if b < 1e-12:
            m = j + 1
            break
        beta[j] = b
        V[:, j + 1] = w / b
    T = np.diag(alpha[:m]) + np.diag(beta[: m - 1], 1) + np.diag(beta[: m - 1], -1)
    theta, S = np.linalg.eigh(T)
    x = V[:, :m] @ S[:, 0]
    x = orth(x, 0)
    return theta[0], x / np.linalg.norm(x)


def lanczos_eigs(H, k: int = 1, tol: float = 1e-8, seed: int = SEED, max_restarts: int = 30) -> EigResult:
    """k smallest eigenpairs by restarted Lanczos with locking.

    Each pair is found in the orthogonal complement of the ones already locked, which
    resolves degenerate levels. Steps per run are capped at ``20 sqrt(dim) + 200``.
    """
    dim = H.shape[0]
    steps = min(dim, int(20 * np.sqrt(dim)) + 200)
    scale = max(1.0, norm1(H))
    rng = np.random.default_rng(seed)
    locked = np.zeros((dim, 0), dtype=complex)
    vals = []
    for _ in range(k):
        x = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        best = np.inf
        for _ in range(max_restarts):
            lam, x = _lanczos_lowest(H, locked, x, min(steps, dim - locked.shape[1]))
            res = np.linalg.norm(H @ x - lam * x)
            best = min(best, res)
            if res <= tol * scale:
                break
        else:
            raise ConvergenceError(f"eigenpair {len(vals)} did not converge", best)
        vals.append(lam)
        locked = np.column_stack([locked, x])
    vals = np.array(vals)
    order = np.argsort(vals, kind="stable")
    vals, vecs = vals[order], locked[:, order]
    return EigResult(vals, vecs, _residuals(H, vals, vecs))


def smallest_eigs(H, k: int = 1, tol: float = 1e-8, dense_limit: int = DENSE_LIMIT) -> EigResult:
    """Dense diagonalisation up to ``dense_limit``, Lanczos beyond."""
    dim = H.shape[0]
    if k > dim:
        raise ValueError(f"k={k} exceeds dimension {dim}")
    if dim <= dense_limit:
        return dense_eigs(H, k)
    return lanczos_eigs(sp.csr_matrix(H), k, tol)


def levels(values: np.ndarray, scale: float = 1.0, tol: float = DEGENERACY_TOL) -> list[float]:
    """Collapse sorted eigenvalues closer than ``tol * max(1, scale)`` into one level."""
    out: list[float] = []
    for v in np.sort(values):
        if not out or v - out[-1] > tol * max(1.0, scale):
            out.append(float(v))
    return out


def spectral_gap(H, k_max: int = 64) -> tuple[float, float]:
    """Ground energy and the distance to the next distinct level."""
    dim = H.shape[0]
    if dim < 2:
        raise ValueError("gap needs dimension >= 2")
    scale = norm1(H)
    k = min(dim, 8)
    while True:
        res = smallest_eigs(H, k)
        lv = levels(res.eigenvalues, scale)
        if len(lv) >= 2:
            return lv[0], lv[1] - lv[0]
        if k >= min(dim, k_max):
            raise ValueError("no second level within the requested eigenvalues")
        k = min(dim, 2 * k)


def null_space(A, tol: float = NULL_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal null basis and all eigenvalues of a Hermitian PSD matrix."""
    A = A.toarray() if sp.issparse(A) else np.asarray(A)
    vals, vecs = np.linalg.eigh(A)
    return vecs[:, vals < tol], vals


def _check_orthonormal(Q, name):
    if Q.shape[1] and np.abs(Q.conj().T @ Q - np.eye(Q.shape[1])).max() > 1e-10:
        raise AngleError(f"{name} is not orthonormal")


def principal_angle(A: np.ndarray, B: np.ndarray) -> float:
    """Smallest principal angle between the column spans of ``A`` and ``B``.

    ``cos(theta)`` is the largest singular value of ``A^H B``; spans that share a
    vector are rejected.
    """
    _check_orthonormal(A, "first basis")
    _check_orthonormal(B, "second basis")
    if A.shape[1] == 0 or B.shape[1] == 0:
        return np.pi / 2
    smax = np.linalg.svd(A.conj().T @ B, compute_uv=False)[0]
    if smax >= 1 - 1e-10:
        raise AngleError(f"subspaces intersect (largest cosine {smax:.12f})")
    return float(np.arccos(min(1.0, smax)))


@dataclass
class KitaevCertificate:
    bound: float
    v: float
    theta: float
    min_eig: float


def kitaev_bound(A1, A2) -> KitaevCertificate:
    """Lower bound ``v * 2 sin^2(theta/2)`` on ``A1 + A2`` for PSD ``A1``, ``A2``.

    ``v`` is the smallest nonzero eigenvalue of either operator and ``theta`` the angle
    between their null spaces. The bound is checked against the exact minimum.
    """
    A1 = A1.toarray() if sp.issparse(A1) else np.asarray(A1)
    A2 = A2.toarray() if sp.issparse(A2) else np.asarray(A2)
    N1, e1 = null_space(A1)
    N2, e2 = null_space(A2)
    if min(e1[0], e2[0]) < -NULL_TOL:
        raise ValueError("operators must be positive semidefinite")
    nonzero = np.concatenate([e1[e1 >= NULL_TOL], e2[e2 >= NULL_TOL]])
    v = float(nonzero.min()) if nonzero.size else 0.0
    theta = principal_angle(N1, N2)
    bound = v * 2 * np.sin(theta / 2) ** 2
    min_eig = float(np.linalg.eigvalsh(A1 + A2)[0])
    if min_eig < bound - 1e-10:
        raise AssertionError(f"lower bound {bound} exceeds the minimum eigenvalue {min_eig}")
    return KitaevCertificate(bound, v, theta, min_eig)


def component_minima(H, floor=None, skip_above: float | None = None, dense_limit: int = DENSE_LIMIT, chunk: int = 1 << 22):
    """Smallest eigenvalue of every connected block of a sparse Hermitian matrix.

    Blocks of equal size are diagonalised together. ``floor`` is a per-state diagonal
    with ``H - diag(floor)`` PSD; a block whose smallest floor entry reaches
    ``skip_above`` is not diagonalised and reports that entry as a lower bound.
    Returns ``(labels, minima, exact)`` where ``exact`` marks diagonalised blocks.
    """
    H = sp.csr_matrix(H)
    pattern = sp.csr_matrix((np.ones(H.nnz), H.indices, H.indptr), shape=H.shape)
    ncomp, labels = csgraph.connected_components(pattern, directed=False)
    sizes = np.bincount(labels, minlength=ncomp)
    order = np.argsort(labels, kind="stable")
    starts = np.concatenate([[0], np.cumsum(sizes)])
    local = np.empty(H.shape[0], dtype=np.int64)
    local[order] = np.arange(H.shape[0]) - starts[labels[order]]
    diag = H.diagonal().real if floor is None else np.asarray(floor, dtype=float)
    if skip_above is not None and floor is None:
        raise ValueError("skipping blocks needs an explicit floor")
    dmin = np.full(ncomp, np.inf)
    np.minimum.at(dmin, labels, diag)
    minima = np.where(sizes == 1, np.bincount(labels, H.diagonal().real, ncomp), dmin)
    todo = np.ones(ncomp, dtype=bool) if skip_above is None else dmin < skip_above
    todo &= sizes > 1
    exact = (sizes == 1) | todo
    coo = H.tocoo()
    comp_of = labels[coo.row]
    for size in np.unique(sizes[todo]):
        comps = np.flatnonzero(todo & (sizes == size))
        if size > dense_limit:
            for k in comps:
                idx = order[starts[k] : starts[k + 1]]
                minima[k] = smallest_eigs(H[idx][:, idx], 1).eigenvalues[0]
            continue
        per = max(1, chunk // (size * size))
        slot = np.full(ncomp, -1, dtype=np.int64)
        for a in range(0, len(comps), per):
            part = comps[a : a + per]
            slot[part] = np.arange(len(part))
            sel = slot[comp_of] >= 0
            batch = np.zeros((len(part), size, size), dtype=complex)
            batch[slot[comp_of[sel]], local[coo.row[sel]], local[coo.col[sel]]] = coo.data[sel]
            minima[part] = np.linalg.eigvalsh(batch)[:, 0]
            slot[part] = -1
    return labels, minima, exact


def block_spectrum(H, k: int) -> EigResult:
    """The ``k`` smallest eigenvalues of a block-diagonal sparse Hermitian matrix.

    Works block by block, so it copes with the massive degeneracy of the full shape
    space where a single Krylov run would not. Eigenvectors are not kept.
    """
    H = sp.csr_matrix(H)
    pattern = sp.csr_matrix((np.ones(H.nnz), H.indices, H.indptr), shape=H.shape)
    ncomp, labels = csgraph.connected_components(pattern, directed=False)
    order = np.argsort(labels, kind="stable")
    starts = np.concatenate([[0], np.cumsum(np.bincount(labels, minlength=ncomp))])
    vals, res = [], []
    for c in range(ncomp):
        idx = order[starts[c] : starts[c + 1]]
        r = smallest_eigs(H[idx][:, idx], min(k, len(idx)))
        vals.append(r.eigenvalues)
        res.append(r.residuals)
    vals, res = np.concatenate(vals), np.concatenate(res)
    pick = np.argsort(vals, kind="stable")[:k]
    return EigResult(vals[pick], None, res[pick])


def spectrum_csv(result: EigResult) -> str:
    lines = ["index,eigenvalue,residual"]
    lines += [f"{i},{v:.17g},{r:.17g}" for i, (v, r) in enumerate(zip(result.eigenvalues, result.residuals))]
    return "\n".join(lines) + "\n"
