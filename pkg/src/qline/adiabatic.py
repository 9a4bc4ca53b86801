"""Adiabatic evolution inside the legal sector.

The legal sector is spanned by ``|gamma_x(t)>`` over inputs ``x`` and times ``t``; both
ends of the interpolation keep each input's span invariant, so the evolution is carried
out block by block in those coordinates and mapped back at the end.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import spectral
from .circuit import CanonicalCircuit
from .hamiltonian import Basis, build_h0_adiabatic, build_hprop, history_basis

MAX_STEP = 0.05
NORM_TOL = 1e-8
UNRELIABLE_WEIGHT = 1e-6


class NormDriftError(RuntimeError):
    pass


class DecodeError(RuntimeError):
    pass


@dataclass(frozen=True)
class Schedule:
    """Total time ``T`` and the map from normalised time to ``s``.

    ``s_grid`` gives ``s`` at equally spaced times in ``[0, T]`` and is linearly
    interpolated; the default is ``s = t / T``.
    """

    T: float
    s_grid: tuple[float, ...] = (0.0, 1.0)

    def __post_init__(self):
        g = np.asarray(self.s_grid, dtype=float)
        if self.T < 0:
            raise ValueError("T must be non-negative")
        if len(g) < 2 or g[0] != 0 or g[-1] != 1 or np.any(np.diff(g) < 0):
            raise ValueError("s_grid must rise monotonically from 0 to 1")

    def s(self, t: float) -> float:
        if self.T == 0:
            return 1.0
        g = np.asarray(self.s_grid)
        return float(np.interp(t / self.T, np.linspace(0, 1, len(g)), g))


class LegalSector:
    """Legal-sector basis, the two endpoint operators, and history coordinates."""

    def __init__(self, c: CanonicalCircuit):
        self.c = c
        self.basis = Basis.legal(c.n, c.R)
        self.K = len(self.basis) - 1
        self.H0 = build_h0_adiabatic(self.basis).toarray()
        self.H1 = build_hprop(c, self.basis).toarray()
        w = self.basis.shapes[0].data_width
        self.inputs = 2**w
        # columns grouped by input: V[:, x*(K+1) + t] = |gamma_x(t)>
        self.V = np.hstack([history_basis(c, self.basis, x) for x in range(self.inputs)])
        self.norm = max(spectral.norm1(self.H0), spectral.norm1(self.H1))

    @property
    def dim(self) -> int:
        return self.basis.dim

    def block(self, x: int) -> slice:
        return slice(x * (self.K + 1), (x + 1) * (self.K + 1))

    def restricted(self, x: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """``(H0, H1)`` in the basis ``|gamma_x(t)>``."""
        v = self.V[:, self.block(x)]
        return v.conj().T @ self.H0 @ v, v.conj().T @ self.H1 @ v

    def initial_state(self, x: int = 0) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.basis.offsets[0] + x] = 1
        return psi

    def ground_projector(self) -> np.ndarray:
        null, _ = spectral.null_space(self.H1)
        return null @ null.conj().T


def _rk4(M0: np.ndarray, M1: np.ndarray, y: np.ndarray, sched: Schedule, steps: int) -> np.ndarray:
    dt = sched.T / steps
    # s at every stage time: t_k, t_k + dt/2, t_k + dt
    g = np.asarray(sched.s_grid, dtype=float)
    half = np.interp(np.arange(2 * steps + 1) / (2 * steps), np.linspace(0, 1, len(g)), g)
    a0 = -1j * M0
    da = -1j * (M1 - M0)
    h2, h6 = dt / 2, dt / 6
    A_next = a0 + half[0] * da
    for k in range(steps):
        A1 = A_next
        A2 = a0 + half[2 * k + 1] * da
        A_next = a0 + half[2 * k + 2] * da
        k1 = A1 @ y
        k2 = A2 @ (y + h2 * k1)
        k3 = A2 @ (y + h2 * k2)
        k4 = A_next @ (y + dt * k3)
        y = y + h6 * (k1 + 2 * (k2 + k3) + k4)
    return y


def step_count_for(T: float, norm: float) -> int:
    return max(1, int(np.ceil(T * norm / MAX_STEP)))


def evolve(sector: LegalSector, sched: Schedule, initial: np.ndarray | None = None) -> np.ndarray:
    """Integrate ``i dpsi/dt = H(s(t)) psi`` with classical RK4, ``||H|| dt <= 0.05``."""
    psi = sector.initial_state() if initial is None else np.asarray(initial, dtype=complex)
    if sched.T == 0:
        return psi.copy()
    n0 = np.linalg.norm(psi)
    y = sector.V.conj().T @ psi
    if np.linalg.norm(sector.V @ y - psi) > 1e-10 * max(1.0, n0):
        raise ValueError("initial state is not in the legal sector")
    steps = step_count_for(sched.T, sector.norm)
    out = np.zeros_like(y)
    for x in range(sector.inputs):
        b = sector.block(x)
        if not np.any(y[b]):
            continue
        M0, M1 = sector.restricted(x)
        out[b] = _rk4(M0, M1, y[b], sched, steps)
    psi_T = sector.V @ out
    drift = abs(np.linalg.norm(psi_T) - n0)
    if drift > NORM_TOL:
        raise NormDriftError(f"norm drifted by {drift:.3e} over {steps} steps at T={sched.T}")
    return psi_T


def ground_fidelity(sector: LegalSector, psi: np.ndarray) -> float:
    """Weight of ``psi`` in the null space of ``H1`` on the legal sector."""
    P = sector.ground_projector()
    return float(np.real(np.vdot(psi, P @ psi)) / np.real(np.vdot(psi, psi)))


# -- gaps --------------------------------------------------------------------------------


def gap_at(sector: LegalSector, s: float, x: int = 0) -> float:
    M0, M1 = sector.restricted(x)
    ev = np.linalg.eigvalsh((1 - s) * M0 + s * M1)
    lv = spectral.levels(ev, spectral.norm1(M1))
    return lv[1] - lv[0]


@dataclass
class GapScan:
    g_min: float
    s_star: float
    coarse_s_star: float
    bound: float
    grid: np.ndarray
    gaps: np.ndarray

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "gap"])
        for s, g in zip(self.grid, self.gaps):
            w.writerow([f"{s:.17g}", f"{g:.17g}"])
        return buf.getvalue()


def min_gap_scan(sector: LegalSector, grid=None, refine: int = 101) -> GapScan:
    """Minimum gap over ``grid`` (default 101 points), then refined between neighbours."""
    grid = np.linspace(0, 1, 101) if grid is None else np.asarray(grid, dtype=float)
    gaps = np.array([gap_at(sector, s) for s in grid])
    i = int(np.argmin(gaps))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    fine = np.linspace(lo, hi, refine)
    fgaps = np.array([gap_at(sector, s) for s in fine])
    j = int(np.argmin(fgaps))
    g, s_star = (fgaps[j], fine[j]) if fgaps[j] < gaps[i] else (gaps[i], grid[i])
    return GapScan(float(g), float(s_star), float(grid[i]), 1 / (2 * (sector.K + 1) ** 2), grid, gaps)


# -- decoding ------------------------------------------------------------------------------


@dataclass
class Decoded:
    final_weight: float
    fidelity: float
    distribution: dict[str, float]


def decode_output(sector: LegalSector, psi: np.ndarray) -> Decoded:
    """Condition on the final time step and read the last-block qubits."""
    last = sector.basis.shapes[-1]
    amp = psi[sector.basis.block(last)]
    weight = float(np.sum(np.abs(amp) ** 2) / np.real(np.vdot(psi, psi)))
    if weight < UNRELIABLE_WEIGHT:
        raise DecodeError(f"final-step weight {weight:.3e} is too small to decode")
    probs = np.abs(amp) ** 2
    probs /= probs.sum()
    w = last.data_width
    dist = {format(k, f"0{w}b"): float(p) for k, p in enumerate(probs)}
    return Decoded(weight, ground_fidelity(sector, psi), dist)


def total_variation(p: dict[str, float], q: dict[str, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


# -- sweeps ----------------------------------------------------------------------------------


@dataclass
class SweepPoint:
    T: float
    fidelity: float
    steps: int


def doubling_sweep(sector: LegalSector, target: float = 0.99, T0: float = 1.0, T_max: float = 2.0**20, s_grid=(0.0, 1.0)):
    """Double ``T`` until the final ground-space fidelity reaches ``target``.

    Returns the sweep and the final state of the last run.
    """
    points = []
    T = T0
    while True:
        sched = Schedule(T, tuple(s_grid))
        psi = evolve(sector, sched)
        fid = ground_fidelity(sector, psi)
        points.append(SweepPoint(T, fid, step_count_for(T, sector.norm)))
        if fid >= target or T >= T_max:
            return points, psi
        T *= 2
