"""Ground energies of verifier Hamiltonians and the yes/no promise decision."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import sectors as sec
from . import spectral
from .circuit import (
    ANCILLA,
    WITNESS,
    CanonicalCircuit,
    CircuitError,
    TWO_QUBIT,
    controlled,
    identity_circuit,
    load_circuit,
    ry,
    step_count,
)
from .hamiltonian import Basis, build_hprop, hfinal_diagonal, hinit_diagonal, history_basis

YES, NO, VIOLATED = "yes", "no", "promise-violated"


class ScopeError(ValueError):
    pass


@dataclass
class Instance:
    circuit: CanonicalCircuit
    E: float
    Delta: float

    def __post_init__(self):
        if not self.Delta > 0:
            raise ValueError("promise gap must be positive")


@dataclass
class SectorEnergy:
    orbit: int
    type: int
    size: int
    data_width: int
    energy: float


@dataclass
class GroundEnergy:
    E0: float
    sector: int
    legal_energy: float
    data_energy: float  # minimum over sectors that carry at least one qubit
    evidence: list[SectorEnergy] = field(default_factory=list)


@dataclass
class Verdict:
    E0: float
    decision: str
    evidence: list[SectorEnergy]

    def as_dict(self) -> dict:
        return {
            "E0": float(f"{self.E0:.17g}"),
            "decision": self.decision,
            "sectors": [e.__dict__ for e in self.evidence],
        }


# -- energies --------------------------------------------------------------------------------


def ground_energy(c: CanonicalCircuit) -> GroundEnergy:
    """Minimum of ``H_prop + H_init + H_final + H_penalty`` over all sectors.

    Only orbits containing a shape with no penalty hit are diagonalised; every other
    orbit is penalised on each member, so its energy is at least 1.
    """
    n, R = c.n, c.R
    if n * R > sec.SEED_ENUMERATION_MAX_L:
        raise ScopeError(f"chain length {n * R} exceeds {sec.SEED_ENUMERATION_MAX_L}")
    orbits = sec.low_energy_orbits(n, R)
    evidence = []
    for k, o in enumerate(orbits):
        e = sec.sector_min_energy(o, c)
        evidence.append(SectorEnergy(k, o.type, len(o), o.data_width, e))
    best = min(evidence, key=lambda r: r.energy)
    E0 = min(best.energy, 1.0)
    legal = min(r.energy for r in evidence if r.type == 1)
    data = min([r.energy for r in evidence if r.data_width > 0] + [1.0])
    return GroundEnergy(E0, best.orbit if best.energy <= 1.0 else -1, legal, data, evidence)


def full_space_ground_energy(c: CanonicalCircuit) -> float:
    """Same quantity from the assembled full-space operator (chain length at most 6).

    Blocks where every state carries diagonal (penalty, init or final) energy of at
    least 1 are bounded by that instead of diagonalised.
    """
    if c.n * c.R > sec.FULL_ENUMERATION_MAX_L:
        raise ScopeError("full-space assembly is limited to chain length 6")
    _, H, floor = sec.full_space_operator(c, c.n, c.R, ("prop", "penalty", "init", "final"))
    _, minima, _ = spectral.component_minima(H, floor, skip_above=1.0)
    return float(minima.min())


def decide(inst: Instance, energy: GroundEnergy | None = None) -> Verdict:
    g = ground_energy(inst.circuit) if energy is None else energy
    if g.E0 <= inst.E:
        d = YES
    elif g.E0 >= inst.E + inst.Delta:
        d = NO
    else:
        d = VIOLATED
    return Verdict(g.E0, d, g.evidence)


# -- instance circuits -----------------------------------------------------------------------


def accept_always(n: int, R: int) -> CanonicalCircuit:
    """Acceptance 1 for a correctly initialised input.

    With three or more rounds an X lands on the output qubit; with two rounds (no room
    for gates) the output is the witness qubit, which the witness |1> satisfies.
    """
    if R >= 3:
        return accept_with(n, R, 1.0)
    return identity_circuit(n, R, (WITNESS,) + (ANCILLA,) * (n - 1), out=0)


def accept_with(n: int, R: int, p: float) -> CanonicalCircuit:
    """Rotate the output qubit so that it reads 1 with probability ``p``.

    Two rounds leave no room for gates, so the witness itself is the output and the
    best witness is accepted with certainty.
    """
    if R < 3:
        return accept_always(n, R)
    theta = 2 * np.arcsin(np.sqrt(p))
    out = n - 1
    eye = TWO_QUBIT["I"]
    gates = [eye] * (n - 1)
    gates[out - 1] = np.kron(np.eye(2), ry(theta))
    rounds = [(eye,) * (n - 1), tuple(gates)] + [(eye,) * (n - 1)] * (R - 2)
    return CanonicalCircuit(n, tuple(rounds), (WITNESS,) + (ANCILLA,) * (n - 1), out)


def accept_controlled(n: int, R: int, p: float) -> CanonicalCircuit:
    """Witness-controlled rotation: witness |1> is accepted with probability ``p``."""
    if R < 3:
        raise CircuitError("a controlled rotation needs at least three rounds")
    eye = TWO_QUBIT["I"]
    gates = [eye] * (n - 1)
    gates[0] = controlled(ry(2 * np.arcsin(np.sqrt(p))))
    rounds = [(eye,) * (n - 1), tuple(gates)] + [(eye,) * (n - 1)] * (R - 2)
    return CanonicalCircuit(n, tuple(rounds), (WITNESS,) + (ANCILLA,) * (n - 1), 1)


def reject_always(n: int, R: int) -> CanonicalCircuit:
    """Identity circuit whose output is an ancilla, so it always reads 0."""
    return identity_circuit(n, R, (WITNESS,) + (ANCILLA,) * (n - 1), out=n - 1)


# -- audit -------------------------------------------------------------------------------------


@dataclass
class AuditRow:
    input: int
    alpha2: float
    first: float
    second: float
    cross: float
    direct: float
    first_bound: float
    second_bound: float


@dataclass
class Audit:
    K: int
    p: float
    rows: list[AuditRow]
    sin2_theta: float
    max_overlap: float
    constant: float  # c with sin^2(theta) = 1/(c K)


def _valid_mask(c: CanonicalCircuit) -> np.ndarray:
    n = c.n
    idx = np.arange(2**n)
    ok = np.ones(2**n, dtype=bool)
    for q in c.ancillas:
        ok &= ((idx >> (n - 1 - q)) & 1) == 0
    return ok


def noinstance_energy_audit(c: CanonicalCircuit, inputs: list[np.ndarray] | None = None, seed: int = 0) -> Audit:
    """Split ``<psi|Pi_init Pi_final|psi>`` into valid, invalid and cross parts.

    ``psi`` runs over history states of the given inputs (default: every computational
    basis input plus a few random superpositions). ``Pi_init`` and ``Pi_final`` are the
    null projectors of the two checks, both diagonal in the legal sector.
    """
    basis = Basis.legal(c.n, c.R)
    K = len(basis) - 1
    keep = (hinit_diagonal(c, basis) == 0) & (hfinal_diagonal(c, basis) == 0)
    V = np.hstack([history_basis(c, basis, x) for x in range(2**c.n)])
    valid = _valid_mask(c)
    if inputs is None:
        rng = np.random.default_rng(seed)
        inputs = [np.eye(2**c.n)[x] for x in range(2**c.n)]
        for _ in range(4):
            z = rng.standard_normal(2**c.n) + 1j * rng.standard_normal(2**c.n)
            inputs.append(z / np.linalg.norm(z))

    def hist(xi):
        return V @ np.kron(xi, np.ones(K + 1)) / np.sqrt(K + 1)

    def form(a, b):
        return np.vdot(a, keep * b)

    # acceptance of the best valid input
    vals = [x for x in range(2**c.n) if valid[x]]
    accept = 0.0
    for x in vals:
        psi = hist(np.eye(2**c.n)[x])
        accept = max(accept, 1 - (1 - float(np.real(form(psi, psi)))) * (K + 1))
    rows = []
    for k, xi in enumerate(inputs):
        xv, xi_ = np.where(valid, xi, 0), np.where(valid, 0, xi)
        a2, b2 = float(np.sum(np.abs(xv) ** 2)), float(np.sum(np.abs(xi_) ** 2))
        pv = hist(xv / np.sqrt(a2)) if a2 > 0 else np.zeros(basis.dim)
        pi = hist(xi_ / np.sqrt(b2)) if b2 > 0 else np.zeros(basis.dim)
        alpha, beta = np.sqrt(a2), np.sqrt(b2)
        first = a2 * float(np.real(form(pv, pv)))
        second = b2 * float(np.real(form(pi, pi)))
        cross = 2 * float(np.real(alpha * beta * form(pv, pi)))
        psi = hist(xi)
        direct = float(np.real(form(psi, psi)))
        rows.append(AuditRow(k, a2, first, second, cross, direct, a2 * (K + accept) / (K + 1), b2 * K / (K + 1)))
    null_prop, _ = spectral.null_space(build_hprop(c, basis).toarray())
    null_checks = np.eye(basis.dim)[:, keep]
    theta = spectral.principal_angle(null_prop, null_checks)
    overlap = float(np.linalg.eigvalsh(null_prop.conj().T @ (keep[:, None] * null_prop))[-1])
    s2 = float(np.sin(theta) ** 2)
    return Audit(K, accept, rows, s2, overlap, 1 / (s2 * K))


# -- scans -----------------------------------------------------------------------------------


@dataclass
class ScanRow:
    n: int
    R: int
    K: int
    E0_yes: float
    E0_yes_p: float
    E0_no: float
    ratio: float
    legal_no: float
    data_no: float


def loglog_slope(K, E) -> float:
    K, E = np.asarray(K, dtype=float), np.asarray(E, dtype=float)
    if len(K) < 2 or np.any(E <= 0):
        return float("nan")
    return float(np.polyfit(np.log(K), np.log(E), 1)[0])


def separation_scan(family) -> tuple[list[ScanRow], dict]:
    """Yes/no ground energies over a family of ``(n, R)`` sizes.

    Yes instances accept with probability 1 and ``1 - 1/K^3``; the no instance never
    accepts. Slopes are fitted to the full ground energy and, for diagnosis, to the
    legal-sector and data-carrying minima of the no instance.
    """
    rows = []
    for n, R in family:
        K = step_count(n, R)
        yes = ground_energy(accept_always(n, R)).E0
        yes_p = ground_energy(accept_with(n, R, 1 - 1 / K**3)).E0
        g = ground_energy(reject_always(n, R))
        ratio = g.E0 / yes_p if yes_p > 0 else float("inf")
        rows.append(ScanRow(n, R, K, yes, yes_p, g.E0, ratio, g.legal_energy, g.data_energy))
    Ks = [r.K for r in rows]
    fits = {
        "slope_no": loglog_slope(Ks, [r.E0_no for r in rows]),
        "slope_legal_no": loglog_slope(Ks, [r.legal_no for r in rows]),
        "slope_data_no": loglog_slope(Ks, [r.data_no for r in rows]),
    }
    return rows, fits


def fitted_constant(K, E, power: float) -> float:
    """Largest ``c`` needed for ``E >= 1/(c K^power)`` at every point."""
    K, E = np.asarray(K, dtype=float), np.asarray(E, dtype=float)
    with np.errstate(divide="ignore"):
        return float(np.max(1 / (E * K**power)))


# -- files -------------------------------------------------------------------------------------


def load_instance(path: str | Path) -> Instance:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
        circuit_path = path.parent / doc["circuit"]
        return Instance(load_circuit(circuit_path), float(doc["E"]), float(doc["Delta"]))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: malformed instance file ({exc})") from None


def save_instance(path: str | Path, circuit_file: str, E: float, Delta: float) -> None:
    Path(path).write_text(json.dumps({"circuit": circuit_file, "E": E, "Delta": Delta}, indent=1) + "\n")
