"""Nearest-neighbour circuits in round form, plus a plain state-vector simulator.

A circuit on ``n`` qubits is a list of rounds. Round ``r`` holds ``n - 1`` two-qubit
gates; gate ``j`` of a round acts on qubits ``(j, j + 1)`` and the gates of a round are
applied left to right. Qubits are numbered from 0. The first and last rounds are
identity-only: the line construction uses them to check ancillas and the output.

The simulator here is deliberately independent of the line construction and serves
as the reference for every end-to-end check.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

WITNESS = "witness"
ANCILLA = "ancilla"

_S2 = 1 / np.sqrt(2)

ONE_QUBIT = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
}

TWO_QUBIT = {
    "I": np.eye(4, dtype=complex),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}


class CircuitError(ValueError):
    pass


def named_gate(name: str) -> np.ndarray:
    """Return the 4x4 matrix for a gate name.

    Two-qubit names are ``I``, ``CNOT`` (control on the left qubit), ``CZ`` and
    ``SWAP``. A product of one-qubit gates is written ``A*B`` meaning ``A`` on the
    left qubit and ``B`` on the right one, e.g. ``H*I``.
    """
    if name in TWO_QUBIT:
        return TWO_QUBIT[name].copy()
    if "*" in name:
        left, right = (part.strip() for part in name.split("*", 1))
        if left in ONE_QUBIT and right in ONE_QUBIT:
            return np.kron(ONE_QUBIT[left], ONE_QUBIT[right])
    raise CircuitError(f"unknown gate name {name!r}")


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def controlled(u: np.ndarray) -> np.ndarray:
    """Two-qubit gate applying the one-qubit ``u`` to the right qubit when the left is 1."""
    g = np.eye(4, dtype=complex)
    g[2:, 2:] = u
    return g


def check_unitary(matrix: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (4, 4):
        raise CircuitError(f"gate must be 4x4, got {m.shape}")
    if np.abs(m.conj().T @ m - np.eye(4)).max() > tol:
        raise CircuitError("gate is not unitary")
    return m


def is_identity(matrix: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.abs(matrix - np.eye(matrix.shape[0])).max() <= tol)


@dataclass(frozen=True, eq=False)
class CanonicalCircuit:
    n: int
    rounds: tuple[tuple[np.ndarray, ...], ...]
    roles: tuple[str, ...] = ()
    out: int = -1
    names: tuple[tuple[str, ...], ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        n = self.n
        if n < 2:
            raise CircuitError("need at least two qubits")
        if len(self.rounds) < 2:
            raise CircuitError("need at least two rounds")
        rounds = []
        for r, rnd in enumerate(self.rounds):
            if len(rnd) != n - 1:
                raise CircuitError(f"round {r} has {len(rnd)} gates, expected {n - 1}")
            rounds.append(tuple(check_unitary(g) for g in rnd))
        for r in (0, len(rounds) - 1):
            if not all(is_identity(g) for g in rounds[r]):
                raise CircuitError(f"round {r} must contain only identity gates")
        roles = tuple(self.roles) or (WITNESS,) + (ANCILLA,) * (n - 1)
        if len(roles) != n or any(x not in (WITNESS, ANCILLA) for x in roles):
            raise CircuitError(f"bad roles {roles!r}")
        out = n - 1 if self.out == -1 else self.out
        if not 0 <= out < n:
            raise CircuitError(f"output qubit {out} out of range")
        for g in (g for rnd in rounds for g in rnd):
            g.setflags(write=False)
        object.__setattr__(self, "rounds", tuple(rounds))
        object.__setattr__(self, "roles", roles)
        object.__setattr__(self, "out", out)

    @property
    def R(self) -> int:
        return len(self.rounds)

    @property
    def ancillas(self) -> tuple[int, ...]:
        return tuple(i for i, role in enumerate(self.roles) if role == ANCILLA)

    @property
    def steps(self) -> int:
        """Number of moves K of the line construction for this circuit."""
        return step_count(self.n, self.R)

    def gate(self, block: int, offset: int) -> np.ndarray:
        return self.rounds[block][offset]

    def gates(self):
        """Flattened ``(qubit, matrix)`` list in application order."""
        return [(j, g) for rnd in self.rounds for j, g in enumerate(rnd)]

    def unitary(self) -> np.ndarray:
        dim = 2**self.n
        return np.column_stack([apply_circuit(self, np.eye(dim, dtype=complex)[:, k]) for k in range(dim)])


def step_count(n: int, R: int) -> int:
    return n * (2 * n + 3) * (R - 1) + n - 1


def identity_circuit(n: int, R: int, roles=(), out: int = -1) -> CanonicalCircuit:
    eye = TWO_QUBIT["I"]
    return CanonicalCircuit(n, tuple((eye,) * (n - 1) for _ in range(R)), tuple(roles), out)


def from_rounds(n: int, middle: Sequence[Sequence], roles=(), out: int = -1) -> CanonicalCircuit:
    """Wrap the given rounds with identity-only first and last rounds.

    Gates may be names (see :func:`named_gate`) or matrices.
    """
    eye = TWO_QUBIT["I"]
    rounds = [(eye,) * (n - 1)]
    for rnd in middle:
        rounds.append(tuple(named_gate(g) if isinstance(g, str) else np.asarray(g, dtype=complex) for g in rnd))
    rounds.append((eye,) * (n - 1))
    return CanonicalCircuit(n, tuple(rounds), tuple(roles), out)


def canonicalize(raw: Sequence[tuple[int, object]], n: int, roles=(), out: int = -1) -> CanonicalCircuit:
    """Pack an ordered gate list into rounds.

    ``raw`` holds ``(q, gate)`` pairs where the gate acts on qubits ``(q, q + 1)``. A gate
    goes into the current round when its slot lies strictly right of the last used slot,
    otherwise a new round is opened; this keeps the product of all gates unchanged.
    """
    if n < 2:
        raise CircuitError("need at least two qubits")
    eye = TWO_QUBIT["I"]
    middle: list[list[np.ndarray]] = []
    last = n
    for idx, item in enumerate(raw):
        try:
            q, g = item
        except (TypeError, ValueError):
            raise CircuitError(f"gate {idx}: expected (qubit, gate) pair") from None
        if isinstance(q, tuple):
            a, b = q
            if b != a + 1:
                raise CircuitError(f"gate {idx} acts on non-adjacent qubits {q}")
            q = a
        if not 0 <= q < n - 1:
            raise CircuitError(f"gate {idx} acts on qubits ({q}, {q + 1}) outside 0..{n - 1}")
        m = named_gate(g) if isinstance(g, str) else check_unitary(g)
        if q <= last:
            middle.append([eye] * (n - 1))
        middle[-1][q] = m
        last = q
    return from_rounds(n, middle, roles, out)


def _apply_pair(psi: np.ndarray, g: np.ndarray, q: int, n: int) -> np.ndarray:
    lead = 2**q
    tail = 2 ** (n - q - 2)
    t = psi.reshape(lead, 4, tail)
    return np.einsum("ab,ibj->iaj", g, t).reshape(-1)


def apply_circuit(c: CanonicalCircuit, state: np.ndarray) -> np.ndarray:
    """Apply every round in order. Basis index bits are qubit 0 most significant."""
    psi = np.asarray(state, dtype=complex)
    if psi.shape != (2**c.n,):
        raise CircuitError(f"state has shape {psi.shape}, expected ({2 ** c.n},)")
    for q, g in c.gates():
        psi = _apply_pair(psi, g, q, c.n)
    return psi


def basis_state(bits: str | Sequence[int]) -> np.ndarray:
    bits = [int(b) for b in bits]
    psi = np.zeros(2 ** len(bits), dtype=complex)
    psi[int("".join(map(str, bits)), 2)] = 1
    return psi


def qubit_mask(n: int, q: int) -> np.ndarray:
    """Boolean mask over basis indices where qubit ``q`` is 1."""
    idx = np.arange(2**n)
    return ((idx >> (n - 1 - q)) & 1).astype(bool)


def acceptance_probability(c: CanonicalCircuit, witness: np.ndarray, tol: float = 1e-12) -> float:
    """Probability of measuring 1 on the output qubit.

    ``witness`` is the full n-qubit input; its ancilla qubits must be |0>.
    """
    psi = np.asarray(witness, dtype=complex)
    for q in c.ancillas:
        bad = np.sum(np.abs(psi[qubit_mask(c.n, q)]) ** 2)
        if bad > tol:
            raise CircuitError(f"ancilla qubit {q} is not |0> (weight {bad:.3g} on |1>)")
    out = apply_circuit(c, psi)
    return float(np.sum(np.abs(out[qubit_mask(c.n, c.out)]) ** 2))


# -- file format ----------------------------------------------------------------------


def _gate_to_json(g: np.ndarray):
    for name, m in TWO_QUBIT.items():
        if np.array_equal(g, m):
            return name
    return [[[float(z.real), float(z.imag)] for z in row] for row in g]


def _gate_from_json(obj) -> np.ndarray:
    if isinstance(obj, str):
        return named_gate(obj)
    m = np.asarray(obj, dtype=float)
    if m.shape != (4, 4, 2):
        raise CircuitError("matrix gate must be a 4x4 array of [re, im] pairs")
    return check_unitary(m[..., 0] + 1j * m[..., 1], tol=1e-9)


def circuit_to_dict(c: CanonicalCircuit) -> dict:
    return {
        "n": c.n,
        "rounds": [[_gate_to_json(g) for g in rnd] for rnd in c.rounds],
        "roles": list(c.roles),
        "out": c.out,
    }


def circuit_from_dict(doc: dict) -> CanonicalCircuit:
    try:
        n = int(doc["n"])
        rounds = tuple(tuple(_gate_from_json(g) for g in rnd) for rnd in doc["rounds"])
    except (KeyError, TypeError) as exc:
        raise CircuitError(f"malformed circuit document: {exc}") from None
    return CanonicalCircuit(n, rounds, tuple(doc.get("roles", ())), int(doc.get("out", -1)))


def load_circuit(path: str | Path) -> CanonicalCircuit:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CircuitError(f"{path}: {exc}") from None
    return circuit_from_dict(doc)


def save_circuit(c: CanonicalCircuit, path: str | Path) -> None:
    Path(path).write_text(json.dumps(circuit_to_dict(c), indent=1) + "\n")
