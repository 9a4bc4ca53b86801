import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qline.circuit import (
    ANCILLA,
    WITNESS,
    CanonicalCircuit,
    CircuitError,
    ONE_QUBIT,
    TWO_QUBIT,
    acceptance_probability,
    apply_circuit,
    basis_state,
    canonicalize,
    circuit_from_dict,
    circuit_to_dict,
    controlled,
    from_rounds,
    identity_circuit,
    load_circuit,
    named_gate,
    save_circuit,
    step_count,
)


def random_unitary(rng, d=4):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def direct_unitary(raw, n):
    """Oracle: embed each pair gate as a full 2^n matrix and multiply."""
    U = np.eye(2**n, dtype=complex)
    for q, g in raw:
        g = named_gate(g) if isinstance(g, str) else g
        full = np.kron(np.kron(np.eye(2**q), g), np.eye(2 ** (n - q - 2)))
        U = full @ U
    return U


def test_empty_gate_list_gives_two_identity_rounds():
    c = canonicalize([], 2)
    assert c.R == 2
    assert all(np.allclose(g, np.eye(4)) for rnd in c.rounds for g in rnd)


def test_single_cnot_forces_three_rounds():
    c = canonicalize([(0, "CNOT")], 2)
    assert c.R == 3
    assert np.array_equal(c.rounds[1][0], TWO_QUBIT["CNOT"])
    assert np.allclose(c.rounds[0][0], np.eye(4)) and np.allclose(c.rounds[2][0], np.eye(4))


def test_two_gates_share_a_round_and_replay_matches():
    raw = [(0, "H*I"), (1, "CNOT")]
    c = canonicalize(raw, 3)
    assert c.R == 3
    assert np.allclose(c.rounds[1][0], named_gate("H*I"))
    assert np.allclose(c.rounds[1][1], TWO_QUBIT["CNOT"])
    assert np.allclose(c.unitary(), direct_unitary(raw, 3), atol=1e-12)


def test_gate_left_of_previous_opens_new_round():
    c = canonicalize([(1, "CNOT"), (0, "CNOT")], 3)
    assert c.R == 4


def test_canonicalize_rejects_bad_pairs():
    with pytest.raises(CircuitError):
        canonicalize([((0, 2), "CNOT")], 3)
    with pytest.raises(CircuitError):
        canonicalize([(2, "CNOT")], 3)
    with pytest.raises(CircuitError):
        canonicalize([(0, np.ones((4, 4)))], 2)


def test_first_and_last_round_must_be_identity():
    cnot = TWO_QUBIT["CNOT"]
    eye = TWO_QUBIT["I"]
    with pytest.raises(CircuitError):
        CanonicalCircuit(2, ((cnot,), (eye,)))


def test_identity_circuit_leaves_state_alone():
    rng = np.random.default_rng(1)
    psi = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    assert np.allclose(apply_circuit(identity_circuit(3, 4), psi), psi)


def test_cnot_truth_table():
    c = from_rounds(2, [["CNOT"]])
    assert np.allclose(apply_circuit(c, basis_state("10")), basis_state("11"))


def test_bell_pair():
    c = from_rounds(2, [["H*I"], ["CNOT"]])
    want = (basis_state("00") + basis_state("11")) / np.sqrt(2)
    assert np.allclose(apply_circuit(c, basis_state("00")), want, atol=1e-12)


def test_acceptance_x_on_output_is_one():
    c = from_rounds(2, [["I*X"]])
    for w in ("00", "10"):
        assert acceptance_probability(c, basis_state(w)) == pytest.approx(1.0)


def test_acceptance_identity_is_zero():
    assert acceptance_probability(identity_circuit(2, 2), basis_state("10")) == 0.0


def test_acceptance_cnot_from_witness():
    c = from_rounds(2, [["CNOT"]])
    w = np.sqrt(0.3) * basis_state("00") + np.sqrt(0.7) * basis_state("10")
    assert abs(acceptance_probability(c, w) - 0.7) < 1e-12


def test_acceptance_rejects_dirty_ancilla():
    with pytest.raises(CircuitError):
        acceptance_probability(identity_circuit(2, 2), basis_state("01"))


def test_roles_default_and_validation():
    c = identity_circuit(3, 2)
    assert c.roles == (WITNESS, ANCILLA, ANCILLA) and c.out == 2 and c.ancillas == (1, 2)
    with pytest.raises(CircuitError):
        identity_circuit(3, 2, roles=("witness", "bogus", "ancilla"))
    with pytest.raises(CircuitError):
        identity_circuit(3, 2, out=3)


def test_controlled_gate():
    assert np.array_equal(controlled(ONE_QUBIT["X"]), TWO_QUBIT["CNOT"])


@pytest.mark.parametrize("n,R,K", [(2, 2, 15), (3, 2, 29), (2, 3, 29), (4, 3, 91)])
def test_step_count(n, R, K):
    assert step_count(n, R) == K


def test_file_round_trip(tmp_path):
    rng = np.random.default_rng(7)
    c = from_rounds(3, [[random_unitary(rng), "CNOT"], ["SWAP", "H*T"]], out=1)
    save_circuit(c, tmp_path / "c.json")
    d = load_circuit(tmp_path / "c.json")
    assert d.n == c.n and d.R == c.R and d.roles == c.roles and d.out == c.out
    assert np.array_equal(d.unitary(), c.unitary())
    assert circuit_to_dict(circuit_from_dict(circuit_to_dict(c))) == circuit_to_dict(c)


def test_malformed_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(CircuitError):
        load_circuit(p)
    with pytest.raises(CircuitError):
        circuit_from_dict({"rounds": []})


circuits = st.tuples(st.integers(2, 4), st.integers(0, 4), st.integers(0, 2**32 - 1))


@settings(max_examples=60, deadline=None)
@given(circuits)
def test_round_packing_preserves_product(args):
    n, m, seed = args
    rng = np.random.default_rng(seed)
    raw = [(int(rng.integers(0, n - 1)), random_unitary(rng)) for _ in range(m)]
    c = canonicalize(raw, n)
    assert np.allclose(c.unitary(), direct_unitary(raw, n), atol=1e-10)


def test_norm_preserved_on_random_circuits():
    rng = np.random.default_rng(0x5EED)
    for _ in range(1000):
        n, R = int(rng.integers(2, 5)), int(rng.integers(2, 7))
        middle = [[random_unitary(rng) for _ in range(n - 1)] for _ in range(R - 2)]
        c = from_rounds(n, middle)
        psi = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
        psi /= np.linalg.norm(psi)
        assert abs(np.linalg.norm(apply_circuit(c, psi)) - 1) < 1e-12
