import numpy as np
import pytest

from qline import qma
from qline.circuit import acceptance_probability, basis_state, save_circuit, step_count


def test_yes_instance_has_zero_energy():
    for n, R in [(2, 2), (2, 3), (3, 2)]:
        assert qma.ground_energy(qma.accept_always(n, R)).E0 <= 1e-10


def test_accept_circuits_accept():
    assert acceptance_probability(qma.accept_always(2, 3), basis_state("00")) == pytest.approx(1.0)
    c = qma.accept_with(2, 4, 0.8)
    assert acceptance_probability(c, basis_state("00")) == pytest.approx(0.8)
    c = qma.accept_controlled(2, 3, 0.6)
    assert acceptance_probability(c, basis_state("10")) == pytest.approx(0.6)
    assert acceptance_probability(c, basis_state("00")) == 0.0
    assert acceptance_probability(qma.reject_always(2, 3), basis_state("10")) == 0.0


def test_imperfect_yes_legal_energy_bounded_by_rejection():
    n, R = 2, 3
    K = step_count(n, R)
    p = 1 - 1 / K**3
    g = qma.ground_energy(qma.accept_with(n, R, p))
    assert g.legal_energy <= (1 - p) / (K + 1) + 1e-12
    assert g.E0 <= g.legal_energy


def test_sector_route_equals_full_space_route():
    for c in (qma.accept_with(2, 3, 0.5), qma.reject_always(2, 2), qma.accept_controlled(2, 3, 0.3)):
        a = qma.ground_energy(c).E0
        b = qma.full_space_ground_energy(c)
        assert abs(a - b) < 1e-9


def test_full_space_scope():
    with pytest.raises(qma.ScopeError):
        qma.full_space_ground_energy(qma.reject_always(2, 4))


def test_decide_yes_no_violated():
    energy = qma.GroundEnergy(0.01, 0, 0.01, 0.01)
    c = qma.reject_always(2, 2)
    assert qma.decide(qma.Instance(c, 0.02, 0.1), energy).decision == qma.YES
    assert qma.decide(qma.Instance(c, 0.001, 0.005), energy).decision == qma.NO
    assert qma.decide(qma.Instance(c, 0.005, 0.01), energy).decision == qma.VIOLATED


def test_instance_needs_positive_gap():
    with pytest.raises(ValueError):
        qma.Instance(qma.reject_always(2, 2), 0.1, 0.0)


def test_verdict_dict():
    v = qma.decide(qma.Instance(qma.accept_always(2, 2), 1e-6, 1e-3))
    d = v.as_dict()
    assert d["decision"] == qma.YES and set(d) == {"E0", "decision", "sectors"}


# -- no-instance audit --------------------------------------------------------------------


@pytest.fixture(scope="module")
def audit():
    return qma.noinstance_energy_audit(qma.reject_always(2, 3))


def test_audit_decomposition_sums(audit):
    for r in audit.rows:
        assert abs(r.first + r.second + r.cross - r.direct) < 1e-10


def test_audit_cross_term_vanishes(audit):
    assert all(abs(r.cross) < 1e-12 for r in audit.rows)


def test_audit_valid_term_for_never_accepting_circuit(audit):
    K = audit.K
    assert audit.p == 0.0
    for r in audit.rows:
        assert r.first == pytest.approx(r.alpha2 * K / (K + 1), abs=1e-12)
        assert r.second <= r.second_bound + 1e-12


def test_audit_angle(audit):
    K = audit.K
    assert audit.sin2_theta == pytest.approx(1 / (K + 1), rel=1e-9)
    assert audit.sin2_theta >= 1 / (audit.constant * K) - 1e-15
    assert audit.max_overlap == pytest.approx(1 - audit.sin2_theta)


def test_audit_with_explicit_inputs():
    c = qma.reject_always(2, 2)
    a = qma.noinstance_energy_audit(c, inputs=[basis_state("11")])
    r = a.rows[0]
    assert r.alpha2 == 0.0 and r.first == 0.0
    assert r.second == pytest.approx(r.direct)


# -- scans and fits -------------------------------------------------------------------------


def test_loglog_slope_recovers_power():
    K = np.array([10, 20, 40, 80])
    assert qma.loglog_slope(K, 3.0 / K**3) == pytest.approx(-3.0)
    assert np.isnan(qma.loglog_slope(K, [1, 0, 1, 1]))


def test_fitted_constant():
    K = np.array([10.0, 20.0])
    assert qma.fitted_constant(K, 1 / (4 * K**2), 2) == pytest.approx(4.0)


def test_scan_rows_have_requested_sizes():
    rows, fits = qma.separation_scan([(2, 2)])
    assert [(r.n, r.R, r.K) for r in rows] == [(2, 2, 15)]
    assert set(fits) == {"slope_no", "slope_legal_no", "slope_data_no"}


# -- files --------------------------------------------------------------------------------


def test_instance_round_trip(tmp_path):
    c = qma.accept_with(2, 3, 0.9)
    save_circuit(c, tmp_path / "c.json")
    qma.save_instance(tmp_path / "i.json", "c.json", 0.01, 0.05)
    inst = qma.load_instance(tmp_path / "i.json")
    assert inst.E == 0.01 and inst.Delta == 0.05
    assert np.array_equal(inst.circuit.unitary(), c.unitary())


def test_malformed_instance(tmp_path):
    (tmp_path / "i.json").write_text('{"E": 1}')
    with pytest.raises(ValueError):
        qma.load_instance(tmp_path / "i.json")
