"""Verification layer: fidelity/concurrence metrics, truth tables with a
negative control, and the two reduction-error scans."""

import numpy as np
import pytest

from squidqed.hilbert import StateVector
from squidqed.protocols import (ExecutionParams, GateSchedule,
                                schedule_cps, schedule_entanglement,
                                schedule_swap)
from squidqed.verify import (ScanResult, TruthTable, check_truth_table,
                             computational_propagator, concurrence,
                             corrupt_first_pulse, dispersive_error_scan,
                             gate_fidelity, halving_ratios, photon_excursion,
                             rwa_error_scan, truth_table_cps,
                             truth_table_swap, truth_table_transfer)


def test_gate_fidelity_basics():
    rng = np.random.default_rng(12)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    q, _ = np.linalg.qr(m)
    assert gate_fidelity(q, q) == pytest.approx(1.0)
    # global phase does not matter
    assert gate_fidelity(np.exp(0.7j) * q, q) == pytest.approx(1.0)
    other = np.diag([1, 1, 1, -1]).astype(complex)
    assert gate_fidelity(np.eye(4), other) == pytest.approx(0.25)
    with pytest.raises(ValueError, match="not unitary"):
        gate_fidelity(0.5 * np.eye(4), np.eye(4))
    with pytest.raises(ValueError, match="shape"):
        gate_fidelity(np.eye(3), np.eye(4))
    # loosening the tolerance admits a leaky propagator
    assert gate_fidelity(0.5 * np.eye(4), np.eye(4),
                         unitarity_tol=1.0) == pytest.approx(0.25)


def test_concurrence():
    bell = StateVector(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))
    assert concurrence(bell) == pytest.approx(1.0)
    prod = StateVector(np.array([1, 0, 0, 0], dtype=complex), (2, 2))
    assert concurrence(prod) == pytest.approx(0.0)
    # embedded in the three-level loops
    v = np.zeros(9, dtype=complex)
    v[1] = 1j / np.sqrt(2)   # |0,1>
    v[3] = -1 / np.sqrt(2)   # |1,0>
    assert concurrence(StateVector(v, (3, 3))) == pytest.approx(1.0)
    leaky = np.zeros(9, dtype=complex)
    leaky[0] = leaky[2] = 1 / np.sqrt(2)  # half on the auxiliary level
    with pytest.raises(ValueError, match="outside"):
        concurrence(StateVector(leaky, (3, 3)))
    with pytest.raises(ValueError, match="dims"):
        concurrence(StateVector(np.array([1.0, 0, 0, 0, 0, 0]), (2, 3)))


def test_computational_propagator_cps():
    u = computational_propagator(schedule_cps())
    np.testing.assert_allclose(u, np.diag([1, 1, 1, -1]), atol=1e-9)
    u_cav = computational_propagator(
        schedule_cps(), "hamiltonian",
        ExecutionParams(explicit_cavity=True))
    # cavity run keeps the phase pattern but with a small reduction error
    np.testing.assert_allclose(u_cav, np.diag(np.diag(u_cav)), atol=0.1)
    assert gate_fidelity(u_cav, u, unitarity_tol=1.0) > 0.99


def test_truth_tables_pass_on_exact_backends():
    for table in (truth_table_cps(), truth_table_swap(),
                  truth_table_transfer()):
        for backend in ("analytic", "hamiltonian"):
            chk = check_truth_table(table, backend)
            assert chk.ok, chk.failures
            assert chk.max_deviation < 1e-9
    assert len(truth_table_transfer().rows) == 2
    assert len(truth_table_cps().rows) == 4
    assert len(truth_table_swap().rows) == 4


def test_corrupted_schedule_fails_truth_table():
    table = truth_table_cps()
    bent = TruthTable(schedule=corrupt_first_pulse(table.schedule),
                      rows=table.rows)
    chk = check_truth_table(bent)
    assert not chk.ok
    assert chk.max_deviation > 0.01
    assert any("row" in f for f in chk.failures)


def test_corrupt_first_pulse_needs_a_pulse():
    from fractions import Fraction
    from squidqed.protocols import DispersiveStep
    bare = GateSchedule(name="idle", steps=(DispersiveStep(Fraction(1)),))
    with pytest.raises(ValueError, match="no pulse"):
        corrupt_first_pulse(bare)
    bent = corrupt_first_pulse(schedule_swap())
    assert bent.name == "swap-corrupted"
    first = bent.steps[0].actions[0]
    assert first.theta_over_pi == pytest.approx(0.9)


def test_scan_result_validation():
    with pytest.raises(ValueError, match="equal length"):
        ScanResult(kind="x", parameter=np.array([1.0, 2.0]),
                   error=np.array([1.0]),
                   peak_photon_population=np.array([0.0, 0.0]),
                   fock_violation=np.array([False, False]), meta={})
    s = ScanResult(kind="x", parameter=np.array([0.1, 0.05, 0.025]),
                   error=np.array([8.0, 2.0, 0.5]),
                   peak_photon_population=np.zeros(3),
                   fock_violation=np.zeros(3, dtype=bool), meta={})
    np.testing.assert_allclose(halving_ratios(s), [4.0, 4.0])


def test_scans_reject_bad_ratios():
    with pytest.raises(ValueError):
        dispersive_error_scan([])
    with pytest.raises(ValueError):
        dispersive_error_scan([1.5])
    with pytest.raises(ValueError):
        rwa_error_scan([])
    with pytest.raises(ValueError):
        rwa_error_scan([-0.1])


def test_dispersive_scan_against_fixed_values():
    scan = dispersive_error_scan()
    np.testing.assert_allclose(scan.parameter, [0.1, 0.05, 0.025])
    # state-error column: quartic in g/delta for this stroboscopic probe,
    # so halving the ratio divides the error by ~16 (not the generic ~4)
    np.testing.assert_allclose(
        scan.error, [3.917514e-3, 2.466121e-4, 1.542075e-5], rtol=1e-5)
    assert np.all(np.diff(scan.error) < 0)
    h = halving_ratios(scan)
    assert np.all((h > 14.0) & (h < 17.0))
    # photon excursion is the leading (second-order) virtual occupancy
    np.testing.assert_allclose(
        scan.peak_photon_population,
        [3.846153e-2, 9.900953e-3, 2.493754e-3], rtol=1e-4)
    ph = scan.peak_photon_population
    assert np.all((ph[:-1] / ph[1:] > 3.0) & (ph[:-1] / ph[1:] < 5.5))
    assert not scan.fock_violation.any()
    fid = scan.meta["gate_fidelity"]
    np.testing.assert_allclose(
        1.0 - fid, [1.573890e-3, 1.026367e-4, 6.482984e-6], rtol=1e-4)
    assert fid[1] > 0.9998


def test_rwa_scan_bands():
    scan = rwa_error_scan((0.1 / 20.1, 0.1 / 40.1))
    assert scan.kind == "rwa"
    assert np.all(scan.error < 1e-3)
    assert np.all(np.diff(scan.error) < 0)
    h = halving_ratios(scan)
    assert np.all((h > 3.0) & (h < 5.5))
    assert np.all(scan.peak_photon_population < 0.05)
    assert not scan.fock_violation.any()


def test_photon_excursion():
    params = ExecutionParams(explicit_cavity=True)
    with pytest.raises(ValueError, match="explicit-cavity"):
        photon_excursion(schedule_cps(), ExecutionParams(),
                         StateVector(np.eye(9)[4], (3, 3)))
    psi11 = StateVector(np.eye(9)[4].astype(complex), (3, 3))
    peak_cps, top_cps = photon_excursion(schedule_cps(), params, psi11)
    assert peak_cps == pytest.approx(9.900953e-3, rel=1e-4)
    assert top_cps < 1e-6
    # both loops excited rides two exchange channels at once: twice the
    # single-channel occupancy, which puts the swap schedule above the
    # 0.01 line the controlled-phase run stays under
    peak_swap, _ = photon_excursion(schedule_swap(), params, psi11)
    assert peak_swap == pytest.approx(1.9995e-2, rel=1e-3)
    assert peak_swap > 0.01


def test_entanglement_needs_analytic_or_vacuum_backend():
    # the declared target comes out of both exact backends
    sched = schedule_entanglement()
    for backend in ("analytic", "hamiltonian"):
        res_amp = computational_propagator(sched, backend)[:, 0]
        assert abs(res_amp[1]) == pytest.approx(1 / np.sqrt(2), abs=1e-9)
        assert abs(res_amp[2]) == pytest.approx(1 / np.sqrt(2), abs=1e-9)
