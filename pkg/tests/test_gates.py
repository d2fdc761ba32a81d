"""Gate register, pulse/transfer primitives, and the composed sequences.

The unit tests run at L=6 to stay fast; the acceptance suite reruns the
composed gates at L=10.
"""

import math

import numpy as np
import pytest

from topolink.gates import (
    GateEngine,
    GateRegister,
    cp_gate,
    pi_pulse,
    swap_gate,
    transfer_phase_expected,
    transfer_primitive,
    two_boson_transfer_amplitude,
)
from topolink.networks import NetworkSpec
from topolink.protocols import ProtocolSchedule, Pulse
from topolink.studies import outermost_branch


@pytest.fixture(scope="module")
def engine6():
    length, dw = 6, 0.28

    def factory(dwv, tau):
        spec = NetworkSpec(kind="ssh", length=length, w=0.0, t=1.0)
        return ProtocolSchedule(spec, Pulse(), tau, dw_min=float(dwv))

    pts = outermost_branch(factory, [dw], 30.0, 200.0, n_tau=40, threshold=0.9,
                           steps=3000)
    assert pts, "no transfer branch found for the gate engine"
    return GateEngine(length, transfer_dw_min=dw, transfer_tau=pts[0].tau,
                      transfer_steps=6000, pulse_steps=700)


class TestRegister:
    def test_indexing_round_trip(self):
        reg = GateRegister(4)
        seen = set()
        for qc in "01a":
            for qt in "01a":
                for ph in [None] + list(range(8)):
                    idx = reg.index(qc, qt, ph)
                    assert 0 <= idx < reg.dim
                    seen.add(idx)
        assert len(seen) == reg.dim

    def test_logical_embedding(self):
        reg = GateRegister(3)
        psi = reg.logical_state([0.5, 0.5, 0.5, 0.5])
        assert np.isclose(np.linalg.norm(psi), 1.0)
        for idx, amp in zip(reg.logical_indices(), [0.5] * 4):
            assert psi[idx] == amp


class TestPiPulse:
    def test_half_cycle_emits_with_quarter_phase(self, engine6):
        reg = engine6.register
        psi = reg.logical_state([0, 1, 0, 0])  # |0>_C |1>_T
        out, admix = pi_pulse(engine6, psi, "T", cycles=0.5)
        amp = out[reg.index("0", "a", reg.modes - 1)]
        assert abs(abs(amp) - 1.0) < 1e-9
        assert abs(np.angle(amp) + math.pi / 2) < 1e-9
        assert admix < 1e-9  # decoupled point: exact two-level dynamics

    def test_ground_state_invariant(self, engine6):
        reg = engine6.register
        psi = reg.logical_state([1, 0, 0, 0])  # |0>_C |0>_T
        out, _ = pi_pulse(engine6, psi, "T", cycles=0.5)
        assert abs(out[reg.index("0", "0")] - 1.0) < 1e-12
        out, _ = pi_pulse(engine6, out, "C", cycles=1.0)
        assert abs(out[reg.index("0", "0")] - 1.0) < 1e-12

    def test_full_cycle_phase_pi(self, engine6):
        reg = engine6.register
        psi = np.zeros(reg.dim, dtype=complex)
        psi[reg.index("1", "0", 0)] = 1.0  # control |1> with photon at its edge
        out, _ = pi_pulse(engine6, psi, "C", cycles=1.0)
        overlap = out[reg.index("1", "0", 0)]
        assert abs(overlap + 1.0) < 1e-3


class TestTransferPrimitive:
    def test_vacuum_inert(self, engine6):
        reg = engine6.register
        psi = reg.logical_state([0, 0, 1, 0])
        out = transfer_primitive(engine6, psi)
        assert abs(out[reg.index("1", "0")] - 1.0) < 1e-12

    def test_edge_exchange_phase(self, engine6):
        reg = engine6.register
        psi = np.zeros(reg.dim, dtype=complex)
        psi[reg.index("1", "a", 0)] = 1.0  # photon at edge C
        out = transfer_primitive(engine6, psi)
        amp = out[reg.index("1", "a", reg.modes - 1)]
        assert abs(amp) ** 2 > 0.99
        expected = transfer_phase_expected(engine6.length)
        assert abs(np.angle(amp) - expected) < 1e-2

    def test_exchange_map_both_directions(self, engine6):
        U = engine6.transfer_unitary()
        e_c, e_t = 1, engine6.register.modes
        # both edge-to-edge amplitudes carry the same quarter-turn phase
        assert abs(np.angle(U[e_t, e_c]) - np.angle(U[e_c, e_t])) < 1e-9
        assert abs(U[e_c, e_c]) ** 2 < 1e-2 and abs(U[e_t, e_t]) ** 2 < 1e-2


def test_two_excitation_amplitude_matches_permanent():
    exact, permanent = two_boson_transfer_amplitude(2, 0.3, 30.0)
    assert abs(exact - permanent) < 1e-9


class TestComposedGates:
    def test_cp_truth_table_and_ledger(self, engine6):
        report = cp_gate(engine6)
        target = np.diag([1.0, 1.0, 1.0, -1.0])
        assert np.max(np.abs(report.truth_table - target)) < 1e-2
        assert report.fidelity > 0.99
        for stage in report.stages:
            delta = (stage.phase - stage.expected_phase + math.pi) % (2 * math.pi) - math.pi
            assert abs(delta) < 1e-2
        assert not report.warnings

    def test_cp_on_superposition_by_linearity(self, engine6):
        report = cp_gate(engine6)
        amps = np.ones(4) / 2.0
        out = report.truth_table @ amps
        want = np.array([0.5, 0.5, 0.5, -0.5])
        assert abs(np.vdot(want, out)) ** 2 > 0.99

    def test_swap_exchanges_random_states(self, engine6):
        report = swap_gate(engine6, n_random_states=6, seed=11)
        assert len(report.state_fidelities) == 6
        assert min(report.state_fidelities) >= 0.99
        assert abs(abs(report.local_phase) - math.pi / 2) < 1e-2

    def test_swap_basis_states(self, engine6):
        report = swap_gate(engine6)
        swap = np.zeros((4, 4))
        swap[0, 0] = swap[3, 3] = swap[1, 2] = swap[2, 1] = 1.0
        assert np.max(np.abs(np.abs(report.truth_table) - swap)) < 1e-2

    def test_level_permutation_is_involution(self, engine6):
        A = engine6.level_permutation("C", "1", "a")
        assert np.array_equal(A @ A, np.eye(engine6.register.dim))

    def test_gate_unitarity_on_logical_block(self, engine6):
        report = cp_gate(engine6)
        G = report.truth_table
        assert np.max(np.abs(G.conj().T @ G - np.eye(4))) < 1e-3


def test_swap_moves_arbitrary_control_state_to_target(engine6):
    report = swap_gate(engine6)
    alpha, beta = 0.6, 0.8j
    state = np.array([alpha, 0.0, beta, 0.0])  # (a|0> + b|1>)_C (x) |0>_T
    out = report.truth_table @ state
    want = np.array([alpha, beta, 0.0, 0.0])   # |0>_C (x) (a|0> + b|1>)_T
    assert abs(np.vdot(want, out)) ** 2 > 0.998
