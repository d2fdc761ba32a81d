"""Pulse families, schedules, and the adiabatic-loss bound."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topolink import (
    NetworkSpec,
    ProtocolSchedule,
    Pulse,
    SpecificationError,
    adiabatic_bound,
    calibrate_bound_constant,
    eval_pulse,
    make_schedule,
    scaling_study,
)
from topolink.protocols import fit_growth_exponent


class TestPulse:
    def test_sine_squared_values(self):
        p = Pulse()
        assert eval_pulse(p, 0.5) == pytest.approx(1.0, abs=1e-15)
        assert eval_pulse(p, 0.25) == pytest.approx(0.5, abs=1e-15)

    @pytest.mark.parametrize("pulse", [
        Pulse(),
        Pulse(family="smoothed_order_n", order=2),
        Pulse(family="smoothed_order_n", order=4),
        Pulse(family="smoothed_order_n", order=8),
    ])
    def test_endpoint_midpoint_contract(self, pulse):
        assert abs(pulse(0.0)) < 1e-12
        assert abs(pulse(1.0)) < 1e-12
        assert abs(pulse(0.5) - 1.0) < 1e-12
        assert abs(pulse.derivative(0.0)) < 1e-12
        assert abs(pulse.derivative(1.0)) < 1e-12

    def test_order_two_equals_sine_squared(self):
        s = np.linspace(0, 1, 101)
        assert np.allclose(Pulse()(s), Pulse(family="smoothed_order_n", order=2)(s),
                           atol=1e-15)

    def test_order_four_midpoint_series(self):
        # near the midpoint the order-4 pulse behaves as 1 - (pi u)^4 with a
        # u^6 correction; checked numerically at shrinking offsets
        p = Pulse(family="smoothed_order_n", order=4)
        for u in (1e-2, 5e-3):
            series = 1.0 - (np.pi * u) ** 4
            err = abs(p(0.5 + u) - series)
            assert err < 1.0 * (np.pi * u) ** 6

    @given(st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=60, deadline=None)
    def test_range(self, s):
        val = Pulse()(s)
        assert -1e-12 <= val <= 1.0 + 1e-12

    def test_domain_error(self):
        with pytest.raises(SpecificationError):
            Pulse()(1.2)
        with pytest.raises(SpecificationError):
            Pulse()(-0.1)

    def test_odd_order_rejected(self):
        with pytest.raises(SpecificationError):
            Pulse(family="smoothed_order_n", order=3)

    def test_tabulated_matches_dense_samples(self):
        s = np.linspace(0, 1, 401)
        samples = tuple(zip(s, np.sin(np.pi * s) ** 2))
        p = Pulse(family="tabulated", samples=samples)
        grid = np.linspace(0, 1, 57)
        assert np.max(np.abs(p(grid) - np.sin(np.pi * grid) ** 2)) < 1e-5
        # derivative via finite differences stays close to the analytic one
        mid = np.linspace(0.1, 0.9, 17)
        assert np.max(np.abs(p.derivative(mid) - np.pi * np.sin(2 * np.pi * mid))) < 1e-3


class TestSchedule:
    def test_envelope_endpoints_and_peak(self):
        spec = NetworkSpec(kind="ssh", length=4, w=0.0, t=1.0)
        sched = make_schedule(spec, Pulse(), 10.0, dw_min=0.3)
        assert sched.envelope(0.0) == pytest.approx(0.0, abs=1e-12)
        assert sched.envelope(1.0) == pytest.approx(0.0, abs=1e-12)
        assert sched.envelope(0.5) == pytest.approx(0.7, abs=1e-12)

    def test_topological_phase_guard(self):
        spec = NetworkSpec(kind="ssh", length=4, w=0.0, t=1.0)
        with pytest.raises(SpecificationError):
            make_schedule(spec, Pulse(), 10.0, dw_min=-0.1)  # w_max >= t
        with pytest.raises(SpecificationError):
            make_schedule(spec, Pulse(), 10.0, w_max=1.0)

    def test_residual_floor(self):
        spec = NetworkSpec(kind="ssh", length=4, w=0.0, t=1.0)
        sched = make_schedule(spec, Pulse(), 10.0, dw_min=0.3, w_floor=0.05)
        assert sched.envelope(0.0) == pytest.approx(0.05, abs=1e-12)
        assert sched.envelope(0.5) == pytest.approx(0.7, abs=1e-12)
        H0 = sched.components()[0]
        assert H0[0, 1] == pytest.approx(0.05)

    def test_barrier_descends(self):
        spec = NetworkSpec(kind="barrier", length=3, w=1.0, t=1.0,
                           omega_edge=0.0, omega_barrier=6.0)
        sched = make_schedule(spec, Pulse(), 10.0, omega_barrier_min=2.0)
        assert sched.envelope(0.0) == pytest.approx(6.0)
        assert sched.envelope(0.5) == pytest.approx(2.0)

    def test_matrix_at_is_valid_everywhere(self):
        spec = NetworkSpec(kind="ssh", length=3, w=0.0, t=1.0)
        sched = make_schedule(spec, Pulse(), 10.0, dw_min=0.2)
        for s in np.linspace(0, 1, 11):
            H = sched.matrix_at(s)
            assert np.max(np.abs(H - H.T)) == 0.0
            assert H[0, 1] <= 0.8 + 1e-12

    def test_mc_edge_states_are_rotated(self):
        spec = NetworkSpec(kind="mc", length=3, t=1.0)
        sched = make_schedule(spec, Pulse(), 10.0, domega_max=0.8)
        src, tgt = sched.edge_states()
        assert np.allclose(src[:2], [1 / np.sqrt(2)] * 2)
        assert np.allclose(tgt[-2:], [1 / np.sqrt(2), -1 / np.sqrt(2)])


class TestBound:
    def test_epsilon_formula(self):
        rep = adiabatic_bound(Pulse(), length=4, dw_scaled_min=2.0)
        assert rep.epsilon == pytest.approx(1.0)

    def test_precondition(self):
        with pytest.raises(SpecificationError):
            adiabatic_bound(Pulse(), length=3, dw_scaled_min=3.3)

    def test_time_reversal_invariance(self):
        # reversed pulse tabulated from the forward one: the functional only
        # sees |I'|, |I''| and I, all symmetric under s -> 1-s
        s = np.linspace(0, 1, 401)
        forward = np.sin(np.pi * s) ** 2
        reversed_pulse = Pulse(family="tabulated",
                               samples=tuple(zip(s, forward[::-1])))
        a = adiabatic_bound(Pulse(), 30, 0.5).bound_constant
        b = adiabatic_bound(reversed_pulse, 30, 0.5).bound_constant
        assert abs(a - b) / a < 1e-3  # tabulated interpolation limits agreement

    def test_growth_exponents(self):
        lengths = [10, 30, 100, 300, 1000]
        sine = [adiabatic_bound(Pulse(), L, 0.5).bound_constant for L in lengths]
        assert 1.45 <= fit_growth_exponent(lengths, sine) <= 1.55
        p4 = Pulse(family="smoothed_order_n", order=4)
        quartic = [adiabatic_bound(p4, L, 0.5).bound_constant for L in lengths]
        assert 1.15 <= fit_growth_exponent(lengths, quartic) <= 1.35

    def test_loss_bound_decreases_with_tau(self):
        a = adiabatic_bound(Pulse(), 20, 0.5, tau=50.0).loss_bound
        b = adiabatic_bound(Pulse(), 20, 0.5, tau=100.0).loss_bound
        assert b < a

    def test_calibration_makes_bound_tight_but_valid(self):
        reports = [adiabatic_bound(Pulse(), L, 3.3, tau=2.0 * L ** 1.5) for L in (5, 8, 12)]
        losses = [1e-2, 8e-3, 7e-3]
        c = calibrate_bound_constant(reports, losses)
        for rep, loss in zip(reports, losses):
            assert (c * rep.bound_constant / rep.tau) ** 2 >= loss * (1 - 1e-12)
        # tight: at least one run saturates
        tight = min((c * rep.bound_constant / rep.tau) ** 2 / loss
                    for rep, loss in zip(reports, losses))
        assert tight == pytest.approx(1.0, rel=1e-9)


def test_scaling_study_single_length_reduces_to_direct_calls():
    pulse = Pulse()
    rows = scaling_study(0.5, 1.0, [8], pulse, 0.5,
                         simulate=lambda L, tau, dw: 0.123)
    assert len(rows) == 1
    direct = adiabatic_bound(pulse, 8, 0.5, tau=1.0 * 8 ** 1.5)
    assert rows[0]["bound_constant"] == pytest.approx(direct.bound_constant)
    assert rows[0]["simulated_loss"] == 0.123


def test_scaling_study_requires_sorted_lengths():
    with pytest.raises(SpecificationError):
        scaling_study(0.5, 1.0, [10, 5], Pulse(), 0.5)


def test_calibrated_bound_valid_across_scaling_runs():
    # calibrate the common weight on the alpha=1/2 runs, then check the
    # bound holds on the other scaling families (binding run saturates)
    from topolink.studies import simulated_loss

    pulse = Pulse()
    lengths = (5, 8, 12, 16, 20)
    refs = []
    for L in lengths:
        tau = 0.7 * L ** 1.5
        refs.append((adiabatic_bound(pulse, L, 3.3, tau=tau),
                     simulated_loss(L, tau, 3.3 / L)))
    c = calibrate_bound_constant([r for r, _ in refs], [l for _, l in refs])
    for alpha, tau0 in ((0.0, 2.0), (0.5, 0.7), (1.0, 0.25)):
        for L in lengths:
            tau = tau0 * L ** (1 + alpha)
            rep = adiabatic_bound(pulse, L, 3.3, tau=tau)
            loss = simulated_loss(L, tau, 3.3 / L)
            assert (c * rep.bound_constant / tau) ** 2 >= loss * (1 - 1e-9)
