"""2D builder, parity routing, activation schedules, and the obstruction scan."""

import numpy as np
import pytest

from topolink import NetworkSpec, Pulse, SpecificationError, build_ssh, evolve
from topolink.dynamics import CachedPropagator
from topolink.lattice import (
    BOUNDARY,
    EMANATING,
    Edge,
    Lattice2D,
    activate_global,
    activate_path,
    add_parity_breaking_edge,
    build_honeycomb,
    check_path_parity,
    find_path,
    rest_zero_splitting,
    verify_obstruction,
)


@pytest.fixture(scope="module")
def emanating():
    return build_honeycomb(2, 3, EMANATING,
                           stubs=[("A", 0, 0, "u"), ("B", 0, 2, "u"), ("C", 1, 1, "l")])


class TestBuilder:
    def test_single_row_reduces_to_chain(self):
        lat = build_honeycomb(1, 5)
        chain = build_ssh(NetworkSpec(kind="ssh", length=5, w=0.0, t=1.0))
        assert np.array_equal(lat.static_matrix(), chain.entries)
        assert np.array_equal(lat.parity, chain.parity)

    def test_bipartite_by_construction(self):
        for rows, cols in ((1, 4), (2, 3), (3, 4)):
            lat = build_honeycomb(rows, cols)
            lat.validate_bipartite()  # raises on violation

    def test_bipartite_validation_rejects_same_parity_edge(self):
        lat = build_honeycomb(2, 3)
        bad = Lattice2D(geometry=lat.geometry, labels=lat.labels, parity=lat.parity,
                        edges=lat.edges + [Edge(0, 2, 0.5, "t")],  # u-u coupling
                        terminals=lat.terminals, tbar=lat.tbar)
        with pytest.raises(SpecificationError):
            bad.validate_bipartite()

    def test_boundary_terminal_pattern(self):
        lat = build_honeycomb(3, 4)
        names = sorted(t.name for t in lat.terminals)
        assert names == ["L0", "L1", "L2", "R0", "R1", "R2"]
        for t in lat.terminals:
            par = lat.parity[t.node]
            assert par == (1 if t.name.startswith("L") else -1)

    def test_emanating_terminals_inherit_attach_parity(self, emanating):
        assert emanating.parity[emanating.terminal("A").node] == 1
        assert emanating.parity[emanating.terminal("B").node] == 1
        assert emanating.parity[emanating.terminal("C").node] == -1

    def test_size_validation(self):
        with pytest.raises(SpecificationError):
            build_honeycomb(0, 3)


class TestParityRouting:
    def test_feasibility(self, emanating):
        assert check_path_parity(emanating, "A", "C") == "feasible"
        assert check_path_parity(emanating, "A", "B") == "obstructed"
        assert check_path_parity(emanating, "A", "A") == "obstructed"

    def test_unknown_terminal(self, emanating):
        with pytest.raises(SpecificationError):
            check_path_parity(emanating, "A", "Z")

    def test_find_path_alternates(self, emanating):
        path = find_path(emanating, "A", "C")
        pars = emanating.parity[path]
        assert np.all(pars[:-1] != pars[1:])
        assert len(path) % 2 == 0


class TestPathActivation:
    def test_zero_stray_reduces_to_chain(self):
        lat = build_honeycomb(2, 4)
        path = find_path(lat, "L0", "R0")
        sched2d = activate_path(lat, path, Pulse(), 40.0, dw_min=0.32, stray=0.0)
        rep2d = evolve(sched2d, steps=1600)
        spec = NetworkSpec(kind="ssh", length=4, w=0.0, t=1.0)
        from topolink.protocols import ProtocolSchedule

        rep1d = evolve(ProtocolSchedule(spec, Pulse(), 40.0, dw_min=0.32), steps=1600)
        assert rep2d.fidelity == pytest.approx(rep1d.fidelity, abs=1e-12)
        assert rep2d.phase == pytest.approx(rep1d.phase, abs=1e-12)

    def test_symmetric_stray_keeps_peak_fidelity(self):
        lat = build_honeycomb(2, 4)
        path = find_path(lat, "L0", "R0")

        def peak(stray):
            sched = activate_path(lat, path, Pulse(), 90.0, dw_min=0.32, stray=stray)
            H0, H1, env = sched.components()
            prop = CachedPropagator(H0, H1, env, 2400)
            src, tgt = sched.edge_states()
            taus = np.linspace(20.0, 90.0, 60)
            fids = np.abs(prop.propagate_batch(taus, src.astype(complex)) @ tgt.conj()) ** 2
            return float(fids.max())

        clean, strayed = peak(0.0), peak(0.2)
        assert strayed >= 0.99 * clean

    def test_infeasible_path_refused(self, emanating):
        ta = emanating.terminal("A").node
        tb = emanating.terminal("B").node
        with pytest.raises(SpecificationError):
            # same-parity endpoints cannot form an alternating path
            activate_path(emanating, [ta, tb], Pulse(), 30.0, dw_min=0.3)


class TestRestZeroModes:
    def test_terminals_pinned_at_reference(self, emanating):
        H = emanating.static_matrix()
        vals, vecs = np.linalg.eigh(H)
        for name in "ABC":
            node = emanating.terminal(name).node
            idx = int(np.argmax(vecs[node, :] ** 2))
            assert abs(vals[idx]) < 1e-12
            assert vecs[node, idx] ** 2 > 1.0 - 1e-12

    def test_symmetric_perturbations_cannot_split(self, emanating):
        assert rest_zero_splitting(emanating, "A", "B") < 1e-10

    def test_2d_spectrum_symmetric_about_reference(self):
        lat = build_honeycomb(3, 4)
        # activate everything at a symmetric working point
        sched = activate_global(lat, "L0", "R0", Pulse(), 10.0, dw_min=0.4)
        H = sched.matrix_rest if hasattr(sched, "matrix_rest") else None
        H0, H1, env = sched.components()
        Hmid = H0 + float(env(0.5)) * H1
        vals = np.sort(np.linalg.eigvalsh(Hmid))
        assert np.max(np.abs(vals + vals[::-1])) < 1e-10


class TestObstruction:
    taus = np.arange(40.0, 800.0, 40.0)
    dws = (0.3, 0.45, 0.6)

    def test_dichotomy_and_ablation(self, emanating):
        opp = verify_obstruction(emanating, "A", "C", Pulse(), self.taus, self.dws,
                                 steps=4000)
        same = verify_obstruction(emanating, "A", "B", Pulse(), self.taus, self.dws,
                                  steps=4000)
        assert opp.parity_verdict == "feasible"
        assert same.parity_verdict == "obstructed"
        assert opp.max_fidelity > 0.9
        assert same.max_fidelity < 0.01
        assert same.rest_zero_splitting < 1e-10
        ablated = add_parity_breaking_edge(emanating, "A", "B", 0.05)
        broken = verify_obstruction(ablated, "A", "B", Pulse(), self.taus, self.dws,
                                    steps=4000)
        assert broken.max_fidelity > 0.01
