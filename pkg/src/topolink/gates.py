"""Composite two-qubit protocols on the network edge modes.

Each qubit is a three-level system {|0>, |1>, |a>} attached to one end of
the chain.  The target qubit exchanges its |1>/|a> population with the far
edge mode; the control qubit has the roles of |1> and |a> exchanged, which
makes a full Rabi cycle imprint a phase pi exactly when the control is in
|1> and a photon sits at its edge.  Gate register states live on the
product basis (control level, target level, photon slot) where the photon
slot is either empty or one of the 2L chain modes; the total excitation
number is conserved within every stage, so logical inputs never mix.

The composed controlled-phase sequence is

    pi_T  ->  transfer  ->  full Rabi on C  ->  transfer  ->  pi_T

and the exchange sequence wraps a single transfer in pi pulses and local
level swaps.  Local level swaps (and the level recodings used to express
the exchange on the {|0>, |1>} logical basis) are ideal instantaneous
unitaries; everything else is integrated numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import CachedPropagator, principal_phase
from .errors import SpecificationError
from .networks import NetworkSpec, build_ssh
from .protocols import ProtocolSchedule, Pulse

LEVELS = ("0", "1", "a")
#: bulk-admixture budget during a pi pulse before a warning is recorded
PULSE_ADMIXTURE_LIMIT = 1e-3


@dataclass(frozen=True)
class QubitSpec:
    """Placement and orientation of one qubit.

    ``emitting_level`` is the level that decays into the attached edge mode
    (|1> for the target qubit, |a> for the control, per the role exchange);
    the partner level is reached when the photon is emitted.
    """

    qubit_id: str            # "C" or "T"
    edge_mode: int           # photon mode index the qubit couples to
    emitting_level: str

    @property
    def absorbed_level(self) -> str:
        return "a" if self.emitting_level == "1" else "1"


def control_qubit(length: int) -> QubitSpec:
    return QubitSpec(qubit_id="C", edge_mode=0, emitting_level="a")


def target_qubit(length: int) -> QubitSpec:
    return QubitSpec(qubit_id="T", edge_mode=2 * length - 1, emitting_level="1")


class GateRegister:
    """Labeled basis bookkeeping for the coupled qubit-network system."""

    def __init__(self, length: int, labels: list[str] | None = None):
        self.length = int(length)
        self.modes = 2 * self.length
        self.slots = self.modes + 1  # photon slot 0 = vacuum
        self.dim = 9 * self.slots
        chain = labels or [str(i) for i in range(self.modes)]
        self.labels = [
            f"C={qc},T={qt},ph={'vac' if p == 0 else chain[p - 1]}"
            for qc in LEVELS for qt in LEVELS for p in range(self.slots)
        ]

    def index(self, qc: str, qt: str, photon: int | None = None) -> int:
        """Basis index; ``photon`` is a mode index or None for vacuum."""
        slot = 0 if photon is None else photon + 1
        return (LEVELS.index(qc) * 3 + LEVELS.index(qt)) * self.slots + slot

    def logical_indices(self) -> list[int]:
        """Vacuum-sector indices of the four logical states 00, 01, 10, 11."""
        return [self.index(qc, qt) for qc in "01" for qt in "01"]

    def logical_state(self, amplitudes) -> np.ndarray:
        """Embed a 4-vector over (00, 01, 10, 11) into the register."""
        amps = np.asarray(amplitudes, dtype=complex)
        if amps.shape != (4,):
            raise SpecificationError("logical state needs 4 amplitudes")
        psi = np.zeros(self.dim, dtype=complex)
        for k, idx in enumerate(self.logical_indices()):
            psi[idx] = amps[k]
        return psi


@dataclass
class StageRecord:
    name: str
    duration: float
    phase: float = float("nan")
    expected_phase: float = float("nan")
    max_bulk_admixture: float = float("nan")


@dataclass
class GateReport:
    """Composed-gate diagnostics: per-stage phase ledger, truth table, and
    fidelities; ``warnings`` collects adiabaticity or threshold breaches."""

    gate: str
    length: int
    stages: list[StageRecord]
    truth_table: np.ndarray
    fidelity: float
    transfer_fidelity: float
    local_phase: float = float("nan")
    state_fidelities: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    timeseries: np.ndarray | None = None
    timeseries_columns: list[str] = field(default_factory=list)


class GateEngine:
    """Builds and composes the stage unitaries of the gate protocols.

    The network idles at the decoupled point during qubit pulses, so the
    qubit-edge Rabi dynamics is exactly two-level there; pulse areas are
    calibrated as integral(g dt) = cycles * pi with a smooth bump envelope
    of duration >= 20 / (bulk gap) to respect the slow-pulse precondition.
    """

    def __init__(self, length: int, tbar: float = 1.0, *,
                 transfer_dw_min: float, transfer_tau: float,
                 transfer_steps: int | None = None,
                 pulse_duration: float | None = None, pulse_steps: int = 1200,
                 pulse: Pulse | None = None):
        self.length = int(length)
        self.tbar = float(tbar)
        self.register = GateRegister(length)
        self.spec = NetworkSpec(kind="ssh", length=length, w=0.0, t=tbar)
        self.rest_matrix = build_ssh(self.spec).entries
        bulk_gap = tbar  # decoupled-point gap of the dimerized chain
        self.pulse_duration = pulse_duration if pulse_duration is not None else 20.0 / bulk_gap
        self.pulse_steps = int(pulse_steps)
        self.pulse = pulse or Pulse()
        self.transfer_schedule = ProtocolSchedule(
            self.spec, self.pulse, transfer_tau, dw_min=transfer_dw_min)
        self.transfer_steps = transfer_steps
        self._transfer_cache: np.ndarray | None = None
        self._transfer_prop: CachedPropagator | None = None
        self.qubits = {"C": control_qubit(length), "T": target_qubit(length)}

    # -- subspace machinery ----------------------------------------------------

    def _pulse_subspace(self, qubit: QubitSpec) -> tuple[np.ndarray, np.ndarray]:
        """(H_static, V_coupling) on the (level, photon-slot) subspace."""
        slots = self.register.slots
        dim = 3 * slots
        Hs = np.zeros((dim, dim))
        for q in range(3):
            block = slice(q * slots + 1, (q + 1) * slots)
            Hs[block, block] = self.rest_matrix
        V = np.zeros((dim, dim))
        i_emit = LEVELS.index(qubit.emitting_level) * slots + 0
        i_abs = LEVELS.index(qubit.absorbed_level) * slots + 1 + qubit.edge_mode
        V[i_emit, i_abs] = V[i_abs, i_emit] = 1.0
        return Hs, V

    def _lift_t(self, U_sub: np.ndarray) -> np.ndarray:
        return np.kron(np.eye(3), U_sub)

    def _lift_c(self, U_sub: np.ndarray) -> np.ndarray:
        slots = self.register.slots
        U4 = U_sub.reshape(3, slots, 3, slots)
        full = np.einsum("apbq,ts->atpbsq", U4, np.eye(3))
        return full.reshape(self.register.dim, self.register.dim)

    def _lift(self, qubit_id: str, U_sub: np.ndarray) -> np.ndarray:
        return self._lift_t(U_sub) if qubit_id == "T" else self._lift_c(U_sub)

    def _reshape_for(self, qubit_id: str, psi: np.ndarray) -> np.ndarray:
        """View the register state as (subspace_dim, spectator_dim)."""
        slots = self.register.slots
        cube = psi.reshape(3, 3, slots)
        if qubit_id == "T":
            return cube.transpose(1, 2, 0).reshape(3 * slots, 3)
        return cube.transpose(0, 2, 1).reshape(3 * slots, 3)

    def _unshape_for(self, qubit_id: str, block: np.ndarray) -> np.ndarray:
        slots = self.register.slots
        if qubit_id == "T":
            cube = block.reshape(3, slots, 3).transpose(2, 0, 1)
        else:
            cube = block.reshape(3, slots, 3).transpose(0, 2, 1)
        return cube.reshape(self.register.dim)

    # -- stage builders ----------------------------------------------------------

    def pulse_propagator(self, qubit_id: str, cycles: float) -> CachedPropagator:
        qubit = self.qubits[qubit_id]
        Hs, V = self._pulse_subspace(qubit)
        gmax = 2.0 * cycles * math.pi / self.pulse_duration

        def envelope(s):
            return gmax * self.pulse(s)

        return CachedPropagator(Hs, V, envelope, self.pulse_steps)

    def transfer_propagator(self) -> CachedPropagator:
        if self._transfer_prop is None:
            sched = self.transfer_schedule
            H0, H1, env = sched.components()
            nsteps = self.transfer_steps
            if nsteps is None:
                nsteps = max(2000, math.ceil(20 * sched.tau * sched.hnorm_bound()))
            self._transfer_prop = CachedPropagator(H0, H1, env, nsteps)
        return self._transfer_prop

    def transfer_unitary(self) -> np.ndarray:
        """Photon-slot unitary of one edge-to-edge transfer (vacuum inert)."""
        if self._transfer_cache is None:
            U_net = self.transfer_propagator().propagate_matrix(self.transfer_schedule.tau)
            slots = self.register.slots
            U_ph = np.eye(slots, dtype=complex)
            U_ph[1:, 1:] = U_net
            self._transfer_cache = U_ph
        return self._transfer_cache

    def level_permutation(self, qubit_id: str, a: str, b: str) -> np.ndarray:
        """Ideal instantaneous exchange of two levels on one qubit."""
        P = np.eye(3)
        i, j = LEVELS.index(a), LEVELS.index(b)
        P[[i, j]] = P[[j, i]]
        slots = self.register.slots
        if qubit_id == "T":
            return np.kron(np.eye(3), np.kron(P, np.eye(slots)))
        return np.kron(P, np.eye(3 * slots))

    def pulse_edge_amplitude(self, qubit_id: str, cycles: float) -> complex:
        """Emission amplitude <absorbed, photon@edge | U_pulse | emitting, vac>.

        The pulse subspace Hamiltonian is real symmetric with a
        time-symmetric envelope, so the absorption amplitude equals this
        by transposition.
        """
        qubit = self.qubits[qubit_id]
        prop = self.pulse_propagator(qubit_id, cycles)
        U_sub = prop.propagate_matrix(self.pulse_duration)
        slots = self.register.slots
        i_emit = LEVELS.index(qubit.emitting_level) * slots + 0
        i_abs = LEVELS.index(qubit.absorbed_level) * slots + 1 + qubit.edge_mode
        return complex(U_sub[i_abs, i_emit])

    # -- stage application with time series ---------------------------------------

    def apply_pulse(self, qubit_id: str, cycles: float, psi: np.ndarray,
                    n_frames: int = 0):
        """Evolve the register through one pulse; returns (psi, frames, admix).

        ``admix`` is the maximal population outside the edge modes and
        qubit levels reached while the pulse acts (adiabaticity monitor).
        """
        prop = self.pulse_propagator(qubit_id, cycles)
        block = self._reshape_for(qubit_id, psi)
        frames = []
        admix = 0.0
        frame_ids = set(np.linspace(0, prop.steps - 1, n_frames).astype(int)) if n_frames else set()
        dt = self.pulse_duration / prop.steps
        bulk = self._bulk_mask()
        for k in range(prop.steps):
            Vk = prop.eigvecs[k]
            block = Vk @ (np.exp(-1j * prop.eigvals[k] * dt)[:, None] * (Vk.T @ block))
            full = self._unshape_for(qubit_id, block)
            admix = max(admix, float(np.sum(np.abs(full[bulk]) ** 2)))
            if k in frame_ids:
                frames.append((dt * (k + 1), full.copy()))
        return self._unshape_for(qubit_id, block), frames, admix

    def apply_transfer(self, psi: np.ndarray, n_frames: int = 0):
        prop = self.transfer_propagator()
        sched = self.transfer_schedule
        slots = self.register.slots
        cube = psi.reshape(9, slots).T.copy()  # (slots, 9)
        vac = cube[0].copy()
        block = cube[1:]
        frames = []
        frame_ids = set(np.linspace(0, prop.steps - 1, n_frames).astype(int)) if n_frames else set()
        dt = sched.tau / prop.steps
        for k in range(prop.steps):
            Vk = prop.eigvecs[k]
            block = Vk @ (np.exp(-1j * prop.eigvals[k] * dt)[:, None] * (Vk.T @ block))
            if k in frame_ids:
                out = np.vstack([vac, block]).T.reshape(-1)
                frames.append((dt * (k + 1), out.copy()))
        out = np.vstack([vac, block]).T.reshape(-1).copy()
        return out, frames

    def _bulk_mask(self) -> np.ndarray:
        """Register indices carrying a photon in a non-edge chain mode."""
        mask = np.zeros(self.register.dim, dtype=bool)
        for qc in LEVELS:
            for qt in LEVELS:
                for mode in range(1, self.register.modes - 1):
                    mask[self.register.index(qc, qt, mode)] = True
        return mask


# ---------------------------------------------------------------------------
# operation surface
# ---------------------------------------------------------------------------


def pi_pulse(engine: GateEngine, psi: np.ndarray, qubit_id: str,
             cycles: float = 0.5) -> tuple[np.ndarray, float]:
    """Apply a qubit-edge pulse of the given cycle count to a register state.

    cycles = 1/2 is the population-transfer pi pulse; cycles = 1 is the full
    Rabi cycle (phase pi on the coupled doublet).  Returns the evolved state
    and the maximal bulk admixture reached during the pulse.
    """
    out, _, admix = engine.apply_pulse(qubit_id, cycles, psi)
    return out, admix


def transfer_primitive(engine: GateEngine, psi: np.ndarray) -> np.ndarray:
    """Exchange the edge-mode occupations through the network (qubits idle)."""
    out, _ = engine.apply_transfer(psi)
    return out


def transfer_phase_expected(length: int) -> float:
    """Ideal per-excitation transfer phase pi/2 + L*pi, wrapped."""
    return principal_phase(math.pi / 2 + length * math.pi)


_CP_LEDGER_NAMES = ("pi_T", "transfer", "full_rabi_C", "transfer", "pi_T")


def _cp_checkpoints(reg: GateRegister):
    edge_t = reg.modes - 1
    return [
        reg.index("1", "a", edge_t),
        reg.index("1", "a", 0),
        reg.index("1", "a", 0),
        reg.index("1", "a", edge_t),
        reg.index("1", "1"),
    ]


def cp_gate(engine: GateEngine, n_frames: int = 0,
            fidelity_budget: float = 0.05) -> GateReport:
    """Run the composed controlled-phase sequence.

    Returns the logical truth table (global phase removed), the per-stage
    phase ledger measured along the |1,1> path, and the gate fidelity
    against diag(1, 1, 1, -1).  Exceeding the accumulated infidelity budget
    marks the report with a failed-gate warning rather than silently
    accepting it.
    """
    reg = engine.register
    L = engine.length
    stages = [("pi_T", 0.5), ("transfer", None), ("full_rabi_C", 1.0),
              ("transfer", None), ("pi_T", 0.5)]
    expected = [-math.pi / 2, transfer_phase_expected(L), math.pi,
                transfer_phase_expected(L), -math.pi / 2]

    # full unitary, assembled stage by stage
    U = np.eye(reg.dim, dtype=complex)
    for name, cycles in stages:
        if name == "transfer":
            U_stage = np.kron(np.eye(9), engine.transfer_unitary())
        else:
            qubit_id = name[-1]
            prop = engine.pulse_propagator(qubit_id, cycles)
            U_stage = engine._lift(qubit_id, prop.propagate_matrix(engine.pulse_duration))
        U = U_stage @ U

    # ledger + time series along the |1,1> input
    psi = reg.logical_state([0, 0, 0, 1])
    records = []
    checkpoints = _cp_checkpoints(reg)
    warnings = []
    prev_angle = 0.0
    t_offset = 0.0
    series = []
    track = {
        "qubit_T": reg.index("1", "1"),
        "edge_T": reg.index("1", "a", reg.modes - 1),
        "edge_C": reg.index("1", "a", 0),
        "absorbed_C": reg.index("a", "a"),
    }
    for (name, cycles), expect, chk in zip(stages, expected, checkpoints):
        if name == "transfer":
            psi, frames = engine.apply_transfer(psi, n_frames)
            duration = engine.transfer_schedule.tau
            admix = float("nan")
        else:
            psi, frames, admix = engine.apply_pulse(name[-1], cycles, psi, n_frames)
            duration = engine.pulse_duration
            if admix > PULSE_ADMIXTURE_LIMIT:
                warnings.append(f"{name}: bulk admixture {admix:.2e} above {PULSE_ADMIXTURE_LIMIT}")
        for t, full in frames:
            series.append([t_offset + t] + [abs(full[i]) ** 2 for i in track.values()]
                          + [principal_phase(float(np.angle(full[chk])))])
        amp = psi[chk]
        angle = float(np.angle(amp))
        records.append(StageRecord(
            name=name, duration=duration,
            phase=principal_phase(angle - prev_angle),
            expected_phase=principal_phase(expect),
            max_bulk_admixture=admix,
        ))
        prev_angle = angle
        t_offset += duration

    logical = np.array(reg.logical_indices())
    G = U[np.ix_(logical, logical)]
    global_phase = G[0, 0] / abs(G[0, 0])
    G = G / global_phase
    target = np.diag([1.0, 1.0, 1.0, -1.0])
    fidelity = float(abs(np.trace(target.conj().T @ G)) ** 2 / 16.0)
    if 1.0 - fidelity > fidelity_budget:
        warnings.append(
            f"accumulated infidelity {1 - fidelity:.3e} exceeds budget {fidelity_budget}")

    # one-transfer fidelity for the report
    U_ph = engine.transfer_unitary()
    transfer_fid = float(abs(U_ph[1, reg.modes]) ** 2)

    return GateReport(
        gate="cp",
        length=L,
        stages=records,
        truth_table=G,
        fidelity=fidelity,
        transfer_fidelity=transfer_fid,
        warnings=warnings,
        timeseries=np.array(series) if series else None,
        timeseries_columns=["t"] + list(track.keys()) + ["phase_11_path"],
    )


def swap_gate(engine: GateEngine, n_random_states: int = 6, seed: int = 7,
              fidelity_budget: float = 0.05) -> GateReport:
    """Run the composed exchange sequence on the logical {|0>, |1>} basis.

    The published sequence exchanges the qubits' {|1>, |a>} submanifolds (a
    qubit's |0> population can never move: no primitive couples it), so the
    logical exchange conjugates the sequence by ideal local recodings
    |0> <-> |a> on both qubits.  The |1,1> component sends both qubit
    contents through the network at once; its amplitude is composed from
    the simulated single-excitation pieces by the linearity of the network
    (two-photon transfer amplitude = permanent of the single-particle edge
    block, cross-checked exactly at L=2 by
    :func:`two_boson_transfer_amplitude`).  The per-excitation phase
    (+-pi/2, parity of L) left by the transfer is removed by an ideal local
    phase gate measured from the composed unitary and recorded in the
    report.
    """
    reg = engine.register
    core = [
        ("A_C", None), ("pi_T", 0.5), ("pi_C", 0.5), ("transfer", None),
        ("pi_C", 0.5), ("pi_T", 0.5), ("A_C", None),
    ]
    U = np.eye(reg.dim, dtype=complex)
    records = []
    warnings = []
    for name, cycles in core:
        if name == "transfer":
            U_stage = np.kron(np.eye(9), engine.transfer_unitary())
            duration = engine.transfer_schedule.tau
            admix = float("nan")
        elif name.startswith("A_"):
            U_stage = engine.level_permutation(name[-1], "1", "a")
            duration, admix = 0.0, float("nan")
        else:
            qubit_id = name[-1]
            prop = engine.pulse_propagator(qubit_id, cycles)
            U_stage = engine._lift(qubit_id, prop.propagate_matrix(engine.pulse_duration))
            duration = engine.pulse_duration
            admix = float("nan")
        U = U_stage @ U
        records.append(StageRecord(name=name, duration=duration, max_bulk_admixture=admix))

    # conjugate by the logical recoding |0> <-> |a| on both qubits
    R = engine.level_permutation("C", "0", "a") @ engine.level_permutation("T", "0", "a")
    U_logical_frame = R @ U @ R

    logical = np.array(reg.logical_indices())
    G = U_logical_frame[np.ix_(logical, logical)]

    # |1,1>: two excitations traverse the single transfer together.  Compose
    # the amplitude from the simulated stage pieces: pulse emission and
    # absorption amplitudes times the bosonic two-photon exchange amplitude
    # (permanent of the single-particle edge block).
    a_emit_t = engine.pulse_edge_amplitude("T", 0.5)
    a_emit_c = engine.pulse_edge_amplitude("C", 0.5)
    U_ph_edge = engine.transfer_unitary()
    e_c, e_t = 1, reg.modes  # slots of the two edge modes
    perm = (U_ph_edge[e_c, e_c] * U_ph_edge[e_t, e_t]
            + U_ph_edge[e_c, e_t] * U_ph_edge[e_t, e_c])
    G[3, :] = 0.0
    G[:, 3] = 0.0
    G[3, 3] = a_emit_t**2 * a_emit_c**2 * perm

    phase00 = G[0, 0] / abs(G[0, 0])
    G = G / phase00
    # single-excitation local phase left by the transfer: measured, not assumed
    theta = float(np.angle(G[2, 1]))  # |01> -> |10> component
    D = np.diag([1.0, np.exp(-1j * theta)])
    G_corrected = np.kron(D, D) @ G

    swap = np.zeros((4, 4))
    swap[0, 0] = swap[3, 3] = swap[1, 2] = swap[2, 1] = 1.0
    fidelity = float(abs(np.trace(swap.T @ G_corrected)) ** 2 / 16.0)
    if 1.0 - fidelity > fidelity_budget:
        warnings.append(
            f"accumulated infidelity {1 - fidelity:.3e} exceeds budget {fidelity_budget}")

    rng = np.random.default_rng(seed)
    state_fidelities = []
    for _ in range(n_random_states):
        amps = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        amps /= np.linalg.norm(amps)
        out = G_corrected @ amps
        want = swap @ amps
        state_fidelities.append(float(abs(np.vdot(want, out)) ** 2))

    U_ph = engine.transfer_unitary()
    transfer_fid = float(abs(U_ph[1, reg.modes]) ** 2)
    return GateReport(
        gate="swap",
        length=engine.length,
        stages=records,
        truth_table=G_corrected,
        fidelity=fidelity,
        transfer_fidelity=transfer_fid,
        local_phase=theta,
        state_fidelities=state_fidelities,
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# two-excitation cross-check (linearity argument)
# ---------------------------------------------------------------------------


def two_boson_transfer_amplitude(length: int, dw_min: float, tau: float,
                                 steps: int | None = None) -> tuple[complex, complex]:
    """Amplitude for photons on both edges to swap, exactly vs. permanent.

    Builds the bosonic two-excitation sector of the bare network transfer
    and compares the edge-pair -> edge-pair amplitude against the permanent
    of the single-particle propagator restricted to the edge modes (the
    linearity argument).  Returns (exact, permanent).
    """
    spec = NetworkSpec(kind="ssh", length=length, w=0.0, t=1.0)
    sched = ProtocolSchedule(spec, Pulse(), tau, dw_min=dw_min)
    H0, H1, env = sched.components()
    d = 2 * length
    nsteps = steps if steps is not None else max(2000, math.ceil(20 * tau * sched.hnorm_bound()))

    # single-particle propagator
    prop = CachedPropagator(H0, H1, env, nsteps)
    U1 = prop.propagate_matrix(tau)
    perm = U1[0, 0] * U1[d - 1, d - 1] + U1[0, d - 1] * U1[d - 1, 0]

    # two-boson occupation basis
    pairs = [(i, j) for i in range(d) for j in range(i, d)]
    pos = {pq: k for k, pq in enumerate(pairs)}

    def lift(H):
        """Second-quantized bosonic lift of a one-body matrix to two bosons."""
        H2 = np.zeros((len(pairs), len(pairs)))
        for k, (i, j) in enumerate(pairs):
            H2[k, k] += H[i, i] + H[j, j]
            occ = {i: 2} if i == j else {i: 1, j: 1}
            for q, nq in occ.items():
                for p in range(d):
                    if p == q or H[p, q] == 0.0:
                        continue
                    new = dict(occ)
                    new[q] -= 1
                    if new[q] == 0:
                        del new[q]
                    amp = H[p, q] * math.sqrt(nq) * math.sqrt(new.get(p, 0) + 1)
                    new[p] = new.get(p, 0) + 1
                    modes = sorted(m for m, c in new.items() for _ in range(c))
                    H2[pos[(modes[0], modes[1])], k] += amp
        return H2

    H2_0 = lift(H0)
    H2_1 = lift(H1)
    prop2 = CachedPropagator(H2_0, H2_1, env, nsteps)
    U2 = prop2.propagate_matrix(tau)
    k0 = pos[(0, d - 1)]
    return complex(U2[k0, k0]), complex(perm)
