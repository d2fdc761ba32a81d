"""Higher-level numerical studies built on the dynamics engine.

These routines orchestrate many evolutions: locating the outermost
high-fidelity branch in the (tau, amplitude) plane, scanning for the
optimal distance from criticality, loss-scaling runs, and quenched-disorder
ensembles with per-realization retuning of the protocol time.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import CachedPropagator, TransferReport, evolve, guard_steps, principal_phase
from .errors import SpecificationError
from .networks import (
    PH_BREAKING,
    DisorderConfig,
    NetworkSpec,
    draw_disorder,
)
from .protocols import ProtocolSchedule, Pulse

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class BranchPoint:
    """One point on a constant-round-trip branch of high transfer."""

    param: float
    tau: float
    fidelity: float
    phase: float
    edge_weight: float


def _golden_max(fn, lo: float, hi: float, rel_tol: float) -> float:
    """Golden-section maximizer of a unimodal-enough scalar function."""
    a, b = float(lo), float(hi)
    c1 = b - _GOLDEN * (b - a)
    c2 = a + _GOLDEN * (b - a)
    f1, f2 = fn(c1), fn(c2)
    while (b - a) > rel_tol * 0.5 * (abs(a) + abs(b)):
        if f1 > f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - _GOLDEN * (b - a)
            f1 = fn(c1)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + _GOLDEN * (b - a)
            f2 = fn(c2)
    return 0.5 * (a + b)


def _first_branch_peak(prop: CachedPropagator, schedule_at, taus: np.ndarray,
                       psi0: np.ndarray, threshold: float):
    """Smallest-tau local maximum of fidelity above the threshold."""
    tgt = schedule_at(taus[0]).edge_states()[1]
    psis = prop.propagate_batch(taus, psi0)
    fids = np.abs(psis @ tgt.conj()) ** 2

    def fid(tau):
        psi, _ = prop.propagate(tau, psi0)
        return abs(np.vdot(tgt, psi)) ** 2

    for i in range(1, len(taus) - 1):
        if fids[i] > threshold and fids[i] >= fids[i - 1] and fids[i] >= fids[i + 1]:
            tau_star = _golden_max(fid, taus[i - 1], taus[i + 1], 1e-4)
            return tau_star
    return None


def outermost_branch(schedule_factory, param_values, tau_lo: float, tau_hi: float,
                     n_tau: int = 40, threshold: float = 0.8,
                     steps: int | None = None, workers: int = 1) -> list[BranchPoint]:
    """Locate the fastest high-fidelity branch for each parameter value.

    For every amplitude parameter the fidelity is scanned over an ascending
    tau grid; the first local maximum above the threshold is refined by
    golden section.  The outermost branch is the smallest-tau one, i.e. the
    single-traversal transfer.  Parameters whose scan never crosses the
    threshold are skipped.
    """
    taus = np.linspace(tau_lo, tau_hi, n_tau)

    def run(param) -> BranchPoint | None:
        sched = schedule_factory(param, tau_hi)
        nsteps = steps if steps is not None else guard_steps(tau_hi, sched.hnorm_bound())
        H0, H1, env = sched.components()
        prop = CachedPropagator(H0, H1, env, nsteps)
        src, _ = sched.edge_states()
        tau_star = _first_branch_peak(prop, lambda tau: schedule_factory(param, tau),
                                      taus, src, threshold)
        if tau_star is None:
            return None
        rep = evolve(schedule_factory(param, tau_star), steps=nsteps, propagator=prop)
        return BranchPoint(param=float(param), tau=float(tau_star), fidelity=rep.fidelity,
                           phase=rep.phase, edge_weight=rep.edge_weight)

    if workers <= 1:
        points = [run(p) for p in param_values]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(run, param_values))
    return [p for p in points if p is not None]


def optimum_scan(spec: NetworkSpec, pulse: Pulse, tau: float,
                 dw_values, steps: int | None = None, workers: int = 1) -> list[TransferReport]:
    """Transfer reports along a scan of the distance from criticality."""

    def run(dw):
        sched = ProtocolSchedule(spec, pulse, tau, dw_min=float(dw))
        return evolve(sched, steps=steps)

    if workers <= 1:
        return [run(dw) for dw in dw_values]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, dw_values))


def simulated_loss(length: int, tau: float, dw_min: float, pulse: Pulse | None = None,
                   tbar: float = 1.0, steps: int | None = None) -> float:
    """Bulk loss 1 - E of a plain transfer run (no retuning)."""
    pulse = pulse or Pulse()
    spec = NetworkSpec(kind="ssh", length=length, w=0.0, t=tbar)
    rep = evolve(ProtocolSchedule(spec, pulse, tau, dw_min=dw_min), steps=steps)
    return max(0.0, 1.0 - rep.edge_weight)


# ---------------------------------------------------------------------------
# disorder ensemble with per-realization retuning
# ---------------------------------------------------------------------------


@dataclass
class DisorderRealizations:
    """Per-realization outcomes plus ensemble statistics."""

    p: float
    klass: str
    rows: list[dict]

    @property
    def mean_fidelity(self) -> float:
        return float(np.mean([r["fidelity"] for r in self.rows]))

    @property
    def std_fidelity(self) -> float:
        return float(np.std([r["fidelity"] for r in self.rows]))

    @property
    def mean_edge_weight(self) -> float:
        return float(np.mean([r["edge_weight"] for r in self.rows]))

    @property
    def std_edge_weight(self) -> float:
        return float(np.std([r["edge_weight"] for r in self.rows]))

    @property
    def total_resamples(self) -> int:
        return int(sum(r["resamples"] for r in self.rows))


def disorder_transfer_study(spec: NetworkSpec, pulse: Pulse, dw_min: float,
                            cfg: DisorderConfig, tau0: float,
                            window: tuple[float, float] = (0.5, 2.0),
                            retune_tol: float = 1e-2,
                            steps: int | None = None, workers: int = 1,
                            coarse: int = 16) -> DisorderRealizations:
    """Quenched-disorder ensemble with per-realization protocol-time retuning.

    Each realization draws multiplicative coupling factors (and diagonal
    offsets for the PH-breaking class) reproducibly from (seed, index), then
    maximizes the transfer fidelity over tau in ``[window[0]*tau0,
    window[1]*tau0]`` by a coarse scan plus golden-section refinement to the
    given relative tolerance.  Realizations are independent, so the ensemble
    parallelizes by index with a deterministic result order.
    """
    if spec.kind != "ssh":
        raise SpecificationError("disorder transfer study expects the ssh layout")
    L = spec.length
    tau_lo, tau_hi = window[0] * tau0, window[1] * tau0
    base = ProtocolSchedule(spec, pulse, tau0, dw_min=dw_min)
    H0, H1, env = base.components()
    src, tgt = base.edge_states()
    nsteps = steps if steps is not None else guard_steps(tau_hi, base.hnorm_bound())
    delta_scale = cfg.delta_scale if cfg.delta_scale is not None else 1.0

    wi, wj = np.arange(L) * 2, np.arange(L) * 2 + 1
    ti, tj = np.arange(L - 1) * 2 + 1, np.arange(L - 1) * 2 + 2

    def run(index: int) -> dict:
        draw = draw_disorder(cfg, index, L, L - 1, 2 * L, delta_scale)
        H0d = H0.copy()
        H0d[ti, tj] *= draw.t_factors
        H0d[tj, ti] = H0d[ti, tj]
        H0d[np.diag_indices(2 * L)] += draw.diag_offsets
        H1d = H1.copy()
        H1d[wi, wj] *= draw.w_factors
        H1d[wj, wi] = H1d[wi, wj]
        prop = CachedPropagator(H0d, H1d, env, nsteps)

        def fid(tau):
            psi, _ = prop.propagate(tau, src.astype(complex))
            return abs(np.vdot(tgt, psi)) ** 2

        taus = np.linspace(tau_lo, tau_hi, coarse)
        fids = np.abs(prop.propagate_batch(taus, src.astype(complex)) @ tgt.conj()) ** 2
        k = int(np.argmax(fids))
        lo = taus[max(0, k - 1)]
        hi = taus[min(len(taus) - 1, k + 1)]
        tau_opt = _golden_max(fid, lo, hi, retune_tol)
        psi, _ = prop.propagate(tau_opt, src.astype(complex))
        amp = complex(np.vdot(tgt, psi))
        return {
            "index": index,
            "tau": float(tau_opt),
            "fidelity": abs(amp) ** 2,
            "phase": principal_phase(math.atan2(amp.imag, amp.real)),
            "edge_weight": abs(amp) ** 2 + abs(np.vdot(src, psi)) ** 2,
            "resamples": draw.resamples,
        }

    indices = list(range(cfg.count))
    if workers <= 1:
        rows = [run(i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, indices))
    return DisorderRealizations(p=cfg.p, klass=cfg.klass, rows=rows)
