"""Coupling-matrix builders for the four network variants plus quenched disorder.

All networks live in the single-excitation sector, so each variant is fully
described by a real symmetric matrix over a labeled mode basis.  The dimerized
chain ("ssh") alternates intra-cell couplings ``w_i`` (globally tunable) with
inter-cell couplings ``t_i``; its rotated cousin ("mc") carries the tunable
parameter on sublattice eigenfrequencies instead; "barrier" and "prop" are the
topologically trivial baselines (tunnelling barrier and free propagation).

Basis ordering is fixed as (1, 1b, 2, 2b, ...) throughout the package; all
file exports use the same ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from .errors import SpecificationError

KINDS = ("ssh", "mc", "barrier", "prop")

#: tolerance for the symmetry check on constructed matrices
SYMMETRY_TOL = 1e-12


def _as_vector(value, length: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(length, arr[0])
    if arr.shape != (length,):
        raise SpecificationError(f"{name} must have length {length}, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class NetworkSpec:
    """Declarative description of a network instance.

    Parameters
    ----------
    kind : str
        One of ``ssh``, ``mc``, ``barrier``, ``prop``.
    length : int
        Number of unit cells L (> 0).
    w : float or array
        Intra-cell couplings, broadcast to length L.
    t : float or array
        Inter-cell couplings, broadcast to length L-1.
    delta : float
        Uniform mode energy.  Defaults to 0: a uniform diagonal shift only
        contributes a global phase in the single-excitation sector, so the
        simulation frame absorbs it (nonzero values remain supported for
        shift-invariance checks).
    omega : float or array, optional
        Per-mode energies (length 2L), defaulting to ``delta`` everywhere.
    omega_edge, omega_barrier : float
        Barrier layout only: end-mode and interior-mode energies.
    domega : float
        "mc" only: sublattice eigenfrequency difference (tunable parameter).
    """

    kind: str
    length: int
    w: np.ndarray = 0.0
    t: np.ndarray = 1.0
    delta: float = 0.0
    omega: np.ndarray | None = None
    omega_edge: float = 0.0
    omega_barrier: float = 0.0
    domega: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecificationError(f"unknown network kind {self.kind!r}, expected one of {KINDS}")
        if not isinstance(self.length, (int, np.integer)) or self.length < 1:
            raise SpecificationError(f"length must be a positive integer, got {self.length!r}")
        L = int(self.length)
        object.__setattr__(self, "length", L)
        object.__setattr__(self, "w", _as_vector(self.w, L, "w"))
        object.__setattr__(self, "t", _as_vector(self.t, max(L - 1, 0), "t"))
        omega = self.delta if self.omega is None else self.omega
        object.__setattr__(self, "omega", _as_vector(omega, 2 * L, "omega"))
        if self.kind in ("barrier", "prop"):
            couplings = np.concatenate([self.w, self.t])
            if couplings.size and not np.allclose(couplings, couplings[0], atol=1e-15):
                raise SpecificationError(f"{self.kind} layout requires uniform couplings")

    @property
    def dim(self) -> int:
        """Single-excitation dimension: 2L, or 2L+2 for the barrier layout."""
        return 2 * self.length + (2 if self.kind == "barrier" else 0)

    def is_ph_symmetric(self) -> bool:
        """True when every mode energy equals delta (the symmetry constraint)."""
        return bool(np.all(self.omega == self.delta))

    def with_couplings(self, w=None, t=None) -> "NetworkSpec":
        kw = {}
        if w is not None:
            kw["w"] = w
        if t is not None:
            kw["t"] = t
        return replace(self, **kw)


@dataclass
class CouplingMatrix:
    """Dense real-symmetric single-particle matrix with basis metadata.

    ``parity`` stores the sublattice sign of each mode; the instance only
    *claims* the diagonal sublattice symmetry (off-diagonal couplings joining
    opposite signs, uniform diagonal) when ``claims_sublattice`` is set.
    ``reference_energy`` is the energy the edge modes are pinned to (delta,
    or omega_edge for the barrier layout).
    """

    entries: np.ndarray
    basis_labels: list[str]
    parity: np.ndarray
    kind: str
    claims_sublattice: bool = False
    reference_energy: float = 0.0
    resample_count: int = 0

    def __post_init__(self):
        H = np.asarray(self.entries, dtype=float)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise SpecificationError(f"matrix must be square, got {H.shape}")
        if len(self.basis_labels) != H.shape[0]:
            raise SpecificationError("basis_labels length does not match matrix dimension")
        asym = np.max(np.abs(H - H.T)) if H.size else 0.0
        if asym > SYMMETRY_TOL:
            raise SpecificationError(f"matrix asymmetry {asym:.3e} exceeds {SYMMETRY_TOL}")
        self.entries = H
        self.parity = np.asarray(self.parity, dtype=int)
        if self.claims_sublattice:
            off = H - np.diag(np.diag(H))
            same = np.abs(off[np.equal.outer(self.parity, self.parity)])
            if same.size and same.max() > SYMMETRY_TOL:
                raise SpecificationError(
                    "claimed sublattice symmetry violated: coupling between equal-parity modes"
                )

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def _chain_labels(L: int) -> list[str]:
    out = []
    for i in range(1, L + 1):
        out += [f"{i}", f"{i}b"]
    return out


def build_ssh(spec: NetworkSpec) -> CouplingMatrix:
    """Dimerized-chain matrix: w_i joins (i, ib), t_i joins (ib, i+1).

    The parity vector alternates +1/-1; with the diagonal shifted by delta
    the matrix anticommutes with the parity operator, which forces the
    eigenvalues into pairs symmetric about delta.
    """
    if spec.kind != "ssh":
        raise SpecificationError(f"build_ssh requires kind 'ssh', got {spec.kind!r}")
    d = spec.dim
    H = np.zeros((d, d))
    for i in range(spec.length):
        H[2 * i, 2 * i + 1] = H[2 * i + 1, 2 * i] = spec.w[i]
    for i in range(spec.length - 1):
        H[2 * i + 1, 2 * i + 2] = H[2 * i + 2, 2 * i + 1] = spec.t[i]
    H[np.diag_indices(d)] = spec.omega
    parity = np.tile([1, -1], spec.length)
    return CouplingMatrix(
        entries=H,
        basis_labels=_chain_labels(spec.length),
        parity=parity,
        kind="ssh",
        claims_sublattice=spec.is_ph_symmetric(),
        reference_energy=spec.delta,
    )


def build_mc(spec: NetworkSpec) -> CouplingMatrix:
    """Two-leg network with a tunable sublattice eigenfrequency offset.

    Construction: rotate each dimer of the ssh chain by 45 degrees,
    (u_i, v_i) = (b_i +/- b_ib)/sqrt(2).  The intra-cell coupling becomes a
    leg-energy offset (u at delta + domega/2, v at delta - domega/2) and the
    inter-cell coupling becomes a fixed four-link pattern of strength t/2
    with signs (+, +, -, -).  The rotation is orthogonal, so the spectrum
    equals the ssh spectrum at matched parameters w = domega/2 (checked
    numerically in the tests rather than assumed).
    """
    if spec.kind != "mc":
        raise SpecificationError(f"build_mc requires kind 'mc', got {spec.kind!r}")
    if not spec.is_ph_symmetric():
        raise SpecificationError("mc layout requires uniform mode energies")
    L, d = spec.length, spec.dim
    H = np.zeros((d, d))
    for i in range(L):
        H[2 * i, 2 * i] = spec.delta + spec.domega / 2.0
        H[2 * i + 1, 2 * i + 1] = spec.delta - spec.domega / 2.0
    for i in range(L - 1):
        half = spec.t[i] / 2.0
        u, v, u2, v2 = 2 * i, 2 * i + 1, 2 * i + 2, 2 * i + 3
        for (a, b, s) in ((u, u2, +1), (u, v2, +1), (v, u2, -1), (v, v2, -1)):
            H[a, b] = H[b, a] = s * half
    labels = []
    for i in range(1, L + 1):
        labels += [f"{i}u", f"{i}v"]
    parity = np.tile([1, -1], L)
    return CouplingMatrix(
        entries=H,
        basis_labels=labels,
        parity=parity,
        kind="mc",
        claims_sublattice=False,  # the protecting symmetry is a leg swap, not a diagonal parity
        reference_energy=spec.delta,
    )


def build_barrier(spec: NetworkSpec) -> CouplingMatrix:
    """Tunnelling-barrier chain: 2L interior modes at omega_barrier between
    two end modes at omega_edge, uniform nearest-neighbour coupling.

    Returns a (2L+2)-dimensional matrix.  ``omega_barrier <= omega_edge``
    is permitted but leaves the "edge" modes inside the barrier band; the
    caller is expected to treat the built instance as degenerate (the
    builder records the condition in ``CouplingMatrix.kind`` metadata via
    the `warn_barrier_band` helper below).
    """
    if spec.kind != "barrier":
        raise SpecificationError(f"build_barrier requires kind 'barrier', got {spec.kind!r}")
    d = spec.dim
    tbar = float(spec.t[0]) if spec.length > 1 else float(spec.w[0])
    H = np.zeros((d, d))
    for i in range(d - 1):
        H[i, i + 1] = H[i + 1, i] = tbar
    H[np.diag_indices(d)] = spec.omega_barrier
    H[0, 0] = H[-1, -1] = spec.omega_edge
    labels = ["eL"] + [f"b{i}" for i in range(1, d - 1)] + ["eR"]
    parity = np.array([1, -1] * (d // 2))[:d]
    return CouplingMatrix(
        entries=H,
        basis_labels=labels,
        parity=parity,
        kind="barrier",
        claims_sublattice=False,
        reference_energy=spec.omega_edge,
    )


def warn_barrier_band(spec: NetworkSpec) -> str | None:
    """Warning record when the barrier does not sit above the edge level."""
    if spec.kind == "barrier" and spec.omega_barrier <= spec.omega_edge:
        return (
            f"omega_barrier={spec.omega_barrier} <= omega_edge={spec.omega_edge}: "
            "end modes are not below the barrier band"
        )
    return None


def build_prop(spec: NetworkSpec) -> CouplingMatrix:
    """Uniform chain at fixed mode energy; every coupling equals the
    instantaneous uniform value (free-propagation baseline)."""
    if spec.kind != "prop":
        raise SpecificationError(f"build_prop requires kind 'prop', got {spec.kind!r}")
    d = spec.dim
    tbar = float(spec.w[0])
    H = np.zeros((d, d))
    for i in range(d - 1):
        H[i, i + 1] = H[i + 1, i] = tbar
    H[np.diag_indices(d)] = spec.omega
    parity = np.tile([1, -1], spec.length)
    return CouplingMatrix(
        entries=H,
        basis_labels=_chain_labels(spec.length),
        parity=parity,
        kind="prop",
        claims_sublattice=spec.is_ph_symmetric(),
        reference_energy=spec.delta,
    )


_BUILDERS = {"ssh": build_ssh, "mc": build_mc, "barrier": build_barrier, "prop": build_prop}


def build_network(spec: NetworkSpec) -> CouplingMatrix:
    """Dispatch to the builder matching ``spec.kind``."""
    return _BUILDERS[spec.kind](spec)


# ---------------------------------------------------------------------------
# quenched disorder
# ---------------------------------------------------------------------------

PH_SYMMETRIC = "ph_symmetric"
PH_BREAKING = "ph_breaking"


@dataclass(frozen=True)
class DisorderConfig:
    """Ensemble description for quenched Gaussian disorder.

    ``p`` is the dimensionless standard deviation: couplings are drawn with
    mean equal to their clean value and standard deviation ``p * |clean|``.
    The PH-breaking class additionally shifts mode energies by Gaussian
    offsets of standard deviation ``p * delta_scale`` (delta_scale defaults
    to the instance's reference energy).  Realizations are reproducible from
    ``(seed, index)`` alone, so they may be generated in parallel by index.
    """

    p: float
    klass: str = PH_SYMMETRIC
    seed: int = 0
    count: int = 1
    delta_scale: float | None = None

    def __post_init__(self):
        if not 0 <= self.p < 1:
            raise SpecificationError(
                f"disorder strength p={self.p} outside [0, 1); couplings must stay sign-stable"
            )
        if self.klass not in (PH_SYMMETRIC, PH_BREAKING):
            raise SpecificationError(f"unknown disorder class {self.klass!r}")
        if self.count < 1:
            raise SpecificationError("sample count must be positive")


@dataclass
class DisorderDraw:
    """One realization's multiplicative coupling factors and diagonal offsets."""

    w_factors: np.ndarray
    t_factors: np.ndarray
    diag_offsets: np.ndarray
    resamples: int


def draw_disorder(cfg: DisorderConfig, index: int, n_w: int, n_t: int, dim: int,
                  delta_scale: float) -> DisorderDraw:
    """Draw realization ``index`` of the ensemble.

    Coupling factors are N(1, p^2) with non-positive samples rejected and
    redrawn (keeps the distribution unbiased near its mean; the resample
    count is recorded).  Diagonal offsets are N(0, (p*delta_scale)^2) for
    the PH-breaking class and exactly zero otherwise.
    """
    rng = np.random.default_rng((int(cfg.seed), int(index)))
    resamples = 0

    def positive(n):
        nonlocal resamples
        out = 1.0 + cfg.p * rng.standard_normal(n)
        bad = out <= 0
        while bad.any():
            resamples += int(bad.sum())
            out[bad] = 1.0 + cfg.p * rng.standard_normal(int(bad.sum()))
            bad = out <= 0
        return out

    w_factors = positive(n_w)
    t_factors = positive(n_t)
    if cfg.klass == PH_BREAKING:
        diag = cfg.p * delta_scale * rng.standard_normal(dim)
    else:
        diag = np.zeros(dim)
    return DisorderDraw(w_factors, t_factors, diag, resamples)


def apply_disorder(matrix: CouplingMatrix, cfg: DisorderConfig,
                   spec: NetworkSpec) -> Iterator[CouplingMatrix]:
    """Yield ``cfg.count`` disordered realizations of a clean instance.

    Only the ssh and barrier layouts are supported as bases.  PH-symmetric
    disorder rescales every nonzero coupling; PH-breaking disorder also
    shifts the diagonal.  Each yielded matrix records how many non-positive
    coupling samples had to be redrawn.
    """
    if matrix.kind not in ("ssh", "barrier"):
        raise SpecificationError(f"disorder base must be ssh or barrier, got {matrix.kind!r}")
    delta_scale = cfg.delta_scale if cfg.delta_scale is not None else matrix.reference_energy
    L = spec.length
    if matrix.kind == "ssh":
        n_w, n_t = L, L - 1
    else:
        n_w, n_t = 0, matrix.dim - 1  # every bond of the barrier chain
    for index in range(cfg.count):
        draw = draw_disorder(cfg, index, n_w, n_t, matrix.dim, delta_scale)
        H = matrix.entries.copy()
        if matrix.kind == "ssh":
            for i in range(L):
                H[2 * i, 2 * i + 1] *= draw.w_factors[i]
                H[2 * i + 1, 2 * i] = H[2 * i, 2 * i + 1]
            for i in range(L - 1):
                H[2 * i + 1, 2 * i + 2] *= draw.t_factors[i]
                H[2 * i + 2, 2 * i + 1] = H[2 * i + 1, 2 * i + 2]
        else:
            for i in range(matrix.dim - 1):
                H[i, i + 1] *= draw.t_factors[i]
                H[i + 1, i] = H[i, i + 1]
        H[np.diag_indices(matrix.dim)] += draw.diag_offsets
        yield CouplingMatrix(
            entries=H,
            basis_labels=list(matrix.basis_labels),
            parity=matrix.parity.copy(),
            kind=matrix.kind,
            claims_sublattice=matrix.claims_sublattice and cfg.klass == PH_SYMMETRIC,
            reference_energy=matrix.reference_energy,
            resample_count=draw.resamples,
        )
