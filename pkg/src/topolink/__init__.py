"""Single-excitation simulator for topological bosonic quantum networks.

The package builds the coupling matrices of dimerized bosonic chains and
their topologically trivial counterparts, evolves single excitations under
globally tuned coupling schedules, and analyses transfer fidelity, phase
quantization, spectral gap scaling, quenched disorder, and composite
two-qubit gate protocols.  A batch CLI (``topolink``) writes CSV/JSON
artifacts with frozen column contracts.
"""

from .errors import IntegrationError, QuadratureError, RootNotFoundError, SpecificationError
from .networks import (
    CouplingMatrix,
    DisorderConfig,
    NetworkSpec,
    apply_disorder,
    build_barrier,
    build_mc,
    build_network,
    build_prop,
    build_ssh,
)
from .spectral import RescaledSolution, SpectralReport, diagonalize, plan_ratio, solve_rescaled
from .protocols import (
    BoundReport,
    ProtocolSchedule,
    Pulse,
    adiabatic_bound,
    calibrate_bound_constant,
    eval_pulse,
    make_schedule,
    scaling_study,
)
from .dynamics import PhaseClass, TransferReport, WaveState, evolve, phase_check, sweep

__version__ = "0.1.0"

__all__ = [
    "CouplingMatrix",
    "DisorderConfig",
    "NetworkSpec",
    "apply_disorder",
    "build_barrier",
    "build_mc",
    "build_network",
    "build_prop",
    "build_ssh",
    "SpectralReport",
    "RescaledSolution",
    "diagonalize",
    "solve_rescaled",
    "plan_ratio",
    "Pulse",
    "ProtocolSchedule",
    "BoundReport",
    "eval_pulse",
    "make_schedule",
    "adiabatic_bound",
    "calibrate_bound_constant",
    "scaling_study",
    "WaveState",
    "TransferReport",
    "PhaseClass",
    "evolve",
    "phase_check",
    "sweep",
    "SpecificationError",
    "IntegrationError",
    "RootNotFoundError",
    "QuadratureError",
    "__version__",
]
