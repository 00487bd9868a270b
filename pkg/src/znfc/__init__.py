"""Simulation and analysis of Zeeman / Doppler nuclear frequency comb quantum memories."""

__version__ = "0.1.0"

from .nuclear import (  # noqa: E402
    CombSpec,
    CombTooth,
    DomainError,
    IncompleteIsotopeError,
    IsotopeParams,
    build_comb,
    builtin_isotopes,
    cg_weight,
    eddy_decay_time,
    effective_thickness,
    get_isotope,
    off_resonant_loss,
    optical_thickness,
    uniform_comb,
)
from .medium import (  # noqa: E402
    MediumSegment,
    MediumStack,
    SwitchEvent,
    Waveform,
    dnfc_stack,
    foil_stack,
    znfc_stack,
)
from .engine import SimResult, convergence_check, simulate, simulate_on_demand  # noqa: E402
from .metrics import (  # noqa: E402
    EchoReport,
    detect_echo,
    efficiency,
    fidelity,
    gaussian_input,
    matched_duration,
)
from .oracle import (  # noqa: E402
    TransferFunction,
    analytic_echo,
    predetermined_efficiency,
    respond,
    transfer_function,
)
from .sweep import SweepPlan, SweepResult, find_optimum, run_sweep  # noqa: E402
