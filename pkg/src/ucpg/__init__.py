"""Universal composite phase gates: design, verification and error-landscape scans."""

__version__ = "0.1.0"

from .design import (  # noqa: E402
    PhaseSequence,
    analytic_phases,
    four_pulse_solution_family,
    generate_sequence,
    ideal_gate_phase,
    predicted_leakage_exponent,
    target_gate,
)
from .library import (  # noqa: E402
    ReferenceDataAbsent,
    SequenceFileError,
    TwoBlockSpec,
    load_builtin,
    load_reference,
    load_sequence,
    save_sequence,
    two_block_construction,
)
from .pulses import ErrorPoint, IntegratorConfig, PulseEnvelope, composite_propagator  # noqa: E402
from .scan import (  # noqa: E402
    FidelityMap,
    ScanGrid,
    compare,
    cross_section,
    extract_contours,
    fidelity,
    plateau_metrics,
    scan,
)
from .universality import (  # noqa: E402
    estimate_leakage_order,
    harmonic_coefficients,
    verify_cancellation_ladder,
)

__all__ = [
    "ErrorPoint", "FidelityMap", "IntegratorConfig", "PhaseSequence", "PulseEnvelope",
    "ReferenceDataAbsent", "ScanGrid", "SequenceFileError", "TwoBlockSpec",
    "analytic_phases", "compare", "composite_propagator", "cross_section",
    "estimate_leakage_order", "extract_contours", "fidelity", "four_pulse_solution_family",
    "generate_sequence", "harmonic_coefficients", "ideal_gate_phase", "load_builtin",
    "load_reference", "load_sequence", "plateau_metrics", "predicted_leakage_exponent",
    "save_sequence", "scan", "target_gate", "two_block_construction",
    "verify_cancellation_ladder",
]
