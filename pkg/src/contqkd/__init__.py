"""Analysis engine and protocol simulator for continuous-alphabet quantum key distribution."""

__version__ = "0.1.0"

from .attack import (
    AttackParams,
    EveIsometry,
    apply_attack,
    attacked_state,
    bipartite_reductions,
    build_isometry,
    coupling_coefficient,
)
from .infocalc import (
    JointTable,
    SphereQuadrature,
    averaged_selected_information,
    default_quadrature,
    mutual_information,
    nonselected_information,
    selected_information,
)
from .protosim import (
    ProtocolConfig,
    RoundRecord,
    SiftingPartition,
    Transcript,
    empirical_mi,
    read_transcript,
    run_protocol,
    run_round,
    sift,
    write_transcript,
)
from .qstate import (
    BlochDirection,
    DensityMatrix,
    MeasurementBasis,
    NumericalCorruptionError,
    PureState,
    expectation,
    ket_from_bloch,
    maximally_mixed,
    partial_trace,
    pure_density,
    singlet,
    tensor,
)
from .security import (
    InfoCurve,
    SecurityReport,
    accessible_information,
    cier,
    critical_cier_dim,
    critical_point,
    optimal_params,
    qber,
    qber_sphere_averaged,
    reconciled_i_ab,
    sweep_curve,
)

__all__ = [
    "__version__",
    "AttackParams",
    "BlochDirection",
    "DensityMatrix",
    "EveIsometry",
    "InfoCurve",
    "JointTable",
    "MeasurementBasis",
    "NumericalCorruptionError",
    "ProtocolConfig",
    "PureState",
    "RoundRecord",
    "SecurityReport",
    "SiftingPartition",
    "SphereQuadrature",
    "Transcript",
    "accessible_information",
    "apply_attack",
    "attacked_state",
    "averaged_selected_information",
    "bipartite_reductions",
    "build_isometry",
    "cier",
    "coupling_coefficient",
    "critical_cier_dim",
    "critical_point",
    "default_quadrature",
    "empirical_mi",
    "expectation",
    "ket_from_bloch",
    "maximally_mixed",
    "mutual_information",
    "nonselected_information",
    "optimal_params",
    "partial_trace",
    "pure_density",
    "qber",
    "qber_sphere_averaged",
    "read_transcript",
    "reconciled_i_ab",
    "run_protocol",
    "run_round",
    "selected_information",
    "sift",
    "singlet",
    "sweep_curve",
    "tensor",
    "write_transcript",
]
