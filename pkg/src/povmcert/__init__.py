"""Certify and self-test qubit POVMs from prepare-and-measure statistics.

The flat namespace below is the public API; the modules it pulls from
are importable on their own when finer-grained access is wanted:

- qubit: Bloch-parameterized states, observables, POVMs, extremality
- witness: scenarios, witness coefficient tables, the three families
- sampling: seeded RNG streams and uniform extremal-POVM sampling
- optimize: see-saw maxima and projective / three-outcome bounds
- fidelity: rotation-optimized fidelity to a target, sampled envelopes
- robustness: critical depolarizing visibility of each bound
- experiment: waveplate model, counts, systematics, certification
- cli: the `povmcert` command
"""

from .experiment import (
    ExperimentConfig,
    LAB_VISIBILITIES,
    Visibilities,
    WitnessReport,
    certify,
    counts_from_csv,
    counts_to_csv,
    expected_probabilities,
    ingest_counts,
    jones_preparation,
    monte_carlo_systematic,
    sic_experiment,
    simulate_counts,
    trine_experiment,
)
from .fidelity import (
    EnvelopeCurve,
    FidelityResult,
    TargetPovm,
    best_fidelity_over_relabelings,
    envelope_from_points,
    povm_fidelity,
    sample_fidelity_curve,
    sic_target,
    trine_target,
)
from .optimize import (
    BoundResult,
    OptimizerConfig,
    projective_bound,
    projective_bound_numeric,
    projective_bound_sic,
    projective_bound_sym_trine,
    seesaw_maximize,
    three_outcome_max,
)
from .qubit import (
    Observable,
    Povm,
    QubitState,
    classify_extremal,
    validate_povm,
)
from .robustness import (
    critical_visibility,
    depolarize_preparations,
    most_robust_point,
    visibility_curve,
)
from .sampling import RngStream, random_extremal_povm, random_extremal_povms
from .witness import (
    ProbabilityTable,
    Scenario,
    Strategy,
    WitnessSpec,
    build_witness,
    evaluate_witness,
    probability_table,
    sic_witness,
    strategy_value,
    sym_trine_witness,
    trine_witness,
)

__version__ = "0.1.0"

__all__ = [
    "BoundResult",
    "EnvelopeCurve",
    "ExperimentConfig",
    "FidelityResult",
    "LAB_VISIBILITIES",
    "Observable",
    "OptimizerConfig",
    "Povm",
    "ProbabilityTable",
    "QubitState",
    "RngStream",
    "Scenario",
    "Strategy",
    "TargetPovm",
    "Visibilities",
    "WitnessReport",
    "WitnessSpec",
    "best_fidelity_over_relabelings",
    "build_witness",
    "certify",
    "classify_extremal",
    "counts_from_csv",
    "counts_to_csv",
    "critical_visibility",
    "depolarize_preparations",
    "envelope_from_points",
    "evaluate_witness",
    "expected_probabilities",
    "ingest_counts",
    "jones_preparation",
    "monte_carlo_systematic",
    "most_robust_point",
    "povm_fidelity",
    "probability_table",
    "projective_bound",
    "projective_bound_numeric",
    "projective_bound_sic",
    "projective_bound_sym_trine",
    "random_extremal_povm",
    "random_extremal_povms",
    "sample_fidelity_curve",
    "seesaw_maximize",
    "sic_experiment",
    "sic_target",
    "sic_witness",
    "simulate_counts",
    "strategy_value",
    "sym_trine_witness",
    "three_outcome_max",
    "trine_experiment",
    "trine_target",
    "trine_witness",
    "validate_povm",
    "visibility_curve",
    "__version__",
]
