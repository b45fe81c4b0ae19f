"""Causal fairness toolkit: d-separation, group fairness metrics, impossibility scan, correction-gate SCMs."""

__version__ = "0.1.0"

from causalfair.dist import (
    JointTable,
    SampleSet,
    VariableSpec,
    ci_gap,
    condition,
    empirical_joint,
    marginalize,
    sample,
)
from causalfair.fairness import (
    FairnessTriple,
    MetricReport,
    audit,
    calibration_asymmetry,
    check_preconditions,
    dp_gap,
    eo_gap,
    graph_metric_verdicts,
    impossibility_scan,
    pp_gap,
)
from causalfair.graph import (
    CausalDag,
    TripletKind,
    add_edge,
    canonical_graph,
    classify_triplet,
    d_separated,
    implied_independencies,
)
from causalfair.kernels import BACKEND
from causalfair.scm import (
    CorrectionPolicy,
    ScmSpec,
    ancestral_sample,
    apply_label_correction,
    build_correction_scm,
    exact_joint,
    hiring_scm,
    sweep_gate,
    train_plugin_classifier,
    verify_modified_equations,
)
