from ._core import (
    ActivationBank,
    Detector,
    Error,
    WeightHead,
    auroc,
    energy_score,
    fpr_at_tpr,
    gen_world,
    msp_score,
    percentile,
    read_actb,
    read_wgt,
    run_cli,
    select_k,
    softmax,
    write_actb,
    write_wgt,
)

__all__ = [
    "ActivationBank",
    "Detector",
    "Error",
    "WeightHead",
    "auroc",
    "energy_score",
    "fpr_at_tpr",
    "gen_world",
    "msp_score",
    "percentile",
    "read_actb",
    "read_wgt",
    "run_cli",
    "select_k",
    "softmax",
    "write_actb",
    "write_wgt",
]
