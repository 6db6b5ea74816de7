"""Unsupervised adaptation of probabilistic classifiers to gradual drift.

A batch protocol: a model fit on labeled data persists between time steps
while the data is discarded; each later step delivers one unlabeled batch,
whose per-point drift is estimated and inverted into corrected posteriors
by an iterative KL-descending loop.
"""

from .adapt import (
    AdaptationConfig,
    AdaptationResult,
    AdaptationTrace,
    IterationRecord,
    adapt_batch,
    kl_gradient,
    refit_label_based,
    sequential_adapt,
    step_size,
)
from .bench import (
    ComparisonReport,
    StreamReport,
    cross_val_error,
    export_report,
    read_report,
    run_comparison,
    run_stream_eval,
)
from .classifier import GnbModel, fit, load_model, posterior, predict, save_model
from .core import (
    EPS,
    Batch,
    LabeledBatch,
    argmax_row,
    normalize_rows,
    point_weights,
)
from .datagen import (
    GaussianDriftSpec,
    StreamSpec,
    gen_drifting_stream,
    gen_modified_sea,
    gen_two_gaussian,
    load_csv_stream,
)
from .divergence import (
    apply_drift,
    conditional_kl,
    joint_kl,
    marginal_kl,
    pointwise_drift,
    reconstruct_kl,
)

__version__ = "0.1.0"
