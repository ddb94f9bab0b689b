//! Vehicle re-identification over ordered camera galleries using flock
//! similarity: a target and its neighbours in appearance order are matched
//! as a group, via an optimal assignment, against every same-size run of the
//! other camera's list.

pub mod assignment;
pub mod error;
pub mod flock;
pub mod metrics;
pub mod pipeline;
pub mod simulate;

pub use assignment::{
    brute_force_assignment, solve_max_assignment, solve_min_assignment, Assignment, Sense,
    SquareMatrix,
};
pub use error::{Error, Result};
pub use flock::{
    best_gallery_flock, flock_similarity, flock_similarity_grid, match_target, query_window,
    FlockMatch, FlockWindow, SimilarityMatrix,
};
pub use metrics::{
    diagonal_dominance, displacement_variance, rank1_accuracy, scale_from_variance,
    variance_from_scale_fit, DisplacementStats, PredictionVector,
};
pub use pipeline::{run_reid, run_sweep, scenario_unchanged, ExperimentConfig, ExperimentReport};
pub use simulate::{
    matrix_from_pairs, perturb_ordering, synth_similarity, CameraOrdering, PerturbationModel,
    SyntheticAppearanceConfig,
};
