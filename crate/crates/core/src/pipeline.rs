//! End-to-end re-identification and seeded parameter sweeps.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flock::{check_flock_size, match_target, SimilarityMatrix};
use crate::metrics::{displacement_stats, rank1_accuracy, PredictionVector};
use crate::simulate::{
    perturb_ordering, synth_similarity, CameraOrdering, PerturbationModel,
    SyntheticAppearanceConfig,
};

/// Matches every query row independently with flocks of size `k`.
pub fn run_reid(p: &SimilarityMatrix, k: usize) -> Result<PredictionVector> {
    check_flock_size(k)?;
    if k > p.rows() || k > p.cols() {
        return Err(Error::config(format!(
            "flock size {k} does not fit a {}x{} matrix",
            p.rows(),
            p.cols()
        )));
    }
    (0..p.rows())
        .into_par_iter()
        .map(|q| match_target(p, q, k))
        .collect()
}

/// Identity ordering with synthetic appearance on top.
pub fn scenario_unchanged(
    n: usize,
    appearance: &SyntheticAppearanceConfig,
    seed: u64,
) -> Result<(SimilarityMatrix, CameraOrdering)> {
    if n == 0 {
        return Err(Error::config("scenario needs at least one vehicle"));
    }
    let ordering = CameraOrdering::identity(n);
    let p = synth_similarity(&ordering, &appearance.with_seed(seed))?;
    Ok((p, ordering))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_vehicles: Vec<usize>,
    pub flock_sizes: Vec<usize>,
    pub scales: Vec<f64>,
    pub trials: usize,
    pub appearance: SyntheticAppearanceConfig,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_vehicles.is_empty() || self.flock_sizes.is_empty() || self.scales.is_empty() {
            return Err(Error::config(
                "vehicle counts, flock sizes and scales must be non-empty",
            ));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        let min_n = *self.n_vehicles.iter().min().unwrap();
        if min_n == 0 {
            return Err(Error::config("vehicle counts must be positive"));
        }
        for &k in &self.flock_sizes {
            check_flock_size(k)?;
            if k > min_n {
                return Err(Error::config(format!(
                    "flock size {k} exceeds smallest vehicle count {min_n}"
                )));
            }
        }
        if let Some(s) = self.scales.iter().find(|s| !s.is_finite() || **s < 0.0) {
            return Err(Error::config(format!(
                "scale {s} must be finite and non-negative"
            )));
        }
        self.appearance.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub n: usize,
    pub flock_size: usize,
    pub scale: f64,
    pub trial: usize,
    pub rank1: f64,
    pub variance: f64,
    pub recovered_scale: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentReport {
    /// Ordered by (n, scale, flock size, trial), each in configuration order.
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    /// Mean rank-1 accuracy over the trials of one cell, if present.
    pub fn mean_rank1(&self, n: usize, flock_size: usize, scale: f64) -> Option<f64> {
        let hits: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.n == n && r.flock_size == flock_size && r.scale == scale)
            .map(|r| r.rank1)
            .collect();
        (!hits.is_empty()).then(|| hits.iter().sum::<f64>() / hits.len() as f64)
    }
}

const STREAM_APPEARANCE: u64 = 0x6170_7065_6172;
const STREAM_PERTURB: u64 = 0x7065_7274_7572;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with a sequence of keys into an independent stream seed.
pub fn derive_seed(base: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix64(base), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

struct CellKey {
    n_idx: usize,
    scale_idx: usize,
    trial: usize,
}

/// Runs every (n, scale, trial) cell, scoring each flock size on the same
/// generated scene.
///
/// The appearance draw depends on (seed, n, trial) only and the positional
/// noise on the same key, so scales within a trial rearrange one scene with
/// one set of normal deviates. Cells run in parallel; row order is fixed by
/// the configuration.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for n_idx in 0..cfg.n_vehicles.len() {
        for scale_idx in 0..cfg.scales.len() {
            for trial in 0..cfg.trials {
                cells.push(CellKey {
                    n_idx,
                    scale_idx,
                    trial,
                });
            }
        }
    }

    let results: Vec<Vec<ReportRow>> = cells
        .par_iter()
        .map(|cell| {
            let n = cfg.n_vehicles[cell.n_idx];
            let scale = cfg.scales[cell.scale_idx];
            run_cell(cfg, n, scale, cell.trial).map_err(|e| Error::Cell {
                n,
                scale,
                trial: cell.trial,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    // Cells are trial-major within (n, scale); rows must be flock-size-major.
    let mut rows = Vec::with_capacity(results.len() * cfg.flock_sizes.len());
    for group in results.chunks(cfg.trials) {
        for k_idx in 0..cfg.flock_sizes.len() {
            rows.extend(group.iter().map(|cell_rows| cell_rows[k_idx].clone()));
        }
    }
    Ok(ExperimentReport { rows })
}

fn run_cell(cfg: &ExperimentConfig, n: usize, scale: f64, trial: usize) -> Result<Vec<ReportRow>> {
    let keys = [n as u64, trial as u64];
    let perturb_seed = derive_seed(cfg.seed, &[STREAM_PERTURB, keys[0], keys[1]]);
    let appearance_seed = derive_seed(cfg.seed, &[STREAM_APPEARANCE, keys[0], keys[1]]);

    let ordering = perturb_ordering(
        n,
        &PerturbationModel {
            scale,
            seed: perturb_seed,
        },
    )?;
    let p = synth_similarity(&ordering, &cfg.appearance.with_seed(appearance_seed))?;
    let stats = displacement_stats(&ordering);

    cfg.flock_sizes
        .iter()
        .map(|&k| {
            let start = Instant::now();
            let pred = run_reid(&p, k)?;
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            Ok(ReportRow {
                n,
                flock_size: k,
                scale,
                trial,
                rank1: rank1_accuracy(&ordering, &pred)?,
                variance: stats.variance,
                recovered_scale: stats.recovered_scale,
                wall_ms,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::displacement_variance;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            n_vehicles: vec![20, 30],
            flock_sizes: vec![1, 3],
            scales: vec![0.0, 1.0],
            trials: 3,
            appearance: SyntheticAppearanceConfig::default(),
            seed: 7,
        }
    }

    /// Query 2's own gallery image scores 0.85, a decoy at column 9 scores 0.95.
    fn decoy_matrix() -> SimilarityMatrix {
        let n = 12;
        let mut v = vec![0.1; n * n];
        for i in 0..n {
            v[i * n + i] = 0.8;
        }
        v[2 * n + 2] = 0.85;
        v[2 * n + 9] = 0.95;
        SimilarityMatrix::new(n, n, v).unwrap()
    }

    #[test]
    fn ideal_similarity_is_perfect() {
        let (mut p, truth) = scenario_unchanged(
            25,
            &SyntheticAppearanceConfig {
                duplicate_prob: 0.0,
                view_noise: 0.0,
                ..Default::default()
            },
            1,
        )
        .unwrap();
        assert_eq!(displacement_variance(&truth), 0.0);
        for k in [1, 3, 5] {
            let pred = run_reid(&p, k).unwrap();
            assert_eq!(rank1_accuracy(&truth, &pred).unwrap(), 1.0);
        }
        p = SimilarityMatrix::new(3, 3, vec![0.5; 9]).unwrap();
        assert!(run_reid(&p, 5).is_err());
        assert!(run_reid(&p, 2).is_err());
    }

    #[test]
    fn decoy_wrong_alone_right_in_flock() {
        let p = decoy_matrix();
        assert_eq!(run_reid(&p, 1).unwrap()[2], 9);
        assert_eq!(run_reid(&p, 5).unwrap()[2], 2);
    }

    #[test]
    fn rectangular_gallery() {
        let p =
            SimilarityMatrix::new(4, 9, (0..36).map(|x| (x % 7) as f64 / 7.0).collect()).unwrap();
        let pred = run_reid(&p, 3).unwrap();
        assert_eq!(pred.len(), 4);
        assert!(pred.iter().all(|&j| j < 9));
    }

    #[test]
    fn single_cell_has_one_row_per_flock_size() {
        let cfg = ExperimentConfig {
            n_vehicles: vec![15],
            flock_sizes: vec![1, 3, 5],
            scales: vec![0.5],
            trials: 1,
            ..small_cfg()
        };
        let r = run_sweep(&cfg).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert_eq!(
            r.rows.iter().map(|r| r.flock_size).collect::<Vec<_>>(),
            vec![1, 3, 5]
        );
    }

    #[test]
    fn rows_in_configuration_order() {
        let cfg = small_cfg();
        let r = run_sweep(&cfg).unwrap();
        assert_eq!(r.rows.len(), 2 * 2 * 2 * 3);
        let keys: Vec<_> = r
            .rows
            .iter()
            .map(|r| (r.n, (r.scale * 10.0) as u32, r.flock_size, r.trial))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        for row in &r.rows {
            assert!((0.0..=1.0).contains(&row.rank1));
            if row.scale == 0.0 {
                assert_eq!(row.variance, 0.0);
            }
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let strip = |r: ExperimentReport| {
            r.rows
                .into_iter()
                .map(|r| ReportRow { wall_ms: 0.0, ..r })
                .collect::<Vec<_>>()
        };
        let a = strip(run_sweep(&small_cfg()).unwrap());
        let b = strip(run_sweep(&small_cfg()).unwrap());
        assert_eq!(a, b);
        let c = strip(
            run_sweep(&ExperimentConfig {
                seed: 8,
                ..small_cfg()
            })
            .unwrap(),
        );
        assert_ne!(a, c);
    }

    #[test]
    fn query_order_does_not_matter() {
        let (p, _) = scenario_unchanged(30, &SyntheticAppearanceConfig::default(), 3).unwrap();
        let forward = run_reid(&p, 3).unwrap();
        let backward: Vec<usize> = (0..30)
            .rev()
            .map(|q| match_target(&p, q, 3).unwrap())
            .collect();
        assert_eq!(forward, backward.into_iter().rev().collect::<Vec<_>>());
    }

    #[test]
    fn individual_accuracy_ignores_scale_within_trial() {
        // Same scene rearranged: argmax follows the column permutation.
        let cfg = ExperimentConfig {
            n_vehicles: vec![40],
            flock_sizes: vec![1],
            scales: vec![0.0, 0.5, 1.0, 2.0],
            trials: 2,
            ..small_cfg()
        };
        let r = run_sweep(&cfg).unwrap();
        for t in 0..2 {
            let accs: Vec<f64> = r
                .rows
                .iter()
                .filter(|r| r.trial == t)
                .map(|r| r.rank1)
                .collect();
            assert!(accs.windows(2).all(|w| w[0] == w[1]), "{accs:?}");
        }
    }

    #[test]
    fn config_errors() {
        let bad = [
            ExperimentConfig {
                trials: 0,
                ..small_cfg()
            },
            ExperimentConfig {
                flock_sizes: vec![2],
                ..small_cfg()
            },
            ExperimentConfig {
                flock_sizes: vec![21],
                ..small_cfg()
            },
            ExperimentConfig {
                scales: vec![-1.0],
                ..small_cfg()
            },
            ExperimentConfig {
                n_vehicles: vec![],
                ..small_cfg()
            },
        ];
        for cfg in bad {
            assert!(matches!(run_sweep(&cfg), Err(Error::Config(_))), "{cfg:?}");
        }
    }

    #[test]
    fn seeds_are_spread() {
        let a = derive_seed(1, &[2, 3]);
        assert_ne!(a, derive_seed(1, &[3, 2]));
        assert_ne!(a, derive_seed(2, &[2, 3]));
        assert_eq!(a, derive_seed(1, &[2, 3]));
    }
}
