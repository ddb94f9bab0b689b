//! Ground-truth camera orderings, positional perturbation, and a synthetic
//! appearance model standing in for a learned individual-similarity network.

use std::collections::HashMap;
use std::fmt::Display;
use std::hash::Hash;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flock::SimilarityMatrix;

/// Appearance order of every vehicle under both cameras.
///
/// `x[i]` is the Camera1 position of vehicle `i` (always `i`), `y[i]` its
/// Camera2 position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CameraOrdering {
    x: Vec<usize>,
    y: Vec<usize>,
}

impl CameraOrdering {
    pub fn identity(n: usize) -> Self {
        Self {
            x: (0..n).collect(),
            y: (0..n).collect(),
        }
    }

    /// Builds an ordering from Camera2 positions, with `x` fixed to `0..n`.
    pub fn from_camera2(y: Vec<usize>) -> Result<Self> {
        check_permutation(&y)?;
        Ok(Self {
            x: (0..y.len()).collect(),
            y,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn x(&self) -> &[usize] {
        &self.x
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }
}

/// Fails unless `values` holds each of `0..len` exactly once, naming the
/// first repeated or out-of-range value.
pub fn check_permutation(values: &[usize]) -> Result<()> {
    let len = values.len();
    let mut seen = vec![false; len];
    for &v in values {
        if v >= len {
            return Err(Error::NotPermutation {
                len,
                reason: format!("value {v} out of range"),
            });
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::NotPermutation {
                len,
                reason: format!("value {v} is duplicated"),
            });
        }
    }
    Ok(())
}

/// Indices that sort `values` ascending; equal keys keep index order.
pub fn argsort(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

/// Inverse of a permutation: `inv[perm[i]] = i`.
pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// Positional noise: each vehicle's Camera2 slot is drawn from `N(i, scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationModel {
    pub scale: f64,
    pub seed: u64,
}

/// Samples `s_i ~ N(i, scale)` independently, sorts them, and places vehicle
/// `i` at its rank among the samples.
pub fn perturb_ordering(n: usize, model: &PerturbationModel) -> Result<CameraOrdering> {
    if n == 0 {
        return Err(Error::config("ordering needs at least one vehicle"));
    }
    if !model.scale.is_finite() || model.scale < 0.0 {
        return Err(Error::config(format!(
            "scale must be finite and non-negative, got {}",
            model.scale
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let z: f64 = rng.sample(StandardNormal);
            i as f64 + model.scale * z
        })
        .collect();
    // order[r] is the vehicle holding rank r, so y = order⁻¹.
    let order = argsort(&samples);
    Ok(CameraOrdering {
        x: (0..n).collect(),
        y: invert_permutation(&order),
    })
}

/// Parameters of the synthetic appearance model.
///
/// Each vehicle gets a latent vector with i.i.d. `N(0, latent_spread²)`
/// coordinates, or, with probability `duplicate_prob`, an exact copy of a uniformly chosen
/// earlier vehicle's latent. Camera1 sees the latent as is; Camera2 adds
/// `N(0, view_noise²)` per coordinate. Similarity is the squared-exponential
/// kernel `exp(-‖a - b‖² / (2 kernel_width²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticAppearanceConfig {
    pub latent_dim: usize,
    pub duplicate_prob: f64,
    pub view_noise: f64,
    pub kernel_width: f64,
    /// Spread of distinct appearances relative to the kernel; smaller values
    /// crowd different vehicles together and make individual matching harder.
    #[serde(default = "default_latent_spread")]
    pub latent_spread: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_latent_spread() -> f64 {
    0.2
}

impl Default for SyntheticAppearanceConfig {
    /// The pinned calibration shipped in `configs/appearance-v1.toml`.
    fn default() -> Self {
        Self {
            latent_dim: 8,
            duplicate_prob: 0.25,
            view_noise: 0.15,
            kernel_width: 0.5,
            latent_spread: default_latent_spread(),
            seed: 0,
        }
    }
}

impl SyntheticAppearanceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 {
            return Err(Error::config("latent_dim must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.duplicate_prob) {
            return Err(Error::config(format!(
                "duplicate_prob must lie in [0, 1], got {}",
                self.duplicate_prob
            )));
        }
        if !self.view_noise.is_finite() || self.view_noise < 0.0 {
            return Err(Error::config(format!(
                "view_noise must be finite and non-negative, got {}",
                self.view_noise
            )));
        }
        if !self.kernel_width.is_finite() || self.kernel_width <= 0.0 {
            return Err(Error::config(format!(
                "kernel_width must be positive, got {}",
                self.kernel_width
            )));
        }
        if !self.latent_spread.is_finite() || self.latent_spread <= 0.0 {
            return Err(Error::config(format!(
                "latent_spread must be positive, got {}",
                self.latent_spread
            )));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Similarity matrix for `ordering` under the synthetic appearance model.
///
/// Row `i` is vehicle `i` as seen by Camera1; vehicle `i`'s Camera2 image sits
/// in column `y[i]`.
pub fn synth_similarity(
    ordering: &CameraOrdering,
    cfg: &SyntheticAppearanceConfig,
) -> Result<SimilarityMatrix> {
    cfg.validate()?;
    let n = ordering.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    let d = cfg.latent_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut latent = vec![0.0f64; n * d];
    for i in 0..n {
        if i > 0 && rng.random_bool(cfg.duplicate_prob) {
            let src = rng.random_range(0..i);
            latent.copy_within(src * d..(src + 1) * d, i * d);
        } else {
            for v in &mut latent[i * d..(i + 1) * d] {
                *v = cfg.latent_spread * rng.sample::<f64, _>(StandardNormal);
            }
        }
    }

    // Camera2 observations, stored by gallery column.
    let mut observed = vec![0.0f64; n * d];
    for i in 0..n {
        let col = ordering.y()[i];
        for c in 0..d {
            let noise: f64 = if cfg.view_noise > 0.0 {
                cfg.view_noise * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            observed[col * d + c] = latent[i * d + c] + noise;
        }
    }

    let denom = 2.0 * cfg.kernel_width * cfg.kernel_width;
    let mut values = Vec::with_capacity(n * n);
    for i in 0..n {
        let a = &latent[i * d..(i + 1) * d];
        for j in 0..n {
            let b = &observed[j * d..(j + 1) * d];
            let dist2: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
            // Underflow would leave (0, 1].
            values.push((-dist2 / denom).exp().max(f64::MIN_POSITIVE));
        }
    }
    SimilarityMatrix::new(n, n, values)
}

/// Ground truth from vehicle ids listed in query and gallery order: query `i`
/// truly matches the gallery position holding the same id.
///
/// `p` must be `query_ids.len() × gallery_ids.len()`.
pub fn matrix_from_pairs<T>(
    query_ids: &[T],
    gallery_ids: &[T],
    p: &SimilarityMatrix,
) -> Result<CameraOrdering>
where
    T: Eq + Hash + Display,
{
    if query_ids.len() != gallery_ids.len() {
        return Err(Error::LengthMismatch {
            left: query_ids.len(),
            right: gallery_ids.len(),
        });
    }
    if p.rows() != query_ids.len() || p.cols() != gallery_ids.len() {
        return Err(Error::IdMismatch(format!(
            "{} query and {} gallery ids for a {}x{} matrix",
            query_ids.len(),
            gallery_ids.len(),
            p.rows(),
            p.cols()
        )));
    }
    let mut position = HashMap::with_capacity(gallery_ids.len());
    for (j, id) in gallery_ids.iter().enumerate() {
        if position.insert(id, j).is_some() {
            return Err(Error::IdMismatch(format!("gallery id {id} appears twice")));
        }
    }
    let mut y = Vec::with_capacity(query_ids.len());
    let mut seen = std::collections::HashSet::with_capacity(query_ids.len());
    for id in query_ids {
        if !seen.insert(id) {
            return Err(Error::IdMismatch(format!("query id {id} appears twice")));
        }
        match position.get(id) {
            Some(&j) => y.push(j),
            None => {
                return Err(Error::IdMismatch(format!(
                    "query id {id} missing from gallery"
                )))
            }
        }
    }
    CameraOrdering::from_camera2(y)
}
