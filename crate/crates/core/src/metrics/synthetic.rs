//! Seeded generators of correlated classifier outputs for exercising the
//! fusion and diversity machinery.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Balanced labels plus `models` score vectors.
#[derive(Clone, Debug)]
pub struct SyntheticPredictions {
    pub labels: Vec<u8>,
    pub scores: Vec<Vec<f64>>,
}

/// Noise correlation that makes the latent scores `s·(y − ½) + e` of two
/// models correlate at `target`, for balanced labels.
pub fn noise_corr_for(target: f64, separation: f64) -> f64 {
    let signal = separation * separation / 4.0;
    (target * (1.0 + signal) - signal).clamp(0.0, 1.0)
}

/// `models` predictors of equal skill: model `i` outputs
/// `sigmoid(separation·(y − ½) + eᵢ)` where the unit-variance noises `eᵢ`
/// share pairwise correlation `noise_corr`. Half of the `n` labels are 1.
pub fn correlated_predictors(
    n: usize,
    models: usize,
    separation: f64,
    noise_corr: f64,
    seed: u64,
) -> SyntheticPredictions {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < n / 2)).collect();
    labels.shuffle(&mut rng);
    let shared = noise_corr.sqrt();
    let own = (1.0 - noise_corr).sqrt();
    let mut scores = vec![Vec::with_capacity(n); models];
    for &y in &labels {
        let z0: f64 = StandardNormal.sample(&mut rng);
        let mean = separation * (f64::from(y) - 0.5);
        for s in scores.iter_mut() {
            let zi: f64 = StandardNormal.sample(&mut rng);
            let latent = mean + shared * z0 + own * zi;
            s.push(1.0 / (1.0 + (-latent).exp()));
        }
    }
    SyntheticPredictions { labels, scores }
}
