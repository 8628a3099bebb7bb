//! Seeded synthetic kinship data.
//!
//! Every family draws a latent vector; each person perturbs it with
//! `person_noise`; each image renders the person latent as a periodic texture
//! (a fixed random basis of `texture_period × texture_period` tiles) and adds
//! pixel noise of standard deviation `1 / signal_to_noise`. Images are scaled
//! to unit expected variance. Two persons are kin iff they share a family.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::grid::write_grid;
use super::relationship::{write_relationship_csv, RelationshipRecord};
use super::submission::{pair_id, write_submission_csv, SubmissionRecord};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const RELATIONSHIP_FILE: &str = "train_relationship.csv";
pub const HOLDOUT_FILE: &str = "holdout_pairs.csv";
pub const IMAGE_DIR: &str = "images";
pub const GENERATOR_FILE: &str = "generator.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub families: usize,
    pub persons_per_family: usize,
    pub images_per_person: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// Signal amplitude over pixel-noise standard deviation.
    pub signal_to_noise: f64,
    /// Standard deviation of a person's latent around the family latent.
    pub person_noise: f64,
    pub latent_dim: usize,
    pub texture_period: usize,
    /// Number of trailing families reserved for the labelled holdout pairs;
    /// 0 or at least 2.
    pub holdout_families: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            families: 16,
            persons_per_family: 4,
            images_per_person: 3,
            height: 32,
            width: 32,
            channels: 1,
            signal_to_noise: 0.18,
            person_noise: 0.5,
            latent_dim: 8,
            texture_period: 4,
            holdout_families: 4,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("families", self.families),
            ("persons_per_family", self.persons_per_family),
            ("images_per_person", self.images_per_person),
            ("height", self.height),
            ("width", self.width),
            ("channels", self.channels),
            ("latent_dim", self.latent_dim),
            ("texture_period", self.texture_period),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Parameter(format!("{name} must be >= 1")));
        }
        if !(self.signal_to_noise > 0.0 && self.signal_to_noise.is_finite()) {
            return Err(Error::Parameter(format!(
                "signal_to_noise must be finite and > 0, got {}",
                self.signal_to_noise
            )));
        }
        if !(self.person_noise >= 0.0 && self.person_noise.is_finite()) {
            return Err(Error::Parameter(
                "person_noise must be finite and >= 0".into(),
            ));
        }
        if self.holdout_families == 1
            || self.holdout_families >= self.families.max(1) && self.holdout_families > 0
        {
            return Err(Error::Parameter(format!(
                "holdout_families must be 0 or between 2 and families - 1, got {}",
                self.holdout_families
            )));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("generator config serializes")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticImage {
    /// File name, unique across the set; used in pair ids.
    pub name: String,
    /// Person id `Fxxxx/MIDn`.
    pub person: String,
    pub image: Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticKinshipSet {
    pub config: SyntheticConfig,
    pub family_latents: Vec<Vec<f64>>,
    pub person_latents: Vec<(String, Vec<f64>)>,
    pub images: Vec<SyntheticImage>,
    /// Every intra-family person pair.
    pub relations: Vec<RelationshipRecord>,
    pub holdout_families: Vec<String>,
    /// Labelled image pairs drawn from the holdout families.
    pub holdout: Vec<(String, u8)>,
}

pub fn family_id(f: usize) -> String {
    format!("F{:04}", f + 1)
}

pub fn person_id(f: usize, m: usize) -> String {
    format!("{}/MID{}", family_id(f), m + 1)
}

fn image_name(f: usize, m: usize, i: usize) -> String {
    format!("{}_MID{}_{i}.grid", family_id(f), m + 1)
}

fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Value as it reads back from a six-decimal text file.
fn quantize(v: f64) -> f64 {
    format!("{v:.6}").parse().expect("formatted float parses")
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticKinshipSet> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (t, c, k) = (cfg.texture_period, cfg.channels, cfg.latent_dim);
    let tile = t * t * c;

    let basis: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            let raw: Vec<f64> = (0..tile).map(|_| normal(&mut rng)).collect();
            let rms = (raw.iter().map(|v| v * v).sum::<f64>() / tile as f64).sqrt();
            raw.iter().map(|v| v / rms).collect()
        })
        .collect();

    let sigma = 1.0 / cfg.signal_to_noise;
    let scale = 1.0 / (1.0 + cfg.person_noise * cfg.person_noise + sigma * sigma).sqrt();
    let mut family_latents = Vec::with_capacity(cfg.families);
    let mut person_latents = Vec::new();
    let mut images = Vec::new();
    for f in 0..cfg.families {
        let fam: Vec<f64> = (0..k).map(|_| normal(&mut rng)).collect();
        for m in 0..cfg.persons_per_family {
            let person: Vec<f64> = fam
                .iter()
                .map(|v| v + cfg.person_noise * normal(&mut rng))
                .collect();
            // texture of this person, one tile
            let texture: Vec<f64> = (0..tile)
                .map(|p| {
                    person
                        .iter()
                        .zip(&basis)
                        .map(|(l, b)| l * b[p])
                        .sum::<f64>()
                        / (k as f64).sqrt()
                })
                .collect();
            for i in 0..cfg.images_per_person {
                let mut data = Vec::with_capacity(cfg.height * cfg.width * c);
                for y in 0..cfg.height {
                    for x in 0..cfg.width {
                        for ch in 0..c {
                            let s = texture[((y % t) * t + x % t) * c + ch];
                            data.push(quantize(scale * (s + sigma * normal(&mut rng))));
                        }
                    }
                }
                images.push(SyntheticImage {
                    name: image_name(f, m, i),
                    person: person_id(f, m),
                    image: Tensor::new([cfg.height, cfg.width, c], data)?,
                });
            }
            person_latents.push((person_id(f, m), person));
        }
        family_latents.push(fam);
    }

    let mut relations = Vec::new();
    for f in 0..cfg.families {
        for a in 0..cfg.persons_per_family {
            for b in a + 1..cfg.persons_per_family {
                relations.push(RelationshipRecord::new(person_id(f, a), person_id(f, b))?);
            }
        }
    }

    let first_holdout = cfg.families - cfg.holdout_families;
    let holdout_families: Vec<String> = (first_holdout..cfg.families).map(family_id).collect();
    let holdout = holdout_pairs(cfg, first_holdout, &mut rng);

    Ok(SyntheticKinshipSet {
        config: cfg.clone(),
        family_latents,
        person_latents,
        images,
        relations,
        holdout_families,
        holdout,
    })
}

/// All cross-person image pairs inside each holdout family as positives, and
/// as many distinct cross-family image pairs as negatives.
fn holdout_pairs(cfg: &SyntheticConfig, first: usize, rng: &mut impl Rng) -> Vec<(String, u8)> {
    if cfg.holdout_families == 0 {
        return Vec::new();
    }
    let (p, n) = (cfg.persons_per_family, cfg.images_per_person);
    let mut out = Vec::new();
    for f in first..cfg.families {
        for a in 0..p {
            for b in a + 1..p {
                for i in 0..n {
                    for j in 0..n {
                        out.push((pair_id(&image_name(f, a, i), &image_name(f, b, j)), 1));
                    }
                }
            }
        }
    }
    let positives = out.len();
    let holdout_persons: Vec<(usize, usize)> = (first..cfg.families)
        .flat_map(|f| (0..p).map(move |m| (f, m)))
        .collect();
    let available = {
        let per_family = (p * n) as u128;
        let fams = cfg.holdout_families as u128;
        // unordered cross-family image pairs
        per_family * per_family * fams * (fams - 1) / 2
    };
    let target = (positives as u128).min(available) as usize;
    let mut seen = HashSet::new();
    while seen.len() < target {
        let (fa, ma) = holdout_persons[rng.random_range(0..holdout_persons.len())];
        let (fb, mb) = holdout_persons[rng.random_range(0..holdout_persons.len())];
        if fa == fb {
            continue;
        }
        let (ia, ib) = (rng.random_range(0..n), rng.random_range(0..n));
        let (x, y) = (image_name(fa, ma, ia), image_name(fb, mb, ib));
        let key = if x < y {
            (x.clone(), y.clone())
        } else {
            (y.clone(), x.clone())
        };
        if seen.insert(key) {
            out.push((pair_id(&x, &y), 0));
        }
    }
    out.shuffle(rng);
    out
}

impl SyntheticKinshipSet {
    /// Writes the relationship CSV, the labelled holdout list, the generator
    /// settings and the `images/<family>/<person>/<image>` tree.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let mkdir = |p: &Path| std::fs::create_dir_all(p).map_err(|e| Error::io(p, e));
        mkdir(dir)?;
        write_relationship_csv(&dir.join(RELATIONSHIP_FILE), &self.relations)?;
        let holdout: Vec<SubmissionRecord> = self
            .holdout
            .iter()
            .map(|(id, l)| SubmissionRecord {
                pair_id: id.clone(),
                is_related: f64::from(*l),
            })
            .collect();
        write_submission_csv(&dir.join(HOLDOUT_FILE), &holdout)?;
        let gen_path = dir.join(GENERATOR_FILE);
        std::fs::write(&gen_path, self.config.to_toml()).map_err(|e| Error::io(&gen_path, e))?;
        for img in &self.images {
            let person_dir = dir.join(IMAGE_DIR).join(&img.person);
            mkdir(&person_dir)?;
            write_grid(&person_dir.join(&img.name), &img.image)?;
        }
        Ok(())
    }
}

/// Pixel-space similarity `1 / (1 + mean squared difference)`.
pub fn pixel_distance_score(a: &Tensor, b: &Tensor) -> f64 {
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.numel() as f64;
    1.0 / (1.0 + mse)
}
