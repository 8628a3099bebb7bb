use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{family_of, RelationshipRecord};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Labelled pair of image indices. `label` is 1 for kin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PairIndex {
    pub a: usize,
    pub b: usize,
    pub label: u8,
}

/// A labelled image pair borrowed from an image collection.
#[derive(Clone, Copy, Debug)]
pub struct PairSample<'a> {
    pub image_a: &'a Tensor,
    pub image_b: &'a Tensor,
    pub label: u8,
}

impl PairIndex {
    pub fn resolve(self, images: &[Tensor]) -> PairSample<'_> {
        PairSample {
            image_a: &images[self.a],
            image_b: &images[self.b],
            label: self.label,
        }
    }
}

/// Draws positive pairs from a relation list and negatives uniformly from
/// cross-family person pairs.
#[derive(Clone, Debug)]
pub struct PairSampler {
    relations: Vec<(String, String)>,
    person_images: BTreeMap<String, Vec<usize>>,
    persons: Vec<String>,
    families: Vec<String>,
    ratio: f64,
    repeats: usize,
}

impl PairSampler {
    /// `person_images` maps person ids to indices of their images.
    /// `ratio` is negatives per positive; `repeats` is positives drawn per
    /// relation each epoch.
    pub fn new(
        relations: &[RelationshipRecord],
        person_images: &BTreeMap<String, Vec<usize>>,
        ratio: f64,
        repeats: usize,
    ) -> Result<Self> {
        if relations.is_empty() {
            return Err(Error::Contract(
                "no relations to sample positives from".into(),
            ));
        }
        if !(ratio >= 0.0 && ratio.is_finite()) || repeats == 0 {
            return Err(Error::Parameter(format!(
                "negative ratio must be finite and >= 0 and repeats >= 1 (got {ratio}, {repeats})"
            )));
        }
        for r in relations {
            for p in [&r.person_a, &r.person_b] {
                if person_images.get(p).is_none_or(Vec::is_empty) {
                    return Err(Error::Contract(format!(
                        "related person '{p}' has no images"
                    )));
                }
            }
        }
        let persons: Vec<String> = person_images
            .iter()
            .filter(|(_, imgs)| !imgs.is_empty())
            .map(|(p, _)| p.clone())
            .collect();
        let families: Vec<String> = persons.iter().map(|p| family_of(p).to_string()).collect();
        if ratio > 0.0 && families.iter().all(|f| *f == families[0]) {
            return Err(Error::Contract(
                "negative sampling needs persons from at least two families".into(),
            ));
        }
        Ok(PairSampler {
            relations: relations
                .iter()
                .map(|r| (r.person_a.clone(), r.person_b.clone()))
                .collect(),
            person_images: person_images.clone(),
            persons,
            families,
            ratio,
            repeats,
        })
    }

    pub fn positives_per_epoch(&self) -> usize {
        self.relations.len() * self.repeats
    }

    pub fn negatives_per_epoch(&self) -> usize {
        (self.ratio * self.positives_per_epoch() as f64).round() as usize
    }

    fn pick(&self, person: &str, rng: &mut impl Rng) -> usize {
        let imgs = &self.person_images[person];
        imgs[rng.random_range(0..imgs.len())]
    }

    /// One shuffled epoch of pairs, fully determined by `seed`.
    pub fn epoch(&self, seed: u64) -> Vec<PairIndex> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(self.positives_per_epoch() + self.negatives_per_epoch());
        for _ in 0..self.repeats {
            for (pa, pb) in &self.relations {
                out.push(PairIndex {
                    a: self.pick(pa, &mut rng),
                    b: self.pick(pb, &mut rng),
                    label: 1,
                });
            }
        }
        let n = self.persons.len();
        for _ in 0..self.negatives_per_epoch() {
            let (i, j) = loop {
                let i = rng.random_range(0..n);
                let j = rng.random_range(0..n);
                if self.families[i] != self.families[j] {
                    break (i, j);
                }
            };
            out.push(PairIndex {
                a: self.pick(&self.persons[i], &mut rng),
                b: self.pick(&self.persons[j], &mut rng),
                label: 0,
            });
        }
        out.shuffle(&mut rng);
        out
    }
}

/// One epoch of positives and `ratio`-scaled cross-family negatives.
pub fn sample_pairs(
    relations: &[RelationshipRecord],
    person_images: &BTreeMap<String, Vec<usize>>,
    ratio: f64,
    seed: u64,
) -> Result<Vec<PairIndex>> {
    Ok(PairSampler::new(relations, person_images, ratio, 1)?.epoch(seed))
}
