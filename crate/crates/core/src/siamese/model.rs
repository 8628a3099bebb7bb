use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::combinator::Combinator;
use crate::error::{Error, Result};
use crate::nn::{Bound, Init, Linear, ParamStore};
use crate::pvt::{Pvt, PvtConfig};
use crate::tensor::{Tape, Tensor, Var};

/// Index of the "related" class in the two-way output.
pub const KIN_CLASS: usize = 1;

/// Architecture of a full siamese verifier.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub pvt: PvtConfig,
    pub combinator: Combinator,
    /// Widths of the two hidden fully-connected layers; the third maps to 2
    /// logits. Defaults to `[kD/2, kD/4]`.
    pub hidden: [usize; 2],
}

impl ModelConfig {
    pub fn new(pvt: PvtConfig, combinator: Combinator) -> Self {
        let width = combinator.output_dim(pvt.feature_dim);
        ModelConfig {
            pvt,
            combinator,
            hidden: [(width / 2).max(1), (width / 4).max(1)],
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("model config: {e}")))
    }
}

/// Three affine layers with rectifiers in between.
#[derive(Clone, Debug)]
pub struct SiameseHead {
    pub layers: [Linear; 3],
}

impl SiameseHead {
    pub fn new(store: &mut ParamStore, input_dim: usize, hidden: [usize; 2], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_4ead);
        let dims = [input_dim, hidden[0], hidden[1], 2];
        let layers = std::array::from_fn(|i| {
            Linear::new(
                store,
                &format!("head.fc{i}"),
                dims[i],
                dims[i + 1],
                Init::He,
                &mut rng,
            )
        });
        SiameseHead { layers }
    }

    pub fn forward(&self, tape: &mut Tape, p: &Bound, x: Var) -> Result<Var> {
        let mut h = x;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(tape, p, h)?;
            if i < 2 {
                h = tape.relu(h);
            }
        }
        Ok(h)
    }
}

/// Twin weight-tied PVT branches, a feature combinator and the head.
/// Both branches read the same [`ParamStore`] entries, so there is a single
/// parameter set.
#[derive(Clone, Debug)]
pub struct SiameseModel {
    pub config: ModelConfig,
    pub params: ParamStore,
    pub pvt: Pvt,
    pub head: SiameseHead,
}

impl SiameseModel {
    pub fn new(config: ModelConfig) -> Result<Self> {
        let mut params = ParamStore::new();
        let pvt = Pvt::new(&config.pvt, &mut params, "pvt.")?;
        if config.hidden.contains(&0) {
            return Err(Error::Config("head hidden widths must be positive".into()));
        }
        let input = config.combinator.output_dim(config.pvt.feature_dim);
        let head = SiameseHead::new(&mut params, input, config.hidden, config.pvt.seed);
        Ok(SiameseModel {
            config,
            params,
            pvt,
            head,
        })
    }

    pub fn combinator(&self) -> Combinator {
        self.config.combinator
    }

    pub fn features(&self, tape: &mut Tape, p: &Bound, image: &Tensor) -> Result<Var> {
        let x = tape.constant(image.clone());
        self.pvt.forward(tape, p, x)
    }

    /// Head logits (`B × 2`) for a batch of pre-computed feature vectors.
    pub fn head_logits(&self, tape: &mut Tape, p: &Bound, fa: &[Var], fb: &[Var]) -> Result<Var> {
        if fa.len() != fb.len() || fa.is_empty() {
            return Err(Error::Contract(
                "head_logits: batch sides differ or are empty".into(),
            ));
        }
        let d = self.config.pvt.feature_dim;
        let rows = |tape: &mut Tape, fs: &[Var]| -> Result<Var> {
            let rs = fs
                .iter()
                .map(|&f| tape.reshape(f, &[1, d]))
                .collect::<Result<Vec<_>>>()?;
            if rs.len() == 1 {
                Ok(rs[0])
            } else {
                tape.concat(&rs, 0)
            }
        };
        let a = rows(tape, fa)?;
        let b = rows(tape, fb)?;
        let combined = self.config.combinator.apply(tape, a, b)?;
        self.head.forward(tape, p, combined)
    }

    /// Logits for a batch of image pairs.
    pub fn logits(&self, tape: &mut Tape, p: &Bound, pairs: &[(&Tensor, &Tensor)]) -> Result<Var> {
        let mut fa = Vec::with_capacity(pairs.len());
        let mut fb = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            fa.push(self.features(tape, p, a)?);
            fb.push(self.features(tape, p, b)?);
        }
        self.head_logits(tape, p, &fa, &fb)
    }

    /// Probability that the two images are kin.
    pub fn predict(&self, a: &Tensor, b: &Tensor) -> Result<f64> {
        let mut tape = Tape::new();
        let p = self.params.bind_frozen(&mut tape);
        let logits = self.logits(&mut tape, &p, &[(a, b)])?;
        let probs = tape.softmax(logits, 1)?;
        Ok(tape.value(probs).data()[KIN_CLASS])
    }

    /// Feature vectors for a set of images, inference only.
    pub fn embed(&self, image: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let p = self.params.bind_frozen(&mut tape);
        let f = self.features(&mut tape, &p, image)?;
        Ok(tape.value(f).clone())
    }

    /// Kin probability from two precomputed feature vectors.
    pub fn predict_from_features(&self, fa: &Tensor, fb: &Tensor) -> Result<f64> {
        let mut tape = Tape::new();
        let p = self.params.bind_frozen(&mut tape);
        let a = tape.constant(fa.clone());
        let b = tape.constant(fb.clone());
        let logits = self.head_logits(&mut tape, &p, &[a], &[b])?;
        let probs = tape.softmax(logits, 1)?;
        Ok(tape.value(probs).data()[KIN_CLASS])
    }

    /// Mean cross-entropy of a labelled batch, recorded on `tape`.
    pub fn loss(
        &self,
        tape: &mut Tape,
        p: &Bound,
        pairs: &[(&Tensor, &Tensor)],
        labels: &[usize],
    ) -> Result<Var> {
        let logits = self.logits(tape, p, pairs)?;
        tape.cross_entropy(logits, labels)
    }
}

/// `−log softmax(logits)[label]` evaluated with log-sum-exp.
pub fn cross_entropy_loss(logits: &[f64], label: usize) -> Result<f64> {
    if label >= logits.len() {
        return Err(Error::Contract(format!(
            "label {label} invalid for {} classes",
            logits.len()
        )));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    Ok(lse - logits[label])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_entropy_examples() {
        assert!((cross_entropy_loss(&[0.0, 0.0], 0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((cross_entropy_loss(&[0.0, 0.0], 1).unwrap() - 2f64.ln()).abs() < 1e-15);
        let v = cross_entropy_loss(&[0.0, 3f64.ln()], 1).unwrap();
        assert!((v + 0.75f64.ln()).abs() < 1e-15);
        assert!((v - 0.2877).abs() < 1e-4);
        assert_eq!(
            cross_entropy_loss(&[0.0, 1.0], 2).unwrap_err().kind(),
            "contract"
        );
        assert!(cross_entropy_loss(&[0.0, 800.0], 1).unwrap() >= 0.0);
        assert!((cross_entropy_loss(&[0.0, 800.0], 0).unwrap() - 800.0).abs() < 1e-9);
    }

    #[test]
    fn default_hidden_widths() {
        let c = ModelConfig::new(PvtConfig::nano(), Combinator::Quad5);
        assert_eq!(c.hidden, [160, 80]);
        let back = ModelConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }
}
