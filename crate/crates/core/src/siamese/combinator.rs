use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Tape, Var};

/// Fusion of the two branch feature vectors before the classifier head.
///
/// All products and squares are elementwise; blocks are concatenated in the
/// order listed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combinator {
    /// `x − y`
    Diff,
    /// `[x² + y², x² − y², x·y]`
    Quad3,
    /// `[x − y, (x − y)², x² + y², x² − y², x·y]`
    Quad5,
}

impl Combinator {
    pub const ALL: [Combinator; 3] = [Combinator::Diff, Combinator::Quad3, Combinator::Quad5];

    /// Number of `D`-sized blocks in the output.
    pub fn blocks(self) -> usize {
        match self {
            Combinator::Diff => 1,
            Combinator::Quad3 => 3,
            Combinator::Quad5 => 5,
        }
    }

    pub fn output_dim(self, feature_dim: usize) -> usize {
        self.blocks() * feature_dim
    }

    /// Whether each output block changes sign when `x` and `y` are swapped.
    pub fn antisymmetric_blocks(self) -> &'static [bool] {
        match self {
            Combinator::Diff => &[true],
            Combinator::Quad3 => &[false, true, false],
            Combinator::Quad5 => &[true, false, false, true, false],
        }
    }

    pub fn combine(self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        if x.len() != y.len() {
            return Err(Error::dim("combine_features", &[x.len()], &[y.len()]));
        }
        let diff = || x.iter().zip(y).map(|(a, b)| a - b);
        let sq_diff = || diff().map(|d| d * d);
        let sq_sum = || x.iter().zip(y).map(|(a, b)| a * a + b * b);
        let sq_minus = || x.iter().zip(y).map(|(a, b)| a * a - b * b);
        let prod = || x.iter().zip(y).map(|(a, b)| a * b);
        let out = match self {
            Combinator::Diff => diff().collect(),
            Combinator::Quad3 => sq_sum().chain(sq_minus()).chain(prod()).collect(),
            Combinator::Quad5 => diff()
                .chain(sq_diff())
                .chain(sq_sum())
                .chain(sq_minus())
                .chain(prod())
                .collect(),
        };
        Ok(out)
    }

    /// Tape version of [`combine`](Self::combine); blocks are concatenated
    /// along the last axis, so `x` and `y` may be vectors or `B × D` batches.
    pub fn apply(self, tape: &mut Tape, x: Var, y: Var) -> Result<Var> {
        if tape.shape(x) != tape.shape(y) {
            return Err(Error::dim("combine_features", tape.shape(x), tape.shape(y)));
        }
        let axis = tape.shape(x).len() - 1;
        let diff = tape.sub(x, y)?;
        if self == Combinator::Diff {
            return Ok(diff);
        }
        let xx = tape.mul(x, x)?;
        let yy = tape.mul(y, y)?;
        let sq_sum = tape.add(xx, yy)?;
        let sq_minus = tape.sub(xx, yy)?;
        let prod = tape.mul(x, y)?;
        let blocks = match self {
            Combinator::Quad3 => vec![sq_sum, sq_minus, prod],
            _ => {
                let sq_diff = tape.mul(diff, diff)?;
                vec![diff, sq_diff, sq_sum, sq_minus, prod]
            }
        };
        tape.concat(&blocks, axis)
    }

    pub fn name(self) -> &'static str {
        match self {
            Combinator::Diff => "diff",
            Combinator::Quad3 => "quad3",
            Combinator::Quad5 => "quad5",
        }
    }
}

impl fmt::Display for Combinator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Combinator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "diff" => Ok(Combinator::Diff),
            "quad3" => Ok(Combinator::Quad3),
            "quad5" => Ok(Combinator::Quad5),
            _ => Err(Error::Config(format!(
                "unknown combinator '{s}' (expected diff, quad3 or quad5)"
            ))),
        }
    }
}
