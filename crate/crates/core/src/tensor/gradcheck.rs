use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Central-difference gradient check settings.
#[derive(Clone, Debug)]
pub struct GradCheck {
    pub h: f64,
    /// Check at most this many coordinates, chosen uniformly at random.
    pub max_coords: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheck {
    fn default() -> Self {
        GradCheck {
            h: 1e-5,
            max_coords: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// max over checked coordinates of |analytic - numeric| / max(1, |numeric|)
    pub max_rel_error: f64,
    pub worst_input: usize,
    pub worst_index: usize,
    pub coords_checked: usize,
}

fn eval<F>(f: &F, inputs: &[Tensor]) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.constant(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let v = tape.value(out).item()?;
    if !v.is_finite() {
        return Err(Error::Evaluation(format!(
            "function value is not finite: {v}"
        )));
    }
    Ok(v)
}

/// Compares reverse-mode gradients of a scalar function of one tensor against
/// central finite differences with step `h`.
pub fn finite_diff_check<F>(f: F, x: &Tensor, h: f64) -> Result<f64>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    let cfg = GradCheck {
        h,
        ..GradCheck::default()
    };
    let report = finite_diff_check_many(|t, vs| f(t, vs[0]), std::slice::from_ref(x), &cfg)?;
    Ok(report.max_rel_error)
}

/// Multi-input variant of [`finite_diff_check`].
pub fn finite_diff_check_many<F>(
    f: F,
    inputs: &[Tensor],
    cfg: &GradCheck,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    if cfg.h.is_nan() || cfg.h <= 0.0 {
        return Err(Error::Parameter(format!(
            "finite difference step must be > 0, got {}",
            cfg.h
        )));
    }
    if inputs.iter().any(|t| !t.is_finite()) {
        return Err(Error::Evaluation(
            "gradient check input is not finite".into(),
        ));
    }

    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let value = tape.value(out).item()?;
    if !value.is_finite() {
        return Err(Error::Evaluation(format!(
            "function value is not finite: {value}"
        )));
    }
    tape.backward(out)?;
    let analytic: Vec<Tensor> = vars
        .iter()
        .map(|&v| tape.grad(v).expect("leaf requires grad"))
        .collect();
    drop(tape);

    let coords: Vec<(usize, usize)> = inputs
        .iter()
        .enumerate()
        .flat_map(|(i, t)| (0..t.numel()).map(move |j| (i, j)))
        .collect();
    let chosen: Vec<(usize, usize)> = match cfg.max_coords {
        Some(k) if k < coords.len() => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut idx = sample(&mut rng, coords.len(), k).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| coords[i]).collect()
        }
        _ => coords,
    };

    let mut work = inputs.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_input: 0,
        worst_index: 0,
        coords_checked: chosen.len(),
    };
    for &(i, j) in &chosen {
        let orig = work[i].data()[j];
        work[i].data_mut()[j] = orig + cfg.h;
        let plus = eval(&f, &work)?;
        work[i].data_mut()[j] = orig - cfg.h;
        let minus = eval(&f, &work)?;
        work[i].data_mut()[j] = orig;
        let numeric = (plus - minus) / (2.0 * cfg.h);
        let err = (analytic[i].data()[j] - numeric).abs() / numeric.abs().max(1.0);
        if err > report.max_rel_error || err.is_nan() {
            report.max_rel_error = err;
            report.worst_input = i;
            report.worst_index = j;
        }
    }
    Ok(report)
}
