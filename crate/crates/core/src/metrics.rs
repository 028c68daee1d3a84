//! Accuracy, relative Gaussian robustness, corruption error normalization and
//! the clean-accuracy-gated hyper-parameter selection rule.

use std::collections::BTreeMap;

use crate::augment::AugmentSpec;
use crate::corrupt::EVAL_SIGMAS;
use crate::error::{Error, Result};

/// Corruption kinds dropped by the `(-noise)` variant of mCE.
pub const NOISE_KINDS: [&str; 3] = ["gaussian_noise", "shot_noise", "impulse_noise"];

/// `(kind, severity) -> error fraction`. Kinds are free-form strings so
/// error maps from external benchmarks can be scored too.
pub type ErrorMap = BTreeMap<(String, u32), f64>;

/// Fraction of positions where `predictions` equals `labels`.
pub fn accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::InvalidArgument("cannot score zero predictions".into()));
    }
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

fn check_fraction(what: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} {v} outside [0, 1]")))
    }
}

/// Clean accuracy, accuracy under each eval sigma, and per-corruption errors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalResult {
    pub clean_accuracy: f64,
    /// `(sigma, accuracy)` pairs in insertion order.
    pub per_sigma_accuracy: Vec<(f64, f64)>,
    pub per_corruption_error: ErrorMap,
}

impl EvalResult {
    pub fn new(clean_accuracy: f64) -> Result<Self> {
        check_fraction("clean accuracy", clean_accuracy)?;
        Ok(Self {
            clean_accuracy,
            ..Self::default()
        })
    }

    /// Builds a result from the clean accuracy and the six eval-sigma
    /// accuracies in [`EVAL_SIGMAS`] order.
    pub fn with_suite(clean_accuracy: f64, suite: [f64; 6]) -> Result<Self> {
        let mut e = Self::new(clean_accuracy)?;
        for (s, a) in EVAL_SIGMAS.iter().zip(suite) {
            e.set_sigma_accuracy(*s, a)?;
        }
        Ok(e)
    }

    pub fn set_sigma_accuracy(&mut self, sigma: f64, acc: f64) -> Result<()> {
        check_fraction("accuracy", acc)?;
        match self.per_sigma_accuracy.iter_mut().find(|(s, _)| same_sigma(*s, sigma)) {
            Some(slot) => slot.1 = acc,
            None => self.per_sigma_accuracy.push((sigma, acc)),
        }
        Ok(())
    }

    pub fn sigma_accuracy(&self, sigma: f64) -> Option<f64> {
        self.per_sigma_accuracy
            .iter()
            .find(|(s, _)| same_sigma(*s, sigma))
            .map(|&(_, a)| a)
    }

    pub fn set_corruption_error(&mut self, kind: &str, severity: u32, err: f64) -> Result<()> {
        check_fraction("error", err)?;
        self.per_corruption_error.insert((kind.to_owned(), severity), err);
        Ok(())
    }
}

fn same_sigma(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

/// Mean accuracy over the six eval sigmas minus clean accuracy.
pub fn relative_gaussian_robustness(eval: &EvalResult) -> Result<f64> {
    let mut sum = 0.0;
    for &s in &EVAL_SIGMAS {
        sum += eval.sigma_accuracy(s).ok_or(Error::MissingSigma(s))?;
    }
    Ok(sum / EVAL_SIGMAS.len() as f64 - eval.clean_accuracy)
}

/// Per-kind CE: summed model error over severities divided by summed
/// baseline error.
pub fn corruption_error(model: &ErrorMap, baseline: &ErrorMap) -> Result<BTreeMap<String, f64>> {
    if let Some(k) = model.keys().find(|k| !baseline.contains_key(*k)) {
        return Err(Error::KeyMismatch(format!("{} severity {} missing from baseline", k.0, k.1)));
    }
    if let Some(k) = baseline.keys().find(|k| !model.contains_key(*k)) {
        return Err(Error::KeyMismatch(format!("{} severity {} missing from model", k.0, k.1)));
    }
    let mut sums: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for ((kind, sev), &m) in model {
        let b = baseline[&(kind.clone(), *sev)];
        let e = sums.entry(kind.clone()).or_default();
        e.0 += m;
        e.1 += b;
    }
    sums.into_iter()
        .map(|(kind, (m, b))| {
            if b > 0.0 {
                Ok((kind, m / b))
            } else {
                Err(Error::DegenerateBaseline(kind))
            }
        })
        .collect()
}

pub fn is_noise_kind(kind: &str) -> bool {
    NOISE_KINDS.contains(&kind)
}

/// Unweighted mean CE, optionally excluding the noise kinds.
pub fn mce(ce: &BTreeMap<String, f64>, exclude_noise: bool) -> Result<f64> {
    let values: Vec<f64> = ce
        .iter()
        .filter(|(k, _)| !(exclude_noise && is_noise_kind(k)))
        .map(|(_, &v)| v)
        .collect();
    if values.is_empty() {
        return Err(if exclude_noise {
            Error::EmptyAfterExclusion
        } else {
            Error::InvalidArgument("no corruption kinds to average".into())
        });
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Summary of a model's robustness against a baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub relative_robustness: Option<f64>,
    pub ce: BTreeMap<String, f64>,
    pub mce: f64,
    /// `None` when every kind is a noise kind.
    pub mce_minus_noise: Option<f64>,
}

impl RobustnessReport {
    pub fn build(model: &ErrorMap, baseline: &ErrorMap, eval: Option<&EvalResult>) -> Result<Self> {
        let ce = corruption_error(model, baseline)?;
        let mce_all = mce(&ce, false)?;
        let mce_minus_noise = match mce(&ce, true) {
            Ok(v) => Some(v),
            Err(Error::EmptyAfterExclusion) => None,
            Err(e) => return Err(e),
        };
        let relative_robustness = eval.map(relative_gaussian_robustness).transpose()?;
        Ok(Self {
            relative_robustness,
            ce,
            mce: mce_all,
            mce_minus_noise,
        })
    }
}

/// One point of a hyper-parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub label: String,
    pub spec: Option<AugmentSpec>,
    pub eval: EvalResult,
}

impl Candidate {
    pub fn new(label: impl Into<String>, eval: EvalResult) -> Self {
        Self {
            label: label.into(),
            spec: None,
            eval,
        }
    }
}

/// Index of the selected candidate: the most robust among those with clean
/// accuracy `>= z`, else the one with the highest clean accuracy. Ties go to
/// the earliest candidate.
pub fn select_hparams_index(candidates: &[Candidate], z: f64) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidates to select from".into()));
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        if c.eval.clean_accuracy >= z {
            let r = relative_gaussian_robustness(&c.eval)?;
            if best.is_none_or(|(_, br)| r > br) {
                best = Some((i, r));
            }
        }
    }
    if let Some((i, _)) = best {
        return Ok(i);
    }
    let mut top = 0;
    for (i, c) in candidates.iter().enumerate().skip(1) {
        if c.eval.clean_accuracy > candidates[top].eval.clean_accuracy {
            top = i;
        }
    }
    Ok(top)
}

pub fn select_hparams(candidates: &[Candidate], z: f64) -> Result<&Candidate> {
    select_hparams_index(candidates, z).map(|i| &candidates[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errs(rows: &[(&str, u32, f64)]) -> ErrorMap {
        rows.iter().map(|&(k, s, e)| ((k.to_owned(), s), e)).collect()
    }

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0], &[1, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 2, 3, 4], &[1, 2, 3, 0]).unwrap(), 0.75);
        assert!(accuracy(&[1], &[1, 2]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn robustness_arithmetic() {
        let flat = EvalResult::with_suite(0.9, [0.9; 6]).unwrap();
        assert_eq!(relative_gaussian_robustness(&flat).unwrap(), 0.0);
        let drop = EvalResult::with_suite(0.96, [0.90; 6]).unwrap();
        assert!((relative_gaussian_robustness(&drop).unwrap() + 0.06).abs() < 1e-12);
        let up = EvalResult::with_suite(0.90, [0.9, 0.9, 0.9, 0.9, 0.9, 0.96]).unwrap();
        assert!((relative_gaussian_robustness(&up).unwrap() - 0.01).abs() < 1e-12);

        let mut partial = EvalResult::new(0.5).unwrap();
        partial.set_sigma_accuracy(0.1, 0.4).unwrap();
        assert_eq!(relative_gaussian_robustness(&partial), Err(Error::MissingSigma(0.2)));
        assert!(EvalResult::new(1.2).is_err());
    }

    #[test]
    fn ce_cases() {
        let base = errs(&[("contrast", 1, 0.4), ("contrast", 2, 0.4)]);
        let ce = corruption_error(&base, &base).unwrap();
        assert_eq!(ce["contrast"], 1.0);

        let half = errs(&[("contrast", 1, 0.2), ("contrast", 2, 0.2)]);
        assert_eq!(corruption_error(&half, &base).unwrap()["contrast"], 0.5);

        let model = errs(&[("contrast", 1, 0.2), ("contrast", 2, 0.4)]);
        let v = corruption_error(&model, &base).unwrap()["contrast"];
        assert!((v - 0.75).abs() < 1e-15);

        let missing = errs(&[("contrast", 1, 0.2)]);
        assert!(matches!(corruption_error(&missing, &base), Err(Error::KeyMismatch(_))));
        let zero = errs(&[("contrast", 1, 0.0), ("contrast", 2, 0.0)]);
        assert_eq!(
            corruption_error(&base, &zero),
            Err(Error::DegenerateBaseline("contrast".into()))
        );
    }

    #[test]
    fn mce_cases() {
        let ones: BTreeMap<String, f64> = ["a", "b", "gaussian_noise"]
            .iter()
            .map(|k| (k.to_string(), 1.0))
            .collect();
        assert_eq!(mce(&ones, false).unwrap(), 1.0);

        let mixed = BTreeMap::from([("gaussian_noise".to_string(), 0.2), ("brightness".to_string(), 0.8)]);
        assert_eq!(mce(&mixed, true).unwrap(), 0.8);

        let ab = BTreeMap::from([("a".to_string(), 0.6), ("b".to_string(), 0.9)]);
        assert!((mce(&ab, false).unwrap() - 0.75).abs() < 1e-15);

        let noise_only: BTreeMap<String, f64> =
            NOISE_KINDS.iter().map(|k| (k.to_string(), 0.5)).collect();
        assert_eq!(mce(&noise_only, true), Err(Error::EmptyAfterExclusion));
    }

    #[test]
    fn report_handles_noise_only_maps() {
        let m = errs(&[("shot_noise", 1, 0.3)]);
        let r = RobustnessReport::build(&m, &m, None).unwrap();
        assert_eq!(r.mce, 1.0);
        assert_eq!(r.mce_minus_noise, None);
    }

    fn cand(label: &str, clean: f64, rob: f64) -> Candidate {
        // Every sigma accuracy set to clean + rob gives that robustness.
        Candidate::new(label, EvalResult::with_suite(clean, [clean + rob; 6]).unwrap())
    }

    #[test]
    fn selection_rule() {
        let single = [cand("only", 0.5, -0.3)];
        assert_eq!(select_hparams(&single, 0.99).unwrap().label, "only");

        let cands = [cand("A", 0.97, -0.05), cand("B", 0.96, -0.02)];
        assert_eq!(select_hparams(&cands, 0.965).unwrap().label, "A");
        assert_eq!(select_hparams(&cands, 0.95).unwrap().label, "B");
        // Nobody clears the gate: highest clean accuracy wins.
        assert_eq!(select_hparams(&cands, 0.99).unwrap().label, "A");

        let tied = [cand("first", 0.9, -0.1), cand("second", 0.9, -0.1)];
        assert_eq!(select_hparams(&tied, 0.5).unwrap().label, "first");
        assert_eq!(select_hparams(&tied, 0.95).unwrap().label, "first");

        assert!(select_hparams(&[], 0.5).is_err());
    }
}
