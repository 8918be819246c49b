//! Inter-rater agreement: pairwise Cohen's kappa.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AgreementError {
    #[error("rating vectors differ in length ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("need at least 2 rated items, got {0}")]
    TooFewItems(usize),
    /// Chance agreement is 1: both raters used one identical category.
    /// Kappa is taken as 1 when observed agreement is also 1.
    #[error("degenerate agreement: chance agreement is 1 (observed {observed})")]
    DegenerateAgreement { observed: f64 },
}

impl AgreementError {
    /// The conventional value for the degenerate case, if any.
    pub fn defined_kappa(&self) -> Option<f64> {
        match self {
            AgreementError::DegenerateAgreement { observed } if *observed == 1.0 => Some(1.0),
            _ => None,
        }
    }
}

/// Two raters' labels over the same items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingPair<T> {
    pub rater_a: Vec<T>,
    pub rater_b: Vec<T>,
}

impl<T: Ord + Clone> RatingPair<T> {
    pub fn new(rater_a: Vec<T>, rater_b: Vec<T>) -> Result<Self, AgreementError> {
        if rater_a.len() != rater_b.len() {
            return Err(AgreementError::LengthMismatch { a: rater_a.len(), b: rater_b.len() });
        }
        if rater_a.len() < 2 {
            return Err(AgreementError::TooFewItems(rater_a.len()));
        }
        Ok(RatingPair { rater_a, rater_b })
    }

    pub fn items(&self) -> usize {
        self.rater_a.len()
    }
}

/// κ = (p_o − p_e) / (1 − p_e).
pub fn cohen_kappa<T: Ord + Clone>(pair: &RatingPair<T>) -> Result<f64, AgreementError> {
    let n = pair.items() as f64;
    let mut margins: BTreeMap<&T, (f64, f64)> = BTreeMap::new();
    let mut agree = 0.0;
    for (a, b) in pair.rater_a.iter().zip(&pair.rater_b) {
        margins.entry(a).or_default().0 += 1.0;
        margins.entry(b).or_default().1 += 1.0;
        if a == b {
            agree += 1.0;
        }
    }
    let p_o = agree / n;
    let p_e: f64 = margins.values().map(|(ma, mb)| (ma / n) * (mb / n)).sum();
    if (1.0 - p_e).abs() < 1e-15 {
        return Err(AgreementError::DegenerateAgreement { observed: p_o });
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Mean pairwise κ over every rater pair (multi-rater reduction).
pub fn mean_pairwise_kappa<T: Ord + Clone>(raters: &[Vec<T>]) -> Result<f64, AgreementError> {
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..raters.len() {
        for j in i + 1..raters.len() {
            let pair = RatingPair::new(raters[i].clone(), raters[j].clone())?;
            total += match cohen_kappa(&pair) {
                Ok(k) => k,
                Err(e) => e.defined_kappa().ok_or(e)?,
            };
            count += 1;
        }
    }
    if count == 0 {
        return Err(AgreementError::TooFewItems(raters.len()));
    }
    Ok(total / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaBand {
    Poor,
    Slight,
    Fair,
    Moderate,
    Substantial,
    AlmostPerfect,
    Perfect,
}

impl fmt::Display for KappaBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            KappaBand::Poor => "poor",
            KappaBand::Slight => "slight",
            KappaBand::Fair => "fair",
            KappaBand::Moderate => "moderate",
            KappaBand::Substantial => "substantial",
            KappaBand::AlmostPerfect => "almost perfect",
            KappaBand::Perfect => "perfect",
        };
        f.write_str(s)
    }
}

/// Conventional bands: ≤0 poor, to .20 slight, to .40 fair, to .60
/// moderate, to .80 substantial, below 1 almost perfect, 1 perfect.
pub fn interpret_kappa(kappa: f64) -> KappaBand {
    match kappa {
        k if k >= 1.0 => KappaBand::Perfect,
        k if k <= 0.0 => KappaBand::Poor,
        k if k <= 0.20 => KappaBand::Slight,
        k if k <= 0.40 => KappaBand::Fair,
        k if k <= 0.60 => KappaBand::Moderate,
        k if k <= 0.80 => KappaBand::Substantial,
        _ => KappaBand::AlmostPerfect,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts_pair(a: usize, b: usize, c: usize, d: usize) -> RatingPair<u8> {
        // a: yes/yes, b: yes/no, c: no/yes, d: no/no
        let mut ra = Vec::new();
        let mut rb = Vec::new();
        for (n, x, y) in [(a, 1, 1), (b, 1, 0), (c, 0, 1), (d, 0, 0)] {
            ra.extend(std::iter::repeat_n(x, n));
            rb.extend(std::iter::repeat_n(y, n));
        }
        RatingPair::new(ra, rb).unwrap()
    }

    #[test]
    fn identical_vectors_are_perfect() {
        let p = RatingPair::new(vec!["x", "y", "z", "x"], vec!["x", "y", "z", "x"]).unwrap();
        assert_eq!(cohen_kappa(&p).unwrap(), 1.0);
    }

    #[test]
    fn two_by_two_example() {
        // p_o = 35/50; rater A yes = 25, rater B yes = 30
        let p_o: f64 = 35.0 / 50.0;
        let p_e: f64 = (25.0 / 50.0) * (30.0 / 50.0) + (25.0 / 50.0) * (20.0 / 50.0);
        let want = (p_o - p_e) / (1.0 - p_e);
        let got = cohen_kappa(&counts_pair(20, 5, 10, 15)).unwrap();
        assert!((got - want).abs() < 1e-12);
        assert!((got - 0.4).abs() < 1e-12);
    }

    #[test]
    fn symmetric_and_relabel_invariant() {
        let p = counts_pair(12, 3, 7, 9);
        let swapped = RatingPair::new(p.rater_b.clone(), p.rater_a.clone()).unwrap();
        assert!((cohen_kappa(&p).unwrap() - cohen_kappa(&swapped).unwrap()).abs() < 1e-15);
        let relabel = |v: &[u8]| v.iter().map(|&x| if x == 1 { "no" } else { "yes" }).collect::<Vec<_>>();
        let r = RatingPair::new(relabel(&p.rater_a), relabel(&p.rater_b)).unwrap();
        assert!((cohen_kappa(&p).unwrap() - cohen_kappa(&r).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_constant_raters() {
        let p = RatingPair::new(vec![1, 1, 1], vec![1, 1, 1]).unwrap();
        let err = cohen_kappa(&p).unwrap_err();
        assert_eq!(err.defined_kappa(), Some(1.0));
    }

    #[test]
    fn input_validation() {
        assert!(matches!(RatingPair::new(vec![1], vec![1]), Err(AgreementError::TooFewItems(1))));
        assert!(matches!(RatingPair::new(vec![1, 2], vec![1]), Err(AgreementError::LengthMismatch { .. })));
    }

    #[test]
    fn bands() {
        assert_eq!(interpret_kappa(0.30), KappaBand::Fair);
        assert_eq!(interpret_kappa(0.85), KappaBand::AlmostPerfect);
        assert_eq!(interpret_kappa(1.0), KappaBand::Perfect);
        assert_eq!(interpret_kappa(-0.2), KappaBand::Poor);
        assert_eq!(interpret_kappa(0.0), KappaBand::Poor);
        assert_eq!(interpret_kappa(0.15), KappaBand::Slight);
        assert_eq!(interpret_kappa(0.5), KappaBand::Moderate);
        assert_eq!(interpret_kappa(0.7), KappaBand::Substantial);
    }

    #[test]
    fn mean_over_rater_pairs() {
        let raters = vec![vec![0, 1, 0, 1], vec![0, 1, 0, 1], vec![0, 1, 0, 1]];
        assert_eq!(mean_pairwise_kappa(&raters).unwrap(), 1.0);
    }
}
