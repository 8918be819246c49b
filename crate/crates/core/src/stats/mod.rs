//! One-way ANOVA with Bonferroni post-hoc comparisons, balanced full-factorial
//! ANOVA with partial eta squared, and mean/SD aggregation.

mod factorial;

pub use factorial::{
    factorial_anova, marginal_posthoc, render_table, AnovaRow, AnovaTable, FactorialDesign, MarginalPosthoc, Observation,
};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("need at least {need} {what}, got {got}")]
    TooFew { what: &'static str, need: usize, got: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("degenerate ANOVA: no variance within or between groups")]
    DegenerateAnova,
    #[error("partial eta squared undefined when both sums of squares are zero")]
    DegenerateEffect,
    #[error("unbalanced design: {0}")]
    UnbalancedDesign(String),
    #[error("results table is partial: {0}")]
    PartialTable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub n: usize,
    pub mean: f64,
    /// Sample SD (n − 1); absent for a single value.
    pub sd: Option<f64>,
}

pub fn aggregate_mean_sd(values: &[f64]) -> Result<MeanSd, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (n >= 2).then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
    Ok(MeanSd { n, mean, sd })
}

/// Upper tail of F(d1, d2) at `f`.
pub fn f_sf(f: f64, d1: f64, d2: f64) -> f64 {
    if f.is_infinite() {
        return 0.0;
    }
    if f <= 0.0 {
        return 1.0;
    }
    FisherSnedecor::new(d1, d2).expect("positive df").sf(f)
}

/// Two-sided Student t p-value.
pub fn t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive df");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneWayAnova {
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p: f64,
    pub ss_between: f64,
    pub ss_within: f64,
}

impl OneWayAnova {
    pub fn ms_within(&self) -> f64 {
        self.ss_within / self.df_within as f64
    }
}

fn check_groups(groups: &[Vec<f64>]) -> Result<(), StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFew { what: "groups", need: 2, got: groups.len() });
    }
    if let Some(g) = groups.iter().find(|g| g.len() < 2) {
        return Err(StatsError::TooFew { what: "values per group", need: 2, got: g.len() });
    }
    if groups.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn one_way_anova(groups: &[Vec<f64>]) -> Result<OneWayAnova, StatsError> {
    check_groups(groups)?;
    let n: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += g.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    }
    let df_between = groups.len() - 1;
    let df_within = n - groups.len();
    let f = match (ss_between > 0.0, ss_within > 0.0) {
        (false, false) => return Err(StatsError::DegenerateAnova),
        (true, false) => f64::INFINITY,
        _ => (ss_between / df_between as f64) / (ss_within / df_within as f64),
    };
    let p = f_sf(f, df_between as f64, df_within as f64);
    Ok(OneWayAnova { f, df_between, df_within, p, ss_between, ss_within })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub i: usize,
    pub j: usize,
    pub mean_diff: f64,
    pub t: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posthoc {
    pub alpha: f64,
    pub m: usize,
    pub threshold: f64,
    pub df: usize,
    pub comparisons: Vec<Comparison>,
}

/// All pairwise t tests using the pooled within-group variance of the
/// omnibus ANOVA, Bonferroni-adjusted.
pub fn bonferroni_posthoc(groups: &[Vec<f64>], alpha: f64) -> Result<Posthoc, StatsError> {
    let anova = one_way_anova(groups)?;
    let g = groups.len();
    let m = g * (g - 1) / 2;
    let threshold = alpha / m as f64;
    let ms = anova.ms_within();
    let mut comparisons = Vec::with_capacity(m);
    for i in 0..g {
        for j in i + 1..g {
            let diff = mean(&groups[i]) - mean(&groups[j]);
            let se = (ms * (1.0 / groups[i].len() as f64 + 1.0 / groups[j].len() as f64)).sqrt();
            let (t, p_raw) = if se > 0.0 {
                let t = diff / se;
                (t, t_two_sided(t, anova.df_within as f64))
            } else if diff == 0.0 {
                (0.0, 1.0)
            } else {
                (diff.signum() * f64::INFINITY, 0.0)
            };
            comparisons.push(Comparison {
                i,
                j,
                mean_diff: diff,
                t,
                p_raw,
                p_adjusted: (m as f64 * p_raw).min(1.0),
                significant: p_raw < threshold,
            });
        }
    }
    Ok(Posthoc { alpha, m, threshold, df: anova.df_within, comparisons })
}

pub fn partial_eta_squared(ss_effect: f64, ss_error: f64) -> Result<f64, StatsError> {
    if !(ss_effect >= 0.0 && ss_error >= 0.0) {
        return Err(StatsError::NonFinite);
    }
    if ss_effect == 0.0 && ss_error == 0.0 {
        return Err(StatsError::DegenerateEffect);
    }
    Ok(ss_effect / (ss_effect + ss_error))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_sd_sample_denominator() {
        let r = aggregate_mean_sd(&[69.0, 67.6, 59.1, 64.4]).unwrap();
        assert!((r.mean - 65.025).abs() < 1e-12);
        let sd = r.sd.unwrap();
        // hand value: Σ(x−m)² = 57.9275, /3 → sqrt
        assert!((sd - (57.9275f64 / 3.0).sqrt()).abs() < 1e-9);
        assert_eq!(aggregate_mean_sd(&[3.0, 3.0, 3.0]).unwrap().sd, Some(0.0));
        assert_eq!(aggregate_mean_sd(&[]), Err(StatsError::EmptyInput));
        assert_eq!(aggregate_mean_sd(&[1.0]).unwrap().sd, None);
    }

    #[test]
    fn one_way_hand_decomposition() {
        let g = vec![vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0], vec![3.0, 4.0, 5.0]];
        let a = one_way_anova(&g).unwrap();
        assert_eq!((a.ss_between, a.ss_within), (6.0, 6.0));
        assert_eq!(a.f, 3.0);
        assert_eq!((a.df_between, a.df_within), (2, 6));
        assert!(a.p > 0.1 && a.p < 0.15);
    }

    #[test]
    fn identical_groups_give_zero_f() {
        let g = vec![vec![1.0, 2.0, 3.0]; 3];
        let a = one_way_anova(&g).unwrap();
        assert_eq!(a.f, 0.0);
        assert_eq!(a.p, 1.0);
        let ph = bonferroni_posthoc(&g, 0.05).unwrap();
        assert!(ph.comparisons.iter().all(|c| !c.significant));
    }

    #[test]
    fn constant_data_is_degenerate() {
        assert_eq!(one_way_anova(&[vec![2.0, 2.0], vec![2.0, 2.0]]), Err(StatsError::DegenerateAnova));
    }

    #[test]
    fn large_shift_is_significant() {
        let base: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).sin()).collect();
        let sd = aggregate_mean_sd(&base).unwrap().sd.unwrap();
        let shifted: Vec<f64> = base.iter().map(|v| v + 10.0 * sd).collect();
        let a = one_way_anova(&[base.clone(), base, shifted]).unwrap();
        assert!(a.p < 0.001);
    }

    #[test]
    fn bonferroni_counts_and_adjustment() {
        let g = vec![vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0], vec![3.0, 4.0, 5.0]];
        let ph = bonferroni_posthoc(&g, 0.05).unwrap();
        assert_eq!(ph.m, 3);
        assert!((ph.threshold - 0.05 / 3.0).abs() < 1e-15);
        for c in &ph.comparisons {
            assert!(c.p_adjusted >= c.p_raw && c.p_adjusted <= 1.0);
        }
        // pooled MS_within = 1, se = sqrt(2/3), t = −1/se for groups 0 and 1
        let c01 = &ph.comparisons[0];
        assert!((c01.t + 1.0 / (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn eta_squared_cases() {
        assert_eq!(partial_eta_squared(3.0, 3.0).unwrap(), 0.5);
        assert_eq!(partial_eta_squared(0.0, 4.0).unwrap(), 0.0);
        assert_eq!(partial_eta_squared(0.0, 0.0), Err(StatsError::DegenerateEffect));
    }

    #[test]
    fn f_tail_reference_values() {
        // closed form for d1 = 2: sf = (1 + 2F/d2)^(−d2/2)
        let want = (1.0f64 + 2.0 * 3.0 / 6.0).powf(-3.0);
        assert!((f_sf(3.0, 2.0, 6.0) - want).abs() < 1e-10);
    }
}
