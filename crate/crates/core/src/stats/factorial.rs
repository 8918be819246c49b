//! Balanced N-way full-factorial ANOVA.
//!
//! For a factor subset S the effect of a level combination is
//! `τ_S = Σ_{T ⊆ S} (−1)^{|S∖T|} m_T`, where `m_T` is the marginal mean over
//! the factors in T (`m_∅` is the grand mean), and
//! `SS_S = (N / cells_S) · Σ τ_S²`. In a balanced design these add up with the
//! within-cell error to the total sum of squares.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{f_sf, t_two_sided, Comparison, Posthoc, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Level index per factor, 0-based.
    pub cell: Vec<usize>,
    pub replicate: usize,
    pub response: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorialDesign {
    pub factor_names: Vec<String>,
    pub factor_levels: Vec<usize>,
    pub observations: Vec<Observation>,
}

impl FactorialDesign {
    pub fn new(factors: &[(&str, usize)]) -> Self {
        FactorialDesign {
            factor_names: factors.iter().map(|f| f.0.to_string()).collect(),
            factor_levels: factors.iter().map(|f| f.1).collect(),
            observations: Vec::new(),
        }
    }

    /// Dataset (env 0/1) × Feature selection (0/1) × Classifier (4) × Class (3).
    pub fn experiment_grid() -> Self {
        FactorialDesign::new(&[("Dataset", 2), ("Feature selection", 2), ("Classifier", 4), ("Class", 3)])
    }

    pub fn push(&mut self, cell: Vec<usize>, replicate: usize, response: f64) {
        self.observations.push(Observation { cell, replicate, response });
    }

    pub fn n_cells(&self) -> usize {
        self.factor_levels.iter().product()
    }

    fn cell_index(&self, cell: &[usize]) -> usize {
        cell.iter().zip(&self.factor_levels).fold(0, |acc, (&l, &n)| acc * n + l)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub effect: String,
    /// Factor indices in this effect.
    pub factors: Vec<usize>,
    pub df: usize,
    pub ss: f64,
    pub ms: f64,
    pub f: f64,
    pub p: f64,
    pub partial_eta_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    pub rows: Vec<AnovaRow>,
    pub df_error: usize,
    pub ss_error: f64,
    pub ss_total: f64,
    pub n: usize,
    pub replicates: usize,
}

impl AnovaTable {
    pub fn row(&self, effect: &str) -> Option<&AnovaRow> {
        self.rows.iter().find(|r| r.effect == effect)
    }
}

/// Nonempty factor subsets ordered by size, then lexicographically.
fn subsets(k: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1u32..(1 << k))
        .map(|mask| (0..k).filter(|&i| mask & (1 << i) != 0).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

pub fn factorial_anova(design: &FactorialDesign) -> Result<AnovaTable, StatsError> {
    let k = design.factor_levels.len();
    if k == 0 || design.observations.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let n_cells = design.n_cells();
    let mut cell_sum = vec![0.0; n_cells];
    let mut cell_n = vec![0usize; n_cells];
    for o in &design.observations {
        if o.cell.len() != k || o.cell.iter().zip(&design.factor_levels).any(|(&l, &n)| l >= n) {
            return Err(StatsError::UnbalancedDesign(format!("observation with bad cell {:?}", o.cell)));
        }
        if !o.response.is_finite() {
            return Err(StatsError::NonFinite);
        }
        let c = design.cell_index(&o.cell);
        cell_sum[c] += o.response;
        cell_n[c] += 1;
    }
    let r = cell_n[0];
    if let Some(bad) = cell_n.iter().position(|&c| c != r) {
        return Err(StatsError::UnbalancedDesign(format!("cell {bad} has {} observations, expected {r}", cell_n[bad])));
    }
    if r < 2 {
        return Err(StatsError::UnbalancedDesign("need at least 2 replicates per cell".into()));
    }
    let cell_mean: Vec<f64> = cell_sum.iter().map(|s| s / r as f64).collect();
    let n = r * n_cells;
    let grand = cell_mean.iter().sum::<f64>() / n_cells as f64;

    let mut ss_error = 0.0;
    let mut ss_total = 0.0;
    for o in &design.observations {
        ss_error += (o.response - cell_mean[design.cell_index(&o.cell)]).powi(2);
        ss_total += (o.response - grand).powi(2);
    }
    let df_error = n - n_cells;

    // Decode each full cell into its level vector once.
    let levels_of: Vec<Vec<usize>> = (0..n_cells)
        .map(|mut c| {
            let mut v = vec![0; k];
            for f in (0..k).rev() {
                v[f] = c % design.factor_levels[f];
                c /= design.factor_levels[f];
            }
            v
        })
        .collect();
    let marginal = |s: &[usize]| -> Vec<f64> {
        let size: usize = s.iter().map(|&f| design.factor_levels[f]).product();
        let mut sum = vec![0.0; size];
        for (c, lv) in levels_of.iter().enumerate() {
            sum[sub_index(lv, s, &design.factor_levels)] += cell_mean[c];
        }
        let per = (n_cells / size) as f64;
        sum.into_iter().map(|v| v / per).collect()
    };

    let all = subsets(k);
    let means: Vec<Vec<f64>> = all.iter().map(|s| marginal(s)).collect();
    let mut rows = Vec::with_capacity(all.len());
    for s in &all {
        let size: usize = s.iter().map(|&f| design.factor_levels[f]).product();
        let mut ss = 0.0;
        // Walk every level combination of S via a representative full cell.
        let mut seen = vec![false; size];
        for lv in &levels_of {
            let idx = sub_index(lv, s, &design.factor_levels);
            if std::mem::replace(&mut seen[idx], true) {
                continue;
            }
            let mut tau = 0.0;
            for mask in 0u32..(1 << s.len()) {
                let t: Vec<usize> = (0..s.len()).filter(|&i| mask & (1 << i) != 0).map(|i| s[i]).collect();
                let sign = if (s.len() - t.len()) % 2 == 0 { 1.0 } else { -1.0 };
                let m = if t.is_empty() {
                    grand
                } else {
                    let pos = all.iter().position(|x| *x == t).expect("subset listed");
                    means[pos][sub_index(lv, &t, &design.factor_levels)]
                };
                tau += sign * m;
            }
            ss += tau * tau;
        }
        ss *= (n / size) as f64;
        // rounding residue of an exactly null effect
        if ss <= 1e-12 * ss_total {
            ss = 0.0;
        }
        let df: usize = s.iter().map(|&f| design.factor_levels[f] - 1).product();
        let ms = ss / df as f64;
        let (f, p, eta) = if ss <= 0.0 {
            (0.0, 1.0, 0.0)
        } else if ss_error <= 0.0 {
            (f64::INFINITY, 0.0, 1.0)
        } else {
            let f = ms / (ss_error / df_error as f64);
            (f, f_sf(f, df as f64, df_error as f64), ss / (ss + ss_error))
        };
        let effect = s.iter().map(|&i| design.factor_names[i].as_str()).collect::<Vec<_>>().join(" * ");
        rows.push(AnovaRow { effect, factors: s.clone(), df, ss, ms, f, p, partial_eta_sq: eta });
    }
    Ok(AnovaTable { rows, df_error, ss_error, ss_total, n, replicates: r })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalPosthoc {
    pub factor: String,
    pub means: Vec<f64>,
    pub posthoc: Posthoc,
}

/// Bonferroni pairwise comparisons of one factor's marginal means, using the
/// factorial error term (MS_error on df_error).
pub fn marginal_posthoc(
    design: &FactorialDesign,
    table: &AnovaTable,
    factor: usize,
    alpha: f64,
) -> Result<MarginalPosthoc, StatsError> {
    let levels = *design
        .factor_levels
        .get(factor)
        .ok_or_else(|| StatsError::UnbalancedDesign(format!("no factor {factor}")))?;
    if levels < 2 {
        return Err(StatsError::TooFew { what: "levels", need: 2, got: levels });
    }
    let mut sum = vec![0.0; levels];
    let mut count = vec![0usize; levels];
    for o in &design.observations {
        sum[o.cell[factor]] += o.response;
        count[o.cell[factor]] += 1;
    }
    let means: Vec<f64> = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
    let ms_error = table.ss_error / table.df_error as f64;
    let m = levels * (levels - 1) / 2;
    let threshold = alpha / m as f64;
    let mut comparisons = Vec::with_capacity(m);
    for i in 0..levels {
        for j in i + 1..levels {
            let diff = means[i] - means[j];
            let se = (ms_error * (1.0 / count[i] as f64 + 1.0 / count[j] as f64)).sqrt();
            let (t, p_raw) = if se > 0.0 {
                let t = diff / se;
                (t, t_two_sided(t, table.df_error as f64))
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
    Ok(MarginalPosthoc {
        factor: design.factor_names[factor].clone(),
        means,
        posthoc: Posthoc { alpha, m, threshold, df: table.df_error, comparisons },
    })
}

fn sub_index(levels: &[usize], s: &[usize], sizes: &[usize]) -> usize {
    s.iter().fold(0, |acc, &f| acc * sizes[f] + levels[f])
}

fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// Aligned text table: factors, df, F (with significance stars), partial η².
pub fn render_table(table: &AnovaTable, title: &str) -> String {
    let width = table.rows.iter().map(|r| r.effect.len()).max().unwrap_or(7).max(7);
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "{:<width$}  {:>3}  {:>12}  {:>5}", "Factors", "df", "F-value", "η²");
    for r in &table.rows {
        let f = if r.f.is_finite() { format!("{:.2}{}", r.f, stars(r.p)) } else { "inf***".into() };
        let _ = writeln!(out, "{:<width$}  {:>3}  {:>12}  {:>5.2}", r.effect, r.df, f, r.partial_eta_sq);
    }
    let _ = writeln!(out, "{:<width$}  {:>3}", "Error", table.df_error);
    let _ = writeln!(out, "P < .001***, P < .01**, P < .05*; η² = partial eta squared");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{bonferroni_posthoc, one_way_anova};

    fn grid_with(f: impl Fn(&[usize], usize) -> f64) -> FactorialDesign {
        let mut d = FactorialDesign::experiment_grid();
        for e in 0..2 {
            for s in 0..2 {
                for l in 0..4 {
                    for c in 0..3 {
                        for rep in 0..3 {
                            let cell = vec![e, s, l, c];
                            let y = f(&cell, rep);
                            d.push(cell, rep, y);
                        }
                    }
                }
            }
        }
        d
    }

    fn noise(cell: &[usize], rep: usize) -> f64 {
        use rand::{Rng, SeedableRng};
        let seed = cell.iter().fold(rep as u64, |a, &v| a * 10 + v as u64);
        rand_chacha::ChaCha8Rng::seed_from_u64(seed).random_range(-1.0..1.0)
    }

    #[test]
    fn degrees_of_freedom_and_identity() {
        let d = grid_with(|c, r| 60.0 + 3.0 * c[0] as f64 + c[3] as f64 * 2.0 + noise(c, r));
        let t = factorial_anova(&d).unwrap();
        let dfs: Vec<usize> = t.rows.iter().map(|r| r.df).collect();
        assert_eq!(dfs, vec![1, 1, 3, 2, 1, 3, 2, 3, 2, 6, 3, 2, 6, 6, 6]);
        assert_eq!(t.df_error, 96);
        let sum: f64 = t.rows.iter().map(|r| r.ss).sum::<f64>() + t.ss_error;
        assert!((sum - t.ss_total).abs() <= 1e-9 * t.ss_total);
        assert_eq!(t.rows[4].effect, "Dataset * Feature selection");
        assert_eq!(t.rows[14].effect, "Dataset * Feature selection * Classifier * Class");
    }

    #[test]
    fn constant_response_gives_zero_effects() {
        let t = factorial_anova(&grid_with(|_, _| 50.0)).unwrap();
        assert!(t.rows.iter().all(|r| r.f == 0.0 && r.partial_eta_sq == 0.0));
    }

    #[test]
    fn planted_main_effect() {
        let d = grid_with(|c, r| 60.0 + 5.0 * c[0] as f64 + 0.5 * noise(c, r));
        let t = factorial_anova(&d).unwrap();
        assert!(t.rows[0].p < 0.001);
        for r in &t.rows[4..] {
            assert!(r.partial_eta_sq < 0.2, "{}: {}", r.effect, r.partial_eta_sq);
        }
        let eta = t.rows[0].partial_eta_sq;
        assert!((eta / (1.0 - eta) - t.rows[0].ss / t.ss_error).abs() < 1e-9 * (t.rows[0].ss / t.ss_error));
    }

    #[test]
    fn single_factor_matches_one_way() {
        let mut d = FactorialDesign::new(&[("G", 3)]);
        let groups = vec![vec![1.0, 2.0, 3.0, 2.5], vec![2.0, 3.0, 4.0, 3.5], vec![3.0, 4.0, 5.0, 0.5]];
        for (g, vals) in groups.iter().enumerate() {
            for (r, &v) in vals.iter().enumerate() {
                d.push(vec![g], r, v);
            }
        }
        let t = factorial_anova(&d).unwrap();
        let o = one_way_anova(&groups).unwrap();
        assert!((t.rows[0].f - o.f).abs() < 1e-12);
        assert!((t.rows[0].p - o.p).abs() < 1e-12);
        let mp = marginal_posthoc(&d, &t, 0, 0.05).unwrap();
        let ph = bonferroni_posthoc(&groups, 0.05).unwrap();
        for (a, b) in mp.posthoc.comparisons.iter().zip(&ph.comparisons) {
            assert!((a.t - b.t).abs() < 1e-12 && (a.p_adjusted - b.p_adjusted).abs() < 1e-12);
        }
        assert!((mp.means[1] - 3.125).abs() < 1e-12);
    }

    #[test]
    fn shift_and_scale_invariance() {
        let base = grid_with(|c, r| 40.0 + c[1] as f64 * 1.5 + c[2] as f64 + noise(c, r));
        let mut moved = base.clone();
        moved.observations.iter_mut().for_each(|o| o.response = o.response * 3.0 + 11.0);
        let (a, b) = (factorial_anova(&base).unwrap(), factorial_anova(&moved).unwrap());
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.f - y.f).abs() <= 1e-8 * x.f.max(1.0));
        }
    }

    #[test]
    fn unbalanced_is_rejected() {
        let mut d = grid_with(|c, r| noise(c, r));
        d.observations.pop();
        assert!(matches!(factorial_anova(&d), Err(StatsError::UnbalancedDesign(_))));
    }

    #[test]
    fn render_has_all_rows() {
        let t = factorial_anova(&grid_with(|c, r| c[3] as f64 * 10.0 + noise(c, r))).unwrap();
        let text = render_table(&t, "ANOVA");
        assert_eq!(text.lines().count(), 1 + 1 + 15 + 1 + 1);
        assert!(text.contains("Class") && text.contains("***"));
    }
}
