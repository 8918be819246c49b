#![allow(dead_code)]

use behavior_bench::datamodel::{AlpsChannel, AlpsChannels, FeatureMatrix};
use behavior_bench::ingest::{AlpsFrame, BeaconFrame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `n_signal` columns shifted by the binary label, then `n_noise` pure noise
/// columns. Signal columns come first.
pub fn planted_matrix(n: usize, n_signal: usize, n_noise: usize, shift: f64, seed: u64) -> FeatureMatrix {
    let mut r = rng(seed);
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|&y| {
            (0..n_signal + n_noise)
                .map(|j| if j < n_signal { shift * y as f64 } else { 0.0 } + normal(&mut r))
                .collect()
        })
        .collect();
    let names = (0..n_signal).map(|j| format!("signal{j}")).chain((0..n_noise).map(|j| format!("noise{j}"))).collect();
    FeatureMatrix::from_rows(names, &rows, labels, 2).unwrap()
}

/// Well separated Gaussian blobs, one per class, in `p` dimensions.
pub fn blobs(n_per_class: usize, n_classes: usize, p: usize, seed: u64) -> FeatureMatrix {
    let mut r = rng(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in 0..n_classes {
        let center: Vec<f64> = (0..p).map(|j| if j % n_classes == c { 6.0 } else { 0.0 }).collect();
        for _ in 0..n_per_class {
            rows.push(center.iter().map(|m| m + 0.5 * normal(&mut r)).collect());
            labels.push(c);
        }
    }
    FeatureMatrix::from_rows((0..p).map(|j| format!("x{j}")).collect(), &rows, labels, n_classes).unwrap()
}

/// The four XOR points, each repeated `copies` times.
pub fn xor(copies: usize) -> FeatureMatrix {
    let pts = [([0.0, 0.0], 0), ([0.0, 1.0], 1), ([1.0, 0.0], 1), ([1.0, 1.0], 0)];
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..copies {
        for (x, y) in pts {
            rows.push(x.to_vec());
            labels.push(y);
        }
    }
    FeatureMatrix::from_rows(vec!["a".into(), "b".into()], &rows, labels, 2).unwrap()
}

pub fn random_beacon(r: &mut ChaCha8Rng) -> BeaconFrame {
    let mut uuid = [0u8; 16];
    r.fill(&mut uuid);
    BeaconFrame::new(uuid, r.random(), r.random(), r.random_range(-80..0), r.random_range(-100..-30))
}

/// Channel values are f32-representable and in range; about one in ten is
/// left unreported.
pub fn random_alps(r: &mut ChaCha8Rng) -> AlpsFrame {
    let mut channels = AlpsChannels::default();
    for ch in AlpsChannel::ALL {
        if r.random_bool(0.1) {
            continue;
        }
        let (lo, hi) = ch.range();
        channels.set(ch, Some(r.random_range(lo..=hi) as f32 as f64));
    }
    AlpsFrame { counter: r.random(), channels }
}

/// Exhaustive k-NN imputation: column z-scores over observed values
/// (population SD), distance sqrt(p / shared * sum of squares) over
/// shared columns, donors ordered by (distance, row index).
pub fn brute_knn(data: &[Vec<Option<f64>>], k: usize) -> Vec<Vec<f64>> {
    let n = data.len();
    let p = data[0].len();
    let mut z = data.to_vec();
    for j in 0..p {
        let obs: Vec<f64> = data.iter().filter_map(|r| r[j]).collect();
        let m = obs.iter().sum::<f64>() / obs.len() as f64;
        let sd = (obs.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / obs.len() as f64).sqrt();
        for row in z.iter_mut() {
            if let Some(v) = row[j] {
                row[j] = Some(if sd > 0.0 { (v - m) / sd } else { 0.0 });
            }
        }
    }
    let dist = |a: usize, b: usize| {
        let mut shared = 0;
        let mut s = 0.0;
        for j in 0..p {
            if let (Some(x), Some(y)) = (z[a][j], z[b][j]) {
                shared += 1;
                s += (x - y) * (x - y);
            }
        }
        if shared == 0 { f64::INFINITY } else { (p as f64 / shared as f64 * s).sqrt() }
    };
    let mut out = vec![vec![0.0; p]; n];
    for i in 0..n {
        for j in 0..p {
            out[i][j] = match data[i][j] {
                Some(v) => v,
                None => {
                    let mut donors: Vec<(f64, usize)> =
                        (0..n).filter(|&r| r != i && data[r][j].is_some()).map(|r| (dist(i, r), r)).collect();
                    donors.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                    donors.iter().take(k).map(|&(_, r)| data[r][j].unwrap()).sum::<f64>() / k as f64
                }
            };
        }
    }
    out
}

/// Pairwise AUC: share of (positive, negative) pairs with the positive
/// scored higher, ties worth one half.
pub fn brute_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &pi) in positive.iter().enumerate() {
        for (j, &pj) in positive.iter().enumerate() {
            if pi && !pj {
                pairs += 1.0;
                wins += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    (pairs > 0.0).then(|| wins / pairs)
}
