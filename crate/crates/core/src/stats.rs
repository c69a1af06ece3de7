//! Small statistical helpers used by the verification operations: paired
//! z-tests, proportion tests, block-bootstrap standard errors for dependent
//! sequences, and a two-sample Kolmogorov-Smirnov statistic.

use crate::rng::RandomStream;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Standard error of the mean for independent samples.
pub fn standard_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Paired z-score for the hypothesis `E[a] = E[b]`, computed from the
/// per-sample differences. Exactly equal samples give z = 0; a nonzero mean
/// difference with zero spread gives an infinite score.
pub fn paired_z(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "paired test needs equal sample counts");
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = mean(&diffs);
    let se = standard_error(&diffs);
    if se == 0.0 {
        if m == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        m / se
    }
}

/// Two-sample proportion z-score with pooled variance. Degenerate pools
/// (all zeros or all ones in both samples) score 0 when the proportions
/// agree and infinity otherwise.
pub fn two_sample_proportion_z(k1: usize, n1: usize, k2: usize, n2: usize) -> f64 {
    let (p1, p2) = (k1 as f64 / n1 as f64, k2 as f64 / n2 as f64);
    let pooled = (k1 + k2) as f64 / (n1 + n2) as f64;
    let var = pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64);
    if var == 0.0 {
        if p1 == p2 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (p1 - p2) / var.sqrt()
    }
}

/// Circular block-bootstrap standard error of the mean of a dependent
/// series. `block_len` should cover the dependence span (for a shift orbit
/// of a cylinder functional: its depth in shift units).
pub fn block_bootstrap_se(
    series: &[f64],
    block_len: usize,
    replicates: usize,
    stream: &mut RandomStream,
) -> f64 {
    let n = series.len();
    assert!(n > 0 && block_len > 0);
    let block_len = block_len.min(n);
    let blocks = n.div_ceil(block_len);
    let mut means = Vec::with_capacity(replicates);
    for _ in 0..replicates {
        let mut sum = 0.0;
        let mut taken = 0usize;
        for _ in 0..blocks {
            let start = stream.index(n);
            for j in 0..block_len {
                if taken == n {
                    break;
                }
                sum += series[(start + j) % n];
                taken += 1;
            }
        }
        means.push(sum / n as f64);
    }
    variance(&means).sqrt()
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        if xs[i] <= ys[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Critical value of the two-sample KS statistic at level `alpha`
/// (asymptotic formula).
pub fn ks_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paired_z_detects_shift() {
        let a: Vec<f64> = (0..1000).map(|i| (i % 7) as f64).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 0.5).collect();
        assert!(paired_z(&a, &b).abs() > 10.0);
        assert_eq!(paired_z(&a, &a), 0.0);
    }

    #[test]
    fn proportion_z_degenerate_cases() {
        assert_eq!(two_sample_proportion_z(0, 100, 0, 100), 0.0);
        assert_eq!(two_sample_proportion_z(100, 100, 100, 100), 0.0);
        assert!(two_sample_proportion_z(50, 100, 52, 100).abs() < 1.0);
    }

    #[test]
    fn block_bootstrap_matches_iid_se_for_independent_data() {
        let mut s = RandomStream::new(11, 0);
        let xs: Vec<f64> = (0..4000).map(|_| s.uniform()).collect();
        let mut bs = RandomStream::new(11, 1);
        let se_bb = block_bootstrap_se(&xs, 1, 400, &mut bs);
        let se_iid = standard_error(&xs);
        assert!((se_bb - se_iid).abs() / se_iid < 0.25);
    }

    #[test]
    fn block_bootstrap_sees_positive_dependence() {
        // perfectly correlated pairs double the variance of the mean
        let mut s = RandomStream::new(13, 0);
        let mut xs = Vec::with_capacity(4000);
        for _ in 0..2000 {
            let v = s.uniform();
            xs.push(v);
            xs.push(v);
        }
        let mut bs = RandomStream::new(13, 1);
        let se_bb = block_bootstrap_se(&xs, 2, 400, &mut bs);
        let se_iid = standard_error(&xs);
        assert!(se_bb > 1.2 * se_iid);
    }

    #[test]
    fn ks_statistic_separates_distributions() {
        let mut s = RandomStream::new(17, 0);
        let a: Vec<f64> = (0..5000).map(|_| s.uniform()).collect();
        let b: Vec<f64> = (0..5000).map(|_| s.uniform()).collect();
        let c: Vec<f64> = (0..5000).map(|_| 0.5 * s.uniform()).collect();
        assert!(ks_two_sample(&a, &b) < ks_critical(0.01, a.len(), b.len()));
        assert!(ks_two_sample(&a, &c) > ks_critical(0.01, a.len(), c.len()));
    }
}
