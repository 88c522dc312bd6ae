//! Small statistics toolbox shared by the estimator modules: sample
//! moments, Welch's two-sample t-test, one-way ANOVA, harmonic numbers.

use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (ddof = 1). NaN for fewer than two points.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// n-th harmonic number, 1 + 1/2 + ... + 1/n.
pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

/// Quantile by linear interpolation on a sorted copy.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

/// Welch's unequal-variance two-sample t-test (two-sided).
///
/// Returns `None` when a p-value is undefined (either sample has fewer than
/// two points). Two zero-variance samples with equal means give p = 1;
/// with different means, p = 0.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (variance(a), variance(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let se2 = va / na + vb / nb;
    if se2 == 0.0 {
        return Some(if ma == mb { 1.0 } else { 0.0 });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    if !df.is_finite() || df <= 0.0 {
        return Some(if ma == mb { 1.0 } else { 0.0 });
    }
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some(2.0 * (1.0 - dist.cdf(t.abs())))
}

#[derive(Debug, Clone)]
pub struct AnovaResult {
    pub f_stat: f64,
    pub p_value: f64,
    pub group_means: Vec<f64>,
    /// Largest absolute difference between any two group means.
    pub max_mean_diff: f64,
}

/// One-way ANOVA across `groups`.
///
/// Degenerate cases follow the estimator contracts: identical values in
/// every group give F = 0, p = 1; zero within-group variance with
/// differing means gives F = inf, p = 0.
pub fn one_way_anova(groups: &[Vec<f64>]) -> Result<AnovaResult> {
    if groups.len() < 2 {
        return Err(Error::validation("ANOVA needs at least two groups"));
    }
    if groups.iter().any(|g| g.len() < 2) {
        return Err(Error::validation("ANOVA needs at least two values per group"));
    }
    let n_total: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n_total as f64;
    let group_means: Vec<f64> = groups.iter().map(|g| mean(g)).collect();

    let ss_between: f64 = groups
        .iter()
        .zip(&group_means)
        .map(|(g, m)| g.len() as f64 * (m - grand) * (m - grand))
        .sum();
    let ss_within: f64 = groups
        .iter()
        .zip(&group_means)
        .map(|(g, m)| g.iter().map(|x| (x - m) * (x - m)).sum::<f64>())
        .sum();

    let df_between = (groups.len() - 1) as f64;
    let df_within = (n_total - groups.len()) as f64;

    let mut max_mean_diff = 0.0f64;
    for i in 0..group_means.len() {
        for j in i + 1..group_means.len() {
            max_mean_diff = max_mean_diff.max((group_means[i] - group_means[j]).abs());
        }
    }

    let (f_stat, p_value) = if ss_between <= f64::EPSILON * grand.abs().max(1.0) {
        (0.0, 1.0)
    } else if ss_within <= f64::EPSILON * ss_between {
        (f64::INFINITY, 0.0)
    } else {
        let f = (ss_between / df_between) / (ss_within / df_within);
        let dist = FisherSnedecor::new(df_between, df_within)
            .map_err(|e| Error::Analysis(format!("F distribution: {e}")))?;
        (f, 1.0 - dist.cdf(f))
    };

    Ok(AnovaResult {
        f_stat,
        p_value,
        group_means,
        max_mean_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn harmonic_small_values() {
        assert_relative_eq!(harmonic(1), 1.0);
        assert_relative_eq!(harmonic(4), 1.0 + 0.5 + 1.0 / 3.0 + 0.25, epsilon = 1e-15);
    }

    #[test]
    fn welch_identical_samples_not_significant() {
        let a = [0.3, 0.2, 0.25, 0.25];
        let p = welch_t_test(&a, &a).unwrap();
        assert_relative_eq!(p, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn welch_separated_samples_significant() {
        let a = [10.0, 10.1, 9.9, 10.05];
        let b = [0.0, 0.1, -0.1, 0.05];
        let p = welch_t_test(&a, &b).unwrap();
        assert!(p < 1e-6, "p = {p}");
    }

    #[test]
    fn welch_undefined_for_single_point() {
        assert!(welch_t_test(&[1.0], &[2.0]).is_none());
    }

    #[test]
    fn welch_zero_variance_cases() {
        assert_relative_eq!(welch_t_test(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_relative_eq!(welch_t_test(&[1.0, 1.0], &[2.0, 2.0]).unwrap(), 0.0);
    }

    // Oracle: one-way ANOVA computed by the textbook sum-of-squares formulas
    // on a small fixed dataset.
    //
    //   groups: [1, 2], [3, 4], [5, 6]
    //   grand mean 3.5, group means 1.5 / 3.5 / 5.5
    //   ss_between = 2*(2^2) + 0 + 2*(2^2) = 16, df = 2
    //   ss_within  = 6 * 0.25 = 1.5, df = 3
    //   F = (16/2) / (1.5/3) = 16
    #[test]
    fn anova_matches_hand_computation() {
        let groups = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]];
        let r = one_way_anova(&groups).unwrap();
        assert_relative_eq!(r.f_stat, 16.0, epsilon = 1e-12);
        assert!(r.p_value < 0.05, "p = {}", r.p_value);
        assert_relative_eq!(r.max_mean_diff, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn anova_identical_groups_degenerate() {
        let groups = vec![vec![1.0; 4], vec![1.0; 4], vec![1.0; 4]];
        let r = one_way_anova(&groups).unwrap();
        assert_eq!(r.f_stat, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn anova_zero_within_variance() {
        let groups = vec![vec![1.0; 4], vec![1.0; 4], vec![5.0; 4]];
        let r = one_way_anova(&groups).unwrap();
        assert!(r.f_stat.is_infinite());
        assert!(r.p_value < 0.001);
    }

    #[test]
    fn quantile_interpolates() {
        let xs = [4.0, 1.0, 3.0, 2.0];
        assert_relative_eq!(quantile(&xs, 0.0), 1.0);
        assert_relative_eq!(quantile(&xs, 0.5), 2.5);
        assert_relative_eq!(quantile(&xs, 1.0), 4.0);
    }
}
