//! Hypothesis tests used to analyze entrainment across dyads and conditions.
//!
//! Everything here is self-contained: p-values come from the distribution
//! tails in [`dist`], which are accurate to roughly 1e-10 relative error.

pub mod dist;

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math::{self, sqrt};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Pearson,
    KruskalWallis,
    ShapiroWilk,
    Levene,
    BrownForsythe,
}

/// Outcome of a hypothesis test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: TestMethod,
    /// r, H, W or F depending on the method.
    pub statistic: f64,
    pub p_value: f64,
    /// Total sample size.
    pub n: usize,
    /// Per-group sizes for multi-group tests; empty otherwise.
    pub group_sizes: Vec<usize>,
}

/// Alternative hypothesis for correlation p-values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    #[default]
    TwoSided,
    /// `H1: rho > 0`.
    Greater,
}

/// Product-moment correlation coefficient (two-pass, clamped to `[-1, 1]`).
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::DegenerateSeries);
    }
    let mx = math::mean(x);
    let my = math::mean(y);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(Error::DegenerateSeries);
    }
    Ok((sxy / sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// p-value of a correlation `r` over `n` pairs via `t = r sqrt((n-2)/(1-r^2))`
/// against Student's t with `n - 2` degrees of freedom.
pub fn pearson_p(r: f64, n: usize, tail: Tail) -> f64 {
    let df = n as f64 - 2.0;
    // two-sided tail of t reduces to I_{1-r^2}(df/2, 1/2)
    let two_sided = if r.abs() >= 1.0 {
        0.0
    } else {
        dist::beta_inc(df / 2.0, 0.5, 1.0 - r * r)
    };
    match tail {
        Tail::TwoSided => two_sided,
        Tail::Greater if r > 0.0 => 0.5 * two_sided,
        Tail::Greater => 1.0 - 0.5 * two_sided,
    }
}

/// Pearson correlation with a two-sided p-value.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<TestResult> {
    pearson_with_tail(x, y, Tail::TwoSided)
}

pub fn pearson_with_tail(x: &[f64], y: &[f64], tail: Tail) -> Result<TestResult> {
    let r = pearson_r(x, y)?;
    Ok(TestResult {
        method: TestMethod::Pearson,
        statistic: r,
        p_value: pearson_p(r, x.len(), tail),
        n: x.len(),
        group_sizes: Vec::new(),
    })
}

/// Midranks (1-based) of `values`, plus the tie-group sizes.
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share the mean of ranks i+1..=j
        let rank = (i + j + 1) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = rank;
        }
        ties.push(j - i);
        i = j;
    }
    (ranks, ties)
}

/// Kruskal-Wallis H test with midranks and tie correction; p from chi-square
/// with `groups - 1` degrees of freedom.
pub fn kruskal_wallis(groups: &[&[f64]]) -> Result<TestResult> {
    if groups.len() < 2 || groups.iter().any(|g| g.is_empty()) {
        return Err(Error::TooFewGroups);
    }
    let all: Vec<f64> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    let n = all.len();
    if n < 3 {
        return Err(Error::TooFewGroups);
    }
    let (ranks, ties) = midranks(&all);
    let nf = n as f64;
    let tie_sum: f64 = ties
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let correction = 1.0 - tie_sum / (nf * nf * nf - nf);
    if correction <= 0.0 {
        return Err(Error::AllValuesIdentical);
    }
    let mut offset = 0;
    let mut between = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        between += r * r / g.len() as f64;
        offset += g.len();
    }
    let h = ((12.0 / (nf * (nf + 1.0)) * between - 3.0 * (nf + 1.0)) / correction).max(0.0);
    Ok(TestResult {
        method: TestMethod::KruskalWallis,
        statistic: h,
        p_value: dist::chi2_sf(h, (groups.len() - 1) as f64).clamp(0.0, 1.0),
        n,
        group_sizes: groups.iter().map(|g| g.len()).collect(),
    })
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Shapiro-Wilk normality test, Royston's (1995) approximation.
///
/// Valid for `3 <= n <= 5000`.
pub fn shapiro_wilk(x: &[f64]) -> Result<TestResult> {
    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
    const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
    const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
    const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
    const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
    const G: [f64; 2] = [-2.273, 0.459];

    let n = x.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::OutOfRangeN(n));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let range = sorted[n - 1] - sorted[0];
    if !(range > 0.0) {
        return Err(Error::AllValuesIdentical);
    }
    let nf = n as f64;
    let half = n / 2;

    // coefficients for the upper half, a[0] pairs the extremes
    let mut a = alloc::vec![0.0; half];
    if n == 3 {
        a[0] = core::f64::consts::FRAC_1_SQRT_2;
    } else {
        let m: Vec<f64> = (1..=half)
            .map(|i| -dist::normal_quantile((i as f64 - 0.375) / (nf + 0.25)))
            .collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = sqrt(summ2);
        let rsn = 1.0 / sqrt(nf);
        let a1 = poly(&C1, rsn) + m[0] / ssumm2;
        let (first, fac) = if n > 5 {
            let a2 = poly(&C2, rsn) + m[1] / ssumm2;
            a[1] = a2;
            let fac = sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            (2, fac)
        } else {
            (1, sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)))
        };
        a[0] = a1;
        for i in first..half {
            a[i] = m[i] / fac;
        }
    }

    let mean = math::mean(&sorted);
    let ss: f64 = sorted.iter().map(|v| (v - mean) * (v - mean)).sum();
    let numerator: f64 = a
        .iter()
        .enumerate()
        .map(|(i, ai)| ai * (sorted[n - 1 - i] - sorted[i]))
        .sum();
    let w = (numerator * numerator / ss).min(1.0);

    let p = if n == 3 {
        const SIX_OVER_PI: f64 = 1.909_859_317_102_744;
        const PI_OVER_3: f64 = core::f64::consts::FRAC_PI_3;
        (SIX_OVER_PI * (libm::asin(sqrt(w)) - PI_OVER_3)).max(0.0)
    } else {
        let w1 = math::ln(1.0 - w);
        if n <= 11 {
            let gamma = poly(&G, nf);
            if w1 >= gamma {
                1e-99
            } else {
                let y = -math::ln(gamma - w1);
                let m = poly(&C3, nf);
                let s = math::exp(poly(&C4, nf));
                dist::normal_sf((y - m) / s)
            }
        } else {
            let ln_n = math::ln(nf);
            let m = poly(&C5, ln_n);
            let s = math::exp(poly(&C6, ln_n));
            dist::normal_sf((w1 - m) / s)
        }
    };
    Ok(TestResult {
        method: TestMethod::ShapiroWilk,
        statistic: w,
        p_value: p.clamp(0.0, 1.0),
        n,
        group_sizes: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeveneCenter {
    /// Classic Levene.
    #[default]
    Mean,
    /// Brown-Forsythe.
    Median,
}

/// Levene's test for equal variances: one-way ANOVA on absolute deviations
/// from each group's center; p from F with `(k - 1, N - k)` degrees of freedom.
pub fn levene(groups: &[&[f64]], center: LeveneCenter) -> Result<TestResult> {
    if groups.len() < 2 {
        return Err(Error::TooFewGroups);
    }
    if groups.iter().any(|g| g.len() < 2) {
        return Err(Error::InvalidArgument("every group needs at least two values"));
    }
    let deviations: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let c = match center {
                LeveneCenter::Mean => math::mean(g),
                LeveneCenter::Median => {
                    let mut s = g.to_vec();
                    s.sort_by(f64::total_cmp);
                    let m = s.len();
                    if m % 2 == 1 {
                        s[m / 2]
                    } else {
                        0.5 * (s[m / 2 - 1] + s[m / 2])
                    }
                }
            };
            g.iter().map(|v| (v - c).abs()).collect()
        })
        .collect();
    let k = groups.len() as f64;
    let n_total: usize = groups.iter().map(|g| g.len()).sum();
    let nf = n_total as f64;
    let group_means: Vec<f64> = deviations.iter().map(|d| math::mean(d)).collect();
    let grand = deviations.iter().flatten().sum::<f64>() / nf;
    let between: f64 = deviations
        .iter()
        .zip(&group_means)
        .map(|(d, m)| d.len() as f64 * (m - grand) * (m - grand))
        .sum();
    let within: f64 = deviations
        .iter()
        .zip(&group_means)
        .map(|(d, m)| d.iter().map(|z| (z - m) * (z - m)).sum::<f64>())
        .sum();
    if !(within > 0.0) {
        return Err(Error::DegenerateGroup);
    }
    let f = (nf - k) / (k - 1.0) * between / within;
    Ok(TestResult {
        method: match center {
            LeveneCenter::Mean => TestMethod::Levene,
            LeveneCenter::Median => TestMethod::BrownForsythe,
        },
        statistic: f,
        p_value: dist::f_sf(f, k - 1.0, nf - k).clamp(0.0, 1.0),
        n: n_total,
        group_sizes: groups.iter().map(|g| g.len()).collect(),
    })
}

/// Approximate power of a two-sided Pearson test for true correlation `r`
/// with `n` pairs at level `alpha` (Fisher z normal approximation).
pub fn power_pearson(r: f64, n: usize, alpha: f64) -> Result<f64> {
    if !(r.abs() < 1.0) {
        return Err(Error::InvalidEffectSize(r));
    }
    if n < 4 {
        return Err(Error::InvalidArgument("power needs n >= 4"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument("alpha must lie in (0, 1)"));
    }
    let shift = libm::atanh(r) * sqrt(n as f64 - 3.0);
    let crit = dist::normal_quantile(1.0 - alpha / 2.0);
    Ok((dist::normal_cdf(shift - crit) + dist::normal_cdf(-shift - crit)).clamp(0.0, 1.0))
}
