//! One-sample location tests: Student t and Wilcoxon signed rank.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("sample needs at least {needed} usable observations, got {got}")]
    TooSmall { needed: usize, got: usize },
    #[error("sample has zero variance")]
    ZeroVariance,
    #[error("all observations equal the null value")]
    AllZero,
    #[error("sample contains non-finite values")]
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    Less,
    Greater,
    TwoSided,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    TOneSidedLess,
    TOneSidedGreater,
    TTwoSided,
    WilcoxonTwoSided,
    WilcoxonOneSided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// `t` for the t-test, `W+` for the signed-rank test.
    pub statistic: f64,
    pub p_value: f64,
    /// Observations used (after dropping zeros for the signed-rank test).
    pub n: usize,
    pub method: TestMethod,
    pub alternative: Alternative,
    /// Whether the p-value comes from the exact null distribution.
    pub exact: bool,
    pub notes: Vec<String>,
}

fn tail_p(cdf_left: f64, cdf_right: f64, alt: Alternative) -> f64 {
    let p = match alt {
        Alternative::Less => cdf_left,
        Alternative::Greater => cdf_right,
        Alternative::TwoSided => 2.0 * cdf_left.min(cdf_right),
    };
    p.clamp(0.0, 1.0)
}

/// One-sample t-test of `E[X] = null_mean`.
pub fn t_test_mean(sample: &[f64], null_mean: f64, alternative: Alternative) -> Result<TestResult, InferenceError> {
    let n = sample.len();
    if n < 2 {
        return Err(InferenceError::TooSmall { needed: 2, got: n });
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(InferenceError::NonFinite);
    }
    let nf = n as f64;
    let mean = sample.iter().sum::<f64>() / nf;
    let var = sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
    if var <= 0.0 {
        return Err(InferenceError::ZeroVariance);
    }
    let t = (mean - null_mean) / (var / nf).sqrt();
    let dist = StudentsT::new(0.0, 1.0, nf - 1.0).expect("positive degrees of freedom");
    // use the symmetric left tail for both sides to avoid 1 - cdf cancellation
    let p = tail_p(dist.cdf(t), dist.cdf(-t), alternative);
    let method = match alternative {
        Alternative::Less => TestMethod::TOneSidedLess,
        Alternative::Greater => TestMethod::TOneSidedGreater,
        Alternative::TwoSided => TestMethod::TTwoSided,
    };
    Ok(TestResult {
        statistic: t,
        p_value: p,
        n,
        method,
        alternative,
        exact: true,
        notes: Vec::new(),
    })
}

/// Left-tailed t-test of `E[X] = null_mean` against `E[X] < null_mean`.
pub fn t_test_mean_less(sample: &[f64], null_mean: f64) -> Result<TestResult, InferenceError> {
    t_test_mean(sample, null_mean, Alternative::Less)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WilcoxonOptions {
    /// Minimum number of non-zero observations.
    pub min_n: usize,
    /// Largest sample size that uses the exact null distribution.
    pub exact_max_n: usize,
}

impl Default for WilcoxonOptions {
    fn default() -> Self {
        Self {
            min_n: 5,
            exact_max_n: 25,
        }
    }
}

/// Average ranks of `|x|`, doubled so that tied ranks stay integral.
/// Also returns the tie-group sizes.
fn doubled_ranks(abs: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..abs.len()).collect();
    idx.sort_by(|&a, &b| abs[a].total_cmp(&abs[b]));
    let mut ranks = vec![0u64; abs.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && abs[idx[j]] == abs[idx[i]] {
            j += 1;
        }
        // average of ranks i+1 ..= j, doubled
        let doubled = (i + 1 + j) as u64;
        for &k in &idx[i..j] {
            ranks[k] = doubled;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

/// Number of sign assignments giving each doubled positive-rank sum.
fn signed_rank_counts(doubled: &[u64]) -> Vec<u64> {
    let total: u64 = doubled.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in doubled {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

/// Wilcoxon signed-rank test of zero median. Zeros are dropped and tied
/// absolute values receive average ranks.
pub fn wilcoxon_signed_rank(sample: &[f64], alternative: Alternative) -> Result<TestResult, InferenceError> {
    wilcoxon_signed_rank_with(sample, alternative, WilcoxonOptions::default())
}

pub fn wilcoxon_signed_rank_with(
    sample: &[f64],
    alternative: Alternative,
    opts: WilcoxonOptions,
) -> Result<TestResult, InferenceError> {
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(InferenceError::NonFinite);
    }
    let nonzero: Vec<f64> = sample.iter().copied().filter(|&x| x != 0.0).collect();
    let mut notes = Vec::new();
    if nonzero.is_empty() {
        return Err(InferenceError::AllZero);
    }
    let zeros = sample.len() - nonzero.len();
    if zeros > 0 {
        notes.push(format!("{zeros} zero observations dropped"));
    }
    let n = nonzero.len();
    if n < opts.min_n {
        return Err(InferenceError::TooSmall {
            needed: opts.min_n,
            got: n,
        });
    }
    let abs: Vec<f64> = nonzero.iter().map(|x| x.abs()).collect();
    let (ranks, ties) = doubled_ranks(&abs);
    if !ties.is_empty() {
        notes.push(format!("{} groups of tied absolute values; average ranks used", ties.len()));
    }
    let w2: u64 = nonzero.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let w_plus = w2 as f64 / 2.0;

    let exact = n <= opts.exact_max_n;
    let p_value = if exact {
        let counts = signed_rank_counts(&ranks);
        let total = (n as f64).exp2();
        let w = w2 as usize;
        let left: u64 = counts[..=w].iter().sum();
        let right: u64 = counts[w..].iter().sum();
        tail_p(left as f64 / total, right as f64 / total, alternative)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let tie_adj: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
        let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_adj).sqrt();
        let std_normal = Normal::standard();
        let left = std_normal.cdf((w_plus - mean + 0.5) / sd);
        let right = std_normal.cdf(-(w_plus - mean - 0.5) / sd);
        tail_p(left, right, alternative)
    };
    let method = match alternative {
        Alternative::TwoSided => TestMethod::WilcoxonTwoSided,
        _ => TestMethod::WilcoxonOneSided,
    };
    Ok(TestResult {
        statistic: w_plus,
        p_value,
        n,
        method,
        alternative,
        exact,
        notes,
    })
}
