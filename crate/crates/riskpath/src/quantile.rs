//! Order-statistic quantiles, the DKW-derived error term, and exact
//! binomial confidence intervals.

use statrs::distribution::{Binomial, DiscreteCDF};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QuantileError {
    #[error("empty sample set")]
    EmptySamples,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// A multiset of loss samples. Entries may be `-inf` but never `+inf` or NaN.
#[derive(Debug, Clone)]
pub struct SampleSet {
    values: Vec<f64>,
}

impl SampleSet {
    pub fn new(values: Vec<f64>) -> Result<Self, QuantileError> {
        if values.is_empty() {
            return Err(QuantileError::EmptySamples);
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(QuantileError::InvalidParams(
                "samples must be finite or -inf".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// 1-based order-statistic rank for a quantile level: `max(1, ceil(level*n))`,
/// clamped to `n`.
pub fn order_stat_rank(level: f64, n: usize) -> usize {
    let level = level.clamp(0.0, 1.0);
    let k = (level * n as f64).ceil() as usize;
    k.clamp(1, n)
}

/// The k-th order statistic for `k = max(1, ceil(level*n))`. Level 1 returns
/// the maximum, level 0 the minimum. Always a sample value, no interpolation.
pub fn empirical_quantile(samples: &SampleSet, level: f64) -> f64 {
    let mut scratch = samples.values.clone();
    quantile_in_place(&mut scratch, level)
}

/// Same as [`empirical_quantile`] but selects in place on a scratch buffer.
/// The slice must be nonempty; its element order is clobbered.
pub fn quantile_in_place(scratch: &mut [f64], level: f64) -> f64 {
    debug_assert!(!scratch.is_empty());
    let k = order_stat_rank(level, scratch.len());
    let (_, kth, _) = scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

/// The uniform quantile-estimation error term from the DKW bound applied
/// across every (vertex, bucket) pair the DP can touch:
/// `|V| * sqrt(ln(2 (d+1)^2 |V|^2 / delta) / (2n))`.
pub fn dkw_gamma(num_vertices: usize, n: usize, d: u32, delta: f64) -> Result<f64, QuantileError> {
    if num_vertices == 0 || n == 0 || d == 0 {
        return Err(QuantileError::InvalidParams(
            "num_vertices, n, and d must be positive".into(),
        ));
    }
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(QuantileError::InvalidParams("delta must be in (0,1)".into()));
    }
    let v = num_vertices as f64;
    let d = d as f64;
    let inside = (2.0 * (d + 1.0).powi(2) * v * v / delta).ln() / (2.0 * n as f64);
    Ok(v * inside.sqrt())
}

/// Quantile levels bracketing an estimate under the two theorem bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremBounds {
    pub gamma: f64,
    pub delta: f64,
    /// `1 - alpha - gamma`, clamped to [0, 1].
    pub lower_level: f64,
    /// `1 - alpha + alpha^2 / 2`, clamped to [0, 1].
    pub upper_level: f64,
}

impl TheoremBounds {
    pub fn new(
        num_vertices: usize,
        n: usize,
        d: u32,
        delta: f64,
        alpha: f64,
    ) -> Result<Self, QuantileError> {
        if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
            return Err(QuantileError::InvalidParams("alpha must be in (0,1)".into()));
        }
        let gamma = dkw_gamma(num_vertices, n, d, delta)?;
        Ok(Self {
            gamma,
            delta,
            lower_level: (1.0 - alpha - gamma).clamp(0.0, 1.0),
            upper_level: (1.0 - alpha + alpha * alpha / 2.0).clamp(0.0, 1.0),
        })
    }
}

/// Exact (Clopper-Pearson) binomial confidence interval, by bisection on the
/// binomial CDF to 1e-6 precision. `lo = 0` when `successes = 0` and
/// `hi = 1` when `successes = trials`.
pub fn clopper_pearson(
    successes: u64,
    trials: u64,
    confidence: f64,
) -> Result<(f64, f64), QuantileError> {
    if trials == 0 || successes > trials {
        return Err(QuantileError::InvalidParams(
            "need 0 <= successes <= trials, trials >= 1".into(),
        ));
    }
    if !(0.0..1.0).contains(&confidence) || confidence == 0.0 {
        return Err(QuantileError::InvalidParams(
            "confidence must be in (0,1)".into(),
        ));
    }
    let tail = (1.0 - confidence) / 2.0;
    let lo = if successes == 0 {
        0.0
    } else {
        // Largest p with Pr[X >= k | p] <= tail; the tail probability is
        // increasing in p.
        bisect(|p| upper_tail(successes, trials, p) - tail)
    };
    let hi = if successes == trials {
        1.0
    } else {
        // Smallest p with Pr[X <= k | p] <= tail; decreasing in p.
        bisect(|p| tail - lower_tail(successes, trials, p))
    };
    Ok((lo, hi))
}

fn lower_tail(k: u64, n: u64, p: f64) -> f64 {
    Binomial::new(p, n).expect("valid binomial").cdf(k)
}

fn upper_tail(k: u64, n: u64, p: f64) -> f64 {
    1.0 - lower_tail(k - 1, n, p)
}

// Root of an increasing function on (0, 1).
fn bisect(f: impl Fn(f64) -> f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
