//! Paired significance testing across seeded runs.
//!
//! The Student-t tail comes from the regularized incomplete beta function,
//! evaluated with a modified-Lentz continued fraction.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

const CF_MAX_ITER: usize = 300;
const CF_EPS: f64 = 1e-12;
const CF_TINY: f64 = 1e-300;

/// Continued fraction for `I_x(a, b)`, valid for `x < (a + 1) / (a + b + 2)`.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return h;
        }
    }
    log::warn!("incomplete beta continued fraction hit {CF_MAX_ITER} iterations (a={a}, b={b}, x={x})");
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(b, a, 1.0 - x) / b
    }
}

/// CDF of Student's t with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let tail = 0.5 * inc_beta(df / 2.0, 0.5, df / (df + t * t));
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Two-tailed p-value `2·(1 − F(|t|))`, computed as `I_{df/(df+t²)}(df/2, 1/2)`.
pub fn t_two_tailed_p(t: f64, df: usize) -> f64 {
    assert!(df >= 1, "t distribution needs df >= 1");
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let df = df as f64;
    inc_beta(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample (n − 1) standard deviation.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedT {
    pub t: f64,
    pub df: usize,
    pub n: usize,
    pub mean_diff: f64,
    pub sd_diff: f64,
    /// Differences are constant and nonzero, so `t` is infinite.
    pub degenerate: bool,
}

impl PairedT {
    pub fn p_value(&self) -> f64 {
        t_two_tailed_p(self.t, self.df)
    }

    /// Paired Cohen's d: `mean(diff) / sd(diff)`.
    pub fn cohens_d(&self) -> f64 {
        if self.sd_diff == 0.0 {
            if self.mean_diff == 0.0 {
                0.0
            } else {
                self.mean_diff.signum() * f64::INFINITY
            }
        } else {
            self.mean_diff / self.sd_diff
        }
    }
}

/// Paired Student t on `d_i = a_i − b_i`.
pub fn paired_t(a: &[f64], b: &[f64]) -> Result<PairedT> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("paired samples differ in length: {} vs {}", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("paired t-test needs n >= 2, got {n}")));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean_diff = mean(&diffs);
    let sd_diff = sample_sd(&diffs);
    let (t, degenerate) = if sd_diff == 0.0 {
        if mean_diff == 0.0 {
            (0.0, false)
        } else {
            log::warn!("paired differences are constant ({mean_diff}); t is infinite");
            (mean_diff.signum() * f64::INFINITY, true)
        }
    } else {
        (mean_diff / (sd_diff / (n as f64).sqrt()), false)
    };
    Ok(PairedT {
        t,
        df: n - 1,
        n,
        mean_diff,
        sd_diff,
        degenerate,
    })
}

pub fn cohens_d_paired(a: &[f64], b: &[f64]) -> Result<f64> {
    paired_t(a, b).map(|p| p.cohens_d())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stars {
    #[serde(rename = "ns")]
    Ns,
    #[serde(rename = "*")]
    One,
    #[serde(rename = "**")]
    Two,
    #[serde(rename = "***")]
    Three,
}

impl Stars {
    pub fn from_p(p: f64) -> Stars {
        if p < 0.001 {
            Stars::Three
        } else if p < 0.01 {
            Stars::Two
        } else if p < 0.05 {
            Stars::One
        } else {
            Stars::Ns
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stars::Ns => "ns",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        }
    }

    pub fn parse(s: &str) -> Option<Stars> {
        match s {
            "ns" => Some(Stars::Ns),
            "*" => Some(Stars::One),
            "**" => Some(Stars::Two),
            "***" => Some(Stars::Three),
            _ => None,
        }
    }
}

impl fmt::Display for Stars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One method's aggregate against the baseline. Test fields are `None` on
/// the baseline row.
#[derive(Debug, Clone, PartialEq)]
pub struct StatRow {
    pub method: String,
    pub n: usize,
    pub df: usize,
    pub mean: f64,
    pub sd: f64,
    pub delta: f64,
    pub t_stat: Option<f64>,
    pub p_value: Option<f64>,
    pub cohens_d: Option<f64>,
    pub stars: Stars,
}

impl StatRow {
    pub fn is_baseline(&self) -> bool {
        self.t_stat.is_none()
    }
}

/// Per-seed metric values of one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRuns {
    pub method: String,
    pub values: BTreeMap<u64, f64>,
}

/// Builds one row per method, baseline first and the rest in input order.
///
/// Tests compare `baseline − method`, so a method that raises the metric
/// gets a negative `t` and `d` while `delta = mean(method) − mean(baseline)`
/// is positive.
pub fn aggregate(runs: &[MethodRuns], baseline: &str) -> Result<Vec<StatRow>> {
    let base = runs
        .iter()
        .find(|r| r.method == baseline)
        .ok_or_else(|| Error::Config(format!("baseline `{baseline}` has no runs")))?;
    let seeds: Vec<u64> = base.values.keys().copied().collect();
    let base_vals: Vec<f64> = base.values.values().copied().collect();
    if base_vals.is_empty() {
        return Err(Error::Empty("baseline has no runs"));
    }
    let base_mean = mean(&base_vals);

    let mut rows = vec![StatRow {
        method: base.method.clone(),
        n: base_vals.len(),
        df: base_vals.len().saturating_sub(1),
        mean: base_mean,
        sd: sample_sd(&base_vals),
        delta: 0.0,
        t_stat: None,
        p_value: None,
        cohens_d: None,
        stars: Stars::Ns,
    }];
    for r in runs.iter().filter(|r| r.method != baseline) {
        if !r.values.keys().copied().eq(seeds.iter().copied()) {
            return Err(Error::SeedMismatch {
                baseline: baseline.to_owned(),
                method: r.method.clone(),
            });
        }
        let vals: Vec<f64> = r.values.values().copied().collect();
        let test = paired_t(&base_vals, &vals)?;
        let p = test.p_value();
        let m = mean(&vals);
        rows.push(StatRow {
            method: r.method.clone(),
            n: test.n,
            df: test.df,
            mean: m,
            sd: sample_sd(&vals),
            delta: m - base_mean,
            t_stat: Some(test.t),
            p_value: Some(p),
            cohens_d: Some(test.cohens_d()),
            stars: Stars::from_p(p),
        });
    }
    Ok(rows)
}
