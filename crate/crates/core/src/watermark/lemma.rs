use std::f64::consts::{E, PI};
use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};

pub const DEFAULT_VARIANCES: [f64; 3] = [0.25, 1.0, 4.0];
pub const MIN_SAMPLES: usize = 100_000;
/// Neighbor order of the entropy estimator.
pub const KNN_ORDER: usize = 3;
/// Allowed excess of an estimate over the Gaussian bound.
pub const ESTIMATE_TOLERANCE: f64 = 5e-3;
pub const DERIVATIVE_TOLERANCE: f64 = 1e-4;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Uniform,
    Laplace,
    Gaussian,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Uniform, Family::Laplace, Family::Gaussian];

    /// Closed-form differential entropy at variance `var`.
    pub fn exact_entropy(self, var: f64) -> f64 {
        let sigma = var.sqrt();
        match self {
            Family::Uniform => (12f64.sqrt() * sigma).ln(),
            Family::Laplace => 1.0 + (2.0 * sigma / 2f64.sqrt()).ln(),
            Family::Gaussian => gaussian_entropy_bound(var),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Uniform => "uniform",
            Family::Laplace => "laplace",
            Family::Gaussian => "gaussian",
        })
    }
}

/// Differential entropy of a Gaussian with variance `var`, the maximum over
/// all distributions of that variance.
pub fn gaussian_entropy_bound(var: f64) -> f64 {
    0.5 * (2.0 * PI * E * var).ln()
}

/// Zero-mean samples with variance `var`.
pub fn sample_family<R: Rng + ?Sized>(family: Family, var: f64, n: usize, rng: &mut R) -> Vec<f64> {
    let sigma = var.sqrt();
    match family {
        Family::Uniform => {
            let half = 3f64.sqrt() * sigma;
            (0..n).map(|_| rng.random_range(-half..half)).collect()
        }
        Family::Laplace => {
            let b = sigma / 2f64.sqrt();
            (0..n)
                .map(|_| loop {
                    let u: f64 = rng.random::<f64>() - 0.5;
                    let tail = 1.0 - 2.0 * u.abs();
                    if tail > 0.0 {
                        break -b * u.signum() * tail.ln();
                    }
                })
                .collect()
        }
        Family::Gaussian => {
            let normal = Normal::new(0.0, sigma).expect("finite positive sigma");
            (0..n).map(|_| normal.sample(rng)).collect()
        }
    }
}

fn digamma_int(n: usize) -> f64 {
    -EULER_GAMMA + (1..n).map(|i| 1.0 / i as f64).sum::<f64>()
}

/// Kozachenko-Leonenko estimate of the differential entropy (nats) of 1-D
/// samples using the distance to the `k`-th nearest neighbor.
pub fn kl_entropy(samples: &[f64], k: usize) -> Result<f64> {
    let n = samples.len();
    if k == 0 || n <= k {
        return arg_err(format!("need more than {k} samples, got {n}"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let mut log_sum = 0.0;
    for i in 0..n {
        // Merge the gaps to the left and right neighbors until k are taken.
        let (mut lo, mut hi) = (i, i);
        let mut r = 0.0;
        for _ in 0..k {
            let left = if lo > 0 { xs[i] - xs[lo - 1] } else { f64::INFINITY };
            let right = if hi + 1 < n { xs[hi + 1] - xs[i] } else { f64::INFINITY };
            if left <= right {
                lo -= 1;
                r = left;
            } else {
                hi += 1;
                r = right;
            }
        }
        if r <= 0.0 {
            return arg_err("duplicate samples make the neighbor distance zero");
        }
        log_sum += r.ln();
    }
    Ok(digamma_int(n) - digamma_int(k) + 2f64.ln() + log_sum / n as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub variance: f64,
    pub family: Family,
    pub entropy_estimate: f64,
    pub bound: f64,
    /// Bound minus estimate.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub rows: Vec<LemmaRow>,
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn row(&self, variance: f64, family: Family) -> Option<&LemmaRow> {
        self.rows.iter().find(|r| r.variance == variance && r.family == family)
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "variance,family,entropy_estimate,bound,margin")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.variance, r.family, r.entropy_estimate, r.bound, r.margin
            )?;
        }
        Ok(())
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(LemmaCheck {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }
}

/// Central finite difference of the bound with respect to the variance.
pub fn bound_derivative(var: f64) -> f64 {
    let h = var * 1e-5;
    (gaussian_entropy_bound(var + h) - gaussian_entropy_bound(var - h)) / (2.0 * h)
}

/// Estimates the entropy of matched-variance uniform, Laplace and Gaussian
/// samples at each variance and checks the Gaussian bound and its shape.
pub fn validate_lemma(variances: &[f64], samples: usize, seed: u64) -> Result<LemmaReport> {
    if variances.is_empty() {
        return arg_err("no variances given");
    }
    if let Some(v) = variances.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return arg_err(format!("variance {v} is not positive"));
    }
    if samples < MIN_SAMPLES {
        return arg_err(format!("at least {MIN_SAMPLES} samples are required, got {samples}"));
    }
    let jobs: Vec<(usize, f64, Family)> = variances
        .iter()
        .flat_map(|&v| Family::ALL.into_iter().map(move |f| (v, f)))
        .enumerate()
        .map(|(i, (v, f))| (i, v, f))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(stream, var, family)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream as u64);
            let xs = sample_family(family, var, samples, &mut rng);
            let estimate = kl_entropy(&xs, KNN_ORDER)?;
            let bound = gaussian_entropy_bound(var);
            Ok(LemmaRow {
                variance: var,
                family,
                entropy_estimate: estimate,
                bound,
                margin: bound - estimate,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = LemmaReport {
        rows,
        checks: Vec::new(),
    };
    for r in report.rows.clone() {
        report.check(
            format!("bounded {} at {}", r.family, r.variance),
            r.margin >= -ESTIMATE_TOLERANCE,
            format!("estimate {:.6}, bound {:.6}", r.entropy_estimate, r.bound),
        );
    }
    for &var in variances {
        let gauss = report.row(var, Family::Gaussian).map(|r| r.entropy_estimate);
        let others_below = Family::ALL
            .iter()
            .filter(|f| **f != Family::Gaussian)
            .all(|&f| report.row(var, f).map(|r| r.entropy_estimate) < gauss);
        report.check(
            format!("gaussian maximal at {var}"),
            others_below,
            "gaussian estimate exceeds the other families",
        );
        let fd = bound_derivative(var);
        let exact = 1.0 / (2.0 * var);
        let rel = ((fd - exact) / exact).abs();
        report.check(
            format!("derivative at {var}"),
            rel <= DERIVATIVE_TOLERANCE && fd > 0.0,
            format!("finite difference {fd:.9}, closed form {exact:.9}"),
        );
    }
    let sweep: Vec<f64> = (0..=12).map(|d| gaussian_entropy_bound(10f64.powi(-d))).collect();
    let decreasing = sweep.windows(2).all(|w| w[1] < w[0]);
    let steps_equal = sweep
        .windows(2)
        .all(|w| ((w[0] - w[1]) - 0.5 * 10f64.ln()).abs() < 1e-9);
    report.check(
        "bound unbounded below as variance vanishes",
        decreasing && steps_equal,
        format!("bound at 1e-12 is {:.4}", sweep[12]),
    );
    let zero = gaussian_entropy_bound(1.0 / (2.0 * PI * E));
    report.check("bound zero at 1/(2 pi e)", zero == 0.0, format!("{zero:e}"));
    Ok(report)
}
