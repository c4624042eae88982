//! κ-sweeps of the numerical sum rule, least-squares polynomial fits, and
//! the analytic constants of `Z(3/2)` for the linear density.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rr_spectrum::z_numerical;
use crate::special::zeta;
use crate::sum_rules::SumRuleResult;
use crate::summation::{compensated_sum, NeumaierSum};

/// Least-squares fit `Σ cⱼ κʲ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub degree: usize,
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    /// Ratio of extreme `|Rᵢᵢ|` after column equilibration.
    pub condition_estimate: f64,
    pub sample_points: Vec<(f64, f64)>,
}

impl FitResult {
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c)
    }
}

/// Least squares for `y ≈ Σⱼ cⱼ φⱼ(x)` by Householder QR with unit-norm
/// columns. Returns `c`.
pub fn polyfit_basis(
    xs: &[f64],
    ys: &[f64],
    basis: impl Fn(f64, usize) -> f64,
    columns: usize,
) -> Result<Vec<f64>> {
    Ok(lstsq(xs, ys, basis, columns)?.0)
}

/// `(coefficients, condition estimate)`.
fn lstsq(
    xs: &[f64],
    ys: &[f64],
    basis: impl Fn(f64, usize) -> f64,
    columns: usize,
) -> Result<(Vec<f64>, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::domain("samples", "x and y lengths differ"));
    }
    if xs.len() < columns {
        return Err(Error::domain(
            "samples",
            format!("need more than {} samples, got {}", columns - 1, xs.len()),
        ));
    }
    let rows = xs.len();
    let raw = Mat::from_fn(rows, columns, |i, j| basis(xs[i], j));
    let norms: Vec<f64> = (0..columns)
        .map(|j| {
            (0..rows)
                .map(|i| raw[(i, j)] * raw[(i, j)])
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    if let Some(j) = norms.iter().position(|n| *n == 0.0) {
        return Err(Error::RankDeficient { rank: j, columns });
    }
    let a = Mat::from_fn(rows, columns, |i, j| raw[(i, j)] / norms[j]);
    let qr = a.qr();
    let r = qr.thin_R();
    let diag: Vec<f64> = (0..columns).map(|j| r[(j, j)].abs()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let rank = diag.iter().filter(|d| **d > 1e-13 * max).count();
    if rank < columns {
        return Err(Error::RankDeficient { rank, columns });
    }
    let rhs = Mat::from_fn(rows, 1, |i, _| ys[i]);
    let sol = qr.solve_lstsq(&rhs);
    let mut scaled: Vec<f64> = (0..columns).map(|j| sol[(j, 0)]).collect();
    // refinement against an error-free residual
    for _ in 0..2 {
        let residual = Mat::from_fn(rows, 1, |i, _| {
            let mut acc = NeumaierSum::new();
            acc += ys[i];
            for (j, c) in scaled.iter().enumerate() {
                let p = -a[(i, j)] * c;
                acc += p;
                acc += (-a[(i, j)]).mul_add(*c, -p);
            }
            acc.value()
        });
        let delta = qr.solve_lstsq(&residual);
        for (j, c) in scaled.iter_mut().enumerate() {
            *c += delta[(j, 0)];
        }
    }
    let coeffs = scaled.iter().zip(&norms).map(|(c, n)| c / n).collect();
    Ok((coeffs, max / min))
}

/// Ordinary least-squares polynomial of the given degree.
pub fn polyfit(samples: &[(f64, f64)], degree: usize) -> Result<FitResult> {
    if samples.len() <= degree {
        return Err(Error::domain(
            "samples",
            format!(
                "degree {degree} needs more than {degree} samples, got {}",
                samples.len()
            ),
        ));
    }
    let xs: Vec<f64> = samples.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = samples.iter().map(|p| p.1).collect();
    let (coefficients, condition_estimate) = lstsq(&xs, &ys, |x, j| x.powi(j as i32), degree + 1)?;
    let mut fit = FitResult {
        degree,
        coefficients,
        residual_norm: 0.0,
        condition_estimate,
        sample_points: samples.to_vec(),
    };
    fit.residual_norm = samples
        .iter()
        .map(|(x, y)| (y - fit.eval(*x)).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(fit)
}

/// One point of a κ-sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSample {
    pub kappa: f64,
    pub result: SumRuleResult,
}

type SweepKey = (u64, u64, usize, usize);

fn sweep_cache() -> &'static Mutex<HashMap<SweepKey, SumRuleResult>> {
    static CACHE: OnceLock<Mutex<HashMap<SweepKey, SumRuleResult>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `Z^{(num)}(s; κ)` for every κ in the grid, in grid order.
///
/// Points run on the current rayon pool; results are memoized per
/// `(s, κ, n_max, basis_size)`.
pub fn kappa_sweep(
    s: f64,
    grid: &[f64],
    n_max: usize,
    basis_size: usize,
) -> Result<Vec<SweepSample>> {
    if let Some(k) = grid.iter().find(|k| !(k.abs() < 2.0)) {
        return Err(Error::domain("kappa", format!("need |kappa| < 2, got {k}")));
    }
    grid.par_iter()
        .map(|&kappa| {
            let key = (s.to_bits(), kappa.to_bits(), n_max, basis_size);
            if let Some(hit) = sweep_cache()
                .lock()
                .expect("sweep cache poisoned")
                .get(&key)
            {
                return Ok(SweepSample {
                    kappa,
                    result: *hit,
                });
            }
            let result = z_numerical(s, kappa, n_max, basis_size)?;
            sweep_cache()
                .lock()
                .expect("sweep cache poisoned")
                .insert(key, result);
            Ok(SweepSample { kappa, result })
        })
        .collect()
}

/// `κ = step, 2·step, …, count·step`.
pub fn kappa_grid(step: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|i| i as f64 * step).collect()
}

/// Analytic constants of `Z(3/2) = c₀ + c₂κ² + O(κ⁴)` for `Σ = 1 + κx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Z32Constants {
    /// `ζ(3)/π³`
    pub c0: f64,
    /// `−381ζ(7)/(32π⁷) + D`
    pub c2: f64,
    /// The double sum `D`, truncated at `n, m ≤ K`.
    pub d: f64,
    /// Bound on `D − d`.
    pub d_tail_bound: f64,
    pub truncation: usize,
}

/// One term of `D`:
/// `12(4m² + (1−2n)²)² / [π⁷ m (2n−1)(2m−2n+1)⁴(2m+2n−1)⁵]`.
fn d_term(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    let a = 2.0 * n - 1.0;
    let num = 4.0 * m * m + a * a;
    12.0 * num * num / (m * a * (2.0 * m - a).powi(4) * (2.0 * m + a).powi(5))
}

/// Partial sum of `D` over `1 ≤ n, m ≤ K`, `m` inner, and its tail bound.
///
/// With `a = 2n−1`, `b = 2m`, `t = a+b`, `d = |b−a|` every term is positive
/// and at most `24/(π⁷ a b t d⁴)`; summing over the excluded pairs
/// (`t ≥ 2K+3`) gives `2/(π³(2K+2)²) + 256/(π⁷(2K+2)³)`.
pub fn d_double_sum(truncation: usize) -> (f64, f64) {
    let pi7 = std::f64::consts::PI.powi(7);
    let strips: Vec<f64> = (1..=truncation)
        .into_par_iter()
        .map(|n| {
            let mut acc = NeumaierSum::new();
            for m in 1..=truncation {
                acc += d_term(n, m);
            }
            acc.value()
        })
        .collect();
    let value = compensated_sum(strips) / pi7;
    let t0 = 2.0 * truncation as f64 + 2.0;
    let pi3 = std::f64::consts::PI.powi(3);
    let bound = 2.0 / (pi3 * t0 * t0) + 256.0 / (pi7 * t0.powi(3));
    (value, bound)
}

/// `c₀`, `c₂` and `D` with the double sum truncated at `K ≥ 100`.
pub fn z32_constants(truncation: usize) -> Result<Z32Constants> {
    if truncation < 100 {
        return Err(Error::domain(
            "K_double_sum",
            format!("need K >= 100, got {truncation}"),
        ));
    }
    let pi = std::f64::consts::PI;
    let (d, d_tail_bound) = d_double_sum(truncation);
    Ok(Z32Constants {
        c0: zeta(3.0)? / pi.powi(3),
        c2: -381.0 * zeta(7.0)? / (32.0 * pi.powi(7)) + d,
        d,
        d_tail_bound,
        truncation,
    })
}
