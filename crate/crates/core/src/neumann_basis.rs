//! Homogeneous Neumann problem on the unit string `x ∈ [-1/2, 1/2]`.
//!
//! Modes are `ψ₀ = 1` and `ψₙ(x) = √2 cos(nπ(x + 1/2))` with eigenvalues
//! `εₙ = n²π²`. Matrix elements of polynomial densities are evaluated in
//! closed form; nothing in this module uses quadrature.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::polynomial::Polynomial;
use crate::summation::NeumaierSum;

pub const HALF_LENGTH: f64 = 0.5;
/// Length of the string, which is also its volume `V`.
pub const VOLUME: f64 = 1.0;

/// `εₙ = n²π²`.
#[inline]
pub fn eigenvalue(n: usize) -> f64 {
    let k = n as f64 * PI;
    k * k
}

/// Normalized Neumann mode `ψₙ(x)`.
#[inline]
pub fn mode_function(n: usize, x: f64) -> f64 {
    if n == 0 {
        1.0 / VOLUME.sqrt()
    } else {
        SQRT_2 * (n as f64 * PI * (x + HALF_LENGTH)).cos()
    }
}

/// Truncated homogeneous spectral data: modes `0..mode_count`, the zero mode
/// first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannBasis {
    mode_count: usize,
    eigenvalues: Vec<f64>,
}

impl NeumannBasis {
    pub fn new(mode_count: usize) -> Result<Self> {
        if mode_count == 0 {
            return Err(Error::domain(
                "mode_count",
                "basis needs at least the zero mode",
            ));
        }
        Ok(Self {
            mode_count,
            eigenvalues: (0..mode_count).map(eigenvalue).collect(),
        })
    }

    /// Basis holding the zero mode plus `interior` nonzero modes.
    pub fn with_interior_modes(interior: usize) -> Result<Self> {
        Self::new(interior + 1)
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn interior_modes(&self) -> usize {
        self.mode_count - 1
    }

    pub fn volume(&self) -> f64 {
        VOLUME
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mode(&self, n: usize, x: f64) -> f64 {
        mode_function(n, x)
    }

    /// Expansion `Σ cₙ ψₙ(x)` over the first `coeffs.len()` modes.
    pub fn evaluate(&self, coeffs: &[f64], x: f64) -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * mode_function(n, x))
            .sum::<NeumaierSum>()
            .value()
    }
}

/// Inhomogeneous density `Σ(x) = 1 + λσ(x)` with polynomial `σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityModel {
    lambda: f64,
    sigma: Polynomial,
    kappa: Option<f64>,
}

impl DensityModel {
    /// Validates `Σ > 0` on the closed interval via a polynomial lower bound.
    pub fn new(lambda: f64, sigma_coeffs: Vec<f64>) -> Result<Self> {
        if !lambda.is_finite() || sigma_coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("density", "coefficients must be finite"));
        }
        let sigma = Polynomial::new(sigma_coeffs);
        let full = &Polynomial::constant(1.0) + &sigma.scale(lambda);
        let lower_bound = full.lower_bound(-HALF_LENGTH, HALF_LENGTH);
        if !(lower_bound > 0.0) {
            return Err(Error::InvalidDensity { lower_bound });
        }
        let kappa = match sigma.coeffs() {
            [c0, k] if *c0 == 0.0 => Some(*k),
            _ => None,
        };
        Ok(Self {
            lambda,
            sigma,
            kappa,
        })
    }

    /// `Σ(x) = 1 + κx`, valid for `|κ| < 2`.
    pub fn linear(kappa: f64) -> Result<Self> {
        let mut model = Self::new(1.0, vec![0.0, kappa])?;
        model.kappa = Some(kappa);
        Ok(model)
    }

    pub fn homogeneous() -> Self {
        Self {
            lambda: 1.0,
            sigma: Polynomial::zero(),
            kappa: Some(0.0),
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma(&self) -> &Polynomial {
        &self.sigma
    }

    /// Slope of a linear density `1 + κx` (`None` for other shapes).
    pub fn kappa(&self) -> Option<f64> {
        self.kappa.map(|k| k * self.lambda)
    }

    /// `λσ`, the polynomial whose matrix elements enter every expansion.
    pub fn perturbation(&self) -> Polynomial {
        self.sigma.scale(self.lambda)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.sigma.is_zero() || self.lambda == 0.0
    }

    pub fn density(&self, x: f64) -> f64 {
        1.0 + self.lambda * self.sigma.eval(x)
    }

    pub fn sigma_at(&self, x: f64) -> f64 {
        self.sigma.eval(x)
    }

    /// Constant `B` with `|⟨n|λσ|m⟩| ≤ B/π² (1/(n−m)² + 1/(n+m)²)` for
    /// `n ≠ m`, from two integrations by parts.
    pub fn off_diagonal_decay_constant(&self) -> f64 {
        let p = self.perturbation();
        let d1 = p.derivative();
        let d2 = d1.derivative();
        let max_d2 = d2
            .lower_bound(-HALF_LENGTH, HALF_LENGTH)
            .abs()
            .max(d2.scale(-1.0).lower_bound(-HALF_LENGTH, HALF_LENGTH).abs());
        d1.eval(-HALF_LENGTH).abs() + d1.eval(HALF_LENGTH).abs() + max_d2
    }

    /// Upper bound on `sup |λσ|` over the interval.
    pub fn sup_perturbation(&self) -> f64 {
        let p = self.perturbation();
        p.lower_bound(-HALF_LENGTH, HALF_LENGTH)
            .abs()
            .max(p.scale(-1.0).lower_bound(-HALF_LENGTH, HALF_LENGTH).abs())
    }
}

/// `∫_{-1/2}^{1/2} x^p dx`.
fn power_moment(p: usize) -> f64 {
    if p % 2 == 1 {
        0.0
    } else {
        2.0 * HALF_LENGTH.powi(p as i32 + 1) / (p as f64 + 1.0)
    }
}

/// `∫_{-1/2}^{1/2} x^p cos(kπ(x + 1/2)) dx` for every `p ≤ max_power`.
///
/// Small `kπ` uses the Taylor series of the cosine; large `kπ` the
/// integration-by-parts recursion, which is stable there.
pub fn cosine_moments(max_power: usize, k: usize) -> Vec<f64> {
    if k == 0 {
        return (0..=max_power).map(power_moment).collect();
    }
    let kpi = k as f64 * PI;
    if kpi < max_power as f64 {
        cosine_moments_series(max_power, k)
    } else {
        cosine_moments_recursion(max_power, k)
    }
}

fn cosine_moments_recursion(max_power: usize, k: usize) -> Vec<f64> {
    let kpi = k as f64 * PI;
    let parity = if k % 2 == 0 { 1.0 } else { -1.0 };
    let mut cos_m = vec![0.0; max_power + 1];
    // sin moments ∫ x^q sin(kπ(x+1/2)) dx
    let mut sin_prev = (1.0 - parity) / kpi;
    for q in 1..=max_power {
        let qf = q as f64;
        cos_m[q] = -qf / kpi * sin_prev;
        let boundary = -(HALF_LENGTH.powi(q as i32) * parity - (-HALF_LENGTH).powi(q as i32)) / kpi;
        sin_prev = boundary + qf / kpi * cos_m[q - 1];
    }
    cos_m
}

fn cosine_moments_series(max_power: usize, k: usize) -> Vec<f64> {
    let kpi = k as f64 * PI;
    // cos(kπ/2), sin(kπ/2) exactly
    let (c_half, s_half) = match k % 4 {
        0 => (1.0, 0.0),
        1 => (0.0, 1.0),
        2 => (-1.0, 0.0),
        _ => (0.0, -1.0),
    };
    (0..=max_power)
        .map(|p| {
            // cos(kπx + kπ/2) = cos(kπ/2) cos(kπx) − sin(kπ/2) sin(kπx)
            let mut acc = NeumaierSum::new();
            let mut term = 1.0; // (kπ)^j / j!
            for j in 0..200 {
                if j > 0 {
                    term *= kpi / j as f64;
                }
                let contribution = match j % 4 {
                    0 => c_half * term,
                    1 => -s_half * term,
                    2 => -c_half * term,
                    _ => s_half * term,
                } * power_moment(p + j);
                acc += contribution;
                if j > 4 && term * HALF_LENGTH.powi((p + j) as i32) < 1e-22 {
                    break;
                }
            }
            acc.value()
        })
        .collect()
}

/// `⟨n|poly|m⟩` by closed form.
pub fn poly_element(poly: &Polynomial, n: usize, m: usize) -> f64 {
    let deg = poly.degree();
    let coeffs = poly.coeffs();
    let contract = |moments: &[f64]| -> f64 {
        coeffs
            .iter()
            .zip(moments)
            .map(|(a, mom)| a * mom)
            .sum::<NeumaierSum>()
            .value()
    };
    match (n, m) {
        (0, 0) => contract(&cosine_moments(deg, 0)),
        (0, k) | (k, 0) => SQRT_2 * contract(&cosine_moments(deg, k)),
        _ => {
            let diff = contract(&cosine_moments(deg, n.abs_diff(m)));
            let sum = contract(&cosine_moments(deg, n + m));
            diff + sum
        }
    }
}

/// `⟨n|σ|m⟩` for the density's unscaled `σ`.
pub fn sigma_element(n: usize, m: usize, density: &DensityModel) -> f64 {
    poly_element(density.sigma(), n, m)
}

/// Symmetric table of `⟨n|f|m⟩` for `n, m < size`, zero mode included.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixElementTable {
    size: usize,
    entries: Vec<f64>,
}

impl MatrixElementTable {
    pub fn new(poly: &Polynomial, size: usize) -> Self {
        let mut entries = vec![0.0; size * size];
        if !poly.is_zero() {
            // Each entry depends only on |n−m| and n+m; cache the moment
            // contractions per wavenumber.
            let deg = poly.degree();
            let coeffs = poly.coeffs();
            let by_k: Vec<f64> = (0..2 * size)
                .map(|k| {
                    coeffs
                        .iter()
                        .zip(cosine_moments(deg, k))
                        .map(|(a, mom)| a * mom)
                        .sum::<NeumaierSum>()
                        .value()
                })
                .collect();
            let odd = poly.is_odd();
            for n in 0..size {
                for m in n..size {
                    let v = if odd && n == m {
                        0.0
                    } else {
                        match (n, m) {
                            (0, 0) => by_k[0],
                            (0, k) => SQRT_2 * by_k[k],
                            _ => by_k[m - n] + by_k[n + m],
                        }
                    };
                    entries[n * size + m] = v;
                    entries[m * size + n] = v;
                }
            }
        }
        Self { size, entries }
    }

    /// Table of `⟨n|λσ|m⟩` for a density.
    pub fn for_density(density: &DensityModel, size: usize) -> Self {
        Self::new(&density.perturbation(), size)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.entries[n * self.size + m]
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.entries[n * self.size..(n + 1) * self.size]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// Galerkin square: `Σ_{r<size} ⟨n|f|r⟩⟨r|f|m⟩`.
    pub fn projected_square(&self) -> Self {
        let size = self.size;
        let mut entries = vec![0.0; size * size];
        for n in 0..size {
            for m in n..size {
                let v = crate::summation::dot(self.row(n), self.row(m));
                entries[n * size + m] = v;
                entries[m * size + n] = v;
            }
        }
        Self { size, entries }
    }
}

fn check_coordinate(name: &'static str, x: f64) -> Result<()> {
    if !(-HALF_LENGTH..=HALF_LENGTH).contains(&x) {
        return Err(Error::domain(name, format!("{x} lies outside [-1/2, 1/2]")));
    }
    Ok(())
}

/// Regularized Neumann Green's function `(1 − 6|x−y| + 6(x²+y²))/12`.
pub fn green_regularized(x: f64, y: f64) -> Result<f64> {
    check_coordinate("x", x)?;
    check_coordinate("y", y)?;
    Ok(green_regularized_unchecked(x, y))
}

#[inline]
pub(crate) fn green_regularized_unchecked(x: f64, y: f64) -> f64 {
    (1.0 - 6.0 * (x - y).abs() + 6.0 * (x * x + y * y)) / 12.0
}

/// Truncated spectral sum `Σ_{n=1}^{truncation} ψₙ(x)ψₙ(y)/εₙ^{q+1}`.
pub fn green_q(q: u32, x: f64, y: f64, truncation: usize) -> f64 {
    let mut acc = NeumaierSum::new();
    for n in 1..=truncation {
        acc += mode_function(n, x) * mode_function(n, y) / eigenvalue(n).powi(q as i32 + 1);
    }
    acc.value()
}
