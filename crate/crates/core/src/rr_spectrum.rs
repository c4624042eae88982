//! Rayleigh–Ritz spectrum of `−u″ = E Σ u` in the Neumann cosine basis and
//! the tail-completed numerical sum rule.
//!
//! The generalized problem `D v = E M v` (stiffness `D = diag(εₙ)`, mass
//! `M = 1 + ⟨n|λσ|m⟩`) has the exact zero mode `v = e₀`. The remaining
//! levels are computed on its `M`-orthogonal complement: with
//! `S = M′ − m₀m₀ᵀ/M₀₀` the Schur complement of the zero-mode entry, the
//! nonzero levels are `E = 1/μ` for the eigenvalues `μ` of
//! `D′^{-1/2} S D′^{-1/2}`. `E₀ = 0` is then exact, and low levels keep full
//! relative accuracy.

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::neumann_basis::{eigenvalue, DensityModel, MatrixElementTable, HALF_LENGTH};
use crate::quadrature::GaussLegendre;
use crate::special::hurwitz_zeta;
use crate::sum_rules::{Route, SumRuleResult};
use crate::summation::compensated_sum;

/// Basis size used for the published spectra (zero mode included).
pub const DEFAULT_BASIS_SIZE: usize = 2001;
/// Levels summed explicitly before switching to the asymptotic tail.
pub const DEFAULT_N_MAX: usize = 200;

/// Stiffness (diagonal) and mass matrices on modes `0..basis_size`.
#[derive(Debug, Clone)]
pub struct RitzMatrices {
    pub stiffness: Vec<f64>,
    pub mass: Mat<f64>,
}

pub fn assemble(density: &DensityModel, basis_size: usize) -> Result<RitzMatrices> {
    if basis_size < 2 {
        return Err(Error::domain(
            "basis_size",
            format!("need at least 2 modes, got {basis_size}"),
        ));
    }
    let table = MatrixElementTable::for_density(density, basis_size);
    let mass = Mat::from_fn(basis_size, basis_size, |n, m| {
        table.get(n, m) + if n == m { 1.0 } else { 0.0 }
    });
    Ok(RitzMatrices {
        stiffness: (0..basis_size).map(eigenvalue).collect(),
        mass,
    })
}

/// Asymptotic model `Eₙ ≈ c n²` used for the tail beyond `n_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailModel {
    /// `κ` for a linear density, `None` otherwise.
    pub kappa: Option<f64>,
    pub coefficient: f64,
    pub n_max: usize,
}

impl TailModel {
    /// `c = π²/(∫√Σ)²`; closed form for a linear density.
    pub fn for_density(density: &DensityModel, n_max: usize) -> Self {
        let kappa = density.kappa();
        let coefficient = match kappa {
            Some(k) => asymptotic_coefficient(k),
            None => {
                let rule = GaussLegendre::new(64);
                let length =
                    rule.integrate(|x| density.density(x).sqrt(), -HALF_LENGTH, HALF_LENGTH);
                (std::f64::consts::PI / length).powi(2)
            }
        };
        Self {
            kappa,
            coefficient,
            n_max,
        }
    }

    pub fn level(&self, n: usize) -> f64 {
        self.coefficient * (n as f64).powi(2)
    }

    /// `Σ_{n>n_max} (c n²)^{-s}` with the Hurwitz truncation bound.
    pub fn tail(&self, s: f64) -> Result<(f64, f64)> {
        if !(s > 0.5) {
            return Err(Error::domain(
                "s",
                format!("tail diverges for s <= 1/2, got {s}"),
            ));
        }
        let z = hurwitz_zeta(2.0 * s, self.n_max as f64 + 1.0)?;
        let scale = self.coefficient.powf(-s);
        Ok((scale * z.value, scale * z.error_bound))
    }
}

/// `c(κ) = 18π²κ²/((2−κ)^{3/2} − (2+κ)^{3/2})²`, evaluated as
/// `(9π²/2)((2+κ)^{3/2} + (2−κ)^{3/2})²/(12+κ²)²`, which has no removable
/// singularity.
fn asymptotic_coefficient(kappa: f64) -> f64 {
    use std::f64::consts::PI;
    if kappa.abs() < 1e-6 {
        return PI * PI;
    }
    let sum = (2.0 + kappa).powf(1.5) + (2.0 - kappa).powf(1.5);
    4.5 * PI * PI * sum * sum / (12.0 + kappa * kappa).powi(2)
}

/// `E_n^{(asym)} = c(κ) n²` for the linear density `1 + κx`.
pub fn asymptotic_level(n: usize, kappa: f64) -> Result<f64> {
    if !(kappa.abs() < 2.0) {
        return Err(Error::domain(
            "kappa",
            format!("need |kappa| < 2, got {kappa}"),
        ));
    }
    if n == 0 {
        return Err(Error::domain("n", "asymptotic levels start at n = 1"));
    }
    Ok(asymptotic_coefficient(kappa) * (n as f64).powi(2))
}

/// `Σ_{n>n_max} (c(κ) n²)^{-s} = c(κ)^{-s} ζ_H(2s, n_max + 1)`.
pub fn tail_sum(s: f64, n_max: usize, kappa: f64) -> Result<f64> {
    if !(kappa.abs() < 2.0) {
        return Err(Error::domain(
            "kappa",
            format!("need |kappa| < 2, got {kappa}"),
        ));
    }
    if n_max == 0 {
        return Err(Error::domain("n_max", "need n_max >= 1"));
    }
    let model = TailModel {
        kappa: Some(kappa),
        coefficient: asymptotic_coefficient(kappa),
        n_max,
    };
    Ok(model.tail(s)?.0)
}

/// Ascending Rayleigh–Ritz levels for one density and basis size.
#[derive(Debug, Clone)]
pub struct RitzSpectrum {
    pub basis_size: usize,
    pub eigenvalues: Vec<f64>,
    pub density: DensityModel,
    /// `Eₙ(coarse) − Eₙ(this)` against a smaller basis, when requested.
    pub level_estimates: Option<Vec<f64>>,
}

impl RitzSpectrum {
    pub fn level(&self, n: usize) -> f64 {
        self.eigenvalues[n]
    }
}

pub fn solve(density: &DensityModel, basis_size: usize) -> Result<RitzSpectrum> {
    let RitzMatrices { stiffness, mass } = assemble(density, basis_size)?;
    if mass.llt(Side::Lower).is_err() {
        return Err(Error::MassNotPositiveDefinite { basis_size });
    }
    let k = basis_size - 1;
    let m00 = mass[(0, 0)];
    let scale: Vec<f64> = stiffness[1..].iter().map(|e| e.sqrt().recip()).collect();
    let reduced = Mat::from_fn(k, k, |i, j| {
        let schur = mass[(i + 1, j + 1)] - mass[(i + 1, 0)] * mass[(0, j + 1)] / m00;
        scale[i] * schur * scale[j]
    });
    let mu = reduced
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::EigenSolve { basis_size })?;
    if mu.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::MassNotPositiveDefinite { basis_size });
    }
    let mut eigenvalues = Vec::with_capacity(basis_size);
    eigenvalues.push(0.0);
    eigenvalues.extend(mu.iter().rev().map(|m| 1.0 / m));
    Ok(RitzSpectrum {
        basis_size,
        eigenvalues,
        density: density.clone(),
        level_estimates: None,
    })
}

/// [`solve`] plus per-level convergence estimates from a coarser basis.
pub fn solve_with_estimates(
    density: &DensityModel,
    basis_size: usize,
    coarse_size: usize,
) -> Result<RitzSpectrum> {
    if coarse_size >= basis_size {
        return Err(Error::domain(
            "coarse_size",
            "must be smaller than basis_size",
        ));
    }
    let coarse = solve(density, coarse_size)?;
    let mut fine = solve(density, basis_size)?;
    fine.level_estimates = Some(
        coarse
            .eigenvalues
            .iter()
            .zip(&fine.eigenvalues)
            .map(|(c, f)| c - f)
            .collect(),
    );
    Ok(fine)
}

/// `Z^{(num)}(s) = Σ_{n=1}^{n_max} Eₙ^{-s} + tail`, linear density `1 + κx`.
pub fn z_numerical(s: f64, kappa: f64, n_max: usize, basis_size: usize) -> Result<SumRuleResult> {
    let density = DensityModel::linear(kappa)?;
    z_numerical_for(s, &density, n_max, basis_size)
}

pub fn z_numerical_for(
    s: f64,
    density: &DensityModel,
    n_max: usize,
    basis_size: usize,
) -> Result<SumRuleResult> {
    check_window(n_max, basis_size)?;
    if !(s > 0.5) {
        return Err(Error::domain(
            "s",
            format!("tail diverges for s <= 1/2, got {s}"),
        ));
    }
    let spectrum = solve(density, basis_size)?;
    z_from_spectrum(s, &spectrum, n_max)
}

fn check_window(n_max: usize, basis_size: usize) -> Result<()> {
    if n_max == 0 || n_max + 1 >= basis_size {
        return Err(Error::domain(
            "n_max",
            format!(
                "need 1 <= n_max < basis_size - 1, got n_max = {n_max}, basis_size = {basis_size}"
            ),
        ));
    }
    Ok(())
}

/// The tail-completed sum on an existing spectrum.
///
/// `tail_estimate` is `s·r·tail + hurwitz_error` with `r` the largest
/// relative deviation of the Ritz levels from the asymptotic model over
/// `n ∈ [n_max/2, n_max]`.
pub fn z_from_spectrum(s: f64, spectrum: &RitzSpectrum, n_max: usize) -> Result<SumRuleResult> {
    check_window(n_max, spectrum.basis_size)?;
    let model = TailModel::for_density(&spectrum.density, n_max);
    let (tail, tail_err) = model.tail(s)?;
    let explicit = compensated_sum((1..=n_max).rev().map(|n| spectrum.level(n).powf(-s)));
    let deviation = (n_max / 2).max(1)..=n_max;
    let r_max = deviation
        .map(|n| (spectrum.level(n) / model.level(n) - 1.0).abs())
        .fold(0.0, f64::max);
    let total = explicit + tail;
    Ok(SumRuleResult {
        s,
        value_by_order: [total, 0.0, 0.0],
        total,
        truncation: spectrum.basis_size,
        n_max: Some(n_max),
        tail_estimate: s * r_max * tail + tail_err,
        route: Route::NumericalSpectrum,
    })
}
