//! Shift expansion of the fundamental (zero) mode.
//!
//! For `(−Δ + γ)Ψ₀ = E₀(γ) Σ Ψ₀` the eigenvalue expands as
//! `E₀(γ) = Σ_{j≥1} γʲ E₀⁽ʲ⁾`. The coefficients follow from traces of the
//! regularized Green's functions `G⁽q⁾` sandwiched between densities; every
//! trace is available by two independent routes:
//!
//! * spectral sums over exact matrix elements ([`ZeroModeTraces::spectral`]);
//! * nested Gauss–Legendre quadrature of the closed-form kernel, split at
//!   the kink ([`ZeroModeTraces::quadrature`]).
//!
//! The eigenfunction corrections `Ψ₀⁽ᵏ⁾` are built by the defining recursion
//! on top of the quadrature route, which gives a third, recursion-based,
//! evaluation of `E₀⁽ᵏ⁾`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::neumann_basis::{
    eigenvalue, green_regularized_unchecked, DensityModel, MatrixElementTable, HALF_LENGTH,
};
use crate::quadrature::{integrate_split, GaussLegendre};
use crate::summation::{compensated_sum, NeumaierSum};

/// Nodes per panel for the nested quadrature route. Integrands are
/// polynomial on each side of the kink, so this is exact for densities up
/// to moderate degree.
const QUADRATURE_NODES: usize = 24;

/// Truncation used for spectral traces when none is given.
pub const DEFAULT_TRACE_MODES: usize = 2000;

/// A real function on `[-1/2, 1/2]`.
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Density-sandwiched Green's-function traces entering `E₀⁽¹⁾…E₀⁽⁴⁾`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroModeTraces {
    /// `⟨0|Σ|0⟩`
    pub norm: f64,
    /// `⟨0|Σ G⁽⁰⁾ Σ|0⟩`
    pub g0: f64,
    /// `⟨0|Σ G⁽¹⁾ Σ|0⟩`
    pub g1: f64,
    /// `⟨0|Σ G⁽²⁾ Σ|0⟩`
    pub g2: f64,
    /// `⟨0|Σ G⁽⁰⁾ Σ G⁽⁰⁾ Σ|0⟩`
    pub g0g0: f64,
    /// `⟨0|Σ G⁽¹⁾ Σ G⁽⁰⁾ Σ|0⟩`
    pub g1g0: f64,
    /// `⟨0|Σ G⁽⁰⁾ Σ G⁽⁰⁾ Σ G⁽⁰⁾ Σ|0⟩`
    pub g0g0g0: f64,
}

impl ZeroModeTraces {
    /// Spectral sums over modes `1..=interior_modes`.
    pub fn spectral(density: &DensityModel, interior_modes: usize) -> Self {
        let size = interior_modes + 1;
        let table = MatrixElementTable::for_density(density, size);
        let norm = 1.0 + table.get(0, 0);
        let eps: Vec<f64> = (0..size).map(eigenvalue).collect();
        // v_n = ⟨n|Σ|0⟩ on the primed modes
        let v: Vec<f64> = (1..size).map(|n| table.get(0, n)).collect();
        let w: Vec<f64> = v
            .iter()
            .enumerate()
            .map(|(i, vn)| vn / eps[i + 1])
            .collect();
        let w2: Vec<f64> = v
            .iter()
            .enumerate()
            .map(|(i, vn)| vn / (eps[i + 1] * eps[i + 1]))
            .collect();
        // u = Σ' w, with Σ'ₙₘ = δₙₘ + σₙₘ on the primed block
        let u: Vec<f64> = (1..size)
            .map(|n| {
                let row = &table.row(n)[1..];
                let mut acc = NeumaierSum::new();
                acc += w[n - 1];
                for (r, wr) in row.iter().zip(&w) {
                    acc += r * wr;
                }
                acc.value()
            })
            .collect();
        let g0 = compensated_sum(v.iter().zip(&w).map(|(a, b)| a * b));
        let g1 = compensated_sum(v.iter().zip(&w2).map(|(a, b)| a * b));
        let g2 = compensated_sum(
            v.iter()
                .zip(&w2)
                .enumerate()
                .map(|(i, (a, b))| a * b / eps[i + 1]),
        );
        let g0g0 = compensated_sum(w.iter().zip(&u).map(|(a, b)| a * b));
        let g1g0 = compensated_sum(w2.iter().zip(&u).map(|(a, b)| a * b));
        let g0g0g0 = compensated_sum(u.iter().enumerate().map(|(i, un)| un * un / eps[i + 1]));
        Self {
            norm,
            g0,
            g1,
            g2,
            g0g0,
            g1g0,
            g0g0g0,
        }
    }

    /// Nested quadrature of the closed-form `G⁽⁰⁾`.
    pub fn quadrature(density: &DensityModel) -> Self {
        let rule = Arc::new(GaussLegendre::new(QUADRATURE_NODES));
        let d = density.clone();
        let sigma: Profile = Arc::new(move |x| d.density(x));
        let h = apply_green(&rule, sigma.clone());
        let g = apply_green(&rule, h.clone());
        let sh = product(&sigma, &h);
        let k = apply_green(&rule, sh.clone());
        let outer = |f: &dyn Fn(f64) -> f64| rule.integrate(f, -HALF_LENGTH, HALF_LENGTH);
        Self {
            norm: outer(&|x| sigma(x)),
            g0: outer(&|x| sigma(x) * h(x)),
            g1: outer(&|x| h(x) * h(x)),
            g2: outer(&|x| h(x) * g(x)),
            g0g0: outer(&|x| h(x) * sh(x)),
            g1g0: outer(&|x| g(x) * sh(x)),
            g0g0g0: outer(&|x| sh(x) * k(x)),
        }
    }

    /// `E₀⁽¹⁾ … E₀⁽⁴⁾` from the closed trace formulas.
    pub fn energies(&self) -> [f64; 4] {
        let s = self.norm;
        let e1 = 1.0 / s;
        let e2 = -self.g0 / s.powi(3);
        let e3 = self.g1 / s.powi(3) - self.g0g0 / s.powi(4) + 2.0 * self.g0 * self.g0 / s.powi(5);
        let e4 = -self.g2 / s.powi(3) + 2.0 * self.g1g0 / s.powi(4)
            - 4.0 * self.g1 * self.g0 / s.powi(5)
            - 5.0 * self.g0.powi(3) / s.powi(7)
            + 5.0 * self.g0 * self.g0g0 / s.powi(6)
            - self.g0g0g0 / s.powi(5);
        [e1, e2, e3, e4]
    }
}

fn product(a: &Profile, b: &Profile) -> Profile {
    let (a, b) = (a.clone(), b.clone());
    Arc::new(move |x| a(x) * b(x))
}

/// `x ↦ ∫ G⁽⁰⁾(x, y) f(y) dy`, split at the kink `y = x`.
pub fn apply_green(rule: &Arc<GaussLegendre>, f: Profile) -> Profile {
    let rule = rule.clone();
    Arc::new(move |x| {
        integrate_split(
            &rule,
            |y| green_regularized_unchecked(x, y) * f(y),
            -HALF_LENGTH,
            HALF_LENGTH,
            x,
        )
    })
}

/// Eigenvalue coefficients with both trace routes retained.
#[derive(Clone)]
pub struct ZeroModeSeries {
    /// `E₀⁽¹⁾ … E₀⁽ᵐᵃˣ⁾` from spectral traces.
    pub energies: Vec<f64>,
    /// The same coefficients from nested quadrature.
    pub energies_quadrature: Vec<f64>,
    pub spectral_traces: ZeroModeTraces,
    pub quadrature_traces: ZeroModeTraces,
    corrections: Vec<Profile>,
}

impl std::fmt::Debug for ZeroModeSeries {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ZeroModeSeries")
            .field("energies", &self.energies)
            .field("energies_quadrature", &self.energies_quadrature)
            .field("corrections", &self.corrections.len())
            .finish()
    }
}

impl ZeroModeSeries {
    /// `E₀⁽ʲ⁾`, `j ≥ 1`; `E₀⁽⁰⁾ = 0`.
    pub fn energy(&self, order: usize) -> f64 {
        if order == 0 {
            0.0
        } else {
            self.energies[order - 1]
        }
    }

    /// Largest absolute disagreement between the two trace routes.
    pub fn route_discrepancy(&self) -> f64 {
        self.energies
            .iter()
            .zip(&self.energies_quadrature)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `Ψ₀⁽ʲ⁾` for `j = 0..=2`.
    pub fn wavefunction(&self, order: usize) -> Option<&Profile> {
        self.corrections.get(order)
    }
}

/// `E₀⁽¹⁾ … E₀⁽ᵐᵃˣ⁾` (`max_order ≤ 4`) with wavefunction corrections
/// `Ψ₀⁽⁰⁾ … Ψ₀⁽²⁾`.
pub fn e0_series(density: &DensityModel, max_order: usize) -> Result<ZeroModeSeries> {
    e0_series_with(density, max_order, DEFAULT_TRACE_MODES)
}

pub fn e0_series_with(
    density: &DensityModel,
    max_order: usize,
    interior_modes: usize,
) -> Result<ZeroModeSeries> {
    if !(1..=4).contains(&max_order) {
        return Err(Error::domain(
            "max_order",
            format!("expected 1..=4, got {max_order}"),
        ));
    }
    let spectral_traces = ZeroModeTraces::spectral(density, interior_modes);
    let quadrature_traces = ZeroModeTraces::quadrature(density);
    let recursion = ZeroModeRecursion::new(density, 2);
    Ok(ZeroModeSeries {
        energies: spectral_traces.energies()[..max_order].to_vec(),
        energies_quadrature: quadrature_traces.energies()[..max_order].to_vec(),
        spectral_traces,
        quadrature_traces,
        corrections: recursion.wavefunctions,
    })
}

/// Energies and wavefunctions from the order-by-order recursion
///
/// ```text
/// E₀⁽ᵏ⁾ = −Σ_{j=1}^{k−1} E₀⁽ʲ⁾ ⟨Ψ₀⁽⁰⁾|Σ|Ψ₀⁽ᵏ⁻ʲ⁾⟩ / ⟨Ψ₀⁽⁰⁾|Σ|Ψ₀⁽⁰⁾⟩
/// Ψ₀⁽ᵏ⁾ = Σ_{j=1}^{k} E₀⁽ʲ⁾ G⁽⁰⁾[Σ Ψ₀⁽ᵏ⁻ʲ⁾] − G⁽⁰⁾[Ψ₀⁽ᵏ⁻¹⁾]
/// ```
pub struct ZeroModeRecursion {
    pub energies: Vec<f64>,
    pub wavefunctions: Vec<Profile>,
}

impl ZeroModeRecursion {
    /// Runs the recursion through wavefunction order `max_wave` (≤ 3) and
    /// energy order `max_wave + 1`.
    pub fn new(density: &DensityModel, max_wave: usize) -> Self {
        let max_wave = max_wave.min(3);
        let rule = Arc::new(GaussLegendre::new(QUADRATURE_NODES));
        let d = density.clone();
        let sigma: Profile = Arc::new(move |x| d.density(x));
        let inner = |f: &Profile| rule.integrate(|x| sigma(x) * f(x), -HALF_LENGTH, HALF_LENGTH);

        let psi0: Profile = Arc::new(|_| 1.0);
        let norm = inner(&psi0);
        let mut energies = vec![1.0 / norm];
        let mut waves = vec![psi0];
        for k in 1..=max_wave {
            let mut terms: Vec<(f64, Profile)> = Vec::new();
            for j in 1..=k {
                terms.push((
                    energies[j - 1],
                    apply_green(&rule, product(&sigma, &waves[k - j])),
                ));
            }
            terms.push((-1.0, apply_green(&rule, waves[k - 1].clone())));
            let psi_k: Profile = Arc::new(move |x| terms.iter().map(|(c, f)| c * f(x)).sum());
            waves.push(psi_k);
            // E₀⁽ᵏ⁺¹⁾ needs Ψ₀⁽¹⁾ … Ψ₀⁽ᵏ⁾
            let next = k + 1;
            let mut acc = NeumaierSum::new();
            for j in 1..next {
                acc += energies[j - 1] * inner(&waves[next - j]);
            }
            energies.push(-acc.value() / norm);
        }
        Self {
            energies,
            wavefunctions: waves,
        }
    }
}

/// `Ψ₀⁽ᵏ⁾` for `k ≤ 2` by the recursion.
pub fn psi0_correction(density: &DensityModel, order: usize) -> Result<Profile> {
    if order > 2 {
        return Err(Error::domain(
            "order",
            format!("wavefunction corrections exist for k <= 2, got {order}"),
        ));
    }
    Ok(ZeroModeRecursion::new(density, order).wavefunctions[order].clone())
}

/// Second-order (in the density) expansion of `E₀(γ)^{-s}`, split by
/// power of `γ`:
///
/// ```text
/// γ^{-s}   [1 + s⟨0|σ|0⟩ + s(s−1)/2 ⟨0|σ|0⟩²]
/// + γ^{1-s} s Σ'ₙ ⟨0|σ|n⟩²/εₙ
/// − γ^{2-s} s Σ'ₙ ⟨0|σ|n⟩²/εₙ²
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountertermExpansion {
    pub s: f64,
    pub gamma: f64,
    /// Coefficients of `γ^{-s}` at density orders 0, 1, 2.
    pub pole: [f64; 3],
    /// Coefficient of `γ^{1-s}` (density order 2).
    pub sub_pole: f64,
    /// Coefficient of `γ^{2-s}` (density order 2).
    pub sub_sub_pole: f64,
}

impl CountertermExpansion {
    pub fn value(&self) -> f64 {
        let g = self.gamma;
        let s = self.s;
        (self.pole[0] + self.pole[1] + self.pole[2]) * g.powf(-s)
            + self.sub_pole * g.powf(1.0 - s)
            + self.sub_sub_pole * g.powf(2.0 - s)
    }

    /// The part that stays finite as `γ → 0`.
    pub fn vanishing_part(&self) -> f64 {
        self.sub_sub_pole * self.gamma.powf(2.0 - self.s)
    }
}

/// Truncated expansion of `E₀(γ)^{-s}` with primed sums over
/// `1..=interior_modes`.
pub fn e0_inverse_power(
    s: f64,
    gamma: f64,
    density: &DensityModel,
    interior_modes: usize,
) -> Result<CountertermExpansion> {
    if !(s > 1.0 && s <= 1.5) {
        return Err(Error::domain(
            "s",
            format!("expansion holds for 1 < s <= 3/2, got {s}"),
        ));
    }
    if !(gamma > 0.0) {
        return Err(Error::domain(
            "gamma",
            format!("shift must be positive, got {gamma}"),
        ));
    }
    let p = density.perturbation();
    let table = MatrixElementTable::new(&p, 1);
    let sigma00 = table.get(0, 0);
    let overlaps: Vec<f64> = (1..=interior_modes)
        .map(|n| crate::neumann_basis::poly_element(&p, 0, n))
        .collect();
    let first = compensated_sum(
        overlaps
            .iter()
            .enumerate()
            .map(|(i, v)| v * v / eigenvalue(i + 1)),
    );
    let second = compensated_sum(
        overlaps
            .iter()
            .enumerate()
            .map(|(i, v)| v * v / eigenvalue(i + 1).powi(2)),
    );
    Ok(CountertermExpansion {
        s,
        gamma,
        pole: [1.0, s * sigma00, 0.5 * s * (s - 1.0) * sigma00 * sigma00],
        sub_pole: s * first,
        sub_sub_pole: -s * second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neumann_basis::mode_function;
    use std::f64::consts::PI;

    #[test]
    fn homogeneous_series_is_trivial() {
        let series = e0_series_with(&DensityModel::homogeneous(), 4, 200).unwrap();
        assert_eq!(series.energies, vec![1.0, 0.0, 0.0, 0.0]);
        for e in &series.energies_quadrature[1..] {
            assert!(e.abs() < 1e-15);
        }
        let psi1 = series.wavefunction(1).unwrap();
        for x in [-0.5, -0.2, 0.0, 0.4] {
            assert!(psi1(x).abs() < 1e-15);
        }
    }

    #[test]
    fn second_order_energy_for_linear_density() {
        for kappa in [0.3, 1.0, 1.7] {
            let series = e0_series_with(&DensityModel::linear(kappa).unwrap(), 3, 2000).unwrap();
            let target = -kappa * kappa / 120.0;
            assert!((series.energy(1) - 1.0).abs() < 1e-15);
            assert!((series.energy(2) - target).abs() < 1e-12);
            assert!((series.energies_quadrature[1] - target).abs() < 1e-14);
            assert!((series.energies[2] - series.energies_quadrature[2]).abs() < 1e-9);
        }
    }

    #[test]
    fn recursion_matches_closed_forms() {
        let d = DensityModel::linear(0.5).unwrap();
        let closed = ZeroModeTraces::quadrature(&d).energies();
        let rec = ZeroModeRecursion::new(&d, 3);
        for k in 0..4 {
            assert!(
                (rec.energies[k] - closed[k]).abs() < 1e-12,
                "E{}: {} vs {}",
                k + 1,
                rec.energies[k],
                closed[k]
            );
        }
        let d = DensityModel::new(1.0, vec![0.2, -0.4, 0.6]).unwrap();
        let closed = ZeroModeTraces::spectral(&d, 2000).energies();
        let rec = ZeroModeRecursion::new(&d, 3);
        for k in 0..4 {
            assert!((rec.energies[k] - closed[k]).abs() < 1e-9, "E{}", k + 1);
        }
    }

    #[test]
    fn corrections_are_orthogonal_to_ground_state() {
        let d = DensityModel::new(1.0, vec![0.1, 0.9, -0.5]).unwrap();
        let rule = GaussLegendre::new(30);
        for k in 1..=2 {
            let psi = psi0_correction(&d, k).unwrap();
            let overlap = rule.integrate(|x| psi(x), -0.5, 0.5);
            assert!(overlap.abs() < 1e-10, "k={k}: {overlap}");
        }
        assert!(psi0_correction(&d, 3).is_err());
    }

    #[test]
    fn first_correction_matches_spectral_expansion() {
        let kappa = 0.8;
        let d = DensityModel::linear(kappa).unwrap();
        let psi1 = psi0_correction(&d, 1).unwrap();
        let x_poly = crate::polynomial::Polynomial::new(vec![0.0, 1.0]);
        for x in [-0.5, -0.31, 0.0, 0.17, 0.5] {
            let spectral = kappa
                * compensated_sum((1..4000).step_by(2).map(|n| {
                    mode_function(n, x) * crate::neumann_basis::poly_element(&x_poly, 0, n)
                        / eigenvalue(n)
                }));
            assert!((psi1(x) - spectral).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn second_correction_satisfies_its_equation() {
        // projected on ψₙ, n ≥ 1: εₙ⟨n|Ψ₂⟩ + ⟨n|Ψ₁⟩ = E₁⟨n|ΣΨ₁⟩ + E₂⟨n|Σ⟩
        let d = DensityModel::linear(0.6).unwrap();
        let rec = ZeroModeRecursion::new(&d, 2);
        let (psi1, psi2) = (&rec.wavefunctions[1], &rec.wavefunctions[2]);
        let (e1, e2) = (rec.energies[0], rec.energies[1]);
        let rule = GaussLegendre::new(80);
        for n in 1..=12 {
            let proj =
                |f: &dyn Fn(f64) -> f64| rule.integrate(|x| mode_function(n, x) * f(x), -0.5, 0.5);
            let lhs = eigenvalue(n) * proj(&|x| psi2(x)) + proj(&|x| psi1(x));
            let rhs = e1 * proj(&|x| d.density(x) * psi1(x)) + e2 * proj(&|x| d.density(x));
            assert!((lhs - rhs).abs() < 1e-8, "n={n}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn second_order_energy_is_never_positive() {
        for coeffs in [
            vec![0.0, 1.2],
            vec![0.3, -0.2, 1.1],
            vec![-0.1, 0.0, 0.0, 2.0],
            vec![0.4],
        ] {
            let d = DensityModel::new(1.0, coeffs).unwrap();
            // a constant density gives exactly zero up to roundoff
            assert!(ZeroModeTraces::quadrature(&d).energies()[1] <= 1e-15);
        }
    }

    #[test]
    fn counterterm_homogeneous_and_linear() {
        let c = e0_inverse_power(1.5, 1e-3, &DensityModel::homogeneous(), 100).unwrap();
        assert!((c.value() - 1e-3f64.powf(-1.5)).abs() < 1e-6);

        let kappa = 0.4;
        let c = e0_inverse_power(1.5, 1e-4, &DensityModel::linear(kappa).unwrap(), 4000).unwrap();
        assert_eq!(c.pole, [1.0, 0.0, 0.0]);
        let odd6: f64 =
            compensated_sum((1..4000).step_by(2).map(|n| 8.0 / (n as f64 * PI).powi(6)));
        assert!((c.sub_pole - 1.5 * kappa * kappa * odd6).abs() < 1e-15);
        assert!(e0_inverse_power(1.0, 1e-3, &DensityModel::homogeneous(), 10).is_err());
        assert!(e0_inverse_power(1.2, 0.0, &DensityModel::homogeneous(), 10).is_err());
    }

    #[test]
    fn counterterm_matches_direct_power_of_series() {
        // (E₁γ + E₂γ² + E₃γ³)^{-s} against the expansion; the gap is
        // O(κ⁴γ^{2-s}) + O(γ^{3-s}) relative to γ^{-s}.
        let kappa = 0.02;
        let d = DensityModel::linear(kappa).unwrap();
        let e = ZeroModeTraces::spectral(&d, 2000).energies();
        for s in [1.25, 1.5] {
            let mut prev = f64::INFINITY;
            for gamma in [1e-3, 1e-4, 1e-5] {
                let direct = (e[0] * gamma + e[1] * gamma * gamma + e[2] * gamma.powi(3)).powf(-s);
                let expansion = e0_inverse_power(s, gamma, &d, 2000).unwrap().value();
                let rel = (direct - expansion).abs() / direct;
                assert!(rel < 1e-9, "s={s} γ={gamma}: {rel}");
                assert!(rel < prev);
                prev = rel;
            }
        }
    }

    #[test]
    fn counterterm_continuity_near_order_one() {
        let d = DensityModel::linear(0.9).unwrap();
        let gamma = 1e-3;
        let c = e0_inverse_power(1.0 + 1e-6, gamma, &d, 1000).unwrap();
        // s → 1: s γ^{1-s} Σ' → Σ', off by O((s−1) ln γ)
        let limit: f64 = compensated_sum((1..=1000).map(|n| {
            let v = crate::neumann_basis::sigma_element(0, n, &d);
            v * v / eigenvalue(n)
        }));
        let rel = (c.sub_pole * gamma.powf(1.0 - c.s) - limit).abs() / limit;
        assert!(rel < 1e-5, "{rel}");
    }
}
