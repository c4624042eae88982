//! Perturbative coefficients of the Green's function of order `1/N`.
//!
//! With `eₙ = εₙ + γ` the shifted (positive definite) spectrum and
//! `Σ = 1 + σ`, the Green's function `G_γ = √Σ G₀ √Σ` has basis coefficients
//! `Q = Σ_k Q⁽ᵏ⁾` and its `N`-th root `G̃` has coefficients `q = Σ_k q⁽ᵏ⁾`
//! with
//!
//! ```text
//! q⁽⁰⁾ₙₘ = (N/2) Δₙₘ δₙₘ
//! q⁽¹⁾ₙₘ = ½ Δₙₘ ⟨n|σ|m⟩
//! q⁽²⁾ₙₘ = −⅛ Δₙₘ ⟨n|σ²|m⟩
//!         + 1/(4ηₙₘ) Σᵣ ⟨n|σ|r⟩⟨r|σ|m⟩ (1/eᵣ − Δₙᵣ Δᵣₘ ξₙᵣₘ)
//! ```
//!
//! The `r`-sum runs over every retained mode, the zero mode included
//! (`e₀ = γ`). The `N`-fold matrix product of `q` reproduces `Q` order by
//! order; [`verify_composition`] measures how well.

use faer::Mat;

use crate::error::{Error, Result};
use crate::neumann_basis::{DensityModel, MatrixElementTable, NeumannBasis};
use crate::summation::NeumaierSum;

/// `Δₙₘ = (1/eₙ + 1/eₘ) / ηₙₘ`.
pub fn kernel_delta(root: u32, gamma: f64, eps_n: f64, eps_m: f64) -> f64 {
    let (a, b) = (eps_n + gamma, eps_m + gamma);
    (1.0 / a + 1.0 / b) / kernel_eta(root, gamma, eps_n, eps_m)
}

/// `ηₙₘ = Σ_{j=0}^{N−1} eₙ^{−(N−1−j)/N} eₘ^{−j/N}`.
pub fn kernel_eta(root: u32, gamma: f64, eps_n: f64, eps_m: f64) -> f64 {
    let pn = RootPowers::of(root, eps_n + gamma);
    let pm = RootPowers::of(root, eps_m + gamma);
    eta_from(&pn, &pm)
}

/// `ξₙᵣₘ = Σ_{j=0}^{N−2} Σ_{l=0}^{N−2−j} eₙ^{−j/N} eₘ^{−(N−2−j−l)/N} eᵣ^{−l/N}`.
pub fn kernel_xi(root: u32, gamma: f64, eps_n: f64, eps_r: f64, eps_m: f64) -> f64 {
    let pn = RootPowers::of(root, eps_n + gamma);
    let pr = RootPowers::of(root, eps_r + gamma);
    let pm = RootPowers::of(root, eps_m + gamma);
    xi_from(&pn, &pr, &pm)
}

/// `e^{-j/N}` for `j = 0..=N`.
#[derive(Debug, Clone)]
struct RootPowers(Vec<f64>);

impl RootPowers {
    fn of(root: u32, shifted: f64) -> Self {
        let n = root as usize;
        let base = shifted.powf(-1.0 / root as f64);
        let mut p = Vec::with_capacity(n + 1);
        p.push(1.0);
        for j in 1..=n {
            // exact endpoint j = N avoids drift in 1/e
            p.push(if j == n {
                1.0 / shifted
            } else {
                shifted.powf(-(j as f64) / root as f64)
            });
        }
        debug_assert!(n == 0 || (p[1] - base).abs() <= 4.0 * f64::EPSILON * base);
        Self(p)
    }

    fn root(&self) -> usize {
        self.0.len() - 1
    }
}

fn eta_from(pn: &RootPowers, pm: &RootPowers) -> f64 {
    let n = pn.root();
    let mut acc = NeumaierSum::new();
    for j in 0..n {
        acc += pn.0[n - 1 - j] * pm.0[j];
    }
    acc.value()
}

fn xi_from(pn: &RootPowers, pr: &RootPowers, pm: &RootPowers) -> f64 {
    let n = pn.root();
    if n < 2 {
        return 0.0;
    }
    let mut acc = NeumaierSum::new();
    for j in 0..=n - 2 {
        for l in 0..=n - 2 - j {
            acc += pn.0[j] * pm.0[n - 2 - j - l] * pr.0[l];
        }
    }
    acc.value()
}

/// How `⟨n|σ²|m⟩` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SquareRepresentation {
    /// Closed-form matrix element of the polynomial `σ²`.
    #[default]
    Exact,
    /// Galerkin square `Σ_{r<K} ⟨n|σ|r⟩⟨r|σ|m⟩` within the truncation; the
    /// choice that keeps finite-basis traces consistent with completeness.
    Projected,
}

/// Positive-definite spectrum `eₙ = εₙ + γ` on a truncated Neumann basis.
#[derive(Debug, Clone)]
pub struct ShiftedSpectrum {
    gamma: f64,
    basis: NeumannBasis,
    shifted: Vec<f64>,
}

impl ShiftedSpectrum {
    pub fn new(basis: NeumannBasis, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::domain(
                "gamma",
                format!("shift must be positive, got {gamma}"),
            ));
        }
        let shifted = basis.eigenvalues().iter().map(|e| e + gamma).collect();
        Ok(Self {
            gamma,
            basis,
            shifted,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn basis(&self) -> &NeumannBasis {
        &self.basis
    }

    pub fn shifted(&self) -> &[f64] {
        &self.shifted
    }

    pub fn size(&self) -> usize {
        self.shifted.len()
    }
}

/// One perturbative order of the coefficients of `G̃^{[1/N]}`.
#[derive(Debug, Clone)]
pub struct FractionalGreenCoeffs {
    pub root: u32,
    pub order: usize,
    pub table: Mat<f64>,
}

impl FractionalGreenCoeffs {
    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.table[(n, m)]
    }

    pub fn size(&self) -> usize {
        self.table.nrows()
    }
}

/// One perturbative order of the coefficients of `G_γ`, with the `r = 0`
/// (zero-mode, `∝ 1/γ`) contribution kept apart from the primed sum.
#[derive(Debug, Clone)]
pub struct QCoeffs {
    pub order: usize,
    pub zero_mode: Mat<f64>,
    pub primed: Mat<f64>,
}

impl QCoeffs {
    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.zero_mode[(n, m)] + self.primed[(n, m)]
    }

    pub fn total(&self) -> Mat<f64> {
        &self.zero_mode + &self.primed
    }

    pub fn size(&self) -> usize {
        self.primed.nrows()
    }
}

/// Shared inputs for all coefficient tables at one `(γ, density, K)`.
#[derive(Debug, Clone)]
pub struct PerturbationData {
    spectrum: ShiftedSpectrum,
    sigma: MatrixElementTable,
    sigma_sq: MatrixElementTable,
}

impl PerturbationData {
    pub fn new(
        gamma: f64,
        density: &DensityModel,
        size: usize,
        square: SquareRepresentation,
    ) -> Result<Self> {
        if size < 2 {
            return Err(Error::domain(
                "size",
                format!("need at least 2 modes, got {size}"),
            ));
        }
        let spectrum = ShiftedSpectrum::new(NeumannBasis::new(size)?, gamma)?;
        let sigma = MatrixElementTable::for_density(density, size);
        let sigma_sq = match square {
            SquareRepresentation::Exact => {
                let p = density.perturbation();
                MatrixElementTable::new(&(&p * &p), size)
            }
            SquareRepresentation::Projected => sigma.projected_square(),
        };
        Ok(Self {
            spectrum,
            sigma,
            sigma_sq,
        })
    }

    pub fn spectrum(&self) -> &ShiftedSpectrum {
        &self.spectrum
    }

    pub fn sigma(&self) -> &MatrixElementTable {
        &self.sigma
    }

    pub fn sigma_squared(&self) -> &MatrixElementTable {
        &self.sigma_sq
    }

    pub fn size(&self) -> usize {
        self.spectrum.size()
    }

    /// `q⁽⁰⁾, q⁽¹⁾, q⁽²⁾` for root order `N`.
    pub fn q_matrices(&self, root: u32) -> Result<[FractionalGreenCoeffs; 3]> {
        if root == 0 {
            return Err(Error::domain("N", "root order must be at least 1"));
        }
        let size = self.size();
        let e = self.spectrum.shifted();
        let powers: Vec<RootPowers> = e.iter().map(|&v| RootPowers::of(root, v)).collect();
        let eta = Mat::from_fn(size, size, |n, m| eta_from(&powers[n], &powers[m]));
        let delta = Mat::from_fn(size, size, |n, m| (1.0 / e[n] + 1.0 / e[m]) / eta[(n, m)]);
        let half_n = 0.5 * root as f64;

        let q0 = Mat::from_fn(size, size, |n, m| {
            if n == m {
                half_n * delta[(n, n)]
            } else {
                0.0
            }
        });
        let q1 = Mat::from_fn(size, size, |n, m| {
            0.5 * delta[(n, m)] * self.sigma.get(n, m)
        });

        let mut q2 = Mat::<f64>::zeros(size, size);
        for n in 0..size {
            let row_n = self.sigma.row(n);
            for m in n..size {
                let row_m = self.sigma.row(m);
                let mut inner = NeumaierSum::new();
                for r in 0..size {
                    let weight = row_n[r] * row_m[r];
                    if weight == 0.0 {
                        continue;
                    }
                    let xi = xi_from(&powers[n], &powers[r], &powers[m]);
                    inner += weight * (1.0 / e[r] - delta[(n, r)] * delta[(r, m)] * xi);
                }
                let v = -0.125 * delta[(n, m)] * self.sigma_sq.get(n, m)
                    + inner.value() / (4.0 * eta[(n, m)]);
                q2[(n, m)] = v;
                q2[(m, n)] = v;
            }
        }

        let wrap = |order, table| FractionalGreenCoeffs { root, order, table };
        Ok([wrap(0, q0), wrap(1, q1), wrap(2, q2)])
    }

    /// `Q⁽ᵏ⁾ = Σ_j Σ_r A⁽ʲ⁾ₙᵣ A⁽ᵏ⁻ʲ⁾ᵣₘ / eᵣ` with `A` the binomial series of
    /// `√Σ`: `A⁽⁰⁾ = 1`, `A⁽¹⁾ = σ/2`, `A⁽²⁾ = −σ²/8`.
    pub fn q_coeffs(&self, order: usize) -> Result<QCoeffs> {
        if order > 2 {
            return Err(Error::domain(
                "order",
                format!("only orders 0..=2 are available, got {order}"),
            ));
        }
        let size = self.size();
        let e = self.spectrum.shifted();
        let sqrt_factor = |j: usize, n: usize, r: usize| -> f64 {
            match j {
                0 => {
                    if n == r {
                        1.0
                    } else {
                        0.0
                    }
                }
                1 => 0.5 * self.sigma.get(n, r),
                _ => -0.125 * self.sigma_sq.get(n, r),
            }
        };
        let mut zero_mode = Mat::<f64>::zeros(size, size);
        let mut primed = Mat::<f64>::zeros(size, size);
        for n in 0..size {
            for m in n..size {
                let mut z = NeumaierSum::new();
                let mut p = NeumaierSum::new();
                for j in 0..=order {
                    let k = order - j;
                    // identity factors collapse the r-sum
                    match (j, k) {
                        (0, _) => {
                            let v = sqrt_factor(k, n, m) / e[n];
                            if n == 0 {
                                z += v
                            } else {
                                p += v
                            }
                        }
                        (_, 0) => {
                            let v = sqrt_factor(j, n, m) / e[m];
                            if m == 0 {
                                z += v
                            } else {
                                p += v
                            }
                        }
                        _ => {
                            z += sqrt_factor(j, n, 0) * sqrt_factor(k, 0, m) / e[0];
                            for r in 1..size {
                                p += sqrt_factor(j, n, r) * sqrt_factor(k, r, m) / e[r];
                            }
                        }
                    }
                }
                zero_mode[(n, m)] = z.value();
                zero_mode[(m, n)] = z.value();
                primed[(n, m)] = p.value();
                primed[(m, n)] = p.value();
            }
        }
        Ok(QCoeffs {
            order,
            zero_mode,
            primed,
        })
    }
}

/// Convenience wrapper: `q⁽⁰⁾, q⁽¹⁾, q⁽²⁾` for `(N, γ, density, K)`.
pub fn q_matrices(
    root: u32,
    gamma: f64,
    density: &DensityModel,
    size: usize,
    square: SquareRepresentation,
) -> Result<[FractionalGreenCoeffs; 3]> {
    PerturbationData::new(gamma, density, size, square)?.q_matrices(root)
}

/// Convenience wrapper: `Q⁽ᵏ⁾` for `(k, γ, density, K)`.
pub fn q_coeffs(
    order: usize,
    gamma: f64,
    density: &DensityModel,
    size: usize,
    square: SquareRepresentation,
) -> Result<QCoeffs> {
    PerturbationData::new(gamma, density, size, square)?.q_coeffs(order)
}

/// All ordered ways to write `total` as `parts` summands in `0..=max_part`.
pub fn compositions(total: usize, parts: usize, max_part: usize) -> Vec<Vec<usize>> {
    fn rec(
        total: usize,
        parts: usize,
        max_part: usize,
        prefix: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if parts == 0 {
            if total == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for first in 0..=total.min(max_part) {
            prefix.push(first);
            rec(total - first, parts - 1, max_part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, max_part, &mut Vec::new(), &mut out);
    out
}

/// Order-`k` part of the `N`-fold product `q·q·…·q`.
pub fn composed_order(q: &[FractionalGreenCoeffs; 3], order: usize) -> Mat<f64> {
    let root = q[0].root as usize;
    let size = q[0].size();
    let mut total = Mat::<f64>::zeros(size, size);
    for parts in compositions(order, root, 2) {
        let mut product = q[parts[0]].table.clone();
        for &p in &parts[1..] {
            product = &product * &q[p].table;
        }
        total += &product;
    }
    total
}

/// Max-norm residual of the order-`k` composition identity
/// `Σ_{l₁+…+l_N=k} q⁽ˡ¹⁾⋯q⁽ˡᴺ⁾ = Q⁽ᵏ⁾` on the `K × K` truncation.
pub fn verify_composition(
    root: u32,
    order: usize,
    gamma: f64,
    density: &DensityModel,
    size: usize,
    square: SquareRepresentation,
) -> Result<f64> {
    let data = PerturbationData::new(gamma, density, size, square)?;
    composition_residual(&data, root, order)
}

pub fn composition_residual(data: &PerturbationData, root: u32, order: usize) -> Result<f64> {
    let q = data.q_matrices(root)?;
    let target = data.q_coeffs(order)?.total();
    let lhs = composed_order(&q, order);
    let size = data.size();
    let mut worst = 0.0f64;
    for n in 0..size {
        for m in 0..size {
            worst = worst.max((lhs[(n, m)] - target[(n, m)]).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neumann_basis::eigenvalue;
    use std::f64::consts::PI;

    #[test]
    fn delta_reductions() {
        let (g, en, em) = (0.3, 2.0, 5.0);
        assert!((kernel_delta(1, g, en, em) - (1.0 / 2.3 + 1.0 / 5.3)).abs() < 1e-15);
        let e = 7.0;
        assert!((kernel_delta(2, 0.5, e - 0.5, e - 0.5) - e.powf(-0.5)).abs() < 1e-15);
        // N = 3, e_n = 1, e_m = 8: (9/8)/(1 + 1/2 + 1/4) = 9/14
        assert!((kernel_delta(3, 0.0, 1.0, 8.0) - 9.0 / 14.0).abs() < 1e-15);
    }

    #[test]
    fn eta_and_xi_reductions() {
        assert_eq!(kernel_eta(1, 0.1, 3.0, 4.0), 1.0);
        assert_eq!(kernel_xi(2, 0.1, 3.0, 4.0, 9.0), 1.0);
        assert_eq!(kernel_xi(1, 0.1, 3.0, 4.0, 9.0), 0.0);
        assert!((kernel_eta(2, 0.0, 4.0, 9.0) - 5.0 / 6.0).abs() < 1e-15);
        // N = 3, (eₙ, eᵣ, eₘ) = (8, 27, 64): terms (j,l) = (0,0), (0,1), (1,0)
        let xi = kernel_xi(3, 0.0, 8.0, 27.0, 64.0);
        assert!((xi - (0.25 + 1.0 / 3.0 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn q0_is_diagonal_root() {
        let d = DensityModel::linear(0.3).unwrap();
        let [q0, q1, _] = q_matrices(2, 1e-3, &d, 6, SquareRepresentation::Exact).unwrap();
        let e1 = PI * PI + 1e-3;
        assert!((q0.get(1, 1) - e1.powf(-0.5)).abs() < 1e-15);
        assert_eq!(q0.get(1, 2), 0.0);
        assert_eq!(q1.get(0, 0), 0.0);
    }

    #[test]
    fn n1_reproduces_q_coefficients() {
        let d = DensityModel::new(1.0, vec![0.05, 0.4, -0.3]).unwrap();
        let data = PerturbationData::new(1e-2, &d, 12, SquareRepresentation::Exact).unwrap();
        let q = data.q_matrices(1).unwrap();
        for k in 0..3 {
            let target = data.q_coeffs(k).unwrap();
            for n in 0..12 {
                for m in 0..12 {
                    let diff = (q[k].get(n, m) - target.get(n, m)).abs();
                    assert!(diff < 1e-12, "k={k} ({n},{m}) diff={diff}");
                }
            }
        }
        // q1 for N = 1 is σ(1/eₙ + 1/eₘ)/2
        let e = data.spectrum().shifted();
        let expect = 0.5 * data.sigma().get(2, 3) * (1.0 / e[2] + 1.0 / e[3]);
        assert!((q[1].get(2, 3) - expect).abs() < 1e-16);
    }

    #[test]
    fn q_coefficient_zero_mode_scaling() {
        let d = DensityModel::linear(0.4).unwrap();
        let q0 = q_coeffs(0, 1e-3, &d, 5, SquareRepresentation::Exact).unwrap();
        assert!((q0.zero_mode[(0, 0)] - 1e3).abs() < 1e-10);
        assert!((q0.primed[(2, 2)] - 1.0 / (eigenvalue(2) + 1e-3)).abs() < 1e-17);
        for k in 0..3 {
            let scaled: Vec<f64> = [1e-2, 1e-3, 1e-4]
                .iter()
                .map(|&g| {
                    g * q_coeffs(k, g, &d, 8, SquareRepresentation::Exact)
                        .unwrap()
                        .zero_mode[(1, 3)]
                })
                .collect();
            for v in &scaled[1..] {
                assert!(
                    (v - scaled[0]).abs() <= 1e-12 * scaled[0].abs().max(1e-300) + 1e-300,
                    "k={k}"
                );
            }
        }
    }

    #[test]
    fn q1_matches_finite_difference_of_quadrature() {
        use crate::neumann_basis::mode_function;
        use crate::quadrature::GaussLegendre;
        let size = 10;
        let gamma = 1e-2;
        let sigma = |x: f64| 0.8 * x - 0.3 * x * x;
        let rule = GaussLegendre::new(200);
        let sqrt_elements = |lambda: f64| -> Vec<f64> {
            let mut out = vec![0.0; size * size];
            for n in 0..size {
                for r in 0..size {
                    out[n * size + r] = rule.integrate(
                        |x| {
                            mode_function(n, x)
                                * (1.0 + lambda * sigma(x)).sqrt()
                                * mode_function(r, x)
                        },
                        -0.5,
                        0.5,
                    );
                }
            }
            out
        };
        let q_full = |lambda: f64| -> Vec<f64> {
            let a = sqrt_elements(lambda);
            let mut out = vec![0.0; size * size];
            for n in 0..size {
                for m in 0..size {
                    out[n * size + m] = (0..size)
                        .map(|r| a[n * size + r] * a[r * size + m] / (eigenvalue(r) + gamma))
                        .sum();
                }
            }
            out
        };
        let h = 1e-3;
        let (plus, minus, mid) = (q_full(h), q_full(-h), q_full(0.0));
        let d = DensityModel::new(1.0, vec![0.0, 0.8, -0.3]).unwrap();
        let data = PerturbationData::new(gamma, &d, size, SquareRepresentation::Exact).unwrap();
        let q1 = data.q_coeffs(1).unwrap();
        let q2 = data.q_coeffs(2).unwrap();
        for n in 0..size {
            for m in 0..size {
                let fd1 = (plus[n * size + m] - minus[n * size + m]) / (2.0 * h);
                let fd2 = (plus[n * size + m] - 2.0 * mid[n * size + m] + minus[n * size + m])
                    / (2.0 * h * h);
                assert!(
                    (fd1 - q1.get(n, m)).abs() < 1e-6 * (1.0 + fd1.abs()),
                    "Q1 ({n},{m})"
                );
                assert!(
                    (fd2 - q2.get(n, m)).abs() < 1e-3 * (1.0 + fd2.abs()),
                    "Q2 ({n},{m}) {fd2} {}",
                    q2.get(n, m)
                );
            }
        }
    }

    #[test]
    fn compositions_enumerate_splits() {
        assert_eq!(compositions(0, 3, 2), vec![vec![0, 0, 0]]);
        assert_eq!(compositions(1, 2, 2), vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(compositions(2, 2, 2).len(), 3);
        assert_eq!(compositions(2, 3, 2).len(), 6);
    }

    #[test]
    fn composition_identity_low_orders() {
        let d = DensityModel::linear(0.5).unwrap();
        for k in 0..3 {
            let r = verify_composition(1, k, 1e-2, &d, 20, SquareRepresentation::Exact).unwrap();
            assert!(r < 1e-12, "N=1 k={k}: {r}");
        }
        let r = verify_composition(2, 0, 1e-2, &d, 20, SquareRepresentation::Exact).unwrap();
        assert!(r < 1e-12);
    }

    #[test]
    fn coefficient_tables_are_symmetric() {
        let d = DensityModel::new(1.0, vec![0.1, -0.6, 0.4]).unwrap();
        for root in 1..=4 {
            let q = q_matrices(root, 5e-3, &d, 15, SquareRepresentation::Exact).unwrap();
            for table in &q {
                for n in 0..15 {
                    for m in 0..15 {
                        assert_eq!(table.get(n, m), table.get(m, n));
                    }
                }
            }
        }
    }
}
