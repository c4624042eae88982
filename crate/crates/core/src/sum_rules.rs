//! Sum rules `Z(s) = Σ Eₙ^{-s}` of the heterogeneous string.
//!
//! Four routes are provided:
//!
//! * [`z_tilde`]: the renormalized second-order formula with the zero-mode
//!   coupling written out explicitly;
//! * [`z_orders_at_gamma`] and [`renormalization_check`]: the finite-shift
//!   expansion and the `γ → 0` subtraction of `E₀(γ)^{-s}`;
//! * [`z_trace_assembly`]: `Z(1 + 1/N) = Tr(Q q)` from the fractional Green's
//!   function coefficients;
//! * [`z1_exact`]: the closed trace formula for `s = 1`.

use serde::{Deserialize, Serialize};

use crate::analysis_fit::polyfit_basis;
use crate::error::{Error, Result};
use crate::fractional_green::{PerturbationData, SquareRepresentation};
use crate::neumann_basis::{
    eigenvalue, green_regularized_unchecked, DensityModel, MatrixElementTable, HALF_LENGTH,
};
use crate::quadrature::{integrate_split, GaussLegendre};
use crate::special::{hurwitz_zeta, zeta};
use crate::summation::{compensated_sum, NeumaierSum};
use crate::zero_mode_pt::{e0_inverse_power, CountertermExpansion};

/// Below this relative gap the difference quotient switches to its series.
const NEAR_DEGENERATE: f64 = 1e-8;

/// How a sum-rule value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Perturbative,
    TraceAssembly,
    ExactOrder1,
    NumericalSpectrum,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::Perturbative => "perturbative",
            Route::TraceAssembly => "trace_assembly",
            Route::ExactOrder1 => "exact_order1",
            Route::NumericalSpectrum => "numerical_spectrum",
        }
    }
}

impl std::fmt::Display for Route {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Route {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perturbative" => Ok(Route::Perturbative),
            "trace_assembly" | "trace" => Ok(Route::TraceAssembly),
            "exact_order1" | "exact" => Ok(Route::ExactOrder1),
            "numerical_spectrum" | "numerical" => Ok(Route::NumericalSpectrum),
            other => Err(Error::domain("route", format!("unknown route `{other}`"))),
        }
    }
}

/// A sum-rule value split by order in the density.
///
/// For the numerical route `value_by_order` is `[total, 0, 0]`; for the
/// exact `s = 1` rule the last slot collects every order from `λ²` on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumRuleResult {
    pub s: f64,
    pub value_by_order: [f64; 3],
    pub total: f64,
    /// Interior modes (perturbative routes) or basis size (numerical).
    pub truncation: usize,
    /// Number of explicitly summed levels for the numerical route.
    pub n_max: Option<usize>,
    /// Bound on the discarded remainder, `≥ 0`.
    pub tail_estimate: f64,
    pub route: Route,
}

/// Admissible exponents for the perturbative formulas.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ExponentDomain {
    /// `1 < s ≤ 3/2`, the range in which the renormalized expansion holds.
    #[default]
    Strict,
    /// Any `s ≥ 1`, for exploration.
    Extended,
}

impl ExponentDomain {
    fn check(self, s: f64) -> Result<()> {
        let ok = match self {
            ExponentDomain::Strict => s > 1.0 && s <= 1.5,
            ExponentDomain::Extended => s >= 1.0 && s.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(
                "s",
                match self {
                    ExponentDomain::Strict => {
                        format!("expected 1 < s <= 3/2, got {s} (pass the override to explore)")
                    }
                    ExponentDomain::Extended => format!("expected finite s >= 1, got {s}"),
                },
            ))
        }
    }
}

/// `(a^{1−s} − b^{1−s})/(a − b)`, continuous through `a = b`.
pub fn difference_quotient(s: f64, a: f64, b: f64) -> f64 {
    let t = (a - b) / b;
    if t.abs() < NEAR_DEGENERATE {
        quotient_series(1.0 - s, b, t)
    } else {
        quotient_direct(1.0 - s, b, t)
    }
}

/// `b^{p−1} ((1+t)^p − 1)/t` without cancellation.
fn quotient_direct(p: f64, b: f64, t: f64) -> f64 {
    b.powf(p - 1.0) * (p * t.ln_1p()).exp_m1() / t
}

fn quotient_series(p: f64, b: f64, t: f64) -> f64 {
    p * b.powf(p - 1.0) * (1.0 + 0.5 * (p - 1.0) * t * (1.0 + (p - 2.0) * t / 3.0))
}

/// The pieces of `z_tilde` before tail completion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZTildeParts {
    /// `Σ'ₙ εₙ^{-s}` over `n ≤ K`.
    pub homogeneous: f64,
    /// `s Σ'ₙ ⟨n|σ|n⟩ εₙ^{-s}`.
    pub first_order: f64,
    /// `s(s−1)/2 Σ'ₙ ⟨n|σ|n⟩² εₙ^{-s}`.
    pub diagonal_second: f64,
    /// `−(s/2) Σ'_{n≠m} (εₙ^{1−s}−εₘ^{1−s})/(εₙ−εₘ) ⟨n|σ|m⟩²`.
    pub off_diagonal: f64,
    /// `−s Σ'ₙ ⟨0|σ|n⟩² εₙ^{-s}`.
    pub zero_mode: f64,
}

impl ZTildeParts {
    pub fn total(&self) -> f64 {
        compensated_sum([
            self.homogeneous,
            self.first_order,
            self.diagonal_second,
            self.off_diagonal,
            self.zero_mode,
        ])
    }

    /// Grouped by density order.
    pub fn orders(&self) -> [f64; 3] {
        [
            self.homogeneous,
            self.first_order,
            compensated_sum([self.diagonal_second, self.off_diagonal, self.zero_mode]),
        ]
    }
}

/// Truncated `Z̃(s)` summed over interior modes `1..=K`, without tails.
pub fn z_tilde_parts(s: f64, density: &DensityModel, interior_modes: usize) -> ZTildeParts {
    let size = interior_modes + 1;
    let table = MatrixElementTable::for_density(density, size);
    let eps: Vec<f64> = (0..size).map(eigenvalue).collect();
    let eps_pow: Vec<f64> = eps.iter().map(|e| e.powf(-s)).collect();

    let homogeneous = compensated_sum(eps_pow[1..].iter().rev().copied());
    let diag: Vec<f64> = (0..size).map(|n| table.get(n, n)).collect();
    let first_order = s * compensated_sum((1..size).rev().map(|n| diag[n] * eps_pow[n]));
    let diagonal_second = 0.5
        * s
        * (s - 1.0)
        * compensated_sum((1..size).rev().map(|n| diag[n] * diag[n] * eps_pow[n]));

    // each unordered pair counted twice
    let strips: Vec<f64> = (1..size)
        .map(|n| {
            let row = table.row(n);
            let mut acc = NeumaierSum::new();
            for m in (n + 1)..size {
                let v = row[m];
                if v != 0.0 {
                    acc += difference_quotient(s, eps[n], eps[m]) * v * v;
                }
            }
            acc.value()
        })
        .collect();
    let off_diagonal = -s * compensated_sum(strips.into_iter().rev());
    let zero_mode = -s
        * compensated_sum((1..size).rev().map(|n| {
            let v = table.get(0, n);
            v * v * eps_pow[n]
        }));
    ZTildeParts {
        homogeneous,
        first_order,
        diagonal_second,
        off_diagonal,
        zero_mode,
    }
}

/// Tail completion and remainder bound for modes beyond `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCompletion {
    /// Added to the density orders 0, 1, 2.
    pub completion: [f64; 3],
    /// Bound on everything not captured by `completion`.
    pub bound: f64,
}

/// Completes the homogeneous and diagonal sums with the Hurwitz zeta and
/// bounds the rest by integral comparison on the matrix-element decay
/// `|⟨n|σ|m⟩| ≤ b (1/(n−m)² + 1/(n+m)²)`, `b = B/π²`.
pub fn z_tilde_tail(
    s: f64,
    density: &DensityModel,
    interior_modes: usize,
) -> Result<TailCompletion> {
    let a = interior_modes as f64 + 1.0;
    let pi2s = std::f64::consts::PI.powf(-2.0 * s);
    let h = hurwitz_zeta(2.0 * s, a)?;
    let h2 = hurwitz_zeta(2.0 * s + 2.0, a)?;
    let h4 = hurwitz_zeta(4.0, a)?;
    let h_zm = hurwitz_zeta(4.0 + 2.0 * s, a)?;
    let b = density.off_diagonal_decay_constant() / (std::f64::consts::PI * std::f64::consts::PI);
    // ⟨n|σ|n⟩ → ∫σ with a remainder ≤ b/(4n²)
    let mean = crate::neumann_basis::poly_element(&density.perturbation(), 0, 0);

    let base = pi2s * h.value;
    let completion = [
        base,
        s * mean * base,
        0.5 * s * (s - 1.0) * mean * mean * base,
    ];

    let diag_rem =
        0.25 * s * b * (1.0 + (s - 1.0).abs() * (mean.abs() + 0.25 * b)) * pi2s * h2.value;
    let zero_rem = s * 2.0 * b * b * pi2s * h_zm.value;
    let z2s = zeta(2.0 * s).unwrap_or(f64::INFINITY);
    let zeta4 = std::f64::consts::PI.powi(4) / 90.0;
    let pair_rem = s
        * (s - 1.0).abs()
        * pi2s
        * b
        * b
        * 4.0
        * (16.0 * z2s * h4.value + 4f64.powf(s) * zeta4 * h.value);
    let hurwitz_err =
        pi2s * h.error_bound * (1.0 + s * mean.abs() + s * (s - 1.0).abs() * mean * mean);
    Ok(TailCompletion {
        completion,
        bound: diag_rem + zero_rem + pair_rem + hurwitz_err,
    })
}

/// Renormalized second-order sum rule `Z̃(s)` with interior modes `1..=K`
/// and tail completion.
pub fn z_tilde(s: f64, density: &DensityModel, interior_modes: usize) -> Result<SumRuleResult> {
    z_tilde_with(s, density, interior_modes, ExponentDomain::Strict)
}

pub fn z_tilde_with(
    s: f64,
    density: &DensityModel,
    interior_modes: usize,
    domain: ExponentDomain,
) -> Result<SumRuleResult> {
    domain.check(s)?;
    if interior_modes == 0 {
        return Err(Error::domain("K", "need at least one interior mode"));
    }
    let parts = z_tilde_parts(s, density, interior_modes);
    let tail = z_tilde_tail(s, density, interior_modes)?;
    let raw = parts.orders();
    let value_by_order = [
        raw[0] + tail.completion[0],
        raw[1] + tail.completion[1],
        raw[2] + tail.completion[2],
    ];
    Ok(SumRuleResult {
        s,
        value_by_order,
        total: compensated_sum(value_by_order),
        truncation: interior_modes,
        n_max: None,
        tail_estimate: tail.bound,
        route: Route::Perturbative,
    })
}

/// One density order of `Z(s)` at finite shift, split by power of `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShiftedOrder {
    /// Coefficient of `γ^{-s}`.
    pub pole: f64,
    /// Coefficient of `γ^{1-s}`.
    pub sub_pole: f64,
    /// Everything analytic in `γ`.
    pub regular: f64,
}

impl ShiftedOrder {
    pub fn value(&self, s: f64, gamma: f64) -> f64 {
        self.pole * gamma.powf(-s) + self.sub_pole * gamma.powf(1.0 - s) + self.regular
    }
}

/// `Z⁽⁰⁾, Z⁽¹⁾, Z⁽²⁾` at shift `γ` on modes `0..=K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedOrders {
    pub s: f64,
    pub gamma: f64,
    pub interior_modes: usize,
    pub orders: [ShiftedOrder; 3],
}

impl ShiftedOrders {
    pub fn values(&self) -> [f64; 3] {
        self.orders.map(|o| o.value(self.s, self.gamma))
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.values())
    }
}

/// The finite-shift expansion, with `eₙ = εₙ + γ`:
///
/// ```text
/// Z⁽⁰⁾ = Σₙ eₙ^{-s}
/// Z⁽¹⁾ = s Σₙ ⟨n|σ|n⟩ eₙ^{-s}
/// Z⁽²⁾ = s(s−1)/2 Σₙ ⟨n|σ|n⟩² eₙ^{-s}
///        − (s/2) Σ'_{n≠m} (eₙ^{1−s}−eₘ^{1−s})/(eₙ−eₘ) ⟨n|σ|m⟩²
///        − s Σ'ₙ ⟨0|σ|n⟩² (eₙ^{1−s} − γ^{1−s})/εₙ
/// ```
pub fn z_orders_at_gamma(
    s: f64,
    gamma: f64,
    density: &DensityModel,
    interior_modes: usize,
) -> Result<ShiftedOrders> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::domain(
            "gamma",
            format!("shift must be positive, got {gamma}"),
        ));
    }
    if !(s > 0.5) {
        return Err(Error::domain(
            "s",
            format!("sums diverge for s <= 1/2, got {s}"),
        ));
    }
    let size = interior_modes + 1;
    let table = MatrixElementTable::for_density(density, size);
    let eps: Vec<f64> = (0..size).map(eigenvalue).collect();
    let e: Vec<f64> = eps.iter().map(|v| v + gamma).collect();
    let e_pow: Vec<f64> = e.iter().map(|v| v.powf(-s)).collect();
    let diag: Vec<f64> = (0..size).map(|n| table.get(n, n)).collect();

    let z0 = ShiftedOrder {
        pole: 1.0,
        sub_pole: 0.0,
        regular: compensated_sum(e_pow[1..].iter().rev().copied()),
    };
    let z1 = ShiftedOrder {
        pole: s * diag[0],
        sub_pole: 0.0,
        regular: s * compensated_sum((1..size).rev().map(|n| diag[n] * e_pow[n])),
    };
    let diag2 = 0.5
        * s
        * (s - 1.0)
        * compensated_sum((1..size).rev().map(|n| diag[n] * diag[n] * e_pow[n]));
    let strips: Vec<f64> = (1..size)
        .map(|n| {
            let row = table.row(n);
            let mut acc = NeumaierSum::new();
            for m in (n + 1)..size {
                let v = row[m];
                if v != 0.0 {
                    acc += difference_quotient(s, e[n], e[m]) * v * v;
                }
            }
            acc.value()
        })
        .collect();
    let off = -s * compensated_sum(strips.into_iter().rev());
    let zero_regular = -s
        * compensated_sum((1..size).rev().map(|n| {
            let v = table.get(0, n);
            v * v * e[n].powf(1.0 - s) / eps[n]
        }));
    let zero_sub = s * compensated_sum((1..size).rev().map(|n| {
        let v = table.get(0, n);
        v * v / eps[n]
    }));
    let z2 = ShiftedOrder {
        pole: 0.5 * s * (s - 1.0) * diag[0] * diag[0],
        sub_pole: zero_sub,
        regular: compensated_sum([diag2, off, zero_regular]),
    };
    Ok(ShiftedOrders {
        s,
        gamma,
        interior_modes,
        orders: [z0, z1, z2],
    })
}

/// A divergent coefficient compared between the sum rule and `E₀(γ)^{-s}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TermCancellation {
    pub term: &'static str,
    pub sum_rule: f64,
    pub counterterm: f64,
}

impl TermCancellation {
    pub fn residual(&self) -> f64 {
        (self.sum_rule - self.counterterm).abs()
    }

    pub fn cancels(&self, rel_tol: f64) -> bool {
        self.residual() <= rel_tol * self.sum_rule.abs().max(self.counterterm.abs()).max(1.0)
    }
}

/// Outcome of the `γ → 0` subtraction `Z(s) − E₀(γ)^{-s}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenormalizationReport {
    pub s: f64,
    pub gammas: Vec<f64>,
    /// `Z(γ) − E₀(γ)^{-s}` per shift.
    pub remainders: Vec<f64>,
    pub cancellations: Vec<TermCancellation>,
    /// Richardson-extrapolated `γ → 0` limit.
    pub limit: f64,
    /// `z_tilde` on the same truncation, without tail completion.
    pub z_tilde: f64,
}

impl RenormalizationReport {
    pub fn distance(&self) -> f64 {
        (self.limit - self.z_tilde).abs()
    }

    /// First divergent term that fails to cancel.
    pub fn failing_term(&self, rel_tol: f64) -> Option<&TermCancellation> {
        self.cancellations.iter().find(|c| !c.cancels(rel_tol))
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.failing_term(1e-12).is_none() && self.distance() <= tol
    }
}

fn check_gamma_sequence(gammas: &[f64]) -> Result<()> {
    if gammas.len() < 4 {
        return Err(Error::domain(
            "gamma_sequence",
            "need at least 4 shifts to extrapolate",
        ));
    }
    if gammas.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
        return Err(Error::domain("gamma_sequence", "shifts must be positive"));
    }
    if gammas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::domain(
            "gamma_sequence",
            "shifts must be strictly decreasing",
        ));
    }
    Ok(())
}

/// Least-squares fit of `R(γ) = L + a γ^{2−s} + b γ + c γ²` (the `γ²`
/// term only with at least five points); returns `L`.
fn extrapolate(s: f64, gammas: &[f64], values: &[f64]) -> Result<f64> {
    let mut exps = vec![0.0, 2.0 - s, 1.0];
    if gammas.len() >= 5 {
        exps.push(2.0);
    }
    let coeffs = polyfit_basis(
        gammas,
        values,
        |g, j| if exps[j] == 0.0 { 1.0 } else { g.powf(exps[j]) },
        exps.len(),
    )?;
    Ok(coeffs[0])
}

fn cancellation_table(orders: &ShiftedOrders, ct: &CountertermExpansion) -> Vec<TermCancellation> {
    vec![
        TermCancellation {
            term: "gamma^-s (order 0)",
            sum_rule: orders.orders[0].pole,
            counterterm: ct.pole[0],
        },
        TermCancellation {
            term: "gamma^-s <0|sigma|0> (order 1)",
            sum_rule: orders.orders[1].pole,
            counterterm: ct.pole[1],
        },
        TermCancellation {
            term: "gamma^-s <0|sigma|0>^2 (order 2)",
            sum_rule: orders.orders[2].pole,
            counterterm: ct.pole[2],
        },
        TermCancellation {
            term: "gamma^(1-s) zero-mode coupling (order 2)",
            sum_rule: orders.orders[2].sub_pole,
            counterterm: ct.sub_pole,
        },
    ]
}

/// Subtracts the zero-mode counterterm at each shift, checks that the
/// divergent coefficients cancel, and extrapolates to `γ = 0`.
pub fn renormalization_check(
    s: f64,
    density: &DensityModel,
    interior_modes: usize,
    gammas: &[f64],
) -> Result<RenormalizationReport> {
    check_gamma_sequence(gammas)?;
    let mut remainders = Vec::with_capacity(gammas.len());
    let mut cancellations: Vec<TermCancellation> = Vec::new();
    for &gamma in gammas {
        let orders = z_orders_at_gamma(s, gamma, density, interior_modes)?;
        let ct = e0_inverse_power(s, gamma, density, interior_modes)?;
        let table = cancellation_table(&orders, &ct);
        // divergent pieces are removed coefficient by coefficient
        let regular = compensated_sum(orders.orders.iter().map(|o| o.regular));
        let leftover_pole: f64 = table[..3].iter().map(|c| c.sum_rule - c.counterterm).sum();
        let leftover_sub = table[3].sum_rule - table[3].counterterm;
        remainders.push(
            regular + leftover_pole * gamma.powf(-s) + leftover_sub * gamma.powf(1.0 - s)
                - ct.vanishing_part(),
        );
        for c in table {
            match cancellations.iter_mut().find(|t| t.term == c.term) {
                Some(t) if c.residual() > t.residual() => *t = c,
                Some(_) => {}
                None => cancellations.push(c),
            }
        }
    }
    let limit = extrapolate(s, gammas, &remainders)?;
    Ok(RenormalizationReport {
        s,
        gammas: gammas.to_vec(),
        remainders,
        cancellations,
        limit,
        z_tilde: z_tilde_parts(s, density, interior_modes).total(),
    })
}

/// `Z(1 + 1/N)` at shift `γ` from `Tr(Q q)`, order by order:
/// `Zₖ = Σ_{j=0}^{k} Σ_{n,r} Q⁽ʲ⁾ₙᵣ q⁽ᵏ⁻ʲ⁾ᵣₙ`, on `size` modes.
pub fn z_trace_assembly(
    root: u32,
    gamma: f64,
    density: &DensityModel,
    size: usize,
) -> Result<[f64; 3]> {
    if !(2..=3).contains(&root) {
        return Err(Error::domain(
            "N",
            format!("trace assembly is implemented for N = 2, 3, got {root}"),
        ));
    }
    let data = PerturbationData::new(gamma, density, size, SquareRepresentation::Projected)?;
    trace_orders(&data, root)
}

pub(crate) fn trace_orders(data: &PerturbationData, root: u32) -> Result<[f64; 3]> {
    let q = data.q_matrices(root)?;
    let big_q = [
        data.q_coeffs(0)?.total(),
        data.q_coeffs(1)?.total(),
        data.q_coeffs(2)?.total(),
    ];
    let size = data.size();
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut acc = NeumaierSum::new();
        for j in 0..=k {
            let a = &big_q[j];
            let b = &q[k - j].table;
            for n in 0..size {
                for r in 0..size {
                    acc += a[(n, r)] * b[(r, n)];
                }
            }
        }
        *slot = acc.value();
    }
    Ok(out)
}

/// Trace route extrapolated to `γ = 0` order by order, with the
/// counterterm built on the same `size` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceExtrapolation {
    pub root: u32,
    pub gammas: Vec<f64>,
    /// `Zₖ(γ)` minus the order-`k` counterterm, per shift.
    pub remainders: Vec<[f64; 3]>,
    pub order_limits: [f64; 3],
    /// Change of the limit when the largest shift is dropped.
    pub extrapolation_spread: f64,
    /// `z_tilde` on the same truncation, without tail completion.
    pub z_tilde: f64,
}

impl TraceExtrapolation {
    pub fn limit(&self) -> f64 {
        compensated_sum(self.order_limits)
    }
}

pub fn trace_assembly_limit(
    root: u32,
    density: &DensityModel,
    size: usize,
    gammas: &[f64],
) -> Result<TraceExtrapolation> {
    check_gamma_sequence(gammas)?;
    let s = 1.0 + 1.0 / root as f64;
    let interior = size - 1;
    let mut remainders = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let z = z_trace_assembly(root, gamma, density, size)?;
        let ct = e0_inverse_power(s, gamma, density, interior)?;
        let pole = gamma.powf(-s);
        remainders.push([
            z[0] - ct.pole[0] * pole,
            z[1] - ct.pole[1] * pole,
            z[2] - ct.pole[2] * pole - ct.sub_pole * gamma.powf(1.0 - s) - ct.vanishing_part(),
        ]);
    }
    let mut order_limits = [0.0; 3];
    let mut spread = 0.0;
    for k in 0..3 {
        let values: Vec<f64> = remainders.iter().map(|r| r[k]).collect();
        order_limits[k] = extrapolate(s, gammas, &values)?;
        if gammas.len() > 4 {
            let reduced = extrapolate(s, &gammas[1..], &values[1..])?;
            spread += (reduced - order_limits[k]).abs();
        }
    }
    Ok(TraceExtrapolation {
        root,
        gammas: gammas.to_vec(),
        remainders,
        order_limits,
        extrapolation_spread: spread,
        z_tilde: z_tilde_parts(s, density, interior).total(),
    })
}

/// Trace route as a tail-completed [`SumRuleResult`] for `s = 1 + 1/N`.
pub fn z_trace_limit_result(
    root: u32,
    density: &DensityModel,
    size: usize,
    gammas: &[f64],
) -> Result<SumRuleResult> {
    let t = trace_assembly_limit(root, density, size, gammas)?;
    let s = 1.0 + 1.0 / root as f64;
    let tail = z_tilde_tail(s, density, size - 1)?;
    let value_by_order = [
        t.order_limits[0] + tail.completion[0],
        t.order_limits[1] + tail.completion[1],
        t.order_limits[2] + tail.completion[2],
    ];
    Ok(SumRuleResult {
        s,
        value_by_order,
        total: compensated_sum(value_by_order),
        truncation: size - 1,
        n_max: None,
        tail_estimate: tail.bound + t.extrapolation_spread,
        route: Route::TraceAssembly,
    })
}

/// `Z(1) = ∫Σ(x)G⁽⁰⁾(x,x)dx − ⟨Σ|G⁽⁰⁾|Σ⟩/∫Σ`, exact in the density.
///
/// `G⁽⁰⁾(x,x) = 1/12 + x²`. The double integral is done by Gauss–Legendre
/// split at the kink, exact for polynomial densities of moderate degree;
/// `tail_estimate` is the change against a higher-order rule.
pub fn z1_exact(density: &DensityModel) -> SumRuleResult {
    let evaluate = |nodes: usize| -> [f64; 3] {
        let rule = GaussLegendre::new(nodes);
        let integrate = |f: &dyn Fn(f64) -> f64| rule.integrate(f, -HALF_LENGTH, HALF_LENGTH);
        let homogeneous = integrate(&|x| 1.0 / 12.0 + x * x);
        let first = integrate(&|x| density.sigma_at(x) * density.lambda() * (1.0 / 12.0 + x * x));
        let mass = integrate(&|x| density.density(x));
        let coupling = integrate(&|x| {
            density.density(x)
                * integrate_split(
                    &rule,
                    |y| green_regularized_unchecked(x, y) * density.density(y),
                    -HALF_LENGTH,
                    HALF_LENGTH,
                    x,
                )
        });
        [homogeneous, first, -coupling / mass]
    };
    let coarse = evaluate(24);
    let fine = evaluate(32);
    let diff = compensated_sum(fine) - compensated_sum(coarse);
    SumRuleResult {
        s: 1.0,
        value_by_order: fine,
        total: compensated_sum(fine),
        truncation: 0,
        n_max: None,
        tail_estimate: diff.abs() + 4.0 * f64::EPSILON * compensated_sum(fine.map(f64::abs)),
        route: Route::ExactOrder1,
    }
}
