//! Dense real polynomials in the centered coordinate `x ∈ [-1/2, 1/2]`.

use std::ops::{Add, Mul};

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    /// `coeffs[p]` multiplies `x^p`.
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::new(vec![0.0])
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// True when only odd powers carry nonzero coefficients.
    pub fn is_odd(&self) -> bool {
        self.coeffs.iter().step_by(2).all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(p, &c)| p as f64 * c)
                .collect(),
        )
    }

    /// Lower bound of the polynomial on `[a, b]`, from Bernstein coefficients
    /// with branch-and-bound subdivision. Exact for degree ≤ 1.
    pub fn lower_bound(&self, a: f64, b: f64) -> f64 {
        let mut best_attained = self.eval(a).min(self.eval(b));
        let mut bound = f64::INFINITY;
        let mut stack = vec![(a, b, 0u32)];
        while let Some((lo_x, hi_x, depth)) = stack.pop() {
            let bern = self.bernstein(lo_x, hi_x);
            let lo = bern.iter().copied().fold(f64::INFINITY, f64::min);
            best_attained = best_attained.min(bern[0]).min(*bern.last().unwrap());
            let scale = bern.iter().fold(1.0f64, |m, c| m.max(c.abs()));
            if best_attained - lo <= 1e-14 * scale || depth >= 48 {
                bound = bound.min(lo);
                continue;
            }
            let mid = 0.5 * (lo_x + hi_x);
            stack.push((lo_x, mid, depth + 1));
            stack.push((mid, hi_x, depth + 1));
        }
        bound
    }

    /// Bernstein coefficients on `[a, b]`.
    fn bernstein(&self, a: f64, b: f64) -> Vec<f64> {
        let n = self.degree();
        // p(a + (b - a) t) expanded in t via Horner on shifted polynomials.
        let h = b - a;
        let mut t_coeffs = vec![0.0; n + 1];
        for &c in self.coeffs.iter().rev() {
            // t_coeffs <- t_coeffs * (a + h t) + c
            let mut next = vec![0.0; n + 1];
            for (k, &tc) in t_coeffs.iter().enumerate() {
                next[k] += a * tc;
                if k + 1 <= n {
                    next[k + 1] += h * tc;
                }
            }
            next[0] += c;
            t_coeffs = next;
        }
        (0..=n)
            .map(|i| {
                (0..=i)
                    .map(|k| binomial(i, k) / binomial(n, k) * t_coeffs[k])
                    .sum()
            })
            .collect()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new(
            (0..len)
                .map(|p| self.coeffs.get(p).unwrap_or(&0.0) + rhs.coeffs.get(p).unwrap_or(&0.0))
                .collect(),
        )
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}
