//! Gauss–Legendre quadrature for integrals against Beta-shaped weights.
//!
//! Integrals of the form `∫₀¹ x^{a-1} (1-x)^{b-1} g(x) dx` are split at
//! `x = 1/2`. Each half is mapped with `x = t^m / 2` (resp. `1-x = s^m / 2`)
//! where `m ≥ 2/a`, which turns the endpoint singularity `x^{a-1}` into the
//! regular factor `t^{ma-1}`. Everything is carried in log space so tiny
//! `x` never underflows before it is logged.

use std::f64::consts::{LN_2, PI};

/// Default number of nodes per half-interval.
pub const NODES: usize = 1024;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `(0, 1)`.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let nf = n as f64;
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.push(((1.0 - z) / 2.0, w / 2.0));
    }
    rule
}

/// A precomputed rule for Beta-weighted integrals.
pub struct BetaQuadrature {
    rule: Vec<(f64, f64)>,
}

impl Default for BetaQuadrature {
    fn default() -> Self {
        Self::new(NODES)
    }
}

impl BetaQuadrature {
    pub fn new(nodes: usize) -> Self {
        Self { rule: gauss_legendre_unit(nodes) }
    }

    /// `∫₀¹ x^{a-1}(1-x)^{b-1} g(ln x, ln(1-x)) dx`.
    pub fn integrate<G: Fn(f64, f64) -> f64>(&self, a: f64, b: f64, g: G) -> f64 {
        let half = |p: f64, q: f64, flip: bool| -> f64 {
            // Singular exponent p at the near endpoint, q at the far one.
            let m = (2.0 / p).ceil().max(1.0);
            let mut acc = 0.0;
            for &(t, w) in &self.rule {
                let ln_t = t.ln();
                let ln_near = -LN_2 + m * ln_t;
                let ln_far = (-ln_near.exp()).ln_1p();
                let ln_jac = (0.5 * m).ln() + (m - 1.0) * ln_t;
                let ln_weight = (p - 1.0) * ln_near + (q - 1.0) * ln_far + ln_jac;
                let (ln_x, ln_1mx) = if flip { (ln_far, ln_near) } else { (ln_near, ln_far) };
                acc += w * ln_weight.exp() * g(ln_x, ln_1mx);
            }
            acc
        };
        half(a, b, false) + half(b, a, true)
    }

    /// `ln ∫₀¹ x^{a-1}(1-x)^{b-1} dx`, i.e. ln B(a, b) by quadrature.
    pub fn ln_normalizer(&self, a: f64, b: f64) -> f64 {
        self.integrate(a, b, |_, _| 1.0).ln()
    }

    /// `-∫ p ln p` for `p = Beta(a, b)`.
    pub fn entropy(&self, a: f64, b: f64) -> f64 {
        let ln_z = self.ln_normalizer(a, b);
        let z = ln_z.exp();
        -self.integrate(a, b, |lx, l1| ((a - 1.0) * lx + (b - 1.0) * l1 - ln_z) / z)
    }

    /// `∫ p ln(p/q)` for `p = Beta(ap, bp)`, `q = Beta(aq, bq)`.
    pub fn kl(&self, ap: f64, bp: f64, aq: f64, bq: f64) -> f64 {
        let ln_zp = self.ln_normalizer(ap, bp);
        let ln_zq = self.ln_normalizer(aq, bq);
        let zp = ln_zp.exp();
        self.integrate(ap, bp, |lx, l1| {
            let ln_p = (ap - 1.0) * lx + (bp - 1.0) * l1 - ln_zp;
            let ln_q = (aq - 1.0) * lx + (bq - 1.0) * l1 - ln_zq;
            (ln_p - ln_q) / zp
        })
    }
}
