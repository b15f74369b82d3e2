//! Reference computations that share no code with `betae`.
//!
//! Everything here is deliberately slow and direct: Gauss–Legendre
//! quadrature for Beta-density integrals, brute-force enumeration of
//! first-order query semantics, central finite differences, and a
//! trapezoidal ROC integral. Tests freeze values computed here or compare
//! the library against these routines.

pub mod fol;
pub mod quadrature;

/// Central finite difference `(f(x+h) - f(x-h)) / 2h`.
pub fn central_difference<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// `|a - b| <= rel * max(|a|, |b|) + abs_floor`.
pub fn close(a: f64, b: f64, rel: f64, abs_floor: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + abs_floor
}

/// Digamma from its series definition
/// `ψ(x) = -γ + Σ_{k≥0} (1/(k+1) - 1/(k+x))`, summed to `terms` with a
/// first-order tail correction.
pub fn digamma_series(x: f64, terms: usize) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut sum = 0.0;
    // Sum smallest terms last so the partial sum keeps its precision.
    for k in (0..terms).rev() {
        let k = k as f64;
        sum += 1.0 / (k + 1.0) - 1.0 / (k + x);
    }
    let n = terms as f64;
    // Σ_{k≥n} (x-1)/((k+1)(k+x)) ≈ (x-1)/(n + x/2)
    let tail = (x - 1.0) / (n + 0.5 * x);
    -EULER_GAMMA + sum + tail
}

/// Area under the empirical ROC curve by the trapezoid rule.
///
/// Positives should score higher. Tied scores form one threshold step, so
/// a tie between a positive and a negative contributes half credit.
pub fn roc_auc_trapezoid(positives: &[f64], negatives: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = positives
        .iter()
        .map(|&s| (s, true))
        .chain(negatives.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let np = positives.len() as f64;
    let nn = negatives.len() as f64;
    let (mut tp, mut fp) = (0.0, 0.0);
    let (mut prev_tpr, mut prev_fpr) = (0.0, 0.0);
    let mut area = 0.0;
    let mut i = 0;
    while i < all.len() {
        let score = all[i].0;
        while i < all.len() && all[i].0 == score {
            if all[i].1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        let (tpr, fpr) = (tp / np, fp / nn);
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    area
}
