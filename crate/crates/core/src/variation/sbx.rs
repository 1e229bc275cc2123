use serde::{Deserialize, Serialize};

use crate::types::{Bounds, DecisionVector, RandomSource};

/// Bounded polynomial mutation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolynomialMutation {
    pub eta: f64,
    /// Per-variable probability; `None` means `1/n`.
    pub probability: Option<f64>,
}

impl Default for PolynomialMutation {
    fn default() -> Self {
        Self { eta: 20.0, probability: None }
    }
}

impl PolynomialMutation {
    pub fn disabled() -> Self {
        Self { eta: 20.0, probability: Some(0.0) }
    }

    fn rate(&self, n: usize) -> f64 {
        self.probability.unwrap_or(1.0 / n as f64)
    }
}

/// Simulated binary crossover followed by polynomial mutation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbxParams {
    pub crossover_prob: f64,
    pub eta_c: f64,
    pub mutation: PolynomialMutation,
}

impl Default for SbxParams {
    fn default() -> Self {
        Self { crossover_prob: 0.9, eta_c: 20.0, mutation: PolynomialMutation::default() }
    }
}

pub fn polynomial_mutation(x: &mut [f64], bounds: &Bounds, params: &PolynomialMutation, rng: &mut RandomSource) {
    let rate = params.rate(x.len());
    if rate <= 0.0 {
        return;
    }
    let pow = 1.0 / (params.eta + 1.0);
    for (i, v) in x.iter_mut().enumerate() {
        if rng.uniform() >= rate {
            continue;
        }
        let (lo, hi) = (bounds.lower()[i], bounds.upper()[i]);
        let width = hi - lo;
        let y = v.clamp(lo, hi);
        let d1 = (y - lo) / width;
        let d2 = (hi - y) / width;
        let r = rng.uniform();
        let dq = if r < 0.5 {
            let val = 2.0 * r + (1.0 - 2.0 * r) * (1.0 - d1).powf(params.eta + 1.0);
            val.powf(pow) - 1.0
        } else {
            let val = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * (1.0 - d2).powf(params.eta + 1.0);
            1.0 - val.powf(pow)
        };
        *v = (y + dq * width).clamp(lo, hi);
    }
}

/// One child of `parent_a` and `parent_b`.
///
/// Each variable takes one of the two SBX children at random, so the operator
/// is symmetric in its parents once crossover fires.
pub fn sbx_polynomial(
    parent_a: &[f64],
    parent_b: &[f64],
    bounds: &Bounds,
    params: &SbxParams,
    rng: &mut RandomSource,
) -> DecisionVector {
    debug_assert_eq!(parent_a.len(), parent_b.len());
    let mut child = parent_a.to_vec();
    if rng.uniform() < params.crossover_prob {
        let expo = 1.0 / (params.eta_c + 1.0);
        for (i, c) in child.iter_mut().enumerate() {
            let (a, b) = (parent_a[i], parent_b[i]);
            let u = rng.uniform();
            let beta = if u <= 0.5 { (2.0 * u).powf(expo) } else { (1.0 / (2.0 * (1.0 - u))).powf(expo) };
            let c1 = 0.5 * ((1.0 + beta) * a + (1.0 - beta) * b);
            let c2 = 0.5 * ((1.0 - beta) * a + (1.0 + beta) * b);
            *c = if rng.uniform() < 0.5 { c1 } else { c2 };
        }
    }
    polynomial_mutation(&mut child, bounds, &params.mutation, rng);
    bounds.clamp_in_place(&mut child);
    child
}
