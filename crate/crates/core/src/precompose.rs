//! Superposition operators `f ↦ f∘ξ` on `H^{1/2}(S^1)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle_map::CircleMap;
use crate::error::{invalid, Result};
use crate::fourier::{FourierSeries, SobolevIndex};

/// `ω_δ(t) = max(t^{δ+1/2}, t^δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusOfContinuity {
    delta: f64,
}

impl ModulusOfContinuity {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("modulus exponent must lie in (0, 1), got {delta}")));
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        t.powf(self.delta + 0.5).max(t.powf(self.delta))
    }
}

/// Matrix of `P_N F_ξ P_N` in the basis `e^{inθ}/√|n|`, `0 < |n| <= N`,
/// orthonormal for the `H^{1/2}` seminorm.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    degree: usize,
    entries: DMatrix<Complex64>,
}

impl OperatorMatrix {
    pub fn new(xi: &CircleMap, degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(invalid("operator matrix needs degree >= 1"));
        }
        let full = xi.composition_matrix(degree, degree);
        let d = degree as i64;
        let modes: Vec<i64> = (-d..=d).filter(|&n| n != 0).collect();
        let entries = DMatrix::from_fn(modes.len(), modes.len(), |i, j| {
            let (m, n) = (modes[i], modes[j]);
            full[((m + d) as usize, (n + d) as usize)] * (m.abs() as f64 / n.abs() as f64).sqrt()
        });
        Ok(Self { degree, entries })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn norm(&self) -> f64 {
        self.entries.singular_values().max()
    }
}

/// Largest value of `|ξ(2I)|/|ξ(I)|` over arcs `I` with `samples` midpoints
/// and `samples` lengths in `(0, π)`.
pub fn doubling_constant(xi: &CircleMap, samples: usize) -> f64 {
    let samples = samples.max(1);
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let c = 2.0 * std::f64::consts::PI * i as f64 / samples as f64;
        for j in 1..=samples {
            let l = std::f64::consts::PI * j as f64 / (samples + 1) as f64;
            let wide = xi.eval(c + l) - xi.eval(c - l);
            let narrow = xi.eval(c + 0.5 * l) - xi.eval(c - 0.5 * l);
            worst = worst.max(wide / narrow);
        }
    }
    worst
}

/// Largest singular value of the truncated superposition operator.
pub fn operator_norm(xi: &CircleMap, degree: usize) -> Result<f64> {
    if degree < 4 {
        return Err(invalid(format!("operator norm needs degree >= 4, got {degree}")));
    }
    Ok(OperatorMatrix::new(xi, degree)?.norm())
}

/// `√(K + 1/K)`.
pub fn quasisymmetric_bound(doubling: f64) -> f64 {
    (doubling + 1.0 / doubling).sqrt()
}

/// `u∘ξ` resolved up to the mode where it carries only round-off.
fn compose_resolved(u: &FourierSeries, xi: &CircleMap) -> Result<FourierSeries> {
    if xi.displacement().coeffs().iter().all(|c| c.norm() == 0.0) {
        return Ok(u.clone());
    }
    u.compose_to(xi, xi.band_limit(u.degree()), 2)
}

/// `‖e^{inξ} - e^{inθ}‖_{H^{1/2}}`.
pub fn basis_distortion(n: i64, xi: &CircleMap) -> Result<f64> {
    let e = FourierSeries::exponential(n);
    let composed = compose_resolved(&e, xi)?;
    Ok((&composed - &e).sobolev_norm(SobolevIndex::HALF))
}

/// One row of the basis-distortion bench.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionRow {
    pub n: i64,
    pub distortion: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// `basis_distortion(n)` against `n^{1+2δ} ω_{2δ}(‖ξ - I‖_{W^{1,∞}})` for
/// `n = 1..=n_max`.
pub fn distortion_bench(xi: &CircleMap, delta: f64, n_max: i64) -> Result<Vec<DistortionRow>> {
    let omega = ModulusOfContinuity::new(2.0 * delta)?;
    let scale = omega.eval(xi.distance_to_identity());
    (1..=n_max)
        .map(|n| {
            let distortion = basis_distortion(n, xi)?;
            let bound = (n as f64).powf(1.0 + 2.0 * delta) * scale;
            Ok(DistortionRow {
                n,
                distortion,
                bound,
                ratio: distortion / bound,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositionError {
    /// `‖u∘ξ - u‖_{H^{1/2}}`.
    pub error: f64,
    /// `‖u‖_{H^{1+δ}} ω_{δ'}(‖ξ - I‖_{W^{1,∞}})` with `δ' = δ/2`.
    pub bound: f64,
    pub delta_prime: f64,
    /// `‖u‖_{H^{1+2δ}} ω_{2δ}(‖ξ - I‖_{W^{1,∞}})`, the normalization of the
    /// basis-distortion estimate (`None` when `2δ >= 1`).
    pub bound_doubled: Option<f64>,
}

pub fn composition_error(u: &FourierSeries, xi: &CircleMap, delta: f64) -> Result<CompositionError> {
    ModulusOfContinuity::new(delta)?;
    let delta_prime = 0.5 * delta;
    let distance = xi.distance_to_identity();
    let composed = compose_resolved(u, xi)?;
    let error = (&composed - u).sobolev_norm(SobolevIndex::HALF);
    let norm = |s: f64| SobolevIndex::new(s).map(|s| u.sobolev_norm(s));
    let bound = norm(1.0 + delta)? * ModulusOfContinuity::new(delta_prime)?.eval(distance);
    let bound_doubled = match ModulusOfContinuity::new(2.0 * delta) {
        Ok(w) => Some(norm(1.0 + 2.0 * delta)? * w.eval(distance)),
        Err(_) => None,
    };
    Ok(CompositionError {
        error,
        bound,
        delta_prime,
        bound_doubled,
    })
}

/// Truncated norms of `F_ξ` and `F_{ξ⁻¹}`.
pub fn norm_symmetry_check(xi: &CircleMap, degree: usize) -> Result<(f64, f64)> {
    let inverse = xi.inverse_with_degree((8 * xi.degree()).max(64), 1e-15)?;
    Ok((operator_norm(xi, degree)?, operator_norm(&inverse, degree)?))
}
