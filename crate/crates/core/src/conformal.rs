//! Boundary correspondences of conformal maps onto starlike domains
//! (Theodorsen) and onto annuli (Theodorsen–Garrick).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle_map::CircleMap;
use crate::error::{invalid, Error, Result};
use crate::fourier::FourierSeries;
use crate::geometry::PerturbedDiskSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalOptions {
    /// Sup-norm tolerance on the fixed-point residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Degree of the displacement series of every computed map.
    pub degree: usize,
}

impl Default for ConformalOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 200,
            degree: 128,
        }
    }
}

impl ConformalOptions {
    fn grid(&self) -> usize {
        4 * (self.degree + 1)
    }
}

/// The two conjugation operators of the annulus `ρ < |w| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnulusOperator {
    /// `e^{imθ} ↦ -i sgn(m) (1 + ρ^{2|m|})/(1 - ρ^{2|m|}) e^{imθ}`
    H,
    /// `e^{imθ} ↦ -2i sgn(m) ρ^{|m|}/(1 - ρ^{2|m|}) e^{imθ}`
    K,
}

/// Applies `H_ρ` or `K_ρ`; constants are annihilated.
pub fn annulus_conjugation(series: &FourierSeries, rho: f64, kind: AnnulusOperator) -> Result<FourierSeries> {
    if !(0.0..1.0).contains(&rho) {
        return Err(invalid(format!("annulus modulus must lie in [0, 1), got {rho}")));
    }
    Ok(series.multiplier(|m| {
        if m == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let a = m.unsigned_abs() as i32;
        let q = rho.powi(2 * a);
        let gain = match kind {
            AnnulusOperator::H => (1.0 + q) / (1.0 - q),
            AnnulusOperator::K => 2.0 * rho.powi(a) / (1.0 - q),
        };
        Complex64::new(0.0, -(m.signum() as f64) * gain)
    }))
}

/// Damped fixed-point iteration on displacement samples. `step` maps the
/// current samples to the next iterate; returns the converged samples and
/// the iteration count.
fn fixed_point(
    solver: &'static str,
    mut d: Vec<f64>,
    opts: &ConformalOptions,
    mut step: impl FnMut(&[f64]) -> Vec<f64>,
) -> Result<(Vec<f64>, usize)> {
    let mut damping = 1.0;
    let mut last = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        let next = step(&d);
        let residual = d
            .iter()
            .zip(&next)
            .fold(0.0, |a: f64, (x, y)| a.max((x - y).abs()));
        if residual < opts.tol {
            return Ok((next, iter));
        }
        if residual > last && damping == 1.0 {
            damping = 0.5;
        }
        last = residual;
        for (x, y) in d.iter_mut().zip(&next) {
            *x += damping * (y - *x);
        }
    }
    Err(Error::Divergence {
        solver,
        iterations: opts.max_iter,
        residual: last,
    })
}

fn check_delta_condition(boundary: &PerturbedDiskSpec) -> Result<()> {
    let delta = boundary.delta_condition();
    if delta >= 1.0 {
        return Err(Error::PreconditionFailed(format!(
            "delta condition sup|r'/r| = {delta:.3} is not below 1"
        )));
    }
    Ok(())
}

/// `log r(θ_j + d_j)` for displacement samples `d`.
fn log_radius_on(boundary: &PerturbedDiskSpec, d: &[f64]) -> Vec<f64> {
    let m = d.len();
    d.iter()
        .enumerate()
        .map(|(j, dj)| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / m as f64 + dj;
            boundary.polar_radius(t).ln()
        })
        .collect()
}

/// Boundary correspondence `φ` of the conformal map of the unit disk onto a
/// starlike domain, normalized by `∫(φ - θ) = 0`: the fixed point of
/// `φ(θ) - θ = H(log r(φ(θ)))`.
pub fn theodorsen_solve(boundary: &PerturbedDiskSpec, opts: &ConformalOptions) -> Result<CircleMap> {
    check_delta_condition(boundary)?;
    let m = opts.grid();
    let degree = opts.degree;
    let (d, _) = fixed_point("Theodorsen iteration", vec![0.0; m], opts, |d| {
        let u = FourierSeries::from_real_grid(&log_radius_on(boundary, d), degree);
        u.hilbert_transform().real_samples(m)
    })?;
    CircleMap::from_grid_values(&d, degree)
}

/// First-order correspondence `θ - (ε/R) Hδ(θ)`.
pub fn theodorsen_first_order(boundary: &PerturbedDiskSpec) -> Result<CircleMap> {
    let scale = boundary.eps() / boundary.radius();
    CircleMap::from_displacement(&boundary.delta().hilbert_transform() * -scale)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarrickResult {
    /// Conformal modulus: the region is equivalent to `ρ < |w| < 1`.
    pub rho: f64,
    /// Correspondence on the outer (unit) circle.
    pub outer_map: CircleMap,
    /// Correspondence on the inner circle `|w| = ρ`.
    pub inner_map: CircleMap,
    pub iterations: usize,
}

/// Boundary correspondences of the conformal map of the annulus onto the
/// region between the unit circle and a starlike inner curve:
/// `φ₁ - θ = -H_ρ(log r₁∘φ₁)`, `φ₀ - θ = -K_ρ(log r₁∘φ₁)` and
/// `ρ = exp(mean log r₁∘φ₁)`.
pub fn garrick_solve(inner: &PerturbedDiskSpec, opts: &ConformalOptions) -> Result<GarrickResult> {
    check_delta_condition(inner)?;
    if inner.max_radius() >= 1.0 {
        return Err(Error::PreconditionFailed(
            "inner boundary must lie inside the unit circle".into(),
        ));
    }
    let m = opts.grid();
    let degree = opts.degree;
    let modulus = |u: &FourierSeries| u.mean().re.exp();
    let (d, iterations) = fixed_point("Garrick iteration", vec![0.0; m], opts, |d| {
        let u = FourierSeries::from_real_grid(&log_radius_on(inner, d), degree);
        let rho = modulus(&u);
        let h = annulus_conjugation(&u, rho, AnnulusOperator::H).expect("modulus below one");
        (&h * -1.0).real_samples(m)
    })?;
    let inner_map = CircleMap::from_grid_values(&d, degree)?;
    let displacement = inner_map.displacement().real_samples(m);
    let u = FourierSeries::from_real_grid(&log_radius_on(inner, &displacement), degree);
    let rho = modulus(&u);
    let outer = -&annulus_conjugation(&u, rho, AnnulusOperator::K)?;
    Ok(GarrickResult {
        rho,
        outer_map: CircleMap::from_displacement(outer)?,
        inner_map,
        iterations,
    })
}

/// Conformal data of an inclusion needed by the transplanted problem.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceMap {
    /// `ξ = (φ^e)⁻¹ ∘ φ^i` on the circle `|w| = ρ`.
    pub xi: CircleMap,
    pub rho: f64,
    /// Outer-boundary correspondence of the exterior map.
    pub psi_e: CircleMap,
    /// Interior correspondence (Theodorsen).
    pub phi_i: CircleMap,
    /// Exterior correspondence on the inner circle (Garrick).
    pub phi_e: CircleMap,
}

impl InterfaceMap {
    /// `‖ξ - I‖_{W^{1,∞}}`.
    pub fn xi_distance(&self) -> f64 {
        self.xi.distance_to_identity()
    }
}

pub fn interface_map(inclusion: &PerturbedDiskSpec, opts: &ConformalOptions) -> Result<InterfaceMap> {
    let phi_i = theodorsen_solve(inclusion, opts)?;
    let garrick = garrick_solve(inclusion, opts)?;
    let phi_e = garrick.inner_map;
    let m = opts.grid();
    let values = phi_i
        .evaluate_on_grid(m)
        .into_iter()
        .enumerate()
        .map(|(j, s)| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            phi_e.solve_preimage(s, opts.tol * 1e-2).map(|p| p - t)
        })
        .collect::<Result<Vec<_>>>()?;
    let xi = CircleMap::from_grid_values(&values, opts.degree)?;
    Ok(InterfaceMap {
        xi,
        rho: garrick.rho,
        psi_e: garrick.outer_map,
        phi_i,
        phi_e,
    })
}
