//! Moebius automorphisms `w = (z - b)/(1 - b̄z)` of the unit disk.

use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle_map::CircleMap;
use crate::error::{invalid, Result};
use crate::fourier::FourierSeries;

/// Number of modes after which `|b|^k` falls below double precision.
pub(crate) fn geometric_tail(modulus: f64) -> usize {
    if modulus <= 1e-300 {
        return 0;
    }
    ((37.0 / -modulus.ln()).ceil() as usize).min(8192)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoebiusMap {
    b: Complex64,
}

/// Functions of the inverse boundary phase with closed-form coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PullbackKind {
    /// `cos(φ⁻¹(θ))`
    CosInverse,
    /// `e^{iφ⁻¹(θ)}`
    ExpInverse,
    /// `e^{2iφ⁻¹(θ)}`
    Exp2Inverse,
}

impl FromStr for PullbackKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cos" | "cos-inverse" => Ok(Self::CosInverse),
            "exp" | "exp-inverse" => Ok(Self::ExpInverse),
            "exp2" | "exp2-inverse" => Ok(Self::Exp2Inverse),
            other => Err(invalid(format!("unknown pullback kind '{other}'"))),
        }
    }
}

impl MoebiusMap {
    pub fn new(b: Complex64) -> Result<Self> {
        if !(b.norm() < 1.0) {
            return Err(invalid(format!("Moebius parameter must satisfy |b| < 1, got {b}")));
        }
        Ok(Self { b })
    }

    pub fn identity() -> Self {
        Self {
            b: Complex64::new(0.0, 0.0),
        }
    }

    pub fn b(&self) -> Complex64 {
        self.b
    }

    pub fn is_identity(&self) -> bool {
        self.b.norm() == 0.0
    }

    /// The inverse automorphism, which is the map with parameter `-b`.
    pub fn inverse(&self) -> Self {
        Self { b: -self.b }
    }

    pub fn forward(&self, z: Complex64) -> Complex64 {
        (z - self.b) / (Complex64::new(1.0, 0.0) - self.b.conj() * z)
    }

    /// `φ(θ) - θ = -2 arg(1 - b̄e^{iθ})`.
    pub fn phase_displacement(&self, theta: f64) -> f64 {
        -2.0 * (Complex64::new(1.0, 0.0) - self.b.conj() * Complex64::from_polar(1.0, theta)).arg()
    }

    /// Boundary correspondence `e^{iθ} ↦ arg w(e^{iθ})` as a circle map.
    ///
    /// The displacement `2 Im Σ_{k≥1} (b̄e^{iθ})^k / k` is built from its exact
    /// coefficients, truncated once `|b|^k` is below round-off.
    pub fn boundary_phase(&self) -> CircleMap {
        self.boundary_phase_with_degree(geometric_tail(self.b.norm()).max(1))
    }

    pub fn boundary_phase_with_degree(&self, degree: usize) -> CircleMap {
        let mut d = FourierSeries::zeros(degree);
        let bc = self.b.conj();
        let mut pw = Complex64::new(1.0, 0.0);
        for k in 1..=degree as i64 {
            pw *= bc;
            let c = pw / Complex64::new(0.0, k as f64);
            d.set(k, c);
            d.set(-k, c.conj());
        }
        CircleMap::from_displacement(d).expect("Moebius boundary phase is a diffeomorphism")
    }

    /// `φ⁻¹`, the boundary phase of the inverse automorphism.
    pub fn inverse_phase(&self) -> CircleMap {
        self.inverse().boundary_phase()
    }

    /// `∂_r ρ(1, θ) = (1 - |b|²)/|1 - b̄e^{iθ}|²`, which is also `φ'(θ)`.
    pub fn radial_derivative_factor(&self, theta: f64) -> f64 {
        let q = Complex64::new(1.0, 0.0) - self.b.conj() * Complex64::from_polar(1.0, theta);
        (1.0 - self.b.norm_sqr()) / q.norm_sqr()
    }

    /// Closed-form Fourier coefficient `c_k` of a function of `φ⁻¹`.
    pub fn pullback_coefficient(&self, kind: PullbackKind, k: i64) -> Complex64 {
        let b = self.b;
        let bc = b.conj();
        let s = 1.0 - b.norm_sqr();
        let zero = Complex64::new(0.0, 0.0);
        match kind {
            PullbackKind::ExpInverse => match k {
                0 => b,
                k if k > 0 => s * (-bc).powi(k as i32 - 1),
                _ => zero,
            },
            PullbackKind::Exp2Inverse => match k {
                0 => b * b,
                1 => 2.0 * b * s,
                k if k > 1 => {
                    let kf = k as f64;
                    (-bc).powi(k as i32 - 2) * s * (kf - 1.0 - (kf + 1.0) * b.norm_sqr())
                }
                _ => zero,
            },
            PullbackKind::CosInverse => match k {
                0 => Complex64::new(b.re, 0.0),
                k if k > 0 => 0.5 * s * (-bc).powi(k as i32 - 1),
                k => 0.5 * s * (-b).powi((-k) as i32 - 1),
            },
        }
    }

    /// Series of `cos ∘ φ⁻¹` truncated to `degree`, from the closed form.
    pub fn cos_pullback(&self, degree: usize) -> FourierSeries {
        let mut s = FourierSeries::zeros(degree);
        for k in -(degree as i64)..=degree as i64 {
            s.set(k, self.pullback_coefficient(PullbackKind::CosInverse, k));
        }
        s
    }

    /// Working degree that keeps the Moebius distortion of a degree-`degree`
    /// series below round-off.
    pub fn working_degree(&self, degree: usize) -> usize {
        degree + geometric_tail(self.b.norm()) + 8
    }

    /// DtN map of the inclusion `φ⁻¹(D₀)` from the DtN map of `D₀`:
    /// `Λ(f)(θ) = φ'(θ) · [Λ₀(f ∘ φ⁻¹)](φ(θ))`, truncated to `degree`.
    ///
    /// `inner` receives `f ∘ φ⁻¹` at the working degree and returns the Neumann
    /// series of the centered problem.
    pub fn transplant_dtn<F>(&self, f: &FourierSeries, degree: usize, inner: F) -> Result<FourierSeries>
    where
        F: FnOnce(&FourierSeries) -> Result<FourierSeries>,
    {
        let work = self.working_degree(degree.max(f.degree()));
        let pulled = if self.is_identity() {
            f.resized(work)
        } else {
            f.compose_to(&self.inverse_phase(), work, 2)?
        };
        let g0 = inner(&pulled)?;
        if self.is_identity() {
            return Ok(g0.resized(degree));
        }
        self.push_forward_flux(&g0, degree)
    }

    /// `φ'(θ) · G(φ(θ))` truncated to `degree`.
    pub fn push_forward_flux(&self, g0: &FourierSeries, degree: usize) -> Result<FourierSeries> {
        let phase = self.boundary_phase();
        let m = (4 * (degree + g0.degree() + 1)).next_power_of_two();
        let mapped = phase.evaluate_on_grid(m);
        let weights = phase.derivative_on_grid(m);
        let values: Vec<Complex64> = mapped
            .iter()
            .zip(&weights)
            .map(|(&t, &w)| g0.evaluate(t) * w)
            .collect();
        Ok(FourierSeries::from_grid(values, degree))
    }
}

/// Moebius parameters `(b, R)` with `φ_b⁻¹(B(0, R))` equal to the disk
/// `B(center, radius)`. Requires the disk inside the unit disk.
pub fn moebius_parameters(center: Complex64, radius: f64) -> Result<(Complex64, f64)> {
    let c = center.norm();
    if !(radius > 0.0) || !(c + radius < 1.0) {
        return Err(invalid(format!(
            "disk B({center}, {radius}) is not inside the unit disk"
        )));
    }
    if c == 0.0 {
        return Ok((Complex64::new(0.0, 0.0), radius));
    }
    // the diameter on the line through the center maps to a symmetric one
    let s = 2.0 * c;
    let p = c * c - radius * radius;
    let beta = ((1.0 + p) - ((1.0 + p) * (1.0 + p) - s * s).sqrt()) / s;
    let x1 = c + radius;
    let r2 = (x1 - beta) / (1.0 - beta * x1);
    Ok((center / c * beta, r2))
}

/// Center and radius of `φ_b⁻¹(B(0, R))`.
pub fn physical_disk(b: Complex64, r: f64) -> (Complex64, f64) {
    let q = 1.0 - b.norm_sqr() * r * r;
    (b * (1.0 - r * r) / q, r * (1.0 - b.norm_sqr()) / q)
}
