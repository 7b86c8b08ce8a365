//! Orientation-preserving diffeomorphisms of the circle.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fourier::{fft_forward, nodes, FourierSeries};

/// Density of the grid used for sup-norm checks, relative to the degree.
pub const CHECK_DENSITY: usize = 32;

/// `ξ(θ) = θ + d(θ)` with `d` a real, 2π-periodic trigonometric polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleMap {
    displacement: FourierSeries,
    derivative: FourierSeries,
    min_derivative: f64,
    sup_displacement: f64,
}

impl CircleMap {
    pub fn identity() -> Self {
        Self::from_displacement(FourierSeries::constant(0.0)).expect("identity is valid")
    }

    /// `θ ↦ θ + angle`, with the angle reduced to `(-π, π]`.
    pub fn rotation(angle: f64) -> Self {
        let mut a = angle.rem_euclid(2.0 * PI);
        if a > PI {
            a -= 2.0 * PI;
        }
        Self::from_displacement(FourierSeries::constant(a)).expect("rotation is valid")
    }

    /// `θ ↦ θ + amplitude · sin(kθ)`.
    pub fn sine_perturbation(k: u32, amplitude: f64) -> Result<Self> {
        Self::from_displacement(FourierSeries::sine(k, amplitude))
    }

    /// Validates and wraps a displacement series.
    pub fn from_displacement(displacement: FourierSeries) -> Result<Self> {
        let scale = 1.0 + displacement.energy().sqrt();
        if displacement.reality_defect() > 1e-10 * scale {
            return Err(invalid("circle map displacement must be real"));
        }
        let displacement = displacement.real_part();
        let derivative = displacement.derivative();
        let m = CHECK_DENSITY * displacement.degree().max(4);
        let min_derivative = derivative
            .real_samples(m)
            .into_iter()
            .fold(f64::INFINITY, |a, v| a.min(1.0 + v));
        let sup_displacement = displacement
            .real_samples(m)
            .into_iter()
            .fold(0.0, |a: f64, v| a.max(v.abs()));
        if !(min_derivative > 0.0) {
            return Err(invalid(format!(
                "map is not orientation preserving (min derivative {min_derivative:.3e})"
            )));
        }
        if !(sup_displacement < PI) {
            return Err(invalid(format!(
                "displacement sup-norm {sup_displacement:.3} is not below π"
            )));
        }
        Ok(Self {
            displacement,
            derivative,
            min_derivative,
            sup_displacement,
        })
    }

    /// Map from displacement values `ξ(θ_j) - θ_j` on an equispaced grid,
    /// truncated to `degree`.
    pub fn from_grid_values(values: &[f64], degree: usize) -> Result<Self> {
        if values.len() <= 2 * degree {
            return Err(invalid(format!(
                "{} samples cannot resolve degree {degree}",
                values.len()
            )));
        }
        Self::from_displacement(FourierSeries::from_real_grid(values, degree))
    }

    pub fn displacement(&self) -> &FourierSeries {
        &self.displacement
    }

    pub fn degree(&self) -> usize {
        self.displacement.degree()
    }

    pub fn min_derivative(&self) -> f64 {
        self.min_derivative
    }

    pub fn sup_displacement(&self) -> f64 {
        self.sup_displacement
    }

    pub fn eval(&self, theta: f64) -> f64 {
        theta + self.displacement.evaluate(theta).re
    }

    pub fn derivative_at(&self, theta: f64) -> f64 {
        1.0 + self.derivative.evaluate(theta).re
    }

    /// `ξ(θ_j)` at `count` equispaced nodes (unwrapped, not reduced mod 2π).
    pub fn evaluate_on_grid(&self, count: usize) -> Vec<f64> {
        nodes(count)
            .into_iter()
            .zip(self.displacement.real_samples(count))
            .map(|(t, d)| t + d)
            .collect()
    }

    /// `ξ'(θ_j)` at `count` equispaced nodes.
    pub fn derivative_on_grid(&self, count: usize) -> Vec<f64> {
        self.derivative
            .real_samples(count)
            .into_iter()
            .map(|d| 1.0 + d)
            .collect()
    }

    /// Solves `ξ(t) = θ` by Newton's method from a displacement-corrected guess.
    pub fn solve_preimage(&self, theta: f64, tol: f64) -> Result<f64> {
        let mut t = theta - self.displacement.evaluate(theta).re;
        for _ in 0..60 {
            let r = self.eval(t) - theta;
            if r.abs() <= tol {
                return Ok(t);
            }
            t -= r / self.derivative_at(t);
        }
        let r = self.eval(t) - theta;
        if r.abs() <= tol.max(1e-13) {
            Ok(t)
        } else {
            Err(Error::Divergence {
                solver: "circle map inversion",
                iterations: 60,
                residual: r.abs(),
            })
        }
    }

    /// Inverse map of the same degree, by per-node Newton iteration.
    pub fn inverse(&self, tol: f64) -> Result<CircleMap> {
        self.inverse_with_degree(self.degree(), tol)
    }

    pub fn inverse_with_degree(&self, degree: usize, tol: f64) -> Result<CircleMap> {
        let m = 4 * (degree + 1);
        let values = nodes(m)
            .into_iter()
            .map(|t| self.solve_preimage(t, tol).map(|s| s - t))
            .collect::<Result<Vec<_>>>()?;
        CircleMap::from_grid_values(&values, degree)
    }

    /// `self ∘ inner`, truncated to the larger of the two degrees.
    pub fn compose(&self, inner: &CircleMap) -> Result<CircleMap> {
        let degree = self.degree().max(inner.degree());
        let m = 4 * (degree + 1);
        let grid = inner.evaluate_on_grid(m);
        let values: Vec<f64> = grid
            .iter()
            .zip(nodes(m))
            .map(|(&s, t)| s - t + self.displacement.evaluate(s).re)
            .collect();
        CircleMap::from_grid_values(&values, degree)
    }

    /// `max(sup|d_1 - d_2|, sup|d_1' - d_2'|)` on a grid of
    /// `CHECK_DENSITY × degree` nodes.
    pub fn w1inf_distance(&self, other: &CircleMap) -> f64 {
        let diff = &self.displacement - &other.displacement;
        let m = CHECK_DENSITY * diff.degree().max(4);
        let sup = |s: &FourierSeries| {
            s.real_samples(m)
                .into_iter()
                .fold(0.0, |a: f64, v| a.max(v.abs()))
        };
        sup(&diff).max(sup(&diff.derivative()))
    }

    pub fn distance_to_identity(&self) -> f64 {
        self.w1inf_distance(&CircleMap::identity())
    }

    /// Grid size that resolves `e^{ikξ}` for `|k| <= in_degree` up to mode `out_degree`.
    pub(crate) fn mode_grid(&self, in_degree: usize, out_degree: usize) -> usize {
        let spread = (in_degree as f64 * self.sup_derivative_excess()).ceil() as usize;
        (2 * (in_degree + out_degree + spread + 32)).next_power_of_two()
    }

    /// Mode beyond which `e^{ikξ}`, `|k| <= degree`, carries only round-off.
    pub(crate) fn band_limit(&self, degree: usize) -> usize {
        degree + (degree as f64 * self.sup_derivative_excess()).ceil() as usize + 32
    }

    fn sup_derivative_excess(&self) -> f64 {
        let m = CHECK_DENSITY * self.degree().max(4);
        self.derivative
            .real_samples(m)
            .into_iter()
            .fold(0.0, |a: f64, v| a.max(v.abs()))
    }

    /// Coefficients `c_m(e^{ikξ})`, `|m| <= out_degree`, as the columns
    /// `k = -in_degree..=in_degree` of a `(2·out+1) × (2·in+1)` matrix.
    pub fn composition_matrix(&self, in_degree: usize, out_degree: usize) -> DMatrix<Complex64> {
        self.weighted_composition_matrix(in_degree, out_degree, false)
    }

    /// As [`CircleMap::composition_matrix`], optionally for `ξ' · e^{ikξ}`.
    pub(crate) fn weighted_composition_matrix(
        &self,
        in_degree: usize,
        out_degree: usize,
        times_derivative: bool,
    ) -> DMatrix<Complex64> {
        let m = self.mode_grid(in_degree, out_degree);
        let grid = self.evaluate_on_grid(m);
        let w: Vec<f64> = if times_derivative {
            self.derivative_on_grid(m)
        } else {
            vec![1.0; m]
        };
        let unit: Vec<Complex64> = grid.iter().map(|&s| Complex64::from_polar(1.0, s)).collect();
        let rows = 2 * out_degree + 1;
        let cols = 2 * in_degree + 1;
        let mut out = DMatrix::<Complex64>::zeros(rows, cols);
        let d = in_degree as i64;
        let o = out_degree as i64;
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        // powers e^{ikξ} built up from k = 0 in both directions
        let mut pos: Vec<Complex64> = w.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let mut neg = pos.clone();
        for k in 0..=d {
            for (sign, pw) in [(1i64, &pos), (-1i64, &neg)] {
                if k == 0 && sign < 0 {
                    continue;
                }
                buf.copy_from_slice(pw);
                fft_forward(&mut buf);
                let col = (sign * k + d) as usize;
                for mm in -o..=o {
                    out[((mm + o) as usize, col)] =
                        buf[mm.rem_euclid(m as i64) as usize] / m as f64;
                }
            }
            for j in 0..m {
                pos[j] *= unit[j];
                neg[j] *= unit[j].conj();
            }
        }
        out
    }
}
