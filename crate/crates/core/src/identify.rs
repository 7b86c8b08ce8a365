//! Disk identification from the single measurement `f = cos θ`.
//!
//! A disk is parametrized by the Moebius parameter `b` and the radius `R` of
//! the centered disk it is carried to, so `D = φ_b⁻¹(B(0, R))`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dtn::{concentric_dtn, concentric_multiplier, dtn_perturbed_disk, Conductivities, DtnOptions};
use crate::error::{invalid, Error, Result};
use crate::fit::{loglog_fit, LinearFit};
use crate::fourier::{FourierSeries, SobolevIndex};
use crate::geometry::{symmetric_difference_area, DiskSpec, PerturbedDiskSpec, Region};
use crate::moebius::{moebius_parameters, physical_disk, MoebiusMap};

/// Fitted disk and its misfit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationResult {
    pub disk: DiskSpec,
    pub b: Complex64,
    /// Radius of the centered disk `φ_b(D)`.
    pub radius: f64,
    /// `‖Λ_D(f) - g‖_{H^{-1/2}}`.
    pub residual: f64,
    /// `residual / ‖g‖_{H^{-1/2}}`.
    pub relative_residual: f64,
    pub iterations: usize,
    pub symdiff_to_truth: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    pub fd_step: f64,
    /// Bound on `‖Jᵀr‖` that counts as stationary.
    pub stationarity: f64,
    /// Relative misfit above which no disk explains the data.
    pub no_disk_threshold: f64,
    /// Radius below which the inclusion is reported as invisible.
    pub degenerate_radius: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            fd_step: 1e-7,
            stationarity: 1e-10,
            no_disk_threshold: 1e-3,
            degenerate_radius: 1e-3,
        }
    }
}

/// `λ = (1 + μR²)/(1 - μR²)` style gain `m_k(R) = (1 + μR^{2k})/(1 - μR^{2k})`.
fn gain(k: i64, r: f64, mu: f64) -> f64 {
    let q = r.powi(2 * k.unsigned_abs() as i32);
    (1.0 + mu * q) / (1.0 - mu * q)
}

/// `c_k(F)` for the measurement `cos θ`, where `F` compares the disk
/// `φ_b⁻¹(B(0, R₂))` with the centered disk `B(0, R₁)`:
/// `c_k(F) = ½ k (1 - |b|²)² (-b̄)^{k-1} (m_k(R₂) - m_1(R₁))` for `k >= 1`,
/// `c_0(F) = 0` and `c_{-k} = conj(c_k)`.
pub fn f_coefficients(b: Complex64, r1: f64, r2: f64, cond: &Conductivities, k: i64) -> Result<Complex64> {
    if !(b.norm() < 1.0) {
        return Err(invalid(format!("Moebius parameter must satisfy |b| < 1, got {b}")));
    }
    for r in [r1, r2] {
        if !(r > 0.0 && r < 1.0) {
            return Err(invalid(format!("radius must lie in (0, 1), got {r}")));
        }
    }
    if k == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mu = cond.mu();
    let kk = k.unsigned_abs() as i64;
    let s = 1.0 - b.norm_sqr();
    let c = (-b.conj()).powi(kk as i32 - 1) * (0.5 * kk as f64 * s * s * (gain(kk, r2, mu) - gain(1, r1, mu)));
    Ok(if k > 0 { c } else { c.conj() })
}

/// Neumann data of the disk `φ_b⁻¹(B(0, R))` for `f = cos θ`, truncated to
/// `degree`.
///
/// With `G = Λ_{B(0,R)}(cos ∘ φ⁻¹)` and `g = φ'·G∘φ`, the substitution
/// `s = φ(θ)` gives `c_n(g) = (1/2π) ∫ G(s) e^{-inφ⁻¹(s)} ds`.
pub fn disk_neumann(b: Complex64, r: f64, cond: &Conductivities, degree: usize) -> Result<FourierSeries> {
    let phase = MoebiusMap::new(b)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(invalid(format!("radius must lie in (0, 1), got {r}")));
    }
    let work = phase.working_degree(degree);
    let g0 = phase
        .cos_pullback(work)
        .multiplier(|n| Complex64::new(concentric_multiplier(n, r, cond), 0.0));
    let m = (2 * (work + degree) + 16).next_power_of_two();
    let values = g0.samples(m);
    let mut acc = vec![Complex64::new(0.0, 0.0); degree + 1];
    for (j, v) in values.iter().enumerate() {
        let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / m as f64);
        // e^{-iφ⁻¹(s)} = conj((z + b)/(1 + b̄z))
        let step = ((z + b) / (1.0 + b.conj() * z)).conj();
        let mut w = Complex64::new(v.re, 0.0);
        for a in acc.iter_mut() {
            *a += w;
            w *= step;
        }
    }
    let mut out = FourierSeries::zeros(degree);
    for n in 1..=degree {
        let c = acc[n] / m as f64;
        out.set(n as i64, c);
        out.set(-(n as i64), c.conj());
    }
    Ok(out)
}

fn neumann_for(f: &FourierSeries, b: Complex64, r: f64, cond: &Conductivities, degree: usize) -> Result<FourierSeries> {
    if is_cosine(f) {
        return disk_neumann(b, r, cond, degree);
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(invalid(format!("radius must lie in (0, 1), got {r}")));
    }
    let mut g = MoebiusMap::new(b)?
        .transplant_dtn(f, degree, |p| Ok(concentric_dtn(p, r, cond)?.neumann))?
        .real_part();
    g.set(0, Complex64::new(0.0, 0.0));
    Ok(g)
}

fn is_cosine(f: &FourierSeries) -> bool {
    f.max_coeff_distance(&FourierSeries::cosine(1, 1.0)) == 0.0
}

/// Bounds kept by the optimizer: `|b| <= B_MAX`, `R_MIN <= R <= R_MAX`.
const B_MAX: f64 = 0.98;
const R_MIN: f64 = 1e-4;
const R_MAX: f64 = 0.98;

fn admissible(x: &[f64; 3]) -> bool {
    x[0].hypot(x[1]) <= B_MAX && x[2] >= R_MIN && x[2] <= R_MAX
}

/// Weighted misfit vector whose squared norm is `‖model - g‖²_{H^{-1/2}}`.
struct Objective<'a> {
    g: &'a FourierSeries,
    f: &'a FourierSeries,
    cond: Conductivities,
    degree: usize,
}

impl Objective<'_> {
    fn residual(&self, x: &[f64; 3]) -> Result<DVector<f64>> {
        let model = neumann_for(self.f, Complex64::new(x[0], x[1]), x[2], &self.cond, self.degree)?;
        let mut r = DVector::zeros(2 * self.degree);
        for n in 1..=self.degree {
            let w = (2.0 / n as f64).sqrt();
            let d = (model.coeff(n as i64) - self.g.coeff(n as i64)) * w;
            r[2 * (n - 1)] = d.re;
            r[2 * n - 1] = d.im;
        }
        Ok(r)
    }

    /// Central differences, one-sided at the radius bounds.
    fn jacobian(&self, x: &[f64; 3], r: &DVector<f64>, step: f64) -> Result<DMatrix<f64>> {
        let mut j = DMatrix::zeros(r.len(), 3);
        for i in 0..3 {
            let h = step * x[i].abs().max(1.0);
            let (mut xp, mut xm) = (*x, *x);
            xp[i] += h;
            xm[i] -= h;
            let column = if i == 2 && xp[2] > R_MAX {
                (r - self.residual(&xm)?) / h
            } else if i == 2 && xm[2] < R_MIN {
                (self.residual(&xp)? - r) / h
            } else {
                (self.residual(&xp)? - self.residual(&xm)?) / (2.0 * h)
            };
            j.set_column(i, &column);
        }
        Ok(j)
    }
}

struct Minimum {
    x: [f64; 3],
    objective: f64,
    iterations: usize,
}

/// Damped Gauss–Newton from `x0`.
fn gauss_newton(obj: &Objective, x0: [f64; 3], opts: &FitOptions) -> Result<Minimum> {
    let mut x = x0;
    let mut r = obj.residual(&x)?;
    let mut value = r.norm_squared();
    let mut trace = vec![value];
    for it in 0..opts.max_iter {
        let j = obj.jacobian(&x, &r, opts.fd_step)?;
        let grad = j.transpose() * &r;
        if grad.norm() <= opts.stationarity || value == 0.0 {
            return Ok(Minimum {
                x,
                objective: value,
                iterations: it,
            });
        }
        let step = j
            .clone()
            .svd(true, true)
            .solve(&(-&r), 1e-14)
            .map_err(|e| Error::SolverFailure(e.to_string()))?;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial = [x[0] + t * step[0], x[1] + t * step[1], x[2] + t * step[2]];
            if admissible(&trial) {
                let rt = obj.residual(&trial)?;
                let vt = rt.norm_squared();
                if vt < value {
                    accepted = Some((trial, rt, vt));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, rt, vt)) => {
                let moved = (0..3).map(|i| (trial[i] - x[i]).abs()).fold(0.0, f64::max);
                x = trial;
                r = rt;
                value = vt;
                trace.push(value);
                if moved < 1e-15 {
                    return Ok(Minimum {
                        x,
                        objective: value,
                        iterations: it + 1,
                    });
                }
            }
            None => {
                // at the round-off floor of the objective or of the gradient
                let stalled = trace.len() >= 2 && trace[trace.len() - 2] - value <= 1e-10 * value;
                if stalled || grad.norm() <= 1e-6 * j.norm() * r.norm() + opts.stationarity {
                    return Ok(Minimum {
                        x,
                        objective: value,
                        iterations: it,
                    });
                }
                return Err(Error::OptimizationFailure {
                    reason: format!("no descent along the Gauss-Newton direction at iteration {it}"),
                    trace,
                });
            }
        }
    }
    Ok(Minimum {
        x,
        objective: value,
        iterations: opts.max_iter,
    })
}

/// Coarse starting points ranked by a low-degree misfit.
fn seeds(g: &FourierSeries, f: &FourierSeries, cond: &Conductivities, keep: usize) -> Result<Vec<[f64; 3]>> {
    let coarse = Objective {
        g,
        f,
        cond: *cond,
        degree: g.degree().min(8),
    };
    let mut scored = Vec::new();
    for i in 0..=8 {
        let modulus = 0.1 * i as f64;
        let angles = if i == 0 { 1 } else { 12 };
        for a in 0..angles {
            let b = Complex64::from_polar(modulus, 2.0 * std::f64::consts::PI * a as f64 / angles as f64);
            for k in 1..=9 {
                let x = [b.re, b.im, 0.09 * k as f64];
                scored.push((coarse.residual(&x)?.norm_squared(), x));
            }
        }
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(scored.into_iter().take(keep).map(|(_, x)| x).collect())
}

fn result_from(min: &Minimum, g_norm: f64) -> Result<IdentificationResult> {
    let b = Complex64::new(min.x[0], min.x[1]);
    let (center, radius) = physical_disk(b, min.x[2]);
    let residual = min.objective.sqrt();
    Ok(IdentificationResult {
        disk: DiskSpec::new(center, radius)?,
        b,
        radius: min.x[2],
        residual,
        relative_residual: if g_norm > 0.0 { residual / g_norm } else { residual },
        iterations: min.iterations,
        symdiff_to_truth: None,
    })
}

fn check_data(g: &FourierSeries) -> Result<f64> {
    if g.degree() == 0 {
        return Err(invalid("Neumann data must carry at least one mode"));
    }
    if !g.is_real(1e-10) {
        return Err(invalid("Neumann data must be real"));
    }
    Ok(g.sobolev_norm(SobolevIndex::MINUS_HALF))
}

/// Least-squares disk for the data `g` of the measurement `cos θ`.
pub fn fit_disk(g: &FourierSeries, cond: &Conductivities, init: Option<&DiskSpec>, opts: &FitOptions) -> Result<IdentificationResult> {
    fit_disk_with(g, &FourierSeries::cosine(1, 1.0), cond, init, opts)
}

/// As [`fit_disk`] for an arbitrary real measurement `f`.
pub fn fit_disk_with(
    g: &FourierSeries,
    f: &FourierSeries,
    cond: &Conductivities,
    init: Option<&DiskSpec>,
    opts: &FitOptions,
) -> Result<IdentificationResult> {
    let g_norm = check_data(g)?;
    if !f.is_real(1e-12) {
        return Err(invalid("Dirichlet data must be real"));
    }
    let obj = Objective {
        g,
        f,
        cond: *cond,
        degree: g.degree(),
    };
    let starts = match init {
        Some(d) => {
            let (b, r) = moebius_parameters(d.center(), d.radius())?;
            vec![[b.re, b.im, r.clamp(R_MIN, R_MAX)]]
        }
        None => seeds(g, f, cond, 3)?,
    };
    let mut best: Option<Minimum> = None;
    let mut failure = None;
    for x0 in starts {
        match gauss_newton(&obj, x0, opts) {
            Ok(m) => {
                if best.as_ref().is_none_or(|b| m.objective < b.objective) {
                    best = Some(m);
                }
            }
            Err(e) => failure = Some(e),
        }
    }
    match best {
        Some(m) => result_from(&m, g_norm),
        None => Err(failure.expect("at least one start")),
    }
}

/// Disk reproducing `g = Λ_D(cos θ)` exactly.
///
/// Concentric data (only the first mode) is inverted in closed form,
/// `R² = (λ - σ₁)/(μ(λ + σ₁))` with `λ = c₁(g)/c₁(cos)`; otherwise the misfit
/// is driven to zero from coarse starting points.
pub fn recover_disk_exact(g: &FourierSeries, cond: &Conductivities, opts: &FitOptions) -> Result<IdentificationResult> {
    let g_norm = check_data(g)?;
    let mu = cond.mu();
    if mu == 0.0 {
        return Err(Error::Degenerate("equal conductivities make every inclusion invisible".into()));
    }
    let c1 = g.coeff(1);
    let higher: f64 = (2..=g.degree() as i64).map(|n| g.coeff(n).norm_sqr() / n as f64).sum::<f64>().sqrt();
    if higher <= 1e-12 * g_norm && c1.im.abs() <= 1e-12 * g_norm {
        let lambda = 2.0 * c1.re;
        let s1 = cond.sigma1();
        let r2 = (lambda - s1) / (mu * (lambda + s1));
        if r2.abs() < opts.degenerate_radius.powi(2) {
            return Err(Error::Degenerate(format!(
                "data match the empty inclusion (R² = {r2:.3e})"
            )));
        }
        if r2 > 0.0 && r2 < 1.0 {
            let min = Minimum {
                x: [0.0, 0.0, r2.sqrt()],
                objective: 0.0,
                iterations: 0,
            };
            let mut result = result_from(&min, g_norm)?;
            let model = disk_neumann(Complex64::new(0.0, 0.0), result.radius, cond, g.degree())?;
            result.residual = (&model - g).sobolev_norm(SobolevIndex::MINUS_HALF);
            result.relative_residual = result.residual / g_norm;
            return Ok(result);
        }
    }
    let result = fit_disk(g, cond, None, opts)?;
    if result.radius < opts.degenerate_radius {
        return Err(Error::Degenerate(format!(
            "best disk shrinks to radius {:.3e}",
            result.radius
        )));
    }
    if result.relative_residual > opts.no_disk_threshold {
        return Err(Error::NoDiskFound {
            relative_residual: result.relative_residual,
            candidate: Box::new(result),
        });
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub eps: f64,
    pub symdiff: f64,
    pub residual: f64,
    pub b_re: f64,
    pub b_im: f64,
    #[serde(rename = "R")]
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    /// Log-log fit of the symmetric difference against `ε` over rows with
    /// `ε > 0`.
    pub fit: Option<LinearFit>,
}

/// One row of the stability experiment: data of `R - εδ` are fitted by a disk
/// and the fit is compared with the true inclusion.
pub fn stability_row(
    shape: &FourierSeries,
    radius: f64,
    eps: f64,
    cond: &Conductivities,
    dtn: &DtnOptions,
    fit: &FitOptions,
) -> Result<StabilityRow> {
    let inclusion = PerturbedDiskSpec::new(radius, shape.clone(), eps)?;
    let g = dtn_perturbed_disk(&inclusion, &FourierSeries::cosine(1, 1.0), cond, dtn)?.neumann;
    let fitted = fit_disk(&g, cond, None, fit)?;
    let symdiff = symmetric_difference_area(&Region::Perturbed(inclusion), &Region::Disk(fitted.disk))?;
    Ok(StabilityRow {
        eps,
        symdiff,
        residual: fitted.residual,
        b_re: fitted.b.re,
        b_im: fitted.b.im,
        radius: fitted.radius,
    })
}

pub fn stability_experiment(
    shape: &FourierSeries,
    radius: f64,
    eps_grid: &[f64],
    cond: &Conductivities,
    dtn: &DtnOptions,
    fit: &FitOptions,
) -> Result<StabilityReport> {
    let rows = eps_grid
        .iter()
        .map(|&eps| stability_row(shape, radius, eps, cond, dtn, fit))
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityReport {
        fit: stability_fit(&rows),
        rows,
    })
}

pub fn stability_fit(rows: &[StabilityRow]) -> Option<LinearFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r.eps > 0.0).map(|r| (r.eps, r.symdiff)).unzip();
    loglog_fit(&x, &y).ok()
}
