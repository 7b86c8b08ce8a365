//! Dirichlet-to-Neumann maps of disk and perturbed-disk inclusions.
//!
//! The perturbed problem is transplanted to the annulus `ρ < |w| < 1` by the
//! exterior conformal map and to the disk `|w| < ρ` by the interior one. The
//! two meet on `|w| = ρ` through the circle map `ξ`, and the exterior trace
//! `h` there solves the interface equation `T_ξ h = b`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle_map::CircleMap;
use crate::conformal::{interface_map, ConformalOptions, InterfaceMap};
use crate::error::{invalid, Error, Result};
use crate::fourier::{FourierSeries, SobolevIndex};
use crate::geometry::{Domain, PerturbedDiskSpec};

/// Background conductivity `σ₁` (outside the inclusion) and inclusion
/// conductivity `σ₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conductivities {
    sigma1: f64,
    sigma2: f64,
}

impl Conductivities {
    pub fn new(sigma1: f64, sigma2: f64) -> Result<Self> {
        if !(sigma1 > 0.0 && sigma1.is_finite() && sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(invalid(format!(
                "conductivities must be positive, got σ₁ = {sigma1}, σ₂ = {sigma2}"
            )));
        }
        Ok(Self { sigma1, sigma2 })
    }

    /// Unit background with the inclusion conductivity giving contrast `mu`.
    pub fn from_contrast(mu: f64) -> Result<Self> {
        if !(mu > -1.0 && mu < 1.0) {
            return Err(invalid(format!("contrast must lie in (-1, 1), got {mu}")));
        }
        Self::new(1.0, (1.0 + mu) / (1.0 - mu))
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `μ = (σ₂ - σ₁)/(σ₂ + σ₁)`.
    pub fn mu(&self) -> f64 {
        (self.sigma2 - self.sigma1) / (self.sigma2 + self.sigma1)
    }

    /// `σ₁/σ₂`.
    pub fn ratio(&self) -> f64 {
        self.sigma1 / self.sigma2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DtnMethod {
    ClosedForm,
    Transplant,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtnMeta {
    pub method: DtnMethod,
    /// Inner radius of the annulus (or the disk radius for the closed form).
    pub rho: Option<f64>,
    pub residual: Option<f64>,
    pub iterations: Option<usize>,
    pub contraction: Option<f64>,
    pub xi_distance: Option<f64>,
}

impl DtnMeta {
    fn closed_form(rho: f64) -> Self {
        Self {
            method: DtnMethod::ClosedForm,
            rho: Some(rho),
            residual: None,
            iterations: None,
            contraction: None,
            xi_distance: None,
        }
    }

    pub fn oracle(residual: f64, iterations: usize) -> Self {
        Self {
            method: DtnMethod::Oracle,
            rho: None,
            residual: Some(residual),
            iterations: Some(iterations),
            contraction: None,
            xi_distance: None,
        }
    }
}

/// Neumann data `g = σ₁ ∂_n u` on the unit circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtnResult {
    pub neumann: FourierSeries,
    pub meta: DtnMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtnOptions {
    /// Truncation degree shared by every operator.
    pub degree: usize,
    /// Interface solve tolerance (`H^{-1/2}` residual).
    pub tol: f64,
    pub max_iter: usize,
    pub conformal: ConformalOptions,
}

impl Default for DtnOptions {
    fn default() -> Self {
        Self {
            degree: 128,
            tol: 1e-12,
            max_iter: 100,
            conformal: ConformalOptions::default(),
        }
    }
}

impl DtnOptions {
    pub fn with_degree(degree: usize) -> Self {
        Self {
            degree,
            conformal: ConformalOptions {
                degree,
                ..ConformalOptions::default()
            },
            ..Self::default()
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rho) {
        return Err(invalid(format!("radius must lie in [0, 1), got {rho}")));
    }
    Ok(())
}

fn abs(n: i64) -> f64 {
    n.unsigned_abs() as f64
}

/// Mode-`n` multiplier `|n| σ₁ (1 + μρ^{2|n|})/(1 - μρ^{2|n|})` of the
/// concentric disk of radius `rho`.
pub fn concentric_multiplier(n: i64, rho: f64, cond: &Conductivities) -> f64 {
    let q = rho.powi(2 * n.unsigned_abs() as i32);
    let mu = cond.mu();
    abs(n) * cond.sigma1() * (1.0 + mu * q) / (1.0 - mu * q)
}

/// DtN map of the concentric disk `B(0, ρ₁)`.
pub fn concentric_dtn(f: &FourierSeries, rho1: f64, cond: &Conductivities) -> Result<DtnResult> {
    check_rho(rho1)?;
    let neumann = f.multiplier(|n| Complex64::new(concentric_multiplier(n, rho1, cond), 0.0));
    Ok(DtnResult {
        neumann,
        meta: DtnMeta::closed_form(rho1),
    })
}

/// Harmonic function on `ρ < r < 1` equal to `fe` on `r = 1` and to `h` on
/// `r = ρ`, evaluated at `re^{iθ}`.
pub fn annulus_solution(fe: &FourierSeries, h: &FourierSeries, rho: f64, r: f64, theta: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(invalid(format!("annulus radius must lie in (0, 1), got {rho}")));
    }
    if !(r > rho && r < 1.0) {
        return Err(invalid(format!("r = {r} outside ({rho}, 1)")));
    }
    let d = fe.degree().max(h.degree()) as i64;
    let (f0, h0) = (fe.coeff(0).re, h.coeff(0).re);
    let mut value = Complex64::new(f0 + (h0 - f0) * r.ln() / rho.ln(), 0.0);
    for n in (-d..=d).filter(|&n| n != 0) {
        let k = n.unsigned_abs() as i32;
        let (rk, pk) = (r.powi(k), rho.powi(k));
        let term = (fe.coeff(n) * (rk - pk * pk / rk) + h.coeff(n) * pk * (1.0 / rk - rk)) / (1.0 - pk * pk);
        value += term * Complex64::from_polar(1.0, n as f64 * theta);
    }
    Ok(value.re)
}

/// `ξ'(θ) · Σ a_n e^{inξ(θ)}` truncated to `degree`, by sampling.
fn weighted_pullback(a: &FourierSeries, xi: &CircleMap, degree: usize) -> FourierSeries {
    let m = xi.mode_grid(a.degree(), degree);
    let grid = xi.evaluate_on_grid(m);
    let weights = xi.derivative_on_grid(m);
    let values: Vec<Complex64> = a
        .evaluate_many(&grid)
        .into_iter()
        .zip(weights)
        .map(|(v, w)| v * w)
        .collect();
    FourierSeries::from_grid(values, degree)
}

/// Gain `2(σ₁/σ₂)|n|ρ^{|n|}/(1 - ρ^{2|n|})` of the interface forcing.
fn forcing_gain(n: i64, rho: f64, cond: &Conductivities) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = rho.powi(n.unsigned_abs() as i32);
    2.0 * cond.ratio() * abs(n) * p / (1.0 - p * p)
}

/// Gain `|n|(σ₁/σ₂)(1 + ρ^{2|n|})/(1 - ρ^{2|n|})` of the exterior part of `T`.
fn exterior_gain(n: i64, rho: f64, cond: &Conductivities) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let q = rho.powi(2 * n.unsigned_abs() as i32);
    abs(n) * cond.ratio() * (1.0 + q) / (1.0 - q)
}

/// Diagonal gain of `T`: `|n|[1 + (σ₁/σ₂)(1 + ρ^{2|n|})/(1 - ρ^{2|n|})]`.
fn diagonal_gain(n: i64, rho: f64, cond: &Conductivities) -> f64 {
    abs(n) + exterior_gain(n, rho, cond)
}

fn check_annulus(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(invalid(format!("annulus radius must lie in (0, 1), got {rho}")));
    }
    Ok(())
}

/// Right-hand side `b = 2ξ'(σ₁/σ₂) Σ ρ^{|n|}|n|/(1 - ρ^{2|n|}) c_n(Fe) e^{inξ}`
/// of the interface equation, at the degree of `fe`.
pub fn interface_rhs(fe: &FourierSeries, rho: f64, xi: &CircleMap, cond: &Conductivities) -> Result<FourierSeries> {
    check_annulus(rho)?;
    let a = fe.multiplier(|n| Complex64::new(forcing_gain(n, rho, cond), 0.0));
    Ok(weighted_pullback(&a, xi, fe.degree()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterfaceVariant {
    /// `T_ξ`.
    Composed,
    /// `T`, the `ξ = Id` case.
    Diagonal,
}

/// `T_ξ h = Σ|n| c_n(h∘ξ) e^{inθ} + ξ'(σ₁/σ₂) Σ|n|(1+ρ^{2|n|})/(1-ρ^{2|n|}) c_n(h) e^{inξ}`
/// (or `T`), at the degree of `h`.
pub fn interface_operator(
    h: &FourierSeries,
    rho: f64,
    xi: &CircleMap,
    cond: &Conductivities,
    variant: InterfaceVariant,
) -> Result<FourierSeries> {
    check_annulus(rho)?;
    if variant == InterfaceVariant::Diagonal {
        return Ok(h.multiplier(|n| Complex64::new(diagonal_gain(n, rho, cond), 0.0)));
    }
    let degree = h.degree();
    let interior = h
        .compose_to(xi, degree, 2)?
        .multiplier(|n| Complex64::new(abs(n), 0.0));
    let a = h.multiplier(|n| Complex64::new(exterior_gain(n, rho, cond), 0.0));
    Ok(&interior + &weighted_pullback(&a, xi, degree))
}

/// Trace of the exterior transplant on `|w| = ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceTrace {
    pub h: FourierSeries,
    /// `‖T_ξ h - b‖_{H^{-1/2}}`.
    pub residual: f64,
    pub iterations: usize,
    /// Norm of the fixed-point perturbation on `H^{-1/2}`.
    pub contraction: f64,
}

/// Matrix of the interface perturbation on the modes `n ≠ 0`, `|n| <= degree`.
///
/// Composing `T_ξ h = b` with `ξ⁻¹` and dividing by `(ξ⁻¹)'` turns it into
/// `T h + (P - Λ₀) h = B Fe` where `B` is the `ξ = Id` forcing, `Λ₀` the
/// Laplace DtN map and `P h = (ξ⁻¹)' · [Λ₀(h∘ξ)]∘ξ⁻¹`. The returned matrix is
/// `P - Λ₀`.
fn perturbation_matrix(xi: &CircleMap, degree: usize) -> Result<DMatrix<Complex64>> {
    let inverse = xi.inverse_with_degree(xi.degree().max(degree), 1e-15)?;
    let mid = xi.band_limit(degree);
    let forward = xi.composition_matrix(degree, mid);
    let back = inverse.weighted_composition_matrix(mid, degree, true);
    let m = mid as i64;
    let mut scaled = forward;
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= Complex64::new(abs(i as i64 - m), 0.0);
    }
    let full = back * scaled;
    let d = degree as i64;
    let keep: Vec<usize> = (-d..=d).filter(|&n| n != 0).map(|n| (n + d) as usize).collect();
    let mut out = DMatrix::from_fn(keep.len(), keep.len(), |i, j| full[(keep[i], keep[j])]);
    for (i, &k) in keep.iter().enumerate() {
        out[(i, i)] -= Complex64::new(abs(k as i64 - d), 0.0);
    }
    Ok(out)
}

fn nonzero_modes(degree: usize) -> Vec<i64> {
    let d = degree as i64;
    (-d..=d).filter(|&n| n != 0).collect()
}

/// `‖(P - Λ₀) T⁻¹‖` on `H^{-1/2}`, the contraction factor of the fixed-point
/// iteration used by [`solve_interface`].
pub fn contraction_estimate(rho: f64, xi: &CircleMap, cond: &Conductivities, degree: usize) -> Result<f64> {
    check_annulus(rho)?;
    let e = perturbation_matrix(xi, degree)?;
    Ok(weighted_norm(&e, rho, cond, degree))
}

fn check_contraction(estimate: f64) -> Result<()> {
    if !(estimate < 1.0) {
        return Err(Error::PreconditionFailed(format!(
            "interface iteration is not a contraction (estimate {estimate:.3})"
        )));
    }
    Ok(())
}

fn weighted_norm(e: &DMatrix<Complex64>, rho: f64, cond: &Conductivities, degree: usize) -> f64 {
    let modes = nonzero_modes(degree);
    let x = DMatrix::from_fn(modes.len(), modes.len(), |i, j| {
        let (m, n) = (modes[i], modes[j]);
        e[(i, j)] * ((abs(n) / abs(m)).sqrt() / diagonal_gain(n, rho, cond))
    });
    x.singular_values().max()
}

/// Solves `T_ξ h = b(Fe)` with `c₀(h) = c₀(Fe)` by the fixed-point iteration
/// `h ← T⁻¹(B Fe - (P - Λ₀) h)` on the truncated space of `fe`.
pub fn solve_interface(
    fe: &FourierSeries,
    rho: f64,
    xi: &CircleMap,
    cond: &Conductivities,
    tol: f64,
    max_iter: usize,
) -> Result<InterfaceTrace> {
    check_annulus(rho)?;
    let degree = fe.degree();
    let modes = nonzero_modes(degree);
    let e = perturbation_matrix(xi, degree)?;
    let contraction = weighted_norm(&e, rho, cond, degree);
    check_contraction(contraction)?;
    let gain: Vec<f64> = modes.iter().map(|&n| diagonal_gain(n, rho, cond)).collect();
    let weight: Vec<f64> = modes.iter().map(|&n| abs(n).powf(-0.5)).collect();
    let forcing = DVector::from_iterator(
        modes.len(),
        modes.iter().map(|&n| fe.coeff(n) * forcing_gain(n, rho, cond)),
    );
    let norm = |v: &DVector<Complex64>| {
        v.iter()
            .zip(&weight)
            .map(|(c, w)| (c * w).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let mut h = DVector::from_iterator(modes.len(), forcing.iter().zip(&gain).map(|(b, g)| b / g));
    let mut iterations = 0;
    let mut residual;
    loop {
        let eh = &e * &h;
        let r = DVector::from_iterator(
            modes.len(),
            (0..modes.len()).map(|i| h[i] * gain[i] + eh[i] - forcing[i]),
        );
        residual = norm(&r);
        if residual < tol {
            break;
        }
        if iterations == max_iter {
            return Err(Error::Divergence {
                solver: "interface",
                iterations,
                residual,
            });
        }
        for i in 0..modes.len() {
            h[i] = (forcing[i] - eh[i]) / gain[i];
        }
        iterations += 1;
    }
    let mut trace = FourierSeries::zeros(degree);
    trace.set(0, fe.coeff(0));
    for (i, &n) in modes.iter().enumerate() {
        trace.set(n, h[i]);
    }
    let direct = &interface_operator(&trace, rho, xi, cond, InterfaceVariant::Composed)?
        - &interface_rhs(fe, rho, xi, cond)?;
    Ok(InterfaceTrace {
        h: trace,
        residual: direct.sobolev_norm(SobolevIndex::MINUS_HALF),
        iterations,
        contraction,
    })
}

/// Neumann data on `|w| = 1` of the annulus solution with traces `fe`, `h`:
/// `c_n = σ₁|n|/(1 - ρ^{2|n|}) [(1 + ρ^{2|n|}) c_n(Fe) - 2ρ^{|n|} c_n(h)]`.
pub fn transplanted_dtn(fe: &FourierSeries, h: &FourierSeries, rho: f64, cond: &Conductivities) -> Result<DtnResult> {
    check_annulus(rho)?;
    let d = fe.degree().max(h.degree()) as i64;
    let mut neumann = FourierSeries::zeros(d as usize);
    for n in (-d..=d).filter(|&n| n != 0) {
        let p = rho.powi(n.unsigned_abs() as i32);
        let q = p * p;
        let c = (fe.coeff(n) * (1.0 + q) - h.coeff(n) * (2.0 * p)) * (cond.sigma1() * abs(n) / (1.0 - q));
        neumann.set(n, c);
    }
    Ok(DtnResult {
        neumann,
        meta: DtnMeta {
            method: DtnMethod::Transplant,
            rho: Some(rho),
            residual: None,
            iterations: None,
            contraction: None,
            xi_distance: None,
        },
    })
}

/// Coefficients of `g` on `|z| = 1` from its transplant `Λᵗ = (g∘ψ)ψ'`:
/// `c_m(g) = (1/2π) ∫ Λᵗ(t) e^{-imψ(t)} dt`.
fn pull_back_flux(transplant: &FourierSeries, psi: &CircleMap, degree: usize) -> FourierSeries {
    let m = psi.mode_grid(degree, transplant.degree());
    let values = transplant.real_samples(m);
    let grid = psi.evaluate_on_grid(m);
    let d = degree as i64;
    let mut out = FourierSeries::zeros(degree);
    let mut acc = vec![Complex64::new(0.0, 0.0); degree + 1];
    for (&v, &s) in values.iter().zip(&grid) {
        let step = Complex64::from_polar(1.0, -s);
        let mut w = Complex64::new(v, 0.0);
        for a in acc.iter_mut() {
            *a += w;
            w *= step;
        }
    }
    for k in 0..=d {
        let c = acc[k as usize] / m as f64;
        out.set(k, c);
        out.set(-k, c.conj());
    }
    out
}

/// DtN map of a centered perturbed-disk inclusion, through the conformal
/// transplant and the interface equation. The result is truncated to
/// `opts.degree`.
pub fn dtn_perturbed_disk(
    inclusion: &PerturbedDiskSpec,
    f: &FourierSeries,
    cond: &Conductivities,
    opts: &DtnOptions,
) -> Result<DtnResult> {
    let map = interface_map(inclusion, &opts.conformal)?;
    dtn_with_map(&map, f, cond, opts)
}

/// As [`dtn_perturbed_disk`] with precomputed conformal data.
pub fn dtn_with_map(map: &InterfaceMap, f: &FourierSeries, cond: &Conductivities, opts: &DtnOptions) -> Result<DtnResult> {
    if !f.is_real(1e-12) {
        return Err(invalid("Dirichlet data must be real"));
    }
    let degree = opts.degree;
    let fe = f.compose_to(&map.psi_e, degree, 2)?.real_part();
    let trace = solve_interface(&fe, map.rho, &map.xi, cond, opts.tol, opts.max_iter)?;
    let transplant = transplanted_dtn(&fe, &trace.h, map.rho, cond)?.neumann.real_part();
    let mut neumann = pull_back_flux(&transplant, &map.psi_e, degree);
    neumann.set(0, Complex64::new(0.0, 0.0));
    Ok(DtnResult {
        neumann,
        meta: DtnMeta {
            method: DtnMethod::Transplant,
            rho: Some(map.rho),
            residual: Some(trace.residual),
            iterations: Some(trace.iterations),
            contraction: Some(trace.contraction),
            xi_distance: Some(map.xi_distance()),
        },
    })
}

/// DtN map of a Moebius-shifted inclusion: the centered problem is solved and
/// carried back by the boundary phase of the shift.
pub fn dtn_domain(domain: &Domain, f: &FourierSeries, cond: &Conductivities, opts: &DtnOptions) -> Result<DtnResult> {
    let mut meta = None;
    let neumann = domain.shift.transplant_dtn(f, opts.degree, |pulled| {
        let inner = DtnOptions {
            degree: pulled.degree(),
            conformal: ConformalOptions {
                degree: pulled.degree().max(opts.conformal.degree),
                ..opts.conformal
            },
            ..*opts
        };
        let r = dtn_perturbed_disk(&domain.inclusion, &pulled.real_part(), cond, &inner)?;
        meta = Some(r.meta);
        Ok(r.neumann)
    })?;
    let mut neumann = neumann.real_part();
    neumann.set(0, Complex64::new(0.0, 0.0));
    Ok(DtnResult {
        neumann,
        meta: meta.expect("inner solve ran"),
    })
}

/// `‖Λ_D(f) - Λ_B(f)‖_{H^{-1/2}}` with `B` the base disk of `D`.
pub fn dtn_error_norm(
    inclusion: &PerturbedDiskSpec,
    f: &FourierSeries,
    cond: &Conductivities,
    opts: &DtnOptions,
) -> Result<f64> {
    let perturbed = dtn_perturbed_disk(inclusion, f, cond, opts)?;
    Ok(error_against_base(&perturbed, inclusion, f, cond, opts.degree))
}

pub(crate) fn error_against_base(
    perturbed: &DtnResult,
    inclusion: &PerturbedDiskSpec,
    f: &FourierSeries,
    cond: &Conductivities,
    degree: usize,
) -> f64 {
    let base = f
        .resized(degree)
        .multiplier(|n| Complex64::new(concentric_multiplier(n, inclusion.radius(), cond), 0.0));
    (&perturbed.neumann - &base).sobolev_norm(SobolevIndex::MINUS_HALF)
}

/// One row of an ε-sweep of the DtN error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub error_hminushalf: f64,
    pub xi_w1inf: f64,
    pub rho: f64,
}

/// Evaluates the DtN error of `inclusion` scaled to each amplitude in `eps`.
pub fn dtn_error_row(
    inclusion: &PerturbedDiskSpec,
    eps: f64,
    f: &FourierSeries,
    cond: &Conductivities,
    opts: &DtnOptions,
) -> Result<SweepRow> {
    let scaled = inclusion.with_eps(eps)?;
    let map = interface_map(&scaled, &opts.conformal)?;
    let result = dtn_with_map(&map, f, cond, opts)?;
    Ok(SweepRow {
        eps,
        error_hminushalf: error_against_base(&result, &scaled, f, cond, opts.degree),
        xi_w1inf: map.xi_distance(),
        rho: map.rho,
    })
}
