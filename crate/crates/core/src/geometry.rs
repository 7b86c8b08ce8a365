//! Inclusion geometry: disks, starlike perturbations of centered disks, and
//! symmetric-difference areas.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fourier::{nodes, FourierSeries};
use crate::moebius::{moebius_parameters, physical_disk, MoebiusMap};

/// A-priori constants of the admissible class: distance `delta0` from the
/// outer boundary and minimal radius `rho0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub delta0: f64,
    pub rho0: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            delta0: 0.1,
            rho0: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskSpec {
    center: Complex64,
    radius: f64,
}

impl DiskSpec {
    /// Disk strictly inside the unit disk.
    pub fn new(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !(center.norm() + radius < 1.0) {
            return Err(invalid(format!(
                "disk B({center}, {radius}) must lie strictly inside the unit disk"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn centered(radius: f64) -> Result<Self> {
        Self::new(Complex64::new(0.0, 0.0), radius)
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() < self.radius
    }

    /// Checks `|b| + R < 1 - δ₀` and `R >= ρ₀`.
    pub fn check_bounds(&self, bounds: &Bounds) -> Result<()> {
        if self.center.norm() + self.radius >= 1.0 - bounds.delta0 {
            return Err(invalid(format!(
                "disk reaches within {} of the outer boundary",
                bounds.delta0
            )));
        }
        if self.radius < bounds.rho0 {
            return Err(invalid(format!(
                "radius {} below the minimal radius {}",
                self.radius, bounds.rho0
            )));
        }
        Ok(())
    }

    /// Distance from the origin to the boundary along direction `θ`,
    /// defined when the disk contains the origin.
    pub fn polar_radius(&self, theta: f64) -> Option<f64> {
        if self.center.norm() >= self.radius {
            return None;
        }
        let e = Complex64::from_polar(1.0, theta);
        let p = (self.center.conj() * e).re;
        let q = (self.center.conj() * e).im;
        Some(p + (self.radius * self.radius - q * q).sqrt())
    }
}

/// Starlike domain `r(θ) = R - ε δ(θ)` around the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedDiskSpec {
    radius: f64,
    delta: FourierSeries,
    eps: f64,
    r: FourierSeries,
    dr: FourierSeries,
}

impl PerturbedDiskSpec {
    /// Polar description. `delta` must be real and the resulting radius
    /// positive; class membership is checked separately by
    /// [`PerturbedDiskSpec::check_bounds`].
    pub fn new(radius: f64, delta: FourierSeries, eps: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid(format!("radius must be positive, got {radius}")));
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(invalid(format!("eps must be nonnegative, got {eps}")));
        }
        if !delta.is_real(1e-12 * (1.0 + delta.energy().sqrt())) {
            return Err(invalid("perturbation must be real valued"));
        }
        let delta = delta.real_part();
        let r = &FourierSeries::constant(radius) - &(&delta * eps);
        let dr = r.derivative();
        let spec = Self {
            radius,
            delta,
            eps,
            r,
            dr,
        };
        if spec.min_radius() <= 0.0 {
            return Err(invalid("polar radius must stay positive"));
        }
        Ok(spec)
    }

    /// Unperturbed disk of the given radius.
    pub fn disk(radius: f64) -> Result<Self> {
        Self::new(radius, FourierSeries::constant(0.0), 0.0)
    }

    /// Normal-offset description `x + εδ(x)ν(x)`, converted to the polar form
    /// at first order (`δ_polar = -δ_normal`).
    pub fn from_normal_offset(radius: f64, delta_normal: FourierSeries, eps: f64) -> Result<Self> {
        Self::new(radius, -&delta_normal, eps)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn delta(&self) -> &FourierSeries {
        &self.delta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Same shape with another amplitude.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.radius, self.delta.clone(), eps)
    }

    /// Polar radius as a series, `R - εδ`.
    pub fn radius_series(&self) -> &FourierSeries {
        &self.r
    }

    pub fn polar_radius(&self, theta: f64) -> f64 {
        self.r.evaluate(theta).re
    }

    pub fn polar_radius_derivative(&self, theta: f64) -> f64 {
        self.dr.evaluate(theta).re
    }

    fn check_grid(&self) -> usize {
        (32 * self.delta.degree().max(1)).max(256)
    }

    pub fn min_radius(&self) -> f64 {
        self.r
            .real_samples(self.check_grid())
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_radius(&self) -> f64 {
        self.r
            .real_samples(self.check_grid())
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sup |r'/r|` on a grid of at least 32 nodes per mode of `δ`.
    pub fn delta_condition(&self) -> f64 {
        let m = self.check_grid();
        self.r
            .real_samples(m)
            .into_iter()
            .zip(self.dr.real_samples(m))
            .fold(0.0, |a, (r, dr)| a.max((dr / r).abs()))
    }

    /// Upper bound `Σ (1 + |n| + n²)|c_n|` for `‖εδ‖_{C²}`.
    pub fn c2_norm_estimate(&self) -> f64 {
        self.eps * c2_estimate(&self.delta)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.norm() < self.polar_radius(z.arg())
    }

    pub fn base(&self) -> DiskSpec {
        DiskSpec {
            center: Complex64::new(0.0, 0.0),
            radius: self.radius,
        }
    }

    /// Membership in the admissible class for the given a-priori bounds.
    pub fn check_bounds(&self, bounds: &Bounds) -> Result<()> {
        let c2 = self.c2_norm_estimate();
        if c2 >= 1.0 {
            return Err(invalid(format!(
                "perturbation C² norm estimate {c2:.3} is not below 1"
            )));
        }
        if self.max_radius() >= 1.0 - bounds.delta0 {
            return Err(invalid(format!(
                "inclusion reaches within {} of the outer boundary",
                bounds.delta0
            )));
        }
        if self.radius < bounds.rho0 {
            return Err(invalid(format!(
                "base radius {} below the minimal radius {}",
                self.radius, bounds.rho0
            )));
        }
        Ok(())
    }
}

fn c2_estimate(delta: &FourierSeries) -> f64 {
    delta
        .modes()
        .map(|(n, c)| {
            let a = n.unsigned_abs() as f64;
            (1.0 + a + a * a) * c.norm()
        })
        .sum()
}

/// Region whose symmetric differences can be measured.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Disk(DiskSpec),
    Perturbed(PerturbedDiskSpec),
}

impl Region {
    fn polar_radius(&self, theta: f64) -> Option<f64> {
        match self {
            Region::Disk(d) => d.polar_radius(theta),
            Region::Perturbed(p) => Some(p.polar_radius(theta)),
        }
    }
}

/// Number of quadrature nodes for starlike symmetric differences.
const SYMDIFF_NODES: usize = 1 << 16;

/// `|A Δ B|`: lens formula for two disks, otherwise
/// `(1/2)∫ |r_A² - r_B²| dθ` for domains starlike about the origin.
pub fn symmetric_difference_area(a: &Region, b: &Region) -> Result<f64> {
    if let (Region::Disk(p), Region::Disk(q)) = (a, b) {
        return Ok(disk_symmetric_difference(p, q));
    }
    let mut total = 0.0;
    for t in nodes(SYMDIFF_NODES) {
        let (ra, rb) = match (a.polar_radius(t), b.polar_radius(t)) {
            (Some(ra), Some(rb)) => (ra, rb),
            _ => {
                return Err(Error::UnsupportedGeometry(
                    "disk does not contain the origin, so it is not starlike about it".into(),
                ))
            }
        };
        total += (ra * ra - rb * rb).abs();
    }
    Ok(0.5 * total * 2.0 * PI / SYMDIFF_NODES as f64)
}

fn disk_symmetric_difference(p: &DiskSpec, q: &DiskSpec) -> f64 {
    let (r1, r2) = (p.radius, q.radius);
    let d = (p.center - q.center).norm();
    let intersection = if d >= r1 + r2 {
        0.0
    } else if d <= (r1 - r2).abs() {
        PI * r1.min(r2).powi(2)
    } else {
        let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
        let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
        let k = ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).max(0.0);
        r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * k.sqrt()
    };
    p.area() + q.area() - 2.0 * intersection
}

/// An inclusion given by a centered starlike domain in the coordinates
/// `w = φ_b(z)`; the physical inclusion is its preimage under `φ_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub shift: MoebiusMap,
    pub inclusion: PerturbedDiskSpec,
}

impl Domain {
    pub fn centered(inclusion: PerturbedDiskSpec) -> Self {
        Self {
            shift: MoebiusMap::identity(),
            inclusion,
        }
    }

    /// Physical disk `B(center, radius)`.
    pub fn disk(disk: &DiskSpec) -> Result<Self> {
        let (b, r) = moebius_parameters(disk.center(), disk.radius())?;
        Ok(Self {
            shift: MoebiusMap::new(b)?,
            inclusion: PerturbedDiskSpec::disk(r)?,
        })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.inclusion.contains(self.shift.forward(z))
    }

    /// Physical image of the unperturbed base disk.
    pub fn base_disk(&self) -> DiskSpec {
        let (c, r) = physical_disk(self.shift.b(), self.inclusion.radius());
        DiskSpec {
            center: c,
            radius: r,
        }
    }

    /// Level-set function, negative inside: `|w| - r(arg w)` with `w = φ_b(z)`.
    pub fn level(&self, z: Complex64) -> f64 {
        let w = self.shift.forward(z);
        w.norm() - self.inclusion.polar_radius(w.arg())
    }
}

/// JSON description of an inclusion: the physical base disk, the polar
/// perturbation and its amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub center: [f64; 2],
    pub radius: f64,
    #[serde(default = "zero_series")]
    pub delta: FourierSeries,
    #[serde(default)]
    pub eps: f64,
}

fn zero_series() -> FourierSeries {
    FourierSeries::constant(0.0)
}

impl DomainSpec {
    pub fn to_domain(&self) -> Result<Domain> {
        let center = Complex64::new(self.center[0], self.center[1]);
        let (b, r) = moebius_parameters(center, self.radius)?;
        Ok(Domain {
            shift: MoebiusMap::new(b)?,
            inclusion: PerturbedDiskSpec::new(r, self.delta.clone(), self.eps)?,
        })
    }

    pub fn from_domain(domain: &Domain) -> Self {
        let base = domain.base_disk();
        Self {
            center: [base.center.re, base.center.im],
            radius: base.radius,
            delta: domain.inclusion.delta().clone(),
            eps: domain.inclusion.eps(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn polar_radius_examples() {
        let s = PerturbedDiskSpec::disk(0.4).unwrap();
        assert_eq!(s.polar_radius(1.1), 0.4);
        let s = PerturbedDiskSpec::new(1.0, FourierSeries::cosine(1, 1.0), 0.05).unwrap();
        assert_abs_diff_eq!(s.polar_radius(0.0), 0.95, epsilon = 1e-15);
        let s = PerturbedDiskSpec::new(0.5, FourierSeries::cosine(3, 1.0), 0.02).unwrap();
        assert_abs_diff_eq!(s.polar_radius(PI / 6.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn construction_checks() {
        assert!(PerturbedDiskSpec::new(-0.1, FourierSeries::constant(0.0), 0.0).is_err());
        assert!(PerturbedDiskSpec::new(0.5, FourierSeries::cosine(1, 1.0), -0.1).is_err());
        assert!(PerturbedDiskSpec::new(0.05, FourierSeries::cosine(1, 0.3), 0.5).is_err());
        let mut complex = FourierSeries::zeros(1);
        complex.set(1, c(0.1, 0.0));
        assert!(PerturbedDiskSpec::new(0.5, complex, 0.1).is_err());
    }

    #[test]
    fn normal_offset_flips_sign() {
        let s = PerturbedDiskSpec::from_normal_offset(0.5, FourierSeries::cosine(2, 0.1), 0.1).unwrap();
        assert_abs_diff_eq!(s.polar_radius(0.0), 0.51, epsilon = 1e-15);
    }

    #[test]
    fn delta_condition_examples() {
        assert_eq!(PerturbedDiskSpec::disk(0.5).unwrap().delta_condition(), 0.0);
        // r = 1 - 0.05 cos θ: sup of 0.05|sin θ|/(1 - 0.05 cos θ), stationary where
        // cos θ = 0.05, giving 0.05 / sqrt(1 - 0.05²)
        let s = PerturbedDiskSpec::new(1.0, FourierSeries::cosine(1, 1.0), 0.05).unwrap();
        let exact = 0.05 / (1.0f64 - 0.0025).sqrt();
        let v = s.delta_condition();
        assert!(v <= exact + 1e-15 && v > exact - 1e-4, "{v} vs {exact}");
        // r = 1 - 0.1 cos 4θ: brute-force maximization on a much finer grid
        let s = PerturbedDiskSpec::new(1.0, FourierSeries::cosine(4, 0.2), 0.5).unwrap();
        let brute = (0..200_000)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / 200_000.0;
                (0.4 * (4.0 * t).sin() / (1.0 - 0.1 * (4.0 * t).cos())).abs()
            })
            .fold(0.0, f64::max);
        assert!((s.delta_condition() - brute).abs() < 2e-3 * brute);
    }

    #[test]
    fn bounds_checks() {
        let bounds = Bounds::default();
        assert!(DiskSpec::new(c(0.5, 0.0), 0.3).unwrap().check_bounds(&bounds).is_ok());
        assert!(DiskSpec::new(c(0.6, 0.0), 0.35).unwrap().check_bounds(&bounds).is_err());
        assert!(DiskSpec::centered(0.05).unwrap().check_bounds(&bounds).is_err());
        assert!(DiskSpec::new(c(0.6, 0.0), 0.5).is_err());
        let s = PerturbedDiskSpec::new(0.85, FourierSeries::cosine(3, 0.1), 0.5).unwrap();
        assert!(s.check_bounds(&bounds).is_err());
        // C² estimate (1 + 1 + 1) · 0.4 ≥ 1
        let s = PerturbedDiskSpec::new(0.5, FourierSeries::cosine(1, 1.0), 0.4).unwrap();
        assert!(s.check_bounds(&bounds).is_err());
        let s = PerturbedDiskSpec::new(0.5, FourierSeries::cosine(3, 1.0), 0.02).unwrap();
        assert!(s.check_bounds(&bounds).is_ok());
    }

    #[test]
    fn symmetric_difference_examples() {
        let a = Region::Disk(DiskSpec::centered(0.3).unwrap());
        assert_eq!(symmetric_difference_area(&a, &a).unwrap(), 0.0);
        let b = Region::Disk(DiskSpec::centered(0.4).unwrap());
        assert_abs_diff_eq!(
            symmetric_difference_area(&a, &b).unwrap(),
            PI * (0.16 - 0.09),
            epsilon = 1e-14
        );
        // lens formula, cross-checked against the starlike quadrature
        let d = Region::Disk(DiskSpec::new(c(0.01, 0.0), 0.3).unwrap());
        let lens = symmetric_difference_area(&a, &d).unwrap();
        let r = 0.3f64;
        let inter = 2.0 * r * r * (0.01 / (2.0 * r)).acos() - 0.005 * (4.0 * r * r - 1e-4).sqrt();
        assert_abs_diff_eq!(lens, 2.0 * PI * r * r - 2.0 * inter, epsilon = 1e-14);
        assert_abs_diff_eq!(lens, 0.012, epsilon = 1e-5);
        let pa = Region::Perturbed(PerturbedDiskSpec::disk(0.3).unwrap());
        let quad = symmetric_difference_area(&pa, &d).unwrap();
        assert!((quad - lens).abs() < 1e-8);
    }

    #[test]
    fn symmetric_difference_rejects_disks_missing_the_origin() {
        let a = Region::Disk(DiskSpec::new(c(0.5, 0.0), 0.2).unwrap());
        let b = Region::Perturbed(PerturbedDiskSpec::disk(0.3).unwrap());
        assert!(matches!(
            symmetric_difference_area(&a, &b),
            Err(Error::UnsupportedGeometry(_))
        ));
    }

    #[test]
    fn perturbation_area_scales_linearly() {
        let base = Region::Perturbed(PerturbedDiskSpec::disk(0.4).unwrap());
        let mut ratios = Vec::new();
        for eps in [0.005, 0.01, 0.02] {
            let p = PerturbedDiskSpec::new(0.4, FourierSeries::cosine(3, 1.0), eps).unwrap();
            let area = symmetric_difference_area(&Region::Perturbed(p), &base).unwrap();
            // (1/2)∫|2Rεδ - ε²δ²| ≈ R ε ∫|cos 3θ| = 4Rε
            ratios.push(area / (4.0 * 0.4 * eps));
        }
        for r in ratios {
            assert!((r - 1.0).abs() < 0.03, "{r}");
        }
    }

    #[test]
    fn domain_round_trip_through_json() {
        let text = r#"{"center":[0.2,0.1],"radius":0.3,"delta":{"coeffs":[[0.5,0],[0,0],[0.5,0]]},"eps":0.01}"#;
        let spec: DomainSpec = serde_json::from_str(text).unwrap();
        let domain = spec.to_domain().unwrap();
        let back = DomainSpec::from_domain(&domain);
        assert!((back.center[0] - 0.2).abs() < 1e-13);
        assert!((back.radius - 0.3).abs() < 1e-13);
        assert_eq!(back.eps, 0.01);
        assert!(serde_json::from_str::<DomainSpec>(r#"{"center":[0,0],"radius":0.3,"extra":1}"#).is_err());
        let plain: DomainSpec = serde_json::from_str(r#"{"center":[0,0],"radius":0.3}"#).unwrap();
        assert_eq!(plain.eps, 0.0);
    }

    #[test]
    fn domain_membership_matches_physical_disk() {
        let disk = DiskSpec::new(c(0.2, -0.3), 0.25).unwrap();
        let domain = Domain::disk(&disk).unwrap();
        for j in 0..40 {
            for k in 1..10 {
                let z = Complex64::from_polar(0.1 * k as f64, 0.157 * j as f64);
                let dist = ((z - disk.center()).norm() - disk.radius()).abs();
                if dist > 1e-9 {
                    assert_eq!(domain.contains(z), disk.contains(z));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn symmetric_difference_is_a_metric(
            e1 in 0.0f64..0.05, e2 in 0.0f64..0.05, e3 in 0.0f64..0.05,
            k1 in 1u32..5, k2 in 1u32..5,
        ) {
            let a = Region::Perturbed(PerturbedDiskSpec::new(0.4, FourierSeries::cosine(k1, 1.0 / 3.0), e1).unwrap());
            let b = Region::Perturbed(PerturbedDiskSpec::new(0.42, FourierSeries::sine(k2, 1.0 / 3.0), e2).unwrap());
            let cc = Region::Perturbed(PerturbedDiskSpec::new(0.38, FourierSeries::cosine(2, 1.0 / 3.0), e3).unwrap());
            let ab = symmetric_difference_area(&a, &b).unwrap();
            let ba = symmetric_difference_area(&b, &a).unwrap();
            let bc = symmetric_difference_area(&b, &cc).unwrap();
            let ac = symmetric_difference_area(&a, &cc).unwrap();
            prop_assert!((ab - ba).abs() < 1e-14);
            prop_assert!(ac <= ab + bc + 1e-12);
        }
    }
}
