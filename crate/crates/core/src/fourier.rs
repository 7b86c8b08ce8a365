//! Truncated Fourier series on the unit circle.
//!
//! A function on S^1 is stored through its coefficients `c_n`, `|n| <= N`,
//! with the convention `f(θ) = Σ c_n e^{inθ}` and
//! `c_n = (1/2π) ∫ f(θ) e^{-inθ} dθ`. Sample grids are always the equispaced
//! nodes `θ_j = 2πj/M`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::circle_map::CircleMap;
use crate::error::{invalid, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place unnormalized forward DFT, `X_k = Σ x_j e^{-2πijk/M}`.
pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(buf));
}

/// In-place unnormalized inverse DFT, `x_j = Σ X_k e^{2πijk/M}`.
pub(crate) fn fft_inverse(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()).process(buf));
}

/// Equispaced nodes `2πj/count`.
pub fn nodes(count: usize) -> Vec<f64> {
    (0..count)
        .map(|j| 2.0 * PI * j as f64 / count as f64)
        .collect()
}

/// Exponent `s` of the homogeneous Sobolev space `H^s(S^1)` (constants dropped).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub const HALF: SobolevIndex = SobolevIndex(0.5);
    pub const MINUS_HALF: SobolevIndex = SobolevIndex(-0.5);

    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(invalid(format!("Sobolev exponent must be finite, got {s}")));
        }
        Ok(Self(s))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Truncated complex Fourier expansion of degree `N` (coefficients `c_{-N..=N}`).
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    coeffs: Vec<Complex64>,
}

impl FourierSeries {
    /// Builds a series from `2N+1` coefficients ordered `c_{-N}, ..., c_N`.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len().is_multiple_of(2) {
            return Err(invalid(format!(
                "coefficient vector must have odd length 2N+1, got {}",
                coeffs.len()
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn zeros(degree: usize) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * degree + 1],
        }
    }

    pub fn constant(value: f64) -> Self {
        Self {
            coeffs: vec![Complex64::new(value, 0.0)],
        }
    }

    /// `amplitude · cos(kθ)` as a degree-`|k|` series.
    pub fn cosine(k: u32, amplitude: f64) -> Self {
        let mut s = Self::zeros(k as usize);
        if k == 0 {
            s.set(0, Complex64::new(amplitude, 0.0));
        } else {
            s.set(k as i64, Complex64::new(0.5 * amplitude, 0.0));
            s.set(-(k as i64), Complex64::new(0.5 * amplitude, 0.0));
        }
        s
    }

    /// `amplitude · sin(kθ)` as a degree-`|k|` series.
    pub fn sine(k: u32, amplitude: f64) -> Self {
        let mut s = Self::zeros(k as usize);
        if k > 0 {
            s.set(k as i64, Complex64::new(0.0, -0.5 * amplitude));
            s.set(-(k as i64), Complex64::new(0.0, 0.5 * amplitude));
        }
        s
    }

    /// The single mode `e^{ikθ}`.
    pub fn exponential(k: i64) -> Self {
        let mut s = Self::zeros(k.unsigned_abs() as usize);
        s.set(k, Complex64::new(1.0, 0.0));
        s
    }

    pub fn degree(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    /// Coefficient `c_n`; zero outside the stored range.
    pub fn coeff(&self, n: i64) -> Complex64 {
        let d = self.degree() as i64;
        if n.abs() > d {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(n + d) as usize]
        }
    }

    /// Sets `c_n`. Panics when `|n|` exceeds the degree.
    pub fn set(&mut self, n: i64, value: Complex64) {
        let d = self.degree() as i64;
        assert!(n.abs() <= d, "mode {n} outside degree {d}");
        self.coeffs[(n + d) as usize] = value;
    }

    /// Coefficients ordered `c_{-N}, ..., c_N`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Iterator over `(n, c_n)`.
    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let d = self.degree() as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (i as i64 - d, *c))
    }

    pub fn mean(&self) -> Complex64 {
        self.coeff(0)
    }

    /// Zero-padded or truncated copy of the given degree.
    pub fn resized(&self, degree: usize) -> Self {
        let mut out = Self::zeros(degree);
        let d = degree.min(self.degree()) as i64;
        for n in -d..=d {
            out.set(n, self.coeff(n));
        }
        out
    }

    /// Series from `2M` equispaced real samples; the result has degree `M-1`.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_complex_samples(&buf)
    }

    /// Complex counterpart of [`FourierSeries::from_samples`].
    pub fn from_complex_samples(samples: &[Complex64]) -> Result<Self> {
        if samples.is_empty() || !samples.len().is_multiple_of(2) {
            return Err(invalid(format!(
                "sample count must be even and positive, got {}",
                samples.len()
            )));
        }
        Ok(Self::from_grid(samples.to_vec(), samples.len() / 2 - 1))
    }

    /// Transform of an arbitrary-length grid, truncated to `degree`.
    /// Requires `samples.len() >= 2 * degree + 1`.
    pub(crate) fn from_grid(mut samples: Vec<Complex64>, degree: usize) -> Self {
        let m = samples.len();
        debug_assert!(m > 2 * degree);
        fft_forward(&mut samples);
        let scale = 1.0 / m as f64;
        let d = degree as i64;
        let coeffs = (-d..=d)
            .map(|n| samples[n.rem_euclid(m as i64) as usize] * scale)
            .collect();
        Self { coeffs }
    }

    pub(crate) fn from_real_grid(samples: &[f64], degree: usize) -> Self {
        Self::from_grid(
            samples.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            degree,
        )
    }

    /// Values at `count` equispaced nodes. Modes above the Nyquist limit alias.
    pub fn samples(&self, count: usize) -> Vec<Complex64> {
        assert!(count > 0, "sample count must be positive");
        let mut buf = vec![Complex64::new(0.0, 0.0); count];
        for (n, c) in self.modes() {
            buf[n.rem_euclid(count as i64) as usize] += c;
        }
        fft_inverse(&mut buf);
        buf
    }

    pub fn real_samples(&self, count: usize) -> Vec<f64> {
        self.samples(count).into_iter().map(|z| z.re).collect()
    }

    /// Exact evaluation of `Σ c_n e^{inθ}`.
    pub fn evaluate(&self, theta: f64) -> Complex64 {
        let d = self.degree();
        let z = Complex64::from_polar(1.0, theta);
        let zc = z.conj();
        let mut acc = self.coeffs[d];
        let mut zp = Complex64::new(1.0, 0.0);
        let mut zm = Complex64::new(1.0, 0.0);
        for k in 1..=d {
            zp *= z;
            zm *= zc;
            acc += self.coeffs[d + k] * zp + self.coeffs[d - k] * zm;
        }
        acc
    }

    pub fn evaluate_many(&self, points: &[f64]) -> Vec<Complex64> {
        points.iter().map(|&t| self.evaluate(t)).collect()
    }

    /// Applies the Fourier multiplier `c_n ↦ m(n) c_n`.
    pub fn multiplier(&self, m: impl Fn(i64) -> Complex64) -> Self {
        Self {
            coeffs: self.modes().map(|(n, c)| m(n) * c).collect(),
        }
    }

    /// Conjugate function: `c_n ↦ -i sgn(n) c_n`, constants annihilated.
    pub fn hilbert_transform(&self) -> Self {
        self.multiplier(|n| Complex64::new(0.0, -(n.signum() as f64)))
    }

    pub fn derivative(&self) -> Self {
        self.multiplier(|n| Complex64::new(0.0, n as f64))
    }

    /// `( Σ_{n≠0} |n|^{2s} |c_n|^2 )^{1/2}`.
    pub fn sobolev_norm(&self, s: SobolevIndex) -> f64 {
        let s = s.value();
        self.modes()
            .filter(|(n, _)| *n != 0)
            .map(|(n, c)| (n.unsigned_abs() as f64).powf(2.0 * s) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Square root of the Gagliardo double integral
    /// `(1/4π) ∬ |f(θ)-f(α)|² / |e^{iθ}-e^{iα}|² dθ dα`
    /// by the tensor trapezoid rule on a `resolution × resolution` grid.
    ///
    /// For trigonometric polynomials the integrand is itself a trigonometric
    /// polynomial, so the rule is exact once `resolution >= 4 · degree`.
    pub fn intrinsic_half_norm(&self, resolution: usize) -> Result<f64> {
        let d = self.degree();
        if resolution < 4 * d.max(1) {
            return Err(invalid(format!(
                "quadrature resolution {resolution} below 4 x degree {d}"
            )));
        }
        let m = resolution;
        let f = self.samples(m);
        let df = self.derivative().samples(m);
        let unit: Vec<Complex64> = nodes(m)
            .iter()
            .map(|&t| Complex64::from_polar(1.0, t))
            .collect();
        let mut total = 0.0;
        for j in 0..m {
            total += df[j].norm_sqr();
            for k in (j + 1)..m {
                total += 2.0 * (f[j] - f[k]).norm_sqr() / (unit[j] - unit[k]).norm_sqr();
            }
        }
        let h = 2.0 * PI / m as f64;
        Ok((total * h * h / (4.0 * PI)).sqrt())
    }

    /// `max_n |Im-part asymmetry|`: how far the series is from representing a real function.
    pub fn reality_defect(&self) -> f64 {
        let d = self.degree() as i64;
        (0..=d)
            .map(|n| (self.coeff(n) - self.coeff(-n).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.reality_defect() <= tol
    }

    /// Projects onto real functions, `c_n ← (c_n + conj(c_{-n}))/2`.
    pub fn real_part(&self) -> Self {
        let d = self.degree() as i64;
        let mut out = Self::zeros(d as usize);
        for n in -d..=d {
            out.set(n, 0.5 * (self.coeff(n) + self.coeff(-n).conj()));
        }
        out
    }

    /// `Σ |c_n|²`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn max_coeff_distance(&self, other: &Self) -> f64 {
        let d = self.degree().max(other.degree()) as i64;
        (-d..=d)
            .map(|n| (self.coeff(n) - other.coeff(n)).norm())
            .fold(0.0, f64::max)
    }

    /// `f ∘ ξ`, truncated to degree `oversample · N`.
    pub fn compose(&self, map: &CircleMap, oversample: usize) -> Result<Self> {
        if oversample < 2 {
            return Err(invalid(format!("oversample factor must be >= 2, got {oversample}")));
        }
        self.compose_to(map, oversample * self.degree().max(1), oversample)
    }

    /// `f ∘ ξ` sampled exactly at `2 · oversample · (degree + 1)` mapped nodes
    /// and truncated to `degree`.
    pub fn compose_to(&self, map: &CircleMap, degree: usize, oversample: usize) -> Result<Self> {
        if map.min_derivative() <= 0.0 {
            return Err(invalid("composition requires an orientation-preserving map"));
        }
        let m = 2 * oversample.max(1) * (degree + 1);
        let mapped: Vec<f64> = map.evaluate_on_grid(m);
        let values = self.evaluate_many(&mapped);
        Ok(Self::from_grid(values, degree))
    }
}

impl Add for &FourierSeries {
    type Output = FourierSeries;
    fn add(self, rhs: &FourierSeries) -> FourierSeries {
        let d = self.degree().max(rhs.degree()) as i64;
        let mut out = FourierSeries::zeros(d as usize);
        for n in -d..=d {
            out.set(n, self.coeff(n) + rhs.coeff(n));
        }
        out
    }
}

impl Sub for &FourierSeries {
    type Output = FourierSeries;
    fn sub(self, rhs: &FourierSeries) -> FourierSeries {
        self + &(-rhs)
    }
}

impl Neg for &FourierSeries {
    type Output = FourierSeries;
    fn neg(self) -> FourierSeries {
        self * -1.0
    }
}

impl Mul<f64> for &FourierSeries {
    type Output = FourierSeries;
    fn mul(self, rhs: f64) -> FourierSeries {
        FourierSeries {
            coeffs: self.coeffs.iter().map(|c| c * rhs).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    coeffs: Vec<[f64; 2]>,
}

impl Serialize for FourierSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SeriesRepr {
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FourierSeries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = SeriesRepr::deserialize(deserializer)?;
        let coeffs = repr
            .coeffs
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        FourierSeries::new(coeffs).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_real_series(rng: &mut impl Rng, degree: usize) -> FourierSeries {
        let mut s = FourierSeries::zeros(degree);
        s.set(0, c(rng.gen_range(-1.0..1.0), 0.0));
        for n in 1..=degree as i64 {
            let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            s.set(n, z);
            s.set(-n, z.conj());
        }
        s
    }

    #[test]
    fn cosine_samples_give_half_modes() {
        let samples: Vec<f64> = nodes(8).iter().map(|t| t.cos()).collect();
        let s = FourierSeries::from_samples(&samples).unwrap();
        assert_eq!(s.degree(), 3);
        for (n, z) in s.modes() {
            let expected = if n.abs() == 1 { 0.5 } else { 0.0 };
            assert_abs_diff_eq!(z.re, expected, epsilon = 1e-14);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn constant_samples() {
        let s = FourierSeries::from_samples(&[1.0; 6]).unwrap();
        assert_abs_diff_eq!(s.coeff(0).re, 1.0, epsilon = 1e-15);
        assert!(s.modes().filter(|(n, _)| *n != 0).all(|(_, z)| z.norm() < 1e-15));
    }

    #[test]
    fn two_mode_samples_match_quadrature() {
        let f = |t: f64| t.cos() + (2.0 * t).sin();
        let samples: Vec<f64> = nodes(16).iter().map(|&t| f(t)).collect();
        let s = FourierSeries::from_samples(&samples).unwrap();
        // direct midpoint quadrature of (1/2π)∫ f e^{-inθ} on a fine grid
        let q = 4000;
        for n in -3i64..=3 {
            let mut acc = c(0.0, 0.0);
            for j in 0..q {
                let t = 2.0 * PI * (j as f64 + 0.5) / q as f64;
                acc += f(t) * Complex64::from_polar(1.0, -(n as f64) * t);
            }
            acc /= q as f64;
            assert!((acc - s.coeff(n)).norm() < 1e-12, "mode {n}");
        }
        assert_abs_diff_eq!(s.coeff(2).im, -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(s.coeff(-2).im, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn odd_or_empty_samples_rejected() {
        assert!(FourierSeries::from_samples(&[]).is_err());
        assert!(FourierSeries::from_samples(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn evaluate_single_modes() {
        let s = FourierSeries::cosine(1, 1.0);
        assert_abs_diff_eq!(s.evaluate(0.0).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.evaluate(PI / 3.0).re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn evaluate_matches_oversampled_resampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_real_series(&mut rng, 8);
        // 10x oversampled grid, then band-limited interpolation back to points
        let fine = s.samples(170);
        let back = FourierSeries::from_grid(fine, 8);
        for _ in 0..100 {
            let t = rng.gen_range(0.0..2.0 * PI);
            assert!((s.evaluate(t) - back.evaluate(t)).norm() < 1e-12);
        }
    }

    #[test]
    fn hilbert_transform_examples() {
        let h = FourierSeries::cosine(1, 1.0).hilbert_transform();
        assert!(h.max_coeff_distance(&FourierSeries::sine(1, 1.0)) < 1e-15);
        let h0 = FourierSeries::constant(3.0).hilbert_transform();
        assert_eq!(h0.coeff(0), c(0.0, 0.0));
        let h2 = FourierSeries::sine(2, 1.0).hilbert_transform();
        assert!(h2.max_coeff_distance(&FourierSeries::cosine(2, -1.0)) < 1e-15);
    }

    #[test]
    fn derivative_examples() {
        let d = FourierSeries::cosine(1, 1.0).derivative();
        assert!(d.max_coeff_distance(&FourierSeries::sine(1, -1.0)) < 1e-15);
        assert!(FourierSeries::constant(2.0).derivative().energy() < 1e-30);
    }

    #[test]
    fn hilbert_commutes_with_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_real_series(&mut rng, 16);
        let a = u.derivative().hilbert_transform();
        let b = u.hilbert_transform().derivative();
        assert!(a.max_coeff_distance(&b) < 1e-12);
    }

    #[test]
    fn sobolev_norm_examples() {
        let cos = FourierSeries::cosine(1, 1.0);
        assert_abs_diff_eq!(cos.sobolev_norm(SobolevIndex::HALF), 0.5f64.sqrt(), epsilon = 1e-15);
        assert_eq!(FourierSeries::constant(4.0).sobolev_norm(SobolevIndex::HALF), 0.0);
        let e2 = FourierSeries::exponential(2);
        assert_abs_diff_eq!(
            e2.sobolev_norm(SobolevIndex::MINUS_HALF),
            0.5f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn intrinsic_norm_examples() {
        let e1 = FourierSeries::exponential(1);
        assert_abs_diff_eq!(e1.intrinsic_half_norm(16).unwrap(), PI.sqrt(), epsilon = 1e-12);
        let e2 = FourierSeries::exponential(2);
        assert_abs_diff_eq!(
            e2.intrinsic_half_norm(16).unwrap(),
            (2.0 * PI).sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            FourierSeries::constant(1.0).intrinsic_half_norm(8).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn intrinsic_norm_refuses_coarse_grids() {
        let s = FourierSeries::cosine(8, 1.0);
        assert!(s.intrinsic_half_norm(31).is_err());
        assert!(s.intrinsic_half_norm(32).is_ok());
    }

    #[test]
    fn compose_with_identity_and_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_real_series(&mut rng, 6);
        let same = s.compose(&CircleMap::identity(), 2).unwrap();
        assert!(same.resized(6).max_coeff_distance(&s) < 1e-12);
        let rotated = FourierSeries::cosine(1, 1.0)
            .compose(&CircleMap::rotation(PI / 2.0), 2)
            .unwrap();
        assert!(rotated.max_coeff_distance(&FourierSeries::sine(1, -1.0)) < 1e-12);
    }

    #[test]
    fn compose_rejects_small_oversampling() {
        let s = FourierSeries::cosine(1, 1.0);
        assert!(s.compose(&CircleMap::identity(), 1).is_err());
    }

    #[test]
    fn parseval_on_exact_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = random_real_series(&mut rng, 12);
        let samples = s.real_samples(26);
        let mean_square = samples.iter().map(|x| x * x).sum::<f64>() / 26.0;
        assert!((mean_square - s.energy()).abs() < 1e-12 * s.energy().max(1.0));
    }

    #[test]
    fn serde_round_trip() {
        let s = FourierSeries::cosine(2, 0.3);
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.starts_with("{\"coeffs\":"));
        let back: FourierSeries = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<FourierSeries>("{\"coeffs\":[[1,0],[0,0]]}").is_err());
    }

    proptest! {
        #[test]
        fn real_samples_give_conjugate_symmetric_round_trip(
            values in proptest::collection::vec(-10.0f64..10.0, 1..40)
        ) {
            let mut samples = values.clone();
            if samples.len() % 2 == 1 {
                samples.push(0.5);
            }
            let s = FourierSeries::from_samples(&samples).unwrap();
            prop_assert!(s.reality_defect() < 1e-12);
            // drop the Nyquist component before the round trip
            let clean = s.real_samples(samples.len());
            let again = FourierSeries::from_samples(&clean).unwrap();
            let back = again.real_samples(samples.len());
            let scale = clean.iter().fold(1.0f64, |a, x| a.max(x.abs()));
            for (a, b) in clean.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-12 * scale);
            }
        }

        #[test]
        fn hilbert_is_isometry_on_nonconstant_modes(seed in 0u64..500, s in -2.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_real_series(&mut rng, 10);
            let idx = SobolevIndex::new(s).unwrap();
            let a = u.sobolev_norm(idx);
            let b = u.hilbert_transform().sobolev_norm(idx);
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn rotation_preserves_sobolev_norms(seed in 0u64..500, angle in -3.0f64..3.0, s in -1.0f64..1.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_real_series(&mut rng, 6);
            let rotated = u.compose_to(&CircleMap::rotation(angle), 6, 2).unwrap();
            let idx = SobolevIndex::new(s).unwrap();
            prop_assert!((u.sobolev_norm(idx) - rotated.sobolev_norm(idx)).abs() < 1e-12);
        }

        #[test]
        fn intrinsic_matches_multiplier_norm(seed in 0u64..200, degree in 1usize..=16) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_real_series(&mut rng, degree);
            let intrinsic = u.intrinsic_half_norm(4 * degree).unwrap();
            let multiplier = u.sobolev_norm(SobolevIndex::HALF);
            let lhs = intrinsic * intrinsic;
            let rhs = PI * multiplier * multiplier;
            prop_assert!((lhs - rhs).abs() <= 1e-3 * rhs);
        }
    }
}
