use disktomo::fit::spearman;
use disktomo::moebius::MoebiusMap;
use disktomo::precompose::{distortion_bench, norm_symmetry_check};
use disktomo::{CircleMap, FourierSeries, SobolevIndex};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn random_real(rng: &mut ChaCha8Rng, degree: usize) -> FourierSeries {
    let mut u = FourierSeries::zeros(degree);
    for n in 1..=degree as i64 {
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        u.set(n, c);
        u.set(-n, c.conj());
    }
    u
}

#[test]
fn intrinsic_and_multiplier_norms_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let degree = rng.gen_range(1..=16);
        let u = random_real(&mut rng, degree);
        let intrinsic = u.intrinsic_half_norm(256).unwrap();
        let multiplier = u.sobolev_norm(SobolevIndex::HALF);
        let rel = (intrinsic * intrinsic - PI * multiplier * multiplier).abs() / (PI * multiplier * multiplier);
        assert!(rel < 1e-3, "{rel}");
    }
}

#[test]
fn moebius_phase_preserves_half_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let b = Complex64::from_polar(rng.gen_range(0.0..0.5), rng.gen_range(0.0..2.0 * PI));
        let phase = MoebiusMap::new(b).unwrap().boundary_phase();
        let degree = rng.gen_range(1..=8);
        let u = random_real(&mut rng, degree);
        let composed = u.compose_to(&phase, 1024, 2).unwrap();
        let (a, c) = (u.sobolev_norm(SobolevIndex::HALF), composed.sobolev_norm(SobolevIndex::HALF));
        assert!((a - c).abs() < 1e-6 * a, "{a} {c}");
    }
}

#[test]
fn truncated_norm_gap_for_sine_map() {
    let xi = CircleMap::sine_perturbation(1, 0.1).unwrap();
    let (a, b) = norm_symmetry_check(&xi, 256).unwrap();
    assert!((a - b).abs() < 5e-2, "{a} {b}");
}

#[test]
fn basis_distortion_ratio_has_no_upward_trend() {
    let xi = CircleMap::sine_perturbation(1, 0.05).unwrap();
    let rows = distortion_bench(&xi, 0.25, 128).unwrap();
    let n: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ratio: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    assert!(spearman(&n, &ratio).unwrap() <= 0.2);
    assert!(ratio.iter().all(|r| r.is_finite() && *r < 1.0));
}
