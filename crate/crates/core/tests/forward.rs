use disktomo::conformal::{interface_map, theodorsen_first_order, theodorsen_solve, ConformalOptions};
use disktomo::dtn::{concentric_dtn, dtn_error_row, dtn_perturbed_disk, Conductivities, DtnOptions};
use disktomo::fit::loglog_fit;
use disktomo::geometry::PerturbedDiskSpec;
use disktomo::FourierSeries;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cos1() -> FourierSeries {
    FourierSeries::cosine(1, 1.0)
}

#[test]
fn unperturbed_pipeline_collapses_to_concentric_multiplier() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = DtnOptions::default();
    for _ in 0..20 {
        let r = rng.gen_range(0.15..0.7);
        let cond = Conductivities::from_contrast(rng.gen_range(-0.8..0.8)).unwrap();
        let mut f = FourierSeries::zeros(6);
        for n in 1..=6i64 {
            let c = num_complex::Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            f.set(n, c);
            f.set(-n, c.conj());
        }
        let inclusion = PerturbedDiskSpec::new(r, FourierSeries::cosine(3, 1.0), 0.0).unwrap();
        let a = dtn_perturbed_disk(&inclusion, &f, &cond, &opts).unwrap().neumann;
        let b = concentric_dtn(&f, r, &cond).unwrap().neumann;
        for n in 1..=6i64 {
            let rel = (a.coeff(n) - b.coeff(n)).norm() / b.coeff(n).norm();
            assert!(rel < 1e-10, "mode {n}: {rel:e}");
        }
    }
}

#[test]
fn dtn_error_scales_linearly_in_eps() {
    let cond = Conductivities::new(1.0, 2.0).unwrap();
    let opts = DtnOptions::default();
    let inclusion = PerturbedDiskSpec::new(0.4, FourierSeries::cosine(3, 1.0), 0.0).unwrap();
    let eps = [0.004, 0.008, 0.016, 0.032];
    let rows: Vec<_> = eps
        .iter()
        .map(|&e| dtn_error_row(&inclusion, e, &cos1(), &cond, &opts).unwrap())
        .collect();
    let errors: Vec<f64> = rows.iter().map(|r| r.error_hminushalf).collect();
    let fit = loglog_fit(&eps, &errors).unwrap();
    assert!((0.8..=1.5).contains(&fit.slope), "{fit:?}");
    assert!(fit.r_squared >= 0.98);

    let ratios: Vec<f64> = rows.iter().map(|r| r.xi_w1inf / r.eps).collect();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    assert!((hi - lo) / lo < 0.25, "{ratios:?}");
}

#[test]
fn theodorsen_remainder_is_quadratic() {
    let opts = ConformalOptions::default();
    let eps = [0.01, 0.02, 0.04];
    let gaps: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let d = PerturbedDiskSpec::new(0.5, FourierSeries::cosine(3, 1.0), e).unwrap();
            let exact = theodorsen_solve(&d, &opts).unwrap();
            let first = theodorsen_first_order(&d).unwrap();
            let diff = exact.displacement() - first.displacement();
            diff.real_samples(2048).iter().fold(0.0, |m: f64, v| m.max(v.abs()))
        })
        .collect();
    let fit = loglog_fit(&eps, &gaps).unwrap();
    assert!(fit.slope >= 1.9, "{fit:?} {gaps:?}");
}

#[test]
fn interface_map_distance_is_order_eps() {
    let opts = ConformalOptions::default();
    for eps in [0.01, 0.02] {
        let d = PerturbedDiskSpec::new(0.5, FourierSeries::cosine(3, 1.0), eps).unwrap();
        let map = interface_map(&d, &opts).unwrap();
        let ratio = map.xi_distance() / eps;
        assert!(ratio > 1.0 && ratio < 30.0, "{ratio}");
        assert!(map.rho > 0.45 && map.rho < 0.55);
    }
}
