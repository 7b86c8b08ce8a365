use disktomo::dtn::{concentric_dtn, dtn_domain, Conductivities, DtnOptions};
use disktomo::geometry::{DiskSpec, Domain};
use disktomo::identify::{fit_disk, recover_disk_exact, stability_experiment, FitOptions};
use disktomo::moebius::moebius_parameters;
use disktomo::FourierSeries;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_disk(rng: &mut ChaCha8Rng) -> DiskSpec {
    loop {
        let c = Complex64::from_polar(rng.gen_range(0.0..0.5), rng.gen_range(0.0..std::f64::consts::TAU));
        let r = rng.gen_range(0.1..0.4);
        if c.norm() + r < 0.85 {
            return DiskSpec::new(c, r).unwrap();
        }
    }
}

#[test]
fn round_trip_random_disks() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = FourierSeries::cosine(1, 1.0);
    let opts = DtnOptions::with_degree(64);
    for _ in 0..25 {
        let disk = random_disk(&mut rng);
        let cond = Conductivities::from_contrast(rng.gen_range(0.2..0.8) * if rng.gen() { 1.0 } else { -1.0 }).unwrap();
        let g = dtn_domain(&Domain::disk(&disk).unwrap(), &f, &cond, &opts).unwrap().neumann;
        let fit = recover_disk_exact(&g, &cond, &FitOptions::default()).unwrap();
        let (b, r) = moebius_parameters(disk.center(), disk.radius()).unwrap();
        let err = (fit.b - b).norm() + (fit.radius - r).abs();
        assert!(err < 1e-6, "{disk:?} -> {fit:?}");
        assert!(fit.relative_residual < 1e-8);
    }
}

#[test]
fn concentric_closed_form_is_exact() {
    let cond = Conductivities::new(1.0, 2.0).unwrap();
    let g = FourierSeries::cosine(1, 13.0 / 11.0);
    let fit = recover_disk_exact(&g, &cond, &FitOptions::default()).unwrap();
    assert!((fit.radius - 0.5).abs() < 1e-15);
    assert_eq!(fit.b, Complex64::new(0.0, 0.0));
}

#[test]
fn restarts_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cond = Conductivities::from_contrast(1.0 / 3.0).unwrap();
    let truth = DiskSpec::new(Complex64::new(0.25, -0.15), 0.3).unwrap();
    let g = dtn_domain(&Domain::disk(&truth).unwrap(), &FourierSeries::cosine(1, 1.0), &cond, &DtnOptions::with_degree(64))
        .unwrap()
        .neumann;
    let opts = FitOptions::default();
    for _ in 0..100 {
        let init = random_disk(&mut rng);
        let fit = fit_disk(&g, &cond, Some(&init), &opts).unwrap();
        let gap = (fit.disk.center() - truth.center()).norm() + (fit.disk.radius() - truth.radius()).abs();
        assert!(gap < 1e-6, "{init:?} -> {fit:?}");
    }
}

#[test]
fn stability_symdiff_tracks_eps() {
    let cond = Conductivities::from_contrast(1.0 / 3.0).unwrap();
    let eps = [0.005, 0.01, 0.02, 0.04];
    let report = stability_experiment(
        &FourierSeries::cosine(3, 1.0),
        0.4,
        &eps,
        &cond,
        &DtnOptions::with_degree(64),
        &FitOptions::default(),
    )
    .unwrap();
    let fit = report.fit.unwrap();
    assert!(fit.slope > 0.8 && fit.slope < 1.5, "{fit:?}");
    assert!(report.rows.windows(2).all(|w| w[0].symdiff <= w[1].symdiff));
}

#[test]
fn foreign_data_is_rejected() {
    let g = concentric_dtn(&FourierSeries::cosine(3, 1.0), 0.5, &Conductivities::new(1.0, 2.0).unwrap())
        .unwrap()
        .neumann;
    assert!(recover_disk_exact(&g, &Conductivities::new(1.0, 2.0).unwrap(), &FitOptions::default()).is_err());
}
