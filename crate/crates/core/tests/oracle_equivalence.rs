use disktomo::dtn::{concentric_dtn, dtn_domain, dtn_perturbed_disk, Conductivities, DtnOptions};
use disktomo::geometry::{DiskSpec, Domain, PerturbedDiskSpec};
use disktomo::oracle::{compare, fd_solve, OracleOptions};
use disktomo::{FourierSeries, SobolevIndex};
use num_complex::Complex64;

const S: SobolevIndex = SobolevIndex::MINUS_HALF;

#[test]
fn concentric_refinement() {
    let cond = Conductivities::new(1.0, 2.0).unwrap();
    let f = FourierSeries::cosine(1, 1.0);
    let domain = Domain::centered(PerturbedDiskSpec::disk(0.5).unwrap());
    let exact = concentric_dtn(&f, 0.5, &cond).unwrap();
    let errors: Vec<f64> = [128, 256]
        .iter()
        .map(|&n| compare(&fd_solve(&domain, &cond, &f, n, &OracleOptions::default()).unwrap(), &exact, S))
        .collect();
    let order = (errors[0] / errors[1]).log2();
    assert!(order > 1.5, "{errors:?}");
    assert!(errors[1] < 0.02 * exact.neumann.sobolev_norm(S));
}

#[test]
fn perturbed_disk_matches_spectral_solver() {
    let cond = Conductivities::from_contrast(1.0 / 3.0).unwrap();
    let f = FourierSeries::cosine(1, 1.0);
    let inclusion = PerturbedDiskSpec::new(0.5, FourierSeries::cosine(3, 1.0), 0.02).unwrap();
    let spectral = dtn_perturbed_disk(&inclusion, &f, &cond, &DtnOptions::default()).unwrap();
    let grid = fd_solve(&Domain::centered(inclusion), &cond, &f, 256, &OracleOptions::default()).unwrap();
    assert!(compare(&grid, &spectral, S) < 0.02 * spectral.neumann.sobolev_norm(S));
}

#[test]
fn shifted_disk_matches_transplant() {
    let cond = Conductivities::from_contrast(1.0 / 3.0).unwrap();
    let f = FourierSeries::cosine(1, 1.0);
    let disk = DiskSpec::new(Complex64::new(0.2, 0.1), 0.3).unwrap();
    let domain = Domain::disk(&disk).unwrap();
    let spectral = dtn_domain(&domain, &f, &cond, &DtnOptions::default()).unwrap();
    let grid = fd_solve(&domain, &cond, &f, 256, &OracleOptions::default()).unwrap();
    assert!(compare(&grid, &spectral, S) < 0.02 * spectral.neumann.sobolev_norm(S));
    assert!(grid.neumann.coeff(0).norm() < 1e-6);
}
