//! Finite-difference solver for the transmission problem on a Cartesian grid.
//!
//! Shares nothing with the spectral code paths except `FourierSeries` for
//! input and output. Nodes strictly inside the unit disk are unknowns; rows
//! touching the outer circle use Shortley–Weller weights with the Dirichlet
//! value evaluated at the exact crossing point. Faces cut by the interface
//! get an anisotropic laminate conductivity built from the crossing fraction
//! and the interface normal.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dtn::{Conductivities, DtnResult};
use crate::error::{invalid, Error, Result};
use crate::fourier::{FourierSeries, SobolevIndex};
use crate::geometry::Domain;

/// Boundary angles used for Neumann extraction and the interface trace.
pub const EXTRACTION_ANGLES: usize = 256;

const MIN_GRID: usize = 64;
const MIN_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 50_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridSolution {
    /// Cells per side of `[-1, 1]²`.
    pub grid_size: usize,
    /// `(grid_size + 1)²` node values, x index fastest, `NaN` off the disk.
    pub values: Vec<f64>,
    pub neumann: FourierSeries,
    pub interface_trace: Option<FourierSeries>,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    nx: usize,
    ny: usize,
    bbox: [f64; 4],
    dtype: String,
    order: String,
}

impl GridSolution {
    pub fn spacing(&self) -> f64 {
        2.0 / self.grid_size as f64
    }

    pub fn node(&self, i: usize, j: usize) -> f64 {
        self.values[j * (self.grid_size + 1) + i]
    }

    /// Extreme values over the computed nodes.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .filter(|v| !v.is_nan())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Bilinear interpolation; every corner must be a computed node.
    pub fn interpolate(&self, z: Complex64) -> Result<f64> {
        let h = self.spacing();
        let (px, py) = ((z.re + 1.0) / h, (z.im + 1.0) / h);
        let (i, j) = (px.floor(), py.floor());
        let (tx, ty) = (px - i, py - j);
        let (i, j) = (i as isize, j as isize);
        let mut out = 0.0;
        for (a, wx) in [(0, 1.0 - tx), (1, tx)] {
            for (b, wy) in [(0, 1.0 - ty), (1, ty)] {
                out += wx * wy * self.checked_node(i + a, j + b)?;
            }
        }
        Ok(out)
    }

    fn checked_node(&self, i: isize, j: isize) -> Result<f64> {
        let n = self.grid_size as isize;
        if i < 0 || j < 0 || i > n || j > n {
            return Err(invalid("interpolation point outside the grid"));
        }
        let v = self.node(i as usize, j as usize);
        if v.is_nan() {
            return Err(invalid("interpolation stencil leaves the disk"));
        }
        Ok(v)
    }

    /// Bicubic Lagrange interpolation on the 4×4 surrounding nodes.
    fn interpolate_cubic(&self, z: Complex64) -> Result<f64> {
        let h = self.spacing();
        let (px, py) = ((z.re + 1.0) / h, (z.im + 1.0) / h);
        let (i0, j0) = (px.floor() as isize - 1, py.floor() as isize - 1);
        let wx = lagrange4(px - (i0 + 1) as f64);
        let wy = lagrange4(py - (j0 + 1) as f64);
        let mut out = 0.0;
        for (a, wa) in wx.iter().enumerate() {
            for (b, wb) in wy.iter().enumerate() {
                out += wa * wb * self.checked_node(i0 + a as isize, j0 + b as isize)?;
            }
        }
        Ok(out)
    }

    /// Writes `<stem>.bin` (little-endian f64) and `<stem>.json`.
    pub fn write_raw(&self, stem: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
        let bin = stem.with_extension("bin");
        let json = stem.with_extension("json");
        let mut w = BufWriter::new(File::create(&bin)?);
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        let side = Sidecar {
            nx: self.grid_size + 1,
            ny: self.grid_size + 1,
            bbox: [-1.0, 1.0, -1.0, 1.0],
            dtype: "f64le".into(),
            order: "x-fastest, NaN outside the disk".into(),
        };
        std::fs::write(&json, serde_json::to_string_pretty(&side)?)?;
        Ok((bin, json))
    }
}

fn lagrange4(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

struct Csr {
    ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl Csr {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.ptr[r]..self.ptr[r + 1] {
                s += self.val[k] * x[self.col[k]];
            }
            *out = s;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.ptr.len() - 1)
            .map(|r| {
                (self.ptr[r]..self.ptr[r + 1])
                    .find(|&k| self.col[k] == r)
                    .map_or(0.0, |k| self.val[k])
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned BiCGSTAB; returns the relative residual and the
/// iteration count.
fn bicgstab(a: &Csr, b: &[f64], x: &mut [f64], opts: &OracleOptions) -> Result<(f64, usize)> {
    let n = b.len();
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    if inv_diag.iter().any(|d| !d.is_finite()) {
        return Err(Error::SolverFailure("zero diagonal entry".into()));
    }
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok((0.0, 0));
    }
    let mut r = vec![0.0; n];
    a.apply(x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut zs = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 1..=opts.max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new == 0.0 || omega == 0.0 {
            return Err(Error::SolverFailure(format!("BiCGSTAB breakdown at iteration {it}")));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = p[i] * inv_diag[i];
        }
        a.apply(&y, &mut v);
        alpha = rho / dot(&r0, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= opts.tol * bnorm {
            x.iter_mut().zip(&y).for_each(|(xi, yi)| *xi += alpha * yi);
            return Ok((norm(&s) / bnorm, it));
        }
        for i in 0..n {
            zs[i] = s[i] * inv_diag[i];
        }
        a.apply(&zs, &mut t);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * y[i] + omega * zs[i];
            r[i] = s[i] - omega * t[i];
        }
        let res = norm(&r) / bnorm;
        if !res.is_finite() {
            return Err(Error::SolverFailure("non-finite residual".into()));
        }
        if res <= opts.tol {
            return Ok((res, it));
        }
    }
    Err(Error::Divergence {
        solver: "bicgstab",
        iterations: opts.max_iter,
        residual: {
            let mut ax = vec![0.0; n];
            a.apply(x, &mut ax);
            ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt() / bnorm
        },
    })
}

/// Parameter in `[0, 1]` where the segment `a → b` leaves the unit disk.
fn circle_exit(a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let qa = d.norm_sqr();
    let qb = 2.0 * (a.re * d.re + a.im * d.im);
    let qc = a.norm_sqr() - 1.0;
    (-qb + (qb * qb - 4.0 * qa * qc).max(0.0).sqrt()) / (2.0 * qa)
}

/// Sign change of the level set along `a → b`, located by bisection.
fn interface_crossing(domain: &Domain, a: Complex64, b: Complex64) -> f64 {
    let inside_a = domain.level(a) < 0.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if (domain.level(a + (b - a) * mid) < 0.0) == inside_a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn level_normal(domain: &Domain, z: Complex64) -> Complex64 {
    let e = 1e-7;
    let gx = domain.level(z + e) - domain.level(z - e);
    let gy = domain.level(z + Complex64::new(0.0, e)) - domain.level(z - Complex64::new(0.0, e));
    let g = Complex64::new(gx, gy);
    g / g.norm()
}

/// Boundary points of the inclusion at equispaced parameter angles.
fn interface_points(domain: &Domain, count: usize) -> Vec<Complex64> {
    let back = domain.shift.inverse();
    (0..count)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / count as f64;
            back.forward(Complex64::from_polar(domain.inclusion.polar_radius(t), t))
        })
        .collect()
}

/// Solves `div(σ∇u) = 0` in the unit disk with `u = f` on the circle.
///
/// The interface trace is parametrized by the angle of `φ_b(z)` along the
/// inclusion boundary, which is the polar angle for centered inclusions.
pub fn fd_solve(
    inclusion: &Domain,
    cond: &Conductivities,
    f: &FourierSeries,
    grid_size: usize,
    opts: &OracleOptions,
) -> Result<GridSolution> {
    if grid_size < MIN_GRID {
        return Err(invalid(format!("grid size must be at least {MIN_GRID}, got {grid_size}")));
    }
    let n = grid_size;
    let h = 2.0 / n as f64;
    let outer = interface_points(inclusion, 4 * EXTRACTION_ANGLES)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if outer >= 1.0 - 12.0 * h {
        return Err(invalid(format!(
            "inclusion reaches radius {outer:.4}, too close to the boundary for this grid"
        )));
    }

    let stride = n + 1;
    let point = |i: usize, j: usize| Complex64::new(-1.0 + h * i as f64, -1.0 + h * j as f64);
    let mut index = vec![usize::MAX; stride * stride];
    let mut nodes = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            if point(i, j).norm() < 1.0 - 1e-12 {
                index[j * stride + i] = nodes.len();
                nodes.push((i, j));
            }
        }
    }
    let dirichlet = |z: Complex64| f.evaluate(z.arg()).re;
    let (s1, s2) = (cond.sigma1(), cond.sigma2());
    let sigma = |z: Complex64| if inclusion.level(z) < 0.0 { s2 } else { s1 };
    let h2 = h * h;

    let mut ptr = vec![0];
    let mut col = Vec::with_capacity(5 * nodes.len());
    let mut val = Vec::with_capacity(5 * nodes.len());
    let mut rhs = vec![0.0; nodes.len()];
    for (row, &(i, j)) in nodes.iter().enumerate() {
        let z = point(i, j);
        let mut diag = 0.0;
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(4);
        for axis in [(1isize, 0isize), (0, 1)] {
            // for each direction: Ok(neighbour row) or Err(boundary fraction)
            let mut side = [(Err(0.0), 0.0, Complex64::new(0.0, 0.0)); 2];
            for (k, sgn) in [1isize, -1].into_iter().enumerate() {
                let (ii, jj) = (i as isize + sgn * axis.0, j as isize + sgn * axis.1);
                let q = point(ii as usize, jj as usize);
                let nb = index[jj as usize * stride + ii as usize];
                side[k] = if nb != usize::MAX {
                    (Ok(nb), 0.0, q)
                } else {
                    let t = circle_exit(z, q);
                    let zb = z + (q - z) * t;
                    (Err(t.max(MIN_FRACTION)), dirichlet(zb), q)
                };
            }
            if side.iter().all(|s| s.0.is_ok()) {
                for (nb, _, q) in side {
                    let sf = face_conductivity(inclusion, z, q, &sigma);
                    diag += sf / h2;
                    entries.push((nb.unwrap(), -sf / h2));
                }
            } else {
                let dist = |s: &Result<usize, f64>| match s {
                    Ok(_) => h,
                    Err(t) => t * h,
                };
                let (hp, hm) = (dist(&side[0].0), dist(&side[1].0));
                let wp = 2.0 * s1 / (hp * (hp + hm));
                let wm = 2.0 * s1 / (hm * (hp + hm));
                diag += wp + wm;
                for ((nb, fb, _), w) in side.into_iter().zip([wp, wm]) {
                    match nb {
                        Ok(nb) => entries.push((nb, -w)),
                        Err(_) => rhs[row] += w * fb,
                    }
                }
            }
        }
        col.push(row);
        val.push(diag);
        for (c, v) in entries {
            col.push(c);
            val.push(v);
        }
        ptr.push(col.len());
    }
    let matrix = Csr { ptr, col, val };

    let mut u = vec![0.0; nodes.len()];
    let (residual, iterations) = bicgstab(&matrix, &rhs, &mut u, opts)?;

    let mut values = vec![f64::NAN; stride * stride];
    for (k, &(i, j)) in nodes.iter().enumerate() {
        values[j * stride + i] = u[k];
    }
    let mut sol = GridSolution {
        grid_size: n,
        values,
        neumann: FourierSeries::constant(0.0),
        interface_trace: None,
        residual,
        iterations,
    };

    let d = 4.0 * h;
    let mut g = Vec::with_capacity(EXTRACTION_ANGLES);
    for k in 0..EXTRACTION_ANGLES {
        let th = 2.0 * PI * k as f64 / EXTRACTION_ANGLES as f64;
        let u1 = sol.interpolate_cubic(Complex64::from_polar(1.0 - d, th))?;
        let u2 = sol.interpolate_cubic(Complex64::from_polar(1.0 - 2.0 * d, th))?;
        g.push(s1 * (3.0 * dirichlet(Complex64::from_polar(1.0, th)) - 4.0 * u1 + u2) / (2.0 * d));
    }
    sol.neumann = FourierSeries::from_samples(&g)?;

    let trace = interface_points(inclusion, EXTRACTION_ANGLES)
        .into_iter()
        .map(|z| sol.interpolate(z))
        .collect::<Result<Vec<_>>>()?;
    sol.interface_trace = Some(FourierSeries::from_samples(&trace)?);
    Ok(sol)
}

/// Face conductivity between neighbouring nodes `a` and `b`.
fn face_conductivity(
    domain: &Domain,
    a: Complex64,
    b: Complex64,
    sigma: &impl Fn(Complex64) -> f64,
) -> f64 {
    let (sa, sb) = (sigma(a), sigma(b));
    if sa == sb {
        return sa;
    }
    let t = interface_crossing(domain, a, b);
    let series = 1.0 / (t / sa + (1.0 - t) / sb);
    let parallel = t * sa + (1.0 - t) * sb;
    let d = b - a;
    let nu = level_normal(domain, a + d * t);
    let c = (nu.re * d.re + nu.im * d.im).abs() / d.norm();
    c * c * series + (1.0 - c * c) * parallel
}

/// `‖g_ref - g_cand‖_{H^s}`.
pub fn compare(reference: &GridSolution, candidate: &DtnResult, s: SobolevIndex) -> f64 {
    let degree = reference.neumann.degree().min(candidate.neumann.degree());
    (&reference.neumann.resized(degree) - &candidate.neumann.resized(degree)).sobolev_norm(s)
}
