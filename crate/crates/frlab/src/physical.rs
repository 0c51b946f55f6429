//! Physical-space evaluation on the torus: velocity, gradient, strain and
//! vorticity by direct mode summation, enstrophy identities and the
//! mollified vortex sheet.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::FieldError;
use crate::evolve::{GalerkinSystem, OdeSystem, Trajectory};
use crate::field::{weight, SpectralField};
use crate::lattice::Frequency;

pub type Mat3 = [[f64; 3]; 3];

/// A real divergence-free field given by its modes on a half space; the
/// partner at −k is the complex conjugate.
#[derive(Clone, Debug)]
pub struct GeneralSpectralField {
    pub modes: Vec<(Frequency, [Complex64; 3])>,
}

const DIV_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModeEntry {
    pub k: [i64; 3],
    pub re: [f64; 3],
    pub im: [f64; 3],
}

/// JSON form of a [`GeneralSpectralField`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GeneralFieldFile {
    pub modes: Vec<ModeEntry>,
}

impl GeneralSpectralField {
    pub fn new(modes: Vec<(Frequency, [Complex64; 3])>) -> Result<Self, FieldError> {
        let mut seen = std::collections::HashSet::new();
        for (k, u) in &modes {
            if k.is_zero() {
                return Err(FieldError::Invalid("mean mode is not allowed".into()));
            }
            if !seen.insert(*k) || seen.contains(&k.neg()) {
                return Err(FieldError::Invalid(format!("frequency {k} listed twice (up to sign)")));
            }
            let kf = k.as_f64();
            let div: Complex64 = (0..3).map(|i| u[i] * kf[i]).sum();
            let scale = (0..3).map(|i| u[i].norm()).sum::<f64>() * kf.iter().map(|x| x.abs()).fold(0.0, f64::max);
            if div.norm() > DIV_TOL * scale.max(f64::MIN_POSITIVE) {
                return Err(FieldError::Invalid(format!("mode {k} is not divergence free")));
            }
        }
        Ok(GeneralSpectralField { modes })
    }

    pub fn from_spectral(f: &SpectralField) -> Self {
        let modes = f
            .table
            .members
            .iter()
            .enumerate()
            .filter(|(i, _)| f.amps[*i] != Complex64::new(0.0, 0.0))
            .map(|(i, m)| (m.k, f.velocity_hat(i)))
            .collect();
        GeneralSpectralField { modes }
    }

    pub fn to_file(&self) -> GeneralFieldFile {
        let modes = self
            .modes
            .iter()
            .map(|(k, u)| ModeEntry {
                k: [k.0[0] as i64, k.0[1] as i64, k.0[2] as i64],
                re: [u[0].re, u[1].re, u[2].re],
                im: [u[0].im, u[1].im, u[2].im],
            })
            .collect();
        GeneralFieldFile { modes }
    }

    pub fn from_file(file: &GeneralFieldFile) -> Result<Self, FieldError> {
        let modes = file
            .modes
            .iter()
            .map(|m| {
                let k = Frequency::new(m.k[0] as i128, m.k[1] as i128, m.k[2] as i128);
                (k, [0, 1, 2].map(|i| Complex64::new(m.re[i], m.im[i])))
            })
            .collect();
        Self::new(modes)
    }

    /// Largest |k_i| over all modes.
    pub fn bandwidth(&self) -> i128 {
        self.modes.iter().flat_map(|(k, _)| k.0.iter().map(|x| x.abs())).max().unwrap_or(0)
    }

    /// Value and gradient (∂_i u_j) at a point.
    pub fn evaluate(&self, x: [f64; 3]) -> PointSample {
        let mut u = [0.0; 3];
        let mut g = [[0.0; 3]; 3];
        for (k, uh) in &self.modes {
            let kf = k.as_f64();
            let ph = 2.0 * PI * (kf[0] * x[0] + kf[1] * x[1] + kf[2] * x[2]);
            let e = Complex64::new(ph.cos(), ph.sin());
            accumulate(&kf, uh, e, &mut u, &mut g);
        }
        PointSample::new(x, u, g)
    }

    /// Σ over both signs of û·conj(ω̂).
    pub fn helicity(&self) -> f64 {
        let mut acc = 0.0;
        for (k, u) in &self.modes {
            let w = curl_hat(&k.as_f64(), u);
            let dot: Complex64 = (0..3).map(|j| u[j] * w[j].conj()).sum();
            acc += 2.0 * dot.re;
        }
        acc
    }

    /// ‖∇u‖², ‖ω‖², ‖S‖² from Fourier coefficients.
    pub fn l2_norms(&self) -> (f64, f64, f64) {
        let (mut g2, mut w2, mut s2) = (0.0, 0.0, 0.0);
        for (k, u) in &self.modes {
            let kf = k.as_f64();
            let gh = grad_hat(&kf, u);
            let w = curl_hat(&kf, u);
            for i in 0..3 {
                w2 += 2.0 * w[i].norm_sqr();
                for j in 0..3 {
                    g2 += 2.0 * gh[i][j].norm_sqr();
                    s2 += 2.0 * (0.5 * (gh[i][j] + gh[j][i])).norm_sqr();
                }
            }
        }
        (g2, w2, s2)
    }

    /// Largest deviation of û(Mk) = Mû(k), M the reflection across σ^⊥,
    /// relative to the largest amplitude.
    pub fn sigma_mirror_deviation(&self) -> f64 {
        let lookup: std::collections::HashMap<Frequency, [Complex64; 3]> = self.modes.iter().cloned().collect();
        let get = |k: &Frequency| -> [Complex64; 3] {
            if let Some(u) = lookup.get(k) {
                *u
            } else if let Some(u) = lookup.get(&k.neg()) {
                [u[0].conj(), u[1].conj(), u[2].conj()]
            } else {
                [Complex64::new(0.0, 0.0); 3]
            }
        };
        let scale = self.modes.iter().flat_map(|(_, u)| u.iter().map(|c| c.norm())).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut dev: f64 = 0.0;
        for (k, u) in &self.modes {
            let mu = reflect(u);
            let s = 2 * k.sigma_dot();
            let target = if s % 3 == 0 {
                let t = s / 3;
                get(&Frequency::new(k.0[0] - t, k.0[1] - t, k.0[2] - t))
            } else {
                [Complex64::new(0.0, 0.0); 3]
            };
            for i in 0..3 {
                dev = dev.max((target[i] - mu[i]).norm());
            }
        }
        dev / scale
    }
}

fn reflect(u: &[Complex64; 3]) -> [Complex64; 3] {
    let s = (u[0] + u[1] + u[2]) * (2.0 / 3.0);
    [u[0] - s, u[1] - s, u[2] - s]
}

fn grad_hat(k: &[f64; 3], u: &[Complex64; 3]) -> [[Complex64; 3]; 3] {
    let mut g = [[Complex64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] = Complex64::new(0.0, 2.0 * PI * k[i]) * u[j];
        }
    }
    g
}

fn curl_hat(k: &[f64; 3], u: &[Complex64; 3]) -> [Complex64; 3] {
    let t = Complex64::new(0.0, 2.0 * PI);
    [t * (k[1] * u[2] - k[2] * u[1]), t * (k[2] * u[0] - k[0] * u[2]), t * (k[0] * u[1] - k[1] * u[0])]
}

#[inline]
fn accumulate(k: &[f64; 3], uh: &[Complex64; 3], e: Complex64, u: &mut [f64; 3], g: &mut Mat3) {
    let v = [uh[0] * e, uh[1] * e, uh[2] * e];
    for j in 0..3 {
        u[j] += 2.0 * v[j].re;
    }
    // Re(2πi k_i v_j) = −2πk_i Im(v_j)
    for i in 0..3 {
        let f = -4.0 * PI * k[i];
        for j in 0..3 {
            g[i][j] += f * v[j].im;
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct PointSample {
    pub x: [f64; 3],
    pub u: [f64; 3],
    /// grad[i][j] = ∂_i u_j.
    pub grad: Mat3,
    pub strain: Mat3,
    pub vorticity: [f64; 3],
}

impl PointSample {
    fn new(x: [f64; 3], u: [f64; 3], grad: Mat3) -> Self {
        let mut strain = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                strain[i][j] = 0.5 * (grad[i][j] + grad[j][i]);
            }
        }
        let vorticity = [grad[1][2] - grad[2][1], grad[2][0] - grad[0][2], grad[0][1] - grad[1][0]];
        PointSample { x, u, grad, strain, vorticity }
    }

    pub fn divergence(&self) -> f64 {
        self.grad[0][0] + self.grad[1][1] + self.grad[2][2]
    }

    pub fn eigenvalues(&self) -> [f64; 3] {
        sym_eigenvalues(&self.strain)
    }

    pub fn det_strain(&self) -> f64 {
        det3(&self.strain)
    }
}

#[derive(Clone, Debug)]
pub struct GridField {
    pub resolution: usize,
    pub samples: Vec<PointSample>,
}

impl GridField {
    pub fn index(&self, a: usize, b: usize, c: usize) -> usize {
        (a * self.resolution + b) * self.resolution + c
    }

    /// Grid mean, i.e. the integral over the unit torus.
    pub fn integrate<F: Fn(&PointSample) -> f64 + Sync>(&self, f: F) -> f64 {
        let parts: Vec<f64> = self.samples.par_chunks(self.resolution).map(|c| c.iter().map(&f).sum()).collect();
        parts.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn lambda2_plus_sup(&self) -> f64 {
        self.samples.iter().map(|s| s.eigenvalues()[1].max(0.0)).fold(0.0, f64::max)
    }
}

/// Coordinate of grid index a in [−½, ½).
pub fn grid_coordinate(a: usize, m: usize) -> f64 {
    let x = a as f64 / m as f64;
    if x < 0.5 {
        x
    } else {
        x - 1.0
    }
}

/// Direct synthesis on an M³ grid; requires M ≥ 2·max|k_i| + 1.
pub fn synthesize(field: &GeneralSpectralField, m: usize) -> Result<GridField, FieldError> {
    let bw = field.bandwidth() as usize;
    if m < 2 * bw + 1 {
        return Err(FieldError::Invalid(format!("resolution {m} below 2*{bw}+1")));
    }
    Ok(synthesize_unchecked(field, m))
}

fn synthesize_unchecked(field: &GeneralSpectralField, m: usize) -> GridField {
    let xs: Vec<f64> = (0..m).map(|a| grid_coordinate(a, m)).collect();
    // Per-mode, per-axis phase tables.
    let phases: Vec<[Vec<Complex64>; 3]> = field
        .modes
        .iter()
        .map(|(k, _)| {
            let kf = k.as_f64();
            let axis = |d: usize| xs.iter().map(|x| Complex64::from_polar(1.0, 2.0 * PI * kf[d] * x)).collect::<Vec<_>>();
            [axis(0), axis(1), axis(2)]
        })
        .collect();
    let kfs: Vec<[f64; 3]> = field.modes.iter().map(|(k, _)| k.as_f64()).collect();
    let samples: Vec<PointSample> = (0..m)
        .into_par_iter()
        .flat_map_iter(|a| {
            let mut out = Vec::with_capacity(m * m);
            for b in 0..m {
                for c in 0..m {
                    let mut u = [0.0; 3];
                    let mut g = [[0.0; 3]; 3];
                    for (idx, (_, uh)) in field.modes.iter().enumerate() {
                        let p = &phases[idx];
                        let e = p[0][a] * p[1][b] * p[2][c];
                        accumulate(&kfs[idx], uh, e, &mut u, &mut g);
                    }
                    out.push(PointSample::new([xs[a], xs[b], xs[c]], u, g));
                }
            }
            out
        })
        .collect();
    GridField { resolution: m, samples }
}

pub fn det3(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Ascending eigenvalues of a symmetric 3×3 matrix by cyclic Jacobi rotations.
pub fn sym_eigenvalues(a: &Mat3) -> [f64; 3] {
    let mut m = *a;
    for _ in 0..50 {
        let off = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
        let diag = m[0][0].powi(2) + m[1][1].powi(2) + m[2][2].powi(2);
        if off <= 1e-36 * diag || off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if m[p][q] == 0.0 {
                continue;
            }
            let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut r = m;
            for k in 0..3 {
                r[k][p] = c * m[k][p] - s * m[k][q];
                r[k][q] = s * m[k][p] + c * m[k][q];
            }
            let mut out = r;
            for k in 0..3 {
                out[p][k] = c * r[p][k] - s * r[q][k];
                out[q][k] = s * r[p][k] + c * r[q][k];
            }
            out[p][q] = 0.0;
            out[q][p] = 0.0;
            m = out;
        }
    }
    let mut e = [m[0][0], m[1][1], m[2][2]];
    e.sort_by(|x, y| x.partial_cmp(y).unwrap());
    e
}

pub fn strain_spectrum(grid: &GridField, point: usize) -> [f64; 3] {
    grid.samples[point].eigenvalues()
}

/// λ·[[0,−1,−1],[−1,0,−1],[−1,−1,0]].
pub fn origin_matrix(lambda: f64) -> Mat3 {
    [[0.0, -lambda, -lambda], [-lambda, 0.0, -lambda], [-lambda, -lambda, 0.0]]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnstrophySample {
    pub t: f64,
    pub grad_sq: f64,
    pub omega_sq: f64,
    pub strain_sq: f64,
    /// max of |‖ω‖² − 2‖S‖²| and |‖∇u‖² − 2‖S‖²| relative to ‖∇u‖².
    pub isometry_residual: f64,
    /// Grid quadrature of ‖ω‖², relative deviation from the spectral sum.
    pub grid_omega_residual: f64,
    pub d_strain_sq_dt: f64,
    pub dissipation: f64,
    pub det_integral: f64,
    /// |d/dt‖S‖² + 2ν‖S‖²_{Ḣ^α} + 4∫det S| relative to the largest term.
    pub identity_residual: f64,
    pub lambda2_plus_sup: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnstrophyReport {
    pub resolution: usize,
    pub quadrature_exact: bool,
    pub samples: Vec<EnstrophySample>,
    pub max_isometry_residual: f64,
    pub max_identity_residual: f64,
}

/// Quadrature resolution at which ∫det S is exact: M > 3·bandwidth.
pub fn exact_quadrature_resolution(field: &GeneralSpectralField) -> usize {
    3 * field.bandwidth() as usize + 1
}

/// Enstrophy identities for one ℳ-field and its time derivative.
pub fn enstrophy_sample(sys: &GalerkinSystem, y: &[f64], t: f64, m: usize) -> EnstrophySample {
    let f = sys.unpack(y);
    let mut dy = vec![0.0; y.len()];
    sys.full_rhs(y, &mut dy);
    let df = sys.unpack(&dy);
    let g = GeneralSpectralField::from_spectral(&f);
    let (grad_sq, omega_sq, strain_sq) = g.l2_norms();
    let isometry_residual = if grad_sq > 0.0 {
        ((omega_sq - 2.0 * strain_sq).abs()).max((grad_sq - 2.0 * strain_sq).abs()) / grad_sq
    } else {
        0.0
    };
    // ‖S‖² = Σ_{k>0} 4π²|k|²|c_k|².
    let alpha = sys.model.alpha();
    let nu = sys.model.nu();
    let (mut d_dt, mut diss) = (0.0, 0.0);
    for (i, mem) in f.table.members.iter().enumerate() {
        let k2 = weight(mem.shell, 1.0);
        d_dt += 2.0 * k2 * (f.amps[i].conj() * df.amps[i]).re;
        diss += 2.0 * nu * weight(mem.shell, alpha) * k2 * f.amps[i].norm_sqr();
    }
    let grid = synthesize_unchecked(&g, m);
    let det_integral = grid.integrate(|s| s.det_strain());
    let grid_omega = grid.integrate(|s| s.vorticity.iter().map(|w| w * w).sum());
    let grid_omega_residual = if omega_sq > 0.0 { (grid_omega - omega_sq).abs() / omega_sq } else { grid_omega.abs() };
    let rhs = -diss - 4.0 * det_integral;
    let scale = d_dt.abs().max(diss.abs()).max(4.0 * det_integral.abs());
    let identity_residual = if scale > 0.0 { (d_dt - rhs).abs() / scale } else { 0.0 };
    EnstrophySample {
        t,
        grad_sq,
        omega_sq,
        strain_sq,
        isometry_residual,
        grid_omega_residual,
        d_strain_sq_dt: d_dt,
        dissipation: diss,
        det_integral,
        identity_residual,
        lambda2_plus_sup: grid.lambda2_plus_sup(),
    }
}

/// Evaluates the identities at up to `max_samples` evenly spread trajectory points.
pub fn enstrophy_identities(sys: &GalerkinSystem, traj: &Trajectory, resolution: Option<usize>, max_samples: usize) -> EnstrophyReport {
    // Bandwidth of the whole truncation, not just the nonzero modes.
    let bw = sys.table.input.members.iter().flat_map(|m| m.k.0.iter().map(|x| x.abs())).max().unwrap_or(0) as usize;
    let exact = 3 * bw + 1;
    let m = resolution.unwrap_or(exact);
    let n = traj.len();
    let step = (n / max_samples.max(1)).max(1);
    let idx: Vec<usize> = (0..n).step_by(step).collect();
    let samples: Vec<EnstrophySample> = idx.iter().map(|&i| enstrophy_sample(sys, &traj.ys[i], traj.ts[i], m)).collect();
    let max_isometry_residual = samples.iter().map(|s| s.isometry_residual).fold(0.0, f64::max);
    let max_identity_residual = samples.iter().map(|s| s.identity_residual).fold(0.0, f64::max);
    EnstrophyReport { resolution: m, quadrature_exact: m >= exact, samples, max_isometry_residual, max_identity_residual }
}

/// Smooth even bump supported in (−¼, ¼) with unit mass.
#[derive(Clone, Debug)]
pub struct Bump {
    nodes: Vec<f64>,
    values: Vec<f64>,
    h: f64,
    norm: f64,
}

impl Bump {
    pub fn new(nodes_per_half: usize) -> Self {
        let h = 0.25 / nodes_per_half as f64;
        let nodes: Vec<f64> = (0..=nodes_per_half).map(|i| i as f64 * h).collect();
        let values: Vec<f64> = nodes.iter().map(|x| Self::raw(*x)).collect();
        // Trapezoid over (−¼, ¼) using evenness; endpoint values vanish.
        let half: f64 = values.iter().sum::<f64>() - 0.5 * values[0];
        let norm = 2.0 * h * half;
        Bump { nodes, values, h, norm }
    }

    fn raw(x: f64) -> f64 {
        let y = 4.0 * x;
        if y.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - y * y)).exp()
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        Self::raw(x) / self.norm
    }

    /// ĝ(ξ) = ∫ g(x) e^{−2πixξ} dx.
    pub fn fourier(&self, xi: f64) -> f64 {
        let mut acc = 0.5 * self.values[0];
        for (x, v) in self.nodes.iter().zip(&self.values).skip(1) {
            acc += v * (2.0 * PI * x * xi).cos();
        }
        2.0 * self.h * acc / self.norm
    }
}

impl Default for Bump {
    fn default() -> Self {
        Bump::new(20_000)
    }
}

#[derive(Clone, Debug)]
pub struct VortexSheet {
    pub epsilon: f64,
    pub truncation: usize,
    pub g0: f64,
    pub field: GeneralSpectralField,
}

impl VortexSheet {
    /// g(0)/ε.
    pub fn peak(&self) -> f64 {
        self.g0 / self.epsilon
    }

    /// 8(g(0)/ε − 1)³.
    pub fn origin_target(&self) -> f64 {
        8.0 * (self.peak() - 1.0).powi(3)
    }

    /// −2(g(0)/ε − 2)².
    pub fn offset_target(&self) -> f64 {
        -2.0 * (self.peak() - 2.0).powi(2)
    }
}

/// Default number of retained modes per axis.
pub fn default_sheet_truncation(epsilon: f64) -> usize {
    (400.0 / epsilon).ceil() as usize
}

/// Axis modes ±m e_d with amplitude ±(i/(2πm))·n_d·ĝ(εm), where n_1 = (0,1,1),
/// n_2 = (1,0,1), n_3 = (1,1,0).
pub fn vortex_sheet(epsilon: f64, g: &Bump, truncation: usize) -> Result<VortexSheet, FieldError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(FieldError::Invalid(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    if truncation == 0 {
        return Err(FieldError::Invalid("truncation must be positive".into()));
    }
    let ghat: Vec<f64> = (1..=truncation).into_par_iter().map(|m| g.fourier(epsilon * m as f64)).collect();
    let dirs = [[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]];
    let mut modes = Vec::with_capacity(3 * truncation);
    for (d, dir) in dirs.iter().enumerate() {
        for m in 1..=truncation {
            let mut k = [0i128; 3];
            k[d] = m as i128;
            let a = Complex64::new(0.0, ghat[m - 1] / (2.0 * PI * m as f64));
            modes.push((Frequency(k), [a * dir[0], a * dir[1], a * dir[2]]));
        }
    }
    Ok(VortexSheet { epsilon, truncation, g0: g.value(0.0), field: GeneralSpectralField { modes } })
}
