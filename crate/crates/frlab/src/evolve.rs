//! Adaptive Dormand–Prince 5(4) integration with a Lawson integrating factor
//! for diagonal linear decay, dense output and blowup fitting.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bilinear::{dissipation, InteractionTable};
use crate::dyadic::{DyadicSystem, Model};
use crate::error::{FieldError, LatticeError};
use crate::field::{dyadic_norm, SpectralField};
use crate::lattice::ShellTable;

/// y' = −Λy + N(y), with Λ diagonal and nonnegative.
pub trait OdeSystem: Sync {
    fn dim(&self) -> usize;
    fn nonlinear(&self, y: &[f64], out: &mut [f64]);
    fn decay(&self) -> Option<&[f64]> {
        None
    }

    fn full_rhs(&self, y: &[f64], out: &mut [f64]) {
        self.nonlinear(y, out);
        if let Some(l) = self.decay() {
            for i in 0..y.len() {
                out[i] -= l[i] * y[i];
            }
        }
    }
}

impl OdeSystem for DyadicSystem {
    fn dim(&self) -> usize {
        self.n_max + 1
    }

    fn nonlinear(&self, y: &[f64], out: &mut [f64]) {
        DyadicSystem::nonlinear(self, y, out)
    }

    fn decay(&self) -> Option<&[f64]> {
        match self.model {
            Model::Euler => None,
            Model::Hypo { .. } => Some(&self.decay),
        }
    }
}

/// Full Galerkin system on the positive-half amplitudes, stored as
/// interleaved (re, im) pairs.
pub struct GalerkinSystem {
    pub table: InteractionTable,
    pub model: Model,
    decay: Vec<f64>,
}

impl GalerkinSystem {
    pub fn new(shells: Arc<ShellTable>, model: Model) -> Result<Self, LatticeError> {
        let table = InteractionTable::galerkin(shells.clone())?;
        let decay = shells
            .members
            .iter()
            .flat_map(|m| {
                let d = match model {
                    Model::Euler => 0.0,
                    Model::Hypo { alpha, nu } => nu * dissipation(m.shell, alpha),
                };
                [d, d]
            })
            .collect();
        Ok(GalerkinSystem { table, model, decay })
    }

    pub fn pack(f: &SpectralField) -> Vec<f64> {
        f.amps.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn unpack(&self, y: &[f64]) -> SpectralField {
        let amps = y.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
        SpectralField { table: self.table.input.clone(), amps }
    }
}

impl OdeSystem for GalerkinSystem {
    fn dim(&self) -> usize {
        2 * self.table.input.len()
    }

    fn nonlinear(&self, y: &[f64], out: &mut [f64]) {
        let u: Vec<Complex64> = y.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
        let mut b = vec![Complex64::new(0.0, 0.0); u.len()];
        self.table.apply(&u, &u, &mut b);
        for (i, c) in b.iter().enumerate() {
            out[2 * i] = c.re;
            out[2 * i + 1] = c.im;
        }
    }

    fn decay(&self) -> Option<&[f64]> {
        match self.model {
            Model::Euler => None,
            Model::Hypo { .. } => Some(&self.decay),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedTEnd,
    BlowupDetected,
    DtUnderflow,
    StepBudget,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::ReachedTEnd => "reached_t_end",
            Termination::BlowupDetected => "blowup_detected",
            Termination::DtUnderflow => "dt_underflow",
            Termination::StepBudget => "step_budget",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: Model,
    pub n_max: usize,
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Relative to `t_end`.
    pub dt_min: f64,
    pub max_steps: usize,
    /// Threshold on ‖ψ‖_{ℋ¹} (dyadic) or ‖u‖_{Ḣ^{log3/(2log2)}} (Galerkin).
    pub blowup_threshold: f64,
}

impl SimConfig {
    pub fn new(model: Model, n_max: usize, t_end: f64) -> Self {
        SimConfig {
            model,
            n_max,
            t_end,
            rtol: 1e-10,
            atol: 1e-12,
            dt_min: 1e-14,
            max_steps: 5_000_000,
            blowup_threshold: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.dt_min > 0.0) {
            return Err("rtol, atol and dt_min must be positive".into());
        }
        if !(self.t_end > 0.0) {
            return Err("t_end must be positive".into());
        }
        if let Model::Hypo { alpha, nu } = self.model {
            if !(alpha >= 0.0 && nu > 0.0) {
                return Err("hypodissipative model needs alpha >= 0 and nu > 0".into());
            }
        }
        Ok(())
    }
}

/// Accepted steps of one run: state and full derivative at each time.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    pub fs: Vec<Vec<f64>>,
    pub termination: Termination,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    pub fn t_last(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    fn segment(&self, t: f64) -> usize {
        match self.ts.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.ts.len().saturating_sub(2)),
            Err(i) => i.saturating_sub(1).min(self.ts.len().saturating_sub(2)),
        }
    }

    /// Cubic Hermite interpolation on the step containing t.
    pub fn dense(&self, t: f64) -> Vec<f64> {
        if self.ts.len() == 1 {
            return self.ys[0].clone();
        }
        let i = self.segment(t);
        hermite(self.ts[i], self.ts[i + 1], &self.ys[i], &self.ys[i + 1], &self.fs[i], &self.fs[i + 1], t)
    }

    /// ∫ g(y(t)) dt over the whole run by the corrected trapezoid rule,
    /// given g and its time derivative at each sample.
    pub fn integral<G>(&self, mut g: G) -> Vec<f64>
    where
        G: FnMut(&[f64], &[f64]) -> (f64, f64),
    {
        let mut out = Vec::with_capacity(self.ts.len());
        let mut acc = 0.0;
        out.push(0.0);
        let mut prev = g(&self.ys[0], &self.fs[0]);
        for i in 1..self.ts.len() {
            let cur = g(&self.ys[i], &self.fs[i]);
            let h = self.ts[i] - self.ts[i - 1];
            acc += h / 2.0 * (prev.0 + cur.0) + h * h / 12.0 * (prev.1 - cur.1);
            out.push(acc);
            prev = cur;
        }
        out
    }

    /// First time a scalar functional crosses `level` upward, located by
    /// bisection on the dense output.
    pub fn first_crossing<F>(&self, level: f64, f: F) -> Option<f64>
    where
        F: Fn(&[f64]) -> f64,
    {
        if f(&self.ys[0]) >= level {
            return Some(self.ts[0]);
        }
        for i in 1..self.ts.len() {
            if f(&self.ys[i]) >= level {
                let (mut a, mut b) = (self.ts[i - 1], self.ts[i]);
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    let y = hermite(self.ts[i - 1], self.ts[i], &self.ys[i - 1], &self.ys[i], &self.fs[i - 1], &self.fs[i], m);
                    if f(&y) >= level {
                        b = m;
                    } else {
                        a = m;
                    }
                    if b - a <= 1e-15 * b.abs().max(1e-300) {
                        break;
                    }
                }
                return Some(b);
            }
        }
        None
    }
}

pub fn hermite(t0: f64, t1: f64, y0: &[f64], y1: &[f64], f0: &[f64], f1: &[f64], t: f64) -> Vec<f64> {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
        .collect()
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates from y0 over [0, t_end]. `stop` is checked after each accepted
/// step and ends the run with `BlowupDetected` when it returns true.
pub fn integrate<S, F>(sys: &S, y0: &[f64], cfg: &SimConfig, stop: F) -> Trajectory
where
    S: OdeSystem + ?Sized,
    F: Fn(&[f64]) -> bool,
{
    let n = sys.dim();
    assert_eq!(y0.len(), n);
    let decay = sys.decay().map(|d| d.to_vec());
    let t_end = cfg.t_end;
    let dt_min = cfg.dt_min * t_end.abs().max(1.0);

    let mut traj = Trajectory { ts: vec![0.0], ys: vec![y0.to_vec()], fs: Vec::new(), termination: Termination::ReachedTEnd, rejected_steps: 0 };
    let mut y = y0.to_vec();
    let mut nl = vec![0.0; n];
    sys.nonlinear(&y, &mut nl);
    let full = |y: &[f64], nl: &[f64]| -> Vec<f64> {
        match &decay {
            None => nl.to_vec(),
            Some(l) => (0..n).map(|i| nl[i] - l[i] * y[i]).collect(),
        }
    };
    traj.fs.push(full(&y, &nl));
    if stop(&y) {
        traj.termination = Termination::BlowupDetected;
        return traj;
    }

    let mut h = initial_step(sys, &y, &traj.fs[0], cfg).min(t_end);
    let mut t = 0.0;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut ystage = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut steps = 0usize;
    let mut err_prev: f64 = 1e-4;

    while t < t_end {
        if steps >= cfg.max_steps {
            traj.termination = Termination::StepBudget;
            break;
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        k[0].copy_from_slice(&nl);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..s {
                    if A[s][j] != 0.0 {
                        acc += A[s][j] * k[j][i] * damp(&decay, i, (C[s] - C[j]) * h);
                    }
                }
                ystage[i] = damp(&decay, i, C[s] * h) * y[i] + h * acc;
            }
            if s == 6 {
                ynew.copy_from_slice(&ystage);
            }
            sys.nonlinear(&ystage, &mut k[s]);
        }
        let mut enorm = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for j in 0..7 {
                if E[j] != 0.0 {
                    e += E[j] * k[j][i] * damp(&decay, i, (1.0 - C[j]) * h);
                }
            }
            err[i] = h * e;
            let sc = cfg.atol + cfg.rtol * y[i].abs().max(ynew[i].abs());
            enorm += (err[i] / sc).powi(2);
        }
        let enorm = (enorm / n as f64).sqrt();
        if enorm.is_finite() && enorm <= 1.0 {
            steps += 1;
            t = if last { t_end } else { t + h };
            y.copy_from_slice(&ynew);
            nl.copy_from_slice(&k[6]);
            traj.ts.push(t);
            traj.ys.push(y.clone());
            traj.fs.push(full(&y, &nl));
            if stop(&y) {
                traj.termination = Termination::BlowupDetected;
                break;
            }
            let fac = 0.9 * enorm.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            err_prev = enorm.max(1e-4);
            h *= fac.clamp(0.2, 5.0);
        } else {
            traj.rejected_steps += 1;
            let fac = if enorm.is_finite() { (0.9 * enorm.powf(-0.2)).max(0.1) } else { 0.1 };
            h *= fac;
        }
        if h < dt_min && t < t_end {
            traj.termination = Termination::DtUnderflow;
            break;
        }
    }
    traj
}

fn damp(decay: &Option<Vec<f64>>, i: usize, tau: f64) -> f64 {
    match decay {
        None => 1.0,
        Some(l) => (-l[i] * tau).exp(),
    }
}

fn initial_step<S: OdeSystem + ?Sized>(sys: &S, y: &[f64], f: &[f64], cfg: &SimConfig) -> f64 {
    let n = y.len();
    let sc: Vec<f64> = y.iter().map(|v| cfg.atol + cfg.rtol * v.abs()).collect();
    let rms = |v: &[f64]| ((0..n).map(|i| (v[i] / sc[i]).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d0 = rms(y);
    let d1 = rms(f);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = (0..n).map(|i| y[i] + h0 * f[i]).collect();
    let mut f1 = vec![0.0; n];
    sys.full_rhs(&y1, &mut f1);
    let df: Vec<f64> = (0..n).map(|i| f1[i] - f[i]).collect();
    let d2 = rms(&df) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(cfg.t_end)
}

/// ‖ψ‖_{ℋ¹}.
pub fn h1_norm(psi: &[f64]) -> f64 {
    dyadic_norm(psi, 1.0)
}

pub fn integrate_dyadic(psi0: &[f64], cfg: &SimConfig) -> Result<(DyadicSystem, Trajectory), String> {
    cfg.validate()?;
    if psi0.len() != cfg.n_max + 1 {
        return Err(format!("psi0 has {} entries, expected {}", psi0.len(), cfg.n_max + 1));
    }
    let sys = DyadicSystem::new(cfg.model, cfg.n_max);
    let thr = cfg.blowup_threshold;
    let traj = integrate(&sys, psi0, cfg, |y| h1_norm(y) > thr);
    Ok((sys, traj))
}

pub fn integrate_galerkin(u0: &SpectralField, cfg: &SimConfig) -> Result<(GalerkinSystem, Trajectory), String> {
    cfg.validate()?;
    if u0.n_max() != cfg.n_max {
        return Err(format!("field truncation {} differs from config {}", u0.n_max(), cfg.n_max));
    }
    let sys = GalerkinSystem::new(u0.table.clone(), cfg.model).map_err(|e| e.to_string())?;
    let thr = cfg.blowup_threshold;
    let s_crit = 3f64.ln() / (2.0 * 2f64.ln());
    let y0 = GalerkinSystem::pack(u0);
    let traj = integrate(&sys, &y0, cfg, |y| thr.is_finite() && sys.unpack(y).sobolev_norm(s_crit) > thr);
    Ok((sys, traj))
}

/// ψ along a Galerkin trajectory at each sample.
pub fn galerkin_psi(sys: &GalerkinSystem, traj: &Trajectory, tol: f64) -> Result<Vec<Vec<f64>>, FieldError> {
    traj.ys.iter().map(|y| sys.unpack(y).to_psi(tol)).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BlowupReport {
    pub t_est: f64,
    pub rate_exponent: f64,
    pub log_prefactor: f64,
    pub residual_rms: f64,
    pub fit_window: (f64, f64),
    pub bound_t_star: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub enum BlowupVerdict {
    Signature(BlowupReport),
    NoSignature { growth_decades: f64 },
}

/// Linear least squares of log y on log(T − t); returns (c, p, rms) with
/// log y ≈ c − p log(T − t).
fn fit_at(ts: &[f64], ly: &[f64], tt: f64) -> (f64, f64, f64) {
    let xs: Vec<f64> = ts.iter().map(|t| (tt - t).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..xs.len() {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ly[i] - my);
    }
    let slope = sxy / sxx;
    let c = my - slope * mx;
    let rms = (xs.iter().zip(ly).map(|(x, y)| (y - c - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    (c, -slope, rms)
}

/// Fits y ≈ C(T − t)^{−p} over the final decade of growth of the samples.
pub fn detect_blowup(ts: &[f64], ys: &[f64], bound_t_star: Option<f64>) -> BlowupVerdict {
    let y_last = *ys.last().unwrap_or(&0.0);
    let y_first = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let growth = if y_first > 0.0 && y_last > 0.0 { (y_last / y_first).log10() } else { 0.0 };
    if !(growth >= 2.0) || ts.len() < 8 {
        return BlowupVerdict::NoSignature { growth_decades: growth.max(0.0) };
    }
    let start = ys.iter().rposition(|&y| y <= y_last / 10.0).unwrap_or(0);
    let mut wt: Vec<f64> = ts[start..].to_vec();
    let mut wy: Vec<f64> = ys[start..].iter().map(|y| y.ln()).collect();
    if wt.len() < 8 {
        // Too few steps: widen to the last few samples.
        let s = ts.len().saturating_sub(8);
        wt = ts[s..].to_vec();
        wy = ys[s..].iter().map(|y| y.ln()).collect();
    }
    let t_last = *wt.last().unwrap();
    let span = t_last - wt[0];
    let obj = |x: f64| fit_at(&wt, &wy, t_last + span * x.exp()).2;
    // Scan log-offsets, then refine by golden section.
    let mut best = (f64::INFINITY, 0.0);
    let mut x = -30.0;
    while x <= 5.0 {
        let r = obj(x);
        if r < best.0 {
            best = (r, x);
        }
        x += 0.05;
    }
    let (mut a, mut b) = (best.1 - 0.05, best.1 + 0.05);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if obj(c) < obj(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let xo = 0.5 * (a + b);
    let tt = t_last + span * xo.exp();
    let (c, p, rms) = fit_at(&wt, &wy, tt);
    BlowupVerdict::Signature(BlowupReport {
        t_est: tt,
        rate_exponent: p,
        log_prefactor: c,
        residual_rms: rms,
        fit_window: (wt[0], t_last),
        bound_t_star,
    })
}
