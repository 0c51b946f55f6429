//! Blowup bounds, the shell-energy ladder, the hypodissipative Lyapunov
//! criterion and regularity functionals.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dyadic::{lyapunov, lyapunov_derivative, lyapunov_r, lyapunov_upper, DyadicSystem};
use crate::error::ParameterError;
use crate::evolve::{detect_blowup, h1_norm, BlowupVerdict, Trajectory};
use crate::field::{dyadic_norm, s_from_tilde};

/// Fraction of the energy in the top shell at which the truncated system
/// stops representing the cascade.
pub const SATURATION_FRACTION: f64 = 1e-3;

pub fn r_upper() -> f64 {
    2f64.sqrt() / (2f64.sqrt() + 1.5)
}

/// f(r) = r / ((√2 − (√2 + 3/2)r)(√(3r) − 1)).
pub fn blowup_f(r: f64) -> f64 {
    r / ((2f64.sqrt() - (2f64.sqrt() + 1.5) * r) * ((3.0 * r).sqrt() - 1.0))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlowupBound {
    pub kappa: f64,
    pub r_star: f64,
    pub f_min: f64,
    /// (√3/(√2π))·inf f·E_0^{−1/2}.
    pub t_star: f64,
    /// κ/‖u0‖_{L²} with ‖u0‖² = 12E_0.
    pub t_star_from_kappa: f64,
}

/// Golden-section minimisation of f on (1/3, √2/(√2+3/2)).
pub fn minimize_blowup_f() -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1.0 / 3.0, r_upper());
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (blowup_f(c), blowup_f(d));
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = blowup_f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = blowup_f(d);
        }
    }
    let r = 0.5 * (a + b);
    (r, blowup_f(r))
}

pub fn euler_blowup_bound(e0: f64) -> Result<BlowupBound, ParameterError> {
    if !(e0 > 0.0) {
        return Err(ParameterError::Range(format!("E_0 = {e0} must be positive")));
    }
    let (r_star, f_min) = minimize_blowup_f();
    let kappa = 3.0 * 2f64.sqrt() / PI * f_min;
    let t_star = 3f64.sqrt() / (2f64.sqrt() * PI) * f_min / e0.sqrt();
    let t_star_from_kappa = kappa / (12.0 * e0).sqrt();
    Ok(BlowupBound { kappa, r_star, f_min, t_star, t_star_from_kappa })
}

/// Predicted ladder times T_0 = 0, T_n = Σ_{m<n} √r (3r)^{−m/2} / (√(2E_0)π(√2 − (√2+3/2)r)).
pub fn ladder_times(e0: f64, r: f64, n_max: usize) -> Result<Vec<f64>, ParameterError> {
    if !(r > 1.0 / 3.0 && r < r_upper()) {
        return Err(ParameterError::Range(format!("r = {r} outside (1/3, {})", r_upper())));
    }
    if !(e0 > 0.0) {
        return Err(ParameterError::Range(format!("E_0 = {e0} must be positive")));
    }
    let c = r.sqrt() / ((2.0 * e0).sqrt() * PI * (2f64.sqrt() - (2f64.sqrt() + 1.5) * r));
    let mut out = vec![0.0];
    let mut acc = 0.0;
    for m in 0..n_max {
        acc += c * (3.0 * r).powf(-(m as f64) / 2.0);
        out.push(acc);
    }
    Ok(out)
}

/// Fraction of the largest representable ‖ψ‖_{ℋ¹}, (√3)^N‖ψ‖_{ℓ²}, above which
/// growth-rate fits stop trusting the truncated system.
pub const TRUNCATION_HEADROOM: f64 = 1e-3;

/// First time E_N/E_total exceeds [`SATURATION_FRACTION`].
pub fn saturation_time(traj: &Trajectory) -> Option<f64> {
    let n = traj.ys[0].len() - 1;
    traj.first_crossing(0.0, |y| {
        let tot: f64 = y.iter().map(|p| p * p).sum();
        if tot > 0.0 {
            y[n] * y[n] / tot - SATURATION_FRACTION
        } else {
            -1.0
        }
    })
}

/// (t, ‖ψ‖_{ℋ¹}) samples before saturation and below the truncation headroom.
pub fn rate_fit_window(traj: &Trajectory) -> (Vec<f64>, Vec<f64>) {
    let n = traj.ys[0].len() - 1;
    let l2 = DyadicSystem::shell_energy(&traj.ys[0], 0).sqrt();
    let cap = TRUNCATION_HEADROOM * 3f64.sqrt().powi(n as i32) * l2;
    let sat = saturation_time(traj).unwrap_or(f64::INFINITY);
    traj.ts
        .iter()
        .zip(&traj.ys)
        .map(|(t, y)| (*t, h1_norm(y)))
        .take_while(|(t, h)| *t <= sat && *h <= cap)
        .unzip()
}

/// Fits ‖ψ‖_{ℋ¹} ≈ C(T − t)^{−p} on the trustworthy part of a run.
pub fn fit_blowup_rate(traj: &Trajectory, bound_t_star: Option<f64>) -> BlowupVerdict {
    let (ts, hs) = rate_fit_window(traj);
    detect_blowup(&ts, &hs, bound_t_star)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LadderRow {
    pub n: usize,
    pub t_predicted: f64,
    pub t_observed: Option<f64>,
    pub e_n_at_predicted: Option<f64>,
    /// Observed before truncation saturation.
    pub reliable: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LadderReport {
    pub r: f64,
    pub e0: f64,
    pub saturation_time: Option<f64>,
    pub rows: Vec<LadderRow>,
    pub all_reliable_hold: bool,
    pub reliable_rows: usize,
}

pub fn energy_ladder(traj: &Trajectory, r: f64, positivity_tol: f64) -> Result<LadderReport, ParameterError> {
    let min = traj.ys.iter().flat_map(|y| y.iter()).cloned().fold(f64::INFINITY, f64::min);
    if min < -positivity_tol {
        return Err(ParameterError::Range(format!("trajectory is not coefficient-positive (min {min:e})")));
    }
    let n_max = traj.ys[0].len() - 1;
    let e0 = DyadicSystem::shell_energy(&traj.ys[0], 0);
    let tp = ladder_times(e0, r, n_max)?;
    let sat = saturation_time(traj);
    let t_last = traj.t_last();
    let mut rows = Vec::new();
    for (n, &t_pred) in tp.iter().enumerate() {
        let level = e0 * r.powi(n as i32);
        let t_obs = traj.first_crossing(level, |y| DyadicSystem::shell_energy(y, n));
        let e_at = if t_pred <= t_last { Some(DyadicSystem::shell_energy(&traj.dense(t_pred), n)) } else { None };
        let reliable = match (t_obs, sat) {
            (Some(t), Some(s)) => t <= s,
            (Some(_), None) => true,
            (None, _) => false,
        };
        let holds = match t_obs {
            Some(t) => t <= t_pred,
            None => t_last < t_pred,
        };
        rows.push(LadderRow { n, t_predicted: t_pred, t_observed: t_obs, e_n_at_predicted: e_at, reliable, holds });
    }
    let all_reliable_hold = rows.iter().filter(|r| r.reliable).all(|r| r.holds);
    let reliable_rows = rows.iter().filter(|r| r.reliable).count();
    Ok(LadderReport { r, e0, saturation_time: sat, rows, all_reliable_hold, reliable_rows })
}

/// c_n = d_n(α)/3^{α̃n} = (12π²)^α(1 + ⅔(3/4)^n)^α.
fn scaled_dissipation(n: i64, alpha: f64) -> f64 {
    if n < 0 {
        return 0.0;
    }
    (12.0 * PI * PI).powf(alpha) * (1.0 + 2.0 / 3.0 * 0.75f64.powi(n as i32)).powf(alpha)
}

/// Row-sum bound C with A ≤ Cν‖ψ‖²_{ℋ^{γ+α̃}} for the dissipative part of dH_γ/dt.
pub fn dissipation_constant(gamma: f64, alpha_tilde: f64) -> Result<f64, ParameterError> {
    let r = lyapunov_r(gamma)?;
    let alpha = s_from_tilde(alpha_tilde);
    let a3 = 3f64.powf(alpha_tilde);
    let g3 = 3f64.powf(-gamma);
    let mut c: f64 = 0.0;
    // c_n decreases monotonically to (12π²)^α, so the supremum is attained at small n.
    for n in 0..=200i64 {
        let cn = scaled_dissipation(n, alpha);
        let row = 2.0 * r * cn + 0.5 * (cn + a3 * scaled_dissipation(n + 1, alpha)) + 0.5 * g3 * (scaled_dissipation(n - 1, alpha) / a3 + cn);
        c = c.max(row);
    }
    Ok(c)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LyapunovCriterion {
    pub h0: f64,
    pub r: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub dissipation_constant: f64,
    pub threshold: f64,
    pub qualifies: bool,
    pub t_max_bound: Option<f64>,
}

pub fn lyapunov_kappa(gamma: f64, alpha_tilde: f64) -> Result<f64, ParameterError> {
    let eps = 2.0 - 6.0 * alpha_tilde - 2.0 * gamma;
    let up = lyapunov_upper(gamma)?;
    Ok(PI * (1.0 - 3f64.sqrt().powf(-eps)).sqrt() / (2.0 * up.powf(1.5)))
}

pub fn hypo_lyapunov_criterion(psi0: &[f64], gamma: f64, alpha_tilde: f64, nu: f64) -> Result<LyapunovCriterion, ParameterError> {
    if !(alpha_tilde > 0.0 && alpha_tilde < 1.0 / 3.0) {
        return Err(ParameterError::Range(format!("need 0 < alpha_tilde < 1/3, got {alpha_tilde}")));
    }
    if !(gamma > 0.0 && gamma < 1.0 - 3.0 * alpha_tilde) {
        return Err(ParameterError::Range(format!("need 0 < gamma < 1 - 3 alpha_tilde = {}, got {gamma}", 1.0 - 3.0 * alpha_tilde)));
    }
    if !(nu >= 0.0) {
        return Err(ParameterError::Range(format!("need nu >= 0, got {nu}")));
    }
    if psi0.iter().any(|p| *p < 0.0) {
        return Err(ParameterError::Range("psi0 must be nonnegative".into()));
    }
    let (h0, r) = lyapunov(psi0, gamma)?;
    let epsilon = 2.0 - 6.0 * alpha_tilde - 2.0 * gamma;
    let kappa = lyapunov_kappa(gamma, alpha_tilde)?;
    let c = dissipation_constant(gamma, alpha_tilde)?;
    let up = lyapunov_upper(gamma)?;
    let threshold = c * c * nu * nu * up / ((1.0 - 3f64.sqrt().powf(-epsilon)) * PI * PI);
    let qualifies = h0 > 0.0 && h0 >= threshold;
    let t_max_bound = if qualifies { Some(1.0 / (kappa * h0.sqrt())) } else { None };
    Ok(LyapunovCriterion { h0, r, epsilon, kappa, dissipation_constant: c, threshold, qualifies, t_max_bound })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LyapunovCheck {
    pub samples_checked: usize,
    pub min_lower_bound_ratio: f64,
    pub min_differential_ratio: f64,
    pub max_fd_relative_error: f64,
    pub lower_bound_holds: bool,
    pub differential_holds: bool,
}

/// Checks H(t) ≥ H0/(1 − κt√H0)² and dH/dt ≥ 2κH^{3/2} along a trajectory up to `t_stop`.
pub fn check_lyapunov_trajectory(sys: &DyadicSystem, traj: &Trajectory, gamma: f64, kappa: f64, t_stop: f64, rel_tol: f64) -> Result<LyapunovCheck, ParameterError> {
    let h0 = lyapunov(&traj.ys[0], gamma)?.0;
    let mut min_lb: f64 = f64::INFINITY;
    let mut min_diff: f64 = f64::INFINITY;
    let mut max_fd: f64 = 0.0;
    let mut count = 0;
    let hs: Vec<f64> = traj.ys.iter().map(|y| lyapunov(y, gamma).map(|x| x.0)).collect::<Result<_, _>>()?;
    for i in 0..traj.len() {
        let t = traj.ts[i];
        if t > t_stop {
            break;
        }
        let denom = 1.0 - kappa * t * h0.sqrt();
        if denom > 0.0 {
            let lb = h0 / (denom * denom);
            min_lb = min_lb.min(hs[i] / lb);
        }
        let dpsi = sys.rhs_vec(&traj.ys[i]);
        let dh = lyapunov_derivative(&traj.ys[i], &dpsi, gamma)?;
        min_diff = min_diff.min(dh / (2.0 * kappa * hs[i].powf(1.5)));
        if i > 0 && i + 1 < traj.len() && traj.ts[i + 1] <= t_stop {
            // Centred difference on the nonuniform step sequence.
            let (ta, tb) = (traj.ts[i - 1], traj.ts[i + 1]);
            let (ha, hb) = (t - ta, tb - t);
            let fd = (hs[i + 1] * ha * ha - hs[i - 1] * hb * hb + hs[i] * (hb * hb - ha * ha)) / (ha * hb * (ha + hb));
            if dh.abs() > 0.0 {
                max_fd = max_fd.max((fd - dh).abs() / dh.abs());
            }
        }
        count += 1;
    }
    Ok(LyapunovCheck {
        samples_checked: count,
        min_lower_bound_ratio: min_lb,
        min_differential_ratio: min_diff,
        max_fd_relative_error: max_fd,
        lower_bound_holds: min_lb >= 1.0 - rel_tol,
        differential_holds: min_diff >= 1.0 - rel_tol,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RegularityFunctionals {
    pub sup_weighted: f64,
    pub h1_norm: f64,
    /// d/dt‖ψ‖²_{ℋ¹} − 4√2π·sup·‖ψ‖²_{ℋ¹}; nonpositive along Euler flows.
    pub gronwall_residual: Option<f64>,
}

pub fn sup_weighted(psi: &[f64]) -> f64 {
    psi.iter()
        .enumerate()
        .map(|(n, p)| 3f64.sqrt().powi(n as i32) * p)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0)
}

pub fn regularity_functionals(psi: &[f64], dpsi: Option<&[f64]>) -> RegularityFunctionals {
    let sup = sup_weighted(psi);
    let h1 = dyadic_norm(psi, 1.0);
    let gronwall_residual = dpsi.map(|d| {
        let dh: f64 = (0..psi.len()).map(|n| 2.0 * 3f64.powi(n as i32) * psi[n] * d[n]).sum();
        dh - 4.0 * 2f64.sqrt() * PI * sup * h1 * h1
    });
    RegularityFunctionals { sup_weighted: sup, h1_norm: h1, gronwall_residual }
}

/// λ = 12√2π Σ ψ_n (√3)^n (1 + ⅔(3/4)^n)^{−1/2}.
pub fn origin_strain_lambda(psi: &[f64]) -> f64 {
    12.0 * 2f64.sqrt()
        * PI
        * psi
            .iter()
            .enumerate()
            .map(|(n, p)| p * 3f64.sqrt().powi(n as i32) / (1.0 + 2.0 / 3.0 * 0.75f64.powi(n as i32)).sqrt())
            .sum::<f64>()
}
