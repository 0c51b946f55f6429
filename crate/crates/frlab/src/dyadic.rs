//! The reduced shell system for ψ_n:
//!
//! ψ̇_n = −ν d_n ψ_n + √2πβ_{n−1}(√3)^n ψ_{n−1}² − √2πβ_n(√3)^{n+1} ψ_n ψ_{n+1},
//!
//! closed by ψ_{N+1} = 0.

use serde::{Deserialize, Serialize};

use crate::bilinear::{dissipation, reduced_coefficients};
use crate::error::ParameterError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Euler,
    /// Fractional dissipation ν(−Δ)^α; `alpha` is the physical exponent.
    Hypo { alpha: f64, nu: f64 },
}

impl Model {
    pub fn nu(&self) -> f64 {
        match self {
            Model::Euler => 0.0,
            Model::Hypo { nu, .. } => *nu,
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            Model::Euler => 0.0,
            Model::Hypo { alpha, .. } => *alpha,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DyadicSystem {
    pub model: Model,
    pub n_max: usize,
    pub attack: Vec<f64>,
    pub drain: Vec<f64>,
    /// ν d_n(α); zero for Euler.
    pub decay: Vec<f64>,
}

impl DyadicSystem {
    pub fn new(model: Model, n_max: usize) -> Self {
        let mut attack = Vec::with_capacity(n_max + 1);
        let mut drain = Vec::with_capacity(n_max + 1);
        let mut decay = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let (_, a, d) = reduced_coefficients(n);
            attack.push(a);
            drain.push(d);
            decay.push(match model {
                Model::Euler => 0.0,
                Model::Hypo { alpha, nu } => nu * dissipation(n, alpha),
            });
        }
        DyadicSystem { model, n_max, attack, drain, decay }
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    /// Quadratic transfer terms only.
    pub fn nonlinear(&self, psi: &[f64], out: &mut [f64]) {
        let n = self.n_max;
        for i in 0..=n {
            let prev = if i > 0 { psi[i - 1] } else { 0.0 };
            let next = if i < n { psi[i + 1] } else { 0.0 };
            out[i] = self.attack[i] * prev * prev - self.drain[i] * psi[i] * next;
        }
    }

    pub fn rhs(&self, psi: &[f64], out: &mut [f64]) {
        self.nonlinear(psi, out);
        for i in 0..=self.n_max {
            out[i] -= self.decay[i] * psi[i];
        }
    }

    pub fn rhs_vec(&self, psi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; psi.len()];
        self.rhs(psi, &mut out);
        out
    }

    /// Σ_n ν d_n ψ_n², the instantaneous dissipation rate of ½Σψ².
    pub fn dissipation_rate(&self, psi: &[f64]) -> f64 {
        psi.iter().zip(&self.decay).map(|(p, d)| d * p * p).sum()
    }

    /// E_n = Σ_{m≥n} ψ_m².
    pub fn shell_energy(psi: &[f64], n: usize) -> f64 {
        psi[n.min(psi.len())..].iter().map(|p| p * p).sum()
    }

    /// Euler: dE_n/dt = 2√2πβ_{n−1}(√3)^n ψ_{n−1}²ψ_n (the sum telescopes).
    pub fn shell_energy_derivative(&self, psi: &[f64], n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        2.0 * self.attack[n] * psi[n - 1] * psi[n - 1] * psi[n]
    }
}

/// r(γ) = (3/2 + 3^{−1−γ}) / (2(3^γ − 1)).
pub fn lyapunov_r(gamma: f64) -> Result<f64, ParameterError> {
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(ParameterError::Range(format!("gamma = {gamma} must be > 0")));
    }
    Ok((1.5 + 3f64.powf(-1.0 - gamma)) / (2.0 * (3f64.powf(gamma) - 1.0)))
}

/// H_γ = rΣ3^{γn}ψ_n² + Σ3^{γn}ψ_nψ_{n+1}; returns (H_γ, r).
pub fn lyapunov(psi: &[f64], gamma: f64) -> Result<(f64, f64), ParameterError> {
    let r = lyapunov_r(gamma)?;
    let mut h = 0.0;
    for n in 0..psi.len() {
        let w = 3f64.powf(gamma * n as f64);
        let next = psi.get(n + 1).copied().unwrap_or(0.0);
        h += w * (r * psi[n] * psi[n] + psi[n] * next);
    }
    Ok((h, r))
}

/// dH_γ/dt along ψ̇.
pub fn lyapunov_derivative(psi: &[f64], dpsi: &[f64], gamma: f64) -> Result<f64, ParameterError> {
    let r = lyapunov_r(gamma)?;
    let mut d = 0.0;
    for n in 0..psi.len() {
        let w = 3f64.powf(gamma * n as f64);
        let next = psi.get(n + 1).copied().unwrap_or(0.0);
        let dnext = dpsi.get(n + 1).copied().unwrap_or(0.0);
        d += w * (2.0 * r * psi[n] * dpsi[n] + dpsi[n] * next + psi[n] * dnext);
    }
    Ok(d)
}

/// Upper comparability constant r + ½ + ½3^{−γ}.
pub fn lyapunov_upper(gamma: f64) -> Result<f64, ParameterError> {
    Ok(lyapunov_r(gamma)? + 0.5 + 0.5 * 3f64.powf(-gamma))
}

pub fn delta0(n_max: usize) -> Vec<f64> {
    let mut v = vec![0.0; n_max + 1];
    v[0] = 1.0;
    v
}

pub fn geometric(q: f64, n_max: usize) -> Vec<f64> {
    (0..=n_max).map(|n| q.powi(n as i32)).collect()
}

/// Parses "delta0" or "geometric(q)".
pub fn preset(name: &str, n_max: usize) -> Option<Vec<f64>> {
    let name = name.trim();
    if name == "delta0" {
        return Some(delta0(n_max));
    }
    let inner = name.strip_prefix("geometric(")?.strip_suffix(')')?;
    let q: f64 = inner.trim().parse().ok()?;
    Some(geometric(q, n_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::dyadic_norm;
    use std::f64::consts::PI;

    #[test]
    fn rhs_examples() {
        let s = DyadicSystem::new(Model::Euler, 4);
        let d = s.rhs_vec(&delta0(4));
        assert_eq!(d[0], 0.0);
        assert!((d[1] - 2.0 * PI).abs() < 1e-13);
        assert!(s.rhs_vec(&[0.0; 5]).iter().all(|x| *x == 0.0));
        let nu = 0.3;
        let alpha = 0.2;
        let h = DyadicSystem::new(Model::Hypo { alpha, nu }, 4);
        let d = h.rhs_vec(&delta0(4));
        assert!((d[0] + nu * (20.0 * PI * PI).powf(alpha)).abs() < 1e-13);
    }

    #[test]
    fn shell_energy_examples() {
        let s = DyadicSystem::new(Model::Euler, 3);
        assert_eq!(DyadicSystem::shell_energy(&delta0(3), 0), 1.0);
        assert_eq!(DyadicSystem::shell_energy(&delta0(3), 1), 0.0);
        let psi = [1.0, 1.0, 0.0, 0.0];
        assert!((s.shell_energy_derivative(&psi, 1) - 4.0 * PI).abs() < 1e-13);
        assert_eq!(s.shell_energy_derivative(&psi, 0), 0.0);
        let psi = [2.0, 1.0, 0.0, 0.0];
        assert!((s.shell_energy_derivative(&psi, 1) - 16.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn euler_energy_is_conserved_by_rhs() {
        let s = DyadicSystem::new(Model::Euler, 9);
        let psi = geometric(0.7, 9);
        let d = s.rhs_vec(&psi);
        let de: f64 = psi.iter().zip(&d).map(|(a, b)| a * b).sum();
        assert!(de.abs() < 1e-12);
    }

    #[test]
    fn lyapunov_examples() {
        let g = 0.1;
        let r = lyapunov_r(g).unwrap();
        assert!((r - (1.5 + 3f64.powf(-1.1)) / (2.0 * (3f64.powf(0.1) - 1.0))).abs() < 1e-15);
        assert!((lyapunov(&delta0(3), g).unwrap().0 - r).abs() < 1e-15);
        let h = lyapunov(&[1.0, 1.0, 0.0], g).unwrap().0;
        assert!((h - (r * (1.0 + 3f64.powf(g)) + 1.0)).abs() < 1e-13);
        assert!(lyapunov_r(0.0).is_err());
        let psi = geometric(0.5, 6);
        let (h, r) = lyapunov(&psi, 0.3).unwrap();
        let n2 = dyadic_norm(&psi, 0.3).powi(2);
        assert!(r * n2 <= h && h <= lyapunov_upper(0.3).unwrap() * n2);
    }

    #[test]
    fn presets_parse() {
        assert_eq!(preset("delta0", 2), Some(vec![1.0, 0.0, 0.0]));
        assert_eq!(preset("geometric(0.5)", 2), Some(vec![1.0, 0.5, 0.25]));
        assert!(preset("bogus", 2).is_none());
    }
}
