//! Velocity fields supported on ℳ, stored as one complex amplitude per
//! positive frequency: û(k) = c_k v^k and û(−k) = conj(c_k) v^k.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::FieldError;
use crate::lattice::{classify, mirror, Frequency, Kind, Perm, ShellTable, Sign};

pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-10;

/// s̃ = (2 log 2 / log 3) s.
pub fn s_tilde(s: f64) -> f64 {
    2.0 * 2f64.ln() / 3f64.ln() * s
}

/// Inverse of [`s_tilde`].
pub fn s_from_tilde(st: f64) -> f64 {
    st * 3f64.ln() / (2.0 * 2f64.ln())
}

#[derive(Clone, Debug)]
pub struct SpectralField {
    pub table: Arc<ShellTable>,
    pub amps: Vec<Complex64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SymmetryFlags {
    pub odd: bool,
    pub permutation_symmetric: bool,
    pub hj_parity: bool,
    pub sigma_mirror: bool,
    pub coefficient_positive: bool,
    pub odd_deviation: f64,
    pub permutation_deviation: f64,
    pub hj_deviation: f64,
    pub sigma_mirror_deviation: f64,
    pub positivity_deviation: f64,
}

impl SymmetryFlags {
    /// σ-mirror symmetry and hj-parity coincide for odd, permutation-symmetric fields.
    pub fn mirror_parity_consistent(&self) -> bool {
        !(self.odd && self.permutation_symmetric) || self.sigma_mirror == self.hj_parity
    }
}

impl SpectralField {
    pub fn zeros(table: Arc<ShellTable>) -> Self {
        let n = table.len();
        SpectralField { table, amps: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn n_max(&self) -> usize {
        self.table.n_max
    }

    /// Amplitude at any frequency of ℳ_{≤N}, using the reality condition.
    pub fn amplitude(&self, k: &Frequency) -> Option<Complex64> {
        let (i, s) = self.table.locate(k)?;
        Some(match s {
            Sign::Plus => self.amps[i],
            Sign::Minus => self.amps[i].conj(),
        })
    }

    /// û at the positive frequency with index `i`.
    pub fn velocity_hat(&self, i: usize) -> [Complex64; 3] {
        let v = self.table.members[i].v;
        let c = self.amps[i];
        [c * v[0], c * v[1], c * v[2]]
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.amps {
            *c *= a;
        }
        out
    }

    /// Ḣ^s norm, summing over both signs.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for (m, c) in self.table.members.iter().zip(&self.amps) {
            let w = weight(m.shell, s);
            acc += 2.0 * w * c.norm_sqr();
        }
        acc.sqrt()
    }

    /// Scale used to turn absolute deviations into relative ones.
    fn amp_scale(&self) -> f64 {
        self.amps.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn canonical_amp(&self, kind: Kind, m: usize, p: Perm) -> Complex64 {
        let i = self.table.index_of_canonical(kind, m, p).expect("canonical frequency in table");
        self.amps[i]
    }

    pub fn symmetry_classify(&self, tol: f64) -> SymmetryFlags {
        let scale = self.amp_scale();
        let rel = |d: f64| if scale > 0.0 { d / scale } else { 0.0 };
        let t = &self.table;

        let odd_dev = rel(self.amps.iter().map(|c| c.re.abs()).fold(0.0, f64::max));

        let mut perm_dev: f64 = 0.0;
        for (i, m) in t.members.iter().enumerate() {
            let base = self.canonical_amp(m.kind, m.shell / 2, Perm::Id);
            perm_dev = perm_dev.max((self.amps[i] - base).norm());
        }
        let perm_dev = rel(perm_dev);

        let mut hj_dev: f64 = 0.0;
        let mut n = 1;
        while n <= t.n_max {
            let m = n / 2;
            hj_dev = hj_dev.max((self.canonical_amp(Kind::H, m, Perm::Id) - self.canonical_amp(Kind::J, m, Perm::Id)).norm());
            n += 2;
        }
        let hj_dev = rel(hj_dev);

        // u(x) = M_σ u(M_σ x)  ⇔  c_k = −conj(c_{Ak}) with A = −M_σ.
        let mut mirror_dev: f64 = 0.0;
        for (i, m) in t.members.iter().enumerate() {
            let j = t.index_of(&mirror(&m.k)).expect("mirror stays on the shell");
            mirror_dev = mirror_dev.max((self.amps[i] + self.amps[j].conj()).norm());
        }
        let mirror_dev = rel(mirror_dev);

        let pos_dev = rel(self.amps.iter().map(|c| (-c.im).max(0.0)).fold(0.0, f64::max));

        SymmetryFlags {
            odd: odd_dev <= tol,
            permutation_symmetric: perm_dev <= tol,
            hj_parity: hj_dev <= tol,
            sigma_mirror: mirror_dev <= tol,
            coefficient_positive: pos_dev <= tol,
            odd_deviation: odd_dev,
            permutation_deviation: perm_dev,
            hj_deviation: hj_dev,
            sigma_mirror_deviation: mirror_dev,
            positivity_deviation: pos_dev,
        }
    }

    /// The odd, permutation-symmetric field with û(k) = iψ_n v^k on ℳ_n^+.
    pub fn from_psi(table: Arc<ShellTable>, psi: &[f64]) -> Result<Self, FieldError> {
        if psi.len() != table.n_max + 1 {
            return Err(FieldError::Invalid(format!(
                "psi has {} entries, truncation needs {}",
                psi.len(),
                table.n_max + 1
            )));
        }
        let amps = table.members.iter().map(|m| Complex64::new(0.0, psi[m.shell])).collect();
        Ok(SpectralField { table, amps })
    }

    /// φ_m = −i c_{k^m}, η_m = −i c_{h^m}, ζ_m = −i c_{j^m}.
    pub fn phi_eta_zeta(&self) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
        let ni = Complex64::new(0.0, -1.0);
        let n = self.table.n_max;
        let phi = (0..=n / 2).map(|m| ni * self.canonical_amp(Kind::K, m, Perm::Id)).collect();
        let count_odd = if n >= 1 { (n - 1) / 2 + 1 } else { 0 };
        let eta = (0..count_odd).map(|m| ni * self.canonical_amp(Kind::H, m, Perm::Id)).collect();
        let zeta = (0..count_odd).map(|m| ni * self.canonical_amp(Kind::J, m, Perm::Id)).collect();
        (phi, eta, zeta)
    }

    /// ψ_{2m} = φ_m, ψ_{2m+1} = η_m = ζ_m; rejects fields outside the symmetric class.
    pub fn to_psi(&self, tol: f64) -> Result<Vec<f64>, FieldError> {
        let scale = self.amp_scale();
        let lim = tol * scale.max(f64::MIN_POSITIVE);
        let t = &self.table;
        let mut psi = vec![0.0; t.n_max + 1];
        for n in 0..=t.n_max {
            let shell = t.shell(n);
            let base = self.amps[6 * n + shell.iter().position(|m| m.perm == Perm::Id && (m.kind == Kind::K || m.kind == Kind::H)).unwrap()];
            for (j, m) in shell.iter().enumerate() {
                let c = self.amps[6 * n + j];
                if c.re.abs() > lim {
                    return Err(FieldError::Symmetry { shell: n, what: "not odd", deviation: c.re.abs() });
                }
                let d = (c - base).norm();
                if d > lim {
                    let what = if m.kind == Kind::J { "hj-parity" } else { "permutation symmetry" };
                    // Distinguish a pure η/ζ split from a permutation defect.
                    if m.kind == Kind::J {
                        let jbase = self.canonical_amp(Kind::J, n / 2, Perm::Id);
                        if (c - jbase).norm() > lim {
                            return Err(FieldError::Symmetry { shell: n, what: "permutation symmetry", deviation: (c - jbase).norm() });
                        }
                    }
                    return Err(FieldError::Symmetry { shell: n, what, deviation: d });
                }
            }
            psi[n] = base.im;
        }
        Ok(psi)
    }

    /// (lower, ‖u‖²_{Ḣ^s}, upper) from the dyadic norm sandwich.
    pub fn norm_equivalence_check(&self, s: f64) -> Result<(f64, f64, f64), FieldError> {
        let psi = self.to_psi(DEFAULT_SYMMETRY_TOL)?;
        let d = dyadic_norm(&psi, s_tilde(s)).powi(2);
        let value = self.sobolev_norm(s).powi(2);
        Ok((12.0 * (12.0 * PI * PI).powf(s) * d, value, 12.0 * (20.0 * PI * PI).powf(s) * d))
    }

    /// ∫ u·ω dx evaluated on Fourier modes.
    pub fn helicity(&self) -> f64 {
        let mut acc = 0.0;
        for (i, m) in self.table.members.iter().enumerate() {
            let u = self.velocity_hat(i);
            let k = m.k.as_f64();
            let tpi = Complex64::new(0.0, 2.0 * PI);
            let w = [
                tpi * (k[1] * u[2] - k[2] * u[1]),
                tpi * (k[2] * u[0] - k[0] * u[2]),
                tpi * (k[0] * u[1] - k[1] * u[0]),
            ];
            let dot: Complex64 = (0..3).map(|j| u[j] * w[j].conj()).sum();
            // k and −k contribute complex conjugates.
            acc += 2.0 * dot.re;
        }
        acc
    }

    pub fn to_entries(&self) -> FieldFile {
        let entries = self
            .table
            .members
            .iter()
            .zip(&self.amps)
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(m, c)| FieldEntry {
                shell: m.shell,
                kind: m.kind.name().to_string(),
                permutation: m.perm.name().to_string(),
                sign: "+".to_string(),
                re: c.re,
                im: c.im,
            })
            .collect();
        FieldFile { truncation: self.table.n_max, entries }
    }

    pub fn from_entries(table: Arc<ShellTable>, file: &FieldFile) -> Result<Self, FieldError> {
        let mut f = SpectralField::zeros(table);
        for e in &file.entries {
            if e.shell > f.table.n_max {
                return Err(FieldError::OutOfRange { shell: e.shell, n_max: f.table.n_max });
            }
            let kind = Kind::from_name(&e.kind).ok_or_else(|| FieldError::Invalid(format!("kind {}", e.kind)))?;
            let perm = Perm::from_name(&e.permutation).ok_or_else(|| FieldError::Invalid(format!("permutation {}", e.permutation)))?;
            let expect_odd = e.shell % 2 == 1;
            if (kind == Kind::K) == expect_odd {
                return Err(FieldError::Invalid(format!("kind {} on shell {}", e.kind, e.shell)));
            }
            let k = crate::lattice::canonical_frequency(kind, e.shell / 2)?.permute(perm);
            let i = f.table.index_of(&k).ok_or(FieldError::Lattice(crate::error::LatticeError::NotInLattice(k)))?;
            let c = Complex64::new(e.re, e.im);
            match e.sign.as_str() {
                "+" | "plus" => f.amps[i] = c,
                "-" | "minus" => f.amps[i] = c.conj(),
                s => return Err(FieldError::Invalid(format!("sign {s}"))),
            }
        }
        Ok(f)
    }
}

/// (4π²|k|²)^s on shell n.
pub fn weight(n: usize, s: f64) -> f64 {
    if s == 0.0 {
        return 1.0;
    }
    (4.0 * PI * PI * shell_norm_sq_f64(n)).powf(s)
}

pub fn shell_norm_sq_f64(n: usize) -> f64 {
    3.0 * 4f64.powi(n as i32) + 2.0 * 3f64.powi(n as i32)
}

/// ‖ψ‖_{ℋ^s̃} = (Σ 3^{s̃n} ψ_n²)^{1/2}.
pub fn dyadic_norm(psi: &[f64], st: f64) -> f64 {
    psi.iter()
        .enumerate()
        .map(|(n, p)| 3f64.powf(st * n as f64) * p * p)
        .sum::<f64>()
        .sqrt()
}

/// ℙ_ℳ of a general Fourier-space vector field: c_k = v^k·ŵ(k).
///
/// Modes off ℳ or beyond the truncation are dropped. A negative frequency
/// only contributes if its positive partner is absent.
pub fn project_m(table: Arc<ShellTable>, raw: &[(Frequency, [Complex64; 3])]) -> SpectralField {
    let mut f = SpectralField::zeros(table);
    let mut set = vec![false; f.amps.len()];
    let mut neg: Vec<(usize, Complex64)> = Vec::new();
    for (k, w) in raw {
        let Some(c) = classify(k) else { continue };
        if c.shell > f.table.n_max {
            continue;
        }
        let Some((i, s)) = f.table.locate(k) else { continue };
        let v = f.table.members[i].v;
        let a = w[0] * v[0] + w[1] * v[1] + w[2] * v[2];
        match s {
            Sign::Plus => {
                f.amps[i] = a;
                set[i] = true;
            }
            Sign::Minus => neg.push((i, a.conj())),
        }
    }
    for (i, a) in neg {
        if !set[i] {
            f.amps[i] = a;
        }
    }
    f
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FieldEntry {
    pub shell: usize,
    pub kind: String,
    pub permutation: String,
    pub sign: String,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FieldFile {
    pub truncation: usize,
    pub entries: Vec<FieldEntry>,
}

/// Random field with independent complex amplitudes of unit scale.
pub fn random_field<R: rand::Rng>(table: Arc<ShellTable>, rng: &mut R) -> SpectralField {
    let n = table.len();
    let amps = (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    SpectralField { table, amps }
}

/// Odd, permutation-symmetric field with independent φ_m, η_m, ζ_m.
pub fn symmetric_field(table: Arc<ShellTable>, phi: &[f64], eta: &[f64], zeta: &[f64]) -> SpectralField {
    let amps = table
        .members
        .iter()
        .map(|m| {
            let x = match m.kind {
                Kind::K => phi[m.shell / 2],
                Kind::H => eta[m.shell / 2],
                Kind::J => zeta[m.shell / 2],
            };
            Complex64::new(0.0, x)
        })
        .collect();
    SpectralField { table, amps }
}
