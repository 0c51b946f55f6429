//! The projected nonlinearity B(u,w) = −½ℙ_ℳ((u·∇)w + (w·∇)u) on ℳ.
//!
//! At an output frequency q,
//!
//! B(u,w)(q) = −πi Σ_{j+k=q} c_j d_k T(j,k,q),
//! T(j,k,q) = (v^j·k)(v^k·v^q) + (v^k·j)(v^j·v^q),
//!
//! where the sum runs over ordered pairs of frequencies of either sign.

use std::f64::consts::PI;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LatticeError, VerificationError};
use crate::field::SpectralField;
use crate::lattice::{canonical_frequency, classify, constraint_direction, projection_numerator, Frequency, Kind, Perm, ShellTable, Sign};

/// a_m = √6·π·3^m / (1 + ½(3/4)^{2m})^{1/2}.
pub fn a_coef(m: usize) -> f64 {
    6f64.sqrt() * PI * 3f64.powi(m as i32) / (1.0 + 0.5 * 0.75f64.powi(2 * m as i32)).sqrt()
}

/// b_m = √2·π·3^{m+1} / (1 + ⅜(3/4)^{2m})^{1/2}.
pub fn b_coef(m: usize) -> f64 {
    2f64.sqrt() * PI * 3f64.powi(m as i32 + 1) / (1.0 + 0.375 * 0.75f64.powi(2 * m as i32)).sqrt()
}

/// β_n = (1 + ½(3/4)^n)^{−1/2}, with β_{−1} = 0.
pub fn beta(n: i64) -> f64 {
    if n < 0 {
        return 0.0;
    }
    1.0 / (1.0 + 0.5 * 0.75f64.powi(n as i32)).sqrt()
}

/// (β_n, attack √2πβ_{n−1}(√3)^n, drain √2πβ_n(√3)^{n+1}).
pub fn reduced_coefficients(n: usize) -> (f64, f64, f64) {
    let s3 = 3f64.sqrt();
    let bn = beta(n as i64);
    let attack = 2f64.sqrt() * PI * beta(n as i64 - 1) * s3.powi(n as i32);
    let drain = 2f64.sqrt() * PI * bn * s3.powi(n as i32 + 1);
    (bn, attack, drain)
}

/// d_n(α) = (4π²(3·4^n + 2·3^n))^α.
pub fn dissipation(n: usize, alpha: f64) -> f64 {
    crate::field::weight(n, alpha)
}

fn q916(m: usize) -> BigRational {
    BigRational::new(BigInt::from(9).pow(m as u32), BigInt::from(16).pow(m as u32))
}

/// a_m² / π² as an exact rational.
pub fn a_sq_over_pi_sq(m: usize) -> BigRational {
    let num = BigRational::from_integer(BigInt::from(6) * BigInt::from(9).pow(m as u32));
    num / (BigRational::one() + BigRational::new(1.into(), 2.into()) * q916(m))
}

/// b_m² / π² as an exact rational.
pub fn b_sq_over_pi_sq(m: usize) -> BigRational {
    let num = BigRational::from_integer(BigInt::from(2) * BigInt::from(9).pow(m as u32 + 1));
    num / (BigRational::one() + BigRational::new(3.into(), 8.into()) * q916(m))
}

fn dot_big(a: &[i128; 3], b: &[i128; 3]) -> BigInt {
    (0..3).map(|i| BigInt::from(a[i]) * BigInt::from(b[i])).sum()
}

/// Exact numerator and squared denominator of T(j,k,q), i.e. T = num/√den.
pub fn interaction_exact(j: &Frequency, k: &Frequency, q: &Frequency) -> Result<(BigInt, BigInt), LatticeError> {
    let wj = projection_numerator(j).ok_or(LatticeError::Overflow(*j))?;
    let wk = projection_numerator(k).ok_or(LatticeError::Overflow(*k))?;
    let wq = projection_numerator(q).ok_or(LatticeError::Overflow(*q))?;
    let num = dot_big(&wj, &k.0) * dot_big(&wk, &wq) + dot_big(&wk, &j.0) * dot_big(&wj, &wq);
    let den = dot_big(&wj, &wj) * dot_big(&wk, &wk) * dot_big(&wq, &wq);
    Ok((num, den))
}

/// T(j,k,q) in floating point from the exact numerator.
pub fn interaction_t(j: &Frequency, k: &Frequency, q: &Frequency) -> Result<f64, LatticeError> {
    let (num, den) = interaction_exact(j, k, q)?;
    // Both stay well inside the f64 exponent range for shells ≤ MAX_SHELL.
    let n = num.to_f64().ok_or(LatticeError::Overflow(*q))?;
    let d = den.to_f64().ok_or(LatticeError::Overflow(*q))?;
    Ok(n / d.sqrt())
}

#[derive(Clone, Copy, Debug)]
struct Term {
    j: usize,
    j_neg: bool,
    k: usize,
    k_neg: bool,
    coef: Complex64,
}

/// Precomputed ordered-pair interactions feeding each positive output frequency.
#[derive(Clone, Debug)]
pub struct InteractionTable {
    pub input: Arc<ShellTable>,
    pub output: Arc<ShellTable>,
    offsets: Vec<usize>,
    terms: Vec<Term>,
}

impl InteractionTable {
    pub fn new(input: Arc<ShellTable>, output: Arc<ShellTable>) -> Result<Self, LatticeError> {
        let mut offsets = vec![0];
        let mut terms = Vec::new();
        for q in &output.members {
            let lo = q.shell.saturating_sub(1);
            let hi = (q.shell + 1).min(input.n_max);
            if lo <= hi && lo <= input.n_max {
                for n in lo..=hi {
                    for (jj, jm) in input.shell(n).iter().enumerate() {
                        let ji = 6 * n + jj;
                        for j_neg in [false, true] {
                            let jf = if j_neg { jm.k.neg() } else { jm.k };
                            let kf = Frequency([q.k.0[0] - jf.0[0], q.k.0[1] - jf.0[1], q.k.0[2] - jf.0[2]]);
                            let Some((ki, ks)) = input.locate(&kf) else { continue };
                            let t = interaction_t(&jf, &kf, &q.k)?;
                            terms.push(Term {
                                j: ji,
                                j_neg,
                                k: ki,
                                k_neg: ks == Sign::Minus,
                                coef: Complex64::new(0.0, -PI * t),
                            });
                        }
                    }
                }
            }
            offsets.push(terms.len());
        }
        Ok(InteractionTable { input, output, offsets, terms })
    }

    /// Galerkin table: inputs and outputs on the same truncation.
    pub fn galerkin(table: Arc<ShellTable>) -> Result<Self, LatticeError> {
        Self::new(table.clone(), table)
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// B(u,w) on raw positive-half amplitude slices.
    pub fn apply(&self, u: &[Complex64], w: &[Complex64], out: &mut [Complex64]) {
        let get = |a: &[Complex64], i: usize, neg: bool| if neg { a[i].conj() } else { a[i] };
        for (qi, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in &self.terms[self.offsets[qi]..self.offsets[qi + 1]] {
                acc += t.coef * get(u, t.j, t.j_neg) * get(w, t.k, t.k_neg);
            }
            *o = acc;
        }
    }

    /// Pairs (j, k) feeding output index `qi`, with signs.
    pub fn pairs_for(&self, qi: usize) -> Vec<(Frequency, Frequency)> {
        let f = |i: usize, neg: bool| {
            let k = self.input.members[i].k;
            if neg {
                k.neg()
            } else {
                k
            }
        };
        self.terms[self.offsets[qi]..self.offsets[qi + 1]]
            .iter()
            .map(|t| (f(t.j, t.j_neg), f(t.k, t.k_neg)))
            .collect()
    }
}

/// B(u,w) evaluated with a precomputed table.
pub fn bilinear_b(table: &InteractionTable, u: &SpectralField, w: &SpectralField) -> SpectralField {
    let mut out = SpectralField::zeros(table.output.clone());
    table.apply(&u.amps, &w.amps, &mut out.amps);
    out
}

/// A complex (not necessarily real) field given as a list of modes c·v^k e^{2πik·x}.
pub type ModeList = Vec<(Frequency, Complex64)>;

fn vdir(k: &Frequency) -> Result<[f64; 3], LatticeError> {
    Ok(constraint_direction(k)?.direction)
}

/// ℙ_ℳ((w·∇)u + (u·∇)w) by direct convolution of 3-vectors, without the
/// interaction table. Returns each output frequency with its projected vector.
pub fn convolve_modes(u: &ModeList, w: &ModeList) -> Result<Vec<(Frequency, [Complex64; 3])>, LatticeError> {
    let mut out: Vec<(Frequency, [Complex64; 3])> = Vec::new();
    let tpi = Complex64::new(0.0, 2.0 * PI);
    for (a, ca) in u {
        let va = vdir(a)?;
        let fa = a.as_f64();
        for (b, cb) in w {
            let q = a.checked_add(b).ok_or(LatticeError::Overflow(*a))?;
            if classify(&q).is_none() {
                continue;
            }
            let vb = vdir(b)?;
            let fb = b.as_f64();
            let ua: Vec<Complex64> = va.iter().map(|x| ca * x).collect();
            let wb: Vec<Complex64> = vb.iter().map(|x| cb * x).collect();
            let wb_dot_a: Complex64 = (0..3).map(|i| wb[i] * fa[i]).sum();
            let ua_dot_b: Complex64 = (0..3).map(|i| ua[i] * fb[i]).sum();
            let mut raw = [Complex64::new(0.0, 0.0); 3];
            for i in 0..3 {
                raw[i] = tpi * (wb_dot_a * ua[i] + ua_dot_b * wb[i]);
            }
            let vq = vdir(&q)?;
            let p: Complex64 = (0..3).map(|i| raw[i] * vq[i]).sum();
            let proj = [p * vq[0], p * vq[1], p * vq[2]];
            if let Some(e) = out.iter_mut().find(|(f, _)| *f == q) {
                for i in 0..3 {
                    e.1[i] += proj[i];
                }
            } else {
                out.push((q, proj));
            }
        }
    }
    Ok(out)
}

/// Real field as an explicit list of modes over both signs.
pub fn field_modes(f: &SpectralField) -> ModeList {
    let mut out = Vec::with_capacity(2 * f.amps.len());
    for (m, c) in f.table.members.iter().zip(&f.amps) {
        out.push((m.k, *c));
        out.push((m.k.neg(), c.conj()));
    }
    out
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub enum Coefficient {
    A,
    AHalf,
    B,
    BHalf,
}

/// One catalogued mode interaction: inputs c_a v^a, c_b v^b and the expected
/// ℙ_ℳ((ũ·∇)u + (u·∇)ũ) = sign·coef·i v^q.
#[derive(Clone, Debug)]
pub struct CatalogueCase {
    pub a: Frequency,
    pub ca: Complex64,
    pub b: Frequency,
    pub cb: Complex64,
    pub q: Frequency,
    pub sign: f64,
    pub coefficient: Coefficient,
}

pub fn catalogue_case(m: usize, case: usize) -> Result<CatalogueCase, LatticeError> {
    let k = canonical_frequency(Kind::K, m)?;
    let h = canonical_frequency(Kind::H, m)?;
    let j = canonical_frequency(Kind::J, m)?;
    let k1 = canonical_frequency(Kind::K, m + 1)?;
    let i = Complex64::new(0.0, 1.0);
    let mi = -i;
    let c = |a, ca, b, cb, q, sign, coefficient| CatalogueCase { a, ca, b, cb, q, sign, coefficient };
    Ok(match case {
        1 => c(k, i, k.permute(Perm::P12), i, h, -1.0, Coefficient::A),
        2 => c(k, i, k.permute(Perm::P23), i, j, -1.0, Coefficient::A),
        3 => c(h, i, j, i, k1, -1.0, Coefficient::B),
        4 => c(h, i, k.permute(Perm::P12).neg(), mi, k, 1.0, Coefficient::AHalf),
        5 => c(j, i, k.permute(Perm::P23).neg(), mi, k, 1.0, Coefficient::AHalf),
        6 => c(k1, i, j.neg(), mi, h, 1.0, Coefficient::BHalf),
        7 => c(k1.permute(Perm::P12), i, j.permute(Perm::P12).neg(), mi, h, 1.0, Coefficient::BHalf),
        8 => c(k1, i, h.neg(), mi, j, 1.0, Coefficient::BHalf),
        9 => c(k1.permute(Perm::P23), i, h.permute(Perm::P23).neg(), mi, j, 1.0, Coefficient::BHalf),
        _ => panic!("interaction cases are numbered 1..=9"),
    })
}

impl CatalogueCase {
    pub fn expected_value(&self, m: usize) -> f64 {
        self.sign
            * match self.coefficient {
                Coefficient::A => a_coef(m),
                Coefficient::AHalf => a_coef(m) / 2.0,
                Coefficient::B => b_coef(m),
                Coefficient::BHalf => b_coef(m) / 2.0,
            }
    }

    /// Expected squared coefficient divided by π².
    pub fn expected_sq_over_pi_sq(&self, m: usize) -> BigRational {
        let quarter = BigRational::new(1.into(), 4.into());
        match self.coefficient {
            Coefficient::A => a_sq_over_pi_sq(m),
            Coefficient::AHalf => a_sq_over_pi_sq(m) * quarter,
            Coefficient::B => b_sq_over_pi_sq(m),
            Coefficient::BHalf => b_sq_over_pi_sq(m) * quarter,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InteractionCaseResult {
    pub m: usize,
    pub case: usize,
    pub expected: f64,
    pub computed: f64,
    pub relative_error: f64,
    pub exact_square_match: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InteractionReport {
    pub m_max: usize,
    pub tol: f64,
    pub cases: Vec<InteractionCaseResult>,
    pub max_relative_error: f64,
    pub passed: bool,
}

fn check_case(m: usize, case: usize, tol: f64) -> Result<InteractionCaseResult, VerificationError> {
    let cc = catalogue_case(m, case)?;
    let out = convolve_modes(&vec![(cc.a, cc.ca)], &vec![(cc.b, cc.cb)])?;
    let fail = |what: String, deviation: f64| VerificationError::Interaction { m, case, what, deviation };
    let expected = cc.expected_value(m);
    // Support: exactly one nonzero output at the catalogued frequency.
    let scale = expected.abs();
    let mut at_q = None;
    for (f, v) in &out {
        let mag = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if *f == cc.q {
            at_q = Some(*v);
        } else if mag > tol * scale {
            return Err(fail(format!("unexpected output at {f}"), mag / scale));
        }
    }
    let v = at_q.ok_or_else(|| fail("no output at the catalogued frequency".into(), 1.0))?;
    // Direction: component orthogonal to v^q.
    let vq = vdir(&cc.q)?;
    let along: Complex64 = (0..3).map(|i| v[i] * vq[i]).sum();
    let perp = (0..3).map(|i| (v[i] - along * vq[i]).norm_sqr()).sum::<f64>().sqrt();
    if perp > tol * scale {
        return Err(fail("output not parallel to v^q".into(), perp / scale));
    }
    // Coefficient: along = i·expected.
    if along.re.abs() > tol * scale {
        return Err(fail("coefficient not purely imaginary".into(), along.re.abs() / scale));
    }
    let rel = (along.im - expected).abs() / scale;
    if rel > tol {
        return Err(fail(format!("coefficient {} != {}", along.im, expected), rel));
    }
    // Exact: (2πT)² = π² · expected_sq, i.e. 4 num² = expected_sq · den.
    let (num, den) = interaction_exact(&cc.a, &cc.b, &cc.q)?;
    let lhs = BigRational::from_integer(BigInt::from(4) * &num * &num);
    let rhs = cc.expected_sq_over_pi_sq(m) * BigRational::from_integer(den);
    let exact = lhs == rhs;
    if !exact {
        return Err(fail("squared coefficient differs from the exact rational".into(), rel));
    }
    Ok(InteractionCaseResult { m, case, expected, computed: along.im, relative_error: rel, exact_square_match: exact })
}

/// Checks the nine catalogued interactions for every m ≤ m_max.
pub fn verify_appendix_interactions(m_max: usize, tol: f64) -> Result<InteractionReport, VerificationError> {
    let jobs: Vec<(usize, usize)> = (0..=m_max).flat_map(|m| (1..=9).map(move |c| (m, c))).collect();
    let results: Result<Vec<_>, _> = jobs.par_iter().map(|&(m, c)| check_case(m, c, tol)).collect();
    let cases = results?;
    let max_relative_error = cases.iter().map(|c| c.relative_error).fold(0.0, f64::max);
    Ok(InteractionReport { m_max, tol, cases, max_relative_error, passed: true })
}

/// ‖B(u,w)‖_{Ḣ^s} / (‖u‖‖w‖ in Ḣ^{s/2 + log3/(4log2)}); `None` if either input vanishes.
pub fn bilinear_ratio(table: &InteractionTable, u: &SpectralField, w: &SpectralField, s: f64) -> Option<f64> {
    let sp = s / 2.0 + 3f64.ln() / (4.0 * 2f64.ln());
    let nu = u.sobolev_norm(sp);
    let nw = w.sobolev_norm(sp);
    if nu == 0.0 || nw == 0.0 {
        return None;
    }
    Some(bilinear_b(table, u, w).sobolev_norm(s) / (nu * nw))
}

/// Largest observed ‖B(u,w)‖_{Ḣ^s} / (‖u‖‖w‖ in Ḣ^{s/2 + log3/(4log2)}) over random fields.
pub fn estimate_bilinear_constant(s: f64, n: usize, sample_count: usize, seed: u64) -> Result<f64, LatticeError> {
    let input = Arc::new(ShellTable::new(n)?);
    let output = Arc::new(ShellTable::new(n + 1)?);
    let table = InteractionTable::new(input.clone(), output)?;
    let ratios: Vec<f64> = (0..sample_count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let make = |rng: &mut ChaCha8Rng| {
                let decay: f64 = rng.gen_range(0.0..2.0);
                let mut f = crate::field::random_field(input.clone(), rng);
                for (mm, c) in f.table.clone().members.iter().zip(f.amps.iter_mut()) {
                    *c *= 3f64.powf(-decay * mm.shell as f64);
                }
                f
            };
            let u = make(&mut rng);
            let w = make(&mut rng);
            bilinear_ratio(&table, &u, &w, s).unwrap_or(f64::NAN)
        })
        .collect();
    Ok(ratios.into_iter().filter(|r| r.is_finite()).fold(0.0, f64::max))
}
