//! The frequency set ℳ, its shells and the constraint directions v^k.
//!
//! All lattice arithmetic is carried out in `i128` with overflow checks; the
//! exact rational data attached to each frequency uses arbitrary precision.

use std::collections::{HashMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::LatticeError;

/// Deepest shell whose frequencies and squared norms fit in `i128`.
pub const MAX_SHELL: usize = 60;

pub const SIGMA: [i128; 3] = [1, 1, 1];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Frequency(pub [i128; 3]);

impl Frequency {
    pub fn new(a: i128, b: i128, c: i128) -> Self {
        Frequency([a, b, c])
    }

    pub fn sigma_dot(&self) -> i128 {
        self.0[0] + self.0[1] + self.0[2]
    }

    pub fn dot(&self, other: &Frequency) -> Option<i128> {
        let mut acc: i128 = 0;
        for i in 0..3 {
            acc = acc.checked_add(self.0[i].checked_mul(other.0[i])?)?;
        }
        Some(acc)
    }

    pub fn norm_sq(&self) -> Option<i128> {
        self.dot(self)
    }

    pub fn checked_add(&self, other: &Frequency) -> Option<Frequency> {
        Some(Frequency([
            self.0[0].checked_add(other.0[0])?,
            self.0[1].checked_add(other.0[1])?,
            self.0[2].checked_add(other.0[2])?,
        ]))
    }

    pub fn neg(&self) -> Frequency {
        Frequency([-self.0[0], -self.0[1], -self.0[2]])
    }

    pub fn permute(&self, p: Perm) -> Frequency {
        Frequency(p.apply(self.0))
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0, 0, 0]
    }

    pub fn as_f64(&self) -> [f64; 3] {
        [self.0[0] as f64, self.0[1] as f64, self.0[2] as f64]
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

/// Coordinate permutations, acting by `P(v)_i = v_{map[i]}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Perm {
    Id,
    P12,
    P13,
    P23,
    C231,
    C312,
}

impl Perm {
    pub const ALL: [Perm; 6] = [Perm::Id, Perm::P12, Perm::P13, Perm::P23, Perm::C231, Perm::C312];

    pub fn map(self) -> [usize; 3] {
        match self {
            Perm::Id => [0, 1, 2],
            Perm::P12 => [1, 0, 2],
            Perm::P13 => [2, 1, 0],
            Perm::P23 => [0, 2, 1],
            Perm::C231 => [1, 2, 0],
            Perm::C312 => [2, 0, 1],
        }
    }

    pub fn apply<T: Copy>(self, v: [T; 3]) -> [T; 3] {
        let m = self.map();
        [v[m[0]], v[m[1]], v[m[2]]]
    }

    pub fn inverse(self) -> Perm {
        match self {
            Perm::C231 => Perm::C312,
            Perm::C312 => Perm::C231,
            p => p,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Perm::Id => "id",
            Perm::P12 => "p12",
            Perm::P13 => "p13",
            Perm::P23 => "p23",
            Perm::C231 => "c231",
            Perm::C312 => "c312",
        }
    }

    pub fn from_name(s: &str) -> Option<Perm> {
        Perm::ALL.into_iter().find(|p| p.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    K,
    H,
    J,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::K => "K",
            Kind::H => "H",
            Kind::J => "J",
        }
    }

    pub fn from_name(s: &str) -> Option<Kind> {
        match s {
            "K" | "k" => Some(Kind::K),
            "H" | "h" => Some(Kind::H),
            "J" | "j" => Some(Kind::J),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> i128 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// Classification of a member of ℳ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Membership {
    pub sign: Sign,
    pub shell: usize,
    pub kind: Kind,
    pub perm: Perm,
}

fn pow_i128(base: i128, e: u32) -> Option<i128> {
    base.checked_pow(e)
}

/// k^m, h^m or j^m.
pub fn canonical_frequency(kind: Kind, m: usize) -> Result<Frequency, LatticeError> {
    let shell = match kind {
        Kind::K => 2 * m,
        _ => 2 * m + 1,
    };
    if shell > MAX_SHELL {
        return Err(LatticeError::TruncationTooDeep { shell, max: MAX_SHELL });
    }
    let too_deep = || LatticeError::TruncationTooDeep { shell, max: MAX_SHELL };
    let three = pow_i128(3, m as u32).ok_or_else(too_deep)?;
    let (base, d) = match kind {
        Kind::K => (pow_i128(4, m as u32).ok_or_else(too_deep)?, [1, 0, -1]),
        Kind::H => (pow_i128(2, 2 * m as u32 + 1).ok_or_else(too_deep)?, [1, 1, -2]),
        Kind::J => (pow_i128(2, 2 * m as u32 + 1).ok_or_else(too_deep)?, [2, -1, -1]),
    };
    Ok(Frequency([
        base + three * d[0],
        base + three * d[1],
        base + three * d[2],
    ]))
}

/// Shell index of a positive frequency from σ·k = 3·2^n.
fn shell_of_sigma_dot(s: i128) -> Option<usize> {
    if s <= 0 || s % 3 != 0 {
        return None;
    }
    let q = s / 3;
    if q & (q - 1) != 0 {
        return None;
    }
    Some(q.trailing_zeros() as usize)
}

/// Exact membership test for ℳ.
pub fn classify(k: &Frequency) -> Option<Membership> {
    let s = k.sigma_dot();
    let (sign, pos) = if s > 0 {
        (Sign::Plus, *k)
    } else if s < 0 {
        (Sign::Minus, k.neg())
    } else {
        return None;
    };
    let n = shell_of_sigma_dot(pos.sigma_dot())?;
    if n > MAX_SHELL {
        return None;
    }
    let kinds: &[Kind] = if n % 2 == 0 { &[Kind::K] } else { &[Kind::H, Kind::J] };
    for &kind in kinds {
        let c = canonical_frequency(kind, n / 2).ok()?;
        for p in Perm::ALL {
            if c.permute(p) == pos {
                return Some(Membership { sign, shell: n, kind, perm: p });
            }
        }
    }
    None
}

/// The six members of ℳ_n^+ in descending lexicographic order.
pub fn shell_frequencies(n: usize) -> Result<Vec<(Frequency, Kind, Perm)>, LatticeError> {
    let m = n / 2;
    let kinds: &[Kind] = if n % 2 == 0 { &[Kind::K] } else { &[Kind::H, Kind::J] };
    let mut out: Vec<(Frequency, Kind, Perm)> = Vec::with_capacity(6);
    let mut seen = HashSet::new();
    for &kind in kinds {
        let c = canonical_frequency(kind, m)?;
        for p in Perm::ALL {
            let f = c.permute(p);
            if seen.insert(f) {
                out.push((f, kind, p));
            }
        }
    }
    out.sort_by(|a, b| b.0.cmp(&a.0));
    debug_assert_eq!(out.len(), 6);
    Ok(out)
}

/// Exact and floating data for v^k.
#[derive(Clone, Debug)]
pub struct ConstraintDirection {
    pub direction: [f64; 3],
    pub unnormalized: [BigRational; 3],
    pub norm_sq: BigRational,
}

/// Integer numerator W = |k|²σ − (σ·k)k, so that w^k = W/|k|².
pub fn projection_numerator(k: &Frequency) -> Option<[i128; 3]> {
    let nk = k.norm_sq()?;
    let s = k.sigma_dot();
    let mut w = [0i128; 3];
    for i in 0..3 {
        w[i] = nk.checked_sub(s.checked_mul(k.0[i])?)?;
    }
    Some(w)
}

fn unit_from_numerator(w: &[i128; 3]) -> [f64; 3] {
    // Scale by the largest component before converting to avoid precision loss.
    let big = w.iter().map(|x| x.unsigned_abs()).max().unwrap_or(1).max(1) as f64;
    let v = [w[0] as f64 / big, w[1] as f64 / big, w[2] as f64 / big];
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

pub fn constraint_direction(k: &Frequency) -> Result<ConstraintDirection, LatticeError> {
    if k.is_zero() {
        return Err(LatticeError::Degenerate(*k));
    }
    if classify(k).is_none() {
        let w = projection_numerator(k).ok_or(LatticeError::Overflow(*k))?;
        if w == [0, 0, 0] {
            return Err(LatticeError::Degenerate(*k));
        }
        return Err(LatticeError::NotInLattice(*k));
    }
    let w = projection_numerator(k).ok_or(LatticeError::Overflow(*k))?;
    let nk = BigInt::from(k.norm_sq().ok_or(LatticeError::Overflow(*k))?);
    let unnormalized = [
        BigRational::new(BigInt::from(w[0]), nk.clone()),
        BigRational::new(BigInt::from(w[1]), nk.clone()),
        BigRational::new(BigInt::from(w[2]), nk.clone()),
    ];
    let norm_sq = unnormalized
        .iter()
        .fold(BigRational::zero(), |acc, x| acc + x * x);
    Ok(ConstraintDirection { direction: unit_from_numerator(&w), unnormalized, norm_sq })
}

/// One member of ℳ_n^+ with its cached direction data.
#[derive(Clone, Debug)]
pub struct ShellMember {
    pub k: Frequency,
    pub shell: usize,
    pub kind: Kind,
    pub perm: Perm,
    pub w: [i128; 3],
    pub v: [f64; 3],
}

/// ℳ_n^+ for n = 0..=N with fixed ordering; index = 6n + position.
#[derive(Clone, Debug)]
pub struct ShellTable {
    pub n_max: usize,
    pub members: Vec<ShellMember>,
    index: HashMap<Frequency, usize>,
}

impl ShellTable {
    pub fn new(n_max: usize) -> Result<Self, LatticeError> {
        if n_max > MAX_SHELL {
            return Err(LatticeError::TruncationTooDeep { shell: n_max, max: MAX_SHELL });
        }
        let mut members = Vec::with_capacity(6 * (n_max + 1));
        let mut index = HashMap::new();
        for n in 0..=n_max {
            for (k, kind, perm) in shell_frequencies(n)? {
                let w = projection_numerator(&k).ok_or(LatticeError::Overflow(k))?;
                index.insert(k, members.len());
                members.push(ShellMember { k, shell: n, kind, perm, w, v: unit_from_numerator(&w) });
            }
        }
        Ok(ShellTable { n_max, members, index })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Index of a positive frequency.
    pub fn index_of(&self, k: &Frequency) -> Option<usize> {
        self.index.get(k).copied()
    }

    /// Index and sign for a frequency of either sign.
    pub fn locate(&self, k: &Frequency) -> Option<(usize, Sign)> {
        if let Some(i) = self.index_of(k) {
            return Some((i, Sign::Plus));
        }
        self.index_of(&k.neg()).map(|i| (i, Sign::Minus))
    }

    pub fn shell(&self, n: usize) -> &[ShellMember] {
        &self.members[6 * n..6 * n + 6]
    }

    /// Index of the permuted canonical frequency `P(kind^m)`.
    pub fn index_of_canonical(&self, kind: Kind, m: usize, p: Perm) -> Option<usize> {
        let k = canonical_frequency(kind, m).ok()?.permute(p);
        self.index_of(&k)
    }
}

/// |k|² on shell n: 3·4^n + 2·3^n.
pub fn shell_norm_sq(n: usize) -> Option<i128> {
    pow_i128(4, n as u32)?
        .checked_mul(3)?
        .checked_add(pow_i128(3, n as u32)?.checked_mul(2)?)
}

/// The reflection −M_σ k = (2σ·k/3)σ − k.
pub fn mirror(k: &Frequency) -> Frequency {
    let s = k.sigma_dot();
    debug_assert!(s % 3 == 0);
    let c = 2 * s / 3;
    Frequency([c - k.0[0], c - k.0[1], c - k.0[2]])
}

/// Report of exact lattice verification.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeReport {
    pub n_max: usize,
    pub pair_search_max: usize,
    pub frequencies_checked: usize,
    pub sum_pairs_found: usize,
    pub catalogue_pairs: usize,
    pub conical_ratios_checked: usize,
    pub passed: bool,
}

/// Ordered (a, b, a+b) triples of canonical type, before permutation and sign.
fn catalogue_for_generation(m: usize) -> Result<Vec<[Frequency; 3]>, LatticeError> {
    let k = canonical_frequency(Kind::K, m)?;
    let h = canonical_frequency(Kind::H, m)?;
    let j = canonical_frequency(Kind::J, m)?;
    let mut out = vec![
        [k, k.permute(Perm::P12), h],
        [k, k.permute(Perm::P23), j],
        [h, k.permute(Perm::P12).neg(), k],
        [j, k.permute(Perm::P23).neg(), k],
    ];
    if 2 * m + 2 <= MAX_SHELL {
        let k1 = canonical_frequency(Kind::K, m + 1)?;
        out.push([h, j, k1]);
        out.push([k1, j.neg(), h]);
        out.push([k1.permute(Perm::P12), j.permute(Perm::P12).neg(), h]);
        out.push([k1, h.neg(), j]);
        out.push([k1.permute(Perm::P23), h.permute(Perm::P23).neg(), j]);
    }
    Ok(out)
}

fn shell_of(k: &Frequency) -> usize {
    classify(k).map(|c| c.shell).unwrap_or(usize::MAX)
}

/// Every catalogued sum triple, closed under permutation, sign and order,
/// with all three frequencies in shells ≤ n_max.
pub fn sum_catalogue(n_max: usize) -> Result<HashSet<(Frequency, Frequency)>, LatticeError> {
    let mut set = HashSet::new();
    for m in 0..=n_max / 2 {
        for [a, b, c] in catalogue_for_generation(m)? {
            if shell_of(&a) > n_max || shell_of(&b) > n_max || shell_of(&c) > n_max {
                continue;
            }
            for p in Perm::ALL {
                for s in [1i128, -1] {
                    let f = |x: &Frequency| {
                        let y = x.permute(p);
                        if s < 0 {
                            y.neg()
                        } else {
                            y
                        }
                    };
                    set.insert((f(&a), f(&b)));
                    set.insert((f(&b), f(&a)));
                }
            }
        }
    }
    Ok(set)
}

/// Exact checks of the shell identities, conical ratios and sum closure.
///
/// `pair_max` bounds the exhaustive pair search, which is quadratic in the
/// number of frequencies.
pub fn verify_lattice_identities(n_max: usize, pair_max: usize) -> Result<LatticeReport, LatticeError> {
    if n_max > MAX_SHELL {
        return Err(LatticeError::TruncationTooDeep { shell: n_max, max: MAX_SHELL });
    }
    let mut checked = 0usize;
    let mut ratios = 0usize;
    for n in 0..=n_max {
        let expect_s = 3i128 << n;
        let expect_nsq = shell_norm_sq(n).ok_or(LatticeError::TruncationTooDeep { shell: n, max: MAX_SHELL })?;
        for (k, kind, perm) in shell_frequencies(n)? {
            let s = k.sigma_dot();
            let nsq = k.norm_sq().ok_or(LatticeError::Overflow(k))?;
            if s != expect_s {
                return Err(LatticeError::Violation(format!("sigma.k = {s} != {expect_s} at {k}")));
            }
            if nsq != expect_nsq {
                return Err(LatticeError::Violation(format!("|k|^2 = {nsq} != {expect_nsq} at {k}")));
            }
            match classify(&k) {
                Some(c) if c.shell == n && c.kind == kind && c.sign == Sign::Plus && c.perm == perm => {}
                other => {
                    return Err(LatticeError::Violation(format!("classify({k}) = {other:?}")));
                }
            }
            // (σ·k)²/(3|k|²) = 1/(1 + ⅔(3/4)^n)
            let lhs = BigRational::new(BigInt::from(s) * BigInt::from(s), BigInt::from(3) * BigInt::from(nsq));
            let q = BigRational::new(BigInt::from(3).pow(n as u32), BigInt::from(4).pow(n as u32));
            let rhs = BigRational::one() / (BigRational::one() + BigRational::new(2.into(), 3.into()) * q);
            if lhs != rhs {
                return Err(LatticeError::Violation(format!("conical ratio mismatch at {k}")));
            }
            ratios += 1;
            checked += 1;
        }
    }

    let pair_max = pair_max.min(n_max);
    let mut all = Vec::new();
    for n in 0..=pair_max {
        for (k, _, _) in shell_frequencies(n)? {
            all.push(k);
            all.push(k.neg());
        }
    }
    let catalogue = sum_catalogue(pair_max)?;
    let mut found = HashSet::new();
    for a in &all {
        for b in &all {
            let c = a.checked_add(b).ok_or(LatticeError::Overflow(*a))?;
            let Some(cm) = classify(&c) else { continue };
            if cm.shell > pair_max {
                // Output beyond the searched range is still a catalogued sum.
                let ca = classify(a).unwrap();
                let cb = classify(b).unwrap();
                let ok = ca.sign == cb.sign && ca.shell == cb.shell && cm.shell == ca.shell + 1;
                if !ok {
                    return Err(LatticeError::Violation(format!("unexpected sum {a} + {b} = {c}")));
                }
                continue;
            }
            if !catalogue.contains(&(*a, *b)) {
                return Err(LatticeError::Violation(format!("uncatalogued sum {a} + {b} = {c}")));
            }
            found.insert((*a, *b));
        }
    }
    if found.len() != catalogue.len() {
        return Err(LatticeError::Violation(format!(
            "catalogue has {} pairs, search found {}",
            catalogue.len(),
            found.len()
        )));
    }
    Ok(LatticeReport {
        n_max,
        pair_search_max: pair_max,
        frequencies_checked: checked,
        sum_pairs_found: found.len(),
        catalogue_pairs: catalogue.len(),
        conical_ratios_checked: ratios,
        passed: true,
    })
}
