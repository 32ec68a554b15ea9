//! Palindromic certificate sequences for the fiber distortion and the divergence
//! exponents they predict.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::Serialize;
use thiserror::Error;

use crate::endo::{EndoError, FreeEndo};
use crate::metrics::{DistortionTable, InverseDistortion};
use crate::scalar::{silver_ratio, Real};
use crate::words::{Alphabet, Letter, Word};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertError {
    #[error("constant C must exceed 1, got {0}")]
    BadConstant(f64),
    #[error("sequence must be nonempty")]
    Empty,
    #[error("radius {r} is below r0 = {r0}")]
    BelowR0 { r: f64, r0: f64 },
    #[error("sequence failed verification: {0}")]
    Unverified(String),
    #[error("no element of the sequence falls in [{lo}, {hi}]")]
    NoElement { lo: f64, hi: f64 },
    #[error(transparent)]
    Endo(#[from] EndoError),
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub index: u32,
    /// Exact length over the fiber basis.
    #[serde(serialize_with = "big_as_string")]
    pub r_length: BigUint,
    /// Upper bound on the ambient length, realized by `t_witness`.
    pub t_bound: u64,
    pub t_witness: String,
    /// Explicit fiber word when it is short enough to expand.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explicit: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub palindrome: Option<bool>,
}

fn big_as_string<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateSequence {
    pub family: String,
    pub elements: Vec<Certificate>,
}

impl CertificateSequence {
    pub fn r_lengths_f64(&self) -> Vec<f64> {
        self.elements.iter().map(|c| c.r_length.to_f64().unwrap_or(f64::INFINITY)).collect()
    }
}

/// Largest index that is expanded explicitly.
pub const EXPLICIT_MAX: u32 = 12;

/// `aₙ = φⁿ(a)` for `1 ≤ n ≤ n_max`, with `tⁿ a t⁻ⁿ` as ambient witness.
pub fn phi_certificates(n_max: u32) -> Result<CertificateSequence, CertError> {
    let ab = Alphabet::new(["a", "b"]).expect("valid");
    let phi = FreeEndo::phi_on(&ab);
    let elements = (1..=n_max)
        .map(|n| {
            let it = phi.iterate(Letter::pos(0), n)?;
            let explicit = if n <= EXPLICIT_MAX { Some(it.expand(usize::MAX)?) } else { None };
            Ok(Certificate {
                index: n,
                r_length: it.exact_length.clone(),
                t_bound: 2 * u64::from(n) + 1,
                t_witness: format!("t^{n} a t^-{n}"),
                palindrome: explicit.as_ref().map(Word::is_palindrome),
                explicit: explicit.map(|w| w.to_string()),
            })
        })
        .collect::<Result<Vec<_>, EndoError>>()?;
    Ok(CertificateSequence { family: "phi".into(), elements })
}

/// A sequence given only by lengths, for tests of the checker.
pub fn sequence_from_lengths(family: &str, lengths: &[(u64, u64)]) -> CertificateSequence {
    let elements = lengths
        .iter()
        .enumerate()
        .map(|(i, &(r, t))| Certificate {
            index: i as u32 + 1,
            r_length: BigUint::from(r),
            t_bound: t,
            t_witness: String::new(),
            explicit: None,
            palindrome: None,
        })
        .collect();
    CertificateSequence { family: family.into(), elements }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    /// Checked against the exhaustive distortion table.
    Exact,
    /// Checked through `2^{|g|_T / C} ≤ C |g|_R`.
    Surrogate,
    /// Not checkable with the data supplied.
    Unchecked,
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexReport {
    pub index: u32,
    pub growth: bool,
    pub ratio: bool,
    pub distortion: bool,
    pub tier: Tier,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub palindrome: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub constant: f64,
    /// `|g_m|_R` strictly increasing on the prefix.
    pub condition1: bool,
    /// `|g_{m+1}|_R ≤ C |g_m|_R`.
    pub condition2: bool,
    /// `Dist(|g_m|_T / C) ≤ C |g_m|_R`.
    pub condition3: bool,
    pub palindromic: bool,
    pub per_index: Vec<IndexReport>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.condition1 && self.condition2 && self.condition3 && self.palindromic
    }
}

/// Raw distortion at a real argument, linearly interpolated; `None` past the table.
pub fn dist_at(table: &DistortionTable, x: f64) -> Option<f64> {
    let n = table.raw.len() - 1;
    if x < 0.0 || x > n as f64 {
        return None;
    }
    let lo = x.floor() as usize;
    if lo == n {
        return Some(table.raw[n] as f64);
    }
    let frac = x - lo as f64;
    Some(table.raw[lo] as f64 * (1.0 - frac) + table.raw[lo + 1] as f64 * frac)
}

/// Checks the three certificate conditions. Condition (3) uses the table where it
/// reaches and the exponential surrogate elsewhere when `surrogate` is set.
pub fn verify_certificate(
    seq: &CertificateSequence,
    c: f64,
    table: Option<&DistortionTable>,
    surrogate: bool,
) -> Result<CertificateReport, CertError> {
    if c.partial_cmp(&1.0) != Some(std::cmp::Ordering::Greater) {
        return Err(CertError::BadConstant(c));
    }
    if seq.elements.is_empty() {
        return Err(CertError::Empty);
    }
    let lens = seq.r_lengths_f64();
    let mut per_index = Vec::new();
    for (i, cert) in seq.elements.iter().enumerate() {
        let growth = i == 0 || cert.r_length > seq.elements[i - 1].r_length;
        let ratio = match seq.elements.get(i + 1) {
            Some(next) => {
                let next = next.r_length.to_f64().unwrap_or(f64::INFINITY);
                next <= c * lens[i]
            }
            None => true,
        };
        let x = cert.t_bound as f64 / c;
        let (distortion, tier) = match table.and_then(|t| dist_at(t, x)) {
            Some(d) => (d <= c * lens[i], Tier::Exact),
            None if surrogate => (2f64.powf(x) <= c * lens[i], Tier::Surrogate),
            None => (false, Tier::Unchecked),
        };
        per_index.push(IndexReport { index: cert.index, growth, ratio, distortion, tier, palindrome: cert.palindrome });
    }
    let condition1 = per_index.iter().all(|r| r.growth) && seq.elements.len() >= 2;
    let condition2 = per_index.iter().all(|r| r.ratio);
    let condition3 = per_index.iter().all(|r| r.distortion);
    let palindromic = per_index.iter().all(|r| r.palindrome != Some(false));
    Ok(CertificateReport { constant: c, condition1, condition2, condition3, palindromic, per_index })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivedConstants {
    /// `C³`.
    pub d: f64,
    /// `C |g₁|_R`.
    pub r0: f64,
}

pub fn derived_constants(seq: &CertificateSequence, report: &CertificateReport) -> Result<DerivedConstants, CertError> {
    if !report.passed() {
        return Err(CertError::Unverified("certificate conditions do not all hold".into()));
    }
    let c = report.constant;
    let g1 = seq.r_lengths_f64()[0];
    Ok(DerivedConstants { d: c.powi(3), r0: c * g1 })
}

#[derive(Clone, Debug, Serialize)]
pub struct Selection {
    pub position: usize,
    pub index: u32,
    pub r_length: f64,
    pub t_bound: u64,
    /// `r / D ≤ |u|_R ≤ r`.
    pub length_ok: bool,
    /// `|u|_T ≤ D f(r)`.
    pub ambient_ok: bool,
}

/// The element the bracketing argument picks for radius `r`: with `n` largest such that
/// `Cⁿ|g₁| ≤ r`, the last element with `C^{n-2}|g₁| ≤ |u|_R ≤ C^{n-1}|g₁|`.
pub fn select_certificate<T: Real>(
    seq: &CertificateSequence,
    c: f64,
    consts: DerivedConstants,
    r: f64,
    f: &InverseDistortion<T>,
) -> Result<Selection, CertError> {
    if r < consts.r0 {
        return Err(CertError::BelowR0 { r, r0: consts.r0 });
    }
    let lens = seq.r_lengths_f64();
    let g1 = lens[0];
    let mut n = 1i32;
    while c.powi(n + 1) * g1 <= r {
        n += 1;
    }
    let (lo, hi) = (c.powi(n - 2) * g1, c.powi(n - 1) * g1);
    let position = (0..lens.len())
        .rev()
        .find(|&i| lens[i] >= lo && lens[i] <= hi)
        .ok_or(CertError::NoElement { lo, hi })?;
    let u = &seq.elements[position];
    let fr = f.value(T::lit(r)).to_f64_lossy();
    Ok(Selection {
        position,
        index: u.index,
        r_length: lens[position],
        t_bound: u.t_bound,
        length_ok: r / consts.d <= lens[position] && lens[position] <= r,
        ambient_ok: u.t_bound as f64 <= consts.d * fr,
    })
}

/// Distortion exponent of the snowflake family and the divergence exponent it gives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentReport<T> {
    pub m_param: u32,
    pub n_param: u32,
    pub beta: T,
    /// `β ≥ 1`; below that the power-law reading of the distortion fails.
    pub beta_valid: bool,
}

/// `β = n · log_m(1 + √2)`.
pub fn snowflake_exponent<T: Real>(m_param: u32, n_param: u32) -> ExponentReport<T> {
    let m = T::from_u32(m_param).expect("fits");
    let n = T::from_u32(n_param).expect("fits");
    let beta = n * silver_ratio::<T>().ln() / m.ln();
    ExponentReport { m_param, n_param, beta, beta_valid: beta >= T::one() }
}

/// `α = m − 1 + 1/β` for tower level `m`.
pub fn divergence_exponent<T: Real>(level: u32, beta: T) -> T {
    T::from_u32(level).expect("fits") - T::one() + T::one() / beta
}

/// Every `width`-subinterval of `[lo, hi)` containing at least one value.
pub fn covers<T: Real>(values: &[T], lo: T, hi: T, width: T) -> Vec<(T, bool)> {
    let cells = ((hi - lo) / width).round().to_usize().unwrap_or(0);
    (0..cells)
        .map(|k| {
            let a = lo + width * T::from_usize_lossy(k);
            let b = a + width;
            (a, values.iter().any(|&v| v >= a && v < b))
        })
        .collect()
}

/// `{n log_m(1+√2)}` over `2 ≤ m ≤ m_max`, `1 ≤ n ≤ n_max`.
pub fn beta_values<T: Real>(m_max: u32, n_max: u32) -> Vec<T> {
    (2..=m_max)
        .flat_map(|m| (1..=n_max).map(move |n| snowflake_exponent::<T>(m, n).beta))
        .collect()
}

/// `α` over tower levels `levels` using every valid `β` from the grid.
pub fn alpha_values<T: Real>(levels: std::ops::RangeInclusive<u32>, m_max: u32, n_max: u32) -> Vec<T> {
    let betas: Vec<T> = beta_values::<T>(m_max, n_max).into_iter().filter(|b| *b >= T::one()).collect();
    levels.flat_map(|lvl| betas.iter().map(move |&b| divergence_exponent(lvl, b)).collect::<Vec<_>>()).collect()
}

/// Length data of the snowflake certificates: R-length `|φ^{n·p}(a)|` and ambient bound `C₂ m^p`.
pub fn snowflake_lengths(m_param: u32, n_param: u32, count: u32, c2: f64) -> Result<Vec<(BigUint, f64)>, CertError> {
    let phi = FreeEndo::phi();
    (1..=count)
        .map(|p| {
            let len = phi.iterate(Letter::pos(0), n_param * p)?.exact_length;
            Ok((len, c2 * f64::from(m_param).powi(p as i32)))
        })
        .collect()
}

/// `|a_{n+1}| ≤ 3|a_n|` and `|a_n| ≥ 2ⁿ`, exactly.
pub fn phi_length_bounds_hold(seq: &CertificateSequence) -> bool {
    let two = BigUint::from(2u8);
    seq.elements.iter().all(|c| c.r_length >= two.pow(c.index))
        && seq.elements.windows(2).all(|w| w[1].r_length <= &w[0].r_length * 3u8)
        && seq.elements.iter().all(|c| c.r_length >= BigUint::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_certificate() {
        let seq = phi_certificates(3).unwrap();
        let a1 = &seq.elements[0];
        assert_eq!(a1.r_length, BigUint::from(3u8));
        assert_eq!(a1.t_bound, 3);
        assert_eq!(a1.explicit.as_deref(), Some("a b a"));
    }

    #[test]
    fn phi_bounds_through_25() {
        let seq = phi_certificates(25).unwrap();
        assert!(phi_length_bounds_hold(&seq));
        assert!(seq.elements.iter().take(12).all(|c| c.palindrome == Some(true)));
        assert!(seq.elements.iter().skip(12).all(|c| c.explicit.is_none()));
    }

    #[test]
    fn surrogate_only_verification() {
        let seq = phi_certificates(25).unwrap();
        let rep = verify_certificate(&seq, 3.0, None, true).unwrap();
        assert!(rep.passed());
        assert!(rep.per_index.iter().all(|r| r.tier == Tier::Surrogate));
        let rep = verify_certificate(&seq, 3.0, None, false).unwrap();
        assert!(!rep.condition3);
    }

    #[test]
    fn condition_failures() {
        let constant = sequence_from_lengths("const", &[(1, 1), (1, 1), (1, 1)]);
        assert!(!verify_certificate(&constant, 3.0, None, true).unwrap().condition1);
        let jumpy = sequence_from_lengths("jumpy", &[(1, 1), (10, 2)]);
        assert!(!verify_certificate(&jumpy, 3.0, None, true).unwrap().condition2);
        assert_eq!(verify_certificate(&jumpy, 1.0, None, true).unwrap_err(), CertError::BadConstant(1.0));
    }

    #[test]
    fn derived() {
        let seq = phi_certificates(25).unwrap();
        let rep = verify_certificate(&seq, 3.0, None, true).unwrap();
        let k = derived_constants(&seq, &rep).unwrap();
        assert_eq!(k, DerivedConstants { d: 27.0, r0: 9.0 });
        let one = sequence_from_lengths("unit", &[(1, 1), (2, 1), (4, 1)]);
        let rep = verify_certificate(&one, 2.0, None, true).unwrap();
        let k = derived_constants(&one, &rep).unwrap();
        assert_eq!(k, DerivedConstants { d: 8.0, r0: 2.0 });
    }

    #[test]
    fn selection() {
        let seq = phi_certificates(25).unwrap();
        let rep = verify_certificate(&seq, 3.0, None, true).unwrap();
        let k = derived_constants(&seq, &rep).unwrap();
        let f = InverseDistortion::<f64>::phi_envelope();
        let s = select_certificate(&seq, 3.0, k, 9.0, &f).unwrap();
        assert!(s.r_length >= 9.0 / 27.0 && s.r_length <= 9.0);
        assert!(s.length_ok && s.ambient_ok);
        assert!(matches!(select_certificate(&seq, 3.0, k, 8.9, &f), Err(CertError::BelowR0 { .. })));
        let mut prev = 0.0;
        for r in 9..=200 {
            let s = select_certificate(&seq, 3.0, k, r as f64, &f).unwrap();
            assert!(s.length_ok && s.ambient_ok, "r = {r}");
            assert!(s.r_length >= prev);
            prev = s.r_length;
        }
    }

    #[test]
    fn exponents() {
        let e = snowflake_exponent::<f64>(3, 1);
        assert!((e.beta - 0.802).abs() < 1e-3 && !e.beta_valid);
        let e = snowflake_exponent::<f64>(2, 1);
        assert!((e.beta - 1.2716).abs() < 1e-3 && e.beta_valid);
        assert!((divergence_exponent(3, e.beta) - 2.786).abs() < 1e-3);
        let e32 = snowflake_exponent::<f32>(2, 1);
        assert!((f64::from(e32.beta) - e.beta).abs() < 1e-6);
    }

    #[test]
    fn densities() {
        let betas = beta_values::<f64>(50, 50);
        assert!(covers(&betas, 1.0, 10.0, 0.1).iter().all(|(_, hit)| *hit));
        let alphas = alpha_values::<f64>(3..=10, 50, 50);
        let cells = covers(&alphas, 2.0, 10.0, 0.1);
        assert_eq!(cells.len(), 80);
        assert!(cells.iter().all(|(_, hit)| *hit));
    }

    #[test]
    fn snowflake_length_data() {
        let v = snowflake_lengths(2, 1, 3, 1.0).unwrap();
        assert_eq!(v[0].0, BigUint::from(3u8));
        assert_eq!(v[2], (BigUint::from(17u8), 8.0));
    }
}
