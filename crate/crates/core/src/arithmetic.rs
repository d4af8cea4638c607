//! Continued fractions, torus distance and Diophantine-constant estimation.
//!
//! Frequencies built from quadratic surds or rationals are expanded exactly in
//! integer arithmetic; the value itself is kept in double-double precision so
//! that `||k alpha||` stays accurate for `k` up to a few million.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dd::DoubleDouble;
use crate::error::{Error, Result};

/// Distance from `x` to the nearest integer.
pub fn torus_norm(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// How a frequency was specified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaSource {
    /// `(p + sqrt(d)) / q`.
    Surd { p: i64, d: u64, q: i64 },
    /// `p / q`.
    Rational { p: u64, q: u64 },
    /// The exact binary value of a double.
    Decimal { value: f64 },
}

impl AlphaSource {
    /// The golden mean `(sqrt(5) - 1) / 2`.
    pub const GOLDEN: AlphaSource = AlphaSource::Surd { p: -1, d: 5, q: 2 };
    /// The silver mean `sqrt(2) - 1`.
    pub const SILVER: AlphaSource = AlphaSource::Surd { p: -1, d: 2, q: 1 };
}

impl fmt::Display for AlphaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AlphaSource::Surd { p: -1, d: 5, q: 2 } => write!(f, "golden"),
            AlphaSource::Surd { p: -1, d: 2, q: 1 } => write!(f, "silver"),
            AlphaSource::Surd { p, d, q } => write!(f, "surd({p},{d},{q})"),
            AlphaSource::Rational { p, q } => write!(f, "{p}/{q}"),
            AlphaSource::Decimal { value } => write!(f, "{value:?}"),
        }
    }
}

impl FromStr for AlphaSource {
    type Err = Error;

    /// Accepts `golden`, `silver`, `surd(p,d,q)`, `p/q` or a decimal literal.
    /// Decimal literals are read as exact decimal fractions when they fit.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::invalid("alpha", format!("`{s}`: {why}"));
        let t = s.trim();
        match t {
            "golden" => return Ok(Self::GOLDEN),
            "silver" => return Ok(Self::SILVER),
            _ => {}
        }
        if let Some(inner) = t.strip_prefix("surd(").and_then(|r| r.strip_suffix(')')) {
            let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(bad("surd needs three integers"));
            }
            let p = parts[0].parse().map_err(|_| bad("bad p"))?;
            let d = parts[1].parse().map_err(|_| bad("bad d"))?;
            let q = parts[2].parse().map_err(|_| bad("bad q"))?;
            return Ok(AlphaSource::Surd { p, d, q });
        }
        if let Some((p, q)) = t.split_once('/') {
            let p = p.trim().parse().map_err(|_| bad("bad numerator"))?;
            let q = q.trim().parse().map_err(|_| bad("bad denominator"))?;
            return Ok(AlphaSource::Rational { p, q });
        }
        if let Some(frac) = t.strip_prefix("0.") {
            if !frac.is_empty() && frac.len() <= 18 && frac.bytes().all(|b| b.is_ascii_digit()) {
                let p: u64 = frac.parse().map_err(|_| bad("bad digits"))?;
                let q = 10u64.pow(frac.len() as u32);
                let g = gcd(p as u128, q as u128) as u64;
                if p == 0 {
                    return Err(bad("must lie in (0,1)"));
                }
                return Ok(AlphaSource::Rational { p: p / g, q: q / g });
            }
        }
        let value: f64 = t.parse().map_err(|_| bad("unrecognized frequency"))?;
        Ok(AlphaSource::Decimal { value })
    }
}

/// A frequency in (0,1) with its continued-fraction data.
#[derive(Clone, Debug, PartialEq)]
pub struct Frequency {
    source: AlphaSource,
    value: DoubleDouble,
    cf_terms: Vec<u64>,
    convergents: Vec<(u128, u128)>,
    truncated: bool,
    exact: Option<(u128, u128)>,
}

/// Default expansion depth used by the convenience constructors.
pub const DEFAULT_DEPTH: usize = 64;

impl Frequency {
    pub fn golden() -> Self {
        continued_fraction(&AlphaSource::GOLDEN, DEFAULT_DEPTH).expect("golden mean is valid")
    }

    pub fn silver() -> Self {
        continued_fraction(&AlphaSource::SILVER, DEFAULT_DEPTH).expect("silver mean is valid")
    }

    pub fn from_source(source: &AlphaSource) -> Result<Self> {
        continued_fraction(source, DEFAULT_DEPTH)
    }

    pub fn source(&self) -> &AlphaSource {
        &self.source
    }

    pub fn value(&self) -> f64 {
        self.value.to_f64()
    }

    pub fn value_dd(&self) -> DoubleDouble {
        self.value
    }

    /// Partial quotients `a_1, a_2, ...` (the integer part is 0).
    pub fn cf_terms(&self) -> &[u64] {
        &self.cf_terms
    }

    /// Convergents `(p_n, q_n)` starting from `(0, 1)`.
    pub fn convergents(&self) -> &[(u128, u128)] {
        &self.convergents
    }

    /// Whether the expansion stopped early because a convergent overflowed.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// `Some((p, q))` in lowest terms when the frequency is rational.
    pub fn exact_rational(&self) -> Option<(u128, u128)> {
        self.exact
    }

    /// `k * alpha` in double-double precision.
    pub fn multiple(&self, k: i64) -> DoubleDouble {
        self.value.mul_int(k)
    }

    /// `||k alpha||`.
    pub fn torus_norm_of_multiple(&self, k: i64) -> f64 {
        self.multiple(k).torus_norm().to_f64()
    }

    /// `ln q_{n+1} / q_n` for consecutive stored denominators.
    pub fn log_growth_ratios(&self) -> Vec<f64> {
        self.convergents
            .windows(2)
            .map(|w| (w[1].1 as f64).ln() / w[0].1 as f64)
            .collect()
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x.checked_mul(x).map_or(true, |sq| sq > n) {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).is_some_and(|sq| sq <= n) {
        x += 1;
    }
    x
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

struct Convergents {
    terms: Vec<u64>,
    pq: Vec<(u128, u128)>,
    prev: (u128, u128),
    truncated: bool,
}

impl Convergents {
    fn new() -> Self {
        Self {
            terms: Vec::new(),
            pq: vec![(0, 1)],
            prev: (1, 0),
            truncated: false,
        }
    }

    /// Appends a partial quotient; returns false once a convergent overflows.
    fn push(&mut self, a: u64) -> bool {
        let (p1, q1) = *self.pq.last().unwrap();
        let (p2, q2) = self.prev;
        let a = a as u128;
        let next = a
            .checked_mul(p1)
            .and_then(|x| x.checked_add(p2))
            .zip(a.checked_mul(q1).and_then(|x| x.checked_add(q2)));
        match next {
            Some((p, q)) => {
                self.terms.push(a as u64);
                self.prev = (p1, q1);
                self.pq.push((p, q));
                true
            }
            None => {
                self.truncated = true;
                false
            }
        }
    }
}

/// Expands a frequency to `depth` partial quotients.
///
/// Rationals terminate early. A depth whose convergents would overflow 128-bit
/// integers stops the expansion and sets [`Frequency::truncated`].
pub fn continued_fraction(source: &AlphaSource, depth: usize) -> Result<Frequency> {
    if depth == 0 {
        return Err(Error::invalid("depth", "must be at least 1"));
    }
    match *source {
        AlphaSource::Surd { p, d, q } => surd_expansion(source, p, d, q, depth),
        AlphaSource::Rational { p, q } => {
            if q == 0 || p == 0 || p >= q {
                return Err(Error::invalid("alpha", format!("{p}/{q} is not in (0,1)")));
            }
            rational_expansion(source, p as u128, q as u128, depth)
        }
        AlphaSource::Decimal { value } => {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::invalid("alpha", format!("{value} is not in (0,1)")));
            }
            let bits = value.to_bits();
            let exp = ((bits >> 52) & 0x7ff) as i64;
            let mant = if exp == 0 {
                bits & ((1 << 52) - 1)
            } else {
                (bits & ((1 << 52) - 1)) | (1 << 52)
            };
            // value = mant * 2^(exp - 1075)
            let shift = 1075 - exp.max(1);
            if shift > 126 {
                return Err(Error::invalid("alpha", format!("{value} is too small")));
            }
            let q = 1u128 << shift;
            let g = gcd(mant as u128, q);
            rational_expansion(source, mant as u128 / g, q / g, depth)
        }
    }
}

fn rational_expansion(source: &AlphaSource, p: u128, q: u128, depth: usize) -> Result<Frequency> {
    let g = gcd(p, q);
    let (p, q) = (p / g, q / g);
    let value = DoubleDouble::from_i128(p as i128).div(DoubleDouble::from_i128(q as i128));
    let mut conv = Convergents::new();
    // alpha = p/q < 1, so a_0 = 0 and the first step inverts.
    let (mut num, mut den) = (q, p);
    while den != 0 && conv.terms.len() < depth {
        let a = num / den;
        let Ok(a) = u64::try_from(a) else {
            conv.truncated = true;
            break;
        };
        if !conv.push(a) {
            break;
        }
        let r = num % den;
        num = den;
        den = r;
    }
    Ok(Frequency {
        source: source.clone(),
        value,
        cf_terms: conv.terms,
        convergents: conv.pq,
        truncated: conv.truncated,
        exact: Some((p, q)),
    })
}

fn surd_expansion(source: &AlphaSource, p: i64, d: u64, q: i64, depth: usize) -> Result<Frequency> {
    let bad = |why: &str| Error::invalid("alpha", format!("{source}: {why}"));
    if q == 0 {
        return Err(bad("zero denominator"));
    }
    let root = isqrt(d as u128);
    if root * root == d as u128 {
        return Err(bad("d is a perfect square"));
    }
    let value = (DoubleDouble::from_i64(p) + DoubleDouble::from_f64(d as f64).sqrt())
        .div(DoubleDouble::from_i64(q));
    if !(value.hi > 0.0 && value.hi < 1.0) {
        return Err(bad("value is not in (0,1)"));
    }
    let (mut pp, mut dd, mut qq) = (p as i128, d as i128, q as i128);
    if (dd - pp * pp) % qq != 0 {
        pp *= qq.abs();
        dd *= qq * qq;
        qq *= qq.abs();
    }
    let mut s = isqrt(dd as u128) as i128;
    let mut conv = Convergents::new();
    let mut first = true;
    loop {
        let a = floor_div(pp + s + i128::from(qq < 0), qq);
        if first {
            debug_assert_eq!(a, 0);
            first = false;
        } else {
            if conv.terms.len() >= depth {
                break;
            }
            if !conv.push(a as u64) {
                break;
            }
        }
        let pn = a * qq - pp;
        let qn = (dd - pn * pn) / qq;
        pp = pn;
        qq = qn;
        // dd never changes after normalization; s is its floor square root.
        s = isqrt(dd as u128) as i128;
    }
    Ok(Frequency {
        source: source.clone(),
        value,
        cf_terms: conv.terms,
        convergents: conv.pq,
        truncated: conv.truncated,
        exact: None,
    })
}

/// Outcome of a finite-range Diophantine fit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiophantineFit {
    pub kappa: f64,
    pub tau: f64,
    /// The `k` attaining `min_k ||k alpha|| k^kappa`.
    pub witness: u64,
    pub k_max: u64,
    /// Set when `||k alpha|| = 0` for some `k <= k_max`.
    pub rational_at: Option<u64>,
}

/// Exponent grid used by [`diophantine_fit`].
pub fn kappa_grid() -> impl Iterator<Item = f64> {
    (50..=400).map(|i| i as f64 / 100.0)
}

/// Grid-searches `kappa` and reports `tau = min_k ||k alpha|| k^kappa`.
///
/// Any exponent admits a positive `tau` on a finite range, so the exponent is
/// chosen as the smallest grid value whose worst `k` is not pushed to the top
/// of the range: the minimizing `k` must satisfy `k <= sqrt(k_max)`. Below the
/// true exponent the minimizer migrates to the largest scanned denominators.
pub fn diophantine_fit(alpha: &Frequency, k_max: u64) -> Result<DiophantineFit> {
    if k_max < 2 {
        return Err(Error::invalid("k_max", "must be at least 2"));
    }
    // Only record-setting k can minimize ||k alpha|| k^kappa.
    let mut records: Vec<(u64, f64)> = Vec::new();
    let mut best = f64::INFINITY;
    for k in 1..=k_max {
        let d = alpha.torus_norm_of_multiple(k as i64);
        if d == 0.0 {
            return Ok(DiophantineFit {
                kappa: f64::INFINITY,
                tau: 0.0,
                witness: k,
                k_max,
                rational_at: Some(k),
            });
        }
        if d < best {
            best = d;
            records.push((k, d));
        }
    }
    let limit = (k_max as f64).sqrt();
    let worst = |kappa: f64| {
        records
            .iter()
            .map(|&(k, d)| (k, d * (k as f64).powf(kappa)))
            .fold((0u64, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc })
    };
    let mut chosen = None;
    for kappa in kappa_grid() {
        let (k, tau) = worst(kappa);
        if (k as f64) <= limit {
            chosen = Some((kappa, k, tau));
            break;
        }
    }
    let (kappa, witness, tau) = chosen.unwrap_or_else(|| {
        let (k, tau) = worst(4.0);
        (4.0, k, tau)
    });
    Ok(DiophantineFit {
        kappa,
        tau,
        witness,
        k_max,
        rational_at: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_norm_examples() {
        assert_eq!(torus_norm(0.75), 0.25);
        assert_eq!(torus_norm(3.0), 0.0);
        assert_eq!(torus_norm(-0.1), torus_norm(0.1));
    }

    #[test]
    fn golden_expansion() {
        let f = Frequency::golden();
        assert!(f.cf_terms().iter().all(|&a| a == 1));
        let qs: Vec<u128> = f.convergents().iter().take(6).map(|c| c.1).collect();
        assert_eq!(qs, vec![1, 1, 2, 3, 5, 8]);
        assert!(!f.truncated());
    }

    #[test]
    fn silver_expansion() {
        let f = Frequency::silver();
        assert!(f.cf_terms().iter().all(|&a| a == 2));
    }

    #[test]
    fn rational_terminates() {
        let f = continued_fraction(&AlphaSource::Rational { p: 2, q: 7 }, 10).unwrap();
        assert_eq!(f.cf_terms(), &[3, 2]);
        assert_eq!(f.convergents().last(), Some(&(2, 7)));
        assert_eq!(f.exact_rational(), Some((2, 7)));
    }

    #[test]
    fn deep_expansion_truncates() {
        let f = continued_fraction(&AlphaSource::GOLDEN, 500).unwrap();
        assert!(f.truncated());
        assert!(f.cf_terms().len() < 500);
        let qs: Vec<u128> = f.convergents().iter().map(|c| c.1).collect();
        assert!(qs.windows(2).skip(1).all(|w| w[1] > w[0]));
    }

    #[test]
    fn decimal_is_exact_binary_value() {
        let f = continued_fraction(&AlphaSource::Decimal { value: 0.375 }, 20).unwrap();
        assert_eq!(f.exact_rational(), Some((3, 8)));
        assert_eq!(f.cf_terms(), &[2, 1, 2]);
    }

    #[test]
    fn parses_specs() {
        assert_eq!("golden".parse::<AlphaSource>().unwrap(), AlphaSource::GOLDEN);
        assert_eq!(
            "0.25".parse::<AlphaSource>().unwrap(),
            AlphaSource::Rational { p: 1, q: 4 }
        );
        assert_eq!(
            "surd(-1, 5, 2)".parse::<AlphaSource>().unwrap(),
            AlphaSource::GOLDEN
        );
        assert!("banana".parse::<AlphaSource>().is_err());
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(continued_fraction(&AlphaSource::Rational { p: 7, q: 2 }, 4).is_err());
        assert!(continued_fraction(&AlphaSource::Surd { p: 0, d: 4, q: 3 }, 4).is_err());
        assert!(continued_fraction(&AlphaSource::Surd { p: 1, d: 5, q: 2 }, 4).is_err());
    }

    #[test]
    fn rational_fit_fails_at_denominator() {
        let f = continued_fraction(&AlphaSource::Rational { p: 2, q: 7 }, 10).unwrap();
        let fit = diophantine_fit(&f, 100).unwrap();
        assert_eq!(fit.rational_at, Some(7));
    }
}
