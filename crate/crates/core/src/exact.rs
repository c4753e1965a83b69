//! Exact rational helpers: parsing, printing, conversion to floats and
//! directed square-root enclosures.

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `p/q` or a finite decimal such as `-1.25` or `3e-2`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(k) => {
            let e: i64 = s[k + 1..].parse().map_err(|_| bad())?;
            (&s[..k], e)
        }
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (ip, fp) = digits.split_once('.').unwrap_or((digits, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(bad());
    }
    if !ip.bytes().chain(fp.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    if exp.abs() > 4096 {
        return Err(bad());
    }
    let all = format!("{ip}{fp}");
    let mut n: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().map_err(|_| bad())? };
    if neg {
        n = -n;
    }
    let scale = exp - fp.len() as i64;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        Rational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(n, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Canonical `p/q` text with `q > 0` and `gcd(p, q) = 1`.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact conversion of a finite float.
pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// A closed interval `[lo, hi]` with rational ends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: Rational,
    pub hi: Rational,
}

impl Enclosure {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        debug_assert!(lo <= hi);
        Enclosure { lo, hi }
    }

    pub fn exact(x: Rational) -> Self {
        Enclosure { lo: x.clone(), hi: x }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn mid_f64(&self) -> f64 {
        0.5 * (to_f64(&self.lo) + to_f64(&self.hi))
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }
}

fn bit_len(n: &BigInt) -> u64 {
    n.bits()
}

/// Encloses `sqrt(x)` for `x >= 0`. Perfect squares give a point interval;
/// otherwise the width is below `2^-50 * sqrt(x)`.
pub fn sqrt_enclosure(x: &Rational) -> Enclosure {
    assert!(!x.is_negative(), "square root of a negative number");
    if x.is_zero() {
        return Enclosure::exact(Rational::zero());
    }
    let a = x.numer();
    let b = x.denom();
    let ra = a.sqrt();
    let rb = b.sqrt();
    if &(&ra * &ra) == a && &(&rb * &rb) == b {
        return Enclosure::exact(Rational::new(ra, rb));
    }
    // sqrt(a/b) = sqrt(a*b)/b, scaled by 2^k so the integer root carries >= 56 bits
    let ab = a * b;
    let have = bit_len(&ab) / 2;
    let k = 56u64.saturating_sub(have);
    let m = &ab << (2 * k) as usize;
    let s = m.sqrt();
    let den = b << k as usize;
    let lo = Rational::new(s.clone(), den.clone());
    let hi = Rational::new(s + BigInt::one(), den);
    Enclosure { lo, hi }
}

pub fn sign_of(x: &BigInt) -> i8 {
    match x.sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

pub fn rational_sign(x: &Rational) -> i8 {
    sign_of(x.numer())
}

/// Largest dyadic rational `m / 2^e` not above `x > 0`, with `m` carrying
/// `bits` significant bits.
pub fn dyadic_floor(x: &Rational, bits: u64) -> Rational {
    assert!(x.is_positive());
    let nb = bit_len(x.numer()) as i64;
    let db = bit_len(x.denom()) as i64;
    // x is roughly 2^(nb - db); pick e so that x * 2^e has about `bits` bits
    let e = bits as i64 + 1 - (nb - db);
    let scaled = if e >= 0 {
        (x.numer() << e as usize) / x.denom()
    } else {
        x.numer() / (x.denom() << (-e) as usize)
    };
    if e >= 0 {
        Rational::new(scaled, BigInt::one() << e as usize)
    } else {
        Rational::from_integer(scaled << (-e) as usize)
    }
}

pub fn floor_i64(x: &Rational) -> i64 {
    x.floor().to_integer().to_i64().expect("cell coordinate exceeds i64")
}
