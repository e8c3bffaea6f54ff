//! Exact arbitrary-precision arithmetic: rationals, binomial coefficients,
//! and a high-precision real type for the few places where irrational values
//! (square roots) enter the pipeline.
//!
//! Everything operator-related lives in [`Rational`]: the coefficient values
//! `f(k/n)·C(n,k)` and their rounded forms are held exactly, so ties in the
//! rounding rules are decidable and equality tests are meaningful.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Exact arbitrary-precision fraction, kept in canonical form (reduced,
/// positive denominator) after every operation.
pub type Rational = num_rational::BigRational;

/// Shorthand for a rational from two machine integers.
pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Shorthand for an integer-valued rational.
pub fn rat_int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Parses "p/q" or "p" into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let parse_int = |part: &str| -> Result<BigInt> {
        part.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::domain(format!("invalid rational: {text:?}")))
    };
    match text.split_once('/') {
        Some((num, den)) => {
            let den = parse_int(den)?;
            if den.is_zero() {
                return Err(Error::domain(format!("zero denominator in {text:?}")));
            }
            Ok(Rational::new(parse_int(num)?, den))
        }
        None => Ok(Rational::from_integer(parse_int(text)?)),
    }
}

/// Binomial coefficient C(n,k), exact at any size.
///
/// Multiplicative evaluation: the running product after the i-th step is
/// C(n, i+1), so every intermediate division is exact.
pub fn binomial(n: u32, k: u32) -> Result<BigInt> {
    if k > n {
        return Err(Error::domain(format!("binomial: k={k} exceeds n={n}")));
    }
    // C(n,k) = C(n,n-k); use the smaller k.
    let k = k.min(n - k);
    let mut result = BigUint::one();
    for i in 0..k {
        result = result * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    Ok(BigInt::from(result))
}

/// The full row C(n,0)..C(n,n), built incrementally: each step multiplies by
/// (n-k)/(k+1), an exact integer division.
pub fn binomial_row(n: u32) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(n as usize + 1);
    row.push(BigInt::one());
    for k in 0..n {
        let next = row.last().unwrap() * BigInt::from(n - k) / BigInt::from(k + 1);
        row.push(next);
    }
    row
}

/// Largest integer m with m <= a, exact for all signs.
pub fn floor_int(a: &Rational) -> BigInt {
    a.floor().to_integer()
}

/// Checks the identity (k/n)·C(n,k) = C(n-1,k-1) as exact rationals.
///
/// This is what makes `f(0)·C(n,k) + f'(0)·(k/n)·C(n,k)` an integer whenever
/// f(0) and f'(0) are.
pub fn scaled_binomial_identity_check(n: u32, k: u32) -> Result<bool> {
    if k == 0 || k > n {
        return Err(Error::domain(format!(
            "scaled_binomial_identity_check: need 1 <= k <= n, got n={n}, k={k}"
        )));
    }
    let lhs = rat(k as i64, n as i64) * Rational::from_integer(binomial(n, k)?);
    let rhs = Rational::from_integer(binomial(n - 1, k - 1)?);
    Ok(lhs == rhs)
}

/// Default working precision in decimal digits.
pub const DEFAULT_PRECISION: u32 = 64;

/// Guard digits kept on top of the requested precision.
const GUARD_DIGITS: u32 = 8;

/// A real number carried to a configurable number of decimal digits.
///
/// Internally the value is an exact rational. Ring operations (+, -, *, /)
/// are performed exactly, so their per-operation error is zero; only square
/// roots and explicit [`HighPrecisionReal::rounded`] calls introduce rounding,
/// and those keep `digits + 8` significant decimal digits, well inside the
/// `10^(1-d)` relative-error contract. Keeping the ring exact means that
/// cancellations like the second difference of an affine function come out
/// as literal zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HighPrecisionReal {
    value: Rational,
    digits: u32,
}

impl HighPrecisionReal {
    pub fn from_rational(value: Rational, digits: u32) -> Self {
        HighPrecisionReal { value, digits }
    }

    pub fn zero(digits: u32) -> Self {
        HighPrecisionReal {
            value: Rational::zero(),
            digits,
        }
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    /// The exact rational currently held.
    pub fn as_rational(&self) -> &Rational {
        &self.value
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn abs(&self) -> Self {
        HighPrecisionReal {
            value: self.value.abs(),
            digits: self.digits,
        }
    }

    fn working_digits(&self) -> u32 {
        self.digits + GUARD_DIGITS
    }

    /// Decimal order of magnitude: an integer e with 10^e <= |value| < 10^(e+1).
    fn magnitude(&self) -> i64 {
        debug_assert!(!self.value.is_zero());
        let digits_num = self.value.numer().abs().to_string().len() as i64;
        let digits_den = self.value.denom().to_string().len() as i64;
        // |value| is within a factor of 10 of 10^(digits_num - digits_den);
        // nail it down exactly by comparing against the two candidates.
        let mut e = digits_num - digits_den;
        let abs = self.value.abs();
        while pow10_rat(e + 1) <= abs {
            e += 1;
        }
        while pow10_rat(e) > abs {
            e -= 1;
        }
        e
    }

    /// Rounds to `digits + 8` significant decimal digits (relative error at
    /// most `10^-(digits+7)`).
    pub fn rounded(&self) -> Self {
        if self.value.is_zero() {
            return self.clone();
        }
        let e = self.magnitude();
        // Keep working_digits significant digits: scale so the value lands in
        // [10^(w-1), 10^w), round to an integer, scale back.
        let shift = self.working_digits() as i64 - 1 - e;
        let scaled = &self.value * pow10_rat(shift);
        let rounded = round_half_even_rat(&scaled);
        HighPrecisionReal {
            value: Rational::from_integer(rounded) * pow10_rat(-shift),
            digits: self.digits,
        }
    }

    /// Square root to working precision. Errors on negative input.
    pub fn sqrt(&self) -> Result<Self> {
        if self.value.is_negative() {
            return Err(Error::domain("sqrt of negative value".to_string()));
        }
        if self.value.is_zero() {
            return Ok(self.clone());
        }
        // sqrt(p/q) ~= isqrt(p * 10^(2m) / q) / 10^m with m chosen so the
        // integer part carries working_digits significant digits.
        let e = self.magnitude();
        let m = self.working_digits() as i64 - e / 2 + 2;
        let m = m.max(4) as u64;
        let scale = BigUint::from(10u32).pow(
            u32::try_from(m).map_err(|_| Error::domain("sqrt scale overflow".to_string()))?,
        );
        let p = self.value.numer().to_biguint().expect("non-negative");
        let q = self.value.denom().to_biguint().expect("positive");
        let scaled = p * (&scale * &scale) / q;
        let root = scaled.sqrt();
        Ok(HighPrecisionReal {
            value: Rational::new(BigInt::from(root), BigInt::from(scale)),
            digits: self.digits,
        }
        .rounded())
    }

    /// Natural logarithm via f64 (used only for slope fitting and display,
    /// never inside exact checks).
    pub fn ln_f64(&self) -> f64 {
        self.to_f64().ln()
    }
}

fn pow10_rat(e: i64) -> Rational {
    let p = BigInt::from(10u32).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

/// Nearest integer to `a`, ties to even; used internally for decimal display
/// and precision rounding, not for the operator rounding rules.
pub(crate) fn round_half_even_rat(a: &Rational) -> BigInt {
    let fl = a.floor().to_integer();
    let frac = a - Rational::from_integer(fl.clone());
    let half = rat(1, 2);
    match frac.cmp(&half) {
        Ordering::Less => fl,
        Ordering::Greater => fl + 1,
        Ordering::Equal => {
            if num_integer::Integer::is_even(&fl) {
                fl
            } else {
                fl + 1
            }
        }
    }
}

impl fmt::Display for HighPrecisionReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_decimal(&self.value, self.digits))
    }
}

impl std::ops::Add for &HighPrecisionReal {
    type Output = HighPrecisionReal;
    fn add(self, rhs: &HighPrecisionReal) -> HighPrecisionReal {
        HighPrecisionReal {
            value: &self.value + &rhs.value,
            digits: self.digits.min(rhs.digits),
        }
    }
}

impl std::ops::Sub for &HighPrecisionReal {
    type Output = HighPrecisionReal;
    fn sub(self, rhs: &HighPrecisionReal) -> HighPrecisionReal {
        HighPrecisionReal {
            value: &self.value - &rhs.value,
            digits: self.digits.min(rhs.digits),
        }
    }
}

impl std::ops::Mul for &HighPrecisionReal {
    type Output = HighPrecisionReal;
    fn mul(self, rhs: &HighPrecisionReal) -> HighPrecisionReal {
        HighPrecisionReal {
            value: &self.value * &rhs.value,
            digits: self.digits.min(rhs.digits),
        }
    }
}

impl std::ops::Div for &HighPrecisionReal {
    type Output = HighPrecisionReal;
    fn div(self, rhs: &HighPrecisionReal) -> HighPrecisionReal {
        HighPrecisionReal {
            value: &self.value / &rhs.value,
            digits: self.digits.min(rhs.digits),
        }
    }
}

impl PartialOrd for HighPrecisionReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HighPrecisionReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.cmp(&other.value)
    }
}

/// Renders a rational as a decimal string with `sig` significant digits.
pub fn format_decimal(value: &Rational, sig: u32) -> String {
    if value.is_zero() {
        return "0".to_string();
    }
    let sig = sig.max(1);
    let hp = HighPrecisionReal {
        value: value.clone(),
        digits: sig,
    };
    let e = hp.magnitude();
    let shift = sig as i64 - 1 - e;
    let mantissa = round_half_even_rat(&(value * pow10_rat(shift)));
    let neg = mantissa.is_negative();
    let mut digits = mantissa.abs().to_string();
    // Rounding can carry over into an extra digit (e.g. 999.5 -> 1000).
    let e = if digits.len() as i64 > sig as i64 {
        digits.truncate(sig as usize);
        e + 1
    } else {
        e
    };
    let trimmed = digits.trim_end_matches('0');
    let digits = if trimmed.is_empty() { "0" } else { trimmed };
    let sign = if neg { "-" } else { "" };
    // Fixed notation in a friendly exponent range, scientific outside it.
    if e >= -4 && e < sig as i64 + 6 {
        let body = if e >= 0 {
            let int_len = (e + 1) as usize;
            if digits.len() <= int_len {
                format!("{}{}", digits, "0".repeat(int_len - digits.len()))
            } else {
                format!("{}.{}", &digits[..int_len], &digits[int_len..])
            }
        } else {
            format!("0.{}{}", "0".repeat((-e - 1) as usize), digits)
        };
        format!("{sign}{body}")
    } else {
        let mantissa = if digits.len() == 1 {
            digits.to_string()
        } else {
            format!("{}.{}", &digits[..1], &digits[1..])
        };
        format!("{sign}{mantissa}e{e}")
    }
}
