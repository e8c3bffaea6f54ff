//! The classical Bernstein operator: basis evaluation, operator application,
//! and the s-th derivative along two routes kept as a permanent self-check.
//!
//! The first route evaluates the derivative pointwise from iterated forward
//! differences of the sampled values; the second differentiates the assembled
//! polynomial symbolically by basis degree reduction. Both are exact, and the
//! integer-coefficient operators reuse the first route with their rounded
//! coefficient sequences.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::functions::TestFunction;
use crate::numeric::{binomial, Rational};

/// Which basis the coefficient vector weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    /// p(x) = sum of coeffs[k] * C(n,k) x^k (1-x)^(n-k); coefficients are
    /// value-like (f(k/n) or the normalized b_n(k)).
    Normalized,
    /// p(x) = sum of coeffs[k] * x^k (1-x)^(n-k); coefficients are the raw
    /// (integer, for the integer operators) basis weights.
    Raw,
}

/// A polynomial of degree n held exactly in the Bernstein basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BernsteinPoly {
    degree: u32,
    coeffs: Vec<Rational>,
    form: Form,
}

impl BernsteinPoly {
    pub fn new(degree: u32, coeffs: Vec<Rational>, form: Form) -> Result<Self> {
        if coeffs.len() != degree as usize + 1 {
            return Err(Error::domain(format!(
                "coefficient vector length {} does not match degree {degree}",
                coeffs.len()
            )));
        }
        Ok(BernsteinPoly {
            degree,
            coeffs,
            form,
        })
    }

    pub fn zero() -> Self {
        BernsteinPoly {
            degree: 0,
            coeffs: vec![Rational::zero()],
            form: Form::Normalized,
        }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Coefficients in normalized (value-like) form: raw[k] / C(n,k).
    pub fn normalized_coeffs(&self) -> Result<Vec<Rational>> {
        match self.form {
            Form::Normalized => Ok(self.coeffs.clone()),
            Form::Raw => {
                let binomials = crate::numeric::binomial_row(self.degree);
                Ok(self
                    .coeffs
                    .iter()
                    .zip(binomials)
                    .map(|(a, binom)| a / Rational::from_integer(binom))
                    .collect())
            }
        }
    }

    /// Exact evaluation. At x=0 only the first basis function is nonzero and
    /// at x=1 only the last, so the endpoints read the boundary coefficients.
    pub fn eval(&self, x: &Rational) -> Rational {
        let n = self.degree;
        let (terms, den) = match self.form {
            Form::Normalized => basis_numerators(n, x),
            Form::Raw => raw_power_numerators(n, x),
        };
        dot_over_common_denominator(&self.coeffs, &terms, &den)
    }

    /// The s-th derivative by basis degree reduction, applied one order at a
    /// time: each step maps coefficients c to n*(c[k+1] - c[k]) on degree n-1.
    /// Orders beyond the degree collapse to the zero polynomial.
    pub fn derivative(&self, s: u32) -> Result<Self> {
        if s > self.degree {
            return Ok(BernsteinPoly::zero());
        }
        let mut coeffs = self.normalized_coeffs()?;
        let mut degree = self.degree;
        for _ in 0..s {
            if degree == 0 {
                return Ok(BernsteinPoly::zero());
            }
            let scale = Rational::from_integer(BigInt::from(degree));
            coeffs = coeffs
                .windows(2)
                .map(|w| (&w[1] - &w[0]) * &scale)
                .collect();
            degree -= 1;
        }
        BernsteinPoly::new(degree, coeffs, Form::Normalized)
    }
}

/// Exact value of the basis function p_{n,k}(x) = C(n,k) x^k (1-x)^(n-k).
pub fn basis_eval(n: u32, k: u32, x: &Rational) -> Result<Rational> {
    if k > n {
        return Err(Error::domain(format!("basis_eval: k={k} exceeds n={n}")));
    }
    if x.is_negative() || x > &Rational::one() {
        return Err(Error::domain(format!("basis_eval: x={x} outside [0,1]")));
    }
    let p = x.numer();
    let q = x.denom();
    let r = q - p;
    let num = binomial(n, k)? * p.pow(k) * r.pow(n - k);
    Ok(Rational::new(num, q.pow(n)))
}

/// The Bernstein polynomial of f: coefficients f(k/n) in normalized form.
pub fn apply_bn(f: &TestFunction, n: u32) -> Result<BernsteinPoly> {
    if n == 0 {
        return Err(Error::domain("apply_bn: n must be at least 1"));
    }
    let coeffs = sample_values(f, n);
    BernsteinPoly::new(n, coeffs, Form::Normalized)
}

/// The sampled values f(k/n), k = 0..=n.
pub fn sample_values(f: &TestFunction, n: u32) -> Vec<Rational> {
    (0..=n)
        .map(|k| f.eval(&Rational::new(BigInt::from(k), BigInt::from(n))))
        .collect()
}

/// All s-th unit-step forward differences of a value vector:
/// out[k] = sum over i of (-1)^i C(s,i) v[k+s-i], for k = 0..len-1-s.
pub fn forward_diff(values: &[Rational], s: u32) -> Result<Vec<Rational>> {
    if s == 0 {
        return Err(Error::domain("forward_diff: s must be at least 1"));
    }
    if values.len() < s as usize + 1 {
        return Err(Error::domain(format!(
            "forward_diff: need at least {} values for order {s}, got {}",
            s + 1,
            values.len()
        )));
    }
    Ok(iterated_diff(values, s))
}

/// Repeated first differences; order 0 is the identity.
fn iterated_diff(values: &[Rational], s: u32) -> Vec<Rational> {
    let mut cur = values.to_vec();
    for _ in 0..s {
        cur = cur.windows(2).map(|w| &w[1] - &w[0]).collect();
    }
    cur
}

/// s-th derivative at x of the degree-n Bernstein-form polynomial whose
/// normalized coefficients are `values`:
///   n!/(n-s)! * sum over k of (forward differences of order s)(k) * p_{n-s,k}(x).
pub(crate) fn derivative_at(values: &[Rational], s: u32, x: &Rational) -> Result<Rational> {
    Ok(SampledDerivative::new(values, s)?.eval(x))
}

/// The s-th derivative of a Bernstein-form polynomial, prepared once from its
/// normalized coefficient sequence for evaluation at many points.
pub struct SampledDerivative {
    diffs: Vec<Rational>,
    factor: Rational,
    degree: u32,
}

impl SampledDerivative {
    pub fn new(values: &[Rational], s: u32) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("empty coefficient vector"));
        }
        let n = values.len() as u32 - 1;
        if s > n {
            return Err(Error::Degree { n, s });
        }
        Ok(SampledDerivative {
            diffs: iterated_diff(values, s),
            factor: Rational::from_integer(falling_factorial(n, s)),
            degree: n - s,
        })
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let (terms, den) = basis_numerators(self.degree, x);
        dot_over_common_denominator(&self.diffs, &terms, &den) * &self.factor
    }
}

/// s-th derivative of B_n f at x via the forward-difference formula. Must
/// agree with `apply_bn(f,n).derivative(s).eval(x)` exactly.
pub fn bn_derivative(f: &TestFunction, n: u32, s: u32, x: &Rational) -> Result<Rational> {
    if n == 0 {
        return Err(Error::domain("bn_derivative: n must be at least 1"));
    }
    if s > n {
        return Err(Error::Degree { n, s });
    }
    derivative_at(&sample_values(f, n), s, x)
}

/// n * (n-1) * ... * (n-s+1).
pub fn falling_factorial(n: u32, s: u32) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..s {
        acc *= BigInt::from(n - i);
    }
    acc
}

/// Numerators of p_{m,k}(x) over the common denominator q^m, for x = p/q:
/// terms[k] = C(m,k) p^k (q-p)^(m-k).
fn basis_numerators(m: u32, x: &Rational) -> (Vec<BigInt>, BigInt) {
    let p = x.numer();
    let q = x.denom();
    let r = q - p;
    let pow_p = power_table(p, m);
    let pow_r = power_table(&r, m);
    let binomials = crate::numeric::binomial_row(m);
    let terms = (0..=m as usize)
        .map(|k| &binomials[k] * &pow_p[k] * &pow_r[m as usize - k])
        .collect();
    (terms, q.pow(m))
}

/// Same as `basis_numerators` but without the binomial factor, for raw-form
/// coefficient vectors.
fn raw_power_numerators(m: u32, x: &Rational) -> (Vec<BigInt>, BigInt) {
    let p = x.numer();
    let q = x.denom();
    let r = q - p;
    let pow_p = power_table(p, m);
    let pow_r = power_table(&r, m);
    let terms = (0..=m)
        .map(|k| &pow_p[k as usize] * &pow_r[(m - k) as usize])
        .collect();
    (terms, q.pow(m))
}

fn power_table(base: &BigInt, max: u32) -> Vec<BigInt> {
    let mut table = Vec::with_capacity(max as usize + 1);
    table.push(BigInt::one());
    for _ in 0..max {
        table.push(table.last().unwrap() * base);
    }
    table
}

/// sum over k of coeffs[k] * terms[k] / den, reduced once at the end.
/// Rescaling the rational coefficients to their lcm denominator avoids a
/// gcd per addition on denominators of size q^m.
fn dot_over_common_denominator(coeffs: &[Rational], terms: &[BigInt], den: &BigInt) -> Rational {
    debug_assert_eq!(coeffs.len(), terms.len());
    let lcm = coeffs
        .iter()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let mut num = BigInt::zero();
    for (c, t) in coeffs.iter().zip(terms) {
        num += c.numer() * (&lcm / c.denom()) * t;
    }
    Rational::new(num, lcm * den)
}
