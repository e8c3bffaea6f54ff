//! Independent monomial-basis oracle used by the integration tests.
//!
//! Nothing here touches the crate's derivative or evaluation paths beyond
//! the plain coefficient accessors: Bernstein-form polynomials are expanded
//! into the monomial basis with a local Pascal triangle, evaluated by Horner,
//! and differentiated term by term.

use bernint::bernstein::BernsteinPoly;
use bernint::numeric::Rational;
use num_bigint::BigInt;
use num_traits::{One, Zero};

/// Local Pascal triangle, independent of the crate's binomial.
fn pascal_row(n: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for _ in 0..n {
        let mut next = vec![BigInt::one()];
        for pair in row.windows(2) {
            next.push(&pair[0] + &pair[1]);
        }
        next.push(BigInt::one());
        row = next;
    }
    row
}

fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Expands a Bernstein-form polynomial into monomial coefficients
/// (constant term first) by brute-force multiplication.
pub fn bernstein_to_monomial(poly: &BernsteinPoly) -> Vec<Rational> {
    let n = poly.degree() as usize;
    let values = poly.normalized_coeffs().expect("normalizable");
    let binomials = pascal_row(n);
    let mut acc = vec![Rational::zero(); n + 1];
    let x = vec![Rational::zero(), Rational::one()];
    let one_minus_x = vec![Rational::one(), -Rational::one()];
    for (k, value) in values.iter().enumerate() {
        let mut term = vec![Rational::one()];
        for _ in 0..k {
            term = poly_mul(&term, &x);
        }
        for _ in 0..(n - k) {
            term = poly_mul(&term, &one_minus_x);
        }
        let scale = value * Rational::from_integer(binomials[k].clone());
        for (i, t) in term.iter().enumerate() {
            acc[i] += &scale * t;
        }
    }
    acc
}

pub fn monomial_eval(coeffs: &[Rational], x: &Rational) -> Rational {
    let mut acc = Rational::zero();
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

pub fn monomial_derivative(coeffs: &[Rational]) -> Vec<Rational> {
    if coeffs.len() <= 1 {
        return vec![Rational::zero()];
    }
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * Rational::from_integer(BigInt::from(k)))
        .collect()
}

pub fn monomial_derivative_times(coeffs: &[Rational], s: u32) -> Vec<Rational> {
    let mut cur = coeffs.to_vec();
    for _ in 0..s {
        cur = monomial_derivative(&cur);
    }
    cur
}
