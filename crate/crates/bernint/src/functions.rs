//! Catalog of test functions on `[0,1]` with exact evaluation and analytic
//! derivatives.
//!
//! Every catalog entry is rational-valued at rational points, which is what
//! makes rounding ties decidable downstream. The entries are chosen so that
//! each hypothesis of the direct estimates can be satisfied or violated in
//! exactly one clause: smooth bump functions pass everything, `x2` has a
//! non-vanishing second derivative at both endpoints, `neg-x2` sits strictly
//! below its tangent at 0, and `trunc3` is C^2 with limited smoothness.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::fmt;

use crate::error::{Error, Result};
use crate::numeric::{rat, rat_int, HighPrecisionReal, Rational};

/// Ids of the built-in catalog functions.
pub const CATALOG_IDS: &[&str] = &["x2", "neg-x2", "x2(1-x)2", "x3(1-x)3", "x4(1-x)4", "trunc3"];

#[derive(Clone, Debug, PartialEq, Eq)]
enum Kind {
    /// Polynomial in the monomial basis, coefficients constant-first.
    Poly(Vec<Rational>),
    /// `scale * (x - 1/2)_+^power`: zero left of 1/2, a polynomial piece right of it.
    TruncPower { scale: Rational, power: u32 },
}

/// A test function with analytic derivatives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestFunction {
    id: String,
    kind: Kind,
}

impl TestFunction {
    /// Looks up a built-in catalog entry by id.
    pub fn catalog_get(id: &str) -> Result<TestFunction> {
        let kind = match id {
            "x2" => Kind::Poly(vec![rat_int(0), rat_int(0), rat_int(1)]),
            "neg-x2" => Kind::Poly(vec![rat_int(0), rat_int(0), rat_int(-1)]),
            "x2(1-x)2" => Kind::Poly(bump_coeffs(2)),
            "x3(1-x)3" => Kind::Poly(bump_coeffs(3)),
            "x4(1-x)4" => Kind::Poly(bump_coeffs(4)),
            "trunc3" => Kind::TruncPower {
                scale: rat_int(8),
                power: 3,
            },
            _ => return Err(Error::UnknownFunction(id.to_string())),
        };
        Ok(TestFunction {
            id: id.to_string(),
            kind,
        })
    }

    /// A polynomial from monomial coefficients, constant term first.
    pub fn from_monomial_coeffs(coeffs: Vec<Rational>) -> TestFunction {
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs.last().map(|c| c.is_zero()) == Some(true) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Rational::zero());
        }
        let id = format!(
            "poly:{}",
            coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
        );
        TestFunction {
            id,
            kind: Kind::Poly(coeffs),
        }
    }

    /// The affine function `p*x + q`.
    pub fn linear(p: i64, q: i64) -> TestFunction {
        TestFunction::from_monomial_coeffs(vec![rat_int(q), rat_int(p)])
    }

    /// Parses a CLI function spec: a catalog id or "poly:c0,c1,..." with
    /// rational coefficients, constant first.
    pub fn parse_spec(spec: &str) -> Result<TestFunction> {
        if let Some(list) = spec.strip_prefix("poly:") {
            let coeffs = list
                .split(',')
                .map(crate::numeric::parse_rational)
                .collect::<Result<Vec<_>>>()?;
            if coeffs.is_empty() {
                return Err(Error::domain("poly: needs at least one coefficient"));
            }
            Ok(TestFunction::from_monomial_coeffs(coeffs))
        } else {
            TestFunction::catalog_get(spec)
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// True when evaluation at rational points yields exact rationals.
    /// All current catalog entries qualify.
    pub fn is_exact(&self) -> bool {
        true
    }

    /// Maximal continuous derivative order, `None` for C-infinity.
    pub fn s_max(&self) -> Option<u32> {
        match &self.kind {
            Kind::Poly(_) => None,
            Kind::TruncPower { power, .. } => Some(power.saturating_sub(1)),
        }
    }

    fn supports_derivative(&self, order: u32) -> bool {
        match self.s_max() {
            None => true,
            Some(max) => order <= max,
        }
    }

    /// Exact evaluation at a rational point.
    pub fn eval(&self, x: &Rational) -> Rational {
        match &self.kind {
            Kind::Poly(coeffs) => horner(coeffs, x),
            Kind::TruncPower { scale, power } => {
                let shifted = x - rat(1, 2);
                if shifted.is_negative() {
                    Rational::zero()
                } else {
                    scale * pow_rat(&shifted, *power)
                }
            }
        }
    }

    /// Evaluation at a high-precision real point.
    pub fn eval_hp(&self, x: &HighPrecisionReal) -> HighPrecisionReal {
        let digits = x.digits();
        let lift = |r: &Rational| HighPrecisionReal::from_rational(r.clone(), digits);
        match &self.kind {
            Kind::Poly(coeffs) => {
                let mut acc = HighPrecisionReal::zero(digits);
                for c in coeffs.iter().rev() {
                    acc = &(&acc * x) + &lift(c);
                }
                acc
            }
            Kind::TruncPower { scale, power } => {
                let shifted = x - &lift(&rat(1, 2));
                if shifted.as_rational().is_negative() {
                    HighPrecisionReal::zero(digits)
                } else {
                    let mut acc = lift(scale);
                    for _ in 0..*power {
                        acc = &acc * &shifted;
                    }
                    acc
                }
            }
        }
    }

    /// The i-th derivative as a new function. `deriv(0)` is the function itself.
    pub fn deriv(&self, order: u32) -> Result<TestFunction> {
        if !self.supports_derivative(order) {
            return Err(Error::Smoothness {
                requested: order,
                max: self.s_max().unwrap_or(u32::MAX),
            });
        }
        if order == 0 {
            return Ok(self.clone());
        }
        let kind = match &self.kind {
            Kind::Poly(coeffs) => Kind::Poly(differentiate_monomial_times(coeffs, order)),
            Kind::TruncPower { scale, power } => {
                // order <= power - 1 here, so the truncated shape survives.
                let mut scale = scale.clone();
                for i in 0..order {
                    scale *= rat_int((power - i) as i64);
                }
                Kind::TruncPower {
                    scale,
                    power: power - order,
                }
            }
        };
        Ok(TestFunction {
            id: format!("{}'{}", self.id, order),
            kind,
        })
    }

    /// Endpoint data for the hypotheses of the direct estimates: the four
    /// values that must be integers and the higher derivatives that must
    /// vanish at both endpoints up to order `s`.
    pub fn endpoint_profile(&self, s: u32) -> Result<EndpointProfile> {
        // The profile always reports f'(0), f'(1), so C^1 is the floor.
        if !self.supports_derivative(s.max(1)) {
            return Err(Error::Smoothness {
                requested: s.max(1),
                max: self.s_max().unwrap_or(u32::MAX),
            });
        }
        let zero = Rational::zero();
        let one = Rational::one();
        let d1 = self.deriv(1)?;
        let (df0, df1) = (d1.eval(&zero), d1.eval(&one));
        let mut higher_at_0 = Vec::new();
        let mut higher_at_1 = Vec::new();
        for i in 2..=s {
            let di = self.deriv(i)?;
            higher_at_0.push(di.eval(&zero));
            higher_at_1.push(di.eval(&one));
        }
        Ok(EndpointProfile {
            f0: self.eval(&zero),
            f1: self.eval(&one),
            df0,
            df1,
            higher_at_0,
            higher_at_1,
        })
    }
}

impl TestFunction {
    /// Prepares evaluation at many points that share a fixed denominator:
    /// f(num/den) = evaluator.numerator(num) / evaluator.denominator(), with
    /// all arithmetic on integers and no intermediate reduction. This is the
    /// fast path for dense grid sups.
    pub fn scaled_evaluator(&self, den: &BigInt) -> ScaledEval {
        use num_bigint::BigInt as B;
        match &self.kind {
            Kind::Poly(coeffs) => {
                let lcm = coeffs
                    .iter()
                    .fold(B::one(), |acc, c| num_integer::Integer::lcm(&acc, c.denom()));
                let scaled: Vec<B> = coeffs
                    .iter()
                    .map(|c| c.numer() * (&lcm / c.denom()))
                    .collect();
                let degree = scaled.len() - 1;
                let mut den_powers = Vec::with_capacity(degree + 1);
                den_powers.push(B::one());
                for _ in 0..degree {
                    den_powers.push(den_powers.last().unwrap() * den);
                }
                let denominator = &lcm * &den_powers[degree];
                ScaledEval {
                    kind: ScaledKind::Poly { scaled, den_powers },
                    denominator,
                }
            }
            Kind::TruncPower { scale, power } => {
                // f(num/den) = scale * ((2 num - den) / (2 den))^power on the
                // right branch; the shared denominator absorbs 2^power and
                // the scale's own denominator.
                let two_den = B::from(2) * den;
                let mut pow = B::one();
                for _ in 0..*power {
                    pow *= &two_den;
                }
                let denominator = &pow * scale.denom();
                ScaledEval {
                    kind: ScaledKind::TruncPower {
                        scale_num: scale.numer().clone(),
                        power: *power,
                        den: den.clone(),
                    },
                    denominator,
                }
            }
        }
    }
}

enum ScaledKind {
    Poly {
        scaled: Vec<num_bigint::BigInt>,
        den_powers: Vec<num_bigint::BigInt>,
    },
    TruncPower {
        scale_num: num_bigint::BigInt,
        power: u32,
        den: num_bigint::BigInt,
    },
}

/// Fixed-denominator evaluator produced by [`TestFunction::scaled_evaluator`].
pub struct ScaledEval {
    kind: ScaledKind,
    denominator: num_bigint::BigInt,
}

impl ScaledEval {
    /// f(num/den) * denominator(), exactly, in pure integer arithmetic.
    pub fn numerator(&self, num: &num_bigint::BigInt) -> num_bigint::BigInt {
        use num_bigint::BigInt as B;
        match &self.kind {
            ScaledKind::Poly { scaled, den_powers } => {
                let degree = scaled.len() - 1;
                let mut acc = scaled[degree].clone();
                for k in (0..degree).rev() {
                    acc = acc * num + &scaled[k] * &den_powers[degree - k];
                }
                acc
            }
            ScaledKind::TruncPower {
                scale_num,
                power,
                den,
            } => {
                let shifted = B::from(2) * num - den;
                if shifted.is_negative() {
                    return B::zero();
                }
                let mut acc = scale_num.clone();
                for _ in 0..*power {
                    acc *= &shifted;
                }
                acc
            }
        }
    }

    pub fn denominator(&self) -> &num_bigint::BigInt {
        &self.denominator
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

/// Endpoint derivative values up to a requested order, plus the flags the
/// theorems ask about. Values are computed from `deriv`, never stored twice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EndpointProfile {
    pub f0: Rational,
    pub f1: Rational,
    pub df0: Rational,
    pub df1: Rational,
    /// f^(i)(0) for i = 2..=s, in order.
    pub higher_at_0: Vec<Rational>,
    /// f^(i)(1) for i = 2..=s, in order.
    pub higher_at_1: Vec<Rational>,
}

impl EndpointProfile {
    /// f(0), f(1), f'(0), f'(1) all integers.
    pub fn endpoint_values_integer(&self) -> bool {
        [&self.f0, &self.f1, &self.df0, &self.df1]
            .iter()
            .all(|v| v.is_integer())
    }

    /// f^(i)(0) = f^(i)(1) = 0 for i = 2..=s.
    pub fn higher_derivatives_vanish(&self) -> bool {
        self.higher_at_0.iter().all(Zero::is_zero) && self.higher_at_1.iter().all(Zero::is_zero)
    }
}

/// Monomial coefficients of `(x(1-x))^m`, constant first.
fn bump_coeffs(m: u32) -> Vec<Rational> {
    let factor = vec![rat_int(0), rat_int(1), rat_int(-1)]; // x - x^2
    let mut acc = vec![rat_int(1)];
    for _ in 0..m {
        acc = poly_mul(&acc, &factor);
    }
    acc
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

fn horner(coeffs: &[Rational], x: &Rational) -> Rational {
    let mut acc = Rational::zero();
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn pow_rat(x: &Rational, e: u32) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..e {
        acc *= x;
    }
    acc
}

fn differentiate_monomial_times(coeffs: &[Rational], times: u32) -> Vec<Rational> {
    let mut cur = coeffs.to_vec();
    for _ in 0..times {
        if cur.len() <= 1 {
            return vec![Rational::zero()];
        }
        cur = cur
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * rat_int(k as i64))
            .collect();
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x2_at_half() {
        let f = TestFunction::catalog_get("x2").unwrap();
        assert_eq!(f.eval(&rat(1, 2)), rat(1, 4));
    }

    #[test]
    fn bump_derivative_vanishes_at_zero() {
        let f = TestFunction::catalog_get("x2(1-x)2").unwrap();
        let d = f.deriv(1).unwrap();
        assert_eq!(d.eval(&rat_int(0)), rat_int(0));
    }

    #[test]
    fn trunc3_endpoint_data() {
        // Symbolic oracle: on [1/2,1] the function is 8(x-1/2)^3, so
        // f' = 24(x-1/2)^2 and f'' = 48(x-1/2).
        let f = TestFunction::catalog_get("trunc3").unwrap();
        assert_eq!(f.eval(&rat_int(1)), rat_int(1));
        assert_eq!(f.deriv(1).unwrap().eval(&rat_int(1)), rat_int(6));
        assert_eq!(f.deriv(2).unwrap().eval(&rat_int(1)), rat_int(24));
        assert_eq!(f.s_max(), Some(2));
        assert!(f.deriv(3).is_err());
        // Left of the knot everything is identically zero.
        assert_eq!(f.eval(&rat(1, 4)), rat_int(0));
        assert_eq!(f.deriv(2).unwrap().eval(&rat(1, 2)), rat_int(0));
    }

    #[test]
    fn bump_expansions_match_hand_values() {
        let f = TestFunction::catalog_get("x3(1-x)3").unwrap();
        assert_eq!(f.eval(&rat(1, 2)), rat(1, 64));
        assert_eq!(f.eval(&rat(1, 4)), rat(27, 4096));
    }

    #[test]
    fn endpoint_profile_x2() {
        let f = TestFunction::catalog_get("x2").unwrap();
        let p = f.endpoint_profile(2).unwrap();
        assert_eq!(p.f0, rat_int(0));
        assert_eq!(p.f1, rat_int(1));
        assert_eq!(p.df0, rat_int(0));
        assert_eq!(p.df1, rat_int(2));
        assert!(p.endpoint_values_integer());
        assert_eq!(p.higher_at_0, vec![rat_int(2)]);
        assert!(!p.higher_derivatives_vanish());
    }

    #[test]
    fn endpoint_profile_triple_bump_passes_order_two() {
        let f = TestFunction::catalog_get("x3(1-x)3").unwrap();
        let p = f.endpoint_profile(2).unwrap();
        assert!(p.endpoint_values_integer());
        assert!(p.higher_derivatives_vanish());
    }

    #[test]
    fn endpoint_profile_linear_all_orders() {
        let f = TestFunction::linear(3, -1);
        let p = f.endpoint_profile(5).unwrap();
        assert!(p.endpoint_values_integer());
        assert!(p.higher_derivatives_vanish());
        assert_eq!(p.df0, rat_int(3));
        assert_eq!(p.f0, rat_int(-1));
    }

    #[test]
    fn endpoint_profile_agrees_with_direct_eval() {
        for id in CATALOG_IDS {
            let f = TestFunction::catalog_get(id).unwrap();
            let s = f.s_max().unwrap_or(3).min(3);
            let p = f.endpoint_profile(s).unwrap();
            assert_eq!(p.f0, f.eval(&rat_int(0)));
            assert_eq!(p.f1, f.eval(&rat_int(1)));
            for i in 2..=s {
                let d = f.deriv(i).unwrap();
                assert_eq!(p.higher_at_0[(i - 2) as usize], d.eval(&rat_int(0)));
                assert_eq!(p.higher_at_1[(i - 2) as usize], d.eval(&rat_int(1)));
            }
        }
    }

    #[test]
    fn unknown_id_is_an_error() {
        assert!(matches!(
            TestFunction::catalog_get("exp"),
            Err(Error::UnknownFunction(_))
        ));
    }

    #[test]
    fn parse_spec_poly() {
        let f = TestFunction::parse_spec("poly:3,-1").unwrap();
        // constant first: 3 - x
        assert_eq!(f.eval(&rat_int(0)), rat_int(3));
        assert_eq!(f.eval(&rat_int(2)), rat_int(1));
        let g = TestFunction::parse_spec("poly:1/2,0,3").unwrap();
        assert_eq!(g.eval(&rat_int(1)), rat(7, 2));
        assert!(TestFunction::parse_spec("nope").is_err());
    }

    #[test]
    fn derivative_matches_central_difference_on_grid() {
        // Central difference at step 1e-6: all arithmetic exact, so the only
        // discrepancy is the O(h^2) truncation term.
        let h = Rational::new(1.into(), 1_000_000.into());
        let tol = Rational::new(1.into(), 100_000_000.into());
        for id in CATALOG_IDS {
            let f = TestFunction::catalog_get(id).unwrap();
            let d = f.deriv(1).unwrap();
            for i in 0..=64 {
                let x = rat(i, 64);
                let fd = (f.eval(&(&x + &h)) - f.eval(&(&x - &h))) / (rat_int(2) * &h);
                let exact = d.eval(&x);
                let err = (fd - &exact).abs();
                let scale = if exact.abs() > Rational::one() {
                    exact.abs()
                } else {
                    Rational::one()
                };
                assert!(err <= &tol * &scale, "{id} at {x}: err {err}");
            }
        }
    }

    #[test]
    fn scaled_evaluator_matches_eval() {
        let den = BigInt::from(1920);
        for id in CATALOG_IDS {
            let f = TestFunction::catalog_get(id).unwrap();
            let ev = f.scaled_evaluator(&den);
            for num in [0i64, 1, 7, 960, 961, 1280, 1919, 1920] {
                let direct = f.eval(&Rational::new(num.into(), den.clone()));
                let fast = Rational::new(ev.numerator(&BigInt::from(num)), ev.denominator().clone());
                assert_eq!(direct, fast, "{id} at {num}/1920");
            }
        }
    }

    #[test]
    fn eval_hp_matches_exact_at_rational_points() {
        for id in CATALOG_IDS {
            let f = TestFunction::catalog_get(id).unwrap();
            for i in 0..=16 {
                let x = rat(i, 16);
                let hp = HighPrecisionReal::from_rational(x.clone(), 64);
                assert_eq!(*f.eval_hp(&hp).as_rational(), f.eval(&x));
            }
        }
    }
}
