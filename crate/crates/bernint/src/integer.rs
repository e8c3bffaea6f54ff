//! The integer-coefficient Bernstein operators.
//!
//!Both variants share one construction: the raw coefficient `f(k/n)·C(n,k)` is
//! replaced by an integer. With the floor rule this is the Kantorovich
//! modification; with a nearest-integer rule (one of six deterministic
//! tie-breakers or a seeded random one) it is the variant with the better
//! simultaneous-approximation behaviour. Ties are decided on exact rationals
//! only; the high-precision path refuses to guess when a value sits within
//! the guard distance of a rounding discontinuity.

use num_bigint::{BigInt, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use std::fmt;

use crate::bernstein::{derivative_at, BernsteinPoly, Form};
use crate::error::{Error, Result};
use crate::functions::TestFunction;
use crate::numeric::{binomial, floor_int, rat, HighPrecisionReal, Rational};

/// How a raw coefficient is turned into an integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RoundingRule {
    /// Largest integer not exceeding the value (the Kantorovich form).
    Floor,
    HalfUp,
    HalfDown,
    HalfTowardZero,
    HalfAwayFromZero,
    HalfToEven,
    HalfToOdd,
    /// Ties resolved by a deterministic per-(n,k) stream derived from the
    /// seed, rounding up with the given probability.
    HalfRandom {
        seed: u64,
        half_probability: Rational,
    },
}

impl RoundingRule {
    pub fn half_random(seed: u64) -> Self {
        RoundingRule::HalfRandom {
            seed,
            half_probability: rat(1, 2),
        }
    }

    pub fn is_floor(&self) -> bool {
        matches!(self, RoundingRule::Floor)
    }

    /// All deterministic tie rules in a fixed order, floor first.
    pub fn deterministic_rules() -> Vec<RoundingRule> {
        vec![
            RoundingRule::Floor,
            RoundingRule::HalfUp,
            RoundingRule::HalfDown,
            RoundingRule::HalfTowardZero,
            RoundingRule::HalfAwayFromZero,
            RoundingRule::HalfToEven,
            RoundingRule::HalfToOdd,
        ]
    }

    /// Parses the CLI rule grammar: floor, half-up, half-down,
    /// half-toward-zero, half-away-zero, half-even, half-odd,
    /// half-random:<seed>[:p/q].
    pub fn parse(text: &str) -> Result<RoundingRule> {
        match text {
            "floor" => return Ok(RoundingRule::Floor),
            "half-up" => return Ok(RoundingRule::HalfUp),
            "half-down" => return Ok(RoundingRule::HalfDown),
            "half-toward-zero" => return Ok(RoundingRule::HalfTowardZero),
            "half-away-zero" => return Ok(RoundingRule::HalfAwayFromZero),
            "half-even" => return Ok(RoundingRule::HalfToEven),
            "half-odd" => return Ok(RoundingRule::HalfToOdd),
            _ => {}
        }
        if let Some(rest) = text.strip_prefix("half-random:") {
            let (seed_part, prob_part) = match rest.split_once(':') {
                Some((s, p)) => (s, Some(p)),
                None => (rest, None),
            };
            let seed = seed_part
                .parse::<u64>()
                .map_err(|_| Error::domain(format!("invalid half-random seed: {seed_part:?}")))?;
            let half_probability = match prob_part {
                Some(p) => {
                    let prob = crate::numeric::parse_rational(p)?;
                    if prob.is_negative() || prob > Rational::one() {
                        return Err(Error::domain(format!("probability {prob} outside [0,1]")));
                    }
                    prob
                }
                None => rat(1, 2),
            };
            return Ok(RoundingRule::HalfRandom {
                seed,
                half_probability,
            });
        }
        Err(Error::domain(format!("unknown rounding rule: {text:?}")))
    }
}

impl fmt::Display for RoundingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoundingRule::Floor => write!(f, "floor"),
            RoundingRule::HalfUp => write!(f, "half-up"),
            RoundingRule::HalfDown => write!(f, "half-down"),
            RoundingRule::HalfTowardZero => write!(f, "half-toward-zero"),
            RoundingRule::HalfAwayFromZero => write!(f, "half-away-zero"),
            RoundingRule::HalfToEven => write!(f, "half-even"),
            RoundingRule::HalfToOdd => write!(f, "half-odd"),
            RoundingRule::HalfRandom {
                seed,
                half_probability,
            } => {
                if *half_probability == rat(1, 2) {
                    write!(f, "half-random:{seed}")
                } else {
                    write!(f, "half-random:{seed}:{half_probability}")
                }
            }
        }
    }
}

/// Rounds an exact rational to an integer. HalfRandom draws from the default
/// (n=0, k=0) stream; coefficient construction uses `round_value_at`.
pub fn round_value(a: &Rational, rule: &RoundingRule) -> BigInt {
    round_value_at(a, rule, 0, 0)
}

/// Rounds with the (n,k)-indexed stream for HalfRandom, so coefficient sets
/// are reproducible independent of evaluation order.
pub fn round_value_at(a: &Rational, rule: &RoundingRule, n: u32, k: u32) -> BigInt {
    if rule.is_floor() {
        return floor_int(a);
    }
    let fl = floor_int(a);
    let frac = a - Rational::from_integer(fl.clone());
    match frac.cmp(&rat(1, 2)) {
        Ordering::Less => fl,
        Ordering::Greater => fl + 1,
        Ordering::Equal => break_tie(fl, rule, n, k),
    }
}

/// Resolves the tie at m + 1/2, where m is the floor.
fn break_tie(m: BigInt, rule: &RoundingRule, n: u32, k: u32) -> BigInt {
    match rule {
        RoundingRule::Floor => unreachable!("floor handled before tie detection"),
        RoundingRule::HalfUp => m + 1,
        RoundingRule::HalfDown => m,
        RoundingRule::HalfTowardZero => {
            if m.is_negative() {
                m + 1
            } else {
                m
            }
        }
        RoundingRule::HalfAwayFromZero => {
            if m.is_negative() {
                m
            } else {
                m + 1
            }
        }
        RoundingRule::HalfToEven => {
            if m.is_even() {
                m
            } else {
                m + 1
            }
        }
        RoundingRule::HalfToOdd => {
            if m.is_odd() {
                m
            } else {
                m + 1
            }
        }
        RoundingRule::HalfRandom {
            seed,
            half_probability,
        } => {
            if tie_goes_up(*seed, n, k, half_probability) {
                m + 1
            } else {
                m
            }
        }
    }
}

/// Deterministic draw for a HalfRandom tie: an exact Bernoulli trial with
/// rational probability, on a stream keyed by (seed, n, k).
fn tie_goes_up(seed: u64, n: u32, k: u32, probability: &Rational) -> bool {
    let mut key = seed;
    for word in [n as u64, k as u64] {
        // splitmix64 step mixes the key with each index word.
        key = key.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(word);
        let mut z = key;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        key = z ^ (z >> 31);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let denom = probability.denom().to_biguint().expect("denominator > 0");
    let numer = probability.numer().to_biguint().unwrap_or_default();
    if denom.is_one() {
        return !numer.is_zero();
    }
    rng.gen_biguint_below(&denom) < numer
}

/// Rounds a high-precision value, refusing when it lies within the guard
/// distance `10^(-digits/2)` of a discontinuity of the rule (half-integers
/// for the nearest rules, integers for floor).
pub fn round_value_hp(
    value: &HighPrecisionReal,
    rule: &RoundingRule,
    n: u32,
    k: u32,
) -> Result<BigInt> {
    let digits = value.digits();
    let guard = Rational::new(BigInt::one(), BigInt::from(10u32).pow(digits / 2));
    let r = value.as_rational();
    let distance = if rule.is_floor() {
        // Distance to the nearest integer.
        let nearest = round_value_at(r, &RoundingRule::HalfUp, 0, 0);
        (r - Rational::from_integer(nearest)).abs()
    } else {
        // Distance to the nearest half-integer: shift by 1/2 and measure to
        // the nearest integer.
        let shifted = r - rat(1, 2);
        let nearest = round_value_at(&shifted, &RoundingRule::HalfUp, 0, 0);
        (shifted - Rational::from_integer(nearest)).abs()
    };
    if distance < guard {
        return Err(Error::AmbiguousTie {
            n,
            k,
            guard: format!("10^-{}", digits / 2),
        });
    }
    Ok(round_value_at(r, rule, n, k))
}

/// How raw coefficient values are obtained before rounding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientMode {
    /// Exact rational evaluation; ties decided exactly.
    Exact,
    /// High-precision evaluation at the given number of decimal digits, with
    /// the ambiguous-tie guard.
    HighPrecision(u32),
}

/// The rounded coefficient set of an integer operator: raw integers
/// A_k = round(f(k/n)·C(n,k)) and their normalized values A_k / C(n,k).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerCoefficients {
    pub n: u32,
    pub raw: Vec<BigInt>,
    pub normalized: Vec<Rational>,
    pub rule: RoundingRule,
}

/// Builds the coefficient set, choosing the exact path automatically for
/// exactly-evaluable functions.
pub fn coefficients(f: &TestFunction, n: u32, rule: &RoundingRule) -> Result<IntegerCoefficients> {
    let mode = if f.is_exact() {
        CoefficientMode::Exact
    } else {
        CoefficientMode::HighPrecision(crate::numeric::DEFAULT_PRECISION)
    };
    coefficients_with_mode(f, n, rule, mode)
}

pub fn coefficients_with_mode(
    f: &TestFunction,
    n: u32,
    rule: &RoundingRule,
    mode: CoefficientMode,
) -> Result<IntegerCoefficients> {
    if n == 0 {
        return Err(Error::domain("coefficients: n must be at least 1"));
    }
    let binomials = crate::numeric::binomial_row(n);
    let mut raw = Vec::with_capacity(n as usize + 1);
    let mut normalized = Vec::with_capacity(n as usize + 1);
    for k in 0..=n {
        let binom = binomials[k as usize].clone();
        let rounded = match mode {
            CoefficientMode::Exact => {
                let value = f.eval(&rat(k as i64, n as i64)) * Rational::from_integer(binom.clone());
                round_value_at(&value, rule, n, k)
            }
            CoefficientMode::HighPrecision(digits) => {
                let x = HighPrecisionReal::from_rational(rat(k as i64, n as i64), digits);
                let value = &f.eval_hp(&x)
                    * &HighPrecisionReal::from_rational(
                        Rational::from_integer(binom.clone()),
                        digits,
                    );
                round_value_hp(&value, rule, n, k)?
            }
        };
        normalized.push(Rational::new(rounded.clone(), binom));
        raw.push(rounded);
    }
    Ok(IntegerCoefficients {
        n,
        raw,
        normalized,
        rule: rule.clone(),
    })
}

/// The integer operator as a polynomial: normalized coefficients b_n(k) in
/// the Bernstein basis. Floor gives the Kantorovich variant, the other rules
/// the nearest-integer variant.
pub fn apply_integer_operator(
    f: &TestFunction,
    n: u32,
    rule: &RoundingRule,
) -> Result<BernsteinPoly> {
    let coeffs = coefficients(f, n, rule)?;
    BernsteinPoly::new(n, coeffs.normalized, Form::Normalized)
}

/// Exact s-th derivative of the integer operator at x, via unit-step forward
/// differences of the normalized coefficients. Agrees with the symbolic
/// derivative of `apply_integer_operator`.
pub fn integer_operator_derivative(
    f: &TestFunction,
    n: u32,
    s: u32,
    rule: &RoundingRule,
    x: &Rational,
) -> Result<Rational> {
    if s > n {
        return Err(Error::Degree { n, s });
    }
    let coeffs = coefficients(f, n, rule)?;
    derivative_at(&coeffs.normalized, s, x)
}

/// Tail check outcome of `closed_form_coefficient_check`: the k=s coefficient
/// against its closed form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TailCheck {
    /// Nearest rules: b(s) = f(0) + (s/n)f'(0) + (<s^s f^(s)(0)/(s!)^2> + r)/C(n,s)
    /// with r in {-1,0,1}, or the raw residual when it is not.
    Nearest {
        r: Option<i8>,
        residual: Rational,
    },
    /// Floor rule: b(s) against f(0) + (s/n)f'(0) + ((n-s)!/n!)·f^(s)(0).
    Floor {
        holds: bool,
        residual: Rational,
    },
}

/// Row-by-row report of the proof-level closed forms for the first s+1
/// coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoefficientCheckReport {
    /// (k, expected line value f(0) + (k/n)f'(0), actual b(k), equal) for k < s.
    pub line_rows: Vec<(u32, Rational, Rational, bool)>,
    pub tail: TailCheck,
}

impl CoefficientCheckReport {
    pub fn line_holds(&self) -> bool {
        self.line_rows.iter().all(|(_, _, _, ok)| *ok)
    }
}

/// Verifies the closed-form coefficient values that drive the necessity
/// arguments: the first s coefficients must sit exactly on the tangent line
/// f(0) + (k/n)f'(0), and the k=s coefficient deviates from it by a
/// controlled rounding term.
pub fn closed_form_coefficient_check(
    f: &TestFunction,
    n: u32,
    s: u32,
    rule: &RoundingRule,
) -> Result<CoefficientCheckReport> {
    if s == 0 || s > n {
        return Err(Error::domain(format!(
            "closed_form_coefficient_check: need 1 <= s <= n, got s={s}, n={n}"
        )));
    }
    let profile = f.endpoint_profile(s)?;
    if !profile.endpoint_values_integer() {
        return Err(Error::hypothesis(format!(
            "{}: endpoint values f(0), f(1), f'(0), f'(1) must be integers",
            f.id()
        )));
    }
    if !profile.higher_derivatives_vanish() {
        return Err(Error::hypothesis(format!(
            "{}: derivatives of order 2..={s} must vanish at the endpoints",
            f.id()
        )));
    }
    let coeffs = coefficients(f, n, rule)?;
    let line = |k: u32| &profile.f0 + rat(k as i64, n as i64) * &profile.df0;

    let mut line_rows = Vec::new();
    for k in 0..s {
        let expected = line(k);
        let actual = coeffs.normalized[k as usize].clone();
        let ok = expected == actual;
        line_rows.push((k, expected, actual, ok));
    }

    let base = line(s);
    let binom_s = Rational::from_integer(binomial(n, s)?);
    let ds0 = f.deriv(s)?.eval(&Rational::zero());
    let tail = if rule.is_floor() {
        // (n-s)!/n! = 1 / falling_factorial(n, s)
        let falling = Rational::from_integer(crate::bernstein::falling_factorial(n, s));
        let expected = &base + &ds0 / falling;
        let actual = &coeffs.normalized[s as usize];
        TailCheck::Floor {
            holds: *actual == expected,
            residual: actual - expected,
        }
    } else {
        // For s = 1 the Taylor term (k/n)^s f^(s)(0)/s! is the tangent line's
        // own slope contribution, so no extra rounded term appears.
        let inner = if s >= 2 {
            let s_big = BigInt::from(s);
            let s_fact = crate::bernstein::falling_factorial(s, s);
            let scale = Rational::new(s_big.pow(s), &s_fact * &s_fact);
            round_value(&(scale * &ds0), rule)
        } else {
            BigInt::zero()
        };
        let residual =
            (&coeffs.normalized[s as usize] - base) * binom_s - Rational::from_integer(inner);
        let r = if residual.is_integer() {
            residual.to_integer().to_i8().filter(|v| (-1..=1).contains(v))
        } else {
            None
        };
        TailCheck::Nearest { r, residual }
    };

    Ok(CoefficientCheckReport { line_rows, tail })
}

/// Property hook for the tie lemma: if |alpha - m| <= omega then the rounded
/// value stays within 2*omega of m, for every non-floor rule.
pub fn lemma_lm_check(
    alpha: &Rational,
    m: &BigInt,
    omega: &Rational,
    rule: &RoundingRule,
) -> Result<bool> {
    if rule.is_floor() {
        return Err(Error::domain(
            "lemma_lm_check applies to nearest-integer rules only",
        ));
    }
    let deviation = (alpha - Rational::from_integer(m.clone())).abs();
    if &deviation > omega {
        return Err(Error::domain(format!(
            "lemma_lm_check precondition |alpha - m| <= omega violated: {deviation} > {omega}"
        )));
    }
    let rounded = round_value(alpha, rule);
    Ok((Rational::from_integer(rounded - m)).abs() <= rat(2, 1) * omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat_int;

    fn all_half_rules() -> Vec<RoundingRule> {
        let mut rules: Vec<RoundingRule> = RoundingRule::deterministic_rules()
            .into_iter()
            .filter(|r| !r.is_floor())
            .collect();
        rules.push(RoundingRule::half_random(7));
        rules
    }

    #[test]
    fn tie_breaking_table() {
        let five_halves = rat(5, 2);
        assert_eq!(round_value(&five_halves, &RoundingRule::HalfUp), rat_int(3).to_integer());
        assert_eq!(round_value(&five_halves, &RoundingRule::HalfDown), BigInt::from(2));
        assert_eq!(round_value(&five_halves, &RoundingRule::HalfToEven), BigInt::from(2));
        assert_eq!(round_value(&five_halves, &RoundingRule::HalfToOdd), BigInt::from(3));
        let neg_three_halves = rat(-3, 2);
        assert_eq!(
            round_value(&neg_three_halves, &RoundingRule::HalfTowardZero),
            BigInt::from(-1)
        );
        assert_eq!(
            round_value(&neg_three_halves, &RoundingRule::HalfAwayFromZero),
            BigInt::from(-2)
        );
        assert_eq!(
            round_value(&neg_three_halves, &RoundingRule::HalfToEven),
            BigInt::from(-2)
        );
        for rule in all_half_rules() {
            assert_eq!(round_value(&rat(7, 3), &rule), BigInt::from(2), "{rule}");
            assert_eq!(round_value(&rat(-7, 3), &rule), BigInt::from(-2), "{rule}");
        }
        assert_eq!(round_value(&rat(-7, 3), &RoundingRule::Floor), BigInt::from(-3));
    }

    #[test]
    fn rule_parsing_round_trips() {
        for text in [
            "floor",
            "half-up",
            "half-down",
            "half-toward-zero",
            "half-away-zero",
            "half-even",
            "half-odd",
            "half-random:42",
            "half-random:42:1/3",
        ] {
            let rule = RoundingRule::parse(text).unwrap();
            assert_eq!(rule.to_string(), text);
        }
        assert!(RoundingRule::parse("half-random:x").is_err());
        assert!(RoundingRule::parse("ceil").is_err());
        assert!(RoundingRule::parse("half-random:1:3/2").is_err());
    }

    #[test]
    fn half_random_is_reproducible_and_indexed() {
        let rule = RoundingRule::half_random(42);
        let tie = rat(5, 2);
        let first = round_value_at(&tie, &rule, 10, 3);
        for _ in 0..10 {
            assert_eq!(round_value_at(&tie, &rule, 10, 3), first);
        }
        // Extreme probabilities pin the outcome.
        let always_up = RoundingRule::HalfRandom {
            seed: 1,
            half_probability: rat_int(1),
        };
        let never_up = RoundingRule::HalfRandom {
            seed: 1,
            half_probability: rat_int(0),
        };
        for k in 0..20 {
            assert_eq!(round_value_at(&tie, &always_up, 5, k), BigInt::from(3));
            assert_eq!(round_value_at(&tie, &never_up, 5, k), BigInt::from(2));
        }
        // Across (n,k) the draws differ somewhere.
        let outcomes: Vec<BigInt> = (0..32)
            .map(|k| round_value_at(&tie, &rule, 64, k))
            .collect();
        assert!(outcomes.iter().any(|v| *v == BigInt::from(2)));
        assert!(outcomes.iter().any(|v| *v == BigInt::from(3)));
    }

    #[test]
    fn coefficients_x2_small_cases() {
        let f = TestFunction::catalog_get("x2").unwrap();
        // raw values: f(0)*1 = 0, f(1/2)*2 = 1/2 (a tie), f(1)*1 = 1.
        let floor = coefficients(&f, 2, &RoundingRule::Floor).unwrap();
        assert_eq!(floor.raw, vec![BigInt::zero(), BigInt::zero(), BigInt::one()]);
        let even = coefficients(&f, 2, &RoundingRule::HalfToEven).unwrap();
        assert_eq!(even.raw, vec![BigInt::zero(), BigInt::zero(), BigInt::one()]);
        let up = coefficients(&f, 2, &RoundingRule::HalfUp).unwrap();
        assert_eq!(up.raw, vec![BigInt::zero(), BigInt::one(), BigInt::one()]);
    }

    #[test]
    fn integer_operator_x2_floor_is_x2() {
        let f = TestFunction::catalog_get("x2").unwrap();
        let p = apply_integer_operator(&f, 2, &RoundingRule::Floor).unwrap();
        for i in 0..=8 {
            let x = rat(i, 8);
            assert_eq!(p.eval(&x), f.eval(&x));
        }
    }

    #[test]
    fn neg_x2_floor_coefficient() {
        let f = TestFunction::catalog_get("neg-x2").unwrap();
        let c = coefficients(&f, 4, &RoundingRule::Floor).unwrap();
        // f(1/4)*C(4,1) = -(1/16)*4 = -1/4, floored to -1.
        assert_eq!(c.raw[1], BigInt::from(-1));
        assert_eq!(c.normalized[1], rat(-1, 4));
    }

    #[test]
    fn linear_raw_coefficients_are_exact_integers() {
        // eq29-style integrality: (q + p k/n) C(n,k) is an integer, so no
        // rule ever changes a linear function's coefficients.
        let f = TestFunction::linear(3, -2);
        for rule in RoundingRule::deterministic_rules() {
            for n in [1u32, 5, 12, 33] {
                let c = coefficients(&f, n, &rule).unwrap();
                for k in 0..=n {
                    let exact = f.eval(&rat(k as i64, n as i64))
                        * Rational::from_integer(binomial(n, k).unwrap());
                    assert!(exact.is_integer());
                    assert_eq!(c.raw[k as usize], exact.to_integer(), "{rule} n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn normalized_times_binomial_reconstructs_raw() {
        let f = TestFunction::catalog_get("x3(1-x)3").unwrap();
        for rule in [RoundingRule::Floor, RoundingRule::HalfToEven] {
            for n in [3u32, 17, 40] {
                let c = coefficients(&f, n, &rule).unwrap();
                for k in 0..=n {
                    let product =
                        &c.normalized[k as usize] * Rational::from_integer(binomial(n, k).unwrap());
                    assert!(product.is_integer());
                    assert_eq!(product.to_integer(), c.raw[k as usize]);
                }
            }
        }
    }

    #[test]
    fn floor_and_nearest_defect_bounds() {
        let f = TestFunction::catalog_get("x2(1-x)2").unwrap();
        for n in [4u32, 16, 48] {
            let floor = coefficients(&f, n, &RoundingRule::Floor).unwrap();
            let near = coefficients(&f, n, &RoundingRule::HalfToOdd).unwrap();
            for k in 0..=n {
                let fkn = f.eval(&rat(k as i64, n as i64));
                let binom = Rational::from_integer(binomial(n, k).unwrap());
                let floor_defect = &fkn - &floor.normalized[k as usize];
                assert!(!floor_defect.is_negative(), "n={n} k={k}");
                assert!(floor_defect < binom.recip(), "n={n} k={k}");
                let near_defect = (&fkn - &near.normalized[k as usize]).abs();
                assert!(near_defect <= rat(1, 2) * binom.recip(), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn half_rules_agree_off_ties() {
        // x3(1-x)3 at n=7: no raw value f(k/7)*C(7,k) is a half-integer
        // (denominators are powers of 7), so every nearest rule agrees.
        let f = TestFunction::catalog_get("x3(1-x)3").unwrap();
        let reference = coefficients(&f, 7, &RoundingRule::HalfUp).unwrap();
        for rule in all_half_rules() {
            let c = coefficients(&f, 7, &rule).unwrap();
            assert_eq!(c.raw, reference.raw, "{rule}");
        }
    }

    #[test]
    fn derivative_closed_forms_at_zero() {
        // (Btilde neg-x2)'(0) = -1 for every n >= 2, while f'(0) = 0.
        let neg = TestFunction::catalog_get("neg-x2").unwrap();
        for n in [2u32, 3, 10, 64] {
            let d = integer_operator_derivative(&neg, n, 1, &RoundingRule::Floor, &rat_int(0))
                .unwrap();
            assert_eq!(d, rat_int(-1), "n={n}");
        }
        // (Bhat x2)''(0) = 4 for n >= 5 under half-even, while f''(0) = 2.
        let sq = TestFunction::catalog_get("x2").unwrap();
        for n in [5u32, 6, 17, 64] {
            let d = integer_operator_derivative(&sq, n, 2, &RoundingRule::HalfToEven, &rat_int(0))
                .unwrap();
            assert_eq!(d, rat_int(4), "n={n}");
        }
        // Linear functions keep their slope under every rule.
        let lin = TestFunction::linear(-2, 1);
        for rule in RoundingRule::deterministic_rules() {
            let d = integer_operator_derivative(&lin, 9, 1, &rule, &rat(1, 3)).unwrap();
            assert_eq!(d, rat_int(-2), "{rule}");
        }
    }

    #[test]
    fn derivative_matches_symbolic_route() {
        for id in ["x2", "x2(1-x)2", "x3(1-x)3"] {
            let f = TestFunction::catalog_get(id).unwrap();
            for rule in [RoundingRule::Floor, RoundingRule::HalfToEven] {
                let p = apply_integer_operator(&f, 9, &rule).unwrap();
                for s in 0..=3u32 {
                    let sym = p.derivative(s).unwrap();
                    for i in 0..=6 {
                        let x = rat(i, 6);
                        assert_eq!(
                            integer_operator_derivative(&f, 9, s, &rule, &x).unwrap(),
                            sym.eval(&x),
                            "{id} {rule} s={s} x={x}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_check_triple_bump() {
        let f = TestFunction::catalog_get("x3(1-x)3").unwrap();
        let report =
            closed_form_coefficient_check(&f, 64, 2, &RoundingRule::HalfToEven).unwrap();
        assert!(report.line_holds());
        for (k, expected, actual, _) in &report.line_rows {
            assert!(expected.is_zero(), "k={k}");
            assert!(actual.is_zero(), "k={k}");
        }
        match &report.tail {
            TailCheck::Nearest { r, .. } => assert!(r.is_some()),
            TailCheck::Floor { .. } => panic!("nearest rule expected"),
        }
    }

    #[test]
    fn closed_form_check_linear_trivial() {
        let f = TestFunction::linear(2, 1);
        for s in [1u32, 2, 3] {
            let report =
                closed_form_coefficient_check(&f, 16, s, &RoundingRule::HalfToEven).unwrap();
            assert!(report.line_holds());
            match report.tail {
                TailCheck::Nearest { r, residual } => {
                    assert_eq!(r, Some(0), "s={s}");
                    assert!(residual.is_zero());
                }
                TailCheck::Floor { .. } => panic!(),
            }
        }
        let floor_report =
            closed_form_coefficient_check(&f, 16, 2, &RoundingRule::Floor).unwrap();
        match floor_report.tail {
            TailCheck::Floor { holds, residual } => {
                assert!(holds);
                assert!(residual.is_zero());
            }
            TailCheck::Nearest { .. } => panic!(),
        }
    }

    #[test]
    fn closed_form_check_bump_endpoint_interpolation() {
        let f = TestFunction::catalog_get("x2(1-x)2").unwrap();
        let report = closed_form_coefficient_check(&f, 32, 1, &RoundingRule::HalfUp).unwrap();
        // Only k=0: rounding interpolates at the endpoint, b(0) = f(0) = 0.
        assert_eq!(report.line_rows.len(), 1);
        assert!(report.line_rows[0].3);
        assert!(report.line_rows[0].2.is_zero());
    }

    #[test]
    fn closed_form_check_rejects_bad_hypotheses() {
        let f = TestFunction::catalog_get("x2").unwrap();
        // f''(0) = 2 != 0 breaks the vanishing clause at s=2.
        assert!(matches!(
            closed_form_coefficient_check(&f, 16, 2, &RoundingRule::HalfToEven),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn lemma_lm_examples() {
        assert!(lemma_lm_check(
            &rat(5, 2),
            &BigInt::from(2),
            &rat(1, 2),
            &RoundingRule::HalfUp
        )
        .unwrap());
        assert!(lemma_lm_check(&rat_int(3), &BigInt::from(3), &rat_int(0), &RoundingRule::HalfDown)
            .unwrap());
        assert!(matches!(
            lemma_lm_check(&rat(5, 2), &BigInt::from(2), &rat(1, 4), &RoundingRule::HalfUp),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            lemma_lm_check(&rat(5, 2), &BigInt::from(2), &rat(1, 2), &RoundingRule::Floor),
            Err(Error::Domain(_))
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn floor_brackets_the_value(num in -100_000i64..100_000, den in 1i64..1000) {
                let a = rat(num, den);
                let fl = Rational::from_integer(round_value(&a, &RoundingRule::Floor));
                prop_assert!(fl <= a);
                prop_assert!(a < fl + Rational::one());
            }

            #[test]
            fn nearest_rules_stay_within_half(num in -100_000i64..100_000, den in 1i64..1000) {
                let a = rat(num, den);
                for rule in RoundingRule::deterministic_rules() {
                    if rule.is_floor() {
                        continue;
                    }
                    let r = Rational::from_integer(round_value(&a, &rule));
                    prop_assert!((r - &a).abs() <= rat(1, 2), "{rule}");
                }
                let r = Rational::from_integer(round_value(&a, &RoundingRule::half_random(1)));
                prop_assert!((r - &a).abs() <= rat(1, 2));
            }

            #[test]
            fn half_up_dominates_half_down(num in -100_000i64..100_000, den in 1i64..1000) {
                let a = rat(num, den);
                let up = round_value(&a, &RoundingRule::HalfUp);
                let down = round_value(&a, &RoundingRule::HalfDown);
                prop_assert!(down <= up);
                prop_assert!(&up - &down <= BigInt::one());
            }
        }
    }

    #[test]
    fn hp_mode_flags_ambiguous_tie() {
        // x^2 at n=2 has the raw value 1/2 at k=1: exactly on a half-integer,
        // which the high-precision path must refuse to decide.
        let f = TestFunction::catalog_get("x2").unwrap();
        let result = coefficients_with_mode(
            &f,
            2,
            &RoundingRule::HalfToEven,
            CoefficientMode::HighPrecision(64),
        );
        assert!(matches!(result, Err(Error::AmbiguousTie { n: 2, k: 1, .. })));
        // Off ties the two modes agree.
        let g = TestFunction::catalog_get("x3(1-x)3").unwrap();
        let exact = coefficients(&g, 7, &RoundingRule::HalfToEven).unwrap();
        let hp = coefficients_with_mode(
            &g,
            7,
            &RoundingRule::HalfToEven,
            CoefficientMode::HighPrecision(64),
        )
        .unwrap();
        assert_eq!(exact.raw, hp.raw);
        // The floor rule's discontinuities are the integers instead.
        let result = coefficients_with_mode(
            &f,
            2,
            &RoundingRule::Floor,
            CoefficientMode::HighPrecision(64),
        );
        assert!(matches!(result, Err(Error::AmbiguousTie { .. })));
    }
}
