//! Grid estimators for the ordinary modulus of continuity and the
//! second-order modulus with the varying step h·sqrt(x(1-x)).
//!
//! Both estimators take the sup over a finite grid, so they are lower bounds
//! of the true moduli, converging from below as the grid is refined. The
//! first-order modulus stays entirely in exact rational arithmetic (a
//! sliding-window max/min over the sampled values); the varying-step modulus
//! needs the square-root weight and is carried in high-precision reals.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functions::TestFunction;
use crate::numeric::{rat, HighPrecisionReal, Rational};

/// A modulus value: exact when the whole computation stayed rational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModulusValue {
    Exact(Rational),
    Approx(HighPrecisionReal),
}

impl ModulusValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            ModulusValue::Exact(r) => num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN),
            ModulusValue::Approx(h) => h.to_f64(),
        }
    }

    /// The underlying rational (the exact value, or the high-precision
    /// approximation's representation).
    pub fn as_rational(&self) -> &Rational {
        match self {
            ModulusValue::Exact(r) => r,
            ModulusValue::Approx(h) => h.as_rational(),
        }
    }

    pub fn to_hp(&self, digits: u32) -> HighPrecisionReal {
        match self {
            ModulusValue::Exact(r) => HighPrecisionReal::from_rational(r.clone(), digits),
            ModulusValue::Approx(h) => h.clone(),
        }
    }
}

/// A grid estimate of a modulus of smoothness at step t. `value` is a sup
/// over finitely many admissible pairs, hence a lower estimate of the true
/// modulus; it grows toward it as `grid` (and `h_steps`) grow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModulusEstimate {
    pub t: ModulusValue,
    pub value: ModulusValue,
    /// Grid density: the interval is sampled at multiples of 1/grid.
    pub grid: u32,
    /// Number of step values tried (varying-step modulus only).
    pub h_steps: Option<u32>,
}

/// Ratio of successive step candidates in the varying-step modulus ladder.
/// Exact rational so that step sets along a geometric family of t values are
/// literally nested.
fn step_ratio() -> Rational {
    rat(7, 8)
}

/// First-order modulus of continuity on a uniform grid:
/// sup of |F(x)-F(y)| over grid points with |x-y| <= t. Exact.
pub fn omega1(f: &TestFunction, t: &Rational, m: u32) -> Result<ModulusEstimate> {
    if !t.is_positive() || t > &Rational::one() {
        return Err(Error::domain(format!("omega1: t={t} outside (0,1]")));
    }
    if m < 64 {
        return Err(Error::domain(format!("omega1: grid M={m} below 64")));
    }
    let values: Vec<Rational> = (0..=m)
        .map(|i| f.eval(&rat(i as i64, m as i64)))
        .collect();
    // |i-j| <= t*M with integer indices means |i-j| <= floor(t*M).
    let window = crate::numeric::floor_int(&(t * rat(m as i64, 1)));
    let window: usize = num_traits::ToPrimitive::to_usize(&window).unwrap_or(m as usize);
    let window = window.min(m as usize);
    let sup = max_window_spread(&values, window);
    Ok(ModulusEstimate {
        t: ModulusValue::Exact(t.clone()),
        value: ModulusValue::Exact(sup),
        grid: m,
        h_steps: None,
    })
}

/// Largest max-min spread over any index window of width `window`,
/// via monotonic deques in O(n).
fn max_window_spread(values: &[Rational], window: usize) -> Rational {
    if window == 0 {
        return Rational::zero();
    }
    let mut best = Rational::zero();
    let mut max_idx: std::collections::VecDeque<usize> = Default::default();
    let mut min_idx: std::collections::VecDeque<usize> = Default::default();
    for (i, v) in values.iter().enumerate() {
        while max_idx.front().is_some_and(|&j| i - j > window) {
            max_idx.pop_front();
        }
        while min_idx.front().is_some_and(|&j| i - j > window) {
            min_idx.pop_front();
        }
        while max_idx.back().is_some_and(|&j| values[j] <= *v) {
            max_idx.pop_back();
        }
        while min_idx.back().is_some_and(|&j| values[j] >= *v) {
            min_idx.pop_back();
        }
        max_idx.push_back(i);
        min_idx.push_back(i);
        let spread = &values[*max_idx.front().unwrap()] - &values[*min_idx.front().unwrap()];
        if spread > best {
            best = spread;
        }
    }
    best
}

/// Second-order modulus with the varying step h·sqrt(x(1-x)), rational t.
pub fn omega2_phi(
    f: &TestFunction,
    t: &Rational,
    m: u32,
    h_steps: u32,
    digits: u32,
) -> Result<ModulusEstimate> {
    if !t.is_positive() || t > &Rational::one() {
        return Err(Error::domain(format!("omega2_phi: t={t} outside (0,1]")));
    }
    omega2_phi_real(f, &HighPrecisionReal::from_rational(t.clone(), digits), m, h_steps)
}

/// Second-order varying-step modulus at a (possibly irrational) step bound:
/// sup over the step ladder h = t·(7/8)^j, j < h_steps, and all grid points x
/// with x ± h·sqrt(x(1-x)) inside [0,1], of the symmetric second difference
/// |f(x - h·phi(x)) - 2 f(x) + f(x + h·phi(x))|.
///
/// The displaced points are carried over one fixed denominator D = M·10^g
/// (the offset h·phi(x) is rounded to the absolute scale 10^-g, with g the
/// working digit count), so the inner loop is pure integer arithmetic with a
/// single reduction at the end.
pub fn omega2_phi_real(
    f: &TestFunction,
    t: &HighPrecisionReal,
    m: u32,
    h_steps: u32,
) -> Result<ModulusEstimate> {
    if !t.as_rational().is_positive() {
        return Err(Error::domain("omega2_phi: t must be positive"));
    }
    if m < 64 {
        return Err(Error::domain(format!("omega2_phi: grid M={m} below 64")));
    }
    if h_steps == 0 {
        return Err(Error::domain("omega2_phi: need at least one step value"));
    }
    let digits = t.digits();
    let ratio = step_ratio();
    let scale = BigInt::from(10u32).pow(digits + 8);
    let scale_rat = Rational::from_integer(scale.clone());
    // Pre-scaled ladder h_j * 10^g, exact so that ladders for t and (7/8)t
    // share their common elements literally.
    let mut steps = Vec::with_capacity(h_steps as usize);
    let mut h = t.as_rational().clone();
    for _ in 0..h_steps {
        steps.push(&h * &scale_rat);
        h *= &ratio;
    }

    let den = BigInt::from(m) * &scale; // common denominator D of all points
    let evaluator = f.scaled_evaluator(&den);
    let eval_den = evaluator.denominator().clone();

    // The endpoints have phi = 0, so the second difference vanishes there.
    let sup_num = (1..m)
        .into_par_iter()
        .map(|i| {
            let x = rat(i as i64, m as i64);
            let x_hp = HighPrecisionReal::from_rational(&x * (Rational::one() - &x), digits);
            let weight = x_hp.sqrt().expect("x(1-x) >= 0");
            // 2 f(x) over the evaluator's denominator, exactly.
            let fx = f.eval(&x);
            let fx2_num = BigInt::from(2) * fx.numer() * (&eval_den / fx.denom());
            let x_num = BigInt::from(i) * &scale;
            let mut local = BigInt::zero();
            for h_scaled in &steps {
                // offset numerator over D: round(h * phi * 10^g) * M.
                let c = crate::numeric::round_half_even_rat(&(h_scaled * weight.as_rational()));
                let offset_num = c * m;
                let lo = &x_num - &offset_num;
                let hi = &x_num + &offset_num;
                if lo.is_negative() || hi > den {
                    continue;
                }
                let second =
                    evaluator.numerator(&hi) + evaluator.numerator(&lo) - &fx2_num;
                let mag = second.abs();
                if mag > local {
                    local = mag;
                }
            }
            local
        })
        .reduce(BigInt::zero, |a, b| if a >= b { a } else { b });

    let sup = HighPrecisionReal::from_rational(Rational::new(sup_num, eval_den), digits);
    Ok(ModulusEstimate {
        t: ModulusValue::Approx(t.clone()),
        value: ModulusValue::Approx(sup),
        grid: m,
        h_steps: Some(h_steps),
    })
}

/// Refinement mode: doubles the grid and step count until the estimate moves
/// by less than one part in a thousand, returning the last refinement.
pub fn omega2_phi_refined(f: &TestFunction, t: &Rational, digits: u32) -> Result<ModulusEstimate> {
    let mut m = 1024;
    let mut h_steps = 32;
    let mut prev = omega2_phi(f, t, m, h_steps, digits)?;
    for _ in 0..6 {
        m *= 2;
        h_steps = (h_steps * 2).min(256);
        let next = omega2_phi(f, t, m, h_steps, digits)?;
        let prev_v = prev.value.to_f64();
        let next_v = next.value.to_f64();
        prev = next;
        if next_v == 0.0 && prev_v == 0.0 {
            break;
        }
        if next_v > 0.0 && ((next_v - prev_v.min(next_v)) / next_v).abs() < 1e-3 {
            break;
        }
    }
    Ok(prev)
}
