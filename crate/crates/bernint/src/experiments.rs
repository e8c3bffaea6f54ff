//! Desk-scale reproduction of the direct error estimates: sup-norm error
//! grids, theoretical bound assembly, convergence-rate sweeps, hypothesis
//! checking, deviation bounds, and necessity probes.
//!
//! Sup-norm errors are computed in exact rational arithmetic on endpoint-
//! densified grids (all the integer-rounding error mass sits within s/n of
//! the endpoints); only the bound values involve high-precision reals,
//! through the varying-step modulus.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::bernstein::{sample_values, SampledDerivative};
use crate::error::{Error, Result};
use crate::functions::TestFunction;
use crate::integer::{coefficients, RoundingRule};
use crate::moduli::{omega1, omega2_phi_real};
use crate::numeric::{rat, HighPrecisionReal, Rational};

/// Which operator a sweep exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Operator {
    /// The classical operator.
    Bn,
    /// The floor-coefficient (Kantorovich) variant.
    Btilde,
    /// The nearest-coefficient variant; pairs with a non-floor rule.
    Bhat,
}

impl Operator {
    pub fn parse(text: &str) -> Result<Operator> {
        match text {
            "bn" => Ok(Operator::Bn),
            "btilde" => Ok(Operator::Btilde),
            "bhat" => Ok(Operator::Bhat),
            _ => Err(Error::domain(format!("unknown operator: {text:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Operator::Bn => "bn",
            Operator::Btilde => "btilde",
            Operator::Bhat => "bhat",
        }
    }

    /// Checks the operator/rule pairing and returns the normalized
    /// coefficient sequence of the operator at degree n.
    fn coefficient_values(&self, f: &TestFunction, n: u32, rule: &RoundingRule) -> Result<Vec<Rational>> {
        match self {
            Operator::Bn => Ok(sample_values(f, n)),
            Operator::Btilde => {
                if !rule.is_floor() {
                    return Err(Error::domain(format!(
                        "operator btilde uses the floor rule, got {rule}"
                    )));
                }
                Ok(coefficients(f, n, rule)?.normalized)
            }
            Operator::Bhat => {
                if rule.is_floor() {
                    return Err(Error::domain(
                        "operator bhat needs a nearest-integer rule, got floor",
                    ));
                }
                Ok(coefficients(f, n, rule)?.normalized)
            }
        }
    }
}

/// The bracketed quantity of a named estimate, assembled with constant 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    /// Classical value estimate: omega_phi^2(f, n^{-1/2}).
    Value,
    /// Floor-variant value estimate: omega_phi^2 + 1/n.
    FloorValue,
    /// Nearest-variant value estimate: omega_phi^2 + 1/(2n).
    NearestValue,
    /// Classical derivative estimate: omega_phi^2(f^(s), n^{-1/2}) +
    /// omega_1(f^(s), 1/n), plus ||f^(s)||/n for s >= 2.
    Derivative,
    /// Floor-variant derivative estimate: Derivative + 1/n.
    FloorDerivative,
    /// Nearest-variant derivative estimate: Derivative + 1/n.
    NearestDerivative,
    /// Deviation of the floor variant from the classical operator:
    /// omega_1(f^(s), 1/n) + 1/n.
    FloorDeviation,
    /// Deviation of the nearest variant from the classical operator.
    NearestDeviation,
}

impl BoundKind {
    fn wants_derivative_order(&self) -> bool {
        !matches!(
            self,
            BoundKind::Value | BoundKind::FloorValue | BoundKind::NearestValue
        )
    }

    /// The bound a sweep of this operator is measured against.
    pub fn for_operator(op: Operator, s: u32) -> BoundKind {
        match (op, s) {
            (Operator::Bn, 0) => BoundKind::Value,
            (Operator::Btilde, 0) => BoundKind::FloorValue,
            (Operator::Bhat, 0) => BoundKind::NearestValue,
            (Operator::Bn, _) => BoundKind::Derivative,
            (Operator::Btilde, _) => BoundKind::FloorDerivative,
            (Operator::Bhat, _) => BoundKind::NearestDerivative,
        }
    }
}

/// Evaluation grid for sup-norm errors: a uniform (m+1)-point grid densified
/// eightfold within 4s/n of each endpoint.
pub fn sup_grid(m: u32, n: u32, s: u32) -> Vec<Rational> {
    let mut points: Vec<Rational> = (0..=m).map(|i| rat(i as i64, m as i64)).collect();
    if s > 0 {
        let dense = 8 * m;
        let edge = rat(4 * s as i64, n as i64).min(Rational::one());
        let cutoff = &edge * rat(dense as i64, 1);
        let limit = crate::numeric::floor_int(&cutoff)
            .to_u32()
            .unwrap_or(dense)
            .min(dense);
        for j in 0..=limit {
            points.push(rat(j as i64, dense as i64));
            points.push(rat((dense - j) as i64, dense as i64));
        }
        points.sort();
        points.dedup();
    }
    points
}

/// Largest |f^(s)(x)| over the sup grid, exact.
fn grid_sup_abs(f: &TestFunction, grid: &[Rational]) -> Rational {
    grid.par_iter()
        .map(|x| f.eval(x).abs())
        .reduce(Rational::zero, |a, b| if a >= b { a } else { b })
}

/// Sup-norm error of the operator's s-th derivative against f^(s) over the
/// endpoint-densified grid. Exact.
pub fn sup_error(
    f: &TestFunction,
    op: Operator,
    n: u32,
    s: u32,
    rule: &RoundingRule,
    m: u32,
) -> Result<Rational> {
    if s > n {
        return Err(Error::Degree { n, s });
    }
    let values = op.coefficient_values(f, n, rule)?;
    let deriv = SampledDerivative::new(&values, s)?;
    let target = f.deriv(s)?;
    let grid = sup_grid(m, n, s);
    Ok(grid
        .par_iter()
        .map(|x| (deriv.eval(x) - target.eval(x)).abs())
        .reduce(Rational::zero, |a, b| if a >= b { a } else { b }))
}

/// The named estimate's right-hand side with constant 1; the empirical
/// constant is estimated downstream as the max error/bound ratio.
pub fn bound_value(
    f: &TestFunction,
    kind: BoundKind,
    n: u32,
    s: u32,
    m: u32,
    h_steps: u32,
    digits: u32,
) -> Result<HighPrecisionReal> {
    if n == 0 {
        return Err(Error::domain("bound_value: n must be at least 1"));
    }
    if kind.wants_derivative_order() {
        if s == 0 {
            return Err(Error::domain(format!(
                "bound kind {kind:?} needs a derivative order s >= 1"
            )));
        }
    } else if s != 0 {
        return Err(Error::domain(format!(
            "bound kind {kind:?} is a value estimate; s must be 0"
        )));
    }
    let target = f.deriv(s)?;
    let inv_n = rat(1, n as i64);
    // Step n^{-1/2} for the varying-step modulus.
    let t = HighPrecisionReal::from_rational(inv_n.clone(), digits).sqrt()?;
    let omega2 = omega2_phi_real(&target, &t, m, h_steps)?
        .value
        .to_hp(digits);
    let lift = |r: &Rational| HighPrecisionReal::from_rational(r.clone(), digits);

    let value = match kind {
        BoundKind::Value => omega2,
        BoundKind::FloorValue => &omega2 + &lift(&inv_n),
        BoundKind::NearestValue => &omega2 + &lift(&rat(1, 2 * n as i64)),
        BoundKind::Derivative | BoundKind::FloorDerivative | BoundKind::NearestDerivative => {
            let omega_1 = omega1(&target, &inv_n, m)?;
            let mut acc = &omega2 + &lift(omega_1.value.as_rational());
            if s >= 2 {
                let norm = grid_sup_abs(&target, &sup_grid(m, n, s));
                acc = &acc + &lift(&(norm * &inv_n));
            }
            if !matches!(kind, BoundKind::Derivative) {
                acc = &acc + &lift(&inv_n);
            }
            acc
        }
        BoundKind::FloorDeviation | BoundKind::NearestDeviation => {
            let omega_1 = omega1(&target, &inv_n, m)?;
            lift(&(omega_1.value.as_rational() + &inv_n))
        }
    };
    Ok(value)
}

/// One row of a rate sweep.
#[derive(Clone, Debug)]
pub struct RateRow {
    pub n: u32,
    /// Exact sup-norm error.
    pub sup_error: Rational,
    pub bound: HighPrecisionReal,
    /// sup_error / bound; absent when the bound is zero.
    pub ratio: Option<HighPrecisionReal>,
}

/// Per-n errors, bound values, and ratios for one (function, operator, s,
/// rule) configuration, with the fitted log-log convergence slope.
#[derive(Clone, Debug)]
pub struct RateReport {
    pub operator: String,
    pub function: String,
    pub s: u32,
    pub rule: String,
    pub rows: Vec<RateRow>,
    /// Least-squares slope of log sup_error against log n over rows with
    /// n >= 16 and nonzero error; absent with fewer than two such rows.
    pub slope: Option<f64>,
    /// True when every row's error is exactly zero (preserved functions).
    pub exact_preservation: bool,
    pub warnings: Vec<String>,
}

/// Runs the error sweep against the operator's own bound. A hypothesis
/// failure for the floor variant is recorded as a warning and the sweep
/// still runs, to observe the divergence.
#[allow(clippy::too_many_arguments)]
pub fn rate_sweep(
    f: &TestFunction,
    op: Operator,
    s: u32,
    rule: &RoundingRule,
    n_list: &[u32],
    m: u32,
    h_steps: u32,
    digits: u32,
) -> Result<RateReport> {
    let mut ns: Vec<u32> = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut warnings = Vec::new();
    if op == Operator::Btilde && s >= 1 {
        let hypotheses = check_hypotheses(f, s, &ns)?;
        if !hypotheses.satisfied_with_inequalities() {
            warnings.push(format!(
                "hypotheses for the floor variant fail for {} at s={s}; divergence expected",
                f.id()
            ));
        }
    }
    let kind = BoundKind::for_operator(op, s);
    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        let sup = sup_error(f, op, n, s, rule, m)?;
        let bound = bound_value(f, kind, n, s, m, h_steps, digits)?;
        let ratio = if bound.is_zero() {
            None
        } else {
            Some(&HighPrecisionReal::from_rational(sup.clone(), digits) / &bound)
        };
        rows.push(RateRow {
            n,
            sup_error: sup,
            bound,
            ratio,
        });
    }
    let slope = fit_slope(&rows);
    let exact_preservation = rows.iter().all(|r| r.sup_error.is_zero());
    Ok(RateReport {
        operator: op.name().to_string(),
        function: f.id().to_string(),
        s,
        rule: rule.to_string(),
        rows,
        slope,
        exact_preservation,
        warnings,
    })
}

/// Least-squares slope of (log n, log sup_error), n >= 16 rows only to
/// suppress preasymptotic noise.
fn fit_slope(rows: &[RateRow]) -> Option<f64> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.n >= 16 && !r.sup_error.is_zero())
        .map(|r| {
            let x = (r.n as f64).ln();
            let y = r.sup_error.to_f64().unwrap_or(f64::NAN).ln();
            (x, y)
        })
        .collect();
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let var: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    if var == 0.0 {
        return None;
    }
    Some(cov / var)
}

/// Endpoint-inequality status at one degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InequalityRow {
    pub n: u32,
    /// f(k/n) >= f(0) + (k/n) f'(0) for k = 1..=s.
    pub lower_ok: bool,
    /// f(k/n) >= f(1) - (1-k/n) f'(1) for k = n-s..=n-1.
    pub upper_ok: bool,
}

/// Hypothesis audit for the direct estimates: endpoint integrality, vanishing
/// higher derivatives, and the discrete tangent-line inequalities with the
/// first degree from which they hold onward.
#[derive(Clone, Debug)]
pub struct HypothesisReport {
    pub s: u32,
    pub f0_integer: bool,
    pub f1_integer: bool,
    pub df0_integer: bool,
    pub df1_integer: bool,
    /// (order, vanishes at 0, vanishes at 1) for orders 2..=s.
    pub vanishing: Vec<(u32, bool, bool)>,
    pub rows: Vec<InequalityRow>,
    /// Smallest checked n from which both inequality families hold through
    /// the end of the range; None when even the largest n fails.
    pub n0: Option<u32>,
}

impl HypothesisReport {
    pub fn endpoints_integer(&self) -> bool {
        self.f0_integer && self.f1_integer && self.df0_integer && self.df1_integer
    }

    pub fn vanishing_ok(&self) -> bool {
        self.vanishing.iter().all(|(_, a, b)| *a && *b)
    }

    /// Hypotheses of the nearest-variant estimate (no inequalities needed).
    pub fn satisfied(&self) -> bool {
        self.endpoints_integer() && self.vanishing_ok()
    }

    /// Hypotheses of the floor-variant estimate.
    pub fn satisfied_with_inequalities(&self) -> bool {
        self.satisfied() && self.n0.is_some()
    }
}

/// Evaluates every hypothesis flag exactly over the given degrees.
pub fn check_hypotheses(f: &TestFunction, s: u32, n_range: &[u32]) -> Result<HypothesisReport> {
    let profile = f.endpoint_profile(s)?;
    let vanishing: Vec<(u32, bool, bool)> = (2..=s)
        .map(|i| {
            let idx = (i - 2) as usize;
            (
                i,
                profile.higher_at_0[idx].is_zero(),
                profile.higher_at_1[idx].is_zero(),
            )
        })
        .collect();
    let mut ns: Vec<u32> = n_range.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        if n == 0 {
            return Err(Error::domain("check_hypotheses: n must be positive"));
        }
        let mut lower_ok = true;
        for k in 1..=s.min(n) {
            let x = rat(k as i64, n as i64);
            let tangent = &profile.f0 + &x * &profile.df0;
            if f.eval(&x) < tangent {
                lower_ok = false;
                break;
            }
        }
        let mut upper_ok = true;
        for k in n.saturating_sub(s)..n {
            let x = rat(k as i64, n as i64);
            let tangent = &profile.f1 - (Rational::one() - &x) * &profile.df1;
            if f.eval(&x) < tangent {
                upper_ok = false;
                break;
            }
        }
        rows.push(InequalityRow { n, lower_ok, upper_ok });
    }
    // Smallest n whose suffix of the range passes both families.
    let mut n0 = None;
    for row in rows.iter().rev() {
        if row.lower_ok && row.upper_ok {
            n0 = Some(row.n);
        } else {
            break;
        }
    }
    Ok(HypothesisReport {
        s,
        f0_integer: profile.f0.is_integer(),
        f1_integer: profile.f1.is_integer(),
        df0_integer: profile.df0.is_integer(),
        df1_integer: profile.df1.is_integer(),
        vanishing,
        rows,
        n0,
    })
}

/// Deviation of an integer variant's s-th derivative from the classical
/// operator's, against the crude rounding majorant and the modulus bound.
#[derive(Clone, Debug)]
pub struct DeviationReport {
    pub n: u32,
    pub s: u32,
    /// Exact sup over the grid of |(B_n f)^(s) - (variant f)^(s)|.
    pub sup_deviation: Rational,
    /// 2^s n^s max_k |f(k/n) - b_n(k)|, exact.
    pub majorant: Rational,
    /// sup_deviation <= majorant (holds pointwise since the sup is the max).
    pub holds: bool,
    /// omega_1(f^(s), 1/n) + 1/n, exact.
    pub modulus_reference: Rational,
    /// sup_deviation / modulus_reference.
    pub ratio: Option<Rational>,
}

/// Computes the deviation sup, its rounding majorant, and the modulus
/// reference. The respective theorem's hypotheses are enforced: endpoint
/// integrality and vanishing always, the tangent-line inequalities at this n
/// for the floor variant.
pub fn deviation_check(
    f: &TestFunction,
    n: u32,
    s: u32,
    rule: &RoundingRule,
    m: u32,
) -> Result<DeviationReport> {
    if s == 0 || s > n {
        return Err(Error::domain(format!(
            "deviation_check: need 1 <= s <= n, got s={s}, n={n}"
        )));
    }
    let hypotheses = check_hypotheses(f, s, &[n])?;
    if !hypotheses.satisfied() {
        return Err(Error::hypothesis(format!(
            "{}: endpoint integrality or vanishing fails at s={s}",
            f.id()
        )));
    }
    if rule.is_floor() && hypotheses.n0.is_none() {
        return Err(Error::hypothesis(format!(
            "{}: tangent-line inequalities fail at n={n} for the floor variant",
            f.id()
        )));
    }
    let classical = sample_values(f, n);
    let ints = coefficients(f, n, rule)?;
    let max_defect = classical
        .iter()
        .zip(&ints.normalized)
        .map(|(a, b)| (a - b).abs())
        .max()
        .unwrap_or_else(Rational::zero);
    let majorant =
        Rational::from_integer(BigInt::from(2).pow(s) * BigInt::from(n).pow(s)) * max_defect;

    let classical_deriv = SampledDerivative::new(&classical, s)?;
    let variant_deriv = SampledDerivative::new(&ints.normalized, s)?;
    let grid = sup_grid(m, n, s);
    let sup_deviation = grid
        .par_iter()
        .map(|x| (classical_deriv.eval(x) - variant_deriv.eval(x)).abs())
        .reduce(Rational::zero, |a, b| if a >= b { a } else { b });

    let target = f.deriv(s)?;
    let inv_n = rat(1, n as i64);
    let omega_ref = omega1(&target, &inv_n, m)?.value.as_rational() + &inv_n;
    let ratio = if omega_ref.is_zero() {
        None
    } else {
        Some(&sup_deviation / &omega_ref)
    };
    Ok(DeviationReport {
        n,
        s,
        holds: sup_deviation <= majorant,
        sup_deviation,
        majorant,
        modulus_reference: omega_ref,
        ratio,
    })
}

/// One degree of a necessity probe, with the endpoint trace that the
/// necessity arguments read off.
#[derive(Clone, Debug)]
pub struct NecessityRow {
    pub n: u32,
    pub sup_error: Rational,
    /// (operator f)^(s)(0), exact.
    pub operator_at_zero: Rational,
    /// f^(s)(0), exact.
    pub target_at_zero: Rational,
}

/// Outcome of probing a hypothesis violation: per-n errors and whether the
/// minimum stays above the caller's threshold.
#[derive(Clone, Debug)]
pub struct NecessityReport {
    pub operator: String,
    pub function: String,
    pub s: u32,
    pub rule: String,
    pub rows: Vec<NecessityRow>,
    pub min_sup_error: Rational,
    pub threshold: Rational,
    pub non_convergent: bool,
}

/// Sweeps the s-th derivative error of the operator for a function that
/// (typically) violates exactly one hypothesis, flagging NON-CONVERGENT when
/// the smallest observed error still exceeds the threshold.
#[allow(clippy::too_many_arguments)]
pub fn necessity_probe(
    f: &TestFunction,
    s: u32,
    op: Operator,
    rule: &RoundingRule,
    n_list: &[u32],
    m: u32,
    threshold: &Rational,
) -> Result<NecessityReport> {
    let mut ns: Vec<u32> = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns.is_empty() {
        return Err(Error::domain("necessity_probe: empty degree list"));
    }
    let target = f.deriv(s)?;
    let target_at_zero = target.eval(&Rational::zero());
    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        let values = op.coefficient_values(f, n, rule)?;
        let deriv = SampledDerivative::new(&values, s)?;
        let operator_at_zero = deriv.eval(&Rational::zero());
        let sup = sup_error(f, op, n, s, rule, m)?;
        rows.push(NecessityRow {
            n,
            sup_error: sup,
            operator_at_zero,
            target_at_zero: target_at_zero.clone(),
        });
    }
    let min_sup_error = rows
        .iter()
        .map(|r| r.sup_error.clone())
        .min()
        .expect("nonempty rows");
    let non_convergent = &min_sup_error > threshold;
    Ok(NecessityReport {
        operator: op.name().to_string(),
        function: f.id().to_string(),
        s,
        rule: rule.to_string(),
        rows,
        min_sup_error,
        threshold: threshold.clone(),
        non_convergent,
    })
}
