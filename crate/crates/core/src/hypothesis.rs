//! Exact exponent arithmetic for the hypotheses of the existence,
//! well-posedness and uniqueness statements.
//!
//! Everything is computed in arbitrary-precision rationals. Lebesgue
//! exponents are stored by their reciprocal so `∞` is the exact value `0`.
//! Two different quantities are both called δ in the literature: the decay
//! power in the lower bound on `F` is `δ_F`, the weight power of the
//! weighted Strichartz estimate is `δ_q`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::model::PotentialModel;

pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HypothesisError {
    #[error("cannot parse {0:?} as an exact number")]
    Parse(String),
    #[error("dimension must be at least 1, got {0}")]
    Dimension(u32),
    #[error("order s must lie in (0, 1), got {0}")]
    Order(Rational),
    #[error("power ℓ must be positive, got {0}")]
    Power(Rational),
    #[error("integrability exponent {name} must lie in (1, ∞], got {value}")]
    Exponent { name: &'static str, value: String },
    #[error("{0} needs n ≥ 2")]
    NeedsPlane(&'static str),
    #[error("out of scope: {0}")]
    OutOfScope(String),
    #[error("no admissible r: 1/r = {0}")]
    NoAdmissibleR(Rational),
}

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn int(n: u32) -> Rational {
    Rational::from_integer(n.into())
}

/// Exact decimal, fraction or scientific notation: `0.8`, `9/14`, `-3`,
/// `1e-3`, `2.5E2`.
pub fn parse_rational(text: &str) -> Result<Rational, HypothesisError> {
    let err = || HypothesisError::Parse(text.to_string());
    let t = text.trim();
    if t.is_empty() {
        return Err(err());
    }
    if t.contains('/') {
        let r = Rational::from_str(t).map_err(|_| err())?;
        return Ok(r);
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = match digits.split_once('.') {
        Some((w, f)) => (w, f),
        None => (digits, ""),
    };
    if whole.is_empty() && frac.is_empty()
        || !whole
            .chars()
            .chain(frac.chars())
            .all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    let numer = BigInt::from_str(&format!("{whole}{frac}0")).map_err(|_| err())? / 10;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rational::from_integer(numer);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if negative { -value } else { value })
}

/// A Lebesgue exponent in `[1, ∞]`, stored as its reciprocal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Exponent {
    recip: Rational,
}

impl Exponent {
    pub fn infinity() -> Self {
        Self {
            recip: Rational::zero(),
        }
    }

    pub fn finite(value: Rational) -> Self {
        assert!(value.is_positive(), "exponent must be positive");
        Self {
            recip: value.recip(),
        }
    }

    pub fn from_recip(recip: Rational) -> Self {
        assert!(
            !recip.is_negative(),
            "reciprocal exponent must be non-negative"
        );
        Self { recip }
    }

    /// `inf`, `∞` or an exact number.
    pub fn parse(text: &str) -> Result<Self, HypothesisError> {
        let t = text.trim();
        if matches!(t, "inf" | "infinity" | "∞") {
            return Ok(Self::infinity());
        }
        let v = parse_rational(t)?;
        if !v.is_positive() {
            return Err(HypothesisError::Parse(text.to_string()));
        }
        Ok(Self::finite(v))
    }

    pub fn recip(&self) -> &Rational {
        &self.recip
    }

    pub fn is_infinite(&self) -> bool {
        self.recip.is_zero()
    }

    pub fn value(&self) -> Option<Rational> {
        (!self.is_infinite()).then(|| self.recip.recip())
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        other.recip.cmp(&self.recip)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("∞"),
        }
    }
}

/// A rational or `+∞`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Extended {
    Finite(Rational),
    Infinity,
}

impl Extended {
    fn exceeds(&self, x: &Rational) -> bool {
        match self {
            Extended::Finite(v) => x < v,
            Extended::Infinity => true,
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::Infinity => f.write_str("∞"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterSet {
    pub n: u32,
    pub s: Rational,
    pub ell: Rational,
    /// Integrability of `V` near the origin and at infinity.
    pub p1: Option<Exponent>,
    pub p2: Option<Exponent>,
    /// Integrability of `a` and `b` near the origin and at infinity.
    pub q1: Option<Exponent>,
    pub q2: Option<Exponent>,
    pub radial: bool,
    pub a_bounded: bool,
    pub b_bounded: bool,
    pub v_bounded: bool,
    /// Exponents of the lower bound `F(x, |z|) ≥ κ|x|^{-δ_F}|z|^{2+β}`.
    pub beta: Option<Rational>,
    pub delta_f: Option<Rational>,
    /// Superquadratic growth exponent of `F`.
    pub sigma: Option<Rational>,
    /// User assertion that `∫_{|x|>1} V|x|^{-(n-2s)} dx < ∞`.
    pub tail_integral_declared: bool,
}

impl ParameterSet {
    pub fn new(n: u32, s: Rational, ell: Rational) -> Result<Self, HypothesisError> {
        let p = Self {
            n,
            s,
            ell,
            p1: None,
            p2: None,
            q1: None,
            q2: None,
            radial: false,
            a_bounded: false,
            b_bounded: false,
            v_bounded: false,
            beta: None,
            delta_f: None,
            sigma: None,
            tail_integral_declared: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), HypothesisError> {
        check_basic(self.n, &self.s, &self.ell)?;
        for (name, e) in [
            ("p₁", &self.p1),
            ("p₂", &self.p2),
            ("q₁", &self.q1),
            ("q₂", &self.q2),
        ] {
            if let Some(e) = e {
                if e.recip() >= &Rational::one() {
                    return Err(HypothesisError::Exponent {
                        name,
                        value: e.to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

fn check_order(s: &Rational) -> Result<(), HypothesisError> {
    if !(s.is_positive() && s < &Rational::one()) {
        return Err(HypothesisError::Order(s.clone()));
    }
    Ok(())
}

fn check_basic(n: u32, s: &Rational, ell: &Rational) -> Result<(), HypothesisError> {
    if n == 0 {
        return Err(HypothesisError::Dimension(n));
    }
    check_order(s)?;
    if !ell.is_positive() {
        return Err(HypothesisError::Power(ell.clone()));
    }
    Ok(())
}

/// One inequality of a hypothesis, printed with its strictness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub label: String,
    pub holds: bool,
    pub detail: String,
}

impl Clause {
    fn new(label: impl Into<String>, holds: bool, detail: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            holds,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub statement: &'static str,
    pub applies: bool,
    pub branch: Option<String>,
    pub clauses: Vec<Clause>,
}

impl Verdict {
    fn from_clauses(statement: &'static str, branch: Option<String>, clauses: Vec<Clause>) -> Self {
        Self {
            statement,
            applies: clauses.iter().all(|c| c.holds),
            branch,
            clauses,
        }
    }

    pub fn failing(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| !c.holds)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalExponents {
    /// Sobolev exponent `2n/(n-2s)`, infinite when `n ≤ 2s`.
    pub s_star: Exponent,
    /// Mass-critical power `4s/n`.
    pub mass_critical: Rational,
    /// Upper power for orbital stability of the uniqueness class.
    pub ell0: Extended,
    /// Threshold for the integrability of `a, b` in the weak-solution
    /// theory; `None` when `ℓ ≥ s* - 2`.
    pub q0: Option<Exponent>,
}

pub fn critical_exponents(
    n: u32,
    s: &Rational,
    ell: &Rational,
) -> Result<CriticalExponents, HypothesisError> {
    check_basic(n, s, ell)?;
    let nn = int(n);
    let two = int(2);
    let gap = &nn - &two * s;
    let s_star = if gap.is_positive() {
        Exponent::from_recip(&gap / (&two * &nn))
    } else {
        Exponent::infinity()
    };
    let mass_critical = int(4) * s / &nn;
    let one = Rational::one();
    let ell0 = match n {
        1 => Extended::Infinity,
        2 => Extended::Finite((&two * s - &one) / (&two * s * (&one - s))),
        _ => Extended::Finite(&nn * (&two * s - &one) / (&gap * (&nn - &one))),
    };
    let q0 = if gap.is_positive() {
        let denom = &two * &nn - (ell + &two) * &gap;
        denom
            .is_positive()
            .then(|| Exponent::from_recip(denom / (&two * &nn)))
    } else {
        Some(Exponent::from_recip(one))
    };
    Ok(CriticalExponents {
        s_star,
        mass_critical,
        ell0,
        q0,
    })
}

fn exponent_clause(
    label: &str,
    declared: &Option<Exponent>,
    bounded: bool,
    lower: &Exponent,
    upper_inclusive: bool,
) -> Clause {
    let upper = if upper_inclusive { "≤ ∞" } else { "< ∞" };
    let label = format!("{lower} < {label} {upper}");
    if bounded {
        return Clause::new(label, true, "bounded");
    }
    match declared {
        None => Clause::new(label, false, "not declared"),
        Some(e) => {
            let holds = e > lower && (upper_inclusive || !e.is_infinite());
            Clause::new(label, holds, format!("declared {e}"))
        }
    }
}

fn lower_bound_clauses(p: &ParameterSet) -> Vec<Clause> {
    let nn = int(p.n);
    let mut out = Vec::new();
    match (&p.beta, &p.delta_f) {
        (Some(beta), Some(delta_f)) => {
            let balance = &nn * beta / int(2) + delta_f - int(2) * &p.s;
            out.push(Clause::new(
                "β > 0",
                beta.is_positive(),
                format!("β = {beta}"),
            ));
            out.push(Clause::new(
                "δ_F > 0",
                delta_f.is_positive(),
                format!("δ_F = {delta_f}"),
            ));
            out.push(Clause::new(
                "nβ/2 + δ_F - 2s < 0",
                balance.is_negative(),
                format!("nβ/2 + δ_F - 2s = {balance}"),
            ));
        }
        _ => out.push(Clause::new(
            "nβ/2 + δ_F - 2s < 0",
            false,
            "β, δ_F not declared",
        )),
    }
    out
}

fn growth_clause(p: &ParameterSet) -> Clause {
    match &p.sigma {
        Some(sigma) => Clause::new("σ > 0", sigma.is_positive(), format!("σ = {sigma}")),
        None => Clause::new("σ > 0", false, "σ not declared"),
    }
}

/// Existence of ground states for every mass (below the mass-critical
/// power) or for small mass (at it).
pub fn check_existence(p: &ParameterSet) -> Result<Verdict, HypothesisError> {
    p.validate()?;
    let crit = critical_exponents(p.n, &p.s, &p.ell)?;
    let nn = int(p.n);
    let mut clauses = Vec::new();
    let p_lower = Exponent::finite(&nn / (int(2) * &p.s));
    clauses.push(exponent_clause("p₁", &p.p1, p.v_bounded, &p_lower, false));
    clauses.push(exponent_clause("p₂", &p.p2, p.v_bounded, &p_lower, false));

    let branch = match p.ell.cmp(&crit.mass_critical) {
        Ordering::Less => {
            clauses.push(Clause::new(
                "0 < ℓ < 4s/n",
                true,
                format!("ℓ = {}, 4s/n = {}", p.ell, crit.mass_critical),
            ));
            let q_lower = Exponent::finite(int(2) * &nn / (int(4) * &p.s - &nn * &p.ell));
            clauses.push(exponent_clause("q₁", &p.q1, p.a_bounded, &q_lower, false));
            clauses.push(exponent_clause("q₂", &p.q2, p.a_bounded, &q_lower, false));
            "subcritical: every μ > 0"
        }
        Ordering::Equal => {
            clauses.push(Clause::new("ℓ = 4s/n", true, format!("ℓ = {}", p.ell)));
            clauses.push(Clause::new(
                "a ∈ L^∞",
                p.a_bounded,
                if p.a_bounded {
                    "bounded"
                } else {
                    "not declared bounded"
                },
            ));
            let (q_lower, label) = if p.n >= 2 {
                (
                    Exponent::finite(&nn * &nn / (int(4) * &p.s * &p.s)),
                    "n²/(4s²) < q₂ < ∞",
                )
            } else {
                (Exponent::finite(Rational::one()), "1 < q₂ < ∞")
            };
            let clause = match &p.q2 {
                None => Clause::new(label, false, "not declared"),
                Some(e) => Clause::new(
                    label,
                    e > &q_lower && !e.is_infinite(),
                    format!("declared {e}, bound {q_lower}"),
                ),
            };
            clauses.push(clause);
            "critical: sufficiently small μ"
        }
        Ordering::Greater => {
            clauses.push(Clause::new(
                "ℓ < 4s/n",
                false,
                format!("ℓ = {}, 4s/n = {}", p.ell, crit.mass_critical),
            ));
            "supercritical"
        }
    };
    clauses.extend(lower_bound_clauses(p));
    clauses.push(growth_clause(p));
    Ok(Verdict::from_clauses(
        "ground states (general)",
        Some(branch.into()),
        clauses,
    ))
}

/// Estimate of `∫_{|x|>1} V(x)|x|^{-(n-2s)} dx`; `None` when divergent.
pub fn potential_tail_integral(potential: &PotentialModel, n: u32, s: f64) -> Option<f64> {
    let sphere = sphere_area(n);
    match *potential {
        PotentialModel::Zero => Some(0.0),
        PotentialModel::GaussianBump { amplitude, width } => {
            // Simpson on [1, 1 + 40w], beyond which the integrand is below e^{-800}
            let upper = 1.0 + 40.0 * width;
            let m = 20_000;
            let h = (upper - 1.0) / m as f64;
            let g =
                |r: f64| amplitude * (-r * r / (2.0 * width * width)).exp() * r.powf(2.0 * s - 1.0);
            let mut sum = g(1.0) + g(upper);
            for k in 1..m {
                sum += if k % 2 == 1 { 4.0 } else { 2.0 } * g(1.0 + k as f64 * h);
            }
            Some(sphere * sum * h / 3.0)
        }
        PotentialModel::CutoffInversePower {
            amplitude,
            exponent,
            core,
        } => {
            if amplitude == 0.0 {
                return Some(0.0);
            }
            if exponent <= 2.0 * s {
                return None;
            }
            let outer =
                |from: f64| amplitude * from.powf(2.0 * s - exponent) / (exponent - 2.0 * s);
            let value = if core <= 1.0 {
                outer(1.0)
            } else {
                amplitude * core.powf(-exponent) * (core.powf(2.0 * s) - 1.0) / (2.0 * s)
                    + outer(core)
            };
            Some(sphere * value)
        }
    }
}

fn sphere_area(n: u32) -> f64 {
    use std::f64::consts::PI;
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n - 2) as f64 * sphere_area(n - 2),
    }
}

/// Ground states among radial functions.
pub fn check_radial_existence(
    p: &ParameterSet,
    potential: Option<&PotentialModel>,
) -> Result<Verdict, HypothesisError> {
    p.validate()?;
    let crit = critical_exponents(p.n, &p.s, &p.ell)?;
    let half = rat(1, 2);
    let mut clauses = vec![
        Clause::new("n ≥ 2", p.n >= 2, format!("n = {}", p.n)),
        Clause::new("1/2 < s", p.s > half, format!("s = {}", p.s)),
        Clause::new(
            "radial V and f",
            p.radial,
            if p.radial { "declared" } else { "not declared" },
        ),
        Clause::new(
            "V ∈ L^∞_loc",
            p.v_bounded,
            if p.v_bounded {
                "bounded"
            } else {
                "not declared bounded"
            },
        ),
        Clause::new(
            "a ∈ L^∞",
            p.a_bounded,
            if p.a_bounded {
                "bounded"
            } else {
                "not declared bounded"
            },
        ),
    ];
    let branch = match p.ell.cmp(&crit.mass_critical) {
        Ordering::Less => {
            clauses.push(Clause::new(
                "0 < ℓ < 4s/n",
                true,
                format!("4s/n = {}", crit.mass_critical),
            ));
            "subcritical: every μ > 0"
        }
        Ordering::Equal => {
            clauses.push(Clause::new("ℓ = 4s/n", true, format!("ℓ = {}", p.ell)));
            "critical: sufficiently small μ"
        }
        Ordering::Greater => {
            clauses.push(Clause::new(
                "ℓ ≤ 4s/n",
                false,
                format!("ℓ = {}, 4s/n = {}", p.ell, crit.mass_critical),
            ));
            "supercritical"
        }
    };
    let estimate =
        potential.map(|v| potential_tail_integral(v, p.n, p.s.to_f64().unwrap_or(f64::NAN)));
    let (holds, detail) = match (&estimate, p.tail_integral_declared) {
        (Some(Some(v)), declared) => (
            true,
            format!(
                "estimate {v:.6e}{}",
                if declared { ", declared" } else { "" }
            ),
        ),
        (Some(None), _) => (false, "estimate diverges".to_string()),
        (None, true) => (true, "declared".to_string()),
        (None, false) => (false, "not declared".to_string()),
    };
    clauses.push(Clause::new(
        "∫_{|x|>1} V|x|^{-(n-2s)} dx < ∞",
        holds,
        detail,
    ));
    clauses.extend(lower_bound_clauses(p));
    clauses.push(growth_clause(p));
    Ok(Verdict::from_clauses(
        "ground states (radial)",
        Some(branch.into()),
        clauses,
    ))
}

/// Existence of `H^s`-weak solutions.
pub fn check_weak_solutions(p: &ParameterSet) -> Result<Verdict, HypothesisError> {
    p.validate()?;
    let crit = critical_exponents(p.n, &p.s, &p.ell)?;
    let mut clauses = Vec::new();
    let ell_ok = match crit.s_star.value() {
        None => true,
        Some(v) => p.ell < v - int(2),
    };
    clauses.push(Clause::new(
        "0 < ℓ < s* - 2",
        ell_ok,
        format!("s* = {}", crit.s_star),
    ));
    let p_lower = Exponent::finite(int(p.n) / (int(2) * &p.s));
    clauses.push(exponent_clause("p₁", &p.p1, p.v_bounded, &p_lower, true));
    clauses.push(exponent_clause("p₂", &p.p2, p.v_bounded, &p_lower, true));
    match &crit.q0 {
        Some(q0) => {
            let ab = p.a_bounded && p.b_bounded;
            clauses.push(exponent_clause("q₁", &p.q1, ab, q0, true));
            clauses.push(exponent_clause("q₂", &p.q2, ab, q0, true));
        }
        None => clauses.push(Clause::new("q₀ defined", false, "ℓ ≥ s* - 2")),
    }
    Ok(Verdict::from_clauses("weak solutions", None, clauses))
}

/// Uniqueness of weak solutions in one dimension.
pub fn check_line_uniqueness(p: &ParameterSet) -> Result<Verdict, HypothesisError> {
    let weak = check_weak_solutions(p)?;
    let mut clauses = vec![
        Clause::new("n = 1", p.n == 1, format!("n = {}", p.n)),
        Clause::new("1/2 < s", p.s > rat(1, 2), format!("s = {}", p.s)),
        Clause::new("V, b ∈ L^∞", p.v_bounded && p.b_bounded, "bounded flags"),
    ];
    clauses.extend(weak.clauses);
    Ok(Verdict::from_clauses(
        "uniqueness (one dimension)",
        None,
        clauses,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrichartzExponents {
    /// Weight power `(n+2s)/q - n/2`.
    pub delta_q: Rational,
    /// `1/q̃ = 1/2 - (2s/q - 1/2)/(n-1)`.
    pub recip_q_tilde: Rational,
    pub recip_m1: Rational,
    pub recip_m1_tilde: Rational,
    pub recip_m2: Rational,
    pub recip_m2_tilde: Rational,
    /// `2 ≤ q < 4s`, the range of the weighted estimate.
    pub in_estimate_range: bool,
    /// Window `1/2 + (n-1)ℓ(n-2s)/(2n) ≤ 2s/q ≤ s`.
    pub window_lower: Rational,
    pub window_upper: Rational,
    pub window_value: Rational,
    pub window_empty: bool,
    pub in_window: bool,
    /// Power caps under which `1/m₂ ≥ 0` and `1/m̃₂ ≥ 0` are possible.
    pub m2_cap: Rational,
    pub m2_tilde_cap: Rational,
}

impl StrichartzExponents {
    pub fn m2_nonnegative(&self) -> bool {
        !self.recip_m2.is_negative()
    }

    pub fn m2_tilde_nonnegative(&self) -> bool {
        !self.recip_m2_tilde.is_negative()
    }
}

pub fn strichartz_exponents(
    n: u32,
    s: &Rational,
    q: &Exponent,
    ell: &Rational,
) -> Result<StrichartzExponents, HypothesisError> {
    check_basic(n, s, ell)?;
    if n < 2 {
        return Err(HypothesisError::NeedsPlane(
            "the weighted Strichartz exponents",
        ));
    }
    let nn = int(n);
    let one = Rational::one();
    let half = rat(1, 2);
    let two = int(2);
    let rq = q.recip().clone();
    let gap = &nn - &two * s;
    let loss = ell * &gap / (&two * &nn);
    let ratio = &two * s * &rq;
    let angular = (&ratio - &half) / (&nn - &one);
    let recip_m1 = &half - &rq;
    let window_lower = &half + (&nn - &one) * &loss;
    let window_upper = s.clone();
    Ok(StrichartzExponents {
        delta_q: (&nn + &two * s) * &rq - &nn / &two,
        recip_q_tilde: &half - &angular,
        recip_m2: &recip_m1 - &loss,
        recip_m1,
        recip_m2_tilde: &angular - &loss,
        recip_m1_tilde: angular,
        in_estimate_range: rq <= half && rq > (int(4) * s).recip(),
        window_empty: window_lower > window_upper,
        in_window: window_lower <= ratio && ratio <= window_upper,
        window_lower,
        window_upper,
        window_value: ratio,
        m2_cap: &nn * (&two * s - &one) / ((&nn - &one) * &gap),
        m2_tilde_cap: &nn * (&two * s - &one) / (&two * s * &gap),
    })
}

/// Conditional uniqueness under weighted integrability of `V` and `b`.
pub fn check_conditional_uniqueness(
    p: &ParameterSet,
    q: &Exponent,
) -> Result<Verdict, HypothesisError> {
    let weak = check_weak_solutions(p)?;
    let crit = critical_exponents(p.n, &p.s, &p.ell)?;
    let mut clauses = vec![
        Clause::new("n ≥ 2", p.n >= 2, format!("n = {}", p.n)),
        Clause::new("1/2 < s", p.s > rat(1, 2), format!("s = {}", p.s)),
    ];
    if p.n == 2 {
        clauses.push(Clause::new(
            "ℓ < ℓ₀",
            crit.ell0.exceeds(&p.ell),
            format!("ℓ₀ = {}", crit.ell0),
        ));
    }
    if p.n >= 2 {
        let st = strichartz_exponents(p.n, &p.s, q, &p.ell)?;
        clauses.push(Clause::new(
            "1/2 + (n-1)ℓ(n-2s)/(2n) ≤ 2s/q ≤ s",
            st.in_window,
            format!(
                "{} ≤ {} ≤ {}{}",
                st.window_lower,
                st.window_value,
                st.window_upper,
                if st.window_empty {
                    " (empty window)"
                } else {
                    ""
                }
            ),
        ));
        clauses.push(Clause::new(
            "1/m₂ ≥ 0",
            st.m2_nonnegative(),
            format!("1/m₂ = {}", st.recip_m2),
        ));
        clauses.push(Clause::new(
            "1/m̃₂ ≥ 0",
            st.m2_tilde_nonnegative(),
            format!("1/m̃₂ = {}", st.recip_m2_tilde),
        ));
    }
    clauses.extend(weak.clauses);
    Ok(Verdict::from_clauses(
        "uniqueness (weighted)",
        None,
        clauses,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniquenessWindow {
    /// Bounds on `1/q` for `n = 2`, on `2s/q` for `n ≥ 3`; lower strict,
    /// upper inclusive.
    pub lower: Rational,
    pub upper: Rational,
    pub variable: &'static str,
    pub nonempty: bool,
    /// Power cap `n(2s-1)/((n-2s)(n+2s-1))` for `n ≥ 3`.
    pub ell_cap: Option<Rational>,
    pub contains_q: Option<bool>,
    pub verdict: Verdict,
}

/// Unconditional uniqueness in `C(H^s)`.
pub fn check_uniqueness_corollaries(
    p: &ParameterSet,
    q: Option<&Exponent>,
) -> Result<UniquenessWindow, HypothesisError> {
    p.validate()?;
    if p.n < 2 {
        return Err(HypothesisError::NeedsPlane("unconditional uniqueness"));
    }
    let nn = int(p.n);
    let s = &p.s;
    let one = Rational::one();
    let half = rat(1, 2);
    let two = int(2);
    let mut clauses = Vec::new();
    let (lower, upper, variable, ell_cap, value) = if p.n == 2 {
        let lower = (int(4) * s).recip();
        let upper = (&half - &p.ell * (&one - s) / s).min((&one + &two * s).recip());
        let value = q.map(|q| q.recip().clone());
        (lower, upper, "1/q", None, value)
    } else {
        let gap = &nn - &two * s;
        let lower = half
            .clone()
            .max(&nn * s / (&nn + &two * s))
            .max(&half + (&nn - &one) * &p.ell * &gap / (&two * &nn));
        let upper = &nn * s / (&nn + &two * s - &one);
        let cap = &nn * (&two * s - &one) / (&gap * (&nn + &two * s - &one));
        let value = q.map(|q| &two * s * q.recip());
        (lower, upper, "2s/q", Some(cap), value)
    };
    let nonempty = lower < upper;
    clauses.push(Clause::new(
        format!("{variable} window nonempty"),
        nonempty,
        format!("{lower} < {variable} ≤ {upper}"),
    ));
    if let Some(cap) = &ell_cap {
        clauses.push(Clause::new(
            "0 < ℓ ≤ n(2s-1)/((n-2s)(n+2s-1))",
            &p.ell <= cap,
            format!("cap = {cap}"),
        ));
    }
    clauses.push(Clause::new("1/2 < s", s > &half, format!("s = {s}")));
    if p.n == 2 {
        let crit = critical_exponents(p.n, s, &p.ell)?;
        clauses.push(Clause::new(
            "ℓ < ℓ₀",
            crit.ell0.exceeds(&p.ell),
            format!("ℓ₀ = {}", crit.ell0),
        ));
    }
    let contains_q = value.map(|v| lower < v && v <= upper);
    if let (Some(inside), Some(q)) = (contains_q, q) {
        clauses.push(Clause::new(
            format!("q inside {variable} window"),
            inside,
            format!("q = {q}"),
        ));
    }
    Ok(UniquenessWindow {
        lower,
        upper,
        variable,
        nonempty,
        ell_cap,
        contains_q,
        verdict: Verdict::from_clauses("uniqueness (unconditional)", None, clauses),
    })
}

/// `r` from `2s/q + n/r = n/2`.
pub fn admissible_r(n: u32, s: &Rational, q: &Exponent) -> Result<Exponent, HypothesisError> {
    if n == 0 {
        return Err(HypothesisError::Dimension(n));
    }
    check_order(s)?;
    let recip_r = rat(1, 2) - int(2) * s * q.recip() / int(n);
    if !recip_r.is_positive() || recip_r > rat(1, 2) {
        return Err(HypothesisError::NoAdmissibleR(recip_r));
    }
    Ok(Exponent::from_recip(recip_r))
}

/// Radial `s`-admissible pair: `2s/q + n/r = n/2`, `n/(2n-1) ≤ s < 1`,
/// `2 ≤ q ≤ ∞`, `2 ≤ r < ∞`, `(q, r) ≠ (2, (4n-2)/(2n-3))`.
pub fn admissible_pair_check(
    n: u32,
    s: &Rational,
    q: &Exponent,
    r: &Exponent,
) -> Result<Verdict, HypothesisError> {
    if n == 0 {
        return Err(HypothesisError::Dimension(n));
    }
    check_order(s)?;
    let nn = int(n);
    let two = int(2);
    let half = rat(1, 2);
    let lhs = &two * s * q.recip() + &nn * r.recip();
    let mut clauses = vec![
        Clause::new(
            "2s/q + n/r = n/2",
            lhs == &nn / &two,
            format!("2s/q + n/r = {lhs}"),
        ),
        Clause::new(
            "n/(2n-1) ≤ s < 1",
            &nn / (&two * &nn - Rational::one()) <= *s,
            format!("s = {s}"),
        ),
        Clause::new("2 ≤ q ≤ ∞", q.recip() <= &half, format!("q = {q}")),
        Clause::new(
            "2 ≤ r < ∞",
            r.recip() <= &half && !r.is_infinite(),
            format!("r = {r}"),
        ),
    ];
    if n >= 2 {
        let excluded =
            q.recip() == &half && r.value() == Some((int(4) * &nn - &two) / (&two * &nn - int(3)));
        clauses.push(Clause::new(
            "(q, r) ≠ (2, (4n-2)/(2n-3))",
            !excluded,
            format!("(q, r) = ({q}, {r})"),
        ));
    }
    Ok(Verdict::from_clauses("admissible pair", None, clauses))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadialPair {
    pub q0: Exponent,
    pub r0: Exponent,
    /// Time exponent left over by Hölder: `1/q₁ = 1 - (ℓ+2)/q₀`.
    pub recip_q1: Rational,
    /// `ℓ = 4s/(n-2s)`, where `1/q₁ = 0`.
    pub critical: bool,
    /// `n/(2n-1) ≤ s`.
    pub order_in_range: bool,
}

/// `r₀ = n(ℓ+2)/(n+sℓ)`, `q₀ = 4s(ℓ+2)/(ℓ(n-2s))` for radial local
/// well-posedness, `0 < ℓ ≤ 4s/(n-2s)`.
pub fn radial_wellposed_pair(
    n: u32,
    s: &Rational,
    ell: &Rational,
) -> Result<RadialPair, HypothesisError> {
    check_basic(n, s, ell)?;
    let nn = int(n);
    let two = int(2);
    let gap = &nn - &two * s;
    if !gap.is_positive() {
        return Err(HypothesisError::OutOfScope(format!(
            "n ≤ 2s (n = {n}, s = {s})"
        )));
    }
    let cap = int(4) * s / &gap;
    if ell > &cap {
        return Err(HypothesisError::OutOfScope(format!(
            "ℓ = {ell} exceeds 4s/(n-2s) = {cap}"
        )));
    }
    let recip_r0 = (&nn + s * ell) / (&nn * (ell + &two));
    let recip_q0 = ell * &gap / (int(4) * s * (ell + &two));
    let pair = RadialPair {
        recip_q1: Rational::one() - (ell + &two) * &recip_q0,
        q0: Exponent::from_recip(recip_q0),
        r0: Exponent::from_recip(recip_r0),
        critical: *ell == cap,
        order_in_range: &nn / (&two * &nn - Rational::one()) <= *s,
    };
    debug_assert_eq!(
        &two * s * pair.q0.recip() + &nn * pair.r0.recip(),
        &nn / &two
    );
    Ok(pair)
}

pub fn check_radial_wellposedness(p: &ParameterSet) -> Result<Verdict, HypothesisError> {
    p.validate()?;
    let mut clauses = vec![
        Clause::new(
            "radial V, f and data",
            p.radial,
            if p.radial { "declared" } else { "not declared" },
        ),
        Clause::new(
            "V, a, b ∈ L^∞",
            p.v_bounded && p.a_bounded && p.b_bounded,
            "bounded flags",
        ),
    ];
    match radial_wellposed_pair(p.n, &p.s, &p.ell) {
        Ok(pair) => {
            clauses.push(Clause::new(
                "n/(2n-1) ≤ s < 1",
                pair.order_in_range,
                format!("s = {}", p.s),
            ));
            clauses.push(Clause::new(
                "0 < ℓ ≤ 4s/(n-2s)",
                true,
                format!("(q₀, r₀) = ({}, {})", pair.q0, pair.r0),
            ));
        }
        Err(HypothesisError::OutOfScope(why)) => {
            clauses.push(Clause::new("n > 2s and 0 < ℓ ≤ 4s/(n-2s)", false, why))
        }
        Err(e) => return Err(e),
    }
    Ok(Verdict::from_clauses(
        "radial local well-posedness",
        None,
        clauses,
    ))
}

/// Parameter range of the orbital stability statement: `1/2 < s < 1`,
/// `0 < ℓ ≤ 4s/n`, `ℓ < ℓ₀`, and `ℓ = 4s/n` only for `n ≤ 3`.
pub fn check_stability_range(p: &ParameterSet) -> Result<Verdict, HypothesisError> {
    let crit = critical_exponents(p.n, &p.s, &p.ell)?;
    let critical = p.ell == crit.mass_critical;
    let clauses = vec![
        Clause::new("1/2 < s", p.s > rat(1, 2), format!("s = {}", p.s)),
        Clause::new(
            "0 < ℓ ≤ 4s/n",
            p.ell <= crit.mass_critical,
            format!("4s/n = {}", crit.mass_critical),
        ),
        Clause::new(
            "ℓ < ℓ₀",
            crit.ell0.exceeds(&p.ell),
            format!("ℓ₀ = {}", crit.ell0),
        ),
        Clause::new(
            "ℓ = 4s/n only for n ≤ 3",
            !critical || p.n <= 3,
            format!("n = {}", p.n),
        ),
    ];
    Ok(Verdict::from_clauses(
        "orbital stability range",
        None,
        clauses,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub params: ParameterSet,
    pub q: Option<Exponent>,
    pub exponents: CriticalExponents,
    pub strichartz: Option<StrichartzExponents>,
    pub radial_pair: Result<RadialPair, HypothesisError>,
    pub uniqueness_window: Option<UniquenessWindow>,
    pub verdicts: Vec<Verdict>,
}

pub fn hypothesis_report(
    params: &ParameterSet,
    q: Option<&Exponent>,
    potential: Option<&PotentialModel>,
) -> Result<HypothesisReport, HypothesisError> {
    params.validate()?;
    let exponents = critical_exponents(params.n, &params.s, &params.ell)?;
    let strichartz = match (params.n >= 2, q) {
        (true, Some(q)) => Some(strichartz_exponents(params.n, &params.s, q, &params.ell)?),
        _ => None,
    };
    let uniqueness_window = if params.n >= 2 {
        Some(check_uniqueness_corollaries(params, q)?)
    } else {
        None
    };
    let mut verdicts = vec![
        check_existence(params)?,
        check_radial_existence(params, potential)?,
        check_weak_solutions(params)?,
    ];
    if params.n == 1 {
        verdicts.push(check_line_uniqueness(params)?);
    }
    if let (true, Some(q)) = (params.n >= 2, q) {
        verdicts.push(check_conditional_uniqueness(params, q)?);
    }
    if let Some(w) = &uniqueness_window {
        verdicts.push(w.verdict.clone());
    }
    verdicts.push(check_radial_wellposedness(params)?);
    verdicts.push(check_stability_range(params)?);
    Ok(HypothesisReport {
        params: params.clone(),
        q: q.cloned(),
        exponents,
        strichartz,
        radial_pair: radial_wellposed_pair(params.n, &params.s, &params.ell),
        uniqueness_window,
        verdicts,
    })
}

fn approx(r: &Rational) -> String {
    format!("{:.6}", r.to_f64().unwrap_or(f64::NAN))
}

impl HypothesisReport {
    /// Exact values with decimal approximations, one statement per block.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let e = &self.exponents;
        let mut out = format!("parameters: n = {}, s = {}, ℓ = {}\n", p.n, p.s, p.ell);
        out.push_str(&format!(
            "  s* = {}\n  4s/n = {} ≈ {}\n  ℓ₀ = {}\n",
            e.s_star,
            e.mass_critical,
            approx(&e.mass_critical),
            e.ell0
        ));
        match &e.q0 {
            Some(q0) => out.push_str(&format!("  q₀ = {q0}\n")),
            None => out.push_str("  q₀ undefined (ℓ ≥ s* - 2)\n"),
        }
        if let Some(st) = &self.strichartz {
            out.push_str(&format!(
                "  q = {}: δ_q = {}, 1/q̃ = {}, 1/m₁ = {}, 1/m̃₁ = {}, 1/m₂ = {}, 1/m̃₂ = {}\n",
                self.q.as_ref().expect("strichartz needs q"),
                st.delta_q,
                st.recip_q_tilde,
                st.recip_m1,
                st.recip_m1_tilde,
                st.recip_m2,
                st.recip_m2_tilde
            ));
            out.push_str(&format!(
                "  2s/q window [{}, {}]{}; weighted estimate range 2 ≤ q < 4s: {}\n",
                st.window_lower,
                st.window_upper,
                if st.window_empty { " empty" } else { "" },
                if st.in_estimate_range { "yes" } else { "no" }
            ));
        }
        match &self.radial_pair {
            Ok(rp) => out.push_str(&format!(
                "  radial pair (q₀ʳ, r₀ʳ) = ({}, {}), 1/q₁ = {}{}\n",
                rp.q0,
                rp.r0,
                rp.recip_q1,
                if rp.critical { " (critical)" } else { "" }
            )),
            Err(err) => out.push_str(&format!("  radial pair: {err}\n")),
        }
        if let Some(w) = &self.uniqueness_window {
            out.push_str(&format!(
                "  uniqueness window: {} < {} ≤ {}{}\n",
                w.lower,
                w.variable,
                w.upper,
                if w.nonempty { "" } else { " (empty)" }
            ));
        }
        for v in &self.verdicts {
            out.push_str(&format!(
                "{}: {}",
                v.statement,
                if v.applies {
                    "applies"
                } else {
                    "does not apply"
                }
            ));
            if let Some(b) = &v.branch {
                out.push_str(&format!(" [{b}]"));
            }
            out.push('\n');
            for c in &v.clauses {
                out.push_str(&format!(
                    "  [{}] {} ({})\n",
                    if c.holds { "ok" } else { "FAIL" },
                    c.label,
                    c.detail
                ));
            }
        }
        out
    }

    /// `key=value` lines in a fixed order.
    pub fn to_key_value(&self) -> String {
        let p = &self.params;
        let e = &self.exponents;
        let mut kv: Vec<(String, String)> = vec![
            ("n".into(), p.n.to_string()),
            ("s".into(), p.s.to_string()),
            ("ell".into(), p.ell.to_string()),
            ("s_star".into(), e.s_star.to_string()),
            ("mass_critical".into(), e.mass_critical.to_string()),
            ("ell0".into(), e.ell0.to_string()),
            (
                "q0".into(),
                e.q0.as_ref().map_or("undefined".into(), |q| q.to_string()),
            ),
        ];
        if let Some(q) = &self.q {
            kv.push(("q".into(), q.to_string()));
        }
        if let Some(st) = &self.strichartz {
            for (k, v) in [
                ("delta_q", &st.delta_q),
                ("recip_q_tilde", &st.recip_q_tilde),
                ("recip_m1", &st.recip_m1),
                ("recip_m1_tilde", &st.recip_m1_tilde),
                ("recip_m2", &st.recip_m2),
                ("recip_m2_tilde", &st.recip_m2_tilde),
                ("window_lower", &st.window_lower),
                ("window_upper", &st.window_upper),
            ] {
                kv.push((k.into(), v.to_string()));
            }
            kv.push(("window_empty".into(), st.window_empty.to_string()));
            kv.push(("in_estimate_range".into(), st.in_estimate_range.to_string()));
        }
        match &self.radial_pair {
            Ok(rp) => {
                kv.push(("radial_q0".into(), rp.q0.to_string()));
                kv.push(("radial_r0".into(), rp.r0.to_string()));
                kv.push(("radial_recip_q1".into(), rp.recip_q1.to_string()));
                kv.push(("radial_critical".into(), rp.critical.to_string()));
            }
            Err(_) => kv.push(("radial_q0".into(), "out_of_scope".into())),
        }
        if let Some(w) = &self.uniqueness_window {
            kv.push(("uniqueness_lower".into(), w.lower.to_string()));
            kv.push(("uniqueness_upper".into(), w.upper.to_string()));
            kv.push(("uniqueness_nonempty".into(), w.nonempty.to_string()));
        }
        for v in &self.verdicts {
            let key = v.statement.replace([' ', '(', ')'], "_").replace("__", "_");
            let key = key.trim_end_matches('_');
            kv.push((
                format!("verdict.{key}"),
                if v.applies { "pass" } else { "fail" }.into(),
            ));
            let failing: Vec<&str> = v.failing().map(|c| c.label.as_str()).collect();
            if !failing.is_empty() {
                kv.push((format!("verdict.{key}.failing"), failing.join("; ")));
            }
        }
        kv.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}
