//! Interval / no-interval verdicts for `F_1 - F_2`, with the rule that
//! produced them.
//!
//! [`classify`] tries the rules from cheapest to most expensive: extinction,
//! first-order coefficients, the 2-adic threshold `C`, higher-order
//! coefficients, then the lower spectral radius. A rule that cannot fire
//! yields `Inconclusive` with a machine-readable reason.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::correlation::{gamma, gamma_table, EdgeWeights, GammaVector};
use crate::error::{Error, Result};
use crate::spectral::{lsr_2adic_closed_form, lsr_profile, relation_to_one, LsrEstimate, LsrMethod, MatrixFamily, RelationToOne};
use crate::survival::{checked_power, ExtinctionRegime, JointSurvivalDistribution, MarginalVector, DEFAULT_ENTRY_CAP};

/// Half-width of the undecided band around `C = 1`.
pub const C_BAND: f64 = 1e-12;
/// Half-width of the undecided band around `gamma = 1`.
pub const GAMMA_BAND: f64 = 1e-12;
/// Half-width of the undecided band around a spectral radius of 1.
pub const LSR_BAND: f64 = 1e-9;
/// Tolerance for treating two marginal vectors as equal.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

pub const INTERVAL_QUALIFIER: &str = "on the event that F1 - F2 is non-empty";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    IntervalAS,
    NoIntervalAS,
    EmptyAS,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    DsA,
    DsB,
    HigherOrderA(usize),
    HigherOrderB(usize),
    LsrA,
    LsrB,
    TwoAdicC,
    Extinction,
    DimensionBound,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::DsA => f.write_str("DS-a"),
            Rule::DsB => f.write_str("DS-b"),
            Rule::HigherOrderA(n) => write!(f, "HigherOrder-a({n})"),
            Rule::HigherOrderB(n) => write!(f, "HigherOrder-b({n})"),
            Rule::LsrA => f.write_str("LSR-a"),
            Rule::LsrB => f.write_str("LSR-b"),
            Rule::TwoAdicC => f.write_str("TwoAdic-C"),
            Rule::Extinction => f.write_str("Extinction"),
            Rule::DimensionBound => f.write_str("DimensionBound"),
        }
    }
}

impl Serialize for Rule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Why no rule fired.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Reason {
    JscFails,
    Boundary,
    Reducible,
    Cap,
    Asymmetric,
    Undecided,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reason::JscFails => "JSC-fails",
            Reason::Boundary => "boundary",
            Reason::Reducible => "reducible",
            Reason::Cap => "cap",
            Reason::Asymmetric => "asymmetric",
            Reason::Undecided => "undecided",
        })
    }
}

impl Serialize for Reason {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Numbers supporting a verdict. Unset fields are omitted from JSON.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_argmin: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consecutive_below_at: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm1: Option<f64>,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub palis_fails: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_plus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lsr: Option<LsrEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Diagnostics {
    /// Largest vector printed in full; longer ones are summarized.
    const PRINTED_GAMMA: usize = 64;

    fn from_gamma(g: &GammaVector) -> Self {
        let (argmin, min) = g.min();
        Diagnostics {
            gamma: (g.period() <= Self::PRINTED_GAMMA).then(|| g.values().to_vec()),
            gamma_min: Some(min),
            gamma_argmin: Some(argmin),
            gamma_max: Some(g.max()),
            consecutive_below_at: g.consecutive_below(1.0),
            ..Default::default()
        }
    }

    /// Fields of `self`, with gaps filled from `other`.
    fn or(self, other: Diagnostics) -> Diagnostics {
        Diagnostics {
            gamma: self.gamma.or(other.gamma),
            gamma_min: self.gamma_min.or(other.gamma_min),
            gamma_argmin: self.gamma_argmin.or(other.gamma_argmin),
            gamma_max: self.gamma_max.or(other.gamma_max),
            consecutive_below_at: self.consecutive_below_at.or(other.consecutive_below_at),
            norm1: self.norm1.or(other.norm1),
            c: self.c.or(other.c),
            palis_fails: self.palis_fails.or(other.palis_fails),
            x_plus: self.x_plus.or(other.x_plus),
            lsr: self.lsr.or(other.lsr),
            note: self.note.or(other.note),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qualifier: Option<&'static str>,
    pub rule: Option<Rule>,
    pub order: usize,
    pub reason: Option<Reason>,
    pub diagnostics: Diagnostics,
}

impl Verdict {
    fn fired(outcome: Outcome, rule: Rule, order: usize, diagnostics: Diagnostics) -> Self {
        let qualifier = (outcome == Outcome::IntervalAS).then_some(INTERVAL_QUALIFIER);
        Verdict { outcome, qualifier, rule: Some(rule), order, reason: None, diagnostics }
    }

    fn inconclusive(reason: Reason, order: usize, diagnostics: Diagnostics) -> Self {
        Verdict { outcome: Outcome::Inconclusive, qualifier: None, rule: None, order, reason: Some(reason), diagnostics }
    }

    pub fn is_conclusive(&self) -> bool {
        self.outcome != Outcome::Inconclusive
    }
}

fn check_alphabets(mu: &JointSurvivalDistribution, lambda: &JointSurvivalDistribution) -> Result<()> {
    if mu.m() != lambda.m() {
        return Err(Error::SizeMismatch { left: mu.m(), right: lambda.m() });
    }
    Ok(())
}

fn symmetric(p: &MarginalVector, q: &MarginalVector) -> bool {
    p.approx_eq(q, SYMMETRY_TOLERANCE)
}

/// `EmptyAS` when either set dies out almost surely.
fn extinction(mu: &JointSurvivalDistribution, lambda: &JointSurvivalDistribution) -> Option<Verdict> {
    let dies = |d: &JointSurvivalDistribution| d.extinction_regime() == ExtinctionRegime::DiesOut;
    if dies(mu) || dies(lambda) {
        let note = format!("expected children {} and {}", mu.expected_children(), lambda.expected_children());
        return Some(Verdict::fired(
            Outcome::EmptyAS,
            Rule::Extinction,
            0,
            Diagnostics { note: Some(note), ..Default::default() },
        ));
    }
    None
}

/// Applies the order-1 criteria to `gamma`: all above 1 (needs the JSC) or
/// two consecutive below 1.
fn apply_gamma_rules(g: &GammaVector, jsc: bool, order: usize, rules: (Rule, Rule)) -> Verdict {
    let diagnostics = Diagnostics::from_gamma(g);
    if g.consecutive_below(1.0 - GAMMA_BAND).is_some() {
        return Verdict::fired(Outcome::NoIntervalAS, rules.1, order, diagnostics);
    }
    if g.all_above(1.0 + GAMMA_BAND) {
        if jsc {
            return Verdict::fired(Outcome::IntervalAS, rules.0, order, diagnostics);
        }
        return Verdict::inconclusive(Reason::JscFails, order, diagnostics);
    }
    Verdict::inconclusive(Reason::Undecided, order, diagnostics)
}

pub fn classify_first_order(mu: &JointSurvivalDistribution, lambda: &JointSurvivalDistribution) -> Result<Verdict> {
    check_alphabets(mu, lambda)?;
    if let Some(v) = extinction(mu, lambda) {
        return Ok(v);
    }
    let g = gamma(&mu.marginals(), &lambda.marginals())?;
    Ok(apply_gamma_rules(&g, mu.jsc_holds() && lambda.jsc_holds(), 0, (Rule::DsA, Rule::DsB)))
}

/// Applies the first-order criteria to the order-`n` coefficients for
/// `n = 1..=n_max`, stopping at the first rule that fires.
pub fn classify_higher_order(
    mu: &JointSurvivalDistribution,
    lambda: &JointSurvivalDistribution,
    n_max: usize,
) -> Result<Verdict> {
    check_alphabets(mu, lambda)?;
    let (p, q) = (mu.marginals(), lambda.marginals());
    if !symmetric(&p, &q) {
        return Ok(Verdict::inconclusive(Reason::Asymmetric, 0, Diagnostics::default()));
    }
    let jsc = mu.jsc_holds() && lambda.jsc_holds();
    let w = EdgeWeights::symmetric(&p);
    let mut last = Verdict::inconclusive(Reason::Undecided, 0, Diagnostics::default());
    for n in 1..=n_max {
        if checked_power(w.m(), n, DEFAULT_ENTRY_CAP).is_err() {
            let note = format!("order {n} exceeds {DEFAULT_ENTRY_CAP} coefficients");
            return Ok(Verdict::inconclusive(
                Reason::Cap,
                n - 1,
                Diagnostics { note: Some(note), ..last.diagnostics },
            ));
        }
        let g = gamma_table(&w, n, DEFAULT_ENTRY_CAP)?;
        let v = apply_gamma_rules(&g, jsc, n, (Rule::HigherOrderA(n), Rule::HigherOrderB(n)));
        if v.is_conclusive() || v.reason == Some(Reason::JscFails) {
            return Ok(v);
        }
        last = v;
    }
    Ok(last)
}

/// Lower-spectral-radius criteria. In the 2-adic case the closed form
/// decides both directions; otherwise only a product with norm below 1 at
/// some depth `<= depth` is conclusive.
pub fn classify_lsr(mu: &JointSurvivalDistribution, lambda: &JointSurvivalDistribution, depth: usize) -> Result<Verdict> {
    check_alphabets(mu, lambda)?;
    let (p, q) = (mu.marginals(), lambda.marginals());
    if !symmetric(&p, &q) {
        return Ok(Verdict::inconclusive(Reason::Asymmetric, 0, Diagnostics::default()));
    }
    if !(mu.jsc_holds() && lambda.jsc_holds()) {
        return Ok(Verdict::inconclusive(Reason::JscFails, 0, Diagnostics::default()));
    }
    let w = EdgeWeights::symmetric(&p);
    let family = MatrixFamily::from_edge_weights(&w);
    if !family.is_irreducible() {
        return Ok(Verdict::inconclusive(Reason::Reducible, 0, Diagnostics::default()));
    }
    if w.m() == 2 {
        let x = lsr_2adic_closed_form(&w)?;
        let diagnostics = Diagnostics { x_plus: Some(x), ..Default::default() };
        return Ok(match relation_to_one(x, LSR_BAND) {
            RelationToOne::Above => Verdict::fired(Outcome::IntervalAS, Rule::LsrA, 0, diagnostics),
            RelationToOne::Below => Verdict::fired(Outcome::NoIntervalAS, Rule::LsrB, 0, diagnostics),
            RelationToOne::Boundary => Verdict::inconclusive(Reason::Boundary, 0, diagnostics),
        });
    }
    if depth == 0 {
        return Ok(Verdict::inconclusive(Reason::Undecided, 0, Diagnostics::default()));
    }
    let profile = lsr_profile(&family, depth, LsrMethod::NormMin, None)?;
    if let Some(e) = profile.iter().find(|e| e.value < 1.0 - LSR_BAND) {
        let order = e.depth;
        return Ok(Verdict::fired(
            Outcome::NoIntervalAS,
            Rule::LsrB,
            order,
            Diagnostics { lsr: Some(e.clone()), ..Default::default() },
        ));
    }
    let best = profile.into_iter().min_by(|a, b| a.value.total_cmp(&b.value));
    let reason = match &best {
        Some(e) if relation_to_one(e.value, LSR_BAND) == RelationToOne::Boundary => Reason::Boundary,
        _ => Reason::Undecided,
    };
    Ok(Verdict::inconclusive(reason, depth, Diagnostics { lsr: best, ..Default::default() }))
}

/// `C = p_0 p_1 (1 + p_0^2 + p_1^2)`.
pub fn two_adic_threshold(p0: f64, p1: f64) -> f64 {
    p0 * p1 * (1.0 + p0 * p0 + p1 * p1)
}

/// `p_0 + p_1 > sqrt 2` (dimension sum above 1) yet `C < 1`.
pub fn palis_fails(p0: f64, p1: f64) -> bool {
    p0 + p1 > std::f64::consts::SQRT_2 && two_adic_threshold(p0, p1) < 1.0
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadProbability(p));
    }
    Ok(())
}

/// Complete classification of symmetric 2-adic pairs by the threshold `C`.
pub fn classify_2adic(p0: f64, p1: f64) -> Result<Verdict> {
    check_probability(p0)?;
    check_probability(p1)?;
    let c = two_adic_threshold(p0, p1);
    let diagnostics = Diagnostics {
        gamma: Some(vec![p0 * p0 + p1 * p1, 2.0 * p0 * p1]),
        norm1: Some(p0 + p1),
        c: Some(c),
        palis_fails: Some(palis_fails(p0, p1)),
        ..Default::default()
    };
    if p0 + p1 <= 1.0 {
        // exactly one child at every node when (p_0, p_1) is (1, 0) or (0, 1)
        if p0 * p1 == 0.0 && p0 + p1 == 1.0 {
            return Ok(Verdict::fired(Outcome::NoIntervalAS, Rule::DimensionBound, 0, diagnostics));
        }
        return Ok(Verdict::fired(Outcome::EmptyAS, Rule::Extinction, 0, diagnostics));
    }
    Ok(match relation_to_one(c, C_BAND) {
        RelationToOne::Above => Verdict::fired(Outcome::IntervalAS, Rule::TwoAdicC, 0, diagnostics),
        RelationToOne::Below => Verdict::fired(Outcome::NoIntervalAS, Rule::TwoAdicC, 0, diagnostics),
        RelationToOne::Boundary => Verdict::inconclusive(Reason::Boundary, 0, diagnostics),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassifyOptions {
    /// Highest order tried by the higher-order sweep.
    pub n_max: usize,
    /// Deepest product length searched for the spectral criterion.
    pub depth: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { n_max: 20, depth: 12 }
    }
}

/// Every rule in order of cost; the first conclusive verdict wins. When none
/// fires, the most specific reason seen is reported.
pub fn classify(
    mu: &JointSurvivalDistribution,
    lambda: &JointSurvivalDistribution,
    options: ClassifyOptions,
) -> Result<Verdict> {
    check_alphabets(mu, lambda)?;
    if let Some(v) = extinction(mu, lambda) {
        return Ok(v);
    }
    let degenerate = |d: &JointSurvivalDistribution| d.extinction_regime() == ExtinctionRegime::DegenerateSingleChild;
    if degenerate(mu) && degenerate(lambda) {
        let note = "both sets are single points".to_string();
        return Ok(Verdict::fired(
            Outcome::NoIntervalAS,
            Rule::DimensionBound,
            0,
            Diagnostics { note: Some(note), ..Default::default() },
        ));
    }

    let first = classify_first_order(mu, lambda)?;
    if first.is_conclusive() {
        return Ok(first);
    }
    let mut pending = vec![first];

    let (p, q) = (mu.marginals(), lambda.marginals());
    if p.m() == 2 && symmetric(&p, &q) {
        let v = classify_2adic(p.get(0), p.get(1))?;
        if v.is_conclusive() || v.reason == Some(Reason::Boundary) {
            let diagnostics = v.diagnostics.clone().or(pending.remove(0).diagnostics);
            return Ok(Verdict { diagnostics, ..v });
        }
        pending.push(v);
    }

    let higher = classify_higher_order(mu, lambda, options.n_max)?;
    if higher.is_conclusive() {
        return Ok(higher);
    }
    pending.push(higher);

    let lsr = classify_lsr(mu, lambda, options.depth)?;
    if lsr.is_conclusive() {
        return Ok(lsr);
    }
    pending.push(lsr);

    let reason = pending.iter().filter_map(|v| v.reason).min().unwrap_or(Reason::Undecided);
    let diagnostics = pending.into_iter().map(|v| v.diagnostics).reduce(Diagnostics::or).unwrap_or_default();
    Ok(Verdict::inconclusive(reason, 0, diagnostics))
}

/// Region of the symmetric 2-adic parameter square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Region {
    /// `p_0 + p_1 <= 1`: extinction.
    Empty,
    /// `p_0 + p_1 < sqrt 2`: the difference set has dimension below 1.
    NoIntervalDim,
    /// `C < 1` on the line `p_0 + p_1 = sqrt 2`.
    NoIntervalC,
    IntervalC,
    /// `p_0 + p_1 > sqrt 2` and `C < 1`.
    PalisFails,
    /// `|C - 1| <= 1e-12`.
    Boundary,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhasePoint {
    pub p0: f64,
    pub p1: f64,
    pub norm1: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub region: Region,
}

pub fn phase_point(p0: f64, p1: f64) -> PhasePoint {
    let norm1 = p0 + p1;
    let c = two_adic_threshold(p0, p1);
    let region = if norm1 <= 1.0 {
        if p0 * p1 == 0.0 && norm1 == 1.0 {
            Region::NoIntervalDim
        } else {
            Region::Empty
        }
    } else if (c - 1.0).abs() <= C_BAND {
        Region::Boundary
    } else if norm1 < std::f64::consts::SQRT_2 {
        Region::NoIntervalDim
    } else if c > 1.0 {
        Region::IntervalC
    } else if norm1 > std::f64::consts::SQRT_2 {
        Region::PalisFails
    } else {
        Region::NoIntervalC
    };
    PhasePoint { p0, p1, norm1, gamma0: p0 * p0 + p1 * p1, gamma1: 2.0 * p0 * p1, c, region }
}

/// Grid coordinates `i / (resolution - 1)`, `i = 0..resolution`.
pub fn grid_coordinates(resolution: usize) -> Result<Vec<f64>> {
    if resolution < 2 {
        return Err(Error::Invalid(format!("resolution must be at least 2, got {resolution}")));
    }
    Ok((0..resolution).map(|i| i as f64 / (resolution - 1) as f64).collect())
}

/// Labels for every grid point, `p_0` varying slowest.
pub fn phase_diagram(resolution: usize) -> Result<Vec<PhasePoint>> {
    let xs = grid_coordinates(resolution)?;
    Ok(xs.iter().flat_map(|&p0| xs.iter().map(move |&p1| phase_point(p0, p1))).collect())
}

/// The five curves separating the regions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    /// `p_0 + p_1 = 1`
    Extinction,
    /// `p_0 + p_1 = sqrt 2`
    Dimension,
    /// `p_0^2 + p_1^2 = 1`, i.e. `gamma_0 = 1`
    Gamma0,
    /// `2 p_0 p_1 = 1`, i.e. `gamma_1 = 1`
    Gamma1,
    /// `C = 1`
    Threshold,
}

impl Curve {
    pub const ALL: [Curve; 5] = [Curve::Extinction, Curve::Dimension, Curve::Gamma0, Curve::Gamma1, Curve::Threshold];

    /// Signed residual; zero exactly on the curve.
    pub fn residual(self, p0: f64, p1: f64) -> f64 {
        match self {
            Curve::Extinction => p0 + p1 - 1.0,
            Curve::Dimension => p0 + p1 - std::f64::consts::SQRT_2,
            Curve::Gamma0 => p0 * p0 + p1 * p1 - 1.0,
            Curve::Gamma1 => 2.0 * p0 * p1 - 1.0,
            Curve::Threshold => two_adic_threshold(p0, p1) - 1.0,
        }
    }

    /// The `p_1` on the curve above `p_0`, if it lies in `[0, 1]`.
    pub fn solve(self, p0: f64) -> Option<f64> {
        let p1 = match self {
            Curve::Extinction => 1.0 - p0,
            Curve::Dimension => std::f64::consts::SQRT_2 - p0,
            Curve::Gamma0 => (1.0 - p0 * p0).sqrt(),
            Curve::Gamma1 => {
                if p0 == 0.0 {
                    return None;
                }
                0.5 / p0
            }
            Curve::Threshold => {
                // C is increasing in p_1 for p_0 > 0
                if p0 == 0.0 || two_adic_threshold(p0, 1.0) < 1.0 {
                    return None;
                }
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if two_adic_threshold(p0, mid) < 1.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                if (two_adic_threshold(p0, lo) - 1.0).abs() < (two_adic_threshold(p0, hi) - 1.0).abs() {
                    lo
                } else {
                    hi
                }
            }
        };
        (0.0..=1.0).contains(&p1).then_some(p1)
    }
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Curve::Extinction => "extinction",
            Curve::Dimension => "dimension",
            Curve::Gamma0 => "gamma0",
            Curve::Gamma1 => "gamma1",
            Curve::Threshold => "threshold",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContourPoint {
    pub curve: Curve,
    pub p0: f64,
    pub p1: f64,
    pub residual: f64,
}

/// Points on each curve above the grid's `p_0` coordinates.
pub fn phase_contours(resolution: usize) -> Result<Vec<ContourPoint>> {
    let xs = grid_coordinates(resolution)?;
    Ok(Curve::ALL
        .iter()
        .flat_map(|&curve| {
            xs.iter().filter_map(move |&p0| {
                curve.solve(p0).map(|p1| ContourPoint { curve, p0, p1, residual: curve.residual(p0, p1) })
            })
        })
        .collect())
}
