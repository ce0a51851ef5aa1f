//! Shadowing, the Anosov closing lemmas and the connecting lemma.
//!
//! Closed orbits are computed exactly as axes of deck elements. The
//! explicit `(eta, sigma, T')` of the constructive proofs are then read
//! back from the axis and every stated inequality is evaluated on them.
//! All computations are carried out relative to the lift of the base
//! point, where the elements involved are products of a few `a`, `b`, `c`
//! factors and the small coordinates keep full relative precision.

use crate::check::InequalityCheck;
use crate::flow::{self, FlowError, PhasePoint, SectionCoords};
use crate::fuchsian::{FuchsianGroup, PeriodicOrbit};
use crate::psl2::{self, Flavor, ProjMatrix, Psl2Error};
use crate::word::Word;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sampling step for distance checks along orbit stretches.
pub const SAMPLE_STEP: f64 = 0.1;
/// `|u s|` below this counts as a return onto a stable or unstable leaf.
pub const DEGENERATE_US: f64 = 1e-12;
/// Relative size of the off-diagonal part tolerated when confirming that
/// an element acts on a frame as a pure flow.
const FLOW_ACTION_TOL: f64 = 1e-8;
/// Half-width of the bracket used to locate the section point on an axis.
const ROOT_BRACKET: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClosingError {
    #[error("not a near-return: {0}")]
    NotNearReturn(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("no root of the eta quadratic in the window |eta - s| <= 2|s|e^-T (discriminant {discriminant:.6e})")]
    Construction { discriminant: f64 },
    #[error("degenerate input: |us| = {us:.3e} (second point on a stable or unstable leaf)")]
    Degenerate { us: f64 },
    #[error("orbit data inconsistent: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Psl2(#[from] Psl2Error),
}

pub type Result<T> = std::result::Result<T, ClosingError>;

/// `(eta, sigma, T')` from the explicit formulas of the flavor-II proof.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosingFormula {
    pub eta: f64,
    pub sigma: f64,
    pub t_prime: f64,
    pub discriminant: f64,
    /// Both quadratic roots fell in the window; the one closer to `s` won.
    pub both_roots_qualified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosingResult {
    pub orbit: PeriodicOrbit,
    pub x_prime: PhasePoint,
    pub t_prime: f64,
    pub sigma: f64,
    pub eta: f64,
    pub formula: Option<ClosingFormula>,
    /// Largest sampled lift distance `d(phi_t(x), phi_t(x'))` on `[0, T]`.
    pub max_distance: f64,
    pub residuals: Vec<InequalityCheck>,
}

impl ClosingResult {
    pub fn all_pass(&self) -> bool {
        crate::check::all_pass(&self.residuals)
    }
}

/// Section element of the coordinates: `c_u b_s` or `b_s c_u`.
fn section_element(u: f64, s: f64, flavor: Flavor) -> ProjMatrix {
    match flavor {
        Flavor::CuBs => ProjMatrix::c(u) * ProjMatrix::b(s),
        Flavor::BsCu => ProjMatrix::b(s) * ProjMatrix::c(u),
    }
}

/// `zeta = g c_u b_s a_-T g^-1` (flavor I) or `g b_s c_u a_-T g^-1`
/// (flavor II): the deck element carrying `phi_T(x)` back to the section.
/// Its inverse is the forward element of the closed orbit.
pub fn near_return_element(x: &PhasePoint, period: f64, coords: &SectionCoords) -> ProjMatrix {
    let rel = section_element(coords.u, coords.s, coords.flavor) * ProjMatrix::a(-period);
    x.lift.conjugate(&rel)
}

/// Confirms that `phi_T(x)` lies in the section of radius `eps` at `x`
/// with the given coordinates.
pub fn validate_near_return(group: &FuchsianGroup, x: &PhasePoint, period: f64, coords: &SectionCoords, eps: f64) -> Result<()> {
    let y = flow::evolve(x, period, flow::FlowKind::Geodesic);
    match flow::section_locate(group, x, &y, eps, coords.flavor)? {
        Some(found) if (found.u - coords.u).abs() < 1e-8 && (found.s - coords.s).abs() < 1e-8 => Ok(()),
        Some(found) => Err(ClosingError::NotNearReturn(format!(
            "phi_T(x) has coordinates ({:.6e}, {:.6e}), not ({:.6e}, {:.6e})",
            found.u, found.s, coords.u, coords.s
        ))),
        None => Err(ClosingError::NotNearReturn(format!("phi_T(x) misses the section of radius {eps}"))),
    }
}

/// Roots of `u e^-T eta^2 - ((1+su)e^-T - 1) eta - s = 0`, computed
/// without cancellation.
fn eta_roots(u: f64, s: f64, period: f64) -> (Vec<f64>, f64) {
    let emt = (-period).exp();
    let a = u * emt;
    let b = -((1.0 + s * u) * emt - 1.0);
    let c = -s;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return (Vec::new(), disc);
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = Vec::new();
    if q != 0.0 {
        roots.push(c / q);
    }
    if a != 0.0 {
        roots.push(q / a);
    }
    (roots, disc)
}

/// The flavor-II construction: `eta` from the quadratic, then `sigma` and
/// `T'`.
pub fn closing_formula(u: f64, s: f64, period: f64) -> Result<ClosingFormula> {
    let (roots, discriminant) = eta_roots(u, s, period);
    let window = 2.0 * s.abs() * (-period).exp();
    let mut inside: Vec<f64> = roots.into_iter().filter(|eta| (eta - s).abs() <= window).collect();
    inside.sort_by(|a, b| (a - s).abs().total_cmp(&(b - s).abs()));
    let eta = *inside.first().ok_or(ClosingError::Construction { discriminant })?;
    let sigma = u / (1.0 + (s - eta) * u - eta * u - period.exp());
    let t_prime = period - 2.0 * ((s - eta) * u).ln_1p();
    Ok(ClosingFormula { eta, sigma, t_prime, discriminant, both_roots_qualified: inside.len() > 1 })
}

/// Maximum of `f` sampled on `[from, to]` with step at most `SAMPLE_STEP`.
pub(crate) fn sample_max(from: f64, to: f64, mut f: impl FnMut(f64) -> psl2::Result<f64>) -> psl2::Result<f64> {
    let n = (((to - from).abs() / SAMPLE_STEP).ceil() as usize).max(1);
    let mut max: f64 = 0.0;
    for k in 0..=n {
        max = max.max(f(from + (to - from) * k as f64 / n as f64)?);
    }
    Ok(max)
}

fn dist_to_identity(m: &ProjMatrix) -> psl2::Result<f64> {
    psl2::local_dist(&ProjMatrix::identity(), m)
}

/// Flow time `t` with `x^-1 e x = a_t`, after checking that `e` acts on
/// the frame `x` as a pure flow.
fn flow_action(e: &ProjMatrix, x: &ProjMatrix) -> Result<f64> {
    let m = x.inverse() * *e * *x;
    let big = m.m11().abs().max(m.m22().abs());
    let off = m.m12().abs().max(m.m21().abs());
    if off > FLOW_ACTION_TOL * big {
        return Err(ClosingError::Inconsistent(format!(
            "element does not act as a flow on the frame (off-diagonal {off:.3e} vs {big:.3e})"
        )));
    }
    Ok(if m.m11().abs() >= m.m22().abs() { 2.0 * m.m11().abs().ln() } else { -2.0 * m.m22().abs().ln() })
}

/// Closes the near-return `phi_T(x) = (u, s)_x` into a periodic orbit.
/// `coords.flavor` selects lemma I (`c_u b_s`) or II (`b_s c_u`).
pub fn close_orbit(x: &PhasePoint, period: f64, coords: &SectionCoords) -> Result<ClosingResult> {
    let (u, s, flavor) = (coords.u, coords.s, coords.flavor);
    if period < 1.0 {
        return Err(ClosingError::Hypothesis(format!("T = {period} < 1")));
    }
    if u.abs() >= 0.25 || s.abs() >= 0.25 {
        return Err(ClosingError::Hypothesis(format!("coordinates ({u}, {s}) outside the radius 1/4")));
    }
    // Forward element relative to x: (section a_-T)^-1.
    let forward = ProjMatrix::a(period) * section_element(u, s, flavor).inverse();
    let (axis, _) = psl2::axis_frame(&forward)?;
    let (_, on_section) = flow::locate_root(&axis, flavor, ROOT_BRACKET)?;
    let (sigma, eta) = (on_section.u, on_section.s);
    let shift = section_element(sigma, eta, flavor);
    let t_prime = flow_action(&forward, &shift)?;
    let x_prime = PhasePoint::new(x.lift * shift);
    let orbit = PeriodicOrbit {
        word: Word::identity(),
        element: x.lift.conjugate(&forward),
        frame: x_prime.lift,
        period: t_prime,
        primitive: true,
    };

    let emt = (-period).exp();
    let us = u * s;
    let cosh_lhs = (0.5 * t_prime).exp() + (-0.5 * t_prime).exp();
    let correction = match flavor {
        Flavor::CuBs => us * (0.5 * period).exp(),
        Flavor::BsCu => us * (-0.5 * period).exp(),
    };
    let cosh_rhs = (0.5 * period).exp() + (-0.5 * period).exp() + correction;
    let max_distance = sample_max(0.0, period, |t| dist_to_identity(&section_element(sigma * t.exp(), eta * (-t).exp(), flavor)))?;
    let mut residuals = vec![
        InequalityCheck::le("trace identity |2cosh(T'/2) - rhs| <= 1e-10", (cosh_lhs - cosh_rhs).abs(), 1e-10),
        InequalityCheck::lt("|sigma| < 2|u|e^-T", sigma.abs(), 2.0 * u.abs() * emt),
        InequalityCheck::lt("x' in the section of radius 2 max(|u|,|s|)", sigma.abs().max(eta.abs()), 2.0 * u.abs().max(s.abs())),
    ];
    let mut formula = None;
    match flavor {
        Flavor::CuBs => {
            residuals.push(InequalityCheck::lt(
                "|eta - s| < 2s^2|u| + 2|s|e^-T",
                (eta - s).abs(),
                2.0 * s * s * u.abs() + 2.0 * s.abs() * emt,
            ));
            residuals.push(InequalityCheck::lt(
                "|(T'-T)/2 - ln(1+us)| < 5|us|e^-T",
                (0.5 * (t_prime - period) - us.ln_1p()).abs(),
                5.0 * us.abs() * emt,
            ));
            residuals.push(InequalityCheck::lt("sampled d(phi_t x, phi_t x') < 2|u| + |eta|", max_distance, 2.0 * u.abs() + eta.abs()));
        }
        Flavor::BsCu => {
            residuals.push(InequalityCheck::le("|eta - s| <= 2|s|e^-T", (eta - s).abs(), 2.0 * s.abs() * emt));
            residuals.push(InequalityCheck::lt("|T'-T|/2 < 4|us|e^-T", 0.5 * (t_prime - period).abs(), 4.0 * us.abs() * emt));
            residuals.push(InequalityCheck::le("sampled d(phi_t x, phi_t x') <= 2|u| + |eta|", max_distance, 2.0 * u.abs() + eta.abs()));
            let f = closing_formula(u, s, period)?;
            residuals.push(InequalityCheck::le("formula eta vs axis readback", (f.eta - eta).abs(), 1e-9));
            residuals.push(InequalityCheck::le("formula sigma vs axis readback", (f.sigma - sigma).abs(), 1e-9));
            residuals.push(InequalityCheck::le("formula T' vs axis period", (f.t_prime - t_prime).abs(), 1e-9));
            formula = Some(f);
        }
    }
    Ok(ClosingResult { orbit, x_prime, t_prime, sigma, eta, formula, max_distance, residuals })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectResult {
    pub orbit: PeriodicOrbit,
    /// Period of the connected orbit.
    pub t: f64,
    pub sigma: f64,
    pub eta: f64,
    /// `|(T - T1 - T2)/2 - ln(1+us)|`.
    pub period_residual: f64,
    pub period_bound: f64,
    /// Largest sampled lift distances along the two legs.
    pub leg_distances: [f64; 2],
    pub residuals: Vec<InequalityCheck>,
}

impl ConnectResult {
    pub fn all_pass(&self) -> bool {
        crate::check::all_pass(&self.residuals)
    }
}

/// Merges two periodic orbits whose base points are `eps`-close on a
/// section. `orbit2.element` must be the deck element translating the
/// lift `orbit1.frame * c_u b_s` along its axis; the result is the axis
/// of `Z1 Z2` and its base point `x = g1 c_{u e^-T1 + sigma} b_eta`.
/// `sigma = U - u e^-T1` for the axis point `c_U b_eta` of
/// `a_T1 X a_T2 X^-1`, `X = c_u b_s`. Substituting `U = u e^-T1 + sigma`
/// into the fixed-point quadratic leaves the constant term
/// `-u e^-T2 (1 - e^-T1)` exactly, so the small root keeps full relative
/// precision where the difference `U - u e^-T1` would not.
pub fn connect_sigma(u: f64, s: f64, t1: f64, t2: f64) -> f64 {
    let g = t1.exp();
    let e = (-t2).exp();
    let one_e = -(-t2).exp_m1();
    let p = 1.0 + u * s;
    let a = g * s * one_e;
    let l = 2.0 * s * u * one_e + (p * e - u * s) - g * (p - u * s * e);
    let k = u * e * (-t1).exp_m1();
    let disc = l * l - 4.0 * a * k;
    2.0 * k / (l.abs() + disc.max(0.0).sqrt())
}

pub fn connect_orbits(orbit1: &PeriodicOrbit, x2_coords: &SectionCoords, orbit2: &PeriodicOrbit, eps: f64) -> Result<ConnectResult> {
    let (u, s) = (x2_coords.u, x2_coords.s);
    let (t1, t2) = (orbit1.period, orbit2.period);
    if x2_coords.flavor != Flavor::CuBs {
        return Err(ClosingError::Hypothesis("connecting uses c_u b_s coordinates".into()));
    }
    if t1 + t2 < 1.0 {
        return Err(ClosingError::Hypothesis(format!("T1 + T2 = {} < 1", t1 + t2)));
    }
    if u.abs() >= eps || s.abs() >= eps {
        return Err(ClosingError::Hypothesis(format!("x2 = ({u:.3e}, {s:.3e}) not in the section of radius {eps}")));
    }
    let us = u * s;
    if us.abs() <= DEGENERATE_US {
        return Err(ClosingError::Degenerate { us });
    }
    let g1 = orbit1.frame;
    let z2_rel = g1.inverse() * orbit2.element * g1;
    let t2_seen = flow_action(&z2_rel, &ProjMatrix::c(u).compose(&ProjMatrix::b(s)))?;
    if (t2_seen - t2).abs() > 1e-8 * t2.max(1.0) {
        return Err(ClosingError::Inconsistent(format!("orbit2 translates x2 by {t2_seen:.12}, expected period {t2:.12}")));
    }
    let z1_rel = g1.inverse() * orbit1.element * g1;
    let t1_seen = flow_action(&z1_rel, &ProjMatrix::identity())?;
    if (t1_seen - t1).abs() > 1e-8 * t1.max(1.0) {
        return Err(ClosingError::Inconsistent(format!("orbit1 frame is not on its axis ({t1_seen} vs {t1})")));
    }
    // Relative to g1: Z1 = a_T1 exactly.
    let forward = ProjMatrix::a(t1) * z2_rel;
    let (axis, t) = psl2::axis_frame(&forward)?;
    let (_, on_section) = flow::locate_root(&axis, Flavor::CuBs, ROOT_BRACKET)?;
    let e1 = (-t1).exp();
    let sigma = connect_sigma(u, s, t1, t2);
    let big_u = u * e1 + sigma;
    let eta = on_section.s;
    let readback_gap = (on_section.u - big_u).abs();
    let base = ProjMatrix::c(big_u) * ProjMatrix::b(eta);
    let t_action = flow_action(&forward, &base)?;

    let leg1 = sample_max(0.0, t1, |t| dist_to_identity(&(ProjMatrix::c(big_u * t.exp()) * ProjMatrix::b(eta * (-t).exp()))))?;
    let leg2 = sample_max(0.0, t2, |t| {
        let m = ProjMatrix::b(-s * (-t).exp()) * ProjMatrix::c(sigma * (t1 + t).exp()) * ProjMatrix::b(eta * (-t1 - t).exp());
        dist_to_identity(&m)
    })?;
    let e12 = (-t1 - t2).exp();
    let period_residual = (0.5 * (t - t1 - t2) - us.ln_1p()).abs();
    let period_bound = 3.0 * us.abs() * (e1 + (-t2).exp()) + 8.0 * us.abs() * e12;
    let residuals = vec![
        InequalityCheck::lt("|(T-T1-T2)/2 - ln(1+us)| < 3|us|(e^-T1+e^-T2) + 8|us|e^-(T1+T2)", period_residual, period_bound),
        InequalityCheck::lt("|sigma| < 2|u|e^-(T1+T2)", sigma.abs(), 2.0 * u.abs() * e12),
        InequalityCheck::lt("|eta - s| < 2s^2|u| + 2|s|e^-(T1+T2)", (eta - s).abs(), 2.0 * s * s * u.abs() + 2.0 * s.abs() * e12),
        InequalityCheck::le("base point period matches the trace", (t_action - t).abs(), 1e-9 * t.max(1.0)),
        InequalityCheck::le("axis readback of U matches the closed form", readback_gap, 1e-9 * u.abs()),
        InequalityCheck::lt("sampled d(phi_t x, phi_t x1) < 5 eps on [0, T1]", leg1, 5.0 * eps),
        InequalityCheck::lt("sampled d(phi_(t+T1) x, phi_t x2) < 5 eps on [0, T2]", leg2, 5.0 * eps),
    ];
    let orbit = PeriodicOrbit {
        word: orbit1.word.concat(&orbit2.word),
        element: orbit1.element * orbit2.element,
        frame: g1 * base,
        period: t,
        primitive: true,
    };
    Ok(ConnectResult { orbit, t, sigma, eta, period_residual, period_bound, leg_distances: [leg1, leg2], residuals })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowReport {
    /// Stable and unstable leaf parameters: `w = x1 b_t1 = x2 c_t2`.
    pub stable_param: f64,
    pub unstable_param: f64,
    pub samples: usize,
    /// Largest `d(phi_t x1, phi_t w) / (eps e^-t)` over `t in [0, span]`.
    pub forward_max_ratio: Option<f64>,
    /// Largest `d(phi_t x2, phi_t w) / (eps e^t)` over `t in [-span, 0]`.
    pub backward_max_ratio: Option<f64>,
}

impl ShadowReport {
    pub fn pass(&self) -> bool {
        self.forward_max_ratio.is_none_or(|r| r < 1.0) && self.backward_max_ratio.is_none_or(|r| r < 1.0)
    }
}

/// Samples the two exponential shadowing bounds for `w` on the local
/// stable leaf of `x1` and the local unstable leaf of `x2`.
pub fn shadow_verify(x1: &PhasePoint, x2: &PhasePoint, w: &PhasePoint, eps: f64, t_span: f64) -> Result<ShadowReport> {
    let r1 = x1.lift.inverse() * w.lift;
    let r2 = x2.lift.inverse() * w.lift;
    let on_leaf = |m: &ProjMatrix, upper: bool| {
        let off = if upper { m.m21() } else { m.m12() };
        off.abs() < 1e-12 && (m.m11() - 1.0).abs() < 1e-12 && (m.m22() - 1.0).abs() < 1e-12
    };
    if !on_leaf(&r1, true) {
        return Err(ClosingError::Hypothesis("w is not on the stable leaf of x1".into()));
    }
    if !on_leaf(&r2, false) {
        return Err(ClosingError::Hypothesis("w is not on the unstable leaf of x2".into()));
    }
    let (t1, t2) = (r1.m12(), r2.m21());
    if t1.abs() >= eps || t2.abs() >= eps {
        return Err(ClosingError::Hypothesis(format!("leaf parameters ({t1:.3e}, {t2:.3e}) exceed eps = {eps}")));
    }
    if t_span <= 0.0 {
        return Ok(ShadowReport { stable_param: t1, unstable_param: t2, samples: 0, forward_max_ratio: None, backward_max_ratio: None });
    }
    let n = ((t_span / SAMPLE_STEP).ceil() as usize).max(1);
    let mut fwd: f64 = 0.0;
    let mut bwd: f64 = 0.0;
    for k in 0..=n {
        let t = t_span * k as f64 / n as f64;
        let df = dist_to_identity(&ProjMatrix::b(t1 * (-t).exp()))?;
        fwd = fwd.max(df / (eps * (-t).exp()));
        let db = dist_to_identity(&ProjMatrix::c(t2 * (-t).exp()))?;
        bwd = bwd.max(db / (eps * (-t).exp()));
    }
    Ok(ShadowReport { stable_param: t1, unstable_param: t2, samples: n + 1, forward_max_ratio: Some(fwd), backward_max_ratio: Some(bwd) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn coords(u: f64, s: f64, flavor: Flavor) -> SectionCoords {
        SectionCoords::new(u, s, 0.0, flavor)
    }

    fn base() -> PhasePoint {
        PhasePoint::new(ProjMatrix::d_theta(0.7) * ProjMatrix::a(0.4) * ProjMatrix::b(0.2))
    }

    #[test]
    fn near_return_traces() {
        // tr(c_u b_s a_-T) = e^-T/2 + (1+us) e^T/2.
        let x = base();
        let z1 = near_return_element(&x, 3.0, &coords(0.1, 0.1, Flavor::CuBs));
        assert_abs_diff_eq!(z1.trace().abs(), 4.749636, epsilon = 1e-6);
        let z2 = near_return_element(&x, 3.0, &coords(0.1, 0.1, Flavor::BsCu));
        assert_abs_diff_eq!(z2.trace().abs(), 4.707050, epsilon = 1e-6);
        let oracle = (-1.5f64).exp() + 1.01 * 1.5f64.exp();
        assert_abs_diff_eq!(z1.trace().abs(), oracle, epsilon = 1e-12);
        let z0 = near_return_element(&x, 3.0, &coords(0.0, 0.0, Flavor::CuBs));
        assert_abs_diff_eq!(psl2::translation_length(&z0), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn closing_flavor_one_example() {
        let r = close_orbit(&base(), 3.0, &coords(0.1, 0.1, Flavor::CuBs)).unwrap();
        let oracle = 2.0 * (4.749636f64 / 2.0).acosh();
        assert_abs_diff_eq!(r.t_prime, oracle, epsilon = 1e-5);
        assert_abs_diff_eq!(r.t_prime, 3.02093, epsilon = 1e-5);
        assert!(r.all_pass(), "{:#?}", r.residuals);
        // x' is periodic under the closed orbit's element.
        let moved = r.orbit.element * r.x_prime.lift;
        assert!(moved.proj_equal(&(r.x_prime.lift * ProjMatrix::a(r.t_prime)), 1e-9));
    }

    #[test]
    fn closing_flavor_two_matches_formula() {
        for (u, s, t) in [(0.1, 0.1, 3.0), (-0.2, 0.15, 1.0), (0.05, -0.22, 7.5)] {
            let r = close_orbit(&base(), t, &coords(u, s, Flavor::BsCu)).unwrap();
            assert!(r.all_pass(), "{:#?}", r.residuals);
            let f = r.formula.unwrap();
            assert_abs_diff_eq!(f.eta, r.eta, epsilon = 1e-9);
        }
    }

    #[test]
    fn closing_degenerate_cases() {
        let x = base();
        let r = close_orbit(&x, 2.0, &coords(0.0, 0.0, Flavor::CuBs)).unwrap();
        assert!(r.sigma.abs() < 1e-12 && r.eta.abs() < 1e-12);
        assert_abs_diff_eq!(r.t_prime, 2.0, epsilon = 1e-12);
        assert!(r.x_prime.lift.proj_equal(&x.lift, 1e-12));
        // u = 0: linear equation, eta = s / (1 - e^-T).
        let t = 2.5;
        let f = closing_formula(0.0, 0.1, t).unwrap();
        assert_abs_diff_eq!(f.eta, 0.1 / (1.0 - (-t).exp()), epsilon = 1e-15);
        assert_eq!(f.sigma, 0.0);
        assert_eq!(f.t_prime, t);
        let r = close_orbit(&x, t, &coords(0.0, 0.1, Flavor::BsCu)).unwrap();
        // Strict bounds proportional to |u| degenerate to 0 < 0; there the
        // left side must vanish exactly.
        for c in &r.residuals {
            assert!(c.pass || (c.rhs == 0.0 && c.lhs.abs() < 1e-15), "{c:?}");
        }
        assert_abs_diff_eq!(r.eta, 0.1 / (1.0 - (-t).exp()), epsilon = 1e-12);
        assert!(matches!(close_orbit(&x, 0.5, &coords(0.0, 0.1, Flavor::BsCu)), Err(ClosingError::Hypothesis(_))));
    }

    #[test]
    fn eta_roots_satisfy_quadratic() {
        let (u, s, t) = (0.2, -0.1, 1.5);
        let (roots, disc) = eta_roots(u, s, t);
        assert!(disc > 0.0 && roots.len() == 2);
        let emt = (-t).exp();
        for eta in roots {
            let val = u * emt * eta * eta - ((1.0 + s * u) * emt - 1.0) * eta - s;
            assert!(val.abs() < 1e-12 * (1.0 + eta * eta), "{val}");
        }
    }

    fn schottky_pair(u: f64, s: f64, t1: f64, t2: f64) -> (PeriodicOrbit, PeriodicOrbit) {
        let g1 = ProjMatrix::d_theta(0.3);
        let g2 = g1 * ProjMatrix::c(u) * ProjMatrix::b(s);
        let z1 = g1.conjugate(&ProjMatrix::a(t1));
        let z2 = g2.conjugate(&ProjMatrix::a(t2));
        let o1 = PeriodicOrbit { word: Word(vec![1]), element: z1, frame: g1, period: t1, primitive: true };
        let o2 = PeriodicOrbit { word: Word(vec![2]), element: z2, frame: g2, period: t2, primitive: true };
        (o1, o2)
    }

    #[test]
    fn connect_pair_bounds() {
        let (u, s) = (0.012, -0.017);
        let (o1, o2) = schottky_pair(u, s, 6.0, 8.0);
        let r = connect_orbits(&o1, &coords(u, s, Flavor::CuBs), &o2, 0.02).unwrap();
        assert!(r.all_pass(), "{:#?}", r.residuals);
        // Trace oracle: Z1 Z2 relative to g1 is a_T1 c_u b_s a_T2 b_-s c_-u.
        let tr =
            (ProjMatrix::a(6.0) * ProjMatrix::c(u) * ProjMatrix::b(s) * ProjMatrix::a(8.0) * ProjMatrix::b(-s) * ProjMatrix::c(-u)).trace();
        assert_abs_diff_eq!(r.t, 2.0 * (tr.abs() / 2.0).acosh(), epsilon = 1e-10);
        assert_eq!(r.orbit.word, Word(vec![1, 2]));
    }

    #[test]
    fn connect_large_periods_track_log() {
        let (u, s) = (0.01, 0.015);
        let (o1, o2) = schottky_pair(u, s, 16.0, 18.0);
        let r = connect_orbits(&o1, &coords(u, s, Flavor::CuBs), &o2, 0.02).unwrap();
        assert!(r.all_pass(), "{:#?}", r.residuals);
        assert!(r.period_residual < 1e-9);
        assert_abs_diff_eq!(0.5 * (r.t - 34.0), (u * s).ln_1p(), epsilon = 1e-9);
    }

    #[test]
    fn connect_rejects_same_orbit() {
        let (o1, _) = schottky_pair(0.01, 0.01, 5.0, 5.0);
        let shifted = o1.clone();
        let err = connect_orbits(&o1, &coords(0.0, 0.0, Flavor::CuBs), &shifted, 0.02).unwrap_err();
        assert!(matches!(err, ClosingError::Degenerate { .. }));
    }

    #[test]
    fn connect_is_associative_on_classes() {
        let g = [ProjMatrix::d_theta(0.2), ProjMatrix::d_theta(1.4), ProjMatrix::d_theta(2.9)];
        let z: Vec<_> = g.iter().zip([3.0, 4.0, 5.0]).map(|(f, t)| f.conjugate(&ProjMatrix::a(t))).collect();
        let left = (z[0] * z[1]) * z[2];
        let right = z[0] * (z[1] * z[2]);
        assert_abs_diff_eq!(left.trace(), right.trace(), epsilon = 1e-10 * left.trace().abs());
    }

    #[test]
    fn shadowing_examples() {
        let x1 = base();
        let same = shadow_verify(&x1, &x1, &x1, 0.05, 5.0).unwrap();
        assert_eq!(same.forward_max_ratio, Some(0.0));
        assert_eq!(same.backward_max_ratio, Some(0.0));
        let w = PhasePoint::new(x1.lift * ProjMatrix::b(0.01));
        let r = shadow_verify(&x1, &w, &w, 0.05, 10.0).unwrap();
        assert!(r.forward_max_ratio.unwrap() <= 1.0 && r.pass());
        let x2 = PhasePoint::new(w.lift * ProjMatrix::c(-0.02));
        let r = shadow_verify(&x1, &x2, &w, 0.05, 10.0).unwrap();
        assert!(r.pass(), "{r:?}");
        assert_abs_diff_eq!(r.unstable_param, 0.02, epsilon = 1e-15);
        let empty = shadow_verify(&x1, &x1, &x1, 0.05, 0.0).unwrap();
        assert_eq!(empty.samples, 0);
    }

    #[test]
    fn connect_sigma_matches_high_precision() {
        // 60-digit fixed point of a_T1 X a_T2 X^-1, minus u e^-T1.
        for (u, s, t1, t2, want) in [
            (0.003, -0.002, 16.0, 35.0, -2.128_654_781_065_533e-25),
            (0.01, 0.02, 2.0, 3.0, -5.864_610_239_187_386e-5),
            (-0.04, 0.03, 1.0, 1.5, 2.262_690_236_609_484_6e-3),
        ] {
            let got = connect_sigma(u, s, t1, t2);
            assert!(((got - want) / want).abs() < 1e-12, "{got:e} vs {want:e}");
        }
    }
}
