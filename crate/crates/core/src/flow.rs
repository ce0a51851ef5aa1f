//! Geodesic and horocycle flows on `Gamma \ PSL(2,R)` and Poincare
//! section machinery.
//!
//! Orbit points far along a long periodic orbit are never formed by
//! flowing a lift for a long time (that multiplies round-off by `e^t`).
//! Instead every lift of the orbit geodesic is the axis of a conjugate
//! `gamma Z gamma^-1`, evaluated as a cyclic rotation of the orbit word, and
//! section coordinates are read off that axis near the section base.

use crate::check::InequalityCheck;
use crate::fuchsian::{FuchsianError, FuchsianGroup, PeriodicOrbit};
use crate::psl2::{self, nac_decompose, quintuple_product, Flavor, NacDecomposition, ProjMatrix, Psl2Error};
use crate::word::Word;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::psl2::NacDecomposition as SectionCoords;

/// Piercings are bisected until the residual flow offset is below this.
pub const PIERCING_TAU_TOL: f64 = 1e-10;
/// Two piercings closer than this in orbit time are the same piercing.
const SAME_TIME_TOL: f64 = 1e-7;
/// Decomposition pivot tolerance.
const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("section radius {eps} violates the uniqueness hypothesis eps < sigma0/4 = {limit}")]
    RadiusTooLarge { eps: f64, limit: f64 },
    #[error("uniqueness violation: {0}")]
    UniquenessViolation(String),
    #[error("grid too coarse: no sign change of tau around t = {time:.6}")]
    Resolution { time: f64 },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error(transparent)]
    Psl2(#[from] Psl2Error),
    #[error(transparent)]
    Fuchsian(#[from] FuchsianError),
}

pub type Result<T> = std::result::Result<T, FlowError>;

/// A point `Gamma g` of the quotient, represented by a lift `g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub lift: ProjMatrix,
}

impl PhasePoint {
    pub fn new(lift: ProjMatrix) -> Self {
        Self { lift }
    }

    /// The point `g c_u b_s` (or `g b_s c_u`) of the section at `self`.
    pub fn section_point(&self, coords: &SectionCoords) -> PhasePoint {
        PhasePoint::new(self.lift * coords.section_element())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowKind {
    Geodesic,
    Horocycle,
    ConjHorocycle,
}

/// Right multiplication by `a_t`, `b_t` or `c_t`.
pub fn evolve(x: &PhasePoint, t: f64, kind: FlowKind) -> PhasePoint {
    let step = match kind {
        FlowKind::Geodesic => ProjMatrix::a(t),
        FlowKind::Horocycle => ProjMatrix::b(t),
        FlowKind::ConjHorocycle => ProjMatrix::c(t),
    };
    PhasePoint::new(x.lift * step)
}

/// `Gamma g -> Gamma g d_pi`.
pub fn time_reversal(x: &PhasePoint) -> PhasePoint {
    PhasePoint::new(x.lift * ProjMatrix::d_pi())
}

/// Coordinates of `phi_t(y)` relative to `phi_t(x)`: `(u e^t, s e^-t)`.
pub fn flow_coords(coords: &SectionCoords, t: f64) -> SectionCoords {
    SectionCoords { u: coords.u * t.exp(), s: coords.s * (-t).exp(), ..*coords }
}

fn check_radius(group: &FuchsianGroup, eps: f64) -> Result<()> {
    let limit = 0.25 * group.config().sigma0_proxy;
    if eps >= limit {
        return Err(FlowError::RadiusTooLarge { eps, limit });
    }
    Ok(())
}

/// Coordinates of `y` in the section of radius `eps` at `x_ref`, if `y`
/// lies on it. Searches the cached word ball and insists on uniqueness.
pub fn section_locate(
    group: &FuchsianGroup,
    x_ref: &PhasePoint,
    y: &PhasePoint,
    eps: f64,
    flavor: Flavor,
) -> Result<Option<SectionCoords>> {
    check_radius(group, eps)?;
    let xinv = x_ref.lift.inverse();
    let mut found: Option<(SectionCoords, Word)> = None;
    for (w, g) in &group.cached_ball().entries {
        let rel = xinv * *g * y.lift;
        let Ok(d) = nac_decompose(&rel, flavor, PIVOT_TOL) else { continue };
        if d.tau.abs() <= psl2::EIGEN_TOL && d.u.abs() < eps && d.s.abs() < eps {
            if let Some((prev, pw)) = &found {
                return Err(FlowError::UniquenessViolation(format!(
                    "{} and {} both place y in the section ({:.3e}, {:.3e}) vs ({:.3e}, {:.3e})",
                    group.display_word(pw),
                    group.display_word(w),
                    prev.u,
                    prev.s,
                    d.u,
                    d.s
                )));
            }
            found = Some((d, w.clone()));
        }
    }
    Ok(found.map(|(d, _)| d))
}

/// One lift of an orbit geodesic: the axis of `gamma Z gamma^-1`.
#[derive(Clone, Debug)]
pub struct OrbitLift {
    /// Conjugator as a word.
    pub word: Word,
    pub gamma: ProjMatrix,
    /// Frame relative to the section base: `base * frame` lies on the
    /// lift, at the point nearest `base * i`.
    pub frame: ProjMatrix,
    /// Orbit time of `base * frame`: `gamma F = base * frame * a_offset`.
    pub offset: f64,
}

/// Lifts of the orbit geodesic obtained from conjugators `w p_k^-1`
/// (`p_k` the prefixes of the orbit word, `w` in the ball of length
/// `ball_length`), deduplicated.
pub fn orbit_lifts(group: &FuchsianGroup, orbit: &PeriodicOrbit, base: &ProjMatrix, ball_length: usize) -> Result<Vec<OrbitLift>> {
    let ball = group.word_ball(ball_length)?;
    let n = orbit.word.len().max(1);
    let base_inv = base.inverse();
    let mut lifts: Vec<OrbitLift> = Vec::new();
    for k in 0..n {
        let prefix = Word(orbit.word.letters()[..k.min(orbit.word.len())].to_vec());
        let rotated = orbit.word.rotate(k);
        for (w, _) in &ball.entries {
            let conj_word = w.concat(&rotated).concat(&w.inverse());
            let element = if orbit.word.is_empty() { group.evaluate(w).conjugate(&orbit.element) } else { group.evaluate(&conj_word) };
            let rel = base_inv * element * *base;
            let Ok((frame, _)) = psl2::axis_frame(&rel) else { continue };
            if lifts.iter().any(|l| l.frame.proj_equal(&frame, 1e-7)) {
                continue;
            }
            let word = w.concat(&prefix.inverse());
            let gamma = group.evaluate(&word);
            let m = (*base * frame).inverse() * gamma * orbit.frame;
            let offset = if m.m11().abs() >= m.m22().abs() { 2.0 * m.m11().abs().ln() } else { -2.0 * m.m22().abs().ln() };
            lifts.push(OrbitLift { word, gamma, frame, offset });
        }
    }
    Ok(lifts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piercing {
    pub index: usize,
    /// Orbit time in `[0, T)`.
    pub time: f64,
    pub coords: SectionCoords,
    /// Deck element with `gamma F a_time = base * section_point` (for a
    /// reversed piercing, `gamma F a_time d_pi`).
    pub gamma: ProjMatrix,
    pub word: Word,
    pub reversed: bool,
    /// Lift of the piercing point, `base * c_u b_s`.
    pub point: ProjMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiercingOptions {
    /// Word length of the conjugator ball.
    pub ball_length: usize,
    /// Bracketing step as a fraction of `eps`.
    pub step_fraction: f64,
}

impl Default for PiercingOptions {
    fn default() -> Self {
        Self { ball_length: 2, step_fraction: 0.25 }
    }
}

/// Solves `tau(t) = 0` along `frame * a_t` by bracketing with step `h`
/// around the predicted root and bisecting.
pub(crate) fn locate_root(frame: &ProjMatrix, flavor: Flavor, h: f64) -> Result<(f64, SectionCoords)> {
    let tau_at = |t: f64| -> Result<SectionCoords> { Ok(nac_decompose(&(*frame * ProjMatrix::a(t)), flavor, PIVOT_TOL)?) };
    let guess = -tau_at(0.0)?.tau;
    let (mut lo, mut hi) = (guess - h, guess + h);
    let (f_lo, f_hi) = (tau_at(lo)?.tau, tau_at(hi)?.tau);
    if f_lo.signum() == f_hi.signum() {
        return Err(FlowError::Resolution { time: guess });
    }
    let rising = f_hi > f_lo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let d = tau_at(mid)?;
        if d.tau.abs() <= PIERCING_TAU_TOL || hi - lo < 1e-15 {
            return Ok((mid, d));
        }
        if (d.tau > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    Ok((mid, tau_at(mid)?))
}

/// All times in `[0, T)` where the orbit pierces the section of radius
/// `eps` at `x_ref`, in time order. With `include_reversed`, piercings of
/// the time-reversed orbit are added and tagged.
pub fn piercings(
    group: &FuchsianGroup,
    orbit: &PeriodicOrbit,
    x_ref: &PhasePoint,
    eps: f64,
    flavor: Flavor,
    include_reversed: bool,
    opts: &PiercingOptions,
) -> Result<Vec<Piercing>> {
    check_radius(group, eps)?;
    let lifts = orbit_lifts(group, orbit, &x_ref.lift, opts.ball_length)?;
    piercings_from_lifts(group, orbit, x_ref, &lifts, eps, flavor, include_reversed, opts.step_fraction * eps)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn piercings_from_lifts(
    group: &FuchsianGroup,
    orbit: &PeriodicOrbit,
    x_ref: &PhasePoint,
    lifts: &[OrbitLift],
    eps: f64,
    flavor: Flavor,
    include_reversed: bool,
    step: f64,
) -> Result<Vec<Piercing>> {
    let period = orbit.period;
    let mut out: Vec<Piercing> = Vec::new();
    let orientations: &[bool] = if include_reversed { &[false, true] } else { &[false] };
    for lift in lifts {
        for &reversed in orientations {
            let frame = if reversed { lift.frame * ProjMatrix::d_pi() } else { lift.frame };
            let Ok(d0) = nac_decompose(&frame, flavor, PIVOT_TOL) else { continue };
            if d0.u.abs() >= eps || d0.s.abs() >= eps {
                continue;
            }
            let (t_local, coords) = locate_root(&frame, flavor, step)?;
            if coords.u.abs() >= eps || coords.s.abs() >= eps {
                continue;
            }
            // Forward: gamma F a_t = base frame a_{offset + t}.
            // Reversed: base frame d_pi a_t = base frame a_{-t} d_pi.
            let raw_time = if reversed { -t_local - lift.offset } else { t_local - lift.offset };
            let wraps = (raw_time / period).floor();
            let time = raw_time - wraps * period;
            let m = wraps as i64;
            let power = if m >= 0 { orbit.word.clone() } else { orbit.word.inverse() };
            let mut word = lift.word.clone();
            for _ in 0..m.unsigned_abs() {
                word = word.concat(&power);
            }
            let zpow = if m >= 0 { orbit.element } else { orbit.element.inverse() };
            let gamma = (0..m.unsigned_abs()).fold(lift.gamma, |g, _| g * zpow);
            let point = x_ref.lift * coords.section_element();
            let candidate = Piercing { index: 0, time, coords, gamma, word, reversed, point };
            let same = out.iter().position(|p| {
                p.reversed == reversed && {
                    let dt = (p.time - time).abs();
                    dt.min(period - dt) < SAME_TIME_TOL
                }
            });
            match same {
                Some(i) => {
                    let p = &out[i];
                    if (p.coords.u - coords.u).abs() > 1e-7 || (p.coords.s - coords.s).abs() > 1e-7 {
                        return Err(FlowError::UniquenessViolation(format!(
                            "two lifts pierce at t = {time:.9} with coordinates ({:.3e}, {:.3e}) and ({:.3e}, {:.3e})",
                            p.coords.u, p.coords.s, coords.u, coords.s
                        )));
                    }
                }
                None => out.push(candidate),
            }
        }
    }
    out.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.reversed.cmp(&b.reversed)));
    for (i, p) in out.iter_mut().enumerate() {
        p.index = i;
    }
    let _ = group;
    Ok(out)
}

/// Result of recentring the section from the base `x` to the point `x_A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recentered {
    /// Coordinates of `phi_tau(x_B)` in the section at `x_A`.
    pub coords: SectionCoords,
    pub tau: f64,
    pub checks: Vec<InequalityCheck>,
}

/// Coordinates of `x_B` relative to the section at `x_A`, where both are
/// given relative to a common base. `eps` bounds the input coordinates
/// and sets the asserted bounds.
pub fn recenter(a: &SectionCoords, b: &SectionCoords, eps: f64) -> Result<Recentered> {
    let du = b.u - a.u;
    let ds = b.s - a.s;
    let q = quintuple_product(-a.s, du, b.s, 0.0, 0.0)?;
    // b_{-s_A} c_{du} b_{s_B} = c_u b_s a_{-tau}.
    let tau = -q.tau;
    let e3 = eps.powi(3);
    let checks = vec![
        InequalityCheck::lt("recenter |u - (u2-u1)| < 8 eps^3", (q.u - du).abs(), 8.0 * e3),
        InequalityCheck::lt("recenter |s - (s2-s1)| < 8 eps^3", (q.s - ds).abs(), 8.0 * e3),
        InequalityCheck::lt("recenter |tau| < 8 eps^2", tau.abs(), 8.0 * eps * eps),
        InequalityCheck::le(
            "recenter |us - (u2-u1)(s2-s1)| = |s1 s2|(u2-u1)^2",
            ((q.u * q.s - du * ds).abs() - (a.s * b.s).abs() * du * du).abs(),
            1e-12,
        ),
    ];
    let coords = NacDecomposition { u: q.u, s: q.s, tau: 0.0, flavor: Flavor::CuBs, rho: q.rho };
    Ok(Recentered { coords, tau, checks })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
    Both,
}

/// One implication `hypothesis => conclusion` evaluated on samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Implication {
    pub name: String,
    pub hypothesis: bool,
    pub conclusion: bool,
}

impl Implication {
    pub fn holds(&self) -> bool {
        !self.hypothesis || self.conclusion
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosenessReport {
    pub max_forward: Option<f64>,
    pub max_backward: Option<f64>,
    pub u_gap: f64,
    /// `|s1 - s2 - s1 s2 (u1 - u2)|`.
    pub s_gap: f64,
    pub implications: Vec<Implication>,
    /// Sample time where the lift distance left the local chart.
    pub range_failure: Option<f64>,
}

/// Lift distance between `c_{u1} b_{s1} a_t` and `c_{u2} b_{s2} a_t`.
pub fn section_pair_distance(c1: &SectionCoords, c2: &SectionCoords, t: f64) -> psl2::Result<f64> {
    let (et, emt) = (t.exp(), (-t).exp());
    let rel = ProjMatrix::b(-c1.s * emt) * ProjMatrix::c((c2.u - c1.u) * et) * ProjMatrix::b(c2.s * emt);
    psl2::local_dist(&ProjMatrix::identity(), &rel)
}

fn sample_max(c1: &SectionCoords, c2: &SectionCoords, from: f64, to: f64) -> std::result::Result<f64, f64> {
    let n = (((to - from).abs() / 0.1).ceil() as usize).max(1);
    let mut max: f64 = 0.0;
    for k in 0..=n {
        let t = from + (to - from) * k as f64 / n as f64;
        match section_pair_distance(c1, c2, t) {
            Ok(d) => max = max.max(d),
            Err(_) => return Err(t),
        }
    }
    Ok(max)
}

/// Samples the distance of two section points along `[0, T]`, `[-T, 0]`
/// or both, and evaluates the coordinate/closeness implications: the
/// forward theorem with radius `eps_rho` and constant `rho`, and its
/// converse with radius `eps`.
pub fn closeness_bounds(
    c1: &SectionCoords,
    c2: &SectionCoords,
    period: f64,
    direction: Direction,
    eps: f64,
    rho: f64,
    eps_rho: f64,
) -> ClosenessReport {
    let u_gap = (c1.u - c2.u).abs();
    let s_gap = (c1.s - c2.s - c1.s * c2.s * (c1.u - c2.u)).abs();
    let mut range_failure = None;
    let mut run = |from: f64, to: f64| match sample_max(c1, c2, from, to) {
        Ok(m) => Some(m),
        Err(t) => {
            range_failure.get_or_insert(t);
            None
        }
    };
    let max_forward = matches!(direction, Direction::Forward | Direction::Both).then(|| run(0.0, period)).flatten();
    let max_backward = matches!(direction, Direction::Backward | Direction::Both).then(|| run(0.0, -period)).flatten();
    let decay = (-period).exp();
    let in_section = |r: f64| [c1.u, c1.s, c2.u, c2.s].iter().all(|x| x.abs() < r);
    let mut implications = Vec::new();
    if let Some(f) = max_forward {
        implications.push(Implication {
            name: "forward closeness => |u1-u2| < rho e^-T".into(),
            hypothesis: f < eps_rho,
            conclusion: u_gap < rho * decay,
        });
        implications.push(Implication {
            name: "|u1-u2| < (eps/2) e^-T => forward distance < eps".into(),
            hypothesis: in_section(eps / 5.0) && u_gap < 0.5 * eps * decay,
            conclusion: f < eps,
        });
    }
    if let Some(b) = max_backward {
        implications.push(Implication {
            name: "backward closeness => |s1-s2-s1s2(u1-u2)| < rho e^-T".into(),
            hypothesis: b < eps_rho,
            conclusion: s_gap < rho * decay,
        });
        implications.push(Implication {
            name: "|s1-s2-s1s2(u1-u2)| < (eps/2) e^-T => backward distance < eps".into(),
            hypothesis: in_section(eps / 5.0) && s_gap < 0.5 * eps * decay,
            conclusion: b < eps,
        });
    }
    if let (Some(f), Some(b)) = (max_forward, max_backward) {
        implications.push(Implication {
            name: "two-sided closeness => |u1-u2| < rho e^-T, |s1-s2| < 1.5 rho e^-T".into(),
            hypothesis: f.max(b) < eps_rho,
            conclusion: u_gap < rho * decay && (c1.s - c2.s).abs() < 1.5 * rho * decay,
        });
        implications.push(Implication {
            name: "|u1-u2| + |s1-s2| < (eps/2) e^-T => two-sided distance < eps".into(),
            hypothesis: in_section(eps / 5.0) && u_gap + (c1.s - c2.s).abs() < 0.5 * eps * decay,
            conclusion: f.max(b) < eps,
        });
    }
    ClosenessReport { max_forward, max_backward, u_gap, s_gap, implications, range_failure }
}

/// Default `eps(rho)` for the forward closeness theorem.
pub fn default_eps_rho(rho: f64, sigma0: f64) -> f64 {
    (0.5 * rho).min(sigma0 / (2.0 + 2f64.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn coords(u: f64, s: f64) -> SectionCoords {
        SectionCoords::new(u, s, 0.0, Flavor::CuBs)
    }

    #[test]
    fn evolve_is_a_flow() {
        let x = PhasePoint::new(ProjMatrix::new(2.0, 1.0, 3.0, 2.0).unwrap());
        assert_eq!(evolve(&x, 0.0, FlowKind::Geodesic), x);
        for kind in [FlowKind::Geodesic, FlowKind::Horocycle, FlowKind::ConjHorocycle] {
            let two = evolve(&evolve(&x, 0.3, kind), 0.4, kind);
            assert!(two.lift.proj_equal(&evolve(&x, 0.7, kind).lift, 1e-12));
            let back = evolve(&evolve(&x, 1.3, kind), -1.3, kind);
            assert!(back.lift.proj_equal(&x.lift, 1e-12));
        }
    }

    #[test]
    fn commutation_rules() {
        let (s, t, u) = (0.3, 1.7, -0.2);
        let lhs = ProjMatrix::b(s) * ProjMatrix::a(t);
        assert!(lhs.proj_equal(&(ProjMatrix::a(t) * ProjMatrix::b(s * (-t).exp())), 1e-13));
        let lhs = ProjMatrix::c(u) * ProjMatrix::a(t);
        assert!(lhs.proj_equal(&(ProjMatrix::a(t) * ProjMatrix::c(u * t.exp())), 1e-13));
    }

    #[test]
    fn time_reversal_relations() {
        let x = PhasePoint::new(ProjMatrix::c(0.1) * ProjMatrix::b(0.4) * ProjMatrix::a(0.2));
        assert!(time_reversal(&time_reversal(&x)).lift.proj_equal(&x.lift, 1e-15));
        for t in [-1.0, 0.5, 2.0] {
            let lhs = evolve(&time_reversal(&x), t, FlowKind::Geodesic);
            let rhs = time_reversal(&evolve(&x, -t, FlowKind::Geodesic));
            assert!(lhs.lift.proj_equal(&rhs.lift, 1e-12));
        }
    }

    #[test]
    fn section_locate_examples() {
        let group = FuchsianGroup::schottky_default();
        let x = PhasePoint::new(ProjMatrix::d_theta(0.4) * ProjMatrix::a(0.3));
        let eps = 0.05;
        let same = section_locate(&group, &x, &x, eps, Flavor::CuBs).unwrap().unwrap();
        assert!(same.u.abs() < 1e-12 && same.s.abs() < 1e-12);
        let y = x.section_point(&coords(0.02, -0.01));
        let d = section_locate(&group, &x, &y, eps, Flavor::CuBs).unwrap().unwrap();
        assert_abs_diff_eq!(d.u, 0.02, epsilon = 1e-12);
        assert_abs_diff_eq!(d.s, -0.01, epsilon = 1e-12);
        // Translating y by a deck element does not change the answer.
        let y2 = PhasePoint::new(group.generators()[1] * y.lift);
        let d2 = section_locate(&group, &x, &y2, eps, Flavor::CuBs).unwrap().unwrap();
        assert_abs_diff_eq!(d2.u, 0.02, epsilon = 1e-10);
        let off = evolve(&y, 0.1, FlowKind::Geodesic);
        assert!(section_locate(&group, &x, &off, eps, Flavor::CuBs).unwrap().is_none());
        assert!(matches!(section_locate(&group, &x, &y, 1.0, Flavor::CuBs), Err(FlowError::RadiusTooLarge { .. })));
    }

    #[test]
    fn generator_orbit_pierces_once() {
        let group = FuchsianGroup::schottky_default();
        let orbits = group.enumerate_conjugacy_classes(1, 10);
        let orbit = &orbits.orbits[0];
        let x = orbit.point(0.0);
        let ps = piercings(&group, orbit, &x, 0.05, Flavor::CuBs, false, &PiercingOptions::default()).unwrap();
        assert_eq!(ps.len(), 1);
        assert!(ps[0].time < 1e-9 || orbit.period - ps[0].time < 1e-9);
        assert!(ps[0].coords.u.abs() < 1e-12 && ps[0].coords.s.abs() < 1e-12);
        // Shifted base on the same orbit: pierced at the shift.
        let x2 = orbit.point(1.25);
        let ps2 = piercings(&group, orbit, &x2, 0.05, Flavor::CuBs, false, &PiercingOptions::default()).unwrap();
        assert_eq!(ps2.len(), 1);
        assert_abs_diff_eq!(ps2[0].time, 1.25, epsilon = 1e-9);
    }

    #[test]
    fn reversed_piercings_are_tagged() {
        let group = FuchsianGroup::schottky_default();
        let orbit = group.enumerate_conjugacy_classes(1, 10).orbits[0].clone();
        let x = time_reversal(&orbit.point(0.7));
        let ps = piercings(&group, &orbit, &x, 0.05, Flavor::CuBs, true, &PiercingOptions::default()).unwrap();
        assert_eq!(ps.len(), 1);
        assert!(ps[0].reversed);
        assert_abs_diff_eq!(ps[0].time, 0.7, epsilon = 1e-9);
    }

    #[test]
    fn recenter_examples() {
        let z = coords(0.0, 0.0);
        let b = coords(0.03, -0.01);
        let same = recenter(&b, &b, 0.05).unwrap();
        assert!(same.coords.u.abs() < 1e-15 && same.coords.s.abs() < 1e-15 && same.tau.abs() < 1e-15);
        let from_zero = recenter(&z, &b, 0.05).unwrap();
        assert_abs_diff_eq!(from_zero.coords.u, 0.03, epsilon = 1e-15);
        assert_abs_diff_eq!(from_zero.coords.s, -0.01, epsilon = 1e-15);
        assert_eq!(from_zero.tau, 0.0);
        let a = coords(0.01, 0.02);
        let r = recenter(&a, &b, 0.05).unwrap();
        assert!(r.checks.iter().all(|c| c.pass), "{:?}", r.checks);
        // Matrix oracle: x_A^-1 x_B = c_u b_s a_{-tau}.
        let rel = ProjMatrix::b(-a.s) * ProjMatrix::c(b.u - a.u) * ProjMatrix::b(b.s);
        let d = nac_decompose(&rel, Flavor::CuBs, 1e-12).unwrap();
        assert_abs_diff_eq!(d.u, r.coords.u, epsilon = 1e-15);
        assert_abs_diff_eq!(d.s, r.coords.s, epsilon = 1e-15);
        assert_abs_diff_eq!(d.tau, -r.tau, epsilon = 1e-15);
    }

    #[test]
    fn closeness_examples() {
        let c = coords(0.001, 0.002);
        let rep = closeness_bounds(&c, &c, 8.0, Direction::Both, 0.05, 1.0, 0.5);
        assert_eq!(rep.u_gap, 0.0);
        assert!(rep.implications.iter().all(|i| i.holds()));
        let eps = 0.05;
        let t: f64 = 5.0;
        let c2 = coords(0.001 + 0.9 * 0.5 * eps * (-t).exp(), 0.002);
        let rep = closeness_bounds(&c, &c2, t, Direction::Forward, eps, 1.0, 0.5);
        assert!(rep.implications[1].hypothesis && rep.implications[1].conclusion, "{rep:?}");
        assert!(rep.max_forward.unwrap() < eps);
        let far = coords(0.001 + 3.0 * 0.5 * eps * (-t).exp(), 0.002);
        let rep = closeness_bounds(&c, &far, t, Direction::Forward, eps, 1.0, 0.5);
        assert!(!rep.implications[1].hypothesis);
        assert!(rep.max_forward.unwrap() > eps);
        let escaped = closeness_bounds(&c, &coords(0.04, 0.04), t, Direction::Forward, eps, 1.0, 0.5);
        assert!(escaped.range_failure.is_some() && escaped.implications.is_empty());
    }
}
