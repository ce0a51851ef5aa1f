//! Detection and measurement of L-parallel encounters on periodic orbits.
//!
//! All lifts of the orbit near the orbit frame are computed once. Seen
//! from a point `H_j a_t` on lift `j`, lift `k` pierces the section with
//! coordinates `(U e^-t, S e^t)` where `H_j^-1 H_k = c_U b_S a_tau`, so the
//! base times at which `k` is inside the section form an explicit interval.
//! Encounters are the maximal sets of overlapping intervals.

use crate::flow::{self, FlowError, OrbitLift, PhasePoint, SectionCoords};
use crate::fuchsian::{FuchsianGroup, PeriodicOrbit};
use crate::psl2::{nac_decompose, Flavor, ProjMatrix, Psl2Error};
use crate::word::Word;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Piercings of two detections closer than this in orbit time are the
/// same stretch.
const SAME_STRETCH_TIME: f64 = 0.5;
const PIVOT_TOL: f64 = 1e-12;
/// Base times are kept within this many time units of the lift's foot.
const BASE_WINDOW: f64 = 60.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncounterError {
    #[error("degenerate encounter data: {0}")]
    Degenerate(String),
    #[error("invalid encounter: {0}")]
    Invalid(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Psl2(#[from] Psl2Error),
}

pub type Result<T> = std::result::Result<T, EncounterError>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectOptions {
    /// Word length of the conjugator ball used to generate lifts.
    pub ball_length: usize,
    pub include_antiparallel: bool,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self { ball_length: 2, include_antiparallel: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncounterPiercing {
    /// Orbit time (not reduced after rebasing).
    pub time: f64,
    /// Coordinates relative to the encounter base.
    pub coords: SectionCoords,
    /// Lift of the piercing point; `gamma F a_time = point`.
    pub point: ProjMatrix,
    /// Word of `gamma`.
    pub word: Word,
    pub reversed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Encounter {
    pub base: PhasePoint,
    /// Theorem-level `eps`; the detection radius is `eps / L_max`.
    pub eps: f64,
    pub radius: f64,
    pub l: usize,
    pub period: f64,
    /// Parallel piercings in orbit-time order.
    pub piercings: Vec<EncounterPiercing>,
    /// `T_j`: time from piercing `j` to piercing `j+1` (cyclically).
    pub loop_times: Vec<f64>,
    /// Deck words `eta_j` with `point_j a_(T_j) = eta_j point_(j+1)`.
    pub loop_words: Vec<Word>,
    /// Time-reversed piercings of the same section, excluded from partner
    /// construction.
    pub antiparallel: Vec<EncounterPiercing>,
    /// Some piercing also belongs to another reported encounter.
    pub ambiguous: bool,
    pub t_s: f64,
    pub t_u: f64,
    pub t_enc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ports {
    pub entrance: Vec<PhasePoint>,
    pub exit: Vec<PhasePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncounterMetrics {
    pub t_s: f64,
    pub t_u: f64,
    pub t_enc: f64,
    /// Coordinates of piercings `2..L` relative to piercing 1.
    pub recentred: Vec<SectionCoords>,
    pub ports: Ports,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncounterScan {
    pub encounters: Vec<Encounter>,
    /// Maximal clusters with more than `L_max` stretches.
    pub skipped_larger: usize,
}

/// Coordinates `(u_j, s_j)` of the parallel piercings.
impl Encounter {
    pub fn coords(&self) -> Vec<(f64, f64)> {
        self.piercings.iter().map(|p| (p.coords.u, p.coords.s)).collect()
    }

    /// Re-expresses the encounter relative to a new base point. Each
    /// piercing is slid along its orbit onto the new section.
    pub fn rebase(&self, base: PhasePoint) -> Result<Encounter> {
        let inv = base.lift.inverse();
        let slide = |p: &EncounterPiercing| -> Result<EncounterPiercing> {
            let d = nac_decompose(&(inv * p.point), Flavor::CuBs, PIVOT_TOL)?;
            let (time, point) = if p.reversed {
                (p.time + d.tau, p.point * ProjMatrix::a(-d.tau))
            } else {
                (p.time - d.tau, p.point * ProjMatrix::a(-d.tau))
            };
            Ok(EncounterPiercing {
                time,
                coords: SectionCoords::new(d.u, d.s, 0.0, Flavor::CuBs),
                point,
                word: p.word.clone(),
                reversed: p.reversed,
            })
        };
        let piercings = self.piercings.iter().map(slide).collect::<Result<Vec<_>>>()?;
        let antiparallel = self.antiparallel.iter().map(slide).collect::<Result<Vec<_>>>()?;
        let mut enc = Encounter { base, piercings, antiparallel, ..self.clone() };
        enc.loop_times = loop_times(&enc.piercings, enc.period);
        enc.refresh_metrics();
        Ok(enc)
    }

    fn refresh_metrics(&mut self) {
        let (t_s, t_u, t_enc) = match encounter_metrics(self) {
            Ok(m) => (m.t_s, m.t_u, m.t_enc),
            Err(_) => (f64::INFINITY, f64::INFINITY, f64::INFINITY),
        };
        self.t_s = t_s;
        self.t_u = t_u;
        self.t_enc = t_enc;
    }
}

fn loop_times(piercings: &[EncounterPiercing], period: f64) -> Vec<f64> {
    let n = piercings.len();
    (0..n)
        .map(|j| if j + 1 < n { piercings[j + 1].time - piercings[j].time } else { period - (piercings[n - 1].time - piercings[0].time) })
        .collect()
}

/// Loop words `eta_j = W_j W_(j+1)^-1` and `eta_L = W_L Z W_1^-1`.
fn loop_words(piercings: &[EncounterPiercing], orbit_word: &Word) -> Vec<Word> {
    let n = piercings.len();
    (0..n)
        .map(|j| {
            let w = &piercings[j].word;
            if j + 1 < n {
                w.concat(&piercings[j + 1].word.inverse())
            } else {
                w.concat(orbit_word).concat(&piercings[0].word.inverse())
            }
        })
        .collect()
}

/// Piercing interval of lift `k` seen from lift `j`.
#[derive(Clone, Copy, Debug)]
struct Window {
    k: usize,
    lo: f64,
    hi: f64,
    u: f64,
    s: f64,
    tau: f64,
}

#[derive(Clone, Debug)]
struct Candidate {
    /// (orbit time in [0, T), lift index, local lift time, coords)
    members: Vec<(f64, usize, f64, f64, f64)>,
    base_lift: usize,
    base_t: f64,
    score: f64,
}

fn cyclic_gap(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// True when every piercing time of `a` matches one of `b`.
fn times_covered(a: &Candidate, b: &Candidate, period: f64) -> bool {
    a.members.iter().all(|x| b.members.iter().any(|y| cyclic_gap(x.0, y.0, period) < SAME_STRETCH_TIME))
}

fn windows_from(lifts: &[OrbitLift], j: usize, radius: f64) -> Vec<Window> {
    let hj_inv = lifts[j].frame.inverse();
    let mut out = Vec::new();
    for (k, lk) in lifts.iter().enumerate() {
        if k == j {
            continue;
        }
        let Ok(d) = nac_decompose(&(hj_inv * lk.frame), Flavor::CuBs, PIVOT_TOL) else { continue };
        // At base `h_j a_t` the coordinates are `(u e^t, s e^-t)`.
        let lo = if d.s == 0.0 { f64::NEG_INFINITY } else { (d.s.abs() / radius).ln() };
        let hi = if d.u == 0.0 { f64::INFINITY } else { (radius / d.u.abs()).ln() };
        let (lo, hi) = (lo.max(-BASE_WINDOW), hi.min(BASE_WINDOW));
        if lo < hi {
            out.push(Window { k, lo, hi, u: d.u, s: d.s, tau: d.tau });
        }
    }
    out
}

/// Maximal sets of simultaneously open windows, with their common range.
fn maximal_overlaps(windows: &[Window]) -> Vec<(Vec<usize>, f64, f64)> {
    let mut cuts: Vec<f64> = windows.iter().flat_map(|w| [w.lo, w.hi]).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut sets: Vec<(Vec<usize>, f64, f64)> = Vec::new();
    for pair in cuts.windows(2) {
        let mid = 0.5 * (pair[0] + pair[1]);
        let active: Vec<usize> = (0..windows.len()).filter(|&i| windows[i].lo < mid && mid < windows[i].hi).collect();
        if active.is_empty() {
            continue;
        }
        let lo = active.iter().map(|&i| windows[i].lo).fold(f64::NEG_INFINITY, f64::max);
        let hi = active.iter().map(|&i| windows[i].hi).fold(f64::INFINITY, f64::min);
        if !sets.iter().any(|(s, _, _)| s == &active) {
            sets.push((active, lo, hi));
        }
    }
    let keep: Vec<bool> =
        sets.iter().map(|(a, _, _)| !sets.iter().any(|(b, _, _)| b.len() > a.len() && a.iter().all(|x| b.contains(x)))).collect();
    sets.into_iter().zip(keep).filter_map(|(s, k)| k.then_some(s)).collect()
}

fn reduce_time(raw: f64, period: f64) -> (f64, i64) {
    let wraps = ((raw + 1e-9) / period).floor();
    (raw - wraps * period, wraps as i64)
}

fn word_with_power(word: &Word, orbit_word: &Word, m: i64) -> Word {
    let power = if m >= 0 { orbit_word.clone() } else { orbit_word.inverse() };
    (0..m.unsigned_abs()).fold(word.clone(), |w, _| w.concat(&power))
}

/// Detects parallel encounters with `2 <= L <= l_max` stretches. The
/// section radius is `eps / l_max`; each encounter is reported relative to
/// its first piercing (smallest orbit time).
pub fn detect_encounters(
    group: &FuchsianGroup,
    orbit: &PeriodicOrbit,
    eps: f64,
    l_max: usize,
    opts: &DetectOptions,
) -> Result<EncounterScan> {
    if l_max < 2 {
        return Err(EncounterError::Invalid(format!("L_max = {l_max} < 2")));
    }
    let radius = eps / l_max as f64;
    let limit = 0.25 * group.config().sigma0_proxy;
    if radius >= limit {
        return Err(FlowError::RadiusTooLarge { eps: radius, limit }.into());
    }
    let lifts = flow::orbit_lifts(group, orbit, &orbit.frame, opts.ball_length)?;
    let period = orbit.period;

    let mut candidates: Vec<Candidate> = Vec::new();
    for j in 0..lifts.len() {
        let windows = windows_from(&lifts, j, radius);
        for (set, lo, hi) in maximal_overlaps(&windows) {
            let a = set.iter().map(|&i| windows[i].u.abs()).fold(0.0, f64::max);
            let b = set.iter().map(|&i| windows[i].s.abs()).fold(0.0, f64::max);
            let balanced = if a > 0.0 && b > 0.0 { 0.5 * (b / a).ln() } else { 0.5 * (lo.max(-BASE_WINDOW) + hi.min(BASE_WINDOW)) };
            let t = balanced.clamp(lo, hi);
            let score = (a * t.exp()).max(b * (-t).exp()) / radius;
            let base_time = reduce_time(t - lifts[j].offset, period).0;
            let mut members = vec![(base_time, j, t, 0.0, 0.0)];
            for &i in &set {
                let w = windows[i];
                let local = t - w.tau;
                let time = reduce_time(local - lifts[w.k].offset, period).0;
                members.push((time, w.k, local, w.u * t.exp(), w.s * (-t).exp()));
            }
            members.sort_by(|x, y| x.0.total_cmp(&y.0));
            candidates.push(Candidate { members, base_lift: j, base_t: t, score });
        }
    }

    // Same encounter seen from different lifts: keep the best centred.
    candidates.sort_by(|a, b| {
        b.members.len().cmp(&a.members.len()).then(a.score.total_cmp(&b.score)).then(a.base_t.abs().total_cmp(&b.base_t.abs()))
    });
    let mut kept: Vec<Candidate> = Vec::new();
    for c in candidates {
        if kept.iter().any(|k| times_covered(&c, k, period)) {
            continue;
        }
        kept.push(c);
    }
    let mut ambiguous = vec![false; kept.len()];
    for a in 0..kept.len() {
        for b in a + 1..kept.len() {
            let shared = kept[a].members.iter().any(|x| kept[b].members.iter().any(|y| cyclic_gap(x.0, y.0, period) < SAME_STRETCH_TIME));
            if shared {
                ambiguous[a] = true;
                ambiguous[b] = true;
            }
        }
    }

    let mut skipped_larger = 0;
    let mut encounters = Vec::new();
    for (c, amb) in kept.into_iter().zip(ambiguous) {
        let l = c.members.len();
        if l > l_max {
            skipped_larger += 1;
            continue;
        }
        let enc = build_encounter(orbit, &lifts, &c, eps, radius, amb, opts.include_antiparallel)?;
        encounters.push(enc);
    }
    encounters.sort_by(|a, b| a.piercings[0].time.total_cmp(&b.piercings[0].time));
    Ok(EncounterScan { encounters, skipped_larger })
}

fn build_encounter(
    orbit: &PeriodicOrbit,
    lifts: &[OrbitLift],
    c: &Candidate,
    eps: f64,
    radius: f64,
    ambiguous: bool,
    include_antiparallel: bool,
) -> Result<Encounter> {
    let period = orbit.period;
    let r = orbit.frame;
    let base_lift = r * lifts[c.base_lift].frame * ProjMatrix::a(c.base_t);
    let mut piercings = Vec::new();
    for &(time, k, local, u, s) in &c.members {
        let raw = local - lifts[k].offset;
        let (_, m) = reduce_time(raw, period);
        piercings.push(EncounterPiercing {
            time,
            coords: SectionCoords::new(u, s, 0.0, Flavor::CuBs),
            point: r * lifts[k].frame * ProjMatrix::a(local),
            word: word_with_power(&lifts[k].word, &orbit.word, m),
            reversed: false,
        });
    }
    let mut antiparallel = Vec::new();
    if include_antiparallel {
        let base_rel_inv = (lifts[c.base_lift].frame * ProjMatrix::a(c.base_t)).inverse();
        for lk in lifts {
            let rev = lk.frame * ProjMatrix::d_pi();
            let Ok(d) = nac_decompose(&(base_rel_inv * rev), Flavor::CuBs, PIVOT_TOL) else { continue };
            if d.u.abs() < radius && d.s.abs() < radius {
                // Point: lift d_pi a_-tau = lift a_tau d_pi, orbit time tau - offset.
                let (time, m) = reduce_time(d.tau - lk.offset, period);
                antiparallel.push(EncounterPiercing {
                    time,
                    coords: SectionCoords::new(d.u, d.s, 0.0, Flavor::CuBs),
                    point: r * rev * ProjMatrix::a(-d.tau),
                    word: word_with_power(&lk.word, &orbit.word, m),
                    reversed: true,
                });
            }
        }
        antiparallel.sort_by(|a, b| a.time.total_cmp(&b.time));
    }
    let mut enc = Encounter {
        base: PhasePoint::new(base_lift),
        eps,
        radius,
        l: piercings.len(),
        period,
        loop_times: loop_times(&piercings, period),
        loop_words: loop_words(&piercings, &orbit.word),
        piercings,
        antiparallel,
        ambiguous,
        t_s: 0.0,
        t_u: 0.0,
        t_enc: 0.0,
    };
    let first = PhasePoint::new(enc.piercings[0].point);
    enc = enc.rebase(first)?;
    Ok(enc)
}

/// Builds an encounter from piercing data supplied directly (harness use).
pub fn encounter_from_piercings(
    orbit: &PeriodicOrbit,
    base: PhasePoint,
    eps: f64,
    radius: f64,
    piercings: Vec<EncounterPiercing>,
) -> Result<Encounter> {
    if piercings.len() < 2 {
        return Err(EncounterError::Invalid("fewer than two piercings".into()));
    }
    let mut enc = Encounter {
        base,
        eps,
        radius,
        l: piercings.len(),
        period: orbit.period,
        loop_times: loop_times(&piercings, orbit.period),
        loop_words: loop_words(&piercings, &orbit.word),
        piercings,
        antiparallel: Vec::new(),
        ambiguous: false,
        t_s: 0.0,
        t_u: 0.0,
        t_enc: 0.0,
    };
    enc.refresh_metrics();
    Ok(enc)
}

/// `t_s`, `t_u`, `t_enc` and the ports, with coordinates recentred at the
/// first piercing.
pub fn encounter_metrics(enc: &Encounter) -> Result<EncounterMetrics> {
    if enc.piercings.len() < 2 {
        return Err(EncounterError::Invalid("fewer than two piercings".into()));
    }
    let first = &enc.piercings[0].coords;
    let mut recentred = Vec::new();
    for p in &enc.piercings[1..] {
        let r = flow::recenter(first, &p.coords, enc.eps)?;
        recentred.push(r.coords);
    }
    if let Some(z) = recentred.iter().position(|c| c.u == 0.0 || c.s == 0.0) {
        return Err(EncounterError::Degenerate(format!("piercing {} has a vanishing coordinate relative to piercing 1", z + 2)));
    }
    let t_s = recentred.iter().map(|c| (enc.eps / c.u.abs()).ln()).fold(f64::INFINITY, f64::min);
    let t_u = recentred.iter().map(|c| (enc.eps / c.s.abs()).ln()).fold(f64::INFINITY, f64::min);
    let umax = recentred.iter().map(|c| c.u.abs()).fold(0.0, f64::max);
    let smax = recentred.iter().map(|c| c.s.abs()).fold(0.0, f64::max);
    let t_enc = (enc.eps * enc.eps / (umax * smax)).ln();
    let ports = Ports {
        entrance: enc.piercings.iter().map(|p| PhasePoint::new(p.point * ProjMatrix::a(-t_s))).collect(),
        exit: enc.piercings.iter().map(|p| PhasePoint::new(p.point * ProjMatrix::a(t_u))).collect(),
    };
    Ok(EncounterMetrics { t_s, t_u, t_enc, recentred, ports })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub ok: bool,
    /// Smallest `lhs - rhs` over all pairs and both families.
    pub min_margin: f64,
    /// First violating pair `(i, j)` (1-based) and the family `"u"`/`"s"`.
    pub violation: Option<(usize, usize, String)>,
}

/// Condition (ii) of the L-encounter theorem for all pairs, with
/// `T_0 = T_L`.
pub fn separation_ok(enc: &Encounter) -> SeparationReport {
    let l = enc.l;
    let eps = enc.eps;
    let e: Vec<f64> = enc.loop_times.iter().map(|t| (-t).exp()).collect();
    let prev = |j: usize| e[(j + l - 1) % l];
    let mut min_margin = f64::INFINITY;
    let mut violation = None;
    for i in 0..l {
        for j in i + 1..l {
            let (ui, si) = (enc.piercings[i].coords.u, enc.piercings[i].coords.s);
            let (uj, sj) = (enc.piercings[j].coords.u, enc.piercings[j].coords.s);
            let mu = (uj - ui).abs() - 1.2 * (e[j] + e[i]);
            let ms = (sj - si).abs() - (24.0 / (l * l * l) as f64 * eps.powi(3) + prev(j) + prev(i));
            for (m, fam) in [(mu, "u"), (ms, "s")] {
                if m < min_margin {
                    min_margin = m;
                }
                if m <= 0.0 && violation.is_none() {
                    violation = Some((i + 1, j + 1, fam.to_string()));
                }
            }
        }
    }
    SeparationReport { ok: violation.is_none(), min_margin, violation }
}

/// Coordinates of the antiparallel 2-encounter produced by a self-crossing
/// at angle `pi - phi`: `s = tan(phi/2)`, `u = -sin(phi/2)cos(phi/2)`,
/// `tau = -2 ln cos(phi/2)`.
pub fn crossing_coords(phi: f64, epsilon_star: f64) -> Result<(f64, f64, f64)> {
    let limit = (1.0f64 / 6.0).min(epsilon_star / 9.0);
    if phi.is_nan() || phi.abs() >= limit {
        return Err(EncounterError::Invalid(format!("|phi| = {phi} not below {limit}")));
    }
    let h = 0.5 * phi;
    Ok((-h.sin() * h.cos(), h.tan(), -2.0 * h.cos().ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn piercing(u: f64, s: f64, time: f64) -> EncounterPiercing {
        EncounterPiercing {
            time,
            coords: SectionCoords::new(u, s, 0.0, Flavor::CuBs),
            point: ProjMatrix::c(u) * ProjMatrix::b(s),
            word: Word::identity(),
            reversed: false,
        }
    }

    fn toy_orbit(period: f64) -> PeriodicOrbit {
        PeriodicOrbit::from_element(Word(vec![1]), ProjMatrix::a(period)).unwrap()
    }

    #[test]
    fn metrics_examples() {
        let eps = 0.02;
        let v = eps * (-5.0f64).exp();
        let orbit = toy_orbit(20.0);
        let enc = encounter_from_piercings(
            &orbit,
            PhasePoint::new(ProjMatrix::identity()),
            eps,
            eps,
            vec![piercing(0.0, 0.0, 0.0), piercing(v, v, 9.0)],
        )
        .unwrap();
        assert_abs_diff_eq!(enc.t_enc, 10.0, epsilon = 1e-12);
        let enc = encounter_from_piercings(
            &orbit,
            PhasePoint::new(ProjMatrix::identity()),
            eps,
            eps,
            vec![piercing(0.0, 0.0, 0.0), piercing(eps / 1f64.exp(), 1e-4, 9.0)],
        )
        .unwrap();
        assert_abs_diff_eq!(enc.t_s, 1.0, epsilon = 1e-12);
        let m = encounter_metrics(&enc).unwrap();
        let back = m.ports.exit[1].lift * ProjMatrix::a(-m.t_u);
        assert!(back.proj_equal(&enc.piercings[1].point, 1e-12));
        assert_eq!(enc.loop_times, vec![9.0, 11.0]);
    }

    #[test]
    fn metrics_reject_vanishing_coordinate() {
        let orbit = toy_orbit(20.0);
        let enc = encounter_from_piercings(
            &orbit,
            PhasePoint::new(ProjMatrix::identity()),
            0.02,
            0.02,
            vec![piercing(0.0, 0.0, 0.0), piercing(0.0, 0.001, 9.0)],
        )
        .unwrap();
        assert!(matches!(encounter_metrics(&enc), Err(EncounterError::Degenerate(_))));
    }

    #[test]
    fn separation_examples() {
        let orbit = toy_orbit(30.0);
        let base = PhasePoint::new(ProjMatrix::identity());
        let good = encounter_from_piercings(
            &orbit,
            base,
            0.02,
            0.02 / 3.0,
            vec![piercing(-0.004, 0.001, 0.0), piercing(0.0, -0.003, 10.0), piercing(0.004, 0.004, 20.0)],
        )
        .unwrap();
        let rep = separation_ok(&good);
        assert!(rep.ok && rep.min_margin > 0.0, "{rep:?}");
        let bad = encounter_from_piercings(
            &orbit,
            base,
            0.02,
            0.02 / 3.0,
            vec![piercing(-0.004, 0.001, 0.0), piercing(0.002, -0.003, 10.0), piercing(0.002, 0.004, 20.0)],
        )
        .unwrap();
        let rep = separation_ok(&bad);
        assert!(!rep.ok);
        assert_eq!(rep.violation, Some((2, 3, "u".to_string())));
        // L = 3 threshold 24/27 eps^3 with negligible loop terms.
        let eps: f64 = 0.02;
        let thr = 24.0 / 27.0 * eps.powi(3);
        let tight = encounter_from_piercings(
            &orbit,
            base,
            eps,
            eps / 3.0,
            vec![piercing(-0.004, 0.0, 0.0), piercing(0.0, 0.9 * thr, 10.0), piercing(0.004, 0.004, 20.0)],
        )
        .unwrap();
        assert_eq!(separation_ok(&tight).violation, Some((1, 2, "s".to_string())));
    }

    #[test]
    fn crossing_examples() {
        assert_eq!(crossing_coords(0.0, 1.0).unwrap(), (0.0, 0.0, -0.0));
        let (u, s, tau) = crossing_coords(0.1, 1.0).unwrap();
        assert_abs_diff_eq!(s, 0.0500417, epsilon = 1e-7);
        assert_abs_diff_eq!(u, -0.0499167, epsilon = 1e-7);
        assert_abs_diff_eq!(tau, 0.0025010, epsilon = 1e-7);
        assert!(u * s < 0.0);
        assert!(crossing_coords(0.2, 1.0).is_err());
        assert!(crossing_coords(0.1, 0.5).is_err());
        // Matrix oracle: the crossing element decomposes to these values.
        let d = nac_decompose(&(ProjMatrix::c(u) * ProjMatrix::b(s) * ProjMatrix::a(tau)), Flavor::CuBs, 1e-12).unwrap();
        assert_abs_diff_eq!(d.tau, tau, epsilon = 1e-15);
    }

    #[test]
    fn short_orbit_has_no_encounter() {
        let group = FuchsianGroup::schottky_default();
        let classes = group.enumerate_conjugacy_classes(2, 100);
        for orbit in &classes.orbits {
            let scan = detect_encounters(&group, orbit, 0.01, 2, &DetectOptions::default()).unwrap();
            assert!(scan.encounters.is_empty(), "{:?}", orbit.word);
        }
    }

    #[test]
    fn radius_above_uniqueness_threshold_is_rejected() {
        let group = FuchsianGroup::schottky_default();
        let orbit = group.enumerate_conjugacy_classes(1, 10).orbits[0].clone();
        let err = detect_encounters(&group, &orbit, 10.0, 2, &DetectOptions::default()).unwrap_err();
        assert!(matches!(err, EncounterError::Flow(FlowError::RadiusTooLarge { .. })));
    }
}
