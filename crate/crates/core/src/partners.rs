//! Reconnection combinatorics and partner-orbit synthesis.
//!
//! Permutations are stored 0-based (`p[j]` is the image of stretch `j`)
//! and displayed 1-based. The partner of an orbit with loop words
//! `eta_1 .. eta_L` under `P` is the orbit of `eta_(P(j_1)) .. eta_(P(j_L))`
//! where `j_1 = 1` and `j_(k+1) = P(j_k) + 1`: the partner leaves `v_j`
//! along loop `P(j)` and arrives at `v_(P(j)+1)`.

use crate::check::InequalityCheck;
use crate::closing::{self, ClosingError};
use crate::encounters::{self, DetectOptions, Encounter, EncounterError, EncounterPiercing};
use crate::flow::{self, FlowError, PhasePoint, PiercingOptions, SectionCoords};
use crate::fuchsian::{FuchsianError, FuchsianGroup, GroupKind, PeriodicOrbit};
use crate::psl2::{self, nac_decompose, quintuple_product, Flavor, ProjMatrix, Psl2Error};
use crate::word::{self, Word};
use itertools::Itertools;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Largest `L` for which `reconnections` enumerates `S_L`.
pub const MAX_L: usize = 9;
/// Relative trace gap tolerated between the cascade and the reassembled
/// word.
pub const CASCADE_TRACE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartnerError {
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("coordinates out of regime: log argument {0} <= 0")]
    OutOfRegime(f64),
    #[error("word/geometry mismatch: {0}")]
    WordMismatch(String),
    #[error("cascade and word reassembly disagree: relative trace gap {0:.3e}")]
    CascadeMismatch(f64),
    #[error("harness failure: {0}")]
    Harness(String),
    #[error(transparent)]
    Encounter(#[from] EncounterError),
    #[error(transparent)]
    Closing(#[from] ClosingError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Fuchsian(#[from] FuchsianError),
    #[error(transparent)]
    Psl2(#[from] Psl2Error),
}

pub type Result<T> = std::result::Result<T, PartnerError>;

/// Partial permutation, 1-based.
pub type PartialPerm = BTreeMap<usize, usize>;

/// True when `p` is a single cycle of length `p.len()`.
pub fn is_single_cycle(p: &[usize]) -> bool {
    let n = p.len();
    if n == 0 {
        return false;
    }
    let mut j = 0;
    for _ in 1..n {
        j = p[j];
        if j == 0 {
            return false;
        }
    }
    p[j] == 0
}

/// `P_loop P`: `j -> P(j) + 1` (cyclically).
pub fn loop_product(p: &[usize]) -> Vec<usize> {
    let l = p.len();
    p.iter().map(|&x| (x + 1) % l).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reconnection {
    pub l: usize,
    /// 0-based images.
    pub p: Vec<usize>,
    pub pk_sequence: Vec<PartialPerm>,
    /// `P_loop P`, 0-based.
    pub single_cycle_product: Vec<usize>,
}

impl Reconnection {
    pub fn new(p: Vec<usize>) -> Result<Self> {
        let l = p.len();
        if l < 3 {
            return Err(PartnerError::InvalidPermutation(format!("L = {l} < 3")));
        }
        let mut seen = vec![false; l];
        for &x in &p {
            if x >= l || seen[x] {
                return Err(PartnerError::InvalidPermutation(format!("{p:?} is not a permutation")));
            }
            seen[x] = true;
        }
        if p.iter().enumerate().all(|(j, &x)| j == x) {
            return Err(PartnerError::InvalidPermutation("identity".into()));
        }
        let single_cycle_product = loop_product(&p);
        if !is_single_cycle(&single_cycle_product) {
            return Err(PartnerError::InvalidPermutation(format!("P_loop P is not a single cycle for {}", one_based(&p))));
        }
        let pk_sequence = pk_sequence(&p)?;
        Ok(Self { l, p, pk_sequence, single_cycle_product })
    }

    /// 1-based images, e.g. `[2, 3, 1]`.
    pub fn images(&self) -> Vec<usize> {
        self.p.iter().map(|x| x + 1).collect()
    }

    /// Stretch indices `j_1, j_2, ..` visited by the partner (0-based),
    /// starting from stretch 0.
    pub fn visit_order(&self) -> Vec<usize> {
        let mut order = vec![0];
        let mut j = 0;
        for _ in 1..self.l {
            j = self.single_cycle_product[j];
            order.push(j);
        }
        order
    }

    /// Loops traversed by the partner in order (0-based loop indices).
    pub fn loop_sequence(&self) -> Vec<usize> {
        self.visit_order().into_iter().map(|j| self.p[j]).collect()
    }
}

fn one_based(p: &[usize]) -> String {
    format!("{:?}", p.iter().map(|x| x + 1).collect::<Vec<_>>())
}

/// All `P != e` with `P_loop P` a single cycle, in lexicographic order.
pub fn reconnections(l: usize) -> Result<Vec<Reconnection>> {
    if !(3..=MAX_L).contains(&l) {
        return Err(PartnerError::InvalidPermutation(format!("L = {l} outside 3..={MAX_L}")));
    }
    (0..l)
        .permutations(l)
        .filter(|p| p.iter().enumerate().any(|(j, &x)| j != x) && is_single_cycle(&loop_product(p)))
        .map(Reconnection::new)
        .collect()
}

/// `P_0 = P` and `P_k(j) = P_(k-1)(j)` unless `j = P_(k-1)^-1(k)`, which is
/// sent to `P_(k-1)(k+1)`; `P_k` is defined on `{1..L} \ {2..k+1}`.
pub fn pk_sequence(p: &[usize]) -> Result<Vec<PartialPerm>> {
    let l = p.len();
    if l < 3 || !is_single_cycle(&loop_product(p)) {
        return Err(PartnerError::InvalidPermutation(format!("{} is not admissible", one_based(p))));
    }
    let mut seq: Vec<PartialPerm> = vec![p.iter().enumerate().map(|(j, &x)| (j + 1, x + 1)).collect()];
    for k in 1..=l - 3 {
        let prev = &seq[k - 1];
        let pivot = prev
            .iter()
            .find(|(_, &v)| v == k)
            .map(|(&j, _)| j)
            .ok_or_else(|| PartnerError::InvalidPermutation(format!("P_{} does not reach {k}", k - 1)))?;
        let replacement = prev[&(k + 1)];
        let next: PartialPerm =
            prev.iter().filter(|(&j, _)| j != k + 1).map(|(&j, &v)| (j, if j == pivot { replacement } else { v })).collect();
        seq.push(next);
    }
    Ok(seq)
}

/// `P_(k,loop) P_k` is a single cycle on the domain of `P_k`.
pub fn pk_is_single_cycle(pk: &PartialPerm, l: usize) -> bool {
    let step = |j: usize| {
        let v = pk[&j];
        if v == l {
            1
        } else {
            v + 1
        }
    };
    let n = pk.len();
    let start = *pk.keys().next().unwrap();
    let mut j = start;
    for _ in 1..n {
        j = step(j);
        if j == start || !pk.contains_key(&j) {
            return false;
        }
    }
    step(j) == start
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub l: usize,
    pub delta_d: f64,
    pub delta_t: f64,
    pub alpha: f64,
    pub beta: f64,
    pub omega: f64,
    pub kappa: f64,
}

/// The constants of the L-encounter theorem.
pub fn bound_constants(l: usize) -> BoundConstants {
    let h = |p: i32| (3..=l).map(|k| (k as f64).powi(-p)).sum::<f64>();
    let delta_d = 41.0 * h(1);
    let delta_t = 14.0 + 78.0 * h(2);
    let alpha = 6.0 + 468.0 * h(3);
    let beta = 1.0 + 17.0 * h(1);
    let omega = 12.0 * h(4) + 720.0 * h(3) + 21.0 * alpha / l as f64 - 114.0;
    let kappa = 118.0 * h(2) + 312.0 * h(1) + 21.0 * beta / l as f64 - 156.0;
    BoundConstants { l, delta_d, delta_t, alpha, beta, omega, kappa }
}

/// Bounds asserted for a partner: the 3-encounter theorem's constants for
/// `L = 3`, the L-encounter theorem's otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartnerBounds {
    pub coord_cubic: f64,
    pub coord_linear: f64,
    pub period_gap: f64,
    pub distance: f64,
    /// `v_j` lie in the section of radius `radius_factor * eps`.
    pub radius_factor: f64,
    /// Hypothesis `eps < epsilon_star / eps_divisor`.
    pub eps_divisor: f64,
}

impl PartnerBounds {
    pub fn for_l(l: usize) -> Self {
        if l == 3 {
            Self { coord_cubic: 23.0, coord_linear: 6.0, period_gap: 22.0, distance: 10.0, radius_factor: 1.0, eps_divisor: 11.0 }
        } else {
            let c = bound_constants(l);
            Self {
                coord_cubic: c.alpha,
                coord_linear: c.beta,
                period_gap: c.delta_t,
                distance: c.delta_d,
                radius_factor: 3.0 / l as f64,
                eps_divisor: c.delta_d,
            }
        }
    }
}

/// Right side of the action-difference estimate.
pub fn action_bound(l: usize, eps: f64, loop_times: &[f64]) -> f64 {
    let e: Vec<f64> = loop_times.iter().map(|t| (-t).exp()).collect();
    let e2 = eps * eps;
    if l == 3 {
        76.0 * e2 * e2 + 22.0 * e2 * e[0] + 7.0 * e2 * e[1] + 7.0 * e2 * e[2]
    } else {
        let c = bound_constants(l);
        c.omega * e2 * e2 + c.kappa * e2 * e.iter().sum::<f64>()
    }
}

/// The two-sum action difference `Delta S_L` from coordinates `(u_j, s_j)`.
pub fn delta_s_coords(u: &[f64], s: &[f64], rec: &Reconnection) -> Result<f64> {
    let l = rec.l;
    if u.len() != l || s.len() != l {
        return Err(PartnerError::InvalidPermutation(format!("{} coordinates for L = {l}", u.len())));
    }
    // 1-based accessors.
    let uu = |j: usize| u[j - 1];
    let ss = |j: usize| s[j - 1];
    let mut total = 0.0;
    for j in 1..=l - 2 {
        let arg = 1.0 + (uu(j + 1) - uu(j)) * (ss(j + 1) - ss(1));
        if arg <= 0.0 {
            return Err(PartnerError::OutOfRegime(arg));
        }
        total += arg.ln();
    }
    for j in 1..=l - 2 {
        let pk = &rec.pk_sequence[j - 1];
        let fwd = pk[&(j + 1)];
        let back = pk
            .iter()
            .find(|(_, &v)| v == j)
            .map(|(&k, _)| k)
            .ok_or_else(|| PartnerError::InvalidPermutation(format!("P_{} does not reach {j}", j - 1)))?;
        let arg = 1.0 + (uu(fwd) - uu(j)) * (ss(back) - ss(j + 1));
        if arg <= 0.0 {
            return Err(PartnerError::OutOfRegime(arg));
        }
        total += arg.ln();
    }
    Ok(total)
}

pub fn delta_s(enc: &Encounter, rec: &Reconnection) -> Result<f64> {
    if enc.l != rec.l {
        return Err(PartnerError::InvalidPermutation(format!("encounter has L = {}, reconnection {}", enc.l, rec.l)));
    }
    let u: Vec<f64> = enc.piercings.iter().map(|p| p.coords.u).collect();
    let s: Vec<f64> = enc.piercings.iter().map(|p| p.coords.s).collect();
    delta_s_coords(&u, &s, rec)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartnerPiercing {
    /// Stretch index `j` (1-based).
    pub j: usize,
    pub coords: SectionCoords,
    pub time: f64,
    pub point: ProjMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeReport {
    pub t_prime: f64,
    pub relative_trace_gap: f64,
    pub checks: Vec<InequalityCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distinctness {
    /// Oriented cyclic word class of the partner (free groups).
    pub class_word: Word,
    pub word_distinct_from_original: bool,
    /// Coordinate cases: `|u'_j - u_P(j)| < e^-T_P(j)` and
    /// `|s'_j - s_j| < (12/L^3) eps^3 + e^-T_(j-1)`, per `j`.
    pub coordinate_cases: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartnerReport {
    pub reconnection: Reconnection,
    pub partner: PeriodicOrbit,
    /// Loops traversed, 1-based.
    pub loop_sequence: Vec<usize>,
    pub t_prime: f64,
    pub delta_s: f64,
    pub bound_value: f64,
    pub residual: f64,
    pub partner_piercings: Vec<PartnerPiercing>,
    /// `T'_k` for loop `k` (1-based position `k-1`).
    pub t_prime_j: Vec<f64>,
    /// The partner visits `v_j` in the stated cyclic order.
    pub transitions_ok: bool,
    /// Max sampled lift distance along each stretch `j`.
    pub distance_samples: Vec<f64>,
    pub hypotheses: Vec<InequalityCheck>,
    pub cascade: Option<CascadeReport>,
    pub distinctness: Distinctness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub checks: Vec<InequalityCheck>,
    pub pass: bool,
}

impl Verdict {
    pub fn first_failure(&self) -> Option<&InequalityCheck> {
        crate::check::first_failure(&self.checks)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartnerOptions {
    pub ball_length: usize,
    /// Run the constructive cascade for `L = 3`.
    pub cascade: bool,
}

impl Default for PartnerOptions {
    fn default() -> Self {
        Self { ball_length: 1, cascade: true }
    }
}

/// Oriented conjugacy-class representative of a word in a free group.
pub fn class_word(w: &Word) -> Word {
    w.cyclic_reduce().0.min_rotation()
}

fn relative_trace_gap(t1: f64, t2: f64) -> f64 {
    // 2cosh(T/2) ratio, evaluated without overflow.
    let d = 0.5 * (t1 - t2);
    let big = 0.5 * t1.max(t2);
    ((d.abs()).exp_m1() * (1.0 + (-2.0 * big).exp())).abs().max(0.0)
}

/// Builds the partner orbit for `rec`, measures it against the original
/// and, for `L = 3`, runs the constructive cascade as a cross-check.
pub fn synthesize_partner(
    group: &FuchsianGroup,
    orbit: &PeriodicOrbit,
    enc: &Encounter,
    rec: &Reconnection,
    opts: &PartnerOptions,
) -> Result<PartnerReport> {
    let l = enc.l;
    if rec.l != l {
        return Err(PartnerError::InvalidPermutation(format!("encounter has L = {l}, reconnection {}", rec.l)));
    }
    if enc.piercings.iter().any(|p| p.reversed) {
        return Err(PartnerError::WordMismatch("antiparallel piercing among the stretches".into()));
    }
    // Loop words must factor a conjugate of the orbit word.
    let product = enc.loop_words.iter().fold(Word::identity(), |acc, w| acc.concat(w));
    let expected = enc.piercings[0].word.concat(&orbit.word).concat(&enc.piercings[0].word.inverse());
    if product != expected {
        return Err(PartnerError::WordMismatch(format!("loop words multiply to {product}, expected {expected}")));
    }
    let eps = enc.eps;
    let u: Vec<f64> = enc.piercings.iter().map(|p| p.coords.u).collect();
    let s: Vec<f64> = enc.piercings.iter().map(|p| p.coords.s).collect();
    let t = &enc.loop_times;
    let bounds = PartnerBounds::for_l(l);

    let loops = rec.loop_sequence();
    let word = loops.iter().fold(Word::identity(), |acc, &k| acc.concat(&enc.loop_words[k]));
    let element = group.evaluate(&word);
    let partner = PeriodicOrbit::from_element(word.clone(), element)?;
    let t_prime = partner.period;
    let ds = delta_s_coords(&u, &s, rec)?;
    let bound_value = action_bound(l, eps, t);
    let residual = (0.5 * (t_prime - orbit.period) - ds).abs();

    // Partner piercings v_j near (u_P(j), s_j).
    let radius = bounds.radius_factor * eps;
    let popts = PiercingOptions { ball_length: opts.ball_length, ..Default::default() };
    let found = flow::piercings(group, &partner, &enc.base, radius, Flavor::CuBs, false, &popts)?;
    let mut partner_piercings = Vec::new();
    let mut used = vec![false; found.len()];
    for j in 0..l {
        let target = (u[rec.p[j]], s[j]);
        let best = found
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .min_by(|(_, a), (_, b)| {
                let da = (a.coords.u - target.0).abs().max((a.coords.s - target.1).abs());
                let db = (b.coords.u - target.0).abs().max((b.coords.s - target.1).abs());
                da.total_cmp(&db)
            })
            .ok_or_else(|| PartnerError::WordMismatch(format!("no partner piercing left for v_{}", j + 1)))?;
        used[best.0] = true;
        partner_piercings.push(PartnerPiercing { j: j + 1, coords: best.1.coords, time: best.1.time, point: best.1.point });
    }
    // T'_P(j) = t'(v_(P(j)+1)) - t'(v_j) mod T'.
    let mut t_prime_j = vec![0.0; l];
    for j in 0..l {
        let next = (rec.p[j] + 1) % l;
        t_prime_j[rec.p[j]] = (partner_piercings[next].time - partner_piercings[j].time).rem_euclid(t_prime);
    }
    let mut by_time: Vec<usize> = (0..found.len()).collect();
    by_time.sort_by(|&a, &b| found[a].time.total_cmp(&found[b].time));
    let index_of = |pp: &PartnerPiercing| found.iter().position(|f| f.time == pp.time).unwrap();
    let transitions_ok = found.len() == l
        && (0..l).all(|j| {
            let pos = by_time.iter().position(|&i| i == index_of(&partner_piercings[j])).unwrap();
            let succ = by_time[(pos + 1) % found.len()];
            succ == index_of(&partner_piercings[(rec.p[j] + 1) % l])
        });

    // Distance along each stretch: x_P(j) against v_j.
    let mut distance_samples = Vec::new();
    for j in 0..l {
        let x = enc.piercings[rec.p[j]].point;
        let v = partner_piercings[j].point;
        let d = nac_decompose(&(x.inverse() * v), Flavor::CuBs, 1e-12)?;
        let span = t[rec.p[j]].max(t_prime_j[rec.p[j]]);
        let tail = ProjMatrix::a(d.tau);
        let m = closing::sample_max(0.0, span, |tt| {
            let rel = ProjMatrix::c(d.u * tt.exp()) * ProjMatrix::b(d.s * (-tt).exp()) * tail;
            psl2::local_dist(&ProjMatrix::identity(), &rel)
        })
        .unwrap_or(f64::INFINITY);
        distance_samples.push(m);
    }

    let sep = encounters::separation_ok(enc);
    let config = group.config();
    let mut hypotheses = vec![
        InequalityCheck::lt("eps < epsilon_star / divisor", eps, config.epsilon_star / bounds.eps_divisor),
        InequalityCheck::le("separation condition margin >= 0", -sep.min_margin, 0.0),
    ];
    for (j, p) in enc.piercings.iter().enumerate() {
        hypotheses.push(InequalityCheck::lt(
            format!("x_{} in the section of radius eps/L", j + 1),
            p.coords.u.abs().max(p.coords.s.abs()),
            eps / l as f64,
        ));
    }

    let cascade = if l == 3 && opts.cascade { Some(cascade_l3(enc, t_prime)?) } else { None };
    if let Some(c) = &cascade {
        if c.relative_trace_gap >= CASCADE_TRACE_TOL {
            return Err(PartnerError::CascadeMismatch(c.relative_trace_gap));
        }
    }

    let e: Vec<f64> = t.iter().map(|x| (-x).exp()).collect();
    let coordinate_cases = (0..l)
        .map(|j| {
            let pp = &partner_piercings[j].coords;
            (pp.u - u[rec.p[j]]).abs() < e[rec.p[j]] && (pp.s - s[j]).abs() < 12.0 / (l * l * l) as f64 * eps.powi(3) + e[(j + l - 1) % l]
        })
        .collect();
    let class = class_word(&word);
    let distinctness = Distinctness { word_distinct_from_original: class != class_word(&orbit.word), class_word: class, coordinate_cases };
    Ok(PartnerReport {
        reconnection: rec.clone(),
        partner,
        loop_sequence: loops.iter().map(|k| k + 1).collect(),
        t_prime,
        delta_s: ds,
        bound_value,
        residual,
        partner_piercings,
        t_prime_j,
        transitions_ok,
        distance_samples,
        hypotheses,
        cascade,
        distinctness,
    })
}

/// The 3-encounter construction: recentre at `x_1`, close loop 1 with
/// lemma I and loops 2-3 with lemma II, then connect. Everything is
/// evaluated relative to the lift of `x_1`. Returns the cascade period and
/// every intermediate inequality.
fn cascade_l3(enc: &Encounter, t_word: f64) -> Result<CascadeReport> {
    let eps = enc.eps;
    let e2 = eps * eps;
    let e3 = e2 * eps;
    let c = |j: usize| enc.piercings[j].coords;
    let (t1, t2, t3) = (enc.loop_times[0], enc.loop_times[1], enc.loop_times[2]);
    let mut checks = Vec::new();
    let r2 = flow::recenter(&c(0), &c(1), eps)?;
    let r3 = flow::recenter(&c(0), &c(2), eps)?;
    for (k, r) in [(2, &r2), (3, &r3)] {
        let j = k - 1;
        checks.push(InequalityCheck::lt(format!("|u~{k} - (u{k}-u1)| < eps^3/3"), (r.coords.u - (c(j).u - c(0).u)).abs(), e3 / 3.0));
        checks.push(InequalityCheck::lt(format!("|s~{k} - (s{k}-s1)| < eps^3/3"), (r.coords.s - (c(j).s - c(0).s)).abs(), e3 / 3.0));
        checks.push(InequalityCheck::lt(format!("|u~{k} s~{k}| < 5 eps^2/9"), (r.coords.u * r.coords.s).abs(), 5.0 * e2 / 9.0));
        checks.push(InequalityCheck::lt(format!("|tau~{k}| < 8 eps^2/9"), r.tau.abs(), 8.0 * e2 / 9.0));
    }
    let (tu2, ts2, tau2) = (r2.coords.u, r2.coords.s, r2.tau);
    let (tu3, ts3, tau3) = (r3.coords.u, r3.coords.s, r3.tau);
    let tt1 = t1 + tau2;
    let tt2 = t2 - tau2 + tau3;
    let tt3 = t3 - tau3;
    checks.push(InequalityCheck::lt("|T1 - T~1| < 8 eps^2/9", (t1 - tt1).abs(), 8.0 * e2 / 9.0));
    checks.push(InequalityCheck::lt("|T2 - T~2| < 2 eps^2", (t2 - tt2).abs(), 2.0 * e2));
    checks.push(InequalityCheck::lt("|T3 - T~3| < 8 eps^2/9", (t3 - tt3).abs(), 8.0 * e2 / 9.0));

    // Step 1, relative to g1 = identity.
    let g1 = PhasePoint::new(ProjMatrix::identity());
    let close1 = closing::close_orbit(&g1, tt1, &SectionCoords::new(tu2, ts2, 0.0, Flavor::CuBs))?;
    let (sigma2, eta2, hat_t1) = (close1.sigma, close1.eta, close1.t_prime);
    checks.push(InequalityCheck::lt("|T^1 - T1| < 4 eps^2", (hat_t1 - t1).abs(), 4.0 * e2));
    checks.push(InequalityCheck::lt("|sigma2| < 2 eps e^-T~1", sigma2.abs(), 2.0 * eps * (-tt1).exp()));
    checks.push(InequalityCheck::lt("|eta2 - s~2| < 2 eps^3 + 2 eps e^-T~1", (eta2 - ts2).abs(), 2.0 * e3 + 2.0 * eps * (-tt1).exp()));
    checks.extend(close1.residuals.iter().cloned());

    let g2t = PhasePoint::new(ProjMatrix::c(tu2) * ProjMatrix::b(ts2));
    let t23 = tt2 + tt3;
    let close23 = closing::close_orbit(&g2t, t23, &SectionCoords::new(-tu2, -ts2, 0.0, Flavor::BsCu))?;
    let (sigma1, eta1, hat_t23) = (close23.sigma, close23.eta, close23.t_prime);
    checks.push(InequalityCheck::lt("|T^23 - (T~2+T~3)| < eps^2", (hat_t23 - t23).abs(), e2));
    checks.push(InequalityCheck::lt("|sigma1| < 2 eps e^-(T~2+T~3)", sigma1.abs(), 2.0 * eps * (-t23).exp()));
    checks.push(InequalityCheck::lt("|eta1 + s~2| < 2 eps e^-(T~2+T~3)", (eta1 + ts2).abs(), 2.0 * eps * (-t23).exp()));
    checks.extend(close23.residuals.iter().cloned());

    // Step 2: y3 = h2 b_-eta2 c_(u~3 - sigma2) b_(s~3 + eta1 e^-T~2) c_(sigma1 e^T~2).
    let x2 = sigma1 * tt2.exp();
    let y = ts3 + eta1 * (-tt2).exp();
    let q = quintuple_product(-eta2, tu3 - sigma2, y, x2, 0.0)?;
    let rho = q.rho.unwrap_or(0.0);
    let (cu3, cs3, ctau3) = (q.u, q.s, q.tau);
    checks.push(InequalityCheck::lt("|rho3| < 3 eps^2", rho.abs(), 3.0 * e2));
    checks.push(InequalityCheck::lt("|tau3| < 12 eps^2", ctau3.abs(), 12.0 * e2));
    checks.push(InequalityCheck::lt(
        "|u3 - u~3| < 7 eps^3 + 2 eps e^-T~1 + 2 eps e^-T~3",
        (cu3 - tu3).abs(),
        7.0 * e3 + 2.0 * eps * ((-tt1).exp() + (-tt3).exp()),
    ));
    checks.push(InequalityCheck::lt(
        "|s3 - (-eta2 + s~3)| < 16 eps^3 + 2 eps e^-T~2",
        (cs3 - (ts3 - eta2)).abs(),
        16.0 * e3 + 2.0 * eps * (-tt2).exp(),
    ));
    checks.push(InequalityCheck::le(
        "|u3 - (u3-u1)| <= 8 eps^3 + 2 eps e^-T~1 + 2 eps e^-T~3",
        (cu3 - (c(2).u - c(0).u)).abs(),
        8.0 * e3 + 2.0 * eps * ((-tt1).exp() + (-tt3).exp()),
    ));
    checks.push(InequalityCheck::lt(
        "|s3 - (s3-s2)| < 19 eps^3 + 2 eps e^-T~1 + 2 eps e^-T~2",
        (cs3 - (c(2).s - c(1).s)).abs(),
        19.0 * e3 + 2.0 * eps * ((-tt1).exp() + (-tt2).exp()),
    ));
    // Quintuple identity against the matrix product.
    let direct = ProjMatrix::b(-eta2) * ProjMatrix::c(tu3 - sigma2) * ProjMatrix::b(y) * ProjMatrix::c(x2);
    let fromq = ProjMatrix::c(cu3) * ProjMatrix::b(cs3) * ProjMatrix::a(ctau3);
    checks.push(InequalityCheck::le("quintuple decomposition of y3", direct.max_gap(&fromq), 1e-12));

    let h2 = close1.x_prime.lift;
    let orbit_y2 =
        PeriodicOrbit { word: Word::identity(), element: h2.conjugate(&ProjMatrix::a(hat_t1)), frame: h2, period: hat_t1, primitive: true };
    let y3_frame = h2 * ProjMatrix::c(cu3) * ProjMatrix::b(cs3);
    let orbit_y3 = PeriodicOrbit {
        word: Word::identity(),
        element: y3_frame.conjugate(&ProjMatrix::a(hat_t23)),
        frame: y3_frame,
        period: hat_t23,
        primitive: true,
    };
    let conn = closing::connect_orbits(&orbit_y2, &SectionCoords::new(cu3, cs3, 0.0, Flavor::CuBs), &orbit_y3, eps)?;
    checks.push(InequalityCheck::lt(
        "|(T' - (T^1 + T^23))/2 - ln(1 + u3 s3)| < 5|u3 s3|(e^-T^1 + e^-T^23)",
        (0.5 * (conn.t - hat_t1 - hat_t23) - (cu3 * cs3).ln_1p()).abs(),
        5.0 * (cu3 * cs3).abs() * ((-hat_t1).exp() + (-hat_t23).exp()),
    ));
    checks.push(InequalityCheck::lt("|sigma| < 2 eps e^-(T^1+T^23)", conn.sigma.abs(), 2.0 * eps * (-hat_t1 - hat_t23).exp()));
    checks.push(InequalityCheck::lt("|eta - s3| < 2 eps^3 + eps e^-T2", (conn.eta - cs3).abs(), 2.0 * e3 + eps * (-t2).exp()));
    checks.extend(conn.residuals.iter().cloned());
    Ok(CascadeReport { t_prime: conn.t, relative_trace_gap: relative_trace_gap(conn.t, t_word), checks })
}

/// Checks (i)-(v) of the L-encounter theorem on a report. `others` are
/// the remaining partners of the same encounter, for distinctness. In a
/// free group distinct cyclic words certify distinct orbits; otherwise a
/// pair counts as distinct when the traces differ or both partners satisfy
/// the coordinate cases.
pub fn verify_partner(
    report: &PartnerReport,
    orbit: &PeriodicOrbit,
    enc: &Encounter,
    others: &[PartnerReport],
    free_group: bool,
) -> Verdict {
    let l = enc.l;
    let eps = enc.eps;
    let bounds = PartnerBounds::for_l(l);
    let p = &report.reconnection.p;
    let t = &enc.loop_times;
    let sum_e: f64 = t.iter().map(|x| (-x).exp()).sum();
    let coord_bound = bounds.coord_cubic * eps.powi(3) + bounds.coord_linear * eps * sum_e;
    let mut checks = Vec::new();
    let residual = (0.5 * (report.t_prime - orbit.period) - report.delta_s).abs();
    if l == 3 {
        checks.push(InequalityCheck::lt(
            "(i) |(T'-T)/2 - dS_3| < 76eps^4 + 22eps^2e^-T1 + 7eps^2e^-T2 + 7eps^2e^-T3",
            residual,
            report.bound_value,
        ));
    } else {
        checks.push(InequalityCheck::le("(i) |(T'-T)/2 - dS_L| <= omega_L eps^4 + kappa_L eps^2 sum e^-T_j", residual, report.bound_value));
    }
    for pp in &report.partner_piercings {
        let j = pp.j - 1;
        let x = &enc.piercings[p[j]].coords;
        let own = &enc.piercings[j].coords;
        checks.push(InequalityCheck::lt(
            format!("(ii) |u'_{} - u_P({})| < alpha eps^3 + beta eps sum e^-T", pp.j, pp.j),
            (pp.coords.u - x.u).abs(),
            coord_bound,
        ));
        checks.push(InequalityCheck::lt(
            format!("(ii) |s'_{} - s_{}| < alpha eps^3 + beta eps sum e^-T", pp.j, pp.j),
            (pp.coords.s - own.s).abs(),
            coord_bound,
        ));
        checks.push(InequalityCheck::lt(
            format!("(ii) v_{} in the section of radius {}eps", pp.j, bounds.radius_factor),
            pp.coords.u.abs().max(pp.coords.s.abs()),
            bounds.radius_factor * eps,
        ));
    }
    for (k, (tp, tk)) in report.t_prime_j.iter().zip(t).enumerate() {
        checks.push(InequalityCheck::lt(
            format!("(iii) |T'_{} - T_{}| < dT eps^2", k + 1, k + 1),
            (tp - tk).abs(),
            bounds.period_gap * eps * eps,
        ));
    }
    checks.push(InequalityCheck::le("(iii) sum T'_j = T'", (report.t_prime_j.iter().sum::<f64>() - report.t_prime).abs(), 1e-8));
    checks.push(InequalityCheck::le("(a) partner visits v_j -> v_(P(j)+1)", f64::from(u8::from(!report.transitions_ok)), 0.0));
    for (j, d) in report.distance_samples.iter().enumerate() {
        checks.push(InequalityCheck::lt(format!("(iv) d(phi_t x_P({}), phi_t v_{}) < dd eps", j + 1, j + 1), *d, bounds.distance * eps));
    }
    let cases = |r: &PartnerReport| r.distinctness.coordinate_cases.iter().all(|&c| c);
    let distinct_original = if free_group {
        class_word(&orbit.word) != report.distinctness.class_word
    } else {
        relative_trace_gap(orbit.period, report.t_prime) > CASCADE_TRACE_TOL || cases(report)
    };
    checks.push(InequalityCheck::le("(v) partner differs from the original", f64::from(u8::from(!distinct_original)), 0.0));
    for other in others {
        if other.reconnection.p == *p {
            continue;
        }
        let distinct = if free_group {
            other.distinctness.class_word != report.distinctness.class_word
        } else {
            relative_trace_gap(other.t_prime, report.t_prime) > CASCADE_TRACE_TOL
                || (other.distinctness.class_word != report.distinctness.class_word && cases(report) && cases(other))
        };
        checks.push(InequalityCheck::le(
            format!("(v) partner {} differs from {}", one_based(p), one_based(&other.reconnection.p)),
            f64::from(u8::from(!distinct)),
            0.0,
        ));
    }
    let pass = crate::check::all_pass(&checks);
    Verdict { checks, pass }
}

/// All partners of an encounter, in lexicographic order of `P`, each with
/// its verdict.
pub fn synthesize_all(
    group: &FuchsianGroup,
    orbit: &PeriodicOrbit,
    enc: &Encounter,
    opts: &PartnerOptions,
) -> Result<Vec<(PartnerReport, Verdict)>> {
    use rayon::prelude::*;
    let recs = reconnections(enc.l)?;
    let reports: Vec<PartnerReport> =
        recs.par_iter().map(|r| synthesize_partner(group, orbit, enc, r, opts)).collect::<Result<Vec<_>>>()?;
    Ok(reports
        .iter()
        .map(|r| {
            let v = verify_partner(r, orbit, enc, &reports, group.kind() == GroupKind::Schottky);
            (r.clone(), v)
        })
        .collect())
}

/// A synthetic orbit with a planted L-encounter.
#[derive(Clone, Debug)]
pub struct Harness {
    pub group: FuchsianGroup,
    pub orbit: PeriodicOrbit,
    /// Encounter built from the planted data, relative to the planted base.
    pub planted: Encounter,
    /// Encounter found by detection, rebased to the planted base.
    pub detected: Encounter,
    /// The loop elements pass the isometric-disk ping-pong test, so the
    /// group is free and discrete.
    pub certified: bool,
}

/// Loop times `16, 17, ..`: long enough for the ping-pong certificate at
/// `eps = 0.02` and `L <= 5`.
pub fn default_loop_times(l: usize) -> Vec<f64> {
    (0..l).map(|j| 16.0 + j as f64).collect()
}

/// Default planted coordinates: two permutations of an evenly spaced grid
/// in `(-0.4, 0.4) eps/L`.
pub fn default_targets(l: usize, eps: f64) -> Vec<(f64, f64)> {
    let r = eps / l as f64;
    let grid: Vec<f64> = (0..l).map(|k| -0.4 * r + 0.8 * r * k as f64 / (l - 1) as f64).collect();
    (0..l).map(|j| (grid[(j + 1) % l], grid[l - 1 - j])).collect()
}

/// Plants an L-encounter: stretch `j` passes through `F_j = base c_(u_j)
/// b_(s_j)` and the group is generated by the loop elements
/// `m_j = F_j a_(T_j) F_(j+1)^-1`, so the orbit of `m_1 .. m_L` pierces
/// the section at `base` exactly at the targets.
pub fn synthetic_encounter(l: usize, targets: &[(f64, f64)], loop_times: &[f64], eps: f64, base: ProjMatrix) -> Result<Harness> {
    if targets.len() != l || loop_times.len() != l || l < 2 {
        return Err(PartnerError::Harness(format!("need {l} targets and loop times")));
    }
    if loop_times.iter().any(|&t| t < 1.0) {
        return Err(PartnerError::Harness("loop times must be at least 1".into()));
    }
    let frames: Vec<ProjMatrix> = targets.iter().map(|&(u, s)| base * ProjMatrix::c(u) * ProjMatrix::b(s)).collect();
    let gens: Vec<ProjMatrix> = (0..l).map(|j| frames[j] * ProjMatrix::a(loop_times[j]) * frames[(j + 1) % l].inverse()).collect();
    let labels: Vec<String> = (1..=l).map(|j| format!("m{j}")).collect();
    let certified = crate::fuchsian::ping_pong_gap(&gens).is_some_and(|g| g > 0.0);
    let group = FuchsianGroup::new_uncertified(GroupKind::Schottky, labels, gens, Vec::new())?;
    let word = Word((1..=l).map(|k| word::letter(k - 1, false)).collect());
    let period: f64 = loop_times.iter().sum();
    let orbit = PeriodicOrbit { element: group.evaluate(&word), word, frame: frames[0], period, primitive: true };
    let mut time = 0.0;
    let mut prefix = Word::identity();
    let mut planted_piercings = Vec::new();
    for j in 0..l {
        let (u, s) = targets[j];
        planted_piercings.push(EncounterPiercing {
            time,
            coords: SectionCoords::new(u, s, 0.0, Flavor::CuBs),
            point: frames[j],
            word: prefix.inverse(),
            reversed: false,
        });
        time += loop_times[j];
        prefix = prefix.concat(&Word::single(word::letter(j, false)));
    }
    let radius = eps / l as f64;
    let planted = encounters::encounter_from_piercings(&orbit, PhasePoint::new(base), eps, radius, planted_piercings)?;
    if !certified {
        // Without discreteness, lifts may be asymptotic and detection merges
        // them into clusters; the planted encounter is exact.
        let detected = planted.clone();
        return Ok(Harness { group, orbit, planted, detected, certified });
    }
    let scan = encounters::detect_encounters(&group, &orbit, eps, l, &DetectOptions { ball_length: 1, include_antiparallel: true })?;
    let found = scan
        .encounters
        .into_iter()
        .find(|e| e.l == l)
        .ok_or_else(|| PartnerError::Harness(format!("planted {l}-encounter not detected")))?;
    // The detected piercings may lie on another lift: carry the planted base
    // over by the deck element matching stretch 1 in time.
    let first = &planted.piercings[0];
    let shift = (0..found.piercings.len())
        .min_by(|&a, &b| {
            let gap = |i: usize| cyclic_gap(found.piercings[i].time, first.time, orbit.period);
            gap(a).total_cmp(&gap(b))
        })
        .expect("an encounter has piercings");
    let q = &found.piercings[shift];
    let mut delta = (first.time - q.time).rem_euclid(orbit.period);
    if delta > 0.5 * orbit.period {
        delta -= orbit.period;
    }
    let deck_base = q.point * ProjMatrix::a(delta) * first.point.inverse() * base;
    let mut detected = found.rebase(PhasePoint::new(deck_base))?;
    if shift != 0 {
        detected = rotate_encounter(&detected, &orbit, shift)?;
    }
    let p1 = &detected.piercings[0].coords;
    if (p1.u - targets[0].0).abs() > 1e-6 || (p1.s - targets[0].1).abs() > 1e-6 {
        return Err(PartnerError::Harness("detected stretch 1 does not match the first target".into()));
    }
    Ok(Harness { group, orbit, planted, detected, certified })
}

fn cyclic_gap(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Relabels an encounter so that stretch `shift` becomes stretch 1.
pub fn rotate_encounter(enc: &Encounter, orbit: &PeriodicOrbit, shift: usize) -> Result<Encounter> {
    let l = enc.l;
    let mut piercings = Vec::with_capacity(l);
    for k in 0..l {
        let mut p = enc.piercings[(k + shift) % l].clone();
        if k + shift >= l {
            p.time += enc.period;
            // gamma F a_(t+T) = gamma Z^-1 F a_t ... keep gamma F a_time = point.
            p.word = p.word.concat(&orbit.word.inverse());
        }
        piercings.push(p);
    }
    Ok(encounters::encounter_from_piercings(orbit, enc.base, enc.eps, enc.radius, piercings)?)
}
