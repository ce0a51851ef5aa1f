//! Discrete subgroups of PSL(2,R): the Bolza octagon group, Schottky
//! groups and explicit presentations, with word balls, conjugacy classes,
//! quotient distance and systole.

use crate::flow::PhasePoint;
use crate::psl2::{self, classify, ElementKind, ProjMatrix, Psl2Error};
use crate::word::{generator_index, letter, Letter, Word};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::OnceLock;
use thiserror::Error;

/// Relator words must evaluate to the identity within this.
pub const RELATOR_TOL: f64 = 1e-9;
/// Default cap on the number of enumerated conjugacy classes.
pub const DEFAULT_CLASS_CAP: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FuchsianError {
    #[error("invalid presentation: relator {index} evaluates {residual:.3e} away from identity")]
    InvalidPresentation { index: usize, residual: f64 },
    #[error("generator {index} is not hyperbolic (|tr| = {trace:.6})")]
    NonHyperbolicGenerator { index: usize, trace: f64 },
    #[error("generator {index} is not unimodular (det = {det:.6e})")]
    NotUnimodular { index: usize, det: f64 },
    #[error("discreteness check failed: {0}")]
    NotDiscrete(String),
    #[error("unknown generator label {0:?}")]
    UnknownLabel(String),
    #[error("unknown group kind {0:?}")]
    UnknownKind(String),
    #[error("group needs at least one generator")]
    NoGenerators,
    #[error("distance out of range: no ball element brings the lifts within the local chart")]
    DistanceOutOfRange,
    #[error(transparent)]
    Psl2(#[from] Psl2Error),
}

pub type Result<T> = std::result::Result<T, FuchsianError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    CocompactSurface,
    Schottky,
}

/// Thresholds standing in for the discreteness constant and the orbit
/// coincidence radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientConfig {
    pub epsilon_star: f64,
    pub sigma0_proxy: f64,
    pub dist_ball_length: usize,
}

impl QuotientConfig {
    /// `sigma0 = systole / 2`, `epsilon_star = sigma0 / 4`.
    pub fn from_systole(systole: f64, dist_ball_length: usize) -> Self {
        let sigma0_proxy = 0.5 * systole;
        Self { epsilon_star: 0.25 * sigma0_proxy, sigma0_proxy, dist_ball_length }
    }
}

/// Group specification as read from configuration.
///
/// `{"kind": "bolza"}`, `{"kind": "schottky"}` (the default rank-2 preset),
/// `{"kind": "schottky", "lengths": [..], "angles": [..]}`, or explicit
/// matrices `{"kind": "...", "generators": [[m11,m12,m21,m22],..],
/// "relators": [["g1","g2^-1",..]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<[f64; 4]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relators: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<f64>>,
}

impl GroupSpec {
    pub fn preset(kind: &str) -> Self {
        Self { kind: kind.to_string(), generators: None, relators: None, lengths: None, angles: None }
    }
}

/// A finite word ball, deduplicated by element.
#[derive(Clone, Debug)]
pub struct WordBall {
    pub max_length: usize,
    pub entries: Vec<(Word, ProjMatrix)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub word: Word,
    pub element: ProjMatrix,
    pub frame: ProjMatrix,
    pub period: f64,
    pub primitive: bool,
}

impl PeriodicOrbit {
    /// Orbit of the hyperbolic element `element`; `frame` conjugates it to
    /// `a_T`.
    pub fn from_element(word: Word, element: ProjMatrix) -> psl2::Result<Self> {
        let (frame, period) = psl2::axis_frame(&element)?;
        let primitive = word.is_primitive();
        Ok(Self { word, element, frame, period, primitive })
    }

    /// Lift of the point at orbit time `t`.
    pub fn point(&self, t: f64) -> PhasePoint {
        PhasePoint::new(self.frame * ProjMatrix::a(t))
    }
}

#[derive(Clone, Debug)]
pub struct ClassEnumeration {
    pub orbits: Vec<PeriodicOrbit>,
    pub truncated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystoleReport {
    pub value: f64,
    pub max_word_length: usize,
    /// Budget too small to certify the minimum.
    pub upper_bound_only: bool,
}

#[derive(Clone, Debug)]
pub struct QuotientDistance {
    pub dist: f64,
    pub gamma: ProjMatrix,
    pub word: Word,
}

#[derive(Debug)]
pub struct FuchsianGroup {
    kind: GroupKind,
    labels: Vec<String>,
    generators: Vec<ProjMatrix>,
    inverses: Vec<ProjMatrix>,
    relators: Vec<Word>,
    config: QuotientConfig,
    ball: OnceLock<WordBall>,
}

impl Clone for FuchsianGroup {
    fn clone(&self) -> Self {
        Self {
            kind: self.kind,
            labels: self.labels.clone(),
            generators: self.generators.clone(),
            inverses: self.inverses.clone(),
            relators: self.relators.clone(),
            config: self.config,
            ball: OnceLock::new(),
        }
    }
}

/// Side length of the regular octagon with angles pi/4.
pub fn bolza_translation_length() -> f64 {
    2.0 * (1.0 + 2f64.sqrt()).acosh()
}

/// Hyperbolic element with axis through `i` at angle `angle` and
/// translation length `length`.
pub fn rotated_translation(length: f64, angle: f64) -> ProjMatrix {
    ProjMatrix::d_theta(angle).conjugate(&ProjMatrix::a(length))
}

fn parse_label(label: &str, n: usize) -> Result<Letter> {
    let (name, inverse) = match label.strip_suffix("^-1") {
        Some(stem) => (stem, true),
        None => (label, false),
    };
    let k: usize = name
        .strip_prefix('g')
        .and_then(|d| d.parse().ok())
        .filter(|&k| (1..=n).contains(&k))
        .ok_or_else(|| FuchsianError::UnknownLabel(label.to_string()))?;
    Ok(letter(k - 1, inverse))
}

/// Isometric disks in the disk model, as (center, radius).
fn isometric_disk(g: &ProjMatrix) -> Option<(num_complex::Complex64, f64)> {
    let (alpha, beta) = g.to_disk();
    let nb = beta.norm();
    (nb > 1e-12).then(|| (-alpha.conj() / beta.conj(), nb.recip()))
}

/// Ping-pong certificate: the isometric disks of all generators and their
/// inverses are pairwise disjoint. Returns the smallest gap.
pub fn ping_pong_gap(generators: &[ProjMatrix]) -> Option<f64> {
    let disks: Option<Vec<_>> = generators.iter().flat_map(|g| [*g, g.inverse()]).map(|g| isometric_disk(&g)).collect();
    let disks = disks?;
    let mut gap = f64::INFINITY;
    for i in 0..disks.len() {
        for j in i + 1..disks.len() {
            let (ci, ri) = disks[i];
            let (cj, rj) = disks[j];
            gap = gap.min((ci - cj).norm() - ri - rj);
        }
    }
    Some(gap)
}

impl FuchsianGroup {
    /// Validates generators and relators and computes the default
    /// quotient configuration (systole over words of length <= 4).
    pub fn new(kind: GroupKind, labels: Vec<String>, generators: Vec<ProjMatrix>, relators: Vec<Word>) -> Result<Self> {
        Self::build(kind, labels, generators, relators, true)
    }

    /// As `new`, without the ping-pong certificate for Schottky groups.
    /// Used by harnesses that must still return data for degenerate input.
    pub fn new_uncertified(kind: GroupKind, labels: Vec<String>, generators: Vec<ProjMatrix>, relators: Vec<Word>) -> Result<Self> {
        Self::build(kind, labels, generators, relators, false)
    }

    fn build(kind: GroupKind, labels: Vec<String>, generators: Vec<ProjMatrix>, relators: Vec<Word>, certify: bool) -> Result<Self> {
        if generators.is_empty() {
            return Err(FuchsianError::NoGenerators);
        }
        for (index, g) in generators.iter().enumerate() {
            if classify(g, psl2::ALGEBRA_TOL).kind != ElementKind::Hyperbolic {
                return Err(FuchsianError::NonHyperbolicGenerator { index, trace: g.trace().abs() });
            }
        }
        let inverses = generators.iter().map(ProjMatrix::inverse).collect();
        let mut group =
            Self { kind, labels, generators, inverses, relators, config: QuotientConfig::from_systole(1.0, 6), ball: OnceLock::new() };
        for (index, r) in group.relators.iter().enumerate() {
            let residual = group.evaluate(r).max_gap(&ProjMatrix::identity());
            if residual > RELATOR_TOL {
                return Err(FuchsianError::InvalidPresentation { index, residual });
            }
        }
        if certify && kind == GroupKind::Schottky {
            match ping_pong_gap(&group.generators) {
                Some(gap) if gap > 0.0 => {}
                gap => return Err(FuchsianError::NotDiscrete(format!("isometric disks overlap (gap {:?})", gap))),
            }
        }
        let budget = group.relators.iter().map(Word::len).max().unwrap_or(0).clamp(2, 4);
        let systole = group.systole(budget).value;
        group.config = QuotientConfig::from_systole(systole, 6);
        Ok(group)
    }

    /// The genus-2 Bolza group: four side pairings of the regular octagon
    /// (plus their inverses) and the single length-8 relator.
    pub fn bolza() -> Self {
        let l = bolza_translation_length();
        let generators: Vec<_> = (0..4).map(|k| rotated_translation(l, k as f64 * std::f64::consts::FRAC_PI_4)).collect();
        let relator = Word(vec![1, 4, -3, 2, -1, -4, 3, -2]);
        let labels = (1..=4).map(|k| format!("g{k}")).collect();
        Self::new(GroupKind::CocompactSurface, labels, generators, vec![relator]).expect("Bolza presentation is valid")
    }

    /// Rank-2 Schottky group generated by `a_4` and its rotation by
    /// `pi/2` about `i`.
    pub fn schottky_default() -> Self {
        Self::schottky(&[4.0, 4.0], &[0.0, std::f64::consts::FRAC_PI_2]).expect("preset is Schottky")
    }

    /// Schottky group with generators `d_theta_k a_{l_k} d_theta_k^-1`.
    pub fn schottky(lengths: &[f64], angles: &[f64]) -> Result<Self> {
        let generators: Vec<_> = lengths.iter().zip(angles).map(|(&l, &th)| rotated_translation(l, th)).collect();
        Self::from_generators(GroupKind::Schottky, generators, Vec::new())
    }

    /// Group from explicit matrices with labels `g1, g2, ..`.
    pub fn from_generators(kind: GroupKind, generators: Vec<ProjMatrix>, relators: Vec<Word>) -> Result<Self> {
        let labels = (1..=generators.len()).map(|k| format!("g{k}")).collect();
        Self::new(kind, labels, generators, relators)
    }

    pub fn from_spec(spec: &GroupSpec) -> Result<Self> {
        if let Some(raw) = &spec.generators {
            let mut generators = Vec::with_capacity(raw.len());
            for (index, m) in raw.iter().enumerate() {
                let det = m[0] * m[3] - m[1] * m[2];
                if (det - 1.0).abs() > RELATOR_TOL {
                    return Err(FuchsianError::NotUnimodular { index, det });
                }
                generators.push(ProjMatrix::new(m[0], m[1], m[2], m[3])?);
            }
            let n = generators.len();
            let relators = spec
                .relators
                .iter()
                .flatten()
                .map(|r| r.iter().map(|l| parse_label(l, n)).collect::<Result<Vec<_>>>().map(Word))
                .collect::<Result<Vec<_>>>()?;
            let kind = match spec.kind.as_str() {
                "schottky" => GroupKind::Schottky,
                "bolza" | "cocompact_surface" | "surface" => GroupKind::CocompactSurface,
                other => return Err(FuchsianError::UnknownKind(other.to_string())),
            };
            return Self::from_generators(kind, generators, relators);
        }
        match spec.kind.as_str() {
            "bolza" => Ok(Self::bolza()),
            "schottky" => match (&spec.lengths, &spec.angles) {
                (Some(l), Some(a)) if l.len() == a.len() && !l.is_empty() => Self::schottky(l, a),
                (None, None) => Ok(Self::schottky_default()),
                _ => Err(FuchsianError::NotDiscrete("lengths and angles must pair up".into())),
            },
            other => Err(FuchsianError::UnknownKind(other.to_string())),
        }
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn generators(&self) -> &[ProjMatrix] {
        &self.generators
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    pub fn config(&self) -> QuotientConfig {
        self.config
    }

    pub fn with_config(mut self, config: QuotientConfig) -> Self {
        if config.dist_ball_length != self.config.dist_ball_length {
            self.ball = OnceLock::new();
        }
        self.config = config;
        self
    }

    pub fn letter_element(&self, l: Letter) -> ProjMatrix {
        let k = generator_index(l);
        if l > 0 {
            self.generators[k]
        } else {
            self.inverses[k]
        }
    }

    pub fn evaluate(&self, w: &Word) -> ProjMatrix {
        w.letters().iter().fold(ProjMatrix::identity(), |acc, &l| acc * self.letter_element(l))
    }

    pub fn display_word(&self, w: &Word) -> String {
        w.display_with(&self.labels)
    }

    /// Inverse of `display_word`: `g1.g2^-1`, or `e` for the identity.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let text = text.trim();
        if text == "e" || text.is_empty() {
            return Ok(Word::identity());
        }
        let letters = text
            .split('.')
            .map(|token| {
                let (name, inverse) = match token.strip_suffix("^-1") {
                    Some(stem) => (stem, true),
                    None => (token, false),
                };
                self.labels
                    .iter()
                    .position(|l| l == name)
                    .map(|k| letter(k, inverse))
                    .ok_or_else(|| FuchsianError::UnknownLabel(token.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Word(letters))
    }

    fn all_letters(&self) -> Vec<Letter> {
        (0..self.rank()).flat_map(|k| [letter(k, false), letter(k, true)]).collect()
    }

    /// Reduced words up to `max_length`, one per element (shortest first).
    pub fn word_ball(&self, max_length: usize) -> Result<WordBall> {
        let letters = self.all_letters();
        let mut layer = vec![(Word::identity(), ProjMatrix::identity())];
        let mut seen: HashMap<[i64; 4], usize> = HashMap::new();
        let key = |g: &ProjMatrix| g.entries().map(|x| (x * 1e6).round() as i64);
        let mut entries = vec![layer[0].clone()];
        seen.insert(key(&layer[0].1), 0);
        for _ in 0..max_length {
            let mut next = Vec::new();
            for (w, g) in &layer {
                for &l in &letters {
                    if w.letters().last() == Some(&-l) {
                        continue;
                    }
                    let h = *g * self.letter_element(l);
                    if let Some(&prev) = seen.get(&key(&h)) {
                        if self.relators.is_empty() && entries[prev].1.proj_equal(&h, 1e-9) {
                            return Err(FuchsianError::NotDiscrete(format!(
                                "distinct reduced words {} and {} evaluate to the same element",
                                self.display_word(&entries[prev].0),
                                self.display_word(&Word(w.letters().iter().copied().chain([l]).collect()))
                            )));
                        }
                        continue;
                    }
                    let mut v = w.clone();
                    v.0.push(l);
                    seen.insert(key(&h), entries.len());
                    entries.push((v.clone(), h));
                    next.push((v, h));
                }
            }
            layer = next;
        }
        Ok(WordBall { max_length, entries })
    }

    /// Ball of length `config.dist_ball_length`, built on first use.
    pub fn cached_ball(&self) -> &WordBall {
        self.ball.get_or_init(|| self.word_ball(self.config.dist_ball_length).expect("group passed discreteness checks"))
    }

    /// Discreteness spot-check: every non-identity ball element moves the
    /// identity by more than `sigma0_proxy / 2` (or leaves the local chart).
    pub fn discreteness_spot_check(&self, ball: &WordBall) -> Result<()> {
        let id = ProjMatrix::identity();
        for (w, g) in ball.entries.iter().skip(1) {
            if let Ok(d) = psl2::local_dist(&id, g) {
                if d <= 0.5 * self.config.sigma0_proxy {
                    return Err(FuchsianError::NotDiscrete(format!("{} lies {d:.3e} from the identity", self.display_word(w))));
                }
            }
        }
        Ok(())
    }

    /// Visits every reduced word of length `1..=max_length` whose first
    /// and last letters are not inverse, with its evaluated element.
    fn for_each_cyclic_word<F>(&self, max_length: usize, first: Letter, visit: &mut F)
    where
        F: FnMut(&[Letter], &ProjMatrix),
    {
        let letters = self.all_letters();
        let mut stack: Vec<(Vec<Letter>, ProjMatrix)> = vec![(vec![first], self.letter_element(first))];
        while let Some((w, g)) = stack.pop() {
            if w.len() == 1 || w[0] != -w[w.len() - 1] {
                visit(&w, &g);
            }
            if w.len() < max_length {
                for &l in letters.iter().rev() {
                    if *w.last().unwrap() != -l {
                        let mut v = w.clone();
                        v.push(l);
                        stack.push((v, g * self.letter_element(l)));
                    }
                }
            }
        }
    }

    /// One representative per rotation/inversion class of cyclically
    /// reduced words, sorted by period.
    pub fn enumerate_conjugacy_classes(&self, max_word_length: usize, cap: usize) -> ClassEnumeration {
        if max_word_length == 0 {
            return ClassEnumeration { orbits: Vec::new(), truncated: false };
        }
        let letters = self.all_letters();
        let per_letter: Vec<Vec<PeriodicOrbit>> = letters
            .par_iter()
            .map(|&first| {
                let mut found = Vec::new();
                self.for_each_cyclic_word(max_word_length, first, &mut |w, g| {
                    let word = Word(w.to_vec());
                    if word.class_representative() != word {
                        return;
                    }
                    if classify(g, psl2::ALGEBRA_TOL).kind != ElementKind::Hyperbolic {
                        return;
                    }
                    if let Ok(orbit) = PeriodicOrbit::from_element(word, *g) {
                        found.push(orbit);
                    }
                });
                found
            })
            .collect();
        let mut orbits: Vec<PeriodicOrbit> = per_letter.into_iter().flatten().collect();
        orbits.sort_by(|a, b| a.period.total_cmp(&b.period).then_with(|| a.word.cmp(&b.word)));
        let truncated = orbits.len() > cap;
        orbits.truncate(cap);
        ClassEnumeration { orbits, truncated }
    }

    /// Minimum translation length over cyclically reduced words up to
    /// `max_word_length`.
    pub fn systole(&self, max_word_length: usize) -> SystoleReport {
        let letters = self.all_letters();
        let value = letters
            .par_iter()
            .map(|&first| {
                let mut best = f64::INFINITY;
                self.for_each_cyclic_word(max_word_length, first, &mut |_, g| {
                    let c = classify(g, psl2::ALGEBRA_TOL);
                    if c.kind == ElementKind::Hyperbolic {
                        best = best.min(c.translation_length);
                    }
                });
                best
            })
            .reduce(|| f64::INFINITY, f64::min);
        let relator_len = self.relators.iter().map(Word::len).max().unwrap_or(0);
        let upper_bound_only = max_word_length < 2 || max_word_length < relator_len;
        SystoleReport { value, max_word_length, upper_bound_only }
    }

    /// Minimum of `local_dist(x, gamma y)` over the cached ball.
    ///
    /// Exact when the true minimizer lies in the ball, an upper bound
    /// otherwise.
    pub fn quotient_dist(&self, x: &PhasePoint, y: &PhasePoint) -> Result<QuotientDistance> {
        self.quotient_dist_in(self.cached_ball(), x, y)
    }

    pub fn quotient_dist_in(&self, ball: &WordBall, x: &PhasePoint, y: &PhasePoint) -> Result<QuotientDistance> {
        let xinv = x.lift.inverse();
        let mut best: Option<QuotientDistance> = None;
        for (w, g) in &ball.entries {
            let rel = xinv * *g * y.lift;
            if rel.frobenius_gap(&ProjMatrix::identity()) >= 1.0 {
                continue;
            }
            let d = psl2::log_norm_near_identity(&rel);
            if best.as_ref().is_none_or(|b| d < b.dist) {
                best = Some(QuotientDistance { dist: d, gamma: *g, word: w.clone() });
            }
        }
        best.ok_or(FuchsianError::DistanceOutOfRange)
    }
}
