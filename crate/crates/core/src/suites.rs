//! Seeded randomized suites for the preliminary lemmas: quintuple
//! decomposition, closing, connecting, shadowing, closeness and
//! recentring. Each suite keeps the worst sample of every inequality and
//! the first failure in sample order.

use crate::check::InequalityCheck;
use crate::closing;
use crate::flow::{self, Direction, PhasePoint, SectionCoords};
use crate::fuchsian::{FuchsianGroup, GroupKind, PeriodicOrbit};
use crate::psl2::{quintuple_product, Flavor, ProjMatrix};
use crate::word::Word;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Entrywise agreement demanded of the quintuple closed form.
pub const QUINTUPLE_TOL: f64 = 1e-12;
/// Resampling budget per certified Schottky pair.
const PAIR_ATTEMPTS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Shift every closing period by 1 before checking it.
    ClosingPeriod,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSizes {
    pub quintuple: usize,
    pub closing: usize,
    pub connect: usize,
    pub shadowing: usize,
    pub closeness: usize,
    pub recentring: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        Self { quintuple: 10_000, closing: 1_000, connect: 200, shadowing: 200, closeness: 500, recentring: 500 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteFailure {
    pub sample: usize,
    pub check: InequalityCheck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub samples: usize,
    /// Per inequality, the sample with the smallest relative margin.
    pub worst: Vec<InequalityCheck>,
    pub failures: usize,
    pub first_failure: Option<SuiteFailure>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.failures == 0
    }
}

struct Collector {
    name: String,
    samples: usize,
    order: Vec<String>,
    worst: BTreeMap<String, InequalityCheck>,
    failures: usize,
    first_failure: Option<SuiteFailure>,
}

fn relative_margin(c: &InequalityCheck) -> f64 {
    let scale = c.rhs.abs().max(f64::MIN_POSITIVE);
    (c.rhs - c.lhs) / scale
}

impl Collector {
    fn new(name: &str) -> Self {
        Self { name: name.into(), samples: 0, order: Vec::new(), worst: BTreeMap::new(), failures: 0, first_failure: None }
    }

    fn add(&mut self, checks: impl IntoIterator<Item = InequalityCheck>) {
        let sample = self.samples;
        self.samples += 1;
        for c in checks {
            if !c.pass {
                self.failures += 1;
                self.first_failure.get_or_insert(SuiteFailure { sample, check: c.clone() });
            }
            match self.worst.get(&c.name) {
                Some(w) if relative_margin(w) <= relative_margin(&c) && (w.pass || c.pass) => {}
                Some(w) if !w.pass => {}
                Some(_) => {
                    self.worst.insert(c.name.clone(), c);
                }
                None => {
                    self.order.push(c.name.clone());
                    self.worst.insert(c.name.clone(), c);
                }
            }
        }
    }

    /// A sample that could not be evaluated at all counts as a failure.
    fn error(&mut self, what: &str, message: String) {
        self.add([InequalityCheck { name: format!("{what}: {message}"), lhs: f64::INFINITY, rhs: 0.0, pass: false }]);
    }

    fn finish(mut self) -> SuiteReport {
        let worst = self.order.iter().map(|n| self.worst.remove(n).unwrap()).collect();
        SuiteReport { name: self.name, samples: self.samples, worst, failures: self.failures, first_failure: self.first_failure }
    }
}

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn flag(name: &str, ok: bool) -> InequalityCheck {
    InequalityCheck::le(name, f64::from(u8::from(!ok)), 0.0)
}

/// `b_s1 c_u1 b_s2 c_u2 b_s3` against its closed form, with arguments in
/// `(-1/6, 1/6)`.
pub fn quintuple_suite(seed: u64, n: usize) -> SuiteReport {
    let mut rng = rng_for(seed, 1);
    let mut col = Collector::new("quintuple decomposition");
    let h = 1.0 / 6.0;
    for _ in 0..n {
        let v: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-h..h));
        let direct = ProjMatrix::b(v[0]) * ProjMatrix::c(v[1]) * ProjMatrix::b(v[2]) * ProjMatrix::c(v[3]) * ProjMatrix::b(v[4]);
        match quintuple_product(v[0], v[1], v[2], v[3], v[4]) {
            Ok(q) => col.add([InequalityCheck::le(
                "closed form (u, s, tau) matches the 5-matrix product entrywise",
                q.reconstruct().max_gap(&direct),
                QUINTUPLE_TOL,
            )]),
            Err(e) => col.error("quintuple", e.to_string()),
        }
    }
    col.finish()
}

/// Closing lemmas I and II at `T in [1, 10]`, `|u|, |s| < 1/4`,
/// alternating flavors.
pub fn closing_suite(seed: u64, n: usize, fault: Option<Fault>) -> SuiteReport {
    let mut rng = rng_for(seed, 2);
    let mut col = Collector::new("closing lemmas");
    let x = PhasePoint::new(ProjMatrix::identity());
    for k in 0..n {
        let period: f64 = rng.gen_range(1.0..10.0);
        let u = rng.gen_range(-0.25..0.25);
        let s = rng.gen_range(-0.25..0.25);
        let flavor = if k % 2 == 0 { Flavor::CuBs } else { Flavor::BsCu };
        let r = match closing::close_orbit(&x, period, &SectionCoords::new(u, s, 0.0, flavor)) {
            Ok(r) => r,
            Err(e) => {
                col.error("close_orbit", e.to_string());
                continue;
            }
        };
        let t_prime = r.t_prime + if fault == Some(Fault::ClosingPeriod) { 1.0 } else { 0.0 };
        let emt = (-period).exp();
        let sign = if flavor == Flavor::CuBs { 1.0 } else { -1.0 };
        let lhs = (0.5 * t_prime).exp() + (-0.5 * t_prime).exp();
        let rhs = (0.5 * period).exp() + (-0.5 * period).exp() + u * s * (sign * 0.5 * period).exp();
        let mut checks = vec![
            InequalityCheck::le("e^(T'/2) + e^(-T'/2) = e^(T/2) + e^(-T/2) + us e^(+-T/2) within 1e-10", (lhs - rhs).abs(), 1e-10),
            InequalityCheck::lt("|sigma| < 2|u|e^-T", r.sigma.abs(), 2.0 * u.abs() * emt),
        ];
        if let Some(f) = r.formula {
            checks.push(InequalityCheck::lt("|eta - s| < 2|s|e^-T", (r.eta - s).abs(), 2.0 * s.abs() * emt));
            let gap = (f.eta - r.eta).abs().max((f.sigma - r.sigma).abs()).max((f.t_prime - t_prime).abs());
            checks.push(InequalityCheck::le("eta/sigma/T' formulas match the axis within 1e-9", gap, 1e-9));
        }
        checks.extend(r.residuals);
        col.add(checks);
    }
    col.finish()
}

/// A pair of closed orbits through `g1` and `g1 c_u b_s` whose elements
/// generate a Schottky group (ping-pong certified).
fn schottky_pair(rng: &mut ChaCha8Rng, eps: f64) -> Option<(PeriodicOrbit, PeriodicOrbit, f64, f64)> {
    for _ in 0..PAIR_ATTEMPTS {
        let t1 = rng.gen_range(12.0..20.0);
        let t2 = rng.gen_range(12.0..20.0);
        let mag = |r: &mut ChaCha8Rng| r.gen_range(0.25 * eps..0.95 * eps) * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
        let (u, s) = (mag(rng), mag(rng));
        let g1 = ProjMatrix::d_theta(rng.gen_range(0.0..std::f64::consts::PI)) * ProjMatrix::a(rng.gen_range(-1.0..1.0));
        let g2 = g1 * ProjMatrix::c(u) * ProjMatrix::b(s);
        let z1 = g1.conjugate(&ProjMatrix::a(t1));
        let z2 = g2.conjugate(&ProjMatrix::a(t2));
        let Ok(group) = FuchsianGroup::new(GroupKind::Schottky, vec!["z1".into(), "z2".into()], vec![z1, z2], Vec::new()) else {
            continue;
        };
        let o1 = PeriodicOrbit { word: Word(vec![1]), element: group.generators()[0], frame: g1, period: t1, primitive: true };
        let o2 = PeriodicOrbit { word: Word(vec![2]), element: group.generators()[1], frame: g2, period: t2, primitive: true };
        return Some((o1, o2, u, s));
    }
    None
}

/// Connecting lemma on certified Schottky pairs with `eps = 0.02`.
pub fn connect_suite(seed: u64, n: usize) -> SuiteReport {
    let mut rng = rng_for(seed, 3);
    let mut col = Collector::new("connecting lemma");
    let eps = 0.02;
    for _ in 0..n {
        let Some((o1, o2, u, s)) = schottky_pair(&mut rng, eps) else {
            col.error("schottky pair", format!("no certified pair in {PAIR_ATTEMPTS} attempts"));
            continue;
        };
        match closing::connect_orbits(&o1, &SectionCoords::new(u, s, 0.0, Flavor::CuBs), &o2, eps) {
            Ok(r) => col.add(r.residuals),
            Err(e) => col.error("connect_orbits", e.to_string()),
        }
    }
    col.finish()
}

/// Shadowing: `w = x1 b_t1 = x2 c_t2` with `|t1|, |t2| < eps`.
pub fn shadowing_suite(seed: u64, n: usize) -> SuiteReport {
    let mut rng = rng_for(seed, 4);
    let mut col = Collector::new("shadowing lemma");
    let eps = 0.05;
    for _ in 0..n {
        let x1 = PhasePoint::new(ProjMatrix::d_theta(rng.gen_range(0.0..6.3)) * ProjMatrix::a(rng.gen_range(-2.0..2.0)));
        let t1 = rng.gen_range(-0.99 * eps..0.99 * eps);
        let t2 = rng.gen_range(-0.99 * eps..0.99 * eps);
        let w = PhasePoint::new(x1.lift * ProjMatrix::b(t1));
        let x2 = PhasePoint::new(w.lift * ProjMatrix::c(-t2));
        match closing::shadow_verify(&x1, &x2, &w, eps, 12.0) {
            Ok(r) => col.add([
                InequalityCheck::lt("d(phi_t x1, phi_t w) < eps e^-t on [0, 12]", r.forward_max_ratio.unwrap_or(0.0), 1.0),
                InequalityCheck::lt("d(phi_t x2, phi_t w) < eps e^t on [-12, 0]", r.backward_max_ratio.unwrap_or(0.0), 1.0),
            ]),
            Err(e) => col.error("shadow_verify", e.to_string()),
        }
    }
    col.finish()
}

/// Coordinate/closeness implications on section pairs whose gaps are
/// drawn on the scale `eps e^-T`, so that both hypotheses and their
/// negations occur.
pub fn closeness_suite(seed: u64, n: usize, sigma0: f64) -> SuiteReport {
    let mut rng = rng_for(seed, 5);
    let mut col = Collector::new("coordinate closeness");
    let eps = 0.05;
    let rho = 0.5;
    let eps_rho = flow::default_eps_rho(rho, sigma0);
    for _ in 0..n {
        let period: f64 = rng.gen_range(1.0..8.0);
        let scale = eps * (-period).exp();
        let u1 = rng.gen_range(-0.15 * eps..0.15 * eps);
        let s1 = rng.gen_range(-0.15 * eps..0.15 * eps);
        let c1 = SectionCoords::new(u1, s1, 0.0, Flavor::CuBs);
        let c2 = SectionCoords::new(u1 + rng.gen_range(-scale..scale), s1 + rng.gen_range(-scale..scale), 0.0, Flavor::CuBs);
        let r = flow::closeness_bounds(&c1, &c2, period, Direction::Both, eps, rho, eps_rho);
        col.add(r.implications.iter().map(|i| flag(&i.name, i.holds())));
    }
    col.finish()
}

/// Recentring of two section points, `eps < min(1/2, sigma0/12)`.
pub fn recentring_suite(seed: u64, n: usize, sigma0: f64) -> SuiteReport {
    let mut rng = rng_for(seed, 6);
    let mut col = Collector::new("recentring");
    let limit = 0.5f64.min(sigma0 / 12.0);
    for _ in 0..n {
        let eps = rng.gen_range(0.05 * limit..0.99 * limit);
        let mut c = || SectionCoords::new(rng.gen_range(-eps..eps), rng.gen_range(-eps..eps), 0.0, Flavor::CuBs);
        let (a, b) = (c(), c());
        match flow::recenter(&a, &b, eps) {
            Ok(r) => col.add(r.checks),
            Err(e) => col.error("recenter", e.to_string()),
        }
    }
    col.finish()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn first_failure(&self) -> Option<(&str, &SuiteFailure)> {
        self.suites.iter().find_map(|s| s.first_failure.as_ref().map(|f| (s.name.as_str(), f)))
    }
}

/// Every suite, in a fixed order. `sigma0` sets the radii of the
/// closeness and recentring suites.
pub fn run_all(seed: u64, sizes: &SuiteSizes, sigma0: f64, fault: Option<Fault>) -> VerifyReport {
    let suites = vec![
        quintuple_suite(seed, sizes.quintuple),
        closing_suite(seed, sizes.closing, fault),
        connect_suite(seed, sizes.connect),
        shadowing_suite(seed, sizes.shadowing),
        closeness_suite(seed, sizes.closeness, sigma0),
        recentring_suite(seed, sizes.recentring, sigma0),
    ];
    let pass = suites.iter().all(SuiteReport::pass);
    VerifyReport { seed, suites, pass }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SuiteSizes {
        SuiteSizes { quintuple: 200, closing: 60, connect: 10, shadowing: 20, closeness: 60, recentring: 60 }
    }

    #[test]
    fn small_run_passes_and_is_reproducible() {
        let a = run_all(7, &small(), 1.5, None);
        for s in &a.suites {
            assert!(s.pass(), "{}: {:?}", s.name, s.first_failure);
            assert!(s.samples > 0);
        }
        assert_eq!(a, run_all(7, &small(), 1.5, None));
        assert_ne!(a.suites[0].worst, run_all(8, &small(), 1.5, None).suites[0].worst);
    }

    #[test]
    fn injected_fault_names_the_trace_identity() {
        let r = run_all(7, &small(), 1.5, Some(Fault::ClosingPeriod));
        assert!(!r.pass);
        let (suite, failure) = r.first_failure().unwrap();
        assert_eq!(suite, "closing lemmas");
        assert!(failure.check.name.starts_with("e^(T'/2)"), "{}", failure.check.name);
    }
}
