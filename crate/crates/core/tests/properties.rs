//! Randomized properties of the building blocks, checked against direct
//! matrix arithmetic.

use orbitpair::closing::close_orbit;
use orbitpair::flow::{self, PhasePoint, SectionCoords};
use orbitpair::fuchsian::{FuchsianGroup, PeriodicOrbit};
use orbitpair::partners::{self, Reconnection};
use orbitpair::psl2::{axis_frame, local_dist, nac_decompose, quintuple_product, Flavor, ProjMatrix};
use orbitpair::word::{letter, Word};
use proptest::prelude::*;

fn small() -> impl Strategy<Value = f64> {
    -1.0 / 6.0 + 1e-9..1.0 / 6.0 - 1e-9
}

fn frame() -> impl Strategy<Value = ProjMatrix> {
    (-3.0..3.0f64, -1.0..1.0f64, -1.0..1.0f64, -3.0..3.0f64)
        .prop_map(|(th, u, s, t)| ProjMatrix::d_theta(th) * ProjMatrix::c(u) * ProjMatrix::b(s) * ProjMatrix::a(t))
}

fn word(max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec((0..2usize, any::<bool>()), 1..=max_len)
        .prop_map(|v| Word::identity().concat(&Word(v.into_iter().map(|(k, inv)| letter(k, inv)).collect())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn quintuple_matches_direct_product(s1 in small(), u1 in small(), s2 in small(), u2 in small(), s3 in small()) {
        let q = quintuple_product(s1, u1, s2, u2, s3).unwrap();
        let direct = ProjMatrix::b(s1) * ProjMatrix::c(u1) * ProjMatrix::b(s2) * ProjMatrix::c(u2) * ProjMatrix::b(s3);
        let closed = ProjMatrix::c(q.u) * ProjMatrix::b(q.s) * ProjMatrix::a(q.tau);
        prop_assert!(closed.max_gap(&direct) <= 1e-12, "gap {}", closed.max_gap(&direct));
    }

    #[test]
    fn nac_round_trip(u in -2.0..2.0f64, s in -2.0..2.0f64, tau in -4.0..4.0f64, cubs in any::<bool>()) {
        let flavor = if cubs { Flavor::CuBs } else { Flavor::BsCu };
        let d = SectionCoords::new(u, s, tau, flavor);
        let g = d.reconstruct();
        let back = nac_decompose(&g, flavor, 1e-12).unwrap();
        prop_assert!((back.u - u).abs() < 1e-10 && (back.s - s).abs() < 1e-10 && (back.tau - tau).abs() < 1e-10);
        prop_assert!(back.reconstruct().proj_equal(&g, 1e-10));
    }

    #[test]
    fn axis_frame_conjugates_to_the_flow(g in frame(), t in 0.1..30.0f64) {
        let h = g * ProjMatrix::a(t) * g.inverse();
        let (f, period) = axis_frame(&h).unwrap();
        prop_assert!((period - t).abs() < 1e-9 * t.max(1.0) * (1.0 + g.max_gap(&ProjMatrix::identity())).powi(2));
        let lhs = f * ProjMatrix::a(period);
        let rhs = h * f;
        prop_assert!(lhs.proj_equal(&rhs, 1e-7 * rhs.max_gap(&ProjMatrix::identity()).max(1.0)));
    }

    #[test]
    fn local_dist_triangle(a in small(), b in small(), c in small(), d in small(), e in small(), f in small()) {
        let x = ProjMatrix::c(a / 2.0) * ProjMatrix::b(b / 2.0);
        let y = ProjMatrix::b(c / 2.0) * ProjMatrix::a(d / 2.0);
        let z = ProjMatrix::a(e / 2.0) * ProjMatrix::c(f / 2.0);
        let (xy, yz, xz) = (local_dist(&x, &y).unwrap(), local_dist(&y, &z).unwrap(), local_dist(&x, &z).unwrap());
        prop_assert!(xz <= xy + yz + 1e-9);
        prop_assert!((local_dist(&y, &x).unwrap() - xy).abs() < 1e-12);
    }

    #[test]
    fn flowing_moves_coordinates_exponentially(g in frame(), u in -0.05..0.05f64, s in -0.05..0.05f64, t in -2.0..2.0f64) {
        let x = PhasePoint::new(g);
        let y = x.section_point(&SectionCoords::new(u, s, 0.0, Flavor::CuBs));
        let (xt, yt) = (flow::evolve(&x, t, flow::FlowKind::Geodesic), flow::evolve(&y, t, flow::FlowKind::Geodesic));
        let got = nac_decompose(&(xt.lift.inverse() * yt.lift), Flavor::CuBs, 1e-12).unwrap();
        let want = flow::flow_coords(&SectionCoords::new(u, s, 0.0, Flavor::CuBs), t);
        prop_assert!((got.u - want.u).abs() < 1e-10 && (got.s - want.s).abs() < 1e-10 && got.tau.abs() < 1e-10);
    }

    #[test]
    fn word_class_representative_is_a_class_function(w in word(7), k in 0..7usize) {
        let (w, _) = w.cyclic_reduce();
        prop_assume!(!w.is_empty());
        let rep = w.class_representative();
        prop_assert_eq!(w.rotate(k % w.len()).class_representative(), rep.clone());
        prop_assert_eq!(w.inverse().class_representative(), rep);
        prop_assert_eq!(w.inverse().inverse(), w);
    }

    #[test]
    fn period_is_a_class_function(w in word(6), k in 0..6usize) {
        let group = FuchsianGroup::schottky_default();
        let (w, _) = w.cyclic_reduce();
        prop_assume!(w.len() >= 2 || !w.is_empty());
        let base = PeriodicOrbit::from_element(w.clone(), group.evaluate(&w)).unwrap();
        let r = w.rotate(k % w.len());
        let rotated = PeriodicOrbit::from_element(r.clone(), group.evaluate(&r)).unwrap();
        prop_assert!((base.period - rotated.period).abs() < 1e-10 * base.period.max(1.0));
        let inverse = PeriodicOrbit::from_element(w.inverse(), group.evaluate(&w.inverse())).unwrap();
        prop_assert!((base.period - inverse.period).abs() < 1e-10 * base.period.max(1.0));
    }

    #[test]
    fn closing_an_exact_return_is_idempotent(g in frame(), t in 1.0..10.0f64) {
        let x = PhasePoint::new(g);
        let r = close_orbit(&x, t, &SectionCoords::new(0.0, 0.0, 0.0, Flavor::CuBs)).unwrap();
        prop_assert!((r.t_prime - t).abs() < 1e-9);
        let (f, _) = axis_frame(&(g * ProjMatrix::a(t) * g.inverse())).unwrap();
        prop_assert!(r.x_prime.lift.proj_equal(&g, 1e-8) || nac_decompose(&(f.inverse() * g), Flavor::CuBs, 1e-12).map(|d| d.u.abs() + d.s.abs() < 1e-8).unwrap_or(false));
    }

    #[test]
    fn reconnections_are_single_cycles_using_each_loop_once(l in 3..7usize, pick in any::<prop::sample::Index>()) {
        let all = partners::reconnections(l).unwrap();
        prop_assert_eq!(all.len(), (1..l).product::<usize>() - 1);
        let rec: &Reconnection = &all[pick.index(all.len())];
        let mut loops = rec.loop_sequence();
        loops.sort_unstable();
        prop_assert_eq!(loops, (0..l).collect::<Vec<_>>());
        let mut visits = rec.visit_order();
        prop_assert_eq!(visits[0], 0);
        visits.sort_unstable();
        prop_assert_eq!(visits, (0..l).collect::<Vec<_>>());
    }

    #[test]
    fn action_bound_decays_with_loop_times(l in 3..8usize, t in 6.0..30.0f64, dt in 0.1..5.0f64) {
        let short = partners::action_bound(l, 0.02, &vec![t; l]);
        let long = partners::action_bound(l, 0.02, &vec![t + dt; l]);
        prop_assert!(long < short);
    }
}

/// Re-detecting a harness encounter from a flowed base point gives the
/// flowed coordinates and the same encounter duration.
#[test]
fn encounter_coordinates_follow_the_flow() {
    let eps = 0.02;
    for l in [2, 3, 4] {
        let h = partners::synthetic_encounter(
            l,
            &partners::default_targets(l, eps),
            &partners::default_loop_times(l),
            eps,
            ProjMatrix::identity(),
        )
        .unwrap();
        let enc = &h.detected;
        for frac in [-0.9, -0.5, 0.3, 0.9] {
            let t = if frac < 0.0 { frac * enc.t_s.min(enc.t_u) } else { frac * enc.t_u.min(enc.t_s) };
            let moved = enc.rebase(PhasePoint::new(enc.base.lift * ProjMatrix::a(t))).unwrap();
            for (a, b) in enc.piercings.iter().zip(&moved.piercings) {
                let want = flow::flow_coords(&a.coords, t);
                assert!((b.coords.u - want.u).abs() < 1e-8 && (b.coords.s - want.s).abs() < 1e-8, "L={l} t={t}");
            }
            assert!((moved.t_enc - enc.t_enc).abs() < 1e-8);
        }
    }
}

/// A periodic orbit never returns onto the stable or unstable leaf of one
/// of its own points.
#[test]
fn self_piercings_avoid_the_leaves() {
    let group = FuchsianGroup::schottky_default();
    let classes = group.enumerate_conjugacy_classes(4, 200);
    let opts = flow::PiercingOptions { ball_length: 2, step_fraction: 0.1 };
    for orbit in classes.orbits.iter().filter(|o| o.primitive) {
        let x = PhasePoint::new(orbit.frame);
        for p in flow::piercings(&group, orbit, &x, 0.05, Flavor::CuBs, false, &opts).unwrap() {
            if p.time > 1e-9 && orbit.period - p.time > 1e-9 {
                assert!((p.coords.u * p.coords.s).abs() > 1e-12, "{:?} at {}", orbit.word, p.time);
            }
        }
    }
}

#[test]
fn ball_words_are_separated() {
    for group in [FuchsianGroup::schottky_default(), FuchsianGroup::bolza()] {
        let ball = group.word_ball(3).unwrap();
        let sigma0 = group.config().sigma0_proxy;
        for (i, (_, g)) in ball.entries.iter().enumerate() {
            for (_, h) in ball.entries.iter().skip(i + 1) {
                // Distinct deck images of the base point i.
                let z = (g.inverse() * *h).apply(num_complex::Complex64::new(0.0, 1.0));
                let d = (1.0 + (z.re * z.re + (z.im - 1.0).powi(2)) / (2.0 * z.im)).acosh();
                assert!(d > sigma0 / 2.0, "{d} <= {sigma0}/2");
            }
        }
    }
}
