use crate::config::{Mode, RunConfig};
use crate::output::{emit, fmt_f64, to_csv, to_json};
use crate::svg::{self, Layer, PALETTE};
use crate::{CliError, Format, Options};
use orbitpair::check::InequalityCheck;
use orbitpair::encounters::{self, DetectOptions, Encounter};
use orbitpair::flow;
use orbitpair::fuchsian::{FuchsianGroup, PeriodicOrbit};
use orbitpair::partners::{self, PartnerOptions, PartnerReport, Verdict};
use orbitpair::psl2::ProjMatrix;
use orbitpair::suites;
use rayon::prelude::*;
use serde::Serialize;

pub fn orbits(cfg: &RunConfig, opts: &Options) -> Result<(), CliError> {
    let group = cfg.build_group()?;
    let found = group.enumerate_conjugacy_classes(cfg.max_word_length, cfg.class_cap);
    if found.truncated {
        eprintln!("note: enumeration truncated at class_cap = {}", cfg.class_cap);
    }
    #[derive(Serialize)]
    struct Row {
        word: String,
        trace: f64,
        period: f64,
        primitive: bool,
    }
    let rows: Vec<Row> = found
        .orbits
        .iter()
        .map(|o| Row { word: group.display_word(&o.word), trace: o.element.trace().abs(), period: o.period, primitive: o.primitive })
        .collect();
    let text = match opts.format {
        Format::Json => to_json(&rows)?,
        Format::Csv => to_csv(
            &["word", "trace", "period", "primitive"],
            &rows.iter().map(|r| vec![r.word.clone(), fmt_f64(r.trace), fmt_f64(r.period), r.primitive.to_string()]).collect::<Vec<_>>(),
        )?,
    };
    emit(opts.out.as_deref(), &format!("orbits.{}", opts.format.extension()), &text)?;
    Ok(())
}

/// Encounters of one orbit, with the group they live in.
struct Scan {
    orbit: PeriodicOrbit,
    encounters: Vec<Encounter>,
}

struct Setting {
    group: FuchsianGroup,
    scans: Vec<Scan>,
    harness: Option<bool>,
}

fn selected_orbit(group: &FuchsianGroup, selector: &str) -> Result<PeriodicOrbit, CliError> {
    let word = group.parse_word(selector).map_err(|e| CliError::config(format!("orbit selector: {e}")))?;
    PeriodicOrbit::from_element(word.clone(), group.evaluate(&word))
        .map_err(|e| CliError::config(format!("orbit {selector} is not hyperbolic: {e}")))
}

fn detect(cfg: &RunConfig, group: &FuchsianGroup, orbits: Vec<PeriodicOrbit>) -> Result<Vec<Scan>, CliError> {
    let opts = DetectOptions { ball_length: cfg.ball_length, include_antiparallel: true };
    orbits
        .into_par_iter()
        .map(|orbit| {
            let scan = encounters::detect_encounters(group, &orbit, cfg.eps, cfg.l_max, &opts)
                .map_err(|e| CliError::failure(format!("detection on {}: {e}", group.display_word(&orbit.word))))?;
            Ok(Scan { orbit, encounters: scan.encounters })
        })
        .collect()
}

fn setting(cfg: &RunConfig, opts: &Options) -> Result<Setting, CliError> {
    match cfg.mode {
        Mode::Harness => {
            let base = ProjMatrix::d_theta(cfg.harness.base_angle);
            let h = partners::synthetic_encounter(cfg.harness.l, &cfg.harness_targets(), &cfg.harness_loop_times(), cfg.eps, base)
                .map_err(|e| CliError::failure(format!("harness: {e}")))?;
            cfg.check_eps(&h.group, cfg.harness.l)?;
            if !h.certified {
                eprintln!("note: harness loop elements fail the ping-pong test; the group is not certified discrete");
            }
            Ok(Setting { scans: vec![Scan { orbit: h.orbit, encounters: vec![h.detected] }], group: h.group, harness: Some(h.certified) })
        }
        Mode::Survey | Mode::Verify => {
            let group = cfg.build_group()?;
            cfg.check_eps(&group, cfg.l_max)?;
            let orbits = match opts.orbit.as_deref().or(cfg.orbit.as_deref()) {
                Some(sel) => vec![selected_orbit(&group, sel)?],
                None => {
                    let found = group.enumerate_conjugacy_classes(cfg.max_word_length, cfg.class_cap);
                    found.orbits.into_iter().filter(|o| o.primitive).collect()
                }
            };
            let scans = detect(cfg, &group, orbits)?;
            Ok(Setting { group, scans, harness: None })
        }
    }
}

pub fn encounters(cfg: &RunConfig, opts: &Options) -> Result<(), CliError> {
    let s = setting(cfg, opts)?;
    #[derive(Serialize)]
    struct Row {
        orbit: String,
        #[serde(rename = "L")]
        l: usize,
        coords: Vec<[f64; 2]>,
        loop_times: Vec<f64>,
        t_enc: f64,
        t_s: f64,
        t_u: f64,
        separation_ok: bool,
        ambiguous: bool,
        antiparallel: usize,
    }
    let rows: Vec<Row> = s
        .scans
        .iter()
        .flat_map(|scan| {
            let name = s.group.display_word(&scan.orbit.word);
            scan.encounters.iter().map(move |e| Row {
                orbit: name.clone(),
                l: e.l,
                coords: e.coords().iter().map(|c| [c.0, c.1]).collect(),
                loop_times: e.loop_times.clone(),
                t_enc: e.t_enc,
                t_s: e.t_s,
                t_u: e.t_u,
                separation_ok: encounters::separation_ok(e).ok,
                ambiguous: e.ambiguous,
                antiparallel: e.antiparallel.len(),
            })
        })
        .collect();
    let text = match opts.format {
        Format::Json => to_json(&rows)?,
        Format::Csv => {
            let joined = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";");
            to_csv(
                &["orbit", "L", "coords", "loop_times", "t_enc", "t_s", "t_u", "separation_ok", "ambiguous", "antiparallel"],
                &rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.orbit.clone(),
                            r.l.to_string(),
                            r.coords.iter().map(|c| format!("{}:{}", fmt_f64(c[0]), fmt_f64(c[1]))).collect::<Vec<_>>().join(";"),
                            joined(&r.loop_times),
                            fmt_f64(r.t_enc),
                            fmt_f64(r.t_s),
                            fmt_f64(r.t_u),
                            r.separation_ok.to_string(),
                            r.ambiguous.to_string(),
                            r.antiparallel.to_string(),
                        ]
                    })
                    .collect::<Vec<_>>(),
            )?
        }
    };
    emit(opts.out.as_deref(), &format!("encounters.{}", opts.format.extension()), &text)?;
    if rows.is_empty() {
        return Err(CliError::nothing(format!("no encounter with L <= {} at eps = {}", cfg.l_max, cfg.eps)));
    }
    Ok(())
}

#[derive(Serialize)]
struct PartnerEntry {
    #[serde(rename = "P")]
    p: Vec<usize>,
    word: String,
    loop_sequence: Vec<usize>,
    #[serde(rename = "T_prime")]
    t_prime: f64,
    #[serde(rename = "T_prime_j")]
    t_prime_j: Vec<f64>,
    #[serde(rename = "delta_S")]
    delta_s: f64,
    residual: f64,
    bound: f64,
    cascade_trace_gap: Option<f64>,
    pass: bool,
    checks: Vec<InequalityCheck>,
}

#[derive(Serialize)]
struct EncounterEntry {
    index: usize,
    #[serde(rename = "L")]
    l: usize,
    coords: Vec<[f64; 2]>,
    loop_times: Vec<f64>,
    t_enc: f64,
    separation_ok: bool,
    /// Why no partners were built, if none were.
    skipped: Option<String>,
    partners: Vec<PartnerEntry>,
}

#[derive(Serialize)]
struct OrbitReport {
    orbit: String,
    period: f64,
    encounters: Vec<EncounterEntry>,
}

#[derive(Serialize)]
struct PartnersReport {
    mode: Mode,
    eps: f64,
    /// Harness runs: whether the synthetic group passed ping-pong.
    harness_certified: Option<bool>,
    reports: Vec<OrbitReport>,
}

type Plotted = (PeriodicOrbit, Encounter, Vec<(PartnerReport, Verdict)>);

struct Built {
    report: PartnersReport,
    admissible: usize,
    failures: Vec<String>,
    /// First encounter with partners, for plotting.
    first: Option<Plotted>,
}

fn build_partners(cfg: &RunConfig, s: &Setting) -> Built {
    let popts = PartnerOptions::default();
    let mut admissible = 0;
    let mut failures = Vec::new();
    let mut first = None;
    let mut reports = Vec::new();
    for scan in &s.scans {
        let name = s.group.display_word(&scan.orbit.word);
        let mut entries = Vec::new();
        for (index, enc) in scan.encounters.iter().enumerate() {
            let sep = encounters::separation_ok(enc);
            let mut entry = EncounterEntry {
                index,
                l: enc.l,
                coords: enc.coords().iter().map(|c| [c.0, c.1]).collect(),
                loop_times: enc.loop_times.clone(),
                t_enc: enc.t_enc,
                separation_ok: sep.ok,
                skipped: None,
                partners: Vec::new(),
            };
            entry.skipped = if enc.l < 3 {
                Some("L < 3".into())
            } else if !sep.ok {
                Some(format!("separation condition fails: {:?}", sep.violation))
            } else if enc.ambiguous {
                Some("ambiguous cluster".into())
            } else {
                None
            };
            if entry.skipped.is_none() {
                admissible += 1;
                match partners::synthesize_all(&s.group, &scan.orbit, enc, &popts) {
                    Ok(all) => {
                        for (r, v) in &all {
                            if !v.pass {
                                let c = v.first_failure().map(|c| c.name.clone()).unwrap_or_default();
                                failures.push(format!("{name} encounter {index} P = {:?}: {c}", r.reconnection.images()));
                            }
                            entry.partners.push(PartnerEntry {
                                p: r.reconnection.images(),
                                word: s.group.display_word(&r.partner.word),
                                loop_sequence: r.loop_sequence.clone(),
                                t_prime: r.t_prime,
                                t_prime_j: r.t_prime_j.clone(),
                                delta_s: r.delta_s,
                                residual: r.residual,
                                bound: r.bound_value,
                                cascade_trace_gap: r.cascade.as_ref().map(|c| c.relative_trace_gap),
                                pass: v.pass,
                                checks: v.checks.clone(),
                            });
                        }
                        if first.is_none() {
                            first = Some((scan.orbit.clone(), enc.clone(), all));
                        }
                    }
                    Err(e) => {
                        failures.push(format!("{name} encounter {index}: {e}"));
                        entry.skipped = Some(format!("synthesis failed: {e}"));
                    }
                }
            }
            entries.push(entry);
        }
        if !entries.is_empty() {
            reports.push(OrbitReport { orbit: name, period: scan.orbit.period, encounters: entries });
        }
    }
    Built { report: PartnersReport { mode: cfg.mode, eps: cfg.eps, harness_certified: s.harness, reports }, admissible, failures, first }
}

fn plot_svg(
    group: &FuchsianGroup,
    title: &str,
    orbit: &PeriodicOrbit,
    base: &ProjMatrix,
    region: f64,
    partner_orbits: &[PeriodicOrbit],
    points: &[ProjMatrix],
) -> Result<String, CliError> {
    let lifts = |o: &PeriodicOrbit| -> Result<Vec<ProjMatrix>, CliError> {
        Ok(flow::orbit_lifts(group, o, base, 1)
            .map_err(|e| CliError::failure(format!("lifts: {e}")))?
            .into_iter()
            .map(|l| l.frame)
            .collect())
    };
    let mut layers = vec![Layer { color: "#1f77b4", width: 2.0, frames: lifts(orbit)? }];
    for (k, p) in partner_orbits.iter().enumerate() {
        layers.push(Layer { color: PALETTE[k % PALETTE.len()], width: 1.0, frames: lifts(p)? });
    }
    let rel: Vec<ProjMatrix> = points.iter().map(|p| base.inverse() * *p).collect();
    Ok(svg::render(title, &layers, &rel, region))
}

pub fn partners(cfg: &RunConfig, opts: &Options) -> Result<(), CliError> {
    let s = setting(cfg, opts)?;
    let built = build_partners(cfg, &s);
    let text = match opts.format {
        Format::Json => to_json(&built.report)?,
        Format::Csv => {
            let mut rows = Vec::new();
            for r in &built.report.reports {
                for e in &r.encounters {
                    for p in &e.partners {
                        rows.push(vec![
                            r.orbit.clone(),
                            e.index.to_string(),
                            e.l.to_string(),
                            p.p.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
                            p.word.clone(),
                            fmt_f64(p.t_prime),
                            fmt_f64(p.delta_s),
                            fmt_f64(p.residual),
                            fmt_f64(p.bound),
                            p.pass.to_string(),
                        ]);
                    }
                }
            }
            to_csv(&["orbit", "encounter", "L", "P", "word", "T_prime", "delta_S", "residual", "bound", "pass"], &rows)?
        }
    };
    emit(opts.out.as_deref(), &format!("partners.{}", opts.format.extension()), &text)?;
    if opts.svg {
        if let Some((orbit, enc, all)) = &built.first {
            let partner_orbits: Vec<PeriodicOrbit> = all.iter().map(|(r, _)| r.partner.clone()).collect();
            let points: Vec<ProjMatrix> = enc.piercings.iter().map(|p| p.point).collect();
            let title = format!("{} and its partners", s.group.display_word(&orbit.word));
            let svg = plot_svg(&s.group, &title, orbit, &enc.base.lift, enc.radius, &partner_orbits, &points)?;
            let dir = opts.out.clone().unwrap_or_else(|| ".".into());
            emit(Some(&dir), "partners.svg", &svg)?;
        }
    }
    if built.admissible == 0 {
        return Err(CliError::nothing(format!("no admissible encounter with 3 <= L <= {} at eps = {}", cfg.l_max, cfg.eps)));
    }
    if let Some(first) = built.failures.first() {
        return Err(CliError::failure(format!("{} partner check(s) failed; first: {first}", built.failures.len())));
    }
    Ok(())
}

pub fn verify(cfg: &RunConfig, opts: &Options) -> Result<(), CliError> {
    let group = cfg.build_group()?;
    let report = suites::run_all(opts.seed, &cfg.suites, group.config().sigma0_proxy, opts.fault);
    emit(opts.out.as_deref(), "verify.json", &to_json(&report)?)?;
    match report.first_failure() {
        None => Ok(()),
        Some((suite, f)) => Err(CliError::failure(format!(
            "{suite}: {} (sample {}: lhs {} vs rhs {})",
            f.check.name,
            f.sample,
            fmt_f64(f.check.lhs),
            fmt_f64(f.check.rhs)
        ))),
    }
}

pub fn plot(cfg: &RunConfig, opts: &Options) -> Result<(), CliError> {
    let s = setting(cfg, opts)?;
    let built = build_partners(cfg, &s);
    let svg = match &built.first {
        Some((orbit, enc, all)) => {
            let partner_orbits: Vec<PeriodicOrbit> = all.iter().map(|(r, _)| r.partner.clone()).collect();
            let points: Vec<ProjMatrix> = enc.piercings.iter().map(|p| p.point).collect();
            let title = format!("{} and its partners", s.group.display_word(&orbit.word));
            plot_svg(&s.group, &title, orbit, &enc.base.lift, enc.radius, &partner_orbits, &points)?
        }
        None => {
            let scan = s.scans.first().ok_or_else(|| CliError::nothing("no orbit to plot"))?;
            let title = s.group.display_word(&scan.orbit.word);
            plot_svg(&s.group, &title, &scan.orbit, &scan.orbit.frame, 0.0, &[], &[])?
        }
    };
    emit(opts.out.as_deref(), "plot.svg", &svg)?;
    Ok(())
}
