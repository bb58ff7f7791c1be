//! One function per subcommand. Each resolves and validates its parameters
//! before computing anything, then writes its artifacts.

use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use super::config::{ConfigError, LoadedConfig};
use super::rundir::RunDir;
use super::{Failure, RunOutput};
use crate::diagnostics::{max_relative_energy_drift, record, sobolev_norm, write_records_csv, write_records_jsonl};
use crate::dynamics::{default_picard_delta, evolve, picard_iterate, step_plan, EvolutionParams};
use crate::gwp::{default_epsilon, growth_exponents, growth_sweep};
use crate::imethod::{commutator_terms, energy_increment, scaling_study, IMultiplier};
use crate::numfmt::Num;
use crate::resonance::{annulus_count, count_exponent, equivalence_scan, sup_positive_annulus_count};
use crate::spectral::{Grid, RealField};
use crate::xsb::{bilinear_probe, l4_probe, BilinearForm, Ensemble, ProbeReport, ProbeSetup};

type Res<T> = Result<T, Failure>;

pub(super) fn dispatch(command: &str, cfg: &LoadedConfig, threads: usize) -> Res<RunOutput> {
    let run = match command {
        "simulate" => simulate,
        "picard-check" => picard_check,
        "imethod-scan" => imethod_scan,
        "resonance-verify" => resonance_verify,
        "annulus-count" => annulus,
        "l4-probe" => l4,
        "bilinear-probe" => bilinear,
        "growth-campaign" => growth,
        other => return Err(Failure::Config(format!("unknown subcommand `{other}`"))),
    };
    let job = run(cfg)?;
    let parent = cfg.config.output_dir.clone().unwrap_or_else(|| "runs".into());
    let mut dir = RunDir::create(Path::new(&parent), &cfg.run_name(command))
        .map_err(|e| Failure::Config(format!("{}: {e}", cfg.locate("name"))))?;
    match (job.execute)(&mut dir) {
        Ok(summary) => {
            let run_dir = dir.finish(command, &job.resolved, threads, None)?;
            Ok(RunOutput { run_dir, summary })
        }
        Err(f) => {
            dir.finish(command, &job.resolved, threads, Some(f.message()))?;
            Err(f)
        }
    }
}

/// Validated parameters plus the deferred computation.
struct Job<'a> {
    resolved: Value,
    execute: Box<dyn FnOnce(&mut RunDir) -> Res<Value> + 'a>,
}

fn check(cfg: &LoadedConfig, field: &str, ok: bool, msg: impl std::fmt::Display) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(cfg.error(field, msg))
    }
}

fn grid(cfg: &LoadedConfig, default_n: usize) -> Result<Grid, ConfigError> {
    let j = cfg.config.j.unwrap_or(1);
    check(cfg, "j", (1..=8).contains(&j), format_args!("must be in 1..=8, got {j}"))?;
    let n = cfg.config.n_points.unwrap_or(default_n);
    Grid::new(n, j).map_err(|e| cfg.error("n_points", e))
}

fn positive(cfg: &LoadedConfig, field: &str, v: f64) -> Result<f64, ConfigError> {
    check(cfg, field, v > 0.0 && v.is_finite(), format_args!("must be positive, got {v}"))?;
    Ok(v)
}

fn evolution(cfg: &LoadedConfig, dt: f64, t_end: f64) -> Result<EvolutionParams, ConfigError> {
    let dt = positive(cfg, "dt", cfg.config.dt.unwrap_or(dt))?;
    let t_end = cfg.config.t_end.unwrap_or(t_end);
    check(cfg, "t_end", t_end >= 0.0 && t_end.is_finite(), format_args!("must be non-negative, got {t_end}"))?;
    let mut p = EvolutionParams::new(dt, t_end);
    p.dealias = cfg.config.dealias.unwrap_or(true);
    p.nonlinear = cfg.config.nonlinear.unwrap_or(true);
    Ok(p)
}

fn initial_data(cfg: &LoadedConfig, grid: Grid, default: &str) -> Result<(String, RealField), ConfigError> {
    let profile = cfg.profile(default)?;
    let u0 = profile.build(grid).map_err(|e| cfg.error("profile", e))?;
    check(cfg, "profile", u0.mean().abs() <= 1e-14, "initial data must have zero mean")?;
    Ok((profile.to_string(), u0))
}

fn csv(dir: &mut RunDir, rel: &str, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Res<()> {
    dir.write(rel, fill).map_err(Failure::from)
}

fn simulate(cfg: &LoadedConfig) -> Res<Job<'_>> {
    let g = grid(cfg, 128)?;
    let params = evolution(cfg, 1e-4, 1.0)?;
    let (profile, u0) = initial_data(cfg, g, "single_mode:1:0.1")?;
    let s_list = cfg.config.s_list.clone().unwrap_or_else(|| vec![1.0]);
    check(cfg, "s_list", s_list.iter().all(|s| s.is_finite()), "entries must be finite")?;
    let (n_steps, _) = step_plan(&params);
    let record_every = cfg.config.record_every.unwrap_or_else(|| n_steps.div_ceil(1000).max(1));
    check(cfg, "record_every", record_every > 0, "must be positive")?;
    let snapshots = cfg.config.snapshots.unwrap_or(false);
    let resolved = json!({
        "j": g.j(), "n_points": g.n_points(), "dt": params.dt, "t_end": params.t_end,
        "dealias": params.dealias, "nonlinear": params.nonlinear, "profile": profile,
        "s_list": s_list, "record_every": record_every, "snapshots": snapshots,
    });
    Ok(Job {
        resolved,
        execute: Box::new(move |dir| {
            let traj = evolve(&u0, &params, record_every)?;
            let recs = record(&traj, &s_list);
            csv(dir, "diagnostics.csv", |w| write_records_csv(&recs, w))?;
            csv(dir, "diagnostics.jsonl", |w| write_records_jsonl(&recs, w))?;
            if snapshots {
                let names = traj.write_dir(&dir.path().join("snapshots"))?;
                dir.record(names.into_iter().map(|n| format!("snapshots/{n}")));
            }
            let summary = json!({
                "max_relative_energy_drift": max_relative_energy_drift(&recs),
                "max_abs_mean": recs.iter().map(|r| r.mean.abs()).fold(0.0, f64::max),
                "initial_h1_energy": recs.first().map(|r| r.h1_energy),
                "final_time": traj.end_time(),
                "n_records": recs.len(),
                "warnings": traj.warnings(),
            });
            dir.write_json("summary.json", &summary)?;
            Ok(summary)
        }),
    })
}

fn picard_check(cfg: &LoadedConfig) -> Res<Job<'_>> {
    let g = grid(cfg, 64)?;
    let params = evolution(cfg, 1e-4, 0.0)?;
    let (profile, u0) = initial_data(cfg, g, "single_mode:1:0.1")?;
    let delta = positive(cfg, "delta", cfg.config.delta.unwrap_or_else(|| default_picard_delta(&u0)))?;
    let n_iter = cfg.config.n_iter.unwrap_or(10);
    check(cfg, "n_iter", n_iter >= 2, format_args!("must be at least 2, got {n_iter}"))?;
    let s = cfg.config.s.unwrap_or(1.0);
    check(cfg, "s", s.is_finite(), "must be finite")?;
    let resolved = json!({
        "j": g.j(), "n_points": g.n_points(), "dt": params.dt, "profile": profile,
        "delta": delta, "n_iter": n_iter, "s": s, "dealias": params.dealias,
    });
    Ok(Job {
        resolved,
        execute: Box::new(move |dir| {
            let rep = picard_iterate(&u0, delta, n_iter, &params, s)?;
            let floor = 1e-13 * sobolev_norm(&u0, s).max(f64::MIN_POSITIVE);
            let distances = rep.distances();
            let ratios = rep.ratios(floor);
            csv(dir, "picard.csv", |w| {
                writeln!(w, "iteration,distance,ratio")?;
                for (i, d) in distances.iter().enumerate() {
                    match i.checked_sub(1).and_then(|p| ratios.get(p)) {
                        Some(r) => writeln!(w, "{},{},{}", i + 1, Num(*d), Num(*r))?,
                        None => writeln!(w, "{},{},", i + 1, Num(*d))?,
                    }
                }
                Ok(())
            })?;
            let fixed = rep.fixed_point();
            let h = fixed.times()[1] - fixed.times()[0];
            let mut p = params;
            p.dt = h;
            p.t_end = delta;
            let direct = evolve(&u0, &p, 1)?;
            let evolve_distance = if direct.len() == fixed.len() {
                direct
                    .states()
                    .iter()
                    .zip(fixed.states())
                    .map(|(a, b)| sobolev_norm(&a.sub(b).expect("same grid"), 1.0))
                    .fold(0.0, f64::max)
            } else {
                f64::NAN
            };
            let summary = json!({
                "delta": delta,
                "s": s,
                "distances": distances,
                "ratios": ratios,
                "ratio_floor": floor,
                "non_contraction": rep.non_contraction,
                "evolve_distance_h1": evolve_distance,
            });
            dir.write_json("summary.json", &summary)?;
            if rep.non_contraction {
                return Err(Failure::Numerical(format!(
                    "Picard iteration is not contracting on [0, {delta}]"
                )));
            }
            Ok(summary)
        }),
    })
}

fn imethod_scan(cfg: &LoadedConfig) -> Res<Job<'_>> {
    let g = grid(cfg, 256)?;
    let mut params = evolution(cfg, 1e-6, 0.0)?;
    let (profile, u0) = initial_data(cfg, g, "broadband:2:11:1")?;
    let s = cfg.config.s.unwrap_or(0.6);
    let delta = positive(cfg, "delta", cfg.config.delta.unwrap_or(0.1))?;
    params.t_end = delta;
    let cutoffs = cfg.config.cutoffs.clone().unwrap_or_else(|| vec![8, 16, 32, 64]);
    let multipliers = cutoffs
        .iter()
        .map(|&n| IMultiplier::new(s, n))
        .collect::<crate::Result<Vec<_>>>()
        .map_err(|e| cfg.error(if cfg.config.s.is_some() { "s" } else { "cutoffs" }, e))?;
    let check_identity = cfg.config.check_identity.unwrap_or(false);
    let record_every = cfg.config.record_every.unwrap_or(1);
    check(cfg, "record_every", record_every > 0, "must be positive")?;
    let resolved = json!({
        "j": g.j(), "n_points": g.n_points(), "dt": params.dt, "profile": profile, "s": s,
        "delta": delta, "cutoffs": cutoffs, "check_identity": check_identity,
        "record_every": record_every,
    });
    Ok(Job {
        resolved,
        execute: Box::new(move |dir| {
            let rep = scaling_study(&u0, delta, &multipliers, &params).map_err(|e| match e {
                crate::Error::InvalidArgument(m) => Failure::Config(cfg.error("cutoffs", m).0),
                other => other.into(),
            })?;
            csv(dir, "scaling.csv", |w| rep.write_csv(w))?;
            let mut summary = rep.summary_json();
            if check_identity {
                let traj = evolve(&u0, &params, record_every)?;
                let mut rows = Vec::new();
                for m in &multipliers {
                    let inc = energy_increment(&traj, m);
                    let t = commutator_terms(&traj, m)?;
                    let rel = (inc - t.sum()).abs() / inc.abs().max(f64::MIN_POSITIVE);
                    rows.push((m.n_cutoff(), inc, t, rel));
                }
                csv(dir, "identity.csv", |w| {
                    writeln!(w, "N,increment,t1,t2,t3,sum,relative_error")?;
                    for (n, inc, t, rel) in &rows {
                        writeln!(
                            w,
                            "{n},{},{},{},{},{},{}",
                            Num(*inc),
                            Num(t.t1),
                            Num(t.t2),
                            Num(t.t3),
                            Num(t.sum()),
                            Num(*rel)
                        )?;
                    }
                    Ok(())
                })?;
                summary["identity_max_relative_error"] =
                    json!(rows.iter().map(|r| r.3).fold(0.0, f64::max));
            }
            dir.write_json("summary.json", &summary)?;
            Ok(summary)
        }),
    })
}

fn resonance_verify(cfg: &LoadedConfig) -> Res<Job<'_>> {
    let j = cfg.config.j.unwrap_or(1);
    check(cfg, "j", (1..=8).contains(&j), format_args!("must be in 1..=8, got {j}"))?;
    let k_max = cfg.config.k_max.unwrap_or(64);
    check(cfg, "k_max", (2..=4096).contains(&k_max), format_args!("must be in 2..=4096, got {k_max}"))?;
    Ok(Job {
        resolved: json!({ "j": j, "k_max": k_max }),
        execute: Box::new(move |dir| {
            let rep = equivalence_scan(j, k_max)?;
            let v = serde_json::to_value(&rep).expect("report serializes");
            dir.write_json("resonance.json", &v)?;
            Ok(v)
        }),
    })
}

fn annulus(cfg: &LoadedConfig) -> Res<Job<'_>> {
    let j = cfg.config.j.unwrap_or(1);
    check(cfg, "j", (1..=4).contains(&j), format_args!("must be in 1..=4, got {j}"))?;
    let k = cfg.config.k.unwrap_or(1);
    check(cfg, "k", k != 0, "must be nonzero")?;
    let k1_range = cfg.config.k1_range.unwrap_or(128);
    check(cfg, "k1_range", (1..=100_000).contains(&k1_range), format_args!("must be in 1..=100000, got {k1_range}"))?;
    let k_limit = cfg.config.k_max.unwrap_or(64);
    check(cfg, "k_max", (1..=4096).contains(&k_limit), format_args!("must be in 1..=4096, got {k_limit}"))?;
    let windows = cfg
        .config
        .windows
        .clone()
        .unwrap_or_else(|| vec![1, 10, 100, 1000, 10_000, 100_000]);
    check(cfg, "windows", windows.len() >= 2, "needs at least two window widths")?;
    check(cfg, "windows", windows.windows(2).all(|w| w[0] < w[1]), "must be strictly ascending")?;
    check(cfg, "windows", windows[0] > 0, "must be positive")?;
    Ok(Job {
        resolved: json!({ "j": j, "k": k, "k1_range": k1_range, "k_max": k_limit, "windows": windows }),
        execute: Box::new(move |dir| {
            let mut signed = Vec::new();
            let mut positive = Vec::new();
            for &m in &windows {
                signed.push(annulus_count(k, j, m, k1_range)?);
                positive.push(sup_positive_annulus_count(j, m, k_limit)?);
            }
            csv(dir, "annulus.csv", |w| {
                writeln!(w, "window,signed_count,positive_sup_count")?;
                for ((m, a), b) in windows.iter().zip(&signed).zip(&positive) {
                    writeln!(w, "{m},{a},{b}")?;
                }
                Ok(())
            })?;
            let summary = json!({
                "signed_exponent": count_exponent(&windows, &signed),
                "positive_sup_exponent": count_exponent(&windows, &positive),
                "bound_exponent": 1.0 / (2 * j + 1) as f64,
                "signed_counts": signed,
                "positive_sup_counts": positive,
            });
            dir.write_json("summary.json", &summary)?;
            Ok(summary)
        }),
    })
}

fn probe_setup(cfg: &LoadedConfig, n: usize, nt: usize, samples: usize) -> Result<ProbeSetup, ConfigError> {
    let g = grid(cfg, n)?;
    let n_time = cfg.config.n_time.unwrap_or(nt);
    check(cfg, "n_time", n_time >= 4 && n_time.is_power_of_two(), format_args!("must be a power of two >= 4, got {n_time}"))?;
    let t_window = positive(cfg, "t_window", cfg.config.t_window.unwrap_or(TAU))?;
    let m = t_window / TAU;
    check(cfg, "t_window", m.round() >= 1.0 && (m - m.round()).abs() <= 1e-12 * m, "must be a positive multiple of 2π")?;
    let n_samples = cfg.config.n_samples.unwrap_or(samples);
    check(cfg, "n_samples", n_samples >= 1, "must be at least 1")?;
    Ok(ProbeSetup {
        grid: g,
        n_time,
        t_window,
        n_samples,
        seed: cfg.config.seed.unwrap_or(1),
        ensemble: cfg.config.ensemble.unwrap_or(Ensemble::Mixed),
    })
}

fn write_probe(dir: &mut RunDir, rep: &ProbeReport, extra: Value) -> Res<Value> {
    csv(dir, "ratios.csv", |w| rep.write_ratios_csv(w))?;
    let mut v = serde_json::to_value(rep).expect("report serializes");
    if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
        m.extend(e);
    }
    dir.write_json("report.json", &v)?;
    Ok(v)
}

fn l4(cfg: &LoadedConfig) -> Res<Job<'_>> {
    let setup = probe_setup(cfg, 64, 32, 1000)?;
    Ok(Job {
        resolved: serde_json::to_value(setup).expect("setup serializes"),
        execute: Box::new(move |dir| {
            let rep = l4_probe(&setup)?;
            let b = crate::xsb::strichartz_exponent(setup.grid.j());
            write_probe(dir, &rep, json!({ "b": b }))
        }),
    })
}

fn bilinear(cfg: &LoadedConfig) -> Res<Job<'_>> {
    let setup = probe_setup(cfg, 32, 16, 500)?;
    let form = cfg.config.form.unwrap_or(BilinearForm::Lemma31);
    let j = setup.grid.j();
    let s = cfg.config.s.unwrap_or_else(|| form.threshold(j));
    check(
        cfg,
        "s",
        s >= form.threshold(j),
        format_args!("{} needs s >= {} for j = {j}, got {s}", form.name(), form.threshold(j)),
    )?;
    let mut resolved = serde_json::to_value(setup).expect("setup serializes");
    resolved["form"] = json!(form);
    resolved["s"] = json!(s);
    Ok(Job {
        resolved,
        execute: Box::new(move |dir| {
            let rep = bilinear_probe(form, s, &setup)?;
            write_probe(dir, &rep, json!({ "form": form, "s": s }))
        }),
    })
}

fn growth(cfg: &LoadedConfig) -> Res<Job<'_>> {
    let g = grid(cfg, 64)?;
    let params = evolution(cfg, 1e-3, 50.0)?;
    let (profile, u0) = initial_data(cfg, g, "broadband:2:5:0.1")?;
    let s_list = match (cfg.config.s, &cfg.config.s_list) {
        (Some(s), _) => vec![s],
        (None, Some(l)) => l.clone(),
        (None, None) => vec![0.8],
    };
    let field = if cfg.config.s.is_some() { "s" } else { "s_list" };
    check(cfg, field, !s_list.is_empty(), "needs at least one regularity")?;
    let epsilon = cfg.config.epsilon.unwrap_or_else(|| default_epsilon(g.j()));
    for &s in &s_list {
        growth_exponents(g.j(), s, epsilon).map_err(|e| {
            cfg.error(if cfg.config.epsilon.is_some() && e.to_string().contains("epsilon") { "epsilon" } else { field }, e)
        })?;
    }
    let record_every = cfg.config.record_every.unwrap_or(100);
    check(cfg, "record_every", record_every > 0, "must be positive")?;
    let resolved = json!({
        "j": g.j(), "n_points": g.n_points(), "dt": params.dt, "t_end": params.t_end,
        "profile": profile, "s_list": s_list, "epsilon": epsilon, "record_every": record_every,
        "dealias": params.dealias, "nonlinear": params.nonlinear,
    });
    Ok(Job {
        resolved,
        execute: Box::new(move |dir| {
            let cells: Vec<(RealField, f64)> = s_list.iter().map(|&s| (u0.clone(), s)).collect();
            let runs = growth_sweep(&cells, Some(epsilon), &params, record_every);
            let mut summaries = Vec::new();
            for (run, s) in runs.into_iter().zip(&s_list) {
                let c = run?;
                csv(dir, &format!("growth_s{s}.csv"), |w| c.write_csv(w))?;
                summaries.push(c.summary_json());
            }
            let summary = json!({ "campaigns": summaries });
            dir.write_json("summary.json", &summary)?;
            Ok(summary)
        }),
    })
}
