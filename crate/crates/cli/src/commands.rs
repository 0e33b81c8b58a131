//! The four subcommands. Each writes its artifacts under `cfg.out` and returns
//! a [`Report`] whose verdict decides the exit code.

use crate::config::{usage, InitialKind, RunConfig, VariantName};
use anyhow::Context;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::PathBuf;
use waveheat::checks::{self, CheckConfig, Mutation};
use waveheat::io::{write_csv_with_sidecar, write_json};
use waveheat::spectral::{
    compare_to_theorem_bound, log_grid, resolvent_envelope, EnvelopeOptions, ResolventScan, ScanFlag,
};
use waveheat::time::mild_vs_classical_comparison;
use waveheat::{
    build_paper_network, classical_initial_data, decay_exponent, discretize, discretize_heat_dirichlet,
    discretize_wave_damped, eta_lower_bound, fit_power_law, mu, network_transfer_p2, re_p2_on_axis, simulate,
    DiscreteSystem, ExteriorBc, HeatEdgeParams, InitialData, NetworkSpec,
};

/// Relative slack allowed when checking that energy never increases.
const ENERGY_SLACK: f64 = 1e-12;

#[derive(Debug, Default, Serialize)]
pub struct Report {
    pub command: String,
    pub checks: BTreeMap<String, bool>,
    pub files: Vec<PathBuf>,
}

impl Report {
    fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            ..Default::default()
        }
    }

    fn check(&mut self, name: &str, ok: bool) {
        self.checks.insert(name.into(), ok);
    }

    pub fn passed(&self) -> bool {
        self.checks.values().all(|&ok| ok)
    }
}

fn sidecar(cfg: &RunConfig, extra: Value) -> Value {
    let mut v = json!({ "config": cfg });
    if let (Some(map), Value::Object(more)) = (v.as_object_mut(), extra) {
        map.extend(more);
    }
    v
}

fn emit(report: &mut Report, cfg: &RunConfig, stem: &str, csv: &str, extra: Value) -> anyhow::Result<()> {
    let files = write_csv_with_sidecar(&cfg.out, stem, csv, &sidecar(cfg, extra))
        .with_context(|| format!("writing {stem}.csv"))?;
    report.files.extend(files);
    Ok(())
}

fn emit_json(report: &mut Report, cfg: &RunConfig, name: &str, extra: Value) -> anyhow::Result<()> {
    let path = cfg.out.join(name);
    write_json(&path, &sidecar(cfg, extra)).with_context(|| format!("writing {name}"))?;
    report.files.push(path);
    Ok(())
}

fn network(cfg: &RunConfig) -> anyhow::Result<NetworkSpec> {
    let [a, b, c] = cfg.betas;
    build_paper_network(a, b, c, cfg.bc).map_err(|e| usage(e.to_string()))
}

fn system(cfg: &RunConfig, spec: &NetworkSpec) -> anyhow::Result<DiscreteSystem> {
    let sys = match cfg.variant {
        VariantName::Full => discretize(spec, cfg.n),
        VariantName::WaveDamped => discretize_wave_damped(spec, cfg.n),
        VariantName::HeatDirichlet => discretize_heat_dirichlet(spec, cfg.n),
    };
    sys.map_err(|e| usage(e.to_string()))
}

/// Writes the network description and, if asked, the generator.
fn emit_model(report: &mut Report, cfg: &RunConfig, spec: &NetworkSpec, sys: &DiscreteSystem) -> anyhow::Result<()> {
    std::fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join("network.json");
    std::fs::write(&path, spec.to_json()?)?;
    report.files.push(path);
    if cfg.export_matrix {
        sys.export(&cfg.out, "generator")?;
        report.files.push(cfg.out.join("generator.mtx"));
        report.files.push(cfg.out.join("generator.weights"));
    }
    Ok(())
}

/// `P₂(is)`, `Re P₂(is)`, `η`, `μ` and `μ/η` over the s-window.
pub fn cmd_transfer(cfg: RunConfig) -> anyhow::Result<Report> {
    let cfg = cfg.with_s_defaults(10.0, 1e6, 200);
    cfg.validate()?;
    let params = HeatEdgeParams::triple(cfg.betas).map_err(|e| usage(e.to_string()))?;
    let [lo, hi] = cfg.s_window();
    let grid = log_grid(lo, hi, cfg.s_points.unwrap());

    const UPPER: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    let mut csv = String::from("s");
    for (i, j) in UPPER {
        csv.push_str(&format!(",P{}{}_re,P{}{}_im", i + 1, j + 1, i + 1, j + 1));
    }
    for (i, j) in UPPER {
        csv.push_str(&format!(",ReP{}{}", i + 1, j + 1));
    }
    csv.push_str(",eta,mu,mu_over_eta\n");

    let (mut ss, mut etas, mut ratios) = (Vec::new(), Vec::new(), Vec::new());
    let mut all_positive = true;
    for &s in &grid {
        let p = network_transfer_p2(Complex64::new(0.0, s), &params)?;
        let re = re_p2_on_axis(s, &params)?;
        let m = mu(s, &params);
        let eta = eta_lower_bound(s, &params).unwrap_or_else(|_| {
            all_positive = false;
            f64::NAN
        });
        csv.push_str(&format!("{s:.12e}"));
        for (i, j) in UPPER {
            let z = p.get(i, j);
            csv.push_str(&format!(",{:.12e},{:.12e}", z.re, z.im));
        }
        for (i, j) in UPPER {
            csv.push_str(&format!(",{:.12e}", re.entries[i][j]));
        }
        csv.push_str(&format!(",{eta:.12e},{m:.12e},{:.12e}\n", m / eta));
        if eta.is_finite() {
            ss.push(s);
            etas.push(eta);
            ratios.push(m / eta);
        }
    }
    let eta_fit = fit_power_law(&ss, &etas, [lo, hi]).ok();
    let ratio_fit = fit_power_law(&ss, &ratios, [lo, hi]).ok();

    let mut report = Report::new("transfer");
    report.check("eta_positive", all_positive);
    let extra = json!({ "eta_fit": eta_fit, "mu_over_eta_fit": ratio_fit, "checks": report.checks });
    emit(&mut report, &cfg, "transfer", &csv, extra)?;
    Ok(report)
}

pub fn resolvent_defaults(cfg: RunConfig) -> RunConfig {
    cfg.with_s_defaults(2.0, 200.0, 40)
}

/// The upper decade of the s-window.
pub fn default_fit_window(cfg: &RunConfig) -> [f64; 2] {
    let [lo, hi] = cfg.s_window();
    [lo.max(hi / 10.0), hi]
}

/// Pointwise scan, running supremum, resonance peaks and, for the coupled
/// network, the comparison with `μ/η`.
pub fn cmd_resolvent(cfg: RunConfig) -> anyhow::Result<Report> {
    let mut cfg = resolvent_defaults(cfg);
    cfg.fit_window.get_or_insert(default_fit_window(&cfg));
    cfg.validate()?;
    let [lo, hi] = cfg.s_window();
    let fit_window = cfg.fit_window.unwrap();
    let spec = network(&cfg)?;
    let sys = system(&cfg, &spec)?;
    let mut report = Report::new("resolvent");
    emit_model(&mut report, &cfg, &spec, &sys)?;

    let grid = log_grid(lo, hi, cfg.s_points.unwrap());
    let options = EnvelopeOptions {
        epsilon: lo.min(EnvelopeOptions::default().epsilon),
        ..Default::default()
    };
    let env = resolvent_envelope(&sys, &grid, options)?;
    let failed = |scan: &ResolventScan| scan.flags.iter().filter(|f| **f == ScanFlag::Failed).count();
    report.check("no_failed_solves", failed(&env.samples) == 0);
    let meta = |scan: &ResolventScan| json!({ "n": scan.n, "variant": scan.variant, "betas": scan.betas });
    emit(&mut report, &cfg, "scan", &env.samples.to_csv(), meta(&env.samples))?;
    emit(
        &mut report,
        &cfg,
        "envelope",
        &env.envelope.to_csv(),
        json!({ "scan": meta(&env.envelope), "options": env.options, "peaks_found": env.peaks.len() }),
    )?;
    let mut peaks = String::from("s,norm,eig_re,eig_im\n");
    for p in &env.peaks {
        peaks.push_str(&format!(
            "{:.12e},{:.12e},{:.12e},{:.12e}\n",
            p.s, p.norm, p.eigenvalue.re, p.eigenvalue.im
        ));
    }
    emit(&mut report, &cfg, "peaks", &peaks, meta(&env.envelope))?;

    let (xs, ys) = env.envelope.resolved();
    let fit = fit_power_law(&xs, &ys, fit_window);
    let max_norm = env.envelope.norms.iter().cloned().fold(0.0, f64::max);
    let mut summary = json!({
        "fit": fit.as_ref().ok(),
        "fit_error": fit.as_ref().err().map(|e| e.to_string()),
        "max_envelope": max_norm,
    });
    if cfg.variant == VariantName::Full {
        report.check("fit_computed", fit.is_ok());
        let cmp = compare_to_theorem_bound(&env.envelope, cfg.betas)?;
        emit(
            &mut report,
            &cfg,
            "bound",
            &cmp.to_csv(),
            json!({ "measured_fit": cmp.measured_fit, "bound_fit": cmp.bound_fit, "ratio_spread": cmp.ratio_spread }),
        )?;
        summary["ratio_spread"] = json!(cmp.ratio_spread);
    }
    summary["checks"] = json!(report.checks);
    emit_json(&mut report, &cfg, "resolvent_fit.json", summary)?;
    Ok(report)
}

/// Energy trace, decay fit and optionally the raw/smoothed comparison.
pub fn cmd_simulate(cfg: RunConfig) -> anyhow::Result<Report> {
    cfg.validate()?;
    let spec = network(&cfg)?;
    let sys = system(&cfg, &spec)?;
    let mut report = Report::new("simulate");
    emit_model(&mut report, &cfg, &spec, &sys)?;

    let mut z0 = match cfg.initial {
        InitialKind::Classical => classical_initial_data(&sys, cfg.seed)?,
        InitialKind::Mild => InitialData::random(&sys, cfg.seed),
        InitialKind::Zero => InitialData::zero(&sys),
    };
    if cfg.offset != 0.0 {
        let c = sys.constant_node_state();
        let k = cfg.offset / sys.energy(&c).sqrt();
        z0.state.iter_mut().zip(&c).for_each(|(z, c)| *z += k * c);
        z0.tag = format!("{} + {} constant", z0.tag, cfg.offset);
    }
    // the constant node state is conserved when it spans the kernel
    let kernel_energy = (cfg.variant == VariantName::Full && cfg.bc == ExteriorBc::NeumannStress).then(|| {
        let c = sys.constant_node_state();
        let p = sys.inner(&z0.state, &c);
        0.5 * p * p / sys.norm_sq(&c)
    });
    let trace = simulate(&sys, &z0, cfg.t_end, cfg.dt)?;
    report.check("energy_non_increasing", trace.is_non_increasing(ENERGY_SLACK));
    report.check("energy_finite", trace.energies.iter().all(|e| e.is_finite()));

    let fit = if cfg.decay_window[1] <= cfg.t_end {
        decay_exponent(&trace, cfg.decay_window).map_err(|e| e.to_string())
    } else {
        Err(format!(
            "decay window {:?} extends past T = {}",
            cfg.decay_window, cfg.t_end
        ))
    };
    let extra = json!({
            "n": trace.n,
            "dt": trace.dt,
            "seed": trace.seed,
            "variant": trace.variant,
            "betas": trace.betas,
            "initial": { "tag": z0.tag, "classical": z0.classical },
            "final_over_initial": trace.final_energy() / trace.energies[0],
            "kernel_energy": kernel_energy,
            "checks": report.checks,
    });
    emit(&mut report, &cfg, "trace", &trace.to_csv(), extra)?;
    emit_json(
        &mut report,
        &cfg,
        "decay_fit.json",
        json!({ "fit": fit.as_ref().ok(), "fit_error": fit.as_ref().err() }),
    )?;

    if cfg.compare {
        let cmp = mild_vs_classical_comparison(&sys, &[cfg.seed], cfg.t_end, cfg.dt, cfg.decay_window)?;
        let runs = |runs: &[waveheat::time::DecayRun]| -> Vec<Value> {
            runs.iter()
                .map(|r| json!({ "seed": r.seed, "fit": r.fit, "final_ratio": r.final_ratio }))
                .collect()
        };
        emit_json(
            &mut report,
            &cfg,
            "comparison.json",
            json!({
                "window": cmp.window,
                "mild": runs(&cmp.mild),
                "classical": runs(&cmp.classical),
                "all_decayed": cmp.all_decayed,
                "classical_not_slower": cmp.classical_not_slower,
                "worst_classical_alpha": cmp.worst_classical_alpha,
            }),
        )?;
    }
    Ok(report)
}

/// Runs the acceptance checks and writes `summary.json`.
pub fn cmd_verify_all(cfg: RunConfig, mutation: Option<Mutation>) -> anyhow::Result<Report> {
    cfg.validate()?;
    let ids: Vec<String> = match &cfg.checks {
        Some(ids) => ids.clone(),
        None => checks::ALL.iter().map(|s| s.to_string()).collect(),
    };
    if let Some(bad) = ids.iter().find(|id| !checks::ALL.contains(&id.as_str())) {
        return Err(usage(format!(
            "unknown check '{bad}' (known: {})",
            checks::ALL.join(", ")
        )));
    }
    let check_cfg = CheckConfig {
        betas: cfg.betas,
        seeds: vec![cfg.seed],
        dt: cfg.dt,
        mutation,
    };
    let mut report = Report::new("verify-all");
    let mut results = Vec::new();
    for id in &ids {
        let r = checks::run(id, &check_cfg).expect("id validated above");
        println!("{}", r.line());
        report.check(&r.id, r.passed);
        results.push(r);
    }
    emit_json(
        &mut report,
        &cfg,
        "summary.json",
        json!({ "passed": results.iter().all(|r| r.passed), "mutation": mutation, "checks": results }),
    )?;
    Ok(report)
}
