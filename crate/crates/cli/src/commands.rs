//! Experiment orchestration: one entry point per subcommand, each writing its
//! artifacts into the output directory and returning the process exit code
//! (0 pass, 2 verification failure, 1 handled by the caller on error).

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use levy_besov_core::analysis::{
    estimate_tau_p, moment_slope_curve, theorem_report, MomentSlopeCurve, ReportConfig,
};
use levy_besov_core::besov::{
    classify_convergence, per_scale_contributions, weighted_partial_norm, BesovParams, Convergence,
    ScaleContribution, CONVERGENCE_SLOPE_THRESHOLD,
};
use levy_besov_core::field::{dirac_coefficient_field, sample_coefficient_field};
use levy_besov_core::levy::{farkas_aligned_ladder, LevyFamily};
use levy_besov_core::stats::ols;

use crate::config::{DiracConfig, ExperimentConfig};
use crate::output::{
    write_json_with_envelope, write_moments_csv, write_per_scale_csv, write_scale_plot_svg,
    write_triebel_svg,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CommandKind {
    /// Closed-form and numeric noise indices plus structural conditions.
    Indices,
    /// Synthesize one coefficient field and dump it.
    Simulate,
    /// Per-scale Besov terms and truncated norms.
    Besov,
    /// Moment-scaling curves and slopes.
    Moments,
    /// Full exponent verification against the index table.
    Verify,
    /// Deterministic Dirac localization classification.
    Dirac,
}

pub fn run_experiment(cfg: &ExperimentConfig, command: CommandKind) -> Result<i32> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    match command {
        CommandKind::Indices => cmd_indices(cfg),
        CommandKind::Simulate => cmd_simulate(cfg),
        CommandKind::Besov => cmd_besov(cfg),
        CommandKind::Moments => cmd_moments(cfg),
        CommandKind::Verify => cmd_verify(cfg),
        CommandKind::Dirac => cmd_dirac(cfg),
    }
}

fn default_ladder(family: &LevyFamily) -> Vec<f64> {
    match family {
        LevyFamily::FarkasSingle { beta2, m_order } => farkas_aligned_ladder(*beta2, *m_order, 3),
        LevyFamily::FarkasDouble { beta2, m_order, .. } => {
            farkas_aligned_ladder(*beta2, *m_order, 3)
        }
        // logarithmic exponents approach their index slowly: deep rungs only
        LevyFamily::Laplace { .. } | LevyFamily::SymmetricGamma { .. } => vec![20.0, 40.0],
        _ => (10..=40).map(|m| m as f64).collect(),
    }
}

#[derive(Serialize)]
struct IndicesArtifact {
    model: String,
    closed_form: levy_besov_core::levy::NoiseIndices,
    numeric: NumericIndices,
    conditions: ConditionsArtifact,
}

#[derive(Serialize)]
struct NumericIndices {
    beta_inf: f64,
    beta_inf_lower: f64,
    ladder: Vec<f64>,
    heuristic: bool,
}

#[derive(Serialize)]
struct ConditionsArtifact {
    sector_ratio_sup: f64,
    smallest_passing_epsilon: Option<f64>,
    epsilon_grid: Vec<(f64, String)>,
}

fn cmd_indices(cfg: &ExperimentConfig) -> Result<i32> {
    let model = cfg.model.to_model()?;
    let closed = model.closed_form_indices()?;
    let ladder = default_ladder(model.family());
    let est = model.numeric_bg_indices(&ladder)?;
    let cond = model.check_conditions()?;
    let artifact = IndicesArtifact {
        model: cfg.model.label(),
        closed_form: closed,
        numeric: NumericIndices {
            beta_inf: est.beta_inf,
            beta_inf_lower: est.beta_inf_lower,
            ladder,
            heuristic: est.heuristic,
        },
        conditions: ConditionsArtifact {
            sector_ratio_sup: cond.sector_ratio_sup,
            smallest_passing_epsilon: cond.smallest_passing_epsilon,
            epsilon_grid: cond
                .epsilon_results
                .iter()
                .map(|(e, o)| (*e, format!("{o:?}")))
                .collect(),
        },
    };
    write_json_with_envelope(&cfg.out_dir.join("indices.json"), "indices", &artifact, cfg)?;
    Ok(0)
}

fn cmd_simulate(cfg: &ExperimentConfig) -> Result<i32> {
    let model = cfg.model.to_model()?;
    let backend = cfg.backend.resolve(&model);
    let window = cfg.simulation_window();
    let field =
        sample_coefficient_field(&model, &window, &cfg.wavelet, backend, cfg.master_seed, 0)?;
    let dump_path = cfg.out_dir.join("coefficients.bin");
    let file = fs::File::create(&dump_path)
        .with_context(|| format!("creating {}", dump_path.display()))?;
    field.write_dump(std::io::BufWriter::new(file))?;
    let params = BesovParams::new(cfg.p_grid[0], cfg.tau_ref, cfg.rho, cfg.d);
    let contribs = per_scale_contributions(&field, &params);
    write_per_scale_csv(&cfg.out_dir.join("per_scale.csv"), &contribs)?;
    let summary = serde_json::json!({
        "backend": backend.label(),
        "blocks": field.blocks.len(),
        "coefficients": field.blocks.iter().map(|b| b.data.len()).sum::<usize>(),
        "dump": dump_path.display().to_string(),
    });
    write_json_with_envelope(&cfg.out_dir.join("simulate.json"), "field", &summary, cfg)?;
    Ok(0)
}

/// Mean per-scale terms over replicates, with counts taken from replicate 0.
fn mean_contributions(cfg: &ExperimentConfig, p: f64) -> Result<Vec<ScaleContribution>> {
    let model = cfg.model.to_model()?;
    let backend = cfg.backend.resolve(&model);
    let window = cfg.simulation_window();
    let params = BesovParams::new(p, cfg.tau_ref, cfg.rho, cfg.d);
    let per_rep: Vec<Vec<ScaleContribution>> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let field = sample_coefficient_field(
                &model,
                &window,
                &cfg.wavelet,
                backend,
                cfg.master_seed,
                rep,
            )?;
            Ok(per_scale_contributions(&field, &params))
        })
        .collect::<Result<_>>()?;
    let mut mean = per_rep[0].clone();
    for row in mean.iter_mut() {
        row.t_j = 0.0;
    }
    for rep in &per_rep {
        for (m, r) in mean.iter_mut().zip(rep) {
            m.t_j += r.t_j / per_rep.len() as f64;
        }
    }
    Ok(mean)
}

fn cmd_besov(cfg: &ExperimentConfig) -> Result<i32> {
    let model = cfg.model.to_model()?;
    let backend = cfg.backend.resolve(&model);
    let window = cfg.simulation_window();
    let mean = mean_contributions(cfg, cfg.p_grid[0])?;
    write_per_scale_csv(&cfg.out_dir.join("per_scale.csv"), &mean)?;
    // truncated norms per p on replicate 0, plus the p = ∞ sup form
    let field =
        sample_coefficient_field(&model, &window, &cfg.wavelet, backend, cfg.master_seed, 0)?;
    let j_cut = window.j_fine - 1;
    let mut norms = Vec::new();
    for &p in &cfg.p_grid {
        let params = BesovParams::new(p, cfg.tau_ref, cfg.rho, cfg.d);
        norms.push(serde_json::json!({
            "p": p,
            "partial_norm": weighted_partial_norm(&field, &params, j_cut),
        }));
    }
    let sup_params = BesovParams::new(f64::INFINITY, cfg.tau_ref, cfg.rho, cfg.d);
    let artifact = serde_json::json!({
        "tau": cfg.tau_ref,
        "rho": cfg.rho,
        "norms": norms,
        "sup_form_norm": weighted_partial_norm(&field, &sup_params, j_cut),
    });
    write_json_with_envelope(&cfg.out_dir.join("besov.json"), "besov", &artifact, cfg)?;
    let points: Vec<(f64, f64)> = mean
        .iter()
        .filter(|c| c.t_j > 0.0)
        .map(|c| (c.j as f64, c.t_j.log2()))
        .collect();
    fs::create_dir_all(cfg.out_dir.join("plots"))?;
    write_scale_plot_svg(
        &cfg.out_dir.join("plots/per_scale.svg"),
        &format!("mean log2 T_j, p={}", cfg.p_grid[0]),
        &points,
        None,
    )?;
    Ok(0)
}

fn moment_curves(cfg: &ExperimentConfig) -> Result<Vec<MomentSlopeCurve>> {
    let model = cfg.model.to_model()?;
    let backend = cfg.backend.resolve(&model);
    let window = cfg.simulation_window();
    let j_range = cfg.effective_j_range();
    let p_max = model
        .closed_form_indices()
        .map(|i| i.p_max)
        .unwrap_or(f64::INFINITY);
    let mut curves = Vec::new();
    for &p in &cfg.p_grid {
        if p >= p_max {
            continue; // infinite-moment requests are refused, not reported
        }
        curves.push(moment_slope_curve(
            &model,
            p,
            &window,
            &cfg.wavelet,
            backend,
            j_range,
            cfg.replicates,
            cfg.master_seed,
        )?);
    }
    Ok(curves)
}

fn cmd_moments(cfg: &ExperimentConfig) -> Result<i32> {
    let curves = moment_curves(cfg)?;
    write_moments_csv(&cfg.out_dir.join("moments.csv"), &curves)?;
    let summary: Vec<_> = curves
        .iter()
        .map(|c| {
            serde_json::json!({
                "p": c.p,
                "slope": c.regression.slope,
                "stderr": c.regression.stderr,
                "ci": c.regression.ci,
                "r2": c.regression.r2,
            })
        })
        .collect();
    write_json_with_envelope(&cfg.out_dir.join("moments.json"), "slopes", &summary, cfg)?;
    fs::create_dir_all(cfg.out_dir.join("plots"))?;
    if let Some(c) = curves.first() {
        let points: Vec<(f64, f64)> = c
            .per_scale
            .iter()
            .map(|s| (s.j as f64, s.log2_mean))
            .collect();
        write_scale_plot_svg(
            &cfg.out_dir.join("plots/moments.svg"),
            &format!("log2 E|c_j|^p, p={}", c.p),
            &points,
            Some((c.regression.slope, c.regression.intercept)),
        )?;
    }
    Ok(0)
}

fn cmd_verify(cfg: &ExperimentConfig) -> Result<i32> {
    let model = cfg.model.to_model()?;
    let backend = cfg.backend.resolve(&model);
    let window = cfg.simulation_window();
    let j_range = cfg.effective_j_range();
    let report_cfg = ReportConfig {
        window,
        spec: cfg.wavelet,
        backend,
        j_range,
        replicates: cfg.replicates,
        master_seed: cfg.master_seed,
        tau_ref: cfg.tau_ref,
        rho_weight: cfg.rho,
        rho_extent: cfg.rho_extent,
        hill_k: cfg.hill_k,
        tolerances: cfg.effective_tolerances(),
    };
    let report = theorem_report(&model, &cfg.model.label(), &cfg.p_grid, &report_cfg)?;
    write_json_with_envelope(&cfg.out_dir.join("report.json"), "report", &report, cfg)?;

    // deterministic per-scale table from replicate 0 at the reference params
    let field =
        sample_coefficient_field(&model, &window, &cfg.wavelet, backend, cfg.master_seed, 0)?;
    let params = BesovParams::new(cfg.p_grid[0], cfg.tau_ref, cfg.rho, cfg.d);
    let contribs = per_scale_contributions(&field, &params);
    write_per_scale_csv(&cfg.out_dir.join("per_scale.csv"), &contribs)?;

    let curves = moment_curves(cfg)?;
    write_moments_csv(&cfg.out_dir.join("moments.csv"), &curves)?;

    fs::create_dir_all(cfg.out_dir.join("plots"))?;
    if let Some(first_estimated) = report.rows.iter().find(|r| r.tau_estimated) {
        let tau_curve = estimate_tau_p(
            &model,
            first_estimated.p,
            &window,
            &cfg.wavelet,
            backend,
            j_range,
            cfg.replicates,
            cfg.master_seed,
            cfg.tau_ref,
            cfg.rho,
        )?;
        let points: Vec<(f64, f64)> = tau_curve
            .mean_t
            .iter()
            .filter(|(_, t)| *t > 0.0)
            .map(|(j, t)| (*j as f64, t.log2()))
            .collect();
        write_scale_plot_svg(
            &cfg.out_dir.join("plots/per_scale.svg"),
            &format!("mean log2 T_j at reference, p={}", first_estimated.p),
            &points,
            Some((tau_curve.regression.slope, tau_curve.regression.intercept)),
        )?;
    }
    write_triebel_svg(
        &cfg.out_dir.join("plots/triebel_tau.svg"),
        &format!("(1/p, tau) diagram: {}", cfg.model.label()),
        cfg.d,
        report.beta_inf,
        report.beta_inf_lower,
        &report.rows,
    )?;
    Ok(if report.all_pass { 0 } else { 2 })
}

#[derive(Serialize)]
struct DiracRow {
    p: f64,
    tau: f64,
    tau_offset: f64,
    critical_tau: f64,
    tail_slope: f64,
    classification: Convergence,
    expected: Convergence,
    matches: bool,
}

fn cmd_dirac(cfg: &ExperimentConfig) -> Result<i32> {
    let dcfg: DiracConfig = cfg.dirac.clone().unwrap_or_default();
    let window = cfg.simulation_window();
    let field = dirac_coefficient_field(&cfg.wavelet, &window, &dcfg.x0)?;
    let dd = cfg.d as f64;
    let mut rows = Vec::new();
    let mut all_match = true;
    for &p in &dcfg.p_values {
        let critical = dd / p - dd;
        for &offset in &dcfg.tau_values {
            let tau = critical + offset;
            let params = BesovParams::new(p, tau, cfg.rho, cfg.d);
            let contribs = per_scale_contributions(&field, &params);
            let classification = classify_convergence(&contribs);
            // the Dirac terms scale like 2^{j p (τ − τ_crit)}, so the
            // discriminator's dead zone maps onto the offset
            let expected = if p * offset <= -CONVERGENCE_SLOPE_THRESHOLD {
                Convergence::Convergent
            } else if p * offset >= CONVERGENCE_SLOPE_THRESHOLD {
                Convergence::Divergent
            } else {
                Convergence::Undecided
            };
            let tail: Vec<_> = contribs.iter().rev().take(5).rev().collect();
            let slope = if tail.len() >= 2 && tail.iter().all(|c| c.t_j > 0.0) {
                let xs: Vec<f64> = tail.iter().map(|c| c.j as f64).collect();
                let ys: Vec<f64> = tail.iter().map(|c| c.t_j.log2()).collect();
                ols(&xs, &ys).slope
            } else {
                f64::NAN
            };
            let matches = classification == expected;
            all_match &= matches;
            rows.push(DiracRow {
                p,
                tau,
                tau_offset: offset,
                critical_tau: critical,
                tail_slope: slope,
                classification,
                expected,
                matches,
            });
        }
    }
    write_json_with_envelope(
        &cfg.out_dir.join("dirac.json"),
        "classifications",
        &rows,
        cfg,
    )?;
    let params = BesovParams::new(dcfg.p_values[0], dd / dcfg.p_values[0] - dd, cfg.rho, cfg.d);
    write_per_scale_csv(
        &cfg.out_dir.join("per_scale.csv"),
        &per_scale_contributions(&field, &params),
    )?;
    Ok(if all_match { 0 } else { 2 })
}

/// Hook for integration tests and the acceptance suite: run a command against
/// a config file path, as `main` would.
pub fn run_from_path(config_path: &Path, command: CommandKind) -> Result<i32> {
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text).context("parsing experiment config")?;
    run_experiment(&cfg, command)
}
