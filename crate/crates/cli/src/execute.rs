use mdpsm_core::angle_optimizer::{ber_refine, pilot_snr, psm_baseline, sweep, AngleSweepResult, RefineResult};
use mdpsm_core::channel::{draw_channel, expected_beta, DualChannel};
use mdpsm_core::detector::{count_complexity, ComplexityConfig, ComplexityReport};
use mdpsm_core::harness::{
    estimate_diversity, run_ber_with, snr_at_ber, theoretical_diversity, BerCurve, DiversityEstimate, RunOptions,
};
use mdpsm_core::{Constellation, Scheme};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::artifacts::{spec_hash, unix_now, Manifest, OutDir};
use crate::error::CliError;
use crate::spec::{Experiment, ExperimentSpec, RefineSnr};

/// Settings that apply to every experiment of an invocation.
pub struct Context<'a> {
    pub out: &'a OutDir,
    pub seed_override: Option<u64>,
    pub jobs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelSummary {
    pub n_t: usize,
    pub n_r: usize,
    pub draws: usize,
    /// `n_R / mean(Tr(P P^H))`.
    pub beta_estimate: f64,
    pub beta_sample_mean: f64,
    pub beta_expected: Option<f64>,
    pub var_inv_sqrt_beta_single: f64,
    pub var_inv_sqrt_beta_unified: f64,
}

pub enum Outcome {
    Sweep { scheme1: Scheme, scheme2: Scheme, result: AngleSweepResult },
    Curve { curve: BerCurve, snr_at_target: Option<f64>, diversity: Option<DiversityEstimate> },
    Refine(RefineResult),
    Complexity(Vec<(ComplexityConfig, ComplexityReport)>),
    Channel(ChannelSummary),
}

pub struct Executed {
    pub outcome: Outcome,
    pub summary: String,
    pub files: Vec<String>,
}

fn fmt_opt(v: Option<f64>, unit: &str) -> String {
    v.map_or_else(|| "not reached".to_string(), |x| format!("{x:.2}{unit}"))
}

fn channel_stats(n_t: usize, n_r: usize, draws: usize, seed: u64) -> Result<ChannelSummary, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut power, mut beta_sum) = (0.0, 0.0);
    let (mut single, mut unified) = (Vec::with_capacity(draws), Vec::with_capacity(draws));
    for _ in 0..draws {
        let a = draw_channel(n_t, n_r, &mut rng)?;
        let b = draw_channel(n_t, n_r, &mut rng)?;
        power += a.precoder_power();
        beta_sum += a.beta();
        single.push(1.0 / a.beta().sqrt());
        unified.push(1.0 / DualChannel::new(a, b)?.unified_beta().sqrt());
    }
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
    };
    Ok(ChannelSummary {
        n_t,
        n_r,
        draws,
        beta_estimate: n_r as f64 * draws as f64 / power,
        beta_sample_mean: beta_sum / draws as f64,
        beta_expected: expected_beta(n_t, n_r).ok(),
        var_inv_sqrt_beta_single: var(&single),
        var_inv_sqrt_beta_unified: var(&unified),
    })
}

pub fn execute(spec: &ExperimentSpec, text: &str, ctx: &Context<'_>) -> Result<Executed, CliError> {
    let started = unix_now();
    let hash = spec_hash(text);
    let seed = ctx.seed_override.or(spec.seed);
    if spec.kind.is_stochastic() && seed.is_none() {
        return Err(CliError::MissingField("seed".into()));
    }
    let stem = &spec.output;
    let csv_name = format!("{stem}.csv");
    let mut files = vec![csv_name.clone()];

    let (outcome, summary, body, config) = match &spec.experiment {
        Experiment::AngleSweep { scheme1, scheme2, grid } => {
            let result = sweep(&Constellation::new(*scheme1), &Constellation::new(*scheme2), grid)?;
            let summary = format!(
                "angle_sweep {scheme1}-{scheme2}: theta_opt = {:?} deg, d_min = {:.4}; union-criterion optimum {:?} deg",
                result.optimal_thetas,
                result.max_dmin(),
                result.union_optimal_thetas()
            );
            let body = result.to_csv();
            let config = serde_json::json!({ "scheme1": scheme1, "scheme2": scheme2, "grid": grid });
            (Outcome::Sweep { scheme1: *scheme1, scheme2: *scheme2, result }, summary, body, config)
        }
        Experiment::BerRun { config, snr_db, stop, target_ber, detector, coherence_uses } => {
            let mut opts = RunOptions::new(seed.unwrap_or(0));
            opts.stop = *stop;
            opts.jobs = ctx.jobs;
            opts.detector = *detector;
            opts.coherence_uses = *coherence_uses;
            let curve = run_ber_with(config, snr_db, &opts)?;
            let at = snr_at_ber(&curve, *target_ber);
            let diversity = estimate_diversity(&curve, None).ok();
            let summary = format!(
                "ber_run {}: SNR at BER {target_ber:e} = {}; diversity {} (theory {})",
                curve.tag,
                fmt_opt(at, " dB"),
                diversity.map_or_else(|| "not estimable".to_string(), |d| format!("{:.2}", d.order)),
                theoretical_diversity(config)
            );
            let body = curve.to_csv();
            let cfg = serde_json::json!({ "system": config, "snr_db": snr_db, "stop": stop, "detector": detector, "coherence_uses": coherence_uses });
            (Outcome::Curve { curve, snr_at_target: at, diversity }, summary, body, cfg)
        }
        Experiment::BerVsTheta { config, thetas, snr, trials } => {
            let seed = seed.unwrap_or(0);
            let snr_db = match *snr {
                RefineSnr::Fixed(v) => v,
                RefineSnr::Pilot { target_ber, trials } => {
                    let grid: Vec<f64> = (0..=24).map(|i| 2.5 * i as f64).collect();
                    pilot_snr(&psm_baseline(config)?, &grid, target_ber, trials, seed.wrapping_add(1 << 32), ctx.jobs)?
                }
            };
            let r = ber_refine(config, thetas, snr_db, *trials, seed, ctx.jobs)?;
            let summary = format!(
                "ber_vs_theta {config}: best theta = {} deg at {snr_db} dB over {} candidates",
                r.best_theta_deg,
                thetas.len()
            );
            let body = r.to_csv();
            let cfg = serde_json::json!({ "system": config, "thetas": thetas, "snr_db": snr_db, "trials": trials });
            (Outcome::Refine(r), summary, body, cfg)
        }
        Experiment::ComplexityReport { rows } => {
            let mut body = String::from("config,spectral_efficiency,real_multiplications,closed_form_saving,saving_percent\n");
            let mut parts = Vec::new();
            let mut out = Vec::new();
            for row in rows {
                let r = count_complexity(row);
                body.push_str(&format!(
                    "\"{row}\",{},{},{},{}\n",
                    row.spectral_efficiency(),
                    r.real_multiplications,
                    r.closed_form_saving.map_or(String::new(), |s| s.to_string()),
                    r.saving_fraction().map_or(String::new(), |f| format!("{:.2}", 100.0 * f))
                ));
                parts.push(format!("{row} = {}", r.real_multiplications));
                out.push((*row, r));
            }
            let summary = format!("complexity_report: {}", parts.join(", "));
            let cfg = serde_json::json!({ "rows": rows.iter().map(|r| r.to_string()).collect::<Vec<_>>() });
            (Outcome::Complexity(out), summary, body, cfg)
        }
        Experiment::ChannelStats { n_t, n_r, draws } => {
            let s = channel_stats(*n_t, *n_r, *draws, seed.unwrap_or(0))?;
            let summary = format!(
                "channel_stats ({n_t},{n_r}): E[beta] estimate {:.3} (expected {}), var(1/sqrt(beta)) {:.4} single vs {:.4} unified",
                s.beta_estimate,
                s.beta_expected.map_or_else(|| "unbounded".to_string(), |b| b.to_string()),
                s.var_inv_sqrt_beta_single,
                s.var_inv_sqrt_beta_unified
            );
            let body = format!(
                "quantity,value\nbeta_estimate,{}\nbeta_sample_mean,{}\nbeta_expected,{}\nvar_inv_sqrt_beta_single,{}\nvar_inv_sqrt_beta_unified,{}\n",
                s.beta_estimate,
                s.beta_sample_mean,
                s.beta_expected.map_or(String::new(), |b| b.to_string()),
                s.var_inv_sqrt_beta_single,
                s.var_inv_sqrt_beta_unified
            );
            let cfg = serde_json::json!({ "n_t": n_t, "n_r": n_r, "draws": draws });
            (Outcome::Channel(s), summary, body, cfg)
        }
    };

    ctx.out.write_csv(&csv_name, &hash, seed, &body)?;
    let manifest_name = format!("{stem}.manifest.json");
    files.push(manifest_name.clone());
    let manifest = Manifest {
        version: crate::artifacts::version_string(),
        kind: spec.kind.name(),
        spec_sha256: &hash,
        seed,
        config,
        started_unix: started,
        finished_unix: unix_now(),
        artifacts: files.clone(),
    };
    ctx.out.write_manifest(&manifest_name, &manifest)?;
    Ok(Executed { outcome, summary, files })
}
