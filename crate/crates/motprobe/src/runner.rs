//! Command implementations: build the experiment, run the core simulation,
//! and persist CSV channels plus a JSON run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use motprobe_core::dynamics::{simulate_schedule, Schedule};
use motprobe_core::fit::{
    fit_decay, fit_gaussian, fit_loading, poisson_weights, FitOptions, FitResult, OffsetMode,
};
use motprobe_core::scan::{camera_cross_section, simulate_scan, ScanAxis};
use motprobe_core::series::SeriesMeta;
use motprobe_core::{ExperimentConfig64, TimeSeries64};

use crate::errors::{RunError, RunResult};
use crate::manifest::{config_hash, RunManifest};

/// Everything a command needs: resolved config, effective seed, noise
/// switch, and output directory.
pub struct RunContext {
    pub cfg: ExperimentConfig64,
    pub seed: u64,
    pub noise: bool,
    pub out_dir: PathBuf,
    pub plot: bool,
}

impl RunContext {
    fn provenance(&self) -> SeriesMeta {
        SeriesMeta {
            config_hash: config_hash(&self.cfg),
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            generated_utc: chrono::Utc::now().to_rfc3339(),
        }
    }

    fn write_series(&self, name: &str, series: &TimeSeries64) -> RunResult<String> {
        fs::create_dir_all(&self.out_dir)?;
        let file = format!("{name}.csv");
        fs::write(self.out_dir.join(&file), series.to_csv_string())?;
        if self.plot {
            let mut dat = String::new();
            for (x, v) in &series.samples {
                dat.push_str(&format!("{x} {v}\n"));
            }
            fs::write(self.out_dir.join(format!("{name}.dat")), dat)?;
        }
        Ok(file)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> RunResult<String> {
        fs::create_dir_all(&self.out_dir)?;
        let file = format!("{name}.json");
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| RunError::Io(format!("serialize {name}: {e}")))?;
        fs::write(self.out_dir.join(&file), text)?;
        Ok(file)
    }

    fn write_manifest(&self, command: &str, outputs: Vec<String>) -> RunResult<()> {
        let manifest = RunManifest::new(command, &self.cfg, self.seed, self.noise, outputs);
        self.write_json(&format!("{command}_manifest"), &manifest)?;
        Ok(())
    }
}

fn stamped(mut series: TimeSeries64, meta: &SeriesMeta) -> TimeSeries64 {
    series.meta = meta.clone();
    series
}

/// Run a schedule-driven experiment and emit both channels.
fn run_schedule(ctx: &RunContext, command: &str, schedule: &Schedule<f64>) -> RunResult<()> {
    let (spcm, pd) = simulate_schedule(schedule, &ctx.cfg, ctx.seed, ctx.noise)?;
    let meta = ctx.provenance();
    let f1 = ctx.write_series(&format!("{command}_spcm"), &stamped(spcm, &meta))?;
    let f2 = ctx.write_series(&format!("{command}_photodiode"), &stamped(pd, &meta))?;
    ctx.write_manifest(command, vec![f1, f2])
}

/// Switching-sequence experiment: step levels on the fiber channel.
pub fn steps(ctx: &RunContext) -> RunResult<()> {
    let schedule = Schedule::switching_sequence(
        ctx.cfg.sampling.steps_segment_s,
        ctx.cfg.sampling.sample_interval_s,
    );
    run_schedule(ctx, "steps", &schedule)
}

/// Loading ramp from an empty trap.
pub fn loading(ctx: &RunContext) -> RunResult<()> {
    let schedule = Schedule::loading(
        ctx.cfg.sampling.loading_duration_s,
        ctx.cfg.sampling.sample_interval_s,
    );
    run_schedule(ctx, "loading", &schedule)
}

/// Decay after the dispenser is switched off.
pub fn decay(ctx: &RunContext) -> RunResult<()> {
    let schedule = Schedule::decay(
        ctx.cfg.sampling.decay_duration_s,
        ctx.cfg.sampling.sample_interval_s,
        ctx.cfg.dynamics.decay_initial_atoms,
    );
    run_schedule(ctx, "decay", &schedule)
}

/// Cloud-translation scan plus the camera cross-section channel.
///
/// `scan_speed_mm_per_s` re-labels positions as times, reproducing the
/// time-axis presentation of a physical scan.
pub fn scan(ctx: &RunContext, scan_speed_mm_per_s: Option<f64>) -> RunResult<()> {
    let positions = ctx.cfg.sampling.scan_positions_um();
    let mut spcm = simulate_scan(
        &ctx.cfg.cloud_template,
        &ctx.cfg.fiber,
        &ctx.cfg.laser,
        &ctx.cfg.spcm,
        &positions,
        ctx.seed,
        ctx.noise,
    )?;
    let camera = camera_cross_section(&ctx.cfg.cloud_template, ScanAxis::X, &positions)?;

    if let Some(speed) = scan_speed_mm_per_s {
        if !(speed.is_finite() && speed > 0.0) {
            return Err(RunError::Validation("scan speed must be > 0".into()));
        }
        let first = spcm.samples[0].0;
        let samples = spcm
            .samples
            .iter()
            .map(|&(x_mm, v)| ((x_mm - first) / speed, v))
            .collect();
        spcm = TimeSeries64::new("time", "s", "spcm_rate", "counts_per_s", samples)?;
    }

    let meta = ctx.provenance();
    let f1 = ctx.write_series("scan_spcm", &stamped(spcm, &meta))?;
    let f2 = ctx.write_series("scan_camera", &stamped(camera, &meta))?;
    ctx.write_manifest("scan", vec![f1, f2])
}

/// Which model `fit` applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FitModelArg {
    Gaussian,
    Loading,
    Decay,
}

/// Result document for `fit`.
#[derive(Debug, Serialize)]
pub struct FitDocument {
    pub input: String,
    pub model: String,
    pub offset_mode: String,
    pub poisson_weighted: bool,
    pub result: FitResult<f64>,
}

/// Fit one CSV series and emit a JSON result document.
pub fn fit(
    ctx: &RunContext,
    input: &Path,
    model: FitModelArg,
    fixed_offset: Option<f64>,
    use_poisson_weights: bool,
    gate_override_s: Option<f64>,
) -> RunResult<()> {
    let text = fs::read_to_string(input)
        .map_err(|e| RunError::Io(format!("cannot read {}: {e}", input.display())))?;
    let series = TimeSeries64::read_csv_str(&text)?;
    let xs = series.xs();
    let ys = series.values();

    let options = FitOptions {
        offset: match fixed_offset {
            Some(b) => OffsetMode::Fixed(b),
            None => OffsetMode::Free,
        },
        ..FitOptions::default()
    };
    let weights = if use_poisson_weights {
        let gate = gate_override_s.unwrap_or(ctx.cfg.spcm.gate_time_s);
        Some(poisson_weights(&ys, gate))
    } else {
        None
    };
    let weights_ref = weights.as_deref();

    let result = match model {
        FitModelArg::Gaussian => fit_gaussian(&xs, &ys, weights_ref, &options)?,
        FitModelArg::Loading => fit_loading(&xs, &ys, weights_ref, &options)?,
        FitModelArg::Decay => fit_decay(&xs, &ys, weights_ref, &options)?,
    };

    let doc = FitDocument {
        input: input.display().to_string(),
        model: result.model_name.clone(),
        offset_mode: match fixed_offset {
            Some(b) => format!("fixed({b})"),
            None => "free".to_string(),
        },
        poisson_weighted: use_poisson_weights,
        result,
    };
    let file = ctx.write_json("fit_result", &doc)?;
    println!("wrote {}", ctx.out_dir.join(file).display());
    for p in &doc.result.parameters {
        println!("  {} = {} ± {}", p.name, p.value, p.std_error);
    }
    Ok(())
}

/// One channel's fitted time constant.
#[derive(Debug, Serialize)]
pub struct ChannelTaus {
    pub photodiode_tau_s: f64,
    pub tnf_tau_s: f64,
    pub ratio_tnf_over_photodiode: f64,
}

/// Output document for `compare`.
#[derive(Debug, Serialize)]
pub struct CompareDocument {
    pub seed: u64,
    pub noise: bool,
    pub loading: ChannelTaus,
    pub decay: ChannelTaus,
}

/// Loading and decay on both channels, with the fitted 1/e times.
pub fn compare(ctx: &RunContext) -> RunResult<()> {
    let interval = ctx.cfg.sampling.sample_interval_s;

    // loading: fit the saturating exponential on both channels
    let schedule = Schedule::loading(ctx.cfg.sampling.loading_duration_s, interval);
    let (spcm, pd) = simulate_schedule(&schedule, &ctx.cfg, ctx.seed, ctx.noise)?;
    let free = FitOptions::default();
    let pd_fit = fit_loading(&pd.xs(), &pd.values(), None, &free)?;
    let w = poisson_weights(&spcm.values(), ctx.cfg.spcm.gate_time_s);
    let tnf_fit = fit_loading(&spcm.xs(), &spcm.values(), Some(&w), &free)?;
    let loading_taus = taus(&pd_fit, &tnf_fit)?;

    // decay: backgrounds are known, so pin the offsets
    let schedule = Schedule::decay(
        ctx.cfg.sampling.decay_duration_s,
        interval,
        ctx.cfg.dynamics.decay_initial_atoms,
    );
    let (spcm, pd) = simulate_schedule(&schedule, &ctx.cfg, ctx.seed.wrapping_add(1), ctx.noise)?;
    let pd_opts = FitOptions {
        offset: OffsetMode::Fixed(ctx.cfg.photodiode.background_volts),
        ..FitOptions::default()
    };
    let pd_fit = fit_decay(&pd.xs(), &pd.values(), None, &pd_opts)?;
    let laser_background = ctx.cfg.spcm.dark_ambient_rate_per_s
        + ctx.cfg.spcm.repump_scatter_rate_per_s
        + ctx.cfg.spcm.cooling_scatter_rate_per_s;
    let tnf_opts = FitOptions {
        offset: OffsetMode::Fixed(laser_background),
        ..FitOptions::default()
    };
    let w = poisson_weights(&spcm.values(), ctx.cfg.spcm.gate_time_s);
    let tnf_fit = fit_decay(&spcm.xs(), &spcm.values(), Some(&w), &tnf_opts)?;
    let decay_taus = taus(&pd_fit, &tnf_fit)?;

    let doc = CompareDocument {
        seed: ctx.seed,
        noise: ctx.noise,
        loading: loading_taus,
        decay: decay_taus,
    };
    let file = ctx.write_json("compare", &doc)?;
    ctx.write_manifest("compare", vec![file.clone()])?;
    println!("wrote {}", ctx.out_dir.join(file).display());
    println!(
        "  loading: photodiode {:.4} s, fiber {:.4} s (ratio {:.3})",
        doc.loading.photodiode_tau_s, doc.loading.tnf_tau_s, doc.loading.ratio_tnf_over_photodiode
    );
    println!(
        "  decay:   photodiode {:.3} s, fiber {:.3} s (ratio {:.3})",
        doc.decay.photodiode_tau_s, doc.decay.tnf_tau_s, doc.decay.ratio_tnf_over_photodiode
    );
    Ok(())
}

fn taus(pd: &FitResult<f64>, tnf: &FitResult<f64>) -> RunResult<ChannelTaus> {
    let grab = |fit: &FitResult<f64>| {
        fit.parameter("tau")
            .ok_or_else(|| RunError::Numerical("fit result lacks tau".into()))
    };
    let pd_tau = grab(pd)?;
    let tnf_tau = grab(tnf)?;
    Ok(ChannelTaus {
        photodiode_tau_s: pd_tau,
        tnf_tau_s: tnf_tau,
        ratio_tnf_over_photodiode: tnf_tau / pd_tau,
    })
}
