//! `qsi`: command-line driver for the imaging, attack-curve, CHSH and
//! ranging simulations.
//!
//! Exit codes: 0 secure (or |S| > 2 for `chsh`), 2 compromised (or |S| <= 2),
//! 3 inconclusive, 1 for configuration, input or I/O errors.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qsi_core::analysis::{
    attack_curve, attack_curve_csv, reconstruct_image, security_verdict, tally_errors_at,
    write_bundle, AttackCurveSetup, ImagingReport, Verdict,
};
use qsi_core::protocol::{run_simulation, RunOptions};
use qsi_core::ranging::{run_chsh, ChshConfig, ChshRecord, RangeEstimate};
use qsi_core::scene::{ascii_art, resolve_mask, ObjectMask};

use config::{Mode, RunConfig};

const EXIT_ERROR: u8 = 1;
const EXIT_COMPROMISED: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "qsi",
    version,
    about = "Quantum-secured imaging and ranging simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write its outputs.
    #[command(subcommand)]
    Simulate(Simulate),
}

#[derive(Subcommand)]
enum Simulate {
    /// Polarization imaging run with the security verdict.
    Image(Common),
    /// Jammer and receiver error rates over a sweep of eavesdropping angles.
    AttackCurve(Common),
    /// Entangled-pair CHSH test with range estimate.
    Chsh(Common),
    /// Range estimate from entangled-pair timing only.
    Range(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; omitted fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Detected frames (image), detections per angle (attack-curve) or
    /// pairs per basis setting (chsh, range).
    #[arg(long)]
    frames: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; falls back to the config, then `out`.
    #[arg(long, env = "QSI_OUT_DIR")]
    out: Option<PathBuf>,
    /// Print an ASCII rendering of the composite image (image mode).
    #[arg(long)]
    ascii: bool,
}

impl Common {
    fn resolve(&self, mode: Mode) -> Result<(RunConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        cfg.check_mode(mode)?;
        cfg.mode = Some(mode);
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(frames) = self.frames {
            cfg.frames = frames;
        }
        if let Some(workers) = self.workers {
            cfg.workers = workers;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok((cfg, out))
    }
}

#[derive(Serialize)]
struct ChshDocument<'a> {
    seed: u64,
    config: serde_json::Value,
    pairs: u64,
    chsh: &'a ChshRecord,
    range: &'a RangeEstimate,
}

#[derive(Serialize)]
struct RangeDocument<'a> {
    seed: u64,
    config: serde_json::Value,
    pairs: u64,
    range: &'a RangeEstimate,
    true_range_m: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Simulate(sim) = cli.command;
    let result = match sim {
        Simulate::Image(c) => image(&c),
        Simulate::AttackCurve(c) => curve(&c),
        Simulate::Chsh(c) => chsh(&c),
        Simulate::Range(c) => range(&c),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn image(args: &Common) -> Result<u8> {
    let (cfg, out) = args.resolve(Mode::Image)?;
    let scene = cfg.scene_mask()?;
    let channel = cfg.channel_model(&scene)?;
    let options = RunOptions {
        workers: cfg.workers,
        ..Default::default()
    };
    let run = run_simulation(
        &scene,
        &cfg.source,
        &cfg.detector,
        &channel,
        cfg.seed,
        cfg.frames,
        &options,
    )?;
    let report = tally_errors_at(&run.events, cfg.confidence)?;
    let verdict = security_verdict(&report);
    let images = reconstruct_image(&run);
    let doc = ImagingReport::new(&run, &report, &verdict, cfg.echo(), None);
    write_bundle(&out, &doc, &run, &images)
        .with_context(|| format!("writing bundle to {}", out.display()))?;

    if args.ascii {
        let c = &images.composite;
        let lit = ObjectMask::new(
            c.width(),
            c.height(),
            c.counts().iter().map(|&n| n > 0).collect(),
        )?;
        print!("{}", ascii_art(&lit));
    }
    println!(
        "detected {} of {} pulses; average error {:.4} [{:.4}, {:.4}] at {:.0}%; verdict {:?}",
        report.n_detected,
        run.pulses_simulated,
        report.average_error,
        report.ci_low,
        report.ci_high,
        100.0 * report.confidence,
        verdict.verdict
    );
    Ok(match verdict.verdict {
        Verdict::Secure => 0,
        Verdict::Compromised => EXIT_COMPROMISED,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    })
}

fn curve(args: &Common) -> Result<u8> {
    let (cfg, out) = args.resolve(Mode::AttackCurve)?;
    let setup = AttackCurveSetup {
        scene: cfg.scene_mask()?,
        spoof: resolve_mask(&cfg.attack_curve.spoof)
            .with_context(|| format!("loading spoof mask {:?}", cfg.attack_curve.spoof))?,
        source: cfg.source,
        detector: cfg.detector,
    };
    let options = RunOptions {
        workers: cfg.workers,
        ..Default::default()
    };
    let rows = attack_curve(
        &setup,
        &cfg.attack_curve.thetas,
        cfg.frames,
        cfg.seed,
        &options,
    )?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join("attack_curve.csv");
    let csv = attack_curve_csv(&rows);
    fs::write(&path, &csv).with_context(|| format!("writing {}", path.display()))?;
    print!("{csv}");
    Ok(0)
}

fn chsh_run(cfg: &RunConfig) -> Result<(ChshConfig, qsi_core::ranging::ChshRun)> {
    let chsh_cfg = cfg.chsh_config();
    let run = run_chsh(&chsh_cfg, cfg.seed, cfg.workers)?;
    Ok((chsh_cfg, run))
}

fn chsh(args: &Common) -> Result<u8> {
    let (cfg, out) = args.resolve(Mode::Chsh)?;
    let (_, run) = chsh_run(&cfg)?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let doc = ChshDocument {
        seed: cfg.seed,
        config: cfg.echo(),
        pairs: run.pairs,
        chsh: &run.record,
        range: &run.range,
    };
    write_json(&out.join("chsh.json"), &doc)?;
    println!(
        "S = {:.4} +/- {:.4}; range {:.3} m; {}",
        run.record.s,
        run.record.s_std_error,
        run.range.distance,
        if run.record.secure {
            "Bell violation"
        } else {
            "no Bell violation"
        }
    );
    Ok(if run.record.secure {
        0
    } else {
        EXIT_COMPROMISED
    })
}

fn range(args: &Common) -> Result<u8> {
    let (cfg, out) = args.resolve(Mode::Range)?;
    let (chsh_cfg, run) = chsh_run(&cfg)?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let doc = RangeDocument {
        seed: cfg.seed,
        config: cfg.echo(),
        pairs: run.pairs,
        range: &run.range,
        true_range_m: chsh_cfg.range_m,
    };
    write_json(&out.join("range.json"), &doc)?;
    println!(
        "round trip {:.6e} s; range {:.3} m",
        run.range.round_trip_time, run.range.distance
    );
    Ok(0)
}
