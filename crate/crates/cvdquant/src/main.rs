use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use cvdquant::config::ExperimentConfig;
use cvdquant::core::confusion::{synthesize_observer_with, ObserverParams};
use cvdquant::core::{
    dequantize, plan_mergers, rank_users, recolor, DequantSidecar, DichromatModel,
    HeuristicConfig, QuantizeConfig, TransformKind,
};
use cvdquant::events::{load_events, save_events};
use cvdquant::harness::{self, write_csv};
use cvdquant::image_io;
use cvdquant::profile::Profile;

#[derive(Parser)]
#[command(name = "cvdquant", version, about = "Personalized incremental PNG palette quantization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a color-matching history for a model observer.
    GenSynthetic {
        #[arg(long, default_value = "protan")]
        model: String,
        #[arg(long, default_value_t = 20_000)]
        turns: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        difficulty: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score every history in a directory and list the likeliest color-deficient users.
    RankUsers {
        #[arg(long)]
        events: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        #[arg(long, default_value_t = 1000)]
        min_events: usize,
        #[arg(long, default_value_t = 30)]
        top: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a color-equivalence profile to a history.
    Fit {
        #[arg(long)]
        events: PathBuf,
        #[arg(long, default_value = "linear")]
        kind: TransformKind,
        #[arg(long, default_value_t = 100)]
        hidden: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shrink an image's palette for one observer and write a restore sidecar.
    Quantize {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        colors: usize,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Median-cut the input to this many colors first.
        #[arg(long)]
        pre_quantize: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sidecar: PathBuf,
    },
    /// Restore the pre-quantization image from an output and its sidecar.
    Dequantize {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        sidecar: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment described by a TOML config and write a CSV table.
    Eval {
        experiment: Experiment,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Compress,
    Hue,
    Alpha,
    History,
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    ensure_parent(path)?;
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn gen_synthetic(model: &str, turns: usize, seed: u64, difficulty: f64, out: &Path) -> Result<()> {
    let model: DichromatModel = model.parse()?;
    let d = synthesize_observer_with(&ObserverParams::new(model, turns, seed, difficulty))?;
    ensure_parent(out)?;
    save_events(&d, out)?;
    eprintln!("{} turns, accuracy {:.3}", d.len(), d.accuracy());
    Ok(())
}

fn rank(dir: &Path, beta: f64, min_events: usize, top: usize, out: Option<&Path>) -> Result<()> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    let datasets = paths
        .iter()
        .map(|p| load_events(p).with_context(|| p.display().to_string()))
        .collect::<Result<Vec<_>>>()?;
    let cfg = HeuristicConfig { beta, min_events };
    let scores = rank_users(&datasets, &cfg, top)?;
    let mut w = csv::Writer::from_writer(match out {
        Some(p) => Box::new(create(p)?) as Box<dyn Write>,
        None => Box::new(io::stdout().lock()),
    });
    w.write_record(["rank", "user", "h", "hue_mismatch_fraction", "mean_lab_distance", "accuracy", "events"])?;
    for (i, s) in scores.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            s.user_id.clone(),
            s.h.to_string(),
            s.hue_mismatch_fraction.to_string(),
            s.mean_lab_distance.to_string(),
            s.accuracy.to_string(),
            s.events.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn fit(events: &Path, kind: TransformKind, hidden: usize, seed: u64, out: &Path) -> Result<()> {
    let d = load_events(events)?;
    let function = harness::fit_equivalence(&d, kind, seed, hidden)?;
    ensure_parent(out)?;
    Profile::new(d.user_id(), function).save(out)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn quantize(
    image: &Path,
    profile: &Path,
    colors: usize,
    alpha: f64,
    pre: Option<usize>,
    out: &Path,
    sidecar: &Path,
) -> Result<()> {
    let mut img = image_io::read_png(image)?;
    if let Some(k) = pre {
        img = cvdquant::core::median_cut(&img, k);
    }
    let profile = Profile::load(profile)?;
    let plan = plan_mergers(&img, &QuantizeConfig::new(colors, alpha)?, &profile.function)?;
    let (recolored, side) = recolor(&img, &plan);
    ensure_parent(out)?;
    ensure_parent(sidecar)?;
    let report = image_io::write_indexed_png(&recolored, out)?;
    fs::write(sidecar, side.to_bytes()).with_context(|| sidecar.display().to_string())?;
    eprintln!(
        "{} mergers, {} colors, {} bytes",
        plan.len(),
        report.palette_size,
        report.bytes
    );
    Ok(())
}

fn restore(image: &Path, sidecar: &Path, out: &Path) -> Result<()> {
    let img = image_io::read_png(image)?;
    let bytes = fs::read(sidecar).with_context(|| sidecar.display().to_string())?;
    let side = DequantSidecar::from_bytes(&bytes)?;
    let restored = dequantize(&img, &side)?;
    ensure_parent(out)?;
    image_io::write_png(&restored, out)?;
    Ok(())
}

fn eval(experiment: Experiment, config: &Path, out: &Path) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let images = harness::load_images(&cfg.images)?;
    let users = harness::load_users(&cfg)?;
    if images.is_empty() {
        bail!("no PNG images in {}", cfg.images.display());
    }
    if users.is_empty() {
        bail!("config lists no users");
    }
    let kinds = cfg.transform_kinds()?;
    let w = create(out)?;
    match experiment {
        Experiment::Compress => {
            let records = harness::run_compress(&cfg, &images, &users)?;
            let mean = records.iter().map(|r| r.size_reduction).sum::<f64>() / records.len().max(1) as f64;
            eprintln!("{} records, mean size reduction {:.2}%", records.len(), 100.0 * mean);
            write_csv(&records, w)?;
        }
        Experiment::Hue => {
            let mut records = Vec::new();
            for user in &users {
                for &kind in &kinds {
                    for v in harness::run_hue_validation(&cfg, &images, user, kind)? {
                        eprintln!("{} {} {}: R² = {:.3}", user.id(), kind, v.palette_size, v.r_squared);
                        records.extend(v.records);
                    }
                }
            }
            write_csv(&records, w)?;
        }
        Experiment::Alpha => {
            let mut records = Vec::new();
            for user in &users {
                for &kind in &kinds {
                    records.extend(harness::run_alpha_sweep(&cfg, &images, user, kind, cfg.alpha_sweep_colors)?);
                }
            }
            write_csv(&records, w)?;
        }
        Experiment::History => {
            let mut records = Vec::new();
            for user in &users {
                for &kind in &kinds {
                    records.extend(harness::run_history_sweep_images(
                        &cfg,
                        &images,
                        user,
                        kind,
                        &cfg.history_fractions,
                    )?);
                }
            }
            records.sort_by(|a, b| {
                (&a.image, &a.user, &a.delta_kind)
                    .cmp(&(&b.image, &b.user, &b.delta_kind))
                    .then(a.history_fraction.total_cmp(&b.history_fraction))
            });
            write_csv(&records, w)?;
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::GenSynthetic { model, turns, seed, difficulty, out } => {
            gen_synthetic(&model, turns, seed, difficulty, &out)
        }
        Command::RankUsers { events, beta, min_events, top, out } => {
            rank(&events, beta, min_events, top, out.as_deref())
        }
        Command::Fit { events, kind, hidden, seed, out } => fit(&events, kind, hidden, seed, &out),
        Command::Quantize { image, profile, colors, alpha, pre_quantize, out, sidecar } => {
            quantize(&image, &profile, colors, alpha, pre_quantize, &out, &sidecar)
        }
        Command::Dequantize { image, sidecar, out } => restore(&image, &sidecar, &out),
        Command::Eval { experiment, config, out } => eval(experiment, &config, &out),
    }
}
