//! Command-line front end: model constants, ensemble sampling, trajectory
//! simulation, and the statistical experiment suite.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use gl_lab::experiments::{ExperimentKind, ExperimentSpec};
use gl_lab::io::{
    format_g17, load_config, run_experiment_to_dir, RunManifest, TrajectoryWriter,
};
use gl_lab::kernels::{heat_kernel, hk_probe};
use gl_lab::lattice::{init_equilibrium, run, FreshNoise, SimConfig};
use gl_lab::potential::{compute_constants, sample_ensemble, tilt_for_mean, PotentialSpec};

#[derive(Parser)]
#[command(
    name = "gl-lab",
    about = "Lattice interface dynamics, Cole-Hopf fields, and heat-kernel experiments",
    version
)]
struct Cli {
    /// Flat key=value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: ./out/<experiment>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Validate and write the manifest without simulating.
    #[arg(long, global = true)]
    dry_run: bool,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the model constants derived from the configured potential.
    Constants,
    /// Draw i.i.d. samples from the configured ensemble (CSV to --out).
    Sample {
        /// Number of samples.
        #[arg(long, default_value_t = 100_000)]
        count: usize,
    },
    /// Integrate one trajectory and write the binary record stream.
    Simulate,
    /// Jet verification of the local-function catalog.
    JetSuite,
    /// Invariance of the product measure under the dynamics.
    Invariance,
    /// Space-averaging variance scaling.
    CltSpace,
    /// Time-averaging variance scaling.
    KvTime,
    /// Ensemble-equivalence block scaling.
    PsiScaling,
    /// Coupled comparison with the multiplicative-noise heat field.
    CompareShe,
    /// Kernel identities, envelopes, means, and growth bounds.
    KernelProbe,
    /// Narrow-wedge data construction and propagation checks.
    Wedge,
}

fn experiment_kind(cmd: &Command) -> Option<ExperimentKind> {
    Some(match cmd {
        Command::JetSuite => ExperimentKind::JetSuite,
        Command::Invariance => ExperimentKind::Invariance,
        Command::CltSpace => ExperimentKind::CltSpace,
        Command::KvTime => ExperimentKind::KvTime,
        Command::PsiScaling => ExperimentKind::PsiScaling,
        Command::CompareShe => ExperimentKind::CompareShe,
        Command::KernelProbe => ExperimentKind::KernelProbe,
        Command::Wedge => ExperimentKind::Wedge,
        _ => return None,
    })
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .context("configuring the worker pool")?;
    }

    let mut spec = match &cli.config {
        Some(path) => load_config(path).with_context(|| format!("loading {}", path.display()))?,
        None => ExperimentSpec::default(),
    };
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    if let Some(kind) = experiment_kind(&cli.command) {
        spec.experiment = kind;
    }
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(spec.experiment.name()));

    match cli.command {
        Command::Constants => {
            let pot = PotentialSpec::from_family(spec.potential)?;
            let constants = compute_constants(&pot, &spec.betas)?;
            println!("{}", serde_json::to_string_pretty(&constants)?);
        }
        Command::Sample { count } => {
            let pot = PotentialSpec::from_family(spec.potential)?;
            let ens = tilt_for_mean(&pot, spec.sigma)?;
            let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
            let samples = sample_ensemble(&ens, count, &mut rng)?;
            std::fs::create_dir_all(&out_dir)?;
            let path = out_dir.join("samples.csv");
            if path.exists() && !cli.force {
                bail!("refusing to overwrite {} without --force", path.display());
            }
            let mut text = String::from("value\n");
            for s in &samples {
                text.push_str(&format_g17(*s));
                text.push('\n');
            }
            std::fs::write(&path, text)?;
            println!("wrote {} samples to {}", count, path.display());
        }
        Command::Simulate => {
            let pot = PotentialSpec::from_family(spec.potential)?;
            let constants = compute_constants(&pot, &spec.betas)?;
            let ens = tilt_for_mean(&pot, spec.sigma)?;
            let n = *spec.n_grid.first().context("empty N grid")?;
            let cfg = SimConfig {
                n,
                m: spec.ring_size(n),
                theta: spec.theta,
                horizon: spec.horizon,
                seed: spec.seed,
                observer_stride: 16,
                history_stride: 16,
            };
            cfg.validate(&constants, 2 * constants.deg + 1)?;
            std::fs::create_dir_all(&out_dir)?;
            let path = out_dir.join("trajectory.bin");
            if path.exists() && !cli.force {
                bail!("refusing to overwrite {} without --force", path.display());
            }
            let manifest = RunManifest::new(&spec);
            if cli.dry_run {
                manifest.write(&out_dir, cli.force)?;
                println!("dry run: wrote manifest only");
                return Ok(());
            }
            let file = std::io::BufWriter::new(std::fs::File::create(&path)?);
            let mut writer =
                TrajectoryWriter::create(file, n, cfg.m, cfg.observer_stride as u32)?;
            let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
            let mut state = init_equilibrium(&ens, &cfg, &mut rng)?;
            let dt: f64 = cfg.dt(&pot, &constants);
            let mut source = FreshNoise::new(rng, dt);
            let mut io_err = None;
            run(&mut state, &pot, &constants, &cfg, &mut source, |s, _| {
                if io_err.is_none() {
                    if let Err(e) = writer.record(s) {
                        io_err = Some(e);
                    }
                }
            })?;
            if let Some(e) = io_err {
                return Err(e.into());
            }
            writer.finish()?;
            manifest.write(&out_dir, true)?;
            println!("wrote trajectory to {}", path.display());
        }
        _ => {
            let out = run_experiment_to_dir(&spec, &out_dir, cli.force, cli.dry_run)?;
            if let Some(report) = &out.report {
                for cell in &report.cells {
                    println!(
                        "[{}] {}",
                        if cell.pass { "pass" } else { "FAIL" },
                        cell.id
                    );
                }
                println!(
                    "{}: {} ({:.1}s) -> {}",
                    report.experiment,
                    if report.pass { "PASS" } else { "FAIL" },
                    out.manifest.runtime_secs,
                    out_dir.display()
                );
                if !report.pass {
                    std::process::exit(1);
                }
            } else {
                println!("dry run: manifest written to {}", out_dir.display());
            }
        }
    }
    // a tiny probe table accompanies kernel runs for quick inspection
    if matches!(cli.command, Command::KernelProbe) && !cli.dry_run {
        let pot = PotentialSpec::from_family(spec.potential)?;
        let constants = compute_constants(&pot, &spec.betas)?;
        let n = *spec.n_grid.first().context("empty N grid")?;
        let m = spec.ring_size(n).max(8 * n as usize);
        let mut csv = String::from("s,t,x,y,value\n");
        let tau = 4.0 / (f64::from(n) * f64::from(n)) * 16.0;
        let k = heat_kernel(&constants, n, m, 0.0, tau)?;
        let y = m / 2;
        for x in 0..m {
            csv.push_str(&format!(
                "0,{},{},{},{}\n",
                format_g17(tau),
                x,
                y,
                format_g17(k.entry(x as i64, y as i64))
            ));
        }
        let probe = hk_probe(&k, 1.0, y as i64);
        csv.push_str(&format!(
            "# weighted_l1 = {}, weighted_l2 = {}, weighted_sup = {}\n",
            format_g17(probe.weighted_l1),
            format_g17(probe.weighted_l2),
            format_g17(probe.weighted_sup)
        ));
        std::fs::write(out_dir.join("kernel_columns.csv"), csv)?;
    }
    Ok(())
}
