//! `fcs`: build and inspect sampling masks, measure incoherence, simulate
//! acquisitions, reconstruct, and run experiment plans.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use fcs_core::harness::{
    crop, load_input, mask_for_reduction, pad_to, pad_to_prime, read_image, read_kspace,
    reconstruct_channel, run_experiment, shepp_logan, undersample_kspace, write_image,
    write_kspace, ExperimentPlan, InputSource, InputSpec, Lattice, MaskRecipe, NoiseModel, PadInfo,
    ReconSpec, SizeExpr,
};
use fcs_core::incoherence::{spr_exact, spr_monte_carlo, spr_monte_carlo_fixed, SPR_CSV_HEADER};
use fcs_core::recon::{
    iteration_log_csv, rss_combine, CsBaselineConfig, HSchedule, NlmParams, ReconConfig, Solver,
};
use fcs_core::rng::derive_seed;
use fcs_core::sampling::io::{encode_sidecar, read_mask, write_mask};
use fcs_core::sampling::{
    actual_reduction, build_cartesian, build_pfrac, build_pfrac_cropped, CartesianDims,
    CartesianSpec, FractalSpec,
};
use fcs_core::{GridGeometry, KSpace, MetricsReport, SamplingMask};

#[derive(Parser, Debug)]
#[command(name = "fcs", version, about = "Finite compressive sensing toolkit")]
struct Cli {
    /// Master seed for every random draw (default 0; overrides a plan's seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory that relative output paths are resolved against (default
    /// `.`; overrides a plan's `out_dir`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build or inspect sampling masks.
    #[command(subcommand)]
    Mask(MaskCommand),
    /// Sidelobe-to-peak ratio of a mask or a mask family.
    Spr(SprArgs),
    /// Retrospectively under-sample an image or k-space file.
    Undersample(UndersampleArgs),
    /// Reconstruct an image from under-sampled k-space.
    Recon(ReconArgs),
    /// Write a Shepp-Logan phantom.
    Phantom(PhantomArgs),
    /// Run an experiment plan.
    Run(RunArgs),
    /// Zero-pad an image to a prime (or given) size.
    Pad(PadArgs),
}

#[derive(Subcommand, Debug)]
enum MaskCommand {
    /// Build a mask and write it as PBM with a `.meta` sidecar.
    Build {
        #[command(flatten)]
        mask: MaskArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print a mask's provenance and reduction factor.
    Inspect {
        path: PathBuf,
        /// Also report the exact SPR.
        #[arg(long)]
        spr: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MaskKind {
    Pfrac,
    Cartesian1d,
    Cartesian2d,
}

#[derive(Args, Debug, Clone)]
struct MaskArgs {
    #[arg(long, value_enum, default_value_t = MaskKind::Pfrac)]
    kind: MaskKind,
    /// Grid size.
    #[arg(long)]
    n: usize,
    /// Search for the densest mask with reduction factor at least this.
    #[arg(long, conflicts_with = "fraction")]
    target_r: Option<f64>,
    /// Build directly from the fraction parameter `r`.
    #[arg(long)]
    fraction: Option<f64>,
    /// Deterministic centre slopes (p.frac).
    #[arg(long, default_value = "0")]
    mu: SizeExpr,
    /// Centre disk radius, e.g. `0`, `10` or `N/12`.
    #[arg(long, default_value = "0")]
    ctr: SizeExpr,
    /// Density exponent (Cartesian).
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Grid the p.frac slices are drawn on: `next_prime` or `native`.
    #[arg(long, default_value = "next_prime")]
    lattice: Lattice,
}

impl MaskArgs {
    fn recipe(&self) -> MaskRecipe {
        let ctr = self.ctr.resolve(self.n);
        match self.kind {
            MaskKind::Pfrac => MaskRecipe::PFrac {
                mu: self.mu.resolve(self.n).round() as usize,
                ctr,
                lattice: self.lattice,
            },
            MaskKind::Cartesian1d => MaskRecipe::Cartesian {
                dims: CartesianDims::OneD,
                alpha: self.alpha,
                ctr,
            },
            MaskKind::Cartesian2d => MaskRecipe::Cartesian {
                dims: CartesianDims::TwoD,
                alpha: self.alpha,
                ctr,
            },
        }
    }

    fn build(&self, seed: u64) -> Result<SamplingMask> {
        let geometry = GridGeometry::new(self.n)?;
        let recipe = self.recipe();
        let mask = match (self.target_r, self.fraction) {
            (Some(r), None) => mask_for_reduction(recipe, geometry, r, seed)?,
            (None, Some(r)) => match recipe {
                MaskRecipe::PFrac { mu, ctr, lattice } => {
                    let spec = FractalSpec {
                        geometry: lattice.for_grid(geometry)?,
                        r,
                        mu,
                        ctr,
                        seed,
                    };
                    if spec.geometry == geometry {
                        build_pfrac(spec)?
                    } else {
                        spec.validate()?;
                        build_pfrac_cropped(spec, spec.line_count(), geometry)?
                    }
                }
                MaskRecipe::Cartesian { dims, alpha, ctr } => build_cartesian(CartesianSpec {
                    geometry,
                    r,
                    alpha,
                    ctr,
                    seed,
                    dims,
                })?,
            },
            _ => bail!("give exactly one of --target-r and --fraction"),
        };
        Ok(mask)
    }
}

#[derive(Args, Debug)]
struct SprArgs {
    /// Analyse this mask file instead of a family.
    #[arg(long, conflicts_with = "n")]
    mask: Option<PathBuf>,
    #[command(flatten)]
    family: Option<MaskArgs>,
    /// Monte-Carlo samples; 0 computes the exact SPR of one mask.
    #[arg(long, default_value_t = 0)]
    samples: usize,
    /// Random basis images per sample.
    #[arg(long, default_value_t = 10)]
    bases: usize,
    /// Append the row to this CSV file (header written when new).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct UndersampleArgs {
    /// Image (PNG/PGM) or k-space (`.fcsk`) input.
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    mask: PathBuf,
    /// Standard deviation of complex Gaussian k-space noise.
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    /// Under-sampled k-space (`.fcsk`).
    #[arg(short, long)]
    output: PathBuf,
    /// Also write the zero-filled magnitude image here.
    #[arg(long)]
    zero_fill: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScheduleKind {
    Staged,
    Power,
    None,
}

#[derive(Args, Debug)]
struct ReconArgs {
    /// Under-sampled k-space (`.fcsk`).
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    mask: PathBuf,
    /// Magnitude image (RSS over channels).
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value = "ffr")]
    solver: Solver,
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    #[arg(long, value_enum, default_value_t = ScheduleKind::Staged)]
    schedule: ScheduleKind,
    #[arg(long, default_value_t = 6.0)]
    h0: f64,
    #[arg(long, default_value_t = 1.0)]
    exponent: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 3)]
    denoise_every: usize,
    #[arg(long, default_value_t = 1)]
    patch_radius: usize,
    #[arg(long, default_value_t = 5)]
    search_radius: usize,
    #[arg(long)]
    wavelet_weight: Option<f64>,
    #[arg(long)]
    tv_weight: Option<f64>,
    /// Iterations of the CS baseline.
    #[arg(long)]
    cs_iterations: Option<usize>,
    /// Crop the result to this centred size (undoes `fcs pad`).
    #[arg(long)]
    crop: Option<usize>,
    /// Ground-truth image: prints metrics and adds PSNR to the log.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Per-iteration log CSV (projection solvers only).
    #[arg(long)]
    log: Option<PathBuf>,
}

impl ReconArgs {
    fn spec(&self) -> ReconSpec {
        let schedule = match self.schedule {
            ScheduleKind::Staged => Some(HSchedule::Staged { h0: self.h0 }),
            ScheduleKind::Power => Some(HSchedule::PowerCurve {
                h0: self.h0,
                exponent: self.exponent,
            }),
            ScheduleKind::None => None,
        };
        let defaults = CsBaselineConfig::default();
        ReconSpec {
            config: ReconConfig {
                lambda_relax: self.lambda,
                iterations: self.iterations,
                denoise_every: self.denoise_every,
                schedule,
                solver: self.solver,
            },
            nlm: NlmParams {
                h: 0.0,
                patch_radius: self.patch_radius,
                search_radius: self.search_radius,
            },
            cs: CsBaselineConfig {
                wavelet_weight: self.wavelet_weight.unwrap_or(defaults.wavelet_weight),
                tv_weight: self.tv_weight.unwrap_or(defaults.tv_weight),
                iterations: self.cs_iterations.unwrap_or(defaults.iterations),
                ..defaults
            },
        }
    }
}

#[derive(Args, Debug)]
struct PhantomArgs {
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(short, long)]
    output: PathBuf,
    /// Also write the fully sampled k-space (`.fcsk`).
    #[arg(long)]
    kspace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    plan: PathBuf,
}

#[derive(Args, Debug)]
struct PadArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Target size; defaults to the next prime.
    #[arg(long)]
    to: Option<usize>,
}

struct Ctx {
    seed: u64,
    seed_given: bool,
    out_dir: PathBuf,
    out_dir_given: bool,
}

impl Ctx {
    fn out(&self, path: &Path) -> Result<PathBuf> {
        let full = self.out_dir.join(path);
        if let Some(parent) = full.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        Ok(full)
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let ctx = Ctx {
        seed: cli.seed.unwrap_or(0),
        seed_given: cli.seed.is_some(),
        out_dir_given: cli.out_dir.is_some(),
        out_dir: cli.out_dir.unwrap_or_else(|| PathBuf::from(".")),
    };
    match cli.command {
        Command::Mask(MaskCommand::Build { mask, output }) => mask_build(&ctx, &mask, &output),
        Command::Mask(MaskCommand::Inspect { path, spr }) => mask_inspect(&path, spr),
        Command::Spr(args) => spr(&ctx, &args),
        Command::Undersample(args) => undersample(&ctx, &args),
        Command::Recon(args) => recon(&ctx, &args),
        Command::Phantom(args) => phantom(&ctx, &args),
        Command::Run(args) => run(&ctx, &args),
        Command::Pad(args) => pad(&ctx, &args),
    }
}

fn mask_build(ctx: &Ctx, args: &MaskArgs, output: &Path) -> Result<()> {
    let mask = args.build(ctx.seed)?;
    let path = ctx.out(output)?;
    write_mask(&mask, &path).with_context(|| format!("writing {}", path.display()))?;
    info!(
        "{} {}x{}: {} samples, R = {:.4}",
        mask.provenance().kind_name(),
        mask.size(),
        mask.size(),
        mask.count(),
        actual_reduction(&mask)
    );
    println!("{}", path.display());
    Ok(())
}

fn mask_inspect(path: &Path, with_spr: bool) -> Result<()> {
    let mask = read_mask(path).with_context(|| format!("reading {}", path.display()))?;
    print!("{}", encode_sidecar(&mask));
    println!("samples = {}", mask.count());
    if with_spr {
        println!("spr = {:.6}", spr_exact(&mask)?.spr);
    }
    Ok(())
}

fn spr(ctx: &Ctx, args: &SprArgs) -> Result<()> {
    let (report, n, target_r, exact_r) = match (&args.mask, &args.family) {
        (Some(path), _) => {
            let mask = read_mask(path).with_context(|| format!("reading {}", path.display()))?;
            let report = if args.samples == 0 {
                spr_exact(&mask)?
            } else {
                spr_monte_carlo_fixed(&mask, args.samples, args.bases, ctx.seed)?
            };
            let r = actual_reduction(&mask);
            (report, mask.size(), None, r)
        }
        (None, Some(family)) => {
            let (report, r) = if args.samples == 0 {
                let mask = family.build(ctx.seed)?;
                (spr_exact(&mask)?, actual_reduction(&mask))
            } else {
                let report = spr_monte_carlo(
                    |s| family.build(s).map_err(into_core),
                    args.samples,
                    args.bases,
                    ctx.seed,
                )?;
                let r = report.stats.map_or(f64::NAN, |s| s.mean_reduction);
                (report, r)
            };
            (report, family.n, family.target_r, r)
        }
        (None, None) => bail!("give --mask or a mask family (--n ...)"),
    };
    let (target_r, actual) = (target_r.unwrap_or(exact_r), exact_r);
    let row = report.csv_row(n, target_r, actual);
    println!("{SPR_CSV_HEADER}\n{row}");
    if let Some(csv) = &args.csv {
        let path = ctx.out(csv)?;
        let mut text = if path.exists() {
            fs::read_to_string(&path)?
        } else {
            format!("{SPR_CSV_HEADER}\n")
        };
        text.push_str(&row);
        text.push('\n');
        fs::write(&path, text)?;
    }
    Ok(())
}

fn into_core(e: anyhow::Error) -> fcs_core::FcsError {
    match e.downcast::<fcs_core::FcsError>() {
        Ok(core) => core,
        Err(other) => fcs_core::FcsError::InvalidParameter(other.to_string()),
    }
}

fn is_kspace(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("fcsk"))
}

fn undersample(ctx: &Ctx, args: &UndersampleArgs) -> Result<()> {
    let mask = read_mask(&args.mask).with_context(|| format!("reading {}", args.mask.display()))?;
    let source = if is_kspace(&args.input) {
        InputSource::KSpace {
            path: args.input.clone(),
        }
    } else {
        InputSource::Image {
            path: args.input.clone(),
            pad_to_prime: false,
        }
    };
    let input = load_input(&InputSpec {
        id: "input".into(),
        source,
    })
    .with_context(|| format!("loading {}", args.input.display()))?;
    let noise = NoiseModel {
        sigma: args.noise_sigma,
    };
    let channels = input
        .channels
        .iter()
        .enumerate()
        .map(|(c, full)| undersample_kspace(full, &mask, noise, derive_seed(ctx.seed, c as u64)))
        .collect::<fcs_core::Result<Vec<KSpace>>>()?;
    let path = ctx.out(&args.output)?;
    write_kspace(&path, &channels)?;
    if let Some(zf) = &args.zero_fill {
        let images: Vec<_> = channels.iter().map(KSpace::to_image).collect();
        write_image(&ctx.out(zf)?, &rss_combine(&images)?)?;
    }
    info!(
        "{} channel(s), R = {:.4}",
        channels.len(),
        actual_reduction(&mask)
    );
    println!("{}", path.display());
    Ok(())
}

fn recon(ctx: &Ctx, args: &ReconArgs) -> Result<()> {
    let mask = read_mask(&args.mask).with_context(|| format!("reading {}", args.mask.display()))?;
    let channels =
        read_kspace(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let n = mask.size();
    let pad = match args.crop {
        Some(c) => PadInfo::new(c, n)?,
        None => PadInfo::identity(n),
    };
    let truth = args
        .truth
        .as_ref()
        .map(|p| read_image(p).with_context(|| format!("reading {}", p.display())))
        .transpose()?;
    // the iteration log compares against the uncropped grid
    let log_truth = truth
        .as_ref()
        .filter(|t| t.nrows() == n && channels.len() == 1);
    let spec = args.spec();
    let mut images = Vec::with_capacity(channels.len());
    let mut log = None;
    for (c, y) in channels.iter().enumerate() {
        let out = reconstruct_channel(y, &mask, &spec, log_truth)?;
        if out.non_convergence {
            log::warn!("channel {c}: CS baseline did not converge");
        }
        if c == 0 {
            log = out.log;
        }
        images.push(out.image);
    }
    let result = crop(&rss_combine(&images)?, pad)?;
    let path = ctx.out(&args.output)?;
    write_image(&path, &result)?;
    if let (Some(log_path), Some(log)) = (&args.log, &log) {
        fs::write(ctx.out(log_path)?, iteration_log_csv(log))?;
    }
    if let Some(truth) = &truth {
        let m = MetricsReport::compute(truth.view(), result.view(), 255.0)?;
        println!(
            "psnr_db = {:.4}\nssim = {:.6}\nrmse = {:.6}",
            m.psnr, m.ssim, m.rmse
        );
    }
    println!("{}", path.display());
    Ok(())
}

fn phantom(ctx: &Ctx, args: &PhantomArgs) -> Result<()> {
    let img = shepp_logan(args.n)?;
    let path = ctx.out(&args.output)?;
    write_image(&path, &img)?;
    if let Some(k) = &args.kspace {
        let kspace = fcs_core::Image::from_real(&img)?.to_kspace();
        write_kspace(&ctx.out(k)?, &[kspace])?;
    }
    println!("{}", path.display());
    Ok(())
}

fn run(ctx: &Ctx, args: &RunArgs) -> Result<()> {
    let mut plan = ExperimentPlan::from_file(&args.plan)
        .with_context(|| format!("reading plan {}", args.plan.display()))?;
    if ctx.seed_given {
        plan.seed = ctx.seed;
    }
    let out_dir = match (&plan.out_dir, ctx.out_dir_given) {
        (Some(dir), false) => dir.clone(),
        _ => ctx.out_dir.clone(),
    };
    let summary = run_experiment(&plan, &out_dir, None)?;
    let failed = summary.rows.iter().filter(|r| !r.is_ok()).count();
    info!("{} cells, {failed} failed", summary.rows.len());
    println!("{}", summary.csv_path.display());
    Ok(())
}

fn pad(ctx: &Ctx, args: &PadArgs) -> Result<()> {
    let img =
        read_image(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    if img.nrows() != img.ncols() {
        bail!(
            "{} is {}x{}, not square",
            args.input.display(),
            img.nrows(),
            img.ncols()
        );
    }
    let (padded, info) = match args.to {
        Some(to) => pad_to(&img, to)?,
        None => pad_to_prime(&img)?,
    };
    let path = ctx.out(&args.output)?;
    write_image(&path, &padded)?;
    info!(
        "padded {} -> {} (offset {})",
        info.original, info.padded, info.offset
    );
    println!("{}", path.display());
    Ok(())
}
