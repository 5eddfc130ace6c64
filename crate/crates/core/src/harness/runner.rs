//! Runs an [`ExperimentPlan`]: every (input, mask, reduction, recon) cell is
//! reconstructed independently and reported as one CSV row.
//!
//! Cells run in parallel, but each derives its seeds from the plan seed and
//! its indices alone and rows are written in cell order, so the CSV does not
//! depend on scheduling.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{FcsError, Result};
use crate::grid::{Image, KSpace};
use crate::metrics::MetricsReport;
use crate::recon::{
    cs_baseline, ffr, fsirt, iteration_log_csv, rss_combine, zero_fill, IterationRecord,
    RunOptions, Solver,
};
use crate::rng::derive_seed;
use crate::sampling::{actual_reduction, Provenance, SamplingMask};

use super::acquire::{sinogram_from_kspace, undersample_kspace};
use super::files::{read_image, read_kspace, write_image};
use super::pad::{crop, pad_to_prime, PadInfo};
use super::phantom::shepp_logan;
use super::plan::{ExperimentPlan, InputSource, InputSpec, MaskSpec, ReconSpec};
use super::search::mask_for_reduction;

pub const RESULTS_CSV_HEADER: &str = "input_id,channel_count,mask_kind,N,target_R,actual_R,ctr,alpha_or_mu,seed,solver,iterations,psnr_db,ssim,rmse,wall_ms,status";

/// Intensity peak used for every metric.
pub const PEAK: f64 = 255.0;

/// A fully sampled input scaled to `[0, 255]`.
#[derive(Debug, Clone)]
pub struct LoadedInput {
    pub id: String,
    /// Fully sampled k-space per receiver channel, on the (padded) grid.
    pub channels: Vec<KSpace>,
    /// Ground-truth magnitude (RSS for several channels) on the original grid.
    pub truth: Array2<f64>,
    pub pad: PadInfo,
}

impl LoadedInput {
    pub fn grid_size(&self) -> usize {
        self.pad.padded
    }
}

pub fn load_input(spec: &InputSpec) -> Result<LoadedInput> {
    let real_input = |truth: Array2<f64>, pad_prime: bool| -> Result<LoadedInput> {
        let (grid, pad) = if pad_prime {
            pad_to_prime(&truth)?
        } else {
            let n = truth.nrows();
            (truth.clone(), PadInfo::identity(n))
        };
        Ok(LoadedInput {
            id: spec.id.clone(),
            channels: vec![Image::from_real(&grid)?.to_kspace()],
            truth,
            pad,
        })
    };
    match &spec.source {
        InputSource::Phantom { n } => real_input(shepp_logan(*n)?, false),
        InputSource::Image { path, pad_to_prime } => {
            let img = read_image(path)?;
            let (r, c) = img.dim();
            if r != c {
                return Err(FcsError::InvalidParameter(format!(
                    "{}: image must be square, got {r}x{c}",
                    path.display()
                )));
            }
            real_input(img, *pad_to_prime)
        }
        InputSource::KSpace { path } => {
            let mut channels = read_kspace(path)?;
            let images: Vec<Image> = channels.iter().map(KSpace::to_image).collect();
            let rss = rss_combine(&images)?;
            let max = rss.iter().cloned().fold(0.0, f64::max);
            if max <= 0.0 {
                return Err(FcsError::InvalidParameter(format!(
                    "{}: k-space is identically zero",
                    path.display()
                )));
            }
            // joint scaling keeps every channel and the RSS truth consistent
            let scale = PEAK / max;
            for ch in &mut channels {
                ch.coefficients_mut().mapv_inplace(|v| v * scale);
            }
            let n = rss.nrows();
            Ok(LoadedInput {
                id: spec.id.clone(),
                channels,
                truth: rss * scale,
                pad: PadInfo::identity(n),
            })
        }
    }
}

/// One results row.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRow {
    pub input_id: String,
    pub channel_count: usize,
    pub mask_kind: &'static str,
    pub n: usize,
    pub target_r: f64,
    pub actual_r: Option<f64>,
    pub ctr: f64,
    pub alpha_or_mu: f64,
    pub seed: u64,
    pub solver: Solver,
    pub iterations: usize,
    pub metrics: Option<MetricsReport>,
    pub wall_ms: Option<u128>,
    pub status: String,
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

impl CellRow {
    pub fn is_ok(&self) -> bool {
        !self.status.starts_with("error")
    }

    pub fn to_csv(&self) -> String {
        let psnr = |m: MetricsReport| {
            if m.psnr.is_infinite() {
                "inf".to_string()
            } else {
                format!("{:.4}", m.psnr)
            }
        };
        format!(
            "{},{},{},{},{},{},{:.4},{},{},{},{},{},{},{},{},{}",
            self.input_id,
            self.channel_count,
            self.mask_kind,
            self.n,
            self.target_r,
            opt(self.actual_r, |r| format!("{r:.4}")),
            self.ctr,
            self.alpha_or_mu,
            self.seed,
            self.solver.name(),
            self.iterations,
            opt(self.metrics, psnr),
            opt(self.metrics, |m| format!("{:.6}", m.ssim)),
            opt(self.metrics, |m| format!("{:.6}", m.rmse)),
            opt(self.wall_ms, |w| w.to_string()),
            self.status,
        )
    }
}

pub fn results_csv(rows: &[CellRow]) -> String {
    let mut s = String::from(RESULTS_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", r.to_csv());
    }
    s
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub csv_path: PathBuf,
    pub rows: Vec<CellRow>,
}

struct Cell<'a> {
    input: &'a std::result::Result<LoadedInput, String>,
    input_id: &'a str,
    input_index: usize,
    mask: &'a MaskSpec,
    mask_index: usize,
    target_r: f64,
    r_index: usize,
    recon: &'a ReconSpec,
    recon_index: usize,
}

impl Cell<'_> {
    fn mask_seed(&self, plan_seed: u64) -> u64 {
        derive_seed(
            derive_seed(plan_seed, self.mask_index as u64),
            self.r_index as u64,
        )
    }

    fn stem(&self, kind: &str) -> String {
        format!(
            "{}__m{}-{}__R{}__r{}-{}",
            self.input_id,
            self.mask_index,
            kind,
            self.target_r,
            self.recon_index,
            self.recon.solver().name()
        )
    }
}

/// What a successful cell produces besides its row.
struct CellImages {
    zero_fill: Array2<f64>,
    fin: Array2<f64>,
    log_csv: Option<String>,
}

/// One channel reconstructed by [`reconstruct_channel`].
#[derive(Debug, Clone)]
pub struct ChannelRecon {
    pub image: Image,
    /// Iteration log of the projection solvers.
    pub log: Option<Vec<IterationRecord>>,
    /// Set when the CS baseline stopped before its objective settled.
    pub non_convergence: bool,
}

/// Runs the solver selected by `recon` on one masked channel. `truth`, when
/// given, adds PSNR to the iteration log.
pub fn reconstruct_channel(
    y: &KSpace,
    mask: &SamplingMask,
    recon: &ReconSpec,
    truth: Option<&Array2<f64>>,
) -> Result<ChannelRecon> {
    let done = |image, log, non_convergence| ChannelRecon {
        image,
        log,
        non_convergence,
    };
    let denoiser = recon
        .config
        .schedule
        .map(|_| &recon.nlm as &dyn crate::recon::Denoiser);
    let opts = RunOptions {
        denoiser,
        truth,
        keep_iterates: false,
    };
    match recon.solver() {
        Solver::ZeroFill => Ok(done(zero_fill(y), None, false)),
        Solver::Ffr => {
            let out = ffr(y, mask, &recon.config, opts)?;
            Ok(done(out.image, Some(out.log), false))
        }
        Solver::Fsirt => {
            let slopes = match mask.provenance() {
                Provenance::PFrac { spec, slopes } if spec.geometry == mask.geometry() => {
                    slopes.clone()
                }
                _ => {
                    return Err(FcsError::InvalidParameter(
                        "fSIRT needs a p.frac mask drawn on its own grid".into(),
                    ))
                }
            };
            let g = sinogram_from_kspace(y, &slopes)?;
            let out = fsirt(&g, mask, &recon.config, opts)?;
            Ok(done(out.image, Some(out.log), false))
        }
        Solver::CsBaseline => {
            let out = cs_baseline(y, mask, &recon.cs)?;
            Ok(done(out.image, None, out.non_convergence))
        }
    }
}

fn run_cell(cell: &Cell<'_>, plan: &ExperimentPlan) -> (CellRow, Option<CellImages>) {
    let n = cell.input.as_ref().map_or(0, LoadedInput::grid_size);
    let recipe = cell.mask.recipe(n);
    let seed = cell.mask_seed(plan.seed);
    let mut row = CellRow {
        input_id: cell.input_id.to_string(),
        channel_count: cell.input.as_ref().map_or(0, |i| i.channels.len()),
        mask_kind: recipe.kind_name(),
        n,
        target_r: cell.target_r,
        actual_r: None,
        ctr: recipe.ctr(),
        alpha_or_mu: recipe.shape_parameter(),
        seed,
        solver: cell.recon.solver(),
        iterations: cell.recon.iterations(),
        metrics: None,
        wall_ms: None,
        status: String::new(),
    };
    let started = Instant::now();
    let result = (|| -> Result<(f64, MetricsReport, CellImages, bool)> {
        let input = cell
            .input
            .as_ref()
            .map_err(|e| FcsError::InvalidParameter(format!("input failed to load: {e}")))?;
        let mask = mask_for_reduction(recipe, input.channels[0].geometry(), cell.target_r, seed)?;
        let single = input.channels.len() == 1 && input.pad.padded == input.pad.original;
        let mut finals = Vec::with_capacity(input.channels.len());
        let mut zfs = Vec::with_capacity(input.channels.len());
        let mut log_csv = None;
        let mut non_convergence = false;
        for (c, full) in input.channels.iter().enumerate() {
            let noise_seed = derive_seed(
                derive_seed(seed, 1 << 32 | cell.input_index as u64),
                c as u64,
            );
            let y = undersample_kspace(full, &mask, plan.noise, noise_seed)?;
            let truth = single.then_some(&input.truth);
            let out = reconstruct_channel(&y, &mask, cell.recon, truth)?;
            non_convergence |= out.non_convergence;
            if c == 0 {
                log_csv = out.log.as_deref().map(iteration_log_csv);
            }
            zfs.push(zero_fill(&y));
            finals.push(out.image);
        }
        let fin = crop(&rss_combine(&finals)?, input.pad)?;
        let zero_fill = crop(&rss_combine(&zfs)?, input.pad)?;
        let metrics = MetricsReport::compute(input.truth.view(), fin.view(), PEAK)?;
        Ok((
            actual_reduction(&mask),
            metrics,
            CellImages {
                zero_fill,
                fin,
                log_csv,
            },
            non_convergence,
        ))
    })();
    if plan.timing {
        row.wall_ms = Some(started.elapsed().as_millis());
    }
    match result {
        Ok((actual_r, metrics, images, non_convergence)) => {
            row.actual_r = Some(actual_r);
            row.metrics = Some(metrics);
            row.status = if non_convergence {
                "non_convergence"
            } else {
                "ok"
            }
            .into();
            log::debug!(
                "{} {} R={} {}: {:.2} dB",
                row.input_id,
                row.mask_kind,
                row.target_r,
                row.solver.name(),
                metrics.psnr
            );
            (row, Some(images))
        }
        Err(e) => {
            let msg: String = e
                .to_string()
                .chars()
                .map(|ch| if ch == ',' || ch == '\n' { ';' } else { ch })
                .collect();
            log::warn!(
                "{} {} R={}: {msg}",
                row.input_id,
                row.mask_kind,
                row.target_r
            );
            row.status = format!("error: {msg}");
            (row, None)
        }
    }
}

fn write_cell_outputs(
    dir: &Path,
    stem: &str,
    truth: &Array2<f64>,
    images: &CellImages,
) -> Result<()> {
    let img_dir = dir.join("images");
    fs::create_dir_all(&img_dir)?;
    write_image(&img_dir.join(format!("{stem}_zf.png")), &images.zero_fill)?;
    write_image(&img_dir.join(format!("{stem}_final.png")), &images.fin)?;
    let err = (&images.fin - truth).mapv(f64::abs);
    write_image(&img_dir.join(format!("{stem}_error.png")), &err)?;
    if let Some(log) = &images.log_csv {
        let log_dir = dir.join("logs");
        fs::create_dir_all(&log_dir)?;
        fs::write(log_dir.join(format!("{stem}.csv")), log)?;
    }
    Ok(())
}

/// Runs every cell of `plan`, writing `results.csv` (and, if enabled, per
/// cell images and iteration logs) under `out_dir`.
pub fn run_experiment(
    plan: &ExperimentPlan,
    out_dir: &Path,
    threads: Option<usize>,
) -> Result<RunSummary> {
    fs::create_dir_all(out_dir)?;
    let work = || -> Result<Vec<CellRow>> {
        let inputs: Vec<std::result::Result<LoadedInput, String>> = plan
            .inputs
            .par_iter()
            .map(|spec| load_input(spec).map_err(|e| e.to_string()))
            .collect();
        let mut cells = Vec::new();
        for (ii, (spec, input)) in plan.inputs.iter().zip(&inputs).enumerate() {
            for (mi, mask) in plan.masks.iter().enumerate() {
                for (ri, &target_r) in plan.reductions.iter().enumerate() {
                    for (ci, recon) in plan.recons.iter().enumerate() {
                        cells.push(Cell {
                            input,
                            input_id: &spec.id,
                            input_index: ii,
                            mask,
                            mask_index: mi,
                            target_r,
                            r_index: ri,
                            recon,
                            recon_index: ci,
                        });
                    }
                }
            }
        }
        cells
            .par_iter()
            .map(|cell| {
                let (row, images) = run_cell(cell, plan);
                if let (true, Some(images), Ok(input)) = (plan.write_images, &images, cell.input) {
                    write_cell_outputs(out_dir, &cell.stem(row.mask_kind), &input.truth, images)?;
                }
                Ok(row)
            })
            .collect()
    };
    let rows = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| FcsError::InvalidParameter(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let csv_path = out_dir.join("results.csv");
    fs::write(&csv_path, results_csv(&rows))?;
    Ok(RunSummary { csv_path, rows })
}
