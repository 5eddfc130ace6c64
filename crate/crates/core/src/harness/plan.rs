//! Experiment plans: a `key = value` file with repeated `[input]`, `[mask]`
//! and `[recon]` sections.
//!
//! ```text
//! seed = 42
//! reductions = 2, 4, 8
//! noise_sigma = 0
//!
//! [input]
//! kind = phantom
//! n = 257
//!
//! [mask]
//! kind = pfrac
//! mu = 16
//! ctr = N/12
//!
//! [recon]
//! solver = ffr
//! h0 = 6
//! ```
//!
//! Sizes that scale with the grid (`ctr`, `mu`) accept `N/<d>` or `<f>*N`
//! as well as plain numbers. Relative paths resolve against the plan file.

use std::path::{Path, PathBuf};

use crate::error::{FcsError, Result};
use crate::kv::{self, Section};
use crate::recon::{CsBaselineConfig, HSchedule, NlmParams, ReconConfig, Solver};
use crate::sampling::CartesianDims;

use super::acquire::NoiseModel;
use super::search::{Lattice, MaskRecipe};

/// A length that may be given relative to the grid size `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SizeExpr {
    Absolute(f64),
    OfN(f64),
}

impl SizeExpr {
    pub fn resolve(&self, n: usize) -> f64 {
        match *self {
            SizeExpr::Absolute(v) => v,
            SizeExpr::OfN(f) => f * n as f64,
        }
    }
}

impl std::str::FromStr for SizeExpr {
    type Err = FcsError;

    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || FcsError::Parse(format!("bad size expression {s:?}"));
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad());
        let e = if t == "N" {
            SizeExpr::OfN(1.0)
        } else if let Some(d) = t.strip_prefix("N/") {
            SizeExpr::OfN(1.0 / num(d)?)
        } else if let Some(f) = t.strip_suffix("*N") {
            SizeExpr::OfN(num(f)?)
        } else {
            SizeExpr::Absolute(num(&t)?)
        };
        match e {
            SizeExpr::Absolute(v) | SizeExpr::OfN(v) if v.is_finite() && v >= 0.0 => Ok(e),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    Phantom {
        n: usize,
    },
    /// Grayscale PNG/PGM, optionally zero-padded onto the next prime grid.
    Image {
        path: PathBuf,
        pad_to_prime: bool,
    },
    /// Fully sampled multi-channel k-space in the FCSK container.
    KSpace {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputSpec {
    pub id: String,
    pub source: InputSource,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaskFamily {
    PFrac { mu: SizeExpr, lattice: Lattice },
    Cartesian { dims: CartesianDims, alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskSpec {
    pub family: MaskFamily,
    pub ctr: SizeExpr,
}

impl MaskSpec {
    pub fn recipe(&self, n: usize) -> MaskRecipe {
        let ctr = self.ctr.resolve(n);
        match self.family {
            MaskFamily::PFrac { mu, lattice } => MaskRecipe::PFrac {
                mu: mu.resolve(n).round() as usize,
                ctr,
                lattice,
            },
            MaskFamily::Cartesian { dims, alpha } => MaskRecipe::Cartesian { dims, alpha, ctr },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconSpec {
    pub config: ReconConfig,
    pub nlm: NlmParams,
    pub cs: CsBaselineConfig,
}

impl ReconSpec {
    pub fn solver(&self) -> Solver {
        self.config.solver
    }

    /// Iteration count reported for this solver.
    pub fn iterations(&self) -> usize {
        match self.config.solver {
            Solver::ZeroFill => 0,
            Solver::CsBaseline => self.cs.iterations,
            Solver::Ffr | Solver::Fsirt => self.config.iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub reductions: Vec<f64>,
    pub noise: NoiseModel,
    pub write_images: bool,
    /// Fill the `wall_ms` column. Off by default so that reruns produce
    /// byte-identical CSV files.
    pub timing: bool,
    pub inputs: Vec<InputSpec>,
    pub masks: Vec<MaskSpec>,
    pub recons: Vec<ReconSpec>,
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(FcsError::Parse(format!("bad boolean for `{key}`: {v:?}"))),
    }
}

fn bool_or(s: &Section, key: &str, default: bool) -> Result<bool> {
    s.get(key).map_or(Ok(default), |v| parse_bool(key, v))
}

fn list_f64(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| kv::parse_value(key, t))
        .collect()
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p.trim());
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn parse_input(s: &Section, base: &Path, index: usize) -> Result<InputSpec> {
    let kind = s.require("kind")?;
    let source = match kind {
        "phantom" => InputSource::Phantom {
            n: s.parse_req("n")?,
        },
        "image" => InputSource::Image {
            path: resolve(base, s.require("path")?),
            pad_to_prime: bool_or(s, "pad_to_prime", false)?,
        },
        "kspace" => InputSource::KSpace {
            path: resolve(base, s.require("path")?),
        },
        other => return Err(FcsError::Parse(format!("unknown input kind {other:?}"))),
    };
    let default_id = match &source {
        InputSource::Phantom { n } => format!("phantom{n}"),
        InputSource::Image { path, .. } | InputSource::KSpace { path } => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("input{index}")),
    };
    let id = s.get("id").map(str::to_string).unwrap_or(default_id);
    if id.is_empty() || id.contains([',', '/', '\\']) {
        return Err(FcsError::Parse(format!(
            "input id {id:?} must be non-empty without , or /"
        )));
    }
    Ok(InputSpec { id, source })
}

fn parse_mask(s: &Section) -> Result<MaskSpec> {
    let ctr = s.parse_or("ctr", SizeExpr::Absolute(0.0))?;
    let family = match s.require("kind")? {
        "pfrac" => MaskFamily::PFrac {
            mu: s.parse_or("mu", SizeExpr::Absolute(0.0))?,
            lattice: s.parse_or("lattice", Lattice::default())?,
        },
        "cartesian1d" | "cartesian2d" => {
            let alpha: f64 = s.parse_or("alpha", 0.0)?;
            if !(alpha >= 0.0 && alpha.is_finite()) {
                return Err(FcsError::Parse(format!("alpha = {alpha} must be >= 0")));
            }
            MaskFamily::Cartesian {
                dims: if s.require("kind")? == "cartesian1d" {
                    CartesianDims::OneD
                } else {
                    CartesianDims::TwoD
                },
                alpha,
            }
        }
        other => return Err(FcsError::Parse(format!("unknown mask kind {other:?}"))),
    };
    Ok(MaskSpec { family, ctr })
}

fn parse_recon(s: &Section) -> Result<ReconSpec> {
    let solver: Solver = s.parse_req("solver")?;
    let defaults = ReconConfig::default();
    let h0: f64 = s.parse_or("h0", defaults.schedule.map_or(6.0, |h| h.initial()))?;
    let schedule = match s.get("schedule").unwrap_or("staged") {
        "staged" => Some(HSchedule::Staged { h0 }),
        "power" | "power_curve" => Some(HSchedule::PowerCurve {
            h0,
            exponent: s.parse_or("exponent", 1.0)?,
        }),
        "none" => None,
        other => return Err(FcsError::Parse(format!("unknown schedule {other:?}"))),
    };
    let config = ReconConfig {
        lambda_relax: s.parse_or("lambda", defaults.lambda_relax)?,
        iterations: s.parse_or("iterations", defaults.iterations)?,
        denoise_every: s.parse_or("denoise_every", defaults.denoise_every)?,
        schedule,
        solver,
    };
    config.validate()?;
    let nd = NlmParams::default();
    let nlm = NlmParams {
        h: 0.0,
        patch_radius: s.parse_or("patch_radius", nd.patch_radius)?,
        search_radius: s.parse_or("search_radius", nd.search_radius)?,
    };
    nlm.validate()?;
    let cd = CsBaselineConfig::default();
    let cs = CsBaselineConfig {
        wavelet_weight: s.parse_or("wavelet_weight", cd.wavelet_weight)?,
        tv_weight: s.parse_or("tv_weight", cd.tv_weight)?,
        iterations: s.parse_or("iterations", cd.iterations)?,
        step: s.parse_or("step", cd.step)?,
        tv_inner: s.parse_or("tv_inner", cd.tv_inner)?,
        normalize: bool_or(s, "normalize", cd.normalize)?,
    };
    cs.validate()?;
    Ok(ReconSpec { config, nlm, cs })
}

impl ExperimentPlan {
    /// Parses plan text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let sections = kv::parse(text)?;
        let global = &sections[0];
        let reductions = list_f64("reductions", global.require("reductions")?)?;
        if reductions.is_empty() || reductions.iter().any(|r| !(r.is_finite() && *r >= 1.0)) {
            return Err(FcsError::Parse(format!(
                "reductions must be a non-empty list of factors >= 1, got {reductions:?}"
            )));
        }
        let noise = NoiseModel {
            sigma: global.parse_or("noise_sigma", 0.0)?,
        };
        noise.validate()?;
        let mut plan = ExperimentPlan {
            seed: global.parse_or("seed", 0)?,
            out_dir: global.get("out_dir").map(|p| resolve(base, p)),
            reductions,
            noise,
            write_images: bool_or(global, "write_images", true)?,
            timing: bool_or(global, "timing", false)?,
            inputs: Vec::new(),
            masks: Vec::new(),
            recons: Vec::new(),
        };
        for s in &sections[1..] {
            match s.name.as_deref() {
                Some("input") => plan.inputs.push(parse_input(s, base, plan.inputs.len())?),
                Some("mask") => plan.masks.push(parse_mask(s)?),
                Some("recon") => plan.recons.push(parse_recon(s)?),
                Some(other) => return Err(FcsError::Parse(format!("unknown section [{other}]"))),
                None => unreachable!("only the first section is unnamed"),
            }
        }
        if plan.inputs.is_empty() || plan.masks.is_empty() || plan.recons.is_empty() {
            return Err(FcsError::Parse(
                "a plan needs at least one [input], [mask] and [recon] section".into(),
            ));
        }
        Ok(plan)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLAN: &str = "
seed = 7
reductions = 2, 4
timing = no

[input]
kind = phantom
n = 33

[input]
kind = image
path = scans/knee.png
pad_to_prime = yes

[mask]
kind = pfrac
mu = N/16
ctr = N/12

[mask]
kind = cartesian1d
alpha = 2
ctr = 3

[recon]
solver = ffr
schedule = power
h0 = 4
exponent = 2

[recon]
solver = cs_baseline
tv_weight = 0.01
";

    #[test]
    fn parses_full_plan() {
        let plan = ExperimentPlan::parse(PLAN, Path::new("/data")).unwrap();
        assert_eq!(plan.seed, 7);
        assert_eq!(plan.reductions, vec![2.0, 4.0]);
        assert_eq!(plan.inputs[0].id, "phantom33");
        assert_eq!(
            plan.inputs[1].source,
            InputSource::Image {
                path: PathBuf::from("/data/scans/knee.png"),
                pad_to_prime: true
            }
        );
        assert_eq!(plan.inputs[1].id, "knee");
        match plan.masks[0].recipe(257) {
            MaskRecipe::PFrac { mu, ctr, lattice } => {
                assert_eq!(mu, 16);
                assert!((ctr - 257.0 / 12.0).abs() < 1e-12);
                assert_eq!(lattice, Lattice::NextPrime);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            plan.recons[0].config.schedule,
            Some(HSchedule::PowerCurve {
                h0: 4.0,
                exponent: 2.0
            })
        );
        assert_eq!(plan.recons[1].cs.tv_weight, 0.01);
        assert_eq!(plan.recons[1].iterations(), 160);
        assert!(plan.write_images);
    }

    #[test]
    fn rejects_incomplete_plans() {
        assert!(ExperimentPlan::parse(
            "reductions = 2\n[input]\nkind = phantom\nn = 17\n",
            Path::new(".")
        )
        .is_err());
        assert!(
            ExperimentPlan::parse("[input]\nkind = phantom\nn = 17\n", Path::new(".")).is_err()
        );
        let bad_r = PLAN.replace("reductions = 2, 4", "reductions = 0.5");
        assert!(ExperimentPlan::parse(&bad_r, Path::new(".")).is_err());
        let bad_kind = PLAN.replace("kind = cartesian1d", "kind = radial");
        assert!(ExperimentPlan::parse(&bad_kind, Path::new(".")).is_err());
    }

    #[test]
    fn size_expressions() {
        assert_eq!("N/8".parse::<SizeExpr>().unwrap().resolve(256), 32.0);
        assert_eq!("0.25*N".parse::<SizeExpr>().unwrap().resolve(100), 25.0);
        assert_eq!("4.5".parse::<SizeExpr>().unwrap().resolve(100), 4.5);
        assert!("N/0".parse::<SizeExpr>().is_err());
        assert!("-3".parse::<SizeExpr>().is_err());
        assert!("half".parse::<SizeExpr>().is_err());
    }
}
