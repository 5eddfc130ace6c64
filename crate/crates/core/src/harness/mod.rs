//! Experiment harness: phantoms, padding, acquisition, file formats, the
//! reduction-factor search and the plan runner.

pub mod acquire;
pub mod files;
pub mod pad;
pub mod phantom;
pub mod plan;
pub mod runner;
pub mod search;

pub use acquire::{add_noise, sinogram_from_kspace, undersample, undersample_kspace, NoiseModel};
pub use files::{read_image, read_kspace, write_image, write_kspace};
pub use pad::{crop, pad_to, pad_to_prime, PadInfo};
pub use phantom::shepp_logan;
pub use plan::{ExperimentPlan, InputSource, InputSpec, MaskFamily, MaskSpec, ReconSpec, SizeExpr};
pub use runner::{
    load_input, reconstruct_channel, results_csv, run_experiment, CellRow, ChannelRecon,
    LoadedInput, RunSummary, RESULTS_CSV_HEADER,
};
pub use search::{mask_for_reduction, Lattice, MaskRecipe};
