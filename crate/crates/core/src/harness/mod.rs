//! Synthetic-data harness: procedural texture generation, paired
//! (ground truth, observation) simulation through the renderer, image
//! quality metrics, and a table-style evaluation of recovery methods.

pub mod evaluate;
pub mod metrics;
pub mod simulate;
pub mod texgen;

pub use evaluate::{evaluate, EvalReport, EvalRow, EvalSummary, Method};
pub use metrics::{hard_iou, psnr, psnr_masked, ssim, ssim_masked};
pub use simulate::{
    load_dataset, render_observation, simulate_one, simulate_pairs, write_dataset, SampleMeta,
    SimDataset, SimSample, SimSpec,
};
pub use texgen::{gen_texture, Recipe};
