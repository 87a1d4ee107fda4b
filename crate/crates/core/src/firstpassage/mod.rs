//! Lattice first passage: exact walk probabilities (reflection principle),
//! the step recursion, a Monte Carlo sampler, and the diffusion limit
//! including the method-of-images detection rate.

pub mod diffusion;
pub mod exact;
pub mod montecarlo;

pub use diffusion::{
    diffusion_cumulative_detection, diffusion_density, diffusion_density_complex, diffusion_detection_rate,
    diffusion_detection_rate_complex, images_detection_rate, images_survivor_density, DiffusionSpec, ImagesRate,
};
pub use exact::{
    binomial, first_arrival_distribution, first_arrival_probability, first_arrival_probability_dual,
    first_arrival_probability_f64, recursion_evolve, surviving_probability, walk_probability, walk_probability_f64,
    BinomialTable, Boundary, Evolution, ExactProb, StepRecord, WalkSpec, EXACT_STEP_LIMIT,
};
pub use montecarlo::{monte_carlo_first_arrival, BinCheck, BinStatus, McHistogram};
