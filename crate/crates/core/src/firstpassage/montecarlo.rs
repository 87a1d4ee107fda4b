//! Monte Carlo first-arrival sampler.
//!
//! Trial `i` draws its steps from ChaCha8 stream `i` under a key derived from
//! the seed, so the histogram does not depend on how trials are split across
//! threads.

use std::io::Write;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::{Error, Result};

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct McHistogram {
    pub d: i64,
    pub n_max: u64,
    pub trials: u64,
    pub seed: u64,
    /// `counts[n]` = trials whose first arrival was at step `n`.
    pub counts: Vec<u64>,
    pub never_arrived: u64,
}

fn first_arrival_step(rng: &mut ChaCha8Rng, d: i64, n_max: u64) -> Option<u64> {
    if d == 0 {
        return Some(0);
    }
    let mut pos = -d;
    let mut word = 0u64;
    let mut left = 0;
    for step in 1..=n_max {
        if left == 0 {
            word = rng.next_u64();
            left = 64;
        }
        pos += if word & 1 == 1 { 1 } else { -1 };
        word >>= 1;
        left -= 1;
        if pos == 0 {
            return Some(step);
        }
        // cannot reach 0 in the remaining steps
        if (-pos) as u64 > n_max - step {
            return None;
        }
    }
    None
}

pub fn monte_carlo_first_arrival(d: i64, n_max: u64, trials: u64, seed: u64) -> Result<McHistogram> {
    if trials < 1 {
        return Err(Error::InvalidInput("at least one trial is required".into()));
    }
    if d < 0 {
        return Err(Error::InvalidInput(format!("start offset must be non-negative, got {d}")));
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    let bins = n_max as usize + 1;
    let chunks = trials.div_ceil(CHUNK);
    let (counts, never_arrived) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![0u64; bins];
            let mut never = 0u64;
            for trial in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = base.clone();
                rng.set_stream(trial);
                rng.set_word_pos(0);
                match first_arrival_step(&mut rng, d, n_max) {
                    Some(n) => counts[n as usize] += 1,
                    None => never += 1,
                }
            }
            (counts, never)
        })
        .reduce(
            || (vec![0u64; bins], 0u64),
            |(mut a, na), (b, nb)| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                (a, na + nb)
            },
        );
    Ok(McHistogram { d, n_max, trials, seed, counts, never_arrived })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinStatus {
    Ok,
    /// Between 3 and 4 standard errors from the reference.
    Flagged,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinCheck {
    pub step: u64,
    pub count: u64,
    pub exact_reference: f64,
    pub z_score: f64,
    pub status: BinStatus,
}

impl McHistogram {
    /// Compare each bin with reference probabilities `exact[n]`.
    pub fn compare(&self, exact: &[f64]) -> Vec<BinCheck> {
        let t = self.trials as f64;
        self.counts
            .iter()
            .enumerate()
            .map(|(n, &count)| {
                let p = exact.get(n).copied().unwrap_or(0.0);
                let se = (t * p * (1.0 - p)).sqrt();
                let diff = count as f64 - t * p;
                let z = if se > 0.0 {
                    diff / se
                } else if diff == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                let status = match z.abs() {
                    a if a <= 3.0 => BinStatus::Ok,
                    a if a <= 4.0 => BinStatus::Flagged,
                    _ => BinStatus::Failed,
                };
                BinCheck { step: n as u64, count, exact_reference: p, z_score: z, status }
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, exact: &[f64], w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["step", "count", "exact_reference", "z_score"])?;
        for b in self.compare(exact) {
            out.write_record([b.step.to_string(), b.count.to_string(), crate::io::fmt17(b.exact_reference), crate::io::fmt17(b.z_score)])?;
        }
        out.flush()?;
        Ok(())
    }
}
