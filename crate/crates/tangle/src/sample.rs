//! Seeded sampling of random four-qubit states.

use nilcore::invariants::measures4;
use nilcore::states::random_state;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::io::FigpolyRow;

/// Per-sample seeds drawn from one master seed, so rows do not depend on
/// the worker count.
pub fn sample_seeds(n: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.next_u64()).collect()
}

pub fn figpoly_row(seed: u64) -> nilcore::Result<FigpolyRow> {
    let m = measures4(&random_state(&[2; 4], seed))?;
    Ok(FigpolyRow {
        seed,
        poly_su: m.poly_su,
        nonunitarity: m.nonunitarity,
        poly_sl: m.poly_sl,
        sl_measure: m.sl_measure,
    })
}

/// `n` rows computed on `jobs` threads.
pub fn sample_figpoly(n: usize, seed: u64, jobs: usize) -> nilcore::Result<Vec<FigpolyRow>> {
    let seeds = sample_seeds(n, seed);
    if jobs <= 1 {
        return seeds.into_iter().map(figpoly_row).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    pool.install(|| seeds.into_par_iter().map(figpoly_row).collect())
}
