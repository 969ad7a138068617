//! Fixtures shared by the benchmarks under `benches/`.

use plsgd_core::problems::{self, ProblemInstance};

/// Interpolated least-squares instance of the given shape with a fixed seed.
pub fn least_squares(n: usize, d: usize) -> ProblemInstance {
    problems::gen_interpolated_least_squares(n, d, 1, None).expect("benchmark instance")
}
