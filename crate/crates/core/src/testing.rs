//! Small fixtures shared by unit tests, integration tests and examples.

use crate::dataset::Dataset;

/// Five collinear points: a tight triple at x = 0, 1, 2 and a pair at
/// x = 10, 11.
pub fn t5() -> Dataset {
    Dataset::from_rows(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [10.0, 0.0], [11.0, 0.0]])
        .expect("fixture is valid")
}

#[cfg(test)]
pub(crate) use strategies::*;
