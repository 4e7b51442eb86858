use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    MatrixMarket,
    Synthetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorMeta {
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub rank: Option<usize>,
}

/// A consistent system `Ax = b`, optionally with the solution used to build `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub matrix: DenseMatrix,
    pub rhs: Vec<f64>,
    pub known_solution: Option<Vec<f64>>,
    pub provenance: Provenance,
    pub generator: GeneratorMeta,
}

impl ProblemInstance {
    /// Pairs a given matrix with `x* ~ N(0, I)` and `b = A x*`.
    pub fn with_random_solution(matrix: DenseMatrix, seed: u64, provenance: Provenance) -> Self {
        let mut rng = Rng::new(seed);
        let x = rng.normal_vec(matrix.cols());
        let rhs = matrix.matvec(&x);
        let generator = GeneratorMeta {
            seed,
            rows: matrix.rows(),
            cols: matrix.cols(),
            rank: None,
        };
        Self {
            matrix,
            rhs,
            known_solution: Some(x),
            provenance,
            generator,
        }
    }
}

/// `A = L R` with standard normal `L` (`m × rank`) and `R` (`rank × n`),
/// then `x* ~ N(0, I)` and `b = A x*`. Draw order: `L`, `R`, `x*`, each row
/// by row, from one stream seeded with `seed`.
pub fn generate_synthetic(m: usize, n: usize, rank: usize, seed: u64) -> Result<ProblemInstance> {
    if m == 0 || n == 0 {
        return Err(Error::domain(format!("empty shape {m}x{n}")));
    }
    if rank == 0 || rank > m.min(n) {
        return Err(Error::domain(format!(
            "rank {rank} outside 1..={} for a {m}x{n} matrix",
            m.min(n)
        )));
    }
    let mut rng = Rng::new(seed);
    let left = rng.normal_matrix(m, rank);
    let right = rng.normal_matrix(rank, n);
    let matrix = left.matmul(&right);
    let x = rng.normal_vec(n);
    let rhs = matrix.matvec(&x);
    Ok(ProblemInstance {
        matrix,
        rhs,
        known_solution: Some(x),
        provenance: Provenance::Synthetic,
        generator: GeneratorMeta {
            seed,
            rows: m,
            cols: n,
            rank: Some(rank),
        },
    })
}
