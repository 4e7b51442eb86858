//! Kaczmarz epoch engines and the driver loop.
//!
//! One epoch is `m` row projections. The reshuffling variants differ only in
//! which order each epoch uses; RK draws `m` rows with replacement
//! (probability proportional to `‖a_i‖²`) and books them as one epoch so that
//! per-epoch curves compare equal work.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::CONSISTENCY_TOLERANCE;
use crate::error::{Error, Result};
use crate::linalg::svd::pseudoinverse_from;
use crate::linalg::vector::{axpy, distance, dot, norm, sub};
use crate::linalg::{svd, DenseMatrix};
use crate::permutation::{identity_permutation, random_permutation, Permutation, WeightedSampler};
use crate::rng::Rng;

/// Iterate movement below which an epoch counts as stagnant.
pub const STAGNATION_MOVEMENT: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum Variant {
    /// Fresh random permutation every epoch.
    Rrk,
    /// One random permutation drawn up front and reused.
    Sok,
    /// Rows in their natural order every epoch.
    Ik,
    /// `m` norm-weighted draws with replacement per epoch.
    Rk,
    /// Reshuffled SGD on `½(⟨a_i,x⟩ − b_i)²` with a constant step `gamma`.
    RrSgd { gamma: f64 },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Rrk => "rrk",
            Variant::Sok => "sok",
            Variant::Ik => "ik",
            Variant::Rk => "rk",
            Variant::RrSgd { .. } => "rrsgd",
        }
    }

    /// True for the variants that project exactly onto each row's hyperplane.
    pub fn is_kaczmarz(&self) -> bool {
        !matches!(self, Variant::RrSgd { .. })
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses the Kaczmarz variants. `rrsgd` needs a step size and is built with
/// [`Variant::RrSgd`] directly.
impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rrk" => Ok(Variant::Rrk),
            "sok" => Ok(Variant::Sok),
            "ik" => Ok(Variant::Ik),
            "rk" => Ok(Variant::Rk),
            other => Err(Error::Usage(format!("unknown variant '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub variant: Variant,
    pub max_epochs: usize,
    /// Stop once `‖x − x⁰_*‖² / ‖x⁰ − x⁰_*‖²` falls to this level.
    pub rse_tolerance: f64,
    /// Stop once `‖Ax − b‖ ≤ residual_tolerance · ‖b‖`.
    pub residual_tolerance: f64,
    pub seed: u64,
    pub record_trace: bool,
}

impl SolverConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            max_epochs: 1000,
            rse_tolerance: 1e-12,
            residual_tolerance: 1e-12,
            seed: 0,
            record_trace: true,
        }
    }

    pub fn with_max_epochs(mut self, epochs: usize) -> Self {
        self.max_epochs = epochs;
        self
    }

    pub fn with_tolerances(mut self, rse: f64, residual: f64) -> Self {
        self.rse_tolerance = rse;
        self.residual_tolerance = residual;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trace(mut self, record: bool) -> Self {
        self.record_trace = record;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(Error::Usage("max_epochs must be at least 1".into()));
        }
        for (name, tol) in [("rse", self.rse_tolerance), ("residual", self.residual_tolerance)] {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(Error::Usage(format!("{name} tolerance must be positive, got {tol}")));
            }
        }
        if let Variant::RrSgd { gamma } = self.variant {
            if !(gamma.is_finite() && gamma > 0.0) {
                return Err(Error::Usage(format!("step size must be positive, got {gamma}")));
            }
        }
        Ok(())
    }
}

/// Rows visited during one epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowSchedule {
    Permutation(Permutation),
    /// With-replacement draws (RK).
    Sampled(Vec<usize>),
}

impl RowSchedule {
    pub fn permutation(&self) -> Option<&Permutation> {
        match self {
            RowSchedule::Permutation(p) => Some(p),
            RowSchedule::Sampled(_) => None,
        }
    }
}

/// Metrics of the iterate at the end of epoch `epoch` (1-based).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    pub epoch: usize,
    pub schedule: RowSchedule,
    /// `‖x^k − x⁰_*‖₂`
    pub error_to_projected_start: f64,
    pub rse: f64,
    /// `‖Ax^k − b‖₂`
    pub residual_norm: f64,
    /// Ratio of this epoch's error to the previous one (0 when the previous
    /// error was already 0).
    pub contraction_observed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Rse,
    Residual,
    MaxEpochs,
    /// Iterates stopped moving while the residual stayed above tolerance.
    Stagnated,
}

/// Raised when the iterates stall with a residual above tolerance, which for
/// Kaczmarz-type methods points at an inconsistent right-hand side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InconsistencyWarning {
    pub epoch: usize,
    pub residual_norm: f64,
    pub movement: f64,
}

impl fmt::Display for InconsistencyWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "iterates stagnated at epoch {} (movement {:e}) with residual {:e}; \
             the system is probably inconsistent",
            self.epoch, self.movement, self.residual_norm
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub epochs_run: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    /// `x⁰_* = x⁰ + A⁺(b − Ax⁰)`, the limit the iterates approach.
    pub projected_start: Vec<f64>,
    /// `‖x⁰ − x⁰_*‖₂`
    pub initial_error: f64,
    pub final_rse: f64,
    pub final_residual: f64,
    pub traces: Vec<EpochTrace>,
    pub warning: Option<InconsistencyWarning>,
    pub config: SolverConfig,
}

#[inline]
fn project_in_place(x: &mut [f64], a: &[f64], b_i: f64, norm_sq: f64) {
    let step = (dot(a, x) - b_i) / norm_sq;
    axpy(-step, a, x);
}

/// Orthogonal projection of `x` onto the hyperplane `⟨a, y⟩ = b_i`.
pub fn project_row(x: &[f64], a: &[f64], b_i: f64) -> Result<Vec<f64>> {
    if a.len() != x.len() {
        return Err(Error::invalid(format!(
            "row length {} does not match iterate length {}",
            a.len(),
            x.len()
        )));
    }
    let norm_sq = dot(a, a);
    if norm_sq == 0.0 {
        return Err(Error::domain("cannot project onto a zero row"));
    }
    let mut out = x.to_vec();
    project_in_place(&mut out, a, b_i, norm_sq);
    Ok(out)
}

fn check_system(a: &DenseMatrix, b: &[f64], x: &[f64]) -> Result<()> {
    if b.len() != a.rows() {
        return Err(Error::invalid(format!(
            "right-hand side has {} entries for {} rows",
            b.len(),
            a.rows()
        )));
    }
    if x.len() != a.cols() {
        return Err(Error::invalid(format!(
            "iterate has {} entries for {} columns",
            x.len(),
            a.cols()
        )));
    }
    Ok(())
}

fn check_order(a: &DenseMatrix, pi: &Permutation) -> Result<()> {
    if pi.len() != a.rows() {
        return Err(Error::invalid(format!(
            "permutation of {} for a matrix with {} rows",
            pi.len(),
            a.rows()
        )));
    }
    Ok(())
}

/// First row with zero norm, as an error.
pub fn check_nonzero_rows(a: &DenseMatrix) -> Result<()> {
    match (0..a.rows()).find(|&i| a.row(i).iter().all(|v| *v == 0.0)) {
        Some(row) => Err(Error::ZeroRow { row }),
        None => Ok(()),
    }
}

/// One Kaczmarz sweep over the rows of `a` in the order `pi`.
pub fn run_epoch(x: &[f64], a: &DenseMatrix, b: &[f64], pi: &Permutation) -> Result<Vec<f64>> {
    check_system(a, b, x)?;
    check_order(a, pi)?;
    let mut out = x.to_vec();
    for i in pi.iter() {
        let row = a.row(i);
        let norm_sq = dot(row, row);
        if norm_sq == 0.0 {
            return Err(Error::ZeroRow { row: i });
        }
        project_in_place(&mut out, row, b[i], norm_sq);
    }
    Ok(out)
}

/// One reshuffled-SGD sweep with constant step `gamma`:
/// `x ← x − γ(⟨a_i, x⟩ − b_i) a_i` for `i` in `pi`.
pub fn rr_sgd_epoch(
    x: &[f64],
    a: &DenseMatrix,
    b: &[f64],
    pi: &Permutation,
    gamma: f64,
) -> Result<Vec<f64>> {
    check_system(a, b, x)?;
    check_order(a, pi)?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::domain(format!("step size must be positive, got {gamma}")));
    }
    let mut out = x.to_vec();
    for i in pi.iter() {
        let row = a.row(i);
        let r = dot(row, &out) - b[i];
        axpy(-gamma * r, row, &mut out);
    }
    Ok(out)
}

fn residual_norm(a: &DenseMatrix, x: &[f64], b: &[f64]) -> f64 {
    norm(&sub(&a.matvec(x), b))
}

enum Schedule {
    Reshuffle,
    Fixed(Permutation),
    Weighted(WeightedSampler),
}

/// Runs the configured variant from `x0` until a stopping rule fires.
pub fn solve(a: &DenseMatrix, b: &[f64], x0: &[f64], config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    check_system(a, b, x0)?;
    a.ensure_finite()?;
    if !b.iter().chain(x0).all(|v| v.is_finite()) {
        return Err(Error::invalid("right-hand side or start vector is not finite"));
    }
    if config.variant.is_kaczmarz() {
        check_nonzero_rows(a)?;
    }
    let m = a.rows();
    let row_norms = a.row_norms_squared();

    let pinv = pseudoinverse_from(&svd(a)?);
    let r0 = sub(b, &a.matvec(x0));
    let mut projected_start = pinv.matvec(&r0);
    axpy(1.0, x0, &mut projected_start);

    let initial_error = distance(x0, &projected_start);
    let initial_sq = initial_error * initial_error;
    let rse_of = |err: f64| if initial_sq > 0.0 { err * err / initial_sq } else { 0.0 };
    let b_norm = norm(b);
    let residual_limit = config.residual_tolerance * b_norm;

    let mut rng = Rng::new(config.seed);
    let schedule = match config.variant {
        Variant::Rrk | Variant::RrSgd { .. } => Schedule::Reshuffle,
        Variant::Sok => Schedule::Fixed(random_permutation(m, &mut rng)?),
        Variant::Ik => Schedule::Fixed(identity_permutation(m)?),
        Variant::Rk => Schedule::Weighted(WeightedSampler::new(&row_norms)?),
    };

    let mut x = x0.to_vec();
    let mut error = initial_error;
    let mut rse = rse_of(error);
    let mut residual = norm(&r0);
    let mut traces = Vec::new();
    let mut warning = None;
    let mut epochs_run = 0;

    let stop_for = |rse: f64, residual: f64| {
        if rse <= config.rse_tolerance {
            Some(StopReason::Rse)
        } else if residual <= residual_limit {
            Some(StopReason::Residual)
        } else {
            None
        }
    };

    let mut stop_reason = stop_for(rse, residual);
    while stop_reason.is_none() && epochs_run < config.max_epochs {
        let previous = x.clone();
        let used = match &schedule {
            Schedule::Reshuffle => {
                let pi = random_permutation(m, &mut rng)?;
                apply_order(&mut x, a, b, &row_norms, pi.as_slice(), config.variant);
                RowSchedule::Permutation(pi)
            }
            Schedule::Fixed(pi) => {
                apply_order(&mut x, a, b, &row_norms, pi.as_slice(), config.variant);
                RowSchedule::Permutation(pi.clone())
            }
            Schedule::Weighted(sampler) => {
                let draws: Vec<usize> = (0..m).map(|_| sampler.sample(&mut rng)).collect();
                apply_order(&mut x, a, b, &row_norms, &draws, config.variant);
                RowSchedule::Sampled(draws)
            }
        };
        epochs_run += 1;

        let new_error = distance(&x, &projected_start);
        let contraction_observed = if error > 0.0 { new_error / error } else { 0.0 };
        error = new_error;
        rse = rse_of(error);
        residual = residual_norm(a, &x, b);
        if config.record_trace {
            traces.push(EpochTrace {
                epoch: epochs_run,
                schedule: used,
                error_to_projected_start: error,
                rse,
                residual_norm: residual,
                contraction_observed,
            });
        }

        stop_reason = stop_for(rse, residual);
        if stop_reason.is_none() {
            let movement = distance(&x, &previous);
            if movement <= STAGNATION_MOVEMENT * (1.0 + norm(&x)) {
                // A stall at a tiny residual is the floating-point floor, not
                // an inconsistent right-hand side.
                if residual > CONSISTENCY_TOLERANCE * (1.0 + b_norm) {
                    warning = Some(InconsistencyWarning {
                        epoch: epochs_run,
                        residual_norm: residual,
                        movement,
                    });
                }
                stop_reason = Some(StopReason::Stagnated);
            }
        }
    }

    let stop_reason = stop_reason.unwrap_or(StopReason::MaxEpochs);
    Ok(SolveReport {
        solution: x,
        epochs_run,
        converged: matches!(stop_reason, StopReason::Rse | StopReason::Residual),
        stop_reason,
        projected_start,
        initial_error,
        final_rse: rse,
        final_residual: residual,
        traces,
        warning,
        config: config.clone(),
    })
}

fn apply_order(
    x: &mut [f64],
    a: &DenseMatrix,
    b: &[f64],
    row_norms: &[f64],
    order: &[usize],
    variant: Variant,
) {
    match variant {
        Variant::RrSgd { gamma } => {
            for &i in order {
                let row = a.row(i);
                let r = dot(row, x) - b[i];
                axpy(-gamma * r, row, x);
            }
        }
        _ => {
            for &i in order {
                project_in_place(x, a.row(i), b[i], row_norms[i]);
            }
        }
    }
}
