//! Epoch operators, contraction factors and worst-case rates.
//!
//! A Kaczmarz epoch in order `π` is the affine map `x ↦ T_π x + g_π` with
//! `T_π = P_{π_m} ⋯ P_{π_1}` and `P_i = I − a_i a_iᵀ/‖a_i‖²`. On a consistent
//! system the error `x − x⁰_*` lives in `Range(Aᵀ)`, so the per-epoch
//! contraction is `‖T_π A⁺A‖₂`, which is strictly below one. The worst case
//! over all `m!` orders is `ρ_RRK`.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::svd::{pseudoinverse_from, row_space_projector_from};
use crate::linalg::vector::{axpy, distance, dot, norm, sub};
use crate::linalg::{spectral_norm, svd, DenseMatrix};
use crate::permutation::{identity_permutation, random_permutation, Permutation};
use crate::rng::Rng;
use crate::solver::{check_nonzero_rows, RowSchedule, SolveReport};

/// Largest `m` for which [`rho_rrk`] enumerates all orders by default.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 9;

/// Additive slack used when checking per-epoch bounds on recorded traces.
pub const BOUND_SLACK: f64 = 1e-9;

/// Relative residual above which `b` is treated as outside `Range(A)`.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-8;

/// The affine epoch map `x ↦ T x + g` for one row order.
#[derive(Clone, Debug)]
pub struct EpochOperator {
    pub iteration_matrix: DenseMatrix,
    pub offset: Vec<f64>,
    pub permutation: Permutation,
}

impl EpochOperator {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.iteration_matrix.matvec(x);
        axpy(1.0, &self.offset, &mut y);
        y
    }
}

/// `M ← (I − a aᵀ/‖a‖²) M`, in place.
fn project_columns(m: &mut DenseMatrix, a: &[f64], norm_sq: f64) {
    let w = m.tr_matvec(a);
    for (j, &aj) in a.iter().enumerate() {
        if aj != 0.0 {
            axpy(-aj / norm_sq, &w, m.row_mut(j));
        }
    }
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

/// `T_π` alone.
pub fn iteration_matrix(a: &DenseMatrix, pi: &Permutation) -> Result<DenseMatrix> {
    check_order(a, pi)?;
    let mut t = DenseMatrix::identity(a.cols());
    for i in pi.iter() {
        let row = a.row(i);
        let norm_sq = dot(row, row);
        if norm_sq == 0.0 {
            return Err(Error::ZeroRow { row: i });
        }
        project_columns(&mut t, row, norm_sq);
    }
    Ok(t)
}

pub fn epoch_operator(a: &DenseMatrix, b: &[f64], pi: &Permutation) -> Result<EpochOperator> {
    check_order(a, pi)?;
    if b.len() != a.rows() {
        return Err(Error::invalid("right-hand side length does not match rows"));
    }
    let n = a.cols();
    let mut t = DenseMatrix::identity(n);
    let mut g = vec![0.0; n];
    for i in pi.iter() {
        let row = a.row(i);
        let norm_sq = dot(row, row);
        if norm_sq == 0.0 {
            return Err(Error::ZeroRow { row: i });
        }
        project_columns(&mut t, row, norm_sq);
        // g ← P_i g + (b_i/‖a_i‖²) a_i
        let c = (b[i] - dot(row, &g)) / norm_sq;
        axpy(c, row, &mut g);
    }
    Ok(EpochOperator {
        iteration_matrix: t,
        offset: g,
        permutation: pi.clone(),
    })
}

/// Caches `A⁺A` so that many orders can be scored against one matrix.
#[derive(Clone, Debug)]
pub struct RateAnalyzer<'a> {
    matrix: &'a DenseMatrix,
    projector: DenseMatrix,
}

impl<'a> RateAnalyzer<'a> {
    pub fn new(a: &'a DenseMatrix) -> Result<Self> {
        check_nonzero_rows(a)?;
        let s = svd(a)?;
        Ok(Self {
            matrix: a,
            projector: row_space_projector_from(&s),
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        self.matrix
    }

    /// `A⁺A`, the orthogonal projector onto `Range(Aᵀ)`.
    pub fn projector(&self) -> &DenseMatrix {
        &self.projector
    }

    /// `‖T_π A⁺A‖₂`
    pub fn contraction_factor(&self, pi: &Permutation) -> Result<f64> {
        check_order(self.matrix, pi)?;
        // Applying the projectors to the columns of A⁺A builds T_π A⁺A directly.
        let mut m = self.projector.clone();
        for i in pi.iter() {
            let row = self.matrix.row(i);
            project_columns(&mut m, row, dot(row, row));
        }
        spectral_norm(&m)
    }

    /// `ρ_IK`, the factor of the natural row order.
    pub fn rho_ik(&self) -> Result<f64> {
        self.contraction_factor(&identity_permutation(self.matrix.rows())?)
    }
}

pub fn contraction_factor(a: &DenseMatrix, pi: &Permutation) -> Result<f64> {
    RateAnalyzer::new(a)?.contraction_factor(pi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub permutation: Permutation,
    pub factor: f64,
}

/// Contraction factors of every row order, in lexicographic order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub entries: Vec<RateEntry>,
    pub rho_rrk: f64,
    pub rho_ik: f64,
    pub argmax: Permutation,
}

impl RateTable {
    /// `ρ_SOK` for the shuffle drawn as `sigma`: its own contraction factor.
    pub fn rho_sok(&self, sigma: &Permutation) -> Option<f64> {
        let idx = lexicographic_rank(sigma.as_slice());
        self.entries
            .get(idx)
            .filter(|e| &e.permutation == sigma)
            .map(|e| e.factor)
    }

    /// Entries sorted by factor, largest first; ties keep lexicographic order.
    pub fn sorted_descending(&self) -> Vec<&RateEntry> {
        let mut v: Vec<&RateEntry> = self.entries.iter().collect();
        v.sort_by(|x, y| y.factor.total_cmp(&x.factor));
        v
    }

    /// Orders whose factor is within `tol` of `ρ_RRK`.
    pub fn maximizers(&self, tol: f64) -> Vec<&Permutation> {
        self.entries
            .iter()
            .filter(|e| e.factor >= self.rho_rrk - tol)
            .map(|e| &e.permutation)
            .collect()
    }
}

fn lexicographic_rank(order: &[usize]) -> usize {
    let m = order.len();
    let mut rank = 0;
    for i in 0..m {
        let smaller_later = order[i + 1..].iter().filter(|&&v| v < order[i]).count();
        rank = rank * (m - i) + smaller_later;
    }
    rank
}

/// Exhaustive `ρ_RRK = max_π ‖T_π A⁺A‖₂` over all `m!` orders.
pub fn rho_rrk(a: &DenseMatrix, m_limit: usize) -> Result<RateTable> {
    let m = a.rows();
    if m > m_limit {
        return Err(Error::Capacity { m, limit: m_limit });
    }
    let analyzer = RateAnalyzer::new(a)?;
    let orders: Vec<Permutation> = (0..m)
        .permutations(m)
        .map(Permutation::new)
        .collect::<Result<_>>()?;
    let factors: Vec<f64> = orders
        .par_iter()
        .map(|p| analyzer.contraction_factor(p))
        .collect::<Result<_>>()?;

    let (best, _) = factors
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let entries: Vec<RateEntry> = orders
        .into_iter()
        .zip(factors)
        .map(|(permutation, factor)| RateEntry { permutation, factor })
        .collect();
    Ok(RateTable {
        rho_rrk: entries[best].factor,
        rho_ik: entries[0].factor,
        argmax: entries[best].permutation.clone(),
        entries,
    })
}

/// Max factor over `samples` random orders: a lower bound on `ρ_RRK` for
/// when `m!` is out of reach.
pub fn rho_rrk_sampled(a: &DenseMatrix, samples: usize, rng: &mut Rng) -> Result<f64> {
    if samples == 0 {
        return Err(Error::Usage("at least one sample is required".into()));
    }
    let analyzer = RateAnalyzer::new(a)?;
    let orders: Vec<Permutation> = (0..samples)
        .map(|_| random_permutation(a.rows(), rng))
        .collect::<Result<_>>()?;
    let factors: Vec<f64> = orders
        .par_iter()
        .map(|p| analyzer.contraction_factor(p))
        .collect::<Result<_>>()?;
    Ok(factors.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub sigma_min: f64,
    pub spectral_norm_a: f64,
    pub frobenius_norm_a: f64,
    pub numerical_rank: usize,
    /// `√(1 − σ_min²/‖A‖_F²)`
    pub rho_rk: f64,
    /// `ρ_RK^m`, the RK rate over `m` steps (one epoch of work).
    pub rho_rk_per_epoch: f64,
}

pub fn rho_rk(a: &DenseMatrix) -> Result<SpectralSummary> {
    let s = svd(a)?;
    let sigma_min = s
        .sigma_min_nonzero()
        .ok_or_else(|| Error::domain("RK rate of a zero matrix"))?;
    let frobenius_norm_a = a.frobenius_norm();
    let ratio = (sigma_min / frobenius_norm_a).powi(2);
    let rho_rk = (1.0 - ratio).max(0.0).sqrt();
    Ok(SpectralSummary {
        sigma_min,
        spectral_norm_a: s.sigma_max(),
        frobenius_norm_a,
        numerical_rank: s.numerical_rank,
        rho_rk,
        rho_rk_per_epoch: rho_rk.powi(a.rows() as i32),
    })
}

fn consistent_pinv(a: &DenseMatrix, b: &[f64]) -> Result<DenseMatrix> {
    if b.len() != a.rows() {
        return Err(Error::invalid("right-hand side length does not match rows"));
    }
    let pinv = pseudoinverse_from(&svd(a)?);
    let x = pinv.matvec(b);
    let residual = norm(&sub(&a.matvec(&x), b));
    if residual > CONSISTENCY_TOLERANCE * (1.0 + norm(b)) {
        return Err(Error::Consistency { residual });
    }
    Ok(pinv)
}

/// `A⁺b`, after checking that `b` lies in `Range(A)`.
pub fn least_norm_solution(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    Ok(consistent_pinv(a, b)?.matvec(b))
}

/// `x⁰_* = A⁺b + (I − A⁺A) x⁰`, the point of the solution set closest to `x⁰`.
pub fn projected_start(a: &DenseMatrix, b: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
    if x0.len() != a.cols() {
        return Err(Error::invalid("start vector length does not match columns"));
    }
    let pinv = consistent_pinv(a, b)?;
    let r = sub(b, &a.matvec(x0));
    let mut out = pinv.matvec(&r);
    axpy(1.0, x0, &mut out);
    Ok(out)
}

/// `‖x − ref‖² / ‖x⁰ − ref‖²`
pub fn rse(x: &[f64], reference: &[f64], x0: &[f64]) -> Result<f64> {
    let denom = distance(x0, reference).powi(2);
    if denom == 0.0 {
        return Err(Error::domain("start vector equals the reference solution"));
    }
    Ok(distance(x, reference).powi(2) / denom)
}

/// Outcome of checking one recorded epoch against the per-epoch bound and,
/// when a worst-case rate is supplied, the geometric envelope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochCheck {
    pub epoch: usize,
    pub error_before: f64,
    pub error_after: f64,
    pub contraction_factor: f64,
    /// `factor · error_before + slack`
    pub epoch_bound: f64,
    pub epoch_ok: bool,
    /// `ρ^k · ‖x⁰ − x⁰_*‖ + slack`
    pub envelope: Option<f64>,
    pub envelope_ok: Option<bool>,
}

impl EpochCheck {
    pub fn passed(&self) -> bool {
        self.epoch_ok && self.envelope_ok.unwrap_or(true)
    }
}

/// Replays the logged orders of `report` and checks every epoch.
pub fn verify_trace_bounds(
    a: &DenseMatrix,
    b: &[f64],
    x0: &[f64],
    report: &SolveReport,
    rho_rrk: Option<f64>,
) -> Result<Vec<EpochCheck>> {
    if report.traces.len() != report.epochs_run {
        return Err(Error::Usage(format!(
            "report has {} traces for {} epochs; solve with record_trace set",
            report.traces.len(),
            report.epochs_run
        )));
    }
    let analyzer = RateAnalyzer::new(a)?;
    let target = projected_start(a, b, x0)?;
    let initial = distance(x0, &target);

    let mut before = initial;
    let mut checks = Vec::with_capacity(report.traces.len());
    for (k, trace) in report.traces.iter().enumerate() {
        let pi = match &trace.schedule {
            RowSchedule::Permutation(p) => p,
            RowSchedule::Sampled(_) => {
                return Err(Error::Usage(
                    "bounds apply to permutation schedules only, not sampled rows".into(),
                ))
            }
        };
        let factor = analyzer.contraction_factor(pi)?;
        let after = trace.error_to_projected_start;
        let epoch_bound = factor * before + BOUND_SLACK;
        let envelope = rho_rrk.map(|rho| rho.powi(k as i32 + 1) * initial + BOUND_SLACK);
        checks.push(EpochCheck {
            epoch: trace.epoch,
            error_before: before,
            error_after: after,
            contraction_factor: factor,
            epoch_bound,
            epoch_ok: after <= epoch_bound,
            envelope,
            envelope_ok: envelope.map(|e| after <= e),
        });
        before = after;
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pseudoinverse, row_space_projector};
    use crate::solver::{run_epoch, solve, SolverConfig, Variant};

    fn example() -> DenseMatrix {
        DenseMatrix::from_rows(&[[6.0, 4.0], [10.0, 4.0], [5.0, 8.0]]).unwrap()
    }

    fn one_based(p: &[usize]) -> Permutation {
        Permutation::from_one_based(p).unwrap()
    }

    fn orthonormal_rows(m: usize, n: usize, rng: &mut Rng) -> DenseMatrix {
        // Gram-Schmidt on Gaussian rows
        let mut rows: Vec<Vec<f64>> = Vec::new();
        while rows.len() < m {
            let mut v = rng.normal_vec(n);
            for _ in 0..2 {
                for r in &rows {
                    let c = dot(r, &v);
                    axpy(-c, r, &mut v);
                }
            }
            let nv = norm(&v);
            rows.push(v.iter().map(|x| x / nv).collect());
        }
        DenseMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn single_row_operator() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0, 2.0]]).unwrap();
        let op = epoch_operator(&a, &[6.0], &identity_permutation(1).unwrap()).unwrap();
        let want_t = DenseMatrix::from_fn(3, 3, |i, j| {
            (if i == j { 1.0 } else { 0.0 }) - a[(0, i)] * a[(0, j)] / 9.0
        });
        assert!(op.iteration_matrix.sub(&want_t).frobenius_norm() < 1e-15);
        let want_g = [6.0 / 9.0, 12.0 / 9.0, 12.0 / 9.0];
        assert!(distance(&op.offset, &want_g) < 1e-15);
    }

    #[test]
    fn orthonormal_rows_give_i_minus_ata() {
        let mut rng = Rng::new(4);
        let a = orthonormal_rows(3, 5, &mut rng);
        let b = rng.normal_vec(3);
        let pi = random_permutation(3, &mut rng).unwrap();
        let op = epoch_operator(&a, &b, &pi).unwrap();
        let want = DenseMatrix::identity(5).sub(&a.transpose().matmul(&a));
        assert!(op.iteration_matrix.sub(&want).frobenius_norm() < 1e-14);
        assert!(contraction_factor(&a, &pi).unwrap() < 1e-12);
    }

    #[test]
    fn matrix_form_matches_epoch_loop() {
        let mut rng = Rng::new(5);
        let a = rng.normal_matrix(5, 3);
        let b = rng.normal_vec(5);
        let pi = random_permutation(5, &mut rng).unwrap();
        let op = epoch_operator(&a, &b, &pi).unwrap();
        for _ in 0..20 {
            let x = rng.normal_vec(3);
            let looped = run_epoch(&x, &a, &b, &pi).unwrap();
            let affine = op.apply(&x);
            assert!(distance(&looped, &affine) <= 1e-10 * (1.0 + norm(&looped)));
        }
    }

    #[test]
    fn example_contraction_factors() {
        let a = example();
        let cases = [
            ([1, 2, 3], 0.7897),
            ([3, 2, 1], 0.7897),
            ([3, 1, 2], 0.8918),
            ([2, 1, 3], 0.8918),
            ([2, 3, 1], 0.7355),
            ([1, 3, 2], 0.7355),
        ];
        for (p, want) in cases {
            let got = contraction_factor(&a, &one_based(&p)).unwrap();
            assert!((got - want).abs() <= 1e-3, "{p:?}: {got}");
        }
        let table = rho_rrk(&a, DEFAULT_ENUMERATION_LIMIT).unwrap();
        assert!((table.rho_rrk - 0.8918).abs() <= 1e-3);
        let winners = table.maximizers(1e-10);
        assert_eq!(winners.len(), 2);
        assert!(winners.contains(&&one_based(&[3, 1, 2])));
        assert!(winners.contains(&&one_based(&[2, 1, 3])));
        assert!((table.rho_ik - 0.7897).abs() <= 1e-3);
    }

    #[test]
    fn contraction_factor_matches_dense_product_oracle() {
        let mut rng = Rng::new(6);
        let a = rng.normal_matrix(4, 3);
        let pi = random_permutation(4, &mut rng).unwrap();
        // explicit chain of n×n projectors times A⁺A from the pseudoinverse
        let mut chain = DenseMatrix::identity(3);
        for i in pi.iter() {
            let r = a.row(i);
            let nr = dot(r, r);
            let p = DenseMatrix::from_fn(3, 3, |j, k| {
                (if j == k { 1.0 } else { 0.0 }) - r[j] * r[k] / nr
            });
            chain = p.matmul(&chain);
        }
        let apa = pseudoinverse(&a).unwrap().matmul(&a);
        let want = spectral_norm(&chain.matmul(&apa)).unwrap();
        let got = contraction_factor(&a, &pi).unwrap();
        assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
    }

    #[test]
    fn enumeration_small_cases() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let t = rho_rrk(&a, 9).unwrap();
        assert_eq!(t.entries.len(), 1);
        assert_eq!(t.rho_rrk, contraction_factor(&a, &identity_permutation(1).unwrap()).unwrap());

        let mut rng = Rng::new(7);
        let a = rng.normal_matrix(4, 2);
        let t = rho_rrk(&a, 9).unwrap();
        assert_eq!(t.entries.len(), 24);
        let recomputed = (0..4)
            .permutations(4)
            .map(|p| contraction_factor(&a, &Permutation::new(p).unwrap()).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(t.rho_rrk, recomputed);
        for e in &t.entries {
            assert_eq!(t.rho_sok(&e.permutation), Some(e.factor));
        }
        let sorted = t.sorted_descending();
        assert_eq!(sorted[0].factor, t.rho_rrk);
        assert!(sorted.windows(2).all(|w| w[0].factor >= w[1].factor));
    }

    #[test]
    fn enumeration_capacity() {
        let a = DenseMatrix::identity(10);
        assert!(matches!(rho_rrk(&a, 9), Err(Error::Capacity { m: 10, limit: 9 })));
    }

    #[test]
    fn sampled_rate_is_a_lower_bound() {
        let mut rng = Rng::new(8);
        for m in 3..=6 {
            let a = rng.normal_matrix(m, 3);
            let exact = rho_rrk(&a, 9).unwrap().rho_rrk;
            let sampled = rho_rrk_sampled(&a, 30, &mut rng).unwrap();
            assert!(sampled <= exact);
        }
        let a = example();
        let full = rho_rrk_sampled(&a, 500, &mut Rng::new(1)).unwrap();
        assert_eq!(full, rho_rrk(&a, 9).unwrap().rho_rrk);

        let mut r1 = Rng::new(2);
        let one = rho_rrk_sampled(&a, 1, &mut r1).unwrap();
        let drawn = random_permutation(3, &mut Rng::new(2)).unwrap();
        assert_eq!(one, contraction_factor(&a, &drawn).unwrap());
        assert!(rho_rrk_sampled(&a, 0, &mut r1).is_err());
    }

    #[test]
    fn rk_rate_cases() {
        let s = rho_rk(&example()).unwrap();
        assert!((s.rho_rk_per_epoch - 0.8881).abs() <= 1e-3, "{}", s.rho_rk_per_epoch);
        assert_eq!(s.rho_rk_per_epoch, s.rho_rk.powi(3));

        let one = rho_rk(&DenseMatrix::from_rows(&[[-3.0]]).unwrap()).unwrap();
        assert_eq!(one.rho_rk, 0.0);

        for n in 1..6 {
            let s = rho_rk(&DenseMatrix::identity(n)).unwrap();
            assert!((s.rho_rk - (1.0 - 1.0 / n as f64).sqrt()).abs() < 1e-15);
        }
        assert!(matches!(rho_rk(&DenseMatrix::zeros(2, 2)), Err(Error::Domain(_))));
    }

    #[test]
    fn least_norm_cases() {
        let b = vec![1.0, -2.0, 3.0];
        assert!(distance(&least_norm_solution(&DenseMatrix::identity(3), &b).unwrap(), &b) < 1e-15);
        assert_eq!(least_norm_solution(&example(), &[0.0; 3]).unwrap(), vec![0.0, 0.0]);

        let mut rng = Rng::new(9);
        let a = rng.normal_matrix(2, 4);
        let b = rng.normal_vec(2);
        let x = least_norm_solution(&a, &b).unwrap();
        assert!(distance(&a.matvec(&x), &b) < 1e-12);
        let null = crate::linalg::null_space_basis(&a).unwrap().unwrap();
        for _ in 0..50 {
            let c = rng.normal_vec(2);
            let y = crate::linalg::vector::add(&x, &null.matvec(&c));
            assert!(distance(&a.matvec(&y), &b) < 1e-10);
            assert!(norm(&y) >= norm(&x));
        }

        let inconsistent = DenseMatrix::from_rows(&[[1.0, 0.0], [1.0, 0.0]]).unwrap();
        assert!(matches!(
            least_norm_solution(&inconsistent, &[1.0, 2.0]),
            Err(Error::Consistency { .. })
        ));
    }

    #[test]
    fn projected_start_cases() {
        let mut rng = Rng::new(10);
        let a = rng.normal_matrix(3, 6);
        let b = rng.normal_vec(3);
        let ln = least_norm_solution(&a, &b).unwrap();
        assert!(distance(&projected_start(&a, &b, &[0.0; 6]).unwrap(), &ln) < 1e-14);

        let x0 = rng.normal_vec(6);
        let xs = projected_start(&a, &b, &x0).unwrap();
        assert!(distance(&a.matvec(&xs), &b) < 1e-10);
        assert!(distance(&projected_start(&a, &b, &xs).unwrap(), &xs) < 1e-12);

        let null = crate::linalg::null_space_basis(&a).unwrap().unwrap();
        let d0 = distance(&x0, &xs);
        for _ in 0..50 {
            let c = rng.normal_vec(3);
            let other = crate::linalg::vector::add(&ln, &null.matvec(&c));
            assert!(d0 <= distance(&x0, &other) + 1e-12);
        }
        // x0 − x⁰_* lies in the row space
        let p = row_space_projector(&a).unwrap();
        let d = sub(&x0, &xs);
        assert!(distance(&p.matvec(&d), &d) < 1e-10);
    }

    #[test]
    fn rse_cases() {
        let x0 = [0.0, 0.0];
        let r = [2.0, -4.0];
        assert_eq!(rse(&x0, &r, &x0).unwrap(), 1.0);
        assert_eq!(rse(&r, &r, &x0).unwrap(), 0.0);
        assert_eq!(rse(&[1.0, -2.0], &r, &x0).unwrap(), 0.25);
        assert!(rse(&r, &r, &r).is_err());
    }

    #[test]
    fn trace_bounds_on_example_matrix() {
        let a = example();
        let mut rng = Rng::new(11);
        let xs = rng.normal_vec(2);
        let b = a.matvec(&xs);
        let cfg = SolverConfig::new(Variant::Rrk)
            .with_max_epochs(30)
            .with_tolerances(1e-30, 1e-30)
            .with_seed(5);
        let rep = solve(&a, &b, &[0.0, 0.0], &cfg).unwrap();
        let rho = rho_rrk(&a, 9).unwrap().rho_rrk;
        let checks = verify_trace_bounds(&a, &b, &[0.0, 0.0], &rep, Some(rho)).unwrap();
        assert_eq!(checks.len(), rep.epochs_run);
        assert!(checks.iter().all(EpochCheck::passed));
    }

    #[test]
    fn trace_bounds_orthonormal_one_epoch() {
        let mut rng = Rng::new(12);
        let a = orthonormal_rows(4, 4, &mut rng);
        let b = rng.normal_vec(4);
        let rep = solve(&a, &b, &[0.0; 4], &SolverConfig::new(Variant::Rrk)).unwrap();
        assert_eq!(rep.epochs_run, 1);
        let checks = verify_trace_bounds(&a, &b, &[0.0; 4], &rep, None).unwrap();
        assert!(checks[0].passed());
        assert!(checks[0].error_after < 1e-12);
    }

    #[test]
    fn fabricated_violation_is_caught() {
        let a = example();
        let b = a.matvec(&[1.0, 1.0]);
        let cfg = SolverConfig::new(Variant::Rrk).with_max_epochs(5).with_tolerances(1e-30, 1e-30);
        let mut rep = solve(&a, &b, &[0.0, 0.0], &cfg).unwrap();
        rep.traces[2].error_to_projected_start = rep.traces[1].error_to_projected_start * 1.01;
        let checks = verify_trace_bounds(&a, &b, &[0.0, 0.0], &rep, None).unwrap();
        assert!(!checks[2].epoch_ok);
        assert!(checks[0].epoch_ok && checks[1].epoch_ok);
    }

    #[test]
    fn trace_bounds_need_a_trace() {
        let a = example();
        let b = a.matvec(&[1.0, 1.0]);
        let cfg = SolverConfig::new(Variant::Rrk).with_max_epochs(3).with_trace(false);
        let rep = solve(&a, &b, &[0.0, 0.0], &cfg).unwrap();
        assert!(matches!(
            verify_trace_bounds(&a, &b, &[0.0, 0.0], &rep, None),
            Err(Error::Usage(_))
        ));
        let rk = solve(&a, &b, &[0.0, 0.0], &SolverConfig::new(Variant::Rk).with_max_epochs(2)).unwrap();
        assert!(matches!(
            verify_trace_bounds(&a, &b, &[0.0, 0.0], &rk, None),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn lexicographic_rank_matches_itertools_order() {
        for (k, p) in (0..5).permutations(5).enumerate() {
            assert_eq!(lexicographic_rank(&p), k);
        }
    }
}
