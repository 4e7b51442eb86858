//! One-sided (Hestenes) Jacobi SVD and the quantities derived from it.

use super::vector::{axpy, dot, norm};
use super::DenseMatrix;
use crate::error::{Error, Result};
use crate::rng::Rng;

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `A = U diag(σ) Vᵀ` with `k = min(m, n)`
/// triplets. `U` is `m × k`, `V` is `n × k`, both with orthonormal columns.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub left_vectors: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub right_vectors: DenseMatrix,
    pub numerical_rank: usize,
    pub rank_tolerance: f64,
}

impl SvdResult {
    pub fn sigma_max(&self) -> f64 {
        self.singular_values[0]
    }

    /// Smallest singular value above the rank tolerance, if any.
    pub fn sigma_min_nonzero(&self) -> Option<f64> {
        self.numerical_rank
            .checked_sub(1)
            .map(|r| self.singular_values[r])
    }

    /// `U diag(σ) Vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let u = &self.left_vectors;
        let v = &self.right_vectors;
        DenseMatrix::from_fn(u.rows(), v.rows(), |i, j| {
            self.singular_values
                .iter()
                .enumerate()
                .map(|(k, s)| u[(i, k)] * s * v[(j, k)])
                .sum()
        })
    }
}

/// Numerical-rank threshold `max(m, n) · σ_max · 2⁻⁵²`.
fn rank_tolerance(m: usize, n: usize, sigma_max: f64) -> f64 {
    m.max(n) as f64 * sigma_max * f64::EPSILON
}

pub fn svd(a: &DenseMatrix) -> Result<SvdResult> {
    a.ensure_finite()?;
    let (m, n) = a.shape();
    let transposed = m < n;

    // Work on the tall orientation: columns of W are rotated until mutually
    // orthogonal, V accumulates the rotations.
    let (p, q) = if transposed { (n, m) } else { (m, n) };
    let mut w: Vec<Vec<f64>> = if transposed {
        (0..q).map(|j| a.row(j).to_vec()).collect()
    } else {
        (0..q).map(|j| a.column(j)).collect()
    };
    let mut v: Vec<Vec<f64>> = (0..q)
        .map(|j| (0..q).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..q {
            for j in i + 1..q {
                let alpha = dot(&w[i], &w[i]);
                let beta = dot(&w[j], &w[j]);
                let gamma = dot(&w[i], &w[j]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, i, j, c, s);
                rotate_pair(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = w.iter().enumerate().map(|(k, c)| (norm(c), k)).collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));

    let singular_values: Vec<f64> = order.iter().map(|&(s, _)| s).collect();
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(q);
    let mut missing = Vec::new();
    for (slot, &(s, k)) in order.iter().enumerate() {
        if s > 0.0 {
            u_cols.push(w[k].iter().map(|x| x / s).collect());
        } else {
            u_cols.push(vec![0.0; p]);
            missing.push(slot);
        }
    }
    // Exactly zero columns carry no direction; complete them to an
    // orthonormal set.
    for slot in missing {
        let basis: Vec<Vec<f64>> = u_cols
            .iter()
            .enumerate()
            .filter(|&(k, c)| k != slot && c.iter().any(|x| *x != 0.0))
            .map(|(_, c)| c.clone())
            .collect();
        u_cols[slot] = orthonormal_complement_vector(&basis, p);
    }
    let v_cols: Vec<Vec<f64>> = order.iter().map(|&(_, k)| v[k].clone()).collect();

    let as_matrix = |cols: &[Vec<f64>], rows: usize| {
        DenseMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
    };
    let (left_vectors, right_vectors) = if transposed {
        (as_matrix(&v_cols, q), as_matrix(&u_cols, p))
    } else {
        (as_matrix(&u_cols, p), as_matrix(&v_cols, q))
    };

    let rank_tolerance = rank_tolerance(m, n, singular_values[0]);
    let numerical_rank = singular_values.iter().filter(|&&s| s > rank_tolerance).count();
    Ok(SvdResult {
        left_vectors,
        singular_values,
        right_vectors,
        numerical_rank,
        rank_tolerance,
    })
}

fn rotate_pair(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(j);
    let (ci, cj) = (&mut head[i], &mut tail[0]);
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let (xi, yj) = (*x, *y);
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}

/// A unit vector orthogonal to every vector in `basis` (assumed orthonormal,
/// fewer than `dim` of them). Tries the standard basis vectors in order.
fn orthonormal_complement_vector(basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut best: Option<Vec<f64>> = None;
    let mut best_norm = 0.0;
    for e in 0..dim {
        let mut x = vec![0.0; dim];
        x[e] = 1.0;
        // two passes of Gram-Schmidt
        for _ in 0..2 {
            for b in basis {
                let c = dot(b, &x);
                axpy(-c, b, &mut x);
            }
        }
        let nx = norm(&x);
        if nx > 0.5 {
            return x.iter().map(|v| v / nx).collect();
        }
        if nx > best_norm {
            best_norm = nx;
            best = Some(x);
        }
    }
    let x = best.expect("basis spans the whole space");
    x.iter().map(|v| v / best_norm).collect()
}

/// Orthonormal basis of `Null(A)` as the columns of an `n × (n − rank)`
/// matrix, or `None` when `A` has full column rank.
pub fn null_space_basis(a: &DenseMatrix) -> Result<Option<DenseMatrix>> {
    let s = svd(a)?;
    let n = a.cols();
    let r = s.numerical_rank;
    if r == n {
        return Ok(None);
    }
    let mut basis: Vec<Vec<f64>> = (0..r).map(|k| s.right_vectors.column(k)).collect();
    let mut null = Vec::with_capacity(n - r);
    for _ in r..n {
        let x = orthonormal_complement_vector(&basis, n);
        basis.push(x.clone());
        null.push(x);
    }
    Ok(Some(DenseMatrix::from_fn(n, n - r, |i, j| null[j][i])))
}

/// Moore-Penrose pseudoinverse `V Σ⁺ Uᵀ`, dropping singular values at or
/// below the rank tolerance.
pub fn pseudoinverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    let s = svd(a)?;
    Ok(pseudoinverse_from(&s))
}

pub(crate) fn pseudoinverse_from(s: &SvdResult) -> DenseMatrix {
    let u = &s.left_vectors;
    let v = &s.right_vectors;
    let r = s.numerical_rank;
    DenseMatrix::from_fn(v.rows(), u.rows(), |i, j| {
        (0..r)
            .map(|k| v[(i, k)] * u[(j, k)] / s.singular_values[k])
            .sum()
    })
}

/// Largest singular value, computed from the Jacobi SVD.
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(svd(m)?.sigma_max())
}

/// Settings for the power-iteration estimate of `‖M‖₂`.
#[derive(Clone, Copy, Debug)]
pub struct PowerIteration {
    pub max_iterations: usize,
    pub relative_tolerance: f64,
    pub seed: u64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            relative_tolerance: 1e-15,
            seed: 0x005e_ed0f_9043,
        }
    }
}

/// Power iteration on `MᵀM`. Converges at rate `(σ₂/σ₁)²` per step, so it is
/// only a fast path when the top singular value is separated.
pub fn spectral_norm_power(m: &DenseMatrix, opts: PowerIteration) -> Result<f64> {
    m.ensure_finite()?;
    let mut rng = Rng::new(opts.seed);
    let mut x: Vec<f64> = (0..m.cols()).map(|_| rng.standard_normal()).collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);

    let mut estimate = 0.0;
    for _ in 0..opts.max_iterations {
        let mx = m.matvec(&x);
        let sigma = norm(&mx);
        if sigma == 0.0 {
            return Ok(0.0);
        }
        let mut y = m.tr_matvec(&mx);
        let ny = norm(&y);
        if ny == 0.0 {
            return Ok(sigma);
        }
        y.iter_mut().for_each(|v| *v /= ny);
        x = y;
        let converged = (sigma - estimate).abs() <= opts.relative_tolerance * sigma;
        estimate = sigma;
        if converged {
            break;
        }
    }
    Ok(estimate)
}

/// Smallest singular value that counts towards the numerical rank.
pub fn min_nonzero_singular_value(a: &DenseMatrix) -> Result<f64> {
    svd(a)?
        .sigma_min_nonzero()
        .ok_or_else(|| Error::domain("matrix has no nonzero singular value"))
}

/// Orthogonal projector `A⁺A` onto `Range(Aᵀ)`, assembled as `V_r V_rᵀ` so it
/// is symmetric by construction.
pub fn row_space_projector(a: &DenseMatrix) -> Result<DenseMatrix> {
    let s = svd(a)?;
    Ok(row_space_projector_from(&s))
}

pub(crate) fn row_space_projector_from(s: &SvdResult) -> DenseMatrix {
    let v = &s.right_vectors;
    let r = s.numerical_rank;
    let n = v.rows();
    DenseMatrix::from_fn(n, n, |i, j| (0..r).map(|k| v[(i, k)] * v[(j, k)]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_fro(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        a.sub(b).frobenius_norm() / b.frobenius_norm().max(1.0)
    }

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = Rng::new(seed);
        rng.normal_matrix(rows, cols)
    }

    fn low_rank(rows: usize, cols: usize, rank: usize, seed: u64) -> DenseMatrix {
        let mut rng = Rng::new(seed);
        let l = rng.normal_matrix(rows, rank);
        let r = rng.normal_matrix(rank, cols);
        l.matmul(&r)
    }

    /// Cyclic two-sided Jacobi eigenvalue iteration on a symmetric matrix.
    /// Independent of the one-sided SVD path: it works on `AᵀA` and returns
    /// eigenvalues sorted descending.
    fn symmetric_jacobi_eigenvalues(s: &DenseMatrix) -> Vec<f64> {
        let n = s.rows();
        let mut a = s.clone();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[(p, q)] == 0.0 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let sn = t * c;
                    let mut j = DenseMatrix::identity(n);
                    j[(p, p)] = c;
                    j[(q, q)] = c;
                    j[(p, q)] = sn;
                    j[(q, p)] = -sn;
                    a = j.transpose().matmul(&a).matmul(&j);
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        ev
    }

    fn assert_orthonormal_columns(q: &DenseMatrix) {
        let qtq = q.transpose().matmul(q);
        let err = qtq.sub(&DenseMatrix::identity(q.cols())).frobenius_norm();
        assert!(err <= 1e-10, "orthonormality error {err}");
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let s = svd(&DenseMatrix::identity(2)).unwrap();
        assert_eq!(s.singular_values, vec![1.0, 1.0]);
        assert_eq!(s.numerical_rank, 2);
    }

    #[test]
    fn rank_one_outer_product() {
        let u = [0.6, 0.8];
        let v = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt()];
        let a = DenseMatrix::from_fn(2, 2, |i, j| u[i] * v[j]);
        let s = svd(&a).unwrap();
        assert!((s.singular_values[0] - 1.0).abs() < 1e-15);
        assert!(s.singular_values[1].abs() < 1e-15);
        assert_eq!(s.numerical_rank, 1);
        assert_orthonormal_columns(&s.left_vectors);
        assert_orthonormal_columns(&s.right_vectors);
    }

    #[test]
    fn matches_independent_eigen_oracle() {
        let a = gaussian(5, 3, 11);
        let s = svd(&a).unwrap();
        let oracle: Vec<f64> = symmetric_jacobi_eigenvalues(&a.transpose().matmul(&a))
            .into_iter()
            .map(f64::sqrt)
            .collect();
        for (got, want) in s.singular_values.iter().zip(&oracle) {
            assert!((got - want).abs() <= 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn factors_are_orthonormal_and_reconstruct() {
        for (rows, cols, rank, seed) in [(5, 3, 3, 1), (3, 5, 3, 2), (6, 4, 2, 3), (4, 7, 1, 4), (1, 4, 1, 5), (4, 1, 1, 6)] {
            let a = low_rank(rows, cols, rank, seed);
            let s = svd(&a).unwrap();
            assert_eq!(s.numerical_rank, rank, "{rows}x{cols}");
            assert_orthonormal_columns(&s.left_vectors);
            assert_orthonormal_columns(&s.right_vectors);
            let err = s.reconstruct().sub(&a).frobenius_norm();
            assert!(err <= 1e-10 * a.frobenius_norm().max(1.0), "reconstruction {err}");
            assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn zero_matrix_still_has_orthonormal_factors() {
        let s = svd(&DenseMatrix::zeros(3, 2)).unwrap();
        assert_eq!(s.numerical_rank, 0);
        assert_orthonormal_columns(&s.left_vectors);
        assert_orthonormal_columns(&s.right_vectors);
    }

    #[test]
    fn rejects_non_finite() {
        let a = DenseMatrix::from_rows(&[[1.0, f64::INFINITY]]).unwrap();
        assert!(matches!(svd(&a), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn pseudoinverse_simple_cases() {
        let i3 = DenseMatrix::identity(3);
        assert!(rel_fro(&pseudoinverse(&i3).unwrap(), &i3) < 1e-15);
        let d = DenseMatrix::diag(&[2.0, 0.0]);
        assert_eq!(pseudoinverse(&d).unwrap(), DenseMatrix::diag(&[0.5, 0.0]));
    }

    #[test]
    fn penrose_identities_on_rank_deficient_input() {
        let a = low_rank(6, 4, 2, 7);
        let p = pseudoinverse(&a).unwrap();
        let aap = a.matmul(&p);
        let apa = p.matmul(&a);
        assert!(rel_fro(&aap.matmul(&a), &a) <= 1e-10);
        assert!(rel_fro(&apa.matmul(&p), &p) <= 1e-10);
        assert!(rel_fro(&aap.transpose(), &aap) <= 1e-10);
        assert!(rel_fro(&apa.transpose(), &apa) <= 1e-10);
    }

    #[test]
    fn spectral_norm_cases() {
        assert_eq!(spectral_norm(&DenseMatrix::zeros(2, 3)).unwrap(), 0.0);
        let a = [1.0, -2.0, 2.0];
        let na = dot(&a, &a);
        let proj = DenseMatrix::from_fn(3, 3, |i, j| {
            (if i == j { 1.0 } else { 0.0 }) - a[i] * a[j] / na
        });
        assert!((spectral_norm(&proj).unwrap() - 1.0).abs() < 1e-14);
        for seed in 0..20 {
            let m = gaussian(4 + seed as usize % 3, 3, 100 + seed);
            let sn = spectral_norm(&m).unwrap();
            assert!(sn <= m.frobenius_norm() * (1.0 + 1e-15));
            let pw = spectral_norm_power(&m, PowerIteration::default()).unwrap();
            assert!((pw - sn).abs() <= 1e-8 * sn, "power {pw} vs svd {sn}");
        }
    }

    #[test]
    fn min_nonzero_singular_value_cases() {
        assert_eq!(min_nonzero_singular_value(&DenseMatrix::identity(3)).unwrap(), 1.0);
        let d = DenseMatrix::diag(&[3.0, 2.0, 0.0]);
        assert_eq!(min_nonzero_singular_value(&d).unwrap(), 2.0);
        assert!(matches!(
            min_nonzero_singular_value(&DenseMatrix::zeros(2, 2)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn example_matrix_sigma_min_backs_out_of_rk_rate() {
        // rho_rk^3 = (1 - s^2/||A||_F^2)^{3/2} = 0.8881  =>  s^2 = F^2 (1 - 0.8881^{2/3})
        let a = DenseMatrix::from_rows(&[[6.0, 4.0], [10.0, 4.0], [5.0, 8.0]]).unwrap();
        let f2 = a.frobenius_norm().powi(2);
        let backed_out = (f2 * (1.0 - 0.8881f64.powf(2.0 / 3.0))).sqrt();
        let s = min_nonzero_singular_value(&a).unwrap();
        // 0.8881 carries four digits, so the backed-out value is only good to ~1e-3 relative.
        assert!((s - backed_out).abs() <= 2e-3 * s, "{s} vs {backed_out}");
    }

    #[test]
    fn projector_cases() {
        let full = gaussian(5, 3, 21);
        let p = row_space_projector(&full).unwrap();
        assert!(rel_fro(&p, &DenseMatrix::identity(3)) < 1e-12);

        let a = [2.0, -1.0, 3.0];
        let row = DenseMatrix::from_rows(&[a]).unwrap();
        let na = dot(&a, &a);
        let want = DenseMatrix::from_fn(3, 3, |i, j| a[i] * a[j] / na);
        assert!(rel_fro(&row_space_projector(&row).unwrap(), &want) < 1e-14);

        let def = low_rank(6, 4, 2, 22);
        let p = row_space_projector(&def).unwrap();
        assert!(p.matmul(&p).sub(&p).frobenius_norm() <= 1e-10);
        assert!(p.sub(&p.transpose()).frobenius_norm() <= 1e-14);
        let at = def.transpose();
        assert!(rel_fro(&p.matmul(&at), &at) <= 1e-10);
        let via_pinv = pseudoinverse(&def).unwrap().matmul(&def);
        assert!(rel_fro(&p, &via_pinv) <= 1e-10);
    }

    #[test]
    fn null_space_is_orthogonal_to_rows() {
        let a = low_rank(2, 4, 2, 31);
        let ns = null_space_basis(&a).unwrap().unwrap();
        assert_eq!(ns.shape(), (4, 2));
        assert_orthonormal_columns(&ns);
        assert!(a.matmul(&ns).frobenius_norm() < 1e-12);
        assert!(null_space_basis(&gaussian(5, 3, 32)).unwrap().is_none());
    }
}
