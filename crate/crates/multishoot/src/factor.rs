//! Matrix decompositions behind the solver: SPD solves, square solves, and
//! rank-revealing fundamental-basis computation for the constraint Jacobian.
//!
//! All failures are recoverable signals (the solver reacts to an SPD failure
//! by increasing its regularization), never panics.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::FactorError;

/// Relative rank threshold shared by the rank-revealing decompositions and
/// pseudoinverses in this crate.
pub const RANK_TOL: f64 = 1e-10;

/// How to compute the fundamental basis [Y Z] of h_u.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BasisMethod {
    #[default]
    LuFullPivot,
    QrColPivot,
}

/// Range companion Y, nullspace basis Z and detected rank of h_u.
///
/// Invariants: h_u Z = 0 and [Y Z] is square invertible.
#[derive(Debug, Clone)]
pub struct BasisPair {
    pub y: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub rank: usize,
}

impl BasisPair {
    pub fn nz(&self) -> usize {
        self.z.ncols()
    }
}

/// Cholesky factor wrapper so repeated solves against one decomposition are
/// counted once by the instrumentation.
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
    dim: usize,
}

impl SpdFactor {
    pub fn new(a: DMatrix<f64>) -> Result<Self, FactorError> {
        let dim = a.nrows();
        let chol = Cholesky::new(a).ok_or(FactorError::NotPositiveDefinite)?;
        Ok(Self { chol, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }
}

/// A^-1 B for symmetric positive definite A via Cholesky.
pub fn spd_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>, FactorError> {
    Ok(SpdFactor::new(a.clone())?.solve_mat(b))
}

/// A^-1 B for square invertible A via LU with partial pivoting.
///
/// Declares failure when the diagonal-ratio condition estimate exceeds 1e12.
pub fn square_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>, FactorError> {
    let lu = a.clone().lu();
    let u = lu.u();
    let mut dmax = 0.0f64;
    let mut dmin = f64::INFINITY;
    for i in 0..u.nrows().min(u.ncols()) {
        let d = u[(i, i)].abs();
        dmax = dmax.max(d);
        dmin = dmin.min(d);
    }
    if dmin == 0.0 || !dmin.is_finite() || dmax / dmin > 1e12 {
        return Err(FactorError::Singular);
    }
    lu.solve(b).ok_or(FactorError::Singular)
}

/// Rank-revealing fundamental basis of a wide constraint Jacobian (nh <= nu).
///
/// Y is the set of pivot-column unit vectors, Z spans the nullspace. The rank
/// is detected at `RANK_TOL` relative to the largest pivot; rank < nh is
/// reported through `BasisPair::rank` and left to the caller.
pub fn basis_decompose(hu: &DMatrix<f64>, method: BasisMethod) -> BasisPair {
    let (nh, nu) = hu.shape();
    debug_assert!(nh <= nu, "basis_decompose expects a wide matrix");
    if nh == 0 {
        return BasisPair { y: DMatrix::zeros(nu, 0), z: DMatrix::identity(nu, nu), rank: 0 };
    }

    // Both methods produce an upper-trapezoidal R (or U) together with a
    // column permutation ordering pivots by magnitude. The permutation is
    // recovered by replaying the recorded column swaps on an index row.
    let extract = |seq: &nalgebra::PermutationSequence<Dyn>| -> Vec<usize> {
        let mut idx = nalgebra::RowDVector::<usize>::from_fn(nu, |_, j| j);
        seq.permute_columns(&mut idx);
        idx.iter().copied().collect()
    };
    let (r, col_perm): (DMatrix<f64>, Vec<usize>) = match method {
        BasisMethod::LuFullPivot => {
            let lu = hu.clone().full_piv_lu();
            let perm = extract(lu.q());
            (lu.u(), perm)
        }
        BasisMethod::QrColPivot => {
            let qr = hu.clone().col_piv_qr();
            let perm = extract(qr.p());
            (qr.r(), perm)
        }
    };

    let dmax = (0..nh).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    let tol = RANK_TOL * dmax.max(f64::MIN_POSITIVE);
    let rank = (0..nh).take_while(|&i| r[(i, i)].abs() > tol).count();

    // In permuted coordinates the nullspace is [-R11^-1 R12; I].
    let nz = nu - rank;
    let r11 = r.view((0, 0), (rank, rank));
    let r12 = r.view((0, rank), (rank, nz));
    let mut w = r12.clone_owned();
    // Back substitution on the upper-triangular R11.
    for j in 0..nz {
        for i in (0..rank).rev() {
            let mut s = w[(i, j)];
            for k in (i + 1)..rank {
                s -= r11[(i, k)] * w[(k, j)];
            }
            w[(i, j)] = s / r11[(i, i)];
        }
    }

    let mut y = DMatrix::zeros(nu, rank);
    for c in 0..rank {
        y[(col_perm[c], c)] = 1.0;
    }
    let mut z = DMatrix::zeros(nu, nz);
    for c in 0..nz {
        for i in 0..rank {
            z[(col_perm[i], c)] = -w[(i, c)];
        }
        z[(col_perm[rank + c], c)] = 1.0;
    }
    BasisPair { y, z, rank }
}

/// Moore-Penrose pseudoinverse with the crate-wide relative rank threshold.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone()
        .pseudo_inverse(RANK_TOL * a.amax().max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DMatrix::zeros(a.ncols(), a.nrows()))
}

/// Counts of SPD decompositions performed during a backward pass, by
/// dimension. Lets tests assert the serial-stage complexity contract.
#[derive(Debug, Default, Clone)]
pub struct DecompStats {
    pub spd_dims: Vec<usize>,
}

impl DecompStats {
    pub fn record(&mut self, dim: usize) {
        self.spd_dims.push(dim);
    }

    pub fn clear(&mut self) {
        self.spd_dims.clear();
    }
}
