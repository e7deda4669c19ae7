//! Eigenstructure extraction for diagonalizable state matrices.
//!
//! For a diagonalizable `A` with eigenpairs `(lambda_i, v_i)`, the input
//! vector decomposes as `B = sum_i b_i v_i`, and every Markov parameter has
//! the modal form
//!
//! ```text
//! C A^j B = sum_i lambda_i^j b_i (C v_i)
//! ```
//!
//! which is what the eigenbasis evaluation of the variance bound consumes.
//! Complex-conjugate eigenvalue pairs are fully supported; reconstructed
//! real quantities must have negligible imaginary residue.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lti::DiscreteLtiSystem;

/// Default ceiling on the eigenvector-matrix condition number, above which
/// `A` is reported as not reliably diagonalizable.
pub const DEFAULT_COND_THRESHOLD: f64 = 1e12;

/// Relative residual tolerance for each eigenpair and for the modal
/// reconstruction of `B`.
const RESIDUAL_TOL: f64 = 1e-8;

/// Eigenvalues, eigenvectors, and modal coefficients of a system's state
/// matrix, sorted by descending eigenvalue modulus.
#[derive(Debug, Clone)]
pub struct EigenStructure {
    lambdas: Vec<Complex<f64>>,
    v: DMatrix<Complex<f64>>,
    b_coeffs: Vec<Complex<f64>>,
    cv: Vec<Complex<f64>>,
    cond_v: f64,
}

impl EigenStructure {
    /// Eigenvalues `lambda_i`, sorted by `|lambda_i| >= |lambda_{i+1}|`
    /// (ties broken by descending real part, then descending imaginary
    /// part, for a deterministic order).
    pub fn lambdas(&self) -> &[Complex<f64>] {
        &self.lambdas
    }

    /// Eigenvector matrix `V` whose column `i` is the unit-norm `v_i`,
    /// phase-normalized so its largest-modulus component is real positive.
    pub fn eigenvector_matrix(&self) -> &DMatrix<Complex<f64>> {
        &self.v
    }

    /// Modal input coefficients `b_i` solving `V b = B`
    /// (equivalently `B = sum_i b_i v_i`).
    pub fn b_coeffs(&self) -> &[Complex<f64>] {
        &self.b_coeffs
    }

    /// Modal output gains `C v_i`.
    pub fn cv(&self) -> &[Complex<f64>] {
        &self.cv
    }

    /// Condition number of the eigenvector matrix (largest over smallest
    /// singular value).
    pub fn cond_v(&self) -> f64 {
        self.cond_v
    }

    /// State dimension.
    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// Modal reconstruction of the `j`-th Markov parameter:
    /// `sum_i lambda_i^j b_i (C v_i)`, returned as a complex number whose
    /// imaginary part is a numerical residue.
    pub fn markov_parameter(&self, j: usize) -> Complex<f64> {
        let mut acc = Complex::new(0.0, 0.0);
        for i in 0..self.dim() {
            acc += self.lambdas[i].powu(j as u32) * self.b_coeffs[i] * self.cv[i];
        }
        acc
    }
}

/// Computes the eigenstructure of `sys`'s state matrix with the default
/// conditioning threshold of [`DEFAULT_COND_THRESHOLD`].
pub fn eigen_structure(sys: &DiscreteLtiSystem) -> Result<EigenStructure> {
    eigen_structure_with(sys, DEFAULT_COND_THRESHOLD)
}

/// Computes the eigenstructure of `sys`'s state matrix, rejecting matrices
/// whose eigenvector condition number exceeds `cond_threshold` (i.e.
/// defective or numerically near-defective `A`).
pub fn eigen_structure_with(
    sys: &DiscreteLtiSystem,
    cond_threshold: f64,
) -> Result<EigenStructure> {
    if !(cond_threshold > 0.0) {
        return Err(Error::InvalidInput(format!(
            "condition-number threshold must be positive, got {cond_threshold}"
        )));
    }
    let n = sys.dim();
    let a_real = sys.a();
    let a = a_real.map(|v| Complex::new(v, 0.0));

    // Eigenvalues via the real Schur decomposition, then a deterministic
    // descending-modulus sort.
    let mut lambdas: Vec<Complex<f64>> = a_real
        .clone()
        .complex_eigenvalues()
        .iter()
        .copied()
        .collect();
    lambdas.sort_by(|x, y| {
        (y.norm(), y.re, y.im)
            .partial_cmp(&(x.norm(), x.re, x.im))
            .expect("eigenvalues of a finite matrix are finite")
    });

    let scale = lambdas.iter().map(|l| l.norm()).fold(1.0_f64, f64::max);
    let cluster_tol = 1e-8 * scale;
    let a_norm = a_real.norm();

    // Group (numerically) repeated eigenvalues so each cluster's eigenspace
    // is extracted as a whole; for a diagonalizable matrix the null space of
    // A - lambda I has the cluster's full dimension.
    let mut v = DMatrix::<Complex<f64>>::zeros(n, n);
    let mut col = 0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (lambdas[end] - lambdas[start]).norm() <= cluster_tol {
            end += 1;
        }
        let mult = end - start;
        let lambda =
            lambdas[start..end].iter().sum::<Complex<f64>>() / Complex::new(mult as f64, 0.0);

        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] -= lambda;
        }
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
        // Indices of the `mult` smallest singular values.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            svd.singular_values[i]
                .partial_cmp(&svd.singular_values[j])
                .expect("singular values are finite")
        });
        for &row in order.iter().take(mult) {
            // Null-space vector: conjugated row of V^H.
            let mut vec = DVector::<Complex<f64>>::from_fn(n, |r, _| v_t[(row, r)].conj());
            phase_normalize(&mut vec);
            let residual = (&a * &vec - &vec * lambda).norm();
            if residual > RESIDUAL_TOL * (1.0 + a_norm) {
                return Err(Error::NumericDomain(format!(
                    "state matrix is not diagonalizable to working precision: \
                     eigenpair residual {residual:.3e} for lambda = {lambda}"
                )));
            }
            v.set_column(col, &vec);
            col += 1;
        }
        start = end;
    }
    debug_assert_eq!(col, n);

    // Conditioning of the eigenvector basis.
    let sv = v.clone().svd(false, false).singular_values;
    let s_max = sv.iter().fold(0.0_f64, |m, &s| m.max(s));
    let s_min = sv.iter().fold(f64::INFINITY, |m, &s| m.min(s));
    let cond_v = if s_min > 0.0 {
        s_max / s_min
    } else {
        f64::INFINITY
    };
    if !(cond_v <= cond_threshold) {
        return Err(Error::NumericDomain(format!(
            "eigenvector matrix condition number {cond_v:.3e} exceeds {cond_threshold:.3e}; \
             the state matrix is not reliably diagonalizable"
        )));
    }

    // Modal coefficients: solve V b = B, then verify the reconstruction.
    let b = sys.b().map(|x| Complex::new(x, 0.0));
    let b_coeffs = v.clone().lu().solve(&b).ok_or_else(|| {
        Error::NumericDomain(
            "eigenvector matrix is numerically singular; cannot solve V b = B".into(),
        )
    })?;
    let recon_err = (&v * &b_coeffs - &b).norm();
    if recon_err > RESIDUAL_TOL * (1.0 + b.norm()) {
        return Err(Error::NumericDomain(format!(
            "modal reconstruction of B failed: residual {recon_err:.3e}"
        )));
    }

    let c = sys.c();
    let cv: Vec<Complex<f64>> = (0..n)
        .map(|i| {
            let mut acc = Complex::new(0.0, 0.0);
            for r in 0..n {
                acc += Complex::new(c[r], 0.0) * v[(r, i)];
            }
            acc
        })
        .collect();

    Ok(EigenStructure {
        lambdas,
        v,
        b_coeffs: b_coeffs.iter().copied().collect(),
        cv,
        cond_v,
    })
}

/// Scales `vec` to unit norm with its largest-modulus component made real
/// positive, giving every eigenvector a deterministic representative.
fn phase_normalize(vec: &mut DVector<Complex<f64>>) {
    let mut best = 0;
    let mut best_norm = 0.0;
    for (i, z) in vec.iter().enumerate() {
        let nz = z.norm();
        if nz > best_norm {
            best_norm = nz;
            best = i;
        }
    }
    if best_norm == 0.0 {
        return;
    }
    let phase = vec[best] / Complex::new(best_norm, 0.0);
    let rotation = phase.conj();
    for z in vec.iter_mut() {
        *z *= rotation;
    }
    let norm = vec.norm();
    for z in vec.iter_mut() {
        *z /= Complex::new(norm, 0.0);
    }
}
