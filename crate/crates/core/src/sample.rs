//! Seeded random generators for states, unitaries and CPTP maps.
//!
//! Everything routes through a caller-supplied RNG so that fuzz runs and
//! tests are reproducible from a single root seed.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{CMatrix, CVector, DensityMatrix};

/// Complex matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// Haar-distributed unitary via QR of a Ginibre matrix with phase fixing.
pub fn random_unitary(d: usize, rng: &mut impl Rng) -> CMatrix {
    let g = ginibre(d, d, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    // Fix the phase ambiguity so the distribution is Haar.
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-type isometry: the first `cols` columns of a random unitary on
/// `rows` dimensions (`rows >= cols`).
pub fn random_isometry(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let u = random_unitary(rows, rng);
    u.columns(0, cols).into_owned()
}

/// Random pure state on `d` dimensions.
pub fn random_pure(d: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = ginibre(d, 1, rng);
    let ket = CVector::from_column_slice(g.as_slice());
    DensityMatrix::from_pure(&ket).expect("random ket is normalizable")
}

/// Random rank-`rank` density matrix from the Ginibre ensemble.
pub fn random_density(d: usize, rank: usize, rng: &mut impl Rng) -> DensityMatrix {
    let rank = rank.clamp(1, d);
    let g = ginibre(d, rank, rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m / Complex64::new(tr, 0.0)).expect("Ginibre state is valid")
}

/// Random CPTP map on `d` dimensions as a Kraus list, drawn by Stinespring
/// dilation with environment dimension `env_dim`.
pub fn random_cptp_kraus(d: usize, env_dim: usize, rng: &mut impl Rng) -> Vec<CMatrix> {
    let v = random_isometry(d * env_dim, d, rng);
    // Rows of the isometry grouped by environment index: K_e[i, j] = V[(i*env + e), j]
    // with the environment as the slower index here so each K_e is d x d.
    (0..env_dim)
        .map(|e| DMatrix::from_fn(d, d, |i, j| v[(i * env_dim + e, j)]))
        .collect()
}

/// Deterministic unitary whose first column is `target` (normalized):
/// the remaining columns complete it by Gram-Schmidt over the standard
/// basis, skipping vectors that become linearly dependent.
pub fn unitary_with_first_column(target: &CVector) -> CMatrix {
    let d = target.len();
    let mut cols: Vec<CVector> = Vec::with_capacity(d);
    cols.push(target / Complex64::new(target.norm(), 0.0));
    let mut basis_idx = 0;
    while cols.len() < d && basis_idx < d {
        let mut v = CVector::zeros(d);
        v[basis_idx] = Complex64::new(1.0, 0.0);
        basis_idx += 1;
        for c in &cols {
            let overlap = (c.adjoint() * &v)[(0, 0)];
            v -= c * overlap;
        }
        let norm = v.norm();
        if norm > 1e-9 {
            cols.push(v / Complex64::new(norm, 0.0));
        }
    }
    assert_eq!(cols.len(), d, "Gram-Schmidt completion failed");
    CMatrix::from_fn(d, d, |i, j| cols[j][i])
}

/// Probability vector of length `len` from normalized uniform draws,
/// bounded away from zero so closed forms with `1/p_k` stay finite.
pub fn random_distribution(len: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut p: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = p.iter().sum();
    for x in &mut p {
        *x /= s;
    }
    p
}
