//! Dense complex Hermitian linear algebra and the state functionals every
//! other module consumes: tensor products, partial traces, fidelity, trace
//! distance, relative entropy and fractional matrix powers.
//!
//! Eigendecomposition is the single primitive behind square roots, fractional
//! powers and logarithms. Negative eigenvalues above `-EIG_NEG_TOL` are
//! clamped to zero; anything more negative is an error.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, the workhorse type of the whole crate.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex vector (kets).
pub type CVector = DVector<Complex64>;

/// Maximum dimension allowed for tensor products (and n-copy constructions).
pub const DIM_CAP: usize = 4096;
/// Hermiticity tolerance for state validation.
pub const HERM_TOL: f64 = 1e-10;
/// Tolerance on `Re(tr) - 1` for state validation.
pub const TRACE_TOL: f64 = 1e-10;
/// Tolerance on `Im(tr)` for state validation.
pub const TRACE_IMAG_TOL: f64 = 1e-12;
/// Eigenvalues above this negative floor are clamped to zero.
pub const EIG_NEG_TOL: f64 = 1e-10;
/// Eigenvalues at or below this threshold count as kernel (support cutoff).
pub const SUPPORT_TOL: f64 = 1e-12;

/// A density matrix: Hermitian, unit trace, positive semi-definite within
/// the crate tolerances. Construction validates all three.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
    dim: usize,
}

impl DensityMatrix {
    /// Validate and wrap a matrix as a quantum state.
    ///
    /// The stored matrix is the Hermitian part of the input, which removes
    /// accumulated anti-Hermitian rounding noise but changes nothing within
    /// the admission tolerance.
    pub fn new(mat: CMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimMismatch(format!(
                "density matrix must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let dim = mat.nrows();
        let herm_dev = hermiticity_deviation(&mat);
        if herm_dev > HERM_TOL {
            return Err(Error::NotHermitian(herm_dev));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL {
            return Err(Error::BadTrace(tr.re));
        }
        if tr.im.abs() > TRACE_IMAG_TOL {
            return Err(Error::BadTrace(tr.im));
        }
        let herm = hermitian_part(&mat);
        let min_eig = hermitian_eigenvalues(&herm).min();
        if min_eig < -EIG_NEG_TOL {
            return Err(Error::NotPsd(min_eig));
        }
        Ok(Self { mat: herm, dim })
    }

    /// Wrap a matrix whose positivity holds structurally (a compression or
    /// Kraus image of a valid state): hermitize and renormalize the trace,
    /// skipping the O(d^3) eigenvalue admission check.
    pub(crate) fn new_trusted(mat: CMatrix) -> Self {
        let dim = mat.nrows();
        let mut herm = hermitian_part(&mat);
        let tr = herm.trace().re;
        if (tr - 1.0).abs() > 1e-15 && tr > 0.0 {
            herm /= Complex64::new(tr, 0.0);
        }
        Self { mat: herm, dim }
    }

    /// Rank-one state `|psi><psi|` from a ket, normalizing it first.
    pub fn from_pure(ket: &CVector) -> Result<Self> {
        let norm = ket.norm();
        if norm < 1e-300 {
            return Err(Error::Domain("cannot normalize the zero vector".into()));
        }
        let psi = ket / Complex64::new(norm, 0.0);
        let mat = &psi * psi.adjoint();
        Self::new(mat)
    }

    /// The maximally mixed state `I/d`.
    pub fn maximally_mixed(d: usize) -> Self {
        let mat = CMatrix::identity(d, d) * Complex64::new(1.0 / d as f64, 0.0);
        Self { mat, dim: d }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }
}

/// Max entrywise deviation between `m` and its conjugate transpose.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `(m + m†)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigenvalues of a Hermitian matrix, ascending order not guaranteed.
pub fn hermitian_eigenvalues(m: &CMatrix) -> DVector<f64> {
    m.clone().symmetric_eigen().eigenvalues
}

/// Eigendecomposition of a Hermitian matrix: `(eigenvalues, eigenvectors)`
/// with eigenvectors as columns. This is the one primitive behind all
/// spectral functions in the crate.
pub fn hermitian_eigen(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let se = hermitian_part(m).symmetric_eigen();
    (se.eigenvalues, se.eigenvectors)
}

/// Kronecker product with the crate dimension cap.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    tensor_with_cap(a, b, DIM_CAP)
}

/// Kronecker product; errors when the product of row dimensions exceeds `cap`.
pub fn tensor_with_cap(a: &CMatrix, b: &CMatrix, cap: usize) -> Result<CMatrix> {
    let rows = a.nrows().checked_mul(b.nrows());
    let cols = a.ncols().checked_mul(b.ncols());
    match (rows, cols) {
        (Some(r), Some(c)) if r.max(c) <= cap => Ok(a.kronecker(b)),
        (Some(r), Some(c)) => Err(Error::DimensionLimit { got: r.max(c), cap }),
        _ => Err(Error::DimensionLimit {
            got: usize::MAX,
            cap,
        }),
    }
}

/// n-fold tensor power of a state, subject to the dimension cap.
pub fn tensor_power(rho: &DensityMatrix, n: usize) -> Result<DensityMatrix> {
    if n == 0 {
        return Err(Error::Domain("tensor power needs n >= 1".into()));
    }
    let mut out = rho.matrix().clone();
    for _ in 1..n {
        out = tensor(&out, rho.matrix())?;
    }
    Ok(DensityMatrix {
        dim: out.nrows(),
        mat: out,
    })
}

/// Partial trace over the subsystems *not* listed in `keep`.
///
/// `dims` are the subsystem dimensions in tensor order; their product must
/// equal the state dimension. Kept subsystems stay in their original order.
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let total: usize = dims.iter().product();
    if total != rho.dim() {
        return Err(Error::DimMismatch(format!(
            "subsystem dims product {} != state dim {}",
            total,
            rho.dim()
        )));
    }
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::DimMismatch("keep index out of range".into()));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();

    let kdim: usize = keep.iter().map(|&i| dims[i]).product();
    let tdim: usize = traced.iter().map(|&i| dims[i]).product();

    // Row-major strides per subsystem.
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }

    let offset = |subsys: &[usize], multi: usize| -> usize {
        let mut rem = multi;
        let mut off = 0;
        for &s in subsys.iter().rev() {
            off += (rem % dims[s]) * strides[s];
            rem /= dims[s];
        }
        off
    };

    let m = rho.matrix();
    let mut out = CMatrix::zeros(kdim, kdim);
    for ki in 0..kdim {
        let oi = offset(&keep, ki);
        for kj in 0..kdim {
            let oj = offset(&keep, kj);
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..tdim {
                let ot = offset(&traced, t);
                acc += m[(oi + ot, oj + ot)];
            }
            out[(ki, kj)] = acc;
        }
    }
    DensityMatrix::new(out)
}

fn check_same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(format!(
            "states have dims {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Principal square root of a PSD Hermitian matrix via eigendecomposition.
pub fn matrix_sqrt(m: &CMatrix) -> Result<CMatrix> {
    spectral_map(m, |x| x.sqrt())
}

/// Apply `f` to the (clamped) eigenvalues of a PSD Hermitian matrix.
fn spectral_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let (vals, vecs) = hermitian_eigen(m);
    let min = vals.min();
    if min < -EIG_NEG_TOL {
        return Err(Error::NotPsd(min));
    }
    let d = m.nrows();
    let mut scaled = vecs.clone();
    for j in 0..d {
        let v = f(vals[j].max(0.0));
        for i in 0..d {
            scaled[(i, j)] *= v;
        }
    }
    Ok(&scaled * vecs.adjoint())
}

/// Bures fidelity `F(rho, sigma) = tr sqrt(sqrt(sigma) rho sqrt(sigma))`,
/// computed as the sum of singular values of `sqrt(rho) sqrt(sigma)`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_dim(rho, sigma)?;
    let sr = matrix_sqrt(rho.matrix())?;
    let ss = matrix_sqrt(sigma.matrix())?;
    let f: f64 = (sr * ss).singular_values().iter().sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Trace distance `D = ||rho - sigma||_1 / 2` via eigenvalues of the
/// Hermitian difference.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_dim(rho, sigma)?;
    let diff = rho.matrix() - sigma.matrix();
    let d: f64 = hermitian_eigenvalues(&hermitian_part(&diff))
        .iter()
        .map(|x| x.abs())
        .sum();
    Ok((0.5 * d).clamp(0.0, 1.0))
}

/// One-norm of the difference of two raw Hermitian matrices.
pub fn trace_norm_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = hermitian_part(&(a - b));
    hermitian_eigenvalues(&diff).iter().map(|x| x.abs()).sum()
}

/// Quantum relative entropy `S(rho || sigma)` in bits.
///
/// Returns `+inf` when the support of `rho` is not contained in the support
/// of `sigma` (kernel detection threshold [`SUPPORT_TOL`]).
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_dim(rho, sigma)?;
    let (lam, u) = hermitian_eigen(rho.matrix());
    let (nu, v) = hermitian_eigen(sigma.matrix());
    let d = rho.dim();
    let overlap = u.adjoint() * v; // overlap[(i,j)] = <u_i|v_j>

    let mut kernel_mass = 0.0;
    let mut s = 0.0;
    for i in 0..d {
        let li = lam[i].max(0.0);
        if li <= SUPPORT_TOL {
            continue;
        }
        s += li * li.log2();
        for j in 0..d {
            let w = overlap[(i, j)].norm_sqr();
            let nj = nu[j].max(0.0);
            if nj <= SUPPORT_TOL {
                kernel_mass += li * w;
            } else {
                s -= li * w * nj.log2();
            }
        }
    }
    if kernel_mass > 1e-10 {
        return Ok(f64::INFINITY);
    }
    Ok(s.max(0.0))
}

/// Fractional power `rho^s` for `s` in `[0, 1]`, in the eigenbasis.
///
/// `0^0` is treated as 0, so `s = 0` yields the projector onto the support.
pub fn matrix_fractional_power(rho: &DensityMatrix, s: f64) -> Result<CMatrix> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("power s={s} outside [0, 1]")));
    }
    spectral_map(rho.matrix(), |x| {
        if x <= SUPPORT_TOL {
            0.0
        } else if s == 0.0 {
            1.0
        } else {
            x.powf(s)
        }
    })
}

/// Convenience: complex scalar from a real.
pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(entries: &[f64]) -> DensityMatrix {
        let d = entries.len();
        let mut m = CMatrix::zeros(d, d);
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = re(x);
        }
        DensityMatrix::new(m).unwrap()
    }

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)])
    }

    #[test]
    fn tensor_identities() {
        let i2 = CMatrix::identity(2, 2);
        let t = tensor(&i2, &i2).unwrap();
        assert_eq!(t, CMatrix::identity(4, 4));

        let a = diag(&[1.0, 0.0]);
        let b = diag(&[0.0, 1.0]);
        let t = tensor(a.matrix(), b.matrix()).unwrap();
        let mut expect = CMatrix::zeros(4, 4);
        expect[(1, 1)] = re(1.0);
        assert_eq!(t, expect);
    }

    #[test]
    fn tensor_squared_pauli_is_identity() {
        // (sx (x) sx)^2 computed by direct 4x4 multiplication.
        let xx = tensor(&pauli_x(), &pauli_x()).unwrap();
        let sq = &xx * &xx;
        assert!((&sq - CMatrix::identity(4, 4)).norm() < 1e-14);
    }

    #[test]
    fn tensor_cap_enforced() {
        let big = CMatrix::identity(100, 100);
        let err = tensor(&big, &big).unwrap_err();
        assert!(matches!(err, Error::DimensionLimit { .. }));
    }

    #[test]
    fn partial_trace_bell_is_maximally_mixed() {
        let mut phi = CVector::zeros(4);
        phi[0] = re(1.0);
        phi[3] = re(1.0);
        let rho = DensityMatrix::from_pure(&phi).unwrap();
        let red = partial_trace(&rho, &[2, 2], &[0]).unwrap();
        assert!((red.matrix() - DensityMatrix::maximally_mixed(2).matrix()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_factorizes_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = sample::random_density(3, 3, &mut rng);
        let b = sample::random_density(2, 2, &mut rng);
        let joint = DensityMatrix::new(tensor(a.matrix(), b.matrix()).unwrap()).unwrap();
        let red = partial_trace(&joint, &[3, 2], &[0]).unwrap();
        assert!((red.matrix() - a.matrix()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_matches_index_summation() {
        // Brute-force 4-index oracle on a random 2-qubit state.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = sample::random_density(4, 4, &mut rng);
        let m = rho.matrix();
        let mut oracle = CMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                for t in 0..2 {
                    oracle[(i, j)] += m[(2 * i + t, 2 * j + t)];
                }
            }
        }
        let red = partial_trace(&rho, &[2, 2], &[0]).unwrap();
        assert!((red.matrix() - &oracle).norm() < 1e-14);
        // Trace preserved.
        assert_relative_eq!(red.matrix().trace().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_shape_errors() {
        let rho = DensityMatrix::maximally_mixed(4);
        assert!(matches!(
            partial_trace(&rho, &[2, 3], &[0]),
            Err(Error::DimMismatch(_))
        ));
        assert!(matches!(
            partial_trace(&rho, &[2, 2], &[5]),
            Err(Error::DimMismatch(_))
        ));
    }

    #[test]
    fn fidelity_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = sample::random_density(3, 2, &mut rng);
        assert_relative_eq!(fidelity(&rho, &rho).unwrap(), 1.0, epsilon = 1e-10);

        let zero = diag(&[1.0, 0.0]);
        let one = diag(&[0.0, 1.0]);
        assert!(fidelity(&zero, &one).unwrap() < 1e-12);
    }

    #[test]
    fn fidelity_commuting_closed_form() {
        // diag(p, 1-p) vs diag(q, 1-q) -> sqrt(pq) + sqrt((1-p)(1-q)).
        for (p, q) in [(0.3, 0.6), (0.1, 0.9), (0.5, 0.25)] {
            let f = fidelity(&diag(&[p, 1.0 - p]), &diag(&[q, 1.0 - q])).unwrap();
            let expect = (p * q).sqrt() + ((1.0 - p) * (1.0 - q)).sqrt();
            assert_relative_eq!(f, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn fidelity_equals_nested_sqrt_definition() {
        // The singular-value form must agree with tr sqrt(sqrt(sigma) rho sqrt(sigma)).
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let rho = sample::random_density(3, 3, &mut rng);
            let sigma = sample::random_density(3, 2, &mut rng);
            let ss = matrix_sqrt(sigma.matrix()).unwrap();
            let inner = &ss * rho.matrix() * &ss;
            let nested: f64 = hermitian_eigenvalues(&hermitian_part(&inner))
                .iter()
                .map(|x| x.max(0.0).sqrt())
                .sum();
            let f = fidelity(&rho, &sigma).unwrap();
            // The nested form square-roots near-zero eigenvalues of the
            // rank-deficient product, so it only carries ~sqrt(eps) digits.
            assert_relative_eq!(f, nested, epsilon = 1e-7);
        }
    }

    #[test]
    fn trace_distance_cases() {
        let zero = diag(&[1.0, 0.0]);
        let one = diag(&[0.0, 1.0]);
        assert_relative_eq!(trace_distance(&zero, &one).unwrap(), 1.0, epsilon = 1e-12);
        assert!(trace_distance(&zero, &zero).unwrap() < 1e-14);
    }

    #[test]
    fn relative_entropy_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = sample::random_density(3, 3, &mut rng);
        assert!(relative_entropy(&rho, &rho).unwrap() < 1e-9);

        // Classical KL oracle: diag(1,0) vs diag(1/2,1/2) -> 1 bit.
        let pure = diag(&[1.0, 0.0]);
        let mixed = diag(&[0.5, 0.5]);
        assert_relative_eq!(
            relative_entropy(&pure, &mixed).unwrap(),
            1.0,
            epsilon = 1e-10
        );

        // Support violation.
        assert!(relative_entropy(&mixed, &pure).unwrap().is_infinite());
    }

    #[test]
    fn fractional_power_cases() {
        let rho = diag(&[0.25, 0.75]);
        let half = matrix_fractional_power(&rho, 0.5).unwrap();
        assert_relative_eq!(half[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_relative_eq!(half[(1, 1)].re, 0.75f64.sqrt(), epsilon = 1e-12);

        let one = matrix_fractional_power(&rho, 1.0).unwrap();
        assert!((one - rho.matrix()).norm() < 1e-12);

        // s = 0 gives the support projector.
        let singular = diag(&[1.0, 0.0]);
        let proj = matrix_fractional_power(&singular, 0.0).unwrap();
        assert_relative_eq!(proj[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert!(proj[(1, 1)].norm() < 1e-12);

        assert!(matrix_fractional_power(&rho, 1.5).is_err());
    }

    #[test]
    fn density_matrix_rejects_bad_inputs() {
        let mut nonherm = CMatrix::zeros(2, 2);
        nonherm[(0, 0)] = re(1.0);
        nonherm[(0, 1)] = re(0.5);
        assert!(matches!(
            DensityMatrix::new(nonherm),
            Err(Error::NotHermitian(_))
        ));

        let bad_trace = CMatrix::identity(2, 2);
        assert!(matches!(
            DensityMatrix::new(bad_trace),
            Err(Error::BadTrace(_))
        ));

        let mut neg = CMatrix::zeros(2, 2);
        neg[(0, 0)] = re(1.5);
        neg[(1, 1)] = re(-0.5);
        assert!(matches!(DensityMatrix::new(neg), Err(Error::NotPsd(_))));
    }

    #[test]
    fn fuchs_van_de_graaf_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for d in [2usize, 3] {
            for _ in 0..100 {
                let rho = sample::random_density(d, d, &mut rng);
                let sigma = sample::random_density(d, d, &mut rng);
                let f = fidelity(&rho, &sigma).unwrap();
                let dist = trace_distance(&rho, &sigma).unwrap();
                assert!(1.0 - f <= dist + 1e-10);
                assert!(dist <= (1.0 - f * f).sqrt() + 1e-10);
            }
        }
    }

    #[test]
    fn fidelity_multiplicative_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let rho = sample::random_density(2, 2, &mut rng);
            let sigma = sample::random_density(2, 2, &mut rng);
            let rho2 = sample::random_density(2, 2, &mut rng);
            let sigma2 = sample::random_density(2, 2, &mut rng);

            let joint_r = DensityMatrix::new(tensor(rho.matrix(), rho2.matrix()).unwrap()).unwrap();
            let joint_s =
                DensityMatrix::new(tensor(sigma.matrix(), sigma2.matrix()).unwrap()).unwrap();

            let f_joint = fidelity(&joint_r, &joint_s).unwrap();
            let f_prod = fidelity(&rho, &sigma).unwrap() * fidelity(&rho2, &sigma2).unwrap();
            assert_relative_eq!(f_joint, f_prod, epsilon = 1e-10);

            // Monotonicity under partial trace.
            let red_r = partial_trace(&joint_r, &[2, 2], &[0]).unwrap();
            let red_s = partial_trace(&joint_s, &[2, 2], &[0]).unwrap();
            assert!(fidelity(&red_r, &red_s).unwrap() >= f_joint - 1e-10);
        }
    }
}
