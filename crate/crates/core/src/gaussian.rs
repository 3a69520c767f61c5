//! Two-mode Gaussian-state calculus for bosonic channels: TMSV resources,
//! finite-energy Choi-approximating states, the general Gaussian fidelity,
//! and a Fock-space truncation used as an independent cross-formalism oracle.
//!
//! Conventions, fixed globally: vacuum quadrature variance 1/2, quadrature
//! ordering `q1, p1, q2, p2`, all states zero-mean.

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, DensityMatrix};
use crate::opt::grid_golden_min;

/// 4x4 real covariance matrix of a two-mode state.
pub type CovMatrix = Matrix4<f64>;

/// Symmetry tolerance for covariance matrices.
pub const CM_SYM_TOL: f64 = 1e-12;
/// Uncertainty-relation tolerance: min eigenvalue of `V + i Omega/2`.
pub const BONA_FIDE_TOL: f64 = 1e-10;
/// Above this truncation deficit `fock_truncate` refuses to return a state.
pub const TRUNCATION_LIMIT: f64 = 1e-3;

/// TMSV quadrature variance; 1/2 is vacuum, larger mu means more squeezing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezingParameter(f64);

impl SqueezingParameter {
    pub fn new(mu: f64) -> Result<Self> {
        if !mu.is_finite() || mu < 0.5 {
            return Err(Error::Domain(format!("mu={mu} must be >= 1/2")));
        }
        Ok(Self(mu))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Bosonic Gaussian channel parameters; exactly the fields of the declared
/// family are meaningful.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GaussianChannelParams {
    /// `0 <= eta < 1`, environment with `nbar` mean thermal photons.
    ThermalLoss { eta: f64, nbar: f64 },
    /// `eta > 1`, environment with `nbar` mean thermal photons.
    Amplifier { eta: f64, nbar: f64 },
    /// Unit gain with added quadrature noise of variance `w`.
    AdditiveNoise { w: f64 },
}

impl GaussianChannelParams {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GaussianChannelParams::ThermalLoss { eta, nbar } => {
                if !(0.0..1.0).contains(&eta) {
                    return Err(Error::Domain(format!(
                        "thermal loss needs 0 <= eta < 1, got {eta}"
                    )));
                }
                if nbar < 0.0 {
                    return Err(Error::Domain(format!("nbar={nbar} must be >= 0")));
                }
            }
            GaussianChannelParams::Amplifier { eta, nbar } => {
                if eta <= 1.0 {
                    return Err(Error::Domain(format!("amplifier needs eta > 1, got {eta}")));
                }
                if nbar < 0.0 {
                    return Err(Error::Domain(format!("nbar={nbar} must be >= 0")));
                }
            }
            GaussianChannelParams::AdditiveNoise { w } => {
                if w < 0.0 {
                    return Err(Error::Domain(format!("w={w} must be >= 0")));
                }
            }
        }
        Ok(())
    }

    /// The estimated noise parameter (`nbar` or `w`).
    pub fn theta(&self) -> f64 {
        match *self {
            GaussianChannelParams::ThermalLoss { nbar, .. } => nbar,
            GaussianChannelParams::Amplifier { nbar, .. } => nbar,
            GaussianChannelParams::AdditiveNoise { w } => w,
        }
    }

    /// Same family, different noise value.
    pub fn with_theta(&self, theta: f64) -> Self {
        match *self {
            GaussianChannelParams::ThermalLoss { eta, .. } => {
                GaussianChannelParams::ThermalLoss { eta, nbar: theta }
            }
            GaussianChannelParams::Amplifier { eta, .. } => {
                GaussianChannelParams::Amplifier { eta, nbar: theta }
            }
            GaussianChannelParams::AdditiveNoise { .. } => {
                GaussianChannelParams::AdditiveNoise { w: theta }
            }
        }
    }
}

/// Zero-mean two-mode Gaussian state carried as its covariance matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    cm: CovMatrix,
}

impl GaussianState {
    /// Validate symmetry and the bona fide uncertainty relation.
    pub fn new(cm: CovMatrix) -> Result<Self> {
        let sym_dev = (cm - cm.transpose()).abs().max();
        if sym_dev > CM_SYM_TOL {
            return Err(Error::Domain(format!(
                "covariance matrix asymmetric by {sym_dev:.3e}"
            )));
        }
        // V + i Omega / 2 must be PSD.
        let mut h = CMatrix::zeros(4, 4);
        let om = omega();
        for i in 0..4 {
            for j in 0..4 {
                h[(i, j)] = Complex64::new(cm[(i, j)], 0.5 * om[(i, j)]);
            }
        }
        let min_eig = h.symmetric_eigen().eigenvalues.min();
        if min_eig < -BONA_FIDE_TOL {
            return Err(Error::NotBonaFide(min_eig));
        }
        Ok(Self { cm })
    }

    pub fn cm(&self) -> &CovMatrix {
        &self.cm
    }

    /// Covariance matrix as a row-major array (the export format).
    pub fn cm_row_major(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for i in 0..4 {
            for j in 0..4 {
                out[4 * i + j] = self.cm[(i, j)];
            }
        }
        out
    }
}

/// Standard symplectic form for ordering `q1, p1, q2, p2`.
fn omega() -> Matrix4<f64> {
    let mut om = Matrix4::zeros();
    for m in 0..2 {
        om[(2 * m, 2 * m + 1)] = 1.0;
        om[(2 * m + 1, 2 * m)] = -1.0;
    }
    om
}

/// Two-mode squeezed vacuum: diagonal blocks `mu I`, off-diagonal
/// `diag(c, -c)` with `c = sqrt(mu^2 - 1/4)`.
pub fn tmsv(mu: SqueezingParameter) -> GaussianState {
    let m = mu.value();
    let c = (m * m - 0.25).sqrt();
    let mut cm = Matrix4::zeros();
    cm[(0, 0)] = m;
    cm[(1, 1)] = m;
    cm[(2, 2)] = m;
    cm[(3, 3)] = m;
    cm[(0, 2)] = c;
    cm[(2, 0)] = c;
    cm[(1, 3)] = -c;
    cm[(3, 1)] = -c;
    GaussianState { cm }
}

/// Finite-energy Choi-approximating state: one TMSV arm kept, the other sent
/// through the channel. For gain channels the output block is
/// `eta*mu + |1-eta|(nbar + 1/2)` with cross terms `sqrt(eta(mu^2-1/4))`;
/// for additive noise the output block is `mu + w`.
pub fn choi_approx(params: GaussianChannelParams, mu: SqueezingParameter) -> Result<GaussianState> {
    params.validate()?;
    let m = mu.value();
    let (b, c) = match params {
        GaussianChannelParams::ThermalLoss { eta, nbar }
        | GaussianChannelParams::Amplifier { eta, nbar } => (
            eta * m + (1.0 - eta).abs() * (nbar + 0.5),
            (eta * (m * m - 0.25)).sqrt(),
        ),
        GaussianChannelParams::AdditiveNoise { w } => (m + w, (m * m - 0.25).sqrt()),
    };
    let mut cm = Matrix4::zeros();
    cm[(0, 0)] = m;
    cm[(1, 1)] = m;
    cm[(2, 2)] = b;
    cm[(3, 3)] = b;
    cm[(0, 2)] = c;
    cm[(2, 0)] = c;
    cm[(1, 3)] = -c;
    cm[(3, 1)] = -c;
    GaussianState::new(cm)
}

/// Quartic invariants of `V_aux * Omega`: its characteristic polynomial is
/// even, `l^4 + p l^2 + q`, so the squared eigenvalues solve a quadratic.
fn quartic_invariants(v1: &CovMatrix, v2: &CovMatrix) -> Option<(f64, f64, f64)> {
    let om = omega();
    let vsum = v1 + v2;
    let vsum_inv = vsum.try_inverse()?;
    let vaux = om.transpose() * vsum_inv * (om * 0.25 + v2 * om * v1);
    let m = vaux * om;
    let p = -(m * m).trace() / 2.0;
    let q = m.determinant();
    let det_vsum = vsum.determinant();
    Some((p, q, det_vsum))
}

/// One evaluation of the fidelity through the quartic route. Returns
/// `(value, well_conditioned)`; callers fall back to a regularized retry when
/// the quartic roots are degenerate or sit on the `nu = 1/2` branch point.
fn fidelity_attempt(v1: &CovMatrix, v2: &CovMatrix) -> Option<(f64, bool)> {
    let (p, q, det_vsum) = quartic_invariants(v1, v2)?;
    // Near-degenerate roots are harmless: the per-mode factors enter as a
    // symmetric product, so the splitting error cancels to first order.
    // Only the nu -> 1/2 branch point below needs the regularized retry.
    let mut ok = true;
    // Stable quadratic roots of z^2 + p z + q (both roots are <= 0).
    let sd = (p * p - 4.0 * q).max(0.0).sqrt();
    let z1 = if p >= 0.0 {
        (-p - sd) / 2.0
    } else {
        (-p + sd) / 2.0
    };
    let z2 = if z1 != 0.0 { q / z1 } else { 0.0 };
    let mut w_prod = 1.0;
    for z in [z1, z2] {
        let nu_sq = -z;
        if nu_sq <= 0.0 {
            return None;
        }
        let y = nu_sq - 0.25; // nu^2 - 1/4
        if y < 1e-9 * nu_sq.max(1.0) {
            ok = false;
        }
        w_prod *= nu_sq.sqrt() + y.max(0.0).sqrt();
    }
    let f_sq = 4.0 * w_prod / det_vsum.sqrt();
    if !f_sq.is_finite() || f_sq < 0.0 {
        return None;
    }
    Some((f_sq.sqrt().clamp(0.0, 1.0), ok))
}

fn fidelity_one_sided(v1: &CovMatrix, v2: &CovMatrix) -> Result<f64> {
    if let Some((f, true)) = fidelity_attempt(v1, v2) {
        return Ok(f);
    }
    // Near a branch point (pure or support-degenerate pairs) the quartic
    // roots lose half the working precision; a tiny thermal floor moves the
    // evaluation off the branch at O(eps) cost in the result.
    let mut last = None;
    for eps in [1e-7, 1e-6, 1e-5] {
        let r1 = v1 + Matrix4::identity() * eps;
        let r2 = v2 + Matrix4::identity() * eps;
        match fidelity_attempt(&r1, &r2) {
            Some((f, true)) => return Ok(f),
            Some((f, false)) => last = Some(f),
            None => {}
        }
    }
    last.ok_or_else(|| Error::Domain("Gaussian fidelity evaluation failed".into()))
}

/// Bures fidelity between two zero-mean two-mode Gaussian states, via the
/// general Gaussian fidelity formula specialized to zero means.
///
/// Symmetrized over the argument order; accuracy is ~1e-14 for generic mixed
/// states and ~1e-7 next to pure/branch-point configurations.
pub fn gaussian_fidelity(a: &GaussianState, b: &GaussianState) -> Result<f64> {
    let fab = fidelity_one_sided(&a.cm, &b.cm)?;
    let fba = fidelity_one_sided(&b.cm, &a.cm)?;
    Ok((0.5 * (fab + fba)).clamp(0.0, 1.0))
}

/// Result of a Fock-basis truncation.
#[derive(Clone, Debug)]
pub struct FockTruncation {
    /// Renormalized `(nmax+1)^2`-dimensional two-mode state.
    pub state: DensityMatrix,
    /// Probability weight lost to the truncation, `1 - tr(rho_trunc)`.
    pub trace_deficit: f64,
}

impl FockTruncation {
    /// Whether the deficit is small enough (< 1e-6) to treat the truncation
    /// as exact in downstream functionals.
    pub fn is_valid(&self) -> bool {
        self.trace_deficit < 1e-6
    }
}

/// Truncate a zero-mean two-mode Gaussian state to Fock occupation `<= nmax`
/// per mode.
///
/// Matrix elements come from the Gaussian coherent-state kernel: with
/// `Sigma_Q = C V C^dag + I/2` (the Husimi covariance in `(a, a^dag)`
/// ordering) and `A = X (I - Sigma_Q^{-1})`, the amplitudes obey a
/// four-index recursion whose seed is `det(Sigma_Q)^{-1/2}`.
pub fn fock_truncate(g: &GaussianState, nmax: usize) -> Result<FockTruncation> {
    if nmax < 1 {
        return Err(Error::Domain("nmax must be >= 1".into()));
    }
    let (a, c0) = kernel_matrix(&g.cm)?;
    let n = nmax + 1;

    // T indexed by (k0,k1,k2,k3) over the slots (alpha1*, alpha2*, beta1, beta2).
    let idx = |k0: usize, k1: usize, k2: usize, k3: usize| ((k0 * n + k1) * n + k2) * n + k3;
    let mut t = vec![Complex64::new(0.0, 0.0); n * n * n * n];
    t[0] = Complex64::new(1.0, 0.0);
    for tot in 1..=(4 * nmax) {
        for k0 in 0..=tot.min(nmax) {
            for k1 in 0..=(tot - k0).min(nmax) {
                for k2 in 0..=(tot - k0 - k1).min(nmax) {
                    let k3 = tot - k0 - k1 - k2;
                    if k3 > nmax {
                        continue;
                    }
                    let k = [k0, k1, k2, k3];
                    let i = k.iter().position(|&v| v > 0).unwrap();
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..4 {
                        let mut km = k;
                        km[i] -= 1;
                        if km[j] == 0 {
                            continue;
                        }
                        km[j] -= 1;
                        acc += a[(i, j)] * t[idx(km[0], km[1], km[2], km[3])];
                    }
                    t[idx(k0, k1, k2, k3)] = acc / k[i] as f64;
                }
            }
        }
    }

    // sqrt(n!) table.
    let mut sqf = vec![1.0f64; n];
    for i in 1..n {
        sqf[i] = sqf[i - 1] * (i as f64).sqrt();
    }

    let dim = n * n;
    let mut rho = CMatrix::zeros(dim, dim);
    for m1 in 0..n {
        for m2 in 0..n {
            for n1 in 0..n {
                for n2 in 0..n {
                    rho[(m1 * n + m2, n1 * n + n2)] =
                        c0 * sqf[m1] * sqf[m2] * sqf[n1] * sqf[n2] * t[idx(m1, m2, n1, n2)];
                }
            }
        }
    }
    let trace = rho.trace().re;
    let deficit = 1.0 - trace;
    if deficit > TRUNCATION_LIMIT {
        return Err(Error::Truncation {
            deficit,
            limit: TRUNCATION_LIMIT,
        });
    }
    rho /= Complex64::new(trace, 0.0);
    // Truncation is a compression of a bona fide state, so PSD and
    // Hermiticity hold structurally; skip the O(d^3) admission check.
    let state = DensityMatrix::new_trusted(rho);
    Ok(FockTruncation {
        state,
        trace_deficit: deficit,
    })
}

/// `(A, det(Sigma_Q)^{-1/2})` for the Fock kernel of covariance matrix `v`.
fn kernel_matrix(v: &CovMatrix) -> Result<(DMatrix<Complex64>, Complex64)> {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let i = Complex64::new(0.0, 1.0);
    let r = Complex64::new(inv_sqrt2, 0.0);
    // Rows: a1, a2, a1^dag, a2^dag acting on (q1, p1, q2, p2).
    let mut c = DMatrix::<Complex64>::zeros(4, 4);
    c[(0, 0)] = r;
    c[(0, 1)] = r * i;
    c[(1, 2)] = r;
    c[(1, 3)] = r * i;
    c[(2, 0)] = r;
    c[(2, 1)] = -r * i;
    c[(3, 2)] = r;
    c[(3, 3)] = -r * i;

    let mut vc = DMatrix::<Complex64>::zeros(4, 4);
    for a in 0..4 {
        for b in 0..4 {
            vc[(a, b)] = Complex64::new(v[(a, b)], 0.0);
        }
    }
    let sigma_q =
        &c * vc * c.adjoint() + DMatrix::<Complex64>::identity(4, 4) * Complex64::new(0.5, 0.0);
    let det = sigma_q.determinant();
    let inv = sigma_q
        .try_inverse()
        .ok_or_else(|| Error::Domain("singular Husimi covariance".into()))?;
    let mut x = DMatrix::<Complex64>::zeros(4, 4);
    x[(0, 2)] = Complex64::new(1.0, 0.0);
    x[(1, 3)] = Complex64::new(1.0, 0.0);
    x[(2, 0)] = Complex64::new(1.0, 0.0);
    x[(3, 1)] = Complex64::new(1.0, 0.0);
    let a = x * (DMatrix::<Complex64>::identity(4, 4) - inv);
    let c0 = Complex64::new(1.0, 0.0) / det.sqrt();
    Ok((a, c0))
}

/// Asymptotic (infinite-squeezing) fidelity between the Choi states of two
/// thermal-noise channels of equal gain.
pub fn asymptotic_thermal_fidelity(n0: f64, n1: f64) -> Result<f64> {
    if n0 < 0.0 || n1 < 0.0 {
        return Err(Error::Domain("thermal numbers must be >= 0".into()));
    }
    let inner = 2.0 * n0 * n1 + n0 + n1 + 1.0 + 2.0 * (n0 * n1 * (n0 + 1.0) * (n1 + 1.0)).sqrt();
    Ok((inner.sqrt() / (n0 + n1 + 1.0)).clamp(0.0, 1.0))
}

/// Asymptotic fidelity and Chernoff quantity for two additive-noise channels:
/// `F = 2 sqrt(w0 w1) / (w0 + w1)` and
/// `Q = inf_s w0^{1-s} w1^s / ((1-s) w0 + s w1)`.
pub fn asymptotic_additive_fidelity_qcb(w0: f64, w1: f64) -> Result<(f64, f64)> {
    if w0 <= 0.0 || w1 <= 0.0 {
        return Err(Error::Domain("noise variances must be > 0".into()));
    }
    let f = 2.0 * (w0 * w1).sqrt() / (w0 + w1);
    if w0 == w1 {
        return Ok((1.0, 1.0));
    }
    let objective = |s: f64| w0.powf(1.0 - s) * w1.powf(s) / ((1.0 - s) * w0 + s * w1);
    let (_, q) = grid_golden_min(objective, 0.0, 1.0, 51, 1e-14);
    Ok((f.clamp(0.0, 1.0), q.min(1.0)))
}

/// Thermal mean photon number of the output-leg marginal of a Choi state.
pub fn output_marginal_nbar(params: GaussianChannelParams, mu: SqueezingParameter) -> f64 {
    let m = mu.value();
    match params {
        GaussianChannelParams::ThermalLoss { eta, nbar }
        | GaussianChannelParams::Amplifier { eta, nbar } => {
            eta * m + (1.0 - eta).abs() * (nbar + 0.5) - 0.5
        }
        GaussianChannelParams::AdditiveNoise { w } => m + w - 0.5,
    }
}
