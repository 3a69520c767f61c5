//! Choi-based quantum Fisher information: the per-probe bound
//! `B = 8(1 - F)/dtheta^2` evaluated on Choi matrices, closed forms for the
//! built-in families, and the multiparameter QFI matrix through symmetric
//! logarithmic derivatives.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channels::{self, choi_matrix};
use crate::error::{Error, Result};
use crate::gaussian::{choi_approx, gaussian_fidelity, GaussianChannelParams, SqueezingParameter};
use crate::linalg::{
    fidelity, hermitian_eigen, hermiticity_deviation, CMatrix, DensityMatrix, HERM_TOL,
};

/// Kernel threshold implementing the `D_j + D_k > 0` restriction in the SLD.
pub const SLD_KERNEL_TOL: f64 = 1e-12;

/// Channel family for an estimation task; the estimated parameter is the
/// error probability, the thermal number, or the additive-noise variance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EstimationFamily {
    Depolarizing,
    Dephasing,
    Erasure { d: usize },
    ThermalLoss { eta: f64 },
    Amplifier { eta: f64 },
    AdditiveNoise,
}

impl EstimationFamily {
    pub fn is_bosonic(&self) -> bool {
        matches!(
            self,
            EstimationFamily::ThermalLoss { .. }
                | EstimationFamily::Amplifier { .. }
                | EstimationFamily::AdditiveNoise
        )
    }

    /// Check that `theta` is interior to the family's parameter domain.
    fn check_interior(&self, theta: f64) -> Result<()> {
        match self {
            EstimationFamily::Depolarizing
            | EstimationFamily::Dephasing
            | EstimationFamily::Erasure { .. } => {
                if theta <= 0.0 || theta >= 1.0 {
                    return Err(Error::Boundary {
                        name: "p",
                        value: theta,
                        diverges: "B(p) = 1/(p(1-p))",
                    });
                }
            }
            EstimationFamily::ThermalLoss { .. } | EstimationFamily::Amplifier { .. } => {
                if theta <= 0.0 {
                    return Err(Error::Boundary {
                        name: "nbar",
                        value: theta,
                        diverges: "B = 1/(nbar(nbar+1))",
                    });
                }
            }
            EstimationFamily::AdditiveNoise => {
                if theta <= 0.0 {
                    return Err(Error::Boundary {
                        name: "w",
                        value: theta,
                        diverges: "B = 1/w^2",
                    });
                }
            }
        }
        Ok(())
    }

    fn gaussian_params(&self, theta: f64) -> Option<GaussianChannelParams> {
        match *self {
            EstimationFamily::ThermalLoss { eta } => {
                Some(GaussianChannelParams::ThermalLoss { eta, nbar: theta })
            }
            EstimationFamily::Amplifier { eta } => {
                Some(GaussianChannelParams::Amplifier { eta, nbar: theta })
            }
            EstimationFamily::AdditiveNoise => {
                Some(GaussianChannelParams::AdditiveNoise { w: theta })
            }
            _ => None,
        }
    }

    /// Choi state of the discrete families at parameter `theta`.
    fn discrete_choi(&self, theta: f64) -> Result<Option<DensityMatrix>> {
        let ch = match *self {
            EstimationFamily::Depolarizing => channels::depolarizing(theta)?,
            EstimationFamily::Dephasing => channels::dephasing(theta)?,
            EstimationFamily::Erasure { d } => channels::erasure(theta, d)?,
            _ => return Ok(None),
        };
        Ok(Some(choi_matrix(&ch)?.state().clone()))
    }
}

/// One estimation problem: a channel family, the true parameter, the probe
/// count and the finite-difference step.
#[derive(Clone, Copy, Debug)]
pub struct EstimationTask {
    pub family: EstimationFamily,
    pub theta: f64,
    pub dtheta: f64,
    pub n: u64,
    pub mu: Option<SqueezingParameter>,
}

impl EstimationTask {
    pub fn new(family: EstimationFamily, theta: f64, n: u64) -> Self {
        Self {
            family,
            theta,
            dtheta: 1e-4,
            n,
            mu: None,
        }
    }

    pub fn with_dtheta(mut self, dtheta: f64) -> Self {
        self.dtheta = dtheta;
        self
    }

    pub fn with_mu(mut self, mu: SqueezingParameter) -> Self {
        self.mu = Some(mu);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.dtheta <= 0.0 {
            return Err(Error::Domain("dtheta must be > 0".into()));
        }
        if self.n == 0 {
            return Err(Error::Domain("n must be >= 1".into()));
        }
        self.family.check_interior(self.theta)?;
        self.family.check_interior(self.theta - self.dtheta / 2.0)?;
        self.family.check_interior(self.theta + self.dtheta)?;
        Ok(())
    }
}

/// How the reported per-probe QFI value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QfiMethod {
    ClosedForm,
    FiniteDifference,
}

/// Per-probe QFI with the adaptive bound and the Cramer-Rao floor.
#[derive(Clone, Debug)]
pub struct QfiResult {
    /// Preferred per-probe QFI (closed form when one exists).
    pub b: f64,
    /// `n * B`, the adaptive QFI.
    pub adaptive_qfi: f64,
    /// `1 / (n * B)`.
    pub qcrb: f64,
    pub method: QfiMethod,
    pub mu_used: Option<f64>,
    /// Closed-form value, when the family has one.
    pub b_closed: Option<f64>,
    /// Finite-difference value (Richardson-extrapolated central pair).
    pub b_numeric: Option<f64>,
    /// Relative change of the plain estimate when `dtheta` is halved; small
    /// values certify that the finite-difference limit has converged.
    pub richardson_rel_change: Option<f64>,
}

impl QfiResult {
    fn from_b(b: f64, n: u64, method: QfiMethod) -> Self {
        let adaptive = n as f64 * b;
        Self {
            b,
            adaptive_qfi: adaptive,
            qcrb: 1.0 / adaptive,
            method,
            mu_used: None,
            b_closed: None,
            b_numeric: None,
            richardson_rel_change: None,
        }
    }

    /// Relative disagreement between the closed form and the numeric value.
    pub fn relative_gap(&self) -> Option<f64> {
        match (self.b_closed, self.b_numeric) {
            (Some(c), Some(n)) => Some(((n - c) / c).abs()),
            _ => None,
        }
    }

    /// Whether halving `dtheta` moved the finite-difference estimate by less
    /// than 1e-3 relative, the convergence gate for treating it as the limit.
    pub fn richardson_converged(&self) -> Option<bool> {
        self.richardson_rel_change.map(|r| r < 1e-3)
    }
}

/// The per-probe QFI functional `8 (1 - F(rho, rho')) / dtheta^2`.
pub fn qfi_from_fidelity(
    rho_theta: &DensityMatrix,
    rho_theta_plus: &DensityMatrix,
    dtheta: f64,
) -> Result<f64> {
    if dtheta <= 0.0 {
        return Err(Error::Domain("dtheta must be > 0".into()));
    }
    let f = fidelity(rho_theta, rho_theta_plus)?;
    Ok((8.0 * (1.0 - f) / (dtheta * dtheta)).max(0.0))
}

/// Closed-form per-probe QFI for the family, when available.
pub fn closed_form_b(family: EstimationFamily, theta: f64, mu: Option<f64>) -> Result<f64> {
    family.check_interior(theta)?;
    Ok(match family {
        EstimationFamily::Depolarizing
        | EstimationFamily::Dephasing
        | EstimationFamily::Erasure { .. } => 1.0 / (theta * (1.0 - theta)),
        EstimationFamily::ThermalLoss { eta } | EstimationFamily::Amplifier { eta } => {
            let base = 1.0 / (theta * (theta + 1.0));
            match mu {
                Some(m) => {
                    let g = (1.0 - eta).abs() * (2.0 + 4.0 * theta) * m;
                    base * (g + 1.0 - eta) / (g + 1.0 + eta)
                }
                None => base,
            }
        }
        EstimationFamily::AdditiveNoise => match mu {
            Some(m) => 8.0 * m / (8.0 * theta * theta * m + 4.0 * theta),
            None => 1.0 / (theta * theta),
        },
    })
}

/// Choi fidelity between family members at two parameter values.
fn choi_fidelity_at(family: EstimationFamily, t0: f64, t1: f64, mu: Option<f64>) -> Result<f64> {
    if let Some(rho0) = family.discrete_choi(t0)? {
        let rho1 = family
            .discrete_choi(t1)?
            .expect("same family stays discrete");
        return fidelity(&rho0, &rho1);
    }
    let m = mu.ok_or_else(|| {
        Error::Domain("bosonic finite-difference QFI needs a squeezing parameter mu".into())
    })?;
    let mu = SqueezingParameter::new(m)?;
    let p0 = family.gaussian_params(t0).expect("bosonic family");
    let p1 = family.gaussian_params(t1).expect("bosonic family");
    gaussian_fidelity(&choi_approx(p0, mu)?, &choi_approx(p1, mu)?)
}

/// Central finite-difference estimate of B at step `d`.
fn central_b(family: EstimationFamily, theta: f64, d: f64, mu: Option<f64>) -> Result<f64> {
    let f = choi_fidelity_at(family, theta - d / 2.0, theta + d / 2.0, mu)?;
    Ok((8.0 * (1.0 - f) / (d * d)).max(0.0))
}

/// Per-probe, adaptive QFI and QCRB for an estimation task.
///
/// Closed forms are dispatched when the family has one; the finite-difference
/// route (central pair, Richardson extrapolated) is recorded alongside so the
/// two can be cross-checked.
pub fn channel_qfi(task: &EstimationTask) -> Result<QfiResult> {
    task.validate()?;
    let mu = task.mu.map(|m| m.value());
    let b_closed = closed_form_b(task.family, task.theta, mu)?;

    // Bosonic families without a mu have no finite-energy Choi pair to
    // difference; report the asymptotic closed form alone.
    let numeric = if task.family.is_bosonic() && mu.is_none() {
        None
    } else {
        let b_full = central_b(task.family, task.theta, task.dtheta, mu)?;
        let b_half = central_b(task.family, task.theta, task.dtheta / 2.0, mu)?;
        let richardson = (4.0 * b_half - b_full) / 3.0;
        let rel_change = ((b_half - b_full) / b_full.max(f64::MIN_POSITIVE)).abs();
        Some((richardson, rel_change))
    };

    let mut out = QfiResult::from_b(b_closed, task.n, QfiMethod::ClosedForm);
    out.mu_used = mu;
    out.b_closed = Some(b_closed);
    if let Some((b_num, rel)) = numeric {
        out.b_numeric = Some(b_num);
        out.richardson_rel_change = Some(rel);
    }
    Ok(out)
}

/// Finite-difference-only QFI result (no closed-form dispatch); the raw route
/// for cross-checks.
pub fn numeric_qfi(task: &EstimationTask) -> Result<QfiResult> {
    task.validate()?;
    let mu = task.mu.map(|m| m.value());
    let b_full = central_b(task.family, task.theta, task.dtheta, mu)?;
    let b_half = central_b(task.family, task.theta, task.dtheta / 2.0, mu)?;
    let b = (4.0 * b_half - b_full) / 3.0;
    let mut out = QfiResult::from_b(b, task.n, QfiMethod::FiniteDifference);
    out.mu_used = mu;
    out.b_numeric = Some(b);
    out.richardson_rel_change = Some(((b_half - b_full) / b_full.max(f64::MIN_POSITIVE)).abs());
    Ok(out)
}

/// Symmetric logarithmic derivative of a state family at `rho` with
/// derivative `drho`:
/// `L = sum_{D_j + D_k > 0} 2/(D_j + D_k) <e_j|drho|e_k> |e_j><e_k|`.
pub fn sld(rho: &DensityMatrix, drho: &CMatrix) -> Result<CMatrix> {
    if drho.nrows() != rho.dim() || drho.ncols() != rho.dim() {
        return Err(Error::DimMismatch("drho shape".into()));
    }
    let dev = hermiticity_deviation(drho);
    if dev > HERM_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let (vals, vecs) = hermitian_eigen(rho.matrix());
    let d = rho.dim();
    let in_basis = vecs.adjoint() * drho * &vecs;
    let mut l_basis = CMatrix::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            let denom = vals[j].max(0.0) + vals[k].max(0.0);
            if denom > SLD_KERNEL_TOL {
                l_basis[(j, k)] = in_basis[(j, k)] * Complex64::new(2.0 / denom, 0.0);
            }
        }
    }
    Ok(&vecs * l_basis * vecs.adjoint())
}

/// Multiparameter QFI matrix with the SLD operators retained for inspection.
#[derive(Clone, Debug)]
pub struct MultiParamQfi {
    pub matrix: DMatrix<f64>,
    pub params: Vec<String>,
    pub slds: Vec<CMatrix>,
}

/// The joint caveat attached to every multiparameter QCRB report.
pub const MULTIPARAM_QCRB_CAVEAT: &str = "joint multiparameter QCRB; not known to be achievable";

impl MultiParamQfi {
    /// Covariance floor `I^{-1} / n` for joint estimation after `n` rounds,
    /// returned together with [`MULTIPARAM_QCRB_CAVEAT`].
    pub fn qcrb_matrix(&self, n: u64) -> Result<(DMatrix<f64>, &'static str)> {
        if n == 0 {
            return Err(Error::Domain("n must be >= 1".into()));
        }
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Domain("QFI matrix is singular".into()))?;
        Ok((inv / n as f64, MULTIPARAM_QCRB_CAVEAT))
    }
}

/// QFI matrix of a parameterized state family by central finite differences:
/// `I_{uv} = Re tr(rho (L_u L_v + L_v L_u)/2)`.
pub fn qfi_matrix<F>(
    family: F,
    theta: &[f64],
    steps: &[f64],
    names: Option<Vec<String>>,
) -> Result<MultiParamQfi>
where
    F: Fn(&[f64]) -> Result<DensityMatrix>,
{
    let m = theta.len();
    if steps.len() != m {
        return Err(Error::DimMismatch("steps length != theta length".into()));
    }
    let rho = family(theta)?;
    let mut slds = Vec::with_capacity(m);
    for u in 0..m {
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        tp[u] += steps[u];
        tm[u] -= steps[u];
        let drho = (family(&tp)?.into_matrix() - family(&tm)?.into_matrix())
            / Complex64::new(2.0 * steps[u], 0.0);
        slds.push(sld(&rho, &drho)?);
    }
    let mut matrix = DMatrix::zeros(m, m);
    for u in 0..m {
        for v in u..m {
            let anti = (&slds[u] * &slds[v] + &slds[v] * &slds[u]) * Complex64::new(0.5, 0.0);
            let val = (rho.matrix() * anti).trace().re;
            matrix[(u, v)] = val;
            matrix[(v, u)] = val;
        }
    }
    let params = names.unwrap_or_else(|| (0..m).map(|i| format!("theta{i}")).collect());
    Ok(MultiParamQfi {
        matrix,
        params,
        slds,
    })
}

/// QFI along a curve through parameter space: the quadratic form
/// `sum_{uv} I_{uv} v_u v_v`.
pub fn curve_qfi(qm: &MultiParamQfi, velocity: &[f64]) -> Result<f64> {
    let m = qm.matrix.nrows();
    if velocity.len() != m {
        return Err(Error::DimMismatch("velocity length".into()));
    }
    let mut out = 0.0;
    for u in 0..m {
        for v in 0..m {
            out += qm.matrix[(u, v)] * velocity[u] * velocity[v];
        }
    }
    Ok(out.max(0.0))
}
