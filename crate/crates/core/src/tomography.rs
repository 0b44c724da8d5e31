//! Two-qubit state tomography: the 16-setting measurement design, synthetic
//! count generation, linear inversion, and maximum-likelihood reconstruction.
//!
//! Analyzer settings are expressed as Bloch angles of the single-qubit
//! projector on each side, `|v> = cos(θ/2)|0> + e^{iφ} sin(θ/2)|1>`. The MLE
//! parameterizes the state as `ρ = T†T / tr(T†T)` with `T` lower triangular
//! (16 real parameters), so the output is positive semidefinite and unit
//! trace by construction, and ascends the Poisson counting likelihood with
//! the overall photon flux profiled out analytically:
//!
//! ```text
//! f(T) = Σ_k n_k ln q_k − N ln(Σ_k e_k q_k),   q_k = <v_k| T†T |v_k>
//! ```
//!
//! which is scale invariant in `T` and equals the multinomial log-likelihood
//! of the observed setting frequencies up to a data constant.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_real, Cplx, Matrix4, Vector4};
use crate::quantum_state::{
    bell_state, concurrence, entanglement_of_formation, fidelity, DensityMatrix4,
};
use crate::scalar::{real, Real};
use crate::seeding::derive_seed;

/// Bloch-sphere polar/azimuthal angles of a single-qubit analyzer projector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochAngles<T> {
    #[serde(rename = "theta_bloch")]
    pub theta: T,
    #[serde(rename = "phi_bloch")]
    pub phi: T,
}

impl<T: Real> BlochAngles<T> {
    pub fn new(theta: T, phi: T) -> Self {
        Self { theta, phi }
    }

    /// The projector ket `cos(θ/2)|0> + e^{iφ} sin(θ/2)|1>`.
    pub fn ket(&self) -> [Cplx<T>; 2] {
        let half = self.theta / real(2.0);
        [
            Cplx::new(half.cos(), T::zero()),
            Cplx::from_polar(half.sin(), self.phi),
        ]
    }
}

/// One two-qubit analyzer configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting<T> {
    pub stokes: BlochAngles<T>,
    pub antistokes: BlochAngles<T>,
}

impl<T: Real> MeasurementSetting<T> {
    /// Product ket in the fixed four-dimensional basis.
    pub fn product_ket(&self) -> Vector4<T> {
        Vector4::kron2(&self.stokes.ket(), &self.antistokes.ket())
    }

    /// Detection probability `<v| ρ |v>` for this setting.
    pub fn probability(&self, rho: &DensityMatrix4<T>) -> T {
        let v = self.product_ket();
        v.dot(&rho.matrix().mul_vec(&v)).re.max(T::zero())
    }
}

/// One tomography record: a setting, its observed coincidences, and the
/// accumulation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord<T> {
    pub stokes: BlochAngles<T>,
    pub antistokes: BlochAngles<T>,
    pub counts: u64,
    pub exposure_s: T,
}

impl<T: Real> MeasurementRecord<T> {
    pub fn setting(&self) -> MeasurementSetting<T> {
        MeasurementSetting {
            stokes: self.stokes,
            antistokes: self.antistokes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exposure_s > T::zero()) {
            return Err(Error::invalid("record exposure must be > 0"));
        }
        Ok(())
    }
}

/// Map an analyzer 2-vector (generally sub-unit norm, from
/// [`crate::quantum_state::analyzer_vector`]) to its Bloch angles plus the
/// amplitude loss factor `|v|`.
///
/// Displaced-fork analyzers produce real 2-vectors, so they reach only the
/// φ ∈ {0, π} meridian of the Bloch sphere; the φ = ±π/2 settings of the
/// canonical design need an additional phase element and are therefore
/// specified abstractly.
pub fn bloch_projection<T: Real>(v: &[Cplx<T>; 2]) -> (BlochAngles<T>, T) {
    let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    if !(norm > T::zero()) {
        return (BlochAngles::new(T::zero(), T::zero()), T::zero());
    }
    let theta = real::<T>(2.0) * v[1].norm().atan2(v[0].norm());
    let phi = if v[1].norm() > T::zero() && v[0].norm() > T::zero() {
        (v[1] * v[0].conj()).arg()
    } else {
        T::zero()
    };
    (BlochAngles::new(theta, phi), norm)
}

/// The canonical informationally complete design: both sides run through
/// `{|0>, |1>, (|0>+|1>)/√2, (|0>+i|1>)/√2}`, Stokes-major, so the first pair
/// is `(|0>, |0>)`.
pub fn design_measurements<T: Real>() -> Vec<MeasurementSetting<T>> {
    let half_pi = T::PI() / real(2.0);
    let singles = [
        BlochAngles::new(T::zero(), T::zero()),
        BlochAngles::new(T::PI(), T::zero()),
        BlochAngles::new(half_pi, T::zero()),
        BlochAngles::new(half_pi, half_pi),
    ];
    let mut pairs = Vec::with_capacity(16);
    for s in singles {
        for a in singles {
            pairs.push(MeasurementSetting {
                stokes: s,
                antistokes: a,
            });
        }
    }
    pairs
}

/// Draw synthetic records for the canonical design: counts are Poisson with
/// mean `n_per_setting · <v_k|ρ|v_k>`, one second of exposure each, and the
/// per-record RNG seeded by `derive_seed(seed, k)`.
pub fn simulate_tomography_counts<T: Real>(
    rho: &DensityMatrix4<T>,
    n_per_setting: T,
    seed: u64,
) -> Result<Vec<MeasurementRecord<T>>> {
    if !(n_per_setting >= T::zero()) || !n_per_setting.is_finite() {
        return Err(Error::invalid("n_per_setting must be finite and >= 0"));
    }
    design_measurements::<T>()
        .into_iter()
        .enumerate()
        .map(|(k, setting)| {
            let mean = (n_per_setting * setting.probability(rho))
                .to_f64()
                .unwrap_or(0.0);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64));
            let counts = if mean > 0.0 {
                let dist =
                    Poisson::new(mean).map_err(|e| Error::numerical(format!("poisson: {e}")))?;
                dist.sample(&mut rng) as u64
            } else {
                0
            };
            Ok(MeasurementRecord {
                stokes: setting.stokes,
                antistokes: setting.antistokes,
                counts,
                exposure_s: T::one(),
            })
        })
        .collect()
}

/// Index map for the 16 real parameters of a Hermitian 4x4 matrix:
/// diagonal entries first, then (re, im) pairs for i > j.
const OFF_DIAG: [(usize, usize); 6] = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];

fn hermitian_from_params<T: Real>(x: &[T]) -> Matrix4<T> {
    let mut m = Matrix4::zeros();
    for i in 0..4 {
        m.m[i][i] = Cplx::new(x[i], T::zero());
    }
    for (k, &(i, j)) in OFF_DIAG.iter().enumerate() {
        let re = x[4 + 2 * k];
        let im = x[5 + 2 * k];
        m.m[i][j] = Cplx::new(re, im);
        m.m[j][i] = Cplx::new(re, -im);
    }
    m
}

/// Row of the real linear system `rate_k = <v_k| σ |v_k>` in the 16-parameter
/// Hermitian coordinates.
fn design_row<T: Real>(v: &Vector4<T>) -> [T; 16] {
    let mut row = [T::zero(); 16];
    for i in 0..4 {
        row[i] = v.0[i].norm_sqr();
    }
    for (k, &(i, j)) in OFF_DIAG.iter().enumerate() {
        let w = v.0[i].conj() * v.0[j];
        row[4 + 2 * k] = real::<T>(2.0) * w.re;
        row[5 + 2 * k] = -real::<T>(2.0) * w.im;
    }
    row
}

/// Linear inversion of measured rates to a Hermitian, unit-trace matrix
/// (possibly not positive semidefinite — that is what motivates the MLE).
///
/// The unnormalized matrix `σ` solves the least-squares system
/// `counts_k / exposure_k ≈ <v_k| σ |v_k>`, which absorbs the unknown photon
/// flux; the result is `σ / tr σ`.
pub fn linear_inversion<T: Real>(records: &[MeasurementRecord<T>]) -> Result<Matrix4<T>> {
    for r in records {
        r.validate()?;
    }
    let pairs: Vec<(Vector4<T>, T)> = records
        .iter()
        .map(|r| {
            (
                r.setting().product_ket(),
                real::<T>(r.counts as f64) / r.exposure_s,
            )
        })
        .collect();
    linear_inversion_rates(&pairs)
}

/// Linear inversion from exact per-setting rates (the noiseless path).
pub fn linear_inversion_rates<T: Real>(pairs: &[(Vector4<T>, T)]) -> Result<Matrix4<T>> {
    if pairs.len() < 16 {
        return Err(Error::invalid(format!(
            "linear inversion needs at least 16 settings, got {}",
            pairs.len()
        )));
    }
    // Normal equations of the (possibly overdetermined) real system.
    let mut ata = vec![vec![T::zero(); 16]; 16];
    let mut atb = vec![T::zero(); 16];
    for (v, rate) in pairs {
        let row = design_row(v);
        for a in 0..16 {
            atb[a] += row[a] * *rate;
            for b in a..16 {
                ata[a][b] += row[a] * row[b];
            }
        }
    }
    for a in 0..16 {
        for b in 0..a {
            ata[a][b] = ata[b][a];
        }
    }
    let x = solve_real(ata, atb).map_err(|_| {
        Error::numerical("singular tomography design: settings are not informationally complete")
    })?;
    let sigma = hermitian_from_params(&x);
    let tr = sigma.trace().re;
    if !(tr.abs() > real(1e-12)) {
        return Err(Error::numerical(
            "linear inversion produced a traceless matrix",
        ));
    }
    Ok(sigma.scale_re(T::one() / tr))
}

/// Clip negative eigenvalues to zero and renormalize the trace; the standard
/// physical projection of a linear-inversion estimate.
pub fn project_to_physical<T: Real>(m: &Matrix4<T>) -> Result<DensityMatrix4<T>> {
    let herm = m.add(&m.adjoint()).scale_re(real(0.5));
    let (w, v) = herm.eigh();
    let mut out = Matrix4::zeros();
    let mut tr = T::zero();
    for k in 0..4 {
        let lam = w[k].max(T::zero());
        tr += lam;
        for i in 0..4 {
            for j in 0..4 {
                out.m[i][j] += v.m[i][k] * v.m[j][k].conj() * Cplx::new(lam, T::zero());
            }
        }
    }
    if !(tr > T::zero()) {
        return Err(Error::numerical("projection collapsed to the zero matrix"));
    }
    DensityMatrix4::new(out.scale_re(T::one() / tr))
}

/// Stopping and instrumentation knobs for [`mle_reconstruct`].
#[derive(Debug, Clone, Copy)]
pub struct MleOptions<T> {
    pub max_iterations: usize,
    /// Converged when one ascent step improves the log-likelihood by less
    /// than this (or no improving step exists).
    pub tolerance: T,
    /// Keep the per-iteration log-likelihood trace in the result.
    pub record_history: bool,
}

impl<T: Real> Default for MleOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            tolerance: real(1e-10),
            record_history: false,
        }
    }
}

/// Reconstructed state with its entanglement measures and optimizer
/// diagnostics.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct TomographyResult<T> {
    pub rho: DensityMatrix4<T>,
    pub fidelity_to_bell: T,
    pub concurrence: T,
    pub entanglement_of_formation: T,
    pub log_likelihood: T,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_likelihood_history: Option<Vec<T>>,
}

struct Likelihood<T> {
    kets: Vec<Vector4<T>>,
    counts: Vec<T>,
    exposures: Vec<T>,
    total_counts: T,
}

impl<T: Real> Likelihood<T> {
    fn new(records: &[MeasurementRecord<T>]) -> Result<Self> {
        let mut total = T::zero();
        for r in records {
            r.validate()?;
            total += real(r.counts as f64);
        }
        if !(total > T::zero()) {
            return Err(Error::invalid("tomography needs at least one count"));
        }
        Ok(Self {
            kets: records.iter().map(|r| r.setting().product_ket()).collect(),
            counts: records.iter().map(|r| real(r.counts as f64)).collect(),
            exposures: records.iter().map(|r| r.exposure_s).collect(),
            total_counts: total,
        })
    }

    fn probabilities(&self, t: &Matrix4<T>) -> Vec<T> {
        self.kets
            .iter()
            .map(|v| {
                let u = t.mul_vec(v);
                u.dot(&u).re
            })
            .collect()
    }

    /// Profiled Poisson log-likelihood (up to a data-only constant).
    fn value(&self, q: &[T]) -> T {
        let tiny = T::min_positive_value() * real(1e6);
        let mut f = T::zero();
        let mut s = T::zero();
        for k in 0..q.len() {
            if self.counts[k] > T::zero() {
                f += self.counts[k] * q[k].max(tiny).ln();
            }
            s += self.exposures[k] * q[k];
        }
        f - self.total_counts * s.max(tiny).ln()
    }

    fn value_at(&self, x: &[T; 16]) -> T {
        let t = lower_from_params(x);
        self.value(&self.probabilities(&t))
    }

    fn gradient_at(&self, x: &[T; 16]) -> [T; 16] {
        let t = lower_from_params(x);
        let q = self.probabilities(&t);
        self.gradient(&t, &q)
    }

    /// Gradient of the log-likelihood with respect to the 16 lower-triangle
    /// parameters of `T`.
    fn gradient(&self, t: &Matrix4<T>, q: &[T]) -> [T; 16] {
        let tiny = T::min_positive_value() * real(1e6);
        let s: T = q
            .iter()
            .zip(&self.exposures)
            .map(|(&qk, &ek)| ek * qk)
            .sum::<T>()
            .max(tiny);
        // M = Σ_k c_k (T v_k) v_k†, c_k = n_k/q_k − N e_k / S.
        let mut m = Matrix4::<T>::zeros();
        for k in 0..q.len() {
            let c = self.counts[k] / q[k].max(tiny) - self.total_counts * self.exposures[k] / s;
            let u = t.mul_vec(&self.kets[k]);
            for i in 0..4 {
                for j in 0..4 {
                    m.m[i][j] += u.0[i] * self.kets[k].0[j].conj() * Cplx::new(c, T::zero());
                }
            }
        }
        let mut g = [T::zero(); 16];
        for i in 0..4 {
            g[i] = real::<T>(2.0) * m.m[i][i].re;
        }
        for (k, &(i, j)) in OFF_DIAG.iter().enumerate() {
            g[4 + 2 * k] = real::<T>(2.0) * m.m[i][j].re;
            g[5 + 2 * k] = real::<T>(2.0) * m.m[i][j].im;
        }
        g
    }
}

fn lower_from_params<T: Real>(x: &[T; 16]) -> Matrix4<T> {
    let mut t = Matrix4::zeros();
    for i in 0..4 {
        t.m[i][i] = Cplx::new(x[i], T::zero());
    }
    for (k, &(i, j)) in OFF_DIAG.iter().enumerate() {
        t.m[i][j] = Cplx::new(x[4 + 2 * k], x[5 + 2 * k]);
    }
    t
}

fn params_from_lower<T: Real>(t: &Matrix4<T>) -> [T; 16] {
    let mut x = [T::zero(); 16];
    for i in 0..4 {
        x[i] = t.m[i][i].re;
    }
    for (k, &(i, j)) in OFF_DIAG.iter().enumerate() {
        x[4 + 2 * k] = t.m[i][j].re;
        x[5 + 2 * k] = t.m[i][j].im;
    }
    x
}

fn normalize_params<T: Real>(x: &mut [T; 16]) {
    let norm_sqr: T = x.iter().map(|&v| v * v).sum();
    // tr(T†T) = Σ |t_ij|²; rescale to unit trace to keep parameters bounded.
    if norm_sqr > T::zero() {
        let inv = T::one() / norm_sqr.sqrt();
        for v in x.iter_mut() {
            *v *= inv;
        }
    }
}

/// Maximum-likelihood reconstruction: monotone damped-Newton ascent on the
/// 16 Cholesky parameters, initialized from the physically projected linear
/// inversion. Steps are accepted only when the likelihood does not decrease,
/// so the recorded trace is non-decreasing by construction.
pub fn mle_reconstruct<T: Real>(
    records: &[MeasurementRecord<T>],
    options: &MleOptions<T>,
) -> Result<TomographyResult<T>> {
    let lik = Likelihood::new(records)?;

    // Initialization: linear inversion, eigenvalues floored, Cholesky factor.
    let init_rho = match linear_inversion(records).and_then(|m| project_to_physical(&m)) {
        Ok(rho) => rho,
        Err(_) => DensityMatrix4::maximally_mixed(),
    };
    let floor: T = real(1e-4);
    let floored = init_rho
        .matrix()
        .scale_re(T::one() - real::<T>(4.0) * floor)
        .add(&Matrix4::identity().scale_re(floor));
    let t0 = floored
        .lower_factor_adjoint()
        .map_err(|e| Error::numerical(format!("MLE initialization failed: {e}")))?;
    let mut x = params_from_lower(&t0);
    normalize_params(&mut x);

    let mut f = lik.value_at(&x);
    let mut history = options.record_history.then(|| vec![f]);
    let mut lambda: T = real(1e-3);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..options.max_iterations {
        iterations = iter + 1;
        let g = lik.gradient_at(&x);

        // Numeric Hessian from forward differences of the analytic gradient.
        let h_step: T = real(1e-6);
        let mut hess = vec![vec![T::zero(); 16]; 16];
        for j in 0..16 {
            let mut xj = x;
            xj[j] += h_step;
            let gj = lik.gradient_at(&xj);
            for i in 0..16 {
                hess[i][j] = (gj[i] - g[i]) / h_step;
            }
        }
        for i in 0..16 {
            for j in (i + 1)..16 {
                let s = (hess[i][j] + hess[j][i]) / real(2.0);
                hess[i][j] = s;
                hess[j][i] = s;
            }
        }

        // Solve (−H + λ·diag) d = g with Levenberg damping; retry stiffer on
        // failure or on a decreasing trial.
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = vec![vec![T::zero(); 16]; 16];
            for i in 0..16 {
                for j in 0..16 {
                    a[i][j] = -hess[i][j];
                }
                a[i][i] += lambda * (-hess[i][i]).abs().max(real(1e-8));
            }
            let d = match solve_real(a, g.to_vec()) {
                Ok(d) => d,
                Err(_) => {
                    lambda *= real(10.0);
                    continue;
                }
            };
            let mut xt = x;
            for (xi, di) in xt.iter_mut().zip(&d) {
                *xi += *di;
            }
            normalize_params(&mut xt);
            let ft = lik.value_at(&xt);
            if ft.is_finite() && ft >= f {
                let gain = ft - f;
                x = xt;
                f = ft;
                lambda = (lambda / real(3.0)).max(real(1e-12));
                accepted = true;
                if let Some(h) = history.as_mut() {
                    h.push(f);
                }
                if gain < options.tolerance {
                    converged = true;
                }
                break;
            }
            lambda *= real(10.0);
        }
        if !accepted {
            // No non-decreasing step at any damping: numerically optimal.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    let t = lower_from_params(&x);
    let g = t.adjoint().matmul(&t);
    let tr = g.trace().re;
    let rho = DensityMatrix4::new(g.scale_re(T::one() / tr))?;
    let c = concurrence(&rho);
    Ok(TomographyResult {
        fidelity_to_bell: fidelity(&rho, &bell_state()),
        concurrence: c,
        entanglement_of_formation: entanglement_of_formation(&rho),
        log_likelihood: f,
        iterations,
        converged,
        log_likelihood_history: history,
        rho,
    })
}
