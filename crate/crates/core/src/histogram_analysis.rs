//! The experiment's statistics: background estimation, the g(τ) correlation,
//! the normalized-signal sum, and least-squares fitting of sweep curves to
//! the squared projection amplitude.

use serde::{Deserialize, Serialize};

use crate::coincidence_sim::CoincidenceHistogram;
use crate::error::{Error, Result};
use crate::fitting::{levenberg_fit, FitOptions};
use crate::oam_optics::{sweep_profile, DiffractionOrder};
use crate::quadrature::QuadratureSpec;
use crate::scalar::{real, Real};

/// Delay past which bins count as pure background, ns.
pub const DEFAULT_TAIL_START_NS: f64 = 50.0;
/// Inclusive bounds of the normalized-signal sum, ns.
pub const SIGNAL_SUM_RANGE_NS: (f64, f64) = (2.0, 32.0);

/// One background-normalized sweep measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint<T> {
    pub x0: T,
    pub signal: T,
    pub uncertainty: T,
}

/// Result of fitting a sweep to `amplitude · |a(x0; θ, w)|² + offset`.
///
/// `residual` is the unweighted sum of squared residuals; `theta` is reported
/// modulo π in `[-π/2, π/2]`. `degenerate` flags fits where flipping the sign
/// of θ changes the residual by less than 1e-9 (x0-symmetric data cannot
/// distinguish ±θ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepFit<T> {
    pub theta: T,
    #[serde(rename = "w")]
    pub waist: T,
    pub amplitude: T,
    pub offset: T,
    pub residual: T,
    pub converged: bool,
    pub degenerate: bool,
}

impl<T: Real> SweepFit<T> {
    /// A plain initial guess for [`fit_sweep`].
    pub fn initial_guess(theta: T, waist: T) -> Self {
        Self {
            theta,
            waist,
            amplitude: T::one(),
            offset: T::zero(),
            residual: T::zero(),
            converged: false,
            degenerate: false,
        }
    }
}

fn bin_for_tau<T: Real>(hist: &CoincidenceHistogram<T>, tau_ns: T) -> Result<usize> {
    let idx = (tau_ns / hist.bin_width_ns).round();
    let i = idx
        .to_usize()
        .ok_or_else(|| Error::invalid(format!("tau = {tau_ns} ns is not a bin label")))?;
    if i >= hist.n_bins() {
        return Err(Error::invalid(format!(
            "tau = {tau_ns} ns is beyond the last bin"
        )));
    }
    let label = hist.tau_ns(i);
    if (label - tau_ns).abs() > hist.bin_width_ns * real(1e-6) {
        return Err(Error::invalid(format!(
            "tau = {tau_ns} ns does not map to a bin label (nearest {label})"
        )));
    }
    Ok(i)
}

/// Mean counts of the bins with label `τ > tail_start_ns`; needs at least
/// five such bins.
pub fn estimate_background<T: Real>(hist: &CoincidenceHistogram<T>, tail_start_ns: T) -> Result<T> {
    let tail: Vec<u64> = (0..hist.n_bins())
        .filter(|&i| hist.tau_ns(i) > tail_start_ns)
        .map(|i| hist.counts[i])
        .collect();
    if tail.len() < 5 {
        return Err(Error::invalid(format!(
            "only {} bins beyond {tail_start_ns} ns (need at least 5)",
            tail.len()
        )));
    }
    let sum: T = tail.iter().map(|&n| real::<T>(n as f64)).sum();
    Ok(sum / real(tail.len() as f64))
}

/// Time-resolved correlation `g(τ) = N(τ) / bg` with the background from
/// [`estimate_background`] at the default 50 ns tail.
pub fn g_function<T: Real>(hist: &CoincidenceHistogram<T>, tau_ns: T) -> Result<T> {
    let bg = estimate_background(hist, real(DEFAULT_TAIL_START_NS))?;
    if !(bg > T::zero()) {
        return Err(Error::numerical("background is zero; g undefined"));
    }
    let i = bin_for_tau(hist, tau_ns)?;
    Ok(real::<T>(hist.counts[i] as f64) / bg)
}

/// Indices of the bins inside the inclusive 2..32 ns signal window.
pub(crate) fn signal_bin_indices<T: Real>(bin_width_ns: T, n_bins: usize) -> Result<Vec<usize>> {
    let (lo, hi) = SIGNAL_SUM_RANGE_NS;
    let (lo, hi) = (real::<T>(lo), real::<T>(hi));
    let half = bin_width_ns / real(2.0);
    let bins: Vec<usize> = (0..n_bins)
        .filter(|&i| {
            let tau = bin_width_ns * real(i as f64);
            tau >= lo - half * real(1e-9) && tau <= hi + half * real(1e-9)
        })
        .collect();
    if bins.is_empty() || bin_width_ns * real(*bins.last().unwrap() as f64) < hi - half {
        return Err(Error::invalid(format!(
            "histogram does not cover the {}..{} ns signal window",
            SIGNAL_SUM_RANGE_NS.0, SIGNAL_SUM_RANGE_NS.1
        )));
    }
    Ok(bins)
}

fn signal_bins<T: Real>(hist: &CoincidenceHistogram<T>) -> Result<Vec<usize>> {
    signal_bin_indices(hist.bin_width_ns, hist.n_bins())
}

/// The normalized signal `N = Σ_{τ=2 ns}^{32 ns} (N(τ) - bg) / bg`, bounds
/// inclusive. May be negative for pure-noise histograms.
pub fn normalized_signal<T: Real>(hist: &CoincidenceHistogram<T>) -> Result<T> {
    normalized_signal_with_uncertainty(hist).map(|(n, _)| n)
}

/// [`normalized_signal`] plus its propagated standard error (Poisson counting
/// in the summed bins and in the background estimate).
pub fn normalized_signal_with_uncertainty<T: Real>(
    hist: &CoincidenceHistogram<T>,
) -> Result<(T, T)> {
    let bg = estimate_background(hist, real(DEFAULT_TAIL_START_NS))?;
    if !(bg > T::zero()) {
        return Err(Error::numerical(
            "background is zero; normalized signal undefined",
        ));
    }
    let bins = signal_bins(hist)?;
    let mut total = T::zero();
    let mut sum_counts = T::zero();
    for &i in &bins {
        let n: T = real(hist.counts[i] as f64);
        total += (n - bg) / bg;
        sum_counts += n;
    }
    // Var(N) ~ Σ N_i / bg² + (Σ N_i / bg²)² Var(bg), Var(bg) = bg / n_tail.
    let n_tail: T = real(
        (0..hist.n_bins())
            .filter(|&i| hist.tau_ns(i) > real::<T>(DEFAULT_TAIL_START_NS))
            .count() as f64,
    );
    let dn_dbg = sum_counts / (bg * bg);
    let var = sum_counts / (bg * bg) + dn_dbg * dn_dbg * bg / n_tail;
    Ok((total, var.sqrt()))
}

/// Weighted least-squares fit of sweep points to
/// `amplitude · |a(x0; θ, w)|² + offset`, the model evaluated through the
/// projection quadrature with the given hologram order.
///
/// Weights are `1 / max(uncertainty², 1e-12)`. Needs at least 6 points with
/// both signs of x0 represented.
pub fn fit_sweep<T: Real>(
    points: &[SweepPoint<T>],
    initial: &SweepFit<T>,
    order: DiffractionOrder,
    quad: &QuadratureSpec<T>,
) -> Result<SweepFit<T>> {
    if points.len() < 6 {
        return Err(Error::invalid(format!(
            "sweep fit needs at least 6 points, got {}",
            points.len()
        )));
    }
    if !points.iter().any(|p| p.x0 > T::zero()) || !points.iter().any(|p| p.x0 < T::zero()) {
        return Err(Error::invalid(
            "sweep fit needs displacements of both signs",
        ));
    }
    let xs: Vec<T> = points.iter().map(|p| p.x0).collect();
    let ys: Vec<T> = points.iter().map(|p| p.signal).collect();
    let weights: Vec<T> = points
        .iter()
        .map(|p| T::one() / (p.uncertainty * p.uncertainty).max(real(1e-12)))
        .collect();

    let model = |theta: T, waist: T, amplitude: T, offset: T| -> Result<Vec<T>> {
        let profile = sweep_profile(theta, waist, order, &xs, quad)?;
        Ok(profile.iter().map(|&v| amplitude * v + offset).collect())
    };
    let residuals = |p: &[T]| -> Result<Vec<T>> {
        if !(p[1] > T::zero()) {
            // Out-of-domain waist: return worse-than-anything residuals so
            // the solver backs off instead of erroring out.
            return Ok(ys.iter().map(|_| real(1e6)).collect());
        }
        let m = model(p[0], p[1], p[2], p[3])?;
        Ok(ys.iter().zip(&m).map(|(&y, &m)| y - m).collect())
    };

    let init = [
        initial.theta,
        initial.waist,
        initial.amplitude,
        initial.offset,
    ];
    let report = levenberg_fit(residuals, &init, &weights, &FitOptions::default())?;
    let [mut theta, waist, amplitude, offset] = [
        report.params[0],
        report.params[1],
        report.params[2],
        report.params[3],
    ];
    let waist = waist.abs();

    // θ is defined modulo π; report it in [-π/2, π/2].
    let pi = T::PI();
    theta %= pi;
    if theta > pi / real(2.0) {
        theta -= pi;
    } else if theta < -pi / real(2.0) {
        theta += pi;
    }

    // Degeneracy probe: mirror θ and compare residuals.
    let ss = |th: T| -> Result<T> {
        let m = model(th, waist, amplitude, offset)?;
        Ok(ys
            .iter()
            .zip(&m)
            .map(|(&y, &mv)| {
                let r = y - mv;
                r * r
            })
            .sum())
    };
    let ss_fit = ss(theta)?;
    let ss_mirror = ss(-theta)?;
    let degenerate = (ss_fit - ss_mirror).abs() < real(1e-9);

    Ok(SweepFit {
        theta,
        waist,
        amplitude,
        offset,
        residual: ss_fit,
        converged: report.converged,
        degenerate,
    })
}
