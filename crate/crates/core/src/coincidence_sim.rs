//! Monte Carlo generation of time-resolved coincidence histograms and
//! displacement-sweep count data.
//!
//! The model is binned counting statistics: every histogram bin is an
//! independent Poisson draw around
//!
//! ```text
//! E[bin τ] = duration · (accidental_rate + pair_rate · η_s · η_as · W(τ))
//! ```
//!
//! where `accidental_rate = stokes_rate · antistokes_rate · bin_width` is the
//! flat uncorrelated floor and `W(τ)` is the per-bin probability mass of the
//! pair wavepacket (exponential rise to the peak delay, exponential decay
//! after it, truncated at the correlation window, area-normalized). Sampling
//! is deterministic per seed; sweep points draw their seeds through
//! [`crate::seeding::derive_seed`] so parallel and sequential execution
//! agree.

use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histogram_analysis::{normalized_signal_with_uncertainty, SweepPoint};
use crate::quadrature::QuadratureSpec;
use crate::quantum_state::{coincidence_probability, AnalyzerSetting, DensityMatrix4, Side};
use crate::scalar::{real, Real};
use crate::seeding::derive_seed;

/// Largest expected count per bin the sampler accepts.
const MAX_EXPECTED: f64 = 9.0e15; // 2^53: counts stay exact in f64

/// Pair wavepacket profile: exponential rise to the peak, exponential decay
/// after it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavepacketShape<T> {
    pub rise_ns: T,
    pub decay_ns: T,
}

/// Source, detection, and timing parameters of one simulated run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig<T> {
    /// Stokes singles rate, counts/s.
    pub stokes_rate: T,
    /// Anti-Stokes singles rate, counts/s.
    pub antistokes_rate: T,
    /// Correlated pair rate, counts/s (before detection efficiencies).
    pub pair_rate: T,
    /// Delay of the wavepacket peak, ns.
    pub peak_delay_ns: T,
    /// Support of the correlated wavepacket, ns.
    pub correlation_window_ns: T,
    pub wavepacket: WavepacketShape<T>,
    pub bin_width_ns: T,
    pub n_bins: usize,
    /// Detection efficiency on the Stokes arm (hologram diffraction).
    pub detection_efficiency_s: T,
    /// Detection efficiency on the anti-Stokes arm.
    pub detection_efficiency_as: T,
    pub duration_s: T,
    pub seed: u64,
}

impl<T: Real> SourceConfig<T> {
    /// Experiment-anchored defaults: singles 1.4e4 and 4.0e4 /s, 2 ns bins,
    /// 160 bins, wavepacket peaking at 12 ns inside a 30 ns window, 40%
    /// diffraction efficiency per arm, 1000 s accumulation, and the pair rate
    /// calibrated so the peak correlation reads g(12 ns) = 1.57.
    pub fn paper_defaults() -> Self {
        let mut cfg = Self {
            stokes_rate: real(1.4e4),
            antistokes_rate: real(4.0e4),
            pair_rate: T::zero(),
            peak_delay_ns: real(12.0),
            correlation_window_ns: real(30.0),
            wavepacket: WavepacketShape {
                rise_ns: real(4.0),
                decay_ns: real(8.0),
            },
            bin_width_ns: real(2.0),
            n_bins: 160,
            detection_efficiency_s: real(0.4),
            detection_efficiency_as: real(0.4),
            duration_s: real(1000.0),
            seed: 7,
        };
        cfg.pair_rate = calibrated_pair_rate(&cfg, real(1.57));
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bin_width_ns > T::zero()) {
            return Err(Error::invalid("bin_width_ns must be > 0"));
        }
        if self.n_bins == 0 {
            return Err(Error::invalid("n_bins must be >= 1"));
        }
        if self.stokes_rate < T::zero() || self.antistokes_rate < T::zero() {
            return Err(Error::invalid("singles rates must be non-negative"));
        }
        if self.pair_rate < T::zero() || self.pair_rate > self.stokes_rate.min(self.antistokes_rate)
        {
            return Err(Error::invalid(
                "pair_rate must lie in [0, min(stokes_rate, antistokes_rate)]",
            ));
        }
        for eta in [self.detection_efficiency_s, self.detection_efficiency_as] {
            if eta < T::zero() || eta > T::one() {
                return Err(Error::invalid("detection efficiencies must lie in [0, 1]"));
            }
        }
        if !(self.duration_s > T::zero()) || !self.duration_s.is_finite() {
            return Err(Error::invalid("duration_s must be positive and finite"));
        }
        if !(self.wavepacket.rise_ns >= T::zero()) || !(self.wavepacket.decay_ns > T::zero()) {
            return Err(Error::invalid("wavepacket constants must be positive"));
        }
        if !(self.peak_delay_ns >= T::zero()) || self.peak_delay_ns > self.correlation_window_ns {
            return Err(Error::invalid(
                "peak_delay_ns must lie within the correlation window",
            ));
        }
        Ok(())
    }

    /// Flat accidental-coincidence rate per bin, counts/s.
    pub fn accidental_rate_per_bin(&self) -> T {
        self.stokes_rate * self.antistokes_rate * self.bin_width_ns * real(1e-9)
    }
}

/// Integral of the unnormalized wavepacket density over `[a, b]` (exact,
/// piecewise exponential: `exp((τ-peak)/rise)` below the peak,
/// `exp(-(τ-peak)/decay)` above it, zero outside `[0, window]`).
fn wavepacket_mass<T: Real>(cfg: &SourceConfig<T>, a: T, b: T) -> T {
    let a = a.max(T::zero());
    let b = b.min(cfg.correlation_window_ns);
    if !(b > a) {
        return T::zero();
    }
    let peak = cfg.peak_delay_ns;
    let mut total = T::zero();
    // Rising side.
    let lo = a.min(peak);
    let hi = b.min(peak);
    if hi > lo {
        let tr = cfg.wavepacket.rise_ns;
        if tr > T::zero() {
            total += tr * (((hi - peak) / tr).exp() - ((lo - peak) / tr).exp());
        }
    }
    // Decaying side.
    let lo = a.max(peak);
    let hi = b.max(peak);
    if hi > lo {
        let td = cfg.wavepacket.decay_ns;
        total += td * ((-(lo - peak) / td).exp() - (-(hi - peak) / td).exp());
    }
    total
}

/// Per-bin probability masses `W(τ)` of the pair wavepacket: bin `i` covers
/// `[i·Δ, (i+1)·Δ)` ns and is labeled by its left edge `τ_i = i·Δ`.
pub fn bin_probability_masses<T: Real>(cfg: &SourceConfig<T>) -> Vec<T> {
    let norm = wavepacket_mass(cfg, T::zero(), cfg.correlation_window_ns);
    (0..cfg.n_bins)
        .map(|i| {
            let lo = cfg.bin_width_ns * real(i as f64);
            let hi = lo + cfg.bin_width_ns;
            if norm > T::zero() {
                wavepacket_mass(cfg, lo, hi) / norm
            } else {
                T::zero()
            }
        })
        .collect()
}

/// Expected (real-valued) counts per bin for one run.
pub fn expected_histogram<T: Real>(cfg: &SourceConfig<T>) -> Result<Vec<T>> {
    cfg.validate()?;
    let accidental = cfg.accidental_rate_per_bin();
    let eta = cfg.detection_efficiency_s * cfg.detection_efficiency_as;
    let masses = bin_probability_masses(cfg);
    Ok(masses
        .into_iter()
        .map(|w| cfg.duration_s * (accidental + cfg.pair_rate * eta * w))
        .collect())
}

/// Pair rate that puts the peak-bin correlation `g(peak) = N(peak)/bg` at
/// `target_g` in expectation (the `pair_rate` field of `cfg` is ignored).
pub fn calibrated_pair_rate<T: Real>(cfg: &SourceConfig<T>, target_g: T) -> T {
    let masses = bin_probability_masses(cfg);
    let peak_bin = (cfg.peak_delay_ns / cfg.bin_width_ns)
        .floor()
        .to_usize()
        .unwrap_or(0)
        .min(cfg.n_bins - 1);
    let w_peak = masses[peak_bin];
    let eta = cfg.detection_efficiency_s * cfg.detection_efficiency_as;
    if w_peak <= T::zero() || eta <= T::zero() {
        return T::zero();
    }
    (target_g - T::one()) * cfg.accidental_rate_per_bin() / (eta * w_peak)
}

/// Time-resolved coincidence histogram: fixed bin width, fixed bin count.
/// Bin `i` is labeled by its left edge `tau_ns(i) = i · bin_width_ns`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceHistogram<T> {
    pub bin_width_ns: T,
    pub duration_s: T,
    pub counts: Vec<u64>,
}

impl<T: Real> CoincidenceHistogram<T> {
    pub fn tau_ns(&self, bin: usize) -> T {
        self.bin_width_ns * real(bin as f64)
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    /// Serialize to the histogram CSV format:
    ///
    /// ```text
    /// # optional comments
    /// bin_width_ns,duration_s
    /// 2,1000
    /// bin_index,tau_ns,counts
    /// 0,0,1107
    /// ...
    /// ```
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> std::io::Result<()> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "bin_width_ns,duration_s")?;
        writeln!(out, "{},{}", self.bin_width_ns, self.duration_s)?;
        writeln!(out, "bin_index,tau_ns,counts")?;
        for (i, &n) in self.counts.iter().enumerate() {
            writeln!(out, "{i},{},{n}", self.tau_ns(i))?;
        }
        Ok(())
    }

    /// Parse the CSV format written by [`write_csv`](Self::write_csv); lines
    /// starting with '#' are ignored.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input
            .lines()
            .collect::<std::io::Result<Vec<String>>>()
            .map_err(|e| Error::parse(format!("histogram CSV: {e}")))?
            .into_iter()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::parse("histogram CSV: empty file"))?;
        if header != "bin_width_ns,duration_s" {
            return Err(Error::parse(format!(
                "histogram CSV: expected header 'bin_width_ns,duration_s', got '{header}'"
            )));
        }
        let meta = lines
            .next()
            .ok_or_else(|| Error::parse("histogram CSV: missing metadata row"))?;
        let parts: Vec<&str> = meta.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::parse("histogram CSV: malformed metadata row"));
        }
        let bin_width_ns = parse_scalar(parts[0])?;
        let duration_s = parse_scalar(parts[1])?;
        let columns = lines
            .next()
            .ok_or_else(|| Error::parse("histogram CSV: missing column header"))?;
        if columns != "bin_index,tau_ns,counts" {
            return Err(Error::parse(format!(
                "histogram CSV: expected columns 'bin_index,tau_ns,counts', got '{columns}'"
            )));
        }
        let mut counts = Vec::new();
        for (row, line) in lines.enumerate() {
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::parse(format!("histogram CSV row {row}: '{line}'")));
            }
            let idx: usize = parts[0]
                .parse()
                .map_err(|_| Error::parse(format!("histogram CSV row {row}: bad index")))?;
            if idx != row {
                return Err(Error::parse(format!(
                    "histogram CSV row {row}: non-contiguous bin index {idx}"
                )));
            }
            let n: u64 = parts[2]
                .parse()
                .map_err(|_| Error::parse(format!("histogram CSV row {row}: bad count")))?;
            counts.push(n);
        }
        if counts.is_empty() {
            return Err(Error::parse("histogram CSV: no bins"));
        }
        Ok(Self {
            bin_width_ns,
            duration_s,
            counts,
        })
    }
}

fn parse_scalar<T: Real>(s: &str) -> Result<T> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::parse(format!("bad numeric field '{s}'")))?;
    Ok(real(v))
}

fn sample_poisson<T: Real>(rng: &mut ChaCha8Rng, mean: T) -> Result<u64> {
    let mu = mean.to_f64().unwrap_or(f64::NAN);
    if !mu.is_finite() || mu > MAX_EXPECTED {
        return Err(Error::invalid(format!(
            "expected count {mu} per bin overflows the counting model"
        )));
    }
    if mu <= 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mu).map_err(|e| Error::numerical(format!("poisson: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// Draw one histogram: every bin is an independent Poisson sample around the
/// expected counts, deterministic in `cfg.seed`.
pub fn simulate_histogram<T: Real>(cfg: &SourceConfig<T>) -> Result<CoincidenceHistogram<T>> {
    let expected = expected_histogram(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let counts = expected
        .into_iter()
        .map(|mu| sample_poisson(&mut rng, mu))
        .collect::<Result<Vec<u64>>>()?;
    Ok(CoincidenceHistogram {
        bin_width_ns: cfg.bin_width_ns,
        duration_s: cfg.duration_s,
        counts,
    })
}

/// Simulate one displacement sweep of the anti-Stokes analyzer with the
/// Stokes analyzer held fixed: per sweep point a full histogram is drawn with
/// the coincidence probability scaling the correlated term, the accidental
/// floor unchanged, and the background-subtracted normalized signal computed
/// exactly as the analysis module defines it. Point `i` uses the derived seed
/// `derive_seed(cfg.seed, i)`.
pub fn simulate_sweep<T: Real>(
    rho: &DensityMatrix4<T>,
    stokes: &AnalyzerSetting<T>,
    antistokes: &AnalyzerSetting<T>,
    x0_list: &[T],
    cfg: &SourceConfig<T>,
    quad: &QuadratureSpec<T>,
) -> Result<Vec<SweepPoint<T>>> {
    if x0_list.is_empty() {
        return Err(Error::invalid("sweep requires at least one displacement"));
    }
    if stokes.side != Side::Stokes || antistokes.side != Side::AntiStokes {
        return Err(Error::invalid(
            "simulate_sweep needs a Stokes analyzer and an anti-Stokes template",
        ));
    }
    cfg.validate()?;
    let accidental = cfg.accidental_rate_per_bin();
    let eta = cfg.detection_efficiency_s * cfg.detection_efficiency_as;
    let masses = bin_probability_masses(cfg);
    let mut points = Vec::with_capacity(x0_list.len());
    for (i, &x0) in x0_list.iter().enumerate() {
        let p = coincidence_probability(rho, stokes, &antistokes.with_displacement(x0), quad)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, i as u64));
        let counts = masses
            .iter()
            .map(|&w| {
                let mu = cfg.duration_s * (accidental + cfg.pair_rate * eta * p * w);
                sample_poisson(&mut rng, mu)
            })
            .collect::<Result<Vec<u64>>>()?;
        let hist = CoincidenceHistogram {
            bin_width_ns: cfg.bin_width_ns,
            duration_s: cfg.duration_s,
            counts,
        };
        let (signal, uncertainty) = normalized_signal_with_uncertainty(&hist)?;
        points.push(SweepPoint {
            x0,
            signal,
            uncertainty,
        });
    }
    Ok(points)
}

/// The exact expectation of [`simulate_sweep`]'s normalized signal at each
/// displacement, with zero uncertainty: the noiseless model curve
/// `pair_rate · η_s · η_as · p(x0) · W_cov / accidental_rate`, where `W_cov`
/// is the wavepacket mass inside the signal window.
pub fn expected_sweep<T: Real>(
    rho: &DensityMatrix4<T>,
    stokes: &AnalyzerSetting<T>,
    antistokes: &AnalyzerSetting<T>,
    x0_list: &[T],
    cfg: &SourceConfig<T>,
    quad: &QuadratureSpec<T>,
) -> Result<Vec<SweepPoint<T>>> {
    if x0_list.is_empty() {
        return Err(Error::invalid("sweep requires at least one displacement"));
    }
    if stokes.side != Side::Stokes || antistokes.side != Side::AntiStokes {
        return Err(Error::invalid(
            "expected_sweep needs a Stokes analyzer and an anti-Stokes template",
        ));
    }
    cfg.validate()?;
    let accidental = cfg.accidental_rate_per_bin();
    if !(accidental > T::zero()) {
        return Err(Error::numerical(
            "accidental rate is zero; normalized signal undefined",
        ));
    }
    let eta = cfg.detection_efficiency_s * cfg.detection_efficiency_as;
    let masses = bin_probability_masses(cfg);
    let covered: T = crate::histogram_analysis::signal_bin_indices(cfg.bin_width_ns, cfg.n_bins)?
        .into_iter()
        .map(|i| masses[i])
        .sum();
    x0_list
        .iter()
        .map(|&x0| {
            let p = coincidence_probability(rho, stokes, &antistokes.with_displacement(x0), quad)?;
            Ok(SweepPoint {
                x0,
                signal: cfg.pair_rate * eta * p * covered / accidental,
                uncertainty: T::zero(),
            })
        })
        .collect()
}

/// Write sweep points as CSV (`x0,signal,uncertainty`), with optional leading
/// '#' comments.
pub fn write_sweep_csv<T: Real, W: Write>(
    points: &[SweepPoint<T>],
    mut out: W,
    comments: &[String],
) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "x0,signal,uncertainty")?;
    for p in points {
        writeln!(out, "{},{},{}", p.x0, p.signal, p.uncertainty)?;
    }
    Ok(())
}

/// Parse the sweep CSV format written by [`write_sweep_csv`].
pub fn read_sweep_csv<T: Real, R: BufRead>(input: R) -> Result<Vec<SweepPoint<T>>> {
    let mut lines = input
        .lines()
        .collect::<std::io::Result<Vec<String>>>()
        .map_err(|e| Error::parse(format!("sweep CSV: {e}")))?
        .into_iter()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::parse("sweep CSV: empty file"))?;
    if header != "x0,signal,uncertainty" {
        return Err(Error::parse(format!(
            "sweep CSV: expected header 'x0,signal,uncertainty', got '{header}'"
        )));
    }
    let mut points = Vec::new();
    for (row, line) in lines.enumerate() {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::parse(format!("sweep CSV row {row}: '{line}'")));
        }
        points.push(SweepPoint {
            x0: parse_scalar(parts[0])?,
            signal: parse_scalar(parts[1])?,
            uncertainty: parse_scalar(parts[2])?,
        });
    }
    if points.is_empty() {
        return Err(Error::parse("sweep CSV: no data rows"));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histogram_analysis::{g_function, normalized_signal};
    use crate::oam_optics::{DiffractionOrder, HologramSetting, LgMode};
    use crate::quantum_state::bell_state;
    use approx::assert_abs_diff_eq;

    fn paper() -> SourceConfig<f64> {
        SourceConfig::paper_defaults()
    }

    #[test]
    fn accidental_rate_matches_arithmetic() {
        // 1.4e4 * 4.0e4 * 2e-9 = 1.12 counts/s per bin.
        assert_abs_diff_eq!(paper().accidental_rate_per_bin(), 1.12, epsilon = 1e-12);
    }

    #[test]
    fn masses_are_normalized_and_peak_at_the_peak_bin() {
        let cfg = paper();
        let masses = bin_probability_masses(&cfg);
        let total: f64 = masses.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        let peak_bin = (cfg.peak_delay_ns / cfg.bin_width_ns) as usize;
        let max = masses.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(masses[peak_bin], max);
        // No mass beyond the correlation window.
        let beyond: f64 = masses[16..].iter().sum();
        assert_eq!(beyond, 0.0);
    }

    #[test]
    fn expected_histogram_flat_without_pairs() {
        let mut cfg = paper();
        cfg.pair_rate = 0.0;
        let exp = expected_histogram(&cfg).unwrap();
        for &e in &exp {
            assert_abs_diff_eq!(e, 1.12 * cfg.duration_s, epsilon = 1e-9);
        }
    }

    #[test]
    fn calibration_puts_g_at_target_in_expectation() {
        let cfg = paper();
        let exp = expected_histogram(&cfg).unwrap();
        let peak_bin = (cfg.peak_delay_ns / cfg.bin_width_ns) as usize;
        let bg = 1.12 * cfg.duration_s;
        assert_abs_diff_eq!(exp[peak_bin] / bg, 1.57, epsilon = 1e-12);
    }

    #[test]
    fn simulation_is_deterministic_per_seed() {
        let cfg = paper();
        let a = simulate_histogram(&cfg).unwrap();
        let b = simulate_histogram(&cfg).unwrap();
        assert_eq!(a, b);
        let mut other = cfg;
        other.seed = cfg.seed + 1;
        assert_ne!(simulate_histogram(&other).unwrap(), a);
    }

    #[test]
    fn sampled_bins_track_expectations() {
        // Law of large numbers: per-bin counts within 5 sigma of expectation.
        let cfg = paper();
        let exp = expected_histogram(&cfg).unwrap();
        let hist = simulate_histogram(&cfg).unwrap();
        for (i, (&n, &mu)) in hist.counts.iter().zip(&exp).enumerate() {
            let dev = (n as f64 - mu).abs() / mu.sqrt();
            assert!(dev < 5.0, "bin {i}: {n} vs {mu} ({dev:.1} sigma)");
        }
    }

    #[test]
    fn absurd_durations_are_rejected() {
        let mut cfg = paper();
        cfg.duration_s = 1e22;
        assert!(simulate_histogram(&cfg).is_err());
        cfg.duration_s = f64::INFINITY;
        assert!(simulate_histogram(&cfg).is_err());
    }

    #[test]
    fn pure_noise_run_has_unit_g() {
        let mut cfg = paper();
        cfg.pair_rate = 0.0;
        cfg.seed = 3;
        let hist = simulate_histogram(&cfg).unwrap();
        // Flat statistics: g at the nominal peak within a few sigma of 1.
        let g = g_function(&hist, 12.0).unwrap();
        assert!((g - 1.0).abs() < 0.12, "g = {g}");
        let n = normalized_signal(&hist).unwrap();
        assert!(n.abs() < 0.5, "N = {n}");
    }

    #[test]
    fn histogram_csv_roundtrip() {
        let cfg = paper();
        let hist = simulate_histogram(&cfg).unwrap();
        let mut buf = Vec::new();
        hist.write_csv(&mut buf, &["seed=7".into()]).unwrap();
        let back = CoincidenceHistogram::<f64>::read_csv(&buf[..]).unwrap();
        assert_eq!(hist, back);
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(CoincidenceHistogram::<f64>::read_csv(&b"nonsense"[..]).is_err());
        assert!(CoincidenceHistogram::<f64>::read_csv(&b""[..]).is_err());
        let missing_rows = b"bin_width_ns,duration_s\n2,1000\nbin_index,tau_ns,counts\n";
        assert!(CoincidenceHistogram::<f64>::read_csv(&missing_rows[..]).is_err());
    }

    #[test]
    fn sweep_background_is_displacement_independent() {
        let quad = QuadratureSpec::default();
        let rho = DensityMatrix4::from_pure(&bell_state::<f64>());
        let stokes = AnalyzerSetting::new(
            HologramSetting::new(DiffractionOrder::Minus, 0.0),
            LgMode::lg0(0, 0.8).unwrap(),
            Side::Stokes,
        )
        .unwrap();
        let anti = AnalyzerSetting::new(
            HologramSetting::new(DiffractionOrder::Plus, 0.0),
            LgMode::lg0(0, 0.8).unwrap(),
            Side::AntiStokes,
        )
        .unwrap();
        let mut cfg = paper();
        cfg.duration_s = 500.0;

        // Rebuild the far-tail statistics per point; the accidental floor must
        // not depend on the swept displacement.
        let x0s = [-1.6, 0.0, 1.6];
        let accidental = cfg.accidental_rate_per_bin();
        let eta = cfg.detection_efficiency_s * cfg.detection_efficiency_as;
        let masses = bin_probability_masses(&cfg);
        for (i, &x0) in x0s.iter().enumerate() {
            let p =
                coincidence_probability(&rho, &stokes, &anti.with_displacement(x0), &quad).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, i as u64));
            let counts: Vec<u64> = masses
                .iter()
                .map(|&w| {
                    let mu = cfg.duration_s * (accidental + cfg.pair_rate * eta * p * w);
                    sample_poisson(&mut rng, mu).unwrap()
                })
                .collect();
            let tail_mean = counts[26..].iter().sum::<u64>() as f64 / (counts.len() - 26) as f64;
            let expected = accidental * cfg.duration_s;
            let sigma = (expected / (counts.len() - 26) as f64).sqrt();
            assert!(
                (tail_mean - expected).abs() < 5.0 * sigma,
                "tail {tail_mean} vs {expected} at x0 = {x0}"
            );
        }

        // And the driver reproduces itself bit-for-bit.
        let pts1 = simulate_sweep(&rho, &stokes, &anti, &x0s, &cfg, &quad).unwrap();
        let pts2 = simulate_sweep(&rho, &stokes, &anti, &x0s, &cfg, &quad).unwrap();
        assert_eq!(pts1, pts2);
    }

    #[test]
    fn sweep_signal_is_proportional_to_the_projection() {
        let quad = QuadratureSpec::default();
        let rho = DensityMatrix4::from_pure(&bell_state::<f64>());
        let stokes = AnalyzerSetting::new(
            HologramSetting::new(DiffractionOrder::Minus, 0.0),
            LgMode::lg0(0, 0.8).unwrap(),
            Side::Stokes,
        )
        .unwrap();
        let anti = AnalyzerSetting::new(
            HologramSetting::new(DiffractionOrder::Plus, 0.0),
            LgMode::lg0(0, 0.8).unwrap(),
            Side::AntiStokes,
        )
        .unwrap();
        let mut cfg = paper();
        cfg.duration_s = 500.0;
        let x0s: Vec<f64> = (-4..=4).map(|i| i as f64 * 0.4).collect();

        let clean = expected_sweep(&rho, &stokes, &anti, &x0s, &cfg, &quad).unwrap();
        // Noiseless signal tracks the coincidence probability exactly.
        let ratios: Vec<f64> = x0s
            .iter()
            .zip(&clean)
            .map(|(&x0, pt)| {
                let p = coincidence_probability(&rho, &stokes, &anti.with_displacement(x0), &quad)
                    .unwrap();
                pt.signal / p
            })
            .collect();
        for r in &ratios {
            assert_abs_diff_eq!(*r, ratios[0], epsilon = 1e-9);
        }
        assert!(clean.iter().any(|p| p.signal > 0.5));

        // Sampled sweep scatters around the expectation within error bars.
        let noisy = simulate_sweep(&rho, &stokes, &anti, &x0s, &cfg, &quad).unwrap();
        for (c, n) in clean.iter().zip(&noisy) {
            assert!(
                (c.signal - n.signal).abs() < 5.0 * n.uncertainty.max(0.05),
                "expected {} sampled {} ± {}",
                c.signal,
                n.signal,
                n.uncertainty
            );
        }
    }

    #[test]
    fn sweep_shapes_for_the_three_stokes_settings() {
        // Expected-value curves for the Bell state with the Stokes analyzer
        // centered, far displaced, and at the balanced displacements.
        let quad = QuadratureSpec::default();
        let rho = DensityMatrix4::from_pure(&bell_state::<f64>());
        let w = 0.8;
        let stokes = |x0: f64| {
            AnalyzerSetting::new(
                HologramSetting::new(DiffractionOrder::Minus, x0),
                LgMode::lg0(0, w).unwrap(),
                Side::Stokes,
            )
            .unwrap()
        };
        let anti = AnalyzerSetting::new(
            HologramSetting::new(DiffractionOrder::Plus, 0.0),
            LgMode::lg0(0, w).unwrap(),
            Side::AntiStokes,
        )
        .unwrap();
        let cfg = paper();
        let x0s: Vec<f64> = (-6..=6).map(|i| i as f64 * 0.3 * w).collect();
        let mid = x0s.len() / 2;
        let curve = |s: &AnalyzerSetting<f64>| -> Vec<f64> {
            expected_sweep(&rho, s, &anti, &x0s, &cfg, &quad)
                .unwrap()
                .into_iter()
                .map(|p| p.signal)
                .collect()
        };

        // Centered Stokes (projects |1>): dip-free curve peaking at x0 = 0.
        let peaked = curve(&stokes(0.0));
        let max = peaked.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(peaked[mid], max);
        assert!(peaked.iter().all(|&v| v >= 0.0));

        // Far-displaced Stokes (projects |0>): zero at x0 = 0, rising outward.
        let dipped = curve(&stokes(20.0 * w));
        assert!(dipped[mid] < 2e-3 * dipped[0], "center {}", dipped[mid]);
        assert!(dipped[0] > 0.3 && dipped[x0s.len() - 1] > 0.3);

        // Balanced ± superposition settings: mirror-image asymmetric curves.
        let xb = crate::quantum_state::balanced_displacement(&stokes(0.0), &quad).unwrap();
        let plus = curve(&stokes(xb));
        let minus = curve(&stokes(-xb));
        let mut asym: f64 = 0.0;
        for i in 0..x0s.len() {
            assert_abs_diff_eq!(plus[i], minus[x0s.len() - 1 - i], epsilon = 1e-6);
            asym = asym.max((plus[i] - minus[i]).abs());
        }
        assert!(asym > 0.05 * max, "balanced curves are not asymmetric");
    }

    #[test]
    fn sweep_csv_roundtrip() {
        let pts = vec![
            SweepPoint {
                x0: -0.5,
                signal: 0.25,
                uncertainty: 0.05,
            },
            SweepPoint {
                x0: 0.5,
                signal: 1.25,
                uncertainty: 0.06,
            },
        ];
        let mut buf = Vec::new();
        write_sweep_csv(&pts, &mut buf, &["demo".into()]).unwrap();
        let back: Vec<SweepPoint<f64>> = read_sweep_csv(&buf[..]).unwrap();
        assert_eq!(pts, back);
    }
}
