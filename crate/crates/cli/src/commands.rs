//! The seven pipelines behind the subcommands. Every artifact embeds the
//! configuration hash and seed; identical configurations produce
//! byte-identical outputs.

use std::fs;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use oamsim_core::coincidence_sim::{
    expected_sweep, read_sweep_csv, simulate_histogram, simulate_sweep, write_sweep_csv,
    CoincidenceHistogram,
};
use oamsim_core::histogram_analysis::{
    estimate_background, fit_sweep, g_function, normalized_signal_with_uncertainty, SweepFit,
    DEFAULT_TAIL_START_NS,
};
use oamsim_core::oam_optics::{DiffractionOrder, HologramSetting, LgMode};
use oamsim_core::quantum_state::{
    balanced_displacement, bell_state, concurrence, entanglement_of_formation, fidelity,
    AnalyzerSetting, Side,
};
use oamsim_core::tomography::{
    mle_reconstruct, simulate_tomography_counts, MeasurementRecord, MleOptions, TomographyResult,
};
use oamsim_core::Density64;

use crate::config::SCHEMA_VERSION;
use crate::{
    BalancedSign, CliError, Context, HistAnalyzeArgs, HistSimArgs, ReportArgs, SweepFitArgs,
    SweepSimArgs, TomoReconstructArgs, TomoSimArgs,
};

/// Provenance header embedded in every JSON artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub schema_version: u32,
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    fn of(ctx: &Context) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config_sha256: ctx.config_sha256.clone(),
            seed: ctx.config.seed,
        }
    }

    fn comments(&self) -> Vec<String> {
        vec![
            format!("config_sha256={}", self.config_sha256),
            format!("seed={}", self.seed),
        ]
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn parse_order(v: i32) -> Result<DiffractionOrder, CliError> {
    DiffractionOrder::from_i32(v).map_err(|e| CliError::Config(e.to_string()))
}

fn analyzer(
    ctx: &Context,
    side: Side,
    order: DiffractionOrder,
    x0: f64,
) -> Result<AnalyzerSetting<f64>, CliError> {
    let mode = LgMode::lg0(0, ctx.config.waist_mm).map_err(CliError::from)?;
    AnalyzerSetting::new(HologramSetting::new(order, x0), mode, side).map_err(CliError::from)
}

/// One doubled-node convergence check at a representative displaced point;
/// quadrature trouble surfaces as a numerical failure (exit 3) instead of a
/// silently wrong sweep.
fn validate_quadrature(ctx: &Context) -> Result<(), CliError> {
    let quad = ctx.config.quadrature_spec()?;
    let w = ctx.config.waist_mm;
    let collected = oamsim_core::oam_optics::TransverseField::from_mode(
        LgMode::lg0(0, w).map_err(CliError::from)?,
    );
    let input = oamsim_core::oam_optics::TransverseField::stokes_superposition(
        std::f64::consts::FRAC_PI_4,
        w,
    )
    .map_err(CliError::from)?;
    let holo = HologramSetting::new(DiffractionOrder::Minus, w);
    oamsim_core::oam_optics::projection_amplitude_checked(&collected, &input, &holo, &quad)?;
    Ok(())
}

pub fn sweep_simulate(ctx: &Context, args: &SweepSimArgs) -> Result<(), CliError> {
    if args.points < 2 {
        return Err(CliError::Config("sweep needs at least 2 points".into()));
    }
    validate_quadrature(ctx)?;
    let quad = ctx.config.quadrature_spec()?;
    let rho = ctx.config.density_matrix()?;
    let stokes_order = parse_order(args.stokes_order)?;
    let antistokes_order = parse_order(args.antistokes_order)?;

    let stokes_x0 = if args.stokes_far {
        20.0 * ctx.config.waist_mm
    } else if let Some(sign) = args.stokes_balanced {
        let template = analyzer(ctx, Side::Stokes, stokes_order, 0.0)?;
        let x0 = balanced_displacement(&template, &quad)?;
        match sign {
            BalancedSign::Plus => x0,
            BalancedSign::Minus => -x0,
        }
    } else {
        args.stokes_x0
    };

    let stokes = analyzer(ctx, Side::Stokes, stokes_order, stokes_x0)?;
    let antistokes = analyzer(ctx, Side::AntiStokes, antistokes_order, 0.0)?;

    let step = (args.x0_max - args.x0_min) / (args.points - 1) as f64;
    let x0s: Vec<f64> = (0..args.points)
        .map(|i| args.x0_min + step * i as f64)
        .collect();

    let mut source = ctx.config.source_config();
    source.duration_s = args.point_duration_s;
    let points = if args.noiseless {
        expected_sweep(&rho, &stokes, &antistokes, &x0s, &source, &quad)?
    } else {
        simulate_sweep(&rho, &stokes, &antistokes, &x0s, &source, &quad)?
    };

    let provenance = Provenance::of(ctx);
    let mut comments = provenance.comments();
    comments.push(format!(
        "stokes_x0_mm={stokes_x0} stokes_order={} antistokes_order={}",
        args.stokes_order, args.antistokes_order
    ));
    comments.push(format!(
        "point_duration_s={} noiseless={}",
        args.point_duration_s, args.noiseless
    ));

    let path = ctx.artifact_path(&args.output);
    let mut buf = Vec::new();
    write_sweep_csv(&points, &mut buf, &comments)?;
    fs::write(&path, buf)?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct SweepFitArtifact {
    #[serde(flatten)]
    provenance: Provenance,
    #[serde(flatten)]
    fit: SweepFit<f64>,
}

pub fn sweep_fit(ctx: &Context, args: &SweepFitArgs) -> Result<(), CliError> {
    validate_quadrature(ctx)?;
    let quad = ctx.config.quadrature_spec()?;
    let input = ctx.artifact_path(&args.input);
    let file = fs::File::open(&input)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", input.display())))?;
    let points = read_sweep_csv::<f64, _>(BufReader::new(file))?;
    let order = parse_order(args.order)?;
    let fit = fit_sweep(
        &points,
        &SweepFit::initial_guess(args.theta0, args.w0),
        order,
        &quad,
    )?;
    let artifact = SweepFitArtifact {
        provenance: Provenance::of(ctx),
        fit,
    };
    write_json(&ctx.artifact_path(&args.output), &artifact)?;
    println!(
        "fit: theta = {:.6} rad, w = {:.6} mm, residual = {:.3e}{}",
        fit.theta,
        fit.waist,
        fit.residual,
        if fit.degenerate {
            " (±θ degenerate)"
        } else {
            ""
        }
    );
    Ok(())
}

pub fn hist_simulate(ctx: &Context, args: &HistSimArgs) -> Result<(), CliError> {
    let source = ctx.config.source_config();
    let hist = simulate_histogram(&source)?;
    let provenance = Provenance::of(ctx);
    let path = ctx.artifact_path(&args.output);
    let mut buf = Vec::new();
    hist.write_csv(&mut buf, &provenance.comments())?;
    fs::write(&path, buf)?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct HistAnalysisArtifact {
    #[serde(flatten)]
    provenance: Provenance,
    tau_ns: f64,
    g: f64,
    background_per_bin: f64,
    normalized_signal: f64,
    normalized_signal_uncertainty: f64,
}

pub fn hist_analyze(ctx: &Context, args: &HistAnalyzeArgs) -> Result<(), CliError> {
    let input = ctx.artifact_path(&args.input);
    let file = fs::File::open(&input)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", input.display())))?;
    let hist = CoincidenceHistogram::<f64>::read_csv(BufReader::new(file))?;
    let tau = args.tau_ns.unwrap_or(ctx.config.source.peak_delay_ns);
    let g = g_function(&hist, tau)?;
    let background = estimate_background(&hist, DEFAULT_TAIL_START_NS)?;
    let (signal, uncertainty) = normalized_signal_with_uncertainty(&hist)?;
    let artifact = HistAnalysisArtifact {
        provenance: Provenance::of(ctx),
        tau_ns: tau,
        g,
        background_per_bin: background,
        normalized_signal: signal,
        normalized_signal_uncertainty: uncertainty,
    };
    write_json(&ctx.artifact_path(&args.output), &artifact)?;
    println!("g({tau} ns) = {g:.4}");
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct RecordsArtifact {
    #[serde(flatten)]
    provenance: Provenance,
    records: Vec<MeasurementRecord<f64>>,
}

pub fn tomo_simulate(ctx: &Context, args: &TomoSimArgs) -> Result<(), CliError> {
    if !(args.counts_per_setting >= 0.0) {
        return Err(CliError::Config("counts-per-setting must be >= 0".into()));
    }
    let rho = ctx.config.density_matrix()?;
    let records = simulate_tomography_counts(&rho, args.counts_per_setting, ctx.config.seed)?;
    let artifact = RecordsArtifact {
        provenance: Provenance::of(ctx),
        records,
    };
    write_json(&ctx.artifact_path(&args.output), &artifact)
}

fn load_records(path: &Path) -> Result<Vec<MeasurementRecord<f64>>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))?;
    // Accept the wrapped artifact or a bare list of records.
    if let Ok(artifact) = serde_json::from_str::<RecordsArtifact>(&text) {
        return Ok(artifact.records);
    }
    serde_json::from_str::<Vec<MeasurementRecord<f64>>>(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct TomographyArtifact {
    #[serde(flatten)]
    provenance: Provenance,
    #[serde(flatten)]
    result: TomographyResult<f64>,
}

pub fn tomo_reconstruct(ctx: &Context, args: &TomoReconstructArgs) -> Result<(), CliError> {
    let records = load_records(&ctx.artifact_path(&args.input))?;
    let opts = MleOptions {
        max_iterations: args.max_iter,
        tolerance: args.tol,
        record_history: false,
    };
    let result = mle_reconstruct(&records, &opts)?;
    println!(
        "reconstruction: F = {:.4}, C = {:.4}, EoF = {:.4} ({} iterations{})",
        result.fidelity_to_bell,
        result.concurrence,
        result.entanglement_of_formation,
        result.iterations,
        if result.converged {
            ""
        } else {
            ", NOT converged"
        }
    );
    let artifact = TomographyArtifact {
        provenance: Provenance::of(ctx),
        result,
    };
    write_json(&ctx.artifact_path(&args.output), &artifact)
}

#[derive(Serialize)]
struct StateMeasures {
    fidelity_to_bell: f64,
    concurrence: f64,
    entanglement_of_formation: f64,
}

fn measures_of(rho: &Density64) -> StateMeasures {
    let c = concurrence(rho);
    StateMeasures {
        fidelity_to_bell: fidelity(rho, &bell_state()),
        concurrence: c,
        entanglement_of_formation: entanglement_of_formation(rho),
    }
}

#[derive(Serialize)]
struct ReportArtifact {
    #[serde(flatten)]
    provenance: Provenance,
    /// Measures of the configured state itself.
    state: StateMeasures,
    /// Peak correlation of the simulated histogram run.
    g_tau_ns: f64,
    g: f64,
    /// Measures reconstructed by tomography on simulated records.
    tomography: StateMeasures,
    tomography_iterations: usize,
    tomography_converged: bool,
}

pub fn report(ctx: &Context, args: &ReportArgs) -> Result<(), CliError> {
    let rho = ctx.config.density_matrix()?;
    let state = measures_of(&rho);

    let source = ctx.config.source_config();
    let hist = simulate_histogram(&source)?;
    let tau = ctx.config.source.peak_delay_ns;
    let g = g_function(&hist, tau)?;

    let records = simulate_tomography_counts(&rho, args.counts_per_setting, ctx.config.seed)?;
    let result = mle_reconstruct(&records, &MleOptions::default())?;

    let artifact = ReportArtifact {
        provenance: Provenance::of(ctx),
        state,
        g_tau_ns: tau,
        g,
        tomography: measures_of(&result.rho),
        tomography_iterations: result.iterations,
        tomography_converged: result.converged,
    };
    println!(
        "g({tau} ns) = {g:.4}; state F/C/EoF = {:.4}/{:.4}/{:.4}; tomography F/C/EoF = {:.4}/{:.4}/{:.4}",
        artifact.state.fidelity_to_bell,
        artifact.state.concurrence,
        artifact.state.entanglement_of_formation,
        artifact.tomography.fidelity_to_bell,
        artifact.tomography.concurrence,
        artifact.tomography.entanglement_of_formation,
    );
    write_json(&ctx.artifact_path(&args.output), &artifact)
}
