//! Experiment dispatch: turns a validated config into result rows.
//!
//! Determinism contract: every Monte Carlo draw comes from a stream derived
//! as `substream(seed, [experiment_tag, grid_index, ...])`, and parallel
//! workers only ever split across independently seeded units whose results
//! are reassembled in index order. Output bytes therefore depend on the
//! config and seed alone, never on the worker count.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use pnc_core::galois::{self, FieldMatrix};
use pnc_core::lattice::{
    alpha_mmse_cf, best_coeffs, decode_integer_combination, integer_combination, phi_map,
    LatticeError, NestedLatticeCode,
};
use pnc_core::modq::{
    comp_rate_modq, compcode_decode, compcode_encode, modnoise_mac, separation_rate_modq,
    CompCode, ModqChannelSpec, ModqError,
};
use pnc_core::netcod::Packet;
use pnc_core::rng::{derive_seed, substream};
use pnc_core::wireless::{
    analytic_rate_points, geteqm3_sweep, simulate_exchange, StrategyId, TwoWaySim, WirelessError,
};

use crate::config::{ExperimentConfig, ExperimentKind, ParsedConfig};
use crate::report::{write_csv, ReportError, ResultRow};

#[derive(Debug)]
pub enum XpError {
    Wireless(WirelessError),
    Lattice(LatticeError),
    Modq(ModqError),
    Field(galois::FieldError),
    Report(ReportError),
    Io(std::io::Error),
}

impl fmt::Display for XpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XpError::Wireless(e) => write!(f, "{}", e),
            XpError::Lattice(e) => write!(f, "{}", e),
            XpError::Modq(e) => write!(f, "{}", e),
            XpError::Field(e) => write!(f, "{}", e),
            XpError::Report(e) => write!(f, "{}", e),
            XpError::Io(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for XpError {}

impl From<WirelessError> for XpError {
    fn from(e: WirelessError) -> Self {
        XpError::Wireless(e)
    }
}

impl From<LatticeError> for XpError {
    fn from(e: LatticeError) -> Self {
        XpError::Lattice(e)
    }
}

impl From<ModqError> for XpError {
    fn from(e: ModqError) -> Self {
        XpError::Modq(e)
    }
}

impl From<galois::FieldError> for XpError {
    fn from(e: galois::FieldError) -> Self {
        XpError::Field(e)
    }
}

impl From<ReportError> for XpError {
    fn from(e: ReportError) -> Self {
        XpError::Report(e)
    }
}

impl From<std::io::Error> for XpError {
    fn from(e: std::io::Error) -> Self {
        XpError::Io(e)
    }
}

/// What a completed run produced.
#[derive(Debug)]
pub struct RunReport {
    pub experiment: ExperimentKind,
    pub rows: usize,
    pub output: PathBuf,
    pub warnings: Vec<String>,
}

const CODE_TAG: u64 = 0xC0DE;
const FADING_TAG: u64 = 0xFAD;

/// Runs the configured experiment and returns its rows in grid order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>, XpError> {
    match config.experiment {
        ExperimentKind::TwowayCurves => twoway_curves(config),
        ExperimentKind::TwowaySim => twoway_sim(config),
        ExperimentKind::Geteqm3 => geteqm3(config),
        ExperimentKind::ModqDemo => modq_demo(config),
        ExperimentKind::CfSingle => cf_single(config),
    }
}

/// Runs an experiment and writes its CSV, honoring CLI overrides.
pub fn run_to_file(
    parsed: &ParsedConfig,
    out_override: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<RunReport, XpError> {
    let mut config = parsed.config.clone();
    if let Some(seed) = seed_override {
        config.seed = seed;
    }
    let rows = run_experiment(&config)?;
    let output = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&config.output));
    if let Some(dir) = output.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    write_csv(&output, &rows)?;
    Ok(RunReport {
        experiment: config.experiment,
        rows: rows.len(),
        output,
        warnings: parsed.warnings.clone(),
    })
}

fn snr_to_power(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

/// Analytic rate curves for all six strategies; noise variance fixed at 1,
/// power swept along the SNR grid.
fn twoway_curves(config: &ExperimentConfig) -> Result<Vec<ResultRow>, XpError> {
    let name = config.experiment.name();
    let points = analytic_rate_points(&StrategyId::ALL, &config.snr_grid())?;
    Ok(points
        .into_iter()
        .map(|p| ResultRow {
            experiment: name.into(),
            label: p.strategy.label().into(),
            snr_db: p.snr_db,
            rate: p.rate,
            error_rate: None,
            halfwidth: p.mc_halfwidth,
            seed: config.seed,
        })
        .collect())
}

/// Draws the shared generator matrix for a config: fixed by the seed, so
/// every grid point uses the same code.
fn shared_generator(config: &ExperimentConfig) -> Result<FieldMatrix, XpError> {
    let mut rng = substream(config.seed, &[config.experiment.tag(), CODE_TAG]);
    // Rejection-sample until the lattice constructor accepts it; the caps in
    // the config keep this cheap.
    loop {
        let g = galois::random_matrix(config.n, config.k, config.q, &mut rng)?;
        match NestedLatticeCode::new(g.clone(), 1.0) {
            Ok(_) => return Ok(g),
            Err(LatticeError::AmbiguousCode) | Err(LatticeError::ZeroGeneratorRow(_)) => continue,
            Err(e) => return Err(e.into()),
        }
    }
}

/// End-to-end exchange simulation for the five simulable strategies.
fn twoway_sim(config: &ExperimentConfig) -> Result<Vec<ResultRow>, XpError> {
    let name = config.experiment.name();
    let generator = shared_generator(config)?;
    let grid = config.snr_grid();
    let tag = config.experiment.tag();
    let per_point: Vec<Result<Vec<ResultRow>, XpError>> = grid
        .par_iter()
        .enumerate()
        .map(|(gi, &snr_db)| {
            let power = snr_to_power(snr_db);
            let code = NestedLatticeCode::new(generator.clone(), power)?;
            let sim = TwoWaySim::new(power, 1.0, code)?;
            let mut rows = Vec::new();
            for strategy in StrategyId::SIMULABLE {
                let point_seed = derive_seed(config.seed, &[tag, gi as u64]);
                let summary = simulate_exchange(strategy, &sim, config.trials, point_seed)?;
                rows.push(ResultRow {
                    experiment: name.into(),
                    label: strategy.label().into(),
                    snr_db,
                    rate: summary.throughput,
                    error_rate: Some(summary.error_rate),
                    halfwidth: Some(summary.halfwidth),
                    seed: config.seed,
                });
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for point in per_point {
        rows.extend(point?);
    }
    Ok(rows)
}

/// Three-transmitter fading sweep: decode-an-equation versus
/// interference-as-noise.
fn geteqm3(config: &ExperimentConfig) -> Result<Vec<ResultRow>, XpError> {
    let name = config.experiment.name();
    let sweep_seed = derive_seed(config.seed, &[config.experiment.tag()]);
    let points = geteqm3_sweep(
        &config.snr_grid(),
        config.users,
        config.trials,
        config.search_radius,
        sweep_seed,
    )?;
    let mut rows = Vec::new();
    for p in points {
        rows.push(ResultRow {
            experiment: name.into(),
            label: "decode_equation".into(),
            snr_db: p.snr_db,
            rate: p.decode_equation,
            error_rate: None,
            halfwidth: Some(p.decode_equation_halfwidth),
            seed: config.seed,
        });
        rows.push(ResultRow {
            experiment: name.into(),
            label: "interference_as_noise".into(),
            snr_db: p.snr_db,
            rate: p.interference_as_noise,
            error_rate: None,
            halfwidth: Some(p.interference_halfwidth),
            seed: config.seed,
        });
    }
    Ok(rows)
}

/// Finite-field demo: the grid value maps to a symbol flip probability
/// `min(1, 10^(-snr_db/10))`, and each point reports the analytic
/// computation and separation rates plus a Monte Carlo function-decoding
/// error rate for the shared-generator code.
fn modq_demo(config: &ExperimentConfig) -> Result<Vec<ResultRow>, XpError> {
    let name = config.experiment.name();
    let tag = config.experiment.tag();
    let mut code_rng = substream(config.seed, &[tag, CODE_TAG]);
    let generator = loop {
        let g = galois::random_matrix(config.n, config.k, config.q, &mut code_rng)?;
        if g.rank() == config.k {
            break g;
        }
    };
    let code = CompCode::new(generator)?;
    let code_rate =
        config.k as f64 * (config.q as f64).log2() / config.n as f64;
    let grid = config.snr_grid();
    let per_point: Vec<Result<Vec<ResultRow>, XpError>> = grid
        .par_iter()
        .enumerate()
        .map(|(gi, &snr_db)| {
            let flip = snr_to_power(-snr_db).min(1.0);
            let spec = ModqChannelSpec::symmetric_flip(config.q, config.users, flip)?;
            let comp = comp_rate_modq(&spec);
            let sep = separation_rate_modq(&spec, config.users)?;
            let one = galois::FieldElement::new(1, config.q)?;
            let mut errors = 0usize;
            for trial in 0..config.trials {
                let mut rng = substream(config.seed, &[tag, gi as u64, trial as u64]);
                let messages: Vec<Packet> = (0..config.users)
                    .map(|_| {
                        galois::random_vector(config.k, config.q, &mut rng).map(Packet::new)
                    })
                    .collect::<Result<_, _>>()?;
                let inputs: Vec<_> = messages
                    .iter()
                    .map(|w| compcode_encode(&code, w, &one))
                    .collect::<Result<_, _>>()?;
                let y = modnoise_mac(&inputs, &mut rng, &spec)?;
                let decoded = compcode_decode(&code, &y)?;
                let mut expect = pnc_core::galois::FieldVector::zero(config.k, config.q)?;
                for w in &messages {
                    expect = expect.add(w.payload())?;
                }
                if decoded.payload() != &expect {
                    errors += 1;
                }
            }
            let error_rate = errors as f64 / config.trials as f64;
            let halfwidth =
                1.96 * (error_rate * (1.0 - error_rate) / config.trials as f64).sqrt();
            Ok(vec![
                ResultRow {
                    experiment: name.into(),
                    label: "comp_rate".into(),
                    snr_db,
                    rate: comp,
                    error_rate: None,
                    halfwidth: None,
                    seed: config.seed,
                },
                ResultRow {
                    experiment: name.into(),
                    label: "separation_rate".into(),
                    snr_db,
                    rate: sep,
                    error_rate: None,
                    halfwidth: None,
                    seed: config.seed,
                },
                ResultRow {
                    experiment: name.into(),
                    label: "mc_decode".into(),
                    snr_db,
                    rate: code_rate,
                    error_rate: Some(error_rate),
                    halfwidth: Some(halfwidth),
                    seed: config.seed,
                },
            ])
        })
        .collect();
    let mut rows = Vec::new();
    for point in per_point {
        rows.extend(point?);
    }
    Ok(rows)
}

fn format_coeff_label(a: &[i64]) -> String {
    let parts: Vec<String> = a.iter().map(|v| v.to_string()).collect();
    format!("a=[{}]", parts.join(";"))
}

/// One fixed fading draw, swept over SNR: the best integer equation at each
/// point (label), its analytic rate, and the Monte Carlo decoding error of
/// that equation with the shared lattice code.
fn cf_single(config: &ExperimentConfig) -> Result<Vec<ResultRow>, XpError> {
    let name = config.experiment.name();
    let tag = config.experiment.tag();
    let generator = shared_generator(config)?;
    let gains: Vec<f64> = {
        let mut rng = substream(config.seed, &[tag, FADING_TAG]);
        use rand_distr::{Distribution, Normal};
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        (0..config.users).map(|_| normal.sample(&mut rng)).collect()
    };
    let grid = config.snr_grid();
    let per_point: Vec<Result<ResultRow, XpError>> = grid
        .par_iter()
        .enumerate()
        .map(|(gi, &snr_db)| {
            let power = snr_to_power(snr_db);
            let sigma2 = 1.0;
            let (coeffs, analytic_rate) =
                best_coeffs(&gains, power, sigma2, config.search_radius)?;
            let code = NestedLatticeCode::new(generator.clone(), power)?;
            let alpha = alpha_mmse_cf(&gains, &coeffs, power, sigma2);
            let mut errors = 0usize;
            for trial in 0..config.trials {
                let mut rng = substream(config.seed, &[tag, gi as u64, trial as u64]);
                use rand_distr::{Distribution, Normal};
                let normal = Normal::new(0.0, sigma2.sqrt()).expect("noise");
                let messages: Vec<Packet> = (0..config.users)
                    .map(|_| {
                        galois::random_vector(config.k, config.q, &mut rng).map(Packet::new)
                    })
                    .collect::<Result<_, _>>()?;
                let points: Vec<_> = messages
                    .iter()
                    .map(|w| phi_map(&code, w))
                    .collect::<Result<_, _>>()?;
                let mut y = vec![0.0; config.n];
                for (x, &h) in points.iter().zip(&gains) {
                    for (o, &v) in y.iter_mut().zip(x.coords()) {
                        *o += h * v;
                    }
                }
                for v in &mut y {
                    *v += normal.sample(&mut rng);
                }
                let decoded = decode_integer_combination(&code, &y, alpha, &coeffs)?;
                let expect = integer_combination(&code, &coeffs, &messages)?;
                if decoded != expect {
                    errors += 1;
                }
            }
            let error_rate = errors as f64 / config.trials as f64;
            let halfwidth =
                1.96 * (error_rate * (1.0 - error_rate) / config.trials as f64).sqrt();
            Ok(ResultRow {
                experiment: name.into(),
                label: format_coeff_label(&coeffs),
                snr_db,
                rate: analytic_rate,
                error_rate: Some(error_rate),
                halfwidth: Some(halfwidth),
                seed: config.seed,
            })
        })
        .collect();
    per_point.into_iter().collect()
}
