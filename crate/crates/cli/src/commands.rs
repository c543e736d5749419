use std::fmt;
use std::path::{Path, PathBuf};

use bosewalk::codec::{write_dataset, DatasetConfig};
use bosewalk::dynamics::noninteracting_correlation;
use bosewalk::ensemble::{run_ensemble, EnsembleConfig, WalkEngine};
use bosewalk::eval::verify_corpus;
use bosewalk::grid;
use serde::Serialize;

use crate::config::{ConfigError, RunConfig};

/// Largest |γ_exact − γ_oracle| accepted by the oracle cross-check.
pub const ORACLE_TOLERANCE: f64 = 1e-8;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Threshold(String),
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Threshold(_) => 1,
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Threshold(m) => write!(f, "threshold failure: {m}"),
            Failure::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<bosewalk::Error> for Failure {
    fn from(e: bosewalk::Error) -> Self {
        use bosewalk::Error as E;
        match e {
            E::NoSites
            | E::InvalidLattice(_)
            | E::Capacity { .. }
            | E::DimensionMismatch(_)
            | E::NotInBasis { .. }
            | E::Interacting(_)
            | E::NonFinite(_)
            | E::UnknownLayout(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

fn echo(config: &RunConfig, command: &str, dir: &Path) -> Result<(), Failure> {
    let mut config = config.clone();
    config.command = Some(command.into());
    config
        .write_echo(dir)
        .map(|_| ())
        .map_err(|e| io_failure(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(value).expect("summary serialises");
    std::fs::write(path, json + "\n").map_err(|e| io_failure(path, e))
}

#[derive(Serialize)]
struct SimulationSummary {
    energies: Vec<f64>,
    participation_ratio: f64,
    bunching: f64,
    correlation_total: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    unitarity_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_deviation: Option<f64>,
}

/// One realization (sampled or read from a file): correlation, density and
/// optionally the propagator, as text grids.
pub fn simulate(config: &RunConfig) -> Result<(), Failure> {
    let out = config.out()?;
    let template = config.template()?;
    let engine = WalkEngine::new(template.clone())?;
    let energies = match &config.energies {
        Some(path) => grid::read_vector(path)?,
        None => engine.sample(config.seed(), config.index.unwrap_or(0)),
    };
    if energies.len() != template.sites {
        return Err(Failure::Config(format!(
            "{} energies supplied for {} sites",
            energies.len(),
            template.sites
        )));
    }

    let oracle_starts = if config.check_oracle.unwrap_or(false) {
        if template.interaction != 0.0 {
            return Err(Failure::Config("the oracle cross-check needs gamma = 0".into()));
        }
        match config.starts().as_slice() {
            &[a, b] => Some((a, b)),
            _ => return Err(Failure::Config("the oracle cross-check needs two particles".into())),
        }
    } else {
        None
    };

    std::fs::create_dir_all(&out).map_err(|e| io_failure(&out, e))?;
    let observation = engine.observe(energies.clone())?;
    grid::write_vector(&out.join("energies.csv"), &energies)?;
    grid::write_matrix(&out.join("correlation.csv"), observation.correlation.values())?;
    grid::write_vector(&out.join("density.csv"), observation.density.values().as_slice())?;

    let unitarity_defect = if config.unitary.unwrap_or(false) {
        let u = engine.unitary(energies.clone())?;
        let m = u.matrix();
        grid::write_matrix(&out.join("unitary_abs.csv"), &m.map(|z| z.norm()))?;
        grid::write_matrix(&out.join("unitary_re.csv"), &m.map(|z| z.re))?;
        grid::write_matrix(&out.join("unitary_im.csv"), &m.map(|z| z.im))?;
        Some(u.unitarity_defect())
    } else {
        None
    };

    let oracle_deviation = match oracle_starts {
        Some(starts) => {
            let spec = template.lattice(energies.clone())?;
            let expected = noninteracting_correlation(&spec, starts, template.time)?;
            let deviation = (observation.correlation.values() - expected.values()).amax();
            Some(deviation)
        }
        None => None,
    };

    let summary = SimulationSummary {
        energies,
        participation_ratio: observation.density.participation_ratio(),
        bunching: observation.correlation.bunching(),
        correlation_total: observation.correlation.total(),
        unitarity_defect,
        oracle_deviation,
    };
    write_json(&out.join("summary.json"), &summary)?;
    echo(config, "simulate", &out)?;

    println!(
        "simulated M={} N={} gamma={} t={}: participation ratio {:.4}, bunching {:.4}",
        template.sites,
        template.particles,
        template.interaction,
        template.time,
        summary.participation_ratio,
        summary.bunching
    );
    if let Some(deviation) = oracle_deviation {
        println!("oracle deviation {deviation:.3e} (tolerance {ORACLE_TOLERANCE:e})");
        if deviation.is_nan() || deviation > ORACLE_TOLERANCE {
            return Err(Failure::Threshold(format!(
                "interaction-free oracle deviates by {deviation:e}"
            )));
        }
    }
    Ok(())
}

pub fn gen_dataset(config: &RunConfig) -> Result<(), Failure> {
    let out = config.out()?;
    let dataset = DatasetConfig {
        corpus: config.corpus.clone().unwrap_or_else(|| "bosewalk".into()),
        layout: config.layout(),
        count: config.count.unwrap_or(100),
        master_seed: config.seed(),
        template: config.template()?,
        scaling: config.scaling()?,
        workers: config.workers(),
    };
    if dataset.corpus.is_empty() || dataset.corpus.contains(['/', '\\']) {
        return Err(Failure::Config(format!("invalid corpus name {:?}", dataset.corpus)));
    }
    let dimension =
        bosewalk::fock::enumerate_fock_basis(dataset.template.sites, dataset.template.particles)?
            .dimension();
    let (rows, cols) = dataset.layout.canvas_shape(dataset.template.sites, dimension);
    dataset
        .scaling
        .resolve(rows, cols)
        .map_err(|e| Failure::Config(e.to_string()))?;
    let summary = write_dataset(&dataset, &out)?;
    echo(config, "gen-dataset", &out)?;
    println!(
        "{}: wrote {} images ({} resumed) in {:.2} s, {:.1} images/s",
        out.display(),
        summary.written,
        summary.resumed,
        summary.elapsed.as_secs_f64(),
        summary.images_per_second()
    );
    Ok(())
}

pub fn verify(config: &RunConfig) -> Result<(), Failure> {
    let input = config
        .input
        .clone()
        .ok_or_else(|| Failure::Config("an input directory is required".into()))?;
    if !input.is_dir() {
        return Err(Failure::Config(format!("{} is not a directory", input.display())));
    }
    let options = config.verify_options()?;
    let out = config.out.clone().unwrap_or_else(|| input.clone());
    let report = verify_corpus(&input, &options)?;
    std::fs::create_dir_all(&out).map_err(|e| io_failure(&out, e))?;
    report.write_json(&out.join("verify_report.json"))?;
    let table = report.summary_table();
    std::fs::write(out.join("verify_summary.txt"), &table)
        .map_err(|e| io_failure(&out, e))?;
    if config.out.is_some() {
        echo(config, "verify", &out)?;
    }
    print!("{table}");
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Threshold(format!(
            "{} of {} samples failed",
            report.failed_count,
            report.samples.len()
        )))
    }
}

fn point_label(value: f64) -> String {
    format!("{value}")
}

pub fn average(config: &RunConfig) -> Result<(), Failure> {
    let out = config.out()?;
    let base = config.template()?;
    let sweep = config.gammas.is_some() || config.etas.is_some();
    let gammas = config.gammas.clone().unwrap_or(vec![base.interaction]);
    let etas = config.etas.clone().unwrap_or(vec![base.disorder_bound]);
    if gammas.is_empty() || etas.is_empty() {
        return Err(Failure::Config("empty gamma or eta sweep".into()));
    }
    let mut rows = Vec::new();
    for &gamma in &gammas {
        for &eta in &etas {
            let mut template = base.clone();
            template.interaction = gamma;
            template.disorder_bound = eta;
            let mut ensemble =
                EnsembleConfig::new(template, config.realizations.unwrap_or(1000), config.seed());
            ensemble.workers = config.workers();
            ensemble.unitary_magnitude = config.unitary.unwrap_or(false);
            let result = run_ensemble(&ensemble)?;
            let dir: PathBuf = if sweep {
                out.join(format!("gamma_{}_eta_{}", point_label(gamma), point_label(eta)))
            } else {
                out.clone()
            };
            result.write_dumps(&dir)?;
            let total = result.mean_correlation.sum();
            let bunching = result.mean_correlation.diagonal().sum() / total;
            let ratio = result.participation_ratio();
            println!(
                "gamma={gamma} eta={eta} R={}: participation ratio {ratio:.4}, bunching {bunching:.4}",
                result.realizations
            );
            rows.push([gamma, eta, ratio, bunching]);
        }
    }
    std::fs::create_dir_all(&out).map_err(|e| io_failure(&out, e))?;
    let table = std::iter::once("# gamma,eta,participation_ratio,bunching\n".to_string())
        .chain(std::iter::once(grid::format_rows(rows.iter().map(|r| r.as_slice()))))
        .collect::<String>();
    let path = out.join("sweep.csv");
    std::fs::write(&path, table).map_err(|e| io_failure(&path, e))?;
    echo(config, "average", &out)
}

/// Re-runs the command recorded in a config file (for example an echo).
pub fn replay(config: &RunConfig) -> Result<(), Failure> {
    match config.command.as_deref() {
        Some("simulate") => simulate(config),
        Some("gen-dataset") => gen_dataset(config),
        Some("verify") => verify(config),
        Some("average") => average(config),
        Some(other) => Err(Failure::Config(format!("unknown command {other:?}"))),
        None => Err(Failure::Config("the config file names no command".into())),
    }
}
