//! `bbp` — exact and Monte Carlo birthday statistics for bosons,
//! boltzmannons, and fermions.
//!
//! Every subcommand prints a versioned JSON report (or plotting CSV with
//! `--format csv`); `sample` writes the fixed text dump format instead.
//! Results are deterministic in `(flags, seed)`; `--workers` only changes
//! how trials are fanned out.
//!
//! Exit codes: 0 success, 2 usage error, 3 domain error, 4 size cap.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use bosonic_birthday::error::Error;
use bosonic_birthday::exact::{
    binomial_moment_at_least, multiset_coefficient, prob_all_distinct_boltzmannons,
    prob_all_distinct_bosons, prob_first_l_days_at_least_j, ratio_string, ratio_to_f64,
    threshold_k, ParticleModel,
};
use bosonic_birthday::quantum::{trace_distance, PureState, SymmetricSpace};
use bosonic_birthday::rng::{RngStream, DEFAULT_SEED};
use bosonic_birthday::sample::{
    sample_boltzmannon, sample_boson_multiset, sample_dirichlet_mixture, sample_fermion,
    sample_stars_bars_continuous, write_sample_dump, SimplexPoint,
};
use bosonic_birthday::stats::{
    equivalence_experiment, poisson_limit_experiment, poisson_pmf, EquivalenceConfig,
    PoissonLimitConfig, SamplerKind, DEFAULT_ALPHA,
};

#[derive(Parser)]
#[command(
    name = "bbp",
    version,
    about = "Exact and Monte Carlo birthday statistics for bosons, boltzmannons, and fermions",
    after_help = "Caps: exact profile enumeration visits at most 10^7 tables; quantum bases \
                  are capped at dimension 10^4 (10^3 for unitary lifts); equivalence supports \
                  at most 10^6 tables and needs >= 5 expected samples per table.\n\
                  Exit codes: 0 success, 2 usage error, 3 domain error, 4 size cap."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// RNG seed shared by all Monte Carlo subcommands.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Report format; `sample` always writes its fixed dump format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the report to this path instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Worker threads for experiment fan-out (0 = all cores). Never
    /// changes results.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, ValueEnum)]
enum ModelArg {
    Boson,
    Boltzmannon,
}

impl From<ModelArg> for ParticleModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Boson => ParticleModel::Boson,
            ModelArg::Boltzmannon => ParticleModel::Boltzmannon,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum SamplerArg {
    Boson,
    StarsBars,
    Dirichlet,
    BoltzmannonUniform,
    Fermion,
}

impl SamplerArg {
    fn name(self) -> &'static str {
        match self {
            SamplerArg::Boson => "boson",
            SamplerArg::StarsBars => "stars-bars",
            SamplerArg::Dirichlet => "dirichlet",
            SamplerArg::BoltzmannonUniform => "boltzmannon-uniform",
            SamplerArg::Fermion => "fermion",
        }
    }

    fn as_equivalence_kind(self) -> Result<SamplerKind, Error> {
        match self {
            SamplerArg::Boson => Ok(SamplerKind::Boson),
            SamplerArg::StarsBars => Ok(SamplerKind::StarsBars),
            SamplerArg::Dirichlet => Ok(SamplerKind::Dirichlet),
            SamplerArg::BoltzmannonUniform => Ok(SamplerKind::BoltzmannonUniform),
            SamplerArg::Fermion => Err(Error::domain(
                "fermions are not an equivalence candidate; compare bosonic samplers \
                 or boltzmannon-uniform",
            )),
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum QuantumCheck {
    /// Diagonal of the uniform state in the occupancy basis.
    Uniform,
    /// Conjugation residuals for the uniform state and a concentrated one.
    Invariance,
    /// Empirical Haar average of symmetrized basis states.
    Average,
}

#[derive(Subcommand)]
enum Command {
    /// Exact multiset counts, collision probabilities, and moments.
    Exact {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        /// Collision multiplicity for the at-least probability and moment.
        #[arg(long, default_value_t = 2)]
        j: u64,
        /// Number of days conditioned on.
        #[arg(long, default_value_t = 1)]
        l: u64,
    },
    /// Smallest k giving a repeated birthday with majority probability.
    Threshold {
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value_t = ModelArg::Boson)]
        model: ModelArg,
    },
    /// Dump seeded occupancy samples (fixed text format).
    Sample {
        #[arg(long, value_enum)]
        model: SamplerArg,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// Poisson-limit experiment for j-fold collision counts.
    Poisson {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 2)]
        j: u64,
        /// Sets k = round(c * n^((j-1)/j)).
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, value_enum, default_value_t = ModelArg::Boson)]
        model: ModelArg,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// Compare two samplers' occupancy-table distributions.
    Equivalence {
        #[arg(long)]
        a: SamplerArg,
        #[arg(long)]
        b: SamplerArg,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Significance level for the chi-square verdict.
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
    },
    /// Symmetric-power checks at desk scale.
    Quantum {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        #[arg(long, value_enum)]
        check: QuantumCheck,
        /// Haar draws for the average check.
        #[arg(long, default_value_t = 2000)]
        m: u64,
        /// Conjugation trials for the invariance check.
        #[arg(long, default_value_t = 50)]
        trials: u64,
        /// Invariance tolerance (max-entry norm).
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

enum AppError {
    Lib(Error),
    Io(io::Error),
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Lib(e) => write!(f, "{e}"),
            AppError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl From<Error> for AppError {
    fn from(e: Error) -> Self {
        AppError::Lib(e)
    }
}

impl From<io::Error> for AppError {
    fn from(e: io::Error) -> Self {
        AppError::Io(e)
    }
}

fn exit_code(err: &AppError) -> u8 {
    match err {
        AppError::Lib(Error::Domain(_)) | AppError::Lib(Error::Degenerate(_)) => 3,
        AppError::Lib(Error::SizeCap { .. }) => 4,
        AppError::Io(_) => 1,
    }
}

/// CSV rows are (outcome, observed, expected); exact quantities leave the
/// expected column empty, and rationals stay quoted strings.
struct Report {
    command: &'static str,
    config: Value,
    results: Value,
    csv_rows: Vec<(String, String, String)>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers > 0 {
        // The global pool can only be installed once per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(cli: &Cli) -> Result<(), AppError> {
    let started = Instant::now();
    if let Command::Sample { model, n, k, samples } = &cli.command {
        return cmd_sample(cli, *model, *n, *k, *samples);
    }
    let report = match &cli.command {
        Command::Exact { n, k, j, l } => cmd_exact(cli, *n, *k, *j, *l)?,
        Command::Threshold { n, model } => cmd_threshold(cli, *n, *model)?,
        Command::Poisson { n, j, c, model, samples } => {
            cmd_poisson(cli, *n, *j, *c, *model, *samples)?
        }
        Command::Equivalence { a, b, n, k, samples, alpha } => {
            cmd_equivalence(cli, *a, *b, *n, *k, *samples, *alpha)?
        }
        Command::Quantum { n, k, check, m, trials, tol } => {
            cmd_quantum(cli, *n, *k, *check, *m, *trials, *tol)?
        }
        Command::Sample { .. } => unreachable!("handled above"),
    };
    emit(cli, report, started.elapsed().as_secs_f64())
}

fn emit(cli: &Cli, report: Report, elapsed_seconds: f64) -> Result<(), AppError> {
    let text = match cli.format {
        Format::Json => {
            let doc = json!({
                "schema": 1,
                "command": report.command,
                "config": report.config,
                "results": report.results,
                "elapsed_seconds": elapsed_seconds,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::from("outcome,observed,expected\n");
            for (outcome, observed, expected) in &report.csv_rows {
                s.push_str(&format!(
                    "{},{},{}\n",
                    csv_field(outcome),
                    csv_field(observed),
                    csv_field(expected)
                ));
            }
            s
        }
    };
    write_output(cli, text.as_bytes())
}

fn csv_field(raw: &str) -> String {
    if raw.contains(',') || raw.contains('"') || raw.contains('/') {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

fn write_output(cli: &Cli, bytes: &[u8]) -> Result<(), AppError> {
    match &cli.output {
        Some(path) => fs::write(path, bytes)?,
        None => io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn rational_entry(r: &bosonic_birthday::exact::BigRational) -> Value {
    json!({ "rational": ratio_string(r), "decimal": ratio_to_f64(r) })
}

fn cmd_exact(cli: &Cli, n: u64, k: u64, j: u64, l: u64) -> Result<Report, AppError> {
    let coefficient = multiset_coefficient(n, k)?;
    let bosons = prob_all_distinct_bosons(n, k)?;
    let boltzmannons = prob_all_distinct_boltzmannons(n, k)?;
    let at_least = prob_first_l_days_at_least_j(n, k, j, l)?;
    let moment = binomial_moment_at_least(n, k, j, l)?;

    let csv_rows = vec![
        ("multiset_coefficient".into(), coefficient.to_string(), String::new()),
        ("prob_all_distinct_bosons".into(), ratio_string(&bosons), String::new()),
        (
            "prob_all_distinct_boltzmannons".into(),
            ratio_string(&boltzmannons),
            String::new(),
        ),
        (
            format!("prob_first_{l}_days_at_least_{j}"),
            ratio_string(&at_least),
            String::new(),
        ),
        (
            format!("binomial_moment_j{j}_l{l}"),
            ratio_string(&moment),
            String::new(),
        ),
    ];
    Ok(Report {
        command: "exact",
        config: json!({ "n": n, "k": k, "j": j, "l": l, "seed": cli.seed }),
        results: json!({
            "multiset_coefficient": coefficient.to_string(),
            "prob_all_distinct_bosons": rational_entry(&bosons),
            "prob_all_distinct_boltzmannons": rational_entry(&boltzmannons),
            "prob_first_l_days_at_least_j": rational_entry(&at_least),
            "binomial_moment_at_least": rational_entry(&moment),
        }),
        csv_rows,
    })
}

fn cmd_threshold(cli: &Cli, n: u64, model: ModelArg) -> Result<Report, AppError> {
    let particle: ParticleModel = model.into();
    let k_star = threshold_k(n, particle)?;
    let scale = match particle {
        ParticleModel::Boson => 1.0,
        ParticleModel::Boltzmannon => 2.0,
    };
    let reference = (scale * n as f64 * 2f64.ln()).sqrt();
    let ratio = k_star as f64 / reference;
    let reference_name = match particle {
        ParticleModel::Boson => "sqrt(n ln 2)",
        ParticleModel::Boltzmannon => "sqrt(2 n ln 2)",
    };
    Ok(Report {
        command: "threshold",
        config: json!({ "n": n, "model": particle.name(), "seed": cli.seed }),
        results: json!({
            "k_star": k_star,
            "reference": reference_name,
            "reference_value": reference,
            "ratio": ratio,
        }),
        csv_rows: vec![
            ("k_star".into(), k_star.to_string(), String::new()),
            ("ratio_to_reference".into(), format!("{ratio}"), reference.to_string()),
        ],
    })
}

fn cmd_sample(cli: &Cli, model: SamplerArg, n: u64, k: u64, samples: u64) -> Result<(), AppError> {
    if n == 0 {
        return Err(Error::domain("need at least one mode").into());
    }
    // Surface the Pauli rejection before any output is written.
    if matches!(model, SamplerArg::Fermion) && k > n {
        return Err(Error::domain(format!(
            "Pauli exclusion: {k} fermions cannot occupy {n} modes"
        ))
        .into());
    }
    let mut rng = RngStream::new(cli.seed);
    let uniform_p = SimplexPoint::uniform(n as usize);
    let mut remaining = samples;
    let draws = std::iter::from_fn(move || {
        if remaining == 0 {
            return None;
        }
        remaining -= 1;
        Some(match model {
            SamplerArg::Boson => sample_boson_multiset(n, k, &mut rng),
            SamplerArg::StarsBars => sample_stars_bars_continuous(n, k, &mut rng),
            SamplerArg::Dirichlet => sample_dirichlet_mixture(n, k, &mut rng),
            SamplerArg::BoltzmannonUniform => sample_boltzmannon(n, k, &uniform_p, &mut rng),
            SamplerArg::Fermion => {
                sample_fermion(n, k, &mut rng).expect("k <= n checked above")
            }
        })
    });
    match &cli.output {
        Some(path) => {
            let mut file = io::BufWriter::new(fs::File::create(path)?);
            write_sample_dump(&mut file, n, k, model.name(), cli.seed, draws)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = io::BufWriter::new(stdout.lock());
            write_sample_dump(&mut out, n, k, model.name(), cli.seed, draws)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn cmd_poisson(
    cli: &Cli,
    n: u64,
    j: u64,
    c: f64,
    model: ModelArg,
    samples: u64,
) -> Result<Report, AppError> {
    let cfg = PoissonLimitConfig {
        n,
        j,
        c,
        model: model.into(),
        samples,
        seed: cli.seed,
    };
    let report = poisson_limit_experiment(&cfg)?;
    let mut csv_rows = Vec::new();
    for (i, &count) in report.histogram.iter().enumerate() {
        let expected = samples as f64 * poisson_pmf(report.poisson_mean, i as u64);
        csv_rows.push((i.to_string(), count.to_string(), format!("{expected}")));
    }
    let results = serde_json::to_value(&report).expect("report serializes");
    Ok(Report {
        command: "poisson",
        config: serde_json::to_value(&cfg).expect("config serializes"),
        results,
        csv_rows,
    })
}

fn cmd_equivalence(
    cli: &Cli,
    a: SamplerArg,
    b: SamplerArg,
    n: u64,
    k: u64,
    samples: u64,
    alpha: f64,
) -> Result<Report, AppError> {
    let cfg = EquivalenceConfig {
        sampler_a: a.as_equivalence_kind()?,
        sampler_b: b.as_equivalence_kind()?,
        n,
        k,
        samples,
        seed: cli.seed,
        alpha,
    };
    let report = equivalence_experiment(&cfg)?;
    let uniform_expected = samples as f64 / report.support as f64;
    let mut csv_rows = Vec::new();
    for (table, &count) in report.tables.iter().zip(&report.counts_a) {
        csv_rows.push((format!("a:{table}"), count.to_string(), format!("{uniform_expected}")));
    }
    for (table, &count) in report.tables.iter().zip(&report.counts_b) {
        csv_rows.push((format!("b:{table}"), count.to_string(), format!("{uniform_expected}")));
    }
    let verdict = if report.chi_square.pass { "PASS" } else { "FAIL" };
    let mut results = serde_json::to_value(&report).expect("report serializes");
    results["verdict"] = json!(verdict);
    Ok(Report {
        command: "equivalence",
        config: serde_json::to_value(&cfg).expect("config serializes"),
        results,
        csv_rows,
    })
}

fn cmd_quantum(
    cli: &Cli,
    n: u64,
    k: u64,
    check: QuantumCheck,
    m: u64,
    trials: u64,
    tol: f64,
) -> Result<Report, AppError> {
    let space = SymmetricSpace::new(n, k)?;
    let uniform = space.uniform_state();
    let dim = space.dim();
    let config = json!({
        "n": n, "k": k, "dim": dim,
        "check": match check {
            QuantumCheck::Uniform => "uniform",
            QuantumCheck::Invariance => "invariance",
            QuantumCheck::Average => "average",
        },
        "m": m, "trials": trials, "tol": tol, "seed": cli.seed,
    });
    let (results, csv_rows) = match check {
        QuantumCheck::Uniform => {
            let probs = space.birthday_measurement_distribution(&uniform)?;
            let target = 1.0 / dim as f64;
            let max_deviation = probs
                .iter()
                .map(|p| (p - target).abs())
                .fold(0.0, f64::max);
            let rows = space
                .labels()
                .iter()
                .zip(&probs)
                .map(|(label, p)| (label.to_string(), format!("{p}"), format!("{target}")))
                .collect();
            (
                json!({
                    "distribution": probs,
                    "uniform_target": target,
                    "max_deviation": max_deviation,
                    "pass": max_deviation == 0.0,
                }),
                rows,
            )
        }
        QuantumCheck::Invariance => {
            let mut rng = RngStream::substream(cli.seed, 0);
            let uniform_report = space.verify_invariance(&uniform, trials, tol, &mut rng)?;
            let concentrated = PureState::basis_state(dim, 0).density_matrix();
            let mut rng = RngStream::substream(cli.seed, 1);
            let concentrated_report =
                space.verify_invariance(&concentrated, trials, tol, &mut rng)?;
            let rows = vec![
                (
                    "uniform_residual".to_string(),
                    format!("{}", uniform_report.max_residual),
                    format!("{tol}"),
                ),
                (
                    "concentrated_residual".to_string(),
                    format!("{}", concentrated_report.max_residual),
                    format!("{tol}"),
                ),
            ];
            let pass = uniform_report.invariant && !concentrated_report.invariant;
            (
                json!({
                    "uniform": uniform_report,
                    "concentrated_diagonal": concentrated_report,
                    "pass": pass,
                }),
                rows,
            )
        }
        QuantumCheck::Average => {
            // Average the two canonical initial states: all particles in
            // distinct modes (needs k <= n) and all in the first mode.
            let mut states: Vec<(&str, Vec<u64>)> = Vec::new();
            if k <= n {
                let mut distinct = vec![0u64; n as usize];
                for d in distinct.iter_mut().take(k as usize) {
                    *d = 1;
                }
                states.push(("distinct_modes", distinct));
            }
            let mut condensed = vec![0u64; n as usize];
            condensed[0] = k;
            states.push(("single_mode", condensed));

            let mut entries = Vec::new();
            let mut rows = Vec::new();
            for (stream, (name, counts)) in states.into_iter().enumerate() {
                let idx = space
                    .basis_index(&counts)
                    .expect("canonical labels are in the basis");
                let sigma = PureState::basis_state(dim, idx).density_matrix();
                let mut rng = RngStream::substream(cli.seed, stream as u64);
                let averaged = space.haar_average_state(&sigma, m, &mut rng)?;
                let distance = trace_distance(&averaged, &uniform);
                rows.push((name.to_string(), format!("{distance}"), "0".to_string()));
                let mut entry = json!({
                    "initial_state": name,
                    "trace_distance_to_uniform": distance,
                });
                if dim <= 128 {
                    entry["averaged_state"] = json!(averaged.to_reim_rows());
                }
                entries.push(entry);
            }
            (json!({ "m": m, "averages": entries }), rows)
        }
    };
    Ok(Report {
        command: "quantum",
        config,
        results,
        csv_rows,
    })
}
