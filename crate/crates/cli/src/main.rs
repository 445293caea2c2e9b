mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nearunitary::ed::{multiplet_comparison, EdConfig, MultipletComparison};
use nearunitary::slater::{
    all_bond_coefficients, monte_carlo_boundary_integral, CouplingCoefficients, CouplingOptions,
    LevelIndex, MonteCarloEstimate,
};
use nearunitary::trap::{eigenbasis, TrapSpec};
use nearunitary::tunneling::{
    build_tunneling, ordering_graph, spectral_report, IrrepContent, OrderingGraph, Parity,
    RateVector, ReportOptions, SpectralReport,
};
use serde::{Deserialize, Serialize};

use output::float;

#[derive(Parser, Debug)]
#[command(
    name = "nearunitary",
    version,
    about = "Tunneling spectra and coupling coefficients for strongly interacting particles in 1D traps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output file; stdout when omitted. Relative paths are placed under $OUTPUT_DIR if set.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,

    /// Output format; defaults to csv for a .csv output path and json otherwise.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Worker thread cap. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for stochastic cross-checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Labelled spectrum of the tunneling operator for given bond rates.
    Spectrum {
        #[arg(short = 'N')]
        n: usize,
        /// Comma-separated rates t_1..t_{N-1}.
        #[arg(
            short = 't',
            long = "rates",
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        rates: Vec<f64>,
        /// Shift so the totally antisymmetric level sits at zero.
        #[arg(long)]
        shift: bool,
        /// Absolute gap separating clusters.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Bond coupling coefficients of one multiplet.
    Coefficients {
        /// Trap JSON file; harmonic when omitted.
        #[arg(long)]
        trap: Option<PathBuf>,
        #[arg(short = 'N')]
        n: usize,
        /// Comma-separated quanta; the ground multiplet when omitted.
        #[arg(long, value_delimiter = ',')]
        level: Option<Vec<usize>>,
        #[arg(short = 'g', allow_hyphen_values = true)]
        g: f64,
        /// Also estimate every boundary integral by Monte Carlo with this many samples.
        #[arg(long, default_value_t = 0)]
        mc_samples: u64,
    },
    /// Exact-diagonalization check of the predicted multiplet splitting.
    Verify {
        #[arg(long)]
        trap: Option<PathBuf>,
        #[arg(short = 'N', default_value_t = 3)]
        n: usize,
        #[arg(long, value_delimiter = ',')]
        level: Option<Vec<usize>>,
        #[arg(
            long = "g-list",
            value_delimiter = ',',
            default_value = "15,20,30",
            allow_hyphen_values = true
        )]
        g_list: Vec<f64>,
        /// Single-particle cutoff of the product basis.
        #[arg(short = 'M', default_value_t = 12)]
        cutoff: usize,
        /// Extra cutoffs for the convergence sweep and unitary-limit extrapolation.
        #[arg(long, value_delimiter = ',')]
        cutoffs: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        isolation_fraction: f64,
        /// Pass/fail tolerance; 0.10 for N=2 and 0.15 otherwise.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Wells and bond-tagged edges of the ordering graph.
    Orderings {
        #[arg(short = 'N')]
        n: usize,
    },
}

#[derive(Debug)]
enum Failure {
    Core(nearunitary::Error),
    /// Unreadable or malformed input files, unwritable outputs, bad flags.
    Input(String),
    /// The oracle ran but disagrees with the prediction beyond tolerance.
    Verdict(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        use nearunitary::Error::*;
        match self {
            Failure::Core(Convergence { .. }) => 3,
            Failure::Core(Consistency(_)) | Failure::Verdict(_) => 4,
            Failure::Core(_) | Failure::Input(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Input(m) | Failure::Verdict(m) => f.write_str(m),
        }
    }
}

impl From<nearunitary::Error> for Failure {
    fn from(e: nearunitary::Error) -> Self {
        Failure::Core(e)
    }
}

type Result<T> = std::result::Result<T, Failure>;

/// Coefficients plus the optional Monte Carlo cross-check; re-parses as [`CouplingCoefficients`].
#[derive(Serialize, Deserialize)]
struct CoefficientsReport {
    #[serde(flatten)]
    coefficients: CouplingCoefficients,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    monte_carlo: Option<Vec<MonteCarloEstimate>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

fn read_trap(path: Option<&Path>) -> Result<TrapSpec> {
    let Some(path) = path else {
        return Ok(TrapSpec::Harmonic);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read trap file {}: {e}", path.display())))?;
    let trap: TrapSpec = serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("trap file {}: {e}", path.display())))?;
    trap.validate()?;
    Ok(trap)
}

fn read_level(n: usize, quanta: Option<Vec<usize>>) -> Result<LevelIndex> {
    match quanta {
        None => Ok(LevelIndex::ground(n)),
        Some(q) if q.len() != n => Err(Failure::Input(format!(
            "--level lists {} quanta but N={n}",
            q.len()
        ))),
        Some(q) => Ok(LevelIndex::new(q)?),
    }
}

fn irreps_text(c: &IrrepContent) -> String {
    match c {
        IrrepContent::Labeled(m) => m
            .iter()
            .map(|(l, k)| format!("{l}x{k}"))
            .collect::<Vec<_>>()
            .join(";"),
        IrrepContent::Unlabeled(_) => "unlabelled".into(),
    }
}

fn parity_text(p: &Parity) -> String {
    match p {
        Parity::Even => "even".into(),
        Parity::Odd => "odd".into(),
        Parity::Mixed { even, odd } => format!("mixed:{even}/{odd}"),
        Parity::NotApplicable => "not-applicable".into(),
    }
}

fn ordering_text(w: &nearunitary::perm::Ordering) -> String {
    w.labels()
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join("-")
}

/// Serialized output plus a one-line summary for stderr.
struct Job {
    bytes: Vec<u8>,
    summary: Option<String>,
    verdict: Option<Failure>,
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::Input(format!("cannot serialize output: {e}"))
}

fn spectrum(
    n: usize,
    rates: Vec<f64>,
    shift: bool,
    tol: Option<f64>,
    format: Format,
) -> Result<Job> {
    if let Some(t) = tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(Failure::Input(format!("--tol must be positive, got {t}")));
        }
    }
    let rates = RateVector::new(rates)?;
    let t = build_tunneling(n, &rates)?;
    let report: SpectralReport = spectral_report(
        &t,
        &rates,
        ReportOptions {
            cluster_tol: tol,
            with_shift: shift,
        },
    )?;
    let bytes = match format {
        Format::Json => output::to_json(&report),
        Format::Csv => output::to_csv(
            &["cluster", "eigenvalue", "multiplicity", "irreps", "parity"],
            report
                .clusters
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    vec![
                        i.to_string(),
                        float(c.eigenvalue),
                        c.multiplicity.to_string(),
                        irreps_text(&c.irreps),
                        parity_text(&c.parity),
                    ]
                })
                .collect(),
        ),
    }
    .map_err(io_failure)?;
    Ok(Job {
        bytes,
        summary: None,
        verdict: None,
    })
}

fn coefficients(
    trap: Option<&Path>,
    n: usize,
    level: Option<Vec<usize>>,
    g: f64,
    mc_samples: u64,
    seed: u64,
    format: Format,
) -> Result<Job> {
    let trap = read_trap(trap)?;
    let level = read_level(n, level)?;
    let basis = eigenbasis(&trap, level.max_quantum() + 2)?;
    let opts = CouplingOptions::for_basis(&basis, n);
    let coefficients = all_bond_coefficients(&level, &basis, g, &opts)?;
    let monte_carlo = if mc_samples > 0 {
        let mut v = Vec::with_capacity(n - 1);
        for k in 1..n {
            let mc = monte_carlo_boundary_integral(&level, &basis, k, mc_samples, seed)?;
            v.push(MonteCarloEstimate {
                value: mc.value / g,
                std_error: mc.std_error / g,
                samples: mc.samples,
            });
        }
        Some(v)
    } else {
        None
    };
    let summary = monte_carlo.as_ref().map(|mc| {
        let sigmas: Vec<String> = mc
            .iter()
            .zip(
                coefficients
                    .values
                    .iter()
                    .zip(&coefficients.quadrature_error),
            )
            .map(|(m, (q, e))| {
                format!(
                    "{:.2}",
                    (q - m.value).abs() / (e * e + m.std_error * m.std_error).sqrt()
                )
            })
            .collect();
        format!(
            "Monte Carlo deviation per bond (standard errors): {}",
            sigmas.join(", ")
        )
    });
    let report = CoefficientsReport {
        seed: monte_carlo.as_ref().map(|_| seed),
        coefficients,
        monte_carlo,
    };
    let bytes = match format {
        Format::Json => output::to_json(&report),
        Format::Csv => output::to_csv(
            &[
                "bond",
                "g",
                "value",
                "quadrature_error",
                "mc_value",
                "mc_std_error",
            ],
            report
                .coefficients
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let mc = report.monte_carlo.as_ref().map(|m| m[i]);
                    vec![
                        (i + 1).to_string(),
                        float(g),
                        float(*v),
                        float(report.coefficients.quadrature_error[i]),
                        mc.map(|m| float(m.value)).unwrap_or_default(),
                        mc.map(|m| float(m.std_error)).unwrap_or_default(),
                    ]
                })
                .collect(),
        ),
    }
    .map_err(io_failure)?;
    Ok(Job {
        bytes,
        summary,
        verdict: None,
    })
}

#[allow(clippy::too_many_arguments)]
fn verify(
    trap: Option<&Path>,
    n: usize,
    level: Option<Vec<usize>>,
    g_list: Vec<f64>,
    cutoff: usize,
    cutoffs: Vec<usize>,
    isolation_fraction: f64,
    tolerance: Option<f64>,
    format: Format,
) -> Result<Job> {
    let trap = read_trap(trap)?;
    let level = read_level(n, level)?;
    let tolerance = tolerance.unwrap_or(if n == 2 { 0.10 } else { 0.15 });
    let mut config = EdConfig::new(trap, level, g_list.first().copied().unwrap_or(0.0), cutoff);
    config.systematic_cutoffs = cutoffs;
    config.isolation_fraction = isolation_fraction;
    let r: MultipletComparison = multiplet_comparison(&config, &g_list)?;

    let pass = r.max_gap_error < tolerance && r.scale_deviation < tolerance;
    let mut summary = format!(
        "max gap error {:.4}, scale deviation {:.4}, tolerance {tolerance}: {}",
        r.max_gap_error,
        r.scale_deviation,
        if pass { "PASS" } else { "FAIL" }
    );
    if let Some(limit) = r.systematic.as_ref().and_then(|s| s.unitary_limit) {
        summary.push_str(&format!(
            "; extrapolated unitary limit {limit:.4} vs {:.4}",
            r.e_infinity
        ));
    }
    let verdict = (!pass).then(|| Failure::Verdict(format!("verification failed: {summary}")));

    let bytes = match format {
        Format::Json => output::to_json(&r),
        Format::Csv => output::to_csv(
            &["g", "state", "ed_energy", "predicted_energy"],
            r.samples
                .iter()
                .flat_map(|s| {
                    s.ed_energies
                        .iter()
                        .zip(&s.predicted)
                        .enumerate()
                        .map(|(i, (e, p))| vec![float(s.g), i.to_string(), float(*e), float(*p)])
                })
                .collect(),
        ),
    }
    .map_err(io_failure)?;
    Ok(Job {
        bytes,
        summary: Some(summary),
        verdict,
    })
}

fn orderings(n: usize, format: Format) -> Result<Job> {
    let graph: OrderingGraph = ordering_graph(n)?;
    let letter = |w: &nearunitary::perm::Ordering| {
        graph
            .letters
            .as_ref()
            .and_then(|m| m.iter().find(|(_, v)| *v == w).map(|(c, _)| c.to_string()))
            .unwrap_or_default()
    };
    let bytes = match format {
        Format::Json => output::to_json(&graph),
        Format::Csv => output::to_csv(
            &["bond", "a", "b", "letter_a", "letter_b"],
            graph
                .edges
                .iter()
                .map(|e| {
                    vec![
                        e.bond.to_string(),
                        ordering_text(&e.a),
                        ordering_text(&e.b),
                        letter(&e.a),
                        letter(&e.b),
                    ]
                })
                .collect(),
        ),
    }
    .map_err(io_failure)?;
    Ok(Job {
        bytes,
        summary: Some(format!(
            "{} wells, {} edges",
            graph.wells.len(),
            graph.edges.len()
        )),
        verdict: None,
    })
}

fn run(cli: Cli) -> Result<()> {
    let format = cli.format.unwrap_or_else(|| match &cli.output {
        Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => Format::Csv,
        _ => Format::Json,
    });
    let job = match cli.command {
        Command::Spectrum {
            n,
            rates,
            shift,
            tol,
        } => spectrum(n, rates, shift, tol, format),
        Command::Coefficients {
            trap,
            n,
            level,
            g,
            mc_samples,
        } => coefficients(trap.as_deref(), n, level, g, mc_samples, cli.seed, format),
        Command::Verify {
            trap,
            n,
            level,
            g_list,
            cutoff,
            cutoffs,
            isolation_fraction,
            tolerance,
        } => verify(
            trap.as_deref(),
            n,
            level,
            g_list,
            cutoff,
            cutoffs,
            isolation_fraction,
            tolerance,
            format,
        ),
        Command::Orderings { n } => orderings(n, format),
    }?;
    output::emit(cli.output.as_deref(), &job.bytes)
        .map_err(|e| Failure::Input(format!("cannot write output: {e}")))?;
    if let Some(s) = job.summary {
        eprintln!("{s}");
    }
    match job.verdict {
        Some(v) => Err(v),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.threads {
        Some(0) => Err(Failure::Input("--threads must be at least 1".into())),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| run(cli)),
            Err(e) => Err(Failure::Input(format!(
                "cannot start {t} worker threads: {e}"
            ))),
        },
        None => run(cli),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
