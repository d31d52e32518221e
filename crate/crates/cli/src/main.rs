//! Experiment CLI: ingest/clean a ratings file, sweep K or N over the
//! similarity measures, compare the two clustering arms with silhouettes,
//! or evaluate a single grid point.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use cohrec::cluster::SomConfig;
use cohrec::data::{clean_min_ratings, load_movielens};
use cohrec::experiment::{
    emit_report, emit_silhouette_csv, run_experiment, silhouette_comparison, ExperimentConfig,
};
use cohrec::sim::SimilarityKind;
use cohrec::spectral::{WelchParams, Window};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "cohrec",
    version,
    about = "Clustered collaborative filtering experiments"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. All optional here; values are
/// resolved against the config file and the built-in defaults.
#[derive(Debug, Args)]
struct GlobalArgs {
    /// Plain-text `key=value` defaults file; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// SOM grid as ROWSxCOLS (default 10x10).
    #[arg(long, global = true)]
    som_grid: Option<String>,

    /// Ratings hidden per test user (default 10).
    #[arg(long, global = true)]
    hidden_per_user: Option<usize>,

    /// Rating at or above which an item is relevant (default 4).
    #[arg(long, global = true)]
    relevance_threshold: Option<f64>,

    /// Welch segment length for the coherence measure (default: derived
    /// from each cluster's size).
    #[arg(long, global = true)]
    welch_segment: Option<usize>,

    /// Welch segment overlap fraction (default 0.5).
    #[arg(long, global = true)]
    welch_overlap: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a ratings file, drop users below a rating count, write the
    /// cleaned four-column file.
    Ingest {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        min_ratings: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the cluster count K at fixed N.
    SweepK {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Fixed neighborhood size (default 100).
        #[arg(long)]
        n: Option<usize>,
        /// K range as START:END:STEP or a comma list (default 10:55:5).
        #[arg(long)]
        k: Option<String>,
        /// Comma list of measures (default cohr,pcc,jaccard,msd,jmsd).
        #[arg(long)]
        measures: Option<String>,
        /// Comma list of keep-fractions (default 1.0,0.18,0.1,0.05).
        #[arg(long)]
        sparsity: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the neighborhood size N at fixed K.
    SweepN {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Fixed cluster count (default 55).
        #[arg(long)]
        k: Option<usize>,
        /// N range as START:END:STEP or a comma list (default 10:100:10).
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        measures: Option<String>,
        #[arg(long)]
        sparsity: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare direct k-means against SOM + k-means by silhouette.
    Silhouette {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Comma list of cluster counts (default 10,20,30,40).
        #[arg(long)]
        k: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate one (measure, K, N, sparsity) grid point.
    Evaluate {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// One of cohr|pcc|jaccard|msd|jmsd.
        #[arg(long)]
        measure: Option<String>,
        /// Keep-fraction in (0,1].
        #[arg(long)]
        sparsity: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A usage problem (bad flag value, missing required setting).
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

/// Defaults loaded from `--config`: one `key=value` per line, `#` comments.
/// Keys mirror the long flag names without the leading dashes.
struct FileDefaults(BTreeMap<String, String>);

impl FileDefaults {
    fn load(path: Option<&PathBuf>) -> Result<Self, UsageError> {
        let mut map = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            for (line_no, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(usage(format!(
                        "{}:{}: expected key=value",
                        path.display(),
                        line_no + 1
                    )));
                };
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(FileDefaults(map))
    }

    /// Flag value if given, else the config-file value, else the default.
    fn resolve<T: Clone + FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
        default: Option<T>,
    ) -> Result<T, UsageError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        if let Some(raw) = self.0.get(key) {
            return raw
                .parse::<T>()
                .map_err(|_| usage(format!("config key `{key}`: cannot parse `{raw}`")));
        }
        default.ok_or_else(|| usage(format!("missing required setting --{key}")))
    }

    /// Like `resolve` but keeps the raw string for list/range syntax.
    fn resolve_raw(&self, flag: Option<String>, key: &str, default: &str) -> String {
        flag.or_else(|| self.0.get(key).cloned())
            .unwrap_or_else(|| default.to_string())
    }
}

/// `START:END:STEP` (inclusive) or a comma list of integers.
fn parse_usize_spec(spec: &str) -> Result<Vec<usize>, UsageError> {
    let err = || {
        usage(format!(
            "cannot parse `{spec}` (use START:END:STEP or a comma list)"
        ))
    };
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(err());
        }
        let start: usize = parts[0].trim().parse().map_err(|_| err())?;
        let end: usize = parts[1].trim().parse().map_err(|_| err())?;
        let step: usize = parts[2].trim().parse().map_err(|_| err())?;
        if step == 0 || end < start {
            return Err(err());
        }
        Ok((start..=end).step_by(step).collect())
    } else {
        spec.split(',')
            .map(|s| s.trim().parse().map_err(|_| err()))
            .collect()
    }
}

fn parse_f64_list(spec: &str) -> Result<Vec<f64>, UsageError> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| usage(format!("cannot parse `{s}` as a number in `{spec}`")))
        })
        .collect()
}

fn parse_measures(spec: &str) -> Result<Vec<SimilarityKind>, UsageError> {
    spec.split(',')
        .map(|s| SimilarityKind::from_str(s).map_err(|e| usage(e.to_string())))
        .collect()
}

fn parse_grid(spec: &str) -> Result<(usize, usize), UsageError> {
    let err = || {
        usage(format!(
            "cannot parse SOM grid `{spec}` (use ROWSxCOLS, e.g. 10x10)"
        ))
    };
    let (rows, cols) = spec.split_once(['x', 'X']).ok_or_else(err)?;
    let rows: usize = rows.trim().parse().map_err(|_| err())?;
    let cols: usize = cols.trim().parse().map_err(|_| err())?;
    if rows == 0 || cols == 0 {
        return Err(err());
    }
    Ok((rows, cols))
}

/// Global settings after flag/config/default resolution.
struct Resolved {
    som: SomConfig,
    hidden_per_user: usize,
    relevance_threshold: f64,
    welch: Option<WelchParams>,
}

fn resolve_globals(global: &GlobalArgs, file: &FileDefaults) -> Result<Resolved, UsageError> {
    let grid_spec = file.resolve_raw(global.som_grid.clone(), "som-grid", "10x10");
    let (rows, cols) = parse_grid(&grid_spec)?;
    let hidden_per_user = file.resolve(global.hidden_per_user, "hidden-per-user", Some(10usize))?;
    let relevance_threshold =
        file.resolve(global.relevance_threshold, "relevance-threshold", Some(4.0))?;
    let welch_segment: Option<usize> = match (global.welch_segment, file.0.get("welch-segment")) {
        (Some(v), _) => Some(v),
        (None, Some(raw)) => Some(
            raw.parse()
                .map_err(|_| usage(format!("config key `welch-segment`: cannot parse `{raw}`")))?,
        ),
        (None, None) => None,
    };
    let welch_overlap = file.resolve(global.welch_overlap, "welch-overlap", Some(0.5))?;
    let welch = welch_segment.map(|segment_length| WelchParams {
        segment_length,
        overlap: welch_overlap,
        window: Window::Hann,
    });
    Ok(Resolved {
        som: SomConfig::with_grid(rows, cols),
        hidden_per_user,
        relevance_threshold,
        welch,
    })
}

fn base_config(data: PathBuf, seed: u64, globals: &Resolved) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(data, seed);
    config.som = globals.som.clone();
    config.hidden_per_user = globals.hidden_per_user;
    config.relevance_threshold = globals.relevance_threshold;
    config.welch = globals.welch;
    config
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    let file = FileDefaults::load(cli.global.config.as_ref()).map_err(report_usage)?;
    let globals = resolve_globals(&cli.global, &file).map_err(report_usage)?;

    match cli.command {
        Command::Ingest {
            data,
            min_ratings,
            out,
        } => {
            let data = file.resolve(data, "data", None).map_err(report_usage)?;
            let min_ratings = file
                .resolve(min_ratings, "min-ratings", Some(20usize))
                .map_err(report_usage)?;
            let out: PathBuf = file.resolve(out, "out", None).map_err(report_usage)?;

            let matrix = load_movielens(&data).map_err(report_core)?;
            let cleaned = clean_min_ratings(&matrix, min_ratings).map_err(report_core)?;
            let mut buf = Vec::new();
            cleaned
                .write_tsv(&mut buf)
                .map_err(|e| report_io(&out, e))?;
            std::fs::write(&out, buf).map_err(|e| report_io(&out, e))?;
            println!(
                "ingested {}: {} users x {} items, {} ratings (sparsity {:.4}%)",
                data.display(),
                cleaned.n_users(),
                cleaned.n_items(),
                cleaned.rating_count(),
                cleaned.sparsity_level()
            );
            println!("wrote {}", out.display());
            Ok(())
        }

        Command::SweepK {
            data,
            n,
            k,
            measures,
            sparsity,
            seed,
            out,
        } => {
            let data = file.resolve(data, "data", None).map_err(report_usage)?;
            let out: PathBuf = file.resolve(out, "out", None).map_err(report_usage)?;
            let seed = file.resolve(seed, "seed", Some(42)).map_err(report_usage)?;
            let mut config = base_config(data, seed, &globals);
            config.n_values = vec![file.resolve(n, "n", Some(100)).map_err(report_usage)?];
            config.k_values =
                parse_usize_spec(&file.resolve_raw(k, "k", "10:55:5")).map_err(report_usage)?;
            config.measures = parse_measures(&file.resolve_raw(
                measures,
                "measures",
                "cohr,pcc,jaccard,msd,jmsd",
            ))
            .map_err(report_usage)?;
            config.sparsity_levels =
                parse_f64_list(&file.resolve_raw(sparsity, "sparsity", "1.0,0.18,0.1,0.05"))
                    .map_err(report_usage)?;
            emit_experiment(&config, &out)
        }

        Command::SweepN {
            data,
            k,
            n,
            measures,
            sparsity,
            seed,
            out,
        } => {
            let data = file.resolve(data, "data", None).map_err(report_usage)?;
            let out: PathBuf = file.resolve(out, "out", None).map_err(report_usage)?;
            let seed = file.resolve(seed, "seed", Some(42)).map_err(report_usage)?;
            let mut config = base_config(data, seed, &globals);
            config.k_values = vec![file.resolve(k, "k", Some(55)).map_err(report_usage)?];
            config.n_values =
                parse_usize_spec(&file.resolve_raw(n, "n", "10:100:10")).map_err(report_usage)?;
            config.measures = parse_measures(&file.resolve_raw(
                measures,
                "measures",
                "cohr,pcc,jaccard,msd,jmsd",
            ))
            .map_err(report_usage)?;
            config.sparsity_levels =
                parse_f64_list(&file.resolve_raw(sparsity, "sparsity", "1.0,0.18,0.1,0.05"))
                    .map_err(report_usage)?;
            emit_experiment(&config, &out)
        }

        Command::Silhouette { data, k, seed, out } => {
            let data = file.resolve(data, "data", None).map_err(report_usage)?;
            let out: PathBuf = file.resolve(out, "out", None).map_err(report_usage)?;
            let seed = file.resolve(seed, "seed", Some(42)).map_err(report_usage)?;
            let k_values =
                parse_usize_spec(&file.resolve_raw(k, "k", "10,20,30,40")).map_err(report_usage)?;

            let matrix = load_movielens(&data).map_err(report_core)?;
            let rows = silhouette_comparison(&matrix, &k_values, seed, &globals.som)
                .map_err(report_core)?;
            for row in &rows {
                println!(
                    "k={} arm={} negatives={} mean_silhouette={:.4} seconds={:.2}",
                    row.k, row.arm, row.negative_count, row.mean_silhouette, row.wall_clock_secs
                );
            }
            emit_silhouette_csv(&rows, &out).map_err(report_core)?;
            println!("wrote {}", out.display());
            Ok(())
        }

        Command::Evaluate {
            data,
            k,
            n,
            measure,
            sparsity,
            seed,
            out,
        } => {
            let data = file.resolve(data, "data", None).map_err(report_usage)?;
            let out: PathBuf = file.resolve(out, "out", None).map_err(report_usage)?;
            let seed = file.resolve(seed, "seed", Some(42)).map_err(report_usage)?;
            let mut config = base_config(data, seed, &globals);
            config.k_values = vec![file.resolve(k, "k", None).map_err(report_usage)?];
            config.n_values = vec![file.resolve(n, "n", None).map_err(report_usage)?];
            let kind = file.resolve_raw(measure, "measure", "cohr");
            config.measures =
                vec![SimilarityKind::from_str(&kind)
                    .map_err(|e| report_usage(usage(e.to_string())))?];
            config.sparsity_levels = vec![file
                .resolve(sparsity, "sparsity", Some(1.0))
                .map_err(report_usage)?];
            emit_experiment(&config, &out)
        }
    }
}

fn emit_experiment(config: &ExperimentConfig, out: &std::path::Path) -> Result<(), ExitCode> {
    config
        .validate()
        .map_err(|e| report_usage(usage(e.to_string())))?;
    let report = run_experiment(config).map_err(report_core)?;
    emit_report(&report, out).map_err(report_core)?;
    let means = report
        .rows
        .iter()
        .filter(|r| matches!(r.fold, cohrec::experiment::FoldId::Mean))
        .count();
    println!(
        "{} grid points, {} rows, {:.1}s",
        means,
        report.rows.len(),
        report.metadata.wall_clock_secs
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn report_usage(err: UsageError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(EXIT_USAGE)
}

fn report_core(err: cohrec::Error) -> ExitCode {
    eprintln!("error: {err}");
    if err.is_data_error() {
        ExitCode::from(EXIT_DATA)
    } else {
        ExitCode::from(EXIT_INTERNAL)
    }
}

fn report_io(path: &std::path::Path, err: std::io::Error) -> ExitCode {
    eprintln!("error: cannot write {}: {err}", path.display());
    ExitCode::from(EXIT_DATA)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version are successful exits; everything else is a
            // usage error.
            let code = if err.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
