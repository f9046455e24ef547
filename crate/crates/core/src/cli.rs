//! Command-line parsing and the CSV/JSON files a run leaves behind.
//!
//! Settings resolve as: command-line flag, then config file, then the
//! subcommand's built-in default. The effective configuration is echoed to
//! `config.json` in the output directory and can be fed back with
//! `--config` to repeat a run exactly.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::{
    height_sweep, run_pair, snapshot_experiment, width_scan, ExperimentConfig, RunRecord,
    SummaryRow, SweepTable, FIGURE_K0,
};
use crate::state::Grid;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "TUNNELSIM_OUTPUT_DIR";

pub const DEFAULT_OUTPUT_DIR: &str = "tunnelsim-out";

pub const CONFIG_FILE: &str = "config.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const DENSITY_FILE: &str = "densities.csv";
pub const RECORD_FILE: &str = "record.csv";

pub const SUMMARY_HEADER: &str =
    "sigma,d,h,snapshot_time,max_free,max_transmitted,shift,transmitted_norm,flags";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// One barrier run paired with its free reference.
    SingleRun,
    /// Barrier widths at fixed height, with density snapshots.
    Snapshot,
    /// Barrier heights at fixed width, with density snapshots.
    HeightSweep,
    /// Every (sigma, width) combination at fixed height.
    WidthScan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SingleRun => "single-run",
            Command::Snapshot => "snapshot",
            Command::HeightSweep => "height-sweep",
            Command::WidthScan => "width-scan",
        }
    }

    /// Built-in configuration for this subcommand. The figure sweeps use
    /// [`FIGURE_K0`]; `single-run` keeps the library default.
    pub fn defaults(self) -> ExperimentConfig {
        let base = ExperimentConfig::default();
        match self {
            Command::SingleRun => ExperimentConfig {
                d_list: vec![20],
                h_list: vec![2.0],
                sigma_list: vec![base.sigma],
                ..base
            },
            Command::Snapshot => ExperimentConfig {
                k0: FIGURE_K0,
                d_list: vec![5, 10, 15, 20, 25],
                h_list: vec![2.0],
                sigma_list: vec![base.sigma],
                ..base
            },
            Command::HeightSweep => ExperimentConfig {
                k0: FIGURE_K0,
                d_list: vec![20],
                sigma_list: vec![base.sigma],
                ..base
            },
            Command::WidthScan => ExperimentConfig {
                k0: FIGURE_K0,
                h_list: vec![2.0],
                ..base
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "tunnelsim",
    version,
    about = "Gaussian wave packets tunneling through square barriers"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// One barrier run paired with its free reference.
    SingleRun(Overrides),
    /// Barrier widths at fixed height, with density snapshots.
    Snapshot(Overrides),
    /// Barrier heights at fixed width, with density snapshots.
    HeightSweep(Overrides),
    /// Every (sigma, width) combination at fixed height.
    WidthScan(Overrides),
}

#[derive(Debug, Args)]
struct Overrides {
    /// Initial density standard deviation, in sites.
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    /// Incident wave number, 1/site.
    #[arg(long, allow_negative_numbers = true)]
    k0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    #[arg(long)]
    grid_size: Option<usize>,
    /// Initial packet centre, in sites.
    #[arg(long, allow_negative_numbers = true)]
    x0: Option<f64>,
    #[arg(long)]
    barrier_start: Option<usize>,
    /// Barrier widths in sites, comma separated.
    #[arg(long, value_delimiter = ',')]
    d_list: Option<Vec<usize>>,
    /// Barrier heights as multiples of k0²/2, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    h_list: Option<Vec<f64>>,
    /// Packet widths for width-scan, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    sigma_list: Option<Vec<f64>>,
    /// Snapshot step count (default: chosen from the clearance rule).
    #[arg(long, conflicts_with = "snapshot_time")]
    steps: Option<usize>,
    /// Snapshot time; converted to a step count with dt.
    #[arg(long, allow_negative_numbers = true)]
    snapshot_time: Option<f64>,
    /// Steps between recorded samples.
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long, env = OUTPUT_DIR_ENV, default_value = DEFAULT_OUTPUT_DIR)]
    output_dir: PathBuf,
    /// JSON file with any of the flag names as keys.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// A fully resolved command line.
#[derive(Debug, Clone, PartialEq)]
pub struct CliInvocation {
    pub command: Command,
    pub config: ExperimentConfig,
    pub output_dir: PathBuf,
    pub config_file: Option<PathBuf>,
}

/// Why parsing stopped. `Usage` covers help and version requests too; its
/// message is clap's rendered text.
#[derive(Debug)]
pub enum ParseFailure {
    Usage(clap::Error),
    Invalid(Error),
}

impl std::fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParseFailure::Usage(e) => write!(f, "{e}"),
            ParseFailure::Invalid(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ParseFailure {}

impl From<Error> for ParseFailure {
    fn from(e: Error) -> Self {
        ParseFailure::Invalid(e)
    }
}

/// Parse and validate `argv` (including the program name).
pub fn parse_invocation<I, T>(argv: I) -> Result<CliInvocation, ParseFailure>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(ParseFailure::Usage)?;
    let (command, o) = match cli.command {
        CliCommand::SingleRun(o) => (Command::SingleRun, o),
        CliCommand::Snapshot(o) => (Command::Snapshot, o),
        CliCommand::HeightSweep(o) => (Command::HeightSweep, o),
        CliCommand::WidthScan(o) => (Command::WidthScan, o),
    };

    let mut config = match &o.config {
        Some(path) => load_config(path, command.defaults())?,
        None => command.defaults(),
    };
    if let Some(v) = o.sigma {
        config.sigma = v;
        if command != Command::WidthScan {
            config.sigma_list = vec![v];
        }
    }
    if let Some(v) = o.k0 {
        config.k0 = v;
    }
    if let Some(v) = o.dt {
        config.dt = v;
    }
    if let Some(v) = o.grid_size {
        config.grid_size = v;
    }
    if let Some(v) = o.x0 {
        config.x0 = v;
    }
    if let Some(v) = o.barrier_start {
        config.barrier_start = v;
    }
    if let Some(v) = o.d_list {
        config.d_list = v;
    }
    if let Some(v) = o.h_list {
        config.h_list = v;
    }
    if let Some(v) = o.sigma_list {
        config.sigma_list = v;
    }
    if let Some(v) = o.steps {
        config.steps = Some(v);
    }
    if let Some(t) = o.snapshot_time {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(
                Error::invalid("snapshot-time", format!("must be non-negative, got {t}")).into(),
            );
        }
        config.steps = Some((t / config.dt).round() as usize);
    }
    if let Some(v) = o.stride {
        config.stride = v;
    }

    validate_for(command, &config)?;
    Ok(CliInvocation {
        command,
        config,
        output_dir: o.output_dir,
        config_file: o.config,
    })
}

/// Read a JSON config file over `base`. Keys use the flag spelling
/// (`grid-size`, `d-list`, ...); unknown keys are rejected.
pub fn load_config(path: &Path, base: ExperimentConfig) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut merged = serde_json::to_value(&base).expect("config serializes");
    let overrides: serde_json::Value =
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
    let serde_json::Value::Object(fields) = overrides else {
        return Err(Error::invalid(
            "config",
            format!("{} must hold a JSON object", path.display()),
        ));
    };
    let target = merged.as_object_mut().expect("config is an object");
    for (k, v) in fields {
        target.insert(k, v);
    }
    serde_json::from_value(merged).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn points_for(command: Command, config: &ExperimentConfig) -> Vec<crate::experiments::RunPoint> {
    match command {
        Command::SingleRun => vec![config.single_point()],
        Command::Snapshot => config.snapshot_points(),
        Command::HeightSweep => config.height_points(),
        Command::WidthScan => config.width_scan_points(),
    }
}

fn validate_for(command: Command, config: &ExperimentConfig) -> Result<()> {
    let require_one = |field: &'static str, len: usize| -> Result<()> {
        if len != 1 {
            return Err(Error::invalid(
                field,
                format!("{} takes exactly one value, got {len}", command.name()),
            ));
        }
        Ok(())
    };
    match command {
        Command::SingleRun => {
            require_one("d-list", config.d_list.len())?;
            require_one("h-list", config.h_list.len())?;
        }
        Command::Snapshot => require_one("h-list", config.h_list.len())?,
        Command::HeightSweep => require_one("d-list", config.d_list.len())?,
        Command::WidthScan => require_one("h-list", config.h_list.len())?,
    }
    for (field, len) in [
        ("d-list", config.d_list.len()),
        ("h-list", config.h_list.len()),
        ("sigma-list", config.sigma_list.len()),
    ] {
        if len == 0 {
            return Err(Error::invalid(field, "must not be empty"));
        }
    }
    config.validate(&points_for(command, config))
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Density snapshot CSV: header `site,<label>...`, one row per site, values
/// with 17 significant digits.
pub fn write_density_csv(path: &Path, grid: &Grid, columns: &[(String, Vec<f64>)]) -> Result<()> {
    for (label, values) in columns {
        if values.len() != grid.n_sites() {
            return Err(Error::invalid(
                "densities",
                format!(
                    "column {label} has {} values for {} sites",
                    values.len(),
                    grid.n_sites()
                ),
            ));
        }
    }
    let mut out = String::from("site");
    for (label, _) in columns {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    for j in 0..grid.n_sites() {
        write!(out, "{j}").unwrap();
        for (_, values) in columns {
            out.push(',');
            out.push_str(&fmt_float(values[j]));
        }
        out.push('\n');
    }
    write_file(path, &out)
}

/// Parse a file written by [`write_density_csv`].
pub fn read_density_csv(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::invalid("densities", "empty file"))?;
    let mut columns: Vec<(String, Vec<f64>)> = header
        .split(',')
        .skip(1)
        .map(|l| (l.to_string(), Vec::new()))
        .collect();
    for (row, line) in lines.enumerate() {
        let mut fields = line.split(',');
        let site = fields.next().unwrap_or_default();
        if site.parse::<usize>().ok() != Some(row) {
            return Err(Error::invalid(
                "densities",
                format!("row {row} has site {site:?}"),
            ));
        }
        for (col, field) in columns.iter_mut().zip(fields.by_ref()) {
            let v = field
                .parse::<f64>()
                .map_err(|e| Error::invalid("densities", format!("row {row}: {e}")))?;
            col.1.push(v);
        }
    }
    Ok(columns)
}

fn summary_line(row: &SummaryRow) -> String {
    let flags: Vec<String> = row.flags.iter().map(|f| f.to_string()).collect();
    format!(
        "{},{},{},{},{},{},{},{},{}",
        row.sigma,
        row.d,
        row.h,
        row.snapshot_time,
        fmt_float(row.max_free),
        fmt_float(row.max_transmitted),
        fmt_float(row.shift),
        fmt_float(row.transmitted_norm),
        flags.join(";"),
    )
}

/// Summary table CSV sorted by `(sigma, d, h)`.
pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut sorted: Vec<&SummaryRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.sigma
            .total_cmp(&b.sigma)
            .then(a.d.cmp(&b.d))
            .then(a.h.total_cmp(&b.h))
    });
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in sorted {
        out.push_str(&summary_line(row));
        out.push('\n');
    }
    write_file(path, &out)
}

/// Time series of one paired run.
pub fn write_record_csv(path: &Path, record: &RunRecord) -> Result<()> {
    let mut out = String::from(
        "step,time,max_free,max_transmitted,shift,transmitted_norm,reflected_norm,barrier_norm,settled\n",
    );
    for i in 0..record.len() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            record.steps[i],
            record.times[i],
            fmt_float(record.max_free[i]),
            fmt_float(record.max_transmitted[i]),
            fmt_float(record.shift[i]),
            fmt_float(record.transmitted_norm[i]),
            fmt_float(record.reflected_norm[i]),
            fmt_float(record.barrier_norm[i]),
            record.settled[i],
        )
        .unwrap();
    }
    write_file(path, &out)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub config: ExperimentConfig,
    pub snapshot_steps: usize,
    /// Seconds since the Unix epoch. The only field that differs between
    /// repeated runs.
    pub created_unix: u64,
    /// SHA-256 per emitted file, keyed by file name.
    pub files: BTreeMap<String, String>,
}

/// Write the manifest JSON, hashing every file listed in `files` (names
/// relative to the manifest's directory).
pub fn write_run_manifest(
    path: &Path,
    command: Command,
    config: &ExperimentConfig,
    snapshot_steps: usize,
    files: &[String],
) -> Result<Manifest> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut checksums = BTreeMap::new();
    for name in files {
        checksums.insert(name.clone(), sha256_file(&dir.join(name))?);
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command,
        config: config.clone(),
        snapshot_steps,
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        files: checksums,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_file(path, &text)?;
    Ok(manifest)
}

/// Files written by [`execute`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub output_dir: PathBuf,
    pub files: Vec<String>,
    pub manifest: Manifest,
    pub rows: Vec<SummaryRow>,
}

/// Run the invocation and write its output directory. The manifest is
/// written last and names every other file.
pub fn execute(inv: &CliInvocation) -> Result<RunOutput> {
    let dir = &inv.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let config = &inv.config;
    let grid = config.grid()?;

    let table: SweepTable = match inv.command {
        Command::SingleRun => {
            let out = run_pair(config, config.single_point())?;
            let steps = *out.record.steps.last().expect("record has samples");
            let label = format!("d{}", out.point.d);
            SweepTable {
                snapshot_steps: steps,
                rows: vec![out.summary],
                densities: vec![
                    ("free".to_string(), out.free_density),
                    (label, out.tunneled_density),
                ],
                records: vec![out.record],
            }
        }
        Command::Snapshot => snapshot_experiment(config)?,
        Command::HeightSweep => height_sweep(config)?,
        Command::WidthScan => width_scan(config)?,
    };

    let mut files = Vec::new();
    let mut echoed = serde_json::to_string_pretty(config).expect("config serializes");
    echoed.push('\n');
    write_file(&dir.join(CONFIG_FILE), &echoed)?;
    files.push(CONFIG_FILE.to_string());

    write_summary_csv(&dir.join(SUMMARY_FILE), &table.rows)?;
    files.push(SUMMARY_FILE.to_string());

    if !table.densities.is_empty() {
        write_density_csv(&dir.join(DENSITY_FILE), &grid, &table.densities)?;
        files.push(DENSITY_FILE.to_string());
    }
    if inv.command == Command::SingleRun {
        write_record_csv(&dir.join(RECORD_FILE), &table.records[0])?;
        files.push(RECORD_FILE.to_string());
    }

    let manifest = write_run_manifest(
        &dir.join(MANIFEST_FILE),
        inv.command,
        config,
        table.snapshot_steps,
        &files,
    )?;
    Ok(RunOutput {
        output_dir: dir.clone(),
        files,
        manifest,
        rows: table.rows,
    })
}
