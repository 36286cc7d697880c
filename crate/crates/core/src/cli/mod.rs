//! Command-line front end: `link`, `run`, `sweep` and `sar`.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 numerical or
//! solver error, 4 abort on the SAR hard stop.

mod config;
mod records;

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

pub use config::{resolve, Overrides, Resolved, RunConfig};
pub use records::{fmt_f64, header, read_records, write_records, COLUMNS, SCHEMA_VERSION};

use crate::circuit::{lsk_averaged_solution, LinkModel, LinkSolution};
use crate::magnetics::{coupling_set, PlacedCoil};
use crate::safety::{sar_at_boundary, sar_compliant, sar_headroom, sar_margin, sar_update, SarLimit, SarWindowState};
use crate::scenario::{run, sweep, GridPoint, ScenarioConfig, ScenarioError, Summary};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("aborted: {0}")]
    SarStop(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Solver(_) => 3,
            CliError::SarStop(_) => 4,
        }
    }

    fn csv(e: csv::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::SarHardStop { .. } => CliError::SarStop(e.to_string()),
            ScenarioError::Magnetics { .. } | ScenarioError::Circuit { .. } | ScenarioError::Safety { .. } => {
                CliError::Solver(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "capsule-wpt", version, about = "Inductive power link co-simulator for a steered capsule")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Default)]
pub struct CommonArgs {
    /// Run file (TOML).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Preset scenario; overrides the run file's `preset`.
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Output file.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Shunt-noise RNG seed.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Filament segments per coil turn.
    #[arg(long, value_name = "N")]
    pub steps_per_turn: Option<usize>,
    /// Hold the supply at its configured voltage.
    #[arg(long)]
    pub no_adaptive_control: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Static link evaluation at the first trajectory pose.
    Link(CommonArgs),
    /// Time-domain co-simulation; writes the record CSV.
    Run(CommonArgs),
    /// Summary per value of one configuration parameter.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Dotted key path, e.g. aps.v_v or trajectory.keyframes.0.capsule.position_m.2
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
    },
    /// Exposure compliance of a current history (CSV t_s,i_amp_a; stdin if no file).
    Sar {
        #[command(flatten)]
        common: CommonArgs,
        /// Current history CSV.
        file: Option<PathBuf>,
    },
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            preset: self.preset.clone(),
            seed: self.seed,
            segments_per_turn: self.steps_per_turn,
            no_adaptive_control: self.no_adaptive_control,
        }
    }

    fn load(&self) -> Result<(RunConfig, Resolved), CliError> {
        let file = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let resolved = resolve(&file, &self.overrides())?;
        Ok((file, resolved))
    }

    fn single(&self, what: &str) -> Result<(RunConfig, ScenarioConfig), CliError> {
        match self.load()? {
            (file, Resolved::Single(c)) => Ok((file, c)),
            (_, Resolved::Grid(_)) => Err(CliError::Config(format!("{what} needs a single scenario, not a grid preset"))),
        }
    }

    fn out_path(&self, file: &RunConfig) -> Option<PathBuf> {
        self.out.clone().or_else(|| file.out_csv.clone())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Parses `args` and runs the command, writing reports to `out`.
pub fn execute(cli: Cli, stdin: &mut dyn Read, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Link(common) => cmd_link(&common, out),
        Command::Run(common) => cmd_run(&common, out),
        Command::Sweep { common, param, values } => cmd_sweep(&common, &param, &values, out),
        Command::Sar { common, file } => cmd_sar(&common, file.as_deref(), stdin, out),
    }
}

/// Binary entry point.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(cli, &mut std::io::stdin().lock(), &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[derive(Debug, Serialize)]
struct PointReport {
    i_tx_a: f64,
    v_out_v: [f64; 3],
    p_out_w: [f64; 3],
    p_total_out_w: f64,
    p_in_w: f64,
    efficiency: f64,
}

impl PointReport {
    fn from_solution(s: &LinkSolution) -> Self {
        Self::new(s.i_tx_amplitude(), s.v_out, s.p_out, s.p_total_out, s.p_in)
    }

    fn new(i_tx_a: f64, v_out_v: [f64; 3], p_out_w: [f64; 3], p_total_out_w: f64, p_in_w: f64) -> Self {
        Self {
            i_tx_a,
            v_out_v,
            p_out_w,
            p_total_out_w,
            p_in_w,
            efficiency: if p_in_w > 0.0 { p_total_out_w / p_in_w } else { 0.0 },
        }
    }
}

#[derive(Debug, Serialize)]
struct LinkReport {
    scenario: String,
    d_m: f64,
    v_in_v: f64,
    m_h: [f64; 3],
    k: [f64; 3],
    unmodulated: PointReport,
    lsk_axes: [bool; 3],
    lsk_duty: f64,
    lsk_depth: f64,
    lsk: PointReport,
}

fn write_point(out: &mut dyn Write, label: &str, p: &PointReport) -> std::io::Result<()> {
    writeln!(out, "{label}:")?;
    writeln!(out, "  |i_tx|          {:.6} A", p.i_tx_a)?;
    writeln!(out, "  v_out x/y/z     {:.6} / {:.6} / {:.6} V", p.v_out_v[0], p.v_out_v[1], p.v_out_v[2])?;
    writeln!(out, "  p_out x/y/z     {:.6e} / {:.6e} / {:.6e} W", p.p_out_w[0], p.p_out_w[1], p.p_out_w[2])?;
    writeln!(out, "  p_total_out     {:.6e} W", p.p_total_out_w)?;
    writeln!(out, "  p_in            {:.6e} W", p.p_in_w)?;
    writeln!(out, "  efficiency      {:.6e}", p.efficiency)
}

fn cmd_link(common: &CommonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (_, cfg) = common.single("link")?;
    let track = cfg.trajectory.track()?;
    let (tx_pose, mut capsule) = track.sample(0.0);
    capsule.position += cfg.perturbation.respiration.displacement(0.0);
    let tx = PlacedCoil::new(cfg.coils.tx.clone(), tx_pose);
    let coupling = coupling_set(&tx, &capsule, &cfg.coils.rx, cfg.magnetics.method, &cfg.magnetics.filament_options())
        .map_err(|e| CliError::Solver(e.to_string()))?
        .scaled(cfg.perturbation.field_attenuation);
    let mut link = LinkModel::new(cfg.tx_circuit(), cfg.rx_branches());
    link.tx.v_in_v = cfg.aps.v_v;
    let plain = link.solve(&coupling, [false; 3]).map_err(|e| CliError::Solver(e.to_string()))?;
    let lead = (0..3).fold(0, |b, k| if plain.p_out[k] > plain.p_out[b] { k } else { b });
    let axes: [bool; 3] = if cfg.multi_axis_lsk {
        std::array::from_fn(|k| plain.p_out[k] > 0.0)
    } else {
        std::array::from_fn(|k| k == lead && plain.p_out[k] > 0.0)
    };
    let duty = 0.5;
    let avg = lsk_averaged_solution(&link, &coupling, axes, duty).map_err(|e| CliError::Solver(e.to_string()))?;
    let report = LinkReport {
        scenario: cfg.name.clone(),
        d_m: (capsule.position - tx_pose.position).norm(),
        v_in_v: link.tx.v_in_v,
        m_h: coupling.m,
        k: coupling.k,
        unmodulated: PointReport::from_solution(&plain),
        lsk_axes: axes,
        lsk_duty: duty,
        lsk_depth: avg.depth(),
        lsk: PointReport::new(avg.i_tx_rms_amplitude, avg.v_out_avg, avg.p_out_avg, avg.p_total_out_avg, avg.p_in_avg),
    };

    writeln!(out, "scenario        {}", report.scenario)?;
    writeln!(out, "distance        {:.6} m", report.d_m)?;
    writeln!(out, "v_in            {:.6} V", report.v_in_v)?;
    writeln!(out, "M x/y/z         {:.6e} / {:.6e} / {:.6e} H", report.m_h[0], report.m_h[1], report.m_h[2])?;
    writeln!(out, "k x/y/z         {:.6e} / {:.6e} / {:.6e}", report.k[0], report.k[1], report.k[2])?;
    write_point(out, "without LSK", &report.unmodulated)?;
    let names: Vec<&str> = ["x", "y", "z"].iter().zip(axes).filter(|(_, on)| *on).map(|(n, _)| *n).collect();
    let label = format!(
        "with LSK (duty {duty}, axes {}, Tx current depth {:.4}%)",
        if names.is_empty() { "none".to_string() } else { names.join("+") },
        100.0 * report.lsk_depth
    );
    write_point(out, &label, &report.lsk)?;
    writeln!(out, "--- json ---")?;
    serde_json::to_writer_pretty(&mut *out, &report).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn write_summary(out: &mut dyn Write, name: &str, s: &Summary) -> std::io::Result<()> {
    writeln!(out, "summary of {name}")?;
    for (key, value) in s.columns() {
        writeln!(out, "  {key:<26} {}", fmt_f64(value))?;
    }
    Ok(())
}

fn summary_header(lead: &[&str]) -> Vec<String> {
    let mut h: Vec<String> = std::iter::once("schema_version").chain(lead.iter().copied()).map(String::from).collect();
    h.extend(Summary::from_records(&[], &Default::default()).columns().iter().map(|(k, _)| k.to_string()));
    h
}

fn summary_row(lead: Vec<String>, s: &Summary) -> Vec<String> {
    let mut row = vec![SCHEMA_VERSION.to_string()];
    row.extend(lead);
    row.extend(s.columns().iter().map(|(_, v)| fmt_f64(*v)));
    row
}

fn write_table<W: Write>(w: W, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header).map_err(CliError::csv)?;
    for r in rows {
        wr.write_record(r).map_err(CliError::csv)?;
    }
    wr.flush().map_err(CliError::from)
}

fn cmd_run(common: &CommonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (file, resolved) = common.load()?;
    let path = common.out_path(&file);
    match resolved {
        Resolved::Single(cfg) => {
            let result = run(&cfg)?;
            match &path {
                Some(p) => {
                    write_records(create(p)?, &result.records)?;
                    writeln!(out, "wrote {} records to {}", result.records.len(), p.display())?;
                    write_summary(out, &cfg.name, &result.summary)?;
                }
                None => {
                    write_records(&mut *out, &result.records)?;
                    write_summary(&mut std::io::stderr(), &cfg.name, &result.summary)?;
                }
            }
            if result.diagnostics.never_converged {
                log::warn!("controller never left the ramp phase");
            }
            Ok(())
        }
        Resolved::Grid(points) => run_grid(&points, path.as_deref(), out),
    }
}

fn run_grid(points: &[GridPoint], path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let header = summary_header(&["label", "variant", "distance_m", "v_in_v"]);
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        let s = run(&p.config)?.summary;
        rows.push(summary_row(vec![p.label.clone(), p.variant.clone(), fmt_f64(p.distance_m), fmt_f64(p.v_in_v)], &s));
    }
    match path {
        Some(p) => {
            write_table(create(p)?, &header, &rows)?;
            writeln!(out, "wrote {} grid points to {}", rows.len(), p.display())?;
        }
        None => write_table(&mut *out, &header, &rows)?,
    }
    Ok(())
}

fn cmd_sweep(common: &CommonArgs, param: &str, values: &[f64], out: &mut dyn Write) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value (--values a,b,...)".into()));
    }
    let (file, cfg) = common.single("sweep")?;
    let rows = sweep(&cfg, param, values)?;
    let header = summary_header(&["param", "value"]);
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| summary_row(vec![param.to_string(), fmt_f64(r.value)], &r.summary))
        .collect();
    match common.out_path(&file) {
        Some(p) => {
            write_table(create(&p)?, &header, &table)?;
            writeln!(out, "wrote {} sweep rows to {}", table.len(), p.display())?;
        }
        None => write_table(&mut *out, &header, &table)?,
    }
    Ok(())
}

/// Result of checking a sampled current history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SarReport {
    pub samples: usize,
    pub duration_s: f64,
    pub max_mean_i2_a2: f64,
    pub limit_i2_a2: f64,
    pub min_margin: f64,
    pub compliant: bool,
    pub boundary: bool,
    /// Constant amplitude allowed over the next window after the history.
    pub headroom_a: f64,
}

impl SarReport {
    pub fn verdict(&self) -> &'static str {
        match (self.compliant, self.boundary) {
            (true, true) => "COMPLIANT (boundary)",
            (true, false) => "COMPLIANT",
            (false, _) => "NON-COMPLIANT",
        }
    }
}

/// Reads `t_s,i_amp_a` rows and replays them through the SAR window. Each
/// sample is held until the next; the last is held for the preceding
/// interval.
pub fn check_sar_history<R: Read>(input: R, limit: SarLimit) -> Result<SarReport, CliError> {
    let mut rd = csv::Reader::from_reader(input);
    let head: Vec<String> = rd.headers().map_err(CliError::csv)?.iter().map(str::trim).map(String::from).collect();
    if head != ["t_s", "i_amp_a"] {
        return Err(CliError::Config(format!("expected header t_s,i_amp_a, got {}", head.join(","))));
    }
    let mut samples = Vec::new();
    for (n, rec) in rd.records().enumerate() {
        let rec = rec.map_err(CliError::csv)?;
        let field = |i: usize| {
            rec.get(i)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Config(format!("row {}: bad {}", n + 1, head[i])))
        };
        samples.push((field(0)?, field(1)?));
    }
    if samples.len() < 2 {
        return Err(CliError::Config("need at least two samples to infer the sample interval".into()));
    }
    let mut state = SarWindowState::new(limit);
    let mut max_mean = 0.0f64;
    let mut min_margin = f64::INFINITY;
    let (mut compliant, mut boundary) = (true, false);
    for (k, &(t, i)) in samples.iter().enumerate() {
        let dt = match samples.get(k + 1) {
            Some(&(t_next, _)) => t_next - t,
            None => t - samples[k - 1].0,
        };
        if !(dt > 0.0) {
            return Err(CliError::Config(format!("row {}: time must increase strictly", k + 2)));
        }
        sar_update(&mut state, t, i, dt).map_err(|e| CliError::Config(e.to_string()))?;
        max_mean = max_mean.max(state.mean_i2());
        min_margin = min_margin.min(sar_margin(&state));
        compliant &= sar_compliant(&state);
        boundary |= sar_at_boundary(&state);
    }
    Ok(SarReport {
        samples: samples.len(),
        duration_s: state.now() - samples[0].0,
        max_mean_i2_a2: max_mean,
        limit_i2_a2: limit.i_max_const_a.powi(2),
        min_margin,
        compliant,
        boundary,
        headroom_a: sar_headroom(&state, limit.window_s),
    })
}

fn cmd_sar(common: &CommonArgs, file: Option<&Path>, stdin: &mut dyn Read, out: &mut dyn Write) -> Result<(), CliError> {
    let limit = match (&common.config, &common.preset) {
        (None, None) => SarLimit::default(),
        _ => common.single("sar")?.1.sar,
    };
    let report = match file {
        Some(p) => check_sar_history(File::open(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?, limit)?,
        None => check_sar_history(stdin, limit)?,
    };
    writeln!(out, "samples              {}", report.samples)?;
    writeln!(out, "duration             {} s", fmt_f64(report.duration_s))?;
    writeln!(out, "window               {} s", fmt_f64(limit.window_s))?;
    writeln!(out, "max windowed mean    {} A^2 (limit {} A^2)", fmt_f64(report.max_mean_i2_a2), fmt_f64(report.limit_i2_a2))?;
    writeln!(out, "min margin           {}", fmt_f64(report.min_margin))?;
    writeln!(out, "headroom             {} A", fmt_f64(report.headroom_a))?;
    writeln!(out, "{}", report.verdict())?;
    Ok(())
}
