//! Command-line front end.
//!
//! Subcommands: `regime`, `scatter`, `sweep`, `simulate`, `images`. Every
//! command validates its inputs before touching the filesystem. Exit codes:
//! 0 success, 2 invalid input, 3 numerical failure, 4 I/O failure.
//!
//! A flat `key = value` file passed with `--config` supplies defaults for any
//! flag (keys are the long flag names without dashes); flags given on the
//! command line win.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::complex::Complex64;
use serde_json::{json, Value};

use crate::error::Error;
use crate::exec::{map_ordered, Execution};
use crate::images::{
    boundary_residual, plane_grid, potential_charge_above_plane, potential_via_green, ImageProblem,
};
use crate::kinematics::{classify_regime, effective_momenta, BeamEnergy, PhysicalSetup, Regime};
use crate::lattice::{
    build_lattice, init_packet, momentum_averaged_reflection, run_observed, write_snapshot,
    LatticeConfig, NumericCoefficients, PacketSpec,
};
use crate::planewave::{reflection_transmission, solve_left_incident, solve_right_incident};
use crate::resolution::resolve;

/// Tolerance used when re-validating the conservation identities of a row.
pub const ROW_TOLERANCE: f64 = 1e-12;

pub const CSV_HEADER: [&str; 20] = [
    "energy", "regime", "k1", "re_k2", "im_k2", "re_A", "im_A", "re_B", "im_B", "re_C", "im_C",
    "re_D", "im_D", "R", "T", "R_w", "T_w", "R_G", "T_G", "error",
];

#[derive(Debug, Parser)]
#[command(name = "kgscatter", version, about = "Klein-Gordon step-potential scattering workbench")]
pub struct Cli {
    /// Flat key=value file providing defaults for any flag.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify (m, V, E) and print the effective momenta.
    Regime(PointArgs),
    /// Solve the step problem at one energy.
    Scatter(ScatterArgs),
    /// Tabulate coefficients over an energy range.
    Sweep(SweepArgs),
    /// Run the time-domain wavepacket experiment.
    Simulate(SimulateArgs),
    /// Image-charge verifier for a point charge above a grounded plane.
    Images(ImagesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long)]
    pub potential: Option<f64>,
    #[arg(long)]
    pub energy: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long)]
    pub potential: Option<f64>,
    #[arg(long = "energy-min")]
    pub energy_min: Option<f64>,
    #[arg(long = "energy-max")]
    pub energy_max: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[arg(long = "grid-points")]
    pub grid_points: Option<usize>,
    #[arg(long = "half-width")]
    pub half_width: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub center: Option<f64>,
    #[arg(long = "total-time")]
    pub total_time: Option<f64>,
    #[arg(long = "time-step-factor")]
    pub time_step_factor: Option<f64>,
    /// Write a snapshot every N steps into the --out directory.
    #[arg(long = "snapshot-every")]
    pub snapshot_every: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct ImagesArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub charge: Option<f64>,
    #[arg(long)]
    pub height: Option<f64>,
    #[arg(long)]
    pub extent: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
    /// Optional CSV of the plane grid (x, y, V).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NumericalBlowup { .. } | Error::PacketNeverSeparated { .. } => {
                CliError::Numerical(e.to_string())
            }
            Error::Io(msg) => CliError::Io(msg),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Parsed `key = value` configuration file.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Invalid(format!("config line {}: expected key=value", n + 1)));
            };
            let key = key.trim().trim_start_matches("--").to_string();
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// CLI value if present, else the parsed config value.
    pub fn pick<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| CliError::Invalid(format!("config key {key}: cannot parse {raw:?}"))),
        }
    }

    fn require<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<T, CliError> {
        self.pick(cli, key)?
            .ok_or_else(|| CliError::Invalid(format!("missing required --{key}")))
    }
}

/// One row of scatter/sweep output. Quantities that do not exist for the
/// regime are `None` and are written as empty fields.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub mass: f64,
    pub potential: f64,
    pub energy: f64,
    pub regime: Regime,
    pub k1: Option<f64>,
    pub k2: Option<Complex64>,
    pub a: Option<Complex64>,
    pub b: Option<Complex64>,
    /// Virtual-beam amplitudes.
    pub c: Option<Complex64>,
    pub d: Option<Complex64>,
    pub r: Option<f64>,
    pub t: Option<f64>,
    pub r_w: Option<f64>,
    pub t_w: Option<f64>,
    pub r_g: Option<f64>,
    /// Not part of the original construction; flagged as an extension in JSON.
    pub t_g: Option<f64>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn has_virtual_beam(&self) -> bool {
        self.c.is_some()
    }

    /// Re-checks `R + T = 1`, `R_w + T_w = 1` and `R_G = 1` where defined.
    pub fn validate(&self) -> Result<(), String> {
        let check = |name: &str, v: Option<f64>| match v {
            Some(v) if (v - 1.0).abs() > ROW_TOLERANCE || !v.is_finite() => {
                Err(format!("{name} = {v:.17e} violates the unit identity"))
            }
            _ => Ok(()),
        };
        check("R+T", self.r.zip(self.t).map(|(r, t)| r + t))?;
        check("R_w+T_w", self.r_w.zip(self.t_w).map(|(r, t)| r + t))?;
        check("R_G", self.r_g)?;
        check("T_G", self.t_g)
    }
}

/// Evaluates one `(m, V, E)` point. Invalid parameters are an error;
/// regime-related failures are recorded in the `error` field.
pub fn build_record(mass: f64, potential: f64, energy: f64) -> Result<RunRecord, Error> {
    let setup = PhysicalSetup::new(mass, potential)?;
    let beam = BeamEnergy::new(energy)?;
    let regime = classify_regime(&setup, beam);
    let mut rec = RunRecord {
        mass,
        potential,
        energy,
        regime,
        k1: None,
        k2: None,
        a: None,
        b: None,
        c: None,
        d: None,
        r: None,
        t: None,
        r_w: None,
        t_w: None,
        r_g: None,
        t_g: None,
        error: None,
    };
    let momenta = match effective_momenta(&setup, beam) {
        Ok(p) => p,
        Err(e) => {
            rec.error = Some(format!("{regime}: {e}"));
            return Ok(rec);
        }
    };
    rec.k1 = Some(momenta.k1);
    rec.k2 = Some(momenta.k2);
    let left = match solve_left_incident(&setup, beam) {
        Ok(sol) => sol,
        Err(e) => {
            rec.error = Some(format!("{regime} ({}): {e}", regime.rule()));
            return Ok(rec);
        }
    };
    let coeffs = reflection_transmission(&left);
    rec.a = Some(left.reflected_amp());
    rec.b = Some(left.transmitted_amp());
    rec.r = Some(coeffs.reflection);
    rec.t = Some(coeffs.transmission);
    if regime == Regime::KleinZone {
        let right = solve_right_incident(&setup, beam)?;
        let global = resolve(&setup, beam)?;
        rec.c = Some(right.reflected_amp());
        rec.d = Some(right.transmitted_amp());
        rec.r_w = Some(global.r_w);
        rec.t_w = Some(global.t_w);
        rec.r_g = Some(global.r_g);
        rec.t_g = Some(global.t_g);
    }
    if let Err(msg) = rec.validate() {
        rec.error = Some(msg);
    }
    Ok(rec)
}

/// Fixed 17-significant-digit formatting, exact on round trip.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

fn csv_row(rec: &RunRecord) -> Vec<String> {
    let re = |z: Option<Complex64>| opt(z.map(|z| z.re));
    let im = |z: Option<Complex64>| opt(z.map(|z| z.im));
    vec![
        fmt17(rec.energy),
        rec.regime.to_string(),
        opt(rec.k1),
        re(rec.k2),
        im(rec.k2),
        re(rec.a),
        im(rec.a),
        re(rec.b),
        im(rec.b),
        re(rec.c),
        im(rec.c),
        re(rec.d),
        im(rec.d),
        opt(rec.r),
        opt(rec.t),
        opt(rec.r_w),
        opt(rec.t_w),
        opt(rec.r_g),
        opt(rec.t_g),
        rec.error.clone().unwrap_or_default(),
    ]
}

pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for rec in records {
        w.write_record(csv_row(rec))?;
    }
    w.flush()
}

fn complex_json(z: Option<Complex64>) -> Value {
    z.map_or(Value::Null, |z| json!({ "re": z.re, "im": z.im }))
}

pub fn record_json(rec: &RunRecord) -> Value {
    let virtual_beam = if rec.has_virtual_beam() {
        json!({
            "virtual": true,
            "C": complex_json(rec.c),
            "D": complex_json(rec.d),
            "R_w": rec.r_w,
            "T_w": rec.t_w,
        })
    } else {
        Value::Null
    };
    json!({
        "mass": rec.mass,
        "potential": rec.potential,
        "energy": rec.energy,
        "regime": rec.regime.as_str(),
        "k1": rec.k1,
        "k2": complex_json(rec.k2),
        "A": complex_json(rec.a),
        "B": complex_json(rec.b),
        "R": rec.r,
        "T": rec.t,
        "virtual_beam": virtual_beam,
        "R_G": rec.r_g,
        "T_G": rec.t_g,
        "T_G_is_extension": true,
        "error": rec.error,
    })
}

pub fn write_json<W: Write>(records: &[RunRecord], mut out: W) -> io::Result<()> {
    let values: Vec<Value> = records.iter().map(record_json).collect();
    serde_json::to_writer_pretty(&mut out, &values)?;
    writeln!(out)
}

fn write_records(records: &[RunRecord], format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => write_csv(records, &mut buf)?,
        Format::Json => write_json(records, &mut buf)?,
    }
    match out {
        Some(path) => fs::write(path, buf)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => io::stdout().write_all(&buf)?,
    }
    Ok(())
}

/// Validated sweep parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub mass: f64,
    pub potential: f64,
    pub energy_min: f64,
    pub energy_max: f64,
    pub num_samples: usize,
}

impl SweepSpec {
    pub fn new(
        mass: f64,
        potential: f64,
        energy_min: f64,
        energy_max: f64,
        num_samples: usize,
    ) -> Result<Self, Error> {
        PhysicalSetup::new(mass, potential)?;
        if !(energy_min.is_finite() && energy_max.is_finite() && energy_min < energy_max) {
            return Err(Error::InvalidInput(format!(
                "need finite energy_min < energy_max, got [{energy_min}, {energy_max}]"
            )));
        }
        if num_samples < 1 {
            return Err(Error::InvalidInput("samples must be >= 1".into()));
        }
        Ok(Self { mass, potential, energy_min, energy_max, num_samples })
    }

    /// Uniform samples including both endpoints; a single sample sits at
    /// `energy_min`.
    pub fn energies(&self) -> Vec<f64> {
        let n = self.num_samples;
        if n == 1 {
            return vec![self.energy_min];
        }
        let span = self.energy_max - self.energy_min;
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.energy_max
                } else {
                    self.energy_min + span * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

/// Evaluates every sample, in ascending energy order regardless of `execution`.
pub fn sweep_records(spec: &SweepSpec, execution: Execution) -> Result<Vec<RunRecord>, Error> {
    map_ordered(execution, &spec.energies(), |&e| build_record(spec.mass, spec.potential, e))
        .into_iter()
        .collect()
}

fn summary(rec: &RunRecord) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "mass       {}", rec.mass);
    let _ = writeln!(s, "potential  {}", rec.potential);
    let _ = writeln!(s, "energy     {}", rec.energy);
    let _ = writeln!(s, "regime     {} ({})", rec.regime, rec.regime.rule());
    if let (Some(k1), Some(k2)) = (rec.k1, rec.k2) {
        let _ = writeln!(s, "k1         {}", fmt17(k1));
        let _ = writeln!(s, "k2         {} + {}i", fmt17(k2.re), fmt17(k2.im));
    }
    for (name, z) in [("A", rec.a), ("B", rec.b), ("C (virtual)", rec.c), ("D (virtual)", rec.d)] {
        if let Some(z) = z {
            let _ = writeln!(s, "{name:<10} {} + {}i", fmt17(z.re), fmt17(z.im));
        }
    }
    for (name, v) in [
        ("R", rec.r),
        ("T", rec.t),
        ("R_w", rec.r_w),
        ("T_w", rec.t_w),
        ("R_G", rec.r_g),
        ("T_G (ext)", rec.t_g),
    ] {
        if let Some(v) = v {
            let _ = writeln!(s, "{name:<10} {}", fmt17(v));
        }
    }
    s
}

fn cmd_regime(args: PointArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let mass = cfg.pick(args.mass, "mass")?.unwrap_or(1.0);
    let potential = cfg.require(args.potential, "potential")?;
    let energy = cfg.require(args.energy, "energy")?;
    let setup = PhysicalSetup::new(mass, potential)?;
    let beam = BeamEnergy::new(energy)?;
    let regime = classify_regime(&setup, beam);
    println!("regime     {regime} ({})", regime.rule());
    if let Ok(p) = effective_momenta(&setup, beam) {
        println!("k1         {}", fmt17(p.k1));
        println!("k2         {} + {}i", fmt17(p.k2.re), fmt17(p.k2.im));
    }
    Ok(())
}

fn cmd_scatter(args: ScatterArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let mass = cfg.pick(args.point.mass, "mass")?.unwrap_or(1.0);
    let potential = cfg.require(args.point.potential, "potential")?;
    let energy = cfg.require(args.point.energy, "energy")?;
    let format = cfg.pick(args.format, "format")?.unwrap_or(Format::Csv);
    let out = cfg.pick(args.out.map(|p| p.display().to_string()), "out")?.map(PathBuf::from);

    let rec = build_record(mass, potential, energy)?;
    print!("{}", summary(&rec));
    if let Some(msg) = &rec.error {
        return Err(CliError::Invalid(format!("cannot scatter: {msg}")));
    }
    if let Some(path) = out {
        write_records(std::slice::from_ref(&rec), format, Some(&path))?;
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let spec = SweepSpec::new(
        cfg.pick(args.mass, "mass")?.unwrap_or(1.0),
        cfg.require(args.potential, "potential")?,
        cfg.require(args.energy_min, "energy-min")?,
        cfg.require(args.energy_max, "energy-max")?,
        cfg.require(args.samples, "samples")?,
    )?;
    let format = cfg.pick(args.format, "format")?.unwrap_or(Format::Csv);
    let out = cfg.pick(args.out.map(|p| p.display().to_string()), "out")?.map(PathBuf::from);

    let mut records = sweep_records(&spec, Execution::default())?;
    if records.iter().all(|r| r.r.is_none()) {
        eprintln!(
            "warning: EmptySweep: no sample in [{}, {}] yields coefficients; writing header only",
            spec.energy_min, spec.energy_max
        );
        records.clear();
    }
    write_records(&records, format, out.as_deref())
}

fn simulate_summary(
    coeffs: &NumericCoefficients,
    analytic: Option<(f64, f64)>,
    averaged: Option<f64>,
    format: Format,
) -> String {
    match format {
        Format::Json => {
            let v = json!({
                "R_num": coeffs.r_num,
                "T_num": coeffs.t_num,
                "charge_drift": coeffs.charge_drift,
                "final_time": coeffs.final_time,
                "steps": coeffs.steps,
                "boundary_amplitude_ratio": coeffs.boundary_amplitude_ratio,
                "R_analytic": analytic.map(|a| a.0),
                "T_analytic": analytic.map(|a| a.1),
                "R_packet_average": averaged,
            });
            format!("{}\n", serde_json::to_string_pretty(&v).unwrap_or_default())
        }
        Format::Csv => {
            let mut s = String::new();
            let _ = writeln!(s, "R_num          {}", fmt17(coeffs.r_num));
            let _ = writeln!(s, "T_num          {}", fmt17(coeffs.t_num));
            let _ = writeln!(s, "charge_drift   {:.3e}", coeffs.charge_drift);
            let _ = writeln!(s, "final_time     {}", coeffs.final_time);
            let _ = writeln!(s, "steps          {}", coeffs.steps);
            if let Some((r, t)) = analytic {
                let _ = writeln!(s, "R_analytic     {}", fmt17(r));
                let _ = writeln!(s, "T_analytic     {}", fmt17(t));
            }
            if let Some(r) = averaged {
                let _ = writeln!(s, "R_packet_avg   {}", fmt17(r));
            }
            s
        }
    }
}

fn cmd_simulate(args: SimulateArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let mass = cfg.pick(args.point.mass, "mass")?.unwrap_or(1.0);
    let potential = cfg.require(args.point.potential, "potential")?;
    let energy = cfg.require(args.point.energy, "energy")?;
    let mut config = LatticeConfig::new(
        cfg.pick(args.half_width, "half-width")?.unwrap_or(400.0),
        cfg.pick(args.grid_points, "grid-points")?.unwrap_or(8001),
        cfg.pick(args.total_time, "total-time")?.unwrap_or(400.0),
    );
    if let Some(f) = cfg.pick(args.time_step_factor, "time-step-factor")? {
        config.time_step_factor = f;
    }
    let spec = PacketSpec::new(
        energy,
        cfg.pick(args.center, "center")?.unwrap_or(-80.0),
        cfg.pick(args.sigma, "sigma")?.unwrap_or(10.0),
    );
    let every = cfg.pick(args.snapshot_every, "snapshot-every")?.unwrap_or(0);
    let format = cfg.pick(args.format, "format")?.unwrap_or(Format::Csv);
    let out = cfg.pick(args.out.map(|p| p.display().to_string()), "out")?.map(PathBuf::from);

    let setup = PhysicalSetup::new(mass, potential)?;
    // Dry initialisation so that bad parameters fail before any file exists.
    let mut probe = build_lattice(&config, &setup)?;
    init_packet(&mut probe, &spec, &setup, &config)?;
    drop(probe);
    let snapshot_dir = match (every, out) {
        (0, _) => None,
        (_, None) => {
            return Err(CliError::Invalid("--snapshot-every needs --out <DIR>".into()));
        }
        (_, Some(dir)) => Some(dir),
    };
    if let Some(dir) = &snapshot_dir {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    }

    let mut index = 0usize;
    let coeffs = run_observed(&config, &setup, &spec, every, |state| {
        let Some(dir) = &snapshot_dir else { return Ok(()) };
        let path = dir.join(format!("snapshot_{index:05}.dat"));
        index += 1;
        let mut file = io::BufWriter::new(fs::File::create(&path)?);
        write_snapshot(state, &setup, &mut file)?;
        file.flush()?;
        Ok(())
    })?;

    let beam = BeamEnergy::new(energy)?;
    let analytic = solve_left_incident(&setup, beam).ok().map(|sol| {
        let c = reflection_transmission(&sol);
        (c.reflection, c.transmission)
    });
    let averaged = momentum_averaged_reflection(&setup, &spec).ok();
    print!("{}", simulate_summary(&coeffs, analytic, averaged, format));
    if coeffs.boundary_amplitude_ratio > 1e-8 {
        eprintln!(
            "warning: field reached the domain edge (ratio {:.2e}); enlarge --half-width",
            coeffs.boundary_amplitude_ratio
        );
    }
    Ok(())
}

fn cmd_images(args: ImagesArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let charge = cfg.pick(args.charge, "charge")?.unwrap_or(1.0);
    let height = cfg.pick(args.height, "height")?.unwrap_or(1.0);
    let extent = cfg.pick(args.extent, "extent")?.unwrap_or(10.0);
    let grid = cfg.pick(args.grid, "grid")?.unwrap_or(101);
    let out = cfg.pick(args.out.map(|p| p.display().to_string()), "out")?.map(PathBuf::from);
    let problem = ImageProblem::new(charge, height)?;
    if !(extent.is_finite() && extent > 0.0) || grid < 1 {
        return Err(CliError::Invalid(format!("need extent > 0 and grid >= 1, got {extent}, {grid}")));
    }

    let residual = boundary_residual(&problem, extent, grid);
    println!("boundary_residual  {residual:.3e}");
    for p in [[0.0, 0.0, 2.0 * height], [height, 0.0, height]] {
        let direct = potential_charge_above_plane(&problem, &p)?;
        let green = potential_via_green(&problem, &p)?;
        println!(
            "V({}, {}, {})  {}  (green route {})",
            p[0],
            p[1],
            p[2],
            fmt17(direct),
            fmt17(green)
        );
    }
    if let Some(path) = out {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["x", "y", "V"])?;
        for p in plane_grid(extent, grid) {
            let v = potential_charge_above_plane(&problem, &p)?;
            w.write_record([fmt17(p[0]), fmt17(p[1]), fmt17(v)])?;
        }
        let buf = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(&path, buf)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Regime(a) => cmd_regime(a, &cfg),
        Command::Scatter(a) => cmd_scatter(a, &cfg),
        Command::Sweep(a) => cmd_sweep(a, &cfg),
        Command::Simulate(a) => cmd_simulate(a, &cfg),
        Command::Images(a) => cmd_images(a, &cfg),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn klein_record() {
        let rec = build_record(1.0, 4.0, 1.5).unwrap();
        assert_eq!(rec.regime, Regime::KleinZone);
        assert!(rec.error.is_none());
        assert!((rec.r_g.unwrap() - 1.0).abs() < 1e-12);
        assert!((rec.r.unwrap() - 8.444_073_748_671_087).abs() < 1e-12);
        assert!(rec.has_virtual_beam());
    }

    #[test]
    fn out_of_zone_records_leave_fields_empty() {
        let rec = build_record(1.0, 4.0, 3.5).unwrap();
        assert_eq!(rec.regime, Regime::Evanescent);
        assert_eq!((rec.r, rec.t), (Some(1.0), Some(0.0)));
        assert!(rec.c.is_none() && rec.r_g.is_none());
        let row = csv_row(&rec);
        assert_eq!(row[9], "");
        assert_eq!(row[17], "");

        let rec = build_record(1.0, 4.0, 0.5).unwrap();
        assert!(rec.error.unwrap().contains("E <= m"));
        let rec = build_record(1.0, 0.0, 2.0).unwrap();
        assert_eq!(rec.regime, Regime::DegenerateBoundary);
        assert!(rec.error.unwrap().contains("degenerate momenta"));
    }

    #[test]
    fn failed_validation_is_reported() {
        let mut rec = build_record(1.0, 4.0, 1.5).unwrap();
        rec.t = Some(0.0);
        assert!(rec.validate().unwrap_err().contains("R+T"));
    }

    #[test]
    fn sweep_energies() {
        let spec = SweepSpec::new(1.0, 10.0, 1.5, 8.5, 8).unwrap();
        assert_eq!(spec.energies(), vec![1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 7.5, 8.5]);
        let one = SweepSpec::new(1.0, 10.0, 1.5, 8.5, 1).unwrap();
        assert_eq!(one.energies(), vec![1.5]);
        assert!(SweepSpec::new(1.0, 10.0, 2.0, 1.0, 3).is_err());
        assert!(SweepSpec::new(1.0, 10.0, 1.0, 2.0, 0).is_err());
    }

    #[test]
    fn sweep_is_order_stable_across_modes() {
        let spec = SweepSpec::new(1.0, 10.0, 1.1, 12.0, 257).unwrap();
        let a = sweep_records(&spec, Execution::Sequential).unwrap();
        let b = sweep_records(&spec, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].energy < w[1].energy));
    }

    #[test]
    fn config_file_parsing() {
        let cfg = ConfigFile::parse("# comment\nmass = 2\n--potential=4 # inline\n\nenergy-min = 1.5\n").unwrap();
        assert_eq!(cfg.pick::<f64>(None, "mass").unwrap(), Some(2.0));
        assert_eq!(cfg.pick(Some(3.0), "mass").unwrap(), Some(3.0));
        assert_eq!(cfg.pick::<f64>(None, "potential").unwrap(), Some(4.0));
        assert_eq!(cfg.pick::<f64>(None, "energy-min").unwrap(), Some(1.5));
        assert_eq!(cfg.pick::<f64>(None, "energy").unwrap(), None);
        assert!(ConfigFile::parse("garbage").is_err());
        assert!(cfg.pick::<usize>(None, "mass").is_ok());
        let bad = ConfigFile::parse("samples = many").unwrap();
        assert!(bad.pick::<usize>(None, "samples").is_err());
    }

    #[test]
    fn number_formatting_round_trips() {
        for x in [0.1, -7.444_073_748_671_087, 1e-300, 5.663_428_511_917_159] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}
