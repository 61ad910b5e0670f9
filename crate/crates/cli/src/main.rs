//! `ffr`: lookup tables, closed-form nadirs, commitment schedules and event
//! simulations for DFIG fast frequency response.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ffr_core::config::Config;
use ffr_core::cosim::{recovery_sweep, run_scenario, ScenarioConfig};
use ffr_core::dispatch::{min_commitment, Commitment, Method, UnitRecord};
use ffr_core::sfr::{nadir_closed_form, settling_frequency, SfrParams};
use ffr_core::{io, pipeline, surge, Error, Exec};

const EXIT_OTHER: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_ROTOR: u8 = 4;

#[derive(Parser)]
#[command(name = "ffr", version, about = "Fast frequency response planning for DFIG wind fleets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file; defaults to `default.toml` in $FFR_CONFIG_DIR, then built-in values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = "ffr-out")]
    out: PathBuf,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,
    #[arg(long, env = "FFR_CONFIG_DIR", hide_env_values = true, global = true)]
    config_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Maximum surge per wind speed, `table.csv`.
    Table(Common),
    /// Closed-form nadir and settling frequency with and without wind displacement, `nadir.csv`.
    Nadir(Common),
    /// Minimum commitment for a required nadir uplift, `schedule.csv`.
    Schedule {
        #[command(flatten)]
        common: Common,
        /// Fleet CSV `id,v_w,delta_p_max,sensitivity`; computed from the config when omitted.
        #[arg(long)]
        fleet: Option<PathBuf>,
        /// Required nadir uplift, Hz; derived from the event and threshold when omitted.
        #[arg(long)]
        uplift: Option<f64>,
    },
    /// Co-simulate the loss event, `trace.csv`, `frequency.csv`, `metrics.txt`, `metrics.csv`.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dt: Option<f64>,
        /// Recovery time of every scheduled unit, s.
        #[arg(long = "t-rec")]
        t_rec: Option<f64>,
        /// Run without any support units.
        #[arg(long)]
        no_support: bool,
    },
    /// Recovery-time trade-off, `sweep.csv`.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dt: Option<f64>,
        /// Comma-separated recovery times, s.
        #[arg(long = "t-rec", value_delimiter = ',')]
        t_rec: Vec<f64>,
    },
}

#[derive(Debug)]
struct Infeasible {
    achievable: f64,
    required: f64,
}

impl fmt::Display for Infeasible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "infeasible: the whole fleet lifts the nadir by {:.6} Hz, {:.6} Hz required",
            self.achievable, self.required
        )
    }
}

impl std::error::Error for Infeasible {}

struct Output {
    dir: PathBuf,
    force: bool,
    command: &'static str,
}

impl Output {
    /// Refuses to clobber any of `names` or the command's manifest unless
    /// forced, then creates the directory.
    fn prepare(common: &Common, command: &'static str, names: &[&str]) -> Result<Self> {
        let manifest = format!("manifest-{command}.txt");
        if !common.force {
            for n in names.iter().copied().chain([manifest.as_str()]) {
                let p = common.out.join(n);
                if p.exists() {
                    bail!("{} exists; pass --force to overwrite", p.display());
                }
            }
        }
        std::fs::create_dir_all(&common.out)
            .with_context(|| format!("creating output directory {}", common.out.display()))?;
        Ok(Self {
            dir: common.out.clone(),
            force: common.force,
            command,
        })
    }

    fn write<F>(&self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.dir.join(name);
        if !self.force && path.exists() {
            bail!("{} exists; pass --force to overwrite", path.display());
        }
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        f(&mut w)?;
        w.flush().with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    fn manifest(&self, config_path: Option<&Path>) -> Result<()> {
        self.write(&format!("manifest-{}.txt", self.command), |w| {
            writeln!(w, "command = {}", self.command)?;
            match config_path {
                Some(p) => writeln!(w, "config_path = {}", p.display())?,
                None => writeln!(w, "config_path = (built-in defaults)")?,
            }
            writeln!(w, "output_dir = {}", self.dir.display())?;
            writeln!(w, "deterministic = true")?;
            writeln!(w, "tool_version = {}", env!("CARGO_PKG_VERSION"))?;
            Ok(())
        })
    }
}

fn load_config(common: &Common) -> Result<(Config, Option<PathBuf>)> {
    let path = match &common.config {
        Some(p) => Some(p.clone()),
        None => common
            .config_dir
            .as_ref()
            .map(|d| d.join("default.toml"))
            .filter(|p| p.exists()),
    };
    let cfg = match &path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    Ok((cfg, path))
}

fn cmd_table(common: &Common) -> Result<()> {
    let (cfg, path) = load_config(common)?;
    let turbine = cfg.turbine_params()?;
    let rows = surge::build_table_with(
        Exec::default(),
        &cfg.table.wind_speeds,
        cfg.surge.t_del,
        &turbine,
        cfg.surge.energy_formula,
    )?;
    let out = Output::prepare(common, "table", &["table.csv"])?;
    out.write("table.csv", |w| Ok(io::write_table(w, &rows)?))?;
    out.manifest(path.as_deref())?;
    println!("wrote {} rows to {}", rows.len(), out.dir.join("table.csv").display());
    Ok(())
}

fn cmd_nadir(common: &Common) -> Result<()> {
    let (cfg, path) = load_config(common)?;
    let dp = cfg.event.delta_p_loss;
    let cases: [(&str, SfrParams); 2] = [
        ("synchronous", cfg.sfr_synchronous()),
        ("with_wind", cfg.sfr_effective()?),
    ];
    let out = Output::prepare(common, "nadir", &["nadir.csv"])?;
    let mut rows = Vec::new();
    for (name, p) in cases {
        let n = nadir_closed_form(&p, dp)?;
        let fs = settling_frequency(&p, dp);
        println!("{name}: f_min = {:.6} Hz at t_n = {:.6} s, f_settle = {fs:.6} Hz", n.f_min, n.t_n);
        rows.push([name.to_string(), io::fmt6(dp), io::fmt6(n.f_min), io::fmt6(n.t_n), io::fmt6(fs)]);
    }
    out.write("nadir.csv", |w| {
        writeln!(w, "case,delta_p,f_min,t_n,f_settle")?;
        for r in &rows {
            writeln!(w, "{}", r.join(","))?;
        }
        Ok(())
    })?;
    out.manifest(path.as_deref())?;
    Ok(())
}

fn scenario_with(cfg: &Config, dt: Option<f64>, t_rec: Option<f64>) -> Result<ScenarioConfig> {
    let mut cfg = cfg.clone();
    if let Some(dt) = dt {
        cfg.simulation.dt = dt;
    }
    if let Some(t) = t_rec {
        cfg.surge.t_rec = t;
    }
    cfg.validate()?;
    Ok(cfg.scenario()?)
}

fn print_commitment(c: &Commitment) {
    match c {
        Commitment::Feasible(s) => {
            let units = if s.committed.is_empty() {
                "none".to_string()
            } else {
                s.committed.join(", ")
            };
            println!(
                "committed units: {units} ({} of them, {} search)\npredicted uplift = {:.6} Hz, required = {:.6} Hz",
                s.committed.len(),
                match s.method {
                    Method::Exhaustive => "exhaustive",
                    Method::Greedy => "greedy, possibly suboptimal",
                },
                s.predicted_uplift,
                s.required_uplift
            );
        }
        Commitment::Infeasible {
            achievable_uplift,
            required_uplift,
        } => println!(
            "infeasible: achievable uplift = {achievable_uplift:.6} Hz, required = {required_uplift:.6} Hz"
        ),
    }
}

fn infeasible(c: &Commitment) -> Option<Infeasible> {
    match c {
        Commitment::Infeasible {
            achievable_uplift,
            required_uplift,
        } => Some(Infeasible {
            achievable: *achievable_uplift,
            required: *required_uplift,
        }),
        Commitment::Feasible(_) => None,
    }
}

fn cmd_schedule(common: &Common, fleet: Option<&Path>, uplift: Option<f64>) -> Result<()> {
    let (units, required, path): (Vec<UnitRecord>, f64, Option<PathBuf>) = match fleet {
        Some(f) => {
            let Some(required) = uplift else {
                bail!("--uplift is required together with --fleet");
            };
            let file = File::open(f).with_context(|| format!("opening {}", f.display()))?;
            let units = io::read_fleet(file).with_context(|| format!("reading {}", f.display()))?;
            (units, required, None)
        }
        None => {
            let (cfg, path) = load_config(common)?;
            let scenario = cfg.scenario()?;
            let plan = pipeline::plan(Exec::default(), &scenario, cfg.dispatch.probe)?;
            println!("unsupported nadir = {:.6} Hz", plan.baseline_nadir);
            (plan.records, uplift.unwrap_or(plan.required_uplift), path)
        }
    };
    let commitment = min_commitment(&units, required)?;
    print_commitment(&commitment);
    if let Some(e) = infeasible(&commitment) {
        return Err(e.into());
    }
    let schedule = commitment.schedule().expect("feasible");
    let mut names = vec!["schedule.csv"];
    if fleet.is_none() {
        names.push("fleet.csv");
    }
    let out = Output::prepare(common, "schedule", &names)?;
    out.write("schedule.csv", |w| Ok(io::write_schedule(w, &units, schedule)?))?;
    if fleet.is_none() {
        out.write("fleet.csv", |w| Ok(io::write_fleet(w, &units)?))?;
    }
    out.manifest(path.as_deref().or(fleet))?;
    Ok(())
}

/// Applies the automatic commitment when the config asks for it.
fn scheduled(cfg: &Config, scenario: ScenarioConfig) -> Result<ScenarioConfig> {
    if !cfg.dispatch.auto_schedule {
        return Ok(scenario);
    }
    let plan = pipeline::plan(Exec::default(), &scenario, cfg.dispatch.probe)?;
    print_commitment(&plan.commitment);
    match plan.commitment.schedule() {
        Some(s) => Ok(pipeline::apply(&scenario, s)),
        None => Err(infeasible(&plan.commitment).expect("infeasible").into()),
    }
}

fn cmd_simulate(common: &Common, dt: Option<f64>, t_rec: Option<f64>, no_support: bool) -> Result<()> {
    let (cfg, path) = load_config(common)?;
    let scenario = scenario_with(&cfg, dt, t_rec)?;
    let scenario = if no_support {
        pipeline::baseline(&scenario)
    } else {
        scheduled(&cfg, scenario)?
    };
    let out = Output::prepare(
        common,
        "simulate",
        &["trace.csv", "frequency.csv", "metrics.txt", "metrics.csv"],
    )?;
    let run = run_scenario(&scenario)?;
    let ids = &run.trace.unit_ids;
    let text = io::metrics_text(&run.metrics, ids);
    print!("{text}");
    out.write("trace.csv", |w| Ok(io::write_trace(w, &run.trace)?))?;
    out.write("frequency.csv", |w| Ok(io::write_frequency(w, &run.trace.t, &run.trace.f_hz)?))?;
    out.write("metrics.txt", |w| Ok(w.write_all(text.as_bytes())?))?;
    out.write("metrics.csv", |w| Ok(io::write_metrics_csv(w, &run.metrics, ids)?))?;
    out.manifest(path.as_deref())?;
    Ok(())
}

fn cmd_sweep(common: &Common, dt: Option<f64>, t_rec: &[f64]) -> Result<()> {
    let (cfg, path) = load_config(common)?;
    let values = if t_rec.is_empty() {
        cfg.sweep.t_rec_values.clone()
    } else {
        t_rec.to_vec()
    };
    let scenario = scheduled(&cfg, scenario_with(&cfg, dt, None)?)?;
    let out = Output::prepare(common, "sweep", &["sweep.csv"])?;
    let points = recovery_sweep(&scenario, &values)?;
    for p in &points {
        println!(
            "t_rec = {}: second dip = {}, time to settle = {}",
            p.t_rec,
            p.second_dip_nadir.map_or("none".into(), |v| format!("{v:.6} Hz")),
            p.time_to_settle.map_or("not settled".into(), |v| format!("{v:.3} s")),
        );
    }
    out.write("sweep.csv", |w| Ok(io::write_sweep(w, &points)?))?;
    out.manifest(path.as_deref())?;
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Infeasible>().is_some() {
        return EXIT_INFEASIBLE;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::Config(_) | Error::ConfigFile { .. } | Error::UnsupportedRegime { .. }) => EXIT_CONFIG,
        Some(Error::RotorSecurity { .. }) => EXIT_ROTOR,
        _ => EXIT_OTHER,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Table(c) => cmd_table(c),
        Command::Nadir(c) => cmd_nadir(c),
        Command::Schedule { common, fleet, uplift } => cmd_schedule(common, fleet.as_deref(), *uplift),
        Command::Simulate {
            common,
            dt,
            t_rec,
            no_support,
        } => cmd_simulate(common, *dt, *t_rec, *no_support),
        Command::Sweep { common, dt, t_rec } => cmd_sweep(common, *dt, t_rec),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
