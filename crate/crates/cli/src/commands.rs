use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gplm::simulate::{
    calibrate_sweep, calibrate_threshold, CalibrationSweep, GridSpec, SweepAxis, ThresholdCurve,
};
use gplm::{backfit, run_monte_carlo, FamilySpec, FitConfig, GplmFit, SimulationConfig, SimulationReport};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::{CalibrateCmd, FitCmd, IoArgs, SimulateCmd};
use crate::dataset::read_dataset;
use crate::error::{CliError, CliResult};

/// Everything that determines a fit report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitRun {
    pub data: PathBuf,
    pub data_sha256: String,
    pub family: FamilySpec,
    pub fit: FitConfig,
}

#[derive(Debug, Serialize)]
struct FitReport<'a> {
    config: &'a FitRun,
    t: Vec<f64>,
    result: &'a GplmFit,
}

/// Everything that determines a calibration report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrateRun {
    pub simulation: SimulationConfig,
    pub grid: GridSpec,
    pub sweep: Option<SweepAxis>,
}

#[derive(Debug, Serialize)]
struct CalibrateReport<'a> {
    config: &'a CalibrateRun,
    #[serde(skip_serializing_if = "Option::is_none")]
    curve: Option<ThresholdCurve>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<CalibrationSweep>,
}

/// Writes reports to a directory, or everything JSON to stdout.
struct Sink<'a> {
    out: Option<&'a Path>,
    verbose: u8,
}

impl Sink<'_> {
    fn new(io: &IoArgs, verbose: u8) -> CliResult<Sink<'_>> {
        if let Some(dir) = &io.out {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        Ok(Sink { out: io.out.as_deref(), verbose })
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Input(format!("cannot serialize report: {e}")))?;
        text.push('\n');
        match self.out {
            Some(dir) => write_file(&dir.join(name), &text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    /// Delimited side files are only written with `--out`.
    fn text(&self, name: &str, text: &str) -> CliResult<()> {
        match self.out {
            Some(dir) => write_file(&dir.join(name), text),
            None => Ok(()),
        }
    }

    fn log(&self, msg: impl FnOnce() -> String) {
        if self.verbose > 0 {
            eprintln!("gplm: {}", msg());
        }
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// The `config` member of a previously written report.
fn embedded_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let config = value
        .get_mut("config")
        .map(serde_json::Value::take)
        .ok_or_else(|| CliError::Input(format!("{}: no embedded config", path.display())))?;
    serde_json::from_value(config)
        .map_err(|e| CliError::Input(format!("{}: invalid embedded config: {e}", path.display())))
}

fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

pub fn cmd_fit(cmd: &FitCmd, verbose: u8) -> CliResult<()> {
    let run: FitRun = match &cmd.io.config {
        Some(path) => {
            let run: FitRun = embedded_config(path)?;
            run.family.validated()?;
            run.fit.validate()?;
            let digest = sha256_file(&run.data)?;
            if digest != run.data_sha256 {
                return Err(CliError::Input(format!(
                    "{}: contents differ from the recorded checksum",
                    run.data.display()
                )));
            }
            run
        }
        None => {
            let data = cmd.data.clone().expect("clap requires --data without --config");
            let family = cmd.family.family()?;
            let fit = cmd.fit.fit_config()?;
            FitRun { data_sha256: sha256_file(&data)?, data, family, fit }
        }
    };
    let sink = Sink::new(&cmd.io, verbose)?;
    let data = read_dataset(&run.data)?;
    let start = Instant::now();
    let result = backfit(&data, &run.family, &run.fit)?;
    sink.log(|| {
        format!(
            "fit: {} iterations, converged {}, {:.3?}",
            result.iterations,
            result.converged,
            start.elapsed()
        )
    });
    sink.json("fit.json", &FitReport { config: &run, t: data.grid(), result: &result })
}

fn replications_csv(report: &SimulationReport) -> CliResult<String> {
    let p = report.config.p;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["index".to_string()];
    header.extend((1..=p).map(|j| format!("beta{j}")));
    header.extend(["rmise", "iterations", "converged", "error"].map(String::from));
    let csv_err = |e: csv::Error| CliError::Input(format!("cannot write csv: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for r in &report.replications {
        let mut row = vec![r.index.to_string()];
        match &r.beta {
            Some(b) => row.extend(b.iter().map(f64::to_string)),
            None => row.extend(std::iter::repeat(String::new()).take(p)),
        }
        row.push(r.rmise.map(|v| v.to_string()).unwrap_or_default());
        row.push(r.iterations.to_string());
        row.push(r.converged.to_string());
        row.push(r.error.clone().unwrap_or_default());
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(format!("cannot write csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn plot_csv(report: &SimulationReport) -> String {
    let plot = &report.plot;
    let mut s = String::from("t,f0,f_hat\n");
    for (i, (t, f0)) in plot.t.iter().zip(&plot.f0).enumerate() {
        let f_hat = plot.f_hat.as_ref().map(|f| f[i].to_string()).unwrap_or_default();
        let _ = writeln!(s, "{t},{f0},{f_hat}");
    }
    s
}

pub fn cmd_simulate(cmd: &SimulateCmd, verbose: u8) -> CliResult<()> {
    let config: SimulationConfig = match &cmd.io.config {
        Some(path) => embedded_config(path)?,
        None => cmd.sim.simulation_config(cmd.family.family()?, cmd.fit.fit_config()?)?,
    };
    config.validate()?;
    let sink = Sink::new(&cmd.io, verbose)?;
    let report = run_monte_carlo(&config)?;
    sink.log(|| {
        format!(
            "simulate: {} replications ({} failed) in {:.3?}",
            report.replications.len(),
            report.aggregate.failures,
            report.wall_time
        )
    });
    sink.json("report.json", &report)?;
    sink.text("replications.csv", &replications_csv(&report)?)?;
    sink.text("plot.csv", &plot_csv(&report))
}

pub fn cmd_calibrate(cmd: &CalibrateCmd, verbose: u8) -> CliResult<()> {
    let run: CalibrateRun = match &cmd.io.config {
        Some(path) => embedded_config(path)?,
        None => CalibrateRun {
            simulation: cmd.sim.simulation_config(cmd.family.family()?, cmd.fit.fit_config()?)?,
            grid: cmd.grid_spec()?,
            sweep: cmd.sweep()?,
        },
    };
    run.simulation.validate()?;
    let sink = Sink::new(&cmd.io, verbose)?;
    let start = Instant::now();
    let report = match &run.sweep {
        Some(axis) => CalibrateReport {
            config: &run,
            curve: None,
            sweep: Some(calibrate_sweep(&run.simulation, axis, &run.grid)?),
        },
        None => {
            let sim = &run.simulation;
            let lambdas = run.grid.lambdas(&sim.family, sim.n);
            CalibrateReport {
                config: &run,
                curve: Some(calibrate_threshold(sim, &lambdas)?),
                sweep: None,
            }
        }
    };
    sink.log(|| format!("calibrate: {:.3?}", start.elapsed()));
    sink.json("curve.json", &report)
}
