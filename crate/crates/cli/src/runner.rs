use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use hamflow::quantum::{self, GridWavefunction, QuantumError, QuantumParams};
use hamflow::{
    compare_flows, integrate, integrate_reference, on_shell_init, ChargedCanonical, DeviationReport, DynamicsError,
    Flow, FreeNonRel, HamiltonianModel, ModelError, ModifiedHamiltonian, OpticsRay, Relativistic, State3D,
};
use thiserror::Error;

use crate::scenario::{Mode, ModelKind, Scenario};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("integration failed: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
    #[error("quantum evolution failed: {0}")]
    Quantum(#[from] QuantumError),
    #[error("check failed: {0}")]
    Check(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } => crate::EXIT_IO,
            _ => crate::EXIT_RUNTIME,
        }
    }
}

/// Diagnostics summary of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub mode: Mode,
    pub model: &'static str,
    pub c: f64,
    pub hbar: f64,
    pub mass: f64,
    pub charge: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub rows: usize,
    pub output: PathBuf,
    pub max_constraint: f64,
    pub final_energy: f64,
    pub deviation: Option<DeviationReport>,
    pub ehrenfest: Option<quantum::EhrenfestReport>,
    pub max_norm_drift: Option<f64>,
    pub wall_clock_s: f64,
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mode = {}", self.mode)?;
        writeln!(f, "model = {}", self.model)?;
        writeln!(f, "c = {}", self.c)?;
        writeln!(f, "hbar = {}", self.hbar)?;
        writeln!(f, "mass = {}", self.mass)?;
        writeln!(f, "charge = {}", self.charge)?;
        writeln!(f, "dt = {}", self.dt)?;
        writeln!(f, "n_steps = {}", self.n_steps)?;
        writeln!(f, "output = {}", self.output.display())?;
        writeln!(f, "rows = {}", self.rows)?;
        writeln!(f, "max_constraint = {:e}", self.max_constraint)?;
        writeln!(f, "final_energy = {}", self.final_energy)?;
        if let Some(d) = &self.deviation {
            writeln!(f, "max_position_deviation = {:e}", d.max_position)?;
            writeln!(f, "max_momentum_deviation = {:e}", d.max_momentum)?;
            writeln!(f, "max_energy_deviation = {:e}", d.max_energy)?;
        }
        if let Some(e) = &self.ehrenfest {
            writeln!(f, "ehrenfest_position = {:e}", e.position)?;
            writeln!(f, "ehrenfest_momentum = {:e}", e.momentum)?;
            writeln!(f, "ehrenfest_energy = {:e}", e.energy)?;
        }
        if let Some(n) = self.max_norm_drift {
            writeln!(f, "max_norm_drift = {n:e}")?;
        }
        write!(f, "wall_clock_s = {:.3}", self.wall_clock_s)
    }
}

fn build_model(s: &Scenario) -> Arc<dyn HamiltonianModel> {
    match s.model {
        ModelKind::FreeNonRel => Arc::new(FreeNonRel::new(s.mass, s.potential.clone())),
        ModelKind::Relativistic => Arc::new(Relativistic::new(s.mass, s.c, s.potential.clone())),
        ModelKind::ChargedCanonical => {
            let potentials = s
                .field
                .as_ref()
                .and_then(|f| f.gauge_potentials())
                .expect("validated scenario has a closed-form field");
            Arc::new(ChargedCanonical::new(s.mass, s.charge, s.c, potentials))
        }
        ModelKind::OpticsRay => {
            Arc::new(OpticsRay::new(s.c, s.index.clone().expect("validated scenario has an index")))
        }
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), RunError> {
    let io_err = |source| RunError::Io { path: path.to_path_buf(), source };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    f(&mut out).map_err(io_err)?;
    out.flush().map_err(io_err)
}

/// Runs a validated scenario, writing its CSV to `scenario.output`.
pub fn run(s: &Scenario) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let mut report = RunReport {
        mode: s.mode,
        model: s.model.as_str(),
        c: s.c,
        hbar: s.hbar,
        mass: s.mass,
        charge: s.charge,
        dt: s.dt,
        n_steps: s.n_steps,
        rows: 0,
        output: s.output.clone(),
        max_constraint: 0.0,
        final_energy: 0.0,
        deviation: None,
        ehrenfest: None,
        max_norm_drift: None,
        wall_clock_s: 0.0,
    };

    match s.mode {
        Mode::Quantum => run_quantum(s, &mut report)?,
        Mode::Reference3d => {
            let model = build_model(s);
            let init = s.initial.expect("validated");
            let initial = State3D::new(init.t0, init.r, init.p, model.as_ref())?;
            let traj = integrate_reference(&initial, model.as_ref(), s.dt, s.n_steps)?;
            write_file(&s.output, |out| traj.write_csv(out, s.c))?;
            report.rows = traj.len();
            report.max_constraint = traj.max_abs_constraint();
            report.final_energy = traj.samples.last().expect("non-empty").state.eps;
        }
        Mode::Canonical4d | Mode::Gauge4d | Mode::Compare => {
            let model = build_model(s);
            let mh = ModifiedHamiltonian::new(model.clone(), s.c);
            let init = s.initial.expect("validated");
            let initial = on_shell_init(init.t0, init.r, init.p, model.as_ref(), s.c)?;
            let flow = match (s.mode, &s.field) {
                (Mode::Gauge4d, Some(field)) => Flow::Gauge { field, charge: s.charge },
                _ => Flow::Canonical,
            };
            let traj = integrate(&initial, &mh, flow, s.dt, s.n_steps)?;
            write_file(&s.output, |out| traj.write_csv(out))?;
            report.rows = traj.len();
            report.max_constraint = traj.max_abs_constraint();
            report.final_energy = traj.last().diagnostics.energy;

            if s.mode == Mode::Compare {
                let initial = State3D::new(init.t0, init.r, init.p, model.as_ref())?;
                let reference = integrate_reference(&initial, model.as_ref(), s.dt, s.n_steps)?;
                let dev = compare_flows(&traj, &reference)?;
                report.deviation = Some(dev);
                if !(dev.max_position <= s.tolerance) {
                    report.wall_clock_s = start.elapsed().as_secs_f64();
                    return Err(RunError::Check(format!(
                        "max |r4d - r3d| = {:e} exceeds tolerance {:e}",
                        dev.max_position, s.tolerance
                    )));
                }
            }
        }
    }

    if !(report.max_constraint.is_finite() && report.final_energy.is_finite()) {
        return Err(RunError::Check("non-finite diagnostics".into()));
    }
    report.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(report)
}

fn run_quantum(s: &Scenario, report: &mut RunReport) -> Result<(), RunError> {
    let packet = s.packet.expect("validated");
    let params = QuantumParams { mass: s.mass, hbar: s.hbar, stencil: s.grid.stencil };
    let psi = GridWavefunction::gaussian(s.grid.points, s.grid.x_min, s.grid.x_max, packet.x0, packet.k0, packet.sigma)?;
    let out = quantum::run(&psi, &s.potential, s.dt, s.n_steps, params)?;
    write_file(&s.output, |w| quantum::write_records_csv(&out.records, w))?;
    report.rows = out.records.len();
    report.final_energy = out.records.last().expect("non-empty").energy_mean;
    report.max_norm_drift = Some(out.max_norm_drift);
    if out.records.len() >= 3 {
        report.ehrenfest = Some(quantum::ehrenfest_check(&out.records, s.dt, s.mass)?);
    }
    Ok(())
}
