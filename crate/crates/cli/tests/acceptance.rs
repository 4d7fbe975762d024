//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::fs;
use std::panic;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use hamflow::dynamics::convergence::{observed_order, refine_steps};
use hamflow::dynamics::{modified, rhs_4d};
use hamflow::quantum::{commutator_expectation, ehrenfest_check, run as run_quantum, GridWavefunction, QuantumParams};
use hamflow::{
    compare_flows, compare_gauge_routes, integrate, integrate_reference, on_shell_init, step_canonical_4d,
    ChargedCanonical, FieldConfig, Flow, FourVector, FreeNonRel, IndexField, ModifiedHamiltonian,
    OpticsRay, PhasePoint, Potential, Relativistic, State3D, Vec3,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn start(mh: &ModifiedHamiltonian, r: Vec3, p: Vec3) -> PhasePoint {
    on_shell_init(0.0, r, p, mh.model.as_ref(), mh.c).unwrap()
}

fn harmonic() -> Potential {
    Potential::Harmonic { stiffness: 1.0 }
}

fn constraint_conservation() -> Check {
    let clock = Instant::now();
    let mh = modified(FreeNonRel::new(1.0, harmonic()), 1.0);
    let traj = integrate(&start(&mh, Vec3::x(), Vec3::zeros()), &mh, Flow::Canonical, 1e-3, 10_000).unwrap();
    let max_h = traj.max_abs_constraint();

    // Order is measured on the relativistic oscillator: for the linear one
    // RK4's energy error is below rounding at these steps.
    let mh = modified(Relativistic::new(1.0, 1.0, harmonic()), 1.0);
    let init = start(&mh, Vec3::new(10.0, 0.0, 0.0), Vec3::zeros());
    let steps: [f64; 4] = [4e-3, 2e-3, 1e-3, 5e-4];
    let drifts: Vec<f64> = steps
        .iter()
        .map(|&dt| {
            let n = (10.0 / dt).round() as usize;
            integrate(&init, &mh, Flow::Canonical, dt, n).unwrap().max_abs_constraint()
        })
        .collect();
    let order = observed_order(&steps, &drifts);
    let secs = clock.elapsed().as_secs_f64();
    ensure(
        max_h <= 1e-9 && (order - 4.0).abs() <= 0.3 && secs < 1.0,
        format!("max|H| = {max_h:.2e}, drift order = {order:.3}, runtime = {secs:.2}s"),
    )
}

fn gauge_flow_conservation() -> Check {
    let (m, e, c, b) = (1.0, 1.0, 1.0, 1.0);
    let field = FieldConfig::UniformB(Vec3::new(0.0, 0.0, b));
    let mh = modified(Relativistic::new(m, c, Potential::Zero), c);
    let init = start(&mh, Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0));
    let period = 2.0 * PI * init.energy(c) / (e * b * c);
    let flow = Flow::Gauge { field: &field, charge: e };
    let traj = integrate(&init, &mh, flow, period / 1e4, 10_000).unwrap();
    let mut bilinear = 0.0f64;
    for s in &traj.samples {
        let rhs = rhs_4d(&s.state, &mh, flow).unwrap();
        let rdot = FourVector::new(rhs[0], rhs[1], rhs[2], rhs[3]);
        let f = field.tensor_at(&s.state.r(), s.state.t).unwrap();
        bilinear = bilinear.max(f.bilinear(&rdot, &rdot).abs());
    }
    let max_h = traj.max_abs_constraint();
    ensure(max_h <= 1e-9 && bilinear <= 1e-12, format!("max|H| = {max_h:.2e}, max|F(v,v)| = {bilinear:.2e}"))
}

fn flow_equivalence() -> Check {
    let model = FreeNonRel::new(1.0, harmonic());
    let (r, p) = (Vec3::new(1.0, 0.0, 0.5), Vec3::new(0.0, 1.0, 0.0));
    let mh = modified(model.clone(), 1.0);
    let t4 = integrate(&start(&mh, r, p), &mh, Flow::Canonical, 1e-3, 10_000).unwrap();
    let t3 = integrate_reference(&State3D::new(0.0, r, p, &model).unwrap(), &model, 1e-3, 10_000).unwrap();
    let dev = compare_flows(&t4, &t3).unwrap();
    ensure(
        dev.max_position <= 1e-10,
        format!("max|r4-r3| = {:.2e}, max|p4-p3| = {:.2e}", dev.max_position, dev.max_momentum),
    )
}

fn lorentz_convention() -> Check {
    // Non-relativistic kinetic flow: circle of radius mvc/(eB) at angular
    // frequency eB/(mc), clockwise for e > 0 with B along +z.
    let (m, e, c, b, v) = (1.0, 1.0, 1.0, 2.0, 0.5);
    let field = FieldConfig::UniformB(Vec3::new(0.0, 0.0, b));
    let mh = modified(FreeNonRel::new(m, Potential::Zero), c);
    let init = start(&mh, Vec3::zeros(), Vec3::new(m * v, 0.0, 0.0));
    let (radius, omega) = (m * v * c / (e * b), e * b / (m * c));
    let period = 2.0 * PI / omega;
    let flow = Flow::Gauge { field: &field, charge: e };
    let orbit = |n: usize| integrate(&init, &mh, flow, period / n as f64, n);
    let refined = refine_steps(64, 1e-9, 12, |n| {
        orbit(n).map(|t| {
            let r = t.last().state.r();
            vec![r.x, r.y]
        })
    })
    .unwrap()
    .ok_or("step refinement did not converge")?;
    let traj = orbit(refined.n_steps).unwrap();
    let center = Vec3::new(0.0, -radius, 0.0);
    let (mut radius_err, mut phase_err) = (0.0f64, 0.0f64);
    for s in &traj.samples {
        let d = s.state.r() - center;
        radius_err = radius_err.max((d.norm() - radius).abs() / radius);
        let expected = Vec3::new(radius * (omega * s.state.t).sin(), radius * (omega * s.state.t).cos(), 0.0);
        phase_err = phase_err.max((d - expected).norm() / radius);
    }

    let ef = Vec3::new(0.3, -0.2, 0.1);
    let field = FieldConfig::UniformE(ef);
    let p0 = Vec3::new(0.1, 0.0, 0.0);
    let traj = integrate(&start(&mh, Vec3::zeros(), p0), &mh, Flow::Gauge { field: &field, charge: e }, 1e-3, 1000)
        .unwrap();
    let e_err = traj.samples.iter().map(|s| (s.state.p() - (p0 + e * ef * s.state.t)).norm()).fold(0.0, f64::max);

    ensure(
        radius_err <= 1e-6 && phase_err <= 1e-6 && e_err <= 1e-10,
        format!(
            "n = {}, radius rel = {radius_err:.2e}, orbit rel = {phase_err:.2e}, |pi - pi0 - eEt| = {e_err:.2e}",
            refined.n_steps
        ),
    )
}

fn dual_route() -> Check {
    let (m, e, c) = (1.0, 1.0, 1.0);
    let field = FieldConfig::Crossed { electric: Vec3::new(0.1, 0.0, 0.05), magnetic: Vec3::new(0.0, 0.3, 1.0) };
    let potentials = field.gauge_potentials().unwrap();
    let (r0, kinetic0) = (Vec3::new(0.3, 0.2, 0.0), Vec3::new(0.0, 0.5, 0.1));
    let canonical0 = kinetic0 + (e / c) * potentials.vector(&r0, 0.0);

    let mh_can = modified(ChargedCanonical::new(m, e, c, potentials.clone()), c);
    let mh_kin = modified(Relativistic::new(m, c, Potential::Zero), c);
    let (dt, n) = (1e-2, 1000);
    let a = integrate(&start(&mh_can, r0, canonical0), &mh_can, Flow::Canonical, dt, n).unwrap();
    let b = integrate(&start(&mh_kin, r0, kinetic0), &mh_kin, Flow::Gauge { field: &field, charge: e }, dt, n).unwrap();
    let dev = compare_gauge_routes(&a, &b, &potentials, e, c).unwrap();
    ensure(
        dev.relative_position() <= 1e-6,
        format!("relative |dr| = {:.2e}, |dp| = {:.2e}", dev.relative_position(), dev.max_momentum),
    )
}

fn energy_law() -> Check {
    let models: Vec<(&str, ModifiedHamiltonian, Vec3, Vec3)> = vec![
        ("free_nonrel", modified(FreeNonRel::new(1.0, harmonic()), 1.0), Vec3::x(), Vec3::y()),
        ("relativistic", modified(Relativistic::new(1.0, 1.0, harmonic()), 1.0), Vec3::x(), Vec3::y()),
        (
            "charged_canonical",
            modified(
                ChargedCanonical::new(
                    1.0,
                    1.0,
                    1.0,
                    FieldConfig::Crossed { electric: Vec3::new(0.1, 0.0, 0.0), magnetic: Vec3::z() }
                        .gauge_potentials()
                        .unwrap(),
                ),
                1.0,
            ),
            Vec3::zeros(),
            Vec3::y(),
        ),
        (
            "optics_ray",
            modified(
                OpticsRay::new(1.0, IndexField::LinearGradient { n0: 1.5, alpha: 0.01, direction: Vec3::x() }),
                1.0,
            ),
            Vec3::zeros(),
            Vec3::new(0.9, 1.2, 0.0),
        ),
    ];
    let mut worst = 0.0f64;
    for (_, mh, r, p) in &models {
        let traj = integrate(&start(mh, *r, *p), mh, Flow::Canonical, 1e-3, 10_000).unwrap();
        worst = worst.max(traj.max_energy_drift());
    }

    let mh = modified(
        FreeNonRel::new(1.0, Potential::Driven { amplitude: 0.5, omega: 2.0, direction: Vec3::x() }),
        1.0,
    );
    let init = start(&mh, Vec3::zeros(), Vec3::new(0.2, 0.0, 0.0));
    let steps: [f64; 4] = [4e-3, 2e-3, 1e-3, 5e-4];
    let residuals: Vec<f64> = steps
        .iter()
        .map(|&dt| {
            let n = (2.0 / dt).round() as usize;
            integrate(&init, &mh, Flow::Canonical, dt, n).unwrap().max_energy_rate_residual()
        })
        .collect();
    let order = observed_order(&steps, &residuals);
    ensure(
        worst <= 1e-9 && order >= 2.0 - 0.05,
        format!("max|eps-eps0| = {worst:.2e} over {} models, driven residual order = {order:.3}", models.len()),
    )
}

fn quantum_ehrenfest() -> Check {
    let clock = Instant::now();
    let params = QuantumParams::default();
    let (n, l, dt) = (2048usize, 40.0, 1e-3);
    let packet = |x0, k0, sigma| GridWavefunction::gaussian(n, -l, l, x0, k0, sigma).unwrap();

    let comm = commutator_expectation(&packet(0.0, 1.0, 1.0), params);
    let comm_err = comm.re.hypot(comm.im - params.hbar);

    let free = run_quantum(&packet(-2.0, 0.25, 2.0), &Potential::Zero, dt, 1000, params).unwrap();
    let free = ehrenfest_check(&free.records, dt, params.mass).unwrap();
    let free_max = free.position.max(free.momentum).max(free.energy);

    let steps = (2.0 * PI / dt).round() as usize;
    let q = run_quantum(&packet(1.0, 0.5, 1.0), &harmonic(), dt, steps, params).unwrap();
    let model = FreeNonRel::new(params.mass, harmonic());
    let first = q.records[0];
    let s0 = State3D::new(0.0, Vec3::new(first.x_mean, 0.0, 0.0), Vec3::new(first.p_mean, 0.0, 0.0), &model).unwrap();
    let classical = integrate_reference(&s0, &model, dt, steps).unwrap();
    let harmonic_err =
        q.records.iter().zip(&classical.samples).map(|(r, s)| (r.x_mean - s.state.r.x).abs()).fold(0.0, f64::max);

    let driven = Potential::Driven { amplitude: 0.5, omega: 2.0, direction: Vec3::x() };
    let mut dts = Vec::new();
    let mut residuals = Vec::new();
    let mut rel = 0.0f64;
    for (points, dt) in [(1024usize, 2e-3f64), (2048, 1e-3), (4096, 5e-4)] {
        let psi = GridWavefunction::gaussian(points, -l, l, 1.0, 0.0, 1.0).unwrap();
        let r = run_quantum(&psi, &driven, dt, (1.0 / dt).round() as usize, params).unwrap();
        let rep = ehrenfest_check(&r.records, dt, params.mass).unwrap();
        rel = rel.max(rep.relative_energy());
        dts.push(dt);
        residuals.push(rep.energy);
    }
    let order = observed_order(&dts, &residuals);
    let secs = clock.elapsed().as_secs_f64();
    ensure(
        comm_err <= 1e-6 && free_max <= 1e-8 && harmonic_err <= 1e-3 && rel <= 1e-2 && order >= 1.8 && secs < 30.0,
        format!(
            "|<[x,p]> - i hbar| = {comm_err:.2e}, free = {free_max:.2e}, harmonic <x> = {harmonic_err:.2e}, \
             driven rel = {rel:.2e} (order {order:.2}), runtime = {secs:.1}s"
        ),
    )
}

fn optics_ray() -> Check {
    let mh = modified(
        OpticsRay::new(1.0, IndexField::LinearGradient { n0: 1.5, alpha: 0.01, direction: Vec3::x() }),
        1.0,
    );
    let init = start(&mh, Vec3::zeros(), 1.5 * Vec3::new(0.6, 0.8, 0.0));
    let (dt, n, sub) = (1e-3, 10_000usize, 100usize);
    let traj = integrate(&init, &mh, Flow::Canonical, dt, n).unwrap();
    let mut oracle = init;
    let mut dev = 0.0f64;
    for s in traj.samples.iter().skip(1) {
        for _ in 0..sub {
            oracle = step_canonical_4d(&oracle, dt / sub as f64, &mh).unwrap();
        }
        dev = dev.max((s.state.r() - oracle.r()).norm());
    }
    let on_shell = traj.max_abs_constraint();
    ensure(dev <= 1e-8 && on_shell <= 1e-10, format!("max|r - r_oracle| = {dev:.2e}, max|H| = {on_shell:.2e}"))
}

fn determinism() -> Check {
    let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let mut checked = 0;
    let mut entries: Vec<_> = fs::read_dir(&scenarios).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for path in entries.into_iter().filter(|p| p.extension().is_some_and(|e| e == "toml")) {
        let text = fs::read_to_string(&path).unwrap();
        let scenario = hamflow_cli::parse_scenario(text.as_bytes()).map_err(|e| e.to_string())?;
        let sub = match scenario.mode {
            hamflow_cli::Mode::Compare => "compare",
            hamflow_cli::Mode::Quantum => "quantum",
            _ => "simulate",
        };
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let status = Command::new(env!("CARGO_BIN_EXE_hamflow"))
                .args([sub, path.to_str().unwrap()])
                .current_dir(dir.path())
                .output()
                .unwrap();
            if !status.status.success() {
                return Err(format!("{}: {}", path.display(), String::from_utf8_lossy(&status.stderr)));
            }
            outputs.push(fs::read(dir.path().join(&scenario.output)).unwrap());
        }
        if outputs[0] != outputs[1] {
            return Err(format!("{} produced different CSV bytes", path.display()));
        }
        checked += 1;
    }
    ensure(checked >= 6, format!("{checked} scenarios byte-identical across two runs"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("constraint conservation", constraint_conservation),
        ("gauge-flow conservation", gauge_flow_conservation),
        ("4D/3D equivalence", flow_equivalence),
        ("Lorentz-force convention", lorentz_convention),
        ("dual-route EM equivalence", dual_route),
        ("energy law", energy_law),
        ("quantum Ehrenfest", quantum_ehrenfest),
        ("optics ray", optics_ray),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {}. {name}: {detail}", i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
