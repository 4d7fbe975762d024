//! 1D grid Schrödinger evolution and expectation-value checks.
//!
//! Spatial operators come in matched pairs: a symmetric Laplacian stencil
//! `(a₀ψⱼ + Σₖ aₖ(ψⱼ₊ₖ + ψⱼ₋ₖ))/dx²` and the first-derivative stencil with
//! weights `bₖ = k·aₖ/2`. With this pairing `[x, ∂²] = −2∂` holds exactly on
//! the grid, so the semi-discrete `d⟨x⟩/dt = ⟨p⟩/m` is exact. `ψ = 0`
//! outside the grid.
//!
//! Time stepping is Crank–Nicolson, `(1 + iτH)ψₙ₊₁ = (1 − iτH)ψₙ` with
//! `τ = dt/2ħ` and `V` evaluated at `t + dt/2`.

use std::io::{self, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::hamiltonians::Potential;
use crate::Vec3;

pub const RECORD_CSV_HEADER: &str = "t,x_mean,p_mean,energy_mean,dVdx_mean,dVdt_mean";

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("dt must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("wave packet reaches the outer 5% of the grid at t = {t} (max |psi| = {amplitude:e})")]
    Unresolved { t: f64, amplitude: f64 },
    #[error("Crank-Nicolson solve hit a vanishing pivot at row {row}")]
    SolveFailure { row: usize },
    #[error("potential is not finite at x = {x}, t = {t}")]
    NonFinitePotential { x: f64, t: f64 },
    #[error("energy expectation has imaginary part {0:e}")]
    ComplexEnergy(f64),
    #[error("need at least 3 expectation records, got {0}")]
    TooFewRecords(usize),
    #[error("grids differ")]
    GridMismatch,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// Amplitude bound for the outer 5% of the grid on either side.
pub const EDGE_TOLERANCE: f64 = 1e-8;
/// Largest imaginary part tolerated in `⟨H⟩`.
pub const ENERGY_IMAG_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    pub values: Vec<Complex64>,
    /// Left edge.
    pub x0: f64,
    pub dx: f64,
    pub t: f64,
}

impl GridWavefunction {
    /// Normalised Gaussian `exp(−(x−center)²/4σ² + ik₀x)` on `n` points
    /// spanning `[x_min, x_max]`; `σ` is the position spread of `|ψ|²`.
    pub fn gaussian(
        n: usize,
        x_min: f64,
        x_max: f64,
        center: f64,
        k0: f64,
        sigma: f64,
    ) -> Result<Self, QuantumError> {
        if n < 5 {
            return Err(QuantumError::InvalidGrid(format!("need at least 5 points, got {n}")));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(QuantumError::InvalidGrid(format!("bad interval [{x_min}, {x_max}]")));
        }
        if !(sigma > 0.0) {
            return Err(QuantumError::InvalidGrid(format!("sigma must be positive, got {sigma}")));
        }
        let dx = (x_max - x_min) / (n - 1) as f64;
        let values = (0..n)
            .map(|j| {
                let x = x_min + j as f64 * dx;
                let u = (x - center) / (2.0 * sigma);
                Complex64::from_polar((-u * u).exp(), k0 * x)
            })
            .collect();
        let mut psi = Self { values, x0: x_min, dx, t: 0.0 };
        psi.normalize();
        Ok(psi)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dx
    }

    pub fn normalize(&mut self) {
        let s = self.norm().sqrt();
        self.values.iter_mut().for_each(|v| *v /= s);
    }

    /// Largest `|ψ|` in the outer 5% of the grid on either side.
    pub fn edge_amplitude(&self) -> f64 {
        let n = self.values.len();
        let band = ((n as f64) * 0.05).ceil() as usize;
        self.values[..band]
            .iter()
            .chain(&self.values[n - band..])
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_resolved(&self) -> bool {
        self.edge_amplitude() < EDGE_TOLERANCE
    }

    pub fn check_resolved(&self) -> Result<(), QuantumError> {
        let amplitude = self.edge_amplitude();
        if amplitude < EDGE_TOLERANCE {
            Ok(())
        } else {
            Err(QuantumError::Unresolved { t: self.t, amplitude })
        }
    }

    /// Multiplies by `e^{iΔk x}`.
    pub fn boosted(&self, dk: f64) -> Self {
        let mut out = self.clone();
        for (j, v) in out.values.iter_mut().enumerate() {
            *v *= Complex64::from_polar(1.0, dk * self.x(j));
        }
        out
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.values.len() == other.values.len() && self.x0 == other.x0 && self.dx == other.dx
    }
}

/// Order of the central-difference stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    Fourth,
    #[default]
    Sixth,
}

impl Stencil {
    /// Laplacian weights `a₀, a₁, …` (times `1/dx²`).
    fn laplacian_weights(self) -> &'static [f64] {
        const FOURTH: [f64; 3] = [-30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
        const SIXTH: [f64; 4] = [-490.0 / 180.0, 270.0 / 180.0, -27.0 / 180.0, 2.0 / 180.0];
        match self {
            Self::Fourth => &FOURTH,
            Self::Sixth => &SIXTH,
        }
    }

    /// Derivative weights `bₖ = k·aₖ/2` for `k ≥ 1` (times `1/dx`).
    fn derivative_weights(self) -> Vec<f64> {
        let a = self.laplacian_weights();
        (1..a.len()).map(|k| k as f64 * a[k] / 2.0).collect()
    }

    pub fn half_width(self) -> usize {
        self.laplacian_weights().len() - 1
    }

    pub fn order(self) -> u32 {
        match self {
            Self::Fourth => 4,
            Self::Sixth => 6,
        }
    }
}

/// Physical constants and discretisation for the grid Hamiltonian `p²/2m + V(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumParams {
    pub mass: f64,
    pub hbar: f64,
    pub stencil: Stencil,
}

impl Default for QuantumParams {
    fn default() -> Self {
        Self { mass: 1.0, hbar: 1.0, stencil: Stencil::default() }
    }
}

fn at(values: &[Complex64], j: isize) -> Complex64 {
    if j < 0 || j as usize >= values.len() {
        Complex64::new(0.0, 0.0)
    } else {
        values[j as usize]
    }
}

/// Central first derivative.
pub fn derivative(values: &[Complex64], dx: f64, stencil: Stencil) -> Vec<Complex64> {
    let b = stencil.derivative_weights();
    (0..values.len() as isize)
        .map(|j| {
            b.iter()
                .enumerate()
                .map(|(i, w)| {
                    let k = i as isize + 1;
                    w * (at(values, j + k) - at(values, j - k))
                })
                .sum::<Complex64>()
                / dx
        })
        .collect()
}

/// Central second derivative.
pub fn laplacian(values: &[Complex64], dx: f64, stencil: Stencil) -> Vec<Complex64> {
    let a = stencil.laplacian_weights();
    (0..values.len() as isize)
        .map(|j| {
            let side: Complex64 = (1..a.len())
                .map(|k| a[k] * (at(values, j + k as isize) + at(values, j - k as isize)))
                .sum();
            (a[0] * at(values, j) + side) / (dx * dx)
        })
        .collect()
}

fn potential_on_grid(psi: &GridWavefunction, v: &Potential, t: f64) -> Result<Vec<f64>, QuantumError> {
    (0..psi.len())
        .map(|j| {
            let x = psi.x(j);
            let val = v.value(&Vec3::new(x, 0.0, 0.0), t);
            if val.is_finite() {
                Ok(val)
            } else {
                Err(QuantumError::NonFinitePotential { x, t })
            }
        })
        .collect()
}

fn apply_h(values: &[Complex64], dx: f64, pot: &[f64], params: QuantumParams) -> Vec<Complex64> {
    let kin = -params.hbar * params.hbar / (2.0 * params.mass);
    laplacian(values, dx, params.stencil)
        .into_iter()
        .zip(values.iter().zip(pot))
        .map(|(l, (v, vx))| kin * l + v * vx)
        .collect()
}

/// `Hψ` with `V` evaluated at time `t`.
pub fn apply_hamiltonian(
    psi: &GridWavefunction,
    v: &Potential,
    t: f64,
    params: QuantumParams,
) -> Result<Vec<Complex64>, QuantumError> {
    let pot = potential_on_grid(psi, v, t)?;
    Ok(apply_h(&psi.values, psi.dx, &pot, params))
}

/// Banded matrix with half-bandwidth `w`; `rows[r][k]` holds column `r + k − w`.
struct Banded {
    w: usize,
    rows: Vec<Vec<Complex64>>,
}

impl Banded {
    /// Gaussian elimination without pivoting.
    fn solve(mut self, mut rhs: Vec<Complex64>) -> Result<Vec<Complex64>, QuantumError> {
        let (n, w) = (rhs.len(), self.w);
        let scale = self.rows.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
        for i in 0..n {
            let pivot = self.rows[i][w];
            if pivot.norm() <= 1e-14 * scale {
                return Err(QuantumError::SolveFailure { row: i });
            }
            for r in (i + 1)..(i + w + 1).min(n) {
                let factor = self.rows[r][i + w - r] / pivot;
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in i..(i + w + 1).min(n) {
                    let v = self.rows[i][c + w - i];
                    self.rows[r][c + w - r] -= factor * v;
                }
                let b = rhs[i];
                rhs[r] -= factor * b;
            }
        }
        for i in (0..n).rev() {
            let end = (i + w + 1).min(n);
            let upper = &self.rows[i][w + 1..w + 1 + end - (i + 1)];
            let acc = rhs[i] - upper.iter().zip(&rhs[i + 1..end]).map(|(a, x)| a * x).sum::<Complex64>();
            rhs[i] = acc / self.rows[i][w];
        }
        Ok(rhs)
    }
}

/// One Crank–Nicolson step; `V` is sampled at `t + dt/2`.
pub fn evolve_cn(
    psi: &GridWavefunction,
    v: &Potential,
    dt: f64,
    params: QuantumParams,
) -> Result<GridWavefunction, QuantumError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(QuantumError::InvalidStep(dt));
    }
    psi.check_resolved()?;
    let pot = potential_on_grid(psi, v, psi.t + 0.5 * dt)?;
    let tau = dt / (2.0 * params.hbar);
    let kin = -params.hbar * params.hbar / (2.0 * params.mass) / (psi.dx * psi.dx);
    let a = params.stencil.laplacian_weights();
    let w = a.len() - 1;
    let rows = pot
        .iter()
        .map(|&vx| {
            (0..=2 * w)
                .map(|k| {
                    let off = k.abs_diff(w);
                    let h = kin * a[off] + if off == 0 { vx } else { 0.0 };
                    let id = if off == 0 { 1.0 } else { 0.0 };
                    Complex64::new(id, tau * h)
                })
                .collect()
        })
        .collect();
    let h_psi = apply_h(&psi.values, psi.dx, &pot, params);
    let rhs: Vec<Complex64> = psi.values.iter().zip(&h_psi).map(|(v, h)| v - I * tau * h).collect();
    let values = Banded { w, rows }.solve(rhs)?;
    Ok(GridWavefunction { values, x0: psi.x0, dx: psi.dx, t: psi.t + dt })
}

fn inner(a: &[Complex64], b: &[Complex64], dx: f64) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>() * dx
}

pub fn expectation_position(psi: &GridWavefunction) -> f64 {
    psi.values.iter().enumerate().map(|(j, v)| psi.x(j) * v.norm_sqr()).sum::<f64>() * psi.dx
}

/// `Re Σ ψ*(−iħ∂ₓψ) dx`.
pub fn expectation_momentum(psi: &GridWavefunction, params: QuantumParams) -> f64 {
    let d = derivative(&psi.values, psi.dx, params.stencil);
    (inner(&psi.values, &d, psi.dx) * (-I * params.hbar)).re
}

pub fn expectation_energy(
    psi: &GridWavefunction,
    v: &Potential,
    t: f64,
    params: QuantumParams,
) -> Result<f64, QuantumError> {
    let h = apply_hamiltonian(psi, v, t, params)?;
    let e = inner(&psi.values, &h, psi.dx);
    if e.im.abs() > ENERGY_IMAG_TOLERANCE {
        return Err(QuantumError::ComplexEnergy(e.im));
    }
    Ok(e.re)
}

/// `⟨ψ|xp − px|ψ⟩` with the discrete derivative; approximates `iħ`.
pub fn commutator_expectation(psi: &GridWavefunction, params: QuantumParams) -> Complex64 {
    let hbar = params.hbar;
    let xs: Vec<f64> = (0..psi.len()).map(|j| psi.x(j)).collect();
    let d_psi = derivative(&psi.values, psi.dx, params.stencil);
    let x_psi: Vec<Complex64> = psi.values.iter().zip(&xs).map(|(v, x)| v * x).collect();
    let d_x_psi = derivative(&x_psi, psi.dx, params.stencil);
    let comm: Vec<Complex64> = d_psi
        .iter()
        .zip(&d_x_psi)
        .zip(&xs)
        .map(|((dp, dxp), x)| -I * hbar * (x * dp - dxp))
        .collect();
    inner(&psi.values, &comm, psi.dx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationRecord {
    pub t: f64,
    pub x_mean: f64,
    pub p_mean: f64,
    pub energy_mean: f64,
    pub dv_dx_mean: f64,
    pub dv_dt_mean: f64,
}

pub fn record(psi: &GridWavefunction, v: &Potential, params: QuantumParams) -> Result<ExpectationRecord, QuantumError> {
    let t = psi.t;
    let (mut dv_dx, mut dv_dt) = (0.0, 0.0);
    for (j, amp) in psi.values.iter().enumerate() {
        let r = Vec3::new(psi.x(j), 0.0, 0.0);
        let w = amp.norm_sqr();
        dv_dx += w * v.gradient(&r, t).x;
        dv_dt += w * v.time_derivative(&r, t);
    }
    Ok(ExpectationRecord {
        t,
        x_mean: expectation_position(psi),
        p_mean: expectation_momentum(psi, params),
        energy_mean: expectation_energy(psi, v, t, params)?,
        dv_dx_mean: dv_dx * psi.dx,
        dv_dt_mean: dv_dt * psi.dx,
    })
}

/// Result of an evolution run: one record per state including the initial one.
#[derive(Debug, Clone)]
pub struct QuantumRun {
    pub records: Vec<ExpectationRecord>,
    pub final_state: GridWavefunction,
    pub max_norm_drift: f64,
    pub max_step_norm_drift: f64,
}

/// Evolves `n_steps` Crank–Nicolson steps, recording expectations at every state.
pub fn run(
    initial: &GridWavefunction,
    v: &Potential,
    dt: f64,
    n_steps: usize,
    params: QuantumParams,
) -> Result<QuantumRun, QuantumError> {
    let mut psi = initial.clone();
    let n0 = psi.norm();
    let mut records = Vec::with_capacity(n_steps + 1);
    records.push(record(&psi, v, params)?);
    let (mut drift, mut step_drift) = (0.0f64, 0.0f64);
    let mut prev_norm = n0;
    for _ in 0..n_steps {
        psi = evolve_cn(&psi, v, dt, params)?;
        let n = psi.norm();
        drift = drift.max((n - n0).abs());
        step_drift = step_drift.max((n - prev_norm).abs());
        prev_norm = n;
        records.push(record(&psi, v, params)?);
    }
    psi.check_resolved()?;
    Ok(QuantumRun { records, final_state: psi, max_norm_drift: drift, max_step_norm_drift: step_drift })
}

/// Largest Ehrenfest residuals over interior records (central differences).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EhrenfestReport {
    /// `max |d⟨x⟩/dt − ⟨p⟩/m|`
    pub position: f64,
    /// `max |d⟨p⟩/dt + ⟨∂ₓV⟩|`
    pub momentum: f64,
    /// `max |d⟨H⟩/dt − ⟨∂ₜV⟩|`
    pub energy: f64,
    /// `max |⟨∂ₜV⟩|`, the scale for a relative energy-law residual.
    pub energy_scale: f64,
}

impl EhrenfestReport {
    pub fn relative_energy(&self) -> f64 {
        if self.energy_scale > 0.0 {
            self.energy / self.energy_scale
        } else {
            self.energy
        }
    }
}

pub fn ehrenfest_check(records: &[ExpectationRecord], dt: f64, mass: f64) -> Result<EhrenfestReport, QuantumError> {
    if records.len() < 3 {
        return Err(QuantumError::TooFewRecords(records.len()));
    }
    let mut report = EhrenfestReport::default();
    for w in records.windows(3) {
        let (a, mid, b) = (&w[0], &w[1], &w[2]);
        let d = |f: fn(&ExpectationRecord) -> f64| (f(b) - f(a)) / (2.0 * dt);
        report.position = report.position.max((d(|r| r.x_mean) - mid.p_mean / mass).abs());
        report.momentum = report.momentum.max((d(|r| r.p_mean) + mid.dv_dx_mean).abs());
        report.energy = report.energy.max((d(|r| r.energy_mean) - mid.dv_dt_mean).abs());
        report.energy_scale = report.energy_scale.max(mid.dv_dt_mean.abs());
    }
    Ok(report)
}

/// `‖iħ(ψₙ₊₁ − ψₙ)/dt − H(t_mid)ψ_mid‖₂` with `ψ_mid = (ψₙ₊₁ + ψₙ)/2`.
pub fn schrodinger_residual(
    prev: &GridWavefunction,
    next: &GridWavefunction,
    v: &Potential,
    t_mid: f64,
    dt: f64,
    params: QuantumParams,
) -> Result<f64, QuantumError> {
    if !prev.same_grid(next) {
        return Err(QuantumError::GridMismatch);
    }
    let mid = GridWavefunction {
        values: prev.values.iter().zip(&next.values).map(|(a, b)| 0.5 * (a + b)).collect(),
        x0: prev.x0,
        dx: prev.dx,
        t: t_mid,
    };
    let h_mid = apply_hamiltonian(&mid, v, t_mid, params)?;
    let sum: f64 = prev
        .values
        .iter()
        .zip(&next.values)
        .zip(&h_mid)
        .map(|((a, b), h)| (I * params.hbar * (b - a) / dt - h).norm_sqr())
        .sum();
    Ok((sum * prev.dx).sqrt())
}

pub fn write_records_csv<W: Write>(records: &[ExpectationRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{RECORD_CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.t, r.x_mean, r.p_mean, r.energy_mean, r.dv_dx_mean, r.dv_dt_mean
        )?;
    }
    Ok(())
}
