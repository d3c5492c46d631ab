//! Time-dependent Schrödinger evolution under pulse schedules.
//!
//! Each step applies the exponential midpoint propagator
//! `exp(-i H(t + dt/2) dt)`, evaluated through a Hermitian eigendecomposition,
//! so the state norm is preserved to eigensolver accuracy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::lmg::{self, CaseLabel, LmgParams, TransferCase};
use crate::spinops::{self, Axis, Basis, DickeBasis, Spin, StateVector};

/// Rabi amplitudes `Omega1(t)`, `Omega2(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase", deny_unknown_fields)]
pub enum PulseSchedule {
    /// `Omega_k(t) = (alpha/2) (tanh(t/T_k) + 1)`.
    Tanh { alpha: f64, t1: f64, t2: f64 },
    /// Piecewise-linear table, held constant outside its time range.
    Tabulated {
        times: Vec<f64>,
        omega1: Vec<f64>,
        omega2: Vec<f64>,
    },
}

/// Half-width of the default window in units of the longest ramp time.
pub const WINDOW_RAMPS: f64 = 6.0;
/// Default bound on `||H|| dt`.
pub const DEFAULT_NORM_STEP: f64 = 0.05;

impl PulseSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            PulseSchedule::Tanh { alpha, t1, t2 } => {
                if !(alpha.is_finite() && *alpha >= 0.0) {
                    return Err(Error::InvalidParameter("alpha must be finite and non-negative".into()));
                }
                if !(t1.is_finite() && *t1 > 0.0 && t2.is_finite() && *t2 > 0.0) {
                    return Err(Error::InvalidParameter("ramp times must be positive".into()));
                }
            }
            PulseSchedule::Tabulated { times, omega1, omega2 } => {
                if times.is_empty() || times.len() != omega1.len() || times.len() != omega2.len() {
                    return Err(Error::InvalidParameter(
                        "tabulated schedule needs equal-length, non-empty columns".into(),
                    ));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidParameter("tabulated times must be strictly increasing".into()));
                }
                if omega1.iter().chain(omega2).any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidParameter("tabulated amplitudes must be finite and non-negative".into()));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> (f64, f64) {
        match self {
            PulseSchedule::Tanh { alpha, t1, t2 } => (tanh_ramp(*alpha, *t1, t), tanh_ramp(*alpha, *t2, t)),
            PulseSchedule::Tabulated { times, omega1, omega2 } => {
                (interpolate(times, omega1, t), interpolate(times, omega2, t))
            }
        }
    }

    /// `[-6 max(T1, T2), +6 max(T1, T2)]` for tanh ramps, the table range otherwise.
    pub fn default_window(&self) -> (f64, f64) {
        match self {
            PulseSchedule::Tanh { t1, t2, .. } => {
                let half = WINDOW_RAMPS * t1.max(*t2);
                (-half, half)
            }
            PulseSchedule::Tabulated { times, .. } => (times[0], *times.last().unwrap()),
        }
    }

    /// Upper bound on either amplitude over all times.
    pub fn max_amplitude(&self) -> f64 {
        match self {
            PulseSchedule::Tanh { alpha, .. } => *alpha,
            PulseSchedule::Tabulated { omega1, omega2, .. } => {
                omega1.iter().chain(omega2).fold(0.0_f64, |a, v| a.max(*v))
            }
        }
    }
}

// (alpha/2)(tanh(x) + 1) = alpha / (1 + exp(-2x)), without cancellation for x << 0.
fn tanh_ramp(alpha: f64, ramp: f64, t: f64) -> f64 {
    alpha / (1.0 + (-2.0 * t / ramp).exp())
}

fn interpolate(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    if t <= xs[0] {
        return ys[0];
    }
    if t >= *xs.last().unwrap() {
        return *ys.last().unwrap();
    }
    let k = xs.partition_point(|&x| x <= t) - 1;
    let w = (t - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] * (1.0 - w) + ys[k + 1] * w
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub t_start: f64,
    pub t_end: f64,
    /// Requested step; the step actually used divides the window evenly and
    /// never exceeds this.
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default = "default_axis")]
    pub population_basis: Axis,
    /// Record the instantaneous `E0`, `E1` at every sample.
    #[serde(default = "default_true")]
    pub record_spectrum: bool,
}

fn default_true() -> bool {
    true
}

fn default_stride() -> usize {
    100
}

fn default_axis() -> Axis {
    Axis::Y
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_end > self.t_start) {
            return Err(Error::InvalidParameter("t_end must exceed t_start".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter("record_stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt).ceil().max(1.0) as usize
    }

    /// Step size that lands exactly on `t_end`.
    pub fn effective_dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.steps() as f64
    }

    /// Default window for `schedule` with `dt` chosen from `||H|| dt <= 0.05`.
    pub fn for_schedule(source: &dyn HamiltonianSource, schedule: &PulseSchedule, record_stride: usize) -> Result<Self> {
        let (t_start, t_end) = schedule.default_window();
        let dt = default_dt(source, t_start, t_end)?;
        Ok(EvolutionConfig {
            t_start,
            t_end,
            dt,
            record_stride,
            population_basis: Axis::Y,
            record_spectrum: true,
        })
    }
}

/// Maps a state onto level populations: column `k` of `levels` is the spin
/// vector of level `k`; probabilities are summed over the `phonon_dim`
/// trailing factor.
#[derive(Clone, Debug)]
pub struct PopulationMap {
    pub levels: CMatrix,
    pub labels: Vec<f64>,
    pub phonon_dim: usize,
}

impl PopulationMap {
    pub fn dicke(spin: Spin, axis: Axis) -> Self {
        let levels = match axis {
            Axis::Z => linalg::identity(spin.dim()),
            Axis::Y => spinops::y_eigenbasis(spin).into_matrix(),
        };
        PopulationMap {
            levels,
            labels: spin.projections().collect(),
            phonon_dim: 1,
        }
    }

    pub fn populations(&self, psi: &CVector) -> Vec<f64> {
        let spin_dim = self.levels.nrows();
        let np = self.phonon_dim;
        (0..self.levels.ncols())
            .map(|k| {
                let col = self.levels.column(k);
                (0..np)
                    .map(|n| {
                        let mut amp = c(0.0);
                        for s in 0..spin_dim {
                            amp += col[s].conj() * psi[s * np + n];
                        }
                        amp.norm_sqr()
                    })
                    .sum()
            })
            .collect()
    }
}

/// A time-dependent Hamiltonian.
pub trait HamiltonianSource: Sync {
    fn basis(&self) -> Basis;
    fn hamiltonian(&self, t: f64) -> Result<CMatrix>;
    fn population_map(&self, axis: Axis) -> PopulationMap {
        match self.basis() {
            Basis::Dicke(b) => PopulationMap::dicke(b.spin, axis),
            Basis::Product(p) => p.population_map(axis),
        }
    }

    /// `exp(-i H(t_mid) dt) psi` computed from a structured
    /// eigendecomposition. `None` selects the generic path, which
    /// diagonalizes the full `H(t_mid)`.
    fn midpoint_step(&self, _t_mid: f64, _dt: f64, _psi: &CVector) -> Option<Result<CVector>> {
        None
    }
}

/// `dt = 0.05 / max ||H(t)||`, the maximum taken over 257 evenly spaced times.
pub fn default_dt(source: &dyn HamiltonianSource, t_start: f64, t_end: f64) -> Result<f64> {
    let samples = 256;
    let mut norm = 0.0_f64;
    for k in 0..=samples {
        let t = t_start + (t_end - t_start) * k as f64 / samples as f64;
        norm = norm.max(linalg::eigh(&source.hamiltonian(t)?).norm());
    }
    Ok(if norm > 0.0 {
        DEFAULT_NORM_STEP / norm
    } else {
        t_end - t_start
    })
}

/// LMG Hamiltonian driven by a pulse schedule through
/// `chi1 = Omega1 - Omega2`, `chi2 = Omega1 + Omega2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivenLmg {
    pub xi: f64,
    pub lambda: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(rename = "j")]
    pub spin: Spin,
    pub schedule: PulseSchedule,
}

impl DrivenLmg {
    pub fn params_at(&self, t: f64) -> LmgParams {
        let (o1, o2) = self.schedule.eval(t);
        LmgParams {
            xi: self.xi,
            lambda: self.lambda,
            mu: self.mu,
            chi1: o1 - o2,
            chi2: o1 + o2,
            spin: self.spin,
        }
    }

    /// Case label of the `chi1 = chi2` end of the path.
    pub fn case_label(&self) -> Result<CaseLabel> {
        lmg::classify_case(&LmgParams {
            xi: self.xi,
            lambda: self.lambda,
            mu: self.mu,
            chi1: 1.0,
            chi2: 1.0,
            spin: self.spin,
        })
    }
}

impl HamiltonianSource for DrivenLmg {
    fn basis(&self) -> Basis {
        DickeBasis::z(self.spin).into()
    }

    fn hamiltonian(&self, t: f64) -> Result<CMatrix> {
        let p = self.params_at(t);
        if p.chi1 == 0.0 && p.chi2 == 0.0 {
            let d = self.spin.dim();
            return Ok(CMatrix::zeros(d, d));
        }
        Ok(lmg::build_hamiltonian(&p)?.into_matrix())
    }
}

/// Any closure `t -> H(t)` over a fixed basis.
pub struct FnSource<F> {
    pub basis: Basis,
    pub f: F,
}

impl<F> HamiltonianSource for FnSource<F>
where
    F: Fn(f64) -> Result<CMatrix> + Sync,
{
    fn basis(&self) -> Basis {
        self.basis
    }

    fn hamiltonian(&self, t: f64) -> Result<CMatrix> {
        (self.f)(t)
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub basis: Basis,
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub level_labels: Vec<f64>,
    pub population_basis: Axis,
    pub populations: Vec<Vec<f64>>,
    /// Instantaneous lowest two eigenvalues of `H(t)` at each sample; empty
    /// unless the spectrum was recorded.
    pub e0: Vec<f64>,
    pub e1: Vec<f64>,
    pub steps: usize,
    pub dt: f64,
    /// Largest `| ||psi|| - 1 |` over the samples.
    pub max_norm_error: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn final_populations(&self) -> &[f64] {
        self.populations.last().expect("trajectory has at least one sample")
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.e0.iter().zip(&self.e1).map(|(a, b)| b - a).collect()
    }

    /// `|<target|psi(t)>|^2` at every sample.
    pub fn fidelity_to(&self, target: &StateVector) -> Result<Vec<f64>> {
        self.states.iter().map(|s| target.fidelity(s)).collect()
    }

    /// Population of the level labelled `label`.
    pub fn level_series(&self, label: f64) -> Option<Vec<f64>> {
        let k = self.level_labels.iter().position(|&m| (m - label).abs() < 1e-9)?;
        Some(self.populations.iter().map(|p| p[k]).collect())
    }
}

pub fn evolve(source: &dyn HamiltonianSource, psi_init: &StateVector, cfg: &EvolutionConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let basis = source.basis();
    spinops::check_basis(basis, psi_init.basis())?;
    let dim = basis.dim();
    let map = source.population_map(cfg.population_basis);
    let steps = cfg.steps();
    let dt = cfg.effective_dt();

    let mut traj = Trajectory {
        basis,
        times: Vec::new(),
        states: Vec::new(),
        level_labels: map.labels.clone(),
        population_basis: cfg.population_basis,
        populations: Vec::new(),
        e0: Vec::new(),
        e1: Vec::new(),
        steps,
        dt,
        max_norm_error: 0.0,
    };

    let fetch = |t: f64| -> Result<CMatrix> {
        let h = source.hamiltonian(t)?;
        if h.nrows() != dim || h.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: h.nrows(),
            });
        }
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(format!("hamiltonian at t = {t}")));
        }
        Ok(h)
    };

    let record = |traj: &mut Trajectory, t: f64, psi: &CVector| -> Result<()> {
        if cfg.record_spectrum {
            let eig = linalg::eigh(&fetch(t)?);
            traj.e0.push(eig.values[0]);
            traj.e1.push(*eig.values.get(1).unwrap_or(&eig.values[0]));
        }
        traj.times.push(t);
        traj.populations.push(map.populations(psi));
        traj.max_norm_error = traj.max_norm_error.max((psi.norm() - 1.0).abs());
        traj.states.push(StateVector::from_raw(basis, psi.clone()));
        Ok(())
    };

    let mut psi = psi_init.amplitudes().clone();
    record(&mut traj, cfg.t_start, &psi)?;
    for k in 0..steps {
        let t = cfg.t_start + k as f64 * dt;
        let t_mid = t + 0.5 * dt;
        psi = match source.midpoint_step(t_mid, dt, &psi) {
            Some(next) => next?,
            None => linalg::eigh(&fetch(t_mid)?).evolve(&psi, dt),
        };
        if (k + 1) % cfg.record_stride == 0 || k + 1 == steps {
            let t_next = if k + 1 == steps { cfg.t_end } else { t + dt };
            record(&mut traj, t_next, &psi)?;
        }
    }
    Ok(traj)
}

/// `|<target|psi(t_end)>|^2`.
pub fn transfer_efficiency(traj: &Trajectory, target: &StateVector) -> Result<f64> {
    target.fidelity(traj.final_state())
}

/// Which eigenstates count when measuring the gap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GapSector {
    Full,
    /// Parity `exp(i pi (Jz + J))` eigenspace with this eigenvalue.
    Parity(f64),
}

impl GapSector {
    /// Parity sector of the initial state for cases I and II, everything otherwise.
    pub fn for_case(label: &CaseLabel) -> Self {
        match label.case {
            TransferCase::I | TransferCase::II => {
                let p0 = spinops::parity_of(&label.initial_state(), 0.0).expect("extremal states have definite parity");
                GapSector::Parity(p0)
            }
            _ => GapSector::Full,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GapScan {
    pub times: Vec<f64>,
    pub gaps: Vec<f64>,
    pub min_gap: f64,
    pub argmin: f64,
}

/// Instantaneous `E1 - E0` within `sector`.
pub fn sector_gap(p: &LmgParams, sector: GapSector) -> Result<f64> {
    p.validate()?;
    let h = lmg::hamiltonian_matrix(p);
    let eig = match sector {
        GapSector::Full => linalg::eigh(&h),
        GapSector::Parity(sign) => {
            let keep: Vec<usize> = (0..p.spin.dim())
                .filter(|k| (if k % 2 == 0 { 1.0 } else { -1.0 }) == sign)
                .collect();
            let block = CMatrix::from_fn(keep.len(), keep.len(), |i, j| h[(keep[i], keep[j])]);
            linalg::eigh(&block)
        }
    };
    Ok(if eig.values.len() > 1 {
        eig.values[1] - eig.values[0]
    } else {
        f64::INFINITY
    })
}

pub fn gap_along_path(path: &dyn Fn(f64) -> LmgParams, times: &[f64], sector: GapSector) -> Result<GapScan> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("empty time grid".into()));
    }
    let gaps = times
        .iter()
        .map(|&t| sector_gap(&path(t), sector))
        .collect::<Result<Vec<_>>>()?;
    let (k, &min_gap) = gaps
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    Ok(GapScan {
        times: times.to_vec(),
        gaps,
        min_gap,
        argmin: times[k],
    })
}

/// Tanh-ramp family with fixed shape `T1/T2` and amplitude `alpha`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanFamily {
    pub xi: f64,
    pub lambda: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(rename = "j")]
    pub spin: Spin,
    /// `T1 / T2`.
    pub ramp_ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub alpha: f64,
    pub t2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub alpha: f64,
    pub t2: f64,
    /// `chi_max sqrt(|xi| T2)` with `chi_max = 2 alpha`.
    pub adiabaticity: f64,
    pub efficiency: f64,
}

impl ScanFamily {
    pub fn driven(&self, point: ScanPoint) -> DrivenLmg {
        DrivenLmg {
            xi: self.xi,
            lambda: self.lambda,
            mu: self.mu,
            spin: self.spin,
            schedule: PulseSchedule::Tanh {
                alpha: point.alpha,
                t1: self.ramp_ratio * point.t2,
                t2: point.t2,
            },
        }
    }

    pub fn adiabaticity(&self, point: ScanPoint) -> f64 {
        2.0 * point.alpha * (self.xi.abs() * point.t2).sqrt()
    }

    /// Point with adiabaticity `x` at amplitude `alpha`.
    pub fn point_for(&self, x: f64, alpha: f64) -> ScanPoint {
        let chi_max = 2.0 * alpha;
        ScanPoint {
            alpha,
            t2: x * x / (self.xi.abs() * chi_max * chi_max),
        }
    }
}

/// Transfer efficiency from the separable initial state to the case target
/// for each point, using the default window and step.
pub fn adiabaticity_scan(family: &ScanFamily, points: &[ScanPoint]) -> Result<Vec<ScanRow>> {
    points.iter().map(|&pt| scan_point(family, pt)).collect()
}

pub fn scan_point(family: &ScanFamily, point: ScanPoint) -> Result<ScanRow> {
    let driven = family.driven(point);
    driven.schedule.validate()?;
    let label = driven.case_label()?;
    let target = lmg::target_state(&label)?;
    let cfg = EvolutionConfig::for_schedule(&driven, &driven.schedule, usize::MAX)?;
    let traj = evolve(&driven, &label.initial_state(), &cfg)?;
    Ok(ScanRow {
        alpha: point.alpha,
        t2: point.t2,
        adiabaticity: family.adiabaticity(point),
        efficiency: transfer_efficiency(&traj, &target)?,
    })
}
