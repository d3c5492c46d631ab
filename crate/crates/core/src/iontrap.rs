//! Bichromatically driven ion string coupled to one phonon mode.
//!
//! The full model is kept in the interaction picture of
//! `nu c^dag c + omega_eg Jz` with the recoil phase expanded to first order:
//!
//! ```text
//! H(t) = J+ [1 + i eta (c e^{-i nu t} + c^dag e^{i nu t})]
//!           [Omega1 e^{-i delta t} + Omega2 e^{i delta t}] + h.c.
//! ```
//!
//! Adiabatic elimination of the phonon mode gives the LMG form with
//! `xi = 2 nu eta^2 / (delta^2 - nu^2)`, `chi1,2 = Omega1 -+ Omega2`, and a
//! `Jz` coefficient `-(2/delta + xi delta/nu) chi1 chi2`. The second term of
//! that coefficient comes from the sideband pair and is of the same order in
//! `eta` as `xi` itself, so `lambda = -(2/(xi delta) + delta/nu)`.

use serde::{Deserialize, Serialize};

use crate::adiabatic::{self, DrivenLmg, EvolutionConfig, HamiltonianSource, PopulationMap, PulseSchedule, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64, I};
use crate::lmg::LmgParams;
use crate::spinops::{self, Axis, Basis, Spin, StateVector};

/// Above this `(n_max + 1) eta^2` the first-order recoil expansion is not trusted.
pub const LAMB_DICKE_LIMIT: f64 = 0.1;
/// Largest ion count for the unsymmetrized `2^N` spin space.
pub const MAX_FULL_IONS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinSpace {
    /// Symmetric sector `J = N/2`.
    Dicke,
    /// All `2^N` configurations.
    Full,
}

/// Spin space tensored with phonon Fock levels `0..=n_max`. Index
/// `s * (n_max + 1) + n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ProductBasis {
    pub spin_space: SpinSpace,
    pub n_ions: usize,
    pub n_max: usize,
}

impl ProductBasis {
    pub fn spin_dim(&self) -> usize {
        match self.spin_space {
            SpinSpace::Dicke => self.n_ions + 1,
            SpinSpace::Full => 1 << self.n_ions,
        }
    }

    pub fn phonon_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn dim(&self) -> usize {
        self.spin_dim() * self.phonon_dim()
    }

    pub fn spin(&self) -> Spin {
        Spin::from_particles(self.n_ions)
    }

    /// Columns are the symmetric Dicke z-states written in this spin space.
    pub fn symmetric_embedding(&self) -> CMatrix {
        match self.spin_space {
            SpinSpace::Dicke => linalg::identity(self.n_ions + 1),
            SpinSpace::Full => {
                let n = self.n_ions;
                let mut e = CMatrix::zeros(1 << n, n + 1);
                for b in 0..(1usize << n) {
                    let k = b.count_ones() as usize;
                    e[(b, k)] = c(1.0 / binomial(n, k).sqrt());
                }
                e
            }
        }
    }

    /// Levels are the collective Dicke states along `axis`, summed over phonons.
    pub fn population_map(&self, axis: Axis) -> PopulationMap {
        let dicke = PopulationMap::dicke(self.spin(), axis);
        PopulationMap {
            levels: self.symmetric_embedding() * dicke.levels,
            labels: dicke.labels,
            phonon_dim: self.phonon_dim(),
        }
    }

    /// `psi_spin (x) |n = 0>`.
    pub fn embed(&self, spin_state: &StateVector) -> Result<StateVector> {
        spinops::check_basis(spin_state.basis(), spinops::DickeBasis::z(self.spin()).into())?;
        let sym = self.symmetric_embedding() * spin_state.amplitudes();
        let np = self.phonon_dim();
        let mut amps = CVector::zeros(self.dim());
        for (s, z) in sym.iter().enumerate() {
            amps[s * np] = *z;
        }
        StateVector::new(Basis::Product(*self), amps)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonTrapParams {
    pub nu: f64,
    pub eta: f64,
    /// Symmetric detuning, `omega_{1,2} = omega_eg +- delta`.
    pub delta: f64,
    pub n_ions: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_spin_space")]
    pub spin_space: SpinSpace,
    /// Population of `|n_max>` above which a run is flagged as overflowing.
    #[serde(default = "default_cutoff_threshold")]
    pub cutoff_threshold: f64,
}

fn default_n_max() -> usize {
    6
}

fn default_spin_space() -> SpinSpace {
    SpinSpace::Dicke
}

fn default_cutoff_threshold() -> f64 {
    1e-2
}

/// Which `Jz` coefficient the effective model uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaMapping {
    /// `lambda = -(2/(xi delta) + delta/nu)`, from the elimination above.
    #[default]
    Corrected,
    /// `lambda = 2/(xi delta)`.
    Quoted,
}

impl IonTrapParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("nu", self.nu), ("eta", self.eta), ("delta", self.delta)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        if self.nu <= 0.0 {
            return Err(Error::InvalidParameter("nu must be positive".into()));
        }
        if self.eta < 0.0 {
            return Err(Error::InvalidParameter("eta must be non-negative".into()));
        }
        if self.delta == 0.0 {
            return Err(Error::InvalidParameter("delta must be non-zero".into()));
        }
        if self.n_ions == 0 {
            return Err(Error::InvalidParameter("need at least one ion".into()));
        }
        if self.spin_space == SpinSpace::Full && self.n_ions > MAX_FULL_IONS {
            return Err(Error::InvalidParameter(format!(
                "full spin space is limited to N <= {MAX_FULL_IONS}"
            )));
        }
        if !(self.cutoff_threshold > 0.0) {
            return Err(Error::InvalidParameter("cutoff_threshold must be positive".into()));
        }
        Ok(())
    }

    pub fn basis(&self) -> ProductBasis {
        ProductBasis {
            spin_space: self.spin_space,
            n_ions: self.n_ions,
            n_max: self.n_max,
        }
    }

    pub fn spin(&self) -> Spin {
        Spin::from_particles(self.n_ions)
    }

    /// `(n_max + 1) eta^2`.
    pub fn lamb_dicke_measure(&self) -> f64 {
        (self.n_max as f64 + 1.0) * self.eta * self.eta
    }

    pub fn lamb_dicke_ok(&self) -> bool {
        self.lamb_dicke_measure() <= LAMB_DICKE_LIMIT
    }

    fn check_detuning(&self) -> Result<()> {
        let rel = (self.delta.abs() - self.nu).abs() / self.nu;
        if rel < 1e-12 {
            return Err(Error::Domain("delta = +-nu makes the effective coupling singular".into()));
        }
        Ok(())
    }

    pub fn xi(&self) -> Result<f64> {
        self.validate()?;
        self.check_detuning()?;
        Ok(2.0 * self.nu * self.eta * self.eta / (self.delta * self.delta - self.nu * self.nu))
    }

    pub fn lambda(&self, mapping: LambdaMapping) -> Result<f64> {
        let xi = self.xi()?;
        if xi == 0.0 {
            return Err(Error::Domain("eta = 0 gives xi = 0 and no defined lambda".into()));
        }
        Ok(match mapping {
            LambdaMapping::Corrected => -(2.0 / (xi * self.delta) + self.delta / self.nu),
            LambdaMapping::Quoted => 2.0 / (xi * self.delta),
        })
    }
}

pub fn effective_params(t: &IonTrapParams, omega1: f64, omega2: f64) -> Result<LmgParams> {
    effective_params_with(t, omega1, omega2, LambdaMapping::Corrected)
}

pub fn effective_params_with(t: &IonTrapParams, omega1: f64, omega2: f64, mapping: LambdaMapping) -> Result<LmgParams> {
    let p = LmgParams {
        xi: t.xi()?,
        lambda: t.lambda(mapping)?,
        mu: 0.0,
        chi1: omega1 - omega2,
        chi2: omega1 + omega2,
        spin: t.spin(),
    };
    p.validate()?;
    Ok(p)
}

/// The effective LMG model along a schedule.
pub fn effective_drive(t: &IonTrapParams, drive: &PulseSchedule, mapping: LambdaMapping) -> Result<DrivenLmg> {
    drive.validate()?;
    Ok(DrivenLmg {
        xi: t.xi()?,
        lambda: t.lambda(mapping)?,
        mu: 0.0,
        spin: t.spin(),
        schedule: drive.clone(),
    })
}

/// Precomputed pieces of the full Hamiltonian.
///
/// Every term changes the spin excitation number by one, so `H` only couples
/// levels of opposite excitation parity. Writing `H = [[0, B], [B^dag, 0]]` in
/// that split, the propagator follows from the eigendecomposition of the
/// half-size Hermitian block `B B^dag`.
pub struct FullModel {
    params: IonTrapParams,
    drive: PulseSchedule,
    basis: ProductBasis,
    /// `J+ (x) 1`, `J+ (x) c`, `J+ (x) c^dag`.
    terms: [CMatrix; 3],
    even: Vec<usize>,
    odd: Vec<usize>,
    /// `terms[k]` restricted to rows `even`, columns `odd`.
    up: [CMatrix; 3],
    /// Adjoint of `terms[k]` restricted to rows `even`, columns `odd`.
    down: [CMatrix; 3],
}

fn collective_raising(space: SpinSpace, n: usize) -> CMatrix {
    match space {
        SpinSpace::Dicke => spinops::raising(Spin::from_particles(n)),
        SpinSpace::Full => {
            let d = 1usize << n;
            let mut m = CMatrix::zeros(d, d);
            for b in 0..d {
                for i in 0..n {
                    if b & (1 << i) == 0 {
                        m[(b | (1 << i), b)] += c(1.0);
                    }
                }
            }
            m
        }
    }
}

/// Fock annihilation operator on `0..=n_max`.
pub fn annihilation(n_max: usize) -> CMatrix {
    let d = n_max + 1;
    CMatrix::from_fn(d, d, |i, j| if j == i + 1 { c((j as f64).sqrt()) } else { c(0.0) })
}

fn excitations(space: SpinSpace, s: usize) -> usize {
    match space {
        SpinSpace::Dicke => s,
        SpinSpace::Full => s.count_ones() as usize,
    }
}

fn restrict(m: &CMatrix, rows: &[usize], cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

// sin(s t)/s and (1 - cos(s t))/s^2 as functions of s^2 >= 0.
fn sinc_terms(s2: f64, t: f64) -> (f64, f64, f64) {
    let s = s2.max(0.0).sqrt();
    let x = s * t;
    if x < 1e-4 {
        let x2 = x * x;
        (1.0 - 0.5 * x2, t * (1.0 - x2 / 6.0), t * t * (0.5 - x2 / 24.0))
    } else {
        (x.cos(), x.sin() / s, (1.0 - x.cos()) / s2)
    }
}

impl FullModel {
    pub fn new(params: &IonTrapParams, drive: &PulseSchedule) -> Result<Self> {
        params.validate()?;
        drive.validate()?;
        if !params.lamb_dicke_ok() {
            return Err(Error::InvalidParameter(format!(
                "(n_max + 1) eta^2 = {} exceeds the Lamb-Dicke limit {LAMB_DICKE_LIMIT}",
                params.lamb_dicke_measure()
            )));
        }
        let basis = params.basis();
        let jp_spin = collective_raising(params.spin_space, params.n_ions);
        let a = annihilation(params.n_max);
        let id = linalg::identity(basis.phonon_dim());
        let terms = [
            linalg::kron(&jp_spin, &id),
            linalg::kron(&jp_spin, &a),
            linalg::kron(&jp_spin, &a.adjoint()),
        ];
        let np = basis.phonon_dim();
        let (even, odd): (Vec<usize>, Vec<usize>) =
            (0..basis.dim()).partition(|&i| excitations(params.spin_space, i / np) % 2 == 0);
        let up = terms.clone().map(|m| restrict(&m, &even, &odd));
        let down = terms.clone().map(|m| restrict(&m.adjoint(), &even, &odd));
        Ok(FullModel {
            params: *params,
            drive: drive.clone(),
            basis,
            terms,
            even,
            odd,
            up,
            down,
        })
    }

    pub fn product_basis(&self) -> ProductBasis {
        self.basis
    }

    fn coefficients(&self, t: f64) -> [C64; 3] {
        let (o1, o2) = self.drive.eval(t);
        let IonTrapParams { nu, eta, delta, .. } = self.params;
        let carrier = C64::from_polar(o1, -delta * t) + C64::from_polar(o2, delta * t);
        [
            carrier,
            carrier * I * eta * C64::from_polar(1.0, -nu * t),
            carrier * I * eta * C64::from_polar(1.0, nu * t),
        ]
    }

    pub fn at(&self, t: f64) -> CMatrix {
        let a = self.coefficients(t);
        let d = self.basis.dim();
        let mut h = CMatrix::zeros(d, d);
        for j in 0..d {
            for i in 0..d {
                let z = self.terms[0][(i, j)] * a[0] + self.terms[1][(i, j)] * a[1] + self.terms[2][(i, j)] * a[2];
                if z != c(0.0) {
                    h[(i, j)] += z;
                    h[(j, i)] += z.conj();
                }
            }
        }
        h
    }

    /// Off-diagonal block `H[even, odd]`.
    fn coupling_block(&self, t: f64) -> CMatrix {
        let a = self.coefficients(t);
        let mut b = &self.up[0] * a[0] + &self.down[0] * a[0].conj();
        for k in 1..3 {
            b += &self.up[k] * a[k] + &self.down[k] * a[k].conj();
        }
        b
    }

    fn propagate(&self, t_mid: f64, dt: f64, psi: &CVector) -> Result<CVector> {
        let b = self.coupling_block(t_mid);
        if b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(format!("hamiltonian at t = {t_mid}")));
        }
        let eig = linalg::eigh(&(&b * b.adjoint()));
        let u = &eig.vectors;
        let x = CVector::from_iterator(self.even.len(), self.even.iter().map(|&i| psi[i]));
        let y = CVector::from_iterator(self.odd.len(), self.odd.iter().map(|&i| psi[i]));
        let ux = u.ad_mul(&x);
        let uby = u.ad_mul(&(&b * &y));
        let mut cos_ux = ux.clone();
        let mut sin_uby = uby.clone();
        let mut sin_ux = ux;
        let mut vers_uby = uby;
        for (k, &s2) in eig.values.iter().enumerate() {
            let (cs, sn, vers) = sinc_terms(s2, dt);
            cos_ux[k] *= cs;
            sin_ux[k] *= sn;
            sin_uby[k] *= sn;
            vers_uby[k] *= vers;
        }
        let x_new = u * (cos_ux - sin_uby * I);
        let y_new = y - b.ad_mul(&(u * (vers_uby + sin_ux * I)));
        let mut out = CVector::zeros(psi.len());
        for (k, &i) in self.even.iter().enumerate() {
            out[i] = x_new[k];
        }
        for (k, &i) in self.odd.iter().enumerate() {
            out[i] = y_new[k];
        }
        Ok(out)
    }
}

impl HamiltonianSource for FullModel {
    fn basis(&self) -> Basis {
        Basis::Product(self.basis)
    }

    fn hamiltonian(&self, t: f64) -> Result<CMatrix> {
        Ok(self.at(t))
    }

    fn midpoint_step(&self, t_mid: f64, dt: f64, psi: &CVector) -> Option<Result<CVector>> {
        Some(self.propagate(t_mid, dt, psi))
    }
}

pub fn build_full_hamiltonian(t: &IonTrapParams, drive: &PulseSchedule, time: f64) -> Result<spinops::Operator> {
    let model = FullModel::new(t, drive)?;
    spinops::Operator::new(Basis::Product(model.basis), model.at(time))
}

#[derive(Clone, Debug)]
pub struct FullTrajectory {
    /// Spin populations summed over the phonon levels.
    pub trajectory: Trajectory,
    /// Fock-level populations at every sample.
    pub phonon_populations: Vec<Vec<f64>>,
    pub mean_phonon: Vec<f64>,
    /// Largest population of `|n_max>` over the run.
    pub max_top_population: f64,
    pub cutoff_overflow: bool,
}

impl FullTrajectory {
    /// `Err(CutoffOverflow)` if the run was flagged.
    pub fn check_cutoff(&self, threshold: f64) -> Result<()> {
        if self.cutoff_overflow {
            return Err(Error::CutoffOverflow {
                population: self.max_top_population,
                threshold,
            });
        }
        Ok(())
    }
}

fn phonon_distribution(psi: &CVector, spin_dim: usize, np: usize) -> Vec<f64> {
    (0..np)
        .map(|n| (0..spin_dim).map(|s| psi[s * np + n].norm_sqr()).sum())
        .collect()
}

/// Evolves `spin_state (x) |n = 0>` under the full model.
pub fn simulate_full(
    t: &IonTrapParams,
    drive: &PulseSchedule,
    spin_state: &StateVector,
    cfg: &EvolutionConfig,
) -> Result<FullTrajectory> {
    let model = FullModel::new(t, drive)?;
    let basis = model.basis;
    let psi0 = basis.embed(spin_state)?;
    let trajectory = adiabatic::evolve(&model, &psi0, cfg)?;
    let (sd, np) = (basis.spin_dim(), basis.phonon_dim());
    let phonon_populations: Vec<Vec<f64>> = trajectory
        .states
        .iter()
        .map(|s| phonon_distribution(s.amplitudes(), sd, np))
        .collect();
    let mean_phonon = phonon_populations
        .iter()
        .map(|p| p.iter().enumerate().map(|(n, w)| n as f64 * w).sum())
        .collect();
    let max_top_population = phonon_populations.iter().fold(0.0_f64, |a, p| a.max(p[np - 1]));
    Ok(FullTrajectory {
        trajectory,
        phonon_populations,
        mean_phonon,
        max_top_population,
        cutoff_overflow: max_top_population > t.cutoff_threshold,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    /// Defaults to the schedule window.
    #[serde(default)]
    pub t_start: Option<f64>,
    #[serde(default)]
    pub t_end: Option<f64>,
    /// Full-model step; defaults to `||H|| dt <= 0.05`.
    #[serde(default)]
    pub full_dt: Option<f64>,
    #[serde(default)]
    pub effective_dt: Option<f64>,
    /// Spacing of the common sample grid.
    #[serde(default = "default_sample_interval")]
    pub sample_interval: f64,
    /// Coarse-graining window in units of the slowest fast period.
    #[serde(default = "default_window_periods")]
    pub window_periods: f64,
    #[serde(default = "default_axis")]
    pub population_basis: Axis,
    #[serde(default)]
    pub lambda_mapping: LambdaMapping,
}

fn default_sample_interval() -> f64 {
    1.0
}

fn default_window_periods() -> f64 {
    3.0
}

fn default_axis() -> Axis {
    Axis::Y
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            t_start: None,
            t_end: None,
            full_dt: None,
            effective_dt: None,
            sample_interval: default_sample_interval(),
            window_periods: default_window_periods(),
            population_basis: default_axis(),
            lambda_mapping: LambdaMapping::Corrected,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub rms: f64,
    pub max_deviation: f64,
    pub times: Vec<f64>,
    pub level_labels: Vec<f64>,
    pub full_raw: Vec<Vec<f64>>,
    pub full_coarse: Vec<Vec<f64>>,
    pub effective: Vec<Vec<f64>>,
    /// Sample range `[lo, hi)` where the averaging window fits inside the run.
    pub interior: (usize, usize),
    /// Averaging window length in time units.
    pub window: f64,
    /// Sample grid and step of the full-model run.
    pub full_config: EvolutionConfig,
    pub effective_dt: f64,
    pub effective_xi: f64,
    pub effective_lambda: f64,
    pub max_top_population: f64,
    pub cutoff_overflow: bool,
    pub full_norm_error: f64,
}

impl Comparison {
    /// Coarse-grained full populations at the last interior sample.
    pub fn full_final(&self) -> &[f64] {
        &self.full_coarse[self.interior.1 - 1]
    }

    pub fn effective_final(&self) -> &[f64] {
        &self.effective[self.interior.1 - 1]
    }

    /// Largest change of the final raw full-model populations when the same
    /// run is repeated with `n_max + extra`.
    pub fn cutoff_sensitivity(
        &self,
        t: &IonTrapParams,
        drive: &PulseSchedule,
        spin_state: &StateVector,
        extra: usize,
    ) -> Result<f64> {
        let bigger = IonTrapParams {
            n_max: t.n_max + extra,
            ..*t
        };
        let more = simulate_full(&bigger, drive, spin_state, &self.full_config)?;
        Ok(max_change(self.full_raw.last().expect("non-empty"), more.trajectory.final_populations()))
    }
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// `2 pi K / min(|delta|, |nu - |delta||)`.
pub fn coarse_window(t: &IonTrapParams, periods: f64) -> f64 {
    let slow = t.delta.abs().min((t.nu - t.delta.abs()).abs());
    2.0 * std::f64::consts::PI * periods / slow
}

/// Centered moving average over `2 half + 1` samples, truncated at the ends.
pub fn moving_average(series: &[Vec<f64>], half: usize) -> Vec<Vec<f64>> {
    let n = series.len();
    let width = series.first().map_or(0, |s| s.len());
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            let mut acc = vec![0.0; width];
            for row in &series[lo..hi] {
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += v;
                }
            }
            let k = (hi - lo) as f64;
            acc.into_iter().map(|a| a / k).collect()
        })
        .collect()
}

fn aligned_config(t_start: f64, samples: usize, interval: f64, requested_dt: f64, axis: Axis) -> EvolutionConfig {
    let per_sample = (interval / requested_dt).ceil().max(1.0) as usize;
    EvolutionConfig {
        t_start,
        t_end: t_start + samples as f64 * interval,
        dt: interval / per_sample as f64,
        record_stride: per_sample,
        population_basis: axis,
        record_spectrum: false,
    }
}

/// Runs both models from `spin_state (x) |0>` and compares the coarse-grained
/// full-model spin populations with the effective ones on a common grid.
pub fn compare_effective(
    t: &IonTrapParams,
    drive: &PulseSchedule,
    spin_state: &StateVector,
    cc: &CompareConfig,
) -> Result<Comparison> {
    if !(cc.sample_interval > 0.0 && cc.window_periods > 0.0) {
        return Err(Error::InvalidParameter("sample_interval and window_periods must be positive".into()));
    }
    let model = FullModel::new(t, drive)?;
    let eff = effective_drive(t, drive, cc.lambda_mapping)?;
    let (w0, w1) = drive.default_window();
    let t_start = cc.t_start.unwrap_or(w0);
    let t_end = cc.t_end.unwrap_or(w1);
    if !(t_end > t_start) {
        return Err(Error::InvalidParameter("t_end must exceed t_start".into()));
    }
    let samples = ((t_end - t_start) / cc.sample_interval).round().max(1.0) as usize;
    let full_req = match cc.full_dt {
        Some(dt) => dt,
        None => adiabatic::default_dt(&model, t_start, t_end)?,
    };
    let eff_req = match cc.effective_dt {
        Some(dt) => dt,
        None => adiabatic::default_dt(&eff, t_start, t_end)?,
    };
    let full_cfg = aligned_config(t_start, samples, cc.sample_interval, full_req, cc.population_basis);
    let eff_cfg = aligned_config(t_start, samples, cc.sample_interval, eff_req, cc.population_basis);

    let full = simulate_full(t, drive, spin_state, &full_cfg)?;
    let effective = adiabatic::evolve(&eff, spin_state, &eff_cfg)?;

    let window = coarse_window(t, cc.window_periods);
    let half = ((0.5 * window) / cc.sample_interval).round() as usize;
    let full_raw = full.trajectory.populations.clone();
    let full_coarse = moving_average(&full_raw, half);
    let n = full_raw.len();
    let interior = if n > 2 * half { (half, n - half) } else { (0, n) };

    let mut sq = 0.0;
    let mut count = 0usize;
    let mut max_dev = 0.0_f64;
    for k in interior.0..interior.1 {
        for (a, b) in full_coarse[k].iter().zip(&effective.populations[k]) {
            let d = a - b;
            sq += d * d;
            count += 1;
            max_dev = max_dev.max(d.abs());
        }
    }

    Ok(Comparison {
        rms: (sq / count.max(1) as f64).sqrt(),
        max_deviation: max_dev,
        times: full.trajectory.times.clone(),
        level_labels: full.trajectory.level_labels.clone(),
        full_raw,
        full_coarse,
        effective: effective.populations,
        interior,
        window,
        full_config: full_cfg,
        effective_dt: eff_cfg.dt,
        effective_xi: eff.xi,
        effective_lambda: eff.lambda,
        max_top_population: full.max_top_population,
        cutoff_overflow: full.cutoff_overflow,
        full_norm_error: full.trajectory.max_norm_error,
    })
}

/// Largest change of the final spin populations when `n_max` grows by `extra`.
pub fn cutoff_sensitivity(
    t: &IonTrapParams,
    drive: &PulseSchedule,
    spin_state: &StateVector,
    cfg: &EvolutionConfig,
    extra: usize,
) -> Result<f64> {
    let base = simulate_full(t, drive, spin_state, cfg)?;
    let bigger = IonTrapParams {
        n_max: t.n_max + extra,
        ..*t
    };
    let more = simulate_full(&bigger, drive, spin_state, cfg)?;
    Ok(max_change(base.trajectory.final_populations(), more.trajectory.final_populations()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmg::{self, Extremal, TransferCase};

    fn trap(delta: f64, n: usize) -> IonTrapParams {
        IonTrapParams {
            nu: 1.0,
            eta: 0.1,
            delta,
            n_ions: n,
            n_max: 3,
            spin_space: SpinSpace::Dicke,
            cutoff_threshold: 1e-3,
        }
    }

    fn fig3() -> PulseSchedule {
        PulseSchedule::Tanh {
            alpha: 0.6,
            t1: 2000.0,
            t2: 1500.0,
        }
    }

    #[test]
    fn detuning_sets_case() {
        let p = effective_params(&trap(0.9, 4), 0.5, 0.1).unwrap();
        assert!(p.xi < 0.0);
        assert_eq!(lmg::classify_case(&p).unwrap().case, TransferCase::I);
        let p = effective_params(&trap(1.1, 4), 0.5, 0.1).unwrap();
        assert!(p.xi > 0.0);
        assert_eq!(lmg::classify_case(&p).unwrap().case, TransferCase::III);
        assert!((p.xi - 2.0 * 0.01 / (1.21 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn equal_amplitudes_zero_chi1() {
        let p = effective_params(&trap(1.1, 4), 0.3, 0.3).unwrap();
        assert_eq!(p.chi1, 0.0);
        assert!((p.chi2 - 0.6).abs() < 1e-15);
    }

    #[test]
    fn singular_detuning_rejected() {
        assert!(matches!(effective_params(&trap(1.0, 2), 0.1, 0.1), Err(Error::Domain(_))));
        assert!(matches!(effective_params(&trap(-1.0, 2), 0.1, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn fock_algebra() {
        let a = annihilation(4);
        for n in 0..4 {
            assert!((a.adjoint()[(n + 1, n)].re - ((n + 1) as f64).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn full_hamiltonian_structure() {
        let t = trap(0.9, 2);
        let h = build_full_hamiltonian(&t, &fig3(), 123.4).unwrap();
        assert!(linalg::hermiticity_defect(h.matrix()) < 1e-12 * linalg::max_abs(h.matrix()));
        let np = t.basis().phonon_dim();
        for i in 0..h.dim() {
            for j in 0..h.dim() {
                let dm = (i / np) as i64 - (j / np) as i64;
                if dm.abs() != 1 {
                    assert_eq!(h.matrix()[(i, j)], c(0.0));
                }
            }
        }
    }

    #[test]
    fn zero_eta_decouples_phonons() {
        let t = IonTrapParams { eta: 0.0, ..trap(0.9, 2) };
        let h = build_full_hamiltonian(&t, &fig3(), 7.0).unwrap();
        let np = t.basis().phonon_dim();
        for i in 0..h.dim() {
            for j in 0..h.dim() {
                if i % np != j % np {
                    assert_eq!(h.matrix()[(i, j)], c(0.0));
                }
            }
        }
    }

    #[test]
    fn structured_step_matches_dense_exponential() {
        for space in [SpinSpace::Dicke, SpinSpace::Full] {
            let t = IonTrapParams { spin_space: space, ..trap(0.9, 3) };
            let model = FullModel::new(&t, &fig3()).unwrap();
            let d = t.basis().dim();
            let psi = CVector::from_fn(d, |i, _| C64::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()));
            for (time, dt) in [(0.0, 0.3), (517.25, 0.05), (-3000.0, 1.7)] {
                let dense = linalg::unitary_exp(&model.at(time), dt) * &psi;
                let fast = model.propagate(time, dt, &psi).unwrap();
                assert!((dense - fast).norm() < 1e-12 * psi.norm());
            }
        }
    }

    #[test]
    fn lamb_dicke_flag() {
        let t = IonTrapParams { eta: 0.2, n_max: 6, ..trap(0.9, 2) };
        assert!(!t.lamb_dicke_ok());
        assert!(build_full_hamiltonian(&t, &fig3(), 0.0).is_err());
    }

    #[test]
    fn drive_off_is_stationary() {
        let t = trap(1.1, 2);
        let off = PulseSchedule::Tanh { alpha: 0.0, t1: 1.0, t2: 1.0 };
        let cfg = EvolutionConfig {
            t_start: 0.0,
            t_end: 10.0,
            dt: 0.1,
            record_stride: 10,
            population_basis: Axis::Z,
            record_spectrum: true,
        };
        let psi = Extremal::Down.state(t.spin());
        let run = simulate_full(&t, &off, &psi, &cfg).unwrap();
        let fin = run.trajectory.final_state();
        let start = t.basis().embed(&psi).unwrap();
        assert!((fin.fidelity(&start).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(run.max_top_population, 0.0);
    }

    #[test]
    fn full_spin_space_matches_dicke() {
        let drive = PulseSchedule::Tanh { alpha: 0.2, t1: 20.0, t2: 15.0 };
        let cfg = EvolutionConfig {
            t_start: -30.0,
            t_end: 30.0,
            dt: 0.02,
            record_stride: 500,
            population_basis: Axis::Y,
            record_spectrum: true,
        };
        let dicke = trap(1.1, 3);
        let full = IonTrapParams { spin_space: SpinSpace::Full, ..dicke };
        let psi = Extremal::Down.state(dicke.spin());
        let a = simulate_full(&dicke, &drive, &psi, &cfg).unwrap();
        let b = simulate_full(&full, &drive, &psi, &cfg).unwrap();
        for (pa, pb) in a.trajectory.populations.iter().zip(&b.trajectory.populations) {
            let total: f64 = pb.iter().sum();
            assert!((total - 1.0).abs() < 1e-10, "symmetric weight {total}");
            for (x, y) in pa.iter().zip(pb) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
