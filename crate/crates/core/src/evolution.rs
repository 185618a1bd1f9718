//! The three-stage sweep and time evolution: pure states for every graph,
//! density operators and stochastic trajectories under Rydberg-level
//! dephasing for small graphs.
//!
//! All propagators use the same fixed grid: each stage is cut into equal
//! steps no longer than `dt`, and the Hamiltonian is sampled at the step
//! midpoint.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{positive, probability, Error, Result};
use crate::graphs::PlatonicSolid;
use crate::hamiltonian::{Drive, RydbergOperator, StateVector, C64};
use crate::krylov::{expm_apply, DrivenOperator, ExpOptions};
use crate::layout::{angular, quoted, OMEGA0_MHZ};

/// Density operators are stored densely; `4^N` complex entries.
pub const DENSITY_MAX_ATOMS: usize = 10;
/// Below this size a step unitary is built densely and shared by every
/// trajectory.
pub const DENSE_STEP_MAX_ATOMS: usize = 10;

/// Piecewise-linear sweep. Times in us, frequencies in rad/us.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSchedule {
    pub t1: f64,
    pub t2: f64,
    pub tf: f64,
    pub omega0: f64,
    pub delta_i: f64,
    pub delta_f: f64,
}

impl SweepSchedule {
    pub fn new(t1: f64, t2: f64, tf: f64, omega0: f64, delta_i: f64, delta_f: f64) -> Result<Self> {
        if !(0.0 < t1 && t1 < t2 && t2 < tf && tf.is_finite()) {
            return Err(Error::InvalidSchedule(format!("need 0 < t1 < t2 < tf, got {t1}, {t2}, {tf}")));
        }
        if !(omega0 >= 0.0 && omega0.is_finite()) {
            return Err(Error::InvalidSchedule(format!("Omega0 = {omega0}")));
        }
        if !delta_i.is_finite() || !delta_f.is_finite() {
            return Err(Error::InvalidSchedule("non-finite detuning".into()));
        }
        Ok(Self { t1, t2, tf, omega0, delta_i, delta_f })
    }

    /// The experimental sweep: `tf = 4 us`, `t1 = tf/10`, `t2 = tf - t1`,
    /// `Omega0 = 0.74 MHz`, `Delta` from `-3 MHz` to 2 MHz (tetrahedron) or
    /// 3 MHz.
    pub fn experimental(solid: PlatonicSolid) -> Self {
        let delta_f = match solid {
            PlatonicSolid::Tetrahedron => 2.0,
            PlatonicSolid::Cube | PlatonicSolid::Octahedron => 3.0,
        };
        Self::new(0.4, 3.6, 4.0, angular(OMEGA0_MHZ), angular(-3.0), angular(delta_f)).expect("valid constants")
    }

    /// Same shape stretched to a new total duration.
    pub fn with_duration(&self, tf: f64) -> Result<Self> {
        let s = tf / self.tf;
        Self::new(self.t1 * s, self.t2 * s, tf, self.omega0, self.delta_i, self.delta_f)
    }

    pub fn with_omega0(&self, omega0: f64) -> Result<Self> {
        Self::new(self.t1, self.t2, self.tf, omega0, self.delta_i, self.delta_f)
    }

    /// `(Omega(t), Delta(t))`.
    pub fn value(&self, t: f64) -> Result<(f64, f64)> {
        if !(0.0..=self.tf).contains(&t) {
            return Err(Error::TimeOutOfRange { t, tf: self.tf });
        }
        Ok(self.value_unchecked(t))
    }

    fn value_unchecked(&self, t: f64) -> (f64, f64) {
        if t <= self.t1 {
            (self.omega0 * t / self.t1, self.delta_i)
        } else if t <= self.t2 {
            let s = (t - self.t1) / (self.t2 - self.t1);
            (self.omega0, self.delta_i + s * (self.delta_f - self.delta_i))
        } else {
            (self.omega0 * (self.tf - t) / (self.tf - self.t2), self.delta_f)
        }
    }

    pub fn drive(&self, t: f64) -> Result<Drive> {
        self.value(t).map(|(o, d)| Drive::new(o, d))
    }

    /// Step midpoints and lengths; every stage is divided into equal steps
    /// of length at most `dt`, so no step straddles a kink.
    pub fn grid(&self, dt: f64) -> Result<Vec<(f64, f64)>> {
        positive("dt", dt)?;
        let mut out = Vec::new();
        for (a, b) in [(0.0, self.t1), (self.t1, self.t2), (self.t2, self.tf)] {
            let n = (((b - a) / dt) - 1e-9).ceil().max(1.0) as usize;
            let h = (b - a) / n as f64;
            out.extend((0..n).map(|i| (a + (i as f64 + 0.5) * h, h)));
        }
        Ok(out)
    }

    pub fn to_document(&self) -> ScheduleDocument {
        ScheduleDocument {
            t1_us: self.t1,
            t2_us: self.t2,
            tf_us: self.tf,
            omega0_mhz: quoted(self.omega0),
            delta_i_mhz: quoted(self.delta_i),
            delta_f_mhz: quoted(self.delta_f),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("schedule serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ScheduleDocument = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        doc.to_schedule()
    }
}

/// On-disk schedule; frequencies as quoted MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDocument {
    pub t1_us: f64,
    pub t2_us: f64,
    pub tf_us: f64,
    pub omega0_mhz: f64,
    pub delta_i_mhz: f64,
    pub delta_f_mhz: f64,
}

impl ScheduleDocument {
    pub fn to_schedule(&self) -> Result<SweepSchedule> {
        SweepSchedule::new(
            self.t1_us,
            self.t2_us,
            self.tf_us,
            angular(self.omega0_mhz),
            angular(self.delta_i_mhz),
            angular(self.delta_f_mhz),
        )
    }
}

pub fn default_schedule(graph_name: &str) -> Result<SweepSchedule> {
    Ok(SweepSchedule::experimental(graph_name.parse()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DephasingMode {
    /// One jump operator `sqrt(gamma) sum_i n_i`.
    Collective,
    /// Independent `sqrt(gamma) n_i` per atom.
    PerAtom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// rad/us
    pub dephasing_rate: f64,
    pub mode: DephasingMode,
    pub detect_p01: f64,
    pub detect_p10: f64,
}

pub const DEFAULT_DEPHASING_MHZ: f64 = 0.05;
pub const DETECT_P01: f64 = 0.12;
pub const DETECT_P10: f64 = 0.09;

impl NoiseModel {
    pub fn new(dephasing_rate: f64, mode: DephasingMode, detect_p01: f64, detect_p10: f64) -> Result<Self> {
        if !(dephasing_rate >= 0.0 && dephasing_rate.is_finite()) {
            return Err(Error::NonPositive { name: "dephasing_rate", value: dephasing_rate });
        }
        probability("detect_p01", detect_p01)?;
        probability("detect_p10", detect_p10)?;
        Ok(Self { dephasing_rate, mode, detect_p01, detect_p10 })
    }

    pub fn noiseless() -> Self {
        Self { dephasing_rate: 0.0, mode: DephasingMode::Collective, detect_p01: 0.0, detect_p10: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.dephasing_rate, self.mode, self.detect_p01, self.detect_p10).map(|_| ())
    }

    /// Weight `w(c, c')` such that dephasing damps `rho[c][c']` by
    /// `exp(-gamma t w / 2)`.
    fn dephasing_weight(&self, a: usize, b: usize) -> f64 {
        match self.mode {
            DephasingMode::Collective => {
                let d = a.count_ones() as f64 - b.count_ones() as f64;
                d * d
            }
            DephasingMode::PerAtom => (a ^ b).count_ones() as f64,
        }
    }
}

/// Collective dephasing at 0.05 MHz and the measured imaging errors.
impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            dephasing_rate: angular(DEFAULT_DEPHASING_MHZ),
            mode: DephasingMode::Collective,
            detect_p01: DETECT_P01,
            detect_p10: DETECT_P10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// Largest step, us.
    pub dt: f64,
    pub exp: ExpOptions,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { dt: 1e-3, exp: ExpOptions::default() }
    }
}

impl StepControl {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }
}

fn check_dims(op: &RydbergOperator, n: usize) -> Result<()> {
    if op.num_atoms() != n {
        return Err(Error::DimensionMismatch { expected: op.num_atoms(), got: n });
    }
    Ok(())
}

fn check_normalized(state: &StateVector) -> Result<()> {
    let p = state.norm().powi(2);
    if (p - 1.0).abs() > 1e-8 {
        return Err(Error::Unnormalized(p));
    }
    Ok(())
}

/// Solves `i d psi/dt = H(t) psi` over the whole schedule.
pub fn evolve_pure(
    initial: &StateVector,
    schedule: &SweepSchedule,
    op: &RydbergOperator,
    step: &StepControl,
) -> Result<StateVector> {
    check_dims(op, initial.num_atoms())?;
    check_normalized(initial)?;
    let mut psi = initial.amplitudes().to_vec();
    for (t, h) in schedule.grid(step.dt)? {
        let (omega, delta) = schedule.value_unchecked(t);
        let driven = DrivenOperator { op, drive: Drive::new(omega, delta) };
        expm_apply(&driven, &mut psi, h, &step.exp)?;
    }
    StateVector::from_amplitudes(initial.num_atoms(), psi)
}

#[derive(Debug, Clone)]
pub struct ConvergedEvolution {
    pub state: StateVector,
    /// Step of the returned (finer) run.
    pub dt: f64,
    /// `1 - |<psi(dt)|psi(dt/2)>|^2` of the last comparison.
    pub infidelity: f64,
    pub halvings: usize,
}

/// Halves `dt` from `step.dt` until two successive runs agree to
/// `1 - fidelity <= tol`.
pub fn evolve_pure_converged(
    initial: &StateVector,
    schedule: &SweepSchedule,
    op: &RydbergOperator,
    step: &StepControl,
    tol: f64,
    max_halvings: usize,
) -> Result<ConvergedEvolution> {
    let mut dt = step.dt;
    let mut coarse = evolve_pure(initial, schedule, op, step)?;
    for halvings in 1..=max_halvings {
        dt /= 2.0;
        let fine = evolve_pure(initial, schedule, op, &StepControl { dt, ..*step })?;
        let infidelity = 1.0 - coarse.fidelity(&fine);
        if infidelity <= tol {
            return Ok(ConvergedEvolution { state: fine, dt, infidelity, halvings });
        }
        coarse = fine;
    }
    Err(Error::NoConvergence(format!("step halving did not reach {tol} after {max_halvings} halvings")))
}

/// `exp(-i H h)` for a real symmetric `H`.
fn dense_step(op: &RydbergOperator, drive: Drive, h: f64) -> Result<DMatrix<C64>> {
    let eig = SymmetricEigen::new(op.dense_real(drive)?);
    let v = eig.eigenvectors.map(|x| C64::new(x, 0.0));
    let phases = eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * h));
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    Ok(scaled * v.transpose())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    n: usize,
    rho: DMatrix<C64>,
}

impl DensityOperator {
    pub fn pure(state: &StateVector) -> Result<Self> {
        let n = state.num_atoms();
        if n > DENSITY_MAX_ATOMS {
            return Err(Error::TooManyAtoms { what: "density operator", max: DENSITY_MAX_ATOMS, got: n });
        }
        let a = state.amplitudes();
        let rho = DMatrix::from_fn(a.len(), a.len(), |i, j| a[i] * a[j].conj());
        Ok(Self { n, rho })
    }

    pub fn num_atoms(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.rho.diagonal().iter().map(|z| z.re).collect()
    }

    /// `<psi| rho |psi>`.
    pub fn fidelity_with(&self, state: &StateVector) -> f64 {
        let a = state.amplitudes();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..a.len() {
            for j in 0..a.len() {
                acc += a[i].conj() * self.rho[(i, j)] * a[j];
            }
        }
        acc.re
    }

    /// Largest entry of `rho - rho^dagger`.
    pub fn hermiticity_error(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn dephase(&mut self, noise: &NoiseModel, tau: f64) {
        if noise.dephasing_rate == 0.0 {
            return;
        }
        let g = noise.dephasing_rate * tau / 2.0;
        let dim = self.rho.nrows();
        for j in 0..dim {
            for i in 0..dim {
                if i != j {
                    self.rho[(i, j)] *= (-g * noise.dephasing_weight(i, j)).exp();
                }
            }
        }
    }
}

/// Lindblad evolution with dephasing jump operators. Each step is the
/// splitting `D(h/2) U(h) D(h/2)`; the dephasing map is applied exactly, so
/// every step is completely positive and trace preserving.
pub fn evolve_density(
    initial: &StateVector,
    schedule: &SweepSchedule,
    noise: &NoiseModel,
    op: &RydbergOperator,
    dt: f64,
) -> Result<DensityOperator> {
    noise.validate()?;
    check_dims(op, initial.num_atoms())?;
    check_normalized(initial)?;
    let mut rho = DensityOperator::pure(initial)?;
    for (t, h) in schedule.grid(dt)? {
        let (omega, delta) = schedule.value_unchecked(t);
        let u = dense_step(op, Drive::new(omega, delta), h)?;
        rho.dephase(noise, h / 2.0);
        rho.rho = &u * &rho.rho * u.adjoint();
        rho.dephase(noise, h / 2.0);
    }
    Ok(rho)
}

/// Ensemble of stochastic pure states whose average is the density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    pub states: Vec<StateVector>,
    pub seed: u64,
}

impl TrajectoryEnsemble {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn mean_populations(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.states[0].dim()];
        for s in &self.states {
            for (a, p) in acc.iter_mut().zip(s.probabilities()) {
                *a += p;
            }
        }
        let m = self.states.len() as f64;
        acc.iter_mut().for_each(|a| *a /= m);
        acc
    }

    /// Standard error of each mean population.
    pub fn population_stderr(&self) -> Vec<f64> {
        let mean = self.mean_populations();
        let m = self.states.len() as f64;
        if m < 2.0 {
            return vec![0.0; mean.len()];
        }
        let mut var = vec![0.0; mean.len()];
        for s in &self.states {
            for ((v, p), mu) in var.iter_mut().zip(s.probabilities()).zip(&mean) {
                *v += (p - mu) * (p - mu);
            }
        }
        var.iter().map(|v| (v / (m - 1.0) / m).sqrt()).collect()
    }
}

/// Per-trajectory noise source: Gaussian phase kicks, stream `index` of the
/// seeded generator.
struct Kicks {
    rng: ChaCha8Rng,
    phases: Vec<f64>,
}

impl Kicks {
    fn new(seed: u64, index: u64, n: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { rng, phases: vec![0.0; n] }
    }

    /// Multiplies `psi_c` by `exp(-i phi . n(c))` with `phi ~ N(0, gamma tau)`.
    fn apply(&mut self, noise: &NoiseModel, tau: f64, psi: &mut [C64]) {
        if noise.dephasing_rate == 0.0 {
            return;
        }
        let sigma = (noise.dephasing_rate * tau).sqrt();
        let n = self.phases.len();
        match noise.mode {
            DephasingMode::Collective => {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                let phi = sigma * z;
                for (c, a) in psi.iter_mut().enumerate() {
                    *a *= C64::from_polar(1.0, -phi * c.count_ones() as f64);
                }
            }
            DephasingMode::PerAtom => {
                for p in self.phases.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut self.rng);
                    *p = sigma * z;
                }
                for (c, a) in psi.iter_mut().enumerate() {
                    let mut phi = 0.0;
                    for (atom, p) in self.phases.iter().enumerate() {
                        if c >> (n - 1 - atom) & 1 == 1 {
                            phi += p;
                        }
                    }
                    *a *= C64::from_polar(1.0, -phi);
                }
            }
        }
    }
}

/// Stochastic unraveling of the dephasing master equation: random
/// Rydberg-level phase kicks around each unitary step, with the same
/// splitting as [`evolve_density`]. Averaged over kicks a step reproduces
/// the density step exactly.
///
/// Trajectory `k` draws from stream `k` of a generator seeded with `seed`,
/// so the ensemble is independent of scheduling.
pub fn evolve_trajectories(
    initial: &StateVector,
    schedule: &SweepSchedule,
    noise: &NoiseModel,
    op: &RydbergOperator,
    step: &StepControl,
    n_traj: usize,
    seed: u64,
) -> Result<TrajectoryEnsemble> {
    noise.validate()?;
    check_dims(op, initial.num_atoms())?;
    check_normalized(initial)?;
    if n_traj == 0 {
        return Err(Error::NonPositive { name: "n_traj", value: 0.0 });
    }
    let n = initial.num_atoms();
    let grid = schedule.grid(step.dt)?;
    let amps: Vec<Vec<C64>> = if n <= DENSE_STEP_MAX_ATOMS {
        lockstep(initial, schedule, noise, op, &grid, n_traj, seed)?
    } else {
        independent(initial, schedule, noise, op, step, &grid, n_traj, seed)?
    };
    let states = amps.into_iter().map(|a| StateVector::from_amplitudes(n, a)).collect::<Result<_>>()?;
    Ok(TrajectoryEnsemble { states, seed })
}

/// Small systems: one dense unitary per step, applied to every trajectory.
fn lockstep(
    initial: &StateVector,
    schedule: &SweepSchedule,
    noise: &NoiseModel,
    op: &RydbergOperator,
    grid: &[(f64, f64)],
    n_traj: usize,
    seed: u64,
) -> Result<Vec<Vec<C64>>> {
    let n = initial.num_atoms();
    let dim = initial.dim();
    let mut kicks: Vec<Kicks> = (0..n_traj as u64).map(|k| Kicks::new(seed, k, n)).collect();
    let mut psi = DMatrix::from_fn(dim, n_traj, |i, _| initial.amplitudes()[i]);
    for &(t, h) in grid {
        let (omega, delta) = schedule.value_unchecked(t);
        let u = dense_step(op, Drive::new(omega, delta), h)?;
        for (k, kick) in kicks.iter_mut().enumerate() {
            kick.apply(noise, h / 2.0, psi.column_mut(k).as_mut_slice());
        }
        psi = &u * &psi;
        for (k, kick) in kicks.iter_mut().enumerate() {
            kick.apply(noise, h / 2.0, psi.column_mut(k).as_mut_slice());
        }
    }
    Ok(psi.column_iter().map(|c| c.iter().copied().collect()).collect())
}

#[allow(clippy::too_many_arguments)]
fn independent(
    initial: &StateVector,
    schedule: &SweepSchedule,
    noise: &NoiseModel,
    op: &RydbergOperator,
    step: &StepControl,
    grid: &[(f64, f64)],
    n_traj: usize,
    seed: u64,
) -> Result<Vec<Vec<C64>>> {
    let n = initial.num_atoms();
    let run = |k: usize| -> Result<Vec<C64>> {
        let mut kick = Kicks::new(seed, k as u64, n);
        let mut psi = initial.amplitudes().to_vec();
        for &(t, h) in grid {
            let (omega, delta) = schedule.value_unchecked(t);
            let driven = DrivenOperator { op, drive: Drive::new(omega, delta) };
            kick.apply(noise, h / 2.0, &mut psi);
            expm_apply(&driven, &mut psi, h, &step.exp)?;
            kick.apply(noise, h / 2.0, &mut psi);
        }
        Ok(psi)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n_traj).into_par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_traj).map(run).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::SpinConfig;
    use crate::graphs::{platonic_graph, wire_platonic};
    use crate::hamiltonian::Coupling;
    use approx::assert_abs_diff_eq;

    fn k4_prime_op() -> RydbergOperator {
        let wg = wire_platonic(PlatonicSolid::Tetrahedron);
        RydbergOperator::new(&Coupling::uniform_wired(&wg, angular(3.9))).unwrap()
    }

    #[test]
    fn schedule_values() {
        let s = SweepSchedule::experimental(PlatonicSolid::Tetrahedron);
        let (o, d) = s.value(0.0).unwrap();
        assert_eq!(o, 0.0);
        assert_abs_diff_eq!(d, angular(-3.0), epsilon = 1e-12);
        let (o, d) = s.value(0.4).unwrap();
        assert_abs_diff_eq!(o, angular(0.74), epsilon = 1e-12);
        assert_abs_diff_eq!(d, angular(-3.0), epsilon = 1e-12);
        let (o, d) = s.value(4.0).unwrap();
        assert_abs_diff_eq!(o, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d, angular(2.0), epsilon = 1e-12);
        let (_, d) = s.value(2.0).unwrap();
        assert_abs_diff_eq!(d, angular(-0.5), epsilon = 1e-12);
        assert!(matches!(s.value(4.01), Err(Error::TimeOutOfRange { .. })));
        assert!(s.value(-1e-9).is_err());
    }

    #[test]
    fn default_ratios() {
        let k4 = default_schedule("tetrahedron").unwrap();
        assert_abs_diff_eq!(k4.delta_f / k4.omega0, 2.70, epsilon = 0.005);
        let q3 = default_schedule("cube").unwrap();
        assert_abs_diff_eq!(q3.delta_f / q3.omega0, 4.05, epsilon = 0.005);
        for s in PlatonicSolid::ALL {
            let sch = SweepSchedule::experimental(s);
            assert_abs_diff_eq!(sch.t2 - sch.t1, 3.2, epsilon = 1e-12);
        }
        assert!(default_schedule("dodecahedron").is_err());
    }

    #[test]
    fn schedule_validation() {
        assert!(SweepSchedule::new(0.5, 0.4, 4.0, 1.0, 0.0, 1.0).is_err());
        assert!(SweepSchedule::new(0.0, 0.4, 4.0, 1.0, 0.0, 1.0).is_err());
        assert!(SweepSchedule::new(0.1, 0.4, 4.0, -1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn schedule_is_continuous() {
        let s = SweepSchedule::experimental(PlatonicSolid::Cube);
        for t in [s.t1, s.t2] {
            let (a, b) = s.value(t - 1e-9).unwrap();
            let (c, d) = s.value(t + 1e-9).unwrap();
            assert!((a - c).abs() < 1e-6 && (b - d).abs() < 1e-6);
        }
    }

    #[test]
    fn schedule_json_roundtrip() {
        let s = SweepSchedule::experimental(PlatonicSolid::Octahedron);
        let back = SweepSchedule::from_json(&s.to_json()).unwrap();
        assert_abs_diff_eq!(back.delta_f, s.delta_f, epsilon = 1e-12);
        assert!(s.to_json().contains("\"omega0_mhz\": 0.74"));
        assert!(SweepSchedule::from_json("{}").is_err());
    }

    #[test]
    fn grid_covers_schedule() {
        let s = SweepSchedule::experimental(PlatonicSolid::Tetrahedron);
        let g = s.grid(0.003).unwrap();
        let total: f64 = g.iter().map(|x| x.1).sum();
        assert_abs_diff_eq!(total, 4.0, epsilon = 1e-12);
        assert!(g.iter().all(|x| x.1 <= 0.003 + 1e-15));
        assert!(s.grid(0.0).is_err());
    }

    #[test]
    fn zero_drive_keeps_basis_state() {
        let op = k4_prime_op();
        let s = SweepSchedule::experimental(PlatonicSolid::Tetrahedron).with_omega0(0.0).unwrap();
        let init = StateVector::basis(SpinConfig::from_bitstring("010010").unwrap()).unwrap();
        let out = evolve_pure(&init, &s, &op, &StepControl::with_dt(0.01)).unwrap();
        assert_abs_diff_eq!(out.fidelity(&init), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pure_evolution_preserves_norm_and_rejects_mismatch() {
        let op = k4_prime_op();
        let s = SweepSchedule::experimental(PlatonicSolid::Tetrahedron);
        let out = evolve_pure(&StateVector::ground(6).unwrap(), &s, &op, &StepControl::with_dt(0.005)).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-8);
        assert!(matches!(
            evolve_pure(&StateVector::ground(4).unwrap(), &s, &op, &StepControl::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn density_without_noise_matches_pure() {
        let op = k4_prime_op();
        let s = SweepSchedule::experimental(PlatonicSolid::Tetrahedron);
        let init = StateVector::ground(6).unwrap();
        let pure = evolve_pure(&init, &s, &op, &StepControl::with_dt(0.005)).unwrap();
        let rho = evolve_density(&init, &s, &NoiseModel::noiseless(), &op, 0.005).unwrap();
        assert!(rho.fidelity_with(&pure) >= 1.0 - 1e-6);
    }

    #[test]
    fn dephasing_leaves_populations_without_drive() {
        let op = k4_prime_op();
        let s = SweepSchedule::experimental(PlatonicSolid::Tetrahedron).with_omega0(0.0).unwrap();
        let init = StateVector::superposition(
            6,
            &[
                (SpinConfig::from_bitstring("000000").unwrap(), C64::new(0.6, 0.0)),
                (SpinConfig::from_bitstring("101000").unwrap(), C64::new(0.0, 0.8)),
            ],
        )
        .unwrap();
        let noise = NoiseModel::new(angular(1.0), DephasingMode::PerAtom, 0.0, 0.0).unwrap();
        let rho = evolve_density(&init, &s, &noise, &op, 0.05).unwrap();
        let p = rho.populations();
        assert_abs_diff_eq!(p[0], 0.36, epsilon = 1e-12);
        assert_abs_diff_eq!(p[0b101000], 0.64, epsilon = 1e-12);
        // coherence decays by exp(-gamma tf w / 2), w = 2
        let expect = 0.48 * (-angular(1.0) * 4.0).exp();
        assert_abs_diff_eq!(rho.matrix()[(0, 0b101000)].norm(), expect, epsilon = 1e-12);
    }

    #[test]
    fn noisy_density_stays_physical() {
        let op = k4_prime_op();
        let s = SweepSchedule::experimental(PlatonicSolid::Tetrahedron);
        let rho = evolve_density(&StateVector::ground(6).unwrap(), &s, &NoiseModel::default(), &op, 0.01).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-6);
        assert!(rho.hermiticity_error() < 1e-8);
        assert!(rho.min_eigenvalue() > -1e-8);
    }

    #[test]
    fn density_guard_and_negative_rate() {
        assert!(matches!(
            DensityOperator::pure(&StateVector::ground(11).unwrap()),
            Err(Error::TooManyAtoms { .. })
        ));
        assert!(NoiseModel::new(-1.0, DephasingMode::Collective, 0.0, 0.0).is_err());
        assert!(NoiseModel::new(0.0, DephasingMode::Collective, 1.5, 0.0).is_err());
    }

    #[test]
    fn noiseless_trajectories_equal_pure() {
        let op = k4_prime_op();
        let s = SweepSchedule::experimental(PlatonicSolid::Tetrahedron);
        let init = StateVector::ground(6).unwrap();
        let step = StepControl::with_dt(0.01);
        let pure = evolve_pure(&init, &s, &op, &step).unwrap();
        let ens = evolve_trajectories(&init, &s, &NoiseModel::noiseless(), &op, &step, 3, 1).unwrap();
        for st in &ens.states {
            assert!(st.fidelity(&pure) > 1.0 - 1e-9);
        }
    }

    #[test]
    fn trajectories_are_seeded() {
        let op = k4_prime_op();
        let s = SweepSchedule::experimental(PlatonicSolid::Tetrahedron);
        let init = StateVector::ground(6).unwrap();
        let step = StepControl::with_dt(0.02);
        let a = evolve_trajectories(&init, &s, &NoiseModel::default(), &op, &step, 8, 42).unwrap();
        let b = evolve_trajectories(&init, &s, &NoiseModel::default(), &op, &step, 8, 42).unwrap();
        let c = evolve_trajectories(&init, &s, &NoiseModel::default(), &op, &step, 8, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.states, c.states);
        assert!(evolve_trajectories(&init, &s, &NoiseModel::default(), &op, &step, 0, 42).is_err());
    }

    #[test]
    fn dense_and_krylov_trajectories_agree() {
        // same seed, same kicks: only the propagator differs
        let op = k4_prime_op();
        let s = SweepSchedule::experimental(PlatonicSolid::Tetrahedron);
        let init = StateVector::ground(6).unwrap();
        let step = StepControl::with_dt(0.02);
        let noise = NoiseModel::new(angular(0.5), DephasingMode::PerAtom, 0.0, 0.0).unwrap();
        let grid = s.grid(step.dt).unwrap();
        let a = lockstep(&init, &s, &noise, &op, &grid, 4, 9).unwrap();
        let b = independent(&init, &s, &noise, &op, &step, &grid, 4, 9).unwrap();
        for (x, y) in a.iter().zip(&b) {
            let diff: f64 = x.iter().zip(y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-9, "{diff}");
        }
    }

    #[test]
    fn collective_kick_matches_density_factor_on_average() {
        // E[exp(-i phi (a - b))] = exp(-gamma tau (a - b)^2 / 2)
        let noise = NoiseModel::new(2.0, DephasingMode::Collective, 0.0, 0.0).unwrap();
        let mut kick = Kicks::new(5, 0, 2);
        let m = 40_000;
        let mut acc = C64::new(0.0, 0.0);
        for _ in 0..m {
            let mut psi = vec![C64::new(1.0, 0.0); 4];
            kick.apply(&noise, 0.1, &mut psi);
            acc += psi[3] * psi[0].conj();
        }
        acc /= m as f64;
        let expect = (-noise.dephasing_rate * 0.1 * noise.dephasing_weight(3, 0) / 2.0).exp();
        assert!((acc.re - expect).abs() < 0.01, "{acc} vs {expect}");
    }

    #[test]
    fn converged_variant_halves() {
        let g = platonic_graph(PlatonicSolid::Tetrahedron);
        let op = RydbergOperator::new(&Coupling::uniform(g, angular(3.9))).unwrap();
        let s = SweepSchedule::experimental(PlatonicSolid::Tetrahedron);
        let run = evolve_pure_converged(&StateVector::ground(4).unwrap(), &s, &op, &StepControl::with_dt(0.02), 1e-6, 6)
            .unwrap();
        assert!(run.infidelity <= 1e-6);
        assert!(run.dt < 0.02);
    }
}
