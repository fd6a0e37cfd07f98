//! Exact unitary propagation on a time grid, with battery observables
//! sampled along the way.
//!
//! Each step advances the state by `exp(−i H(t_mid) Δt)` — the exponential
//! midpoint rule, with the exponential taken exactly through the
//! eigendecomposition. Steps are refined internally wherever the schedule
//! moves faster than its per-step average (dyadic splitting), so schedules
//! with unbounded early slope (cube-root) converge at the same rate as
//! smooth ones. The outer grid is untouched by the refinement.

use crate::metrics;
use crate::model::{reference_hamiltonians, sector_embed_state, Drive, EnergyScales, Space};
use crate::operator::{expm_hermitian, partial_trace, OperatorMatrix, StateVector};
use crate::spectral::{
    build_h_tqd, frame_at, BlockFamily, HamiltonianFamily, SpectralFrame,
};
use crate::{tol, C64, Error, Result};

/// Default grid density: steps per interval of length τ. Chosen so the
/// midpoint-rule error sits far below every reported tolerance for
/// `Ωτ ≤ 20`.
pub const DEFAULT_STEPS_PER_TAU: usize = 2000;

/// Steps for a run of duration `t_end` at the default density.
pub fn default_steps(t_end: f64, tau: f64) -> usize {
    ((DEFAULT_STEPS_PER_TAU as f64) * (t_end / tau).max(1.0)).ceil() as usize
}

/// Which Hamiltonian drives the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    /// The bare drive `H(t)`; adiabatic only in the slow-τ limit.
    Adiabatic,
    /// The transitionless Hamiltonian `H(t) + H_cd(t)`.
    Tqd,
}

impl Driver {
    pub fn name(self) -> &'static str {
        match self {
            Driver::Adiabatic => "adiabatic",
            Driver::Tqd => "tqd",
        }
    }
}

/// Battery observables at one grid point. Ergotropy is reported as a
/// multiple of the single-qubit capacity `2ħω`; energies are raw (ħ = 1).
#[derive(Debug, Clone, Copy)]
pub struct SamplePoint {
    pub t: f64,
    pub ergotropy_qb: f64,
    pub fidelity_target: f64,
    pub fidelity_tracked: f64,
    pub energy_total: f64,
    pub energy_qb: f64,
}

/// Time grid, states, and samples of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub states: Vec<StateVector>,
    pub samples: Vec<SamplePoint>,
    /// Largest `|‖ψ‖ − 1|` seen at any grid point.
    pub norm_drift_max: f64,
    /// Smallest adjacent gap seen along the tracked frames.
    pub min_gap: f64,
    /// Number of midpoint substeps actually taken.
    pub substeps_total: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("nonempty trajectory")
    }

    pub fn final_sample(&self) -> &SamplePoint {
        self.samples.last().expect("nonempty trajectory")
    }

    /// Index of the first grid point at or after `t` (within grid rounding).
    pub fn index_at(&self, t: f64) -> Option<usize> {
        let eps = 1e-9 * self.grid.last().copied().unwrap_or(1.0).max(1.0);
        self.grid.iter().position(|&x| x >= t - eps)
    }
}

/// Bare propagation output, before battery sampling.
#[derive(Debug, Clone)]
pub struct RawTrajectory {
    pub grid: Vec<f64>,
    pub states: Vec<StateVector>,
    pub norm_drift_max: f64,
    pub substeps_total: usize,
}

fn split_step(
    family: &dyn HamiltonianFamily,
    a: f64,
    b: f64,
    v_target: f64,
    depth: usize,
    out: &mut Vec<(f64, f64)>,
) {
    if depth >= 48 || family.schedule_variation(a, b) <= 1.25 * v_target {
        out.push((a, b));
        return;
    }
    let mid = 0.5 * (a + b);
    split_step(family, a, mid, v_target, depth + 1, out);
    split_step(family, mid, b, v_target, depth + 1, out);
}

/// Propagate `psi0` under the family (plus the counter-diabatic term for
/// [`Driver::Tqd`]) over `steps` uniform intervals covering `[0, t_end]`.
pub fn evolve(
    family: &dyn HamiltonianFamily,
    psi0: &StateVector,
    driver: Driver,
    t_end: f64,
    steps: usize,
) -> Result<RawTrajectory> {
    if steps < 100 {
        return Err(Error::InvalidArgument {
            context: format!("steps must be at least 100, got {steps}"),
        });
    }
    if !(t_end > 0.0) {
        return Err(Error::InvalidArgument {
            context: format!("t_end must be positive, got {t_end}"),
        });
    }
    if psi0.dim() != family.dim() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "initial state dim {} vs family dim {}",
                psi0.dim(),
                family.dim()
            ),
        });
    }

    let dt = t_end / steps as f64;
    let total_variation: f64 = (0..steps)
        .map(|k| family.schedule_variation(k as f64 * dt, (k + 1) as f64 * dt))
        .sum();
    let v_target = (total_variation / steps as f64).max(1e-12);

    let mut psi = psi0.clone();
    let mut grid = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    grid.push(0.0);
    states.push(psi.clone());
    let mut norm_drift_max: f64 = (psi.norm() - 1.0).abs();
    let mut substeps_total = 0usize;
    let mut subs: Vec<(f64, f64)> = Vec::new();

    for k in 0..steps {
        let (t0, t1) = (k as f64 * dt, (k + 1) as f64 * dt);
        subs.clear();
        split_step(family, t0, t1, v_target, 0, &mut subs);
        substeps_total += subs.len();
        for &(a, b) in subs.iter() {
            let t_mid = 0.5 * (a + b);
            let h = match driver {
                Driver::Adiabatic => family.hamiltonian(t_mid),
                Driver::Tqd => build_h_tqd(family, t_mid)?,
            };
            let u = expm_hermitian(&h, C64::new(0.0, -(b - a)))?;
            psi = u.apply(&psi);
            let drift = (psi.norm() - 1.0).abs();
            if drift > tol::UNITARITY_TOL {
                return Err(Error::NumericalContract {
                    context: format!("norm drift {drift:.3e} at t = {t_mid:.6e}"),
                });
            }
            norm_drift_max = norm_drift_max.max(drift);
        }
        grid.push(t1);
        states.push(psi.clone());
    }

    Ok(RawTrajectory {
        grid,
        states,
        norm_drift_max,
        substeps_total,
    })
}

/// One battery readout from a state of the drive's working space.
#[derive(Debug, Clone)]
pub struct BatterySample {
    /// Ergotropy of the battery qubit in multiples of `2ħω`.
    pub ergotropy_qb: f64,
    /// `tr(ρ_QB H₀^QB)`.
    pub energy_qb: f64,
    pub rho_qb: OperatorMatrix,
}

/// Reduce a drive state to the battery qubit and score its ergotropy
/// against `H₀^QB = ħω σ_z`.
pub fn sample_battery(state: &StateVector, drive: &Drive) -> Result<BatterySample> {
    let full = match drive.config().space {
        Space::Full8 => state.clone(),
        Space::Sector3 => sector_embed_state(state)?,
    };
    let rho_qb = partial_trace(&full.projector(), 2, &[2, 2, 2])?;
    let (_, h0_qb) = reference_hamiltonians(drive.config());
    let scales = EnergyScales::from_config(drive.config());
    let result = metrics::ergotropy(&rho_qb, &h0_qb)?;
    Ok(BatterySample {
        ergotropy_qb: result.ergotropy / scales.e_max_qubit,
        energy_qb: result.internal_energy,
        rho_qb,
    })
}

/// The frame chain used for tracked-eigenstate fidelities. For the full
/// space the chain lives in the invariant block holding the initial state:
/// the one- and two-excitation blocks are exactly degenerate at every time,
/// so global eigenvectors there are arbitrary block mixtures.
struct TrackingContext<'a> {
    block: Option<BlockFamily<'a>>,
    level: usize,
    frame: Option<SpectralFrame>,
    min_gap: f64,
}

impl<'a> TrackingContext<'a> {
    fn new(drive: &'a Drive, psi0: &StateVector) -> Result<Self> {
        let block = match drive.invariant_blocks() {
            None => None,
            Some(blocks) => {
                let weight_in = |idx: &[usize]| -> f64 {
                    idx.iter().map(|&b| psi0.data()[b].norm_sqr()).sum()
                };
                let home = blocks
                    .into_iter()
                    .max_by(|a, b| {
                        weight_in(a)
                            .partial_cmp(&weight_in(b))
                            .unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .expect("at least one block");
                Some(BlockFamily::new(drive, home))
            }
        };
        Ok(Self {
            block,
            level: 0,
            frame: None,
            min_gap: f64::INFINITY,
        })
    }

    fn block_state(&self, psi: &StateVector) -> StateVector {
        match &self.block {
            None => psi.clone(),
            Some(b) => {
                let amps: Vec<C64> = b.indices().iter().map(|&i| psi.data()[i]).collect();
                StateVector::from_slice(&amps).expect("nonempty block")
            }
        }
    }

    fn family<'b>(&'b self, drive: &'b Drive) -> &'b dyn HamiltonianFamily {
        match &self.block {
            None => drive,
            Some(b) => b,
        }
    }

    /// Advance the chain to time `t` and return the tracked fidelity of
    /// `psi`.
    fn advance(&mut self, drive: &Drive, t: f64, psi: &StateVector) -> Result<f64> {
        let frame = frame_at(self.family(drive), t, self.frame.as_ref())?;
        self.min_gap = self.min_gap.min(frame.gap_min);
        let local = self.block_state(psi);
        if let Some(cont) = frame.continuation.as_ref() {
            self.level = cont
                .iter()
                .position(|&from| from == self.level)
                .ok_or(Error::TrackingAmbiguity { t })?;
        } else {
            // first frame: the tracked level is the one the state starts in
            let mut best = 0usize;
            let mut best_fid = -1.0;
            for lvl in 0..frame.energies.len() {
                let fid = frame.state(lvl).fidelity(&local);
                if fid > best_fid {
                    best_fid = fid;
                    best = lvl;
                }
            }
            self.level = best;
        }
        let fid = frame.state(self.level).fidelity(&local) / local.norm().powi(2).max(1e-300);
        self.frame = Some(frame);
        Ok(fid)
    }
}

/// Propagate the drive from its initial state and sample battery
/// observables at every grid point.
pub fn propagate(drive: &Drive, driver: Driver, t_end: f64, steps: usize) -> Result<Trajectory> {
    let psi0 = drive.initial_state();
    let raw = evolve(drive, &psi0, driver, t_end, steps)?;
    let target = drive.target_state();

    let mut tracking = TrackingContext::new(drive, &psi0)?;
    let mut samples = Vec::with_capacity(raw.grid.len());
    for (k, t) in raw.grid.iter().copied().enumerate() {
        let psi = &raw.states[k];
        let battery = sample_battery(psi, drive)?;
        let fidelity_tracked = tracking.advance(drive, t, psi)?;
        let h = drive.hamiltonian(t);
        samples.push(SamplePoint {
            t,
            ergotropy_qb: battery.ergotropy_qb,
            fidelity_target: target.fidelity(psi),
            fidelity_tracked,
            energy_total: h.expectation(psi).re,
            energy_qb: battery.energy_qb,
        });
    }

    Ok(Trajectory {
        grid: raw.grid,
        states: raw.states,
        samples,
        norm_drift_max: raw.norm_drift_max,
        min_gap: tracking.min_gap,
        substeps_total: raw.substeps_total,
    })
}

/// Idealized adiabatic reference: the trajectory whose state at every grid
/// point is the tracked instantaneous eigenstate itself (`ρ_ad`), rather
/// than a solution of the Schrödinger equation.
pub fn ideal_adiabatic_trajectory(drive: &Drive, t_end: f64, steps: usize) -> Result<Trajectory> {
    if steps < 100 {
        return Err(Error::InvalidArgument {
            context: format!("steps must be at least 100, got {steps}"),
        });
    }
    let psi0 = drive.initial_state();
    let target = drive.target_state();
    let mut tracking = TrackingContext::new(drive, &psi0)?;
    let dt = t_end / steps as f64;

    let mut grid = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut samples = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * dt;
        tracking.advance(drive, t, &psi0)?;
        let frame = tracking.frame.as_ref().expect("advanced");
        let local = frame.state(tracking.level);
        let psi = match &tracking.block {
            None => local,
            Some(b) => {
                let mut amps = vec![C64::new(0.0, 0.0); drive.dim()];
                for (i, &bi) in b.indices().iter().enumerate() {
                    amps[bi] = local.data()[i];
                }
                StateVector::from_slice(&amps)?
            }
        };
        let battery = sample_battery(&psi, drive)?;
        let h = drive.hamiltonian(t);
        samples.push(SamplePoint {
            t,
            ergotropy_qb: battery.ergotropy_qb,
            fidelity_target: target.fidelity(&psi),
            fidelity_tracked: 1.0,
            energy_total: h.expectation(&psi).re,
            energy_qb: battery.energy_qb,
        });
        grid.push(t);
        states.push(psi);
    }
    Ok(Trajectory {
        grid,
        states,
        samples,
        norm_drift_max: 0.0,
        min_gap: tracking.min_gap,
        substeps_total: 0,
    })
}

/// `|⟨ψ_a(t_end)|ψ_b(t_end)⟩|²` between two runs' final states.
pub fn final_state_fidelity<A, B>(a: &A, b: &B) -> f64
where
    A: EndsInState,
    B: EndsInState,
{
    a.final_state().fidelity(b.final_state())
}

/// Anything that ends in a state: lets the fidelity helper take either
/// trajectory flavor.
pub trait EndsInState {
    fn final_state(&self) -> &StateVector;
}

impl EndsInState for Trajectory {
    fn final_state(&self) -> &StateVector {
        Trajectory::final_state(self)
    }
}

impl EndsInState for RawTrajectory {
    fn final_state(&self) -> &StateVector {
        self.states.last().expect("nonempty trajectory")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sector_project_op, build_static_hamiltonians_unit, DriveConfig};
    use crate::schedule::ScheduleKind;
    use approx::assert_abs_diff_eq;

    struct ConstantFamily {
        h: OperatorMatrix,
    }

    impl HamiltonianFamily for ConstantFamily {
        fn dim(&self) -> usize {
            self.h.dim()
        }
        fn hamiltonian(&self, _t: f64) -> OperatorMatrix {
            self.h.clone()
        }
        fn hamiltonian_dot(&self, _t: f64) -> Result<OperatorMatrix> {
            Ok(OperatorMatrix::zeros(self.h.dim()))
        }
        fn energy_scale(&self) -> f64 {
            1.0
        }
        fn time_scale(&self) -> f64 {
            1.0
        }
    }

    fn sector_drive(kind: ScheduleKind, tau: f64) -> Drive {
        Drive::standard(tau, kind).unwrap()
    }

    #[test]
    fn constant_hamiltonian_gives_phase_only_evolution() {
        let (h_ini, _, _) = build_static_hamiltonians_unit();
        let fam = ConstantFamily {
            h: sector_project_op(&h_ini).unwrap(),
        };
        let drive = sector_drive(ScheduleKind::Linear, 1.0);
        let psi0 = drive.initial_state();
        let raw = evolve(&fam, &psi0, Driver::Adiabatic, 0.3, 128).unwrap();
        for psi in &raw.states {
            assert_abs_diff_eq!(psi0.fidelity(psi), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn norm_preserved_along_trajectory() {
        let drive = sector_drive(ScheduleKind::Sine, 5.0);
        let traj = propagate(&drive, Driver::Adiabatic, 15.0, 600).unwrap();
        for psi in &traj.states {
            assert!((psi.norm() - 1.0).abs() <= tol::STATE_NORM_TOL);
        }
        assert!(traj.norm_drift_max <= tol::STATE_NORM_TOL);
    }

    #[test]
    fn battery_starts_empty_and_target_is_full() {
        let drive = sector_drive(ScheduleKind::Linear, 1.0);
        let s0 = sample_battery(&drive.initial_state(), &drive).unwrap();
        assert_abs_diff_eq!(s0.ergotropy_qb, 0.0, epsilon = 1e-12);
        let s1 = sample_battery(&drive.target_state(), &drive).unwrap();
        assert_abs_diff_eq!(s1.ergotropy_qb, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tqd_midpoint_sample_matches_independent_rk4_oracle() {
        // integrate the same sector TQD dynamics with a plain RK4 stepper
        // that shares no code with the propagator, then compare the battery
        // ergotropy at τ/2
        let drive = sector_drive(ScheduleKind::Linear, 1.0);
        let traj = propagate(&drive, Driver::Tqd, 1.0, 1000).unwrap();
        let mid_idx = traj.index_at(0.5).unwrap();
        let got = traj.samples[mid_idx].ergotropy_qb;

        let n_steps = 20_000usize;
        let dt = 0.5 / n_steps as f64;
        let mut psi: Vec<C64> = drive.initial_state().data().to_vec();
        let rhs = |t: f64, v: &[C64]| -> Vec<C64> {
            let h = build_h_tqd(&drive, t).unwrap();
            let mut out = vec![C64::new(0.0, 0.0); 3];
            for r in 0..3 {
                for c in 0..3 {
                    out[r] += C64::new(0.0, -1.0) * h.data()[[r, c]] * v[c];
                }
            }
            out
        };
        for k in 0..n_steps {
            let t = k as f64 * dt;
            let k1 = rhs(t, &psi);
            let add = |v: &[C64], w: &[C64], s: f64| -> Vec<C64> {
                v.iter().zip(w).map(|(a, b)| a + b * s).collect()
            };
            let k2 = rhs(t + dt / 2.0, &add(&psi, &k1, dt / 2.0));
            let k3 = rhs(t + dt / 2.0, &add(&psi, &k2, dt / 2.0));
            let k4 = rhs(t + dt, &add(&psi, &k3, dt));
            for r in 0..3 {
                psi[r] += (k1[r] + (k2[r] + k3[r]) * 2.0 + k4[r]) * (dt / 6.0);
            }
        }
        let p = psi[2].norm_sqr();
        let want = (2.0 * p - 1.0).max(0.0);
        assert!(
            (got - want).abs() < 1e-6,
            "midpoint-rule {got} vs rk4 oracle {want}"
        );
    }

    #[test]
    fn tqd_tracks_instantaneous_eigenstate() {
        for kind in [ScheduleKind::Linear, ScheduleKind::CubeRoot] {
            let drive = sector_drive(kind, 1.0);
            let traj = propagate(&drive, Driver::Tqd, 1.0, 400).unwrap();
            let worst = traj
                .samples
                .iter()
                .map(|s| s.fidelity_tracked)
                .fold(1.0, f64::min);
            assert!(
                worst >= 1.0 - 1e-4,
                "{}: tracked fidelity {worst}",
                drive.config().schedule.name()
            );
        }
    }

    #[test]
    fn fast_adiabatic_fails_where_tqd_succeeds() {
        let drive = sector_drive(ScheduleKind::Linear, 0.1);
        let ad = propagate(&drive, Driver::Adiabatic, 0.1, 200).unwrap();
        let tqd = propagate(&drive, Driver::Tqd, 0.1, 200).unwrap();
        assert!(ad.final_sample().fidelity_target < 0.5);
        assert!(tqd.final_sample().fidelity_target >= 0.999);
    }

    #[test]
    fn full_and_sector_propagation_agree() {
        let config = DriveConfig::standard(2.0, ScheduleKind::Linear).unwrap();
        let sec = Drive::new(config.clone()).unwrap();
        let full = Drive::new(config.with_space(Space::Full8)).unwrap();
        let t_sec = propagate(&sec, Driver::Adiabatic, 2.0, 400).unwrap();
        let t_full = propagate(&full, Driver::Adiabatic, 2.0, 400).unwrap();
        for (a, b) in t_sec.states.iter().zip(t_full.states.iter()) {
            let emb = sector_embed_state(a).unwrap();
            assert!(emb.fidelity(b) >= 1.0 - 1e-8);
        }
        // sector confinement of the full-space run
        for psi in &t_full.states {
            let outside: f64 = psi
                .data()
                .iter()
                .enumerate()
                .filter(|(b, _)| ![4usize, 2, 1].contains(b))
                .map(|(_, z)| z.norm_sqr())
                .sum();
            assert!(outside <= 1e-10);
        }
    }

    #[test]
    fn step_doubling_converges_at_default_resolution() {
        let drive = sector_drive(ScheduleKind::Linear, 5.0);
        let a = propagate(&drive, Driver::Adiabatic, 5.0, 2000).unwrap();
        let b = propagate(&drive, Driver::Adiabatic, 5.0, 4000).unwrap();
        let delta = (1.0 - final_state_fidelity(&a, &b)).abs();
        assert!(delta < 1e-8, "doubling delta {delta:.3e}");
    }

    #[test]
    fn midpoint_rule_is_second_order() {
        // final-state error against a fine reference falls ~Δt² over a
        // decade of step counts
        let drive = sector_drive(ScheduleKind::Linear, 2.0);
        let reference = propagate(&drive, Driver::Adiabatic, 2.0, 64_000).unwrap();
        let err_of = |steps: usize| -> f64 {
            let t = propagate(&drive, Driver::Adiabatic, 2.0, steps).unwrap();
            t.final_state()
                .data()
                .iter()
                .zip(reference.final_state().data().iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
        };
        let e1 = err_of(500);
        let e2 = err_of(5000);
        let slope = (e1 / e2).log10();
        assert!(
            slope > 1.6 && slope < 2.4,
            "order slope {slope} (errors {e1:.3e} → {e2:.3e})"
        );
    }

    #[test]
    fn ideal_adiabatic_reaches_target_exactly() {
        let drive = sector_drive(ScheduleKind::CubeRoot, 1.0);
        let traj = ideal_adiabatic_trajectory(&drive, 1.0, 200).unwrap();
        assert_abs_diff_eq!(traj.final_sample().fidelity_target, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(traj.final_sample().ergotropy_qb, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn rejects_too_few_steps() {
        let drive = sector_drive(ScheduleKind::Linear, 1.0);
        assert!(matches!(
            propagate(&drive, Driver::Adiabatic, 1.0, 50),
            Err(Error::InvalidArgument { .. })
        ));
    }

    #[test]
    fn tqd_aborts_with_diagnostic_on_exact_degeneracy() {
        // an odd step count over [0, 2τ] puts a midpoint exactly on t = τ,
        // where the two upper levels meet; the counter-diabatic build must
        // refuse there and name the offending time
        let drive = sector_drive(ScheduleKind::Linear, 1.0);
        match propagate(&drive, Driver::Tqd, 2.0, 201) {
            Err(Error::Degeneracy { t, .. }) => {
                assert!((t - 1.0).abs() < 1e-9, "diagnostic at t = {t}")
            }
            other => panic!("expected a degeneracy abort, got {other:?}"),
        }
        // the bare driver is untouched by the crossing
        assert!(propagate(&drive, Driver::Adiabatic, 2.0, 201).is_ok());
    }
}
