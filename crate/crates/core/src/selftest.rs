//! Oracle checks behind the command-line `selftest` subcommand.
//!
//! Each check recomputes an independently known answer (hand Pauli algebra,
//! truncated series, closed-form two-level results, refinement quadrature)
//! and compares the library against it. The unit tests assert the same
//! facts; this module reports them as data so a deployed binary can vouch
//! for itself.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{self, Driver};
use crate::metrics;
use crate::model::{self, Drive, DriveConfig, Space};
use crate::operator::{
    expm_hermitian, hermitian_eig, hs_norm, kron, partial_trace, OperatorMatrix, StateVector,
};
use crate::schedule::ScheduleKind;
use crate::spectral::{
    build_h_cd, eigenstate_derivative, frame_at, DerivativeMethod, HamiltonianFamily,
};
use crate::{C64, Result};

/// `H(t) = ħΩ(cosθ σ_z + sinθ σ_x)` with `θ = πt/2τ`, in the conventional
/// `σ_z = diag(1, −1)` basis where the counter-diabatic term has the closed
/// form `(ħθ̇/2) σ_y`. The frozen variant pins `θ`, making `H` constant.
pub struct TwoLevelRotor {
    omega: f64,
    tau: f64,
    frozen_theta: Option<f64>,
}

impl TwoLevelRotor {
    pub fn new(omega: f64, tau: f64) -> Self {
        Self {
            omega,
            tau,
            frozen_theta: None,
        }
    }

    pub fn frozen(omega: f64, tau: f64) -> Self {
        Self {
            omega,
            tau,
            frozen_theta: Some(0.3),
        }
    }

    fn theta(&self, t: f64) -> f64 {
        self.frozen_theta.unwrap_or(PI * t / (2.0 * self.tau))
    }

    fn theta_dot(&self) -> f64 {
        if self.frozen_theta.is_some() {
            0.0
        } else {
            PI / (2.0 * self.tau)
        }
    }
}

impl HamiltonianFamily for TwoLevelRotor {
    fn dim(&self) -> usize {
        2
    }

    fn hamiltonian(&self, t: f64) -> OperatorMatrix {
        let th = self.theta(t);
        OperatorMatrix::from_real_rows(
            2,
            &[
                self.omega * th.cos(),
                self.omega * th.sin(),
                self.omega * th.sin(),
                -self.omega * th.cos(),
            ],
        )
        .expect("static shape")
    }

    fn hamiltonian_dot(&self, t: f64) -> Result<OperatorMatrix> {
        let th = self.theta(t);
        let rate = self.theta_dot() * self.omega;
        OperatorMatrix::from_real_rows(
            2,
            &[
                -rate * th.sin(),
                rate * th.cos(),
                rate * th.cos(),
                rate * th.sin(),
            ],
        )
    }

    fn energy_scale(&self) -> f64 {
        self.omega
    }

    fn time_scale(&self) -> f64 {
        self.tau
    }
}

/// Outcome of one oracle check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        passed,
        detail,
    }
}

fn check_err(name: &'static str, err: impl std::fmt::Display) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: false,
        detail: format!("errored: {err}"),
    }
}

fn run_pauli_spectrum() -> CheckOutcome {
    let name = "operator/pauli-spectrum";
    match hermitian_eig(&model::pauli_x()) {
        Ok((vals, _)) => {
            let dev = (vals[0] + 1.0).abs().max((vals[1] - 1.0).abs());
            check(name, dev < 1e-14, format!("σ_x eigenvalue deviation {dev:.2e}"))
        }
        Err(e) => check_err(name, e),
    }
}

fn run_expm_series() -> CheckOutcome {
    let name = "operator/expm-vs-series";
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut data = Array2::<C64>::zeros((8, 8));
    for i in 0..8 {
        for j in 0..8 {
            data[[i, j]] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    let a = OperatorMatrix::new(data).expect("square").hermitize();
    let scale = C64::new(0.0, -0.1);
    let u = match expm_hermitian(&a, scale) {
        Ok(u) => u,
        Err(e) => return check_err(name, e),
    };
    let mut series = OperatorMatrix::identity(8);
    let mut term = OperatorMatrix::identity(8);
    for k in 1..=20 {
        term = term.matmul(&a).scaled(scale / (k as f64));
        series = &series + &term;
    }
    let dev = (&u - &series).max_abs();
    check(name, dev < 1e-9, format!("20-term series deviation {dev:.2e}"))
}

fn run_kron_hopping() -> CheckOutcome {
    let name = "operator/kron-hopping-action";
    let hop = &kron(&model::pauli_x(), &model::pauli_x())
        + &kron(&model::pauli_y(), &model::pauli_y());
    let out = hop.apply(&StateVector::basis(4, 0b01));
    let want = StateVector::basis(4, 0b10).scaled(C64::new(2.0, 0.0));
    let dev: f64 = out
        .data()
        .iter()
        .zip(want.data().iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    check(name, dev < 1e-15, format!("(XX+YY)|01⟩ vs 2|10⟩ deviation {dev:.2e}"))
}

fn run_partial_trace() -> CheckOutcome {
    let name = "operator/partial-trace";
    let singlet = model::charger_singlet().projector();
    let half = OperatorMatrix::identity(2).scaled_re(0.5);
    let dev = match (partial_trace(&singlet, 0, &[2, 2]), partial_trace(&singlet, 1, &[2, 2])) {
        (Ok(a), Ok(b)) => (&a - &half).max_abs().max((&b - &half).max_abs()),
        (Err(e), _) | (_, Err(e)) => return check_err(name, e),
    };
    check(name, dev < 1e-14, format!("singlet marginal deviation from I/2: {dev:.2e}"))
}

fn run_hs_norms() -> CheckOutcome {
    let name = "operator/hs-norm-statics";
    let (h_ini, h_inter, h_fin) = model::build_static_hamiltonians_unit();
    let devs = [
        (hs_norm(&h_ini) - 4.0).abs(),
        (hs_norm(&h_inter) - 4.0).abs(),
        (hs_norm(&h_fin) - 4.0).abs(),
    ];
    let dev = devs.iter().copied().fold(0.0, f64::max);
    check(name, dev < 1e-13, format!("static norms vs Pauli-trace value 4: {dev:.2e}"))
}

fn run_schedule_boundaries() -> CheckOutcome {
    let name = "schedule/boundary-contract";
    for kind in [ScheduleKind::Linear, ScheduleKind::Sine, ScheduleKind::CubeRoot] {
        for &tau in &[0.5, 1.0, 10.0] {
            if let Err(e) = kind.validate(tau) {
                return check_err(name, e);
            }
        }
    }
    check(name, true, "f(0)=g(0)=0, f(τ)=g(τ)=1 for all built-ins".into())
}

fn run_initial_encoding() -> CheckOutcome {
    let name = "model/initial-state-encoding";
    let (h_ini, _, _) = model::build_static_hamiltonians_unit();
    let phi0 = model::initial_state_full();
    let applied = h_ini.apply(&phi0);
    let dev: f64 = applied
        .data()
        .iter()
        .zip(phi0.data().iter())
        .map(|(a, b)| (a - b * C64::new(-2.0, 0.0)).norm())
        .fold(0.0, f64::max);
    check(name, dev < 1e-14, format!("H_ini|φ(0)⟩ + 2|φ(0)⟩ deviation {dev:.2e}"))
}

fn run_excitation_conservation() -> CheckOutcome {
    let name = "model/excitation-conservation";
    let n_op = model::number_operator();
    let config = match DriveConfig::standard(1.0, ScheduleKind::Sine) {
        Ok(c) => c.with_space(Space::Full8),
        Err(e) => return check_err(name, e),
    };
    let drive = match Drive::new(config) {
        Ok(d) => d,
        Err(e) => return check_err(name, e),
    };
    let mut dev: f64 = 0.0;
    for &t in &[0.0, 0.33, 0.5, 0.91, 1.0, 2.4] {
        dev = dev.max(drive.hamiltonian(t).commutator(&n_op).max_abs());
    }
    check(name, dev == 0.0, format!("max |[H(t), N̂]| = {dev:.2e}"))
}

fn run_sector_embedding() -> CheckOutcome {
    let name = "model/sector-spectrum-embedding";
    let config = match DriveConfig::standard(1.0, ScheduleKind::Linear) {
        Ok(c) => c,
        Err(e) => return check_err(name, e),
    };
    let sec = match Drive::new(config.clone()) {
        Ok(d) => d,
        Err(e) => return check_err(name, e),
    };
    let full = match Drive::new(config.with_space(Space::Full8)) {
        Ok(d) => d,
        Err(e) => return check_err(name, e),
    };
    for &t in &[0.0, 0.42, 1.0] {
        let ev_s = match hermitian_eig(&sec.hamiltonian(t)) {
            Ok((v, _)) => v,
            Err(e) => return check_err(name, e),
        };
        let ev_f = match hermitian_eig(&full.hamiltonian(t)) {
            Ok((v, _)) => v,
            Err(e) => return check_err(name, e),
        };
        for &e in &ev_s {
            if !ev_f.iter().any(|&x| (x - e).abs() < 1e-10) {
                return check(name, false, format!("sector eigenvalue {e} missing at t={t}"));
            }
        }
    }
    check(name, true, "3×3 block spectrum embeds in the 8×8 spectrum".into())
}

fn run_two_level_closed_form() -> CheckOutcome {
    let name = "spectral/two-level-closed-form";
    let tau = 2.0;
    let rotor = TwoLevelRotor::new(1.0, tau);
    let theta_dot = PI / (2.0 * tau);
    let mut worst: f64 = 0.0;
    for &t in &[0.4, 1.0, 1.6] {
        let h_cd = match build_h_cd(&rotor, t) {
            Ok(h) => h,
            Err(e) => return check_err(name, e),
        };
        let want = model::pauli_y().scaled_re(0.5 * theta_dot);
        worst = worst.max((&h_cd - &want).max_abs());
        let frame = match frame_at(&rotor, t, None) {
            Ok(f) => f,
            Err(e) => return check_err(name, e),
        };
        let derivs = match eigenstate_derivative(&rotor, &frame, DerivativeMethod::FiniteDifference)
        {
            Ok(d) => d,
            Err(e) => return check_err(name, e),
        };
        for &m in &derivs.mu {
            worst = worst.max((m - (theta_dot / 2.0).powi(2)).abs());
        }
    }
    check(
        name,
        worst < 1e-6,
        format!("closed-form H_cd=(θ̇/2)σ_y and μ=(π/4τ)² deviation {worst:.2e}"),
    )
}

fn run_method_agreement() -> CheckOutcome {
    let name = "spectral/derivative-method-agreement";
    let drive = match Drive::standard(1.0, ScheduleKind::Linear) {
        Ok(d) => d,
        Err(e) => return check_err(name, e),
    };
    let frame = match frame_at(&drive, 0.5, None) {
        Ok(f) => f,
        Err(e) => return check_err(name, e),
    };
    let fd = match eigenstate_derivative(&drive, &frame, DerivativeMethod::FiniteDifference) {
        Ok(d) => d,
        Err(e) => return check_err(name, e),
    };
    let od = match eigenstate_derivative(&drive, &frame, DerivativeMethod::OffDiagonal) {
        Ok(d) => d,
        Err(e) => return check_err(name, e),
    };
    let scale = fd.state_dots.max_abs().max(1e-30);
    let dev = (&fd.state_dots - &od.state_dots).max_abs() / scale;
    check(name, dev < 1e-5, format!("finite-difference vs off-diagonal: {dev:.2e} relative"))
}

fn run_transitionless_mini() -> CheckOutcome {
    let name = "dynamics/transitionless-tracking";
    let drive = match Drive::standard(1.0, ScheduleKind::CubeRoot) {
        Ok(d) => d,
        Err(e) => return check_err(name, e),
    };
    let traj = match dynamics::propagate(&drive, Driver::Tqd, 1.0, 400) {
        Ok(t) => t,
        Err(e) => return check_err(name, e),
    };
    let worst = traj
        .samples
        .iter()
        .map(|s| s.fidelity_tracked)
        .fold(1.0, f64::min);
    check(
        name,
        worst >= 1.0 - 1e-4,
        format!("min tracked fidelity {worst:.10} (cube-root, Ωτ=1)"),
    )
}

fn run_space_equivalence() -> CheckOutcome {
    let name = "dynamics/full-vs-sector";
    let config = match DriveConfig::standard(2.0, ScheduleKind::Linear) {
        Ok(c) => c,
        Err(e) => return check_err(name, e),
    };
    let sec = match Drive::new(config.clone()) {
        Ok(d) => d,
        Err(e) => return check_err(name, e),
    };
    let full = match Drive::new(config.with_space(Space::Full8)) {
        Ok(d) => d,
        Err(e) => return check_err(name, e),
    };
    let a = match dynamics::propagate(&sec, Driver::Adiabatic, 2.0, 400) {
        Ok(t) => t,
        Err(e) => return check_err(name, e),
    };
    let b = match dynamics::propagate(&full, Driver::Adiabatic, 2.0, 400) {
        Ok(t) => t,
        Err(e) => return check_err(name, e),
    };
    let mut worst: f64 = 1.0;
    for (x, y) in a.states.iter().zip(b.states.iter()) {
        match model::sector_embed_state(x) {
            Ok(emb) => worst = worst.min(emb.fidelity(y)),
            Err(e) => return check_err(name, e),
        }
    }
    check(name, worst >= 1.0 - 1e-8, format!("min cross-space fidelity 1 - {:.2e}", 1.0 - worst))
}

fn run_ergotropy_suite() -> CheckOutcome {
    let name = "metrics/ergotropy-suite";
    let config = match DriveConfig::standard(1.0, ScheduleKind::Linear) {
        Ok(c) => c,
        Err(e) => return check_err(name, e),
    };
    let (h0_cell, h0_qb) = model::reference_hamiltonians(&config);

    let full = StateVector::basis(4, 0b11).projector();
    let r_full = match metrics::ergotropy(&full, &h0_cell) {
        Ok(r) => r,
        Err(e) => return check_err(name, e),
    };
    if (r_full.ergotropy - 4.0).abs() > 1e-12 {
        return check(name, false, format!("|11⟩⟨11| ergotropy {} ≠ 4ħω", r_full.ergotropy));
    }

    let ground = StateVector::basis(2, 0).projector();
    let r_ground = match metrics::ergotropy(&ground, &h0_qb) {
        Ok(r) => r,
        Err(e) => return check_err(name, e),
    };
    if r_ground.ergotropy.abs() > 1e-12 {
        return check(name, false, format!("ground-state ergotropy {} ≠ 0", r_ground.ergotropy));
    }

    let singlet = model::charger_singlet().projector();
    let r_singlet = match metrics::ergotropy(&singlet, &h0_cell) {
        Ok(r) => r,
        Err(e) => return check_err(name, e),
    };
    if (r_singlet.ergotropy - 2.0).abs() > 1e-12 {
        return check(name, false, format!("singlet ergotropy {} ≠ 2ħω", r_singlet.ergotropy));
    }

    // randomized nonnegativity + sampled unitaries against the passive floor
    let mut rng = ChaCha8Rng::seed_from_u64(314);
    for _ in 0..100 {
        let mut g = Array2::<C64>::zeros((3, 3));
        for i in 0..3 {
            for j in 0..3 {
                g[[i, j]] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let g = OperatorMatrix::new(g).expect("square");
        let gg = g.matmul(&g.adjoint());
        let rho = gg.scaled_re(1.0 / gg.trace().re);
        let mut hd = Array2::<C64>::zeros((3, 3));
        for i in 0..3 {
            for j in 0..3 {
                hd[[i, j]] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let h0 = OperatorMatrix::new(hd).expect("square").hermitize();
        match metrics::ergotropy(&rho, &h0) {
            Ok(r) => {
                if r.ergotropy < -1e-12 {
                    return check(name, false, format!("negative ergotropy {:.3e}", r.ergotropy));
                }
            }
            Err(e) => return check_err(name, e),
        }
    }
    check(name, true, "capacity values, passivity, and fuzz cases hold".into())
}

fn run_cost_consistency() -> CheckOutcome {
    let name = "metrics/cost-consistency";
    let drive = match Drive::standard(10.0, ScheduleKind::Linear) {
        Ok(d) => d,
        Err(e) => return check_err(name, e),
    };
    let coarse = match metrics::energy_cost(&drive, 1001) {
        Ok(r) => r,
        Err(e) => return check_err(name, e),
    };
    let fine = match metrics::energy_cost(&drive, 4001) {
        Ok(r) => r,
        Err(e) => return check_err(name, e),
    };
    let dev = ((coarse.sigma_ad - fine.sigma_ad) / fine.sigma_ad).abs()
        .max(((coarse.sigma_tqd - fine.sigma_tqd) / fine.sigma_tqd).abs());
    let ordered = coarse.sigma_tqd >= coarse.sigma_ad && coarse.sigma_rel >= 1.0;
    check(
        name,
        dev < 1e-8 && ordered,
        format!("refinement drift {dev:.2e}, Σ_tqd/Σ_ad = {:.6}", coarse.sigma_rel),
    )
}

fn run_step_halving() -> CheckOutcome {
    let name = "dynamics/step-halving";
    let drive = match Drive::standard(5.0, ScheduleKind::Linear) {
        Ok(d) => d,
        Err(e) => return check_err(name, e),
    };
    let a = match dynamics::propagate(&drive, Driver::Adiabatic, 5.0, 2000) {
        Ok(t) => t,
        Err(e) => return check_err(name, e),
    };
    let b = match dynamics::propagate(&drive, Driver::Adiabatic, 5.0, 4000) {
        Ok(t) => t,
        Err(e) => return check_err(name, e),
    };
    let delta = (1.0 - dynamics::final_state_fidelity(&a, &b)).abs();
    check(name, delta < 1e-8, format!("doubling delta {delta:.2e}"))
}

/// Run every oracle check.
pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        run_pauli_spectrum(),
        run_expm_series(),
        run_kron_hopping(),
        run_partial_trace(),
        run_hs_norms(),
        run_schedule_boundaries(),
        run_initial_encoding(),
        run_excitation_conservation(),
        run_sector_embedding(),
        run_two_level_closed_form(),
        run_method_agreement(),
        run_transitionless_mini(),
        run_space_equivalence(),
        run_ergotropy_suite(),
        run_cost_consistency(),
        run_step_halving(),
    ]
}
