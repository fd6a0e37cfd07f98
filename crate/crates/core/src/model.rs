//! The charger–battery cell: two charger qubits C1, C2 and one battery qubit.
//!
//! Tensor order is fixed as (C1, C2, QB) with basis index
//! `b = 4·n_C1 + 2·n_C2 + n_QB`. The z-Pauli follows the convention
//! `σ_z|n⟩ = (−1)^{1−n}|n⟩`: `|1⟩` is the excited (+1) state and `|0⟩` costs
//! `−ħω` against the reference Hamiltonian. With that convention every drive
//! term conserves the total excitation number, and the whole protocol lives
//! in the span of `{|100⟩, |010⟩, |001⟩}` — the one-excitation sector.
//!
//! ħ = 1 throughout; energies are angular frequencies.

use crate::operator::{kron_all, OperatorMatrix, StateVector};
use crate::schedule::{ScheduleKind, SchedulePoint};
use crate::spectral::HamiltonianFamily;
use crate::{C64, Error, Result};

pub fn pauli_x() -> OperatorMatrix {
    OperatorMatrix::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).expect("static shape")
}

pub fn pauli_y() -> OperatorMatrix {
    OperatorMatrix::from_rows(
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, 0.0),
        ],
    )
    .expect("static shape")
}

/// `σ_z|n⟩ = (−1)^{1−n}|n⟩`, i.e. `diag(−1, +1)` in the `(|0⟩, |1⟩)` basis.
pub fn pauli_z() -> OperatorMatrix {
    OperatorMatrix::from_real_rows(2, &[-1.0, 0.0, 0.0, 1.0]).expect("static shape")
}

pub fn identity2() -> OperatorMatrix {
    OperatorMatrix::identity(2)
}

/// Working representation of the drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// Full three-qubit space, dimension 8.
    Full8,
    /// One-excitation block in basis order `(|100⟩, |010⟩, |001⟩)`.
    Sector3,
}

impl Space {
    pub fn dim(self) -> usize {
        match self {
            Space::Full8 => 8,
            Space::Sector3 => 3,
        }
    }
}

/// Basis indices of the one-excitation sector, in order
/// `(|100⟩, |010⟩, |001⟩)`.
pub const SECTOR_BASIS: [usize; 3] = [4, 2, 1];

/// Excitation-number blocks of the full space, used for block-diagonal
/// counter-diabatic assembly. Order inside each block mirrors the sector
/// convention.
pub const EXCITATION_BLOCKS: [&[usize]; 4] = [&[0], &[4, 2, 1], &[3, 5, 6], &[7]];

/// Drive parameters. `omega_drive` (Ω) sets the coupling scale of the three
/// Hamiltonian pieces; `omega_ref` (ω) sets the reference Hamiltonian that
/// defines stored energy. Both default to the same value so a figure axis in
/// units of Ω lines up with ergotropy in units of `2ħω`.
#[derive(Debug, Clone)]
pub struct DriveConfig {
    pub omega_drive: f64,
    pub omega_ref: f64,
    pub tau: f64,
    pub schedule: ScheduleKind,
    pub space: Space,
    /// Freeze `(f, g)` at `(1, 1)` for `t > τ` instead of continuing the
    /// interpolation analytically. Off by default: the always-on traces rely
    /// on the continuation.
    pub clamp_after_tau: bool,
}

impl DriveConfig {
    pub fn new(
        omega_drive: f64,
        omega_ref: f64,
        tau: f64,
        schedule: ScheduleKind,
        space: Space,
    ) -> Result<Self> {
        if !(omega_drive > 0.0) || !(omega_ref > 0.0) {
            return Err(Error::InvalidArgument {
                context: format!("energy scales must be positive: Ω={omega_drive}, ω={omega_ref}"),
            });
        }
        schedule.validate(tau)?;
        Ok(Self {
            omega_drive,
            omega_ref,
            tau,
            schedule,
            space,
            clamp_after_tau: false,
        })
    }

    /// Ω = ω = 1 in the sector representation.
    pub fn standard(tau: f64, schedule: ScheduleKind) -> Result<Self> {
        Self::new(1.0, 1.0, tau, schedule, Space::Sector3)
    }

    pub fn with_space(mut self, space: Space) -> Self {
        self.space = space;
        self
    }

    pub fn with_clamp(mut self, clamp: bool) -> Self {
        self.clamp_after_tau = clamp;
        self
    }

    /// Schedule values at `t`, honoring the clamp flag.
    pub fn schedule_at(&self, t: f64) -> SchedulePoint {
        if self.clamp_after_tau && t > self.tau {
            SchedulePoint {
                f: 1.0,
                g: 1.0,
                df: 0.0,
                dg: 0.0,
            }
        } else {
            self.schedule.eval(t, self.tau)
        }
    }
}

/// Storable energy capacities set by the reference Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyScales {
    /// `2ħω`: one qubit from `|0⟩` to `|1⟩`.
    pub e_max_qubit: f64,
    /// `4ħω = 2 · e_max_qubit`: the charger pair.
    pub e_max_cell: f64,
}

impl EnergyScales {
    pub fn from_config(config: &DriveConfig) -> Self {
        let q = 2.0 * config.omega_ref;
        Self {
            e_max_qubit: q,
            e_max_cell: 2.0 * q,
        }
    }
}

/// The three static 8×8 pieces of the drive at coupling `ħΩ`:
/// charger-internal hopping, charger→battery hopping, and the zz pinning
/// term whose ground pattern addresses the target state.
pub fn build_static_hamiltonians(
    config: &DriveConfig,
) -> (OperatorMatrix, OperatorMatrix, OperatorMatrix) {
    let (i, ii, iii) = build_static_hamiltonians_unit();
    let w = config.omega_drive;
    (i.scaled_re(w), ii.scaled_re(w), iii.scaled_re(w))
}

/// Static Hamiltonians at Ω = 1.
pub fn build_static_hamiltonians_unit() -> (OperatorMatrix, OperatorMatrix, OperatorMatrix) {
    let (sx, sy, sz, id) = (pauli_x(), pauli_y(), pauli_z(), identity2());
    let h_ini = &kron_all(&[&sx, &sx, &id]) + &kron_all(&[&sy, &sy, &id]);
    let h_inter = &kron_all(&[&id, &sx, &sx]) + &kron_all(&[&id, &sy, &sy]);
    let h_fin = &kron_all(&[&sz, &id, &sz]) + &kron_all(&[&id, &sz, &sz]);
    (h_ini, h_inter, h_fin)
}

/// Total excitation number `N̂ = Σ (1 + σ_z)/2`.
pub fn number_operator() -> OperatorMatrix {
    let half_up = &identity2() + &pauli_z();
    let half_up = half_up.scaled_re(0.5);
    let id = identity2();
    let a = kron_all(&[&half_up, &id, &id]);
    let b = kron_all(&[&id, &half_up, &id]);
    let c = kron_all(&[&id, &id, &half_up]);
    &(&a + &b) + &c
}

fn assemble(
    p: SchedulePoint,
    h_ini: &OperatorMatrix,
    h_inter: &OperatorMatrix,
    h_fin: &OperatorMatrix,
) -> OperatorMatrix {
    let a = h_ini.scaled_re(1.0 - p.f);
    let b = h_inter.scaled_re(p.f * (1.0 - p.f));
    let c = h_fin.scaled_re(p.g);
    &(&a + &b) + &c
}

fn assemble_dot(
    p: SchedulePoint,
    h_ini: &OperatorMatrix,
    h_inter: &OperatorMatrix,
    h_fin: &OperatorMatrix,
) -> OperatorMatrix {
    let a = h_ini.scaled_re(-p.df);
    let b = h_inter.scaled_re(p.df - 2.0 * p.f * p.df);
    let c = h_fin.scaled_re(p.dg);
    &(&a + &b) + &c
}

/// Drive Hamiltonian `H(t) = [1−f]H_ini + f[1−f]H_inter + g·H_fin` in the
/// configured space.
pub fn build_h_ad(t: f64, config: &DriveConfig) -> OperatorMatrix {
    Drive::new(config.clone()).expect("config validated at construction").hamiltonian(t)
}

/// Time derivative `Ḣ = −f′H_ini + (f′−2ff′)H_inter + g′H_fin`.
///
/// Errors with [`Error::SingularDerivative`] where the schedule derivative is
/// unbounded (cube-root at `t = 0`); callers use the first interior grid
/// point instead.
pub fn build_h_ad_dot(t: f64, config: &DriveConfig) -> Result<OperatorMatrix> {
    Drive::new(config.clone())?.hamiltonian_dot(t)
}

/// Singlet on the charger pair: `(|01⟩ − |10⟩)/√2`.
pub fn charger_singlet() -> StateVector {
    let c = 1.0 / f64::sqrt(2.0);
    StateVector::from_slice(&[
        C64::new(0.0, 0.0),
        C64::new(c, 0.0),
        C64::new(-c, 0.0),
        C64::new(0.0, 0.0),
    ])
    .expect("static shape")
}

/// Full-space initial state `|φ(0)⟩ = (|010⟩ − |100⟩)/√2`: charger singlet,
/// battery empty.
pub fn initial_state_full() -> StateVector {
    let c = 1.0 / f64::sqrt(2.0);
    let mut amps = vec![C64::new(0.0, 0.0); 8];
    amps[0b010] = C64::new(c, 0.0);
    amps[0b100] = C64::new(-c, 0.0);
    StateVector::from_slice(&amps).expect("static shape")
}

/// Initial state in the configured space.
pub fn initial_state(config: &DriveConfig) -> StateVector {
    match config.space {
        Space::Full8 => initial_state_full(),
        Space::Sector3 => sector_project_state(&initial_state_full()).expect("singlet is in-sector"),
    }
}

/// Target state `|001⟩`: charger empty, battery full.
pub fn target_state(config: &DriveConfig) -> StateVector {
    match config.space {
        Space::Full8 => StateVector::basis(8, 0b001),
        Space::Sector3 => StateVector::basis(3, 2),
    }
}

/// Reference Hamiltonians defining stored energy: `H₀ = ħω(σ_z ⊗ 1 + 1 ⊗ σ_z)`
/// on the charger cell and `H₀ = ħω σ_z` on the battery qubit.
pub fn reference_hamiltonians(config: &DriveConfig) -> (OperatorMatrix, OperatorMatrix) {
    let sz = pauli_z();
    let id = identity2();
    let cell = &kron_all(&[&sz, &id]) + &kron_all(&[&id, &sz]);
    (cell.scaled_re(config.omega_ref), sz.scaled_re(config.omega_ref))
}

/// Embed a sector state into the full space.
pub fn sector_embed_state(psi: &StateVector) -> Result<StateVector> {
    if psi.dim() != 3 {
        return Err(Error::DimensionMismatch {
            context: format!("sector state must have dim 3, got {}", psi.dim()),
        });
    }
    let mut amps = vec![C64::new(0.0, 0.0); 8];
    for (k, &b) in SECTOR_BASIS.iter().enumerate() {
        amps[b] = psi.data()[k];
    }
    StateVector::from_slice(&amps)
}

/// Project a full-space state onto the one-excitation sector.
///
/// Rejects states with more than `1e-10` total weight outside the sector.
pub fn sector_project_state(psi: &StateVector) -> Result<StateVector> {
    if psi.dim() != 8 {
        return Err(Error::DimensionMismatch {
            context: format!("full state must have dim 8, got {}", psi.dim()),
        });
    }
    let mut amps = [C64::new(0.0, 0.0); 3];
    let mut inside = 0.0;
    for (k, &b) in SECTOR_BASIS.iter().enumerate() {
        amps[k] = psi.data()[b];
        inside += amps[k].norm_sqr();
    }
    let total: f64 = psi.data().iter().map(|z| z.norm_sqr()).sum();
    let leak = total - inside;
    if leak > 1e-10 {
        return Err(Error::SectorLeakage { weight: leak });
    }
    StateVector::from_slice(&amps)
}

/// Embed a sector operator as the one-excitation block of a full-space
/// operator (zero elsewhere).
pub fn sector_embed_op(op: &OperatorMatrix) -> Result<OperatorMatrix> {
    if op.dim() != 3 {
        return Err(Error::DimensionMismatch {
            context: format!("sector operator must have dim 3, got {}", op.dim()),
        });
    }
    let mut out = OperatorMatrix::zeros(8).into_data();
    for (i, &bi) in SECTOR_BASIS.iter().enumerate() {
        for (j, &bj) in SECTOR_BASIS.iter().enumerate() {
            out[[bi, bj]] = op.data()[[i, j]];
        }
    }
    OperatorMatrix::new(out)
}

/// Extract the one-excitation block of a full-space operator.
///
/// The operator must not couple the sector to the rest of the space; any
/// such coupling beyond `1e-10` of the operator scale is reported as
/// leakage rather than silently discarded.
pub fn sector_project_op(op: &OperatorMatrix) -> Result<OperatorMatrix> {
    if op.dim() != 8 {
        return Err(Error::DimensionMismatch {
            context: format!("full operator must have dim 8, got {}", op.dim()),
        });
    }
    let in_sector = |b: usize| SECTOR_BASIS.contains(&b);
    let mut coupling: f64 = 0.0;
    for i in 0..8 {
        for j in 0..8 {
            if in_sector(i) != in_sector(j) {
                coupling = coupling.max(op.data()[[i, j]].norm());
            }
        }
    }
    if coupling > 1e-10 * op.scale() {
        return Err(Error::SectorLeakage { weight: coupling });
    }
    let mut out = OperatorMatrix::zeros(3).into_data();
    for (i, &bi) in SECTOR_BASIS.iter().enumerate() {
        for (j, &bj) in SECTOR_BASIS.iter().enumerate() {
            out[[i, j]] = op.data()[[bi, bj]];
        }
    }
    OperatorMatrix::new(out)
}

/// A configured drive with its static Hamiltonians cached in the working
/// space. Immutable after construction; share freely across workers.
#[derive(Debug, Clone)]
pub struct Drive {
    config: DriveConfig,
    h_ini: OperatorMatrix,
    h_inter: OperatorMatrix,
    h_fin: OperatorMatrix,
}

impl Drive {
    pub fn new(config: DriveConfig) -> Result<Self> {
        config.schedule.validate(config.tau)?;
        let (full_ini, full_inter, full_fin) = build_static_hamiltonians(&config);
        let (h_ini, h_inter, h_fin) = match config.space {
            Space::Full8 => (full_ini, full_inter, full_fin),
            Space::Sector3 => (
                sector_project_op(&full_ini)?,
                sector_project_op(&full_inter)?,
                sector_project_op(&full_fin)?,
            ),
        };
        Ok(Self {
            config,
            h_ini,
            h_inter,
            h_fin,
        })
    }

    pub fn standard(tau: f64, schedule: ScheduleKind) -> Result<Self> {
        Self::new(DriveConfig::standard(tau, schedule)?)
    }

    pub fn config(&self) -> &DriveConfig {
        &self.config
    }

    pub fn initial_state(&self) -> StateVector {
        initial_state(&self.config)
    }

    pub fn target_state(&self) -> StateVector {
        target_state(&self.config)
    }

    pub fn statics(&self) -> (&OperatorMatrix, &OperatorMatrix, &OperatorMatrix) {
        (&self.h_ini, &self.h_inter, &self.h_fin)
    }
}

impl HamiltonianFamily for Drive {
    fn dim(&self) -> usize {
        self.config.space.dim()
    }

    fn hamiltonian(&self, t: f64) -> OperatorMatrix {
        assemble(self.config.schedule_at(t), &self.h_ini, &self.h_inter, &self.h_fin)
    }

    fn hamiltonian_dot(&self, t: f64) -> Result<OperatorMatrix> {
        let p = self.config.schedule_at(t);
        if !(p.df.is_finite() && p.dg.is_finite()) {
            return Err(Error::SingularDerivative { t });
        }
        Ok(assemble_dot(p, &self.h_ini, &self.h_inter, &self.h_fin))
    }

    fn energy_scale(&self) -> f64 {
        self.config.omega_drive
    }

    fn time_scale(&self) -> f64 {
        self.config.tau
    }

    fn invariant_blocks(&self) -> Option<Vec<Vec<usize>>> {
        match self.config.space {
            Space::Full8 => Some(EXCITATION_BLOCKS.iter().map(|b| b.to_vec()).collect()),
            Space::Sector3 => None,
        }
    }

    fn schedule_variation(&self, a: f64, b: f64) -> f64 {
        if self.config.clamp_after_tau && a >= self.config.tau {
            return 0.0;
        }
        self.config.schedule.variation(a, b, self.config.tau, 4)
    }
}
