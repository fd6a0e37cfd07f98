//! Ergotropy, local-stability coefficient, and driving-cost functionals.
//!
//! Ergotropy is the work a unitary can extract from a state against a
//! reference Hamiltonian: pair the state's populations (descending) with the
//! energy levels (ascending) to get the passive energy `𝒰₀`, and subtract it
//! from the internal energy `𝒰 = tr(ρH₀)`. The same number falls out of a
//! double sum over populations and levels; both routes are computed and must
//! agree, which catches sorting and convention slips at run time.

use crate::dynamics::Trajectory;
use crate::operator::{hermitian_eig, hs_norm, OperatorMatrix};
use crate::spectral::{spectral_weights, HamiltonianFamily};
use crate::model::Drive;
use crate::{tol, C64, Error, Result};

/// Ergotropy decomposition of one state.
#[derive(Debug, Clone)]
pub struct ErgotropyResult {
    /// Extractable work `ℰ = 𝒰 − 𝒰₀ ≥ 0`.
    pub ergotropy: f64,
    /// `𝒰 = tr(ρ H₀)`.
    pub internal_energy: f64,
    /// Passive energy `𝒰₀`: populations descending against levels ascending.
    pub passive_energy: f64,
    /// The optimal extraction unitary `V = Σ_n |ε_n⟩⟨ϱ_n|`, when requested.
    pub extracting_unitary: Option<OperatorMatrix>,
}

fn ergotropy_impl(
    rho: &OperatorMatrix,
    h0: &OperatorMatrix,
    want_unitary: bool,
) -> Result<ErgotropyResult> {
    if rho.dim() != h0.dim() {
        return Err(Error::DimensionMismatch {
            context: format!("state dim {} vs reference dim {}", rho.dim(), h0.dim()),
        });
    }
    rho.check_hermitian().map_err(|e| Error::NotDensity {
        reason: e.to_string(),
    })?;
    let trace = rho.trace();
    if (trace - C64::new(1.0, 0.0)).norm() > tol::DENSITY_TRACE_TOL {
        return Err(Error::NotDensity {
            reason: format!("trace {trace} differs from 1"),
        });
    }
    let (pop_asc, rho_vecs) = hermitian_eig(rho)?;
    if pop_asc[0] < tol::DENSITY_EIG_FLOOR {
        return Err(Error::NotDensity {
            reason: format!("negative population {:.3e}", pop_asc[0]),
        });
    }
    let (levels, h0_vecs) = hermitian_eig(h0)?;
    let dim = rho.dim();

    // populations descending: reverse the ascending solver order
    let pops: Vec<f64> = pop_asc.iter().rev().copied().collect();
    let pop_col = |n: usize| dim - 1 - n; // column of the n-th descending population

    let internal_energy = rho.matmul(h0).trace().re;
    let passive_energy: f64 = pops.iter().zip(levels.iter()).map(|(p, e)| p * e).sum();
    let ergotropy = internal_energy - passive_energy;

    // independent double-sum route: Σ_{i,n} ϱ_n ε_i (|⟨ϱ_n|ε_i⟩|² − δ_{ni})
    let mut double_sum = 0.0;
    for n in 0..dim {
        for i in 0..dim {
            let mut ov = C64::new(0.0, 0.0);
            for r in 0..dim {
                ov += rho_vecs.data()[[r, pop_col(n)]].conj() * h0_vecs.data()[[r, i]];
            }
            let delta = if n == i { 1.0 } else { 0.0 };
            double_sum += pops[n] * levels[i] * (ov.norm_sqr() - delta);
        }
    }
    let bound = tol::ERGOTROPY_CROSSCHECK_TOL * h0.scale();
    if (double_sum - ergotropy).abs() > bound {
        return Err(Error::NumericalContract {
            context: format!(
                "ergotropy routes disagree: sorted-spectra {ergotropy:.12e} vs double-sum {double_sum:.12e}"
            ),
        });
    }

    let extracting_unitary = want_unitary.then(|| {
        // V = Σ_n |ε_n⟩⟨ϱ_n| maps the n-th descending population onto the
        // n-th ascending level
        let mut v = OperatorMatrix::zeros(dim).into_data();
        for n in 0..dim {
            for r in 0..dim {
                for c in 0..dim {
                    v[[r, c]] += h0_vecs.data()[[r, n]] * rho_vecs.data()[[c, pop_col(n)]].conj();
                }
            }
        }
        OperatorMatrix::new(v).expect("square by construction")
    });

    Ok(ErgotropyResult {
        ergotropy,
        internal_energy,
        passive_energy,
        extracting_unitary,
    })
}

/// Ergotropy of `rho` against the reference Hamiltonian `h0`.
pub fn ergotropy(rho: &OperatorMatrix, h0: &OperatorMatrix) -> Result<ErgotropyResult> {
    ergotropy_impl(rho, h0, false)
}

/// Like [`ergotropy`], also returning the optimal extraction unitary.
pub fn ergotropy_with_extractor(
    rho: &OperatorMatrix,
    h0: &OperatorMatrix,
) -> Result<ErgotropyResult> {
    ergotropy_impl(rho, h0, true)
}

/// Which capacity normalizes the local-stability coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityNormalization {
    /// The qubit capacity `2ħω` (the trajectory's ergotropy unit).
    EMaxQubit,
    /// The trajectory's own late-time plateau: mean ergotropy over the final
    /// tenth of the window.
    Asymptotic,
}

/// Local-stability profile of a trajectory past its charging time.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub tau_c: f64,
    /// Offsets `Δt = t − τ_c` of the profiled points.
    pub offsets: Vec<f64>,
    /// `η_ls(Δt) = |ℰ_ref − ℰ(τ_c+Δt)| / normalization`, clipped to [0, 1].
    pub eta: Vec<f64>,
    pub eta_max: f64,
    pub eta_mean: f64,
    /// The reference charge level (in capacity multiples).
    pub reference: f64,
    /// The normalizing capacity (in capacity multiples).
    pub normalization: f64,
}

/// Score energy backflow after the charging time `τ_c` under an always-on
/// coupling: zero means the charge never dips below the reference.
pub fn local_stability(
    traj: &Trajectory,
    tau_c: f64,
    normalization: StabilityNormalization,
) -> Result<StabilityReport> {
    let eps = 1e-9 * tau_c.abs().max(1.0);
    let window: Vec<&crate::dynamics::SamplePoint> = traj
        .samples
        .iter()
        .filter(|s| s.t >= tau_c - eps)
        .collect();
    if window.is_empty() {
        return Err(Error::EmptyWindow {
            context: format!(
                "trajectory ends at {:.6e}, before tau_c = {tau_c:.6e}",
                traj.grid.last().copied().unwrap_or(0.0)
            ),
        });
    }
    let (reference, norm) = match normalization {
        StabilityNormalization::EMaxQubit => (1.0, 1.0),
        StabilityNormalization::Asymptotic => {
            let tail_start = window.len() - (window.len() / 10).max(1);
            let tail = &window[tail_start..];
            let asy = tail.iter().map(|s| s.ergotropy_qb).sum::<f64>() / tail.len() as f64;
            if asy <= 0.0 {
                return Err(Error::InvalidArgument {
                    context: "asymptotic normalization vanished: trajectory holds no late charge"
                        .into(),
                });
            }
            (asy, asy)
        }
    };
    let mut offsets = Vec::with_capacity(window.len());
    let mut eta = Vec::with_capacity(window.len());
    for s in &window {
        offsets.push(s.t - tau_c);
        let e = ((reference - s.ergotropy_qb).abs() / norm).clamp(0.0, 1.0);
        eta.push(e);
    }
    let eta_max = eta.iter().copied().fold(0.0, f64::max);
    let eta_mean = eta.iter().sum::<f64>() / eta.len() as f64;
    Ok(StabilityReport {
        tau_c,
        offsets,
        eta,
        eta_max,
        eta_mean,
        reference,
        normalization: norm,
    })
}

/// Default composite-Simpson node count for the cost integrals; refinement
/// checks hold the induced error under `1e-8` relative.
pub const DEFAULT_QUAD_POINTS: usize = 1001;

/// Driving cost of one configuration, in multiples of ħΩ.
#[derive(Debug, Clone, Copy)]
pub struct CostReport {
    pub omega_tau: f64,
    /// Time-averaged Hilbert–Schmidt norm of the bare drive.
    pub sigma_ad: f64,
    /// Same for the transitionless drive; the counter-diabatic term adds
    /// `ħ²μ_n` under the square root.
    pub sigma_tqd: f64,
    /// `Σ_tqd / Σ_ad ≥ 1`.
    pub sigma_rel: f64,
    pub quad_points: usize,
}

/// Composite-Simpson cost integrals over `[0, τ]`.
///
/// Integrand samples next to the interval ends are shifted inward (the
/// spectrum is exactly degenerate at `t = τ` and the cube-root schedule
/// derivative is unbounded at `t = 0`); both integrands continue boundedly
/// for the covered schedules, so the shift stays below the quadrature
/// target.
pub fn energy_cost(drive: &Drive, quad_points: usize) -> Result<CostReport> {
    if quad_points < 3 || quad_points % 2 == 0 {
        return Err(Error::InvalidArgument {
            context: format!("quad_points must be odd and at least 3, got {quad_points}"),
        });
    }
    let tau = drive.time_scale();
    let omega = drive.energy_scale();
    let h = tau / (quad_points - 1) as f64;

    let mut f_ad = Vec::with_capacity(quad_points);
    let mut f_tqd = Vec::with_capacity(quad_points);
    let mut f_hs = Vec::with_capacity(quad_points);
    for i in 0..quad_points {
        let t_node = h * i as f64;
        let mut shift = tol::COST_EDGE_FACTOR * tau;
        let (e2, mu) = loop {
            let t_eval = t_node.clamp(shift, tau - shift);
            match spectral_weights(drive, t_eval) {
                Ok(pair) => break pair,
                Err(Error::Degeneracy { .. }) if shift < 1e-3 * tau => {
                    shift *= 10.0;
                }
                Err(e) => return Err(e),
            }
        };
        let t_eval = t_node.clamp(shift, tau - shift);
        f_ad.push(e2.sqrt());
        f_tqd.push((e2 + mu).sqrt());
        f_hs.push(hs_norm(&drive.hamiltonian(t_eval)));
    }

    let simpson = |y: &[f64]| -> f64 {
        let n = y.len();
        let mut acc = y[0] + y[n - 1];
        for (i, &v) in y.iter().enumerate().take(n - 1).skip(1) {
            acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        acc * h / 3.0
    };

    let sigma_ad = simpson(&f_ad) / tau;
    let sigma_tqd = simpson(&f_tqd) / tau;
    let sigma_hs = simpson(&f_hs) / tau;
    let dev = (sigma_ad - sigma_hs).abs();
    if dev > tol::QUADRATURE_REL_TARGET * sigma_ad.max(1e-300) {
        return Err(Error::NumericalContract {
            context: format!(
                "spectral and Hilbert–Schmidt cost routes disagree: {sigma_ad:.12e} vs {sigma_hs:.12e}"
            ),
        });
    }

    Ok(CostReport {
        omega_tau: omega * tau,
        sigma_ad: sigma_ad / omega,
        sigma_tqd: sigma_tqd / omega,
        sigma_rel: sigma_tqd / sigma_ad,
        quad_points,
    })
}
