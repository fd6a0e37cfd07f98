//! Gauge-tracked instantaneous eigensystems of a time-dependent Hamiltonian,
//! eigenstate time-derivatives, and the counter-diabatic construction.
//!
//! Eigenvectors of adjacent time points are matched by maximal overlap (never
//! by index, so level crossings don't scramble the labeling) and phase-fixed
//! so consecutive overlaps are real and positive. The counter-diabatic term
//!
//! `H_cd(t) = iħ Σ_n |ṅ⟩⟨n| + ⟨ṅ|n⟩ |n⟩⟨n|`
//!
//! is assembled from those derivatives; adding it to the drive gives the
//! transitionless Hamiltonian `H_tqd = H + H_cd`.
//!
//! The full three-qubit space carries an exact two-fold degeneracy between
//! the one- and two-excitation blocks at every time, so full-space assembly
//! always proceeds block by block ([`HamiltonianFamily::invariant_blocks`]);
//! the sum over levels is only taken inside a block, where the spectrum is
//! simple.

use ndarray::Array2;

use crate::operator::{hermitian_eig, OperatorMatrix, StateVector};
use crate::{tol, C64, Error, Result};

/// A time-dependent Hermitian family `t ↦ H(t)`.
pub trait HamiltonianFamily: Sync {
    fn dim(&self) -> usize;

    fn hamiltonian(&self, t: f64) -> OperatorMatrix;

    /// Analytic `dH/dt`. Errors where the derivative does not exist.
    fn hamiltonian_dot(&self, t: f64) -> Result<OperatorMatrix>;

    /// Characteristic energy (ħΩ) used for degeneracy classification.
    fn energy_scale(&self) -> f64;

    /// Characteristic duration (τ) used for finite-difference stencils.
    fn time_scale(&self) -> f64;

    /// Index groups of exactly conserved blocks, when the family is
    /// block-diagonal in a known symmetry. Spectral sums then run per block.
    fn invariant_blocks(&self) -> Option<Vec<Vec<usize>>> {
        None
    }

    /// How much the Hamiltonian shape changes over `[a, b]`, in arbitrary
    /// monotone units. Drives the propagator's substep refinement. The
    /// default probes `‖H(t') − H(t)‖_HS` over four subintervals.
    fn schedule_variation(&self, a: f64, b: f64) -> f64 {
        let scale = self.energy_scale().max(f64::MIN_POSITIVE);
        let mut acc = 0.0;
        let mut prev = self.hamiltonian(a);
        for k in 1..=4 {
            let t = a + (b - a) * (k as f64) / 4.0;
            let cur = self.hamiltonian(t);
            acc += crate::operator::hs_norm(&(&cur - &prev)) / scale;
            prev = cur;
        }
        acc
    }
}

/// A view of one invariant block of a larger family.
pub struct BlockFamily<'a> {
    base: &'a dyn HamiltonianFamily,
    indices: Vec<usize>,
}

impl<'a> BlockFamily<'a> {
    pub fn new(base: &'a dyn HamiltonianFamily, indices: Vec<usize>) -> Self {
        Self { base, indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    fn restrict(&self, op: &OperatorMatrix) -> OperatorMatrix {
        let n = self.indices.len();
        let mut out = Array2::zeros((n, n));
        for (i, &bi) in self.indices.iter().enumerate() {
            for (j, &bj) in self.indices.iter().enumerate() {
                out[[i, j]] = op.data()[[bi, bj]];
            }
        }
        OperatorMatrix::new(out).expect("square by construction")
    }
}

impl HamiltonianFamily for BlockFamily<'_> {
    fn dim(&self) -> usize {
        self.indices.len()
    }

    fn hamiltonian(&self, t: f64) -> OperatorMatrix {
        self.restrict(&self.base.hamiltonian(t))
    }

    fn hamiltonian_dot(&self, t: f64) -> Result<OperatorMatrix> {
        Ok(self.restrict(&self.base.hamiltonian_dot(t)?))
    }

    fn energy_scale(&self) -> f64 {
        self.base.energy_scale()
    }

    fn time_scale(&self) -> f64 {
        self.base.time_scale()
    }

    fn schedule_variation(&self, a: f64, b: f64) -> f64 {
        self.base.schedule_variation(a, b)
    }
}

/// Instantaneous eigensystem at one time, gauge-fixed.
#[derive(Debug, Clone)]
pub struct SpectralFrame {
    pub t: f64,
    /// Ascending eigenvalues.
    pub energies: Vec<f64>,
    /// Matching orthonormal eigenvectors as columns.
    pub states: OperatorMatrix,
    /// Smallest adjacent gap.
    pub gap_min: f64,
    /// Set when `gap_min` falls below the degeneracy tolerance; spectral
    /// sums through such a frame are unreliable unless taken block-wise.
    pub near_degenerate: bool,
    /// `continuation[k]` is the index in the previous frame that column `k`
    /// continues, when the frame was aligned against one.
    pub continuation: Option<Vec<usize>>,
}

impl SpectralFrame {
    pub fn state(&self, level: usize) -> StateVector {
        StateVector::new(self.states.data().column(level).to_owned()).expect("nonempty column")
    }
}

/// How eigenstate time-derivatives are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMethod {
    /// Central stencil on gauge-aligned frames at `t ± δ` (one-sided at the
    /// front boundary). Width `δ = 1e-6·τ`, shrunk near `t = 0` so the
    /// stencil stays inside the domain.
    FiniteDifference,
    /// `|ṅ⟩ = Σ_{m≠n} |m⟩⟨m|Ḣ|n⟩/(E_n−E_m)`; needs the analytic `Ḣ` and a
    /// simple spectrum.
    OffDiagonal,
}

/// Eigenstate velocities at one frame: `|ṅ⟩` per level and the
/// gauge-invariant `μ_n = ⟨ṅ|ṅ⟩ − |⟨n|ṅ⟩|²`.
#[derive(Debug, Clone)]
pub struct FlowDerivatives {
    /// Columns are `|ṅ(t)⟩`, ordered like the frame's levels.
    pub state_dots: OperatorMatrix,
    pub mu: Vec<f64>,
}

fn gap_tolerance(family: &dyn HamiltonianFamily) -> f64 {
    tol::GAP_TOL_FACTOR * family.energy_scale()
}

struct Matching {
    /// `perm[i]` is the raw-column index matched to reference column `i`.
    perm: Vec<usize>,
    /// Phase to multiply raw column `perm[i]` by, aligning it to reference
    /// column `i`.
    phases: Vec<C64>,
}

/// Maximal-overlap assignment of raw eigenvector columns to reference
/// columns, with phases making each matched overlap real positive.
///
/// Ambiguous matches (two candidates above the overlap floor) are tolerated
/// only where a degenerate cluster makes the basis choice physically empty:
/// either the candidates are mutually degenerate now, or the reference
/// column sat inside a degenerate cluster of its own frame (its basis was
/// already arbitrary — this happens one step after passing an exact
/// crossing).
fn match_columns(
    reference: &OperatorMatrix,
    ref_energies: Option<&[f64]>,
    vals: &[f64],
    vecs: &OperatorMatrix,
    gap_tol: f64,
    t: f64,
) -> Result<Matching> {
    let n = reference.dim();
    let mut overlap = vec![vec![C64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..n {
                acc += reference.data()[[r, i]].conj() * vecs.data()[[r, j]];
            }
            overlap[i][j] = acc;
        }
    }

    let degenerate_pair = |a: usize, b: usize| (vals[a] - vals[b]).abs() < gap_tol;
    let ref_in_cluster = |i: usize| -> bool {
        ref_energies
            .map(|es| (0..n).any(|k| k != i && (es[k] - es[i]).abs() < gap_tol))
            .unwrap_or(false)
    };

    // greedy assignment on |overlap|, largest first
    let mut order: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .collect();
    order.sort_by(|&(ia, ja), &(ib, jb)| {
        overlap[ib][jb]
            .norm()
            .partial_cmp(&overlap[ia][ja].norm())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut perm = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (i, j) in order {
        if perm[i] == usize::MAX && !taken[j] {
            perm[i] = j;
            taken[j] = true;
        }
    }

    for i in 0..n {
        let j = perm[i];
        let candidates: Vec<usize> = (0..n)
            .filter(|&k| overlap[i][k].norm() > tol::TRACKING_OVERLAP_MIN)
            .collect();
        let cluster_ok = candidates.iter().all(|&k| k == j || degenerate_pair(k, j));
        if candidates.len() > 1 && !cluster_ok && !ref_in_cluster(i) {
            return Err(Error::TrackingAmbiguity { t });
        }
        let matched = overlap[i][j].norm();
        let in_cluster = (0..n).any(|k| k != j && degenerate_pair(k, j));
        if matched <= tol::TRACKING_OVERLAP_MIN && !in_cluster && !ref_in_cluster(i) {
            return Err(Error::TrackingAmbiguity { t });
        }
    }

    let phases = (0..n)
        .map(|i| {
            let ov = overlap[i][perm[i]];
            if ov.norm() > 1e-300 {
                ov.conj() / ov.norm()
            } else {
                C64::new(1.0, 0.0)
            }
        })
        .collect();
    Ok(Matching { perm, phases })
}

fn min_adjacent_gap(vals: &[f64]) -> f64 {
    vals.windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

/// Instantaneous eigensystem of `H(t)`, ascending, gauge-fixed.
///
/// With `prev` given, each column's phase is rotated so its overlap with the
/// matching previous column is real positive, and the matching is recorded
/// in [`SpectralFrame::continuation`]. Without `prev`, the phase makes each
/// column's largest-magnitude component real positive.
pub fn frame_at(
    family: &dyn HamiltonianFamily,
    t: f64,
    prev: Option<&SpectralFrame>,
) -> Result<SpectralFrame> {
    let h = family.hamiltonian(t);
    let (vals, vecs) = hermitian_eig(&h)?;
    let gap_tol = gap_tolerance(family);
    let gap_min = min_adjacent_gap(&vals);
    let mut states = vecs.into_data();
    let continuation = match prev {
        Some(p) => {
            let raw = OperatorMatrix::new(states.clone())?;
            let m = match_columns(&p.states, Some(&p.energies), &vals, &raw, gap_tol, t)?;
            // phases are keyed by reference index; apply to the matched raw
            // column, keeping ascending (raw) column order
            for (i, &j) in m.perm.iter().enumerate() {
                let phase = m.phases[i];
                states.column_mut(j).mapv_inplace(|z| z * phase);
            }
            // continuation[k] = reference index that raw column k continues
            let mut cont = vec![usize::MAX; m.perm.len()];
            for (i, &j) in m.perm.iter().enumerate() {
                cont[j] = i;
            }
            Some(cont)
        }
        None => {
            let n = states.nrows();
            for k in 0..n {
                let mut best = 0usize;
                let mut best_mag = -1.0;
                for r in 0..n {
                    let mag = states[[r, k]].norm();
                    if mag > best_mag {
                        best_mag = mag;
                        best = r;
                    }
                }
                let pivot = states[[best, k]];
                if pivot.norm() > 1e-300 {
                    let phase = pivot.conj() / pivot.norm();
                    states.column_mut(k).mapv_inplace(|z| z * phase);
                }
            }
            None
        }
    };
    Ok(SpectralFrame {
        t,
        energies: vals.clone(),
        states: OperatorMatrix::new(states)?,
        gap_min,
        near_degenerate: gap_min < gap_tol,
        continuation,
    })
}

/// Frame at `t ± delta` with columns re-ordered and re-phased to line up
/// with `center`'s columns.
fn aligned_neighbor(
    family: &dyn HamiltonianFamily,
    center: &SpectralFrame,
    t: f64,
) -> Result<OperatorMatrix> {
    let h = family.hamiltonian(t);
    let (vals, vecs) = hermitian_eig(&h)?;
    let m = match_columns(
        &center.states,
        Some(&center.energies),
        &vals,
        &vecs,
        gap_tolerance(family),
        t,
    )?;
    let n = center.states.dim();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        let j = m.perm[i];
        for r in 0..n {
            out[[r, i]] = vecs.data()[[r, j]] * m.phases[i];
        }
    }
    OperatorMatrix::new(out)
}

/// Eigenstate time-derivatives and `μ_n` at a frame.
///
/// The two methods agree to about `1e-5` relative wherever both are valid;
/// the tests use them as each other's oracle.
pub fn eigenstate_derivative(
    family: &dyn HamiltonianFamily,
    frame: &SpectralFrame,
    method: DerivativeMethod,
) -> Result<FlowDerivatives> {
    let n = frame.states.dim();
    let state_dots = match method {
        DerivativeMethod::FiniteDifference => {
            let base = tol::FD_DELTA_FACTOR * family.time_scale();
            let t = frame.t;
            // Inside the front boundary layer the stencil is ill-conditioned
            // for schedules with unbounded early slope; the analytic
            // off-diagonal route is exact there, so prefer it whenever the
            // derivative exists and the spectrum is simple.
            if t > 0.0 && t < tol::FD_BOUNDARY_LAYER * family.time_scale() {
                if let Ok(d) = eigenstate_derivative(family, frame, DerivativeMethod::OffDiagonal)
                {
                    return Ok(d);
                }
            }
            // shrink the stencil near the front boundary so samples stay at
            // nonnegative times where the family is defined
            let delta = if t >= 2.0 * base {
                base
            } else if t > 0.0 {
                (t / 2.0).max(1e-10 * family.time_scale())
            } else {
                base
            };
            if t - delta < 0.0 {
                // second-order forward stencil
                let v1 = aligned_neighbor(family, frame, t + delta)?;
                let v2 = aligned_neighbor(family, frame, t + 2.0 * delta)?;
                let mut dots = Array2::zeros((n, n));
                for r in 0..n {
                    for c in 0..n {
                        dots[[r, c]] = (-3.0 * frame.states.data()[[r, c]]
                            + 4.0 * v1.data()[[r, c]]
                            - v2.data()[[r, c]])
                            / (2.0 * delta);
                    }
                }
                OperatorMatrix::new(dots)?
            } else {
                let plus = aligned_neighbor(family, frame, t + delta)?;
                let minus = aligned_neighbor(family, frame, t - delta)?;
                (&plus - &minus).scaled_re(1.0 / (2.0 * delta))
            }
        }
        DerivativeMethod::OffDiagonal => {
            let hdot = family.hamiltonian_dot(frame.t)?;
            let gap_tol = gap_tolerance(family);
            for a in 0..n {
                for b in (a + 1)..n {
                    let gap = (frame.energies[a] - frame.energies[b]).abs();
                    if gap < gap_tol {
                        return Err(Error::Degeneracy {
                            t: frame.t,
                            gap,
                            tolerance: gap_tol,
                        });
                    }
                }
            }
            // G = V† Ḣ V, then |ṅ⟩ = Σ_{m≠n} V_m G_{mn}/(E_n − E_m)
            let g = frame.states.adjoint().matmul(&hdot).matmul(&frame.states);
            let mut dots = Array2::zeros((n, n));
            for lvl in 0..n {
                for m_idx in 0..n {
                    if m_idx == lvl {
                        continue;
                    }
                    let coeff = g.data()[[m_idx, lvl]]
                        / (frame.energies[lvl] - frame.energies[m_idx]);
                    for r in 0..n {
                        dots[[r, lvl]] += frame.states.data()[[r, m_idx]] * coeff;
                    }
                }
            }
            OperatorMatrix::new(dots)?
        }
    };

    let mut mu = Vec::with_capacity(n);
    for lvl in 0..n {
        let mut dot_sq = 0.0;
        let mut n_dot = C64::new(0.0, 0.0);
        for r in 0..n {
            let d = state_dots.data()[[r, lvl]];
            dot_sq += d.norm_sqr();
            n_dot += frame.states.data()[[r, lvl]].conj() * d;
        }
        mu.push(dot_sq - n_dot.norm_sqr());
    }
    Ok(FlowDerivatives { state_dots, mu })
}

/// Raw counter-diabatic assembly `iħ Σ_n (|ṅ⟩⟨n| + ⟨ṅ|n⟩|n⟩⟨n|)` from a
/// frame and its derivatives. Hermitian up to the derivative error; the
/// physics is gauge-covariant, so frames with any phase convention give the
/// same operator.
pub fn assemble_h_cd(frame: &SpectralFrame, derivs: &FlowDerivatives) -> OperatorMatrix {
    let n = frame.states.dim();
    let mut out = Array2::<C64>::zeros((n, n));
    let i_unit = C64::new(0.0, 1.0);
    for lvl in 0..n {
        // ⟨ṅ|n⟩
        let mut dot_n = C64::new(0.0, 0.0);
        for r in 0..n {
            dot_n += derivs.state_dots.data()[[r, lvl]].conj() * frame.states.data()[[r, lvl]];
        }
        for r in 0..n {
            for c in 0..n {
                let ket_bra = derivs.state_dots.data()[[r, lvl]]
                    * frame.states.data()[[c, lvl]].conj();
                let proj = frame.states.data()[[r, lvl]] * frame.states.data()[[c, lvl]].conj();
                out[[r, c]] += i_unit * (ket_bra + dot_n * proj);
            }
        }
    }
    OperatorMatrix::new(out).expect("square by construction")
}

fn h_cd_single_block(
    family: &dyn HamiltonianFamily,
    t: f64,
    method: DerivativeMethod,
) -> Result<OperatorMatrix> {
    // a locally constant Hamiltonian needs no counter-diabatic term, even
    // where its spectrum is degenerate (clamped drives past τ)
    if let Ok(hdot) = family.hamiltonian_dot(t) {
        if hdot.max_abs() == 0.0 {
            return Ok(OperatorMatrix::zeros(family.dim()));
        }
    }
    let frame = frame_at(family, t, None)?;
    let gap_tol = gap_tolerance(family);
    if frame.gap_min < gap_tol {
        return Err(Error::Degeneracy {
            t,
            gap: frame.gap_min,
            tolerance: gap_tol,
        });
    }
    let derivs = eigenstate_derivative(family, &frame, method)?;
    let raw = assemble_h_cd(&frame, &derivs);
    let dev = raw.hermiticity_deviation();
    let bound = tol::HCD_ASSEMBLY_GATE * raw.scale();
    if dev > bound {
        return Err(Error::NumericalContract {
            context: format!("counter-diabatic assembly asymmetric: {dev:.3e} > {bound:.3e} at t={t}"),
        });
    }
    Ok(raw.hermitize())
}

/// Counter-diabatic Hamiltonian at `t`, finite-difference derivatives.
pub fn build_h_cd(family: &dyn HamiltonianFamily, t: f64) -> Result<OperatorMatrix> {
    build_h_cd_with(family, t, DerivativeMethod::FiniteDifference)
}

/// Counter-diabatic Hamiltonian with an explicit derivative method.
///
/// Families with invariant blocks are assembled block by block; degenerate
/// levels inside a single working block are an error, never silently gauged.
pub fn build_h_cd_with(
    family: &dyn HamiltonianFamily,
    t: f64,
    method: DerivativeMethod,
) -> Result<OperatorMatrix> {
    match family.invariant_blocks() {
        None => h_cd_single_block(family, t, method),
        Some(blocks) => {
            let mut out = Array2::<C64>::zeros((family.dim(), family.dim()));
            for block in blocks {
                if block.len() < 2 {
                    continue; // a single level contributes no counter-diabatic term
                }
                let sub = BlockFamily::new(family, block.clone());
                let h_sub = h_cd_single_block(&sub, t, method)?;
                for (i, &bi) in block.iter().enumerate() {
                    for (j, &bj) in block.iter().enumerate() {
                        out[[bi, bj]] = h_sub.data()[[i, j]];
                    }
                }
            }
            OperatorMatrix::new(out)
        }
    }
}

/// Transitionless Hamiltonian `H_tqd(t) = H(t) + H_cd(t)`.
pub fn build_h_tqd(family: &dyn HamiltonianFamily, t: f64) -> Result<OperatorMatrix> {
    let h = family.hamiltonian(t);
    let h_cd = build_h_cd(family, t)?;
    Ok(&h + &h_cd)
}

/// Squared-energy and eigenstate-velocity sums that enter the driving-cost
/// integrands, taken block-wise where the family has invariant blocks.
pub fn spectral_weights(family: &dyn HamiltonianFamily, t: f64) -> Result<(f64, f64)> {
    let blocks = family
        .invariant_blocks()
        .unwrap_or_else(|| vec![(0..family.dim()).collect()]);
    let mut e2_sum = 0.0;
    let mut mu_sum = 0.0;
    for block in blocks {
        if block.len() == 1 {
            let h = family.hamiltonian(t);
            let e = h.data()[[block[0], block[0]]].re;
            e2_sum += e * e;
            continue;
        }
        let sub = BlockFamily::new(family, block);
        let frame = frame_at(&sub, t, None)?;
        let gap_tol = gap_tolerance(family);
        if frame.gap_min < gap_tol {
            return Err(Error::Degeneracy {
                t,
                gap: frame.gap_min,
                tolerance: gap_tol,
            });
        }
        let derivs = eigenstate_derivative(&sub, &frame, DerivativeMethod::FiniteDifference)?;
        e2_sum += frame.energies.iter().map(|e| e * e).sum::<f64>();
        mu_sum += derivs.mu.iter().map(|&m| m.max(0.0)).sum::<f64>();
    }
    Ok((e2_sum, mu_sum))
}

/// Chain of gauge-aligned frames along a strictly increasing grid.
pub fn track_frames(family: &dyn HamiltonianFamily, grid: &[f64]) -> Result<Vec<SpectralFrame>> {
    let mut frames: Vec<SpectralFrame> = Vec::with_capacity(grid.len());
    for &t in grid {
        let frame = frame_at(family, t, frames.last())?;
        frames.push(frame);
    }
    Ok(frames)
}

/// Follow one level through a frame chain: returns the column index of the
/// tracked level in each frame.
pub fn follow_level(frames: &[SpectralFrame], level_at_start: usize) -> Result<Vec<usize>> {
    let mut indices = Vec::with_capacity(frames.len());
    let mut current = level_at_start;
    for (k, frame) in frames.iter().enumerate() {
        if k > 0 {
            let cont = frame.continuation.as_ref().ok_or_else(|| Error::NumericalContract {
                context: "frame chain missing continuation data".into(),
            })?;
            current = cont
                .iter()
                .position(|&from| from == current)
                .ok_or(Error::TrackingAmbiguity { t: frame.t })?;
        }
        indices.push(current);
    }
    Ok(indices)
}

/// Projector onto the eigenstate that continues `level` (an index at
/// `t = 0`) up to time `t`, tracked along gauge-aligned frames. The
/// adiabatic phase cancels in the projector, so none is propagated.
pub fn adiabatic_reference(
    family: &dyn HamiltonianFamily,
    t: f64,
    level: usize,
) -> Result<OperatorMatrix> {
    if level >= family.dim() {
        return Err(Error::InvalidArgument {
            context: format!("level {level} out of range for dim {}", family.dim()),
        });
    }
    if t < 0.0 {
        return Err(Error::InvalidArgument {
            context: format!("reference time must be nonnegative, got {t}"),
        });
    }
    if t == 0.0 {
        let frame = frame_at(family, 0.0, None)?;
        return Ok(frame.state(level).projector());
    }
    let mut points = 256usize.max((256.0 * t / family.time_scale()).ceil() as usize);
    for _ in 0..4 {
        let grid: Vec<f64> = (0..=points)
            .map(|k| t * (k as f64) / (points as f64))
            .collect();
        match track_frames(family, &grid).and_then(|frames| {
            let path = follow_level(&frames, level)?;
            Ok(frames.last().unwrap().state(*path.last().unwrap()).projector())
        }) {
            Ok(p) => return Ok(p),
            Err(Error::TrackingAmbiguity { .. }) => points *= 4,
            Err(e) => return Err(e),
        }
    }
    Err(Error::TrackingAmbiguity { t })
}
