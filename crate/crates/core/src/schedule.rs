//! Interpolation functions shaping the drive between its three static parts.
//!
//! A schedule is the pair `(f, g)` with `f(0) = g(0) = 0` and
//! `f(τ) = g(τ) = 1`. Values past `τ` are the analytic continuations — the
//! charger stays coupled in the always-on regime, so no clamping happens
//! here. A clamp-at-τ comparison mode lives on
//! [`crate::model::DriveConfig`].

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use crate::{tol, Error, Result};

/// Callable pair `(f, g)` with analytic derivatives, for user-supplied
/// schedules.
pub struct CustomSchedule {
    pub name: String,
    pub f: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub g: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub df: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub dg: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSchedule").field("name", &self.name).finish()
    }
}

/// Built-in and user-supplied interpolation schedules.
#[derive(Debug, Clone)]
pub enum ScheduleKind {
    /// `f = g = t/τ`.
    Linear,
    /// `f = g = sin(πt/2τ)`.
    Sine,
    /// `f = (t/τ)^{1/3}`, `g = t/τ`. The cube-root rise hands the system to
    /// the final Hamiltonian early and keeps it there for large `t`.
    CubeRoot,
    Custom(Arc<CustomSchedule>),
}

/// One evaluation of a schedule: values and derivatives at a single time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulePoint {
    pub f: f64,
    pub g: f64,
    /// `df/dt`; `+∞` sentinel for the cube-root schedule at `t = 0`, where
    /// the derivative is unbounded.
    pub df: f64,
    pub dg: f64,
}

impl ScheduleKind {
    pub fn name(&self) -> &str {
        match self {
            ScheduleKind::Linear => "linear",
            ScheduleKind::Sine => "sine",
            ScheduleKind::CubeRoot => "cube-root",
            ScheduleKind::Custom(c) => &c.name,
        }
    }

    /// Check the boundary contract at `t = 0` and `t = τ`.
    pub fn validate(&self, tau: f64) -> Result<()> {
        if !(tau > 0.0) {
            return Err(Error::InvalidArgument {
                context: format!("tau must be positive, got {tau}"),
            });
        }
        let start = self.eval(0.0, tau);
        let end = self.eval(tau, tau);
        let t = tol::SCHEDULE_BOUNDARY_TOL;
        for (what, got, want) in [
            ("f(0)", start.f, 0.0),
            ("g(0)", start.g, 0.0),
            ("f(tau)", end.f, 1.0),
            ("g(tau)", end.g, 1.0),
        ] {
            if (got - want).abs() > t {
                return Err(Error::ScheduleBoundary {
                    context: format!("{} = {got:.3e}, expected {want} (schedule {})", what, self.name()),
                });
            }
        }
        Ok(())
    }

    /// Evaluate `(f, g, f′, g′)` at time `t` for protocol duration `tau`.
    ///
    /// Values for `t > τ` are the analytic continuations, not clamped.
    pub fn eval(&self, t: f64, tau: f64) -> SchedulePoint {
        let s = t / tau;
        match self {
            ScheduleKind::Linear => SchedulePoint {
                f: s,
                g: s,
                df: 1.0 / tau,
                dg: 1.0 / tau,
            },
            ScheduleKind::Sine => {
                let arg = PI * t / (2.0 * tau);
                let v = arg.sin();
                let dv = FRAC_PI_2 / tau * arg.cos();
                SchedulePoint {
                    f: v,
                    g: v,
                    df: dv,
                    dg: dv,
                }
            }
            ScheduleKind::CubeRoot => {
                let f = s.cbrt();
                let df = if s == 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / (3.0 * tau * s.cbrt().powi(2))
                };
                SchedulePoint {
                    f,
                    g: s,
                    df,
                    dg: 1.0 / tau,
                }
            }
            ScheduleKind::Custom(c) => SchedulePoint {
                f: (c.f)(t, tau),
                g: (c.g)(t, tau),
                df: (c.df)(t, tau),
                dg: (c.dg)(t, tau),
            },
        }
    }

    /// Whether the derivative at `t` is finite.
    pub fn derivative_finite(&self, t: f64, tau: f64) -> bool {
        let p = self.eval(t, tau);
        p.df.is_finite() && p.dg.is_finite()
    }

    /// Total variation proxy of `(f, g)` over `[a, b]`, from `quarters + 1`
    /// equally spaced samples. Drives the propagator's substep refinement.
    pub fn variation(&self, a: f64, b: f64, tau: f64, quarters: usize) -> f64 {
        let n = quarters.max(1);
        let mut acc = 0.0;
        let mut prev = self.eval(a, tau);
        for k in 1..=n {
            let t = a + (b - a) * (k as f64) / (n as f64);
            let cur = self.eval(t, tau);
            acc += (cur.f - prev.f).abs() + (cur.g - prev.g).abs();
            prev = cur;
        }
        acc
    }
}

/// A constant schedule `f ≡ g ≡ 0`: freezes the drive at its initial
/// Hamiltonian. Useful as a time-independent reference in tests.
pub fn frozen_schedule() -> ScheduleKind {
    ScheduleKind::Custom(Arc::new(CustomSchedule {
        name: "frozen".into(),
        f: Box::new(|_, _| 0.0),
        g: Box::new(|_, _| 0.0),
        df: Box::new(|_, _| 0.0),
        dg: Box::new(|_, _| 0.0),
    }))
}
