//! Adaptive time-step selection from the maximal normal displacement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, SolveError};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeStepControl<T> {
    pub dxn_min: T,
    pub dxn_max: T,
    pub lambda_t: u32,
    pub tau_min: T,
    pub tau_max: T,
}

impl<T: Real> TimeStepControl<T> {
    /// Bounds `τ_min = 1e-9 τ0`, `τ_max = 1e3 τ0`.
    pub fn new(dxn_min: T, dxn_max: T, lambda_t: u32, tau0: T) -> Self {
        TimeStepControl {
            dxn_min,
            dxn_max,
            lambda_t,
            tau_min: tau0 * T::lit(1e-9),
            tau_max: tau0 * T::lit(1e3),
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.dxn_min > T::zero() && self.dxn_min < self.dxn_max) {
            return Err(SolveError::Param(format!(
                "need 0 < dxn_min < dxn_max (got {} and {})",
                self.dxn_min, self.dxn_max
            )));
        }
        if self.lambda_t < 2 {
            return Err(SolveError::Param("lambda_t must be at least 2".into()));
        }
        if !(self.tau_min > T::zero() && self.tau_min <= self.tau_max) {
            return Err(SolveError::Param("need 0 < tau_min <= tau_max".into()));
        }
        Ok(())
    }
}

/// One solve attempt.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attempt<T> {
    pub tau: T,
    pub dxn: T,
}

#[derive(Clone, Debug)]
pub struct ControlOutcome<S, T> {
    pub solution: S,
    pub tau: T,
    pub dxn: T,
    pub attempts: Vec<Attempt<T>>,
    /// The bounds were straddled and the smaller step was kept.
    pub straddled: bool,
}

fn same<T: Real>(a: T, b: T) -> bool {
    (a - b).abs() <= T::lit(1e-9) * a.abs().max(b.abs())
}

/// Runs `solve(τ) -> (solution, δXn)` starting at `tau0`:
///
/// * `δXn > max`: retry at `τ/λ_t`; below `τ_min` this is a stagnation error.
/// * `δXn < min`: retry at `τ·λ_t`; at `τ_max` the current solution is kept.
/// * otherwise accept.
///
/// If the next τ was already tried (the bounds are straddled), the solution
/// at the smaller of the two time steps is accepted.
pub fn control_loop<S, T, F>(tau0: T, ctl: &TimeStepControl<T>, mut solve: F) -> Result<ControlOutcome<S, T>, Error>
where
    T: Real,
    F: FnMut(T) -> Result<(S, T), Error>,
{
    ctl.validate()?;
    let lt = T::from_u32(ctl.lambda_t).unwrap();
    let mut tau = tau0.max(ctl.tau_min).min(ctl.tau_max);
    let mut attempts = Vec::new();
    let mut prev: Option<(S, T, T)> = None;
    loop {
        let (sol, dxn) = solve(tau)?;
        attempts.push(Attempt { tau, dxn });
        let done = |solution, tau, dxn, attempts, straddled| {
            Ok(ControlOutcome {
                solution,
                tau,
                dxn,
                attempts,
                straddled,
            })
        };
        if dxn > ctl.dxn_max || !dxn.is_finite() {
            let next = tau / lt;
            if let Some((ps, pt, pd)) = prev.take() {
                if same(pt, next) {
                    return done(ps, pt, pd, attempts, true);
                }
            }
            if next < ctl.tau_min {
                return Err(SolveError::Stagnation {
                    tau_min: ctl.tau_min.to_f64_lossy(),
                }
                .into());
            }
            prev = Some((sol, tau, dxn));
            tau = next;
        } else if dxn < ctl.dxn_min {
            let next = tau * lt;
            let tried = prev.as_ref().map_or(false, |(_, pt, _)| same(*pt, next));
            if tried || next > ctl.tau_max {
                return done(sol, tau, dxn, attempts, tried);
            }
            prev = Some((sol, tau, dxn));
            tau = next;
        } else {
            return done(sol, tau, dxn, attempts, false);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctl() -> TimeStepControl<f64> {
        TimeStepControl::new(0.003, 0.05, 10, 1e-4)
    }

    #[test]
    fn accept_immediately() {
        let out = control_loop(1e-4, &ctl(), |t| Ok(((), 0.01 + t * 0.0))).unwrap();
        assert_eq!(out.tau, 1e-4);
        assert_eq!(out.attempts.len(), 1);
    }

    #[test]
    fn too_large_then_ok() {
        // δXn proportional to τ
        let out = control_loop(1e-4, &ctl(), |t| Ok(((), 600.0 * t))).unwrap();
        assert_eq!(out.attempts.len(), 2);
        assert!((out.tau - 1e-5).abs() < 1e-18);
    }

    #[test]
    fn straddle_accepts_smaller_step() {
        // 1e-4 -> 0.001 (too small), 1e-3 -> 0.1 (too large)
        let out = control_loop(1e-4, &ctl(), |t| Ok((t, if t < 5e-4 { 0.001 } else { 0.1 }))).unwrap();
        assert_eq!(out.attempts.len(), 2);
        assert_eq!(out.solution, 1e-4);
        assert!(out.straddled);
    }

    #[test]
    fn stagnation() {
        let r = control_loop(1e-4, &ctl(), |_| Ok(((), 1.0)));
        assert!(matches!(r, Err(Error::Solve(SolveError::Stagnation { .. }))));
    }
}
