//! Event-aware Dormand–Prince integration.
//!
//! After each accepted step the event function is compared at both ends.
//! A crossing in the event's direction is located by bisection on trial
//! steps from the start of the step, the crossing row is stored, the
//! transform is applied and, unless terminal, integration restarts from
//! the transformed state.

use super::dopri5::Dopri5;
use super::trajectory::{EventRecord, Status, Trajectory};
use super::{IntegratorOptions, Record};
use crate::error::IntegrationError;
use crate::problem::Problem;
use crate::rhs::RhsBundle;

/// Bisection stops when the bracket is narrower than this fraction of the span.
const LOCATE_TOL: f64 = 1e-12;
/// Two events closer than this fraction of the span are a stall.
const STALL_TOL: f64 = 1e-10;

pub fn integrate_with_events(problem: &Problem, opts: &IntegratorOptions) -> Result<Trajectory, IntegrationError> {
    let (t0, tf) = problem.time_span();
    integrate_bundle(problem.rhs(), t0, problem.y0(), tf, opts)
}

pub(crate) fn integrate_bundle(
    rhs: &RhsBundle,
    t0: f64,
    y0: &[f64],
    tf: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory, IntegrationError> {
    let event = rhs.event().ok_or(IntegrationError::NoEvent)?;
    let span = tf - t0;
    let mut traj = Trajectory::start(t0, y0);
    let mut stepper = Dopri5::new(rhs, t0, y0, tf, opts)?;
    let mut last_event: Option<f64> = None;
    loop {
        let (tn, yn) = (stepper.t(), stepper.y().to_vec());
        let g0 = (event.value)(tn, &yn);
        let Some(t1) = stepper.step()? else { break };
        let g1 = (event.value)(t1, stepper.y());
        if !event.direction.crosses(g0, g1) {
            if opts.record == Record::Steps || stepper.is_done() {
                traj.push(t1, stepper.y());
            }
            continue;
        }
        // bisect on the fraction of the step, using trial steps from (tn, yn)
        let h = t1 - tn;
        let mut probe = Dopri5::new(rhs, tn, &yn, t1, opts)?;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut y_hi = stepper.y().to_vec();
        while (hi - lo) * h > LOCATE_TOL * span {
            let mid = 0.5 * (lo + hi);
            let ym = probe.trial(mid * h)?;
            if event.direction.crosses(g0, (event.value)(tn + mid * h, &ym)) {
                hi = mid;
                y_hi = ym;
            } else {
                lo = mid;
            }
        }
        let t_star = if hi == 1.0 { t1 } else { tn + hi * h };
        if let Some(prev) = last_event {
            if t_star - prev < STALL_TOL * span {
                return Err(IntegrationError::EventStall { t: t_star, gap: t_star - prev });
            }
        }
        last_event = Some(t_star);
        let mut stats = *stepper.stats();
        stats.f_evals += probe.stats().f_evals;
        traj.push(t_star, &y_hi);
        let outcome = (event.transform)(t_star, &y_hi)?;
        traj.events.push(EventRecord { time: t_star, pre: y_hi, post: outcome.state.clone() });
        if outcome.terminal {
            traj.status = Status::TerminatedByEvent;
            traj.stats.absorb(&stats);
            return Ok(traj);
        }
        traj.stats.absorb(&stats);
        if t_star >= tf {
            return Ok(traj);
        }
        stepper = Dopri5::new(rhs, t_star, &outcome.state, tf, opts)?;
    }
    traj.stats.absorb(stepper.stats());
    Ok(traj)
}
