use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Complete,
    TerminatedByEvent,
    Failed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Complete => "complete",
            Status::TerminatedByEvent => "terminated_by_event",
            Status::Failed => "failed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub pre: Vec<f64>,
    pub post: Vec<f64>,
}

/// Work counters of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub f_evals: usize,
    pub jacobian_evals: usize,
    pub factorizations: usize,
    pub newton_iterations: usize,
    /// Largest Newton iteration count in a single stage.
    pub max_stage_newton_iterations: usize,
}

impl Stats {
    pub(crate) fn absorb(&mut self, other: &Stats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.f_evals += other.f_evals;
        self.jacobian_evals += other.jacobian_evals;
        self.factorizations += other.factorizations;
        self.newton_iterations += other.newton_iterations;
        self.max_stage_newton_iterations = self.max_stage_newton_iterations.max(other.max_stage_newton_iterations);
    }
}

/// Output of an integration run: accepted times and states plus events.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub events: Vec<EventRecord>,
    pub status: Status,
    #[serde(default)]
    pub stats: Stats,
}

impl Trajectory {
    pub(crate) fn start(t0: f64, y0: &[f64]) -> Self {
        Self { times: vec![t0], states: vec![y0.to_vec()], events: Vec::new(), status: Status::Complete, stats: Stats::default() }
    }

    pub(crate) fn push(&mut self, t: f64, y: &[f64]) {
        self.times.push(t);
        self.states.push(y.to_vec());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn num_vars(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one row")
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least one row")
    }
}
