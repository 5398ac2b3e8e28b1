use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobKind {
    Embed,
    Reduce,
    Train,
    Eval,
}

impl std::str::FromStr for JobKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "embed" => Ok(JobKind::Embed),
            "reduce" => Ok(JobKind::Reduce),
            "train" => Ok(JobKind::Train),
            "eval" => Ok(JobKind::Eval),
            other => Err(format!("unknown job kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_active(self) -> bool {
        matches!(self, JobState::Queued | JobState::Running)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobStatus {
    pub job_id: String,
    pub kind: JobKind,
    pub state: JobState,
    pub progress: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Kind-specific summary of a finished job.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<serde_json::Value>,
}

#[derive(Debug)]
pub struct Conflict(pub String);

/// Every job ever submitted, by id. A kind has at most one active job.
#[derive(Debug, Default, Clone)]
pub struct JobTable {
    inner: Arc<Mutex<Inner>>,
}

#[derive(Debug, Default)]
struct Inner {
    next: u64,
    jobs: BTreeMap<String, JobStatus>,
}

impl JobTable {
    /// Registers a queued job unless one of the same kind is still active.
    pub fn submit(&self, kind: JobKind) -> Result<JobStatus, Conflict> {
        let mut inner = self.inner.lock().expect("job table poisoned");
        if let Some(j) = inner.jobs.values().find(|j| j.kind == kind && j.state.is_active()) {
            return Err(Conflict(j.job_id.clone()));
        }
        inner.next += 1;
        let status = JobStatus {
            job_id: format!("job-{}", inner.next),
            kind,
            state: JobState::Queued,
            progress: 0.0,
            result_ref: None,
            error: None,
            result: None,
        };
        inner.jobs.insert(status.job_id.clone(), status.clone());
        Ok(status)
    }

    pub fn get(&self, id: &str) -> Option<JobStatus> {
        self.inner.lock().expect("job table poisoned").jobs.get(id).cloned()
    }

    pub fn list(&self) -> Vec<JobStatus> {
        self.inner.lock().expect("job table poisoned").jobs.values().cloned().collect()
    }

    /// Applies `f` unless the job has already finished. States never move
    /// backwards and progress never decreases.
    fn update(&self, id: &str, f: impl FnOnce(&mut JobStatus)) {
        let mut inner = self.inner.lock().expect("job table poisoned");
        if let Some(j) = inner.jobs.get_mut(id) {
            if !j.state.is_active() {
                return;
            }
            let (state, progress) = (j.state, j.progress);
            f(j);
            j.state = j.state.max(state);
            j.progress = j.progress.clamp(progress, 1.0);
        }
    }

    pub fn start(&self, id: &str) {
        self.update(id, |j| j.state = JobState::Running);
    }

    pub fn progress(&self, id: &str, fraction: f64) {
        self.update(id, |j| j.progress = fraction);
    }

    pub fn finish(&self, id: &str, result_ref: Option<String>, result: serde_json::Value) {
        self.update(id, |j| {
            j.state = JobState::Done;
            j.progress = 1.0;
            j.result_ref = result_ref;
            j.result = Some(result);
        });
    }

    pub fn fail(&self, id: &str, error: String) {
        self.update(id, |j| {
            j.state = JobState::Failed;
            j.error = Some(error);
        });
    }
}
