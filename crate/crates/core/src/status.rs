//! Live per-lift status, transition history, the notice board and
//! notifications on transitions into a not-working mode.
//!
//! Status is a fold over the transition log: every lift starts out as
//! `NoCommunication` with no `since`, and each transition sets `(mode, since)`.

use std::collections::{BTreeMap, HashMap};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{LiftId, OperationMode};
use crate::error::StoreError;
use crate::site::SiteConfig;
use crate::store::{Store, Table};
use crate::time::Timestamp;

pub const OUTBOX_FILE: &str = "outbox.jsonl";

#[derive(Debug, Error)]
pub enum StatusError {
    #[error("unknown lift {0}")]
    UnknownLift(LiftId),
    #[error(transparent)]
    Storage(#[from] StoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionSource {
    Ingest,
    Watchdog,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusTransition {
    pub lift: LiftId,
    pub from_mode: OperationMode,
    pub to_mode: OperationMode,
    pub at: Timestamp,
    pub source: TransitionSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftStatus {
    pub lift: LiftId,
    pub working: bool,
    pub mode: OperationMode,
    /// When the current mode began; absent if the lift has never reported.
    pub since: Option<Timestamp>,
    /// Seconds since the last ingested event; absent if never contacted.
    pub data_age_s: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoticeEntry {
    pub lift: LiftId,
    pub mode: OperationMode,
    pub since: Option<Timestamp>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispatchOutcome {
    Delivered,
    Failed,
}

/// One line of the outbox file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispatchRecord {
    pub lift: LiftId,
    pub to_mode: OperationMode,
    pub at: Timestamp,
    pub rendered_text: String,
    pub outcome: DispatchOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub recipient: String,
    pub subject: String,
    pub body: String,
}

#[derive(Debug, Error)]
#[error("notification sink unavailable: {0}")]
pub struct SinkUnavailable(pub String);

/// Delivery channel for rendered notifications.
pub trait NotificationSink: Send + Sync {
    fn deliver(&self, message: &Notification) -> Result<(), SinkUnavailable>;
}

/// Appends each message as one JSON line to a spool file.
pub struct FileSink {
    path: PathBuf,
}

impl FileSink {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        FileSink { path: path.into() }
    }
}

impl NotificationSink for FileSink {
    fn deliver(&self, message: &Notification) -> Result<(), SinkUnavailable> {
        let mut line = serde_json::to_string(message).expect("notification serialisation cannot fail");
        line.push('\n');
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .and_then(|mut f| f.write_all(line.as_bytes()))
            .map_err(|e| SinkUnavailable(format!("{}: {e}", self.path.display())))
    }
}

pub struct StdoutSink;

impl NotificationSink for StdoutSink {
    fn deliver(&self, message: &Notification) -> Result<(), SinkUnavailable> {
        println!("to {}: {} | {}", message.recipient, message.subject, message.body);
        Ok(())
    }
}

/// Collects messages in memory; can be switched off to simulate an outage.
#[derive(Default, Clone)]
pub struct MemorySink {
    inner: Arc<Mutex<MemorySinkState>>,
}

#[derive(Default)]
struct MemorySinkState {
    delivered: Vec<Notification>,
    attempts: usize,
    down: bool,
}

impl MemorySink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_down(&self, down: bool) {
        self.inner.lock().unwrap().down = down;
    }

    pub fn delivered(&self) -> Vec<Notification> {
        self.inner.lock().unwrap().delivered.clone()
    }

    pub fn attempts(&self) -> usize {
        self.inner.lock().unwrap().attempts
    }
}

impl NotificationSink for MemorySink {
    fn deliver(&self, message: &Notification) -> Result<(), SinkUnavailable> {
        let mut s = self.inner.lock().unwrap();
        s.attempts += 1;
        if s.down {
            return Err(SinkUnavailable("memory sink switched off".into()));
        }
        s.delivered.push(message.clone());
        Ok(())
    }
}

pub const DEFAULT_RECIPIENT: &str = "vt-management";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LiftState {
    mode: OperationMode,
    since: Option<Timestamp>,
}

const INITIAL: LiftState = LiftState { mode: OperationMode::NoCommunication, since: None };

/// Replays transitions over the site's lifts. Lifts absent from the log stay
/// in the initial never-contacted state.
pub fn fold_transitions<'a>(
    site: &SiteConfig,
    transitions: impl IntoIterator<Item = &'a StatusTransition>,
) -> BTreeMap<LiftId, (OperationMode, Option<Timestamp>)> {
    let mut state: BTreeMap<LiftId, LiftState> = site.lifts().map(|l| (l.id.clone(), INITIAL)).collect();
    for t in transitions {
        if let Some(s) = state.get_mut(&t.lift) {
            *s = LiftState { mode: t.to_mode, since: Some(t.at) };
        }
    }
    state.into_iter().map(|(k, s)| (k, (s.mode, s.since))).collect()
}

/// Live status projection for one site.
pub struct StatusBoard {
    site: Arc<SiteConfig>,
    store: Arc<Store>,
    state: Mutex<BTreeMap<LiftId, LiftState>>,
    sink: Box<dyn NotificationSink>,
    outbox: Table<DispatchRecord>,
    recipient: String,
}

impl StatusBoard {
    /// Rebuilds the board from the store's transition log. The outbox lives
    /// next to the store files, or in memory for an in-memory store.
    pub fn open(
        site: Arc<SiteConfig>,
        store: Arc<Store>,
        sink: Box<dyn NotificationSink>,
    ) -> Result<Self, StoreError> {
        let outbox = match store.dir() {
            Some(dir) => Table::open(dir.join(OUTBOX_FILE), OUTBOX_FILE)?,
            None => Table::in_memory(),
        };
        let folded = fold_transitions(&site, store.transitions().all().iter());
        let state = folded.into_iter().map(|(k, (mode, since))| (k, LiftState { mode, since })).collect();
        Ok(StatusBoard {
            site,
            store,
            state: Mutex::new(state),
            sink,
            outbox,
            recipient: DEFAULT_RECIPIENT.to_string(),
        })
    }

    pub fn site(&self) -> &SiteConfig {
        &self.site
    }

    pub fn mode_of(&self, lift: &LiftId) -> Option<OperationMode> {
        self.state.lock().unwrap().get(lift).map(|s| s.mode)
    }

    /// Moves `lift` into `to_mode`. Returns `None` when it is already there.
    /// A transition into a not-working mode dispatches exactly one notification.
    pub fn apply_mode_change(
        &self,
        lift: &LiftId,
        to_mode: OperationMode,
        at: Timestamp,
        source: TransitionSource,
    ) -> Result<Option<StatusTransition>, StatusError> {
        let transition = {
            let mut state = self.state.lock().unwrap();
            let current = state.get_mut(lift).ok_or_else(|| StatusError::UnknownLift(lift.clone()))?;
            if current.mode == to_mode {
                return Ok(None);
            }
            if current.since.is_some_and(|since| at < since) {
                tracing::warn!(%lift, %at, "mode change older than current status, applying in arrival order");
            }
            let transition =
                StatusTransition { lift: lift.clone(), from_mode: current.mode, to_mode, at, source };
            self.store.transitions().append(transition.clone())?;
            *current = LiftState { mode: to_mode, since: Some(at) };
            transition
        };
        if !to_mode.is_working() {
            self.notify(&transition);
        }
        Ok(Some(transition))
    }

    /// Renders and hands one message to the sink, retrying once. Failures are
    /// recorded, never propagated.
    pub fn notify(&self, transition: &StatusTransition) -> DispatchRecord {
        let message = render_notification(transition, &self.recipient);
        let outcome = match self.sink.deliver(&message).or_else(|_| self.sink.deliver(&message)) {
            Ok(()) => DispatchOutcome::Delivered,
            Err(e) => {
                tracing::error!(lift = %transition.lift, error = %e, "notification failed after retry");
                DispatchOutcome::Failed
            }
        };
        let record = DispatchRecord {
            lift: transition.lift.clone(),
            to_mode: transition.to_mode,
            at: transition.at,
            rendered_text: message.body,
            outcome,
        };
        if let Err(e) = self.outbox.append(record.clone()) {
            tracing::error!(error = %e, "cannot record notification dispatch");
        }
        record
    }

    pub fn dispatches(&self) -> Vec<DispatchRecord> {
        self.outbox.all()
    }

    pub fn transitions(&self) -> Vec<StatusTransition> {
        self.store.transitions().all()
    }

    /// One entry per configured lift.
    pub fn current_statuses(&self, now: Timestamp, last_contact: &HashMap<LiftId, Timestamp>) -> Vec<LiftStatus> {
        let state = self.state.lock().unwrap();
        state
            .iter()
            .map(|(lift, s)| LiftStatus {
                lift: lift.clone(),
                working: s.mode.is_working(),
                mode: s.mode,
                since: s.since,
                data_age_s: last_contact.get(lift).map(|&t| now.secs_since(t)),
            })
            .collect()
    }

    /// Currently not-working lifts.
    pub fn notice_board(&self) -> Vec<NoticeEntry> {
        let state = self.state.lock().unwrap();
        state
            .iter()
            .filter(|(_, s)| !s.mode.is_working())
            .map(|(lift, s)| NoticeEntry {
                lift: lift.clone(),
                mode: s.mode,
                since: s.since,
                message: notice_text(lift, s.mode, s.since),
            })
            .collect()
    }
}

fn notice_text(lift: &LiftId, mode: OperationMode, since: Option<Timestamp>) -> String {
    match since {
        Some(t) => format!("Lift {lift} is not working ({}) since {t}.", mode.label()),
        None => format!("Lift {lift} is not working ({}): no data received yet.", mode.label()),
    }
}

pub fn render_notification(t: &StatusTransition, recipient: &str) -> Notification {
    Notification {
        recipient: recipient.to_string(),
        subject: format!("Lift {} not working: {}", t.lift, t.to_mode.label()),
        body: format!(
            "Lift {} changed from {} to {} at {}.",
            t.lift,
            t.from_mode.label(),
            t.to_mode.label(),
            t.at
        ),
    }
}

/// Builds a sink from a short spec: `stdout`, `memory`, or `file:<path>`.
pub fn sink_from_spec(spec: &str, base: &Path) -> Result<Box<dyn NotificationSink>, String> {
    match spec {
        "stdout" => Ok(Box::new(StdoutSink)),
        "memory" => Ok(Box::new(MemorySink::new())),
        s => match s.strip_prefix("file:") {
            Some(p) => Ok(Box::new(FileSink::new(base.join(p)))),
            None => Err(format!("unknown notification sink {s:?}")),
        },
    }
}
