//! Logger frame decoding, atomic ingestion, last-contact tracking and the
//! no-communication watchdog.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::domain::{validate_event, EventType, LiftEvent, LiftId, OperationMode};
use crate::error::{DomainError, StoreError};
use crate::site::SiteConfig;
use crate::status::{LiftStatus, StatusBoard, StatusError, TransitionSource};
use crate::store::Store;
use crate::time::Timestamp;
use crate::wire;

/// Loggers batch telemetry and transmit it with this delay.
pub const LOGGER_DELAY_S: u64 = 300;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("logger {0:?} is not authorised")]
    Unauthorized(String),
    #[error("malformed payload at line {line}: {reason}")]
    MalformedPayload { line: usize, reason: String },
    #[error("invalid event at line {line}: {source}")]
    InvalidEvent { line: usize, source: DomainError },
    #[error("frame sent at {sent_at} before its newest event at {newest}")]
    SentBeforeOccurred { sent_at: Timestamp, newest: Timestamp },
    #[error(transparent)]
    Storage(#[from] StoreError),
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::Unauthorized(_) => "unauthorized_logger",
            IngestError::MalformedPayload { .. } => "malformed_payload",
            IngestError::InvalidEvent { source, .. } => source.code(),
            IngestError::SentBeforeOccurred { .. } => "sent_before_occurred",
            IngestError::Storage(_) => "storage_failure",
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            IngestError::MalformedPayload { line, .. } | IngestError::InvalidEvent { line, .. } => Some(*line),
            _ => None,
        }
    }
}

/// One batch of events from a data logger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoggerFrame {
    logger_id: String,
    sent_at: Timestamp,
    events: Vec<LiftEvent>,
}

impl LoggerFrame {
    /// `sent_at` defaults to the newest event time.
    pub fn new(logger_id: impl Into<String>, sent_at: Option<Timestamp>, events: Vec<LiftEvent>) -> Result<Self, IngestError> {
        let newest = events.iter().map(|e| e.occurred_at()).max();
        let sent_at = match (sent_at, newest) {
            (Some(s), Some(n)) if s < n => return Err(IngestError::SentBeforeOccurred { sent_at: s, newest: n }),
            (Some(s), _) => s,
            (None, Some(n)) => n,
            (None, None) => Timestamp::from_unix(0),
        };
        Ok(LoggerFrame { logger_id: logger_id.into(), sent_at, events })
    }

    pub fn logger_id(&self) -> &str {
        &self.logger_id
    }
    pub fn sent_at(&self) -> Timestamp {
        self.sent_at
    }
    pub fn events(&self) -> &[LiftEvent] {
        &self.events
    }
}

/// Decodes a JSON-lines payload. Blank and `#` lines are skipped; the first bad
/// line rejects the whole payload. Line numbers are 1-based.
pub fn decode_payload(bytes: &[u8], site: &SiteConfig) -> Result<Vec<LiftEvent>, IngestError> {
    let text = std::str::from_utf8(bytes).map_err(|e| IngestError::MalformedPayload {
        line: 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
        reason: "payload is not UTF-8".into(),
    })?;
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if wire::is_skippable(line) {
            continue;
        }
        let raw = wire::decode_event(line).map_err(|reason| IngestError::MalformedPayload { line: i + 1, reason })?;
        let ev = validate_event(raw, site).map_err(|source| IngestError::InvalidEvent { line: i + 1, source })?;
        events.push(ev);
    }
    if events.is_empty() {
        return Err(IngestError::MalformedPayload { line: 1, reason: "payload contains no events".into() });
    }
    Ok(events)
}

pub fn decode_frame(
    bytes: &[u8],
    logger_id: &str,
    sent_at: Option<Timestamp>,
    site: &SiteConfig,
) -> Result<LoggerFrame, IngestError> {
    LoggerFrame::new(logger_id, sent_at, decode_payload(bytes, site)?)
}

/// Silence threshold for the watchdog; must exceed the logger delay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WatchdogThreshold(u64);

impl WatchdogThreshold {
    pub const DEFAULT: WatchdogThreshold = WatchdogThreshold(900);

    pub fn new(secs: u64) -> Result<Self, String> {
        if secs > LOGGER_DELAY_S {
            Ok(WatchdogThreshold(secs))
        } else {
            Err(format!("watchdog threshold {secs}s must exceed the {LOGGER_DELAY_S}s logger delay"))
        }
    }

    pub fn secs(self) -> u64 {
        self.0
    }
}

impl Default for WatchdogThreshold {
    fn default() -> Self {
        Self::DEFAULT
    }
}

pub struct Ingestor {
    site: Arc<SiteConfig>,
    store: Arc<Store>,
    status: Arc<StatusBoard>,
    last_contact: Mutex<HashMap<LiftId, Timestamp>>,
    tokens: HashMap<String, String>,
    sweep: Mutex<()>,
}

impl Ingestor {
    /// Restores last-contact times from the store.
    pub fn new(
        site: Arc<SiteConfig>,
        store: Arc<Store>,
        status: Arc<StatusBoard>,
        tokens: HashMap<String, String>,
    ) -> Self {
        let last_contact = store
            .latest_event_per_lift(&site)
            .into_iter()
            .map(|(lift, (ev, _))| (lift, ev.occurred_at()))
            .collect();
        Ingestor { site, store, status, last_contact: Mutex::new(last_contact), tokens, sweep: Mutex::new(()) }
    }

    pub fn site(&self) -> &SiteConfig {
        &self.site
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn status(&self) -> &Arc<StatusBoard> {
        &self.status
    }

    pub fn authenticate(&self, logger_id: &str, token: &str) -> Result<(), IngestError> {
        match self.tokens.get(logger_id) {
            Some(expected) if constant_time_eq(expected.as_bytes(), token.as_bytes()) => Ok(()),
            _ => Err(IngestError::Unauthorized(logger_id.to_string())),
        }
    }

    pub fn decode(&self, bytes: &[u8], logger_id: &str, sent_at: Option<Timestamp>) -> Result<LoggerFrame, IngestError> {
        decode_frame(bytes, logger_id, sent_at, &self.site)
    }

    /// Appends the frame atomically, advances last-contact, and forwards mode
    /// information to the status board. Returns the number of appended events.
    pub fn ingest_frame(&self, frame: LoggerFrame, now: Timestamp) -> Result<usize, IngestError> {
        let events = frame.events;
        let n = events.len();
        self.store.append_batch(events.clone())?;
        {
            let mut lc = self.last_contact.lock().unwrap();
            for ev in &events {
                let slot = lc.entry(ev.lift().clone()).or_insert(ev.occurred_at());
                if ev.occurred_at() > *slot {
                    *slot = ev.occurred_at();
                }
            }
        }
        for ev in &events {
            if let Err(e) = self.forward_mode(ev) {
                tracing::error!(lift = %ev.lift(), error = %e, "cannot apply mode from event");
            }
        }
        tracing::debug!(logger = %frame.logger_id, appended = n, lag_s = now.secs_since(frame.sent_at), "frame ingested");
        Ok(n)
    }

    fn forward_mode(&self, ev: &LiftEvent) -> Result<(), StatusError> {
        let recovering = self.status.mode_of(ev.lift()) == Some(OperationMode::NoCommunication);
        if ev.event_type() == EventType::ModeChange || recovering {
            self.status.apply_mode_change(ev.lift(), ev.operation_mode(), ev.occurred_at(), TransitionSource::Ingest)?;
        }
        Ok(())
    }

    pub fn last_contact(&self) -> HashMap<LiftId, Timestamp> {
        self.last_contact.lock().unwrap().clone()
    }

    /// Moves every working lift silent for longer than the threshold into
    /// `NoCommunication`. Lifts already not working are left alone.
    pub fn watchdog_sweep(&self, now: Timestamp, threshold: WatchdogThreshold) -> Vec<LiftId> {
        let _serial = self.sweep.lock().unwrap();
        let silent: Vec<LiftId> = {
            let lc = self.last_contact.lock().unwrap();
            self.site
                .lifts()
                .filter_map(|l| {
                    let last = lc.get(&l.id)?;
                    (now.secs_since(*last) > threshold.secs() as i64).then(|| l.id.clone())
                })
                .collect()
        };
        silent
            .into_iter()
            .filter(|lift| self.status.mode_of(lift) == Some(OperationMode::Normal))
            .filter(|lift| {
                matches!(
                    self.status.apply_mode_change(lift, OperationMode::NoCommunication, now, TransitionSource::Watchdog),
                    Ok(Some(_))
                )
            })
            .collect()
    }

    pub fn current_statuses(&self, now: Timestamp) -> Vec<LiftStatus> {
        self.status.current_statuses(now, &self.last_contact())
    }
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}
