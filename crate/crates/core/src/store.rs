//! Append-only JSON-lines persistence with an in-memory index rebuilt on open.
//!
//! Each table is one file in the store directory. Sequence numbers are 1-based
//! line numbers, so the event file stays byte-identical to the simulator output
//! and to logger payloads.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::domain::{validate_event, EventType, LiftEvent, LiftId, QueryScope};
use crate::error::StoreError;
use crate::site::SiteConfig;
use crate::time::{TimeWindow, Timestamp};
use crate::wire;

pub const EVENTS_FILE: &str = "events.jsonl";
pub const SIGNINS_FILE: &str = "signins.jsonl";
pub const TRANSITIONS_FILE: &str = "transitions.jsonl";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventFilter {
    pub scope: QueryScope,
    pub window: TimeWindow,
    pub event_types: Option<BTreeSet<EventType>>,
}

impl EventFilter {
    pub fn new(scope: QueryScope, window: TimeWindow) -> Self {
        EventFilter { scope, window, event_types: None }
    }

    pub fn with_types(mut self, types: impl IntoIterator<Item = EventType>) -> Self {
        self.event_types = Some(types.into_iter().collect());
        self
    }

    pub fn matches(&self, ev: &LiftEvent) -> bool {
        self.window.contains(ev.occurred_at())
            && self.scope.covers(ev.lift())
            && self.event_types.as_ref().is_none_or(|t| t.contains(&ev.event_type()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredEvent {
    pub seq: u64,
    pub event: LiftEvent,
    /// Same (lift, occurred_at, event_type) as an earlier row.
    pub duplicate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Appended {
    pub seq: u64,
    pub duplicate: bool,
}

type DedupKey = (LiftId, Timestamp, EventType);

#[derive(Default)]
struct EventIndex {
    rows: Vec<StoredEvent>,
    /// (occurred_at, seq), kept sorted.
    by_time: Vec<(Timestamp, u64)>,
    seen: HashSet<DedupKey>,
    latest: HashMap<LiftId, (Timestamp, u64)>,
}

impl EventIndex {
    fn push(&mut self, event: LiftEvent) -> Appended {
        let seq = self.rows.len() as u64 + 1;
        let t = event.occurred_at();
        let duplicate = !self.seen.insert((event.lift().clone(), t, event.event_type()));
        let pos = self.by_time.partition_point(|&k| k <= (t, seq));
        self.by_time.insert(pos, (t, seq));
        let entry = self.latest.entry(event.lift().clone()).or_insert((t, seq));
        if (t, seq) > *entry {
            *entry = (t, seq);
        }
        self.rows.push(StoredEvent { seq, event, duplicate });
        Appended { seq, duplicate }
    }

    fn row(&self, seq: u64) -> &StoredEvent {
        &self.rows[(seq - 1) as usize]
    }
}

/// Telemetry event log plus the auxiliary tables.
pub struct Store {
    events: RwLock<EventIndex>,
    writer: Mutex<Option<File>>,
    signins: Table<SignInRecord>,
    transitions: Table<crate::status::StatusTransition>,
    dir: Option<PathBuf>,
}

impl Store {
    /// Opens (creating if needed) a store directory, re-validating every stored event.
    pub fn open(dir: impl AsRef<Path>, site: &SiteConfig) -> Result<Self, StoreError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let path = dir.join(EVENTS_FILE);
        let mut file = OpenOptions::new().create(true).read(true).append(true).open(&path)?;
        let mut index = EventIndex::default();
        let valid_len = read_lines(&mut file, EVENTS_FILE, |line_no, line| {
            let raw = wire::decode_event(line)
                .map_err(|reason| StoreError::Corrupt { table: EVENTS_FILE, line: line_no, reason })?;
            let ev = validate_event(raw, site).map_err(|e| StoreError::Corrupt {
                table: EVENTS_FILE,
                line: line_no,
                reason: e.to_string(),
            })?;
            index.push(ev);
            Ok(())
        })?;
        file.set_len(valid_len)?;
        Ok(Store {
            events: RwLock::new(index),
            writer: Mutex::new(Some(file)),
            signins: Table::open(dir.join(SIGNINS_FILE), SIGNINS_FILE)?,
            transitions: Table::open(dir.join(TRANSITIONS_FILE), TRANSITIONS_FILE)?,
            dir: Some(dir.to_path_buf()),
        })
    }

    /// A store with no backing files, for tests and one-shot analysis.
    pub fn in_memory() -> Self {
        Store {
            events: RwLock::new(EventIndex::default()),
            writer: Mutex::new(None),
            signins: Table::in_memory(),
            transitions: Table::in_memory(),
            dir: None,
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn append_event(&self, event: LiftEvent) -> Result<Appended, StoreError> {
        let mut out = self.append_batch(vec![event])?;
        Ok(out.pop().expect("one row appended"))
    }

    /// Appends all events or none of them.
    pub fn append_batch(&self, events: Vec<LiftEvent>) -> Result<Vec<Appended>, StoreError> {
        let mut writer = self.writer.lock().expect("writer lock poisoned");
        if let Some(file) = writer.as_mut() {
            let mut buf = String::new();
            for ev in &events {
                buf.push_str(&wire::encode_event(ev));
                buf.push('\n');
            }
            append_atomically(file, buf.as_bytes())?;
        }
        let mut index = self.events.write().expect("index lock poisoned");
        Ok(events.into_iter().map(|ev| index.push(ev)).collect())
    }

    /// Stored rows matching `filter`, ordered by occurred_at then seq.
    pub fn query(&self, filter: &EventFilter) -> Vec<StoredEvent> {
        let index = self.events.read().expect("index lock poisoned");
        let lo = index.by_time.partition_point(|&(t, _)| t < filter.window.start());
        let hi = index.by_time.partition_point(|&(t, _)| t < filter.window.end());
        index.by_time[lo..hi]
            .iter()
            .map(|&(_, seq)| index.row(seq))
            .filter(|row| filter.matches(&row.event))
            .cloned()
            .collect()
    }

    pub fn query_events(&self, filter: &EventFilter) -> Vec<LiftEvent> {
        self.query(filter).into_iter().map(|r| r.event).collect()
    }

    /// Every stored row in append order.
    pub fn all_events(&self) -> Vec<StoredEvent> {
        self.events.read().expect("index lock poisoned").rows.clone()
    }

    pub fn event_count(&self) -> usize {
        self.events.read().expect("index lock poisoned").rows.len()
    }

    /// For each configured lift with any events: the event with the greatest
    /// occurred_at, later seq winning ties.
    pub fn latest_event_per_lift(&self, site: &SiteConfig) -> HashMap<LiftId, (LiftEvent, u64)> {
        let index = self.events.read().expect("index lock poisoned");
        site.lifts()
            .filter_map(|lift| {
                let &(_, seq) = index.latest.get(&lift.id)?;
                Some((lift.id.clone(), (index.row(seq).event.clone(), seq)))
            })
            .collect()
    }

    pub fn record_signin(&self, record: SignInRecord) -> Result<u64, StoreError> {
        self.signins.append(record)
    }

    /// Sign-in records with `at` in the window, ordered by time then seq.
    pub fn query_signin_history(&self, window: &TimeWindow) -> Vec<SignInRecord> {
        let mut rows: Vec<(usize, SignInRecord)> = self
            .signins
            .all()
            .into_iter()
            .enumerate()
            .filter(|(_, r)| window.contains(r.at))
            .collect();
        rows.sort_by_key(|(i, r)| (r.at, *i));
        rows.into_iter().map(|(_, r)| r).collect()
    }

    pub fn transitions(&self) -> &Table<crate::status::StatusTransition> {
        &self.transitions
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignInOutcome {
    Success,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignInRecord {
    pub user_id: String,
    pub at: Timestamp,
    pub outcome: SignInOutcome,
    #[serde(default)]
    pub note: String,
}

/// A generic append-only JSON-lines table.
pub struct Table<T> {
    rows: RwLock<Vec<T>>,
    writer: Mutex<Option<File>>,
    _marker: PhantomData<T>,
}

impl<T: Serialize + DeserializeOwned + Clone> Table<T> {
    pub fn open(path: impl AsRef<Path>, name: &'static str) -> Result<Self, StoreError> {
        let mut file = OpenOptions::new().create(true).read(true).append(true).open(path.as_ref())?;
        let mut rows = Vec::new();
        let valid_len = read_lines(&mut file, name, |line_no, line| {
            let row = serde_json::from_str(line).map_err(|e| StoreError::Corrupt {
                table: name,
                line: line_no,
                reason: e.to_string(),
            })?;
            rows.push(row);
            Ok(())
        })?;
        file.set_len(valid_len)?;
        Ok(Table { rows: RwLock::new(rows), writer: Mutex::new(Some(file)), _marker: PhantomData })
    }

    pub fn in_memory() -> Self {
        Table { rows: RwLock::new(Vec::new()), writer: Mutex::new(None), _marker: PhantomData }
    }

    /// Appends a row and returns its 1-based sequence number.
    pub fn append(&self, row: T) -> Result<u64, StoreError> {
        let mut writer = self.writer.lock().expect("writer lock poisoned");
        if let Some(file) = writer.as_mut() {
            let mut line = serde_json::to_string(&row).expect("row serialisation cannot fail");
            line.push('\n');
            append_atomically(file, line.as_bytes())?;
        }
        let mut rows = self.rows.write().expect("table lock poisoned");
        rows.push(row);
        Ok(rows.len() as u64)
    }

    pub fn all(&self) -> Vec<T> {
        self.rows.read().expect("table lock poisoned").clone()
    }

    pub fn len(&self) -> usize {
        self.rows.read().expect("table lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Writes `bytes` at the end of `file`; on failure the file is truncated back
/// to its previous length.
fn append_atomically(file: &mut File, bytes: &[u8]) -> Result<(), StoreError> {
    let before = file.seek(SeekFrom::End(0))?;
    let res = file.write_all(bytes).and_then(|_| file.flush()).and_then(|_| file.sync_data());
    if let Err(e) = res {
        let _ = file.set_len(before);
        return Err(e.into());
    }
    Ok(())
}

/// Feeds each complete line to `f` and returns the byte length of the complete
/// lines. A trailing line without a newline (torn write) is dropped.
fn read_lines(
    file: &mut File,
    table: &'static str,
    mut f: impl FnMut(usize, &str) -> Result<(), StoreError>,
) -> Result<u64, StoreError> {
    file.seek(SeekFrom::Start(0))?;
    let mut reader = BufReader::new(&mut *file);
    let mut buf = String::new();
    let mut valid = 0u64;
    let mut line_no = 0usize;
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf)?;
        if n == 0 {
            break;
        }
        if !buf.ends_with('\n') {
            tracing::warn!(table, line = line_no + 1, "dropping torn trailing line");
            break;
        }
        line_no += 1;
        f(line_no, buf.trim_end_matches(['\n', '\r']))?;
        valid += n as u64;
    }
    Ok(valid)
}
