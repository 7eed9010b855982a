//! Accounts, credential hashing and bearer sessions.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Mutex;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vt_core::store::Table;
use vt_core::{StoreError, Timestamp};

pub const USERS_FILE: &str = "users.jsonl";
const HASH_ROUNDS: u32 = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "admin")]
    Admin,
    #[serde(rename = "vt_staff")]
    VtStaff,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Admin => "admin",
            Role::VtStaff => "vt_staff",
        }
    }
}

impl std::str::FromStr for Role {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "admin" => Ok(Role::Admin),
            "vt_staff" => Ok(Role::VtStaff),
            _ => Err(format!("unknown role {s:?} (expected admin or vt_staff)")),
        }
    }
}

pub trait Clock: Send + Sync {
    fn now(&self) -> Timestamp;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Timestamp {
        Timestamp::now()
    }
}

/// A clock that only moves when told to.
pub struct ManualClock(AtomicI64);

impl ManualClock {
    pub fn new(t: Timestamp) -> Self {
        ManualClock(AtomicI64::new(t.unix()))
    }

    pub fn set(&self, t: Timestamp) {
        self.0.store(t.unix(), Ordering::SeqCst);
    }

    pub fn advance(&self, secs: i64) {
        self.0.fetch_add(secs, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Timestamp {
        Timestamp::from_unix(self.0.load(Ordering::SeqCst))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserAccount {
    pub user_id: String,
    pub display_name: String,
    pub role: Role,
    salt: String,
    credential_hash: String,
    #[serde(default)]
    pub disabled: bool,
}

fn random_hex(bytes: usize) -> String {
    let mut buf = vec![0u8; bytes];
    rand::rng().fill_bytes(&mut buf);
    hex::encode(buf)
}

fn hash_password(salt: &str, password: &str) -> String {
    let mut digest = Sha256::new().chain_update(salt).chain_update(password).finalize();
    for _ in 1..HASH_ROUNDS {
        digest = Sha256::new().chain_update(digest).chain_update(salt).finalize();
    }
    hex::encode(digest)
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

impl UserAccount {
    pub fn new(user_id: impl Into<String>, display_name: impl Into<String>, role: Role, password: &str) -> Self {
        let salt = random_hex(16);
        let credential_hash = hash_password(&salt, password);
        UserAccount { user_id: user_id.into(), display_name: display_name.into(), role, salt, credential_hash, disabled: false }
    }

    pub fn verify(&self, password: &str) -> bool {
        !self.disabled && constant_time_eq(hash_password(&self.salt, password).as_bytes(), self.credential_hash.as_bytes())
    }
}

/// Account table. Rows are appended; the latest row for a user id wins.
pub struct UserDirectory {
    table: Table<UserAccount>,
}

impl UserDirectory {
    pub fn open(store_dir: Option<&Path>) -> Result<Self, StoreError> {
        let table = match store_dir {
            Some(dir) => Table::open(dir.join(USERS_FILE), USERS_FILE)?,
            None => Table::in_memory(),
        };
        Ok(UserDirectory { table })
    }

    fn latest(&self) -> BTreeMap<String, UserAccount> {
        self.table.all().into_iter().map(|u| (u.user_id.clone(), u)).collect()
    }

    pub fn get(&self, user_id: &str) -> Option<UserAccount> {
        self.latest().remove(user_id).filter(|u| !u.disabled)
    }

    pub fn list(&self) -> Vec<UserAccount> {
        self.latest().into_values().filter(|u| !u.disabled).collect()
    }

    /// Every known account, disabled ones included.
    pub fn list_all(&self) -> Vec<UserAccount> {
        self.latest().into_values().collect()
    }

    pub fn put(&self, account: UserAccount) -> Result<(), StoreError> {
        self.table.append(account).map(|_| ())
    }

    /// Returns false when no active account has this id.
    pub fn disable(&self, user_id: &str) -> Result<bool, StoreError> {
        match self.get(user_id) {
            Some(mut u) => {
                u.disabled = true;
                self.put(u)?;
                Ok(true)
            }
            None => Ok(false),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Session {
    pub user_id: String,
    pub display_name: String,
    pub role: Role,
    pub expires_at: Timestamp,
}

/// Opaque bearer tokens held in memory.
pub struct Sessions {
    ttl_s: i64,
    live: Mutex<HashMap<String, Session>>,
}

impl Sessions {
    pub fn new(ttl_s: i64) -> Self {
        Sessions { ttl_s, live: Mutex::new(HashMap::new()) }
    }

    pub fn create(&self, user: &UserAccount, now: Timestamp) -> (String, Session) {
        let token = random_hex(32);
        let session = Session {
            user_id: user.user_id.clone(),
            display_name: user.display_name.clone(),
            role: user.role,
            expires_at: now.plus_secs(self.ttl_s),
        };
        self.live.lock().unwrap().insert(token.clone(), session.clone());
        (token, session)
    }

    pub fn lookup(&self, token: &str, now: Timestamp) -> Option<Session> {
        let mut live = self.live.lock().unwrap();
        live.retain(|_, s| s.expires_at > now);
        live.get(token).cloned()
    }

    pub fn revoke(&self, token: &str) -> bool {
        self.live.lock().unwrap().remove(token).is_some()
    }
}
