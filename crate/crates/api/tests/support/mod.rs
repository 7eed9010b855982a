//! Shared by the HTTP tests and the acceptance runner: a live server on an
//! ephemeral port, callers of each role, the endpoint table with the expected
//! status for every role, and response shape checks.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Duration;

use reqwest::{Client, Method, RequestBuilder};
use serde_json::{json, Value};
use vt_api::auth::Role;
use vt_api::{ManualClock, Parts, Services, UserAccount, UserDirectory};
use vt_core::ingest::WatchdogThreshold;
use vt_core::status::MemorySink;
use vt_core::store::Store;
use vt_core::{SiteConfig, Timestamp};

pub const LOGGER_ID: &str = "logger-b8";
pub const LOGGER_TOKEN: &str = "frame-token-1";
pub const ADMIN: (&str, &str) = ("ana", "admin-pass");
pub const STAFF: (&str, &str) = ("bo", "staff-pass");

pub struct Harness {
    pub base: String,
    pub state: vt_api::AppState,
    pub clock: Arc<ManualClock>,
    pub sink: MemorySink,
    pub client: Client,
    pub admin_token: String,
    pub staff_token: String,
    server: tokio::task::JoinHandle<()>,
}

impl Drop for Harness {
    fn drop(&mut self) {
        self.server.abort();
    }
}

pub async fn start(site: SiteConfig, store: Store, now: Timestamp) -> Harness {
    let users = UserDirectory::open(store.dir()).unwrap();
    users.put(UserAccount::new(ADMIN.0, "Ana Admin", Role::Admin, ADMIN.1)).unwrap();
    users.put(UserAccount::new(STAFF.0, "Bo Staff", Role::VtStaff, STAFF.1)).unwrap();
    let clock = Arc::new(ManualClock::new(now));
    let sink = MemorySink::new();
    let state = Services::new(Parts {
        site,
        store,
        users,
        sink: Box::new(sink.clone()),
        loggers: HashMap::from([(LOGGER_ID.to_string(), LOGGER_TOKEN.to_string())]),
        clock: clock.clone(),
        threshold: WatchdogThreshold::DEFAULT,
        session_ttl_s: 12 * 3600,
    })
    .unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let served = state.clone();
    let server = tokio::spawn(async move {
        vt_api::serve_on(listener, served, Duration::from_secs(3600)).await.unwrap();
    });
    let client = Client::new();
    let mut h = Harness {
        base,
        state,
        clock,
        sink,
        client,
        admin_token: String::new(),
        staff_token: String::new(),
        server,
    };
    h.admin_token = h.sign_in(ADMIN.0, ADMIN.1).await;
    h.staff_token = h.sign_in(STAFF.0, STAFF.1).await;
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Caller {
    Anonymous,
    Admin,
    Staff,
    Logger,
}

pub const CALLERS: [Caller; 4] = [Caller::Anonymous, Caller::Admin, Caller::Staff, Caller::Logger];

impl Harness {
    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub async fn sign_in(&self, user: &str, password: &str) -> String {
        let res = self
            .client
            .post(self.url("/api/v1/session"))
            .json(&json!({ "user_id": user, "password": password }))
            .send()
            .await
            .unwrap();
        assert_eq!(res.status(), 201, "sign in as {user}");
        res.json::<Value>().await.unwrap()["token"].as_str().unwrap().to_string()
    }

    pub fn request(&self, method: Method, path: &str, caller: Caller) -> RequestBuilder {
        let req = self.client.request(method, self.url(path));
        match caller {
            Caller::Anonymous => req,
            Caller::Admin => req.bearer_auth(&self.admin_token),
            Caller::Staff => req.bearer_auth(&self.staff_token),
            Caller::Logger => req.header("X-Logger-Id", LOGGER_ID).header("X-Logger-Token", LOGGER_TOKEN),
        }
    }

    pub async fn get_json(&self, path: &str, caller: Caller) -> (u16, Value) {
        let res = self.request(Method::GET, path, caller).send().await.unwrap();
        let status = res.status().as_u16();
        (status, res.json().await.unwrap_or(Value::Null))
    }

    pub async fn post_frame(&self, body: String) -> (u16, Value) {
        let res = self.request(Method::POST, "/api/v1/events", Caller::Logger).body(body).send().await.unwrap();
        let status = res.status().as_u16();
        (status, res.json().await.unwrap_or(Value::Null))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Public,
    Logger,
    SignedIn,
    AdminOnly,
    /// Sign-out: needs a session of either role, answers 204.
    SessionHolder,
}

pub struct Endpoint {
    pub name: &'static str,
    pub method: Method,
    pub path: &'static str,
    pub body: Option<Value>,
    /// Raw body, for endpoints that take JSON lines.
    pub raw: Option<String>,
    pub access: Access,
    pub ok: u16,
}

fn ep(name: &'static str, method: Method, path: &'static str, access: Access, ok: u16) -> Endpoint {
    Endpoint { name, method, path, body: None, raw: None, access, ok }
}

/// Every documented endpoint with a request that succeeds for an allowed caller.
pub fn endpoints(heartbeat_line: String) -> Vec<Endpoint> {
    use Access::*;
    vec![
        ep("status", Method::GET, "/api/v1/status", Public, 200),
        ep("notices", Method::GET, "/api/v1/notices", Public, 200),
        ep("panel", Method::GET, "/api/v1/panel/B12/4", Public, 200),
        Endpoint {
            body: Some(json!({ "origin": { "building": "B8", "level": 1 }, "destination": "B12:9" })),
            ..ep("route", Method::POST, "/api/v1/route", Public, 200)
        },
        Endpoint { raw: Some(heartbeat_line), ..ep("events", Method::POST, "/api/v1/events", Logger, 202) },
        ep("wait-times", Method::GET, "/api/v1/analytics/wait-times", SignedIn, 200),
        ep("wait-times-max", Method::GET, "/api/v1/analytics/wait-times?stat=max&building=B8", SignedIn, 200),
        ep("hall-calls", Method::GET, "/api/v1/analytics/hall-calls?lift=B10-1", SignedIn, 200),
        ep("direction-split", Method::GET, "/api/v1/analytics/direction-split", SignedIn, 200),
        ep("mode-split", Method::GET, "/api/v1/analytics/mode-split?building=B12", SignedIn, 200),
        ep("logs-general", Method::GET, "/api/v1/logs/general?lift=B8-3", SignedIn, 200),
        ep("logs-hall", Method::GET, "/api/v1/logs/hall?building=B12", SignedIn, 200),
        ep("logs-emergency", Method::GET, "/api/v1/logs/emergency", SignedIn, 200),
        ep("signin-history", Method::GET, "/api/v1/signin-history", AdminOnly, 200),
        Endpoint {
            body: Some(json!({ "mode": "normal" })),
            ..ep("lift-mode", Method::POST, "/api/v1/lifts/B10-2/mode", SignedIn, 200)
        },
        Endpoint {
            body: Some(json!({ "user_id": STAFF.0, "password": STAFF.1, "note": "matrix" })),
            ..ep("session-create", Method::POST, "/api/v1/session", Public, 201)
        },
        ep("session-delete", Method::DELETE, "/api/v1/session", SessionHolder, 204),
    ]
}

/// The status every caller should get.
pub fn expected(access: Access, ok: u16, caller: Caller) -> u16 {
    match (access, caller) {
        (Access::Public, _) => ok,
        (Access::Logger, Caller::Logger) => ok,
        (Access::Logger, _) => 401,
        (_, Caller::Anonymous | Caller::Logger) => 401,
        (Access::AdminOnly, Caller::Staff) => 403,
        _ => ok,
    }
}

/// Sends one matrix cell. Sign-out cells use a throwaway session so the
/// shared tokens stay valid.
pub async fn call(h: &Harness, e: &Endpoint, caller: Caller) -> (u16, Value) {
    let mut req = h.request(e.method.clone(), e.path, caller);
    if e.access == Access::SessionHolder && matches!(caller, Caller::Admin | Caller::Staff) {
        let (user, pw) = if caller == Caller::Admin { ADMIN } else { STAFF };
        let token = h.sign_in(user, pw).await;
        req = h.client.request(e.method.clone(), h.url(e.path)).bearer_auth(token);
    }
    if let Some(b) = &e.body {
        req = req.json(b);
    }
    if let Some(r) = &e.raw {
        req = req.body(r.clone());
    }
    let res = req.send().await.unwrap();
    let status = res.status().as_u16();
    let text = res.text().await.unwrap();
    (status, if text.is_empty() { Value::Null } else { serde_json::from_str(&text).unwrap_or(Value::String(text)) })
}

fn is_ts(v: &Value) -> bool {
    v.as_str().is_some_and(|s| Timestamp::parse(s).is_ok() && s.ends_with('Z'))
}

fn is_window(v: &Value) -> bool {
    is_ts(&v["start"]) && is_ts(&v["end"])
}

fn is_scope(v: &Value) -> bool {
    let o = match v.as_object() {
        Some(o) if o.len() == 1 => o,
        _ => return false,
    };
    o.get("lift").is_some_and(Value::is_string)
        || o.get("building").is_some_and(Value::is_string)
        || o.get("all_lifts") == Some(&Value::Bool(true))
}

fn is_no_data(v: &Value) -> bool {
    v.as_object().is_some_and(|o| o.len() == 1 && o.get("no_data") == Some(&Value::Bool(true)))
}

fn aggregate(v: &Value, value: impl Fn(&Value) -> bool) -> bool {
    is_no_data(v) || value(v)
}

fn is_pct(v: &Value) -> bool {
    v.as_f64().is_some_and(|p| (0.0..=100.0).contains(&p))
}

fn has_exact_keys(v: &Value, keys: &[&str]) -> bool {
    v.as_object().is_some_and(|o| o.len() == keys.len() && keys.iter().all(|k| o.contains_key(*k)))
}

const MODES: [&str; 4] = ["normal", "out_of_service", "no_communication", "in_maintenance"];

fn is_mode(v: &Value) -> bool {
    v.as_str().is_some_and(|m| MODES.contains(&m))
}

fn is_event_row(v: &Value) -> bool {
    has_exact_keys(
        v,
        &["lift_id", "occurred_time", "direction", "wait_time", "operation_mode_id", "event_type", "floor_position", "door_status"],
    ) && is_ts(&v["occurred_time"])
        && (v["wait_time"].is_null() || v["wait_time"].is_u64())
        && v["operation_mode_id"].as_u64().is_some_and(|m| m < 4)
        && v["floor_position"].is_i64()
}

fn direction_stats(v: &Value) -> bool {
    has_exact_keys(v, &["count", "mean_s", "max_s", "min_s"])
        && v["count"].as_u64().is_some_and(|c| c > 0)
        && v["min_s"].as_f64().unwrap() <= v["mean_s"].as_f64().unwrap()
        && v["mean_s"].as_f64().unwrap() <= v["max_s"].as_f64().unwrap()
}

/// Shape check for a successful response of the named endpoint.
pub fn valid_shape(name: &str, v: &Value) -> Result<(), String> {
    let ok = match name {
        "status" => {
            is_ts(&v["as_of"])
                && v["lifts"].as_array().is_some_and(|a| {
                    !a.is_empty()
                        && a.iter().all(|s| {
                            has_exact_keys(s, &["lift", "working", "mode", "since", "data_age_s"])
                                && s["working"].is_boolean()
                                && is_mode(&s["mode"])
                                && (s["since"].is_null() || is_ts(&s["since"]))
                                && (s["data_age_s"].is_null() || s["data_age_s"].is_i64())
                        })
                })
        }
        "notices" => {
            is_ts(&v["as_of"])
                && v["notices"].as_array().is_some_and(|a| {
                    a.iter().all(|n| {
                        has_exact_keys(n, &["lift", "mode", "since", "message"])
                            && is_mode(&n["mode"])
                            && n["mode"] != "normal"
                            && n["message"].is_string()
                    })
                })
        }
        "panel" => {
            v["building"].is_string()
                && v["from_level"].is_i64()
                && is_window(&v["window"])
                && v["estimates"].as_array().is_some_and(|a| {
                    a.iter().all(|e| e["to_level"].is_i64() && aggregate(&e["estimate_s"], |x| x.as_f64().is_some_and(|s| s >= 0.0)))
                })
        }
        "route" => {
            v["total_s"].as_f64().is_some_and(|t| t >= 0.0)
                && v["legs"].as_array().is_some_and(|legs| {
                    legs.iter().all(|l| {
                        ["stairs", "escalator", "lift", "walk"].contains(&l["mode"].as_str().unwrap_or(""))
                            && l["from"]["building"].is_string()
                            && l["to"]["level"].is_i64()
                            && l["expected_wait_s"].is_f64()
                            && l["travel_s"].is_f64()
                    })
                })
                && {
                    let sum: f64 = v["legs"].as_array().unwrap().iter().map(|l| l["expected_wait_s"].as_f64().unwrap() + l["travel_s"].as_f64().unwrap()).sum();
                    (sum - v["total_s"].as_f64().unwrap()).abs() < 1e-6
                }
        }
        "events" => v["appended"].is_u64(),
        "wait-times" => {
            is_scope(&v["scope"])
                && is_window(&v["window"])
                && v.get("stat").is_none()
                && aggregate(&v["result"]["up"], direction_stats)
                && aggregate(&v["result"]["down"], direction_stats)
        }
        "wait-times-max" => {
            v["stat"] == "max"
                && aggregate(&v["result"]["up"], Value::is_f64)
                && aggregate(&v["result"]["down"], Value::is_f64)
        }
        "hall-calls" => {
            is_scope(&v["scope"])
                && is_window(&v["window"])
                && aggregate(&v["result"], |r| has_exact_keys(r, &["up", "down"]) && r["up"].is_u64() && r["down"].is_u64())
        }
        "direction-split" => {
            is_scope(&v["scope"])
                && aggregate(&v["result"], |r| {
                    has_exact_keys(r, &["up_pct", "down_pct"])
                        && is_pct(&r["up_pct"])
                        && is_pct(&r["down_pct"])
                        && ((r["up_pct"].as_f64().unwrap() + r["down_pct"].as_f64().unwrap()) * 10.0).round() == 1000.0
                })
        }
        "mode-split" => {
            is_scope(&v["scope"])
                && aggregate(&v["result"], |r| {
                    r.as_object().is_some_and(|o| {
                        o.len() == 4
                            && MODES.iter().all(|m| has_exact_keys(&o[*m], &["pct", "lift_seconds"]) && is_pct(&o[*m]["pct"]))
                            && MODES.iter().map(|m| (o[*m]["pct"].as_f64().unwrap() * 10.0).round() as i64).sum::<i64>() == 1000
                    })
                })
        }
        "logs-general" | "logs-hall" | "logs-emergency" => {
            is_scope(&v["scope"])
                && v["rows"].as_array().is_some_and(|rows| {
                    rows.len() as u64 == v["count"].as_u64().unwrap_or(u64::MAX)
                        && rows.iter().all(is_event_row)
                        && match name {
                            "logs-hall" => rows.iter().all(|r| r["event_type"].as_str().unwrap().starts_with("hall_call")),
                            "logs-emergency" => rows.iter().all(|r| r["event_type"] == "emergency"),
                            _ => true,
                        }
                })
        }
        "signin-history" => {
            is_window(&v["window"])
                && v["records"].as_array().is_some_and(|a| {
                    a.iter().all(|r| {
                        r["user_id"].is_string() && is_ts(&r["at"]) && ["success", "failure"].contains(&r["outcome"].as_str().unwrap_or(""))
                    })
                })
        }
        "lift-mode" => v["changed"].is_boolean() && (v["transition"].is_null() || is_mode(&v["transition"]["to_mode"])),
        "session-create" => {
            v["token"].as_str().is_some_and(|t| t.len() >= 32)
                && is_ts(&v["expires_at"])
                && ["admin", "vt_staff"].contains(&v["role"].as_str().unwrap_or(""))
        }
        "session-delete" => v.is_null(),
        _ => return Err(format!("no shape for {name}")),
    };
    if ok {
        Ok(())
    } else {
        Err(format!("{name}: unexpected shape {v}"))
    }
}

/// Error bodies carry a machine-readable code.
pub fn valid_error(v: &Value) -> bool {
    v["error"]["code"].as_str().is_some_and(|c| !c.is_empty()) && v["error"]["message"].is_string()
}
