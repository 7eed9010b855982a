//! The `vtops` command line: serve, simulate, ingest-file, report, route and
//! user management.

pub mod render;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use vt_api::auth::Role;
use vt_api::config::{ConfigError, CONFIG_ENV};
use vt_api::{ServiceConfig, UserAccount, UserDirectory};
use vt_core::analytics::{Analytics, AnalyticsError, LogKind};
use vt_core::ingest::{IngestError, Ingestor};
use vt_core::planner::{build_graph, plan_route, PlanError, RouteQuery};
use vt_core::simulator::{render_output, simulate, SimConfig, SimError};
use vt_core::site::SiteError;
use vt_core::status::{sink_from_spec, MemorySink, NotificationSink, StatusBoard};
use vt_core::store::Store;
use vt_core::{DomainError, LiftId, Location, QueryScope, SiteConfig, StoreError, TimeWindow, Timestamp};

use render::{Format, Stat};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("storage: {0}")]
    Storage(String),
    #[error("{0}")]
    NoRoute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Storage(_) => 3,
            CliError::NoRoute(_) => 4,
        }
    }
}

impl From<DomainError> for CliError {
    fn from(e: DomainError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        CliError::Storage(e.to_string())
    }
}

impl From<SiteError> for CliError {
    fn from(e: SiteError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<AnalyticsError> for CliError {
    fn from(e: AnalyticsError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Storage(s) => CliError::Storage(s.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::NoRoute { .. } => CliError::NoRoute(e.to_string()),
            PlanError::UnknownNode(_) => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Storage(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "vtops", version, about = "Lift fleet operations: telemetry, analytics, status and routing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = CONFIG_ENV)]
        config: PathBuf,
    },
    /// Generate a synthetic event log.
    Simulate {
        /// Simulation TOML.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a JSON-lines event log into the store.
    IngestFile {
        #[command(flatten)]
        ctx: Context,
        path: PathBuf,
    },
    /// Print an analytics result.
    Report {
        #[command(flatten)]
        ctx: Context,
        #[command(subcommand)]
        report: Report,
    },
    /// Plan one route.
    Route {
        #[command(flatten)]
        ctx: Context,
        /// Origin as BUILDING:LEVEL.
        #[arg(long)]
        from: String,
        /// Destination as BUILDING:LEVEL.
        #[arg(long)]
        to: String,
        /// Time the journey starts; defaults to now.
        #[arg(long)]
        at: Option<String>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Manage portal accounts.
    User {
        #[command(flatten)]
        ctx: Context,
        #[command(subcommand)]
        action: UserAction,
    },
}

/// Where the site file and store live: a service config, or explicit paths.
#[derive(Debug, Clone, Args)]
pub struct Context {
    #[arg(long, env = CONFIG_ENV, global = true)]
    pub config: Option<PathBuf>,
    /// Site topology TOML; overrides the config.
    #[arg(long, global = true)]
    pub site: Option<PathBuf>,
    /// Store directory; overrides the config.
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Filter {
    #[arg(long, conflicts_with = "lift")]
    pub building: Option<String>,
    #[arg(long)]
    pub lift: Option<String>,
    /// Window start (RFC 3339). Defaults to the first stored event.
    #[arg(long)]
    pub start: Option<String>,
    /// Window end, exclusive. Defaults to just after the last stored event.
    #[arg(long)]
    pub end: Option<String>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Report {
    WaitTimes {
        #[command(flatten)]
        filter: Filter,
        #[arg(long, value_enum)]
        stat: Option<Stat>,
    },
    HallCalls {
        #[command(flatten)]
        filter: Filter,
    },
    DirectionSplit {
        #[command(flatten)]
        filter: Filter,
    },
    ModeSplit {
        #[command(flatten)]
        filter: Filter,
    },
    Logs {
        /// general, hall or emergency.
        #[arg(long, default_value = "general")]
        kind: String,
        #[command(flatten)]
        filter: Filter,
    },
    /// Display-panel travel estimates from one level.
    Travel {
        #[arg(long)]
        building: String,
        #[arg(long)]
        from: i32,
        /// Single destination; every other level if absent.
        #[arg(long)]
        to: Option<i32>,
        #[arg(long)]
        start: Option<String>,
        #[arg(long)]
        end: Option<String>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
}

#[derive(Debug, Subcommand)]
pub enum UserAction {
    Add {
        #[arg(long)]
        id: String,
        #[arg(long)]
        name: String,
        /// admin or vt_staff.
        #[arg(long)]
        role: String,
        #[arg(long, env = "VTOPS_PASSWORD", hide_env_values = true)]
        password: String,
    },
    List,
    Disable {
        #[arg(long)]
        id: String,
    },
}

struct Paths {
    site: PathBuf,
    store: PathBuf,
    service: Option<ServiceConfig>,
}

impl Context {
    fn paths(&self) -> Result<Paths, CliError> {
        let service = self.config.as_ref().map(ServiceConfig::load).transpose()?;
        let site = self.site.clone().or_else(|| service.as_ref().map(|c| c.site_path()));
        let store = self.store.clone().or_else(|| service.as_ref().map(|c| c.store_path()));
        match (site, store) {
            (Some(site), Some(store)) => Ok(Paths { site, store, service }),
            _ => Err(CliError::Invalid(format!("give --config (or {CONFIG_ENV}), or both --site and --store"))),
        }
    }

    fn open(&self) -> Result<(SiteConfig, Store, Paths), CliError> {
        let paths = self.paths()?;
        let site = SiteConfig::load(&paths.site)?;
        let store = Store::open(&paths.store, &site)?;
        Ok((site, store, paths))
    }
}

fn parse_ts(s: &Option<String>) -> Result<Option<Timestamp>, CliError> {
    Ok(s.as_deref().map(Timestamp::parse).transpose()?)
}

/// Without bounds the window spans the stored events, so output depends on
/// the store alone.
fn window(store: &Store, start: &Option<String>, end: &Option<String>) -> Result<TimeWindow, CliError> {
    let events = store.all_events();
    let first = events.iter().map(|r| r.event.occurred_at()).min().unwrap_or(Timestamp::from_unix(0));
    let after_last = events.iter().map(|r| r.event.occurred_at()).max().unwrap_or(first).plus_secs(1);
    let start = parse_ts(start)?.unwrap_or(first);
    let end = parse_ts(end)?.unwrap_or(after_last);
    Ok(TimeWindow::new(start, end)?)
}

fn scope(site: &SiteConfig, f: &Filter) -> Result<QueryScope, CliError> {
    let scope = match (&f.lift, &f.building) {
        (Some(l), _) => QueryScope::SingleLift(LiftId::from_str(l)?),
        (None, Some(b)) => QueryScope::Building(b.clone()),
        (None, None) => QueryScope::AllLifts,
    };
    Ok(scope.checked(site)?)
}

fn report(site: &SiteConfig, store: &Store, report: &Report) -> Result<String, CliError> {
    let a = Analytics::new(store, site);
    let prepared = |f: &Filter| -> Result<(QueryScope, TimeWindow), CliError> {
        Ok((scope(site, f)?, window(store, &f.start, &f.end)?))
    };
    Ok(match report {
        Report::WaitTimes { filter, stat } => {
            let (s, w) = prepared(filter)?;
            render::wait_times(&s, &w, &a.wait_time_stats(&s, &w), *stat, filter.format)
        }
        Report::HallCalls { filter } => {
            let (s, w) = prepared(filter)?;
            render::hall_calls(&s, &w, &a.hall_call_count(&s, &w), filter.format)
        }
        Report::DirectionSplit { filter } => {
            let (s, w) = prepared(filter)?;
            render::direction_split(&s, &w, &a.direction_percentages(&s, &w), filter.format)
        }
        Report::ModeSplit { filter } => {
            let (s, w) = prepared(filter)?;
            render::mode_split(&s, &w, &a.mode_percentages(&s, &w), filter.format)
        }
        Report::Logs { kind, filter } => {
            let log_kind = LogKind::from_str(kind).map_err(CliError::Invalid)?;
            let (s, w) = prepared(filter)?;
            render::event_log(kind, &s, &w, &a.event_log(log_kind, &s, &w), filter.format)
        }
        Report::Travel { building, from, to, start, end, format } => {
            let w = window(store, start, end)?;
            let estimates = match to {
                Some(to) => vec![(*to, a.estimated_travel_time(building, *from, *to, &w)?)],
                None => a.panel_estimates(building, *from, &w)?,
            };
            render::travel(building, *from, &w, &estimates, *format)
        }
    })
}

fn sink_for(paths: &Paths) -> Result<Box<dyn NotificationSink>, CliError> {
    match &paths.service {
        Some(cfg) => sink_from_spec(&cfg.notification_sink, &cfg.base_dir).map_err(CliError::Invalid),
        None => Ok(Box::new(MemorySink::new())),
    }
}

fn ingest_file(ctx: &Context, path: &Path) -> Result<String, CliError> {
    let (site, store, paths) = ctx.open()?;
    let bytes = std::fs::read(path).map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let site = Arc::new(site);
    let store = Arc::new(store);
    let board = Arc::new(StatusBoard::open(site.clone(), store.clone(), sink_for(&paths)?)?);
    let ingest = Ingestor::new(site, store, board, Default::default());
    let frame = ingest.decode(&bytes, "ingest-file", None)?;
    let appended = ingest.ingest_frame(frame, Timestamp::now())?;
    Ok(format!("appended {appended} events\n"))
}

fn route(ctx: &Context, from: &str, to: &str, at: &Option<String>, format: Format) -> Result<String, CliError> {
    let (site, store, _) = ctx.open()?;
    let origin = Location::from_str(from)?;
    let destination = Location::from_str(to)?;
    let at = parse_ts(at)?.unwrap_or_else(Timestamp::now);
    let site = Arc::new(site);
    let store = Arc::new(store);
    let board = StatusBoard::open(site.clone(), store.clone(), Box::new(MemorySink::new()))?;
    let waits = Analytics::new(&store, &site);
    let plan = plan_route(&RouteQuery::new(origin, destination, at), &build_graph(&site), &waits, &board)?;
    Ok(render::route(&plan, format))
}

fn user(ctx: &Context, action: &UserAction) -> Result<String, CliError> {
    let paths = ctx.paths()?;
    let users = UserDirectory::open(Some(&paths.store))?;
    Ok(match action {
        UserAction::Add { id, name, role, password } => {
            let role = Role::from_str(role).map_err(CliError::Invalid)?;
            if password.is_empty() {
                return Err(CliError::Invalid("password must not be empty".into()));
            }
            users.put(UserAccount::new(id, name, role, password))?;
            format!("added {id} ({})\n", role.as_str())
        }
        UserAction::List => {
            let mut out = String::new();
            for u in users.list_all() {
                let state = if u.disabled { "disabled" } else { "active" };
                out.push_str(&format!("{}\t{}\t{}\t{state}\n", u.user_id, u.role.as_str(), u.display_name));
            }
            out
        }
        UserAction::Disable { id } => {
            if !users.disable(id)? {
                return Err(CliError::Invalid(format!("no user {id:?}")));
            }
            format!("disabled {id}\n")
        }
    })
}

fn serve(config: &Path) -> Result<String, CliError> {
    let cfg = ServiceConfig::load(config)?.with_env()?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(vt_api::serve(cfg)).map_err(|e| match e {
        vt_api::ServeError::Store(s) => CliError::Storage(s.to_string()),
        other => CliError::Invalid(other.to_string()),
    })?;
    Ok(String::new())
}

fn simulate_cmd(config: &Path, seed: Option<u64>, out: &Option<PathBuf>, stdout: &mut dyn Write) -> Result<String, CliError> {
    let mut cfg = SimConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let events = simulate(&cfg)?;
    let text = render_output(&cfg, &events);
    match out {
        Some(path) => {
            std::fs::write(path, &text)?;
            Ok(format!("wrote {} events to {}\n", events.len(), path.display()))
        }
        None => {
            stdout.write_all(text.as_bytes())?;
            Ok(String::new())
        }
    }
}

/// Runs one command and writes its output to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = match &cli.command {
        Command::Serve { config } => serve(config)?,
        Command::Simulate { config, seed, out } => simulate_cmd(config, *seed, out, stdout)?,
        Command::IngestFile { ctx, path } => ingest_file(ctx, path)?,
        Command::Report { ctx, report: r } => {
            let (site, store, _) = ctx.open()?;
            report(&site, &store, r)?
        }
        Command::Route { ctx, from, to, at, format } => route(ctx, from, to, at, *format)?,
        Command::User { ctx, action } => user(ctx, action)?,
    };
    stdout.write_all(text.as_bytes())?;
    Ok(())
}
