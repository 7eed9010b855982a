//! Test support: slow reference implementations ("oracles") that the real
//! modules are checked against, and seeded generators for sites and event
//! sequences. Nothing here is used outside tests.

pub mod gen;
pub mod oracle;
pub mod paths;

use vt_core::store::Store;
use vt_core::{LiftEvent, SiteConfig};

/// The three-building example site shipped in `fixtures/`.
pub fn fixture_site() -> SiteConfig {
    SiteConfig::from_toml(include_str!("../../../fixtures/site.toml")).expect("fixture site is valid")
}

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn store_with(events: &[LiftEvent]) -> Store {
    let store = Store::in_memory();
    store.append_batch(events.to_vec()).expect("in-memory append");
    store
}
