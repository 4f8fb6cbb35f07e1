//! The `hemobank` operations command.

use std::future::Future;
use std::io::Write;
use std::net::{Ipv4Addr, SocketAddr};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use hemobank_api::seed::{seed, SeedProfile};
use hemobank_api::{AppState, ServiceConfig, DEFAULT_PORT};
use hemobank_auth::{Auth, AuthConfig, HashCost, DEFAULT_TOKEN_TTL_HOURS};
use hemobank_core::SystemClock;
use hemobank_store::{Migration, RolePayload, Store, SCHEMA_VERSION};
use tokio::net::TcpListener;

#[derive(Debug, Parser)]
#[command(name = "hemobank", version, about = "Blood bank donor service operations")]
pub struct Cli {
    /// Store location: sqlite://<path>, sqlite::memory: or memory:
    #[arg(long, env = "DATABASE_URL", global = true, hide_env_values = true)]
    pub database_url: Option<String>,

    /// Argon2 iterations per password hash.
    #[arg(long, env = "PASSWORD_HASH_COST", global = true, value_parser = clap::value_parser!(u32).range(1..=64))]
    pub password_hash_cost: Option<u32>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create or upgrade the schema.
    Migrate,
    /// Insert demo accounts; safe to repeat.
    Seed {
        #[arg(long, default_value = "demo", value_parser = parse_profile)]
        profile: SeedProfile,
    },
    /// Create an administrator and print its one-time password.
    CreateAdmin {
        #[arg(long)]
        name: String,
        #[arg(long)]
        email: String,
    },
    /// Run the HTTP service until interrupted.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "PORT", default_value_t = DEFAULT_PORT, value_parser = clap::value_parser!(u16).range(1..))]
    pub port: u16,

    /// Address to bind.
    #[arg(long, env = "BIND_ADDR", default_value_t = Ipv4Addr::UNSPECIFIED.into())]
    pub bind: std::net::IpAddr,

    /// Browser origin allowed by CORS.
    #[arg(long, env = "UI_ORIGIN")]
    pub ui_origin: Option<String>,

    #[arg(long, env = "TOKEN_TTL_HOURS", default_value_t = DEFAULT_TOKEN_TTL_HOURS, value_parser = clap::value_parser!(i64).range(1..))]
    pub token_ttl_hours: i64,

    /// Demo data to load at startup, mostly useful with a memory: store.
    #[arg(long, default_value = "none", value_parser = parse_profile)]
    pub seed: SeedProfile,
}

fn parse_profile(raw: &str) -> Result<SeedProfile, String> {
    raw.parse()
}

fn hash_cost(iterations: Option<u32>) -> HashCost {
    let mut cost = HashCost::default();
    if let Some(t) = iterations {
        cost.iterations = t;
    }
    cost
}

fn open_store(url: Option<&str>) -> anyhow::Result<Arc<dyn Store>> {
    let url = url.context("no database configured; pass --database-url or set DATABASE_URL")?;
    hemobank_store::open(url).with_context(|| format!("cannot open store {url:?}"))
}

/// Opens the store and refuses to continue on an unmigrated one.
fn open_migrated(url: Option<&str>) -> anyhow::Result<Arc<dyn Store>> {
    let store = open_store(url)?;
    match store.schema_version()? {
        Some(SCHEMA_VERSION) => Ok(store),
        Some(v) => bail!("store is at schema version {v}, expected {SCHEMA_VERSION}; run `hemobank migrate`"),
        None => bail!("store is not migrated; run `hemobank migrate` first"),
    }
}

fn auth_for(store: &Arc<dyn Store>, cost: HashCost) -> Auth {
    Auth::new(
        Arc::clone(store),
        Arc::new(SystemClock),
        AuthConfig { hash_cost: cost, ..AuthConfig::default() },
    )
}

pub fn migrate(url: Option<&str>, out: &mut dyn Write) -> anyhow::Result<()> {
    let store = open_store(url)?;
    let Migration { version, applied } = store.migrate()?;
    if applied {
        writeln!(out, "migrated to version {version}")?;
    } else {
        writeln!(out, "already at version {version}")?;
    }
    Ok(())
}

pub fn seed_cmd(
    url: Option<&str>,
    cost: HashCost,
    profile: SeedProfile,
    out: &mut dyn Write,
) -> anyhow::Result<()> {
    let store = open_migrated(url)?;
    let auth = auth_for(&store, cost);
    let created = seed(store.as_ref(), &auth, profile)?;
    writeln!(out, "seed profile {profile}: {created} account(s) created")?;
    Ok(())
}

pub fn create_admin(
    url: Option<&str>,
    cost: HashCost,
    name: &str,
    email: &str,
    out: &mut dyn Write,
) -> anyhow::Result<()> {
    let store = open_migrated(url)?;
    let auth = auth_for(&store, cost);
    let (user, _, password) = auth.provision(name, email, RolePayload::Admin).map_err(describe)?;
    writeln!(out, "created admin {} (user id {})", user.email, user.user_id)?;
    writeln!(out, "one-time password: {}", password.expose())?;
    Ok(())
}

fn describe(e: hemobank_auth::AuthError) -> anyhow::Error {
    match e {
        hemobank_auth::AuthError::Validation(report) => {
            let mut parts: Vec<String> = report.missing_fields.iter().map(|f| format!("{f} is required")).collect();
            parts.extend(report.malformed_fields.iter().map(|m| format!("{} is malformed ({})", m.field, m.reason)));
            anyhow::anyhow!("validation failed: {}", parts.join(", "))
        }
        other => other.into(),
    }
}

pub async fn serve(
    url: Option<&str>,
    cost: HashCost,
    args: &ServeArgs,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> anyhow::Result<()> {
    let store = open_store(url)?;
    // A memory store starts empty on every run, so it is migrated here.
    let ephemeral =
        url.is_some_and(|u| matches!(u.trim(), "memory:" | "memory://" | "mem:" | "sqlite::memory:"));
    if ephemeral {
        store.migrate()?;
    }
    let store = match store.schema_version()? {
        Some(SCHEMA_VERSION) => store,
        _ => bail!("store is not migrated; run `hemobank migrate` first"),
    };
    let config = ServiceConfig {
        token_ttl: chrono::Duration::hours(args.token_ttl_hours),
        hash_cost: cost,
        ui_origin: args.ui_origin.clone(),
        ..ServiceConfig::default()
    };
    let state = AppState::new(Arc::clone(&store), Arc::new(SystemClock), &config);
    if args.seed != SeedProfile::None {
        let created = seed(store.as_ref(), &state.auth, args.seed)?;
        tracing::info!(profile = %args.seed, created, "seeded");
    }
    let addr = SocketAddr::new(args.bind, args.port);
    let listener = TcpListener::bind(addr).await.with_context(|| format!("cannot listen on {addr}"))?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    hemobank_api::serve(listener, state, shutdown).await?;
    tracing::info!("stopped");
    Ok(())
}

/// Resolves on ctrl-c or, on Unix, SIGTERM.
pub async fn termination() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let url = cli.database_url.as_deref();
    let cost = hash_cost(cli.password_hash_cost);
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Migrate => migrate(url, &mut out),
        Command::Seed { profile } => seed_cmd(url, cost, profile, &mut out),
        Command::CreateAdmin { name, email } => create_admin(url, cost, &name, &email, &mut out),
        Command::Serve(args) => {
            drop(out);
            let rt = tokio::runtime::Runtime::new().context("cannot start runtime")?;
            rt.block_on(serve(url, cost, &args, termination()))
        }
    }
}
