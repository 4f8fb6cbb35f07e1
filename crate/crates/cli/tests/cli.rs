use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use hemobank_store::{DonorFilter, PageRequest};

fn hemobank(db: Option<&str>) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hemobank"));
    cmd.env_remove("DATABASE_URL").env_remove("PORT").env("PASSWORD_HASH_COST", "1").env("RUST_LOG", "warn");
    if let Some(db) = db {
        cmd.args(["--database-url", db]);
    }
    cmd
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    (
        status.code().unwrap_or(-1),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

fn db_url(dir: &Path) -> String {
    format!("sqlite://{}", dir.join("hemobank.db").display())
}

#[test]
fn migrate_reports_version_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let url = db_url(dir.path());
    let (code, out, _) = run(hemobank(Some(&url)).arg("migrate"));
    assert_eq!((code, out.trim()), (0, "migrated to version 1"));
    let (code, out, _) = run(hemobank(Some(&url)).arg("migrate"));
    assert_eq!((code, out.trim()), (0, "already at version 1"));
}

#[test]
fn database_url_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(hemobank(None).env("DATABASE_URL", db_url(dir.path())).arg("migrate"));
    assert_eq!((code, out.trim()), (0, "migrated to version 1"));
}

#[test]
fn bad_or_missing_url_is_an_operational_failure() {
    let (code, _, err) = run(hemobank(Some("postgres://nowhere")).arg("migrate"));
    assert_eq!(code, 1);
    assert!(err.contains("cannot open store"), "{err}");
    let (code, _, _) = run(hemobank(Some("sqlite:///no/such/dir/x.db")).arg("migrate"));
    assert_eq!(code, 1);
    let (code, _, err) = run(hemobank(None).arg("migrate"));
    assert_eq!(code, 1);
    assert!(err.contains("DATABASE_URL"), "{err}");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(hemobank(None).arg("frobnicate")).0, 2);
    assert_eq!(run(hemobank(None).args(["seed", "--profile", "huge"])).0, 2);
    assert_eq!(run(hemobank(None).args(["create-admin", "--name", "x"])).0, 2);
    assert_eq!(run(hemobank(None).args(["serve", "--port", "0"])).0, 2);
    assert_eq!(run(hemobank(None).args(["serve", "--port", "70000"])).0, 2);
}

#[test]
fn every_command_has_help() {
    for sub in ["migrate", "seed", "create-admin", "serve"] {
        let (code, out, _) = run(hemobank(None).args([sub, "--help"]));
        assert_eq!(code, 0, "{sub}");
        assert!(out.contains("Usage"), "{sub}: {out}");
    }
}

fn donors(url: &str) -> Vec<String> {
    let store = hemobank_store::open(url).unwrap();
    let page = store.find_donors(&DonorFilter::default(), PageRequest::default()).unwrap();
    page.items.into_iter().map(|v| v.name).collect()
}

#[test]
fn seed_is_idempotent_and_needs_a_migrated_store() {
    let dir = tempfile::tempdir().unwrap();
    let url = db_url(dir.path());
    let (code, _, err) = run(hemobank(Some(&url)).args(["seed", "--profile", "demo"]));
    assert_eq!(code, 1);
    assert!(err.contains("not migrated"), "{err}");

    run(hemobank(Some(&url)).arg("migrate"));
    let (code, out, _) = run(hemobank(Some(&url)).args(["seed", "--profile", "none"]));
    assert_eq!(code, 0);
    assert!(out.contains("0 account"), "{out}");
    assert!(donors(&url).is_empty());

    let (code, out, _) = run(hemobank(Some(&url)).args(["seed", "--profile", "demo"]));
    assert_eq!(code, 0);
    assert!(out.contains("4 account"), "{out}");
    assert_eq!(donors(&url), ["Donor1", "Donor2"]);

    let (code, out, _) = run(hemobank(Some(&url)).args(["seed", "--profile", "demo"]));
    assert_eq!(code, 0);
    assert!(out.contains("0 account"), "{out}");
    assert_eq!(donors(&url), ["Donor1", "Donor2"]);

    let store = hemobank_store::open(&url).unwrap();
    let d1 = store.find_donors(&DonorFilter::default(), PageRequest::default()).unwrap().items[0].clone();
    assert_eq!(
        (d1.email.as_str(), d1.donor.phone.as_str(), d1.donor.city.as_str(), d1.donor.blood_group.as_str()),
        ("donor1@test.com", "0987654321", "Sukot", "A+")
    );
}

#[test]
fn create_admin_prints_password_once() {
    let dir = tempfile::tempdir().unwrap();
    let url = db_url(dir.path());
    run(hemobank(Some(&url)).arg("migrate"));
    let (code, out, _) = run(hemobank(Some(&url)).args(["create-admin", "--name", "Root", "--email", "root@x.org"]));
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().filter(|l| l.contains("password")).collect();
    assert_eq!(lines.len(), 1, "{out}");
    let password = lines[0].rsplit(' ').next().unwrap();
    assert!(password.len() >= 16);

    let store = hemobank_store::open(&url).unwrap();
    let user = store.find_user_by_email("root@x.org").unwrap().unwrap();
    assert_eq!(store.roles_of(user.user_id).unwrap(), [hemobank_store::RoleKind::Admin]);
    assert!(!user.password_hash.contains(password));

    let (code, _, err) = run(hemobank(Some(&url)).args(["create-admin", "--name", "Root", "--email", "ROOT@x.org"]));
    assert_eq!(code, 1);
    assert!(err.contains("already"), "{err}");
    let (code, _, err) = run(hemobank(Some(&url)).args(["create-admin", "--name", " ", "--email", "n@x.org"]));
    assert_eq!(code, 1);
    assert!(err.contains("name"), "{err}");
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn http_get(port: u16, path: &str) -> Option<String> {
    let mut stream = TcpStream::connect(("127.0.0.1", port)).ok()?;
    stream.set_read_timeout(Some(Duration::from_secs(5))).ok()?;
    write!(stream, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").ok()?;
    let mut response = String::new();
    stream.read_to_string(&mut response).ok()?;
    Some(response)
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn start(url: &str, port: u16) -> Server {
    let child = hemobank(Some(url))
        .args(["serve", "--bind", "127.0.0.1", "--port", &port.to_string(), "--seed", "demo"])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let server = Server(child);
    let deadline = Instant::now() + Duration::from_secs(20);
    while TcpStream::connect(("127.0.0.1", port)).is_err() {
        assert!(Instant::now() < deadline, "server did not start");
        std::thread::sleep(Duration::from_millis(50));
    }
    server
}

#[test]
fn serve_answers_and_refuses_an_unmigrated_store() {
    let port = free_port();
    let _server = start("memory:", port);
    let response = http_get(port, "/api/openapi.json").unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains("\"openapi\""));
    let response = http_get(port, "/api/me").unwrap();
    assert!(response.starts_with("HTTP/1.1 401"), "{response}");

    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(hemobank(Some(&db_url(dir.path()))).args(["serve", "--port", &free_port().to_string()]));
    assert_eq!(code, 1);
    assert!(err.contains("not migrated"), "{err}");
}

#[test]
fn serve_on_an_occupied_port_fails() {
    let holder = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = holder.local_addr().unwrap().port();
    let (code, _, err) = run(hemobank(Some("memory:")).args(["serve", "--bind", "127.0.0.1", "--port", &port.to_string()]));
    assert_eq!(code, 1);
    assert!(err.contains("cannot listen"), "{err}");
}

#[cfg(unix)]
#[test]
fn serve_stops_cleanly_on_sigterm() {
    let port = free_port();
    let mut server = start("memory:", port);
    let started = Instant::now();
    let status = Command::new("kill").args(["-TERM", &server.0.id().to_string()]).status().unwrap();
    assert!(status.success());
    let exit = loop {
        if let Some(exit) = server.0.try_wait().unwrap() {
            break exit;
        }
        assert!(started.elapsed() < Duration::from_secs(5), "no exit within 5 s");
        std::thread::sleep(Duration::from_millis(20));
    };
    assert_eq!(exit.code(), Some(0));
}
