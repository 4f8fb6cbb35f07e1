//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

mod common;

use std::future::Future;
use std::pin::Pin;
use std::sync::Arc;
use std::time::{Duration as StdDuration, Instant};

use axum::http::StatusCode;
use chrono::{Duration, NaiveDate};
use common::{authz, names, Harness};
use hemobank_core::{is_compatible, BloodGroup, Clock};
use hemobank_store::{
    DonorPayload, FaultInjector, FaultSite, MemoryStore, NewUser, NotificationKind, RolePayload,
    SqliteStore, Store,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::json;

type Outcome = Result<String, String>;
type Check = fn() -> Pin<Box<dyn Future<Output = Outcome> + Send>>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(started: Instant, budget: StdDuration) -> Result<StdDuration, String> {
    let took = started.elapsed();
    if took < budget {
        Ok(took)
    } else {
        Err(format!("took {took:?}, budget {budget:?}"))
    }
}

/// Antigens read straight off the printed symbol.
fn symbol_antigens(symbol: &str) -> (bool, bool, bool) {
    let (abo, rh) = symbol.split_at(symbol.len() - 1);
    (abo.contains('A'), abo.contains('B'), rh == "+")
}

fn subset_oracle(donor: BloodGroup, recipient: BloodGroup) -> bool {
    let d = symbol_antigens(donor.as_str());
    let r = symbol_antigens(recipient.as_str());
    (!d.0 || r.0) && (!d.1 || r.1) && (!d.2 || r.2)
}

async fn compatibility() -> Outcome {
    let started = Instant::now();
    let mut compatible = 0;
    for donor in BloodGroup::ALL {
        for recipient in BloodGroup::ALL {
            let got = is_compatible(donor, recipient);
            ensure!(got == subset_oracle(donor, recipient), "{donor} -> {recipient} disagrees");
            compatible += usize::from(got);
        }
    }
    ensure!(compatible == 27, "{compatible} compatible pairs, expected 27");
    ensure!(BloodGroup::ALL.iter().all(|&r| is_compatible(BloodGroup::ONeg, r)), "O- is not universal");
    ensure!(BloodGroup::ALL.iter().all(|&d| is_compatible(d, BloodGroup::AbPos)), "AB+ does not receive all");
    let took = within(started, StdDuration::from_secs(1))?;
    Ok(format!("64 pairs, 27 compatible, {took:?}"))
}

async fn cooldown() -> Outcome {
    let started = Instant::now();
    let h = Harness::seeded();
    let patient = h.long_session("patient1@test.com");
    let request = h
        .post("/api/requests", Some(&patient), json!({ "blood_group": "AB-", "quantity_units": 1, "city": "Far" }))
        .await
        .body["request_id"]
        .as_i64()
        .ok_or("request not created")?;
    let path = format!("/api/requests/{request}/matches");
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let base = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let forced = [0, 89, 90, -1, 1, 91];
    let mut hidden_seen = 0;
    for trial in 0..1000 {
        let donated = base + Duration::days(rng.gen_range(0..2000));
        let offset = forced.get(trial).copied().unwrap_or_else(|| rng.gen_range(-120..240));
        let probe = donated + Duration::days(offset);

        let (_, role) = h
            .store
            .create_user_with_role(
                NewUser { name: format!("c{trial}"), email: format!("c{trial}@x.org"), password_hash: "-".into() },
                RolePayload::Donor(DonorPayload {
                    phone: "12345".into(),
                    city: "Far".into(),
                    blood_group: BloodGroup::ONeg,
                    status: hemobank_core::DonorStatus::Active,
                    available: true,
                }),
            )
            .map_err(|e| e.to_string())?;
        let donor_id = role.role_id();
        h.store
            .record_donation(
                hemobank_store::NewDonation { donor_id, donated_on: donated, request_id: None },
                donated,
            )
            .map_err(|e| e.to_string())?;
        h.clock.set(probe.and_hms_opt(12, 0, 0).unwrap().and_utc());

        let res = h.get(&path, Some(&patient)).await;
        ensure!(res.status == StatusCode::OK, "matches answered {}", res.status);
        let present = res.body.as_array().unwrap().iter().any(|i| i["donor_id"] == donor_id);
        let in_window = donated <= probe && probe < donated + Duration::days(90);
        ensure!(
            present != in_window,
            "trial {trial}: donated {donated}, probe {probe}, present={present}"
        );
        hidden_seen += usize::from(in_window);
        h.store.delete_donor(donor_id).map_err(|e| e.to_string())?;
    }
    let took = within(started, StdDuration::from_secs(5))?;
    Ok(format!("1000 pairs ({hidden_seen} inside the window), {took:?}"))
}

async fn demo_flow() -> Outcome {
    let started = Instant::now();
    let h = Harness::seeded();
    let patient = h.long_session("patient1@test.com");
    let donor1 = h.long_session("donor1@test.com");
    let res = h
        .post("/api/requests", Some(&patient), json!({ "blood_group": "A+", "quantity_units": 1, "city": "Sukot" }))
        .await;
    let id = res.body["request_id"].as_i64().ok_or("request not created")?;
    let path = format!("/api/requests/{id}/matches");

    let first = names(&h.get(&path, Some(&patient)).await.body);
    ensure!(first == ["Donor1", "Donor2"], "initial matches {first:?}");
    let today = h.clock.today();
    let res = h.post("/api/donations", Some(&donor1), json!({ "donated_on": today })).await;
    ensure!(res.status == StatusCode::CREATED, "donation answered {}", res.status);
    let after = names(&h.get(&path, Some(&patient)).await.body);
    ensure!(after == ["Donor2"], "after donation {after:?}");
    h.clock.advance_days(90);
    let back = names(&h.get(&path, Some(&patient)).await.body);
    ensure!(back == ["Donor1", "Donor2"], "after 90 days {back:?}");
    let took = within(started, StdDuration::from_secs(10))?;
    Ok(format!("[Donor1, Donor2] -> [Donor2] -> [Donor1, Donor2], {took:?}"))
}

async fn contention() -> Outcome {
    let h = Arc::new(Harness::new());
    let mut tasks = Vec::new();
    for i in 0..20 {
        let h = Arc::clone(&h);
        tasks.push(tokio::spawn(async move {
            let body = json!({ "name": format!("r{i}"), "email": "race@x.org", "password": "longenough" });
            let res = h.post("/api/register", None, body).await;
            (res.status, res.code().to_owned())
        }));
    }
    let (mut ok, mut dup) = (0, 0);
    for t in tasks {
        match t.await.map_err(|e| e.to_string())? {
            (StatusCode::CREATED, _) => ok += 1,
            (StatusCode::CONFLICT, c) if c == "DUPLICATE_EMAIL" => dup += 1,
            other => return Err(format!("unexpected {other:?}")),
        }
    }
    ensure!(ok == 1 && dup == 19, "{ok} created, {dup} duplicates");
    Ok("1 created, 19 DUPLICATE_EMAIL".into())
}

async fn authorization() -> Outcome {
    let (untested, unknown) = authz::coverage_gaps();
    ensure!(untested.is_empty() && unknown.is_empty(), "table gaps {untested:?} {unknown:?}");
    let rows = authz::rows().len();
    let deviations = authz::sweep().await;
    ensure!(deviations.is_empty(), "{} deviations: {deviations:?}", deviations.len());
    Ok(format!("{rows} endpoints x 4 callers, 0 deviations"))
}

async fn idempotence() -> Outcome {
    let h = Harness::seeded();
    let patient = h.long_session("patient1@test.com");
    let id = h
        .post("/api/requests", Some(&patient), json!({ "blood_group": "A+", "quantity_units": 1, "city": "Sukot" }))
        .await
        .body["request_id"]
        .as_i64()
        .ok_or("request not created")?;
    let mut matched = Vec::new();
    for _ in 0..5 {
        let res = h.get(&format!("/api/requests/{id}/matches"), Some(&patient)).await;
        matched = res.body.as_array().unwrap().iter().map(|i| i["user_id"].as_i64().unwrap()).collect();
    }
    ensure!(matched.len() == 2, "expected two matched donors, got {}", matched.len());
    for user in &matched {
        let n = h
            .store
            .list_notifications(*user)
            .map_err(|e| e.to_string())?
            .iter()
            .filter(|n| n.kind == NotificationKind::MatchFound && n.request_id == Some(id))
            .count();
        ensure!(n == 1, "user {user} has {n} MATCH_FOUND rows");
    }
    Ok("5 calls, 1 MATCH_FOUND per matched donor".into())
}

async fn admin_filters() -> Outcome {
    let h = Harness::seeded();
    let admin = h.long_session("admin1@test.com");
    let by_group = h.get("/api/admin/donors?blood_group=A-", Some(&admin)).await.body;
    ensure!(names(&by_group["items"]) == ["Donor2"], "A- gave {}", by_group);
    let by_city = h.get("/api/admin/donors?q=Sukot", Some(&admin)).await.body;
    ensure!(names(&by_city["items"]) == ["Donor1"], "q=Sukot gave {}", by_city);
    let none = h.get("/api/admin/donors?q=zzzz-nothing", Some(&admin)).await.body;
    ensure!(none["total"] == 0 && none["items"] == json!([]), "empty query gave {}", none);
    Ok("A- -> [Donor2], q=Sukot -> [Donor1], no hit -> total 0".into())
}

/// Returns (donations, donor's last date, request status) for the checks.
fn snapshot(store: &dyn Store, donor_id: i64, request_id: i64) -> (usize, Option<NaiveDate>, String) {
    (
        store.list_donations(donor_id).unwrap().len(),
        store.get_donor(donor_id).unwrap().unwrap().donor.last_donation_date,
        store.get_request(request_id).unwrap().unwrap().status.to_string(),
    )
}

async fn atomicity_on(name: &str, store: Arc<dyn Store>, faults: &FaultInjector) -> Result<String, String> {
    let h = Harness::with_store(store);
    hemobank_api::seed::seed(h.store.as_ref(), &h.state.auth, hemobank_api::seed::SeedProfile::Demo)
        .map_err(|e| e.to_string())?;
    let patient = h.long_session("patient1@test.com");
    let donor = h.long_session("donor1@test.com");
    let donor_id = h.donor_id("donor1@test.com");
    let mut rng = StdRng::seed_from_u64(100);
    let (mut both, mut neither) = (0, 0);
    for trial in 0..100 {
        // Step past the previous cooldown so every trial can match Donor1.
        h.clock.advance_days(91);
        let id = h
            .post("/api/requests", Some(&patient), json!({ "blood_group": "A+", "quantity_units": 1, "city": "Sukot" }))
            .await
            .body["request_id"]
            .as_i64()
            .ok_or("request not created")?;
        h.get(&format!("/api/requests/{id}/matches"), Some(&patient)).await;
        let before = snapshot(h.store.as_ref(), donor_id, id);
        let site = match rng.gen_range(0..3) {
            0 => Some(FaultSite::DonationInserted),
            1 => Some(FaultSite::DonorCooldownUpdated),
            _ => None,
        };
        if let Some(site) = site {
            faults.arm(site);
        }
        let res = h.post("/api/donations", Some(&donor), json!({ "request_id": id })).await;
        let after = snapshot(h.store.as_ref(), donor_id, id);
        let applied = after.0 == before.0 + 1
            && after.1 == Some(h.clock.today())
            && after.2 == "FULFILLED";
        let untouched = after == before;
        ensure!(applied != untouched, "{name} trial {trial}: partial state {before:?} -> {after:?}");
        ensure!(
            applied == res.status.is_success() && applied == site.is_none(),
            "{name} trial {trial}: status {} with fault {site:?}",
            res.status
        );
        if applied { both += 1 } else { neither += 1 }
    }
    Ok(format!("{name} {both} committed + {neither} rolled back"))
}

async fn atomicity() -> Outcome {
    let faults = FaultInjector::new();
    let memory = atomicity_on("memory", Arc::new(MemoryStore::with_fault_hook(faults.hook())), &faults).await?;
    let faults = FaultInjector::new();
    let sqlite = SqliteStore::open_in_memory().map_err(|e| e.to_string())?.with_fault_hook(faults.hook());
    let sqlite = atomicity_on("sqlite", Arc::new(sqlite), &faults).await?;
    Ok(format!("100/100 all-or-nothing on each backend ({memory}; {sqlite})"))
}

fn main() {
    let checks: [(&str, Check); 8] = [
        ("compatibility oracle", || Box::pin(compatibility())),
        ("cooldown visibility", || Box::pin(cooldown())),
        ("demo seed end-to-end", || Box::pin(demo_flow())),
        ("uniqueness under contention", || Box::pin(contention())),
        ("authorization matrix", || Box::pin(authorization())),
        ("notification idempotence", || Box::pin(idempotence())),
        ("admin filters", || Box::pin(admin_filters())),
        ("donation atomicity", || Box::pin(atomicity())),
    ];
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(8).enable_all().build().unwrap();
    let mut failed = 0;
    for (name, check) in checks {
        match rt.block_on(async { tokio::spawn(async move { check().await }).await }) {
            Ok(Ok(detail)) => println!("PASS  {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
            Err(panic) => {
                failed += 1;
                println!("FAIL  {name}: panicked: {panic}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
