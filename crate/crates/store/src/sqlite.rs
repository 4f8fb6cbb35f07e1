//! Durable backend on SQLite. One connection guarded by a mutex; every
//! repository call runs inside its own transaction.

use std::path::Path;
use std::sync::{Mutex, MutexGuard};

use chrono::{DateTime, NaiveDate, SecondsFormat, Utc};
use hemobank_core::{BloodGroup, DonorStatus};
use rusqlite::{params, Connection, ErrorCode, OptionalExtension, Row, Transaction};

use crate::error::{Result, StoreError};
use crate::fault::{run_hook, FaultHook, FaultSite};
use crate::model::*;
use crate::{Migration, Store, SCHEMA_VERSION, TABLES};

const SCHEMA_V1: &str = r#"
CREATE TABLE schema_meta (
    version INTEGER NOT NULL
);

CREATE TABLE users (
    user_id       INTEGER PRIMARY KEY AUTOINCREMENT,
    name          TEXT NOT NULL CHECK (length(trim(name)) >= 1 AND length(name) <= 100),
    email         TEXT NOT NULL COLLATE NOCASE UNIQUE
                  CHECK (length(trim(email)) >= 1 AND length(email) <= 100),
    -- hashed credential; wider than a plaintext column would be
    password_hash TEXT NOT NULL CHECK (length(password_hash) <= 255),
    created_at    TEXT NOT NULL
);

CREATE TABLE donors (
    donor_id           INTEGER PRIMARY KEY AUTOINCREMENT,
    user_id            INTEGER NOT NULL UNIQUE REFERENCES users(user_id) ON DELETE CASCADE,
    phone              TEXT NOT NULL,
    city               TEXT NOT NULL CHECK (length(city) <= 100),
    blood_group        TEXT NOT NULL
                       CHECK (blood_group IN ('A+','A-','B+','B-','AB+','AB-','O+','O-')),
    status             TEXT NOT NULL CHECK (status IN ('ACTIVE','INACTIVE')),
    available          INTEGER NOT NULL CHECK (available IN (0, 1)),
    last_donation_date TEXT
);

CREATE TABLE patients (
    patient_id INTEGER PRIMARY KEY AUTOINCREMENT,
    user_id    INTEGER NOT NULL UNIQUE REFERENCES users(user_id) ON DELETE CASCADE,
    phone      TEXT NOT NULL,
    city       TEXT NOT NULL CHECK (length(city) <= 100)
);

CREATE TABLE admins (
    admin_id INTEGER PRIMARY KEY AUTOINCREMENT,
    user_id  INTEGER NOT NULL UNIQUE REFERENCES users(user_id) ON DELETE CASCADE
);

CREATE TABLE blood_requests (
    request_id     INTEGER PRIMARY KEY AUTOINCREMENT,
    patient_id     INTEGER NOT NULL REFERENCES patients(patient_id) ON DELETE CASCADE,
    blood_group    TEXT NOT NULL
                   CHECK (blood_group IN ('A+','A-','B+','B-','AB+','AB-','O+','O-')),
    quantity_units INTEGER NOT NULL CHECK (quantity_units >= 1),
    city           TEXT NOT NULL CHECK (length(trim(city)) >= 1),
    status         TEXT NOT NULL CHECK (status IN ('OPEN','MATCHED','FULFILLED','CANCELLED')),
    created_at     TEXT NOT NULL
);

-- donor_id and request_id are audit references and survive deletion
CREATE TABLE donations (
    donation_id INTEGER PRIMARY KEY AUTOINCREMENT,
    donor_id    INTEGER NOT NULL,
    request_id  INTEGER,
    donated_on  TEXT NOT NULL
);

CREATE TABLE messages (
    message_id        INTEGER PRIMARY KEY AUTOINCREMENT,
    sender_user_id    INTEGER NOT NULL REFERENCES users(user_id) ON DELETE CASCADE,
    recipient_user_id INTEGER NOT NULL REFERENCES users(user_id) ON DELETE CASCADE,
    body              TEXT NOT NULL CHECK (length(trim(body)) >= 1 AND length(body) <= 2000),
    sent_at           TEXT NOT NULL,
    read              INTEGER NOT NULL DEFAULT 0,
    CHECK (sender_user_id <> recipient_user_id)
);

CREATE TABLE notifications (
    notification_id INTEGER PRIMARY KEY AUTOINCREMENT,
    user_id         INTEGER NOT NULL REFERENCES users(user_id) ON DELETE CASCADE,
    kind            TEXT NOT NULL CHECK (kind IN ('MATCH_FOUND','REQUEST_STATUS','ADMIN_NOTICE')),
    payload         TEXT NOT NULL CHECK (length(payload) <= 500),
    request_id      INTEGER,
    created_at      TEXT NOT NULL,
    read            INTEGER NOT NULL DEFAULT 0
);

CREATE UNIQUE INDEX notifications_match_once
    ON notifications (user_id, request_id)
    WHERE kind = 'MATCH_FOUND' AND request_id IS NOT NULL;

CREATE INDEX messages_pair ON messages (sender_user_id, recipient_user_id);
CREATE INDEX blood_requests_patient ON blood_requests (patient_id);
"#;

const DONOR_VIEW_COLUMNS: &str = "d.donor_id, d.user_id, d.phone, d.city, d.blood_group, \
     d.status, d.available, d.last_donation_date, u.name, u.email";

const DONOR_FILTER: &str = "(?1 IS NULL OR d.blood_group = ?1) AND (?2 IS NULL \
     OR instr(lower(u.name), ?2) > 0 OR instr(lower(d.phone), ?2) > 0 \
     OR instr(lower(u.email), ?2) > 0 OR instr(lower(d.city), ?2) > 0)";

pub struct SqliteStore {
    conn: Mutex<Connection>,
    fault_hook: Option<FaultHook>,
}

impl SqliteStore {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let conn =
            Connection::open(path.as_ref()).map_err(|e| StoreError::Unreachable(e.to_string()))?;
        Self::from_connection(conn)
    }

    pub fn open_in_memory() -> Result<Self> {
        let conn = Connection::open_in_memory().map_err(|e| StoreError::Unreachable(e.to_string()))?;
        Self::from_connection(conn)
    }

    fn from_connection(conn: Connection) -> Result<Self> {
        // Opening is lazy; touch the file so an unusable path fails here.
        conn.execute_batch("PRAGMA foreign_keys = ON; PRAGMA busy_timeout = 5000;")
            .map_err(|e| StoreError::Unreachable(e.to_string()))?;
        conn.query_row("SELECT count(*) FROM sqlite_master", [], |r| r.get::<_, i64>(0))
            .map_err(|e| StoreError::Unreachable(e.to_string()))?;
        Ok(Self { conn: Mutex::new(conn), fault_hook: None })
    }

    pub fn with_fault_hook(mut self, hook: FaultHook) -> Self {
        self.fault_hook = Some(hook);
        self
    }

    fn conn(&self) -> Result<MutexGuard<'_, Connection>> {
        self.conn
            .lock()
            .map_err(|_| StoreError::Backend("sqlite connection lock poisoned".into()))
    }

    fn tx<T>(&self, f: impl FnOnce(&Transaction<'_>) -> Result<T>) -> Result<T> {
        let mut conn = self.conn()?;
        let tx = conn.transaction().map_err(db_err)?;
        let out = f(&tx)?;
        tx.commit().map_err(db_err)?;
        Ok(out)
    }
}

fn db_err(e: rusqlite::Error) -> StoreError {
    if let rusqlite::Error::SqliteFailure(f, msg) = &e {
        let msg = msg.as_deref().unwrap_or_default();
        if msg.contains("no such table") {
            return StoreError::NotMigrated;
        }
        if f.code == ErrorCode::ConstraintViolation && msg.contains("users.email") {
            return StoreError::DuplicateEmail;
        }
        if f.code == ErrorCode::CannotOpen {
            return StoreError::Unreachable(e.to_string());
        }
    }
    StoreError::Backend(e.to_string())
}

fn ts(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Micros, true)
}

fn parse_ts(idx: usize, s: &str) -> rusqlite::Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| conversion(idx, e))
}

fn parse_date(idx: usize, s: &str) -> rusqlite::Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| conversion(idx, e))
}

fn date_text(d: NaiveDate) -> String {
    d.format("%Y-%m-%d").to_string()
}

fn conversion(idx: usize, e: impl std::error::Error + Send + Sync + 'static) -> rusqlite::Error {
    rusqlite::Error::FromSqlConversionFailure(idx, rusqlite::types::Type::Text, Box::new(e))
}

fn parse_col<T>(row: &Row<'_>, idx: usize) -> rusqlite::Result<T>
where
    T: std::str::FromStr,
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let s: String = row.get(idx)?;
    s.parse().map_err(|e| conversion(idx, e))
}

fn user_row(row: &Row<'_>) -> rusqlite::Result<UserRow> {
    Ok(UserRow {
        user_id: row.get(0)?,
        name: row.get(1)?,
        email: row.get(2)?,
        password_hash: row.get(3)?,
        created_at: parse_ts(4, &row.get::<_, String>(4)?)?,
    })
}

fn donor_row(row: &Row<'_>) -> rusqlite::Result<DonorRow> {
    let last: Option<String> = row.get(7)?;
    Ok(DonorRow {
        donor_id: row.get(0)?,
        user_id: row.get(1)?,
        phone: row.get(2)?,
        city: row.get(3)?,
        blood_group: parse_col::<BloodGroup>(row, 4)?,
        status: parse_col::<DonorStatus>(row, 5)?,
        available: row.get(6)?,
        last_donation_date: last.map(|s| parse_date(7, &s)).transpose()?,
    })
}

fn donor_view(row: &Row<'_>) -> rusqlite::Result<DonorView> {
    Ok(DonorView { donor: donor_row(row)?, name: row.get(8)?, email: row.get(9)? })
}

fn patient_row(row: &Row<'_>) -> rusqlite::Result<PatientRow> {
    Ok(PatientRow {
        patient_id: row.get(0)?,
        user_id: row.get(1)?,
        phone: row.get(2)?,
        city: row.get(3)?,
    })
}

fn request_row(row: &Row<'_>) -> rusqlite::Result<BloodRequestRow> {
    let status: String = row.get(5)?;
    Ok(BloodRequestRow {
        request_id: row.get(0)?,
        patient_id: row.get(1)?,
        blood_group: parse_col::<BloodGroup>(row, 2)?,
        quantity_units: row.get(3)?,
        city: row.get(4)?,
        status: status.parse().map_err(|e: StoreError| conversion(5, e))?,
        created_at: parse_ts(6, &row.get::<_, String>(6)?)?,
    })
}

fn donation_row(row: &Row<'_>) -> rusqlite::Result<DonationRow> {
    Ok(DonationRow {
        donation_id: row.get(0)?,
        donor_id: row.get(1)?,
        request_id: row.get(2)?,
        donated_on: parse_date(3, &row.get::<_, String>(3)?)?,
    })
}

fn message_row(row: &Row<'_>) -> rusqlite::Result<MessageRow> {
    Ok(MessageRow {
        message_id: row.get(0)?,
        sender_user_id: row.get(1)?,
        recipient_user_id: row.get(2)?,
        body: row.get(3)?,
        sent_at: parse_ts(4, &row.get::<_, String>(4)?)?,
        read: row.get(5)?,
    })
}

fn notification_row(row: &Row<'_>) -> rusqlite::Result<NotificationRow> {
    let kind: String = row.get(2)?;
    Ok(NotificationRow {
        notification_id: row.get(0)?,
        user_id: row.get(1)?,
        kind: kind.parse().map_err(|e: StoreError| conversion(2, e))?,
        payload: row.get(3)?,
        request_id: row.get(4)?,
        created_at: parse_ts(5, &row.get::<_, String>(5)?)?,
        read: row.get(6)?,
    })
}

const USER_COLUMNS: &str = "user_id, name, email, password_hash, created_at";
const DONOR_COLUMNS: &str =
    "donor_id, user_id, phone, city, blood_group, status, available, last_donation_date";
const REQUEST_COLUMNS: &str =
    "request_id, patient_id, blood_group, quantity_units, city, status, created_at";
const MESSAGE_COLUMNS: &str = "message_id, sender_user_id, recipient_user_id, body, sent_at, read";
const NOTIFICATION_COLUMNS: &str =
    "notification_id, user_id, kind, payload, request_id, created_at, read";

fn user_exists(tx: &Connection, user_id: i64) -> Result<bool> {
    tx.query_row("SELECT 1 FROM users WHERE user_id = ?1", [user_id], |_| Ok(()))
        .optional()
        .map(|r| r.is_some())
        .map_err(db_err)
}

fn insert_user_tx(tx: &Connection, user: NewUser) -> Result<UserRow> {
    user.check()?;
    let created_at = now_micros();
    tx.query_row(
        &format!(
            "INSERT INTO users (name, email, password_hash, created_at) VALUES (?1, ?2, ?3, ?4) \
             RETURNING {USER_COLUMNS}"
        ),
        params![user.name, user.email, user.password_hash, ts(&created_at)],
        user_row,
    )
    .map_err(db_err)
}

fn upsert_role_tx(tx: &Connection, user_id: i64, payload: RolePayload) -> Result<RoleRow> {
    payload.check()?;
    if !user_exists(tx, user_id)? {
        return Err(StoreError::UnknownUser);
    }
    match payload {
        RolePayload::Donor(p) => tx
            .query_row(
                &format!(
                    "INSERT INTO donors (user_id, phone, city, blood_group, status, available) \
                     VALUES (?1, ?2, ?3, ?4, ?5, ?6) \
                     ON CONFLICT (user_id) DO UPDATE SET phone = excluded.phone, \
                     city = excluded.city, blood_group = excluded.blood_group, \
                     status = excluded.status, available = excluded.available \
                     RETURNING {DONOR_COLUMNS}"
                ),
                params![
                    user_id,
                    p.phone,
                    p.city,
                    p.blood_group.as_str(),
                    p.status.as_str(),
                    p.available
                ],
                donor_row,
            )
            .map(RoleRow::Donor)
            .map_err(db_err),
        RolePayload::Patient(p) => tx
            .query_row(
                "INSERT INTO patients (user_id, phone, city) VALUES (?1, ?2, ?3) \
                 ON CONFLICT (user_id) DO UPDATE SET phone = excluded.phone, city = excluded.city \
                 RETURNING patient_id, user_id, phone, city",
                params![user_id, p.phone, p.city],
                patient_row,
            )
            .map(RoleRow::Patient)
            .map_err(db_err),
        RolePayload::Admin => {
            tx.execute(
                "INSERT INTO admins (user_id) VALUES (?1) ON CONFLICT (user_id) DO NOTHING",
                [user_id],
            )
            .map_err(db_err)?;
            tx.query_row(
                "SELECT admin_id, user_id FROM admins WHERE user_id = ?1",
                [user_id],
                |r| Ok(AdminRow { admin_id: r.get(0)?, user_id: r.get(1)? }),
            )
            .map(RoleRow::Admin)
            .map_err(db_err)
        }
    }
}

fn get_request_tx(tx: &Connection, request_id: i64) -> Result<Option<BloodRequestRow>> {
    tx.query_row(
        &format!("SELECT {REQUEST_COLUMNS} FROM blood_requests WHERE request_id = ?1"),
        [request_id],
        request_row,
    )
    .optional()
    .map_err(db_err)
}

fn set_status_tx(tx: &Connection, request_id: i64, status: RequestStatus) -> Result<BloodRequestRow> {
    tx.query_row(
        &format!(
            "UPDATE blood_requests SET status = ?2 WHERE request_id = ?1 RETURNING {REQUEST_COLUMNS}"
        ),
        params![request_id, status.as_str()],
        request_row,
    )
    .map_err(db_err)
}

impl Store for SqliteStore {
    fn migrate(&self) -> Result<Migration> {
        let mut conn = self.conn()?;
        let tx = conn.transaction().map_err(db_err)?;
        let existing: Vec<String> = {
            let mut stmt = tx
                .prepare(
                    "SELECT name FROM sqlite_master WHERE type = 'table' \
                     AND name NOT LIKE 'sqlite_%'",
                )
                .map_err(db_err)?;
            let names = stmt.query_map([], |r| r.get(0)).map_err(db_err)?;
            names.collect::<rusqlite::Result<_>>().map_err(db_err)?
        };

        if existing.iter().any(|t| t == "schema_meta") {
            let version: Option<u32> = tx
                .query_row("SELECT version FROM schema_meta", [], |r| r.get(0))
                .optional()
                .map_err(db_err)?;
            return match version {
                Some(v) if v == SCHEMA_VERSION => Ok(Migration { version: v, applied: false }),
                Some(v) => Err(StoreError::UnknownSchema(format!("version {v}"))),
                None => Err(StoreError::UnknownSchema("schema_meta has no version".into())),
            };
        }
        if let Some(stray) = existing.first() {
            return Err(StoreError::UnknownSchema(format!(
                "unversioned table `{stray}` present; refusing to migrate"
            )));
        }

        tx.execute_batch(SCHEMA_V1).map_err(db_err)?;
        tx.execute("INSERT INTO schema_meta (version) VALUES (?1)", [SCHEMA_VERSION])
            .map_err(db_err)?;
        tx.commit().map_err(db_err)?;
        debug_assert!(TABLES.len() == 8);
        Ok(Migration { version: SCHEMA_VERSION, applied: true })
    }

    fn schema_version(&self) -> Result<Option<u32>> {
        let conn = self.conn()?;
        let has_meta: bool = conn
            .query_row(
                "SELECT 1 FROM sqlite_master WHERE type = 'table' AND name = 'schema_meta'",
                [],
                |_| Ok(()),
            )
            .optional()
            .map_err(db_err)?
            .is_some();
        if !has_meta {
            return Ok(None);
        }
        conn.query_row("SELECT version FROM schema_meta", [], |r| r.get(0))
            .optional()
            .map_err(db_err)
    }

    fn insert_user(&self, user: NewUser) -> Result<UserRow> {
        self.tx(|tx| insert_user_tx(tx, user))
    }

    fn get_user(&self, user_id: i64) -> Result<Option<UserRow>> {
        self.conn()?
            .query_row(
                &format!("SELECT {USER_COLUMNS} FROM users WHERE user_id = ?1"),
                [user_id],
                user_row,
            )
            .optional()
            .map_err(db_err)
    }

    fn find_user_by_email(&self, email: &str) -> Result<Option<UserRow>> {
        self.conn()?
            .query_row(
                &format!("SELECT {USER_COLUMNS} FROM users WHERE email = ?1"),
                [email],
                user_row,
            )
            .optional()
            .map_err(db_err)
    }

    fn list_users(&self, page: PageRequest) -> Result<Page<UserRow>> {
        self.tx(|tx| {
            let total: u64 =
                tx.query_row("SELECT count(*) FROM users", [], |r| r.get(0)).map_err(db_err)?;
            let mut stmt = tx
                .prepare(&format!(
                    "SELECT {USER_COLUMNS} FROM users ORDER BY user_id LIMIT ?1 OFFSET ?2"
                ))
                .map_err(db_err)?;
            let items = stmt
                .query_map(params![page.limit(), page.offset()], user_row)
                .map_err(db_err)?
                .collect::<rusqlite::Result<_>>()
                .map_err(db_err)?;
            Ok(Page { items, total })
        })
    }

    fn delete_user(&self, user_id: i64) -> Result<()> {
        self.tx(|tx| {
            let n = tx.execute("DELETE FROM users WHERE user_id = ?1", [user_id]).map_err(db_err)?;
            if n == 0 {
                return Err(StoreError::UnknownUser);
            }
            Ok(())
        })
    }

    fn roles_of(&self, user_id: i64) -> Result<Vec<RoleKind>> {
        let conn = self.conn()?;
        let mut roles = Vec::new();
        for (kind, table) in [
            (RoleKind::Admin, "admins"),
            (RoleKind::Donor, "donors"),
            (RoleKind::Patient, "patients"),
        ] {
            let found = conn
                .query_row(&format!("SELECT 1 FROM {table} WHERE user_id = ?1"), [user_id], |_| {
                    Ok(())
                })
                .optional()
                .map_err(db_err)?;
            if found.is_some() {
                roles.push(kind);
            }
        }
        Ok(roles)
    }

    fn upsert_role(&self, user_id: i64, payload: RolePayload) -> Result<RoleRow> {
        self.tx(|tx| upsert_role_tx(tx, user_id, payload))
    }

    fn create_user_with_role(
        &self,
        user: NewUser,
        payload: RolePayload,
    ) -> Result<(UserRow, RoleRow)> {
        payload.check()?;
        self.tx(|tx| {
            let user = insert_user_tx(tx, user)?;
            let role = upsert_role_tx(tx, user.user_id, payload)?;
            Ok((user, role))
        })
    }

    fn patient_for_user(&self, user_id: i64) -> Result<Option<PatientRow>> {
        self.conn()?
            .query_row(
                "SELECT patient_id, user_id, phone, city FROM patients WHERE user_id = ?1",
                [user_id],
                patient_row,
            )
            .optional()
            .map_err(db_err)
    }

    fn get_patient(&self, patient_id: i64) -> Result<Option<PatientRow>> {
        self.conn()?
            .query_row(
                "SELECT patient_id, user_id, phone, city FROM patients WHERE patient_id = ?1",
                [patient_id],
                patient_row,
            )
            .optional()
            .map_err(db_err)
    }

    fn get_donor(&self, donor_id: i64) -> Result<Option<DonorView>> {
        self.conn()?
            .query_row(
                &format!(
                    "SELECT {DONOR_VIEW_COLUMNS} FROM donors d JOIN users u ON u.user_id = d.user_id \
                     WHERE d.donor_id = ?1"
                ),
                [donor_id],
                donor_view,
            )
            .optional()
            .map_err(db_err)
    }

    fn donor_for_user(&self, user_id: i64) -> Result<Option<DonorView>> {
        self.conn()?
            .query_row(
                &format!(
                    "SELECT {DONOR_VIEW_COLUMNS} FROM donors d JOIN users u ON u.user_id = d.user_id \
                     WHERE d.user_id = ?1"
                ),
                [user_id],
                donor_view,
            )
            .optional()
            .map_err(db_err)
    }

    fn update_donor(&self, donor_id: i64, payload: DonorPayload) -> Result<DonorRow> {
        payload.check()?;
        self.tx(|tx| {
            tx.query_row(
                &format!(
                    "UPDATE donors SET phone = ?2, city = ?3, blood_group = ?4, status = ?5, \
                     available = ?6 WHERE donor_id = ?1 RETURNING {DONOR_COLUMNS}"
                ),
                params![
                    donor_id,
                    payload.phone,
                    payload.city,
                    payload.blood_group.as_str(),
                    payload.status.as_str(),
                    payload.available
                ],
                donor_row,
            )
            .optional()
            .map_err(db_err)?
            .ok_or(StoreError::UnknownDonor)
        })
    }

    fn find_donors(&self, filter: &DonorFilter, page: PageRequest) -> Result<Page<DonorView>> {
        let group = filter.blood_group.map(BloodGroup::as_str);
        let search = filter.normalized_search();
        self.tx(|tx| {
            let total: u64 = tx
                .query_row(
                    &format!(
                        "SELECT count(*) FROM donors d JOIN users u ON u.user_id = d.user_id \
                         WHERE {DONOR_FILTER}"
                    ),
                    params![group, search],
                    |r| r.get(0),
                )
                .map_err(db_err)?;
            let mut stmt = tx
                .prepare(&format!(
                    "SELECT {DONOR_VIEW_COLUMNS} FROM donors d JOIN users u ON u.user_id = d.user_id \
                     WHERE {DONOR_FILTER} ORDER BY d.donor_id LIMIT ?3 OFFSET ?4"
                ))
                .map_err(db_err)?;
            let items = stmt
                .query_map(params![group, search, page.limit(), page.offset()], donor_view)
                .map_err(db_err)?
                .collect::<rusqlite::Result<_>>()
                .map_err(db_err)?;
            Ok(Page { items, total })
        })
    }

    fn all_donors(&self) -> Result<Vec<DonorView>> {
        let conn = self.conn()?;
        let mut stmt = conn
            .prepare(&format!(
                "SELECT {DONOR_VIEW_COLUMNS} FROM donors d JOIN users u ON u.user_id = d.user_id \
                 ORDER BY d.donor_id"
            ))
            .map_err(db_err)?;
        let rows = stmt
            .query_map([], donor_view)
            .map_err(db_err)?
            .collect::<rusqlite::Result<_>>()
            .map_err(db_err)?;
        Ok(rows)
    }

    fn delete_donor(&self, donor_id: i64) -> Result<()> {
        self.tx(|tx| {
            let n =
                tx.execute("DELETE FROM donors WHERE donor_id = ?1", [donor_id]).map_err(db_err)?;
            if n == 0 {
                return Err(StoreError::UnknownDonor);
            }
            Ok(())
        })
    }

    fn record_donation(&self, donation: NewDonation, today: NaiveDate) -> Result<RecordedDonation> {
        self.tx(|tx| {
            let exists = tx
                .query_row("SELECT 1 FROM donors WHERE donor_id = ?1", [donation.donor_id], |_| {
                    Ok(())
                })
                .optional()
                .map_err(db_err)?;
            if exists.is_none() {
                return Err(StoreError::UnknownDonor);
            }
            if donation.donated_on > today {
                return Err(StoreError::FutureDate);
            }
            let request = match donation.request_id {
                Some(id) => {
                    let r = get_request_tx(tx, id)?.ok_or(StoreError::UnknownRequest)?;
                    if r.status.is_terminal() {
                        return Err(StoreError::IllegalRequestState {
                            from: r.status,
                            to: RequestStatus::Fulfilled,
                        });
                    }
                    Some(r)
                }
                None => None,
            };

            let row = tx
                .query_row(
                    "INSERT INTO donations (donor_id, request_id, donated_on) VALUES (?1, ?2, ?3) \
                     RETURNING donation_id, donor_id, request_id, donated_on",
                    params![donation.donor_id, donation.request_id, date_text(donation.donated_on)],
                    donation_row,
                )
                .map_err(db_err)?;
            run_hook(&self.fault_hook, FaultSite::DonationInserted)?;

            // ISO dates compare correctly as text.
            let donor = tx
                .query_row(
                    &format!(
                        "UPDATE donors SET last_donation_date = \
                         CASE WHEN last_donation_date IS NULL OR last_donation_date < ?2 \
                         THEN ?2 ELSE last_donation_date END \
                         WHERE donor_id = ?1 RETURNING {DONOR_COLUMNS}"
                    ),
                    params![donation.donor_id, date_text(donation.donated_on)],
                    donor_row,
                )
                .map_err(db_err)?;
            run_hook(&self.fault_hook, FaultSite::DonorCooldownUpdated)?;

            let fulfilled_request = match request {
                Some(r) if r.status == RequestStatus::Matched => {
                    Some(set_status_tx(tx, r.request_id, RequestStatus::Fulfilled)?)
                }
                _ => None,
            };
            Ok(RecordedDonation { donation: row, donor, fulfilled_request })
        })
    }

    fn list_donations(&self, donor_id: i64) -> Result<Vec<DonationRow>> {
        let conn = self.conn()?;
        let mut stmt = conn
            .prepare(
                "SELECT donation_id, donor_id, request_id, donated_on FROM donations \
                 WHERE donor_id = ?1 ORDER BY donation_id",
            )
            .map_err(db_err)?;
        let rows = stmt
            .query_map([donor_id], donation_row)
            .map_err(db_err)?
            .collect::<rusqlite::Result<_>>()
            .map_err(db_err)?;
        Ok(rows)
    }

    fn insert_request(&self, request: NewBloodRequest) -> Result<BloodRequestRow> {
        request.check()?;
        self.tx(|tx| {
            let patient = tx
                .query_row(
                    "SELECT 1 FROM patients WHERE patient_id = ?1",
                    [request.patient_id],
                    |_| Ok(()),
                )
                .optional()
                .map_err(db_err)?;
            if patient.is_none() {
                return Err(StoreError::UnknownPatient);
            }
            tx.query_row(
                &format!(
                    "INSERT INTO blood_requests \
                     (patient_id, blood_group, quantity_units, city, status, created_at) \
                     VALUES (?1, ?2, ?3, ?4, 'OPEN', ?5) RETURNING {REQUEST_COLUMNS}"
                ),
                params![
                    request.patient_id,
                    request.blood_group.as_str(),
                    request.quantity_units,
                    request.city,
                    ts(&now_micros())
                ],
                request_row,
            )
            .map_err(db_err)
        })
    }

    fn get_request(&self, request_id: i64) -> Result<Option<BloodRequestRow>> {
        let conn = self.conn()?;
        get_request_tx(&conn, request_id)
    }

    fn set_request_status(&self, request_id: i64, to: RequestStatus) -> Result<BloodRequestRow> {
        self.tx(|tx| {
            let current = get_request_tx(tx, request_id)?.ok_or(StoreError::UnknownRequest)?;
            if !current.status.can_transition_to(to) {
                return Err(StoreError::IllegalRequestState { from: current.status, to });
            }
            set_status_tx(tx, request_id, to)
        })
    }

    fn list_requests_by_patient(&self, patient_id: i64) -> Result<Vec<BloodRequestRow>> {
        let conn = self.conn()?;
        let mut stmt = conn
            .prepare(&format!(
                "SELECT {REQUEST_COLUMNS} FROM blood_requests WHERE patient_id = ?1 \
                 ORDER BY request_id"
            ))
            .map_err(db_err)?;
        let rows = stmt
            .query_map([patient_id], request_row)
            .map_err(db_err)?
            .collect::<rusqlite::Result<_>>()
            .map_err(db_err)?;
        Ok(rows)
    }

    fn list_requests(
        &self,
        status: Option<RequestStatus>,
        page: PageRequest,
    ) -> Result<Page<BloodRequestRow>> {
        let status = status.map(RequestStatus::as_str);
        self.tx(|tx| {
            let total: u64 = tx
                .query_row(
                    "SELECT count(*) FROM blood_requests WHERE ?1 IS NULL OR status = ?1",
                    [status],
                    |r| r.get(0),
                )
                .map_err(db_err)?;
            let mut stmt = tx
                .prepare(&format!(
                    "SELECT {REQUEST_COLUMNS} FROM blood_requests WHERE ?1 IS NULL OR status = ?1 \
                     ORDER BY request_id LIMIT ?2 OFFSET ?3"
                ))
                .map_err(db_err)?;
            let items = stmt
                .query_map(params![status, page.limit(), page.offset()], request_row)
                .map_err(db_err)?
                .collect::<rusqlite::Result<_>>()
                .map_err(db_err)?;
            Ok(Page { items, total })
        })
    }

    fn insert_message(&self, message: NewMessage) -> Result<MessageRow> {
        message.check()?;
        self.tx(|tx| {
            if !user_exists(tx, message.sender_user_id)? {
                return Err(StoreError::UnknownUser);
            }
            if !user_exists(tx, message.recipient_user_id)? {
                return Err(StoreError::UnknownRecipient);
            }
            tx.query_row(
                &format!(
                    "INSERT INTO messages (sender_user_id, recipient_user_id, body, sent_at) \
                     VALUES (?1, ?2, ?3, ?4) RETURNING {MESSAGE_COLUMNS}"
                ),
                params![
                    message.sender_user_id,
                    message.recipient_user_id,
                    message.body,
                    ts(&now_micros())
                ],
                message_row,
            )
            .map_err(db_err)
        })
    }

    fn list_conversation(&self, a: i64, b: i64, page: PageRequest) -> Result<Vec<MessageRow>> {
        let conn = self.conn()?;
        let mut stmt = conn
            .prepare(&format!(
                "SELECT {MESSAGE_COLUMNS} FROM messages \
                 WHERE (sender_user_id = ?1 AND recipient_user_id = ?2) \
                    OR (sender_user_id = ?2 AND recipient_user_id = ?1) \
                 ORDER BY sent_at, message_id LIMIT ?3 OFFSET ?4"
            ))
            .map_err(db_err)?;
        let rows = stmt
            .query_map(params![a, b, page.limit(), page.offset()], message_row)
            .map_err(db_err)?
            .collect::<rusqlite::Result<_>>()
            .map_err(db_err)?;
        Ok(rows)
    }

    fn mark_read(&self, reader: i64, message_ids: &[i64]) -> Result<u64> {
        self.tx(|tx| {
            let mut stmt = tx
                .prepare(
                    "UPDATE messages SET read = 1 \
                     WHERE message_id = ?1 AND recipient_user_id = ?2 AND read = 0",
                )
                .map_err(db_err)?;
            let mut changed = 0;
            for id in message_ids {
                changed += stmt.execute(params![id, reader]).map_err(db_err)? as u64;
            }
            Ok(changed)
        })
    }

    fn conversations(&self, user_id: i64) -> Result<Vec<ConversationSummary>> {
        let conn = self.conn()?;
        let mut stmt = conn
            .prepare(
                "SELECT CASE WHEN m.sender_user_id = ?1 THEN m.recipient_user_id \
                        ELSE m.sender_user_id END AS partner, \
                        u.name, max(m.sent_at), \
                        sum(CASE WHEN m.recipient_user_id = ?1 AND m.read = 0 THEN 1 ELSE 0 END) \
                 FROM messages m JOIN users u ON u.user_id = \
                      (CASE WHEN m.sender_user_id = ?1 THEN m.recipient_user_id \
                       ELSE m.sender_user_id END) \
                 WHERE m.sender_user_id = ?1 OR m.recipient_user_id = ?1 \
                 GROUP BY partner ORDER BY max(m.sent_at) DESC, partner",
            )
            .map_err(db_err)?;
        let rows = stmt
            .query_map([user_id], |r| {
                Ok(ConversationSummary {
                    partner_user_id: r.get(0)?,
                    partner_name: r.get(1)?,
                    last_sent_at: parse_ts(2, &r.get::<_, String>(2)?)?,
                    unread: r.get(3)?,
                })
            })
            .map_err(db_err)?
            .collect::<rusqlite::Result<_>>()
            .map_err(db_err)?;
        Ok(rows)
    }

    fn insert_notification(&self, n: NewNotification) -> Result<Option<NotificationRow>> {
        n.check()?;
        self.tx(|tx| {
            if !user_exists(tx, n.user_id)? {
                return Err(StoreError::UnknownUser);
            }
            tx.query_row(
                &format!(
                    "INSERT INTO notifications (user_id, kind, payload, request_id, created_at) \
                     VALUES (?1, ?2, ?3, ?4, ?5) ON CONFLICT DO NOTHING \
                     RETURNING {NOTIFICATION_COLUMNS}"
                ),
                params![n.user_id, n.kind.as_str(), n.payload, n.request_id, ts(&now_micros())],
                notification_row,
            )
            .optional()
            .map_err(db_err)
        })
    }

    fn list_notifications(&self, user_id: i64) -> Result<Vec<NotificationRow>> {
        let conn = self.conn()?;
        let mut stmt = conn
            .prepare(&format!(
                "SELECT {NOTIFICATION_COLUMNS} FROM notifications WHERE user_id = ?1 \
                 ORDER BY created_at DESC, notification_id DESC"
            ))
            .map_err(db_err)?;
        let rows = stmt
            .query_map([user_id], notification_row)
            .map_err(db_err)?
            .collect::<rusqlite::Result<_>>()
            .map_err(db_err)?;
        Ok(rows)
    }

    fn mark_notification_read(&self, user_id: i64, notification_id: i64) -> Result<NotificationRow> {
        self.tx(|tx| {
            tx.query_row(
                &format!(
                    "UPDATE notifications SET read = 1 WHERE notification_id = ?1 AND user_id = ?2 \
                     RETURNING {NOTIFICATION_COLUMNS}"
                ),
                params![notification_id, user_id],
                notification_row,
            )
            .optional()
            .map_err(db_err)?
            .ok_or(StoreError::UnknownNotification)
        })
    }
}
