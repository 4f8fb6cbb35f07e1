//! In-process backend. All state sits behind one mutex, so every method is a
//! serializable transaction. Multi-write operations stage their changes on a
//! copy and swap it in only on success.

use std::collections::BTreeMap;
use std::sync::{Mutex, MutexGuard};

use chrono::NaiveDate;

use crate::error::{Result, StoreError};
use crate::fault::{run_hook, FaultHook, FaultSite};
use crate::model::*;
use crate::{Migration, Store, SCHEMA_VERSION};

#[derive(Default)]
pub struct MemoryStore {
    state: Mutex<State>,
    fault_hook: Option<FaultHook>,
}

#[derive(Debug, Clone, Default)]
struct State {
    version: Option<u32>,
    users: BTreeMap<i64, UserRow>,
    donors: BTreeMap<i64, DonorRow>,
    patients: BTreeMap<i64, PatientRow>,
    admins: BTreeMap<i64, AdminRow>,
    requests: BTreeMap<i64, BloodRequestRow>,
    donations: BTreeMap<i64, DonationRow>,
    messages: BTreeMap<i64, MessageRow>,
    notifications: BTreeMap<i64, NotificationRow>,
    seq: Sequences,
}

// Last id handed out per table; never decremented, so ids are not reused.
#[derive(Debug, Clone, Default)]
struct Sequences {
    user: i64,
    donor: i64,
    patient: i64,
    admin: i64,
    request: i64,
    donation: i64,
    message: i64,
    notification: i64,
}

fn next(seq: &mut i64) -> i64 {
    *seq += 1;
    *seq
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// A store that consults `hook` at every [`FaultSite`].
    pub fn with_fault_hook(hook: FaultHook) -> Self {
        Self { state: Mutex::default(), fault_hook: Some(hook) }
    }

    fn lock(&self) -> Result<MutexGuard<'_, State>> {
        let guard = self
            .state
            .lock()
            .map_err(|_| StoreError::Backend("memory store lock poisoned".into()))?;
        if guard.version.is_none() {
            return Err(StoreError::NotMigrated);
        }
        Ok(guard)
    }

    /// Runs `f` against a staged copy and commits only if it succeeds.
    fn transact<T>(&self, f: impl FnOnce(&mut State) -> Result<T>) -> Result<T> {
        let mut guard = self.lock()?;
        let mut staged = guard.clone();
        let out = f(&mut staged)?;
        *guard = staged;
        Ok(out)
    }
}

impl State {
    fn email_taken(&self, email: &str) -> bool {
        self.users.values().any(|u| u.email.eq_ignore_ascii_case(email))
    }

    fn insert_user(&mut self, user: NewUser) -> Result<UserRow> {
        user.check()?;
        if self.email_taken(&user.email) {
            return Err(StoreError::DuplicateEmail);
        }
        let row = UserRow {
            user_id: next(&mut self.seq.user),
            name: user.name,
            email: user.email,
            password_hash: user.password_hash,
            created_at: now_micros(),
        };
        self.users.insert(row.user_id, row.clone());
        Ok(row)
    }

    fn upsert_role(&mut self, user_id: i64, payload: RolePayload) -> Result<RoleRow> {
        if !self.users.contains_key(&user_id) {
            return Err(StoreError::UnknownUser);
        }
        payload.check()?;
        Ok(match payload {
            RolePayload::Donor(p) => {
                let existing = self.donors.values().find(|d| d.user_id == user_id).cloned();
                let row = match existing {
                    Some(mut d) => {
                        apply_donor_payload(&mut d, p);
                        d
                    }
                    None => DonorRow {
                        donor_id: next(&mut self.seq.donor),
                        user_id,
                        phone: p.phone,
                        city: p.city,
                        blood_group: p.blood_group,
                        status: p.status,
                        available: p.available,
                        last_donation_date: None,
                    },
                };
                self.donors.insert(row.donor_id, row.clone());
                RoleRow::Donor(row)
            }
            RolePayload::Patient(p) => {
                let patient_id = match self.patients.values().find(|r| r.user_id == user_id) {
                    Some(r) => r.patient_id,
                    None => next(&mut self.seq.patient),
                };
                let row = PatientRow { patient_id, user_id, phone: p.phone, city: p.city };
                self.patients.insert(patient_id, row.clone());
                RoleRow::Patient(row)
            }
            RolePayload::Admin => {
                let row = match self.admins.values().find(|r| r.user_id == user_id) {
                    Some(r) => r.clone(),
                    None => {
                        let row = AdminRow { admin_id: next(&mut self.seq.admin), user_id };
                        self.admins.insert(row.admin_id, row.clone());
                        row
                    }
                };
                RoleRow::Admin(row)
            }
        })
    }

    fn view(&self, donor: &DonorRow) -> DonorView {
        let user = &self.users[&donor.user_id];
        DonorView { donor: donor.clone(), name: user.name.clone(), email: user.email.clone() }
    }

    fn notify_exists(&self, n: &NewNotification) -> bool {
        n.is_deduplicated()
            && self.notifications.values().any(|row| {
                row.user_id == n.user_id && row.kind == n.kind && row.request_id == n.request_id
            })
    }
}

fn apply_donor_payload(d: &mut DonorRow, p: DonorPayload) {
    d.phone = p.phone;
    d.city = p.city;
    d.blood_group = p.blood_group;
    d.status = p.status;
    d.available = p.available;
}

impl Store for MemoryStore {
    fn migrate(&self) -> Result<Migration> {
        let mut guard = self
            .state
            .lock()
            .map_err(|_| StoreError::Backend("memory store lock poisoned".into()))?;
        match guard.version {
            Some(v) if v == SCHEMA_VERSION => Ok(Migration { version: v, applied: false }),
            Some(v) => Err(StoreError::UnknownSchema(format!("version {v}"))),
            None => {
                guard.version = Some(SCHEMA_VERSION);
                Ok(Migration { version: SCHEMA_VERSION, applied: true })
            }
        }
    }

    fn schema_version(&self) -> Result<Option<u32>> {
        Ok(self
            .state
            .lock()
            .map_err(|_| StoreError::Backend("memory store lock poisoned".into()))?
            .version)
    }

    fn insert_user(&self, user: NewUser) -> Result<UserRow> {
        self.lock()?.insert_user(user)
    }

    fn get_user(&self, user_id: i64) -> Result<Option<UserRow>> {
        Ok(self.lock()?.users.get(&user_id).cloned())
    }

    fn find_user_by_email(&self, email: &str) -> Result<Option<UserRow>> {
        let s = self.lock()?;
        Ok(s.users.values().find(|u| u.email.eq_ignore_ascii_case(email)).cloned())
    }

    fn list_users(&self, page: PageRequest) -> Result<Page<UserRow>> {
        let s = self.lock()?;
        let all: Vec<UserRow> = s.users.values().cloned().collect();
        Ok(Page { total: all.len() as u64, items: page.slice(&all) })
    }

    fn delete_user(&self, user_id: i64) -> Result<()> {
        self.transact(|s| {
            if s.users.remove(&user_id).is_none() {
                return Err(StoreError::UnknownUser);
            }
            s.donors.retain(|_, d| d.user_id != user_id);
            s.admins.retain(|_, a| a.user_id != user_id);
            let patient_ids: Vec<i64> = s
                .patients
                .values()
                .filter(|p| p.user_id == user_id)
                .map(|p| p.patient_id)
                .collect();
            s.patients.retain(|_, p| p.user_id != user_id);
            s.requests.retain(|_, r| !patient_ids.contains(&r.patient_id));
            s.messages
                .retain(|_, m| m.sender_user_id != user_id && m.recipient_user_id != user_id);
            s.notifications.retain(|_, n| n.user_id != user_id);
            Ok(())
        })
    }

    fn roles_of(&self, user_id: i64) -> Result<Vec<RoleKind>> {
        let s = self.lock()?;
        let mut roles = Vec::new();
        if s.admins.values().any(|r| r.user_id == user_id) {
            roles.push(RoleKind::Admin);
        }
        if s.donors.values().any(|r| r.user_id == user_id) {
            roles.push(RoleKind::Donor);
        }
        if s.patients.values().any(|r| r.user_id == user_id) {
            roles.push(RoleKind::Patient);
        }
        Ok(roles)
    }

    fn upsert_role(&self, user_id: i64, payload: RolePayload) -> Result<RoleRow> {
        self.lock()?.upsert_role(user_id, payload)
    }

    fn create_user_with_role(
        &self,
        user: NewUser,
        payload: RolePayload,
    ) -> Result<(UserRow, RoleRow)> {
        payload.check()?;
        self.transact(|s| {
            let user = s.insert_user(user)?;
            let role = s.upsert_role(user.user_id, payload)?;
            Ok((user, role))
        })
    }

    fn patient_for_user(&self, user_id: i64) -> Result<Option<PatientRow>> {
        let s = self.lock()?;
        Ok(s.patients.values().find(|p| p.user_id == user_id).cloned())
    }

    fn get_patient(&self, patient_id: i64) -> Result<Option<PatientRow>> {
        Ok(self.lock()?.patients.get(&patient_id).cloned())
    }

    fn get_donor(&self, donor_id: i64) -> Result<Option<DonorView>> {
        let s = self.lock()?;
        Ok(s.donors.get(&donor_id).map(|d| s.view(d)))
    }

    fn donor_for_user(&self, user_id: i64) -> Result<Option<DonorView>> {
        let s = self.lock()?;
        Ok(s.donors.values().find(|d| d.user_id == user_id).map(|d| s.view(d)))
    }

    fn update_donor(&self, donor_id: i64, payload: DonorPayload) -> Result<DonorRow> {
        payload.check()?;
        let mut s = self.lock()?;
        let donor = s.donors.get_mut(&donor_id).ok_or(StoreError::UnknownDonor)?;
        apply_donor_payload(donor, payload);
        Ok(donor.clone())
    }

    fn find_donors(&self, filter: &DonorFilter, page: PageRequest) -> Result<Page<DonorView>> {
        let s = self.lock()?;
        let hits: Vec<DonorView> = s
            .donors
            .values()
            .map(|d| s.view(d))
            .filter(|v| filter.accepts(v))
            .collect();
        Ok(Page { total: hits.len() as u64, items: page.slice(&hits) })
    }

    fn all_donors(&self) -> Result<Vec<DonorView>> {
        let s = self.lock()?;
        Ok(s.donors.values().map(|d| s.view(d)).collect())
    }

    fn delete_donor(&self, donor_id: i64) -> Result<()> {
        let mut s = self.lock()?;
        s.donors.remove(&donor_id).map(|_| ()).ok_or(StoreError::UnknownDonor)
    }

    fn record_donation(&self, donation: NewDonation, today: NaiveDate) -> Result<RecordedDonation> {
        let hook = self.fault_hook.clone();
        self.transact(|s| {
            if !s.donors.contains_key(&donation.donor_id) {
                return Err(StoreError::UnknownDonor);
            }
            if donation.donated_on > today {
                return Err(StoreError::FutureDate);
            }
            let request = match donation.request_id {
                Some(id) => {
                    let r = s.requests.get(&id).ok_or(StoreError::UnknownRequest)?;
                    if r.status.is_terminal() {
                        return Err(StoreError::IllegalRequestState {
                            from: r.status,
                            to: RequestStatus::Fulfilled,
                        });
                    }
                    Some(r.clone())
                }
                None => None,
            };

            let row = DonationRow {
                donation_id: next(&mut s.seq.donation),
                donor_id: donation.donor_id,
                request_id: donation.request_id,
                donated_on: donation.donated_on,
            };
            s.donations.insert(row.donation_id, row.clone());
            run_hook(&hook, FaultSite::DonationInserted)?;

            let donor = s.donors.get_mut(&donation.donor_id).expect("checked above");
            donor.last_donation_date = donor.last_donation_date.max(Some(donation.donated_on));
            let donor = donor.clone();
            run_hook(&hook, FaultSite::DonorCooldownUpdated)?;

            let fulfilled_request = match request {
                Some(r) if r.status == RequestStatus::Matched => {
                    let stored = s.requests.get_mut(&r.request_id).expect("checked above");
                    stored.status = RequestStatus::Fulfilled;
                    Some(stored.clone())
                }
                _ => None,
            };
            Ok(RecordedDonation { donation: row, donor, fulfilled_request })
        })
    }

    fn list_donations(&self, donor_id: i64) -> Result<Vec<DonationRow>> {
        let s = self.lock()?;
        Ok(s.donations.values().filter(|d| d.donor_id == donor_id).cloned().collect())
    }

    fn insert_request(&self, request: NewBloodRequest) -> Result<BloodRequestRow> {
        request.check()?;
        let mut s = self.lock()?;
        if !s.patients.contains_key(&request.patient_id) {
            return Err(StoreError::UnknownPatient);
        }
        let row = BloodRequestRow {
            request_id: next(&mut s.seq.request),
            patient_id: request.patient_id,
            blood_group: request.blood_group,
            quantity_units: request.quantity_units,
            city: request.city,
            status: RequestStatus::Open,
            created_at: now_micros(),
        };
        s.requests.insert(row.request_id, row.clone());
        Ok(row)
    }

    fn get_request(&self, request_id: i64) -> Result<Option<BloodRequestRow>> {
        Ok(self.lock()?.requests.get(&request_id).cloned())
    }

    fn set_request_status(&self, request_id: i64, to: RequestStatus) -> Result<BloodRequestRow> {
        let mut s = self.lock()?;
        let row = s.requests.get_mut(&request_id).ok_or(StoreError::UnknownRequest)?;
        if !row.status.can_transition_to(to) {
            return Err(StoreError::IllegalRequestState { from: row.status, to });
        }
        row.status = to;
        Ok(row.clone())
    }

    fn list_requests_by_patient(&self, patient_id: i64) -> Result<Vec<BloodRequestRow>> {
        let s = self.lock()?;
        Ok(s.requests.values().filter(|r| r.patient_id == patient_id).cloned().collect())
    }

    fn list_requests(
        &self,
        status: Option<RequestStatus>,
        page: PageRequest,
    ) -> Result<Page<BloodRequestRow>> {
        let s = self.lock()?;
        let hits: Vec<BloodRequestRow> = s
            .requests
            .values()
            .filter(|r| status.is_none_or(|st| r.status == st))
            .cloned()
            .collect();
        Ok(Page { total: hits.len() as u64, items: page.slice(&hits) })
    }

    fn insert_message(&self, message: NewMessage) -> Result<MessageRow> {
        message.check()?;
        let mut s = self.lock()?;
        if !s.users.contains_key(&message.sender_user_id) {
            return Err(StoreError::UnknownUser);
        }
        if !s.users.contains_key(&message.recipient_user_id) {
            return Err(StoreError::UnknownRecipient);
        }
        let row = MessageRow {
            message_id: next(&mut s.seq.message),
            sender_user_id: message.sender_user_id,
            recipient_user_id: message.recipient_user_id,
            body: message.body,
            sent_at: now_micros(),
            read: false,
        };
        s.messages.insert(row.message_id, row.clone());
        Ok(row)
    }

    fn list_conversation(&self, a: i64, b: i64, page: PageRequest) -> Result<Vec<MessageRow>> {
        let s = self.lock()?;
        let mut thread: Vec<MessageRow> = s
            .messages
            .values()
            .filter(|m| {
                (m.sender_user_id == a && m.recipient_user_id == b)
                    || (m.sender_user_id == b && m.recipient_user_id == a)
            })
            .cloned()
            .collect();
        thread.sort_by_key(|m| (m.sent_at, m.message_id));
        Ok(page.slice(&thread))
    }

    fn mark_read(&self, reader: i64, message_ids: &[i64]) -> Result<u64> {
        let mut s = self.lock()?;
        let mut changed = 0;
        for id in message_ids {
            if let Some(m) = s.messages.get_mut(id) {
                if m.recipient_user_id == reader && !m.read {
                    m.read = true;
                    changed += 1;
                }
            }
        }
        Ok(changed)
    }

    fn conversations(&self, user_id: i64) -> Result<Vec<ConversationSummary>> {
        let s = self.lock()?;
        let mut by_partner: BTreeMap<i64, ConversationSummary> = BTreeMap::new();
        for m in s.messages.values() {
            let partner = if m.sender_user_id == user_id {
                m.recipient_user_id
            } else if m.recipient_user_id == user_id {
                m.sender_user_id
            } else {
                continue;
            };
            let entry = by_partner.entry(partner).or_insert_with(|| ConversationSummary {
                partner_user_id: partner,
                partner_name: s.users.get(&partner).map(|u| u.name.clone()).unwrap_or_default(),
                last_sent_at: m.sent_at,
                unread: 0,
            });
            entry.last_sent_at = entry.last_sent_at.max(m.sent_at);
            if m.recipient_user_id == user_id && !m.read {
                entry.unread += 1;
            }
        }
        let mut out: Vec<ConversationSummary> = by_partner.into_values().collect();
        out.sort_by(|a, b| {
            b.last_sent_at
                .cmp(&a.last_sent_at)
                .then(a.partner_user_id.cmp(&b.partner_user_id))
        });
        Ok(out)
    }

    fn insert_notification(&self, n: NewNotification) -> Result<Option<NotificationRow>> {
        n.check()?;
        let mut s = self.lock()?;
        if !s.users.contains_key(&n.user_id) {
            return Err(StoreError::UnknownUser);
        }
        if s.notify_exists(&n) {
            return Ok(None);
        }
        let row = NotificationRow {
            notification_id: next(&mut s.seq.notification),
            user_id: n.user_id,
            kind: n.kind,
            payload: n.payload,
            request_id: n.request_id,
            created_at: now_micros(),
            read: false,
        };
        s.notifications.insert(row.notification_id, row.clone());
        Ok(Some(row))
    }

    fn list_notifications(&self, user_id: i64) -> Result<Vec<NotificationRow>> {
        let s = self.lock()?;
        let mut rows: Vec<NotificationRow> =
            s.notifications.values().filter(|n| n.user_id == user_id).cloned().collect();
        rows.sort_by(|a, b| {
            b.created_at
                .cmp(&a.created_at)
                .then(b.notification_id.cmp(&a.notification_id))
        });
        Ok(rows)
    }

    fn mark_notification_read(&self, user_id: i64, notification_id: i64) -> Result<NotificationRow> {
        let mut s = self.lock()?;
        match s.notifications.get_mut(&notification_id) {
            Some(n) if n.user_id == user_id => {
                n.read = true;
                Ok(n.clone())
            }
            _ => Err(StoreError::UnknownNotification),
        }
    }
}
