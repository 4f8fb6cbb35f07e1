//! Failure hooks inside multi-write operations, used to prove atomicity.

use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Result, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultSite {
    /// `record_donation`: donation row written, donor not yet updated.
    DonationInserted,
    /// `record_donation`: donor updated, request not yet updated.
    DonorCooldownUpdated,
}

pub type FaultHook = Arc<dyn Fn(FaultSite) -> Result<()> + Send + Sync>;

/// A hook that fails the next time execution reaches the armed site.
#[derive(Default)]
pub struct FaultInjector {
    armed: Arc<ArmedSite>,
}

#[derive(Default)]
struct ArmedSite {
    on_inserted: AtomicBool,
    on_updated: AtomicBool,
    fired: AtomicU64,
}

impl FaultInjector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn arm(&self, site: FaultSite) {
        self.flag(site).store(true, Ordering::SeqCst);
    }

    pub fn fired(&self) -> u64 {
        self.armed.fired.load(Ordering::SeqCst)
    }

    fn flag(&self, site: FaultSite) -> &AtomicBool {
        match site {
            FaultSite::DonationInserted => &self.armed.on_inserted,
            FaultSite::DonorCooldownUpdated => &self.armed.on_updated,
        }
    }

    pub fn hook(&self) -> FaultHook {
        let armed = Arc::clone(&self.armed);
        Arc::new(move |site| {
            let flag = match site {
                FaultSite::DonationInserted => &armed.on_inserted,
                FaultSite::DonorCooldownUpdated => &armed.on_updated,
            };
            if flag.swap(false, Ordering::SeqCst) {
                armed.fired.fetch_add(1, Ordering::SeqCst);
                Err(StoreError::Injected(site))
            } else {
                Ok(())
            }
        })
    }
}

impl fmt::Debug for FaultInjector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FaultInjector").field("fired", &self.fired()).finish()
    }
}

pub(crate) fn run_hook(hook: &Option<FaultHook>, site: FaultSite) -> Result<()> {
    match hook {
        Some(h) => h(site),
        None => Ok(()),
    }
}
