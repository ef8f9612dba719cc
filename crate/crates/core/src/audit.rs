//! Process-wide counters for the self-audit of solver answers.
//!
//! Every witness and certificate produced by [`crate::ratlp::feasible`] and
//! every model returned by the formula solver is re-checked independently;
//! the outcome of each re-check is tallied here.

use std::sync::atomic::{AtomicU64, Ordering};

static CHECKS: AtomicU64 = AtomicU64::new(0);
static FAILURES: AtomicU64 = AtomicU64::new(0);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AuditCounts {
    pub checks: u64,
    pub failures: u64,
}

pub fn record(ok: bool) {
    CHECKS.fetch_add(1, Ordering::Relaxed);
    if !ok {
        FAILURES.fetch_add(1, Ordering::Relaxed);
    }
}

pub fn snapshot() -> AuditCounts {
    AuditCounts {
        checks: CHECKS.load(Ordering::Relaxed),
        failures: FAILURES.load(Ordering::Relaxed),
    }
}
