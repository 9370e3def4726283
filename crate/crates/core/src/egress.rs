//! Process-wide switch for outbound network calls made by the HTTP LLM
//! client and the HTTP transcript fetcher.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

static DENIED: AtomicBool = AtomicBool::new(false);
static BLOCKED: AtomicUsize = AtomicUsize::new(0);

/// Makes every later outbound call fail before any socket is opened.
pub fn deny() {
    DENIED.store(true, Ordering::SeqCst);
}

pub fn allow() {
    DENIED.store(false, Ordering::SeqCst);
}

pub fn is_denied() -> bool {
    DENIED.load(Ordering::SeqCst)
}

/// Outbound calls refused since process start.
pub fn blocked_attempts() -> usize {
    BLOCKED.load(Ordering::SeqCst)
}

pub(crate) fn check(target: &str) -> Result<(), String> {
    if is_denied() {
        BLOCKED.fetch_add(1, Ordering::SeqCst);
        Err(format!("network egress is disabled (attempted {target})"))
    } else {
        Ok(())
    }
}
