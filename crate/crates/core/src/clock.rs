use std::sync::atomic::{AtomicI64, Ordering};

use chrono::{DateTime, SecondsFormat, Utc};

/// Source of ISO-8601 wall-clock stamps. Ordering logic never reads these;
/// task indices are the ordering authority.
pub trait Clock: Send + Sync {
    fn now(&self) -> String;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> String {
        Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
    }
}

/// Settable clock for reproducible runs.
#[derive(Debug)]
pub struct ManualClock {
    epoch_secs: AtomicI64,
}

/// 2025-01-01T00:00:00Z
pub const SIM_EPOCH: i64 = 1_735_689_600;

impl ManualClock {
    pub fn new(epoch_secs: i64) -> Self {
        ManualClock {
            epoch_secs: AtomicI64::new(epoch_secs),
        }
    }

    pub fn set(&self, epoch_secs: i64) {
        self.epoch_secs.store(epoch_secs, Ordering::SeqCst);
    }

    /// Positions the clock one minute per task after [`SIM_EPOCH`].
    pub fn set_task(&self, task_index: u64) {
        self.set(SIM_EPOCH + 60 * task_index as i64);
    }
}

impl Default for ManualClock {
    fn default() -> Self {
        ManualClock::new(SIM_EPOCH)
    }
}

impl Clock for ManualClock {
    fn now(&self) -> String {
        let secs = self.epoch_secs.load(Ordering::SeqCst);
        DateTime::<Utc>::from_timestamp(secs, 0)
            .unwrap_or_default()
            .to_rfc3339_opts(SecondsFormat::Secs, true)
    }
}
