//! Product counters used as the cost model.
//!
//! One 𝒞 unit is an r×r by r×r product, one 𝒱 unit an r×r matrix (or
//! operator) applied to an r-vector. Linear combinations, scalings and
//! evaluations of M(t) are free.

use std::sync::atomic::{AtomicU64, Ordering};

#[derive(Debug, Default)]
pub struct CostLedger {
    matmat: AtomicU64,
    matvec: AtomicU64,
}

/// Plain snapshot of a ledger.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Cost {
    pub matmat: u64,
    pub matvec: u64,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_matmat(&self, n: u64) {
        self.matmat.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_matvec(&self, n: u64) {
        self.matvec.fetch_add(n, Ordering::Relaxed);
    }

    pub fn matmat(&self) -> u64 {
        self.matmat.load(Ordering::Relaxed)
    }

    pub fn matvec(&self) -> u64 {
        self.matvec.load(Ordering::Relaxed)
    }

    pub fn snapshot(&self) -> Cost {
        Cost {
            matmat: self.matmat(),
            matvec: self.matvec(),
        }
    }

    pub fn reset(&self) {
        self.matmat.store(0, Ordering::Relaxed);
        self.matvec.store(0, Ordering::Relaxed);
    }

    /// Folds the counts of a per-task ledger into this one.
    pub fn merge(&self, other: &CostLedger) {
        self.add_matmat(other.matmat());
        self.add_matvec(other.matvec());
    }
}

impl std::ops::Sub for Cost {
    type Output = Cost;
    fn sub(self, rhs: Cost) -> Cost {
        Cost {
            matmat: self.matmat - rhs.matmat,
            matvec: self.matvec - rhs.matvec,
        }
    }
}
