//! Farmlet world state: worker DSPs, their crossing buffers and the set of
//! errors currently present on each of them.
//!
//! Data is counted in whole units so that per-node conservation
//! (`enqueued = processed + fill + dropped`) holds exactly.

use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ErrorTypeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DspId {
    pub farmlet: usize,
    pub slot: usize,
}

/// Bounded queue of crossing data waiting for the physics application.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossingBuffer {
    capacity: u64,
    fill: u64,
    dropped_total: u64,
}

impl CrossingBuffer {
    /// `capacity` must be positive; config validation enforces it.
    pub fn new(capacity: u64) -> Self {
        debug_assert!(capacity > 0);
        Self {
            capacity,
            fill: 0,
            dropped_total: 0,
        }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn fill(&self) -> u64 {
        self.fill
    }

    pub fn dropped_total(&self) -> u64 {
        self.dropped_total
    }

    /// Fill fraction in `[0, 1]`.
    pub fn watermark(&self) -> f64 {
        self.fill as f64 / self.capacity as f64
    }

    /// Adds arrivals, dropping whatever does not fit. Returns the amount dropped.
    pub fn enqueue_crossings(&mut self, amount: u64) -> u64 {
        let room = self.capacity - self.fill;
        let accepted = amount.min(room);
        let dropped = amount - accepted;
        self.fill += accepted;
        self.dropped_total += dropped;
        dropped
    }

    /// Removes up to `amount` units and returns how many were actually taken.
    pub fn dequeue_processed(&mut self, amount: u64) -> u64 {
        let processed = self.fill.min(amount);
        self.fill -= processed;
        processed
    }
}

/// Which (slot, error type) pairs currently carry an error, and since when.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorStateSet {
    error_types: usize,
    onset: Vec<Option<u64>>,
}

impl ErrorStateSet {
    pub fn new(slots: usize, error_types: usize) -> Self {
        Self {
            error_types,
            onset: alloc::vec![None; slots * error_types],
        }
    }

    fn index(&self, slot: usize, error: ErrorTypeId) -> usize {
        debug_assert!(error.0 < self.error_types);
        slot * self.error_types + error.0
    }

    pub fn error_types(&self) -> usize {
        self.error_types
    }

    pub fn is_active(&self, slot: usize, error: ErrorTypeId) -> bool {
        self.onset[self.index(slot, error)].is_some()
    }

    pub fn onset(&self, slot: usize, error: ErrorTypeId) -> Option<u64> {
        self.onset[self.index(slot, error)]
    }

    /// Marks the pair active at `step`. Returns `false` (and leaves the
    /// original onset untouched) if it was already active.
    pub fn activate(&mut self, slot: usize, error: ErrorTypeId, step: u64) -> bool {
        let i = self.index(slot, error);
        if self.onset[i].is_some() {
            return false;
        }
        self.onset[i] = Some(step);
        true
    }

    /// Clears the pair. Returns whether an error was present.
    pub fn clear(&mut self, slot: usize, error: ErrorTypeId) -> bool {
        let i = self.index(slot, error);
        self.onset[i].take().is_some()
    }

    /// Error types active on `slot`, ascending.
    pub fn active_on(&self, slot: usize) -> impl Iterator<Item = ErrorTypeId> + '_ {
        let base = slot * self.error_types;
        self.onset[base..base + self.error_types]
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_some())
            .map(|(e, _)| ErrorTypeId(e))
    }

    pub fn active_count(&self) -> usize {
        self.onset.iter().filter(|o| o.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DspNode {
    pub id: DspId,
    pub buffer: CrossingBuffer,
    /// Units processed per step when no error is present.
    pub base_rate: u64,
    pub crossings_processed_total: u64,
    pub crossings_enqueued_total: u64,
}

impl DspNode {
    pub fn new(id: DspId, capacity: u64, base_rate: u64) -> Self {
        Self {
            id,
            buffer: CrossingBuffer::new(capacity),
            base_rate,
            crossings_processed_total: 0,
            crossings_enqueued_total: 0,
        }
    }

    pub fn enqueue(&mut self, amount: u64) -> u64 {
        self.crossings_enqueued_total += amount;
        self.buffer.enqueue_crossings(amount)
    }

    pub fn process(&mut self, amount: u64) -> u64 {
        let processed = self.buffer.dequeue_processed(amount);
        self.crossings_processed_total += processed;
        processed
    }
}

/// Processing rate of `node` given the errors active on it: the base rate
/// scaled by the slowdown factor of every active error type.
pub fn effective_rate(node: &DspNode, errors: &ErrorStateSet, slowdowns: &[f64]) -> f64 {
    errors
        .active_on(node.id.slot)
        .fold(node.base_rate as f64, |rate, e| rate * slowdowns[e.0])
}

/// Whole units a node can drain this step; fractional capacity is lost.
pub fn effective_units(node: &DspNode, errors: &ErrorStateSet, slowdowns: &[f64]) -> u64 {
    libm::floor(effective_rate(node, errors, slowdowns)) as u64
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarmletState {
    pub index: usize,
    pub nodes: Vec<DspNode>,
    pub errors: ErrorStateSet,
    pub clock: u64,
}

impl FarmletState {
    pub fn new(
        index: usize,
        nodes: usize,
        error_types: usize,
        capacity: u64,
        base_rate: u64,
    ) -> Self {
        let nodes = (0..nodes)
            .map(|slot| {
                DspNode::new(
                    DspId {
                        farmlet: index,
                        slot,
                    },
                    capacity,
                    base_rate,
                )
            })
            .collect::<Vec<_>>();
        let n = nodes.len();
        Self {
            index,
            nodes,
            errors: ErrorStateSet::new(n, error_types),
            clock: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
