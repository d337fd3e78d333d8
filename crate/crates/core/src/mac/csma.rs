//! Slotted CSMA/CA with binary exponential backoff.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Backoff {
    pub cw_min: usize,
    pub cw_max: usize,
}

/// What happened to a contender's transmission in the slot just played.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    /// Leaves the contention.
    Done,
    /// Failed; backs off again with a doubled window.
    Retry,
    /// Has another packet; backs off again from the minimum window.
    Fresh,
}

#[derive(Debug, Clone)]
struct Entry {
    countdown: usize,
    window: usize,
}

/// Backoff counters of every node currently contending.
#[derive(Debug, Clone)]
pub struct Contention {
    backoff: Backoff,
    entries: BTreeMap<NodeId, Entry>,
}

impl Contention {
    pub fn new(backoff: Backoff) -> Self {
        Contention { backoff, entries: BTreeMap::new() }
    }

    pub fn enter<R: Rng + ?Sized>(&mut self, node: NodeId, rng: &mut R) {
        let window = self.backoff.cw_min.max(1);
        self.entries.insert(node, Entry { countdown: rng.random_range(0..window), window });
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Nodes whose backoff expires in the current slot, ascending.
    pub fn due(&self) -> Vec<NodeId> {
        self.entries.iter().filter(|(_, e)| e.countdown == 0).map(|(&n, _)| n).collect()
    }

    pub fn window(&self, node: NodeId) -> Option<usize> {
        self.entries.get(&node).map(|e| e.window)
    }

    /// Close the current slot. Every due node must have a resolution; the
    /// others count down. Redraws happen in ascending node order.
    pub fn advance<R: Rng + ?Sized>(&mut self, resolved: &BTreeMap<NodeId, Resolution>, rng: &mut R) {
        let cw_min = self.backoff.cw_min.max(1);
        let cw_max = self.backoff.cw_max.max(cw_min);
        let mut leaving = Vec::new();
        for (&node, e) in self.entries.iter_mut() {
            if e.countdown > 0 {
                e.countdown -= 1;
                continue;
            }
            match resolved.get(&node).copied().unwrap_or(Resolution::Done) {
                Resolution::Done => leaving.push(node),
                Resolution::Retry => {
                    e.window = (e.window * 2).min(cw_max);
                    e.countdown = rng.random_range(0..e.window);
                }
                Resolution::Fresh => {
                    e.window = cw_min;
                    e.countdown = rng.random_range(0..e.window);
                }
            }
        }
        for n in leaving {
            self.entries.remove(&n);
        }
    }
}

/// Pure channel-access view: contenders back off, a slot with a single
/// transmitter succeeds, a shared slot collides and everyone in it retries
/// with a doubled window until `max_retries` is spent. Returns the
/// transmitter set of every non-idle slot within `slot_budget`.
pub fn contention_access<R: Rng + ?Sized>(
    contenders: &[NodeId],
    slot_budget: usize,
    backoff: Backoff,
    max_retries: u32,
    rng: &mut R,
) -> BTreeMap<usize, Vec<NodeId>> {
    let mut c = Contention::new(backoff);
    let mut failures: BTreeMap<NodeId, u32> = BTreeMap::new();
    for &n in contenders {
        c.enter(n, rng);
    }
    let mut out = BTreeMap::new();
    for slot in 0..slot_budget {
        if c.is_empty() {
            break;
        }
        let due = c.due();
        if due.is_empty() {
            c.advance(&BTreeMap::new(), rng);
            continue;
        }
        let alone = due.len() == 1;
        let resolved = due
            .iter()
            .map(|&n| {
                if alone {
                    return (n, Resolution::Done);
                }
                let f = failures.entry(n).or_insert(0);
                if *f >= max_retries {
                    (n, Resolution::Done)
                } else {
                    *f += 1;
                    (n, Resolution::Retry)
                }
            })
            .collect();
        out.insert(slot, due);
        c.advance(&resolved, rng);
    }
    out
}
