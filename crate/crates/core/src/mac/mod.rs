//! Frame-level MAC simulation of the three schemes.
//!
//! Every source generates one packet at the start of each frame. A frame
//! has a source phase followed, for the two-hop schemes, by a relay phase
//! in which relays forward everything they collected as one aggregate
//! packet to the coordinator.
//!
//! * [`SchemeKind::Dcaim`]: sources transmit in the cells of a precomputed
//!   slot schedule to the nearest relay of their region.
//! * [`SchemeKind::OrCsma`]: sources contend with slotted CSMA/CA on one
//!   channel and address the relay with the best instantaneous link.
//! * [`SchemeKind::SingleHop`]: sources contend with CSMA/CA and talk to
//!   the coordinator directly.
//!
//! In both two-hop schemes the relays then contend with slotted CSMA/CA
//! towards the coordinator.
//!
//! A reception succeeds when the signal is at or above the receiver
//! sensitivity and the SINR is at or above `demod_threshold_db`.

mod csma;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use csma::{contention_access, Backoff, Contention, Resolution};

use crate::channel::{link_budget, sinr_at, SinrSample};
use crate::dcaim::{InterferenceSet, Schedules};
use crate::error::{Error, Result};
use crate::topology::{NetworkTopology, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Dcaim,
    OrCsma,
    SingleHop,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [SchemeKind::Dcaim, SchemeKind::OrCsma, SchemeKind::SingleHop];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::Dcaim => "dcaim",
            SchemeKind::OrCsma => "or-csma",
            SchemeKind::SingleHop => "single-hop",
        }
    }

    /// Position in [`SchemeKind::ALL`]; used to derive per-scheme streams.
    pub fn index(self) -> u64 {
        match self {
            SchemeKind::Dcaim => 0,
            SchemeKind::OrCsma => 1,
            SchemeKind::SingleHop => 2,
        }
    }

    fn two_hop(self) -> bool {
        !matches!(self, SchemeKind::SingleHop)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown scheme `{s}` (expected dcaim, or-csma or single-hop)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacParams {
    pub demod_threshold_db: f64,
    pub max_retries: u32,
    pub cw_min: usize,
    pub cw_max: usize,
    /// Airtime of one packet; every slot holds exactly one packet.
    pub slot_duration_s: f64,
    /// Slot budget of a contention phase.
    pub contention_slots: usize,
    /// Packets a node can hold; arrivals beyond it are lost.
    pub queue_capacity: usize,
}

impl Default for MacParams {
    fn default() -> Self {
        MacParams {
            demod_threshold_db: 10.0,
            max_retries: 3,
            cw_min: 8,
            cw_max: 64,
            slot_duration_s: 0.005,
            contention_slots: 64,
            queue_capacity: 8,
        }
    }
}

impl MacParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Parameter(what.to_string()));
        if !self.demod_threshold_db.is_finite() {
            return bad("demod_threshold_db must be finite");
        }
        if self.cw_min == 0 || self.cw_max < self.cw_min {
            return bad("contention window needs 1 <= cw_min <= cw_max");
        }
        if !(self.slot_duration_s > 0.0 && self.slot_duration_s.is_finite()) {
            return bad("slot_duration_s must be positive");
        }
        if self.contention_slots == 0 {
            return bad("contention_slots must be at least 1");
        }
        if self.queue_capacity == 0 {
            return bad("queue_capacity must be at least 1");
        }
        Ok(())
    }

    pub fn backoff(&self) -> Backoff {
        Backoff { cw_min: self.cw_min, cw_max: self.cw_max }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Source,
    Relay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Delivered,
    BelowSensitivity,
    Collided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RetryAction {
    None,
    Retry,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    pub phase: Phase,
    /// Slot index within the frame; relay-phase slots follow the source phase.
    pub slot: usize,
    pub channel: usize,
    pub tx: NodeId,
    pub rx: NodeId,
    /// 0 for a first attempt.
    pub attempt: u32,
    /// Source packets carried; more than one only for relay aggregates.
    pub payload: usize,
    pub sinr: SinrSample,
    pub outcome: Outcome,
    pub retry: RetryAction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrace {
    pub frame: u64,
    pub scheme: SchemeKind,
    /// Slots the frame actually used, both phases.
    pub slots_used: usize,
    pub slot_duration_s: f64,
    pub transmissions: Vec<Transmission>,
    /// Owned slots in which a scheduled relay listened and nothing arrived.
    pub idle_listening: BTreeMap<NodeId, usize>,
    /// Arrivals lost to a full queue.
    pub overflow: usize,
}

impl FrameTrace {
    /// Source packets that reached the coordinator in this frame.
    pub fn delivered_to_coordinator(&self) -> usize {
        self.transmissions
            .iter()
            .filter(|t| t.outcome == Outcome::Delivered && t.rx == NodeId::coordinator())
            .map(|t| t.payload)
            .sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct Packet {
    attempts: u32,
    payload: usize,
}

/// Steps one scheme frame by frame over a fixed topology.
#[derive(Debug)]
pub struct Simulator<'a> {
    topology: &'a NetworkTopology,
    scheme: SchemeKind,
    schedules: Option<&'a Schedules>,
    params: MacParams,
    serving: BTreeMap<NodeId, NodeId>,
    queues: BTreeMap<NodeId, VecDeque<Packet>>,
    frame: u64,
}

impl<'a> Simulator<'a> {
    pub fn new(
        topology: &'a NetworkTopology,
        scheme: SchemeKind,
        schedules: Option<&'a Schedules>,
        params: MacParams,
    ) -> Result<Self> {
        params.validate()?;
        if scheme == SchemeKind::Dcaim {
            let s = schedules.ok_or(Error::MissingSchedule)?;
            for r in &topology.regions {
                if !s.contains_key(&r.id) {
                    return Err(Error::MissingRegion(r.id));
                }
            }
        }
        let serving = topology.sources().map(|s| Ok((s.id, topology.serving_relay(s.id)?))).collect::<Result<_>>()?;
        let queues = topology.sources().chain(topology.relays()).map(|n| (n.id, VecDeque::new())).collect();
        Ok(Simulator { topology, scheme, schedules, params, serving, queues, frame: 0 })
    }

    /// Index of the next frame to be played.
    pub fn frame(&self) -> u64 {
        self.frame
    }

    pub fn backlog(&self, node: NodeId) -> usize {
        self.queues.get(&node).map_or(0, |q| q.iter().map(|p| p.payload).sum())
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<FrameTrace> {
        let mut trace = FrameTrace {
            frame: self.frame,
            scheme: self.scheme,
            slots_used: 0,
            slot_duration_s: self.params.slot_duration_s,
            transmissions: Vec::new(),
            idle_listening: self.topology.relays().map(|r| (r.id, 0)).collect(),
            overflow: 0,
        };
        let sources: Vec<NodeId> = self.topology.sources().map(|n| n.id).collect();
        for &s in &sources {
            trace.overflow += self.enqueue(s, 1);
        }

        let source_slots = match self.scheme {
            SchemeKind::Dcaim => self.scheduled_sources(&sources, &mut trace, rng)?,
            SchemeKind::OrCsma => {
                let targets = self.best_relays(&sources, rng)?;
                self.contend(Phase::Source, &sources, 0, |n| targets[&n], &mut trace, rng)?
            }
            SchemeKind::SingleHop => {
                self.contend(Phase::Source, &sources, 0, |_| NodeId::coordinator(), &mut trace, rng)?
            }
        };

        let mut relay_slots = 0;
        if self.scheme.two_hop() {
            // aggregate what each relay received this frame into one packet
            let mut fresh: BTreeMap<NodeId, usize> = BTreeMap::new();
            for t in &trace.transmissions {
                if t.outcome == Outcome::Delivered && t.phase == Phase::Source {
                    *fresh.entry(t.rx).or_insert(0) += t.payload;
                }
            }
            for (relay, n) in fresh {
                trace.overflow += self.enqueue(relay, n);
            }
            let relays: Vec<NodeId> = self.topology.relays().map(|r| r.id).collect();
            relay_slots =
                self.contend(Phase::Relay, &relays, source_slots, |_| NodeId::coordinator(), &mut trace, rng)?;
        }
        trace.slots_used = source_slots + relay_slots;
        self.frame += 1;
        Ok(trace)
    }

    /// Queue `payload` packets at `node`. Returns the number lost to overflow.
    fn enqueue(&mut self, node: NodeId, payload: usize) -> usize {
        let cap = self.params.queue_capacity;
        let q = self.queues.get_mut(&node).expect("every node has a queue");
        if node.is_source() {
            if q.len() >= cap {
                return payload;
            }
            q.push_back(Packet { attempts: 0, payload });
            return 0;
        }
        // relays merge everything into as few aggregates as the buffer allows
        let held: usize = q.iter().map(|p| p.payload).sum();
        let room = cap.saturating_sub(held).min(payload);
        if room > 0 {
            q.push_back(Packet { attempts: 0, payload: room });
        }
        payload - room
    }

    fn head(&self, node: NodeId) -> Option<Packet> {
        self.queues[&node].front().copied()
    }

    fn judge(&self, sinr: &SinrSample) -> Outcome {
        if sinr.signal_dbm < self.topology.radio.sensitivity_dbm {
            Outcome::BelowSensitivity
        } else if sinr.sinr_db < self.params.demod_threshold_db {
            Outcome::Collided
        } else {
            Outcome::Delivered
        }
    }

    /// Apply an outcome to the head packet of `node`.
    fn settle(&mut self, node: NodeId, outcome: Outcome) -> RetryAction {
        let max = self.params.max_retries;
        let q = self.queues.get_mut(&node).expect("every node has a queue");
        if outcome == Outcome::Delivered {
            q.pop_front();
            return RetryAction::None;
        }
        let head = q.front_mut().expect("only backlogged nodes transmit");
        if head.attempts >= max {
            q.pop_front();
            RetryAction::Drop
        } else {
            head.attempts += 1;
            RetryAction::Retry
        }
    }

    /// One slot of concurrent transmissions. Each entry is (tx, rx, channel);
    /// nodes on the same channel interfere with one another.
    fn play_slot<R: Rng + ?Sized>(
        &mut self,
        phase: Phase,
        slot: usize,
        txs: &[(NodeId, NodeId, usize)],
        trace: &mut FrameTrace,
        rng: &mut R,
    ) -> Result<Vec<(NodeId, Outcome)>> {
        let mut results = Vec::with_capacity(txs.len());
        for &(tx, rx, channel) in txs {
            let others: Vec<NodeId> =
                txs.iter().filter(|&&(o, _, c)| c == channel && o != tx).map(|&(o, _, _)| o).collect();
            let sinr = sinr_at(rx, tx, &others, self.topology, rng)?;
            let outcome = self.judge(&sinr);
            let head = self.head(tx).expect("only backlogged nodes transmit");
            trace.transmissions.push(Transmission {
                phase,
                slot,
                channel,
                tx,
                rx,
                attempt: head.attempts,
                payload: head.payload,
                sinr,
                outcome,
                retry: RetryAction::None,
            });
            results.push((tx, outcome));
        }
        let first = trace.transmissions.len() - results.len();
        for (i, &(tx, outcome)) in results.iter().enumerate() {
            trace.transmissions[first + i].retry = self.settle(tx, outcome);
        }
        Ok(results)
    }

    fn scheduled_sources<R: Rng + ?Sized>(
        &mut self,
        sources: &[NodeId],
        trace: &mut FrameTrace,
        rng: &mut R,
    ) -> Result<usize> {
        let schedules = self.schedules.ok_or(Error::MissingSchedule)?;
        let frame_len = schedules.values().map(|s| s.frame_len).max().unwrap_or(0);
        for t in 0..frame_len {
            let mut txs = Vec::new();
            let mut listening: BTreeSet<NodeId> = BTreeSet::new();
            for &s in sources {
                let Some(c) = schedules[&s.region].channel_at(s, t) else { continue };
                let relay = self.serving[&s];
                listening.insert(relay);
                if self.head(s).is_some() {
                    txs.push((s, relay, c));
                }
            }
            let receiving: BTreeSet<NodeId> = txs.iter().map(|&(_, r, _)| r).collect();
            for r in listening.difference(&receiving) {
                *trace.idle_listening.get_mut(r).expect("relay exists") += 1;
            }
            self.play_slot(Phase::Source, t, &txs, trace, rng)?;
        }
        Ok(frame_len)
    }

    /// Per-frame choice of the relay with the strongest instantaneous link,
    /// sources ascending, relays ascending.
    fn best_relays<R: Rng + ?Sized>(&self, sources: &[NodeId], rng: &mut R) -> Result<BTreeMap<NodeId, NodeId>> {
        let mut out = BTreeMap::new();
        for &s in sources {
            let mut best: Option<(f64, NodeId)> = None;
            for r in self.topology.relays() {
                let p = link_budget(s, r.id, self.topology, rng)?.rx_power_dbm;
                if best.is_none_or(|(bp, _)| p > bp) {
                    best = Some((p, r.id));
                }
            }
            out.insert(s, best.expect("topology has relays").1);
        }
        Ok(out)
    }

    /// Slotted CSMA/CA among the backlogged `nodes` on channel 0. Runs until
    /// every queue is empty or the slot budget is spent; returns the slots
    /// used.
    fn contend<R, F>(
        &mut self,
        phase: Phase,
        nodes: &[NodeId],
        offset: usize,
        target: F,
        trace: &mut FrameTrace,
        rng: &mut R,
    ) -> Result<usize>
    where
        R: Rng + ?Sized,
        F: Fn(NodeId) -> NodeId,
    {
        let mut c = Contention::new(self.params.backoff());
        for &n in nodes {
            if self.head(n).is_some() {
                c.enter(n, rng);
            }
        }
        let mut used = 0;
        while used < self.params.contention_slots && !c.is_empty() {
            let due = c.due();
            let txs: Vec<(NodeId, NodeId, usize)> = due.iter().map(|&n| (n, target(n), 0)).collect();
            let results = self.play_slot(phase, offset + used, &txs, trace, rng)?;
            let resolved = results
                .into_iter()
                .zip(trace.transmissions[trace.transmissions.len() - txs.len()..].iter())
                .map(|((n, _), t)| {
                    let r = match t.retry {
                        RetryAction::Retry => Resolution::Retry,
                        _ if self.head(n).is_some() => Resolution::Fresh,
                        _ => Resolution::Done,
                    };
                    (n, r)
                })
                .collect();
            c.advance(&resolved, rng);
            used += 1;
        }
        Ok(used)
    }
}

/// Play `frames` frames of `scheme` from an empty network.
pub fn run_frames<R: Rng + ?Sized>(
    topology: &NetworkTopology,
    scheme: SchemeKind,
    schedules: Option<&Schedules>,
    frames: u64,
    params: MacParams,
    rng: &mut R,
) -> Result<Vec<FrameTrace>> {
    let mut sim = Simulator::new(topology, scheme, schedules, params)?;
    (0..frames).map(|_| sim.step(rng)).collect()
}

/// Mean source-phase SINR (dB) and sample count per source.
pub fn mean_source_sinr<'a>(traces: impl IntoIterator<Item = &'a FrameTrace>) -> BTreeMap<NodeId, (f64, usize)> {
    let mut acc: BTreeMap<NodeId, (f64, usize)> = BTreeMap::new();
    for t in traces.into_iter().flat_map(|f| f.transmissions.iter()) {
        if t.phase == Phase::Source {
            let e = acc.entry(t.tx).or_insert((0.0, 0));
            e.0 += t.sinr.sinr_db;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(n, (s, k))| (n, (s / k as f64, k))).collect()
}

/// A slot and channel on which two members of one interference set
/// transmitted together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub frame: u64,
    pub slot: usize,
    pub channel: usize,
    pub set_owner: usize,
    pub nodes: Vec<NodeId>,
}

/// Every source-phase (slot, channel) where two or more members of the same
/// interference set transmitted at once.
pub fn set_violations<'a>(
    traces: impl IntoIterator<Item = &'a FrameTrace>,
    sets: &BTreeMap<usize, InterferenceSet>,
) -> Vec<Violation> {
    let mut out = Vec::new();
    for f in traces {
        let mut cells: BTreeMap<(usize, usize), Vec<NodeId>> = BTreeMap::new();
        for t in f.transmissions.iter().filter(|t| t.phase == Phase::Source) {
            cells.entry((t.slot, t.channel)).or_default().push(t.tx);
        }
        for ((slot, channel), txs) in cells {
            for set in sets.values() {
                let nodes: Vec<NodeId> = txs.iter().copied().filter(|n| set.members.contains(n)).collect();
                if nodes.len() > 1 {
                    out.push(Violation { frame: f.frame, slot, channel, set_owner: set.owner, nodes });
                }
            }
        }
    }
    out
}

#[derive(Serialize)]
struct TraceRow<'a> {
    frame: u64,
    scheme: &'a str,
    phase: Phase,
    slot: usize,
    channel: usize,
    tx_region: usize,
    tx_node: String,
    rx_node: String,
    attempt: u32,
    payload: usize,
    signal_dbm: f64,
    interference_mw: f64,
    sinr_db: f64,
    outcome: Outcome,
    retry: RetryAction,
}

/// One CSV row per transmission.
pub fn write_trace_csv<'a, W: Write>(traces: impl IntoIterator<Item = &'a FrameTrace>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for f in traces {
        for t in &f.transmissions {
            w.serialize(TraceRow {
                frame: f.frame,
                scheme: f.scheme.as_str(),
                phase: t.phase,
                slot: t.slot,
                channel: t.channel,
                tx_region: t.tx.region,
                tx_node: t.tx.to_string(),
                rx_node: t.rx.to_string(),
                attempt: t.attempt,
                payload: t.payload,
                signal_dbm: t.sinr.signal_dbm,
                interference_mw: t.sinr.interference_mw,
                sinr_db: t.sinr.sinr_db,
                outcome: t.outcome,
                retry: t.retry,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io("<trace>", e))?;
    Ok(())
}
