//! Per-node radio energy accounting over frame traces.
//!
//! A transmission costs `(P_tx + P_circuit_tx) * slot` at the sender and
//! `P_circuit_rx * slot` at the addressed receiver (once per slot, however
//! many packets collide there). Relays listening to a slot in which nothing
//! arrives pay `P_idle * slot`. The coordinator is charged like any other
//! receiver but left out of the network total, since its budget is treated
//! as unconstrained. Powers are in milliwatts and slots in seconds, so
//! energies come out in millijoules.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::channel::dbm_to_mw;
use crate::error::{Error, Result};
use crate::mac::{FrameTrace, SchemeKind};
use crate::topology::{NodeId, RadioParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyModel {
    pub p_circuit_tx_mw: f64,
    pub p_circuit_rx_mw: f64,
    pub p_idle_mw: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel { p_circuit_tx_mw: 3.0, p_circuit_rx_mw: 3.0, p_idle_mw: 0.1 }
    }
}

impl EnergyModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p_circuit_tx_mw", self.p_circuit_tx_mw),
            ("p_circuit_rx_mw", self.p_circuit_rx_mw),
            ("p_idle_mw", self.p_idle_mw),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn tx_mj(&self, radio: &RadioParams, slot_s: f64) -> f64 {
        (dbm_to_mw(radio.tx_power_dbm) + self.p_circuit_tx_mw) * slot_s
    }

    pub fn rx_mj(&self, slot_s: f64) -> f64 {
        self.p_circuit_rx_mw * slot_s
    }

    pub fn idle_mj(&self, slot_s: f64) -> f64 {
        self.p_idle_mw * slot_s
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct NodeEnergy {
    pub tx_mj: f64,
    pub rx_mj: f64,
    pub idle_mj: f64,
}

impl NodeEnergy {
    pub fn total(&self) -> f64 {
        self.tx_mj + self.rx_mj + self.idle_mj
    }
}

/// Cumulative energy of one scheme, charged frame by frame in order.
#[derive(Debug, Clone)]
pub struct EnergyLedger {
    scheme: SchemeKind,
    model: EnergyModel,
    radio: RadioParams,
    nodes: BTreeMap<NodeId, NodeEnergy>,
    /// Network total after each charged frame.
    series: Vec<f64>,
}

impl EnergyLedger {
    pub fn new(scheme: SchemeKind, model: EnergyModel, radio: RadioParams) -> Self {
        EnergyLedger { scheme, model, radio, nodes: BTreeMap::new(), series: Vec::new() }
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    pub fn frames(&self) -> u64 {
        self.series.len() as u64
    }

    pub fn charge_frame(&mut self, trace: &FrameTrace) -> Result<()> {
        let expected = self.frames();
        if trace.frame != expected {
            return Err(Error::OutOfOrderFrame { expected, got: trace.frame });
        }
        if trace.scheme != self.scheme {
            return Err(Error::Parameter(format!("{} trace charged to the {} ledger", trace.scheme, self.scheme)));
        }
        let slot = trace.slot_duration_s;
        let tx = self.model.tx_mj(&self.radio, slot);
        let rx = self.model.rx_mj(slot);
        let idle = self.model.idle_mj(slot);
        let mut listened: BTreeSet<(usize, NodeId)> = BTreeSet::new();
        for t in &trace.transmissions {
            self.nodes.entry(t.tx).or_default().tx_mj += tx;
            if listened.insert((t.slot, t.rx)) {
                self.nodes.entry(t.rx).or_default().rx_mj += rx;
            }
        }
        for (&n, &slots) in &trace.idle_listening {
            if slots > 0 {
                self.nodes.entry(n).or_default().idle_mj += idle * slots as f64;
            }
        }
        let total = self.nodes.iter().filter(|(n, _)| **n != NodeId::coordinator()).map(|(_, e)| e.total()).sum();
        self.series.push(total);
        Ok(())
    }

    pub fn total_mj(&self) -> f64 {
        self.series.last().copied().unwrap_or(0.0)
    }

    pub fn series(&self) -> &[f64] {
        &self.series
    }

    pub fn node(&self, id: NodeId) -> NodeEnergy {
        self.nodes.get(&id).copied().unwrap_or_default()
    }

    pub fn nodes(&self) -> &BTreeMap<NodeId, NodeEnergy> {
        &self.nodes
    }
}

#[derive(Serialize)]
struct SeriesRow<'a> {
    frame: u64,
    time_s: f64,
    scheme: &'a str,
    cumulative_mj: f64,
}

/// Long-format energy time series: one row per (frame, scheme).
/// `frame_duration_s` converts frame indices to the time column.
pub fn write_energy_csv<W: Write>(ledgers: &[EnergyLedger], frame_duration_s: f64, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let frames = ledgers.iter().map(|l| l.series.len()).max().unwrap_or(0);
    for f in 0..frames {
        for l in ledgers {
            if let Some(&e) = l.series.get(f) {
                w.serialize(SeriesRow {
                    frame: f as u64,
                    time_s: (f + 1) as f64 * frame_duration_s,
                    scheme: l.scheme.as_str(),
                    cumulative_mj: e,
                })?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<energy>", e))?;
    Ok(())
}
