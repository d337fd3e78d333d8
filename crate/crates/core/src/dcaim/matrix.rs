use rand::Rng;

use crate::channel::received_power_dbm;
use crate::error::{Error, Result};
use crate::topology::{NetworkTopology, NodeId};

/// Received power (dBm) of every source as seen by every region's observer.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMatrix {
    source_counts: Vec<usize>,
    offsets: Vec<usize>,
    // [observer region][flattened source index]
    entries: Vec<Vec<Option<f64>>>,
}

impl PowerMatrix {
    pub fn new(source_counts: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(source_counts.len());
        let mut total = 0;
        for &c in &source_counts {
            offsets.push(total);
            total += c;
        }
        let entries = vec![vec![None; total]; source_counts.len()];
        PowerMatrix { source_counts, offsets, entries }
    }

    pub fn num_regions(&self) -> usize {
        self.source_counts.len()
    }

    pub fn source_counts(&self) -> &[usize] {
        &self.source_counts
    }

    /// All sources, region-major.
    pub fn sources(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.source_counts.iter().enumerate().flat_map(|(r, &n)| (0..n).map(move |k| NodeId::source(r, k)))
    }

    fn index(&self, source: NodeId) -> Option<usize> {
        if !source.is_source() || source.node >= *self.source_counts.get(source.region)? {
            return None;
        }
        Some(self.offsets[source.region] + source.node)
    }

    pub fn set(&mut self, observer: usize, source: NodeId, dbm: f64) -> Result<()> {
        let idx = self.index(source).ok_or(Error::UnknownNode(source))?;
        let row = self
            .entries
            .get_mut(observer)
            .ok_or_else(|| Error::Parameter(format!("observer region {observer} out of range")))?;
        row[idx] = Some(dbm);
        Ok(())
    }

    pub fn get(&self, observer: usize, source: NodeId) -> Option<f64> {
        self.entries.get(observer)?[self.index(source)?]
    }

    pub(crate) fn require(&self, observer: usize, source: NodeId) -> Result<f64> {
        self.get(observer, source).ok_or(Error::IncompleteMatrix { observer, source_id: source })
    }

    /// Number of recorded entries.
    pub fn len(&self) -> usize {
        self.entries.iter().flatten().filter(|e| e.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Weakest own-region source at `observer`'s relay.
    pub fn min_own(&self, observer: usize) -> Result<f64> {
        let n = *self
            .source_counts
            .get(observer)
            .ok_or_else(|| Error::Parameter(format!("observer region {observer} out of range")))?;
        (0..n)
            .map(|k| self.require(observer, NodeId::source(observer, k)))
            .try_fold(f64::INFINITY, |m, p| p.map(|p| m.min(p)))
    }
}

/// Orthogonal measurement round: sources transmit one after another and each
/// region's observer relay records the received power.
pub fn measurement_round<R: Rng + ?Sized>(topology: &NetworkTopology, rng: &mut R) -> Result<PowerMatrix> {
    let mut m = PowerMatrix::new(topology.source_counts());
    for src in topology.sources() {
        for region in &topology.regions {
            let p = received_power_dbm(src.id, region.observer(), topology, rng)?;
            m.set(region.id, src.id, p)?;
        }
    }
    Ok(m)
}
