use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::matrix::PowerMatrix;
use crate::channel::dbm_to_mw;
use crate::error::{Error, Result};
use crate::topology::{NodeId, RadioParams};

/// Foreign sources that interfere with region `owner`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterferenceList {
    pub owner: usize,
    pub members: BTreeSet<NodeId>,
}

/// Sources that need an orthogonal channel from `owner`'s point of view:
/// its own list plus its own sources listed by any other region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterferenceSet {
    pub owner: usize,
    pub members: BTreeSet<NodeId>,
}

/// The list predicate, in dB: `power > min_own - delta_thr`.
pub fn exceeds_threshold(power_dbm: f64, min_own_dbm: f64, delta_thr_db: f64) -> bool {
    power_dbm > min_own_dbm - delta_thr_db
}

pub fn build_interference_list(matrix: &PowerMatrix, owner: usize, radio: &RadioParams) -> Result<InterferenceList> {
    let min_own = matrix.min_own(owner)?;
    let mut members = BTreeSet::new();
    for src in matrix.sources().filter(|s| s.region != owner) {
        let p = matrix.require(owner, src)?;
        if exceeds_threshold(p, min_own, radio.delta_thr_db) {
            members.insert(src);
        }
    }
    Ok(InterferenceList { owner, members })
}

pub fn build_interference_lists(matrix: &PowerMatrix, radio: &RadioParams) -> Result<Vec<InterferenceList>> {
    (0..matrix.num_regions()).map(|i| build_interference_list(matrix, i, radio)).collect()
}

pub fn merge_interference_sets(lists: &[InterferenceList]) -> Result<BTreeMap<usize, InterferenceSet>> {
    let mut sets = BTreeMap::new();
    for l in lists {
        let prev = sets.insert(l.owner, InterferenceSet { owner: l.owner, members: l.members.clone() });
        if prev.is_some() {
            return Err(Error::DuplicateOwner(l.owner));
        }
    }
    for l in lists {
        for m in &l.members {
            sets.get_mut(&m.region).ok_or(Error::MissingRegion(m.region))?.members.insert(*m);
        }
    }
    Ok(sets)
}

/// Every source that belongs to some interference set.
pub fn pinned_nodes<'a>(sets: impl IntoIterator<Item = &'a InterferenceSet>) -> BTreeSet<NodeId> {
    sets.into_iter().flat_map(|s| s.members.iter().copied()).collect()
}

/// Pinning probability `delta / thr` on linear powers, clamped to [0, 1].
pub fn pin_probability(power_mw: f64, thr_mw: f64) -> f64 {
    (power_mw / thr_mw).clamp(0.0, 1.0)
}

/// Interference lists for the probabilistic variant: each (observer, source)
/// pair that meets the list predicate is kept with probability
/// `pin_probability(power, thr_mw)`. One uniform is drawn per candidate pair,
/// observers ascending, sources region-major.
pub fn probabilistic_interference_lists<R: Rng + ?Sized>(
    matrix: &PowerMatrix,
    radio: &RadioParams,
    thr_mw: f64,
    rng: &mut R,
) -> Result<Vec<InterferenceList>> {
    if thr_mw.is_nan() || thr_mw <= 0.0 {
        return Err(Error::Domain(format!("linear threshold must be > 0, got {thr_mw}")));
    }
    let mut lists = build_interference_lists(matrix, radio)?;
    for l in &mut lists {
        let owner = l.owner;
        let candidates = std::mem::take(&mut l.members);
        for src in candidates {
            let p = pin_probability(dbm_to_mw(matrix.require(owner, src)?), thr_mw);
            if rng.random::<f64>() < p {
                l.members.insert(src);
            }
        }
    }
    Ok(lists)
}
