//! The three-region worked example: hand-set received powers that induce
//! the example's interference lists.

use std::collections::BTreeSet;

use super::matrix::PowerMatrix;
use crate::topology::{build_topology, example_spec, NetworkTopology, NodeId};

pub struct WorkedExample {
    pub topology: NetworkTopology,
    pub matrix: PowerMatrix,
}

// rows: observer region; columns: source region, then node 0..3 (dBm).
// Margin 10 dB. Cut-offs: RG1 -70, RG2 -69, RG3 -72.
// (2,C) at RG1 sits exactly on the cut-off and must stay out.
const POWERS: [[[f64; 4]; 3]; 3] = [
    [[-55.0, -58.0, -57.0, -60.0], [-82.0, -79.0, -70.0, -66.0], [-88.0, -84.0, -78.0, -69.0]],
    [[-80.0, -65.0, -72.0, -67.0], [-54.0, -57.0, -59.0, -56.0], [-86.0, -81.0, -77.0, -68.0]],
    [[-90.0, -85.0, -83.0, -79.0], [-84.0, -80.0, -70.0, -74.0], [-56.0, -60.0, -58.0, -62.0]],
];

pub fn example_matrix() -> WorkedExample {
    let topology = build_topology(&example_spec()).expect("embedded example layout is valid");
    let mut matrix = PowerMatrix::new(topology.source_counts());
    for (obs, row) in POWERS.iter().enumerate() {
        for (region, powers) in row.iter().enumerate() {
            for (k, &p) in powers.iter().enumerate() {
                matrix.set(obs, NodeId::source(region, k), p).expect("example indices are in range");
            }
        }
    }
    WorkedExample { topology, matrix }
}

fn resolve(topology: &NetworkTopology, pairs: &[(usize, &str)]) -> BTreeSet<NodeId> {
    pairs
        .iter()
        .map(|&(region, label)| {
            topology.regions[region - 1]
                .sources
                .iter()
                .find(|n| n.label.as_deref() == Some(label))
                .map(|n| n.id)
                .expect("label exists in example layout")
        })
        .collect()
}

/// Interference lists exactly as the example states them, indexed by region.
pub fn worked_example_lists(topology: &NetworkTopology) -> [BTreeSet<NodeId>; 3] {
    [
        resolve(topology, &[(2, "D"), (3, "d")]),
        resolve(topology, &[(1, "2"), (1, "4"), (3, "d")]),
        resolve(topology, &[(2, "C")]),
    ]
}

/// Interference sets as the example states them. The first omits (1,4) although the union
/// rule puts it there, because (1,4) is in the second region's list.
pub fn worked_example_sets(topology: &NetworkTopology) -> [BTreeSet<NodeId>; 3] {
    [
        resolve(topology, &[(2, "D"), (3, "d"), (1, "2")]),
        resolve(topology, &[(1, "2"), (1, "4"), (3, "d"), (2, "C"), (2, "D")]),
        resolve(topology, &[(2, "C"), (3, "d")]),
    ]
}
