use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::Rng;

use super::lists::{merge_interference_sets, pinned_nodes, probabilistic_interference_lists, InterferenceSet};
use super::matrix::PowerMatrix;
use crate::error::{Error, Result};
use crate::topology::{NetworkTopology, NodeId};

/// One transmission opportunity: a time slot on a sub-channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub slot: usize,
    pub channel: usize,
}

/// Frame geometry shared by all regions: one global slot clock and a
/// number of orthogonal sub-channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelPlan {
    pub frame_len: usize,
    pub num_channels: usize,
}

impl ChannelPlan {
    /// One slot per source of the largest region, every configured sub-channel.
    pub fn for_topology(topology: &NetworkTopology) -> Self {
        ChannelPlan {
            frame_len: topology.source_counts().into_iter().max().unwrap_or(0),
            num_channels: topology.radio.num_subchannels,
        }
    }

    pub fn capacity(&self) -> usize {
        self.frame_len * self.num_channels
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotSchedule {
    pub region: usize,
    pub frame_len: usize,
    /// slot -> (node -> sub-channel). A node holds at most one cell per slot.
    pub assignment: BTreeMap<usize, BTreeMap<NodeId, usize>>,
    /// Own sources pinned to an exclusive cell.
    pub orthogonal_nodes: BTreeSet<NodeId>,
}

impl SlotSchedule {
    pub fn cells_of(&self, node: NodeId) -> Vec<Cell> {
        self.assignment.iter().filter_map(|(&slot, m)| m.get(&node).map(|&channel| Cell { slot, channel })).collect()
    }

    pub fn channel_at(&self, node: NodeId, slot: usize) -> Option<usize> {
        self.assignment.get(&slot)?.get(&node).copied()
    }

    pub fn slot_count(&self, node: NodeId) -> usize {
        self.assignment.values().filter(|m| m.contains_key(&node)).count()
    }

    pub fn total_transmissions(&self) -> usize {
        self.assignment.values().map(BTreeMap::len).sum()
    }

    pub fn nodes(&self) -> BTreeSet<NodeId> {
        self.assignment.values().flat_map(|m| m.keys().copied()).collect()
    }
}

pub type Schedules = BTreeMap<usize, SlotSchedule>;

fn check_plan(topology: &NetworkTopology, plan: &ChannelPlan) -> Result<()> {
    let need = topology.source_counts().into_iter().max().unwrap_or(0);
    if plan.frame_len < need {
        return Err(Error::Parameter(format!(
            "frame of {} slots cannot hold a region with {need} sources",
            plan.frame_len
        )));
    }
    if plan.num_channels == 0 {
        return Err(Error::Parameter("at least one sub-channel is required".into()));
    }
    Ok(())
}

fn empty_schedules(topology: &NetworkTopology, plan: &ChannelPlan) -> Schedules {
    topology
        .regions
        .iter()
        .map(|r| {
            (
                r.id,
                SlotSchedule {
                    region: r.id,
                    frame_len: plan.frame_len,
                    assignment: (0..plan.frame_len).map(|t| (t, BTreeMap::new())).collect(),
                    orthogonal_nodes: BTreeSet::new(),
                },
            )
        })
        .collect()
}

/// Plain TDMA: source `k` of every region owns slot `k` on sub-channel 0.
pub fn baseline_schedule(topology: &NetworkTopology, plan: &ChannelPlan) -> Result<Schedules> {
    check_plan(topology, plan)?;
    let mut out = empty_schedules(topology, plan);
    for src in topology.sources() {
        out.get_mut(&src.id.region)
            .expect("region exists")
            .assignment
            .get_mut(&src.id.node)
            .expect("slot exists")
            .insert(src.id, 0);
    }
    Ok(out)
}

/// Slot and sub-channel assignment from interference sets.
///
/// Pinned sources (members of any set) are placed first, in node order, on
/// their own TDMA slot using the lowest sub-channel no other pinned source
/// holds there; if that slot is full they fall back to the lowest free cell
/// of the frame. Pinned cells are exclusive. The remaining cells of every
/// slot are then dealt to each region's other sources, at most one cell per
/// source per slot: the source whose TDMA slot it is goes first, the rest
/// follow a per-region round-robin cursor in ascending node order. Regions
/// are interleaved rank by rank and each pick takes the least reused free
/// sub-channel, lowest index on ties.
pub fn assign_channels(
    sets: &BTreeMap<usize, InterferenceSet>,
    topology: &NetworkTopology,
    plan: &ChannelPlan,
) -> Result<Schedules> {
    check_plan(topology, plan)?;
    for r in &topology.regions {
        if !sets.contains_key(&r.id) {
            return Err(Error::MissingRegion(r.id));
        }
    }
    let pinned = pinned_nodes(sets.values());
    for &p in &pinned {
        topology.node(p)?;
    }
    if pinned.len() > plan.capacity() {
        return Err(Error::Infeasible { pinned: pinned.len(), capacity: plan.capacity() });
    }

    let mut out = empty_schedules(topology, plan);
    // blocked[t][c]: cell held by a pinned source
    let mut blocked = vec![vec![false; plan.num_channels]; plan.frame_len];

    for &p in &pinned {
        let home = p.node;
        let cell = (0..plan.num_channels)
            .find(|&c| !blocked[home][c])
            .map(|c| Cell { slot: home, channel: c })
            .or_else(|| {
                (0..plan.frame_len).find_map(|t| {
                    (0..plan.num_channels).find(|&c| !blocked[t][c]).map(|c| Cell { slot: t, channel: c })
                })
            })
            .ok_or(Error::Infeasible { pinned: pinned.len(), capacity: plan.capacity() })?;
        blocked[cell.slot][cell.channel] = true;
        let sched = out.get_mut(&p.region).expect("region exists");
        sched.assignment.get_mut(&cell.slot).expect("slot exists").insert(p, cell.channel);
        sched.orthogonal_nodes.insert(p);
    }

    let reusers: Vec<Vec<NodeId>> =
        topology.regions.iter().map(|r| r.source_ids().filter(|s| !pinned.contains(s)).collect()).collect();
    let mut cursor = vec![0usize; reusers.len()];

    for (t, row) in blocked.iter().enumerate() {
        let free: Vec<usize> = (0..plan.num_channels).filter(|&c| !row[c]).collect();
        // per-region pick order for this slot
        let picks: Vec<Vec<NodeId>> = reusers
            .iter()
            .enumerate()
            .map(|(r, nodes)| {
                let m = nodes.len();
                let cap = free.len().min(m);
                let mut chosen = Vec::with_capacity(cap);
                if cap == 0 {
                    return chosen;
                }
                if let Some(&own) = nodes.iter().find(|n| n.node == t) {
                    chosen.push(own);
                }
                let mut steps = 0;
                while chosen.len() < cap && steps < m {
                    let cand = nodes[cursor[r] % m];
                    cursor[r] = (cursor[r] + 1) % m;
                    steps += 1;
                    if !chosen.contains(&cand) {
                        chosen.push(cand);
                    }
                }
                chosen
            })
            .collect();

        let mut load = vec![0usize; plan.num_channels];
        let mut used: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); reusers.len()];
        let depth = picks.iter().map(Vec::len).max().unwrap_or(0);
        for rank in 0..depth {
            for (r, region_picks) in picks.iter().enumerate() {
                let Some(&node) = region_picks.get(rank) else { continue };
                let c = free
                    .iter()
                    .copied()
                    .filter(|c| !used[r].contains(c))
                    .min_by_key(|&c| (load[c], c))
                    .expect("pick count never exceeds free channels");
                used[r].insert(c);
                load[c] += 1;
                out.get_mut(&r).expect("region exists").assignment.get_mut(&t).expect("slot exists").insert(node, c);
            }
        }
    }
    Ok(out)
}

/// Probabilistic variant: pins each list candidate with probability
/// `min(1, power / thr_mw)` before merging and assigning.
pub fn assign_channels_probabilistic<R: Rng + ?Sized>(
    matrix: &PowerMatrix,
    topology: &NetworkTopology,
    plan: &ChannelPlan,
    thr_mw: f64,
    rng: &mut R,
) -> Result<Schedules> {
    let lists = probabilistic_interference_lists(matrix, &topology.radio, thr_mw, rng)?;
    let sets = merge_interference_sets(&lists)?;
    assign_channels(&sets, topology, plan)
}

/// Regions x slots text grid. Entries read `label:cN`; a trailing `*` marks
/// a pinned source.
pub fn schedule_grid(schedules: &Schedules, topology: &NetworkTopology) -> String {
    let frame_len = schedules.values().map(|s| s.frame_len).max().unwrap_or(0);
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["region".to_string()];
    header.extend((0..frame_len).map(|t| format!("slot {}", t + 1)));
    rows.push(header);
    for s in schedules.values() {
        let mut row = vec![format!("RG{}", s.region + 1)];
        for t in 0..frame_len {
            let entries: Vec<String> = s
                .assignment
                .get(&t)
                .map(|m| {
                    let mut v: Vec<(usize, NodeId)> = m.iter().map(|(&n, &c)| (c, n)).collect();
                    v.sort();
                    v.into_iter()
                        .map(|(c, n)| {
                            let label = topology.node(n).map(|x| x.display_label()).unwrap_or_else(|_| n.to_string());
                            let star = if s.orthogonal_nodes.contains(&n) { "*" } else { "" };
                            format!("{label}{star}:c{c}")
                        })
                        .collect()
                })
                .unwrap_or_default();
            row.push(if entries.is_empty() { "-".into() } else { entries.join(" ") });
        }
        rows.push(row);
    }
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|x| x.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in &rows {
        let line: Vec<String> = r.iter().enumerate().map(|(c, x)| format!("{x:<w$}", w = widths[c])).collect();
        out.push_str(line.join(" | ").trim_end());
        out.push('\n');
    }
    out
}

/// CSV with one row per assigned cell: `region,slot,channel,node,label,pinned`.
pub fn write_schedule_csv<W: Write>(schedules: &Schedules, topology: &NetworkTopology, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["region", "slot", "channel", "node", "label", "pinned"])?;
    for s in schedules.values() {
        for (&t, m) in &s.assignment {
            let mut v: Vec<(usize, NodeId)> = m.iter().map(|(&n, &c)| (c, n)).collect();
            v.sort();
            for (c, n) in v {
                let label = topology.node(n).map(|x| x.display_label()).unwrap_or_default();
                w.write_record([
                    s.region.to_string(),
                    t.to_string(),
                    c.to_string(),
                    n.node.to_string(),
                    label,
                    s.orthogonal_nodes.contains(&n).to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("schedule.csv", e))?;
    Ok(())
}
