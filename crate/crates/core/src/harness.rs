//! Scenario runner: scheme comparison, the outage analysis, the worked
//! example checks and schedule inspection, each writing plain CSV/text
//! artifacts to an output directory.
//!
//! Randomness layout under one seed: the measurement round reads
//! `streams::MEASUREMENT`, scheme `k` plays on `streams::SCHEME_BASE + k`,
//! threshold calibration uses `streams::ANALYSIS` and the outage trials
//! `streams::ANALYSIS + 1`. Schemes therefore never perturb each other and
//! can run concurrently.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analysis::{calibrate_outage_threshold, lemma1_check, write_lemma1_csv, Interferers, Lemma1Report};
use crate::dcaim::{
    assign_channels, build_interference_lists, example_matrix, measurement_round, merge_interference_sets,
    schedule_grid, worked_example_lists, worked_example_sets, write_schedule_csv, ChannelPlan, InterferenceList,
    InterferenceSet, PowerMatrix, Schedules,
};
use crate::energy::{write_energy_csv, EnergyLedger};
use crate::error::{Error, Result};
use crate::mac::{mean_source_sinr, run_frames, set_violations, write_trace_csv, FrameTrace, SchemeKind};
use crate::rng::{streams, substream};
use crate::scenario::Scenario;
use crate::topology::{NetworkTopology, NodeId};

/// Everything a run needs besides the subcommand. Flags win over
/// overrides, which win over the scenario file.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    /// `None` runs the built-in reference scenario.
    pub scenario_path: Option<PathBuf>,
    /// Empty means every scheme.
    pub schemes: Vec<SchemeKind>,
    pub frames: Option<u64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub overrides: Vec<String>,
    /// Also write the per-transmission trace of every scheme.
    pub traces: bool,
}

impl RunConfig {
    pub fn resolve(&self) -> Result<Scenario> {
        let base = match &self.scenario_path {
            Some(p) => Scenario::load(p)?,
            None => Scenario::reference(),
        };
        let mut s = base.apply_overrides(&self.overrides)?;
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(f) = self.frames {
            s.frames = f;
        }
        if let Some(t) = self.trials {
            s.trials = t;
        }
        s.validate()?;
        Ok(s)
    }

    fn schemes(&self) -> Vec<SchemeKind> {
        if self.schemes.is_empty() {
            SchemeKind::ALL.to_vec()
        } else {
            let set: BTreeSet<SchemeKind> = self.schemes.iter().copied().collect();
            set.into_iter().collect()
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn prepare(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn labels(topo: &NetworkTopology, nodes: &BTreeSet<NodeId>) -> String {
    if nodes.is_empty() {
        return "{}".into();
    }
    let v: Vec<String> = nodes.iter().map(|&n| topo.member_label(n)).collect();
    format!("{{{}}}", v.join(", "))
}

/// Interference bookkeeping of one measurement round.
#[derive(Debug, Clone)]
pub struct Allocation {
    pub matrix: PowerMatrix,
    pub lists: Vec<InterferenceList>,
    pub sets: BTreeMap<usize, InterferenceSet>,
    pub plan: ChannelPlan,
    pub schedules: Schedules,
}

/// Measurement round, lists, sets and the DCAIM schedule for a topology.
pub fn allocate(topo: &NetworkTopology, seed: u64) -> Result<Allocation> {
    let matrix = measurement_round(topo, &mut substream(seed, streams::MEASUREMENT))?;
    let lists = build_interference_lists(&matrix, &topo.radio)?;
    let sets = merge_interference_sets(&lists)?;
    let plan = ChannelPlan::for_topology(topo);
    let schedules = assign_channels(&sets, topo, &plan)?;
    Ok(Allocation { matrix, lists, sets, plan, schedules })
}

impl Allocation {
    pub fn describe(&self, topo: &NetworkTopology) -> String {
        let mut s = String::new();
        for l in &self.lists {
            let _ = writeln!(s, "IL{} = {}", l.owner + 1, labels(topo, &l.members));
        }
        for set in self.sets.values() {
            let _ = writeln!(s, "IS{} = {}", set.owner + 1, labels(topo, &set.members));
        }
        let _ = writeln!(s, "frame: {} slots x {} sub-channels", self.plan.frame_len, self.plan.num_channels);
        s
    }
}

#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub scheme: SchemeKind,
    pub traces: Vec<FrameTrace>,
    pub ledger: EnergyLedger,
    /// Mean source-phase SINR (dB) and sample count per source.
    pub sinr: BTreeMap<NodeId, (f64, usize)>,
    pub delivered: usize,
}

/// DCAIM minus OR mean SINR, per source.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrDelta {
    pub per_node: BTreeMap<NodeId, f64>,
    /// Sources without a sample under one of the two schemes.
    pub missing: Vec<NodeId>,
    pub mean_db: f64,
    pub min_db: f64,
}

impl SinrDelta {
    /// DCAIM ahead at every source.
    pub fn all_positive(&self) -> bool {
        self.missing.is_empty() && !self.per_node.is_empty() && self.per_node.values().all(|&d| d > 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub scenario: Scenario,
    pub topology: NetworkTopology,
    pub allocation: Allocation,
    pub runs: Vec<SchemeRun>,
    /// Interference-set members sharing a cell in the executed DCAIM frames.
    pub violations: usize,
}

/// Play every requested scheme over the same topology and allocation.
pub fn compare(scenario: &Scenario, schemes: &[SchemeKind]) -> Result<Comparison> {
    let topology = scenario.build_topology()?;
    let allocation = allocate(&topology, scenario.seed)?;
    let runs = schemes
        .par_iter()
        .map(|&k| {
            let mut rng = substream(scenario.seed, streams::SCHEME_BASE + k.index());
            let traces =
                run_frames(&topology, k, Some(&allocation.schedules), scenario.frames, scenario.mac, &mut rng)?;
            let mut ledger = EnergyLedger::new(k, scenario.energy, topology.radio);
            for f in &traces {
                ledger.charge_frame(f)?;
            }
            let sinr = mean_source_sinr(&traces);
            let delivered = traces.iter().map(FrameTrace::delivered_to_coordinator).sum();
            Ok(SchemeRun { scheme: k, traces, ledger, sinr, delivered })
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = runs
        .iter()
        .find(|r| r.scheme == SchemeKind::Dcaim)
        .map(|r| set_violations(&r.traces, &allocation.sets).len())
        .unwrap_or(0);
    Ok(Comparison { scenario: scenario.clone(), topology, allocation, runs, violations })
}

impl Comparison {
    pub fn run(&self, k: SchemeKind) -> Option<&SchemeRun> {
        self.runs.iter().find(|r| r.scheme == k)
    }

    pub fn final_energy(&self, k: SchemeKind) -> Option<f64> {
        self.run(k).map(|r| r.ledger.total_mj())
    }

    pub fn sinr_delta(&self) -> Option<SinrDelta> {
        let d = self.run(SchemeKind::Dcaim)?;
        let o = self.run(SchemeKind::OrCsma)?;
        let mut per_node = BTreeMap::new();
        let mut missing = Vec::new();
        for src in self.topology.sources() {
            match (d.sinr.get(&src.id), o.sinr.get(&src.id)) {
                (Some(a), Some(b)) => {
                    per_node.insert(src.id, a.0 - b.0);
                }
                _ => missing.push(src.id),
            }
        }
        let n = per_node.len().max(1) as f64;
        let mean_db = per_node.values().sum::<f64>() / n;
        let min_db = per_node.values().copied().fold(f64::INFINITY, f64::min);
        Some(SinrDelta { per_node, missing, mean_db, min_db })
    }

    /// Final-frame energy strictly increasing in `order`; `None` if a
    /// scheme was not run.
    pub fn energy_ordered(&self, order: &[SchemeKind]) -> Option<bool> {
        let e: Option<Vec<f64>> = order.iter().map(|&k| self.final_energy(k)).collect();
        e.map(|e| e.windows(2).all(|w| w[0] < w[1]))
    }

    pub fn summary(&self) -> String {
        let s = &self.scenario;
        let t = &self.topology;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "seed {}  frames {}  regions {}  sources {}  relays {}",
            s.seed,
            s.frames,
            t.num_regions(),
            t.num_sources(),
            t.num_relays()
        );
        out.push_str(&self.allocation.describe(t));
        let pinned: usize = self.allocation.schedules.values().map(|x| x.orthogonal_nodes.len()).sum();
        let scheduled: usize = self.allocation.schedules.values().map(|x| x.total_transmissions()).sum();
        let _ = writeln!(out, "pinned sources: {pinned} of {}", t.num_sources());
        let _ =
            writeln!(out, "scheduled transmissions per frame: {scheduled} (one slot per source: {})", t.num_sources());
        let _ = writeln!(out, "set members sharing a cell in executed frames: {}", self.violations);
        out.push_str("\nscheme        energy_mj  delivered\n");
        for r in &self.runs {
            let _ = writeln!(out, "{:<12} {:>10.4} {:>10}", r.scheme.as_str(), r.ledger.total_mj(), r.delivered);
        }
        if let Some(ok) = self.energy_ordered(&SchemeKind::ALL) {
            let _ = writeln!(out, "energy ordered dcaim < or-csma < single-hop: {}", yes(ok));
        }
        if let Some(d) = self.sinr_delta() {
            let _ = writeln!(
                out,
                "\nmean SINR delta dcaim - or-csma: {:.3} dB (min {:.3} dB, positive at {} of {} sources)",
                d.mean_db,
                d.min_db,
                d.per_node.values().filter(|&&x| x > 0.0).count(),
                t.num_sources()
            );
            for (n, v) in &d.per_node {
                let _ = writeln!(out, "  {:<8} {:>8.3} dB", t.member_label(*n), v);
            }
            for n in &d.missing {
                let _ = writeln!(out, "  {:<8} no sample", t.member_label(*n));
            }
        }
        out
    }

    /// Write the comparison artifacts; returns the written paths.
    pub fn write(&self, dir: &Path, traces: bool) -> Result<Vec<PathBuf>> {
        prepare(dir)?;
        let mut written = Vec::new();
        let mut put = |name: &str, bytes: Vec<u8>| -> Result<()> {
            let p = dir.join(name);
            write_file(&p, &bytes)?;
            written.push(p);
            Ok(())
        };

        let ledgers: Vec<EnergyLedger> = self.runs.iter().map(|r| r.ledger.clone()).collect();
        let mut buf = Vec::new();
        write_energy_csv(&ledgers, frame_duration(&self.runs), &mut buf)?;
        put("energy.csv", buf)?;

        let mut buf = Vec::new();
        self.write_sinr_csv(&mut buf)?;
        put("sinr.csv", buf)?;

        let mut grid = self.allocation.describe(&self.topology);
        grid.push('\n');
        grid.push_str(&schedule_grid(&self.allocation.schedules, &self.topology));
        put("schedule.txt", grid.into_bytes())?;

        let mut buf = Vec::new();
        write_schedule_csv(&self.allocation.schedules, &self.topology, &mut buf)?;
        put("schedule.csv", buf)?;

        put("summary.txt", self.summary().into_bytes())?;
        put("effective_config.toml", self.scenario.effective_config()?.into_bytes())?;

        if traces {
            for r in &self.runs {
                let mut buf = Vec::new();
                write_trace_csv(&r.traces, &mut buf)?;
                put(&format!("trace_{}.csv", r.scheme.as_str()), buf)?;
            }
        }
        Ok(written)
    }

    fn write_sinr_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node", "region", "label", "scheme", "mean_sinr_db", "samples"])?;
        for src in self.topology.sources() {
            for r in &self.runs {
                if let Some(&(db, n)) = r.sinr.get(&src.id) {
                    w.write_record([
                        src.id.to_string(),
                        (src.id.region + 1).to_string(),
                        src.display_label(),
                        r.scheme.as_str().to_string(),
                        db.to_string(),
                        n.to_string(),
                    ])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io("<sinr>", e))?;
        Ok(())
    }
}

/// Frames have variable length under contention; the time axis uses the
/// longest frame observed so that every scheme shares one clock.
fn frame_duration(runs: &[SchemeRun]) -> f64 {
    runs.iter().flat_map(|r| r.traces.iter()).map(|f| f.slots_used as f64 * f.slot_duration_s).fold(0.0, f64::max)
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn run_compare(cfg: &RunConfig) -> Result<Comparison> {
    let scenario = cfg.resolve()?;
    let c = compare(&scenario, &cfg.schemes())?;
    c.write(&cfg.out_dir, cfg.traces)?;
    Ok(c)
}

#[derive(Debug, Clone)]
pub struct Lemma1Run {
    pub report: Lemma1Report,
    /// The threshold came from the pilot run rather than the scenario.
    pub calibrated: bool,
}

impl fmt::Display for Lemma1Run {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "threshold source: {}", if self.calibrated { "calibrated" } else { "scenario" })?;
        write!(f, "{}", self.report)
    }
}

pub fn lemma1(scenario: &Scenario) -> Result<Lemma1Run> {
    let topo = scenario.build_topology()?;
    let a = &scenario.analysis;
    let has_interferers = !Interferers::new(&topo, a.reference_region)?.sources().is_empty();
    let (thr, calibrated) = if a.thr_outage_mw > 0.0 {
        (a.thr_outage_mw, false)
    } else if has_interferers {
        let mut rng = substream(scenario.seed, streams::ANALYSIS);
        (calibrate_outage_threshold(&topo, a.reference_region, a.target_outage, a.pilot_trials, &mut rng)?, true)
    } else {
        // nothing interferes, so any threshold gives zero outage
        (1.0, false)
    };
    let mut rng = substream(scenario.seed, streams::ANALYSIS + 1);
    let report = lemma1_check(&topo, a.reference_region, thr, scenario.trials, &mut rng)?;
    Ok(Lemma1Run { report, calibrated })
}

pub fn run_lemma1(cfg: &RunConfig) -> Result<Lemma1Run> {
    let scenario = cfg.resolve()?;
    let run = lemma1(&scenario)?;
    prepare(&cfg.out_dir)?;
    let mut buf = Vec::new();
    write_lemma1_csv(&run.report, &mut buf)?;
    write_file(&cfg.out_dir.join("lemma1.csv"), &buf)?;
    write_file(&cfg.out_dir.join("lemma1.txt"), format!("{run}\n").as_bytes())?;
    write_file(&cfg.out_dir.join("effective_config.toml"), scenario.effective_config()?.as_bytes())?;
    Ok(run)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone)]
pub struct GoldenReport {
    pub checks: Vec<Check>,
    /// Differences between the example's stated sets and the union rule that are
    /// reported but not failed.
    pub errata: Vec<String>,
    pub grid: String,
}

impl GoldenReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for GoldenReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name)?;
            if !c.pass {
                writeln!(f, "     expected {}", c.expected)?;
                writeln!(f, "     actual   {}", c.actual)?;
            }
        }
        for e in &self.errata {
            writeln!(f, "NOTE {e}")?;
        }
        writeln!(f)?;
        write!(f, "{}", self.grid)
    }
}

fn same(name: String, expected: String, actual: String) -> Check {
    Check { pass: expected == actual, name, expected, actual }
}

/// Union rule written out independently of the library merge.
fn union_rule(lists: &[InterferenceList], owner: usize) -> BTreeSet<NodeId> {
    let mut s = lists.iter().find(|l| l.owner == owner).map(|l| l.members.clone()).unwrap_or_default();
    for l in lists.iter().filter(|l| l.owner != owner) {
        s.extend(l.members.iter().filter(|n| n.region == owner));
    }
    s
}

/// The worked example: stated lists and sets, the four-slot property
/// and cell exclusivity of the resulting schedule.
pub fn golden() -> Result<GoldenReport> {
    let ex = example_matrix();
    let topo = &ex.topology;
    let lists = build_interference_lists(&ex.matrix, &topo.radio)?;
    let sets = merge_interference_sets(&lists)?;
    let stated_lists = worked_example_lists(topo);
    let stated_sets = worked_example_sets(topo);
    let mut checks = Vec::new();
    let mut errata = Vec::new();

    for (i, want) in stated_lists.iter().enumerate() {
        let got = lists.iter().find(|l| l.owner == i).map(|l| l.members.clone()).unwrap_or_default();
        checks.push(same(format!("IL{} matches the worked example", i + 1), labels(topo, want), labels(topo, &got)));
    }
    for (i, stated) in stated_sets.iter().enumerate() {
        let got = sets.get(&i).map(|s| s.members.clone()).unwrap_or_default();
        let rule = union_rule(&lists, i);
        checks.push(same(format!("IS{} follows the union rule", i + 1), labels(topo, &rule), labels(topo, &got)));
        if *stated == rule {
            checks.push(same(
                format!("IS{} matches the worked example", i + 1),
                labels(topo, stated),
                labels(topo, &got),
            ));
        } else {
            let extra: BTreeSet<NodeId> = rule.difference(stated).copied().collect();
            let absent: BTreeSet<NodeId> = stated.difference(&rule).copied().collect();
            errata.push(format!(
                "stated IS{} = {} differs from the union rule: missing {}, extra {}",
                i + 1,
                labels(topo, stated),
                labels(topo, &extra),
                labels(topo, &absent)
            ));
        }
    }

    let plan = ChannelPlan { frame_len: 4, num_channels: topo.radio.num_subchannels };
    let schedules = assign_channels(&sets, topo, &plan)?;
    let node1 = topo.regions[0].sources[0].id;
    let slots = schedules[&0].slot_count(node1);
    checks.push(same(
        format!("{} holds every slot of a 4-slot frame", topo.member_label(node1)),
        "4".into(),
        slots.to_string(),
    ));
    let total: usize = schedules.values().map(|s| s.total_transmissions()).sum();
    checks.push(Check {
        name: format!("scheduled transmissions ({total}) exceed one slot per source"),
        pass: total > topo.num_sources(),
        expected: format!("> {}", topo.num_sources()),
        actual: total.to_string(),
    });

    let mut shared = Vec::new();
    for t in 0..plan.frame_len {
        let mut cells: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
        for s in schedules.values() {
            for (&n, &c) in s.assignment.get(&t).into_iter().flatten() {
                cells.entry(c).or_default().push(n);
            }
        }
        for (c, nodes) in cells {
            for set in sets.values() {
                let members: Vec<String> =
                    nodes.iter().filter(|n| set.members.contains(n)).map(|&n| topo.member_label(n)).collect();
                if members.len() > 1 {
                    shared.push(format!("slot {} c{c}: {}", t + 1, members.join(" ")));
                }
            }
        }
    }
    checks.push(same(
        "no two members of one set share a cell".into(),
        "none".into(),
        if shared.is_empty() { "none".into() } else { shared.join("; ") },
    ));

    let grid = schedule_grid(&schedules, topo);
    Ok(GoldenReport { checks, errata, grid })
}

pub fn run_golden(cfg: &RunConfig) -> Result<GoldenReport> {
    let report = golden()?;
    prepare(&cfg.out_dir)?;
    write_file(&cfg.out_dir.join("golden.txt"), report.to_string().as_bytes())?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct ScheduleRun {
    pub topology: NetworkTopology,
    pub allocation: Allocation,
}

impl fmt::Display for ScheduleRun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\n{}",
            self.allocation.describe(&self.topology),
            schedule_grid(&self.allocation.schedules, &self.topology)
        )
    }
}

pub fn run_schedule(cfg: &RunConfig) -> Result<ScheduleRun> {
    let scenario = cfg.resolve()?;
    let topology = scenario.build_topology()?;
    let allocation = allocate(&topology, scenario.seed)?;
    let run = ScheduleRun { topology, allocation };
    prepare(&cfg.out_dir)?;
    write_file(&cfg.out_dir.join("schedule.txt"), run.to_string().as_bytes())?;
    let mut buf = Vec::new();
    write_schedule_csv(&run.allocation.schedules, &run.topology, &mut buf)?;
    write_file(&cfg.out_dir.join("schedule.csv"), &buf)?;
    write_file(&cfg.out_dir.join("effective_config.toml"), scenario.effective_config()?.as_bytes())?;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Scenario {
        Scenario::reference().apply_overrides(&["frames=20", "trials=2000", "analysis.pilot_trials=2000"]).unwrap()
    }

    fn cfg(dir: &Path) -> RunConfig {
        RunConfig {
            out_dir: dir.to_path_buf(),
            overrides: vec!["frames=20".into(), "trials=2000".into(), "analysis.pilot_trials=2000".into()],
            ..RunConfig::default()
        }
    }

    #[test]
    fn flags_beat_overrides() {
        let c =
            RunConfig { seed: Some(9), overrides: vec!["seed=3".into(), "frames=5".into()], ..RunConfig::default() };
        let s = c.resolve().unwrap();
        assert_eq!((s.seed, s.frames), (9, 5));
    }

    #[test]
    fn compare_writes_the_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        run_compare(&cfg(dir.path())).unwrap();
        for f in ["energy.csv", "sinr.csv", "schedule.txt", "summary.txt", "effective_config.toml"] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        let energy = std::fs::read_to_string(dir.path().join("energy.csv")).unwrap();
        assert_eq!(energy.lines().next(), Some("frame,time_s,scheme,cumulative_mj"));
        assert_eq!(energy.lines().count(), 1 + 20 * 3);
        let sinr = std::fs::read_to_string(dir.path().join("sinr.csv")).unwrap();
        assert_eq!(sinr.lines().next(), Some("node,region,label,scheme,mean_sinr_db,samples"));
        let dumped = Scenario::load(&dir.path().join("effective_config.toml")).unwrap();
        assert_eq!(dumped.frames, 20);
    }

    #[test]
    fn compare_is_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut ca = cfg(a.path());
        ca.traces = true;
        let mut cb = cfg(b.path());
        cb.traces = true;
        run_compare(&ca).unwrap();
        run_compare(&cb).unwrap();
        for f in ["energy.csv", "sinr.csv", "schedule.csv", "summary.txt", "trace_dcaim.csv", "trace_or-csma.csv"] {
            assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
        }
    }

    #[test]
    fn scheme_subset_runs_alone() {
        let c = compare(&small(), &[SchemeKind::SingleHop]).unwrap();
        assert_eq!(c.runs.len(), 1);
        assert!(c.sinr_delta().is_none());
        assert!(c.energy_ordered(&SchemeKind::ALL).is_none());
    }

    #[test]
    fn one_scheme_does_not_depend_on_the_others() {
        let all = compare(&small(), &SchemeKind::ALL).unwrap();
        let alone = compare(&small(), &[SchemeKind::OrCsma]).unwrap();
        assert_eq!(all.run(SchemeKind::OrCsma).unwrap().traces, alone.runs[0].traces);
    }

    #[test]
    fn golden_passes_and_flags_the_first_set() {
        let r = golden().unwrap();
        assert!(r.passed(), "{r}");
        assert_eq!(r.errata.len(), 1);
        assert!(r.errata[0].starts_with("stated IS1"));
        assert!(r.errata[0].contains("missing {(1,4)}"), "{}", r.errata[0]);
    }

    #[test]
    fn lemma1_orders_hold() {
        let run = lemma1(&small()).unwrap();
        assert!(run.calibrated);
        assert!(run.report.outage_ordering_holds && run.report.reuse_ordering_holds);
        assert_eq!(run.report.pathwise_violations, 0);
    }

    #[test]
    fn lemma1_single_trial_is_legal() {
        let s = small().apply_overrides(&["trials=1"]).unwrap();
        let run = lemma1(&s).unwrap();
        assert_eq!(run.report.outage[0].n_trials, 1);
        assert_eq!(run.report.outage[0].confidence_halfwidth, 0.0);
    }

    #[test]
    fn lemma1_without_interferers_has_no_outage() {
        let mut s = small();
        s.topology.regions.truncate(1);
        let run = lemma1(&s).unwrap();
        assert!(run.report.outage.iter().all(|o| o.p_out == 0.0));
    }

    #[test]
    fn explicit_threshold_is_used() {
        let s = small().apply_overrides(&["analysis.thr_outage_mw=1e-9"]).unwrap();
        let run = lemma1(&s).unwrap();
        assert!(!run.calibrated);
        assert_eq!(run.report.thr_mw, 1e-9);
    }

    #[test]
    fn schedule_run_writes_grid() {
        let dir = tempfile::tempdir().unwrap();
        let run = run_schedule(&cfg(dir.path())).unwrap();
        let text = std::fs::read_to_string(dir.path().join("schedule.txt")).unwrap();
        assert!(text.contains("IL1 = ") && text.contains("slot 1"));
        assert_eq!(run.allocation.schedules.len(), 3);
    }

    #[test]
    fn missing_scenario_file_is_an_io_error() {
        let c = RunConfig { scenario_path: Some("/nonexistent/x.toml".into()), ..RunConfig::default() };
        assert!(matches!(c.resolve(), Err(Error::Io { .. })));
    }
}
