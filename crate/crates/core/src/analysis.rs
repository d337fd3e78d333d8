//! Monte Carlo outage probability and reuse factor at a reference region.
//!
//! Each trial draws one shadowing realization of the power `delta_j` every
//! foreign source puts on the reference region's observer relay, plus one
//! uniform per source for probabilistic pinning. Trial `t` uses its own
//! stream derived from a base seed, so trials can run in any order and the
//! original and probabilistic estimators can share the exact same draws.
//!
//! * Original: outage when `sum(delta_j) > thr`; a source reuses when
//!   `delta_j <= thr`.
//! * Probabilistic: outage when the residual `sum(delta_j * (1 - min(1,
//!   delta_j / thr)))` exceeds `thr`; a source is pinned for certain above
//!   `thr` and with probability `delta_j / thr` below it.
//!
//! Every residual term is at most its raw term, so under shared draws the
//! probabilistic outage indicator never exceeds the original one.

use std::fmt;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{dbm_to_mw, received_power_dbm};
use crate::error::{Error, Result};
use crate::rng::{streams, substream};
use crate::topology::{NetworkTopology, NodeId};

const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pinning {
    Original,
    Probabilistic,
}

impl Pinning {
    pub fn as_str(self) -> &'static str {
        match self {
            Pinning::Original => "original",
            Pinning::Probabilistic => "probabilistic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    pub scheme: Pinning,
    pub p_out: f64,
    pub n_trials: u64,
    /// 95% normal-approximation halfwidth.
    pub confidence_halfwidth: f64,
}

impl OutageEstimate {
    fn from_count(scheme: Pinning, hits: u64, n: u64) -> Self {
        let p = hits as f64 / n as f64;
        OutageEstimate { scheme, p_out: p, n_trials: n, confidence_halfwidth: Z95 * (p * (1.0 - p) / n as f64).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReuseEstimate {
    pub scheme: Pinning,
    /// Mean count of sources left free to reuse slots.
    pub avg_reuse: f64,
    pub n_trials: u64,
    pub confidence_halfwidth: f64,
    /// Number of foreign sources considered.
    pub n_sources: usize,
    /// Per-source pinning frequency, sources in topology order.
    pub pin_rate: Vec<(NodeId, f64)>,
}

/// The foreign sources seen by one region's observer relay.
#[derive(Debug, Clone)]
pub struct Interferers<'a> {
    topology: &'a NetworkTopology,
    observer: NodeId,
    sources: Vec<NodeId>,
}

impl<'a> Interferers<'a> {
    pub fn new(topology: &'a NetworkTopology, reference_region: usize) -> Result<Self> {
        let region = topology
            .regions
            .get(reference_region)
            .ok_or_else(|| Error::Parameter(format!("reference region {reference_region} does not exist")))?;
        Ok(Interferers {
            topology,
            observer: region.observer(),
            sources: topology.sources().map(|n| n.id).filter(|id| id.region != reference_region).collect(),
        })
    }

    pub fn observer(&self) -> NodeId {
        self.observer
    }

    pub fn sources(&self) -> &[NodeId] {
        &self.sources
    }

    /// Received powers (mW) and pinning uniforms of trial `t`.
    pub fn draw(&self, base_seed: u64, t: u64) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut rng = substream(base_seed, streams::TRIAL_BASE + t);
        let powers = self
            .sources
            .iter()
            .map(|&s| received_power_dbm(s, self.observer, self.topology, &mut rng).map(dbm_to_mw))
            .collect::<Result<Vec<_>>>()?;
        let uniforms = self.sources.iter().map(|_| rng.random::<f64>()).collect();
        Ok((powers, uniforms))
    }
}

/// Interference left after probabilistic pinning, one term per source.
pub fn residual_interference(powers_mw: &[f64], thr_mw: f64) -> f64 {
    powers_mw.iter().map(|&d| d * (1.0 - (d / thr_mw).clamp(0.0, 1.0))).sum()
}

fn check_threshold(thr_mw: f64) -> Result<()> {
    if thr_mw.is_nan() || thr_mw <= 0.0 {
        return Err(Error::Domain(format!("outage threshold must be > 0 mW, got {thr_mw}")));
    }
    Ok(())
}

fn check_trials(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Parameter("at least one trial is required".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
struct Tally {
    out_orig: u64,
    out_prob: u64,
    reuse_orig: u64,
    reuse_prob: u64,
    reuse_orig_sq: u64,
    reuse_prob_sq: u64,
    diff_sq: u64,
    pathwise_violations: u64,
    prob_only_outages: u64,
    pins_orig: Vec<u64>,
    pins_prob: Vec<u64>,
}

impl Tally {
    fn new(n: usize) -> Self {
        Tally { pins_orig: vec![0; n], pins_prob: vec![0; n], ..Default::default() }
    }

    fn merge(mut self, o: Tally) -> Tally {
        self.out_orig += o.out_orig;
        self.out_prob += o.out_prob;
        self.reuse_orig += o.reuse_orig;
        self.reuse_prob += o.reuse_prob;
        self.reuse_orig_sq += o.reuse_orig_sq;
        self.reuse_prob_sq += o.reuse_prob_sq;
        self.diff_sq += o.diff_sq;
        self.pathwise_violations += o.pathwise_violations;
        self.prob_only_outages += o.prob_only_outages;
        for (a, b) in self.pins_orig.iter_mut().zip(o.pins_orig) {
            *a += b;
        }
        for (a, b) in self.pins_prob.iter_mut().zip(o.pins_prob) {
            *a += b;
        }
        self
    }

    fn add(&mut self, powers: &[f64], uniforms: &[f64], thr: f64) {
        let raw: f64 = powers.iter().sum();
        let residual = residual_interference(powers, thr);
        let (o, p) = (raw > thr, residual > thr);
        self.out_orig += o as u64;
        self.out_prob += p as u64;
        if residual > raw {
            self.pathwise_violations += 1;
        }
        if p && !o {
            self.prob_only_outages += 1;
        }
        let (mut r_o, mut r_p) = (0u64, 0u64);
        for (k, (&d, &u)) in powers.iter().zip(uniforms).enumerate() {
            let pinned_o = d > thr;
            let pinned_p = pinned_o || u < d / thr;
            self.pins_orig[k] += pinned_o as u64;
            self.pins_prob[k] += pinned_p as u64;
            r_o += !pinned_o as u64;
            r_p += !pinned_p as u64;
        }
        self.reuse_orig += r_o;
        self.reuse_prob += r_p;
        self.reuse_orig_sq += r_o * r_o;
        self.reuse_prob_sq += r_p * r_p;
        self.diff_sq += (r_o - r_p) * (r_o - r_p);
    }
}

fn run_trials(inter: &Interferers<'_>, thr: f64, n: u64, base_seed: u64) -> Result<Tally> {
    let k = inter.sources.len();
    (0..n)
        .into_par_iter()
        .try_fold(
            || Tally::new(k),
            |mut acc, t| {
                let (p, u) = inter.draw(base_seed, t)?;
                acc.add(&p, &u, thr);
                Ok(acc)
            },
        )
        .try_reduce(|| Tally::new(k), |a, b| Ok(a.merge(b)))
}

fn mean_halfwidth(sum: u64, sum_sq: u64, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum as f64 / nf;
    if n < 2 {
        return (mean, f64::INFINITY);
    }
    let var = ((sum_sq as f64) - nf * mean * mean).max(0.0) / (nf - 1.0);
    (mean, Z95 * (var / nf).sqrt())
}

fn reuse_estimate(scheme: Pinning, tally: &Tally, inter: &Interferers<'_>, n: u64) -> ReuseEstimate {
    let (sum, sq, pins) = match scheme {
        Pinning::Original => (tally.reuse_orig, tally.reuse_orig_sq, &tally.pins_orig),
        Pinning::Probabilistic => (tally.reuse_prob, tally.reuse_prob_sq, &tally.pins_prob),
    };
    let (avg_reuse, confidence_halfwidth) = mean_halfwidth(sum, sq, n);
    ReuseEstimate {
        scheme,
        avg_reuse,
        n_trials: n,
        confidence_halfwidth,
        n_sources: inter.sources.len(),
        pin_rate: inter.sources.iter().zip(pins).map(|(&s, &c)| (s, c as f64 / n as f64)).collect(),
    }
}

pub fn estimate_outage<R: Rng + ?Sized>(
    topology: &NetworkTopology,
    reference_region: usize,
    scheme: Pinning,
    thr_mw: f64,
    n_trials: u64,
    rng: &mut R,
) -> Result<OutageEstimate> {
    check_threshold(thr_mw)?;
    check_trials(n_trials)?;
    let inter = Interferers::new(topology, reference_region)?;
    let tally = run_trials(&inter, thr_mw, n_trials, rng.random())?;
    let hits = match scheme {
        Pinning::Original => tally.out_orig,
        Pinning::Probabilistic => tally.out_prob,
    };
    Ok(OutageEstimate::from_count(scheme, hits, n_trials))
}

pub fn estimate_reuse<R: Rng + ?Sized>(
    topology: &NetworkTopology,
    reference_region: usize,
    scheme: Pinning,
    thr_mw: f64,
    n_trials: u64,
    rng: &mut R,
) -> Result<ReuseEstimate> {
    check_threshold(thr_mw)?;
    check_trials(n_trials)?;
    let inter = Interferers::new(topology, reference_region)?;
    let tally = run_trials(&inter, thr_mw, n_trials, rng.random())?;
    Ok(reuse_estimate(scheme, &tally, &inter, n_trials))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Report {
    pub base_seed: u64,
    pub thr_mw: f64,
    pub reference_region: usize,
    pub outage: [OutageEstimate; 2],
    pub reuse: [ReuseEstimate; 2],
    pub outage_ordering_holds: bool,
    pub reuse_ordering_holds: bool,
    /// Trials where the residual exceeded the raw sum; zero by construction.
    pub pathwise_violations: u64,
    /// Trials in outage under the probabilistic scheme only.
    pub prob_only_outages: u64,
    pub outage_gap: f64,
    pub reuse_gap: f64,
    /// 95% halfwidth of the paired reuse difference.
    pub reuse_gap_halfwidth: f64,
}

/// Both estimators on shared draws.
pub fn lemma1_check<R: Rng + ?Sized>(
    topology: &NetworkTopology,
    reference_region: usize,
    thr_mw: f64,
    n_trials: u64,
    rng: &mut R,
) -> Result<Lemma1Report> {
    check_threshold(thr_mw)?;
    check_trials(n_trials)?;
    let inter = Interferers::new(topology, reference_region)?;
    let base_seed = rng.random();
    let tally = run_trials(&inter, thr_mw, n_trials, base_seed)?;
    let outage = [
        OutageEstimate::from_count(Pinning::Original, tally.out_orig, n_trials),
        OutageEstimate::from_count(Pinning::Probabilistic, tally.out_prob, n_trials),
    ];
    let reuse = [
        reuse_estimate(Pinning::Original, &tally, &inter, n_trials),
        reuse_estimate(Pinning::Probabilistic, &tally, &inter, n_trials),
    ];
    let (reuse_gap, reuse_gap_halfwidth) = mean_halfwidth(tally.reuse_orig - tally.reuse_prob, tally.diff_sq, n_trials);
    Ok(Lemma1Report {
        base_seed,
        thr_mw,
        reference_region,
        outage_ordering_holds: outage[1].p_out <= outage[0].p_out,
        reuse_ordering_holds: reuse[1].avg_reuse <= reuse[0].avg_reuse,
        outage_gap: outage[0].p_out - outage[1].p_out,
        outage,
        reuse,
        pathwise_violations: tally.pathwise_violations,
        prob_only_outages: tally.prob_only_outages,
        reuse_gap,
        reuse_gap_halfwidth,
    })
}

/// Threshold at which a pilot run of `n_pilot` trials sees an original
/// outage frequency of `target`: the `1 - target` quantile of the pilot's
/// interference sums.
pub fn calibrate_outage_threshold<R: Rng + ?Sized>(
    topology: &NetworkTopology,
    reference_region: usize,
    target: f64,
    n_pilot: u64,
    rng: &mut R,
) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Domain(format!("target outage must lie in (0, 1), got {target}")));
    }
    check_trials(n_pilot)?;
    let inter = Interferers::new(topology, reference_region)?;
    if inter.sources.is_empty() {
        return Err(Error::Domain("reference region has no interferers to calibrate against".into()));
    }
    let base: u64 = rng.random();
    let mut sums = (0..n_pilot)
        .into_par_iter()
        .map(|t| inter.draw(base, t).map(|(p, _)| p.iter().sum::<f64>()))
        .collect::<Result<Vec<f64>>>()?;
    sums.sort_by(f64::total_cmp);
    let idx = (((1.0 - target) * n_pilot as f64).ceil() as usize).clamp(1, sums.len()) - 1;
    Ok(sums[idx])
}

impl fmt::Display for Lemma1Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "reference region: RG{}", self.reference_region + 1)?;
        writeln!(f, "threshold: {:.6e} mW", self.thr_mw)?;
        writeln!(f, "trials: {}  base seed: {}", self.outage[0].n_trials, self.base_seed)?;
        for (o, r) in self.outage.iter().zip(&self.reuse) {
            writeln!(
                f,
                "{:<14} p_out {:.5} +/- {:.5}   avg_reuse {:.4} +/- {:.4} of {}",
                o.scheme.as_str(),
                o.p_out,
                o.confidence_halfwidth,
                r.avg_reuse,
                r.confidence_halfwidth,
                r.n_sources
            )?;
        }
        writeln!(f, "outage gap: {:.5}  ordering holds: {}", self.outage_gap, self.outage_ordering_holds)?;
        writeln!(
            f,
            "reuse gap: {:.4} +/- {:.4}  ordering holds: {}",
            self.reuse_gap, self.reuse_gap_halfwidth, self.reuse_ordering_holds
        )?;
        write!(f, "pathwise violations: {}", self.pathwise_violations)
    }
}

#[derive(Serialize)]
struct ReportRow {
    scheme: &'static str,
    p_out: f64,
    halfwidth: f64,
    avg_reuse: f64,
    reuse_halfwidth: f64,
    n_trials: u64,
    seed: u64,
}

pub fn write_lemma1_csv<W: Write>(report: &Lemma1Report, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (o, r) in report.outage.iter().zip(&report.reuse) {
        w.serialize(ReportRow {
            scheme: o.scheme.as_str(),
            p_out: o.p_out,
            halfwidth: o.confidence_halfwidth,
            avg_reuse: r.avg_reuse,
            reuse_halfwidth: r.confidence_halfwidth,
            n_trials: o.n_trials,
            seed: report.base_seed,
        })?;
    }
    w.flush().map_err(|e| Error::io("<lemma1>", e))?;
    Ok(())
}
