//! Log-distance path loss with Gaussian-in-dB shadowing, received power and
//! SINR.
//!
//! Every call that can shadow draws exactly one standard normal per link,
//! even when sigma is zero, so the stream position does not depend on the
//! shadowing setting. Interference is summed in linear milliwatts.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::topology::{NetworkTopology, NodeId, RadioParams};

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Shadowing-free path loss `PL(d0) + 10 * alpha * log10(d / d0)`.
pub fn mean_path_loss_db(distance_m: f64, radio: &RadioParams) -> Result<f64> {
    if !(distance_m > 0.0 && distance_m.is_finite()) {
        return Err(Error::Domain(format!("distance must be positive and finite, got {distance_m}")));
    }
    Ok(radio.pl_ref_db + 10.0 * radio.path_loss_exponent * (distance_m / radio.ref_distance_m).log10())
}

/// Path loss including one shadowing draw from `rng`.
pub fn path_loss_db<R: Rng + ?Sized>(distance_m: f64, radio: &RadioParams, rng: &mut R) -> Result<f64> {
    let mean = mean_path_loss_db(distance_m, radio)?;
    let z: f64 = rng.sample(StandardNormal);
    Ok(mean + radio.shadowing_sigma_db * z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx: NodeId,
    pub rx: NodeId,
    pub distance_m: f64,
    pub path_loss_db: f64,
    pub rx_power_dbm: f64,
    pub shadowing_draw_db: f64,
}

pub fn link_budget<R: Rng + ?Sized>(
    tx: NodeId,
    rx: NodeId,
    topology: &NetworkTopology,
    rng: &mut R,
) -> Result<LinkBudget> {
    if tx == rx {
        return Err(Error::Domain(format!("link from {tx} to itself")));
    }
    let distance_m = topology.position(tx)?.distance(&topology.position(rx)?);
    let radio = &topology.radio;
    let mean = mean_path_loss_db(distance_m, radio)?;
    let path_loss_db = path_loss_db(distance_m, radio, rng)?;
    Ok(LinkBudget {
        tx,
        rx,
        distance_m,
        path_loss_db,
        rx_power_dbm: radio.tx_power_dbm - path_loss_db,
        shadowing_draw_db: path_loss_db - mean,
    })
}

pub fn received_power_dbm<R: Rng + ?Sized>(
    tx: NodeId,
    rx: NodeId,
    topology: &NetworkTopology,
    rng: &mut R,
) -> Result<f64> {
    link_budget(tx, rx, topology, rng).map(|b| b.rx_power_dbm)
}

/// Received power with the shadowing term left out.
pub fn mean_received_power_dbm(tx: NodeId, rx: NodeId, topology: &NetworkTopology) -> Result<f64> {
    if tx == rx {
        return Err(Error::Domain(format!("link from {tx} to itself")));
    }
    let d = topology.position(tx)?.distance(&topology.position(rx)?);
    Ok(topology.radio.tx_power_dbm - mean_path_loss_db(d, &topology.radio)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrSample {
    pub rx: NodeId,
    pub signal_dbm: f64,
    pub interference_mw: f64,
    pub noise_mw: f64,
    pub sinr_db: f64,
}

impl SinrSample {
    pub fn new(rx: NodeId, signal_dbm: f64, interference_mw: f64, noise_mw: f64) -> Self {
        let sinr_db = mw_to_dbm(dbm_to_mw(signal_dbm) / (interference_mw + noise_mw));
        SinrSample { rx, signal_dbm, interference_mw, noise_mw, sinr_db }
    }
}

/// SINR at `rx` for the signal of `signal_tx` while every node in
/// `concurrent` transmits on the same channel. Draw order: the signal link,
/// then the interferers in iteration order.
pub fn sinr_at<'a, R, I>(
    rx: NodeId,
    signal_tx: NodeId,
    concurrent: I,
    topology: &NetworkTopology,
    rng: &mut R,
) -> Result<SinrSample>
where
    R: Rng + ?Sized,
    I: IntoIterator<Item = &'a NodeId>,
{
    let signal_dbm = received_power_dbm(signal_tx, rx, topology, rng)?;
    let mut interference_mw = 0.0;
    for &other in concurrent {
        if other == signal_tx {
            return Err(Error::Domain(format!("{signal_tx} listed as its own interferer")));
        }
        interference_mw += dbm_to_mw(received_power_dbm(other, rx, topology, rng)?);
    }
    Ok(SinrSample::new(rx, signal_dbm, interference_mw, dbm_to_mw(topology.radio.noise_floor_dbm)))
}
