//! Monte-Carlo BER estimation and diversity-order fitting.
//!
//! Each SNR point is simulated in rounds of fixed-size batches. Batch `b`
//! of point `p` draws from its own ChaCha stream keyed by `(seed, p, b)`
//! and the stop rule is checked only between rounds, so a curve is
//! bit-identical for any worker count.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_channel, ChannelRealization, DualChannel};
use crate::detector::{detect_psm, MdPsmDetector};
use crate::error::{Error, Result};
use crate::link::{normalize, transmit_mdpsm, transmit_psm, Link, NoiseModel, SystemConfig};

/// Channel uses per batch.
pub const BATCH_USES: u64 = 2048;
/// Batches per stop-rule check.
pub const ROUND_BATCHES: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRule {
    pub min_bit_errors: u64,
    pub max_channel_uses: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { min_bit_errors: 200, max_channel_uses: 20_000_000 }
    }
}

impl StopRule {
    /// Run exactly `uses` channel uses regardless of the error count.
    pub fn fixed(uses: u64) -> Self {
        Self { min_bit_errors: u64::MAX, max_channel_uses: uses }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Fast,
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub stop: StopRule,
    pub seed: u64,
    /// Worker threads; 0 uses the global rayon pool.
    pub jobs: usize,
    /// Channel uses sharing one channel realization.
    pub coherence_uses: u64,
    pub detector: DetectorKind,
    /// Skip the remaining SNR points once a point falls below this BER.
    pub ber_floor: Option<f64>,
}

impl RunOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            stop: StopRule::default(),
            seed,
            jobs: 0,
            coherence_uses: 1,
            detector: DetectorKind::Fast,
            ber_floor: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub ber: f64,
    pub bit_errors: u64,
    pub bits_tested: u64,
    pub channel_uses: u64,
    /// The use cap was hit before the error target.
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    pub tag: String,
    pub config: SystemConfig,
    pub seed: u64,
    pub stop: StopRule,
    pub points: Vec<BerPoint>,
}

impl BerCurve {
    pub fn snr_db(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.snr_db).collect()
    }

    pub fn ber(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ber).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("snr_db,ber,bit_errors,bits_tested,capped\n");
        for p in &self.points {
            s.push_str(&format!(
                "{},{:e},{},{},{}\n",
                p.snr_db, p.ber, p.bit_errors, p.bits_tested, p.capped as u8
            ));
        }
        s
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    errors: u64,
    bits: u64,
    uses: u64,
}

impl std::ops::Add for Tally {
    type Output = Tally;
    fn add(self, o: Tally) -> Tally {
        Tally { errors: self.errors + o.errors, bits: self.bits + o.bits, uses: self.uses + o.uses }
    }
}

fn batch_rng(seed: u64, point: u64, batch: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&point.to_le_bytes());
    key[16..24].copy_from_slice(&batch.to_le_bytes());
    key[24..].copy_from_slice(b"mdpsmber");
    ChaCha8Rng::from_seed(key)
}

enum Simulator {
    Psm { link: Link, n_t: usize, n_r: usize },
    MdPsm { link: Link, det: MdPsmDetector, kind: DetectorKind, n_t1: usize, n_t2: usize, n_r: usize },
}

enum Channels {
    Single(ChannelRealization),
    Dual(DualChannel),
}

impl Simulator {
    fn new(config: &SystemConfig, kind: DetectorKind) -> Result<Self> {
        let link = Link::new(*config)?;
        Ok(match *config {
            SystemConfig::Psm(c) => Simulator::Psm { link, n_t: c.n_t, n_r: c.n_r },
            SystemConfig::MdPsm(c) => {
                let det = MdPsmDetector::new(link.receive_set().expect("MD-PSM link"))?;
                Simulator::MdPsm { link, det, kind, n_t1: c.n_t1, n_t2: c.n_t2, n_r: c.n_r }
            }
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Result<Channels> {
        Ok(match self {
            Simulator::Psm { n_t, n_r, .. } => Channels::Single(draw_channel(*n_t, *n_r, rng)?),
            Simulator::MdPsm { n_t1, n_t2, n_r, .. } => Channels::Dual(DualChannel::new(
                draw_channel(*n_t1, *n_r, rng)?,
                draw_channel(*n_t2, *n_r, rng)?,
            )?),
        })
    }

    fn link(&self) -> &Link {
        match self {
            Simulator::Psm { link, .. } | Simulator::MdPsm { link, .. } => link,
        }
    }

    /// Bit errors in one channel use.
    fn one_use<R: Rng>(&self, chan: &Channels, sigma2: f64, rng: &mut R) -> Result<u32> {
        let link = self.link();
        let msg = link.map_word(rng.random::<u64>());
        let detected = match (self, chan) {
            (Simulator::Psm { .. }, Channels::Single(ch)) => {
                let y = transmit_psm(&msg, ch, link.constellation(), sigma2, rng)?;
                let d = detect_psm(&normalize(&y, ch.beta()), link.constellation());
                link.unmap(d.i1, d.k1, 0, 0)
            }
            (Simulator::MdPsm { det, kind, .. }, Channels::Dual(dual)) => {
                let y = transmit_mdpsm(&msg, dual, link, sigma2, rng)?;
                let r: Vec<Complex64> = normalize(&y, dual.unified_beta());
                let d = match kind {
                    DetectorKind::Fast => det.detect_fast(&r),
                    DetectorKind::Joint => det.detect_joint(&r),
                };
                link.unmap(d.i1, d.k1, d.i2, d.k2)
            }
            _ => unreachable!("channel kind follows the simulator"),
        };
        Ok((detected ^ msg.word).count_ones())
    }

    fn batch(&self, uses: u64, sigma2: f64, coherence: u64, mut rng: ChaCha8Rng) -> Result<Tally> {
        let bits_per_use = u64::from(self.link().frame_len());
        let mut errors = 0u64;
        let mut chan = None;
        for u in 0..uses {
            if u % coherence == 0 {
                chan = Some(self.draw(&mut rng)?);
            }
            errors += u64::from(self.one_use(chan.as_ref().expect("drawn above"), sigma2, &mut rng)?);
        }
        Ok(Tally { errors, bits: uses * bits_per_use, uses })
    }
}

fn simulate_point(sim: &Simulator, point: u64, sigma2: f64, opts: &RunOptions) -> Result<Tally> {
    let stop = opts.stop;
    let coherence = opts.coherence_uses.max(1);
    let mut total = Tally::default();
    let mut next_batch = 0u64;
    let max_batches = stop.max_channel_uses.div_ceil(BATCH_USES);
    while total.errors < stop.min_bit_errors && next_batch < max_batches {
        let round: Vec<u64> = (next_batch..(next_batch + ROUND_BATCHES).min(max_batches)).collect();
        next_batch += round.len() as u64;
        let run = |b: &u64| {
            let uses = BATCH_USES.min(stop.max_channel_uses - b * BATCH_USES);
            sim.batch(uses, sigma2, coherence, batch_rng(opts.seed, point, *b))
        };
        let tallies: Vec<Result<Tally>> = round.par_iter().map(run).collect();
        for t in tallies {
            total = total + t?;
        }
    }
    Ok(total)
}

/// BER curve with the default options and the given stop rule.
pub fn run_ber(config: &SystemConfig, snr_grid_db: &[f64], stop: StopRule, seed: u64) -> Result<BerCurve> {
    let mut opts = RunOptions::new(seed);
    opts.stop = stop;
    run_ber_with(config, snr_grid_db, &opts)
}

pub fn run_ber_with(config: &SystemConfig, snr_grid_db: &[f64], opts: &RunOptions) -> Result<BerCurve> {
    if snr_grid_db.is_empty() {
        return Err(Error::Config("empty SNR grid".into()));
    }
    if opts.stop.max_channel_uses == 0 {
        return Err(Error::Config("max channel uses must be positive".into()));
    }
    let sim = Simulator::new(config, opts.detector)?;
    let work = || -> Result<Vec<BerPoint>> {
        let mut points = Vec::with_capacity(snr_grid_db.len());
        for (p, &snr_db) in snr_grid_db.iter().enumerate() {
            let noise = NoiseModel::from_db(config, snr_db);
            let t = simulate_point(&sim, p as u64, noise.sigma2, opts)?;
            let ber = t.errors as f64 / t.bits as f64;
            log::info!("{} @ {snr_db} dB: BER {ber:.3e} ({} errors / {} bits)", config, t.errors, t.bits);
            points.push(BerPoint {
                snr_db,
                ber,
                bit_errors: t.errors,
                bits_tested: t.bits,
                channel_uses: t.uses,
                capped: t.errors < opts.stop.min_bit_errors,
            });
            if opts.ber_floor.is_some_and(|f| ber < f) {
                break;
            }
        }
        Ok(points)
    };
    let points = if opts.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)?
    } else {
        work()?
    };
    Ok(BerCurve { tag: config.tag(), config: *config, seed: opts.seed, stop: opts.stop, points })
}

/// `n_T − n_R + 1` for PSM, `n_T1 + n_T2 − 2 n_R + 2` for MD-PSM.
pub fn theoretical_diversity(config: &SystemConfig) -> u32 {
    match config {
        SystemConfig::Psm(c) => (c.n_t - c.n_r + 1) as u32,
        SystemConfig::MdPsm(c) => (c.n_t1 + c.n_t2 - 2 * c.n_r + 2) as u32,
    }
}

/// `γ_b^{−d}` at `snr_db`.
pub fn reference_curve(snr_db: f64, order: f64) -> f64 {
    10f64.powf(-order * snr_db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityEstimate {
    pub order: f64,
    pub fit_range_db: (f64, f64),
    /// RMS residual of the fit in decades.
    pub residual: f64,
    pub points_used: usize,
}

/// Points used for slope fitting need at least this many errors.
pub const MIN_FIT_ERRORS: u64 = 100;

/// The top 10 dB of the points with BER below 1e-2.
pub fn default_fit_window(curve: &BerCurve) -> Option<(f64, f64)> {
    let hi = curve
        .points
        .iter()
        .filter(|p| p.ber > 0.0 && p.ber < 1e-2 && p.bit_errors >= MIN_FIT_ERRORS)
        .map(|p| p.snr_db)
        .fold(f64::NEG_INFINITY, f64::max);
    hi.is_finite().then_some((hi - 10.0, hi))
}

/// Least-squares slope of `log10(BER)` versus SNR in dB, times −10.
pub fn estimate_diversity(curve: &BerCurve, fit_range_db: Option<(f64, f64)>) -> Result<DiversityEstimate> {
    let range = match fit_range_db {
        Some(r) => r,
        None => default_fit_window(curve)
            .ok_or_else(|| Error::Estimation("no point below BER 1e-2 with enough errors".into()))?,
    };
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.snr_db >= range.0 - 1e-9 && p.snr_db <= range.1 + 1e-9)
        .filter(|p| p.ber > 0.0 && p.bit_errors >= MIN_FIT_ERRORS)
        .map(|p| (p.snr_db, p.ber.log10()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Estimation(format!(
            "need >= 3 points with >= {MIN_FIT_ERRORS} errors in [{}, {}] dB, found {}",
            range.0,
            range.1,
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DiversityEstimate { order: -10.0 * slope, fit_range_db: range, residual, points_used: pts.len() })
}

/// SNR (dB) at which the curve crosses `target`, interpolating `log10(BER)`
/// linearly between the bracketing points.
pub fn snr_at_ber(curve: &BerCurve, target: f64) -> Option<f64> {
    let lt = target.log10();
    curve.points.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        if a.ber >= target && b.ber < target && b.ber > 0.0 {
            let (la, lb) = (a.ber.log10(), b.ber.log10());
            Some(a.snr_db + (lt - la) / (lb - la) * (b.snr_db - a.snr_db))
        } else {
            None
        }
    })
}
