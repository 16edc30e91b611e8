//! Rotation-angle search for the second station's alphabet.
//!
//! The geometric criterion maximizes `d_min(Ω_d)` over a grid of angles.
//! Because sum symbols become rare as `n_R` grows, the optimum drifts
//! toward the maximizer of `d_min(Ω_a ∪ Ω_b)`; the BER-driven refinement
//! ranks candidate angles by simulation instead.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::{build_receive_set, min_distance_unchecked, psk_points, rotate, Constellation};
use crate::error::{Error, Result};
use crate::harness::{run_ber_with, BerPoint, RunOptions, StopRule};
use crate::link::SystemConfig;

/// Angles within this of the best `d_min` count as tied optima.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
}

impl AngleGrid {
    pub fn new(start_deg: f64, stop_deg: f64, step_deg: f64) -> Self {
        Self { start_deg, stop_deg, step_deg }
    }

    /// `[0°, 45°]` at 0.1°, or `[0°, 90°]` when both alphabets are BPSK.
    pub fn default_for(a: &Constellation, b: &Constellation) -> Self {
        let both_bpsk = a.order() == 2 && b.order() == 2;
        Self::new(0.0, if both_bpsk { 90.0 } else { 45.0 }, 0.1)
    }

    pub fn thetas(&self) -> Result<Vec<f64>> {
        if !(self.step_deg > 0.0) {
            return Err(Error::Config(format!("angle step must be positive, got {}", self.step_deg)));
        }
        if self.start_deg < 0.0 || self.stop_deg > 90.0 {
            return Err(Error::Config(format!(
                "angle range [{}, {}] leaves [0, 90] degrees",
                self.start_deg, self.stop_deg
            )));
        }
        if self.stop_deg < self.start_deg {
            return Err(Error::Config("empty angle grid".into()));
        }
        let n = ((self.stop_deg - self.start_deg) / self.step_deg + 1e-9).floor() as usize;
        Ok((0..=n)
            .map(|i| {
                let t = self.start_deg + i as f64 * self.step_deg;
                (t * 1e9).round() / 1e9
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSweepResult {
    pub thetas: Vec<f64>,
    /// `d_min(Ω_d)`, zero where uniqueness fails.
    pub dmin_values: Vec<f64>,
    /// `d_min(Ω_a ∪ Ω_b)`.
    pub dmin_union_values: Vec<f64>,
    pub uniqueness_ok: Vec<bool>,
    pub optimal_thetas: Vec<f64>,
}

impl AngleSweepResult {
    pub fn max_dmin(&self) -> f64 {
        self.dmin_values.iter().cloned().fold(0.0, f64::max)
    }

    /// Every angle attaining the maximum of `d_min(Ω_a ∪ Ω_b)`.
    pub fn union_optimal_thetas(&self) -> Vec<f64> {
        argmax_all(&self.thetas, &self.dmin_union_values)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta_deg,dmin_omega_d,dmin_union,uniqueness_ok\n");
        for i in 0..self.thetas.len() {
            s.push_str(&format!(
                "{},{:.12},{:.12},{}\n",
                self.thetas[i], self.dmin_values[i], self.dmin_union_values[i], self.uniqueness_ok[i] as u8
            ));
        }
        s
    }
}

fn argmax_all(thetas: &[f64], values: &[f64]) -> Vec<f64> {
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    thetas
        .iter()
        .zip(values)
        .filter(|(_, &v)| v >= best - TIE_TOLERANCE)
        .map(|(&t, _)| t)
        .collect()
}

fn union_dmin(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut u = Vec::with_capacity(a.len() + b.len());
    u.extend_from_slice(a);
    u.extend_from_slice(b);
    min_distance_unchecked(&u)
}

/// Evaluates both distance criteria at every grid angle. Grid points are
/// evaluated in parallel; results keep grid order.
pub fn sweep(a: &Constellation, b_base: &Constellation, grid: &AngleGrid) -> Result<AngleSweepResult> {
    let thetas = grid.thetas()?;
    let rows: Vec<(f64, f64, bool)> = thetas
        .par_iter()
        .map(|&t| {
            let b = rotate(b_base, t);
            let rs = build_receive_set(a, &b);
            (rs.min_distance(), union_dmin(a.points(), b.points()), rs.uniqueness_ok())
        })
        .collect();
    let dmin_values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let optimal_thetas = argmax_all(&thetas, &dmin_values);
    Ok(AngleSweepResult {
        dmin_union_values: rows.iter().map(|r| r.1).collect(),
        uniqueness_ok: rows.iter().map(|r| r.2).collect(),
        dmin_values,
        optimal_thetas,
        thetas,
    })
}

/// The interval bracketing the BER-optimal angle for M-PSK on both
/// stations: from the max-min angle of `Ω_d` (equiprobable symbols) to the
/// max-min angle of `Ω_a ∪ Ω_b` (the `n_R → ∞` limit). Both ends come from
/// sweeps over one symmetry period `[0, 180/M]` with resolution `step_deg`.
pub fn expected_optimum_range(psk_order: usize, step_deg: f64) -> Result<(f64, f64)> {
    if psk_order < 2 || !psk_order.is_power_of_two() {
        return Err(Error::Config(format!("{psk_order}-ary alphabet is not a supported PSK order")));
    }
    if !(step_deg > 0.0) {
        return Err(Error::Config("angle step must be positive".into()));
    }
    let pts = psk_points(psk_order);
    let period = 180.0 / psk_order as f64;
    let n = (period / step_deg + 1e-9).floor() as usize;
    let thetas: Vec<f64> = (0..=n).map(|i| ((i as f64 * step_deg) * 1e9).round() / 1e9).collect();
    let rows: Vec<(f64, f64)> = thetas
        .par_iter()
        .map(|&t| {
            let ph = Complex64::from_polar(1.0, t.to_radians());
            let b: Vec<Complex64> = pts.iter().map(|&s| s * ph).collect();
            let mut d = Vec::with_capacity(pts.len() * (pts.len() + 2));
            d.extend_from_slice(&pts);
            d.extend_from_slice(&b);
            for &x in &pts {
                for &y in &b {
                    d.push(x + y);
                }
            }
            let dm = min_distance_unchecked(&d);
            let dm = if dm < crate::constellation::COLLISION_TOLERANCE { 0.0 } else { dm };
            (dm, union_dmin(&pts, &b))
        })
        .collect();
    let d: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let u: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let lower = argmax_all(&thetas, &d)[0];
    let upper = argmax_all(&thetas, &u)
        .into_iter()
        .find(|&t| t >= lower)
        .unwrap_or(period);
    Ok((lower, upper))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineEntry {
    pub theta_deg: f64,
    /// `None` where the receive constellation is not unique.
    pub point: Option<BerPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineResult {
    pub best_theta_deg: f64,
    pub snr_db: f64,
    pub table: Vec<RefineEntry>,
}

impl RefineResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta_deg,ber,bit_errors,bits_tested,feasible\n");
        for e in &self.table {
            match e.point {
                Some(p) => s.push_str(&format!("{},{:e},{},{},1\n", e.theta_deg, p.ber, p.bit_errors, p.bits_tested)),
                None => s.push_str(&format!("{},,,,0\n", e.theta_deg)),
            }
        }
        s
    }
}

/// Simulates MD-PSM at every candidate angle with `trials` channel uses
/// each and returns the angle with the lowest BER (ties to the smaller
/// angle). Candidate `j` runs on seed `seed + j`.
pub fn ber_refine(
    config: &SystemConfig,
    candidate_thetas: &[f64],
    snr_db: f64,
    trials: u64,
    seed: u64,
    jobs: usize,
) -> Result<RefineResult> {
    let SystemConfig::MdPsm(base) = *config else {
        return Err(Error::Config("angle refinement needs an MD-PSM configuration".into()));
    };
    if candidate_thetas.is_empty() {
        return Err(Error::Config("no candidate angles".into()));
    }
    let mut opts = RunOptions::new(seed);
    opts.stop = StopRule::fixed(trials);
    opts.jobs = jobs;

    let mut table = Vec::with_capacity(candidate_thetas.len());
    for (j, &theta) in candidate_thetas.iter().enumerate() {
        let mut c = base;
        c.theta_deg = theta;
        opts.seed = seed.wrapping_add(j as u64);
        let point = match run_ber_with(&SystemConfig::MdPsm(c), &[snr_db], &opts) {
            Ok(curve) => Some(curve.points[0]),
            Err(Error::DetectorUndefined { .. }) => None,
            Err(e) => return Err(e),
        };
        table.push(RefineEntry { theta_deg: theta, point });
    }
    let best = table
        .iter()
        .filter_map(|e| e.point.map(|p| (e.theta_deg, p.ber)))
        .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.total_cmp(&y.0)))
        .ok_or_else(|| Error::Config("no candidate angle gives a unique receive constellation".into()))?;
    Ok(RefineResult { best_theta_deg: best.0, snr_db, table })
}

/// The conventional single-station PSM link that an MD-PSM configuration
/// is compared against: the first station's antennas and alphabet.
pub fn psm_baseline(config: &SystemConfig) -> Result<SystemConfig> {
    match *config {
        SystemConfig::MdPsm(c) => Ok(SystemConfig::psm(c.n_t1, c.n_r, c.scheme1)),
        SystemConfig::Psm(_) => Err(Error::Config("configuration is already PSM".into())),
    }
}

/// Picks the SNR from `grid_db` whose BER at `config` is closest to
/// `target` in the log domain, using a short pilot run per point.
pub fn pilot_snr(config: &SystemConfig, grid_db: &[f64], target: f64, trials: u64, seed: u64, jobs: usize) -> Result<f64> {
    let mut opts = RunOptions::new(seed);
    opts.stop = StopRule::fixed(trials);
    opts.jobs = jobs;
    let curve = run_ber_with(config, grid_db, &opts)?;
    curve
        .points
        .iter()
        .filter(|p| p.ber > 0.0)
        .min_by(|a, b| {
            (a.ber.log10() - target.log10()).abs().total_cmp(&(b.ber.log10() - target.log10()).abs())
        })
        .map(|p| p.snr_db)
        .ok_or_else(|| Error::Config("pilot run saw no errors at any SNR".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::Scheme;

    fn sweep_of(a: Scheme, b: Scheme) -> AngleSweepResult {
        let (a, b) = (Constellation::new(a), Constellation::new(b));
        sweep(&a, &b, &AngleGrid::default_for(&a, &b)).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(AngleGrid::new(0.0, 45.0, 0.0).thetas().is_err());
        assert!(AngleGrid::new(0.0, 100.0, 1.0).thetas().is_err());
        assert!(AngleGrid::new(10.0, 5.0, 1.0).thetas().is_err());
        let t = AngleGrid::new(0.0, 45.0, 0.1).thetas().unwrap();
        assert_eq!(t.len(), 451);
        assert_eq!(t[300], 30.0);
        assert_eq!(*t.last().unwrap(), 45.0);
    }

    #[test]
    fn qpsk_qpsk_optimum() {
        let s = sweep_of(Scheme::Qpsk, Scheme::Qpsk);
        assert_eq!(s.optimal_thetas, vec![30.0]);
        assert!((s.max_dmin() - 2.0 * 15f64.to_radians().sin()).abs() < 1e-9);
        assert_eq!(s.dmin_values[0], 0.0);
        assert!(!s.uniqueness_ok[0]);
        assert_eq!(s.union_optimal_thetas(), vec![45.0]);
    }

    #[test]
    fn psk8_ties() {
        let s = sweep_of(Scheme::Psk8, Scheme::Psk8);
        assert_eq!(s.optimal_thetas, vec![17.3, 27.7]);
    }

    #[test]
    fn bpsk_plateau() {
        let s = sweep_of(Scheme::Bpsk, Scheme::Bpsk);
        assert_eq!(s.optimal_thetas.first(), Some(&60.0));
        assert_eq!(s.optimal_thetas.last(), Some(&90.0));
        assert_eq!(s.optimal_thetas.len(), 301);
    }

    #[test]
    fn symmetric_about_45() {
        for (a, b) in [(Scheme::Qpsk, Scheme::Qpsk), (Scheme::Bpsk, Scheme::Psk8), (Scheme::Psk8, Scheme::Qam16)] {
            let (ca, cb) = (Constellation::new(a), Constellation::new(b));
            let s = sweep(&ca, &cb, &AngleGrid::new(0.0, 90.0, 0.5)).unwrap();
            let n = s.thetas.len();
            for i in 0..n {
                assert!((s.dmin_values[i] - s.dmin_values[n - 1 - i]).abs() < 1e-9, "{a}-{b} at {}", s.thetas[i]);
            }
        }
    }

    #[test]
    fn optimum_ranges() {
        let (lo, hi) = expected_optimum_range(4, 0.05).unwrap();
        assert_eq!((lo, hi), (30.0, 45.0));
        let (lo, hi) = expected_optimum_range(16, 0.05).unwrap();
        assert!((lo - 9.7).abs() <= 0.05, "{lo}");
        assert_eq!(hi, 11.25);
        assert!(expected_optimum_range(6, 0.1).is_err());
    }

    #[test]
    fn range_matches_full_sweeps() {
        let q = Constellation::new(Scheme::Qpsk);
        let s = sweep(&q, &q, &AngleGrid::new(0.0, 45.0, 0.05)).unwrap();
        let (lo, hi) = expected_optimum_range(4, 0.05).unwrap();
        assert_eq!(s.optimal_thetas[0], lo);
        assert_eq!(s.union_optimal_thetas()[0], hi);
    }

    #[test]
    fn csv_header() {
        let s = sweep_of(Scheme::Qpsk, Scheme::Qpsk);
        let csv = s.to_csv();
        assert!(csv.starts_with("theta_deg,dmin_omega_d,dmin_union,uniqueness_ok\n"));
        assert_eq!(csv.lines().count(), 452);
    }

    #[test]
    fn baseline_of_mdpsm() {
        let md = SystemConfig::mdpsm(8, 6, 4, Scheme::Qam16, Scheme::Qpsk, 20.0);
        assert_eq!(psm_baseline(&md).unwrap(), SystemConfig::psm(8, 4, Scheme::Qam16));
        assert!(psm_baseline(&psm_baseline(&md).unwrap()).is_err());
    }

    #[test]
    fn refine_rejects_psm_and_skips_infeasible() {
        let psm = SystemConfig::psm(2, 2, Scheme::Qpsk);
        assert!(ber_refine(&psm, &[30.0], 10.0, 100, 0, 1).is_err());
        let md = SystemConfig::mdpsm(2, 2, 2, Scheme::Qpsk, Scheme::Qpsk, 0.0);
        let r = ber_refine(&md, &[0.0, 30.0], 15.0, 2048, 3, 1).unwrap();
        assert!(r.table[0].point.is_none());
        assert_eq!(r.best_theta_deg, 30.0);
    }
}
