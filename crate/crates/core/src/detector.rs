//! Maximum-likelihood detection for PSM and MD-PSM.
//!
//! All costs use the halved metric `|s|²/2 − Re{r* s}`, so that the
//! MD-PSM unequal-antenna cost is the sum of one such term per station and
//! the equal-antenna cost is the same term evaluated on the Minkowski-sum
//! symbol. Energy halves are precomputed once per receive set.

use num_complex::Complex64;

use crate::constellation::{closed_form_energy_terms, Constellation, ReceiveSet};
use crate::error::{Error, Result};

#[inline]
fn branch_cost(half_energy: f64, r: Complex64, s: Complex64) -> f64 {
    half_energy - (r.re * s.re + r.im * s.im)
}

/// A detected hypothesis. PSM fills `i1`/`k1` only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionResult {
    pub i1: usize,
    pub i2: usize,
    pub k1: usize,
    pub k2: usize,
    pub cost: f64,
}

impl DetectionResult {
    fn key(&self) -> (usize, usize, usize, usize) {
        (self.i1, self.i2, self.k1, self.k2)
    }

    /// True when `self` should replace `other`: lower cost, ties broken
    /// lexicographically on `(i1, i2, k1, k2)`.
    fn beats(&self, other: &DetectionResult) -> bool {
        self.cost < other.cost || (self.cost == other.cost && self.key() < other.key())
    }
}

/// Exact ML detection for PSM over all `n_R · M` hypotheses.
pub fn detect_psm(r: &[Complex64], constellation: &Constellation) -> DetectionResult {
    let points = constellation.points();
    let mut best = DetectionResult { i1: 0, i2: 0, k1: 0, k2: 0, cost: f64::INFINITY };
    if constellation.scheme().is_psk() {
        // equal energies: maximize the correlation alone
        let mut best_corr = f64::NEG_INFINITY;
        for (i, &ri) in r.iter().enumerate() {
            for (k, &s) in points.iter().enumerate() {
                let corr = ri.re * s.re + ri.im * s.im;
                if corr > best_corr {
                    best_corr = corr;
                    best = DetectionResult { i1: i, i2: 0, k1: k, k2: 0, cost: 0.0 };
                }
            }
        }
        best.cost = 0.5 - best_corr;
        return best;
    }
    for (i, &ri) in r.iter().enumerate() {
        for (k, &s) in points.iter().enumerate() {
            let cost = branch_cost(0.5 * s.norm_sqr(), ri, s);
            if cost < best.cost {
                best = DetectionResult { i1: i, i2: 0, k1: k, k2: 0, cost };
            }
        }
    }
    best
}

/// `|s|²/2` for every symbol of `Ω_a`, `Ω_b` and `Ω_c` (indexed by `k3`).
#[derive(Debug, Clone, PartialEq)]
pub struct PrecomputedTerms {
    pub half_energy_a: Vec<f64>,
    pub half_energy_b: Vec<f64>,
    pub half_energy_c: Vec<f64>,
}

impl PrecomputedTerms {
    pub fn new(rs: &ReceiveSet) -> Self {
        let half = |p: &[Complex64]| p.iter().map(|s| 0.5 * s.norm_sqr()).collect::<Vec<_>>();
        Self {
            half_energy_a: half(rs.omega_a().points()),
            half_energy_b: half(rs.omega_b().points()),
            half_energy_c: half(rs.omega_c()),
        }
    }

    /// Sorted `half_energy_c` next to the sorted closed-form multiset, when a
    /// closed form exists for the scheme pair.
    pub fn closed_form_check(rs: &ReceiveSet) -> Option<(Vec<f64>, Vec<f64>)> {
        let terms = closed_form_energy_terms(
            rs.omega_a().scheme(),
            rs.omega_b().base().scheme(),
            rs.theta_deg(),
        )
        .ok()?;
        let mut closed: Vec<f64> = terms
            .iter()
            .flat_map(|t| std::iter::repeat_n(t.value, t.multiplicity))
            .collect();
        let mut brute = Self::new(rs).half_energy_c;
        closed.sort_by(f64::total_cmp);
        brute.sort_by(f64::total_cmp);
        Some((brute, closed))
    }
}

/// Joint and split ML detectors for one receive set.
#[derive(Debug, Clone)]
pub struct MdPsmDetector {
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    c: Vec<Complex64>,
    terms: PrecomputedTerms,
}

#[derive(Clone, Copy)]
struct AntennaBest {
    antenna: usize,
    symbol: usize,
    cost: f64,
}

impl MdPsmDetector {
    pub fn new(rs: &ReceiveSet) -> Result<Self> {
        if !rs.uniqueness_ok() {
            return Err(Error::DetectorUndefined { theta_deg: rs.theta_deg() });
        }
        Ok(Self {
            a: rs.omega_a().points().to_vec(),
            b: rs.omega_b().points().to_vec(),
            c: rs.omega_c().to_vec(),
            terms: PrecomputedTerms::new(rs),
        })
    }

    pub fn terms(&self) -> &PrecomputedTerms {
        &self.terms
    }

    /// Cost of hypothesis `(i1, i2, k1, k2)` under the detector metric.
    pub fn cost(&self, r: &[Complex64], i1: usize, i2: usize, k1: usize, k2: usize) -> f64 {
        if i1 == i2 {
            let k3 = k1 * self.b.len() + k2;
            branch_cost(self.terms.half_energy_c[k3], r[i1], self.c[k3])
        } else {
            branch_cost(self.terms.half_energy_a[k1], r[i1], self.a[k1])
                + branch_cost(self.terms.half_energy_b[k2], r[i2], self.b[k2])
        }
    }

    /// Exhaustive search over all `n_R² M1 M2` hypotheses.
    pub fn detect_joint(&self, r: &[Complex64]) -> DetectionResult {
        let (m1, m2) = (self.a.len(), self.b.len());
        let mut best = DetectionResult { i1: 0, i2: 0, k1: 0, k2: 0, cost: f64::INFINITY };
        for i1 in 0..r.len() {
            for i2 in 0..r.len() {
                for k1 in 0..m1 {
                    for k2 in 0..m2 {
                        let cost = self.cost(r, i1, i2, k1, k2);
                        if cost < best.cost {
                            best = DetectionResult { i1, i2, k1, k2, cost };
                        }
                    }
                }
            }
        }
        best
    }

    fn best_two(r: &[Complex64], points: &[Complex64], half: &[f64]) -> (AntennaBest, Option<AntennaBest>) {
        let mut top: Option<AntennaBest> = None;
        let mut second: Option<AntennaBest> = None;
        for (i, &ri) in r.iter().enumerate() {
            let mut here = AntennaBest { antenna: i, symbol: 0, cost: f64::INFINITY };
            for (k, &s) in points.iter().enumerate() {
                let cost = branch_cost(half[k], ri, s);
                if cost < here.cost {
                    here.symbol = k;
                    here.cost = cost;
                }
            }
            match top {
                Some(t) if here.cost >= t.cost => {
                    if second.is_none_or(|s| here.cost < s.cost) {
                        second = Some(here);
                    }
                }
                _ => {
                    second = top;
                    top = Some(here);
                }
            }
        }
        (top.expect("at least one receive antenna"), second)
    }

    /// Split detector: independent per-station searches, a repair step when
    /// both land on the same antenna, then a comparison against the best
    /// Minkowski-sum hypothesis. Returns the same hypothesis as
    /// [`MdPsmDetector::detect_joint`].
    pub fn detect_fast(&self, r: &[Complex64]) -> DetectionResult {
        let (top1, second1) = Self::best_two(r, &self.a, &self.terms.half_energy_a);
        let (top2, second2) = Self::best_two(r, &self.b, &self.terms.half_energy_b);

        let pair = |x: AntennaBest, y: AntennaBest| DetectionResult {
            i1: x.antenna,
            i2: y.antenna,
            k1: x.symbol,
            k2: y.symbol,
            cost: x.cost + y.cost,
        };
        let mut best = if top1.antenna != top2.antenna {
            pair(top1, top2)
        } else {
            // The constrained optimum differs from the unconstrained one in
            // at most one station's antenna.
            let mut cands = Vec::with_capacity(3);
            if let Some(s2) = second2 {
                cands.push(pair(top1, s2));
            }
            if let Some(s1) = second1 {
                cands.push(pair(s1, top2));
            }
            if let (Some(s1), Some(s2)) = (second1, second2) {
                if s1.antenna != s2.antenna {
                    cands.push(pair(s1, s2));
                }
            }
            let mut it = cands.into_iter();
            let mut b = it.next().expect("n_R >= 2 gives a second antenna");
            for c in it {
                if c.beats(&b) {
                    b = c;
                }
            }
            b
        };

        let m2 = self.b.len();
        for (i, &ri) in r.iter().enumerate() {
            for (k3, &s) in self.c.iter().enumerate() {
                let cost = branch_cost(self.terms.half_energy_c[k3], ri, s);
                let cand = DetectionResult { i1: i, i2: i, k1: k3 / m2, k2: k3 % m2, cost };
                if cand.beats(&best) {
                    best = cand;
                }
            }
        }
        best
    }
}

/// Real-multiplication counts of the ML detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityReport {
    pub real_multiplications: u64,
    /// Multiplications saved by the closed-form energy tables, when they apply.
    pub closed_form_saving: Option<u64>,
}

impl ComplexityReport {
    pub fn saving_fraction(&self) -> Option<f64> {
        self.closed_form_saving.map(|s| s as f64 / self.real_multiplications as f64)
    }
}

/// A configuration as written in the result tables: `(n_T, n_R, q)` or
/// `(n_T1, n_T2, n_R, q1, q2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexityConfig {
    Psm { n_t: usize, n_r: usize, q: u32 },
    MdPsm { n_t1: usize, n_t2: usize, n_r: usize, q1: u32, q2: u32 },
}

impl ComplexityConfig {
    pub fn spectral_efficiency(&self) -> u32 {
        match *self {
            ComplexityConfig::Psm { n_r, q, .. } => q + n_r.trailing_zeros(),
            ComplexityConfig::MdPsm { n_r, q1, q2, .. } => q1 + q2 + 2 * n_r.trailing_zeros(),
        }
    }
}

impl std::fmt::Display for ComplexityConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            ComplexityConfig::Psm { n_t, n_r, q } => write!(f, "PSM({n_t},{n_r},{q})"),
            ComplexityConfig::MdPsm { n_t1, n_t2, n_r, q1, q2 } => {
                write!(f, "MD-PSM({n_t1},{n_t2},{n_r},{q1},{q2})")
            }
        }
    }
}

pub fn psm_complexity(m: u64, n_r: u64) -> u64 {
    m * (3 + 2 * n_r)
}

pub fn mdpsm_complexity(m1: u64, m2: u64, n_r: u64) -> u64 {
    (m1 + m2 + m1 * m2) * (3 + 2 * n_r)
}

/// `3 M1 + 3 M1 M2 − 4`.
pub fn closed_form_saving(m1: u64, m2: u64) -> u64 {
    3 * m1 + 3 * m1 * m2 - 4
}

/// Closed forms exist for PSK–PSK and PSK–16QAM pairs of supported orders.
fn closed_form_applies(q1: u32, q2: u32) -> bool {
    let psk = |q: u32| (1..=3).contains(&q);
    (psk(q1) && psk(q2)) || (psk(q1) && q2 == 4) || (q1 == 4 && psk(q2))
}

pub fn count_complexity(config: &ComplexityConfig) -> ComplexityReport {
    match *config {
        ComplexityConfig::Psm { n_r, q, .. } => ComplexityReport {
            real_multiplications: psm_complexity(1 << q, n_r as u64),
            closed_form_saving: None,
        },
        ComplexityConfig::MdPsm { n_r, q1, q2, .. } => {
            let (m1, m2) = (1u64 << q1, 1u64 << q2);
            ComplexityReport {
                real_multiplications: mdpsm_complexity(m1, m2, n_r as u64),
                closed_form_saving: closed_form_applies(q1, q2).then(|| closed_form_saving(m1, m2)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{build_receive_set, rotate, Scheme};

    fn e(n: usize, i: usize, s: Complex64) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[i] = s;
        v
    }

    fn receive_set(a: Scheme, b: Scheme, theta: f64) -> ReceiveSet {
        build_receive_set(&Constellation::new(a), &rotate(&Constellation::new(b), theta))
    }

    #[test]
    fn psm_noiseless_recovery() {
        for scheme in Scheme::ALL {
            let c = Constellation::new(scheme);
            for k in 0..c.order() {
                let s = c.points()[k];
                let d = detect_psm(&e(4, 2, s), &c);
                assert_eq!((d.i1, d.k1), (2, k));
                assert!((d.cost + 0.5 * s.norm_sqr()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn psm_ties_go_to_lowest_indices() {
        let c = Constellation::new(Scheme::Qpsk);
        let d = detect_psm(&[Complex64::new(0.0, 0.0); 4], &c);
        assert_eq!((d.i1, d.k1), (0, 0));
        let q = Constellation::new(Scheme::Qam16);
        let d = detect_psm(&[Complex64::new(0.0, 0.0); 2], &q);
        assert_eq!(d.i1, 0);
    }

    #[test]
    fn undefined_when_not_unique() {
        let rs = receive_set(Scheme::Qpsk, Scheme::Qpsk, 0.0);
        assert!(matches!(MdPsmDetector::new(&rs), Err(Error::DetectorUndefined { .. })));
    }

    #[test]
    fn mdpsm_noiseless_recovery() {
        let rs = receive_set(Scheme::Qpsk, Scheme::Qam16, 32.1);
        let det = MdPsmDetector::new(&rs).unwrap();
        let n = 4;
        for i1 in 0..n {
            for i2 in 0..n {
                for k1 in 0..4 {
                    for k2 in (0..16).step_by(3) {
                        let mut r = e(n, i1, rs.omega_a().points()[k1]);
                        r[i2] += rs.omega_b().points()[k2];
                        let j = det.detect_joint(&r);
                        let f = det.detect_fast(&r);
                        assert_eq!((j.i1, j.i2, j.k1, j.k2), (i1, i2, k1, k2));
                        assert_eq!(f, j);
                    }
                }
            }
        }
    }

    #[test]
    fn cost_is_half_distance_minus_half_norm() {
        let rs = receive_set(Scheme::Bpsk, Scheme::Psk8, 15.0);
        let det = MdPsmDetector::new(&rs).unwrap();
        let r = vec![
            Complex64::new(0.3, -0.7),
            Complex64::new(-1.1, 0.2),
            Complex64::new(0.05, 0.9),
            Complex64::new(0.6, 0.6),
        ];
        let norm2: f64 = r.iter().map(|z| z.norm_sqr()).sum();
        for t in 0..100 {
            let (i1, i2, k1, k2) = (t % 4, (t / 4) % 4, t % 2, (t * 7) % 8);
            let mut hyp = vec![Complex64::new(0.0, 0.0); 4];
            hyp[i1] += rs.omega_a().points()[k1];
            hyp[i2] += rs.omega_b().points()[k2];
            let dist: f64 = r.iter().zip(&hyp).map(|(a, b)| (a - b).norm_sqr()).sum();
            assert!((det.cost(&r, i1, i2, k1, k2) - (0.5 * dist - 0.5 * norm2)).abs() < 1e-12);
        }
    }

    #[test]
    fn precomputed_terms_match_closed_forms() {
        for (a, b, t) in [
            (Scheme::Qpsk, Scheme::Qpsk, 30.0),
            (Scheme::Psk8, Scheme::Qam16, 8.4),
            (Scheme::Qam16, Scheme::Bpsk, 32.1),
        ] {
            let (brute, closed) = PrecomputedTerms::closed_form_check(&receive_set(a, b, t)).unwrap();
            for (x, y) in brute.iter().zip(&closed) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        assert!(PrecomputedTerms::closed_form_check(&receive_set(Scheme::Qam16, Scheme::Qam16, 30.0)).is_none());
    }

    #[test]
    fn table_complexities() {
        let c = |cfg| count_complexity(&cfg).real_multiplications;
        assert_eq!(c(ComplexityConfig::Psm { n_t: 4, n_r: 4, q: 6 }), 704);
        assert_eq!(c(ComplexityConfig::MdPsm { n_t1: 4, n_t2: 4, n_r: 4, q1: 2, q2: 2 }), 264);
        assert_eq!(c(ComplexityConfig::Psm { n_t: 12, n_r: 8, q: 6 }), 1216);
        assert_eq!(c(ComplexityConfig::MdPsm { n_t1: 12, n_t2: 12, n_r: 8, q1: 1, q2: 2 }), 266);
        let r = count_complexity(&ComplexityConfig::MdPsm { n_t1: 4, n_t2: 4, n_r: 4, q1: 3, q2: 4 });
        assert_eq!(r.closed_form_saving, Some(404));
        assert!((r.saving_fraction().unwrap() - 0.2416).abs() < 1e-3);
        let qq = count_complexity(&ComplexityConfig::MdPsm { n_t1: 4, n_t2: 4, n_r: 4, q1: 4, q2: 4 });
        assert_eq!(qq.closed_form_saving, None);
    }

    #[test]
    fn mdpsm_cheaper_when_alphabet_smaller() {
        for n_r in [2u64, 4, 8, 16] {
            for (m1, m2, m) in [(4, 4, 64), (2, 4, 64), (4, 4, 16), (2, 2, 16)] {
                if m1 + m2 + m1 * m2 < m {
                    assert!(mdpsm_complexity(m1, m2, n_r) < psm_complexity(m, n_r));
                }
            }
        }
    }
}
