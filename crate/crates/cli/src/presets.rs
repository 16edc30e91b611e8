//! Pinned-seed experiment bundles mirroring the published figures and
//! tables at desk scale, each with a check against the headline numbers.

use mdpsm_core::channel::min_singular_tail_at;
use mdpsm_core::harness::BerCurve;
use mdpsm_core::Scheme;

use crate::execute::Outcome;

pub struct Headline {
    pub label: String,
    pub measured: String,
    pub pass: bool,
}

impl Headline {
    fn new(label: impl Into<String>, measured: impl Into<String>, pass: bool) -> Self {
        Self { label: label.into(), measured: measured.into(), pass }
    }
}

pub struct Preset {
    pub id: &'static str,
    pub description: &'static str,
    /// `(output stem, spec text)` pairs, run in order.
    pub specs: fn() -> Vec<(String, String)>,
    pub headlines: fn(&[Outcome]) -> Vec<Headline>,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        id: "fig2a",
        description: "d_min versus rotation angle, equal schemes at both stations",
        specs: fig2a_specs,
        headlines: fig2a_headlines,
    },
    Preset {
        id: "fig2b",
        description: "d_min versus rotation angle, mixed schemes",
        specs: fig2b_specs,
        headlines: fig2b_headlines,
    },
    Preset {
        id: "fig3a",
        description: "BER versus rotation angle, QPSK, n_T = n_R = 2 and 4",
        specs: fig3a_specs,
        headlines: fig3a_headlines,
    },
    Preset {
        id: "fig3b",
        description: "BER versus rotation angle, QPSK, n_R = 4, n_T = 6 and 8",
        specs: fig3b_specs,
        headlines: fig3b_headlines,
    },
    Preset {
        id: "fig3c",
        description: "BER versus rotation angle, 16QAM, n_T = n_R = 2",
        specs: fig3c_specs,
        headlines: fig3c_headlines,
    },
    Preset {
        id: "fig4",
        description: "equal spectral efficiency: MD-PSM (4,4,4,2,2) vs PSM (4,4,6)",
        specs: fig4_specs,
        headlines: fig4_headlines,
    },
    Preset {
        id: "fig5",
        description: "double spectral efficiency, QPSK, n_T = n_R = 2 and 4, with diversity fits",
        specs: fig5_specs,
        headlines: fig5_headlines,
    },
    Preset {
        id: "fig6",
        description: "double spectral efficiency, QPSK, n_R = 4, n_T = 4 and 6: low-SNR crossover",
        specs: fig6_specs,
        headlines: fig6_headlines,
    },
    Preset {
        id: "fig7",
        description: "double spectral efficiency, 16QAM, n_T = n_R = 2, gap at BER 1e-5",
        specs: fig7_specs,
        headlines: fig7_headlines,
    },
    Preset {
        id: "table3",
        description: "detector complexity at equal spectral efficiency",
        specs: table3_specs,
        headlines: table3_headlines,
    },
    Preset {
        id: "channel",
        description: "normalization-factor statistics and the singular-value tail law",
        specs: channel_specs,
        headlines: channel_headlines,
    },
];

pub fn find(id: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.id == id)
}

pub fn ids() -> String {
    PRESETS.iter().map(|p| p.id).collect::<Vec<_>>().join(", ")
}

fn sweep_spec(a: Scheme, b: Scheme) -> (String, String) {
    let stem = format!("sweep_{}_{}", a.to_string().to_lowercase(), b.to_string().to_lowercase());
    (stem.clone(), format!("kind = angle_sweep\noutput = {stem}\nscheme1 = {a}\nscheme2 = {b}\n"))
}

fn psm_curve(stem: &str, n_t: usize, n_r: usize, s: Scheme, snr: (f64, f64), seed: u64) -> (String, String) {
    (
        stem.to_string(),
        format!(
            "kind = ber_run\noutput = {stem}\nseed = {seed}\nmode = psm\nn_t = {n_t}\nn_r = {n_r}\nscheme = {s}\n\
             snr_start = {}\nsnr_stop = {}\nsnr_step = 2.5\n",
            snr.0, snr.1
        ),
    )
}

fn md_curve(stem: &str, n_t: usize, n_r: usize, s: Scheme, theta: f64, snr: (f64, f64), seed: u64) -> (String, String) {
    (
        stem.to_string(),
        format!(
            "kind = ber_run\noutput = {stem}\nseed = {seed}\nmode = mdpsm\nn_t1 = {n_t}\nn_t2 = {n_t}\nn_r = {n_r}\n\
             scheme1 = {s}\nscheme2 = {s}\ntheta = {theta}\nsnr_start = {}\nsnr_stop = {}\nsnr_step = 2.5\n",
            snr.0, snr.1
        ),
    )
}

fn refine_spec(stem: &str, n_t: usize, n_r: usize, s: Scheme, trials: u64, seed: u64) -> (String, String) {
    refine_spec_at(stem, n_t, n_r, s, "pilot", trials, seed)
}

fn refine_spec_at(stem: &str, n_t: usize, n_r: usize, s: Scheme, snr: &str, trials: u64, seed: u64) -> (String, String) {
    (
        stem.to_string(),
        format!(
            "kind = ber_vs_theta\noutput = {stem}\nseed = {seed}\nmode = mdpsm\nn_t1 = {n_t}\nn_t2 = {n_t}\nn_r = {n_r}\n\
             scheme1 = {s}\nscheme2 = {s}\ntheta = 30\ntheta_start = 0\ntheta_stop = 45\ntheta_step = 3\n\
             snr_db = {snr}\ntrials = {trials}\n"
        ),
    )
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol + 1e-9
}

fn set_check(label: &str, got: &[f64], want: &[f64], tol: f64) -> Headline {
    let pass = got.len() == want.len() && got.iter().zip(want).all(|(g, w)| within(*g, *w, tol));
    Headline::new(format!("{label} (target {want:?} +/- {tol} deg)"), format!("{got:?} deg"), pass)
}

fn sweep_checks(outcomes: &[Outcome], targets: &[(&[f64], f64)]) -> Vec<Headline> {
    outcomes
        .iter()
        .zip(targets)
        .filter_map(|(o, (want, tol))| match o {
            Outcome::Sweep { scheme1, scheme2, result } => {
                Some(set_check(&format!("theta_opt {scheme1}-{scheme2}"), &result.optimal_thetas, want, *tol))
            }
            _ => None,
        })
        .collect()
}

fn fig2a_specs() -> Vec<(String, String)> {
    [(Scheme::Qpsk, Scheme::Qpsk), (Scheme::Psk8, Scheme::Psk8), (Scheme::Qam16, Scheme::Qam16), (Scheme::Bpsk, Scheme::Bpsk)]
        .into_iter()
        .map(|(a, b)| sweep_spec(a, b))
        .collect()
}

fn fig2a_headlines(o: &[Outcome]) -> Vec<Headline> {
    let mut h = sweep_checks(o, &[(&[30.0], 0.0), (&[17.3, 27.7], 0.1), (&[30.0], 0.5)]);
    if let Some(Outcome::Sweep { result, .. }) = o.get(2) {
        let u = result.union_optimal_thetas();
        h.push(Headline::new("16QAM-16QAM union-criterion optimum (target 25.5 deg)", format!("{u:?} deg"), u == [25.5]));
    }
    if let Some(Outcome::Sweep { result, .. }) = o.get(3) {
        let t = &result.optimal_thetas;
        let pass = t.len() == 301 && t.first() == Some(&60.0) && t.last() == Some(&90.0);
        h.push(Headline::new(
            "theta_opt BPSK-BPSK (target every angle in [60, 90] deg)",
            format!("{} tied angles from {:?} to {:?}", t.len(), t.first(), t.last()),
            pass,
        ));
    }
    h
}

fn fig2b_specs() -> Vec<(String, String)> {
    use Scheme::*;
    [(Bpsk, Qpsk), (Bpsk, Psk8), (Qpsk, Psk8), (Bpsk, Qam16), (Qpsk, Qam16), (Psk8, Qam16)]
        .into_iter()
        .map(|(a, b)| sweep_spec(a, b))
        .collect()
}

fn fig2b_headlines(o: &[Outcome]) -> Vec<Headline> {
    sweep_checks(
        o,
        &[(&[30.0], 0.0), (&[15.0, 30.0], 0.0), (&[15.0, 30.0], 0.0), (&[32.1], 0.1), (&[32.1], 0.1), (&[8.4, 36.6], 0.1)],
    )
}

fn refine_checks(o: &[Outcome], targets: &[(&str, f64)]) -> Vec<Headline> {
    o.iter()
        .zip(targets)
        .filter_map(|(o, (label, want))| match o {
            Outcome::Refine(r) => Some(Headline::new(
                format!("BER-refined theta {label} at {} dB (target {want} +/- 3 deg)", r.snr_db),
                format!("{} deg", r.best_theta_deg),
                within(r.best_theta_deg, *want, 3.0),
            )),
            _ => None,
        })
        .collect()
}

fn fig3a_specs() -> Vec<(String, String)> {
    vec![
        refine_spec("ber_theta_qpsk_nr2", 2, 2, Scheme::Qpsk, 3_000_000, 301),
        refine_spec("ber_theta_qpsk_nr4", 4, 4, Scheme::Qpsk, 2_000_000, 302),
    ]
}

fn fig3a_headlines(o: &[Outcome]) -> Vec<Headline> {
    refine_checks(o, &[("QPSK n_R=2", 30.0), ("QPSK n_R=4", 33.0)])
}

// The PSM pilot lands at 0-5 dB here, where MD-PSM is noise limited, so
// each case runs at the SNR that puts MD-PSM near BER 1e-4 instead.
fn fig3b_specs() -> Vec<(String, String)> {
    vec![
        refine_spec_at("ber_theta_qpsk_nt6_nr4", 6, 4, Scheme::Qpsk, "8", 2_000_000, 311),
        refine_spec_at("ber_theta_qpsk_nt8_nr4", 8, 4, Scheme::Qpsk, "5", 2_000_000, 312),
    ]
}

fn fig3b_headlines(o: &[Outcome]) -> Vec<Headline> {
    refine_checks(o, &[("QPSK n_T=6 n_R=4", 33.0), ("QPSK n_T=8 n_R=4", 33.0)])
}

fn fig3c_specs() -> Vec<(String, String)> {
    vec![refine_spec("ber_theta_16qam_nr2", 2, 2, Scheme::Qam16, 1_000_000, 303)]
}

fn fig3c_headlines(o: &[Outcome]) -> Vec<Headline> {
    refine_checks(o, &[("16QAM n_R=2", 15.0)])
}

fn curve(o: &Outcome) -> Option<(&BerCurve, Option<f64>)> {
    match o {
        Outcome::Curve { curve, snr_at_target, .. } => Some((curve, *snr_at_target)),
        _ => None,
    }
}

fn gap(o: &[Outcome], md: usize, psm: usize, ber: &str, target: f64, tol: f64) -> Headline {
    let (Some((a, sa)), Some((b, sb))) = (o.get(md).and_then(curve), o.get(psm).and_then(curve)) else {
        return Headline::new("SNR gap", "missing curves", false);
    };
    let label = format!("{} vs {} gap at BER {ber} (target {target} +/- {tol} dB)", a.tag, b.tag);
    match (sa, sb) {
        (Some(x), Some(y)) => Headline::new(label, format!("{:.2} dB", y - x), within(y - x, target, tol)),
        _ => Headline::new(label, format!("BER {ber} not reached on the grid"), false),
    }
}

fn diversity(o: &Outcome, target: f64, tol: f64) -> Headline {
    match o {
        Outcome::Curve { curve, diversity: Some(d), .. } => Headline::new(
            format!("diversity order {} (target {target} +/- {tol})", curve.tag),
            format!("{:.2} over [{}, {}] dB", d.order, d.fit_range_db.0, d.fit_range_db.1),
            within(d.order, target, tol),
        ),
        _ => Headline::new(format!("diversity order (target {target})"), "not estimable", false),
    }
}

fn fig4_specs() -> Vec<(String, String)> {
    vec![
        md_curve("ber_mdpsm_4_4_4_2_2", 4, 4, Scheme::Qpsk, 33.0, (10.0, 27.5), 401),
        psm_curve("ber_psm_4_4_6", 4, 4, Scheme::Qam64, (20.0, 45.0), 402),
    ]
}

fn fig4_headlines(o: &[Outcome]) -> Vec<Headline> {
    vec![gap(o, 0, 1, "1e-4", 17.3, 2.0)]
}

fn fig5_specs() -> Vec<(String, String)> {
    vec![
        md_curve("ber_mdpsm_qpsk_nr4", 4, 4, Scheme::Qpsk, 33.0, (0.0, 27.5), 501),
        psm_curve("ber_psm_qpsk_nr4", 4, 4, Scheme::Qpsk, (0.0, 42.5), 502),
        md_curve("ber_mdpsm_qpsk_nr2", 2, 2, Scheme::Qpsk, 30.0, (0.0, 27.5), 503),
        psm_curve("ber_psm_qpsk_nr2", 2, 2, Scheme::Qpsk, (0.0, 47.5), 504),
    ]
}

fn fig5_headlines(o: &[Outcome]) -> Vec<Headline> {
    let mut h = vec![gap(o, 0, 1, "1e-4", 12.4, 1.5), gap(o, 2, 3, "1e-4", 11.3, 1.5)];
    if o.len() == 4 {
        h.push(diversity(&o[2], 2.0, 0.3));
        h.push(diversity(&o[3], 1.0, 0.2));
    }
    h
}

fn fig6_specs() -> Vec<(String, String)> {
    vec![
        md_curve("ber_mdpsm_nt4_nr4", 4, 4, Scheme::Qpsk, 33.0, (0.0, 25.0), 601),
        psm_curve("ber_psm_nt4_nr4", 4, 4, Scheme::Qpsk, (0.0, 25.0), 602),
        md_curve("ber_mdpsm_nt6_nr4", 6, 4, Scheme::Qpsk, 33.0, (0.0, 25.0), 603),
        psm_curve("ber_psm_nt6_nr4", 6, 4, Scheme::Qpsk, (0.0, 25.0), 604),
    ]
}

fn fig6_headlines(o: &[Outcome]) -> Vec<Headline> {
    let mut h = Vec::new();
    for pair in o.chunks(2) {
        let (Some((md, _)), Some((psm, _))) = (curve(&pair[0]), pair.get(1).and_then(curve)) else { continue };
        let (lo_md, lo_psm) = (md.points[0].ber, psm.points[0].ber);
        let (hi_md, hi_psm) = (md.points.last().unwrap().ber, psm.points.last().unwrap().ber);
        h.push(Headline::new(
            format!("{} trails {} at {} dB", md.tag, psm.tag, md.points[0].snr_db),
            format!("{lo_md:.3e} vs {lo_psm:.3e}"),
            lo_md > lo_psm,
        ));
        h.push(Headline::new(
            format!("{} leads {} at {} dB", md.tag, psm.tag, md.points.last().unwrap().snr_db),
            format!("{hi_md:.3e} vs {hi_psm:.3e}"),
            hi_md < hi_psm,
        ));
    }
    h
}

fn fig7_specs() -> Vec<(String, String)> {
    let deeper = |(stem, text): (String, String)| (stem, text + "target_ber = 1e-5\n");
    vec![
        deeper(md_curve("ber_mdpsm_16qam_nr2", 2, 2, Scheme::Qam16, 15.0, (15.0, 40.0), 701)),
        deeper(psm_curve("ber_psm_16qam_nr2", 2, 2, Scheme::Qam16, (30.0, 57.5), 702)),
    ]
}

fn fig7_headlines(o: &[Outcome]) -> Vec<Headline> {
    vec![gap(o, 0, 1, "1e-5", 10.2, 2.0)]
}

fn table3_specs() -> Vec<(String, String)> {
    vec![(
        "table3".into(),
        "kind = complexity_report\noutput = table3\n\
         rows = psm:4:4:6, mdpsm:4:4:4:2:2, psm:12:8:6, mdpsm:12:12:8:1:2, mdpsm:4:4:4:3:4\n"
            .into(),
    )]
}

fn table3_headlines(o: &[Outcome]) -> Vec<Headline> {
    let Some(Outcome::Complexity(rows)) = o.first() else { return vec![] };
    let mut h: Vec<Headline> = rows
        .iter()
        .zip([704u64, 264, 1216, 266])
        .map(|((cfg, r), want)| {
            Headline::new(format!("{cfg} real multiplications (target {want})"), r.real_multiplications.to_string(), r.real_multiplications == want)
        })
        .collect();
    if let Some((cfg, r)) = rows.get(4) {
        let frac = 100.0 * r.saving_fraction().unwrap_or(0.0);
        h.push(Headline::new(
            format!("{cfg} closed-form saving (target 404 = 24.16% +/- 0.1%)"),
            format!("{:?} = {frac:.2}%", r.closed_form_saving),
            r.closed_form_saving == Some(404) && within(frac, 24.16, 0.1),
        ));
    }
    h
}

fn channel_specs() -> Vec<(String, String)> {
    vec![(
        "channel_8_4".into(),
        "kind = channel_stats\noutput = channel_8_4\nseed = 901\nn_t = 8\nn_r = 4\ndraws = 100000\n".into(),
    )]
}

fn channel_headlines(o: &[Outcome]) -> Vec<Headline> {
    let mut h = Vec::new();
    if let Some(Outcome::Channel(s)) = o.first() {
        let want = s.beta_expected.unwrap_or(f64::NAN);
        h.push(Headline::new(
            format!("E[beta] ({},{}) as n_R/E[Tr(PP^H)] (target {want} +/- 5%)", s.n_t, s.n_r),
            format!("{:.3} (per-draw mean {:.3})", s.beta_estimate, s.beta_sample_mean),
            (s.beta_estimate / want - 1.0).abs() <= 0.05,
        ));
        h.push(Headline::new(
            "unified beta reduces the spread of 1/sqrt(beta)",
            format!("{:.4} vs {:.4}", s.var_inv_sqrt_beta_unified, s.var_inv_sqrt_beta_single),
            s.var_inv_sqrt_beta_unified < s.var_inv_sqrt_beta_single,
        ));
    }
    for (n, want) in [(2, "0.8025"), (16, "0.0561")] {
        let v = format!("{:.4}", min_singular_tail_at(n, 0.1));
        h.push(Headline::new(format!("tail law at n_R={n}, sigma_min=0.1 (target {want})"), v.clone(), v == want));
    }
    h
}
