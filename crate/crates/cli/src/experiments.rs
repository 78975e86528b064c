//! One function per subcommand. Each returns a table for the CSV, a JSON
//! summary of the headline numbers and a one-line digest.

use lo_chain::link::required_tx_power;
use lo_chain::lo_arch::architecture_gamma;
use lo_chain::phase_noise::PhaseNoisePsd;
use lo_chain::power::sweep_power;
use lo_chain::sim::{
    argmax, awgn_ber, ber_curve, fit_gamma, fit_sinr_model, sinr_model_db, sweep_pll_bandwidth,
    sweep_subarray, sweep_users, SimMetrics, UserMetrics,
};
use lo_chain::sim::config::SimConfig;
use lo_chain::sim::run_uplink;
use lo_chain::units::{db_to_lin, lin_to_db};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{fmt_f64, fmt_opt, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    PowerSweep,
    LinkBudget,
    PllBwSweep,
    UserSweep,
    SubarraySweep,
    BerCurve,
    SingleRun,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::PowerSweep => "power-sweep",
            Self::LinkBudget => "link-budget",
            Self::PllBwSweep => "pll-bw-sweep",
            Self::UserSweep => "user-sweep",
            Self::SubarraySweep => "subarray-sweep",
            Self::BerCurve => "ber-curve",
            Self::SingleRun => "single-run",
        }
    }
}

pub struct Report {
    pub table: Table,
    pub results: serde_json::Value,
    pub digest: String,
}

pub fn run(exp: Experiment, cfg: &RunConfig) -> Result<Report> {
    match exp {
        Experiment::PowerSweep => power(cfg),
        Experiment::LinkBudget => link(cfg),
        Experiment::PllBwSweep => pll_bw(cfg),
        Experiment::UserSweep => users(cfg),
        Experiment::SubarraySweep => subarray(cfg),
        Experiment::BerCurve => ber(cfg),
        Experiment::SingleRun => single(cfg),
    }
}

const METRIC_COLUMNS: [&str; 9] = [
    "sinr_db",
    "sinr_ci_db",
    "evm",
    "ber",
    "static_gain",
    "gain_var",
    "resid_phase_var",
    "effective_snr_db",
    "lock_lost",
];

fn header(lead: &[&str], tail: &[&str]) -> Table {
    let cols: Vec<&str> = lead
        .iter()
        .chain(METRIC_COLUMNS.iter())
        .chain(tail.iter())
        .copied()
        .collect();
    Table::new(&cols)
}

fn metric_cells(m: &SimMetrics) -> Vec<String> {
    vec![
        fmt_f64(m.sinr_db),
        fmt_f64(m.sinr_ci_db),
        fmt_f64(m.evm),
        fmt_f64(m.ber),
        fmt_f64(m.static_gain),
        fmt_f64(m.gain_var),
        fmt_f64(m.resid_phase_var),
        fmt_opt(m.effective_snr_db),
        m.lock_lost.to_string(),
    ]
}

fn user_cells(u: &UserMetrics) -> Vec<String> {
    vec![
        fmt_f64(u.sinr_db),
        String::new(),
        fmt_f64(u.evm),
        fmt_f64(u.ber),
        fmt_f64(u.static_gain),
        fmt_f64(u.gain_var),
        fmt_f64(u.resid_phase_var),
        fmt_opt(u.effective_snr_db),
        u.lock_lost.to_string(),
    ]
}

fn row(lead: Vec<String>, m: &SimMetrics, tail: Vec<String>) -> Vec<String> {
    lead.into_iter().chain(metric_cells(m)).chain(tail).collect()
}

fn sim(cfg: &RunConfig) -> Result<SimConfig> {
    cfg.sim.sim_config(cfg.seed)
}

fn power(cfg: &RunConfig) -> Result<Report> {
    let p = cfg.power.params()?;
    let sweep = sweep_power(&p)?;
    let mut t = Table::new(&["N", "P_distr_W", "P_pll_W", "P_vco_W", "P_load_W", "total_W", "argmin"]);
    for (i, pt) in sweep.points.iter().enumerate() {
        t.push(vec![
            pt.n.to_string(),
            fmt_f64(pt.distr_w),
            fmt_f64(pt.pll_w),
            fmt_f64(pt.vco_w),
            fmt_f64(pt.load_w),
            fmt_f64(pt.total_w),
            (i == sweep.argmin).to_string(),
        ]);
    }
    let min = sweep.min();
    let first = &sweep.points[0];
    let last = sweep.points.last().expect("at least N = 1");
    let above = |w: f64| lin_to_db(w / min.total_w);
    Ok(Report {
        digest: format!(
            "power-sweep M={}: min {:.2} mW at N={}; N=1 is +{:.2} dB, N={} is +{:.2} dB",
            p.m,
            min.total_w * 1e3,
            min.n,
            above(first.total_w),
            last.n,
            above(last.total_w)
        ),
        results: json!({
            "m": p.m,
            "argmin_n": min.n,
            "min_total_w": min.total_w,
            "n1_above_min_db": above(first.total_w),
            "nm_above_min_db": above(last.total_w),
            "spread_db": sweep.spread_db(),
        }),
        table: t,
    })
}

fn link(cfg: &RunConfig) -> Result<Report> {
    let budgets = cfg.link.budgets()?;
    let mut t = Table::new(&[
        "column",
        "bandwidth_hz",
        "rx_nf_db",
        "noise_power_dbm",
        "carrier_hz",
        "loss_exponent",
        "distance_m",
        "path_loss_db",
        "target_snr_db",
        "bs_gain_db",
        "ue_gain_db",
        "tx_power_dbm",
    ]);
    let mut tx = Vec::new();
    for b in &budgets {
        let p = required_tx_power(b)?;
        tx.push(json!({"column": b.name, "tx_power_dbm": p}));
        t.push(vec![
            b.name.clone(),
            fmt_f64(b.bandwidth_hz),
            fmt_f64(b.rx_nf_db),
            fmt_f64(b.noise_power_dbm()),
            fmt_f64(b.carrier_hz),
            fmt_f64(b.loss_exponent),
            fmt_f64(b.distance_m),
            fmt_f64(b.path_loss_db()),
            fmt_f64(b.target_snr_db),
            fmt_f64(b.bs_gain_db),
            fmt_f64(b.ue_gain_db),
            fmt_f64(p),
        ]);
    }
    let digest = budgets
        .iter()
        .zip(&tx)
        .map(|(b, v)| format!("{} {:.1} dBm", b.name, v["tx_power_dbm"].as_f64().unwrap_or(f64::NAN)))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Report {
        digest: format!("link-budget: {digest}"),
        results: json!({ "tx_power": tx }),
        table: t,
    })
}

fn pll_bw(cfg: &RunConfig) -> Result<Report> {
    let base = sim(cfg)?;
    let sw = &cfg.sweeps;
    let refs: Vec<Option<f64>> = if sw.ref_floors_output_dbchz.is_empty() {
        vec![None]
    } else if base.arch.if_pll.is_some() {
        return Err(CliError::Config {
            key: "sweeps.ref_floors_output_dbchz".into(),
            msg: "needs sim.if_pll.enabled = false".into(),
        });
    } else {
        sw.ref_floors_output_dbchz.iter().copied().map(Some).collect()
    };
    let crs: Vec<f64> = if sw.cr_bandwidths_hz.is_empty() {
        vec![base.cr.bandwidth_hz]
    } else {
        sw.cr_bandwidths_hz.clone()
    };

    let mut t = header(
        &["ref_floor_output_dbchz", "cr_bandwidth_hz", "pll_bandwidth_hz"],
        &["argmax"],
    );
    let mut curves = Vec::new();
    for &r in &refs {
        for &cr in &crs {
            let mut c = base.clone();
            if let Some(level) = r {
                let pll = &mut c.arch.mmw_pll;
                pll.ref_psd = PhaseNoisePsd::white(level - 20.0 * pll.ratio().log10());
            }
            c.cr.bandwidth_hz = cr;
            let pts = sweep_pll_bandwidth(&c, &sw.pll_bandwidths_hz)?;
            let best = argmax(&pts).expect("non-empty sweep");
            for (i, p) in pts.iter().enumerate() {
                t.push(row(
                    vec![fmt_opt(r), fmt_f64(cr), fmt_f64(p.x)],
                    &p.metrics,
                    vec![(i == best).to_string()],
                ));
            }
            curves.push(json!({
                "ref_floor_output_dbchz": r,
                "cr_bandwidth_hz": cr,
                "best_pll_bandwidth_hz": pts[best].x,
                "best_sinr_db": pts[best].metrics.sinr_db,
                "sinr_db": pts.iter().map(|p| p.metrics.sinr_db).collect::<Vec<_>>(),
            }));
        }
    }
    let digest = curves
        .iter()
        .map(|c| {
            format!(
                "CR {} Hz best {} Hz ({:.1} dB)",
                c["cr_bandwidth_hz"], c["best_pll_bandwidth_hz"], c["best_sinr_db"].as_f64().unwrap_or(f64::NAN)
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Report {
        digest: format!("pll-bw-sweep: {digest}"),
        results: json!({ "pll_bandwidths_hz": sw.pll_bandwidths_hz, "curves": curves }),
        table: t,
    })
}

fn users(cfg: &RunConfig) -> Result<Report> {
    let c = sim(cfg)?;
    let ks = &cfg.sweeps.user_counts;
    if let Some(&k) = ks.iter().find(|&&k| k > c.arch.m) {
        return Err(CliError::Config {
            key: "sweeps.user_counts".into(),
            msg: format!("expected values in [1, sim.m = {}], got {k}", c.arch.m),
        });
    }
    let pts = sweep_users(&c, ks)?;
    let data: Vec<(usize, f64)> = pts.iter().map(|p| (p.x as usize, p.metrics.sinr_db)).collect();
    let n_t = c.thermal_snr_db.map_or(0.0, |s| 1.0 / db_to_lin(s));

    // α with the architecture's γ when known, otherwise γ for the configured α
    let (fit, fit_note) = match architecture_gamma(&c.arch) {
        Some(g) if g > 0.0 => match fit_sinr_model(&data, n_t, g) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        },
        Some(_) => (None, Some("gamma = 0: SINR model has no alpha dependence".to_string())),
        None => match fit_gamma(&data, n_t, cfg.sweeps.alpha) {
            Ok(g) => (fit_sinr_model(&data, n_t, g).ok(), None),
            Err(e) => (None, Some(e.to_string())),
        },
    };

    let mut t = header(&["k"], &["model_sinr_db"]);
    for p in &pts {
        let model = fit
            .as_ref()
            .map(|f| sinr_model_db(p.x as usize, f.n_t, f.n_p, f.alpha, f.gamma));
        t.push(row(vec![(p.x as usize).to_string()], &p.metrics, vec![fmt_opt(model)]));
    }
    let sinrs: Vec<f64> = pts.iter().map(|p| p.metrics.sinr_db).collect();
    let digest = match &fit {
        Some(f) => format!(
            "user-sweep N={}: alpha={:.2} gamma={:.2} max residual {:.2} dB",
            c.arch.n_per_pll,
            f.alpha,
            f.gamma,
            f.max_abs_residual_db()
        ),
        None => format!(
            "user-sweep N={}: SINR {:.1}..{:.1} dB ({})",
            c.arch.n_per_pll,
            sinrs.iter().cloned().fold(f64::INFINITY, f64::min),
            sinrs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            fit_note.as_deref().unwrap_or("no fit")
        ),
    };
    Ok(Report {
        digest,
        results: json!({
            "k": ks,
            "sinr_db": sinrs,
            "fit": fit,
            "fit_note": fit_note,
        }),
        table: t,
    })
}

fn subarray(cfg: &RunConfig) -> Result<Report> {
    let c = sim(cfg)?;
    let ns = cfg.sweeps.n_values(c.arch.m);
    if let Some(&n) = ns.iter().find(|&&n| n == 0 || c.arch.m % n != 0) {
        return Err(CliError::Config {
            key: "sweeps.n_per_pll".into(),
            msg: format!("expected divisors of sim.m = {}, got {n}", c.arch.m),
        });
    }
    let pts = sweep_subarray(&c, &ns, &cfg.sweeps.separations_deg)?;
    let mut t = header(&["separation_deg", "n_per_pll"], &[]);
    for p in &pts {
        t.push(row(
            vec![fmt_f64(p.separation_deg), p.n_per_pll.to_string()],
            &p.metrics,
            vec![],
        ));
    }
    let per_sep: Vec<_> = cfg
        .sweeps
        .separations_deg
        .iter()
        .map(|&s| {
            let v: Vec<f64> = pts
                .iter()
                .filter(|p| p.separation_deg == s)
                .map(|p| p.metrics.sinr_db)
                .collect();
            json!({"separation_deg": s, "n_per_pll": ns, "sinr_db": v})
        })
        .collect();
    let digest = pts
        .iter()
        .filter(|p| p.n_per_pll == c.arch.m || p.n_per_pll == 1)
        .map(|p| format!("{}°/N={}: {:.1} dB", p.separation_deg, p.n_per_pll, p.metrics.sinr_db))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Report {
        digest: format!("subarray-sweep: {digest}"),
        results: json!({ "curves": per_sep }),
        table: t,
    })
}

fn ber(cfg: &RunConfig) -> Result<Report> {
    let c = sim(cfg)?;
    let pts = ber_curve(&c, &cfg.sweeps.snr_db, &cfg.sweeps.constellations, &cfg.sweeps.policy())?;
    let mut t = header(
        &["constellation", "phase_noise", "snr_db", "cr_bandwidth_hz"],
        &["awgn_ber"],
    );
    for p in &pts {
        t.push(row(
            vec![
                p.constellation.name().to_string(),
                p.phase_noise.to_string(),
                fmt_f64(p.snr_db),
                fmt_f64(p.cr_bandwidth_hz),
            ],
            &p.metrics,
            vec![fmt_f64(awgn_ber(p.constellation, p.snr_db))],
        ));
    }
    let floors: Vec<_> = cfg
        .sweeps
        .constellations
        .iter()
        .filter_map(|&con| {
            pts.iter()
                .rfind(|p| p.constellation == con && p.phase_noise)
                .map(|p| json!({"constellation": con, "snr_db": p.snr_db, "ber": p.metrics.ber}))
        })
        .collect();
    let digest = floors
        .iter()
        .map(|f| format!("{} {:.2e}", f["constellation"].as_str().unwrap_or("?"), f["ber"].as_f64().unwrap_or(f64::NAN)))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Report {
        digest: format!("ber-curve at highest SNR with phase noise: {digest}"),
        results: json!({ "highest_snr_with_phase_noise": floors }),
        table: t,
    })
}

fn single(cfg: &RunConfig) -> Result<Report> {
    let c = sim(cfg)?;
    let m = run_uplink(&c)?;
    let mut t = header(&["user"], &[]);
    for (i, u) in m.per_user.iter().enumerate() {
        t.push(vec![i.to_string()].into_iter().chain(user_cells(u)).collect());
    }
    t.push(row(vec!["all".into()], &m, vec![]));
    Ok(Report {
        digest: format!(
            "single-run M={} N={} K={}: SINR {:.2} ± {:.2} dB, BER {:.2e}",
            c.arch.m, c.arch.n_per_pll, c.k, m.sinr_db, m.sinr_ci_db, m.ber
        ),
        results: json!({
            "sinr_db": m.sinr_db,
            "sinr_ci_db": m.sinr_ci_db,
            "evm": m.evm,
            "ber": m.ber,
            "lock_lost": m.lock_lost,
        }),
        table: t,
    })
}
