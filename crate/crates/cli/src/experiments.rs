//! Dispatch from a validated config to the simulation drivers.

use qkdsim_core::attacks::{pccm_fidelities, qcl_optimize, write_qcl_trace_csv};
use qkdsim_core::codes::syndrome_string;
use qkdsim_core::qec::{
    self, bitflip_crossover, run_422, run_steane_monitor, scaling_sweep, Estimator, Sampling, ScalingConfig,
};
use qkdsim_core::qkd::{
    self, correlation, estimate_pccm_fidelities, qber_abort_check, run_protocol, sift, Basis, Pair, Protocol,
    QkdSetup, ABORT_QBER,
};
use qkdsim_core::rng::derive_seed;
use qkdsim_core::sidechannel::{leakage_curve, sampled_bias_curve, write_bias_csv, write_leakage_csv, inject_sidechannel};
use qkdsim_core::stats::{loglog_slope, mutual_information_bits};
use qkdsim_core::noise::ChannelSpec;
use serde_json::{json, Map, Value};

use crate::config::{EstimatorConfig, ExperimentConfig, ExperimentKind, SideChannelPlan};
use crate::CliError;

/// Result of one experiment: the CSV body and the JSON summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub csv: Vec<u8>,
    /// Flat numeric statistics, one merged-CSV column each in sweeps.
    pub headline: Map<String, Value>,
    pub details: Value,
}

fn rt<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn csv<F>(f: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).map_err(rt)?;
    Ok(buf)
}

pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome, CliError> {
    match cfg.experiment {
        ExperimentKind::Bb84 => run_qkd(cfg, Protocol::Bb84, workers),
        ExperimentKind::Bbm92 => run_qkd(cfg, Protocol::Bbm92, workers),
        ExperimentKind::Qcl => run_qcl(cfg, workers),
        ExperimentKind::Qec422 => run_qec422(cfg, workers),
        ExperimentKind::Qec422Scaling => run_scaling(cfg, workers),
        ExperimentKind::SteaneMonitor => run_steane(cfg, workers),
        ExperimentKind::Sidechannel => run_sidechannel(cfg, workers),
    }
}

fn setup_of(cfg: &ExperimentConfig) -> Result<QkdSetup, CliError> {
    Ok(QkdSetup {
        attack: cfg.attack_spec()?,
        channel: cfg.channel_spec()?,
        p_d: cfg.p_d,
    })
}

fn insert_corr(h: &mut Map<String, Value>, records: &[qkd::RoundRecord], pair: Pair, name: &str) {
    if let Ok(c) = correlation(records, pair, None) {
        h.insert(format!("C_{name}"), json!(c.value));
        h.insert(format!("std_err_{name}"), json!(c.std_err));
    }
    for basis in Basis::BOTH {
        if let Ok(c) = correlation(records, pair, Some(basis)) {
            h.insert(format!("C_{name}_{}", basis.label()), json!(c.value));
        }
    }
}

fn run_qkd(cfg: &ExperimentConfig, protocol: Protocol, workers: usize) -> Result<Outcome, CliError> {
    let setup = setup_of(cfg)?;
    let records = run_protocol(protocol, cfg.shots(), &setup, cfg.seed, workers).map_err(rt)?;
    let sifted = sift(&records);
    let mut h = Map::new();
    h.insert("rounds".into(), json!(records.len()));
    h.insert("sifted".into(), json!(sifted.len()));
    if let Ok(q) = qber_abort_check(&sifted, ABORT_QBER) {
        h.insert("qber".into(), json!(q.qber));
        h.insert("abort".into(), json!(q.abort as u8));
    }
    insert_corr(&mut h, &sifted, Pair::AB, "AB");
    if setup.attack.is_some() {
        insert_corr(&mut h, &sifted, Pair::AE, "AE");
        insert_corr(&mut h, &sifted, Pair::BE, "BE");
    }
    let mut details = json!({});
    if setup.p_d.is_none() {
        let mut exact = Map::new();
        for basis in Basis::BOTH {
            if let Ok(e) = qkd::exact_correlations(protocol, setup.attack, setup.channel.as_ref(), basis) {
                exact.insert(basis.label().into(), json!({"C_AB": e.ab, "C_AE": e.ae, "C_BE": e.be}));
            }
        }
        if !exact.is_empty() {
            details = json!({ "exact": exact });
        }
    }
    Ok(Outcome {
        csv: csv(|b| qkd::write_rounds_csv(b, &records))?,
        headline: h,
        details,
    })
}

fn run_qcl(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome, CliError> {
    let qc = cfg.qcl_config();
    let result = qcl_optimize(&qc, |theta, it| {
        estimate_pccm_fidelities(theta, qc.shots_per_eval, derive_seed(qc.seed, it as u64), workers)
            .map_err(|e| e.to_string())
    })
    .map_err(rt)?;
    let (f_ab, f_ae) = pccm_fidelities(result.theta_star);
    let last = result.trace.last().expect("optimizer evaluates at least once");
    let mut h = Map::new();
    h.insert("theta_star".into(), json!(result.theta_star));
    h.insert("F_AB_exact".into(), json!(f_ab));
    h.insert("F_AE_exact".into(), json!(f_ae));
    h.insert("final_loss".into(), json!(last.loss));
    h.insert("evaluations".into(), json!(result.trace.len()));
    Ok(Outcome {
        csv: csv(|b| write_qcl_trace_csv(b, &result.trace))?,
        headline: h,
        details: json!({"alpha": qc.alpha, "f": qc.f}),
    })
}

fn sampling(cfg: &ExperimentConfig, workers: usize) -> Sampling {
    Sampling {
        shots: cfg.shots(),
        seed: cfg.seed,
        workers,
    }
}

fn run_qec422(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome, CliError> {
    let channel = cfg.channel_spec()?.unwrap_or(ChannelSpec::BitFlip(0.1));
    let ms = cfg.m.clone().unwrap_or_else(|| (0..=4).collect());
    let mut rows = Vec::with_capacity(ms.len());
    for (i, &m) in ms.iter().enumerate() {
        let s = Sampling {
            seed: derive_seed(cfg.seed, i as u64),
            ..sampling(cfg, workers)
        };
        rows.push(run_422(&channel, m, cfg.p_d, s).map_err(rt)?);
    }
    let last = rows.last().expect("m is non-empty");
    let mut h = Map::new();
    h.insert("acceptance".into(), json!(last.acceptance_rate));
    h.insert("flip_lq1".into(), json!(last.flip_rate_lq1));
    h.insert("flip_lq2".into(), json!(last.flip_rate_lq2));
    let per_m: Vec<Value> = rows
        .iter()
        .map(|r| json!({"m": r.m, "acceptance": r.acceptance_rate, "flip_lq1": r.flip_rate_lq1, "flip_lq2": r.flip_rate_lq2}))
        .collect();
    Ok(Outcome {
        csv: csv(|b| qec::write_round_stats_csv(b, &rows))?,
        headline: h,
        details: json!({ "channel": channel.label(), "rounds": per_m }),
    })
}

fn run_scaling(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome, CliError> {
    let d = ScalingConfig::default();
    let circuit_noise = cfg.circuit_noise.unwrap_or(false);
    let estimator = match cfg.estimator {
        Some(EstimatorConfig::Exact) => Estimator::Exact,
        Some(EstimatorConfig::Sampled) => Estimator::Sampled(sampling(cfg, workers)),
        None if circuit_noise => Estimator::Sampled(sampling(cfg, workers)),
        None => Estimator::Exact,
    };
    let sc = ScalingConfig {
        lambdas: cfg.lambdas.clone().unwrap_or(d.lambdas),
        p: cfg.p.unwrap_or(d.p),
        p_d: cfg.p_d.unwrap_or(d.p_d),
        noise: cfg.noise.map(|n| n.to_core()).unwrap_or(d.noise),
        circuit_noise,
        estimator,
    };
    let points = scaling_sweep(&sc).map_err(rt)?;
    let mut h = Map::new();
    if let [only] = points.as_slice() {
        h.insert("p_L".into(), json!(only.p_l));
        h.insert("acceptance".into(), json!(only.acceptance));
        h.insert("physical_ref".into(), json!(only.physical_ref));
    } else {
        let xs: Vec<f64> = points.iter().map(|p| p.lambda).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.p_l).collect();
        if let Some(s) = loglog_slope(&xs, &ys) {
            h.insert("slope".into(), json!(s));
        }
    }
    let mut details = json!({});
    if sc.noise == qec::ScalingNoise::BitFlip {
        if let Some(p) = bitflip_crossover(1e-3, 0.45) {
            details = json!({ "bitflip_crossover": p });
        }
    }
    Ok(Outcome {
        csv: csv(|b| qec::write_scaling_csv(b, &points))?,
        headline: h,
        details,
    })
}

fn run_steane(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome, CliError> {
    let channel = cfg.channel_spec()?.unwrap_or(ChannelSpec::Depolarizing1(0.03));
    let rounds_max = cfg.rounds_max.unwrap_or(3);
    let mon = run_steane_monitor(&channel, rounds_max, cfg.p_d, sampling(cfg, workers)).map_err(rt)?;
    let hist = &mon.histogram;
    let shots = hist.shots().max(1) as f64;
    let mut h = Map::new();
    h.insert("accepted_fraction".into(), json!(hist.accepted() as f64 / shots));
    h.insert("erasure_fraction".into(), json!(hist.erasures as f64 / shots));
    let final_flip = mon.flip_curve.last().expect("curve covers rounds 0..=rounds_max");
    h.insert("flip_rate".into(), json!(final_flip.flip_rate));
    let top: Vec<Value> = hist
        .top_bins(7)
        .into_iter()
        .map(|(s, c)| json!({"syndrome": syndrome_string(s, 6), "count": c}))
        .collect();
    let curve: Vec<Value> = mon
        .flip_curve
        .iter()
        .map(|p| json!({"rounds": p.rounds, "accepted": p.accepted, "flip_rate": p.flip_rate}))
        .collect();
    let top3: Vec<String> = hist.top_bins(3).into_iter().map(|(s, _)| syndrome_string(s, 6)).collect();
    Ok(Outcome {
        csv: csv(|b| qec::write_syndrome_csv(b, hist))?,
        headline: h,
        details: json!({
            "channel": channel.label(),
            "top3_syndromes": top3,
            "top_bins": top,
            "flip_curve": curve,
        }),
    })
}

fn run_sidechannel(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome, CliError> {
    let plan = cfg
        .sidechannel
        .as_ref()
        .expect("validated config has a side channel")
        .to_plan()?;
    let setup = QkdSetup {
        attack: cfg.attack_spec()?,
        channel: cfg.channel_spec()?,
        p_d: None,
    };
    let records = run_protocol(Protocol::Bb84, cfg.shots(), &setup, cfg.seed, workers).map_err(rt)?;
    let mut points = Vec::new();
    let mut h = Map::new();
    for (x, ch) in plan.channels() {
        let aug = inject_sidechannel(&records, &ch, cfg.seed).map_err(rt)?;
        let bob: Vec<qkd::RoundRecord> = aug.iter().map(|a| a.record.clone()).collect();
        let sifted = sift(&bob);
        let qber = qber_abort_check(&sifted, ABORT_QBER).map_err(rt)?.qber;
        let mut point = json!({ "x": x, "qber": qber });
        h.insert("qber".into(), json!(qber));
        let leaks: Vec<(bool, bool)> = aug.iter().filter_map(|a| a.e_leak.map(|e| (a.record.x_b, e))).collect();
        if !leaks.is_empty() {
            let agree = leaks.iter().filter(|(b, e)| b == e).count() as f64 / leaks.len() as f64;
            let mi = mutual_information_bits(leaks.iter().copied());
            point["agreement"] = json!(agree);
            point["mutual_information_bits"] = json!(mi);
            h.insert("agreement".into(), json!(agree));
            h.insert("mutual_information_bits".into(), json!(mi));
        }
        points.push(point);
    }
    let body = match &plan {
        SideChannelPlan::Leakage {
            detector,
            b_exposure_us,
            e_exposures_us,
        } => csv(|b| write_leakage_csv(b, &leakage_curve(detector, *b_exposure_us, e_exposures_us)))?,
        SideChannelPlan::Bias { model, durations_us } => {
            let curve = sampled_bias_curve(model, durations_us, cfg.shots(), derive_seed(cfg.seed, 1));
            if let Some(last) = curve.last() {
                h.insert("p_dark_input0".into(), json!(last.p_dark[0]));
                h.insert("p_dark_input1".into(), json!(last.p_dark[1]));
            }
            csv(|b| write_bias_csv(b, &curve))?
        }
    };
    Ok(Outcome {
        csv: body,
        headline: h,
        details: json!({ "points": points }),
    })
}
