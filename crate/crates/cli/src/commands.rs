//! Subcommand implementations. Each returns its full output as a string so
//! callers (the binary, tests) decide where it goes.

use lowregret::adversary::{impossibility_harness, run_trials, RegretStats};
use lowregret::dataset::{generate_corpus, CorpusConfig, CorpusStats, PolyaMode};
use lowregret::metrics::{tv_exact, tv_mc, TvEstimate};
use lowregret::{Response, RngSeed, Temperature, UtilityMatrix};

use crate::config::{EtaSpec, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::spec::ModelSpec;

pub const SIMULATE_HEADER: [&str; 8] =
    ["trial", "seed", "model", "adversary", "T", "regret", "switched", "switch_time"];
pub const TV_HEADER: [&str; 6] = ["P", "Q", "T", "method", "value", "ci"];
pub const IMPOSSIBILITY_HEADER: [&str; 4] = ["candidate", "tv_lb", "regret_vs_M1", "sum"];

pub fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

pub fn response(eta: EtaSpec, horizon: usize) -> Result<Response> {
    Ok(match eta {
        EtaSpec::Auto => Response::Quantal(Temperature::auto(horizon)),
        EtaSpec::Value(x) => Response::Quantal(Temperature::new(x)?),
        EtaSpec::Best => Response::Best,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOutput {
    pub csv: String,
    pub stats: RegretStats,
}

/// One row per trial, then `mean` and `ci95` summary rows. The utility is
/// the matching utility over the model's states.
pub fn simulate(cfg: &ExperimentConfig) -> Result<SimulateOutput> {
    let t = cfg.horizon;
    let model = cfg.model.build(t, cfg.alpha)?;
    let adversary = cfg.adversary.build(t, cfg.alpha)?;
    let u = UtilityMatrix::matching(model.num_states());
    let runs = run_trials(model.as_ref(), &adversary, &u, response(cfg.eta, t)?, t, cfg.trials, RngSeed(cfg.seed))?;
    let stats = RegretStats::from_runs(&runs);
    let (m, a, seed, ts) = (cfg.model.to_string(), cfg.adversary.to_string(), cfg.seed.to_string(), t.to_string());
    let common = |first: String, regret: String, switched: String, time: String| {
        vec![first, seed.clone(), m.clone(), a.clone(), ts.clone(), regret, switched, time]
    };
    let mut rows: Vec<Vec<String>> = runs
        .iter()
        .map(|r| {
            common(
                r.trial.to_string(),
                fmt6(r.regret),
                (r.switch_time.is_some() as u8).to_string(),
                r.switch_time.map_or(String::new(), |s| s.to_string()),
            )
        })
        .collect();
    let switch_rate = if runs.is_empty() { 0.0 } else { stats.switched as f64 / runs.len() as f64 };
    rows.push(common("mean".into(), fmt6(stats.mean), fmt6(switch_rate), String::new()));
    rows.push(common("ci95".into(), fmt6(stats.ci95), String::new(), String::new()));
    Ok(SimulateOutput { csv: csv_string(&SIMULATE_HEADER, &rows)?, stats })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvMethodArg {
    Exact,
    MonteCarlo,
}

pub struct TvRequest<'a> {
    pub p: &'a ModelSpec,
    pub q: &'a ModelSpec,
    pub horizon: usize,
    pub method: TvMethodArg,
    pub samples: usize,
    pub alpha: f64,
    pub seed: u64,
}

pub fn tv(req: &TvRequest<'_>) -> Result<(String, TvEstimate)> {
    let t = req.horizon;
    let p = req.p.build(t, req.alpha)?;
    let q = req.q.build(t, req.alpha)?;
    let est = match req.method {
        TvMethodArg::Exact => tv_exact(p.as_ref(), q.as_ref(), t)?,
        TvMethodArg::MonteCarlo => tv_mc(p.as_ref(), q.as_ref(), t, req.samples, RngSeed(req.seed))?,
    };
    let row = vec![
        req.p.to_string(),
        req.q.to_string(),
        t.to_string(),
        est.method.to_string(),
        fmt6(est.value),
        fmt6(est.ci),
    ];
    Ok((csv_string(&TV_HEADER, &[row])?, est))
}

pub struct DatasetRequest<'a> {
    pub base: &'a ModelSpec,
    pub alpha_mask: f64,
    pub n_base: usize,
    pub mode: PolyaMode,
    pub horizon: usize,
    pub seed: u64,
}

/// JSONL records plus a one-line summary.
pub fn dataset(req: &DatasetRequest<'_>) -> Result<(String, String, CorpusStats)> {
    let base = req.base.build(req.horizon, 1.0)?;
    let u = UtilityMatrix::matching(base.num_states());
    let cfg = CorpusConfig {
        alpha_mask: req.alpha_mask,
        n_base: req.n_base,
        polya: req.mode,
        horizon: req.horizon,
        seed: RngSeed(req.seed),
    };
    let corpus = generate_corpus(base.as_ref(), &u, &cfg)?;
    let mut jsonl = String::new();
    for r in &corpus.records {
        jsonl.push_str(&r.to_json_line());
        jsonl.push('\n');
    }
    let s = &corpus.stats;
    let hist: Vec<String> = s.mask_histogram.iter().map(|c| c.to_string()).collect();
    let stats = format!(
        "stats records={} base={} draws={} kept={} kept_fraction={} shortfall={} mask_hist={}",
        corpus.records.len(),
        s.base,
        s.draws,
        s.kept,
        fmt6(s.kept_fraction()),
        s.shortfall,
        hist.join("|")
    );
    Ok((jsonl, stats, corpus.stats))
}

/// The built-in candidates at window `L`: the de Bruijn pair, a windowed
/// urn, and the uniform forecaster.
pub fn impossibility_suite(window: usize) -> Vec<ModelSpec> {
    let l = crate::spec::Expr::num(window as f64);
    vec![
        ModelSpec::DeBruijn { order: l.clone(), flip: false, eps: crate::spec::Expr::num(0.0) },
        ModelSpec::DeBruijn { order: l.clone(), flip: true, eps: crate::spec::Expr::num(0.0) },
        ModelSpec::Windowed { inner: Box::new(ModelSpec::Polya), w: l },
        ModelSpec::Fixed(crate::spec::Expr::num(0.5)),
    ]
}

pub const IMPOSSIBILITY_FLOOR: f64 = 1.0 / 12.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ImpossibilityRow {
    pub candidate: String,
    pub tv: TvEstimate,
    pub regret_vs_m1: f64,
    pub regret_ci95: f64,
    pub sum: f64,
}

pub fn impossibility(
    window: usize,
    candidates: &[ModelSpec],
    trials: usize,
    seed: u64,
) -> Result<(String, Vec<ImpossibilityRow>)> {
    let horizon = 2 * window;
    let mut out = Vec::new();
    for c in candidates {
        let model = c.build(horizon, 1.0)?;
        let rep = impossibility_harness(model.as_ref(), window, trials, RngSeed(seed))?;
        out.push(ImpossibilityRow {
            candidate: c.to_string(),
            tv: rep.tv,
            regret_vs_m1: rep.regret_vs_m1,
            regret_ci95: rep.regret_ci95,
            sum: rep.sum(),
        });
    }
    let rows: Vec<Vec<String>> =
        out.iter().map(|r| vec![r.candidate.clone(), fmt6(r.tv.value), fmt6(r.regret_vs_m1), fmt6(r.sum)]).collect();
    Ok((csv_string(&IMPOSSIBILITY_HEADER, &rows)?, out))
}
