//! Monte Carlo sweeps behind the four figure experiments.
//!
//! Every trial draws its channels and bases from `(seed, trial)` streams, so
//! all schemes, grid points and worker counts see the same realizations.
//! Trials run on a rayon pool and are merged back in trial order.

use std::collections::HashMap;

use rayon::prelude::*;

use oia_core::analysis::sum_lif;
use oia_core::channel::{draw_channel_set, draw_reference_bases, n0_from_db, ChannelSet, ReferenceBasis};
use oia_core::oia::{apply_rule, select_cell, user_svd, CellSelection, UserSvd, WeightRule};
use oia_core::receivers::{evaluate, EffectiveChannel};
use oia_core::rng::TrialStreams;

use crate::codebooks::CodebookStore;
use crate::config::{Experiment, Receiver, RunConfig, Scheme, SweepAxis};
use crate::error::{HarnessError, Result};
use crate::record::ExperimentRecord;

pub const METRIC_SUM_LIF: &str = "sum_lif";
pub const METRIC_SUM_RATE: &str = "sum_rate";
pub const METRIC_OUTAGE: &str = "outage";

/// A scheme evaluated at a given codebook size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Variant {
    pub scheme: Scheme,
    pub n_f: Option<u32>,
}

impl Variant {
    /// `n_f` that actually changes the weights.
    fn rule_key(self) -> (Scheme, Option<u32>) {
        (self.scheme, self.scheme.codebook_kind().and(self.n_f))
    }
}

pub fn variants(cfg: &RunConfig) -> Vec<Variant> {
    let mut out = Vec::new();
    for &scheme in &cfg.schemes {
        if cfg.experiment.sweep_axis() == SweepAxis::FeedbackBits || scheme.codebook_kind().is_some() {
            out.extend(cfg.n_f.iter().map(|&b| Variant { scheme, n_f: Some(b) }));
        } else {
            out.push(Variant { scheme, n_f: None });
        }
    }
    out
}

fn rule<'a>(v: Variant, books: &'a CodebookStore) -> WeightRule<'a> {
    match (v.scheme.codebook_kind(), v.n_f) {
        (Some(kind), Some(b)) => WeightRule::Codebook(books.get(kind, b)),
        _ if v.scheme == Scheme::MaxSnr => WeightRule::MaxSnr,
        _ => WeightRule::SvdExact,
    }
}

/// Runs `f(trial)` for every trial on a pool of `workers` threads and
/// returns the results in trial order.
pub fn run_trials<T, F>(workers: usize, trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| (0..trials as u64).into_par_iter().map(&f).collect())
}

/// Channel view restricted to the first `n` users of each cell.
fn first_users(full: &ChannelSet, n: usize) -> ChannelSet {
    if n == full.users() {
        return full.clone();
    }
    ChannelSet::from_fn(full.cells(), n, |k, i, j| full.h(k, i, j).clone())
}

struct TrialContext {
    channels: ChannelSet,
    bases: ReferenceBasis,
    svds: Vec<Vec<UserSvd>>,
}

impl TrialContext {
    fn new(channels: ChannelSet, bases: ReferenceBasis) -> Result<Self> {
        let svds = (0..channels.cells())
            .map(|i| (0..channels.users()).map(|j| user_svd(&channels, &bases, i, j)).collect())
            .collect::<oia_core::error::Result<_>>()?;
        Ok(TrialContext { channels, bases, svds })
    }

    fn select(&self, rule: WeightRule<'_>, s: usize) -> Result<Vec<CellSelection>> {
        let mut out = Vec::with_capacity(self.svds.len());
        for (i, cell) in self.svds.iter().enumerate() {
            let states = cell
                .iter()
                .map(|u| apply_rule(u, self.channels.h(i, i, u.user), rule))
                .collect::<oia_core::error::Result<Vec<_>>>()?;
            out.push(select_cell(&states, rule, s)?);
        }
        Ok(out)
    }
}

fn trial_contexts(cfg: &RunConfig, trial: u64) -> Result<Vec<TrialContext>> {
    let n_max = *cfg.n.last().expect("validated non-empty");
    let sc = cfg.scenario(n_max)?;
    let streams = TrialStreams::new(cfg.seed, trial);
    let full = draw_channel_set(&sc, &streams);
    let bases = draw_reference_bases(&sc, &streams);
    cfg.n.iter().map(|&n| TrialContext::new(first_users(&full, n), bases.clone())).collect()
}

fn prepare_books(cfg: &RunConfig, vars: &[Variant]) -> Result<CodebookStore> {
    let wanted: Vec<_> = vars
        .iter()
        .filter_map(|v| Some((v.scheme.codebook_kind()?, v.n_f?)))
        .collect();
    CodebookStore::prepare(cfg.l, cfg.seed, &wanted, cfg.codebook_dir.as_deref())
}

fn base_record(cfg: &RunConfig, v: Variant, n: usize) -> ExperimentRecord {
    ExperimentRecord {
        experiment: cfg.experiment,
        scheme: v.scheme,
        receiver: None,
        k: cfg.k,
        m: cfg.m,
        n,
        l: cfg.l,
        s: cfg.s,
        n_f: v.n_f,
        snr_db: None,
        trial: None,
        metric: String::new(),
        value: 0.0,
    }
}

fn sum_lif_records(cfg: &RunConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let vars = variants(cfg);
    let books = prepare_books(cfg, &vars)?;
    // per trial: [n index][variant index]
    let per_trial = run_trials(cfg.workers, cfg.trials, |t| {
        let mut out = Vec::with_capacity(cfg.n.len());
        for ctx in trial_contexts(cfg, t)? {
            let mut memo: HashMap<(Scheme, Option<u32>), f64> = HashMap::new();
            let mut row = Vec::with_capacity(vars.len());
            for &v in &vars {
                let value = match memo.get(&v.rule_key()) {
                    Some(&x) => x,
                    None => {
                        let x = sum_lif(&ctx.select(rule(v, &books), cfg.s)?);
                        memo.insert(v.rule_key(), x);
                        x
                    }
                };
                row.push(value);
            }
            out.push(row);
        }
        Ok(out)
    })?;

    let mut records = Vec::with_capacity(cfg.n.len() * vars.len() * cfg.trials);
    for (ni, &n) in cfg.n.iter().enumerate() {
        for (vi, &v) in vars.iter().enumerate() {
            for (t, vals) in per_trial.iter().enumerate() {
                records.push(ExperimentRecord {
                    trial: Some(t as u64),
                    metric: METRIC_SUM_LIF.into(),
                    value: vals[ni][vi],
                    ..base_record(cfg, v, n)
                });
            }
        }
    }
    Ok(records)
}

struct RatePoint {
    zf: f64,
    gmi: f64,
    capacity: f64,
    outage: bool,
}

fn rate_records(cfg: &RunConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let vars = variants(cfg);
    let books = prepare_books(cfg, &vars)?;
    let n0s: Vec<f64> = cfg.snr_db.iter().map(|&d| n0_from_db(d)).collect();
    // per trial: [n index][variant index][snr index]
    let per_trial = run_trials(cfg.workers, cfg.trials, |t| {
        let mut out = Vec::with_capacity(cfg.n.len());
        for ctx in trial_contexts(cfg, t)? {
            let mut by_variant = Vec::with_capacity(vars.len());
            for &v in &vars {
                let sel = ctx.select(rule(v, &books), cfg.s)?;
                let effs = (0..cfg.k)
                    .map(|i| EffectiveChannel::assemble(&ctx.channels, &ctx.bases, &sel, i))
                    .collect::<oia_core::error::Result<Vec<_>>>()?;
                let mut points = Vec::with_capacity(n0s.len());
                for &n0 in &n0s {
                    let mut p = RatePoint { zf: 0.0, gmi: 0.0, capacity: 0.0, outage: false };
                    for (i, eff) in effs.iter().enumerate() {
                        let ev = evaluate(eff, &ctx.bases.u[i], n0)?;
                        p.zf += ev.zf_sum();
                        p.gmi += ev.gmi;
                        p.capacity += ev.capacity;
                        p.outage |= ev.outage;
                    }
                    points.push(p);
                }
                by_variant.push(points);
            }
            out.push(by_variant);
        }
        Ok(out)
    })?;

    let mut records = Vec::new();
    for (ni, &n) in cfg.n.iter().enumerate() {
        for (vi, &v) in vars.iter().enumerate() {
            for (si, &snr) in cfg.snr_db.iter().enumerate() {
                for &rx in &cfg.receivers {
                    for (t, vals) in per_trial.iter().enumerate() {
                        let p = &vals[ni][vi][si];
                        let base = ExperimentRecord {
                            receiver: Some(rx),
                            snr_db: Some(snr),
                            trial: Some(t as u64),
                            ..base_record(cfg, v, n)
                        };
                        let value = match rx {
                            Receiver::Zf => p.zf,
                            Receiver::MedGmi => p.gmi,
                            Receiver::Capacity => p.capacity,
                        };
                        if rx == Receiver::Zf {
                            records.push(ExperimentRecord {
                                metric: METRIC_OUTAGE.into(),
                                value: if p.outage { 1.0 } else { 0.0 },
                                ..base.clone()
                            });
                        }
                        records.push(ExperimentRecord { metric: METRIC_SUM_RATE.into(), value, ..base });
                    }
                }
            }
        }
    }
    Ok(records)
}

fn finish(cfg: &RunConfig, mut records: Vec<ExperimentRecord>) -> Vec<ExperimentRecord> {
    if cfg.summary {
        let summary = summarize(&records);
        records.extend(summary);
    }
    records
}

/// Mean sum-LIF versus the number of users.
pub fn run_sumlif_vs_n(cfg: &RunConfig) -> Result<Vec<ExperimentRecord>> {
    expect(cfg, Experiment::SumlifVsN)?;
    Ok(finish(cfg, sum_lif_records(cfg)?))
}

/// Mean sum-LIF versus the number of feedforward bits.
pub fn run_sumlif_vs_nf(cfg: &RunConfig) -> Result<Vec<ExperimentRecord>> {
    expect(cfg, Experiment::SumlifVsNf)?;
    Ok(finish(cfg, sum_lif_records(cfg)?))
}

/// Sum rates versus SNR.
pub fn run_rate_vs_snr(cfg: &RunConfig) -> Result<Vec<ExperimentRecord>> {
    expect(cfg, Experiment::RateVsSnr)?;
    Ok(finish(cfg, rate_records(cfg)?))
}

/// Sum rates versus the number of users.
pub fn run_rate_vs_n(cfg: &RunConfig) -> Result<Vec<ExperimentRecord>> {
    expect(cfg, Experiment::RateVsN)?;
    Ok(finish(cfg, rate_records(cfg)?))
}

/// Dispatches on `cfg.experiment`.
pub fn run(cfg: &RunConfig) -> Result<Vec<ExperimentRecord>> {
    match cfg.experiment {
        Experiment::SumlifVsN => run_sumlif_vs_n(cfg),
        Experiment::SumlifVsNf => run_sumlif_vs_nf(cfg),
        Experiment::RateVsSnr => run_rate_vs_snr(cfg),
        Experiment::RateVsN => run_rate_vs_n(cfg),
    }
}

fn expect(cfg: &RunConfig, e: Experiment) -> Result<()> {
    if cfg.experiment != e {
        return Err(HarnessError::Config(format!("config is for `{}`, not `{e}`", cfg.experiment)));
    }
    Ok(())
}

/// Per-point mean (`mean_<metric>`) and standard error (`se_<metric>`) rows
/// for every group of trial rows, in order of first appearance.
pub fn summarize(records: &[ExperimentRecord]) -> Vec<ExperimentRecord> {
    let mut order: Vec<ExperimentRecord> = Vec::new();
    let mut groups: HashMap<String, (usize, Vec<f64>)> = HashMap::new();
    for r in records.iter().filter(|r| r.trial.is_some()) {
        let key_rec = ExperimentRecord { trial: None, value: 0.0, ..r.clone() };
        let key = key_rec.fields().join(",");
        let entry = groups.entry(key).or_insert_with(|| {
            order.push(key_rec);
            (order.len() - 1, Vec::new())
        });
        entry.1.push(r.value);
    }
    let mut stats: Vec<(usize, f64, f64)> = groups
        .into_values()
        .map(|(idx, vals)| {
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = if vals.len() > 1 {
                vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            (idx, mean, (var / n).sqrt())
        })
        .collect();
    stats.sort_by_key(|s| s.0);
    let mut out = Vec::with_capacity(2 * stats.len());
    for (idx, mean, se) in stats {
        let base = &order[idx];
        out.push(ExperimentRecord { metric: format!("mean_{}", base.metric), value: mean, ..base.clone() });
        out.push(ExperimentRecord { metric: format!("se_{}", base.metric), value: se, ..base.clone() });
    }
    out
}

/// Selector over records, used to pull single curves out of a run.
#[derive(Debug, Clone, Copy, Default)]
pub struct Query<'a> {
    pub scheme: Option<Scheme>,
    pub receiver: Option<Receiver>,
    pub n: Option<usize>,
    pub n_f: Option<u32>,
    pub snr_db: Option<f64>,
    pub metric: Option<&'a str>,
}

impl Query<'_> {
    pub fn matches(&self, r: &ExperimentRecord) -> bool {
        self.scheme.is_none_or(|x| r.scheme == x)
            && self.receiver.is_none_or(|x| r.receiver == Some(x))
            && self.n.is_none_or(|x| r.n == x)
            && self.n_f.is_none_or(|x| r.n_f == Some(x))
            && self.snr_db.is_none_or(|x| r.snr_db == Some(x))
            && self.metric.is_none_or(|x| r.metric == x)
    }

    /// Trial values matching the query, in trial order.
    pub fn values(&self, records: &[ExperimentRecord]) -> Vec<f64> {
        records.iter().filter(|r| r.trial.is_some() && self.matches(r)).map(|r| r.value).collect()
    }

    pub fn mean(&self, records: &[ExperimentRecord]) -> Option<f64> {
        let v = self.values(records);
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(e: Experiment) -> RunConfig {
        let mut cfg = RunConfig::defaults(e);
        cfg.trials = 3;
        cfg.n = if e == Experiment::SumlifVsNf { vec![6] } else { vec![4, 8] };
        cfg.n_f = vec![1, 2];
        if e == Experiment::RateVsSnr {
            cfg.snr_db = vec![0.0, 20.0];
        }
        cfg
    }

    #[test]
    fn sum_lif_rows_per_point() {
        let cfg = small(Experiment::SumlifVsN);
        let recs = run(&cfg).unwrap();
        // N points x (svd + 2 gc + 2 rc) x trials
        assert_eq!(recs.len(), 2 * 5 * 3);
        assert!(recs.iter().all(|r| r.receiver.is_none() && r.metric == METRIC_SUM_LIF));
    }

    #[test]
    fn svd_line_is_flat_across_feedback_bits() {
        let cfg = small(Experiment::SumlifVsNf);
        let recs = run(&cfg).unwrap();
        for t in 0..3 {
            let vals: Vec<f64> = recs
                .iter()
                .filter(|r| r.scheme == Scheme::SvdOia && r.trial == Some(t))
                .map(|r| r.value)
                .collect();
            assert_eq!(vals.len(), 2);
            assert_eq!(vals[0], vals[1]);
        }
    }

    #[test]
    fn rate_rows_and_summary() {
        let mut cfg = small(Experiment::RateVsSnr);
        cfg.summary = true;
        let recs = run(&cfg).unwrap();
        let outage = Query { metric: Some(METRIC_OUTAGE), ..Default::default() }.values(&recs);
        assert!(!outage.is_empty() && outage.iter().all(|&o| o == 0.0 || o == 1.0));
        let means: Vec<_> = recs.iter().filter(|r| r.trial.is_none()).collect();
        assert!(means.iter().any(|r| r.metric == "mean_sum_rate"));
        assert!(means.iter().any(|r| r.metric == "se_sum_rate"));
        for r in recs.iter().filter(|r| r.metric == "mean_sum_rate") {
            let q = Query {
                scheme: Some(r.scheme),
                receiver: r.receiver,
                n: Some(r.n),
                n_f: r.n_f,
                snr_db: r.snr_db,
                metric: Some(METRIC_SUM_RATE),
            };
            assert!((q.mean(&recs).unwrap() - r.value).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_experiment_is_rejected() {
        assert!(run_rate_vs_n(&small(Experiment::SumlifVsN)).is_err());
    }
}
