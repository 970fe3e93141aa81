//! Trial orchestration, frame-error-rate aggregation, Wilson confidence
//! intervals, reference constants, and report emission.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::decoder::{self, Classifier, CodeGraph, DecodeStatus, DecoderConfig};
use crate::hgp::CssCode;
use crate::{Error, Result};

/// z for the 95% Wilson score interval.
pub const Z_95: f64 = 1.959964;

/// Population-dynamics BP threshold estimate for the cycle-free
/// (3,6)-regular CSS-LDPC ensemble on the depolarizing channel; plotted as
/// a reference line only.
pub const P_DE: f64 = 0.1529;

/// Aggregated result of independent decoding trials at one channel
/// probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FerPoint {
    pub p: f64,
    pub trials: u64,
    pub failures: u64,
    pub exact_successes: u64,
    pub degenerate_successes: u64,
    pub logical_failures: u64,
    pub syndrome_mismatches: u64,
    pub fer: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub mean_bp_iterations: f64,
    pub osd_invocations: u64,
}

/// Wilson 95% score interval for `failures` out of `trials`.
pub fn wilson_interval(failures: u64, trials: u64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InfeasibleParameters {
            reason: "Wilson interval needs at least one trial".to_string(),
        });
    }
    let n = trials as f64;
    let phat = failures as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = phat + z2 / (2.0 * n);
    let half = Z_95 * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = ((center - half) / denom).max(0.0);
    let hi = ((center + half) / denom).min(1.0);
    Ok((lo, hi))
}

/// Root of 1 - H2(p) - p log2(3) = 0 on (0, 0.25), the depolarizing-channel
/// hashing limit, by bisection to 1e-9.
pub fn hashing_limit() -> f64 {
    fn objective(p: f64) -> f64 {
        let h2 = if p <= 0.0 || p >= 1.0 {
            0.0
        } else {
            -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
        };
        1.0 - h2 - p * 3f64.log2()
    }
    let (mut lo, mut hi) = (1e-12, 0.25);
    debug_assert!(objective(lo) > 0.0 && objective(hi) < 0.0);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if objective(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// SplitMix64 step, used to derive independent per-trial substreams.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based substream: the trial RNG depends only on (seed, point,
/// trial), so results are independent of worker scheduling.
pub fn trial_rng(seed: u64, point_index: u64, trial_index: u64) -> ChaCha8Rng {
    let s = splitmix64(splitmix64(splitmix64(seed) ^ point_index) ^ trial_index);
    ChaCha8Rng::seed_from_u64(s)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub status: DecodeStatus,
    pub iterations: u32,
    pub osd_invoked: bool,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    exact: u64,
    degenerate: u64,
    logical: u64,
    mismatch: u64,
    iterations: u64,
    osd: u64,
}

impl Tally {
    fn add(mut self, r: &TrialRecord) -> Self {
        match r.status {
            DecodeStatus::Exact => self.exact += 1,
            DecodeStatus::Degenerate => self.degenerate += 1,
            DecodeStatus::LogicalFailure => self.logical += 1,
            DecodeStatus::SyndromeMismatch => self.mismatch += 1,
        }
        self.iterations += r.iterations as u64;
        self.osd += r.osd_invoked as u64;
        self
    }
}

#[allow(clippy::too_many_arguments)]
fn run_one_trial(
    code: &CssCode,
    graph: &CodeGraph,
    classifier: &Classifier,
    p: f64,
    config: &DecoderConfig,
    seed: u64,
    point_index: u64,
    trial: u64,
) -> TrialRecord {
    let mut rng = trial_rng(seed, point_index, trial);
    let error = decoder::sample_depolarizing(code.n(), p, &mut rng);
    let (s_x, s_z) = decoder::compute_syndromes(code, &error).expect("lengths match");
    let (estimate, iterations, osd_invoked) =
        decoder::decode_with_repair(graph, &s_x, &s_z, config);
    let status = classifier
        .classify(code, &error, &estimate)
        .expect("estimate has code length");
    TrialRecord { trial, status, iterations, osd_invoked }
}

/// Run `trials` independent decoding trials at one depolarizing probability
/// and aggregate. Deterministic for fixed (seed, point_index) regardless of
/// the worker count.
pub fn run_point(
    code: &CssCode,
    p: f64,
    trials: u64,
    config: &DecoderConfig,
    seed: u64,
    workers: usize,
    point_index: u64,
) -> Result<FerPoint> {
    let (point, _) = run_point_inner(code, p, trials, config, seed, workers, point_index, false)?;
    Ok(point)
}

/// Same as [`run_point`] but also returns the per-trial records in trial
/// order (for JSON-lines tracing).
pub fn run_point_traced(
    code: &CssCode,
    p: f64,
    trials: u64,
    config: &DecoderConfig,
    seed: u64,
    workers: usize,
    point_index: u64,
) -> Result<(FerPoint, Vec<TrialRecord>)> {
    let (point, records) =
        run_point_inner(code, p, trials, config, seed, workers, point_index, true)?;
    Ok((point, records.expect("tracing was requested")))
}

#[allow(clippy::too_many_arguments)]
fn run_point_inner(
    code: &CssCode,
    p: f64,
    trials: u64,
    config: &DecoderConfig,
    seed: u64,
    workers: usize,
    point_index: u64,
    trace: bool,
) -> Result<(FerPoint, Option<Vec<TrialRecord>>)> {
    if trials == 0 {
        return Err(Error::InfeasibleParameters { reason: "need at least one trial".to_string() });
    }
    let graph = CodeGraph::new(code);
    let classifier = Classifier::new(code);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InfeasibleParameters { reason: e.to_string() })?;
    let records: Vec<TrialRecord> = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| run_one_trial(code, &graph, &classifier, p, config, seed, point_index, t))
            .collect()
    });
    let tally = records.iter().fold(Tally::default(), |acc, r| acc.add(r));
    let failures = tally.logical + tally.mismatch;
    let (wilson_lo, wilson_hi) = wilson_interval(failures, trials)?;
    let point = FerPoint {
        p,
        trials,
        failures,
        exact_successes: tally.exact,
        degenerate_successes: tally.degenerate,
        logical_failures: tally.logical,
        syndrome_mismatches: tally.mismatch,
        fer: failures as f64 / trials as f64,
        wilson_lo,
        wilson_hi,
        mean_bp_iterations: tally.iterations as f64 / trials as f64,
        osd_invocations: tally.osd,
    };
    Ok((point, trace.then_some(records)))
}

/// Grid-run configuration: one decode campaign over a probability grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub p_grid: Vec<f64>,
    pub trials_per_point: u64,
    pub seed: u64,
    pub workers: usize,
    /// Optional early stop: cease after the chunk in which the failure
    /// count reaches this target (bounds runtime at high p). Disabled for
    /// golden-replay runs.
    pub max_failures: Option<u64>,
    pub decoder: DecoderConfig,
}

/// Early-stopping variant: trials are processed in fixed 256-trial chunks
/// and the run stops at the first chunk boundary where the cumulative
/// failure count reaches `max_failures`. Chunking is independent of the
/// worker count, so results stay deterministic.
#[allow(clippy::too_many_arguments)]
pub fn run_point_early_stop(
    code: &CssCode,
    p: f64,
    max_trials: u64,
    config: &DecoderConfig,
    seed: u64,
    workers: usize,
    point_index: u64,
    max_failures: u64,
) -> Result<FerPoint> {
    const CHUNK: u64 = 256;
    if max_trials == 0 {
        return Err(Error::InfeasibleParameters { reason: "need at least one trial".to_string() });
    }
    let graph = CodeGraph::new(code);
    let classifier = Classifier::new(code);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InfeasibleParameters { reason: e.to_string() })?;
    let mut tally = Tally::default();
    let mut done = 0u64;
    while done < max_trials {
        let hi = (done + CHUNK).min(max_trials);
        let chunk: Vec<TrialRecord> = pool.install(|| {
            (done..hi)
                .into_par_iter()
                .map(|t| run_one_trial(code, &graph, &classifier, p, config, seed, point_index, t))
                .collect()
        });
        tally = chunk.iter().fold(tally, |acc, r| acc.add(r));
        done = hi;
        if tally.logical + tally.mismatch >= max_failures {
            break;
        }
    }
    let failures = tally.logical + tally.mismatch;
    let (wilson_lo, wilson_hi) = wilson_interval(failures, done)?;
    Ok(FerPoint {
        p,
        trials: done,
        failures,
        exact_successes: tally.exact,
        degenerate_successes: tally.degenerate,
        logical_failures: tally.logical,
        syndrome_mismatches: tally.mismatch,
        fer: failures as f64 / done as f64,
        wilson_lo,
        wilson_hi,
        mean_bp_iterations: tally.iterations as f64 / done as f64,
        osd_invocations: tally.osd,
    })
}

/// Run every grid point of a campaign.
pub fn run_grid(code: &CssCode, cfg: &RunConfig) -> Result<Vec<FerPoint>> {
    let mut decoder_cfg = cfg.decoder.clone();
    let mut out = Vec::with_capacity(cfg.p_grid.len());
    for (idx, &p) in cfg.p_grid.iter().enumerate() {
        decoder_cfg.p_channel = p;
        let point = match cfg.max_failures {
            Some(target) => run_point_early_stop(
                code,
                p,
                cfg.trials_per_point,
                &decoder_cfg,
                cfg.seed,
                cfg.workers,
                idx as u64,
                target,
            )?,
            None => run_point(
                code,
                p,
                cfg.trials_per_point,
                &decoder_cfg,
                cfg.seed,
                cfg.workers,
                idx as u64,
            )?,
        };
        out.push(point);
    }
    Ok(out)
}

/// Convenience wrapper with point index 0.
pub fn run_trials(
    code: &CssCode,
    p: f64,
    trials: u64,
    config: &DecoderConfig,
    seed: u64,
    workers: usize,
) -> Result<FerPoint> {
    run_point(code, p, trials, config, seed, workers, 0)
}

// --- reports -------------------------------------------------------------------

pub fn results_csv(points: &[FerPoint]) -> String {
    let mut out = String::from("p,N,f,fer,wilson_lo,wilson_hi,mean_iters\n");
    for pt in points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            pt.p, pt.trials, pt.failures, pt.fer, pt.wilson_lo, pt.wilson_hi, pt.mean_bp_iterations
        ));
    }
    out
}

pub fn parse_results_csv(text: &str) -> Result<Vec<FerPoint>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::MalformedShiftRow {
                line: i + 1,
                reason: format!("expected 7 CSV fields, got {}", f.len()),
            });
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| Error::MalformedShiftRow {
                line: i + 1,
                reason: e.to_string(),
            })
        };
        let trials = num(f[1])? as u64;
        let failures = num(f[2])? as u64;
        out.push(FerPoint {
            p: num(f[0])?,
            trials,
            failures,
            exact_successes: 0,
            degenerate_successes: 0,
            logical_failures: 0,
            syndrome_mismatches: 0,
            fer: num(f[3])?,
            wilson_lo: num(f[4])?,
            wilson_hi: num(f[5])?,
            mean_bp_iterations: num(f[6])?,
            osd_invocations: 0,
        });
    }
    Ok(out)
}

fn fnv1a_hex(data: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in data {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Write results.csv, results.json, and fer_plot.svg under `out_dir`.
/// Zero-failure points are plotted at the Wilson upper endpoint; dashed and
/// dash-dotted vertical lines mark the density-evolution estimate and the
/// hashing limit.
pub fn emit_report(
    points: &[FerPoint],
    code_id: &str,
    config: &DecoderConfig,
    seed: u64,
    workers: usize,
    out_dir: &Path,
) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InfeasibleParameters { reason: "no points to report".to_string() });
    }
    std::fs::create_dir_all(out_dir)?;
    let csv = results_csv(points);
    std::fs::write(out_dir.join("results.csv"), &csv)?;
    let config_json = serde_json::to_string(config)?;
    let manifest = serde_json::json!({
        "code_id": code_id,
        "config": serde_json::from_str::<serde_json::Value>(&config_json)?,
        "config_hash": fnv1a_hex(config_json.as_bytes()),
        "provenance": format!("qhgp decode-sim seed={seed} workers={workers} points={}", points.len()),
        "seed": seed,
        "workers": workers,
        "points": points,
        "reference_lines": { "p_de": P_DE, "p_hash": hashing_limit() },
    });
    std::fs::write(out_dir.join("results.json"), serde_json::to_string_pretty(&manifest)?)?;
    std::fs::write(out_dir.join("fer_plot.svg"), render_svg(points))?;
    Ok(())
}

fn render_svg(points: &[FerPoint]) -> String {
    let (w, h) = (720.0f64, 480.0f64);
    let (ml, mr, mt, mb) = (70.0f64, 20.0f64, 20.0f64, 50.0f64);
    let p_hash = hashing_limit();
    let xs: Vec<f64> = points.iter().map(|p| p.p).collect();
    let mut x_min = xs.iter().copied().fold(f64::INFINITY, f64::min).min(P_DE);
    let mut x_max = xs.iter().copied().fold(0.0f64, f64::max).max(p_hash);
    let pad = 0.05 * (x_max - x_min).max(1e-3);
    x_min -= pad;
    x_max += pad;
    // Log-scale y over plotted values (zero-failure points sit at wilson_hi).
    let plotted: Vec<f64> = points
        .iter()
        .map(|pt| if pt.failures == 0 { pt.wilson_hi } else { pt.fer })
        .collect();
    let mut y_lo = f64::INFINITY;
    let mut y_hi = 0.0f64;
    for pt in points {
        let lo = if pt.wilson_lo > 0.0 { pt.wilson_lo } else { pt.wilson_hi / 10.0 };
        y_lo = y_lo.min(lo);
        y_hi = y_hi.max(pt.wilson_hi);
    }
    y_lo = (y_lo / 2.0).max(1e-12);
    y_hi = (y_hi * 2.0).min(1.0);
    let x_of = |p: f64| ml + (p - x_min) / (x_max - x_min) * (w - ml - mr);
    let y_of = |f: f64| {
        let t = (f.max(y_lo).ln() - y_lo.ln()) / (y_hi.ln() - y_lo.ln());
        h - mb - t * (h - mt - mb)
    };
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr,
        h - mb
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb
    ));
    // Log-decade gridlines and labels.
    let mut decade = 10f64.powf(y_lo.log10().floor());
    while decade <= y_hi {
        if decade >= y_lo {
            let y = y_of(decade);
            svg.push_str(&format!(
                "<line x1=\"{ml}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#dddddd\"/>\n",
                w - mr
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">1e{}</text>\n",
                ml - 6.0,
                y + 4.0,
                decade.log10().round() as i64
            ));
        }
        decade *= 10.0;
    }
    // Reference lines.
    for (x, label, dash) in [(P_DE, format!("p_DE = {P_DE}"), "6,4"), (p_hash, format!("p_hash = {p_hash:.5}"), "10,4,2,4")] {
        let xp = x_of(x);
        svg.push_str(&format!(
            "<line x1=\"{xp}\" y1=\"{mt}\" x2=\"{xp}\" y2=\"{}\" stroke=\"gray\" stroke-dasharray=\"{dash}\"/>\n",
            h - mb
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"gray\">{label}</text>\n",
            xp + 4.0,
            mt + 14.0
        ));
    }
    // Wilson bands and markers.
    for (pt, &y_val) in points.iter().zip(&plotted) {
        let x = x_of(pt.p);
        let y1 = y_of(pt.wilson_hi);
        let y2 = y_of(pt.wilson_lo.max(y_lo));
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y1}\" x2=\"{x}\" y2=\"{y2}\" stroke=\"#6688cc\" stroke-width=\"2\" opacity=\"0.6\"/>\n"
        ));
        let y = y_of(y_val);
        let marker = if pt.failures == 0 { "#cc3333" } else { "#224488" };
        svg.push_str(&format!("<circle cx=\"{x}\" cy=\"{y}\" r=\"4\" fill=\"{marker}\"/>\n"));
    }
    // Axis labels.
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">depolarizing probability p</text>\n",
        (ml + w - mr) / 2.0,
        h - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-size=\"13\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\">FER</text>\n",
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0
    ));
    svg.push_str("</svg>\n");
    svg
}
