//! Command-line surface: construction, analysis, lifting, verification, and
//! simulation as one verb per pipeline stage.

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use qhgp::basegen::{self, BaseMatrix, CorankTarget};
use qhgp::decoder::DecoderConfig;
use qhgp::gf2;
use qhgp::hgp::{self, CssCode, Origin, Regularity};
use qhgp::{lift, montecarlo, tanner};

#[derive(Parser)]
#[command(
    name = "qhgp",
    about = "Square-base hypergraph-product CSS LDPC codes: construct, lift, certify, decode",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a base matrix (fixture or randomized search) and certify it.
    Construct(ConstructArgs),
    /// Certify a base matrix: weights, overlaps, girth, rank, connectivity.
    Analyze(AnalyzeArgs),
    /// Build the hypergraph product of a base matrix and report parameters.
    Hgp(HgpArgs),
    /// Search a feasible CPM lift satisfying the cycle constraints.
    LiftSearch(LiftSearchArgs),
    /// Random feasible walk from an existing shift assignment.
    LiftWalk(LiftWalkArgs),
    /// Build lifted matrices from shift tables and audit them.
    LiftBuild(LiftBuildArgs),
    /// Tanner-graph and CSS-orthogonality verification of a check-matrix pair.
    Verify(VerifyArgs),
    /// Monte Carlo frame-error-rate simulation under depolarizing noise.
    DecodeSim(DecodeSimArgs),
    /// Render the FER plot from an existing results CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct OutDir {
    /// Output directory (default: $QHGP_OUT or the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutDir {
    fn resolve(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os("QHGP_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

#[derive(Args)]
struct ConstructArgs {
    /// Named fixture: fano|b7, pg23|b13, w2|b15, b30, w3|b40.
    #[arg(long, conflicts_with = "search")]
    base: Option<String>,
    /// Randomized search instead of a fixture.
    #[arg(long, requires = "s", requires = "w")]
    search: bool,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    w: Option<usize>,
    /// Exact corank target for the search.
    #[arg(long)]
    corank: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Search move budget.
    #[arg(long, default_value_t = 2_000_000)]
    budget: u64,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Named fixture, or use --matrix.
    #[arg(long)]
    base: Option<String>,
    /// Matrix rows JSON file.
    #[arg(long, conflicts_with = "base")]
    matrix: Option<PathBuf>,
    /// Target regular weight for the report.
    #[arg(long, default_value_t = 3)]
    w: usize,
}

#[derive(Args)]
struct HgpArgs {
    #[arg(long)]
    base: String,
    #[command(flatten)]
    out: OutDir,
    /// Also write hx/hz rows JSON files.
    #[arg(long)]
    emit_matrices: bool,
}

#[derive(Args)]
struct LiftSearchArgs {
    #[arg(long)]
    base: String,
    #[arg(long = "P")]
    p: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 2_000_000)]
    budget: u64,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
struct LiftWalkArgs {
    /// Base fixture; if omitted the base code is reconstructed from the
    /// shift-table domain (the tables' own row/column ordering).
    #[arg(long)]
    base: Option<String>,
    /// Shift table CSV for H_X.
    #[arg(long)]
    shifts_x: PathBuf,
    /// Shift table CSV for H_Z.
    #[arg(long)]
    shifts_z: PathBuf,
    #[arg(long = "P")]
    p: u64,
    #[arg(long, default_value_t = 642_001)]
    seed: u64,
    #[arg(long, default_value_t = 250)]
    accepts: u64,
    #[arg(long, default_value_t = 10_000)]
    proposals: u64,
    #[arg(long, default_value_t = 24)]
    seed_vars: usize,
    #[arg(long, default_value_t = 10)]
    radius: usize,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
struct LiftBuildArgs {
    /// Base fixture; if omitted the base code is reconstructed from the
    /// shift-table domain.
    #[arg(long)]
    base: Option<String>,
    #[arg(long)]
    shifts_x: PathBuf,
    #[arg(long)]
    shifts_z: PathBuf,
    #[arg(long = "P")]
    p: u64,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    hx: PathBuf,
    #[arg(long)]
    hz: PathBuf,
    /// Write the full report here (stdout shows the summary).
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
struct DecodeSimArgs {
    /// Base fixture to simulate the HGP of, or use --hx/--hz.
    #[arg(long)]
    base: Option<String>,
    #[arg(long, requires = "hz", conflicts_with = "base")]
    hx: Option<PathBuf>,
    #[arg(long)]
    hz: Option<PathBuf>,
    /// Depolarizing probability; repeatable.
    #[arg(long = "p", required = true)]
    p: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 100)]
    max_iterations: u32,
    /// Stop a point early once this many failures are seen (bounds runtime
    /// at high p; off for golden-replay runs).
    #[arg(long)]
    max_failures: Option<u64>,
    /// Write per-trial JSON-lines trace next to the results.
    #[arg(long)]
    trace: bool,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
struct ReportArgs {
    /// results.csv produced by decode-sim.
    #[arg(long)]
    results: PathBuf,
    #[command(flatten)]
    out: OutDir,
}

fn named_base(name: &str) -> Result<BaseMatrix, String> {
    match name.to_ascii_lowercase().as_str() {
        "fano" | "b7" => Ok(basegen::b7()),
        "pg23" | "pg2-3" | "b13" => Ok(basegen::b13()),
        "w2" | "b15" => Ok(basegen::b15()),
        "b30" => Ok(basegen::b30()),
        "w3" | "b40" => Ok(basegen::b40()),
        other => Err(format!(
            "unknown base '{other}' (expected fano|b7, pg23|b13, w2|b15, b30, w3|b40)"
        )),
    }
}

fn base_weight(b: &BaseMatrix) -> usize {
    b.matrix.row_weights().first().copied().unwrap_or(0)
}

fn write_base_artifacts(b: &BaseMatrix, report: &basegen::BaseReport, dir: &Path) -> qhgp::Result<()> {
    std::fs::create_dir_all(dir)?;
    gf2::save_rows_json(&b.matrix, &dir.join(format!("{}.json", b.label)))?;
    std::fs::write(dir.join(format!("{}.txt", b.label)), basegen::to_text_bitmap(&b.matrix))?;
    basegen::write_pbm(&b.matrix, &dir.join(format!("{}.pbm", b.label)))?;
    std::fs::write(
        dir.join(format!("{}_report.json", b.label)),
        serde_json::to_string_pretty(report)?,
    )?;
    Ok(())
}

fn params_row(p: &hgp::CodeParams) -> String {
    let d = p.d.map_or("unknown".to_string(), |d| d.to_string());
    let degrees = match &p.regularity {
        Regularity::Regular { dv, dc } => format!("({dv},{dc})"),
        Regularity::Irregular { .. } => "irregular".to_string(),
    };
    format!(
        "{}: s={} rho_B={} c_B={} n={} k={} d={} m={} rho={} degrees={}",
        p.base, p.s, p.rho_b, p.c_b, p.n, p.k, d, p.m_x, p.rho_x, degrees
    )
}

fn load_code(hx: &Path, hz: &Path) -> qhgp::Result<CssCode> {
    let hx = gf2::load_rows_json(hx)?;
    let hz = gf2::load_rows_json(hz)?;
    // Column counts may differ when inferred from bare arrays; align them.
    let n = hx.n_cols().max(hz.n_cols());
    let hx = qhgp::gf2::BitMatrix::from_rows(n, hx.rows().to_vec());
    let hz = qhgp::gf2::BitMatrix::from_rows(n, hz.rows().to_vec());
    CssCode::new(hx, hz, Origin::External)
}

fn run(cli: Cli) -> Result<i32, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Construct(a) => {
            let (base, search_stats) = if a.search {
                let target = a.corank.map_or(CorankTarget::Any, CorankTarget::Exact);
                let (b, stats) = basegen::search_regular_base(
                    a.s.expect("clap enforces --s"),
                    a.w.expect("clap enforces --w"),
                    target,
                    a.seed,
                    a.budget,
                )?;
                (b, Some(stats))
            } else {
                let name = a.base.as_deref().ok_or("one of --base or --search is required")?;
                (named_base(name)?, None)
            };
            let report = basegen::validate_base(&base, base_weight(&base));
            write_base_artifacts(&base, &report, &a.out.resolve())?;
            let mut out = serde_json::json!({ "label": base.label, "report": report });
            if let Some(stats) = search_stats {
                out["search"] = serde_json::to_value(stats)?;
            }
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(0)
        }
        Command::Analyze(a) => {
            let (base, w) = if let Some(name) = a.base.as_deref() {
                let b = named_base(name)?;
                let w = base_weight(&b);
                (b, w)
            } else {
                let path = a.matrix.as_deref().ok_or("one of --base or --matrix is required")?;
                let m = gf2::load_rows_json(path)?;
                let b = BaseMatrix {
                    matrix: m,
                    label: path.file_stem().map_or("matrix".into(), |s| s.to_string_lossy().into_owned()),
                    construction: basegen::Construction::Search { s: 0, w: a.w },
                };
                (b, a.w)
            };
            let report = basegen::validate_base(&base, w);
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(0)
        }
        Command::Hgp(a) => {
            let base = named_base(&a.base)?;
            let params = hgp::hgp_params(&base);
            let dir = a.out.resolve();
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join("params.json"), serde_json::to_string_pretty(&params)?)?;
            if a.emit_matrices {
                let code = hgp::build_hgp(&base);
                gf2::save_rows_json(&code.hx, &dir.join("Hx_rows.json"))?;
                gf2::save_rows_json(&code.hz, &dir.join("Hz_rows.json"))?;
                std::fs::write(
                    dir.join("code.json"),
                    serde_json::to_string_pretty(&serde_json::json!({
                        "n": code.n(), "m_x": code.m_x(), "m_z": code.m_z(),
                        "origin": code.origin,
                    }))?,
                )?;
            }
            println!("{}", params_row(&params));
            Ok(0)
        }
        Command::LiftSearch(a) => {
            let base = named_base(&a.base)?;
            let code = hgp::build_hgp(&base);
            let weights = lift::Weights::default();
            let (assignment, stats) = lift::find_feasible_lift(&code, a.p, a.seed, &weights, a.budget)?;
            let dir = a.out.resolve();
            std::fs::create_dir_all(&dir)?;
            lift::save_shift_tables(
                &assignment,
                &dir.join("shift_table_HX.csv"),
                &dir.join("shift_table_HZ.csv"),
            )?;
            let (_, _, census) = lift::constraint_census(&code)?;
            let lifted = lift::build_lifted_matrices(&code, &assignment)?;
            gf2::save_rows_json(&lifted.hx, &dir.join("Hx_rows_lift.json"))?;
            gf2::save_rows_json(&lifted.hz, &dir.join("Hz_rows_lift.json"))?;
            let audit = lift::audit_lift(&lifted);
            let audit_value = lift::audit_json(
                &audit,
                Some(&census),
                serde_json::to_value(&stats)?,
                "constructed_by_search_and_audited",
                &dir.display().to_string(),
            );
            std::fs::write(dir.join("audit.json"), serde_json::to_string_pretty(&audit_value)?)?;
            let solution = lift::solution_json(
                &code,
                &assignment,
                &weights,
                "weighted_local_search_over_orthogonality_kernel",
                serde_json::json!({ "seed": a.seed, "budget": a.budget }),
                serde_json::to_value(&stats)?,
            );
            std::fs::write(dir.join("solution.json"), serde_json::to_string_pretty(&solution)?)?;
            println!("{}", serde_json::to_string_pretty(&audit_value)?);
            Ok(0)
        }
        Command::LiftWalk(a) => {
            let start = lift::load_shift_tables(&a.shifts_x, &a.shifts_z, a.p)?;
            let code = match a.base.as_deref() {
                Some(name) => hgp::build_hgp(&named_base(name)?),
                None => lift::code_from_shift_domain(&start)?,
            };
            let (zero_eqs, kept, census) = lift::constraint_census(&code)?;
            let params = lift::WalkParams {
                seed_vars: a.seed_vars,
                radius: a.radius,
                target_accepts: a.accepts,
                max_proposals: a.proposals,
                seed: a.seed,
            };
            let (assignment, stats) = lift::feasible_random_walk(&start, &zero_eqs, &kept, &params)?;
            let dir = a.out.resolve();
            std::fs::create_dir_all(&dir)?;
            lift::save_shift_tables(
                &assignment,
                &dir.join("shift_table_HX.csv"),
                &dir.join("shift_table_HZ.csv"),
            )?;
            let lifted = lift::build_lifted_matrices(&code, &assignment)?;
            gf2::save_rows_json(&lifted.hx, &dir.join("Hx_rows_lift.json"))?;
            gf2::save_rows_json(&lifted.hz, &dir.join("Hz_rows_lift.json"))?;
            let audit = lift::audit_lift(&lifted);
            let audit_value = lift::audit_json(
                &audit,
                Some(&census),
                serde_json::to_value(&stats)?,
                "constructed_randomized_and_audited",
                &dir.display().to_string(),
            );
            std::fs::write(dir.join("audit.json"), serde_json::to_string_pretty(&audit_value)?)?;
            let solution = lift::solution_json(
                &code,
                &assignment,
                &lift::Weights::default(),
                "feasible_random_walk_in_orthogonality_kernel",
                serde_json::to_value(params)?,
                serde_json::to_value(&stats)?,
            );
            std::fs::write(dir.join("solution.json"), serde_json::to_string_pretty(&solution)?)?;
            println!("{}", serde_json::to_string_pretty(&audit_value)?);
            Ok(0)
        }
        Command::LiftBuild(a) => {
            let assignment = lift::load_shift_tables(&a.shifts_x, &a.shifts_z, a.p)?;
            let code = match a.base.as_deref() {
                Some(name) => hgp::build_hgp(&named_base(name)?),
                None => lift::code_from_shift_domain(&assignment)?,
            };
            let lifted = lift::build_lifted_matrices(&code, &assignment)?;
            let dir = a.out.resolve();
            std::fs::create_dir_all(&dir)?;
            gf2::save_rows_json(&lifted.hx, &dir.join("Hx_rows_lift.json"))?;
            gf2::save_rows_json(&lifted.hz, &dir.join("Hz_rows_lift.json"))?;
            let audit = lift::audit_lift(&lifted);
            let census = lift::constraint_census(&code).ok().map(|(_, _, c)| c);
            let audit_value = lift::audit_json(
                &audit,
                census.as_ref(),
                serde_json::json!({}),
                "built_from_shift_tables_and_audited",
                &dir.display().to_string(),
            );
            std::fs::write(dir.join("audit.json"), serde_json::to_string_pretty(&audit_value)?)?;
            println!("{}", serde_json::to_string_pretty(&audit_value)?);
            Ok(0)
        }
        Command::Verify(a) => {
            let code = load_code(&a.hx, &a.hz);
            // Verification must run even for a non-orthogonal pair, so load
            // the matrices directly on failure.
            let (hx, hz) = match &code {
                Ok(c) => (c.hx.clone(), c.hz.clone()),
                Err(_) => {
                    let hx = gf2::load_rows_json(&a.hx)?;
                    let hz = gf2::load_rows_json(&a.hz)?;
                    let n = hx.n_cols().max(hz.n_cols());
                    (
                        qhgp::gf2::BitMatrix::from_rows(n, hx.rows().to_vec()),
                        qhgp::gf2::BitMatrix::from_rows(n, hz.rows().to_vec()),
                    )
                }
            };
            let report = tanner::verify_report(&hx, &hz);
            let dir = a.out.resolve();
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join("tanner_verify.json"), serde_json::to_string_pretty(&report)?)?;
            println!("{}", serde_json::to_string_pretty(&report["summary"])?);
            let ok = report["summary"]["css_orthogonality_ok"].as_bool().unwrap_or(false);
            Ok(if ok { 0 } else { 3 })
        }
        Command::DecodeSim(a) => {
            let code = match (&a.base, &a.hx, &a.hz) {
                (Some(name), None, None) => hgp::build_hgp(&named_base(name)?),
                (None, Some(hx), Some(hz)) => load_code(hx, hz)?,
                _ => return Err("provide either --base or both --hx and --hz".into()),
            };
            let mut config = DecoderConfig::new(*a.p.first().expect("clap requires at least one --p"));
            config.max_iterations = a.max_iterations;
            let dir = a.out.resolve();
            std::fs::create_dir_all(&dir)?;
            let mut points = Vec::new();
            let mut trace_lines: Vec<String> = Vec::new();
            if a.trace {
                for (idx, &p) in a.p.iter().enumerate() {
                    config.p_channel = p;
                    let (point, records) = montecarlo::run_point_traced(
                        &code, p, a.trials, &config, a.seed, a.workers, idx as u64,
                    )?;
                    for r in records {
                        trace_lines.push(serde_json::to_string(&serde_json::json!({
                            "p": p, "trial": r.trial, "status": r.status,
                            "iterations": r.iterations, "osd_invoked": r.osd_invoked,
                        }))?);
                    }
                    points.push(point);
                }
            } else {
                let run_cfg = montecarlo::RunConfig {
                    p_grid: a.p.clone(),
                    trials_per_point: a.trials,
                    seed: a.seed,
                    workers: a.workers,
                    max_failures: a.max_failures,
                    decoder: config.clone(),
                };
                points = montecarlo::run_grid(&code, &run_cfg)?;
            }
            for point in &points {
                println!(
                    "p={} N={} f={} fer={} wilson=[{}, {}] mean_iters={:.2} (exact={}, degenerate={}, logical={}, mismatch={})",
                    point.p, point.trials, point.failures, point.fer,
                    point.wilson_lo, point.wilson_hi, point.mean_bp_iterations,
                    point.exact_successes, point.degenerate_successes,
                    point.logical_failures, point.syndrome_mismatches
                );
            }
            let code_id = match &code.origin {
                Origin::Hgp { base } => format!("hgp({base})"),
                Origin::Lifted { p, base } => format!("lifted(P={p}, {base})"),
                Origin::External => "external".to_string(),
            };
            montecarlo::emit_report(&points, &code_id, &config, a.seed, a.workers, &dir)?;
            if a.trace {
                std::fs::write(dir.join("trace.jsonl"), trace_lines.join("\n") + "\n")?;
            }
            Ok(0)
        }
        Command::Report(a) => {
            let text = std::fs::read_to_string(&a.results)?;
            let points = montecarlo::parse_results_csv(&text)?;
            let dir = a.out.resolve();
            std::fs::create_dir_all(&dir)?;
            let config = DecoderConfig::new(points.first().map_or(0.1, |p| p.p));
            montecarlo::emit_report(&points, "from-csv", &config, 0, 1, &dir)?;
            println!("wrote {}", dir.join("fer_plot.svg").display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let record = serde_json::json!({ "error": e.to_string() });
            eprintln!("{record}");
            ExitCode::from(1)
        }
    }
}
