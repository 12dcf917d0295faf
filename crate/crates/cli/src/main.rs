//! Command line front end: load metric definition files, evaluate invariant
//! records, run the genericity battery and vacuum checks, build and compare
//! invariant signatures, and verify the built-in identity suite.
//!
//! Exit codes are a stable machine interface: 0 success (or Equivalent),
//! 1 Inequivalent (or failed verification), 2 Inconclusive, 3 usage and file
//! errors, 4 evaluation and domain errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kinv_core::catalog;
use kinv_core::equivalence::{build_signature, compare, EquivalenceConfig, Signature, Verdict};
use kinv_core::error::Error;
use kinv_core::genericity::{genericity_report, GenericityConfig};
use kinv_core::identities;
use kinv_core::invariants::{evaluate_record, BasicInvariant, InvariantRecord, PointGeometry};
use kinv_core::jsonfmt;
use kinv_core::metric::{DomainBox, MetricDefinition};
use kinv_core::vacuum;

#[derive(Parser)]
#[command(
    name = "kinv",
    about = "Scalar differential invariants and local-isometry comparison \
             for 4D metrics with two commuting, orthogonally transitive \
             Killing fields",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Emit machine-readable JSON (results to stdout, diagnostics to stderr)
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for grid and signature computations
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the invariant record at a point or over a grid
    Invariants {
        metric: PathBuf,
        /// Evaluation point "t1,t2"
        #[arg(long)]
        at: Option<String>,
        /// Grid spec "N" or "N1xN2" over the domain box
        #[arg(long)]
        grid: Option<String>,
        /// Domain box "t1min,t1max,t2min,t2max" (defaults to the file's)
        #[arg(long = "box")]
        domain: Option<String>,
        /// Write output to a file instead of stdout
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run the genericity battery over a domain box
    Genericity {
        metric: PathBuf,
        #[arg(long = "box")]
        domain: Option<String>,
        /// Also check the vacuum-only condition with this constant
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Check the Einstein vacuum equations and the vacuum relations
    VacuumCheck {
        metric: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long = "box")]
        domain: Option<String>,
        /// Grid spec "N" or "N1xN2"
        #[arg(long, default_value = "8")]
        grid: String,
    },
    /// Build the invariant signature over a domain box
    Signature {
        metric: PathBuf,
        #[arg(long = "box")]
        domain: Option<String>,
        /// Chart pair "p,q" from C_rho, C_chi, Q_chi, Q_gamma
        #[arg(long)]
        chart: Option<String>,
        /// Output signature file
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Compare a stored signature against another metric
    Compare {
        signature: PathBuf,
        metric: PathBuf,
        #[arg(long = "box")]
        domain: Option<String>,
    },
    /// Run the built-in identity suite on catalog metrics
    VerifyPaper {
        /// Restrict to one catalog entry
        #[arg(long)]
        entry: Option<String>,
    },
    /// Manage built-in metric presets
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    /// List preset names and facts
    List,
    /// Print a preset as a metric definition file
    Export {
        name: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    // die quietly when a pipe consumer stops reading, like any line tool
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap would exit with code 2, which is reserved for Inconclusive
            let _ = e.print();
            return ExitCode::from(3);
        }
    };
    let json = cli.json;
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            report_error(&e, json);
            ExitCode::from(error_code(&e))
        }
    }
}

fn report_error(e: &Error, json: bool) {
    if json {
        let payload = serde_json::json!({ "error": e.to_string() });
        eprintln!("{payload}");
    } else {
        eprintln!("error: {e}");
    }
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_)
        | Error::MetricFile(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::SignatureFile(_) => 3,
        _ => 4,
    }
}

fn load_metric(path: &PathBuf) -> Result<MetricDefinition, Error> {
    let text = fs::read_to_string(path)?;
    Ok(MetricDefinition::parse_file(&text)?)
}

fn parse_point(s: &str) -> Result<[f64; 2], Error> {
    let parts: Vec<&str> = s.split(',').collect();
    let bad = || Error::SignatureFile(format!("expected \"t1,t2\", got `{s}`"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let a = parts[0].trim().parse().map_err(|_| bad())?;
    let b = parts[1].trim().parse().map_err(|_| bad())?;
    Ok([a, b])
}

fn parse_box(s: &str) -> Result<DomainBox, Error> {
    let parts: Vec<&str> = s.split(',').collect();
    let bad = || {
        Error::SignatureFile(format!(
            "expected \"t1min,t1max,t2min,t2max\", got `{s}`"
        ))
    };
    if parts.len() != 4 {
        return Err(bad());
    }
    let mut v = [0.0; 4];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p.trim().parse().map_err(|_| bad())?;
    }
    if v[0] >= v[1] || v[2] >= v[3] {
        return Err(bad());
    }
    Ok(DomainBox::new([v[0], v[1]], [v[2], v[3]]))
}

fn parse_grid(s: &str) -> Result<(usize, usize), Error> {
    let bad = || Error::SignatureFile(format!("expected grid \"N\" or \"N1xN2\", got `{s}`"));
    if let Some((a, b)) = s.split_once('x') {
        let n1 = a.trim().parse().map_err(|_| bad())?;
        let n2 = b.trim().parse().map_err(|_| bad())?;
        if n1 == 0 || n2 == 0 {
            return Err(bad());
        }
        Ok((n1, n2))
    } else {
        let n: usize = s.trim().parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        Ok((n, n))
    }
}

fn parse_chart(s: &str) -> Result<(BasicInvariant, BasicInvariant), Error> {
    let bad = || {
        Error::SignatureFile(format!(
            "expected chart \"p,q\" with names among C_rho, C_chi, Q_chi, Q_gamma, got `{s}`"
        ))
    };
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let p = BasicInvariant::from_name(a.trim()).ok_or_else(bad)?;
    let q = BasicInvariant::from_name(b.trim()).ok_or_else(bad)?;
    Ok((p, q))
}

fn effective_box(def: &MetricDefinition, spec: &Option<String>) -> Result<DomainBox, Error> {
    match spec {
        Some(s) => parse_box(s),
        None => Ok(def.domain),
    }
}

fn print_record_human(rec: &InvariantRecord) {
    println!("point         t1 = {}, t2 = {}", rec.t1, rec.t2);
    println!("C_rho    = {:+.12e}", rec.c_rho);
    println!("C_chi    = {:+.12e}", rec.c_chi);
    println!("Q_chi    = {:+.12e}", rec.q_chi);
    println!("Q_gamma  = {:+.12e}", rec.q_gamma);
    println!("C_gamma  = {:+.12e}", rec.c_gamma);
    println!("C_nu     = {:+.12e}", rec.c_nu);
    println!("R2       = {:+.12e}", rec.r2);
    println!("Rfull    = {:+.12e}", rec.r_full);
    if let (Some(re), Some(im)) = (rec.re_psi2, rec.im_psi2) {
        println!("RePsi2   = {:+.12e}", re);
        println!("ImPsi2   = {:+.12e}", im);
    }
    println!("X        = ({:+.12e}, {:+.12e})", rec.x_frame[0], rec.x_frame[1]);
    println!("Y        = ({:+.12e}, {:+.12e})", rec.y_frame[0], rec.y_frame[1]);
    println!("XC_rho   = {:+.12e}   YC_rho   = {:+.12e}", rec.xc_rho, rec.yc_rho);
    println!("XC_chi   = {:+.12e}   YC_chi   = {:+.12e}", rec.xc_chi, rec.yc_chi);
    println!("XQ_chi   = {:+.12e}   YQ_chi   = {:+.12e}", rec.xq_chi, rec.yq_chi);
    println!("XQ_gamma = {:+.12e}   YQ_gamma = {:+.12e}", rec.xq_gamma, rec.yq_gamma);
}

fn emit(text: String, out: &Option<PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => {
            fs::write(path, text)?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Error> {
    let threads = cli.threads.max(1);
    match cli.command {
        Command::Invariants { metric, at, grid, domain, out } => {
            let def = load_metric(&metric)?;
            let records: Vec<InvariantRecord> = match (&at, &grid) {
                (Some(point), _) => vec![evaluate_record(&def, parse_point(point)?)?],
                (None, Some(spec)) => {
                    let (n1, n2) = parse_grid(spec)?;
                    let bx = effective_box(&def, &domain)?;
                    let points = bx.grid(n1, n2);
                    points
                        .iter()
                        .map(|&pt| evaluate_record(&def, pt))
                        .collect::<Result<Vec<_>, _>>()?
                }
                (None, None) => {
                    return Err(Error::SignatureFile(
                        "pass --at t1,t2 or --grid N".into(),
                    ))
                }
            };
            if cli.json || out.is_some() {
                let text = if records.len() == 1 {
                    jsonfmt::to_string(&records[0])?
                } else {
                    jsonfmt::to_string(&records)?
                };
                emit(text, &out)?;
            } else {
                for (i, rec) in records.iter().enumerate() {
                    if i > 0 {
                        println!();
                    }
                    print_record_human(rec);
                }
            }
            Ok(0)
        }

        Command::Genericity { metric, domain, lambda } => {
            let def = load_metric(&metric)?;
            let bx = effective_box(&def, &domain)?;
            let report = genericity_report(&def, &bx, lambda, &GenericityConfig::default());
            if cli.json {
                println!("{}", jsonfmt::to_string(&report)?);
            } else {
                println!("det_g_ok        = {}", report.det_g_ok);
                println!("det_h_ok        = {}", report.det_h_ok);
                println!("c_rho_nonzero   = {}", report.c_rho_nonzero);
                println!("independence_ok = {}", report.independence_ok);
                println!("killing_dim     = {}", report.killing_dim);
                if let Some(i4) = report.i4_nonzero {
                    println!("i4_nonzero      = {i4}");
                }
                if let Some((p, q)) = report.chosen_pair {
                    println!("chosen chart    = ({p}, {q})");
                }
                for pair in &report.pairs {
                    println!(
                        "pair ({}, {}): median score {:.3e}, pass fraction {:.2}, independent {}",
                        pair.p, pair.q, pair.median_score, pair.pass_fraction, pair.independent
                    );
                }
                for d in &report.diagnostics {
                    println!("note: {d}");
                }
            }
            Ok(0)
        }

        Command::VacuumCheck { metric, lambda, domain, grid } => {
            let def = load_metric(&metric)?;
            let bx = effective_box(&def, &domain)?;
            let (n1, n2) = parse_grid(&grid)?;
            let points = bx.grid(n1, n2);
            let mut einstein: f64 = 0.0;
            let mut relations = [0.0f64; 4];
            for &pt in &points {
                einstein = einstein.max(vacuum::vacuum_residual(&def, lambda, pt)?);
                let rec = evaluate_record(&def, pt)?;
                let eps_g = PointGeometry::new(&def, pt, 1)?.g.eps;
                let r = vacuum::vacuum_relations(&rec, eps_g, lambda);
                for (slot, v) in relations.iter_mut().zip(r) {
                    *slot = slot.max(v);
                }
            }
            let center = bx.center();
            let rec = evaluate_record(&def, center)?;
            let eps_g = PointGeometry::new(&def, center, 1)?.g.eps;
            let quantities = vacuum::VacuumQuantities::from_record(&rec, eps_g, lambda);
            let is_vacuum = einstein <= 1e-7;
            #[derive(serde::Serialize)]
            struct VacuumReport {
                einstein_residual: f64,
                relation_residuals: [f64; 4],
                quantities: vacuum::VacuumQuantities,
                verdict: &'static str,
                samples: usize,
            }
            let report = VacuumReport {
                einstein_residual: einstein,
                relation_residuals: relations,
                quantities,
                verdict: if is_vacuum { "vacuum" } else { "not-vacuum" },
                samples: points.len(),
            };
            if cli.json {
                println!("{}", jsonfmt::to_string(&report)?);
            } else {
                println!("einstein residual   = {einstein:.3e} over {} samples", points.len());
                for (k, r) in relations.iter().enumerate() {
                    println!("relation {} residual = {r:.3e}", k + 1);
                }
                println!(
                    "I1^2 = {:.6e}  I2 = {:.6e}  I3 = {:.6e}  I4 = {:.6e}",
                    quantities.i1_squared, quantities.i2, quantities.i3, quantities.i4
                );
                println!("verdict: {}", report.verdict);
            }
            Ok(if is_vacuum { 0 } else { 1 })
        }

        Command::Signature { metric, domain, chart, out } => {
            let def = load_metric(&metric)?;
            let bx = effective_box(&def, &domain)?;
            let chart = chart.as_deref().map(parse_chart).transpose()?;
            let config = EquivalenceConfig { threads, ..EquivalenceConfig::default() };
            let sig = build_signature(&def, &bx, chart, &config)?;
            fs::write(&out, sig.to_json()?)?;
            if cli.json {
                let summary = serde_json::json!({
                    "samples": sig.samples.len(),
                    "chart": [sig.chart.0.name(), sig.chart.1.name()],
                    "file": out.display().to_string(),
                });
                println!("{summary}");
            } else {
                println!(
                    "signature with {} samples over chart ({}, {}) written to {}",
                    sig.samples.len(),
                    sig.chart.0,
                    sig.chart.1,
                    out.display()
                );
            }
            Ok(0)
        }

        Command::Compare { signature, metric, domain } => {
            let sig = Signature::from_json(&fs::read_to_string(&signature)?)?;
            let def = load_metric(&metric)?;
            let bx = effective_box(&def, &domain)?;
            let config = EquivalenceConfig { threads, ..EquivalenceConfig::default() };
            let verdict = compare(&sig, &def, &bx, &config)?;
            if cli.json {
                println!("{}", jsonfmt::to_string(&verdict)?);
            } else {
                match &verdict {
                    Verdict::Equivalent { samples, locatable, matched, y_flipped } => {
                        println!(
                            "Equivalent: {matched}/{locatable} locatable samples match \
                             ({samples} total{})",
                            if *y_flipped { ", with the Y orientation flipped" } else { "" }
                        );
                    }
                    Verdict::Inequivalent { witness } => {
                        println!(
                            "Inequivalent: {} differs at chart point (p, q) = ({:.9e}, {:.9e})",
                            witness.invariant, witness.p, witness.q
                        );
                        println!(
                            "  signature value {:+.12e} at ({}, {}); this metric {:+.12e} at \
                             ({}, {})",
                            witness.value_a,
                            witness.point_a[0],
                            witness.point_a[1],
                            witness.value_b,
                            witness.point_b[0],
                            witness.point_b[1]
                        );
                    }
                    Verdict::Inconclusive { reason } => println!("Inconclusive: {reason}"),
                }
            }
            Ok(verdict.exit_code() as u8)
        }

        Command::VerifyPaper { entry } => {
            if let Some(name) = &entry {
                if catalog::find(name).is_none() {
                    return Err(Error::SignatureFile(format!(
                        "no catalog entry named `{name}`"
                    )));
                }
            }
            let checks = identities::run_all(entry.as_deref());
            let mut all_pass = true;
            if cli.json {
                println!("{}", jsonfmt::to_string(&checks)?);
                all_pass = checks.iter().all(|c| c.pass);
            } else {
                for c in &checks {
                    all_pass &= c.pass;
                    println!(
                        "{} {:<22} {:<16} residual {:.3e} (tol {:.1e}){}",
                        if c.pass { "PASS" } else { "FAIL" },
                        c.name,
                        c.entry,
                        c.max_residual,
                        c.tolerance,
                        if c.detail.is_empty() {
                            String::new()
                        } else {
                            format!("  [{}]", c.detail)
                        }
                    );
                }
            }
            Ok(if all_pass { 0 } else { 1 })
        }

        Command::Catalog { action } => match action {
            CatalogAction::List => {
                if cli.json {
                    let rows: Vec<serde_json::Value> = catalog::all()
                        .iter()
                        .map(|e| {
                            serde_json::json!({
                                "name": e.def.name,
                                "vacuum": e.facts.vacuum,
                                "lambda": e.facts.lambda,
                                "lorentzian": e.facts.lorentzian,
                                "killing_dim": e.facts.killing_dim,
                            })
                        })
                        .collect();
                    println!("{}", serde_json::Value::Array(rows));
                } else {
                    for e in catalog::all() {
                        println!(
                            "{:<16} vacuum={} lambda={} lorentzian={} killing_dim={}",
                            e.def.name,
                            e.facts.vacuum,
                            e.facts.lambda,
                            e.facts.lorentzian,
                            e.facts.killing_dim
                        );
                    }
                }
                Ok(0)
            }
            CatalogAction::Export { name, out } => match catalog::find(&name) {
                Some(entry) => {
                    emit(entry.def.to_file_string(), &out)?;
                    Ok(0)
                }
                None => Err(Error::SignatureFile(format!("no catalog entry named `{name}`"))),
            },
        },
    }
}
