use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::Serialize;

use madc::designs::{design_stats, load_design, validate_design, Design, DesignError, RawDesign};
use madc::engine::{smallest_valid_beta, split_factor, EngineError, SimConfig};
use madc::metrics::{ct_comparison, format_decimal, measured_loads, LoadReport};
use madc::mra::{build_mra_with, export_mra, mra_stats, validate_mra_with, MraError};
use madc::topology::{derive_topology, TopologyError};
use madc::{catalog, catalog_design, Exec};

use crate::{CompareArgs, Format, SimulateArgs};

/// Error paired with the process exit code it maps to.
pub struct CliError {
    pub code: u8,
    pub error: anyhow::Error,
}

impl CliError {
    fn failed(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: 1,
            error: error.into(),
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(error: E) -> Self {
        Self {
            code: 2,
            error: error.into(),
        }
    }
}

type CliResult = Result<(), CliError>;

fn print_json<T: Serialize>(value: &T) -> CliResult {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Catalog name first, then a path to a JSON design file.
fn resolve_design(source: &str) -> Result<Design, CliError> {
    if let Some(design) = catalog_design(source) {
        return Ok(design);
    }
    if !Path::new(source).exists() {
        let names: Vec<&str> = catalog().iter().map(|(n, _)| *n).collect();
        return Err(anyhow!(
            "unknown design {source:?}: not a file and not one of {}",
            names.join(", ")
        )
        .into());
    }
    load_design(source).map_err(|e| match e {
        DesignError::Invalid(_) => CliError::failed(anyhow!("{source}: {e}")),
        other => anyhow!("{source}: {other}").into(),
    })
}

pub fn design_validate(path: &Path, format: Format) -> CliResult {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let raw: RawDesign =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let report = validate_design(&raw);
    match format {
        Format::Json => print_json(&report)?,
        Format::Text if report.valid => println!("valid"),
        Format::Text => {
            for v in &report.violations {
                println!("{v}");
            }
        }
    }
    if report.valid {
        Ok(())
    } else {
        Err(CliError::failed(anyhow!(
            "{} is not a valid design ({} violations)",
            path.display(),
            report.violations.len()
        )))
    }
}

#[derive(Serialize)]
struct CatalogEntry {
    name: &'static str,
    label: String,
    num_points: usize,
    t: usize,
    alpha: usize,
    m: usize,
    num_blocks: usize,
    replication: usize,
}

pub fn design_catalog(format: Format) -> CliResult {
    let mut entries = Vec::new();
    for (name, design) in catalog() {
        let stats = design_stats(&design)?;
        entries.push(CatalogEntry {
            name,
            label: design.label(),
            num_points: design.num_points(),
            t: design.t(),
            alpha: design.alpha(),
            m: design.m(),
            num_blocks: stats.num_blocks,
            replication: stats.replication,
        });
    }
    match format {
        Format::Json => print_json(&entries)?,
        Format::Text => {
            for e in &entries {
                println!(
                    "{:<10} {:<12} blocks={:<3} replication={}",
                    e.name, e.label, e.num_blocks, e.replication
                );
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct MraSummary {
    #[serde(rename = "F")]
    f: usize,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "S")]
    s: usize,
    g: String,
    is_mra: bool,
    missing_ranks: Vec<u64>,
    stars_per_column: usize,
}

pub fn mra_build(source: &str, out: Option<&Path>, format: Format, exec: Exec) -> CliResult {
    let design = resolve_design(source)?;
    let mra = build_mra_with(&design, exec).map_err(|e| match e {
        MraError::UnsupportedDesign(_) | MraError::Parameters { .. } => CliError::failed(e),
        other => other.into(),
    })?;
    let report = validate_mra_with(mra.grid(), exec);
    let stats = mra_stats(&mra).map_err(CliError::failed)?;
    let line = format!(
        "F={} K={} S={} g={}",
        mra.grid().rows(),
        mra.grid().cols(),
        report.s,
        report.g
    );

    match out {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            export_mra(&mra, &mut w)?;
            w.flush()?;
            match format {
                Format::Text => println!("{line}"),
                Format::Json => print_json(&MraSummary {
                    f: mra.grid().rows(),
                    k: mra.grid().cols(),
                    s: report.s,
                    g: report.g.to_string(),
                    is_mra: report.is_mra,
                    missing_ranks: stats.missing_ranks.iter().copied().collect(),
                    stars_per_column: design.alpha(),
                })?,
            }
        }
        None => export_mra(&mra, io::stdout().lock())?,
    }
    eprintln!("{line}");

    if report.is_mra && report.g.g() == Some(design.t() + 1) {
        Ok(())
    } else {
        Err(CliError::failed(anyhow!(
            "built array failed validation: {} violations, g = {}",
            report.violations.len(),
            report.g
        )))
    }
}

#[derive(Serialize)]
struct SimulationReport {
    design: String,
    verdict: &'static str,
    seed: u64,
    beta_requested: usize,
    outputs_match_oracle: bool,
    mismatched_reducers: Vec<String>,
    symbols_per_sender: Vec<usize>,
    sub_packet_bits: u64,
    loads: LoadReport,
}

fn engine_error(e: EngineError) -> CliError {
    match e {
        EngineError::Config(_) | EngineError::Topology(TopologyError::ZeroParameter(_)) => e.into(),
        other => CliError::failed(other),
    }
}

pub fn simulate(args: &SimulateArgs, format: Format, exec: Exec) -> CliResult {
    let design = resolve_design(&args.design)?;
    let topology = derive_topology(&design, args.eta1, args.eta2)
        .map_err(|e| engine_error(EngineError::Topology(e)))?;
    let beta = if args.strict_beta {
        args.beta
    } else {
        smallest_valid_beta(&topology, args.beta)
    };
    let config = SimConfig::new(beta, args.seed).with_exec(exec);
    config.validate(&topology).map_err(engine_error)?;
    let run = madc::simulate(&design, args.eta1, args.eta2, &config).map_err(engine_error)?;
    let loads = measured_loads(&run.transcript, &run.topology, &config)?;

    if let Some(path) = &args.dump_transcript {
        write_json(path, &run.transcript.dump())?;
    }
    if let Some(path) = &args.dump_topology {
        write_json(path, &run.topology.summary())?;
    }

    let matches = run.outputs_match_oracle();
    let ok = matches && loads.measured_matches_theory();
    let sub_packet_bits = (args.eta1 * args.eta2 * beta / split_factor(&topology)) as u64;
    let report = SimulationReport {
        design: design.label(),
        verdict: if ok { "ok" } else { "failed" },
        seed: args.seed,
        beta_requested: args.beta,
        outputs_match_oracle: matches,
        mismatched_reducers: run
            .mismatched_reducers()
            .iter()
            .map(ToString::to_string)
            .collect(),
        symbols_per_sender: (0..topology.num_reducers())
            .map(|k| run.transcript.symbols_from(k).count())
            .collect(),
        sub_packet_bits,
        loads,
    };
    match format {
        Format::Json => print_json(&report)?,
        Format::Text => print!("{}", simulation_text(&report)),
    }
    if ok {
        Ok(())
    } else {
        Err(CliError::failed(anyhow!(
            "verification failed: oracle match {matches}, measured load {} vs theoretical {}",
            fraction(&report.loads.measured_comm_load.0),
            fraction(&report.loads.theoretical_comm_load.0)
        )))
    }
}

fn fraction(r: &madc::metrics::Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn simulation_text(r: &SimulationReport) -> String {
    let p = &r.loads.parameters;
    let per_sender = match (
        r.symbols_per_sender.iter().min(),
        r.symbols_per_sender.iter().max(),
    ) {
        (Some(lo), Some(hi)) if lo == hi => format!("{lo} per sender"),
        (Some(lo), Some(hi)) => format!("{lo}..{hi} per sender"),
        _ => "none".into(),
    };
    let with_decimal =
        |x: &madc::metrics::Rational| format!("{} ({})", fraction(x), format_decimal(*x, 2));
    let rows = [
        ("design", r.design.clone()),
        (
            "topology",
            format!(
                "Λ={} K={} N={} Q={} η1={} η2={}",
                p.num_points, p.num_reducers, p.num_files, p.num_functions, p.eta1, p.eta2
            ),
        ),
        (
            "β",
            format!("{} bits (requested {})", p.beta, r.beta_requested),
        ),
        (
            "symbols",
            format!(
                "{} ({per_sender}), {} bits each, {} bits total",
                r.loads.num_symbols, r.sub_packet_bits, r.loads.total_bits
            ),
        ),
        ("r", fraction(&r.loads.computation_load.0)),
        ("L measured", with_decimal(&r.loads.measured_comm_load.0)),
        ("L theory", with_decimal(&r.loads.theoretical_comm_load.0)),
        ("L uncoded", with_decimal(&r.loads.uncoded_comm_load.0)),
        ("gain", fraction(&r.loads.gain_factor.0)),
        (
            "oracle",
            if r.outputs_match_oracle {
                "all reducers match".to_string()
            } else {
                format!("mismatch at {}", r.mismatched_reducers.join(", "))
            },
        ),
        ("verdict", r.verdict.to_uppercase()),
    ];
    rows.iter().map(|(k, v)| format!("{k:<11} {v}\n")).collect()
}

#[derive(Serialize)]
struct CompareRow<'a> {
    parameter: &'a str,
    t_design: &'a str,
    ct: &'a str,
}

#[derive(Serialize)]
struct CompareReport<'a> {
    #[serde(flatten)]
    comparison: &'a madc::metrics::CtComparison,
    rows: Vec<CompareRow<'a>>,
}

pub fn compare(args: &CompareArgs, format: Format) -> CliResult {
    let cmp = ct_comparison(args.lambda, args.alpha, args.t)?;
    match format {
        Format::Text => print!("{}", cmp.render_text()),
        Format::Json => {
            let rows = cmp.rows();
            print_json(&CompareReport {
                comparison: &cmp,
                rows: rows
                    .iter()
                    .map(|(p, a, b)| CompareRow {
                        parameter: p,
                        t_design: a,
                        ct: b,
                    })
                    .collect(),
            })?
        }
    }
    Ok(())
}
