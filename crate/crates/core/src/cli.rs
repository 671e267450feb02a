//! Command-line front end.
//!
//! Every command writes into one run directory and records what it read and
//! wrote in `manifest.json` (content hashes and parameters, no paths or
//! timestamps), so identical inputs give byte-identical trees.
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 missing input, 3 parse
//! error, 4 empty corpus, 5 no traces for a requested AS, 6 an analysis
//! failed (the remaining analyses are still written).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{
    collateral_csv, collateral_damage, cone_bypass, cone_bypass_csv, cost_estimate,
    frequency_vs_cone, largest_cones, DEFAULT_UNIT_COST_USD,
};
use crate::error::Error;
use crate::inference::{build_corpus, parse_paths, write_paths, PathCorpus};
use crate::ingest::{
    parse_alias_map, parse_censors, parse_countries, parse_p2a, parse_prefixes,
    parse_relationships, parse_rib, parse_traces, read_file, CountryMap, ParseStats,
};
use crate::placement::{
    cdf_csv, cdf_series_indexed, check_threshold, coverage_of, find_key_ases_indexed,
    rank_from_index, ranking_csv, PathIndex, DEFAULT_THRESHOLD,
};
use crate::routermap::{
    classify_routers, find_key_routers, placement_rollup, routers_csv, AsTraces, PrefixToAsMap,
};
use crate::synth::{generate, SynthConfig};
use crate::topology::{build_graph, RelationshipGraph};
use crate::types::{Asn, CountryCode};

pub const EXIT_INVALID: u8 = 1;
pub const EXIT_MISSING_INPUT: u8 = 2;
pub const EXIT_PARSE: u8 = 3;
pub const EXIT_EMPTY_CORPUS: u8 = 4;
pub const EXIT_NO_TRACES: u8 = 5;
pub const EXIT_ANALYSIS: u8 = 6;

const PATHS_FILE: &str = "paths.txt";
const MANIFEST: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(
    name = "decoymap",
    version,
    about = "AS path inference and decoy-router placement"
)]
pub struct Cli {
    #[command(flatten)]
    pub opts: Options,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    #[arg(long, global = true)]
    pub rib: Option<PathBuf>,
    #[arg(long, global = true)]
    pub rels: Option<PathBuf>,
    #[arg(long, global = true)]
    pub prefixes: Option<PathBuf>,
    #[arg(long, global = true)]
    pub countries: Option<PathBuf>,
    #[arg(long, global = true)]
    pub censors: Option<PathBuf>,
    #[arg(long, global = true)]
    pub traces: Option<PathBuf>,
    #[arg(long, global = true)]
    pub aliases: Option<PathBuf>,
    #[arg(long, global = true)]
    pub p2a: Option<PathBuf>,
    /// Path corpus to read; defaults to `paths.txt` in the output directory.
    #[arg(long, global = true)]
    pub paths: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threshold_as: Option<f64>,
    #[arg(long, global = true)]
    pub threshold_router: Option<f64>,
    #[arg(long, global = true)]
    pub unit_cost: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// `key=value` file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Infer one path per (AS, prefix) from RIB paths and relationships.
    Infer,
    /// Rank ASes by path frequency and pick key ASes.
    Place,
    /// Classify routers and pick key routers inside ASes.
    Routers {
        /// AS to analyse; repeatable. Defaults to the ASes in placement.json.
        #[arg(long = "asn")]
        asns: Vec<Asn>,
    },
    /// Collateral damage, cone bypass, Spearman and cost.
    Analyze,
    /// Write a seeded synthetic input bundle.
    Synth {
        #[arg(long, default_value_t = 200)]
        ases: usize,
        #[arg(long = "prefix-count", default_value_t = 10)]
        prefix_count: usize,
        #[arg(long, default_value_t = 15)]
        vantage_points: usize,
        #[arg(long = "trace-count", default_value_t = 2000)]
        trace_count: usize,
    },
    /// Aggregate the run directory into summary.json.
    Report,
}

/// Options after merging the config file; flags win.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub rib: Option<PathBuf>,
    pub rels: Option<PathBuf>,
    pub prefixes: Option<PathBuf>,
    pub countries: Option<PathBuf>,
    pub censors: Option<PathBuf>,
    pub traces: Option<PathBuf>,
    pub aliases: Option<PathBuf>,
    pub p2a: Option<PathBuf>,
    pub paths: Option<PathBuf>,
    pub threshold_as: f64,
    pub threshold_router: f64,
    pub unit_cost_usd: u64,
    pub out: PathBuf,
    pub seed: u64,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } => EXIT_MISSING_INPUT,
            Error::ConflictingRelationship { .. }
            | Error::AliasOverlap { .. }
            | Error::ConflictingPrefixOrigin { .. }
            | Error::Malformed { .. } => EXIT_PARSE,
            Error::EmptyCorpus => EXIT_EMPTY_CORPUS,
            Error::NoTraces(_) => EXIT_NO_TRACES,
            Error::InvalidThreshold(_) | Error::Invalid(_) => EXIT_INVALID,
            _ => EXIT_ANALYSIS,
        };
        CliError::new(code, e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn parse_config_file(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = read_file(path)?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Malformed {
                line: i + 1,
                message: format!("expected key=value in {}", path.display()),
            }
            .into());
        };
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

impl RunConfig {
    pub fn resolve(opts: &Options) -> CliResult<Self> {
        let mut file = match &opts.config {
            Some(p) => parse_config_file(p)?,
            None => BTreeMap::new(),
        };
        let base = opts
            .config
            .as_deref()
            .and_then(Path::parent)
            .map(Path::to_path_buf)
            .unwrap_or_default();
        let mut path = |flag: &Option<PathBuf>, key: &str| -> Option<PathBuf> {
            let from_file = file.remove(key).map(|v| base.join(v));
            flag.clone().or(from_file)
        };
        let rib = path(&opts.rib, "rib");
        let rels = path(&opts.rels, "rels");
        let prefixes = path(&opts.prefixes, "prefixes");
        let countries = path(&opts.countries, "countries");
        let censors = path(&opts.censors, "censors");
        let traces = path(&opts.traces, "traces");
        let aliases = path(&opts.aliases, "aliases");
        let p2a = path(&opts.p2a, "p2a");
        let paths = path(&opts.paths, "paths");
        let out = path(&opts.out, "out").unwrap_or_else(|| PathBuf::from("out"));

        fn number<T: std::str::FromStr>(
            flag: Option<T>,
            file: &mut BTreeMap<String, String>,
            key: &str,
            default: T,
        ) -> CliResult<T> {
            if let Some(v) = flag {
                file.remove(key);
                return Ok(v);
            }
            match file.remove(key) {
                None => Ok(default),
                Some(s) => s
                    .parse()
                    .map_err(|_| CliError::new(EXIT_INVALID, format!("bad value for {key}: {s}"))),
            }
        }
        let threshold_as = number(
            opts.threshold_as,
            &mut file,
            "threshold_as",
            DEFAULT_THRESHOLD,
        )?;
        let threshold_router = number(
            opts.threshold_router,
            &mut file,
            "threshold_router",
            DEFAULT_THRESHOLD,
        )?;
        let unit_cost_usd = number(
            opts.unit_cost,
            &mut file,
            "unit_cost",
            DEFAULT_UNIT_COST_USD,
        )?;
        let seed = number(opts.seed, &mut file, "seed", 1)?;
        if let Some(key) = file.keys().next() {
            return Err(CliError::new(
                EXIT_INVALID,
                format!("unknown config key: {key}"),
            ));
        }
        check_threshold(threshold_as)?;
        check_threshold(threshold_router)?;
        Ok(RunConfig {
            rib,
            rels,
            prefixes,
            countries,
            censors,
            traces,
            aliases,
            p2a,
            paths,
            threshold_as,
            threshold_router,
            unit_cost_usd,
            out,
            seed,
        })
    }

    fn paths_file(&self) -> PathBuf {
        self.paths
            .clone()
            .unwrap_or_else(|| self.out.join(PATHS_FILE))
    }
}

fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Tracks inputs read and outputs written by one command.
struct Run {
    out: PathBuf,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl Run {
    fn new(out: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        Ok(Run {
            out: out.to_path_buf(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    fn read(&mut self, role: &str, path: Option<&Path>) -> CliResult<String> {
        let path = path.ok_or_else(|| {
            CliError::new(
                EXIT_MISSING_INPUT,
                format!("missing input: --{role} is required"),
            )
        })?;
        if !path.is_file() {
            return Err(CliError::new(
                EXIT_MISSING_INPUT,
                format!("missing input: {} ({role}) not found", path.display()),
            ));
        }
        let text = read_file(path)?;
        self.inputs
            .insert(role.to_string(), sha256_hex(text.as_bytes()));
        Ok(text)
    }

    fn read_optional(&mut self, role: &str, path: Option<&Path>) -> CliResult<Option<String>> {
        match path {
            Some(p) => self.read(role, Some(p)).map(Some),
            None => Ok(None),
        }
    }

    fn write(&mut self, name: &str, text: &str) -> CliResult<()> {
        let path = self.out.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        self.outputs
            .insert(name.to_string(), sha256_hex(text.as_bytes()));
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::new(EXIT_INVALID, e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    /// Records this command in the manifest, replacing its previous entry.
    fn finish(self, command: &str, params: Value) -> CliResult<()> {
        let path = self.out.join(MANIFEST);
        let mut manifest: BTreeMap<String, Value> = match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).unwrap_or_default(),
            Err(_) => BTreeMap::new(),
        };
        let config = json!({ "params": params, "inputs": self.inputs });
        let config_hash = sha256_hex(config.to_string().as_bytes());
        manifest.insert(
            command.to_string(),
            json!({
                "config_hash": config_hash,
                "params": params,
                "inputs": self.inputs,
                "outputs": self.outputs,
            }),
        );
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::new(EXIT_INVALID, e.to_string()))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(())
    }
}

fn warn_rejects(role: &str, stats: &ParseStats) {
    if !stats.rejects.is_empty() {
        eprintln!("warning: {role}: {} line(s) rejected", stats.rejects.len());
        for r in stats.rejects.iter().take(5) {
            eprintln!("  line {}: {}", r.line, r.reason);
        }
    }
}

fn load_graph(run: &mut Run, cfg: &RunConfig) -> CliResult<(RelationshipGraph, Value)> {
    let text = run.read("rels", cfg.rels.as_deref())?;
    let (edges, stats) = parse_relationships(&text)?;
    warn_rejects("rels", &stats);
    let (g, gstats) = build_graph(&edges)?;
    Ok((g, json!({ "parse": stats, "graph": gstats })))
}

fn load_countries(run: &mut Run, cfg: &RunConfig) -> CliResult<CountryMap> {
    let mut map = CountryMap::default();
    if let Some(text) = run.read_optional("countries", cfg.countries.as_deref())? {
        let (mapping, stats) = parse_countries(&text);
        warn_rejects("countries", &stats);
        map.mapping = mapping;
    }
    if let Some(text) = run.read_optional("censors", cfg.censors.as_deref())? {
        let (set, stats) = parse_censors(&text);
        warn_rejects("censors", &stats);
        map.censor_set = set;
    }
    Ok(map)
}

fn load_corpus(run: &mut Run, cfg: &RunConfig) -> CliResult<PathCorpus> {
    let path = cfg.paths_file();
    let text = run.read("paths", Some(&path))?;
    let corpus = parse_paths(&text)?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus.into());
    }
    Ok(corpus)
}

pub fn cmd_infer(cfg: &RunConfig) -> CliResult<()> {
    let mut run = Run::new(&cfg.out)?;
    let rib_text = run.read("rib", cfg.rib.as_deref())?;
    let prefix_text = run.read("prefixes", cfg.prefixes.as_deref())?;
    let (g, graph_stats) = load_graph(&mut run, cfg)?;
    let (entries, rib_stats) = parse_rib(&rib_text);
    warn_rejects("rib", &rib_stats);
    let (targets, prefix_stats) = parse_prefixes(&prefix_text);
    warn_rejects("prefixes", &prefix_stats);

    let corpus = build_corpus(&targets, &entries, &g);
    for w in &corpus.warnings {
        eprintln!("warning: {w}");
    }
    run.write(PATHS_FILE, &write_paths(&corpus))?;

    let per_prefix: Vec<Value> = corpus
        .slices
        .iter()
        .map(|s| json!({ "prefix": s.prefix, "label": s.label, "stats": s.stats }))
        .collect();
    let stats = json!({
        "rib": rib_stats,
        "prefixes": prefix_stats,
        "relationships": graph_stats,
        "total_paths": corpus.total_paths(),
        "per_prefix": per_prefix,
        "warnings": corpus.warnings,
    });
    run.write_json("infer_stats.json", &stats)?;
    println!(
        "inferred {} paths over {} prefixes and {} ASes",
        corpus.total_paths(),
        corpus.slices.len(),
        g.len()
    );
    run.finish("infer", json!({}))
}

pub fn cmd_place(cfg: &RunConfig) -> CliResult<()> {
    let mut run = Run::new(&cfg.out)?;
    let corpus = load_corpus(&mut run, cfg)?;
    let countries = load_countries(&mut run, cfg)?;
    let index = PathIndex::new(&corpus);
    let table = rank_from_index(&index);
    let report = find_key_ases_indexed(&table, &index, cfg.threshold_as, &countries)?;
    let selected = report.selected_asns().into_iter().collect();
    let coverage = coverage_of(&selected, &corpus, &countries);
    let cdf = cdf_series_indexed(&table, &index, table.rows.len());

    run.write_json(
        "placement.json",
        &json!({ "report": report, "coverage": coverage }),
    )?;
    run.write("ranking.csv", &ranking_csv(&table, &countries))?;
    run.write("cdf.csv", &cdf_csv(&cdf))?;
    println!(
        "selected {} ASes covering {:.4} of {} paths (threshold {}, {})",
        report.selected.len(),
        report.coverage,
        report.total_paths,
        report.threshold,
        if report.threshold_reached {
            "reached"
        } else {
            "not reached"
        }
    );
    run.finish("place", json!({ "threshold_as": cfg.threshold_as }))
}

fn placed_asns(out: &Path) -> CliResult<Vec<Asn>> {
    let path = out.join("placement.json");
    let text = std::fs::read_to_string(&path).map_err(|_| {
        CliError::new(
            EXIT_MISSING_INPUT,
            format!(
                "missing input: no --asn given and {} not found",
                path.display()
            ),
        )
    })?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::new(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    let rows = value["report"]["selected"]
        .as_array()
        .cloned()
        .unwrap_or_default();
    rows.iter()
        .map(|r| {
            r["asn"]
                .as_u64()
                .and_then(|n| Asn::new(u32::try_from(n).ok()?))
                .ok_or_else(|| {
                    CliError::new(EXIT_PARSE, format!("{}: bad asn entry", path.display()))
                })
        })
        .collect()
}

pub fn cmd_routers(cfg: &RunConfig, asns: &[Asn]) -> CliResult<()> {
    let mut run = Run::new(&cfg.out)?;
    let trace_text = run.read("traces", cfg.traces.as_deref())?;
    let alias_text = run.read("aliases", cfg.aliases.as_deref())?;
    let p2a_text = run.read("p2a", cfg.p2a.as_deref())?;
    let countries = load_countries(&mut run, cfg)?;
    let (traces, tstats) = parse_traces(&trace_text);
    warn_rejects("traces", &tstats);
    let (aliases, astats) = parse_alias_map(&alias_text)?;
    warn_rejects("aliases", &astats);
    let (p2a_entries, pstats) = parse_p2a(&p2a_text)?;
    warn_rejects("p2a", &pstats);
    let p2a = PrefixToAsMap::new(&p2a_entries)?;

    let explicit = !asns.is_empty();
    let mut targets: Vec<Asn> = if explicit {
        asns.to_vec()
    } else {
        placed_asns(&cfg.out)?
    };
    targets.sort_unstable();
    targets.dedup();

    let results: Vec<_> = targets
        .par_iter()
        .map(|&asn| {
            let at = AsTraces::collect(&traces, &p2a, asn);
            let records = classify_routers(&at, &aliases);
            let placement = find_key_routers(&at, &records, &aliases, cfg.threshold_router);
            (asn, records, placement)
        })
        .collect();

    let mut placements = Vec::new();
    let mut missing = Vec::new();
    for (asn, records, placement) in results {
        match placement {
            Ok(p) => {
                run.write(&format!("routers_{asn}.csv"), &routers_csv(&records, &p))?;
                placements.push(p);
            }
            Err(Error::NoTraces(a)) => missing.push(a),
            Err(e) => return Err(e.into()),
        }
    }
    let rollup = placement_rollup(&placements, &countries);
    run.write_json(
        "placement_rollup.json",
        &json!({
            "rollup": rollup,
            "placements": placements,
            "no_traces": missing,
            "trace_parse": tstats,
        }),
    )?;
    println!(
        "{} routers required across {} ASes",
        rollup.total_required,
        placements.len()
    );
    let params = json!({ "threshold_router": cfg.threshold_router, "asns": targets });
    run.finish("routers", params)?;
    if !missing.is_empty() && (explicit || placements.is_empty()) {
        let list: Vec<String> = missing.iter().map(Asn::to_string).collect();
        return Err(CliError::new(
            EXIT_NO_TRACES,
            format!("no traces touch AS {}", list.join(", AS")),
        ));
    }
    for a in &missing {
        eprintln!("warning: no traces touch AS{a}");
    }
    Ok(())
}

const CONE_BYPASS_ASES: usize = 10;

pub fn cmd_analyze(cfg: &RunConfig) -> CliResult<()> {
    let mut run = Run::new(&cfg.out)?;
    let corpus = load_corpus(&mut run, cfg)?;
    let (g, _) = load_graph(&mut run, cfg)?;
    let countries = load_countries(&mut run, cfg)?;
    let mut failures: Vec<String> = Vec::new();

    let targets: Vec<CountryCode> = if countries.censor_set.is_empty() {
        let all: std::collections::BTreeSet<CountryCode> =
            countries.mapping.values().copied().collect();
        all.into_iter().collect()
    } else {
        countries.censor_set.iter().copied().collect()
    };
    let mut collateral = Vec::new();
    for cc in targets {
        match collateral_damage(&corpus, &countries, cc) {
            Ok(r) => collateral.push(r),
            Err(e) => failures.push(format!("collateral {cc}: {e}")),
        }
    }
    run.write("collateral.csv", &collateral_csv(&collateral))?;

    let mut bypass = Vec::new();
    for asn in largest_cones(&g, CONE_BYPASS_ASES) {
        match cone_bypass(&corpus, &g, asn) {
            Ok(r) => bypass.push(r),
            Err(e) => failures.push(format!("cone bypass AS{asn}: {e}")),
        }
    }
    run.write("cone_bypass.csv", &cone_bypass_csv(&bypass))?;

    let table = rank_from_index(&PathIndex::new(&corpus));
    match frequency_vs_cone(&table, &g) {
        Ok(r) => run.write_json("spearman.json", &r)?,
        Err(e) => {
            failures.push(format!("spearman: {e}"));
            run.write_json("spearman.json", &json!({ "error": e.to_string() }))?;
        }
    }

    let rollup_path = cfg.out.join("placement_rollup.json");
    let routers = match std::fs::read_to_string(&rollup_path) {
        Ok(text) => {
            let v: Value = serde_json::from_str(&text).map_err(|e| {
                CliError::new(EXIT_PARSE, format!("{}: {e}", rollup_path.display()))
            })?;
            run.inputs
                .insert("placement_rollup".into(), sha256_hex(text.as_bytes()));
            v["rollup"]["total_required"].as_u64()
        }
        Err(_) => None,
    };
    let total_routers = routers.unwrap_or(0);
    run.write_json(
        "cost.json",
        &json!({
            "total_routers": total_routers,
            "unit_cost_usd": cfg.unit_cost_usd,
            "total_usd": cost_estimate(total_routers, cfg.unit_cost_usd),
            "router_rollup_found": routers.is_some(),
        }),
    )?;
    run.finish("analyze", json!({ "unit_cost_usd": cfg.unit_cost_usd }))?;

    if failures.is_empty() {
        println!("analyses written to {}", cfg.out.display());
        Ok(())
    } else {
        Err(CliError::new(EXIT_ANALYSIS, failures.join("; ")))
    }
}

pub fn cmd_synth(cfg: &RunConfig, synth: SynthConfig) -> CliResult<()> {
    let mut run = Run::new(&cfg.out)?;
    let bundle = generate(&synth);
    for (name, text) in &bundle.files {
        run.write(name, text)?;
    }
    println!(
        "wrote {} ASes, {} RIB entries, {} traces to {}",
        synth.ases,
        bundle.rib.len(),
        bundle.traces.len(),
        cfg.out.display()
    );
    let params = json!({
        "seed": synth.seed,
        "ases": synth.ases,
        "prefixes": synth.prefixes,
        "vantage_points": synth.vantage_points,
        "traces": synth.traces,
    });
    run.finish("synth", params)
}

fn read_json(dir: &Path, name: &str) -> Option<(Value, String)> {
    let text = std::fs::read_to_string(dir.join(name)).ok()?;
    Some((serde_json::from_str(&text).ok()?, text))
}

pub fn cmd_report(cfg: &RunConfig) -> CliResult<()> {
    let mut run = Run::new(&cfg.out)?;
    let mut summary = serde_json::Map::new();
    let take = |run: &mut Run, name: &str| {
        read_json(&cfg.out, name).map(|(v, text)| {
            run.inputs
                .insert(name.to_string(), sha256_hex(text.as_bytes()));
            v
        })
    };
    if let Some(v) = take(&mut run, "infer_stats.json") {
        let prefixes = v["per_prefix"].as_array().map_or(0, Vec::len);
        summary.insert(
            "inference".into(),
            json!({ "total_paths": v["total_paths"], "prefixes": prefixes, "warnings": v["warnings"] }),
        );
    }
    if let Some(v) = take(&mut run, "placement.json") {
        let r = &v["report"];
        let asns: Vec<Value> = r["selected"]
            .as_array()
            .map(|a| a.iter().map(|s| s["asn"].clone()).collect())
            .unwrap_or_default();
        summary.insert(
            "placement".into(),
            json!({
                "threshold": r["threshold"],
                "coverage": r["coverage"],
                "threshold_reached": r["threshold_reached"],
                "selected_asns": asns,
                "excluded_censor": r["excluded_censor"].as_array().map_or(0, Vec::len),
            }),
        );
    }
    if let Some(v) = take(&mut run, "placement_rollup.json") {
        summary.insert("routers".into(), v["rollup"].clone());
    }
    if let Some(v) = take(&mut run, "spearman.json") {
        summary.insert("spearman".into(), v);
    }
    if let Some(v) = take(&mut run, "cost.json") {
        summary.insert("cost".into(), v);
    }
    for name in ["collateral.csv", "cone_bypass.csv"] {
        if let Ok(text) = std::fs::read_to_string(cfg.out.join(name)) {
            run.inputs
                .insert(name.to_string(), sha256_hex(text.as_bytes()));
            summary.insert(name.trim_end_matches(".csv").into(), csv_rows(&text));
        }
    }
    if summary.is_empty() {
        return Err(CliError::new(
            EXIT_MISSING_INPUT,
            format!("missing input: no results in {}", cfg.out.display()),
        ));
    }
    let keys: Vec<&String> = summary.keys().collect();
    println!(
        "summary of {}",
        keys.iter()
            .map(|k| k.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    );
    run.write_json("summary.json", &Value::Object(summary))?;
    run.finish("report", json!({}))
}

fn csv_value(field: &str) -> Value {
    if let Ok(n) = field.parse::<u64>() {
        return n.into();
    }
    match field.parse::<f64>() {
        Ok(x) if x.is_finite() => x.into(),
        _ => Value::String(field.to_string()),
    }
}

fn csv_rows(text: &str) -> Value {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let rows: Vec<Value> = lines
        .map(|l| {
            let obj: serde_json::Map<String, Value> = header
                .iter()
                .zip(l.split(','))
                .map(|(k, v)| ((*k).to_string(), csv_value(v)))
                .collect();
            Value::Object(obj)
        })
        .collect();
    Value::Array(rows)
}

pub fn run(cli: Cli) -> CliResult<()> {
    let cfg = RunConfig::resolve(&cli.opts)?;
    match cli.command {
        Command::Infer => cmd_infer(&cfg),
        Command::Place => cmd_place(&cfg),
        Command::Routers { asns } => cmd_routers(&cfg, &asns),
        Command::Analyze => cmd_analyze(&cfg),
        Command::Synth {
            ases,
            prefix_count,
            vantage_points,
            trace_count,
        } => cmd_synth(
            &cfg,
            SynthConfig {
                seed: cfg.seed,
                ases,
                prefixes: prefix_count,
                vantage_points,
                traces: trace_count,
            },
        ),
        Command::Report => cmd_report(&cfg),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let conf = dir.path().join("run.conf");
        std::fs::write(&conf, "# run\nrib = a.rib\nthreshold-as=0.5\nseed=7\n").unwrap();
        let opts = Options {
            config: Some(conf),
            seed: Some(9),
            ..Options::default()
        };
        let cfg = RunConfig::resolve(&opts).unwrap();
        assert_eq!(cfg.rib, Some(dir.path().join("a.rib")));
        assert_eq!(cfg.threshold_as, 0.5);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.unit_cost_usd, DEFAULT_UNIT_COST_USD);
        assert_eq!(cfg.out, PathBuf::from("out"));
    }

    #[test]
    fn config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let conf = dir.path().join("run.conf");
        std::fs::write(&conf, "bogus=1\n").unwrap();
        let opts = Options {
            config: Some(conf.clone()),
            ..Options::default()
        };
        assert_eq!(RunConfig::resolve(&opts).unwrap_err().code, EXIT_INVALID);
        std::fs::write(&conf, "no equals sign\n").unwrap();
        assert_eq!(RunConfig::resolve(&opts).unwrap_err().code, EXIT_PARSE);
        let opts = Options {
            config: Some(dir.path().join("absent.conf")),
            ..Options::default()
        };
        assert_eq!(
            RunConfig::resolve(&opts).unwrap_err().code,
            EXIT_MISSING_INPUT
        );
        let opts = Options {
            threshold_as: Some(0.0),
            ..Options::default()
        };
        assert_eq!(RunConfig::resolve(&opts).unwrap_err().code, EXIT_INVALID);
    }

    #[test]
    fn csv_rows_keyed_by_header() {
        let v = csv_rows("a,b\n1,2\n3,4\n");
        assert_eq!(v[1]["b"], 4);
        assert_eq!(csv_rows("a\nundefined\n")[0]["a"], "undefined");
    }
}
