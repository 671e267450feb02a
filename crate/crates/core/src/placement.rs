//! Key-AS selection: rank ASes by the number of corpus paths they sit on and
//! take the shortest prefix of that ranking whose paths reach a coverage
//! threshold, skipping ASes headquartered in censoring countries.
//!
//! A path credits every AS on it except its own origin: a decoy router inside
//! the client's own network cannot help that client.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::PathCorpus;
use crate::ingest::CountryMap;
use crate::types::{Asn, CountryCode};

pub const DEFAULT_THRESHOLD: f64 = 0.9;

/// `covered / total >= threshold`, the single coverage test used everywhere.
pub fn meets_threshold(covered: usize, total: usize, threshold: f64) -> bool {
    total > 0 && covered as f64 / total as f64 >= threshold
}

pub fn fraction(part: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        part as f64 / total as f64
    }
}

pub fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidThreshold(threshold))
    }
}

/// Which corpus paths (by position in `PathCorpus::paths()`) each AS
/// intercepts.
#[derive(Debug, Clone, Default)]
pub struct PathIndex {
    pub total_paths: usize,
    on_path: HashMap<Asn, Vec<u32>>,
}

impl PathIndex {
    pub fn new(corpus: &PathCorpus) -> Self {
        let mut on_path: HashMap<Asn, Vec<u32>> = HashMap::new();
        let mut total = 0usize;
        for (i, path) in corpus.paths().enumerate() {
            on_path.entry(path.origin()).or_default();
            for &asn in &path.hops[1..] {
                on_path.entry(asn).or_default().push(i as u32);
            }
            total += 1;
        }
        PathIndex {
            total_paths: total,
            on_path,
        }
    }

    pub fn paths_through(&self, asn: Asn) -> &[u32] {
        self.on_path.get(&asn).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn asns(&self) -> impl Iterator<Item = Asn> + '_ {
        self.on_path.keys().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AsFrequency {
    pub asn: Asn,
    pub paths_containing: usize,
    /// 1-based, dense.
    pub rank: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AsFrequencyTable {
    /// Ordered by rank.
    pub rows: Vec<AsFrequency>,
    pub total_paths: usize,
}

impl AsFrequencyTable {
    pub fn get(&self, asn: Asn) -> Option<&AsFrequency> {
        self.rows.iter().find(|r| r.asn == asn)
    }
}

/// Ranks every AS seen in the corpus by descending path count, ties broken by
/// ascending ASN.
pub fn rank_ases(corpus: &PathCorpus) -> AsFrequencyTable {
    rank_from_index(&PathIndex::new(corpus))
}

pub fn rank_from_index(index: &PathIndex) -> AsFrequencyTable {
    let mut rows: Vec<AsFrequency> = index
        .on_path
        .iter()
        .map(|(&asn, paths)| AsFrequency {
            asn,
            paths_containing: paths.len(),
            rank: 0,
        })
        .collect();
    rows.sort_by(|a, b| {
        b.paths_containing
            .cmp(&a.paths_containing)
            .then(a.asn.cmp(&b.asn))
    });
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    AsFrequencyTable {
        rows,
        total_paths: index.total_paths,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectedAs {
    pub asn: Asn,
    pub country: Option<CountryCode>,
    pub rank: usize,
    pub paths_containing: usize,
    /// Paths first covered by this AS.
    pub unique_added: usize,
    pub cumulative_paths: usize,
    pub cumulative_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExcludedAs {
    pub asn: Asn,
    pub country: CountryCode,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacementReport {
    pub threshold: f64,
    pub coverage: f64,
    pub covered_paths: usize,
    pub total_paths: usize,
    pub threshold_reached: bool,
    pub selected: Vec<SelectedAs>,
    /// Censor-country ASes ranked above the last selected AS.
    pub excluded_censor: Vec<ExcludedAs>,
}

impl PlacementReport {
    pub fn selected_asns(&self) -> Vec<Asn> {
        self.selected.iter().map(|s| s.asn).collect()
    }
}

/// Walks the ranking, skipping censor-country ASes, until the union of
/// intercepted paths reaches `threshold`.
pub fn find_key_ases(
    table: &AsFrequencyTable,
    corpus: &PathCorpus,
    threshold: f64,
    countries: &CountryMap,
) -> Result<PlacementReport> {
    find_key_ases_indexed(table, &PathIndex::new(corpus), threshold, countries)
}

pub fn find_key_ases_indexed(
    table: &AsFrequencyTable,
    index: &PathIndex,
    threshold: f64,
    countries: &CountryMap,
) -> Result<PlacementReport> {
    check_threshold(threshold)?;
    let total = index.total_paths;
    if total == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut covered = vec![false; total];
    let mut count = 0usize;
    let mut selected = Vec::new();
    let mut excluded = Vec::new();
    let mut reached = false;
    for row in &table.rows {
        let country = countries.country_of(row.asn);
        if countries.is_censor(row.asn) {
            excluded.push(ExcludedAs {
                asn: row.asn,
                country: country.expect("censor ASes have a country"),
                rank: row.rank,
            });
            continue;
        }
        let mut added = 0;
        for &p in index.paths_through(row.asn) {
            if !std::mem::replace(&mut covered[p as usize], true) {
                added += 1;
            }
        }
        count += added;
        selected.push(SelectedAs {
            asn: row.asn,
            country,
            rank: row.rank,
            paths_containing: row.paths_containing,
            unique_added: added,
            cumulative_paths: count,
            cumulative_fraction: fraction(count, total),
        });
        if meets_threshold(count, total, threshold) {
            reached = true;
            break;
        }
    }
    Ok(PlacementReport {
        threshold,
        coverage: fraction(count, total),
        covered_paths: count,
        total_paths: total,
        threshold_reached: reached,
        selected,
        excluded_censor: excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountryCoverage {
    pub covered: usize,
    pub total: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub covered: usize,
    pub total: usize,
    pub fraction: f64,
    /// Keyed by the origin AS's country, `"unknown"` when unmapped.
    pub per_country: BTreeMap<String, CountryCoverage>,
}

/// Fraction of corpus paths intercepted by at least one AS of `as_set`,
/// overall and per origin country.
pub fn coverage_of(
    as_set: &BTreeSet<Asn>,
    corpus: &PathCorpus,
    countries: &CountryMap,
) -> CoverageReport {
    let mut per: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let (mut covered, mut total) = (0, 0);
    for path in corpus.paths() {
        let hit = path.hops[1..].iter().any(|a| as_set.contains(a));
        let key = countries
            .country_of(path.origin())
            .map_or_else(|| "unknown".to_string(), |c| c.to_string());
        let slot = per.entry(key).or_default();
        slot.1 += 1;
        total += 1;
        if hit {
            slot.0 += 1;
            covered += 1;
        }
    }
    CoverageReport {
        covered,
        total,
        fraction: fraction(covered, total),
        per_country: per
            .into_iter()
            .map(|(k, (c, t))| {
                (
                    k,
                    CountryCoverage {
                        covered: c,
                        total: t,
                        fraction: fraction(c, t),
                    },
                )
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfRow {
    pub rank: usize,
    pub asn: Asn,
    pub unique_added: usize,
    pub cumulative_fraction: f64,
}

/// Cumulative coverage of the top `top_n` ranked ASes (censors included).
pub fn cdf_series(table: &AsFrequencyTable, corpus: &PathCorpus, top_n: usize) -> Vec<CdfRow> {
    cdf_series_indexed(table, &PathIndex::new(corpus), top_n)
}

pub fn cdf_series_indexed(
    table: &AsFrequencyTable,
    index: &PathIndex,
    top_n: usize,
) -> Vec<CdfRow> {
    let mut covered = vec![false; index.total_paths];
    let mut count = 0;
    table
        .rows
        .iter()
        .take(top_n)
        .map(|row| {
            let mut added = 0;
            for &p in index.paths_through(row.asn) {
                if !std::mem::replace(&mut covered[p as usize], true) {
                    added += 1;
                }
            }
            count += added;
            CdfRow {
                rank: row.rank,
                asn: row.asn,
                unique_added: added,
                cumulative_fraction: fraction(count, index.total_paths),
            }
        })
        .collect()
}

pub fn ranking_csv(table: &AsFrequencyTable, countries: &CountryMap) -> String {
    let mut out = String::from("asn,country,paths,rank\n");
    for r in &table.rows {
        let cc = countries
            .country_of(r.asn)
            .map_or_else(String::new, |c| c.to_string());
        let _ = writeln!(out, "{},{},{},{}", r.asn, cc, r.paths_containing, r.rank);
    }
    out
}

pub fn cdf_csv(rows: &[CdfRow]) -> String {
    let mut out = String::from("rank,asn,unique_added,cumulative\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.rank, r.asn, r.unique_added, r.cumulative_fraction
        );
    }
    out
}
