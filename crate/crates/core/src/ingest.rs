//! Readers and writers for the line-oriented input formats.
//!
//! Every format is UTF-8, one record per line, `|`-delimited. Blank lines and
//! lines starting with `#` are skipped. A malformed line is rejected and
//! recorded in [`ParseStats`]; only structural conflicts (two labels for one
//! AS pair, overlapping alias sets) abort the whole parse.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::net::Ipv4Addr;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{Asn, CountryCode, Prefix, RouterId};

/// Per-file parse accounting.
///
/// `accepted + rejects.len() + loops_dropped + duplicates` equals `lines`,
/// the number of non-blank, non-comment lines.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParseStats {
    pub lines: usize,
    pub accepted: usize,
    pub rejects: Vec<Reject>,
    pub loops_dropped: usize,
    pub duplicates: usize,
    /// Accepted records that mention AS_TRANS (23456).
    pub as_trans: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reject {
    pub line: usize,
    pub reason: String,
}

impl ParseStats {
    fn reject(&mut self, line: usize, reason: impl Into<String>) {
        self.rejects.push(Reject {
            line,
            reason: reason.into(),
        });
    }

    pub fn is_balanced(&self) -> bool {
        self.accepted + self.rejects.len() + self.loops_dropped + self.duplicates == self.lines
    }
}

/// Yields `(line_number, trimmed_line)` for every record line.
fn records(input: &str) -> impl Iterator<Item = (usize, &str)> {
    input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// RIB dumps

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RibEntry {
    pub prefix: Prefix,
    /// Neighbor-most AS first, the prefix's home AS last.
    pub as_path: Vec<Asn>,
    pub source_vantage: String,
}

/// Removes consecutive repeats (AS-path prepending).
pub fn collapse_prepending(path: &[Asn]) -> Vec<Asn> {
    let mut out: Vec<Asn> = Vec::with_capacity(path.len());
    for &asn in path {
        if out.last() != Some(&asn) {
            out.push(asn);
        }
    }
    out
}

fn has_repeat(path: &[Asn]) -> bool {
    let mut seen = std::collections::HashSet::with_capacity(path.len());
    !path.iter().all(|a| seen.insert(*a))
}

/// Parses `PREFIX|ASN ASN ...[|VANTAGE]` lines.
pub fn parse_rib(input: &str) -> (Vec<RibEntry>, ParseStats) {
    let mut stats = ParseStats::default();
    let mut entries = Vec::new();
    for (line, text) in records(input) {
        stats.lines += 1;
        let mut fields = text.split('|');
        let (Some(prefix), Some(path)) = (fields.next(), fields.next()) else {
            stats.reject(line, "expected PREFIX|AS_PATH");
            continue;
        };
        let vantage = fields.next().unwrap_or("").trim().to_string();
        if fields.next().is_some() {
            stats.reject(line, "too many fields");
            continue;
        }
        let prefix = match prefix.parse::<Prefix>() {
            Ok(p) => p,
            Err(e) => {
                stats.reject(line, e);
                continue;
            }
        };
        let path: std::result::Result<Vec<Asn>, String> =
            path.split_whitespace().map(str::parse).collect();
        let path = match path {
            Ok(p) if !p.is_empty() => p,
            Ok(_) => {
                stats.reject(line, "empty AS path");
                continue;
            }
            Err(e) => {
                stats.reject(line, e);
                continue;
            }
        };
        let path = collapse_prepending(&path);
        if has_repeat(&path) {
            stats.loops_dropped += 1;
            continue;
        }
        if path.iter().any(|a| a.is_as_trans()) {
            stats.as_trans += 1;
        }
        stats.accepted += 1;
        entries.push(RibEntry {
            prefix,
            as_path: path,
            source_vantage: vantage,
        });
    }
    (entries, stats)
}

pub fn write_rib(entries: &[RibEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let _ = write!(out, "{}|{}", e.prefix, join_asns(&e.as_path));
        if !e.source_vantage.is_empty() {
            let _ = write!(out, "|{}", e.source_vantage);
        }
        out.push('\n');
    }
    out
}

pub(crate) fn join_asns(path: &[Asn]) -> String {
    let mut s = String::with_capacity(path.len() * 6);
    for (i, a) in path.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{a}");
    }
    s
}

// ---------------------------------------------------------------------------
// AS relationships

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RawRelationship {
    /// First AS is the provider of the second (`-1`).
    ProviderOf,
    /// The two ASes peer (`0`).
    Peer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawEdge {
    pub a: Asn,
    pub b: Asn,
    pub rel: RawRelationship,
    pub line: usize,
}

/// Parses CAIDA-style `ASN|ASN|CODE` lines. Extra trailing fields (such as
/// the inference source) are ignored.
pub fn parse_relationships(input: &str) -> Result<(Vec<RawEdge>, ParseStats)> {
    let mut stats = ParseStats::default();
    let mut edges: Vec<RawEdge> = Vec::new();
    // unordered pair -> index into `edges`
    let mut seen: HashMap<(Asn, Asn), usize> = HashMap::new();
    for (line, text) in records(input) {
        stats.lines += 1;
        let fields: Vec<&str> = text.split('|').collect();
        if fields.len() < 3 {
            stats.reject(line, "expected ASN|ASN|CODE");
            continue;
        }
        let (a, b) = match (fields[0].parse::<Asn>(), fields[1].parse::<Asn>()) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                stats.reject(line, e);
                continue;
            }
        };
        let rel = match fields[2].trim() {
            "-1" => RawRelationship::ProviderOf,
            "0" => RawRelationship::Peer,
            other => {
                stats.reject(line, format!("unknown relationship code {other:?}"));
                continue;
            }
        };
        let key = if a <= b { (a, b) } else { (b, a) };
        if let Some(&idx) = seen.get(&key) {
            let prev = edges[idx];
            let same =
                prev.rel == rel && (rel == RawRelationship::Peer || (prev.a == a && prev.b == b));
            if same {
                stats.duplicates += 1;
                continue;
            }
            return Err(Error::ConflictingRelationship {
                a,
                b,
                first_line: prev.line,
                second_line: line,
            });
        }
        if a.is_as_trans() || b.is_as_trans() {
            stats.as_trans += 1;
        }
        seen.insert(key, edges.len());
        edges.push(RawEdge { a, b, rel, line });
        stats.accepted += 1;
    }
    Ok((edges, stats))
}

pub fn write_relationships(edges: &[RawEdge]) -> String {
    let mut out = String::new();
    for e in edges {
        let code = match e.rel {
            RawRelationship::ProviderOf => "-1",
            RawRelationship::Peer => "0",
        };
        let _ = writeln!(out, "{}|{}|{}", e.a, e.b, code);
    }
    out
}

// ---------------------------------------------------------------------------
// Traceroute corpora

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hop {
    Addr(Ipv4Addr),
    /// A non-responding hop (`*`).
    Gap,
}

impl Hop {
    pub fn addr(&self) -> Option<Ipv4Addr> {
        match self {
            Hop::Addr(ip) => Some(*ip),
            Hop::Gap => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouterTrace {
    pub source: String,
    pub destination: Ipv4Addr,
    pub hops: Vec<Hop>,
}

/// Parses `SRC_LABEL|DST_IP|hop1,hop2,*,...` lines.
pub fn parse_traces(input: &str) -> (Vec<RouterTrace>, ParseStats) {
    let mut stats = ParseStats::default();
    let mut traces = Vec::new();
    for (line, text) in records(input) {
        stats.lines += 1;
        let fields: Vec<&str> = text.split('|').collect();
        let [source, dst, hops] = fields[..] else {
            stats.reject(line, "expected SRC|DST|HOPS");
            continue;
        };
        let Ok(destination) = dst.trim().parse::<Ipv4Addr>() else {
            stats.reject(line, format!("invalid destination {dst:?}"));
            continue;
        };
        let hops: std::result::Result<Vec<Hop>, String> = hops
            .split(',')
            .map(str::trim)
            .filter(|h| !h.is_empty())
            .map(|h| match h {
                "*" => Ok(Hop::Gap),
                ip => ip
                    .parse()
                    .map(Hop::Addr)
                    .map_err(|_| format!("invalid hop address {ip:?}")),
            })
            .collect();
        match hops {
            Ok(hops) if hops.is_empty() => stats.reject(line, "empty hop list"),
            Ok(hops) => {
                stats.accepted += 1;
                traces.push(RouterTrace {
                    source: source.trim().to_string(),
                    destination,
                    hops,
                });
            }
            Err(e) => stats.reject(line, e),
        }
    }
    (traces, stats)
}

pub fn write_traces(traces: &[RouterTrace]) -> String {
    let mut out = String::new();
    for t in traces {
        let _ = write!(out, "{}|{}|", t.source, t.destination);
        for (i, h) in t.hops.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            match h {
                Hop::Addr(ip) => {
                    let _ = write!(out, "{ip}");
                }
                Hop::Gap => out.push('*'),
            }
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Alias maps

/// Interface address to router mapping. Addresses not listed are their own
/// single-interface router.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasMap {
    map: HashMap<Ipv4Addr, RouterId>,
    sets: Vec<Vec<Ipv4Addr>>,
}

impl AliasMap {
    pub fn resolve(&self, ip: Ipv4Addr) -> RouterId {
        self.map.get(&ip).copied().unwrap_or(RouterId(ip))
    }

    /// Alias sets in file order, each sorted ascending.
    pub fn sets(&self) -> &[Vec<Ipv4Addr>] {
        &self.sets
    }

    pub fn from_sets<I>(sets: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<Ipv4Addr>>,
    {
        let mut out = AliasMap::default();
        let mut owner: HashMap<Ipv4Addr, usize> = HashMap::new();
        for (i, mut set) in sets.into_iter().enumerate() {
            set.sort_unstable();
            set.dedup();
            let Some(&canonical) = set.first() else {
                continue;
            };
            for &ip in &set {
                if let Some(&prev) = owner.get(&ip) {
                    return Err(Error::AliasOverlap {
                        ip: RouterId(ip),
                        first_line: prev + 1,
                        second_line: i + 1,
                    });
                }
                owner.insert(ip, i);
                out.map.insert(ip, RouterId(canonical));
            }
            out.sets.push(set);
        }
        Ok(out)
    }
}

/// Parses one alias set per line (space-separated interface addresses).
pub fn parse_alias_map(input: &str) -> Result<(AliasMap, ParseStats)> {
    let mut stats = ParseStats::default();
    let mut map = AliasMap::default();
    let mut owner: HashMap<Ipv4Addr, usize> = HashMap::new();
    for (line, text) in records(input) {
        stats.lines += 1;
        let ips: std::result::Result<Vec<Ipv4Addr>, _> = text
            .split_whitespace()
            .map(str::parse::<Ipv4Addr>)
            .collect();
        let Ok(mut ips) = ips else {
            stats.reject(line, "invalid IPv4 address in alias set");
            continue;
        };
        ips.sort_unstable();
        ips.dedup();
        for &ip in &ips {
            if let Some(&prev) = owner.get(&ip) {
                return Err(Error::AliasOverlap {
                    ip: RouterId(ip),
                    first_line: prev,
                    second_line: line,
                });
            }
            owner.insert(ip, line);
            map.map.insert(ip, RouterId(ips[0]));
        }
        map.sets.push(ips);
        stats.accepted += 1;
    }
    Ok((map, stats))
}

pub fn write_alias_map(map: &AliasMap) -> String {
    let mut out = String::new();
    for set in &map.sets {
        let line: Vec<String> = set.iter().map(Ipv4Addr::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Countries and censors

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountryMap {
    pub mapping: BTreeMap<Asn, CountryCode>,
    pub censor_set: BTreeSet<CountryCode>,
}

impl CountryMap {
    pub fn country_of(&self, asn: Asn) -> Option<CountryCode> {
        self.mapping.get(&asn).copied()
    }

    pub fn is_censor(&self, asn: Asn) -> bool {
        self.country_of(asn)
            .is_some_and(|cc| self.censor_set.contains(&cc))
    }

    pub fn knows_country(&self, cc: CountryCode) -> bool {
        self.mapping.values().any(|&c| c == cc)
    }
}

/// Parses `ASN|CC` lines. A second, different country for one AS is rejected.
pub fn parse_countries(input: &str) -> (BTreeMap<Asn, CountryCode>, ParseStats) {
    let mut stats = ParseStats::default();
    let mut map = BTreeMap::new();
    for (line, text) in records(input) {
        stats.lines += 1;
        let Some((asn, cc)) = text.split_once('|') else {
            stats.reject(line, "expected ASN|CC");
            continue;
        };
        let (asn, cc) = match (asn.parse::<Asn>(), cc.parse::<CountryCode>()) {
            (Ok(a), Ok(c)) => (a, c),
            (Err(e), _) | (_, Err(e)) => {
                stats.reject(line, e);
                continue;
            }
        };
        match map.get(&asn) {
            Some(prev) if *prev == cc => stats.duplicates += 1,
            Some(prev) => stats.reject(line, format!("AS{asn} already mapped to {prev}")),
            None => {
                map.insert(asn, cc);
                stats.accepted += 1;
            }
        }
    }
    (map, stats)
}

pub fn parse_censors(input: &str) -> (BTreeSet<CountryCode>, ParseStats) {
    let mut stats = ParseStats::default();
    let mut set = BTreeSet::new();
    for (line, text) in records(input) {
        stats.lines += 1;
        match text.parse::<CountryCode>() {
            Ok(cc) if set.insert(cc) => stats.accepted += 1,
            Ok(_) => stats.duplicates += 1,
            Err(e) => stats.reject(line, e),
        }
    }
    (set, stats)
}

// ---------------------------------------------------------------------------
// Target prefixes

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TargetPrefix {
    pub prefix: Prefix,
    /// Website name, when given as `prefix|label`.
    pub label: Option<String>,
}

pub fn parse_prefixes(input: &str) -> (Vec<TargetPrefix>, ParseStats) {
    let mut stats = ParseStats::default();
    let mut out: Vec<TargetPrefix> = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, text) in records(input) {
        stats.lines += 1;
        let (prefix, label) = match text.split_once('|') {
            Some((p, l)) => (p, Some(l.trim().to_string()).filter(|l| !l.is_empty())),
            None => (text, None),
        };
        match prefix.parse::<Prefix>() {
            Ok(p) if seen.insert(p) => {
                stats.accepted += 1;
                out.push(TargetPrefix { prefix: p, label });
            }
            Ok(_) => stats.duplicates += 1,
            Err(e) => stats.reject(line, e),
        }
    }
    (out, stats)
}

// ---------------------------------------------------------------------------
// Prefix-to-AS attribution

/// Parses `PREFIX|ASN` lines into a list; identical prefixes with different
/// ASNs are a hard error.
pub fn parse_p2a(input: &str) -> Result<(Vec<(Prefix, Asn)>, ParseStats)> {
    let mut stats = ParseStats::default();
    let mut out = Vec::new();
    let mut seen: HashMap<Prefix, Asn> = HashMap::new();
    for (line, text) in records(input) {
        stats.lines += 1;
        let Some((prefix, asn)) = text.split_once('|') else {
            stats.reject(line, "expected PREFIX|ASN");
            continue;
        };
        let (prefix, asn) = match (prefix.parse::<Prefix>(), asn.parse::<Asn>()) {
            (Ok(p), Ok(a)) => (p, a),
            (Err(e), _) | (_, Err(e)) => {
                stats.reject(line, e);
                continue;
            }
        };
        match seen.get(&prefix) {
            Some(&prev) if prev == asn => stats.duplicates += 1,
            Some(&prev) => {
                return Err(Error::ConflictingPrefixOrigin {
                    prefix,
                    first: prev,
                    second: asn,
                })
            }
            None => {
                seen.insert(prefix, asn);
                out.push((prefix, asn));
                stats.accepted += 1;
            }
        }
    }
    Ok((out, stats))
}
