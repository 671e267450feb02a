//! Prefix-to-AS path estimation from RIB snapshots.
//!
//! Paths read from RIBs, and all their suffixes, are *sure* paths. Every other
//! AS gets a path by prepending itself to a neighbor's path whenever the
//! result stays loop-free and valley-free. Each appended AS adds one to the
//! path's uncertainty; the frequency index is inherited from the sure suffix.
//!
//! Among all candidate paths from an AS the preferred one is the shortest,
//! then the least uncertain, then the most frequent, then the
//! lexicographically smallest hop sequence.
//!
//! The search runs in synchronous rounds. In each round every AS recomputes
//! its best path from its neighbors' best paths of the previous round, until
//! nothing changes. Two bests are kept per AS: the overall best, and the best
//! path that only descends (provider to customer links), because a peer or
//! provider may only prepend itself to the latter.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{join_asns, RibEntry, TargetPrefix};
use crate::topology::{Relationship, RelationshipGraph};
use crate::types::{Asn, Prefix};

/// An AS path toward a prefix. `uncertainty == 0` marks a sure path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PathRecord {
    pub prefix: Prefix,
    /// Origin AS first, the prefix's home AS last.
    pub hops: Vec<Asn>,
    /// Number of ASes prepended to a sure path.
    pub uncertainty: u32,
    /// How often the sure suffix occurs in the RIB corpus.
    pub frequency: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Sure,
    Inferred { base_suffix_len: usize },
}

impl PathRecord {
    pub fn origin(&self) -> Asn {
        self.hops[0]
    }

    pub fn home(&self) -> Asn {
        self.hops[self.hops.len() - 1]
    }

    pub fn kind(&self) -> PathKind {
        match self.uncertainty {
            0 => PathKind::Sure,
            u => PathKind::Inferred {
                base_suffix_len: self.hops.len() - u as usize,
            },
        }
    }

    /// The sure path this one extends (itself for a sure path).
    pub fn sure_suffix(&self) -> &[Asn] {
        &self.hops[self.uncertainty as usize..]
    }

    pub fn is_loop_free(&self) -> bool {
        let mut seen = std::collections::HashSet::with_capacity(self.hops.len());
        self.hops.iter().all(|a| seen.insert(*a))
    }
}

/// Orders two paths by preference; `Less` means `a` is preferred.
pub fn preference(a: &PathRecord, b: &PathRecord) -> Ordering {
    path_key(a.hops.len(), a.uncertainty, a.frequency)
        .cmp(&path_key(b.hops.len(), b.uncertainty, b.frequency))
        .then_with(|| a.hops.cmp(&b.hops))
}

fn path_key(len: usize, uncertainty: u32, frequency: u32) -> (usize, u32, Reverse<u32>) {
    (len, uncertainty, Reverse(frequency))
}

/// Picks the preferred path: shortest, then least uncertain, then most
/// frequent, then the smallest hop sequence.
pub fn select_best(candidates: &[PathRecord]) -> Result<&PathRecord> {
    candidates
        .iter()
        .min_by(|a, b| preference(a, b))
        .ok_or(Error::NoCandidates)
}

/// Sure paths for one prefix, grouped by origin AS.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SurePaths {
    pub prefix: Option<Prefix>,
    pub by_origin: BTreeMap<Asn, Vec<PathRecord>>,
}

impl SurePaths {
    pub fn is_empty(&self) -> bool {
        self.by_origin.is_empty()
    }

    pub fn len(&self) -> usize {
        self.by_origin.values().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PathRecord> {
        self.by_origin.values().flatten()
    }

    /// Frequency of an exact hop sequence, if it is a sure path.
    pub fn frequency_of(&self, hops: &[Asn]) -> Option<u32> {
        let first = hops.first()?;
        self.by_origin
            .get(first)?
            .iter()
            .find(|p| p.hops == hops)
            .map(|p| p.frequency)
    }
}

/// Collects every RIB path for `prefix` (exact match) and all of its
/// suffixes. The frequency of a sure path is the number of RIB entries that
/// end with that exact hop sequence.
pub fn extract_sure_paths(entries: &[RibEntry], prefix: Prefix) -> SurePaths {
    sure_paths_from(
        prefix,
        entries
            .iter()
            .filter(|e| e.prefix == prefix)
            .map(|e| e.as_path.as_slice()),
    )
}

fn sure_paths_from<'a>(prefix: Prefix, paths: impl Iterator<Item = &'a [Asn]>) -> SurePaths {
    let mut counts: HashMap<&'a [Asn], u32> = HashMap::new();
    for path in paths {
        for start in 0..path.len() {
            *counts.entry(&path[start..]).or_default() += 1;
        }
    }
    let mut by_origin: BTreeMap<Asn, Vec<PathRecord>> = BTreeMap::new();
    for (hops, frequency) in counts {
        by_origin.entry(hops[0]).or_default().push(PathRecord {
            prefix,
            hops: hops.to_vec(),
            uncertainty: 0,
            frequency,
        });
    }
    for v in by_origin.values_mut() {
        v.sort_by(preference);
    }
    SurePaths {
        prefix: Some(prefix),
        by_origin,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SliceStats {
    pub sure_paths: usize,
    /// Sure paths dropped because they cross an unlabeled link or a valley.
    pub sure_not_valley_free: usize,
    /// Relaxation rounds until no AS changed its path.
    pub rounds: usize,
    /// ASes holding a path of at least two hops.
    pub covered: usize,
    pub graph_ases: usize,
    /// Graph ASes with no valley-free path (home ASes excluded).
    pub uncovered: usize,
}

/// Chosen paths toward one prefix, keyed by origin AS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixSlice {
    pub prefix: Prefix,
    pub label: Option<String>,
    pub paths: BTreeMap<Asn, PathRecord>,
    pub stats: SliceStats,
}

#[derive(Debug, Clone)]
struct Route {
    hops: Vec<usize>,
    uncertainty: u32,
    frequency: u32,
}

impl Route {
    fn key(&self) -> (usize, u32, Reverse<u32>) {
        path_key(self.hops.len(), self.uncertainty, self.frequency)
    }

    /// Would prepending `origin` to `tail` be preferred over `self`?
    fn loses_to_extension(&self, origin: usize, tail: &Route) -> bool {
        let ext_key = path_key(tail.hops.len() + 1, tail.uncertainty + 1, tail.frequency);
        match ext_key.cmp(&self.key()) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => {
                let mine = &self.hops;
                (origin, tail.hops.as_slice()).cmp(&(mine[0], &mine[1..])) == Ordering::Less
            }
        }
    }

    fn extend(origin: usize, tail: &Route) -> Route {
        let mut hops = Vec::with_capacity(tail.hops.len() + 1);
        hops.push(origin);
        hops.extend_from_slice(&tail.hops);
        Route {
            hops,
            uncertainty: tail.uncertainty + 1,
            frequency: tail.frequency,
        }
    }
}

fn better(a: &Route, b: &Route) -> bool {
    a.key().cmp(&b.key()).then_with(|| a.hops.cmp(&b.hops)) == Ordering::Less
}

fn offer(slot: &mut Option<Route>, candidate: Route) {
    match slot {
        Some(cur) if !better(&candidate, cur) => {}
        _ => *slot = Some(candidate),
    }
}

/// Extends the sure paths of one prefix to every AS the graph can reach under
/// the valley-free and loop-free constraints.
pub fn infer_paths(prefix: Prefix, sure: &SurePaths, g: &RelationshipGraph) -> PrefixSlice {
    let n = g.len();
    let mut stats = SliceStats {
        sure_paths: sure.len(),
        graph_ases: n,
        ..SliceStats::default()
    };

    // Seed both classes from the sure paths.
    let mut best_any: Vec<Option<Route>> = vec![None; n];
    let mut best_down: Vec<Option<Route>> = vec![None; n];
    let mut is_home = vec![false; n];
    for path in sure.iter() {
        if !g.is_valley_free(&path.hops) {
            stats.sure_not_valley_free += 1;
            continue;
        }
        // valley-free implies every hop is in the graph, except a lone AS
        let Some(hops) = path
            .hops
            .iter()
            .map(|&a| g.index_of(a))
            .collect::<Option<Vec<usize>>>()
        else {
            continue;
        };
        is_home[hops[hops.len() - 1]] = true;
        let descending = hops
            .windows(2)
            .all(|w| g.relationship_idx(w[0], w[1]) == Relationship::ProviderToCustomer);
        let route = Route {
            hops,
            uncertainty: 0,
            frequency: path.frequency,
        };
        let origin = route.hops[0];
        if descending {
            offer(&mut best_down[origin], route.clone());
        }
        offer(&mut best_any[origin], route);
    }

    loop {
        let mut next_any = best_any.clone();
        let mut next_down = best_down.clone();
        let mut changed = false;
        for x in 0..n {
            for &(y, rel) in g.adjacent(x) {
                let (tail, keeps_descending) = match rel {
                    Relationship::CustomerToProvider => (&best_any[y], false),
                    Relationship::PeerToPeer => (&best_down[y], false),
                    Relationship::ProviderToCustomer => (&best_down[y], true),
                    Relationship::None => continue,
                };
                let Some(tail) = tail else { continue };
                if tail.hops.contains(&x) {
                    continue;
                }
                if next_any[x]
                    .as_ref()
                    .is_none_or(|cur| cur.loses_to_extension(x, tail))
                {
                    next_any[x] = Some(Route::extend(x, tail));
                    changed = true;
                }
                if keeps_descending
                    && next_down[x]
                        .as_ref()
                        .is_none_or(|cur| cur.loses_to_extension(x, tail))
                {
                    next_down[x] = Some(Route::extend(x, tail));
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
        stats.rounds += 1;
        best_any = next_any;
        best_down = next_down;
    }

    let mut paths = BTreeMap::new();
    for (x, route) in best_any.into_iter().enumerate() {
        match route {
            Some(r) if r.hops.len() >= 2 => {
                let record = PathRecord {
                    prefix,
                    hops: r.hops.iter().map(|&i| g.asn_at(i)).collect(),
                    uncertainty: r.uncertainty,
                    frequency: r.frequency,
                };
                paths.insert(g.asn_at(x), record);
            }
            _ if is_home[x] => {}
            _ => stats.uncovered += 1,
        }
    }
    stats.covered = paths.len();
    PrefixSlice {
        prefix,
        label: None,
        paths,
        stats,
    }
}

/// Inferred paths toward a list of prefixes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathCorpus {
    pub slices: Vec<PrefixSlice>,
    /// Prefixes that had no sure path at all.
    pub warnings: Vec<String>,
}

impl PathCorpus {
    pub fn paths(&self) -> impl Iterator<Item = &PathRecord> {
        self.slices.iter().flat_map(|s| s.paths.values())
    }

    pub fn total_paths(&self) -> usize {
        self.slices.iter().map(|s| s.paths.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_paths() == 0
    }
}

/// Runs inference for every target prefix. Prefixes are independent and are
/// processed in parallel; output order follows `prefixes`.
pub fn build_corpus(
    prefixes: &[TargetPrefix],
    entries: &[RibEntry],
    g: &RelationshipGraph,
) -> PathCorpus {
    let mut by_prefix: HashMap<Prefix, Vec<&[Asn]>> = HashMap::new();
    for e in entries {
        by_prefix.entry(e.prefix).or_default().push(&e.as_path);
    }
    let slices: Vec<PrefixSlice> = prefixes
        .par_iter()
        .map(|t| {
            let rib = by_prefix.get(&t.prefix).map(Vec::as_slice).unwrap_or(&[]);
            let sure = sure_paths_from(t.prefix, rib.iter().copied());
            let mut slice = infer_paths(t.prefix, &sure, g);
            slice.label = t.label.clone();
            slice
        })
        .collect();
    let warnings = slices
        .iter()
        .filter(|s| s.stats.sure_paths == 0)
        .map(|s| format!("prefix {} has no sure paths in the RIB corpus", s.prefix))
        .collect();
    PathCorpus { slices, warnings }
}

/// Serializes the corpus as `PREFIX|ORIGIN|A B C ...|uncertainty|frequency`.
pub fn write_paths(corpus: &PathCorpus) -> String {
    let mut out = String::new();
    for p in corpus.paths() {
        let _ = writeln!(
            out,
            "{}|{}|{}|{}|{}",
            p.prefix,
            p.origin(),
            join_asns(&p.hops),
            p.uncertainty,
            p.frequency
        );
    }
    out
}

/// Reads a paths file. Slices appear in order of first mention.
pub fn parse_paths(input: &str) -> Result<PathCorpus> {
    let mut corpus = PathCorpus::default();
    let mut slot: HashMap<Prefix, usize> = HashMap::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let bad = |message: String| Error::Malformed {
            line: line_no,
            message,
        };
        let fields: Vec<&str> = text.split('|').collect();
        let [prefix, origin, hops, uncertainty, frequency] = fields[..] else {
            return Err(bad(
                "expected PREFIX|ORIGIN|PATH|UNCERTAINTY|FREQUENCY".into()
            ));
        };
        let prefix: Prefix = prefix.parse().map_err(bad)?;
        let origin: Asn = origin.parse().map_err(bad)?;
        let hops: Vec<Asn> = hops
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(bad)?;
        let uncertainty: u32 = uncertainty
            .trim()
            .parse()
            .map_err(|_| bad(format!("invalid uncertainty {uncertainty:?}")))?;
        let frequency: u32 = frequency
            .trim()
            .parse()
            .map_err(|_| bad(format!("invalid frequency {frequency:?}")))?;
        if hops.first() != Some(&origin) {
            return Err(bad(format!("path does not start at origin AS{origin}")));
        }
        if uncertainty as usize >= hops.len() {
            return Err(bad(
                "uncertainty must be smaller than the path length".into()
            ));
        }
        let idx = *slot.entry(prefix).or_insert_with(|| {
            corpus.slices.push(PrefixSlice {
                prefix,
                label: None,
                paths: BTreeMap::new(),
                stats: SliceStats::default(),
            });
            corpus.slices.len() - 1
        });
        let slice = &mut corpus.slices[idx];
        let record = PathRecord {
            prefix,
            hops,
            uncertainty,
            frequency,
        };
        if slice.paths.insert(origin, record).is_some() {
            return Err(bad(format!("second path for AS{origin} toward {prefix}")));
        }
        slice.stats.covered = slice.paths.len();
    }
    Ok(corpus)
}
