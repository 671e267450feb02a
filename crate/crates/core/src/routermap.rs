//! Router-level placement inside one AS from traceroute corpora.
//!
//! Each trace is cut down to the span between the first and the last hop that
//! belongs to the target AS. The span's end routers are *edge* routers, every
//! other in-AS router is *core*. Edge routers see every trace through the AS;
//! the heavy-hitter set is the shortest prefix of the frequency ranking that
//! sees a fraction `t` of the traces. Whichever set is smaller is chosen.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::net::Ipv4Addr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{AliasMap, CountryMap, Hop, RouterTrace};
use crate::placement::{check_threshold, fraction, meets_threshold};
use crate::types::{Asn, CountryCode, Prefix, RouterId};

/// Longest-prefix-match table from address to AS.
#[derive(Debug, Clone, Default)]
pub struct PrefixToAsMap {
    // indexed by mask length
    by_len: Vec<HashMap<u32, Asn>>,
    entries: usize,
}

impl PrefixToAsMap {
    pub fn new(entries: &[(Prefix, Asn)]) -> Result<Self> {
        let mut by_len: Vec<HashMap<u32, Asn>> = vec![HashMap::new(); 33];
        for &(prefix, asn) in entries {
            let slot = &mut by_len[prefix.len() as usize];
            match slot.insert(u32::from(prefix.network()), asn) {
                Some(prev) if prev != asn => {
                    return Err(Error::ConflictingPrefixOrigin {
                        prefix,
                        first: prev,
                        second: asn,
                    })
                }
                _ => {}
            }
        }
        let entries = by_len.iter().map(HashMap::len).sum();
        Ok(PrefixToAsMap { by_len, entries })
    }

    pub fn len(&self) -> usize {
        self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries == 0
    }

    pub fn lookup(&self, ip: Ipv4Addr) -> Option<Asn> {
        let bits = u32::from(ip);
        (0..=32u32).rev().find_map(|len| {
            let table = &self.by_len[len as usize];
            if table.is_empty() {
                return None;
            }
            let mask = if len == 0 { 0 } else { u32::MAX << (32 - len) };
            table.get(&(bits & mask)).copied()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrimmedHop {
    pub hop: Hop,
    /// Responding address inside the span that maps to another AS.
    pub third_party: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrimmedTrace {
    pub source: String,
    pub destination: Ipv4Addr,
    pub hops: Vec<TrimmedHop>,
}

impl TrimmedTrace {
    /// Addresses attributed to the target AS, in trace order.
    pub fn in_as_addrs(&self) -> impl Iterator<Item = Ipv4Addr> + '_ {
        self.hops
            .iter()
            .filter(|h| !h.third_party)
            .filter_map(|h| h.hop.addr())
    }

    pub fn third_party_hops(&self) -> usize {
        self.hops.iter().filter(|h| h.third_party).count()
    }
}

/// Cuts a trace down to its span inside `target`, inclusive. `None` when no
/// hop maps to `target`.
pub fn trim_trace(trace: &RouterTrace, p2a: &PrefixToAsMap, target: Asn) -> Option<TrimmedTrace> {
    let owner: Vec<Option<Asn>> = trace
        .hops
        .iter()
        .map(|h| h.addr().and_then(|ip| p2a.lookup(ip)))
        .collect();
    let first = owner.iter().position(|o| *o == Some(target))?;
    let last = owner.iter().rposition(|o| *o == Some(target))?;
    let hops = (first..=last)
        .map(|i| TrimmedHop {
            hop: trace.hops[i],
            third_party: trace.hops[i] != Hop::Gap && owner[i] != Some(target),
        })
        .collect();
    Some(TrimmedTrace {
        source: trace.source.clone(),
        destination: trace.destination,
        hops,
    })
}

/// The trimmed traces through one AS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AsTraces {
    pub asn: Asn,
    pub trimmed: Vec<TrimmedTrace>,
}

impl AsTraces {
    pub fn collect(traces: &[RouterTrace], p2a: &PrefixToAsMap, asn: Asn) -> Self {
        AsTraces {
            asn,
            trimmed: traces
                .iter()
                .filter_map(|t| trim_trace(t, p2a, asn))
                .collect(),
        }
    }

    pub fn third_party_hops(&self) -> usize {
        self.trimmed
            .iter()
            .map(TrimmedTrace::third_party_hops)
            .sum()
    }

    /// Distinct routers on each trimmed trace, after alias resolution.
    pub fn router_sets(&self, aliases: &AliasMap) -> Vec<BTreeSet<RouterId>> {
        self.trimmed
            .iter()
            .map(|t| t.in_as_addrs().map(|ip| aliases.resolve(ip)).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum RouterClass {
    Edge,
    Core,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RouterRecord {
    pub id: RouterId,
    pub asn: Asn,
    pub classification: RouterClass,
    /// Number of trimmed traces containing the router.
    pub trace_count: usize,
}

/// Classifies every in-AS router, ordered by router id.
pub fn classify_routers(traces: &AsTraces, aliases: &AliasMap) -> Vec<RouterRecord> {
    let mut seen: BTreeMap<RouterId, (bool, usize)> = BTreeMap::new();
    for t in &traces.trimmed {
        let routers: Vec<RouterId> = t.in_as_addrs().map(|ip| aliases.resolve(ip)).collect();
        let (Some(&first), Some(&last)) = (routers.first(), routers.last()) else {
            continue;
        };
        let distinct: BTreeSet<RouterId> = routers.iter().copied().collect();
        for r in distinct {
            let slot = seen.entry(r).or_default();
            slot.1 += 1;
            if r == first || r == last {
                slot.0 = true;
            }
        }
    }
    seen.into_iter()
        .map(|(id, (edge, trace_count))| RouterRecord {
            id,
            asn: traces.asn,
            classification: if edge {
                RouterClass::Edge
            } else {
                RouterClass::Core
            },
            trace_count,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SelectedKind {
    Edge,
    HeavyHitter,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouterPlacement {
    pub asn: Asn,
    pub traces: usize,
    pub edge: usize,
    pub core: usize,
    pub heavy: usize,
    /// `min(edge, heavy)`.
    pub required: usize,
    pub selected_kind: SelectedKind,
    pub selected_set: Vec<RouterId>,
    /// Fraction of trimmed traces through the selected set.
    pub trace_coverage: f64,
    pub threshold: f64,
    /// Heavy hitters in selection order.
    pub heavy_hitters: Vec<RouterId>,
    pub third_party_hops: usize,
}

/// Routers ordered by descending trace count, ties by router id.
pub fn frequency_order(records: &[RouterRecord]) -> Vec<&RouterRecord> {
    let mut order: Vec<&RouterRecord> = records.iter().collect();
    order.sort_by(|a, b| b.trace_count.cmp(&a.trace_count).then(a.id.cmp(&b.id)));
    order
}

fn covered_by(sets: &[BTreeSet<RouterId>], chosen: &BTreeSet<RouterId>) -> usize {
    sets.iter()
        .filter(|s| s.iter().any(|r| chosen.contains(r)))
        .count()
}

pub fn find_key_routers(
    traces: &AsTraces,
    records: &[RouterRecord],
    aliases: &AliasMap,
    threshold: f64,
) -> Result<RouterPlacement> {
    check_threshold(threshold)?;
    let sets = traces.router_sets(aliases);
    if sets.is_empty() {
        return Err(Error::NoTraces(traces.asn));
    }
    let total = sets.len();

    // greedy walk in frequency order
    let mut containing: HashMap<RouterId, Vec<usize>> = HashMap::new();
    for (i, s) in sets.iter().enumerate() {
        for r in s {
            containing.entry(*r).or_default().push(i);
        }
    }
    let mut covered = vec![false; total];
    let mut count = 0;
    let mut heavy_hitters = Vec::new();
    for rec in frequency_order(records) {
        heavy_hitters.push(rec.id);
        for &i in containing.get(&rec.id).map(Vec::as_slice).unwrap_or(&[]) {
            if !std::mem::replace(&mut covered[i], true) {
                count += 1;
            }
        }
        if meets_threshold(count, total, threshold) {
            break;
        }
    }

    let edges: Vec<RouterId> = records
        .iter()
        .filter(|r| r.classification == RouterClass::Edge)
        .map(|r| r.id)
        .collect();
    let core = records.len() - edges.len();
    let heavy = heavy_hitters.len();
    let (selected_kind, selected_set) = if heavy < edges.len() {
        (SelectedKind::HeavyHitter, heavy_hitters.clone())
    } else {
        (SelectedKind::Edge, edges.clone())
    };
    let chosen: BTreeSet<RouterId> = selected_set.iter().copied().collect();
    Ok(RouterPlacement {
        asn: traces.asn,
        traces: total,
        edge: edges.len(),
        core,
        heavy,
        required: heavy.min(edges.len()),
        selected_kind,
        trace_coverage: fraction(covered_by(&sets, &chosen), total),
        selected_set,
        threshold,
        heavy_hitters,
        third_party_hops: traces.third_party_hops(),
    })
}

pub fn routers_csv(records: &[RouterRecord], placement: &RouterPlacement) -> String {
    let chosen: BTreeSet<RouterId> = placement.selected_set.iter().copied().collect();
    let mut out = String::from("router,class,trace_count,selected\n");
    for r in records {
        let class = match r.classification {
            RouterClass::Edge => "edge",
            RouterClass::Core => "core",
        };
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.id,
            class,
            r.trace_count,
            chosen.contains(&r.id)
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RollupRow {
    pub asn: Asn,
    pub country: Option<CountryCode>,
    pub edge: usize,
    pub core: usize,
    pub heavy: usize,
    pub required: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Rollup {
    pub total_required: usize,
    pub per_as: Vec<RollupRow>,
    /// Keyed by country code, `"unknown"` when unmapped.
    pub per_country: BTreeMap<String, usize>,
}

pub fn placement_rollup(placements: &[RouterPlacement], countries: &CountryMap) -> Rollup {
    let mut rollup = Rollup::default();
    for p in placements {
        let country = countries.country_of(p.asn);
        rollup.total_required += p.required;
        *rollup
            .per_country
            .entry(country.map_or_else(|| "unknown".into(), |c| c.to_string()))
            .or_default() += p.required;
        rollup.per_as.push(RollupRow {
            asn: p.asn,
            country,
            edge: p.edge,
            core: p.core,
            heavy: p.heavy,
            required: p.required,
        });
    }
    rollup
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_alias_map, parse_p2a, parse_traces};

    fn a(v: u32) -> Asn {
        Asn::new(v).unwrap()
    }

    fn rid(s: &str) -> RouterId {
        RouterId(s.parse().unwrap())
    }

    fn p2a() -> PrefixToAsMap {
        let (v, _) =
            parse_p2a("10.1.0.0/16|1\n10.2.0.0/16|2\n10.3.0.0/16|3\n10.2.9.0/24|9\n").unwrap();
        PrefixToAsMap::new(&v).unwrap()
    }

    fn traces(s: &str) -> Vec<RouterTrace> {
        parse_traces(s).0
    }

    #[test]
    fn longest_prefix_wins() {
        let m = p2a();
        assert_eq!(m.lookup("10.2.1.1".parse().unwrap()), Some(a(2)));
        assert_eq!(m.lookup("10.2.9.1".parse().unwrap()), Some(a(9)));
        assert_eq!(m.lookup("11.0.0.1".parse().unwrap()), None);
        let (v, _) = parse_p2a("0.0.0.0/0|7\n").unwrap();
        let d = PrefixToAsMap::new(&v).unwrap();
        assert_eq!(d.lookup("1.2.3.4".parse().unwrap()), Some(a(7)));
    }

    #[test]
    fn trims_to_span() {
        let t = &traces("s|10.3.0.1|10.1.0.1,10.2.0.1,10.2.0.2,10.3.0.1\n")[0];
        let trimmed = trim_trace(t, &p2a(), a(2)).unwrap();
        let ips: Vec<String> = trimmed.in_as_addrs().map(|i| i.to_string()).collect();
        assert_eq!(ips, vec!["10.2.0.1", "10.2.0.2"]);
    }

    #[test]
    fn single_hop_span_and_miss() {
        let t = &traces("s|10.3.0.1|10.2.0.1\n")[0];
        let trimmed = trim_trace(t, &p2a(), a(2)).unwrap();
        assert_eq!(trimmed.hops.len(), 1);
        let t = &traces("s|10.3.0.1|10.1.0.1,10.3.0.1\n")[0];
        assert!(trim_trace(t, &p2a(), a(2)).is_none());
    }

    #[test]
    fn third_party_and_gaps_inside_span() {
        let t = &traces("s|10.3.0.1|10.1.0.1,10.2.0.1,*,10.3.0.7,10.2.0.2,*\n")[0];
        let trimmed = trim_trace(t, &p2a(), a(2)).unwrap();
        assert_eq!(trimmed.hops.len(), 4);
        assert_eq!(trimmed.hops[1].hop, Hop::Gap);
        assert!(!trimmed.hops[1].third_party);
        assert!(trimmed.hops[2].third_party);
        assert_eq!(trimmed.third_party_hops(), 1);
        assert_eq!(trimmed.in_as_addrs().count(), 2);
    }

    #[test]
    fn mid_span_router_is_core() {
        let lines: String = (0..5)
            .map(|i| {
                format!(
                    "s{i}|10.3.0.1|10.2.0.{},10.2.1.1,10.2.0.{}\n",
                    10 + i,
                    20 + i
                )
            })
            .collect();
        let t = AsTraces::collect(&traces(&lines), &p2a(), a(2));
        let recs = classify_routers(&t, &AliasMap::default());
        let core: Vec<_> = recs
            .iter()
            .filter(|r| r.classification == RouterClass::Core)
            .collect();
        assert_eq!(core.len(), 1);
        assert_eq!(core[0].id, rid("10.2.1.1"));
        assert_eq!(core[0].trace_count, 5);
        assert_eq!(recs.len(), 11);
    }

    #[test]
    fn alias_merge_yields_one_edge() {
        let lines =
            "s1|10.3.0.1|10.2.0.1,10.2.1.1,10.2.0.2\ns2|10.3.0.1|10.2.0.3,10.2.1.1,10.2.0.7\n";
        let (aliases, _) = parse_alias_map("10.2.0.2 10.2.0.3\n").unwrap();
        let t = AsTraces::collect(&traces(lines), &p2a(), a(2));
        let recs = classify_routers(&t, &aliases);
        let merged: Vec<_> = recs.iter().filter(|r| r.id == rid("10.2.0.2")).collect();
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].classification, RouterClass::Edge);
        assert_eq!(merged[0].trace_count, 2);
        let without = classify_routers(&t, &AliasMap::default());
        assert!(recs.len() <= without.len());
    }

    #[test]
    fn hub_is_single_heavy_hitter() {
        let lines: String = (0..20)
            .map(|i| {
                format!(
                    "s{i}|10.3.0.1|10.2.0.{},10.2.1.1,10.2.0.{}\n",
                    10 + i,
                    100 + i
                )
            })
            .collect();
        let t = AsTraces::collect(&traces(&lines), &p2a(), a(2));
        let recs = classify_routers(&t, &AliasMap::default());
        let p = find_key_routers(&t, &recs, &AliasMap::default(), 0.9).unwrap();
        assert_eq!(p.heavy, 1);
        assert_eq!(p.edge, 40);
        assert_eq!(p.required, 1);
        assert_eq!(p.selected_kind, SelectedKind::HeavyHitter);
        assert_eq!(p.selected_set, vec![rid("10.2.1.1")]);
        assert_eq!(p.trace_coverage, 1.0);
    }

    #[test]
    fn no_traces_is_an_error() {
        let t = AsTraces::collect(&traces("s|10.3.0.1|10.1.0.1\n"), &p2a(), a(2));
        let err = find_key_routers(&t, &[], &AliasMap::default(), 0.9).unwrap_err();
        assert!(matches!(err, Error::NoTraces(_)));
    }

    #[test]
    fn rollup_sums() {
        let t = AsTraces::collect(&traces("s|10.3.0.1|10.2.0.1,10.2.0.2\n"), &p2a(), a(2));
        let recs = classify_routers(&t, &AliasMap::default());
        let p = find_key_routers(&t, &recs, &AliasMap::default(), 0.9).unwrap();
        let r = placement_rollup(std::slice::from_ref(&p), &CountryMap::default());
        assert_eq!(r.total_required, p.required);
        assert_eq!(r.per_country["unknown"], p.required);
    }
}
