//! Library results checked against brute-force recomputation.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;

use common::*;
use decoymap::analysis::{collateral_damage, cone_bypass, largest_cones};
use decoymap::inference::{build_corpus, extract_sure_paths, infer_paths, PathCorpus};
use decoymap::ingest::{
    parse_alias_map, parse_censors, parse_countries, parse_p2a, parse_prefixes,
    parse_relationships, parse_rib, parse_traces, AliasMap, CountryMap, RibEntry, RouterTrace,
};
use decoymap::placement::{cdf_series, find_key_ases, rank_ases};
use decoymap::routermap::{
    classify_routers, find_key_routers, AsTraces, PrefixToAsMap, RouterClass,
};
use decoymap::synth::{generate, SynthBundle, SynthConfig};
use decoymap::topology::{build_graph, RelationshipGraph};
use decoymap::{Asn, Prefix, RouterId};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Loaded {
    bundle: SynthBundle,
    g: RelationshipGraph,
    rib: Vec<RibEntry>,
    corpus: PathCorpus,
    countries: CountryMap,
}

fn load(seed: u64, ases: usize) -> Loaded {
    let bundle = generate(&SynthConfig {
        seed,
        ases,
        traces: 1500,
        ..SynthConfig::default()
    });
    let (edges, _) = parse_relationships(bundle.file("synth.rels.txt").unwrap()).unwrap();
    let (g, _) = build_graph(&edges).unwrap();
    let (rib, _) = parse_rib(bundle.file("synth.rib.txt").unwrap());
    let (targets, _) = parse_prefixes(bundle.file("synth.prefixes.txt").unwrap());
    let corpus = build_corpus(&targets, &rib, &g);
    let countries = CountryMap {
        mapping: parse_countries(bundle.file("synth.countries.txt").unwrap()).0,
        censor_set: parse_censors(bundle.file("synth.censors.txt").unwrap()).0,
    };
    Loaded {
        bundle,
        g,
        rib,
        corpus,
        countries,
    }
}

#[test]
fn fixture_prefers_shorter_inferred_path() {
    let g = tree7_graph();
    let p: Prefix = "192.0.2.0/24".parse().unwrap();
    let rib = vec![RibEntry {
        prefix: p,
        as_path: tree7_path("C-F"),
        source_vantage: String::new(),
    }];
    let slice = infer_paths(p, &extract_sure_paths(&rib, p), &g);
    let d = &slice.paths[&tree7('D')];
    assert_eq!(d.hops, tree7_path("D-B-C-F"));
    assert_eq!((d.uncertainty, d.frequency), (2, 1));
    assert_eq!(slice.paths[&tree7('A')].hops, tree7_path("A-C-F"));
    assert_eq!(slice.paths[&tree7('G')].hops, tree7_path("G-C-F"));
    assert_eq!(slice.paths.len(), 6);
}

#[test]
fn sure_path_frequencies_match_recount() {
    let l = load(21, 120);
    for target in &l.bundle.prefixes {
        let entries: Vec<&RibEntry> = l.rib.iter().filter(|e| e.prefix == *target).collect();
        let sure = extract_sure_paths(&l.rib, *target);
        let mut expected: BTreeSet<Vec<Asn>> = BTreeSet::new();
        for e in &entries {
            for i in 0..e.as_path.len() {
                expected.insert(e.as_path[i..].to_vec());
            }
        }
        let got: BTreeSet<Vec<Asn>> = sure.iter().map(|r| r.hops.clone()).collect();
        assert_eq!(got, expected);
        for r in sure.iter() {
            let count = entries
                .iter()
                .filter(|e| e.as_path.ends_with(&r.hops))
                .count();
            assert_eq!(r.frequency as usize, count, "{:?}", r.hops);
            assert_eq!(r.uncertainty, 0);
        }
    }
}

#[test]
fn inference_matches_oracle_with_several_homes() {
    let mut mismatches = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let edges = random_edges(&mut rng, 9, 18);
        let (g, _) = build_graph(&edges).unwrap();
        let vf = g.enumerate_valley_free(g.len()).unwrap();
        let (targets, mut rib) = random_rib(&mut rng, &g, &vf, 1);
        // a second origin announcing the same prefix
        let other = *g.asns().choose(&mut rng).unwrap();
        let toward: Vec<&Vec<Asn>> = vf.iter().filter(|p| *p.last().unwrap() == other).collect();
        for _ in 0..2 {
            rib.push(RibEntry {
                prefix: targets[0].prefix,
                as_path: (*toward.choose(&mut rng).unwrap()).clone(),
                source_vantage: String::new(),
            });
        }
        let corpus = build_corpus(&targets, &rib, &g);
        let paths: Vec<Vec<Asn>> = rib.iter().map(|e| e.as_path.clone()).collect();
        let want = oracle_choices(&vf, &paths, targets[0].prefix);
        if want != corpus.slices[0].paths {
            mismatches += 1;
        }
    }
    assert_eq!(mismatches, 0);
}

#[test]
fn frequency_table_matches_membership_recount() {
    let l = load(22, 150);
    let table = rank_ases(&l.corpus);
    let mut counts: BTreeMap<Asn, usize> = BTreeMap::new();
    for p in l.corpus.paths() {
        counts.entry(p.origin()).or_default();
        for a in &p.hops[1..] {
            *counts.entry(*a).or_default() += 1;
        }
    }
    assert_eq!(table.rows.len(), counts.len());
    for row in &table.rows {
        assert_eq!(row.paths_containing, counts[&row.asn]);
    }
    let mut order: Vec<(Asn, usize)> = counts.into_iter().collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let ranked: Vec<Asn> = table.rows.iter().map(|r| r.asn).collect();
    assert_eq!(ranked, order.iter().map(|o| o.0).collect::<Vec<_>>());
    assert!(table.rows.iter().enumerate().all(|(i, r)| r.rank == i + 1));
}

#[test]
fn placement_matches_union_recount() {
    let l = load(23, 150);
    let table = rank_ases(&l.corpus);
    for t in [0.3, 0.6, 0.9] {
        let report = find_key_ases(&table, &l.corpus, t, &l.countries).unwrap();
        let chosen: BTreeSet<Asn> = report.selected_asns().into_iter().collect();
        let covered = l
            .corpus
            .paths()
            .filter(|p| p.hops[1..].iter().any(|a| chosen.contains(a)))
            .count();
        assert_eq!(report.covered_paths, covered);
        assert_eq!(report.total_paths, l.corpus.total_paths());
        assert!(chosen.iter().all(|a| !l.countries.is_censor(*a)));
        let sum: usize = report.selected.iter().map(|s| s.unique_added).sum();
        assert_eq!(sum, covered);
        // walk order: selected and excluded together form a prefix of the ranking
        let walked = report.selected.len() + report.excluded_censor.len();
        let mut ranks: Vec<usize> = report
            .selected
            .iter()
            .map(|s| s.rank)
            .chain(report.excluded_censor.iter().map(|e| e.rank))
            .collect();
        ranks.sort_unstable();
        assert_eq!(ranks, (1..=walked).collect::<Vec<_>>());
    }
    let cdf = cdf_series(&table, &l.corpus, 20);
    let mut seen = BTreeSet::new();
    let mut union = 0;
    for row in &cdf {
        seen.insert(row.asn);
        let now = l
            .corpus
            .paths()
            .filter(|p| p.hops[1..].iter().any(|a| seen.contains(a)))
            .count();
        assert_eq!(row.unique_added, now - union);
        union = now;
    }
}

/// Independent trimming: linear longest-prefix scan, first to last in-AS hop.
fn naive_router_sets(
    traces: &[RouterTrace],
    p2a: &[(Prefix, Asn)],
    aliases: &AliasMap,
    target: Asn,
) -> Vec<(Vec<RouterId>, BTreeSet<RouterId>)> {
    let owner = |ip: Ipv4Addr| {
        p2a.iter()
            .filter(|(p, _)| p.contains(ip))
            .max_by_key(|(p, _)| p.len())
            .map(|(_, a)| *a)
    };
    let mut out = Vec::new();
    for t in traces {
        let addrs: Vec<Ipv4Addr> = t.hops.iter().filter_map(|h| h.addr()).collect();
        let inside: Vec<usize> = (0..addrs.len())
            .filter(|&i| owner(addrs[i]) == Some(target))
            .collect();
        let (Some(&first), Some(&last)) = (inside.first(), inside.last()) else {
            continue;
        };
        let routers: Vec<RouterId> = addrs[first..=last]
            .iter()
            .filter(|a| owner(**a) == Some(target))
            .map(|a| aliases.resolve(*a))
            .collect();
        let set = routers.iter().copied().collect();
        out.push((routers, set));
    }
    out
}

#[test]
fn router_selection_matches_recount() {
    let l = load(24, 120);
    let (traces, _) = parse_traces(l.bundle.file("synth.traces.txt").unwrap());
    let (aliases, _) = parse_alias_map(l.bundle.file("synth.aliases.txt").unwrap()).unwrap();
    let (p2a_entries, _) = parse_p2a(l.bundle.file("synth.p2a.txt").unwrap()).unwrap();
    let p2a = PrefixToAsMap::new(&p2a_entries).unwrap();
    let table = rank_ases(&l.corpus);
    let mut checked = 0;
    for row in table.rows.iter().take(8) {
        let naive = naive_router_sets(&traces, &p2a_entries, &aliases, row.asn);
        let at = AsTraces::collect(&traces, &p2a, row.asn);
        let records = classify_routers(&at, &aliases);
        let Ok(rp) = find_key_routers(&at, &records, &aliases, 0.9) else {
            assert!(naive.is_empty());
            continue;
        };
        checked += 1;
        assert_eq!(rp.traces, naive.len());
        let edges: BTreeSet<RouterId> = naive
            .iter()
            .flat_map(|(r, _)| [r[0], *r.last().unwrap()])
            .collect();
        let got_edges: BTreeSet<RouterId> = records
            .iter()
            .filter(|r| r.classification == RouterClass::Edge)
            .map(|r| r.id)
            .collect();
        assert_eq!(got_edges, edges);
        let mut counts: BTreeMap<RouterId, usize> = BTreeMap::new();
        for (_, set) in &naive {
            for r in set {
                *counts.entry(*r).or_default() += 1;
            }
        }
        let mut order: Vec<(RouterId, usize)> = counts.into_iter().collect();
        order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut chosen = BTreeSet::new();
        let mut heavy = 0;
        for (r, _) in order {
            chosen.insert(r);
            heavy += 1;
            let covered = naive
                .iter()
                .filter(|(_, s)| !s.is_disjoint(&chosen))
                .count();
            if covered as f64 / naive.len() as f64 >= 0.9 {
                break;
            }
        }
        assert_eq!(rp.heavy, heavy);
        assert_eq!(rp.required, heavy.min(edges.len()));
    }
    assert!(checked > 0);
}

#[test]
fn collateral_and_bypass_match_recount() {
    let l = load(25, 150);
    for cc in l.countries.censor_set.iter().copied() {
        let Ok(r) = collateral_damage(&l.corpus, &l.countries, cc) else {
            continue;
        };
        let involving: Vec<_> = l
            .corpus
            .paths()
            .filter(|p| {
                p.hops
                    .iter()
                    .any(|a| l.countries.country_of(*a) == Some(cc))
            })
            .collect();
        let foreign = involving
            .iter()
            .filter(|p| l.countries.country_of(p.origin()) != Some(cc))
            .count();
        assert_eq!(r.paths_involving, involving.len());
        assert_eq!(r.foreign_origin, foreign);
        if involving.is_empty() {
            assert_eq!(r.fraction, None);
        } else {
            assert_eq!(r.fraction, Some(foreign as f64 / involving.len() as f64));
        }
    }
    let total = l.corpus.total_paths() as f64;
    for asn in largest_cones(&l.g, 5) {
        let row = cone_bypass(&l.corpus, &l.g, asn).unwrap();
        let customers = l.g.customers_of(asn).unwrap();
        let through = l.corpus.paths().filter(|p| p.hops.contains(&asn)).count();
        let only = l
            .corpus
            .paths()
            .filter(|p| !p.hops.contains(&asn) && p.hops.iter().any(|h| customers.contains(h)))
            .count();
        let neither = l.corpus.paths().count() - through - only;
        assert_eq!(row.pct_through_self, through as f64 / total);
        assert_eq!(row.pct_through_1hop_only, only as f64 / total);
        assert_eq!(through + only + neither, l.corpus.total_paths());
        assert_eq!(row.cone_size, l.g.customer_cone(asn).unwrap().len());
    }
}
