#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::{Command, Output};

use decoymap::inference::PathRecord;
use decoymap::ingest::{parse_relationships, RawEdge, RawRelationship, RibEntry, TargetPrefix};
use decoymap::topology::{build_graph, RelationshipGraph};
use decoymap::{Asn, Prefix};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn asn(n: u32) -> Asn {
    Asn::new(n).unwrap()
}

/// Letter names used by the seven-AS fixture.
pub fn tree7(letter: char) -> Asn {
    asn(64501 + (letter as u32 - 'A' as u32))
}

pub fn tree7_path(s: &str) -> Vec<Asn> {
    s.split('-')
        .map(|l| tree7(l.chars().next().unwrap()))
        .collect()
}

pub fn tree7_graph() -> RelationshipGraph {
    let text = std::fs::read_to_string(fixture("tree7.rels.txt")).unwrap();
    let (edges, _) = parse_relationships(&text).unwrap();
    build_graph(&edges).unwrap().0
}

pub fn prefix(i: usize) -> Prefix {
    format!("10.{}.{}.0/24", i / 256, i % 256).parse().unwrap()
}

/// Random relationship graph with `3..=max_n` ASes and at most `max_edges`
/// links. Provider cycles are allowed.
pub fn random_edges<R: Rng>(rng: &mut R, max_n: usize, max_edges: usize) -> Vec<RawEdge> {
    let n = rng.gen_range(3..=max_n);
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for a in 0..n as u32 {
        for b in a + 1..n as u32 {
            pairs.push((a, b));
        }
    }
    pairs.shuffle(rng);
    let m = rng.gen_range(n - 1..=max_edges.min(pairs.len()));
    pairs
        .into_iter()
        .take(m)
        .map(|(a, b)| {
            let roll = rng.gen_range(0..10);
            let (a, b, rel) = match roll {
                0..=3 => (a, b, RawRelationship::ProviderOf),
                4..=7 => (b, a, RawRelationship::ProviderOf),
                _ => (a, b, RawRelationship::Peer),
            };
            RawEdge {
                a: asn(1 + a),
                b: asn(1 + b),
                rel,
                line: 0,
            }
        })
        .collect()
}

/// Random loop-free walk of up to `max_len` ASes ending at `home`, ignoring
/// relationship types.
pub fn random_walk_to<R: Rng>(
    rng: &mut R,
    g: &RelationshipGraph,
    home: Asn,
    max_len: usize,
) -> Vec<Asn> {
    let mut path = vec![home];
    let mut cur = g.index_of(home).unwrap();
    let len = rng.gen_range(1..=max_len);
    while path.len() < len {
        let options: Vec<usize> = g
            .adjacent(cur)
            .iter()
            .map(|&(w, _)| w)
            .filter(|&w| !path.contains(&g.asn_at(w)))
            .collect();
        let Some(&next) = options.choose(rng) else {
            break;
        };
        path.push(g.asn_at(next));
        cur = next;
    }
    path.reverse();
    path
}

/// RIB entries for `prefixes` prefixes: mostly valley-free paths toward a
/// random home, some arbitrary walks.
pub fn random_rib<R: Rng>(
    rng: &mut R,
    g: &RelationshipGraph,
    valley_free: &BTreeSet<Vec<Asn>>,
    prefixes: usize,
) -> (Vec<TargetPrefix>, Vec<RibEntry>) {
    let mut targets = Vec::new();
    let mut rib = Vec::new();
    for k in 0..prefixes {
        let home = *g.asns().choose(rng).unwrap();
        let p = prefix(k);
        targets.push(TargetPrefix {
            prefix: p,
            label: None,
        });
        let toward: Vec<&Vec<Asn>> = valley_free
            .iter()
            .filter(|v| *v.last().unwrap() == home)
            .collect();
        for _ in 0..rng.gen_range(0..6) {
            let path = if rng.gen_bool(0.8) {
                (*toward.choose(rng).unwrap()).clone()
            } else {
                random_walk_to(rng, g, home, 5)
            };
            rib.push(RibEntry {
                prefix: p,
                as_path: path,
                source_vantage: String::new(),
            });
        }
    }
    (targets, rib)
}

/// Brute-force choice for every origin: all valley-free simple paths that end
/// in a RIB suffix, ranked by length, uncertainty, frequency, then hops. ASes
/// announcing the prefix themselves get no path.
pub fn oracle_choices(
    valley_free: &BTreeSet<Vec<Asn>>,
    rib_paths: &[Vec<Asn>],
    prefix: Prefix,
) -> BTreeMap<Asn, PathRecord> {
    let mut sure: BTreeSet<&[Asn]> = BTreeSet::new();
    for p in rib_paths {
        for i in 0..p.len() {
            sure.insert(&p[i..]);
        }
    }
    let freq = |s: &[Asn]| rib_paths.iter().filter(|p| p.ends_with(s)).count() as u32;
    let homes: BTreeSet<Asn> = rib_paths.iter().filter_map(|p| p.last().copied()).collect();
    let mut best: BTreeMap<Asn, PathRecord> = BTreeMap::new();
    for p in valley_free
        .iter()
        .filter(|p| p.len() >= 2 && !homes.contains(&p[0]))
    {
        let Some(l) = (1..=p.len())
            .rev()
            .find(|&l| sure.contains(&p[p.len() - l..]))
        else {
            continue;
        };
        let cand = PathRecord {
            prefix,
            hops: p.clone(),
            uncertainty: (p.len() - l) as u32,
            frequency: freq(&p[p.len() - l..]),
        };
        let key = |r: &PathRecord| {
            (
                r.hops.len(),
                r.uncertainty,
                Reverse(r.frequency),
                r.hops.clone(),
            )
        };
        match best.get(&p[0]) {
            Some(cur) if key(cur) <= key(&cand) => {}
            _ => {
                best.insert(p[0], cand);
            }
        }
    }
    best
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_decoymap")
}

pub fn run_cli(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

/// All files under `dir`, keyed by relative path.
pub fn tree(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(dir)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}
