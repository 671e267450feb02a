//! Seeded synthetic input bundles.
//!
//! The AS graph has three tiers: a peering clique at the top, a middle tier
//! buying transit from the top and peering sparsely among itself, and stubs
//! buying transit from the tiers above. RIB entries come from a BGP-style
//! route computation (customer routes over peer routes over provider routes,
//! then shortest, then lowest next-hop ASN) with standard export rules, so
//! every generated RIB path is valley-free.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::net::Ipv4Addr;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::{
    write_relationships, write_rib, write_traces, Hop, RawEdge, RawRelationship, RibEntry,
    RouterTrace,
};
use crate::types::{Asn, Prefix};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthConfig {
    pub seed: u64,
    pub ases: usize,
    pub prefixes: usize,
    pub vantage_points: usize,
    pub traces: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 1,
            ases: 200,
            prefixes: 10,
            vantage_points: 15,
            traces: 2000,
        }
    }
}

const COUNTRIES: [&str; 10] = ["US", "DE", "GB", "NL", "FR", "JP", "BR", "CN", "RU", "IR"];
const CENSORS: [&str; 3] = ["CN", "IR", "RU"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tier {
    Top,
    Middle,
    Stub,
}

/// Generated files, as text, plus the structures they were rendered from.
#[derive(Debug, Clone)]
pub struct SynthBundle {
    pub edges: Vec<RawEdge>,
    pub rib: Vec<RibEntry>,
    pub prefixes: Vec<Prefix>,
    pub traces: Vec<RouterTrace>,
    pub files: Vec<(&'static str, String)>,
}

impl SynthBundle {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| t.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

struct Net {
    asns: Vec<Asn>,
    tier: Vec<Tier>,
    providers: Vec<Vec<usize>>,
    customers: Vec<Vec<usize>>,
    peers: Vec<Vec<usize>>,
}

fn asn_of(i: usize) -> Asn {
    Asn::new(100 + i as u32).expect("nonzero")
}

fn build_net(rng: &mut ChaCha8Rng, n: usize) -> (Net, Vec<RawEdge>) {
    let n = n.max(4);
    let top = (n / 40).clamp(3, 12).min(n - 1);
    let middle = ((n - top) / 5).max(1);
    let tier: Vec<Tier> = (0..n)
        .map(|i| {
            if i < top {
                Tier::Top
            } else if i < top + middle {
                Tier::Middle
            } else {
                Tier::Stub
            }
        })
        .collect();
    let mut net = Net {
        asns: (0..n).map(asn_of).collect(),
        tier,
        providers: vec![Vec::new(); n],
        customers: vec![Vec::new(); n],
        peers: vec![Vec::new(); n],
    };
    let mut edges = Vec::new();
    let mut link = |net: &mut Net, a: usize, b: usize, rel: RawRelationship| {
        match rel {
            RawRelationship::ProviderOf => {
                net.customers[a].push(b);
                net.providers[b].push(a);
            }
            RawRelationship::Peer => {
                net.peers[a].push(b);
                net.peers[b].push(a);
            }
        }
        edges.push(RawEdge {
            a: net.asns[a],
            b: net.asns[b],
            rel,
            line: 0,
        });
    };
    for a in 0..top {
        for b in a + 1..top {
            link(&mut net, a, b, RawRelationship::Peer);
        }
    }
    let top_ids: Vec<usize> = (0..top).collect();
    let middle_ids: Vec<usize> = (top..top + middle).collect();
    for m in top..top + middle {
        let k = rng.gen_range(1..=2);
        for &p in top_ids.choose_multiple(rng, k) {
            link(&mut net, p, m, RawRelationship::ProviderOf);
        }
    }
    for a in top..top + middle {
        for b in a + 1..top + middle {
            if rng.gen_bool(0.08) {
                link(&mut net, a, b, RawRelationship::Peer);
            }
        }
    }
    for s in top + middle..n {
        let k = rng.gen_range(1..=3);
        let mut chosen = BTreeSet::new();
        for _ in 0..k {
            let p = if rng.gen_bool(0.85) {
                *middle_ids.choose(rng).expect("middle tier")
            } else {
                *top_ids.choose(rng).expect("top tier")
            };
            chosen.insert(p);
        }
        for p in chosen {
            link(&mut net, p, s, RawRelationship::ProviderOf);
        }
    }
    // a few stub-to-stub peerings
    let stubs = n - top - middle;
    for _ in 0..stubs / 20 {
        let a = rng.gen_range(top + middle..n);
        let b = rng.gen_range(top + middle..n);
        let linked = net.peers[a].contains(&b)
            || net.providers[a].contains(&b)
            || net.customers[a].contains(&b);
        if a != b && !linked {
            link(&mut net, a.min(b), a.max(b), RawRelationship::Peer);
        }
    }
    (net, edges)
}

#[derive(Clone)]
struct Route {
    // 0 = own / customer, 1 = peer, 2 = provider
    class: u8,
    path: Vec<usize>,
}

impl Route {
    fn key(&self, asns: &[Asn]) -> (u8, usize, Asn) {
        let next = self.path.get(1).map_or(asns[self.path[0]], |&h| asns[h]);
        (self.class, self.path.len(), next)
    }
}

/// BGP-style routes from every AS to `home`.
fn simulate_routes(net: &Net, home: usize) -> Vec<Option<Route>> {
    let n = net.asns.len();
    let mut routes: Vec<Option<Route>> = vec![None; n];
    routes[home] = Some(Route {
        class: 0,
        path: vec![home],
    });
    for _ in 0..=n {
        let mut next = routes.clone();
        let mut changed = false;
        #[allow(clippy::needless_range_loop)]
        for v in 0..n {
            if v == home {
                continue;
            }
            let offers = net.customers[v]
                .iter()
                .map(|&u| (u, 0u8))
                .chain(net.peers[v].iter().map(|&u| (u, 1)))
                .chain(net.providers[v].iter().map(|&u| (u, 2)));
            for (u, class) in offers {
                let Some(r) = &routes[u] else { continue };
                // customers and peers only pass on their own or customer routes
                if class < 2 && r.class != 0 {
                    continue;
                }
                if r.path.contains(&v) {
                    continue;
                }
                let mut path = Vec::with_capacity(r.path.len() + 1);
                path.push(v);
                path.extend_from_slice(&r.path);
                let cand = Route { class, path };
                let better = match &next[v] {
                    None => true,
                    Some(cur) => cand.key(&net.asns) < cur.key(&net.asns),
                };
                if better {
                    next[v] = Some(cand);
                }
            }
        }
        for v in 0..n {
            let same = match (&routes[v], &next[v]) {
                (Some(a), Some(b)) => a.path == b.path,
                (None, None) => true,
                _ => false,
            };
            changed |= !same;
        }
        routes = next;
        if !changed {
            break;
        }
    }
    routes
}

fn as_block(i: usize) -> Ipv4Addr {
    Ipv4Addr::new(100, 64 + (i >> 8) as u8, (i & 255) as u8, 0)
}

fn router_ip(i: usize, router: usize, iface: usize) -> Ipv4Addr {
    let base = u32::from(as_block(i));
    Ipv4Addr::from(base + (router * 2 + iface + 1) as u32)
}

struct RouterPlan {
    edge: usize,
    core: usize,
}

fn plan(tier: Tier) -> RouterPlan {
    match tier {
        Tier::Top => RouterPlan { edge: 24, core: 8 },
        Tier::Middle => RouterPlan { edge: 8, core: 4 },
        Tier::Stub => RouterPlan { edge: 2, core: 1 },
    }
}

pub fn generate(cfg: &SynthConfig) -> SynthBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (net, edges) = build_net(&mut rng, cfg.ases);
    let n = net.asns.len();

    let country: Vec<&str> = (0..n)
        .map(|i| match net.tier[i] {
            // one censoring transit provider at the top
            Tier::Top if i == 1 => "CN",
            _ => COUNTRIES[rng.gen_range(0..COUNTRIES.len())],
        })
        .collect();

    let mut homes: Vec<usize> = (0..n).filter(|&i| net.tier[i] != Tier::Top).collect();
    homes.shuffle(&mut rng);
    homes.truncate(cfg.prefixes.min(homes.len()));
    let prefixes: Vec<Prefix> = (0..homes.len())
        .map(|k| {
            Prefix::new(
                Ipv4Addr::new(198, 18 + (k >> 8) as u8, (k & 255) as u8, 0),
                24,
            )
            .expect("valid prefix")
        })
        .collect();

    let mut vantage: Vec<usize> = (0..n).collect();
    vantage.shuffle(&mut rng);
    vantage.truncate(cfg.vantage_points.min(n));
    vantage.sort_unstable();

    let routes: Vec<Vec<Option<Route>>> = homes.iter().map(|&h| simulate_routes(&net, h)).collect();

    let mut rib = Vec::new();
    for (k, prefix) in prefixes.iter().enumerate() {
        for (vp, &v) in vantage.iter().enumerate() {
            let Some(r) = &routes[k][v] else { continue };
            let mut path: Vec<Asn> = r.path.iter().map(|&i| net.asns[i]).collect();
            if rng.gen_bool(0.1) {
                let last = *path.last().expect("non-empty");
                path.push(last);
            }
            rib.push(RibEntry {
                prefix: *prefix,
                as_path: path,
                source_vantage: format!("rv{vp:02}"),
            });
        }
    }

    // router level
    let plans: Vec<RouterPlan> = net.tier.iter().map(|&t| plan(t)).collect();
    let pick_iface =
        |rng: &mut ChaCha8Rng, i: usize, r: usize| router_ip(i, r, rng.gen_range(0..2));
    let mut traces = Vec::with_capacity(cfg.traces);
    if !homes.is_empty() {
        for _ in 0..cfg.traces {
            let k = rng.gen_range(0..homes.len());
            let src = rng.gen_range(0..n);
            let Some(route) = &routes[k][src] else {
                continue;
            };
            let mut hops = Vec::new();
            let last = route.path.len() - 1;
            for (pos, &asx) in route.path.iter().enumerate() {
                let p = &plans[asx];
                let core = |rng: &mut ChaCha8Rng| {
                    // skewed toward the first core router
                    if rng.gen_bool(0.7) {
                        p.edge
                    } else {
                        p.edge + rng.gen_range(0..p.core)
                    }
                };
                let mut routers = Vec::new();
                if pos > 0 {
                    routers.push(rng.gen_range(0..p.edge));
                }
                routers.push(core(&mut rng));
                if rng.gen_bool(0.3) {
                    routers.push(core(&mut rng));
                }
                if pos < last {
                    routers.push(rng.gen_range(0..p.edge));
                }
                routers.dedup();
                for (j, &r) in routers.iter().enumerate() {
                    if j > 0 && j + 1 < routers.len() && rng.gen_bool(0.02) {
                        let other = rng.gen_range(0..n);
                        hops.push(Hop::Addr(router_ip(other, 0, 0)));
                    }
                    if rng.gen_bool(0.04) {
                        hops.push(Hop::Gap);
                    } else {
                        hops.push(Hop::Addr(pick_iface(&mut rng, asx, r)));
                    }
                }
            }
            let net_addr = u32::from(prefixes[k].network());
            traces.push(RouterTrace {
                source: format!("pl{:03}", rng.gen_range(0..30)),
                destination: Ipv4Addr::from(net_addr + rng.gen_range(1..255)),
                hops,
            });
        }
    }

    let mut files: Vec<(&'static str, String)> = Vec::new();
    files.push(("synth.rels.txt", write_relationships(&edges)));
    files.push(("synth.rib.txt", write_rib(&rib)));
    let mut text = String::new();
    for (k, p) in prefixes.iter().enumerate() {
        let _ = writeln!(text, "{p}|site{k}.example");
    }
    files.push(("synth.prefixes.txt", text));
    let mut text = String::new();
    for (asn, cc) in net.asns.iter().zip(&country) {
        let _ = writeln!(text, "{asn}|{cc}");
    }
    files.push(("synth.countries.txt", text));
    files.push((
        "synth.censors.txt",
        CENSORS.iter().map(|c| format!("{c}\n")).collect(),
    ));
    files.push(("synth.traces.txt", write_traces(&traces)));
    let mut text = String::new();
    for (i, plan) in plans.iter().enumerate() {
        for r in 0..plan.edge + plan.core {
            if (i + r) % 5 != 0 {
                let _ = writeln!(text, "{} {}", router_ip(i, r, 0), router_ip(i, r, 1));
            }
        }
    }
    files.push(("synth.aliases.txt", text));
    let mut text = String::new();
    for i in 0..n {
        let _ = writeln!(text, "{}/24|{}", as_block(i), net.asns[i]);
    }
    for (k, p) in prefixes.iter().enumerate() {
        let _ = writeln!(text, "{}|{}", p, net.asns[homes[k]]);
    }
    files.push(("synth.p2a.txt", text));

    SynthBundle {
        edges,
        rib,
        prefixes,
        traces,
        files,
    }
}
