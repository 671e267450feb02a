//! Corpus-wide analytics: collateral damage of censorship, path frequency
//! against customer-cone size, and deployment cost.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::PathCorpus;
use crate::ingest::CountryMap;
use crate::placement::{fraction, AsFrequencyTable};
use crate::topology::RelationshipGraph;
use crate::types::{Asn, CountryCode};

pub const DEFAULT_UNIT_COST_USD: u64 = 885_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollateralReport {
    pub country: CountryCode,
    /// Paths with at least one AS of the country.
    pub paths_involving: usize,
    /// Of those, paths whose origin AS is outside the country.
    pub foreign_origin: usize,
    /// `foreign_origin / paths_involving`; `None` when no path involves the
    /// country.
    pub fraction: Option<f64>,
    /// Paths that leave the country and come back.
    pub reentrant: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Place {
    Inside,
    Abroad,
    Unknown,
}

/// True when the path enters the country, leaves through ASes of known
/// foreign countries only, and enters again. An AS of unknown country breaks
/// the excursion.
fn is_reentrant(places: &[Place]) -> bool {
    let mut was_inside = false;
    let mut excursion = false;
    for &p in places {
        match p {
            Place::Inside => {
                if excursion {
                    return true;
                }
                was_inside = true;
            }
            Place::Abroad => excursion = was_inside,
            Place::Unknown => {
                was_inside = false;
                excursion = false;
            }
        }
    }
    false
}

pub fn collateral_damage(
    corpus: &PathCorpus,
    countries: &CountryMap,
    country: CountryCode,
) -> Result<CollateralReport> {
    if !countries.knows_country(country) {
        return Err(Error::UnknownCountry(country.to_string()));
    }
    let mut report = CollateralReport {
        country,
        paths_involving: 0,
        foreign_origin: 0,
        fraction: None,
        reentrant: 0,
    };
    for path in corpus.paths() {
        let places: Vec<Place> = path
            .hops
            .iter()
            .map(|&a| match countries.country_of(a) {
                Some(c) if c == country => Place::Inside,
                Some(_) => Place::Abroad,
                None => Place::Unknown,
            })
            .collect();
        if !places.contains(&Place::Inside) {
            continue;
        }
        report.paths_involving += 1;
        if places[0] != Place::Inside {
            report.foreign_origin += 1;
        }
        if is_reentrant(&places) {
            report.reentrant += 1;
        }
    }
    if report.paths_involving > 0 {
        report.fraction = Some(fraction(report.foreign_origin, report.paths_involving));
    }
    Ok(report)
}

pub fn collateral_csv(rows: &[CollateralReport]) -> String {
    let mut out = String::from("country,paths_involving,foreign_origin,fraction,reentrant\n");
    for r in rows {
        let frac = r
            .fraction
            .map_or_else(|| "undefined".to_string(), |f| f.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.country, r.paths_involving, r.foreign_origin, frac, r.reentrant
        );
    }
    out
}

/// 1-based ranks in input order; tied values share their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rank correlation: Pearson correlation of the average ranks.
pub fn spearman_rank(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::UndefinedCorrelation("sequences differ in length"));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two observations"));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::UndefinedCorrelation("NaN observation"));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpearmanReport {
    pub ases: usize,
    pub coefficient: f64,
    pub reference_full_scale: f64,
}

/// Correlates path frequency with customer-cone size over transit ASes
/// (ASes with at least one customer).
pub fn frequency_vs_cone(
    table: &AsFrequencyTable,
    g: &RelationshipGraph,
) -> Result<SpearmanReport> {
    let cones = g.cone_sizes();
    let mut freq = Vec::new();
    let mut cone = Vec::new();
    for (i, &size) in cones.iter().enumerate() {
        if size == 0 {
            continue;
        }
        let asn = g.asn_at(i);
        freq.push(table.get(asn).map_or(0, |r| r.paths_containing) as f64);
        cone.push(size as f64);
    }
    Ok(SpearmanReport {
        ases: freq.len(),
        coefficient: spearman_rank(&freq, &cone)?,
        reference_full_scale: 0.2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeBypassRow {
    pub asn: Asn,
    pub cone_size: usize,
    /// Fraction of corpus paths through the AS.
    pub pct_through_self: f64,
    /// Fraction through an immediate customer but not the AS itself.
    pub pct_through_1hop_only: f64,
}

pub fn cone_bypass(corpus: &PathCorpus, g: &RelationshipGraph, asn: Asn) -> Result<ConeBypassRow> {
    let customers: BTreeSet<Asn> = g.customers_of(asn)?.into_iter().collect();
    let cone_size = g.customer_cone(asn)?.len();
    let (mut total, mut through, mut bypass) = (0, 0, 0);
    for path in corpus.paths() {
        total += 1;
        if path.hops.contains(&asn) {
            through += 1;
        } else if path.hops.iter().any(|h| customers.contains(h)) {
            bypass += 1;
        }
    }
    Ok(ConeBypassRow {
        asn,
        cone_size,
        pct_through_self: fraction(through, total),
        pct_through_1hop_only: fraction(bypass, total),
    })
}

/// The `n` ASes with the largest customer cones, ties by ascending ASN.
pub fn largest_cones(g: &RelationshipGraph, n: usize) -> Vec<Asn> {
    let sizes = g.cone_sizes();
    let mut idx: Vec<usize> = (0..g.len()).filter(|&i| sizes[i] > 0).collect();
    idx.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    idx.into_iter().take(n).map(|i| g.asn_at(i)).collect()
}

pub fn cone_bypass_csv(rows: &[ConeBypassRow]) -> String {
    let mut out = String::from("asn,cone_size,pct_through_self,pct_through_1hop_only\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.asn, r.cone_size, r.pct_through_self, r.pct_through_1hop_only
        );
    }
    out
}

/// Total deployment cost in USD.
pub fn cost_estimate(total_routers: u64, unit_cost_usd: u64) -> u128 {
    u128::from(total_routers) * u128::from(unit_cost_usd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::parse_paths;
    use crate::ingest::{parse_countries, parse_relationships};
    use crate::topology::build_graph;

    fn a(v: u32) -> Asn {
        Asn::new(v).unwrap()
    }

    fn cc(s: &str) -> CountryCode {
        s.parse().unwrap()
    }

    fn countries(s: &str) -> CountryMap {
        CountryMap {
            mapping: parse_countries(s).0,
            censor_set: Default::default(),
        }
    }

    #[test]
    fn single_country_has_no_collateral() {
        let c = parse_paths("10.0.0.0/8|1|1 2 3|0|1\n10.0.0.0/8|4|4 3|0|1\n").unwrap();
        let m = countries("1|CN\n2|CN\n3|CN\n4|CN\n");
        let r = collateral_damage(&c, &m, cc("CN")).unwrap();
        assert_eq!(r.paths_involving, 2);
        assert_eq!(r.fraction, Some(0.0));
        assert_eq!(r.reentrant, 0);
    }

    #[test]
    fn foreign_origins_and_reentry() {
        let c = parse_paths(
            "10.0.0.0/8|1|1 2 3|0|1\n\
             10.0.0.0/8|5|5 2 6 3|0|1\n\
             10.0.0.0/8|7|7 2 8 3|0|1\n\
             10.0.0.0/8|9|9 6|0|1\n",
        )
        .unwrap();
        // 2 and 3 in CN, 6 in US, 8 unknown
        let m = countries("1|US\n2|CN\n3|CN\n5|CN\n6|US\n7|DE\n9|DE\n");
        let r = collateral_damage(&c, &m, cc("CN")).unwrap();
        assert_eq!(r.paths_involving, 3);
        assert_eq!(r.foreign_origin, 2);
        // 5 2 6 3 leaves for the US and returns; 7 2 8 3 crosses an unknown AS
        assert_eq!(r.reentrant, 1);
        assert!(collateral_damage(&c, &m, cc("FR")).is_err());
    }

    #[test]
    fn untouched_country_is_undefined() {
        let c = parse_paths("10.0.0.0/8|1|1 2|0|1\n").unwrap();
        let m = countries("1|US\n2|US\n9|RU\n");
        let r = collateral_damage(&c, &m, cc("RU")).unwrap();
        assert_eq!(r.fraction, None);
        assert!(collateral_csv(&[r]).contains("RU,0,0,undefined,0"));
    }

    #[test]
    fn spearman_extremes() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        assert_eq!(spearman_rank(&x, &x).unwrap(), 1.0);
        assert_eq!(spearman_rank(&x, &rev).unwrap(), -1.0);
        assert!(spearman_rank(&[1.0], &[1.0]).is_err());
        assert!(spearman_rank(&[1.0, 2.0], &[1.0]).is_err());
        assert!(spearman_rank(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 20.0, 5.0]),
            vec![2.0, 3.5, 3.5, 1.0]
        );
    }

    #[test]
    fn bypass_fractions() {
        let (e, _) = parse_relationships("1|2|-1\n1|3|-1\n2|4|-1\n").unwrap();
        let (g, _) = build_graph(&e).unwrap();
        let c =
            parse_paths("10.0.0.0/8|4|4 2 1 3|1|1\n10.0.0.0/8|5|5 2 4|1|1\n10.0.0.0/8|6|6 7|0|1\n")
                .unwrap();
        let r = cone_bypass(&c, &g, a(1)).unwrap();
        assert_eq!(r.cone_size, 3);
        assert_eq!(r.pct_through_self, 1.0 / 3.0);
        assert_eq!(r.pct_through_1hop_only, 1.0 / 3.0);
        assert!(cone_bypass(&c, &g, a(99)).is_err());
        assert_eq!(largest_cones(&g, 5), vec![a(1), a(2)]);
    }

    #[test]
    fn cost() {
        assert_eq!(cost_estimate(11_709, DEFAULT_UNIT_COST_USD), 10_362_465_000);
        assert_eq!(cost_estimate(0, DEFAULT_UNIT_COST_USD), 0);
        assert_eq!(cost_estimate(1, DEFAULT_UNIT_COST_USD), 885_000);
    }
}
