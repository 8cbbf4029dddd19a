//! Weekly binary directed trading networks.
//!
//! A week's trades form a sociomatrix: entry (i, j) is 1 when trader i sold
//! to trader j at least once during that week, with the diagonal fixed at
//! zero. Ingestion bins raw transaction records into ISO-8601 weeks (Monday
//! start) over a fixed trader roster; weeks without any transaction between
//! the first and last record still appear, as all-zero matrices.

use std::collections::BTreeMap;

use chrono::{Datelike, Days, NaiveDate, Weekday};

use crate::error::{Error, Result};
use crate::math;

pub mod io;

/// Fixed trader roster; defines row/column order for every matrix in a series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roster {
    ids: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Roster {
    pub fn new(ids: Vec<String>) -> Result<Self> {
        if ids.len() < 2 {
            return Err(Error::invalid("roster must contain at least two traders"));
        }
        let mut index = BTreeMap::new();
        for (i, id) in ids.iter().enumerate() {
            if id.is_empty() {
                return Err(Error::invalid("empty trader identifier"));
            }
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate trader identifier '{id}'")));
            }
        }
        Ok(Roster { ids, index })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}

/// One week's n x n binary directed adjacency; diagonal is zero by convention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sociomatrix {
    n: usize,
    bits: Vec<u8>,
}

impl Sociomatrix {
    pub fn zeros(n: usize) -> Self {
        Sociomatrix { n, bits: vec![0; n * n] }
    }

    /// Builds from dense 0/1 rows, validating shape, entries and diagonal.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Sociomatrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!(
                    "row {i} has length {} in a {n}-trader matrix",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 if i != j => m.bits[i * n + j] = 1,
                    1 => return Err(Error::invalid(format!("nonzero diagonal at ({i},{i})"))),
                    _ => return Err(Error::invalid(format!("non-binary entry at ({i},{j})"))),
                }
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j] != 0
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        assert!(i != j || !v, "diagonal entries must stay zero");
        self.bits[i * self.n + j] = u8::from(v);
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    /// Iterates over (i, j) pairs with a link, row-major order.
    pub fn ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0)
            .map(move |(idx, _)| (idx / n, idx % n))
    }
}

/// A time series of sociomatrices over a common roster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSeries {
    pub roster: Roster,
    pub periods: Vec<String>,
    pub weeks: Vec<Sociomatrix>,
}

impl NetworkSeries {
    pub fn new(roster: Roster, periods: Vec<String>, weeks: Vec<Sociomatrix>) -> Result<Self> {
        if weeks.is_empty() {
            return Err(Error::invalid("series must contain at least one week"));
        }
        if periods.len() != weeks.len() {
            return Err(Error::invalid(format!(
                "{} period labels for {} weeks",
                periods.len(),
                weeks.len()
            )));
        }
        for w in &weeks {
            if w.n() != roster.len() {
                return Err(Error::invalid(format!(
                    "matrix dimension {} does not match roster size {}",
                    w.n(),
                    roster.len()
                )));
            }
        }
        for pair in periods.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::invalid(format!(
                    "period labels must be strictly increasing ('{}' >= '{}')",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(NetworkSeries { roster, periods, weeks })
    }

    pub fn n(&self) -> usize {
        self.roster.len()
    }

    pub fn t_len(&self) -> usize {
        self.weeks.len()
    }

    /// The sub-series of the first `t` weeks (same roster).
    pub fn prefix(&self, t: usize) -> Result<NetworkSeries> {
        if t == 0 || t > self.t_len() {
            return Err(Error::invalid(format!(
                "prefix length {t} out of range 1..={}",
                self.t_len()
            )));
        }
        NetworkSeries::new(
            self.roster.clone(),
            self.periods[..t].to_vec(),
            self.weeks[..t].to_vec(),
        )
    }
}

/// A raw transaction: on `date`, `seller` sold to `buyer`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeRecord {
    pub date: NaiveDate,
    pub seller: String,
    pub buyer: String,
}

/// Result of ingestion, with counts of records that did not produce links.
#[derive(Debug, Clone)]
pub struct IngestReport {
    pub series: NetworkSeries,
    /// Records whose seller or buyer is not on the roster.
    pub skipped_off_roster: usize,
    /// Records with seller = buyer (self-trades never produce links).
    pub dropped_self_loops: usize,
}

fn week_monday(d: NaiveDate) -> NaiveDate {
    let w = d.iso_week();
    NaiveDate::from_isoywd_opt(w.year(), w.week(), Weekday::Mon).unwrap()
}

/// ISO 8601 week label, e.g. "2005-W01". Lexicographic order equals
/// chronological order.
fn week_label(monday: NaiveDate) -> String {
    let w = monday.iso_week();
    format!("{:04}-W{:02}", w.year(), w.week())
}

/// Bins transaction records into weekly sociomatrices over `roster`.
///
/// Every ISO week between the first and last record gets a matrix; duplicate
/// trades within a week collapse to a single link. Self-trades are dropped
/// and off-roster trades skipped, both with counts reported.
pub fn ingest(records: &[EdgeRecord], roster: &Roster) -> Result<IngestReport> {
    if records.is_empty() {
        return Err(Error::invalid("no transaction records to ingest"));
    }
    let first = records.iter().map(|r| r.date).min().unwrap();
    let last = records.iter().map(|r| r.date).max().unwrap();

    let mut mondays = Vec::new();
    let mut d = week_monday(first);
    let end = week_monday(last);
    while d <= end {
        mondays.push(d);
        d = d.checked_add_days(Days::new(7)).unwrap();
    }
    let week_of: BTreeMap<NaiveDate, usize> =
        mondays.iter().enumerate().map(|(t, &m)| (m, t)).collect();

    let n = roster.len();
    let mut weeks = vec![Sociomatrix::zeros(n); mondays.len()];
    let mut skipped = 0usize;
    let mut dropped = 0usize;
    for r in records {
        if r.seller == r.buyer {
            dropped += 1;
            continue;
        }
        match (roster.position(&r.seller), roster.position(&r.buyer)) {
            (Some(i), Some(j)) => {
                let t = week_of[&week_monday(r.date)];
                weeks[t].set(i, j, true);
            }
            _ => skipped += 1,
        }
    }

    let periods = mondays.into_iter().map(week_label).collect();
    let series = NetworkSeries::new(roster.clone(), periods, weeks)?;
    Ok(IngestReport { series, skipped_off_roster: skipped, dropped_self_loops: dropped })
}

/// Descriptive statistics of one weekly network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSummary {
    /// Traders with at least one incident link (in or out).
    pub active_traders: usize,
    /// Mean total degree (in + out), i.e. 2 * links / n.
    pub mean_degree: f64,
    pub max_in_degree: usize,
    pub max_out_degree: usize,
    /// Pearson correlation of the in- and out-degree vectors; None when
    /// undefined (see below).
    pub degree_correlation: Option<f64>,
    /// Global transitivity of the symmetrized graph:
    /// 3 * triangles / connected triples (0 when there are no triples).
    pub clustering_coefficient: f64,
    /// Fraction of realized ordered pairs, ones / (n(n-1)).
    pub link_probability: f64,
    /// Newman degree assortativity of the symmetrized graph; None when
    /// degenerate (no links, or constant degrees).
    pub assortativity_by_degree: Option<f64>,
}

/// Computes all summary statistics of one sociomatrix.
///
/// Degenerate degree correlations: an empty graph reports None; a graph whose
/// in-degree vector equals its out-degree vector elementwise (e.g. any
/// regular digraph) reports 1.0 even when both are constant, since the
/// vectors are identical; a single constant vector otherwise reports None.
pub fn network_summary(m: &Sociomatrix) -> NetworkSummary {
    let n = m.n();
    assert!(n >= 2, "summary needs at least two traders");
    let mut in_deg = vec![0usize; n];
    let mut out_deg = vec![0usize; n];
    for (i, j) in m.ones() {
        out_deg[i] += 1;
        in_deg[j] += 1;
    }
    let links = m.count_ones();
    let active = (0..n).filter(|&i| in_deg[i] + out_deg[i] > 0).count();

    let in_f: Vec<f64> = in_deg.iter().map(|&d| d as f64).collect();
    let out_f: Vec<f64> = out_deg.iter().map(|&d| d as f64).collect();
    let degree_correlation = if links == 0 {
        None
    } else if in_deg == out_deg {
        Some(1.0)
    } else {
        math::pearson(&in_f, &out_f)
    };

    // Symmetrized graph for clustering and assortativity.
    let mut sym = vec![false; n * n];
    for (i, j) in m.ones() {
        sym[i * n + j] = true;
        sym[j * n + i] = true;
    }
    let sym_deg: Vec<usize> =
        (0..n).map(|i| (0..n).filter(|&j| sym[i * n + j]).count()).collect();

    let mut triangles = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            if !sym[i * n + j] {
                continue;
            }
            for k in (j + 1)..n {
                if sym[i * n + k] && sym[j * n + k] {
                    triangles += 1;
                }
            }
        }
    }
    let triples: usize = sym_deg.iter().map(|&d| d * (d.saturating_sub(1)) / 2).sum();
    let clustering = if triples == 0 { 0.0 } else { 3.0 * triangles as f64 / triples as f64 };

    let assortativity = degree_assortativity(&sym, &sym_deg, n);

    NetworkSummary {
        active_traders: active,
        mean_degree: 2.0 * links as f64 / n as f64,
        max_in_degree: in_deg.iter().copied().max().unwrap_or(0),
        max_out_degree: out_deg.iter().copied().max().unwrap_or(0),
        degree_correlation,
        clustering_coefficient: clustering,
        link_probability: links as f64 / (n * (n - 1)) as f64,
        assortativity_by_degree: assortativity,
    }
}

/// Newman degree assortativity over undirected edges of the symmetrized
/// graph. None when there are no edges or all endpoint degrees coincide.
fn degree_assortativity(sym: &[bool], deg: &[usize], n: usize) -> Option<f64> {
    let mut m_edges = 0.0f64;
    let (mut s1, mut s2, mut s3) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        for j in (i + 1)..n {
            if sym[i * n + j] {
                let (dj, dk) = (deg[i] as f64, deg[j] as f64);
                m_edges += 1.0;
                s1 += 0.5 * (dj + dk);
                s2 += 0.5 * (dj * dj + dk * dk);
                s3 += dj * dk;
            }
        }
    }
    if m_edges == 0.0 {
        return None;
    }
    let mu = s1 / m_edges;
    let var = s2 / m_edges - mu * mu;
    if var <= 1e-12 * (1.0 + mu * mu) {
        return None;
    }
    Some((s3 / m_edges - mu * mu) / var)
}

/// Per-week summaries of a series.
pub fn summary_series(s: &NetworkSeries) -> Vec<NetworkSummary> {
    s.weeks.iter().map(network_summary).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn rec(d: &str, s: &str, b: &str) -> EdgeRecord {
        EdgeRecord { date: date(d), seller: s.into(), buyer: b.into() }
    }

    fn roster(ids: &[&str]) -> Roster {
        Roster::new(ids.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn single_record_single_week() {
        let r = roster(&["A", "B"]);
        let rep = ingest(&[rec("2005-01-05", "A", "B")], &r).unwrap();
        assert_eq!(rep.series.t_len(), 1);
        assert_eq!(rep.series.periods[0], "2005-W01");
        assert!(rep.series.weeks[0].get(0, 1));
        assert!(!rep.series.weeks[0].get(1, 0));
        assert_eq!(rep.skipped_off_roster, 0);
    }

    #[test]
    fn self_trade_dropped() {
        let r = roster(&["A", "B"]);
        let rep = ingest(&[rec("2005-01-05", "A", "A"), rec("2005-01-05", "A", "B")], &r).unwrap();
        assert_eq!(rep.dropped_self_loops, 1);
        assert_eq!(rep.series.weeks[0].count_ones(), 1);
    }

    #[test]
    fn off_roster_skipped_with_count() {
        let r = roster(&["A", "B"]);
        let rep = ingest(&[rec("2005-01-05", "A", "B"), rec("2005-01-05", "Z", "B")], &r).unwrap();
        assert_eq!(rep.skipped_off_roster, 1);
        assert_eq!(rep.series.weeks[0].count_ones(), 1);
    }

    // Hand enumeration: five records in two ISO weeks, one duplicate pair.
    // 2005-01-03..09 is 2005-W01, 2005-01-10..16 is 2005-W02.
    #[test]
    fn five_records_two_weeks_duplicate_collapsed() {
        let r = roster(&["A", "B", "C"]);
        let recs = [
            rec("2005-01-03", "A", "B"),
            rec("2005-01-05", "B", "C"),
            rec("2005-01-05", "A", "B"), // duplicate of the first
            rec("2005-01-11", "C", "A"),
            rec("2005-01-12", "A", "C"),
        ];
        let rep = ingest(&recs, &r).unwrap();
        let s = &rep.series;
        assert_eq!(s.t_len(), 2);
        assert_eq!(s.periods, vec!["2005-W01", "2005-W02"]);
        assert_eq!(s.weeks[0].count_ones(), 2);
        assert!(s.weeks[0].get(0, 1) && s.weeks[0].get(1, 2));
        assert_eq!(s.weeks[1].count_ones(), 2);
        assert!(s.weeks[1].get(2, 0) && s.weeks[1].get(0, 2));
    }

    #[test]
    fn gap_weeks_appear_as_zero_matrices() {
        let r = roster(&["A", "B"]);
        // W01 and W03 of 2005; W02 has no records.
        let rep = ingest(&[rec("2005-01-04", "A", "B"), rec("2005-01-18", "B", "A")], &r).unwrap();
        assert_eq!(rep.series.t_len(), 3);
        assert_eq!(rep.series.weeks[1].count_ones(), 0);
        assert_eq!(rep.series.periods, vec!["2005-W01", "2005-W02", "2005-W03"]);
    }

    #[test]
    fn iso_year_boundary() {
        let r = roster(&["A", "B"]);
        // 2005-01-01 is a Saturday, ISO week 2004-W53.
        let rep = ingest(&[rec("2005-01-01", "A", "B"), rec("2005-01-04", "B", "A")], &r).unwrap();
        assert_eq!(rep.series.periods, vec!["2004-W53", "2005-W01"]);
    }

    #[test]
    fn ingest_rejects_empty_records() {
        let r = roster(&["A", "B"]);
        assert!(ingest(&[], &r).is_err());
    }

    #[test]
    fn summary_all_zero() {
        let m = Sociomatrix::zeros(3);
        let s = network_summary(&m);
        assert_eq!(s.active_traders, 0);
        assert_eq!(s.link_probability, 0.0);
        assert!(s.degree_correlation.is_none());
        assert!(s.assortativity_by_degree.is_none());
        assert_eq!(s.clustering_coefficient, 0.0);
    }

    #[test]
    fn summary_complete_graph() {
        let n = 4;
        let mut m = Sociomatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.set(i, j, true);
                }
            }
        }
        let s = network_summary(&m);
        assert_eq!(s.link_probability, 1.0);
        assert_eq!(s.clustering_coefficient, 1.0);
        assert_eq!(s.degree_correlation, Some(1.0));
        assert_eq!(s.mean_degree, 6.0);
        assert_eq!(s.active_traders, 4);
    }

    /// Brute-force oracle recomputing every statistic from first principles.
    fn oracle(m: &Sociomatrix) -> NetworkSummary {
        let n = m.n();
        let in_deg: Vec<f64> =
            (0..n).map(|j| (0..n).filter(|&i| m.get(i, j)).count() as f64).collect();
        let out_deg: Vec<f64> =
            (0..n).map(|i| (0..n).filter(|&j| m.get(i, j)).count() as f64).collect();
        let links: f64 = out_deg.iter().sum();
        let und = |i: usize, j: usize| m.get(i, j) || m.get(j, i);
        let sdeg: Vec<f64> = (0..n)
            .map(|i| (0..n).filter(|&j| j != i && und(i, j)).count() as f64)
            .collect();
        let mut closed = 0.0;
        let mut open = 0.0;
        // paths of length two centered anywhere, ordered ends
        for c in 0..n {
            for a in 0..n {
                for b in 0..n {
                    if a != b && a != c && b != c && und(c, a) && und(c, b) {
                        open += 1.0;
                        if und(a, b) {
                            closed += 1.0;
                        }
                    }
                }
            }
        }
        // closed/open counts each triangle 6x, each triple 2x; transitivity
        // = 3*tri/triples = closed/open
        let clustering = if open == 0.0 { 0.0 } else { closed / open };
        let (mut me, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                if und(i, j) {
                    me += 1.0;
                    s1 += 0.5 * (sdeg[i] + sdeg[j]);
                    s2 += 0.5 * (sdeg[i] * sdeg[i] + sdeg[j] * sdeg[j]);
                    s3 += sdeg[i] * sdeg[j];
                }
            }
        }
        let assort = if me == 0.0 {
            None
        } else {
            let mu = s1 / me;
            let var = s2 / me - mu * mu;
            if var <= 1e-12 * (1.0 + mu * mu) {
                None
            } else {
                Some((s3 / me - mu * mu) / var)
            }
        };
        NetworkSummary {
            active_traders: (0..n).filter(|&i| in_deg[i] + out_deg[i] > 0.0).count(),
            mean_degree: 2.0 * links / n as f64,
            max_in_degree: in_deg.iter().map(|&d| d as usize).max().unwrap(),
            max_out_degree: out_deg.iter().map(|&d| d as usize).max().unwrap(),
            degree_correlation: if links == 0.0 {
                None
            } else if in_deg == out_deg {
                Some(1.0)
            } else {
                crate::math::pearson(&in_deg, &out_deg)
            },
            clustering_coefficient: clustering,
            link_probability: links / (n * (n - 1)) as f64,
            assortativity_by_degree: assort,
        }
    }

    #[test]
    fn summary_matches_brute_force_on_fixture() {
        let edges = [(0, 1), (1, 0), (1, 2), (2, 3), (3, 4), (4, 0), (0, 3), (2, 0)];
        let mut m = Sociomatrix::zeros(5);
        for (i, j) in edges {
            m.set(i, j, true);
        }
        let got = network_summary(&m);
        let want = oracle(&m);
        assert_eq!(got.active_traders, want.active_traders);
        assert_eq!(got.max_in_degree, want.max_in_degree);
        assert_eq!(got.max_out_degree, want.max_out_degree);
        assert!((got.mean_degree - want.mean_degree).abs() < 1e-12);
        assert!((got.link_probability - want.link_probability).abs() < 1e-12);
        assert!(
            (got.clustering_coefficient - want.clustering_coefficient).abs() < 1e-12,
            "clustering {} vs {}",
            got.clustering_coefficient,
            want.clustering_coefficient
        );
        let (a, b) = (got.degree_correlation.unwrap(), want.degree_correlation.unwrap());
        assert!((a - b).abs() < 1e-12);
        let (a, b) =
            (got.assortativity_by_degree.unwrap(), want.assortativity_by_degree.unwrap());
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn summary_series_matches_per_week() {
        let r = roster(&["A", "B", "C"]);
        let mut w0 = Sociomatrix::zeros(3);
        w0.set(0, 1, true);
        let mut w1 = Sociomatrix::zeros(3);
        w1.set(1, 2, true);
        w1.set(2, 1, true);
        let s = NetworkSeries::new(r, vec!["w1".into(), "w2".into()], vec![w0.clone(), w1.clone()])
            .unwrap();
        let sums = summary_series(&s);
        assert_eq!(sums.len(), 2);
        assert_eq!(sums[0], network_summary(&w0));
        assert_eq!(sums[1], network_summary(&w1));
    }

    #[test]
    fn series_validates_labels_and_dims() {
        let r = roster(&["A", "B"]);
        let w = Sociomatrix::zeros(2);
        assert!(NetworkSeries::new(
            r.clone(),
            vec!["b".into(), "a".into()],
            vec![w.clone(), w.clone()]
        )
        .is_err());
        assert!(NetworkSeries::new(r, vec!["a".into()], vec![Sociomatrix::zeros(3)]).is_err());
    }

    proptest! {
        #[test]
        fn sociomatrix_counts_match_listed_edges(
            edges in prop::collection::vec((0usize..6, 0usize..6), 0..30),
        ) {
            let mut m = Sociomatrix::zeros(6);
            let mut want = std::collections::BTreeSet::new();
            for &(i, j) in &edges {
                if i != j {
                    m.set(i, j, true);
                    want.insert((i, j));
                }
            }
            prop_assert_eq!(m.count_ones(), want.len());
            let listed: std::collections::BTreeSet<_> = m.ones().collect();
            prop_assert_eq!(listed, want);
            for i in 0..6 {
                prop_assert!(!m.get(i, i));
            }
        }
    }
}
