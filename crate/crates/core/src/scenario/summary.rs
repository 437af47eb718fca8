use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::run::{ResultRow, CSV_HEADER};

/// Capacity used for the fixed-S comparison table.
pub const FIG2A_CAPACITY: u64 = 350;
/// Content type used for the sports tables.
pub const SPORTS_TYPE: &str = "sport";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Figure {
    Fig2a,
    Fig2b,
    Fig3,
    Fig4,
    Fig5,
}

impl Figure {
    pub const ALL: [Figure; 5] = [
        Figure::Fig2a,
        Figure::Fig2b,
        Figure::Fig3,
        Figure::Fig4,
        Figure::Fig5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2a => "fig2a",
            Figure::Fig2b => "fig2b",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }
}

impl FromStr for Figure {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!("unknown figure `{s}` (expected fig2a, fig2b, fig3, fig4 or fig5)")
            })
    }
}

/// A plain text table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(title: impl Into<String>, header: Vec<String>) -> Self {
        Self {
            title: title.into(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {}", self.title)?;
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        writeln!(f, "{}", line(&self.header))?;
        for row in &self.rows {
            writeln!(f, "{}", line(row))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub tables: Vec<(Figure, Table)>,
    pub warnings: Vec<String>,
}

impl Summary {
    pub fn table(&self, figure: Figure) -> Option<&Table> {
        self.tables
            .iter()
            .find(|(f, _)| *f == figure)
            .map(|(_, t)| t)
    }
}

/// Reads a results CSV and builds every summary table.
pub fn summarize(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows = parse_rows(&text)?;
    let mut summary = summarize_rows(&rows)?;
    if text.trim().is_empty() {
        summary
            .warnings
            .insert(0, format!("{} is empty", path.display()));
    }
    Ok(summary)
}

fn parse_rows(text: &str) -> Result<Vec<ResultRow>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    for (i, expected) in CSV_HEADER.iter().enumerate() {
        match header.get(i) {
            Some(h) if h == *expected => {}
            Some(h) => {
                return Err(Error::Schema {
                    column: (*expected).to_string(),
                    reason: format!("header has `{h}` in position {}", i + 1),
                })
            }
            None => {
                return Err(Error::Schema {
                    column: (*expected).to_string(),
                    reason: "missing from header".into(),
                })
            }
        }
    }
    if header.len() > CSV_HEADER.len() {
        return Err(Error::Schema {
            column: header[CSV_HEADER.len()].to_string(),
            reason: "unexpected extra column".into(),
        });
    }

    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record?;
        let line = n + 2;
        let field = |i: usize| -> Result<&str> {
            record.get(i).ok_or_else(|| Error::Schema {
                column: CSV_HEADER[i].to_string(),
                reason: format!("line {line}: missing field"),
            })
        };
        fn num<T: FromStr>(s: &str, i: usize, line: usize) -> Result<T> {
            s.parse().map_err(|_| Error::Schema {
                column: CSV_HEADER[i].to_string(),
                reason: format!("line {line}: cannot parse `{s}`"),
            })
        }
        let ratio = |i: usize| -> Result<f64> {
            let v: f64 = num(field(i)?, i, line)?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Schema {
                    column: CSV_HEADER[i].to_string(),
                    reason: format!("line {line}: must be finite and non-negative"),
                });
            }
            Ok(v)
        };
        if record.len() != CSV_HEADER.len() {
            return Err(Error::Schema {
                column: CSV_HEADER[record.len().min(CSV_HEADER.len() - 1)].to_string(),
                reason: format!(
                    "line {line}: expected {} fields, found {}",
                    CSV_HEADER.len(),
                    record.len()
                ),
            });
        }
        let predicted = match field(10)? {
            "" => None,
            _ => Some(ratio(10)?),
        };
        rows.push(ResultRow {
            scenario_id: field(0)?.to_string(),
            algorithm: field(1)?.to_string(),
            capacity: num(field(2)?, 2, line)?,
            day: num(field(3)?, 3, line)?,
            content_type: field(4)?.to_string(),
            requests: num(field(5)?, 5, line)?,
            exact_hits: num(field(6)?, 6, line)?,
            transcode_hits: num(field(7)?, 7, line)?,
            misses: num(field(8)?, 8, line)?,
            empirical_hit_ratio: ratio(9)?,
            predicted_hit_ratio: predicted,
            backhaul_units: num(field(11)?, 11, line)?,
            mean_startup_delay_ms: ratio(12)?,
        });
    }
    Ok(rows)
}

/// Counts summed over days for one (algorithm, capacity, content type).
#[derive(Debug, Clone, Default)]
struct Agg {
    requests: u64,
    hits: u64,
    misses: u64,
    backhaul: u64,
    delay_weighted: f64,
    predicted_sum: f64,
    predicted_days: u32,
}

impl Agg {
    fn add(&mut self, r: &ResultRow) {
        self.requests += r.requests;
        self.hits += r.hits();
        self.misses += r.misses;
        self.backhaul += r.backhaul_units;
        self.delay_weighted += r.mean_startup_delay_ms * r.requests as f64;
        if let Some(p) = r.predicted_hit_ratio {
            self.predicted_sum += p;
            self.predicted_days += 1;
        }
    }

    fn hit_ratio(&self) -> f64 {
        if self.requests == 0 {
            0.0
        } else {
            self.hits as f64 / self.requests as f64
        }
    }

    fn delay(&self) -> f64 {
        if self.requests == 0 {
            0.0
        } else {
            self.delay_weighted / self.requests as f64
        }
    }

    fn predicted(&self) -> Option<f64> {
        (self.predicted_days > 0).then(|| self.predicted_sum / self.predicted_days as f64)
    }
}

fn ratio(v: f64) -> String {
    format!("{v:.6}")
}

fn push_unique<T: PartialEq + Clone>(list: &mut Vec<T>, item: &T) {
    if !list.contains(item) {
        list.push(item.clone());
    }
}

/// Checks that per-type rows add up to the `ALL` row for every count column.
fn cross_foot(rows: &[ResultRow]) -> Result<()> {
    type Key<'a> = (&'a str, &'a str, u64, u32);
    let mut all: HashMap<Key, [u64; 5]> = HashMap::new();
    let mut parts: HashMap<Key, [u64; 5]> = HashMap::new();
    for r in rows {
        let key = (
            r.scenario_id.as_str(),
            r.algorithm.as_str(),
            r.capacity,
            r.day,
        );
        let counts = [
            r.requests,
            r.exact_hits,
            r.transcode_hits,
            r.misses,
            r.backhaul_units,
        ];
        let slot = if r.content_type == "ALL" {
            all.entry(key).or_default()
        } else {
            parts.entry(key).or_default()
        };
        for (s, c) in slot.iter_mut().zip(counts) {
            *s += c;
        }
    }
    const COLS: [&str; 5] = [
        "requests",
        "exact_hits",
        "transcode_hits",
        "misses",
        "backhaul_units",
    ];
    for (key, totals) in &all {
        let summed = parts.get(key).copied().unwrap_or_default();
        if let Some(i) = (0..5).find(|&i| summed[i] != totals[i]) {
            return Err(Error::Schema {
                column: COLS[i].to_string(),
                reason: format!(
                    "per-type rows sum to {} but ALL row has {} ({} S={} day={})",
                    summed[i], totals[i], key.1, key.2, key.3
                ),
            });
        }
    }
    if let Some(key) = parts.keys().find(|k| !all.contains_key(*k)) {
        return Err(Error::Schema {
            column: "content_type".into(),
            reason: format!("no ALL row for {} S={} day={}", key.1, key.2, key.3),
        });
    }
    Ok(())
}

/// Builds the summary tables from parsed rows, after cross-footing them.
pub fn summarize_rows(rows: &[ResultRow]) -> Result<Summary> {
    cross_foot(rows)?;
    let mut warnings = Vec::new();
    if rows.is_empty() {
        warnings.push("no result rows; tables are empty".to_string());
    }

    let mut algorithms: Vec<String> = Vec::new();
    let mut capacities: Vec<u64> = Vec::new();
    let mut types: Vec<String> = Vec::new();
    let mut cells: HashMap<(String, u64, String), Agg> = HashMap::new();
    for r in rows {
        push_unique(&mut algorithms, &r.algorithm);
        push_unique(&mut capacities, &r.capacity);
        if r.content_type != "ALL" {
            push_unique(&mut types, &r.content_type);
        }
        cells
            .entry((r.algorithm.clone(), r.capacity, r.content_type.clone()))
            .or_default()
            .add(r);
    }
    capacities.sort_unstable();
    let get = |a: &str, s: u64, t: &str| cells.get(&(a.to_string(), s, t.to_string()));
    let cell_ratio = |a: &str, s: u64, t: &str| {
        get(a, s, t)
            .map(|c| ratio(c.hit_ratio()))
            .unwrap_or_default()
    };

    // fig2a: hit ratio by algorithm at a fixed capacity.
    let fixed = if capacities.contains(&FIG2A_CAPACITY) || capacities.is_empty() {
        FIG2A_CAPACITY
    } else {
        let nearest = *capacities
            .iter()
            .min_by_key(|&&s| s.abs_diff(FIG2A_CAPACITY))
            .expect("non-empty");
        warnings.push(format!(
            "S={FIG2A_CAPACITY} not in sweep; fig2a uses S={nearest}"
        ));
        nearest
    };
    let mut fig2a = Table::new(
        format!("hit ratio by algorithm, S={fixed}"),
        vec!["algorithm".into(), "hit_ratio".into()],
    );
    for a in &algorithms {
        if get(a, fixed, "ALL").is_some() {
            fig2a
                .rows
                .push(vec![a.clone(), cell_ratio(a, fixed, "ALL")]);
        }
    }

    // fig2b: hit ratio against capacity, one column per algorithm.
    let mut header = vec!["S".to_string()];
    header.extend(algorithms.iter().cloned());
    let has_predicted = algorithms.iter().any(|a| {
        capacities
            .iter()
            .any(|&s| get(a, s, "ALL").and_then(Agg::predicted).is_some())
    });
    if has_predicted {
        header.push("PROPOSED_predicted".into());
    }
    let mut fig2b = Table::new("hit ratio vs S", header);
    for &s in &capacities {
        let mut row = vec![s.to_string()];
        row.extend(algorithms.iter().map(|a| cell_ratio(a, s, "ALL")));
        if has_predicted {
            let p = algorithms
                .iter()
                .find_map(|a| get(a, s, "ALL").and_then(Agg::predicted))
                .map(ratio)
                .unwrap_or_default();
            row.push(p);
        }
        fig2b.rows.push(row);
    }

    // fig3: PROPOSED hit ratio per content type.
    let mut header = vec!["S".to_string()];
    header.extend(types.iter().cloned());
    let mut fig3 = Table::new("PROPOSED hit ratio by content type vs S", header);
    if algorithms.iter().any(|a| a == "PROPOSED") {
        for &s in &capacities {
            let mut row = vec![s.to_string()];
            row.extend(types.iter().map(|t| cell_ratio("PROPOSED", s, t)));
            fig3.rows.push(row);
        }
    } else if !rows.is_empty() {
        warnings.push("no PROPOSED rows; fig3 is empty".into());
    }

    // fig4: sports-video hit ratio per algorithm.
    let mut header = vec!["S".to_string()];
    header.extend(algorithms.iter().cloned());
    let mut fig4 = Table::new(format!("{SPORTS_TYPE} hit ratio vs S"), header);
    if types.iter().any(|t| t == SPORTS_TYPE) {
        for &s in &capacities {
            let mut row = vec![s.to_string()];
            row.extend(algorithms.iter().map(|a| cell_ratio(a, s, SPORTS_TYPE)));
            fig4.rows.push(row);
        }
    } else if !rows.is_empty() {
        warnings.push(format!("no `{SPORTS_TYPE}` content type; fig4 is empty"));
    }

    // fig5: backhaul load and startup delay.
    let mut fig5 = Table::new(
        "backhaul and startup delay vs S",
        vec![
            "algorithm".into(),
            "S".into(),
            "hit_ratio".into(),
            "backhaul_units".into(),
            "mean_startup_delay_ms".into(),
        ],
    );
    for a in &algorithms {
        for &s in &capacities {
            if let Some(c) = get(a, s, "ALL") {
                fig5.rows.push(vec![
                    a.clone(),
                    s.to_string(),
                    ratio(c.hit_ratio()),
                    c.backhaul.to_string(),
                    format!("{:.3}", c.delay()),
                ]);
            }
        }
    }

    Ok(Summary {
        tables: vec![
            (Figure::Fig2a, fig2a),
            (Figure::Fig2b, fig2b),
            (Figure::Fig3, fig3),
            (Figure::Fig4, fig4),
            (Figure::Fig5, fig5),
        ],
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(alg: &str, s: u64, t: &str, req: u64, hits: u64) -> ResultRow {
        ResultRow {
            scenario_id: "t".into(),
            algorithm: alg.into(),
            capacity: s,
            day: 0,
            content_type: t.into(),
            requests: req,
            exact_hits: hits,
            transcode_hits: 0,
            misses: req - hits,
            empirical_hit_ratio: hits as f64 / req as f64,
            predicted_hit_ratio: None,
            backhaul_units: (req - hits) * 10,
            mean_startup_delay_ms: 50.0,
        }
    }

    fn cell(alg: &str, s: u64) -> Vec<ResultRow> {
        vec![
            row(alg, s, "ALL", 10, 5),
            row(alg, s, "sport", 6, 3),
            row(alg, s, "news", 4, 2),
        ]
    }

    fn to_csv(rows: &[ResultRow]) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).unwrap();
        for r in rows {
            w.write_record(r.to_record()).unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    #[test]
    fn fig2a_lists_every_algorithm() {
        let rows: Vec<_> = ["PROPOSED", "LRU", "LFU", "WGDSF*"]
            .iter()
            .flat_map(|a| [50, 350].into_iter().flat_map(move |s| cell(a, s)))
            .collect();
        let summary = summarize_rows(&rows).unwrap();
        let t = summary.table(Figure::Fig2a).unwrap();
        let names: Vec<_> = t.rows.iter().map(|r| r[0].as_str()).collect();
        assert_eq!(names, ["PROPOSED", "LRU", "LFU", "WGDSF*"]);
        assert!(t.title.contains("S=350"));
        assert!(summary.warnings.is_empty());
    }

    #[test]
    fn fig2a_falls_back_with_warning() {
        let rows = cell("LRU", 300);
        let summary = summarize_rows(&rows).unwrap();
        assert!(summary
            .table(Figure::Fig2a)
            .unwrap()
            .title
            .contains("S=300"));
        assert_eq!(summary.warnings.len(), 2);
    }

    #[test]
    fn empty_input_gives_empty_tables() {
        for text in ["", &to_csv(&[])] {
            let rows = parse_rows(text).unwrap();
            let summary = summarize_rows(&rows).unwrap();
            assert!(summary.tables.iter().all(|(_, t)| t.is_empty()));
            assert!(!summary.warnings.is_empty());
        }
    }

    #[test]
    fn csv_round_trip() {
        let rows = cell("PROPOSED", 50);
        assert_eq!(parse_rows(&to_csv(&rows)).unwrap(), rows);
    }

    #[test]
    fn bad_header_names_column() {
        let text = to_csv(&cell("LRU", 50)).replacen("misses", "miss", 1);
        match parse_rows(&text) {
            Err(Error::Schema { column, .. }) => assert_eq!(column, "misses"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_value_names_column() {
        let mut rows = cell("LRU", 50);
        rows[1].scenario_id = "x".into();
        let text = to_csv(&rows).replacen("x,LRU,50,0,sport,6,", "x,LRU,50,0,sport,six,", 1);
        match parse_rows(&text) {
            Err(Error::Schema { column, reason }) => {
                assert_eq!(column, "requests");
                assert!(reason.contains("line 3"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cross_foot_detects_mismatch() {
        let mut rows = cell("LRU", 50);
        rows[2].exact_hits += 1;
        rows[2].misses -= 1;
        match summarize_rows(&rows) {
            Err(Error::Schema { column, .. }) => assert_eq!(column, "exact_hits"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn figure_names_parse() {
        for f in Figure::ALL {
            assert_eq!(f.name().parse::<Figure>().unwrap(), f);
        }
        assert!("fig9".parse::<Figure>().is_err());
    }
}
