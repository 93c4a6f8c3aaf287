use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// Rounded for humans; machine formats use [`full`].
pub fn short(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// Shortest representation that round-trips.
pub fn full(x: f64) -> String {
    x.to_string()
}

pub fn join_full(xs: &[f64]) -> String {
    xs.iter().map(|&x| full(x)).collect::<Vec<_>>().join(";")
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn csv(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = headers.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| -> String {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(&self.headers);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&line(&rule));
        for row in &self.rows {
            out.push_str(&line(row));
        }
        out
    }
}

/// `key: value` lines for summaries under a table.
pub fn summary(pairs: &[(&str, String)]) -> String {
    let width = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    pairs
        .iter()
        .map(|(k, v)| format!("{k:<width$}  {v}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_trims() {
        assert_eq!(short(3.6000000000000005), "3.6");
        assert_eq!(short(0.39999999999999997), "0.4");
        assert_eq!(short(2.0), "2");
        assert_eq!(short(-1e-12), "0");
        assert_eq!(short(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_is_lf_terminated() {
        let s = csv(&["a", "b"], &[vec!["1".into(), "0.5".into()]]);
        assert_eq!(s, "a,b\n1,0.5\n");
    }

    #[test]
    fn table_aligns() {
        let mut t = Table::new(&["x", "long"]);
        t.row(vec!["10".into(), "1".into()]);
        assert_eq!(t.render(), " x  long\n--  ----\n10     1\n");
    }
}
