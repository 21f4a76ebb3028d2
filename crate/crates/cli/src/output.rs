//! Result tables and their CSV / JSON encodings.

use std::io::Write;

use serde_json::{json, Value as Json};

use crate::config::{Experiment, Format};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    /// Infinite or otherwise undefined metric.
    Missing,
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        if x.is_finite() {
            Cell::Float(x)
        } else {
            Cell::Missing
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::from)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_owned())
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => x.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Json {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) => json!(x),
            Cell::Text(s) => json!(s),
            Cell::Missing => Json::Null,
        }
    }
}

/// One experiment's output: parameter and metric columns, one row per
/// parameter point. `experiment`, `seed` and `version` are added on write.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub experiment: Experiment,
    pub seed: u64,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(experiment: Experiment, seed: u64, columns: &[&'static str]) -> Self {
        Self { experiment, seed, columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.experiment);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, mut w: W, timestamp: Option<&str>) -> std::io::Result<()> {
        if let Some(ts) = timestamp {
            writeln!(w, "# generated {ts}")?;
        }
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let mut header = vec!["experiment"];
        header.extend(&self.columns);
        header.extend(["seed", "version"]);
        out.write_record(&header)?;
        for row in &self.rows {
            let mut cells = vec![self.experiment.id().to_owned()];
            cells.extend(row.iter().map(Cell::csv));
            cells.push(self.seed.to_string());
            cells.push(VERSION.to_owned());
            out.write_record(&cells)?;
        }
        out.flush()
    }

    pub fn to_json(&self, timestamp: Option<&str>) -> Json {
        let rows: Vec<Json> = self
            .rows
            .iter()
            .map(|r| {
                let map = self.columns.iter().zip(r).map(|(c, v)| ((*c).to_owned(), v.json())).collect();
                Json::Object(map)
            })
            .collect();
        let mut doc = json!({
            "experiment": self.experiment.id(),
            "seed": self.seed,
            "version": VERSION,
            "columns": self.columns,
            "rows": rows,
        });
        if let Some(ts) = timestamp {
            doc["generated"] = json!(ts);
        }
        doc
    }

    pub fn write<W: Write>(&self, mut w: W, format: Format, timestamp: Option<&str>) -> std::io::Result<()> {
        match format {
            Format::Csv => self.write_csv(w, timestamp),
            Format::Json => {
                serde_json::to_writer_pretty(&mut w, &self.to_json(timestamp))?;
                writeln!(w)
            }
        }
    }
}
