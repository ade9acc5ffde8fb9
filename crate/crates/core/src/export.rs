//! Flat tables for CSV export and the coordinate text format for operators.

use std::io::{self, Write};

use serde::Serialize;

use crate::bbc::BbcReport;
use crate::map::{OrderFit, SchwarzianReport};
use crate::orbit::{GrowthReport, OrbitRecord, SummabilityReport};
use crate::preimage::{Prop1Report, Prop2Report, WanderReport};
use crate::scalar::Real;
use crate::transfer::{Density, FixedPointSurvey, LpReport, UlamOperator};

/// Column names and stringified rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Writes `# ` prefixed header lines, then the table as CSV.
    pub fn write_csv<W: Write>(&self, mut out: W, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()
    }
}

/// Reports that flatten to one table.
pub trait Tabular {
    fn table(&self) -> Table;
}

/// Shortest round-trip decimal form of the `f64` nearest to `x`.
pub fn num<T: Real>(x: T) -> String {
    format!("{}", x.as_f64())
}

fn opt<T: Real>(x: Option<T>) -> String {
    x.map(num).unwrap_or_default()
}

fn opt_count(x: Option<usize>) -> String {
    x.map(|n| n.to_string()).unwrap_or_default()
}

/// Serialized name of a unit enum variant.
pub fn label<S: Serialize>(v: &S) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

impl<T: Real> Tabular for OrbitRecord<T> {
    fn table(&self) -> Table {
        let mut t = Table::new(vec!["n", "point", "log_deriv", "nearest_critical", "approach", "distance", "order", "tie"]);
        for (i, ((p, ld), nc)) in self.points.iter().zip(&self.log_deriv).zip(&self.nearest).enumerate() {
            t.push(vec![
                (i + 1).to_string(),
                num(*p),
                num(*ld),
                num(nc.location),
                label(&nc.approach),
                num(nc.distance),
                num(nc.order),
                nc.tie.to_string(),
            ]);
        }
        t
    }
}

impl<T: Real> Tabular for SummabilityReport<T> {
    fn table(&self) -> Table {
        let mut t = Table::new(vec!["n", "term", "log_term", "partial_sum"]);
        for (i, ((a, b), s)) in self.terms.iter().zip(&self.log_terms).zip(&self.partial_sums).enumerate() {
            t.push(vec![(i + 1).to_string(), num(*a), num(*b), num(*s)]);
        }
        t
    }
}

impl<T: Real> Tabular for GrowthReport<T> {
    fn table(&self) -> Table {
        let mut t = Table::new(vec!["verdict", "min_log_deriv_tail", "tail_slope"]);
        t.push(vec![label(&self.verdict), num(self.min_log_deriv_tail), num(self.tail_slope)]);
        t
    }
}

impl<T: Real> Tabular for SchwarzianReport<T> {
    fn table(&self) -> Table {
        let mut t = Table::new(vec!["verdict", "worst_value", "worst_x", "samples", "skipped"]);
        t.push(vec![
            label(&self.verdict),
            num(self.worst_value),
            num(self.worst_x),
            self.samples.to_string(),
            self.skipped.to_string(),
        ]);
        t
    }
}

impl<T: Real> Tabular for [(T, OrderFit<T>)] {
    fn table(&self) -> Table {
        let mut t = Table::new(vec!["critical", "side", "l_hat", "fit_residual", "points_used"]);
        for (c, f) in self {
            t.push(vec![num(*c), label(&f.side), num(f.l_hat), num(f.fit_residual), f.points_used.to_string()]);
        }
        t
    }
}

impl<T: Real> Tabular for Prop1Report<T> {
    fn table(&self) -> Table {
        let mut t = Table::new(vec!["n", "eps", "measure", "ratio", "components"]);
        for c in &self.cells {
            t.push(vec![c.n.to_string(), num(c.eps), num(c.measure), num(c.ratio), c.components.to_string()]);
        }
        t
    }
}

impl<T: Real> Tabular for Prop2Report<T> {
    fn table(&self) -> Table {
        let mut t = Table::new(vec!["n", "size", "max_measure"]);
        for c in &self.grid {
            t.push(vec![c.n.to_string(), num(c.size), num(c.max_measure)]);
        }
        t
    }
}

impl<T: Real> Tabular for WanderReport<T> {
    fn table(&self) -> Table {
        let mut t = Table::new(vec!["k", "lo", "hi"]);
        for (k, iv) in self.iterates.iter().enumerate() {
            t.push(vec![k.to_string(), num(iv.lo), num(iv.hi)]);
        }
        t
    }
}

impl<T: Real> Tabular for Density<T> {
    fn table(&self) -> Table {
        let mut t = Table::new(vec!["midpoint", "value"]);
        let part = self.partition();
        for (i, v) in self.values().iter().enumerate() {
            t.push(vec![num(part.midpoint::<T>(i)), num(*v)]);
        }
        t
    }
}

impl<T: Real> Tabular for FixedPointSurvey<T> {
    fn table(&self) -> Table {
        let mut t = Table::new(vec!["fixed_point", "midpoint", "value"]);
        for (f, s) in self.fixed_points.iter().enumerate() {
            let part = s.density.partition();
            for (i, v) in s.density.values().iter().enumerate() {
                t.push(vec![f.to_string(), num(part.midpoint::<T>(i)), num(*v)]);
            }
        }
        t
    }
}

impl<T: Real> Tabular for LpReport<T> {
    fn table(&self) -> Table {
        let mut t = Table::new(vec!["p", "k", "norm", "integral", "verdict"]);
        for row in &self.rows {
            for (i, &k) in self.k_grid.iter().enumerate() {
                t.push(vec![num(row.p), k.to_string(), num(row.norms[i]), num(row.integrals[i]), label(&row.verdict)]);
            }
        }
        t
    }
}

impl<T: Real> Tabular for BbcReport<T> {
    fn table(&self) -> Table {
        let mut t = Table::new(vec![
            "delta",
            "min_first_entry_deriv",
            "argmin_x",
            "entry_time",
            "min_deriv_after_entry_zero",
            "samples_used",
            "never_entered",
        ]);
        for p in &self.per_delta {
            t.push(vec![
                num(p.delta),
                opt(p.min_first_entry_deriv),
                opt(p.argmin_x),
                opt_count(p.entry_time),
                opt(p.min_deriv_after_entry_zero),
                p.samples_used.to_string(),
                p.never_entered.to_string(),
            ]);
        }
        t
    }
}

/// Writes `row col value` lines, zero-based, after `# ` header lines.
pub fn write_triplets<T: Real, W: Write>(op: &UlamOperator<T>, mut out: W, header: &[String]) -> io::Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "# {} {} {}", op.bins(), op.bins(), op.nnz())?;
    for (i, j, v) in op.triplets() {
        writeln!(out, "{i} {j} {}", num(v))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::map::builtin;
    use crate::transfer::{build_ulam, Partition};

    #[test]
    fn csv_with_header() {
        let d = Density::new(Partition::new(2).unwrap(), vec![0.5_f64, 1.5]);
        let mut buf = Vec::new();
        d.table().write_csv(&mut buf, &["seed: 1".into()]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# seed: 1\nmidpoint,value\n0.25,0.5\n0.75,1.5\n");
    }

    #[test]
    fn triplet_format() {
        let op = build_ulam(&builtin::<f64>("doubling", &BTreeMap::new()).unwrap(), 16).unwrap();
        let mut buf = Vec::new();
        write_triplets(&op, &mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# 16 16 32"));
        assert_eq!(lines.next(), Some("0 0 0.5"));
        assert_eq!(text.lines().count(), 33);
    }

    #[test]
    fn labels_use_serialized_names() {
        assert_eq!(label(&crate::orbit::GrowthVerdict::NotGrows), "not-grows");
        assert_eq!(label(&crate::map::Side::Left), "left");
    }
}
