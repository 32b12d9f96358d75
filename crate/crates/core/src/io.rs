//! CSV tables: atoms, nodal fields, and weight samples.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::SupportField;
use crate::measure::Atom;

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes())
}

/// Numeric rows of a CSV table. A first row that does not parse is taken as
/// a header; every other row must have `widths` fields (any of them).
fn numeric_rows(text: &str, widths: &[usize], what: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, rec) in reader(text).records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        match parsed {
            Ok(vals) => {
                if !widths.contains(&vals.len()) {
                    return Err(Error::Parse(format!(
                        "{what}: line {line} has {} fields, expected {}",
                        vals.len(),
                        widths.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" or ")
                    )));
                }
                if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
                    return Err(Error::Parse(format!("{what}: line {line} contains non-finite value {v}")));
                }
                rows.push(vals);
            }
            Err(_) if rows.is_empty() && i == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("{what}: line {line}: {e}"))),
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!("{what}: no data rows")));
    }
    Ok(rows)
}

/// Atoms as `ux,uy,mass` (S¹) or `ux,uy,uz,mass` (S²). Directions are
/// normalized by the measure constructor.
pub fn parse_atoms_csv(text: &str, dim: usize) -> Result<Vec<Atom>> {
    let width = dim + 2;
    numeric_rows(text, &[width], "atoms")?
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let mut direction = [0.0; 3];
            direction[..dim + 1].copy_from_slice(&r[..dim + 1]);
            let mass = r[dim + 1];
            if !(mass > 0.0) {
                return Err(Error::Parse(format!("atoms: row {} has non-positive mass {mass}", i + 1)));
            }
            if direction.iter().all(|&c| c == 0.0) {
                return Err(Error::Parse(format!("atoms: row {} has a zero direction", i + 1)));
            }
            Ok(Atom { direction, mass })
        })
        .collect()
}

/// Nodal values as either one value per row in node order, or `node,value`
/// rows covering every node exactly once.
pub fn parse_nodal_csv(text: &str, len: usize, what: &str) -> Result<Vec<f64>> {
    let rows = numeric_rows(text, &[1, 2], what)?;
    if rows.len() != len {
        return Err(Error::Parse(format!("{what}: {} rows for a grid of {len} nodes", rows.len())));
    }
    if rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(Error::Parse(format!("{what}: mixed one- and two-column rows")));
    }
    if rows[0].len() == 1 {
        return Ok(rows.into_iter().map(|r| r[0]).collect());
    }
    let mut out = vec![f64::NAN; len];
    for r in rows {
        let node = r[0];
        if node.fract() != 0.0 || node < 0.0 || node >= len as f64 {
            return Err(Error::Parse(format!("{what}: node index {node} outside 0..{len}")));
        }
        let slot = &mut out[node as usize];
        if !slot.is_nan() {
            return Err(Error::Parse(format!("{what}: node {node} listed twice")));
        }
        *slot = r[1];
    }
    Ok(out)
}

/// Weight samples `s,phi` with strictly increasing positive `s`.
pub fn parse_weight_table(text: &str) -> Result<Vec<(f64, f64)>> {
    Ok(numeric_rows(text, &[2], "weight table")?.into_iter().map(|r| (r[0], r[1])).collect())
}

pub fn write_nodal_csv<W: Write>(field: &SupportField, column: &str, mut out: W) -> Result<()> {
    writeln!(out, "node,{column}")?;
    for (i, v) in field.values().iter().enumerate() {
        writeln!(out, "{i},{v:e}")?;
    }
    Ok(())
}

pub fn save_nodal_csv(field: &SupportField, column: &str, path: impl AsRef<Path>) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_nodal_csv(field, column, file)
}
