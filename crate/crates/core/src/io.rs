//! Plain-text formats.
//!
//! A signal is a CSV with header `index,x,re,im` (`x1,…,xn` in several
//! dimensions) next to a JSON header describing its [`StateGrid`]. A
//! transform is a CSV `index,<chart axes…>,weight,re,im` next to a JSON
//! [`TransformHeader`]. Floats are written in Rust's shortest round-trip form,
//! so identical data gives identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupDescriptor;
use crate::quadrature::{haar_grid_axes, GridAxis};
use crate::state::{DiscretizedState, StateGrid};
use crate::transform::{TransformMeta, TransformResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalHeader {
    pub grid: StateGrid,
    #[serde(default)]
    pub label: String,
}

fn coord_names(d: usize) -> Vec<String> {
    if d == 1 {
        vec!["x".into()]
    } else {
        (1..=d).map(|k| format!("x{k}")).collect()
    }
}

pub fn signal_csv(f: &DiscretizedState) -> String {
    let g = f.grid();
    let mut out = format!("index,{},re,im\n", coord_names(g.dim()).join(","));
    for (i, z) in f.data().iter().enumerate() {
        let _ = write!(out, "{i}");
        for x in g.point(i) {
            let _ = write!(out, ",{x}");
        }
        let _ = writeln!(out, ",{},{}", z.re, z.im);
    }
    out
}

pub fn write_signal(path: &Path, header_path: &Path, f: &DiscretizedState, label: &str) -> Result<()> {
    fs::write(path, signal_csv(f))?;
    let h = SignalHeader { grid: f.grid().clone(), label: label.into() };
    fs::write(header_path, serde_json::to_string_pretty(&h)? + "\n")?;
    Ok(())
}

fn parse_f64(field: &str, line: usize, name: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse { line, msg: format!("field `{name}`: `{field}` is not a number") })
}

/// Rows of a CSV body with a fixed header; `line` numbers are 1-based and
/// count the header.
fn rows<'a>(text: &'a str, want: &[String]) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate();
    let (_, head) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
    let got: Vec<&str> = head.split(',').map(str::trim).collect();
    if got != want.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::Parse { line: 1, msg: format!("expected header `{}`, found `{head}`", want.join(",")) });
    }
    let mut out = Vec::new();
    for (k, l) in lines {
        if l.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = l.split(',').collect();
        if fields.len() != want.len() {
            return Err(Error::Parse {
                line: k + 1,
                msg: format!("expected {} fields, found {}", want.len(), fields.len()),
            });
        }
        out.push((k + 1, fields));
    }
    Ok(out)
}

/// Parse a signal CSV against its grid; coordinates must match the grid
/// nodes to 1e-9 (relative).
pub fn parse_signal(text: &str, grid: &StateGrid) -> Result<DiscretizedState> {
    let d = grid.dim();
    let mut want = vec!["index".to_string()];
    want.extend(coord_names(d));
    want.extend(["re".to_string(), "im".to_string()]);
    let rows = rows(text, &want)?;
    if rows.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} rows for a grid of {} nodes", rows.len(), grid.len())));
    }
    let mut data = Vec::with_capacity(rows.len());
    for (i, (line, f)) in rows.iter().enumerate() {
        let idx: usize =
            f[0].trim().parse().map_err(|_| Error::Parse { line: *line, msg: format!("field `index`: `{}`", f[0]) })?;
        if idx != i {
            return Err(Error::Parse { line: *line, msg: format!("field `index`: expected {i}, found {idx}") });
        }
        let p = grid.point(i);
        for k in 0..d {
            let x = parse_f64(f[1 + k], *line, &want[1 + k])?;
            if (x - p[k]).abs() > 1e-9 * (1.0 + p[k].abs()) {
                return Err(Error::Parse {
                    line: *line,
                    msg: format!("field `{}`: {x} is not the grid node {}", want[1 + k], p[k]),
                });
            }
        }
        data.push(Complex64::new(parse_f64(f[1 + d], *line, "re")?, parse_f64(f[2 + d], *line, "im")?));
    }
    DiscretizedState::new(grid.clone(), data)
}

pub fn read_signal(path: &Path, header_path: &Path) -> Result<(DiscretizedState, SignalHeader)> {
    let header: SignalHeader = serde_json::from_str(&fs::read_to_string(header_path)?)?;
    let f = parse_signal(&fs::read_to_string(path)?, &header.grid)?;
    Ok((f, header))
}

/// JSON header of a transform file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformHeader {
    pub group: String,
    pub rep: String,
    pub psi: String,
    /// `‖Dψ‖`, or the string `"unset"`.
    pub dm_norm: DmNorm,
    pub axes: Vec<GridAxis>,
    pub meta: TransformMeta,
    /// Grid of the analyzed signal, needed to synthesize back onto it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_grid: Option<StateGrid>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DmNorm {
    Value(f64),
    Unset(UnsetTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnsetTag {
    Unset,
}

impl From<Option<f64>> for DmNorm {
    fn from(v: Option<f64>) -> Self {
        match v {
            Some(x) => DmNorm::Value(x),
            None => DmNorm::Unset(UnsetTag::Unset),
        }
    }
}

impl DmNorm {
    pub fn value(self) -> Option<f64> {
        match self {
            DmNorm::Value(x) => Some(x),
            DmNorm::Unset(_) => None,
        }
    }
}

fn transform_columns(group: &GroupDescriptor) -> Vec<String> {
    let mut cols = vec!["index".to_string()];
    cols.extend(group.axes().iter().map(|a| a.label.clone()));
    cols.extend(["weight", "re", "im"].map(String::from));
    cols
}

pub fn transform_csv(r: &TransformResult) -> String {
    let g = &r.grid;
    let mut out = transform_columns(g.group()).join(",") + "\n";
    for (i, z) in r.coefficients.iter().enumerate() {
        let _ = write!(out, "{i}");
        for x in g.node(i) {
            let _ = write!(out, ",{x}");
        }
        let _ = writeln!(out, ",{},{},{}", g.weight(i), z.re, z.im);
    }
    out
}

pub fn transform_header(r: &TransformResult, signal_grid: Option<&StateGrid>) -> TransformHeader {
    TransformHeader {
        group: r.grid.group().name().to_string(),
        rep: r.rep_id.clone(),
        psi: r.analyzing_vector_id.clone(),
        dm_norm: r.dm_norm.into(),
        axes: r.grid.axes().to_vec(),
        meta: r.meta.clone(),
        signal_grid: signal_grid.cloned(),
    }
}

pub fn write_transform(
    path: &Path,
    header_path: &Path,
    r: &TransformResult,
    signal_grid: Option<&StateGrid>,
) -> Result<()> {
    fs::write(path, transform_csv(r))?;
    fs::write(header_path, serde_json::to_string_pretty(&transform_header(r, signal_grid))? + "\n")?;
    Ok(())
}

/// Rebuild a transform from its CSV and header. The grid is regenerated from
/// the header axes on `group`, and every row's coordinates and weight must
/// agree with it.
pub fn parse_transform(text: &str, header: &TransformHeader, group: &GroupDescriptor) -> Result<TransformResult> {
    if header.group != group.name() {
        return Err(Error::GridMismatch(format!("file is on {}, expected {}", header.group, group.name())));
    }
    let grid = haar_grid_axes(group, header.axes.clone())?;
    let cols = transform_columns(group);
    let rows = rows(text, &cols)?;
    if rows.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} rows for a grid of {} nodes", rows.len(), grid.len())));
    }
    let d = grid.dim();
    let mut coefficients = Vec::with_capacity(rows.len());
    for (i, (line, f)) in rows.iter().enumerate() {
        let node = grid.node(i);
        for k in 0..d {
            let x = parse_f64(f[1 + k], *line, &cols[1 + k])?;
            if (x - node[k]).abs() > 1e-9 * (1.0 + node[k].abs()) {
                return Err(Error::Parse {
                    line: *line,
                    msg: format!("field `{}`: {x} is not the grid node {}", cols[1 + k], node[k]),
                });
            }
        }
        let w = parse_f64(f[1 + d], *line, "weight")?;
        if (w - grid.weight(i)).abs() > 1e-9 * grid.weight(i) {
            return Err(Error::Parse {
                line: *line,
                msg: format!("field `weight`: {w} differs from the Haar weight {}", grid.weight(i)),
            });
        }
        coefficients.push(Complex64::new(parse_f64(f[2 + d], *line, "re")?, parse_f64(f[3 + d], *line, "im")?));
    }
    Ok(TransformResult {
        coefficients,
        grid,
        analyzing_vector_id: header.psi.clone(),
        rep_id: header.rep.clone(),
        dm_norm: header.dm_norm.value(),
        meta: header.meta.clone(),
    })
}

pub fn read_transform_header(header_path: &Path) -> Result<TransformHeader> {
    Ok(serde_json::from_str(&fs::read_to_string(header_path)?)?)
}

pub fn read_transform(
    path: &Path,
    header_path: &Path,
    group: &GroupDescriptor,
) -> Result<(TransformResult, TransformHeader)> {
    let header = read_transform_header(header_path)?;
    let r = parse_transform(&fs::read_to_string(path)?, &header, group)?;
    Ok((r, header))
}

/// Rows of `(column → value)` as CSV; used for report tables.
pub fn table_csv(columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = columns.join(",") + "\n";
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        out += &cells.join(",");
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::haar_grid;
    use crate::rep::{displacement_rep, Representation};
    use crate::state::StateAxis;
    use crate::transform::analyze;
    use crate::vectors::{gaussian, random_band_limited};

    #[test]
    fn signal_round_trip_is_exact() {
        let g = StateGrid::centered(1, 4.0, 16);
        let f = random_band_limited(&g, 2.0, 1);
        let text = signal_csv(&f);
        assert!(text.starts_with("index,x,re,im\n"));
        let back = parse_signal(&text, &g).unwrap();
        assert_eq!(back.data(), f.data());
        let g2 = StateGrid::new(vec![StateAxis::half_line(2.0, 4), StateAxis::centered(1.0, 3)]);
        let f2 = gaussian(&g2, &[0.5, 0.0], 1.0);
        let text = signal_csv(&f2);
        assert!(text.starts_with("index,x1,x2,re,im\n"));
        assert_eq!(parse_signal(&text, &g2).unwrap().data(), f2.data());
    }

    #[test]
    fn malformed_signals_report_line_and_field() {
        let g = StateGrid::centered(1, 4.0, 4);
        let f = gaussian(&g, &[0.0], 1.0);
        let text = signal_csv(&f);
        let bad = text.replacen(",0,", ",zero,", 1);
        match parse_signal(&bad, &g) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("`x`"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
        let short: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_signal(&short, &g), Err(Error::GridMismatch(_))));
        assert!(matches!(parse_signal("index,t,re,im\n", &g), Err(Error::Parse { line: 1, .. })));
        let moved = text.replacen("-4,", "-3.5,", 1);
        assert!(matches!(parse_signal(&moved, &g), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn transform_round_trip() {
        let rep = displacement_rep(1).unwrap();
        let sg = StateGrid::centered(1, 8.0, 64);
        let psi = gaussian(&sg, &[0.0], 1.0);
        let grid = haar_grid(rep.group(), &[(-2.0, 2.0); 2], &[4, 4]).unwrap();
        let mut r = analyze(&rep, &psi, &random_band_limited(&sg, 1.0, 2), &grid).unwrap();
        r.analyzing_vector_id = "gaussian".into();
        let h = transform_header(&r, None);
        let json = serde_json::to_string(&h).unwrap();
        assert!(json.contains("\"dm_norm\":\"unset\""), "{json}");
        let back = parse_transform(&transform_csv(&r), &serde_json::from_str(&json).unwrap(), rep.group()).unwrap();
        assert_eq!(back.coefficients, r.coefficients);
        assert_eq!(back.dm_norm, None);
        let r = r.with_dm_norm(1.0);
        let json = serde_json::to_string(&transform_header(&r, None)).unwrap();
        let h: TransformHeader = serde_json::from_str(&json).unwrap();
        assert_eq!(h.dm_norm.value(), Some(1.0));
        let text = transform_csv(&r).replacen(",1.5,", ",1.25,", 1);
        assert!(matches!(parse_transform(&text, &h, rep.group()), Err(Error::Parse { .. })));
    }

    #[test]
    fn tables() {
        assert_eq!(table_csv(&["a", "b"], &[vec![1.0, 0.5]]), "a,b\n1,0.5\n");
    }
}
