//! Text formats for point sets, quadrature weights and approximants.
//!
//! All three share one layout: optional `#` header lines holding
//! whitespace-separated `key=value` pairs, then one record per line. Floats
//! are written with 17 significant digits so a save/load cycle is exact.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, ensure, Context, Result};
use sphapprox_core::approximation::{Approximant, OperatorTag};
use sphapprox_core::quadrature::QuadratureRule;
use sphapprox_core::{PointSet, SpherePoint};

/// Inputs further than this from the unit sphere are rejected.
pub const NORM_ERROR_TOLERANCE: f64 = 1e-6;
/// Inputs further than this (but within the error tolerance) are
/// renormalized with a warning.
pub const NORM_WARN_TOLERANCE: f64 = 1e-9;

/// Formats a float with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
pub fn write_atomically(path: &Path, fill: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Header pairs in file order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Header(pub Vec<(String, String)>);

impl Header {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("header {key}={v}: {e}")))
            .transpose()
    }

    fn absorb(&mut self, comment: &str) {
        for token in comment.split_whitespace() {
            if let Some((k, v)) = token.split_once('=') {
                self.0.push((k.to_string(), v.to_string()));
            }
        }
    }

    fn write(&self, w: &mut dyn Write) -> io::Result<()> {
        for (k, v) in &self.0 {
            writeln!(w, "# {k}={v}")?;
        }
        Ok(())
    }
}

/// A parsed file: header plus the numeric fields of every data line, each
/// tagged with its 1-based line number.
struct Table {
    header: Header,
    rows: Vec<(usize, Vec<f64>)>,
}

fn read_table(reader: impl BufRead, source: &str, columns: usize) -> Result<Table> {
    let mut header = Header::default();
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.with_context(|| format!("{source}:{lineno}: unreadable line"))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            header.absorb(comment);
            continue;
        }
        let fields = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| anyhow!("{source}:{lineno}: malformed number in {line:?}: {e}"))?;
        ensure!(
            fields.len() == columns,
            "{source}:{lineno}: expected {columns} columns, found {} in {line:?}",
            fields.len()
        );
        rows.push((lineno, fields));
    }
    Ok(Table { header, rows })
}

fn point_from_fields(source: &str, lineno: usize, x: f64, y: f64, z: f64) -> Result<SpherePoint> {
    let norm = (x * x + y * y + z * z).sqrt();
    ensure!(
        norm.is_finite() && norm > 0.0,
        "{source}:{lineno}: ({x}, {y}, {z}) is not a point on the sphere (zero or non-finite vector)"
    );
    let defect = (norm - 1.0).abs();
    ensure!(
        defect <= NORM_ERROR_TOLERANCE,
        "{source}:{lineno}: ({x}, {y}, {z}) has norm {norm}, more than {NORM_ERROR_TOLERANCE} from 1"
    );
    if defect > NORM_WARN_TOLERANCE {
        log::warn!("{source}:{lineno}: renormalizing a point with norm {norm}");
    }
    Ok(SpherePoint::new(x, y, z)?)
}

fn points_header(ps: &PointSet) -> Header {
    let mut h = Header::default();
    if !ps.label.is_empty() && !ps.label.contains(char::is_whitespace) {
        h.0.push(("label".into(), ps.label.clone()));
    }
    h.0.push(("count".into(), ps.len().to_string()));
    if let Some(mu) = ps.claimed_exactness {
        h.0.push(("exactness".into(), mu.to_string()));
    }
    h
}

fn build_point_set(table: &Table, source: &str) -> Result<PointSet> {
    let points = table
        .rows
        .iter()
        .map(|(lineno, f)| point_from_fields(source, *lineno, f[0], f[1], f[2]))
        .collect::<Result<Vec<_>>>()?;
    ensure!(!points.is_empty(), "{source}: no points");
    if let Some(count) = table.header.parse::<usize>("count")? {
        ensure!(
            count == points.len(),
            "{source}: header announces {count} points, file has {}",
            points.len()
        );
    }
    let label = table.header.get("label").unwrap_or(source).to_string();
    Ok(PointSet::new(points, label)?.with_claimed_exactness(table.header.parse("exactness")?))
}

pub fn read_points(reader: impl BufRead, source: &str) -> Result<PointSet> {
    build_point_set(&read_table(reader, source, 3)?, source)
}

pub fn load_points(path: &Path) -> Result<PointSet> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_points(BufReader::new(file), &path.display().to_string())
}

pub fn write_points(w: &mut dyn Write, ps: &PointSet) -> io::Result<()> {
    points_header(ps).write(w)?;
    for p in ps {
        let [x, y, z] = p.coords();
        writeln!(w, "{} {} {}", fmt_float(x), fmt_float(y), fmt_float(z))?;
    }
    Ok(())
}

pub fn save_points(ps: &PointSet, path: &Path) -> Result<()> {
    write_atomically(path, |w| write_points(w, ps))
}

/// Contents of a weights file before validation.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightsFile {
    pub points: PointSet,
    pub weights: Vec<f64>,
    pub exactness: Option<usize>,
    pub residual: Option<f64>,
}

impl WeightsFile {
    /// Re-verifies positivity and exactness at the recorded degree.
    pub fn into_rule(self) -> Result<QuadratureRule> {
        let mu = self
            .exactness
            .ok_or_else(|| anyhow!("weights file does not record its exactness"))?;
        Ok(QuadratureRule::from_weights(self.points, self.weights, mu)?)
    }
}

pub fn read_weights(reader: impl BufRead, source: &str) -> Result<WeightsFile> {
    let table = read_table(reader, source, 4)?;
    let points = build_point_set(&table, source)?;
    let weights = table.rows.iter().map(|(_, f)| f[3]).collect();
    Ok(WeightsFile {
        exactness: table.header.parse("exactness")?,
        residual: table.header.parse("residual")?,
        points,
        weights,
    })
}

pub fn load_weights(path: &Path) -> Result<WeightsFile> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_weights(BufReader::new(file), &path.display().to_string())
}

pub fn write_weights(w: &mut dyn Write, rule: &QuadratureRule) -> io::Result<()> {
    let mut h = points_header(rule.points());
    h.0.retain(|(k, _)| k != "exactness");
    h.0.push(("exactness".into(), rule.exactness().to_string()));
    h.0.push(("residual".into(), fmt_float(rule.residual())));
    h.write(w)?;
    for (p, wt) in rule.points().iter().zip(rule.weights()) {
        let [x, y, z] = p.coords();
        writeln!(w, "{} {} {} {}", fmt_float(x), fmt_float(y), fmt_float(z), fmt_float(*wt))?;
    }
    Ok(())
}

pub fn save_weights(rule: &QuadratureRule, path: &Path) -> Result<()> {
    write_atomically(path, |w| write_weights(w, rule))
}

pub fn write_approximant(w: &mut dyn Write, a: &Approximant) -> io::Result<()> {
    writeln!(w, "# operator={} degree={} theta={:?}", a.tag, a.n, a.theta)?;
    writeln!(w, "# m={} max_degree={}", a.m, a.degree)?;
    for c in &a.coeffs {
        writeln!(w, "{}", fmt_float(*c))?;
    }
    Ok(())
}

pub fn save_approximant(a: &Approximant, path: &Path) -> Result<()> {
    write_atomically(path, |w| write_approximant(w, a))
}

pub fn read_approximant(reader: impl BufRead, source: &str) -> Result<Approximant> {
    let table = read_table(reader, source, 1)?;
    let h = &table.header;
    let tag: OperatorTag = h
        .get("operator")
        .ok_or_else(|| anyhow!("{source}: missing operator in header"))?
        .parse()?;
    let n = h
        .parse::<usize>("degree")?
        .ok_or_else(|| anyhow!("{source}: missing degree in header"))?;
    let theta = h.parse::<f64>("theta")?.unwrap_or(0.0);
    let m = h.parse::<usize>("m")?.unwrap_or(0);
    let coeffs: Vec<f64> = table.rows.iter().map(|(_, f)| f[0]).collect();
    let a = Approximant::from_coeffs(coeffs, tag, n, m, theta)
        .with_context(|| format!("{source}: bad coefficient count"))?;
    if let Some(max_degree) = h.parse::<usize>("max_degree")? {
        ensure!(max_degree == a.degree, "{source}: header degree {max_degree} disagrees with {} coefficients", a.coeffs.len());
    }
    Ok(a)
}

pub fn load_approximant(path: &Path) -> Result<Approximant> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_approximant(BufReader::new(file), &path.display().to_string())
}

/// Checks that two sets hold the same points in the same order.
pub fn ensure_same_points(a: &PointSet, b: &PointSet, tolerance: f64) -> Result<()> {
    if a.len() != b.len() {
        bail!("point sets differ in size: {} vs {}", a.len(), b.len());
    }
    for (i, (p, q)) in a.iter().zip(b).enumerate() {
        let gap = p
            .coords()
            .iter()
            .zip(q.coords())
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max);
        ensure!(gap <= tolerance, "point {} differs by {gap}", i + 1);
    }
    Ok(())
}
