//! Discrete probability measures for agents (points in R^n) and tasks
//! (origin/destination pairs in R^2n), plus their CSV representation.
//!
//! Agents CSV: `id,y1,...,yn,weight`. Tasks CSV: `id,o1..on,d1..dn,weight`.
//! Blank lines are skipped and lines starting with `#` are comments.
//! Weights are normalized to sum to one on load; the raw total is kept in
//! `raw_total`.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius used by the equirectangular projection, in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Divides every weight by the total. Rejects negative, non-finite and
/// all-zero inputs.
pub fn normalize(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::Empty("weights".into()));
    }
    for (index, &value) in weights.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite {
                context: format!("weight {index}"),
            });
        }
        if value < 0.0 {
            return Err(Error::NegativeWeight { index, value });
        }
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::AllZero);
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

fn check_points(points: &[Vec<f64>], dim: usize, what: &str) -> Result<()> {
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::dims(format!("{what} {i}"), dim, p.len()));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("{what} {i}"),
            });
        }
    }
    Ok(())
}

fn default_ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Weighted point cloud in R^n (the agent distribution).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    ids: Vec<String>,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    dim: usize,
    raw_total: f64,
}

impl DiscreteMeasure {
    /// Builds a measure with generated ids `a0, a1, ...`.
    pub fn new(points: Vec<Vec<f64>>, weights: &[f64]) -> Result<Self> {
        let ids = default_ids("a", points.len());
        Self::with_ids(ids, points, weights)
    }

    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let w = vec![1.0; points.len()];
        Self::new(points, &w)
    }

    pub fn with_ids(ids: Vec<String>, points: Vec<Vec<f64>>, weights: &[f64]) -> Result<Self> {
        let first = points.first().ok_or_else(|| Error::Empty("points".into()))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::dims("point dimension", 1, 0));
        }
        check_points(&points, dim, "point")?;
        if weights.len() != points.len() {
            return Err(Error::dims("weights", points.len(), weights.len()));
        }
        if ids.len() != points.len() {
            return Err(Error::dims("ids", points.len(), ids.len()));
        }
        let weights_norm = normalize(weights)?;
        Ok(Self {
            ids,
            points,
            weights: weights_norm,
            dim,
            raw_total: weights.iter().sum(),
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sum of the weights as they were supplied, before normalization.
    pub fn raw_total(&self) -> f64 {
        self.raw_total
    }
}

/// Weighted origin/destination pairs; each task is a point of R^2n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSet {
    ids: Vec<String>,
    origins: Vec<Vec<f64>>,
    destinations: Vec<Vec<f64>>,
    weights: Vec<f64>,
    dim: usize,
    raw_total: f64,
}

impl TaskSet {
    /// Builds a task set with generated ids `t0, t1, ...`.
    pub fn new(origins: Vec<Vec<f64>>, destinations: Vec<Vec<f64>>, weights: &[f64]) -> Result<Self> {
        let ids = default_ids("t", origins.len());
        Self::with_ids(ids, origins, destinations, weights)
    }

    pub fn uniform(origins: Vec<Vec<f64>>, destinations: Vec<Vec<f64>>) -> Result<Self> {
        let w = vec![1.0; origins.len()];
        Self::new(origins, destinations, &w)
    }

    pub fn with_ids(
        ids: Vec<String>,
        origins: Vec<Vec<f64>>,
        destinations: Vec<Vec<f64>>,
        weights: &[f64],
    ) -> Result<Self> {
        let first = origins.first().ok_or_else(|| Error::Empty("tasks".into()))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::dims("origin dimension", 1, 0));
        }
        if destinations.len() != origins.len() {
            return Err(Error::dims("destinations", origins.len(), destinations.len()));
        }
        if weights.len() != origins.len() {
            return Err(Error::dims("weights", origins.len(), weights.len()));
        }
        if ids.len() != origins.len() {
            return Err(Error::dims("ids", origins.len(), ids.len()));
        }
        check_points(&origins, dim, "origin")?;
        check_points(&destinations, dim, "destination")?;
        let weights_norm = normalize(weights)?;
        Ok(Self {
            ids,
            origins,
            destinations,
            weights: weights_norm,
            dim,
            raw_total: weights.iter().sum(),
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn origins(&self) -> &[Vec<f64>] {
        &self.origins
    }

    pub fn destinations(&self) -> &[Vec<f64>] {
        &self.destinations
    }

    pub fn origin(&self, i: usize) -> &[f64] {
        &self.origins[i]
    }

    pub fn destination(&self, i: usize) -> &[f64] {
        &self.destinations[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Dimension of each origin and destination; the joint point lives in
    /// R^(2 * dim).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    pub fn raw_total(&self) -> f64 {
        self.raw_total
    }
}

/// Pushes the task measure forward through the index map, giving one atom
/// `s_i = o_i + d_i` per task with the task's weight.
///
/// The index is stored without the leading minus sign; the reduced cost
/// `-s . y` carries it instead.
pub fn index_pushforward(tasks: &TaskSet) -> DiscreteMeasure {
    let points = tasks
        .origins
        .iter()
        .zip(&tasks.destinations)
        .map(|(o, d)| o.iter().zip(d).map(|(a, b)| a + b).collect())
        .collect();
    DiscreteMeasure {
        ids: tasks.ids.clone(),
        points,
        weights: tasks.weights.clone(),
        dim: tasks.dim,
        raw_total: tasks.raw_total,
    }
}

/// Local equirectangular projection of `(lon, lat)` degree pairs to meters
/// east/north of `reference`.
pub fn project_lonlat(points: &[(f64, f64)], reference: (f64, f64)) -> Result<Vec<[f64; 2]>> {
    let check = |(lon, lat): (f64, f64)| -> Result<()> {
        if !(-180.0..=180.0).contains(&lon) || !(-90.0..=90.0).contains(&lat) {
            return Err(Error::OutOfRange(format!("({lon}, {lat})")));
        }
        Ok(())
    };
    check(reference)?;
    let (lon0, lat0) = reference;
    let scale = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
    let cos0 = lat0.to_radians().cos();
    points
        .iter()
        .map(|&(lon, lat)| {
            check((lon, lat))?;
            Ok([scale * (lon - lon0) * cos0, scale * (lat - lat0)])
        })
        .collect()
}

// ---------------------------------------------------------------------------
// CSV

struct Table {
    header: Vec<String>,
    header_line: u64,
    rows: Vec<(u64, Vec<String>)>,
}

fn read_table<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let mut next = || -> Option<Result<(u64, Vec<String>)>> {
        records.next().map(|rec| {
            let rec = rec.map_err(|e| Error::Parse {
                row: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            Ok((line, rec.iter().map(str::to_owned).collect()))
        })
    };
    let (header_line, header) = next().ok_or_else(|| Error::Empty("missing header".into()))??;
    let mut rows = Vec::new();
    while let Some(row) = next() {
        rows.push(row?);
    }
    if rows.is_empty() {
        return Err(Error::Empty("no data rows".into()));
    }
    Ok(Table {
        header,
        header_line,
        rows,
    })
}

fn expect_header(table: &Table, expected: &[String]) -> Result<()> {
    if table.header != expected {
        return Err(Error::Parse {
            row: table.header_line,
            message: format!("expected header `{}`, found `{}`", expected.join(","), table.header.join(",")),
        });
    }
    Ok(())
}

fn parse_num(row: u64, column: &str, field: &str) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            row,
            message: format!("column `{column}`: invalid number `{field}`"),
        }),
    }
}

/// Parsed rows: id, numeric columns, weight.
fn parse_rows(table: &Table) -> Result<Vec<(String, Vec<f64>, f64)>> {
    let width = table.header.len();
    let coord_names = &table.header[1..width - 1];
    table
        .rows
        .iter()
        .map(|(line, fields)| {
            if fields.len() != width {
                return Err(Error::dims(format!("row {line}"), width, fields.len()));
            }
            let coords = coord_names
                .iter()
                .zip(&fields[1..width - 1])
                .map(|(name, f)| parse_num(*line, name, f))
                .collect::<Result<Vec<_>>>()?;
            let weight = parse_num(*line, "weight", &fields[width - 1])?;
            Ok((fields[0].clone(), coords, weight))
        })
        .collect()
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn agents_header(dim: usize) -> Vec<String> {
    let mut h = vec!["id".to_owned()];
    h.extend((1..=dim).map(|k| format!("y{k}")));
    h.push("weight".into());
    h
}

fn tasks_header(dim: usize) -> Vec<String> {
    let mut h = vec!["id".to_owned()];
    h.extend((1..=dim).map(|k| format!("o{k}")));
    h.extend((1..=dim).map(|k| format!("d{k}")));
    h.push("weight".into());
    h
}

pub fn read_agents_csv<R: Read>(reader: R) -> Result<DiscreteMeasure> {
    let table = read_table(reader)?;
    let width = table.header.len();
    if width < 3 {
        return Err(Error::Parse {
            row: table.header_line,
            message: "agents header needs id, at least one coordinate and weight".into(),
        });
    }
    expect_header(&table, &agents_header(width - 2))?;
    let rows = parse_rows(&table)?;
    let mut ids = Vec::with_capacity(rows.len());
    let mut points = Vec::with_capacity(rows.len());
    let mut weights = Vec::with_capacity(rows.len());
    for (id, p, w) in rows {
        ids.push(id);
        points.push(p);
        weights.push(w);
    }
    DiscreteMeasure::with_ids(ids, points, &weights)
}

pub fn read_tasks_csv<R: Read>(reader: R) -> Result<TaskSet> {
    let table = read_table(reader)?;
    let width = table.header.len();
    if width < 4 {
        return Err(Error::Parse {
            row: table.header_line,
            message: "tasks header needs id, origin and destination coordinates and weight".into(),
        });
    }
    let coords = width - 2;
    if coords % 2 != 0 {
        return Err(Error::dims("origin/destination columns", coords + 1, coords));
    }
    expect_header(&table, &tasks_header(coords / 2))?;
    let dim = coords / 2;
    let rows = parse_rows(&table)?;
    let mut ids = Vec::with_capacity(rows.len());
    let mut origins = Vec::with_capacity(rows.len());
    let mut destinations = Vec::with_capacity(rows.len());
    let mut weights = Vec::with_capacity(rows.len());
    for (id, mut c, w) in rows {
        let d = c.split_off(dim);
        ids.push(id);
        origins.push(c);
        destinations.push(d);
        weights.push(w);
    }
    TaskSet::with_ids(ids, origins, destinations, &weights)
}

pub fn load_agents_csv(path: impl AsRef<Path>) -> Result<DiscreteMeasure> {
    read_agents_csv(open(path.as_ref())?)
}

pub fn load_tasks_csv(path: impl AsRef<Path>) -> Result<TaskSet> {
    read_tasks_csv(open(path.as_ref())?)
}

fn write_err(e: std::io::Error) -> Error {
    Error::Io {
        path: "<writer>".into(),
        source: e,
    }
}

fn write_row<W: Write>(w: &mut W, id: &str, coords: impl Iterator<Item = f64>, weight: f64) -> std::io::Result<()> {
    write!(w, "{id}")?;
    for c in coords {
        write!(w, ",{c}")?;
    }
    writeln!(w, ",{weight}")
}

/// Writes the normalized weights; `f64` display output round-trips exactly.
pub fn write_agents_csv<W: Write>(agents: &DiscreteMeasure, mut w: W) -> Result<()> {
    (|| {
        writeln!(w, "{}", agents_header(agents.dim).join(","))?;
        for ((id, p), &wt) in agents.ids.iter().zip(&agents.points).zip(&agents.weights) {
            write_row(&mut w, id, p.iter().copied(), wt)?;
        }
        w.flush()
    })()
    .map_err(write_err)
}

pub fn write_tasks_csv<W: Write>(tasks: &TaskSet, mut w: W) -> Result<()> {
    (|| {
        writeln!(w, "{}", tasks_header(tasks.dim).join(","))?;
        for i in 0..tasks.len() {
            let coords = tasks.origins[i].iter().chain(&tasks.destinations[i]).copied();
            write_row(&mut w, &tasks.ids[i], coords, tasks.weights[i])?;
        }
        w.flush()
    })()
    .map_err(write_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&[2.0, 2.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(normalize(&[1.0]).unwrap(), vec![1.0]);
        assert_eq!(normalize(&[1.0, 3.0]).unwrap(), vec![0.25, 0.75]);
    }

    #[test]
    fn normalize_errors() {
        assert!(matches!(normalize(&[0.0, 0.0]), Err(Error::AllZero)));
        assert!(matches!(
            normalize(&[1.0, -0.5]),
            Err(Error::NegativeWeight { index: 1, .. })
        ));
        assert!(matches!(normalize(&[]), Err(Error::Empty(_))));
        assert!(matches!(normalize(&[f64::NAN]), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn agents_csv_uniform() {
        let m = read_agents_csv("id,y1,weight\na,0.0,1.0\nb,1.0,1.0\n".as_bytes()).unwrap();
        assert_eq!(m.dim(), 1);
        assert_eq!(m.points(), &[vec![0.0], vec![1.0]]);
        assert_eq!(m.weights(), &[0.5, 0.5]);
        assert_eq!(m.ids(), &["a", "b"]);
        assert_eq!(m.raw_total(), 2.0);
    }

    #[test]
    fn agents_csv_single_atom_2d() {
        let m = read_agents_csv("id,y1,y2,weight\na,0,0,1\n".as_bytes()).unwrap();
        assert_eq!(m.dim(), 2);
        assert_eq!(m.points(), &[vec![0.0, 0.0]]);
        assert_eq!(m.weights(), &[1.0]);
    }

    #[test]
    fn agents_csv_normalizes() {
        let m = read_agents_csv("id,y1,weight\na,0,1\nb,2,3\n".as_bytes()).unwrap();
        assert_eq!(m.weights(), &[0.25, 0.75]);
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let src = "# agents\nid,y1,weight\n\na,0,1\n# middle\n\nb,2,1\n";
        let m = read_agents_csv(src.as_bytes()).unwrap();
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn agents_csv_errors() {
        let err = read_agents_csv("id,y1,weight\na,0,1\nb,x,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err:?}");
        let err = read_agents_csv("id,y1,y2,weight\na,0,1,1\nb,2,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }), "{err:?}");
        let err = read_agents_csv("id,x,weight\na,0,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }), "{err:?}");
        let err = read_agents_csv("id,y1,weight\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Empty(_)), "{err:?}");
        let err = read_agents_csv("id,y1,weight\na,0,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::AllZero), "{err:?}");
    }

    #[test]
    fn tasks_csv_examples() {
        let t = read_tasks_csv("id,o1,d1,weight\nt1,1.0,0.0,1\n".as_bytes()).unwrap();
        assert_eq!(t.origins(), &[vec![1.0]]);
        assert_eq!(t.destinations(), &[vec![0.0]]);
        assert_eq!(t.weights(), &[1.0]);

        let t = read_tasks_csv("id,o1,d1,weight\nt1,1,0,2\nt2,0,1,2\n".as_bytes()).unwrap();
        assert_eq!(t.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn tasks_csv_dimension_errors() {
        // header declares n = 2, row carries 3 coordinates
        let src = "id,o1,o2,d1,d2,weight\nt1,0,0,1,1,1\nt2,0,0,1,1\n";
        assert!(matches!(
            read_tasks_csv(src.as_bytes()),
            Err(Error::DimensionMismatch { .. })
        ));
        // odd number of coordinate columns
        let src = "id,o1,o2,d1,weight\nt1,0,0,1,1\n";
        assert!(matches!(
            read_tasks_csv(src.as_bytes()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn index_pushforward_examples() {
        let t = TaskSet::uniform(vec![vec![1.0]], vec![vec![0.0]]).unwrap();
        assert_eq!(index_pushforward(&t).points(), &[vec![1.0]]);

        let t = TaskSet::uniform(vec![vec![0.0, 0.0]], vec![vec![0.0, 0.0]]).unwrap();
        assert_eq!(index_pushforward(&t).points(), &[vec![0.0, 0.0]]);

        let t = TaskSet::uniform(
            vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            vec![vec![2.0, 0.0], vec![1.0, -1.0]],
        )
        .unwrap();
        let s = index_pushforward(&t);
        assert_eq!(s.points(), &[vec![2.0, 0.0], vec![2.0, 0.0]]);
        assert_eq!(s.weights(), t.weights());
    }

    #[test]
    fn projection_examples() {
        let r = (18.0, 59.3);
        let p = project_lonlat(&[r, (18.0, 60.3)], r).unwrap();
        assert_eq!(p[0], [0.0, 0.0]);
        assert_eq!(p[1][0], 0.0);
        assert_relative_eq!(p[1][1], 111_194.9, epsilon = 0.1);

        let p = project_lonlat(&[(19.0, 60.0)], (18.0, 60.0)).unwrap();
        assert_relative_eq!(p[0][0], 55_597.5, epsilon = 0.1);
        assert_relative_eq!(p[0][1], 0.0);
    }

    #[test]
    fn projection_rejects_bad_coordinates() {
        assert!(matches!(
            project_lonlat(&[(0.0, 91.0)], (0.0, 0.0)),
            Err(Error::OutOfRange(_))
        ));
        assert!(matches!(
            project_lonlat(&[(0.0, 0.0)], (-181.0, 0.0)),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn constructor_rejects_ragged_points() {
        let err = DiscreteMeasure::uniform(vec![vec![0.0, 1.0], vec![1.0]]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        let err = TaskSet::uniform(vec![vec![0.0]], vec![vec![1.0, 2.0]]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }
}
