//! Dataset files: JSON with an embedded space descriptor, or CSV with one
//! point per row.
//!
//! CSV columns are `x0, x1, …` (ambient coordinates) and an optional
//! `weight`. The space comes either from a leading `# curvature=<κ> dim=<l>`
//! line or from the caller.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SCHEMA_VERSION;
use crate::bounds::ConcentrationSpec;
use crate::error::{Error, Result};
use crate::geometry::{ModelSpace, Point};
use crate::solver::DiscreteMeasure;

/// Points within this distance of the manifold are projected onto it.
pub const PROJECTION_TOL: f64 = 1e-6;
/// Allowed deviation of the weight sum from 1 before renormalization.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Json,
    Csv,
}

impl DatasetFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "json" => Some(DatasetFormat::Json),
            "csv" => Some(DatasetFormat::Csv),
            _ => None,
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetFormat::Json => "json",
            DatasetFormat::Csv => "csv",
        })
    }
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(DatasetFormat::Json),
            "csv" => Ok(DatasetFormat::Csv),
            other => Err(Error::invalid(format!("unknown dataset format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub measure: DiscreteMeasure,
    pub concentration: Option<ConcentrationSpec>,
}

impl Dataset {
    pub fn space(&self) -> &ModelSpace {
        self.measure.space()
    }

    /// Serializes back into the JSON dataset schema.
    pub fn to_json(&self) -> serde_json::Value {
        let file = DatasetFile {
            schema_version: SCHEMA_VERSION,
            space: SpaceDescriptor {
                curvature: self.space().curvature(),
                dim: self.space().dim(),
            },
            points: self.measure.points().iter().map(|p| p.coords().to_vec()).collect(),
            weights: Some(self.measure.weights().to_vec()),
            concentration: self.concentration.as_ref().map(|c| ConcentrationFile {
                center: c.center.coords().to_vec(),
                rho: c.rho,
                alpha: c.alpha,
            }),
        };
        serde_json::to_value(file).expect("dataset serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDescriptor {
    pub curvature: f64,
    pub dim: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConcentrationFile {
    center: Vec<f64>,
    rho: f64,
    alpha: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    schema_version: u32,
    space: SpaceDescriptor,
    points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    concentration: Option<ConcentrationFile>,
}

/// Loads and validates a dataset file.
pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<Dataset> {
    load_dataset_in(path, format, None)
}

/// As [`load_dataset`]; `space` overrides (JSON) or supplies (CSV) the space.
pub fn load_dataset_in(
    path: impl AsRef<Path>,
    format: DatasetFormat,
    space: Option<ModelSpace>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::invalid(format!("cannot read dataset {}: {e}", path.display()))
    })?;
    parse_dataset(&text, format, space)
}

pub fn parse_dataset(text: &str, format: DatasetFormat, space: Option<ModelSpace>) -> Result<Dataset> {
    match format {
        DatasetFormat::Json => parse_json(text, space),
        DatasetFormat::Csv => parse_csv(text, space),
    }
}

fn parse_json(text: &str, space_override: Option<ModelSpace>) -> Result<Dataset> {
    let file: DatasetFile =
        serde_json::from_str(text).map_err(|e| Error::parse("dataset JSON", e))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::invalid(format!(
            "unsupported dataset schema_version {} (expected {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    let space = match space_override {
        Some(s) => s,
        None => ModelSpace::new(file.space.curvature, file.space.dim)?,
    };
    let measure = build_measure(space, file.points, file.weights)?;
    let concentration = file
        .concentration
        .map(|c| {
            let center = project_point(&space, c.center, "concentration center")?;
            ConcentrationSpec::new(center, c.rho, c.alpha)
        })
        .transpose()?;
    Ok(Dataset {
        measure,
        concentration,
    })
}

fn parse_space_comment(line: &str) -> Result<ModelSpace> {
    let mut curvature = None;
    let mut dim = None;
    for token in line.trim_start_matches('#').split_whitespace() {
        let Some((key, value)) = token.split_once('=') else {
            continue;
        };
        match key {
            "curvature" => {
                curvature = Some(value.parse::<f64>().map_err(|e| Error::parse("curvature", e))?)
            }
            "dim" => dim = Some(value.parse::<usize>().map_err(|e| Error::parse("dim", e))?),
            _ => {}
        }
    }
    match (curvature, dim) {
        (Some(k), Some(d)) => ModelSpace::new(k, d),
        _ => Err(Error::invalid(
            "CSV space line must look like `# curvature=<k> dim=<l>`",
        )),
    }
}

fn parse_csv(text: &str, space_override: Option<ModelSpace>) -> Result<Dataset> {
    let mut body = text;
    let mut space = space_override;
    if let Some(first) = text.lines().next() {
        if first.trim_start().starts_with('#') {
            let declared = parse_space_comment(first)?;
            space.get_or_insert(declared);
            body = &text[first.len()..];
        }
    }
    let space = space.ok_or_else(|| {
        Error::invalid("CSV datasets need a `# curvature=<k> dim=<l>` line or an explicit space")
    })?;

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(body.trim_start().as_bytes());
    let headers = reader.headers().map_err(|e| Error::parse("CSV header", e))?.clone();
    let mut coord_cols = Vec::new();
    let mut weight_col = None;
    for (i, h) in headers.iter().enumerate() {
        if h == "weight" {
            weight_col = Some(i);
        } else if let Some(k) = h.strip_prefix('x').and_then(|k| k.parse::<usize>().ok()) {
            coord_cols.push((k, i));
        } else {
            return Err(Error::invalid(format!("unexpected CSV column `{h}`")));
        }
    }
    coord_cols.sort();
    if coord_cols.iter().enumerate().any(|(j, &(k, _))| j != k) {
        return Err(Error::invalid("CSV coordinate columns must be x0, x1, … without gaps"));
    }

    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse("CSV record", e))?;
        let field = |i: usize| -> Result<f64> {
            let raw = record.get(i).unwrap_or("");
            raw.parse::<f64>()
                .map_err(|e| Error::parse(format!("CSV row {} value `{raw}`", line + 1), e))
        };
        points.push(coord_cols.iter().map(|&(_, i)| field(i)).collect::<Result<Vec<_>>>()?);
        if let Some(i) = weight_col {
            weights.push(field(i)?);
        }
    }
    let weights = weight_col.map(|_| weights);
    Ok(Dataset {
        measure: build_measure(space, points, weights)?,
        concentration: None,
    })
}

fn project_point(space: &ModelSpace, coords: Vec<f64>, what: &str) -> Result<Point> {
    space
        .project(coords, PROJECTION_TOL)
        .map_err(|e| Error::invalid(format!("{what}: {e}")))
}

fn build_measure(
    space: ModelSpace,
    raw_points: Vec<Vec<f64>>,
    weights: Option<Vec<f64>>,
) -> Result<DiscreteMeasure> {
    if raw_points.is_empty() {
        return Err(Error::invalid("dataset has no points"));
    }
    let points = raw_points
        .into_iter()
        .enumerate()
        .map(|(i, c)| project_point(&space, c, &format!("point {i}")))
        .collect::<Result<Vec<_>>>()?;
    match weights {
        None => DiscreteMeasure::uniform(space, points),
        Some(w) => {
            if w.len() != points.len() {
                return Err(Error::invalid(format!(
                    "{} weights for {} points",
                    w.len(),
                    points.len()
                )));
            }
            if let Some(bad) = w.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
                return Err(Error::invalid(format!("weights must be nonnegative, found {bad}")));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(Error::invalid(format!("weights sum to {total}, not 1")));
            }
            DiscreteMeasure::new(space, points, w.iter().map(|x| x / total).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_defaults_to_uniform_weights() {
        let text = r#"{"schema_version":1,"space":{"curvature":1,"dim":2},
            "points":[[1,0,0],[0,1,0],[0,0,1]]}"#;
        let ds = parse_dataset(text, DatasetFormat::Json, None).unwrap();
        assert_eq!(ds.measure.len(), 3);
        for w in ds.measure.weights() {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(ds.concentration.is_none());
    }

    #[test]
    fn near_manifold_points_are_projected() {
        let text = r#"{"schema_version":1,"space":{"curvature":1,"dim":2},
            "points":[[1.0000001,0,0]]}"#;
        let ds = parse_dataset(text, DatasetFormat::Json, None).unwrap();
        assert_eq!(ds.measure.points()[0].coords(), &[1.0, 0.0, 0.0]);

        let far = r#"{"schema_version":1,"space":{"curvature":1,"dim":2},"points":[[1.1,0,0]]}"#;
        assert!(parse_dataset(far, DatasetFormat::Json, None).is_err());
    }

    #[test]
    fn bad_weights_are_rejected() {
        let text = r#"{"schema_version":1,"space":{"curvature":0,"dim":2},
            "points":[[0,0],[1,0]],"weights":[0.5,0.4]}"#;
        let err = parse_dataset(text, DatasetFormat::Json, None).unwrap_err();
        assert!(err.to_string().contains("sum"), "{err}");
        let neg = r#"{"schema_version":1,"space":{"curvature":0,"dim":2},
            "points":[[0,0],[1,0]],"weights":[1.5,-0.5]}"#;
        assert!(parse_dataset(neg, DatasetFormat::Json, None).is_err());
    }

    #[test]
    fn json_round_trip_with_concentration() {
        let text = r#"{"schema_version":1,"space":{"curvature":0,"dim":2},
            "points":[[0,0],[1,0]],"weights":[0.6,0.4],
            "concentration":{"center":[0,0],"rho":0.5,"alpha":0.6}}"#;
        let ds = parse_dataset(text, DatasetFormat::Json, None).unwrap();
        let again = parse_dataset(&ds.to_json().to_string(), DatasetFormat::Json, None).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn csv_with_space_line() {
        let text = "# curvature=0 dim=2\nx0,x1,weight\n0,0,0.6\n3,1,0.4\n";
        let ds = parse_dataset(text, DatasetFormat::Csv, None).unwrap();
        assert_eq!(ds.measure.weights(), &[0.6, 0.4]);
        assert_eq!(ds.measure.points()[1].coords(), &[3.0, 1.0]);

        let bare = "x0,x1\n0,0\n3,1\n";
        assert!(parse_dataset(bare, DatasetFormat::Csv, None).is_err());
        let flat = ModelSpace::flat(2).unwrap();
        let ds = parse_dataset(bare, DatasetFormat::Csv, Some(flat)).unwrap();
        assert_eq!(ds.measure.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn csv_rejects_unknown_columns_and_bad_numbers() {
        let flat = ModelSpace::flat(2).unwrap();
        assert!(parse_dataset("x0,y\n0,0\n", DatasetFormat::Csv, Some(flat)).is_err());
        assert!(parse_dataset("x0,x1\n0,abc\n", DatasetFormat::Csv, Some(flat)).is_err());
    }

    #[test]
    fn unknown_schema_version() {
        let text = r#"{"schema_version":2,"space":{"curvature":0,"dim":2},"points":[[0,0]]}"#;
        assert!(parse_dataset(text, DatasetFormat::Json, None).is_err());
    }
}
