//! Station temperature tables.
//!
//! Wide CSV with header `station_id,group,lat,lon,v1,...,vT`, one station per
//! row. The covariance is estimated from month-over-month differences of each
//! series (denominator `T − 2`, the number of differences minus one).

use std::collections::HashMap;
use std::path::Path;

use subopt_core::objectives::{CovarianceMatrix, SymmetricMatrix};

use crate::error::{BenchError, Result};

const FIXED_COLUMNS: [&str; 4] = ["station_id", "group", "lat", "lon"];

#[derive(Clone, Debug)]
pub struct StationData {
    pub ids: Vec<String>,
    /// Group index of each station, in order of first appearance.
    pub groups: Vec<usize>,
    pub group_labels: Vec<String>,
    pub covariance: CovarianceMatrix,
}

impl StationData {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Station indices of each group.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.group_labels.len()];
        for (i, &g) in self.groups.iter().enumerate() {
            blocks[g].push(i);
        }
        blocks
    }
}

/// Sample covariance of the first differences of each series, plus `jitter`
/// on the diagonal.
pub fn difference_covariance(series: &[Vec<f64>], jitter: f64) -> Result<CovarianceMatrix> {
    let n = series.len();
    let diffs: Vec<Vec<f64>> = series
        .iter()
        .map(|s| s.windows(2).map(|w| w[1] - w[0]).collect())
        .collect();
    let t = diffs.first().map_or(0, Vec::len);
    if t < 2 {
        return Err(BenchError::config(
            "stations",
            "need at least 3 time points for a covariance of differences",
        ));
    }
    let centred: Vec<Vec<f64>> = diffs
        .iter()
        .map(|d| {
            let mean = d.iter().sum::<f64>() / t as f64;
            d.iter().map(|x| x - mean).collect()
        })
        .collect();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let c = centred[i].iter().zip(&centred[j]).map(|(a, b)| a * b).sum::<f64>() / (t - 1) as f64;
            data[i * n + j] = c;
            data[j * n + i] = c;
        }
    }
    let matrix = SymmetricMatrix::from_row_major(n, data)?;
    Ok(CovarianceMatrix::new(matrix, jitter)?)
}

pub fn ingest_stations(path: &Path, jitter: f64) -> Result<StationData> {
    let file = std::fs::File::open(path).map_err(|e| BenchError::io(path, e))?;
    ingest_reader(file, path, jitter)
}

pub fn ingest_reader<R: std::io::Read>(reader: R, path: &Path, jitter: f64) -> Result<StationData> {
    let ingest = |row: usize, message: String| BenchError::Ingest {
        path: path.to_path_buf(),
        row,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    for (i, want) in FIXED_COLUMNS.iter().enumerate() {
        if header.get(i) != Some(*want) {
            return Err(ingest(1, format!("column {} must be `{want}`", i + 1)));
        }
    }
    let t = header.len() - FIXED_COLUMNS.len();
    if t < 3 {
        return Err(ingest(1, format!("{t} value columns; at least 3 are needed")));
    }

    let mut ids = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut group_index: HashMap<String, usize> = HashMap::new();
    let mut group_labels = Vec::new();
    let mut groups = Vec::new();
    let mut series = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(ingest(row, format!("{} cells, header has {}", rec.len(), header.len())));
        }
        let id = rec[0].to_string();
        if let Some(first) = seen.insert(id.clone(), row) {
            return Err(ingest(
                row,
                format!("duplicate station id `{id}` (first on row {first})"),
            ));
        }
        let label = rec[1].to_string();
        let next = group_labels.len();
        let g = *group_index.entry(label.clone()).or_insert_with(|| {
            group_labels.push(label);
            next
        });
        for col in 2..4 {
            rec[col].parse::<f64>().map_err(|_| {
                ingest(
                    row,
                    format!("column `{}` is not numeric: `{}`", &header[col], &rec[col]),
                )
            })?;
        }
        let values = (4..rec.len())
            .map(|col| {
                rec[col].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    ingest(
                        row,
                        format!("column `{}` is not numeric: `{}`", &header[col], &rec[col]),
                    )
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        ids.push(id);
        groups.push(g);
        series.push(values);
    }
    if ids.is_empty() {
        return Err(ingest(2, "no stations".into()));
    }
    let covariance = difference_covariance(&series, jitter).map_err(|e| ingest(0, e.to_string()))?;
    Ok(StationData {
        ids,
        groups,
        group_labels,
        covariance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn parse(text: &str) -> Result<StationData> {
        ingest_reader(text.as_bytes(), Path::new("inline.csv"), 1e-9)
    }

    #[test]
    fn identical_series_are_perfectly_correlated() {
        let d = parse("station_id,group,lat,lon,v1,v2,v3,v4\na,x,0,0,1,3,2,5\nb,y,1,1,1,3,2,5\n").unwrap();
        let m = d.covariance.matrix();
        assert!((m.get(0, 1) - (m.get(0, 0) - 1e-9)).abs() < 1e-12);
        assert_eq!(d.group_labels, vec!["x", "y"]);
        // det of the pair is at the jitter scale
        let det = m.get(0, 0) * m.get(1, 1) - m.get(0, 1).powi(2);
        assert!(det.abs() < 1e-6);
    }

    #[test]
    fn white_noise_covariance_is_near_diagonal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let series: Vec<Vec<f64>> = (0..3)
            .map(|_| {
                // random walk, so that differences are white noise of unit variance
                let mut x = 0.0;
                (0..10_001)
                    .map(|_| {
                        x += rng.sample::<f64, _>(StandardNormal);
                        x
                    })
                    .collect()
            })
            .collect();
        let cov = difference_covariance(&series, 0.0).unwrap();
        let m = cov.matrix();
        for i in 0..3 {
            assert!((m.get(i, i) - 1.0).abs() < 0.05, "{}", m.get(i, i));
            for j in 0..3 {
                if i != j {
                    assert!(m.get(i, j).abs() < 0.05, "{}", m.get(i, j));
                }
            }
        }
    }

    #[test]
    fn rejects_bad_rows() {
        let ragged = parse("station_id,group,lat,lon,v1,v2,v3\na,x,0,0,1,2,3\nb,x,0,0,1,2\n").unwrap_err();
        assert!(matches!(ragged, BenchError::Ingest { row: 3, .. }), "{ragged}");
        let text = parse("station_id,group,lat,lon,v1,v2,v3\na,x,0,0,1,oops,3\n").unwrap_err();
        assert!(matches!(text, BenchError::Ingest { row: 2, .. }), "{text}");
        let dup = parse("station_id,group,lat,lon,v1,v2,v3\na,x,0,0,1,2,3\na,y,0,0,1,2,4\n").unwrap_err();
        assert!(matches!(dup, BenchError::Ingest { row: 3, .. }), "{dup}");
        let header = parse("id,group,lat,lon,v1,v2,v3\na,x,0,0,1,2,3\n").unwrap_err();
        assert!(matches!(header, BenchError::Ingest { row: 1, .. }), "{header}");
    }
}
