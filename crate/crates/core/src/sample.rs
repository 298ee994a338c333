//! Sample ingestion, the left MAD function and the empirical CDF estimators
//! that serve as beta-regression responses.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_SAMPLE_SIZE: usize = 3;

/// A validated univariate sample, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    has_ties: bool,
}

impl Sample {
    /// Validates and sorts `values`.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if let Some(row) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { row: row + 1 });
        }
        if values.len() < MIN_SAMPLE_SIZE {
            return Err(Error::TooFewPoints {
                n: values.len(),
                min: MIN_SAMPLE_SIZE,
            });
        }
        values.sort_by(f64::total_cmp);
        let has_ties = values.windows(2).any(|w| w[0] == w[1]);
        Ok(Self { values, has_ties })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn has_ties(&self) -> bool {
        self.has_ties
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn range(&self) -> f64 {
        self.max() - self.min()
    }

    /// Sample mean and standard deviation (denominator n - 1).
    pub fn mean_sd(&self) -> (f64, f64) {
        let n = self.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let ss: f64 = self.values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (mean, (ss / (n - 1.0)).sqrt())
    }

    /// Linear-interpolation quantile (the default definition of R's `quantile`).
    pub fn quantile(&self, prob: f64) -> f64 {
        let h = (self.len() - 1) as f64 * prob.clamp(0.0, 1.0);
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        self.values[lo] + (h - lo as f64) * (self.values[hi] - self.values[lo])
    }
}

/// Column selector for [`load_sample`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for Column {
    type Err = std::convert::Infallible;

    /// All-digit strings select by zero-based index, anything else by name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_string()),
        })
    }
}

/// Reads one numeric column from CSV text.
///
/// The first row is a header iff its selected cell does not parse as a number.
/// Blank cells are skipped. Data rows are numbered from 1, excluding the header.
pub fn load_sample<R: Read>(source: R, column: &Column) -> Result<Sample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut records = reader.records();

    let first = match records.next() {
        Some(r) => r.map_err(|e| Error::Csv(e.to_string()))?,
        None => return Err(Error::EmptyColumn),
    };

    let first_numeric = match column {
        Column::Index(i) => first.get(*i).map(|c| c.parse::<f64>().is_ok()).unwrap_or(false),
        Column::Name(_) => false,
    };
    let index = match column {
        Column::Index(i) => *i,
        Column::Name(name) => first
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.clone()))?,
    };

    let mut values = Vec::new();
    let mut push = |row: usize, cell: Option<&str>| -> Result<()> {
        let cell = cell.unwrap_or("");
        if cell.is_empty() {
            return Ok(());
        }
        let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
            row,
            value: cell.to_string(),
        })?;
        if !v.is_finite() {
            return Err(Error::NonFiniteValue { row });
        }
        values.push(v);
        Ok(())
    };

    let mut row = 0;
    if first_numeric {
        row += 1;
        push(row, first.get(index))?;
    }
    for record in records {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        row += 1;
        push(row, record.get(index))?;
    }
    if values.is_empty() {
        return Err(Error::EmptyColumn);
    }
    Sample::new(values)
}

/// Left MAD function Δ⁻(v) = (1/n) Σ (v - x_j) I{x_j ≤ v}.
pub fn left_mad(sample: &Sample, v: f64) -> f64 {
    let n = sample.len() as f64;
    sample
        .values()
        .iter()
        .take_while(|&&x| x <= v)
        .map(|x| v - x)
        .sum::<f64>()
        / n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Empirical,
    Fbc,
    Ties,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimatorKind::Empirical => "empirical",
            EstimatorKind::Fbc => "fbc",
            EstimatorKind::Ties => "ties",
        })
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "empirical" => Ok(EstimatorKind::Empirical),
            "fbc" => Ok(EstimatorKind::Fbc),
            "ties" => Ok(EstimatorKind::Ties),
            _ => Err(Error::BadSpec(format!("unknown estimator '{s}' (expected empirical, fbc or ties)"))),
        }
    }
}

/// Distribution function estimates at the order statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    pub kind: EstimatorKind,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// The step-function empirical CDF, (1/n) Σ I{x_j ≤ x_i}.
///
/// Reaches 1 at the maximum, so it is for diagnostics only and never a
/// regression response.
pub fn empirical_cdf(sample: &Sample) -> EmpiricalCdf {
    let xs = sample.values();
    let n = xs.len();
    let mut y = vec![0.0; n];
    // Walk from the top so tied values share the count of their last copy.
    let mut count = n;
    for i in (0..n).rev() {
        if i + 1 < n && xs[i] != xs[i + 1] {
            count = i + 1;
        }
        y[i] = count as f64 / n as f64;
    }
    EmpiricalCdf {
        kind: EstimatorKind::Empirical,
        x: xs.to_vec(),
        y,
    }
}

/// Forward-backward-centre estimate using the neighbours of each order
/// statistic. Requires a tie-free sample.
pub fn fbc_cdf(sample: &Sample) -> Result<EmpiricalCdf> {
    if sample.has_ties() {
        return Err(Error::TiesPresent);
    }
    let xs = sample.values();
    let n = xs.len();
    let nf = n as f64;
    let y = (1..=n)
        .map(|i| {
            if i == 1 {
                1.0 / nf
            } else if i == n {
                (nf - 1.0) / nf
            } else {
                let ratio = (xs[i - 1] - xs[i - 2]) / (xs[i] - xs[i - 2]);
                (3.0 * i as f64 - 1.0) / (3.0 * nf) - ratio / (3.0 * nf)
            }
        })
        .collect();
    Ok(EmpiricalCdf {
        kind: EstimatorKind::Fbc,
        x: xs.to_vec(),
        y,
    })
}

/// Rank-based variant for samples with ties: (2i - 1)/(2n) in the interior,
/// 1/n and (n - 1)/n at the ends.
pub fn ties_cdf(sample: &Sample) -> EmpiricalCdf {
    let n = sample.len();
    let nf = n as f64;
    let y = (1..=n)
        .map(|i| {
            if i == 1 {
                1.0 / nf
            } else if i == n {
                (nf - 1.0) / nf
            } else {
                (2.0 * i as f64 - 1.0) / (2.0 * nf)
            }
        })
        .collect();
    EmpiricalCdf {
        kind: EstimatorKind::Ties,
        x: sample.values().to_vec(),
        y,
    }
}

/// Picks the FBC estimator for tie-free samples and the ties variant otherwise.
pub fn response_cdf(sample: &Sample) -> EmpiricalCdf {
    fbc_cdf(sample).unwrap_or_else(|_| ties_cdf(sample))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sample(v: &[f64]) -> Sample {
        Sample::new(v.to_vec()).unwrap()
    }

    #[test]
    fn load_sorts_and_detects_ties() {
        let s = load_sample("x\n3\n1\n2\n".as_bytes(), &Column::Index(0)).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.len(), 3);
        assert!(!s.has_ties());
        let s = load_sample("x\n1\n1\n2\n".as_bytes(), &Column::Name("x".into())).unwrap();
        assert!(s.has_ties());
    }

    #[test]
    fn load_reports_non_numeric_row() {
        let err = load_sample("x\nfoo\n".as_bytes(), &Column::Index(0)).unwrap_err();
        assert_eq!(
            err,
            Error::NonNumericCell {
                row: 1,
                value: "foo".into()
            }
        );
    }

    #[test]
    fn load_without_header_and_blank_cells() {
        let s = load_sample("a,4\nb,\nc,2\nd,9\n".as_bytes(), &Column::Index(1)).unwrap();
        assert_eq!(s.values(), &[2.0, 4.0, 9.0]);
    }

    #[test]
    fn load_errors() {
        assert_eq!(load_sample("x\n".as_bytes(), &Column::Index(0)), Err(Error::EmptyColumn));
        assert_eq!(load_sample("".as_bytes(), &Column::Index(0)), Err(Error::EmptyColumn));
        assert_eq!(
            load_sample("x\n1\n2\n".as_bytes(), &Column::Index(0)),
            Err(Error::TooFewPoints { n: 2, min: 3 })
        );
        assert_eq!(
            load_sample("x\n1\n".as_bytes(), &Column::Name("y".into())),
            Err(Error::UnknownColumn("y".into()))
        );
        assert!(matches!(
            load_sample("x\n1\ninf\n2\n".as_bytes(), &Column::Index(0)),
            Err(Error::NonFiniteValue { row: 2 })
        ));
    }

    #[test]
    fn column_parse() {
        assert_eq!("2".parse::<Column>().unwrap(), Column::Index(2));
        assert_eq!("height".parse::<Column>().unwrap(), Column::Name("height".into()));
    }

    #[test]
    fn left_mad_examples() {
        let s = sample(&[1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(left_mad(&s, 3.0), 1.0, epsilon = 1e-15);
        assert_eq!(left_mad(&s, 0.5), 0.0);
        assert_eq!(left_mad(&s, 1.0), 0.0);
    }

    #[test]
    fn empirical_examples() {
        assert_eq!(empirical_cdf(&sample(&[1.0, 2.0, 3.0, 4.0])).y, vec![0.25, 0.5, 0.75, 1.0]);
        let e = empirical_cdf(&sample(&[1.0, 1.0, 2.0]));
        assert_abs_diff_eq!(e.y[0], 2.0 / 3.0);
        assert_abs_diff_eq!(e.y[1], 2.0 / 3.0);
        assert_eq!(e.y[2], 1.0);
    }

    #[test]
    fn fbc_examples() {
        let f = fbc_cdf(&sample(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(f.kind, EstimatorKind::Fbc);
        assert_abs_diff_eq!(f.y[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(f.y[1], 0.375, epsilon = 1e-15);
        assert_abs_diff_eq!(f.y[3], 0.75, epsilon = 1e-15);
        let f = fbc_cdf(&sample(&[0.0, 1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_abs_diff_eq!(f.y[2], 0.5, epsilon = 1e-15);
        assert_eq!(fbc_cdf(&sample(&[1.0, 1.0, 2.0])), Err(Error::TiesPresent));
    }

    #[test]
    fn ties_examples() {
        let t = ties_cdf(&sample(&[1.0, 2.0, 2.0, 4.0]));
        assert_eq!(t.y, vec![0.25, 0.375, 0.625, 0.75]);
        let ten: Vec<f64> = (0..10).map(f64::from).collect();
        assert_abs_diff_eq!(ties_cdf(&sample(&ten)).y[4], 0.45, epsilon = 1e-15);
    }

    #[test]
    fn response_routing() {
        assert_eq!(response_cdf(&sample(&[1.0, 2.0, 3.0])).kind, EstimatorKind::Fbc);
        assert_eq!(response_cdf(&sample(&[1.0, 1.0, 3.0])).kind, EstimatorKind::Ties);
    }

    fn distinct_sample() -> impl Strategy<Value = Sample> {
        prop::collection::vec(-1e3f64..1e3, 3..80).prop_filter_map("ties", |v| {
            let s = Sample::new(v).ok()?;
            (!s.has_ties()).then_some(s)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn fbc_strictly_increasing(s in distinct_sample()) {
            let f = fbc_cdf(&s).unwrap();
            let n = s.len() as f64;
            let last = f.y.len() - 2;
            for (i, w) in f.y.windows(2).enumerate() {
                // Interior steps are at least 2/(3n); the two boundary steps at least 1/(3n).
                let margin = if i == 0 || i == last { 1.0 } else { 2.0 } / (3.0 * n);
                prop_assert!(w[1] - w[0] >= margin - 1e-12);
            }
            prop_assert!(f.y.iter().all(|&y| y > 0.0 && y < 1.0));
        }

        #[test]
        fn estimators_within_one_over_n_of_empirical(s in distinct_sample()) {
            let e = empirical_cdf(&s);
            let n = s.len() as f64;
            for est in [fbc_cdf(&s).unwrap(), ties_cdf(&s)] {
                for (a, b) in est.y.iter().zip(&e.y) {
                    prop_assert!((a - b).abs() <= 1.0 / n + 1e-12);
                }
            }
        }

        #[test]
        fn left_mad_convex_nondecreasing(s in distinct_sample()) {
            let lo = s.min() - 1.0;
            let hi = s.max() + 1.0;
            let grid: Vec<f64> = (0..=300).map(|i| lo + (hi - lo) * i as f64 / 300.0).collect();
            let d: Vec<f64> = grid.iter().map(|&v| left_mad(&s, v)).collect();
            let scale = 1.0 + d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for w in d.windows(3) {
                prop_assert!(w[1] >= w[0] - 1e-12 * scale);
                prop_assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-12 * scale);
            }
        }

        #[test]
        fn left_mad_slope_is_empirical_cdf(s in distinct_sample()) {
            // Between consecutive order statistics Δ⁻ is linear with slope i/n.
            let e = empirical_cdf(&s);
            let xs = s.values();
            for i in 0..xs.len() - 1 {
                let (a, b) = (xs[i], xs[i + 1]);
                let slope = (left_mad(&s, b) - left_mad(&s, a)) / (b - a);
                let tol = 1e-9 * (1.0 + xs.iter().map(|x| x.abs()).fold(0.0, f64::max) / (b - a));
                prop_assert!((slope - e.y[i]).abs() <= tol.max(1e-9));
            }
        }
    }
}
