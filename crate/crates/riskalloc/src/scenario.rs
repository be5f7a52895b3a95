//! Finite scenario spaces: probabilities, position matrices, portfolios,
//! empirical distribution functions, and quantiles.
//!
//! Core capabilities:
//! - `ScenarioSet` holds `m` scenario probabilities and an `n x m` matrix of
//!   position outcomes with validated invariants (positive probabilities
//!   summing to one, finite outcomes, distinct labels).
//! - `aggregate` forms the portfolio outcome `sum_i u_i X_i` with exact
//!   left-to-right floating-point summation for bit-stable baselines.
//! - `empirical_cdf`, `quantile`, and `expectation` on outcomes.
//! - CSV loading with `#` comments, validation, and errors naming the
//!   1-based file line and column of the first violation.
//!
//! All types are immutable after construction and all operations are pure,
//! so values can be shared freely across threads.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::PROB_SUM_TOL;

/// Slack used when comparing cumulative probabilities against a quantile
/// level, absorbing summation-order differences between the cdf and the
/// sorted accumulation.
const CUM_PROB_EPS: f64 = 1e-12;

/// A finite probability space together with the outcomes of `n` positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenarioSet")]
pub struct ScenarioSet {
    probs: Vec<f64>,
    positions: Vec<Vec<f64>>,
    labels: Vec<String>,
}

/// Unvalidated mirror of [`ScenarioSet`] used to funnel deserialization
/// through the validating constructor.
#[derive(Deserialize)]
struct RawScenarioSet {
    probs: Vec<f64>,
    positions: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl TryFrom<RawScenarioSet> for ScenarioSet {
    type Error = Error;

    fn try_from(raw: RawScenarioSet) -> Result<Self> {
        ScenarioSet::new(raw.probs, raw.positions, raw.labels)
    }
}

impl ScenarioSet {
    /// Validates and builds a scenario set from probabilities, an `n x m`
    /// position matrix, and `n` labels.
    pub fn new(probs: Vec<f64>, positions: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        let m = probs.len();
        let n = positions.len();
        if n == 0 || m == 0 {
            return Err(Error::EmptyScenarioSet { n, m });
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: labels.len(),
            });
        }
        for (j, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::NonPositiveProbability {
                    scenario: j,
                    value: p,
                });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::ProbabilitySum { sum });
        }
        for (i, row) in positions.iter().enumerate() {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    actual: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        what: format!("outcome of {} in scenario {j}", labels[i]),
                        value: v,
                    });
                }
            }
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(Error::DuplicateLabel {
                    label: label.clone(),
                });
            }
        }
        Ok(Self {
            probs,
            positions,
            labels,
        })
    }

    /// Builds an equally-likely scenario set, labelling positions `X_1..X_n`.
    pub fn uniform(positions: Vec<Vec<f64>>) -> Result<Self> {
        let m = positions.first().map_or(0, Vec::len);
        if m == 0 {
            return Err(Error::EmptyScenarioSet {
                n: positions.len(),
                m,
            });
        }
        let labels = (1..=positions.len()).map(|i| format!("X_{i}")).collect();
        Self::new(vec![1.0 / m as f64; m], positions, labels)
    }

    /// Number of positions `n`.
    pub fn n(&self) -> usize {
        self.positions.len()
    }

    /// Number of scenarios `m`.
    pub fn m(&self) -> usize {
        self.probs.len()
    }

    /// Scenario probabilities.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Outcome matrix rows, one per position.
    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    /// Position labels.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Outcome vector of position `i`.
    pub fn position(&self, i: usize) -> Result<Outcome> {
        let row = self.positions.get(i).ok_or(Error::DimensionMismatch {
            expected: self.n(),
            actual: i,
        })?;
        Ok(Outcome {
            values: row.clone(),
        })
    }

    /// Portfolio outcome `sum_i u_i X_i`, summed left-to-right per scenario.
    pub fn aggregate(&self, weights: &PortfolioWeights) -> Result<Outcome> {
        let n = self.n();
        if weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: weights.len(),
            });
        }
        let m = self.m();
        let mut values = vec![0.0; m];
        for (j, value) in values.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..n {
                acc += weights.u[i] * self.positions[i][j];
            }
            *value = acc;
        }
        Ok(Outcome { values })
    }
}

/// One random variable as a scenario-indexed vector of outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    values: Vec<f64>,
}

impl Outcome {
    /// Validates and builds an outcome vector (finite values, nonempty).
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyScenarioSet { n: 1, m: 0 });
        }
        for &v in &values {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "outcome value".to_string(),
                    value: v,
                });
            }
        }
        Ok(Self { values })
    }

    /// Scenario-indexed values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of scenarios this outcome spans.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Whether the outcome is empty (never true for validated outcomes).
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Elementwise sum with another outcome of the same length.
    pub fn add(&self, other: &Outcome) -> Result<Outcome> {
        self.zip_with(other, |a, b| a + b)
    }

    /// Elementwise difference with another outcome of the same length.
    pub fn sub(&self, other: &Outcome) -> Result<Outcome> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + h * other`, elementwise.
    pub fn axpy(&self, h: f64, other: &Outcome) -> Result<Outcome> {
        self.zip_with(other, |a, b| a + h * b)
    }

    /// Scales every value by `c`.
    pub fn scale(&self, c: f64) -> Outcome {
        Outcome {
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Adds the deterministic amount `c` to every scenario.
    pub fn shift(&self, c: f64) -> Outcome {
        Outcome {
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    fn zip_with(&self, other: &Outcome, f: impl Fn(f64, f64) -> f64) -> Result<Outcome> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(Outcome {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

/// Position multipliers defining a portfolio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioWeights {
    u: Vec<f64>,
}

impl PortfolioWeights {
    /// Validates and builds a weight vector (finite values, nonempty).
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::EmptyScenarioSet { n: 0, m: 1 });
        }
        for &v in &u {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "portfolio weight".to_string(),
                    value: v,
                });
            }
        }
        Ok(Self { u })
    }

    /// The all-ones portfolio holding one unit of each of `n` positions.
    pub fn ones(n: usize) -> Self {
        Self { u: vec![1.0; n] }
    }

    /// The all-zero portfolio over `n` positions.
    pub fn zeros(n: usize) -> Self {
        Self { u: vec![0.0; n] }
    }

    /// The unit portfolio `e_i` over `n` positions.
    pub fn unit(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: i,
            });
        }
        let mut u = vec![0.0; n];
        u[i] = 1.0;
        Ok(Self { u })
    }

    /// Weight values.
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// Number of positions this portfolio spans.
    pub fn len(&self) -> usize {
        self.u.len()
    }

    /// Whether the portfolio is empty (never true for validated weights).
    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Copy of the portfolio with `delta` added to weight `i`.
    pub fn perturbed(&self, i: usize, delta: f64) -> Result<Self> {
        let mut u = self.u.clone();
        let w = u.get_mut(i).ok_or(Error::DimensionMismatch {
            expected: self.u.len(),
            actual: i,
        })?;
        *w += delta;
        Ok(Self { u })
    }

    /// Copy of the portfolio with weight `i` replaced by `value`.
    pub fn with_value(&self, i: usize, value: f64) -> Result<Self> {
        let mut u = self.u.clone();
        let w = u.get_mut(i).ok_or(Error::DimensionMismatch {
            expected: self.u.len(),
            actual: i,
        })?;
        *w = value;
        Ok(Self { u })
    }

    /// Elementwise sum with another weight vector of the same length.
    pub fn add(&self, other: &PortfolioWeights) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(Self {
            u: self.u.iter().zip(&other.u).map(|(&a, &b)| a + b).collect(),
        })
    }
}

/// `P[X <= t]` on the scenario space, summed in scenario order.
pub fn empirical_cdf(x: &Outcome, scn: &ScenarioSet, t: f64) -> Result<f64> {
    check_len(x, scn)?;
    let mut acc = 0.0;
    for (j, &v) in x.values.iter().enumerate() {
        if v <= t {
            acc += scn.probs[j];
        }
    }
    Ok(acc)
}

/// Smallest support value whose cumulative probability reaches `p`, for
/// `p` in `(0, 1]`.
pub fn quantile(x: &Outcome, scn: &ScenarioSet, p: f64) -> Result<f64> {
    check_len(x, scn)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::QuantileLevel { p });
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x.values[a].total_cmp(&x.values[b]));
    let mut cum = 0.0;
    for &j in &order {
        cum += scn.probs[j];
        if cum >= p - CUM_PROB_EPS {
            return Ok(x.values[j]);
        }
    }
    Ok(x.values[*order.last().expect("outcome is nonempty")])
}

/// Probability-weighted mean of an outcome, summed in scenario order.
pub fn expectation(x: &Outcome, scn: &ScenarioSet) -> Result<f64> {
    check_len(x, scn)?;
    let mut acc = 0.0;
    for (j, &v) in x.values.iter().enumerate() {
        acc += scn.probs[j] * v;
    }
    Ok(acc)
}

fn check_len(x: &Outcome, scn: &ScenarioSet) -> Result<()> {
    if x.len() != scn.m() {
        return Err(Error::DimensionMismatch {
            expected: scn.m(),
            actual: x.len(),
        });
    }
    Ok(())
}

impl ScenarioSet {
    /// Loads a scenario set from a CSV file (`prob,<label_1>,...` header,
    /// one scenario per row, `#` comment lines skipped).
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_csv_reader(file)
    }

    /// Loads a scenario set from any CSV byte stream.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);

        let headers = rdr.headers().map_err(csv_error)?.clone();
        if headers.get(0).map(str::trim) != Some("prob") {
            return Err(Error::CsvFormat {
                line: 1,
                column: 1,
                message: format!(
                    "header must start with \"prob\", got {:?}",
                    headers.get(0).unwrap_or("")
                ),
            });
        }
        let labels: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        if labels.is_empty() {
            return Err(Error::CsvFormat {
                line: 1,
                column: 1,
                message: "header lists no position labels".to_string(),
            });
        }
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(Error::CsvFormat {
                    line: 1,
                    column: i + 2,
                    message: "empty position label".to_string(),
                });
            }
            if labels[..i].contains(label) {
                return Err(Error::CsvFormat {
                    line: 1,
                    column: i + 2,
                    message: format!("duplicate position label {label:?}"),
                });
            }
        }

        let n = labels.len();
        let mut probs = Vec::new();
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); n];
        for record in rdr.records() {
            let record = record.map_err(csv_error)?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != n + 1 {
                return Err(Error::CsvFormat {
                    line,
                    column: record.len().min(n + 1),
                    message: format!("expected {} fields, got {}", n + 1, record.len()),
                });
            }
            let parse = |column: usize, what: &str| -> Result<f64> {
                let field = record.get(column).unwrap_or("");
                let value: f64 = field.parse().map_err(|_| Error::CsvFormat {
                    line,
                    column: column + 1,
                    message: format!("cannot parse {what} {field:?} as a number"),
                })?;
                if !value.is_finite() {
                    return Err(Error::CsvFormat {
                        line,
                        column: column + 1,
                        message: format!("{what} must be finite, got {value}"),
                    });
                }
                Ok(value)
            };
            let p = parse(0, "probability")?;
            if p <= 0.0 {
                return Err(Error::CsvFormat {
                    line,
                    column: 1,
                    message: format!("probability must be > 0, got {p}"),
                });
            }
            probs.push(p);
            for (i, column) in columns.iter_mut().enumerate() {
                column.push(parse(i + 1, "outcome")?);
            }
        }
        if probs.is_empty() {
            return Err(Error::CsvInvariant {
                message: "no scenario rows".to_string(),
            });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::CsvInvariant {
                message: format!("probabilities must sum to 1 within 1e-12, got {sum}"),
            });
        }
        Self::new(probs, columns, labels)
    }
}

fn csv_error(err: csv::Error) -> Error {
    let line = match err.position() {
        Some(pos) => pos.line(),
        None => 0,
    };
    Error::CsvFormat {
        line,
        column: 1,
        message: err.to_string(),
    }
}
