//! Ordinary least squares on sweep output, Student-t tail probabilities,
//! and plot-series extraction.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use crate::codes::Coded;
use crate::risk::Scenario;
use crate::sweep::SweepRow;
use crate::{Error, Result};

pub const INTERCEPT: &str = "(Intercept)";

/// Predictor columns of a sweep, in reporting order.
pub const PREDICTORS: [&str; 7] = [
    "storm",
    "rainfall",
    "time_of_day",
    "threshold",
    "w_cdm",
    "w_hrf",
    "w_crf",
];

/// Relative size below which a column's remaining norm counts as zero
/// during pivoting.
const ALIAS_TOLERANCE: f64 = 1e-7;

/// Smallest p-value printed as a number; anything below prints `<2e-16`.
pub const P_FLOOR: f64 = 2.2e-16;

/// Named predictor columns and a response.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    response: Vec<f64>,
    intercept: bool,
}

impl DesignMatrix {
    /// With `intercept`, a column of ones named `(Intercept)` is put first.
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>, response: Vec<f64>, intercept: bool) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::InvalidInput(format!(
                "{} column names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != response.len() {
                return Err(Error::InvalidInput(format!(
                    "column `{name}` has {} values, response has {}",
                    col.len(),
                    response.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("column `{name}` has a non-finite value")));
            }
        }
        if response.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("response has a non-finite value".into()));
        }
        let (mut all_names, mut all_columns) = (Vec::new(), Vec::new());
        if intercept {
            all_names.push(INTERCEPT.to_string());
            all_columns.push(vec![1.0; response.len()]);
        }
        all_names.extend(names);
        all_columns.extend(columns);
        if all_columns.is_empty() {
            return Err(Error::InvalidInput("design matrix has no columns".into()));
        }
        Ok(DesignMatrix {
            names: all_names,
            columns: all_columns,
            response,
            intercept,
        })
    }

    pub fn rows(&self) -> usize {
        self.response.len()
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    /// Two-sided.
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionReport {
    /// Estimated (non-aliased) coefficients in column order.
    pub coefficients: Vec<Coefficient>,
    /// Columns left out because they are linear combinations of earlier ones.
    pub aliased: Vec<String>,
    pub observations: usize,
    pub rank: usize,
    pub df_residual: usize,
    pub residual_std_error: f64,
    /// Centered when the model has an intercept, uncentered otherwise.
    pub r_squared: f64,
    pub intercept: bool,
    /// Ratio of the largest to the smallest diagonal entry of R; large
    /// values flag near-collinearity.
    pub condition_estimate: f64,
    pub residuals: Vec<f64>,
}

impl RegressionReport {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    /// Aligned text table.
    pub fn to_table(&self) -> String {
        let width = self
            .coefficients
            .iter()
            .map(|c| c.name.len())
            .chain(self.aliased.iter().map(String::len))
            .max()
            .unwrap_or(0)
            .max(4);
        let mut out = String::new();
        writeln!(
            out,
            "{:<width$} {:>13} {:>13} {:>10} {:>10}",
            "term", "Estimate", "Std. Error", "t value", "Pr(>|t|)"
        )
        .unwrap();
        for c in &self.coefficients {
            writeln!(
                out,
                "{:<width$} {:>13} {:>13} {:>10} {:>10}",
                c.name,
                format_number(c.estimate),
                format_number(c.std_error),
                format_t(c.t_value),
                format_p_value(c.p_value)
            )
            .unwrap();
        }
        for a in &self.aliased {
            writeln!(out, "{a:<width$} {:>13} {:>13} {:>10} {:>10}", "NA", "NA", "NA", "NA").unwrap();
        }
        out.push('\n');
        writeln!(
            out,
            "Residual standard error: {} on {} degrees of freedom",
            format_number(self.residual_std_error),
            self.df_residual
        )
        .unwrap();
        writeln!(
            out,
            "R-squared: {:.6}{}",
            self.r_squared,
            if self.intercept { "" } else { " (uncentered)" }
        )
        .unwrap();
        writeln!(
            out,
            "Observations: {}; rank {} of {}; condition estimate {}",
            self.observations,
            self.rank,
            self.rank + self.aliased.len(),
            format_number(self.condition_estimate)
        )
        .unwrap();
        if !self.aliased.is_empty() {
            writeln!(out, "Aliased (not estimated): {}", self.aliased.join(", ")).unwrap();
        }
        out
    }

    /// `term,estimate,std_error,t_value,p_value`, full precision; aliased
    /// terms get `NA`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(["term", "estimate", "std_error", "t_value", "p_value"])?;
        for c in &self.coefficients {
            csv.write_record([
                c.name.clone(),
                c.estimate.to_string(),
                c.std_error.to_string(),
                c.t_value.to_string(),
                c.p_value.to_string(),
            ])?;
        }
        for a in &self.aliased {
            csv.write_record([a.as_str(), "NA", "NA", "NA", "NA"])?;
        }
        csv.flush().map_err(|e| Error::io("<regression csv>", e))?;
        Ok(())
    }
}

fn format_number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || x.is_nan() {
        format!("{x}")
    } else if (1e-3..1e6).contains(&a) {
        format!("{x:.6}")
    } else {
        format!("{x:.4e}")
    }
}

fn format_t(t: f64) -> String {
    if t.is_finite() {
        format!("{t:.3}")
    } else {
        format!("{t}")
    }
}

/// p-values below 2.2e-16 print as `<2e-16`.
pub fn format_p_value(p: f64) -> String {
    if p.is_nan() {
        "NaN".into()
    } else if p < P_FLOOR {
        "<2e-16".into()
    } else if p >= 1e-4 {
        format!("{p:.4}")
    } else {
        format!("{p:.2e}")
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Householder reflector acting on rows `k..`: `x -= v (2 v·x / v·v)`.
struct Reflector {
    k: usize,
    v: Vec<f64>,
    vv: f64,
}

impl Reflector {
    fn apply(&self, x: &mut [f64]) {
        let tail = &mut x[self.k..];
        let s = 2.0 * dot(&self.v, tail) / self.vv;
        for (t, v) in tail.iter_mut().zip(&self.v) {
            *t -= s * v;
        }
    }
}

/// Solve the upper-triangular system `R[..k, ..k] c = b`, where column `j`
/// of R is `r[j]`.
fn back_substitute(r: &[&[f64]], b: &[f64]) -> Vec<f64> {
    let k = b.len();
    let mut c = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| r[j][i] * c[j]).sum();
        c[i] = (b[i] - s) / r[i][i];
    }
    c
}

/// Least squares via Householder QR with column pivoting limited to moving
/// (near-)dependent columns out, so columns keep their order.
///
/// A column is aliased when its norm after projecting out the earlier kept
/// columns is below 1e-7 of its original norm. Aliased columns are an error
/// listing each one with the columns it depends on, unless `drop_aliased`.
pub fn fit_ols(m: &DesignMatrix, drop_aliased: bool) -> Result<RegressionReport> {
    let n = m.rows();
    let p = m.cols();
    let mut work: Vec<Vec<f64>> = m.columns.clone();
    let mut reflectors: Vec<Reflector> = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    let mut aliased: Vec<usize> = Vec::new();
    let mut dependencies: Vec<Vec<String>> = Vec::new();

    for j in 0..p {
        for h in &reflectors {
            h.apply(&mut work[j]);
        }
        let k = kept.len();
        let original = norm(&m.columns[j]);
        let remaining = if k < n { norm(&work[j][k..]) } else { 0.0 };
        if original == 0.0 || remaining <= ALIAS_TOLERANCE * original {
            let r: Vec<&[f64]> = kept.iter().map(|&c| work[c].as_slice()).collect();
            let coords = back_substitute(&r, &work[j][..k]);
            let scale = coords.iter().fold(0.0f64, |a, c| a.max(c.abs()));
            let mut dep = vec![m.names[j].clone()];
            dep.extend(
                kept.iter()
                    .zip(&coords)
                    .filter(|(_, c)| c.abs() > 1e-6 * scale)
                    .map(|(&c, _)| m.names[c].clone()),
            );
            dependencies.push(dep);
            aliased.push(j);
            continue;
        }
        let col = &mut work[j];
        let alpha = if col[k] > 0.0 { -remaining } else { remaining };
        let mut v = col[k..].to_vec();
        v[0] -= alpha;
        let vv = dot(&v, &v);
        col[k] = alpha;
        col[k + 1..].iter_mut().for_each(|x| *x = 0.0);
        reflectors.push(Reflector { k, v, vv });
        kept.push(j);
    }

    let aliased_names: Vec<String> = aliased.iter().map(|&j| m.names[j].clone()).collect();
    if !aliased.is_empty() && !drop_aliased {
        return Err(Error::RankDeficient {
            aliased: aliased_names,
            dependencies,
        });
    }
    let rank = kept.len();
    if n <= rank {
        return Err(Error::InvalidInput(format!(
            "{n} observations leave no residual degrees of freedom for {rank} coefficients"
        )));
    }

    let mut qty = m.response.clone();
    for h in &reflectors {
        h.apply(&mut qty);
    }
    let r: Vec<&[f64]> = kept.iter().map(|&c| work[c].as_slice()).collect();
    let beta = back_substitute(&r, &qty[..rank]);

    let mut residuals = m.response.clone();
    for (&c, b) in kept.iter().zip(&beta) {
        for (res, x) in residuals.iter_mut().zip(&m.columns[c]) {
            *res -= b * x;
        }
    }
    let rss = dot(&residuals, &residuals);
    let df = n - rank;
    let sigma = (rss / df as f64).sqrt();

    // rows of R^-1 via back substitution on unit vectors
    let mut row_norms = vec![0.0; rank];
    for e in 0..rank {
        let mut unit = vec![0.0; rank];
        unit[e] = 1.0;
        let col = back_substitute(&r, &unit);
        for (acc, v) in row_norms.iter_mut().zip(&col) {
            *acc += v * v;
        }
    }

    let mut coefficients = Vec::with_capacity(rank);
    for (i, &c) in kept.iter().enumerate() {
        let se = sigma * row_norms[i].sqrt();
        let t = beta[i] / se;
        let p_value = if t.is_nan() {
            f64::NAN
        } else if t.is_infinite() {
            0.0
        } else {
            (2.0 * t_sf(t.abs(), df as f64)?).min(1.0)
        };
        coefficients.push(Coefficient {
            name: m.names[c].clone(),
            estimate: beta[i],
            std_error: se,
            t_value: t,
            p_value,
        });
    }

    let tss = if m.intercept {
        let mean = m.response.iter().sum::<f64>() / n as f64;
        m.response.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>()
    } else {
        dot(&m.response, &m.response)
    };
    let r_squared = if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let diag: Vec<f64> = (0..rank).map(|i| r[i][i].abs()).collect();
    let condition_estimate =
        diag.iter().fold(0.0f64, |a, &d| a.max(d)) / diag.iter().fold(f64::INFINITY, |a, &d| a.min(d));

    Ok(RegressionReport {
        coefficients,
        aliased: aliased_names,
        observations: n,
        rank,
        df_residual: df,
        residual_std_error: sigma,
        r_squared,
        intercept: m.intercept,
        condition_estimate,
        residuals,
    })
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Stirling-series remainder `ln Γ(x) - [(x - ½) ln x - x + ln √(2π)]`, x ≥ 10.
fn lgamma_correction(x: f64) -> f64 {
    const C: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let inv2 = 1.0 / (x * x);
    let mut sum = 0.0;
    for c in C.iter().rev() {
        sum = sum * inv2 + c;
    }
    sum / x
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x >= 10.0 {
        return (x - 0.5) * x.ln() - x + LN_SQRT_2PI + lgamma_correction(x);
    }
    if x < 0.5 {
        // reflection
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    // Lanczos, g = 7
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut a = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + a.ln()
}

/// ln B(a, b), arranged to avoid cancellation when either argument is large.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    let (p, q) = if a < b { (a, b) } else { (b, a) };
    let r = p / (p + q);
    if p >= 10.0 {
        let corr = lgamma_correction(p) + lgamma_correction(q) - lgamma_correction(p + q);
        -0.5 * q.ln() + LN_SQRT_2PI + corr + (p - 0.5) * r.ln() + q * (-r).ln_1p()
    } else if q >= 10.0 {
        let corr = lgamma_correction(q) - lgamma_correction(p + q);
        ln_gamma(p) + corr + p - p * (p + q).ln() + (q - 0.5) * (-r).ln_1p()
    } else {
        ln_gamma(p) + ln_gamma(q) - ln_gamma(p + q)
    }
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let fix = |v: f64| if v.abs() < TINY { TINY } else { v };
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 / fix(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=100_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / fix(1.0 + aa * d);
        c = fix(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / fix(1.0 + aa * d);
        c = fix(1.0 + aa / c);
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`, given `x` and `y = 1 - x`
/// separately so neither loses precision.
fn beta_regularized(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let front = (a * x.ln() + b * y.ln() - ln_beta(a, b)).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, y) / b
    }
}

/// Upper tail `P(T > t)` of Student's t with `df` degrees of freedom.
pub fn t_sf(t: f64, df: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("t statistic must be finite, got {t}")));
    }
    if !(df >= 1.0 && df.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "degrees of freedom must be >= 1, got {df}"
        )));
    }
    if t < 0.0 {
        return Ok(1.0 - t_sf(-t, df)?);
    }
    let t2 = t * t;
    let x = df / (df + t2);
    let y = t2 / (df + t2);
    Ok(0.5 * beta_regularized(df / 2.0, 0.5, x, y))
}

/// How the intercept and the weight columns enter the sensitivity model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// All seven predictors, no intercept.
    NoIntercept,
    /// Intercept plus every predictor except `w_crf`.
    #[default]
    DropOneWeight,
    /// Intercept plus all seven predictors; singular when weights sum to one.
    InterceptFull,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::NoIntercept, Mode::DropOneWeight, Mode::InterceptFull];

    pub fn label(self) -> &'static str {
        match self {
            Mode::NoIntercept => "no-intercept",
            Mode::DropOneWeight => "drop-one-weight",
            Mode::InterceptFull => "intercept-full",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.label() == s)
    }
}

fn predictor_value(row: &SweepRow, name: &str) -> f64 {
    let c = &row.combo;
    match name {
        "storm" => f64::from(c.scenario.storm.level()),
        "rainfall" => c.scenario.rainfall.code(),
        "time_of_day" => c.scenario.time_of_day.code(),
        "threshold" => c.threshold,
        "w_cdm" => c.weights.cdm,
        "w_hrf" => c.weights.hrf,
        "w_crf" => c.weights.crf,
        _ => unreachable!("unknown predictor {name}"),
    }
}

/// Sweep rows as a design matrix; predictors enter uncentered, storm as its
/// signal level.
pub fn design_matrix(rows: &[SweepRow], mode: Mode) -> Result<DesignMatrix> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no sweep rows to analyze".into()));
    }
    let names: Vec<&str> = match mode {
        Mode::DropOneWeight => PREDICTORS[..6].to_vec(),
        Mode::NoIntercept | Mode::InterceptFull => PREDICTORS.to_vec(),
    };
    let columns = names
        .iter()
        .map(|n| rows.iter().map(|r| predictor_value(r, n)).collect())
        .collect();
    DesignMatrix::new(
        names.into_iter().map(String::from).collect(),
        columns,
        rows.iter().map(|r| f64::from(r.evacuated)).collect(),
        mode != Mode::NoIntercept,
    )
}

pub fn sensitivity(rows: &[SweepRow], mode: Mode) -> Result<RegressionReport> {
    fit_ols(&design_matrix(rows, mode)?, false)
}

/// The weight varied along a plot series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum WeightKind {
    Crf,
    Hrf,
    Cdm,
}

impl WeightKind {
    /// Series order in plot output.
    pub const ALL: [WeightKind; 3] = [WeightKind::Crf, WeightKind::Hrf, WeightKind::Cdm];

    pub fn label(self) -> &'static str {
        match self {
            WeightKind::Crf => "w_crf",
            WeightKind::Hrf => "w_hrf",
            WeightKind::Cdm => "w_cdm",
        }
    }

    pub fn of(self, row: &SweepRow) -> f64 {
        let w = &row.combo.weights;
        match self {
            WeightKind::Crf => w.crf,
            WeightKind::Hrf => w.hrf,
            WeightKind::Cdm => w.cdm,
        }
    }
}

/// Scenario and threshold a plot holds fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slice {
    pub scenario: Scenario,
    pub threshold: f64,
}

impl Slice {
    pub fn contains(&self, row: &SweepRow) -> bool {
        row.combo.scenario == self.scenario && row.combo.threshold == self.threshold
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub x: f64,
    pub series: WeightKind,
    pub mean_evacuated: f64,
    pub n: usize,
}

pub const SERIES_HEADER: [&str; 4] = ["x", "series", "mean_evacuated", "n"];

/// Mean evacuated against each weight within `slice`, averaging over
/// replicates and the other two weights. Series come in the order w_crf,
/// w_hrf, w_cdm, each sorted by x.
pub fn series(rows: &[SweepRow], slice: &Slice) -> Result<Vec<SeriesPoint>> {
    let selected: Vec<&SweepRow> = rows.iter().filter(|r| slice.contains(r)).collect();
    if selected.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no rows for storm {} / {} / {} at threshold {}",
            slice.scenario.storm.level(),
            slice.scenario.rainfall.label(),
            slice.scenario.time_of_day.label(),
            slice.threshold
        )));
    }
    let mut out = Vec::new();
    for kind in WeightKind::ALL {
        // weights are positive, so their bit patterns sort like their values
        let mut groups: BTreeMap<u64, (u64, usize)> = BTreeMap::new();
        for r in &selected {
            let g = groups.entry(kind.of(r).to_bits()).or_default();
            g.0 += u64::from(r.evacuated);
            g.1 += 1;
        }
        out.extend(groups.into_iter().map(|(bits, (sum, n))| SeriesPoint {
            x: f64::from_bits(bits),
            series: kind,
            mean_evacuated: sum as f64 / n as f64,
            n,
        }));
    }
    Ok(out)
}

pub fn write_series<W: Write>(points: &[SeriesPoint], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(SERIES_HEADER)?;
    for p in points {
        csv.write_record([
            p.x.to_string(),
            p.series.label().to_string(),
            p.mean_evacuated.to_string(),
            p.n.to_string(),
        ])?;
    }
    csv.flush().map_err(|e| Error::io("<series csv>", e))?;
    Ok(())
}
