//! Full-factorial parameter sweeps over scenario, threshold and weights.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::codes::{format_code, Coded};
use crate::engine::{RunConfig, RunResult, Scene};
use crate::kv::KvFile;
use crate::risk::{Rainfall, Scenario, StormSignal, TimeOfDay, Weights};
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 13] = [
    "combo_index",
    "replicate",
    "seed",
    "storm",
    "rainfall",
    "time_of_day",
    "threshold",
    "w_cdm",
    "w_hrf",
    "w_crf",
    "evacuated",
    "ticks",
    "truncated",
];

const SPEC_KEYS: [&str; 12] = [
    "storm",
    "rainfall",
    "time_of_day",
    "threshold",
    "w_cdm",
    "w_hrf",
    "w_crf",
    "replications",
    "base_seed",
    "filter",
    "world",
    "population",
];

/// Which weight triples a sweep keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightFilter {
    /// Weights sum to 1 (within 1e-9).
    #[default]
    ExactOne,
    /// Weights sum to at least 1 (within 1e-9).
    AtLeastOne,
}

impl WeightFilter {
    pub fn label(self) -> &'static str {
        match self {
            WeightFilter::ExactOne => "exact-one",
            WeightFilter::AtLeastOne => "at-least-one",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "exact-one" => Some(WeightFilter::ExactOne),
            "at-least-one" => Some(WeightFilter::AtLeastOne),
            _ => None,
        }
    }

    pub fn keeps(self, w: &Weights) -> bool {
        match self {
            WeightFilter::ExactOne => w.sums_to_one(),
            WeightFilter::AtLeastOne => w.sum() >= 1.0 - 1e-9,
        }
    }
}

/// Grid axes and execution settings of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub storm: Vec<StormSignal>,
    pub rainfall: Vec<Rainfall>,
    pub time_of_day: Vec<TimeOfDay>,
    pub threshold: Vec<f64>,
    pub w_cdm: Vec<f64>,
    pub w_hrf: Vec<f64>,
    pub w_crf: Vec<f64>,
    pub replications: u32,
    pub base_seed: u64,
    pub filter: WeightFilter,
    /// Relative paths resolve against the sweep file's directory.
    pub world: Option<PathBuf>,
    pub population: Option<PathBuf>,
}

/// 0.1, 0.2, ..., 0.8 written as exact decimal literals.
fn default_weight_axis() -> Vec<f64> {
    (1..=8).map(|k| k as f64 / 10.0).collect()
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            storm: vec![StormSignal::Psws1, StormSignal::Psws2],
            rainfall: Rainfall::ALL.to_vec(),
            time_of_day: TimeOfDay::ALL.to_vec(),
            threshold: vec![0.7, 0.8, 0.9],
            w_cdm: default_weight_axis(),
            w_hrf: default_weight_axis(),
            w_crf: default_weight_axis(),
            replications: 10,
            base_seed: 1,
            filter: WeightFilter::ExactOne,
            world: None,
            population: None,
        }
    }
}

/// One point of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Combo {
    pub scenario: Scenario,
    pub threshold: f64,
    pub weights: Weights,
}

fn parse_coded<T: Coded>(kv: &KvFile, key: &str) -> Result<Option<Vec<T>>> {
    let Some(items) = kv.list::<String>(key)? else {
        return Ok(None);
    };
    items
        .iter()
        .map(|s| {
            T::from_label(s)
                .or_else(|| s.parse::<f64>().ok().and_then(T::from_code))
                .ok_or_else(|| kv.key_error(key, format!("unknown value `{s}`")))
        })
        .collect::<Result<Vec<T>>>()
        .map(Some)
}

impl SweepSpec {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let kv = KvFile::parse(text, source)?;
        kv.reject_unknown(&SPEC_KEYS)?;
        let mut spec = SweepSpec::default();
        if let Some(levels) = kv.list::<u8>("storm")? {
            spec.storm = levels
                .into_iter()
                .map(|l| {
                    StormSignal::from_level(l)
                        .ok_or_else(|| kv.key_error("storm", format!("no storm signal level {l}")))
                })
                .collect::<Result<_>>()?;
        }
        if let Some(v) = parse_coded(&kv, "rainfall")? {
            spec.rainfall = v;
        }
        if let Some(v) = parse_coded(&kv, "time_of_day")? {
            spec.time_of_day = v;
        }
        for (key, axis) in [
            ("threshold", &mut spec.threshold),
            ("w_cdm", &mut spec.w_cdm),
            ("w_hrf", &mut spec.w_hrf),
            ("w_crf", &mut spec.w_crf),
        ] {
            if let Some(v) = kv.list::<f64>(key)? {
                *axis = v;
            }
        }
        if let Some(r) = kv.get("replications")? {
            spec.replications = r;
        }
        if let Some(s) = kv.get("base_seed")? {
            spec.base_seed = s;
        }
        if let Some(f) = kv.raw("filter") {
            spec.filter = WeightFilter::from_label(f)
                .ok_or_else(|| kv.key_error("filter", format!("expected exact-one or at-least-one, got `{f}`")))?;
        }
        spec.world = kv.raw("world").map(PathBuf::from);
        spec.population = kv.raw("population").map(PathBuf::from);
        spec.validate().map_err(|e| Error::Parse {
            path: source.to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        Ok(spec)
    }

    /// Load a spec; relative asset paths are resolved against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec = Self::parse(&text, &path.display().to_string())?;
        let dir = path.parent().unwrap_or(Path::new(""));
        for p in [&mut spec.world, &mut spec.population].into_iter().flatten() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let axes = [
            ("storm", self.storm.len()),
            ("rainfall", self.rainfall.len()),
            ("time_of_day", self.time_of_day.len()),
            ("threshold", self.threshold.len()),
            ("w_cdm", self.w_cdm.len()),
            ("w_hrf", self.w_hrf.len()),
            ("w_crf", self.w_crf.len()),
        ];
        if let Some((name, _)) = axes.iter().find(|(_, n)| *n == 0) {
            return Err(Error::validation("sweep spec", format!("axis `{name}` is empty")));
        }
        if self.replications == 0 {
            return Err(Error::validation("sweep spec", "replications must be at least 1"));
        }
        if let Some(t) = self.threshold.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::validation("sweep spec", format!("threshold {t} outside [0, 1]")));
        }
        for w in self.w_cdm.iter().chain(&self.w_hrf).chain(&self.w_crf) {
            if !(*w > 0.0 && *w <= 1.0) {
                return Err(Error::validation("sweep spec", format!("weight {w} outside (0, 1]")));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        let nums = |v: &[f64]| join(v.iter().map(|x| x.to_string()).collect());
        let mut out = String::new();
        out.push_str("# Parameter sweep. Lists are comma separated; the grid is their full product.\n");
        writeln!(
            out,
            "storm = {}",
            join(self.storm.iter().map(|s| s.level().to_string()).collect())
        )
        .unwrap();
        writeln!(
            out,
            "rainfall = {}",
            join(self.rainfall.iter().map(|r| r.label().to_string()).collect())
        )
        .unwrap();
        writeln!(
            out,
            "time_of_day = {}",
            join(self.time_of_day.iter().map(|t| t.label().to_string()).collect())
        )
        .unwrap();
        writeln!(out, "threshold = {}", nums(&self.threshold)).unwrap();
        writeln!(out, "w_cdm = {}", nums(&self.w_cdm)).unwrap();
        writeln!(out, "w_hrf = {}", nums(&self.w_hrf)).unwrap();
        writeln!(out, "w_crf = {}", nums(&self.w_crf)).unwrap();
        writeln!(out, "replications = {}", self.replications).unwrap();
        writeln!(out, "base_seed = {}", self.base_seed).unwrap();
        out.push_str("# exact-one: weights sum to 1; at-least-one: weights sum to 1 or more\n");
        writeln!(out, "filter = {}", self.filter.label()).unwrap();
        if let Some(p) = &self.world {
            writeln!(out, "world = {}", p.display()).unwrap();
        }
        if let Some(p) = &self.population {
            writeln!(out, "population = {}", p.display()).unwrap();
        }
        out
    }

    /// Rows a sweep of this spec produces.
    pub fn row_count(&self) -> usize {
        filter_valid(&enumerate(self), self.filter).len() * self.replications as usize
    }
}

/// Full Cartesian product, lexicographic in the order storm, rainfall,
/// time of day, threshold, w_cdm, w_hrf, w_crf (last axis fastest).
pub fn enumerate(spec: &SweepSpec) -> Vec<Combo> {
    let mut out = Vec::new();
    for &storm in &spec.storm {
        for &rainfall in &spec.rainfall {
            for &time_of_day in &spec.time_of_day {
                for &threshold in &spec.threshold {
                    for &cdm in &spec.w_cdm {
                        for &hrf in &spec.w_hrf {
                            for &crf in &spec.w_crf {
                                out.push(Combo {
                                    scenario: Scenario {
                                        storm,
                                        rainfall,
                                        time_of_day,
                                    },
                                    threshold,
                                    weights: Weights { cdm, hrf, crf },
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn filter_valid(combos: &[Combo], filter: WeightFilter) -> Vec<Combo> {
    combos.iter().filter(|c| filter.keeps(&c.weights)).copied().collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `r`: `splitmix64(splitmix64(base_seed) ^ r)`.
///
/// The seed does not depend on the combination, so every combination sees
/// the same replicate seeds and comparisons between combinations are paired.
pub fn replicate_seed(base_seed: u64, replicate: u32) -> u64 {
    splitmix64(splitmix64(base_seed) ^ u64::from(replicate))
}

/// One executed run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub combo_index: usize,
    pub replicate: u32,
    pub seed: u64,
    pub combo: Combo,
    pub evacuated: u32,
    pub ticks: u32,
    pub truncated: bool,
}

/// Run every kept combination `spec.replications` times on `workers` threads.
///
/// `base` supplies everything a combination does not set (radii, speeds,
/// counts). Rows come back in combination-then-replicate order whatever the
/// worker count.
pub fn execute(spec: &SweepSpec, scene: &Scene<'_>, base: &RunConfig, workers: usize) -> Result<Vec<SweepRow>> {
    execute_with_observer(spec, scene, base, workers, |_, _| Ok(()))
}

/// Like [`execute`], calling `observe` with each full run result.
pub fn execute_with_observer<F>(
    spec: &SweepSpec,
    scene: &Scene<'_>,
    base: &RunConfig,
    workers: usize,
    observe: F,
) -> Result<Vec<SweepRow>>
where
    F: Fn(&SweepRow, &RunResult) -> Result<()> + Sync,
{
    spec.validate()?;
    let combos = filter_valid(&enumerate(spec), spec.filter);
    let mut template = base.clone();
    template.record_events = false;
    // fail fast on the shared settings before spawning anything
    scene.init(&template)?;

    let jobs: Vec<(usize, u32)> = (0..combos.len())
        .flat_map(|c| (0..spec.replications).map(move |r| (c, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        jobs.par_iter()
            .map(|&(c, r)| {
                let combo = combos[c];
                let seed = replicate_seed(spec.base_seed, r);
                let cfg = RunConfig {
                    scenario: combo.scenario,
                    weights: combo.weights,
                    threshold: combo.threshold,
                    seed,
                    ..template.clone()
                };
                let result = scene.run(&cfg)?;
                let row = SweepRow {
                    combo_index: c,
                    replicate: r,
                    seed,
                    combo,
                    evacuated: result.evacuated,
                    ticks: result.ticks_elapsed,
                    truncated: result.truncated,
                };
                observe(&row, &result)?;
                Ok(row)
            })
            .collect()
    })
}

pub fn write_rows<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(CSV_HEADER)?;
    for r in rows {
        let c = &r.combo;
        csv.write_record([
            r.combo_index.to_string(),
            r.replicate.to_string(),
            r.seed.to_string(),
            c.scenario.storm.level().to_string(),
            format_code(c.scenario.rainfall.code()),
            format_code(c.scenario.time_of_day.code()),
            c.threshold.to_string(),
            c.weights.cdm.to_string(),
            c.weights.hrf.to_string(),
            c.weights.crf.to_string(),
            r.evacuated.to_string(),
            r.ticks.to_string(),
            r.truncated.to_string(),
        ])?;
    }
    csv.flush().map_err(|e| Error::io("<sweep rows>", e))?;
    Ok(())
}

pub fn save_rows(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_rows(rows, std::io::BufWriter::new(file))
}

pub fn read_rows<R: Read>(reader: R) -> Result<Vec<SweepRow>> {
    let mut csv = csv::Reader::from_reader(reader);
    let header = csv.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::InvalidInput(format!(
            "unexpected sweep header `{}`, expected `{}`",
            header.iter().collect::<Vec<_>>().join(","),
            CSV_HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let field = |col: usize| record.get(col).unwrap_or("");
        fn num<T: std::str::FromStr>(row: usize, col: usize, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Row {
                row,
                column: CSV_HEADER[col].to_string(),
                message: format!("cannot parse `{v}`"),
            })
        }
        let bad = |col: usize, message: String| Error::Row {
            row,
            column: CSV_HEADER[col].to_string(),
            message,
        };
        let storm = StormSignal::from_level(num(row, 3, field(3))?)
            .ok_or_else(|| bad(3, format!("unknown storm level `{}`", field(3))))?;
        let rainfall = Rainfall::from_code(num(row, 4, field(4))?)
            .ok_or_else(|| bad(4, format!("unknown rainfall code `{}`", field(4))))?;
        let time_of_day = TimeOfDay::from_code(num(row, 5, field(5))?)
            .ok_or_else(|| bad(5, format!("unknown time-of-day code `{}`", field(5))))?;
        rows.push(SweepRow {
            combo_index: num(row, 0, field(0))?,
            replicate: num(row, 1, field(1))?,
            seed: num(row, 2, field(2))?,
            combo: Combo {
                scenario: Scenario {
                    storm,
                    rainfall,
                    time_of_day,
                },
                threshold: num(row, 6, field(6))?,
                weights: Weights {
                    cdm: num(row, 7, field(7))?,
                    hrf: num(row, 8, field(8))?,
                    crf: num(row, 9, field(9))?,
                },
            },
            evacuated: num(row, 10, field(10))?,
            ticks: num(row, 11, field(11))?,
            truncated: num(row, 12, field(12))?,
        });
    }
    Ok(rows)
}

pub fn load_rows(path: impl AsRef<Path>) -> Result<Vec<SweepRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_rows(std::io::BufReader::new(file))
}
