//! Household population: coded decision-maker and capacity attributes,
//! synthetic generation, and CSV persistence.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codes::{coded_enum, format_code, Coded};
use crate::geo::{BuildingId, World};
use crate::kv::KvFile;
use crate::{Error, Result};

coded_enum!(HeadGender {
    Male = 0.5, "male";
    Female = 1.0, "female";
});

coded_enum!(EducLevel {
    College = 0.25, "college";
    HighSchool = 0.5, "high_school";
    GradeSchool = 1.0, "grade_school";
});

coded_enum!(IncomeLevel {
    High = 0.25, "high";
    Middle = 0.5, "middle";
    Low = 1.0, "low";
});

coded_enum!(HouseOwnership {
    Owns = 0.5, "owns";
    Renting = 1.0, "renting";
});

coded_enum!(
    /// Presence of young children, elderly, or a member with a disability.
    Presence {
        No = 0.0, "no";
        Yes = 1.0, "yes";
    }
);

coded_enum!(Residency {
    MoreThan10 = 0.5, "more_than_10";
    AtMost10 = 1.0, "at_most_10";
});

coded_enum!(HouseQuality {
    Concrete = 0.25, "concrete";
    Wood = 0.5, "wood";
    Light = 1.0, "light";
});

coded_enum!(FloorLevels {
    MoreThanOne = 0.5, "more_than_one";
    One = 1.0, "one";
});

coded_enum!(TyphoonExperience {
    Yes = 0.5, "yes";
    No = 1.0, "no";
});

/// One household and the house it lives in.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdProfile {
    pub id: u32,
    pub head_gender: HeadGender,
    pub educ_level: EducLevel,
    pub income_level: IncomeLevel,
    pub house_ownership: HouseOwnership,
    pub has_children: Presence,
    pub has_elderly: Presence,
    pub with_disability: Presence,
    pub years_of_residency: Residency,
    pub house_quality: HouseQuality,
    pub floor_levels: FloorLevels,
    pub typhoon_experience: TyphoonExperience,
    /// Persons in the household; counted against shelter capacity.
    pub members: u32,
    pub building_id: BuildingId,
}

pub const CSV_HEADER: [&str; 14] = [
    "id",
    "head_gender",
    "educ_level",
    "income_level",
    "house_ownership",
    "has_children",
    "has_elderly",
    "with_disability",
    "years_of_residency",
    "house_quality",
    "floor_levels",
    "typhoon_experience",
    "members",
    "building_id",
];

/// Probability per category of one coded attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical<T> {
    probabilities: Vec<(T, f64)>,
}

impl<T: Coded> Categorical<T> {
    pub fn new(probabilities: Vec<(T, f64)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for &(c, p) in &probabilities {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::validation(
                    "population spec",
                    format!("probability of `{}` must lie in [0, 1], got {p}", c.label()),
                ));
            }
            if !seen.insert(c.label()) {
                return Err(Error::validation(
                    "population spec",
                    format!("category `{}` listed twice", c.label()),
                ));
            }
        }
        let total: f64 = probabilities.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::validation(
                "population spec",
                format!("probabilities must sum to 1, got {total}"),
            ));
        }
        Ok(Self { probabilities })
    }

    /// All probability mass on one category.
    pub fn certain(category: T) -> Self {
        Self {
            probabilities: vec![(category, 1.0)],
        }
    }

    pub fn probability(&self, category: T) -> f64 {
        self.probabilities
            .iter()
            .filter(|&&(c, _)| c == category)
            .map(|&(_, p)| p)
            .sum()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> T {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last = None;
        for &(c, p) in &self.probabilities {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = Some(c);
            if u < acc {
                return c;
            }
        }
        last.expect("a valid distribution has a category with positive mass")
    }

    fn to_text(&self) -> String {
        self.probabilities
            .iter()
            .map(|&(c, p)| format!("{}:{p}", c.label()))
            .collect::<Vec<_>>()
            .join(", ")
    }

    fn from_kv(kv: &KvFile, key: &str) -> Result<Option<Self>> {
        let Some(pairs) = kv.pairs(key)? else {
            return Ok(None);
        };
        let probabilities = pairs
            .into_iter()
            .map(|(label, p)| {
                let known = T::ALL.iter().map(|c| c.label()).collect::<Vec<_>>().join(", ");
                T::from_label(&label)
                    .map(|c| (c, p))
                    .ok_or_else(|| kv.key_error(key, format!("unknown category `{label}` (expected one of {known})")))
            })
            .collect::<Result<Vec<_>>>()?;
        Categorical::new(probabilities)
            .map(Some)
            .map_err(|e| kv.key_error(key, e.to_string()))
    }
}

/// Household size: `min + Binomial(max - min, p)` with `p` chosen so the
/// expected size equals `mean`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembersDist {
    pub min: u32,
    pub max: u32,
    pub mean: f64,
}

impl MembersDist {
    pub fn new(min: u32, max: u32, mean: f64) -> Result<Self> {
        if min < 1 || max < min || !(min as f64..=max as f64).contains(&mean) {
            return Err(Error::validation(
                "population spec",
                format!("members needs 1 <= min <= mean <= max, got ({min}, {max}, {mean})"),
            ));
        }
        Ok(Self { min, max, mean })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        let trials = self.max - self.min;
        if trials == 0 {
            return self.min;
        }
        let p = (self.mean - self.min as f64) / trials as f64;
        self.min + (0..trials).filter(|_| rng.gen::<f64>() < p).count() as u32
    }
}

/// Distributions used to synthesize a population.
///
/// The defaults are illustrative marginals for a poor rural coastal village,
/// not census figures: mostly light-material single-storey houses and many
/// households without past typhoon experience. Override them freely.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub count: usize,
    pub head_gender: Categorical<HeadGender>,
    pub educ_level: Categorical<EducLevel>,
    pub income_level: Categorical<IncomeLevel>,
    pub house_ownership: Categorical<HouseOwnership>,
    pub has_children: Categorical<Presence>,
    pub has_elderly: Categorical<Presence>,
    pub with_disability: Categorical<Presence>,
    pub years_of_residency: Categorical<Residency>,
    pub house_quality: Categorical<HouseQuality>,
    pub floor_levels: Categorical<FloorLevels>,
    pub typhoon_experience: Categorical<TyphoonExperience>,
    pub members: MembersDist,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        use Presence::{No, Yes};
        fn c<T>(probabilities: Vec<(T, f64)>) -> Categorical<T> {
            Categorical { probabilities }
        }
        PopulationSpec {
            count: 570,
            head_gender: c(vec![(HeadGender::Male, 0.65), (HeadGender::Female, 0.35)]),
            educ_level: c(vec![
                (EducLevel::College, 0.10),
                (EducLevel::HighSchool, 0.35),
                (EducLevel::GradeSchool, 0.55),
            ]),
            income_level: c(vec![
                (IncomeLevel::High, 0.05),
                (IncomeLevel::Middle, 0.20),
                (IncomeLevel::Low, 0.75),
            ]),
            house_ownership: c(vec![(HouseOwnership::Owns, 0.65), (HouseOwnership::Renting, 0.35)]),
            has_children: c(vec![(No, 0.30), (Yes, 0.70)]),
            has_elderly: c(vec![(No, 0.55), (Yes, 0.45)]),
            with_disability: c(vec![(No, 0.92), (Yes, 0.08)]),
            years_of_residency: c(vec![(Residency::MoreThan10, 0.55), (Residency::AtMost10, 0.45)]),
            house_quality: c(vec![
                (HouseQuality::Concrete, 0.10),
                (HouseQuality::Wood, 0.20),
                (HouseQuality::Light, 0.70),
            ]),
            floor_levels: c(vec![(FloorLevels::MoreThanOne, 0.08), (FloorLevels::One, 0.92)]),
            typhoon_experience: c(vec![(TyphoonExperience::Yes, 0.30), (TyphoonExperience::No, 0.70)]),
            members: MembersDist {
                min: 1,
                max: 10,
                mean: 4.4,
            },
        }
    }
}

const SPEC_KEYS: [&str; 13] = [
    "count",
    "head_gender",
    "educ_level",
    "income_level",
    "house_ownership",
    "has_children",
    "has_elderly",
    "with_disability",
    "years_of_residency",
    "house_quality",
    "floor_levels",
    "typhoon_experience",
    "members",
];

impl PopulationSpec {
    /// Parse the key-value format; missing keys keep their default.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let kv = KvFile::parse(text, source)?;
        kv.reject_unknown(&SPEC_KEYS)?;
        let mut spec = PopulationSpec::default();
        if let Some(count) = kv.get("count")? {
            spec.count = count;
        }
        macro_rules! field {
            ($($name:ident),+) => {
                $(if let Some(d) = Categorical::from_kv(&kv, stringify!($name))? {
                    spec.$name = d;
                })+
            };
        }
        field!(
            head_gender,
            educ_level,
            income_level,
            house_ownership,
            has_children,
            has_elderly,
            with_disability,
            years_of_residency,
            house_quality,
            floor_levels,
            typhoon_experience
        );
        if let Some(v) = kv.list::<f64>("members")? {
            let [min, max, mean] = v[..] else {
                return Err(kv.key_error("members", "expected `min, max, mean`"));
            };
            if min.fract() != 0.0 || max.fract() != 0.0 || min < 0.0 || max < 0.0 {
                return Err(kv.key_error("members", "min and max must be whole numbers"));
            }
            spec.members =
                MembersDist::new(min as u32, max as u32, mean).map_err(|e| kv.key_error("members", e.to_string()))?;
        }
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# Population synthesis parameters.\n");
        out.push_str("# The marginals below are illustrative placeholders, not census data.\n");
        out.push_str("# Each categorical field lists `category:probability` pairs summing to 1.\n");
        writeln!(out, "count = {}", self.count).unwrap();
        let fields = [
            ("head_gender", self.head_gender.to_text()),
            ("educ_level", self.educ_level.to_text()),
            ("income_level", self.income_level.to_text()),
            ("house_ownership", self.house_ownership.to_text()),
            ("has_children", self.has_children.to_text()),
            ("has_elderly", self.has_elderly.to_text()),
            ("with_disability", self.with_disability.to_text()),
            ("years_of_residency", self.years_of_residency.to_text()),
            ("house_quality", self.house_quality.to_text()),
            ("floor_levels", self.floor_levels.to_text()),
            ("typhoon_experience", self.typhoon_experience.to_text()),
        ];
        for (key, value) in fields {
            writeln!(out, "{key} = {value}").unwrap();
        }
        out.push_str("# household size: min, max, mean\n");
        writeln!(
            out,
            "members = {}, {}, {}",
            self.members.min, self.members.max, self.members.mean
        )
        .unwrap();
        out
    }
}

/// Draw `spec.count` households and place them in distinct buildings.
///
/// Buildings are shuffled first, then each household's attributes are drawn
/// field by field in CSV column order. Identical inputs give identical output.
pub fn synthesize(spec: &PopulationSpec, world: &World, seed: u64) -> Result<Vec<HouseholdProfile>> {
    let buildings = world.buildings();
    if spec.count > buildings.len() {
        return Err(Error::InvalidInput(format!(
            "population of {} households exceeds the {} buildings in the world",
            spec.count,
            buildings.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut homes: Vec<BuildingId> = buildings.iter().map(|b| b.id).collect();
    homes.shuffle(&mut rng);

    Ok(homes
        .into_iter()
        .take(spec.count)
        .enumerate()
        .map(|(i, building_id)| HouseholdProfile {
            id: i as u32 + 1,
            head_gender: spec.head_gender.sample(&mut rng),
            educ_level: spec.educ_level.sample(&mut rng),
            income_level: spec.income_level.sample(&mut rng),
            house_ownership: spec.house_ownership.sample(&mut rng),
            has_children: spec.has_children.sample(&mut rng),
            has_elderly: spec.has_elderly.sample(&mut rng),
            with_disability: spec.with_disability.sample(&mut rng),
            years_of_residency: spec.years_of_residency.sample(&mut rng),
            house_quality: spec.house_quality.sample(&mut rng),
            floor_levels: spec.floor_levels.sample(&mut rng),
            typhoon_experience: spec.typhoon_experience.sample(&mut rng),
            members: spec.members.sample(&mut rng),
            building_id,
        })
        .collect())
}

/// Check that ids are unique and every household has its own existing building.
pub fn validate_profiles(profiles: &[HouseholdProfile], world: &World) -> Result<()> {
    let known: HashSet<BuildingId> = world.buildings().iter().map(|b| b.id).collect();
    let mut ids = HashSet::new();
    let mut used = HashSet::new();
    for (i, p) in profiles.iter().enumerate() {
        let row = i + 1;
        if !ids.insert(p.id) {
            return Err(row_error(row, "id", format!("duplicate household id {}", p.id)));
        }
        if p.members == 0 {
            return Err(row_error(row, "members", "household needs at least one member"));
        }
        if !known.contains(&p.building_id) {
            return Err(row_error(
                row,
                "building_id",
                format!("building {} does not exist in the world", p.building_id),
            ));
        }
        if !used.insert(p.building_id) {
            return Err(row_error(
                row,
                "building_id",
                format!("building {} already has a household", p.building_id),
            ));
        }
    }
    Ok(())
}

fn row_error(row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Row {
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

/// Read profiles from CSV. Row numbers in errors count data rows from 1.
pub fn read_population<R: Read>(reader: R, world: &World) -> Result<Vec<HouseholdProfile>> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = csv.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::InvalidInput(format!(
            "population CSV header must be `{}`",
            CSV_HEADER.join(",")
        )));
    }

    let mut profiles = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let field = |col: usize| record.get(col).unwrap_or("");
        fn coded<T: Coded>(row: usize, col: usize, raw: &str) -> Result<T> {
            raw.parse::<f64>().ok().and_then(T::from_code).ok_or_else(|| {
                let valid: Vec<String> = T::ALL.iter().map(|c| format_code(c.code())).collect();
                row_error(
                    row,
                    CSV_HEADER[col],
                    format!("invalid code `{raw}` (expected one of {})", valid.join(", ")),
                )
            })
        }
        let integer = |col: usize| -> Result<u32> {
            field(col).parse().map_err(|_| {
                row_error(
                    row,
                    CSV_HEADER[col],
                    format!("expected an integer, found `{}`", field(col)),
                )
            })
        };
        profiles.push(HouseholdProfile {
            id: integer(0)?,
            head_gender: coded(row, 1, field(1))?,
            educ_level: coded(row, 2, field(2))?,
            income_level: coded(row, 3, field(3))?,
            house_ownership: coded(row, 4, field(4))?,
            has_children: coded(row, 5, field(5))?,
            has_elderly: coded(row, 6, field(6))?,
            with_disability: coded(row, 7, field(7))?,
            years_of_residency: coded(row, 8, field(8))?,
            house_quality: coded(row, 9, field(9))?,
            floor_levels: coded(row, 10, field(10))?,
            typhoon_experience: coded(row, 11, field(11))?,
            members: integer(12)?,
            building_id: BuildingId(integer(13)?),
        });
    }
    validate_profiles(&profiles, world)?;
    Ok(profiles)
}

pub fn load_population(path: impl AsRef<Path>, world: &World) -> Result<Vec<HouseholdProfile>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_population(std::io::BufReader::new(file), world)
}

pub fn write_population<W: Write>(profiles: &[HouseholdProfile], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(CSV_HEADER)?;
    for p in profiles {
        let codes = [
            p.head_gender.code(),
            p.educ_level.code(),
            p.income_level.code(),
            p.house_ownership.code(),
            p.has_children.code(),
            p.has_elderly.code(),
            p.with_disability.code(),
            p.years_of_residency.code(),
            p.house_quality.code(),
            p.floor_levels.code(),
            p.typhoon_experience.code(),
        ];
        let mut record = Vec::with_capacity(CSV_HEADER.len());
        record.push(p.id.to_string());
        record.extend(codes.iter().map(|&c| format_code(c)));
        record.push(p.members.to_string());
        record.push(p.building_id.to_string());
        csv.write_record(&record)?;
    }
    csv.flush().map_err(|e| Error::io("<population csv>", e))?;
    Ok(())
}

pub fn save_population(profiles: &[HouseholdProfile], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_population(profiles, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{Building, Point, WorldParts};

    fn world_with_buildings(n: u32) -> World {
        World::new(WorldParts {
            nodes: vec![(crate::geo::NodeId(0), Point::new(0.0, 0.0))],
            buildings: (0..n)
                .map(|i| Building {
                    id: BuildingId(100 + i),
                    location: Point::new(i as f64, 0.0),
                })
                .collect(),
            ..Default::default()
        })
        .unwrap()
    }

    fn degenerate_spec(count: usize) -> PopulationSpec {
        PopulationSpec {
            count,
            head_gender: Categorical::certain(HeadGender::Female),
            educ_level: Categorical::certain(EducLevel::GradeSchool),
            income_level: Categorical::certain(IncomeLevel::Low),
            house_ownership: Categorical::certain(HouseOwnership::Renting),
            has_children: Categorical::certain(Presence::Yes),
            has_elderly: Categorical::certain(Presence::No),
            with_disability: Categorical::certain(Presence::No),
            years_of_residency: Categorical::certain(Residency::AtMost10),
            house_quality: Categorical::certain(HouseQuality::Wood),
            floor_levels: Categorical::certain(FloorLevels::One),
            typhoon_experience: Categorical::certain(TyphoonExperience::Yes),
            members: MembersDist::new(3, 3, 3.0).unwrap(),
        }
    }

    #[test]
    fn count_exceeding_buildings_fails() {
        let w = world_with_buildings(3);
        assert!(synthesize(&degenerate_spec(4), &w, 1).is_err());
        assert_eq!(synthesize(&degenerate_spec(3), &w, 1).unwrap().len(), 3);
    }

    #[test]
    fn degenerate_spec_gives_identical_codes() {
        let w = world_with_buildings(50);
        let pop = synthesize(&degenerate_spec(50), &w, 9).unwrap();
        for p in &pop {
            let mut q = pop[0].clone();
            q.id = p.id;
            q.building_id = p.building_id;
            assert_eq!(&q, p);
        }
        let homes: HashSet<_> = pop.iter().map(|p| p.building_id).collect();
        assert_eq!(homes.len(), 50);
    }

    #[test]
    fn same_seed_same_population() {
        let w = world_with_buildings(200);
        let spec = PopulationSpec {
            count: 200,
            ..Default::default()
        };
        assert_eq!(synthesize(&spec, &w, 5).unwrap(), synthesize(&spec, &w, 5).unwrap());
        assert_ne!(synthesize(&spec, &w, 5).unwrap(), synthesize(&spec, &w, 6).unwrap());
    }

    #[test]
    fn members_stay_in_range_with_target_mean() {
        let d = MembersDist::new(1, 10, 4.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws: Vec<u32> = (0..20_000).map(|_| d.sample(&mut rng)).collect();
        assert!(draws.iter().all(|&m| (1..=10).contains(&m)));
        let mean = draws.iter().sum::<u32>() as f64 / draws.len() as f64;
        assert!((mean - 4.4).abs() < 0.05, "{mean}");
        assert!(MembersDist::new(0, 3, 1.0).is_err());
        assert!(MembersDist::new(2, 3, 5.0).is_err());
    }

    #[test]
    fn categorical_validation() {
        assert!(Categorical::new(vec![(HeadGender::Male, 0.5), (HeadGender::Female, 0.4)]).is_err());
        assert!(Categorical::new(vec![(HeadGender::Male, 1.2), (HeadGender::Female, -0.2)]).is_err());
        assert!(Categorical::new(vec![(HeadGender::Male, 0.7), (HeadGender::Female, 0.3)]).is_ok());
    }

    #[test]
    fn spec_text_round_trip() {
        let spec = PopulationSpec::default();
        assert_eq!(PopulationSpec::parse(&spec.to_text(), "spec").unwrap(), spec);
        let custom = PopulationSpec::parse("count = 12\nhead_gender = male:0.1, female:0.9\n", "s").unwrap();
        assert_eq!(custom.count, 12);
        assert_eq!(custom.head_gender.probability(HeadGender::Female), 0.9);
        assert!(PopulationSpec::parse("head_gender = male:0.1, alien:0.9\n", "s").is_err());
        assert!(PopulationSpec::parse("colour = red\n", "s").is_err());
    }

    #[test]
    fn empty_population_is_header_only() {
        let mut buf = Vec::new();
        write_population(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", CSV_HEADER.join(",")));
    }

    #[test]
    fn csv_validation_errors() {
        let w = world_with_buildings(3);
        let header = CSV_HEADER.join(",");
        let good = format!(
            "{header}\n1,0.5,0.25,0.25,0.5,0.0,0.0,0.0,0.5,0.25,0.5,0.5,4,100\n\
             2,1.0,1.0,1.0,1.0,1.0,1.0,1.0,1.0,1.0,1.0,1.0,2,101\n\
             3,1.0,0.5,0.5,0.5,1.0,0.0,0.0,0.5,0.5,1.0,0.5,5,102\n"
        );
        assert_eq!(read_population(good.as_bytes(), &w).unwrap().len(), 3);

        let bad_code = good.replace("2,1.0,1.0,", "2,1.0,0.3,");
        let err = read_population(bad_code.as_bytes(), &w).unwrap_err().to_string();
        assert!(err.starts_with("row 2: educ_level"), "{err}");

        let dup = good.replace(",5,102", ",5,101");
        let err = read_population(dup.as_bytes(), &w).unwrap_err().to_string();
        assert!(err.contains("row 3: building_id"), "{err}");

        let missing = good.replace(",5,102", ",5,999");
        assert!(read_population(missing.as_bytes(), &w).is_err());

        let bad_header = good.replace("members", "size");
        assert!(read_population(bad_header.as_bytes(), &w).is_err());
    }
}
