//! Perceived-risk scoring and the evacuate/stay rule.
//!
//! A household's perceived risk is a weighted sum of three factor groups:
//! characteristics of the decision maker (CDM, eight coded attributes),
//! hazard-related factors (HRF, five) and capacity-related factors (CRF,
//! three), plus a small bounded-rationality term ε. The household evacuates
//! when its perceived risk is strictly higher than `threshold` times the
//! highest score attainable under the same weights.

use crate::codes::{coded_enum, Coded};
use crate::geo::ProximityClass;
use crate::population::HouseholdProfile;
use crate::{Error, Result};

/// Largest bounded-rationality perturbation.
pub const EPSILON_MAX: f64 = 0.05;

/// Sum of the maximum codes of each factor group.
pub const CDM_MAX: f64 = 8.0;
pub const HRF_MAX: f64 = 5.0;
pub const CRF_MAX: f64 = 3.0;

coded_enum!(
    /// Public storm warning signal level.
    StormSignal {
        Psws1 = 0.25, "1";
        Psws2 = 0.5, "2";
        Psws3 = 1.0, "3";
    }
);

impl StormSignal {
    pub fn level(self) -> u8 {
        match self {
            StormSignal::Psws1 => 1,
            StormSignal::Psws2 => 2,
            StormSignal::Psws3 => 3,
        }
    }

    pub fn from_level(level: u8) -> Option<Self> {
        Self::ALL.iter().copied().find(|s| s.level() == level)
    }
}

coded_enum!(
    /// Color-coded rainfall advisory.
    Rainfall {
        Yellow = 0.25, "yellow";
        Orange = 0.5, "orange";
        Red = 1.0, "red";
    }
);

coded_enum!(TimeOfDay {
    Daytime = 0.5, "day";
    Nighttime = 1.0, "night";
});

coded_enum!(
    /// Who told the household about the coming typhoon.
    WarningSource {
        Friends = 0.25, "friends";
        Media = 0.5, "media";
        Authorities = 1.0, "authorities";
    }
);

/// Exogenous hazard drivers shared by every household in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub storm: StormSignal,
    pub rainfall: Rainfall,
    pub time_of_day: TimeOfDay,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            storm: StormSignal::Psws1,
            rainfall: Rainfall::Yellow,
            time_of_day: TimeOfDay::Daytime,
        }
    }
}

/// Weights of the three factor groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub cdm: f64,
    pub hrf: f64,
    pub crf: f64,
}

impl Weights {
    /// Each weight must lie in (0, 1].
    pub fn new(cdm: f64, hrf: f64, crf: f64) -> Result<Self> {
        for (name, w) in [("cdm", cdm), ("hrf", hrf), ("crf", crf)] {
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::InvalidInput(format!(
                    "weight {name} must lie in (0, 1], got {w}"
                )));
            }
        }
        Ok(Weights { cdm, hrf, crf })
    }

    pub fn sum(&self) -> f64 {
        self.cdm + self.hrf + self.crf
    }

    /// Whether the weights add up to exactly one (within 1e-9).
    pub fn sums_to_one(&self) -> bool {
        (self.sum() - 1.0).abs() <= 1e-9
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            cdm: 0.1,
            hrf: 0.1,
            crf: 0.1,
        }
    }
}

/// Household-specific inputs to the hazard factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskContext {
    pub source: WarningSource,
    pub proximity: ProximityClass,
    pub epsilon: f64,
}

impl RiskContext {
    pub fn new(source: WarningSource, proximity: ProximityClass, epsilon: f64) -> Result<Self> {
        if !(0.0..=EPSILON_MAX).contains(&epsilon) {
            return Err(Error::InvalidInput(format!(
                "bounded rationality must lie in [0, {EPSILON_MAX}], got {epsilon}"
            )));
        }
        Ok(RiskContext {
            source,
            proximity,
            epsilon,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskBreakdown {
    pub cdm: f64,
    pub hrf: f64,
    pub crf: f64,
    pub perceived_risk: f64,
    pub highest_possible: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Evacuate,
    Stay,
}

pub fn cdm_score(p: &HouseholdProfile) -> f64 {
    p.head_gender.code()
        + p.income_level.code()
        + p.educ_level.code()
        + p.has_children.code()
        + p.has_elderly.code()
        + p.with_disability.code()
        + p.house_ownership.code()
        + p.years_of_residency.code()
}

pub fn hrf_score(s: &Scenario, ctx: &RiskContext) -> f64 {
    s.storm.code() + s.rainfall.code() + ctx.proximity.code() + ctx.source.code() + s.time_of_day.code()
}

pub fn crf_score(p: &HouseholdProfile) -> f64 {
    p.house_quality.code() + p.floor_levels.code() + p.typhoon_experience.code()
}

/// Highest attainable perceived risk (ε excluded) for `w`.
pub fn highest_possible_score(w: &Weights) -> f64 {
    // Same term order as `weighted_risk`, so maximal factors reproduce this
    // value bit for bit.
    weighted_risk(CDM_MAX, HRF_MAX, CRF_MAX, w, 0.0)
}

fn weighted_risk(cdm: f64, hrf: f64, crf: f64, w: &Weights, epsilon: f64) -> f64 {
    cdm * w.cdm + hrf * w.hrf + crf * w.crf + epsilon
}

/// Score the three factor groups with the profile's CDM precomputed.
///
/// CDM and CRF depend only on the profile; the engine evaluates them once per
/// household and reuses them across the hazard updates.
pub fn breakdown_from_scores(cdm: f64, crf: f64, s: &Scenario, ctx: &RiskContext, w: &Weights) -> RiskBreakdown {
    let hrf = hrf_score(s, ctx);
    RiskBreakdown {
        cdm,
        hrf,
        crf,
        perceived_risk: weighted_risk(cdm, hrf, crf, w, ctx.epsilon),
        highest_possible: highest_possible_score(w),
    }
}

pub fn perceived_risk(p: &HouseholdProfile, s: &Scenario, ctx: &RiskContext, w: &Weights) -> RiskBreakdown {
    breakdown_from_scores(cdm_score(p), crf_score(p), s, ctx, w)
}

/// Evacuate iff perceived risk is strictly above `threshold` × highest score.
pub fn decide(b: &RiskBreakdown, threshold: f64) -> Decision {
    debug_assert!((0.0..=1.0).contains(&threshold));
    if b.perceived_risk > threshold * b.highest_possible {
        Decision::Evacuate
    } else {
        Decision::Stay
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::BuildingId;
    use crate::population::*;
    use proptest::prelude::*;

    fn profile() -> HouseholdProfile {
        HouseholdProfile {
            id: 1,
            head_gender: HeadGender::Female,
            educ_level: EducLevel::GradeSchool,
            income_level: IncomeLevel::Low,
            house_ownership: HouseOwnership::Renting,
            has_children: Presence::Yes,
            has_elderly: Presence::No,
            with_disability: Presence::No,
            years_of_residency: Residency::AtMost10,
            house_quality: HouseQuality::Concrete,
            floor_levels: FloorLevels::MoreThanOne,
            typhoon_experience: TyphoonExperience::Yes,
            members: 4,
            building_id: BuildingId(1),
        }
    }

    fn all_min() -> HouseholdProfile {
        HouseholdProfile {
            head_gender: HeadGender::Male,
            educ_level: EducLevel::College,
            income_level: IncomeLevel::High,
            house_ownership: HouseOwnership::Owns,
            has_children: Presence::No,
            years_of_residency: Residency::MoreThan10,
            ..profile()
        }
    }

    fn all_max() -> HouseholdProfile {
        HouseholdProfile {
            head_gender: HeadGender::Female,
            educ_level: EducLevel::GradeSchool,
            income_level: IncomeLevel::Low,
            house_ownership: HouseOwnership::Renting,
            has_children: Presence::Yes,
            has_elderly: Presence::Yes,
            with_disability: Presence::Yes,
            years_of_residency: Residency::AtMost10,
            house_quality: HouseQuality::Light,
            floor_levels: FloorLevels::One,
            typhoon_experience: TyphoonExperience::No,
            ..profile()
        }
    }

    fn ctx(source: WarningSource, proximity: ProximityClass) -> RiskContext {
        RiskContext::new(source, proximity, 0.0).unwrap()
    }

    #[test]
    fn cdm_examples() {
        assert_eq!(cdm_score(&profile()), 6.0);
        assert_eq!(cdm_score(&all_min()), 2.0);
        assert_eq!(cdm_score(&all_max()), 8.0);
    }

    #[test]
    fn hrf_examples() {
        let low = Scenario::default();
        assert_eq!(hrf_score(&low, &ctx(WarningSource::Friends, ProximityClass::Far)), 1.5);
        let high = Scenario {
            storm: StormSignal::Psws3,
            rainfall: Rainfall::Red,
            time_of_day: TimeOfDay::Nighttime,
        };
        assert_eq!(
            hrf_score(&high, &ctx(WarningSource::Authorities, ProximityClass::Within)),
            5.0
        );
        let mid = Scenario {
            storm: StormSignal::Psws2,
            rainfall: Rainfall::Orange,
            time_of_day: TimeOfDay::Nighttime,
        };
        assert_eq!(
            hrf_score(&mid, &ctx(WarningSource::Authorities, ProximityClass::Within)),
            4.0
        );
    }

    #[test]
    fn crf_examples() {
        assert_eq!(crf_score(&profile()), 1.25);
        assert_eq!(crf_score(&all_max()), 3.0);
        let p = HouseholdProfile {
            house_quality: HouseQuality::Wood,
            floor_levels: FloorLevels::One,
            typhoon_experience: TyphoonExperience::Yes,
            ..profile()
        };
        assert_eq!(crf_score(&p), 2.0);
    }

    #[test]
    fn highest_possible_examples() {
        let hp = |c, h, r| highest_possible_score(&Weights::new(c, h, r).unwrap());
        assert!((hp(0.2, 0.5, 0.3) - 5.0).abs() < 1e-12);
        assert_eq!(hp(1.0, 1.0, 1.0), 16.0);
        assert!((hp(0.1, 0.8, 0.1) - 5.1).abs() < 1e-12);
    }

    #[test]
    fn weighted_sum_example() {
        let w = Weights::new(0.3, 0.4, 0.3).unwrap();
        assert!((weighted_risk(6.0, 3.0, 2.0, &w, 0.0) - 3.6).abs() < 1e-12);
    }

    #[test]
    fn maximal_factors_hit_highest_exactly() {
        let s = Scenario {
            storm: StormSignal::Psws3,
            rainfall: Rainfall::Red,
            time_of_day: TimeOfDay::Nighttime,
        };
        let c = ctx(WarningSource::Authorities, ProximityClass::Within);
        for w in [(0.1, 0.8, 0.1), (0.3, 0.3, 0.4), (0.7, 0.2, 0.1), (1.0, 1.0, 1.0)] {
            let w = Weights::new(w.0, w.1, w.2).unwrap();
            let b = perceived_risk(&all_max(), &s, &c, &w);
            assert_eq!(b.perceived_risk, b.highest_possible);
            assert_eq!(decide(&b, 1.0), Decision::Stay);
            let with_eps = perceived_risk(&all_max(), &s, &RiskContext { epsilon: 0.05, ..c }, &w);
            assert_eq!(decide(&with_eps, 1.0), Decision::Evacuate);
        }
    }

    #[test]
    fn decide_is_strict() {
        let b = RiskBreakdown {
            cdm: 6.0,
            hrf: 3.0,
            crf: 2.0,
            perceived_risk: 3.6,
            highest_possible: 5.3,
        };
        assert_eq!(decide(&b, 0.7), Decision::Stay);
        let tie = RiskBreakdown {
            perceived_risk: 0.5 * 4.0,
            highest_possible: 4.0,
            ..b
        };
        assert_eq!(decide(&tie, 0.5), Decision::Stay);
        assert_eq!(decide(&tie, 0.0), Decision::Evacuate);
    }

    #[test]
    fn input_validation() {
        assert!(Weights::new(0.0, 0.5, 0.5).is_err());
        assert!(Weights::new(1.1, 0.5, 0.5).is_err());
        assert!(Weights::new(f64::NAN, 0.5, 0.5).is_err());
        assert!(Weights::new(0.2, 0.5, 0.3).unwrap().sums_to_one());
        assert!(!Weights::new(0.1, 0.1, 0.1).unwrap().sums_to_one());
        assert!(RiskContext::new(WarningSource::Media, ProximityClass::Far, 0.051).is_err());
        assert!(RiskContext::new(WarningSource::Media, ProximityClass::Far, -0.001).is_err());
        assert_eq!(StormSignal::from_level(2), Some(StormSignal::Psws2));
        assert_eq!(StormSignal::from_level(4), None);
    }

    fn arb_profile() -> impl Strategy<Value = HouseholdProfile> {
        let pick = |n: usize| 0..n;
        (
            (pick(2), pick(3), pick(3), pick(2), pick(2), pick(2)),
            (pick(2), pick(2), pick(3), pick(2), pick(2)),
        )
            .prop_map(|((g, e, i, o, c, el), (d, y, q, f, t))| HouseholdProfile {
                head_gender: HeadGender::ALL[g],
                educ_level: EducLevel::ALL[e],
                income_level: IncomeLevel::ALL[i],
                house_ownership: HouseOwnership::ALL[o],
                has_children: Presence::ALL[c],
                has_elderly: Presence::ALL[el],
                with_disability: Presence::ALL[d],
                years_of_residency: Residency::ALL[y],
                house_quality: HouseQuality::ALL[q],
                floor_levels: FloorLevels::ALL[f],
                typhoon_experience: TyphoonExperience::ALL[t],
                ..profile()
            })
    }

    fn arb_weights() -> impl Strategy<Value = Weights> {
        (0.01f64..=1.0, 0.01f64..=1.0, 0.01f64..=1.0).prop_map(|(c, h, r)| Weights::new(c, h, r).unwrap())
    }

    proptest! {
        #[test]
        fn monotone_in_every_hazard_code(
            p in arb_profile(),
            w in arb_weights(),
            eps in 0.0f64..=EPSILON_MAX,
            base in (0usize..3, 0usize..3, 0usize..2, 0usize..3, 0usize..3),
            which in 0usize..5,
        ) {
            let build = |idx: [usize; 5]| {
                let s = Scenario {
                    storm: StormSignal::ALL[idx[0]],
                    rainfall: Rainfall::ALL[idx[1]],
                    time_of_day: TimeOfDay::ALL[idx[2]],
                };
                let prox = [ProximityClass::Far, ProximityClass::Near, ProximityClass::Within][idx[3]];
                let c = RiskContext::new(WarningSource::ALL[idx[4]], prox, eps).unwrap();
                perceived_risk(&p, &s, &c, &w).perceived_risk
            };
            let lo = [base.0, base.1, base.2, base.3, base.4];
            let limits = [3, 3, 2, 3, 3];
            let mut hi = lo;
            hi[which] = (hi[which] + 1).min(limits[which] - 1);
            prop_assert!(build(lo) <= build(hi));
        }

        #[test]
        fn decision_invariant_under_exact_scaling(
            p in arb_profile(),
            w in arb_weights(),
            eps in 0.0f64..=EPSILON_MAX,
            threshold in 0.0f64..=1.0,
            shift in 1i32..6,
        ) {
            // powers of two scale floating-point values exactly
            let k = 2f64.powi(-shift);
            let s = Scenario::default();
            let c = RiskContext::new(WarningSource::Media, ProximityClass::Near, eps).unwrap();
            let scaled_w = Weights::new(w.cdm * k, w.hrf * k, w.crf * k).unwrap();
            let scaled_c = RiskContext { epsilon: eps * k, ..c };
            prop_assert_eq!(
                decide(&perceived_risk(&p, &s, &c, &w), threshold),
                decide(&perceived_risk(&p, &s, &scaled_c, &scaled_w), threshold)
            );
        }
    }
}
