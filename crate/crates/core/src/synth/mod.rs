//! Synthetic cohorts with a planted link between app usage and stress.
//!
//! Each user has a latent daily stress level following a persistent
//! autoregressive process quantized to 1..=5, and a *rule*: for every usage
//! category, whether higher stress raises or lowers how often (and how long)
//! apps of that category are used. On each day the usage is driven by the
//! user's real stress level with probability `signal_strength`, and by an
//! unrelated level otherwise, so `signal_strength = 0` makes labels
//! independent of usage.
//!
//! Users either share one rule (`Homogeneous`) or get their own
//! (`PerUserRules`), handed out in pairs of opposite rules. The same usage
//! pattern then means high stress for one user and low stress for another,
//! which a single pooled model cannot reconcile.

pub mod oracle;
mod vocab;

use std::io::Write;
use std::str::FromStr;

use chrono::{Duration, NaiveDate};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use oracle::{brute_force_svm_oracle, OracleSolution};
pub use vocab::{category_apps, UNKNOWN_APPS};

use crate::error::{Error, Result};
use crate::ingest::{AppEvent, EmaResponse, ScreenInterval};
use crate::taxonomy::AppCategory;
use crate::time::{self, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heterogeneity {
    Homogeneous,
    PerUserRules,
}

impl FromStr for Heterogeneity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "homogeneous" => Ok(Heterogeneity::Homogeneous),
            "per_user_rules" => Ok(Heterogeneity::PerUserRules),
            other => Err(Error::Config(format!(
                "unknown heterogeneity {other:?} (expected homogeneous or per_user_rules)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n_users: usize,
    pub n_days: usize,
    pub seed: u64,
    pub signal_strength: f64,
    pub heterogeneity: Heterogeneity,
    /// Probability that any single prompt goes unanswered.
    pub ema_missing_rate: f64,
    pub apps_per_user_mean: f64,
    pub apps_per_user_sd: f64,
    /// First day of the study; only weekdays are generated.
    pub start_date: NaiveDate,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec {
            n_users: 22,
            n_days: 30,
            seed: 42,
            signal_strength: 0.9,
            heterogeneity: Heterogeneity::PerUserRules,
            ema_missing_rate: 0.1,
            apps_per_user_mean: 12.0,
            apps_per_user_sd: 6.45,
            start_date: NaiveDate::from_ymd_opt(2013, 11, 4).unwrap(),
        }
    }
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Synth(m));
        if self.n_users == 0 || self.n_days == 0 {
            return bad("n_users and n_days must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.signal_strength) {
            return bad(format!("signal_strength {} outside [0, 1]", self.signal_strength));
        }
        if !(0.0..1.0).contains(&self.ema_missing_rate) {
            return bad(format!("ema_missing_rate {} outside [0, 1)", self.ema_missing_rate));
        }
        if !(self.apps_per_user_mean > 0.0) || !(self.apps_per_user_sd >= 0.0) {
            return bad("app vocabulary size parameters must be positive".into());
        }
        Ok(())
    }
}

/// Per-category stress response: `+1` means more (and longer) use under
/// higher stress, `−1` less. Indexed as [`AppCategory::FEATURED`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub directions: [i8; 5],
}

impl Rule {
    /// Stress raises browser, utility and social use and lowers
    /// entertainment and games.
    pub const SHARED: Rule = Rule {
        directions: [-1, 1, -1, 1, 1],
    };

    /// Bit `i` is set when category `i` responds positively.
    pub fn id(&self) -> u32 {
        self.directions
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0)
            .map(|(i, _)| 1 << i)
            .sum()
    }

    pub fn from_id(id: u32) -> Rule {
        let mut directions = [-1; 5];
        for (i, d) in directions.iter_mut().enumerate() {
            if id & (1 << i) != 0 {
                *d = 1;
            }
        }
        Rule { directions }
    }

    pub fn direction(&self, c: AppCategory) -> i8 {
        c.feature_index().map_or(0, |i| self.directions[i])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthDay {
    pub user_id: String,
    pub date: NaiveDate,
    pub latent_stress: u8,
    pub rule_id: u32,
    /// Whether usage followed the latent stress on this day.
    pub coupled: bool,
    pub ema_answered: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Cohort {
    pub events: Vec<AppEvent>,
    pub screen: Vec<ScreenInterval>,
    pub ema: Vec<EmaResponse>,
    pub truth: Vec<TruthDay>,
}

/// Typical uses per day and seconds per use.
struct CategoryProfile {
    uses_per_day: f64,
    seconds_per_use: f64,
}

fn profile(c: AppCategory) -> CategoryProfile {
    let (uses_per_day, seconds_per_use) = match c {
        AppCategory::Entertainment => (6.0, 180.0),
        AppCategory::SocialNetworking => (14.0, 50.0),
        AppCategory::Game => (1.2, 420.0),
        AppCategory::Utility => (22.0, 70.0),
        AppCategory::Browser => (35.0, 35.0),
        AppCategory::Unknown => (3.0, 60.0),
    };
    CategoryProfile {
        uses_per_day,
        seconds_per_use,
    }
}

/// Log-rate change per stress level away from the midpoint.
const RATE_SLOPE: f64 = 0.6;
const DURATION_SLOPE: f64 = 0.2;
const AR_PERSISTENCE: f64 = 0.5;
/// Standard-normal quintiles: equal-probability stress levels.
const LEVEL_CUTS: [f64; 4] = [-0.8416, -0.2533, 0.2533, 0.8416];
const WORK_START_S: i64 = 9 * 3600;
/// Usage never runs past this offset from midnight.
const DAY_END_S: i64 = 23 * 3600;
const WORK_LENGTH_S: i64 = 8 * 3600 + 1800;
const PROMPT_OFFSETS_S: [i64; 3] = [9 * 3600 + 300, 12 * 3600 + 1800, 17 * 3600];

fn quantize(z: f64) -> u8 {
    1 + LEVEL_CUTS.iter().filter(|&&t| z > t).count() as u8
}

/// Daily weekday dates starting at `start` (advanced to a weekday).
pub fn study_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if time::is_weekday(d) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

struct UserPlan {
    user_id: String,
    rule: Rule,
    /// Per-category base-rate multipliers.
    base: [f64; 6],
    apps: Vec<(AppCategory, &'static str)>,
}

fn all_categories() -> [AppCategory; 6] {
    [
        AppCategory::Entertainment,
        AppCategory::SocialNetworking,
        AppCategory::Game,
        AppCategory::Utility,
        AppCategory::Browser,
        AppCategory::Unknown,
    ]
}

fn cat_slot(c: AppCategory) -> usize {
    c.feature_index().unwrap_or(5)
}

/// Spread of per-user, per-category base rates on the log scale.
const BASE_RATE_SPREAD: f64 = 0.1;

/// Rules for the whole cohort. Under per-user rules, consecutive users
/// form pairs with exactly opposite rules, and pairs draw distinct rules
/// until all sixteen are used.
fn assign_rules(spec: &CohortSpec, rng: &mut ChaCha8Rng) -> Vec<Rule> {
    match spec.heterogeneity {
        Heterogeneity::Homogeneous => vec![Rule::SHARED; spec.n_users],
        Heterogeneity::PerUserRules => {
            let mut ids: Vec<u32> = (0..16).collect();
            ids.shuffle(rng);
            (0..spec.n_users)
                .map(|i| {
                    let id = ids[(i / 2) % ids.len()];
                    Rule::from_id(if i % 2 == 0 { id } else { 31 - id })
                })
                .collect()
        }
    }
}

/// Users of an opposite-rule pair share vocabulary and base rates, so only
/// the rule tells them apart.
fn plan_owner(spec: &CohortSpec, i: usize) -> usize {
    match spec.heterogeneity {
        Heterogeneity::Homogeneous => i,
        Heterogeneity::PerUserRules => i - i % 2,
    }
}

fn plan_user(spec: &CohortSpec, index: usize, rule: Rule, rng: &mut ChaCha8Rng) -> UserPlan {
    let jitter = LogNormal::new(0.0, BASE_RATE_SPREAD).expect("valid lognormal");
    let mut base = [1.0; 6];
    base.iter_mut().for_each(|b| *b = jitter.sample(rng));

    let size_dist = Normal::new(spec.apps_per_user_mean, spec.apps_per_user_sd).expect("valid normal");
    let pool = vocab::pool();
    let n_apps = (size_dist.sample(rng).round() as i64).clamp(5, pool.len() as i64) as usize;
    // One app from every featured category, the rest from the whole pool.
    let mut apps: Vec<(AppCategory, &'static str)> = AppCategory::FEATURED
        .iter()
        .map(|&c| (c, *category_apps(c).choose(rng).expect("non-empty category")))
        .collect();
    let mut rest: Vec<_> = pool.into_iter().filter(|a| !apps.contains(a)).collect();
    rest.shuffle(rng);
    apps.extend(rest.into_iter().take(n_apps - apps.len()));
    UserPlan {
        user_id: format!("u{:03}", index + 1),
        rule,
        base,
        apps,
    }
}

fn ar_levels(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let innovation = (1.0 - AR_PERSISTENCE * AR_PERSISTENCE).sqrt();
    let mut z: f64 = normal.sample(rng);
    (0..n)
        .map(|_| {
            let level = quantize(z);
            z = AR_PERSISTENCE * z + innovation * normal.sample(rng);
            level
        })
        .collect()
}

fn generate_user(
    spec: &CohortSpec,
    index: usize,
    rule: Rule,
    plan_seed: u64,
    seed: u64,
    days: &[NaiveDate],
) -> Cohort {
    let plan = plan_user(spec, index, rule, &mut ChaCha8Rng::seed_from_u64(plan_seed));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stress = ar_levels(&mut rng, days.len());
    let decoy = ar_levels(&mut rng, days.len());
    let mut out = Cohort::default();

    for (d, &date) in days.iter().enumerate() {
        let coupled = rng.random_bool(spec.signal_strength);
        let driver = if coupled { stress[d] } else { decoy[d] } as f64 - 3.0;

        // Draw the day's uses, category by category.
        let mut uses: Vec<(&'static str, i64)> = Vec::new();
        for c in all_categories() {
            let apps: Vec<&'static str> = plan.apps.iter().filter(|a| a.0 == c).map(|a| a.1).collect();
            if apps.is_empty() {
                continue;
            }
            let dir = plan.rule.direction(c) as f64;
            let p = profile(c);
            let rate = p.uses_per_day * plan.base[cat_slot(c)] * (RATE_SLOPE * dir * driver).exp();
            let count = Poisson::new(rate).map_or(0.0, |dist| dist.sample(&mut rng)) as usize;
            let mean = p.seconds_per_use * (DURATION_SLOPE * dir * driver).exp();
            let sigma: f64 = 0.5;
            let dur = LogNormal::new(mean.ln() - 0.5 * sigma * sigma, sigma).expect("valid lognormal");
            for _ in 0..count {
                // Earlier apps in a user's list are favoured.
                let w: f64 = rng.random();
                let app = apps[((w * w) * apps.len() as f64) as usize];
                let secs = (dur.sample(&mut rng).round() as i64).max(1);
                uses.push((app, secs));
            }
        }
        uses.shuffle(&mut rng);
        lay_out_day(&mut out, &plan.user_id, date, &uses, &mut rng);

        let mut answered = 0;
        for offset in PROMPT_OFFSETS_S {
            if rng.random_bool(spec.ema_missing_rate) {
                continue;
            }
            let at = time::start_of_day(chrono_tz::Tz::UTC, date).0 + offset + rng.random_range(0..600);
            out.ema.push(EmaResponse {
                user_id: plan.user_id.clone(),
                at: Timestamp(at),
                level: stress[d],
            });
            answered += 1;
        }
        out.truth.push(TruthDay {
            user_id: plan.user_id.clone(),
            date,
            latent_stress: stress[d],
            rule_id: plan.rule.id(),
            coupled,
            ema_answered: answered,
        });
    }
    out
}

/// Places the day's uses into screen-on sessions separated by idle gaps,
/// starting at the beginning of the working day.
fn lay_out_day(
    out: &mut Cohort,
    user: &str,
    date: NaiveDate,
    uses: &[(&'static str, i64)],
    rng: &mut ChaCha8Rng,
) {
    // Sessions of 1-4 consecutive uses; each gets a short lead-in and tail
    // of screen time and 0-5 s between apps.
    let mut sessions: Vec<(Vec<(&'static str, i64, i64)>, i64)> = Vec::new();
    let mut i = 0;
    while i < uses.len() {
        let size = rng.random_range(1..=4).min(uses.len() - i);
        let lead = rng.random_range(1..=10);
        let mut cursor = lead;
        let mut items = Vec::with_capacity(size);
        for &(app, secs) in &uses[i..i + size] {
            items.push((app, cursor, secs));
            cursor += secs + rng.random_range(0..=5);
        }
        let tail = rng.random_range(2..=30);
        sessions.push((items, cursor + tail));
        i += size;
    }
    let busy: i64 = sessions.iter().map(|s| s.1).sum();
    let window = WORK_LENGTH_S.max(busy).min(DAY_END_S - WORK_START_S);
    let slack = (window - busy).max(0);
    let weights: Vec<f64> = (0..=sessions.len()).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total_w: f64 = weights.iter().sum();

    let midnight = time::start_of_day(chrono_tz::Tz::UTC, date).0;
    let limit = midnight + DAY_END_S;
    let mut t = midnight + WORK_START_S;
    for (s, (items, length)) in sessions.into_iter().enumerate() {
        t += (slack as f64 * weights[s] / total_w) as i64;
        if t + length > limit {
            break;
        }
        out.screen.push(ScreenInterval {
            user_id: user.to_owned(),
            start: Timestamp(t),
            end: Timestamp(t + length),
        });
        for (app, offset, secs) in items {
            out.events.push(AppEvent {
                user_id: user.to_owned(),
                app_id: app.to_owned(),
                start: Timestamp(t + offset),
                end: Timestamp(t + offset + secs),
            });
        }
        t += length;
    }
}

/// Generates the whole cohort. Users are generated independently from
/// seeds drawn in order from `spec.seed`, so output is identical however
/// the work is scheduled.
pub fn generate_cohort(spec: &CohortSpec) -> Result<Cohort> {
    spec.validate()?;
    let days = study_days(spec.start_date, spec.n_days);
    let mut master = ChaCha8Rng::seed_from_u64(spec.seed);
    let rules = assign_rules(spec, &mut master);
    let plan_seeds: Vec<u64> = (0..spec.n_users).map(|_| master.random()).collect();
    let seeds: Vec<u64> = (0..spec.n_users).map(|_| master.random()).collect();
    let parts: Vec<Cohort> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| generate_user(spec, i, rules[i], plan_seeds[plan_owner(spec, i)], s, &days))
        .collect();
    let mut cohort = Cohort::default();
    for p in parts {
        cohort.events.extend(p.events);
        cohort.screen.extend(p.screen);
        cohort.ema.extend(p.ema);
        cohort.truth.extend(p.truth);
    }
    Ok(cohort)
}

pub fn write_truth_csv<W: Write>(w: W, truth: &[TruthDay]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["user_id", "date", "latent_stress", "rule_id"])?;
    for t in truth {
        wr.write_record([
            t.user_id.clone(),
            t.date.to_string(),
            t.latent_stress.to_string(),
            t.rule_id.to_string(),
        ])?;
    }
    wr.flush().map_err(|e| Error::io("writing truth", e))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::ingest::{clip_to_screen_on, total_duration};

    fn small(seed: u64) -> CohortSpec {
        CohortSpec {
            n_users: 4,
            n_days: 10,
            seed,
            ..CohortSpec::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_cohort(&small(1)).unwrap();
        let b = generate_cohort(&small(1)).unwrap();
        let c = generate_cohort(&small(2)).unwrap();
        assert_eq!(a.events, b.events);
        assert_eq!(a.ema, b.ema);
        assert_eq!(a.truth, b.truth);
        assert_ne!(a.events, c.events);
    }

    #[test]
    fn events_lie_inside_screen_time() {
        let c = generate_cohort(&small(3)).unwrap();
        assert!(!c.events.is_empty());
        let clipped = clip_to_screen_on(&c.events, &c.screen);
        assert_eq!(clipped, c.events);
        assert_eq!(total_duration(&clipped), total_duration(&c.events));
        assert!(c.ema.iter().all(|r| (1..=5).contains(&r.level)));
    }

    #[test]
    fn events_stay_within_their_day() {
        let c = generate_cohort(&small(4)).unwrap();
        for e in &c.events {
            assert_eq!(e.start.local_date(chrono_tz::Tz::UTC), e.end.local_date(chrono_tz::Tz::UTC));
        }
    }

    #[test]
    fn weekdays_only() {
        let days = study_days(NaiveDate::from_ymd_opt(2013, 11, 2).unwrap(), 6);
        assert_eq!(days[0], NaiveDate::from_ymd_opt(2013, 11, 4).unwrap());
        assert!(days.iter().all(|&d| time::is_weekday(d)));
        assert_eq!(study_days(CohortSpec::default().start_date, 30).len(), 30);
    }

    #[test]
    fn rule_ids_round_trip() {
        for id in 0..32 {
            assert_eq!(Rule::from_id(id).id(), id);
        }
        assert_eq!(Rule::SHARED.direction(AppCategory::Browser), 1);
        assert_eq!(Rule::SHARED.direction(AppCategory::Entertainment), -1);
    }

    #[test]
    fn homogeneous_users_share_a_rule() {
        let spec = CohortSpec {
            heterogeneity: Heterogeneity::Homogeneous,
            ..small(5)
        };
        let c = generate_cohort(&spec).unwrap();
        assert!(c.truth.iter().all(|t| t.rule_id == Rule::SHARED.id()));
    }

    #[test]
    fn app_vocabulary_sizes() {
        let spec = CohortSpec {
            n_users: 200,
            n_days: 1,
            ..CohortSpec::default()
        };
        let c = generate_cohort(&spec).unwrap();
        let mut per_user: BTreeMap<&str, std::collections::BTreeSet<&str>> = BTreeMap::new();
        for e in &c.events {
            per_user.entry(&e.user_id).or_default().insert(&e.app_id);
        }
        let mean = per_user.values().map(|s| s.len() as f64).sum::<f64>() / per_user.len() as f64;
        // Used apps on one day undercount the vocabulary a little.
        assert!(mean > 6.0 && mean < 16.0, "mean {mean}");
    }

    #[test]
    fn zero_signal_decouples_every_day() {
        let spec = CohortSpec {
            signal_strength: 0.0,
            ..small(6)
        };
        let c = generate_cohort(&spec).unwrap();
        assert!(c.truth.iter().all(|t| !t.coupled));
    }

    #[test]
    fn invalid_specs() {
        for spec in [
            CohortSpec { signal_strength: 1.5, ..CohortSpec::default() },
            CohortSpec { ema_missing_rate: 1.0, ..CohortSpec::default() },
            CohortSpec { n_users: 0, ..CohortSpec::default() },
        ] {
            assert!(matches!(generate_cohort(&spec), Err(Error::Synth(_))));
        }
    }

    #[test]
    fn missing_rate_controls_answers() {
        let spec = CohortSpec {
            ema_missing_rate: 0.5,
            ..small(8)
        };
        let c = generate_cohort(&spec).unwrap();
        let answered: u32 = c.truth.iter().map(|t| t.ema_answered).sum();
        assert_eq!(answered as usize, c.ema.len());
        let rate = 1.0 - c.ema.len() as f64 / (3 * c.truth.len()) as f64;
        assert!((rate - 0.5).abs() < 0.15, "rate {rate}");
    }
}
