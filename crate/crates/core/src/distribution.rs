//! Campaign planning: sample budget and assignment of projects.
//!
//! Annotators sit on a ring. Annotator `i` shares one double-annotation
//! project with `(i + 1) mod n` and one with `(i + 2) mod n`, so every
//! annotator ends up with four partners. On top of that each annotator gets
//! a single-annotation project, a fraction of which is re-annotated later.
//!
//! With `n` annotators, `t` hours, rate `rho`, double proportion `d` and
//! re-annotation proportion `r` the number of unique samples is
//!
//! ```text
//! k = floor(rho * t * n / (2d + (1 + r)(1 - d)))
//! ```
//!
//! and the project sizes are `d*k/(2n)` (each double project),
//! `(1-d)*k/n` (single) and `r * |single|` (re-annotation), each rounded half
//! up. Rounding residue stays unassigned.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::model::CampaignParams;
use crate::rng;

const STREAM_POOL: u64 = 0;
const STREAM_REANNOTATE: u64 = 1;

/// Absolute slack, in annotations, for the per-annotator workload check.
/// Covers half-up rounding of six project sizes and the floor on `k`.
pub const WORKLOAD_SLACK: f64 = 4.0;

/// Guards `floor` and half-up rounding against representation error, e.g.
/// `3600 / (5/3)` landing a hair under 2160.
const ROUNDING_EPS: f64 = 1e-6;

fn round_half_up(x: f64) -> usize {
    libm::floor(x + 0.5 + ROUNDING_EPS).max(0.0) as usize
}

/// Real-valued `k` before flooring.
pub fn sample_count_exact(params: &CampaignParams) -> f64 {
    let d = params.double_prop;
    let r = params.reanno_prop;
    let per_sample_cost = 2.0 * d + (1.0 + r) * (1.0 - d);
    params.annotation_rate * params.time_per_annotator * params.num_annotators as f64 / per_sample_cost
}

/// Number of unique samples the campaign can cover.
pub fn compute_sample_count(params: &CampaignParams) -> Result<usize> {
    params.validate()?;
    let k = libm::floor(sample_count_exact(params) + ROUNDING_EPS);
    if k < 1.0 {
        return Err(Error::InvalidParams(format!(
            "budget covers no samples (k = {})",
            sample_count_exact(params)
        )));
    }
    Ok(k as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectSizes {
    /// Samples in each double-annotation project.
    pub double: usize,
    pub single: usize,
    pub reannotate: usize,
}

impl ProjectSizes {
    pub fn for_campaign(params: &CampaignParams, k: usize) -> Self {
        let n = params.num_annotators as f64;
        let d = params.double_prop;
        let double = round_half_up(d * k as f64 / (2.0 * n));
        let single = round_half_up((1.0 - d) * k as f64 / n);
        let reannotate = round_half_up(params.reanno_prop * single as f64);
        Self {
            double,
            single,
            reannotate,
        }
    }

    /// Unique samples consumed from the pool by `n` annotators.
    pub fn unique_samples(&self, num_annotators: usize) -> usize {
        num_annotators * (2 * self.double + self.single)
    }

    /// Annotations one annotator performs: own singles and re-annotations
    /// plus four double projects.
    pub fn workload(&self) -> usize {
        self.single + self.reannotate + 4 * self.double
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatorAssignment {
    pub id: String,
    pub single: Vec<String>,
    /// Subset of `single`, in the same order.
    pub reannotate: Vec<String>,
    /// Double projects keyed by partner id. Each project is stored under both
    /// partners.
    pub double: BTreeMap<String, Vec<String>>,
}

impl AnnotatorAssignment {
    pub fn workload(&self) -> usize {
        self.single.len() + self.reannotate.len() + self.double.values().map(Vec::len).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionPlan {
    pub params: CampaignParams,
    pub k: usize,
    pub seed: u64,
    pub sizes: ProjectSizes,
    /// Assignments in ring order.
    pub annotators: Vec<AnnotatorAssignment>,
}

/// Default annotator ids `a1..an`.
pub fn default_annotator_ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("a{i}")).collect()
}

/// Ring partners of annotator `i` created by `i` itself.
pub fn forward_partners(i: usize, n: usize) -> [usize; 2] {
    [(i + 1) % n, (i + 2) % n]
}

/// Assigns projects to annotators `a1..an`.
pub fn allocate_samples(sample_ids: &[String], params: &CampaignParams, seed: u64) -> Result<DistributionPlan> {
    let ids = default_annotator_ids(params.num_annotators);
    allocate_samples_for(sample_ids, &ids, params, seed)
}

/// Assigns projects to the given annotators, in ring order.
///
/// Samples are drawn without replacement from `sample_ids` with the pool
/// stream of `seed`; each annotator's re-annotation subset comes from a
/// separate stream keyed by the annotator's ring position.
pub fn allocate_samples_for(
    sample_ids: &[String],
    annotator_ids: &[String],
    params: &CampaignParams,
    seed: u64,
) -> Result<DistributionPlan> {
    params.validate()?;
    let n = params.num_annotators;
    if annotator_ids.len() != n {
        return Err(Error::InvalidParams(format!(
            "{} annotator ids given for {} annotators",
            annotator_ids.len(),
            n
        )));
    }
    let mut seen = BTreeSet::new();
    for id in annotator_ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::InvalidParams(format!("duplicate annotator id `{id}`")));
        }
    }
    let mut seen = BTreeSet::new();
    for id in sample_ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateSample(id.clone()));
        }
    }

    let k = compute_sample_count(params)?;
    let sizes = ProjectSizes::for_campaign(params, k);
    let required = k.max(sizes.unique_samples(n));
    if sample_ids.len() < required {
        return Err(Error::InsufficientSamples {
            required,
            available: sample_ids.len(),
        });
    }

    let mut pool_rng = rng::stream(seed, &[STREAM_POOL]);
    let picks = index::sample(&mut pool_rng, sample_ids.len(), sizes.unique_samples(n)).into_vec();
    let mut draws = picks.into_iter().map(|i| sample_ids[i].clone());
    let mut take = |count: usize| -> Vec<String> { draws.by_ref().take(count).collect() };

    let mut annotators: Vec<AnnotatorAssignment> = annotator_ids
        .iter()
        .map(|id| AnnotatorAssignment {
            id: id.clone(),
            single: Vec::new(),
            reannotate: Vec::new(),
            double: BTreeMap::new(),
        })
        .collect();

    for i in 0..n {
        for partner in forward_partners(i, n) {
            let project = take(sizes.double);
            let partner_id = annotator_ids[partner].clone();
            annotators[partner]
                .double
                .insert(annotator_ids[i].clone(), project.clone());
            annotators[i].double.insert(partner_id, project);
        }
        let single = take(sizes.single);
        let mut re_rng = rng::stream(seed, &[STREAM_REANNOTATE, i as u64]);
        let mut chosen = index::sample(&mut re_rng, single.len(), sizes.reannotate.min(single.len())).into_vec();
        chosen.sort_unstable();
        annotators[i].reannotate = chosen.into_iter().map(|j| single[j].clone()).collect();
        annotators[i].single = single;
    }

    Ok(DistributionPlan {
        params: params.clone(),
        k,
        seed,
        sizes,
        annotators,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlanReport {
    pub violations: Vec<String>,
    pub workloads: Vec<(String, usize)>,
    pub unique_samples: usize,
}

impl PlanReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Audits a plan: ring structure, disjoint project groups, re-annotation
/// subsets, project sizes and per-annotator workload against `rate * time`.
pub fn verify_plan(plan: &DistributionPlan) -> PlanReport {
    let mut report = PlanReport::default();
    let n = plan.annotators.len();
    let mut violate = |msg: String| report.violations.push(msg);

    if n != plan.params.num_annotators {
        violate(format!(
            "plan has {} annotators, parameters say {}",
            n, plan.params.num_annotators
        ));
    }

    // sample id -> groups containing it
    let mut owners: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for (i, a) in plan.annotators.iter().enumerate() {
        if a.single.len() != plan.sizes.single {
            violate(format!(
                "{}: single project has {} samples, expected {}",
                a.id,
                a.single.len(),
                plan.sizes.single
            ));
        }
        if a.reannotate.len() != plan.sizes.reannotate {
            violate(format!(
                "{}: re-annotation set has {} samples, expected {}",
                a.id,
                a.reannotate.len(),
                plan.sizes.reannotate
            ));
        }
        for s in &a.single {
            owners.entry(s).or_default().push(format!("single {}", a.id));
        }
        let singles: BTreeSet<&str> = a.single.iter().map(String::as_str).collect();
        let mut re_seen = BTreeSet::new();
        for s in &a.reannotate {
            if !singles.contains(s.as_str()) {
                violate(format!("{}: re-annotation `{s}` is not in its single project", a.id));
            }
            if !re_seen.insert(s.as_str()) {
                violate(format!("{}: re-annotation `{s}` listed twice", a.id));
            }
        }

        if n >= 5 {
            let expected: BTreeSet<&str> = [(i + 1) % n, (i + 2) % n, (i + n - 1) % n, (i + n - 2) % n]
                .iter()
                .map(|&j| plan.annotators[j].id.as_str())
                .collect();
            let actual: BTreeSet<&str> = a.double.keys().map(String::as_str).collect();
            if expected != actual {
                violate(format!(
                    "{}: double partners {:?}, expected {:?}",
                    a.id, actual, expected
                ));
            }
        }
        for (partner, project) in &a.double {
            if project.len() != plan.sizes.double {
                violate(format!(
                    "{}-{}: double project has {} samples, expected {}",
                    a.id,
                    partner,
                    project.len(),
                    plan.sizes.double
                ));
            }
            match plan.annotators.iter().find(|b| &b.id == partner) {
                Some(b) if b.double.get(&a.id) == Some(project) => {}
                Some(_) => violate(format!("{}-{}: double project not mirrored", a.id, partner)),
                None => violate(format!("{}: unknown partner `{partner}`", a.id)),
            }
            // count each unordered project once
            if a.id < *partner {
                for s in project {
                    owners
                        .entry(s)
                        .or_default()
                        .push(format!("double {}-{}", a.id, partner));
                }
            }
        }

        let workload = a.workload();
        let budget = plan.params.budget_per_annotator();
        if libm::fabs(workload as f64 - budget) > WORKLOAD_SLACK {
            violate(format!(
                "{}: workload {} deviates from budget {:.2} by more than {}",
                a.id, workload, budget, WORKLOAD_SLACK
            ));
        }
        report.workloads.push((a.id.clone(), workload));
    }

    for (sample, groups) in &owners {
        if groups.len() > 1 {
            report
                .violations
                .push(format!("sample `{sample}` appears in {}", groups.join(", ")));
        }
    }
    report.unique_samples = owners.len();
    report
}

/// Text describing how double-project sizes follow from the budget, e.g.
/// `"4 x 60 double + 240 single + 120 re = 600 annotations per annotator (budget 600)"`.
pub fn budget_summary(plan: &DistributionPlan) -> String {
    let s = &plan.sizes;
    format!(
        "4 x {} double + {} single + {} re = {} annotations per annotator (budget {})",
        s.double,
        s.single,
        s.reannotate,
        s.workload(),
        fmt_number(plan.params.budget_per_annotator())
    )
}

fn fmt_number(x: f64) -> String {
    if libm::fabs(x - libm::round(x)) < 1e-9 {
        format!("{}", libm::round(x) as i64)
    } else {
        format!("{x:.2}")
    }
}

impl DistributionPlan {
    /// Exact, unrounded double-project size `d*k/(2n)`.
    pub fn double_size_exact(&self) -> f64 {
        self.params.double_prop * self.k as f64 / (2.0 * self.params.num_annotators as f64)
    }

    pub fn annotator(&self, id: &str) -> Option<&AnnotatorAssignment> {
        self.annotators.iter().find(|a| a.id == id)
    }

    /// `(sample, annotator, is_reannotation)` triples in plan order.
    pub fn assignments(&self) -> Vec<(String, String, bool)> {
        let mut out = Vec::new();
        for a in &self.annotators {
            for project in a.double.values() {
                out.extend(project.iter().map(|s| (s.clone(), a.id.clone(), false)));
            }
            out.extend(a.single.iter().map(|s| (s.clone(), a.id.clone(), false)));
            out.extend(a.reannotate.iter().map(|s| (s.clone(), a.id.clone(), true)));
        }
        out
    }
}

impl core::fmt::Display for ProjectSizes {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "double {} / single {} / re {}",
            self.double, self.single, self.reannotate
        )
    }
}
