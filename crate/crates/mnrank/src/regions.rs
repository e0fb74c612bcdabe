//! MCC-optimal axis-aligned rectangle classifiers in the
//! (S₀(10³), S₀(10⁵)) plane.
//!
//! Each non-default rank gets one closed rectangle; rectangles are
//! tried in descending rank order and uncovered points fall through to
//! the default class. Fitting searches thresholds drawn from the data
//! midpoints (plus ±∞): exhaustively when the instance is small enough,
//! otherwise by coordinate ascent from several seeded restarts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{mcc, ConfusionMatrix};
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("point cloud contains fewer than two classes")]
    SingleClass,
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Closed rectangle; ±∞ bounds are stored as `None` in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    #[serde(with = "lower_bound")]
    pub x_lo: f64,
    #[serde(with = "upper_bound")]
    pub x_hi: f64,
    #[serde(with = "lower_bound")]
    pub y_lo: f64,
    #[serde(with = "upper_bound")]
    pub y_hi: f64,
}

impl Rect {
    pub const FULL: Rect = Rect {
        x_lo: f64::NEG_INFINITY,
        x_hi: f64::INFINITY,
        y_lo: f64::NEG_INFINITY,
        y_hi: f64::INFINITY,
    };

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_lo && x <= self.x_hi && y >= self.y_lo && y <= self.y_hi
    }
}

mod lower_bound {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

mod upper_bound {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Rectangles in priority order (first hit wins) plus the fallthrough
/// class for uncovered points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectangleRuleSet {
    pub rules: Vec<(u8, Rect)>,
    pub default_class: u8,
}

impl RectangleRuleSet {
    pub fn classify(&self, x: f64, y: f64) -> u8 {
        for &(class, rect) in &self.rules {
            if rect.contains(x, y) {
                return class;
            }
        }
        self.default_class
    }
}

/// (x, y, true rank) triples; x = S₀(10³), y = S₀(10⁵) in the paper's
/// setting, but fitting is agnostic to the sums' meanings.
#[derive(Debug, Clone)]
pub struct SumPointCloud {
    pub points: Vec<(f64, f64, u8)>,
}

impl SumPointCloud {
    pub fn classes(&self) -> Vec<u8> {
        let mut c: Vec<u8> = self.points.iter().map(|p| p.2).collect();
        c.sort_unstable();
        c.dedup();
        c
    }
}

/// Exhaustive search is used when the number of threshold combinations
/// stays below this bound; above it, coordinate ascent takes over.
const EXACT_WORK_LIMIT: f64 = 4e6;
const RESTARTS: usize = 8;
const MAX_SWEEPS: usize = 60;

fn rule_mcc(rules: &RectangleRuleSet, cloud: &SumPointCloud, classes: &[u8]) -> f64 {
    let c = classes.len();
    let index = |label: u8| classes.iter().position(|&x| x == label).unwrap();
    let mut counts = vec![vec![0u64; c]; c];
    for &(x, y, t) in &cloud.points {
        counts[index(t)][index(rules.classify(x, y))] += 1;
    }
    mcc(&ConfusionMatrix {
        classes: classes.to_vec(),
        counts,
    })
}

/// Candidate thresholds on one axis: −∞, midpoints between consecutive
/// distinct coordinates, +∞.
fn candidates(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    let mut out = vec![f64::NEG_INFINITY];
    for w in values.windows(2) {
        out.push(0.5 * (w[0] + w[1]));
    }
    out.push(f64::INFINITY);
    out
}

/// Fits a rectangle rule set maximizing the MCC over `cloud`.
///
/// The default class is the smallest rank in `classes`; every other
/// class gets one rectangle, matched in descending rank order. Returns
/// the rules and the achieved MCC.
pub fn fit(
    cloud: &SumPointCloud,
    classes: &[u8],
    seed: u64,
) -> Result<(RectangleRuleSet, f64), RegionError> {
    if classes.len() < 2 {
        return Err(RegionError::Config(format!(
            "need at least two classes, got {classes:?}"
        )));
    }
    if cloud.classes().len() < 2 {
        return Err(RegionError::SingleClass);
    }
    let xs = candidates(cloud.points.iter().map(|p| p.0).collect());
    let ys = candidates(cloud.points.iter().map(|p| p.1).collect());
    fit_on_candidates(cloud, classes, &xs, &ys, seed)
}

fn fit_on_candidates(
    cloud: &SumPointCloud,
    classes: &[u8],
    xs: &[f64],
    ys: &[f64],
    seed: u64,
) -> Result<(RectangleRuleSet, f64), RegionError> {
    let mut sorted = classes.to_vec();
    sorted.sort_unstable();
    let default_class = sorted[0];
    let mut rect_classes: Vec<u8> = sorted[1..].to_vec();
    rect_classes.reverse(); // descending rank = priority order

    let pairs = |n: usize| (n * (n + 1) / 2) as f64;
    let per_rect = pairs(xs.len()) * pairs(ys.len());
    let work = per_rect.powi(rect_classes.len() as i32) * cloud.points.len() as f64;

    if work <= EXACT_WORK_LIMIT * cloud.points.len().max(1) as f64 {
        Ok(fit_exact(cloud, classes, &rect_classes, default_class, xs, ys))
    } else {
        Ok(fit_ascent(
            cloud,
            classes,
            &rect_classes,
            default_class,
            xs,
            ys,
            seed,
        ))
    }
}

fn fit_exact(
    cloud: &SumPointCloud,
    classes: &[u8],
    rect_classes: &[u8],
    default_class: u8,
    xs: &[f64],
    ys: &[f64],
) -> (RectangleRuleSet, f64) {
    // All lo ≤ hi threshold pairs on each axis, then every assignment
    // of an (x-pair, y-pair) rectangle to each non-default class.
    let axis_pairs = |c: &[f64]| {
        let mut out = Vec::new();
        for i in 0..c.len() {
            for j in i..c.len() {
                out.push((c[i], c[j]));
            }
        }
        out
    };
    let xp = axis_pairs(xs);
    let yp = axis_pairs(ys);
    let mut rects: Vec<Rect> = Vec::with_capacity(xp.len() * yp.len());
    for &(x_lo, x_hi) in &xp {
        for &(y_lo, y_hi) in &yp {
            rects.push(Rect {
                x_lo,
                x_hi,
                y_lo,
                y_hi,
            });
        }
    }

    let mut choice = vec![0usize; rect_classes.len()];
    let mut best: Option<(RectangleRuleSet, f64)> = None;
    loop {
        let rules = RectangleRuleSet {
            rules: rect_classes
                .iter()
                .zip(&choice)
                .map(|(&c, &i)| (c, rects[i]))
                .collect(),
            default_class,
        };
        let score = rule_mcc(&rules, cloud, classes);
        if best.as_ref().is_none_or(|(_, b)| score > *b) {
            best = Some((rules, score));
        }
        // Odometer increment over the rectangle choices.
        let mut k = 0;
        loop {
            if k == choice.len() {
                return best.unwrap();
            }
            choice[k] += 1;
            if choice[k] < rects.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

fn fit_ascent(
    cloud: &SumPointCloud,
    classes: &[u8],
    rect_classes: &[u8],
    default_class: u8,
    xs: &[f64],
    ys: &[f64],
    seed: u64,
) -> (RectangleRuleSet, f64) {
    let mut rng = SplitMix64::new(seed);
    let mut best: Option<(RectangleRuleSet, f64)> = None;

    for restart in 0..=RESTARTS {
        let mut rules = if restart == 0 {
            // Seed with the best y-only threshold rule so the final MCC
            // can never fall below it.
            best_y_only(cloud, classes, rect_classes, default_class, ys)
        } else {
            RectangleRuleSet {
                rules: rect_classes
                    .iter()
                    .map(|&c| {
                        let mut pick = |cand: &[f64]| {
                            let a = cand[rng.next_below(cand.len() as u64) as usize];
                            let b = cand[rng.next_below(cand.len() as u64) as usize];
                            (a.min(b), a.max(b))
                        };
                        let (x_lo, x_hi) = pick(xs);
                        let (y_lo, y_hi) = pick(ys);
                        (
                            c,
                            Rect {
                                x_lo,
                                x_hi,
                                y_lo,
                                y_hi,
                            },
                        )
                    })
                    .collect(),
                default_class,
            }
        };

        let mut score = rule_mcc(&rules, cloud, classes);
        for _ in 0..MAX_SWEEPS {
            let mut improved = false;
            for r in 0..rules.rules.len() {
                for coord in 0..4 {
                    let cand = if coord < 2 { xs } else { ys };
                    let current = rules.rules[r].1;
                    let mut local_best = score;
                    let mut local_rect = current;
                    for &v in cand {
                        let mut rect = current;
                        match coord {
                            0 if v <= rect.x_hi => rect.x_lo = v,
                            1 if v >= rect.x_lo => rect.x_hi = v,
                            2 if v <= rect.y_hi => rect.y_lo = v,
                            3 if v >= rect.y_lo => rect.y_hi = v,
                            _ => continue,
                        }
                        rules.rules[r].1 = rect;
                        let s = rule_mcc(&rules, cloud, classes);
                        if s > local_best {
                            local_best = s;
                            local_rect = rect;
                        }
                    }
                    rules.rules[r].1 = local_rect;
                    if local_best > score {
                        score = local_best;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        if best.as_ref().is_none_or(|(_, b)| score > *b) {
            best = Some((rules, score));
        }
    }
    best.unwrap()
}

/// The best rule set whose rectangles span the full x axis, i.e. a pure
/// S₀(10⁵)-threshold classifier, found by coordinate ascent on the y
/// bounds alone (exact for a single rectangle).
fn best_y_only(
    cloud: &SumPointCloud,
    classes: &[u8],
    rect_classes: &[u8],
    default_class: u8,
    ys: &[f64],
) -> RectangleRuleSet {
    let mut rules = RectangleRuleSet {
        rules: rect_classes.iter().map(|&c| (c, Rect::FULL)).collect(),
        default_class,
    };
    let mut score = rule_mcc(&rules, cloud, classes);
    for _ in 0..MAX_SWEEPS {
        let mut improved = false;
        for r in 0..rules.rules.len() {
            for coord in 0..2 {
                let current = rules.rules[r].1;
                let mut local_best = score;
                let mut local_rect = current;
                for &v in ys {
                    let mut rect = current;
                    match coord {
                        0 if v <= rect.y_hi => rect.y_lo = v,
                        1 if v >= rect.y_lo => rect.y_hi = v,
                        _ => continue,
                    }
                    rules.rules[r].1 = rect;
                    let s = rule_mcc(&rules, cloud, classes);
                    if s > local_best {
                        local_best = s;
                        local_rect = rect;
                    }
                }
                rules.rules[r].1 = local_rect;
                if local_best > score {
                    score = local_best;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    rules
}

/// Public wrapper for the y-only baseline: returns the rule set and its
/// MCC so callers can compare it against the full 2-D fit.
pub fn fit_y_only(
    cloud: &SumPointCloud,
    classes: &[u8],
) -> Result<(RectangleRuleSet, f64), RegionError> {
    if classes.len() < 2 {
        return Err(RegionError::Config(format!(
            "need at least two classes, got {classes:?}"
        )));
    }
    if cloud.classes().len() < 2 {
        return Err(RegionError::SingleClass);
    }
    let ys = candidates(cloud.points.iter().map(|p| p.1).collect());
    let mut sorted = classes.to_vec();
    sorted.sort_unstable();
    let default_class = sorted[0];
    let mut rect_classes: Vec<u8> = sorted[1..].to_vec();
    rect_classes.reverse();
    let rules = best_y_only(cloud, classes, &rect_classes, default_class, &ys);
    let score = rule_mcc(&rules, cloud, classes);
    Ok((rules, score))
}

/// Evaluates an arbitrary classifier on a regular lattice; rows scan y
/// from low to high, columns x from low to high.
pub fn region_grid(
    classify: impl Fn(f64, f64) -> u8,
    x_range: (f64, f64),
    y_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<Vec<(f64, f64, u8)>, RegionError> {
    let (nx, ny) = resolution;
    if nx < 2 || ny < 2 {
        return Err(RegionError::Config(format!(
            "resolution must be at least 2 per axis, got {nx}x{ny}"
        )));
    }
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let y = y_range.0 + (y_range.1 - y_range.0) * j as f64 / (ny - 1) as f64;
        for i in 0..nx {
            let x = x_range.0 + (x_range.1 - x_range.0) * i as f64 / (nx - 1) as f64;
            out.push((x, y, classify(x, y)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Rect {
        Rect {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        }
    }

    #[test]
    fn classify_priority_and_default() {
        let rules = RectangleRuleSet {
            rules: vec![
                (2, rect(0.0, 2.0, 0.0, 2.0)),
                (1, rect(1.0, 4.0, 1.0, 4.0)),
            ],
            default_class: 0,
        };
        assert_eq!(rules.classify(0.5, 0.5), 2);
        assert_eq!(rules.classify(1.5, 1.5), 2); // overlap → higher rank
        assert_eq!(rules.classify(3.0, 3.0), 1);
        assert_eq!(rules.classify(10.0, 10.0), 0);
        assert_eq!(rules.classify(2.0, 2.0), 2); // closed boundary
    }

    #[test]
    fn json_round_trip_with_unbounded_sides() {
        let rules = RectangleRuleSet {
            rules: vec![(1, rect(f64::NEG_INFINITY, 3.5, -1.0, f64::INFINITY))],
            default_class: 0,
        };
        let json = serde_json::to_string(&rules).unwrap();
        assert!(json.contains("null"));
        let back: RectangleRuleSet = serde_json::from_str(&json).unwrap();
        assert_eq!(rules, back);
    }

    #[test]
    fn separable_blobs_reach_mcc_one() {
        let mut points = Vec::new();
        let mut rng = SplitMix64::new(5);
        for _ in 0..60 {
            points.push((
                rng.next_range_f64(-1.0, 0.0),
                rng.next_range_f64(-1.0, 0.0),
                0u8,
            ));
            points.push((
                rng.next_range_f64(2.0, 3.0),
                rng.next_range_f64(2.0, 3.0),
                1u8,
            ));
        }
        let cloud = SumPointCloud { points };
        let (rules, score) = fit(&cloud, &[0, 1], 1).unwrap();
        assert!((score - 1.0).abs() < 1e-12);
        for &(x, y, t) in &cloud.points {
            assert_eq!(rules.classify(x, y), t);
        }
    }

    #[test]
    fn single_class_cloud_is_rejected() {
        let cloud = SumPointCloud {
            points: vec![(0.0, 0.0, 1), (1.0, 1.0, 1)],
        };
        assert!(matches!(
            fit(&cloud, &[0, 1], 0),
            Err(RegionError::SingleClass)
        ));
    }

    #[test]
    fn fit_beats_or_matches_y_only_rule() {
        // Classes separable only with both axes: class 1 occupies the
        // x>0, y>0 quadrant, class 0 the rest, with y overlapping.
        let mut rng = SplitMix64::new(11);
        let mut points = Vec::new();
        for _ in 0..100 {
            let x = rng.next_range_f64(-1.0, 1.0);
            let y = rng.next_range_f64(-1.0, 1.0);
            let label = u8::from(x > 0.0 && y > 0.0);
            points.push((x, y, label));
        }
        let cloud = SumPointCloud { points };
        let (_, y_score) = fit_y_only(&cloud, &[0, 1]).unwrap();
        let (_, full_score) = fit(&cloud, &[0, 1], 3).unwrap();
        assert!(full_score >= y_score - 1e-12);
        assert!(full_score > 0.99, "quadrant should be fully separable");
    }

    /// Exhaustive oracle independent of `fit_exact`'s loop structure.
    fn brute_force_mcc(cloud: &SumPointCloud, classes: &[u8]) -> f64 {
        let xs = candidates(cloud.points.iter().map(|p| p.0).collect());
        let ys = candidates(cloud.points.iter().map(|p| p.1).collect());
        let mut sorted = classes.to_vec();
        sorted.sort_unstable();
        let default_class = sorted[0];
        let mut rect_classes: Vec<u8> = sorted[1..].to_vec();
        rect_classes.reverse();

        let mut rects = Vec::new();
        for i in 0..xs.len() {
            for j in i..xs.len() {
                for k in 0..ys.len() {
                    for l in k..ys.len() {
                        rects.push(rect(xs[i], xs[j], ys[k], ys[l]));
                    }
                }
            }
        }
        let mut best = f64::NEG_INFINITY;
        let mut assign = vec![0usize; rect_classes.len()];
        'outer: loop {
            let rules = RectangleRuleSet {
                rules: rect_classes
                    .iter()
                    .zip(&assign)
                    .map(|(&c, &i)| (c, rects[i]))
                    .collect(),
                default_class,
            };
            best = best.max(rule_mcc(&rules, cloud, classes));
            for k in 0..assign.len() {
                assign[k] += 1;
                if assign[k] < rects.len() {
                    continue 'outer;
                }
                assign[k] = 0;
            }
            break;
        }
        best
    }

    #[test]
    fn fit_matches_brute_force_on_small_instances() {
        let mut rng = SplitMix64::new(99);
        for trial in 0..10 {
            // Points snapped to a coarse lattice keep the candidate
            // threshold count small.
            let n_classes = 2 + (trial % 2);
            let points: Vec<(f64, f64, u8)> = (0..40)
                .map(|_| {
                    (
                        rng.next_below(5) as f64,
                        rng.next_below(5) as f64,
                        rng.next_below(n_classes) as u8,
                    )
                })
                .collect();
            let cloud = SumPointCloud { points };
            if cloud.classes().len() < 2 {
                continue;
            }
            let classes: Vec<u8> = (0..n_classes as u8).collect();
            let (_, score) = fit(&cloud, &classes, trial).unwrap();
            let oracle = brute_force_mcc(&cloud, &classes);
            assert!(
                (score - oracle).abs() < 1e-9,
                "trial {trial}: fit {score} vs oracle {oracle}"
            );
        }
    }

    #[test]
    fn region_grid_consistent_with_classify() {
        let rules = RectangleRuleSet {
            rules: vec![(1, rect(0.0, 1.0, 0.0, 1.0))],
            default_class: 0,
        };
        let grid = region_grid(
            |x, y| rules.classify(x, y),
            (-1.0, 2.0),
            (-1.0, 2.0),
            (4, 4),
        )
        .unwrap();
        assert_eq!(grid.len(), 16);
        for &(x, y, label) in &grid {
            assert_eq!(label, rules.classify(x, y));
        }
        assert!(region_grid(|_, _| 0, (0.0, 1.0), (0.0, 1.0), (1, 4)).is_err());
    }
}
