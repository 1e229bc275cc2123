//! Classification-based preselection.
//!
//! Two capped training archives hold evaluated solutions labelled +1
//! (nondominated) and -1 (dominated). A K-nearest-neighbour vote over decision
//! vectors labels unevaluated candidates, and preselection picks one candidate
//! among those voted promising, so rejected candidates never cost an evaluation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dominance::{nondominated_indices, select_nsga2_indices};
use crate::error::{invalid_input, Error, Result};
use crate::types::{objectives_of, Bounds, Individual, RandomSource};

/// Class of a training point or the predicted class of a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> i32 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }
}

/// The positive and negative training sets, each holding at most `cap` members.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingArchives {
    p_plus: Vec<Individual>,
    p_minus: Vec<Individual>,
    cap: usize,
}

/// Archive capacity for a multiplier of the population size, e.g. `5 * N`.
pub fn archive_cap(multiplier: f64, population_size: usize) -> usize {
    (multiplier * population_size as f64).round().max(1.0) as usize
}

impl TrainingArchives {
    /// Empty archives with capacity `cap` each.
    pub fn new(cap: usize) -> Self {
        Self { p_plus: Vec::new(), p_minus: Vec::new(), cap }
    }

    pub fn with_multiplier(multiplier: f64, population_size: usize) -> Self {
        Self::new(archive_cap(multiplier, population_size))
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn positives(&self) -> &[Individual] {
        &self.p_plus
    }

    pub fn negatives(&self) -> &[Individual] {
        &self.p_minus
    }

    pub fn len(&self) -> usize {
        self.p_plus.len() + self.p_minus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Folds the newly evaluated solutions `q` into both archives:
    ///
    /// ```text
    /// P+ <- S(NS(P+ ∪ Q+), cap)
    /// P- <- S(P- ∪ Q- ∪ ((P+ ∪ Q+) \ NS(P+ ∪ Q+)), cap)
    /// ```
    ///
    /// where `Q+` is the nondominated part of `q` and `S` is NSGA-II truncation.
    pub fn update(&mut self, q: &[Individual]) -> Result<()> {
        let q_objs = objectives_of(q)?;
        let q_plus_idx = nondominated_indices(&q_objs);
        let mut is_plus = vec![false; q.len()];
        for &i in &q_plus_idx {
            is_plus[i] = true;
        }

        // P+ ∪ Q+
        let mut union: Vec<Individual> = std::mem::take(&mut self.p_plus);
        union.extend(q_plus_idx.iter().map(|&i| q[i].clone()));
        let union_objs = objectives_of(&union)?;
        let nd = nondominated_indices(&union_objs);
        let mut in_nd = vec![false; union.len()];
        for &i in &nd {
            in_nd[i] = true;
        }

        let mut negatives = std::mem::take(&mut self.p_minus);
        negatives.extend(q.iter().zip(&is_plus).filter(|(_, &p)| !p).map(|(ind, _)| ind.clone()));
        let mut positives = Vec::with_capacity(nd.len());
        for (ind, keep) in union.into_iter().zip(in_nd) {
            if keep {
                positives.push(ind);
            } else {
                negatives.push(ind);
            }
        }

        self.p_plus = truncate(positives, self.cap);
        self.p_minus = truncate(negatives, self.cap);
        Ok(())
    }

    /// Writes both archives as CSV rows `generation,label,x_1..x_n,f_1..f_m`.
    pub fn write_csv<W: Write>(&self, out: &mut csv::Writer<W>, generation: usize, header: bool) -> Result<()> {
        let sample = self.p_plus.first().or(self.p_minus.first());
        if header {
            if let Some(s) = sample {
                let mut cols = vec!["generation".to_string(), "label".to_string()];
                cols.extend((1..=s.x.len()).map(|i| format!("x_{i}")));
                cols.extend((1..=s.objectives().len()).map(|j| format!("f_{j}")));
                out.write_record(&cols)?;
            }
        }
        for (label, set) in [(1, &self.p_plus), (-1, &self.p_minus)] {
            for ind in set.iter() {
                let mut row = vec![generation.to_string(), label.to_string()];
                row.extend(ind.x.iter().map(|v| v.to_string()));
                row.extend(ind.objectives().iter().map(|v| v.to_string()));
                out.write_record(&row)?;
            }
        }
        Ok(())
    }
}

fn truncate(pop: Vec<Individual>, cap: usize) -> Vec<Individual> {
    if pop.len() <= cap {
        return pop;
    }
    let objs: Vec<&[f64]> = pop.iter().map(|i| i.objectives()).collect();
    let mut keep = vec![false; pop.len()];
    for i in select_nsga2_indices(&objs, cap) {
        keep[i] = true;
    }
    pop.into_iter().zip(keep).filter_map(|(ind, k)| k.then_some(ind)).collect()
}

/// Settings of the nearest-neighbour vote.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    /// Number of neighbours; must be odd.
    pub k: usize,
    /// Rescale decision vectors to `[0, 1]^n` before measuring distances.
    #[serde(default)]
    pub unit_scale: bool,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self { k: 3, unit_scale: false }
    }
}

impl KnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!("KNN k must be odd and positive, got {}", self.k)));
        }
        Ok(())
    }
}

/// A snapshot of the archives prepared for repeated queries.
///
/// Training points are stored P+ first, then P-, and distance ties go to the
/// earlier point in that order.
#[derive(Debug, Clone)]
pub struct KnnClassifier {
    dim: usize,
    points: Vec<f64>,
    labels: Vec<Label>,
    k: usize,
    scale: Option<(Vec<f64>, Vec<f64>)>,
}

impl KnnClassifier {
    /// Fails with [`Error::NoModel`] when both archives are empty.
    pub fn fit(archives: &TrainingArchives, cfg: &KnnConfig, bounds: Option<&Bounds>) -> Result<Self> {
        cfg.validate()?;
        let first = archives.p_plus.first().or(archives.p_minus.first()).ok_or(Error::NoModel)?;
        let dim = first.x.len();
        let scale = match (cfg.unit_scale, bounds) {
            (true, Some(b)) => Some((b.lower().to_vec(), (0..b.dim()).map(|i| 1.0 / b.width(i)).collect())),
            (true, None) => return Err(invalid_input("unit scaling requires bounds")),
            (false, _) => None,
        };
        let mut points = Vec::with_capacity(archives.len() * dim);
        let mut labels = Vec::with_capacity(archives.len());
        for (label, set) in [(Label::Positive, &archives.p_plus), (Label::Negative, &archives.p_minus)] {
            for ind in set.iter() {
                if ind.x.len() != dim {
                    return Err(invalid_input("archive members differ in dimension"));
                }
                match &scale {
                    Some((lo, inv)) => points.extend(ind.x.iter().zip(lo.iter().zip(inv)).map(|(v, (l, s))| (v - l) * s)),
                    None => points.extend_from_slice(&ind.x),
                }
                labels.push(label);
            }
        }
        Ok(Self { dim, points, labels, k: cfg.k, scale })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Sum of the labels of the K nearest training points (all of them when fewer exist).
    pub fn vote(&self, y: &[f64]) -> Result<i32> {
        if y.len() != self.dim {
            return Err(invalid_input(format!("query has {} components, archives have {}", y.len(), self.dim)));
        }
        let query: Vec<f64> = match &self.scale {
            Some((lo, inv)) => y.iter().zip(lo.iter().zip(inv)).map(|(v, (l, s))| (v - l) * s).collect(),
            None => y.to_vec(),
        };
        let k = self.k.min(self.labels.len());
        // Sorted (distance, index) of the best k so far; ties keep the lower index.
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        for (idx, p) in self.points.chunks_exact(self.dim).enumerate() {
            let d: f64 = p.iter().zip(&query).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.len() == k && d >= best[k - 1].0 {
                continue;
            }
            let pos = best.partition_point(|&(bd, _)| bd <= d);
            best.insert(pos, (d, idx));
            best.truncate(k);
        }
        Ok(best.iter().map(|&(_, i)| self.labels[i].sign()).sum())
    }

    pub fn predict(&self, y: &[f64]) -> Result<Label> {
        Ok(if self.vote(y)? >= 0 { Label::Positive } else { Label::Negative })
    }
}

/// Labels `y` by a K-nearest-neighbour vote over `P+ ∪ P-` (raw Euclidean distance).
pub fn knn_predict(y: &[f64], archives: &TrainingArchives, cfg: &KnnConfig) -> Result<Label> {
    KnnClassifier::fit(archives, cfg, None)?.predict(y)
}

/// Outcome of one preselection.
#[derive(Debug, Clone, PartialEq)]
pub struct Preselection {
    pub chosen: usize,
    pub labels: Vec<Label>,
}

/// Picks one of `candidates` uniformly among those labelled positive, or among
/// all of them when none is. Without a classifier every candidate counts as positive.
pub fn preselect<T: AsRef<[f64]>>(
    candidates: &[T],
    classifier: Option<&KnnClassifier>,
    rng: &mut RandomSource,
) -> Result<Preselection> {
    if candidates.is_empty() {
        return Err(invalid_input("preselection needs at least one candidate"));
    }
    let labels = match classifier {
        Some(model) => candidates.iter().map(|c| model.predict(c.as_ref())).collect::<Result<Vec<_>>>()?,
        None => vec![Label::Positive; candidates.len()],
    };
    let positives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == Label::Positive).collect();
    let chosen = if positives.is_empty() {
        rng.index(candidates.len())
    } else {
        positives[rng.index(positives.len())]
    };
    Ok(Preselection { chosen, labels })
}

/// Whether the preselected candidate is nondominated within its evaluated candidate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionQuality {
    Nondominated,
    Dominated,
}

pub fn selection_quality<T: AsRef<[f64]>>(candidate_objectives: &[T], chosen: usize) -> Result<SelectionQuality> {
    if chosen >= candidate_objectives.len() {
        return Err(invalid_input("chosen index out of range"));
    }
    let target = candidate_objectives[chosen].as_ref();
    let dominated = candidate_objectives
        .iter()
        .any(|c| crate::dominance::dominates(c.as_ref(), target));
    Ok(if dominated { SelectionQuality::Dominated } else { SelectionQuality::Nondominated })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ind(x: &[f64], f: &[f64]) -> Individual {
        Individual::evaluated(x.to_vec(), f.to_vec())
    }

    fn archives(plus: &[&[f64]], minus: &[&[f64]]) -> TrainingArchives {
        TrainingArchives {
            p_plus: plus.iter().map(|x| ind(x, &[0.0, 0.0])).collect(),
            p_minus: minus.iter().map(|x| ind(x, &[1.0, 1.0])).collect(),
            cap: 100,
        }
    }

    #[test]
    fn init_and_cap() {
        let a = TrainingArchives::with_multiplier(5.0, 100);
        assert!(a.positives().is_empty() && a.negatives().is_empty());
        assert_eq!(a.cap(), 500);
        assert_eq!(TrainingArchives::with_multiplier(2.0, 100).cap(), 200);
        assert_eq!(TrainingArchives::with_multiplier(0.5, 100).cap(), 50);
    }

    #[test]
    fn update_from_empty() {
        let mut a = TrainingArchives::new(10);
        a.update(&[ind(&[0.1], &[1.0, 1.0]), ind(&[0.2], &[2.0, 2.0])]).unwrap();
        assert_eq!(a.positives(), &[ind(&[0.1], &[1.0, 1.0])]);
        assert_eq!(a.negatives(), &[ind(&[0.2], &[2.0, 2.0])]);
    }

    #[test]
    fn update_with_dominated_batch_keeps_positives() {
        let mut a = TrainingArchives::new(10);
        a.update(&[ind(&[0.0], &[0.0, 1.0]), ind(&[1.0], &[1.0, 0.0])]).unwrap();
        let before = a.positives().to_vec();
        let q = [ind(&[0.5], &[2.0, 2.0]), ind(&[0.6], &[3.0, 3.0])];
        a.update(&q).unwrap();
        assert_eq!(a.positives(), &before[..]);
        // Q+ = {(2,2)} is demoted through the set difference, Q- = {(3,3)} goes straight in.
        assert_eq!(a.negatives().len(), 2);
    }

    #[test]
    fn dominated_positive_is_demoted() {
        let mut a = TrainingArchives::new(10);
        a.update(&[ind(&[0.1], &[1.0, 3.0]), ind(&[0.2], &[3.0, 1.0])]).unwrap();
        assert_eq!(a.positives().len(), 2);
        a.update(&[ind(&[0.3], &[0.5, 2.5])]).unwrap();
        let plus: Vec<&[f64]> = a.positives().iter().map(|i| i.objectives()).collect();
        assert_eq!(plus, vec![&[3.0, 1.0][..], &[0.5, 2.5][..]]);
        assert_eq!(a.negatives(), &[ind(&[0.1], &[1.0, 3.0])]);
    }

    #[test]
    fn update_rejects_unevaluated() {
        let mut a = TrainingArchives::new(10);
        assert!(a.update(&[Individual::new(vec![0.1])]).is_err());
    }

    #[test]
    fn caps_are_respected() {
        let mut a = TrainingArchives::new(5);
        let mut rng = RandomSource::new(3);
        for _ in 0..20 {
            let q: Vec<Individual> = (0..7)
                .map(|_| {
                    let t = rng.uniform();
                    let s = rng.uniform();
                    ind(&[t, s], &[t + s, 1.0 - t + s])
                })
                .collect();
            a.update(&q).unwrap();
            assert!(a.positives().len() <= 5 && a.negatives().len() <= 5);
            let objs: Vec<&[f64]> = a.positives().iter().map(|i| i.objectives()).collect();
            assert_eq!(nondominated_indices(&objs).len(), objs.len());
        }
    }

    #[test]
    fn knn_examples() {
        let cfg1 = KnnConfig { k: 1, unit_scale: false };
        let cfg3 = KnnConfig::default();
        assert_eq!(knn_predict(&[0.3, 0.3], &archives(&[&[0.0, 0.0]], &[]), &cfg1).unwrap(), Label::Positive);
        let a = archives(&[&[0.0, 0.0]], &[&[1.0, 0.0], &[1.0, 1.0]]);
        assert_eq!(knn_predict(&[0.2, 0.1], &a, &cfg3).unwrap(), Label::Negative);
        let a = archives(&[&[0.0, 0.0], &[0.0, 1.0]], &[&[1.0, 1.0]]);
        assert_eq!(knn_predict(&[0.0, 0.5], &a, &cfg3).unwrap(), Label::Positive);
    }

    #[test]
    fn knn_without_data_signals_no_model() {
        let a = TrainingArchives::new(5);
        assert!(matches!(knn_predict(&[0.0], &a, &KnnConfig::default()), Err(Error::NoModel)));
    }

    #[test]
    fn even_k_is_rejected() {
        let a = archives(&[&[0.0]], &[]);
        assert!(knn_predict(&[0.0], &a, &KnnConfig { k: 2, unit_scale: false }).is_err());
    }

    #[test]
    fn distance_ties_prefer_insertion_order() {
        // Query equidistant from one positive and one negative point, k = 1.
        let a = archives(&[&[0.0]], &[&[2.0]]);
        let cfg = KnnConfig { k: 1, unit_scale: false };
        assert_eq!(knn_predict(&[1.0], &a, &cfg).unwrap(), Label::Positive);
    }

    #[test]
    fn unit_scaling_changes_geometry() {
        let a = archives(&[&[1.0, 0.0]], &[&[0.0, 10.0]]);
        let bounds = Bounds::new(vec![0.0, 0.0], vec![1.0, 100.0]).unwrap();
        let cfg = KnnConfig { k: 1, unit_scale: true };
        let raw = knn_predict(&[0.9, 6.0], &a, &KnnConfig { k: 1, unit_scale: false }).unwrap();
        let scaled = KnnClassifier::fit(&a, &cfg, Some(&bounds)).unwrap().predict(&[0.9, 6.0]).unwrap();
        assert_eq!(raw, Label::Negative);
        assert_eq!(scaled, Label::Positive);
    }

    #[test]
    fn preselect_singleton_positive() {
        let a = archives(&[&[0.0]], &[&[1.0]]);
        let model = KnnClassifier::fit(&a, &KnnConfig { k: 1, unit_scale: false }, None).unwrap();
        let mut rng = RandomSource::new(1);
        for _ in 0..200 {
            let p = preselect(&[vec![0.1], vec![0.9], vec![0.8]], Some(&model), &mut rng).unwrap();
            assert_eq!(p.labels, vec![Label::Positive, Label::Negative, Label::Negative]);
            assert_eq!(p.chosen, 0);
        }
    }

    #[test]
    fn preselect_all_negative_is_uniform() {
        let a = archives(&[&[0.0]], &[&[1.0]]);
        let model = KnnClassifier::fit(&a, &KnnConfig { k: 1, unit_scale: false }, None).unwrap();
        let mut rng = RandomSource::new(2);
        let mut counts = [0usize; 3];
        let trials = 30_000;
        for _ in 0..trials {
            counts[preselect(&[vec![0.9], vec![0.8], vec![0.7]], Some(&model), &mut rng).unwrap().chosen] += 1;
        }
        for c in counts {
            assert!((c as f64 / trials as f64 - 1.0 / 3.0).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn preselect_two_positives_split_evenly() {
        let a = archives(&[&[0.0]], &[&[1.0]]);
        let model = KnnClassifier::fit(&a, &KnnConfig { k: 1, unit_scale: false }, None).unwrap();
        let mut rng = RandomSource::new(99);
        let mut first = 0usize;
        let trials = 10_000;
        for _ in 0..trials {
            let p = preselect(&[vec![0.1], vec![0.2], vec![0.9]], Some(&model), &mut rng).unwrap();
            assert_ne!(p.chosen, 2);
            first += (p.chosen == 0) as usize;
        }
        let freq = first as f64 / trials as f64;
        assert!((freq - 0.5).abs() <= 0.05, "{freq}");
    }

    #[test]
    fn preselect_rejects_empty_and_tolerates_no_model() {
        let mut rng = RandomSource::new(0);
        let empty: [Vec<f64>; 0] = [];
        assert!(preselect(&empty, None, &mut rng).is_err());
        let p = preselect(&[vec![0.0], vec![1.0]], None, &mut rng).unwrap();
        assert_eq!(p.labels, vec![Label::Positive; 2]);
    }

    #[test]
    fn selection_quality_examples() {
        let c = [vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        assert_eq!(selection_quality(&c, 0).unwrap(), SelectionQuality::Nondominated);
        assert_eq!(selection_quality(&c, 2).unwrap(), SelectionQuality::Dominated);
        let c = [vec![0.0, 2.0], vec![1.0, 1.0], vec![2.0, 0.0]];
        assert_eq!(selection_quality(&c, 1).unwrap(), SelectionQuality::Nondominated);
    }

    #[test]
    fn csv_dump_layout() {
        let mut a = TrainingArchives::new(10);
        a.update(&[ind(&[0.1, 0.2], &[1.0, 1.0]), ind(&[0.3, 0.4], &[2.0, 2.0])]).unwrap();
        let mut w = csv::Writer::from_writer(Vec::new());
        a.write_csv(&mut w, 3, true).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "generation,label,x_1,x_2,f_1,f_2");
        assert_eq!(lines[1], "3,1,0.1,0.2,1,1");
        assert_eq!(lines[2], "3,-1,0.3,0.4,2,2");
    }
}
