//! Quality indicators: IGD, exact hypervolume for two and three objectives,
//! hypervolume difference and exclusive contributions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Error, Result};

/// Reference point bounding the hypervolume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvReference(pub Vec<f64>);

impl HvReference {
    /// `(1.2, ..., 1.2)`, the metric reference point for normalized fronts.
    pub fn standard(m: usize) -> Self {
        Self(vec![1.2; m])
    }
}

/// Inverted generational distance: mean distance from each reference point to
/// its nearest obtained point.
pub fn igd<A: AsRef<[f64]>, B: AsRef<[f64]>>(reference: &[A], obtained: &[B]) -> Result<f64> {
    if obtained.is_empty() {
        return Err(Error::Undefined("IGD of an empty approximation set".into()));
    }
    if reference.is_empty() {
        return Err(invalid_input("IGD needs a nonempty reference set"));
    }
    let total: f64 = reference
        .iter()
        .map(|r| {
            obtained
                .iter()
                .map(|p| r.as_ref().iter().zip(p.as_ref()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .sum();
    Ok(total / reference.len() as f64)
}

fn check_dims<T: AsRef<[f64]>>(points: &[T], reference: &[f64]) -> Result<()> {
    let m = reference.len();
    if !(2..=3).contains(&m) {
        return Err(Error::Unsupported(format!("hypervolume for {m} objectives")));
    }
    if points.iter().any(|p| p.as_ref().len() != m) {
        return Err(invalid_input("point and reference dimensions differ"));
    }
    Ok(())
}

/// Points strictly inside the reference box; anything else encloses zero volume.
fn inside<'a, T: AsRef<[f64]>>(points: &'a [T], reference: &[f64]) -> Vec<&'a [f64]> {
    points
        .iter()
        .map(|p| p.as_ref())
        .filter(|p| p.iter().zip(reference).all(|(a, r)| a < r))
        .collect()
}

/// Exact Lebesgue measure of the union of boxes `[p, reference]`.
pub fn hypervolume<T: AsRef<[f64]>>(points: &[T], reference: &[f64]) -> Result<f64> {
    check_dims(points, reference)?;
    let pts = inside(points, reference);
    Ok(match reference.len() {
        2 => hv2(pts, reference),
        _ => hv3(pts, reference),
    })
}

fn hv2(mut pts: Vec<&[f64]>, r: &[f64]) -> f64 {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut level = r[1];
    for p in pts {
        if p[1] < level {
            area += (r[0] - p[0]) * (level - p[1]);
            level = p[1];
        }
    }
    area
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Sweep along the third objective keeping the 2D staircase of the points seen
/// so far and its dominated area; O(n log n).
fn hv3(mut pts: Vec<&[f64]>, r: &[f64]) -> f64 {
    pts.sort_by(|a, b| a[2].total_cmp(&b[2]));
    // x -> y of the current nondominated staircase (x ascending, y descending).
    let mut stairs: BTreeMap<Key, f64> = BTreeMap::new();
    let mut area = 0.0;
    let mut volume = 0.0;
    for (idx, p) in pts.iter().enumerate() {
        let (px, py) = (p[0], p[1]);
        let covered = stairs.range(..=Key(px)).next_back().is_some_and(|(_, &y)| y <= py);
        if !covered {
            let mut level = stairs.range(..Key(px)).next_back().map_or(r[1], |(_, &y)| y);
            let mut x = px;
            let mut removed = Vec::new();
            let mut stop = false;
            for (&Key(sx), &sy) in stairs.range(Key(px)..) {
                area += (sx - x) * (level - py);
                if sy >= py {
                    removed.push(Key(sx));
                    level = sy;
                    x = sx;
                } else {
                    stop = true;
                    break;
                }
            }
            if !stop {
                area += (r[0] - x) * (level - py);
            }
            for k in removed {
                stairs.remove(&k);
            }
            stairs.insert(Key(px), py);
        }
        let next_z = pts.get(idx + 1).map_or(r[2], |q| q[2]);
        volume += area * (next_z - p[2]);
    }
    volume
}

/// `hypervolume(reference_front) - hypervolume(obtained)`; lower is better.
pub fn ihv_minus<A: AsRef<[f64]>, B: AsRef<[f64]>>(reference_front: &[A], obtained: &[B], reference: &[f64]) -> Result<f64> {
    Ok(hypervolume(reference_front, reference)? - hypervolume(obtained, reference)?)
}

/// Exclusive contribution `HV(front) - HV(front \ {x})` of every member.
///
/// Mutually nondominated two-objective fronts use the closed form from the
/// sorted staircase; everything else uses leave-one-out recomputation.
pub fn hv_contributions<T: AsRef<[f64]>>(front: &[T], reference: &[f64]) -> Result<Vec<f64>> {
    if front.is_empty() {
        return Err(invalid_input("hypervolume contributions of an empty front"));
    }
    check_dims(front, reference)?;
    if reference.len() == 2 && is_mutually_nondominated(front) {
        return Ok(contributions_2d(front, reference));
    }
    leave_one_out(front, reference)
}

fn is_mutually_nondominated<T: AsRef<[f64]>>(front: &[T]) -> bool {
    crate::dominance::nondominated_indices(front).len() == front.len()
}

/// Leave-one-out contributions by full recomputation.
pub fn leave_one_out<T: AsRef<[f64]>>(front: &[T], reference: &[f64]) -> Result<Vec<f64>> {
    let total = hypervolume(front, reference)?;
    let views: Vec<&[f64]> = front.iter().map(|p| p.as_ref()).collect();
    (0..views.len())
        .map(|i| {
            let rest: Vec<&[f64]> = views.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, p)| *p).collect();
            Ok(total - hypervolume(&rest, reference)?)
        })
        .collect()
}

fn contributions_2d<T: AsRef<[f64]>>(front: &[T], r: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..front.len()).collect();
    order.sort_by(|&a, &b| {
        let (p, q) = (front[a].as_ref(), front[b].as_ref());
        p[0].total_cmp(&q[0]).then(q[1].total_cmp(&p[1])).then(a.cmp(&b))
    });
    let mut out = vec![0.0; front.len()];
    for (w, &i) in order.iter().enumerate() {
        let p = front[i].as_ref();
        if p[0] >= r[0] || p[1] >= r[1] {
            continue;
        }
        let right = order.get(w + 1).map_or(r[0], |&j| front[j].as_ref()[0]).min(r[0]);
        let above = if w == 0 { r[1] } else { front[order[w - 1]].as_ref()[1].min(r[1]) };
        out[i] = (right - p[0]).max(0.0) * (above - p[1]).max(0.0);
    }
    out
}

/// Index of the smallest contribution; ties go to the lowest index.
pub fn argmin_contribution(contributions: &[f64]) -> Option<usize> {
    (0..contributions.len()).min_by(|&a, &b| contributions[a].total_cmp(&contributions[b]).then(a.cmp(&b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::RandomSource;

    #[test]
    fn igd_examples() {
        let p = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(igd(&p, &p).unwrap(), 0.0);
        let v = igd(&p, &[vec![0.0, 1.0]]).unwrap();
        assert!((v - 2f64.sqrt() / 2.0).abs() < 1e-12);
        let empty: Vec<Vec<f64>> = Vec::new();
        assert!(matches!(igd(&p, &empty), Err(Error::Undefined(_))));
    }

    #[test]
    fn igd_matches_double_loop() {
        let mut rng = RandomSource::new(3);
        let a: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.uniform(), rng.uniform()]).collect();
        let b: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.uniform(), rng.uniform()]).collect();
        let mut total = 0.0;
        for x in &a {
            let mut best = f64::INFINITY;
            for y in &b {
                let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
                if d < best {
                    best = d;
                }
            }
            total += best;
        }
        assert_eq!(igd(&a, &b).unwrap(), total / 100.0);
    }

    #[test]
    fn hypervolume_examples() {
        let r2 = [1.2, 1.2];
        assert!((hypervolume(&[vec![0.5, 0.5]], &r2).unwrap() - 0.49).abs() < 1e-12);
        assert!((hypervolume(&[vec![0.2, 0.8], vec![0.8, 0.2]], &r2).unwrap() - 0.64).abs() < 1e-12);
        assert!((hypervolume(&[vec![0.2, 0.2, 0.2]], &[1.2, 1.2, 1.2]).unwrap() - 1.0).abs() < 1e-12);
        assert!(hypervolume(&[vec![0.0; 4]], &[1.0; 4]).is_err());
        let empty: Vec<Vec<f64>> = Vec::new();
        assert_eq!(hypervolume(&empty, &r2).unwrap(), 0.0);
        assert_eq!(hypervolume(&[vec![1.5, 0.1]], &r2).unwrap(), 0.0);
    }

    /// Inclusion-exclusion over all subsets; exact for small sets.
    fn inclusion_exclusion(pts: &[Vec<f64>], r: &[f64]) -> f64 {
        let n = pts.len();
        let mut total = 0.0;
        for mask in 1u32..(1 << n) {
            let mut corner = vec![f64::NEG_INFINITY; r.len()];
            for (i, p) in pts.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    for j in 0..r.len() {
                        corner[j] = corner[j].max(p[j]);
                    }
                }
            }
            let vol: f64 = corner.iter().zip(r).map(|(c, rr)| (rr - c).max(0.0)).product();
            if mask.count_ones() % 2 == 1 {
                total += vol;
            } else {
                total -= vol;
            }
        }
        total
    }

    #[test]
    fn hypervolume_matches_inclusion_exclusion() {
        let mut rng = RandomSource::new(12);
        for m in [2, 3] {
            let r = vec![1.0; m];
            for _ in 0..200 {
                let n = 1 + rng.index(10);
                let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| (rng.uniform() * 8.0).floor() / 8.0).collect()).collect();
                let exact = inclusion_exclusion(&pts, &r);
                let got = hypervolume(&pts, &r).unwrap();
                assert!((exact - got).abs() < 1e-12, "{pts:?}: {exact} vs {got}");
            }
        }
    }

    #[test]
    fn contribution_examples() {
        let r = [1.2, 1.2];
        let c = hv_contributions(&[vec![0.5, 0.5]], &r).unwrap();
        assert!((c[0] - 0.49).abs() < 1e-12);
        let c = hv_contributions(&[vec![0.2, 0.8], vec![0.8, 0.2]], &r).unwrap();
        assert!((c[0] - 0.24).abs() < 1e-12 && (c[1] - 0.24).abs() < 1e-12);
        let c = hv_contributions(&[vec![0.2, 0.8], vec![0.5, 0.5], vec![0.5, 0.5]], &r).unwrap();
        assert_eq!(c[1], 0.0);
        assert_eq!(c[2], 0.0);
        let empty: Vec<Vec<f64>> = Vec::new();
        assert!(hv_contributions(&empty, &r).is_err());
        let c3 = hv_contributions(&[vec![0.1, 0.5, 0.5], vec![0.5, 0.5, 0.5], vec![0.5, 0.5, 0.5]], &[1.0; 3]).unwrap();
        assert_eq!(c3[1], 0.0);
    }

    #[test]
    fn closed_form_matches_leave_one_out() {
        let mut rng = RandomSource::new(21);
        for _ in 0..100 {
            let n = 1 + rng.index(30);
            let mut pts: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let t = rng.uniform();
                    vec![t, 1.0 - t.sqrt() + 0.0]
                })
                .collect();
            if n > 2 {
                pts[1] = pts[0].clone();
            }
            let r = [1.1, 1.1];
            let a = hv_contributions(&pts, &r).unwrap();
            let b = leave_one_out(&pts, &r).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn hypervolume_is_monotone() {
        let mut rng = RandomSource::new(31);
        for m in [2, 3] {
            let r = vec![1.2; m];
            let mut pts: Vec<Vec<f64>> = Vec::new();
            let mut last = 0.0;
            for _ in 0..60 {
                pts.push((0..m).map(|_| rng.uniform()).collect());
                let hv = hypervolume(&pts, &r).unwrap();
                assert!(hv >= last - 1e-12);
                last = hv;
            }
        }
    }

    #[test]
    fn contributions_sum_below_total() {
        let mut rng = RandomSource::new(41);
        let front: Vec<Vec<f64>> = (0..20)
            .map(|_| {
                let (a, b) = (rng.uniform() * 1.5, rng.uniform() * 1.5);
                vec![a.cos() * b.cos(), a.cos() * b.sin(), a.sin()]
            })
            .collect();
        let r = [1.2; 3];
        let total = hypervolume(&front, &r).unwrap();
        let sum: f64 = hv_contributions(&front, &r).unwrap().iter().sum();
        assert!(sum <= total + 1e-12);
    }

    #[test]
    fn ihv_minus_examples() {
        let r = [1.2, 1.2];
        let pstar: Vec<Vec<f64>> = (0..50).map(|i| {
            let t = i as f64 / 49.0;
            vec![t, 1.0 - t.sqrt()]
        }).collect();
        assert_eq!(ihv_minus(&pstar, &pstar, &r).unwrap(), 0.0);
        let sub: Vec<Vec<f64>> = pstar.iter().step_by(3).cloned().collect();
        assert!(ihv_minus(&pstar, &sub, &r).unwrap() >= 0.0);
    }

    #[test]
    fn argmin_ties_go_low() {
        assert_eq!(argmin_contribution(&[0.3, 0.1, 0.1]), Some(1));
        assert_eq!(argmin_contribution(&[]), None);
    }
}
