//! Pareto dominance, nondominated sorting, crowding distance and the two
//! truncation selections built on them.
//!
//! Everything here works on objective vectors addressed by their index in the
//! input slice, so callers keep ownership of their populations and map indices
//! back themselves. All objectives are minimized.

use std::cmp::Ordering;

use crate::error::{invalid_input, Result};
use crate::types::{objectives_of, Individual};

/// `true` iff `a` is no worse than `b` everywhere and strictly better somewhere.
///
/// Panics on length mismatch; see [`try_dominates`].
#[inline]
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    assert_eq!(a.len(), b.len(), "objective vectors differ in length");
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

pub fn try_dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(invalid_input(format!(
            "objective vectors differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    Ok(dominates(a, b))
}

/// Partition of a population into successive nondominated fronts.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontPartition {
    /// Fronts best-first; indices within a front are ascending.
    pub fronts: Vec<Vec<usize>>,
    /// Crowding distance of every individual, computed within its own front.
    pub density: Vec<f64>,
}

impl FrontPartition {
    /// Front number (0-based) of every individual.
    pub fn ranks(&self, len: usize) -> Vec<usize> {
        let mut ranks = vec![usize::MAX; len];
        for (r, front) in self.fronts.iter().enumerate() {
            for &i in front {
                ranks[i] = r;
            }
        }
        ranks
    }
}

fn check_lengths<T: AsRef<[f64]>>(objs: &[T]) -> Result<()> {
    if let Some(first) = objs.first() {
        let m = first.as_ref().len();
        if let Some(i) = objs.iter().position(|o| o.as_ref().len() != m) {
            return Err(invalid_input(format!("objective vector {i} has a different length")));
        }
    }
    Ok(())
}

/// Indices of the members of `objs` not dominated by any other member.
/// Duplicated objective vectors are all retained.
pub fn nondominated_indices<T: AsRef<[f64]>>(objs: &[T]) -> Vec<usize> {
    match objs.first().map(|o| o.as_ref().len()) {
        None => Vec::new(),
        Some(2) => sort_two_objectives(objs, true).swap_remove(0),
        Some(_) => (0..objs.len())
            .filter(|&i| !objs.iter().any(|o| dominates(o.as_ref(), objs[i].as_ref())))
            .collect(),
    }
}

/// The nondominated members of an evaluated population, in input order.
pub fn nondominated_subset(pop: &[Individual]) -> Result<Vec<Individual>> {
    let objs = objectives_of(pop)?;
    check_lengths(&objs)?;
    Ok(nondominated_indices(&objs).into_iter().map(|i| pop[i].clone()).collect())
}

/// Splits `objs` into nondominated fronts, best first.
pub fn sort_fronts<T: AsRef<[f64]>>(objs: &[T]) -> Vec<Vec<usize>> {
    match objs.first().map(|o| o.as_ref().len()) {
        None => Vec::new(),
        Some(2) => sort_two_objectives(objs, false),
        Some(_) => fast_sort_general(objs),
    }
}

/// Fast nondominated sort with crowding distances per front.
pub fn fast_nondominated_sort(pop: &[Individual]) -> Result<FrontPartition> {
    let objs = objectives_of(pop)?;
    check_lengths(&objs)?;
    Ok(partition(&objs))
}

/// [`sort_fronts`] plus per-front crowding distances.
pub fn partition<T: AsRef<[f64]>>(objs: &[T]) -> FrontPartition {
    let fronts = sort_fronts(objs);
    let mut density = vec![0.0; objs.len()];
    for front in &fronts {
        let members: Vec<&[f64]> = front.iter().map(|&i| objs[i].as_ref()).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&members)) {
            density[i] = d;
        }
    }
    FrontPartition { fronts, density }
}

/// Deb's O(m N^2) bookkeeping sort.
fn fast_sort_general<T: AsRef<[f64]>>(objs: &[T]) -> Vec<Vec<usize>> {
    let n = objs.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (objs[i].as_ref(), objs[j].as_ref());
            if dominates(a, b) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(b, a) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// O(N log N + N K) sort for two objectives (K = number of fronts).
///
/// Points are visited in lexicographic order, so every earlier point is no worse
/// in the first objective; within a front the last-added point has the smallest
/// second objective and decides whether the front dominates the newcomer.
fn sort_two_objectives<T: AsRef<[f64]>>(objs: &[T], first_only: bool) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..objs.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (objs[i].as_ref(), objs[j].as_ref());
        a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])).then(i.cmp(&j))
    });
    let mut fronts: Vec<Vec<usize>> = Vec::new();
    for &p in &order {
        let pv = objs[p].as_ref();
        let slot = fronts.iter().position(|front| {
            let last = objs[*front.last().unwrap()].as_ref();
            !(last[1] < pv[1] || (last[1] == pv[1] && last[0] < pv[0]))
        });
        match slot {
            Some(k) => fronts[k].push(p),
            None if first_only && !fronts.is_empty() => {}
            None => fronts.push(vec![p]),
        }
    }
    if first_only {
        fronts.truncate(1);
        if fronts.is_empty() {
            fronts.push(Vec::new());
        }
    }
    for front in &mut fronts {
        front.sort_unstable();
    }
    fronts
}

/// Crowding distance of each member of a front.
///
/// Boundary points of every objective get `+inf`; interior points sum the
/// normalized gap between their neighbours. Objectives with zero range add 0.
pub fn crowding_distance<T: AsRef<[f64]>>(front: &[T]) -> Vec<f64> {
    let n = front.len();
    if n == 0 {
        return Vec::new();
    }
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = front[0].as_ref().len();
    let mut dist = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for j in 0..m {
        order.sort_by(|&a, &b| front[a].as_ref()[j].total_cmp(&front[b].as_ref()[j]).then(a.cmp(&b)));
        let lo = front[order[0]].as_ref()[j];
        let hi = front[order[n - 1]].as_ref()[j];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let i = order[w];
            if dist[i].is_finite() {
                let gap = front[order[w + 1]].as_ref()[j] - front[order[w - 1]].as_ref()[j];
                dist[i] += gap / range;
            }
        }
    }
    dist
}

fn by_crowding_desc(density: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| density[b].total_cmp(&density[a]).then(a.cmp(&b))
}

/// NSGA-II truncation: whole fronts while they fit, then the splitting front by
/// descending crowding distance computed once. Ties keep the lower index.
pub fn select_nsga2_indices<T: AsRef<[f64]>>(objs: &[T], n: usize) -> Vec<usize> {
    if objs.len() <= n {
        return (0..objs.len()).collect();
    }
    let mut chosen = Vec::with_capacity(n);
    for front in sort_fronts(objs) {
        if chosen.len() + front.len() <= n {
            chosen.extend_from_slice(&front);
            if chosen.len() == n {
                break;
            }
            continue;
        }
        let members: Vec<&[f64]> = front.iter().map(|&i| objs[i].as_ref()).collect();
        let density = crowding_distance(&members);
        let mut local: Vec<usize> = (0..front.len()).collect();
        local.sort_by(by_crowding_desc(&density));
        chosen.extend(local[..n - chosen.len()].iter().map(|&l| front[l]));
        break;
    }
    chosen
}

/// Like [`select_nsga2_indices`], but the splitting front loses its worst-density
/// member one at a time, with crowding recomputed after every removal.
///
/// Among equal worst densities the member with the largest population index goes.
pub fn select_rmmeda_indices<T: AsRef<[f64]>>(objs: &[T], n: usize) -> Result<Vec<usize>> {
    if objs.len() < n {
        return Err(invalid_input(format!(
            "cannot select {n} individuals from a population of {}",
            objs.len()
        )));
    }
    if objs.len() == n {
        return Ok((0..n).collect());
    }
    let mut chosen = Vec::with_capacity(n);
    for front in sort_fronts(objs) {
        if chosen.len() + front.len() <= n {
            chosen.extend_from_slice(&front);
            if chosen.len() == n {
                break;
            }
            continue;
        }
        let mut survivors = front;
        let keep = n - chosen.len();
        while survivors.len() > keep {
            let members: Vec<&[f64]> = survivors.iter().map(|&i| objs[i].as_ref()).collect();
            let density = crowding_distance(&members);
            let worst = (0..survivors.len())
                .min_by(|&a, &b| density[a].total_cmp(&density[b]).then(survivors[b].cmp(&survivors[a])))
                .expect("splitting front is nonempty");
            survivors.remove(worst);
        }
        chosen.extend(survivors);
        break;
    }
    Ok(chosen)
}

/// S(P, N) with the NSGA-II rule.
pub fn select_nsga2(pop: &[Individual], n: usize) -> Result<Vec<Individual>> {
    let objs = objectives_of(pop)?;
    check_lengths(&objs)?;
    Ok(select_nsga2_indices(&objs, n).into_iter().map(|i| pop[i].clone()).collect())
}

/// S(P, N) with one-by-one removal and density recomputation.
pub fn select_rmmeda(pop: &[Individual], n: usize) -> Result<Vec<Individual>> {
    let objs = objectives_of(pop)?;
    check_lengths(&objs)?;
    Ok(select_rmmeda_indices(&objs, n)?.into_iter().map(|i| pop[i].clone()).collect())
}
