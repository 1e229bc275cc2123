//! Benchmark problems with known Pareto fronts.
//!
//! The built-in suite is ZDT1, ZDT2, ZDT6 (two objectives) and DTLZ2 (three
//! objectives), each optionally wrapped with a linear or nonlinear variable
//! linkage that bends the Pareto set while leaving the front unchanged.
//! Further problems can be plugged in through [`ProblemRegistry`].

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Error, Result};
use crate::types::{Bounds, EvaluationBudget, ObjectiveVector};

/// A box-constrained multiobjective minimization problem.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;
    fn n_vars(&self) -> usize;
    fn n_objectives(&self) -> usize;
    fn bounds(&self) -> &Bounds;
    /// Objective vector of a feasible `x`. Callers validate feasibility.
    fn objectives(&self, x: &[f64]) -> ObjectiveVector;
    /// `count` evenly spread points of the Pareto front.
    fn pareto_front(&self, count: usize) -> Vec<ObjectiveVector>;
}

/// Evaluates `x` after checking its dimension and feasibility.
pub fn evaluate(problem: &dyn Problem, x: &[f64]) -> Result<ObjectiveVector> {
    if x.len() != problem.n_vars() {
        return Err(invalid_input(format!(
            "{} expects {} variables, got {}",
            problem.name(),
            problem.n_vars(),
            x.len()
        )));
    }
    if !problem.bounds().contains(x) {
        return Err(invalid_input(format!("{}: decision vector outside the feasible box", problem.name())));
    }
    let f = problem.objectives(x);
    if f.len() != problem.n_objectives() || f.iter().any(|v| !v.is_finite()) {
        return Err(invalid_input(format!("{}: objective evaluation produced {f:?}", problem.name())));
    }
    Ok(f)
}

/// Evaluates `x` and charges one evaluation to `budget`. Nothing is evaluated
/// when the budget is already spent.
pub fn evaluate_counted(problem: &dyn Problem, x: &[f64], budget: &mut EvaluationBudget) -> Result<ObjectiveVector> {
    if budget.is_exhausted() {
        return Err(Error::BudgetExhausted);
    }
    let f = evaluate(problem, x)?;
    budget.consume(1)?;
    Ok(f)
}

/// Reference front with an explicit size check.
pub fn pareto_front_sample(problem: &dyn Problem, count: usize) -> Result<Vec<ObjectiveVector>> {
    if count < 2 {
        return Err(invalid_input("a reference front needs at least two points"));
    }
    Ok(problem.pareto_front(count))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Zdt1,
    Zdt2,
    Zdt6,
    Dtlz2,
}

impl Family {
    fn n_objectives(self) -> usize {
        match self {
            Family::Dtlz2 => 3,
            _ => 2,
        }
    }

    fn base_name(self) -> &'static str {
        match self {
            Family::Zdt1 => "zdt1",
            Family::Zdt2 => "zdt2",
            Family::Zdt6 => "zdt6",
            Family::Dtlz2 => "dtlz2",
        }
    }
}

/// How the distance variables depend on the first variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    None,
    /// `z_i = x_i - x_1`
    Linear,
    /// `z_i = x_i^2 - x_1`
    Nonlinear,
}

impl Linkage {
    fn suffix(self) -> &'static str {
        match self {
            Linkage::None => "",
            Linkage::Linear => "-linlink",
            Linkage::Nonlinear => "-nllink",
        }
    }
}

/// One of the built-in benchmark functions.
#[derive(Debug, Clone)]
pub struct Benchmark {
    family: Family,
    linkage: Linkage,
    n: usize,
    name: String,
    bounds: Bounds,
}

/// Smallest attainable first objective of ZDT6 (at `x_1 ≈ 0.0817`).
pub const ZDT6_F1_MIN: f64 = 0.280_775_319_057_015_9;

impl Benchmark {
    pub fn new(family: Family, n: usize) -> Result<Self> {
        let min_n = family.n_objectives();
        if n < min_n {
            return Err(invalid_input(format!("{} needs at least {min_n} variables", family.base_name())));
        }
        Ok(Self { family, linkage: Linkage::None, n, name: family.base_name().to_string(), bounds: Bounds::unit(n) })
    }

    pub fn zdt1(n: usize) -> Self {
        Self::new(Family::Zdt1, n).expect("valid ZDT1 size")
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn linkage(&self) -> Linkage {
        self.linkage
    }

    /// The same problem with its distance variables linked to `x_1`.
    pub fn with_linkage(&self, linkage: Linkage) -> Self {
        Self {
            linkage,
            name: format!("{}{}", self.family.base_name(), linkage.suffix()),
            ..self.clone()
        }
    }

    fn position_vars(&self) -> usize {
        self.family.n_objectives() - 1
    }

    /// Distance terms after the linkage transform; base DTLZ2 centres them at 0.5.
    fn distance_terms<'a>(&'a self, x: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        let x1 = x[0];
        let family = self.family;
        let linkage = self.linkage;
        x[self.position_vars()..].iter().map(move |&v| match linkage {
            Linkage::None if family == Family::Dtlz2 => v - 0.5,
            Linkage::None => v,
            Linkage::Linear => v - x1,
            Linkage::Nonlinear => v * v - x1,
        })
    }

    /// Distance function contribution: sum of z_i (plain ZDT) or z_i^2 (linked or DTLZ2).
    fn distance_sum(&self, x: &[f64]) -> f64 {
        let squared = self.linkage != Linkage::None || self.family == Family::Dtlz2;
        self.distance_terms(x).map(|z| if squared { z * z } else { z }).sum()
    }
}

impl Problem for Benchmark {
    fn name(&self) -> &str {
        &self.name
    }

    fn n_vars(&self) -> usize {
        self.n
    }

    fn n_objectives(&self) -> usize {
        self.family.n_objectives()
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn objectives(&self, x: &[f64]) -> ObjectiveVector {
        let s = self.distance_sum(x);
        let k = (self.n - self.position_vars()) as f64;
        match self.family {
            Family::Zdt1 => {
                let g = 1.0 + 9.0 * s / k;
                vec![x[0], g * (1.0 - (x[0] / g).sqrt())]
            }
            Family::Zdt2 => {
                let g = 1.0 + 9.0 * s / k;
                vec![x[0], g * (1.0 - (x[0] / g).powi(2))]
            }
            Family::Zdt6 => {
                let f1 = 1.0 - (-4.0 * x[0]).exp() * (6.0 * PI * x[0]).sin().powi(6);
                let g = 1.0 + 9.0 * (s / k).powf(0.25);
                vec![f1, g * (1.0 - (f1 / g).powi(2))]
            }
            Family::Dtlz2 => {
                let r = 1.0 + s;
                let (a, b) = (x[0] * FRAC_PI_2, x[1] * FRAC_PI_2);
                vec![r * a.cos() * b.cos(), r * a.cos() * b.sin(), r * a.sin()]
            }
        }
    }

    fn pareto_front(&self, count: usize) -> Vec<ObjectiveVector> {
        let count = count.max(2);
        let grid = |lo: f64, hi: f64| (0..count).map(move |i| lo + (hi - lo) * i as f64 / (count - 1) as f64);
        match self.family {
            Family::Zdt1 => grid(0.0, 1.0).map(|f1| vec![f1, 1.0 - f1.sqrt()]).collect(),
            Family::Zdt2 => grid(0.0, 1.0).map(|f1| vec![f1, 1.0 - f1 * f1]).collect(),
            Family::Zdt6 => grid(ZDT6_F1_MIN, 1.0).map(|f1| vec![f1, 1.0 - f1 * f1]).collect(),
            Family::Dtlz2 => {
                // k x k grid over both spherical angles, k = floor(sqrt(count)).
                let k = ((count as f64).sqrt().floor() as usize).max(2);
                let mut pts = Vec::with_capacity(k * k);
                for i in 0..k {
                    let a = FRAC_PI_2 * i as f64 / (k - 1) as f64;
                    for j in 0..k {
                        let b = FRAC_PI_2 * j as f64 / (k - 1) as f64;
                        pts.push(vec![a.cos() * b.cos(), a.cos() * b.sin(), a.sin()]);
                    }
                }
                pts
            }
        }
    }
}

/// Parses names such as `zdt1`, `zdt2-linlink` or `dtlz2-nllink`.
pub fn builtin(name: &str, n: usize) -> Result<Benchmark> {
    let (base, linkage) = match name.split_once('-') {
        None => (name, Linkage::None),
        Some((b, "linlink")) => (b, Linkage::Linear),
        Some((b, "nllink")) => (b, Linkage::Nonlinear),
        Some(_) => return Err(invalid_input(format!("unknown problem '{name}'"))),
    };
    let family = match base {
        "zdt1" => Family::Zdt1,
        "zdt2" => Family::Zdt2,
        "zdt6" => Family::Zdt6,
        "dtlz2" => Family::Dtlz2,
        _ => return Err(invalid_input(format!("unknown problem '{name}'"))),
    };
    Ok(Benchmark::new(family, n)?.with_linkage(linkage))
}

/// Names of the twelve built-in instances.
pub fn builtin_names() -> Vec<String> {
    let mut names = Vec::new();
    for base in ["zdt1", "zdt2", "zdt6", "dtlz2"] {
        for suffix in ["", "-linlink", "-nllink"] {
            names.push(format!("{base}{suffix}"));
        }
    }
    names
}

type Factory = Arc<dyn Fn(usize) -> Result<Arc<dyn Problem>> + Send + Sync>;

/// Name -> constructor table. Starts with the built-in suite; external
/// problems register a factory taking the decision dimension.
#[derive(Clone)]
pub struct ProblemRegistry {
    factories: BTreeMap<String, Factory>,
}

impl Default for ProblemRegistry {
    fn default() -> Self {
        let mut reg = Self { factories: BTreeMap::new() };
        for name in builtin_names() {
            let key = name.clone();
            reg.factories.insert(
                name,
                Arc::new(move |n| builtin(&key, n).map(|b| Arc::new(b) as Arc<dyn Problem>)),
            );
        }
        reg
    }
}

impl ProblemRegistry {
    pub fn register<F>(&mut self, name: impl Into<String>, factory: F)
    where
        F: Fn(usize) -> Result<Arc<dyn Problem>> + Send + Sync + 'static,
    {
        self.factories.insert(name.into(), Arc::new(factory));
    }

    pub fn create(&self, name: &str, n: usize) -> Result<Arc<dyn Problem>> {
        let factory = self
            .factories
            .get(name)
            .ok_or_else(|| invalid_input(format!("unknown problem '{name}'; known: {}", self.names().join(", "))))?;
        factory(n)
    }

    pub fn names(&self) -> Vec<String> {
        self.factories.keys().cloned().collect()
    }
}

/// Writes a reference front as CSV with header `f_1..f_m`.
pub fn write_front_csv<W: std::io::Write>(front: &[ObjectiveVector], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(first) = front.first() {
        w.write_record((1..=first.len()).map(|j| format!("f_{j}")))?;
    }
    for p in front {
        w.write_record(p.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
