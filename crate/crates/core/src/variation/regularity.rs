//! Piecewise-linear regularity model: local PCA partitions the population into
//! clusters, each approximated by a low-dimensional affine patch plus isotropic
//! Gaussian noise.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Result};
use crate::types::{Bounds, DecisionVector, RandomSource};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityParams {
    pub n_clusters: usize,
    /// Fraction of each projection range added on both sides of the sampling box.
    pub extension_ratio: f64,
    pub max_iterations: usize,
}

impl Default for RegularityParams {
    fn default() -> Self {
        Self { n_clusters: 5, extension_ratio: 0.25, max_iterations: 50 }
    }
}

/// One affine patch of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub mean: Vec<f64>,
    /// Orthonormal principal directions, strongest first.
    pub basis: Vec<Vec<f64>>,
    /// Extended projection interval along each basis direction.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub noise_sd: f64,
}

impl Cluster {
    fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }

    /// Squared distance from `x` to the affine subspace of this cluster.
    fn residual_sq(&self, x: &[f64]) -> f64 {
        let mut r: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for b in &self.basis {
            let t: f64 = r.iter().zip(b).map(|(a, c)| a * c).sum();
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri -= t * bi;
            }
        }
        r.iter().map(|v| v * v).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityModel {
    pub clusters: Vec<Cluster>,
    /// Sampling probability of each cluster, proportional to its box volume.
    pub weights: Vec<f64>,
}

impl RegularityModel {
    /// Builds the model from explicit clusters, weighting them by box volume.
    pub fn from_clusters(clusters: Vec<Cluster>) -> Self {
        let volumes: Vec<f64> = clusters.iter().map(Cluster::volume).collect();
        let total: f64 = volumes.iter().sum();
        let weights = if total > 0.0 && total.is_finite() {
            volumes.iter().map(|v| v / total).collect()
        } else {
            vec![1.0 / clusters.len() as f64; clusters.len()]
        };
        Self { clusters, weights }
    }
}

fn fit_cluster(points: &[&[f64]], latent_dim: usize, extension: f64) -> Cluster {
    let n = points[0].len();
    let count = points.len() as f64;
    let mut mean = vec![0.0; n];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p.iter()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);

    let mut cov = DMatrix::<f64>::zeros(n, n);
    let mut centered = vec![0.0; n];
    for p in points {
        for (c, (v, m)) in centered.iter_mut().zip(p.iter().zip(&mean)) {
            *c = v - m;
        }
        for i in 0..n {
            let ci = centered[i];
            for j in i..n {
                cov[(i, j)] += ci * centered[j];
            }
        }
    }
    for i in 0..n {
        for j in i..n {
            let v = cov[(i, j)] / count;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let d = latent_dim.min(n);
    let basis: Vec<Vec<f64>> = order[..d]
        .iter()
        .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
        .collect();

    let mut lower = vec![f64::INFINITY; d];
    let mut upper = vec![f64::NEG_INFINITY; d];
    let mut residual = 0.0;
    for p in points {
        let mut r: Vec<f64> = p.iter().zip(&mean).map(|(a, m)| a - m).collect();
        for (j, b) in basis.iter().enumerate() {
            let t: f64 = r.iter().zip(b).map(|(a, c)| a * c).sum();
            lower[j] = lower[j].min(t);
            upper[j] = upper[j].max(t);
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri -= t * bi;
            }
        }
        residual += r.iter().map(|v| v * v).sum::<f64>();
    }
    for j in 0..d {
        let span = upper[j] - lower[j];
        lower[j] -= extension * span;
        upper[j] += extension * span;
    }
    // Mean of the discarded eigenvalues, taken from the residuals directly so an
    // exact fit reports (numerically) zero noise.
    let noise_sd = if n > d { (residual / (count * (n - d) as f64)).sqrt() } else { 0.0 };
    Cluster { mean, basis, lower, upper, noise_sd }
}

fn assign(points: &[DecisionVector], clusters: &[Cluster]) -> Vec<usize> {
    points
        .iter()
        .map(|p| {
            (0..clusters.len())
                .min_by(|&a, &b| clusters[a].residual_sq(p).total_cmp(&clusters[b].residual_sq(p)).then(a.cmp(&b)))
                .unwrap()
        })
        .collect()
}

/// Folds clusters with fewer than `min_size` members into their nearest
/// surviving cluster. Returns the compacted assignment and cluster count.
fn merge_small(points: &[DecisionVector], labels: &mut [usize], clusters: &[Cluster], min_size: usize) -> usize {
    let k = clusters.len();
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    let alive: Vec<usize> = (0..k).filter(|&c| sizes[c] >= min_size).collect();
    let alive = if alive.is_empty() {
        // Everything is tiny: keep the largest cluster and absorb the rest.
        vec![(0..k).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c))).unwrap()]
    } else {
        alive
    };
    for (i, l) in labels.iter_mut().enumerate() {
        if !alive.contains(l) {
            *l = *alive
                .iter()
                .min_by(|&&a, &&b| {
                    clusters[a].residual_sq(&points[i]).total_cmp(&clusters[b].residual_sq(&points[i])).then(a.cmp(&b))
                })
                .unwrap();
        }
    }
    let mut remap = vec![usize::MAX; k];
    for (new, &old) in alive.iter().enumerate() {
        remap[old] = new;
    }
    for l in labels.iter_mut() {
        *l = remap[*l];
    }
    alive.len()
}

fn fit_all(points: &[DecisionVector], labels: &[usize], k: usize, latent_dim: usize, extension: f64) -> Vec<Cluster> {
    (0..k)
        .map(|c| {
            let members: Vec<&[f64]> = points
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == c)
                .map(|(p, _)| p.as_slice())
                .collect();
            fit_cluster(&members, latent_dim, extension)
        })
        .collect()
}

/// Fits a regularity model with `latent_dim`-dimensional patches (m - 1 for m objectives).
///
/// Requires at least `n_clusters * (latent_dim + 2)` points.
pub fn build_regularity_model(
    points: &[DecisionVector],
    latent_dim: usize,
    params: &RegularityParams,
    rng: &mut RandomSource,
) -> Result<RegularityModel> {
    let min_size = latent_dim + 2;
    if params.n_clusters == 0 || points.len() < params.n_clusters * min_size {
        return Err(invalid_input(format!(
            "{} points cannot support {} clusters of at least {min_size}",
            points.len(),
            params.n_clusters
        )));
    }
    let n = points[0].len();
    if points.iter().any(|p| p.len() != n) {
        return Err(invalid_input("points differ in dimension"));
    }

    // Seed patches at random distinct points, with no directions yet: the first
    // assignment is then a nearest-centre partition.
    let seeds = rand::seq::index::sample(rng, points.len(), params.n_clusters);
    let mut clusters: Vec<Cluster> = seeds
        .iter()
        .map(|s| Cluster {
            mean: points[s].clone(),
            basis: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            noise_sd: 0.0,
        })
        .collect();
    let mut labels = assign(points, &clusters);
    let mut k = merge_small(points, &mut labels, &clusters, min_size);
    clusters = fit_all(points, &labels, k, latent_dim, params.extension_ratio);

    for _ in 0..params.max_iterations {
        let mut next = assign(points, &clusters);
        let k_next = merge_small(points, &mut next, &clusters, min_size);
        if k_next == k && next == labels {
            break;
        }
        labels = next;
        k = k_next;
        clusters = fit_all(points, &labels, k, latent_dim, params.extension_ratio);
    }
    Ok(RegularityModel::from_clusters(clusters))
}

/// Draws `count` points: pick a cluster by weight, a uniform point in its box,
/// map it back through the basis, add Gaussian noise and clamp to `bounds`.
pub fn sample_regularity_model(
    model: &RegularityModel,
    count: usize,
    bounds: &Bounds,
    rng: &mut RandomSource,
) -> Vec<DecisionVector> {
    (0..count)
        .map(|_| {
            let mut u = rng.uniform();
            let mut pick = model.clusters.len() - 1;
            for (c, w) in model.weights.iter().enumerate() {
                if u < *w {
                    pick = c;
                    break;
                }
                u -= w;
            }
            let cluster = &model.clusters[pick];
            let mut x = cluster.mean.clone();
            for (j, b) in cluster.basis.iter().enumerate() {
                let t = cluster.lower[j] + (cluster.upper[j] - cluster.lower[j]) * rng.uniform();
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi += t * bi;
                }
            }
            if cluster.noise_sd > 0.0 {
                for xi in x.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *xi += cluster.noise_sd * z;
                }
            }
            bounds.clamp_in_place(&mut x);
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn on_segment(count: usize, n: usize, rng: &mut RandomSource) -> Vec<DecisionVector> {
        (0..count).map(|_| vec![rng.uniform(); n]).collect()
    }

    fn dist_to_diagonal(x: &[f64]) -> f64 {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn exact_manifold_has_zero_noise() {
        let mut rng = RandomSource::new(1);
        let pts = on_segment(100, 6, &mut rng);
        let model = build_regularity_model(&pts, 1, &RegularityParams::default(), &mut rng).unwrap();
        for c in &model.clusters {
            assert!(dist_to_diagonal(&c.mean) < 1e-9);
            assert!(c.noise_sd <= 1e-9, "{}", c.noise_sd);
        }
    }

    #[test]
    fn basis_is_orthonormal_and_weights_sum_to_one() {
        let mut rng = RandomSource::new(2);
        let pts: Vec<DecisionVector> = (0..120).map(|_| (0..8).map(|_| rng.uniform()).collect()).collect();
        let model = build_regularity_model(&pts, 2, &RegularityParams::default(), &mut rng).unwrap();
        for c in &model.clusters {
            for (a, u) in c.basis.iter().enumerate() {
                for (b, v) in c.basis.iter().enumerate() {
                    let dot: f64 = u.iter().zip(v).map(|(p, q)| p * q).sum();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-9);
                }
            }
            assert!(c.noise_sd >= 0.0);
        }
        assert!((model.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_manifold_noise_is_recovered() {
        for seed in 0..30 {
            let mut rng = RandomSource::new(seed);
            let pts: Vec<DecisionVector> = (0..100)
                .map(|_| {
                    let t = rng.uniform();
                    (0..10)
                        .map(|i| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            0.2 + 0.6 * t * (i as f64 + 1.0) / 10.0 + 0.01 * z
                        })
                        .collect()
                })
                .collect();
            let model = build_regularity_model(&pts, 1, &RegularityParams::default(), &mut rng).unwrap();
            // Points join the patch they sit closest to, which biases each
            // cluster's residual spread low; the cluster average stays near the truth.
            let mean = model.clusters.iter().map(|c| c.noise_sd).sum::<f64>() / model.clusters.len() as f64;
            assert!((0.006..=0.012).contains(&mean), "seed {seed}: {mean}");
            assert!(model.clusters.iter().all(|c| c.noise_sd > 0.0 && c.noise_sd <= 0.02));
        }
    }

    /// Top principal direction by power iteration on the explicit covariance.
    fn power_direction(pts: &[DecisionVector]) -> Vec<f64> {
        let n = pts[0].len();
        let mean: Vec<f64> = (0..n).map(|i| pts.iter().map(|p| p[i]).sum::<f64>() / pts.len() as f64).collect();
        let mut v = vec![1.0; n];
        for _ in 0..500 {
            let mut w = vec![0.0; n];
            for p in pts {
                let t: f64 = (0..n).map(|i| (p[i] - mean[i]) * v[i]).sum();
                for i in 0..n {
                    w[i] += t * (p[i] - mean[i]);
                }
            }
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            v = w.iter().map(|x| x / norm).collect();
        }
        v
    }

    #[test]
    fn single_cluster_is_global_pca() {
        let mut rng = RandomSource::new(4);
        let pts: Vec<DecisionVector> = (0..60)
            .map(|_| {
                let t = rng.uniform();
                vec![t, 0.5 * t + 0.1 * rng.uniform(), 0.3 + 0.05 * rng.uniform()]
            })
            .collect();
        let params = RegularityParams { n_clusters: 1, ..Default::default() };
        let model = build_regularity_model(&pts, 1, &params, &mut rng).unwrap();
        assert_eq!(model.clusters.len(), 1);
        let c = &model.clusters[0];
        for i in 0..3 {
            let expect = pts.iter().map(|p| p[i]).sum::<f64>() / 60.0;
            assert!((c.mean[i] - expect).abs() < 1e-12);
        }
        let v = power_direction(&pts);
        let dot: f64 = v.iter().zip(&c.basis[0]).map(|(a, b)| a * b).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-9);
        assert_eq!(model.weights, vec![1.0]);
    }

    #[test]
    fn single_cluster_fit_is_permutation_invariant() {
        let mut rng = RandomSource::new(5);
        let pts = on_segment(40, 4, &mut rng);
        let mut shuffled = pts.clone();
        shuffled.reverse();
        let params = RegularityParams { n_clusters: 1, ..Default::default() };
        let a = build_regularity_model(&pts, 1, &params, &mut RandomSource::new(9)).unwrap();
        let b = build_regularity_model(&shuffled, 1, &params, &mut RandomSource::new(9)).unwrap();
        let (ca, cb) = (&a.clusters[0], &b.clusters[0]);
        for (x, y) in ca.mean.iter().zip(&cb.mean) {
            assert!((x - y).abs() < 1e-12);
        }
        let dot: f64 = ca.basis[0].iter().zip(&cb.basis[0]).map(|(p, q)| p * q).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-9);
        let (wa, wb) = (ca.upper[0] - ca.lower[0], cb.upper[0] - cb.lower[0]);
        assert!((wa - wb).abs() < 1e-9);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let mut rng = RandomSource::new(6);
        let pts = on_segment(10, 3, &mut rng);
        assert!(build_regularity_model(&pts, 1, &RegularityParams::default(), &mut rng).is_err());
    }

    #[test]
    fn noiseless_samples_stay_on_segment() {
        let mut rng = RandomSource::new(7);
        let pts = on_segment(100, 5, &mut rng);
        let params = RegularityParams { extension_ratio: 0.0, ..Default::default() };
        let model = build_regularity_model(&pts, 1, &params, &mut rng).unwrap();
        let model = RegularityModel {
            clusters: model.clusters.into_iter().map(|c| Cluster { noise_sd: 0.0, ..c }).collect(),
            weights: model.weights,
        };
        for x in sample_regularity_model(&model, 500, &Bounds::unit(5), &mut rng) {
            assert!(dist_to_diagonal(&x) < 1e-9);
        }
    }

    #[test]
    fn samples_respect_bounds() {
        let mut rng = RandomSource::new(8);
        let pts: Vec<DecisionVector> = (0..50).map(|_| (0..4).map(|_| rng.uniform()).collect()).collect();
        let model = build_regularity_model(&pts, 1, &RegularityParams { extension_ratio: 2.0, ..Default::default() }, &mut rng).unwrap();
        let b = Bounds::unit(4);
        assert!(sample_regularity_model(&model, 2000, &b, &mut rng).iter().all(|x| b.contains(x)));
    }

    #[test]
    fn sample_mean_matches_cluster_mean() {
        let cluster = Cluster {
            mean: vec![0.5, 0.5, 0.5],
            basis: vec![vec![1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt(), 0.0]],
            lower: vec![-0.2],
            upper: vec![0.2],
            noise_sd: 0.01,
        };
        let model = RegularityModel::from_clusters(vec![cluster.clone()]);
        let mut rng = RandomSource::new(10);
        let n = 10_000;
        let samples = sample_regularity_model(&model, n, &Bounds::unit(3), &mut rng);
        // Per-coordinate sd: uniform spread along the basis plus the noise.
        let spread = (0.4f64.powi(2) / 12.0) * 0.5;
        let sd = [(spread + 1e-4).sqrt(), (spread + 1e-4).sqrt(), 0.01];
        for i in 0..3 {
            let mean = samples.iter().map(|x| x[i]).sum::<f64>() / n as f64;
            let se = sd[i] / (n as f64).sqrt();
            assert!((mean - cluster.mean[i]).abs() < 3.0 * se, "coord {i}: {mean}");
        }
    }
}
