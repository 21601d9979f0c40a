//! Checks shared by the integration tests and the acceptance runner. Each
//! returns the measured error so callers can compare against a tolerance.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::rc::Rc;

use graphdr::classical_dr::{
    calibrate_perplexity, density_corr_term, fuzzy_simplicial_set, joint_probabilities, tsne_kl_gradient,
};
use graphdr::datasets::{load_dataset_dir, save_graph_dataset, GraphDataset, SyntheticKind, SyntheticSpec};
use graphdr::diffengine::{dbn_forward, gcn_forward, gradient_check, numeric_gradient, relative_error, Tape, Var};
use graphdr::gnn_baselines::{ccassg_loss, gae_loss, grace_loss, standardize_columns, vgae_loss};
use graphdr::gnumap::{pair_cross_entropy, UMAP_ALPHA, UMAP_BETA};
use graphdr::graph::{all_pairs_shortest_paths, negative_edge_sample, normalized_adjacency, EdgeLength, SparseGraph};
use graphdr::metrics::{
    calinski_harabasz, davies_bouldin, evaluate, frechet_distance, silhouette, EvalOptions, REGISTRY,
};
use graphdr::numerics::{pairwise_sq_distances, sq_dist, DenseMatrix, Rng};
use graphdr::{gnumap_train, GnumapConfig};

pub const FD_STEP: f64 = 1e-5;

/// Running maximum of errors in which NaN counts as infinitely bad.
pub fn worst(acc: f64, err: f64) -> f64 {
    if acc.is_nan() || err.is_nan() {
        f64::INFINITY
    } else {
        acc.max(err)
    }
}

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn configs_dir() -> PathBuf {
    manifest_dir().join("../../configs")
}

pub fn toy200_dir() -> PathBuf {
    manifest_dir().join("tests/fixtures/toy200")
}

fn random(rows: usize, cols: usize, scale: f64, rng: &mut Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| scale * rng.normal())
}

fn ring_graph() -> SparseGraph {
    SparseGraph::from_pairs(8, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 0), (0, 4), (2, 6)])
        .expect("valid graph")
}

/// Both directions of every edge, each carrying the edge weight.
fn directed(g: &SparseGraph) -> (Vec<(usize, usize)>, Vec<f64>) {
    let mut pairs = Vec::new();
    let mut w = Vec::new();
    for (i, j, wij) in g.edges() {
        pairs.extend([(i, j), (j, i)]);
        w.extend([wij, wij]);
    }
    (pairs, w)
}

/// Positives plus `extra` non-edges at probability 0.
fn with_negatives(g: &SparseGraph, extra: usize, seed: u64) -> (Rc<Vec<(usize, usize)>>, Rc<DenseMatrix>) {
    let (mut pairs, mut p) = directed(g);
    pairs.extend(negative_edge_sample(g, extra, &mut Rng::new(seed)).expect("room for negatives"));
    p.resize(pairs.len(), 0.0);
    (Rc::new(pairs), Rc::new(DenseMatrix::column_vector(&p)))
}

fn gnumap_error() -> f64 {
    let g = ring_graph();
    let adj = normalized_adjacency(&g, true).unwrap();
    let mut rng = Rng::new(1);
    let x = random(8, 3, 1.0, &mut rng);
    let w0 = random(3, 5, 1.0, &mut rng);
    let w1 = random(5, 2, 1.0, &mut rng);
    let (pairs, p) = with_negatives(&g, 6, 2);
    let loss = |t: &mut Tape, w0: Var, w1: Var| {
        let a = t.constant(adj.clone());
        let xv = t.constant(x.clone());
        let z = gcn_forward(t, a, xv, w0, w1)?;
        let y = dbn_forward(t, z, 1e-5, 8)?;
        pair_cross_entropy(t, y, pairs.clone(), p.clone(), UMAP_ALPHA, UMAP_BETA, 1e-7)
    };
    let e0 = gradient_check(&w0, FD_STEP, |t, v| {
        let w1v = t.constant(w1.clone());
        loss(t, v, w1v)
    })
    .unwrap();
    let e1 = gradient_check(&w1, FD_STEP, |t, v| {
        let w0v = t.constant(w0.clone());
        loss(t, w0v, v)
    })
    .unwrap();
    worst(e0, e1)
}

fn gae_pairs() -> (Rc<Vec<(usize, usize)>>, Rc<Vec<(usize, usize)>>) {
    let g = ring_graph();
    let pos: Vec<(usize, usize)> = g.edges().into_iter().map(|(i, j, _)| (i, j)).collect();
    let neg = negative_edge_sample(&g, pos.len(), &mut Rng::new(3)).unwrap();
    (Rc::new(pos), Rc::new(neg))
}

fn gae_error() -> f64 {
    let (pos, neg) = gae_pairs();
    let z = random(8, 2, 0.7, &mut Rng::new(4));
    gradient_check(&z, FD_STEP, |t, v| gae_loss(t, v, pos.clone(), neg.clone(), 1e-15)).unwrap()
}

fn vgae_error() -> f64 {
    let (pos, neg) = gae_pairs();
    let mut rng = Rng::new(5);
    let mu = random(8, 2, 0.7, &mut rng);
    let ls = random(8, 2, 0.3, &mut rng);
    let xi = random(8, 2, 1.0, &mut rng);
    let e_mu = gradient_check(&mu, FD_STEP, |t, v| {
        let l = t.constant(ls.clone());
        vgae_loss(t, v, l, &xi, pos.clone(), neg.clone(), 1e-15)
    })
    .unwrap();
    let e_ls = gradient_check(&ls, FD_STEP, |t, v| {
        let m = t.constant(mu.clone());
        vgae_loss(t, m, v, &xi, pos.clone(), neg.clone(), 1e-15)
    })
    .unwrap();
    worst(e_mu, e_ls)
}

fn grace_error() -> f64 {
    let mut rng = Rng::new(6);
    let u = random(8, 3, 1.0, &mut rng);
    let v = random(8, 3, 1.0, &mut rng);
    gradient_check(&u, FD_STEP, |t, x| {
        let b = t.constant(v.clone());
        grace_loss(t, x, b, 0.5)
    })
    .unwrap()
}

fn ccassg_error() -> f64 {
    let mut rng = Rng::new(7);
    let u = random(8, 3, 1.0, &mut rng);
    let v = random(8, 3, 1.0, &mut rng);
    gradient_check(&u, FD_STEP, |t, x| {
        let b = t.constant(v.clone());
        let x = standardize_columns(t, x)?;
        let b = standardize_columns(t, b)?;
        ccassg_loss(t, x, b, 0.1)
    })
    .unwrap()
}

fn tsne_error() -> f64 {
    let mut rng = Rng::new(8);
    let x = random(9, 4, 1.0, &mut rng);
    let p = joint_probabilities(&calibrate_perplexity(&pairwise_sq_distances(&x), 3.0).unwrap());
    let y = random(9, 2, 1.0, &mut rng);
    let analytic = tsne_kl_gradient(&p, &y, 1.0).1;
    let numeric = numeric_gradient(&y, FD_STEP, |m| Ok(tsne_kl_gradient(&p, m, 1.0).0)).unwrap();
    relative_error(&analytic, &numeric).unwrap()
}

/// Ten points, their fuzzy graph, and a random layout.
fn umap_instance() -> (DenseMatrix, SparseGraph, DenseMatrix) {
    let mut rng = Rng::new(9);
    let x = random(10, 3, 1.0, &mut rng);
    let g = fuzzy_simplicial_set(&x, 4).unwrap().p;
    let y = random(10, 2, 1.0, &mut rng);
    (x, g, y)
}

fn umap_error() -> f64 {
    let (_, g, y) = umap_instance();
    let (pairs, p) = with_negatives(&g, 8, 10);
    gradient_check(&y, FD_STEP, |t, v| pair_cross_entropy(t, v, pairs.clone(), p.clone(), UMAP_ALPHA, UMAP_BETA, 1e-7))
        .unwrap()
}

/// Centered log of the fuzzy-weighted mean squared input distance.
fn centered_log_radius(g: &SparseGraph, x: &DenseMatrix) -> Vec<f64> {
    let n = g.n();
    let (mut num, mut den) = (vec![0.0; n], vec![0.0; n]);
    for (i, j, w) in g.edges() {
        let d2 = sq_dist(x.row(i), x.row(j));
        for k in [i, j] {
            num[k] += w * d2;
            den[k] += w;
        }
    }
    let logs: Vec<f64> = num.iter().zip(&den).map(|(a, b)| (a / b).ln()).collect();
    let mean = logs.iter().sum::<f64>() / n as f64;
    logs.iter().map(|v| v - mean).collect()
}

fn densmap_error() -> f64 {
    let (x, g, y) = umap_instance();
    let log_rp = centered_log_radius(&g, &x);
    let (pos, _) = directed(&g);
    let pos = Rc::new(pos);
    let (pairs, p) = with_negatives(&g, 8, 11);
    let corr_only = gradient_check(&y, FD_STEP, |t, v| {
        Ok(density_corr_term(t, v, pos.clone(), &log_rp, UMAP_ALPHA, UMAP_BETA)?.0)
    })
    .unwrap();
    let full = gradient_check(&y, FD_STEP, |t, v| {
        let ce = pair_cross_entropy(t, v, pairs.clone(), p.clone(), UMAP_ALPHA, UMAP_BETA, 1e-7)?;
        let (corr, _) = density_corr_term(t, v, pos.clone(), &log_rp, UMAP_ALPHA, UMAP_BETA)?;
        let weighted = t.scale(corr, -10.0);
        t.add(ce, weighted)
    })
    .unwrap();
    worst(corr_only, full)
}

/// Relative analytic-vs-numeric gradient error of every trained loss.
pub fn gradient_suite() -> Vec<(&'static str, f64)> {
    vec![
        ("gnumap", gnumap_error()),
        ("gae", gae_error()),
        ("vgae", vgae_error()),
        ("grace", grace_error()),
        ("cca_ssg", ccassg_error()),
        ("tsne_kl", tsne_error()),
        ("umap_ce", umap_error()),
        ("densmap", densmap_error()),
    ]
}

/// Random weighted graph whose weights are exact binary fractions, so
/// path sums are exact regardless of summation order.
fn dyadic_graph(n: usize, seed: u64) -> SparseGraph {
    let mut rng = Rng::new(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.uniform() < 0.25 {
                let w = (1 + (rng.uniform() * 4.0) as usize).min(4) as f64 / 4.0;
                edges.push((i, j, w));
            }
        }
    }
    SparseGraph::from_edges(n, &edges).unwrap()
}

fn floyd_warshall(g: &SparseGraph) -> Vec<Vec<f64>> {
    let n = g.n();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (i, j, w) in g.edges() {
        d[i][j] = d[i][j].min(w);
        d[j][i] = d[j][i].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Number of (graph, pair) entries where shortest paths differ from
/// Floyd–Warshall, over `graphs` random graphs of up to 15 nodes.
pub fn shortest_path_mismatches(graphs: u64) -> usize {
    let mut bad = 0;
    for seed in 0..graphs {
        let n = 5 + (seed as usize % 11);
        let g = dyadic_graph(n, seed);
        let fw = floyd_warshall(&g);
        let sp = all_pairs_shortest_paths(&g, EdgeLength::Weight);
        let hops = all_pairs_shortest_paths(&g, EdgeLength::Unit);
        let unit = SparseGraph::from_edges(n, &g.edges().into_iter().map(|(i, j, _)| (i, j, 1.0)).collect::<Vec<_>>())
            .unwrap();
        let fw_hops = floyd_warshall(&unit);
        for i in 0..n {
            for j in 0..n {
                bad += usize::from(sp.get(i, j) != fw[i][j]) + usize::from(hops.get(i, j) != fw_hops[i][j]);
            }
        }
    }
    bad
}

fn clusters(labels: &[usize]) -> Vec<Vec<usize>> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut c = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        c[l].push(i);
    }
    c
}

fn dist(x: &DenseMatrix, i: usize, j: usize) -> f64 {
    sq_dist(x.row(i), x.row(j)).sqrt()
}

fn mean_point(x: &DenseMatrix, idx: &[usize]) -> Vec<f64> {
    (0..x.cols()).map(|c| idx.iter().map(|&i| x[(i, c)]).sum::<f64>() / idx.len() as f64).collect()
}

pub fn naive_davies_bouldin(x: &DenseMatrix, labels: &[usize]) -> f64 {
    let c = clusters(labels);
    let cents: Vec<Vec<f64>> = c.iter().map(|m| mean_point(x, m)).collect();
    let s: Vec<f64> = c
        .iter()
        .zip(&cents)
        .map(|(m, ce)| m.iter().map(|&i| sq_dist(x.row(i), ce).sqrt()).sum::<f64>() / m.len() as f64)
        .collect();
    let k = c.len();
    (0..k)
        .map(|i| {
            (0..k)
                .filter(|&j| j != i)
                .map(|j| (s[i] + s[j]) / sq_dist(&cents[i], &cents[j]).sqrt())
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum::<f64>()
        / k as f64
}

pub fn naive_calinski_harabasz(x: &DenseMatrix, labels: &[usize]) -> f64 {
    let c = clusters(labels);
    let all: Vec<usize> = (0..x.rows()).collect();
    let g = mean_point(x, &all);
    let (mut between, mut within) = (0.0, 0.0);
    for m in &c {
        let ce = mean_point(x, m);
        between += m.len() as f64 * sq_dist(&ce, &g);
        within += m.iter().map(|&i| sq_dist(x.row(i), &ce)).sum::<f64>();
    }
    let (n, k) = (x.rows() as f64, c.len() as f64);
    (between / (k - 1.0)) / (within / (n - k))
}

pub fn naive_silhouette(x: &DenseMatrix, labels: &[usize]) -> f64 {
    let c = clusters(labels);
    let n = x.rows();
    let mut total = 0.0;
    for i in 0..n {
        let own = &c[labels[i]];
        let a = own.iter().filter(|&&j| j != i).map(|&j| dist(x, i, j)).sum::<f64>() / (own.len() - 1) as f64;
        let b = c
            .iter()
            .enumerate()
            .filter(|(l, m)| *l != labels[i] && !m.is_empty())
            .map(|(_, m)| m.iter().map(|&j| dist(x, i, j)).sum::<f64>() / m.len() as f64)
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / n as f64
}

/// Largest absolute difference of DB, CH and silhouette from the naive
/// formulas over several random labelled clouds.
pub fn cluster_index_error(trials: u64) -> f64 {
    let mut worst = 0.0;
    for seed in 0..trials {
        let mut rng = Rng::new(100 + seed);
        let k = 2 + seed as usize % 3;
        let n = 12 * k;
        let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
        let x = DenseMatrix::from_fn(n, 3, |i, c| rng.normal() + if c == 0 { 3.0 * labels[i] as f64 } else { 0.0 });
        worst = [
            (davies_bouldin(&x, &labels).unwrap() - naive_davies_bouldin(&x, &labels)).abs(),
            (calinski_harabasz(&x, &labels).unwrap() - naive_calinski_harabasz(&x, &labels)).abs(),
            (silhouette(&x, &labels).unwrap() - naive_silhouette(&x, &labels)).abs(),
        ]
        .into_iter()
        .fold(worst, self::worst);
    }
    worst
}

/// Fréchet distance from the eigenvalues of `C₁C₂`: the trace of the
/// matrix square root of `C₁C₂` is the sum of square roots of its
/// (real, non-negative) eigenvalues.
pub fn frechet_by_eigenvalues(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let moments = |x: &DenseMatrix| {
        let n = x.rows();
        let d = x.cols();
        let mu: Vec<f64> = (0..d).map(|c| (0..n).map(|i| x[(i, c)]).sum::<f64>() / n as f64).collect();
        let cov = nalgebra::DMatrix::from_fn(d, d, |p, q| {
            (0..n).map(|i| (x[(i, p)] - mu[p]) * (x[(i, q)] - mu[q])).sum::<f64>() / (n - 1) as f64
        });
        (mu, cov)
    };
    let (ma, ca) = moments(a);
    let (mb, cb) = moments(b);
    let mean_term: f64 = ma.iter().zip(&mb).map(|(x, y)| (x - y) * (x - y)).sum();
    let prod = &ca * &cb;
    let root_trace: f64 = prod.complex_eigenvalues().iter().map(|z| z.re.max(0.0).sqrt()).sum();
    mean_term + ca.trace() + cb.trace() - 2.0 * root_trace
}

pub fn frechet_error(trials: u64) -> f64 {
    let mut worst = 0.0;
    for seed in 0..trials {
        let mut rng = Rng::new(200 + seed);
        let d = 2 + seed as usize % 3;
        let a = DenseMatrix::from_fn(60, d, |_, c| rng.normal() * (1.0 + c as f64));
        let b = DenseMatrix::from_fn(50, d, |_, c| 0.5 * rng.normal() + c as f64);
        let ours = frechet_distance(&a, &b).unwrap().value;
        worst = self::worst(worst, (ours - frechet_by_eigenvalues(&a, &b)).abs());
    }
    worst
}

/// Largest per-row deviation of the achieved perplexity from its target.
pub fn perplexity_error() -> f64 {
    let mut worst = 0.0;
    for (seed, target) in [(0u64, 5.0), (1, 10.0), (2, 30.0)] {
        let mut rng = Rng::new(300 + seed);
        let x = random(80, 5, 1.0, &mut rng);
        let cal = calibrate_perplexity(&pairwise_sq_distances(&x), target).unwrap();
        for i in 0..x.rows() {
            let h: f64 = cal.conditional.row(i).iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
            worst = self::worst(worst, (h.exp() - target).abs());
        }
    }
    worst
}

/// Largest deviation of `Σ exp(−max(0, d − ρ)/σ)` from `log₂ k` over the
/// non-degenerate rows, with the k nearest distances found by brute force.
pub fn umap_sigma_error() -> f64 {
    let mut clouds: Vec<(DenseMatrix, usize)> = vec![(random(120, 4, 1.0, &mut Rng::new(400)), 10)];
    for kind in [SyntheticKind::Moons, SyntheticKind::Swissroll] {
        let ds = SyntheticSpec::new(kind).with_n(200).generate(0).unwrap();
        clouds.push((ds.features, 15));
    }
    let mut worst = 0.0;
    for (x, k) in &clouds {
        let fg = fuzzy_simplicial_set(x, *k).unwrap();
        let target = (*k as f64).log2();
        for i in 0..x.rows() {
            if fg.degenerate_rows.contains(&i) {
                continue;
            }
            let mut d: Vec<f64> = (0..x.rows()).filter(|&j| j != i).map(|j| dist(x, i, j)).collect();
            d.sort_by(f64::total_cmp);
            let mass: f64 = d[..*k].iter().map(|&dj| (-(dj - fg.rho[i]).max(0.0) / fg.sigma[i]).exp()).sum();
            worst = self::worst(worst, (mass - target).abs());
        }
    }
    worst
}

/// Saves `ds` under `dir` and reloads it; describes the first difference.
pub fn round_trip(ds: &GraphDataset, dir: &Path) -> Result<(), String> {
    save_graph_dataset(ds, dir).map_err(|e| e.to_string())?;
    let back = load_dataset_dir(dir).map_err(|e| e.to_string())?;
    if back.graph != ds.graph {
        return Err("graph differs".into());
    }
    if back.features != ds.features {
        return Err("features differ".into());
    }
    if back.labels != ds.labels {
        return Err("labels differ".into());
    }
    if back.ground_truth_coords != ds.ground_truth_coords || back.intrinsic != ds.intrinsic {
        return Err("coordinates differ".into());
    }
    Ok(())
}

/// Loads the toy fixture, round-trips it, embeds it with GNUMAP, and runs
/// every metric: each must be finite and in range, or skipped with a
/// reason. Returns the list of problems.
pub fn toy200_suite(scratch: &Path) -> Vec<String> {
    let mut bad = Vec::new();
    let ds = match load_dataset_dir(&toy200_dir()) {
        Ok(ds) => ds,
        Err(e) => return vec![format!("load: {e}")],
    };
    if ds.n() != 200 || !ds.graph.is_connected() || ds.labels.is_none() {
        bad.push("fixture is not a connected, labelled 200-node graph".into());
    }
    if let Err(e) = round_trip(&ds, &scratch.join("toy200")) {
        bad.push(format!("round trip: {e}"));
    }
    let emb = match gnumap_train(&ds, &GnumapConfig::default()) {
        Ok(r) => r.embedding,
        Err(e) => return vec![format!("gnumap: {e}")],
    };
    let report = match evaluate(&ds, &emb, &REGISTRY, &EvalOptions::default()) {
        Ok(r) => r,
        Err(e) => return vec![format!("evaluate: {e}")],
    };
    for name in REGISTRY {
        match (report.get(name), report.skipped.get(name)) {
            (Some(v), _) => {
                let ok = v.is_finite()
                    && match name {
                        "accuracy" | "knn_overlap" => (0.0..=1.0).contains(&v),
                        "spearman" | "silhouette" | "density_corr" => (-1.0..=1.0).contains(&v),
                        _ => v >= 0.0,
                    };
                if !ok {
                    bad.push(format!("{name} = {v}"));
                }
            }
            (None, Some(_)) => {}
            (None, None) => bad.push(format!("{name} neither computed nor skipped")),
        }
    }
    bad
}
