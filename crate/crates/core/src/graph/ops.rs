use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use super::SparseGraph;
use crate::error::{Error, Result};
use crate::numerics::{pairwise_sq_distances, sq_dist, symmetric_eig, DenseMatrix, Rng};

/// k-nearest-neighbor graph with unit weights, symmetrized by union.
///
/// Neighbors are ranked on squared distance; ties go to the lower index.
pub fn knn_graph(points: &DenseMatrix, k: usize) -> Result<SparseGraph> {
    let n = points.rows();
    if k >= n {
        return Err(Error::contract(format!("k = {k} must be below n = {n}")));
    }
    if !points.is_finite() {
        return Err(Error::contract("points contain non-finite values"));
    }
    let d = pairwise_sq_distances(points);
    let mut pairs = Vec::with_capacity(n * k);
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        let row = d.row(i);
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
        pairs.extend(order[..k].iter().map(|&j| (i, j)));
    }
    SparseGraph::from_pairs(n, &pairs)
}

/// Indices of the `k` nearest rows to each row (self excluded), closest
/// first, ties to the lower index.
pub fn knn_indices(points: &DenseMatrix, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = points.rows();
    if k >= n {
        return Err(Error::contract(format!("k = {k} must be below n = {n}")));
    }
    let d = pairwise_sq_distances(points);
    Ok((0..n)
        .map(|i| {
            let row = d.row(i);
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
            order.truncate(k);
            order
        })
        .collect())
}

/// `D^{-1/2} (A [+ I]) D^{-1/2}` as a dense matrix.
pub fn normalized_adjacency(g: &SparseGraph, add_self_loops: bool) -> Result<DenseMatrix> {
    let n = g.n();
    let loop_w = if add_self_loops { 1.0 } else { 0.0 };
    let mut inv_sqrt = Vec::with_capacity(n);
    for i in 0..n {
        let deg = g.weighted_degree(i) + loop_w;
        if deg <= 0.0 {
            return Err(Error::DegenerateDegree { node: i });
        }
        inv_sqrt.push(1.0 / deg.sqrt());
    }
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for (&j, &w) in g.neighbors(i).iter().zip(g.neighbor_weights(i)) {
            a[(i, j)] = w * inv_sqrt[i] * inv_sqrt[j];
        }
        if add_self_loops {
            a[(i, i)] = inv_sqrt[i] * inv_sqrt[i];
        }
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianKind {
    /// `D - A`
    Unnormalized,
    /// `I - D^{-1/2} A D^{-1/2}`
    Symmetric,
}

pub fn graph_laplacian(g: &SparseGraph, kind: LaplacianKind) -> Result<DenseMatrix> {
    let n = g.n();
    match kind {
        LaplacianKind::Unnormalized => {
            let mut l = g.to_dense().scale(-1.0);
            for i in 0..n {
                l[(i, i)] = g.weighted_degree(i);
            }
            Ok(l)
        }
        LaplacianKind::Symmetric => {
            let mut l = normalized_adjacency(g, false)?.scale(-1.0);
            for i in 0..n {
                l[(i, i)] = 1.0;
            }
            Ok(l)
        }
    }
}

/// How edge lengths are measured for shortest paths.
#[derive(Debug, Clone, Copy)]
pub enum EdgeLength<'a> {
    /// Every edge has length 1 (hop count).
    Unit,
    /// The stored edge weight.
    Weight,
    /// Euclidean distance between the rows of the given coordinates.
    Euclidean(&'a DenseMatrix),
}

/// Shortest-path lengths from a list of sources to every node.
#[derive(Debug, Clone)]
pub struct GeodesicDistances {
    pub sources: Vec<usize>,
    /// `sources.len() × n`; unreachable pairs hold `f64::INFINITY`.
    pub dist: DenseMatrix,
}

impl GeodesicDistances {
    pub fn get(&self, source_pos: usize, target: usize) -> f64 {
        self.dist[(source_pos, target)]
    }
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then node index
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn shortest_paths(g: &SparseGraph, sources: &[usize], length: EdgeLength) -> GeodesicDistances {
    let n = g.n();
    let mut dist = DenseMatrix::filled(sources.len(), n, f64::INFINITY);
    for (pos, &s) in sources.iter().enumerate() {
        let row = dist.row_mut(pos);
        match length {
            EdgeLength::Unit => bfs(g, s, row),
            _ => dijkstra(g, s, length, row),
        }
    }
    GeodesicDistances {
        sources: sources.to_vec(),
        dist,
    }
}

pub fn all_pairs_shortest_paths(g: &SparseGraph, length: EdgeLength) -> GeodesicDistances {
    let sources: Vec<usize> = (0..g.n()).collect();
    shortest_paths(g, &sources, length)
}

fn bfs(g: &SparseGraph, s: usize, dist: &mut [f64]) {
    let mut queue = std::collections::VecDeque::new();
    dist[s] = 0.0;
    queue.push_back(s);
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        for &v in g.neighbors(u) {
            if dist[v].is_infinite() {
                dist[v] = du + 1.0;
                queue.push_back(v);
            }
        }
    }
}

fn dijkstra(g: &SparseGraph, s: usize, length: EdgeLength, dist: &mut [f64]) {
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(HeapItem(0.0, s));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for (&v, &w) in g.neighbors(u).iter().zip(g.neighbor_weights(u)) {
            let len = match length {
                EdgeLength::Unit => 1.0,
                EdgeLength::Weight => w,
                EdgeLength::Euclidean(x) => sq_dist(x.row(u), x.row(v)).sqrt(),
            };
            let nd = d + len;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapItem(nd, v));
            }
        }
    }
}

/// Laplacian-eigenmap coordinates: eigenvectors of `L_sym` for the `d`
/// smallest nonzero eigenvalues, rescaled by `D^{-1/2}`.
///
/// Each column is flipped so its largest-magnitude entry is positive.
pub fn spectral_embedding(g: &SparseGraph, d: usize) -> Result<DenseMatrix> {
    let n = g.n();
    if d >= n {
        return Err(Error::contract(format!("d = {d} must be below n = {n}")));
    }
    g.ensure_connected()?;
    let l = graph_laplacian(g, LaplacianKind::Symmetric)?;
    let eig = symmetric_eig(&l)?;
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / g.weighted_degree(i).sqrt()).collect();
    let mut out = DenseMatrix::zeros(n, d);
    for c in 0..d {
        let mut col: Vec<f64> = (0..n).map(|i| eig.vectors[(i, c + 1)] * inv_sqrt[i]).collect();
        fix_sign(&mut col);
        out.set_column(c, &col);
    }
    Ok(out)
}

/// Flips `v` so its largest-magnitude entry (first on ties) is positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Uniformly sampled distinct non-adjacent unordered pairs `(i, j)`, `i < j`.
pub fn negative_edge_sample(g: &SparseGraph, count: usize, rng: &mut Rng) -> Result<Vec<(usize, usize)>> {
    let n = g.n();
    let total = n * n.saturating_sub(1) / 2;
    let available = total - g.num_edges();
    if count > available {
        return Err(Error::contract(format!(
            "requested {count} negative pairs but only {available} non-edges exist"
        )));
    }
    // dense requests: enumerate and partially shuffle
    if count * 2 > available {
        let mut all = Vec::with_capacity(available);
        for i in 0..n {
            for j in (i + 1)..n {
                if !g.has_edge(i, j) {
                    all.push((i, j));
                }
            }
        }
        for t in 0..count {
            let r = t + rng.below(all.len() - t);
            all.swap(t, r);
        }
        all.truncate(count);
        return Ok(all);
    }
    let mut seen = HashSet::with_capacity(count * 2);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let i = rng.below(n);
        let j = rng.below(n);
        if i == j || g.has_edge(i, j) {
            continue;
        }
        let key = (i.min(j), i.max(j));
        if seen.insert(key) {
            out.push(key);
        }
    }
    Ok(out)
}

/// Adds unit-weight edges between components until the graph is connected.
///
/// The candidate links are the closest cross-component point pairs; they
/// are added greedily shortest-first over a union-find of the components
/// (Kruskal on the component graph). A connected graph is returned as is.
pub fn bridge_components(g: &SparseGraph, coords: &DenseMatrix) -> Result<SparseGraph> {
    let comp = g.components();
    let k = comp.iter().max().map_or(0, |m| m + 1);
    if k <= 1 {
        return Ok(g.clone());
    }
    let n = g.n();
    // closest pair for every pair of components
    let mut best: Vec<Option<(f64, usize, usize)>> = vec![None; k * k];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (comp[i], comp[j]);
            if a == b {
                continue;
            }
            let d = sq_dist(coords.row(i), coords.row(j));
            let slot = &mut best[a.min(b) * k + a.max(b)];
            if slot.map_or(true, |(bd, _, _)| d < bd) {
                *slot = Some((d, i, j));
            }
        }
    }
    let mut links: Vec<(f64, usize, usize, usize, usize)> = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            if let Some((d, i, j)) = best[a * k + b] {
                links.push((d, a, b, i, j));
            }
        }
    }
    links.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    let mut edges = g.edges();
    for (_, a, b, i, j) in links {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            edges.push((i, j, 1.0));
        }
    }
    SparseGraph::from_edges(n, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> SparseGraph {
        let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        SparseGraph::from_pairs(n, &pairs).unwrap()
    }

    fn complete(n: usize) -> SparseGraph {
        let mut pairs = vec![];
        for i in 0..n {
            for j in (i + 1)..n {
                pairs.push((i, j));
            }
        }
        SparseGraph::from_pairs(n, &pairs).unwrap()
    }

    fn random_graph(n: usize, p: f64, rng: &mut Rng, weighted: bool) -> SparseGraph {
        let mut edges = vec![];
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.bernoulli(p) {
                    let w = if weighted { rng.uniform() } else { 1.0 };
                    edges.push((i, j, w));
                }
            }
        }
        SparseGraph::from_edges(n, &edges).unwrap()
    }

    fn floyd_warshall(g: &SparseGraph, weighted: bool) -> DenseMatrix {
        let n = g.n();
        let mut d = DenseMatrix::filled(n, n, f64::INFINITY);
        for i in 0..n {
            d[(i, i)] = 0.0;
            for (&j, &w) in g.neighbors(i).iter().zip(g.neighbor_weights(i)) {
                d[(i, j)] = if weighted { w } else { 1.0 };
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[(i, k)] + d[(k, j)];
                    if via < d[(i, j)] {
                        d[(i, j)] = via;
                    }
                }
            }
        }
        d
    }

    #[test]
    fn knn_hand_example() {
        let x = DenseMatrix::from_rows(&[[0.0], [1.0], [3.0], [10.0]]);
        let g = knn_graph(&x, 1).unwrap();
        assert_eq!(g.edges(), vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]);
        let two = knn_graph(&DenseMatrix::from_rows(&[[0.0], [5.0]]), 1).unwrap();
        assert_eq!(two.edges(), vec![(0, 1, 1.0)]);
        assert!(knn_graph(&x, 4).is_err());
    }

    #[test]
    fn knn_ties_prefer_lower_index() {
        // node 1 is equidistant from 0 and 2
        let x = DenseMatrix::from_rows(&[[0.0], [1.0], [2.0]]);
        let idx = knn_indices(&x, 1).unwrap();
        assert_eq!(idx[1], vec![0]);
    }

    #[test]
    fn normalized_adjacency_examples() {
        let e = SparseGraph::from_pairs(2, &[(0, 1)]).unwrap();
        assert_eq!(normalized_adjacency(&e, false).unwrap().data(), &[0.0, 1.0, 1.0, 0.0]);
        assert!(normalized_adjacency(&e, true)
            .unwrap()
            .data()
            .iter()
            .all(|&v| (v - 0.5).abs() < 1e-15));
        let path = SparseGraph::from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
        let a = normalized_adjacency(&path, false).unwrap();
        assert!((a[(0, 1)] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let iso = SparseGraph::from_pairs(3, &[(0, 1)]).unwrap();
        assert!(matches!(
            normalized_adjacency(&iso, false),
            Err(Error::DegenerateDegree { node: 2 })
        ));
        assert!(normalized_adjacency(&iso, true).is_ok());
    }

    #[test]
    fn regular_graphs_have_unit_row_sums_with_self_loops() {
        for g in [cycle(4), complete(4)] {
            let a = normalized_adjacency(&g, true).unwrap();
            for i in 0..4 {
                assert!((a.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn laplacians() {
        let e = SparseGraph::from_pairs(2, &[(0, 1)]).unwrap();
        let l = graph_laplacian(&e, LaplacianKind::Unnormalized).unwrap();
        assert_eq!(l.data(), &[1.0, -1.0, -1.0, 1.0]);
        let mut rng = Rng::new(3);
        let g = random_graph(10, 0.4, &mut rng, true);
        let l = graph_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        for i in 0..10 {
            assert!(l.row(i).iter().sum::<f64>().abs() < 1e-12);
        }
        let ls = graph_laplacian(&cycle(4), LaplacianKind::Symmetric).unwrap();
        let eig = crate::numerics::jacobi_eig(&ls).unwrap();
        for (v, want) in eig.values.iter().zip([0.0, 1.0, 1.0, 2.0]) {
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn shortest_path_basics() {
        let path = SparseGraph::from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
        let d = shortest_paths(&path, &[0], EdgeLength::Unit);
        assert_eq!(d.get(0, 2), 2.0);
        let split = SparseGraph::from_pairs(3, &[(0, 1)]).unwrap();
        let d = shortest_paths(&split, &[0], EdgeLength::Unit);
        assert!(d.get(0, 2).is_infinite());
    }

    #[test]
    fn shortest_paths_match_floyd_warshall() {
        let mut rng = Rng::new(11);
        for trial in 0..40 {
            let n = 2 + trial % 14;
            let g = random_graph(n, 0.3, &mut rng, false);
            let fw = floyd_warshall(&g, false);
            let dj = all_pairs_shortest_paths(&g, EdgeLength::Unit).dist;
            assert_eq!(fw, dj);
            let gw = random_graph(n, 0.3, &mut rng, true);
            let fw = floyd_warshall(&gw, true);
            let dj = all_pairs_shortest_paths(&gw, EdgeLength::Weight).dist;
            for (a, b) in fw.data().iter().zip(dj.data()) {
                assert!(a == b || (a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn euclidean_lengths() {
        let x = DenseMatrix::from_rows(&[[0.0, 0.0], [3.0, 4.0], [3.0, 5.0]]);
        let g = SparseGraph::from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
        let d = shortest_paths(&g, &[0], EdgeLength::Euclidean(&x));
        assert!((d.get(0, 2) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_embedding_properties() {
        let k4 = complete(4);
        let e = spectral_embedding(&k4, 1).unwrap();
        let deg: Vec<f64> = (0..4).map(|i| k4.weighted_degree(i)).collect();
        let dot: f64 = (0..4).map(|i| e[(i, 0)] * deg[i]).sum();
        assert!(dot.abs() < 1e-10);

        let c4 = cycle(4);
        let e = spectral_embedding(&c4, 2).unwrap();
        let r: Vec<f64> = (0..4).map(|i| e[(i, 0)].hypot(e[(i, 1)])).collect();
        for v in &r {
            assert!((v - r[0]).abs() < 1e-10, "{r:?}");
        }

        let split = SparseGraph::from_pairs(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(matches!(spectral_embedding(&split, 1), Err(Error::Connectivity { .. })));
        assert!(spectral_embedding(&c4, 4).is_err());
    }

    #[test]
    fn spectral_columns_are_d_orthonormal() {
        let mut rng = Rng::new(5);
        let x = DenseMatrix::from_fn(60, 2, |_, _| rng.normal());
        let g = knn_graph(&x, 8).unwrap();
        let e = spectral_embedding(&g, 4).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let ip: f64 = (0..60).map(|i| e[(i, a)] * e[(i, b)] * g.weighted_degree(i)).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-7);
            }
            let col = e.column(a);
            let big = col.iter().cloned().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn negative_sampling() {
        let k3 = complete(3);
        let mut rng = Rng::new(0);
        assert!(negative_edge_sample(&k3, 1, &mut rng).is_err());
        let empty = SparseGraph::empty(3);
        let mut all = negative_edge_sample(&empty, 3, &mut rng).unwrap();
        all.sort();
        assert_eq!(all, vec![(0, 1), (0, 2), (1, 2)]);

        let c = cycle(12);
        let a = negative_edge_sample(&c, 10, &mut Rng::new(99)).unwrap();
        let b = negative_edge_sample(&c, 10, &mut Rng::new(99)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn negative_samples_are_never_edges() {
        let mut rng = Rng::new(21);
        let g = random_graph(30, 0.2, &mut rng, false);
        let mut draws = 0;
        while draws < 10_000 {
            let s = negative_edge_sample(&g, 50, &mut rng).unwrap();
            let uniq: HashSet<_> = s.iter().collect();
            assert_eq!(uniq.len(), s.len());
            for &(i, j) in &s {
                assert!(i < j && !g.has_edge(i, j));
            }
            draws += s.len();
        }
    }

    #[test]
    fn bridging_connects_with_shortest_links() {
        let x = DenseMatrix::from_rows(&[[0.0], [1.0], [5.0], [6.0], [20.0]]);
        let g = SparseGraph::from_pairs(5, &[(0, 1), (2, 3)]).unwrap();
        let b = bridge_components(&g, &x).unwrap();
        assert!(b.is_connected());
        assert_eq!(b.num_edges(), 4);
        assert!(b.has_edge(1, 2) && b.has_edge(3, 4));
        let c = cycle(5);
        assert_eq!(bridge_components(&c, &x).unwrap(), c);
    }
}
