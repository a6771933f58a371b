//! Hard-core model on the anchor conflict graph.
//!
//! Vertices of the MTD graph are the anchor sites `{0, ..., L(M-1)}^2`,
//! indexed row-major; two sites conflict when their l-infinity distance is
//! at most `L - 1`. Configurations are `Vec<bool>` occupancy vectors.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_activity, Error, Result};
use crate::mtd_sim::group_from_offsets;
use crate::rng::SeedSpec;
use crate::stats::tv_distance;
use crate::types::{GroupElement2D, Shift2};

pub const ENUMERATION_CAP: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictGraph {
    /// `(L, M)` for graphs built from the anchor grid.
    grid: Option<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl ConflictGraph {
    pub fn mtd(l: usize, m: usize) -> Result<Self> {
        if l == 0 || m == 0 {
            return Err(Error::InvalidParameter("L and M must be >= 1".into()));
        }
        let side = l * (m - 1) + 1;
        let reach = l - 1;
        let neighbors = (0..side * side)
            .map(|v| {
                let (r, c) = (v / side, v % side);
                let mut out = Vec::new();
                for rr in r.saturating_sub(reach)..=(r + reach).min(side - 1) {
                    for cc in c.saturating_sub(reach)..=(c + reach).min(side - 1) {
                        if (rr, cc) != (r, c) {
                            out.push(rr * side + cc);
                        }
                    }
                }
                out
            })
            .collect();
        Ok(ConflictGraph {
            grid: Some((l, m)),
            neighbors,
        })
    }

    /// Arbitrary simple graph on `n` vertices.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidParameter(format!("bad edge ({a}, {b})")));
            }
            if !neighbors[a].contains(&b) {
                neighbors[a].push(b);
                neighbors[b].push(a);
            }
        }
        neighbors.iter_mut().for_each(|v| v.sort_unstable());
        Ok(ConflictGraph {
            grid: None,
            neighbors,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn grid(&self) -> Option<(usize, usize)> {
        self.grid
    }

    fn require_grid(&self) -> Result<(usize, usize)> {
        self.grid
            .ok_or_else(|| Error::InvalidParameter("graph has no anchor-grid geometry".into()))
    }

    /// Side of the anchor grid, `L(M-1) + 1`.
    pub fn side(&self) -> Option<usize> {
        self.grid.map(|(l, m)| l * (m - 1) + 1)
    }

    pub fn is_independent(&self, occupied: &[bool]) -> bool {
        occupied.len() == self.vertex_count()
            && (0..self.vertex_count())
                .all(|v| !occupied[v] || self.neighbors[v].iter().all(|&u| !occupied[u]))
    }

    /// Occupied sites as `(row, col)` anchors.
    pub fn anchors(&self, occupied: &[bool]) -> Vec<(usize, usize)> {
        let side = self.side().unwrap_or(1);
        occupied
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(|(v, _)| (v / side, v % side))
            .collect()
    }

    /// Occupancy vector for a list of anchors.
    pub fn occupancy(&self, anchors: &[(usize, usize)]) -> Result<Vec<bool>> {
        let side = self.side().ok_or_else(|| {
            Error::InvalidParameter("graph has no anchor-grid geometry".into())
        })?;
        let mut occ = vec![false; self.vertex_count()];
        for &(r, c) in anchors {
            if r >= side || c >= side {
                return Err(Error::InvalidParameter(format!("anchor ({r}, {c}) off the grid")));
            }
            occ[r * side + c] = true;
        }
        Ok(occ)
    }
}

/// Exact law over all independent sets, stored as bit masks.
#[derive(Debug, Clone, PartialEq)]
pub struct HardCoreExact {
    pub lambda: f64,
    n: usize,
    masks: Vec<u32>,
    probabilities: Vec<f64>,
    cdf: Vec<f64>,
    partition: f64,
}

pub fn enumerate_exact(graph: &ConflictGraph, lambda: f64) -> Result<HardCoreExact> {
    check_activity(lambda)?;
    let n = graph.vertex_count();
    if n > ENUMERATION_CAP {
        return Err(Error::EnumerationTooLarge {
            vertices: n,
            cap: ENUMERATION_CAP,
        });
    }
    let nbr: Vec<u32> = (0..n)
        .map(|v| graph.neighbors(v).iter().fold(0u32, |acc, &u| acc | (1 << u)))
        .collect();
    let mut masks = Vec::new();
    // depth-first over vertices in index order, skipping blocked ones
    fn walk(v: usize, n: usize, set: u32, blocked: u32, nbr: &[u32], out: &mut Vec<u32>) {
        if v == n {
            out.push(set);
            return;
        }
        walk(v + 1, n, set, blocked, nbr, out);
        if blocked & (1 << v) == 0 {
            walk(v + 1, n, set | (1 << v), blocked | nbr[v], nbr, out);
        }
    }
    walk(0, n, 0, 0, &nbr, &mut masks);
    masks.sort_unstable();
    let weights: Vec<f64> = masks
        .iter()
        .map(|m| lambda.powi(m.count_ones() as i32))
        .collect();
    let partition: f64 = weights.iter().sum();
    let probabilities: Vec<f64> = weights.iter().map(|w| w / partition).collect();
    let mut acc = 0.0;
    let cdf = probabilities
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    Ok(HardCoreExact {
        lambda,
        n,
        masks,
        probabilities,
        cdf,
        partition,
    })
}

impl HardCoreExact {
    pub fn partition_function(&self) -> f64 {
        self.partition
    }

    pub fn independent_set_count(&self) -> usize {
        self.masks.len()
    }

    pub fn configurations(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.masks.iter().copied().zip(self.probabilities.iter().copied())
    }

    pub fn probability(&self, mask: u32) -> f64 {
        match self.masks.binary_search(&mask) {
            Ok(i) => self.probabilities[i],
            Err(_) => 0.0,
        }
    }

    pub fn sample_mask<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c <= u);
        self.masks[i.min(self.masks.len() - 1)]
    }

    pub fn sample_configuration<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<bool> {
        unmask(self.sample_mask(rng), self.n)
    }

    /// Law of the number of occupied sites.
    pub fn occupancy_count_law(&self) -> BTreeMap<usize, f64> {
        let mut law = BTreeMap::new();
        for (m, p) in self.configurations() {
            *law.entry(m.count_ones() as usize).or_insert(0.0) += p;
        }
        law
    }

    pub fn configuration_law(&self) -> BTreeMap<u32, f64> {
        self.configurations().collect()
    }
}

pub fn mask(occupied: &[bool]) -> u32 {
    occupied
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &o)| if o { acc | (1 << i) } else { acc })
}

fn unmask(mask: u32, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask & (1 << i) != 0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlauberOptions {
    pub burn_in: usize,
    pub thin: usize,
}

impl GlauberOptions {
    /// `200 |V|` burn-in updates and `|V|` updates between samples.
    pub fn defaults(graph: &ConflictGraph) -> Self {
        let n = graph.vertex_count();
        GlauberOptions {
            burn_in: 200 * n,
            thin: n,
        }
    }
}

/// Single-site heat-bath dynamics started from the empty configuration.
#[derive(Debug, Clone)]
pub struct GlauberChain<'g> {
    graph: &'g ConflictGraph,
    p_occupy: f64,
    occupied: Vec<bool>,
    blocked: Vec<u32>,
}

impl<'g> GlauberChain<'g> {
    pub fn new(graph: &'g ConflictGraph, lambda: f64) -> Result<Self> {
        check_activity(lambda)?;
        let n = graph.vertex_count();
        Ok(GlauberChain {
            graph,
            p_occupy: lambda / (1.0 + lambda),
            occupied: vec![false; n],
            blocked: vec![0; n],
        })
    }

    fn set(&mut self, v: usize, on: bool) {
        if self.occupied[v] == on {
            return;
        }
        self.occupied[v] = on;
        for &u in self.graph.neighbors(v) {
            if on {
                self.blocked[u] += 1;
            } else {
                self.blocked[u] -= 1;
            }
        }
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.occupied.len();
        if n == 0 {
            return;
        }
        let v = rng.random_range(0..n);
        let u: f64 = rng.random();
        let on = self.blocked[v] == 0 && u < self.p_occupy;
        self.set(v, on);
    }

    pub fn run<R: Rng + ?Sized>(&mut self, updates: usize, rng: &mut R) {
        for _ in 0..updates {
            self.step(rng);
        }
    }

    pub fn occupied(&self) -> &[bool] {
        &self.occupied
    }
}

pub fn sample_glauber<R: Rng + ?Sized>(
    graph: &ConflictGraph,
    lambda: f64,
    burn_in: usize,
    thin: usize,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<Vec<bool>>> {
    let mut chain = GlauberChain::new(graph, lambda)?;
    chain.run(burn_in, rng);
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        chain.run(thin.max(1), rng);
        out.push(chain.occupied.clone());
    }
    Ok(out)
}

/// Anchor offset inside patch `(a, b)`, or `(L, L)`.
fn patch_offset(occupied: &[bool], l: usize, side: usize, a: usize, b: usize) -> Shift2 {
    for r in a * l..((a + 1) * l).min(side) {
        for c in b * l..((b + 1) * l).min(side) {
            if occupied[r * side + c] {
                return Shift2::new(r - a * l, c - b * l);
            }
        }
    }
    Shift2::empty(l)
}

/// Group element of patch `(k1, k2)`. Only sites in `kL + {-L..L-1}^2` are read.
pub fn encode_group(
    graph: &ConflictGraph,
    occupied: &[bool],
    k1: usize,
    k2: usize,
) -> Result<GroupElement2D> {
    let (l, m) = graph.require_grid()?;
    if k1 >= m || k2 >= m {
        return Err(Error::InvalidParameter(format!(
            "patch ({k1}, {k2}) outside the {m}x{m} grid"
        )));
    }
    let side = l * (m - 1) + 1;
    Ok(group_from_offsets(
        |a, b| patch_offset(occupied, l, side, a, b),
        l,
        k1,
        k2,
    ))
}

/// Group elements of all patches, row-major.
pub fn encode_all(graph: &ConflictGraph, occupied: &[bool]) -> Result<Vec<GroupElement2D>> {
    let (l, m) = graph.require_grid()?;
    let side = l * (m - 1) + 1;
    let offsets: Vec<Shift2> = (0..m * m)
        .map(|i| patch_offset(occupied, l, side, i / m, i % m))
        .collect();
    Ok((0..m * m)
        .map(|i| group_from_offsets(|a, b| offsets[a * m + b], l, i / m, i % m))
        .collect())
}

/// Patch indices at distance `>= margin` from every edge of the `M x M` grid.
pub fn interior_patches(m: usize, margin: usize) -> Vec<(usize, usize)> {
    if m < 2 * margin + 1 {
        return Vec::new();
    }
    let range = margin..m - margin;
    range
        .clone()
        .flat_map(|a| range.clone().map(move |b| (a, b)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EmpiricalGroupDistribution2D {
    pub l: usize,
    counts: BTreeMap<GroupElement2D, u64>,
    total: u64,
}

impl EmpiricalGroupDistribution2D {
    pub fn new(l: usize) -> Self {
        EmpiricalGroupDistribution2D {
            l,
            counts: BTreeMap::new(),
            total: 0,
        }
    }

    pub fn from_counts(l: usize, counts: BTreeMap<GroupElement2D, u64>) -> Result<Self> {
        if let Some(g) = counts.keys().find(|g| !g.in_range(l)) {
            return Err(Error::InvalidParameter(format!("group element {g:?} out of range")));
        }
        let total = counts.values().sum();
        Ok(EmpiricalGroupDistribution2D { l, counts, total })
    }

    pub fn add(&mut self, g: GroupElement2D, n: u64) {
        debug_assert!(g.in_range(self.l));
        *self.counts.entry(g).or_insert(0) += n;
        self.total += n;
    }

    pub fn merge(&mut self, other: &EmpiricalGroupDistribution2D) {
        for (&g, &n) in &other.counts {
            self.add(g, n);
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &BTreeMap<GroupElement2D, u64> {
        &self.counts
    }

    pub fn probability(&self, g: GroupElement2D) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.counts.get(&g).copied().unwrap_or(0) as f64 / self.total as f64
    }

    pub fn probabilities(&self) -> BTreeMap<GroupElement2D, f64> {
        crate::stats::normalize_counts(&self.counts)
    }

    pub fn tv_distance(&self, other: &EmpiricalGroupDistribution2D) -> f64 {
        tv_distance(&self.probabilities(), &other.probabilities())
    }
}

/// Histogram of group elements over the given patch indices, pooled across
/// configurations.
pub fn empirical_pi_2d_on(
    configs: &[Vec<bool>],
    graph: &ConflictGraph,
    indices: &[(usize, usize)],
) -> Result<EmpiricalGroupDistribution2D> {
    let (l, _) = graph.require_grid()?;
    if indices.is_empty() {
        return Err(Error::NoInteriorPatches);
    }
    let mut hist = EmpiricalGroupDistribution2D::new(l);
    for occ in configs {
        for &(a, b) in indices {
            hist.add(encode_group(graph, occ, a, b)?, 1);
        }
    }
    Ok(hist)
}

pub fn empirical_pi_2d(
    configs: &[Vec<bool>],
    graph: &ConflictGraph,
    interior_margin: usize,
) -> Result<EmpiricalGroupDistribution2D> {
    let (_, m) = graph.require_grid()?;
    if interior_margin == 0 {
        return Err(Error::InvalidParameter("interior margin must be >= 1".into()));
    }
    empirical_pi_2d_on(configs, graph, &interior_patches(m, interior_margin))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingOptions {
    pub chains: usize,
    pub samples_per_chain: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub margin: usize,
    /// Conditioning states seen fewer times are skipped.
    pub min_hits: u64,
}

impl MixingOptions {
    pub fn defaults(graph: &ConflictGraph) -> Self {
        let g = GlauberOptions::defaults(graph);
        MixingOptions {
            chains: 4,
            samples_per_chain: 25_000,
            burn_in: g.burn_in,
            thin: g.thin,
            margin: 2,
            min_hits: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingRow {
    pub separation: usize,
    pub deviation: f64,
    pub std_error: f64,
    /// Ordered patch pairs pooled at this separation.
    pub pairs: u64,
    /// Conditioning states with at least `min_hits` hits.
    pub conditioning_states: usize,
    pub argmax_condition: GroupElement2D,
    pub argmax_target: GroupElement2D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingTable {
    pub rows: Vec<MixingRow>,
    pub reference: EmpiricalGroupDistribution2D,
}

/// Joint counts `(condition code, target code)`; dense when the code space is small.
enum JointCounts {
    Dense { codes: usize, counts: Vec<u64> },
    Sparse(HashMap<(u32, u32), u64>),
}

impl JointCounts {
    fn new(codes: usize) -> Self {
        if codes <= 1024 {
            JointCounts::Dense {
                codes,
                counts: vec![0; codes * codes],
            }
        } else {
            JointCounts::Sparse(HashMap::new())
        }
    }

    fn add(&mut self, cond: u32, target: u32, n: u64) {
        match self {
            JointCounts::Dense { codes, counts } => {
                counts[cond as usize * *codes + target as usize] += n
            }
            JointCounts::Sparse(map) => *map.entry((cond, target)).or_insert(0) += n,
        }
    }

    fn merge(&mut self, other: &JointCounts) {
        match other {
            JointCounts::Dense { codes, counts } => {
                for (i, &n) in counts.iter().enumerate().filter(|(_, &n)| n > 0) {
                    self.add((i / codes) as u32, (i % codes) as u32, n);
                }
            }
            JointCounts::Sparse(map) => {
                let mut keys: Vec<_> = map.iter().collect();
                keys.sort_unstable();
                for (&(c, t), &n) in keys {
                    self.add(c, t, n);
                }
            }
        }
    }

    /// Per condition code, the sorted list of `(target, count)`.
    fn by_condition(&self) -> BTreeMap<u32, Vec<(u32, u64)>> {
        let mut out: BTreeMap<u32, Vec<(u32, u64)>> = BTreeMap::new();
        match self {
            JointCounts::Dense { codes, counts } => {
                for (i, &n) in counts.iter().enumerate().filter(|(_, &n)| n > 0) {
                    out.entry((i / codes) as u32)
                        .or_default()
                        .push(((i % codes) as u32, n));
                }
            }
            JointCounts::Sparse(map) => {
                for (&(c, t), &n) in map {
                    out.entry(c).or_default().push((t, n));
                }
                out.values_mut().for_each(|v| v.sort_unstable());
            }
        }
        out
    }
}

struct ChainTally {
    reference: Vec<u64>,
    joint: Vec<JointCounts>,
}

/// Conditioned deviations `max_psi max_phi |P(g_k = phi | g_k' = psi) - pi(phi)|`
/// over interior patch pairs at each l-infinity separation. Conditioning is
/// by rejection: every sample contributes to the cell of the observed `psi`.
pub fn mixing_diagnostic(
    graph: &ConflictGraph,
    lambda: f64,
    separations: &[usize],
    seed: SeedSpec,
    opts: MixingOptions,
) -> Result<MixingTable> {
    check_activity(lambda)?;
    let (l, m) = graph.require_grid()?;
    let interior = interior_patches(m, opts.margin.max(1));
    if interior.is_empty() {
        return Err(Error::NoInteriorPatches);
    }
    let codes = GroupElement2D::code_count(l);
    let pair_lists: Vec<Vec<(usize, usize)>> = separations
        .iter()
        .map(|&d| {
            let mut pairs = Vec::new();
            for (i, a) in interior.iter().enumerate() {
                for (j, b) in interior.iter().enumerate() {
                    if a.0.abs_diff(b.0).max(a.1.abs_diff(b.1)) == d {
                        pairs.push((j, i)); // (condition, target)
                    }
                }
            }
            pairs
        })
        .collect();
    if let Some(pos) = pair_lists.iter().position(Vec::is_empty) {
        return Err(Error::InsufficientSamples(format!(
            "no interior patch pairs at separation {}",
            separations[pos]
        )));
    }

    let tallies: Vec<ChainTally> = (0..opts.chains.max(1))
        .into_par_iter()
        .map(|c| -> Result<ChainTally> {
            let mut rng = seed.derive(c as u64).rng();
            let mut chain = GlauberChain::new(graph, lambda)?;
            chain.run(opts.burn_in, &mut rng);
            let mut tally = ChainTally {
                reference: vec![0; codes],
                joint: separations.iter().map(|_| JointCounts::new(codes)).collect(),
            };
            let mut local = vec![0u32; interior.len()];
            for _ in 0..opts.samples_per_chain {
                chain.run(opts.thin.max(1), &mut rng);
                let all = encode_all(graph, chain.occupied())?;
                for (slot, &(a, b)) in local.iter_mut().zip(&interior) {
                    let code = all[a * m + b].code(l) as u32;
                    *slot = code;
                    tally.reference[code as usize] += 1;
                }
                for (joint, pairs) in tally.joint.iter_mut().zip(&pair_lists) {
                    for &(cond, target) in pairs {
                        joint.add(local[cond], local[target], 1);
                    }
                }
            }
            Ok(tally)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut reference = vec![0u64; codes];
    let mut joints: Vec<JointCounts> = separations.iter().map(|_| JointCounts::new(codes)).collect();
    for t in &tallies {
        for (r, &n) in reference.iter_mut().zip(&t.reference) {
            *r += n;
        }
        for (acc, j) in joints.iter_mut().zip(&t.joint) {
            acc.merge(j);
        }
    }
    let ref_total: u64 = reference.iter().sum();
    let pi_hat: Vec<f64> = reference
        .iter()
        .map(|&n| n as f64 / ref_total as f64)
        .collect();

    let mut rows = Vec::with_capacity(separations.len());
    for (&d, joint) in separations.iter().zip(&joints) {
        let mut best: Option<(f64, f64, u32, u32)> = None;
        let mut qualifying = 0;
        let mut pairs = 0;
        for (cond, targets) in joint.by_condition() {
            let n: u64 = targets.iter().map(|t| t.1).sum();
            pairs += n;
            if n < opts.min_hits {
                continue;
            }
            qualifying += 1;
            let nf = n as f64;
            let mut observed = vec![0u64; codes];
            for &(t, c) in &targets {
                observed[t as usize] = c;
            }
            for phi in 0..codes {
                if observed[phi] == 0 && pi_hat[phi] == 0.0 {
                    continue;
                }
                let p = observed[phi] as f64 / nf;
                let dev = (p - pi_hat[phi]).abs();
                if best.is_none_or(|b| dev > b.0) {
                    best = Some((dev, (p * (1.0 - p) / nf).sqrt(), cond, phi as u32));
                }
            }
        }
        let (deviation, std_error, cond, target) = best.ok_or_else(|| {
            Error::InsufficientSamples(format!(
                "no conditioning state reached {} hits at separation {d}",
                opts.min_hits
            ))
        })?;
        rows.push(MixingRow {
            separation: d,
            deviation,
            std_error,
            pairs,
            conditioning_states: qualifying,
            argmax_condition: GroupElement2D::from_code(cond as usize, l),
            argmax_target: GroupElement2D::from_code(target as usize, l),
        });
    }
    let mut counts = BTreeMap::new();
    for (code, &n) in reference.iter().enumerate().filter(|(_, &n)| n > 0) {
        counts.insert(GroupElement2D::from_code(code, l), n);
    }
    Ok(MixingTable {
        rows,
        reference: EmpiricalGroupDistribution2D::from_counts(l, counts)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mtd_sim::{latent_groups_2d, PlacementConfig2D};

    #[test]
    fn king_graph_degrees() {
        let g = ConflictGraph::mtd(2, 2).unwrap();
        assert_eq!(g.vertex_count(), 9);
        assert_eq!(g.max_degree(), 8);
        assert_eq!(g.neighbors(0), &[1, 3, 4]);
        let g3 = ConflictGraph::mtd(3, 3).unwrap();
        assert!(g3.max_degree() <= 24);
        for v in 0..g3.vertex_count() {
            for &u in g3.neighbors(v) {
                assert!(g3.neighbors(u).contains(&v));
                assert_ne!(u, v);
            }
        }
    }

    #[test]
    fn tiny_partition_functions() {
        let single = ConflictGraph::from_edges(1, &[]).unwrap();
        let e = enumerate_exact(&single, 1.0).unwrap();
        assert_eq!(e.partition_function(), 2.0);
        assert_eq!(e.probability(1), 0.5);
        let pair = ConflictGraph::from_edges(2, &[(0, 1)]).unwrap();
        let e = enumerate_exact(&pair, 1.0).unwrap();
        assert_eq!(e.partition_function(), 3.0);
        assert_eq!(e.probability(0b11), 0.0);
    }

    #[test]
    fn enumeration_cap_enforced() {
        let g = ConflictGraph::mtd(2, 4).unwrap(); // 7x7 = 49 sites
        assert_eq!(
            enumerate_exact(&g, 1.0),
            Err(Error::EnumerationTooLarge {
                vertices: 49,
                cap: ENUMERATION_CAP
            })
        );
        assert!(enumerate_exact(&ConflictGraph::mtd(2, 3).unwrap(), 1.0).is_ok());
    }

    #[test]
    fn glauber_samples_are_independent_sets() {
        let g = ConflictGraph::mtd(2, 4).unwrap();
        let mut rng = SeedSpec::new(9).rng();
        let samples = sample_glauber(&g, 2.0, 1000, 20, 300, &mut rng).unwrap();
        assert!(samples.iter().all(|s| g.is_independent(s)));
    }

    #[test]
    fn small_activity_keeps_configuration_empty() {
        let g = ConflictGraph::mtd(2, 3).unwrap();
        let mut rng = SeedSpec::new(2).rng();
        let samples = sample_glauber(&g, 1e-9, 500, 25, 200, &mut rng).unwrap();
        assert!(samples.iter().all(|s| s.iter().all(|&o| !o)));
        let pi = empirical_pi_2d(&samples, &g, 1).unwrap();
        assert_eq!(pi.probability(GroupElement2D::empty(2)), 1.0);
        assert_eq!(pi.total(), 200);
    }

    #[test]
    fn encoding_matches_latent_groups() {
        let l = 2;
        let m = 4;
        let g = ConflictGraph::mtd(l, m).unwrap();
        let mut rng = SeedSpec::new(21).rng();
        for occ in sample_glauber(&g, 1.0, 2000, 49, 50, &mut rng).unwrap() {
            let p = PlacementConfig2D::new(l, m, g.anchors(&occ), 1.0).unwrap();
            assert_eq!(encode_all(&g, &occ).unwrap(), latent_groups_2d(&p));
        }
    }

    #[test]
    fn interior_index_sets() {
        assert_eq!(interior_patches(5, 2), vec![(2, 2)]);
        assert!(interior_patches(4, 2).is_empty());
        assert_eq!(interior_patches(4, 1).len(), 4);
        let g = ConflictGraph::mtd(2, 4).unwrap();
        assert_eq!(empirical_pi_2d(&[], &g, 2), Err(Error::NoInteriorPatches));
    }
}
