//! Synthetic MTD measurements, their patch decomposition, and the latent
//! group elements read off the known placements.

use rand::Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_activity, check_gap_lambda, Error, Result};
use crate::hardcore2d::{self, ConflictGraph, GlauberOptions};
use crate::types::{GroupElement1D, GroupElement2D, NoiseSpec, Shift2, Signal1D, Signal2D};

/// Sorted 1D anchors `t_1 < t_2 < ...` in `{0, ..., L(M-1)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementConfig1D {
    pub l: usize,
    pub m: usize,
    pub anchors: Vec<usize>,
    pub lambda: f64,
}

impl PlacementConfig1D {
    pub fn new(l: usize, m: usize, anchors: Vec<usize>, lambda: f64) -> Result<Self> {
        let cfg = PlacementConfig1D {
            l,
            m,
            anchors,
            lambda,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 || self.m == 0 {
            return Err(Error::InvalidParameter("L and M must be >= 1".into()));
        }
        let last = self.l * (self.m - 1);
        if let Some(&t) = self.anchors.iter().find(|&&t| t > last) {
            return Err(Error::InvalidParameter(format!(
                "anchor {t} exceeds the last admissible position {last}"
            )));
        }
        for w in self.anchors.windows(2) {
            if w[1] < w[0] + self.l {
                return Err(Error::OverlapViolation(format!(
                    "anchors {} and {} are closer than L = {}",
                    w[0], w[1], self.l
                )));
            }
        }
        Ok(())
    }
}

/// 2D anchors in `{0, ..., L(M-1)}^2`, pairwise l-infinity distance `>= L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementConfig2D {
    pub l: usize,
    pub m: usize,
    pub anchors: Vec<(usize, usize)>,
    pub activity: f64,
}

impl PlacementConfig2D {
    pub fn new(l: usize, m: usize, mut anchors: Vec<(usize, usize)>, activity: f64) -> Result<Self> {
        anchors.sort_unstable();
        let cfg = PlacementConfig2D {
            l,
            m,
            anchors,
            activity,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 || self.m == 0 {
            return Err(Error::InvalidParameter("L and M must be >= 1".into()));
        }
        let last = self.l * (self.m - 1);
        if let Some(a) = self.anchors.iter().find(|a| a.0 > last || a.1 > last) {
            return Err(Error::InvalidParameter(format!(
                "anchor {a:?} outside {{0..={last}}}^2"
            )));
        }
        for (i, a) in self.anchors.iter().enumerate() {
            for b in &self.anchors[i + 1..] {
                if a.0.abs_diff(b.0).max(a.1.abs_diff(b.1)) < self.l {
                    return Err(Error::OverlapViolation(format!(
                        "anchors {a:?} and {b:?} are closer than L = {}",
                        self.l
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement1D {
    pub l: usize,
    pub m: usize,
    pub values: Vec<f64>,
}

impl Measurement1D {
    pub fn new(l: usize, values: Vec<f64>) -> Result<Self> {
        if l == 0 || values.is_empty() || values.len() % l != 0 {
            return Err(Error::Shape(format!(
                "measurement length {} is not a positive multiple of L = {l}",
                values.len()
            )));
        }
        Ok(Measurement1D {
            l,
            m: values.len() / l,
            values,
        })
    }
}

/// Row-major `LM x LM` image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement2D {
    pub l: usize,
    pub m: usize,
    pub values: Vec<f64>,
}

impl Measurement2D {
    pub fn new(l: usize, side: usize, values: Vec<f64>) -> Result<Self> {
        if l == 0 || side == 0 || side % l != 0 || values.len() != side * side {
            return Err(Error::Shape(format!(
                "expected a square image with side divisible by L = {l}, got side {side} and {} entries",
                values.len()
            )));
        }
        Ok(Measurement2D {
            l,
            m: side / l,
            values,
        })
    }

    pub fn side(&self) -> usize {
        self.l * self.m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dim {
    #[serde(rename = "1d")]
    One,
    #[serde(rename = "2d")]
    Two,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Latent {
    OneD(Vec<GroupElement1D>),
    TwoD(Vec<GroupElement2D>),
}

/// Patches stored back to back. In 2D there are `grid x grid` patches in
/// row-major `(k1, k2)` order, each an `L x L` row-major block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchSet {
    pub dim: Dim,
    pub l: usize,
    /// `M` in 1D, the grid side in 2D.
    pub grid: usize,
    data: Vec<f64>,
    pub latent: Option<Latent>,
}

impl PatchSet {
    pub fn new(dim: Dim, l: usize, grid: usize, data: Vec<f64>, latent: Option<Latent>) -> Result<Self> {
        let set = PatchSet {
            dim,
            l,
            grid,
            data,
            latent,
        };
        if l == 0 || set.data.len() != set.count() * set.patch_len() {
            return Err(Error::Shape(format!(
                "{} values do not form {} patches of {} entries",
                set.data.len(),
                set.count(),
                set.patch_len()
            )));
        }
        let latent_len = match &set.latent {
            None => set.count(),
            Some(Latent::OneD(v)) if dim == Dim::One => v.len(),
            Some(Latent::TwoD(v)) if dim == Dim::Two => v.len(),
            Some(_) => return Err(Error::Shape("latent dimension mismatch".into())),
        };
        if latent_len != set.count() {
            return Err(Error::Shape("latent list does not match the patch count".into()));
        }
        Ok(set)
    }

    pub fn patch_len(&self) -> usize {
        match self.dim {
            Dim::One => self.l,
            Dim::Two => self.l * self.l,
        }
    }

    pub fn count(&self) -> usize {
        match self.dim {
            Dim::One => self.grid,
            Dim::Two => self.grid * self.grid,
        }
    }

    pub fn patch(&self, i: usize) -> &[f64] {
        let n = self.patch_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn patches(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.patch_len())
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
}

fn draw_gap<R: Rng + ?Sized>(geo: &Geometric, rng: &mut R) -> usize {
    usize::try_from(geo.sample(rng)).unwrap_or(usize::MAX)
}

pub fn sample_placements_1d<R: Rng + ?Sized>(
    l: usize,
    m: usize,
    lambda: f64,
    rng: &mut R,
) -> Result<PlacementConfig1D> {
    check_gap_lambda(lambda)?;
    if l == 0 || m == 0 {
        return Err(Error::InvalidParameter("L and M must be >= 1".into()));
    }
    let geo = Geometric::new(lambda).map_err(|_| Error::InvalidLambda(lambda))?;
    let last = l * (m - 1);
    let mut anchors = Vec::new();
    let mut t = draw_gap(&geo, rng);
    while t <= last {
        anchors.push(t);
        t = t.saturating_add(l).saturating_add(draw_gap(&geo, rng));
    }
    Ok(PlacementConfig1D {
        l,
        m,
        anchors,
        lambda,
    })
}

fn add_noise<R: Rng + ?Sized>(values: &mut [f64], noise: NoiseSpec, rng: &mut R) {
    if noise.sigma > 0.0 {
        for v in values.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            *v += noise.sigma * e;
        }
    }
}

pub fn synthesize_1d<R: Rng + ?Sized>(
    x: &Signal1D,
    placements: &PlacementConfig1D,
    noise: NoiseSpec,
    rng: &mut R,
) -> Result<Measurement1D> {
    if x.len() != placements.l {
        return Err(Error::Shape(format!(
            "signal length {} does not match placement L = {}",
            x.len(),
            placements.l
        )));
    }
    placements.validate()?;
    let l = placements.l;
    let mut values = vec![0.0; l * placements.m];
    for &t in &placements.anchors {
        for (v, &s) in values[t..t + l].iter_mut().zip(x.values()) {
            *v += s;
        }
    }
    add_noise(&mut values, noise, rng);
    Ok(Measurement1D {
        l,
        m: placements.m,
        values,
    })
}

pub fn extract_patches_1d(z: &Measurement1D) -> Result<PatchSet> {
    if z.l == 0 || z.values.len() != z.l * z.m {
        return Err(Error::Shape(format!(
            "measurement length {} is not L*M = {}*{}",
            z.values.len(),
            z.l,
            z.m
        )));
    }
    PatchSet::new(Dim::One, z.l, z.m, z.values.clone(), None)
}

/// Start offsets `omega_k` for `k = 0..M`: the offset of the anchor inside
/// patch `k`, or `L` when none starts there.
pub fn start_offsets_1d(placements: &PlacementConfig1D) -> Vec<usize> {
    let l = placements.l;
    let mut omega = vec![l; placements.m];
    for &t in &placements.anchors {
        omega[t / l] = t % l;
    }
    omega
}

pub fn latent_groups_1d(placements: &PlacementConfig1D) -> Vec<GroupElement1D> {
    let l = placements.l;
    let mut prev = 0;
    start_offsets_1d(placements)
        .into_iter()
        .map(|w| {
            let g = GroupElement1D::new(if prev < l { prev } else { 0 }, w);
            prev = w;
            g
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Sampler {
    Exact,
    Glauber,
}

/// One hard-core configuration on the anchor grid. The Glauber sampler
/// runs the default burn-in from the empty configuration.
pub fn sample_placements_2d<R: Rng + ?Sized>(
    l: usize,
    m: usize,
    activity: f64,
    sampler: Sampler,
    rng: &mut R,
) -> Result<PlacementConfig2D> {
    check_activity(activity)?;
    let graph = ConflictGraph::mtd(l, m)?;
    let occupied = match sampler {
        Sampler::Exact => {
            let exact = hardcore2d::enumerate_exact(&graph, activity)?;
            exact.sample_configuration(rng)
        }
        Sampler::Glauber => {
            let opts = GlauberOptions::defaults(&graph);
            let mut chain = hardcore2d::GlauberChain::new(&graph, activity)?;
            chain.run(opts.burn_in, rng);
            chain.occupied().to_vec()
        }
    };
    Ok(PlacementConfig2D {
        l,
        m,
        anchors: graph.anchors(&occupied),
        activity,
    })
}

pub fn synthesize_2d<R: Rng + ?Sized>(
    x: &Signal2D,
    placements: &PlacementConfig2D,
    noise: NoiseSpec,
    rng: &mut R,
) -> Result<Measurement2D> {
    if x.side() != placements.l {
        return Err(Error::Shape(format!(
            "image side {} does not match placement L = {}",
            x.side(),
            placements.l
        )));
    }
    placements.validate()?;
    let l = placements.l;
    let side = l * placements.m;
    let mut values = vec![0.0; side * side];
    for &(r0, c0) in &placements.anchors {
        for r in 0..l {
            let row = &mut values[(r0 + r) * side + c0..(r0 + r) * side + c0 + l];
            for (v, &s) in row.iter_mut().zip(&x.values()[r * l..(r + 1) * l]) {
                *v += s;
            }
        }
    }
    add_noise(&mut values, noise, rng);
    Ok(Measurement2D {
        l,
        m: placements.m,
        values,
    })
}

pub fn extract_patches_2d(z: &Measurement2D) -> Result<PatchSet> {
    let (l, m) = (z.l, z.m);
    let side = l * m;
    if l == 0 || z.values.len() != side * side {
        return Err(Error::Shape(format!(
            "image has {} entries, expected ({l}*{m})^2",
            z.values.len()
        )));
    }
    let mut data = Vec::with_capacity(side * side);
    for k1 in 0..m {
        for k2 in 0..m {
            for r in 0..l {
                let start = (k1 * l + r) * side + k2 * l;
                data.extend_from_slice(&z.values[start..start + l]);
            }
        }
    }
    PatchSet::new(Dim::Two, l, m, data, None)
}

/// Inverse of [`extract_patches_2d`].
pub fn tile_patches_2d(patches: &PatchSet) -> Result<Measurement2D> {
    if patches.dim != Dim::Two {
        return Err(Error::Shape("expected a 2D patch set".into()));
    }
    let (l, m) = (patches.l, patches.grid);
    let side = l * m;
    let mut values = vec![0.0; side * side];
    for k1 in 0..m {
        for k2 in 0..m {
            let p = patches.patch(k1 * m + k2);
            for r in 0..l {
                let start = (k1 * l + r) * side + k2 * l;
                values[start..start + l].copy_from_slice(&p[r * l..(r + 1) * l]);
            }
        }
    }
    Measurement2D::new(l, side, values)
}

/// Anchor offsets per patch, row-major `M x M`; `(L, L)` marks an empty patch.
pub fn anchor_offsets_2d(placements: &PlacementConfig2D) -> Vec<Shift2> {
    let (l, m) = (placements.l, placements.m);
    let mut omega = vec![Shift2::empty(l); m * m];
    for &(r, c) in &placements.anchors {
        let slot = &mut omega[(r / l) * m + c / l];
        debug_assert_eq!(*slot, Shift2::empty(l), "two anchors in one patch");
        *slot = Shift2::new(r % l, c % l);
    }
    omega
}

/// Group element of patch `(k1, k2)` from the offset grid. Neighbours with
/// a negative index count as empty.
pub(crate) fn group_from_offsets(
    omega: impl Fn(usize, usize) -> Shift2,
    l: usize,
    k1: usize,
    k2: usize,
) -> GroupElement2D {
    let empty = Shift2::empty(l);
    let left = if k2 > 0 { omega(k1, k2 - 1) } else { empty };
    let up = if k1 > 0 { omega(k1 - 1, k2) } else { empty };
    let diag = if k1 > 0 && k2 > 0 {
        omega(k1 - 1, k2 - 1)
    } else {
        empty
    };
    let diag = if diag == empty { Shift2::new(0, 0) } else { diag };
    GroupElement2D::new([omega(k1, k2), left, up, diag])
}

/// Row-major `M x M` grid of group elements.
pub fn latent_groups_2d(placements: &PlacementConfig2D) -> Vec<GroupElement2D> {
    let (l, m) = (placements.l, placements.m);
    let omega = anchor_offsets_2d(placements);
    let at = |a: usize, b: usize| omega[a * m + b];
    (0..m * m)
        .map(|i| group_from_offsets(at, l, i / m, i % m))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedSpec;

    fn sig(v: &[f64]) -> Signal1D {
        Signal1D::new(v.to_vec()).unwrap()
    }

    fn place(l: usize, m: usize, anchors: &[usize]) -> PlacementConfig1D {
        PlacementConfig1D::new(l, m, anchors.to_vec(), 0.5).unwrap()
    }

    fn clean_1d(x: &Signal1D, p: &PlacementConfig1D) -> Vec<f64> {
        let mut rng = SeedSpec::new(0).rng();
        synthesize_1d(x, p, NoiseSpec::noiseless(), &mut rng).unwrap().values
    }

    #[test]
    fn synthesize_1d_hand_cases() {
        let x = sig(&[1.0, 2.0]);
        assert_eq!(clean_1d(&x, &place(2, 2, &[0])), vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(clean_1d(&x, &place(2, 2, &[1])), vec![0.0, 1.0, 2.0, 0.0]);
        assert_eq!(clean_1d(&x, &place(2, 2, &[0, 2])), vec![1.0, 2.0, 1.0, 2.0]);
    }

    #[test]
    fn overlapping_placements_rejected() {
        let bad = PlacementConfig1D {
            l: 2,
            m: 3,
            anchors: vec![0, 1],
            lambda: 0.5,
        };
        let mut rng = SeedSpec::new(0).rng();
        assert!(matches!(
            synthesize_1d(&sig(&[1.0, 2.0]), &bad, NoiseSpec::noiseless(), &mut rng),
            Err(Error::OverlapViolation(_))
        ));
        assert!(PlacementConfig2D::new(2, 3, vec![(0, 0), (1, 1)], 1.0).is_err());
        assert!(PlacementConfig2D::new(2, 3, vec![(0, 0), (0, 2)], 1.0).is_ok());
    }

    #[test]
    fn extract_1d_hand_cases() {
        let z = Measurement1D::new(2, vec![0.0, 1.0, 2.0, 0.0]).unwrap();
        let p = extract_patches_1d(&z).unwrap();
        assert_eq!(p.patch(0), &[0.0, 1.0]);
        assert_eq!(p.patch(1), &[2.0, 0.0]);
        assert!(Measurement1D::new(2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn latent_1d_hand_cases() {
        let g = GroupElement1D::new;
        assert_eq!(latent_groups_1d(&place(2, 2, &[0])), vec![g(0, 0), g(0, 2)]);
        assert_eq!(latent_groups_1d(&place(2, 2, &[1])), vec![g(0, 1), g(1, 2)]);
        assert_eq!(latent_groups_1d(&place(3, 4, &[])), vec![g(0, 3); 4]);
    }

    #[test]
    fn placements_respect_spacing_and_range() {
        let mut rng = SeedSpec::new(11).rng();
        for &(l, m, lam) in &[(1, 50, 0.3), (3, 40, 0.5), (6, 20, 0.9)] {
            for _ in 0..50 {
                let p = sample_placements_1d(l, m, lam, &mut rng).unwrap();
                assert!(p.validate().is_ok());
            }
        }
        assert!(sample_placements_1d(2, 4, 1.0, &mut rng).is_err());
    }

    #[test]
    fn near_one_lambda_packs_back_to_back() {
        let mut rng = SeedSpec::new(5).rng();
        let p = sample_placements_1d(3, 10, 1.0 - 1e-12, &mut rng).unwrap();
        assert_eq!(p.anchors, (0..10).map(|i| 3 * i).collect::<Vec<_>>());
    }

    #[test]
    fn synthesize_2d_hand_cases() {
        let x = Signal2D::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let mut rng = SeedSpec::new(0).rng();
        let z = |anchors: Vec<(usize, usize)>, rng: &mut crate::rng::StreamRng| {
            let p = PlacementConfig2D::new(2, 2, anchors, 1.0).unwrap();
            synthesize_2d(&x, &p, NoiseSpec::noiseless(), rng).unwrap().values
        };
        #[rustfmt::skip]
        let origin = vec![
            1.0, 2.0, 0.0, 0.0,
            3.0, 4.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0,
        ];
        assert_eq!(z(vec![(0, 0)], &mut rng), origin);
        #[rustfmt::skip]
        let shifted = vec![
            0.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 2.0, 0.0,
            0.0, 3.0, 4.0, 0.0,
            0.0, 0.0, 0.0, 0.0,
        ];
        assert_eq!(z(vec![(1, 1)], &mut rng), shifted);
        let p = PlacementConfig2D::new(2, 3, vec![(0, 0), (0, 2)], 1.0).unwrap();
        let v = synthesize_2d(&x, &p, NoiseSpec::noiseless(), &mut rng).unwrap().values;
        assert_eq!(&v[0..6], &[1.0, 2.0, 1.0, 2.0, 0.0, 0.0]);
        assert_eq!(&v[6..12], &[3.0, 4.0, 3.0, 4.0, 0.0, 0.0]);
    }

    #[test]
    fn extract_2d_and_tile_round_trip() {
        let side = 6;
        let values: Vec<f64> = (0..side * side).map(|i| i as f64).collect();
        let z = Measurement2D::new(2, side, values.clone()).unwrap();
        let p = extract_patches_2d(&z).unwrap();
        assert_eq!(p.count(), 9);
        assert_eq!(p.patch(0), &[0.0, 1.0, 6.0, 7.0]);
        assert_eq!(p.patch(4), &[14.0, 15.0, 20.0, 21.0]);
        assert_eq!(tile_patches_2d(&p).unwrap().values, values);
        assert!(Measurement2D::new(2, 5, vec![0.0; 25]).is_err());
    }

    #[test]
    fn latent_2d_hand_cases() {
        let l = 2;
        let empty = PlacementConfig2D::new(l, 3, vec![], 1.0).unwrap();
        for g in latent_groups_2d(&empty) {
            assert_eq!(g, GroupElement2D::empty(l));
        }
        let p = PlacementConfig2D::new(l, 2, vec![(1, 1)], 1.0).unwrap();
        let g = latent_groups_2d(&p);
        let e = Shift2::empty(l);
        let off = Shift2::new(1, 1);
        assert_eq!(g[0].parts, [off, e, e, Shift2::new(0, 0)]);
        assert_eq!(g[1].parts, [e, off, e, Shift2::new(0, 0)]);
        assert_eq!(g[2].parts, [e, e, off, Shift2::new(0, 0)]);
        assert_eq!(g[3].parts, [e, e, e, off]);
    }
}
