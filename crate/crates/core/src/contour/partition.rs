//! Finest (M, a)-partition by merge closure.

use serde::{Deserialize, Serialize};

use crate::error::ContourError;
use crate::lattice::{connected_components, set_distance, volume, Norm, Region};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaParams {
    pub m: f64,
    pub a: f64,
    #[serde(default)]
    pub norm: Norm,
}

impl MaParams {
    pub fn new(m: f64, a: f64, dim: usize) -> Result<Self, ContourError> {
        Self::with_norm(m, a, dim, Norm::default())
    }

    pub fn with_norm(m: f64, a: f64, dim: usize, norm: Norm) -> Result<Self, ContourError> {
        if !(m > 0.0) || m.is_nan() {
            return Err(ContourError::InvalidParams(format!("M must be positive, got {m}")));
        }
        if !(a > dim as f64) || !a.is_finite() {
            return Err(ContourError::InvalidParams(format!("a must exceed d = {dim}, got {a}")));
        }
        Ok(Self { m, a, norm })
    }

    /// a = 3(d+1)/((α−d)∧1); `alpha = None` means nearest neighbor.
    pub fn default_a(dim: usize, alpha: Option<f64>) -> f64 {
        let gap = alpha.map_or(1.0, |al| (al - dim as f64).min(1.0));
        3.0 * (dim as f64 + 1.0) / gap
    }

    /// Merge threshold M·min(|V|,|V′|)^{a/(d+1)}.
    pub fn threshold(&self, vol_a: usize, vol_b: usize, dim: usize) -> f64 {
        self.m * (vol_a.min(vol_b) as f64).powf(self.a / (dim as f64 + 1.0))
    }
}

/// Merge closure starting from the ℓ₁ components of `a`. Classes are returned
/// sorted by their smallest site.
pub fn ma_partition(a: &Region, p: &MaParams) -> Vec<Region> {
    let comps = connected_components(a);
    let order: Vec<usize> = (0..comps.len()).collect();
    merge_closure(comps, &order, p, a.dim())
}

/// Same closure, scanning the initial components in the given order.
pub fn ma_partition_ordered(a: &Region, p: &MaParams, order: &[usize]) -> Vec<Region> {
    let comps = connected_components(a);
    assert_eq!(order.len(), comps.len(), "order must permute the components");
    merge_closure(comps, order, p, a.dim())
}

pub fn component_count(a: &Region) -> usize {
    connected_components(a).len()
}

fn merge_closure(comps: Vec<Region>, order: &[usize], p: &MaParams, dim: usize) -> Vec<Region> {
    let mut classes: Vec<Option<Region>> = order.iter().map(|&i| Some(comps[i].clone())).collect();
    let n = classes.len();
    let mut vols: Vec<usize> = classes.iter().map(|c| volume(c.as_ref().unwrap()).len()).collect();
    // pairwise distances; merging takes the minimum
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = set_distance(classes[i].as_ref().unwrap(), classes[j].as_ref().unwrap(), p.norm)
                .expect("components are nonempty");
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    loop {
        let mut merged = false;
        'scan: for i in 0..n {
            if classes[i].is_none() {
                continue;
            }
            for j in 0..n {
                if i == j || classes[j].is_none() {
                    continue;
                }
                if dist[i][j] <= p.threshold(vols[i], vols[j], dim) {
                    let b = classes[j].take().unwrap();
                    let a = classes[i].as_mut().unwrap();
                    *a = a.union(&b);
                    vols[i] = volume(a).len();
                    for k in 0..n {
                        if k != i && classes[k].is_some() {
                            let d = dist[i][k].min(dist[j][k]);
                            dist[i][k] = d;
                            dist[k][i] = d;
                        }
                    }
                    merged = true;
                    break 'scan;
                }
            }
        }
        if !merged {
            break;
        }
    }
    let mut out: Vec<Region> = classes.into_iter().flatten().collect();
    out.sort_by(|x, y| x.first().cmp(&y.first()));
    out
}

/// Whether every class satisfies condition (B) against every other.
pub fn satisfies_condition_b(classes: &[Region], p: &MaParams) -> bool {
    for (i, a) in classes.iter().enumerate() {
        for b in &classes[i + 1..] {
            let d = set_distance(a, b, p.norm).expect("classes are nonempty");
            if d <= p.threshold(volume(a).len(), volume(b).len(), a.dim()) {
                return false;
            }
        }
    }
    true
}

/// Pairs (i, j) where class j meets more than one connected component of the
/// complement of class i.
pub fn a1_violations(classes: &[Region]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, a) in classes.iter().enumerate() {
        for (j, b) in classes.iter().enumerate() {
            if i != j && complement_components_met(a, b) > 1 {
                out.push((i, j));
            }
        }
    }
    out
}

/// Number of connected components of `a`ᶜ that `b` meets.
fn complement_components_met(a: &Region, b: &Region) -> usize {
    use crate::lattice::{BoxWindow, UnionFind};
    let both = a.union(b);
    let bx = BoxWindow::bounding(&both).expect("nonempty").inflate(1);
    let n = bx.len();
    let mut uf = UnionFind::new(n + 1); // slot n is "outside the box"
    let free = |idx: usize| !a.contains(&bx.site_at(idx));
    for idx in 0..n {
        if !free(idx) {
            continue;
        }
        let s = bx.site_at(idx);
        for nb in s.neighbors() {
            match bx.index_of(&nb) {
                Some(j) if free(j) => {
                    uf.union(idx, j);
                }
                Some(_) => {}
                None => {
                    uf.union(idx, n);
                }
            }
        }
    }
    let mut roots: Vec<usize> = b.iter().filter(|s| !a.contains(s)).map(|s| uf.find(bx.index_of(s).unwrap())).collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Site;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(m: f64) -> MaParams {
        MaParams::new(m, 9.0, 2).unwrap()
    }

    #[test]
    fn singleton_examples() {
        let far = Region::from_coords(2, &[&[0, 0], &[5, 0]]);
        assert_eq!(ma_partition(&far, &p(4.0)).len(), 2);
        assert_eq!(ma_partition(&far, &p(5.0)).len(), 1);
        assert!(ma_partition(&Region::new(2), &p(1.0)).is_empty());
    }

    #[test]
    fn default_a_values() {
        assert_eq!(MaParams::default_a(2, Some(3.0)), 9.0);
        assert_eq!(MaParams::default_a(2, Some(2.5)), 18.0);
        assert_eq!(MaParams::default_a(1, None), 6.0);
        assert!(MaParams::new(1.0, 2.0, 2).is_err());
        assert!(MaParams::new(0.0, 9.0, 2).is_err());
    }

    #[test]
    fn merging_cascades() {
        // a big ring and a point: the ring's volume makes the threshold large
        let mut ring = Region::new(2);
        for x in 0..5 {
            for y in 0..5 {
                if x == 0 || y == 0 || x == 4 || y == 4 {
                    ring.insert(Site::new(&[x, y]));
                }
            }
        }
        let pt = Region::singleton(Site::new(&[12, 2]));
        let all = ring.union(&pt);
        // min volume is 1 so the point merges only if dist ≤ M
        assert_eq!(ma_partition(&all, &p(7.0)).len(), 2);
        assert_eq!(ma_partition(&all, &p(8.0)).len(), 1);
    }

    #[test]
    fn nested_ring_violates_a1_only_when_split() {
        let mut outer = Region::new(2);
        for x in -3i32..=3 {
            for y in -3i32..=3 {
                if x.abs() == 3 || y.abs() == 3 {
                    outer.insert(Site::new(&[x, y]));
                }
            }
        }
        let inner = Region::singleton(Site::origin(2));
        assert!(a1_violations(&[outer.clone(), inner.clone()]).is_empty());
        let across = Region::from_coords(2, &[&[0, 0], &[0, 5]]);
        assert_eq!(a1_violations(&[outer.clone(), across.clone()]), vec![(0, 1)]);
        let gap = Region::from_coords(2, &[&[0, 3]]);
        assert!(a1_violations(&[outer.difference(&gap), across]).is_empty());
    }

    fn random_region(rng: &mut ChaCha8Rng, n: usize, span: i32) -> Region {
        use rand::Rng;
        let mut r = Region::new(2);
        for _ in 0..n {
            r.insert(Site::new(&[rng.random_range(-span..=span), rng.random_range(-span..=span)]));
        }
        r
    }

    #[test]
    fn order_independence() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..200 {
            let r = random_region(&mut rng, 4 + trial % 12, 12);
            let params = MaParams::new(0.5 + (trial % 5) as f64, 2.5 + (trial % 3) as f64, 2).unwrap();
            let base = ma_partition(&r, &params);
            let mut order: Vec<usize> = (0..component_count(&r)).collect();
            order.shuffle(&mut rng);
            assert_eq!(ma_partition_ordered(&r, &params, &order), base);
            assert!(satisfies_condition_b(&base, &params));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn partition_covers_exactly(seed in any::<u64>(), m in 0.5f64..6.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = random_region(&mut rng, 10, 8);
            let parts = ma_partition(&r, &MaParams::new(m, 3.0, 2).unwrap());
            let total: usize = parts.iter().map(|c| c.len()).sum();
            prop_assert_eq!(total, r.len());
            let mut u = Region::new(2);
            for c in &parts { u = u.union(c); }
            prop_assert_eq!(u, r);
        }
    }
}
