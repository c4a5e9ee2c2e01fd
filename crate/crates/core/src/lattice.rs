//! Finite-window geometry of the hypercubic lattice.
//!
//! Everything here works on finite point sets. The "unbounded component" of a
//! complement is found by flood-filling inside a bounding box inflated by one
//! site, which always contains a seed point outside the set.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::LatticeError;

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 4;

/// A point of ℤᵈ. Unused trailing coordinates are kept at zero so that
/// equality, hashing and ordering only depend on the used coordinates.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    dim: u8,
    coords: [i32; MAX_DIM],
}

impl Site {
    /// Panics if `coords` is empty or longer than [`MAX_DIM`].
    pub fn new(coords: &[i32]) -> Self {
        assert!(
            !coords.is_empty() && coords.len() <= MAX_DIM,
            "site dimension must be in 1..={MAX_DIM}"
        );
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Site {
            dim: coords.len() as u8,
            coords: c,
        }
    }

    pub fn origin(dim: usize) -> Self {
        Site::new(&vec![0; dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn coord(&self, axis: usize) -> i32 {
        self.coords[axis]
    }

    /// The site shifted by `delta` along `axis`.
    #[inline]
    pub fn step(&self, axis: usize, delta: i32) -> Self {
        let mut s = *self;
        s.coords[axis] += delta;
        s
    }

    pub fn add(&self, other: &Site) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = *self;
        for i in 0..self.dim() {
            s.coords[i] += other.coords[i];
        }
        s
    }

    pub fn sub(&self, other: &Site) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = *self;
        for i in 0..self.dim() {
            s.coords[i] -= other.coords[i];
        }
        s
    }

    /// The 2d nearest neighbours.
    pub fn neighbors(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.dim()).flat_map(move |axis| [self.step(axis, 1), self.step(axis, -1)])
    }

    pub fn l1(&self) -> i64 {
        self.coords().iter().map(|&c| (c as i64).abs()).sum()
    }

    pub fn norm(&self, norm: Norm) -> f64 {
        match norm {
            Norm::L1 => self.l1() as f64,
            Norm::L2 => self
                .coords()
                .iter()
                .map(|&c| (c as f64) * (c as f64))
                .sum::<f64>()
                .sqrt(),
            Norm::LInf => self
                .coords()
                .iter()
                .map(|&c| (c as i64).abs())
                .max()
                .unwrap_or(0) as f64,
        }
    }

    pub fn distance(&self, other: &Site, norm: Norm) -> f64 {
        self.sub(other).norm(norm)
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

impl Serialize for Site {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Site {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<i32>::deserialize(d)?;
        if v.is_empty() || v.len() > MAX_DIM {
            return Err(serde::de::Error::custom("site dimension out of range"));
        }
        Ok(Site::new(&v))
    }
}

/// Point norm used for distances and coupling decay.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    #[default]
    L2,
    #[serde(alias = "linf")]
    LInf,
}

impl std::str::FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            "linf" | "l-inf" | "max" => Ok(Norm::LInf),
            other => Err(format!("unknown norm `{other}` (expected l1, l2 or linf)")),
        }
    }
}

/// A finite set of sites of a fixed dimension, iterated in sorted order.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region {
    dim: usize,
    sites: BTreeSet<Site>,
}

impl Region {
    pub fn new(dim: usize) -> Self {
        Region {
            dim,
            sites: BTreeSet::new(),
        }
    }

    pub fn from_sites<I: IntoIterator<Item = Site>>(dim: usize, sites: I) -> Result<Self, LatticeError> {
        let mut r = Region::new(dim);
        for s in sites {
            if s.dim() != dim {
                return Err(LatticeError::DimensionMismatch {
                    expected: dim,
                    found: s.dim(),
                });
            }
            r.sites.insert(s);
        }
        Ok(r)
    }

    /// Builds a region from coordinate slices; panics on inconsistent dimensions.
    pub fn from_coords(dim: usize, coords: &[&[i32]]) -> Self {
        Region::from_sites(dim, coords.iter().map(|c| Site::new(c))).expect("consistent dimensions")
    }

    pub fn singleton(site: Site) -> Self {
        let mut r = Region::new(site.dim());
        r.sites.insert(site);
        r
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    #[inline]
    pub fn contains(&self, s: &Site) -> bool {
        self.sites.contains(s)
    }

    pub fn insert(&mut self, s: Site) -> bool {
        debug_assert_eq!(s.dim(), self.dim);
        self.sites.insert(s)
    }

    pub fn remove(&mut self, s: &Site) -> bool {
        self.sites.remove(s)
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &Site> + ExactSizeIterator + '_ {
        self.sites.iter()
    }

    pub fn first(&self) -> Option<&Site> {
        self.sites.iter().next()
    }

    pub fn union(&self, other: &Region) -> Region {
        Region {
            dim: self.dim,
            sites: self.sites.union(&other.sites).copied().collect(),
        }
    }

    pub fn intersection(&self, other: &Region) -> Region {
        Region {
            dim: self.dim,
            sites: self.sites.intersection(&other.sites).copied().collect(),
        }
    }

    pub fn difference(&self, other: &Region) -> Region {
        Region {
            dim: self.dim,
            sites: self.sites.difference(&other.sites).copied().collect(),
        }
    }

    pub fn symmetric_difference(&self, other: &Region) -> Region {
        Region {
            dim: self.dim,
            sites: self.sites.symmetric_difference(&other.sites).copied().collect(),
        }
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.sites.is_subset(&other.sites)
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        self.sites.is_disjoint(&other.sites)
    }

    pub fn translate(&self, by: &Site) -> Region {
        Region {
            dim: self.dim,
            sites: self.sites.iter().map(|s| s.add(by)).collect(),
        }
    }

    /// Inclusive coordinate bounds, `None` for the empty region.
    pub fn bounds(&self) -> Option<(Site, Site)> {
        let mut it = self.sites.iter();
        let first = *it.next()?;
        let (mut lo, mut hi) = (first, first);
        for s in it {
            for a in 0..self.dim {
                lo.coords[a] = lo.coords[a].min(s.coords[a]);
                hi.coords[a] = hi.coords[a].max(s.coords[a]);
            }
        }
        Some((lo, hi))
    }
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.sites.iter()).finish()
    }
}

impl<'a> IntoIterator for &'a Region {
    type Item = &'a Site;
    type IntoIter = std::collections::btree_set::Iter<'a, Site>;

    fn into_iter(self) -> Self::IntoIter {
        self.sites.iter()
    }
}

/// Axis-aligned box `lo ..= lo + shape - 1` with row-major indexing
/// (last axis fastest).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxWindow {
    pub lo: Vec<i32>,
    pub shape: Vec<usize>,
}

impl BoxWindow {
    pub fn new(lo: Vec<i32>, shape: Vec<usize>) -> Result<Self, LatticeError> {
        if lo.is_empty() || lo.len() > MAX_DIM || lo.len() != shape.len() {
            return Err(LatticeError::DimensionMismatch {
                expected: lo.len(),
                found: shape.len(),
            });
        }
        if shape.iter().any(|&n| n == 0) {
            return Err(LatticeError::EmptyWindow);
        }
        Ok(BoxWindow { lo, shape })
    }

    /// Box of side `side` in every direction containing the origin, as
    /// centered as possible (`-side/2 ..= side - 1 - side/2`).
    pub fn centered(dim: usize, side: usize) -> Self {
        assert!(side > 0 && (1..=MAX_DIM).contains(&dim));
        BoxWindow {
            lo: vec![-((side / 2) as i32); dim],
            shape: vec![side; dim],
        }
    }

    /// Centered box with independent side lengths per axis.
    pub fn centered_shape(shape: &[usize]) -> Self {
        BoxWindow {
            lo: shape.iter().map(|&n| -((n / 2) as i32)).collect(),
            shape: shape.to_vec(),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, s: &Site) -> bool {
        s.dim() == self.dim()
            && (0..self.dim()).all(|a| {
                let c = s.coord(a) - self.lo[a];
                c >= 0 && (c as usize) < self.shape[a]
            })
    }

    pub fn index_of(&self, s: &Site) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        let mut idx = 0usize;
        for a in 0..self.dim() {
            idx = idx * self.shape[a] + (s.coord(a) - self.lo[a]) as usize;
        }
        Some(idx)
    }

    pub fn site_at(&self, mut idx: usize) -> Site {
        let d = self.dim();
        let mut c = [0i32; MAX_DIM];
        for a in (0..d).rev() {
            c[a] = self.lo[a] + (idx % self.shape[a]) as i32;
            idx /= self.shape[a];
        }
        Site::new(&c[..d])
    }

    pub fn sites(&self) -> impl ExactSizeIterator<Item = Site> + '_ {
        (0..self.len()).map(move |i| self.site_at(i))
    }

    pub fn region(&self) -> Region {
        Region::from_sites(self.dim(), self.sites()).expect("window sites share its dimension")
    }

    /// The box grown by `by` sites on every side.
    pub fn inflate(&self, by: usize) -> BoxWindow {
        BoxWindow {
            lo: self.lo.iter().map(|&l| l - by as i32).collect(),
            shape: self.shape.iter().map(|&n| n + 2 * by).collect(),
        }
    }

    /// Bounding box of a nonempty region.
    pub fn bounding(region: &Region) -> Option<BoxWindow> {
        let (lo, hi) = region.bounds()?;
        let d = region.dim();
        Some(BoxWindow {
            lo: lo.coords()[..d].to_vec(),
            shape: (0..d).map(|a| (hi.coord(a) - lo.coord(a) + 1) as usize).collect(),
        })
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns `true` if the two elements were in different sets.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }
}

/// {y : |y - center|₁ ≤ radius}.
pub fn l1_ball(center: Site, radius: u32) -> Region {
    let d = center.dim();
    let r = radius as i32;
    let mut out = Region::new(d);
    let mut offset = vec![-r; d];
    loop {
        let s = Site::new(&offset);
        if s.l1() <= r as i64 {
            out.insert(center.add(&s));
        }
        // odometer over [-r, r]^d
        let mut axis = 0;
        loop {
            if axis == d {
                return out;
            }
            offset[axis] += 1;
            if offset[axis] <= r {
                break;
            }
            offset[axis] = -r;
            axis += 1;
        }
    }
}

/// Maximal nearest-neighbour connected pieces, ordered by their smallest site.
pub fn connected_components(a: &Region) -> Vec<Region> {
    let sites: Vec<Site> = a.iter().copied().collect();
    let mut uf = UnionFind::new(sites.len());
    for (i, s) in sites.iter().enumerate() {
        for n in s.neighbors() {
            // only look "forward" to visit each edge once
            if n > *s {
                if let Ok(j) = sites.binary_search(&n) {
                    uf.union(i, j);
                }
            }
        }
    }
    let mut comp_of_root: Vec<Option<usize>> = vec![None; sites.len()];
    let mut comps: Vec<Region> = Vec::new();
    for (i, s) in sites.iter().enumerate() {
        let r = uf.find(i);
        let k = *comp_of_root[r].get_or_insert_with(|| {
            comps.push(Region::new(a.dim()));
            comps.len() - 1
        });
        comps[k].insert(*s);
    }
    comps
}

/// V(A): the complement of the unbounded component of Aᶜ.
pub fn volume(a: &Region) -> Region {
    let Some(bbox) = BoxWindow::bounding(a) else {
        return Region::new(a.dim());
    };
    let grid = bbox.inflate(1);
    let n = grid.len();
    let mut blocked = vec![false; n];
    for s in a {
        blocked[grid.index_of(s).expect("inside bounding box")] = true;
    }
    let mut outside = vec![false; n];
    let mut queue = VecDeque::new();
    // index 0 is the low corner of the inflated box, never in A
    outside[0] = true;
    queue.push_back(0usize);
    while let Some(i) = queue.pop_front() {
        let s = grid.site_at(i);
        for nb in s.neighbors() {
            if let Some(j) = grid.index_of(&nb) {
                if !blocked[j] && !outside[j] {
                    outside[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    let mut v = Region::new(a.dim());
    for (i, &out) in outside.iter().enumerate() {
        if !out {
            v.insert(grid.site_at(i));
        }
    }
    v
}

/// I(A) = V(A) \ A.
pub fn interior(a: &Region) -> Region {
    volume(a).difference(a)
}

/// Edge, inner and exterior boundaries of a finite set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Boundaries {
    /// Pairs `(x, y)` with `x ∈ A`, `y ∉ A`, `|x - y|₁ = 1`.
    pub edge: Vec<(Site, Site)>,
    pub inner: Region,
    pub exterior: Region,
}

pub fn boundaries(a: &Region) -> Boundaries {
    let mut edge = Vec::new();
    let mut inner = Region::new(a.dim());
    let mut exterior = Region::new(a.dim());
    for x in a {
        for y in x.neighbors() {
            if !a.contains(&y) {
                edge.push((*x, y));
                inner.insert(*x);
                exterior.insert(y);
            }
        }
    }
    Boundaries {
        edge,
        inner,
        exterior,
    }
}

/// Minimum pairwise distance between two nonempty sets.
pub fn set_distance(a: &Region, b: &Region, norm: Norm) -> Result<f64, LatticeError> {
    if a.is_empty() || b.is_empty() {
        return Err(LatticeError::EmptyRegion);
    }
    let mut best = f64::INFINITY;
    for x in a {
        for y in b {
            let d = x.distance(y, norm);
            if d < best {
                best = d;
                if best == 0.0 {
                    return Ok(0.0);
                }
            }
        }
    }
    Ok(best)
}
