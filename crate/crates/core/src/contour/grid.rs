//! Bitboard contour extraction for small two-dimensional windows.
//!
//! The window is embedded in a grid padded by two cells on every side and
//! each cell is one bit of a `u128`, so windows up to 7×7 fit. Incorrect
//! points, volumes and components are computed with shifts and flood fills.

use crate::error::ContourError;
use crate::lattice::{BoxWindow, Norm, Region, Site};

use super::partition::MaParams;

pub const MAX_Q: usize = 16;
const PAD: usize = 2;

#[derive(Clone, Debug)]
pub struct Grid {
    rows: usize,
    cols: usize,
    pw: usize,
    ph: usize,
    lo: [i32; 2],
    all: u128,
    ring: u128,
    window: u128,
    not_first_col: u128,
    not_last_col: u128,
    cell_of: Vec<u8>,
}

impl Grid {
    pub fn new(window: &BoxWindow) -> Result<Self, ContourError> {
        if window.dim() != 2 {
            return Err(ContourError::GridTooLarge(format!("dimension {} (needs 2)", window.dim())));
        }
        let (rows, cols) = (window.shape[0], window.shape[1]);
        let (ph, pw) = (rows + 2 * PAD, cols + 2 * PAD);
        if ph * pw > 128 {
            return Err(ContourError::GridTooLarge(format!("{rows}x{cols}")));
        }
        let cells = ph * pw;
        let all = if cells == 128 { u128::MAX } else { (1u128 << cells) - 1 };
        let mut ring = 0u128;
        let mut not_first_col = 0u128;
        let mut not_last_col = 0u128;
        let mut win = 0u128;
        for r in 0..ph {
            for c in 0..pw {
                let bit = 1u128 << (r * pw + c);
                if r == 0 || c == 0 || r == ph - 1 || c == pw - 1 {
                    ring |= bit;
                }
                if c != 0 {
                    not_first_col |= bit;
                }
                if c != pw - 1 {
                    not_last_col |= bit;
                }
                if (PAD..PAD + rows).contains(&r) && (PAD..PAD + cols).contains(&c) {
                    win |= bit;
                }
            }
        }
        let cell_of = (0..rows * cols)
            .map(|i| ((i / cols + PAD) * pw + i % cols + PAD) as u8)
            .collect();
        Ok(Self {
            rows,
            cols,
            pw,
            ph,
            lo: [window.lo[0], window.lo[1]],
            all,
            ring,
            window: win,
            not_first_col,
            not_last_col,
            cell_of,
        })
    }

    pub fn cells(&self) -> usize {
        self.pw * self.ph
    }

    pub fn window_len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn all(&self) -> u128 {
        self.all
    }

    pub fn window_mask(&self) -> u128 {
        self.window
    }

    /// Cell of window index `i` (row-major).
    #[inline]
    pub fn cell(&self, i: usize) -> usize {
        self.cell_of[i] as usize
    }

    /// Window index of `cell`, if it lies in the window.
    #[inline]
    pub fn window_index(&self, cell: usize) -> Option<usize> {
        let (r, c) = (cell / self.pw, cell % self.pw);
        if (PAD..PAD + self.rows).contains(&r) && (PAD..PAD + self.cols).contains(&c) {
            Some((r - PAD) * self.cols + (c - PAD))
        } else {
            None
        }
    }

    /// Lattice coordinates of `cell`.
    #[inline]
    pub fn coords(&self, cell: usize) -> [i32; 2] {
        [
            self.lo[0] + (cell / self.pw) as i32 - PAD as i32,
            self.lo[1] + (cell % self.pw) as i32 - PAD as i32,
        ]
    }

    pub fn site(&self, cell: usize) -> Site {
        Site::new(&self.coords(cell))
    }

    pub fn to_region(&self, mask: u128) -> Region {
        let mut r = Region::new(2);
        for cell in bits(mask) {
            r.insert(self.site(cell));
        }
        r
    }

    /// Mask of a region (None if a site lies off the grid).
    pub fn from_region(&self, region: &Region) -> Option<u128> {
        let mut m = 0u128;
        for s in region {
            let r = s.coord(0) - self.lo[0] + PAD as i32;
            let c = s.coord(1) - self.lo[1] + PAD as i32;
            if r < 0 || c < 0 || r as usize >= self.ph || c as usize >= self.pw {
                return None;
            }
            m |= 1u128 << (r as usize * self.pw + c as usize);
        }
        Some(m)
    }

    #[inline]
    pub fn neighbors(&self, m: u128) -> u128 {
        let east = (m << 1) & self.not_first_col;
        let west = (m >> 1) & self.not_last_col;
        let south = (m << self.pw) & self.all;
        let north = m >> self.pw;
        east | west | south | north
    }

    /// Cells of `within` connected to `seed` inside `within`.
    #[inline]
    pub fn flood(&self, mut seed: u128, within: u128) -> u128 {
        seed &= within;
        loop {
            let next = (seed | self.neighbors(seed)) & within;
            if next == seed {
                return seed;
            }
            seed = next;
        }
    }

    /// V(A): A plus its bounded holes. `a` must avoid the outer ring.
    #[inline]
    pub fn volume(&self, a: u128) -> u128 {
        let free = self.all & !a;
        self.all & !self.flood(self.ring & free, free)
    }

    /// ℓ₁ connected components, ordered by lowest cell.
    pub fn components(&self, mut m: u128) -> Vec<u128> {
        let mut out = Vec::new();
        while m != 0 {
            let low = m & m.wrapping_neg();
            let comp = self.flood(low, m);
            out.push(comp);
            m &= !comp;
        }
        out
    }

    /// One plane per color over the whole grid; padding gets `exterior`.
    #[inline]
    pub fn planes(&self, spins: &[u8], q: usize, exterior: u8, out: &mut [u128; MAX_Q]) {
        out[..q].iter_mut().for_each(|p| *p = 0);
        for (i, &s) in spins.iter().enumerate() {
            out[s as usize] |= 1u128 << self.cell_of[i];
        }
        out[exterior as usize] |= self.all & !self.window;
    }

    #[inline]
    pub fn incorrect(&self, planes: &[u128; MAX_Q], q: usize) -> u128 {
        let mut m = 0u128;
        for p in &planes[..q] {
            m |= p & self.neighbors(self.all & !p);
        }
        m
    }

    /// The unique color on `cells`, if it is unique.
    #[inline]
    fn color_on(&self, planes: &[u128; MAX_Q], q: usize, cells: u128) -> Option<Option<u8>> {
        let mut found = None;
        for (c, p) in planes[..q].iter().enumerate() {
            if p & cells != 0 {
                if found.is_some() {
                    return None;
                }
                found = Some(c as u8);
            }
        }
        Some(found)
    }

    fn distance(&self, a: u128, b: u128, norm: Norm) -> f64 {
        let mut best = f64::INFINITY;
        for ca in bits(a) {
            let x = self.coords(ca);
            for cb in bits(b) {
                let y = self.coords(cb);
                let (dr, dc) = ((x[0] - y[0]).abs() as f64, (x[1] - y[1]).abs() as f64);
                let d = match norm {
                    Norm::L1 => dr + dc,
                    Norm::L2 => (dr * dr + dc * dc).sqrt(),
                    Norm::LInf => dr.max(dc),
                };
                best = best.min(d);
            }
        }
        best
    }

    /// Finest (M, a)-partition of `a` (merge closure of its components).
    pub fn partition(&self, a: u128, p: &MaParams) -> Vec<u128> {
        let comps = self.components(a);
        if comps.len() <= 1 {
            return comps;
        }
        // every threshold is at least M; no two cells are further apart than
        // the grid's ℓ₁ diameter
        if p.m >= (self.pw + self.ph - 2) as f64 {
            return vec![a];
        }
        let mut classes: Vec<Option<u128>> = comps.into_iter().map(Some).collect();
        let n = classes.len();
        let mut vols: Vec<usize> = classes.iter().map(|c| self.volume(c.unwrap()).count_ones() as usize).collect();
        let mut dist = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let d = self.distance(classes[i].unwrap(), classes[j].unwrap(), p.norm);
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
                    if dist[i][j] <= p.threshold(vols[i], vols[j], 2) {
                        let b = classes[j].take().unwrap();
                        let merged_mask = classes[i].unwrap() | b;
                        classes[i] = Some(merged_mask);
                        vols[i] = self.volume(merged_mask).count_ones() as usize;
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
        let mut out: Vec<u128> = classes.into_iter().flatten().collect();
        out.sort_by_key(|m| m.trailing_zeros());
        out
    }

    /// Build the contour with support `support` from the color planes.
    pub fn contour(&self, planes: &[u128; MAX_Q], q: usize, exterior: u8, support: u128) -> Result<GridContour, ContourError> {
        let volume = self.volume(support);
        let inner_boundary = volume & self.neighbors(self.all & !volume);
        let exterior_label = self
            .color_on(planes, q, inner_boundary)
            .ok_or_else(|| ContourError::LabelInconsistency("exterior boundary of V(γ)".into()))?
            .unwrap_or(exterior);
        let mut interiors = [0u128; MAX_Q];
        let mut components = Vec::new();
        let interior = volume & !support;
        if interior != 0 {
            for comp in self.components(interior) {
                let vk = self.volume(comp);
                let around = self.neighbors(vk) & !vk;
                let label = self
                    .color_on(planes, q, around)
                    .ok_or_else(|| ContourError::LabelInconsistency("boundary of an interior component".into()))?
                    .unwrap_or(exterior);
                interiors[label as usize] |= comp;
                components.push((comp, label));
            }
        }
        Ok(GridContour {
            support,
            volume,
            exterior_label,
            interiors,
            components,
        })
    }

    /// Γ(σ) for window spins `spins` under exterior color `exterior`.
    pub fn extract(&self, spins: &[u8], q: usize, exterior: u8, p: &MaParams) -> Result<Vec<GridContour>, ContourError> {
        let mut planes = [0u128; MAX_Q];
        self.planes(spins, q, exterior, &mut planes);
        let incorrect = self.incorrect(&planes, q);
        self.partition(incorrect, p)
            .into_iter()
            .map(|s| self.contour(&planes, q, exterior, s))
            .collect()
    }

    /// τ_γ applied to window spins (exterior color must be 0).
    pub fn erase(&self, spins: &[u8], q: usize, gamma: &GridContour, out: &mut [u8]) -> Result<(), ContourError> {
        out.copy_from_slice(spins);
        let shifted: u128 = gamma.interiors[1..q].iter().fold(0, |a, b| a | b);
        if shifted & !self.window != 0 {
            let cell = (shifted & !self.window).trailing_zeros() as usize;
            return Err(ContourError::EscapesWindow(format!("{:?}", self.site(cell))));
        }
        for (i, o) in out.iter_mut().enumerate() {
            let bit = 1u128 << self.cell_of[i];
            if gamma.support & bit != 0 {
                *o = 0;
            } else if shifted & bit != 0 {
                let n = (1..q).find(|&n| gamma.interiors[n] & bit != 0).unwrap();
                *o = ((*o as usize + q - n) % q) as u8;
            }
        }
        Ok(())
    }
}

/// A contour on the bitboard grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridContour {
    pub support: u128,
    pub volume: u128,
    pub exterior_label: u8,
    pub interiors: [u128; MAX_Q],
    pub components: Vec<(u128, u8)>,
}

impl GridContour {
    pub fn size(&self) -> u32 {
        self.support.count_ones()
    }

    /// I′ = ⋃_{n≠0} I_n.
    pub fn i_prime(&self, q: usize) -> u128 {
        self.interiors[1..q].iter().fold(0, |a, b| a | b)
    }
}

/// Indices of external contours.
pub fn external_indices(contours: &[GridContour]) -> Vec<usize> {
    (0..contours.len())
        .filter(|&i| {
            contours
                .iter()
                .enumerate()
                .all(|(j, o)| i == j || contours[i].support & o.volume == 0)
        })
        .collect()
}

/// Iterate the set bits of `m`, lowest first.
#[inline]
pub fn bits(mut m: u128) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let b = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(b)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::{extract_contours, incorrect_points};
    use crate::lattice::{interior, volume};
    use crate::spin_model::SpinConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn size_limits() {
        assert!(Grid::new(&BoxWindow::centered(2, 7)).is_ok());
        assert!(Grid::new(&BoxWindow::centered(2, 8)).is_err());
        assert!(Grid::new(&BoxWindow::centered(3, 2)).is_err());
    }

    #[test]
    fn region_round_trip_and_volume() {
        let w = BoxWindow::centered(2, 5);
        let g = Grid::new(&w).unwrap();
        let mut ring = Region::new(2);
        for x in -1..=1 {
            for y in -1..=1 {
                if (x, y) != (0, 0) {
                    ring.insert(Site::new(&[x, y]));
                }
            }
        }
        let m = g.from_region(&ring).unwrap();
        assert_eq!(g.to_region(m), ring);
        assert_eq!(g.to_region(g.volume(m)), volume(&ring));
        assert_eq!(g.to_region(g.volume(m) & !m), interior(&ring));
        let b = g.from_region(&Region::singleton(Site::new(&[3, 3]))).unwrap();
        assert_eq!(g.components(b | m).len(), 2);
    }

    fn random_spins(rng: &mut ChaCha8Rng, n: usize, q: usize, bias: f64) -> Vec<u8> {
        (0..n)
            .map(|_| if rng.random_bool(bias) { 0 } else { rng.random_range(0..q) as u8 })
            .collect()
    }

    /// The bitboard route and the set-based route agree on supports, labels,
    /// interiors, external sets and erasures.
    #[test]
    fn agrees_with_region_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..600 {
            let side = 3 + trial % 5;
            let w = BoxWindow::centered(2, side);
            let g = Grid::new(&w).unwrap();
            let q = 2 + trial % 3;
            let spins = random_spins(&mut rng, w.len(), q, 0.6);
            let sigma = SpinConfig::new(w.clone(), q, spins.clone(), 0).unwrap();
            let m = [0.5, 1.0, 2.0, 40.0][trial % 4];
            let p = MaParams::new(m, 2.5, 2).unwrap();
            let mut planes = [0u128; MAX_Q];
            g.planes(&spins, q, 0, &mut planes);
            assert_eq!(g.to_region(g.incorrect(&planes, q)), incorrect_points(&sigma));
            let fam = extract_contours(&sigma, &p);
            let grid = g.extract(&spins, q, 0, &p);
            match (fam, grid) {
                (Ok(fam), Ok(grid)) => {
                    assert_eq!(fam.len(), grid.len());
                    for (c, gc) in fam.contours().iter().zip(&grid) {
                        assert_eq!(c.support(), &g.to_region(gc.support));
                        assert_eq!(c.volume(), &g.to_region(gc.volume));
                        assert_eq!(c.exterior_label(), gc.exterior_label);
                        for n in 0..q {
                            assert_eq!(c.interior(n as u8), &g.to_region(gc.interiors[n]));
                        }
                    }
                    let ext = external_indices(&grid);
                    assert_eq!(ext, fam.external_indices());
                    for &e in &ext {
                        let mut out = vec![0u8; spins.len()];
                        let a = g.erase(&spins, q, &grid[e], &mut out);
                        let b = fam.erase(&sigma, e);
                        match (a, b) {
                            (Ok(()), Ok(t)) => assert_eq!(t.spins(), &out[..]),
                            (Err(_), Err(_)) => {}
                            (x, y) => panic!("erase disagreement: {x:?} vs {y:?}"),
                        }
                    }
                }
                (Err(_), Err(_)) => {}
                (a, b) => panic!("extraction disagreement: {a:?} vs {b:?}"),
            }
        }
    }
}
