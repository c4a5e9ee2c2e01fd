//! Census of contours whose volume contains the origin, by size.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::check_budget;
use crate::contour::grid::{bits, Grid, MAX_Q};
use crate::contour::{extract_contours, MaParams};
use crate::error::EnumerationError;
use crate::lattice::BoxWindow;
use crate::spin_model::SpinConfig;

use super::EnumOptions;

/// Support coordinates (flattened, sorted) and the spins on them.
type Key = (Vec<i32>, Vec<u8>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    pub d: usize,
    pub q: usize,
    pub window_side: usize,
    pub n_max: usize,
    pub configs: u64,
    /// `counts[n]` = number of distinct contours γ with 0 ∈ V(γ), |γ| = n.
    pub counts: Vec<u64>,
    /// ln(count_n)/n where count_n > 0.
    pub rates: Vec<Option<f64>>,
    pub c1: f64,
    /// Sizes where count_n > e^{(ln q + c₁) n}.
    pub exceeds: Vec<usize>,
    /// max_n (ln count_n / n − ln q).
    pub c1_estimate: Option<f64>,
}

impl CensusReport {
    pub fn c1_adequate(&self) -> bool {
        self.exceeds.is_empty()
    }
}

/// Enumerate every configuration of a `window_side`^d box under the
/// reference boundary, extract contours and count the distinct translates
/// with the origin in their volume.
pub fn contour_census(
    d: usize,
    q: usize,
    n_max: usize,
    window_side: usize,
    p: &MaParams,
    c1: f64,
    opts: &EnumOptions,
) -> Result<CensusReport, EnumerationError> {
    if d < 2 {
        return Err(EnumerationError::InvalidParameter("contours are defined for d >= 2".into()));
    }
    if q < 2 || q > MAX_Q {
        return Err(EnumerationError::InvalidParameter(format!("q = {q} out of range")));
    }
    let window = BoxWindow::centered(d, window_side);
    let n = window.len();
    let states = check_budget(q, n, opts.budget)?;
    let grid = if d == 2 { Grid::new(&window).ok() } else { None };
    let mut top = 0;
    while top < n && q.pow(top as u32) < 64 {
        top += 1;
    }
    let blocks = q.pow(top as u32);
    let per_block = states / blocks as u64;
    let parts = opts.exec.map_indexed(blocks, |b| -> Result<BTreeSet<Key>, EnumerationError> {
        let mut found = BTreeSet::new();
        let mut spins = vec![0u8; n];
        for k in 0..per_block {
            let mut idx = b as u64 * per_block + k;
            for s in spins.iter_mut() {
                *s = (idx % q as u64) as u8;
                idx /= q as u64;
            }
            match &grid {
                Some(g) => collect_grid(g, &spins, q, n_max, p, &mut found)?,
                None => collect_region(&window, &spins, q, n_max, p, &mut found)?,
            }
        }
        Ok(found)
    });
    let mut all = BTreeSet::new();
    for part in parts {
        all.extend(part?);
    }
    let mut counts = vec![0u64; n_max + 1];
    for (sup, _) in &all {
        counts[sup.len() / d] += 1;
    }
    let lnq = (q as f64).ln();
    let rates: Vec<Option<f64>> = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| (k > 0 && c > 0).then(|| (c as f64).ln() / k as f64))
        .collect();
    let exceeds = counts
        .iter()
        .enumerate()
        .filter(|&(k, &c)| c > 0 && (c as f64).ln() > (lnq + c1) * k as f64)
        .map(|(k, _)| k)
        .collect();
    let c1_estimate = rates.iter().flatten().map(|r| r - lnq).fold(None, |a: Option<f64>, r| Some(a.map_or(r, |a| a.max(r))));
    Ok(CensusReport {
        d,
        q,
        window_side,
        n_max,
        configs: states,
        counts,
        rates,
        c1,
        exceeds,
        c1_estimate,
    })
}

fn insert_translates(sites: &[Vec<i32>], spins: &[u8], volume: &[Vec<i32>], found: &mut BTreeSet<Key>) {
    for v in volume {
        let coords: Vec<i32> = sites
            .iter()
            .flat_map(|s| s.iter().zip(v).map(|(a, b)| a - b))
            .collect();
        found.insert((coords, spins.to_vec()));
    }
}

fn collect_grid(
    g: &Grid,
    spins: &[u8],
    q: usize,
    n_max: usize,
    p: &MaParams,
    found: &mut BTreeSet<Key>,
) -> Result<(), EnumerationError> {
    let mut planes = [0u128; MAX_Q];
    g.planes(spins, q, 0, &mut planes);
    for c in g.extract(spins, q, 0, p)? {
        if c.size() as usize > n_max {
            continue;
        }
        // cells are ordered row-major like sites, so the support stays sorted
        let cells: Vec<usize> = bits(c.support).collect();
        let sites: Vec<Vec<i32>> = cells.iter().map(|&cell| g.site(cell).coords().to_vec()).collect();
        let colors: Vec<u8> = cells
            .iter()
            .map(|&cell| (0..q).find(|&k| planes[k] >> cell & 1 == 1).unwrap() as u8)
            .collect();
        let vol: Vec<Vec<i32>> = bits(c.volume).map(|cell| g.site(cell).coords().to_vec()).collect();
        insert_translates(&sites, &colors, &vol, found);
    }
    Ok(())
}

fn collect_region(
    window: &BoxWindow,
    spins: &[u8],
    q: usize,
    n_max: usize,
    p: &MaParams,
    found: &mut BTreeSet<Key>,
) -> Result<(), EnumerationError> {
    let sigma = SpinConfig::new(window.clone(), q, spins.to_vec(), 0)?;
    for c in extract_contours(&sigma, p)?.contours() {
        if c.size() > n_max {
            continue;
        }
        let sites: Vec<Vec<i32>> = c.support().iter().map(|s| s.coords().to_vec()).collect();
        let vol: Vec<Vec<i32>> = c.volume().iter().map(|s| s.coords().to_vec()).collect();
        insert_translates(&sites, c.spins(), &vol, found);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;

    fn opts() -> EnumOptions {
        EnumOptions {
            exec: Exec::Sequential,
            ..Default::default()
        }
    }

    #[test]
    fn small_sizes_are_empty_and_single_flips_counted() {
        let p = MaParams::new(1.0, 9.0, 2).unwrap();
        let r = contour_census(2, 2, 6, 3, &p, 1.0, &opts()).unwrap();
        assert!(r.counts[..5].iter().all(|&c| c == 0));
        // one single-flip shape (color 1 at the center of a plus), 5 translates
        assert_eq!(r.counts[5], 5);
        assert!(r.c1_adequate());
    }

    #[test]
    fn grid_and_region_paths_agree() {
        let p = MaParams::new(1.5, 9.0, 2).unwrap();
        let w = BoxWindow::centered(2, 3);
        let g = Grid::new(&w).unwrap();
        let mut a = BTreeSet::new();
        let mut b = BTreeSet::new();
        for idx in 0..19683u32 {
            let mut x = idx;
            let spins: Vec<u8> = (0..9)
                .map(|_| {
                    let s = (x % 3) as u8;
                    x /= 3;
                    s
                })
                .collect();
            collect_grid(&g, &spins, 3, 30, &p, &mut a).unwrap();
            collect_region(&w, &spins, 3, 30, &p, &mut b).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn three_dimensional_census() {
        let p = MaParams::new(1.0, 12.0, 3).unwrap();
        let r = contour_census(3, 2, 7, 2, &p, 1.0, &opts()).unwrap();
        assert!(r.counts[..7].iter().all(|&c| c == 0));
        assert_eq!(r.counts[7], 7);
        assert!(contour_census(1, 2, 4, 4, &MaParams::new(1.0, 6.0, 1).unwrap(), 1.0, &opts()).is_err());
    }
}
