//! Pairwise couplings J_xy and their window tables.

use serde::{Deserialize, Serialize};

use super::lattice_sum::{c_alpha, LatticeSum};
use crate::error::InteractionError;
use crate::exec::Exec;
use crate::lattice::{BoxWindow, Norm, Region, Site, MAX_DIM};
use crate::numeric::NeumaierSum;

/// Windows with at most this many sites get a materialized displacement table.
pub const DEFAULT_TABLE_BUDGET: usize = 4096;

const C_ALPHA_TOL: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Range {
    /// J_xy = J / |x − y|^α.
    LongRange { alpha: f64 },
    /// J_xy = J · 1{|x − y|₁ = 1}.
    NearestNeighbor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingKernel {
    dim: usize,
    j: f64,
    range: Range,
    norm: Norm,
    /// Σ_{y≠0} J_{0y}.
    total: LatticeSum,
}

impl CouplingKernel {
    pub fn long_range(dim: usize, j: f64, alpha: f64, norm: Norm) -> Result<Self, InteractionError> {
        check_common(dim, j)?;
        let c = c_alpha(dim, alpha, norm, C_ALPHA_TOL)?;
        Ok(Self {
            dim,
            j,
            range: Range::LongRange { alpha },
            norm,
            total: LatticeSum {
                value: j * c.value,
                error_bound: j * c.error_bound,
            },
        })
    }

    pub fn nearest_neighbor(dim: usize, j: f64) -> Result<Self, InteractionError> {
        check_common(dim, j)?;
        Ok(Self {
            dim,
            j,
            range: Range::NearestNeighbor,
            norm: Norm::L1,
            total: LatticeSum {
                value: 2.0 * dim as f64 * j,
                error_bound: 0.0,
            },
        })
    }

    pub fn new(dim: usize, j: f64, range: Range, norm: Norm) -> Result<Self, InteractionError> {
        match range {
            Range::LongRange { alpha } => Self::long_range(dim, j, alpha, norm),
            Range::NearestNeighbor => Self::nearest_neighbor(dim, j),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn range(&self) -> Range {
        self.range
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.range {
            Range::LongRange { alpha } => Some(alpha),
            Range::NearestNeighbor => None,
        }
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn is_long_range(&self) -> bool {
        matches!(self.range, Range::LongRange { .. })
    }

    /// c_α for long-range kernels.
    pub fn c_alpha(&self) -> Option<LatticeSum> {
        self.alpha().map(|_| LatticeSum {
            value: self.total.value / self.j,
            error_bound: self.total.error_bound / self.j,
        })
    }

    /// Σ_{y≠x} J_xy over all of ℤᵈ.
    pub fn total_coupling(&self) -> LatticeSum {
        self.total
    }

    /// J for the displacement `delta` (coordinates beyond `dim` must be 0).
    #[inline]
    pub fn coupling_offset(&self, delta: &[i32]) -> f64 {
        match self.range {
            Range::NearestNeighbor => {
                let l1: i64 = delta.iter().map(|&c| (c as i64).abs()).sum();
                if l1 == 1 {
                    self.j
                } else {
                    0.0
                }
            }
            Range::LongRange { alpha } => match self.norm {
                Norm::L2 => {
                    let sq: i64 = delta.iter().map(|&c| c as i64 * c as i64).sum();
                    if sq == 0 {
                        0.0
                    } else {
                        self.j * (sq as f64).powf(-alpha / 2.0)
                    }
                }
                Norm::L1 => {
                    let r: i64 = delta.iter().map(|&c| (c as i64).abs()).sum();
                    if r == 0 {
                        0.0
                    } else {
                        self.j * (r as f64).powf(-alpha)
                    }
                }
                Norm::LInf => {
                    let r = delta.iter().map(|&c| (c as i64).abs()).max().unwrap_or(0);
                    if r == 0 {
                        0.0
                    } else {
                        self.j * (r as f64).powf(-alpha)
                    }
                }
            },
        }
    }

    pub fn coupling(&self, x: &Site, y: &Site) -> f64 {
        self.coupling_offset(y.sub(x).coords())
    }

    /// Σ_{y ∉ region} J_xy, evaluated exactly as the total minus the finite
    /// inner sum.
    pub fn exterior_coupling(&self, x: &Site, region: &Region) -> f64 {
        let mut inner = NeumaierSum::new();
        for y in region {
            if y != x {
                inner.add(self.coupling(x, y));
            }
        }
        (self.total.value - inner.value()).max(0.0)
    }

    /// Surface coupling F_Λ = Σ_{x∈Λ, y∉Λ} J_xy.
    pub fn surface_coupling(&self, region: &Region) -> LatticeSum {
        if region.is_empty() {
            return LatticeSum { value: 0.0, error_bound: 0.0 };
        }
        if let Range::NearestNeighbor = self.range {
            let edges = crate::lattice::boundaries(region).edge.len();
            return LatticeSum {
                value: self.j * edges as f64,
                error_bound: 0.0,
            };
        }
        let sites: Vec<&Site> = region.iter().collect();
        let mut pairs = NeumaierSum::new();
        for (i, x) in sites.iter().enumerate() {
            for y in &sites[i + 1..] {
                pairs.add(self.coupling(x, y));
            }
        }
        let n = sites.len() as f64;
        let value = (n * self.total.value - 2.0 * pairs.value()).max(0.0);
        LatticeSum {
            value,
            error_bound: n * self.total.error_bound + value * 8.0 * f64::EPSILON * n.max(1.0),
        }
    }
}

fn check_common(dim: usize, j: f64) -> Result<(), InteractionError> {
    if dim == 0 || dim > MAX_DIM {
        return Err(InteractionError::InvalidParameter(format!(
            "dimension must be in 1..={MAX_DIM}, got {dim}"
        )));
    }
    if !(j > 0.0) || !j.is_finite() {
        return Err(InteractionError::InvalidParameter(format!("J must be positive, got {j}")));
    }
    Ok(())
}

/// Couplings between the sites of a box window, indexed by row-major site
/// index, plus each site's exact coupling to the complement of the window.
#[derive(Clone, Debug)]
pub struct KernelTable {
    kernel: CouplingKernel,
    window: BoxWindow,
    coords: Vec<[i32; MAX_DIM]>,
    strides: Vec<usize>,
    offsets: Vec<i32>,
    table: Option<Vec<f64>>,
    exterior: Vec<f64>,
}

impl KernelTable {
    pub fn new(kernel: &CouplingKernel, window: &BoxWindow) -> Self {
        Self::with_budget(kernel, window, DEFAULT_TABLE_BUDGET, Exec::default())
    }

    pub fn with_budget(kernel: &CouplingKernel, window: &BoxWindow, budget: usize, exec: Exec) -> Self {
        let dim = window.dim();
        let shape = &window.shape;
        let coords: Vec<[i32; MAX_DIM]> = window
            .sites()
            .map(|s| {
                let mut c = [0; MAX_DIM];
                for a in 0..dim {
                    c[a] = s.coord(a) - window.lo[a];
                }
                c
            })
            .collect();
        let mut strides = vec![1usize; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * (2 * shape[a + 1] - 1);
        }
        let offsets: Vec<i32> = shape.iter().map(|&l| l as i32 - 1).collect();
        let table = if window.len() <= budget {
            let total: usize = shape.iter().map(|&l| 2 * l - 1).product();
            let mut t = vec![0.0; total];
            let mut delta = [0i32; MAX_DIM];
            for (idx, slot) in t.iter_mut().enumerate() {
                let mut rem = idx;
                for a in 0..dim {
                    delta[a] = (rem / strides[a]) as i32 - offsets[a];
                    rem %= strides[a];
                }
                *slot = kernel.coupling_offset(&delta[..dim]);
            }
            Some(t)
        } else {
            None
        };
        let mut out = Self {
            kernel: kernel.clone(),
            window: window.clone(),
            coords,
            strides,
            offsets,
            table,
            exterior: Vec::new(),
        };
        let n = window.len();
        let total = kernel.total_coupling().value;
        out.exterior = exec.map_indexed(n, |i| {
            if let Range::NearestNeighbor = kernel.range() {
                // count missing neighbors exactly
                let missing = (0..n).filter(|&j| out.get(i, j) != 0.0).count();
                return kernel.j() * (2 * dim - missing) as f64;
            }
            let mut s = NeumaierSum::new();
            for j in 0..n {
                if j != i {
                    s.add(out.get(i, j));
                }
            }
            (total - s.value()).max(0.0)
        });
        out
    }

    pub fn kernel(&self) -> &CouplingKernel {
        &self.kernel
    }

    pub fn window(&self) -> &BoxWindow {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn is_materialized(&self) -> bool {
        self.table.is_some()
    }

    /// J between window sites `i` and `j`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let dim = self.strides.len();
        let (ci, cj) = (&self.coords[i], &self.coords[j]);
        match &self.table {
            Some(t) => {
                let mut idx = 0;
                for a in 0..dim {
                    idx += (cj[a] - ci[a] + self.offsets[a]) as usize * self.strides[a];
                }
                t[idx]
            }
            None => {
                let mut delta = [0i32; MAX_DIM];
                for a in 0..dim {
                    delta[a] = cj[a] - ci[a];
                }
                self.kernel.coupling_offset(&delta[..dim])
            }
        }
    }

    /// Σ_{y ∉ window} J_{x_i y}.
    #[inline]
    pub fn exterior(&self, i: usize) -> f64 {
        self.exterior[i]
    }

    pub fn exterior_all(&self) -> &[f64] {
        &self.exterior
    }

    /// Bound on the error of any single exterior sum.
    pub fn exterior_error_bound(&self) -> f64 {
        let t = self.kernel.total_coupling();
        t.error_bound + t.value * (self.len() as f64 + 4.0) * f64::EPSILON
    }
}
