//! Incorrect points, contours, labels, interiors and the erasure map.

pub mod grid;
pub mod partition;

pub use partition::{a1_violations, ma_partition, ma_partition_ordered, satisfies_condition_b, MaParams};

use serde::{Deserialize, Serialize};

use crate::error::ContourError;
use crate::interactions::{CouplingKernel, LatticeSum};
use crate::lattice::{boundaries, connected_components, volume, Region, Site};
use crate::spin_model::SpinConfig;

/// ∂σ: sites whose closed ℓ₁ unit ball is not monochromatic in the extended
/// configuration.
pub fn incorrect_points(sigma: &SpinConfig) -> Region {
    let scan = sigma.window().inflate(1);
    let mut out = Region::new(sigma.dim());
    for x in scan.sites() {
        let c = sigma.at(&x);
        if x.neighbors().any(|y| sigma.at(&y) != c) {
            out.insert(x);
        }
    }
    out
}

/// A contour: support, spins on the support, labels and interiors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    support: Region,
    spins: Vec<u8>,
    exterior_label: u8,
    components: Vec<(Region, u8)>,
    interiors: Vec<Region>,
    i_prime: Region,
    volume: Region,
}

impl Contour {
    pub fn support(&self) -> &Region {
        &self.support
    }

    /// |γ| = |sp(γ)|.
    pub fn size(&self) -> usize {
        self.support.len()
    }

    /// Spins on the support in the support's iteration order.
    pub fn spins(&self) -> &[u8] {
        &self.spins
    }

    pub fn spin_at(&self, x: &Site) -> Option<u8> {
        self.support.iter().position(|s| s == x).map(|i| self.spins[i])
    }

    /// Label of the unbounded component of sp(γ)ᶜ.
    pub fn exterior_label(&self) -> u8 {
        self.exterior_label
    }

    /// Connected components of I(γ) with their labels.
    pub fn interior_components(&self) -> &[(Region, u8)] {
        &self.components
    }

    /// I_n(γ).
    pub fn interior(&self, n: u8) -> &Region {
        &self.interiors[n as usize]
    }

    pub fn interiors(&self) -> &[Region] {
        &self.interiors
    }

    /// I(γ) = ⋃_n I_n(γ).
    pub fn full_interior(&self) -> Region {
        self.interiors.iter().fold(Region::new(self.support.dim()), |acc, r| acc.union(r))
    }

    /// I′(γ) = ⋃_{n≠0} I_n(γ).
    pub fn i_prime(&self) -> &Region {
        &self.i_prime
    }

    /// V(γ) = sp(γ) ∪ I(γ).
    pub fn volume(&self) -> &Region {
        &self.volume
    }

    pub fn q(&self) -> usize {
        self.interiors.len()
    }

    fn same_object(&self, other: &Contour) -> bool {
        self.support == other.support && self.spins == other.spins
    }

    pub fn dump(&self) -> ContourDump {
        ContourDump {
            support: self.support.iter().copied().collect(),
            spins: self.spins.clone(),
            exterior_label: self.exterior_label,
            components: self
                .components
                .iter()
                .map(|(r, l)| LabeledSites {
                    label: *l,
                    sites: r.iter().copied().collect(),
                })
                .collect(),
            interiors: self.interiors.iter().map(|r| r.iter().copied().collect()).collect(),
            size: self.size(),
            volume_size: self.volume.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledSites {
    pub label: u8,
    pub sites: Vec<Site>,
}

/// JSON form of a contour.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourDump {
    pub support: Vec<Site>,
    pub spins: Vec<u8>,
    pub exterior_label: u8,
    pub components: Vec<LabeledSites>,
    pub interiors: Vec<Vec<Site>>,
    pub size: usize,
    pub volume_size: usize,
}

/// Γ(σ) together with the fingerprint of the configuration it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourFamily {
    contours: Vec<Contour>,
    fingerprint: u64,
    params: MaParams,
    /// Number of label reads that found no sites (degenerate geometry).
    empty_label_reads: usize,
}

impl ContourFamily {
    pub fn contours(&self) -> &[Contour] {
        &self.contours
    }

    pub fn len(&self) -> usize {
        self.contours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contours.is_empty()
    }

    pub fn params(&self) -> &MaParams {
        &self.params
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn empty_label_reads(&self) -> usize {
        self.empty_label_reads
    }

    /// Indices of external contours: sp(γ) ∩ V(γ′) = ∅ for every γ′ ≠ γ.
    pub fn external_indices(&self) -> Vec<usize> {
        (0..self.contours.len())
            .filter(|&i| {
                self.contours.iter().enumerate().all(|(j, other)| {
                    i == j || self.contours[i].support.is_disjoint(&other.volume)
                })
            })
            .collect()
    }

    pub fn external(&self) -> Vec<&Contour> {
        self.external_indices().into_iter().map(|i| &self.contours[i]).collect()
    }

    pub fn is_external(&self, gamma: &Contour) -> bool {
        self.external().iter().any(|c| c.same_object(gamma))
    }

    /// Condition (A1) violations among the supports.
    pub fn a1_violations(&self) -> Vec<(usize, usize)> {
        let supports: Vec<Region> = self.contours.iter().map(|c| c.support.clone()).collect();
        a1_violations(&supports)
    }

    /// τ_γ(σ) for the external contour `index` of this family.
    pub fn erase(&self, sigma: &SpinConfig, index: usize) -> Result<SpinConfig, ContourError> {
        if sigma.fingerprint() != self.fingerprint {
            return Err(ContourError::StaleFamily);
        }
        let gamma = self.contours.get(index).ok_or(ContourError::NotExternal)?;
        if !self.external_indices().contains(&index) {
            return Err(ContourError::NotExternal);
        }
        apply_erasure(sigma, gamma)
    }
}

pub fn extract_contours(sigma: &SpinConfig, p: &MaParams) -> Result<ContourFamily, ContourError> {
    let incorrect = incorrect_points(sigma);
    let classes = ma_partition(&incorrect, p);
    let mut empty_reads = 0;
    let mut contours = Vec::with_capacity(classes.len());
    for support in classes {
        contours.push(build_contour(sigma, support, &mut empty_reads)?);
    }
    Ok(ContourFamily {
        contours,
        fingerprint: sigma.fingerprint(),
        params: *p,
        empty_label_reads: empty_reads,
    })
}

fn read_label(sigma: &SpinConfig, sites: &Region, what: &str, empty_reads: &mut usize) -> Result<u8, ContourError> {
    let mut it = sites.iter().map(|s| sigma.at(s));
    let Some(first) = it.next() else {
        *empty_reads += 1;
        return Ok(sigma.exterior());
    };
    if it.all(|c| c == first) {
        Ok(first)
    } else {
        Err(ContourError::LabelInconsistency(what.to_string()))
    }
}

fn build_contour(sigma: &SpinConfig, support: Region, empty_reads: &mut usize) -> Result<Contour, ContourError> {
    let q = sigma.q();
    let dim = support.dim();
    let vol = volume(&support);
    let exterior_label = read_label(sigma, &boundaries(&vol).inner, "exterior boundary of V(γ)", empty_reads)?;
    let interior = vol.difference(&support);
    let mut components = Vec::new();
    let mut interiors = vec![Region::new(dim); q];
    for comp in connected_components(&interior) {
        let around = boundaries(&volume(&comp)).exterior;
        let label = read_label(sigma, &around, "boundary of an interior component", empty_reads)?;
        interiors[label as usize] = interiors[label as usize].union(&comp);
        components.push((comp, label));
    }
    let i_prime = interiors
        .iter()
        .skip(1)
        .fold(Region::new(dim), |acc, r| acc.union(r));
    let spins = support.iter().map(|s| sigma.at(s)).collect();
    Ok(Contour {
        support,
        spins,
        exterior_label,
        components,
        interiors,
        i_prime,
        volume: vol,
    })
}

/// Γ's external contours.
pub fn external_contours(family: &ContourFamily) -> Vec<&Contour> {
    family.external()
}

/// τ_γ(σ): support → 0, I_n(γ) shifted by −n, everything else unchanged.
/// Re-extracts Γ(σ) with `p` to check that γ is external.
pub fn erase(sigma: &SpinConfig, gamma: &Contour, p: &MaParams) -> Result<SpinConfig, ContourError> {
    let family = extract_contours(sigma, p)?;
    if !family.is_external(gamma) {
        return Err(ContourError::NotExternal);
    }
    apply_erasure(sigma, gamma)
}

fn apply_erasure(sigma: &SpinConfig, gamma: &Contour) -> Result<SpinConfig, ContourError> {
    if sigma.exterior() != 0 {
        return Err(ContourError::ExteriorNotReference(sigma.exterior()));
    }
    let q = sigma.q();
    let mut out = sigma.clone();
    for x in gamma.support() {
        if let Some(i) = sigma.window().index_of(x) {
            out.set(i, 0);
        }
    }
    for (n, region) in gamma.interiors().iter().enumerate().skip(1) {
        for x in region {
            match sigma.window().index_of(x) {
                Some(i) => out.set(i, ((sigma.get(i) as usize + q - n) % q) as u8),
                None => return Err(ContourError::EscapesWindow(format!("{x:?}"))),
            }
        }
    }
    Ok(out)
}

/// F_Λ = Σ_{x∈Λ, y∉Λ} J_xy; equals J|∂Λ| for nearest-neighbor kernels.
pub fn surface_coupling(region: &Region, kernel: &CouplingKernel) -> LatticeSum {
    kernel.surface_coupling(region)
}
