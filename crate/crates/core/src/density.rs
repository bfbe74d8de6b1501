//! Kernel density estimation and buffer entropy diagnostics.
//!
//! The auxiliary buffer's diversity is measured as the joint entropy
//! `H(phi, Y) = H(phi | Y) + H(Y)`: the label entropy from the discrete score
//! histogram plus the average conditional differential entropy of the
//! features, estimated with leave-one-out Gaussian KDE per label. A plug-in
//! estimator over exact feature matches is provided as a second, purely
//! discrete route for buffers with finitely many distinct values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memory::AuxiliaryMemory;

const MIN_BANDWIDTH: f64 = 1e-9;

/// Average of isotropic Gaussian kernels centered at `points`, evaluated at
/// `query`: `(1/M) sum_k K_h(query - x_k)` with
/// `K_h(u) = (2 pi h^2)^(-d/2) exp(-|u|^2 / (2 h^2))`.
pub fn kde_density(points: &[Vec<f64>], query: &[f64], bandwidth: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyInput { what: "kde points" });
    }
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::InvalidParameter {
            what: "bandwidth",
            reason: format!("must be finite and > 0, got {bandwidth}"),
        });
    }
    let dim = query.len();
    let norm = (2.0 * std::f64::consts::PI * bandwidth * bandwidth).powf(-(dim as f64) / 2.0);
    let mut total = 0.0;
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        let sq: f64 = p.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
        total += norm * (-sq / (2.0 * bandwidth * bandwidth)).exp();
    }
    Ok(total / points.len() as f64)
}

/// Silverman's rule for an isotropic Gaussian kernel:
/// `h = sigma * (4 / ((d + 2) M))^(1 / (d + 4))` where `sigma` is the root
/// mean per-coordinate sample variance. Falls back to a small floor when the
/// points are degenerate.
pub fn silverman_bandwidth(points: &[Vec<f64>]) -> f64 {
    let m = points.len();
    if m < 2 {
        return 1.0;
    }
    let d = points[0].len();
    let mut variance_sum = 0.0;
    for coord in 0..d {
        let mean = points.iter().map(|p| p[coord]).sum::<f64>() / m as f64;
        let var = points
            .iter()
            .map(|p| (p[coord] - mean).powi(2))
            .sum::<f64>()
            / (m - 1) as f64;
        variance_sum += var;
    }
    let sigma = (variance_sum / d as f64).sqrt();
    let factor = (4.0 / ((d as f64 + 2.0) * m as f64)).powf(1.0 / (d as f64 + 4.0));
    (sigma * factor).max(MIN_BANDWIDTH)
}

/// Entropy decomposition of a buffer: label entropy, conditional feature
/// entropy, and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropySummary {
    pub h_y: f64,
    pub h_phi_given_y: f64,
    pub h_joint: f64,
}

/// Entropy of the auxiliary buffer using leave-one-out Gaussian KDE for the
/// conditional part. Labels with a single member contribute 0. When
/// `bandwidth` is `None`, Silverman's rule is applied per label group.
pub fn buffer_entropy(aux: &AuxiliaryMemory, bandwidth: Option<f64>) -> Result<EntropySummary> {
    if aux.is_empty() {
        return Err(Error::EmptyInput { what: "auxiliary buffer" });
    }
    let total = aux.len() as f64;
    let mut groups: BTreeMap<u32, Vec<&Vec<f64>>> = BTreeMap::new();
    for entry in aux.entries() {
        groups
            .entry(entry.label.expect("aux entries always carry labels"))
            .or_default()
            .push(&entry.features);
    }

    let mut h_y = 0.0;
    let mut h_phi_given_y = 0.0;
    for members in groups.values() {
        let p = members.len() as f64 / total;
        h_y -= p * p.ln();
        if members.len() < 2 {
            continue;
        }
        let owned: Vec<Vec<f64>> = members.iter().map(|f| (*f).clone()).collect();
        let h = bandwidth.unwrap_or_else(|| silverman_bandwidth(&owned));
        let mut neg_log_sum = 0.0;
        for (k, query) in owned.iter().enumerate() {
            let rest: Vec<Vec<f64>> = owned
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, f)| f.clone())
                .collect();
            let density = kde_density(&rest, query, h)?;
            neg_log_sum -= density.max(f64::MIN_POSITIVE).ln();
        }
        h_phi_given_y += p * neg_log_sum / members.len() as f64;
    }

    Ok(EntropySummary {
        h_y,
        h_phi_given_y,
        h_joint: h_y + h_phi_given_y,
    })
}

/// Plug-in entropy over exact feature matches: features are treated as
/// discrete symbols (bit-exact equality). `h_joint` is computed by direct
/// joint enumeration, independently of the other two terms, so the chain
/// rule `h_joint = h_y + h_phi_given_y` is a genuine numeric identity check.
pub fn buffer_entropy_discrete(aux: &AuxiliaryMemory) -> Result<EntropySummary> {
    if aux.is_empty() {
        return Err(Error::EmptyInput { what: "auxiliary buffer" });
    }
    let total = aux.len() as f64;
    let key_of = |features: &[f64]| -> Vec<u64> {
        features.iter().map(|v| v.to_bits()).collect()
    };

    let mut label_counts: BTreeMap<u32, usize> = BTreeMap::new();
    let mut joint_counts: BTreeMap<(u32, Vec<u64>), usize> = BTreeMap::new();
    for entry in aux.entries() {
        let label = entry.label.expect("aux entries always carry labels");
        *label_counts.entry(label).or_insert(0) += 1;
        *joint_counts.entry((label, key_of(&entry.features))).or_insert(0) += 1;
    }

    let h_y = entropy_of_counts(label_counts.values().copied(), total);
    let h_joint = entropy_of_counts(joint_counts.values().copied(), total);

    let mut h_phi_given_y = 0.0;
    for (&label, &count) in &label_counts {
        let p = count as f64 / total;
        let conditional: Vec<usize> = joint_counts
            .iter()
            .filter(|((l, _), _)| *l == label)
            .map(|(_, &c)| c)
            .collect();
        h_phi_given_y += p * entropy_of_counts(conditional.into_iter(), count as f64);
    }

    Ok(EntropySummary {
        h_y,
        h_phi_given_y,
        h_joint,
    })
}

fn entropy_of_counts(counts: impl Iterator<Item = usize>, total: f64) -> f64 {
    counts
        .map(|c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}
