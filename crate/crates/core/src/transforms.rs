//! Rewrites an ε-DP channel into symmetric canonical form.
//!
//! The first step merges columns so that each of the first `n` columns
//! has its maximum on the diagonal and the rest are zero. The second step
//! averages the matrix over the symmetries of the input graph: over
//! distance classes when the graph is distance-regular, or over a VT⁺
//! automorphism family. Each step keeps the matrix ε-DP and keeps the
//! posterior success probability under the uniform prior unchanged.

use num_traits::Zero;

use crate::channels::ChannelMatrix;
use crate::error::{arg, Error, Result};
use crate::exact::{self, Rational};
use crate::graphs::{distances, uniform_profile_from, verify_family, AutomorphismFamily, Graph, IntersectionArray};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Column maxima on the diagonal, trailing columns zero.
    Diagonal,
    /// Additionally, every diagonal entry equals the global maximum.
    Symmetric,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Symmetry {
    DistanceRegular(IntersectionArray),
    VtPlus { family_size: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    /// `column_map[j]` = output column receiving original column `j`.
    pub column_map: Option<Vec<usize>>,
    pub symmetry: Option<Symmetry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalForm {
    pub matrix: ChannelMatrix,
    pub stage: Stage,
    pub provenance: Provenance,
}

impl CanonicalForm {
    /// The common diagonal value of a symmetric form.
    pub fn diagonal_value(&self) -> Option<&Rational> {
        (self.stage == Stage::Symmetric).then(|| self.matrix.get(0, 0))
    }
}

/// Merges every column into the diagonal position of its argmax row (ties
/// go to the lowest row) and pads with zero columns back to the original
/// width.
pub fn to_diagonal_form(m: &ChannelMatrix, g: &Graph) -> Result<CanonicalForm> {
    let (n, width) = (m.rows(), m.cols());
    if n != g.vertex_count() {
        return arg(format!(
            "matrix has {n} rows but the graph has {} vertices",
            g.vertex_count()
        ));
    }
    if n > width {
        return arg(format!("need at least as many columns as rows, got {n}x{width}"));
    }
    let column_map: Vec<usize> = (0..width).map(|j| m.column_max(j).0).collect();
    let mut merged = vec![vec![Rational::zero(); width]; n];
    for (j, &target) in column_map.iter().enumerate() {
        for (i, row) in merged.iter_mut().enumerate() {
            row[target] += m.get(i, j);
        }
    }
    let col_labels = (0..width)
        .map(|j| {
            if j < n {
                m.row_labels()[j].clone()
            } else {
                format!("_{j}")
            }
        })
        .collect();
    let matrix = ChannelMatrix::new(merged)?.with_labels(m.row_labels().to_vec(), col_labels)?;
    Ok(CanonicalForm {
        matrix,
        stage: Stage::Diagonal,
        provenance: Provenance {
            column_map: Some(column_map),
            symmetry: None,
        },
    })
}

fn require_square_part(cf: &CanonicalForm, g: &Graph) -> Result<()> {
    let m = &cf.matrix;
    if m.rows() != g.vertex_count() {
        return arg("canonical form does not match the graph");
    }
    // stage tag is trusted only after the shape is re-checked
    for j in 0..m.cols() {
        if j >= m.rows() {
            if (0..m.rows()).any(|i| !m.get(i, j).is_zero()) {
                return Err(Error::Precondition(format!("column {j} beyond the diagonal is not zero")));
            }
        } else if m.column_max(j).1 != m.get(j, j) {
            return Err(Error::Precondition(format!("column {j} has its maximum off the diagonal")));
        }
    }
    Ok(())
}

fn rebuild(cf: &CanonicalForm, rows: Vec<Vec<Rational>>, symmetry: Symmetry) -> Result<CanonicalForm> {
    let matrix = ChannelMatrix::new(rows)?.with_labels(
        cf.matrix.row_labels().to_vec(),
        cf.matrix.col_labels().to_vec(),
    )?;
    Ok(CanonicalForm {
        matrix,
        stage: Stage::Symmetric,
        provenance: Provenance {
            column_map: cf.provenance.column_map.clone(),
            symmetry: Some(symmetry),
        },
    })
}

/// Replaces every entry `(i, j)` of the square part by the average of all
/// entries at the same graph distance `d(i, j)`.
pub fn symmetrize_distance_regular(
    cf: &CanonicalForm,
    g: &Graph,
    ia: &IntersectionArray,
) -> Result<CanonicalForm> {
    require_square_part(cf, g)?;
    let dm = distances(g);
    match crate::graphs::intersection_array_from(g, &dm) {
        Some(actual) if actual == *ia => {}
        _ => return Err(Error::Precondition("graph is not distance-regular with the given array".into())),
    }
    let profile = uniform_profile_from(&dm)?;
    let n = g.vertex_count();
    let width = cf.matrix.cols();

    let mut class_sum = vec![Rational::zero(); profile.counts.len()];
    for h in 0..n {
        for l in 0..n {
            class_sum[dm.get(h, l)] += cf.matrix.get(h, l);
        }
    }
    let class_avg: Vec<Rational> = class_sum
        .into_iter()
        .zip(&profile.counts)
        .map(|(s, &k)| s / exact::int((n * k) as u64))
        .collect();

    let rows = (0..n)
        .map(|i| {
            (0..width)
                .map(|j| {
                    if j < n {
                        class_avg[dm.get(i, j)].clone()
                    } else {
                        Rational::zero()
                    }
                })
                .collect()
        })
        .collect();
    rebuild(cf, rows, Symmetry::DistanceRegular(ia.clone()))
}

/// `M''[i][j] = (1/n) Σ_k M'[σ_k(i)][σ_k(j)]` over the square part.
pub fn symmetrize_vt_plus(
    cf: &CanonicalForm,
    g: &Graph,
    fam: &AutomorphismFamily,
) -> Result<CanonicalForm> {
    require_square_part(cf, g)?;
    if !verify_family(g, fam)? {
        return Err(Error::Precondition("automorphism family is not a valid VT+ certificate".into()));
    }
    let n = g.vertex_count();
    let width = cf.matrix.cols();
    let scale = exact::rat(1, n as i64);
    let rows = (0..n)
        .map(|i| {
            (0..width)
                .map(|j| {
                    if j >= n {
                        return Rational::zero();
                    }
                    let total: Rational = fam
                        .perms()
                        .iter()
                        .map(|sigma| cf.matrix.get(sigma[i], sigma[j]))
                        .sum();
                    total * &scale
                })
                .collect()
        })
        .collect();
    rebuild(cf, rows, Symmetry::VtPlus { family_size: fam.len() })
}
