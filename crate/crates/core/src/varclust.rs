//! Divisive principal-component variable clustering and 1−R² ratio
//! representative selection.
//!
//! All work happens on the correlation matrix of the input columns, so
//! callers may pass raw or standardized data.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{correlation, sym_eigen, variance, Matrix};
use crate::scalar::Scalar;

pub const DEFAULT_MIN_EXPLAINED: f64 = 0.9;
const MAX_SWEEPS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VarclusError {
    #[error("no variables to cluster")]
    Empty,
    #[error("{names} names for {columns} columns")]
    NameMismatch { names: usize, columns: usize },
    #[error("column {0} has a different length")]
    RaggedColumn(String),
    #[error("at least two rows are needed")]
    SingleRow,
    #[error("column {0} has zero variance")]
    ZeroVarianceColumn(String),
    #[error("column {0} contains non-finite values")]
    NonFinite(String),
    #[error("min_explained {0} must lie in (0, 1]")]
    InvalidThreshold(f64),
    #[error("variable {0} is not in the cluster model")]
    UnknownVariable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster<T> {
    /// Members in name order.
    pub members: Vec<String>,
    /// First principal component loadings, aligned with `members`.
    pub loadings: Vec<T>,
    /// First eigenvalue of the members' correlation matrix.
    pub eigenvalue: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel<T> {
    /// Clusters ordered by their first member's name.
    pub clusters: Vec<Cluster<T>>,
    /// Σ λ1 over clusters divided by the number of variables.
    pub explained: T,
    pub assignments: BTreeMap<String, usize>,
}

impl<T: Scalar> ClusterModel<T> {
    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster_of(&self, name: &str) -> Option<usize> {
        self.assignments.get(name).copied()
    }
}

struct Pc<T> {
    l1: T,
    l2: T,
    a1: Vec<T>,
    a2: Vec<T>,
}

fn eigen_tol<T: Scalar>() -> T {
    T::epsilon() * T::lit(16.0)
}

/// Leading two components of a member set; PC1 is signed so that the first
/// member in name order loads non-negatively.
fn components<T: Scalar>(r: &Matrix<T>, members: &[usize]) -> Pc<T> {
    if members.len() == 1 {
        return Pc {
            l1: T::one(),
            l2: T::zero(),
            a1: vec![T::one()],
            a2: vec![T::zero()],
        };
    }
    let e = sym_eigen(&r.submatrix(members), eigen_tol());
    let mut a1 = e.vector(0);
    if a1[0] < T::zero() {
        a1.iter_mut().for_each(|v| *v = -*v);
    }
    Pc {
        l1: e.values[0],
        l2: e.values[1],
        a1,
        a2: e.vector(1),
    }
}

/// Squared correlation of variable `j` with the unit-variance PC1 score of
/// `members`.
fn r2_with<T: Scalar>(r: &Matrix<T>, j: usize, members: &[usize], pc: &Pc<T>) -> T {
    if pc.l1 <= T::zero() {
        return T::zero();
    }
    let c: T = members.iter().zip(&pc.a1).map(|(&i, &a)| r[(j, i)] * a).sum();
    (c * c / pc.l1).min(T::one())
}

fn total_l1<T: Scalar>(pcs: &[Pc<T>]) -> T {
    pcs.iter().map(|p| p.l1).sum()
}

/// Moves each variable to the cluster whose PC1 it correlates with most,
/// never emptying a cluster. Returns the best partition seen.
fn reassign<T: Scalar>(r: &Matrix<T>, mut clusters: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    let mut pcs: Vec<Pc<T>> = clusters.iter().map(|m| components(r, m)).collect();
    let mut best = (total_l1(&pcs), clusters.clone());
    let p = r.rows();
    for _ in 0..MAX_SWEEPS {
        let mut home = vec![0usize; p];
        for (c, m) in clusters.iter().enumerate() {
            for &j in m {
                home[j] = c;
            }
        }
        let mut sizes: Vec<usize> = clusters.iter().map(Vec::len).collect();
        let mut target = home.clone();
        for j in 0..p {
            let own = r2_with(r, j, &clusters[home[j]], &pcs[home[j]]);
            let mut best_c = home[j];
            let mut best_r2 = own;
            for (c, m) in clusters.iter().enumerate() {
                if c == home[j] {
                    continue;
                }
                let r2 = r2_with(r, j, m, &pcs[c]);
                if r2 > best_r2 + T::lit(1e-12) {
                    best_c = c;
                    best_r2 = r2;
                }
            }
            if best_c != home[j] && sizes[home[j]] > 1 {
                sizes[home[j]] -= 1;
                sizes[best_c] += 1;
                target[j] = best_c;
            }
        }
        if target == home {
            break;
        }
        let mut next = vec![Vec::new(); clusters.len()];
        for (j, &c) in target.iter().enumerate() {
            next[c].push(j);
        }
        clusters = next;
        pcs = clusters.iter().map(|m| components(r, m)).collect();
        let score = total_l1(&pcs);
        if score > best.0 {
            best = (score, clusters.clone());
        }
    }
    best.1
}

/// Splits `members` by comparing each variable's squared correlation with
/// the first and second principal components.
fn split<T: Scalar>(members: &[usize], pc: &Pc<T>) -> (Vec<usize>, Vec<usize>) {
    let mut first = Vec::new();
    let mut second = Vec::new();
    for (k, &j) in members.iter().enumerate() {
        let s1 = pc.l1 * pc.a1[k] * pc.a1[k];
        let s2 = pc.l2 * pc.a2[k] * pc.a2[k];
        if s1 >= s2 {
            first.push(j);
        } else {
            second.push(j);
        }
    }
    if second.is_empty() {
        let k = (0..members.len())
            .max_by(|&x, &y| {
                let dx = pc.l2 * pc.a2[x] * pc.a2[x] - pc.l1 * pc.a1[x] * pc.a1[x];
                let dy = pc.l2 * pc.a2[y] * pc.a2[y] - pc.l1 * pc.a1[y] * pc.a1[y];
                dx.partial_cmp(&dy).unwrap_or(std::cmp::Ordering::Equal).then(y.cmp(&x))
            })
            .expect("cluster has members");
        second.push(members[k]);
        first.retain(|&j| j != members[k]);
    }
    (first, second)
}

fn validate<T: Scalar>(names: &[String], data: &[Vec<T>]) -> Result<(), VarclusError> {
    if data.is_empty() {
        return Err(VarclusError::Empty);
    }
    if names.len() != data.len() {
        return Err(VarclusError::NameMismatch {
            names: names.len(),
            columns: data.len(),
        });
    }
    let n = data[0].len();
    if n < 2 {
        return Err(VarclusError::SingleRow);
    }
    for (name, col) in names.iter().zip(data) {
        if col.len() != n {
            return Err(VarclusError::RaggedColumn(name.clone()));
        }
        if col.iter().any(|v| !v.is_finite()) {
            return Err(VarclusError::NonFinite(name.clone()));
        }
        if !(variance(col) > T::zero()) {
            return Err(VarclusError::ZeroVarianceColumn(name.clone()));
        }
    }
    Ok(())
}

/// Divisive clustering: starting from one cluster of all variables, split
/// the cluster with the largest second eigenvalue and reassign members
/// until the clusters' first components explain at least `min_explained`
/// of the total variance, or every cluster is a singleton.
pub fn cluster_variables<T: Scalar>(
    names: &[String],
    data: &[Vec<T>],
    min_explained: T,
) -> Result<ClusterModel<T>, VarclusError> {
    if !(min_explained > T::zero() && min_explained <= T::one()) {
        return Err(VarclusError::InvalidThreshold(min_explained.as_f64()));
    }
    validate(names, data)?;
    let r = correlation(data);
    let p = names.len();
    let by_name = |m: &mut Vec<usize>| m.sort_by(|&a, &b| names[a].cmp(&names[b]));

    let mut all: Vec<usize> = (0..p).collect();
    by_name(&mut all);
    let mut clusters = vec![all];
    let slack = T::lit(1e-12);
    loop {
        let pcs: Vec<Pc<T>> = clusters.iter().map(|m| components(&r, m)).collect();
        if total_l1(&pcs) / T::count(p) >= min_explained - slack {
            break;
        }
        let candidate = (0..clusters.len())
            .filter(|&c| clusters[c].len() > 1)
            .max_by(|&a, &b| {
                pcs[a]
                    .l2
                    .partial_cmp(&pcs[b].l2)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(b.cmp(&a))
            });
        let Some(c) = candidate else { break };
        let (first, second) = split(&clusters[c], &pcs[c]);
        clusters[c] = first;
        clusters.push(second);
        clusters = reassign(&r, clusters);
        for m in &mut clusters {
            by_name(m);
        }
    }

    for m in &mut clusters {
        by_name(m);
    }
    clusters.sort_by(|a, b| names[a[0]].cmp(&names[b[0]]));
    let mut assignments = BTreeMap::new();
    let mut out = Vec::with_capacity(clusters.len());
    let mut sum = T::zero();
    for (c, m) in clusters.iter().enumerate() {
        let pc = components(&r, m);
        sum += pc.l1;
        for &j in m {
            assignments.insert(names[j].clone(), c);
        }
        out.push(Cluster {
            members: m.iter().map(|&j| names[j].clone()).collect(),
            loadings: pc.a1,
            eigenvalue: pc.l1,
        });
    }
    Ok(ClusterModel {
        clusters: out,
        explained: sum / T::count(p),
        assignments,
    })
}

/// `(1 − r2_own) / (1 − r2_next)`. A perfect next-cluster fit gives `+∞`
/// unless the own fit is perfect too, in which case the ratio is 0.
pub fn one_minus_r2_ratio<T: Scalar>(r2_own: T, r2_next: T) -> T {
    let num = (T::one() - r2_own).max(T::zero());
    let den = (T::one() - r2_next).max(T::zero());
    if num == T::zero() {
        T::zero()
    } else if den == T::zero() {
        T::infinity()
    } else {
        num / den
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct VariableScore<T> {
    pub variable: String,
    pub cluster: usize,
    pub r2_own: T,
    pub r2_next: T,
    #[serde(with = "crate::scalar::nonfinite")]
    pub ratio: T,
    pub is_representative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct RepresentativeReport<T> {
    /// One representative per cluster, in cluster order.
    pub representatives: Vec<String>,
    /// Per variable, grouped by cluster and in name order within a cluster.
    pub variables: Vec<VariableScore<T>>,
}

impl<T: Scalar> RepresentativeReport<T> {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "variable,cluster,r2_own,r2_next,ratio,is_representative")?;
        for v in &self.variables {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                v.variable, v.cluster, v.r2_own, v.r2_next, v.ratio, v.is_representative
            )?;
        }
        Ok(())
    }
}

/// Scores every variable against its own and its closest other cluster and
/// picks the lowest 1−R² ratio per cluster, ties going to the earlier name.
pub fn select_representatives<T: Scalar>(
    model: &ClusterModel<T>,
    names: &[String],
    data: &[Vec<T>],
) -> Result<RepresentativeReport<T>, VarclusError> {
    validate(names, data)?;
    let r = correlation(data);
    let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut members: Vec<Vec<usize>> = Vec::with_capacity(model.clusters.len());
    for c in &model.clusters {
        let m = c
            .members
            .iter()
            .map(|n| index.get(n.as_str()).copied().ok_or_else(|| VarclusError::UnknownVariable(n.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        members.push(m);
    }
    let pcs: Vec<Pc<T>> = members.iter().map(|m| components(&r, m)).collect();

    let mut representatives = Vec::with_capacity(members.len());
    let mut variables = Vec::with_capacity(names.len());
    for (c, m) in members.iter().enumerate() {
        let start = variables.len();
        for &j in m {
            let r2_own = r2_with(&r, j, m, &pcs[c]);
            let r2_next = members
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != c)
                .map(|(k, mk)| r2_with(&r, j, mk, &pcs[k]))
                .fold(T::zero(), |a, b| a.max(b));
            variables.push(VariableScore {
                variable: names[j].clone(),
                cluster: c,
                r2_own,
                r2_next,
                ratio: one_minus_r2_ratio(r2_own, r2_next),
                is_representative: false,
            });
        }
        let mut best = start;
        for k in start + 1..variables.len() {
            if variables[k].ratio < variables[best].ratio {
                best = k;
            }
        }
        variables[best].is_representative = true;
        representatives.push(variables[best].variable.clone());
    }
    Ok(RepresentativeReport {
        representatives,
        variables,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("v{i}")).collect()
    }

    fn orthogonal(k: usize) -> Vec<Vec<f64>> {
        // Walsh-style ±1 columns over 2^k rows
        let n = 1 << k;
        (0..k)
            .map(|j| (0..n).map(|i| if (i >> j) & 1 == 1 { 1.0 } else { -1.0 }).collect())
            .collect()
    }

    #[test]
    fn ratio_edge_cases() {
        assert_eq!(one_minus_r2_ratio(1.0_f64, 0.3), 0.0);
        assert_eq!(one_minus_r2_ratio(0.4_f64, 0.0), 0.6);
        assert!(one_minus_r2_ratio(0.4_f64, 1.0).is_infinite());
        assert!((one_minus_r2_ratio(0.8_f64, 0.5) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_variables_become_singletons() {
        let data = orthogonal(4);
        let m = cluster_variables(&names(4), &data, 0.9).unwrap();
        assert_eq!(m.n_clusters(), 4);
        assert!((m.explained - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_pair_and_independent() {
        let base = orthogonal(2);
        let data = vec![base[0].clone(), base[0].iter().map(|v| 2.0 * v + 1.0).collect(), base[1].clone()];
        let m = cluster_variables(&names(3), &data, 0.9).unwrap();
        assert_eq!(m.n_clusters(), 2);
        assert_eq!(m.clusters[0].members, vec!["v0", "v1"]);
        assert!((m.clusters[0].eigenvalue - 2.0).abs() < 1e-9);
        assert_eq!(m.clusters[1].members, vec!["v2"]);
        let rep = select_representatives(&m, &names(3), &data).unwrap();
        assert_eq!(rep.representatives, vec!["v0", "v2"]);
    }

    #[test]
    fn errors() {
        let n = names(2);
        assert_eq!(
            cluster_variables(&n, &[vec![1.0_f64], vec![2.0]], 0.9).unwrap_err(),
            VarclusError::SingleRow
        );
        assert_eq!(
            cluster_variables(&n, &[vec![1.0_f64, 2.0], vec![3.0, 3.0]], 0.9).unwrap_err(),
            VarclusError::ZeroVarianceColumn("v1".into())
        );
        assert!(matches!(
            cluster_variables(&n, &[vec![1.0_f64, 2.0], vec![3.0, 4.0]], 1.5),
            Err(VarclusError::InvalidThreshold(_))
        ));
    }

    #[test]
    fn report_csv_header() {
        let data = orthogonal(2);
        let m = cluster_variables(&names(2), &data, 0.9).unwrap();
        let rep = select_representatives(&m, &names(2), &data).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("variable,cluster,r2_own,r2_next,ratio,is_representative\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
