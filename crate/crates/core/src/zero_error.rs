//! Channel hypergraph and the fractional packing/covering pair; zero-error
//! non-signalling code size.
//!
//! The hypergraph of a channel has one vertex per input and one hyperedge per
//! output, the edge being that output's support set. Fractional packing and
//! covering are the dual LPs on this hypergraph; their common value's integer
//! part is the zero-error NS code size.

use crate::channel::Channel;
use crate::converse::FLOOR_GUARD;
use crate::lp::{self, LinearProgram, LpError, LpStatus, Relation, SolveOptions};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ZeroErrorError {
    #[error("solver failure: {0}")]
    SolverFailure(#[from] LpError),
    #[error("lp reported {0:?} for a packing/covering program")]
    UnexpectedStatus(LpStatus),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Support hypergraph of a channel. Edges are stored sorted and
/// deduplicated; `edge_origin[y]` locates the edge of output `y` (None when
/// the output column has no support at the chosen threshold).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    pub vertex_count: usize,
    pub edges: Vec<Vec<usize>>,
    pub edge_origin: Vec<Option<usize>>,
}

impl Hypergraph {
    /// Vertices that lie in no edge. Cannot happen for a stochastic channel
    /// at threshold zero, but a positive threshold can isolate vertices.
    pub fn isolated_vertices(&self) -> Vec<usize> {
        let mut seen = vec![false; self.vertex_count];
        for e in &self.edges {
            for &x in e {
                seen[x] = true;
            }
        }
        seen.iter().enumerate().filter(|(_, &s)| !s).map(|(x, _)| x).collect()
    }

    /// Sorted edge list rendering for golden-file tests: one edge per line,
    /// vertices comma-separated inside braces.
    pub fn display_edges(&self) -> String {
        let mut lines: Vec<String> = self
            .edges
            .iter()
            .map(|e| {
                let inner: Vec<String> = e.iter().map(|x| x.to_string()).collect();
                format!("{{{}}}", inner.join(","))
            })
            .collect();
        lines.sort();
        lines.join("\n")
    }
}

/// Extracts the support hypergraph. An entry counts as support iff it is
/// strictly greater than `support_tol` (default 0 elsewhere in the crate:
/// strict positivity, matching the ceiling indicator).
pub fn hypergraph(channel: &Channel, support_tol: f64) -> Hypergraph {
    let a = channel.input_size();
    let b = channel.output_size();
    let mut edges: Vec<Vec<usize>> = Vec::new();
    let mut index: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut edge_origin = vec![None; b];
    for y in 0..b {
        let support: Vec<usize> = (0..a).filter(|&x| channel.prob(x, y) > support_tol).collect();
        if support.is_empty() {
            continue;
        }
        let id = *index.entry(support.clone()).or_insert_with(|| {
            edges.push(support);
            edges.len() - 1
        });
        edge_origin[y] = Some(id);
    }
    Hypergraph { vertex_count: a, edges, edge_origin }
}

/// Optimal value and witness of a packing or covering LP.
#[derive(Debug, Clone)]
pub struct PackingResult {
    pub value: f64,
    /// Per-vertex weights for packing, per-edge weights for covering.
    pub weights: Vec<f64>,
}

/// Fractional packing number: maximum total vertex weight with every edge
/// sum at most 1 and every weight in [0,1]. Isolated vertices take weight 1
/// through their bound.
pub fn fractional_packing(h: &Hypergraph) -> Result<PackingResult, ZeroErrorError> {
    let n = h.vertex_count;
    let mut lp = LinearProgram::maximize(vec![1.0; n]);
    for x in 0..n {
        lp.set_upper(x, 1.0);
        lp.set_var_name(x, format!("v[{x}]"));
    }
    for (i, e) in h.edges.iter().enumerate() {
        let mut coeffs = vec![0.0; n];
        for &x in e {
            coeffs[x] = 1.0;
        }
        lp.add_row(format!("edge[{i}]"), coeffs, Relation::Le, 1.0);
    }
    let sol = lp::solve(&lp, &SolveOptions::default())?;
    if sol.status != LpStatus::Optimal {
        return Err(ZeroErrorError::UnexpectedStatus(sol.status));
    }
    Ok(PackingResult { value: sol.value, weights: sol.primal })
}

/// Fractional covering number: minimum total edge weight with every covered
/// vertex reaching total at least 1 and weights in [0,1]. Isolated vertices
/// carry no constraint and contribute 1 to the reported value, mirroring the
/// weight their bound grants them in the packing.
pub fn fractional_covering(h: &Hypergraph) -> Result<PackingResult, ZeroErrorError> {
    let ne = h.edges.len();
    let isolated = h.isolated_vertices().len() as f64;
    if ne == 0 {
        return Ok(PackingResult { value: isolated, weights: Vec::new() });
    }
    let mut lp = LinearProgram::minimize(vec![1.0; ne]);
    for e in 0..ne {
        lp.set_upper(e, 1.0);
        lp.set_var_name(e, format!("c[{e}]"));
    }
    let mut touching: Vec<Vec<usize>> = vec![Vec::new(); h.vertex_count];
    for (i, e) in h.edges.iter().enumerate() {
        for &x in e {
            touching[x].push(i);
        }
    }
    for (x, edges) in touching.iter().enumerate() {
        if edges.is_empty() {
            continue;
        }
        let mut coeffs = vec![0.0; ne];
        for &i in edges {
            coeffs[i] = 1.0;
        }
        lp.add_row(format!("vertex[{x}]"), coeffs, Relation::Ge, 1.0);
    }
    let sol = lp::solve(&lp, &SolveOptions::default())?;
    if sol.status != LpStatus::Optimal {
        return Err(ZeroErrorError::UnexpectedStatus(sol.status));
    }
    Ok(PackingResult { value: sol.value + isolated, weights: sol.primal })
}

/// Closed-form packing value at a fixed input distribution:
/// `1 / max_y sum_{x in e_y} p(x)`.
pub fn alpha_star_p(channel: &Channel, p: &[f64]) -> Result<f64, ZeroErrorError> {
    alpha_star_p_with_tol(channel, p, 0.0)
}

pub fn alpha_star_p_with_tol(
    channel: &Channel,
    p: &[f64],
    support_tol: f64,
) -> Result<f64, ZeroErrorError> {
    if p.len() != channel.input_size() {
        return Err(ZeroErrorError::DimensionMismatch(format!(
            "p has {} entries, channel has {} inputs",
            p.len(),
            channel.input_size()
        )));
    }
    let mut worst: f64 = 0.0;
    for y in 0..channel.output_size() {
        let mass: f64 = (0..channel.input_size())
            .filter(|&x| channel.prob(x, y) > support_tol)
            .map(|x| p[x])
            .sum();
        worst = worst.max(mass);
    }
    Ok(1.0 / worst)
}

#[derive(Debug, Clone)]
pub struct ZeroErrorSize {
    pub alpha_star: f64,
    pub m0: u64,
    pub packing: PackingResult,
}

/// Zero-error NS code size: the integer part of the fractional packing
/// number of the channel hypergraph.
pub fn zero_error_size(channel: &Channel) -> Result<ZeroErrorSize, ZeroErrorError> {
    let h = hypergraph(channel, 0.0);
    let packing = fractional_packing(&h)?;
    let alpha_star = packing.value;
    let m0 = (alpha_star + FLOOR_GUARD).floor() as u64;
    Ok(ZeroErrorSize { alpha_star, m0, packing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel;

    #[test]
    fn hypergraph_shapes() {
        let bsc = channel::bsc(0.1).unwrap();
        let h = hypergraph(&bsc, 0.0);
        assert_eq!(h.edges, vec![vec![0, 1]]);
        assert_eq!(h.edge_origin, vec![Some(0), Some(0)]);

        let id = channel::noiseless(2).unwrap();
        let h = hypergraph(&id, 0.0);
        assert_eq!(h.edges.len(), 2);
        assert_eq!(h.display_edges(), "{0}\n{1}");

        let tw = channel::typewriter(5, 0.5).unwrap();
        let h = hypergraph(&tw, 0.0);
        assert_eq!(h.edges.len(), 5);
        for (y, e) in h.edge_origin.iter().enumerate() {
            let mut expected = vec![(y + 4) % 5, y];
            expected.sort_unstable();
            assert_eq!(h.edges[e.unwrap()], expected);
        }
    }

    #[test]
    fn packing_covering_values() {
        let bsc = channel::bsc(0.1).unwrap();
        let h = hypergraph(&bsc, 0.0);
        assert!((fractional_packing(&h).unwrap().value - 1.0).abs() < 1e-9);
        assert!((fractional_covering(&h).unwrap().value - 1.0).abs() < 1e-9);

        let id = channel::noiseless(4).unwrap();
        let h = hypergraph(&id, 0.0);
        assert!((fractional_packing(&h).unwrap().value - 4.0).abs() < 1e-9);
        assert!((fractional_covering(&h).unwrap().value - 4.0).abs() < 1e-9);

        let tw = channel::typewriter(5, 0.3).unwrap();
        let h = hypergraph(&tw, 0.0);
        assert!((fractional_packing(&h).unwrap().value - 2.5).abs() < 1e-9);
        assert!((fractional_covering(&h).unwrap().value - 2.5).abs() < 1e-9);
    }

    #[test]
    fn alpha_star_at_fixed_input() {
        let id = channel::noiseless(2).unwrap();
        assert!((alpha_star_p(&id, &[0.5, 0.5]).unwrap() - 2.0).abs() < 1e-12);

        let bsc = channel::bsc(0.1).unwrap();
        assert!((alpha_star_p(&bsc, &[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-12);

        let tw = channel::typewriter(5, 0.5).unwrap();
        let uniform = vec![0.2; 5];
        assert!((alpha_star_p(&tw, &uniform).unwrap() - 2.5).abs() < 1e-12);

        assert!(alpha_star_p(&bsc, &[1.0]).is_err());
    }

    #[test]
    fn zero_error_sizes() {
        let bsc = channel::bsc(0.1).unwrap();
        let z = zero_error_size(&bsc).unwrap();
        assert!((z.alpha_star - 1.0).abs() < 1e-9);
        assert_eq!(z.m0, 1);

        let tw = channel::typewriter(5, 0.5).unwrap();
        let z = zero_error_size(&tw).unwrap();
        assert!((z.alpha_star - 2.5).abs() < 1e-9);
        assert_eq!(z.m0, 2);

        let id3 = channel::noiseless(3).unwrap();
        let z = zero_error_size(&id3).unwrap();
        assert!((z.alpha_star - 3.0).abs() < 1e-9);
        assert_eq!(z.m0, 3);
    }
}
