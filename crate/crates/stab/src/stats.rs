//! Summary statistics printed after graph generation.

use std::fmt;

use stab_core::{DirectedGraph, NodeId};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub max_out_degree: usize,
    pub max_in_degree: usize,
    /// Slope of the log-log complementary degree distribution over the upper
    /// decade of degrees; `None` when the degree range is too narrow.
    pub tail_exponent: Option<f64>,
}

impl GraphStats {
    pub fn of(g: &DirectedGraph) -> Self {
        let degrees: Vec<usize> = (0..g.node_count() as NodeId).map(|u| g.out_degree(u)).collect();
        Self {
            nodes: g.node_count(),
            edges: g.edge_count(),
            max_out_degree: g.max_out_degree(),
            max_in_degree: g.max_in_degree(),
            tail_exponent: degree_tail_exponent(&degrees),
        }
    }
}

impl fmt::Display for GraphStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} m={} max_out_degree={} max_in_degree={}",
            self.nodes, self.edges, self.max_out_degree, self.max_in_degree
        )?;
        match self.tail_exponent {
            Some(x) => write!(f, " tail_exponent={x:.3}"),
            None => Ok(()),
        }
    }
}

/// Least-squares slope of `ln P(D >= d)` against `ln d` over the decade
/// `[10 d_min, 100 d_min]`, `d_min` the smallest positive degree, using only
/// degrees with at least five nodes at or above them. For a power law `P(D = d) ~ d^-g` this is about `1 - g`, so the
/// density exponent is the slope minus one.
pub fn degree_tail_exponent(degrees: &[usize]) -> Option<f64> {
    let min = degrees.iter().copied().filter(|&d| d > 0).min()?;
    let max = *degrees.iter().max()?;
    let lo = 10 * min;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for d in lo..=max.min(10 * lo) {
        let tail = degrees.iter().filter(|&&x| x >= d).count();
        if tail >= 5 {
            xs.push((d as f64).ln());
            ys.push((tail as f64 / degrees.len() as f64).ln());
        }
    }
    if xs.len() < 3 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use stab_core::graph::generate_ba;

    #[test]
    fn ba_tail_looks_like_minus_three() {
        let g = generate_ba(10_000, 1, 5).unwrap();
        let s = GraphStats::of(&g);
        let x = s.tail_exponent.unwrap();
        assert!((-3.5..=-2.5).contains(&x), "{x}");
        assert!(s.to_string().starts_with("n=10000 m=19998 "));
    }

    #[test]
    fn flat_degrees_have_no_tail() {
        assert_eq!(degree_tail_exponent(&[2; 50]), None);
        assert_eq!(degree_tail_exponent(&[]), None);
    }
}
