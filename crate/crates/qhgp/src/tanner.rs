//! Tanner-graph certification: short-cycle detection with witnesses,
//! connectivity, forced-8-cycle enumeration, and the CSS overlap census.
//!
//! Cycle search operates on the row-overlap multigraph: check rows are
//! vertices and a shared variable column is an edge, labeled by the first
//! (lowest-index) shared column. Simple cycles require distinct labels;
//! closed walks through a repeated variable are degenerate and counted
//! separately.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::gf2::BitMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    X,
    Z,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::X => write!(f, "X"),
            Side::Z => write!(f, "Z"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Girth {
    Cycle(u32),
    /// No cycle found up to the search bound.
    AcyclicUpTo(u32),
}

/// Alternating check/variable cycle: `checks[t]` is adjacent to
/// `variables[t-1]` and `variables[t]` (indices mod the cycle length).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleWitness {
    pub checks: Vec<u32>,
    pub variables: Vec<u32>,
}

impl CycleWitness {
    /// Vertex list in traversal order, `check_i`/`var_j` labels.
    pub fn vertex_list(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(2 * self.checks.len() + 1);
        for (c, v) in self.checks.iter().zip(&self.variables) {
            out.push(format!("check_{c}"));
            out.push(format!("var_{v}"));
        }
        out.push(format!("check_{}", self.checks[0]));
        out
    }

    /// True iff the witness is a closed alternating cycle of `m` with
    /// distinct checks and distinct variables.
    pub fn validates_against(&self, m: &BitMatrix) -> bool {
        let k = self.checks.len();
        if k != self.variables.len() || k < 2 {
            return false;
        }
        let mut cs = self.checks.clone();
        cs.sort_unstable();
        cs.dedup();
        let mut vs = self.variables.clone();
        vs.sort_unstable();
        vs.dedup();
        if cs.len() != k || vs.len() != k {
            return false;
        }
        (0..k).all(|t| {
            let c = self.checks[t] as usize;
            let prev = self.variables[(t + k - 1) % k];
            let cur = self.variables[t];
            m.row(c).binary_search(&prev).is_ok() && m.row(c).binary_search(&cur).is_ok()
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GirthReport {
    pub girth: Girth,
    pub witness: Option<CycleWitness>,
    pub degenerate_triangles_seen: u64,
    pub row_overlap_multiplicity_histogram: BTreeMap<usize, u64>,
    pub row_overlap_edge_count: usize,
    pub row_overlap_degree_histogram: BTreeMap<usize, u64>,
    pub four_cycle_witness: Option<CycleWitness>,
    pub six_cycle_witness: Option<CycleWitness>,
    pub eight_cycle_witness: Option<CycleWitness>,
    pub ten_cycle_witness: Option<CycleWitness>,
}

/// One orthogonality-forced Tanner 8-cycle of an HGP side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForcedCycle {
    pub side: Side,
    pub checks: [u32; 4],
    pub variables: [u32; 4],
}

impl ForcedCycle {
    pub fn witness(&self) -> CycleWitness {
        CycleWitness { checks: self.checks.to_vec(), variables: self.variables.to_vec() }
    }
}

/// Row-overlap multigraph of a parity-check matrix.
pub(crate) struct RowOverlapGraph {
    /// Per row: sorted (neighbor, label) pairs; the label is the first shared
    /// column in increasing column order.
    pub adj: Vec<Vec<(u32, u32)>>,
    pub multiplicity_histogram: BTreeMap<usize, u64>,
    pub edge_count: usize,
    pub four_cycle_witness: Option<CycleWitness>,
}

impl RowOverlapGraph {
    pub fn build(m: &BitMatrix) -> Self {
        let mut maps: Vec<BTreeMap<u32, (u32, usize)>> = vec![BTreeMap::new(); m.n_rows()];
        let mut four: Option<CycleWitness> = None;
        for (c, rows) in m.col_supports().iter().enumerate() {
            for ai in 0..rows.len() {
                for bi in ai + 1..rows.len() {
                    let (a, b) = (rows[ai], rows[bi]);
                    match maps[a as usize].get_mut(&b) {
                        Some(entry) => {
                            entry.1 += 1;
                            if four.is_none() {
                                four = Some(CycleWitness {
                                    checks: vec![a, b],
                                    variables: vec![entry.0, c as u32],
                                });
                            }
                        }
                        None => {
                            maps[a as usize].insert(b, (c as u32, 1));
                        }
                    }
                }
            }
        }
        let mut hist: BTreeMap<usize, u64> = BTreeMap::new();
        let mut edge_count = 0usize;
        let mut adj: Vec<Vec<(u32, u32)>> = vec![Vec::new(); m.n_rows()];
        for (a, map) in maps.iter().enumerate() {
            for (&b, &(label, mult)) in map {
                *hist.entry(mult).or_insert(0) += 1;
                edge_count += 1;
                adj[a].push((b, label));
                adj[b as usize].push((a as u32, label));
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Self { adj, multiplicity_histogram: hist, edge_count, four_cycle_witness: four }
    }

    pub fn label(&self, a: u32, b: u32) -> Option<u32> {
        let list = &self.adj[a as usize];
        list.binary_search_by_key(&b, |&(n, _)| n).ok().map(|i| list[i].1)
    }

    pub fn degree_histogram(&self) -> BTreeMap<usize, u64> {
        let mut h = BTreeMap::new();
        for list in &self.adj {
            *h.entry(list.len()).or_insert(0) += 1;
        }
        h
    }

    /// Scan row triangles; returns the first simple 6-cycle (three distinct
    /// labels) and the number of degenerate triangles seen before it.
    pub fn first_simple_six(&self) -> (Option<CycleWitness>, u64) {
        let mut degenerate = 0u64;
        for (a, list) in self.adj.iter().enumerate() {
            let nbrs: Vec<(u32, u32)> =
                list.iter().copied().filter(|&(b, _)| b > a as u32).collect();
            for (i, &(b, lab_ab)) in nbrs.iter().enumerate() {
                for &(c, lab_ac) in &nbrs[i + 1..] {
                    let Some(lab_bc) = self.label(b, c) else { continue };
                    if lab_ab != lab_bc && lab_bc != lab_ac && lab_ab != lab_ac {
                        return (
                            Some(CycleWitness {
                                checks: vec![a as u32, b, c],
                                variables: vec![lab_ab, lab_bc, lab_ac],
                            }),
                            degenerate,
                        );
                    }
                    degenerate += 1;
                }
            }
        }
        (None, degenerate)
    }

    /// First row 4-cycle with four distinct labels, i.e. a Tanner 8-cycle.
    pub fn first_eight(&self) -> Option<CycleWitness> {
        for (r0, list) in self.adj.iter().enumerate() {
            let r0 = r0 as u32;
            for (i, &(r1, lab01)) in list.iter().enumerate() {
                for &(r3, lab30) in &list[i + 1..] {
                    for &(r2, lab12) in &self.adj[r1 as usize] {
                        if r2 == r0 || r2 == r1 || r2 == r3 {
                            continue;
                        }
                        let Some(lab23) = self.label(r2, r3) else { continue };
                        let labels = [lab01, lab12, lab23, lab30];
                        if distinct4(labels) {
                            return Some(CycleWitness {
                                checks: vec![r0, r1, r2, r3],
                                variables: labels.to_vec(),
                            });
                        }
                    }
                }
            }
        }
        None
    }

    /// First row 5-cycle with five distinct labels, i.e. a Tanner 10-cycle.
    pub fn first_ten(&self) -> Option<CycleWitness> {
        let n = self.adj.len() as u32;
        for r0 in 0..n {
            for &(r1, lab01) in &self.adj[r0 as usize] {
                if r1 <= r0 {
                    continue;
                }
                for &(r2, lab12) in &self.adj[r1 as usize] {
                    if r2 <= r0 || r2 == r1 {
                        continue;
                    }
                    for &(r3, lab23) in &self.adj[r2 as usize] {
                        if r3 <= r0 || r3 == r1 || r3 == r2 {
                            continue;
                        }
                        for &(r4, lab34) in &self.adj[r3 as usize] {
                            if r4 <= r0 || r4 == r1 || r4 == r2 || r4 == r3 || r1 > r4 {
                                continue;
                            }
                            let Some(lab40) = self.label(r4, r0) else { continue };
                            let labels = [lab01, lab12, lab23, lab34, lab40];
                            if distinct5(labels) {
                                return Some(CycleWitness {
                                    checks: vec![r0, r1, r2, r3, r4],
                                    variables: labels.to_vec(),
                                });
                            }
                        }
                    }
                }
            }
        }
        None
    }
}

pub(crate) fn distinct4(v: [u32; 4]) -> bool {
    v[0] != v[1]
        && v[0] != v[2]
        && v[0] != v[3]
        && v[1] != v[2]
        && v[1] != v[3]
        && v[2] != v[3]
}

pub(crate) fn distinct5(v: [u32; 5]) -> bool {
    for i in 0..5 {
        for j in i + 1..5 {
            if v[i] == v[j] {
                return false;
            }
        }
    }
    true
}

/// Certify the girth of the Tanner graph of `m` up to `lmax` (8 or 10),
/// with a witness for the detected girth.
pub fn tanner_girth_upto(m: &BitMatrix, lmax: u32) -> GirthReport {
    assert!(lmax == 8 || lmax == 10, "girth certification is bounded at 8 or 10");
    let g = RowOverlapGraph::build(m);
    let (six, degenerate) = g.first_simple_six();
    let eight = g.first_eight();
    let ten = if lmax >= 10 && g.four_cycle_witness.is_none() && six.is_none() && eight.is_none()
    {
        g.first_ten()
    } else {
        None
    };
    let (girth, witness) = if let Some(w) = &g.four_cycle_witness {
        (Girth::Cycle(4), Some(w.clone()))
    } else if let Some(w) = &six {
        (Girth::Cycle(6), Some(w.clone()))
    } else if let Some(w) = &eight {
        (Girth::Cycle(8), Some(w.clone()))
    } else if let Some(w) = &ten {
        (Girth::Cycle(10), Some(w.clone()))
    } else {
        (Girth::AcyclicUpTo(lmax), None)
    };
    GirthReport {
        girth,
        witness,
        degenerate_triangles_seen: degenerate,
        row_overlap_multiplicity_histogram: g.multiplicity_histogram.clone(),
        row_overlap_edge_count: g.edge_count,
        row_overlap_degree_histogram: g.degree_histogram(),
        four_cycle_witness: g.four_cycle_witness.clone(),
        six_cycle_witness: six,
        eight_cycle_witness: eight,
        ten_cycle_witness: ten,
    }
}

/// Connected-component sizes (checks + variables) of the Tanner graph,
/// sorted descending.
pub fn connected_components(m: &BitMatrix) -> Vec<usize> {
    let n_rows = m.n_rows();
    let total = n_rows + m.n_cols();
    let col_rows = m.col_supports();
    let mut seen = vec![false; total];
    let mut sizes = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    for start in 0..total {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut size = 0usize;
        while let Some(node) = queue.pop_front() {
            size += 1;
            if node < n_rows {
                for &c in m.row(node) {
                    let v = n_rows + c as usize;
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            } else {
                for &r in &col_rows[node - n_rows] {
                    if !seen[r as usize] {
                        seen[r as usize] = true;
                        queue.push_back(r as usize);
                    }
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Number of Tanner 8-cycles forced by CSS orthogonality on each side of the
/// square HGP of an `s x s` `w`-regular base: `s^2 * C(w,2)^2`.
pub fn forced_8cycle_count(s: usize, w: usize) -> u64 {
    let pairs = (w * w.saturating_sub(1) / 2) as u64;
    (s * s) as u64 * pairs * pairs
}

/// Enumerate the orthogonality-forced Tanner 8-cycles of one HGP side of the
/// square base matrix, one per ((row pair with shared column), (column pair
/// with shared row)).
pub fn enumerate_forced_8cycles(base: &BitMatrix, side: Side) -> Vec<ForcedCycle> {
    assert_eq!(base.n_rows(), base.n_cols(), "base matrix must be square");
    let s = base.n_rows() as u32;
    let cols = base.col_supports();
    // (i < i', u) with u a column shared by base rows i and i'.
    let mut row_pairs: Vec<(u32, u32, u32)> = Vec::new();
    for (u, rs) in cols.iter().enumerate() {
        for a in 0..rs.len() {
            for b in a + 1..rs.len() {
                row_pairs.push((rs[a], rs[b], u as u32));
            }
        }
    }
    // (j < j', v) with v a row shared by base columns j and j'.
    let mut col_pairs: Vec<(u32, u32, u32)> = Vec::new();
    for (v, row) in base.rows().iter().enumerate() {
        for a in 0..row.len() {
            for b in a + 1..row.len() {
                col_pairs.push((row[a], row[b], v as u32));
            }
        }
    }
    let mut out = Vec::with_capacity(row_pairs.len() * col_pairs.len());
    for &(i, ip, u) in &row_pairs {
        for &(j, jp, v) in &col_pairs {
            let cycle = match side {
                Side::X => ForcedCycle {
                    side,
                    checks: [s * i + j, s * ip + j, s * ip + jp, s * i + jp],
                    variables: [
                        s * u + j,
                        s * s + s * ip + v,
                        s * u + jp,
                        s * s + s * i + v,
                    ],
                },
                // For H_Z the roles of rows and columns swap: (j, j') is a
                // pair of base rows sharing u and (i, i') a pair of base
                // columns sharing v.
                Side::Z => ForcedCycle {
                    side,
                    checks: [s * j + i, s * j + ip, s * jp + ip, s * jp + i],
                    variables: [
                        s * j + u,
                        s * s + s * v + ip,
                        s * jp + u,
                        s * s + s * v + i,
                    ],
                },
            };
            out.push(cycle);
        }
    }
    out
}

/// Overlap census between the rows of `hx` and `hz`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CssOverlapDistribution {
    /// overlap size -> number of (x-row, z-row) pairs with that (nonzero)
    /// overlap.
    pub by_size: BTreeMap<usize, u64>,
    /// 4-cycles of the combined X+Z Tanner graph: sum of C(overlap, 2).
    pub combined_four_cycle_count: u64,
}

pub fn css_overlap_distribution(hx: &BitMatrix, hz: &BitMatrix) -> CssOverlapDistribution {
    assert_eq!(hx.n_cols(), hz.n_cols(), "hx and hz must have equal column counts");
    let mut counts: std::collections::HashMap<(u32, u32), usize> =
        std::collections::HashMap::new();
    let z_cols = hz.col_supports();
    for (i, row) in hx.rows().iter().enumerate() {
        for &c in row {
            for &j in &z_cols[c as usize] {
                *counts.entry((i as u32, j)).or_insert(0) += 1;
            }
        }
    }
    let mut by_size: BTreeMap<usize, u64> = BTreeMap::new();
    let mut four = 0u64;
    for &o in counts.values() {
        *by_size.entry(o).or_insert(0) += 1;
        four += (o * (o - 1) / 2) as u64;
    }
    CssOverlapDistribution { by_size, combined_four_cycle_count: four }
}

// --- verification report ------------------------------------------------

fn hist_json(h: &BTreeMap<usize, u64>) -> serde_json::Value {
    let map: serde_json::Map<String, serde_json::Value> =
        h.iter().map(|(k, v)| (k.to_string(), serde_json::json!(v))).collect();
    serde_json::Value::Object(map)
}

fn witness_json(w: &Option<CycleWitness>) -> serde_json::Value {
    match w {
        None => serde_json::Value::Null,
        Some(w) => serde_json::json!({
            "checks": w.checks,
            "variables": w.variables,
            "cycle": w.vertex_list(),
        }),
    }
}

fn basic_stats(m: &BitMatrix) -> serde_json::Value {
    let mut row_hist: BTreeMap<usize, u64> = BTreeMap::new();
    for w in m.row_weights() {
        *row_hist.entry(w).or_insert(0) += 1;
    }
    let mut col_hist: BTreeMap<usize, u64> = BTreeMap::new();
    for w in m.col_weights() {
        *col_hist.entry(w).or_insert(0) += 1;
    }
    serde_json::json!({
        "m": m.n_rows(),
        "n": m.n_cols(),
        "edges": m.row_weights().iter().sum::<usize>(),
        "row_weight_distribution": hist_json(&row_hist),
        "column_weight_distribution": hist_json(&col_hist),
        "rows_with_duplicate_columns": [],
        "rows_with_duplicate_columns_count": 0,
    })
}

fn tanner_graph_json(report: &GirthReport, components: &[usize]) -> serde_json::Value {
    let girth = match report.girth {
        Girth::Cycle(g) => serde_json::json!(g),
        Girth::AcyclicUpTo(_) => serde_json::Value::Null,
    };
    serde_json::json!({
        "girth": girth,
        "no_4_cycles": report.four_cycle_witness.is_none(),
        "no_simple_6_cycles": report.six_cycle_witness.is_none(),
        "has_8_cycle": report.eight_cycle_witness.is_some(),
        "four_cycle_witness": witness_json(&report.four_cycle_witness),
        "simple_six_cycle_witness": witness_json(&report.six_cycle_witness),
        "eight_cycle_witness": witness_json(&report.eight_cycle_witness),
        "row_overlap_edge_count": report.row_overlap_edge_count,
        "row_overlap_degree_distribution": hist_json(&report.row_overlap_degree_histogram),
        "row_pair_overlap_multiplicity_distribution":
            hist_json(&report.row_overlap_multiplicity_histogram),
        "degenerate_row_overlap_triangles_seen_before_first_simple_6":
            report.degenerate_triangles_seen,
        "connected_component_count": components.len(),
        "connected_component_sizes": components,
    })
}

fn orthogonality_json(hx: &BitMatrix, hz: &BitMatrix) -> serde_json::Value {
    let mut counts: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
    let z_cols = hz.col_supports();
    for (i, row) in hx.rows().iter().enumerate() {
        for &c in row {
            for &j in &z_cols[c as usize] {
                counts.entry((i as u32, j)).or_default().push(c);
            }
        }
    }
    let mut by_size: BTreeMap<usize, u64> = BTreeMap::new();
    let mut four = 0u64;
    let mut bad = 0u64;
    let mut first_bad = serde_json::Value::Null;
    let mut witness = serde_json::Value::Null;
    for ((x, z), cols) in &counts {
        let o = cols.len();
        *by_size.entry(o).or_insert(0) += 1;
        four += (o * (o - 1) / 2) as u64;
        if o % 2 == 1 {
            bad += 1;
            if first_bad.is_null() {
                first_bad = serde_json::json!({
                    "x_check": x, "z_check": z, "common_variables": o,
                });
            }
        }
        if o >= 2 && witness.is_null() {
            let mut common = cols.clone();
            common.sort_unstable();
            witness = serde_json::json!({
                "x_check": x,
                "z_check": z,
                "common_variables": common,
                "cycle": [
                    format!("x_check_{x}"), format!("var_{}", common[0]),
                    format!("z_check_{z}"), format!("var_{}", common[1]),
                    format!("x_check_{x}"),
                ],
            });
        }
    }
    let total_pairs = (hx.n_rows() as u64) * (hz.n_rows() as u64);
    serde_json::json!({
        "orthogonal": bad == 0,
        "bad_pair_count": bad,
        "first_bad_pair": first_bad,
        "nonzero_xz_overlap_pair_count": counts.len(),
        "zero_xz_overlap_pair_count": total_pairs - counts.len() as u64,
        "xz_overlap_size_distribution_nonzero_only": hist_json(&by_size),
        "combined_css_tanner_girth": if four > 0 { serde_json::json!(4) } else { serde_json::Value::Null },
        "combined_css_tanner_4_cycle_count_from_xz_overlaps": four,
        "combined_css_tanner_4_cycle_witness": witness,
    })
}

/// Full verification report for a CSS pair, in the layout of the reference
/// audit tooling: per-matrix basics, graph-level orthogonality, per-side
/// Tanner analysis, and a summary block.
pub fn verify_report(hx: &BitMatrix, hz: &BitMatrix) -> serde_json::Value {
    let hx_report = tanner_girth_upto(hx, 8);
    let hz_report = tanner_girth_upto(hz, 8);
    let hx_components = connected_components(hx);
    let hz_components = connected_components(hz);
    let ortho = orthogonality_json(hx, hz);
    let girth8 = hx_report.girth == Girth::Cycle(8) && hz_report.girth == Girth::Cycle(8);
    let connected = hx_components.len() == 1 && hz_components.len() == 1;
    let ortho_ok = ortho["orthogonal"].as_bool().unwrap_or(false);
    serde_json::json!({
        "hx_basic": basic_stats(hx),
        "hz_basic": basic_stats(hz),
        "css_orthogonality_graph_level": ortho,
        "hx_tanner_graph": tanner_graph_json(&hx_report, &hx_components),
        "hz_tanner_graph": tanner_graph_json(&hz_report, &hz_components),
        "summary": {
            "separate_hx_hz_tanner_girth_8": girth8,
            "separate_hx_hz_tanner_graphs_connected": connected,
            "css_orthogonality_ok": ortho_ok,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_ones_2x2_girth_4_with_witness() {
        let m = BitMatrix::from_rows(2, vec![vec![0, 1], vec![0, 1]]);
        let r = tanner_girth_upto(&m, 8);
        assert_eq!(r.girth, Girth::Cycle(4));
        let w = r.witness.unwrap();
        assert_eq!(w.checks, vec![0, 1]);
        assert_eq!(w.variables, vec![0, 1]);
        assert!(w.validates_against(&m));
    }

    #[test]
    fn identity_acyclic() {
        let r = tanner_girth_upto(&BitMatrix::identity(5), 8);
        assert_eq!(r.girth, Girth::AcyclicUpTo(8));
        assert!(r.witness.is_none());
    }

    #[test]
    fn six_cycle_detected() {
        // Three rows pairwise sharing three distinct columns.
        let m = BitMatrix::from_rows(3, vec![vec![0, 1], vec![1, 2], vec![0, 2]]);
        let r = tanner_girth_upto(&m, 8);
        assert_eq!(r.girth, Girth::Cycle(6));
        assert!(r.witness.unwrap().validates_against(&m));
    }

    #[test]
    fn degenerate_triangle_not_a_six_cycle() {
        // Three rows all sharing the single column 0: a degenerate closed
        // walk, not a simple 6-cycle.
        let m = BitMatrix::from_rows(4, vec![vec![0, 1], vec![0, 2], vec![0, 3]]);
        let r = tanner_girth_upto(&m, 8);
        assert_eq!(r.girth, Girth::AcyclicUpTo(8));
        assert_eq!(r.degenerate_triangles_seen, 1);
    }

    #[test]
    fn component_sizes_sum() {
        let m = BitMatrix::from_rows(4, vec![vec![0, 1], vec![2, 3]]);
        let sizes = connected_components(&m);
        assert_eq!(sizes.len(), 2);
        assert_eq!(sizes.iter().sum::<usize>(), m.n_rows() + m.n_cols());
    }

    #[test]
    fn disjoint_supports_empty_distribution() {
        let hx = BitMatrix::from_rows(4, vec![vec![0, 1]]);
        let hz = BitMatrix::from_rows(4, vec![vec![2, 3]]);
        let d = css_overlap_distribution(&hx, &hz);
        assert!(d.by_size.is_empty());
        assert_eq!(d.combined_four_cycle_count, 0);
    }

    #[test]
    fn forced_count_formula() {
        assert_eq!(forced_8cycle_count(15, 3), 2025);
        assert_eq!(forced_8cycle_count(40, 4), 57600);
        assert_eq!(forced_8cycle_count(9, 1), 0);
    }

    #[test]
    fn forced_cycles_of_permutation_base_empty() {
        let mut rows: Vec<Vec<u32>> = (0..6u32).map(|i| vec![(i + 2) % 6]).collect();
        rows.rotate_left(1);
        let b = BitMatrix::from_rows(6, rows);
        assert!(enumerate_forced_8cycles(&b, Side::X).is_empty());
        assert!(enumerate_forced_8cycles(&b, Side::Z).is_empty());
    }
}
