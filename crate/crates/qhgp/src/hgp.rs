//! Square-base hypergraph product and its parameter theory.
//!
//! For a square base matrix B of size s the check matrices are
//! `H_X = [B (x) I | I (x) B^T]` and `H_Z = [I (x) B | B^T (x) I]`, with
//! check row (i,j) at index s*i + j, first-block column (a,b) at s*a + b and
//! second-block column (a,b) at s^2 + s*a + b.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::basegen::BaseMatrix;
use crate::gf2::{self, BitMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Origin {
    Hgp { base: String },
    Lifted { p: u64, base: String },
    External,
}

/// A CSS code: a pair of orthogonal binary check matrices over the same
/// qubit set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CssCode {
    pub hx: BitMatrix,
    pub hz: BitMatrix,
    pub origin: Origin,
}

impl CssCode {
    /// Build from raw matrices, checking column counts and CSS orthogonality.
    pub fn new(hx: BitMatrix, hz: BitMatrix, origin: Origin) -> Result<Self> {
        if hx.n_cols() != hz.n_cols() {
            return Err(Error::LengthMismatch { want: hx.n_cols(), got: hz.n_cols() });
        }
        let report = verify_orthogonality(&hx, &hz);
        if let Some(bad) = report.first_bad_pair {
            return Err(Error::OddOverlap {
                x_row: bad.x_row as usize,
                z_row: bad.z_row as usize,
                overlap: bad.overlap,
            });
        }
        Ok(Self { hx, hz, origin })
    }

    pub fn n(&self) -> usize {
        self.hx.n_cols()
    }

    pub fn m_x(&self) -> usize {
        self.hx.n_rows()
    }

    pub fn m_z(&self) -> usize {
        self.hz.n_rows()
    }

    /// Logical qubit count n - rank(H_X) - rank(H_Z). Runs two eliminations.
    pub fn logical_qubits(&self) -> usize {
        self.n() - gf2::rank(&self.hx) - gf2::rank(&self.hz)
    }
}

/// Degree structure of a CSS code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularity {
    Regular { dv: usize, dc: usize },
    Irregular {
        variable_weights: BTreeMap<usize, u64>,
        check_weights: BTreeMap<usize, u64>,
    },
}

/// Code parameters of a square-base HGP code.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeParams {
    pub base: String,
    pub s: usize,
    pub rho_b: usize,
    pub c_b: usize,
    pub n: usize,
    pub m_x: usize,
    pub m_z: usize,
    pub rho_x: usize,
    pub rho_z: usize,
    pub k: usize,
    pub k_des: i64,
    pub r_des: f64,
    /// HGP distance min(d_B, d_{B^T}); `None` when the corank exceeds the
    /// exhaustive kernel-enumeration cap.
    pub d: Option<usize>,
    pub regularity: Regularity,
}

/// Hypergraph product of a square base matrix.
pub fn build_hgp(b: &BaseMatrix) -> CssCode {
    let m = &b.matrix;
    assert_eq!(m.n_rows(), m.n_cols(), "base matrix must be square");
    let s = m.n_rows();
    let s2 = (s * s) as u32;
    let cols = m.col_supports();
    let mut hx_rows = Vec::with_capacity(s * s);
    let mut hz_rows = Vec::with_capacity(s * s);
    for i in 0..s {
        for j in 0..s {
            let mut x_row: Vec<u32> = m
                .row(i)
                .iter()
                .map(|&a| a * s as u32 + j as u32)
                .collect();
            x_row.extend(cols[j].iter().map(|&bb| s2 + (s * i) as u32 + bb));
            hx_rows.push(x_row);
            let mut z_row: Vec<u32> = m
                .row(j)
                .iter()
                .map(|&bb| (s * i) as u32 + bb)
                .collect();
            z_row.extend(cols[i].iter().map(|&a| s2 + a * s as u32 + j as u32));
            hz_rows.push(z_row);
        }
    }
    let n = 2 * s * s;
    CssCode {
        hx: BitMatrix::from_rows(n, hx_rows),
        hz: BitMatrix::from_rows(n, hz_rows),
        origin: Origin::Hgp { base: b.label.clone() },
    }
}

/// Parameters of the HGP code of `b`: the rank formula
/// rho_X = rho_Z = s^2 - c_B^2 is cross-checked against direct elimination
/// on the built matrices, and d = min(d_B, d_{B^T}) via exhaustive kernel
/// enumeration when the corank is within the cap.
pub fn hgp_params(b: &BaseMatrix) -> CodeParams {
    let s = b.size();
    let rho_b = gf2::rank(&b.matrix);
    let c_b = s - rho_b;
    let code = build_hgp(b);
    let rho_x = gf2::rank(&code.hx);
    let rho_z = gf2::rank(&code.hz);
    assert_eq!(rho_x, s * s - c_b * c_b, "rank formula mismatch on H_X");
    assert_eq!(rho_z, s * s - c_b * c_b, "rank formula mismatch on H_Z");
    let n = 2 * s * s;
    let k = n - rho_x - rho_z;
    let d = match (
        gf2::min_kernel_weight(&b.matrix),
        gf2::min_kernel_weight(&b.matrix.transpose()),
    ) {
        (Ok(db), Ok(dt)) => match (db, dt) {
            (Some(a), Some(bb)) => Some(a.min(bb)),
            _ => None, // full column rank on a side: no kernel distance
        },
        _ => None, // corank beyond the enumeration cap: d unknown
    };
    CodeParams {
        base: b.label.clone(),
        s,
        rho_b,
        c_b,
        n,
        m_x: s * s,
        m_z: s * s,
        rho_x,
        rho_z,
        k,
        k_des: n as i64 - 2 * (s * s) as i64,
        r_des: 0.0,
        d,
        regularity: check_regularity(&code),
    }
}

/// Degree report: `Regular(dv, dc)` when all variable columns share one
/// weight and all check rows share one weight; the offending multisets
/// otherwise. For HGP codes regularity holds exactly when the base is
/// row-and-column regular, and then dc = 2 dv.
pub fn check_regularity(code: &CssCode) -> Regularity {
    let mut variable_weights: BTreeMap<usize, u64> = BTreeMap::new();
    for w in code.hx.col_weights().into_iter().chain(code.hz.col_weights()) {
        *variable_weights.entry(w).or_insert(0) += 1;
    }
    let mut check_weights: BTreeMap<usize, u64> = BTreeMap::new();
    for w in code.hx.row_weights().into_iter().chain(code.hz.row_weights()) {
        *check_weights.entry(w).or_insert(0) += 1;
    }
    if variable_weights.len() == 1 && check_weights.len() == 1 {
        let dv = *variable_weights.keys().next().expect("nonempty");
        let dc = *check_weights.keys().next().expect("nonempty");
        if matches!(code.origin, Origin::Hgp { .. }) {
            assert_eq!(dc, 2 * dv, "HGP regularity must satisfy dc = 2 dv");
        }
        Regularity::Regular { dv, dc }
    } else {
        Regularity::Irregular { variable_weights, check_weights }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BadPair {
    pub x_row: u32,
    pub z_row: u32,
    pub overlap: usize,
}

/// Census of (x-row, z-row) support overlaps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlapReport {
    /// overlap size -> pair count, over pairs with nonzero overlap.
    pub pairs_by_overlap: BTreeMap<usize, u64>,
    pub overlapping_pairs: u64,
    pub bad_pairs: u64,
    pub first_bad_pair: Option<BadPair>,
}

/// Count (x-row, z-row) pairs by overlap size; a pair with odd overlap
/// breaks CSS orthogonality and the first one is returned as a witness.
pub fn verify_orthogonality(hx: &BitMatrix, hz: &BitMatrix) -> OverlapReport {
    assert_eq!(hx.n_cols(), hz.n_cols(), "hx and hz must have equal column counts");
    let z_cols = hz.col_supports();
    let mut counts: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for (i, row) in hx.rows().iter().enumerate() {
        for &c in row {
            for &j in &z_cols[c as usize] {
                *counts.entry((i as u32, j)).or_insert(0) += 1;
            }
        }
    }
    let mut pairs_by_overlap: BTreeMap<usize, u64> = BTreeMap::new();
    let mut bad_pairs = 0u64;
    let mut first_bad_pair = None;
    for (&(x_row, z_row), &o) in &counts {
        *pairs_by_overlap.entry(o).or_insert(0) += 1;
        if o % 2 == 1 {
            bad_pairs += 1;
            if first_bad_pair.is_none() {
                first_bad_pair = Some(BadPair { x_row, z_row, overlap: o });
            }
        }
    }
    OverlapReport {
        pairs_by_overlap,
        overlapping_pairs: counts.len() as u64,
        bad_pairs,
        first_bad_pair,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basegen::{self, BaseMatrix, Construction};
    use crate::gf2::sorted_intersection_size;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_base(rng: &mut ChaCha8Rng, s: usize) -> BaseMatrix {
        let rows = (0..s)
            .map(|_| (0..s as u32).filter(|_| rng.gen_bool(0.4)).collect())
            .collect();
        BaseMatrix {
            matrix: BitMatrix::from_rows(s, rows),
            label: "random".to_string(),
            construction: Construction::Search { s, w: 0 },
        }
    }

    #[test]
    fn b7_shape() {
        let code = build_hgp(&basegen::b7());
        assert_eq!(code.n(), 98);
        assert_eq!(code.m_x(), 49);
        assert_eq!(code.m_z(), 49);
    }

    #[test]
    fn b15_shape_and_row_convention() {
        let b = basegen::b15();
        let code = build_hgp(&b);
        assert_eq!(code.n(), 450);
        assert_eq!(code.m_x(), 225);
        // Row (i,j) of H_X supports {15a + j} in block 1 and {225 + 15i + b}
        // in block 2.
        let expected: Vec<u32> = b
            .matrix
            .row(0)
            .iter()
            .map(|&a| 15 * a)
            .chain(b.matrix.col_supports()[0].iter().map(|&bb| 225 + bb))
            .collect();
        let mut expected = expected;
        expected.sort_unstable();
        assert_eq!(code.hx.row(0), &expected[..]);
    }

    #[test]
    fn orthogonality_for_random_bases() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let s = rng.gen_range(2..7);
            let code = build_hgp(&random_base(&mut rng, s));
            let report = verify_orthogonality(&code.hx, &code.hz);
            assert_eq!(report.bad_pairs, 0, "HGP of any base must be orthogonal");
            // Every row of hx has even overlap with every row of hz.
            for xr in code.hx.rows() {
                for zr in code.hz.rows() {
                    assert_eq!(sorted_intersection_size(xr, zr) % 2, 0);
                }
            }
        }
    }

    #[test]
    fn params_table_rows() {
        let p7 = hgp_params(&basegen::b7());
        assert_eq!((p7.n, p7.k, p7.d), (98, 18, Some(4)));
        assert_eq!((p7.m_x, p7.rho_x), (49, 40));
        assert_eq!(p7.regularity, Regularity::Regular { dv: 3, dc: 6 });
        assert_eq!(p7.k_des, 0);
        assert_eq!(p7.r_des, 0.0);

        let p30 = hgp_params(&basegen::b30());
        assert_eq!((p30.n, p30.k, p30.rho_x, p30.d), (1800, 162, 819, Some(6)));
    }

    #[test]
    fn full_rank_base_gives_k_zero() {
        let b = BaseMatrix {
            matrix: BitMatrix::identity(4),
            label: "I4".to_string(),
            construction: Construction::Search { s: 4, w: 1 },
        };
        assert_eq!(hgp_params(&b).k, 0);
    }

    #[test]
    fn regularity_of_fixtures() {
        assert_eq!(
            check_regularity(&build_hgp(&basegen::b15())),
            Regularity::Regular { dv: 3, dc: 6 }
        );
        assert_eq!(
            check_regularity(&build_hgp(&basegen::b13())),
            Regularity::Regular { dv: 4, dc: 8 }
        );
    }

    #[test]
    fn irregular_base_reports_check_weights() {
        // 4x4 base with one row of weight 2 and the rest weight 3; column
        // weights then also split as {2, 3}, so check weights a_i + b_j
        // realize {4, 5, 6}.
        let rows = vec![vec![0, 1], vec![0, 1, 2], vec![1, 2, 3], vec![0, 2, 3]];
        let b = BaseMatrix {
            matrix: BitMatrix::from_rows(4, rows),
            label: "irregular".to_string(),
            construction: Construction::Search { s: 4, w: 3 },
        };
        let code = build_hgp(&b);
        match check_regularity(&code) {
            Regularity::Irregular { check_weights, .. } => {
                let weights: Vec<usize> = check_weights.keys().copied().collect();
                assert_eq!(weights, vec![4, 5, 6]);
                // Direct count from the row/column weight sums a_i + b_j.
                let a = b.matrix.row_weights();
                let bw = b.matrix.col_weights();
                let mut expect: BTreeMap<usize, u64> = BTreeMap::new();
                for &ai in &a {
                    for &bj in &bw {
                        *expect.entry(ai + bj).or_insert(0) += 1; // H_X row (i,j)
                    }
                }
                for &bi in &bw {
                    for &aj in &a {
                        *expect.entry(bi + aj).or_insert(0) += 1; // H_Z row (i,j)
                    }
                }
                assert_eq!(check_weights, expect);
            }
            r => panic!("expected irregular report, got {r:?}"),
        }
    }

    #[test]
    fn column_weights_follow_base_structure() {
        for (b, _w) in [(basegen::b7(), 3), (basegen::b13(), 4)] {
            let code = build_hgp(&b);
            let s = b.size();
            let cw = code.hx.col_weights();
            let base_col = b.matrix.col_weights();
            let base_row = b.matrix.row_weights();
            for a in 0..s {
                for j in 0..s {
                    assert_eq!(cw[a * s + j], base_col[a]);
                    assert_eq!(cw[s * s + a * s + j], base_row[a]);
                }
            }
        }
    }

    #[test]
    fn b15_hgp_overlap_histogram() {
        let code = build_hgp(&basegen::b15());
        let report = verify_orthogonality(&code.hx, &code.hz);
        assert_eq!(report.bad_pairs, 0);
        assert_eq!(report.overlapping_pairs, 2025);
        assert_eq!(report.pairs_by_overlap, BTreeMap::from([(2usize, 2025u64)]));
    }

    #[test]
    fn broken_pair_yields_bad_witness() {
        let code = build_hgp(&basegen::b7());
        let mut hz_rows: Vec<Vec<u32>> = code.hz.rows().to_vec();
        // Flip one bit of one z-row.
        if let Some(pos) = hz_rows[0].iter().position(|&c| c == code.hx.row(0)[0]) {
            hz_rows[0].remove(pos);
        } else {
            hz_rows[0].push(code.hx.row(0)[0]);
            hz_rows[0].sort_unstable();
        }
        let hz = BitMatrix::from_rows(code.hz.n_cols(), hz_rows);
        let report = verify_orthogonality(&code.hx, &hz);
        assert!(report.bad_pairs >= 1);
        assert!(report.first_bad_pair.is_some());
    }

    #[test]
    fn hgp_girth_of_clean_bases_is_at_least_8() {
        use crate::tanner::{tanner_girth_upto, Girth};
        for b in [basegen::b15(), basegen::b30()] {
            let code = build_hgp(&b);
            for m in [&code.hx, &code.hz] {
                let g = tanner_girth_upto(m, 8);
                assert_eq!(g.girth, Girth::Cycle(8));
            }
        }
    }

    #[test]
    fn fano_hgp_has_girth_6() {
        use crate::tanner::{css_overlap_distribution, tanner_girth_upto, Girth};
        let code = build_hgp(&basegen::b7());
        assert_eq!(tanner_girth_upto(&code.hx, 8).girth, Girth::Cycle(6));
        assert_eq!(tanner_girth_upto(&code.hz, 8).girth, Girth::Cycle(6));
        // Overlap census of the base-level pair, for comparison with the
        // lifted instance.
        let b15 = build_hgp(&basegen::b15());
        let d = css_overlap_distribution(&b15.hx, &b15.hz);
        assert_eq!(d.by_size, BTreeMap::from([(2usize, 2025u64)]));
        assert_eq!(d.combined_four_cycle_count, 2025);
    }
}
