//! GF(2) linear algebra over sparse-row binary matrices.
//!
//! The sparse row list is the canonical external form; elimination runs on
//! bit-packed words so that rank audits of lifted matrices with tens of
//! thousands of columns finish in seconds.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::{Error, Result};

/// Exhaustive kernel-span enumeration bound for [`min_kernel_weight`].
pub const KERNEL_ENUM_CAP: usize = 16;

/// Sparse binary matrix over GF(2); each row is a strictly increasing list of
/// column indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitMatrix {
    n_rows: usize,
    n_cols: usize,
    rows: Vec<Vec<u32>>,
}

/// Sparse binary column vector: a length and a strictly increasing support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitVec {
    len: usize,
    support: Vec<u32>,
}

impl BitVec {
    pub fn new(len: usize, mut support: Vec<u32>) -> Self {
        support.sort_unstable();
        support.dedup();
        assert!(
            support.last().is_none_or(|&c| (c as usize) < len),
            "support index out of range"
        );
        Self { len, support }
    }

    pub fn zero(len: usize) -> Self {
        Self { len, support: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn weight(&self) -> usize {
        self.support.len()
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn get(&self, idx: usize) -> bool {
        self.support.binary_search(&(idx as u32)).is_ok()
    }

    /// Symmetric difference (GF(2) addition).
    pub fn xor(&self, other: &BitVec) -> Result<BitVec> {
        if self.len != other.len {
            return Err(Error::LengthMismatch { want: self.len, got: other.len });
        }
        let mut out = Vec::with_capacity(self.support.len() + other.support.len());
        let (mut i, mut j) = (0, 0);
        while i < self.support.len() && j < other.support.len() {
            match self.support[i].cmp(&other.support[j]) {
                std::cmp::Ordering::Less => {
                    out.push(self.support[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.support[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.support[i..]);
        out.extend_from_slice(&other.support[j..]);
        Ok(BitVec { len: self.len, support: out })
    }

    fn to_words(&self, words: usize) -> Vec<u64> {
        let mut w = vec![0u64; words];
        for &c in &self.support {
            w[(c as usize) >> 6] ^= 1u64 << (c & 63);
        }
        w
    }

    fn from_words(len: usize, words: &[u64]) -> Self {
        let mut support = Vec::new();
        for (wi, &w) in words.iter().enumerate() {
            let mut bits = w;
            while bits != 0 {
                let b = bits.trailing_zeros();
                let c = (wi as u32) * 64 + b;
                if (c as usize) < len {
                    support.push(c);
                }
                bits &= bits - 1;
            }
        }
        Self { len, support }
    }
}

impl BitMatrix {
    /// Build from sparse rows; rows are sorted and deduplicated, indices are
    /// checked against `n_cols`.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<u32>>) -> Self {
        let rows: Vec<Vec<u32>> = rows
            .into_iter()
            .map(|mut r| {
                r.sort_unstable();
                r.dedup();
                assert!(
                    r.last().is_none_or(|&c| (c as usize) < n_cols),
                    "column index out of range"
                );
                r
            })
            .collect();
        Self { n_rows: rows.len(), n_cols, rows }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, rows: vec![Vec::new(); n_rows] }
    }

    pub fn identity(s: usize) -> Self {
        Self {
            n_rows: s,
            n_cols: s,
            rows: (0..s as u32).map(|i| vec![i]).collect(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].binary_search(&(j as u32)).is_ok()
    }

    pub fn row_weights(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn col_weights(&self) -> Vec<usize> {
        let mut w = vec![0usize; self.n_cols];
        for r in &self.rows {
            for &c in r {
                w[c as usize] += 1;
            }
        }
        w
    }

    /// Column supports: for each column, the sorted list of rows containing it.
    pub fn col_supports(&self) -> Vec<Vec<u32>> {
        let mut cols = vec![Vec::new(); self.n_cols];
        for (i, r) in self.rows.iter().enumerate() {
            for &c in r {
                cols[c as usize].push(i as u32);
            }
        }
        cols
    }

    pub fn transpose(&self) -> BitMatrix {
        BitMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            rows: self.col_supports(),
        }
    }

    pub fn words_per_row(&self) -> usize {
        self.n_cols.div_ceil(64)
    }

    pub(crate) fn packed_rows(&self) -> Vec<Vec<u64>> {
        let words = self.words_per_row();
        self.rows
            .iter()
            .map(|r| {
                let mut w = vec![0u64; words];
                for &c in r {
                    w[(c as usize) >> 6] |= 1u64 << (c & 63);
                }
                w
            })
            .collect()
    }

    /// Matrix-vector product over GF(2); bit `i` of the result is the parity
    /// of the overlap between row `i` and the support of `v`.
    pub fn mul_vec(&self, v: &BitVec) -> Result<BitVec> {
        if v.len() != self.n_cols {
            return Err(Error::LengthMismatch { want: self.n_cols, got: v.len() });
        }
        let mut support = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            if sorted_intersection_size(row, v.support()) % 2 == 1 {
                support.push(i as u32);
            }
        }
        Ok(BitVec { len: self.n_rows, support })
    }
}

pub(crate) fn sorted_intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

fn lowest_set_bit(words: &[u64]) -> Option<usize> {
    for (wi, &w) in words.iter().enumerate() {
        if w != 0 {
            return Some(wi * 64 + w.trailing_zeros() as usize);
        }
    }
    None
}

fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

/// Row-echelon basis of the row space, keyed by pivot column (leftmost pivot
/// first). Reusable for repeated membership queries.
pub struct RowSpace {
    n_cols: usize,
    words: usize,
    by_pivot: Vec<Option<Box<[u64]>>>,
    rank: usize,
}

impl RowSpace {
    pub fn new(m: &BitMatrix) -> Self {
        let words = m.words_per_row();
        let mut by_pivot: Vec<Option<Box<[u64]>>> = vec![None; m.n_cols()];
        let mut rank = 0usize;
        for row in m.packed_rows() {
            let mut x = row;
            while let Some(p) = lowest_set_bit(&x) {
                match &by_pivot[p] {
                    Some(b) => xor_into(&mut x, b),
                    None => {
                        by_pivot[p] = Some(x.into_boxed_slice());
                        rank += 1;
                        break;
                    }
                }
            }
        }
        Self { n_cols: m.n_cols(), words, by_pivot, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn contains(&self, v: &BitVec) -> Result<bool> {
        if v.len() != self.n_cols {
            return Err(Error::LengthMismatch { want: self.n_cols, got: v.len() });
        }
        let mut x = v.to_words(self.words);
        while let Some(p) = lowest_set_bit(&x) {
            match &self.by_pivot[p] {
                Some(b) => xor_into(&mut x, b),
                None => return Ok(false),
            }
        }
        Ok(true)
    }
}

/// Rank over GF(2).
pub fn rank(m: &BitMatrix) -> usize {
    RowSpace::new(m).rank
}

/// True iff `v` is a GF(2) combination of the rows of `m`.
pub fn row_space_contains(m: &BitMatrix, v: &BitVec) -> Result<bool> {
    RowSpace::new(m).contains(v)
}

/// Basis of the right null space, ordered by free column (ascending), with
/// pivot choices fixed by leftmost-pivot-first elimination.
pub fn kernel_basis(m: &BitMatrix) -> Vec<BitVec> {
    let words = m.words_per_row();
    // RREF invariant: no basis row contains another basis row's pivot
    // column, so a single reduction pass per pivot suffices.
    let mut pivots: Vec<(usize, Vec<u64>)> = Vec::new();
    for row in m.packed_rows() {
        let mut x = row;
        for (c, b) in &pivots {
            if (x[c >> 6] >> (c & 63)) & 1 == 1 {
                xor_into(&mut x, b);
            }
        }
        if let Some(p) = lowest_set_bit(&x) {
            for (_, b) in pivots.iter_mut() {
                if (b[p >> 6] >> (p & 63)) & 1 == 1 {
                    xor_into(b, &x);
                }
            }
            pivots.push((p, x));
        }
    }
    pivots.sort_by_key(|(c, _)| *c);
    let pivot_cols: Vec<usize> = pivots.iter().map(|(c, _)| *c).collect();
    let mut is_pivot = vec![false; m.n_cols()];
    for &c in &pivot_cols {
        is_pivot[c] = true;
    }
    let mut basis = Vec::new();
    for f in 0..m.n_cols() {
        if is_pivot[f] {
            continue;
        }
        let mut v = vec![0u64; words];
        v[f >> 6] |= 1u64 << (f & 63);
        for (c, b) in &pivots {
            if (b[f >> 6] >> (f & 63)) & 1 == 1 {
                v[c >> 6] ^= 1u64 << (c & 63);
            }
        }
        basis.push(BitVec::from_words(m.n_cols(), &v));
    }
    basis
}

/// Minimum Hamming weight over the nonzero kernel of `m`, by exhaustive span
/// enumeration; `None` for full column rank.
///
/// Refuses (rather than approximates) when the corank exceeds
/// [`KERNEL_ENUM_CAP`].
pub fn min_kernel_weight(m: &BitMatrix) -> Result<Option<usize>> {
    let basis = kernel_basis(m);
    if basis.is_empty() {
        return Ok(None);
    }
    if basis.len() > KERNEL_ENUM_CAP {
        return Err(Error::CorankTooLarge { corank: basis.len(), cap: KERNEL_ENUM_CAP });
    }
    let words = m.words_per_row();
    let packed: Vec<Vec<u64>> = basis.iter().map(|v| v.to_words(words)).collect();
    let mut acc = vec![0u64; words];
    let mut best = usize::MAX;
    // Gray-code walk over the 2^corank - 1 nonzero combinations.
    for mask in 1u64..(1u64 << basis.len()) {
        let flip = (mask ^ (mask >> 1)) ^ ((mask - 1) ^ ((mask - 1) >> 1));
        xor_into(&mut acc, &packed[flip.trailing_zeros() as usize]);
        let w: usize = acc.iter().map(|x| x.count_ones() as usize).sum();
        if w > 0 && w < best {
            best = w;
        }
    }
    Ok(Some(best))
}

// --- matrix file format -----------------------------------------------------
//
// A matrix file is a JSON array of rows, each row an array of column indices.
// Column count is either explicit in a wrapper object {"n_cols": .., "rows":
// ..} or inferred as max index + 1.

#[derive(Deserialize)]
#[serde(untagged)]
enum RowsFile {
    Bare(Vec<Vec<u32>>),
    Wrapped { n_cols: usize, rows: Vec<Vec<u32>> },
}

pub fn load_rows_json(path: &Path) -> Result<BitMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse_rows_json(&text).map_err(|reason| Error::MatrixFormat {
        path: path.display().to_string(),
        reason,
    })
}

pub fn parse_rows_json(text: &str) -> std::result::Result<BitMatrix, String> {
    let parsed: RowsFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let (n_cols, rows) = match parsed {
        RowsFile::Bare(rows) => {
            let n_cols = rows
                .iter()
                .flat_map(|r| r.iter().copied())
                .max()
                .map_or(0, |m| m as usize + 1);
            (n_cols, rows)
        }
        RowsFile::Wrapped { n_cols, rows } => (n_cols, rows),
    };
    for r in &rows {
        if let Some(&c) = r.iter().max() {
            if c as usize >= n_cols {
                return Err(format!("column index {c} exceeds n_cols {n_cols}"));
            }
        }
    }
    Ok(BitMatrix::from_rows(n_cols, rows))
}

/// Bare-array layout, one row per line.
pub fn save_rows_json(m: &BitMatrix, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(m.n_rows() * 16);
    out.push_str("[\n");
    for (i, r) in m.rows().iter().enumerate() {
        out.push_str(&serde_json::to_string(r)?);
        if i + 1 < m.n_rows() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push(']');
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Naive dense Gaussian elimination, written before the packed
    /// implementation and kept independent of it.
    #[allow(clippy::needless_range_loop)]
    pub(crate) fn naive_rank(m: &BitMatrix) -> usize {
        let mut a: Vec<Vec<bool>> = (0..m.n_rows())
            .map(|i| (0..m.n_cols()).map(|j| m.get(i, j)).collect())
            .collect();
        let (nr, nc) = (m.n_rows(), m.n_cols());
        let mut rank = 0;
        for col in 0..nc {
            let Some(piv) = (rank..nr).find(|&r| a[r][col]) else { continue };
            a.swap(rank, piv);
            for r in 0..nr {
                if r != rank && a[r][col] {
                    for c in 0..nc {
                        a[r][c] ^= a[rank][c];
                    }
                }
            }
            rank += 1;
            if rank == nr {
                break;
            }
        }
        rank
    }

    fn random_matrix(rng: &mut StdRng, nr: usize, nc: usize, density: f64) -> BitMatrix {
        let rows = (0..nr)
            .map(|_| (0..nc as u32).filter(|_| rng.gen_bool(density)).collect())
            .collect();
        BitMatrix::from_rows(nc, rows)
    }

    #[test]
    fn rank_identity() {
        for s in [1, 5, 64, 130] {
            assert_eq!(rank(&BitMatrix::identity(s)), s);
        }
    }

    #[test]
    fn rank_random_20x20_matches_naive_oracle() {
        let mut rng = StdRng::seed_from_u64(1);
        let m = random_matrix(&mut rng, 20, 20, 0.5);
        assert_eq!(rank(&m), naive_rank(&m));
    }

    #[test]
    fn rank_many_random_matches_naive_oracle() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..40 {
            let nr = rng.gen_range(1..30);
            let nc = rng.gen_range(1..30);
            let m = random_matrix(&mut rng, nr, nc, 0.3);
            assert_eq!(rank(&m), naive_rank(&m));
        }
    }

    #[test]
    fn kernel_identity_empty() {
        assert!(kernel_basis(&BitMatrix::identity(9)).is_empty());
    }

    #[test]
    fn kernel_zero_matrix_full() {
        let m = BitMatrix::zeros(3, 3);
        let b = kernel_basis(&m);
        assert_eq!(b.len(), 3);
        for (i, v) in b.iter().enumerate() {
            assert_eq!(v.support(), &[i as u32]);
        }
    }

    #[test]
    fn rank_plus_kernel_dim_is_ncols() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..30 {
            let nr = rng.gen_range(1..25);
            let nc = rng.gen_range(1..25);
            let m = random_matrix(&mut rng, nr, nc, 0.4);
            let kb = kernel_basis(&m);
            assert_eq!(rank(&m) + kb.len(), nc);
            for v in &kb {
                assert!(m.mul_vec(v).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn row_space_membership() {
        let mut rng = StdRng::seed_from_u64(13);
        let m = random_matrix(&mut rng, 12, 20, 0.3);
        for row in m.rows() {
            let v = BitVec::new(20, row.clone());
            assert!(row_space_contains(&m, &v).unwrap());
        }
        assert!(row_space_contains(&m, &BitVec::zero(20)).unwrap());
        // 100 random row combinations are members.
        for _ in 0..100 {
            let mut v = BitVec::zero(20);
            for row in m.rows() {
                if rng.gen_bool(0.5) {
                    v = v.xor(&BitVec::new(20, row.clone())).unwrap();
                }
            }
            assert!(row_space_contains(&m, &v).unwrap());
        }
        // A weight-1 vector at a column untouched by every row is not.
        let m2 = BitMatrix::from_rows(5, vec![vec![0, 1], vec![1, 2]]);
        assert!(!row_space_contains(&m2, &BitVec::new(5, vec![4])).unwrap());
        // Length mismatch is an error.
        assert!(row_space_contains(&m2, &BitVec::zero(6)).is_err());
    }

    #[test]
    fn min_kernel_weight_explicit_kernel() {
        // Kernel {0000, 1100, 0011, 1111}: minimum nonzero weight 2.
        let m = BitMatrix::from_rows(4, vec![vec![0, 1], vec![2, 3], vec![0, 1], vec![2, 3]]);
        assert_eq!(min_kernel_weight(&m).unwrap(), Some(2));
    }

    #[test]
    fn min_kernel_weight_full_rank() {
        assert_eq!(min_kernel_weight(&BitMatrix::identity(6)).unwrap(), None);
    }

    #[test]
    fn min_kernel_weight_cap_refuses() {
        let m = BitMatrix::zeros(2, 20);
        match min_kernel_weight(&m) {
            Err(Error::CorankTooLarge { corank: 20, cap: 16 }) => {}
            other => panic!("expected corank cap error, got {other:?}"),
        }
    }

    /// Brute-force scan over all 2^n_cols vectors.
    fn brute_min_kernel_weight(m: &BitMatrix) -> Option<usize> {
        let nc = m.n_cols();
        assert!(nc <= 14);
        let mut best = None;
        for mask in 1u32..(1 << nc) {
            let support: Vec<u32> = (0..nc as u32).filter(|&c| (mask >> c) & 1 == 1).collect();
            let v = BitVec::new(nc, support);
            if m.mul_vec(&v).unwrap().is_zero() {
                let w = v.weight();
                if best.is_none_or(|b| w < b) {
                    best = Some(w);
                }
            }
        }
        best
    }

    #[test]
    fn min_kernel_weight_matches_brute_force() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..25 {
            let nr = rng.gen_range(1..10);
            let nc = rng.gen_range(1..12);
            let m = random_matrix(&mut rng, nr, nc, 0.4);
            assert_eq!(min_kernel_weight(&m).unwrap(), brute_min_kernel_weight(&m));
        }
    }

    #[test]
    fn mul_vec_basics() {
        let m = BitMatrix::identity(8);
        let v = BitVec::new(8, vec![1, 5, 7]);
        assert_eq!(m.mul_vec(&v).unwrap(), v);
        assert!(m.mul_vec(&BitVec::zero(8)).unwrap().is_zero());
        assert!(m.mul_vec(&BitVec::zero(9)).is_err());
    }

    #[test]
    fn rank_invariant_under_permutation() {
        let mut rng = StdRng::seed_from_u64(31);
        let m = random_matrix(&mut rng, 15, 18, 0.3);
        let r0 = rank(&m);
        for _ in 0..20 {
            let mut rowp: Vec<usize> = (0..m.n_rows()).collect();
            let mut colp: Vec<u32> = (0..m.n_cols() as u32).collect();
            for i in (1..rowp.len()).rev() {
                rowp.swap(i, rng.gen_range(0..=i));
            }
            for i in (1..colp.len()).rev() {
                colp.swap(i, rng.gen_range(0..=i));
            }
            let rows = rowp
                .iter()
                .map(|&i| m.row(i).iter().map(|&c| colp[c as usize]).collect())
                .collect();
            assert_eq!(rank(&BitMatrix::from_rows(m.n_cols(), rows)), r0);
        }
    }

    #[test]
    fn rows_json_roundtrip_and_wrapper() {
        let m = BitMatrix::from_rows(6, vec![vec![0, 5], vec![], vec![2]]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        save_rows_json(&m, &p).unwrap();
        let back = load_rows_json(&p).unwrap();
        // Bare layout infers n_cols = max index + 1.
        assert_eq!(back.n_cols(), 6);
        assert_eq!(back.rows(), m.rows());
        let wrapped = parse_rows_json(r#"{"n_cols": 9, "rows": [[0,5],[],[2]]}"#).unwrap();
        assert_eq!(wrapped.n_cols(), 9);
        assert_eq!(wrapped.rows(), m.rows());
        assert!(parse_rows_json(r#"{"n_cols": 3, "rows": [[7]]}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_matrix() -> impl Strategy<Value = BitMatrix> {
            (1usize..12, 1usize..12).prop_flat_map(|(nr, nc)| {
                proptest::collection::vec(
                    proptest::collection::vec(0..nc as u32, 0..nc),
                    nr..=nr,
                )
                .prop_map(move |rows| BitMatrix::from_rows(nc, rows))
            })
        }

        proptest! {
            #[test]
            fn rank_nullity(m in arb_matrix()) {
                prop_assert_eq!(rank(&m) + kernel_basis(&m).len(), m.n_cols());
            }

            #[test]
            fn kernel_vectors_annihilate(m in arb_matrix()) {
                for v in kernel_basis(&m) {
                    prop_assert!(m.mul_vec(&v).unwrap().is_zero());
                }
            }

            #[test]
            fn xor_is_involutive(m in arb_matrix()) {
                let rows = m.rows();
                if rows.len() >= 2 {
                    let a = BitVec::new(m.n_cols(), rows[0].clone());
                    let b = BitVec::new(m.n_cols(), rows[1].clone());
                    prop_assert_eq!(a.xor(&b).unwrap().xor(&b).unwrap(), a);
                }
            }
        }
    }
}
