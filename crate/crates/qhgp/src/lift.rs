//! CPM P-lift machinery: shift variables, paired zero congruences,
//! cycle-voltage constraints, unavoidable-8-cycle filtering, randomized
//! feasible search and walk, lifted-matrix construction, and audits.
//!
//! Shift variables live in Z_P, one per nonzero entry of each check matrix
//! (identity row-color mode). CSS orthogonality is the linear system of
//! paired zero congruences; short-cycle suppression is the family of
//! nonzero cycle-voltage constraints.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use crate::gf2::{self, BitMatrix};
use crate::hgp::{self, CssCode, Origin, OverlapReport};
use crate::tanner::{self, Girth, RowOverlapGraph, Side};
use crate::{Error, Result};

/// Default modulus for rational-span detection of unavoidable 8-cycles.
pub const UNAVOIDABLE_FILTER_PRIME: u64 = 1_000_003;

/// CPM shift assignment: one residue in Z_P per nonzero entry of each side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftAssignment {
    pub p: u64,
    /// (check row, column) -> shift, over the nonzero entries of H_X.
    pub x_shifts: BTreeMap<(u32, u32), u64>,
    /// Same for H_Z.
    pub z_shifts: BTreeMap<(u32, u32), u64>,
}

impl ShiftAssignment {
    /// All-zero assignment over the nonzero entries of `code` (the identity
    /// lift).
    pub fn identity(code: &CssCode, p: u64) -> Self {
        let collect = |m: &BitMatrix| {
            m.rows()
                .iter()
                .enumerate()
                .flat_map(|(r, row)| row.iter().map(move |&c| ((r as u32, c), 0u64)))
                .collect()
        };
        Self { p, x_shifts: collect(&code.hx), z_shifts: collect(&code.hz) }
    }

    pub fn get(&self, side: Side, row: u32, col: u32) -> Option<u64> {
        match side {
            Side::X => self.x_shifts.get(&(row, col)).copied(),
            Side::Z => self.z_shifts.get(&(row, col)).copied(),
        }
    }

    /// Number of entries (over both sides) at which the two assignments
    /// differ.
    pub fn hamming_distance(&self, other: &ShiftAssignment) -> u64 {
        let count = |a: &BTreeMap<(u32, u32), u64>, b: &BTreeMap<(u32, u32), u64>| {
            let mut d = 0u64;
            for (k, v) in a {
                if b.get(k) != Some(v) {
                    d += 1;
                }
            }
            for k in b.keys() {
                if !a.contains_key(k) {
                    d += 1;
                }
            }
            d
        };
        count(&self.x_shifts, &other.x_shifts) + count(&self.z_shifts, &other.z_shifts)
    }
}

/// One paired CSS zero congruence:
/// `s^X(x_row, col_a) - s^Z(z_row, col_a) - s^X(x_row, col_b) + s^Z(z_row, col_b) = 0 (mod P)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroEquation {
    pub x_row: u32,
    pub z_row: u32,
    pub col_a: u32,
    pub col_b: u32,
}

impl ZeroEquation {
    /// Signed terms as (side, row, col, sign).
    pub fn terms(&self) -> [(Side, u32, u32, i8); 4] {
        [
            (Side::X, self.x_row, self.col_a, 1),
            (Side::Z, self.z_row, self.col_a, -1),
            (Side::X, self.x_row, self.col_b, -1),
            (Side::Z, self.z_row, self.col_b, 1),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CycleType {
    Four,
    Six,
    Eight,
    Ten,
}

impl CycleType {
    pub fn length(&self) -> u32 {
        match self {
            CycleType::Four => 4,
            CycleType::Six => 6,
            CycleType::Eight => 8,
            CycleType::Ten => 10,
        }
    }
}

/// Search weights for violated cycle constraints.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Weights {
    pub w4: u32,
    pub w6: u32,
    pub w8: u32,
    pub w10: u32,
    pub w12: u32,
}

impl Default for Weights {
    fn default() -> Self {
        Self { w4: 100, w6: 10, w8: 3, w10: 8, w12: 20 }
    }
}

impl Weights {
    pub fn for_type(&self, t: CycleType) -> u32 {
        match t {
            CycleType::Four => self.w4,
            CycleType::Six => self.w6,
            CycleType::Eight => self.w8,
            CycleType::Ten => self.w10,
        }
    }
}

/// A nonzero cycle-voltage constraint of one side's Tanner graph. The cycle
/// alternates `checks[t]` and the shared columns `labels[t]` (between
/// `checks[t]` and `checks[t+1]`); its voltage is
/// `sum_t s(checks[t], labels[t-1]) - s(checks[t], labels[t])`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleConstraint {
    pub ctype: CycleType,
    pub side: Side,
    pub checks: Vec<u32>,
    pub labels: Vec<u32>,
    pub weight: u32,
}

impl CycleConstraint {
    /// Signed terms as (check row, column, sign), all on `self.side`.
    pub fn terms(&self) -> Vec<(u32, u32, i8)> {
        let k = self.checks.len();
        let mut out = Vec::with_capacity(2 * k);
        for t in 0..k {
            out.push((self.checks[t], self.labels[(t + k - 1) % k], 1));
            out.push((self.checks[t], self.labels[t], -1));
        }
        out
    }
}

/// Pair the shared columns of every (x-row, z-row) overlap in ascending
/// column order; errors with a witness if any overlap is odd.
pub fn build_zero_equations(code: &CssCode) -> Result<Vec<ZeroEquation>> {
    let z_cols = code.hz.col_supports();
    let mut overlaps: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
    for (i, row) in code.hx.rows().iter().enumerate() {
        for &c in row {
            for &j in &z_cols[c as usize] {
                overlaps.entry((i as u32, j)).or_default().push(c);
            }
        }
    }
    let mut eqs = Vec::new();
    for ((x_row, z_row), mut cols) in overlaps {
        if cols.len() % 2 == 1 {
            return Err(Error::OddOverlap {
                x_row: x_row as usize,
                z_row: z_row as usize,
                overlap: cols.len(),
            });
        }
        cols.sort_unstable();
        for pair in cols.chunks_exact(2) {
            eqs.push(ZeroEquation { x_row, z_row, col_a: pair[0], col_b: pair[1] });
        }
    }
    Ok(eqs)
}

fn cycles_of_side(m: &BitMatrix, side: Side, up_to: u32, weights: &Weights) -> Vec<CycleConstraint> {
    let g = RowOverlapGraph::build(m);
    let mut out = Vec::new();
    // 4-cycles: one constraint per row pair and unordered pair of shared
    // columns.
    let mut pair_cols: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
    for (c, rows) in m.col_supports().iter().enumerate() {
        for a in 0..rows.len() {
            for b in a + 1..rows.len() {
                pair_cols.entry((rows[a], rows[b])).or_default().push(c as u32);
            }
        }
    }
    for ((a, b), cols) in &pair_cols {
        for i in 0..cols.len() {
            for j in i + 1..cols.len() {
                out.push(CycleConstraint {
                    ctype: CycleType::Four,
                    side,
                    checks: vec![*a, *b],
                    labels: vec![cols[i], cols[j]],
                    weight: weights.for_type(CycleType::Four),
                });
            }
        }
    }
    if up_to < 6 {
        return out;
    }
    // Simple 6-cycles: row triangles with three distinct labels.
    for (a, list) in g.adj.iter().enumerate() {
        let nbrs: Vec<(u32, u32)> = list.iter().copied().filter(|&(b, _)| b > a as u32).collect();
        for (i, &(b, lab_ab)) in nbrs.iter().enumerate() {
            for &(c, lab_ac) in &nbrs[i + 1..] {
                let Some(lab_bc) = g.label(b, c) else { continue };
                if lab_ab != lab_bc && lab_bc != lab_ac && lab_ab != lab_ac {
                    out.push(CycleConstraint {
                        ctype: CycleType::Six,
                        side,
                        checks: vec![a as u32, b, c],
                        labels: vec![lab_ab, lab_bc, lab_ac],
                        weight: weights.for_type(CycleType::Six),
                    });
                }
            }
        }
    }
    if up_to < 8 {
        return out;
    }
    // 8-cycles: row 4-cycles with four distinct labels, counted once with
    // r0 minimal and r1 < r3.
    for (r0, list) in g.adj.iter().enumerate() {
        let r0 = r0 as u32;
        let nbrs: Vec<(u32, u32)> = list.iter().copied().filter(|&(r, _)| r > r0).collect();
        for (i, &(r1, lab01)) in nbrs.iter().enumerate() {
            for &(r3, lab30) in &nbrs[i + 1..] {
                for &(r2, lab12) in &g.adj[r1 as usize] {
                    if r2 <= r0 || r2 == r1 || r2 == r3 {
                        continue;
                    }
                    let Some(lab23) = g.label(r2, r3) else { continue };
                    if tanner::distinct4([lab01, lab12, lab23, lab30]) {
                        out.push(CycleConstraint {
                            ctype: CycleType::Eight,
                            side,
                            checks: vec![r0, r1, r2, r3],
                            labels: vec![lab01, lab12, lab23, lab30],
                            weight: weights.for_type(CycleType::Eight),
                        });
                    }
                }
            }
        }
    }
    if up_to < 10 {
        return out;
    }
    // 10-cycles: row 5-cycles with five distinct labels, r0 minimal and
    // r1 < r4 for the reflection.
    let n = g.adj.len() as u32;
    for r0 in 0..n {
        for &(r1, lab01) in &g.adj[r0 as usize] {
            if r1 <= r0 {
                continue;
            }
            for &(r2, lab12) in &g.adj[r1 as usize] {
                if r2 <= r0 || r2 == r1 {
                    continue;
                }
                for &(r3, lab23) in &g.adj[r2 as usize] {
                    if r3 <= r0 || r3 == r1 || r3 == r2 {
                        continue;
                    }
                    for &(r4, lab34) in &g.adj[r3 as usize] {
                        if r4 <= r0 || r4 == r1 || r4 == r2 || r4 == r3 || r1 > r4 {
                            continue;
                        }
                        let Some(lab40) = g.label(r4, r0) else { continue };
                        if tanner::distinct5([lab01, lab12, lab23, lab34, lab40]) {
                            out.push(CycleConstraint {
                                ctype: CycleType::Ten,
                                side,
                                checks: vec![r0, r1, r2, r3, r4],
                                labels: vec![lab01, lab12, lab23, lab34, lab40],
                                weight: weights.for_type(CycleType::Ten),
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// All 4-, simple-6-, 8-, and 10-cycle constraints of both sides, with the
/// same distinct-label semantics as the Tanner certification.
pub fn enumerate_cycle_constraints(code: &CssCode, up_to: u32) -> Vec<CycleConstraint> {
    let weights = Weights::default();
    let mut out = cycles_of_side(&code.hx, Side::X, up_to, &weights);
    out.extend(cycles_of_side(&code.hz, Side::Z, up_to, &weights));
    out
}

// --- variable indexing ----------------------------------------------------

/// Dense variable ids over the union of shift-variable keys: x entries
/// first, then z entries, each block in (row, col) order.
pub(crate) struct VarIndex {
    x_pos: BTreeMap<(u32, u32), u32>,
    z_pos: BTreeMap<(u32, u32), u32>,
    pub n_vars: usize,
}

impl VarIndex {
    pub fn from_code(code: &CssCode) -> Self {
        let mut x_pos = BTreeMap::new();
        for (r, row) in code.hx.rows().iter().enumerate() {
            for &c in row {
                let next = x_pos.len() as u32;
                x_pos.insert((r as u32, c), next);
            }
        }
        let mut z_pos = BTreeMap::new();
        for (r, row) in code.hz.rows().iter().enumerate() {
            for &c in row {
                let next = x_pos.len() as u32 + z_pos.len() as u32;
                z_pos.insert((r as u32, c), next);
            }
        }
        let n_vars = x_pos.len() + z_pos.len();
        Self { x_pos, z_pos, n_vars }
    }

    pub fn from_assignment(a: &ShiftAssignment) -> Self {
        let mut x_pos = BTreeMap::new();
        for &k in a.x_shifts.keys() {
            let next = x_pos.len() as u32;
            x_pos.insert(k, next);
        }
        let mut z_pos = BTreeMap::new();
        for &k in a.z_shifts.keys() {
            let next = x_pos.len() as u32 + z_pos.len() as u32;
            z_pos.insert(k, next);
        }
        let n_vars = x_pos.len() + z_pos.len();
        Self { x_pos, z_pos, n_vars }
    }

    pub fn id(&self, side: Side, row: u32, col: u32) -> Option<u32> {
        match side {
            Side::X => self.x_pos.get(&(row, col)).copied(),
            Side::Z => self.z_pos.get(&(row, col)).copied(),
        }
    }

    pub fn values(&self, a: &ShiftAssignment) -> Vec<u64> {
        let mut v = vec![0u64; self.n_vars];
        for (k, &s) in &a.x_shifts {
            v[self.x_pos[k] as usize] = s;
        }
        for (k, &s) in &a.z_shifts {
            v[self.z_pos[k] as usize] = s;
        }
        v
    }

    pub fn assignment(&self, values: &[u64], p: u64) -> ShiftAssignment {
        let mut x_shifts = BTreeMap::new();
        for (k, &i) in &self.x_pos {
            x_shifts.insert(*k, values[i as usize] % p);
        }
        let mut z_shifts = BTreeMap::new();
        for (k, &i) in &self.z_pos {
            z_shifts.insert(*k, values[i as usize] % p);
        }
        ShiftAssignment { p, x_shifts, z_shifts }
    }

    pub fn eq_var_ids(&self, eq: &ZeroEquation) -> Option<[(u32, i8); 4]> {
        let mut out = [(0u32, 0i8); 4];
        for (slot, (side, row, col, sign)) in eq.terms().into_iter().enumerate() {
            out[slot] = (self.id(side, row, col)?, sign);
        }
        Some(out)
    }

    pub fn constraint_var_ids(&self, c: &CycleConstraint) -> Option<Vec<(u32, i8)>> {
        let mut acc: BTreeMap<u32, i8> = BTreeMap::new();
        for (row, col, sign) in c.terms() {
            let id = self.id(c.side, row, col)?;
            *acc.entry(id).or_insert(0) += sign;
        }
        Some(acc.into_iter().filter(|&(_, s)| s != 0).collect())
    }
}

// --- unavoidable 8-cycle filtering -----------------------------------------

/// Outcome of the span filter: 8-cycles whose voltage vector lies in the
/// mod-prime span of the zero equations are forced to zero for every P and
/// are removed from the nonzero-constraint list.
#[derive(Debug)]
pub struct UnavoidableFilter {
    pub kept: Vec<CycleConstraint>,
    pub removed: Vec<CycleConstraint>,
    pub basis_rank: usize,
    pub prime: u64,
}

struct PrimeField {
    p: u64,
}

impl PrimeField {
    fn inv(&self, a: u64) -> u64 {
        // Fermat inverse; self.p is prime.
        let mut base = a % self.p;
        let mut exp = self.p - 2;
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % self.p;
            }
            base = base * base % self.p;
            exp >>= 1;
        }
        acc
    }
}

struct SpanBasis {
    field: PrimeField,
    n: usize,
    /// Reduced rows keyed by leading index; leading coefficient normalized
    /// to 1.
    rows: BTreeMap<usize, Vec<u64>>,
}

impl SpanBasis {
    fn new(p: u64, n: usize) -> Self {
        Self { field: PrimeField { p }, n, rows: BTreeMap::new() }
    }

    /// Reduce `v` in place against the basis; returns the leading index if a
    /// nonzero remainder is left.
    fn reduce(&self, v: &mut [u64]) -> Option<usize> {
        let p = self.field.p;
        let mut lead = 0usize;
        loop {
            while lead < self.n && v[lead] == 0 {
                lead += 1;
            }
            if lead == self.n {
                return None;
            }
            match self.rows.get(&lead) {
                None => return Some(lead),
                Some(row) => {
                    let c = v[lead];
                    for i in lead..self.n {
                        if row[i] != 0 {
                            v[i] = (v[i] + p * p - c * row[i] % p) % p;
                        }
                    }
                }
            }
        }
    }

    fn insert(&mut self, mut v: Vec<u64>) -> bool {
        match self.reduce(&mut v) {
            None => false,
            Some(lead) => {
                let inv = self.field.inv(v[lead]);
                for x in v.iter_mut() {
                    *x = *x * inv % self.field.p;
                }
                self.rows.insert(lead, v);
                true
            }
        }
    }

    fn contains(&self, v: &[u64]) -> bool {
        let mut w = v.to_vec();
        self.reduce(&mut w).is_none()
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }
}

fn signed_entry(p: u64, sign: i8) -> u64 {
    if sign >= 0 {
        sign as u64 % p
    } else {
        (p - ((-sign) as u64 % p)) % p
    }
}

/// Split the 8-cycle constraints into kept and removed by testing each
/// voltage vector for membership in the prime-field span of the zero
/// equations (unavoidable 8-cycles are forced to zero for every P).
/// Constraints of other lengths pass through unchanged.
pub fn filter_unavoidable_8cycles(
    code: &CssCode,
    constraints: Vec<CycleConstraint>,
    zero_eqs: &[ZeroEquation],
    prime: u64,
) -> UnavoidableFilter {
    let index = VarIndex::from_code(code);
    filter_unavoidable_with_index(constraints, zero_eqs, &index, prime)
}

fn filter_unavoidable_with_index(
    constraints: Vec<CycleConstraint>,
    zero_eqs: &[ZeroEquation],
    index: &VarIndex,
    prime: u64,
) -> UnavoidableFilter {
    let mut basis = SpanBasis::new(prime, index.n_vars);
    for eq in zero_eqs {
        let Some(terms) = index.eq_var_ids(eq) else { continue };
        let mut v = vec![0u64; index.n_vars];
        for (id, sign) in terms {
            v[id as usize] = (v[id as usize] + signed_entry(prime, sign)) % prime;
        }
        basis.insert(v);
    }
    let basis_rank = basis.rank();
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for c in constraints {
        if c.ctype != CycleType::Eight {
            kept.push(c);
            continue;
        }
        let Some(terms) = index.constraint_var_ids(&c) else {
            kept.push(c);
            continue;
        };
        let mut v = vec![0u64; index.n_vars];
        for (id, sign) in terms {
            v[id as usize] = (v[id as usize] + signed_entry(prime, sign)) % prime;
        }
        if basis.contains(&v) {
            removed.push(c);
        } else {
            kept.push(c);
        }
    }
    UnavoidableFilter { kept, removed, basis_rank, prime }
}

/// Alternating signed sum of shifts around the cycle, reduced mod P.
pub fn cycle_voltage(a: &ShiftAssignment, c: &CycleConstraint) -> Result<u64> {
    let p = a.p;
    let mut acc: i128 = 0;
    for (row, col, sign) in c.terms() {
        let s = a.get(c.side, row, col).ok_or(Error::MissingShift {
            side: if c.side == Side::X { "X" } else { "Z" },
            row: row as usize,
            col: col as usize,
        })?;
        acc += sign as i128 * s as i128;
    }
    Ok(acc.rem_euclid(p as i128) as u64)
}

/// Residual of one zero equation under the assignment.
pub fn zero_equation_residual(a: &ShiftAssignment, eq: &ZeroEquation) -> Result<u64> {
    let p = a.p;
    let mut acc: i128 = 0;
    for (side, row, col, sign) in eq.terms() {
        let s = a.get(side, row, col).ok_or(Error::MissingShift {
            side: if side == Side::X { "X" } else { "Z" },
            row: row as usize,
            col: col as usize,
        })?;
        acc += sign as i128 * s as i128;
    }
    Ok(acc.rem_euclid(p as i128) as u64)
}

// --- scoring ----------------------------------------------------------------

pub(crate) struct Scorer {
    p: u64,
    terms: Vec<Vec<(u32, i8)>>,
    weights: Vec<u32>,
    var_cons: Vec<Vec<u32>>,
    voltages: Vec<u64>,
    pub score: u64,
}

impl Scorer {
    pub fn new(index: &VarIndex, constraints: &[CycleConstraint], p: u64) -> Self {
        let mut terms = Vec::with_capacity(constraints.len());
        let mut weights = Vec::with_capacity(constraints.len());
        let mut var_cons = vec![Vec::new(); index.n_vars];
        for (ci, c) in constraints.iter().enumerate() {
            let t = index
                .constraint_var_ids(c)
                .expect("constraint variables must be inside the assignment domain");
            for &(v, _) in &t {
                var_cons[v as usize].push(ci as u32);
            }
            terms.push(t);
            weights.push(c.weight);
        }
        Self { p, terms, weights, var_cons, voltages: Vec::new(), score: 0 }
    }

    pub fn init(&mut self, values: &[u64]) {
        self.voltages = self
            .terms
            .iter()
            .map(|t| {
                let mut acc: i128 = 0;
                for &(v, s) in t {
                    acc += s as i128 * values[v as usize] as i128;
                }
                acc.rem_euclid(self.p as i128) as u64
            })
            .collect();
        self.score = self
            .voltages
            .iter()
            .zip(&self.weights)
            .filter(|(&v, _)| v == 0)
            .map(|(_, &w)| w as u64)
            .sum();
    }

    /// Score after applying `delta` (var -> additive change mod p), without
    /// mutating state. Returns (new_score, new voltages of affected
    /// constraints).
    pub fn probe(&self, delta: &[(u32, u64)]) -> (u64, Vec<(u32, u64)>) {
        let mut affected: Vec<u32> = delta
            .iter()
            .flat_map(|&(v, _)| self.var_cons[v as usize].iter().copied())
            .collect();
        affected.sort_unstable();
        affected.dedup();
        let mut new_score = self.score;
        let mut new_volts = Vec::with_capacity(affected.len());
        for &ci in &affected {
            let t = &self.terms[ci as usize];
            let mut acc = self.voltages[ci as usize] as i128;
            for &(v, s) in t {
                if let Ok(pos) = delta.binary_search_by_key(&v, |&(dv, _)| dv) {
                    acc += s as i128 * delta[pos].1 as i128;
                }
            }
            let nv = acc.rem_euclid(self.p as i128) as u64;
            let old = self.voltages[ci as usize];
            if old == 0 && nv != 0 {
                new_score -= self.weights[ci as usize] as u64;
            } else if old != 0 && nv == 0 {
                new_score += self.weights[ci as usize] as u64;
            }
            new_volts.push((ci, nv));
        }
        (new_score, new_volts)
    }

    pub fn apply(&mut self, new_score: u64, new_volts: &[(u32, u64)]) {
        for &(ci, v) in new_volts {
            self.voltages[ci as usize] = v;
        }
        self.score = new_score;
    }
}

// --- structured kernel moves -------------------------------------------------

/// A kernel element of the zero system, as (var id, coefficient) pairs; the
/// applied change is `coefficient * delta mod P`.
type KernelMove = Vec<(u32, i8)>;

/// Reconstruct the square base matrix of an HGP code from the block
/// structure of its H_X, verifying the result reproduces both matrices.
pub(crate) fn reconstruct_hgp_base(code: &CssCode) -> Option<BitMatrix> {
    let n = code.n();
    let s2 = n / 2;
    let s = (s2 as f64).sqrt().round() as usize;
    if 2 * s * s != n || code.m_x() != s2 || code.m_z() != s2 {
        return None;
    }
    // Entry (i, a) of B appears as column a*s in check row i*s (j = 0).
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); s];
    for (i, row) in rows.iter_mut().enumerate() {
        for &c in code.hx.row(i * s) {
            if (c as usize) < s2 && (c as usize).is_multiple_of(s) {
                row.push(c / s as u32);
            }
        }
    }
    let base = BitMatrix::from_rows(s, rows);
    let built = hgp::build_hgp(&crate::basegen::BaseMatrix {
        matrix: base.clone(),
        label: String::new(),
        construction: crate::basegen::Construction::Search { s, w: 0 },
    });
    if built.hx.rows() == code.hx.rows() && built.hz.rows() == code.hz.rows() {
        Some(base)
    } else {
        None
    }
}

/// Kernel-move families of the zero system. Row and column rotations are
/// kernel elements for every CSS code; for HGP codes two per-base-entry
/// families are added, acting on the block structure.
fn structured_moves(code: &CssCode, index: &VarIndex) -> Vec<KernelMove> {
    let mut moves: Vec<KernelMove> = Vec::new();
    // X-row and Z-row rotations.
    for (r, row) in code.hx.rows().iter().enumerate() {
        moves.push(
            row.iter()
                .map(|&c| (index.id(Side::X, r as u32, c).expect("in domain"), 1))
                .collect(),
        );
    }
    for (r, row) in code.hz.rows().iter().enumerate() {
        moves.push(
            row.iter()
                .map(|&c| (index.id(Side::Z, r as u32, c).expect("in domain"), 1))
                .collect(),
        );
    }
    // Column rotations: the same offset on both sides of one column.
    let x_cols = code.hx.col_supports();
    let z_cols = code.hz.col_supports();
    for c in 0..code.n() {
        let mut mv: KernelMove = Vec::new();
        for &r in &x_cols[c] {
            mv.push((index.id(Side::X, r, c as u32).expect("in domain"), 1));
        }
        for &r in &z_cols[c] {
            mv.push((index.id(Side::Z, r, c as u32).expect("in domain"), 1));
        }
        if !mv.is_empty() {
            moves.push(mv);
        }
    }
    // HGP block moves: for base entry (i, a), bump the x-shifts of column
    // block a in check block i and compensate on the z side (and dually).
    if let Some(base) = reconstruct_hgp_base(code) {
        let s = base.n_rows() as u32;
        let s2 = s * s;
        for (i, row) in base.rows().iter().enumerate() {
            let i = i as u32;
            for &a in row {
                let mut mv: KernelMove = Vec::new();
                for j in 0..s {
                    mv.push((index.id(Side::X, s * i + j, s * a + j).expect("in domain"), 1));
                }
                for v in 0..s {
                    mv.push((index.id(Side::Z, s * a + v, s2 + s * i + v).expect("in domain"), -1));
                }
                moves.push(mv);
            }
        }
        let cols = base.col_supports();
        for (j, col) in cols.iter().enumerate() {
            let j = j as u32;
            for &b in col {
                let mut mv: KernelMove = Vec::new();
                for i in 0..s {
                    mv.push((index.id(Side::X, s * i + j, s2 + s * i + b).expect("in domain"), 1));
                }
                for u in 0..s {
                    mv.push((index.id(Side::Z, s * u + b, s * u + j).expect("in domain"), -1));
                }
                moves.push(mv);
            }
        }
    }
    moves
}

// --- constraint census ---------------------------------------------------------

/// Summary of the constraint system of a code at identity colors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintCensus {
    pub zero_eqs: usize,
    pub mod_prime: u64,
    pub basis_rank: usize,
    pub hx_total_8: usize,
    pub hz_total_8: usize,
    pub hx_removed_unavoidable: usize,
    pub hz_removed_unavoidable: usize,
    pub hx_kept_8: usize,
    pub hz_kept_8: usize,
    /// kept constraints per type and side, keyed like "8Hx" / "10Hz".
    pub counts_by_type: BTreeMap<String, usize>,
    pub constraints_total: usize,
}

/// Zero equations, kept nonzero constraints (after removing unavoidable
/// 8-cycles), and the census record.
pub fn constraint_census(
    code: &CssCode,
) -> Result<(Vec<ZeroEquation>, Vec<CycleConstraint>, ConstraintCensus)> {
    let zero_eqs = build_zero_equations(code)?;
    let constraints = enumerate_cycle_constraints(code, 10);
    let count_8 = |cs: &[CycleConstraint], side: Side| {
        cs.iter().filter(|c| c.ctype == CycleType::Eight && c.side == side).count()
    };
    let hx_total_8 = count_8(&constraints, Side::X);
    let hz_total_8 = count_8(&constraints, Side::Z);
    let index = VarIndex::from_code(code);
    let filtered =
        filter_unavoidable_with_index(constraints, &zero_eqs, &index, UNAVOIDABLE_FILTER_PRIME);
    let hx_kept_8 = count_8(&filtered.kept, Side::X);
    let hz_kept_8 = count_8(&filtered.kept, Side::Z);
    let mut counts_by_type: BTreeMap<String, usize> = BTreeMap::new();
    for c in &filtered.kept {
        let key = format!("{}H{}", c.ctype.length(), if c.side == Side::X { "x" } else { "z" });
        *counts_by_type.entry(key).or_insert(0) += 1;
    }
    let census = ConstraintCensus {
        zero_eqs: zero_eqs.len(),
        mod_prime: filtered.prime,
        basis_rank: filtered.basis_rank,
        hx_total_8,
        hz_total_8,
        hx_removed_unavoidable: hx_total_8 - hx_kept_8,
        hz_removed_unavoidable: hz_total_8 - hz_kept_8,
        hx_kept_8,
        hz_kept_8,
        constraints_total: filtered.kept.len(),
        counts_by_type,
    };
    Ok((zero_eqs, filtered.kept, census))
}

/// A random solution of the zero-equation system: the all-zero assignment
/// moved by every structured kernel family with a random offset.
pub fn random_kernel_assignment(code: &CssCode, p: u64, seed: u64) -> ShiftAssignment {
    let index = VarIndex::from_code(code);
    let moves = structured_moves(code, &index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0u64; index.n_vars];
    for mv in &moves {
        let d = rng.gen_range(0..p);
        for &(v, coef) in mv {
            let add = (coef as i128 * d as i128).rem_euclid(p as i128) as u64;
            values[v as usize] = (values[v as usize] + add) % p;
        }
    }
    index.assignment(&values, p)
}

// --- feasible search ---------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchStats {
    pub proposals: u64,
    pub accepted_moves: u64,
    pub initial_score: u64,
    pub final_score: u64,
}

/// Search a shift assignment that satisfies every zero equation exactly and
/// drives the violation score of `kept_constraints` to zero, by weighted
/// local descent over kernel moves of the zero system.
pub fn find_feasible_lift(
    code: &CssCode,
    p: u64,
    seed: u64,
    weights: &Weights,
    budget: u64,
) -> Result<(ShiftAssignment, SearchStats)> {
    let (zero_eqs, kept, _census) = constraint_census(code)?;
    let index = VarIndex::from_code(code);
    let kept: Vec<CycleConstraint> = kept
        .into_iter()
        .map(|mut c| {
            c.weight = weights.for_type(c.ctype);
            c
        })
        .collect();
    if p == 1 && !kept.is_empty() {
        return Err(Error::InfeasibleParameters {
            reason: "P = 1 forces every cycle voltage to zero".to_string(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let moves = structured_moves(code, &index);
    let mut values = vec![0u64; index.n_vars];
    // Random feasible start: every structured family applied with a random
    // offset stays in the kernel of the zero system.
    for mv in &moves {
        let d = rng.gen_range(0..p);
        for &(v, coef) in mv {
            let add = (coef as i128 * d as i128).rem_euclid(p as i128) as u64;
            values[v as usize] = (values[v as usize] + add) % p;
        }
    }
    let mut scorer = Scorer::new(&index, &kept, p);
    scorer.init(&values);
    let initial_score = scorer.score;
    let mut stats = SearchStats {
        proposals: 0,
        accepted_moves: 0,
        initial_score,
        final_score: initial_score,
    };
    while scorer.score > 0 && stats.proposals < budget {
        stats.proposals += 1;
        let mv = &moves[rng.gen_range(0..moves.len())];
        let d = rng.gen_range(1..p.max(2));
        let mut delta: Vec<(u32, u64)> = mv
            .iter()
            .map(|&(v, coef)| (v, (coef as i128 * d as i128).rem_euclid(p as i128) as u64))
            .filter(|&(_, add)| add != 0)
            .collect();
        delta.sort_unstable_by_key(|&(v, _)| v);
        if delta.is_empty() {
            continue;
        }
        let (new_score, new_volts) = scorer.probe(&delta);
        let sideways = new_score == scorer.score && rng.gen_bool(0.02);
        if new_score < scorer.score || sideways {
            for &(v, add) in &delta {
                values[v as usize] = (values[v as usize] + add) % p;
            }
            scorer.apply(new_score, &new_volts);
            stats.accepted_moves += 1;
        }
    }
    stats.final_score = scorer.score;
    let assignment = index.assignment(&values, p);
    debug_assert!(zero_eqs
        .iter()
        .all(|eq| zero_equation_residual(&assignment, eq).unwrap() == 0));
    if scorer.score > 0 {
        return Err(Error::BudgetExhausted { budget, best_score: scorer.score });
    }
    Ok((assignment, stats))
}

// --- local kernel moves and the feasible walk ---------------------------------

fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            let mut e = 0u32;
            while n.is_multiple_of(d) {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Dense RREF over GF(p) with particular-solution and kernel extraction.
struct GfpSystem {
    p: u64,
    n_cols: usize,
    /// (pivot column, reduced row).
    rows: Vec<(usize, Vec<u64>)>,
}

impl GfpSystem {
    fn new(matrix: &[Vec<i64>], p: u64) -> Self {
        let n_cols = matrix.first().map_or(0, Vec::len);
        let field = PrimeField { p };
        let mut rows: Vec<(usize, Vec<u64>)> = Vec::new();
        for raw in matrix {
            let mut v: Vec<u64> = raw.iter().map(|&x| x.rem_euclid(p as i64) as u64).collect();
            // reduce against existing
            let lead;
            'outer: loop {
                for (pc, row) in &rows {
                    if v[*pc] != 0 {
                        let c = v[*pc];
                        for i in 0..n_cols {
                            if row[i] != 0 {
                                v[i] = (v[i] + p * p - c * row[i] % p) % p;
                            }
                        }
                        continue 'outer;
                    }
                }
                lead = v.iter().position(|&x| x != 0);
                break;
            }
            if let Some(pc) = lead {
                let inv = field.inv(v[pc]);
                for x in v.iter_mut() {
                    *x = *x * inv % p;
                }
                // clear pc from earlier rows
                for (_, row) in rows.iter_mut() {
                    if row[pc] != 0 {
                        let c = row[pc];
                        for i in 0..n_cols {
                            if v[i] != 0 {
                                row[i] = (row[i] + p * p - c * v[i] % p) % p;
                            }
                        }
                    }
                }
                rows.push((pc, v));
            }
        }
        rows.sort_by_key(|(pc, _)| *pc);
        Self { p, n_cols, rows }
    }

    fn kernel_basis(&self) -> Vec<Vec<u64>> {
        let pivots: Vec<usize> = self.rows.iter().map(|(pc, _)| *pc).collect();
        let is_pivot: Vec<bool> = {
            let mut v = vec![false; self.n_cols];
            for &pc in &pivots {
                v[pc] = true;
            }
            v
        };
        let mut basis = Vec::new();
        for f in 0..self.n_cols {
            if is_pivot[f] {
                continue;
            }
            let mut v = vec![0u64; self.n_cols];
            v[f] = 1;
            for (pc, row) in &self.rows {
                if row[f] != 0 {
                    v[*pc] = (self.p - row[f]) % self.p;
                }
            }
            basis.push(v);
        }
        basis
    }

    /// One solution of A x = b (mod p), if consistent. `b_combos[r]` is the
    /// rhs accumulated into reduced row r, maintained externally; here we
    /// instead re-solve from scratch with an augmented pass.
    fn solve(&self, matrix: &[Vec<i64>], b: &[u64]) -> Option<Vec<u64>> {
        // Augmented elimination: reduce [A | b] fresh to keep the rhs in
        // sync with the precomputed RREF shape.
        let p = self.p;
        let field = PrimeField { p };
        let n = self.n_cols;
        let mut rows: Vec<(usize, Vec<u64>, u64)> = Vec::new();
        for (raw, &bi) in matrix.iter().zip(b) {
            let mut v: Vec<u64> = raw.iter().map(|&x| x.rem_euclid(p as i64) as u64).collect();
            let mut rhs = bi % p;
            'outer: loop {
                for (pc, row, rb) in &rows {
                    if v[*pc] != 0 {
                        let c = v[*pc];
                        for i in 0..n {
                            if row[i] != 0 {
                                v[i] = (v[i] + p * p - c * row[i] % p) % p;
                            }
                        }
                        rhs = (rhs + p * p - c * rb % p) % p;
                        continue 'outer;
                    }
                }
                break;
            }
            match v.iter().position(|&x| x != 0) {
                Some(pc) => {
                    let inv = field.inv(v[pc]);
                    for x in v.iter_mut() {
                        *x = *x * inv % p;
                    }
                    rhs = rhs * inv % p;
                    rows.push((pc, v, rhs));
                }
                None => {
                    if !rhs.is_multiple_of(p) {
                        return None; // inconsistent
                    }
                }
            }
        }
        // Back-substitute with free variables at zero.
        let mut x = vec![0u64; n];
        rows.sort_by_key(|(pc, _, _)| std::cmp::Reverse(*pc));
        for (pc, row, rhs) in &rows {
            let mut acc = *rhs as i128;
            for i in pc + 1..n {
                if row[i] != 0 {
                    acc -= row[i] as i128 * x[i] as i128;
                }
            }
            x[*pc] = acc.rem_euclid(p as i128) as u64;
        }
        Some(x)
    }
}

/// Random nonzero kernel element of `matrix * y = 0 (mod p^e)`, by a random
/// GF(p) kernel point lifted Hensel-style.
fn kernel_element_mod_prime_power(
    matrix: &[Vec<i64>],
    p: u64,
    e: u32,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<u64>> {
    let sys = GfpSystem::new(matrix, p);
    let basis = sys.kernel_basis();
    if basis.is_empty() {
        return None;
    }
    let n = sys.n_cols;
    let mut y: Vec<u64> = vec![0; n];
    for b in &basis {
        let c = rng.gen_range(0..p);
        for i in 0..n {
            y[i] = (y[i] + c * b[i]) % p;
        }
    }
    if y.iter().all(|&v| v == 0) {
        // Fall back to a single basis vector.
        y = basis[rng.gen_range(0..basis.len())].clone();
    }
    let modulus = (p as u128).pow(e);
    let mut yy: Vec<u128> = y.iter().map(|&v| v as u128).collect();
    for t in 1..e {
        let pt = (p as u128).pow(t);
        // g = (A y / p^t) mod p
        let mut g = Vec::with_capacity(matrix.len());
        for row in matrix {
            let mut acc: i128 = 0;
            for (i, &c) in row.iter().enumerate() {
                acc += c as i128 * yy[i] as i128;
            }
            let r = acc.rem_euclid(((pt * p as u128) as i128).max(1)) as u128;
            debug_assert_eq!(r % pt, 0);
            g.push(((r / pt) % p as u128) as u64);
        }
        if g.iter().all(|&v| v == 0) {
            continue;
        }
        let neg_g: Vec<u64> = g.iter().map(|&v| (p - v % p) % p).collect();
        let delta = sys.solve(matrix, &neg_g)?;
        for i in 0..n {
            yy[i] = (yy[i] + pt * delta[i] as u128) % modulus;
        }
    }
    Some(yy.into_iter().map(|v| v as u64).collect())
}

/// One random kernel move of the zero system: grow the induced subsystem
/// from `seeds` within `radius` equation layers, freeze boundary variables,
/// solve the local homogeneous system over Z_P, and return a random nonzero
/// kernel element as sparse (var, value) pairs.
fn local_kernel_move(
    eq_terms: &[[(u32, i8); 4]],
    var_eqs: &[Vec<u32>],
    seeds: &[u32],
    radius: usize,
    p: u64,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<(u32, u64)>> {
    use std::collections::BTreeSet;
    let mut vars: BTreeSet<u32> = seeds.iter().copied().collect();
    let mut frontier: Vec<u32> = seeds.to_vec();
    // Bounded neighborhood: the radius limits the equation layers and the
    // size cap keeps the local solve cheap on dense zero systems.
    let size_cap = (seeds.len() * 16).max(64);
    for _ in 0..radius {
        if vars.len() > size_cap {
            break;
        }
        let mut next = Vec::new();
        for &v in &frontier {
            for &ei in &var_eqs[v as usize] {
                for &(w, _) in &eq_terms[ei as usize] {
                    if vars.insert(w) {
                        next.push(w);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    // Equations fully inside the collected variable set.
    let mut eqs_in: BTreeSet<u32> = BTreeSet::new();
    for &v in &vars {
        for &ei in &var_eqs[v as usize] {
            if eq_terms[ei as usize].iter().all(|&(w, _)| vars.contains(&w)) {
                eqs_in.insert(ei);
            }
        }
    }
    // Interior variables: all incident equations are inside.
    let interior: Vec<u32> = vars
        .iter()
        .copied()
        .filter(|&v| var_eqs[v as usize].iter().all(|ei| eqs_in.contains(ei)))
        .collect();
    if interior.is_empty() {
        return None;
    }
    let pos: BTreeMap<u32, usize> = interior.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut matrix: Vec<Vec<i64>> = Vec::with_capacity(eqs_in.len());
    for &ei in &eqs_in {
        let mut row = vec![0i64; interior.len()];
        let mut touches_interior = false;
        for &(w, s) in &eq_terms[ei as usize] {
            if let Some(&i) = pos.get(&w) {
                row[i] += s as i64;
                touches_interior = true;
            }
        }
        if touches_interior {
            matrix.push(row);
        }
    }
    // Solve over Z_P by prime-power lifting and CRT.
    let factors = factorize(p);
    let mut combined = vec![0u128; interior.len()];
    let mut any_nonzero = false;
    for &(q, e) in &factors {
        let modulus = (q as u128).pow(e);
        let y = if matrix.is_empty() {
            // Unconstrained: any value works.
            let mut y = vec![0u64; interior.len()];
            for v in y.iter_mut() {
                *v = rng.gen_range(0..modulus as u64);
            }
            Some(y)
        } else {
            kernel_element_mod_prime_power(&matrix, q, e, rng)
        }?;
        // CRT: combined ≡ y (mod q^e), combined ≡ combined (mod P / q^e).
        let other = p as u128 / modulus;
        let inv = mod_inverse(other % modulus, modulus)?;
        for i in 0..interior.len() {
            let target = y[i] as u128 % modulus;
            let cur = combined[i] % modulus;
            let diff = (target + modulus - cur) % modulus;
            combined[i] = (combined[i] + diff * inv % modulus * other) % p as u128;
        }
        if y.iter().any(|&v| v % modulus as u64 != 0) {
            any_nonzero = true;
        }
    }
    if !any_nonzero {
        return None;
    }
    let mv: Vec<(u32, u64)> = interior
        .iter()
        .zip(&combined)
        .filter(|&(_, &v)| v != 0)
        .map(|(&var, &v)| (var, v as u64))
        .collect();
    if mv.is_empty() {
        None
    } else {
        Some(mv)
    }
}

fn mod_inverse(a: u128, m: u128) -> Option<u128> {
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r): (i128, i128) = (m as i128, (a % m) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        return None;
    }
    Some(t.rem_euclid(m as i128) as u128)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WalkParams {
    pub seed_vars: usize,
    pub radius: usize,
    pub target_accepts: u64,
    pub max_proposals: u64,
    pub seed: u64,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self { seed_vars: 24, radius: 10, target_accepts: 250, max_proposals: 10_000, seed: 642_001 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalkStats {
    pub accepted_kernel_moves: u64,
    pub rejected_score_moves: u64,
    pub rejected_no_kernel_move: u64,
    pub accepted_fraction: f64,
    pub hamming_distance_from_start: u64,
    pub mean_changed_vars_per_accepted_move: f64,
}

/// Random feasible walk over the kernel of the CSS-orthogonality system:
/// every accepted move preserves the zero equations exactly (it is a kernel
/// element scaled by a random nonzero residue) and is accepted only if the
/// violation score of `kept_constraints` stays zero.
pub fn feasible_random_walk(
    start: &ShiftAssignment,
    zero_eqs: &[ZeroEquation],
    kept_constraints: &[CycleConstraint],
    params: &WalkParams,
) -> Result<(ShiftAssignment, WalkStats)> {
    let p = start.p;
    let index = VarIndex::from_assignment(start);
    for c in kept_constraints {
        for (row, col, _) in c.terms() {
            if index.id(c.side, row, col).is_none() {
                return Err(Error::MissingShift {
                    side: if c.side == Side::X { "X" } else { "Z" },
                    row: row as usize,
                    col: col as usize,
                });
            }
        }
    }
    let mut values = index.values(start);
    let mut scorer = Scorer::new(&index, kept_constraints, p);
    scorer.init(&values);
    if scorer.score != 0 {
        return Err(Error::InfeasibleStart { score: scorer.score });
    }
    for eq in zero_eqs {
        let r = zero_equation_residual(start, eq)?;
        if r != 0 {
            return Err(Error::InfeasibleStart { score: scorer.score + 1 });
        }
    }
    let eq_terms: Vec<[(u32, i8); 4]> = zero_eqs
        .iter()
        .map(|eq| index.eq_var_ids(eq).expect("equation variables must be in the domain"))
        .collect();
    let mut var_eqs: Vec<Vec<u32>> = vec![Vec::new(); index.n_vars];
    for (ei, terms) in eq_terms.iter().enumerate() {
        for &(v, _) in terms {
            var_eqs[v as usize].push(ei as u32);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut stats = WalkStats {
        accepted_kernel_moves: 0,
        rejected_score_moves: 0,
        rejected_no_kernel_move: 0,
        accepted_fraction: 0.0,
        hamming_distance_from_start: 0,
        mean_changed_vars_per_accepted_move: 0.0,
    };
    let mut changed_total = 0u64;
    let all_vars: Vec<u32> = (0..index.n_vars as u32).collect();
    for _ in 0..params.max_proposals {
        if stats.accepted_kernel_moves >= params.target_accepts {
            break;
        }
        let mut seeds = Vec::with_capacity(params.seed_vars);
        for _ in 0..params.seed_vars.min(all_vars.len()) {
            seeds.push(all_vars[rng.gen_range(0..all_vars.len())]);
        }
        let Some(mv) = local_kernel_move(&eq_terms, &var_eqs, &seeds, params.radius, p, &mut rng)
        else {
            stats.rejected_no_kernel_move += 1;
            continue;
        };
        let scale = rng.gen_range(1..p.max(2));
        let mut delta: Vec<(u32, u64)> = mv
            .iter()
            .map(|&(v, val)| (v, (val as u128 * scale as u128 % p as u128) as u64))
            .filter(|&(_, add)| add != 0)
            .collect();
        delta.sort_unstable_by_key(|&(v, _)| v);
        if delta.is_empty() {
            stats.rejected_no_kernel_move += 1;
            continue;
        }
        let (new_score, new_volts) = scorer.probe(&delta);
        if new_score == 0 {
            for &(v, add) in &delta {
                values[v as usize] = (values[v as usize] + add) % p;
            }
            scorer.apply(new_score, &new_volts);
            stats.accepted_kernel_moves += 1;
            changed_total += delta.len() as u64;
        } else {
            stats.rejected_score_moves += 1;
        }
    }
    let total = stats.accepted_kernel_moves + stats.rejected_score_moves + stats.rejected_no_kernel_move;
    stats.accepted_fraction = if total == 0 {
        0.0
    } else {
        stats.accepted_kernel_moves as f64 / total as f64
    };
    stats.mean_changed_vars_per_accepted_move = if stats.accepted_kernel_moves == 0 {
        0.0
    } else {
        changed_total as f64 / stats.accepted_kernel_moves as f64
    };
    let assignment = index.assignment(&values, p);
    stats.hamming_distance_from_start = assignment.hamming_distance(start);
    for eq in zero_eqs {
        debug_assert_eq!(zero_equation_residual(&assignment, eq)?, 0);
    }
    Ok((assignment, stats))
}

// --- lifted matrices and audits ------------------------------------------------

/// Lift one matrix: the nonzero entry (r, c) with shift t becomes a P x P
/// circulant permutation block mapping lifted column c*P + u to lifted row
/// r*P + ((u + t) mod P).
pub fn lift_matrix(
    m: &BitMatrix,
    shifts: &BTreeMap<(u32, u32), u64>,
    p: u64,
) -> Result<BitMatrix> {
    let pu = p as usize;
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); m.n_rows() * pu];
    for (r, row) in m.rows().iter().enumerate() {
        for &c in row {
            let t = *shifts.get(&(r as u32, c)).ok_or(Error::MissingShift {
                side: "",
                row: r,
                col: c as usize,
            })? % p;
            for u in 0..pu {
                let lifted_row = r * pu + ((u + t as usize) % pu);
                rows[lifted_row].push(c * p as u32 + u as u32);
            }
        }
    }
    Ok(BitMatrix::from_rows(m.n_cols() * pu, rows))
}

/// Lift both sides of a code under a shift assignment. The assignment must
/// cover exactly the nonzero entries; orthogonality of the result is
/// verified (it holds whenever the assignment satisfies the zero
/// equations).
pub fn build_lifted_matrices(code: &CssCode, a: &ShiftAssignment) -> Result<CssCode> {
    let count_entries =
        |m: &BitMatrix| -> usize { m.row_weights().iter().sum() };
    if a.x_shifts.len() != count_entries(&code.hx) || a.z_shifts.len() != count_entries(&code.hz) {
        return Err(Error::MalformedShiftRow {
            line: 0,
            reason: format!(
                "assignment covers {}+{} entries, code has {}+{}",
                a.x_shifts.len(),
                a.z_shifts.len(),
                count_entries(&code.hx),
                count_entries(&code.hz)
            ),
        });
    }
    let hx = lift_matrix(&code.hx, &a.x_shifts, a.p)?;
    let hz = lift_matrix(&code.hz, &a.z_shifts, a.p)?;
    let base = match &code.origin {
        Origin::Hgp { base } => base.clone(),
        Origin::Lifted { base, .. } => base.clone(),
        Origin::External => "external".to_string(),
    };
    CssCode::new(hx, hz, Origin::Lifted { p: a.p, base })
}

/// Reconstruct the base code whose nonzero entries are exactly the domain of
/// a shift assignment (the layout recorded in shift tables).
pub fn code_from_shift_domain(a: &ShiftAssignment) -> Result<CssCode> {
    let build = |shifts: &BTreeMap<(u32, u32), u64>| -> (Vec<Vec<u32>>, usize) {
        let n_rows = shifts.keys().map(|&(r, _)| r as usize + 1).max().unwrap_or(0);
        let n_cols = shifts.keys().map(|&(_, c)| c as usize + 1).max().unwrap_or(0);
        let mut rows = vec![Vec::new(); n_rows];
        for &(r, c) in shifts.keys() {
            rows[r as usize].push(c);
        }
        (rows, n_cols)
    };
    let (x_rows, x_cols) = build(&a.x_shifts);
    let (z_rows, z_cols) = build(&a.z_shifts);
    let n = x_cols.max(z_cols);
    CssCode::new(
        BitMatrix::from_rows(n, x_rows),
        BitMatrix::from_rows(n, z_rows),
        Origin::External,
    )
}

/// Rank/parameter audit of a (typically lifted) CSS code.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiftAudit {
    pub n: usize,
    pub m_x: usize,
    pub m_z: usize,
    pub rank_hx: usize,
    pub rank_hz: usize,
    pub k: usize,
    /// Left-kernel dimensions m - rank per side; k = ell_x + ell_z whenever
    /// n = m_x + m_z.
    pub ell_x: usize,
    pub ell_z: usize,
    pub row_weights_hx: Vec<usize>,
    pub row_weights_hz: Vec<usize>,
    pub col_weights_hx: Vec<usize>,
    pub col_weights_hz: Vec<usize>,
    pub hx_girth: Girth,
    pub hz_girth: Girth,
    pub hx_components: Vec<usize>,
    pub hz_components: Vec<usize>,
    pub orthogonality: OverlapReport,
}

fn weight_set(ws: Vec<usize>) -> Vec<usize> {
    let mut ws = ws;
    ws.sort_unstable();
    ws.dedup();
    ws
}

pub fn audit_lift(code: &CssCode) -> LiftAudit {
    let rank_hx = gf2::rank(&code.hx);
    let rank_hz = gf2::rank(&code.hz);
    let n = code.n();
    let k = n - rank_hx - rank_hz;
    let ell_x = code.m_x() - rank_hx;
    let ell_z = code.m_z() - rank_hz;
    if n == code.m_x() + code.m_z() {
        assert_eq!(k, ell_x + ell_z, "k must equal the sum of left-kernel dimensions");
    }
    LiftAudit {
        n,
        m_x: code.m_x(),
        m_z: code.m_z(),
        rank_hx,
        rank_hz,
        k,
        ell_x,
        ell_z,
        row_weights_hx: weight_set(code.hx.row_weights()),
        row_weights_hz: weight_set(code.hz.row_weights()),
        col_weights_hx: weight_set(code.hx.col_weights()),
        col_weights_hz: weight_set(code.hz.col_weights()),
        hx_girth: tanner::tanner_girth_upto(&code.hx, 10).girth,
        hz_girth: tanner::tanner_girth_upto(&code.hz, 10).girth,
        hx_components: tanner::connected_components(&code.hx),
        hz_components: tanner::connected_components(&code.hz),
        orthogonality: hgp::verify_orthogonality(&code.hx, &code.hz),
    }
}

/// Audit record in the reference layout: parameters, checks, and
/// randomization blocks.
pub fn audit_json(
    audit: &LiftAudit,
    census: Option<&ConstraintCensus>,
    randomization_stats: serde_json::Value,
    status: &str,
    code_dir: &str,
) -> serde_json::Value {
    let girth_value = |g: &Girth| match g {
        Girth::Cycle(v) => serde_json::json!(v),
        Girth::AcyclicUpTo(_) => serde_json::Value::Null,
    };
    let degree_pair = if audit.col_weights_hx.len() == 1 && audit.row_weights_hx.len() == 1 {
        format!("({},{})", audit.col_weights_hx[0], audit.row_weights_hx[0])
    } else {
        "irregular".to_string()
    };
    let mut randomization = serde_json::json!({});
    if let Some(c) = census {
        randomization = serde_json::json!({
            "zero_eqs": c.zero_eqs,
            "unavoidable_8cycles": {
                "enabled": true,
                "mod_prime": c.mod_prime,
                "basis_rank": c.basis_rank,
                "hx_total": c.hx_total_8,
                "hz_total": c.hz_total_8,
                "hx_removed_unavoidable": c.hx_removed_unavoidable,
                "hz_removed_unavoidable": c.hz_removed_unavoidable,
                "hx_kept": c.hx_kept_8,
                "hz_kept": c.hz_kept_8,
            },
            "constraints_total": c.constraints_total,
            "counts_by_type": c.counts_by_type,
        });
    }
    if let serde_json::Value::Object(extra) = randomization_stats {
        if let serde_json::Value::Object(map) = &mut randomization {
            for (k, v) in extra {
                map.insert(k, v);
            }
        }
    }
    serde_json::json!({
        "code_dir": code_dir,
        "status": status,
        "parameters": {
            "n": audit.n,
            "m_x": audit.m_x,
            "m_z": audit.m_z,
            "rank_hx": audit.rank_hx,
            "rank_hz": audit.rank_hz,
            "k": audit.k,
            "row_weight_hx": audit.row_weights_hx,
            "row_weight_hz": audit.row_weights_hz,
            "col_weight_hx": audit.col_weights_hx,
            "col_weight_hz": audit.col_weights_hz,
            "degree_pair": degree_pair,
        },
        "checks": {
            "constraint_score": 0,
            "css_orthogonality_equations_ok": audit.orthogonality.bad_pairs == 0,
            "unavoidable_8cycles_allowed": true,
            "tanner_girth": girth_value(&audit.hx_girth),
            "hx_tanner_girth_up_to_10": girth_value(&audit.hx_girth),
            "hz_tanner_girth_up_to_10": girth_value(&audit.hz_girth),
            "css_orthogonality_bad_pairs": audit.orthogonality.bad_pairs,
            "css_overlap_pairs_seen": audit.orthogonality.overlapping_pairs,
            "css_orthogonality_ok": audit.orthogonality.bad_pairs == 0,
        },
        "randomization": randomization,
    })
}

// --- shift table CSV ------------------------------------------------------------

fn parse_shift_csv(path: &Path, p: u64) -> Result<BTreeMap<(u32, u32), u64>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::MalformedShiftRow {
        line: 0,
        reason: "empty file".to_string(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    let expected_shift = format!("shift_mod_{p}");
    if cols.len() != 4
        || cols[0] != "base_check_row"
        || cols[1] != "base_variable_column"
        || cols[2] != "row_color"
        || cols[3] != expected_shift
    {
        return Err(Error::MalformedShiftRow {
            line: 1,
            reason: format!(
                "header must be base_check_row,base_variable_column,row_color,{expected_shift}"
            ),
        });
    }
    let mut out = BTreeMap::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::MalformedShiftRow {
                line: idx + 1,
                reason: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str| -> Result<u64> {
            s.trim().parse::<u64>().map_err(|e| Error::MalformedShiftRow {
                line: idx + 1,
                reason: format!("{s:?}: {e}"),
            })
        };
        let row = parse(fields[0])? as u32;
        let col = parse(fields[1])? as u32;
        let _color = parse(fields[2])?;
        let shift = parse(fields[3])?;
        if shift >= p {
            return Err(Error::MalformedShiftRow {
                line: idx + 1,
                reason: format!("shift {shift} is not below P = {p}"),
            });
        }
        if out.insert((row, col), shift).is_some() {
            return Err(Error::MalformedShiftRow {
                line: idx + 1,
                reason: format!("duplicate entry ({row}, {col})"),
            });
        }
    }
    Ok(out)
}

/// Load a shift assignment from the two CSV tables (identity row-color
/// mode): header `base_check_row,base_variable_column,row_color,shift_mod_P`.
pub fn load_shift_tables(csv_x: &Path, csv_z: &Path, p: u64) -> Result<ShiftAssignment> {
    Ok(ShiftAssignment {
        p,
        x_shifts: parse_shift_csv(csv_x, p)?,
        z_shifts: parse_shift_csv(csv_z, p)?,
    })
}

fn write_shift_csv(shifts: &BTreeMap<(u32, u32), u64>, p: u64, path: &Path) -> Result<()> {
    let mut out = format!("base_check_row,base_variable_column,row_color,shift_mod_{p}\n");
    for (&(row, col), &shift) in shifts {
        out.push_str(&format!("{row},{col},{row},{shift}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Save both shift tables; `row_color` is emitted equal to the check row
/// (identity color mode). `save` then `load` is lossless.
pub fn save_shift_tables(a: &ShiftAssignment, csv_x: &Path, csv_z: &Path) -> Result<()> {
    write_shift_csv(&a.x_shifts, a.p, csv_x)?;
    write_shift_csv(&a.z_shifts, a.p, csv_z)?;
    Ok(())
}

// --- solution.json ---------------------------------------------------------------

/// Assemble the solution record for a searched or walked assignment, in the
/// dense by-color layout (identity colors: one color per check row).
pub fn solution_json(
    code: &CssCode,
    a: &ShiftAssignment,
    weights: &Weights,
    method: &str,
    search_meta: serde_json::Value,
    stats: serde_json::Value,
) -> serde_json::Value {
    let ncols = code.n();
    let dense = |shifts: &BTreeMap<(u32, u32), u64>, m: usize| -> Vec<Vec<u64>> {
        let mut arr = vec![vec![0u64; ncols]; m];
        for (&(r, c), &s) in shifts {
            arr[r as usize][c as usize] = s;
        }
        arr
    };
    serde_json::json!({
        "P": a.p,
        "tanner_len": 10,
        "color_mode": { "requested": "identity", "hx": "identity", "hz": "identity" },
        "ortho_mode": "paired",
        "ncols": ncols,
        "hx_m": code.m_x(),
        "hz_m": code.m_z(),
        "hx_num_colors": code.m_x(),
        "hz_num_colors": code.m_z(),
        "hx_row_color": (0..code.m_x() as u64).collect::<Vec<u64>>(),
        "hz_row_color": (0..code.m_z() as u64).collect::<Vec<u64>>(),
        "x_shift_by_color": dense(&a.x_shifts, code.m_x()),
        "z_shift_by_color": dense(&a.z_shifts, code.m_z()),
        "weights": { "w4": weights.w4, "w6": weights.w6, "w8": weights.w8, "w10": weights.w10, "w12": weights.w12 },
        "search": search_meta,
        "best": { "score": 0 },
        "method": method,
        "stats": stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basegen;
    use crate::hgp::build_hgp;

    fn toy_all_ones() -> CssCode {
        let m = BitMatrix::from_rows(2, vec![vec![0, 1], vec![0, 1]]);
        CssCode::new(m.clone(), m, Origin::External).unwrap()
    }

    #[test]
    fn zero_equations_of_b15_hgp() {
        let code = build_hgp(&basegen::b15());
        let eqs = build_zero_equations(&code).unwrap();
        assert_eq!(eqs.len(), 2025);
    }

    #[test]
    fn zero_equations_of_disjoint_supports_empty() {
        let hx = BitMatrix::from_rows(4, vec![vec![0, 1]]);
        let hz = BitMatrix::from_rows(4, vec![vec![2, 3]]);
        let code = CssCode::new(hx, hz, Origin::External).unwrap();
        assert!(build_zero_equations(&code).unwrap().is_empty());
    }

    #[test]
    fn odd_overlap_is_an_error_with_witness() {
        let hx = BitMatrix::from_rows(3, vec![vec![0, 1, 2]]);
        let hz = BitMatrix::from_rows(3, vec![vec![0]]);
        let code = CssCode { hx, hz, origin: Origin::External };
        match build_zero_equations(&code) {
            Err(Error::OddOverlap { x_row: 0, z_row: 0, overlap: 1 }) => {}
            other => panic!("expected odd-overlap error, got {other:?}"),
        }
    }

    #[test]
    fn toy_four_cycle_constraints() {
        let code = toy_all_ones();
        let cons = enumerate_cycle_constraints(&code, 10);
        let fours: Vec<&CycleConstraint> =
            cons.iter().filter(|c| c.ctype == CycleType::Four).collect();
        assert_eq!(fours.len(), 2); // one per side
        assert!(fours.iter().any(|c| c.side == Side::X));
        assert!(fours.iter().any(|c| c.side == Side::Z));
    }

    #[test]
    fn all_zero_assignment_has_zero_voltages() {
        let code = toy_all_ones();
        let a = ShiftAssignment::identity(&code, 8);
        for c in enumerate_cycle_constraints(&code, 10) {
            assert_eq!(cycle_voltage(&a, &c).unwrap(), 0);
        }
        for eq in build_zero_equations(&code).unwrap() {
            assert_eq!(zero_equation_residual(&a, &eq).unwrap(), 0);
        }
    }

    #[test]
    fn missing_shift_is_an_error() {
        let code = toy_all_ones();
        let mut a = ShiftAssignment::identity(&code, 8);
        a.x_shifts.remove(&(0, 0));
        let cons = enumerate_cycle_constraints(&code, 10);
        let c = cons.iter().find(|c| c.side == Side::X).unwrap();
        assert!(matches!(cycle_voltage(&a, c), Err(Error::MissingShift { .. })));
    }

    #[test]
    fn lift_of_identity_assignment_is_disjoint_copies() {
        let code = build_hgp(&basegen::b15());
        let a = ShiftAssignment::identity(&code, 3);
        let lifted = build_lifted_matrices(&code, &a).unwrap();
        assert_eq!(lifted.n(), 3 * 450);
        let comps = tanner::connected_components(&lifted.hx);
        assert_eq!(comps.len(), 3);
        assert!(comps.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn lift_at_p_1_is_the_base() {
        let code = build_hgp(&basegen::b7());
        let a = ShiftAssignment::identity(&code, 1);
        let lifted = build_lifted_matrices(&code, &a).unwrap();
        assert_eq!(lifted.hx.rows(), code.hx.rows());
        assert_eq!(lifted.hz.rows(), code.hz.rows());
    }

    #[test]
    fn coverage_mismatch_is_an_error() {
        let code = build_hgp(&basegen::b7());
        let mut a = ShiftAssignment::identity(&code, 4);
        a.x_shifts.remove(a.x_shifts.keys().next().copied().as_ref().unwrap());
        assert!(build_lifted_matrices(&code, &a).is_err());
    }

    #[test]
    fn cycle_closure_iff_zero_voltage() {
        // Base with one 4-cycle: lift it with zero voltage and nonzero
        // voltage and look for a lifted 4-cycle.
        let m = BitMatrix::from_rows(2, vec![vec![0, 1], vec![0, 1]]);
        let p = 5u64;
        // voltage = s(0,1) - s(0,0) + s(1,0) - s(1,1)
        let mk = |s00: u64, s01: u64, s10: u64, s11: u64| {
            let mut shifts = BTreeMap::new();
            shifts.insert((0u32, 0u32), s00);
            shifts.insert((0u32, 1u32), s01);
            shifts.insert((1u32, 0u32), s10);
            shifts.insert((1u32, 1u32), s11);
            shifts
        };
        let closed = lift_matrix(&m, &mk(1, 3, 2, 4), p).unwrap(); // 3-1+2-4 = 0
        let open = lift_matrix(&m, &mk(1, 3, 2, 3), p).unwrap(); // 3-1+2-3 = 1
        use crate::tanner::{tanner_girth_upto, Girth};
        assert_eq!(tanner_girth_upto(&closed, 8).girth, Girth::Cycle(4));
        assert_ne!(tanner_girth_upto(&open, 8).girth, Girth::Cycle(4));
    }

    #[test]
    fn shift_table_roundtrip() {
        let code = build_hgp(&basegen::b7());
        let mut a = ShiftAssignment::identity(&code, 16);
        let keys: Vec<(u32, u32)> = a.x_shifts.keys().copied().collect();
        for (i, k) in keys.iter().enumerate() {
            a.x_shifts.insert(*k, (i as u64 * 7 + 3) % 16);
        }
        let dir = tempfile::tempdir().unwrap();
        let (px, pz) = (dir.path().join("x.csv"), dir.path().join("z.csv"));
        save_shift_tables(&a, &px, &pz).unwrap();
        let back = load_shift_tables(&px, &pz, 16).unwrap();
        assert_eq!(back, a);
        // Wrong modulus in the header is rejected.
        assert!(load_shift_tables(&px, &pz, 32).is_err());
    }

    #[test]
    fn malformed_shift_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        let header = "base_check_row,base_variable_column,row_color,shift_mod_8\n";
        std::fs::write(&p, format!("{header}0,0,0,9\n")).unwrap();
        assert!(matches!(parse_shift_csv(&p, 8), Err(Error::MalformedShiftRow { line: 2, .. })));
        std::fs::write(&p, format!("{header}0,0,0,1\n0,0,0,2\n")).unwrap();
        assert!(matches!(parse_shift_csv(&p, 8), Err(Error::MalformedShiftRow { line: 3, .. })));
        std::fs::write(&p, format!("{header}0,0,1\n")).unwrap();
        assert!(parse_shift_csv(&p, 8).is_err());
    }

    #[test]
    fn find_feasible_lift_p1_infeasible() {
        let code = build_hgp(&basegen::b15());
        assert!(matches!(
            find_feasible_lift(&code, 1, 0, &Weights::default(), 10),
            Err(Error::InfeasibleParameters { .. })
        ));
    }

    #[test]
    fn find_feasible_lift_no_constraints_all_zero() {
        // HGP of the identity has an acyclic Tanner graph: no constraints,
        // and the all-zero start is already feasible.
        let b = crate::basegen::BaseMatrix {
            matrix: BitMatrix::identity(3),
            label: "I3".to_string(),
            construction: crate::basegen::Construction::Search { s: 3, w: 1 },
        };
        let code = build_hgp(&b);
        let (a, stats) = find_feasible_lift(&code, 4, 9, &Weights::default(), 100).unwrap();
        assert_eq!(stats.final_score, 0);
        assert!(a.x_shifts.values().all(|&s| s < 4));
    }

    #[test]
    fn reconstruct_base_roundtrip() {
        for b in [basegen::b7(), basegen::b15()] {
            let code = build_hgp(&b);
            let back = reconstruct_hgp_base(&code).expect("HGP structure must be recognized");
            assert_eq!(back.rows(), b.matrix.rows());
        }
    }

    #[test]
    fn walk_with_zero_proposals_is_identity() {
        let code = build_hgp(&basegen::b15());
        let a = ShiftAssignment::identity(&code, 4);
        let zero_eqs = build_zero_equations(&code).unwrap();
        // Empty kept set: score trivially 0, no proposals requested.
        let params = WalkParams { max_proposals: 0, ..WalkParams::default() };
        let (out, stats) = feasible_random_walk(&a, &zero_eqs, &[], &params).unwrap();
        assert_eq!(out, a);
        assert_eq!(stats.accepted_kernel_moves, 0);
    }

    #[test]
    fn walk_composite_modulus_kernel_moves() {
        // P = 12 exercises the prime-power lifting and CRT combination in
        // the local kernel solver; HGP(I_3) has zero equations but no cycle
        // constraints, so every kernel move is acceptable.
        let b = crate::basegen::BaseMatrix {
            matrix: BitMatrix::identity(3),
            label: "I3".to_string(),
            construction: crate::basegen::Construction::Search { s: 3, w: 1 },
        };
        let code = build_hgp(&b);
        let zero_eqs = build_zero_equations(&code).unwrap();
        assert!(!zero_eqs.is_empty());
        let start = ShiftAssignment::identity(&code, 12);
        let params = WalkParams {
            seed_vars: 6,
            radius: 4,
            target_accepts: 8,
            max_proposals: 400,
            seed: 3,
        };
        let (out, stats) = feasible_random_walk(&start, &zero_eqs, &[], &params).unwrap();
        assert!(stats.accepted_kernel_moves >= 1, "no kernel moves accepted at P=12");
        for eq in &zero_eqs {
            assert_eq!(zero_equation_residual(&out, eq).unwrap(), 0);
        }
        assert!(out.x_shifts.values().chain(out.z_shifts.values()).all(|&s| s < 12));
    }

    #[test]
    fn walk_rejects_infeasible_start() {
        let code = toy_all_ones();
        let a = ShiftAssignment::identity(&code, 8); // all voltages zero
        let zero_eqs = build_zero_equations(&code).unwrap();
        let kept = enumerate_cycle_constraints(&code, 10);
        assert!(matches!(
            feasible_random_walk(&a, &zero_eqs, &kept, &WalkParams::default()),
            Err(Error::InfeasibleStart { .. })
        ));
    }
}
