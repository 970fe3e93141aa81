//! Depolarizing-channel sampling, syndrome computation, degeneracy-aware
//! belief propagation, and OSD-lite post-processing.
//!
//! The decoder is binary-message BP over the two Tanner graphs: rows of H_X
//! constrain the z component of the error and rows of H_Z the x component,
//! while every variable node carries a four-state Pauli prior over I/X/Z/Y
//! that fuses the two sides. OSD-lite is a restricted reliability-ordered
//! syndrome repair applied only when BP terminates with a nonzero residual.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gf2::{BitMatrix, BitVec, RowSpace};
use crate::hgp::CssCode;
use crate::{Error, Result};

/// A sampled or estimated Pauli error: qubit q carries X iff x=1,z=0, Z iff
/// x=0,z=1, Y iff both.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliVec {
    pub n: usize,
    pub x_bits: BitVec,
    pub z_bits: BitVec,
}

impl PauliVec {
    pub fn identity(n: usize) -> Self {
        Self { n, x_bits: BitVec::zero(n), z_bits: BitVec::zero(n) }
    }

    pub fn new(n: usize, x_support: Vec<u32>, z_support: Vec<u32>) -> Self {
        Self { n, x_bits: BitVec::new(n, x_support), z_bits: BitVec::new(n, z_support) }
    }

    pub fn from_dense(x: &[bool], z: &[bool]) -> Self {
        let n = x.len();
        let xs = x.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u32).collect();
        let zs = z.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u32).collect();
        Self { n, x_bits: BitVec::new(n, xs), z_bits: BitVec::new(n, zs) }
    }

    pub fn weight(&self) -> usize {
        // Number of non-identity qubits.
        let mut w = self.x_bits.weight() + self.z_bits.weight();
        let (mut i, mut j) = (0, 0);
        let (xs, zs) = (self.x_bits.support(), self.z_bits.support());
        while i < xs.len() && j < zs.len() {
            match xs[i].cmp(&zs[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    w -= 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        w
    }
}

/// Per-trial classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeStatus {
    Exact,
    Degenerate,
    LogicalFailure,
    SyndromeMismatch,
}

impl DecodeStatus {
    pub fn is_failure(&self) -> bool {
        matches!(self, DecodeStatus::LogicalFailure | DecodeStatus::SyndromeMismatch)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecodeOutcome {
    pub status: DecodeStatus,
    pub iterations_used: u32,
    pub osd_invoked: bool,
    pub estimate: PauliVec,
}

/// OSD-lite caps. The joint prefix stage applies a unique solution only up
/// to `unique_weight_cap`, and a non-unique one only when the residual
/// degrees of freedom are at most `fallback_dof_cap` and the selected
/// minimum-weight correction is at most `fallback_weight_cap`. The local
/// fallback draws candidates from variables incident to unsatisfied checks
/// (two-hop when the unsatisfied count is at most `two_hop_unsat_cap`),
/// bounded by `local_pool` and then by the per-band caps, with the exact
/// solve bounded by `joint_var_cap` variables and `joint_dof_cap` degrees
/// of freedom.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OsdConfig {
    pub unique_weight_cap: usize,
    pub fallback_dof_cap: u32,
    pub fallback_weight_cap: usize,
    pub local_pool: usize,
    /// (unsatisfied-count threshold, pool cap): the cap applies when the
    /// unsatisfied count exceeds the threshold; the largest exceeded
    /// threshold wins.
    pub pool_caps: Vec<(usize, usize)>,
    pub two_hop_unsat_cap: usize,
    pub joint_var_cap: usize,
    pub joint_dof_cap: u32,
    pub ets_enabled: bool,
}

impl Default for OsdConfig {
    fn default() -> Self {
        Self {
            unique_weight_cap: 30,
            fallback_dof_cap: 5,
            fallback_weight_cap: 20,
            local_pool: 2048,
            pool_caps: vec![(6, 160), (12, 128), (24, 96)],
            two_hop_unsat_cap: 32,
            joint_var_cap: 128,
            joint_dof_cap: 20,
            ets_enabled: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub p_channel: f64,
    pub max_iterations: u32,
    /// Fraction of the previous variable-to-check message retained per
    /// iteration; 0 is undamped flooding.
    pub damping: f64,
    pub osd: OsdConfig,
}

impl DecoderConfig {
    pub fn new(p_channel: f64) -> Self {
        Self { p_channel, max_iterations: 100, damping: 0.5, osd: OsdConfig::default() }
    }
}

/// i.i.d. depolarizing sample: identity with probability 1-p, each of X/Y/Z
/// with probability p/3.
pub fn sample_depolarizing<R: Rng>(n: usize, p: f64, rng: &mut R) -> PauliVec {
    debug_assert!((0.0..1.0).contains(&p));
    let mut x = Vec::new();
    let mut z = Vec::new();
    for q in 0..n {
        let u: f64 = rng.gen();
        if u < p {
            let v = u / p;
            if v < 1.0 / 3.0 {
                x.push(q as u32);
            } else if v < 2.0 / 3.0 {
                x.push(q as u32);
                z.push(q as u32);
            } else {
                z.push(q as u32);
            }
        }
    }
    PauliVec { n, x_bits: BitVec::new(n, x), z_bits: BitVec::new(n, z) }
}

/// s_x = H_X . z_bits and s_z = H_Z . x_bits.
pub fn compute_syndromes(code: &CssCode, e: &PauliVec) -> Result<(BitVec, BitVec)> {
    if e.n != code.n() {
        return Err(Error::LengthMismatch { want: code.n(), got: e.n });
    }
    Ok((code.hx.mul_vec(&e.z_bits)?, code.hz.mul_vec(&e.x_bits)?))
}

// --- flattened Tanner graphs -------------------------------------------------

struct SideGraph {
    n_checks: usize,
    check_offsets: Vec<u32>,
    edge_var: Vec<u32>,
    var_offsets: Vec<u32>,
    var_edges: Vec<u32>,
}

impl SideGraph {
    fn new(m: &BitMatrix) -> Self {
        let n_checks = m.n_rows();
        let mut check_offsets = Vec::with_capacity(n_checks + 1);
        let mut edge_var = Vec::new();
        check_offsets.push(0);
        for row in m.rows() {
            edge_var.extend_from_slice(row);
            check_offsets.push(edge_var.len() as u32);
        }
        let mut var_counts = vec![0u32; m.n_cols()];
        for &v in &edge_var {
            var_counts[v as usize] += 1;
        }
        let mut var_offsets = Vec::with_capacity(m.n_cols() + 1);
        var_offsets.push(0u32);
        for &c in &var_counts {
            var_offsets.push(var_offsets.last().unwrap() + c);
        }
        let mut cursor = var_offsets.clone();
        let mut var_edges = vec![0u32; edge_var.len()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[cursor[v as usize] as usize] = e as u32;
            cursor[v as usize] += 1;
        }
        Self { n_checks, check_offsets, edge_var, var_offsets, var_edges }
    }

    fn check_edges(&self, c: usize) -> std::ops::Range<usize> {
        self.check_offsets[c] as usize..self.check_offsets[c + 1] as usize
    }

    fn var_edges(&self, v: usize) -> &[u32] {
        &self.var_edges[self.var_offsets[v] as usize..self.var_offsets[v + 1] as usize]
    }

    /// Dense syndrome of dense bits.
    fn syndrome(&self, bits: &[bool], out: &mut [bool]) {
        for (c, slot) in out.iter_mut().enumerate() {
            let mut parity = false;
            for e in self.check_edges(c) {
                parity ^= bits[self.edge_var[e] as usize];
            }
            *slot = parity;
        }
    }
}

/// Shared per-code decoder tables: the two side graphs and column supports.
pub struct CodeGraph {
    n: usize,
    x_side: SideGraph, // rows of H_X, constraining z bits
    z_side: SideGraph, // rows of H_Z, constraining x bits
    hx_cols: Vec<Vec<u32>>,
    hz_cols: Vec<Vec<u32>>,
}

impl CodeGraph {
    pub fn new(code: &CssCode) -> Self {
        Self {
            n: code.n(),
            x_side: SideGraph::new(&code.hx),
            z_side: SideGraph::new(&code.hz),
            hx_cols: code.hx.col_supports(),
            hz_cols: code.hz.col_supports(),
        }
    }
}

// --- belief propagation --------------------------------------------------------

const MSG_CLAMP: f64 = 30.0;
const TANH_CLAMP: f64 = 1.0 - 1e-12;

fn logaddexp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn clamp_msg(m: f64) -> f64 {
    m.clamp(-MSG_CLAMP, MSG_CLAMP)
}

pub struct BpResult {
    pub estimate: PauliVec,
    /// Normalized four-state posterior (I, X, Z, Y) per qubit.
    pub posteriors: Vec<[f64; 4]>,
    pub converged: bool,
    pub iterations: u32,
}

struct BpState {
    c2v_x: Vec<f64>,
    v2c_x: Vec<f64>,
    c2v_z: Vec<f64>,
    v2c_z: Vec<f64>,
    sum_x: Vec<f64>, // per var: sum of c2v over x-side edges
    sum_z: Vec<f64>,
    hard_x: Vec<bool>,
    hard_z: Vec<bool>,
    synd_x: Vec<bool>,
    synd_z: Vec<bool>,
}

fn check_update(side: &SideGraph, syndrome: &[bool], v2c: &[f64], c2v: &mut [f64]) {
    let mut fwd = [0.0f64; 64];
    let mut th = [0.0f64; 64];
    for (c, &synd_bit) in syndrome.iter().enumerate().take(side.n_checks) {
        let range = side.check_edges(c);
        debug_assert!(range.len() <= 64);
        // forward partial products of tanh(m/2)
        let mut acc = 1.0f64;
        for (k, e) in range.clone().enumerate() {
            fwd[k] = acc;
            th[k] = (v2c[e] / 2.0).tanh();
            acc *= th[k];
        }
        // backward sweep
        let mut back = 1.0f64;
        let sign = if synd_bit { -1.0 } else { 1.0 };
        for (k, e) in range.clone().enumerate().rev() {
            let prod = (fwd[k] * back).clamp(-TANH_CLAMP, TANH_CLAMP);
            c2v[e] = clamp_msg(sign * 2.0 * prod.atanh());
            back *= th[k];
        }
    }
}

/// Syndrome-conditioned BP: binary tanh-rule check messages on each side,
/// variable nodes fusing both sides through the four-state prior, flooding
/// schedule, early stop when both residual syndromes vanish.
pub fn bp_decode(
    graph: &CodeGraph,
    s_x: &BitVec,
    s_z: &BitVec,
    config: &DecoderConfig,
) -> BpResult {
    let n = graph.n;
    let p = config.p_channel;
    let ln_pi = (1.0 - p).ln();
    let ln_px = (p / 3.0).ln();
    let ln_pz = ln_px;
    let ln_py = ln_px;
    let sx: Vec<bool> = {
        let mut v = vec![false; graph.x_side.n_checks];
        for &i in s_x.support() {
            v[i as usize] = true;
        }
        v
    };
    let sz: Vec<bool> = {
        let mut v = vec![false; graph.z_side.n_checks];
        for &i in s_z.support() {
            v[i as usize] = true;
        }
        v
    };
    let priors_posterior = |sum_x: f64, sum_z: f64| -> [f64; 4] {
        // Scores of I, X, Z, Y given the two side sums. sum_x carries the
        // x-side (z-bit) information, sum_z the z-side (x-bit) information.
        let li = ln_pi;
        let lx = ln_px - sum_z;
        let lz = ln_pz - sum_x;
        let ly = ln_py - sum_x - sum_z;
        let m = li.max(lx).max(lz).max(ly);
        let (ei, ex, ez, ey) =
            ((li - m).exp(), (lx - m).exp(), (lz - m).exp(), (ly - m).exp());
        let t = ei + ex + ez + ey;
        [ei / t, ex / t, ez / t, ey / t]
    };
    // Zero-syndrome shortcut: the identity estimate is already consistent.
    if s_x.is_zero() && s_z.is_zero() {
        let post = priors_posterior(0.0, 0.0);
        return BpResult {
            estimate: PauliVec::identity(n),
            posteriors: vec![post; n],
            converged: true,
            iterations: 0,
        };
    }
    let mut st = BpState {
        c2v_x: vec![0.0; graph.x_side.edge_var.len()],
        v2c_x: vec![0.0; graph.x_side.edge_var.len()],
        c2v_z: vec![0.0; graph.z_side.edge_var.len()],
        v2c_z: vec![0.0; graph.z_side.edge_var.len()],
        sum_x: vec![0.0; n],
        sum_z: vec![0.0; n],
        hard_x: vec![false; n],
        hard_z: vec![false; n],
        synd_x: vec![false; graph.x_side.n_checks],
        synd_z: vec![false; graph.z_side.n_checks],
    };
    // Channel-only initial messages: the prior marginal of the constrained
    // bit (z-bit toward x-checks, x-bit toward z-checks).
    let init_z_llr = logaddexp(ln_pi, ln_px) - logaddexp(ln_pz, ln_py);
    let init_x_llr = logaddexp(ln_pi, ln_pz) - logaddexp(ln_px, ln_py);
    st.v2c_x.fill(clamp_msg(init_z_llr));
    st.v2c_z.fill(clamp_msg(init_x_llr));
    let mut converged = false;
    let mut iterations = 0;
    for iter in 1..=config.max_iterations {
        iterations = iter;
        check_update(&graph.x_side, &sx, &st.v2c_x, &mut st.c2v_x);
        check_update(&graph.z_side, &sz, &st.v2c_z, &mut st.c2v_z);
        // Variable update: per-variable totals, then extrinsic messages.
        for v in 0..n {
            let mut sum_x = 0.0;
            for &e in graph.x_side.var_edges(v) {
                sum_x += st.c2v_x[e as usize];
            }
            let mut sum_z = 0.0;
            for &e in graph.z_side.var_edges(v) {
                sum_z += st.c2v_z[e as usize];
            }
            st.sum_x[v] = sum_x;
            st.sum_z[v] = sum_z;
            // z-bit message to an x-check: all z-side info plus the other
            // x-check messages.
            let gamma = config.damping;
            let kappa_z = logaddexp(ln_pi, ln_px - sum_z) - logaddexp(ln_pz, ln_py - sum_z);
            for &e in graph.x_side.var_edges(v) {
                let fresh = kappa_z + sum_x - st.c2v_x[e as usize];
                st.v2c_x[e as usize] =
                    clamp_msg(gamma * st.v2c_x[e as usize] + (1.0 - gamma) * fresh);
            }
            let kappa_x = logaddexp(ln_pi, ln_pz - sum_x) - logaddexp(ln_px, ln_py - sum_x);
            for &e in graph.z_side.var_edges(v) {
                let fresh = kappa_x + sum_z - st.c2v_z[e as usize];
                st.v2c_z[e as usize] =
                    clamp_msg(gamma * st.v2c_z[e as usize] + (1.0 - gamma) * fresh);
            }
            // Hard decision: argmax of the four-state posterior, ties toward
            // the earlier of I, X, Z, Y.
            let li = ln_pi;
            let lx = ln_px - sum_z;
            let lz = ln_pz - sum_x;
            let ly = ln_py - sum_x - sum_z;
            let mut best = 0usize;
            let mut best_v = li;
            for (i, s) in [(1usize, lx), (2, lz), (3, ly)] {
                if s > best_v {
                    best = i;
                    best_v = s;
                }
            }
            st.hard_x[v] = best == 1 || best == 3;
            st.hard_z[v] = best == 2 || best == 3;
        }
        graph.x_side.syndrome(&st.hard_z, &mut st.synd_x);
        graph.z_side.syndrome(&st.hard_x, &mut st.synd_z);
        if st.synd_x == sx && st.synd_z == sz {
            converged = true;
            break;
        }
    }
    let posteriors: Vec<[f64; 4]> =
        (0..n).map(|v| priors_posterior(st.sum_x[v], st.sum_z[v])).collect();
    BpResult {
        estimate: PauliVec::from_dense(&st.hard_x, &st.hard_z),
        posteriors,
        converged,
        iterations,
    }
}

/// Flip cost per variable: |log(P(best) / P(second best))| of the four-state
/// posterior; smaller means less reliable.
pub fn flip_costs(posteriors: &[[f64; 4]]) -> Vec<f64> {
    posteriors
        .iter()
        .map(|p| {
            let mut s = *p;
            s.sort_by(|a, b| b.partial_cmp(a).expect("posterior probabilities are finite"));
            if s[1] <= 0.0 {
                f64::INFINITY
            } else {
                (s[0] / s[1]).ln().abs()
            }
        })
        .collect()
}

// --- OSD-lite -------------------------------------------------------------------

/// Restricted GF(2) solve of `H[:, candidates] d = residual` by incremental
/// column elimination; columns can be appended between solve attempts.
/// Masks index positions in the candidate list.
struct RestrictedSolution {
    dof: u32,
    solution_mask: Vec<u64>,
    kernel_masks: Vec<Vec<u64>>,
}

struct ColumnSolver {
    row_words: usize,
    mask_words: usize,
    n_candidates: usize,
    pivots: Vec<i32>,
    basis_vec: Vec<Vec<u64>>,
    basis_mask: Vec<Vec<u64>>,
    kernel_masks: Vec<Vec<u64>>,
}

impl ColumnSolver {
    fn new(n_checks: usize, max_candidates: usize) -> Self {
        Self {
            row_words: n_checks.div_ceil(64),
            mask_words: max_candidates.div_ceil(64),
            n_candidates: 0,
            pivots: vec![-1; n_checks],
            basis_vec: Vec::new(),
            basis_mask: Vec::new(),
            kernel_masks: Vec::new(),
        }
    }

    fn push_column(&mut self, support: &[u32]) {
        let i = self.n_candidates;
        self.n_candidates += 1;
        let mut vec = vec![0u64; self.row_words];
        for &r in support {
            vec[(r as usize) >> 6] ^= 1u64 << (r & 63);
        }
        let mut mask = vec![0u64; self.mask_words];
        mask[i >> 6] |= 1u64 << (i & 63);
        loop {
            let Some(pivot) = first_set(&vec) else {
                self.kernel_masks.push(mask);
                break;
            };
            let b = self.pivots[pivot];
            if b < 0 {
                self.pivots[pivot] = self.basis_vec.len() as i32;
                self.basis_vec.push(vec);
                self.basis_mask.push(mask);
                break;
            }
            let b = b as usize;
            for (d, s) in vec.iter_mut().zip(&self.basis_vec[b]) {
                *d ^= s;
            }
            for (d, s) in mask.iter_mut().zip(&self.basis_mask[b]) {
                *d ^= s;
            }
        }
    }

    fn dof(&self) -> u32 {
        self.kernel_masks.len() as u32
    }

    fn solve(&self, residual: &[bool]) -> Option<RestrictedSolution> {
        let mut vec = vec![0u64; self.row_words];
        for (r, &bit) in residual.iter().enumerate() {
            if bit {
                vec[r >> 6] ^= 1u64 << (r & 63);
            }
        }
        let mut mask = vec![0u64; self.mask_words];
        while let Some(pivot) = first_set(&vec) {
            let b = self.pivots[pivot];
            if b < 0 {
                return None; // residual not in the span of the candidates
            }
            let b = b as usize;
            for (d, s) in vec.iter_mut().zip(&self.basis_vec[b]) {
                *d ^= s;
            }
            for (d, s) in mask.iter_mut().zip(&self.basis_mask[b]) {
                *d ^= s;
            }
        }
        Some(RestrictedSolution {
            dof: self.dof(),
            solution_mask: mask,
            kernel_masks: self.kernel_masks.clone(),
        })
    }
}

fn solve_restricted(
    cols: &[Vec<u32>],
    candidates: &[u32],
    residual: &[bool],
    n_checks: usize,
    dof_skip_cap: u32,
) -> Option<RestrictedSolution> {
    let mut solver = ColumnSolver::new(n_checks, candidates.len());
    for &cand in candidates {
        solver.push_column(&cols[cand as usize]);
        if solver.dof() > dof_skip_cap {
            return None;
        }
    }
    solver.solve(residual)
}

fn first_set(words: &[u64]) -> Option<usize> {
    for (wi, &w) in words.iter().enumerate() {
        if w != 0 {
            return Some(wi * 64 + w.trailing_zeros() as usize);
        }
    }
    None
}

fn mask_weight(mask: &[u64]) -> usize {
    mask.iter().map(|w| w.count_ones() as usize).sum()
}

/// Minimum-weight element of the solution coset, over at most 2^dof
/// combinations.
fn min_weight_in_coset(sol: &RestrictedSolution) -> Vec<u64> {
    let dof = sol.kernel_masks.len();
    let mut best = sol.solution_mask.clone();
    let mut best_w = mask_weight(&best);
    let mut acc = sol.solution_mask.clone();
    for g in 1u64..(1u64 << dof) {
        let flip = (g ^ (g >> 1)) ^ ((g - 1) ^ ((g - 1) >> 1));
        let idx = flip.trailing_zeros() as usize;
        for (d, s) in acc.iter_mut().zip(&sol.kernel_masks[idx]) {
            *d ^= s;
        }
        let w = mask_weight(&acc);
        if w < best_w {
            best = acc.clone();
            best_w = w;
        }
    }
    best
}

/// Whether the solution passes the application caps: a unique solution needs
/// weight <= unique cap; a non-unique one needs dof within the fallback dof
/// cap and the selected weight within the fallback weight cap.
fn apply_mask_under_caps(sol: &RestrictedSolution, osd: &OsdConfig) -> Option<Vec<u64>> {
    if sol.dof == 0 {
        let w = mask_weight(&sol.solution_mask);
        (w <= sol.solution_mask.len() * 64 && w <= osd.unique_weight_cap)
            .then(|| sol.solution_mask.clone())
    } else if sol.dof <= osd.fallback_dof_cap {
        let best = min_weight_in_coset(sol);
        (mask_weight(&best) <= osd.fallback_weight_cap).then_some(best)
    } else {
        None
    }
}

struct SideRepair<'a> {
    side: &'a SideGraph,
    cols: &'a [Vec<u32>],
}

/// Repair one side: find d with H d = residual over the chosen candidate
/// columns and flip those bits.
fn repair_side(
    ctx: &SideRepair<'_>,
    bits: &mut [bool],
    target: &[bool],
    order: &[u32],
    osd: &OsdConfig,
) {
    let n = bits.len();
    let n_checks = ctx.side.n_checks;
    let mut residual = vec![false; n_checks];
    ctx.side.syndrome(bits, &mut residual);
    for (r, &t) in residual.iter_mut().zip(target) {
        *r ^= t;
    }
    if residual.iter().all(|&b| !b) {
        return;
    }
    // Stage 1: joint prefix search over reliability-ordered columns,
    // doubling the prefix until the restricted system becomes solvable. The
    // elimination state is shared across widths.
    let max_prefix = n.min(4096);
    let mut solver = ColumnSolver::new(n_checks, max_prefix);
    let mut width = 32usize.min(max_prefix);
    loop {
        while solver.n_candidates < width.min(order.len()) {
            solver.push_column(&ctx.cols[order[solver.n_candidates] as usize]);
        }
        if let Some(sol) = solver.solve(&residual) {
            if let Some(mask) = apply_mask_under_caps(&sol, osd) {
                apply_mask(bits, &order[..solver.n_candidates], &mask);
            }
            break; // solvable prefix found; applied or rejected by caps
        }
        if width >= max_prefix {
            break;
        }
        width = (width * 2).min(max_prefix);
    }
    ctx.side.syndrome(bits, &mut residual);
    for (r, &t) in residual.iter_mut().zip(target) {
        *r ^= t;
    }
    if residual.iter().all(|&b| !b) {
        return;
    }
    // Stage 2: local fallback around the unsatisfied checks.
    let unsat: Vec<u32> = residual
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(c, _)| c as u32)
        .collect();
    let mut in_pool = vec![false; n];
    let mut pool: Vec<u32> = Vec::new();
    for &c in &unsat {
        for e in ctx.side.check_edges(c as usize) {
            let v = ctx.side.edge_var[e];
            if !in_pool[v as usize] {
                in_pool[v as usize] = true;
                pool.push(v);
            }
        }
    }
    if unsat.len() <= osd.two_hop_unsat_cap {
        // Two-hop: variables of every check that touches the one-hop pool.
        let one_hop = pool.clone();
        let mut check_seen = vec![false; n_checks];
        for &v in &one_hop {
            for &e in ctx.side.var_edges(v as usize) {
                // edge -> owning check via binary search on offsets
                let c = match ctx.side.check_offsets.binary_search(&e) {
                    Ok(i) => i,
                    Err(i) => i - 1,
                };
                if check_seen[c] {
                    continue;
                }
                check_seen[c] = true;
                for e2 in ctx.side.check_edges(c) {
                    let w = ctx.side.edge_var[e2];
                    if !in_pool[w as usize] {
                        in_pool[w as usize] = true;
                        pool.push(w);
                    }
                }
            }
        }
    }
    // Reliability order within the pool, then the pool and band caps.
    let rank_of: std::collections::HashMap<u32, usize> =
        order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    pool.sort_by_key(|v| rank_of.get(v).copied().unwrap_or(usize::MAX));
    pool.truncate(osd.local_pool);
    let mut cap = osd.local_pool;
    for &(threshold, band_cap) in &osd.pool_caps {
        if unsat.len() > threshold {
            cap = band_cap;
        }
    }
    pool.truncate(cap);
    pool.truncate(osd.joint_var_cap);
    if pool.is_empty() {
        return;
    }
    if let Some(sol) =
        solve_restricted(ctx.cols, &pool, &residual, n_checks, osd.joint_dof_cap)
    {
        if let Some(mask) = apply_mask_under_caps(&sol, osd) {
            apply_mask(bits, &pool, &mask);
        }
    }
}

fn apply_mask(bits: &mut [bool], candidates: &[u32], mask: &[u64]) {
    for (i, &cand) in candidates.iter().enumerate() {
        if (mask[i >> 6] >> (i & 63)) & 1 == 1 {
            bits[cand as usize] ^= true;
        }
    }
}

/// OSD-lite repair of a BP estimate with nonzero residual syndrome: per
/// unrepaired side, a reliability-ordered joint prefix search followed by a
/// local fallback around unsatisfied checks. Returns the possibly-unchanged
/// estimate.
pub fn osd_lite_repair(
    graph: &CodeGraph,
    s_x: &BitVec,
    s_z: &BitVec,
    bp_estimate: &PauliVec,
    costs: &[f64],
    config: &DecoderConfig,
) -> PauliVec {
    let n = graph.n;
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&a, &b| {
        costs[a as usize]
            .partial_cmp(&costs[b as usize])
            .expect("flip costs are finite or +inf")
            .then(a.cmp(&b))
    });
    let mut x_bits = vec![false; n];
    for &i in bp_estimate.x_bits.support() {
        x_bits[i as usize] = true;
    }
    let mut z_bits = vec![false; n];
    for &i in bp_estimate.z_bits.support() {
        z_bits[i as usize] = true;
    }
    let sx: Vec<bool> = {
        let mut v = vec![false; graph.x_side.n_checks];
        for &i in s_x.support() {
            v[i as usize] = true;
        }
        v
    };
    let sz: Vec<bool> = {
        let mut v = vec![false; graph.z_side.n_checks];
        for &i in s_z.support() {
            v[i as usize] = true;
        }
        v
    };
    let x_ctx = SideRepair { side: &graph.x_side, cols: &graph.hx_cols };
    repair_side(&x_ctx, &mut z_bits, &sx, &order, &config.osd);
    let z_ctx = SideRepair { side: &graph.z_side, cols: &graph.hz_cols };
    repair_side(&z_ctx, &mut x_bits, &sz, &order, &config.osd);
    PauliVec::from_dense(&x_bits, &z_bits)
}

// --- classification -----------------------------------------------------------

/// Reusable degeneracy classifier: row-space bases of H_X and H_Z.
pub struct Classifier {
    row_space_x: RowSpace,
    row_space_z: RowSpace,
}

impl Classifier {
    pub fn new(code: &CssCode) -> Self {
        Self { row_space_x: RowSpace::new(&code.hx), row_space_z: RowSpace::new(&code.hz) }
    }

    pub fn classify(
        &self,
        code: &CssCode,
        e_true: &PauliVec,
        e_est: &PauliVec,
    ) -> Result<DecodeStatus> {
        if e_true.n != code.n() || e_est.n != code.n() {
            return Err(Error::LengthMismatch {
                want: code.n(),
                got: if e_true.n != code.n() { e_true.n } else { e_est.n },
            });
        }
        let (sx_true, sz_true) = compute_syndromes(code, e_true)?;
        let (sx_est, sz_est) = compute_syndromes(code, e_est)?;
        if sx_true != sx_est || sz_true != sz_est {
            return Ok(DecodeStatus::SyndromeMismatch);
        }
        if e_true == e_est {
            return Ok(DecodeStatus::Exact);
        }
        let x_diff = e_true.x_bits.xor(&e_est.x_bits)?;
        let z_diff = e_true.z_bits.xor(&e_est.z_bits)?;
        if self.row_space_x.contains(&x_diff)? && self.row_space_z.contains(&z_diff)? {
            Ok(DecodeStatus::Degenerate)
        } else {
            Ok(DecodeStatus::LogicalFailure)
        }
    }
}

/// One-shot classification; builds the row-space bases on each call.
pub fn classify_outcome(
    code: &CssCode,
    e_true: &PauliVec,
    e_est: &PauliVec,
) -> Result<DecodeStatus> {
    Classifier::new(code).classify(code, e_true, e_est)
}

/// Full decode pipeline: BP, then OSD-lite when a residual remains.
/// Returns (estimate, bp iterations, osd invoked).
pub fn decode_with_repair(
    graph: &CodeGraph,
    s_x: &BitVec,
    s_z: &BitVec,
    config: &DecoderConfig,
) -> (PauliVec, u32, bool) {
    let bp = bp_decode(graph, s_x, s_z, config);
    if bp.converged {
        return (bp.estimate, bp.iterations, false);
    }
    let costs = flip_costs(&bp.posteriors);
    let repaired = osd_lite_repair(graph, s_x, s_z, &bp.estimate, &costs, config);
    (repaired, bp.iterations, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basegen;
    use crate::hgp::build_hgp;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sample_p_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = sample_depolarizing(100, 0.0, &mut rng);
        assert_eq!(e, PauliVec::identity(100));
    }

    #[test]
    fn sample_is_deterministic_for_fixed_seed() {
        let a = sample_depolarizing(512, 0.2, &mut ChaCha8Rng::seed_from_u64(42));
        let b = sample_depolarizing(512, 0.2, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }

    #[test]
    fn sample_marginals_match_channel_law() {
        // P(x=1) = P(z=1) = 2p/3, tested within 3 sigma over 10^6 draws.
        let p = 0.12;
        let n = 1_000_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let e = sample_depolarizing(n, p, &mut rng);
        let expect = 2.0 * p / 3.0;
        let sigma = (expect * (1.0 - expect) / n as f64).sqrt();
        for observed in [e.x_bits.weight(), e.z_bits.weight()] {
            let rate = observed as f64 / n as f64;
            assert!(
                (rate - expect).abs() < 3.0 * sigma,
                "marginal {rate} vs expected {expect}"
            );
        }
    }

    #[test]
    fn syndromes_of_zero_error_are_zero() {
        let code = build_hgp(&basegen::b7());
        let (sx, sz) = compute_syndromes(&code, &PauliVec::identity(code.n())).unwrap();
        assert!(sx.is_zero() && sz.is_zero());
    }

    #[test]
    fn single_z_error_syndrome_is_hx_column() {
        let code = build_hgp(&basegen::b7());
        let q = 13u32;
        let e = PauliVec::new(code.n(), vec![], vec![q]);
        let (sx, sz) = compute_syndromes(&code, &e).unwrap();
        assert_eq!(sx.support(), &code.hx.col_supports()[q as usize][..]);
        assert!(sz.is_zero());
    }

    #[test]
    fn stabilizer_errors_have_zero_syndrome() {
        let code = build_hgp(&basegen::b7());
        // x component a row of H_X, z component a row of H_Z
        let e = PauliVec::new(code.n(), code.hx.row(5).to_vec(), code.hz.row(9).to_vec());
        let (sx, sz) = compute_syndromes(&code, &e).unwrap();
        assert!(sx.is_zero() && sz.is_zero());
    }

    #[test]
    fn zero_syndrome_shortcut() {
        let code = build_hgp(&basegen::b7());
        let graph = CodeGraph::new(&code);
        let config = DecoderConfig::new(0.05);
        let r = bp_decode(&graph, &BitVec::zero(49), &BitVec::zero(49), &config);
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.estimate, PauliVec::identity(code.n()));
    }

    #[test]
    fn bp_failure_reports_nonzero_residual() {
        let code = build_hgp(&basegen::b7());
        let graph = CodeGraph::new(&code);
        let mut config = DecoderConfig::new(0.05);
        config.max_iterations = 1; // starve BP so convergence can fail
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut saw_failure = false;
        for _ in 0..50 {
            let e = sample_depolarizing(code.n(), 0.2, &mut rng);
            let (sx, sz) = compute_syndromes(&code, &e).unwrap();
            let r = bp_decode(&graph, &sx, &sz, &config);
            if !r.converged {
                let (rx, rz) = compute_syndromes(&code, &r.estimate).unwrap();
                assert!(rx != sx || rz != sz, "non-converged estimate must leave a residual");
                saw_failure = true;
            }
        }
        assert!(saw_failure, "expected at least one starved-BP failure");
    }

    #[test]
    fn flip_cost_examples() {
        let uniform = [[0.25f64; 4]];
        assert!(flip_costs(&uniform)[0].abs() < 1e-12);
        let peaked = [[0.97, 0.01, 0.01, 0.01]];
        assert!((flip_costs(&peaked)[0] - 97f64.ln()).abs() < 1e-9);
        // Permutation equivariance over variables.
        let a = [[0.7, 0.1, 0.1, 0.1], [0.4, 0.3, 0.2, 0.1]];
        let b = [[0.4, 0.3, 0.2, 0.1], [0.7, 0.1, 0.1, 0.1]];
        let ca = flip_costs(&a);
        let cb = flip_costs(&b);
        assert_eq!(ca[0], cb[1]);
        assert_eq!(ca[1], cb[0]);
    }

    #[test]
    fn classification_examples() {
        let code = build_hgp(&basegen::b7());
        let classifier = Classifier::new(&code);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let e = sample_depolarizing(code.n(), 0.1, &mut rng);
        assert_eq!(classifier.classify(&code, &e, &e).unwrap(), DecodeStatus::Exact);
        // Adding one stabilizer row moves exact to degenerate, never to a
        // failure state.
        let mut est = e.clone();
        est.x_bits = est.x_bits.xor(&BitVec::new(code.n(), code.hx.row(3).to_vec())).unwrap();
        assert_eq!(classifier.classify(&code, &e, &est).unwrap(), DecodeStatus::Degenerate);
        let mut est2 = e.clone();
        est2.z_bits = est2.z_bits.xor(&BitVec::new(code.n(), code.hz.row(17).to_vec())).unwrap();
        assert_eq!(classifier.classify(&code, &e, &est2).unwrap(), DecodeStatus::Degenerate);
        // A wrong-syndrome estimate is a syndrome mismatch.
        let mut est3 = e.clone();
        est3.z_bits = est3.z_bits.xor(&BitVec::new(code.n(), vec![0])).unwrap();
        let s_true = compute_syndromes(&code, &e).unwrap();
        let s_est = compute_syndromes(&code, &est3).unwrap();
        if s_true != s_est {
            assert_eq!(
                classifier.classify(&code, &e, &est3).unwrap(),
                DecodeStatus::SyndromeMismatch
            );
        }
    }

    #[test]
    fn logical_failure_from_kernel_vector_outside_rowspace() {
        let code = build_hgp(&basegen::b7());
        let classifier = Classifier::new(&code);
        // A kernel vector of H_Z (zero syndrome on the x side) that is not a
        // row-space element of H_X: a logical X operator.
        let kernel = crate::gf2::kernel_basis(&code.hz);
        let rs = RowSpace::new(&code.hx);
        let logical = kernel
            .into_iter()
            .find(|v| !rs.contains(v).unwrap())
            .expect("k=18 code has logical operators");
        let e = PauliVec::identity(code.n());
        let est = PauliVec { n: code.n(), x_bits: logical, z_bits: BitVec::zero(code.n()) };
        assert_eq!(
            classifier.classify(&code, &e, &est).unwrap(),
            DecodeStatus::LogicalFailure
        );
    }

    #[test]
    fn osd_single_check_toy_flip() {
        // 5-variable toy: one unsatisfied check whose lowest-cost incident
        // variable clears it.
        let hx = BitMatrix::from_rows(5, vec![vec![0, 1, 2], vec![2, 3, 4]]);
        let hz = BitMatrix::from_rows(5, vec![]);
        let code = CssCode { hx, hz, origin: crate::hgp::Origin::External };
        let graph = CodeGraph::new(&code);
        let config = DecoderConfig::new(0.05);
        // Target syndrome: check 0 unsatisfied, check 1 satisfied.
        let s_x = BitVec::new(2, vec![0]);
        let s_z = BitVec::zero(0);
        let estimate = PauliVec::identity(5);
        // Costs make variable 1 the least reliable among check 0's support
        // and keep it out of check 1.
        let costs = vec![5.0, 0.1, 4.0, 6.0, 7.0];
        let repaired = osd_lite_repair(&graph, &s_x, &s_z, &estimate, &costs, &config);
        assert_eq!(repaired.z_bits.support(), &[1]);
        let (rx, _) = compute_syndromes(&code, &repaired).unwrap();
        assert_eq!(rx, s_x);
    }

    #[test]
    fn osd_weight_cap_rejects_unique_weight_31() {
        // Identity parity matrix: the unique solution to any syndrome is the
        // syndrome itself. Weight 31 exceeds the unique cap of 30.
        let n = 40usize;
        let hx = BitMatrix::identity(n);
        let hz = BitMatrix::from_rows(n, vec![]);
        let code = CssCode { hx, hz, origin: crate::hgp::Origin::External };
        let graph = CodeGraph::new(&code);
        let config = DecoderConfig::new(0.05);
        let support: Vec<u32> = (0..31u32).collect();
        let s_x = BitVec::new(n, support);
        let costs = vec![1.0; n];
        let repaired =
            osd_lite_repair(&graph, &s_x, &BitVec::zero(0), &PauliVec::identity(n), &costs, &config);
        assert!(repaired.z_bits.is_zero(), "weight-31 unique solution must not be applied");
        // Weight 30 is applied.
        let s_x30 = BitVec::new(n, (0..30u32).collect());
        let repaired30 =
            osd_lite_repair(&graph, &s_x30, &BitVec::zero(0), &PauliVec::identity(n), &costs, &config);
        assert_eq!(repaired30.z_bits.weight(), 30);
    }

    #[test]
    fn osd_dof_cap_rejects_dof_6() {
        // One check over 7 variables: restricted system has dof 6 at any
        // prefix that covers it; non-unique solutions above dof 5 are never
        // applied.
        let hx = BitMatrix::from_rows(7, vec![(0..7u32).collect()]);
        let hz = BitMatrix::from_rows(7, vec![]);
        let code = CssCode { hx, hz, origin: crate::hgp::Origin::External };
        let graph = CodeGraph::new(&code);
        let config = DecoderConfig::new(0.05);
        let s_x = BitVec::new(1, vec![0]);
        let costs = vec![1.0; 7];
        let repaired =
            osd_lite_repair(&graph, &s_x, &BitVec::zero(0), &PauliVec::identity(7), &costs, &config);
        assert!(
            repaired.z_bits.is_zero(),
            "dof-6 non-unique system must not be applied anywhere in the pipeline"
        );
    }

    #[test]
    fn osd_dof_5_applies_min_weight() {
        // One check over 6 variables: dof 5, minimum-weight coset element is
        // a single flip, within the fallback weight cap.
        let hx = BitMatrix::from_rows(6, vec![(0..6u32).collect()]);
        let hz = BitMatrix::from_rows(6, vec![]);
        let code = CssCode { hx, hz, origin: crate::hgp::Origin::External };
        let graph = CodeGraph::new(&code);
        let config = DecoderConfig::new(0.05);
        let s_x = BitVec::new(1, vec![0]);
        let costs = vec![3.0, 1.0, 4.0, 5.0, 6.0, 7.0];
        let repaired =
            osd_lite_repair(&graph, &s_x, &BitVec::zero(0), &PauliVec::identity(6), &costs, &config);
        assert_eq!(repaired.z_bits.weight(), 1);
    }

    #[test]
    fn weight_counts_y_once() {
        let e = PauliVec::new(8, vec![1, 3], vec![3, 5]);
        assert_eq!(e.weight(), 3); // X at 1, Y at 3, Z at 5
    }
}
