//! Partitions of `{0, …, n−1}` and the search for good pavings.
//!
//! Two objectives share one search engine. Both are "minimize the worst
//! block":
//!
//! * norm: block cost `‖P_A H P_A‖`, reported as `ε = max cost / ‖H‖`;
//! * certificate: block cost `−c_A d_A` with `c_A = λ_min(P_A P P_A)` and
//!   `d_A = λ_min(P_A P⁻¹ P_A)`, so minimizing the worst cost maximizes
//!   `min_A c_A d_A`.
//!
//! A search over `r` blocks admits pavings with fewer nonempty blocks.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, HermitianMatrix};
use crate::rng::{stream_rng, Rng};

/// A partition stored as a restricted-growth string: index 0 has label 0 and
/// every new label is one more than the largest label seen so far.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    labels: Vec<usize>,
    blocks: usize,
}

impl Partition {
    /// Canonicalizes an arbitrary labeling.
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut map: Vec<(usize, usize)> = Vec::new();
        let mut labels = Vec::with_capacity(raw.len());
        for &x in raw {
            let l = match map.iter().find(|(k, _)| *k == x) {
                Some(&(_, v)) => v,
                None => {
                    map.push((x, map.len()));
                    map.len() - 1
                }
            };
            labels.push(l);
        }
        Partition { labels, blocks: map.len() }
    }

    /// Validates a block list covering `0..n` disjointly with nonempty blocks.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut raw = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition(format!("block {b} is empty")));
            }
            for &i in block {
                if i >= n {
                    return Err(Error::IndexOutOfRange { index: i, n });
                }
                if raw[i] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("index {i} appears in two blocks")));
                }
                raw[i] = b;
            }
        }
        if let Some(i) = raw.iter().position(|&l| l == usize::MAX) {
            return Err(Error::InvalidPartition(format!("index {i} is not covered")));
        }
        Ok(Self::from_labels(&raw))
    }

    pub fn singletons(n: usize) -> Self {
        Partition { labels: (0..n).collect(), blocks: n }
    }

    pub fn whole(n: usize) -> Self {
        Partition { labels: vec![0; n], blocks: usize::from(n > 0) }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Blocks in label order, which is also order of smallest element.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.blocks];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn to_file(&self) -> PartitionFile {
        PartitionFile { n: self.n(), blocks: self.blocks() }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: PartitionFile = serde_json::from_str(s).map_err(|e| Error::Invalid(format!("partition file: {e}")))?;
        Self::from_blocks(f.n, &f.blocks)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks: Vec<String> = self
            .blocks()
            .iter()
            .map(|b| format!("{{{}}}", b.iter().map(usize::to_string).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "{}", blocks.join(" "))
    }
}

/// `{"n": int, "blocks": [[indices...], ...]}`, blocks sorted by smallest element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionFile {
    pub n: usize,
    pub blocks: Vec<Vec<usize>>,
}

impl Serialize for Partition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = PartitionFile::deserialize(d)?;
        Partition::from_blocks(f.n, &f.blocks).map_err(serde::de::Error::custom)
    }
}

/// Common refinement: nonempty pairwise intersections of blocks.
pub fn refine(a: &Partition, b: &Partition) -> Result<Partition> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), found: b.n() });
    }
    let raw: Vec<usize> = a.labels.iter().zip(&b.labels).map(|(&x, &y)| x * b.blocks + y).collect();
    Ok(Partition::from_labels(&raw))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    Norm,
    Certificate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    Greedy,
    Anneal,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Method::Exact),
            "greedy" => Ok(Method::Greedy),
            "anneal" => Ok(Method::Anneal),
            other => Err(Error::Invalid(format!("unknown method '{other}'"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Greedy => "greedy",
            Method::Anneal => "anneal",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PavingReport {
    pub partition: Partition,
    pub per_block_norms: Vec<f64>,
    /// `max(per_block_norms) / ‖H‖`, defined as 0 when `‖H‖ = 0`.
    pub epsilon: f64,
    pub norm: f64,
    pub objective: Objective,
    /// `None` for a direct evaluation of a given partition.
    pub method: Option<Method>,
    pub evaluations: u64,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositiveCertificate {
    pub partition: Partition,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub min_product: f64,
    /// `1 − min_product`.
    pub epsilon: f64,
    pub method: Option<Method>,
    pub evaluations: u64,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealParams {
    /// Initial temperature as a multiple of the objective scale.
    pub t0: f64,
    pub ratio: f64,
    /// Proposals per temperature, per index.
    pub proposals_per_index: usize,
    /// Final temperature as a multiple of the objective scale.
    pub floor: f64,
    pub chains: usize,
}

impl Default for AnnealParams {
    fn default() -> Self {
        AnnealParams { t0: 0.5, ratio: 0.95, proposals_per_index: 100, floor: 1e-4, chains: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchParams {
    /// Overrides the default exact-enumeration cap on `n`.
    pub exact_cap: Option<usize>,
    /// Local-search restarts.
    pub restarts: usize,
    pub anneal: AnnealParams,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams { exact_cap: None, restarts: 16, anneal: AnnealParams::default() }
    }
}

/// Largest `n` enumerated exactly for `r` blocks.
pub fn default_exact_cap(r: usize) -> usize {
    match r {
        0 | 1 => usize::MAX,
        2 => 16,
        3 => 12,
        _ => 10,
    }
}

fn check_dims(h: &HermitianMatrix, p: &Partition) -> Result<()> {
    if h.n() != p.n() {
        return Err(Error::DimensionMismatch { expected: h.n(), found: p.n() });
    }
    Ok(())
}

/// Per-block compression norms and the resulting `ε`.
pub fn paving_norm(h: &HermitianMatrix, p: &Partition) -> Result<PavingReport> {
    check_dims(h, p)?;
    let norm = linalg::spectral_norm(h)?;
    let mut scratch = Vec::new();
    let per_block_norms =
        p.blocks().iter().map(|b| linalg::principal_norm(h, b, &mut scratch)).collect::<Result<Vec<_>>>()?;
    let worst = per_block_norms.iter().copied().fold(0.0, f64::max);
    Ok(PavingReport {
        partition: p.clone(),
        per_block_norms,
        epsilon: if norm > 0.0 { worst / norm } else { 0.0 },
        norm,
        objective: Objective::Norm,
        method: None,
        evaluations: 1,
        seed: None,
    })
}

/// Tight constants `c_i = λ_min(P_A P P_A)`, `d_i = λ_min(P_A P⁻¹ P_A)`.
pub fn positive_certificate(p: &HermitianMatrix, part: &Partition) -> Result<PositiveCertificate> {
    check_dims(p, part)?;
    let inv = linalg::inverse_pd(p)?;
    certificate_with_inverse(p, &inv, part)
}

fn certificate_with_inverse(
    p: &HermitianMatrix,
    inv: &HermitianMatrix,
    part: &Partition,
) -> Result<PositiveCertificate> {
    let mut scratch = Vec::new();
    let mut c = Vec::with_capacity(part.num_blocks());
    let mut d = Vec::with_capacity(part.num_blocks());
    for b in part.blocks() {
        c.push(linalg::principal_extremes(p, &b, &mut scratch)?.0);
        d.push(linalg::principal_extremes(inv, &b, &mut scratch)?.0);
    }
    let min_product = c.iter().zip(&d).map(|(x, y)| x * y).fold(f64::INFINITY, f64::min);
    Ok(PositiveCertificate {
        partition: part.clone(),
        c,
        d,
        min_product,
        epsilon: 1.0 - min_product,
        method: None,
        evaluations: 1,
        seed: None,
    })
}

/// Block-cost oracle shared by all search methods.
enum Evaluator<'a> {
    Norm(&'a HermitianMatrix),
    Certificate { p: &'a HermitianMatrix, inv: HermitianMatrix },
}

impl Evaluator<'_> {
    fn n(&self) -> usize {
        match self {
            Evaluator::Norm(h) => h.n(),
            Evaluator::Certificate { p, .. } => p.n(),
        }
    }

    /// Temperature scale for annealing.
    fn scale(&self) -> Result<f64> {
        match self {
            Evaluator::Norm(h) => linalg::spectral_norm(h),
            Evaluator::Certificate { .. } => Ok(1.0),
        }
    }

    /// Cost of one block; `idx` must be sorted. Empty blocks never bind.
    fn block_cost(&self, idx: &[usize], scratch: &mut Vec<Complex64>) -> Result<f64> {
        if idx.is_empty() {
            return Ok(f64::NEG_INFINITY);
        }
        match self {
            Evaluator::Norm(h) => linalg::principal_norm(h, idx, scratch),
            Evaluator::Certificate { p, inv } => {
                let c = linalg::principal_extremes(p, idx, scratch)?.0;
                let d = linalg::principal_extremes(inv, idx, scratch)?.0;
                Ok(-(c * d))
            }
        }
    }

    /// Bounds for inserting index `i` into the block `members`: a lower
    /// bound on the new cost, and the pair `(|h_ii|, ‖h_{B,i}‖²)` feeding
    /// [`bordered_upper`]. Only available for the norm objective.
    fn insertion_bound(&self, members: &[usize], i: usize) -> Option<(f64, f64, f64)> {
        let Evaluator::Norm(h) = self else { return None };
        let diag = h.get(i, i).re.abs();
        let col: f64 = members.iter().map(|&j| h.get(j, i).norm_sqr()).sum();
        let lower = (diag * diag + col).sqrt();
        Some((lower * (1.0 - 1e-12), diag, col))
    }

    /// Cheap test that a block's cost does not exceed `theta`. For the norm
    /// objective this avoids an eigenvalue computation on rejection.
    fn cost_within(&self, idx: &[usize], theta: f64, scratch: &mut Vec<Complex64>) -> Result<bool> {
        match self {
            Evaluator::Norm(h) => Ok(linalg::principal_norm_below(h, idx, theta, scratch)),
            Evaluator::Certificate { .. } => Ok(true),
        }
    }

    fn labels_cost(
        &self,
        labels: &[usize],
        slots: usize,
        members: &mut Vec<Vec<usize>>,
        scratch: &mut Vec<Complex64>,
    ) -> Result<f64> {
        members.iter_mut().for_each(Vec::clear);
        members.resize(slots, Vec::new());
        for (i, &l) in labels.iter().enumerate() {
            members[l].push(i);
        }
        let mut worst = f64::NEG_INFINITY;
        for m in members.iter() {
            worst = worst.max(self.block_cost(m, scratch)?);
        }
        Ok(worst)
    }
}

/// Upper bound on the norm of a Hermitian matrix bordered by a column of
/// squared norm `col` and a diagonal entry of modulus `diag`, given a bound
/// `norm` on the original: the top eigenvalue of `[[norm, √col], [√col, diag]]`.
/// Carries a relative slack for rounding in the eigensolver.
fn bordered_upper(norm: f64, diag: f64, col: f64) -> f64 {
    let half = 0.5 * (norm - diag);
    let top = 0.5 * (norm + diag) + (half * half + col).sqrt();
    top * (1.0 + 1e-12) + 1e-15
}

/// Best-so-far candidate with the deterministic total order
/// (cost, canonical labels).
#[derive(Clone, Debug)]
struct Candidate {
    cost: f64,
    partition: Partition,
    evaluations: u64,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    match a.cost.total_cmp(&b.cost) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a.partition.labels < b.partition.labels,
    }
}

fn merge(cands: Vec<Candidate>) -> Option<Candidate> {
    let evaluations: u64 = cands.iter().map(|c| c.evaluations).sum();
    let mut best = cands.into_iter().reduce(|a, b| if better(&b, &a) { b } else { a })?;
    best.evaluations = evaluations;
    Some(best)
}

/// Enumerates restricted-growth completions of `prefix` with labels below
/// `r`, in lexicographic order.
fn for_each_rgs(n: usize, r: usize, prefix: &[usize], f: &mut dyn FnMut(&[usize]) -> Result<()>) -> Result<()> {
    fn rec(
        labels: &mut Vec<usize>,
        n: usize,
        r: usize,
        max: usize,
        f: &mut dyn FnMut(&[usize]) -> Result<()>,
    ) -> Result<()> {
        if labels.len() == n {
            return f(labels);
        }
        let top = (max + 1).min(r - 1);
        for l in 0..=top {
            labels.push(l);
            rec(labels, n, r, max.max(l), f)?;
            labels.pop();
        }
        Ok(())
    }
    let mut labels = prefix.to_vec();
    let max = prefix.iter().copied().max().unwrap_or(0);
    if labels.is_empty() {
        labels.push(0);
    }
    rec(&mut labels, n, r, max, f)
}

fn exact_search(ev: &Evaluator<'_>, r: usize, cap: Option<usize>) -> Result<Candidate> {
    let n = ev.n();
    let r = r.min(n).max(1);
    let cap = cap.unwrap_or_else(|| default_exact_cap(r));
    if n > cap {
        return Err(Error::TooLarge { n, r, cap });
    }
    // Fan out over prefixes; within each prefix the order is lexicographic,
    // and the merge order reproduces the first minimum overall.
    let depth = n.min(6);
    let mut prefixes = Vec::new();
    for_each_rgs(depth, r, &[], &mut |p| {
        prefixes.push(p.to_vec());
        Ok(())
    })?;
    let results = prefixes
        .par_iter()
        .map(|prefix| {
            let mut members = Vec::new();
            let mut scratch = Vec::new();
            let mut best: Option<(f64, Vec<usize>)> = None;
            let mut count = 0u64;
            for_each_rgs(n, r, prefix, &mut |labels| {
                count += 1;
                let cost = ev.labels_cost(labels, r, &mut members, &mut scratch)?;
                if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    best = Some((cost, labels.to_vec()));
                }
                Ok(())
            })?;
            let (cost, labels) = best.expect("every prefix has a completion");
            Ok(Candidate { cost, partition: Partition::from_labels(&labels), evaluations: count })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge(results).expect("at least one partition"))
}

/// Mutable search state over `slots` labels (some possibly empty).
struct State {
    labels: Vec<usize>,
    members: Vec<Vec<usize>>,
    costs: Vec<f64>,
}

impl State {
    fn new(ev: &Evaluator<'_>, labels: Vec<usize>, slots: usize, scratch: &mut Vec<Complex64>) -> Result<Self> {
        let mut members = vec![Vec::new(); slots];
        for (i, &l) in labels.iter().enumerate() {
            members[l].push(i);
        }
        let costs = members.iter().map(|m| ev.block_cost(m, scratch)).collect::<Result<Vec<_>>>()?;
        Ok(State { labels, members, costs })
    }

    fn total(&self) -> f64 {
        self.costs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn max_excluding(&self, a: usize, b: usize) -> f64 {
        self.costs.iter().enumerate().filter(|&(s, _)| s != a && s != b).fold(f64::NEG_INFINITY, |m, (_, &c)| m.max(c))
    }

    /// Member lists after moving `i` to slot `to`, written into `out_from`
    /// and `out_to` (both sorted).
    fn moved(&self, i: usize, to: usize, out_from: &mut Vec<usize>, out_to: &mut Vec<usize>) {
        let from = self.labels[i];
        out_from.clear();
        out_from.extend(self.members[from].iter().copied().filter(|&x| x != i));
        out_to.clear();
        let dst = &self.members[to];
        let pos = dst.partition_point(|&x| x < i);
        out_to.extend_from_slice(&dst[..pos]);
        out_to.push(i);
        out_to.extend_from_slice(&dst[pos..]);
    }

    fn apply(
        &mut self,
        i: usize,
        to: usize,
        from_members: Vec<usize>,
        to_members: Vec<usize>,
        from_cost: f64,
        to_cost: f64,
    ) {
        let from = self.labels[i];
        self.labels[i] = to;
        self.members[from] = from_members;
        self.members[to] = to_members;
        self.costs[from] = from_cost;
        self.costs[to] = to_cost;
    }
}

fn random_labels(n: usize, slots: usize, rng: &mut Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..slots)).collect()
}

/// Steepest descent over single-index relocations from one start.
fn local_descent(ev: &Evaluator<'_>, labels: Vec<usize>, slots: usize) -> Result<Candidate> {
    let n = ev.n();
    let mut scratch = Vec::new();
    let mut state = State::new(ev, labels, slots, &mut scratch)?;
    let mut evaluations = 1u64;
    let (mut from_buf, mut to_buf) = (Vec::new(), Vec::new());
    loop {
        let current = state.total();
        let mut best: Option<(f64, usize, usize, f64, f64)> = None;
        for i in 0..n {
            let from = state.labels[i];
            let mut tried_empty = false;
            for to in 0..slots {
                if to == from {
                    continue;
                }
                if state.members[to].is_empty() {
                    // all empty slots are equivalent
                    if tried_empty || state.members[from].len() == 1 {
                        continue;
                    }
                    tried_empty = true;
                }
                state.moved(i, to, &mut from_buf, &mut to_buf);
                let cf = ev.block_cost(&from_buf, &mut scratch)?;
                let ct = ev.block_cost(&to_buf, &mut scratch)?;
                evaluations += 1;
                let total = state.max_excluding(from, to).max(cf).max(ct);
                if total < current && best.as_ref().is_none_or(|b| total < b.0) {
                    best = Some((total, i, to, cf, ct));
                }
            }
        }
        match best {
            Some((_, i, to, cf, ct)) => {
                state.moved(i, to, &mut from_buf, &mut to_buf);
                state.apply(i, to, from_buf.clone(), to_buf.clone(), cf, ct);
            }
            None => break,
        }
    }
    Ok(Candidate { cost: state.total(), partition: Partition::from_labels(&state.labels), evaluations })
}

fn local_search(ev: &Evaluator<'_>, r: usize, seed: u64, restarts: usize) -> Result<Candidate> {
    let n = ev.n();
    let slots = r.min(n).max(1);
    let results = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k);
            local_descent(ev, random_labels(n, slots, &mut rng), slots)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge(results).expect("at least one restart"))
}

/// One Metropolis chain with geometric cooling.
///
/// Block costs are evaluated lazily: after a move the source block keeps its
/// old cost as an upper bound (compressions never grow when an index is
/// removed) and, for the norm objective, the target block gets a bordered
/// upper bound. Exact costs are computed only while a bound could change the
/// decision or sits at the top, so every accept/reject decision and every
/// recorded cost equals what full re-evaluation would give.
fn anneal_chain(
    ev: &Evaluator<'_>,
    slots: usize,
    rng: &mut Rng,
    params: &AnnealParams,
    scale: f64,
) -> Result<Candidate> {
    let n = ev.n();
    let mut scratch = Vec::new();
    let mut state = State::new(ev, random_labels(n, slots, rng), slots, &mut scratch)?;
    let mut exact = vec![true; slots];
    let mut best = Candidate { cost: state.total(), partition: Partition::from_labels(&state.labels), evaluations: 1 };
    let mut evaluations = 1u64;
    if slots < 2 || scale <= 0.0 {
        best.evaluations = evaluations;
        return Ok(best);
    }
    let floor = params.floor * scale;
    let mut temp = params.t0 * scale;
    let per_temp = params.proposals_per_index * n;
    let (mut from_buf, mut to_buf) = (Vec::new(), Vec::new());
    let mut current = state.total();
    let mut trial_costs = vec![0.0; slots];
    let mut trial_exact = vec![true; slots];
    while temp >= floor {
        for _ in 0..per_temp {
            let i = rng.random_range(0..n);
            let from = state.labels[i];
            let mut to = rng.random_range(0..slots - 1);
            if to >= from {
                to += 1;
            }
            let u: f64 = rng.random();
            // accept iff the new cost exceeds the current one by at most −T ln u
            let threshold = current - temp * u.ln();
            evaluations += 1;

            let bound = ev.insertion_bound(&state.members[to], i);
            if let Some((lower, _, _)) = bound {
                let lower = if exact[to] { lower.max(state.costs[to]) } else { lower };
                if lower > threshold {
                    continue;
                }
            }
            state.moved(i, to, &mut from_buf, &mut to_buf);
            trial_costs.copy_from_slice(&state.costs);
            trial_exact.copy_from_slice(&exact);
            if from_buf.is_empty() {
                trial_costs[from] = f64::NEG_INFINITY;
                trial_exact[from] = true;
            } else {
                trial_exact[from] = false;
            }
            match bound {
                Some((_, diag, col)) if state.costs[to] > f64::NEG_INFINITY => {
                    trial_costs[to] = bordered_upper(state.costs[to], diag, col);
                    trial_exact[to] = false;
                }
                _ => {
                    trial_costs[to] = ev.block_cost(&to_buf, &mut scratch)?;
                    trial_exact[to] = true;
                }
            }
            // resolve the top until it is exact, rejecting as soon as an
            // exact cost is over the threshold
            let accepted = loop {
                let (top, &top_cost) = trial_costs
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                    .expect("slots >= 2");
                if trial_exact[top] {
                    break top_cost <= threshold;
                }
                let members: &[usize] = if top == from {
                    &from_buf
                } else if top == to {
                    &to_buf
                } else {
                    &state.members[top]
                };
                if !ev.cost_within(members, threshold, &mut scratch)? {
                    break false;
                }
                trial_costs[top] = ev.block_cost(members, &mut scratch)?;
                trial_exact[top] = true;
                if trial_costs[top] > threshold {
                    break false;
                }
            };
            if !accepted {
                continue;
            }
            let (cf, ct) = (trial_costs[from], trial_costs[to]);
            state.apply(i, to, std::mem::take(&mut from_buf), std::mem::take(&mut to_buf), cf, ct);
            state.costs.copy_from_slice(&trial_costs);
            exact.copy_from_slice(&trial_exact);
            current = state.total();
            if current < best.cost {
                best.cost = current;
                best.partition = Partition::from_labels(&state.labels);
            } else if current == best.cost {
                let p = Partition::from_labels(&state.labels);
                if p.labels < best.partition.labels {
                    best.partition = p;
                }
            }
        }
        temp *= params.ratio;
    }
    best.evaluations = evaluations;
    Ok(best)
}

fn anneal_search(ev: &Evaluator<'_>, r: usize, seed: u64, params: &AnnealParams) -> Result<Candidate> {
    let n = ev.n();
    let slots = r.min(n).max(1);
    let scale = ev.scale()?;
    let results = (0..params.chains.max(1) as u64)
        .into_par_iter()
        .map(|k| anneal_chain(ev, slots, &mut stream_rng(seed, k), params, scale))
        .collect::<Result<Vec<_>>>()?;
    Ok(merge(results).expect("at least one chain"))
}

fn run(ev: &Evaluator<'_>, r: usize, method: Method, seed: u64, params: &SearchParams) -> Result<Candidate> {
    if r == 0 {
        return Err(Error::Invalid("number of blocks must be at least 1".into()));
    }
    match method {
        Method::Exact => exact_search(ev, r, params.exact_cap),
        Method::Greedy => local_search(ev, r, seed, params.restarts),
        Method::Anneal => anneal_search(ev, r, seed, &params.anneal),
    }
}

/// Minimum `ε` over pavings with at most `r` blocks, by exhaustive
/// enumeration in restricted-growth order (first minimum wins).
pub fn paving_constant_exact(h: &HermitianMatrix, r: usize) -> Result<PavingReport> {
    paving_search(h, r, Method::Exact, 0, &SearchParams::default())
}

pub fn paving_search_local(h: &HermitianMatrix, r: usize, seed: u64, params: &SearchParams) -> Result<PavingReport> {
    paving_search(h, r, Method::Greedy, seed, params)
}

pub fn paving_search_anneal(h: &HermitianMatrix, r: usize, seed: u64, params: &SearchParams) -> Result<PavingReport> {
    paving_search(h, r, Method::Anneal, seed, params)
}

/// Norm-objective search with the chosen method.
pub fn paving_search(
    h: &HermitianMatrix,
    r: usize,
    method: Method,
    seed: u64,
    params: &SearchParams,
) -> Result<PavingReport> {
    let best = run(&Evaluator::Norm(h), r, method, seed, params)?;
    let mut report = paving_norm(h, &best.partition)?;
    report.method = Some(method);
    report.evaluations = best.evaluations;
    report.seed = (method != Method::Exact).then_some(seed);
    Ok(report)
}

/// Maximizes `min_i c_i d_i` over pavings with at most `r` blocks.
pub fn certificate_search(
    p: &HermitianMatrix,
    r: usize,
    method: Method,
    seed: u64,
    params: &SearchParams,
) -> Result<PositiveCertificate> {
    let inv = linalg::inverse_pd(p)?;
    let ev = Evaluator::Certificate { p, inv };
    let best = run(&ev, r, method, seed, params)?;
    let Evaluator::Certificate { inv, .. } = &ev else { unreachable!() };
    let mut cert = certificate_with_inverse(p, inv, &best.partition)?;
    cert.method = Some(method);
    cert.evaluations = best.evaluations;
    cert.seed = (method != Method::Exact).then_some(seed);
    Ok(cert)
}
