//! Closed-form stopping-time distributions for two vehicles.
//!
//! Feedback scheme: the state after round `t` is `S_t`, the number of packets
//! both vehicles hold. Each round both vehicles independently receive a
//! uniform `m`-subset of the packets they are missing, then merge. The number
//! of packets the two subsets share is hypergeometric, which gives a forward
//! recursion on `P(S_t = s)` and, from the last non-absorbed states, the pmf of
//! the stopping time `T`.
//!
//! Network-coding scheme: after `t` rounds the pooled coefficient matrix has
//! `2mt` uniform rows, and the file is recoverable exactly when its rank is
//! `M`. The full-rank probability of a uniform random matrix yields the exact
//! pmf of `T_NC`; per-round and mean upper bounds are also provided.
//!
//! [`exact_markov_oracle`] recomputes the feedback pmf by enumerating subsets
//! directly and shares no formula with the closed forms.
//!
//! All probabilities use the field *size* `Q = 2^q`.

use thiserror::Error;

/// Platoon size. Only the two-vehicle case is modeled.
pub const VEHICLES: usize = 2;

/// Exponent used when a caller only needs the feedback scheme.
pub const DEFAULT_FIELD_EXPONENT: u8 = 8;

/// Largest `C(M, m)` [`exact_markov_oracle`] will enumerate.
pub const ORACLE_SUBSET_LIMIT: f64 = 1e4;

/// The exact NC pmf is truncated once `P(T_NC > t)` drops below this.
pub const NC_TAIL_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("M must be ≥ 1")]
    NoPackets,
    #[error("m must be ≥ 1")]
    NoPacketsPerRound,
    #[error("m = {per_round} exceeds M = {total}")]
    PerRoundExceedsTotal { per_round: usize, total: usize },
    #[error("q must be in 1..=16, got {0}")]
    FieldExponent(u8),
    #[error("{missing} missing packets is fewer than m = {per_round}; use terminal-round handling")]
    TerminalRound { missing: usize, per_round: usize },
    #[error("state s = {s} is not below M = {total}")]
    StateOutOfRange { s: usize, total: usize },
    #[error("oracle would enumerate C({total}, {per_round}) = {subsets:.0} subsets (limit {limit:.0})")]
    OracleTooLarge {
        total: usize,
        per_round: usize,
        subsets: f64,
        limit: f64,
    },
}

/// File size `M`, packets per vehicle per round `m`, and field exponent `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProblemSpec {
    total_packets: usize,
    per_round: usize,
    field_exponent: u8,
}

impl ProblemSpec {
    pub fn new(total_packets: usize, per_round: usize, field_exponent: u8) -> Result<Self, AnalyticError> {
        if total_packets == 0 {
            return Err(AnalyticError::NoPackets);
        }
        if per_round == 0 {
            return Err(AnalyticError::NoPacketsPerRound);
        }
        if per_round > total_packets {
            return Err(AnalyticError::PerRoundExceedsTotal {
                per_round,
                total: total_packets,
            });
        }
        if !(1..=crate::gf2q::MAX_EXPONENT).contains(&field_exponent) {
            return Err(AnalyticError::FieldExponent(field_exponent));
        }
        Ok(Self {
            total_packets,
            per_round,
            field_exponent,
        })
    }

    /// Spec for feedback-only use; the field exponent is irrelevant there.
    pub fn feedback(total_packets: usize, per_round: usize) -> Result<Self, AnalyticError> {
        Self::new(total_packets, per_round, DEFAULT_FIELD_EXPONENT)
    }

    pub fn total_packets(&self) -> usize {
        self.total_packets
    }

    pub fn per_round(&self) -> usize {
        self.per_round
    }

    pub fn field_exponent(&self) -> u8 {
        self.field_exponent
    }

    pub fn field_size(&self) -> f64 {
        (self.field_exponent as f64).exp2()
    }

    /// `ceil(M / 2m)`: no scheme can finish sooner.
    pub fn min_rounds(&self) -> usize {
        self.total_packets.div_ceil(VEHICLES * self.per_round)
    }

    /// `ceil(M / m)`: the feedback scheme always finishes by then.
    pub fn max_feedback_rounds(&self) -> usize {
        self.total_packets.div_ceil(self.per_round)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmfKind {
    /// A probability distribution.
    Exact,
    /// Per-round upper bounds; need not sum to one.
    Bound,
}

/// `probs[k] = P(T = t_min + k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundPmf {
    t_min: usize,
    probs: Vec<f64>,
    kind: PmfKind,
}

impl RoundPmf {
    pub fn new(t_min: usize, probs: Vec<f64>, kind: PmfKind) -> Self {
        Self { t_min, probs, kind }
    }

    pub fn t_min(&self) -> usize {
        self.t_min
    }

    /// Last round covered (inclusive). Equals `t_min - 1` when empty.
    pub fn t_max(&self) -> usize {
        self.t_min + self.probs.len() - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn kind(&self) -> PmfKind {
        self.kind
    }

    pub fn is_bound(&self) -> bool {
        self.kind == PmfKind::Bound
    }

    /// `P(T = t)`, zero outside the stored range.
    pub fn prob(&self, t: usize) -> f64 {
        t.checked_sub(self.t_min)
            .and_then(|k| self.probs.get(k))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs.iter().enumerate().map(move |(k, &p)| (self.t_min + k, p))
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `Σ t·P(T = t)` in rounds.
    pub fn mean(&self) -> f64 {
        self.iter().map(|(t, p)| t as f64 * p).sum()
    }

    /// Smallest and largest `t` with nonzero mass.
    pub fn support(&self) -> Option<(usize, usize)> {
        let lo = self.iter().find(|&(_, p)| p > 0.0)?.0;
        let hi = self.iter().filter(|&(_, p)| p > 0.0).last()?.0;
        Some((lo, hi))
    }

    fn joint_range(&self, other: &RoundPmf) -> std::ops::RangeInclusive<usize> {
        let lo = self.t_min.min(other.t_min);
        let hi = (self.t_min + self.probs.len()).max(other.t_min + other.probs.len());
        lo..=hi
    }

    pub fn max_abs_diff(&self, other: &RoundPmf) -> f64 {
        self.joint_range(other)
            .map(|t| (self.prob(t) - other.prob(t)).abs())
            .fold(0.0, f64::max)
    }

    /// Total variation distance, `½ Σ |p − q|`.
    pub fn tvd(&self, other: &RoundPmf) -> f64 {
        0.5 * self
            .joint_range(other)
            .map(|t| (self.prob(t) - other.prob(t)).abs())
            .sum::<f64>()
    }
}

/// Distribution of the non-absorbed state after a round: `probs[s] = P(S_t = s)`
/// for `s < M`. Mass already absorbed at `S = M` is excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDist {
    round: usize,
    probs: Vec<f64>,
}

impl StateDist {
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn prob(&self, s: usize) -> f64 {
        self.probs.get(s).copied().unwrap_or(0.0)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(s, _)| s)
    }
}

/// `C(n, k)` as a float, zero when `k < 0` or `k > n`.
pub fn binomial(n: i64, k: i64) -> f64 {
    if k < 0 || n < 0 || k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Distribution of the overlap `X` between the two vehicles' `m`-subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonPacketPmf {
    x_min: usize,
    probs: Vec<f64>,
}

impl CommonPacketPmf {
    pub fn x_min(&self) -> usize {
        self.x_min
    }

    pub fn x_max(&self) -> usize {
        self.x_min + self.probs.len() - 1
    }

    pub fn prob(&self, x: usize) -> f64 {
        x.checked_sub(self.x_min)
            .and_then(|k| self.probs.get(k))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs.iter().enumerate().map(move |(k, &p)| (self.x_min + k, p))
    }
}

/// `P(X = x | S = s) = C(m, x) C(M−s−m, m−x) / C(M−s, m)`.
pub fn common_packet_pmf(s: usize, spec: &ProblemSpec) -> Result<CommonPacketPmf, AnalyticError> {
    let (total, m) = (spec.total_packets, spec.per_round);
    if s >= total {
        return Err(AnalyticError::StateOutOfRange { s, total });
    }
    let n = total - s;
    if n < m {
        return Err(AnalyticError::TerminalRound {
            missing: n,
            per_round: m,
        });
    }
    let x_min = (2 * m).saturating_sub(n);
    let denom = binomial(n as i64, m as i64);
    let probs = (x_min..=m)
        .map(|x| {
            let (x, m, n) = (x as i64, m as i64, n as i64);
            binomial(m, x) * binomial(n - m, m - x) / denom
        })
        .collect();
    Ok(CommonPacketPmf { x_min, probs })
}

/// Probability of moving from `s − i` to `s` in one round (`s < M`), i.e. the
/// round's union has exactly `i` packets.
fn union_transition(total: usize, m: usize, s: usize, i: usize) -> f64 {
    let (total, m, s, i) = (total as i64, m as i64, s as i64, i as i64);
    binomial(m, 2 * m - i) * binomial(total - s + i - m, i - m) / binomial(total - s + i, m)
}

/// Probability of finishing from `S = M − i`.
///
/// With `i ≤ m` missing packets, both vehicles receive all of them. The
/// general expression `C(m, 2m−i) / C(i, m)` is `0/0` there and is taken as 1.
fn completion_probability(m: usize, i: usize) -> f64 {
    if i <= m {
        1.0
    } else {
        binomial(m as i64, (2 * m - i) as i64) / binomial(i as i64, m as i64)
    }
}

/// `P(S_1 = s)` for `s < M`.
fn initial_state(spec: &ProblemSpec) -> Vec<f64> {
    let (total, m) = (spec.total_packets, spec.per_round);
    let mut probs = vec![0.0; total];
    if m == 1 {
        let mf = total as f64;
        if 1 < total {
            probs[1] = 1.0 / mf;
        }
        if 2 < total {
            probs[2] = (mf - 1.0) / mf;
        }
        return probs;
    }
    let denom = binomial(total as i64, m as i64);
    for i in m..=(2 * m).min(total.saturating_sub(1)) {
        let (mi, ii, ti) = (m as i64, i as i64, total as i64);
        probs[i] = binomial(mi, 2 * mi - ii) * binomial(ti - mi, ii - mi) / denom;
    }
    probs
}

fn step_state(spec: &ProblemSpec, prev: &[f64]) -> Vec<f64> {
    let (total, m) = (spec.total_packets, spec.per_round);
    let mut next = vec![0.0; total];
    if m == 1 {
        for (s, out) in next.iter_mut().enumerate() {
            let gap = (total - s) as f64;
            if s >= 1 {
                *out += prev[s - 1] / (gap + 1.0);
            }
            if s >= 2 {
                *out += (gap + 1.0) / (gap + 2.0) * prev[s - 2];
            }
        }
        return next;
    }
    for (s, out) in next.iter_mut().enumerate() {
        for i in m..=(2 * m).min(s) {
            let p = prev[s - i];
            if p != 0.0 {
                *out += union_transition(total, m, s, i) * p;
            }
        }
    }
    next
}

/// `P(S_t = s)` for `t = 1..=t_max`, excluding the absorbed state `s = M`.
///
/// `m = 1` uses the two-term recursion; general `m` sums over union sizes
/// `i = m..=2m` with the hypergeometric transition weights.
pub fn feedback_state_recursion(spec: &ProblemSpec, t_max: usize) -> Vec<StateDist> {
    let mut out = Vec::with_capacity(t_max);
    if t_max == 0 {
        return out;
    }
    let mut probs = initial_state(spec);
    out.push(StateDist {
        round: 1,
        probs: probs.clone(),
    });
    for round in 2..=t_max {
        probs = step_state(spec, &probs);
        out.push(StateDist {
            round,
            probs: probs.clone(),
        });
    }
    out
}

/// Exact pmf of the feedback-scheme stopping time `T`.
///
/// `P(T = t) = Σ_{i=1}^{2m} P(finish | S = M − i) · P(S_{t−1} = M − i)`, with
/// `S_0 = 0` surely.
pub fn feedback_stopping_pmf(spec: &ProblemSpec) -> RoundPmf {
    let (total, m) = (spec.total_packets, spec.per_round);
    let (t_min, t_max) = (spec.min_rounds(), spec.max_feedback_rounds());

    let mut start = vec![0.0; total];
    start[0] = 1.0;
    let mut states = vec![StateDist {
        round: 0,
        probs: start,
    }];
    states.extend(feedback_state_recursion(spec, t_max - 1));

    let stop = |prev: &StateDist| -> f64 {
        if m == 1 {
            return prev.prob_from_top(total, 1) + 0.5 * prev.prob_from_top(total, 2);
        }
        (1..=2 * m)
            .map(|i| completion_probability(m, i) * prev.prob_from_top(total, i))
            .sum()
    };
    let probs = (t_min..=t_max).map(|t| stop(&states[t - 1])).collect();
    RoundPmf::new(t_min, probs, PmfKind::Exact)
}

impl StateDist {
    /// `P(S = M − i)`, zero if `i > M`.
    fn prob_from_top(&self, total: usize, i: usize) -> f64 {
        total.checked_sub(i).map_or(0.0, |s| self.prob(s))
    }
}

/// Union-size distribution for one round with `missing` packets outstanding,
/// by enumeration.
///
/// Each vehicle gets `k = min(m, missing)` distinct packets. By exchangeability
/// the first vehicle's subset is fixed to `{0, …, k−1}`; every `k`-subset of the
/// second vehicle is listed and the union counted. Index `u` holds `P(union = u)`.
pub fn enumerate_union_sizes(missing: usize, m: usize) -> Vec<f64> {
    let k = m.min(missing);
    let mut counts = vec![0u64; missing + 1];
    let mut total = 0u64;
    for_each_combination(missing, k, |subset| {
        let overlap = subset.iter().filter(|&&e| e < k).count();
        counts[2 * k - overlap] += 1;
        total += 1;
    });
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(pos) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return;
        };
        idx[pos] += 1;
        for j in pos + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Feedback-scheme pmf from an absorbing Markov chain whose one-round kernel
/// is obtained by enumerating subsets (see [`enumerate_union_sizes`]).
pub fn exact_markov_oracle(spec: &ProblemSpec) -> Result<RoundPmf, AnalyticError> {
    Ok(oracle_chain(spec)?.pmf)
}

struct OracleChain {
    pmf: RoundPmf,
    /// Per round `t ≥ 1`: mass entering a round with fewer than `2m` packets
    /// missing, where the union is capped by what remains.
    capped_mass: Vec<f64>,
}

fn oracle_chain(spec: &ProblemSpec) -> Result<OracleChain, AnalyticError> {
    let (total, m) = (spec.total_packets, spec.per_round);
    let subsets = binomial(total as i64, m as i64);
    if subsets > ORACLE_SUBSET_LIMIT {
        return Err(AnalyticError::OracleTooLarge {
            total,
            per_round: m,
            subsets,
            limit: ORACLE_SUBSET_LIMIT,
        });
    }
    let kernels: Vec<Vec<f64>> = (0..=total)
        .map(|n| if n == 0 { vec![1.0] } else { enumerate_union_sizes(n, m) })
        .collect();

    let mut dist = vec![0.0; total];
    dist[0] = 1.0;
    let mut absorbed_by_round = Vec::new();
    let mut capped_mass = Vec::new();
    while dist.iter().any(|&p| p > 0.0) {
        let mut next = vec![0.0; total];
        let mut absorbed = 0.0;
        let mut capped = 0.0;
        for (s, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let missing = total - s;
            if missing < 2 * m {
                capped += p;
            }
            for (u, &w) in kernels[missing].iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                if s + u == total {
                    absorbed += p * w;
                } else {
                    next[s + u] += p * w;
                }
            }
        }
        absorbed_by_round.push(absorbed);
        capped_mass.push(capped);
        dist = next;
    }
    let t_min = spec.min_rounds();
    debug_assert!(absorbed_by_round[..t_min - 1].iter().all(|&p| p == 0.0));
    let pmf = RoundPmf::new(t_min, absorbed_by_round[t_min - 1..].to_vec(), PmfKind::Exact);
    Ok(OracleChain { pmf, capped_mass })
}

/// Closed-form feedback pmf checked round by round against the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub spec: ProblemSpec,
    pub closed_form: RoundPmf,
    pub oracle: RoundPmf,
    /// `(t, |closed − oracle|, capped)` where `capped` marks rounds entered
    /// with positive probability from a state with fewer than `2m` missing.
    pub rounds: Vec<(usize, f64, bool)>,
}

impl OracleComparison {
    pub fn max_deviation(&self) -> f64 {
        self.rounds.iter().map(|r| r.1).fold(0.0, f64::max)
    }

    /// Largest deviation over rounds without a capped terminal step.
    pub fn max_uncapped_deviation(&self) -> f64 {
        self.rounds
            .iter()
            .filter(|r| !r.2)
            .map(|r| r.1)
            .fold(0.0, f64::max)
    }

    /// Rounds with a capped terminal step whose deviation exceeds `tol`.
    pub fn boundary_discrepancies(&self, tol: f64) -> Vec<(usize, f64)> {
        self.rounds
            .iter()
            .filter(|r| r.2 && r.1 > tol)
            .map(|r| (r.0, r.1))
            .collect()
    }
}

pub fn compare_feedback_with_oracle(spec: &ProblemSpec) -> Result<OracleComparison, AnalyticError> {
    let chain = oracle_chain(spec)?;
    let closed_form = feedback_stopping_pmf(spec);
    let oracle = chain.pmf;
    let lo = closed_form.t_min().min(oracle.t_min());
    let hi = closed_form.t_max().max(oracle.t_max());
    let rounds = (lo..=hi)
        .map(|t| {
            let capped = chain.capped_mass.get(t - 1).is_some_and(|&c| c > 0.0);
            (t, (closed_form.prob(t) - oracle.prob(t)).abs(), capped)
        })
        .collect();
    Ok(OracleComparison {
        spec: *spec,
        closed_form,
        oracle,
        rounds,
    })
}

/// Probability that a uniform random `rows × cols` matrix over GF(2^q) has
/// rank `cols`: `∏_{i=1}^{cols} (1 − Q^{−(rows − cols + i)})`, zero if
/// `rows < cols`.
pub fn rank_full_probability(rows: usize, cols: usize, field_exponent: u8) -> f64 {
    if rows < cols {
        return 0.0;
    }
    let q = field_exponent as f64;
    (1..=cols)
        .map(|i| 1.0 - (-((rows - cols + i) as f64) * q).exp2())
        .product()
}

/// `P(T_NC ≤ t)`: the pooled `2mt × M` matrix has full column rank.
fn nc_cdf(spec: &ProblemSpec, t: usize) -> f64 {
    let rows = VEHICLES * spec.per_round * t;
    rank_full_probability(rows, spec.total_packets, spec.field_exponent)
}

/// Last round kept by [`nc_exact_pmf`].
fn nc_horizon(spec: &ProblemSpec) -> usize {
    let mut t = spec.min_rounds();
    while 1.0 - nc_cdf(spec, t) >= NC_TAIL_CUTOFF {
        t += 1;
    }
    t
}

/// Exact pmf of `T_NC`, `P(T_NC = t) = F(t) − F(t − 1)` with `F` the full-rank
/// probability of the pooled matrix. Truncated once the tail is below
/// [`NC_TAIL_CUTOFF`].
pub fn nc_exact_pmf(spec: &ProblemSpec) -> RoundPmf {
    let t_min = spec.min_rounds();
    let mut prev = nc_cdf(spec, t_min - 1);
    let probs = (t_min..=nc_horizon(spec))
        .map(|t| {
            let cur = nc_cdf(spec, t);
            let p = cur - prev;
            prev = cur;
            p
        })
        .collect();
    RoundPmf::new(t_min, probs, PmfKind::Exact)
}

/// Per-round bound `(1 − 1/Q)(1 − P(rank A_{2mt−1} = M))`, over the same rounds
/// as [`nc_exact_pmf`].
///
/// Note the bound only covers the event that the last row of round `t`
/// completes the rank. It does not dominate `P(T_NC = t)` at rounds where
/// completion before that last row is likely (see the tests).
pub fn nc_stopping_pmf_bound(spec: &ProblemSpec) -> RoundPmf {
    let big_q = spec.field_size();
    let (m, total) = (spec.per_round, spec.total_packets);
    let t_min = spec.min_rounds();
    let probs = (t_min..=nc_horizon(spec))
        .map(|t| {
            let rows = VEHICLES * m * t - 1;
            let full = rank_full_probability(rows, total, spec.field_exponent);
            ((1.0 - 1.0 / big_q) * (1.0 - full)).clamp(0.0, 1.0)
        })
        .collect();
    RoundPmf::new(t_min, probs, PmfKind::Bound)
}

/// Loose per-round bound `(1 − 1/Q) Q^{−(2mt − M)}`.
pub fn nc_stopping_pmf_loose_bound(spec: &ProblemSpec) -> RoundPmf {
    let big_q = spec.field_size();
    let (m, total) = (spec.per_round, spec.total_packets);
    let t_min = spec.min_rounds();
    let q = spec.field_exponent as f64;
    let probs = (t_min..=nc_horizon(spec))
        .map(|t| {
            let excess = (VEHICLES * m * t) as f64 - total as f64;
            ((1.0 - 1.0 / big_q) * (-excess * q).exp2()).clamp(0.0, 1.0)
        })
        .collect();
    RoundPmf::new(t_min, probs, PmfKind::Bound)
}

/// Upper bound on `E[T_NC]` for a large field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedBound {
    /// `M/(2m) + 1/(Q − 1)`.
    pub value: f64,
    /// Set when `Q = 2`, where the large-field approximation behind the bound
    /// is not meaningful.
    pub small_field: bool,
}

pub fn nc_expected_bound(spec: &ProblemSpec) -> ExpectedBound {
    let big_q = spec.field_size();
    ExpectedBound {
        value: spec.total_packets as f64 / (VEHICLES * spec.per_round) as f64 + 1.0 / (big_q - 1.0),
        small_field: big_q <= 2.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn spec_validation() {
        assert_eq!(ProblemSpec::feedback(0, 1), Err(AnalyticError::NoPackets));
        assert_eq!(ProblemSpec::feedback(5, 0), Err(AnalyticError::NoPacketsPerRound));
        assert!(matches!(
            ProblemSpec::feedback(3, 4),
            Err(AnalyticError::PerRoundExceedsTotal { .. })
        ));
        assert_eq!(ProblemSpec::new(5, 1, 0), Err(AnalyticError::FieldExponent(0)));
        let s = ProblemSpec::new(10, 2, 8).unwrap();
        assert_eq!((s.min_rounds(), s.max_feedback_rounds()), (3, 5));
    }

    #[test]
    fn binomial_zero_convention() {
        assert_eq!(binomial(5, -1), 0.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(binomial(0, 0), 1.0);
        assert_eq!(binomial(12, 6), 924.0);
    }

    #[test]
    fn common_packets_one_short() {
        for total in 1..20 {
            let spec = ProblemSpec::feedback(total, 1).unwrap();
            let pmf = common_packet_pmf(total - 1, &spec).unwrap();
            assert_eq!(pmf.prob(1), 1.0);
            assert_eq!(pmf.prob(0), 0.0);
        }
    }

    #[test]
    fn common_packets_m1_two_missing() {
        let spec = ProblemSpec::feedback(10, 1).unwrap();
        let pmf = common_packet_pmf(8, &spec).unwrap();
        assert!(close(pmf.prob(1), 0.5, 1e-15));
        assert!(close(pmf.prob(0), 0.5, 1e-15));
    }

    #[test]
    fn common_packets_m2_m4_by_enumeration() {
        // all 36 ordered pairs of 2-subsets of a 4-set
        let subsets: Vec<u8> = (0u8..16).filter(|b| b.count_ones() == 2).collect();
        let mut counts = [0u32; 3];
        for &a in &subsets {
            for &b in &subsets {
                counts[(a & b).count_ones() as usize] += 1;
            }
        }
        assert_eq!(counts, [6, 24, 6]);
        let spec = ProblemSpec::feedback(4, 2).unwrap();
        let pmf = common_packet_pmf(0, &spec).unwrap();
        for x in 0..=2 {
            assert!(close(pmf.prob(x), counts[x] as f64 / 36.0, 1e-15));
        }
        assert_eq!((pmf.x_min(), pmf.x_max()), (0, 2));
    }

    #[test]
    fn common_packets_errors_and_support() {
        let spec = ProblemSpec::feedback(10, 3).unwrap();
        assert!(matches!(
            common_packet_pmf(8, &spec),
            Err(AnalyticError::TerminalRound { missing: 2, per_round: 3 })
        ));
        assert!(matches!(
            common_packet_pmf(10, &spec),
            Err(AnalyticError::StateOutOfRange { .. })
        ));
        // 4 missing, two 3-subsets overlap in at least 2
        let pmf = common_packet_pmf(6, &spec).unwrap();
        assert_eq!(pmf.x_min(), 2);
        assert!(close(pmf.iter().map(|(_, p)| p).sum(), 1.0, 1e-15));
    }

    #[test]
    fn state_initialization() {
        for total in 3..30 {
            let spec = ProblemSpec::feedback(total, 1).unwrap();
            let s1 = &feedback_state_recursion(&spec, 1)[0];
            let mf = total as f64;
            assert!(close(s1.prob(1), 1.0 / mf, 1e-15));
            assert!(close(s1.prob(2), (mf - 1.0) / mf, 1e-15));
        }
        let spec = ProblemSpec::feedback(2, 1).unwrap();
        let s1 = &feedback_state_recursion(&spec, 1)[0];
        assert_eq!(s1.probs(), &[0.0, 0.5]);
    }

    #[test]
    fn state_support_between_t_and_2t_for_m1() {
        let spec = ProblemSpec::feedback(30, 1).unwrap();
        for dist in feedback_state_recursion(&spec, 30) {
            let t = dist.round();
            assert!(dist.support().all(|s| t <= s && s <= 2 * t));
            assert!(dist.total_mass() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn general_recursion_reduces_to_m1_form() {
        let spec = ProblemSpec::feedback(17, 1).unwrap();
        let by_m1 = feedback_state_recursion(&spec, 10);
        let mut prev = vec![0.0; 17];
        prev[0] = 1.0;
        for dist in &by_m1 {
            let mut next = vec![0.0; 17];
            for (s, out) in next.iter_mut().enumerate() {
                for i in 1..=2.min(s) {
                    *out += union_transition(17, 1, s, i) * prev[s - i];
                }
            }
            for s in 0..17 {
                assert!(close(next[s], dist.prob(s), 1e-14));
            }
            prev = next;
        }
    }

    #[test]
    fn m2_state_recursion_matches_enumerated_chain() {
        let spec = ProblemSpec::feedback(12, 2).unwrap();
        let kernels: Vec<Vec<f64>> = (0..=12).map(|n| enumerate_union_sizes(n.max(1), 2)).collect();
        let mut dist = vec![0.0; 12];
        dist[0] = 1.0;
        for closed in feedback_state_recursion(&spec, 3) {
            let mut next = vec![0.0; 12];
            for (s, &p) in dist.iter().enumerate() {
                for (u, &w) in kernels[12 - s].iter().enumerate() {
                    if s + u < 12 {
                        next[s + u] += p * w;
                    }
                }
            }
            for s in 0..12 {
                assert!(close(next[s], closed.prob(s), TOL), "t={} s={s}", closed.round());
            }
            dist = next;
        }
    }

    #[test]
    fn feedback_small_cases() {
        let pmf = feedback_stopping_pmf(&ProblemSpec::feedback(2, 1).unwrap());
        assert_eq!(pmf.t_min(), 1);
        assert!(close(pmf.prob(1), 0.5, 1e-15));
        assert!(close(pmf.prob(2), 0.5, 1e-15));
        let pmf = feedback_stopping_pmf(&ProblemSpec::feedback(1, 1).unwrap());
        assert_eq!(pmf.prob(1), 1.0);
        assert_eq!(pmf.total_mass(), 1.0);
    }

    #[test]
    fn feedback_normalized_and_supported() {
        for m in [1, 2, 5] {
            for total in m..=200 {
                let spec = ProblemSpec::feedback(total, m).unwrap();
                let pmf = feedback_stopping_pmf(&spec);
                assert!(close(pmf.total_mass(), 1.0, TOL), "M={total} m={m}");
                assert!(pmf.probs().iter().all(|&p| p >= 0.0));
                let (lo, hi) = pmf.support().unwrap();
                assert!(lo >= spec.min_rounds() && hi <= spec.max_feedback_rounds());
            }
        }
    }

    #[test]
    fn oracle_small_cases() {
        let pmf = exact_markov_oracle(&ProblemSpec::feedback(2, 1).unwrap()).unwrap();
        assert!(close(pmf.prob(1), 0.5, 1e-15) && close(pmf.prob(2), 0.5, 1e-15));
        for m in 1..=6 {
            let pmf = exact_markov_oracle(&ProblemSpec::feedback(m, m).unwrap()).unwrap();
            assert_eq!(pmf.prob(1), 1.0);
        }
        let pmf = exact_markov_oracle(&ProblemSpec::feedback(6, 2).unwrap()).unwrap();
        assert!(close(pmf.total_mass(), 1.0, 1e-12));
    }

    #[test]
    fn oracle_guard() {
        let err = exact_markov_oracle(&ProblemSpec::feedback(40, 5).unwrap()).unwrap_err();
        assert!(matches!(err, AnalyticError::OracleTooLarge { .. }));
    }

    /// Both vehicles' subsets enumerated, no symmetry shortcut.
    fn union_sizes_all_pairs(n: usize, m: usize) -> Vec<f64> {
        let k = m.min(n);
        let subsets: Vec<u32> = (0u32..1 << n).filter(|b| b.count_ones() as usize == k).collect();
        let mut counts = vec![0.0; n + 1];
        for &a in &subsets {
            for &b in &subsets {
                counts[(a | b).count_ones() as usize] += 1.0;
            }
        }
        let total = (subsets.len() * subsets.len()) as f64;
        counts.iter().map(|c| c / total).collect()
    }

    #[test]
    fn fixed_first_subset_matches_full_pair_enumeration() {
        for n in 1..=10 {
            for m in 1..=4 {
                let a = enumerate_union_sizes(n, m);
                let b = union_sizes_all_pairs(n, m);
                for u in 0..=n {
                    assert!(close(a[u], b[u], 1e-15), "n={n} m={m} u={u}");
                }
            }
        }
    }

    #[test]
    fn feedback_matches_oracle_m1() {
        for total in 1..=12 {
            let spec = ProblemSpec::feedback(total, 1).unwrap();
            let cmp = compare_feedback_with_oracle(&spec).unwrap();
            assert!(cmp.max_deviation() <= TOL, "M={total}: {}", cmp.max_deviation());
        }
    }

    #[test]
    fn feedback_matches_oracle_m2_m3() {
        for m in [2, 3] {
            for total in m..=12 {
                let spec = ProblemSpec::feedback(total, m).unwrap();
                let cmp = compare_feedback_with_oracle(&spec).unwrap();
                assert!(cmp.max_uncapped_deviation() <= TOL);
                assert!(cmp.max_deviation() <= TOL, "M={total} m={m}");
            }
        }
    }

    #[test]
    fn rank_probability_examples() {
        assert!(close(rank_full_probability(4, 4, 1), 315.0 / 1024.0, 1e-15));
        assert!(close(rank_full_probability(2, 2, 1), 3.0 / 8.0, 1e-15));
        assert!(close(rank_full_probability(3, 3, 1), 168.0 / 512.0, 1e-15));
        for q in 1..=16u8 {
            let big_q = (q as f64).exp2();
            assert!(close(rank_full_probability(1, 1, q), 1.0 - 1.0 / big_q, 1e-15));
        }
        assert_eq!(rank_full_probability(3, 4, 8), 0.0);
    }

    #[test]
    fn rank_probability_monotone() {
        for n in 1..12 {
            for q in 1..=8u8 {
                let mut last = 0.0;
                for t in n..n + 20 {
                    let p = rank_full_probability(t, n, q);
                    assert!(p >= last && p > 0.0 && p <= 1.0);
                    assert!(rank_full_probability(t, n, q + 1) >= p);
                    last = p;
                }
            }
        }
    }

    #[test]
    fn nc_exact_examples() {
        let pmf = nc_exact_pmf(&ProblemSpec::new(2, 1, 1).unwrap());
        assert!(close(pmf.prob(1), 3.0 / 8.0, 1e-15));
        let pmf = nc_exact_pmf(&ProblemSpec::new(10, 1, 8).unwrap());
        assert!(pmf.prob(5) >= 0.99);
        for m in [1, 2, 5] {
            for q in [1, 4, 8] {
                for total in (m..=100).step_by(7) {
                    let spec = ProblemSpec::new(total, m, q).unwrap();
                    let pmf = nc_exact_pmf(&spec);
                    assert!(close(pmf.total_mass(), 1.0, TOL));
                    assert_eq!(pmf.support().unwrap().0, spec.min_rounds());
                }
            }
        }
    }

    #[test]
    fn loose_bound_decays_by_q_squared() {
        let spec = ProblemSpec::new(10, 1, 8).unwrap();
        let loose = nc_stopping_pmf_loose_bound(&spec);
        assert!(close(loose.prob(5), 1.0 - 1.0 / 256.0, 1e-15));
        for t in 5..loose.t_max() {
            assert!(loose.prob(t + 1) <= loose.prob(t) / 65536.0 * (1.0 + 1e-12));
        }
        let tight = nc_stopping_pmf_bound(&spec);
        assert!(tight.is_bound());
        assert_eq!((tight.t_min(), tight.t_max()), (loose.t_min(), loose.t_max()));
    }

    #[test]
    fn per_round_bound_holds_at_first_round_only() {
        // When 2m | M the first possible round is covered, but one round later
        // the mass of "full rank before the round's last row" is not.
        for q in [4u8, 8] {
            let spec = ProblemSpec::new(10, 1, q).unwrap();
            let exact = nc_exact_pmf(&spec);
            let bound = nc_stopping_pmf_bound(&spec);
            assert!(exact.prob(5) <= bound.prob(5));
            assert!(exact.prob(6) > 10.0 * bound.prob(6), "q={q}");
        }
    }

    #[test]
    fn expected_bound_values() {
        let b = nc_expected_bound(&ProblemSpec::new(10, 1, 8).unwrap());
        assert!(close(b.value, 5.0 + 1.0 / 255.0, 1e-15));
        assert!(!b.small_field);
        let b = nc_expected_bound(&ProblemSpec::new(10, 5, 8).unwrap());
        assert!(close(b.value, 1.0 + 1.0 / 255.0, 1e-15));
        let b = nc_expected_bound(&ProblemSpec::new(10, 1, 1).unwrap());
        assert!(close(b.value, 6.0, 1e-15) && b.small_field);
    }

    #[test]
    fn exact_mean_against_expected_bound() {
        for m in [1usize, 2, 5] {
            for q in [4u8, 8] {
                for total in m..=100 {
                    let spec = ProblemSpec::new(total, m, q).unwrap();
                    let mean = nc_exact_pmf(&spec).mean();
                    let bound = nc_expected_bound(&spec).value;
                    if total % (2 * m) == 0 {
                        // tight to first order in 1/Q; m = 1 overshoots by O(Q^-6)
                        assert!(mean <= bound + 1e-6, "M={total} m={m} q={q}");
                    } else {
                        // M/(2m) is not a reachable round count
                        assert!(mean > bound, "M={total} m={m} q={q}");
                    }
                }
            }
        }
    }

    #[test]
    fn feedback_needs_more_rounds_than_nc() {
        for m in [1, 2, 5] {
            for total in (10..=100).step_by(10) {
                let spec = ProblemSpec::new(total, m, 8).unwrap();
                assert!(feedback_stopping_pmf(&spec).mean() >= nc_exact_pmf(&spec).mean());
            }
        }
    }

    #[test]
    fn tvd_and_diff() {
        let a = RoundPmf::new(1, vec![0.5, 0.5], PmfKind::Exact);
        let b = RoundPmf::new(2, vec![1.0], PmfKind::Exact);
        assert!(close(a.tvd(&b), 0.5, 1e-15));
        assert!(close(a.max_abs_diff(&b), 0.5, 1e-15));
        assert!(close(a.mean(), 1.5, 1e-15));
        assert_eq!(a.t_max(), 2);
    }
}
