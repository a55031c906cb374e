//! Seeded Monte Carlo simulation of R2V + V2V rounds.
//!
//! Trial `i` of scheme `s` draws from its own ChaCha8 stream, keyed by the
//! master seed and the stream id `2i + s`. Results therefore do not depend on
//! how trials are spread over worker threads. Aggregation is by trial index.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytic::{PmfKind, ProblemSpec, RoundPmf, VEHICLES};
use crate::ffmatrix::{CoeffMatrix, EchelonBasis};
use crate::gf2q::FieldContext;

pub type SeededRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Feedback,
    NetworkCoding,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Feedback => "feedback",
            Scheme::NetworkCoding => "nc",
        }
    }

    fn stream_tag(self) -> u64 {
        match self {
            Scheme::Feedback => 0,
            Scheme::NetworkCoding => 1,
        }
    }
}

/// Independent generator number `stream` under `master_seed`.
pub fn stream_rng(master_seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// RNG for one trial of one scheme, with its stream id.
pub fn trial_rng(master_seed: u64, scheme: Scheme, trial: u64) -> (SeededRng, u64) {
    let stream = (trial << 1) | scheme.stream_tag();
    (stream_rng(master_seed, stream), stream)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub rounds: usize,
    pub scheme: Scheme,
    pub seed_stream_id: u64,
}

/// What the platoon knows between rounds. After V2V both vehicles hold the
/// same information, so one copy suffices.
#[derive(Debug, Clone)]
pub enum DisseminationState {
    Feedback {
        /// `received[p]` for every packet index.
        received: Vec<bool>,
        /// Indices not yet received, in arbitrary order.
        missing: Vec<u32>,
        round: usize,
    },
    NetworkCoding {
        basis: EchelonBasis,
        round: usize,
    },
}

impl DisseminationState {
    pub fn feedback(total_packets: usize) -> Self {
        DisseminationState::Feedback {
            received: vec![false; total_packets],
            missing: (0..total_packets as u32).collect(),
            round: 0,
        }
    }

    pub fn network_coding(ctx: &FieldContext, total_packets: usize) -> Self {
        DisseminationState::NetworkCoding {
            basis: EchelonBasis::new(ctx, total_packets),
            round: 0,
        }
    }

    pub fn round(&self) -> usize {
        match self {
            DisseminationState::Feedback { round, .. } | DisseminationState::NetworkCoding { round, .. } => *round,
        }
    }

    /// Packets held (feedback) or rank of the pooled coefficient matrix (NC).
    pub fn progress(&self) -> usize {
        match self {
            DisseminationState::Feedback { received, missing, .. } => received.len() - missing.len(),
            DisseminationState::NetworkCoding { basis, .. } => basis.rank(),
        }
    }

    pub fn is_complete(&self) -> bool {
        match self {
            DisseminationState::Feedback { missing, .. } => missing.is_empty(),
            DisseminationState::NetworkCoding { basis, .. } => basis.is_full(),
        }
    }

    /// One R2V phase for both vehicles followed by a perfect V2V merge.
    pub fn advance(&mut self, per_round: usize, rng: &mut SeededRng) {
        match self {
            DisseminationState::Feedback {
                received,
                missing,
                round,
            } => {
                let k = per_round.min(missing.len());
                // each vehicle: uniform k-subset of the shared missing set
                for _ in 0..VEHICLES {
                    let (picked, _) = missing.partial_shuffle(rng, k);
                    for &p in picked.iter() {
                        received[p as usize] = true;
                    }
                }
                missing.retain(|&p| !received[p as usize]);
                *round += 1;
            }
            DisseminationState::NetworkCoding { basis, round } => {
                for _ in 0..VEHICLES * per_round {
                    if basis.is_full() {
                        break;
                    }
                    basis.insert_random_row(rng);
                }
                *round += 1;
            }
        }
    }
}

fn run_until_complete(mut state: DisseminationState, spec: &ProblemSpec, rng: &mut SeededRng) -> usize {
    while !state.is_complete() {
        state.advance(spec.per_round(), rng);
    }
    state.round()
}

pub fn run_feedback_trial(spec: &ProblemSpec, rng: &mut SeededRng) -> TrialOutcome {
    let seed_stream_id = rng.get_stream();
    let rounds = run_until_complete(DisseminationState::feedback(spec.total_packets()), spec, rng);
    TrialOutcome {
        rounds,
        scheme: Scheme::Feedback,
        seed_stream_id,
    }
}

pub fn run_nc_trial(spec: &ProblemSpec, ctx: &FieldContext, rng: &mut SeededRng) -> TrialOutcome {
    let seed_stream_id = rng.get_stream();
    let state = DisseminationState::network_coding(ctx, spec.total_packets());
    let rounds = run_until_complete(state, spec, rng);
    TrialOutcome {
        rounds,
        scheme: Scheme::NetworkCoding,
        seed_stream_id,
    }
}

/// Empirical stopping-time statistics of one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub trials: u64,
    /// `counts[k]` = trials that stopped at round `min_rounds + k`.
    pub counts: Vec<u64>,
    pub min_rounds: usize,
    pub max_rounds: usize,
    pub mean: f64,
    /// Standard error of the mean (sample standard deviation / √n).
    pub stderr: f64,
}

impl SchemeSummary {
    fn from_rounds(scheme: Scheme, rounds: &[usize]) -> Self {
        let n = rounds.len();
        assert!(n > 0, "at least one trial");
        let min_rounds = *rounds.iter().min().unwrap();
        let max_rounds = *rounds.iter().max().unwrap();
        let mut counts = vec![0u64; max_rounds - min_rounds + 1];
        for &r in rounds {
            counts[r - min_rounds] += 1;
        }
        // integer sums keep the statistics independent of summation order
        let sum: u128 = rounds.iter().map(|&r| r as u128).sum();
        let sum_sq: u128 = rounds.iter().map(|&r| (r as u128) * (r as u128)).sum();
        let nf = n as f64;
        let mean = sum as f64 / nf;
        let stderr = if n > 1 {
            let var = (sum_sq as f64 - nf * mean * mean).max(0.0) / (nf - 1.0);
            (var / nf).sqrt()
        } else {
            0.0
        };
        Self {
            scheme,
            trials: n as u64,
            counts,
            min_rounds,
            max_rounds,
            mean,
            stderr,
        }
    }

    /// Relative frequencies as a pmf.
    pub fn pmf(&self) -> RoundPmf {
        let n = self.trials as f64;
        RoundPmf::new(
            self.min_rounds,
            self.counts.iter().map(|&c| c as f64 / n).collect(),
            PmfKind::Exact,
        )
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    /// Worker threads; `0` uses rayon's global pool.
    pub workers: usize,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            schemes: vec![Scheme::Feedback, Scheme::NetworkCoding],
            workers: 0,
        }
    }

    pub fn schemes(mut self, schemes: &[Scheme]) -> Self {
        self.schemes = schemes.to_vec();
        self
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub spec: ProblemSpec,
    pub seed: u64,
    pub per_scheme: Vec<SchemeSummary>,
}

impl ExperimentSummary {
    pub fn scheme(&self, scheme: Scheme) -> Option<&SchemeSummary> {
        self.per_scheme.iter().find(|s| s.scheme == scheme)
    }
}

/// Stopping rounds of `trials` independent trials, ordered by trial index.
pub fn sample_rounds(spec: &ProblemSpec, scheme: Scheme, trials: u64, seed: u64) -> Vec<usize> {
    let ctx = match scheme {
        Scheme::NetworkCoding => Some(FieldContext::new(spec.field_exponent()).expect("spec validates q")),
        Scheme::Feedback => None,
    };
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let (mut rng, _) = trial_rng(seed, scheme, i);
            match &ctx {
                Some(ctx) => run_nc_trial(spec, ctx, &mut rng).rounds,
                None => run_feedback_trial(spec, &mut rng).rounds,
            }
        })
        .collect()
}

/// Fraction of `trials` uniform `rows × cols` matrices over GF(2^q) with rank
/// `cols`, and the standard error of that fraction.
pub fn full_rank_frequency(rows: usize, cols: usize, field_exponent: u8, trials: u64, seed: u64) -> (f64, f64) {
    let ctx = FieldContext::new(field_exponent).expect("valid field exponent");
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            (CoeffMatrix::random(&mut rng, &ctx, rows, cols).rank() == cols) as u64
        })
        .sum();
    let n = trials as f64;
    let p = hits as f64 / n;
    (p, (p * (1.0 - p) / n).sqrt())
}

pub fn run_experiment(spec: &ProblemSpec, config: &SimConfig) -> ExperimentSummary {
    assert!(config.trials >= 1, "trials must be ≥ 1");
    let body = || {
        config
            .schemes
            .iter()
            .map(|&scheme| {
                let rounds = sample_rounds(spec, scheme, config.trials, config.seed);
                SchemeSummary::from_rounds(scheme, &rounds)
            })
            .collect()
    };
    let per_scheme = if config.workers == 0 {
        body()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .expect("thread pool")
            .install(body)
    };
    ExperimentSummary {
        spec: *spec,
        seed: config.seed,
        per_scheme,
    }
}
