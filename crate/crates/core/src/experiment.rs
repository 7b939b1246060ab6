//! Forward models, event sampling, and empirical statistics for the
//! single-magnet, double-magnet, and two-particle experiments.
//!
//! Outcome order is fixed everywhere as (+1, 0, -1), pairs in row-major
//! (k, l) order. Empirical tables and moments keep their integer counts so
//! that read-out values are single divisions of exact integers; the
//! moment-to-frequency inversion reproduces empirical tables bit-for-bit
//! through those counts.

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::projectors::beam_projectors;
use crate::rng::SplitMix64;
use crate::spin::{spin_projection, Direction};
use crate::tomography::SourceState;

/// Single-particle outcomes in sampling order.
pub const OUTCOMES: [i8; 3] = [1, 0, -1];

/// Pair outcomes in row-major sampling order.
pub const PAIR_OUTCOMES: [(i8, i8); 9] = [
    (1, 1),
    (1, 0),
    (1, -1),
    (0, 1),
    (0, 0),
    (0, -1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

/// Index of a single outcome in the fixed (+1, 0, -1) order.
pub fn outcome_index(k: i8) -> usize {
    debug_assert!((-1..=1).contains(&k));
    (1 - k) as usize
}

/// Row-major index of a pair outcome.
pub fn pair_index(k: i8, l: i8) -> usize {
    3 * outcome_index(k) + outcome_index(l)
}

/// Which experiment produced (or will produce) a log.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    SingleSg,
    DoubleSg,
    Eprb,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::SingleSg => "single-sg",
            ExperimentKind::DoubleSg => "double-sg",
            ExperimentKind::Eprb => "eprb",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "single-sg" => Some(ExperimentKind::SingleSg),
            "double-sg" => Some(ExperimentKind::DoubleSg),
            "eprb" => Some(ExperimentKind::Eprb),
            _ => None,
        }
    }

    pub fn is_pair(&self) -> bool {
        !matches!(self, ExperimentKind::SingleSg)
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Conditions under which a run is performed: settings, count, seed,
/// and the sampling chunk size (1 = one sequential stream, the default;
/// values >= 2 select the chunked stream layout).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub a: Direction,
    pub b: Option<Direction>,
    pub n_events: u64,
    pub seed: u64,
    pub chunk: u64,
}

impl ExperimentConfig {
    pub fn new(
        kind: ExperimentKind,
        a: Direction,
        b: Option<Direction>,
        n_events: u64,
        seed: u64,
    ) -> Result<Self> {
        if n_events == 0 {
            return Err(Error::InvalidSource { reason: "n_events must be at least 1".into() });
        }
        if kind.is_pair() && b.is_none() {
            return Err(Error::InvalidSource {
                reason: format!("{kind} experiments require a second setting b"),
            });
        }
        Ok(Self { kind, a, b, n_events, seed, chunk: 1 })
    }

    /// Select the chunked sampling layout; `chunk` must be at least 2
    /// (a chunk size of 1 denotes the default single stream).
    pub fn with_chunk(mut self, chunk: u64) -> Self {
        self.chunk = chunk.max(1);
        self
    }
}

/// Recorded outcomes.
#[derive(Clone, Debug, PartialEq)]
pub enum Events {
    Single(Vec<i8>),
    Pair(Vec<(i8, i8)>),
}

impl Events {
    pub fn len(&self) -> usize {
        match self {
            Events::Single(v) => v.len(),
            Events::Pair(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Ordered list of detected outcomes plus the conditions they were taken under.
#[derive(Clone, Debug, PartialEq)]
pub struct EventLog {
    pub config: ExperimentConfig,
    pub events: Events,
}

/// Relative frequencies of the three single outcomes, (+1, 0, -1) order.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleFrequencies {
    values: [f64; 3],
    counts: Option<([u64; 3], u64)>,
}

impl SingleFrequencies {
    /// Analytic table; entries may carry round-off but must be non-negative
    /// within 1e-12 and sum to one within 1e-12.
    pub fn from_values(values: [f64; 3]) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            if v < -1e-12 || !v.is_finite() {
                return Err(Error::Infeasible { outcome: OUTCOMES[i], value: v });
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSource { reason: format!("frequencies sum to {sum}") });
        }
        Ok(Self { values, counts: None })
    }

    fn from_counts(counts: [u64; 3], n: u64) -> Self {
        let values = counts.map(|c| c as f64 / n as f64);
        Self { values, counts: Some((counts, n)) }
    }

    pub fn get(&self, k: i8) -> f64 {
        self.values[outcome_index(k)]
    }

    pub fn values(&self) -> [f64; 3] {
        self.values
    }

    /// Integer counts when the table came from events.
    pub fn counts(&self) -> Option<([u64; 3], u64)> {
        self.counts
    }

    /// Re-accumulate the moments `m_p = Σ k^p f(k)`. Count-backed tables go
    /// through the integer accumulators and reproduce the moments of the
    /// originating log bit-for-bit.
    pub fn moments(&self) -> SingleMoments {
        if let Some((counts, n)) = self.counts {
            let sum_k = counts[0] as i64 - counts[2] as i64;
            let sum_k2 = counts[0] + counts[2];
            return SingleMoments::from_accumulators(sum_k, sum_k2, n);
        }
        SingleMoments::from_values(
            self.values[0] - self.values[2],
            self.values[0] + self.values[2],
        )
    }
}

/// Relative frequencies of the nine pair outcomes, row-major (k, l) order.
#[derive(Clone, Debug, PartialEq)]
pub struct PairFrequencies {
    values: [f64; 9],
    counts: Option<([u64; 9], u64)>,
}

impl PairFrequencies {
    pub fn from_values(values: [f64; 9]) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            if v < -1e-12 || !v.is_finite() {
                return Err(Error::Infeasible { outcome: PAIR_OUTCOMES[i].0, value: v });
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSource { reason: format!("frequencies sum to {sum}") });
        }
        Ok(Self { values, counts: None })
    }

    fn from_counts(counts: [u64; 9], n: u64) -> Self {
        let values = counts.map(|c| c as f64 / n as f64);
        Self { values, counts: Some((counts, n)) }
    }

    pub fn get(&self, k: i8, l: i8) -> f64 {
        self.values[pair_index(k, l)]
    }

    pub fn values(&self) -> [f64; 9] {
        self.values
    }

    pub fn counts(&self) -> Option<([u64; 9], u64)> {
        self.counts
    }

    /// Marginal over the second outcome: `Σ_l f(k, l)`.
    pub fn marginal_first(&self, k: i8) -> f64 {
        OUTCOMES.iter().map(|&l| self.get(k, l)).sum()
    }
}

/// Frequency table of either arity.
#[derive(Clone, Debug, PartialEq)]
pub enum FrequencyTable {
    Single(SingleFrequencies),
    Pair(PairFrequencies),
}

impl FrequencyTable {
    pub fn as_single(&self) -> Option<&SingleFrequencies> {
        match self {
            FrequencyTable::Single(t) => Some(t),
            FrequencyTable::Pair(_) => None,
        }
    }

    pub fn as_pair(&self) -> Option<&PairFrequencies> {
        match self {
            FrequencyTable::Pair(t) => Some(t),
            FrequencyTable::Single(_) => None,
        }
    }
}

/// Moments of a single-outcome distribution; `m0 = 1` by construction.
///
/// When derived from events the integer accumulators are retained, which is
/// what makes [`frequencies_from_moments`] an exact inverse of
/// [`relative_frequencies`] on event data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleMoments {
    pub m1: f64,
    pub m2: f64,
    exact: Option<SingleAccumulators>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct SingleAccumulators {
    sum_k: i64,
    sum_k2: u64,
    n: u64,
}

impl SingleMoments {
    pub fn from_values(m1: f64, m2: f64) -> Self {
        Self { m1, m2, exact: None }
    }

    fn from_accumulators(sum_k: i64, sum_k2: u64, n: u64) -> Self {
        Self {
            m1: sum_k as f64 / n as f64,
            m2: sum_k2 as f64 / n as f64,
            exact: Some(SingleAccumulators { sum_k, sum_k2, n }),
        }
    }
}

/// Moments `<k^p l^q>` for p, q in {0, 1, 2}; entry (0, 0) is 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairMoments {
    values: [[f64; 3]; 3],
}

impl PairMoments {
    pub fn from_values(values: [[f64; 3]; 3]) -> Self {
        Self { values }
    }

    /// `<k^p l^q>`.
    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.values[p][q]
    }
}

/// Moment set of either arity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MomentSet {
    Single(SingleMoments),
    Pair(PairMoments),
}

impl MomentSet {
    pub fn as_single(&self) -> Option<&SingleMoments> {
        match self {
            MomentSet::Single(m) => Some(m),
            MomentSet::Pair(_) => None,
        }
    }

    pub fn as_pair(&self) -> Option<&PairMoments> {
        match self {
            MomentSet::Pair(m) => Some(m),
            MomentSet::Single(_) => None,
        }
    }
}

fn require_dim(f: &SourceState, dim: usize) -> Result<()> {
    if f.dim() != dim {
        return Err(Error::InvalidSource {
            reason: format!("source must be {dim}x{dim}, got {0}x{0}", f.dim()),
        });
    }
    Ok(())
}

/// `f(k) = trace(M_k(a) F M_k(a))` for the three beams after one magnet.
pub fn single_sg_frequencies(f: &SourceState, a: Direction) -> Result<SingleFrequencies> {
    require_dim(f, 3)?;
    let ps = beam_projectors(a);
    let mut values = [0.0; 3];
    for (i, &k) in OUTCOMES.iter().enumerate() {
        let m = ps.for_outcome(k as f64).expect("beam outcomes fixed");
        values[i] = m.mul(f.matrix()).mul(m).trace().re;
    }
    SingleFrequencies::from_values(values)
}

/// `f(k, l) = trace(M_l(b) M_k(a) F M_k(a) M_l(b))` for two magnets in series.
pub fn double_sg_frequencies(f: &SourceState, a: Direction, b: Direction) -> Result<PairFrequencies> {
    require_dim(f, 3)?;
    let pa = beam_projectors(a);
    let pb = beam_projectors(b);
    let mut values = [0.0; 9];
    for &(k, l) in PAIR_OUTCOMES.iter() {
        let mk = pa.for_outcome(k as f64).expect("beam outcomes fixed");
        let ml = pb.for_outcome(l as f64).expect("beam outcomes fixed");
        let filtered = mk.mul(f.matrix()).mul(mk);
        values[pair_index(k, l)] = ml.mul(&filtered).mul(ml).trace().re;
    }
    PairFrequencies::from_values(values)
}

/// `f(k, l) = trace(F (M_k(a) ⊗ 1)(1 ⊗ M_l(b)))` for a two-particle source.
pub fn eprb_frequencies(f: &SourceState, a: Direction, b: Direction) -> Result<PairFrequencies> {
    require_dim(f, 9)?;
    let pa = beam_projectors(a);
    let pb = beam_projectors(b);
    let mut values = [0.0; 9];
    for &(k, l) in PAIR_OUTCOMES.iter() {
        let mk = pa.for_outcome(k as f64).expect("beam outcomes fixed");
        let ml = pb.for_outcome(l as f64).expect("beam outcomes fixed");
        values[pair_index(k, l)] = f.matrix().mul(&mk.kron(ml)).trace().re;
    }
    PairFrequencies::from_values(values)
}

/// `<k^p l^q> = trace(F (a·S)^p ⊗ (b·S)^q)` for a two-particle source.
pub fn eprb_moments(f: &SourceState, a: Direction, b: Direction) -> Result<PairMoments> {
    require_dim(f, 9)?;
    let ka = spin_projection(a);
    let kb = spin_projection(b);
    let one = ComplexMatrix::identity(3);
    let pow = |m: &ComplexMatrix, p: usize| if p == 0 { one.clone() } else { m.pow(p as u32) };
    let mut values = [[0.0; 3]; 3];
    for (p, row) in values.iter_mut().enumerate() {
        for (q, v) in row.iter_mut().enumerate() {
            *v = f.matrix().mul(&pow(&ka, p).kron(&pow(&kb, q))).trace().re;
        }
    }
    Ok(PairMoments { values })
}

/// Invert single moments into the frequency table:
/// `f(k) = (1 - m2) + (m1/2) k + ((3 m2 - 2)/2) k²`.
///
/// Moments carrying integer accumulators (from [`moments_from_events`]) are
/// inverted in integer arithmetic and reproduce [`relative_frequencies`]
/// bit-for-bit; plain-valued moments go through the closed form above.
pub fn frequencies_from_moments(m: &SingleMoments) -> Result<SingleFrequencies> {
    if let Some(acc) = m.exact {
        let sum_k2 = acc.sum_k2 as i64;
        let c_plus = (sum_k2 + acc.sum_k) / 2;
        let c_minus = (sum_k2 - acc.sum_k) / 2;
        let c_zero = acc.n as i64 - sum_k2;
        debug_assert!(c_plus >= 0 && c_minus >= 0 && c_zero >= 0);
        return Ok(SingleFrequencies::from_counts(
            [c_plus as u64, c_zero as u64, c_minus as u64],
            acc.n,
        ));
    }
    let mut values = [0.0; 3];
    for (i, &k) in OUTCOMES.iter().enumerate() {
        let k = k as f64;
        values[i] = (1.0 - m.m2) + (m.m1 / 2.0) * k + ((3.0 * m.m2 - 2.0) / 2.0) * k * k;
    }
    for (i, &v) in values.iter().enumerate() {
        if v < -1e-12 {
            return Err(Error::Infeasible { outcome: OUTCOMES[i], value: v });
        }
    }
    SingleFrequencies::from_values(values)
}

/// Empirical moments: integer accumulators divided once by N.
pub fn moments_from_events(log: &EventLog) -> Result<MomentSet> {
    if log.events.is_empty() {
        return Err(Error::EmptyLog);
    }
    match &log.events {
        Events::Single(events) => {
            let n = events.len() as u64;
            let sum_k: i64 = events.iter().map(|&k| k as i64).sum();
            let sum_k2: u64 = events.iter().map(|&k| (k as i64 * k as i64) as u64).sum();
            Ok(MomentSet::Single(SingleMoments::from_accumulators(sum_k, sum_k2, n)))
        }
        Events::Pair(events) => {
            let n = events.len() as u64;
            let mut sums = [[0i64; 3]; 3];
            for &(k, l) in events {
                let (k, l) = (k as i64, l as i64);
                let kp = [1, k, k * k];
                let lq = [1, l, l * l];
                for p in 0..3 {
                    for q in 0..3 {
                        sums[p][q] += kp[p] * lq[q];
                    }
                }
            }
            let mut values = [[0.0; 3]; 3];
            for p in 0..3 {
                for q in 0..3 {
                    values[p][q] = sums[p][q] as f64 / n as f64;
                }
            }
            Ok(MomentSet::Pair(PairMoments { values }))
        }
    }
}

/// Empirical relative frequencies: one count per outcome, divided once by N.
pub fn relative_frequencies(log: &EventLog) -> Result<FrequencyTable> {
    if log.events.is_empty() {
        return Err(Error::EmptyLog);
    }
    match &log.events {
        Events::Single(events) => {
            let mut counts = [0u64; 3];
            for &k in events {
                counts[outcome_index(k)] += 1;
            }
            Ok(FrequencyTable::Single(SingleFrequencies::from_counts(counts, events.len() as u64)))
        }
        Events::Pair(events) => {
            let mut counts = [0u64; 9];
            for &(k, l) in events {
                counts[pair_index(k, l)] += 1;
            }
            Ok(FrequencyTable::Pair(PairFrequencies::from_counts(counts, events.len() as u64)))
        }
    }
}

/// Draw outcome indices by inverse CDF over `values` in their fixed order.
fn sample_indices(values: &[f64], n_events: u64, seed: u64, chunk: u64) -> Vec<usize> {
    let mut cumulative = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for &v in values {
        acc += v.max(0.0);
        cumulative.push(acc);
    }
    let last = values.len() - 1;
    let draw = |rng: &mut SplitMix64| {
        let u = rng.next_f64() * acc;
        cumulative.iter().position(|&c| u < c).unwrap_or(last)
    };

    let mut out = Vec::with_capacity(n_events as usize);
    if chunk <= 1 {
        let mut rng = SplitMix64::new(seed);
        for _ in 0..n_events {
            out.push(draw(&mut rng));
        }
    } else {
        let mut index = 0u64;
        let mut chunk_id = 0u64;
        while index < n_events {
            let mut rng = SplitMix64::new(seed ^ chunk_id);
            let span = chunk.min(n_events - index);
            for _ in 0..span {
                out.push(draw(&mut rng));
            }
            index += span;
            chunk_id += 1;
        }
    }
    out
}

/// Sample an event log from a frequency table under the given conditions.
///
/// Deterministic in (table, n_events, seed, chunk): chunk 1 uses one
/// SplitMix64 stream seeded with `seed`; chunk c >= 2 seeds chunk number i
/// (0-based, `chunk` events each) with `seed XOR i`.
pub fn sample_events(config: ExperimentConfig, freq: &FrequencyTable) -> Result<EventLog> {
    let events = match (config.kind.is_pair(), freq) {
        (false, FrequencyTable::Single(t)) => {
            let idx = sample_indices(&t.values, config.n_events, config.seed, config.chunk);
            Events::Single(idx.into_iter().map(|i| OUTCOMES[i]).collect())
        }
        (true, FrequencyTable::Pair(t)) => {
            let idx = sample_indices(&t.values, config.n_events, config.seed, config.chunk);
            Events::Pair(idx.into_iter().map(|i| PAIR_OUTCOMES[i]).collect())
        }
        _ => {
            return Err(Error::InvalidSource {
                reason: "frequency table arity does not match experiment kind".into(),
            })
        }
    };
    Ok(EventLog { config, events })
}

/// The pair table obtained by substituting `x = (a·b)^r` into the
/// isotropic-source closed form. `r = 1` is the quantum case; `r > 1`
/// yields tables with the correct 1/3 marginals that no single source
/// matrix reproduces across settings.
///
/// `r` must be at least 1.
pub fn counterexample_frequencies(a: Direction, b: Direction, r: u32) -> PairFrequencies {
    assert!(r >= 1, "power r must be at least 1");
    let x = a.dot(&b).powi(r as i32);
    let mut values = [0.0; 9];
    for &(k, l) in PAIR_OUTCOMES.iter() {
        let v = if k == l && k != 0 {
            (1.0 + x) * (1.0 + x) / 12.0
        } else if k == 0 && l == 0 {
            x * x / 3.0
        } else if k != 0 && l != 0 {
            (1.0 - x) * (1.0 - x) / 12.0
        } else {
            (1.0 - x * x) / 6.0
        };
        values[pair_index(k, l)] = v;
    }
    PairFrequencies { values, counts: None }
}
