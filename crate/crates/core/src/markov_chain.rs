//! Embedded Markov chain of the relay buffer for weather states that use the
//! laser downlink.
//!
//! The chain is observed before every transmission attempt. State `i` is the
//! number of packets buffered at the relay. In the empty state only the source
//! transmits; otherwise source and relay contend and the relay wins with
//! probability `α/(1+α)`. A successful source transmission into a full buffer
//! is dropped.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_prob_open, Error, Result};

/// Inputs of the laser-downlink chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserChainParams {
    /// Outage probability of the source → relay laser link.
    pub rho_ss: f64,
    /// Outage probability of the relay → ground laser link.
    pub rho_sg: f64,
    /// Relay medium-access priority.
    pub alpha: f64,
    /// Buffer limit `L` in packets.
    pub buffer_packets: usize,
    /// Mean packet size `X` in bits.
    pub packet_bits: f64,
    pub cap_ss_bps: f64,
    pub cap_sg_bps: f64,
    pub timeout_ss_s: f64,
    pub timeout_sg_s: f64,
}

impl LaserChainParams {
    pub fn validate(&self) -> Result<()> {
        check_prob_open("rho_ss", self.rho_ss)?;
        check_prob_open("rho_sg", self.rho_sg)?;
        check_positive("alpha", self.alpha)?;
        if self.buffer_packets == 0 {
            return Err(Error::invalid("buffer_packets", "must be >= 1"));
        }
        check_positive("packet_bits", self.packet_bits)?;
        check_positive("cap_ss_bps", self.cap_ss_bps)?;
        check_positive("cap_sg_bps", self.cap_sg_bps)?;
        check_positive("timeout_ss_s", self.timeout_ss_s)?;
        check_positive("timeout_sg_s", self.timeout_sg_s)?;
        Ok(())
    }

    /// Probability that the relay wins a contended epoch.
    pub fn relay_share(&self) -> f64 {
        self.alpha / (1.0 + self.alpha)
    }

    pub fn buffer_bits(&self) -> f64 {
        self.buffer_packets as f64 * self.packet_bits
    }
}

/// One-step transition probabilities of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionProbs {
    /// 0 → 1.
    pub p_up_from_empty: f64,
    /// 0 → 0.
    pub p_self_empty: f64,
    /// i → i+1 for 0 < i < L (source wins and succeeds).
    pub p_sas: f64,
    /// Source wins but the transmission times out.
    pub p_sas_fail: f64,
    /// i → i−1 for 0 < i ≤ L (relay wins and succeeds).
    pub p_sai: f64,
    /// Relay wins but the transmission times out.
    pub p_sai_fail: f64,
    /// i → i for 0 < i < L.
    pub p_l: f64,
    /// L → L.
    pub p_l_full: f64,
}

pub fn transition_probs(p: &LaserChainParams) -> Result<TransitionProbs> {
    p.validate()?;
    let denom = 1.0 + p.alpha;
    Ok(TransitionProbs {
        p_up_from_empty: 1.0 - p.rho_ss,
        p_self_empty: p.rho_ss,
        p_sas: (1.0 - p.rho_ss) / denom,
        p_sas_fail: p.rho_ss / denom,
        p_sai: p.alpha * (1.0 - p.rho_sg) / denom,
        p_sai_fail: p.alpha * p.rho_sg / denom,
        p_l: (p.rho_ss + p.alpha * p.rho_sg) / denom,
        p_l_full: (1.0 + p.alpha * p.rho_sg) / denom,
    })
}

/// Dense `(L+1)×(L+1)` row-stochastic transition matrix.
pub fn transition_matrix(p: &LaserChainParams) -> Result<DMatrix<f64>> {
    let t = transition_probs(p)?;
    let l = p.buffer_packets;
    let mut m = DMatrix::zeros(l + 1, l + 1);
    m[(0, 0)] = t.p_self_empty;
    m[(0, 1)] = t.p_up_from_empty;
    for i in 1..l {
        m[(i, i - 1)] = t.p_sai;
        m[(i, i)] = t.p_l;
        m[(i, i + 1)] = t.p_sas;
    }
    m[(l, l - 1)] = t.p_sai;
    m[(l, l)] = t.p_l_full;
    Ok(m)
}

/// Largest deviation of any row sum from one.
pub fn max_row_sum_error(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| (r.sum() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Steady-state buffer occupancy, `probs[i] = P(i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub probs: Vec<f64>,
}

impl StationaryDistribution {
    pub fn p0(&self) -> f64 {
        self.probs[0]
    }

    pub fn full(&self) -> f64 {
        *self
            .probs
            .last()
            .expect("distribution has at least two states")
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `Σ i·P(i)`, in packets.
    pub fn mean_occupancy(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| i as f64 * p)
            .sum()
    }

    pub fn max_abs_diff(&self, other: &StationaryDistribution) -> f64 {
        assert_eq!(self.probs.len(), other.probs.len());
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn total_variation(&self, other: &[f64]) -> f64 {
        assert_eq!(self.probs.len(), other.len());
        0.5 * self
            .probs
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

// Above this magnitude the product form risks overflow in f64.
const LINEAR_LOG_RANGE: f64 = 500.0;

/// Closed-form steady state.
///
/// `P(1) = (1−ρ_SS)/P_SA^I · P(0)` and `P(i+1) = (P_SA^s/P_SA^I)·P(i)` for
/// `1 ≤ i < L`, normalized to one. The unnormalized weights are built by the
/// recurrence, in log space when `L·|ln r|` is large, and normalized last.
pub fn stationary_closed_form(p: &LaserChainParams) -> Result<StationaryDistribution> {
    let t = transition_probs(p)?;
    if t.p_sai <= 0.0 {
        return Err(Error::DegenerateChain(
            "relay success probability is zero, the buffer never drains".into(),
        ));
    }
    let l = p.buffer_packets;
    let ln_first = t.p_up_from_empty.ln() - t.p_sai.ln();
    let ln_ratio = t.p_sas.ln() - t.p_sai.ln();
    let span = ln_first.abs() + (l - 1) as f64 * ln_ratio.abs();

    let mut w = Vec::with_capacity(l + 1);
    w.push(1.0);
    if span < LINEAR_LOG_RANGE {
        let ratio = t.p_sas / t.p_sai;
        let mut cur = t.p_up_from_empty / t.p_sai;
        w.push(cur);
        for _ in 1..l {
            cur *= ratio;
            w.push(cur);
        }
    } else {
        let logs: Vec<f64> = std::iter::once(0.0)
            .chain((1..=l).map(|i| ln_first + (i - 1) as f64 * ln_ratio))
            .collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        w = logs.into_iter().map(|x| (x - top).exp()).collect();
    }
    let norm: f64 = w.iter().sum();
    Ok(StationaryDistribution {
        probs: w.into_iter().map(|x| x / norm).collect(),
    })
}

/// Steady state by a dense linear solve of `π T = π, Σπ = 1`.
///
/// Shares nothing with [`stationary_closed_form`] beyond the transition
/// matrix: the last balance equation is replaced by the normalization row and
/// the system is solved by LU decomposition.
pub fn stationary_oracle(p: &LaserChainParams) -> Result<StationaryDistribution> {
    let m = transition_matrix(p)?;
    let n = m.nrows();
    let mut a = m.transpose() - DMatrix::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::DegenerateChain("balance equations are singular".into()))?;
    Ok(StationaryDistribution {
        probs: x.iter().copied().collect(),
    })
}

/// Outcome of the structural checks on the explicit transition matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnosis {
    pub state_count: usize,
    pub finite: bool,
    pub irreducible: bool,
    pub aperiodic: bool,
    pub max_row_sum_error: f64,
}

impl ChainDiagnosis {
    pub fn ergodic(&self) -> bool {
        self.finite && self.irreducible && self.aperiodic
    }
}

fn reachable_from(m: &DMatrix<f64>, start: usize, transpose: bool) -> Vec<bool> {
    let n = m.nrows();
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            let w = if transpose { m[(j, i)] } else { m[(i, j)] };
            if w > 0.0 && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

/// Checks finiteness, irreducibility (strong connectivity of the transition
/// graph) and aperiodicity (a self-loop in an irreducible chain).
pub fn chain_structure_check(p: &LaserChainParams) -> Result<ChainDiagnosis> {
    let m = transition_matrix(p)?;
    let n = m.nrows();
    let forward = reachable_from(&m, 0, false);
    let backward = reachable_from(&m, 0, true);
    let irreducible = forward.iter().zip(&backward).all(|(f, b)| *f && *b);
    let aperiodic = irreducible && (0..n).any(|i| m[(i, i)] > 0.0);
    Ok(ChainDiagnosis {
        state_count: n,
        finite: n == p.buffer_packets + 1,
        irreducible,
        aperiodic,
        max_row_sum_error: max_row_sum_error(&m),
    })
}

/// Spectral gap `1 − max(|λ₂|, |λ_min|)` of the transition matrix.
///
/// The chain is a reversible birth-death chain, so the tridiagonal matrix with
/// off-diagonals `sqrt(T[i][i+1]·T[i+1][i])` is symmetric and has the same
/// spectrum. The gap sets how fast empirical state frequencies settle.
pub fn spectral_gap(p: &LaserChainParams) -> Result<f64> {
    let t = transition_matrix(p)?;
    let n = t.nrows();
    let s = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            t[(i, i)]
        } else {
            (t[(i, j)] * t[(j, i)]).sqrt()
        }
    });
    let mut ev: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    let second = ev.iter().skip(1).fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(1.0 - second)
}

/// Throughput, mean queue and drop probability of one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfTriple {
    pub throughput_bps: f64,
    pub avg_queue_bits: f64,
    pub drop_prob: f64,
}

impl PerfTriple {
    pub fn new(throughput_bps: f64, avg_queue_bits: f64, drop_prob: f64) -> Self {
        Self {
            throughput_bps,
            avg_queue_bits,
            drop_prob,
        }
    }

    pub fn mean(a: &PerfTriple, b: &PerfTriple) -> PerfTriple {
        PerfTriple {
            throughput_bps: 0.5 * (a.throughput_bps + b.throughput_bps),
            avg_queue_bits: 0.5 * (a.avg_queue_bits + b.avg_queue_bits),
            drop_prob: 0.5 * (a.drop_prob + b.drop_prob),
        }
    }
}

/// `X · Σ i·P(i)` in bits.
pub fn avg_queue_bits_laser(p: &LaserChainParams) -> Result<f64> {
    let dist = stationary_closed_form(p)?;
    Ok(queue_bits_from(p, &dist))
}

/// Probability per observation epoch that an arriving packet finds the
/// buffer full: `P_SA^s · P(L)`.
pub fn drop_prob_laser(p: &LaserChainParams) -> Result<f64> {
    let t = transition_probs(p)?;
    let dist = stationary_closed_form(p)?;
    Ok(t.p_sas * dist.full())
}

/// Bits forwarded per epoch over mean epoch duration.
pub fn throughput_laser(p: &LaserChainParams) -> Result<f64> {
    let t = transition_probs(p)?;
    let dist = stationary_closed_form(p)?;
    Ok(throughput_from(p, &t, &dist))
}

fn queue_bits_from(p: &LaserChainParams, dist: &StationaryDistribution) -> f64 {
    (p.packet_bits * dist.mean_occupancy()).clamp(0.0, p.buffer_bits())
}

fn throughput_from(
    p: &LaserChainParams,
    t: &TransitionProbs,
    dist: &StationaryDistribution,
) -> f64 {
    let p0 = dist.p0();
    let busy = 1.0 - p0;
    let x = p.packet_bits;
    let data = busy * t.p_sai * x;
    let slot = p0 * (1.0 - p.rho_ss) * x / p.cap_ss_bps
        + p0 * p.rho_ss * p.timeout_ss_s
        + busy
            * (t.p_sas * x / p.cap_ss_bps
                + t.p_sas_fail * p.timeout_ss_s
                + t.p_sai * x / p.cap_sg_bps
                + t.p_sai_fail * p.timeout_sg_s);
    data / slot
}

/// Everything the laser branch produces, computed from one distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserAnalysis {
    pub transitions: TransitionProbs,
    pub distribution: StationaryDistribution,
    pub perf: PerfTriple,
}

pub fn analyze_laser(p: &LaserChainParams) -> Result<LaserAnalysis> {
    let transitions = transition_probs(p)?;
    let distribution = stationary_closed_form(p)?;
    let perf = PerfTriple {
        throughput_bps: throughput_from(p, &transitions, &distribution),
        avg_queue_bits: queue_bits_from(p, &distribution),
        drop_prob: (transitions.p_sas * distribution.full()).clamp(0.0, 1.0),
    };
    Ok(LaserAnalysis {
        transitions,
        distribution,
        perf,
    })
}

pub fn laser_metrics(p: &LaserChainParams) -> Result<PerfTriple> {
    Ok(analyze_laser(p)?.perf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    pub(crate) fn params(rho_ss: f64, rho_sg: f64, alpha: f64, l: usize) -> LaserChainParams {
        LaserChainParams {
            rho_ss,
            rho_sg,
            alpha,
            buffer_packets: l,
            packet_bits: 20e6,
            cap_ss_bps: 1e9,
            cap_sg_bps: 1e9,
            timeout_ss_s: 0.01,
            timeout_sg_s: 0.01,
        }
    }

    #[test]
    fn spectral_gap_small_chains() {
        let g = spectral_gap(&params(0.0, 0.0, 1.0, 1)).unwrap();
        assert_relative_eq!(g, 0.5, max_relative = 1e-12);
        // Eigenvalues of the L = 2 chain are 1, (sqrt 5 - 1)/4 and -(sqrt 5 + 1)/4.
        let g = spectral_gap(&params(0.0, 0.0, 1.0, 2)).unwrap();
        assert_relative_eq!(g, (3.0 - 5f64.sqrt()) / 4.0, max_relative = 1e-12);
    }

    #[test]
    fn transition_examples() {
        let t = transition_probs(&params(0.0, 0.0, 1.0, 3)).unwrap();
        assert_eq!(t.p_sas, 0.5);
        assert_eq!(t.p_sai, 0.5);
        assert_eq!(t.p_l, 0.0);
        assert_eq!(t.p_l_full, 0.5);

        let t = transition_probs(&params(0.1, 0.2, 2.0, 3)).unwrap();
        assert_relative_eq!(t.p_sas, 0.3, max_relative = 1e-14);
        assert_relative_eq!(t.p_sai, 8.0 / 15.0, max_relative = 1e-14);
        assert_relative_eq!(t.p_l, 1.0 / 6.0, max_relative = 1e-14);
        assert_relative_eq!(t.p_l_full, 7.0 / 15.0, max_relative = 1e-14);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(transition_probs(&params(1.0, 0.0, 1.0, 3)).is_err());
        assert!(transition_probs(&params(0.0, 1.0, 1.0, 3)).is_err());
        assert!(transition_probs(&params(0.0, 0.0, 0.0, 3)).is_err());
        assert!(transition_probs(&params(0.0, 0.0, 1.0, 0)).is_err());
        assert!(transition_probs(&params(f64::NAN, 0.0, 1.0, 3)).is_err());
        assert!(stationary_closed_form(&params(0.0, 1.0, 1.0, 3)).is_err());
    }

    #[test]
    fn tiny_relay_share_is_degenerate() {
        let p = params(0.0, 0.9, f64::from_bits(1), 3);
        assert!(matches!(
            stationary_closed_form(&p),
            Err(Error::DegenerateChain(_))
        ));
    }

    #[test]
    fn hand_computed_distributions() {
        let d = stationary_closed_form(&params(0.0, 0.0, 1.0, 1)).unwrap();
        assert_relative_eq!(d.probs[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(d.probs[1], 2.0 / 3.0, epsilon = 1e-15);
        let d = stationary_closed_form(&params(0.0, 0.0, 1.0, 2)).unwrap();
        for (got, want) in d.probs.iter().zip([0.2, 0.4, 0.4]) {
            assert_relative_eq!(*got, want, epsilon = 1e-15);
        }
        let o = stationary_oracle(&params(0.0, 0.0, 1.0, 1)).unwrap();
        assert_relative_eq!(o.probs[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(o.probs[1], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn hand_computed_metrics() {
        let p = params(0.0, 0.0, 1.0, 2);
        assert_relative_eq!(
            avg_queue_bits_laser(&p).unwrap(),
            24e6,
            max_relative = 1e-14
        );
        let p = params(0.0, 0.0, 1.0, 1);
        assert_relative_eq!(drop_prob_laser(&p).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(
            throughput_laser(&p).unwrap(),
            1e9 / 3.0,
            max_relative = 1e-14
        );
        // Half-rate downlink: D = X/3, T = 4X/(3C), so τ = C/4.
        let p = LaserChainParams {
            cap_sg_bps: 0.5e9,
            ..p
        };
        assert_relative_eq!(throughput_laser(&p).unwrap(), 0.25e9, max_relative = 1e-14);
    }

    #[test]
    fn structure_examples() {
        let d = chain_structure_check(&params(0.0, 0.0, 1.0, 3)).unwrap();
        assert!(d.finite && d.irreducible && d.aperiodic);
        assert_eq!(d.state_count, 4);
        let m = transition_matrix(&params(0.0, 0.0, 1.0, 3)).unwrap();
        assert_eq!(m[(3, 3)], 0.5);

        let d = chain_structure_check(&params(0.5, 0.3, 2.0, 5)).unwrap();
        assert!(d.aperiodic);
        let d = chain_structure_check(&params(0.2, 0.999, 1.0, 50)).unwrap();
        assert!(d.irreducible);
    }

    #[test]
    fn log_space_path_matches_oracle() {
        // ratio 100 over 200 states overflows the product form.
        let p = params(0.0, 0.9, 0.1, 200);
        let c = stationary_closed_form(&p).unwrap();
        let o = stationary_oracle(&p).unwrap();
        assert!(c.probs.iter().all(|x| x.is_finite()));
        assert!(c.max_abs_diff(&o) < 1e-10);
        assert!((c.total() - 1.0).abs() < 1e-12);
    }

    fn arb_params() -> impl Strategy<Value = LaserChainParams> {
        (0.0..0.99f64, 0.0..0.99f64, 0.1..10.0f64, 1usize..=200)
            .prop_map(|(a, b, c, l)| params(a, b, c, l))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn throughput_matches_renewal_reward(p in arb_params()) {
            // Each delivered packet costs 1 + d source successes (d drops per
            // accepted packet) and one relay success, each with its expected
            // outage timeouts.
            let t = transition_probs(&p).unwrap();
            let d = stationary_closed_form(&p).unwrap();
            let drops = t.p_sas * d.full() / ((1.0 - d.p0()) * t.p_sai);
            let source = p.packet_bits / p.cap_ss_bps + p.rho_ss / (1.0 - p.rho_ss) * p.timeout_ss_s;
            let relay = p.packet_bits / p.cap_sg_bps + p.rho_sg / (1.0 - p.rho_sg) * p.timeout_sg_s;
            let renewal = p.packet_bits / ((1.0 + drops) * source + relay);
            let tau = throughput_laser(&p).unwrap();
            prop_assert!((tau - renewal).abs() <= 1e-9 * renewal, "{tau} vs {renewal}");
        }

        #[test]
        fn closed_form_matches_oracle(p in arb_params()) {
            let c = stationary_closed_form(&p).unwrap();
            let o = stationary_oracle(&p).unwrap();
            prop_assert!(c.max_abs_diff(&o) < 1e-10);
            prop_assert!((c.total() - 1.0).abs() < 1e-12);
            prop_assert!(c.probs.iter().all(|x| *x >= 0.0));
        }

        #[test]
        fn rows_are_stochastic(p in arb_params()) {
            prop_assert!(max_row_sum_error(&transition_matrix(&p).unwrap()) < 1e-12);
            let t = transition_probs(&p).unwrap();
            prop_assert!((t.p_sas + t.p_sai + t.p_l - 1.0).abs() < 1e-15);
            prop_assert!((t.p_sai + t.p_l_full - 1.0).abs() < 1e-15);
        }

        #[test]
        fn geometric_ratio(p in arb_params()) {
            let t = transition_probs(&p).unwrap();
            let d = stationary_closed_form(&p).unwrap();
            let r = t.p_sas / t.p_sai;
            for i in 1..p.buffer_packets {
                if d.probs[i] > 1e-250 {
                    prop_assert!((d.probs[i + 1] / d.probs[i] - r).abs() <= 1e-12 * r);
                }
            }
        }

        #[test]
        fn drop_non_increasing_in_alpha_and_buffer(p in arb_params(), k in 1.01f64..3.0) {
            let base = drop_prob_laser(&p).unwrap();
            let faster = drop_prob_laser(&LaserChainParams { alpha: p.alpha * k, ..p }).unwrap();
            prop_assert!(faster <= base * (1.0 + 1e-12) + 1e-300);
            let bigger = drop_prob_laser(&LaserChainParams { buffer_packets: p.buffer_packets + 1, ..p }).unwrap();
            prop_assert!(bigger <= base * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn queue_bounded(p in arb_params()) {
            let a = avg_queue_bits_laser(&p).unwrap();
            prop_assert!(a >= 0.0 && a <= p.buffer_bits());
            let perf = laser_metrics(&p).unwrap();
            prop_assert!(perf.throughput_bps >= 0.0);
            prop_assert!((0.0..=1.0).contains(&perf.drop_prob));
        }
    }
}
