//! Online schedule selection.
//!
//! Instances arrive one at a time and each one must be solved, with a
//! per-instance CPU cap `B`, before the next is seen. The learner keeps one
//! multiplicative-weights distribution per schedule slot over a geometric
//! grid of runs `(h, 2^i)`. A schedule is one draw per slot, concatenated.
//! With probability `gamma` a round explores: the instance's full profiles
//! stand in for probing, and every slot's every action is credited with its
//! marginal capped coverage per unit time after the prefix actually chosen
//! for the earlier slots. Rounds that do not explore leave the weights
//! alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coverage::{simulate_capped_time, success_given};
use crate::error::{Error, Result};
use crate::offline::greedy_schedule;
use crate::profile::{heuristic_count, HeuristicId, Instance, Time};
use crate::schedule::{ExecutionModel, Models, RunSegment, Schedule};

/// `ceil(log2(b))`, 0 for `b <= 1`.
pub fn ceil_log2(b: Time) -> u32 {
    if b <= 1 {
        0
    } else {
        64 - (b - 1).leading_zeros()
    }
}

/// All runs `(h, tau)` with `tau` a power of two not above the cap,
/// ordered by heuristic, then duration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionGrid {
    actions: Vec<RunSegment>,
}

impl ActionGrid {
    pub fn new(k: usize, cap: Time) -> Result<Self> {
        if cap < 1 {
            return Err(Error::invalid("cap B must be >= 1"));
        }
        let levels = cap.ilog2() + 1;
        let actions = (0..k)
            .flat_map(|h| (0..levels).map(move |i| RunSegment::new(HeuristicId(h), 1 << i)))
            .collect();
        Ok(ActionGrid { actions })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, i: usize) -> RunSegment {
        self.actions[i]
    }

    pub fn actions(&self) -> &[RunSegment] {
        &self.actions
    }
}

pub fn make_grid(k: usize, cap: Time) -> Result<ActionGrid> {
    ActionGrid::new(k, cap)
}

/// Hedge over the actions of one slot. Weights are kept in log space; the
/// selection distribution is their normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotLearner {
    log_weights: Vec<f64>,
}

impl SlotLearner {
    pub fn uniform(n: usize) -> Self {
        SlotLearner {
            log_weights: vec![0.0; n],
        }
    }

    /// Weights scaled so the largest is 1.
    pub fn weights(&self) -> Vec<f64> {
        let max = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.log_weights.iter().map(|&l| (l - max).exp()).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let w = self.weights();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let w = self.weights();
        let total: f64 = w.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (i, &x) in w.iter().enumerate() {
            if u < x {
                return i;
            }
            u -= x;
        }
        w.len() - 1
    }

    /// `w_a <- w_a * exp(eta * r_a)` for gains `r_a` in `[0, 1]`.
    pub fn reward(&mut self, gains: &[f64], eta: f64) {
        for (l, g) in self.log_weights.iter_mut().zip(gains) {
            *l += eta * g;
        }
    }

    #[cfg(test)]
    pub(crate) fn set_log_weights(&mut self, lw: Vec<f64>) {
        self.log_weights = lw;
    }
}

#[derive(Debug, Clone)]
pub struct OnlineConfig {
    /// Number of rounds `n`, known up front.
    pub horizon: usize,
    pub cap: Time,
    /// Defaults to `ceil(log2 B) + k`.
    pub slots: Option<usize>,
    /// `gamma = min(1, c * n^(-1/4))`.
    pub exploration_c: f64,
    /// Overrides the formula above; clamped to `[0, 1]`.
    pub gamma: Option<f64>,
    /// Defaults to `sqrt(8 ln(grid size) / n)`.
    pub eta: Option<f64>,
    /// Defaults to suspend-and-resume for every heuristic.
    pub models: Option<Models>,
}

impl OnlineConfig {
    pub fn new(horizon: usize, cap: Time) -> Self {
        OnlineConfig {
            horizon,
            cap,
            slots: None,
            exploration_c: 1.0,
            gamma: None,
            eta: None,
            models: None,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }
}

/// `min(1, c * n^(-1/4))`, clamped to `[0, 1]`.
pub fn exploration_probability(c: f64, n: usize) -> f64 {
    let n = n.max(1) as f64;
    (c * n.powf(-0.25)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone)]
pub struct OnlineState {
    grid: ActionGrid,
    slots: Vec<SlotLearner>,
    round: usize,
    horizon: usize,
    cap: Time,
    gamma: f64,
    eta: f64,
    models: Models,
}

impl OnlineState {
    pub fn new(k: usize, config: &OnlineConfig) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("online learner needs at least one heuristic"));
        }
        let grid = ActionGrid::new(k, config.cap)?;
        let n = config.horizon.max(1);
        let slots = config.slots.unwrap_or(ceil_log2(config.cap) as usize + k).max(1);
        let gamma = config
            .gamma
            .unwrap_or_else(|| exploration_probability(config.exploration_c, n))
            .clamp(0.0, 1.0);
        let eta = config
            .eta
            .unwrap_or_else(|| (8.0 * (grid.len() as f64).ln() / n as f64).sqrt());
        let models = config.models.clone().unwrap_or_else(|| Models::suspend_resume(k));
        if models.len() != k {
            return Err(Error::invalid("online models do not match the portfolio"));
        }
        Ok(OnlineState {
            slots: vec![SlotLearner::uniform(grid.len()); slots],
            grid,
            round: 0,
            horizon: n,
            cap: config.cap,
            gamma,
            eta,
            models,
        })
    }

    pub fn grid(&self) -> &ActionGrid {
        &self.grid
    }

    pub fn slots(&self) -> &[SlotLearner] {
        &self.slots
    }

    #[cfg(test)]
    pub(crate) fn slots_mut(&mut self) -> &mut [SlotLearner] {
        &mut self.slots
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn cap(&self) -> Time {
        self.cap
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn set_gamma(&mut self, gamma: f64) {
        self.gamma = gamma.clamp(0.0, 1.0);
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn models(&self) -> &Models {
        &self.models
    }

    /// Probe cost bookkept for one exploring round: `k * B * ceil(log2 B)`.
    pub fn exploration_cost(&self) -> Time {
        self.models.len() as Time * self.cap * ceil_log2(self.cap) as Time
    }
}

/// One round's choice: an action index per slot and whether to explore.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub actions: Vec<usize>,
    pub schedule: Schedule,
    pub explore: bool,
}

pub fn og_select<R: Rng + ?Sized>(state: &OnlineState, rng: &mut R) -> Selection {
    let actions: Vec<usize> = state.slots.iter().map(|s| s.sample(rng)).collect();
    let segments = actions.iter().map(|&a| state.grid.get(a)).collect();
    let schedule = Schedule::new(segments, state.models.clone()).expect("grid actions are valid");
    let explore = state.gamma > 0.0 && rng.random::<f64>() < state.gamma;
    Selection {
        actions,
        schedule,
        explore,
    }
}

/// Per-slot, per-action gains for one instance: marginal probability of
/// solving by the cap when the action is appended to the chosen prefix,
/// divided by the action's duration.
pub fn slot_rewards(state: &OnlineState, instance: &Instance, selection: &Selection) -> Vec<Vec<f64>> {
    let cap = state.cap;
    let k = state.models.len();
    let mut survival = 1.0;
    let mut elapsed = vec![0; k];
    let mut wall: Time = 0;
    let mut out = Vec::with_capacity(state.slots.len());
    for &chosen in &selection.actions {
        let gains = state
            .grid
            .actions()
            .iter()
            .map(|a| {
                if wall >= cap || survival == 0.0 {
                    return 0.0;
                }
                let h = a.heuristic;
                let window = a.tau.min(cap - wall);
                let p = success_given(instance.profile(h), state.models.get(h), elapsed[h.0], window);
                survival * p / a.tau as f64
            })
            .collect();
        out.push(gains);

        let seg = state.grid.get(chosen);
        let h = seg.heuristic;
        let model = state.models.get(h);
        survival *= 1.0 - success_given(instance.profile(h), model, elapsed[h.0], seg.tau);
        if model == ExecutionModel::SuspendResume {
            elapsed[h.0] += seg.tau;
        }
        wall = wall.saturating_add(seg.tau);
    }
    out
}

/// Applies an exploring round's feedback to every slot. Each slot's gains
/// are divided by that slot's largest gain, so its best action of the round
/// earns 1; a slot with no gain at all is left untouched.
pub fn learn(state: &mut OnlineState, instance: &Instance, selection: &Selection) {
    let rewards = slot_rewards(state, instance, selection);
    let eta = state.eta;
    for (slot, gains) in state.slots.iter_mut().zip(&rewards) {
        let top = gains.iter().fold(0.0_f64, |a, &b| a.max(b));
        if top > 0.0 {
            let scaled: Vec<f64> = gains.iter().map(|g| g / top).collect();
            slot.reward(&scaled, eta);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundOutcome {
    pub charged_time: Time,
    pub exploration_time: Time,
}

/// Runs the selected schedule on the instance (by sampling its profiles),
/// learns if the round explores, and advances the round counter.
pub fn observe_instance<R: Rng + ?Sized>(
    state: &mut OnlineState,
    instance: &Instance,
    selection: &Selection,
    rng: &mut R,
) -> RoundOutcome {
    let charged_time = simulate_capped_time(&selection.schedule, instance, state.cap, rng);
    let exploration_time = if selection.explore {
        learn(state, instance, selection);
        state.exploration_cost()
    } else {
        0
    };
    state.round += 1;
    RoundOutcome {
        charged_time,
        exploration_time,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineRow {
    pub round: usize,
    pub charged_time: Time,
    pub exploration_time: Time,
    pub cumulative_avg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineReport {
    pub rows: Vec<OnlineRow>,
    pub total_charged: Time,
    pub total_exploration: Time,
    /// Total expected capped time of the offline greedy schedule fitted to
    /// the whole stream.
    pub greedy_benchmark: f64,
    pub explored_rounds: usize,
}

impl OnlineReport {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn average_charged(&self) -> f64 {
        self.total_charged as f64 / self.n().max(1) as f64
    }

    pub fn greedy_average(&self) -> f64 {
        self.greedy_benchmark / self.n().max(1) as f64
    }

    /// Mean charged time over rounds `[from, to)`.
    pub fn window_average(&self, from: usize, to: usize) -> f64 {
        let rows = &self.rows[from..to];
        rows.iter().map(|r| r.charged_time as f64).sum::<f64>() / rows.len().max(1) as f64
    }

    pub fn total_cost(&self) -> Time {
        self.total_charged + self.total_exploration
    }
}

/// Runs the learner over `stream` with a ChaCha stream seeded by `seed`.
pub fn run_online(stream: &[Instance], config: &OnlineConfig, seed: u64) -> Result<OnlineReport> {
    let k = heuristic_count(stream);
    if stream.is_empty() {
        return Err(Error::invalid("empty instance stream"));
    }
    let mut state = OnlineState::new(k, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(stream.len());
    let (mut total_charged, mut total_exploration, mut explored) = (0, 0, 0);
    for (i, x) in stream.iter().enumerate() {
        let sel = og_select(&state, &mut rng);
        let out = observe_instance(&mut state, x, &sel, &mut rng);
        total_charged += out.charged_time;
        total_exploration += out.exploration_time;
        explored += usize::from(sel.explore);
        rows.push(OnlineRow {
            round: i + 1,
            charged_time: out.charged_time,
            exploration_time: out.exploration_time,
            cumulative_avg: total_charged as f64 / (i + 1) as f64,
        });
    }
    let (greedy, _) = greedy_schedule(stream, state.models(), config.cap);
    let greedy_benchmark = crate::coverage::evaluate(&greedy, stream, config.cap)?;
    Ok(OnlineReport {
        rows,
        total_charged,
        total_exploration,
        greedy_benchmark,
        explored_rounds: explored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::RuntimeProfile;

    #[test]
    fn grid_sizes() {
        assert_eq!(make_grid(2, 8).unwrap().len(), 8);
        assert_eq!(make_grid(1, 1).unwrap().len(), 1);
        assert_eq!(make_grid(3, 100).unwrap().len(), 21);
        assert!(make_grid(1, 0).is_err());
        let g = make_grid(2, 4).unwrap();
        let taus: Vec<(usize, Time)> = g.actions().iter().map(|a| (a.heuristic.0, a.tau)).collect();
        assert_eq!(taus, vec![(0, 1), (0, 2), (0, 4), (1, 1), (1, 2), (1, 4)]);
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(100), 7);
        assert_eq!(ceil_log2(128), 7);
    }

    #[test]
    fn fresh_state_is_uniform() {
        let st = OnlineState::new(2, &OnlineConfig::new(100, 8)).unwrap();
        assert_eq!(st.slots().len(), 3 + 2);
        for s in st.slots() {
            assert!(s.probabilities().iter().all(|&p| (p - 1.0 / 8.0).abs() < 1e-15));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(og_select(&st, &mut rng).schedule.len(), 5);
    }

    #[test]
    fn dominant_action_is_almost_always_chosen() {
        let mut st = OnlineState::new(2, &OnlineConfig::new(100, 8)).unwrap();
        for s in st.slots_mut() {
            let mut lw = vec![0.0; 8];
            lw[3] = (1e6f64).ln();
            s.set_log_weights(lw);
            // 7 others at weight 1 against 1e6
            assert!(s.probabilities()[3] >= 1.0 - 1e-5);
        }
    }

    #[test]
    fn gamma_one_always_explores() {
        let st = OnlineState::new(2, &OnlineConfig::new(100, 8).with_gamma(1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..50).all(|_| og_select(&st, &mut rng).explore));
        let st = OnlineState::new(2, &OnlineConfig::new(100, 8).with_gamma(0.0)).unwrap();
        assert!((0..50).all(|_| !og_select(&st, &mut rng).explore));
    }

    #[test]
    fn quiet_round_keeps_weights() {
        let mut st = OnlineState::new(2, &OnlineConfig::new(100, 8).with_gamma(0.0)).unwrap();
        let x = Instance::deterministic("x", &[Some(2), None], 8);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let before = st.slots().to_vec();
        let sel = og_select(&st, &mut rng);
        let out = observe_instance(&mut st, &x, &sel, &mut rng);
        assert_eq!(out.exploration_time, 0);
        assert_eq!(st.slots(), &before[..]);
    }

    #[test]
    fn exploring_credits_only_the_solver() {
        // only h0 solves (at 3); the chosen prefix is all h1, which never helps
        let st = OnlineState::new(2, &OnlineConfig::new(100, 8)).unwrap();
        let x = Instance::new("x", vec![RuntimeProfile::deterministic(3), RuntimeProfile::never(8)]);
        let h1_short = st
            .grid()
            .actions()
            .iter()
            .position(|a| a.heuristic.0 == 1 && a.tau == 1)
            .unwrap();
        let actions = vec![h1_short; st.slots().len()];
        let segments = actions.iter().map(|&a| st.grid().get(a)).collect();
        let sel = Selection {
            actions,
            schedule: Schedule::new(segments, st.models().clone()).unwrap(),
            explore: true,
        };
        let rewards = slot_rewards(&st, &x, &sel);
        for gains in &rewards {
            for (a, g) in st.grid().actions().iter().zip(gains) {
                if a.heuristic.0 == 1 {
                    assert_eq!(*g, 0.0);
                }
            }
            let h0: f64 = st
                .grid()
                .actions()
                .iter()
                .zip(gains)
                .filter(|(a, _)| a.heuristic.0 == 0)
                .map(|(_, g)| g)
                .sum();
            assert!(h0 > 0.0);
        }
        // (h0, 4) solves within the cap from wall time 0: 1/4
        let h0_4 = st
            .grid()
            .actions()
            .iter()
            .position(|a| a.heuristic.0 == 0 && a.tau == 4)
            .unwrap();
        assert_eq!(rewards[0][h0_4], 0.25);
    }

    #[test]
    fn charge_is_realized_time() {
        let mut st = OnlineState::new(1, &OnlineConfig::new(10, 16)).unwrap();
        let x = Instance::deterministic("x", &[Some(5)], 16);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sel = og_select(&st, &mut rng);
        let out = observe_instance(&mut st, &x, &sel, &mut rng);
        let expected = crate::coverage::expected_capped_time(&sel.schedule, &x, 16).unwrap();
        assert_eq!(out.charged_time as f64, expected);
        assert!(out.charged_time <= 16);
    }

    #[test]
    fn run_online_single_round_no_learning() {
        let xs = vec![Instance::deterministic("x", &[Some(5), Some(2)], 16)];
        let cfg = OnlineConfig::new(1, 16).with_gamma(0.0);
        let r = run_online(&xs, &cfg, 4).unwrap();
        assert_eq!(r.n(), 1);
        assert_eq!(r.total_exploration, 0);
        assert_eq!(r.explored_rounds, 0);
        assert_eq!(r.greedy_benchmark, 2.0);
    }
}
