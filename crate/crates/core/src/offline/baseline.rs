//! Reference portfolios: the fastest single heuristic and round-robin
//! time sharing.

use crate::profile::{HeuristicId, Instance, RuntimeProfile, Time};
use crate::schedule::{Models, RunSegment, Schedule};

/// E[min(cap, T)] of one run of a heuristic on its own.
pub fn solo_capped_time(profile: &RuntimeProfile, cap: Time) -> f64 {
    let solved: f64 = profile.solved_times().iter().map(|&t| t.min(cap) as f64).sum();
    let censored = profile.censored_count() as f64 * cap as f64;
    (solved + censored) / profile.len() as f64
}

/// Weighted sum of `h`'s solo capped times.
pub fn single_heuristic_cost(h: HeuristicId, instances: &[Instance], cap: Time) -> f64 {
    instances
        .iter()
        .map(|x| x.weight * solo_capped_time(x.profile(h), cap))
        .sum()
}

/// The heuristic with the lowest weighted solo cost; ties go to the lower
/// index. Panics on an empty portfolio.
pub fn best_single_heuristic(k: usize, instances: &[Instance], cap: Time) -> (HeuristicId, f64) {
    assert!(k > 0, "empty portfolio");
    (0..k)
        .map(HeuristicId)
        .map(|h| (h, single_heuristic_cost(h, instances, cap)))
        .fold(None, |best: Option<(HeuristicId, f64)>, cur| match best {
            Some(b) if b.1 <= cur.1 => Some(b),
            _ => Some(cur),
        })
        .expect("non-empty portfolio")
}

/// Round-robin over all heuristics in slices of `quantum` until the total
/// length reaches `length_cap`; the final slice is trimmed to fit. A single
/// heuristic gets one segment of the whole cap.
pub fn parallel_schedule(models: &Models, quantum: Time, length_cap: Time) -> Schedule {
    assert!(quantum >= 1, "quantum must be >= 1");
    let k = models.len();
    let mut s = Schedule::empty(models.clone());
    if k == 0 || length_cap == 0 {
        return s;
    }
    if k == 1 {
        s.push(RunSegment::new(HeuristicId(0), length_cap));
        return s;
    }
    let mut total = 0;
    'outer: loop {
        for h in 0..k {
            let tau = quantum.min(length_cap - total);
            s.push(RunSegment::new(HeuristicId(h), tau));
            total += tau;
            if total == length_cap {
                break 'outer;
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::expected_capped_time;

    fn two_by_three() -> Vec<Instance> {
        vec![
            Instance::deterministic("a", &[Some(2), Some(5)], 100),
            Instance::deterministic("b", &[Some(9), Some(1)], 100),
            Instance::deterministic("c", &[Some(9), Some(2)], 100),
        ]
    }

    #[test]
    fn best_single_on_two_by_three() {
        let xs = two_by_three();
        assert_eq!(single_heuristic_cost(HeuristicId(0), &xs, 10), 20.0);
        assert_eq!(best_single_heuristic(2, &xs, 10), (HeuristicId(1), 8.0));
    }

    #[test]
    fn best_single_ties_go_low() {
        let xs = vec![Instance::deterministic("a", &[Some(3), Some(3)], 10)];
        assert_eq!(best_single_heuristic(2, &xs, 10).0, HeuristicId(0));
        assert_eq!(best_single_heuristic(1, &xs, 10).0, HeuristicId(0));
    }

    #[test]
    fn censored_runs_cost_the_cap() {
        assert_eq!(solo_capped_time(&RuntimeProfile::never(50), 20), 20.0);
        assert_eq!(solo_capped_time(&RuntimeProfile::from_solved(&[4, 40]), 20), 12.0);
    }

    #[test]
    fn round_robin_layout() {
        let s = parallel_schedule(&Models::suspend_resume(2), 1, 4);
        let segs: Vec<(usize, Time)> = s.segments().iter().map(|s| (s.heuristic.0, s.tau)).collect();
        assert_eq!(segs, vec![(0, 1), (1, 1), (0, 1), (1, 1)]);
        let one = parallel_schedule(&Models::suspend_resume(1), 3, 10);
        assert_eq!(one.total_length(), 10);
        let trimmed = parallel_schedule(&Models::suspend_resume(3), 4, 10);
        assert_eq!(trimmed.total_length(), 10);
    }

    #[test]
    fn round_robin_on_three_step_instance() {
        let x = Instance::deterministic("x", &[Some(3), Some(3)], 100);
        let s = parallel_schedule(&Models::suspend_resume(2), 1, 20);
        assert_eq!(expected_capped_time(&s, &x, 100).unwrap(), 5.0);
        let swapped = Instance::deterministic("y", &[Some(4), Some(3)], 100);
        assert_eq!(expected_capped_time(&s, &swapped, 100).unwrap(), 6.0);
    }
}
