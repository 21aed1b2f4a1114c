use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::env::{EnvSampler, Environment};
use crate::predictor::{Provenance, Transition};
use crate::proposer::{Proposer, ProposerError};
use crate::seed::{self, stream};

/// Where an episode's random stream comes from: `hash(master, tag, cycle, episode)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeSeeds {
    pub master: u64,
    pub cycle: usize,
}

/// Collects `episodes` full episodes, one transition per step.
///
/// With a proposer, each episode draws `ω` uniformly from `[-1, 1]^n` and
/// acts with `π(s, ω)` plus `N(0, σ_explore²)` noise, clamped to the action
/// box. Without one, actions are uniform over the box. Episodes are split
/// over `workers` threads; results do not depend on the worker count.
pub fn collect_transitions<S: EnvSampler>(
    sampler: &S,
    proposer: Option<&Proposer>,
    episodes: usize,
    sigma_explore: f64,
    seeds: EpisodeSeeds,
    workers: usize,
) -> Result<Vec<Transition>, ProposerError> {
    let workers = workers.clamp(1, episodes.max(1));
    if workers == 1 {
        return run_range(sampler, proposer, 0..episodes, sigma_explore, seeds);
    }
    let per = episodes.div_ceil(workers);
    let parts: Vec<Result<Vec<Transition>, ProposerError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let range = (w * per).min(episodes)..((w + 1) * per).min(episodes);
                scope.spawn(move || run_range(sampler, proposer, range, sigma_explore, seeds))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("collection worker panicked"))
            .collect()
    });
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn run_range<S: EnvSampler>(
    sampler: &S,
    proposer: Option<&Proposer>,
    range: std::ops::Range<usize>,
    sigma_explore: f64,
    seeds: EpisodeSeeds,
) -> Result<Vec<Transition>, ProposerError> {
    let tag = if proposer.is_some() {
        stream::PROPOSER_COLLECT
    } else {
        stream::RANDOM_COLLECT
    };
    let provenance = if proposer.is_some() {
        Provenance::ProposerDerived
    } else {
        Provenance::Random
    };
    let noise = Normal::new(0.0, sigma_explore.max(0.0)).expect("finite exploration noise");
    let mut out = Vec::new();
    for episode in range {
        let mut rng = seed::rng(seeds.master, &[tag, seeds.cycle as u64, episode as u64]);
        let mut env = sampler.sample(&mut rng);
        let bounds = env.action_bounds();
        let omega: Option<Vec<f64>> = proposer.map(|p| {
            (0..p.grid_dim())
                .map(|_| rng.random_range(-1.0..=1.0))
                .collect()
        });
        for _ in 0..env.horizon() {
            let s = env.observe();
            let a = match (proposer, &omega) {
                (Some(p), Some(w)) => {
                    let mut a = p.propose(&s, w)?;
                    if sigma_explore > 0.0 {
                        a.iter_mut().for_each(|x| *x += noise.sample(&mut rng));
                        bounds.clamp(&mut a);
                    }
                    a
                }
                _ => bounds.sample_uniform(&mut rng),
            };
            let next = env.step(&a, &mut rng)?;
            out.push(Transition::new(&s, &a, &next, provenance));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffnet::ArchConfig;
    use crate::env::{LocoSampler, ReacherSampler};

    const SEEDS: EpisodeSeeds = EpisodeSeeds {
        master: 42,
        cycle: 0,
    };

    #[test]
    fn zero_episodes_collect_nothing() {
        assert!(
            collect_transitions(&ReacherSampler::default(), None, 0, 0.1, SEEDS, 3)
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn loco_episodes_yield_horizon_transitions_each() {
        let t = collect_transitions(&LocoSampler::default(), None, 100, 0.1, SEEDS, 1).unwrap();
        assert_eq!(t.len(), 500);
        assert!(t.iter().all(|x| x.provenance == Provenance::Random));
    }

    #[test]
    fn noiseless_exploration_records_proposer_actions() {
        let sampler = ReacherSampler::default();
        let mut rng = seed::rng(1, &[]);
        let p = Proposer::build(
            &sampler.reference(),
            &ArchConfig {
                trunk: vec![16],
                head: vec![16],
                ..Default::default()
            },
            2,
            &mut rng,
        );
        let t = collect_transitions(&sampler, Some(&p), 20, 0.0, SEEDS, 1).unwrap();
        for (episode, tr) in t.iter().enumerate() {
            // replay the episode's stream up to the ω draw
            let mut r = seed::rng(SEEDS.master, &[stream::PROPOSER_COLLECT, 0, episode as u64]);
            let env = sampler.sample(&mut r);
            let w: Vec<f64> = (0..2).map(|_| r.random_range(-1.0..=1.0)).collect();
            let a = p.propose(&env.observe(), &w).unwrap();
            let recorded: Vec<f64> = tr.a.iter().map(|&x| x as f64).collect();
            let expected: Vec<f64> = a.iter().map(|&x| x as f32 as f64).collect();
            assert_eq!(recorded, expected);
            assert_eq!(tr.provenance, Provenance::ProposerDerived);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let s = LocoSampler::default();
        let one = collect_transitions(&s, None, 37, 0.1, SEEDS, 1).unwrap();
        let four = collect_transitions(&s, None, 37, 0.1, SEEDS, 4).unwrap();
        assert_eq!(one, four);
    }
}
