//! Elitism-based compact genetic algorithm.
//!
//! The population is represented by one inclusion probability per chunk.
//! Every generation samples a challenger, repairs it into the budget by
//! dropping its lowest-value chunks, and lets it compete with the persistent
//! elite. The probability vector moves `1 / population` towards the winner
//! wherever the two genomes differ, and the winner becomes the elite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::baselines::value_ranking;
use super::{Problem, StrategyKind, StrategyResult};
use crate::error::{Error, Result};
use crate::metrics::CacheDecision;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgaParams {
    #[serde(default = "default_population")]
    pub population: usize,
    #[serde(default = "default_generations")]
    pub generations: usize,
}

fn default_population() -> usize {
    32
}

fn default_generations() -> usize {
    200
}

impl Default for EgaParams {
    fn default() -> Self {
        Self {
            population: default_population(),
            generations: default_generations(),
        }
    }
}

impl EgaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::invalid(format!(
                "population must be >= 2, got {}",
                self.population
            )));
        }
        if self.generations < 1 {
            return Err(Error::invalid("generations must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct EgaOutcome {
    pub result: StrategyResult,
    /// Elite fitness after each generation.
    pub fitness_trajectory: Vec<f64>,
}

struct Genome {
    bits: Vec<bool>,
    fitness: f64,
}

struct Layout {
    /// First flat index of each video.
    offsets: Vec<usize>,
    sizes: Vec<u64>,
    /// Flat indices, lowest value first.
    drop_order: Vec<usize>,
}

impl Layout {
    fn new(problem: &Problem<'_>) -> Self {
        let videos = problem.catalog().videos();
        let mut offsets = Vec::with_capacity(videos.len());
        let mut sizes = Vec::new();
        let mut acc = 0;
        for m in videos {
            offsets.push(acc);
            acc += m.chunk_count;
            sizes.extend(std::iter::repeat_n(m.chunk_size, m.chunk_count));
        }
        let drop_order = value_ranking(problem)
            .into_iter()
            .rev()
            .map(|(i, x)| offsets[i] + x)
            .collect();
        Self {
            offsets,
            sizes,
            drop_order,
        }
    }

    fn repair(&self, bits: &mut [bool], budget: u64) {
        let mut bytes: u64 = bits
            .iter()
            .zip(&self.sizes)
            .filter(|(b, _)| **b)
            .map(|(_, s)| s)
            .sum();
        for &g in &self.drop_order {
            if bytes <= budget {
                break;
            }
            if bits[g] {
                bits[g] = false;
                bytes -= self.sizes[g];
            }
        }
    }

    fn decisions(&self, problem: &Problem<'_>, bits: &[bool]) -> Vec<CacheDecision> {
        problem
            .catalog()
            .videos()
            .iter()
            .zip(&self.offsets)
            .map(|(m, &off)| CacheDecision::from_bits(m.id, bits[off..off + m.chunk_count].to_vec()))
            .collect()
    }
}

pub fn ega(problem: &Problem<'_>, params: &EgaParams, seed: u64) -> Result<StrategyResult> {
    ega_detailed(problem, params, seed).map(|o| o.result)
}

pub fn ega_detailed(problem: &Problem<'_>, params: &EgaParams, seed: u64) -> Result<EgaOutcome> {
    params.validate()?;
    let layout = Layout::new(problem);
    let genes = layout.sizes.len();
    let step = 1.0 / params.population as f64;
    let mut probability = vec![0.5; genes];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let sample = |probability: &[f64], rng: &mut ChaCha8Rng| -> Result<Genome> {
        let mut bits: Vec<bool> = probability.iter().map(|&p| rng.gen::<f64>() < p).collect();
        layout.repair(&mut bits, problem.budget());
        let fitness = problem.objective(&layout.decisions(problem, &bits))?;
        Ok(Genome { bits, fitness })
    };

    let mut elite = sample(&probability, &mut rng)?;
    let mut fitness_trajectory = Vec::with_capacity(params.generations);
    for _ in 0..params.generations {
        let challenger = sample(&probability, &mut rng)?;
        let (winner, loser) = if challenger.fitness > elite.fitness {
            (challenger, elite)
        } else {
            (elite, challenger)
        };
        for ((p, &w), &l) in probability.iter_mut().zip(&winner.bits).zip(&loser.bits) {
            if w != l {
                *p = if w {
                    (*p + step).min(1.0)
                } else {
                    (*p - step).max(0.0)
                };
            }
        }
        elite = winner;
        fitness_trajectory.push(elite.fitness);
    }
    let decisions = layout.decisions(problem, &elite.bits);
    let result = StrategyResult::new(StrategyKind::Ega, problem, decisions, params.generations)?;
    Ok(EgaOutcome {
        result,
        fitness_trajectory,
    })
}
