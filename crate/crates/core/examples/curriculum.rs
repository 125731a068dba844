//! Shows both curricula on book-flight: warm-starting pre-solves relevant
//! fields, goal simulation shrinks the goal to a K-element sub-goal. Also
//! prints how the schedule decays.

use anyhow::Result;
use qweblab::dom::match_count;
use qweblab::dqn::{schedule_tick, simulate_subgoal, warm_start, CurriculumMode, CurriculumSchedule};
use qweblab::env::{EpisodeConfig, WebEnv};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut env = WebEnv::new("book-flight-form", EpisodeConfig::default().with_seed(5))?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let task = env.sample_task();
    println!("instruction {:?}", task.instruction.fields);
    println!("relevant {:?}", task.goal.relevant);

    for p in [0.0, 0.5, 1.0] {
        let w = warm_start(&task, p, &mut rng)?;
        println!("warm start p={p}: {} of {} relevant already match", match_count(&w.initial, &w.goal)?, w.goal.relevant.len());
    }
    for k in 1..=task.goal.relevant.len() {
        let g = simulate_subgoal(&task, k, &mut rng)?;
        println!("goal simulation K={k}: relevant {:?}, instruction {:?}", g.goal.relevant, g.instruction.fields);
    }

    let warm = CurriculumSchedule { mode: CurriculumMode::WarmStart, p0: 0.85, decay: 0.9, decay_interval: 2500, limit: 60_000, ..CurriculumSchedule::default() };
    let sim = CurriculumSchedule { mode: CurriculumMode::GoalSim, decay_interval: 15_000, limit: 60_000, k0: 1, k_max: 3, ..CurriculumSchedule::default() };
    for step in (0..=70_000).step_by(10_000) {
        let (p, _) = schedule_tick(&warm, step);
        let (_, k) = schedule_tick(&sim, step);
        println!("step {step:>6}: warm-start p {p:.3}, goal-sim K {k}");
    }
    Ok(())
}
