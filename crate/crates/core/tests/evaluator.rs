mod common;

use std::f64::consts::{FRAC_PI_2, TAU};

use rydopt::evaluator::{estimate_objectives, BatchEvaluator};
use rydopt::problem::{BatchKey, DurationMode, GateProblem, Problem};
use rydopt::{DynamicsConfig, EvaluationBudget, PulseSchedule, SpectralNoiseModel};

fn schedules() -> Vec<PulseSchedule> {
    (0..5)
        .map(|k| {
            let phases = (0..50).map(|i| ((i * (k + 1)) as f64 * 0.31) % TAU).collect();
            PulseSchedule::new(phases, 1.0 + 0.5 * k as f64).unwrap()
        })
        .collect()
}

fn evaluator(workers: usize) -> BatchEvaluator {
    BatchEvaluator::new(
        SpectralNoiseModel::with_level(0.1).unwrap(),
        DynamicsConfig::new(FRAC_PI_2, 8).unwrap(),
        workers,
    )
    .unwrap()
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let budget = EvaluationBudget::new(40, 17).at_generation(4);
    let pop = schedules();
    let one: Vec<_> = evaluator(1).evaluate(&pop, &budget).into_iter().map(Result::unwrap).collect();
    let three: Vec<_> = evaluator(3).evaluate(&pop, &budget).into_iter().map(Result::unwrap).collect();
    assert_eq!(one, three);
}

#[test]
fn batch_matches_single_estimates() {
    let budget = EvaluationBudget::new(30, 5).at_generation(2);
    let pop = schedules();
    let eval = evaluator(2);
    let batch = eval.evaluate(&pop, &budget);
    for (i, (s, b)) in pop.iter().zip(batch).enumerate() {
        let single = estimate_objectives(s, eval.model(), eval.dynamics(), &budget, i as u64).unwrap();
        assert_eq!(single, b.unwrap());
    }
}

#[test]
fn standard_error_shrinks_as_one_over_root_n() {
    let s = &schedules()[1];
    let eval = evaluator(0);
    let se: Vec<f64> = [100, 400, 1600]
        .iter()
        .map(|&n| {
            estimate_objectives(s, eval.model(), eval.dynamics(), &EvaluationBudget::new(n, 8), 0)
                .unwrap()
                .infidelity_stderr
        })
        .collect();
    for w in se.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 2.0).abs() < 0.4, "stderrs {se:?}");
    }
}

#[test]
fn distinct_generations_draw_distinct_noise() {
    let s = &schedules()[0];
    let eval = evaluator(1);
    let a = estimate_objectives(s, eval.model(), eval.dynamics(), &EvaluationBudget::new(20, 1), 0).unwrap();
    let b = estimate_objectives(
        s,
        eval.model(),
        eval.dynamics(),
        &EvaluationBudget::new(20, 1).at_generation(1),
        0,
    )
    .unwrap();
    assert_ne!(a.infidelity, b.infidelity);
}

#[test]
fn common_random_numbers_pair_identical_candidates() {
    let problem = |crn| {
        GateProblem::new(evaluator(1), 50, DurationMode::Fixed(1.0), 25, 3)
            .unwrap()
            .with_common_random_numbers(crn)
    };
    let genome = vec![0.0; 50];
    let pair = vec![genome.clone(), genome];
    let shared = problem(true).evaluate(BatchKey::Generation(1), &pair);
    assert_eq!(shared[0].as_ref().unwrap(), shared[1].as_ref().unwrap());
    let independent = problem(false).evaluate(BatchKey::Generation(1), &pair);
    assert_ne!(independent[0].as_ref().unwrap(), independent[1].as_ref().unwrap());
}

#[test]
fn reevaluation_batches_use_fresh_noise() {
    let p = GateProblem::new(evaluator(1), 50, DurationMode::Fixed(1.0), 25, 3).unwrap();
    let g = vec![vec![0.0; 50]];
    let a = p.evaluate(BatchKey::Generation(4), &g).remove(0).unwrap();
    let b = p.evaluate(BatchKey::Reevaluation(4), &g).remove(0).unwrap();
    assert_ne!(a.objectives, b.objectives);
}

#[test]
fn variable_duration_genomes_carry_the_duration_last() {
    let p = GateProblem::new(evaluator(1), 50, DurationMode::Variable { min: 1.0, max: 5.0 }, 10, 3).unwrap();
    assert_eq!(p.bounds().dimension(), 51);
    assert_eq!(p.bounds().lower()[50], 1.0);
    let mut g = vec![0.5; 50];
    g.push(2.5);
    assert_eq!(p.schedule(&g).unwrap().duration(), 2.5);
    assert!(p.schedule(&g[..50]).is_err());
}

#[test]
fn reference_solution_performs_like_a_good_pulse() {
    let phases = common::reference_phases();
    assert_eq!(phases.len(), 50);
    let eval = evaluator(0);
    let s = PulseSchedule::new(phases, 1.0).unwrap();
    let e = estimate_objectives(&s, eval.model(), eval.dynamics(), &EvaluationBudget::new(400, 1), 0).unwrap();
    assert!(e.infidelity > 1e-3 && e.infidelity < 5e-2, "F = {}", e.infidelity);
    assert!(e.rydberg_time > 0.3 && e.rydberg_time < 0.7, "G = {}", e.rydberg_time);
}
