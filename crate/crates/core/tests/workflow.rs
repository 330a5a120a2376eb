mod common;

use sar_contrast::counterfactual::{parse_path_arg, TruncationCause};
use sar_contrast::explain::{render_explanation, Bucket, ExplainError};
use sar_contrast::solver::{solve, SolverConfig};
use sar_contrast::workflow::{evaluate_counterfactual, run_case_study, WorkflowError};
use sar_contrast::{Cell, TerminalCause};

#[test]
fn case_one_bundle() {
    let cs = run_case_study(1).unwrap();
    assert_eq!(cs.scenario.cells_of_interest[0].cell, Cell::new(1, 5));
    assert_eq!(cs.scenario.cells_of_interest[0].weight, 3.0);
    assert_eq!(cs.scenario.target_weight, 500.0);
    assert_eq!(cs.scenario.battery, 25);
    for (got, want) in cs.table.user.iter().zip([0.684, 0.296, 0.0]) {
        assert!((got - want).abs() <= 1e-3, "{got} vs {want}");
    }
    assert!((cs.user_return - 334.154).abs() < 1e-3);
    assert_eq!(cs.trace.true_target, Cell::new(5, 5));
    assert_eq!(cs.trace.terminal_cause, TerminalCause::TargetFound);
    let steps = cs.trace.steps.len() as i32 - 1;
    assert!((cs.trace.discounted_return - 500.0 * 0.95f64.powi(steps)).abs() < 1e-9);
    let text = cs.counterfactual.explanation_text.text();
    assert!(
        text.contains("has a much higher weighting than the cell of interest"),
        "{text}"
    );
    assert_eq!(cs.counterfactual.contrast_report.dominant_feature, Some(1));
    assert_eq!(
        cs.counterfactual.contrast_report.ratio_facts[0].bucket,
        Bucket::AlmostNever
    );
}

#[test]
fn case_two_bundle() {
    let cs = run_case_study(2).unwrap();
    let cf = &cs.counterfactual;
    assert_eq!(cf.feasibility_report.truncation_cause, TruncationCause::Battery);
    assert_eq!(cf.feasibility_report.truncated_at_cell, Some(Cell::new(4, 4)));
    assert_eq!(cf.contrast_report.infeasible_features, vec![0]);
    let text = cf.explanation_text.text();
    assert!(text
        .starts_with("The battery constraint makes it impossible for either policy to reach the cell of interest l_1"));
    assert!(text.contains("finds the target"));
    // the reference path's row, derived by hand: l_3 at t = 4, absorbed in the
    // four earlier cells; battery-terminal at [4,4] after six moves unless
    // absorbed in the six cells before it
    let g: f64 = 0.95;
    let user = &cf.mu_user.mu;
    assert!((user[2] - g.powi(4) * 21.0 / 25.0).abs() < 1e-12);
    assert!((user[3] - (0..=6).map(|t| g.powi(t)).sum::<f64>() / 25.0).abs() < 1e-12);
    assert!((user[4] - g.powi(6) * 19.0 / 25.0).abs() < 1e-12);
}

#[test]
fn counterfactual_value_identity_and_dominance() {
    let s = common::case1();
    let cfg = SolverConfig::new(0.5);
    let p = solve(&s, &cfg).unwrap();
    for arg in ["1,1;1,2;1,3;1,4;1,5;2,5;3,5;4,5;5,5", "1,1;2,1;3,1;3,2", "1,1;1,2"] {
        let r = evaluate_counterfactual(&s, &p, &parse_path_arg(arg).unwrap()).unwrap();
        let alpha = s.weights();
        assert!((r.value_user - alpha.dot(&r.mu_user.mu)).abs() < 1e-9);
        assert!((r.value_optimal - alpha.dot(&r.mu_optimal.mu)).abs() < 1e-9);
        assert!(r.value_optimal >= r.value_user - cfg.epsilon);
        assert_eq!(
            r,
            evaluate_counterfactual(&s, &p, &parse_path_arg(arg).unwrap()).unwrap()
        );
    }
}

#[test]
fn counterfactual_errors() {
    let s = common::case1();
    let p = solve(&s, &SolverConfig::new(0.5)).unwrap();
    for arg in ["1,1", "2,1;3,1", "1,1;3,1", "1,1;1,1"] {
        let err = evaluate_counterfactual(&s, &p, &parse_path_arg(arg).unwrap()).unwrap_err();
        assert!(
            matches!(err, WorkflowError::Path(_) | WorkflowError::Feature(_)),
            "{arg}: {err}"
        );
    }
    let cs = run_case_study(1).unwrap();
    assert!(matches!(
        render_explanation(&cs.counterfactual.contrast_report, "fancy"),
        Err(ExplainError::UnknownTemplateSet(_))
    ));
}
