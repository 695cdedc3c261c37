use super::*;
use crate::numeric::{compare_trajectories, integrate_rk4, Rk4Options};
use crate::systems::{calogero_moser_2, cm_action_angle_truth, harmonic_oscillators, ho_action_angle_truth};

fn s(n: &str) -> Expr {
    Expr::sym(n)
}

fn same(a: &Expr, b: &Expr) -> bool {
    is_zero(&(a - b)).is_zero()
}

fn one_form(chart: &Chart, pairs: &[(&str, Expr)]) -> DifferentialForm {
    let mut w = DifferentialForm::zero(chart, 1);
    for (n, c) in pairs {
        w.insert(vec![chart.index_of(n).unwrap()], c.clone());
    }
    w
}

fn same_form(a: &DifferentialForm, b: &DifferentialForm) -> bool {
    a.sub(b).unwrap().zero_verdict().is_zero()
}

fn cm_set() -> PfaffianSet {
    let sys = calogero_moser_2(1.0).unwrap();
    compute_pfaffian_set(&integral_chart_structure(&sys, 60, 5).unwrap()).unwrap()
}

#[test]
fn cm_integral_chart_golden() {
    let set = cm_set();
    let d = -s("F1").powi(2) + 2 * s("F2");
    assert_eq!(set.lambda, (4 * &d).simplify());
    let c = &set.chart;
    let half_d = (2 * &d).recip();
    let golden = [
        one_form(c, &[("G1", Expr::rat(-1, 2)), ("G2", s("F1") * &half_d)]),
        one_form(c, &[("t", Expr::rat(-1, 2)), ("G2", half_d.clone())]),
        one_form(c, &[("F1", Expr::rat(1, 2))]),
        one_form(c, &[("F1", s("F1") * &half_d), ("F2", -&half_d)]),
    ];
    for (k, g) in golden.iter().enumerate() {
        assert!(same_form(&set.forms[k], g), "ω{} = {}", k + 1, set.forms[k]);
    }
    assert!(set.annihilation.iter().all(|v| v.is_zero()));
    assert!(set.duality().unwrap().iter().all(|r| r.passed));
    assert_eq!(set.form(3).to_string(), "(1/2) · dF1");
}

#[test]
fn cm_closure_and_scrambled_order() {
    let set = cm_set();
    let report = set.certify_closure(1e-9).unwrap();
    assert!(report.passed, "{report:?}");
    let mut scrambled = set.forms.clone();
    scrambled.reverse();
    assert!(!certify_triangular_closure(&scrambled, &set.samples, 1e-9).unwrap().passed);
}

#[test]
fn ho_golden_forms() {
    let sys = harmonic_oscillators(1, &[1.0], &[1.0]).unwrap();
    let set = compute_pfaffian_set(&original_chart_structure(&sys, 40, 3).unwrap()).unwrap();
    let c = &set.chart;
    let (q, p) = (s("q1"), s("p1"));
    let theta = (&q / &p).atan();
    let w1 = DifferentialForm::exact(c, &(s("t") - &theta));
    let w2 = DifferentialForm::exact(c, &(-(Expr::rat(1, 2) * (p.powi(2) + q.powi(2)))));
    assert!(same_form(&set.forms[0], &w1), "{}", set.forms[0]);
    assert!(same_form(&set.forms[1], &w2), "{}", set.forms[1]);
    assert!(set.certify_closure(1e-9).unwrap().passed);
}

#[test]
fn ho_two_oscillators_golden_forms() {
    let (m, cs) = ([1.0, 1.0], [1.0, 2.0]);
    let sys = harmonic_oscillators(2, &m, &cs).unwrap();
    let set = compute_pfaffian_set(&original_chart_structure(&sys, 40, 3).unwrap()).unwrap();
    let chart = &set.chart;
    for k in 1..=2usize {
        let (q, p) = (s(&format!("q{k}")), s(&format!("p{k}")));
        let c = Expr::int(cs[k - 1] as i64);
        let sk = if k % 2 == 0 { 1 } else { -1 };
        let angle = (&c * &q / &p).atan();
        let wk = DifferentialForm::exact(chart, &(-sk * s("t") + sk * &angle / &c));
        let top = (p.powi(2) + (&c * &q).powi(2)) / (2 * &c);
        let sn = if (2 + k + 1) % 2 == 0 { 1 } else { -1 };
        let wnk = DifferentialForm::exact(chart, &(sn * top));
        assert!(same_form(set.form(k), &wk), "ω{k} = {}", set.form(k));
        assert!(same_form(set.form(2 + k), &wnk), "ω{} = {}", 2 + k, set.form(2 + k));
    }
}

#[test]
fn dependent_fields_rejected() {
    let chart = Chart::new(&["t", "x"], Some(0)).unwrap();
    let a = VectorField::coordinate(&chart, 0);
    let sc = StructureChart {
        chart: chart.clone(),
        embedding: vec![s("t"), s("x")],
        fields: vec![a.clone(), a],
        labels: vec!["A".into(), "Y1".into()],
        tau: DifferentialForm::volume(&chart),
        samples: vec![vec![0.1, 0.2]],
    };
    assert!(matches!(compute_pfaffian_set(&sc), Err(PfaffianError::LambdaZero)));
}

#[test]
fn action_angle_template() {
    let truth = cm_action_angle_truth(1.0);
    let f = vec![2 * s("P1"), 2 * s("P1").powi(2) + Expr::rat(1, 2) * (4 * s("P2")).exp()];
    let sys = action_angle_system("cm", truth.hamiltonian.clone(), f);
    let set = action_angle_pfaffians(&sys).unwrap();
    let c = &set.chart;
    let w1 = one_form(c, &[("Q1", Expr::rat(-1, 2)), ("Q2", s("P1") * (-4 * s("P2")).exp())]);
    let w2 = one_form(c, &[("t", Expr::rat(-1, 2)), ("Q2", Expr::rat(1, 2) * (-4 * s("P2")).exp())]);
    assert!(same_form(&set.forms[0], &w1), "{}", set.forms[0]);
    assert!(same_form(&set.forms[1], &w2), "{}", set.forms[1]);
    assert!(same_form(&set.forms[2], &one_form(c, &[("P1", Expr::one())])));
    assert!(same_form(&set.forms[3], &one_form(c, &[("P2", Expr::int(-1))])));
    assert!(set.annihilation.iter().all(|v| v.is_zero()));
    assert!(set.forms[2..].iter().all(|w| w.d().zero_verdict().is_zero()));

    let ho = action_angle_system("ho", s("P1") * 3, vec![s("P1") * 3]);
    let set = action_angle_pfaffians(&ho).unwrap();
    let w = one_form(&set.chart, &[("t", Expr::one()), ("Q1", Expr::rat(-1, 3))]);
    assert!(same_form(&set.forms[0], &w));

    let singular = action_angle_system("bad", s("P1"), vec![Expr::int(2)]);
    assert!(matches!(action_angle_pfaffians(&singular), Err(PfaffianError::SingularJacobian)));
}

#[test]
fn agrees_with_generic_construction() {
    let f = vec![s("P1") + s("P2").powi(2), s("P1") * s("P2")];
    let sys = action_angle_system("poly", s("P1").powi(2) + s("P2"), f);
    let closed = action_angle_pfaffians(&sys).unwrap();
    let box_ = vec![(0.5, 1.5); 4];
    let sys = sys.with_box(box_);
    let generic = compute_pfaffian_set(&original_chart_structure(&sys, 30, 9).unwrap()).unwrap();
    assert!(same(&closed.lambda, &generic.lambda));
    for (a, b) in closed.forms.iter().zip(&generic.forms) {
        assert!(same_form(a, b), "{a} vs {b}");
    }
}

#[test]
fn cm_descent_chain() {
    let set = cm_set();
    let r = descend_quadratures(&set).unwrap();
    assert!(r.is_complete(), "{:?}", r.halted);
    let d = -s("F1").powi(2) + 2 * s("F2");
    let (c2, c3, c4) = (s("C2"), s("C3"), s("C4"));
    assert!(same(r.integral(4).unwrap(), &(Expr::rat(-1, 4) * d.ln())));
    assert!(same(r.integral(3).unwrap(), &(Expr::rat(1, 2) * s("F1"))));
    let i2 = Expr::rat(-1, 2) * s("t") + Expr::rat(1, 2) * (4 * &c4).exp() * s("G2");
    assert!(same(r.integral(2).unwrap(), &i2), "{}", r.integral(2).unwrap());
    assert!(same(r.integral(1).unwrap(), &(&c3 * s("t") - Expr::rat(1, 2) * s("G1"))), "{}", r.integral(1).unwrap());
    let elim: BTreeMap<_, _> = r.eliminations.iter().cloned().collect();
    assert!(same(&elim["F1"], &(2 * &c3)));
    assert!(same(&elim["F2"], &(Expr::rat(1, 2) * (-4 * &c4).exp() + 2 * c3.powi(2))));
    assert!(same(&elim["G2"], &((-4 * &c4).exp() * (s("t") + 2 * &c2))));
    assert!(same(&elim["G1"], &(2 * (&c3 * s("t") - s("C1")))));
    assert!(serde_json::to_string(&r).is_ok());
}

#[test]
fn cm_descent_reconstructs_rk4() {
    let sys = calogero_moser_2(1.0).unwrap();
    let r = descend_quadratures(&cm_set()).unwrap();
    let x0 = [1.0, -1.0, 0.0, 0.0];
    let traj = r.reconstruct(&sys, &x0, 0.0, 2.0, 1e-2).unwrap();
    let rk = integrate_rk4(&sys, &x0, 0.0, 2.0, 1e-3, Rk4Options::default()).unwrap();
    let err = compare_trajectories(&rk, &traj, &traj.times).unwrap();
    assert!(err < 1e-8, "{err}");
}

#[test]
fn ho_descent_uses_side_relations() {
    let sys = harmonic_oscillators(1, &[1.0], &[1.0]).unwrap();
    let set = compute_pfaffian_set(&original_chart_structure(&sys, 40, 3).unwrap()).unwrap();
    let r = descend_quadratures(&set).unwrap();
    assert!(r.is_complete(), "{:?}", r.halted);
    assert!(r.levels[0].side_relation.is_some());
    assert!(r.periods.contains_key(&1));
    let x0 = [0.0, 1.0];
    let traj = r.reconstruct(&sys, &x0, 0.0, 4.0, 1e-2).unwrap();
    for (t, x) in traj.times.iter().zip(&traj.states) {
        assert!((x[0] - t.sin()).abs() < 1e-9 && (x[1] - t.cos()).abs() < 1e-9);
    }
}

#[test]
fn linear_flow() {
    let ho = action_angle_system("ho", 2 * s("P1") + 5 * s("P2"), vec![2 * s("P1"), 5 * s("P2")]);
    let r = recover_linear_flow(&ho, &[0.0, 0.0], 1.0, &[1.0, 1.0]).unwrap();
    assert!(r.passed());
    assert!((r.values[0] - 2.0).abs() < 1e-12 && (r.values[1] - 5.0).abs() < 1e-12);
    assert!(r.parity.stated_verdict.is_zero() && r.parity.derived_verdict.is_zero());
    let r = recover_linear_flow(&ho, &[0.3, -0.7], 0.0, &[1.0, 1.0]).unwrap();
    assert!((r.values[0] - 0.3).abs() < 1e-12 && (r.values[1] + 0.7).abs() < 1e-12);

    let cm = action_angle_system(
        "cm",
        s("P1").powi(2) + Expr::rat(1, 4) * (4 * s("P2")).exp(),
        vec![2 * s("P1"), 2 * s("P1").powi(2) + Expr::rat(1, 2) * (4 * s("P2")).exp()],
    );
    let r = recover_linear_flow(&cm, &[0.1, 0.2], 0.5, &[0.3, -0.2]).unwrap();
    assert!(r.passed());
    assert!(same(&r.det_delta, &-&r.lambda));

    let bad = action_angle_system("bad", s("P1").powi(2), vec![s("P1").powi(2), s("P2")]);
    assert!(matches!(recover_linear_flow(&bad, &[0.0, 0.0], 1.0, &[0.0, 1.0]), Err(PfaffianError::SingularDelta)));
}

#[test]
fn cm_action_angle_extraction() {
    let sys = calogero_moser_2(1.0).unwrap();
    let set = cm_set();
    let r = descend_quadratures(&set).unwrap();
    let aa = extract_action_angle(&sys, &r, &set).unwrap();
    assert!(aa.passed, "{aa:?}");
    let truth = cm_action_angle_truth(1.0);
    for k in 0..2 {
        assert!(same(&aa.actions[k], &truth.actions[k]), "{}", aa.actions[k]);
        assert!(same(&aa.angles[k], &truth.angles[k]), "{}", aa.angles[k]);
    }
    assert!(same(&aa.hamiltonian, &truth.hamiltonian));
}

#[test]
fn ho_action_angle_extraction() {
    let (m, cs) = ([1.0, 1.0], [1.0, 2.0]);
    let sys = harmonic_oscillators(2, &m, &cs).unwrap();
    let set = compute_pfaffian_set(&original_chart_structure(&sys, 40, 3).unwrap()).unwrap();
    let r = descend_quadratures(&set).unwrap();
    let aa = extract_action_angle(&sys, &r, &set).unwrap();
    assert!(aa.passed, "{aa:?}");
    let truth = ho_action_angle_truth(&m, &cs);
    for k in 0..2 {
        assert!(same(&aa.actions[k], &truth.actions[k]), "{}", aa.actions[k]);
        assert!(same(&aa.angles[k], &truth.angles[k]), "{}", aa.angles[k]);
    }
    assert!(same(&aa.hamiltonian, &truth.hamiltonian));
}
