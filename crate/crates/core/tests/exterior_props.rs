use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use solvstruct::exterior::{
    hamiltonian_vector_field, lie_bracket, poisson_bracket, Chart, DifferentialForm, VectorField,
};
use solvstruct::symexpr::{is_zero, Expr};

fn config() -> Config {
    Config { cases: 24, rng_seed: RngSeed::Fixed(7), failure_persistence: None, ..Config::default() }
}

fn chart() -> Chart {
    Chart::standard(2, false)
}

/// Integer polynomials with exponents up to 2 per coordinate.
fn poly() -> impl Strategy<Value = Expr> {
    let names = chart().names().to_vec();
    prop::collection::vec((-3i64..=3, prop::collection::vec(0i64..=2, 4)), 1..5).prop_map(move |terms| {
        let monomial = |e: &[i64]| Expr::mul_all(names.iter().zip(e).map(|(n, k)| Expr::sym(n).powi(*k)).collect());
        Expr::add_all(terms.iter().map(|(c, e)| *c * monomial(e)).collect())
    })
}

fn one_form() -> impl Strategy<Value = DifferentialForm> {
    prop::collection::vec(poly(), 4).prop_map(|c| DifferentialForm::one_form(&chart(), c).unwrap())
}

fn field() -> impl Strategy<Value = VectorField> {
    prop::collection::vec(poly(), 4).prop_map(|c| VectorField::new(&chart(), c).unwrap())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn d_squared_vanishes(f in poly(), w in one_form()) {
        let c = chart();
        prop_assert!(DifferentialForm::exact(&c, &f).d().zero_verdict().is_zero());
        prop_assert!(w.d().d().zero_verdict().is_zero());
    }

    #[test]
    fn interior_is_an_antiderivation(a in one_form(), b in one_form(), x in field()) {
        let ab = a.wedge(&b).unwrap();
        let lhs = ab.interior(&x).unwrap();
        let left = a.interior(&x).unwrap().wedge(&b).unwrap();
        let right = a.wedge(&b.interior(&x).unwrap()).unwrap();
        let rhs = left.sub(&right).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().zero_verdict().is_zero());
    }

    #[test]
    fn poisson_antisymmetry_and_leibniz(f in poly(), g in poly(), h in poly()) {
        let c = chart();
        let fg = poisson_bracket(&f, &g, &c).unwrap();
        let gf = poisson_bracket(&g, &f, &c).unwrap();
        prop_assert!(is_zero(&(&fg + &gf)).is_zero());
        let lhs = poisson_bracket(&f, &(&g * &h), &c).unwrap();
        let rhs = &fg * &h + &g * poisson_bracket(&f, &h, &c).unwrap();
        prop_assert!(is_zero(&(lhs - rhs)).is_zero());
    }

    #[test]
    fn hamiltonian_fields_bracket(f in poly(), h in poly()) {
        let c = chart();
        let xf = hamiltonian_vector_field(&f, &c).unwrap();
        let xh = hamiltonian_vector_field(&h, &c).unwrap();
        let lhs = lie_bracket(&xf, &xh).unwrap();
        let rhs = hamiltonian_vector_field(&poisson_bracket(&f, &h, &c).unwrap(), &c).unwrap();
        prop_assert!(lhs.add(&rhs).unwrap().simplified().zero_verdict().is_zero());
    }
}
