use super::*;
use crate::constraintgen::{UseExpr, UseVar};

fn v(n: u32) -> TypeExpr {
    TypeVar::Gen(n).into()
}

fn r(n: u32) -> UseExpr {
    UseExpr::var(UseVar(n))
}

fn one_plus(n: u32) -> UseExpr {
    UseExpr::one_plus(UseVar(n))
}

fn twice(n: u32) -> UseExpr {
    UseExpr::twice(UseVar(n))
}

fn lit(u: Use) -> UseExpr {
    UseExpr::lit(u)
}

fn teq(a: TypeExpr, b: TypeExpr) -> Constraint {
    Constraint::TEq(a, b)
}

fn comb(a: TypeExpr, b: TypeExpr, c: TypeExpr) -> Constraint {
    Constraint::TComb(a, b, c)
}

fn inst(a: u32, b: u32) -> TypeExpr {
    VarSupply::new().inst(&TypeVar::Gen(a), &TypeVar::Gen(b)).into()
}

const ALPHA: u32 = 0;
const ALPHA1: u32 = 1;
const ALPHA2: u32 = 2;
const BETA1: u32 = 3;
const BETA2: u32 = 4;
const GAMMA1: u32 = 5;
const GAMMA2: u32 = 6;
const DELTA: u32 = 7;

/// A pair of channels, one read and one written.
fn pair_example() -> ConstraintSet {
    [
        comb(v(ALPHA), v(ALPHA1), v(ALPHA2)),
        teq(v(ALPHA1), TypeExpr::prod(v(BETA1), v(BETA2))),
        teq(v(ALPHA2), TypeExpr::prod(v(GAMMA1), v(GAMMA2))),
        teq(v(BETA1), TypeExpr::chan(one_plus(1), twice(2), v(DELTA))),
        teq(v(GAMMA2), TypeExpr::chan(twice(3), one_plus(4), TypeExpr::Int)),
        Constraint::un(v(BETA2)),
        Constraint::un(v(GAMMA1)),
        teq(v(DELTA), TypeExpr::Int),
    ]
    .into_iter()
    .collect()
}

#[test]
fn closure_of_pair_example() {
    let c = pair_example();
    let s = close(&c).unwrap();
    let coh = |n| s.representative(Relation::Coh, &v(n)).unwrap();
    for n in [ALPHA, ALPHA1, ALPHA2] {
        assert_eq!(coh(n), TypeExpr::prod(v(BETA1), v(BETA2)));
    }
    assert_eq!(coh(GAMMA1), TypeExpr::chan(one_plus(1), twice(2), v(DELTA)));
    assert_eq!(coh(GAMMA2), TypeExpr::chan(twice(3), one_plus(4), TypeExpr::Int));
    assert_eq!(coh(DELTA), TypeExpr::Int);
    let cls = classify_variables(&s);
    for n in [ALPHA, BETA2, GAMMA1] {
        let x = TypeVar::Gen(n);
        assert!(cls.defined_coh.contains(&x) && cls.undefined_eq.contains(&x));
    }
    assert!(cls.undefined_coh.is_empty());
}

#[test]
fn completion_of_pair_example() {
    let c = pair_example();
    let s = close(&c).unwrap();
    let mut supply = VarSupply::new();
    supply.reserve(&c);
    let cbar = complete(&c, &s, &mut supply);
    let added: Vec<Constraint> = cbar.iter().skip(c.len()).cloned().collect();
    let expected = vec![
        teq(v(ALPHA), inst(ALPHA, ALPHA)),
        teq(
            inst(ALPHA, ALPHA),
            TypeExpr::prod(inst(ALPHA, BETA1), inst(ALPHA, BETA2)),
        ),
        teq(inst(ALPHA, BETA1), TypeExpr::chan(r(5), r(6), v(DELTA))),
        teq(inst(ALPHA, BETA2), TypeExpr::chan(r(7), r(8), TypeExpr::Int)),
        teq(v(BETA2), inst(BETA2, BETA2)),
        teq(inst(BETA2, BETA2), TypeExpr::chan(r(9), r(10), TypeExpr::Int)),
        teq(v(GAMMA1), inst(GAMMA1, GAMMA1)),
        teq(inst(GAMMA1, GAMMA1), TypeExpr::chan(r(11), r(12), v(DELTA))),
    ];
    assert_eq!(added, expected);

    let sbar = close(&cbar).unwrap();
    let mut got = extract_use_constraints(&sbar);
    got.sort();
    let mut want = vec![
        UseEq::new(r(5), one_plus(1).plus(&r(11))),
        UseEq::new(r(6), twice(2).plus(&r(12))),
        UseEq::new(r(7), r(9).plus(&twice(3))),
        UseEq::new(r(8), r(10).plus(&one_plus(4))),
        UseEq::new(r(11), twice(11)),
        UseEq::new(r(12), twice(12)),
        UseEq::new(r(9), twice(9)),
        UseEq::new(r(10), twice(10)),
    ];
    want.sort();
    assert_eq!(got, want);

    let a = solve_uses(&got, false).unwrap();
    for (k, u) in &a {
        let expect = if k.0 == 5 || k.0 == 8 { Use::One } else { Use::Zero };
        assert_eq!(*u, expect, "{k}");
    }
}

#[test]
fn pair_example_solution_verifies() {
    let c = pair_example();
    let mut store = TypeStore::new();
    let mut supply = VarSupply::new();
    let sigma = solve(&c, &mut store, &mut supply).unwrap();
    assert_eq!(crate::typecheck::verify_solution(&mut store, &c, &sigma), Ok(true));
    let alpha = sigma.type_bindings[&TypeVar::Gen(ALPHA)];
    assert_eq!(store.render(alpha), "[int]{1,0} * [int]{0,1}");
}

#[test]
fn clash_and_empty() {
    let c: ConstraintSet = [teq(
        TypeExpr::Int,
        TypeExpr::chan(lit(Use::Zero), lit(Use::Zero), TypeExpr::Int),
    )]
    .into_iter()
    .collect();
    let err = close(&c).unwrap_err();
    assert_eq!(err.to_string(), "type clash: int ~ [int]{0,0} (int vs channel)");
    let s = close(&ConstraintSet::new()).unwrap();
    assert_eq!(classify_variables(&s), Classification::default());
}

fn alternating_streams() -> ConstraintSet {
    let zero = || lit(Use::Zero);
    let ch = |a: UseExpr, b: UseExpr| TypeExpr::chan(a, b, TypeExpr::Int);
    let (a, b, g) = (0, 1, 2);
    [
        Constraint::TCoh(v(a), TypeExpr::prod(ch(zero(), zero()), v(a))),
        teq(
            v(b),
            TypeExpr::prod(ch(zero(), one_plus(1)), TypeExpr::prod(ch(zero(), twice(2)), v(b))),
        ),
        teq(
            v(g),
            TypeExpr::prod(ch(zero(), zero()), TypeExpr::prod(ch(zero(), zero()), v(g))),
        ),
        comb(v(a), v(b), v(g)),
    ]
    .into_iter()
    .collect()
}

#[test]
fn completion_loses_precision_on_alternating_streams() {
    let c = alternating_streams();
    let ch = |a: UseExpr, b: UseExpr| TypeExpr::chan(a, b, TypeExpr::Int);
    let mut supply = VarSupply::new();
    supply.reserve(&c);
    let completed = complete(&c, &close(&c).unwrap(), &mut supply);
    let added: Vec<_> = completed.iter().skip(c.len()).cloned().collect();
    assert_eq!(added[1], teq(inst(0, 0), TypeExpr::prod(ch(r(3), r(4)), inst(0, 0))));
    let uses = solve_uses(&extract_use_constraints(&close(&completed).unwrap()), false).unwrap();
    assert_eq!(uses[&UseVar(4)], Use::Omega);
    assert_eq!(uses[&UseVar(3)], Use::Zero);
}

#[test]
fn propagation_keeps_alternating_streams_precise() {
    let c = alternating_streams();
    let mut store = TypeStore::new();
    let mut supply = VarSupply::new();
    let (sigma, _) = solve_with(&c, &mut store, &mut supply, SolveOptions::default()).unwrap();
    assert_eq!(crate::typecheck::verify_solution(&mut store, &c, &sigma), Ok(true));
    assert_eq!(
        store.render(sigma.type_bindings[&TypeVar::Gen(0)]),
        "rec X. [int]{0,1} * [int]{0,0} * X"
    );
}
