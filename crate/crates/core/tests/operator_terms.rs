mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{dominated, nat, operator_pool, random_node};
use condreal::operator_terms::compose_operators;
use condreal::{FunctionOracle, Nat, OperatorTerm};

type Majorant = Arc<dyn Fn(&Nat) -> Nat + Send + Sync>;

fn random_majorant(rng: &mut ChaCha8Rng) -> Majorant {
    let (a, b, square) = (rng.gen_range(1u32..4), rng.gen_range(0u32..10), rng.gen_bool(0.5));
    Arc::new(move |x: &Nat| if square { x * x * a + b } else { x * a + b })
}

fn as_oracle(g: &Majorant) -> FunctionOracle {
    let g = g.clone();
    FunctionOracle::monotone(move |x| g(x))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn changes_past_the_modulus_are_invisible(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arity = rng.gen_range(1..=3);
        let term = OperatorTerm::new(arity, random_node(&mut rng, arity, 5, &operator_pool())).unwrap();
        let g = random_majorant(&mut rng);
        let x = nat(rng.gen_range(0..=20));
        let z = term.modulus(&as_oracle(&g), &x).unwrap();
        let base: Vec<FunctionOracle> = (0..arity).map(|_| dominated(g.clone(), rng.gen())).collect();
        let changed: Vec<FunctionOracle> = base
            .iter()
            .map(|f| {
                let (f, other, z) = (f.clone(), dominated(g.clone(), rng.gen()), z.clone());
                FunctionOracle::new(move |y| if *y <= z { f.call(y) } else { other.call(y) })
            })
            .collect();
        prop_assert_eq!(term.eval(&base, &x).unwrap(), term.eval(&changed, &x).unwrap());
    }

    #[test]
    fn modulus_term_agrees_with_direct_modulus(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arity = rng.gen_range(1..=3);
        let term = OperatorTerm::new(arity, random_node(&mut rng, arity, 5, &operator_pool())).unwrap();
        let g = as_oracle(&random_majorant(&mut rng));
        let omega = term.modulus_term().unwrap();
        prop_assert_eq!(omega.arity(), 1);
        for x in [0u64, 1, 7, 20] {
            let x = nat(x);
            prop_assert_eq!(omega.eval(std::slice::from_ref(&g), &x).unwrap(), term.modulus(&g, &x).unwrap());
        }
    }

    #[test]
    fn composition_is_evaluation_through_curried_inners(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool = operator_pool();
        let (m, n) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let outer = OperatorTerm::new(m, random_node(&mut rng, m, 3, &pool)).unwrap();
        let inners: Vec<OperatorTerm> = (0..m).map(|_| OperatorTerm::new(n, random_node(&mut rng, n, 3, &pool)).unwrap()).collect();
        let composed = compose_operators(&outer, &inners).unwrap();
        let g: Majorant = Arc::new(|x: &Nat| x * 2u32 + 3u32);
        let f: Vec<FunctionOracle> = (0..n).map(|_| dominated(g.clone(), rng.gen())).collect();
        let curried: Vec<FunctionOracle> = inners
            .iter()
            .map(|inner| {
                let (inner, f) = (inner.clone(), f.clone());
                FunctionOracle::new(move |y| inner.eval(&f, y).unwrap())
            })
            .collect();
        let x = nat(rng.gen_range(0..=10));
        prop_assert_eq!(composed.eval(&f, &x).unwrap(), outer.eval(&curried, &x).unwrap());
    }

    #[test]
    fn memoization_does_not_change_results(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arity = rng.gen_range(1..=3);
        let term = OperatorTerm::new(arity, random_node(&mut rng, arity, 5, &operator_pool())).unwrap();
        let g: Majorant = Arc::new(|x: &Nat| x * x + 1u32);
        let f: Vec<FunctionOracle> = (0..arity).map(|_| dominated(g.clone(), rng.gen())).collect();
        let memo: Vec<FunctionOracle> = f.iter().cloned().map(FunctionOracle::memoized).collect();
        let x = nat(rng.gen_range(0..=20));
        prop_assert_eq!(term.eval(&f, &x).unwrap(), term.eval(&memo, &x).unwrap());
        prop_assert_eq!(term.eval(&f, &x).unwrap(), term.eval(&f, &x).unwrap());
    }
}
