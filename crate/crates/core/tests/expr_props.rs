mod support;

use fracdelay::{bind_and_normalize, parse, CharFn, ParamBinding};
use proptest::prelude::*;
use rand::Rng;
use support::{eval_node, random_charfn, random_point, rng};

fn normalize(text: &str) -> CharFn {
    bind_and_normalize(&parse(text).unwrap(), &ParamBinding::new()).unwrap()
}

fn exponents(cf: &CharFn) -> Vec<(u64, Option<(u64, u64)>)> {
    let mut v: Vec<_> = cf
        .blocks()
        .iter()
        .flat_map(|b| {
            let d = b.delay.map(|d| (d.zeta.to_bits(), d.beta.to_bits()));
            b.poly
                .terms()
                .iter()
                .map(move |t| (t.exponent.to_bits(), d))
        })
        .collect();
    v.sort();
    v
}

fn coeff(rng: &mut impl Rng) -> String {
    let c: f64 = rng.random_range(0.1..4.0);
    format!("{}", (c * 100.0).round() / 100.0)
}

/// A product of sums whose expansion keeps P₀ dominant.
fn product_of_sums(rng: &mut impl Rng) -> String {
    let beta = [0.5, 1.0, 0.75][rng.random_range(0..3)];
    let mut factors = Vec::new();
    for _ in 0..rng.random_range(1..4) {
        let top: f64 = (rng.random_range(0.5..2.0f64) * 8.0).round() / 8.0;
        let mut items = vec![format!("{}*s^{}", coeff(rng), top)];
        for _ in 0..rng.random_range(0..3) {
            let e = (rng.random_range(0.0..top) * 8.0).floor() / 8.0;
            let item = match rng.random_range(0..3) {
                0 => format!("{}*s^{}", coeff(rng), e),
                1 => coeff(rng),
                _ => format!("{}*s^{}*exp(-{}*s^{})", coeff(rng), e, coeff(rng), beta),
            };
            let sign = if rng.random_bool(0.3) { " - " } else { " + " };
            items.push(format!("{sign}{item}"));
        }
        factors.push(format!("({})", items.concat()));
    }
    factors.join("*")
}

#[test]
fn example_forms_round_trip() {
    for text in [
        "s^(5*pi/6) + s^(pi/2) + s^(pi/3) + 1",
        "s + 21*(s^0.5+1)*exp(-s^0.5)",
        "s^1.5 - 1.5*s + 4*s^0.5 + 8 - 1.5*s*exp(-0.99*s)",
        "s^(5/6) + (s^0.5 + s^(1/3))*exp(-0.5*s) + exp(-s)",
    ] {
        let cf = normalize(text);
        assert_eq!(normalize(&cf.to_string()), cf, "{text}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn format_round_trips(seed in any::<u64>()) {
        let cf = random_charfn(&mut rng(seed));
        let back = normalize(&cf.to_string());
        prop_assert_eq!(exponents(&back), exponents(&cf));
        prop_assert_eq!(back, cf);
    }

    #[test]
    fn normalization_is_idempotent(seed in any::<u64>()) {
        let text = product_of_sums(&mut rng(seed));
        let Ok(once) = bind_and_normalize(&parse(&text).unwrap(), &ParamBinding::new()) else {
            return Err(TestCaseError::reject("not a valid characteristic function"));
        };
        let twice = normalize(&once.to_string());
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn normalized_form_matches_tree(seed in any::<u64>()) {
        let mut r = rng(seed);
        let text = product_of_sums(&mut r);
        let parsed = parse(&text).unwrap();
        let Ok(cf) = bind_and_normalize(&parsed, &ParamBinding::new()) else {
            return Err(TestCaseError::reject("not a valid characteristic function"));
        };
        for _ in 0..20 {
            let s = random_point(&mut r, (0.05, 5.0), 5.0);
            let direct = eval_node(&parsed.root, s, &|_| unreachable!());
            let got = cf.evaluate(s).unwrap();
            let err = (got - direct).norm() / direct.norm();
            prop_assert!(err < 1e-12, "{} at {}: {} vs {} ({:e})", text, s, got, direct, err);
        }
    }
}
