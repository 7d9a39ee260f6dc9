use kernel_reduction::{
    build_sequence, build_space, select_index, Complex64, GridFunction, GridKernel, SequenceParams,
};
use proptest::prelude::*;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `‖K R‖ + ‖K* R‖` for the level-`k` Rademacher function of `[0, 1)` on a
/// grid of `2^depth` cells with `K(x, y) = exp(xy)`, by direct summation.
fn dense_level_sum(depth: u32, level: u32) -> f64 {
    let cells = 1usize << depth;
    let h = 1.0 / cells as f64;
    let width = cells >> level;
    let r = |j: usize| if (j / width) % 2 == 0 { 1.0 } else { -1.0 };
    let x = |i: usize| (i as f64 + 0.5) * h;
    let mut fwd = 0.0;
    let mut adj = 0.0;
    for i in 0..cells {
        let (mut a, mut b) = (0.0, 0.0);
        for j in 0..cells {
            a += (x(i) * x(j)).exp() * r(j);
            b += (x(j) * x(i)).exp() * r(j);
        }
        fwd += (a * h).powi(2) * h;
        adj += (b * h).powi(2) * h;
    }
    fwd.sqrt() + adj.sqrt()
}

#[test]
fn exp_kernel_level_sums_match_frozen_oracle() {
    // Independent double-precision evaluation at depth 12.
    let frozen = [0.4295082071697481, 0.21691759988659415, 0.1087341899333495];
    for (k, want) in frozen.iter().enumerate() {
        let got = dense_level_sum(12, k as u32 + 1);
        assert!((got - want).abs() < 1e-12, "level {}: {got} vs {want}", k + 1);
    }
    let space = build_space(12).unwrap();
    let kernel = GridKernel::from_fn(space, |x, y| c((x * y).exp()));
    let choice = select_index(&kernel, &space.whole(), 4, 12).unwrap();
    assert_eq!(choice.level, 2);
    assert!((choice.achieved - frozen[1]).abs() < 1e-12);
}

#[test]
fn linear_coefficient_band_norms() {
    let space = build_space(12).unwrap();
    let h = GridFunction::from_fn(space, c);
    let k = GridKernel::from_fn(space, |x, y| c((x * y).exp()));
    let params = SequenceParams {
        count: 6,
        eps0: 1.0,
        ratio: 0.5,
        depth_max: 12,
    };
    let seq = build_sequence(&h, &k, c(0.0), &params).unwrap();
    // ‖K eₙ‖ + ‖K* eₙ‖ at level 1 from an independent dense evaluation, 5 digits.
    let frozen = [
        0.048086, 0.014706, 0.0048409, 0.0016519, 0.00057383, 0.00020110,
    ];
    for (d, want) in seq.diagnostics().iter().zip(frozen) {
        let got = d.norm_s2 + d.norm_s2_adjoint;
        assert!(((got - want) / want).abs() < 2e-4, "{got} vs {want}");
    }
    for (n, d) in seq.diagnostics().iter().enumerate() {
        let analytic = 7.0 / 12.0 * 0.25f64.powi(n as i32 + 1);
        assert!((d.norm_s1.powi(2) - analytic).abs() < 1e-8);
    }
}

#[derive(Debug, Clone, Copy)]
enum Coefficient {
    Linear,
    Square,
    Complex,
    Sine,
}

impl Coefficient {
    fn eval(self, y: f64) -> Complex64 {
        match self {
            Coefficient::Linear => c(y),
            Coefficient::Square => c(y * y),
            Coefficient::Complex => Complex64::new(y, -0.5 * y),
            Coefficient::Sine => c((2.5 * y).sin()),
        }
    }
}

fn coefficient() -> impl Strategy<Value = Coefficient> {
    prop_oneof![
        Just(Coefficient::Linear),
        Just(Coefficient::Square),
        Just(Coefficient::Complex),
        Just(Coefficient::Sine),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sequence_invariants(
        coeff in coefficient(),
        y0 in 0.35f64..0.65,
        depth in 6u32..=8,
        count in 2usize..=3,
        kernel_scale in 0.2f64..3.0,
    ) {
        let space = build_space(depth).unwrap();
        let h = GridFunction::from_fn(space, move |y| coeff.eval(y));
        let k = GridKernel::from_fn(space, move |x, y| c((kernel_scale * x * y).exp()));
        let alpha = coeff.eval(y0);
        let params = SequenceParams { count, eps0: 0.5, ratio: 0.5, depth_max: 10 };
        let seq = build_sequence(&h, &k, alpha, &params).unwrap();
        let fine = seq.space();
        let h = h.split_to_depth(fine.depth()).unwrap();
        let k = k.at_depth(fine.depth()).unwrap();

        let f = seq.functions();
        for i in 0..f.len() {
            for j in 0..f.len() {
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((f[i].inner_product(&f[j]).unwrap() - c(expected)).norm() <= 1e-12);
            }
        }
        for (idx, (e, d)) in f.iter().zip(seq.diagnostics()).enumerate() {
            let n = idx + 1;
            let eps = seq.epsilons()[idx];
            // ‖(H - α) eₙ‖ ≤ εₙ by direct grid quadrature.
            let shifted = GridFunction::from_values(fine, h.values().map(|v| v - alpha)).unwrap();
            let s1 = shifted.multiply(e).unwrap().norm();
            let conj = GridFunction::from_values(fine, h.values().map(|v| (v - alpha).conj())).unwrap();
            let s1_adj = conj.multiply(e).unwrap().norm();
            prop_assert!(s1 <= eps * (1.0 + 1e-14));
            prop_assert!((s1 - s1_adj).abs() <= 1e-15);
            prop_assert_eq!(d.norm_s1, d.norm_s1_adjoint);
            // ‖K eₙ‖ + ‖K* eₙ‖ ≤ 1/n.
            let s2 = k.apply(e).unwrap().norm() + k.apply_adjoint(e).unwrap().norm();
            prop_assert!(s2 <= 1.0 / n as f64 + 1e-14);
            prop_assert!((s2 - d.norm_s2 - d.norm_s2_adjoint).abs() <= 1e-12);
        }
        prop_assert!(seq.epsilons().windows(2).all(|w| w[1] < w[0]));
    }
}
