use bitslice_core::numkit::Matrix;
use bitslice_core::quant::{QuantConfig, QuantizedLayer};
use bitslice_core::slicekit::{bit_slice, bl1_gradient, bl1_penalty, digit_sum, DigitTable};
use proptest::prelude::*;

fn brute_digit_sum(mut c: u32) -> u32 {
    let mut s = 0;
    while c > 0 {
        s += c % 4;
        c /= 4;
    }
    s
}

fn all_codes(sign: i8) -> QuantizedLayer<f64> {
    let codes: Vec<u32> = (0..256).collect();
    let signs = codes
        .iter()
        .map(|&c| if c == 0 { 1 } else { sign })
        .collect();
    QuantizedLayer::from_parts(16, 16, codes, signs, 0, QuantConfig::default()).unwrap()
}

#[test]
fn every_code_reconstructs_and_matches_digit_oracle() {
    let cfg = QuantConfig::default();
    let q = all_codes(1);
    let s = bit_slice(&q);
    assert_eq!(s.reconstruct(), q.codes());
    for c in 0..256u32 {
        let digits: Vec<u32> = (0..4).map(|k| s.slice(k)[c as usize] as u32).collect();
        assert_eq!(digits.iter().sum::<u32>(), brute_digit_sum(c));
        assert_eq!(digit_sum(c, cfg), brute_digit_sum(c));
        assert!(digits.iter().all(|&d| d <= 3));
    }
    assert_eq!(
        bl1_penalty(&q),
        (0..256).map(brute_digit_sum).sum::<u32>() as f64
    );
}

#[test]
fn gradient_is_the_exact_segment_slope() {
    for sign in [1i8, -1] {
        let q = all_codes(sign);
        let g = bl1_gradient(&q);
        let step = q.q_step();
        for c in 0..255u32 {
            let slope = brute_digit_sum(c + 1) as f64 - brute_digit_sum(c) as f64;
            let s = if c == 0 { 1.0 } else { sign as f64 };
            assert_eq!(g.as_slice()[c as usize], s * slope / step, "code {c}");
        }
        let top = brute_digit_sum(255) as f64 - brute_digit_sum(254) as f64;
        assert_eq!(g.as_slice()[255], sign as f64 * top / step);
    }
}

#[test]
fn carry_segments() {
    let t = DigitTable::new(QuantConfig::default());
    assert_eq!(t.slope(3), -2);
    assert_eq!(t.slope(15), -5);
    assert_eq!(t.slope(63), -8);
    assert_eq!(t.slope(0), 1);
    assert_eq!(t.slope(254), 1);
    assert_eq!(t.slope(255), 1);
}

#[test]
fn gradient_scales_with_step() {
    let mk = |s| {
        QuantizedLayer::<f64>::from_parts(1, 2, vec![5, 3], vec![1, -1], s, QuantConfig::default())
            .unwrap()
    };
    let a = bl1_gradient(&mk(0));
    let b = bl1_gradient(&mk(3));
    assert_eq!(a.map(|v| v / 8.0), b);
    assert_eq!(a, Matrix::from_vec(1, 2, vec![256.0, 512.0]).unwrap());
}

proptest! {
    #[test]
    fn relaxation_interpolates_table(x in 0.0f64..255.0) {
        let t = DigitTable::new(QuantConfig::default());
        let m = x.floor() as u32;
        let lo = brute_digit_sum(m) as f64;
        let hi = brute_digit_sum(m + 1) as f64;
        let want = lo + (x - m as f64) * (hi - lo);
        prop_assert!((t.relaxed(x) - want).abs() < 1e-9);
    }

    #[test]
    fn descent_moves_never_raise_the_digit_sum(x in 0.0f64..256.0, delta in -300.0f64..300.0) {
        use bitslice_core::slicekit::PenaltyMove;
        let t = DigitTable::new(QuantConfig::default());
        let code = |v: f64| (v.floor().max(0.0) as u32).min(255);
        let before = t.sum(code(x));
        let after = match t.descent_move(x, delta) {
            PenaltyMove::Free => t.sum(code((x + delta).max(0.0))),
            PenaltyMove::Land(v) => t.sum(code(v)),
            PenaltyMove::Hold => before,
        };
        prop_assert!(after <= before, "x {x} delta {delta}: {before} -> {after}");
    }

    #[test]
    fn other_widths_reconstruct(code in 0u32..4096, w in prop_oneof![Just(1u32), Just(3), Just(4), Just(6)]) {
        let cfg = QuantConfig::new(12, w).unwrap();
        let q = QuantizedLayer::<f64>::from_parts(1, 1, vec![code], vec![1], 0, cfg).unwrap();
        prop_assert_eq!(bit_slice(&q).reconstruct(), vec![code]);
    }
}
