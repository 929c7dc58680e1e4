use std::f64::consts::PI;

use fockso_core::berezin::{berezin, berezin_abs_p, default_berezin_sizes};
use fockso_core::hankel::{build_section, section_norm};
use fockso_core::quadrature::DiskSizes;
use fockso_core::spaces::{disk_oscillation, inner_2m, norm_pm, CoeffVector, Operand};
use fockso_core::stablefun::{eval_em, eval_qm, kernel};
use fockso_core::symbols::{builtin_catalog, parse_symbol, SymbolExpr};
use fockso_core::verify::{check_lemma23_series, default_series_grid};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn complex_in(r: f64) -> impl Strategy<Value = Complex64> {
    (0.0..r, 0.0..(2.0 * PI)).prop_map(|(a, t)| Complex64::from_polar(a, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exponential_splits_into_taylor_part_and_tail(m in 0u32..6, w in complex_in(6.0)) {
        let tail = eval_em(m, w).to_complex().unwrap() * w.powu(m);
        let lhs = w.exp();
        prop_assert!((eval_qm(m, w) + tail - lhs).norm() <= 1e-12 * (1.0 + lhs.norm() + eval_qm(m, w).norm()));
    }

    #[test]
    fn kernel_is_hermitian(m in 0u32..4, z in complex_in(8.0), v in complex_in(8.0)) {
        let a = kernel(m, z, v);
        let b = kernel(m, v, z);
        prop_assert!((a.logmag - b.logmag).abs() <= 1e-10 * (1.0 + a.logmag.abs()));
        let d = (a.phase + b.phase).rem_euclid(2.0 * PI);
        prop_assert!(d.min(2.0 * PI - d) <= 1e-9);
    }

    #[test]
    fn parseval_matches_quadrature(m in 0u32..3, coeffs in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 1..8)) {
        let f = CoeffVector::new(m, coeffs.iter().map(|(a, b)| c(*a, *b)).collect()).unwrap();
        let q = norm_pm(Operand::Coeffs(&f), 2.0, m).unwrap();
        prop_assert!((q * q - f.parseval_norm_sqr()).abs() <= 1e-10 * (1.0 + f.parseval_norm_sqr()));
        let ip = inner_2m(Operand::Coeffs(&f), Operand::Coeffs(&f), m).unwrap();
        prop_assert!((ip.re - f.parseval_norm_sqr()).abs() <= 1e-10 * (1.0 + ip.re));
    }

    #[test]
    fn norm_is_homogeneous(k in 0usize..5, a in 0.1..5.0f64, p in 1.0..4.0f64, m in 0u32..3) {
        let g = parse_symbol(["1", "z^1", "zb^1", "|z|^0.5", "sin|z|"][k]).unwrap();
        let cg = SymbolExpr::product(SymbolExpr::constant(c(a, 0.0)), g.clone());
        let lhs = norm_pm(Operand::Symbol(&cg), p, m).unwrap();
        let rhs = a * norm_pm(Operand::Symbol(&g), p, m).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs));
    }

    #[test]
    fn berezin_of_nonnegative_symbols_is_nonnegative(k in 0usize..4, z in complex_in(10.0), m in 0u32..3) {
        let g = parse_symbol(["|z|^0.5", "ind(0,0,1)", "ind(1+1i,0.5,2)", "expq(-0.25)"][k]).unwrap();
        let b = berezin(&g, z, m, 8.0, default_berezin_sizes()).unwrap();
        prop_assert!(b.value.re >= -1e-12);
        prop_assert!(b.value.im.abs() <= 1e-12 * (1.0 + b.value.re.abs()));
        let bp = berezin_abs_p(&g, z, m, 2.0, 8.0, default_berezin_sizes()).unwrap();
        prop_assert!(bp.value.re >= -1e-12);
    }

    #[test]
    fn disk_oscillation_is_translation_covariant(z in complex_in(6.0), shift in complex_in(3.0)) {
        // conj z and conj z + const have equal oscillation
        let a = disk_oscillation(&SymbolExpr::zbar(), z, 1.0, 2.0, DiskSizes::default()).unwrap();
        let g = SymbolExpr::sum(vec![SymbolExpr::zbar(), SymbolExpr::constant(shift)]);
        let b = disk_oscillation(&g, z, 1.0, 2.0, DiskSizes::default()).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn sections_are_monotone_in_both_truncations() {
    for e in builtin_catalog() {
        let at = |n: usize, l: usize| section_norm(&build_section(&e.symbol, 1, n, l).unwrap()).unwrap();
        let (a, b, c2) = (at(4, 16), at(8, 16), at(8, 32));
        assert!(b >= a - 1e-9 * (1.0 + a), "{}: {a} {b}", e.name);
        assert!(c2 <= b + 1e-9 * (1.0 + b), "{}: {b} {c2}", e.name);
    }
}

#[test]
fn series_reports_are_reproducible() {
    let grid = default_series_grid(30.0);
    let a = serde_json::to_string(&check_lemma23_series(1.5, &grid, 1.0).unwrap()).unwrap();
    let b = serde_json::to_string(&check_lemma23_series(1.5, &grid, 1.0).unwrap()).unwrap();
    assert_eq!(a, b);
}
