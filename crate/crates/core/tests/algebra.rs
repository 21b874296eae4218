use kwtopo::algebra::{
    enumerate_span, image_basis, in_span, is_prime, kernel_basis, orthogonal_complement, rank,
    same_span, span_rank, Character, ZqElem, ZqMatrix,
};
use kwtopo::Error;
use proptest::prelude::*;

fn matrix(q: u32, max_dim: usize) -> impl Strategy<Value = ZqMatrix> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(move |(r, c)| {
        proptest::collection::vec(0..q as i64, r * c).prop_map(move |flat| {
            let rows: Vec<Vec<i64>> = flat.chunks(c).map(|s| s.to_vec()).collect();
            ZqMatrix::from_rows(&rows, q).unwrap()
        })
    })
}

fn any_prime_matrix() -> impl Strategy<Value = ZqMatrix> {
    prop_oneof![matrix(2, 6), matrix(3, 6), matrix(5, 5), matrix(7, 4)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rank_of_transpose(m in any_prime_matrix()) {
        prop_assert_eq!(rank(&m).unwrap(), rank(&m.transpose()).unwrap());
    }

    #[test]
    fn rank_nullity(m in any_prime_matrix()) {
        let k = kernel_basis(&m).unwrap();
        prop_assert_eq!(rank(&m).unwrap() + k.len(), m.cols());
        for v in &k {
            prop_assert!(m.mul_vec(v).unwrap().iter().all(|&x| x == 0));
        }
    }

    #[test]
    fn image_basis_spans_the_columns(m in any_prime_matrix()) {
        let q = m.modulus();
        let img = image_basis(&m).unwrap();
        prop_assert_eq!(img.len(), rank(&m).unwrap());
        for c in 0..m.cols() {
            prop_assert!(in_span(&img, &m.column(c), q).unwrap());
        }
    }

    #[test]
    fn double_complement_is_the_span(m in any_prime_matrix()) {
        let q = m.modulus();
        let rows: Vec<Vec<u8>> = (0..m.rows()).map(|r| m.row(r).to_vec()).collect();
        let perp = orthogonal_complement(&rows, m.cols(), q).unwrap();
        prop_assert_eq!(perp.len() + span_rank(&rows, m.cols(), q).unwrap(), m.cols());
        let back = orthogonal_complement(&perp, m.cols(), q).unwrap();
        prop_assert!(same_span(&rows, &back, m.cols(), q).unwrap());
    }

    #[test]
    fn span_enumeration_is_the_group(m in matrix(3, 4)) {
        let rows: Vec<Vec<u8>> = (0..m.rows()).map(|r| m.row(r).to_vec()).collect();
        let basis = image_basis(&m.transpose()).unwrap();
        let span = enumerate_span(&basis, m.cols(), 3, 1 << 20).unwrap();
        prop_assert_eq!(span.count(), 3u64.pow(basis.len() as u32));
        let all: std::collections::BTreeSet<Vec<u8>> = span.iter().collect();
        prop_assert_eq!(all.len() as u64, span.count());
        for r in rows {
            prop_assert!(all.contains(&r));
        }
    }

    #[test]
    fn characters_are_multiplicative(k in 0i64..5, x in 0u8..5, y in 0u8..5) {
        let chi = Character::new(k, 5).unwrap();
        let lhs = chi.eval((x + y) % 5);
        let rhs = chi.eval(x) * chi.eval(y);
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn field_inverses(v in 1i64..7) {
        let a = ZqElem::new(v, 7).unwrap();
        let inv = a.inverse().unwrap();
        prop_assert_eq!(a.try_mul(inv).unwrap().value(), 1);
    }
}

#[test]
fn characters_are_orthogonal() {
    for q in [2u32, 3, 5, 7] {
        for a in 0..q as i64 {
            for b in 0..q as i64 {
                let (ca, cb) = (Character::new(a, q).unwrap(), Character::new(b, q).unwrap());
                let s: num_complex::Complex64 =
                    (0..q as u8).map(|x| ca.eval(x) * cb.eval(x).conj()).sum();
                let expected = if a == b { q as f64 } else { 0.0 };
                assert!((s.re - expected).abs() < 1e-10 && s.im.abs() < 1e-10);
            }
        }
    }
}

#[test]
fn composite_moduli_are_refused() {
    assert!(is_prime(5) && !is_prime(4) && !is_prime(1));
    let m = ZqMatrix::identity(2, 4).unwrap();
    assert_eq!(rank(&m), Err(Error::CompositeModulus { q: 4 }));
    assert_eq!(kernel_basis(&m), Err(Error::CompositeModulus { q: 4 }));
}

#[test]
fn mixed_moduli_do_not_combine() {
    let a = ZqElem::new(1, 3).unwrap();
    let b = ZqElem::new(1, 5).unwrap();
    assert_eq!(a.try_add(b), Err(Error::ModulusMismatch { left: 3, right: 5 }));
}

#[test]
fn span_enumeration_respects_the_cap() {
    let basis: Vec<Vec<u8>> = (0..10)
        .map(|i| (0..10).map(|j| (i == j) as u8).collect())
        .collect();
    assert!(matches!(
        enumerate_span(&basis, 10, 3, 1000),
        Err(Error::BudgetExceeded { .. })
    ));
}
