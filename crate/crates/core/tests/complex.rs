use kwtopo::algebra::{image_basis, kernel_basis, orthogonal_complement, rank, same_span};
use kwtopo::complex::{
    build_cube_3complex, build_grid_1complex, build_grid_2complex, build_torus_2complex,
    build_torus_3complex, cohomology_dims, coset_partition, homology_dims, torus_cycles,
    verify_torus_cycles, ChainComplex,
};
use kwtopo::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn all_builders(q: u32) -> Vec<ChainComplex> {
    vec![
        build_grid_1complex(2, 3, q).unwrap(),
        build_grid_2complex(3, 4, q, &[]).unwrap(),
        build_grid_2complex(4, 4, q, &[0, 8]).unwrap(),
        build_torus_2complex(2, 3, q).unwrap(),
        build_torus_2complex(4, 4, q).unwrap(),
        build_cube_3complex(2, q).unwrap(),
        build_torus_3complex(2, q).unwrap(),
    ]
}

#[test]
fn boundaries_compose_to_zero() {
    for q in [2u32, 3, 5] {
        for c in all_builders(q) {
            c.validate().unwrap();
            for i in 1..c.dimension().unwrap() {
                let p = c.boundary_zq(i).unwrap().mul(&c.boundary_zq(i + 1).unwrap()).unwrap();
                assert!(p.is_zero(), "{:?} at {i}", c.kind());
            }
        }
    }
}

#[test]
fn cocycles_annihilate_boundaries() {
    for q in [2u32, 3, 5] {
        for c in all_builders(q) {
            for i in 1..=c.dimension().unwrap() {
                let b = c.boundary_zq(i).unwrap();
                let len = b.rows();
                let cocycles = kernel_basis(&c.coboundary_zq(i).unwrap()).unwrap();
                let perp = orthogonal_complement(&image_basis(&b).unwrap(), len, q).unwrap();
                assert!(same_span(&cocycles, &perp, len, q).unwrap());
            }
            assert_eq!(homology_dims(&c).unwrap(), cohomology_dims(&c).unwrap());
        }
    }
}

#[test]
fn euler_characteristic_matches_homology() {
    for c in all_builders(3) {
        let counts = c.cell_counts();
        let h = homology_dims(&c).unwrap();
        let top = counts.len() - 1;
        let chi_cells: i64 = counts
            .iter()
            .enumerate()
            .map(|(i, &n)| if i % 2 == 0 { n as i64 } else { -(n as i64) })
            .sum();
        let chi_h: i64 = h
            .iter()
            .enumerate()
            .map(|(j, &n)| if (top - j) % 2 == 0 { n as i64 } else { -(n as i64) })
            .sum();
        assert_eq!(chi_cells, chi_h, "{:?}", c.kind());
    }
}

#[test]
fn three_torus_cosets_partition_the_cycles() {
    let c = build_torus_3complex(2, 2).unwrap();
    let cycles = torus_cycles(&c).unwrap();
    assert!(verify_torus_cycles(&c, &cycles).unwrap());
    let p = coset_partition(&c, &cycles, 1 << 20).unwrap();
    assert_eq!(p.kernel_size, 1 << 17);
    assert_eq!(p.image_size, 1 << 14);
    assert_eq!(p.counts, vec![1 << 14; 8]);
    assert!(p.is_partition());
}

#[test]
fn face_boundary_rank_on_tori() {
    for l in 2..=4 {
        let t = build_torus_2complex(l, l, 2).unwrap();
        let n = l * l;
        assert_eq!(rank(&t.boundary_zq(2).unwrap()).unwrap(), n - 1);
        assert_eq!(kernel_basis(&t.boundary_zq(1).unwrap()).unwrap().len(), n + 1);
    }
}

#[test]
fn composite_modulus_is_refused() {
    let t = build_torus_2complex(2, 2, 4).unwrap();
    assert_eq!(homology_dims(&t), Err(Error::CompositeModulus { q: 4 }));
}

#[test]
fn json_export_is_stable() {
    let t = build_torus_2complex(2, 2, 3).unwrap();
    let a = t.to_json();
    assert_eq!(a, t.to_json());
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert!(t.to_dot().starts_with("digraph"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reorientation_keeps_homology(seed in any::<u64>(), q in prop_oneof![Just(2u32), Just(3), Just(5)]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for c in all_builders(q) {
            let r = c.reoriented(&mut rng);
            r.validate().unwrap();
            prop_assert_eq!(homology_dims(&r).unwrap(), homology_dims(&c).unwrap());
        }
    }
}
