mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use surfseg::fem::{assemble, control_loop, CsrMatrix, TimeStepControl};
use surfseg::quality::{delete_pass, refine_pass, QualityParams};
use surfseg::region::{force_value, init_regions};
use surfseg::topo::hungarian_match;
use surfseg::trimesh::{make_seed, parse_obj, write_obj, RegionPair, Seed, SurfaceSet};
use surfseg::voxel_image::{load_raw, save_raw, VoxelGrid};
use surfseg::{Aabb, Vec3};

fn seed_strategy() -> impl Strategy<Value = (Seed, f64)> {
    let c = || prop::array::uniform3(-1.0f64..1.0);
    let axis = || prop::array::uniform3(-1.0f64..1.0).prop_filter("axis", |a| a.iter().map(|x| x * x).sum::<f64>() > 0.05);
    prop_oneof![
        (c(), 0.2f64..1.0, 0.2f64..0.5).prop_map(|(center, radius, h)| (Seed::Sphere { center, radius }, h * radius)),
        (c(), axis(), 0.0f64..1.0, 0.2f64..0.6, 0.2f64..0.5).prop_map(|(center, axis, length, radius, h)| (
            Seed::Capsule {
                center,
                axis,
                length,
                radius
            },
            h * radius
        )),
        (c(), axis(), 0.5f64..1.0, 0.15f64..0.4, 0.3f64..0.6).prop_map(|(center, axis, major, f, h)| {
            let minor = major * f;
            (
                Seed::Torus {
                    center,
                    axis,
                    major,
                    minor,
                },
                h * minor,
            )
        }),
    ]
}

fn expected_euler(seed: &Seed) -> i64 {
    match seed {
        Seed::Torus { .. } => 0,
        _ => 2,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn seeds_are_closed_outward_manifolds((seed, h) in seed_strategy()) {
        let m = make_seed::<f64>(&seed, h).unwrap();
        prop_assert!(m.check_closed_manifold().is_ok());
        prop_assert!(m.check_face_areas().is_ok());
        prop_assert_eq!(m.euler_characteristic(), expected_euler(&seed));
        prop_assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn obj_round_trip_is_lossless((seed, h) in seed_strategy()) {
        let m = make_seed::<f64>(&seed, h).unwrap();
        let mut s = SurfaceSet::new();
        s.push(m.clone(), RegionPair::new(1, 2)).unwrap();
        let objs = parse_obj(&write_obj(&s)).unwrap();
        prop_assert_eq!(objs.len(), 1);
        prop_assert_eq!(&objs[0].faces, &m.faces);
        for (a, b) in objs[0].vertices.iter().zip(&m.vertices) {
            prop_assert_eq!(*a, b.to_f64());
        }
    }

    #[test]
    fn quality_passes_keep_topology((seed, h) in seed_strategy(), stretch in 1.0f64..3.0, jitter in 0.0f64..0.2) {
        let mut m = make_seed::<f64>(&seed, h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(m.vertices.len() as u64);
        for p in &mut m.vertices {
            let d = common::random_point(&mut rng, jitter * h);
            *p = Vec3::new(p.x() * stretch + d[0], p.y() + d[1], p.z() + d[2]);
        }
        let chi = m.euler_characteristic();
        let p = QualityParams { a_desired: h * h * 0.2, ..Default::default() };
        refine_pass(&mut m, &p).unwrap();
        delete_pass(&mut m, &p).unwrap();
        prop_assert!(m.check_closed_manifold().is_ok());
        prop_assert!(m.check_face_areas().is_ok());
        prop_assert_eq!(m.euler_characteristic(), chi);
    }

    #[test]
    fn assembly_is_translation_invariant((seed, h) in seed_strategy(), shift in prop::array::uniform3(-5.0f64..5.0)) {
        let m = make_seed::<f64>(&seed, h).unwrap();
        let mut moved = m.clone();
        moved.translate(Vec3::from_f64(shift));
        let mk = |m| {
            let mut s = SurfaceSet::new();
            s.push(m, RegionPair::new(1, 2)).unwrap();
            s
        };
        let (a, b) = (mk(m), mk(moved));
        let f = vec![vec![0.5; a.mesh(0).vertices.len()]];
        let sa = assemble(&a, &f, 1.0, 1e-3).unwrap();
        let sb = assemble(&b, &f, 1.0, 1e-3).unwrap();
        for v in 0..sa.num_vertices() {
            prop_assert!((sa.m_diag[v] - sb.m_diag[v]).abs() <= 1e-9 * sa.m_diag[v]);
            prop_assert!((sa.omega[v] - sb.omega[v]).norm() <= 1e-9);
        }
    }

    #[test]
    fn force_is_antisymmetric(u in -2.0f64..2.0, cp in -2.0f64..2.0, cm in -2.0f64..2.0, l in 0.0f64..100.0) {
        let a = force_value(u, cp, cm, l);
        prop_assert!((a + force_value(u, cm, cp, l)).abs() <= 1e-9 * (1.0 + a.abs()));
        prop_assert_eq!(force_value(u, cp, cp, l), 0.0);
        // pushes towards the region whose mean is closer
        if (u - cp).abs() < (u - cm).abs() {
            prop_assert!(a <= 0.0);
        }
    }

    #[test]
    fn csr_matches_dense(trip in prop::collection::vec((0usize..6, 0usize..6, -3.0f64..3.0), 0..40), x in prop::array::uniform6(-1.0f64..1.0)) {
        let a = CsrMatrix::from_triplets(6, trip.clone());
        let mut dense = [[0.0; 6]; 6];
        for &(r, c, v) in &trip {
            dense[r][c] += v;
        }
        let mut y = vec![0.0; 6];
        a.mul_vec(&x, &mut y);
        for r in 0..6 {
            let want: f64 = (0..6).map(|c| dense[r][c] * x[c]).sum();
            prop_assert!((y[r] - want).abs() <= 1e-12 * (1.0 + want.abs()));
            for c in 0..6 {
                prop_assert!((a.get(r, c) - dense[r][c]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn hungarian_beats_any_permutation(n in 1usize..7, vals in prop::collection::vec(0i64..50, 49), perm_seed in any::<u64>()) {
        let c: Vec<Vec<i64>> = (0..n).map(|i| vals[i * 7..i * 7 + n].to_vec()).collect();
        let a = hungarian_match(&c).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = perm_seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let other: i64 = (0..n).map(|i| c[i][perm[i]]).sum();
        prop_assert!(a.cost <= other);
        // the same optimum with floating-point costs
        let cf: Vec<Vec<f64>> = c.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
        prop_assert_eq!(hungarian_match(&cf).unwrap().cost, a.cost as f64);
    }

    #[test]
    fn controller_accepts_within_bounds_or_straddles(k in 1.0f64..1e4, tau0 in 1e-5f64..1e-2) {
        let ctl = TimeStepControl::new(0.003, 0.05, 10, tau0);
        let out = control_loop(tau0, &ctl, |t| Ok(((), k * t))).unwrap();
        let inside = out.dxn >= ctl.dxn_min && out.dxn <= ctl.dxn_max;
        let at_limit = out.tau >= ctl.tau_max / 10.0 || out.tau <= ctl.tau_min * 10.0;
        prop_assert!(inside || out.straddled || at_limit);
        prop_assert!(out.dxn <= ctl.dxn_max || at_limit);
    }

    #[test]
    fn region_counts_partition_the_grid(dims in prop::array::uniform3(3usize..10), r in 0.2f64..0.9) {
        let g = VoxelGrid::from_fn(dims, Aabb::from_f64([-1.0; 3], [1.0; 3]), |p| p.x() + 2.0).unwrap();
        let mut s = SurfaceSet::new();
        s.push(make_seed(&Seed::Sphere { center: [0.01, 0.02, 0.03], radius: r }, 0.15).unwrap(), RegionPair::new(1, 2)).unwrap();
        let st = init_regions(&g, &s).unwrap();
        prop_assert_eq!(st.counts.iter().sum::<usize>(), g.len());
        let total: f64 = g.data().iter().sum();
        prop_assert!((st.sums.iter().sum::<f64>() - total).abs() <= 1e-9 * total);
    }
}

#[test]
fn raw_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = VoxelGrid::from_fn([5, 4, 3], Aabb::from_f64([0.0; 3], [1.0, 2.0, 3.0]), |p: Vec3<f64>| (p.x() * 7.0).floor()).unwrap();
    let header = dir.path().join("img.json");
    save_raw(&g, &header).unwrap();
    let back: VoxelGrid<f64> = load_raw(&header).unwrap();
    assert_eq!(back.dims(), g.dims());
    assert_eq!(back.data(), g.data());
    assert!((back.spacing() - g.spacing()).norm() < 1e-12);
}

#[test]
fn single_precision_solve_agrees_with_double() {
    let s64 = common::single(make_seed(&Seed::Sphere { center: [0.0; 3], radius: 1.0 }, 0.3).unwrap());
    let s32 = {
        let mut s = SurfaceSet::<f32>::new();
        s.push(make_seed(&Seed::Sphere { center: [0.0; 3], radius: 1.0 }, 0.3).unwrap(), RegionPair::new(1, 2))
            .unwrap();
        s
    };
    let n = s64.mesh(0).vertices.len();
    let (_, a) = surfseg::fem::solve_step(&s64, &[vec![0.0; n]], 1.0, 1e-3).unwrap();
    let (_, b) = surfseg::fem::solve_step(&s32, &[vec![0.0f32; n]], 1.0, 1e-3).unwrap();
    for (x, y) in a.kappa.iter().zip(&b.kappa) {
        assert!((x - *y as f64).abs() < 1e-3 * x.abs());
    }
}
