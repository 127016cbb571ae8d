use acdep::{
    count_dominated, count_dominated_1d, count_dominated_2d, count_dominated_nd, count_dominated_oracle,
    count_dominating, CountMode, PointSet,
};
use proptest::prelude::*;

fn grid_points(d: usize, max_len: usize, levels: i64) -> impl Strategy<Value = PointSet<i64>> {
    prop::collection::vec(prop::collection::vec(0..levels, d), 0..max_len)
        .prop_map(move |rows| PointSet::from_rows(d, &rows).unwrap())
}

fn instance(max_len: usize) -> impl Strategy<Value = (PointSet<i64>, PointSet<i64>)> {
    (1usize..=5, 2i64..12).prop_flat_map(move |(d, levels)| (grid_points(d, max_len, levels), grid_points(d, max_len, levels)))
}

fn brute(a: &PointSet<i64>, b: &PointSet<i64>, dominated: bool) -> Vec<usize> {
    (0..b.len())
        .map(|j| {
            (0..a.len())
                .filter(|&i| {
                    a.point(i).iter().zip(b.point(j)).all(|(x, y)| if dominated { x <= y } else { x >= y })
                })
                .count()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn integer_inputs_match_brute_force((a, b) in instance(150)) {
        prop_assert_eq!(count_dominated(&a, &b, CountMode::Fast).unwrap().counts, brute(&a, &b, true));
        prop_assert_eq!(count_dominating(&a, &b, CountMode::Fast).unwrap().counts, brute(&a, &b, false));
    }

    #[test]
    fn counts_are_additive_over_a_split((a, b) in instance(120), cut in 0usize..120) {
        let cut = cut.min(a.len());
        let left: Vec<usize> = (0..cut).collect();
        let right: Vec<usize> = (cut..a.len()).collect();
        let whole = count_dominated(&a, &b, CountMode::Fast).unwrap();
        let l = count_dominated(&a.select(&left), &b, CountMode::Fast).unwrap();
        let r = count_dominated(&a.select(&right), &b, CountMode::Fast).unwrap();
        for j in 0..b.len() {
            prop_assert_eq!(whole[j], l[j] + r[j]);
        }
    }

    #[test]
    fn reflection_swaps_the_relations((a, b) in instance(100)) {
        let neg = |p: &PointSet<i64>| PointSet::new(p.dim(), p.values().iter().map(|v| -v).collect()).unwrap();
        prop_assert_eq!(
            count_dominating(&a, &b, CountMode::Fast).unwrap(),
            count_dominated(&neg(&a), &neg(&b), CountMode::Fast).unwrap()
        );
    }
}

#[test]
fn sizes_around_the_brute_force_cutoff() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for d in 1..=4 {
        for n in [1usize, 2, 63, 64, 65, 127, 128, 129, 257] {
            let a = PointSet::new(d, (0..n * d).map(|_| f64::from(rng.random_range(0..7u8))).collect()).unwrap();
            let b = PointSet::new(d, (0..n * d).map(|_| f64::from(rng.random_range(0..7u8))).collect()).unwrap();
            let oracle = count_dominated_oracle(&a, &b).unwrap();
            assert_eq!(count_dominated(&a, &b, CountMode::Fast).unwrap(), oracle, "d={d} n={n}");
            let direct = match d {
                1 => count_dominated_1d(&a, &b),
                2 => count_dominated_2d(&a, &b),
                _ => count_dominated_nd(&a, &b),
            };
            assert_eq!(direct.unwrap(), oracle, "d={d} n={n}");
        }
    }
}

#[test]
fn empty_and_identical_sets() {
    let empty = PointSet::<f64>::empty(3);
    let same = PointSet::new(3, vec![0.5; 300]).unwrap();
    assert!(count_dominated(&empty, &same, CountMode::Fast).unwrap().counts.iter().all(|&c| c == 0));
    assert!(count_dominated(&same, &empty, CountMode::Fast).unwrap().is_empty());
    assert!(count_dominated(&same, &same, CountMode::Fast).unwrap().counts.iter().all(|&c| c == 100));
    assert!(count_dominating(&same, &same, CountMode::Fast).unwrap().counts.iter().all(|&c| c == 100));
}

#[test]
fn single_and_double_precision_agree() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
    let v: Vec<f32> = (0..3 * 2000).map(|_| rng.random_range(0..64u8) as f32 / 8.0).collect();
    let a32 = PointSet::new(3, v[..3000].to_vec()).unwrap();
    let b32 = PointSet::new(3, v[3000..].to_vec()).unwrap();
    let a64 = PointSet::new(3, a32.values().iter().map(|&x| f64::from(x)).collect()).unwrap();
    let b64 = PointSet::new(3, b32.values().iter().map(|&x| f64::from(x)).collect()).unwrap();
    assert_eq!(
        count_dominated(&a32, &b32, CountMode::Fast).unwrap(),
        count_dominated(&a64, &b64, CountMode::Fast).unwrap()
    );
}
