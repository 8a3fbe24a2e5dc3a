use std::collections::HashSet;

use proptest::prelude::*;
use qvol_core::sequences::{stream, SequenceSpec};

fn any_spec() -> impl Strategy<Value = SequenceSpec> {
    prop_oneof![
        (prop::sample::select(vec![(2u64, 3u64), (2, 11), (3, 5), (5, 7), (11, 13)]), 1u64..1000)
            .prop_map(|(b, s)| SequenceSpec::halton(b).unwrap().with_start_index(s).unwrap()),
        any::<u64>().prop_map(SequenceSpec::pseudorandom),
    ]
}

proptest! {
    #[test]
    fn points_lie_in_unit_square(spec in any_spec(), offset in 0u64..1_000_000, count in 1u64..200) {
        for p in stream(&spec, offset, count) {
            prop_assert!((0.0..1.0).contains(&p.u) && (0.0..1.0).contains(&p.v), "{p:?}");
        }
    }

    #[test]
    fn prefix_consistency(spec in any_spec(), n in 1u64..300, k in 0u64..300) {
        let short = stream(&spec, 0, n);
        let long = stream(&spec, 0, n + k);
        prop_assert_eq!(&long[..n as usize], &short[..]);
    }

    #[test]
    fn offset_is_a_window_of_the_stream(spec in any_spec(), offset in 0u64..500, count in 1u64..100) {
        let window = stream(&spec, offset, count);
        let full = stream(&spec, 0, offset + count);
        prop_assert_eq!(&full[offset as usize..], &window[..]);
    }

    #[test]
    fn repeated_calls_are_identical(spec in any_spec(), offset in 0u64..10_000) {
        let a = stream(&spec, offset, 1);
        let b = stream(&spec, offset, 1);
        prop_assert_eq!(a[0].u.to_bits(), b[0].u.to_bits());
        prop_assert_eq!(a[0].v.to_bits(), b[0].v.to_bits());
    }
}

#[test]
fn halton_2_11_first_ten_thousand_points_are_distinct() {
    let pts = stream(&SequenceSpec::default(), 0, 10_000);
    let set: HashSet<(u64, u64)> = pts.iter().map(|p| (p.u.to_bits(), p.v.to_bits())).collect();
    assert_eq!(set.len(), 10_000);
}

#[test]
fn streams_agree_across_threads() {
    let specs = [SequenceSpec::default(), SequenceSpec::pseudorandom(17)];
    for spec in specs {
        let expected = stream(&spec, 12_345, 500);
        let handles: Vec<_> = (0..4)
            .map(|_| std::thread::spawn(move || stream(&spec, 12_345, 500)))
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), expected);
        }
    }
}
