use petricov::gen::{generate, GenParams};
use petricov::{Format, Instance};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = GenParams> {
    (1usize..6, 1usize..7, 1u64..4, 0u64..4, 0u64..5, 0.0f64..1.0, any::<u64>()).prop_map(
        |(places, transitions, min_weight, extra, max_tokens, density, seed)| GenParams {
            places,
            transitions,
            min_weight,
            max_weight: min_weight + extra,
            max_tokens,
            density,
            seed,
        },
    )
}

proptest! {
    #[test]
    fn mist_round_trip(p in params()) {
        let inst = generate(&p).unwrap();
        let text = inst.serialize(Format::Mist);
        let back = Instance::parse(&text, Format::Mist).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(back.serialize(Format::Mist), text);
    }

    #[test]
    fn json_round_trip(p in params()) {
        let inst = generate(&p).unwrap();
        let text = inst.serialize(Format::Json);
        let back = Instance::parse(&text, Format::Json).unwrap();
        prop_assert_eq!(&back, &inst);
    }

    #[test]
    fn formats_agree(p in params()) {
        let inst = generate(&p).unwrap();
        let via_json = Instance::parse(&inst.serialize(Format::Json), Format::Json).unwrap();
        let via_mist = Instance::parse(&via_json.serialize(Format::Mist), Format::Mist).unwrap();
        prop_assert_eq!(via_mist, inst);
    }

    #[test]
    fn generation_is_deterministic(p in params()) {
        prop_assert_eq!(generate(&p).unwrap(), generate(&p).unwrap());
    }
}
