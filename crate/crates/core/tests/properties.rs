use proptest::prelude::*;

use xmas::analysis::{eye_all, worst_eye, EyeMethod};
use xmas::channel::{ChannelSetup, PulseResponseSet};
use xmas::linksim::{gen_pattern, simulate_stream, PatternConfig, SupplyModel};
use xmas::matrix::IntMatrix;
use xmas::signaling::fixtures::{seven_over_eight, three_over_four};
use xmas::signaling::{baseline_scheme, BaselineKind, DataWord, SignalingScheme};

const V: f64 = 0.4;

fn reference4() -> PulseResponseSet {
    ChannelSetup::reference().with_wires(4).responses(10.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identity_scheme_matches_single_ended(seed in 1u64..127, alpha in 0.0f64..1.0) {
        let prs = reference4().scale_coupling(alpha);
        let se = baseline_scheme(BaselineKind::SingleEnded, 4, V).unwrap();
        let id = SignalingScheme::new(IntMatrix::identity(4), IntMatrix::identity(4), V).unwrap();
        let data = gen_pattern(&PatternConfig::Prbs7 { seed, length: 40 }, 4).unwrap();
        let a = simulate_stream(&se, &prs, &data, &SupplyModel::ideal(V)).unwrap();
        let b = simulate_stream(&id, &prs, &data, &SupplyModel::ideal(V)).unwrap();
        prop_assert_eq!(a.w, b.w);
    }

    #[test]
    fn constant_multiset_never_droops(seed in 1u64..127, l_nh in 0.0f64..20.0) {
        let prs = ChannelSetup::reference().responses(10.0).unwrap();
        let s = seven_over_eight(V);
        let data = gen_pattern(&PatternConfig::Prbs7 { seed, length: 32 }, 7).unwrap();
        let sup = SupplyModel::with_inductance(V, l_nh * 1e-9);
        let out = simulate_stream(&s, &prs, &data, &sup).unwrap();
        prop_assert!(out.droop.iter().flatten().all(|d| *d == 0.0));
    }

    #[test]
    fn pda_never_exceeds_a_stream_eye(seed in 1u64..127, alpha in 0.0f64..2.0) {
        let prs = reference4().scale_coupling(alpha);
        let s = three_over_four(V);
        let sup = SupplyModel::ideal(V);
        let pda = worst_eye(&eye_all(&s, &prs, &EyeMethod::Pda, &sup).unwrap()).unwrap();
        let m = EyeMethod::Stream { pattern: PatternConfig::Prbs7 { seed, length: 127 } };
        let st = worst_eye(&eye_all(&s, &prs, &m, &sup).unwrap()).unwrap();
        prop_assert!(pda.height_v <= st.height_v + 1e-12);
    }

    #[test]
    fn encode_decode_round_trip(idx in 0u64..128) {
        let s = seven_over_eight(V);
        let d = DataWord::from_index(7, idx);
        let y = s.encode_symbol(&d).unwrap();
        let dec = s.decode_samples(&y).unwrap();
        prop_assert_eq!(s.recover_data(&dec.bits).unwrap(), d);
    }
}
