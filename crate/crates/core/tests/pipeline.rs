use xmas::analysis::{cij_all, eye_all, worst_cij, worst_eye, CijMode, EyeMethod};
use xmas::channel::{export_responses, import_responses, ChannelSetup};
use xmas::linksim::{gen_pattern, simulate_stream, PatternConfig, SupplyModel};
use xmas::search::{max_symbol_rate, search_schemes, EyeMask, RateSearch, SearchConfig};
use xmas::signaling::fixtures::three_over_four;

const V: f64 = 0.4;

#[test]
fn synthesized_channel_survives_file_round_trip() {
    let prs = ChannelSetup::reference().with_wires(4).responses(10.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("e.csv");
    export_responses(&prs, &p).unwrap();
    let back = import_responses(&p).unwrap();
    assert_eq!(back, prs);
}

#[test]
fn worst_case_eye_bounds_a_simulated_stream() {
    let prs = ChannelSetup::reference().with_wires(4).responses(10.0).unwrap();
    let s = three_over_four(V);
    let sup = SupplyModel::ideal(V);
    let pda = worst_eye(&eye_all(&s, &prs, &EyeMethod::Pda, &sup).unwrap()).unwrap();
    let stream = EyeMethod::Stream {
        pattern: PatternConfig::Prbs7 { seed: 9, length: 254 },
    };
    let st = worst_eye(&eye_all(&s, &prs, &stream, &sup).unwrap()).unwrap();
    assert!(pda.height_v <= st.height_v + 1e-12);
    assert!(pda.width_ui <= st.width_ui + 1e-12);
}

#[test]
fn envelope_cij_brackets_exact_on_reference_channel() {
    let prs = ChannelSetup::reference().with_wires(4).responses(10.0).unwrap();
    let s = three_over_four(V);
    let ex = cij_all(&s, &prs, CijMode::Exact { budget: 1 << 22 }).unwrap();
    let env = cij_all(&s, &prs, CijMode::Envelope).unwrap();
    for (a, b) in ex.iter().zip(&env) {
        assert!(b.cij_s >= a.cij_s - 1e-18);
    }
}

#[test]
fn searched_scheme_decodes_a_stream_at_its_rate() {
    let setup = ChannelSetup::reference().with_wires(4);
    let prs = setup.responses(10.0).unwrap();
    let rep = search_schemes(&SearchConfig::new(4), &prs, V).unwrap();
    let s = &rep.ranked[0].scheme;
    let rate = max_symbol_rate(s, &setup, &EyeMask::default(), &RateSearch::default()).unwrap();
    assert!(rate.b_max_gsps >= 10.0, "{rate:?}");
    let data = gen_pattern(&PatternConfig::Prbs7 { seed: 5, length: 200 }, s.m()).unwrap();
    let out = simulate_stream(s, &prs, &data, &SupplyModel::ideal(V)).unwrap();
    let e = worst_eye(&eye_all(s, &prs, &EyeMethod::Pda, &SupplyModel::ideal(V)).unwrap()).unwrap();
    let ns = prs.samples_per_symbol();
    let phase = (e.sampling_phase * ns as f64).round() as usize;
    // every symbol past the start-up transient is recovered at the eye center
    for k in prs.memory_span..data[0].len() - 1 {
        let t = k * ns + phase;
        let y: Vec<f64> = out.y.iter().map(|w| w.samples[t]).collect();
        let dec = s.decode_samples(&y).unwrap();
        let got = s.recover_data(&dec.bits).unwrap();
        let want: Vec<i8> = data.iter().map(|lane| lane[k]).collect();
        assert_eq!(got.bits(), &want[..], "symbol {k}");
    }
    let c = worst_cij(&cij_all(s, &prs, CijMode::Envelope).unwrap()).unwrap().cij_s;
    assert!(c < 0.5e-10);
}
