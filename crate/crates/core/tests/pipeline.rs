use bethe_tn::circuit::statevector_to_dense;
use bethe_tn::io;
use bethe_tn::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn reload(v: &serde_json::Value) -> serde_json::Value {
    io::parse_json(&io::to_canonical_string(v)).unwrap()
}

#[test]
fn saved_networks_contract_to_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let data = AnyData::Bethe(BetheData::random(3, &mut rng));
    let n = 8;
    let oracle = build_dense(&data, n).unwrap();
    let parts = LatticePartition::new(vec![3, 1, 2, 2]).unwrap();
    let tree = PlanarTree::parse("((1,2),(3,4))").unwrap();
    let nets = [
        build_mps(&data, &parts, false).unwrap(),
        build_mps(&data, &LatticePartition::uniform(n, 2).unwrap(), true).unwrap(),
        build_binary_ttn(&data, &parts, false).unwrap(),
        build_planar_ttn(&data, &parts, &tree).unwrap(),
    ];
    for net in &nets {
        let text = io::to_canonical_string(&io::network_to_json(net));
        let back = io::network_from_json(&io::parse_json(&text).unwrap()).unwrap();
        assert_eq!(io::to_canonical_string(&io::network_to_json(&back)), text);
        assert!(
            contract_to_dense(&back)
                .unwrap()
                .rel_error(&oracle)
                .unwrap()
                < 1e-10
        );
    }
}

#[test]
fn bethe_data_as_generalized_data_gives_the_same_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 6;
    let bethe = BetheData::random(2, &mut rng);
    let general = GeneralizedBetheData::from_bethe(&bethe, n).unwrap();
    let a = build_mps(&bethe, &LatticePartition::uniform(n, 1).unwrap(), false).unwrap();
    let b = build_mps(&general, &LatticePartition::uniform(n, 1).unwrap(), false).unwrap();
    let ab = mps_overlap(&a, &b).unwrap();
    let aa = mps_overlap(&a, &a).unwrap();
    assert!((ab - aa).norm() < 1e-10 * aa.norm());
    let data = AnyData::Generalized(general);
    assert_eq!(
        io::data_from_json(&reload(&io::data_to_json(&data)), "data").unwrap(),
        data
    );
}

#[test]
fn saved_circuit_prepares_the_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let data = BetheData::random(2, &mut rng);
    let n = 8;
    let circuit = compile_circuit(&data, n, Wiring::Mixed).unwrap();
    let back = io::circuit_from_json(&reload(&io::circuit_to_json(&circuit))).unwrap();
    assert_eq!(back, circuit);
    let state = simulate_statevector(&back).unwrap();
    let (sim, leaked) = statevector_to_dense(&back, &state).unwrap();
    assert!(leaked < 1e-12);
    let oracle = build_dense(&data, n).unwrap().normalized();
    assert!((inner_product(&oracle, &sim).unwrap().norm_sqr() - 1.0).abs() < 1e-10);
}

#[test]
fn decomposition_terms_survive_a_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let data = BetheData::random(3, &mut rng);
    let parts = LatticePartition::new(vec![2, 3, 3]).unwrap();
    let terms = multipartite_decompose(&data, &parts).unwrap();
    let back = io::terms_from_json(&reload(&io::terms_to_json(&terms)), &parts).unwrap();
    assert_eq!(back, terms);
    let oracle = build_dense(&data, 8).unwrap();
    assert!(
        reconstruct(&data, &back, 8)
            .unwrap()
            .rel_error(&oracle)
            .unwrap()
            < 1e-10
    );
}
