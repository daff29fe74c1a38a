use proptest::prelude::*;
use stensor::io::{
    decode_pgm, encode_pgm, read_pgm, responses_from_raw, responses_to_raw, scalar_from_raw, scalar_to_raw,
    tensor_from_raw, tensor_to_raw, RawRaster,
};
use stensor::synth::add_noise;
use stensor::tensor::{gradient_tensor, point_responses, tensor_gk, GradientOptions};
use stensor::tessellation::icosa6;
use stensor::{FrameCoefficients, ScalarField, TensorField};

fn f32_exact(tf: &TensorField) -> TensorField {
    let planes = tf
        .planes()
        .iter()
        .map(|p| p.iter().map(|&v| v as f32 as f64).collect())
        .collect();
    TensorField::new(tf.shape().clone(), tf.tensor_dim(), planes, tf.construction()).unwrap()
}

#[test]
fn tensor_round_trip_is_bitwise_on_f32_values() {
    let f = add_noise(&ScalarField::zeros(&[12, 10]).unwrap(), 1.0, 9).unwrap();
    let tf = f32_exact(&gradient_tensor(&f, 1.0, 2.0, GradientOptions::default()).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.raw");
    tensor_to_raw(&tf).unwrap().write(&path).unwrap();
    let back = tensor_from_raw(&RawRaster::read(&path).unwrap()).unwrap();
    assert_eq!(back.construction(), tf.construction());
    assert_eq!(back.tensor_dim(), 2);
    for (a, b) in tf.planes().iter().zip(back.planes()) {
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
    let bytes = tensor_to_raw(&tf).unwrap().encode();
    assert_eq!(bytes, tensor_to_raw(&back).unwrap().encode());
}

#[test]
fn three_d_tensor_and_responses_round_trip() {
    let q = point_responses(&[1.0, 0.5, 0.25, 0.0, 2.0, 0.125]).unwrap();
    let tf = tensor_gk(&q, &icosa6(), FrameCoefficients::ICOSA6).unwrap();
    let back = tensor_from_raw(&tensor_to_raw(&tf).unwrap()).unwrap();
    assert_eq!(back.tensor_dim(), 3);
    assert_eq!(back.planes().len(), 6);

    let raw = responses_to_raw(&q, "responses").unwrap();
    let q2 = responses_from_raw(&RawRaster::decode(&raw.encode()).unwrap()).unwrap();
    assert_eq!(q2.len(), 6);
    for (a, b) in q.iter().zip(&q2) {
        assert_eq!(a.values(), b.values());
    }
}

#[test]
fn scalar_round_trip() {
    let f = ScalarField::from_fn(&[5, 4, 6], false, |c| c[0] as f64 - 0.5 * c[2] as f64).unwrap();
    let back = scalar_from_raw(&RawRaster::decode(&scalar_to_raw(&f).unwrap().encode()).unwrap()).unwrap();
    assert_eq!(back.dims(), f.dims());
    assert_eq!(back.values(), f.values());
}

#[test]
fn pgm_round_trip_within_quantisation() {
    let f = ScalarField::from_fn(&[17, 9], false, |c| ((c[0] * 31 + c[1] * 7) % 97) as f64 / 96.0).unwrap();
    for maxval in [255u16, 65535] {
        let img = decode_pgm(&encode_pgm(&f, maxval).unwrap()).unwrap();
        assert_eq!(img.maxval, maxval);
        let g = img.into_field().unwrap();
        assert_eq!(g.dims(), f.dims());
        for (a, b) in f.values().iter().zip(g.values()) {
            assert!((a - b).abs() <= 0.5 / maxval as f64 + 1e-15);
        }
    }
}

#[test]
fn pgm_with_comments_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.pgm");
    let mut bytes = b"P5\n# made by hand\n4 4\n# depth\n255\n".to_vec();
    bytes.extend((0..16).map(|i| (i * 17) as u8));
    std::fs::write(&path, &bytes).unwrap();
    let img = read_pgm(&path).unwrap();
    assert_eq!((img.width, img.height), (4, 4));
    assert_eq!(img.values[15], 1.0);
}

proptest! {
    #[test]
    fn truncated_raw_never_panics(cut in 0usize..200, seed in any::<u64>()) {
        let f = add_noise(&ScalarField::zeros(&[4, 4]).unwrap(), 1.0, seed).unwrap();
        let bytes = scalar_to_raw(&f).unwrap().encode();
        let cut = cut.min(bytes.len());
        let r = RawRaster::decode(&bytes[..cut]);
        prop_assert_eq!(r.is_ok(), cut == bytes.len());
    }

    #[test]
    fn mutated_raw_never_panics(pos in 0usize..64, byte in any::<u8>()) {
        let f = ScalarField::constant(&[4, 4], 1.0).unwrap();
        let mut bytes = scalar_to_raw(&f).unwrap().encode();
        let pos = pos % bytes.len();
        bytes[pos] = byte;
        let _ = RawRaster::decode(&bytes);
        let _ = decode_pgm(&bytes);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..128)) {
        let _ = RawRaster::decode(&bytes);
        let _ = decode_pgm(&bytes);
        let mut pgm = b"P5 4 4 255 ".to_vec();
        pgm.extend(&bytes);
        let r = decode_pgm(&pgm);
        prop_assert_eq!(r.is_ok(), bytes.len() >= 16);
    }
}
