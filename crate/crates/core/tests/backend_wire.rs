mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::routing::post;
use axum::{Json, Router};
use base64::Engine;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use texsynth::backend::{
    inpaint_router, mask_at_step, mock_inpaint, BackendError, BackendSpec, InpaintBackend, InpaintRequest,
    MockBackend, RemoteBackend, ServerHandle, WireRequest, WireResponse, PROTOCOL_RESOLUTION,
};
use texsynth::image_buf::encode_rgb8;
use texsynth::{Image, Mask};

use common::{EchoBackend, FailingBackend};

const N: usize = PROTOCOL_RESOLUTION;

/// A valid request whose pixel values already sit on the wire's quantization
/// grid, so decoding reproduces it exactly.
fn request(seed: u64) -> InpaintRequest {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let image = Image::from_vec(N, N, 3, (0..N * N * 3).map(|_| rng.random_range(0..=255u8) as f32 / 255.0).collect())
        .unwrap();
    let depth =
        Image::from_vec(N, N, 1, (0..N * N).map(|_| rng.random_range(0..=65535u16) as f32 / 65535.0).collect())
            .unwrap();
    let (gx, gy, rx) = (rng.random_range(0..N / 2), rng.random_range(0..N), rng.random_range(N / 2..N));
    let generate = Mask::from_fn(N, N, |x, y| x >= gx && x < gx + 100 && y >= gy / 2 && y < gy / 2 + 200);
    let refine = Mask::from_fn(N, N, |x, y| x >= rx && (x + y) % 3 == 0 && !generate.get(x, y));
    InpaintRequest {
        image_masked: image,
        generate_mask: generate,
        refine_mask: refine,
        depth,
        prompt: format!("a teapot #{seed}"),
        negative_prompt: "blurry".into(),
        seed: rng.random(),
        steps: rng.random_range(1..60),
        refine_strength: rng.random_range(0.0..=1.0),
    }
}

fn rect_mask(x0: usize, y0: usize, x1: usize, y1: usize) -> Mask {
    Mask::from_fn(N, N, |x, y| x >= x0 && x < x1 && y >= y0 && y < y1)
}

// Schedule

#[test]
fn schedule_boundary_at_default_strength() {
    let generate = rect_mask(0, 0, 10, 10);
    let refine = rect_mask(20, 20, 30, 30);
    let union = generate.union(&refine);
    for i in 0..20 {
        let m = mask_at_step(i, 20, 0.4, &generate, &refine);
        if i <= 12 {
            assert_eq!(m, generate, "step {i}");
        } else {
            assert_eq!(m, union, "step {i}");
        }
    }
}

#[test]
fn zero_strength_never_refines() {
    let generate = rect_mask(0, 0, 10, 10);
    let refine = rect_mask(20, 20, 30, 30);
    for steps in [1, 7, 20, 50] {
        for i in 0..steps {
            assert_eq!(mask_at_step(i, steps, 0.0, &generate, &refine), generate);
        }
    }
}

// Mock backend

#[test]
fn mock_with_empty_masks_is_identity() {
    let mut r = request(1);
    r.generate_mask = Mask::new(N, N);
    r.refine_mask = Mask::new(N, N);
    let out = mock_inpaint(&r);
    assert_eq!(out.image, r.image_masked);
}

#[test]
fn mock_is_deterministic_and_local() {
    let r = request(2);
    let a = MockBackend.inpaint(&r).unwrap();
    let b = MockBackend.inpaint(&r).unwrap();
    assert_eq!(encode_rgb8(&a.image).unwrap(), encode_rgb8(&b.image).unwrap());
    assert_eq!(a, b);

    let mut other = r.clone();
    other.seed ^= 0x5555;
    let c = MockBackend.inpaint(&other).unwrap();
    let (mut differ, mut total) = (0, 0);
    for p in 0..N * N {
        if r.generate_mask.at(p) {
            total += 1;
            if a.image.at(p) != c.image.at(p) {
                differ += 1;
            }
        } else if !r.refine_mask.at(p) {
            assert_eq!(a.image.at(p), c.image.at(p));
            assert_eq!(a.image.at(p), r.image_masked.at(p));
        }
    }
    assert!(differ * 2 > total, "{differ} of {total} generate pixels changed");
}

#[test]
fn mock_rejects_invalid_requests() {
    let mut r = request(3);
    r.refine_mask = r.generate_mask.clone();
    assert!(matches!(MockBackend.inpaint(&r), Err(BackendError::InvalidRequest(_))));
    let mut r = request(3);
    r.refine_strength = 1.5;
    assert!(matches!(MockBackend.inpaint(&r), Err(BackendError::InvalidRequest(_))));
    let mut r = request(3);
    r.depth = Image::new(256, 256, 1);
    assert!(matches!(MockBackend.inpaint(&r), Err(BackendError::InvalidRequest(_))));
}

// Wire format

#[test]
fn wire_field_names_and_encodings() {
    let r = request(4);
    let json = serde_json::to_value(WireRequest::encode(&r).unwrap()).unwrap();
    let keys: std::collections::BTreeSet<&str> = json.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    let expected = [
        "depth",
        "generate_mask",
        "image_masked",
        "negative_prompt",
        "prompt",
        "refine_mask",
        "refine_strength",
        "seed",
        "steps",
    ];
    assert_eq!(keys, expected.into_iter().collect());
    assert!(json["refine_strength"].is_f64());

    let png = |field: &str| {
        let bytes = base64::engine::general_purpose::STANDARD.decode(json[field].as_str().unwrap()).unwrap();
        image::load_from_memory_with_format(&bytes, image::ImageFormat::Png).unwrap()
    };
    assert_eq!(png("image_masked").color(), image::ColorType::Rgb8);
    assert_eq!(png("depth").color(), image::ColorType::L16);
    let mask = png("generate_mask");
    assert_eq!(mask.color(), image::ColorType::L8);
    assert!(mask.to_luma8().pixels().all(|p| p.0[0] == 0 || p.0[0] == 255));
    assert_eq!((mask.width() as usize, mask.height() as usize), (N, N));
}

#[test]
fn wrong_size_response_is_a_protocol_error() {
    let small = WireResponse {
        image: base64::engine::general_purpose::STANDARD.encode(encode_rgb8(&Image::new(256, 256, 3)).unwrap()),
        backend_id: "x".into(),
        elapsed_ms: 0,
    };
    assert!(matches!(small.decode(), Err(BackendError::Protocol(_))));
    let garbage = WireResponse { image: "%%%".into(), backend_id: "x".into(), elapsed_ms: 0 };
    assert!(matches!(garbage.decode(), Err(BackendError::Protocol(_))));
}

// Remote backend over loopback

#[test]
fn remote_echo_round_trip() {
    let server = ServerHandle::spawn(inpaint_router(Arc::new(EchoBackend))).unwrap();
    let remote = RemoteBackend::new(&server.url());
    assert!(remote.url().ends_with("/inpaint"));
    let r = request(5);
    let out = remote.inpaint(&r).unwrap();
    assert_eq!(out.image, r.image_masked);
    assert_eq!(out.backend_id, "echo");
    assert_eq!(out.elapsed_ms, 1);
}

#[test]
fn remote_mock_matches_local_mock() {
    let server = ServerHandle::spawn(inpaint_router(MockBackend::shared())).unwrap();
    let r = request(6);
    let remote = RemoteBackend::new(&format!("{}/inpaint", server.url())).inpaint(&r).unwrap();
    assert_eq!(remote, mock_inpaint(&r));
}

#[test]
fn unreachable_port() {
    let port = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let start = Instant::now();
    let remote = RemoteBackend::new(&format!("http://127.0.0.1:{port}")).with_timeout(Duration::from_secs(5));
    let err = remote.inpaint(&request(7)).unwrap_err();
    assert!(matches!(err, BackendError::Unreachable(_)), "{err}");
    assert!(start.elapsed() < Duration::from_secs(5));
}

#[test]
fn small_image_from_server_is_rejected() {
    let router = Router::new().route(
        "/inpaint",
        post(|| async {
            let img = encode_rgb8(&Image::new(256, 256, 3)).unwrap();
            Json(WireResponse {
                image: base64::engine::general_purpose::STANDARD.encode(img),
                backend_id: "tiny".into(),
                elapsed_ms: 3,
            })
        }),
    );
    let server = ServerHandle::spawn(router).unwrap();
    let err = RemoteBackend::new(&server.url()).inpaint(&request(8)).unwrap_err();
    assert!(matches!(err, BackendError::Protocol(_)), "{err}");
}

#[test]
fn remote_failure_carries_the_message() {
    let server = ServerHandle::spawn(inpaint_router(Arc::new(FailingBackend::new(0)))).unwrap();
    let err = RemoteBackend::new(&server.url()).inpaint(&request(9)).unwrap_err();
    match err {
        BackendError::Remote(msg) => assert!(msg.contains("502") && msg.contains("injected failure"), "{msg}"),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn slow_server_times_out() {
    let router = Router::new().route(
        "/inpaint",
        post(|| async {
            tokio::time::sleep(Duration::from_secs(5)).await;
            "late"
        }),
    );
    let server = ServerHandle::spawn(router).unwrap();
    let start = Instant::now();
    let remote = RemoteBackend::new(&server.url()).with_timeout(Duration::from_millis(300));
    let err = remote.inpaint(&request(10)).unwrap_err();
    assert!(matches!(err, BackendError::Timeout(_)), "{err}");
    assert!(start.elapsed() < Duration::from_secs(3));
}

#[test]
fn inpaint_endpoint_rejects_bad_payloads() {
    let server = ServerHandle::spawn(inpaint_router(MockBackend::shared())).unwrap();
    let client = reqwest::blocking::Client::new();
    let url = format!("{}/inpaint", server.url());
    let resp = client.post(&url).body("{not json").header("content-type", "application/json").send().unwrap();
    assert_eq!(resp.status().as_u16(), 422);
    let body: serde_json::Value = resp.json().unwrap();
    assert!(body["error"].is_string());

    let mut wire = WireRequest::encode(&request(11)).unwrap();
    wire.depth = base64::engine::general_purpose::STANDARD.encode(encode_rgb8(&Image::new(64, 64, 3)).unwrap());
    let resp = client.post(&url).json(&wire).send().unwrap();
    assert_eq!(resp.status().as_u16(), 422);
}

#[test]
fn backend_spec_parsing() {
    assert_eq!(BackendSpec::parse("mock").unwrap(), BackendSpec::Mock);
    assert_eq!(BackendSpec::parse("http://h:1").unwrap(), BackendSpec::Remote("http://h:1".into()));
    assert!(BackendSpec::parse("ftp://h").is_err());
    assert_eq!(BackendSpec::Mock.build().id(), "mock");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn wire_request_round_trips(seed in any::<u64>()) {
        let r = request(seed);
        let wire = WireRequest::encode(&r).unwrap();
        let text = serde_json::to_string(&wire).unwrap();
        let parsed: WireRequest = serde_json::from_str(&text).unwrap();
        let decoded = parsed.decode().unwrap();
        prop_assert_eq!(&decoded, &r);
        prop_assert_eq!(WireRequest::encode(&decoded).unwrap(), wire);
    }

    #[test]
    fn mock_leaves_unmasked_pixels_alone(seed in any::<u64>()) {
        let r = request(seed);
        let out = mock_inpaint(&r);
        for p in 0..N * N {
            if !r.generate_mask.at(p) && !r.refine_mask.at(p) {
                prop_assert_eq!(out.image.at(p), r.image_masked.at(p));
            }
        }
        prop_assert!(out.image.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

proptest! {
    #[test]
    fn schedule_is_monotone_and_bounded(
        steps in 1usize..100, alpha in 0.0f64..=1.0, seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = 16;
        let generate = Mask::from_fn(w, w, |_, _| rng.random_bool(0.3));
        let refine = Mask::from_fn(w, w, |x, y| !generate.get(x, y) && (x * 7 + y * 3) % 4 == 0);
        let union = generate.union(&refine);
        let mut prev = mask_at_step(0, steps, alpha, &generate, &refine);
        for i in 0..steps {
            let m = mask_at_step(i, steps, alpha, &generate, &refine);
            prop_assert!(prev.is_subset_of(&m));
            prop_assert!(m.is_subset_of(&union));
            prop_assert!(generate.is_subset_of(&m));
            let expect_union = (i as f64) > (1.0 - alpha) * steps as f64;
            prop_assert_eq!(m == union, expect_union || refine.is_empty());
            prev = m;
        }
    }
}
