//! Shared helpers for the integration tests.
#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};

use texsynth::backend::{mock_inpaint, BackendError, InpaintBackend, InpaintRequest, InpaintResponse};
use texsynth::service::{Session, SynthesisConfig};
use texsynth::{fixtures, Mesh};

/// Small, fast configuration for tests that do not need default-scale numbers.
pub fn small_config() -> SynthesisConfig {
    SynthesisConfig { view_resolution: 128, texture_resolution: 128, mip_levels: 3, ..SynthesisConfig::default() }
}

pub fn sphere() -> Mesh {
    fixtures::uv_sphere(16, 32)
}

pub fn small_session() -> Session {
    Session::new(sphere(), small_config(), Arc::new(CountingMock::default())).unwrap()
}

/// The mock backend, counting calls.
#[derive(Default)]
pub struct CountingMock {
    pub calls: AtomicUsize,
}

impl InpaintBackend for CountingMock {
    fn id(&self) -> String {
        "counting-mock".into()
    }

    fn inpaint(&self, request: &InpaintRequest) -> Result<InpaintResponse, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        request.validate()?;
        Ok(mock_inpaint(request))
    }
}

/// Fails every call after the first `ok_calls` successes.
pub struct FailingBackend {
    pub ok_calls: usize,
    pub calls: AtomicUsize,
}

impl FailingBackend {
    pub fn new(ok_calls: usize) -> Self {
        Self { ok_calls, calls: AtomicUsize::new(0) }
    }
}

impl InpaintBackend for FailingBackend {
    fn id(&self) -> String {
        "failing".into()
    }

    fn inpaint(&self, request: &InpaintRequest) -> Result<InpaintResponse, BackendError> {
        if self.calls.fetch_add(1, Ordering::SeqCst) >= self.ok_calls {
            return Err(BackendError::Remote("injected failure".into()));
        }
        Ok(mock_inpaint(request))
    }
}

/// Returns the request image unchanged.
pub struct EchoBackend;

impl InpaintBackend for EchoBackend {
    fn id(&self) -> String {
        "echo".into()
    }

    fn inpaint(&self, request: &InpaintRequest) -> Result<InpaintResponse, BackendError> {
        Ok(InpaintResponse { image: request.image_masked.clone(), backend_id: self.id(), elapsed_ms: 1 })
    }
}

/// Blocks inside `inpaint` until released, so tests can observe a busy
/// session.
#[derive(Default)]
pub struct GateBackend {
    state: Mutex<(bool, bool)>,
    cv: Condvar,
}

impl GateBackend {
    /// Waits until a call is blocked inside the backend.
    pub fn wait_entered(&self) {
        let mut s = self.state.lock().unwrap();
        while !s.0 {
            s = self.cv.wait(s).unwrap();
        }
    }

    pub fn release(&self) {
        self.state.lock().unwrap().1 = true;
        self.cv.notify_all();
    }
}

impl InpaintBackend for GateBackend {
    fn id(&self) -> String {
        "gate".into()
    }

    fn inpaint(&self, request: &InpaintRequest) -> Result<InpaintResponse, BackendError> {
        let mut s = self.state.lock().unwrap();
        s.0 = true;
        self.cv.notify_all();
        while !s.1 {
            s = self.cv.wait(s).unwrap();
        }
        Ok(mock_inpaint(request))
    }
}
