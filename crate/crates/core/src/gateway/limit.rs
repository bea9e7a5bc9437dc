use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use super::{ChatBackend, ChatRequest, ChatResponse, GatewayError};

/// Caps in-flight requests and spaces out request starts.
pub struct RateLimited<B> {
    inner: B,
    max_in_flight: usize,
    min_interval: Duration,
    in_flight: Mutex<usize>,
    freed: Condvar,
    next_start: Mutex<Option<Instant>>,
}

impl<B: ChatBackend> RateLimited<B> {
    pub fn new(inner: B, max_in_flight: usize, min_interval: Duration) -> Self {
        RateLimited {
            inner,
            max_in_flight: max_in_flight.max(1),
            min_interval,
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
            next_start: Mutex::new(None),
        }
    }

    fn wait_turn(&self) {
        if self.min_interval.is_zero() {
            return;
        }
        let wait = {
            let mut next = self.next_start.lock().expect("rate lock");
            let now = Instant::now();
            let start = next.map_or(now, |t| t.max(now));
            *next = Some(start + self.min_interval);
            start - now
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

struct Slot<'a> {
    count: &'a Mutex<usize>,
    freed: &'a Condvar,
}

impl Drop for Slot<'_> {
    fn drop(&mut self) {
        *self.count.lock().expect("slot lock") -= 1;
        self.freed.notify_one();
    }
}

impl<B: ChatBackend> ChatBackend for RateLimited<B> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let mut count = self.in_flight.lock().expect("slot lock");
        while *count >= self.max_in_flight {
            count = self.freed.wait(count).expect("slot lock");
        }
        *count += 1;
        drop(count);
        let _slot = Slot {
            count: &self.in_flight,
            freed: &self.freed,
        };
        self.wait_turn();
        self.inner.complete(request)
    }
}
